pub mod error;
pub mod f2;

pub use error::{Error, Result};
pub use f2::{BitMatrix, BitVector};
pub mod quad;

pub use quad::{vanishes_on_subspace, OvShape, QuadraticPoly, QuadraticSystem};
pub mod hash;
pub mod keys;

pub use keys::{keygen, public_evaluate, Params, PrivateKey, PublicKey};
pub mod protocol;
pub mod analysis;
pub mod attacks;
pub mod codec;
