//! Fixtures shared by the benchmarks.

use olivier::protocol::{encapsulate, CipherBatch, SessionConfig};
use olivier::{keygen, OvShape, Params, PrivateKey, QuadraticSystem};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// A key and a fresh batch for `params`.
pub fn session(params: Params, cfg: &SessionConfig, seed: u64) -> (PrivateKey, CipherBatch) {
    let mut g = rng(seed);
    let (pk, sk) = keygen(params, &mut g).expect("valid params");
    let (batch, _) = encapsulate(&pk, cfg, &mut g).expect("valid config");
    (sk, batch)
}

/// `e` OV equations stacked on `u` fully quadratic ones.
pub fn mixed_system(n: usize, v: usize, e: usize, u: usize, seed: u64) -> QuadraticSystem {
    let mut g = rng(seed);
    let ov = QuadraticSystem::random_ov(OvShape::new(n, v).expect("v < n"), e, &mut g);
    if u == 0 {
        return ov;
    }
    ov.stack(&QuadraticSystem::random(n, u, &mut g)).expect("same n")
}
