//! Word-packed GF(2) vectors and matrices.

pub mod elim;
pub mod gray;
pub mod matrix;
pub mod mul;
pub mod vector;

pub use elim::{
    inverse, kernel_basis, random_invertible, rank, rank_consuming, row_reduce_with_transcript, solve_affine,
    AffineSolution, Dependency, EliminationTranscript,
};
pub use gray::{gray, gray_combination_table, GrayTable};
pub use matrix::BitMatrix;
pub use mul::{mat_mul, mat_mul_four_russians, MulStrategy};
pub use vector::BitVector;
