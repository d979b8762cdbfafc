//! Gaussian elimination over GF(2): rank, kernels, affine solving, inverses,
//! and the row-dependency transcript consumed by the guessing decapsulation.
//!
//! Pivoting is deterministic everywhere: columns are scanned left to right and
//! the pivot for a column is the topmost remaining row holding a one there.

use rand::RngCore;

use super::matrix::BitMatrix;
use super::vector::{xor_words, BitVector};
use crate::error::{ensure_dim, Result};

/// Row echelon form in place (rows below each pivot cleared). Returns the
/// pivot columns in order; `len()` is the rank.
fn echelon_in_place(m: &mut BitMatrix) -> Vec<usize> {
    let rows = m.rows();
    let mut pivots = Vec::new();
    let mut rank = 0;
    for c in 0..m.cols() {
        if rank == rows {
            break;
        }
        let (wc, bit) = (c / 64, 1u64 << (c % 64));
        let Some(p) = (rank..rows).find(|&r| m.row_words(r)[wc] & bit != 0) else {
            continue;
        };
        m.swap_rows(rank, p);
        let stride = m.stride();
        let (head, tail) = split_rows(m, rank, stride);
        let pivot = &head[wc..];
        for chunk in tail.chunks_exact_mut(stride) {
            if chunk[wc] & bit != 0 {
                xor_words(&mut chunk[wc..], pivot);
            }
        }
        pivots.push(c);
        rank += 1;
    }
    pivots
}

/// Splits the storage into the pivot row and every row after it.
fn split_rows(m: &mut BitMatrix, pivot: usize, stride: usize) -> (&[u64], &mut [u64]) {
    let (lo, hi) = m.data_mut().split_at_mut((pivot + 1) * stride);
    (&lo[pivot * stride..], hi)
}

/// Reduced row echelon form, applying every row operation to `companion` too
/// (which must have the same number of rows). Returns pivot columns.
fn rref_tracked(m: &mut BitMatrix, mut companion: Option<&mut BitMatrix>) -> Vec<usize> {
    let rows = m.rows();
    let mut pivots = Vec::new();
    let mut rank = 0;
    for c in 0..m.cols() {
        if rank == rows {
            break;
        }
        let Some(p) = (rank..rows).find(|&r| m.get(r, c)) else {
            continue;
        };
        m.swap_rows(rank, p);
        if let Some(comp) = companion.as_deref_mut() {
            comp.swap_rows(rank, p);
        }
        for r in 0..rows {
            if r != rank && m.get(r, c) {
                m.xor_row_into(rank, r);
                if let Some(comp) = companion.as_deref_mut() {
                    comp.xor_row_into(rank, r);
                }
            }
        }
        pivots.push(c);
        rank += 1;
    }
    pivots
}

/// GF(2) rank. The input is not modified.
pub fn rank(m: &BitMatrix) -> usize {
    let mut work = m.clone();
    echelon_in_place(&mut work).len()
}

/// Rank of a matrix the caller no longer needs; avoids the copy.
pub fn rank_consuming(mut m: BitMatrix) -> usize {
    echelon_in_place(&mut m).len()
}

/// A basis of `{x : M·x = 0}`, one vector per free column, ordered by free
/// column index.
pub fn kernel_basis(m: &BitMatrix) -> Vec<BitVector> {
    let mut r = m.clone();
    let pivots = rref_tracked(&mut r, None);
    kernel_from_rref(&r, &pivots)
}

fn kernel_from_rref(r: &BitMatrix, pivots: &[usize]) -> Vec<BitVector> {
    let cols = r.cols();
    let mut is_pivot = vec![false; cols];
    for &p in pivots {
        is_pivot[p] = true;
    }
    (0..cols)
        .filter(|&f| !is_pivot[f])
        .map(|f| {
            let mut v = BitVector::unit(cols, f);
            for (k, &p) in pivots.iter().enumerate() {
                if r.get(k, f) {
                    v.set(p, true);
                }
            }
            v
        })
        .collect()
}

/// Solution set of `M·x = rhs`: one particular solution and a kernel basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineSolution {
    pub particular: BitVector,
    pub kernel: Vec<BitVector>,
}

impl AffineSolution {
    /// Number of solutions is `2^dimension()`.
    pub fn dimension(&self) -> usize {
        self.kernel.len()
    }

    /// The particular solution first, then kernel combinations in Gray-code
    /// order, at most `cap` vectors in total.
    pub fn enumerate(&self, cap: usize) -> impl Iterator<Item = BitVector> + '_ {
        let total = if self.kernel.len() >= 63 {
            u64::MAX
        } else {
            1u64 << self.kernel.len()
        };
        let limit = (cap as u64).min(total);
        let mut current = self.particular.clone();
        let mut i = 0u64;
        std::iter::from_fn(move || {
            if i >= limit {
                return None;
            }
            if i > 0 {
                let bit = i.trailing_zeros() as usize;
                current.xor_assign(&self.kernel[bit]);
            }
            i += 1;
            Some(current.clone())
        })
    }
}

/// Solves `M·x = rhs`; `Ok(None)` when the system is inconsistent.
pub fn solve_affine(m: &BitMatrix, rhs: &BitVector) -> Result<Option<AffineSolution>> {
    ensure_dim("solve_affine rhs", m.rows(), rhs.len())?;
    let mut r = m.clone();
    let mut b = BitMatrix::from_rows(1, &rhs.iter().map(|x| BitVector::from_bools(&[x])).collect::<Vec<_>>())?;
    let pivots = rref_tracked(&mut r, Some(&mut b));
    if (pivots.len()..m.rows()).any(|k| b.get(k, 0)) {
        return Ok(None);
    }
    let mut particular = BitVector::zeros(m.cols());
    for (k, &p) in pivots.iter().enumerate() {
        if b.get(k, 0) {
            particular.set(p, true);
        }
    }
    Ok(Some(AffineSolution {
        particular,
        kernel: kernel_from_rref(&r, &pivots),
    }))
}

/// Inverse of a square matrix, or `None` when singular.
pub fn inverse(m: &BitMatrix) -> Option<BitMatrix> {
    if m.rows() != m.cols() {
        return None;
    }
    let n = m.rows();
    let mut r = m.clone();
    let mut inv = BitMatrix::identity(n);
    let pivots = rref_tracked(&mut r, Some(&mut inv));
    (pivots.len() == n).then_some(inv)
}

/// Draws uniformly random `n×n` matrices until one is invertible. Returns the
/// matrix and its inverse.
pub fn random_invertible<R: RngCore + ?Sized>(n: usize, rng: &mut R) -> (BitMatrix, BitMatrix) {
    assert!(n >= 1, "random_invertible needs n >= 1");
    loop {
        let m = BitMatrix::random(n, n, rng);
        if let Some(inv) = inverse(&m) {
            return (m, inv);
        }
    }
}

/// How a non-pivot row decomposes over the pivot rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dependency {
    /// Index of the dependent row.
    pub row: usize,
    /// Bit `j` set iff pivot row `j` (an original row index) takes part.
    pub combination: BitVector,
}

/// Result of scanning the rows of a matrix top-down and recording, for every
/// row that adds nothing new, the pivot rows it is a sum of.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EliminationTranscript {
    pub pivot_rows: Vec<usize>,
    pub dependencies: Vec<Dependency>,
    pub rank: usize,
}

impl EliminationTranscript {
    /// Rebuilds a dependent row from the pivot rows of `m`.
    pub fn reconstruct(&self, m: &BitMatrix, dep: &Dependency) -> BitVector {
        m.vec_mul(&dep.combination).expect("combination spans the rows of m")
    }
}

/// Incremental elimination state: each stored row has its lowest set bit at a
/// distinct pivot column and carries the original rows it was built from.
pub(crate) struct TranscriptBuilder {
    cols: usize,
    rows: usize,
    pivot_of_col: Vec<u32>,
    reduced: Vec<u64>,
    combos: Vec<u64>,
    rstride: usize,
    cstride: usize,
    count: usize,
}

const NO_PIVOT: u32 = u32::MAX;

impl TranscriptBuilder {
    pub(crate) fn new(rows: usize, cols: usize) -> Self {
        let rstride = cols.div_ceil(64);
        let cstride = rows.div_ceil(64);
        let cap = rows.min(cols);
        Self {
            cols,
            rows,
            pivot_of_col: vec![NO_PIVOT; cols],
            reduced: vec![0; cap * rstride],
            combos: vec![0; cap * cstride],
            rstride,
            cstride,
            count: 0,
        }
    }

    /// Feeds row `index` (packed words of width `cols`). Returns `None` when it
    /// became a pivot, or the packed combination (width `rows`) when dependent.
    pub(crate) fn push(&mut self, index: usize, row: &[u64]) -> Option<Vec<u64>> {
        let mut r = row.to_vec();
        let mut combo = vec![0u64; self.cstride];
        loop {
            let Some(low) = r
                .iter()
                .enumerate()
                .find(|(_, &w)| w != 0)
                .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
            else {
                return Some(combo);
            };
            let k = self.pivot_of_col[low];
            if k == NO_PIVOT {
                let k = self.count;
                self.count += 1;
                self.pivot_of_col[low] = k as u32;
                self.reduced[k * self.rstride..(k + 1) * self.rstride].copy_from_slice(&r);
                combo[index / 64] ^= 1u64 << (index % 64);
                self.combos[k * self.cstride..(k + 1) * self.cstride].copy_from_slice(&combo);
                return None;
            }
            let k = k as usize;
            let w0 = low / 64;
            xor_words(&mut r[w0..], &self.reduced[k * self.rstride + w0..(k + 1) * self.rstride]);
            xor_words(&mut combo, &self.combos[k * self.cstride..(k + 1) * self.cstride]);
        }
    }

    pub(crate) fn rows(&self) -> usize {
        self.rows
    }

    #[allow(dead_code)]
    pub(crate) fn cols(&self) -> usize {
        self.cols
    }
}

/// Scans rows top-down; a row becomes a pivot iff it is independent of the
/// rows above it. Every other row is recorded with its combination.
pub fn row_reduce_with_transcript(m: &BitMatrix) -> EliminationTranscript {
    let mut builder = TranscriptBuilder::new(m.rows(), m.cols());
    let mut pivot_rows = Vec::new();
    let mut dependencies = Vec::new();
    for i in 0..m.rows() {
        match builder.push(i, m.row_words(i)) {
            None => pivot_rows.push(i),
            Some(combo) => dependencies.push(Dependency {
                row: i,
                combination: BitVector::from_words(builder.rows(), combo),
            }),
        }
    }
    let rank = pivot_rows.len();
    EliminationTranscript {
        pivot_rows,
        dependencies,
        rank,
    }
}
