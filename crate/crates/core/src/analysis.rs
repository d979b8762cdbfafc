//! Degree-fall bookkeeping for OV-type systems in `F2[x]/(x_i²)`.
//!
//! `η^k_h` counts squarefree degree-`h` monomials with at most `k` oil
//! variables. `σ^d_i` compares the space spanned by OV equations times
//! monomials with at most `i+1` oil variables against the trivial syzygies it
//! must absorb; a negative entry predicts a degree fall at `d`. `σ̃` adds the
//! corrections for `u` fully quadratic equations mixed in.
//!
//! The brute-force side builds Macaulay matrices of homogeneous quadratic
//! parts and measures their rank directly.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::f2::{rank_consuming, BitMatrix};
use crate::quad::QuadraticSystem;

/// Default cap on the packed Macaulay matrix: 2 GiB.
pub const DEFAULT_MACAULAY_BUDGET: u128 = 2 << 30;

pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

fn binom_i(n: i64, k: i64) -> BigInt {
    if n < 0 || k < 0 {
        return BigInt::zero();
    }
    binomial(n as u64, k as u64)
}

/// `Σ_{j=0}^{min(k,h)} C(n−v, j)·C(v, h−j)`; zero for `h < 0` or `k < 0`.
pub fn eta(k: i64, h: i64, n: u64, v: u64) -> BigInt {
    if h < 0 || k < 0 {
        return BigInt::zero();
    }
    let o = (n - v) as i64;
    (0..=k.min(h))
        .map(|j| binom_i(o, j) * binom_i(v as i64, h - j))
        .sum()
}

fn sign(j: i64) -> i32 {
    if j % 2 == 0 {
        1
    } else {
        -1
    }
}

/// `σ^d_i = η^{i+1}_d − Σ_{j=0}^{i} (−1)^j η^{i−j}_{d−2j−2} C(e+j, j+1)`.
pub fn sigma(d: i64, i: i64, n: u64, v: u64, e: u64) -> BigInt {
    let mut s = eta(i + 1, d, n, v);
    for j in 0..=i {
        let term = eta(i - j, d - 2 * j - 2, n, v) * binom_i(e as i64 + j, j + 1);
        s -= term * sign(j);
    }
    s
}

/// `σ^d_i` corrected for `u` fully quadratic equations.
pub fn sigma_tilde(d: i64, i: i64, n: u64, v: u64, e: u64, u: u64) -> BigInt {
    let (e, u) = (e as i64, u as i64);
    let mut s = sigma(d, i, n, v, e as u64);
    for j in 1..=i {
        let mut corr = BigInt::zero();
        if i + 1 - 2 * j >= 0 {
            corr += eta(i + 1 - 2 * j, d - 2 * j, n, v) * binom_i(u + j - 1, j);
        }
        for k in 1..j {
            let h = j - k;
            if i + 1 - 2 * h - k >= 0 {
                corr += eta(i + 1 - 2 * h - k, d - 2 * j, n, v) * binom_i(u + h - 1, h) * binom_i(e + k - 1, k);
            }
        }
        s += corr * sign(j);
    }
    s
}

/// `n` variables, `v` vinegar, `e` OV equations, `u` fully quadratic ones.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SystemShape {
    pub n: u64,
    pub v: u64,
    pub e: u64,
    pub u: u64,
}

impl SystemShape {
    pub fn new(n: u64, v: u64, e: u64, u: u64) -> Result<Self> {
        if v == 0 || v >= n {
            return Err(Error::InvalidParams(format!("need 1 <= v < n (n={n}, v={v})")));
        }
        Ok(Self { n, v, e, u })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SigmaTable {
    pub shape: SystemShape,
    /// `rows[d − 3][i]` for `3 <= d <= d_max` and `0 <= i < d`.
    pub rows: Vec<Vec<BigInt>>,
    pub first_fall: Option<u32>,
}

impl SigmaTable {
    pub fn d_max(&self) -> u32 {
        self.rows.len() as u32 + 2
    }

    pub fn entry(&self, d: u32, i: u32) -> Option<&BigInt> {
        self.rows.get(d.checked_sub(3)? as usize)?.get(i as usize)
    }

    /// Entries `(d, i, value)` in row-major order.
    pub fn records(&self) -> impl Iterator<Item = (u32, u32, &BigInt)> {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().enumerate().map(move |(i, x)| (r as u32 + 3, i as u32, x)))
    }
}

/// `σ̃` for `3 <= d <= d_max` (equal to `σ` when `u = 0`).
pub fn sigma_table(shape: SystemShape, d_max: u32) -> SigmaTable {
    let SystemShape { n, v, e, u } = shape;
    let rows: Vec<Vec<BigInt>> = (3..=d_max as i64)
        .map(|d| (0..d).map(|i| sigma_tilde(d, i, n, v, e, u)).collect())
        .collect();
    let first_fall = rows
        .iter()
        .position(|row| row.iter().any(|x| x.is_negative()))
        .map(|r| r as u32 + 3);
    SigmaTable { shape, rows, first_fall }
}

/// Truncated power series.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeriesPrefix {
    pub coeffs: Vec<BigInt>,
}

impl SeriesPrefix {
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }
}

/// `[t^k] (1+t)^{−m} = (−1)^k C(m+k−1, k)`.
fn inverse_power_coefficient(m: u64, k: u64) -> BigInt {
    if k == 0 {
        return BigInt::one();
    }
    binomial(m + k - 1, k) * sign(k as i64)
}

fn generic_coefficient(n: u64, m: u64, d: u64) -> BigInt {
    (0..=d / 2)
        .map(|k| binomial(n, d - 2 * k) * inverse_power_coefficient(m, k))
        .sum()
}

/// Coefficients of `(1+t)^n / (1+t²)^m` up to `t^{d_max}`.
pub fn generic_series(n: u64, m: u64, d_max: u32) -> SeriesPrefix {
    SeriesPrefix {
        coeffs: (0..=d_max as u64).map(|d| generic_coefficient(n, m, d)).collect(),
    }
}

/// Least `d` whose generic coefficient is `<= 0`.
pub fn d_reg_generic(n: u64, m: u64) -> u32 {
    (0u64..)
        .find(|&d| !generic_coefficient(n, m, d).is_positive())
        .expect("m >= 1 makes the series non-positive eventually") as u32
}

/// First `d >= 3` with a negative `σ̃^d_i`, or `d_reg(n, e+u)` if none
/// appears before it.
pub fn first_fall_estimate(n: u64, v: u64, e: u64, u: u64) -> u32 {
    let dreg = d_reg_generic(n, e + u);
    (3..=dreg as i64)
        .find(|&d| (0..d).any(|i| sigma_tilde(d, i, n, v, e, u).is_negative()))
        .map_or(dreg, |d| d as u32)
}

/// Lex rank of the sorted subset `c` among `k`-subsets of `0..n`.
struct MonomialIndex {
    n: usize,
    /// `table[j][x] = C(x, j)`, saturating.
    table: Vec<Vec<u64>>,
    total: u64,
}

impl MonomialIndex {
    fn new(n: usize, d: usize) -> Self {
        let mut table = vec![vec![0u64; n + 1]; d + 1];
        for x in 0..=n {
            table[0][x] = 1;
            for j in 1..=d.min(x) {
                table[j][x] = table[j - 1][x - 1].saturating_add(if j < x { table[j][x - 1] } else { 0 });
            }
        }
        let total = table[d][n];
        Self { n, table, total }
    }

    /// `total − 1 − colex({n−1−c})`, which orders subsets lexicographically.
    fn index(&self, sorted: &[usize]) -> usize {
        let k = sorted.len();
        let mut colex = 0;
        for (pos, &c) in sorted.iter().rev().enumerate() {
            colex += self.table[pos + 1][self.n - 1 - c];
        }
        debug_assert!(k < self.table.len());
        (self.total - 1 - colex) as usize
    }
}

/// Visits every sorted `k`-subset of `0..n` in lexicographic order.
fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut c: Vec<usize> = (0..k).collect();
    loop {
        f(&c);
        let Some(pos) = (0..k).rev().find(|&p| c[p] < n - k + p) else {
            return;
        };
        c[pos] += 1;
        for q in pos + 1..k {
            c[q] = c[q - 1] + 1;
        }
    }
}

/// Bytes needed by the packed degree-`d` Macaulay matrix of `sys`.
pub fn macaulay_bytes(sys: &QuadraticSystem, d: u32) -> u128 {
    let n = sys.n() as u64;
    let d = d as u64;
    if d < 2 || d > n {
        return 0;
    }
    let cols = binomial(n, d);
    let rows = binomial(n, d - 2) * sys.len();
    let words = (cols + 63u32) / 64u32;
    let bytes = rows * words * 8u32;
    u128::try_from(bytes).unwrap_or(u128::MAX)
}

/// GF(2) rank of the degree-`d` Macaulay matrix of the homogeneous quadratic
/// parts of `sys` in `F2[x]/(x_i²)`; rows are `quad(f) · μ` for every
/// equation `f` and squarefree `μ` of degree `d − 2`, columns are squarefree
/// degree-`d` monomials in lexicographic order.
pub fn macaulay_rank(sys: &QuadraticSystem, d: u32) -> Result<u64> {
    macaulay_rank_with_budget(sys, d, DEFAULT_MACAULAY_BUDGET)
}

pub fn macaulay_rank_with_budget(sys: &QuadraticSystem, d: u32, budget: u128) -> Result<u64> {
    if d < 2 {
        return Err(Error::InvalidParams(format!("Macaulay degree {d} < 2")));
    }
    let n = sys.n();
    let d = d as usize;
    if d > n || sys.is_empty() {
        return Ok(0);
    }
    let needed = macaulay_bytes(sys, d as u32);
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let idx = MonomialIndex::new(n, d);
    let cols = idx.total as usize;
    let pairs: Vec<Vec<(usize, usize)>> = sys
        .polys()
        .iter()
        .map(|p| {
            let mut out = Vec::new();
            for i in 0..n {
                for j in p.quad().row(i).iter_ones() {
                    out.push((i, j));
                }
            }
            out
        })
        .collect();
    let mut multipliers = Vec::new();
    for_each_subset(n, d - 2, |mu| multipliers.push(mu.to_vec()));
    let mut m = BitMatrix::zeros(pairs.len() * multipliers.len(), cols);
    let mut row = 0;
    let mut in_mu = vec![false; n];
    let mut mono = Vec::with_capacity(d);
    for p in &pairs {
        for mu in &multipliers {
            mu.iter().for_each(|&x| in_mu[x] = true);
            for &(i, j) in p {
                if in_mu[i] || in_mu[j] {
                    continue;
                }
                mono.clear();
                mono.extend_from_slice(mu);
                mono.push(i);
                mono.push(j);
                mono.sort_unstable();
                m.flip(row, idx.index(&mono));
            }
            mu.iter().for_each(|&x| in_mu[x] = false);
            row += 1;
        }
    }
    Ok(rank_consuming(m) as u64)
}

/// `1, n, C(n,2) − rank_2, …, C(n,d_max) − rank_{d_max}`.
pub fn hilbert_prefix_bruteforce(sys: &QuadraticSystem, d_max: u32) -> Result<SeriesPrefix> {
    hilbert_prefix_with_budget(sys, d_max, DEFAULT_MACAULAY_BUDGET)
}

pub fn hilbert_prefix_with_budget(sys: &QuadraticSystem, d_max: u32, budget: u128) -> Result<SeriesPrefix> {
    let n = sys.n() as u64;
    let mut coeffs = Vec::new();
    for d in 0..=d_max {
        let c = if d < 2 {
            binomial(n, d as u64)
        } else {
            binomial(n, d as u64) - BigInt::from(macaulay_rank_with_budget(sys, d, budget)?)
        };
        coeffs.push(c);
    }
    Ok(SeriesPrefix { coeffs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{OvShape, QuadraticPoly};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    /// Direct count over all squarefree monomials.
    fn eta_bruteforce(k: usize, h: usize, n: usize, v: usize) -> u64 {
        let mut count = 0;
        for_each_subset(n, h, |c| {
            if c.iter().filter(|&&x| x >= v).count() <= k {
                count += 1;
            }
        });
        count
    }

    #[test]
    fn eta_examples() {
        assert_eq!(eta(0, 1, 20, 9), BigInt::from(9));
        assert_eq!(eta(1, 3, 20, 9), BigInt::from(480));
        assert_eq!(eta_bruteforce(1, 3, 20, 9), 480);
        assert_eq!(eta(5, 0, 20, 9), BigInt::one());
        assert_eq!(eta(3, -1, 20, 9), BigInt::zero());
        for h in 0..=6 {
            for k in 0..=6 {
                assert_eq!(eta(k as i64, h as i64, 14, 5), BigInt::from(eta_bruteforce(k, h, 14, 5)));
            }
            assert_eq!(eta(h as i64, h as i64, 14, 5), binomial(14, h as u64));
        }
    }

    #[test]
    fn sigma_tables() {
        let t1 = sigma_table(SystemShape::new(20, 9, 25, 0).unwrap(), 4);
        assert_eq!(t1.rows, vec![ints(&[255, 475, 640]), ints(&[150, -20, 90, 420])]);
        assert_eq!(t1.first_fall, Some(4));
        let t2 = sigma_table(SystemShape::new(24, 6, 24, 0).unwrap(), 4);
        assert_eq!(t2.rows, vec![ints(&[146, 632, 1448]), ints(&[15, 18, 1242, 4302])]);
        assert_eq!(t2.first_fall, None);
        let t3 = sigma_table(SystemShape::new(24, 6, 24, 10).unwrap(), 4);
        assert_eq!(t3.entry(4, 1), Some(&BigInt::from(-132)));
        assert_eq!(t3.first_fall, Some(4));
        assert_eq!(sigma(4, 1, 24, 6, 24), BigInt::from(18));
        assert_eq!(t3.records().count(), 7);
    }

    #[test]
    fn sigma_tilde_without_u_is_sigma() {
        for d in 3..8 {
            for i in 0..d {
                assert_eq!(sigma_tilde(d, i, 30, 7, 31, 0), sigma(d, i, 30, 7, 31));
            }
        }
    }

    #[test]
    fn generic_series_examples() {
        assert_eq!(generic_series(20, 25, 4).coeffs, ints(&[1, 20, 165, 640, 420]));
        assert_eq!(generic_series(24, 34, 4).coeffs, ints(&[1, 24, 242, 1208, 1837]));
        assert_eq!(generic_series(13, 0, 2).coeffs, ints(&[1, 13, 78]));
        assert_eq!(d_reg_generic(20, 25), 5);
        assert_eq!(d_reg_generic(24, 34), 5);
        assert_eq!(d_reg_generic(4, 20), 2);
    }

    #[test]
    fn first_fall_presets() {
        assert_eq!(first_fall_estimate(320, 24, 320, 640), 12);
        assert_eq!(first_fall_estimate(640, 29, 640, 1280), 14);
        assert_eq!(first_fall_estimate(1280, 36, 1280, 2560), 17);
        assert_eq!(first_fall_estimate(24, 6, 24, 10), 4);
        assert_eq!(first_fall_estimate(20, 9, 25, 0), 4);
        assert_eq!(first_fall_estimate(24, 6, 24, 0), 5);
    }

    #[test]
    fn first_fall_monotone() {
        for (n, v) in [(30, 6), (40, 9)] {
            for e in [n, n + 5, n + 10] {
                for u in [0, 5, 10, 20] {
                    let here = first_fall_estimate(n, v, e, u);
                    assert!(first_fall_estimate(n, v, e + 5, u) <= here);
                    assert!(first_fall_estimate(n, v, e, u + 5) <= here);
                }
            }
        }
    }

    #[test]
    fn monomial_index_is_lex() {
        let idx = MonomialIndex::new(7, 3);
        let mut expect = 0;
        for_each_subset(7, 3, |c| {
            assert_eq!(idx.index(c), expect);
            expect += 1;
        });
        assert_eq!(expect, 35);
    }

    #[test]
    fn macaulay_small() {
        let p = QuadraticPoly::from_monomials(3, &[(0, 1)], &[], false);
        let sys = QuadraticSystem::new(3, vec![p]).unwrap();
        assert_eq!(macaulay_rank(&sys, 2).unwrap(), 1);
        // x0x1 · {x2} in three variables: one monomial of degree 3.
        assert_eq!(macaulay_rank(&sys, 3).unwrap(), 1);
        let zero = QuadraticSystem::new(6, vec![QuadraticPoly::zero(6); 3]).unwrap();
        assert_eq!(hilbert_prefix_bruteforce(&zero, 3).unwrap().coeffs, ints(&[1, 6, 15, 20]));
        assert!(macaulay_rank(&sys, 1).is_err());
    }

    #[test]
    fn macaulay_budget() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let sys = QuadraticSystem::random(20, 25, &mut rng);
        assert!(matches!(
            macaulay_rank_with_budget(&sys, 4, 1 << 20),
            Err(Error::BudgetExceeded { .. })
        ));
        assert!(macaulay_bytes(&sys, 4) < 12 << 20);
    }

    #[test]
    fn linear_terms_are_ignored() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let sys = QuadraticSystem::random_ov(OvShape::new(10, 3).unwrap(), 8, &mut rng);
        for d in 2..=4 {
            assert_eq!(macaulay_rank(&sys, d).unwrap(), macaulay_rank(&sys.quadratic_parts(), d).unwrap());
        }
    }

    #[test]
    fn random_system_matches_generic_below_dreg() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let sys = QuadraticSystem::random(14, 16, &mut rng);
        let dreg = d_reg_generic(14, 16);
        let bf = hilbert_prefix_bruteforce(&sys, dreg - 1).unwrap();
        assert_eq!(bf, generic_series(14, 16, dreg - 1));
    }
}
