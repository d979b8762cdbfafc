//! Structural attacks on weakened keys and bit-complexity estimators.
//!
//! - [`kernel_attack`]: without the mixing matrix every public polar matrix
//!   has rank at most `2v` and its kernel sits inside the hidden oil space.
//! - [`oil_reconstruction`]: with `u = n` the polar system `P'(a, x) = 0`
//!   still has non-trivial solutions for oil vectors `a`; enough of them span
//!   the oil space.
//! - [`lambda_strip_bruteforce`]: for tiny `u`, enumerate mixing rows until a
//!   head polynomial turns into an OV-type one.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use rand::{Rng, RngCore};

use crate::analysis::binomial;
use crate::error::{ensure_dim, Error, Result};
use crate::f2::gray::gray_steps;
use crate::f2::{kernel_basis, rank, BitMatrix, BitVector};
use crate::keys::PublicKey;
use crate::quad::{vanishes_on_subspace, OvShape, QuadraticSystem};

/// Outcome of an attack run, rendered as `key: value` lines by
/// [`AttackReport::to_text`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttackReport {
    pub attack: &'static str,
    pub success: bool,
    pub basis: Option<Vec<BitVector>>,
    pub samples: u64,
    pub pairs: u64,
    pub rank_checks: u64,
    pub wall: Duration,
    pub note: String,
}

impl AttackReport {
    fn new(attack: &'static str) -> Self {
        Self {
            attack,
            success: false,
            basis: None,
            samples: 0,
            pairs: 0,
            rank_checks: 0,
            wall: Duration::ZERO,
            note: String::new(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "attack: {}", self.attack);
        let _ = writeln!(s, "success: {}", self.success);
        let _ = writeln!(s, "basis_dimension: {}", self.basis.as_ref().map_or(0, Vec::len));
        let _ = writeln!(s, "samples: {}", self.samples);
        let _ = writeln!(s, "pairs: {}", self.pairs);
        let _ = writeln!(s, "rank_checks: {}", self.rank_checks);
        let _ = writeln!(s, "wall_ms: {}", self.wall.as_millis());
        if !self.note.is_empty() {
            let _ = writeln!(s, "note: {}", self.note);
        }
        if let Some(basis) = &self.basis {
            for (i, b) in basis.iter().enumerate() {
                let _ = writeln!(s, "basis[{i}]: {b}");
            }
        }
        s
    }
}

/// Incrementally maintained basis in echelon form.
#[derive(Clone, Debug, Default)]
pub struct SpanBuilder {
    reduced: Vec<(usize, BitVector)>,
    originals: Vec<BitVector>,
}

impl SpanBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `x`; returns whether it enlarged the span.
    pub fn insert(&mut self, x: &BitVector) -> bool {
        let mut r = x.clone();
        for (p, b) in &self.reduced {
            if r.get(*p) {
                r.xor_assign(b);
            }
        }
        let Some(p) = r.first_one() else {
            return false;
        };
        for (_, b) in &mut self.reduced {
            if b.get(p) {
                b.xor_assign(&r);
            }
        }
        self.reduced.push((p, r));
        self.originals.push(x.clone());
        true
    }

    pub fn dim(&self) -> usize {
        self.reduced.len()
    }

    pub fn contains(&self, x: &BitVector) -> bool {
        let mut r = x.clone();
        for (p, b) in &self.reduced {
            if r.get(*p) {
                r.xor_assign(b);
            }
        }
        r.is_zero()
    }

    /// The inserted vectors that enlarged the span.
    pub fn basis(&self) -> &[BitVector] {
        &self.originals
    }

    /// A uniformly random element of the span.
    pub fn random_element<R: RngCore + ?Sized>(&self, n: usize, rng: &mut R) -> BitVector {
        let mut x = BitVector::zeros(n);
        for b in &self.originals {
            if rng.gen::<bool>() {
                x.xor_assign(b);
            }
        }
        x
    }
}

/// Recovers the oil space of an unmixed public system `F∘S` from the kernels
/// of its rank-`2v` polar matrices and of random combinations of them.
pub fn kernel_attack<R: RngCore + ?Sized>(pub_sys: &QuadraticSystem, shape: OvShape, rng: &mut R) -> AttackReport {
    let start = Instant::now();
    let mut report = AttackReport::new("kernel");
    let (n, v) = (shape.n, shape.v);
    if pub_sys.n() != n || n <= 2 * v {
        report.note = format!("kernels are trivial for n = {n}, v = {v}");
        report.wall = start.elapsed();
        return report;
    }
    let target = n - v;
    let polars: Vec<BitMatrix> = pub_sys.polys().iter().map(|p| p.polar_matrix()).collect();
    let mut span = SpanBuilder::new();
    let absorb = |m: &BitMatrix, span: &mut SpanBuilder, report: &mut AttackReport| {
        report.rank_checks += 1;
        if rank(m) == 2 * v {
            for k in kernel_basis(m) {
                span.insert(&k);
            }
        }
    };
    for m in &polars {
        absorb(m, &mut span, &mut report);
        if span.dim() >= target {
            break;
        }
    }
    let combos = 4 * n as u64 + (1u64 << v.min(16));
    while span.dim() < target && report.samples < combos && !polars.is_empty() {
        report.samples += 1;
        let mut m = BitMatrix::zeros(n, n);
        for p in &polars {
            if rng.gen::<bool>() {
                m.add_assign(p);
            }
        }
        absorb(&m, &mut span, &mut report);
    }
    let basis = span.basis().to_vec();
    report.success = basis.len() == target && vanishes_on_subspace(pub_sys, &basis).unwrap_or(false);
    if !report.success {
        report.note = format!("span dimension {} of {target}", basis.len());
    }
    report.basis = Some(basis);
    report.wall = start.elapsed();
    report
}

/// Non-trivial solutions `b ∉ {0, a}` of `P'(a, x) = 0`, one per extra kernel
/// basis vector.
pub fn pairs_at(sys: &QuadraticSystem, a: &BitVector) -> Vec<BitVector> {
    let m = sys.polar_rows_at(a).expect("length n");
    if rank(&m) + 1 >= sys.n() {
        return Vec::new();
    }
    kernel_basis(&m).into_iter().filter(|b| b != a).collect()
}

/// Draws `sample_budget` uniform vectors `a` and collects every pair `(a, b)`.
pub fn oil_pair_search<R: RngCore + ?Sized>(pk: &PublicKey, sample_budget: u64, rng: &mut R) -> Vec<(BitVector, BitVector)> {
    let sys = pk.full_system();
    let n = sys.n();
    let mut out = Vec::new();
    for _ in 0..sample_budget {
        let a = BitVector::random(n, rng);
        if a.is_zero() {
            continue;
        }
        for b in pairs_at(&sys, &a) {
            out.push((a.clone(), b));
        }
    }
    out
}

/// How the sample vectors `a` are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Sampling {
    /// Uniform over `F2^n`.
    Uniform,
    /// Random elements of the span harvested so far, falling back to a
    /// uniform draw whenever the element was already tried.
    #[default]
    Bootstrap,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OilReconConfig {
    /// Extra rows in the final rank test.
    pub span_margin: usize,
    pub sample_budget: u64,
    pub sampling: Sampling,
}

impl Default for OilReconConfig {
    fn default() -> Self {
        Self {
            span_margin: 5,
            sample_budget: 100_000,
            sampling: Sampling::default(),
        }
    }
}

/// Harvests pairs until their span has dimension `n − v`, then accepts the
/// span iff the head block of `u + margin` polar evaluations on it is a
/// linear image of the tail block.
pub fn oil_reconstruction<R: RngCore + ?Sized>(pk: &PublicKey, cfg: &OilReconConfig, rng: &mut R) -> AttackReport {
    let start = Instant::now();
    let mut report = AttackReport::new("oilrecon");
    let params = pk.params();
    let (n, target) = (params.n, params.o());
    let sys = pk.full_system();
    let mut span = SpanBuilder::new();
    let mut tried = HashSet::new();
    let mut resets = 0u64;
    while report.samples < cfg.sample_budget {
        report.samples += 1;
        let mut a = BitVector::random(n, rng);
        if cfg.sampling == Sampling::Bootstrap && span.dim() > 0 {
            let candidate = span.random_element(n, rng);
            if !tried.contains(&candidate) {
                a = candidate;
            }
        }
        if a.is_zero() || !tried.insert(a.clone()) {
            continue;
        }
        let found = pairs_at(&sys, &a);
        if found.is_empty() {
            continue;
        }
        report.pairs += found.len() as u64;
        span.insert(&a);
        for b in &found {
            span.insert(b);
        }
        if span.dim() > target {
            span = SpanBuilder::new();
            resets += 1;
            continue;
        }
        if span.dim() == target {
            report.rank_checks += 1;
            if oil_span_test(&sys, params.n, params.u, &span, cfg.span_margin, rng) {
                report.success = true;
                report.basis = Some(span.basis().to_vec());
                break;
            }
            span = SpanBuilder::new();
            resets += 1;
        }
    }
    report.note = format!("span resets: {resets}; final span dimension {}", span.dim());
    report.wall = start.elapsed();
    report
}

/// Rows `P'(x_i, y_i)` for random `x_i, y_i` in the span; on the oil space
/// the head block equals `Λ` times the tail block, so both blocks have the
/// same rank.
fn oil_span_test<R: RngCore + ?Sized>(sys: &QuadraticSystem, n: usize, u: usize, span: &SpanBuilder, margin: usize, rng: &mut R) -> bool {
    let rows: Vec<BitVector> = (0..u + margin)
        .map(|_| {
            let x = span.random_element(n, rng);
            let y = span.random_element(n, rng);
            sys.polar_eval(&x, &y).expect("length n")
        })
        .collect();
    let b = BitMatrix::from_rows(sys.len(), &rows).expect("m columns");
    rank(&b) == rank(&b.col_block(n, u))
}

/// Fraction of random `a` for which a fresh random system of `equations`
/// fully quadratic polynomials in `n` variables has `rank Q'(a, ·) < n − 1`.
pub fn rank_deficiency_rate_with<R: RngCore + ?Sized>(n: usize, equations: usize, trials: u64, rng: &mut R) -> f64 {
    let mut hits = 0u64;
    for _ in 0..trials {
        let q = QuadraticSystem::random(n, equations, rng);
        let a = BitVector::random(n, rng);
        let m = q.polar_rows_at(&a).expect("length n");
        if rank(&m) + 1 < n {
            hits += 1;
        }
    }
    hits as f64 / trials.max(1) as f64
}

/// [`rank_deficiency_rate_with`] for `n` equations.
pub fn rank_deficiency_rate<R: RngCore + ?Sized>(n: usize, trials: u64, rng: &mut R) -> f64 {
    rank_deficiency_rate_with(n, n, trials, rng)
}

/// Enumerates `λ ∈ F2^u` in Gray order and returns the first for which
/// `p_1 + Σ λ_j q_j` has polar rank at most `2v`.
pub fn lambda_strip_bruteforce(pk: &PublicKey, shape: OvShape, max_u: usize) -> Result<Option<BitVector>> {
    let u = pk.params().u;
    if u > max_u || max_u > 24 {
        return Err(Error::InvalidParams(format!("u = {u} exceeds the enumeration limit {}", max_u.min(24))));
    }
    ensure_dim("lambda_strip shape", pk.params().n, shape.n)?;
    let mut m = pk.head().get(0).polar_matrix();
    let steps: Vec<BitMatrix> = pk.tail().polys().iter().map(|q| q.polar_matrix()).collect();
    let mut lambda = BitVector::zeros(u);
    if rank(&m) <= 2 * shape.v {
        return Ok(Some(lambda));
    }
    for (_, bit) in gray_steps(u as u32) {
        let bit = bit as usize;
        lambda.flip(bit);
        m.add_assign(&steps[bit]);
        if rank(&m) <= 2 * shape.v {
            return Ok(Some(lambda));
        }
    }
    Ok(None)
}

/// `m·C(n, r+1) ≥ K·C(n, r) − 1`: the Support Minors system linearizes.
pub fn minrank_feasible(m_rows: u64, n_cols: u64, k: u64, r: u64) -> bool {
    binomial(n_cols, r + 1) * m_rows >= binomial(n_cols, r) * k - 1
}

/// `log2(x)` for a positive big integer.
pub fn log2_big(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits <= 64 {
        let v: u64 = x.try_into().expect("fits");
        return (v as f64).log2();
    }
    let shift = bits - 64;
    let top: u64 = (x >> shift).try_into().expect("64 bits");
    (top as f64).log2() + shift as f64
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexityEstimate {
    pub attack: &'static str,
    pub log2_bits: f64,
    pub k: Option<u64>,
    pub r: Option<u64>,
    pub n_prime: Option<u64>,
    pub d: Option<u64>,
    pub omega: Option<f64>,
}

impl ComplexityEstimate {
    fn new(attack: &'static str, log2_bits: f64) -> Self {
        Self {
            attack,
            log2_bits,
            k: None,
            r: None,
            n_prime: None,
            d: None,
            omega: None,
        }
    }

    /// Bits rounded down, as printed in tables.
    pub fn bits(&self) -> u64 {
        self.log2_bits.floor() as u64
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("attack: {}\nlog2_bits: {:.2}\nbits: {}\n", self.attack, self.log2_bits, self.bits());
        for (key, val) in [("K", self.k), ("r", self.r), ("n_prime", self.n_prime), ("d", self.d)] {
            if let Some(v) = val {
                let _ = writeln!(s, "{key}: {v}");
            }
        }
        if let Some(w) = self.omega {
            let _ = writeln!(s, "omega: {w}");
        }
        s
    }
}

pub const DEFAULT_OMEGA: f64 = 2.37;

/// `(u+1)³·(2v+1)·C(4v+2, 2v)²`: MinRank with `K = u + 1`, `r = 2v`,
/// punctured to `n' = 2r + 2` columns.
pub fn estimate_minrank_bits(n: u64, v: u64, u: u64) -> ComplexityEstimate {
    let _ = n;
    let r = 2 * v;
    let value = BigInt::from(u + 1).pow(3) * (2 * v + 1) * binomial(2 * r + 2, r).pow(2);
    let mut e = ComplexityEstimate::new("minrank", log2_big(&value));
    e.k = Some(u + 1);
    e.r = Some(r);
    e.n_prime = Some(2 * r + 2);
    e
}

/// `3·C(n, d)²·C(n, 2)`.
pub fn estimate_xl_bits(n: u64, d: u64) -> ComplexityEstimate {
    let value = binomial(n, d).pow(2) * binomial(n, 2) * 3u32;
    let mut e = ComplexityEstimate::new("xl", log2_big(&value));
    e.d = Some(d);
    e
}

/// `ω·log2 C(n, d)`.
pub fn estimate_f4_bits(n: u64, d: u64, omega: f64) -> ComplexityEstimate {
    let mut e = ComplexityEstimate::new("f4", omega * log2_big(&binomial(n, d)));
    e.d = Some(d);
    e.omega = Some(omega);
    e
}

/// One bilinear term `λ_i · c_T`, with `T` indexed among the `r`-subsets of
/// the columns in lexicographic order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SmmTerm {
    pub lambda: usize,
    pub minor: usize,
}

/// Support Minors equations of a MinRank instance: for every row `j` and
/// column set `J` of size `r + 1`, the Laplace expansion along the first row
/// of the `(r+1)`-minor of `[row j of Σλ_i M_i ; C]` on `J`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmmInstance {
    pub k: usize,
    pub rows: usize,
    pub cols: usize,
    pub r: usize,
    pub subsets: Vec<Vec<usize>>,
    pub equations: Vec<Vec<SmmTerm>>,
}

impl SmmInstance {
    pub fn num_equations(&self) -> usize {
        self.equations.len()
    }

    /// `C(n, r) + K`.
    pub fn num_variables(&self) -> usize {
        self.subsets.len() + self.k
    }

    /// `K·C(n, r)`.
    pub fn num_quadratic_monomials(&self) -> usize {
        self.k * self.subsets.len()
    }

    /// Whether `(λ, c)` satisfies every equation.
    pub fn is_satisfied(&self, lambda: &BitVector, minors: &BitVector) -> bool {
        self.equations
            .iter()
            .all(|eq| !eq.iter().fold(false, |acc, t| acc ^ (lambda.get(t.lambda) & minors.get(t.minor))))
    }

    /// Index of an `r`-subset of columns.
    pub fn subset_index(&self, t: &[usize]) -> Option<usize> {
        self.subsets.binary_search_by(|s| s.as_slice().cmp(t)).ok()
    }
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for x in start..n {
            if n - x < k - cur.len() {
                break;
            }
            cur.push(x);
            rec(x + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Default cap on emitted equations.
pub const DEFAULT_SMM_BUDGET: u128 = 10_000_000;

pub fn smm_instance(matrices: &[BitMatrix], r: usize) -> Result<SmmInstance> {
    smm_instance_with_budget(matrices, r, DEFAULT_SMM_BUDGET)
}

pub fn smm_instance_with_budget(matrices: &[BitMatrix], r: usize, budget: u128) -> Result<SmmInstance> {
    let Some(first) = matrices.first() else {
        return Err(Error::InvalidParams("no matrices".into()));
    };
    let (rows, cols) = (first.rows(), first.cols());
    for m in matrices {
        ensure_dim("smm_instance rows", rows, m.rows())?;
        ensure_dim("smm_instance cols", cols, m.cols())?;
    }
    if r > rows.min(cols) {
        return Err(Error::InvalidParams(format!("target rank {r} exceeds {rows} x {cols}")));
    }
    let needed = u128::try_from(binomial(cols as u64, r as u64 + 1) * rows).unwrap_or(u128::MAX);
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let minors = subsets(cols, r);
    let mut inst = SmmInstance {
        k: matrices.len(),
        rows,
        cols,
        r,
        subsets: minors,
        equations: Vec::new(),
    };
    let big = subsets(cols, r + 1);
    for j in 0..rows {
        for set in &big {
            let mut eq = Vec::new();
            for (pos, &col) in set.iter().enumerate() {
                let rest: Vec<usize> = set.iter().enumerate().filter(|&(p, _)| p != pos).map(|(_, &c)| c).collect();
                let minor = inst.subset_index(&rest).expect("r-subset");
                for (i, m) in matrices.iter().enumerate() {
                    if m.get(j, col) {
                        eq.push(SmmTerm { lambda: i, minor });
                    }
                }
            }
            eq.sort_unstable();
            let mut dedup: Vec<SmmTerm> = Vec::with_capacity(eq.len());
            for t in eq {
                if dedup.last() == Some(&t) {
                    dedup.pop();
                } else {
                    dedup.push(t);
                }
            }
            inst.equations.push(dedup);
        }
    }
    Ok(inst)
}
