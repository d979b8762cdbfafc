//! Key exchange: Alice publishes `t` images `b_i = P(a_i)`; Bob strips the
//! mixing matrix, guesses the vinegar coordinates, and solves the resulting
//! linear systems in the oil coordinates until one column inverts.
//!
//! Two decapsulation paths share the candidate solver:
//! - the reference path eliminates `M_ȳ` and combines the rows of `W'`
//!   explicitly for every guess;
//! - the fast path precomputes Gray combination tables over the rows of `W`,
//!   assembles only `θ` dependent rows per guess and discards the guess when
//!   their OR covers every column.

use std::collections::HashSet;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::RngCore;

use crate::error::{ensure_dim, Error, Result};
use crate::f2::elim::TranscriptBuilder;
use crate::f2::gray::MAX_CHUNK;
use crate::f2::mul::extract_bits;
use crate::f2::vector::{dot_words, tail_mask, xor_words};
use crate::f2::{gray, mat_mul, row_reduce_with_transcript, solve_affine, BitMatrix, BitVector, GrayTable, MulStrategy};
use crate::hash::{tagged_digest, Digest32, TAG_CONFIRM, TAG_SECRET};
use crate::keys::{public_evaluate, Params, PrivateKey, PublicKey};
use crate::quad::{QuadraticPoly, QuadraticSystem};

/// Solutions tried per consistent column before moving on.
pub const SOLUTION_CAP: usize = 1 << 10;

/// Guesses handed to a worker at a time.
const BLOCK: u64 = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SessionConfig {
    /// Plaintexts per batch; a multiple of 64.
    pub t: usize,
    /// Dependent rows assembled before the early-abort test.
    pub theta: usize,
    /// Chunk size of the Gray combination tables.
    pub s: usize,
    /// Check `P(x) = b_k` before accepting a solution.
    pub verify_full: bool,
    /// Worker threads for the guess loop; 0 picks the available parallelism.
    pub threads: usize,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            t: 64,
            theta: 8,
            s: 8,
            verify_full: true,
            threads: 1,
        }
    }
}

impl SessionConfig {
    pub fn validate(&self, params: Params) -> Result<()> {
        if self.t == 0 || !self.t.is_multiple_of(64) {
            return Err(Error::InvalidConfig(format!("t = {} is not a positive multiple of 64", self.t)));
        }
        if self.theta == 0 || self.theta > params.o() {
            return Err(Error::InvalidConfig(format!("theta = {} outside 1..={}", self.theta, params.o())));
        }
        if self.s == 0 || self.s > MAX_CHUNK {
            return Err(Error::ChunkSize(self.s));
        }
        Ok(())
    }

    fn workers(&self) -> usize {
        match self.threads {
            0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
            n => n,
        }
    }
}

/// Alice's message: one length-`m` image per plaintext.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CipherBatch {
    m: usize,
    vectors: Vec<BitVector>,
}

pub const BATCH_MAGIC: &[u8; 4] = b"OLVB";

impl CipherBatch {
    pub fn new(m: usize, vectors: Vec<BitVector>) -> Result<Self> {
        for v in &vectors {
            ensure_dim("CipherBatch vector", m, v.len())?;
        }
        Ok(Self { m, vectors })
    }

    pub fn t(&self) -> usize {
        self.vectors.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn vectors(&self) -> &[BitVector] {
        &self.vectors
    }

    /// `"OLVB" ‖ t ‖ m ‖ rows`, little-endian lengths, each row `⌈m/8⌉` bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        let row = self.m.div_ceil(8);
        let mut out = Vec::with_capacity(12 + row * self.t());
        out.extend_from_slice(BATCH_MAGIC);
        out.extend_from_slice(&(self.t() as u32).to_le_bytes());
        out.extend_from_slice(&(self.m as u32).to_le_bytes());
        for v in &self.vectors {
            out.extend_from_slice(&v.to_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 12 || &bytes[..4] != BATCH_MAGIC {
            return Err(Error::Codec("missing OLVB header".into()));
        }
        let t = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let m = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let row = m.div_ceil(8);
        let expected = t.checked_mul(row).and_then(|x| x.checked_add(12));
        if expected != Some(bytes.len()) {
            return Err(Error::Codec(format!("batch of {t} x {m} bits needs {expected:?} bytes, got {}", bytes.len())));
        }
        let vectors = bytes[12..]
            .chunks_exact(row.max(1))
            .take(t)
            .map(|c| {
                if !m.is_multiple_of(8) && c[row - 1] >> (m % 8) != 0 {
                    return Err(Error::Codec("nonzero padding bits".into()));
                }
                Ok(BitVector::from_bytes(m, c))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { m, vectors })
    }
}

/// Alice's retained state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncapsState {
    pub plaintexts: Vec<BitVector>,
    pub hashes: Vec<Digest32>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecapResult {
    pub plaintext: BitVector,
    /// Vinegar assignment that led to the solution.
    pub guess: BitVector,
    /// Index of the inverted ciphertext.
    pub column: usize,
    /// Guesses up to and including the successful one, in enumeration order.
    pub guesses_tried: u64,
}

/// Digest Bob returns to Alice.
pub fn confirmation_digest(plaintext: &BitVector) -> Digest32 {
    tagged_digest(TAG_CONFIRM, &plaintext.to_bytes())
}

/// Shared secret derived from an agreed plaintext.
pub fn shared_secret(plaintext: &BitVector) -> Digest32 {
    tagged_digest(TAG_SECRET, &plaintext.to_bytes())
}

/// Draws `t` distinct plaintexts and evaluates the public map on each.
pub fn encapsulate<R: RngCore + ?Sized>(pk: &PublicKey, cfg: &SessionConfig, rng: &mut R) -> Result<(CipherBatch, EncapsState)> {
    let params = pk.params();
    cfg.validate(params)?;
    if params.n < 64 && (cfg.t as u128) > 1u128 << params.n {
        return Err(Error::InvalidConfig(format!("cannot draw {} distinct vectors of {} bits", cfg.t, params.n)));
    }
    let mut seen = HashSet::with_capacity(cfg.t);
    let mut plaintexts = Vec::with_capacity(cfg.t);
    while plaintexts.len() < cfg.t {
        let a = BitVector::random(params.n, rng);
        if seen.insert(a.clone()) {
            plaintexts.push(a);
        }
    }
    let vectors = plaintexts
        .iter()
        .map(|a| public_evaluate(pk, a))
        .collect::<Result<Vec<_>>>()?;
    let hashes = plaintexts.iter().map(confirmation_digest).collect();
    Ok((CipherBatch::new(params.m(), vectors)?, EncapsState { plaintexts, hashes }))
}

/// Alice's side of the confirmation: the secret for the plaintext whose
/// digest Bob sent, if any.
pub fn alice_secret(state: &EncapsState, digest: &Digest32) -> Option<Digest32> {
    let k = state.hashes.iter().position(|h| h == digest)?;
    Some(shared_secret(&state.plaintexts[k]))
}

/// Matches Bob's plaintext against Alice's hashes; both sides then hold the
/// returned secret.
pub fn confirm(result: &DecapResult, state: &EncapsState) -> Option<Digest32> {
    alice_secret(state, &confirmation_digest(&result.plaintext))
}

/// `W = head + Λ·tail`, an `n × t` matrix whose column `i` is `(F∘S)(a_i)`.
pub fn strip_lambda(sk: &PrivateKey, batch: &CipherBatch) -> Result<BitMatrix> {
    let Params { n, u, .. } = sk.params();
    ensure_dim("strip_lambda batch length", n + u, batch.m())?;
    let bt = BitMatrix::from_rows(batch.m(), batch.vectors())?.transpose();
    let mut w = bt.row_block(0, n);
    let tail = bt.row_block(n, u);
    w.add_assign(&mat_mul(sk.lambda(), &tail, MulStrategy::default())?);
    Ok(w)
}

/// Linear-in-oil form of the central map: `M_ȳ = base + Σ_{ȳ_a = 1} step[a]`
/// and `c_ȳ = f(ȳ, 0)`.
#[derive(Clone, Debug)]
pub struct Specializer {
    base: BitMatrix,
    steps: Vec<BitMatrix>,
    vinegar: Vec<QuadraticPoly>,
}

impl Specializer {
    pub fn new(sk: &PrivateKey) -> Self {
        let Params { n, v, .. } = sk.params();
        let o = n - v;
        let f = sk.central().polys();
        let mut base = BitMatrix::zeros(n, o);
        let mut steps = vec![BitMatrix::zeros(n, o); v];
        for (j, p) in f.iter().enumerate() {
            base.set_row(j, &p.lin().slice(v, o));
            for (a, step) in steps.iter_mut().enumerate() {
                step.set_row(j, &p.quad().row(a).slice(v, o));
            }
        }
        let vinegar = f
            .iter()
            .map(|p| {
                let q = p.quad().row_block(0, v).col_block(0, v);
                QuadraticPoly::from_parts(&q, p.lin().slice(0, v), p.constant()).expect("square block")
            })
            .collect();
        Self { base, steps, vinegar }
    }

    pub fn matrix(&self, y_bar: &BitVector) -> BitMatrix {
        let mut m = self.base.clone();
        for a in y_bar.iter_ones() {
            m.add_assign(&self.steps[a]);
        }
        m
    }

    pub fn constants(&self, y_bar: &BitVector) -> BitVector {
        let mut c = BitVector::zeros(self.vinegar.len());
        for (j, p) in self.vinegar.iter().enumerate() {
            c.set(j, p.eval_unchecked(y_bar.words()));
        }
        c
    }

    fn flip(&self, m: &mut BitMatrix, bit: usize) {
        m.add_assign(&self.steps[bit]);
    }
}

/// `(M_ȳ, c)` with `f_j(ȳ, y_oil) = (M_ȳ·y_oil)_j + c_j`.
pub fn specialize_vinegar(sk: &PrivateKey, y_bar: &BitVector) -> Result<(BitMatrix, BitVector)> {
    ensure_dim("specialize_vinegar", sk.params().v, y_bar.len())?;
    let sp = Specializer::new(sk);
    Ok((sp.matrix(y_bar), sp.constants(y_bar)))
}

/// Columns `k` of `W' = W + c·1ᵗ` for which `M·y = w'_k` is consistent, by
/// explicit elimination.
fn consistent_columns_reference(m: &BitMatrix, c: &BitVector, w: &BitMatrix) -> Vec<usize> {
    let t = w.cols();
    let mut wp = w.clone();
    let ones = BitVector::ones(t);
    for j in c.iter_ones() {
        wp.xor_row_vector(j, &ones);
    }
    let tr = row_reduce_with_transcript(m);
    let mut any = vec![0u64; t.div_ceil(64)];
    for dep in &tr.dependencies {
        let mut row = wp.row(dep.row);
        row.xor_assign(&wp.vec_mul(&dep.combination).expect("n rows"));
        for (a, b) in any.iter_mut().zip(row.words()) {
            *a |= b;
        }
    }
    (0..t).filter(|&k| (any[k / 64] >> (k % 64)) & 1 == 0).collect()
}

/// Smallest column whose specialized system is consistent, if any.
pub fn guess_once(sk: &PrivateKey, w: &BitMatrix, y_bar: &BitVector, _cfg: &SessionConfig) -> Result<Option<usize>> {
    ensure_dim("guess_once W rows", sk.params().n, w.rows())?;
    let (m, c) = specialize_vinegar(sk, y_bar)?;
    Ok(consistent_columns_reference(&m, &c, w).first().copied())
}

/// Counters collected by the fast path.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FastStats {
    pub guesses: u64,
    /// Guesses discarded by the θ-row test.
    pub aborted: u64,
    /// Columns of all tested guesses that passed the θ-row test.
    pub theta_survivors: u64,
    /// Columns that were fully consistent.
    pub consistent_columns: u64,
    /// Columns examined by the θ-row test.
    pub columns_tested: u64,
    /// Consistent columns found in guesses the θ-row test discarded (audit).
    pub discarded_consistent: u64,
    /// Aborted guesses re-checked by the audit.
    pub audited: u64,
}

impl FastStats {
    fn merge(&mut self, o: &FastStats) {
        self.guesses += o.guesses;
        self.aborted += o.aborted;
        self.theta_survivors += o.theta_survivors;
        self.consistent_columns += o.consistent_columns;
        self.columns_tested += o.columns_tested;
        self.discarded_consistent += o.discarded_consistent;
        self.audited += o.audited;
    }

    /// Fraction of inconsistent columns that passed the θ-row test.
    pub fn wrong_survival_rate(&self) -> f64 {
        let wrong_total = self.columns_tested.saturating_sub(self.consistent_columns);
        if wrong_total == 0 {
            return 0.0;
        }
        self.theta_survivors.saturating_sub(self.consistent_columns) as f64 / wrong_total as f64
    }
}

/// Options for the instrumented fast path.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FastOptions {
    /// Re-check every discarded guess with the reference elimination.
    pub audit: bool,
    /// Visit every guess instead of stopping at the first success.
    pub exhaustive: bool,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Path {
    Reference,
    Fast(FastOptions),
}

/// Bob's per-key state: the specializer and the expanded `Q` block.
pub struct Decapsulator<'a> {
    sk: &'a PrivateKey,
    specializer: Specializer,
    q: QuadraticSystem,
}

struct Session<'s> {
    w: BitMatrix,
    columns: Vec<BitVector>,
    batch: &'s CipherBatch,
    tables: Vec<GrayTable>,
    s: usize,
}

impl<'a> Decapsulator<'a> {
    pub fn new(sk: &'a PrivateKey) -> Self {
        Self {
            sk,
            specializer: Specializer::new(sk),
            q: sk.expand_q(),
        }
    }

    /// Reference path: full elimination and explicit row combination per guess.
    pub fn decapsulate(&self, batch: &CipherBatch, cfg: &SessionConfig) -> Result<DecapResult> {
        self.run(batch, cfg, Path::Reference).0
    }

    /// Table-driven path with the θ-row early abort.
    pub fn decapsulate_fast(&self, batch: &CipherBatch, cfg: &SessionConfig) -> Result<DecapResult> {
        self.run(batch, cfg, Path::Fast(FastOptions::default())).0
    }

    /// Fast path returning its counters; with `exhaustive` every guess is
    /// visited and the first success (if any) is still reported.
    pub fn decapsulate_fast_instrumented(&self, batch: &CipherBatch, cfg: &SessionConfig, opts: FastOptions) -> (Result<DecapResult>, FastStats) {
        self.run(batch, cfg, Path::Fast(opts))
    }

    /// Exact `P(x)` from private data: `F(Sx) + Λ·Q(x)` followed by `Q(x)`.
    fn public_image(&self, x: &BitVector) -> BitVector {
        let qx = self.q.evaluate(x).expect("n variables");
        let sx = self.sk.s().mul_vec(x).expect("n x n");
        let mut head = self.sk.central().evaluate(&sx).expect("n variables");
        head.xor_assign(&self.sk.lambda().mul_vec(&qx).expect("n x u"));
        head.concat(&qx)
    }

    fn session<'s>(&self, batch: &'s CipherBatch, cfg: &SessionConfig, path: Path) -> Result<Session<'s>> {
        let w = strip_lambda(self.sk, batch)?;
        let columns = w.transpose().row_vectors();
        let mut tables = Vec::new();
        if matches!(path, Path::Fast(_)) {
            let n = w.rows();
            let mut start = 0;
            while start < n {
                let k = cfg.s.min(n - start);
                let rows: Vec<&[u64]> = (start..start + k).map(|r| w.row_words(r)).collect();
                tables.push(GrayTable::build(w.cols(), &rows));
                start += k;
            }
        }
        Ok(Session {
            w,
            columns,
            batch,
            tables,
            s: cfg.s,
        })
    }

    fn run(&self, batch: &CipherBatch, cfg: &SessionConfig, path: Path) -> (Result<DecapResult>, FastStats) {
        let params = self.sk.params();
        if let Err(e) = cfg.validate(params) {
            return (Err(e), FastStats::default());
        }
        let session = match self.session(batch, cfg, path) {
            Ok(s) => s,
            Err(e) => return (Err(e), FastStats::default()),
        };
        let total: u64 = 1u64 << params.v;
        let exhaustive = matches!(path, Path::Fast(FastOptions { exhaustive: true, .. }));
        let best = AtomicU64::new(u64::MAX);
        let next = AtomicU64::new(0);
        let workers = cfg.workers().min(total.div_ceil(BLOCK) as usize).max(1);

        let work = || {
            let mut stats = FastStats::default();
            let mut found: Option<(u64, DecapResult)> = None;
            loop {
                let start = next.fetch_add(BLOCK, Ordering::Relaxed);
                if start >= total || (!exhaustive && start > best.load(Ordering::Relaxed)) {
                    break;
                }
                let end = (start + BLOCK).min(total);
                if let Some((g, r)) = self.run_block(&session, cfg, path, start..end, &best, &mut stats) {
                    if found.as_ref().is_none_or(|(fg, _)| g < *fg) {
                        best.fetch_min(g, Ordering::Relaxed);
                        found = Some((g, r));
                    }
                }
            }
            (found, stats)
        };

        let outcomes: Vec<(Option<(u64, DecapResult)>, FastStats)> = if workers == 1 {
            vec![work()]
        } else {
            std::thread::scope(|sc| {
                let handles: Vec<_> = (0..workers).map(|_| sc.spawn(work)).collect();
                handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
            })
        };
        let mut stats = FastStats::default();
        let mut winner: Option<(u64, DecapResult)> = None;
        for (found, s) in outcomes {
            stats.merge(&s);
            if let Some((g, r)) = found {
                if winner.as_ref().is_none_or(|(wg, _)| g < *wg) {
                    winner = Some((g, r));
                }
            }
        }
        match winner {
            Some((_, r)) => (Ok(r), stats),
            None => (Err(Error::Exhausted { guesses: total }), stats),
        }
    }

    /// Visits guesses `range` in Gray order; returns the first success.
    fn run_block(&self, ses: &Session, cfg: &SessionConfig, path: Path, range: std::ops::Range<u64>, best: &AtomicU64, stats: &mut FastStats) -> Option<(u64, DecapResult)> {
        let v = self.sk.params().v;
        let exhaustive = matches!(path, Path::Fast(FastOptions { exhaustive: true, .. }));
        let start = range.start;
        let mut y_bar = BitVector::from_u64(v, gray(start));
        let mut m = self.specializer.matrix(&y_bar);
        let mut first = None;
        for g in range {
            if g > start {
                let bit = g.trailing_zeros() as usize;
                y_bar.flip(bit);
                self.specializer.flip(&mut m, bit);
            }
            if !exhaustive && g > best.load(Ordering::Relaxed) {
                break;
            }
            let c = self.specializer.constants(&y_bar);
            let consistent = match path {
                Path::Reference => consistent_columns_reference(&m, &c, &ses.w),
                Path::Fast(opts) => match self.consistent_columns_fast(ses, cfg, &m, &c, opts, stats) {
                    Some(cols) => cols,
                    None => continue,
                },
            };
            if first.is_some() {
                continue;
            }
            if let Some((plaintext, column)) = self.solve_candidates(ses, cfg, &y_bar, &m, &c, &consistent) {
                let r = DecapResult {
                    plaintext,
                    guess: y_bar.clone(),
                    column,
                    guesses_tried: g + 1,
                };
                if !exhaustive {
                    return Some((g, r));
                }
                best.fetch_min(g, Ordering::Relaxed);
                first = Some((g, r));
            }
        }
        first
    }

    /// θ-row test followed by the full dependency check, all from the Gray
    /// tables. `None` means the guess was discarded.
    fn consistent_columns_fast(&self, ses: &Session, cfg: &SessionConfig, m: &BitMatrix, c: &BitVector, opts: FastOptions, stats: &mut FastStats) -> Option<Vec<usize>> {
        let n = m.rows();
        let t = ses.w.cols();
        let tw = t.div_ceil(64);
        let mask = tail_mask(t);
        let mut builder = TranscriptBuilder::new(n, m.cols());
        let mut acc = vec![0u64; tw];
        let mut row = vec![0u64; tw];
        let mut deps = 0usize;
        let mut tested = false;
        stats.guesses += 1;

        let theta_test = |acc: &[u64], stats: &mut FastStats| -> bool {
            stats.columns_tested += t as u64;
            let covered: u64 = acc.iter().map(|w| w.count_ones() as u64).sum();
            stats.theta_survivors += t as u64 - covered;
            let full = acc[..tw - 1].iter().all(|&w| w == u64::MAX) && acc[tw - 1] == mask;
            if full {
                stats.aborted += 1;
                if opts.audit {
                    stats.audited += 1;
                    stats.discarded_consistent += consistent_columns_reference(m, c, &ses.w).len() as u64;
                }
            }
            full
        };

        for i in 0..n {
            let Some(mut e) = builder.push(i, m.row_words(i)) else {
                continue;
            };
            e[i / 64] ^= 1u64 << (i % 64);
            row.iter_mut().for_each(|w| *w = 0);
            for (h, table) in ses.tables.iter().enumerate() {
                let idx = extract_bits(&e, h * ses.s, table.chunk());
                if idx != 0 {
                    xor_words(&mut row, table.words(idx));
                }
            }
            if dot_words(&e, c.words()) {
                row.iter_mut().for_each(|w| *w = !*w);
                row[tw - 1] &= mask;
            }
            for (a, b) in acc.iter_mut().zip(&row) {
                *a |= b;
            }
            deps += 1;
            if deps == cfg.theta {
                tested = true;
                if theta_test(&acc, stats) {
                    return None;
                }
            }
        }
        if !tested && theta_test(&acc, stats) {
            return None;
        }
        let cols: Vec<usize> = (0..t).filter(|&k| (acc[k / 64] >> (k % 64)) & 1 == 0).collect();
        stats.consistent_columns += cols.len() as u64;
        Some(cols)
    }

    /// Solves the consistent columns in increasing order.
    fn solve_candidates(&self, ses: &Session, cfg: &SessionConfig, y_bar: &BitVector, m: &BitMatrix, c: &BitVector, cols: &[usize]) -> Option<(BitVector, usize)> {
        for &k in cols {
            let rhs = ses.columns[k].xor(c);
            let Ok(Some(sol)) = solve_affine(m, &rhs) else {
                continue;
            };
            for y_oil in sol.enumerate(SOLUTION_CAP) {
                let x = self.sk.s_inv().mul_vec(&y_bar.concat(&y_oil)).expect("n x n");
                if !cfg.verify_full || self.public_image(&x) == ses.batch.vectors()[k] {
                    return Some((x, k));
                }
            }
        }
        None
    }
}

/// Reference decapsulation; see [`Decapsulator::decapsulate`].
pub fn decapsulate(sk: &PrivateKey, batch: &CipherBatch, cfg: &SessionConfig) -> Result<DecapResult> {
    Decapsulator::new(sk).decapsulate(batch, cfg)
}

/// Fast decapsulation; see [`Decapsulator::decapsulate_fast`].
pub fn decapsulate_fast(sk: &PrivateKey, batch: &CipherBatch, cfg: &SessionConfig) -> Result<DecapResult> {
    Decapsulator::new(sk).decapsulate_fast(batch, cfg)
}

/// Worst-case word operations of the fast path:
/// `2^(v − log₂ t) · (⌈(n − v)/s⌉·θ + θ)`.
pub fn op_count_estimate(params: Params, cfg: &SessionConfig) -> u128 {
    let per_guess = (params.o().div_ceil(cfg.s) * cfg.theta + cfg.theta) as u128;
    (per_guess << params.v) / cfg.t.max(1) as u128
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::keys::keygen;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn rng(seed: u64) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(seed)
    }

    fn desk(seed: u64) -> (PublicKey, PrivateKey) {
        keygen(Params::new(40, 10, 80).unwrap(), &mut rng(seed)).unwrap()
    }

    #[test]
    fn config_validation() {
        let p = Params::new(40, 10, 80).unwrap();
        assert!(SessionConfig::default().validate(p).is_ok());
        for bad in [
            SessionConfig { t: 0, ..Default::default() },
            SessionConfig { t: 65, ..Default::default() },
            SessionConfig { theta: 0, ..Default::default() },
            SessionConfig { theta: 31, ..Default::default() },
            SessionConfig { s: 0, ..Default::default() },
            SessionConfig { s: 17, ..Default::default() },
        ] {
            assert!(bad.validate(p).is_err(), "{bad:?}");
        }
        assert!(SessionConfig { s: 7, ..Default::default() }.validate(p).is_ok());
    }

    #[test]
    fn encapsulate_shapes_and_determinism() {
        let (pk, _) = desk(1);
        let cfg = SessionConfig::default();
        let (b1, s1) = encapsulate(&pk, &cfg, &mut rng(2)).unwrap();
        let (b2, s2) = encapsulate(&pk, &cfg, &mut rng(2)).unwrap();
        assert_eq!(b1, b2);
        assert_eq!(s1, s2);
        assert_eq!(b1.t(), 64);
        assert!(b1.vectors().iter().all(|b| b.len() == 120));
        let distinct: HashSet<_> = s1.plaintexts.iter().collect();
        assert_eq!(distinct.len(), 64);
        let full = pk.full_system();
        for (a, b) in s1.plaintexts.iter().zip(b1.vectors()) {
            for (j, p) in full.polys().iter().enumerate() {
                assert_eq!(b.get(j), p.evaluate(a).unwrap());
            }
        }
        for (a, h) in s1.plaintexts.iter().zip(&s1.hashes) {
            assert_eq!(&confirmation_digest(a), h);
        }
    }

    #[test]
    fn batch_wire_format() {
        let (pk, _) = desk(3);
        let (b, _) = encapsulate(&pk, &SessionConfig::default(), &mut rng(4)).unwrap();
        let bytes = b.to_bytes();
        assert_eq!(bytes.len(), 12 + 64 * 15);
        assert_eq!(&bytes[..4], b"OLVB");
        assert_eq!(&bytes[4..8], &64u32.to_le_bytes());
        assert_eq!(&bytes[8..12], &120u32.to_le_bytes());
        assert_eq!(CipherBatch::from_bytes(&bytes).unwrap(), b);
        assert!(CipherBatch::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(CipherBatch::from_bytes(&bad).is_err());
        let odd = CipherBatch::new(13, vec![BitVector::ones(13)]).unwrap();
        let mut ob = odd.to_bytes();
        assert_eq!(CipherBatch::from_bytes(&ob).unwrap(), odd);
        ob[13] |= 0x80;
        assert!(CipherBatch::from_bytes(&ob).is_err());
    }

    #[test]
    fn strip_lambda_recovers_central_images() {
        let (pk, sk) = desk(5);
        let (b, st) = encapsulate(&pk, &SessionConfig::default(), &mut rng(6)).unwrap();
        let w = strip_lambda(&sk, &b).unwrap();
        assert_eq!((w.rows(), w.cols()), (40, 64));
        for (i, a) in st.plaintexts.iter().enumerate() {
            let y = sk.s().mul_vec(a).unwrap();
            assert_eq!(w.col(i), sk.central().evaluate(&y).unwrap());
        }
        let zero = CipherBatch::new(120, vec![public_evaluate(&pk, &BitVector::zeros(40)).unwrap()]).unwrap();
        assert_eq!(strip_lambda(&sk, &zero).unwrap().col(0), sk.composed().evaluate(&BitVector::zeros(40)).unwrap());
        assert!(strip_lambda(&sk, &CipherBatch::new(119, vec![]).unwrap()).is_err());
    }

    #[test]
    fn strip_without_lambda_is_identity_on_head() {
        use crate::keys::{keygen_weakened, Weakening};
        let (pk, sk) = keygen_weakened(Params::new(16, 4, 16).unwrap(), Weakening::NoLambda, &mut rng(7)).unwrap();
        let (b, _) = encapsulate(&pk, &SessionConfig::default(), &mut rng(8)).unwrap();
        let w = strip_lambda(&sk, &b).unwrap();
        for (i, bi) in b.vectors().iter().enumerate() {
            assert_eq!(w.col(i), bi.slice(0, 16));
        }
    }

    #[test]
    fn specialization_identity_exhaustive() {
        let (_, sk) = keygen(Params::new(8, 3, 8).unwrap(), &mut rng(9)).unwrap();
        let mut g = rng(10);
        let (m0, c0) = specialize_vinegar(&sk, &BitVector::zeros(3)).unwrap();
        for (j, p) in sk.central().polys().iter().enumerate() {
            assert_eq!(m0.row(j), p.lin().slice(3, 5));
            assert_eq!(c0.get(j), p.constant());
        }
        for _ in 0..10 {
            let y_bar = BitVector::random(3, &mut g);
            let (m, c) = specialize_vinegar(&sk, &y_bar).unwrap();
            for yo in 0..32 {
                let y_oil = BitVector::from_u64(5, yo);
                let lhs = sk.central().evaluate(&y_bar.concat(&y_oil)).unwrap();
                assert_eq!(lhs, m.mul_vec(&y_oil).unwrap().xor(&c));
            }
        }
    }

    #[test]
    fn guess_once_correct_and_wrong() {
        let (pk, sk) = desk(11);
        let cfg = SessionConfig::default();
        let (b, st) = encapsulate(&pk, &cfg, &mut rng(12)).unwrap();
        let w = strip_lambda(&sk, &b).unwrap();
        let y = sk.s().mul_vec(&st.plaintexts[17]).unwrap();
        let k = guess_once(&sk, &w, &y.slice(0, 10), &cfg).unwrap();
        assert!(k.is_some_and(|k| k <= 17));

        let single = CipherBatch::new(120, vec![BitVector::random(120, &mut rng(13))]).unwrap();
        let w1 = strip_lambda(&sk, &single).unwrap();
        let y_bar = BitVector::random(10, &mut rng(14));
        let (m, c) = specialize_vinegar(&sk, &y_bar).unwrap();
        if solve_affine(&m, &w1.col(0).xor(&c)).unwrap().is_none() {
            assert_eq!(guess_once(&sk, &w1, &y_bar, &cfg).unwrap(), None);
        }
    }

    #[test]
    fn guess_once_no_false_positives_with_many_dependent_rows() {
        // n − v = 20 oil columns against n = 60 rows: at least 40 dependent rows.
        let params = Params::relaxed(60, 40, 60).unwrap();
        let (pk, sk) = crate::keys::keygen_weakened(params, crate::keys::Weakening::UncheckedLambda, &mut rng(15)).unwrap();
        let cfg = SessionConfig::default();
        let mut g = rng(16);
        let plaintexts: Vec<BitVector> = (0..64).map(|_| BitVector::random(60, &mut g)).collect();
        let b = CipherBatch::new(120, plaintexts.iter().map(|a| public_evaluate(&pk, a).unwrap()).collect()).unwrap();
        let w = strip_lambda(&sk, &b).unwrap();
        let truth: HashSet<BitVector> = plaintexts.iter().map(|a| sk.s().mul_vec(a).unwrap().slice(0, 40)).collect();
        let mut hits = 0;
        for _ in 0..1000 {
            let y_bar = BitVector::random(40, &mut g);
            if truth.contains(&y_bar) {
                continue;
            }
            hits += guess_once(&sk, &w, &y_bar, &cfg).unwrap().is_some() as u32;
        }
        assert_eq!(hits, 0);
    }

    #[test]
    fn round_trip_both_paths() {
        let cfg = SessionConfig::default();
        for seed in 0..5 {
            let (pk, sk) = desk(100 + seed);
            let (b, st) = encapsulate(&pk, &cfg, &mut rng(200 + seed)).unwrap();
            let bob = Decapsulator::new(&sk);
            let r = bob.decapsulate(&b, &cfg).unwrap();
            let f = bob.decapsulate_fast(&b, &cfg).unwrap();
            assert_eq!(r, f);
            assert_eq!(public_evaluate(&pk, &r.plaintext).unwrap(), b.vectors()[r.column]);
            assert!(st.plaintexts.contains(&r.plaintext));
            let secret = confirm(&r, &st).unwrap();
            assert_eq!(secret, shared_secret(&r.plaintext));
            assert!(r.guesses_tried <= 1 << 10);
        }
    }

    #[test]
    fn thread_count_does_not_change_result() {
        let (pk, sk) = desk(21);
        let base = SessionConfig::default();
        let (b, _) = encapsulate(&pk, &base, &mut rng(22)).unwrap();
        let one = decapsulate_fast(&sk, &b, &base).unwrap();
        for threads in [2, 3, 8] {
            let cfg = SessionConfig { threads, ..base };
            assert_eq!(decapsulate_fast(&sk, &b, &cfg).unwrap(), one);
            assert_eq!(decapsulate(&sk, &b, &cfg).unwrap(), one);
        }
    }

    #[test]
    fn zero_batch_exhausts() {
        let cfg = SessionConfig::default();
        let mut exhausted = 0;
        for seed in 0..20 {
            let (_, sk) = keygen(Params::new(24, 6, 24).unwrap(), &mut rng(300 + seed)).unwrap();
            let b = CipherBatch::new(48, vec![BitVector::zeros(48); 64]).unwrap();
            if let Err(Error::Exhausted { guesses }) = decapsulate_fast(&sk, &b, &cfg) {
                assert_eq!(guesses, 64);
                exhausted += 1;
            }
        }
        assert_eq!(exhausted, 20);
    }

    #[test]
    fn verify_off_agrees_when_its_answer_verifies() {
        let on = SessionConfig::default();
        let off = SessionConfig { verify_full: false, ..on };
        for seed in 0..10 {
            let (pk, sk) = desk(400 + seed);
            let (b, _) = encapsulate(&pk, &on, &mut rng(500 + seed)).unwrap();
            let bob = Decapsulator::new(&sk);
            let a = bob.decapsulate(&b, &on).unwrap();
            let x = bob.decapsulate(&b, &off).unwrap();
            assert!(x.guesses_tried <= a.guesses_tried);
            if public_evaluate(&pk, &x.plaintext).unwrap() == b.vectors()[x.column] {
                assert_eq!(x, a);
            }
        }
    }

    #[test]
    fn confirm_rejects_tampering() {
        let (pk, sk) = desk(31);
        let cfg = SessionConfig::default();
        let (b, st) = encapsulate(&pk, &cfg, &mut rng(32)).unwrap();
        let mut r = decapsulate_fast(&sk, &b, &cfg).unwrap();
        r.plaintext.flip(0);
        assert_eq!(confirm(&r, &st), None);
    }

    #[test]
    fn audit_finds_no_discarded_solutions() {
        let cfg = SessionConfig::default();
        let (pk, sk) = desk(41);
        let (b, _) = encapsulate(&pk, &cfg, &mut rng(42)).unwrap();
        let opts = FastOptions { audit: true, exhaustive: true };
        let (r, stats) = Decapsulator::new(&sk).decapsulate_fast_instrumented(&b, &cfg, opts);
        r.unwrap();
        assert_eq!(stats.guesses, 1024);
        assert_eq!(stats.audited, stats.aborted);
        assert_eq!(stats.discarded_consistent, 0);
        assert!(stats.consistent_columns >= 64);
    }

    #[test]
    fn op_count_formula() {
        let cfg = SessionConfig::default();
        assert_eq!(op_count_estimate(Params::SL1, &cfg), 79_691_776);
        assert_eq!(op_count_estimate(Params::SL1, &SessionConfig { theta: 0, ..cfg }), 0);
        let doubled = op_count_estimate(Params::SL1, &SessionConfig { t: 128, ..cfg });
        assert_eq!(2 * doubled, 79_691_776);
    }
}
