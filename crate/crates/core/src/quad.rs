//! Quadratic polynomials over GF(2) with the field equations `x_i² = x_i`
//! applied, Oil & Vinegar structure, and polar forms.
//!
//! A polynomial is stored as a strictly upper-triangular matrix `A` (bit
//! `(i, j)`, `i < j`, is the coefficient of `x_i x_j`), a linear vector `b` and
//! a constant `c`. Square terms are folded into `b` on construction, so the
//! representation is canonical and equality is bitwise.
//!
//! Canonical monomial order, used by seed expansion and serialization: pairs
//! `(i, j)` with `i < j` in lexicographic order, then `x_0..x_{n-1}`, then the
//! constant.

use rand::RngCore;

use crate::error::{ensure_dim, Error, Result};
use crate::f2::mul::{mat_mul, MulStrategy};
use crate::f2::vector::{dot_words, xor_words};
use crate::f2::{BitMatrix, BitVector};

/// Variable split for Oil & Vinegar polynomials: coordinates `0..v` are
/// vinegar, `v..n` are oil.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct OvShape {
    pub n: usize,
    pub v: usize,
}

impl OvShape {
    pub fn new(n: usize, v: usize) -> Result<Self> {
        if v == 0 || v >= n {
            return Err(Error::InvalidParams(format!(
                "OV shape needs 1 <= v < n, got n={n}, v={v}"
            )));
        }
        Ok(Self { n, v })
    }

    pub fn oil(&self) -> usize {
        self.n - self.v
    }

    /// Basis `e_v..e_{n-1}` of the oil subspace.
    pub fn oil_basis(&self) -> Vec<BitVector> {
        (self.v..self.n).map(|i| BitVector::unit(self.n, i)).collect()
    }

    /// Number of quadratic monomials allowed in an OV polynomial.
    pub fn allowed_pairs(&self) -> usize {
        let (n, v) = (self.n, self.v);
        v * n - v * (v + 1) / 2
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct QuadraticPoly {
    n: usize,
    quad: BitMatrix,
    lin: BitVector,
    constant: bool,
}

impl QuadraticPoly {
    pub fn zero(n: usize) -> Self {
        Self {
            n,
            quad: BitMatrix::zeros(n, n),
            lin: BitVector::zeros(n),
            constant: false,
        }
    }

    /// Canonicalizes an arbitrary coefficient matrix: `A[i][j]` and `A[j][i]`
    /// both contribute to `x_i x_j`, and the diagonal folds into the linear part.
    pub fn from_parts(quad: &BitMatrix, lin: BitVector, constant: bool) -> Result<Self> {
        let n = lin.len();
        ensure_dim("QuadraticPoly quad rows", n, quad.rows())?;
        ensure_dim("QuadraticPoly quad cols", n, quad.cols())?;
        let mut p = Self {
            n,
            quad: BitMatrix::zeros(n, n),
            lin,
            constant,
        };
        for i in 0..n {
            for j in quad.row(i).iter_ones() {
                p.add_monomial(i, j);
            }
        }
        Ok(p)
    }

    /// Builds a polynomial from a list of monomials; `(i, i)` means `x_i`.
    pub fn from_monomials(n: usize, pairs: &[(usize, usize)], linear: &[usize], constant: bool) -> Self {
        let mut p = Self::zero(n);
        for &(i, j) in pairs {
            p.add_monomial(i, j);
        }
        for &i in linear {
            p.lin.flip(i);
        }
        p.constant = constant;
        p
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// The strictly upper-triangular quadratic coefficient matrix.
    #[inline]
    pub fn quad(&self) -> &BitMatrix {
        &self.quad
    }

    #[inline]
    pub fn lin(&self) -> &BitVector {
        &self.lin
    }

    #[inline]
    pub fn constant(&self) -> bool {
        self.constant
    }

    pub fn set_constant(&mut self, c: bool) {
        self.constant = c;
    }

    pub fn lin_mut(&mut self) -> &mut BitVector {
        &mut self.lin
    }

    /// Coefficient of `x_i x_j` (`i != j`).
    pub fn pair(&self, i: usize, j: usize) -> bool {
        let (a, b) = (i.min(j), i.max(j));
        a != b && self.quad.get(a, b)
    }

    pub fn set_pair(&mut self, i: usize, j: usize, value: bool) {
        assert_ne!(i, j, "x_i x_i folds into x_i; use lin_mut");
        self.quad.set(i.min(j), i.max(j), value);
    }

    /// Adds `x_i x_j`; a square adds `x_i`.
    pub fn add_monomial(&mut self, i: usize, j: usize) {
        if i == j {
            self.lin.flip(i);
        } else {
            self.quad.flip(i.min(j), i.max(j));
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        assert_eq!(self.n, other.n);
        self.quad.add_assign(&other.quad);
        self.lin.xor_assign(&other.lin);
        self.constant ^= other.constant;
    }

    /// Drops the linear part and constant.
    pub fn quadratic_part(&self) -> Self {
        Self {
            n: self.n,
            quad: self.quad.clone(),
            lin: BitVector::zeros(self.n),
            constant: false,
        }
    }

    pub fn is_homogeneous(&self) -> bool {
        self.lin.is_zero() && !self.constant
    }

    pub fn evaluate(&self, x: &BitVector) -> Result<bool> {
        ensure_dim("QuadraticPoly::evaluate", self.n, x.len())?;
        Ok(self.eval_unchecked(x.words()))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[u64]) -> bool {
        let mut acc = 0u64;
        for (wi, &w) in x.iter().enumerate() {
            let mut w = w;
            while w != 0 {
                let i = wi * 64 + w.trailing_zeros() as usize;
                w &= w - 1;
                for (a, b) in self.quad.row_words(i).iter().zip(x) {
                    acc ^= a & b;
                }
            }
        }
        let quad = acc.count_ones() & 1 == 1;
        quad ^ dot_words(self.lin.words(), x) ^ self.constant
    }

    /// `A + Aᵗ`: symmetric with zero diagonal.
    pub fn polar_matrix(&self) -> BitMatrix {
        self.quad.add(&self.quad.transpose()).expect("square")
    }

    /// `p(x + y) + p(x) + p(y) + p(0)`, computed as `xᵗ(A + Aᵗ)y`.
    pub fn polar_eval(&self, x: &BitVector, y: &BitVector) -> Result<bool> {
        ensure_dim("QuadraticPoly::polar_eval x", self.n, x.len())?;
        ensure_dim("QuadraticPoly::polar_eval y", self.n, y.len())?;
        let mut acc = 0u64;
        for i in x.iter_ones() {
            for (a, b) in self.quad.row_words(i).iter().zip(y.words()) {
                acc ^= a & b;
            }
        }
        for i in y.iter_ones() {
            for (a, b) in self.quad.row_words(i).iter().zip(x.words()) {
                acc ^= a & b;
            }
        }
        Ok(acc.count_ones() & 1 == 1)
    }

    /// The polynomial `x ↦ p(S·x)`.
    pub fn compose_right_linear(&self, s: &BitMatrix) -> Result<Self> {
        ensure_dim("compose_right_linear rows", self.n, s.rows())?;
        ensure_dim("compose_right_linear cols", self.n, s.cols())?;
        let a_s = mat_mul(&self.quad, s, MulStrategy::FourRussians)?;
        let full = mat_mul(&s.transpose(), &a_s, MulStrategy::FourRussians)?;
        let lin = s.vec_mul(&self.lin)?;
        Self::from_parts(&full, lin, self.constant)
    }

    pub fn is_ov(&self, shape: OvShape) -> bool {
        shape.n == self.n && (shape.v..self.n).all(|i| self.quad.row_words(i).iter().all(|&w| w == 0))
    }

    /// Uniform coefficients on every monomial.
    pub fn random<R: RngCore + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self::random_rows(n, n, rng)
    }

    /// Uniform coefficients on the monomials an OV polynomial may carry: pairs
    /// with at least one vinegar index, every linear term, and the constant.
    pub fn random_ov<R: RngCore + ?Sized>(shape: OvShape, rng: &mut R) -> Self {
        Self::random_rows(shape.n, shape.v, rng)
    }

    fn random_rows<R: RngCore + ?Sized>(n: usize, quad_rows: usize, rng: &mut R) -> Self {
        let mut quad = BitMatrix::zeros(n, n);
        for i in 0..quad_rows {
            let row = BitVector::random(n, rng);
            let mut masked = BitVector::zeros(n);
            for j in row.iter_ones().filter(|&j| j > i) {
                masked.set(j, true);
            }
            quad.set_row(i, &masked);
        }
        let lin = BitVector::random(n, rng);
        let constant = rng.next_u32() & 1 == 1;
        Self {
            n,
            quad,
            lin,
            constant,
        }
    }

    /// Coefficients in canonical monomial order.
    pub fn coefficient_bits(&self) -> BitVector {
        let n = self.n;
        let mut out = BitVector::zeros(n * (n - 1) / 2 + n + 1);
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                if self.quad.get(i, j) {
                    out.set(k, true);
                }
                k += 1;
            }
        }
        for i in self.lin.iter_ones() {
            out.set(k + i, true);
        }
        out.set(k + n, self.constant);
        out
    }

    /// Inverse of [`QuadraticPoly::coefficient_bits`].
    pub fn from_coefficient_bits(n: usize, bits: &BitVector) -> Result<Self> {
        ensure_dim("QuadraticPoly::from_coefficient_bits", n * n.saturating_sub(1) / 2 + n + 1, bits.len())?;
        Ok(Self::from_bit_source(n, n, |k| bits.get(k)))
    }

    /// Fills coefficients from `next(k)` for the `k`-th allowed monomial in
    /// canonical order, restricted to pairs whose smaller index is below
    /// `quad_rows`. Used for full (`quad_rows = n`) and OV (`quad_rows = v`)
    /// layouts.
    pub(crate) fn from_bit_source(n: usize, quad_rows: usize, mut next: impl FnMut(usize) -> bool) -> Self {
        let mut p = Self::zero(n);
        let mut k = 0;
        for i in 0..quad_rows.min(n) {
            let mut row = vec![0u64; n.div_ceil(64)];
            for j in i + 1..n {
                if next(k) {
                    row[j / 64] |= 1u64 << (j % 64);
                }
                k += 1;
            }
            xor_words(p.quad.row_words_mut(i), &row);
        }
        for i in 0..n {
            if next(k) {
                p.lin.set(i, true);
            }
            k += 1;
        }
        p.constant = next(k);
        p
    }

    /// Number of coefficients in the layout used by `from_bit_source`.
    pub(crate) fn layout_len(n: usize, quad_rows: usize) -> usize {
        let r = quad_rows.min(n);
        r * n - r * (r + 1) / 2 + n + 1
    }

    /// Coefficients of the `from_bit_source` layout.
    pub(crate) fn layout_bits(&self, quad_rows: usize) -> BitVector {
        let n = self.n;
        let r = quad_rows.min(n);
        let mut out = BitVector::zeros(Self::layout_len(n, r));
        let mut k = 0;
        for i in 0..r {
            for j in i + 1..n {
                if self.quad.get(i, j) {
                    out.set(k, true);
                }
                k += 1;
            }
        }
        for i in self.lin.iter_ones() {
            out.set(k + i, true);
        }
        out.set(k + n, self.constant);
        out
    }
}

impl std::fmt::Debug for QuadraticPoly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut terms = Vec::new();
        for i in 0..self.n {
            for j in self.quad.row(i).iter_ones() {
                terms.push(format!("x{i}x{j}"));
            }
        }
        for i in self.lin.iter_ones() {
            terms.push(format!("x{i}"));
        }
        if self.constant {
            terms.push("1".into());
        }
        if terms.is_empty() {
            terms.push("0".into());
        }
        write!(f, "{}", terms.join(" + "))
    }
}

/// An ordered list of quadratic polynomials in the same `n` variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuadraticSystem {
    n: usize,
    polys: Vec<QuadraticPoly>,
}

impl QuadraticSystem {
    pub fn new(n: usize, polys: Vec<QuadraticPoly>) -> Result<Self> {
        for p in &polys {
            ensure_dim("QuadraticSystem member variables", n, p.n())?;
        }
        Ok(Self { n, polys })
    }

    pub fn empty(n: usize) -> Self {
        Self { n, polys: Vec::new() }
    }

    pub fn random<R: RngCore + ?Sized>(n: usize, count: usize, rng: &mut R) -> Self {
        Self {
            n,
            polys: (0..count).map(|_| QuadraticPoly::random(n, rng)).collect(),
        }
    }

    pub fn random_ov<R: RngCore + ?Sized>(shape: OvShape, count: usize, rng: &mut R) -> Self {
        Self {
            n: shape.n,
            polys: (0..count).map(|_| QuadraticPoly::random_ov(shape, rng)).collect(),
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.polys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polys.is_empty()
    }

    pub fn polys(&self) -> &[QuadraticPoly] {
        &self.polys
    }

    pub fn into_polys(self) -> Vec<QuadraticPoly> {
        self.polys
    }

    pub fn get(&self, i: usize) -> &QuadraticPoly {
        &self.polys[i]
    }

    pub fn push(&mut self, p: QuadraticPoly) -> Result<()> {
        ensure_dim("QuadraticSystem::push", self.n, p.n())?;
        self.polys.push(p);
        Ok(())
    }

    /// `self` followed by `other`.
    pub fn stack(&self, other: &Self) -> Result<Self> {
        ensure_dim("QuadraticSystem::stack", self.n, other.n)?;
        let mut polys = self.polys.clone();
        polys.extend(other.polys.iter().cloned());
        Ok(Self { n: self.n, polys })
    }

    pub fn evaluate(&self, x: &BitVector) -> Result<BitVector> {
        ensure_dim("QuadraticSystem::evaluate", self.n, x.len())?;
        let mut out = BitVector::zeros(self.polys.len());
        for (i, p) in self.polys.iter().enumerate() {
            if p.eval_unchecked(x.words()) {
                out.set(i, true);
            }
        }
        Ok(out)
    }

    /// Vector of polar values `p_i'(x, y)`.
    pub fn polar_eval(&self, x: &BitVector, y: &BitVector) -> Result<BitVector> {
        let mut out = BitVector::zeros(self.polys.len());
        for (i, p) in self.polys.iter().enumerate() {
            if p.polar_eval(x, y)? {
                out.set(i, true);
            }
        }
        Ok(out)
    }

    pub fn compose_right_linear(&self, s: &BitMatrix) -> Result<Self> {
        let polys = self
            .polys
            .iter()
            .map(|p| p.compose_right_linear(s))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n: self.n, polys })
    }

    /// Left linear transform: output `i` is `Σ_j t[i][j] · p_j`.
    pub fn left_transform(&self, t: &BitMatrix) -> Result<Self> {
        ensure_dim("QuadraticSystem::left_transform", self.polys.len(), t.cols())?;
        let polys = (0..t.rows())
            .map(|i| {
                let mut acc = QuadraticPoly::zero(self.n);
                for j in t.row(i).iter_ones() {
                    acc.add_assign(&self.polys[j]);
                }
                acc
            })
            .collect();
        Ok(Self { n: self.n, polys })
    }

    /// Coefficientwise sum of two systems of equal length.
    pub fn add(&self, other: &Self) -> Result<Self> {
        ensure_dim("QuadraticSystem::add", self.polys.len(), other.polys.len())?;
        ensure_dim("QuadraticSystem::add variables", self.n, other.n)?;
        let polys = self
            .polys
            .iter()
            .zip(&other.polys)
            .map(|(a, b)| {
                let mut c = a.clone();
                c.add_assign(b);
                c
            })
            .collect();
        Ok(Self { n: self.n, polys })
    }

    pub fn quadratic_parts(&self) -> Self {
        Self {
            n: self.n,
            polys: self.polys.iter().map(QuadraticPoly::quadratic_part).collect(),
        }
    }

    /// The `len × n` matrix whose row `i` is `(A_i + A_iᵗ)·a`: the linear
    /// system `x ↦ P'(a, x)`.
    pub fn polar_rows_at(&self, a: &BitVector) -> Result<BitMatrix> {
        ensure_dim("QuadraticSystem::polar_rows_at", self.n, a.len())?;
        let mut m = BitMatrix::zeros(self.polys.len(), self.n);
        for (r, p) in self.polys.iter().enumerate() {
            // Row r, column j: Σ_i a_i (A_ij + A_ji) = (aᵗA)_j + (A a)_j.
            let mut row = p.quad.vec_mul(a)?;
            row.xor_assign(&p.quad.mul_vec(a)?);
            m.set_row(r, &row);
        }
        Ok(m)
    }
}

/// True iff every polar form of `sys` vanishes on `span(basis) × span(basis)`.
///
/// Over GF(2) with `x_i² = x_i` folded into the linear part, the quadratic part
/// of a polynomial is only defined up to linear terms once coordinates change,
/// so vanishing is tested on the (basis invariant) polar forms: all basis pairs.
pub fn vanishes_on_subspace(sys: &QuadraticSystem, basis: &[BitVector]) -> Result<bool> {
    for b in basis {
        ensure_dim("vanishes_on_subspace basis vector", sys.n(), b.len())?;
    }
    for (i, x) in basis.iter().enumerate() {
        for y in &basis[i + 1..] {
            for p in sys.polys() {
                if p.polar_eval(x, y)? {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}
