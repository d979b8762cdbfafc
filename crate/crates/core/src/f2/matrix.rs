use std::fmt;

use rand::RngCore;

use super::vector::{dot_words, tail_mask, words_for, xor_words, BitVector};
use crate::error::{ensure_dim, Result};

/// A dense GF(2) matrix stored row-major, each row packed like a [`BitVector`]
/// of length `cols` into `stride` words.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = words_for(cols);
        Self {
            rows,
            cols,
            stride,
            data: vec![0; rows * stride],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    pub fn random<R: RngCore + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let mut m = Self::zeros(rows, cols);
        let mask = tail_mask(cols);
        for r in 0..rows {
            let row = m.row_words_mut(r);
            for w in row.iter_mut() {
                *w = rng.next_u64();
            }
            if let Some(last) = row.last_mut() {
                *last &= mask;
            }
        }
        m
    }

    /// Stacks row vectors; all must share `cols`.
    pub fn from_rows(cols: usize, rows: &[BitVector]) -> Result<Self> {
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            ensure_dim("BitMatrix::from_rows", cols, r.len())?;
            m.row_words_mut(i).copy_from_slice(r.words());
        }
        Ok(m)
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_cols(rows: usize, cols: &[BitVector]) -> Result<Self> {
        Ok(Self::from_rows(rows, cols)?.transpose())
    }

    /// Parses rows of `0`/`1` strings, e.g. `["110", "011"]`.
    pub fn from_bit_strs(rows: &[&str]) -> Self {
        let vs: Vec<BitVector> = rows.iter().map(|s| BitVector::from_bit_str(s)).collect();
        let cols = vs.first().map_or(0, BitVector::len);
        Self::from_rows(cols, &vs).expect("rows of equal length")
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn stride(&self) -> usize {
        self.stride
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        assert!(r < self.rows && c < self.cols, "index ({r},{c}) out of range");
        (self.data[r * self.stride + c / 64] >> (c % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        assert!(r < self.rows && c < self.cols, "index ({r},{c}) out of range");
        let w = &mut self.data[r * self.stride + c / 64];
        let mask = 1u64 << (c % 64);
        if value {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, r: usize, c: usize) {
        assert!(r < self.rows && c < self.cols, "index ({r},{c}) out of range");
        self.data[r * self.stride + c / 64] ^= 1u64 << (c % 64);
    }

    #[inline]
    pub fn row_words(&self, r: usize) -> &[u64] {
        &self.data[r * self.stride..(r + 1) * self.stride]
    }

    /// Callers must keep the bits beyond `cols` zero.
    #[inline]
    pub(crate) fn row_words_mut(&mut self, r: usize) -> &mut [u64] {
        &mut self.data[r * self.stride..(r + 1) * self.stride]
    }

    #[inline]
    pub(crate) fn data_mut(&mut self) -> &mut [u64] {
        &mut self.data
    }

    pub fn row(&self, r: usize) -> BitVector {
        BitVector::from_words(self.cols, self.row_words(r).to_vec())
    }

    pub fn set_row(&mut self, r: usize, v: &BitVector) {
        assert_eq!(v.len(), self.cols, "row length mismatch");
        self.row_words_mut(r).copy_from_slice(v.words());
    }

    pub fn col(&self, c: usize) -> BitVector {
        let mut v = BitVector::zeros(self.rows);
        for r in 0..self.rows {
            if self.get(r, c) {
                v.set(r, true);
            }
        }
        v
    }

    pub fn row_vectors(&self) -> Vec<BitVector> {
        (0..self.rows).map(|r| self.row(r)).collect()
    }

    /// `row[dst] ^= row[src]`.
    #[inline]
    pub fn xor_row_into(&mut self, src: usize, dst: usize) {
        if src == dst {
            self.row_words_mut(dst).fill(0);
            return;
        }
        let s = self.stride;
        let (a, b) = if src < dst {
            let (lo, hi) = self.data.split_at_mut(dst * s);
            (&lo[src * s..(src + 1) * s], &mut hi[..s])
        } else {
            let (lo, hi) = self.data.split_at_mut(src * s);
            (&hi[..s], &mut lo[dst * s..(dst + 1) * s])
        };
        xor_words(b, a);
    }

    pub fn xor_row_vector(&mut self, r: usize, v: &BitVector) {
        assert_eq!(v.len(), self.cols);
        xor_words(self.row_words_mut(r), v.words());
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let s = self.stride;
        for k in 0..s {
            self.data.swap(a * s + k, b * s + k);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&w| w == 0)
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for (wi, &w) in self.row_words(r).iter().enumerate() {
                let mut w = w;
                while w != 0 {
                    let c = wi * 64 + w.trailing_zeros() as usize;
                    w &= w - 1;
                    t.data[c * t.stride + r / 64] |= 1u64 << (r % 64);
                }
            }
        }
        t
    }

    /// Coefficientwise sum (xor).
    pub fn add(&self, other: &Self) -> Result<Self> {
        ensure_dim("BitMatrix::add rows", self.rows, other.rows)?;
        ensure_dim("BitMatrix::add cols", self.cols, other.cols)?;
        let mut out = self.clone();
        xor_words(&mut out.data, &other.data);
        Ok(out)
    }

    pub fn add_assign(&mut self, other: &Self) {
        assert!(self.rows == other.rows && self.cols == other.cols);
        xor_words(&mut self.data, &other.data);
    }

    /// `M·x`.
    pub fn mul_vec(&self, x: &BitVector) -> Result<BitVector> {
        ensure_dim("BitMatrix::mul_vec", self.cols, x.len())?;
        let mut out = BitVector::zeros(self.rows);
        for r in 0..self.rows {
            if dot_words(self.row_words(r), x.words()) {
                out.set(r, true);
            }
        }
        Ok(out)
    }

    /// `xᵗ·M`, i.e. the xor of the rows selected by `x`.
    pub fn vec_mul(&self, x: &BitVector) -> Result<BitVector> {
        ensure_dim("BitMatrix::vec_mul", self.rows, x.len())?;
        let mut acc = vec![0u64; self.stride];
        for r in x.iter_ones() {
            xor_words(&mut acc, self.row_words(r));
        }
        Ok(BitVector::from_words(self.cols, acc))
    }

    /// Columns `start..start + len` as a new matrix.
    pub fn col_block(&self, start: usize, len: usize) -> Self {
        assert!(start + len <= self.cols);
        let mut out = Self::zeros(self.rows, len);
        for r in 0..self.rows {
            let v = self.row(r).slice(start, len);
            out.set_row(r, &v);
        }
        out
    }

    /// Rows `start..start + len` as a new matrix.
    pub fn row_block(&self, start: usize, len: usize) -> Self {
        assert!(start + len <= self.rows);
        Self {
            rows: len,
            cols: self.cols,
            stride: self.stride,
            data: self.data[start * self.stride..(start + len) * self.stride].to_vec(),
        }
    }

    /// `[A | B]`.
    pub fn hconcat(&self, other: &Self) -> Result<Self> {
        ensure_dim("BitMatrix::hconcat", self.rows, other.rows)?;
        let rows: Vec<BitVector> = (0..self.rows)
            .map(|r| self.row(r).concat(&other.row(r)))
            .collect();
        Self::from_rows(self.cols + other.cols, &rows)
    }

    /// `[A ; B]`.
    pub fn vconcat(&self, other: &Self) -> Result<Self> {
        ensure_dim("BitMatrix::vconcat", self.cols, other.cols)?;
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Self {
            rows: self.rows + other.rows,
            cols: self.cols,
            stride: self.stride,
            data,
        })
    }

    /// Row-major bit packing with every row padded to a byte boundary.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.rows * self.cols.div_ceil(8));
        for r in 0..self.rows {
            out.extend(self.row(r).to_bytes());
        }
        out
    }

    pub fn from_bytes(rows: usize, cols: usize, bytes: &[u8]) -> Result<Self> {
        let rb = cols.div_ceil(8);
        ensure_dim("BitMatrix::from_bytes", rows * rb, bytes.len())?;
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            let v = BitVector::from_bytes(cols, &bytes[r * rb..(r + 1) * rb]);
            m.set_row(r, &v);
        }
        Ok(m)
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {}", self.row(r))?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn transpose_is_involution() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let m = BitMatrix::random(70, 131, &mut rng);
        assert_eq!(m.transpose().transpose(), m);
        assert_eq!(m.transpose().get(100, 5), m.get(5, 100));
    }

    #[test]
    fn xor_row_into_both_directions() {
        let mut m = BitMatrix::from_bit_strs(&["110", "011"]);
        m.xor_row_into(0, 1);
        assert_eq!(m.row(1).to_string(), "101");
        m.xor_row_into(1, 0);
        assert_eq!(m.row(0).to_string(), "011");
    }

    #[test]
    fn mul_vec_matches_vec_mul_of_transpose() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let m = BitMatrix::random(33, 90, &mut rng);
        let x = BitVector::random(90, &mut rng);
        assert_eq!(m.mul_vec(&x).unwrap(), m.transpose().vec_mul(&x).unwrap());
    }
}
