//! Gray-code enumeration and the table of all `2^s` combinations of `s`
//! vectors used by the Four Russians routines.

use super::vector::{words_for, xor_words, BitVector};
use crate::error::{Error, Result};

/// Largest supported chunk size.
pub const MAX_CHUNK: usize = 16;

/// The `i`-th word of the reflected binary Gray code.
#[inline]
pub const fn gray(i: u64) -> u64 {
    i ^ (i >> 1)
}

/// Bit that changes between `gray(i - 1)` and `gray(i)`, for `i >= 1`.
#[inline]
pub const fn gray_flip(i: u64) -> u32 {
    i.trailing_zeros()
}

/// Iterates `(index, flipped_bit)` for `index` in `1..2^bits`; the state before
/// the first item is the all-zero word.
pub fn gray_steps(bits: u32) -> impl Iterator<Item = (u64, u32)> {
    let end = if bits >= 64 { u64::MAX } else { 1u64 << bits };
    (1..end).map(|i| (i, gray_flip(i)))
}

/// All `2^s` linear combinations of `s` vectors. Entry `e` holds
/// `Σ_j e_j · rows[j]`, with bit `j` of `e` selecting `rows[j]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayTable {
    chunk: usize,
    width: usize,
    stride: usize,
    data: Vec<u64>,
    xors: usize,
}

impl GrayTable {
    /// Builds the table from `k <= MAX_CHUNK` packed rows of `width` bits
    /// using exactly `2^k - 1` row xors.
    pub(crate) fn build(width: usize, rows: &[&[u64]]) -> Self {
        let k = rows.len();
        debug_assert!(k <= MAX_CHUNK);
        let stride = words_for(width);
        let mut data = vec![0u64; stride << k];
        let mut prev = 0usize;
        let mut xors = 0;
        for (i, bit) in gray_steps(k as u32) {
            let cur = gray(i) as usize;
            let (lo, hi) = if prev < cur {
                let (a, b) = data.split_at_mut(cur * stride);
                (&a[prev * stride..(prev + 1) * stride], &mut b[..stride])
            } else {
                let (a, b) = data.split_at_mut(prev * stride);
                (&b[..stride], &mut a[cur * stride..(cur + 1) * stride])
            };
            hi.copy_from_slice(lo);
            xor_words(hi, &rows[bit as usize][..stride]);
            xors += 1;
            prev = cur;
        }
        Self {
            chunk: k,
            width,
            stride,
            data,
            xors,
        }
    }

    pub fn chunk(&self) -> usize {
        self.chunk
    }

    pub fn len(&self) -> usize {
        1 << self.chunk
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of vector xors spent building the table.
    pub fn xor_count(&self) -> usize {
        self.xors
    }

    #[inline]
    pub fn words(&self, e: usize) -> &[u64] {
        &self.data[e * self.stride..(e + 1) * self.stride]
    }

    pub fn entry(&self, e: usize) -> BitVector {
        BitVector::from_words(self.width, self.words(e).to_vec())
    }
}

/// Table of all combinations of `rows`; requires `rows.len() == s` and
/// `1 <= s <= 16`.
pub fn gray_combination_table(rows: &[BitVector], s: usize) -> Result<GrayTable> {
    if s == 0 || s > MAX_CHUNK {
        return Err(Error::ChunkSize(s));
    }
    crate::error::ensure_dim("gray_combination_table rows", s, rows.len())?;
    let width = rows[0].len();
    for r in rows {
        crate::error::ensure_dim("gray_combination_table row length", width, r.len())?;
    }
    let packed: Vec<&[u64]> = rows.iter().map(BitVector::words).collect();
    Ok(GrayTable::build(width, &packed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn gray_sequence_flips_one_bit() {
        let flips: Vec<u32> = gray_steps(4).map(|(_, b)| b).collect();
        assert_eq!(flips, vec![0, 1, 0, 2, 0, 1, 0, 3, 0, 1, 0, 2, 0, 1, 0]);
        for i in 1..1024u64 {
            assert_eq!((gray(i) ^ gray(i - 1)).count_ones(), 1);
            assert_eq!(gray(i) ^ gray(i - 1), 1 << gray_flip(i));
        }
    }

    #[test]
    fn small_tables() {
        let r = BitVector::from_bit_str("10110");
        let t = gray_combination_table(std::slice::from_ref(&r), 1).unwrap();
        assert!(t.entry(0).is_zero());
        assert_eq!(t.entry(1), r);

        let r2 = BitVector::from_bit_str("01100");
        let t = gray_combination_table(&[r.clone(), r2.clone()], 2).unwrap();
        assert_eq!(t.entry(0b11), r.xor(&r2));
        assert_eq!(t.entry(0b10), r2);
        assert_eq!(t.xor_count(), 3);
    }

    #[test]
    fn out_of_range_chunk() {
        assert_eq!(gray_combination_table(&[], 0), Err(Error::ChunkSize(0)));
        let rows = vec![BitVector::zeros(3); 17];
        assert_eq!(gray_combination_table(&rows, 17), Err(Error::ChunkSize(17)));
        assert!(gray_combination_table(&rows[..3], 4).is_err());
    }

    #[test]
    fn exhaustive_against_naive_combination() {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        for s in 1..=8 {
            let rows: Vec<BitVector> = (0..s).map(|_| BitVector::random(150, &mut rng)).collect();
            let t = gray_combination_table(&rows, s).unwrap();
            assert_eq!(t.len(), 1 << s);
            assert_eq!(t.xor_count(), (1 << s) - 1);
            for e in 0..(1usize << s) {
                let mut naive = BitVector::zeros(150);
                for (j, r) in rows.iter().enumerate() {
                    if e >> j & 1 == 1 {
                        naive.xor_assign(r);
                    }
                }
                assert_eq!(t.entry(e), naive, "s={s} e={e}");
            }
        }
    }
}
