use super::gray::{GrayTable, MAX_CHUNK};
use super::matrix::BitMatrix;
use super::vector::xor_words;
use crate::error::{ensure_dim, Error, Result};

/// Default Four Russians chunk size.
pub const DEFAULT_CHUNK: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum MulStrategy {
    /// Row-by-row xor of the selected rows of `B`.
    Naive,
    /// Gray-code tables over chunks of [`DEFAULT_CHUNK`] rows of `B`.
    #[default]
    FourRussians,
}

pub fn mat_mul(a: &BitMatrix, b: &BitMatrix, strategy: MulStrategy) -> Result<BitMatrix> {
    match strategy {
        MulStrategy::Naive => mat_mul_naive(a, b),
        MulStrategy::FourRussians => mat_mul_four_russians(a, b, DEFAULT_CHUNK),
    }
}

fn mat_mul_naive(a: &BitMatrix, b: &BitMatrix) -> Result<BitMatrix> {
    ensure_dim("mat_mul inner dimension", a.cols(), b.rows())?;
    let mut c = BitMatrix::zeros(a.rows(), b.cols());
    for i in 0..a.rows() {
        let row = a.row(i);
        let acc = c.row_words_mut(i);
        for k in row.iter_ones() {
            xor_words(acc, b.row_words(k));
        }
    }
    Ok(c)
}

/// Product using one Gray table per chunk of `s` rows of `b`; each output row
/// then costs one table lookup per chunk.
pub fn mat_mul_four_russians(a: &BitMatrix, b: &BitMatrix, s: usize) -> Result<BitMatrix> {
    ensure_dim("mat_mul inner dimension", a.cols(), b.rows())?;
    if s == 0 || s > MAX_CHUNK {
        return Err(Error::ChunkSize(s));
    }
    let mut c = BitMatrix::zeros(a.rows(), b.cols());
    let mut start = 0;
    while start < b.rows() {
        let k = s.min(b.rows() - start);
        let rows: Vec<&[u64]> = (start..start + k).map(|r| b.row_words(r)).collect();
        let table = GrayTable::build(b.cols(), &rows);
        for i in 0..a.rows() {
            let e = extract_bits(a.row_words(i), start, k);
            if e != 0 {
                xor_words(c.row_words_mut(i), table.words(e));
            }
        }
        start += k;
    }
    Ok(c)
}

/// Bits `start..start + k` of a packed row as an integer, `k <= 16`.
#[inline]
pub(crate) fn extract_bits(words: &[u64], start: usize, k: usize) -> usize {
    let w = start / 64;
    let off = start % 64;
    let mut v = words[w] >> off;
    if off + k > 64 && w + 1 < words.len() {
        v |= words[w + 1] << (64 - off);
    }
    (v & ((1u64 << k) - 1)) as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn identity_and_zero() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let a = BitMatrix::random(13, 70, &mut rng);
        for strat in [MulStrategy::Naive, MulStrategy::FourRussians] {
            assert_eq!(mat_mul(&a, &BitMatrix::identity(70), strat).unwrap(), a);
            assert!(mat_mul(&a, &BitMatrix::zeros(70, 9), strat).unwrap().is_zero());
        }
        assert!(mat_mul(&a, &BitMatrix::zeros(69, 9), MulStrategy::Naive).is_err());
    }

    #[test]
    fn strategies_agree_64() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let a = BitMatrix::random(64, 64, &mut rng);
        let b = BitMatrix::random(64, 64, &mut rng);
        assert_eq!(
            mat_mul(&a, &b, MulStrategy::Naive).unwrap(),
            mat_mul(&a, &b, MulStrategy::FourRussians).unwrap()
        );
    }

    #[test]
    fn extract_across_word_boundary() {
        let words = [0xF000_0000_0000_0000u64, 0b1011];
        assert_eq!(extract_bits(&words, 60, 8), 0b1011_1111);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn associativity_and_chunk_independence(seed in any::<u64>(), r in 1usize..30, k in 1usize..90, c in 1usize..30, s in 1usize..12) {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let a = BitMatrix::random(r, k, &mut rng);
            let b = BitMatrix::random(k, c, &mut rng);
            let d = BitMatrix::random(c, 7, &mut rng);
            let ab = mat_mul(&a, &b, MulStrategy::Naive).unwrap();
            prop_assert_eq!(mat_mul_four_russians(&a, &b, s).unwrap(), ab.clone());
            let left = mat_mul(&ab, &d, MulStrategy::FourRussians).unwrap();
            let right = mat_mul(&a, &mat_mul(&b, &d, MulStrategy::FourRussians).unwrap(), MulStrategy::Naive).unwrap();
            prop_assert_eq!(left, right);
        }
    }
}
