//! Hashing and seed expansion primitives with fixed domain tags.

use sha2::{Digest, Sha256};
use sha3::digest::{ExtendableOutput, Update, XofReader};
use sha3::Shake256;

pub const TAG_EXPAND_Q: &[u8] = b"OLVR-Q";
pub const TAG_CONFIRM: &[u8] = b"OLVR-confirm";
pub const TAG_SECRET: &[u8] = b"OLVR-secret";

pub type Digest32 = [u8; 32];

/// SHA-256 over `tag ‖ data`.
pub fn tagged_digest(tag: &[u8], data: &[u8]) -> Digest32 {
    let mut h = Sha256::new();
    sha2::Digest::update(&mut h, tag);
    sha2::Digest::update(&mut h, data);
    h.finalize().into()
}

/// SHAKE256 stream over `tag ‖ seed`, consumed one bit at a time, least
/// significant bit of each byte first.
pub struct BitStream {
    reader: <Shake256 as ExtendableOutput>::Reader,
    buf: [u8; 136],
    pos: usize,
}

impl BitStream {
    pub fn new(tag: &[u8], seed: &[u8]) -> Self {
        let mut xof = Shake256::default();
        xof.update(tag);
        xof.update(seed);
        Self {
            reader: xof.finalize_xof(),
            buf: [0; 136],
            pos: 136 * 8,
        }
    }

    #[inline]
    pub fn next_bit(&mut self) -> bool {
        if self.pos == self.buf.len() * 8 {
            self.reader.read(&mut self.buf);
            self.pos = 0;
        }
        let b = (self.buf[self.pos / 8] >> (self.pos % 8)) & 1 == 1;
        self.pos += 1;
        b
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stream_is_lsb_first_over_shake() {
        let mut expected = [0u8; 2];
        let mut xof = Shake256::default();
        xof.update(b"tag");
        xof.update(b"seed");
        xof.finalize_xof().read(&mut expected);
        let mut s = BitStream::new(b"tag", b"seed");
        for i in 0..16 {
            assert_eq!(s.next_bit(), (expected[i / 8] >> (i % 8)) & 1 == 1);
        }
    }

    #[test]
    fn tags_separate_domains() {
        assert_ne!(tagged_digest(TAG_CONFIRM, b"x"), tagged_digest(TAG_SECRET, b"x"));
    }
}
