//! Byte formats for keys and ciphertext batches.
//!
//! Key file: `"OLVR" ‖ version (1) ‖ kind (1 public, 2 private) ‖ n ‖ v ‖ u`
//! with little-endian `u32` dimensions, followed by the payload. Bits are
//! packed least significant first; every polynomial and matrix starts on a
//! byte boundary and unused padding bits must be zero.
//!
//! - public: seed (32 bytes), then the `n` head polynomials, each with all
//!   `n(n−1)/2` quadratic, `n` linear and 1 constant coefficient.
//! - private: seed, `S` (`n²` bits), `Λ` (`n·u` bits), then the `n` central
//!   polynomials restricted to monomials with a vinegar variable.

use crate::error::{Error, Result};
use crate::f2::{BitMatrix, BitVector};
use crate::keys::{Params, PrivateKey, PublicKey, Seed};
use crate::protocol::CipherBatch;
use crate::quad::{QuadraticPoly, QuadraticSystem};

pub const KEY_MAGIC: &[u8; 4] = b"OLVR";
pub const KEY_VERSION: u8 = 1;
pub const KIND_PUBLIC: u8 = 1;
pub const KIND_PRIVATE: u8 = 2;
const HEADER_LEN: usize = 18;

#[derive(Default)]
struct BitWriter {
    bytes: Vec<u8>,
    bit: usize,
}

impl BitWriter {
    fn push(&mut self, b: bool) {
        if self.bit == 0 {
            self.bytes.push(0);
        }
        if b {
            *self.bytes.last_mut().unwrap() |= 1 << self.bit;
        }
        self.bit = (self.bit + 1) % 8;
    }

    fn push_vector(&mut self, v: &BitVector) {
        v.iter().for_each(|b| self.push(b));
    }

    fn align(&mut self) {
        self.bit = 0;
    }

    fn raw(&mut self, bytes: &[u8]) {
        self.align();
        self.bytes.extend_from_slice(bytes);
    }
}

struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
    bit: usize,
}

impl<'a> BitReader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0, bit: 0 }
    }

    fn next(&mut self) -> Result<bool> {
        let byte = *self.bytes.get(self.pos).ok_or_else(|| Error::Codec("truncated payload".into()))?;
        let b = (byte >> self.bit) & 1 == 1;
        self.bit += 1;
        if self.bit == 8 {
            self.bit = 0;
            self.pos += 1;
        }
        Ok(b)
    }

    fn vector(&mut self, len: usize) -> Result<BitVector> {
        let mut v = BitVector::zeros(len);
        for i in 0..len {
            if self.next()? {
                v.set(i, true);
            }
        }
        Ok(v)
    }

    /// Skips to the next byte boundary; the skipped bits must be zero.
    fn align(&mut self) -> Result<()> {
        if self.bit != 0 {
            if self.bytes[self.pos] >> self.bit != 0 {
                return Err(Error::Codec("nonzero padding bits".into()));
            }
            self.bit = 0;
            self.pos += 1;
        }
        Ok(())
    }

    fn raw(&mut self, len: usize) -> Result<&'a [u8]> {
        self.align()?;
        let out = self
            .bytes
            .get(self.pos..self.pos + len)
            .ok_or_else(|| Error::Codec("truncated payload".into()))?;
        self.pos += len;
        Ok(out)
    }

    fn finish(mut self) -> Result<()> {
        self.align()?;
        if self.pos != self.bytes.len() {
            return Err(Error::Codec(format!("{} trailing bytes", self.bytes.len() - self.pos)));
        }
        Ok(())
    }
}

fn header(kind: u8, p: Params) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN);
    out.extend_from_slice(KEY_MAGIC);
    out.push(KEY_VERSION);
    out.push(kind);
    for x in [p.n, p.v, p.u] {
        out.extend_from_slice(&(x as u32).to_le_bytes());
    }
    out
}

fn parse_header(bytes: &[u8]) -> Result<(u8, Params)> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != KEY_MAGIC {
        return Err(Error::Codec("missing OLVR header".into()));
    }
    if bytes[4] != KEY_VERSION {
        return Err(Error::Codec(format!("unsupported version {}", bytes[4])));
    }
    let kind = bytes[5];
    if kind != KIND_PUBLIC && kind != KIND_PRIVATE {
        return Err(Error::Codec(format!("unknown key kind {kind}")));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[6 + 4 * i..10 + 4 * i].try_into().unwrap()) as usize;
    let params = Params::relaxed(word(0), word(1), word(2)).map_err(|e| Error::Codec(e.to_string()))?;
    Ok((kind, params))
}

fn write_matrix(w: &mut BitWriter, m: &BitMatrix) {
    w.align();
    for r in 0..m.rows() {
        w.push_vector(&m.row(r));
    }
}

fn read_matrix(r: &mut BitReader, rows: usize, cols: usize) -> Result<BitMatrix> {
    r.align()?;
    let rows = (0..rows).map(|_| r.vector(cols)).collect::<Result<Vec<_>>>()?;
    BitMatrix::from_rows(cols, &rows)
}

fn write_poly(w: &mut BitWriter, p: &QuadraticPoly, quad_rows: usize) {
    w.align();
    w.push_vector(&p.layout_bits(quad_rows));
}

fn read_poly(r: &mut BitReader, n: usize, quad_rows: usize) -> Result<QuadraticPoly> {
    r.align()?;
    let bits = r.vector(QuadraticPoly::layout_len(n, quad_rows))?;
    Ok(QuadraticPoly::from_bit_source(n, quad_rows, |k| bits.get(k)))
}

pub fn encode_public(pk: &PublicKey) -> Vec<u8> {
    let p = pk.params();
    let mut w = BitWriter {
        bytes: header(KIND_PUBLIC, p),
        bit: 0,
    };
    w.raw(pk.seed());
    for poly in pk.head().polys() {
        write_poly(&mut w, poly, p.n);
    }
    w.bytes
}

pub fn encode_private(sk: &PrivateKey) -> Vec<u8> {
    let p = sk.params();
    let mut w = BitWriter {
        bytes: header(KIND_PRIVATE, p),
        bit: 0,
    };
    w.raw(sk.seed());
    write_matrix(&mut w, sk.s());
    write_matrix(&mut w, sk.lambda());
    for poly in sk.central().polys() {
        write_poly(&mut w, poly, p.v);
    }
    w.bytes
}

fn read_seed(r: &mut BitReader) -> Result<Seed> {
    Ok(r.raw(32)?.try_into().expect("32 bytes"))
}

pub fn decode_public(bytes: &[u8]) -> Result<PublicKey> {
    match decode_key(bytes)? {
        KeyFile::Public(pk) => Ok(pk),
        KeyFile::Private(_) => Err(Error::Codec("expected a public key, found a private key".into())),
    }
}

pub fn decode_private(bytes: &[u8]) -> Result<PrivateKey> {
    match decode_key(bytes)? {
        KeyFile::Private(sk) => Ok(sk),
        KeyFile::Public(_) => Err(Error::Codec("expected a private key, found a public key".into())),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum KeyFile {
    Public(PublicKey),
    Private(PrivateKey),
}

pub fn decode_key(bytes: &[u8]) -> Result<KeyFile> {
    let (kind, p) = parse_header(bytes)?;
    let mut r = BitReader::new(&bytes[HEADER_LEN..]);
    let seed = read_seed(&mut r)?;
    let key = if kind == KIND_PUBLIC {
        let polys = (0..p.n).map(|_| read_poly(&mut r, p.n, p.n)).collect::<Result<Vec<_>>>()?;
        KeyFile::Public(PublicKey::from_parts(p, QuadraticSystem::new(p.n, polys)?, seed)?)
    } else {
        let s = read_matrix(&mut r, p.n, p.n)?;
        let lambda = read_matrix(&mut r, p.n, p.u)?;
        let polys = (0..p.n).map(|_| read_poly(&mut r, p.n, p.v)).collect::<Result<Vec<_>>>()?;
        KeyFile::Private(PrivateKey::from_parts(p, QuadraticSystem::new(p.n, polys)?, s, lambda, seed)?)
    };
    r.finish()?;
    Ok(key)
}

/// Expected file size of an encoded key.
pub fn key_file_len(kind: u8, p: Params) -> usize {
    let poly = |rows| QuadraticPoly::layout_len(p.n, rows).div_ceil(8);
    HEADER_LEN
        + 32
        + match kind {
            KIND_PUBLIC => p.n * poly(p.n),
            _ => (p.n * p.n).div_ceil(8) + (p.n * p.u).div_ceil(8) + p.n * poly(p.v),
        }
}

pub fn encode_batch(batch: &CipherBatch) -> Vec<u8> {
    batch.to_bytes()
}

pub fn decode_batch(bytes: &[u8]) -> Result<CipherBatch> {
    CipherBatch::from_bytes(bytes)
}
