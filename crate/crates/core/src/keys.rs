//! Key material: the Oil & Vinegar central map `F`, the change of variables
//! `S`, the mixing matrix `Λ` and the seed for the fully quadratic block `Q`.
//!
//! Public key: `p_i = (f_i ∘ S) + Σ_j λ_ij q_j` for `i < n`, followed by the
//! `u` polynomials of `Q`, which are re-expanded from the seed on demand.

use std::sync::OnceLock;

use rand::RngCore;

use crate::error::{ensure_dim, Error, Result};
use crate::f2::{inverse, random_invertible, rank, BitMatrix, BitVector};
use crate::hash::{BitStream, TAG_EXPAND_Q};
use crate::quad::{OvShape, QuadraticPoly, QuadraticSystem};

pub type Seed = [u8; 32];

/// Scheme dimensions: `n` variables, `v` vinegar variables, `u` fully
/// quadratic polynomials.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Params {
    pub n: usize,
    pub v: usize,
    pub u: usize,
}

impl Params {
    pub const SL1: Params = Params { n: 320, v: 24, u: 640 };
    pub const SL2: Params = Params { n: 640, v: 29, u: 1280 };
    pub const SL3: Params = Params { n: 1280, v: 36, u: 2560 };

    /// Checks `1 <= v`, `n - v > v` and `u >= n`.
    pub fn new(n: usize, v: usize, u: usize) -> Result<Self> {
        let p = Self { n, v, u };
        p.validate()?;
        Ok(p)
    }

    /// Only requires `1 <= v < n`; for deliberately weakened keys.
    pub fn relaxed(n: usize, v: usize, u: usize) -> Result<Self> {
        OvShape::new(n, v)?;
        Ok(Self { n, v, u })
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name.to_ascii_uppercase().as_str() {
            "SL1" => Some(Self::SL1),
            "SL2" => Some(Self::SL2),
            "SL3" => Some(Self::SL3),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let Self { n, v, u } = *self;
        if v == 0 || v >= n {
            return Err(Error::InvalidParams(format!("need 1 <= v < n (n={n}, v={v})")));
        }
        if n - v <= v {
            return Err(Error::InvalidParams(format!("need o = n - v > v (n={n}, v={v})")));
        }
        if u < n {
            return Err(Error::InvalidParams(format!("need u >= n for a rank-n mixing matrix (n={n}, u={u})")));
        }
        Ok(())
    }

    /// Number of public polynomials.
    pub fn m(&self) -> usize {
        self.n + self.u
    }

    /// Number of oil variables.
    pub fn o(&self) -> usize {
        self.n - self.v
    }

    pub fn shape(&self) -> OvShape {
        OvShape { n: self.n, v: self.v }
    }
}

/// Expands the `u` fully quadratic polynomials from `seed`: SHAKE256 over
/// `"OLVR-Q" ‖ seed`, one stream bit per coefficient in canonical monomial
/// order, polynomial after polynomial.
pub fn expand_q(seed: &Seed, params: Params) -> QuadraticSystem {
    let mut stream = BitStream::new(TAG_EXPAND_Q, seed);
    let n = params.n;
    let polys = (0..params.u)
        .map(|_| QuadraticPoly::from_bit_source(n, n, |_| stream.next_bit()))
        .collect();
    QuadraticSystem::new(n, polys).expect("uniform variable count")
}

#[derive(Clone)]
pub struct PublicKey {
    params: Params,
    head: QuadraticSystem,
    seed: Seed,
    tail: OnceLock<QuadraticSystem>,
}

impl PartialEq for PublicKey {
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params && self.seed == other.seed && self.head == other.head
    }
}

impl Eq for PublicKey {}

impl std::fmt::Debug for PublicKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PublicKey")
            .field("params", &self.params)
            .field("seed", &hex_prefix(&self.seed))
            .finish_non_exhaustive()
    }
}

fn hex_prefix(seed: &Seed) -> String {
    seed[..4].iter().map(|b| format!("{b:02x}")).collect::<String>() + ".."
}

impl PublicKey {
    pub fn from_parts(params: Params, head: QuadraticSystem, seed: Seed) -> Result<Self> {
        ensure_dim("PublicKey head length", params.n, head.len())?;
        ensure_dim("PublicKey head variables", params.n, head.n())?;
        Ok(Self {
            params,
            head,
            seed,
            tail: OnceLock::new(),
        })
    }

    pub fn params(&self) -> Params {
        self.params
    }

    pub fn head(&self) -> &QuadraticSystem {
        &self.head
    }

    pub fn seed(&self) -> &Seed {
        &self.seed
    }

    /// The `Q` block, expanded from the seed on first use.
    pub fn tail(&self) -> &QuadraticSystem {
        self.tail.get_or_init(|| expand_q(&self.seed, self.params))
    }

    /// All `m` public polynomials.
    pub fn full_system(&self) -> QuadraticSystem {
        self.head.stack(self.tail()).expect("same variables")
    }
}

/// `P(x)`: `n` head bits followed by `u` bits from `Q`.
pub fn public_evaluate(pk: &PublicKey, x: &BitVector) -> Result<BitVector> {
    public_evaluate_with(pk, pk.tail(), x)
}

/// As [`public_evaluate`] with an explicitly supplied `Q` block.
pub fn public_evaluate_with(pk: &PublicKey, tail: &QuadraticSystem, x: &BitVector) -> Result<BitVector> {
    ensure_dim("public_evaluate input", pk.params.n, x.len())?;
    ensure_dim("public_evaluate tail length", pk.params.u, tail.len())?;
    Ok(pk.head.evaluate(x)?.concat(&tail.evaluate(x)?))
}

#[derive(Clone, PartialEq, Eq)]
pub struct PrivateKey {
    params: Params,
    f: QuadraticSystem,
    s: BitMatrix,
    s_inv: BitMatrix,
    lambda: BitMatrix,
    seed: Seed,
}

impl std::fmt::Debug for PrivateKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PrivateKey").field("params", &self.params).finish_non_exhaustive()
    }
}

impl PrivateKey {
    /// Assembles a key, computing `S⁻¹`. Fails if `S` is singular or shapes
    /// disagree. The rank of `Λ` is not checked here.
    pub fn from_parts(params: Params, f: QuadraticSystem, s: BitMatrix, lambda: BitMatrix, seed: Seed) -> Result<Self> {
        ensure_dim("PrivateKey F length", params.n, f.len())?;
        ensure_dim("PrivateKey F variables", params.n, f.n())?;
        ensure_dim("PrivateKey S rows", params.n, s.rows())?;
        ensure_dim("PrivateKey S cols", params.n, s.cols())?;
        ensure_dim("PrivateKey Lambda rows", params.n, lambda.rows())?;
        ensure_dim("PrivateKey Lambda cols", params.u, lambda.cols())?;
        let s_inv = inverse(&s).ok_or(Error::SingularBlock("S"))?;
        Ok(Self {
            params,
            f,
            s,
            s_inv,
            lambda,
            seed,
        })
    }

    pub fn params(&self) -> Params {
        self.params
    }

    /// The central OV map.
    pub fn central(&self) -> &QuadraticSystem {
        &self.f
    }

    pub fn s(&self) -> &BitMatrix {
        &self.s
    }

    pub fn s_inv(&self) -> &BitMatrix {
        &self.s_inv
    }

    /// The `n × u` mixing matrix.
    pub fn lambda(&self) -> &BitMatrix {
        &self.lambda
    }

    pub fn seed(&self) -> &Seed {
        &self.seed
    }

    pub fn expand_q(&self) -> QuadraticSystem {
        expand_q(&self.seed, self.params)
    }

    /// `F ∘ S`.
    pub fn composed(&self) -> QuadraticSystem {
        self.f.compose_right_linear(&self.s).expect("validated shapes")
    }

    /// The public key this private key determines.
    pub fn derive_public(&self) -> PublicKey {
        let q = self.expand_q();
        let g = self.composed();
        let mixed = q.left_transform(&self.lambda).expect("Lambda is n x u");
        let head = g.add(&mixed).expect("n polynomials each");
        let pk = PublicKey::from_parts(self.params, head, self.seed).expect("shapes");
        let _ = pk.tail.set(q);
        pk
    }

    /// Invariant check: OV central map, invertible `S`, and (when `u >= n`)
    /// a rank-`n` mixing matrix.
    pub fn check(&self) -> bool {
        let shape = self.params.shape();
        self.f.polys().iter().all(|p| p.is_ov(shape))
            && rank(&self.s) == self.params.n
            && (self.params.u < self.params.n || rank(&self.lambda) == self.params.n)
    }
}

/// Ways to generate deliberately weak keys for the attack demonstrations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Weakening {
    #[default]
    None,
    /// `Λ = 0`: the head block is `F ∘ S` alone.
    NoLambda,
    /// `Λ` uniform without the rank condition; allows `u < n`.
    UncheckedLambda,
}

/// Generates a key pair for validated `params`.
pub fn keygen<R: RngCore + ?Sized>(params: Params, rng: &mut R) -> Result<(PublicKey, PrivateKey)> {
    params.validate()?;
    Ok(generate(params, Weakening::None, rng))
}

/// Key generation with a weakening; only `1 <= v < n` is required.
pub fn keygen_weakened<R: RngCore + ?Sized>(params: Params, weakening: Weakening, rng: &mut R) -> Result<(PublicKey, PrivateKey)> {
    OvShape::new(params.n, params.v)?;
    if weakening == Weakening::None {
        params.validate()?;
    }
    Ok(generate(params, weakening, rng))
}

fn generate<R: RngCore + ?Sized>(params: Params, weakening: Weakening, rng: &mut R) -> (PublicKey, PrivateKey) {
    let n = params.n;
    let f = QuadraticSystem::random_ov(params.shape(), n, rng);
    let (s, s_inv) = random_invertible(n, rng);
    let lambda = match weakening {
        Weakening::None => loop {
            let l = BitMatrix::random(n, params.u, rng);
            if rank(&l) == n {
                break l;
            }
        },
        Weakening::NoLambda => BitMatrix::zeros(n, params.u),
        Weakening::UncheckedLambda => BitMatrix::random(n, params.u, rng),
    };
    let mut seed = [0u8; 32];
    rng.fill_bytes(&mut seed);
    let sk = PrivateKey {
        params,
        f,
        s,
        s_inv,
        lambda,
        seed,
    };
    (sk.derive_public(), sk)
}

/// Outcome of applying a full left transform `T` to `[F∘S ; Q]`.
#[derive(Clone, Debug)]
pub struct BlockTransform {
    /// `T₁(F∘S) + T₂Q`.
    pub head: QuadraticSystem,
    /// `T₃(F∘S) + T₄Q`.
    pub tail: QuadraticSystem,
    /// Whether the head equals `(T₁ − T₂T₄⁻¹T₃)(F∘S) + T₂T₄⁻¹·tail` and the
    /// tail equals `T₃(F∘S) + T₄Q`.
    pub decomposition_holds: bool,
}

/// Applies an invertible `m × m` transform `T` to the stacked private system
/// and checks the block decomposition of the result. `T` and its lower-right
/// `u × u` block must be invertible.
pub fn block_transform(sk: &PrivateKey, t: &BitMatrix) -> Result<BlockTransform> {
    let Params { n, u, .. } = sk.params;
    let m = n + u;
    ensure_dim("block transform rows", m, t.rows())?;
    ensure_dim("block transform cols", m, t.cols())?;
    if rank(t) != m {
        return Err(Error::SingularBlock("T"));
    }
    let t1 = t.row_block(0, n).col_block(0, n);
    let t2 = t.row_block(0, n).col_block(n, u);
    let t3 = t.row_block(n, u).col_block(0, n);
    let t4 = t.row_block(n, u).col_block(n, u);
    let t4_inv = inverse(&t4).ok_or(Error::SingularBlock("T4"))?;

    let g = sk.composed();
    let q = sk.expand_q();
    let stacked = g.stack(&q)?;
    let transformed = stacked.left_transform(t)?;
    let head = QuadraticSystem::new(sk.params.n, transformed.polys()[..n].to_vec())?;
    let tail = QuadraticSystem::new(sk.params.n, transformed.polys()[n..].to_vec())?;

    use crate::f2::{mat_mul, MulStrategy::Naive};
    let t2_t4inv = mat_mul(&t2, &t4_inv, Naive)?;
    let schur = t1.add(&mat_mul(&t2_t4inv, &t3, Naive)?)?;
    let head_expected = g.left_transform(&schur)?.add(&tail.left_transform(&t2_t4inv)?)?;
    let tail_expected = g.left_transform(&t3)?.add(&q.left_transform(&t4)?)?;
    let decomposition_holds = head == head_expected && tail == tail_expected;
    Ok(BlockTransform {
        head,
        tail,
        decomposition_holds,
    })
}

/// `true` iff the block decomposition holds for `T`; see [`block_transform`].
pub fn block_transform_equivalence_check(sk: &PrivateKey, t: &BitMatrix) -> Result<bool> {
    Ok(block_transform(sk, t)?.decomposition_holds)
}

/// `Λ' = [[I, Λ], [0, I]]`, the transform that produces the public key.
pub fn lambda_prime(sk: &PrivateKey) -> BitMatrix {
    let Params { n, u, .. } = sk.params;
    let top = BitMatrix::identity(n).hconcat(&sk.lambda).expect("n rows");
    let bottom = BitMatrix::zeros(u, n).hconcat(&BitMatrix::identity(u)).expect("u rows");
    top.vconcat(&bottom).expect("m columns")
}
