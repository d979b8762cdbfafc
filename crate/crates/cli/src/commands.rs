use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use num_bigint::BigInt;
use olivier::analysis::{first_fall_estimate, generic_series, hilbert_prefix_with_budget, sigma_table, SystemShape, DEFAULT_MACAULAY_BUDGET};
use olivier::attacks::{estimate_f4_bits, estimate_minrank_bits, estimate_xl_bits, kernel_attack, lambda_strip_bruteforce, oil_reconstruction, AttackReport, OilReconConfig};
use olivier::codec::{decode_batch, decode_private, decode_public, encode_batch, encode_private, encode_public};
use olivier::keys::{keygen_weakened, Weakening};
use olivier::protocol::{alice_secret, confirmation_digest, encapsulate, shared_secret, CipherBatch, Decapsulator, EncapsState, SessionConfig};
use olivier::{OvShape, Params, PrivateKey, PublicKey, QuadraticSystem};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::{
    AnalyzeArgs, AttackArgs, AttackKind, CmdResult, ConfirmArgs, DecapsArgs, EncapsArgs, EstimateArgs, Failure, Format, KexdemoArgs, KeygenArgs, ParamArgs, SessionArgs, Weaken,
};

fn rng(seed: Option<u64>) -> ChaCha20Rng {
    match seed {
        Some(s) => ChaCha20Rng::seed_from_u64(s),
        None => ChaCha20Rng::from_entropy(),
    }
}

fn threads() -> Result<usize, Failure> {
    match std::env::var("OLIVIER_THREADS") {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("OLIVIER_THREADS must be a non-negative integer, got {s:?}"))),
        Err(_) => Ok(0),
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| Failure::Protocol(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> CmdResult {
    std::fs::write(path, bytes).map_err(|e| Failure::Protocol(format!("cannot write {}: {e}", path.display())))
}

fn resolve_params(a: &ParamArgs) -> Result<(Params, Weakening), Failure> {
    let (n, v, mut u) = match &a.preset {
        Some(name) => {
            let p = Params::preset(name).ok_or_else(|| Failure::Usage(format!("unknown preset {name:?}")))?;
            (p.n, p.v, p.u)
        }
        None => (a.n, a.v, a.u),
    };
    let weakening = match a.weaken {
        Weaken::None => Weakening::None,
        Weaken::UEqualsN => {
            u = n;
            Weakening::None
        }
        Weaken::NoLambda => Weakening::NoLambda,
        Weaken::UncheckedLambda => Weakening::UncheckedLambda,
    };
    let params = match weakening {
        Weakening::None => Params::new(n, v, u)?,
        _ => Params::relaxed(n, v, u)?,
    };
    Ok((params, weakening))
}

fn generate(a: &ParamArgs, rng: &mut ChaCha20Rng) -> Result<(PublicKey, PrivateKey), Failure> {
    let (params, weakening) = resolve_params(a)?;
    Ok(match weakening {
        Weakening::None => olivier::keygen(params, rng)?,
        w => keygen_weakened(params, w, rng)?,
    })
}

fn session_config(a: &SessionArgs) -> Result<SessionConfig, Failure> {
    Ok(SessionConfig {
        t: a.t,
        theta: a.theta,
        s: a.s,
        verify_full: !a.no_verify,
        threads: threads()?,
    })
}

pub fn keygen(a: KeygenArgs) -> CmdResult {
    let (pk, sk) = generate(&a.params, &mut rng(a.seed))?;
    let p = pk.params();
    let pub_bytes = encode_public(&pk);
    let priv_bytes = encode_private(&sk);
    write(&a.pub_out, &pub_bytes)?;
    write(&a.priv_out, &priv_bytes)?;
    println!("params: n={} v={} u={}", p.n, p.v, p.u);
    println!("public_key: {} ({} bytes)", a.pub_out.display(), pub_bytes.len());
    println!("private_key: {} ({} bytes)", a.priv_out.display(), priv_bytes.len());
    Ok(())
}

pub fn encaps(a: EncapsArgs) -> CmdResult {
    let pk = decode_public(&read(&a.public)?)?;
    let cfg = SessionConfig {
        t: a.t,
        theta: 1,
        ..SessionConfig::default()
    };
    let (batch, state) = encapsulate(&pk, &cfg, &mut rng(a.seed))?;
    let n = pk.params().n;
    write(&a.batch, &encode_batch(&batch))?;
    write(&a.state, &encode_batch(&CipherBatch::new(n, state.plaintexts)?))?;
    println!("batch: {} ({} ciphertexts of {} bits)", a.batch.display(), batch.t(), batch.m());
    println!("state: {}", a.state.display());
    Ok(())
}

fn print_decap(plaintext: &olivier::BitVector, column: usize, guesses: u64, wall_ms: u128) {
    println!("column: {column}");
    println!("guesses_tried: {guesses}");
    println!("wall_ms: {wall_ms}");
    println!("plaintext: {plaintext}");
}

pub fn decaps(a: DecapsArgs) -> CmdResult {
    let sk = decode_private(&read(&a.private)?)?;
    let batch = decode_batch(&read(&a.batch)?)?;
    let cfg = session_config(&a.session)?;
    let dec = Decapsulator::new(&sk);
    let start = Instant::now();
    let res = if a.session.fast { dec.decapsulate_fast(&batch, &cfg) } else { dec.decapsulate(&batch, &cfg) }?;
    print_decap(&res.plaintext, res.column, res.guesses_tried, start.elapsed().as_millis());
    write(&a.digest, &confirmation_digest(&res.plaintext))?;
    println!("secret: {}", hex::encode(shared_secret(&res.plaintext)));
    Ok(())
}

pub fn confirm(a: ConfirmArgs) -> CmdResult {
    let plaintexts = decode_batch(&read(&a.state)?)?.vectors().to_vec();
    let digest: [u8; 32] = read(&a.digest)?
        .try_into()
        .map_err(|_| Failure::Protocol("digest file must hold 32 bytes".into()))?;
    let state = EncapsState {
        hashes: plaintexts.iter().map(confirmation_digest).collect(),
        plaintexts,
    };
    let secret = alice_secret(&state, &digest).ok_or_else(|| Failure::Protocol("digest matches no plaintext of the batch".into()))?;
    println!("secret: {}", hex::encode(secret));
    Ok(())
}

pub fn kexdemo(a: KexdemoArgs) -> CmdResult {
    let mut rng = rng(a.seed);
    let (pk, sk) = match (&a.public, &a.private) {
        (Some(p), Some(s)) => (decode_public(&read(p)?)?, decode_private(&read(s)?)?),
        _ => generate(&a.params, &mut rng)?,
    };
    if sk.derive_public() != pk {
        return Err(Failure::Usage("public and private key do not match".into()));
    }
    let cfg = session_config(&a.session)?;
    let p = pk.params();
    println!("params: n={} v={} u={}", p.n, p.v, p.u);
    let (batch, state) = encapsulate(&pk, &cfg, &mut rng)?;
    let dec = Decapsulator::new(&sk);
    let start = Instant::now();
    let res = if a.session.fast { dec.decapsulate_fast(&batch, &cfg) } else { dec.decapsulate(&batch, &cfg) }?;
    print_decap(&res.plaintext, res.column, res.guesses_tried, start.elapsed().as_millis());
    let bob = shared_secret(&res.plaintext);
    let alice = alice_secret(&state, &confirmation_digest(&res.plaintext));
    println!("bob_secret: {}", hex::encode(bob));
    println!("alice_secret: {}", alice.map_or_else(|| "none".into(), hex::encode));
    if alice != Some(bob) {
        return Err(Failure::Protocol("secrets differ".into()));
    }
    println!("match: true");
    Ok(())
}

/// Degree-`d` coefficient predicted from the generic series and the negative
/// table entries.
fn predicted_prefix(shape: SystemShape, d_max: u32) -> Vec<BigInt> {
    let table = sigma_table(shape, d_max);
    let mut out = generic_series(shape.n, shape.e + shape.u, d_max).coeffs;
    for (d, _, x) in table.records() {
        if x.sign() == num_bigint::Sign::Minus {
            out[d as usize] -= x;
        }
    }
    out
}

fn format_table(label: &str, rows: &[Vec<BigInt>]) -> String {
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|row| row.iter().map(|x| if x.sign() == num_bigint::Sign::Minus { format!("[{x}]") } else { x.to_string() }).collect())
        .collect();
    let cols = rows.last().map_or(0, Vec::len);
    let width = cells.iter().flatten().map(String::len).max().unwrap_or(1).max(cols.to_string().len());
    let mut s = format!("{label}\n{:>3}", "d\\i");
    for i in 0..cols {
        let _ = write!(s, " {i:>width$}");
    }
    s.push('\n');
    for (r, row) in cells.iter().enumerate() {
        let _ = write!(s, "{:>3}", r + 3);
        for c in row {
            let _ = write!(s, " {c:>width$}");
        }
        s.push('\n');
    }
    s
}

fn join(xs: &[BigInt]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

pub fn analyze(a: AnalyzeArgs) -> CmdResult {
    let shape = SystemShape::new(a.n, a.v, a.e, a.u)?;
    if a.dmax < 3 {
        return Err(Failure::Usage("--dmax must be at least 3".into()));
    }
    let table = sigma_table(shape, a.dmax);
    let series = generic_series(a.n, a.e + a.u, a.dmax);
    let estimate = first_fall_estimate(a.n, a.v, a.e, a.u);
    let label = if a.u == 0 { "sigma" } else { "sigma_tilde" };
    let oracle = if a.oracle {
        let mut rng = rng(a.seed);
        let (n, v) = (a.n as usize, a.v as usize);
        let mut sys = QuadraticSystem::random_ov(OvShape::new(n, v)?, a.e as usize, &mut rng);
        if a.u > 0 {
            sys = sys.stack(&QuadraticSystem::random(n, a.u as usize, &mut rng))?;
        }
        let h = hilbert_prefix_with_budget(&sys, a.dmax, a.budget.unwrap_or(DEFAULT_MACAULAY_BUDGET))?;
        Some((h.coeffs, predicted_prefix(shape, a.dmax)))
    } else {
        None
    };
    match a.format {
        Format::Table => {
            println!("shape: n={} v={} e={} u={}", a.n, a.v, a.e, a.u);
            print!("{}", format_table(label, &table.rows));
            println!("first_fall_in_table: {}", table.first_fall.map_or("none".into(), |d| d.to_string()));
            println!("first_fall_estimate: {estimate}");
            println!("generic_series: {}", join(&series.coeffs));
            if let Some((h, p)) = &oracle {
                println!("predicted_hilbert: {}", join(p));
                println!("oracle_hilbert: {}", join(h));
            }
        }
        Format::Records => {
            for (d, i, x) in table.records() {
                println!("{label} {d} {i} {x}");
            }
            for (d, x) in series.coeffs.iter().enumerate() {
                println!("generic {d} {x}");
            }
            if let Some(d) = table.first_fall {
                println!("first_fall_in_table {d}");
            }
            println!("first_fall_estimate {estimate}");
            if let Some((h, p)) = &oracle {
                for (d, (x, y)) in p.iter().zip(h).enumerate() {
                    println!("predicted {d} {x}");
                    println!("oracle {d} {y}");
                }
            }
        }
    }
    if let Some((h, p)) = &oracle {
        for (d, (x, y)) in p.iter().zip(h).enumerate() {
            if x != y {
                eprintln!("disagreement at degree {d}: predicted {x}, oracle {y}");
            }
        }
    }
    Ok(())
}

pub fn estimate(a: EstimateArgs) -> CmdResult {
    let sets: Vec<(u64, u64, u64)> = match (&a.preset, a.n) {
        (Some(name), _) => {
            let p = Params::preset(name).ok_or_else(|| Failure::Usage(format!("unknown preset {name:?}")))?;
            vec![(p.n as u64, p.v as u64, p.u as u64)]
        }
        (None, Some(n)) => {
            let (v, u) = (a.v.unwrap_or(0), a.u.unwrap_or(0));
            SystemShape::new(n, v, n, u)?;
            vec![(n, v, u)]
        }
        (None, None) => [Params::SL1, Params::SL2, Params::SL3]
            .iter()
            .map(|p| (p.n as u64, p.v as u64, p.u as u64))
            .collect(),
    };
    println!("n v MR d_fall XL F4");
    let mut details = String::new();
    for (n, v, u) in sets {
        let d_fall = first_fall_estimate(n, v, n, u);
        let d = a.degree.unwrap_or(d_fall as u64);
        let mr = estimate_minrank_bits(n, v, u);
        let xl = estimate_xl_bits(n, d);
        let f4 = estimate_f4_bits(n, d, a.omega);
        println!("{n} {v} {} {d_fall} {} {}", mr.bits(), xl.bits(), f4.bits());
        for e in [mr, xl, f4] {
            details.push('\n');
            details.push_str(&e.to_text());
        }
    }
    if a.details {
        print!("{details}");
    }
    Ok(())
}

pub fn attack(a: AttackArgs) -> CmdResult {
    let mut rng = rng(a.seed);
    let pk = match &a.public {
        Some(p) => decode_public(&read(p)?)?,
        None => generate(&a.params, &mut rng)?.0,
    };
    let p = pk.params();
    eprintln!("target: n={} v={} u={}", p.n, p.v, p.u);
    let report = match a.kind {
        AttackKind::Kernel => kernel_attack(pk.head(), p.shape(), &mut rng),
        AttackKind::Oilrecon => {
            let cfg = OilReconConfig {
                span_margin: a.margin,
                sample_budget: a.samples,
                ..OilReconConfig::default()
            };
            oil_reconstruction(&pk, &cfg, &mut rng)
        }
        AttackKind::Lambdastrip => {
            let start = Instant::now();
            let found = lambda_strip_bruteforce(&pk, p.shape(), a.max_u)?;
            AttackReport {
                attack: "lambdastrip",
                success: found.is_some(),
                basis: found.map(|l| vec![l]),
                samples: 0,
                pairs: 0,
                rank_checks: 0,
                wall: start.elapsed(),
                note: "basis[0] is a Λ row that makes p_1 an OV polynomial".into(),
            }
        }
    };
    print!("{}", report.to_text());
    if report.success {
        Ok(())
    } else {
        Err(Failure::Protocol(format!("{} attack failed", report.attack)))
    }
}
