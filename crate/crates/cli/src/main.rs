use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use olivier::Error;

mod commands;

/// Multivariate key exchange over GF(2).
///
/// Exit status: 0 success, 1 protocol or attack failure, 2 usage error,
/// 3 resource budget exceeded. `OLIVIER_THREADS` caps the worker count of
/// the decapsulation loop (0 or unset = all cores).
#[derive(Parser, Debug)]
#[command(name = "olivier", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a key pair and write both key files.
    Keygen(KeygenArgs),
    /// Encrypt a fresh batch of plaintexts under a public key.
    Encaps(EncapsArgs),
    /// Recover one plaintext from a batch and write the confirmation digest.
    Decaps(DecapsArgs),
    /// Check the returned digest against the encapsulation state.
    Confirm(ConfirmArgs),
    /// Run a full exchange in memory.
    Kexdemo(KexdemoArgs),
    /// Print the degree-fall table and the generic Hilbert series.
    Analyze(AnalyzeArgs),
    /// Print attack complexity estimates for a parameter set.
    Estimate(EstimateArgs),
    /// Run an attack against a (possibly weakened) key.
    Attack(AttackArgs),
}

#[derive(Args, Debug, Clone)]
struct ParamArgs {
    /// Parameter preset (SL1, SL2, SL3); overrides --n/--v/--u.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, default_value_t = 40)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    v: usize,
    #[arg(long, default_value_t = 80)]
    u: usize,
    /// Generate a deliberately weak key.
    #[arg(long, value_enum, default_value_t = Weaken::None)]
    weaken: Weaken,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Weaken {
    None,
    /// Λ = 0.
    NoLambda,
    /// u = n.
    UEqualsN,
    /// Λ uniform without the rank condition; allows u < n.
    UncheckedLambda,
}

#[derive(Args, Debug)]
struct KeygenArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long)]
    seed: Option<u64>,
    /// Public key output path.
    #[arg(long = "pub", default_value = "olivier.pub")]
    pub_out: PathBuf,
    /// Private key output path.
    #[arg(long = "priv", default_value = "olivier.key")]
    priv_out: PathBuf,
}

#[derive(Args, Debug, Clone)]
struct SessionArgs {
    /// Plaintexts per batch (multiple of 64).
    #[arg(long, default_value_t = 64)]
    t: usize,
    /// Dependent rows tested before aborting a guess.
    #[arg(long, default_value_t = 8)]
    theta: usize,
    /// Chunk size of the combination tables.
    #[arg(long, default_value_t = 8)]
    s: usize,
    /// Use the table-driven decapsulation.
    #[arg(long)]
    fast: bool,
    /// Skip the public-map check on candidate solutions.
    #[arg(long)]
    no_verify: bool,
}

#[derive(Args, Debug)]
struct EncapsArgs {
    #[arg(long = "pub")]
    public: PathBuf,
    /// Batch output path.
    #[arg(long, default_value = "batch.olvb")]
    batch: PathBuf,
    /// Plaintexts kept for confirmation (same format as a batch).
    #[arg(long, default_value = "state.olvb")]
    state: PathBuf,
    #[arg(long, default_value_t = 64)]
    t: usize,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct DecapsArgs {
    #[arg(long = "priv")]
    private: PathBuf,
    #[arg(long)]
    batch: PathBuf,
    /// Digest output path.
    #[arg(long, default_value = "digest.bin")]
    digest: PathBuf,
    #[command(flatten)]
    session: SessionArgs,
}

#[derive(Args, Debug)]
struct ConfirmArgs {
    #[arg(long, default_value = "state.olvb")]
    state: PathBuf,
    #[arg(long, default_value = "digest.bin")]
    digest: PathBuf,
}

#[derive(Args, Debug)]
struct KexdemoArgs {
    /// Key files; a fresh key is generated when omitted.
    #[arg(long = "pub", requires = "private")]
    public: Option<PathBuf>,
    #[arg(long = "priv", requires = "public")]
    private: Option<PathBuf>,
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    session: SessionArgs,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[arg(long)]
    n: u64,
    #[arg(long)]
    v: u64,
    /// Number of OV equations.
    #[arg(long)]
    e: u64,
    /// Number of fully quadratic equations.
    #[arg(long, default_value_t = 0)]
    u: u64,
    #[arg(long, default_value_t = 4)]
    dmax: u32,
    /// Also compute the Hilbert prefix of a random system by linear algebra.
    #[arg(long)]
    oracle: bool,
    /// Memory budget of the oracle in bytes.
    #[arg(long)]
    budget: Option<u128>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    /// Aligned text.
    Table,
    /// One `kind d [i] value` record per line.
    Records,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    /// SL1, SL2 or SL3; all presets are printed when neither this nor --n is given.
    #[arg(long, conflicts_with_all = ["n", "v", "u"])]
    preset: Option<String>,
    #[arg(long, requires_all = ["v", "u"])]
    n: Option<u64>,
    #[arg(long)]
    v: Option<u64>,
    #[arg(long)]
    u: Option<u64>,
    /// Linear algebra exponent of the F4 estimate.
    #[arg(long, default_value_t = olivier::attacks::DEFAULT_OMEGA)]
    omega: f64,
    /// Solving degree for XL and F4; defaults to the first fall degree.
    #[arg(long)]
    degree: Option<u64>,
    /// Print every estimate as key: value records after the row.
    #[arg(long)]
    details: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum AttackKind {
    Kernel,
    Oilrecon,
    Lambdastrip,
}

#[derive(Args, Debug)]
struct AttackArgs {
    #[arg(value_enum)]
    kind: AttackKind,
    /// Attack this key instead of generating one.
    #[arg(long = "pub")]
    public: Option<PathBuf>,
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long)]
    seed: Option<u64>,
    /// Sample budget of the oil reconstruction.
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    /// Extra rows in the oil-space rank test.
    #[arg(long, default_value_t = 5)]
    margin: usize,
    /// Largest u the Λ enumeration accepts.
    #[arg(long, default_value_t = 16)]
    max_u: usize,
}

/// Failure classes mapped onto exit statuses.
#[derive(Debug)]
enum Failure {
    Protocol(String),
    Usage(String),
    Budget(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Protocol(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Budget(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Protocol(m) | Failure::Usage(m) | Failure::Budget(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::BudgetExceeded { .. } => Failure::Budget(e.to_string()),
            Error::InvalidParams(_) | Error::InvalidConfig(_) | Error::ChunkSize(_) => Failure::Usage(e.to_string()),
            _ => Failure::Protocol(e.to_string()),
        }
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Keygen(a) => commands::keygen(a),
        Command::Encaps(a) => commands::encaps(a),
        Command::Decaps(a) => commands::decaps(a),
        Command::Confirm(a) => commands::confirm(a),
        Command::Kexdemo(a) => commands::kexdemo(a),
        Command::Analyze(a) => commands::analyze(a),
        Command::Estimate(a) => commands::estimate(a),
        Command::Attack(a) => commands::attack(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("olivier: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
