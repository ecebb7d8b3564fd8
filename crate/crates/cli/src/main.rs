use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ske_core::dataset::Protocol;
use ske_core::ske::SkeParams;

mod commands;
mod error;
mod output;

use error::CliError;

const DEFAULT_PARAMS: &str = "128,1024,251,54,256";

/// Secret binding to real-valued vectors with symmetric keyring encryption.
#[derive(Debug, Parser)]
#[command(name = "ske", version)]
struct Cli {
    /// Seed for nonces, generated secrets and synthetic data.
    #[arg(long, env = "SKE_SEED", default_value_t = 0, global = true)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic population as CSV plus a JSON manifest.
    Gen(GenArgs),
    /// Bind a secret to one vector and write the helper-data container.
    Enroll(EnrollArgs),
    /// Recover the secret from a helper file and a query vector.
    Retrieve(RetrieveArgs),
    /// Run a genuine/imposter campaign and emit scores, rates and a summary.
    Eval(EvalArgs),
    /// Brute-force, false-accept and tag-indistinguishability figures.
    SecurityReport(SecurityArgs),
    /// Scores of re-keyed templates against true imposters.
    Revocability(RevocabilityArgs),
    /// Linkability of templates enrolled under independent nonces.
    Unlinkability(UnlinkabilityArgs),
    /// Empirical retrieval rate against the binomial model for pairs at a fixed cosine.
    ModelCheck(ModelCheckArgs),
    /// Spread of the normalized match count for several RV lengths.
    Spread(SpreadArgs),
}

fn parse_params(s: &str) -> Result<SkeParams, String> {
    let fields: Vec<&str> = s.split(',').map(str::trim).collect();
    if fields.len() != 5 {
        return Err(format!("expected d,m,p,k,ell, got {} fields", fields.len()));
    }
    let num = |i: usize, name: &str| -> Result<u64, String> {
        fields[i]
            .parse::<u64>()
            .map_err(|e| format!("{name} = {:?}: {e}", fields[i]))
    };
    let ell = num(4, "ell")?;
    let p = num(2, "p")?;
    let ell = u16::try_from(ell).map_err(|_| format!("ell = {ell} out of range"))?;
    let p = u32::try_from(p).map_err(|_| format!("p = {p} out of range"))?;
    SkeParams::new(num(0, "d")? as usize, num(1, "m")? as usize, p, num(3, "k")? as usize, ell)
        .map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Args)]
struct ParamsArg {
    /// Scheme parameters as d,m,p,k,ell.
    #[arg(long, value_parser = parse_params, default_value = DEFAULT_PARAMS)]
    params: SkeParams,
}

#[derive(Debug, Clone, Args)]
struct PopulationArgs {
    #[arg(long, default_value_t = 100)]
    subjects: usize,
    #[arg(long, default_value_t = 8)]
    impressions: usize,
    /// Mean within-subject cosine similarity.
    #[arg(long, default_value_t = 0.9, allow_negative_numbers = true)]
    cos_mean: f64,
    #[arg(long, default_value_t = 0.03)]
    cos_std: f64,
    /// Read vectors from CSV instead; consecutive rows form one subject.
    #[arg(long)]
    vectors: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[command(flatten)]
    population: PopulationArgs,
    #[arg(long, default_value_t = 128)]
    dim: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EnrollArgs {
    #[command(flatten)]
    params: ParamsArg,
    #[arg(long)]
    vectors: PathBuf,
    /// Zero-based row of the vector file to enroll.
    #[arg(long, default_value_t = 0)]
    row: usize,
    /// Secret as hex; derived from the seed when absent.
    #[arg(long)]
    secret_hex: Option<String>,
    #[arg(long)]
    helper: PathBuf,
    /// Write the secret as hex to this file.
    #[arg(long)]
    secret_out: Option<PathBuf>,
    /// Store SHA-256 of the secret next to the helper file as `<helper>.sha256`.
    #[arg(long)]
    store_secret_hash: bool,
}

#[derive(Debug, Args)]
struct RetrieveArgs {
    #[arg(long)]
    helper: PathBuf,
    #[arg(long)]
    vectors: PathBuf,
    #[arg(long, default_value_t = 0)]
    row: usize,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    params: ParamsArg,
    #[command(flatten)]
    population: PopulationArgs,
    #[arg(long, default_value = "full", value_parser = |s: &str| s.parse::<Protocol>().map_err(|e| e.to_string()))]
    protocol: Protocol,
    #[arg(long, default_value_t = 50)]
    bins: usize,
    #[arg(long)]
    out: PathBuf,
    /// Also write wall-clock decoding times to timings.json.
    #[arg(long)]
    timings: bool,
}

#[derive(Debug, Args)]
struct SecurityArgs {
    #[arg(long, default_value_t = 1024)]
    m: u64,
    #[arg(long, default_value_t = 54)]
    k: u64,
    #[arg(long, default_value_t = 251)]
    p: u32,
    /// Maximum imposter collision probability.
    #[arg(long, default_value_t = 0.1006)]
    p_max: f64,
    /// Mean genuine collision probability.
    #[arg(long, default_value_t = 0.5944)]
    p_genuine: f64,
    #[arg(long, default_value_t = 10)]
    q_log2: u32,
    /// Comma-separated `log2 q` values for the sweep.
    #[arg(long, value_delimiter = ',', default_value = "6,10,20,30,40,50")]
    q_sweep: Vec<u32>,
    /// Take m, k, p and both probabilities from an eval summary.json.
    #[arg(long)]
    from_eval: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RevocabilityArgs {
    #[command(flatten)]
    params: ParamsArg,
    #[command(flatten)]
    population: PopulationArgs,
    /// Number of nonce pairs each first impression is enrolled under.
    #[arg(long, default_value_t = 8)]
    keys: usize,
    #[arg(long, default_value_t = 50)]
    bins: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct UnlinkabilityArgs {
    #[command(flatten)]
    params: ParamsArg,
    #[command(flatten)]
    population: PopulationArgs,
    /// Prior ratio of mated to non-mated comparisons.
    #[arg(long, default_value_t = 1.0)]
    omega: f64,
    #[arg(long, default_value_t = 50)]
    bins: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ModelCheckArgs {
    #[command(flatten)]
    params: ParamsArg,
    /// Cosine similarity of each synthetic pair.
    #[arg(long)]
    cos: f64,
    #[arg(long, default_value_t = 500)]
    trials: usize,
    /// Nonce pairs to spread the trials over.
    #[arg(long, default_value_t = 4)]
    keyrings: usize,
}

#[derive(Debug, Args)]
struct SpreadArgs {
    #[command(flatten)]
    params: ParamsArg,
    #[arg(long)]
    cos: f64,
    /// Number of synthetic pairs.
    #[arg(long, default_value_t = 500)]
    trials: usize,
    /// RV lengths to evaluate, each at most m.
    #[arg(long, value_delimiter = ',', default_value = "256,512,1024")]
    m_list: Vec<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let seed = cli.seed;
    match cli.command {
        Command::Gen(a) => commands::gen(&a, seed),
        Command::Enroll(a) => commands::enroll(&a, seed),
        Command::Retrieve(a) => commands::retrieve(&a),
        Command::Eval(a) => commands::eval(&a, seed),
        Command::SecurityReport(a) => commands::security_report(&a),
        Command::Revocability(a) => commands::revocability(&a, seed),
        Command::Unlinkability(a) => commands::unlinkability(&a, seed),
        Command::ModelCheck(a) => commands::model_check(&a, seed),
        Command::Spread(a) => commands::spread(&a, seed),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // help and version output
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::Usage(e.render().to_string().trim_end().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
