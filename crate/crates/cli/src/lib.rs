//! Batch front end: `gen`, `validate`, `embed`, `report`, `check-mazur`.
//!
//! Exit codes: 0 success, 1 completed with violations, 2 input or usage
//! error, 3 construction error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use coarse_lp::distortion_report::{empirical_profile, export, ExportFormat};
use coarse_lp::metric_spaces::generate_with_dim;
use coarse_lp::{
    build_embedding, check_estimates, validate, verify_bounds, CoarseEmbedding, EmbeddingConfig, Error,
    FiniteMetricSpace, KernelKind, PExponent, SpaceKind,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATIONS: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONSTRUCTION: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "coarse-lp", version, about = "Certified coarse embeddings of finite metric spaces into l_p")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a test metric space.
    Gen(GenArgs),
    /// Check the metric axioms of a space file.
    Validate(ValidateArgs),
    /// Build an embedding of a space into l_p.
    Embed(EmbedArgs),
    /// Profile an embedding and verify its envelopes.
    Report(ReportArgs),
    /// Sample random sphere pairs and check the Mazur map estimates.
    CheckMazur(CheckMazurArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long, value_parser = parse_kind)]
    kind: SpaceKind,
    #[arg(long)]
    param: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Ambient dimension of gaussian clouds.
    #[arg(long, default_value_t = coarse_lp::metric_spaces::DEFAULT_GAUSSIAN_DIM)]
    dim: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long)]
    space: PathBuf,
}

#[derive(Debug, Args)]
struct EmbedArgs {
    #[arg(long)]
    space: PathBuf,
    #[arg(long)]
    p: f64,
    /// Number of levels; defaults to ceil(diameter) + 2.
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long, default_value_t = coarse_lp::coarse_embedder::DEFAULT_DELTA)]
    delta: f64,
    #[arg(long, value_parser = parse_kernel)]
    kernel: Option<KernelKind>,
    #[arg(long, default_value_t = 0)]
    base: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[arg(long)]
    space: PathBuf,
    #[arg(long)]
    embedding: PathBuf,
    #[arg(long, default_value_t = 16)]
    buckets: usize,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CheckMazurArgs {
    #[arg(long)]
    p: f64,
    #[arg(long)]
    q: f64,
    #[arg(long, default_value_t = 64)]
    dim: usize,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_kind(s: &str) -> Result<SpaceKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_kernel(s: &str) -> Result<KernelKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_construction() { EXIT_CONSTRUCTION } else { EXIT_USAGE };
        Failure { code, message: e.to_string() }
    }
}

type Outcome = Result<i32, Failure>;

/// Parses `argv` (program name first), runs one subcommand and returns the
/// process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Gen(args) => run_gen(args),
        Command::Validate(args) => run_validate(args),
        Command::Embed(args) => run_embed(args),
        Command::Report(args) => run_report(args),
        Command::CheckMazur(args) => run_check_mazur(args),
    };
    match outcome {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match path {
        Some(path) => fs::write(path, bytes).map_err(|e| Failure::usage(format!("{}: {e}", path.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)
                .and_then(|_| out.write_all(b"\n"))
                .map_err(|e| Failure::usage(e.to_string()))
        }
    }
}

fn load_space(path: &Path) -> Result<FiniteMetricSpace, Failure> {
    Ok(FiniteMetricSpace::from_json(&read(path)?)?)
}

fn exponent(value: f64, flag: &str) -> Result<PExponent, Failure> {
    PExponent::new(value).map_err(|e| Failure::usage(format!("--{flag}: {e}")))
}

fn run_gen(args: GenArgs) -> Outcome {
    let space = generate_with_dim(args.kind, args.param, args.seed, args.dim)?;
    write_output(args.out.as_deref(), space.to_json().as_bytes())?;
    if let Some(out) = &args.out {
        eprintln!("wrote {} points to {}", space.len(), out.display());
    }
    Ok(EXIT_OK)
}

fn run_validate(args: ValidateArgs) -> Outcome {
    let space = load_space(&args.space)?;
    let report = validate(&space);
    println!(
        "points={} diameter={} min_positive={} violations={}",
        space.len(),
        report.diameter,
        report.min_positive_distance.map_or("none".to_string(), |d| d.to_string()),
        report.violation_count
    );
    for v in &report.violations {
        println!("  {v}");
    }
    Ok(if report.is_valid() { EXIT_OK } else { EXIT_VIOLATIONS })
}

fn run_embed(args: EmbedArgs) -> Outcome {
    let space = load_space(&args.space)?;
    let mut config = EmbeddingConfig::new(exponent(args.p, "p")?).delta(args.delta).base(args.base);
    config.levels = args.levels;
    config.kernel = args.kernel;
    let embedding = build_embedding(&space, &config)?;
    write_output(args.out.as_deref(), embedding.to_json().as_bytes())?;
    let saturated = embedding.schedule().iter().filter(|l| l.separation.is_none()).count();
    eprintln!(
        "p={} levels={} saturated={} tail_bound={:e}",
        embedding.p(),
        embedding.level_count(),
        saturated,
        embedding.tail_bound()
    );
    Ok(EXIT_OK)
}

fn run_report(args: ReportArgs) -> Outcome {
    let space = load_space(&args.space)?;
    let embedding = CoarseEmbedding::from_json(&read(&args.embedding)?, &space)?;
    let profile = empirical_profile(&embedding, args.buckets)?;
    if let Some(path) = &args.csv {
        write_output(Some(path), &export(&profile, ExportFormat::Csv))?;
    }
    if let Some(path) = &args.json {
        write_output(Some(path), &export(&profile, ExportFormat::Json))?;
    }
    let verification = verify_bounds(&embedding)?;
    let pairs: usize = profile.buckets.iter().map(|b| b.pair_count).sum();
    println!(
        "pairs={} violations={} marginal={} tail_bound={:e}",
        pairs,
        verification.violations.len(),
        verification.marginal,
        embedding.tail_bound()
    );
    for v in verification.violations.iter().take(20) {
        println!(
            "  {:?} pair ({}, {}) d={} measured^p={} bound^p={}",
            v.side, v.pair.0, v.pair.1, v.distance, v.measured, v.bound
        );
    }
    Ok(if verification.is_clean() { EXIT_OK } else { EXIT_VIOLATIONS })
}

fn run_check_mazur(args: CheckMazurArgs) -> Outcome {
    let p = exponent(args.p, "p")?;
    let q = exponent(args.q, "q")?;
    let check = check_estimates(p, q, args.dim, args.samples, args.seed)?;
    println!(
        "check-mazur p={} q={} dim={} samples={} C={} worst_lower_ratio={} worst_upper_ratio={} \
         round_trip_error={:e} sphere_error={:e} failures={}",
        check.p,
        check.q,
        check.dim,
        check.samples,
        check.constant_c,
        check.worst_lower_ratio,
        check.worst_upper_ratio,
        check.round_trip_error,
        check.sphere_error,
        check.lower_failures + check.upper_failures
    );
    Ok(if check.passed() { EXIT_OK } else { EXIT_VIOLATIONS })
}
