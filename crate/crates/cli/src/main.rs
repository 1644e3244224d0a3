//! `diophlab`: verification scans and reports from the command line.
//!
//! Exit status: 0 clean, 1 inequality violation found, 2 configuration or
//! parse error, 3 precision guard, 4 work budget exceeded.

mod commands;
mod report;
mod settings;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use diophlab::error::Error;

use crate::settings::{read_config, Settings};

/// Environment variable giving the default worker count.
const WORKERS_ENV: &str = "DIOPHLAB_WORKERS";

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Lib(Error),
    Io(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    fn status(&self) -> u8 {
        match self {
            CliError::Lib(Error::PrecisionGuard(_)) => 3,
            CliError::Lib(Error::BudgetExceeded { .. }) => 4,
            _ => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "diophlab", version, about = "Exact verification scans for Khintchine-type bounds on affine hyperplanes")]
struct Cli {
    /// Flat `key=value` file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for `<name>.json`, `<name>.csv` and `manifest.json`;
    /// without it the JSON report goes to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Stem of the report files (default: the subcommand).
    #[arg(long, global = true)]
    name: Option<String>,
    /// Worker threads (default: $DIOPHLAB_WORKERS, else all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Convergence of Σ k^{n-1} ψ(k).
    Series(SeriesArgs),
    /// Empirical uniform exponent of a coefficient vector.
    Exponent(ExponentArgs),
    /// Largest δ with best_q > q^{-n+δ} over a range of q.
    DeltaMargin(DeltaArgs),
    /// Sampled measure of the shell regions against the level-set bound.
    ScanMeasure(ScanArgs),
    /// Exact measure of one strip family against its bound.
    Strip(StripArgs),
    /// Lower bounds on orbit sup norms over primitive subgroups.
    NondivScan(NondivArgs),
    /// Sampled small-orbit-vector measure against the nondivergence bound.
    BkmCheck(BkmArgs),
    /// Lower bound on the projected c-vectors of integer multivectors.
    Cvec(CvecArgs),
    /// (C, α)-good check for affine forms and their max norms.
    Good(GoodArgs),
    /// Dimension bound for the ψ-approximable set.
    DimBound(DimArgs),
    /// Tail of an explicit series or of the closing geometric series.
    Tail(TailArgs),
}

#[derive(Debug, Default, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
struct SeriesArgs {
    #[arg(long)]
    n: Option<String>,
    /// `pow:a=..,b=..,c=..`, `psi0:n=..` or `table:v1,v2,..`.
    #[arg(long)]
    psi: Option<String>,
    #[arg(long)]
    terms: Option<String>,
}

#[derive(Debug, Default, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
struct ExponentArgs {
    /// Rationals or presets (`sqrt2`, `phi`, ...), optional `@η`.
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    #[arg(long)]
    q_max: Option<String>,
}

#[derive(Debug, Default, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
struct DeltaArgs {
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    #[arg(long)]
    q_max: Option<String>,
    #[arg(long)]
    max_exceptional: Option<String>,
}

#[derive(Debug, Default, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
struct ScanArgs {
    #[arg(long)]
    n: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    /// `lo,hi` for every coordinate, or `lo,hi;lo,hi;...`.
    #[arg(long = "box", allow_hyphen_values = true)]
    #[serde(rename = "box")]
    box_: Option<String>,
    #[arg(long)]
    psi: Option<String>,
    /// `a..b` or a list.
    #[arg(long)]
    t: Option<String>,
    /// `geq`, `less` or `both`.
    #[arg(long)]
    side: Option<String>,
    /// `mc` or `grid`.
    #[arg(long)]
    sampler: Option<String>,
    #[arg(long)]
    samples: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    budget: Option<String>,
}

#[derive(Debug, Default, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
struct StripArgs {
    #[arg(long)]
    n: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    #[arg(long = "box", allow_hyphen_values = true)]
    #[serde(rename = "box")]
    box_: Option<String>,
    /// Integer vector `q_1,...,q_n`.
    #[arg(long, allow_hyphen_values = true)]
    q: Option<String>,
    #[arg(long)]
    theta: Option<String>,
    #[arg(long)]
    psi: Option<String>,
    #[arg(long)]
    t: Option<String>,
}

#[derive(Debug, Default, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
struct NondivArgs {
    #[arg(long)]
    n: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    #[arg(long = "box", allow_hyphen_values = true)]
    #[serde(rename = "box")]
    box_: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    t: Option<String>,
    #[arg(long)]
    height: Option<String>,
    #[arg(long)]
    ranks: Option<String>,
    /// Fixes δ instead of deriving it from q <= q-max.
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    q_max: Option<String>,
    #[arg(long)]
    max_exceptional: Option<String>,
    /// Covering constant N_d (default 1).
    #[arg(long)]
    n_d: Option<String>,
    #[arg(long)]
    budget: Option<String>,
}

#[derive(Debug, Default, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
struct BkmArgs {
    #[arg(long)]
    n: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    #[arg(long = "box", allow_hyphen_values = true)]
    #[serde(rename = "box")]
    box_: Option<String>,
    #[arg(long)]
    t: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    q_max: Option<String>,
    #[arg(long)]
    max_exceptional: Option<String>,
    #[arg(long)]
    n_d: Option<String>,
    #[arg(long)]
    sampler: Option<String>,
    #[arg(long)]
    samples: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    budget: Option<String>,
}

#[derive(Debug, Default, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
struct CvecArgs {
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    j: Option<String>,
    #[arg(long)]
    height: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    budget: Option<String>,
}

#[derive(Debug, Default, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
struct GoodArgs {
    /// `affine:c|g1,g2` or `maxabs:c|g1,g2;c|g1,g2`.
    #[arg(long, allow_hyphen_values = true)]
    target: Option<String>,
    #[arg(long = "box", allow_hyphen_values = true)]
    #[serde(rename = "box")]
    box_: Option<String>,
    #[arg(long)]
    c: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    sampler: Option<String>,
    #[arg(long)]
    samples: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    grid: Option<String>,
}

#[derive(Debug, Default, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
struct DimArgs {
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    m: Option<String>,
    #[arg(long)]
    psi: Option<String>,
}

#[derive(Debug, Default, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
struct TailArgs {
    /// Explicit terms `a_1,a_2,...`.
    #[arg(long, allow_hyphen_values = true)]
    terms: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    c_b: Option<String>,
    #[arg(long)]
    c_b3: Option<String>,
    /// First omitted index of the closing series.
    #[arg(long)]
    start: Option<String>,
}

/// Keys of an argument struct and the flags that were given.
fn split_args<A: Serialize + Default>(args: &A) -> (Vec<String>, BTreeMap<String, String>) {
    let to_map = |v: serde_json::Value| match v {
        serde_json::Value::Object(m) => m,
        _ => unreachable!("argument structs serialize to objects"),
    };
    let allowed = to_map(serde_json::to_value(A::default()).expect("args serialize"))
        .keys()
        .cloned()
        .collect();
    let given = to_map(serde_json::to_value(args).expect("args serialize"))
        .into_iter()
        .filter_map(|(k, v)| v.as_str().map(|s| (k, s.to_string())))
        .collect();
    (allowed, given)
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let (name, (allowed, flags)) = match &cli.command {
        Command::Series(a) => ("series", split_args(a)),
        Command::Exponent(a) => ("exponent", split_args(a)),
        Command::DeltaMargin(a) => ("delta-margin", split_args(a)),
        Command::ScanMeasure(a) => ("scan-measure", split_args(a)),
        Command::Strip(a) => ("strip", split_args(a)),
        Command::NondivScan(a) => ("nondiv-scan", split_args(a)),
        Command::BkmCheck(a) => ("bkm-check", split_args(a)),
        Command::Cvec(a) => ("cvec", split_args(a)),
        Command::Good(a) => ("good", split_args(a)),
        Command::DimBound(a) => ("dim-bound", split_args(a)),
        Command::Tail(a) => ("tail", split_args(a)),
    };
    let file = match &cli.config {
        Some(p) => read_config(p)?,
        None => BTreeMap::new(),
    };
    let from_text = |w: &str| {
        w.trim()
            .parse::<usize>()
            .map_err(|_| CliError::Config(format!("worker count `{w}` is not a natural number")))
    };
    let workers = match (cli.workers, file.get("workers"), std::env::var(WORKERS_ENV).ok()) {
        (Some(w), _, _) => Some(w),
        (None, Some(w), _) => Some(from_text(w)?),
        (None, None, Some(w)) => Some(from_text(&w)?),
        _ => None,
    };
    if let Some(w) = workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    }

    let mut s = Settings::merge(name, &allowed, file, flags)?;
    let report = match &cli.command {
        Command::Series(_) => commands::series(&mut s),
        Command::Exponent(_) => commands::exponent(&mut s),
        Command::DeltaMargin(_) => commands::delta_margin_cmd(&mut s),
        Command::ScanMeasure(_) => commands::scan_measure(&mut s),
        Command::Strip(_) => commands::strip(&mut s),
        Command::NondivScan(_) => commands::nondiv_scan(&mut s),
        Command::BkmCheck(_) => commands::bkm_check(&mut s),
        Command::Cvec(_) => commands::cvec(&mut s),
        Command::Good(_) => commands::good(&mut s),
        Command::DimBound(_) => commands::dim_bound(&mut s),
        Command::Tail(_) => commands::tail(&mut s),
    }?;
    let stem = cli.name.as_deref().unwrap_or(name);
    report::emit(&report, &s, cli.out.as_deref(), stem)?;
    for finding in &report.findings {
        eprintln!("violation: {finding}");
    }
    Ok(u8::from(report.violated()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("diophlab: {e}");
            ExitCode::from(e.status())
        }
    }
}
