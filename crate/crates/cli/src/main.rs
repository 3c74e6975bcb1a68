use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use exc_core::bounds::{ConstantsProfile, LadderInput};
use exc_core::curve::CurveInput;
use exc_core::frobenius::{cache, CompareMode};
use exc_core::pipeline::{self, AnalysisConfig, ScanPolicy};
use exc_core::Error;
use num_bigint::BigInt;

mod text;

/// Exceptional-prime analysis for elliptic curves over Q.
#[derive(Parser)]
#[command(name = "exc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Trace table, mod-l image scan and bound comparisons for one curve.
    Analyze(AnalyzeArgs),
    /// Find the first prime separating two curves' Frobenius data.
    Compare(CompareArgs),
    /// Evaluate the full bound ladder.
    Bounds(BoundsArgs),
    /// Least inert and split primes of quadratic fields.
    ChebLab(ChebArgs),
    /// Check the subgroup classifier and the image classifier on every family.
    Gl2Selftest(SelftestArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Plain,
    Adams12,
    Both,
}

#[derive(Args)]
struct Common {
    /// Output format.
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct CurveArg {
    /// Inline curve: `a1,a2,a3,a4,a6` or a JSON object.
    #[arg(long)]
    curve: Option<String>,
    /// File holding the curve as JSON or CSV shorthand.
    #[arg(long)]
    curve_file: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    curve: CurveArg,
    /// Largest prime in the trace table.
    #[arg(long, default_value_t = pipeline::DEFAULT_TRACE_BOUND)]
    trace_bound: u64,
    /// Largest l to classify: `auto` or an integer >= 37.
    #[arg(long, default_value = "auto")]
    scan_bound: String,
    /// Constants profile JSON; defaults to all constants 1.
    #[arg(long)]
    profile: Option<PathBuf>,
    /// Trace cache directory; overrides EXC_CACHE_DIR.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct CompareArgs {
    /// First curve, inline.
    #[arg(long, required_unless_present = "first_file")]
    first: Option<String>,
    #[arg(long, conflicts_with = "first")]
    first_file: Option<PathBuf>,
    /// Second curve, inline.
    #[arg(long, required_unless_present = "second_file")]
    second: Option<String>,
    #[arg(long, conflicts_with = "second")]
    second_file: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "both")]
    mode: ModeArg,
    /// Compare primes up to this bound.
    #[arg(long, default_value_t = 1000)]
    bound: u64,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct BoundsArgs {
    /// Ladder input JSON: invariants, conductor, additive_count, p, d, avoid_norm, bootstrap, c_abs.
    #[arg(long, required_unless_present = "conductor")]
    field: Option<PathBuf>,
    /// Conductor over Q, when no field file is given.
    #[arg(long, conflicts_with = "field")]
    conductor: Option<String>,
    #[arg(long, default_value_t = 0, conflicts_with = "field")]
    additive_count: u32,
    #[arg(long)]
    profile: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ChebArgs {
    /// Largest |D| swept.
    #[arg(long, default_value_t = 10_000)]
    quadratic_range: u64,
    #[arg(long, default_value_t = 100_000)]
    sieve_bound: u64,
    /// `text` writes CSV rows.
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct SelftestArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [5u64, 7, 11, 13])]
    ells: Vec<u64>,
    #[command(flatten)]
    common: Common,
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn load_curve(inline: Option<&String>, file: Option<&PathBuf>) -> Result<CurveInput, Error> {
    let text = match (inline, file) {
        (Some(t), _) => t.clone(),
        (None, Some(p)) => read(p)?,
        (None, None) => return Err(Error::Config("no curve given".into())),
    };
    Ok(CurveInput::parse(&text)?)
}

fn load_profile(path: Option<&PathBuf>) -> Result<ConstantsProfile, Error> {
    match path {
        Some(p) => Ok(ConstantsProfile::from_json(&read(p)?)?),
        None => Ok(ConstantsProfile::default()),
    }
}

fn cache_dir(flag: Option<PathBuf>) -> Option<PathBuf> {
    flag.or_else(cache::cache_dir_from_env)
}

fn json<T: serde::Serialize>(value: &T) -> Result<String, Error> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| Error::Invariant(format!("serialization: {e}")))
}

/// Output text and whether the run passed its own checks.
fn run(cli: Cli) -> Result<(String, bool), Error> {
    match cli.command {
        Command::Analyze(a) => {
            let input = load_curve(a.curve.curve.as_ref(), a.curve.curve_file.as_ref())?;
            let scan = match a.scan_bound.as_str() {
                "auto" => ScanPolicy::Auto,
                s => ScanPolicy::Fixed(
                    s.parse().map_err(|_| Error::Config(format!("scan bound '{s}' is neither 'auto' nor an integer")))?,
                ),
            };
            let config = AnalysisConfig {
                trace_bound: a.trace_bound,
                scan,
                profile: load_profile(a.profile.as_ref())?,
                jobs: a.common.jobs,
                cache_dir: cache_dir(a.cache_dir),
            };
            let report = pipeline::analyze(&input, &config)?;
            let out = match a.common.format {
                Format::Json => json(&report)?,
                Format::Text => text::analysis(&report),
            };
            Ok((out, true))
        }
        Command::Compare(c) => {
            let first = load_curve(c.first.as_ref(), c.first_file.as_ref())?;
            let second = load_curve(c.second.as_ref(), c.second_file.as_ref())?;
            let modes = match c.mode {
                ModeArg::Plain => vec![CompareMode::Plain],
                ModeArg::Adams12 => vec![CompareMode::Adams12],
                ModeArg::Both => vec![CompareMode::Plain, CompareMode::Adams12],
            };
            let dir = cache_dir(c.cache_dir);
            let report = pipeline::compare_curves(&first, &second, &modes, c.bound, c.common.jobs, dir.as_ref())?;
            let out = match c.common.format {
                Format::Json => json(&report)?,
                Format::Text => text::comparison(&report),
            };
            Ok((out, true))
        }
        Command::Bounds(b) => {
            let input = match (&b.field, &b.conductor) {
                (Some(p), _) => LadderInput::from_json(&read(p)?)?,
                (None, Some(n)) => {
                    let n: BigInt = n.trim().parse().map_err(|_| Error::Config(format!("conductor '{n}' is not an integer")))?;
                    LadderInput::for_curve(n, b.additive_count)
                }
                (None, None) => return Err(Error::Config("give --field or --conductor".into())),
            };
            let report = pipeline::bound_report(&input, &load_profile(b.profile.as_ref())?)?;
            let out = match b.common.format {
                Format::Json => json(&report)?,
                Format::Text => text::bounds(&report),
            };
            Ok((out, true))
        }
        Command::ChebLab(c) => {
            let report = pipeline::cheb_sweep(c.quadratic_range, c.sieve_bound, c.jobs)?;
            let out = match c.format {
                Format::Json => json(&report)?,
                Format::Text => {
                    eprint!("{}", text::envelope(&report.envelope));
                    exc_core::cheb_lab::to_csv(&report.data)
                }
            };
            Ok((out, true))
        }
        Command::Gl2Selftest(s) => {
            let report = pipeline::gl2_selftest(&s.ells, s.common.jobs)?;
            let out = match s.common.format {
                Format::Json => json(&report)?,
                Format::Text => text::selftest(&report),
            };
            Ok((out, report.all_pass))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok((out, passed))) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(out.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::from(3);
            }
            if passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("error: self-test failed");
                ExitCode::from(3)
            }
        }
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(_) => ExitCode::from(3),
    }
}
