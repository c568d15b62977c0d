//! Commands behind the `gffpin` binary.
//!
//! | command | output |
//! |---|---|
//! | `scan` | phase-diagram CSV, one row per `(n, b, h)` |
//! | `verify <suite>` | JSON pass/fail report |
//! | `bounds` | annealed and quenched-bound curves as CSV |
//! | `sample` | field configurations (CSV or binary) |
//! | `env gen` | environment JSON |
//! | `walk table` | massive-walk tabulation CSV |
//!
//! Every CSV starts with `#` lines carrying `format_version`, the command,
//! the effective settings as JSON and the generator name. Exit codes: 0 on
//! success, 1 when a verification suite fails or a run aborts, 2 for
//! invalid configuration.

pub mod config;
pub mod scan;
pub mod tables;
pub mod verify;

pub use config::{parse_grid, parse_sizes, ScanConfig, ScanOverrides, Sizes};
pub use scan::{run_scan, write_scan, write_scan_body, ScanRow, SCAN_CSV_HEADER};
pub use tables::{bounds_table, env_gen, sample_fields, walk_table, FieldFormat, SampleSpec};
pub use verify::{run_suite, Check, VerifyReport, SUITES};

use crate::error::{Error, Result};
use crate::pinning::EstimatorChoice;
use clap::{Args, Parser, Subcommand};
use serde_json::json;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

/// Shortest round-trip formatting, so equal values give equal bytes.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

/// Empty field for `None`.
pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub(crate) fn write_header<W: Write>(out: &mut W, command: &str, config_json: &str) -> Result<()> {
    writeln!(out, "# format_version={}", crate::FORMAT_VERSION)?;
    writeln!(out, "# command={command}")?;
    writeln!(out, "# config={config_json}")?;
    writeln!(out, "# rng={}", crate::rng::RNG_ALGORITHM)?;
    Ok(())
}

/// Runs `f` on a pool of `workers` threads (0: all cores).
pub fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Numerical(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// 2 for configuration and input problems, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidParameter(_)
        | Error::Format(_)
        | Error::Json(_)
        | Error::BoxTooLarge { .. } => EXIT_INVALID,
        _ => EXIT_FAILURE,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "gffpin",
    version,
    about = "Disordered pinning of the lattice Gaussian free field"
)]
pub struct Cli {
    /// Master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (0: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// JSON scan configuration; command-line values override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Quenched, annealed and bound columns over a (b, h) grid.
    Scan(ScanArgs),
    /// Run a verification suite.
    Verify {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(SUITES))]
        suite: String,
    },
    /// Annealed critical line and the quenched lower-bound curve.
    Bounds(BoundsArgs),
    /// Configurations from the pinned measure.
    Sample(SampleArgs),
    /// Environment operations.
    Env {
        #[command(subcommand)]
        command: EnvCommand,
    },
    /// Random-walk tabulations.
    Walk {
        #[command(subcommand)]
        command: WalkCommand,
    },
}

#[derive(Debug, Args, Default)]
pub struct ScanArgs {
    /// Dimension.
    #[arg(long)]
    pub d: Option<usize>,
    /// Side length(s), comma separated.
    #[arg(long)]
    pub n: Option<String>,
    /// Half-width of the well.
    #[arg(long)]
    pub a: Option<f64>,
    /// `lo:hi:count` or a comma list.
    #[arg(long, allow_hyphen_values = true)]
    pub b_grid: Option<String>,
    /// `lo:hi:count` or a comma list.
    #[arg(long, allow_hyphen_values = true)]
    pub h_grid: Option<String>,
    /// Environments per grid point.
    #[arg(long)]
    pub environments: Option<usize>,
    /// Importance samples per estimate.
    #[arg(long)]
    pub samples: Option<usize>,
    /// auto, is, ti or oracle.
    #[arg(long, value_parser = parse_estimator)]
    pub estimator: Option<EstimatorChoice>,
    /// Width of the `−b + h` band covered by the bound.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Reference mass for the d = 2 constants.
    #[arg(long)]
    pub bound_mass: Option<f64>,
}

fn parse_estimator(s: &str) -> std::result::Result<EstimatorChoice, String> {
    serde_json::from_value(json!(s.to_ascii_lowercase()))
        .map_err(|_| format!("unknown estimator {s:?} (auto, is, ti, oracle)"))
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long, default_value_t = 3)]
    pub d: usize,
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    #[arg(long, default_value = "0:0.5:51", allow_hyphen_values = true)]
    pub b_grid: String,
    /// Reference mass for the d = 2 constants.
    #[arg(long, default_value_t = 0.01)]
    pub mass: f64,
    #[arg(long, default_value_t = crate::bounds::DEFAULT_EPSILON)]
    pub epsilon: f64,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    #[arg(long, default_value_t = 0.0)]
    pub b: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub h: f64,
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long, default_value_t = 200)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 10)]
    pub thin: usize,
    #[arg(long, value_enum, default_value_t = FieldFormat::Csv)]
    pub format: FieldFormat,
    /// Environment JSON (default: generated from the seed).
    #[arg(long)]
    pub env: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum EnvCommand {
    /// Write an environment as JSON.
    Gen {
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        b: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        h: f64,
    },
}

#[derive(Debug, Subcommand)]
pub enum WalkCommand {
    /// d = 2 centre variance and partition-ratio table.
    Table {
        /// Masses, `lo:hi:count` or a comma list.
        #[arg(long, default_value = "0.1,0.03,0.01,0.003,0.001")]
        m: String,
        #[arg(long, default_value = "8,16,32")]
        n: String,
        /// Skip the return-probability series (log-determinant only).
        #[arg(long)]
        no_series: bool,
    },
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(std::io::BufWriter::new(std::io::stdout().lock())),
    })
}

fn config_only_for_scan(cli: &Cli) -> Result<()> {
    if cli.config.is_some() && !matches!(cli.command, Command::Scan(_)) {
        return Err(Error::InvalidParameter(
            "--config applies to scan only".into(),
        ));
    }
    Ok(())
}

pub fn scan_config(cli: &Cli, args: &ScanArgs) -> Result<ScanConfig> {
    let base = match &cli.config {
        Some(p) => ScanConfig::load(p)?,
        None => ScanConfig::default(),
    };
    let overrides = ScanOverrides {
        d: args.d,
        n: args.n.as_deref().map(parse_sizes).transpose()?,
        a: args.a,
        b_grid: args.b_grid.as_deref().map(parse_grid).transpose()?,
        h_grid: args.h_grid.as_deref().map(parse_grid).transpose()?,
        environments: args.environments,
        samples: args.samples,
        estimator: args.estimator,
        seed: cli.seed,
        workers: cli.workers,
        out: cli.out.clone(),
        epsilon: args.epsilon,
        bound_mass: args.bound_mass,
    };
    overrides.apply(base)
}

/// Executes a parsed command line and returns the exit code.
pub fn run(cli: Cli) -> Result<i32> {
    config_only_for_scan(&cli)?;
    let seed = cli.seed.unwrap_or(0);
    let workers = cli.workers.unwrap_or(0);
    match &cli.command {
        Command::Scan(args) => {
            let cfg = scan_config(&cli, args)?;
            let (c, rows) = run_scan(&cfg)?;
            let mut out = output(cfg.out.as_deref())?;
            write_scan(&cfg, &c, &rows, &mut out)?;
            out.flush()?;
            Ok(EXIT_OK)
        }
        Command::Verify { suite } => {
            let report = with_pool(workers, || run_suite(suite, seed))??;
            let mut out = output(cli.out.as_deref())?;
            writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
            out.flush()?;
            for c in report.failures() {
                eprintln!("FAIL {}: measured {}", c.name, c.measured);
            }
            Ok(if report.passed { EXIT_OK } else { EXIT_FAILURE })
        }
        Command::Bounds(args) => {
            let grid = parse_grid(&args.b_grid)?;
            let table = with_pool(workers, || {
                bounds_table(&grid, args.d, args.a, args.mass, args.epsilon)
            })??;
            let echo = json!({
                "d": args.d, "a": args.a, "b_grid": grid, "mass": args.mass,
                "epsilon": args.epsilon, "format_version": crate::FORMAT_VERSION,
            });
            let mut out = output(cli.out.as_deref())?;
            table.write_csv(&mut out, &echo.to_string())?;
            out.flush()?;
            Ok(EXIT_OK)
        }
        Command::Sample(args) => {
            let spec = SampleSpec {
                d: args.d,
                n: args.n,
                a: args.a,
                b: args.b,
                h: args.h,
                seed,
                count: args.count,
                burn_in: args.burn_in,
                thin: args.thin,
            };
            if args.count > 1 && args.format == FieldFormat::Csv {
                return Err(Error::InvalidParameter(
                    "CSV holds a single configuration; use --format binary for --count > 1".into(),
                ));
            }
            let env = match &args.env {
                Some(p) => {
                    let text = std::fs::read_to_string(p).map_err(|e| {
                        Error::InvalidParameter(format!("cannot read {}: {e}", p.display()))
                    })?;
                    Some(crate::lattice::Environment::from_json(&text)?)
                }
                None => None,
            };
            let result = sample_fields(&spec, env)?;
            let mut out = output(cli.out.as_deref())?;
            tables::write_fields(&result.fields, args.format, &mut out)?;
            out.flush()?;
            eprintln!(
                "{}",
                json!({
                    "window_fraction": result.window_fraction,
                    "flags": result.flags,
                    "spec": spec,
                })
            );
            Ok(EXIT_OK)
        }
        Command::Env {
            command: EnvCommand::Gen { d, n, b, h },
        } => {
            let env = env_gen(*d, *n, *b, *h, seed)?;
            let mut out = output(cli.out.as_deref())?;
            writeln!(out, "{}", env.to_json()?)?;
            out.flush()?;
            Ok(EXIT_OK)
        }
        Command::Walk {
            command: WalkCommand::Table { m, n, no_series },
        } => {
            let masses = parse_grid(m)?;
            let sizes = parse_sizes(n)?;
            let rows = walk_table(&masses, &sizes, !no_series, workers)?;
            let echo = json!({
                "m": masses, "n": sizes, "series": !no_series,
                "format_version": crate::FORMAT_VERSION,
            });
            let mut out = output(cli.out.as_deref())?;
            tables::write_walk_table(&rows, &mut out, &echo.to_string())?;
            out.flush()?;
            Ok(EXIT_OK)
        }
    }
}

/// Parses `args` and runs; errors are printed to stderr and mapped to exit
/// codes.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("gffpin").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flags_override_config_values() {
        let cli = parse(&[
            "--seed",
            "5",
            "scan",
            "--n",
            "2,3",
            "--h-grid",
            "-0.2:0.2:3",
        ]);
        let Command::Scan(args) = &cli.command else {
            panic!()
        };
        let cfg = scan_config(&cli, args).unwrap();
        assert_eq!(cfg.seed, 5);
        assert_eq!(cfg.n, Sizes::Many(vec![2, 3]));
        assert_eq!(cfg.h_grid, vec![-0.2, 0.0, 0.2]);
    }

    #[test]
    fn global_flags_after_subcommand() {
        let cli = parse(&["verify", "stirling", "--seed", "3", "--workers", "2"]);
        assert_eq!(cli.seed, Some(3));
        assert_eq!(cli.workers, Some(2));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(main_with(["gffpin", "verify", "bogus"]), EXIT_INVALID);
        assert_eq!(main_with(["gffpin", "scan", "--b-grid", "x"]), EXIT_INVALID);
        assert_eq!(
            main_with(["gffpin", "scan", "--environments", "0"]),
            EXIT_INVALID
        );
        assert_eq!(
            main_with(["gffpin", "--config", "/nonexistent.json", "scan"]),
            EXIT_INVALID
        );
        assert_eq!(
            main_with(["gffpin", "--config", "x.json", "bounds"]),
            EXIT_INVALID
        );
        assert_eq!(exit_code(&Error::Numerical("x".into())), EXIT_FAILURE);
    }

    #[test]
    fn estimator_names() {
        assert_eq!(parse_estimator("TI").unwrap(), EstimatorChoice::Ti);
        assert_eq!(parse_estimator("auto").unwrap(), EstimatorChoice::Auto);
        assert!(parse_estimator("mcmc").is_err());
    }
}
