//! The `qcurv` command line.
//!
//! Exit codes: 0 success, 1 bad config or input, 2 convergence or
//! verification failure, 3 sweep with failed rows.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use log::error;
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::euclidean::{default_radii, RadialProfile};
use crate::minimizer::SolverConfig;
use crate::solution::{solve, SolutionRecord};
use crate::sphere::SPHERE_VOLUME;
use crate::verify::{verify_record, VerifySettings};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;
pub const EXIT_PARTIAL_SWEEP: i32 = 3;

/// Thread count for `sweep`; unset means one per core.
pub const THREADS_ENV: &str = "QCURV_THREADS";

pub const PROFILE_HEADER: &str = "r,u,v,delta_u,scalar_curvature";
pub const SWEEP_HEADER: &str = "mu,V,alpha,pohozaev_lhs,pohozaev_rhs,el_residual,volume_margin";

#[derive(Debug, Parser)]
#[command(name = "qcurv", version, about = "Constant Q-curvature metrics on R³ with prescribed volume")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for one volume deficit and write the record and radial profile.
    Solve {
        /// `key = value` configuration file.
        #[arg(long)]
        config: PathBuf,
        /// Output directory, created if missing.
        #[arg(long)]
        out: PathBuf,
    },
    /// Verify a stored solution or a spherical reference `w_{0,λ}`.
    Verify {
        /// Solution record written by `solve`.
        #[arg(long, required_unless_present = "spherical_reference")]
        solution: Option<PathBuf>,
        /// Verify the spherical solution with scale `λ > 0` instead.
        #[arg(long, value_name = "LAMBDA", conflicts_with = "solution", allow_negative_numbers = true)]
        spherical_reference: Option<f64>,
        /// Report path; standard output if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve over several volume deficits and tabulate the invariants.
    Sweep {
        /// Comma-separated values in (0, 1).
        #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
        mu: Vec<f64>,
        /// Gaussian coefficient, shared by every row.
        #[arg(long, allow_negative_numbers = true)]
        a: f64,
        /// CSV table path.
        #[arg(long)]
        out: PathBuf,
        /// Base configuration for everything except `mu` and `gaussian_a`.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

/// Formats with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string().to_lowercase()
    }
}

pub fn profile_csv(profile: &RadialProfile) -> String {
    let mut out = String::from(PROFILE_HEADER);
    out.push('\n');
    for i in 0..profile.len() {
        let row = [
            profile.radii[i],
            profile.u[i],
            profile.v[i],
            profile.delta_u[i],
            profile.scalar_curvature[i],
        ];
        let cells: Vec<String> = row.iter().map(|&x| fmt_f64(x)).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub mu: f64,
    pub volume: f64,
    pub alpha: f64,
    pub pohozaev_lhs: f64,
    pub pohozaev_rhs: f64,
    pub el_residual: f64,
    pub volume_margin: f64,
    pub failure: Option<String>,
}

impl SweepRow {
    fn failed(mu: f64, reason: String) -> Self {
        Self {
            mu,
            volume: f64::NAN,
            alpha: f64::NAN,
            pohozaev_lhs: f64::NAN,
            pohozaev_rhs: f64::NAN,
            el_residual: f64::NAN,
            volume_margin: f64::NAN,
            failure: Some(reason),
        }
    }

    fn from_record(record: &SolutionRecord) -> Self {
        let mu = record.config.mu;
        let (Some(volume), Some(alpha), Some(lhs), Some(rhs)) = (
            record.volume,
            record.alpha,
            record.pohozaev_lhs,
            record.pohozaev_rhs,
        ) else {
            return Self::failed(mu, "volume diverged".into());
        };
        let margin = SPHERE_VOLUME - volume;
        let failure = if !record.converged {
            Some(format!("no convergence (residual {:e})", record.el_residual))
        } else if margin.is_nan() || margin <= 0.0 {
            Some(format!("volume margin {margin:e} is not positive"))
        } else {
            None
        };
        if let Some(reason) = failure {
            return Self::failed(mu, reason);
        }
        Self {
            mu,
            volume,
            alpha,
            pohozaev_lhs: lhs,
            pohozaev_rhs: rhs,
            el_residual: record.el_residual,
            volume_margin: margin,
            failure: None,
        }
    }

    pub fn csv_line(&self) -> String {
        [
            self.mu,
            self.volume,
            self.alpha,
            self.pohozaev_lhs,
            self.pohozaev_rhs,
            self.el_residual,
            self.volume_margin,
        ]
        .iter()
        .map(|&x| fmt_f64(x))
        .collect::<Vec<_>>()
        .join(",")
    }
}

fn sweep_threads() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(text) => match text.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::config(THREADS_ENV, format!("expected a positive integer, got `{text}`"))),
        },
    }
}

/// One row per `mu`, sorted ascending; rows are solved concurrently.
pub fn run_sweep(
    mus: &[f64],
    gaussian_a: f64,
    base: &SolverConfig,
    settings: &VerifySettings,
    threads: Option<usize>,
) -> Result<Vec<SweepRow>> {
    if mus.is_empty() {
        return Err(Error::InvalidArgument("empty mu list".into()));
    }
    let mut sorted = mus.to_vec();
    for &mu in &sorted {
        SolverConfig {
            mu,
            gaussian_a,
            ..*base
        }
        .validate()?;
    }
    sorted.sort_by(f64::total_cmp);

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::NumericalFailure(format!("thread pool: {e}")))?;
    Ok(pool.install(|| {
        sorted
            .par_iter()
            .map(|&mu| {
                let config = SolverConfig {
                    mu,
                    gaussian_a,
                    ..*base
                };
                match solve(&config, settings) {
                    Ok(record) => SweepRow::from_record(&record),
                    Err(err) => SweepRow::failed(mu, err.to_string()),
                }
            })
            .collect()
    }))
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.csv_line());
        out.push('\n');
    }
    out
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::ConvergenceFailure { .. } => EXIT_FAILURE,
        _ => EXIT_INPUT,
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })
}

fn cmd_solve(config_path: &Path, out: &Path) -> Result<i32> {
    let config = RunConfig::read(config_path)?;
    let record = solve(&config.solver, &config.verify)?;
    std::fs::create_dir_all(out)?;
    write_file(&out.join(&config.solution_file), &record.to_json()?)?;
    let profile = RadialProfile::build(&record.solution(), &default_radii())?;
    write_file(&out.join(&config.profile_file), &profile_csv(&profile))?;
    if record.converged {
        Ok(EXIT_OK)
    } else {
        eprintln!(
            "no convergence after {} iterations (residual {:e})",
            record.iterations, record.el_residual
        );
        Ok(EXIT_FAILURE)
    }
}

fn cmd_verify(solution: Option<&Path>, lambda: Option<f64>, out: Option<&Path>) -> Result<i32> {
    let record = match (solution, lambda) {
        (Some(path), _) => SolutionRecord::read(path)?,
        (None, Some(lambda)) => {
            let defaults = SolverConfig::default();
            SolutionRecord::spherical_reference(
                lambda,
                defaults.degree_cap,
                defaults.grid_size,
                VerifySettings::default(),
            )?
        }
        (None, None) => return Err(Error::InvalidArgument("nothing to verify".into())),
    };
    record.settings.validate()?;
    let report = verify_record(&record);
    let text = serde_json::to_string_pretty(&report)?;
    match out {
        Some(path) => write_file(path, &text)?,
        None => {
            // a closed pipe downstream is not a verification failure
            let _ = writeln!(std::io::stdout().lock(), "{text}");
        }
    }
    for check in report.checks.iter().filter(|c| !c.passed) {
        eprintln!("FAIL {}", check.name);
    }
    Ok(if report.passed { EXIT_OK } else { EXIT_FAILURE })
}

fn cmd_sweep(mus: &[f64], a: f64, out: &Path, config: Option<&Path>) -> Result<i32> {
    let base = match config {
        Some(path) => RunConfig::read(path)?,
        None => RunConfig::default(),
    };
    let rows = run_sweep(mus, a, &base.solver, &base.verify, sweep_threads()?)?;
    write_file(out, &sweep_csv(&rows))?;
    let failed: Vec<&SweepRow> = rows.iter().filter(|r| r.failure.is_some()).collect();
    for row in &failed {
        eprintln!("mu = {}: {}", row.mu, row.failure.as_deref().unwrap_or(""));
    }
    Ok(if failed.is_empty() { EXIT_OK } else { EXIT_PARTIAL_SWEEP })
}

pub fn run(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Solve { config, out } => cmd_solve(config, out),
        Command::Verify {
            solution,
            spherical_reference,
            out,
        } => cmd_verify(solution.as_deref(), *spherical_reference, out.as_deref()),
        Command::Sweep { mu, a, out, config } => cmd_sweep(mu, *a, out, config.as_deref()),
    };
    result.unwrap_or_else(|err| {
        error!("{err}");
        eprintln!("error: {err}");
        exit_code(&err)
    })
}

/// Parses `args` and runs; usage errors exit with [`EXIT_INPUT`].
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(err) => {
            let _ = err.print();
            if err.use_stderr() {
                EXIT_INPUT
            } else {
                EXIT_OK
            }
        }
    }
}
