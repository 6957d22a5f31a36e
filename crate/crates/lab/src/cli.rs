//! Command-line front end: `semiclassical-lab <subcommand> --config <path> --out <dir>`.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 numerical failure
//! (any per-point, fit or identity failure recorded in the report).

use crate::experiments::{identities_report, rates_report, IdentitiesConfig, RatesConfig, Report, Suite, SweepConfig};
use crate::{LabError, Result};
use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "semiclassical-lab", version, about = "Semiclassical sweeps, audits and rate fits on dense grids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML or JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Weyl-law error, envelope and linear convergence distances.
    Weyl(Common),
    /// Commutator norms, bound audits and resolvent sums.
    Comm(Common),
    /// Besov seminorm, three-regime ratios and density regularity.
    Besov(Common),
    /// Agmon weighted-mass audits.
    Agmon(Common),
    /// Thomas–Fermi solves.
    Tf(Common),
    /// Hartree solves and their distance to Thomas–Fermi.
    Hartree(Common),
    /// Random-matrix identity audits.
    Identities {
        /// Optional file with `count` and `tolerance`.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Log-log fits over previously written sweep CSVs.
    Rates(Common),
}

fn exit_code(e: &LabError) -> i32 {
    match e {
        LabError::Config(_) | LabError::InvalidParameter(_) | LabError::InvalidGrid(_) => EXIT_CONFIG,
        _ => EXIT_NUMERICAL,
    }
}

fn finish(report: &Report) -> i32 {
    for f in &report.failures {
        log::error!("{} (hbar {:?}): {}", f.quantity, f.hbar, f.error);
    }
    if report.failures.is_empty() {
        EXIT_OK
    } else {
        EXIT_NUMERICAL
    }
}

fn write_fit_table(report: &Report, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["quantity", "label", "points", "slope", "intercept", "r_squared", "target_exponent", "log_corrected_slope"])?;
    for f in &report.fits {
        w.write_record([
            f.quantity.clone(),
            f.label.clone(),
            f.points.len().to_string(),
            f.slope.to_string(),
            f.intercept.to_string(),
            f.r_squared.to_string(),
            f.target_exponent.to_string(),
            f.log_corrected_slope.map_or(String::new(), |s| s.to_string()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn execute(command: Command) -> Result<i32> {
    let sweep = |suite: Suite, common: Common| -> Result<i32> {
        let config = SweepConfig::load(&common.config)?;
        let report = suite.run(config)?;
        report.write(&common.out, suite.name())?;
        log::info!("{}: {} rows, {} fits -> {}", suite.name(), report.rows.len(), report.fits.len(), common.out.display());
        Ok(finish(&report))
    };
    match command {
        Command::Weyl(c) => sweep(Suite::Weyl, c),
        Command::Comm(c) => sweep(Suite::Comm, c),
        Command::Besov(c) => sweep(Suite::Besov, c),
        Command::Agmon(c) => sweep(Suite::Agmon, c),
        Command::Tf(c) => sweep(Suite::Tf, c),
        Command::Hartree(c) => sweep(Suite::Hartree, c),
        Command::Identities { config, out, seed } => {
            let config = match config {
                Some(path) => IdentitiesConfig::load(&path)?,
                None => IdentitiesConfig::default(),
            };
            // Random potentials trip the grid-resolution warnings meant for sweeps.
            let level = log::max_level();
            log::set_max_level(log::LevelFilter::Error);
            let result = identities_report(seed, &config);
            log::set_max_level(level);
            let (report, records) = result?;
            std::fs::create_dir_all(&out)?;
            let mut w = csv::Writer::from_path(out.join("identities.csv"))?;
            for r in &records {
                w.serialize(r)?;
            }
            w.flush()?;
            std::fs::write(out.join("report.json"), report.to_json()?)?;
            log::info!("identities: {} audits, {} failures", records.len(), report.failures.len());
            Ok(finish(&report))
        }
        Command::Rates(c) => {
            let report = rates_report(&RatesConfig::load(&c.config)?)?;
            std::fs::create_dir_all(&c.out)?;
            write_fit_table(&report, &c.out.join("rates.csv"))?;
            std::fs::write(c.out.join("report.json"), report.to_json()?)?;
            Ok(finish(&report))
        }
    }
}

/// Run the CLI on `args` (including the program name) and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
