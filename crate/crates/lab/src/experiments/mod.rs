//! `ħ`-sweeps, rate fits and report files.
//!
//! A sweep evaluates named [`Quantity`] values at every `ħ` of a [`SweepConfig`] on the grid
//! chosen by its [`GridPolicy`], writes one CSV row per `(ħ, quantity)`, and collects
//! commutator audits, log-log fits and per-point failures into a JSON [`Report`].
//! Sweep points run on a rayon pool capped by `SEMICLASSICAL_LAB_THREADS`.

pub mod config;
pub mod fit;
pub mod quantities;
pub mod studies;
pub mod suites;

pub use config::{
    FitSpec, GridPolicy, HbarSpec, IdentitiesConfig, KernelSpec, PotentialSpec, RatesConfig, ShiftSpec, SweepConfig, Tolerances,
};
pub use fit::{fit_rate, RateFit, MIN_FIT_POINTS};
pub use quantities::{AuditRecord, Measurement, Point, Quantity};
pub use suites::{Suite, ANALOGUE};
pub use studies::{gaussian_wigner_error, identity_audits, softening_study, transform_audits, IdentityKind, IdentityRecord, SofteningStep, TransformRecord};

use crate::{LabError, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::path::Path;

/// Environment variable capping the worker pool.
pub const THREADS_VAR: &str = "SEMICLASSICAL_LAB_THREADS";

/// One CSV row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub hbar: f64,
    pub n: usize,
    pub quantity: String,
    pub value: f64,
    /// JSON object with grid parameters and quantity-specific data.
    pub aux: String,
}

/// A point, quantity or fit that could not be evaluated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub hbar: Option<f64>,
    pub quantity: String,
    pub error: String,
}

/// Range of one quantity over the sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub quantity: String,
    pub points: usize,
    pub min: f64,
    pub max: f64,
    /// `max/min`, infinite when `min ≤ 0`.
    pub spread: f64,
    /// Values never increase as `ħ` decreases.
    pub monotone_decreasing: bool,
}

/// Sweep output.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub config_echo: Value,
    pub fits: Vec<RateFit>,
    pub audits: Vec<AuditRecord>,
    pub summaries: Vec<Summary>,
    pub failures: Vec<Failure>,
    /// Written to CSV, not to the JSON report.
    #[serde(skip)]
    pub rows: Vec<Row>,
}

impl Report {
    /// Report shell for `config` without rows.
    pub fn empty(config: &SweepConfig) -> Result<Self> {
        Ok(Report {
            config_echo: serde_json::to_value(config)?,
            fits: Vec::new(),
            audits: Vec::new(),
            summaries: Vec::new(),
            failures: Vec::new(),
            rows: Vec::new(),
        })
    }

    /// `(ħ, value)` pairs of one quantity, in row order.
    pub fn series(&self, quantity: &str) -> Vec<(f64, f64)> {
        self.rows.iter().filter(|r| r.quantity == quantity).map(|r| (r.hbar, r.value)).collect()
    }

    /// Summary of one quantity, if it has rows.
    pub fn summary(&self, quantity: &str) -> Option<&Summary> {
        self.summaries.iter().find(|s| s.quantity == quantity)
    }

    /// Fit of one quantity, if requested and successful.
    pub fn fit(&self, quantity: &str) -> Option<&RateFit> {
        self.fits.iter().find(|f| f.quantity == quantity)
    }

    /// Recompute summaries from the rows.
    pub fn summarize(&mut self) {
        let mut names: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !names.contains(&r.quantity.as_str()) {
                names.push(&r.quantity);
            }
        }
        self.summaries = names
            .into_iter()
            .map(|name| {
                let mut series = self.series(name);
                series.sort_by(|a, b| b.0.total_cmp(&a.0));
                let min = series.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
                let max = series.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
                Summary {
                    quantity: name.to_string(),
                    points: series.len(),
                    min,
                    max,
                    spread: if min > 0.0 { max / min } else { f64::INFINITY },
                    monotone_decreasing: series.windows(2).all(|w| w[1].1 <= w[0].1),
                }
            })
            .collect();
    }

    /// Fit every requested quantity; failed fits are recorded as failures.
    pub fn apply_fits(&mut self, specs: &[FitSpec]) {
        for spec in specs {
            match fit_rate(&spec.quantity, &self.series(&spec.quantity), spec.target, spec.log_power) {
                Ok(mut fit) => {
                    fit.label = spec.label.clone();
                    self.fits.push(fit);
                }
                Err(e) => self.failures.push(Failure { hbar: None, quantity: format!("fit:{}", spec.quantity), error: e.to_string() }),
            }
        }
    }

    /// Rows as CSV with columns `hbar, n, quantity, value, aux`.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Pretty JSON with sorted keys.
    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    /// Write `<stem>_sweep.csv` and `report.json` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.write_csv(std::fs::File::create(dir.join(format!("{stem}_sweep.csv")))?)?;
        std::fs::write(dir.join("report.json"), self.to_json()?)?;
        Ok(())
    }
}

/// Rows of a CSV written by [`Report::write_csv`].
pub fn read_rows<R: std::io::Read>(reader: R) -> Result<Vec<Row>> {
    let mut r = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

/// Worker pool with at most `SEMICLASSICAL_LAB_THREADS` threads (rayon's default otherwise).
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(text) = std::env::var(THREADS_VAR) {
        let cap: usize = text
            .trim()
            .parse()
            .ok()
            .filter(|&c| c > 0)
            .ok_or_else(|| LabError::Config(format!("{THREADS_VAR} = {text:?} is not a positive integer")))?;
        let cores = std::thread::available_parallelism().map_or(1, |c| c.get());
        builder = builder.num_threads(cap.min(cores));
    }
    builder.build().map_err(|e| LabError::Numerical(format!("cannot start worker pool: {e}")))
}

struct PointOutput {
    rows: Vec<Row>,
    audits: Vec<AuditRecord>,
    failures: Vec<Failure>,
}

fn evaluate_point(config: &SweepConfig, quantities: &[Quantity], hbar: f64, window_end: f64) -> PointOutput {
    let mut out = PointOutput { rows: Vec::new(), audits: Vec::new(), failures: Vec::new() };
    let mut point = match Point::new(config, hbar, window_end) {
        Ok(p) => p,
        Err(e) => {
            out.failures.push(Failure { hbar: Some(hbar), quantity: "point".into(), error: e.to_string() });
            return out;
        }
    };
    let n = point.grid.n();
    for &q in quantities {
        match point.measure(q) {
            Ok(m) => {
                let mut aux = point.grid_aux();
                if let (Value::Object(base), Value::Object(extra)) = (&mut aux, m.aux) {
                    base.extend(extra);
                }
                out.rows.push(Row { hbar, n, quantity: q.name().to_string(), value: m.value, aux: aux.to_string() });
            }
            Err(e) => {
                log::warn!("{} at hbar {hbar}: {e}", q.name());
                out.failures.push(Failure { hbar: Some(hbar), quantity: q.name().to_string(), error: e.to_string() });
            }
        }
    }
    out.audits = std::mem::take(&mut point.audits);
    out
}

/// Evaluate the configured quantities at every `ħ`.
///
/// Configuration errors abort; failures at single points are recorded and the sweep
/// continues. Rows are ordered by decreasing `ħ`, then by the configured quantity order.
pub fn run_sweep(config: &SweepConfig) -> Result<Report> {
    config.validate()?;
    let names = config.quantities.clone().unwrap_or_default();
    let quantities: Vec<Quantity> = names
        .iter()
        .map(|n| Quantity::parse(n).ok_or_else(|| LabError::Config(format!("unknown quantity {n:?}"))))
        .collect::<Result<_>>()?;
    let hbars = config.hbar.values()?;
    let mut report = Report::empty(config)?;
    if !quantities.is_empty() {
        let windows: Vec<f64> = (0..hbars.len())
            .map(|i| match (hbars.get(i + 1), i.checked_sub(1).map(|j| hbars[j])) {
                (Some(&next), _) => next,
                (None, Some(prev)) => hbars[i] * hbars[i] / prev,
                (None, None) => hbars[i],
            })
            .collect();
        let pool = thread_pool()?;
        let outputs: Vec<PointOutput> = pool.install(|| {
            hbars.par_iter().zip(windows.par_iter()).map(|(&h, &w)| evaluate_point(config, &quantities, h, w)).collect()
        });
        for o in outputs {
            report.rows.extend(o.rows);
            report.audits.extend(o.audits);
            report.failures.extend(o.failures);
        }
    }
    report.summarize();
    if let Some(fits) = &config.fits {
        report.apply_fits(fits);
    }
    Ok(report)
}

/// Fits over previously written sweep CSVs.
///
/// Without explicit fits, every suite default whose quantity appears in the inputs is fitted.
pub fn rates_report(config: &RatesConfig) -> Result<Report> {
    let mut rows = Vec::new();
    for path in &config.inputs {
        let file = std::fs::File::open(path).map_err(|e| LabError::Config(format!("cannot open {}: {e}", path.display())))?;
        rows.extend(read_rows(file)?);
    }
    rows.sort_by(|a, b| b.hbar.total_cmp(&a.hbar));
    let specs = match &config.fits {
        Some(f) => f.clone(),
        None => Suite::ALL
            .iter()
            .flat_map(|s| s.fits(None))
            .filter(|f| rows.iter().any(|r| r.quantity == f.quantity))
            .collect(),
    };
    let mut report = Report {
        config_echo: serde_json::to_value(config)?,
        fits: Vec::new(),
        audits: Vec::new(),
        summaries: Vec::new(),
        failures: Vec::new(),
        rows,
    };
    report.summarize();
    report.apply_fits(&specs);
    Ok(report)
}

/// Identity audits as a report; records that miss the tolerance become failures.
pub fn identities_report(seed: u64, config: &IdentitiesConfig) -> Result<(Report, Vec<IdentityRecord>)> {
    let records = identity_audits(seed, config.count, config.tolerance)?;
    let failures = records
        .iter()
        .filter(|r| !r.passed)
        .map(|r| Failure {
            hbar: None,
            quantity: format!("{:?}#{}", r.kind, r.index).to_lowercase(),
            error: format!("residual {:e} above {:e} x scale {:e}", r.residual, config.tolerance, r.scale),
        })
        .collect();
    let report = Report {
        config_echo: serde_json::json!({ "seed": seed, "count": config.count, "tolerance": config.tolerance }),
        fits: Vec::new(),
        audits: Vec::new(),
        summaries: Vec::new(),
        failures,
        rows: Vec::new(),
    };
    Ok((report, records))
}
