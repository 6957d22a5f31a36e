//! Acceptance criteria, one test each. Every test prints a single
//! `criterion N: PASS|FAIL ...` line before asserting.
//!
//! All sweeps use the default 12-point geometric sweep ħ ∈ [0.02, 0.4] on the
//! default grid policy.

use semiclassical_lab::experiments::{
    fit_rate, gaussian_wigner_error, identity_audits, run_sweep, transform_audits, GridPolicy, KernelSpec, PotentialSpec, Report,
    Suite, SweepConfig, ANALOGUE,
};
use serde_json::Value;
use std::io::Write;
use std::f64::consts::PI;

const IDENTITY_TOL: f64 = 1e-9;
const TRANSFORM_TOL: f64 = 1e-9;
const GAUSSIAN_TOL: f64 = 1e-6;
const WEYL_ENVELOPE_MIN_SLOPE: f64 = 0.9;
const RATE_TOL: f64 = 0.15;
const SPREAD_MAX: f64 = 4.0;
const BESOV_SPREAD_MAX: f64 = 2.0;
const R2_MIN: f64 = 0.95;
const TF_RESIDUAL_MAX: f64 = 1e-8;
const HARTREE_RESIDUAL_MAX: f64 = 1e-6;
const LINEAR_LIMIT_TOL: f64 = 1e-10;
const MEAN_FIELD_MIN_SLOPE: f64 = 0.4;
/// Relative floor for margins of inequalities that hold with equality.
const MARGIN_ROUNDING: f64 = 1e-12;

/// Writes to the stdout handle directly so the line survives libtest's output capture.
fn verdict(n: u32, pass: bool, detail: &str) {
    let line = format!("criterion {n}: {} {detail}\n", if pass { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
    assert!(pass, "criterion {n} failed: {detail}");
}

fn harmonic() -> SweepConfig {
    SweepConfig::new(PotentialSpec::ShiftedHarmonic { mu: 1.0 })
}

fn sweep(mut config: SweepConfig, quantities: &[&str]) -> Report {
    config.quantities = Some(quantities.iter().map(|q| q.to_string()).collect());
    let report = run_sweep(&config).expect("sweep configuration is valid");
    assert!(report.failures.is_empty(), "sweep failures: {:?}", report.failures);
    report
}

fn aux(report: &Report, quantity: &str) -> Vec<(f64, Value)> {
    report
        .rows
        .iter()
        .filter(|r| r.quantity == quantity)
        .map(|r| (r.hbar, serde_json::from_str(&r.aux).unwrap()))
        .collect()
}

#[test]
fn criterion_01_exact_identities() {
    let records = identity_audits(2024, 200, IDENTITY_TOL).unwrap();
    let worst = records.iter().map(|r| r.residual / r.scale).fold(0.0, f64::max);
    let pass = records.len() == 600 && records.iter().all(|r| r.passed);
    verdict(1, pass, &format!("{} audits, worst residual/scale {worst:.2e} (tol {IDENTITY_TOL:e})", records.len()));
}

#[test]
fn criterion_02_transform_unitarity() {
    let records = transform_audits(2024, 100, TRANSFORM_TOL).unwrap();
    let plancherel = records.iter().map(|r| r.plancherel_error).fold(0.0, f64::max);
    let round_trip = records.iter().map(|r| r.round_trip_error).fold(0.0, f64::max);
    let n = GridPolicy::default().points_for(0.1);
    let gaussian = gaussian_wigner_error(0.1, n).unwrap();
    let pass = records.len() == 100 && records.iter().all(|r| r.passed) && gaussian <= GAUSSIAN_TOL;
    verdict(
        2,
        pass,
        &format!("plancherel {plancherel:.2e}, round trip {round_trip:.2e}, gaussian wigner {gaussian:.2e} at n = {n}"),
    );
}

#[test]
fn criterion_03_weyl_law_rate() {
    let report = sweep(harmonic(), &["weyl_error", "weyl_envelope"]);
    let errors = report.series("weyl_error");
    let within = errors.iter().all(|&(h, e)| e <= PI * h);
    let worst = errors.iter().map(|&(h, e)| e / (PI * h)).fold(0.0, f64::max);
    let fit = fit_rate("weyl_envelope", &report.series("weyl_envelope"), 1.0, 0.0).unwrap();
    let pass = errors.len() == 12 && within && fit.slope >= WEYL_ENVELOPE_MIN_SLOPE;
    verdict(
        3,
        pass,
        &format!("max |hN - pi|/(pi hbar) {worst:.3}, envelope slope {:.3} (r2 {:.3})", fit.slope, fit.r_squared),
    );
}

#[test]
fn criterion_04_commutator_rates() {
    let names = ["comm_x_L1", "comm_p_L1", "comm_x_L2sq", "comm_p_L2sq"];
    let report = sweep(harmonic(), &names);
    let mut pass = true;
    let mut detail = Vec::new();
    for q in names {
        let fit = fit_rate(q, &report.series(q), 1.0, 0.0).unwrap();
        pass &= fit.points.len() == 12 && fit.slope_within(RATE_TOL);
        detail.push(format!("{q} {:.3}", fit.slope));
    }
    verdict(4, pass, &format!("slopes: {}", detail.join(", ")));
}

#[test]
fn criterion_05_bound_audits_and_resolvent() {
    let report = sweep(harmonic(), &["bound_margin", "resolvent_order2"]);
    let floor = |lhs: f64, rhs: f64| -MARGIN_ROUNDING * (lhs.abs() + rhs.abs());
    let audits_ok = report.audits.len() == 12 * 3 * 3 * 5
        && report.audits.iter().all(|r| r.audit.margin >= floor(r.audit.lhs, r.audit.rhs));
    let worst = report.audits.iter().map(|r| r.audit.margin).fold(f64::INFINITY, f64::min);
    let (mut max, mut min) = (0.0_f64, f64::INFINITY);
    for (_, a) in aux(&report, "resolvent_order2") {
        for s in a["samples"].as_array().unwrap() {
            let v = s[1].as_f64().unwrap();
            max = max.max(v);
            min = min.min(v);
        }
    }
    let spread = max / min;
    let pass = audits_ok && spread <= SPREAD_MAX;
    verdict(
        5,
        pass,
        &format!(
            "{} audits, smallest margin {worst:.2e}; resolvent order-2 normalized in [{min:.3}, {max:.3}], max/min {spread:.3} (limit {SPREAD_MAX})",
            report.audits.len()
        ),
    );
}

#[test]
fn criterion_06_besov_uniformity() {
    let regimes = ["besov_regime_p1", "besov_regime_p2", "besov_regime_pinf"];
    let mut names = vec!["besov_p"];
    names.extend(regimes);
    let report = sweep(harmonic(), &names);
    let besov = report.summary("besov_p").unwrap();
    let mut pass = besov.points == 12 && besov.spread < BESOV_SPREAD_MAX;
    let mut detail = vec![format!("besov_p in [{:.3}, {:.3}], spread {:.3}", besov.min, besov.max, besov.spread)];
    // The constant is the largest ratio over lattice and sweep; it must not drift with ħ.
    for q in regimes {
        let constant = report.summary(q).unwrap().max;
        let drift = fit_rate(q, &report.series(q), 0.0, 0.0).unwrap();
        pass &= constant.is_finite() && drift.slope_within(RATE_TOL);
        detail.push(format!("{q} C = {constant:.3}, drift slope {:.3}", drift.slope));
    }
    verdict(6, pass, &detail.join("; "));
}

#[test]
fn criterion_07_agmon_suite() {
    let potentials = [
        ("harmonic", PotentialSpec::ShiftedHarmonic { mu: 1.0 }),
        ("double well", PotentialSpec::DoubleWell { separation: 1.5, barrier: 1.0, offset: 0.5 }),
    ];
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, potential) in potentials {
        let report = sweep(SweepConfig::new(potential), &["agmon_ratio", "agmon_gradient_ratio"]);
        let mass = report.summary("agmon_ratio").unwrap();
        let grad = report.summary("agmon_gradient_ratio").unwrap();
        pass &= mass.points == 12 && grad.points == 12 && mass.max <= 1.0 && grad.max <= 1.0;
        detail.push(format!("{name}: mass/budget <= {:.2e}, gradient/budget <= {:.2e}", mass.max, grad.max));
    }
    verdict(7, pass, &detail.join("; "));
}

#[test]
fn criterion_08_linear_convergence_analogue() {
    let config = Suite::Weyl.configure(harmonic());
    let mut config = config;
    config.quantities = Some(vec!["rho_L1".into(), "rho_L2".into(), "wigner_L2".into()]);
    config.fits = Some(Suite::Weyl.fits(None).into_iter().filter(|f| f.quantity != "weyl_envelope").collect());
    let report = run_sweep(&config).unwrap();
    assert!(report.failures.is_empty(), "{:?}", report.failures);
    let mut pass = true;
    let mut detail = Vec::new();
    for (q, min_slope) in [("rho_L1", 0.45), ("rho_L2", 0.30), ("wigner_L2", 0.22)] {
        let fit = report.fit(q).unwrap();
        let ok = fit.label == ANALOGUE && fit.slope >= min_slope && fit.r_squared >= R2_MIN;
        pass &= ok;
        detail.push(format!(
            "{q} slope {:.3} (>= {min_slope}) r2 {:.3} (>= {R2_MIN}) {}",
            fit.slope,
            fit.r_squared,
            if ok { "ok" } else { "short" }
        ));
    }
    verdict(8, pass, &format!("[{ANALOGUE}] {}", detail.join("; ")));
}

#[test]
fn criterion_09_mean_field() {
    let mut pass = true;
    let mut detail = Vec::new();
    for exponent in [0.5, 1.0] {
        let mut config = harmonic();
        config.kernel = Some(KernelSpec { strength: 0.2, exponent, softening: None, softening_cells: Some(2.0) });
        let report = sweep(config, &["tf_residual", "hartree_residual", "tf_rho_L1"]);
        let tf = report.summary("tf_residual").unwrap();
        let hf = report.summary("hartree_residual").unwrap();
        let dist = report.summary("tf_rho_L1").unwrap();
        let fit = fit_rate("tf_rho_L1", &report.series("tf_rho_L1"), 0.5, 0.0).unwrap();
        let ok_res = tf.points == 12 && hf.points == 12 && tf.max < TF_RESIDUAL_MAX && hf.max < HARTREE_RESIDUAL_MAX;
        let ok_rate = dist.monotone_decreasing && fit.slope >= MEAN_FIELD_MIN_SLOPE;
        pass &= ok_res && ok_rate;
        let increases: Vec<String> = {
            let s = report.series("tf_rho_L1");
            s.windows(2).filter(|w| w[1].1 > w[0].1).map(|w| format!("{:.4}->{:.4}", w[0].0, w[1].0)).collect()
        };
        detail.push(format!(
            "a = {exponent}: tf residual <= {:.1e}, hartree residual <= {:.1e}, |rho_HF - rho_TF|_L1 slope {:.3} (r2 {:.3}), monotone {} {:?}",
            tf.max, hf.max, fit.slope, fit.r_squared, dist.monotone_decreasing, increases
        ));
    }
    let linear = sweep(harmonic(), &["hartree_vs_projector"]);
    let gap = linear.summary("hartree_vs_projector").unwrap().max;
    pass &= gap <= LINEAR_LIMIT_TOL;
    detail.push(format!("kappa = 0: |gamma_HF - projector|_op <= {gap:.1e}"));
    verdict(9, pass, &detail.join("; "));
}

#[test]
fn criterion_10_density_regularity() {
    let report = sweep(harmonic(), &["density_gradient_ratio", "density_shift_ratio"]);
    let gradient = report.summary("density_gradient_ratio").unwrap();
    let (mut max, mut min) = (0.0_f64, f64::INFINITY);
    for (_, a) in aux(&report, "density_shift_ratio") {
        for pair in a["ratios"].as_array().unwrap() {
            let v = pair[1].as_f64().unwrap();
            max = max.max(v);
            min = min.min(v);
        }
    }
    let spread = max / min;
    let pass = gradient.points == 12 && gradient.max <= 1.0 && spread <= SPREAD_MAX;
    verdict(
        10,
        pass,
        &format!(
            "|grad rho|_L1 / |D_x gamma|_L1 <= {:.3}; shift ratio in [{min:.3}, {max:.3}], max/min {spread:.3} (limit {SPREAD_MAX})",
            gradient.max
        ),
    );
}
