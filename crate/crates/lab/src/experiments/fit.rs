//! Log-log least-squares fits of measured quantities against `ħ`.

use crate::{LabError, Result};
use serde::{Deserialize, Serialize};

/// Power-law fit `value ≈ e^{intercept} ħ^{slope}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub quantity: String,
    /// Free-form tag such as `"d=1 analogue"`.
    pub label: String,
    /// Usable `(ħ, value)` pairs, sorted by decreasing `ħ`.
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub target_exponent: f64,
    /// Slope of `value/|ln ħ|^q`, present when `q > 0`.
    pub log_corrected_slope: Option<f64>,
    pub log_power: f64,
    /// Points dropped because the value was zero.
    pub excluded_zeros: usize,
}

impl RateFit {
    /// `|slope - target| ≤ tol`.
    pub fn slope_within(&self, tol: f64) -> bool {
        (self.slope - self.target_exponent).abs() <= tol
    }
}

/// Minimum number of usable points of a fit.
pub const MIN_FIT_POINTS: usize = 4;

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    (slope, intercept, r2)
}

/// Fit `ln value` against `ln ħ`.
///
/// Zero values are excluded and counted; negative or non-finite values and `ħ ∉ (0, 1)`
/// when `log_power > 0` are errors. At least [`MIN_FIT_POINTS`] usable points with two
/// distinct `ħ` are required.
pub fn fit_rate(quantity: &str, points: &[(f64, f64)], target: f64, log_power: f64) -> Result<RateFit> {
    let mut usable = Vec::with_capacity(points.len());
    let mut excluded_zeros = 0;
    for &(hbar, value) in points {
        if !(hbar > 0.0) || !hbar.is_finite() {
            return Err(LabError::InvalidParameter(format!("{quantity}: hbar {hbar} is not positive")));
        }
        if !value.is_finite() || value < 0.0 {
            return Err(LabError::InvalidParameter(format!("{quantity}: value {value} at hbar {hbar} is not a finite nonnegative number")));
        }
        if value == 0.0 {
            excluded_zeros += 1;
        } else {
            usable.push((hbar, value));
        }
    }
    if usable.len() < MIN_FIT_POINTS {
        return Err(LabError::Numerical(format!(
            "{quantity}: {} usable points, at least {MIN_FIT_POINTS} required",
            usable.len()
        )));
    }
    usable.sort_by(|a, b| b.0.total_cmp(&a.0));
    let xs: Vec<f64> = usable.iter().map(|p| p.0.ln()).collect();
    if xs.first() == xs.last() {
        return Err(LabError::Numerical(format!("{quantity}: all points share one hbar")));
    }
    let ys: Vec<f64> = usable.iter().map(|p| p.1.ln()).collect();
    let (slope, intercept, r_squared) = least_squares(&xs, &ys);
    let log_corrected_slope = if log_power > 0.0 {
        if usable.iter().any(|p| p.0 >= 1.0) {
            return Err(LabError::InvalidParameter(format!("{quantity}: log correction needs hbar < 1")));
        }
        let corrected: Vec<f64> = usable.iter().map(|p| p.1.ln() - log_power * p.0.ln().abs().ln()).collect();
        Some(least_squares(&xs, &corrected).0)
    } else {
        None
    };
    Ok(RateFit {
        quantity: quantity.to_string(),
        label: String::new(),
        points: usable,
        slope,
        intercept,
        r_squared,
        target_exponent: target,
        log_corrected_slope,
        log_power,
        excluded_zeros,
    })
}
