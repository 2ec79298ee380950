use serde::{Deserialize, Serialize};

use super::{ReturnCurve, TimeAxis, WalkError};
use crate::numeric::least_squares;

/// Least-squares line through `(ln t, ln(-ln p))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub fit_range: (f64, f64),
}

/// Minimum number of points accepted by the fit.
pub const MIN_FIT_POINTS: usize = 5;

/// Fits `ln(-ln p_t) = intercept + slope ln t` over `t in [t_min, t_max]`.
///
/// Odd times of a discrete curve are skipped (the walk is periodic there).
pub fn fit_stretch_exponent(curve: &ReturnCurve, t_min: f64, t_max: f64) -> Result<ExponentFit, WalkError> {
    let pts: Vec<(f64, f64)> = curve
        .times
        .iter()
        .zip(&curve.estimates)
        .filter(|(t, _)| **t >= t_min && **t <= t_max)
        .filter(|(t, _)| curve.axis == TimeAxis::Continuous || (**t as u64).is_multiple_of(2))
        .map(|(t, p)| (*t, *p))
        .collect();
    fit_log_log(&pts)
}

/// Fits `ln(-ln y)` against `ln x` for points with `x > 0` and `0 < y < 1`.
pub fn fit_log_log(points: &[(f64, f64)]) -> Result<ExponentFit, WalkError> {
    let nonpositive: Vec<f64> = points.iter().filter(|(_, p)| !(*p > 0.0)).map(|(t, _)| *t).collect();
    if !nonpositive.is_empty() {
        return Err(WalkError::NonpositiveEstimate { times: nonpositive });
    }
    let saturated: Vec<f64> = points.iter().filter(|(_, p)| *p >= 1.0).map(|(t, _)| *t).collect();
    if !saturated.is_empty() {
        return Err(WalkError::SaturatedEstimate { times: saturated });
    }
    if points.iter().any(|(t, _)| !(*t > 0.0)) {
        return Err(WalkError::InvalidTimes("log-log fit needs positive abscissae".into()));
    }
    if points.len() < MIN_FIT_POINTS {
        return Err(WalkError::TooFewPoints { found: points.len(), needed: MIN_FIT_POINTS });
    }
    let xs: Vec<f64> = points.iter().map(|(t, _)| t.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, p)| (-p.ln()).ln()).collect();
    let line = least_squares(&xs, &ys);
    let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    Ok(ExponentFit {
        slope: line.slope,
        intercept: line.intercept,
        r_squared: line.r_squared,
        fit_range: (lo, hi),
    })
}
