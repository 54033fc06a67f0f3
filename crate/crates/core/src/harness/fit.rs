//! Least-squares convergence rates in log–log coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Errors at or below this level everywhere in the window are treated as
/// roundoff; no rate is fitted to them.
pub const ROUNDOFF_FLOOR: f64 = 1e-11;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitAxis {
    /// Slope of `-log(error)` against `log N` (positive for converging studies).
    Samples,
    /// Slope of `log(error)` against `log τ`.
    TimeStep,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateFit {
    pub axis: FitAxis,
    /// All `(N or τ, error)` pairs supplied.
    pub points: Vec<(f64, f64)>,
    /// Indices into `points` used by the fit.
    pub window: Vec<usize>,
    pub slope: f64,
    pub intercept: f64,
    /// Expected rate, for reporting only.
    pub expected: Option<f64>,
}

/// Fits the last `window` points (all points when `None`). Points with a
/// nonpositive or non-finite error are skipped.
pub fn fit_rate(
    points: &[(f64, f64)],
    window: Option<usize>,
    axis: FitAxis,
    expected: Option<f64>,
) -> Result<RateFit> {
    let start = window.map_or(0, |w| points.len().saturating_sub(w));
    let used: Vec<usize> = (start..points.len())
        .filter(|&i| {
            let (x, e) = points[i];
            x > 0.0 && x.is_finite() && e > 0.0 && e.is_finite()
        })
        .collect();
    if used.len() < 2 {
        return Err(Error::DegenerateFit(format!(
            "need at least 2 positive points, window has {}",
            used.len()
        )));
    }
    if used.iter().all(|&i| points[i].1 <= ROUNDOFF_FLOOR) {
        return Err(Error::DegenerateFit(format!(
            "all errors in the window are at roundoff level (<= {ROUNDOFF_FLOOR:e})"
        )));
    }
    let sign = match axis {
        FitAxis::Samples => -1.0,
        FitAxis::TimeStep => 1.0,
    };
    let xs: Vec<f64> = used.iter().map(|&i| points[i].0.ln()).collect();
    let ys: Vec<f64> = used.iter().map(|&i| sign * points[i].1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::DegenerateFit("all abscissae coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok(RateFit {
        axis,
        points: points.to_vec(),
        window: used,
        slope,
        intercept: my - slope * mx,
        expected,
    })
}
