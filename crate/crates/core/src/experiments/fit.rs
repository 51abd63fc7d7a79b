//! Power-law fits `r ~ nu^e` and the admissible exponent band.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{ols, theil_sen};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub exponent: f64,
    /// `ln` of the prefactor.
    pub intercept: f64,
    pub r_squared: f64,
    /// `ln r - (intercept + exponent ln nu)` per point.
    pub residuals: Vec<f64>,
    /// Median of pairwise slopes.
    pub robust_exponent: f64,
    pub n_points: usize,
}

/// OLS of `ln r` on `ln nu` over points with `r > 0`.
pub fn fit_exponent(points: &[(f64, f64)]) -> Result<ExponentFit> {
    let valid: Vec<(f64, f64)> =
        points.iter().filter(|(nu, r)| *nu > 0.0 && *r > 0.0 && r.is_finite()).map(|(nu, r)| (nu.ln(), r.ln())).collect();
    if valid.len() < 4 {
        return Err(Error::TooFewPoints { needed: 4, got: valid.len() });
    }
    let (x, y): (Vec<f64>, Vec<f64>) = valid.into_iter().unzip();
    let line = ols(&x, &y);
    let residuals = x.iter().zip(&y).map(|(a, b)| b - (line.intercept + line.slope * a)).collect();
    Ok(ExponentFit {
        exponent: line.slope,
        intercept: line.intercept,
        r_squared: line.r_squared,
        residuals,
        robust_exponent: theil_sen(&x, &y),
        n_points: x.len(),
    })
}

/// `(alpha / (alpha + 2), -(1/2 - alpha) / (5/2 + alpha))`: the rate is
/// bounded below by `nu` to the first and above by `nu` to the second.
pub fn rate_exponents(alpha: f64) -> (f64, f64) {
    (alpha / (alpha + 2.0), -(0.5 - alpha) / (2.5 + alpha))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundVerdict {
    pub alpha: f64,
    pub measured: f64,
    /// Exponent of the lower bound on the rate.
    pub floor_exponent: f64,
    /// Exponent of the upper bound on the rate.
    pub ceiling_exponent: f64,
    pub tol: f64,
    /// `floor + tol - measured`; negative when the rate decays too fast.
    pub floor_margin: f64,
    /// `measured - (ceiling - tol)`; negative when the rate grows too fast.
    pub ceiling_margin: f64,
    pub pass: bool,
}

/// Checks `ceiling - tol <= e <= floor + tol` for `alpha in (-1/2, 0)`.
pub fn compare_bounds(fit: &ExponentFit, alpha: f64, tol: f64) -> Result<BoundVerdict> {
    if !(alpha > -0.5 && alpha < 0.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (-1/2, 0), got {alpha}")));
    }
    Ok(band_verdict(fit.exponent, alpha, tol))
}

pub(crate) fn band_verdict(measured: f64, alpha: f64, tol: f64) -> BoundVerdict {
    let (floor_exponent, ceiling_exponent) = rate_exponents(alpha);
    let floor_margin = floor_exponent + tol - measured;
    let ceiling_margin = measured - (ceiling_exponent - tol);
    BoundVerdict {
        alpha,
        measured,
        floor_exponent,
        ceiling_exponent,
        tol,
        floor_margin,
        ceiling_margin,
        pass: floor_margin >= 0.0 && ceiling_margin >= 0.0,
    }
}
