use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{IntervalRef, MIN_SAMPLES};
use crate::error::{Error, Result};
use crate::fields::GridField;
use crate::stats::ols;

/// `inf_{y, delta} sup_{|x - y| <= delta} delta^{-alpha} |f(x) - f(y)|` over
/// dyadic sample radii `delta = 2^j h >= 8h`, `delta <= 1`, and centres whose
/// ball stays inside the grid.
pub fn holder_roughness(f: &GridField, alpha: f64) -> Result<f64> {
    let values = f.real_values()?;
    let n = values.len();
    let h = f.grid().spacing();
    let mut best = f64::INFINITY;
    let mut radius = MIN_SAMPLES;
    while radius as f64 * h <= 1.0 && 2 * radius < n {
        let scale = (radius as f64 * h).powf(-alpha);
        for y in radius..n - radius {
            let fy = values[y];
            let osc = values[y - radius..=y + radius]
                .iter()
                .fold(0.0_f64, |acc, v| acc.max((v - fy).abs()));
            best = best.min(scale * osc);
        }
        radius *= 2;
    }
    if best.is_infinite() {
        return Err(Error::InvalidParameter("grid too coarse for the roughness scan".into()));
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupationReport {
    pub xi: Vec<f64>,
    pub values: Vec<Complex64>,
    /// Fitted decay `|mu(xi)| ~ c (1 + |xi|)^{-rho}` over `|xi| in [4, xi_max]`.
    pub rho: f64,
    pub log_c: f64,
}

/// Fourier transform of the occupation measure of `f` on `J`,
/// `mu(xi) = h sum_{x in J} e^{i xi f(x)}`.
pub fn occupation_fourier(f: &GridField, j: IntervalRef, xi: &[f64]) -> Result<OccupationReport> {
    let values = f.real_values()?;
    let (start, len) = j.resolve(f.grid())?;
    let h = f.grid().spacing();
    let samples = &values[start..start + len];
    let mu: Vec<Complex64> = xi
        .iter()
        .map(|&x| samples.iter().map(|&v| Complex64::from_polar(h, x * v)).sum())
        .collect();
    let (lx, ly): (Vec<f64>, Vec<f64>) = xi
        .iter()
        .zip(&mu)
        .filter(|(x, m)| x.abs() >= 4.0 && m.norm() > 0.0)
        .map(|(x, m)| ((1.0 + x.abs()).ln(), m.norm().ln()))
        .unzip();
    if lx.len() < 8 {
        return Err(Error::TooFewPoints { needed: 8, got: lx.len() });
    }
    let fit = ols(&lx, &ly);
    Ok(OccupationReport { xi: xi.to_vec(), values: mu, rho: -fit.slope, log_c: fit.intercept })
}

/// Fraction of samples of `J` with `|f(x) - mean_J f| <= a`.
pub fn small_oscillation_fraction(f: &GridField, j: IntervalRef, a: f64) -> Result<f64> {
    let values = f.real_values()?;
    let (start, len) = j.resolve(f.grid())?;
    let samples = &values[start..start + len];
    let mean = samples.iter().sum::<f64>() / len as f64;
    let hits = samples.iter().filter(|v| (*v - mean).abs() <= a).count();
    Ok(hits as f64 / len as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid;
    use std::f64::consts::PI;

    #[test]
    fn roughness_of_constants_and_lines() {
        let g = Grid::new(512).unwrap();
        assert_eq!(holder_roughness(&GridField::from_fn(g, |_| 1.0), 0.5).unwrap(), 0.0);
        let l = holder_roughness(&GridField::from_fn(g, |y| y), 1.0).unwrap();
        assert!((l - 1.0).abs() < 1e-12);
    }

    #[test]
    fn occupation_of_constant_and_line() {
        let g = Grid::new(1024).unwrap();
        let j = IntervalRef::Span { start: 100, len: 163 };
        let len = j.length(g).unwrap();
        let xi: Vec<f64> = (0..40).map(|i| (2 * i + 1) as f64 * PI).collect();

        let c = GridField::from_fn(g, |_| 0.7);
        let r = occupation_fourier(&c, j, &xi).unwrap();
        assert!(r.values.iter().all(|m| (m.norm() - len).abs() < 1e-12));
        assert!(r.rho.abs() < 1e-10);

        // f maps J onto [0, 1]; |mu| = |J| |sin(xi/2)| / (xi/2) = 2|J|/xi at odd multiples of pi
        let (start, n) = j.resolve(g).unwrap();
        let line = GridField::from_fn(g, |y| (y - g.coordinate(start)) / (n as f64 * g.spacing()));
        let r = occupation_fourier(&line, j, &xi).unwrap();
        assert!((r.rho - 1.0).abs() < 0.1, "rho {}", r.rho);
        let zero = occupation_fourier(&line, j, &[0.0; 1]);
        assert!(zero.is_err());
    }

    #[test]
    fn small_oscillation_extremes() {
        let g = Grid::new(128).unwrap();
        let f = GridField::from_fn(g, |y| (3.0 * y).sin() + 0.1 * y);
        let j = IntervalRef::Dyadic { depth: 2, index: 1 };
        assert_eq!(small_oscillation_fraction(&f, j, 10.0).unwrap(), 1.0);
        assert_eq!(small_oscillation_fraction(&f, j, 0.0).unwrap(), 0.0);
    }
}
