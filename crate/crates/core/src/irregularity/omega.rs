use rayon::prelude::*;

use super::MIN_SAMPLES;
use crate::error::{Error, Result};
use crate::fields::GridField;

/// `inf_{ybar} min_{P affine} int_{ybar - delta}^{ybar + delta} |dU - P|^2`,
/// with windows of `2w + 1` samples centred on every grid point (periodic
/// wrap) and the plain quadrature `h sum`.
pub fn omega1(du: &GridField, delta: f64) -> Result<f64> {
    let values = du.real_values()?;
    let n = values.len();
    let h = du.grid().spacing();
    let w = (delta / h).round() as usize;
    if w < MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "delta = {delta} spans {w} grid steps; at least {MIN_SAMPLES} are needed"
        )));
    }
    if 2 * w + 1 > n {
        return Err(Error::InvalidParameter(format!("delta = {delta} exceeds half the torus")));
    }
    let s2: f64 = (1..=w).map(|s| 2.0 * (s * s) as f64).sum();
    let residuals: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|c| {
            let at = |s: isize| values[(c as isize + s).rem_euclid(n as isize) as usize];
            let wi = w as isize;
            let mean = (-wi..=wi).map(at).sum::<f64>() / (2 * w + 1) as f64;
            let slope = (-wi..=wi).map(|s| s as f64 * at(s)).sum::<f64>() / s2;
            h * (-wi..=wi)
                .map(|s| {
                    let r = at(s) - mean - slope * s as f64;
                    r * r
                })
                .sum::<f64>()
        })
        .collect();
    Ok(residuals.into_iter().fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid;

    #[test]
    fn constant_derivative_gives_zero() {
        let g = Grid::new(256).unwrap();
        let v = omega1(&GridField::from_fn(g, |_| 2.5), 0.3).unwrap();
        assert!(v < 1e-25);
        assert!(omega1(&GridField::from_fn(g, |_| 2.5), 0.1).is_err());
    }

    #[test]
    fn minimised_at_inflection_points() {
        let g = Grid::new(2048).unwrap();
        let du = GridField::from_fn(g, |y| -y.sin());
        let delta = 0.2;
        // Taylor: -sin y = -y + y^3/6 near 0; residual of y^3/6 against lines
        // on [-d, d] is (1/36)(2/7 - 6/25) d^7 = 2 d^7 / 1575.
        let v = omega1(&du, delta).unwrap();
        // 2w + 1 midpoint samples cover [-(w + 1/2) h, (w + 1/2) h]
        let d = ((delta / g.spacing()).round() + 0.5) * g.spacing();
        let want = 2.0 / 1575.0 * d.powi(7);
        assert!((v - want).abs() < 0.02 * want, "{v} vs {want}");
    }

    #[test]
    fn nondecreasing_in_delta() {
        let g = Grid::new(1024).unwrap();
        let du = GridField::from_fn(g, |y| (2.0 * y).cos() + 0.3 * (7.0 * y).sin());
        let vals: Vec<f64> = [0.06, 0.1, 0.2, 0.4].iter().map(|&d| omega1(&du, d).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
    }
}
