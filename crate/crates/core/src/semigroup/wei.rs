//! Explicit semigroup bound `exp(pi/2 - t nu delta^{-2} F(delta nu^{-2} omega_1^2))`
//! with `F` the inverse of `x -> 36 x tan x` on `[0, pi/2)`.

use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use crate::elliptic::solve_elliptic;
use crate::error::{Error, Result};
use crate::fields::GridField;
use crate::irregularity::omega1;

/// `y in [0, pi/2)` with `36 y tan y = x`, by bisection to full precision.
pub fn f_inverse(x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::InvalidParameter(format!("F needs a finite x >= 0, got {x}")));
    }
    let g = |y: f64| 36.0 * y * y.tan();
    let (mut lo, mut hi) = (0.0_f64, FRAC_PI_2 - 1e-12);
    if x >= g(hi) {
        return Ok(hi);
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // pick whichever endpoint has the smaller residual
    Ok(if (g(lo) - x).abs() <= (g(hi) - x).abs() { lo } else { hi })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeiBound {
    pub bound: f64,
    pub omega1: f64,
    /// `F(delta nu^{-2} omega_1^2)`.
    pub f_value: f64,
    /// Decay rate `nu delta^{-2} F` in the exponent.
    pub rate: f64,
    /// First time with `bound <= 1`; infinite when the rate vanishes.
    pub t_star: f64,
}

/// The bound at time `t` for the shear `u`, using `omega_1` of `dU`.
pub fn wei_bound(u: &GridField, nu: f64, t: f64, delta: f64) -> Result<WeiBound> {
    if !(nu > 0.0) || !(t >= 0.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "need nu > 0, t >= 0, delta in (0, 1); got nu={nu}, t={t}, delta={delta}"
        )));
    }
    if !u.is_real() {
        return Err(Error::NotReal);
    }
    let du = solve_elliptic(&u.to_spectral()).du.to_grid().real_part();
    let omega = omega1(&du, delta)?;
    let f_value = f_inverse(delta / (nu * nu) * omega * omega)?;
    let rate = nu / (delta * delta) * f_value;
    let bound = (FRAC_PI_2 - t * rate).exp();
    let t_star = if rate > 0.0 { FRAC_PI_2 / rate } else { f64::INFINITY };
    Ok(WeiBound { bound, omega1: omega, f_value, rate, t_star })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid;
    use std::f64::consts::PI;

    #[test]
    fn inverse_values() {
        assert_eq!(f_inverse(0.0).unwrap(), 0.0);
        assert!((f_inverse(9.0 * PI).unwrap() - PI / 4.0).abs() < 1e-12);
        for x in [0.0, 1.0, 9.0 * PI, 100.0, 1e6] {
            let y = f_inverse(x).unwrap();
            assert!((36.0 * y * y.tan() - x).abs() <= 1e-9 * x.max(1.0), "{x}");
        }
        assert!(f_inverse(10.0).unwrap() < f_inverse(20.0).unwrap());
        assert!(f_inverse(-1.0).is_err());
    }

    #[test]
    fn constant_shear_gives_vacuous_bound() {
        let g = Grid::new(512).unwrap();
        let b = wei_bound(&GridField::from_fn(g, |_| 3.0), 1e-2, 10.0, 0.3).unwrap();
        assert!((b.bound - FRAC_PI_2.exp()).abs() < 1e-12);
        assert!(b.t_star.is_infinite());
    }

    #[test]
    fn bound_decreases_in_time() {
        let g = Grid::new(2048).unwrap();
        let u = GridField::from_fn(g, f64::cos);
        let nu: f64 = 1e-3;
        let delta = nu.powf(1.0 / 3.0);
        let b: Vec<f64> = [1.0, 2.0, 5.0, 50.0].iter().map(|&t| wei_bound(&u, nu, t, delta).unwrap().bound).collect();
        assert!(b.windows(2).all(|w| w[1] <= w[0]));
    }
}
