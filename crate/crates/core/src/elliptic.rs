//! Zero-mean periodic solution of `-U'' = u - mean(u)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::fields::SpectralField;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipticSolution {
    /// `U`, with `U_m = u_m / m^2` and `U_0 = 0`.
    pub potential: SpectralField,
    /// `dU/dy`, coefficients `i m U_m`.
    pub du: SpectralField,
    pub mean_u: Complex64,
}

pub fn solve_elliptic(u: &SpectralField) -> EllipticSolution {
    let grid = u.grid();
    let mut potential = SpectralField::zeros(grid);
    for (i, c) in potential.coeffs_mut().iter_mut().enumerate() {
        let m = grid.mode(i);
        if m != 0 {
            *c = u.coeffs()[i] / (m * m) as f64;
        }
    }
    let mut du = SpectralField::zeros(grid);
    for (i, c) in du.coeffs_mut().iter_mut().enumerate() {
        *c = Complex64::new(0.0, grid.mode(i) as f64) * potential.coeffs()[i];
    }
    EllipticSolution { potential, du, mean_u: u.coeff(0) }
}

impl EllipticSolution {
    /// `||-U'' - (u - mean)||_{L^2}` evaluated spectrally.
    pub fn residual(&self, u: &SpectralField) -> f64 {
        let grid = u.grid();
        let lap = self.potential.derivative().derivative();
        let sq: f64 = (0..grid.n_points())
            .map(|i| {
                let target = if i == 0 { Complex64::new(0.0, 0.0) } else { u.coeffs()[i] };
                // the Nyquist mode has no derivative; compare via m^2 directly there
                let lhs = if i == grid.nyquist() {
                    let m = grid.mode(i) as f64;
                    self.potential.coeffs()[i] * m * m
                } else {
                    -lap.coeffs()[i]
                };
                (lhs - target).norm_sqr()
            })
            .sum();
        (2.0 * std::f64::consts::PI * sq).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{generate, FieldRecipe, Grid, GridField};

    #[test]
    fn cosine_is_an_eigenfunction() {
        let g = Grid::new(64).unwrap();
        let u = GridField::from_fn(g, |y| y.cos() + 4.0).to_spectral();
        let sol = solve_elliptic(&u);
        let pot = sol.potential.to_grid();
        let du = sol.du.to_grid();
        for j in 0..64 {
            let y = g.coordinate(j);
            assert!((pot.values()[j].re - y.cos()).abs() < 1e-13);
            assert!((du.values()[j].re + y.sin()).abs() < 1e-13);
        }
        assert!((sol.mean_u.re - 4.0).abs() < 1e-14);
    }

    #[test]
    fn constants_and_single_modes() {
        let g = Grid::new(32).unwrap();
        let c = solve_elliptic(&GridField::from_fn(g, |_| 2.0).to_spectral());
        assert_eq!(c.potential.l2_norm(), 0.0);
        let u = SpectralField::single_mode(g, 5, Complex64::new(1.0, 0.0)).unwrap();
        let s = solve_elliptic(&u);
        assert!((s.potential.coeff(5) - Complex64::new(1.0 / 25.0, 0.0)).norm() < 1e-16);
        assert!((s.du.coeff(5) - Complex64::new(0.0, 5.0 / 25.0)).norm() < 1e-16);
    }

    #[test]
    fn residual_is_tiny_for_rough_data() {
        let g = Grid::new(1024).unwrap();
        let u = generate(&FieldRecipe::random_fourier(-0.4, 1.0, 1), g).unwrap().to_spectral();
        let s = solve_elliptic(&u);
        assert!(s.residual(&u) <= 1e-10 * u.l2_norm());
    }
}
