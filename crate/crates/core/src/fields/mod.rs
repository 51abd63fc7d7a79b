//! Periodic fields on the torus `[-pi, pi)` and their Fourier duals.
//!
//! Coefficients use the Fourier-series normalization
//! `c_m = (1/N) sum_j f(y_j) e^{-i m y_j}`, so a constant `c` has `c_0 = c`,
//! `cos y` has `c_{+-1} = 1/2`, and Parseval reads
//! `int |f|^2 = 2 pi sum |c_m|^2`.

pub(crate) mod fft;
mod generate;

pub use generate::{generate, FieldRecipe, RecipeKind};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Uniform grid on the torus with `n_points` samples starting at `-pi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grid {
    n_points: usize,
}

impl Grid {
    pub const DOMAIN_LENGTH: f64 = 2.0 * PI;
    pub const ORIGIN: f64 = -PI;

    pub fn new(n_points: usize) -> Result<Self> {
        if n_points < 16 || !n_points.is_power_of_two() {
            return Err(Error::InvalidGrid(n_points));
        }
        Ok(Grid { n_points })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn spacing(&self) -> f64 {
        Self::DOMAIN_LENGTH / self.n_points as f64
    }

    pub fn coordinate(&self, j: usize) -> f64 {
        Self::ORIGIN + j as f64 * self.spacing()
    }

    pub fn coordinates(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(|j| self.coordinate(j))
    }

    /// Fourier mode stored at FFT-ordered index `i`.
    pub fn mode(&self, i: usize) -> i64 {
        let n = self.n_points as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// FFT-ordered index of mode `m`, if `m` is in `-N/2 .. N/2-1`.
    pub fn index(&self, m: i64) -> Option<usize> {
        let n = self.n_points as i64;
        if m >= -n / 2 && m < n / 2 {
            Some(m.rem_euclid(n) as usize)
        } else {
            None
        }
    }

    pub fn nyquist(&self) -> usize {
        self.n_points / 2
    }

    /// Number of dyadic halvings possible while keeping `min_samples` per cell.
    pub fn max_depth(&self, min_samples: usize) -> usize {
        let mut depth = 0;
        while (self.n_points >> (depth + 1)) >= min_samples {
            depth += 1;
        }
        depth
    }
}

/// Samples of a (possibly complex) function on a [`Grid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    grid: Grid,
    values: Vec<Complex64>,
    is_real: bool,
}

impl GridField {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::InvalidParameter(format!(
                "expected {} values, got {}",
                grid.n_points(),
                values.len()
            )));
        }
        let is_real = values.iter().all(|v| v.im == 0.0);
        Ok(GridField { grid, values, is_real })
    }

    pub fn from_real(grid: Grid, values: &[f64]) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::InvalidParameter(format!(
                "expected {} values, got {}",
                grid.n_points(),
                values.len()
            )));
        }
        Ok(GridField {
            grid,
            values: values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
            is_real: true,
        })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.coordinates().map(|y| Complex64::new(f(y), 0.0)).collect();
        GridField { grid, values, is_real: true }
    }

    pub fn from_complex_fn(grid: Grid, f: impl Fn(f64) -> Complex64) -> Self {
        let values: Vec<Complex64> = grid.coordinates().map(f).collect();
        let is_real = values.iter().all(|v| v.im == 0.0);
        GridField { grid, values, is_real }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn is_real(&self) -> bool {
        self.is_real
    }

    /// Real parts; errors when the field carries an imaginary component.
    pub fn real_values(&self) -> Result<Vec<f64>> {
        if !self.is_real {
            return Err(Error::NotReal);
        }
        Ok(self.values.iter().map(|v| v.re).collect())
    }

    pub fn real_part(&self) -> GridField {
        GridField {
            grid: self.grid,
            values: self.values.iter().map(|v| Complex64::new(v.re, 0.0)).collect(),
            is_real: true,
        }
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> GridField {
        let values: Vec<Complex64> = self.values.iter().map(|&v| f(v)).collect();
        let is_real = values.iter().all(|v| v.im == 0.0);
        GridField { grid: self.grid, values, is_real }
    }

    pub fn add(&self, other: &GridField) -> Result<GridField> {
        check_same(self.grid, other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(GridField { grid: self.grid, values, is_real: self.is_real && other.is_real })
    }

    pub fn scale(&self, factor: f64) -> GridField {
        GridField {
            grid: self.grid,
            values: self.values.iter().map(|v| v * factor).collect(),
            is_real: self.is_real,
        }
    }

    pub fn to_spectral(&self) -> SpectralField {
        let n = self.grid.n_points();
        let mut buf = self.values.clone();
        fft::forward(&mut buf);
        let inv_n = 1.0 / n as f64;
        for (i, c) in buf.iter_mut().enumerate() {
            // y_j = -pi + j h shifts every mode by (-1)^m; m and i share parity.
            let sign = if i % 2 == 0 { inv_n } else { -inv_n };
            *c *= sign;
        }
        SpectralField { grid: self.grid, coeffs: buf }
    }

    /// Squared L2 norm by grid quadrature, `h * sum |f_j|^2`.
    pub fn l2_norm_sq(&self) -> f64 {
        self.grid.spacing() * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    pub fn mean(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Running integral from `-pi` by the trapezoidal rule, starting at zero.
    pub fn primitive(&self) -> GridField {
        let h = self.grid.spacing();
        let mut acc = Complex64::new(0.0, 0.0);
        let mut values = Vec::with_capacity(self.values.len());
        values.push(acc);
        for w in self.values.windows(2) {
            acc += 0.5 * h * (w[0] + w[1]);
            values.push(acc);
        }
        GridField { grid: self.grid, values, is_real: self.is_real }
    }
}

/// Fourier coefficients on modes `-N/2 .. N/2-1`, stored in FFT order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(grid: Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.n_points() {
            return Err(Error::InvalidParameter(format!(
                "expected {} coefficients, got {}",
                grid.n_points(),
                coeffs.len()
            )));
        }
        Ok(SpectralField { grid, coeffs })
    }

    pub fn zeros(grid: Grid) -> Self {
        SpectralField { grid, coeffs: vec![Complex64::new(0.0, 0.0); grid.n_points()] }
    }

    /// `amplitude * e^{i m y}`.
    pub fn single_mode(grid: Grid, m: i64, amplitude: Complex64) -> Result<Self> {
        let mut field = Self::zeros(grid);
        let i = grid
            .index(m)
            .ok_or_else(|| Error::InvalidParameter(format!("mode {m} outside the grid band")))?;
        field.coeffs[i] = amplitude;
        Ok(field)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Coefficients in FFT order (index `i` holds mode `grid.mode(i)`).
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn coeff(&self, m: i64) -> Complex64 {
        self.grid.index(m).map(|i| self.coeffs[i]).unwrap_or_default()
    }

    /// `(mode, coefficient)` pairs in storage order.
    pub fn modes(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.coeffs.iter().enumerate().map(|(i, &c)| (self.grid.mode(i), c))
    }

    pub fn to_grid(&self) -> GridField {
        let mut buf: Vec<Complex64> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| if i % 2 == 0 { c } else { -c })
            .collect();
        fft::inverse(&mut buf);
        let is_real = self.is_conjugate_symmetric(1e-12);
        if is_real {
            for v in &mut buf {
                v.im = 0.0;
            }
        }
        GridField { grid: self.grid, values: buf, is_real }
    }

    /// `c_{-m} = conj(c_m)` for every `m` with both modes in band, and the
    /// mean and Nyquist coefficients real, all within `tol` relative to the
    /// largest coefficient.
    pub fn is_conjugate_symmetric(&self, tol: f64) -> bool {
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1e-300);
        let n = self.grid.n_points();
        let nyq = self.grid.nyquist();
        if self.coeffs[0].im.abs() > tol * scale || self.coeffs[nyq].im.abs() > tol * scale {
            return false;
        }
        (1..nyq).all(|i| (self.coeffs[i] - self.coeffs[n - i].conj()).norm() <= tol * scale)
    }

    /// Squared L2 norm by Parseval, `2 pi sum |c_m|^2`.
    pub fn l2_norm_sq(&self) -> f64 {
        Grid::DOMAIN_LENGTH * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    /// L2 inner product `int conj(self) other`.
    pub fn inner(&self, other: &SpectralField) -> Complex64 {
        Grid::DOMAIN_LENGTH
            * self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.conj() * b).sum::<Complex64>()
    }

    /// Zero all coefficients with `|m| > max_mode`.
    pub fn truncate_modes(&self, max_mode: usize) -> Result<SpectralField> {
        if max_mode > self.grid.nyquist() {
            return Err(Error::InvalidParameter(format!(
                "truncation {max_mode} exceeds N/2 = {}",
                self.grid.nyquist()
            )));
        }
        let mut out = self.clone();
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            if self.grid.mode(i).unsigned_abs() as usize > max_mode {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        Ok(out)
    }

    /// Spectral derivative `i m c_m`; the Nyquist mode has no symmetric
    /// partner and is dropped.
    pub fn derivative(&self) -> SpectralField {
        let nyq = self.grid.nyquist();
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                if i == nyq {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, self.grid.mode(i) as f64) * c
                }
            })
            .collect();
        SpectralField { grid: self.grid, coeffs }
    }

    pub fn scale(&self, factor: Complex64) -> SpectralField {
        SpectralField { grid: self.grid, coeffs: self.coeffs.iter().map(|c| c * factor).collect() }
    }

    pub fn add(&self, other: &SpectralField) -> Result<SpectralField> {
        check_same(self.grid, other.grid)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(SpectralField { grid: self.grid, coeffs })
    }

    pub fn sub(&self, other: &SpectralField) -> Result<SpectralField> {
        check_same(self.grid, other.grid)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Ok(SpectralField { grid: self.grid, coeffs })
    }

    /// Trigonometric interpolant evaluated at an arbitrary point.
    pub fn eval(&self, y: f64) -> Complex64 {
        self.modes().map(|(m, c)| c * Complex64::from_polar(1.0, m as f64 * y)).sum()
    }

    /// Largest mode index carrying a coefficient above `tol` in modulus.
    pub fn bandwidth(&self, tol: f64) -> usize {
        self.modes()
            .filter(|(_, c)| c.norm() > tol)
            .map(|(m, _)| m.unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }
}

pub(crate) fn check_same(a: Grid, b: Grid) -> Result<()> {
    if a != b {
        return Err(Error::GridMismatch { left: a.n_points(), right: b.n_points() });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Grid {
        Grid::new(n).unwrap()
    }

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(Grid::new(8).is_err());
        assert!(Grid::new(48).is_err());
        assert!(Grid::new(64).is_ok());
    }

    #[test]
    fn constant_field_is_pure_mean() {
        let f = GridField::from_fn(grid(32), |_| 3.0);
        let s = f.to_spectral();
        assert!((s.coeff(0) - Complex64::new(3.0, 0.0)).norm() < 1e-14);
        for (m, c) in s.modes() {
            if m != 0 {
                assert!(c.norm() < 1e-14);
            }
        }
    }

    #[test]
    fn cosine_has_half_coefficients() {
        let s = GridField::from_fn(grid(64), f64::cos).to_spectral();
        assert!((s.coeff(1) - Complex64::new(0.5, 0.0)).norm() < 1e-12);
        assert!((s.coeff(-1) - Complex64::new(0.5, 0.0)).norm() < 1e-12);
        let rest: f64 = s.modes().filter(|(m, _)| m.abs() != 1).map(|(_, c)| c.norm()).sum();
        assert!(rest < 1e-12);
    }

    #[test]
    fn single_mode_round_trip_matches_exponential() {
        let g = grid(32);
        let f = SpectralField::single_mode(g, -5, Complex64::new(0.0, 2.0)).unwrap().to_grid();
        for (j, v) in f.values().iter().enumerate() {
            let y = g.coordinate(j);
            let want = Complex64::new(0.0, 2.0) * Complex64::from_polar(1.0, -5.0 * y);
            assert!((v - want).norm() < 1e-12);
        }
        assert!(!f.is_real());
    }

    #[test]
    fn truncation_limits() {
        let g = grid(64);
        let f = GridField::from_fn(g, |y| (3.0 * y).sin() + (20.0 * y).cos() + 0.5).to_spectral();
        assert_eq!(f.truncate_modes(32).unwrap(), f);
        let mean_only = f.truncate_modes(0).unwrap();
        assert!((mean_only.coeff(0).re - 0.5).abs() < 1e-14);
        assert_eq!(mean_only.bandwidth(1e-14), 0);
        assert_eq!(f.truncate_modes(10).unwrap().bandwidth(1e-12), 3);
        assert!(f.truncate_modes(33).is_err());
    }

    #[test]
    fn derivative_of_sine_is_cosine() {
        let g = grid(64);
        let d = GridField::from_fn(g, f64::sin).to_spectral().derivative().to_grid();
        for (j, v) in d.values().iter().enumerate() {
            assert!((v.re - g.coordinate(j).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn eval_interpolates_off_grid() {
        let g = grid(32);
        let s = GridField::from_fn(g, |y| (2.0 * y).cos() - y.sin()).to_spectral();
        let y = 0.123;
        assert!((s.eval(y).re - ((2.0 * y).cos() - y.sin())).abs() < 1e-12);
    }

    #[test]
    fn primitive_of_constant_is_linear() {
        let g = grid(16);
        let p = GridField::from_fn(g, |_| 2.0).primitive();
        for (j, v) in p.values().iter().enumerate() {
            assert!((v.re - 2.0 * j as f64 * g.spacing()).abs() < 1e-13);
        }
    }
}
