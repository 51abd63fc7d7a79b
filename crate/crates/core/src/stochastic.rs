//! Monte Carlo for the Feynman-Kac variable
//! `Z_t^y = exp(-i xi int_0^t u(y + sqrt(2 nu) B_s) ds) f0(y + sqrt(2 nu) B_t)`
//! and the fluctuation-dissipation identity
//! `||f0||^2 - ||f_t||^2 = int Var(Z_t^y) dy`.
//!
//! Every grid point `y` reuses the same Brownian path, so one path costs a
//! sum over the modes of `u` plus two inverse FFTs. Paths are grouped into
//! fixed batches; the spread of per-batch estimates gives the standard error.

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{check_same, fft::FftPair, Grid, GridField, SpectralField};
use crate::norms::{besov_seminorm, sobolev_norm, BesovParams};
use crate::rng;
use crate::semigroup::{Propagator, PropagatorConfig};

pub const FK_BATCHES: usize = 32;
pub const MIN_PATHS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FKConfig {
    pub nu: f64,
    pub xi: f64,
    pub t: f64,
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
    /// Modes `|m| <= M` of `u` and `f0`; `None` means `N/2 - 1`.
    #[serde(default)]
    pub u_truncation: Option<usize>,
}

impl FKConfig {
    /// Step count with `ds <= min(1e-3, t/100)`.
    pub fn new(nu: f64, xi: f64, t: f64, n_paths: usize, seed: u64) -> Self {
        let ds = 1e-3_f64.min(t / 100.0);
        let n_steps = if t > 0.0 { (t / ds).ceil() as usize } else { 0 };
        FKConfig { nu, xi, t, n_paths, n_steps, seed, u_truncation: None }
    }

    fn validate(&self, grid: Grid) -> Result<usize> {
        if !(self.nu > 0.0) || !(self.t >= 0.0) || !self.t.is_finite() || !self.xi.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "need nu > 0, finite t >= 0 and xi; got nu={}, t={}, xi={}",
                self.nu, self.t, self.xi
            )));
        }
        if self.n_paths < MIN_PATHS {
            return Err(Error::TooFewPaths(self.n_paths));
        }
        if self.t > 0.0 && self.n_steps == 0 {
            return Err(Error::InvalidParameter("n_steps must be positive when t > 0".into()));
        }
        let max = grid.nyquist() - 1;
        match self.u_truncation {
            Some(m) if m > max => Err(Error::InvalidParameter(format!("truncation {m} exceeds N/2 - 1 = {max}"))),
            Some(m) => Ok(m),
            None => Ok(max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FKReport {
    pub variance_integral: f64,
    pub variance_stderr: f64,
    /// `||f0||^2 - ||f_t||^2` from the spectral solver on the same `u_M`.
    pub lhs_deficit: f64,
    pub residual_sigmas: f64,
    /// `Var(Z_t^y)` at each grid point and its standard error.
    pub variance_profile: Vec<f64>,
    pub profile_stderr: Vec<f64>,
}

impl FKReport {
    /// Smallest `Var(Z_t^y) / stderr(y)` over the grid.
    pub fn min_profile_sigmas(&self) -> f64 {
        self.variance_profile
            .iter()
            .zip(&self.profile_stderr)
            .map(|(v, s)| if *s > 0.0 { v / s } else if *v >= 0.0 { 0.0 } else { f64::NEG_INFINITY })
            .fold(f64::INFINITY, f64::min)
    }
}

struct BatchSums {
    first: Vec<Complex64>,
    second: Vec<f64>,
    count: usize,
}

impl BatchSums {
    /// Unbiased per-point variance.
    fn variance(&self) -> Vec<f64> {
        let n = self.count as f64;
        self.first
            .iter()
            .zip(&self.second)
            .map(|(s1, s2)| (s2 / n - (s1 / n).norm_sqr()) * n / (n - 1.0))
            .collect()
    }
}

/// Nonzero coefficients `(m, c_m)` with `0 < m <= max` (plus `c_0`).
fn positive_modes(f: &SpectralField, max: usize) -> (Complex64, Vec<(usize, Complex64)>, Vec<(usize, Complex64)>) {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for m in 1..=max as i64 {
        let (a, b) = (f.coeff(m), f.coeff(-m));
        if a.norm_sqr() > 0.0 || b.norm_sqr() > 0.0 {
            pos.push((m as usize, a));
            neg.push((m as usize, b));
        }
    }
    (f.coeff(0), pos, neg)
}

pub fn simulate_variance(f0: &GridField, u: &GridField, cfg: &FKConfig) -> Result<FKReport> {
    let grid = u.grid();
    check_same(grid, f0.grid())?;
    let m_max = cfg.validate(grid)?;
    if !u.is_real() {
        return Err(Error::NotReal);
    }
    let n = grid.n_points();
    let u_m = u.to_spectral().truncate_modes(m_max)?;
    let f_m = f0.to_spectral().truncate_modes(m_max)?;

    if cfg.t == 0.0 {
        return Ok(FKReport {
            variance_integral: 0.0,
            variance_stderr: 0.0,
            lhs_deficit: 0.0,
            residual_sigmas: 0.0,
            variance_profile: vec![0.0; n],
            profile_stderr: vec![0.0; n],
        });
    }

    let (u0, u_pos, u_neg) = positive_modes(&u_m, m_max);
    let (f00, f_pos, f_neg) = positive_modes(&f_m, m_max);
    let top = u_pos.iter().chain(&f_pos).map(|p| p.0).max().unwrap_or(0);
    let ds = cfg.t / cfg.n_steps as f64;
    let half_sd = (2.0 * cfg.nu * 0.5 * ds).sqrt();

    let batch_of = |b: usize| {
        let lo = b * cfg.n_paths / FK_BATCHES;
        let hi = (b + 1) * cfg.n_paths / FK_BATCHES;
        lo..hi
    };

    let batches: Vec<BatchSums> = (0..FK_BATCHES)
        .into_par_iter()
        .map(|b| {
            let mut fft = FftPair::new(n);
            let mut sums = BatchSums {
                first: vec![Complex64::new(0.0, 0.0); n],
                second: vec![0.0; n],
                count: 0,
            };
            let mut powers = vec![Complex64::new(0.0, 0.0); top + 1];
            let mut acc = vec![Complex64::new(0.0, 0.0); top + 1];
            let mut integral = vec![Complex64::new(0.0, 0.0); n];
            let mut endpoint = vec![Complex64::new(0.0, 0.0); n];
            for p in batch_of(b) {
                let mut rng = rng::stream(cfg.seed, p as u64);
                acc.iter_mut().for_each(|a| *a = Complex64::new(0.0, 0.0));
                let mut x = 0.0_f64;
                for _ in 0..cfg.n_steps {
                    let g: f64 = StandardNormal.sample(&mut rng);
                    x += half_sd * g;
                    // midpoint of the step
                    fill_powers(&mut powers, x);
                    for (a, &w) in acc.iter_mut().zip(&powers) {
                        *a += w;
                    }
                    let g: f64 = StandardNormal.sample(&mut rng);
                    x += half_sd * g;
                }
                // int_0^t u(y + X_s) ds on the grid
                spectrum_to_grid(grid, &mut fft, &mut integral, u0 * cfg.t, &u_pos, &u_neg, |m| acc[m] * ds);
                fill_powers(&mut powers, x);
                spectrum_to_grid(grid, &mut fft, &mut endpoint, f00, &f_pos, &f_neg, |m| powers[m]);
                for j in 0..n {
                    let z = Complex64::from_polar(1.0, -cfg.xi * integral[j].re) * endpoint[j];
                    sums.first[j] += z;
                    sums.second[j] += z.norm_sqr();
                }
                sums.count += 1;
            }
            sums
        })
        .collect();

    let h = grid.spacing();
    let per_batch: Vec<Vec<f64>> = batches.iter().map(BatchSums::variance).collect();
    let batch_integrals: Vec<f64> = per_batch.iter().map(|v| h * v.iter().sum::<f64>()).collect();
    let pooled = BatchSums {
        first: (0..n).map(|j| batches.iter().map(|s| s.first[j]).sum()).collect(),
        second: (0..n).map(|j| batches.iter().map(|s| s.second[j]).sum()).collect(),
        count: cfg.n_paths,
    };
    let variance_profile = pooled.variance();
    let variance_integral = h * variance_profile.iter().sum::<f64>();
    let variance_stderr = stderr(&batch_integrals);
    let profile_stderr =
        (0..n).map(|j| stderr(&per_batch.iter().map(|v| v[j]).collect::<Vec<_>>())).collect();

    let lhs_deficit = spectral_deficit(&f_m, u, cfg, m_max)?;
    let diff = (lhs_deficit - variance_integral).abs();
    let residual_sigmas = if variance_stderr > 0.0 {
        diff / variance_stderr
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(FKReport { variance_integral, variance_stderr, lhs_deficit, residual_sigmas, variance_profile, profile_stderr })
}

/// `powers[m] = e^{i m x}`.
fn fill_powers(powers: &mut [Complex64], x: f64) {
    let base = Complex64::from_polar(1.0, x);
    let mut w = Complex64::new(1.0, 0.0);
    for p in powers.iter_mut() {
        *p = w;
        w *= base;
    }
}

/// Grid values of `c0 + sum_m (c_m w_m e^{imy} + c_{-m} conj(w_m) e^{-imy})`.
fn spectrum_to_grid(
    grid: Grid,
    fft: &mut FftPair,
    out: &mut [Complex64],
    c0: Complex64,
    pos: &[(usize, Complex64)],
    neg: &[(usize, Complex64)],
    weight: impl Fn(usize) -> Complex64,
) {
    let n = grid.n_points();
    out.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
    out[0] = c0;
    for (&(m, a), &(_, b)) in pos.iter().zip(neg) {
        let w = weight(m);
        // raw DFT slots carry the (-1)^m from y_0 = -pi
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        out[m] = a * w * sign;
        out[n - m] = b * w.conj() * sign;
    }
    fft.inverse(out);
}

fn stderr(samples: &[f64]) -> f64 {
    let b = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / b;
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (b - 1.0);
    (var / b).sqrt()
}

/// Step for the spectral side of the identity.
fn solver_dt(u_max: f64, xi: f64, ds: f64) -> f64 {
    ds.min(PropagatorConfig::max_dt(xi, u_max))
}

fn spectral_deficit(f0: &SpectralField, u: &GridField, cfg: &FKConfig, m_max: usize) -> Result<f64> {
    let u_max = crate::semigroup::truncated_velocity(u, Some(m_max))?.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let dt = solver_dt(u_max, cfg.xi, cfg.t / cfg.n_steps as f64);
    let pcfg = PropagatorConfig::new(cfg.nu, cfg.xi, dt).with_truncation(m_max);
    let ft = Propagator::new(u, pcfg)?.evolve(f0, cfg.t)?;
    Ok(f0.l2_norm_sq() - ft.l2_norm_sq())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeficitParams {
    pub xi: f64,
    pub t: f64,
    /// Besov regularity of `u`.
    pub alpha: f64,
    pub alpha_bar: f64,
    pub epsilon: f64,
    /// Solver step; `None` uses the phase limit capped at `1e-2`.
    #[serde(default)]
    pub dt: Option<f64>,
}

impl DeficitParams {
    /// `alpha_bar = alpha - eps (1/2 - alpha + eps)`.
    pub fn from_epsilon(alpha: f64, epsilon: f64, xi: f64, t: f64) -> Self {
        let alpha_bar = alpha - epsilon * (0.5 - alpha + epsilon);
        DeficitParams { xi, t, alpha, alpha_bar, epsilon, dt: None }
    }

    /// `nu t + xi^2 (nu^{-1/2 + ab} t^{5/2 + ab + 3 eps})^{1/(1+eps)} ||u||^2`
    /// times `||f0||_{H^1}^2`.
    pub fn rhs(&self, nu: f64, f0_h1_sq: f64, u_norm: f64) -> f64 {
        let (ab, e) = (self.alpha_bar, self.epsilon);
        let inner = nu.powf(-0.5 + ab) * self.t.powf(2.5 + ab + 3.0 * e);
        f0_h1_sq * (nu * self.t + self.xi * self.xi * inner.powf(1.0 / (1.0 + e)) * u_norm * u_norm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeficitRow {
    pub nu: f64,
    pub deficit: f64,
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeficitTable {
    pub rows: Vec<DeficitRow>,
    /// `max ratio / min ratio`.
    pub spread: f64,
    /// `spread <= 100`.
    pub bounded: bool,
}

/// Energy deficit against the continuity bound across a `nu` sweep, with
/// the unknown constant set to one.
pub fn deficit_bound_check(
    f0: &GridField,
    u: &GridField,
    nu_grid: &[f64],
    params: &DeficitParams,
) -> Result<DeficitTable> {
    check_same(u.grid(), f0.grid())?;
    let (a, ab, e) = (params.alpha, params.alpha_bar, params.epsilon);
    let e_max = a + (a * a + 4.0 * a + 2.0).sqrt();
    if !(ab > -0.5 && ab < a) || !(e > 0.0 && e < e_max) {
        return Err(Error::InvalidParameter(format!(
            "need alpha_bar in (-1/2, alpha) and eps in (0, {e_max}); got alpha_bar={ab}, eps={e}"
        )));
    }
    let f_hat = f0.to_spectral();
    let f0_h1_sq = sobolev_norm(&f_hat, 1.0).powi(2);
    let u_norm = besov_seminorm(&u.to_spectral(), BesovParams { s: a, p: 1.0 })?;
    let u_max = u.max_abs();
    let rows = nu_grid
        .iter()
        .map(|&nu| {
            if params.t == 0.0 {
                return Ok(DeficitRow { nu, deficit: 0.0, rhs: 0.0, ratio: 1.0 });
            }
            let dt = params.dt.unwrap_or_else(|| 1e-2_f64.min(PropagatorConfig::max_dt(params.xi, u_max)));
            let ft = Propagator::new(u, PropagatorConfig::new(nu, params.xi, dt))?.evolve(&f_hat, params.t)?;
            let deficit = f_hat.l2_norm_sq() - ft.l2_norm_sq();
            let rhs = params.rhs(nu, f0_h1_sq, u_norm);
            Ok(DeficitRow { nu, deficit, rhs, ratio: deficit / rhs })
        })
        .collect::<Result<Vec<_>>>()?;
    let (lo, hi) = rows.iter().fold((f64::INFINITY, 0.0_f64), |(l, h), r| (l.min(r.ratio), h.max(r.ratio)));
    let spread = if rows.is_empty() { 1.0 } else { hi / lo };
    Ok(DeficitTable { rows, spread, bounded: spread <= 100.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{generate, FieldRecipe};
    use std::f64::consts::PI;

    fn plane_wave(grid: Grid) -> GridField {
        GridField::from_complex_fn(grid, |y| Complex64::from_polar(1.0, y))
    }

    #[test]
    fn zero_time_is_trivial() {
        let g = Grid::new(32).unwrap();
        let r = simulate_variance(&plane_wave(g), &GridField::from_fn(g, f64::cos), &FKConfig::new(0.1, 1.0, 0.0, 1000, 1))
            .unwrap();
        assert_eq!((r.variance_integral, r.lhs_deficit), (0.0, 0.0));
    }

    #[test]
    fn brownian_characteristic_function() {
        let g = Grid::new(32).unwrap();
        let (nu, t) = (0.05, 1.0);
        let mut cfg = FKConfig::new(nu, 1.0, t, 4000, 7);
        cfg.n_steps = 20;
        let r = simulate_variance(&plane_wave(g), &GridField::from_fn(g, |_| 0.0), &cfg).unwrap();
        let exact = 2.0 * PI * (1.0 - (-2.0 * nu * t).exp());
        assert!((r.variance_integral - exact).abs() <= 3.0 * r.variance_stderr, "{r:?} {exact}");
        assert!((r.lhs_deficit - exact).abs() < 1e-10);
        assert!(r.min_profile_sigmas() > -3.0);
    }

    #[test]
    fn schedule_independent() {
        let g = Grid::new(16).unwrap();
        let mut cfg = FKConfig::new(0.05, 1.0, 0.5, 1000, 3);
        cfg.n_steps = 10;
        let u = GridField::from_fn(g, f64::cos);
        let f = plane_wave(g);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let many = rayon::ThreadPoolBuilder::new().num_threads(8).build().unwrap();
        let a = one.install(|| simulate_variance(&f, &u, &cfg).unwrap());
        let b = many.install(|| simulate_variance(&f, &u, &cfg).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn too_few_paths() {
        let g = Grid::new(16).unwrap();
        let u = GridField::from_fn(g, f64::cos);
        assert!(matches!(
            simulate_variance(&u, &u, &FKConfig::new(0.1, 1.0, 1.0, 999, 0)),
            Err(Error::TooFewPaths(999))
        ));
    }

    #[test]
    fn heat_deficit_ratio_is_finite() {
        let g = Grid::new(64).unwrap();
        let f0 = plane_wave(g);
        let p = DeficitParams::from_epsilon(-0.25, 0.1, 1.0, 1.0);
        let t = deficit_bound_check(&f0, &GridField::from_fn(g, |_| 0.0), &[1e-2, 1e-3], &p).unwrap();
        for row in &t.rows {
            assert!((row.deficit - 2.0 * PI * (1.0 - (-2.0 * row.nu).exp())).abs() < 1e-10);
            assert!(row.ratio.is_finite() && row.ratio > 0.0);
        }
        let zero = deficit_bound_check(&f0, &f0.real_part(), &[1e-2], &DeficitParams { t: 0.0, ..p }).unwrap();
        assert_eq!(zero.rows[0].ratio, 1.0);
    }

    #[test]
    fn rough_deficit_ratio_stays_bounded() {
        let g = Grid::new(512).unwrap();
        let u = generate(&FieldRecipe::random_fourier(-0.25, 1.0, 5), g).unwrap();
        let f0 = plane_wave(g);
        let p = DeficitParams::from_epsilon(-0.25, 0.1, 1.0, 1.0);
        let t = deficit_bound_check(&f0, &u, &[1e-2, 3e-3, 1e-3, 3e-4, 1e-4], &p).unwrap();
        assert!(t.bounded, "{t:?}");
    }
}
