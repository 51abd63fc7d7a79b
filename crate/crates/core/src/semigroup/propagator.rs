//! Strang splitting for `d_t f + i k u f = nu d_y^2 f`, mode `k` in `x`.
//!
//! One step is half a diffusion step `e^{-nu m^2 dt/2}` in Fourier space,
//! the exact phase `e^{-i k u(y) dt}` on the grid, and another half
//! diffusion step. Both sub-flows are exact, so the scheme is unitary times
//! contractive and the `L^2` norm never grows.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{check_same, fft::FftPair, Grid, GridField, SpectralField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    StrangSplit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagatorConfig {
    pub nu: f64,
    /// Wavenumber in `x`; real so that Fourier-dual variables can use it.
    pub k: f64,
    pub dt: f64,
    /// Keep modes `|m| <= M` of `u`; `None` keeps all.
    #[serde(default)]
    pub u_truncation: Option<usize>,
    #[serde(default)]
    pub scheme: Scheme,
    /// Also apply `e^{-nu k^2 dt}` per step (full Laplacian instead of `d_y^2`).
    #[serde(default)]
    pub full_laplacian: bool,
}

impl PropagatorConfig {
    pub fn new(nu: f64, k: f64, dt: f64) -> Self {
        PropagatorConfig { nu, k, dt, u_truncation: None, scheme: Scheme::StrangSplit, full_laplacian: false }
    }

    pub fn with_truncation(mut self, m: usize) -> Self {
        self.u_truncation = Some(m);
        self
    }

    /// Largest step with `dt |k| max|u| <= pi/4`.
    pub fn max_dt(k: f64, u_max: f64) -> f64 {
        if k == 0.0 || u_max == 0.0 {
            f64::INFINITY
        } else {
            std::f64::consts::FRAC_PI_4 / (k.abs() * u_max)
        }
    }
}

/// Band-limited velocity `u_M` on the grid.
pub fn truncated_velocity(u: &GridField, m: Option<usize>) -> Result<Vec<f64>> {
    let vals = match m {
        None => u.real_values()?,
        Some(m) => {
            u.real_values()?;
            u.to_spectral().truncate_modes(m)?.to_grid().values().iter().map(|v| v.re).collect()
        }
    };
    Ok(vals)
}

struct StepOps {
    half_diffusion: Vec<f64>,
    phase: Vec<Complex64>,
}

impl StepOps {
    fn new(grid: Grid, u: &[f64], cfg: &PropagatorConfig, dt: f64, adjoint: bool) -> Self {
        let extra = if cfg.full_laplacian { (-0.5 * cfg.nu * cfg.k * cfg.k * dt).exp() } else { 1.0 };
        let half_diffusion = (0..grid.n_points())
            .map(|i| {
                let m = grid.mode(i) as f64;
                (-0.5 * cfg.nu * m * m * dt).exp() * extra
            })
            .collect();
        let sign = if adjoint { 1.0 } else { -1.0 };
        let phase = u.iter().map(|&v| Complex64::from_polar(1.0, sign * cfg.k * v * dt)).collect();
        StepOps { half_diffusion, phase }
    }
}

/// Reusable time stepper for one `(u, cfg)`; buffers hold raw DFT
/// coefficients `c_m (-1)^m`, which differ from series coefficients by a
/// sign that every sub-step ignores.
pub struct Propagator {
    grid: Grid,
    cfg: PropagatorConfig,
    u: Vec<f64>,
    u_max: f64,
    fft: FftPair,
    full: StepOps,
    full_adjoint: StepOps,
    work: Vec<Complex64>,
}

impl Propagator {
    pub fn new(u: &GridField, cfg: PropagatorConfig) -> Result<Self> {
        if !(cfg.nu > 0.0) || !(cfg.dt > 0.0) || !cfg.k.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "need nu > 0, dt > 0, finite k; got nu={}, dt={}, k={}",
                cfg.nu, cfg.dt, cfg.k
            )));
        }
        let grid = u.grid();
        let vel = truncated_velocity(u, cfg.u_truncation)?;
        let u_max = vel.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let max_dt = PropagatorConfig::max_dt(cfg.k, u_max);
        if cfg.dt > max_dt * (1.0 + 1e-12) {
            return Err(Error::PhaseAccuracy { max_dt });
        }
        Ok(Propagator {
            grid,
            cfg,
            full: StepOps::new(grid, &vel, &cfg, cfg.dt, false),
            full_adjoint: StepOps::new(grid, &vel, &cfg, cfg.dt, true),
            u: vel,
            u_max,
            fft: FftPair::new(grid.n_points()),
            work: vec![Complex64::new(0.0, 0.0); grid.n_points()],
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn config(&self) -> &PropagatorConfig {
        &self.cfg
    }

    pub fn velocity(&self) -> &[f64] {
        &self.u
    }

    pub fn velocity_max(&self) -> f64 {
        self.u_max
    }

    /// Full steps and the trailing partial step covering `[0, t]`.
    fn schedule(&self, t: f64) -> Result<(usize, f64)> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::InvalidParameter(format!("time must be finite and >= 0, got {t}")));
        }
        let ratio = t / self.cfg.dt;
        let mut n = ratio.floor() as usize;
        let mut rest = t - n as f64 * self.cfg.dt;
        if rest <= 1e-12 * self.cfg.dt {
            rest = 0.0;
        } else if self.cfg.dt - rest <= 1e-12 * self.cfg.dt {
            n += 1;
            rest = 0.0;
        }
        Ok((n, rest))
    }

    fn apply(fft: &mut FftPair, work: &mut [Complex64], ops: &StepOps, buf: &mut [Complex64]) {
        let inv_n = 1.0 / buf.len() as f64;
        for (c, d) in buf.iter_mut().zip(&ops.half_diffusion) {
            *c *= *d;
        }
        work.copy_from_slice(buf);
        fft.inverse(work);
        for (v, p) in work.iter_mut().zip(&ops.phase) {
            *v *= *p;
        }
        fft.forward(work);
        for ((c, v), d) in buf.iter_mut().zip(work.iter()).zip(&ops.half_diffusion) {
            *c = *v * (*d * inv_n);
        }
    }

    fn to_raw(f: &SpectralField) -> Vec<Complex64> {
        f.coeffs().iter().enumerate().map(|(i, &c)| if i % 2 == 0 { c } else { -c }).collect()
    }

    fn from_raw(grid: Grid, mut raw: Vec<Complex64>) -> SpectralField {
        for (i, c) in raw.iter_mut().enumerate() {
            if i % 2 == 1 {
                *c = -*c;
            }
        }
        SpectralField::new(grid, raw).expect("length preserved")
    }

    /// `f(t)` from `f(0) = f0`.
    pub fn evolve(&mut self, f0: &SpectralField, t: f64) -> Result<SpectralField> {
        self.evolve_observed(f0, t, |_, _| {})
    }

    /// As [`evolve`](Self::evolve), calling `observe(time, raw)` after every
    /// step (and once at time 0). `raw` holds `c_m (-1)^m`.
    pub fn evolve_observed(
        &mut self,
        f0: &SpectralField,
        t: f64,
        mut observe: impl FnMut(f64, &[Complex64]),
    ) -> Result<SpectralField> {
        check_same(self.grid, f0.grid())?;
        let (n, rest) = self.schedule(t)?;
        let mut buf = Self::to_raw(f0);
        observe(0.0, &buf);
        for s in 0..n {
            Self::apply(&mut self.fft, &mut self.work, &self.full, &mut buf);
            observe((s + 1) as f64 * self.cfg.dt, &buf);
        }
        if rest > 0.0 {
            let ops = StepOps::new(self.grid, &self.u, &self.cfg, rest, false);
            Self::apply(&mut self.fft, &mut self.work, &ops, &mut buf);
            observe(t, &buf);
        }
        Ok(Self::from_raw(self.grid, buf))
    }

    /// Energy bookkeeping along one trajectory.
    pub fn energy(&mut self, f0: &SpectralField, t: f64) -> Result<EnergyReport> {
        let grid = self.grid;
        let mut last: Option<(f64, f64, f64)> = None;
        let mut report = EnergyReport {
            initial: f0.l2_norm_sq(),
            final_energy: 0.0,
            max_step_increase: 0.0,
            gradient_integral: 0.0,
            budget: f0.l2_norm_sq() / (2.0 * self.cfg.nu),
        };
        self.evolve_observed(f0, t, |time, raw| {
            let (e, g) = raw_norms(grid, raw);
            if let Some((t0, e0, g0)) = last {
                report.max_step_increase = report.max_step_increase.max(e - e0);
                report.gradient_integral += 0.5 * (time - t0) * (g + g0);
            }
            report.final_energy = e;
            last = Some((time, e, g));
        })?;
        Ok(report)
    }

    /// Adjoint of [`evolve`](Self::evolve) in `L^2`: conjugated phases,
    /// steps taken in reverse order.
    pub fn evolve_adjoint(&mut self, g: &SpectralField, t: f64) -> Result<SpectralField> {
        check_same(self.grid, g.grid())?;
        let (n, rest) = self.schedule(t)?;
        let mut buf = Self::to_raw(g);
        if rest > 0.0 {
            let ops = StepOps::new(self.grid, &self.u, &self.cfg, rest, true);
            Self::apply(&mut self.fft, &mut self.work, &ops, &mut buf);
        }
        for _ in 0..n {
            Self::apply(&mut self.fft, &mut self.work, &self.full_adjoint, &mut buf);
        }
        Ok(Self::from_raw(self.grid, buf))
    }

    /// In-place raw-buffer versions for hot loops.
    pub(crate) fn evolve_raw(&mut self, buf: &mut [Complex64], t: f64, adjoint: bool) -> Result<()> {
        let (n, rest) = self.schedule(t)?;
        let partial = (rest > 0.0).then(|| StepOps::new(self.grid, &self.u, &self.cfg, rest, adjoint));
        if adjoint {
            if let Some(ops) = &partial {
                Self::apply(&mut self.fft, &mut self.work, ops, buf);
            }
            for _ in 0..n {
                Self::apply(&mut self.fft, &mut self.work, &self.full_adjoint, buf);
            }
        } else {
            for _ in 0..n {
                Self::apply(&mut self.fft, &mut self.work, &self.full, buf);
            }
            if let Some(ops) = &partial {
                Self::apply(&mut self.fft, &mut self.work, ops, buf);
            }
        }
        Ok(())
    }

    pub(crate) fn raw_from(f: &SpectralField) -> Vec<Complex64> {
        Self::to_raw(f)
    }

    pub(crate) fn field_from(grid: Grid, raw: Vec<Complex64>) -> SpectralField {
        Self::from_raw(grid, raw)
    }
}

/// `||f||^2` along a trajectory: the largest one-step increase (zero up to
/// rounding) and the trapezoidal `int_0^t ||d_y f||^2`, which cannot exceed
/// `budget = ||f0||^2 / (2 nu)` beyond quadrature error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub initial: f64,
    pub final_energy: f64,
    pub max_step_increase: f64,
    pub gradient_integral: f64,
    pub budget: f64,
}

impl EnergyReport {
    /// `gradient_integral <= (1 + tol) budget` and no step gained energy
    /// beyond `1e-12` relative.
    pub fn holds(&self, tol: f64) -> bool {
        self.max_step_increase <= 1e-12 * self.initial && self.gradient_integral <= (1.0 + tol) * self.budget
    }
}

/// `f(t)` for `d_t f + i k u f = nu d_y^2 f`, `f(0) = f0`.
pub fn propagate(f0: &SpectralField, u: &GridField, cfg: PropagatorConfig, t: f64) -> Result<SpectralField> {
    Propagator::new(u, cfg)?.evolve(f0, t)
}

/// The `L^2` adjoint of [`propagate`] over the same horizon.
pub fn adjoint_propagate(g: &SpectralField, u: &GridField, cfg: PropagatorConfig, t: f64) -> Result<SpectralField> {
    Propagator::new(u, cfg)?.evolve_adjoint(g, t)
}

/// `||f||^2` and `||d_y f||^2` of a raw buffer.
pub(crate) fn raw_norms(grid: Grid, raw: &[Complex64]) -> (f64, f64) {
    let mut l2 = 0.0;
    let mut grad = 0.0;
    for (i, c) in raw.iter().enumerate() {
        let a = c.norm_sqr();
        l2 += a;
        if i != grid.nyquist() {
            let m = grid.mode(i) as f64;
            grad += m * m * a;
        }
    }
    (Grid::DOMAIN_LENGTH * l2, Grid::DOMAIN_LENGTH * grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{generate, FieldRecipe};

    fn random_spectral(grid: Grid, seed: u64) -> SpectralField {
        let re = generate(&FieldRecipe::random_fourier(0.2, 1.0, seed), grid).unwrap();
        let im = generate(&FieldRecipe::random_fourier(0.2, 1.0, seed + 1000), grid).unwrap();
        let f = re.add(&im.map(|v| v * Complex64::new(0.0, 1.0))).unwrap();
        f.to_spectral()
    }

    #[test]
    fn heat_multiplier_is_exact() {
        let g = Grid::new(64).unwrap();
        let u = GridField::from_fn(g, |_| 0.0);
        let f0 = SpectralField::single_mode(g, 7, Complex64::new(1.0, 0.5)).unwrap();
        let cfg = PropagatorConfig::new(0.03, 1.0, 0.013);
        let t = 1.0;
        let f = propagate(&f0, &u, cfg, t).unwrap();
        let want = Complex64::new(1.0, 0.5) * (-0.03 * 49.0 * t).exp();
        assert!((f.coeff(7) - want).norm() < 1e-10 * want.norm());
    }

    #[test]
    fn constant_shear_is_a_global_phase() {
        let g = Grid::new(64).unwrap();
        let f0 = random_spectral(g, 3);
        let cfg = PropagatorConfig::new(0.05, 2.0, 0.01);
        let a = propagate(&f0, &GridField::from_fn(g, |_| 1.7), cfg, 0.77).unwrap().to_grid();
        let b = propagate(&f0, &GridField::from_fn(g, |_| 0.0), cfg, 0.77).unwrap().to_grid();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x.norm() - y.norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn phase_accuracy_is_enforced() {
        let g = Grid::new(32).unwrap();
        let u = GridField::from_fn(g, |y| 2.0 * y.cos());
        match Propagator::new(&u, PropagatorConfig::new(0.1, 3.0, 0.2)) {
            Err(Error::PhaseAccuracy { max_dt }) => {
                assert!((max_dt - std::f64::consts::FRAC_PI_4 / 6.0).abs() < 1e-12)
            }
            _ => panic!("expected a phase-accuracy error"),
        }
    }

    #[test]
    fn duality_pairing() {
        let g = Grid::new(128).unwrap();
        let u = GridField::from_fn(g, |y| y.cos() + 0.3 * (3.0 * y).sin());
        let cfg = PropagatorConfig::new(0.01, 1.0, 0.02);
        let mut p = Propagator::new(&u, cfg).unwrap();
        for seed in 0..5 {
            let f = random_spectral(g, 10 * seed);
            let h = random_spectral(g, 10 * seed + 5);
            let lhs = p.evolve(&f, 1.37).unwrap().inner(&h);
            let rhs = f.inner(&p.evolve_adjoint(&h, 1.37).unwrap());
            assert!((lhs - rhs).norm() < 1e-12 * lhs.norm().max(1e-300));
        }
    }

    #[test]
    fn zero_velocity_is_self_adjoint() {
        let g = Grid::new(64).unwrap();
        let u = GridField::from_fn(g, |_| 0.0);
        let f = random_spectral(g, 1);
        let cfg = PropagatorConfig::new(0.02, 1.0, 0.05);
        let a = propagate(&f, &u, cfg, 2.0).unwrap();
        let b = adjoint_propagate(&f, &u, cfg, 2.0).unwrap();
        assert!(a.sub(&b).unwrap().l2_norm() < 1e-14);
    }

    #[test]
    fn schedule_handles_partial_steps() {
        let g = Grid::new(32).unwrap();
        let p = Propagator::new(&GridField::from_fn(g, |_| 0.0), PropagatorConfig::new(0.1, 1.0, 0.3)).unwrap();
        assert_eq!(p.schedule(0.9).unwrap().0, 3);
        let (n, rest) = p.schedule(1.0).unwrap();
        assert_eq!(n, 3);
        assert!((rest - 0.1).abs() < 1e-12);
        assert!(p.schedule(-1.0).is_err());
    }
}
