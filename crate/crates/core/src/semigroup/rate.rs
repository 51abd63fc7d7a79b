//! Dissipation rate from two horizons: `r = -(ln s2 - ln s1) / (T2 - T1)`
//! with `s1 = sigma(T1)` in `[1e-2, 1e-1]` and `s2 = sigma(T2)` in
//! `[1e-7, 1e-5]`, `T1 >= 1`. Horizons are found by doubling and then
//! interpolating `ln sigma` linearly in `T`; bracketing solves use a loose
//! tolerance and only the two accepted horizons are solved to full accuracy.
//!
//! Unless a step is fixed, the step is halved until the rate moves by less
//! than `refine_tol`: rough shears need steps far below the phase limit.

use serde::{Deserialize, Serialize};

use super::norm::{estimate, NormOptions};
use super::propagator::{truncated_velocity, Propagator, PropagatorConfig};
use crate::error::{Error, Result};
use crate::fields::{GridField, SpectralField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateOptions {
    /// Fixed step; `None` starts from `min(dt_cap, phase limit)` and refines.
    pub dt: Option<f64>,
    pub dt_cap: f64,
    /// Relative rate change accepted between successive step halvings.
    pub refine_tol: f64,
    pub max_refinements: u32,
    pub u_truncation: Option<usize>,
    /// Longest horizon tried before giving up.
    pub t_max: f64,
    pub norm: NormOptions,
    pub window1: (f64, f64),
    pub window2: (f64, f64),
}

impl Default for RateOptions {
    fn default() -> Self {
        RateOptions {
            dt: None,
            dt_cap: 0.05,
            refine_tol: 0.02,
            max_refinements: 8,
            u_truncation: None,
            t_max: 1e5,
            norm: NormOptions::default(),
            window1: (1e-2, 1e-1),
            window2: (1e-7, 1e-5),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RateFlags {
    /// `u` is constant at this truncation; the rate is reported as zero.
    pub constant_shear: bool,
    /// `sigma(1)` was already below the first window, so `T1 = 1`.
    pub t1_clamped: bool,
    /// Step refinement ran out before the rate settled.
    pub dt_unresolved: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub nu: f64,
    pub k: i64,
    pub t1: f64,
    pub t2: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub r: f64,
    pub dt: f64,
    /// Relative rate change at the last halving; zero when the step was fixed.
    pub dt_change: f64,
    pub evaluations: usize,
    pub flags: RateFlags,
}

/// Step used by [`decay_rate`] for this shear.
pub fn auto_dt(u: &GridField, k: i64, opts: &RateOptions) -> Result<f64> {
    if let Some(dt) = opts.dt {
        return Ok(dt);
    }
    let vel = truncated_velocity(u, opts.u_truncation)?;
    let u_max = vel.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    Ok(opts.dt_cap.min(PropagatorConfig::max_dt(k as f64, u_max)))
}

pub fn decay_rate(u: &GridField, nu: f64, k: i64, opts: &RateOptions) -> Result<RatePoint> {
    if !(nu > 0.0 && nu < 1.0) {
        return Err(Error::InvalidParameter(format!("nu must lie in (0, 1), got {nu}")));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be nonzero".into()));
    }
    let mut dt = auto_dt(u, k, opts)?;
    let vel = truncated_velocity(u, opts.u_truncation)?;
    let (lo, hi) = vel.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if hi - lo <= 1e-12 * (1.0 + hi.abs().max(lo.abs())) {
        return Ok(RatePoint {
            nu,
            k,
            t1: 1.0,
            t2: 1.0,
            sigma1: 1.0,
            sigma2: 1.0,
            r: 0.0,
            dt,
            dt_change: 0.0,
            evaluations: 0,
            flags: RateFlags { constant_shear: true, ..Default::default() },
        });
    }

    let mut point = rate_at_step(u, nu, k, dt, opts)?;
    if opts.dt.is_some() {
        return Ok(point);
    }
    for _ in 0..opts.max_refinements {
        dt *= 0.5;
        let mut next = rate_at_step(u, nu, k, dt, opts)?;
        next.evaluations += point.evaluations;
        next.dt_change = (next.r - point.r).abs() / next.r.abs().max(f64::MIN_POSITIVE);
        point = next;
        if point.dt_change <= opts.refine_tol {
            return Ok(point);
        }
    }
    point.flags.dt_unresolved = true;
    Ok(point)
}

fn rate_at_step(u: &GridField, nu: f64, k: i64, dt: f64, opts: &RateOptions) -> Result<RatePoint> {
    let cfg = PropagatorConfig { u_truncation: opts.u_truncation, ..PropagatorConfig::new(nu, k as f64, dt) };
    let mut search = Search { prop: Propagator::new(u, cfg)?, opts, points: Vec::new(), warm: None };

    let mut flags = RateFlags::default();
    let s1 = search.eval(1.0, false)?;
    let (t1, sigma1) = if s1 <= opts.window1.1 {
        let s1 = search.eval(1.0, true)?;
        flags.t1_clamped = s1 < opts.window1.0;
        (1.0, s1)
    } else {
        search.find(opts.window1, 1.0)?
    };
    let (t2, sigma2) = search.find(opts.window2, t1)?;
    let r = -(sigma2.ln() - sigma1.ln()) / (t2 - t1);
    Ok(RatePoint { nu, k, t1, t2, sigma1, sigma2, r, dt, dt_change: 0.0, evaluations: search.points.len(), flags })
}

/// Tolerance for solves that only bracket a window.
const COARSE_TOL: f64 = 1e-4;

struct Search<'a> {
    prop: Propagator,
    opts: &'a RateOptions,
    /// `(T, sigma, solved to full accuracy)`.
    points: Vec<(f64, f64, bool)>,
    warm: Option<SpectralField>,
}

impl Search<'_> {
    fn eval(&mut self, t: f64, precise: bool) -> Result<f64> {
        if t > self.opts.t_max {
            let sigma = self.points.last().map(|p| p.1).unwrap_or(1.0);
            return Err(Error::TimeBudget { target: t, t_max: self.opts.t_max, sigma });
        }
        let norm = if precise { self.opts.norm } else { NormOptions { tol: COARSE_TOL, ..self.opts.norm } };
        let (est, v, converged) = estimate(&mut self.prop, t, &norm, self.warm.as_ref())?;
        if precise && !converged {
            return Err(Error::NoConvergence { iterations: est.iterations, residual: est.residual });
        }
        self.warm = Some(v);
        self.points.retain(|p| p.0 != t);
        self.points.push((t, est.sigma, precise));
        Ok(est.sigma)
    }

    /// A horizon `T > floor` with `sigma(T)` inside `[lo, hi]`.
    fn find(&mut self, (lo, hi): (f64, f64), floor: f64) -> Result<(f64, f64)> {
        let target = (lo * hi).sqrt().ln();
        for _ in 0..60 {
            if let Some(&p) = self.points.iter().find(|p| p.0 > floor && p.1 >= lo && p.1 <= hi) {
                if p.2 {
                    return Ok((p.0, p.1));
                }
                let sigma = self.eval(p.0, true)?;
                if sigma >= lo && sigma <= hi {
                    return Ok((p.0, sigma));
                }
                continue;
            }
            let above = self.points.iter().filter(|p| p.1 > hi).max_by(|a, b| a.0.total_cmp(&b.0)).map(|p| (p.0, p.1));
            let below = self
                .points
                .iter()
                .filter(|p| p.1 < lo && p.0 > floor)
                .min_by(|a, b| a.0.total_cmp(&b.0))
                .map(|p| (p.0, p.1));
            let next = match (above, below) {
                (Some(a), Some(b)) => {
                    let t = interpolate(a, b, target);
                    // keep strictly inside the bracket
                    t.clamp(a.0 + 0.05 * (b.0 - a.0), b.0 - 0.05 * (b.0 - a.0))
                }
                (Some(a), None) => {
                    let prev = self
                        .points
                        .iter()
                        .filter(|p| p.0 < a.0 && p.1 > a.1)
                        .max_by(|x, y| x.0.total_cmp(&y.0))
                        .map(|p| (p.0, p.1));
                    match prev {
                        Some(p) => interpolate(p, a, target).clamp(1.25 * a.0, 4.0 * a.0),
                        None => 2.0 * a.0,
                    }
                }
                (None, Some(b)) => {
                    // everything known is already too small; step back towards the floor
                    0.5 * (floor.max(0.0) + b.0)
                }
                (None, None) => 2.0 * floor.max(1.0),
            };
            self.eval(next, false)?;
        }
        let sigma = self.points.last().map(|p| p.1).unwrap_or(1.0);
        Err(Error::TimeBudget { target: f64::NAN, t_max: self.opts.t_max, sigma })
    }
}

/// `T` at which the line through `(T_a, ln s_a)` and `(T_b, ln s_b)` reaches `target`.
fn interpolate(a: (f64, f64), b: (f64, f64), target: f64) -> f64 {
    let (la, lb) = (a.1.ln(), b.1.ln());
    if (lb - la).abs() < 1e-300 {
        return 2.0 * b.0.max(a.0);
    }
    a.0 + (target - la) * (b.0 - a.0) / (lb - la)
}
