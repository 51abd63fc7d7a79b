//! Largest singular value of the time-`T` propagator.
//!
//! The default solver runs Lanczos with full reorthogonalisation on the
//! normal operator `P* P`, which reaches the same fixed point as power
//! iteration in far fewer operator applications when the top singular
//! values are clustered. Plain power iteration is kept as an option.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::propagator::Propagator;
use crate::error::{Error, Result};
use crate::fields::{GridField, SpectralField};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMethod {
    #[default]
    Lanczos,
    Power,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormOptions {
    pub method: NormMethod,
    /// Relative residual `||Bv - theta v|| / theta` of the normal operator.
    pub tol: f64,
    /// Cap on applications of `P* P`.
    pub max_iter: usize,
    pub seed: u64,
    /// Restrict to data with zero `y`-mean.
    pub zero_mean: bool,
}

impl Default for NormOptions {
    fn default() -> Self {
        NormOptions { method: NormMethod::Lanczos, tol: 1e-8, max_iter: 500, seed: 0x5eed, zero_mean: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub sigma: f64,
    /// Applications of `P* P`.
    pub iterations: usize,
    pub residual: f64,
}

/// `||e^{T(-iku + nu d_y^2)}||_{L^2 -> L^2}` at the discretisation `cfg`.
pub fn operator_norm(
    u: &GridField,
    cfg: super::PropagatorConfig,
    t: f64,
    opts: &NormOptions,
) -> Result<NormEstimate> {
    let mut prop = Propagator::new(u, cfg)?;
    Ok(operator_norm_with(&mut prop, t, opts, None)?.0)
}

/// As [`operator_norm`] on a prepared propagator, optionally warm-started;
/// also returns the top right singular vector.
pub fn operator_norm_with(
    prop: &mut Propagator,
    t: f64,
    opts: &NormOptions,
    start: Option<&SpectralField>,
) -> Result<(NormEstimate, SpectralField)> {
    let (est, v, converged) = estimate(prop, t, opts, start)?;
    if !converged {
        return Err(Error::NoConvergence { iterations: est.iterations, residual: est.residual });
    }
    Ok((est, v))
}

/// Best estimate after at most `max_iter` applications, converged or not.
pub(crate) fn estimate(
    prop: &mut Propagator,
    t: f64,
    opts: &NormOptions,
    start: Option<&SpectralField>,
) -> Result<(NormEstimate, SpectralField, bool)> {
    let grid = prop.grid();
    let n = grid.n_points();
    let mut v = match start {
        Some(s) => Propagator::raw_from(s),
        None => {
            let mut rng = rng::stream(opts.seed, 0);
            (0..n)
                .map(|_| {
                    let a: f64 = StandardNormal.sample(&mut rng);
                    let b: f64 = StandardNormal.sample(&mut rng);
                    Complex64::new(a, b)
                })
                .collect()
        }
    };
    if opts.zero_mean {
        v[0] = Complex64::new(0.0, 0.0);
    }
    if norm(&v) == 0.0 {
        return Err(Error::InvalidParameter("start vector vanishes".into()));
    }
    let mut apply = |x: &mut Vec<Complex64>| -> Result<()> {
        prop.evolve_raw(x, t, false)?;
        prop.evolve_raw(x, t, true)?;
        if opts.zero_mean {
            x[0] = Complex64::new(0.0, 0.0);
        }
        Ok(())
    };
    let (theta, residual, iterations, vec) = match opts.method {
        NormMethod::Power => power(&mut apply, v, opts)?,
        NormMethod::Lanczos => lanczos(&mut apply, v, opts)?,
    };
    let sigma = theta.max(0.0).sqrt();
    let converged = residual <= opts.tol;
    Ok((NormEstimate { sigma, iterations, residual }, Propagator::field_from(grid, vec), converged))
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn scale(a: &mut [Complex64], s: f64) {
    for x in a {
        *x *= s;
    }
}

type Apply<'a> = dyn FnMut(&mut Vec<Complex64>) -> Result<()> + 'a;

fn power(
    apply: &mut Apply<'_>,
    mut v: Vec<Complex64>,
    opts: &NormOptions,
) -> Result<(f64, f64, usize, Vec<Complex64>)> {
    let nv = norm(&v);
    scale(&mut v, 1.0 / nv);
    let mut last = (0.0, f64::INFINITY, 0, v.clone());
    for it in 1..=opts.max_iter.max(1) {
        let mut w = v.clone();
        apply(&mut w)?;
        let theta = dot(&v, &w).re;
        let r: f64 = w.iter().zip(&v).map(|(a, b)| (a - b * theta).norm_sqr()).sum::<f64>().sqrt();
        let residual = if theta > 0.0 { r / theta } else { f64::INFINITY };
        let nw = norm(&w);
        if residual <= opts.tol || nw == 0.0 {
            return Ok((theta, residual, it, v));
        }
        scale(&mut w, 1.0 / nw);
        last = (theta, residual, it, std::mem::replace(&mut v, w));
    }
    Ok(last)
}

const KRYLOV_DIM: usize = 40;

fn lanczos(
    apply: &mut Apply<'_>,
    start: Vec<Complex64>,
    opts: &NormOptions,
) -> Result<(f64, f64, usize, Vec<Complex64>)> {
    let mut x = start;
    let nx = norm(&x);
    scale(&mut x, 1.0 / nx);
    let mut used = 0;
    loop {
        let mut basis: Vec<Vec<Complex64>> = vec![x.clone()];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        loop {
            let j = basis.len() - 1;
            let mut w = basis[j].clone();
            apply(&mut w)?;
            used += 1;
            let a = dot(&basis[j], &w).re;
            alpha.push(a);
            // two passes of classical Gram-Schmidt against the whole basis
            for _ in 0..2 {
                for q in &basis {
                    let c = dot(q, &w);
                    for (wi, qi) in w.iter_mut().zip(q) {
                        *wi -= c * qi;
                    }
                }
            }
            let b = norm(&w);
            let (theta, s) = top_ritz(&alpha, &beta);
            let last = s[s.len() - 1].abs();
            let residual = if theta > 0.0 { b * last / theta } else { f64::INFINITY };
            let exhausted = b <= 1e-14 * theta.abs().max(f64::MIN_POSITIVE);
            let out_of_budget = used >= opts.max_iter;
            if residual <= opts.tol || exhausted || out_of_budget || basis.len() == KRYLOV_DIM {
                let mut y = vec![Complex64::new(0.0, 0.0); x.len()];
                for (q, &c) in basis.iter().zip(&s) {
                    for (yi, qi) in y.iter_mut().zip(q) {
                        *yi += qi * c;
                    }
                }
                let ny = norm(&y);
                scale(&mut y, 1.0 / ny);
                if residual <= opts.tol || exhausted || out_of_budget {
                    let residual = if exhausted { residual.min(opts.tol) } else { residual };
                    return Ok((theta, residual, used, y));
                }
                x = y;
                break;
            }
            scale(&mut w, 1.0 / b);
            beta.push(b);
            basis.push(w);
        }
    }
}

/// Largest eigenvalue and its eigenvector for the tridiagonal `(alpha, beta)`.
fn top_ritz(alpha: &[f64], beta: &[f64]) -> (f64, Vec<f64>) {
    let m = alpha.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    let (idx, &theta) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    (theta, eig.eigenvectors.column(idx).iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid;
    use crate::semigroup::PropagatorConfig;

    #[test]
    fn heat_semigroup_norms() {
        let g = Grid::new(64).unwrap();
        let u = GridField::from_fn(g, |_| 0.0);
        let cfg = PropagatorConfig::new(0.1, 1.0, 0.05);
        for method in [NormMethod::Lanczos, NormMethod::Power] {
            let opts = NormOptions { method, ..Default::default() };
            let full = operator_norm(&u, cfg, 5.0, &opts).unwrap();
            assert!((full.sigma - 1.0).abs() < 1e-8, "{method:?} {full:?}");
            let zm = operator_norm(&u, cfg, 5.0, &NormOptions { zero_mean: true, ..opts }).unwrap();
            assert!((zm.sigma - (-0.5f64).exp()).abs() < 1e-8 * zm.sigma, "{method:?} {zm:?}");
        }
    }

    #[test]
    fn lanczos_agrees_with_power_on_a_shear() {
        let g = Grid::new(64).unwrap();
        let u = GridField::from_fn(g, f64::cos);
        let cfg = PropagatorConfig::new(0.05, 1.0, 0.05);
        let l = operator_norm(&u, cfg, 3.0, &NormOptions::default()).unwrap();
        let p = operator_norm(&u, cfg, 3.0, &NormOptions { method: NormMethod::Power, max_iter: 5000, ..Default::default() })
            .unwrap();
        assert!((l.sigma - p.sigma).abs() < 1e-7 * l.sigma);
        assert!(l.iterations <= p.iterations);
        assert!(l.sigma <= 1.0 + 1e-10);
    }
}
