//! Irregularity indices of periodic fields.
//!
//! Intervals are arcs of the torus addressed by sample index; every arc is
//! mapped affinely onto `[0, 1]` (local coordinate `t_s = (s + 1/2)/L` for the
//! `s`-th of its `L` samples) before projecting, while the prefactor
//! `|J|^{-alpha}` uses arc length in torus units.

mod basis;
mod brute;
mod increments;
mod lambda;
mod moments;
mod omega;
mod roughness;

pub use basis::{ortho_basis, shifted_legendre_integer_coeffs, OrthoPolyBasis, MAX_DEGREE};
pub use brute::{lambda_brute_force, BruteForceReport};
pub use increments::{g_alpha, k_index, lambda_differences, DifferenceReport};
pub use lambda::{
    alpha_irregularity, lambda, lambda_from_tree, lambda_local, DepthEntry, LambdaParams,
    LambdaReport, MIN_SAMPLES,
};
pub use moments::DyadicMomentTree;
pub use omega::omega1;
pub use roughness::{
    holder_roughness, occupation_fourier, small_oscillation_fraction, OccupationReport,
};

pub(crate) use basis::DiscreteBasis;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{Grid, GridField};

/// A dyadic cell `[-pi + 2 pi m / 2^n, -pi + 2 pi (m+1) / 2^n)` or an
/// arbitrary run of `len` samples starting at sample `start`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum IntervalRef {
    Dyadic { depth: u32, index: usize },
    Span { start: usize, len: usize },
}

impl IntervalRef {
    /// `(start, len)` in samples, checked against the grid.
    pub fn resolve(&self, grid: Grid) -> Result<(usize, usize)> {
        let n = grid.n_points();
        let (start, len) = match *self {
            IntervalRef::Dyadic { depth, index } => {
                if depth >= usize::BITS || (1usize << depth) > n {
                    return Err(Error::InvalidParameter(format!(
                        "depth {depth} is finer than the grid"
                    )));
                }
                if index >= 1 << depth {
                    return Err(Error::InvalidParameter(format!(
                        "index {index} out of range at depth {depth}"
                    )));
                }
                let len = n >> depth;
                (index * len, len)
            }
            IntervalRef::Span { start, len } => (start, len),
        };
        if len == 0 || start + len > n {
            return Err(Error::InvalidParameter(format!(
                "interval [{start}, {}) leaves the grid of {n} points",
                start + len
            )));
        }
        Ok((start, len))
    }

    /// Arc length in torus units.
    pub fn length(&self, grid: Grid) -> Result<f64> {
        Ok(self.resolve(grid)?.1 as f64 * grid.spacing())
    }

    /// Torus coordinate of the left endpoint.
    pub fn left(&self, grid: Grid) -> Result<f64> {
        Ok(grid.coordinate(self.resolve(grid)?.0))
    }
}

/// Best `L^2` polynomial on an interval, in the local coordinate `t in [0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalPolynomial {
    pub interval: IntervalRef,
    /// `coeffs[j]` multiplies `t^j`.
    pub coeffs: Vec<f64>,
}

impl LocalPolynomial {
    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }
}

/// Mean, centred energy and higher orthonormal coefficients of one interval.
#[derive(Debug, Clone)]
pub(crate) struct Projection {
    pub mean: f64,
    /// `(1/L) sum (f - mean)^2`.
    pub var: f64,
    /// `b[i-1] = (1/L) sum q_i f` for `i = 1..=k`.
    pub b: Vec<f64>,
}

impl Projection {
    pub fn from_samples(values: &[f64], basis: &DiscreteBasis) -> Self {
        let len = values.len() as f64;
        let mean = values.iter().sum::<f64>() / len;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / len;
        let b = (1..=basis.k)
            .map(|i| {
                basis.row(i).iter().zip(values).map(|(q, v)| q * (v - mean)).sum::<f64>() / len
            })
            .collect();
        Projection { mean, var, b }
    }

    /// Squared normalized `L^2` distance to `P_k`, for any `k` up to the
    /// projection's degree. Nonincreasing in `k` in floating point.
    pub fn deviation_sq(&self, k: usize) -> f64 {
        let mut acc = self.var;
        for b in &self.b[..k] {
            acc -= b * b;
        }
        acc.max(0.0)
    }

    /// Normalized `L^p` norm of the residual `f - P`.
    pub fn deviation_p(&self, values: &[f64], basis: &DiscreteBasis, k: usize, p: f64) -> f64 {
        if p == 2.0 {
            return self.deviation_sq(k).sqrt();
        }
        let len = values.len();
        let mut acc = 0.0;
        for (s, v) in values.iter().enumerate() {
            let mut r = v - self.mean;
            for i in 1..=k {
                r -= self.b[i - 1] * basis.values[i * len + s];
            }
            acc += r.abs().powf(p);
        }
        (acc / len as f64).powf(1.0 / p)
    }
}

pub(crate) fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("p must lie in [1, inf), got {p}")));
    }
    Ok(())
}

fn samples(f: &GridField, j: IntervalRef, k: usize) -> Result<(Vec<f64>, DiscreteBasis)> {
    let values = f.real_values()?;
    let (start, len) = j.resolve(f.grid())?;
    let basis = DiscreteBasis::new(k, len)?;
    Ok((values[start..start + len].to_vec(), basis))
}

/// The polynomial of degree `<= k` closest to `f` in the averaged discrete
/// `L^2` norm on `J`.
pub fn project(f: &GridField, j: IntervalRef, k: usize) -> Result<LocalPolynomial> {
    let (vals, basis) = samples(f, j, k)?;
    let proj = Projection::from_samples(&vals, &basis);
    let mut coeffs = vec![0.0; k + 1];
    coeffs[0] = proj.mean;
    for i in 1..=k {
        for (c, m) in coeffs.iter_mut().zip(&basis.monomials[i]) {
            *c += proj.b[i - 1] * m;
        }
    }
    Ok(LocalPolynomial { interval: j, coeffs })
}

/// `||f - P_{k,J,f}||` in the averaged `L^p(J)` norm.
pub fn local_deviation(f: &GridField, j: IntervalRef, k: usize, p: f64) -> Result<f64> {
    check_p(p)?;
    let (vals, basis) = samples(f, j, k)?;
    Ok(Projection::from_samples(&vals, &basis).deviation_p(&vals, &basis, k, p))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Field whose samples on `J` equal `g(t_s)` in the local coordinate.
    pub(crate) fn local_field(n: usize, j: IntervalRef, g: impl Fn(f64) -> f64) -> GridField {
        let grid = Grid::new(n).unwrap();
        let (start, len) = j.resolve(grid).unwrap();
        let vals: Vec<f64> = (0..n)
            .map(|i| {
                if i >= start && i < start + len {
                    g(((i - start) as f64 + 0.5) / len as f64)
                } else {
                    (i as f64).sin()
                }
            })
            .collect();
        GridField::from_real(grid, &vals).unwrap()
    }

    #[test]
    fn resolve_checks_bounds() {
        let g = Grid::new(64).unwrap();
        assert_eq!(IntervalRef::Dyadic { depth: 2, index: 3 }.resolve(g).unwrap(), (48, 16));
        assert!(IntervalRef::Dyadic { depth: 2, index: 4 }.resolve(g).is_err());
        assert!(IntervalRef::Dyadic { depth: 7, index: 0 }.resolve(g).is_err());
        assert!(IntervalRef::Span { start: 60, len: 8 }.resolve(g).is_err());
    }

    #[test]
    fn projection_of_linear_is_the_mean_for_k0() {
        let j = IntervalRef::Span { start: 10, len: 64 };
        let f = local_field(256, j, |t| t);
        let p = project(&f, j, 0).unwrap();
        assert!((p.coeffs[0] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn projection_of_square_onto_lines() {
        let j = IntervalRef::Span { start: 0, len: 200 };
        let f = local_field(256, j, |t| t * t);
        let p = project(&f, j, 1).unwrap();
        // midpoint sampling shifts the continuum answer x - 1/6 by O(1/L^2)
        assert!((p.coeffs[1] - 1.0).abs() < 1e-4);
        assert!((p.coeffs[0] + 1.0 / 6.0).abs() < 1e-4);
        let dev = local_deviation(&f, j, 1, 2.0).unwrap();
        assert!((dev - 1.0 / (6.0 * 5f64.sqrt())).abs() < 1e-4);
    }

    #[test]
    fn polynomials_are_reproduced() {
        let j = IntervalRef::Dyadic { depth: 3, index: 5 };
        let f = local_field(256, j, |t| 2.0 - 3.0 * t + 0.5 * t * t);
        let p = project(&f, j, 2).unwrap();
        for (c, w) in p.coeffs.iter().zip([2.0, -3.0, 0.5]) {
            assert!((c - w).abs() < 1e-10);
        }
        assert!(local_deviation(&f, j, 2, 2.0).unwrap() < 1e-7);
        assert!(local_deviation(&f, j, 2, 1.0).unwrap() < 1e-12);
    }

    #[test]
    fn too_few_samples() {
        let f = GridField::from_fn(Grid::new(64).unwrap(), f64::sin);
        let e = local_deviation(&f, IntervalRef::Span { start: 0, len: 2 }, 2, 2.0);
        assert!(matches!(e, Err(Error::DegenerateInterval { .. })));
    }
}
