//! Besov, Sobolev and Campanato seminorms at grid resolution.
//!
//! Littlewood-Paley blocks are sharp: block 0 holds `|m| <= 1` and block
//! `j >= 1` holds `2^j <= |m| < 2^{j+1}`, the last block also taking `-N/2`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{Grid, GridField, SpectralField};
use crate::irregularity::{DiscreteBasis, DyadicMomentTree, MIN_SAMPLES};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesovParams {
    pub s: f64,
    /// `f64::INFINITY` selects the sup norm.
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CampanatoParams {
    pub p: f64,
    pub alpha: f64,
    pub k: usize,
    /// Averaged interval norm when true, plain `L^p(J)` otherwise.
    pub normalized: bool,
}

/// Littlewood-Paley block of `f` number `j`, or `None` past the Nyquist mode.
pub fn lp_block(f: &SpectralField, j: u32) -> Option<SpectralField> {
    let grid = f.grid();
    let nyq = grid.nyquist() as u64;
    let (lo, hi) = if j == 0 { (0u64, 2u64) } else { (1u64 << j, 1u64 << (j + 1)) };
    if lo > nyq {
        return None;
    }
    let mut out = SpectralField::zeros(grid);
    for (i, c) in out.coeffs_mut().iter_mut().enumerate() {
        let m = grid.mode(i).unsigned_abs();
        if m >= lo && m < hi {
            *c = f.coeffs()[i];
        }
    }
    Some(out)
}

pub fn lp_norm(f: &GridField, p: f64) -> f64 {
    if p.is_infinite() {
        return f.max_abs();
    }
    let h = f.grid().spacing();
    (h * f.values().iter().map(|v| v.norm().powf(p)).sum::<f64>()).powf(1.0 / p)
}

/// `sup_j 2^{js} ||Delta_j f||_{L^p}`.
pub fn besov_seminorm(f: &SpectralField, params: BesovParams) -> Result<f64> {
    if !(params.p >= 1.0) {
        return Err(Error::InvalidParameter(format!("p must be >= 1, got {}", params.p)));
    }
    Ok(besov_blocks(f, params).into_iter().fold(0.0, f64::max))
}

/// The weighted block norms `2^{js} ||Delta_j f||_{L^p}`, `j = 0, 1, ...`.
pub fn besov_blocks(f: &SpectralField, params: BesovParams) -> Vec<f64> {
    (0..)
        .map_while(|j| lp_block(f, j).map(|b| (j, b)))
        .map(|(j, b)| 2f64.powf(j as f64 * params.s) * lp_norm(&b.to_grid(), params.p))
        .collect()
}

/// `(2 pi sum (1 + m^2)^s |f_m|^2)^{1/2}`.
pub fn sobolev_norm(f: &SpectralField, s: f64) -> f64 {
    let sum: f64 =
        f.modes().map(|(m, c)| (1.0 + (m * m) as f64).powf(s) * c.norm_sqr()).sum();
    (Grid::DOMAIN_LENGTH * sum).sqrt()
}

/// `sup_J |J|^{-alpha} inf_{P in P_k} ||f - P||_{L^p(J)}` over dyadic cells
/// of length at most `pi` holding at least eight samples. The infimum is
/// taken at the `L^2` projection, exact for `p = 2`.
pub fn campanato_seminorm(f: &GridField, params: CampanatoParams) -> Result<f64> {
    if !(params.p >= 1.0 && params.p.is_finite()) {
        return Err(Error::InvalidParameter(format!("p must lie in [1, inf), got {}", params.p)));
    }
    let grid = f.grid();
    let max_depth = grid.max_depth(MIN_SAMPLES);
    if max_depth < 1 {
        return Err(Error::InvalidParameter("grid too coarse for a Campanato scan".into()));
    }
    let tree = DyadicMomentTree::build(f, params.k, max_depth)?;
    let values = if params.p == 2.0 { Vec::new() } else { f.real_values()? };
    let mut best: f64 = 0.0;
    for depth in 1..=max_depth {
        let len = tree.cell_len(depth);
        let length = len as f64 * grid.spacing();
        let weight = if params.normalized { 1.0 } else { length.powf(1.0 / params.p) };
        let prefactor = length.powf(-params.alpha) * weight;
        let basis =
            if params.p == 2.0 { None } else { Some(DiscreteBasis::new(params.k, len)?) };
        for index in 0..(1usize << depth) {
            let proj = tree.projection(depth, index);
            let dev = match &basis {
                None => proj.deviation_sq(params.k).sqrt(),
                Some(b) => {
                    proj.deviation_p(&values[index * len..(index + 1) * len], b, params.k, params.p)
                }
            };
            best = best.max(prefactor * dev);
        }
    }
    Ok(best)
}

/// Convenience: `e^{i m y}` as a spectral field.
pub fn exponential(grid: Grid, m: i64) -> Result<SpectralField> {
    SpectralField::single_mode(grid, m, Complex64::new(1.0, 0.0))
}
