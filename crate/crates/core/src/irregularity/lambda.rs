use serde::{Deserialize, Serialize};

use super::{check_p, DiscreteBasis, DyadicMomentTree, IntervalRef};
use crate::elliptic::solve_elliptic;
use crate::error::{Error, Result};
use crate::fields::{Grid, GridField};

/// Fewest samples an interval may carry in a scan.
pub const MIN_SAMPLES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaParams {
    pub alpha: f64,
    pub k: usize,
    pub p: f64,
    pub max_depth: usize,
    #[serde(default)]
    pub min_depth: usize,
}

impl LambdaParams {
    pub fn new(alpha: f64, k: usize, p: f64, max_depth: usize) -> Self {
        LambdaParams { alpha, k, p, max_depth, min_depth: 0 }
    }

    /// Scanned depths. Cells longer than one unit are never scanned, which on
    /// the `2 pi` torus means depth 3 and finer.
    pub fn depth_range(&self, grid: Grid) -> Result<std::ops::RangeInclusive<usize>> {
        let finest = grid.max_depth(MIN_SAMPLES);
        if self.max_depth > finest {
            return Err(Error::InvalidParameter(format!(
                "max_depth {} leaves fewer than {MIN_SAMPLES} samples per cell (limit {finest})",
                self.max_depth
            )));
        }
        let lo = self.min_depth.max(min_unit_depth());
        if lo > self.max_depth {
            return Err(Error::InvalidParameter(format!(
                "empty depth range {lo}..={}",
                self.max_depth
            )));
        }
        Ok(lo..=self.max_depth)
    }
}

/// Smallest depth whose cells have length at most one.
pub(crate) fn min_unit_depth() -> usize {
    let mut d = 0;
    while Grid::DOMAIN_LENGTH / (1u64 << d) as f64 > 1.0 {
        d += 1;
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthEntry {
    pub depth: usize,
    pub value: f64,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaReport {
    pub value: f64,
    pub argmin: IntervalRef,
    pub per_depth: Vec<DepthEntry>,
}

impl LambdaReport {
    /// `(n0, min over depths >= n0)` for every scanned `n0`.
    pub fn tails(&self) -> Vec<(usize, f64)> {
        let mut out = Vec::with_capacity(self.per_depth.len());
        let mut acc = f64::INFINITY;
        for e in self.per_depth.iter().rev() {
            acc = acc.min(e.value);
            out.push((e.depth, acc));
        }
        out.reverse();
        out
    }
}

/// `min_J |J|^{-alpha} ||f - P_{k,J,f}||_{L^p_norm(J)}` over dyadic cells.
pub fn lambda(f: &GridField, params: &LambdaParams) -> Result<LambdaReport> {
    check_p(params.p)?;
    params.depth_range(f.grid())?;
    let tree = DyadicMomentTree::build(f, params.k, params.max_depth)?;
    lambda_from_tree(&tree, f, params)
}

/// As [`lambda`] with a prebuilt tree of degree at least `params.k` and
/// depth at least `params.max_depth`.
pub fn lambda_from_tree(
    tree: &DyadicMomentTree,
    f: &GridField,
    params: &LambdaParams,
) -> Result<LambdaReport> {
    check_p(params.p)?;
    let grid = f.grid();
    let range = params.depth_range(grid)?;
    if tree.degree() < params.k || tree.max_depth() < params.max_depth {
        return Err(Error::InvalidParameter("moment tree too shallow for these parameters".into()));
    }
    if tree.n_points() != grid.n_points() {
        return Err(Error::GridMismatch { left: tree.n_points(), right: grid.n_points() });
    }
    let values = if params.p == 2.0 { Vec::new() } else { f.real_values()? };

    let mut per_depth = Vec::new();
    for depth in range {
        let len = tree.cell_len(depth);
        let prefactor = (-params.alpha * (len as f64 * grid.spacing()).ln()).exp();
        let basis = if params.p == 2.0 { None } else { Some(DiscreteBasis::new(params.k, len)?) };
        let mut best = DepthEntry { depth, value: f64::INFINITY, index: 0 };
        for index in 0..(1usize << depth) {
            let proj = tree.projection(depth, index);
            let dev = match &basis {
                None => proj.deviation_sq(params.k).sqrt(),
                Some(b) => {
                    proj.deviation_p(&values[index * len..(index + 1) * len], b, params.k, params.p)
                }
            };
            let v = prefactor * dev;
            if v < best.value {
                best = DepthEntry { depth, value: v, index };
            }
        }
        per_depth.push(best);
    }
    let mut best = per_depth[0];
    for e in &per_depth[1..] {
        if e.value < best.value {
            best = *e;
        }
    }
    Ok(LambdaReport {
        value: best.value,
        argmin: IntervalRef::Dyadic { depth: best.depth as u32, index: best.index },
        per_depth,
    })
}

/// Tail infima `(n0, inf_{n >= n0} best value at depth n)`.
pub fn lambda_local(f: &GridField, params: &LambdaParams) -> Result<Vec<(usize, f64)>> {
    Ok(lambda(f, params)?.tails())
}

/// Index of `dU` at `(alpha + 1, k = 1, p = 2)` where `U` solves `-U'' = u - mean`.
pub fn alpha_irregularity(u: &GridField, alpha: f64, max_depth: usize) -> Result<LambdaReport> {
    if !(alpha > -0.5 && alpha < 0.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (-1/2, 0), got {alpha}")));
    }
    if !u.is_real() {
        return Err(Error::NotReal);
    }
    let du = solve_elliptic(&u.to_spectral()).du.to_grid().real_part();
    lambda(&du, &LambdaParams::new(alpha + 1.0, 1, 2.0, max_depth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{generate, FieldRecipe};

    #[test]
    fn constant_field_has_zero_index() {
        let g = Grid::new(256).unwrap();
        let f = GridField::from_fn(g, |_| 7.0);
        let r = lambda(&f, &LambdaParams::new(0.5, 0, 2.0, 5)).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.per_depth.iter().all(|e| e.value == 0.0));
        assert_eq!(r.argmin, IntervalRef::Dyadic { depth: 3, index: 0 });
    }

    #[test]
    fn depth_range_is_clamped() {
        let g = Grid::new(256).unwrap();
        assert_eq!(LambdaParams::new(0.5, 0, 2.0, 5).depth_range(g).unwrap(), 3..=5);
        assert!(LambdaParams::new(0.5, 0, 2.0, 6).depth_range(g).is_err());
        assert!(LambdaParams::new(0.5, 0, 2.0, 2).depth_range(Grid::new(32).unwrap()).is_err());
    }

    #[test]
    fn nonpositive_alpha_drives_deep_values_to_zero() {
        let g = Grid::new(4096).unwrap();
        let f = GridField::from_fn(g, |y| (3.0 * y).sin() + y.cos());
        let r = lambda(&f, &LambdaParams::new(0.0, 0, 2.0, 9)).unwrap();
        let vals: Vec<f64> = r.per_depth.iter().map(|e| e.value).collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]));
        assert!(vals.last().unwrap() < &(vals[0] / 20.0));
    }

    #[test]
    fn p_one_matches_direct_deviation() {
        let g = Grid::new(256).unwrap();
        let f = generate(&FieldRecipe::random_fourier(-0.2, 1.0, 4), g).unwrap();
        let params = LambdaParams::new(0.7, 1, 1.0, 5);
        let r = lambda(&f, &params).unwrap();
        for e in &r.per_depth {
            let j = IntervalRef::Dyadic { depth: e.depth as u32, index: e.index };
            let want = j.length(g).unwrap().powf(-0.7)
                * super::super::local_deviation(&f, j, 1, 1.0).unwrap();
            assert!((want - e.value).abs() < 1e-10 * want);
        }
    }

    #[test]
    fn tails_are_nondecreasing() {
        let g = Grid::new(1024).unwrap();
        let f = generate(&FieldRecipe::fbm(0.4, 2), g).unwrap();
        let tails = lambda_local(&f, &LambdaParams::new(0.6, 0, 2.0, 7)).unwrap();
        assert_eq!(tails.len(), 5);
        assert!(tails.windows(2).all(|w| w[1].1 >= w[0].1));
    }

    #[test]
    fn irregularity_of_zero_and_range_check() {
        let g = Grid::new(256).unwrap();
        let z = GridField::from_fn(g, |_| 0.0);
        assert_eq!(alpha_irregularity(&z, -0.25, 5).unwrap().value, 0.0);
        assert!(alpha_irregularity(&z, 0.1, 5).is_err());
    }
}
