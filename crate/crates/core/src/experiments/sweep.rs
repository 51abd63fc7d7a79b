//! Rate sweeps over seeds, resolutions, truncations and viscosities.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{generate, FieldRecipe, Grid};
use crate::semigroup::{decay_rate, RateOptions, RatePoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// Field class; its seed is replaced by each entry of `seeds`.
    pub recipe: FieldRecipe,
    /// Regularity used for the exponent band.
    pub alpha: f64,
    pub nu_values: Vec<f64>,
    pub k: i64,
    pub resolutions: Vec<usize>,
    pub seeds: Vec<u64>,
    /// Velocity truncations as divisors of `N` (`M = N / d`); empty keeps all modes.
    #[serde(default)]
    pub truncation_divisors: Vec<usize>,
    #[serde(default)]
    pub rate: RateOptions,
    /// Added to every seed, to split one sweep across machines.
    #[serde(default)]
    pub seed_offset: u64,
}

impl SweepSpec {
    /// At least four viscosities spanning two decades and two resolutions.
    pub fn validate(&self) -> Result<()> {
        self.recipe.validate()?;
        if self.nu_values.len() < 4 {
            return Err(Error::TooFewPoints { needed: 4, got: self.nu_values.len() });
        }
        let lo = self.nu_values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.nu_values.iter().copied().fold(0.0, f64::max);
        if !(lo > 0.0) || hi / lo < 100.0 * (1.0 - 1e-12) {
            return Err(Error::InvalidParameter(format!("viscosities must span two decades, got [{lo}, {hi}]")));
        }
        if self.resolutions.len() < 2 {
            return Err(Error::TooFewPoints { needed: 2, got: self.resolutions.len() });
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidParameter("no seeds".into()));
        }
        for &n in &self.resolutions {
            Grid::new(n)?;
        }
        Ok(())
    }

    fn truncations(&self, n: usize) -> Vec<Option<usize>> {
        if self.truncation_divisors.is_empty() {
            vec![None]
        } else {
            self.truncation_divisors.iter().map(|d| Some(n / d)).collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCell {
    pub seed: u64,
    pub n_points: usize,
    pub truncation: Option<usize>,
    pub nu: f64,
    pub point: Option<RatePoint>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateTable {
    pub cells: Vec<RateCell>,
}

impl RateTable {
    /// `(nu, r)` for one seed, resolution and truncation, sorted by decreasing
    /// `nu`; failed cells are skipped.
    pub fn series(&self, seed: u64, n_points: usize, truncation: Option<usize>) -> Vec<(f64, f64)> {
        let mut pts: Vec<(f64, f64)> = self
            .cells
            .iter()
            .filter(|c| c.seed == seed && c.n_points == n_points && c.truncation == truncation)
            .filter_map(|c| c.point.map(|p| (c.nu, p.r)))
            .collect();
        pts.sort_by(|a, b| b.0.total_cmp(&a.0));
        pts
    }

    /// Distinct `(seed, N, M)` combinations in table order.
    pub fn keys(&self) -> Vec<(u64, usize, Option<usize>)> {
        let mut out: Vec<(u64, usize, Option<usize>)> = Vec::new();
        for c in &self.cells {
            let key = (c.seed, c.n_points, c.truncation);
            if !out.contains(&key) {
                out.push(key);
            }
        }
        out
    }

    pub fn failures(&self) -> usize {
        self.cells.iter().filter(|c| c.error.is_some()).count()
    }
}

/// Every cell runs as an independent job; failures are recorded in the
/// cell and the sweep carries on. Cell order is fixed by the plan.
pub fn rate_sweep(plan: &SweepSpec) -> Result<RateTable> {
    plan.validate()?;
    let mut jobs = Vec::new();
    for &seed in &plan.seeds {
        for &n in &plan.resolutions {
            for m in plan.truncations(n) {
                for &nu in &plan.nu_values {
                    jobs.push((seed + plan.seed_offset, n, m, nu));
                }
            }
        }
    }
    let cells = jobs
        .into_par_iter()
        .map(|(seed, n, m, nu)| {
            let run = || -> Result<RatePoint> {
                let u = generate(&FieldRecipe { seed, ..plan.recipe.clone() }, Grid::new(n)?)?;
                decay_rate(&u, nu, plan.k, &RateOptions { u_truncation: m, ..plan.rate })
            };
            let (point, error) = match run() {
                Ok(p) => (Some(p), None),
                Err(e) => (None, Some(e.to_string())),
            };
            RateCell { seed, n_points: n, truncation: m, nu, point, error }
        })
        .collect();
    Ok(RateTable { cells })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::RecipeKind;

    fn plan(kind: RecipeKind) -> SweepSpec {
        SweepSpec {
            recipe: FieldRecipe::new(kind, 0),
            alpha: -0.25,
            nu_values: vec![1e-1, 3e-2, 1e-2, 3e-3, 1e-3],
            k: 1,
            resolutions: vec![32, 64],
            seeds: vec![1, 2],
            truncation_divisors: vec![],
            rate: RateOptions::default(),
            seed_offset: 0,
        }
    }

    #[test]
    fn zero_field_rates_vanish() {
        let t = rate_sweep(&plan(RecipeKind::Zero)).unwrap();
        assert_eq!(t.cells.len(), 2 * 2 * 5);
        assert!(t.cells.iter().all(|c| c.point.map(|p| p.r == 0.0 && p.flags.constant_shear) == Some(true)));
    }

    #[test]
    fn rejects_short_sweeps() {
        let mut s = plan(RecipeKind::Zero);
        s.nu_values = vec![1e-1, 5e-2, 2e-2, 1e-2];
        assert!(s.validate().is_err());
        let mut s = plan(RecipeKind::Zero);
        s.resolutions = vec![64];
        assert!(s.validate().is_err());
    }

    #[test]
    fn cell_errors_do_not_stop_the_sweep() {
        let mut s = plan(RecipeKind::SingleMode { m: 1, amplitude: num_complex::Complex64::new(0.5, 0.0) });
        s.rate.t_max = 2.0;
        let t = rate_sweep(&s).unwrap();
        assert_eq!(t.cells.len(), 20);
        assert!(t.failures() > 0);
    }

    #[test]
    fn sweeps_are_deterministic() {
        let mut s = plan(RecipeKind::RandomFourier { alpha: -0.25, amplitude: 0.3 });
        s.nu_values = vec![1e-1, 3e-2, 1e-2, 1e-3];
        s.resolutions = vec![32, 64];
        s.seeds = vec![5];
        s.seed_offset = 2;
        let a = rate_sweep(&s).unwrap();
        assert_eq!(a, rate_sweep(&s).unwrap());
        assert!(a.cells.iter().all(|c| c.seed == 7));
    }
}
