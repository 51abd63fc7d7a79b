//! Fraction of sampled fields whose irregularity index stays positive as
//! the scan deepens.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{generate, FieldRecipe, Grid, GridField};
use crate::irregularity::{alpha_irregularity, lambda, LambdaParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PrevalenceTarget {
    /// `alpha_irregularity` of a sampled velocity; complex recipes such as
    /// `single_mode` contribute their real part.
    Velocity { recipe: FieldRecipe, alpha: f64 },
    /// `Lambda(beta + 1, 1, 2, int f)` for an fBm path `f`.
    FbmPrimitive { hurst: f64, beta: f64 },
}

/// A seed counts as irregular when the index is positive at every depth in
/// `depths` and the deepest value keeps at least `min_ratio` of the shallowest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityRule {
    pub depths: Vec<usize>,
    pub min_ratio: f64,
}

impl Default for StabilityRule {
    fn default() -> Self {
        StabilityRule { depths: vec![5, 6, 7], min_ratio: 0.5 }
    }
}

impl StabilityRule {
    pub fn holds(&self, values: &[(usize, f64)]) -> bool {
        let Some(first) = values.first() else { return false };
        let last = values[values.len() - 1];
        values.iter().all(|v| v.1 > 0.0 && v.1.is_finite()) && last.1 >= self.min_ratio * first.1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrevalenceSpec {
    pub target: PrevalenceTarget,
    pub n_seeds: usize,
    pub n_points: usize,
    #[serde(default)]
    pub rule: StabilityRule,
    #[serde(default)]
    pub seed_offset: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedCurve {
    pub seed: u64,
    /// Index value with the scan stopped at each depth of the rule.
    pub values: Vec<(usize, f64)>,
    pub irregular: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrevalenceSummary {
    pub n_seeds: usize,
    pub n_irregular: usize,
    pub fraction: f64,
    /// 95% Wilson score interval.
    pub ci_low: f64,
    pub ci_high: f64,
    pub per_seed: Vec<SeedCurve>,
}

/// Wilson score interval for `k` successes in `n` trials at normal quantile `z`.
pub fn wilson_interval(k: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let (k, n) = (k as f64, n as f64);
    let p = k / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

fn index_curve(target: &PrevalenceTarget, grid: Grid, seed: u64, depths: &[usize]) -> Result<Vec<(usize, f64)>> {
    let deepest = *depths.iter().max().expect("nonempty");
    // the scan at max depth d is the minimum of per-depth bests up to d
    let report = match target {
        PrevalenceTarget::Velocity { recipe, alpha } => {
            let u = generate(&FieldRecipe { seed, ..recipe.clone() }, grid)?;
            let u = if u.is_real() { u } else { u.real_part() };
            alpha_irregularity(&u, *alpha, deepest)?
        }
        PrevalenceTarget::FbmPrimitive { hurst, beta } => {
            let f = generate(&FieldRecipe::fbm(*hurst, seed), grid)?;
            let big_f: GridField = f.primitive().real_part();
            lambda(&big_f, &LambdaParams::new(beta + 1.0, 1, 2.0, deepest))?
        }
    };
    Ok(depths
        .iter()
        .map(|&d| {
            let v = report.per_depth.iter().filter(|e| e.depth <= d).map(|e| e.value).fold(f64::INFINITY, f64::min);
            (d, v)
        })
        .collect())
}

pub fn prevalence_study(plan: &PrevalenceSpec) -> Result<PrevalenceSummary> {
    if plan.n_seeds < 30 {
        return Err(Error::TooFewPoints { needed: 30, got: plan.n_seeds });
    }
    if plan.rule.depths.is_empty() {
        return Err(Error::InvalidParameter("stability rule needs at least one depth".into()));
    }
    let grid = Grid::new(plan.n_points)?;
    let mut depths = plan.rule.depths.clone();
    depths.sort_unstable();
    let per_seed = (0..plan.n_seeds as u64)
        .into_par_iter()
        .map(|i| {
            let seed = i + plan.seed_offset;
            let values = index_curve(&plan.target, grid, seed, &depths)?;
            Ok(SeedCurve { seed, irregular: plan.rule.holds(&values), values })
        })
        .collect::<Result<Vec<_>>>()?;
    let n_irregular = per_seed.iter().filter(|s| s.irregular).count();
    let (ci_low, ci_high) = wilson_interval(n_irregular, plan.n_seeds, 1.959964);
    Ok(PrevalenceSummary {
        n_seeds: plan.n_seeds,
        n_irregular,
        fraction: n_irregular as f64 / plan.n_seeds as f64,
        ci_low,
        ci_high,
        per_seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::RecipeKind;
    use num_complex::Complex64;

    #[test]
    fn wilson_reference_values() {
        let (lo, hi) = wilson_interval(45, 50, 1.959964);
        assert!((lo - 0.7864).abs() < 1e-3 && (hi - 0.9565).abs() < 1e-3, "{lo} {hi}");
        let (lo, hi) = wilson_interval(0, 30, 1.959964);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.1135).abs() < 1e-3);
    }

    #[test]
    fn rule_requires_positivity_and_stability() {
        let r = StabilityRule::default();
        assert!(r.holds(&[(5, 1.0), (6, 0.8), (7, 0.6)]));
        assert!(!r.holds(&[(5, 1.0), (6, 0.5), (7, 0.3)]));
        assert!(!r.holds(&[(5, 1.0), (6, 0.0), (7, 0.9)]));
    }

    #[test]
    fn smooth_controls_are_never_irregular() {
        let plan = PrevalenceSpec {
            target: PrevalenceTarget::Velocity {
                recipe: FieldRecipe::new(RecipeKind::SingleMode { m: 3, amplitude: Complex64::new(1.0, 0.0) }, 0),
                alpha: -0.25,
            },
            n_seeds: 30,
            n_points: 2048,
            rule: StabilityRule::default(),
            seed_offset: 0,
        };
        let s = prevalence_study(&plan).unwrap();
        assert_eq!(s.n_irregular, 0);
    }

    #[test]
    fn needs_thirty_seeds() {
        let plan = PrevalenceSpec {
            target: PrevalenceTarget::FbmPrimitive { hurst: 0.5, beta: 0.6 },
            n_seeds: 29,
            n_points: 1024,
            rule: StabilityRule::default(),
            seed_offset: 0,
        };
        assert!(prevalence_study(&plan).is_err());
    }
}
