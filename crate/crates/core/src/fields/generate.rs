//! Sampled velocity classes.
//!
//! `random_fourier` draws `u_m = amp * m^{-(alpha+1/2)} (g + i g')/sqrt 2`.
//! A dyadic block `2^{j-1} <= m < 2^j` holds about `2^{j-1}` modes, so its
//! squared L2 norm is about `2^j * 2^{-j(2 alpha + 1)} = 2^{-2 j alpha}` and
//! `2^{j alpha} ||Delta_j u||` stays of order one across `j`.

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;

use super::{fft, Grid, GridField, SpectralField};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RecipeKind {
    RandomFourier { alpha: f64, amplitude: f64 },
    Fbm { hurst: f64 },
    Weierstrass { a: f64, b: u32, terms: u32 },
    SingleMode { m: i64, amplitude: Complex64 },
    Constant { c: f64 },
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldRecipe {
    #[serde(flatten)]
    pub kind: RecipeKind,
    #[serde(default)]
    pub seed: u64,
}

impl FieldRecipe {
    pub fn new(kind: RecipeKind, seed: u64) -> Self {
        FieldRecipe { kind, seed }
    }

    pub fn random_fourier(alpha: f64, amplitude: f64, seed: u64) -> Self {
        Self::new(RecipeKind::RandomFourier { alpha, amplitude }, seed)
    }

    pub fn fbm(hurst: f64, seed: u64) -> Self {
        Self::new(RecipeKind::Fbm { hurst }, seed)
    }

    pub fn weierstrass(a: f64, b: u32, terms: u32) -> Self {
        Self::new(RecipeKind::Weierstrass { a, b, terms }, 0)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidRecipe(msg));
        match self.kind {
            RecipeKind::RandomFourier { alpha, amplitude } => {
                if !(alpha > -0.5 && alpha < 1.0) {
                    return bad(format!("random_fourier needs alpha in (-1/2, 1), got {alpha}"));
                }
                if !amplitude.is_finite() {
                    return bad("random_fourier amplitude must be finite".into());
                }
            }
            RecipeKind::Fbm { hurst } => {
                if !(hurst > 0.0 && hurst < 1.0) {
                    return bad(format!("fbm needs H in (0, 1), got {hurst}"));
                }
            }
            RecipeKind::Weierstrass { a, b, .. } => {
                if !(a > 0.0 && a < 1.0) {
                    return bad(format!("weierstrass needs a in (0, 1), got {a}"));
                }
                if b < 2 {
                    return bad(format!("weierstrass needs b >= 2, got {b}"));
                }
            }
            RecipeKind::Constant { c } if !c.is_finite() => {
                return bad("constant must be finite".into());
            }
            _ => {}
        }
        Ok(())
    }
}

pub fn generate(recipe: &FieldRecipe, grid: Grid) -> Result<GridField> {
    recipe.validate()?;
    match recipe.kind {
        RecipeKind::RandomFourier { alpha, amplitude } => {
            Ok(random_fourier(grid, alpha, amplitude, recipe.seed).to_grid())
        }
        RecipeKind::Fbm { hurst } => fbm(grid, hurst, recipe.seed),
        RecipeKind::Weierstrass { a, b, terms } => Ok(weierstrass(grid, a, b, terms)),
        RecipeKind::SingleMode { m, amplitude } => {
            Ok(SpectralField::single_mode(grid, m, amplitude)?.to_grid())
        }
        RecipeKind::Constant { c } => Ok(GridField::from_fn(grid, |_| c)),
        RecipeKind::Zero => Ok(GridField::from_fn(grid, |_| 0.0)),
    }
}

fn random_fourier(grid: Grid, alpha: f64, amplitude: f64, seed: u64) -> SpectralField {
    let n = grid.n_points();
    let mut field = SpectralField::zeros(grid);
    let coeffs = field.coeffs_mut();
    for m in 1..n / 2 {
        let mut rng = rng::stream(seed, m as u64);
        let g: f64 = StandardNormal.sample(&mut rng);
        let g2: f64 = StandardNormal.sample(&mut rng);
        let scale = amplitude * (m as f64).powf(-(alpha + 0.5)) * FRAC_1_SQRT_2;
        let c = Complex64::new(g, g2) * scale;
        coeffs[m] = c;
        coeffs[n - m] = c.conj();
    }
    field
}

fn weierstrass(grid: Grid, a: f64, b: u32, terms: u32) -> GridField {
    let nyq = grid.nyquist() as f64;
    let mut freqs = Vec::new();
    let mut freq = 1.0_f64;
    let mut weight = 1.0_f64;
    for _ in 0..terms {
        if freq > nyq {
            break;
        }
        freqs.push((weight, freq));
        freq *= b as f64;
        weight *= a;
    }
    GridField::from_fn(grid, |y| freqs.iter().map(|&(w, f)| w * (f * y).cos()).sum())
}

/// Exact fBm on `[0, pi]` by circulant embedding of fractional Gaussian
/// noise, mirrored to `[-pi, 0)` through `f(y) = B(|y|)`.
fn fbm(grid: Grid, hurst: f64, seed: u64) -> Result<GridField> {
    let n = grid.nyquist();
    let h = grid.spacing();
    let two_h = 2.0 * hurst;
    let scale = h.powf(two_h) / 2.0;
    let gamma = |k: usize| {
        let k = k as f64;
        scale * ((k + 1.0).powf(two_h) - 2.0 * k.powf(two_h) + (k - 1.0).abs().powf(two_h))
    };

    let m = 2 * n;
    let mut row: Vec<Complex64> = (0..m)
        .map(|i| Complex64::new(gamma(if i <= n { i } else { m - i }), 0.0))
        .collect();
    fft::forward(&mut row);
    let eig: Vec<f64> = row.iter().map(|c| c.re).collect();
    let max = eig.iter().cloned().fold(0.0, f64::max);
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -1e-10 * max {
        return Err(Error::EmbeddingNotPsd { min_eigenvalue: min });
    }

    let mut rng = rng::stream(seed, 0);
    let mut w: Vec<Complex64> = eig
        .iter()
        .map(|&lam| {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(a, b) * (lam.max(0.0) / m as f64).sqrt()
        })
        .collect();
    fft::forward(&mut w);

    let mut path = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    path.push(acc);
    for z in &w[..n] {
        acc += z.re;
        path.push(acc);
    }
    let values: Vec<f64> = (0..grid.n_points()).map(|j| path[j.abs_diff(n)]).collect();
    GridField::from_real(grid, &values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_and_zero() {
        let g = Grid::new(32).unwrap();
        let c = generate(&FieldRecipe::new(RecipeKind::Constant { c: 3.0 }, 0), g).unwrap();
        assert!(c.values().iter().all(|v| v.re == 3.0 && v.im == 0.0));
        let z = generate(&FieldRecipe::new(RecipeKind::Zero, 9), g).unwrap();
        assert_eq!(z.max_abs(), 0.0);
    }

    #[test]
    fn single_term_weierstrass_is_cosine() {
        let g = Grid::new(64).unwrap();
        let f = generate(&FieldRecipe::weierstrass(0.5, 2, 1), g).unwrap();
        for (j, v) in f.values().iter().enumerate() {
            assert!((v.re - g.coordinate(j).cos()).abs() < 1e-15);
        }
    }

    #[test]
    fn weierstrass_terms_capped_at_nyquist() {
        let g = Grid::new(16).unwrap();
        let f = generate(&FieldRecipe::weierstrass(0.5, 2, 40), g).unwrap();
        assert_eq!(f.to_spectral().bandwidth(1e-12), 8);
    }

    #[test]
    fn recipe_validation() {
        let g = Grid::new(32).unwrap();
        assert!(generate(&FieldRecipe::random_fourier(-0.5, 1.0, 0), g).is_err());
        assert!(generate(&FieldRecipe::random_fourier(1.0, 1.0, 0), g).is_err());
        assert!(generate(&FieldRecipe::fbm(1.0, 0), g).is_err());
        assert!(generate(&FieldRecipe::weierstrass(1.0, 2, 3), g).is_err());
    }

    #[test]
    fn random_fourier_is_real_mean_free_and_nyquist_free() {
        let g = Grid::new(128).unwrap();
        let f = generate(&FieldRecipe::random_fourier(-0.25, 1.0, 5), g).unwrap();
        assert!(f.is_real());
        let s = f.to_spectral();
        assert!(s.coeff(0).norm() < 1e-14);
        assert!(s.coeffs()[g.nyquist()].norm() < 1e-14);
        assert!(s.is_conjugate_symmetric(1e-12));
    }

    #[test]
    fn fbm_reflects_evenly_and_starts_at_zero() {
        let g = Grid::new(256).unwrap();
        let f = generate(&FieldRecipe::fbm(0.7, 1), g).unwrap().real_values().unwrap();
        let n = g.n_points();
        assert_eq!(f[n / 2], 0.0);
        for j in 1..n / 2 {
            assert_eq!(f[n / 2 + j], f[n / 2 - j]);
        }
    }

    #[test]
    fn recipe_json_round_trip() {
        let r = FieldRecipe::random_fourier(-0.25, 2.0, 17);
        let s = serde_json::to_string(&r).unwrap();
        assert!(s.contains("\"kind\":\"random_fourier\""));
        assert_eq!(serde_json::from_str::<FieldRecipe>(&s).unwrap(), r);
    }
}
