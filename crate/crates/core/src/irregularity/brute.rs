//! Exhaustive scan over every run of samples, for cross-checking the
//! dyadic index on small grids. Projections here go through the normal
//! equations in centred, scaled monomials and share no code with the
//! orthonormal-basis path.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_p, IntervalRef, MIN_SAMPLES};
use crate::error::{Error, Result};
use crate::fields::GridField;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BruteForceReport {
    pub value: f64,
    pub argmin: IntervalRef,
    pub intervals_scanned: usize,
}

/// `min |J|^{-alpha} ||f - P||_{L^p_norm(J)}` over all non-wrapping runs of
/// at least eight samples with length at most one.
pub fn lambda_brute_force(f: &GridField, alpha: f64, k: usize, p: f64) -> Result<BruteForceReport> {
    check_p(p)?;
    let values = f.real_values()?;
    let n = values.len();
    let h = f.grid().spacing();
    let max_len = ((1.0 / h).floor() as usize).min(n);
    let min_len = MIN_SAMPLES.max(k + 1);
    if max_len < min_len {
        return Err(Error::InvalidParameter("grid too coarse for unit-length intervals".into()));
    }

    let per_start: Vec<(f64, usize, usize, usize)> = (0..=n - min_len)
        .into_par_iter()
        .map(|start| {
            let mut best = (f64::INFINITY, start, 0, 0);
            for len in min_len..=max_len.min(n - start) {
                let dev = least_squares_deviation(&values[start..start + len], k, p);
                let v = (len as f64 * h).powf(-alpha) * dev;
                if v < best.0 {
                    best.0 = v;
                    best.2 = len;
                }
                best.3 += 1;
            }
            best
        })
        .collect();

    let mut scanned = 0;
    let mut best = (f64::INFINITY, 0, 0);
    for (v, start, len, count) in per_start {
        scanned += count;
        if v < best.0 {
            best = (v, start, len);
        }
    }
    Ok(BruteForceReport {
        value: best.0,
        argmin: IntervalRef::Span { start: best.1, len: best.2 },
        intervals_scanned: scanned,
    })
}

/// Averaged `L^p` residual of the least-squares polynomial fit of degree `k`.
pub(crate) fn least_squares_deviation(vals: &[f64], k: usize, p: f64) -> f64 {
    let coeffs = fit(vals, k);
    let len = vals.len();
    let acc: f64 = vals
        .iter()
        .enumerate()
        .map(|(s, v)| {
            let x = scaled(s, len);
            let fit = coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c);
            (v - fit).abs().powf(p)
        })
        .sum();
    (acc / len as f64).powf(1.0 / p)
}

fn scaled(s: usize, len: usize) -> f64 {
    (s as f64 - (len as f64 - 1.0) / 2.0) / (len as f64 / 2.0)
}

fn fit(vals: &[f64], k: usize) -> Vec<f64> {
    let kk = k + 1;
    let len = vals.len();
    let mut m = vec![0.0; kk * (kk + 1)];
    let mut pow = vec![0.0; 2 * kk];
    for (s, &v) in vals.iter().enumerate() {
        let x = scaled(s, len);
        let mut xp = 1.0;
        for slot in pow.iter_mut() {
            *slot = xp;
            xp *= x;
        }
        for i in 0..kk {
            for j in 0..kk {
                m[i * (kk + 1) + j] += pow[i + j];
            }
            m[i * (kk + 1) + kk] += pow[i] * v;
        }
    }
    solve_augmented(&mut m, kk)
}

/// Gaussian elimination with partial pivoting on an `n x (n+1)` system.
fn solve_augmented(m: &mut [f64], n: usize) -> Vec<f64> {
    let w = n + 1;
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&a, &b| m[a * w + col].abs().total_cmp(&m[b * w + col].abs()))
            .expect("non-empty");
        if piv != col {
            for c in 0..w {
                m.swap(piv * w + c, col * w + c);
            }
        }
        let d = m[col * w + col];
        for row in col + 1..n {
            let factor = m[row * w + col] / d;
            for c in col..w {
                m[row * w + c] -= factor * m[col * w + c];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = m[row * w + n];
        for c in row + 1..n {
            acc -= m[row * w + c] * x[c];
        }
        x[row] = acc / m[row * w + row];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid;

    #[test]
    fn polynomial_data_fits_exactly() {
        let vals: Vec<f64> = (0..20).map(|s| 1.0 + 0.3 * s as f64 - 0.01 * (s * s) as f64).collect();
        assert!(least_squares_deviation(&vals, 2, 2.0) < 1e-12);
        assert!(least_squares_deviation(&vals, 1, 2.0) > 1e-3);
    }

    #[test]
    fn scans_every_admissible_interval() {
        let g = Grid::new(64).unwrap();
        let f = GridField::from_fn(g, |y| (2.0 * y).sin());
        let r = lambda_brute_force(&f, 0.5, 0, 2.0).unwrap();
        // h = 2 pi / 64, so lengths 8..=10 fit inside one unit.
        let expected: usize = (8..=10).map(|len| 64 - len + 1).sum();
        assert_eq!(r.intervals_scanned, expected);
    }
}
