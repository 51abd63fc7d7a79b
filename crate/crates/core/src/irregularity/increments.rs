//! Finite-difference formulations: `Delta_h^{k+1} f`, the averaged negative
//! moments `G_alpha` and their dyadic supremum `K`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{basis::binomial, check_p, IntervalRef, MIN_SAMPLES};
use crate::error::{Error, Result};
use crate::extended::Extended;
use crate::fields::{Grid, GridField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DifferenceReport {
    /// `sup_h ||Delta_h^{k+1} f||_{L^p_norm(J')}`.
    pub sup_value: f64,
    /// `|| h -> ||Delta_h^1 f||_{L^p_norm(J')} ||_{L^p_norm(0, |J'|)}`.
    pub avg_value: f64,
    /// The interval actually used: `J` itself, or its first `1/(k+2)` part
    /// when the increments would leave the grid.
    pub interval: IntervalRef,
}

fn difference(values: &[f64], x: usize, step: usize, order: usize) -> f64 {
    (0..=order)
        .map(|i| {
            let sign = if (order - i) % 2 == 0 { 1.0 } else { -1.0 };
            sign * binomial(order, i) as f64 * values[x + i * step]
        })
        .sum()
}

fn norm_p(it: impl Iterator<Item = f64>, p: f64) -> f64 {
    let mut count = 0usize;
    let mut acc = 0.0;
    for v in it {
        acc += v.abs().powf(p);
        count += 1;
    }
    (acc / count as f64).powf(1.0 / p)
}

/// Both difference quotients of `f` on `J`, with `h` on the grid lattice
/// `0, h, ..., |J|`.
pub fn lambda_differences(
    f: &GridField,
    j: IntervalRef,
    k: usize,
    p: f64,
) -> Result<DifferenceReport> {
    check_p(p)?;
    let values = f.real_values()?;
    let n = values.len();
    let (start, mut len) = j.resolve(f.grid())?;
    let mut interval = j;
    if start + (k + 2) * len > n {
        len /= k + 2;
        interval = IntervalRef::Span { start, len };
    }
    if len < 2 {
        return Err(Error::DegenerateInterval { samples: len, needed: 2 });
    }

    let mut sup_value: f64 = 0.0;
    let mut integral = 0.0;
    for step in 0..=len {
        let hi = norm_p((start..start + len).map(|x| difference(&values, x, step, k + 1)), p);
        sup_value = sup_value.max(hi);
        let first = norm_p((start..start + len).map(|x| difference(&values, x, step, 1)), p);
        let weight = if step == 0 || step == len { 0.5 } else { 1.0 };
        integral += weight * first.powf(p);
    }
    let avg_value = (integral / len as f64).powf(1.0 / p);
    Ok(DifferenceReport { sup_value, avg_value, interval })
}

/// Sample window of `G_alpha(y, delta)`: first index and step in samples.
fn g_window(grid: Grid, y: f64, delta: f64, k: usize) -> Result<(usize, usize)> {
    let h = grid.spacing();
    let start = ((y - Grid::ORIGIN) / h).round();
    let step = (delta / h).round();
    if start < 0.0 || step < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "G_alpha window y={y}, delta={delta} is not resolved on the grid"
        )));
    }
    let (start, step) = (start as usize, step as usize);
    if start + (k + 2) * step > grid.n_points() {
        return Err(Error::InvalidParameter(format!(
            "[y, y + (k+2) delta] leaves the domain for y={y}, delta={delta}, k={k}"
        )));
    }
    Ok((start, step))
}

/// Average of `|Delta_delta^{k+1} f(x)|^{-1/alpha}` over samples `x` in
/// `[y, y + delta)`, with `y` and `delta` snapped to the grid.
pub fn g_alpha(f: &GridField, y: f64, delta: f64, k: usize, alpha: f64) -> Result<Extended> {
    if alpha <= 0.0 {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    let values = f.real_values()?;
    let (start, step) = g_window(f.grid(), y, delta, k)?;
    g_alpha_samples(&values, start, step, k, alpha)
}

fn g_alpha_samples(
    values: &[f64],
    start: usize,
    step: usize,
    k: usize,
    alpha: f64,
) -> Result<Extended> {
    let mut acc = 0.0;
    for x in start..start + step {
        let d = difference(values, x, step, k + 1).abs();
        if d < 1e-300 {
            return Ok(Extended::Infinite);
        }
        acc += d.powf(-1.0 / alpha);
    }
    Ok(Extended::Finite(acc / step as f64))
}

/// Anchors `(n, m)` entering `K` at this resolution, `1 <= m < 2^n`, with
/// `delta_n = pi / 2^{n+1}` spanning at least eight samples.
pub fn k_anchors(grid: Grid, k: usize, max_n: usize) -> Result<Vec<(usize, usize)>> {
    let n_points = grid.n_points();
    let mut out = Vec::new();
    for n in 0..=max_n {
        let step = n_points >> (n + 2);
        if step < MIN_SAMPLES || (step << (n + 2)) != n_points {
            return Err(Error::InvalidParameter(format!(
                "delta_n at n={n} spans fewer than {MIN_SAMPLES} samples"
            )));
        }
        let cell = n_points >> n;
        for m in 1..(1usize << n) {
            if m * cell + (k + 2) * step <= n_points {
                out.push((n, m));
            }
        }
    }
    Ok(out)
}

/// `sup_{n <= max_n, m} 2^{-lambda n} G_alpha(y_{n,m}, delta_n, k, f)`.
pub fn k_index(f: &GridField, alpha: f64, lambda: f64, k: usize, max_n: usize) -> Result<Extended> {
    if alpha <= 0.0 {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    let values = f.real_values()?;
    let grid = f.grid();
    let mut best = Extended::Finite(0.0);
    for (n, m) in k_anchors(grid, k, max_n)? {
        let start = m * (grid.n_points() >> n);
        let step = grid.n_points() >> (n + 2);
        debug_assert!((grid.coordinate(start) - (-PI + 2.0 * PI * m as f64 / (1u64 << n) as f64)).abs() < 1e-9);
        match g_alpha_samples(&values, start, step, k, alpha)? {
            Extended::Infinite => return Ok(Extended::Infinite),
            Extended::Finite(g) => best = best.max(Extended::Finite(2f64.powf(-lambda * n as f64) * g)),
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Grid {
        Grid::new(n).unwrap()
    }

    #[test]
    fn differences_of_constants_and_lines() {
        let g = grid(256);
        let j = IntervalRef::Span { start: 10, len: 40 };
        let c = GridField::from_fn(g, |_| 2.0);
        let r = lambda_differences(&c, j, 1, 2.0).unwrap();
        assert_eq!((r.sup_value, r.avg_value), (0.0, 0.0));

        let line = GridField::from_fn(g, |y| 3.0 * y - 1.0);
        let len = 40.0 * g.spacing();
        for p in [1.0, 2.0] {
            let r = lambda_differences(&line, j, 0, p).unwrap();
            // Delta_h f = 3h, so the sup is 3|J| and the average 3|J|(p+1)^{-1/p}
            assert!((r.sup_value - 3.0 * len).abs() < 1e-10);
            let want = 3.0 * len * (1.0 / (p + 1.0)).powf(1.0 / p);
            assert!((r.avg_value - want).abs() < 2e-3 * want, "{p} {} {want}", r.avg_value);
        }
        assert!(lambda_differences(&line, j, 1, 2.0).unwrap().sup_value < 1e-10);
    }

    #[test]
    fn intervals_near_the_end_are_shrunk() {
        let g = grid(64);
        let f = GridField::from_fn(g, f64::sin);
        let r = lambda_differences(&f, IntervalRef::Span { start: 40, len: 24 }, 1, 2.0).unwrap();
        assert_eq!(r.interval, IntervalRef::Span { start: 40, len: 8 });
        assert!(lambda_differences(&f, IntervalRef::Span { start: 60, len: 4 }, 1, 2.0).is_err());
    }

    #[test]
    fn g_alpha_of_a_line() {
        let g = grid(512);
        let f = GridField::from_fn(g, |y| y);
        let delta = 16.0 * g.spacing();
        let v = g_alpha(&f, -1.0, delta, 0, 0.5).unwrap().finite().unwrap();
        assert!((v - delta.powf(-2.0)).abs() < 1e-9 * v);
        assert_eq!(g_alpha(&f, -1.0, delta, 1, 0.5).unwrap(), Extended::Infinite);
        assert!(g_alpha(&f, 3.0, delta, 1, 0.5).is_err());
    }

    #[test]
    fn k_index_anchor_set_and_infinity() {
        let g = grid(256);
        // n <= 3 keeps delta_n at >= 8 samples
        assert!(k_anchors(g, 1, 4).is_err());
        let anchors = k_anchors(g, 1, 3).unwrap();
        assert!(anchors.iter().all(|&(n, m)| m >= 1 && m < (1 << n)));
        let affine = GridField::from_fn(g, |y| 2.0 * y + 1.0);
        assert_eq!(k_index(&affine, 1.6, 2.0, 1, 3).unwrap(), Extended::Infinite);
        let s = GridField::from_fn(g, |y| (5.0 * y).sin() + y * y);
        let a = k_index(&s, 1.6, 1.0, 1, 3).unwrap().finite().unwrap();
        let b = k_index(&s, 1.6, 2.0, 1, 3).unwrap().finite().unwrap();
        assert!(b <= a);
    }
}
