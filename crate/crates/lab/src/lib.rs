//! File formats, argument parsing helpers and sweep reports behind the
//! `shear-lab` binary.

pub mod field_io;
pub mod report;
pub mod svg;

use anyhow::{anyhow, bail, Context, Result};

/// Environment variable holding the worker count for parallel commands.
pub const WORKERS_ENV: &str = "SHEAR_WORKERS";

/// Sizes the global rayon pool from [`WORKERS_ENV`] when it is set.
pub fn init_workers() -> Result<Option<usize>> {
    let Ok(raw) = std::env::var(WORKERS_ENV) else { return Ok(None) };
    let n: usize = raw.trim().parse().with_context(|| format!("{WORKERS_ENV}={raw:?} is not a count"))?;
    if n == 0 {
        bail!("{WORKERS_ENV} must be positive");
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(Some(n))
}

/// `a:b:n` for `n` log-spaced values from `a` to `b` inclusive, or a
/// comma-separated list.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let out = match parts.as_slice() {
        [a, b, n] => {
            let (a, b): (f64, f64) = (a.trim().parse()?, b.trim().parse()?);
            let n: usize = n.trim().parse()?;
            if !(a > 0.0 && b > 0.0) || n < 2 {
                bail!("log grid {s:?} needs positive endpoints and at least two points");
            }
            let (la, lb) = (a.ln(), b.ln());
            (0..n)
                .map(|i| if i == 0 { a } else if i == n - 1 { b } else { (la + (lb - la) * i as f64 / (n - 1) as f64).exp() })
                .collect()
        }
        [_] => s.split(',').map(|v| v.trim().parse::<f64>().map_err(|e| anyhow!("{v:?}: {e}"))).collect::<Result<_>>()?,
        _ => bail!("expected a:b:n or a comma list, got {s:?}"),
    };
    Ok(out)
}

/// Comma-separated floats of a fixed count, e.g. `s,p`.
pub fn parse_tuple<const N: usize>(s: &str) -> Result<[f64; N]> {
    let v: Vec<f64> = s.split(',').map(|v| v.trim().parse::<f64>()).collect::<std::result::Result<_, _>>()?;
    v.try_into().map_err(|v: Vec<f64>| anyhow!("expected {N} comma-separated numbers, got {}", v.len()))
}

/// `a..b` (inclusive) or a single depth `b`, which scans from the coarsest depth.
pub fn parse_depths(s: &str) -> Result<(usize, usize)> {
    match s.split_once("..") {
        Some((a, b)) => {
            let (a, b) = (a.trim().parse()?, b.trim().trim_start_matches('=').parse()?);
            if a > b {
                bail!("empty depth range {s:?}");
            }
            Ok((a, b))
        }
        None => Ok((0, s.trim().parse()?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_grid_hits_endpoints() {
        let g = parse_grid("1e-2:1e-5:4").unwrap();
        assert_eq!(g.len(), 4);
        assert_eq!(g[0], 1e-2);
        assert_eq!(g[3], 1e-5);
        assert!((g[1] - 1e-3).abs() < 1e-15);
        assert_eq!(parse_grid("1, 2.5,3").unwrap(), vec![1.0, 2.5, 3.0]);
        assert!(parse_grid("0:1:3").is_err());
        assert!(parse_grid("1:2").is_err());
    }

    #[test]
    fn tuples_and_depths() {
        assert_eq!(parse_tuple::<2>("-0.25,1").unwrap(), [-0.25, 1.0]);
        assert!(parse_tuple::<3>("1,2").is_err());
        assert_eq!(parse_depths("3..7").unwrap(), (3, 7));
        assert_eq!(parse_depths("3..=7").unwrap(), (3, 7));
        assert_eq!(parse_depths("6").unwrap(), (0, 6));
        assert!(parse_depths("7..3").is_err());
    }
}
