//! Orthonormal polynomials on `[0, 1]` and their discrete counterparts on
//! midpoint samples `t_s = (s + 1/2) / L`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_DEGREE: usize = 8;

/// `Q_0, ..., Q_k`, orthonormal in `L^2(0, 1)`; `Q_i(x) = sqrt(2i+1) P_i(2x-1)`
/// with `P_i` the Legendre polynomial, which is what Gram-Schmidt on the
/// monomials produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthoPolyBasis {
    k: usize,
    /// `coeffs[i][j]` multiplies `x^j` in `Q_i`.
    coeffs: Vec<Vec<f64>>,
}

/// Integer monomial coefficients of the shifted Legendre polynomial of degree `i`.
pub fn shifted_legendre_integer_coeffs(i: usize) -> Vec<i128> {
    (0..=i)
        .map(|j| {
            let sign = if (i + j) % 2 == 0 { 1 } else { -1 };
            sign * binomial(i, j) * binomial(i + j, j)
        })
        .collect()
}

pub(crate) fn binomial(n: usize, k: usize) -> i128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: i128 = 1;
    for t in 0..k {
        acc = acc * (n - t) as i128 / (t + 1) as i128;
    }
    acc
}

pub fn ortho_basis(k: usize) -> Result<OrthoPolyBasis> {
    if k > MAX_DEGREE {
        return Err(Error::DegreeTooLarge(k));
    }
    let coeffs = (0..=k)
        .map(|i| {
            let norm = ((2 * i + 1) as f64).sqrt();
            shifted_legendre_integer_coeffs(i).into_iter().map(|c| c as f64 * norm).collect()
        })
        .collect();
    Ok(OrthoPolyBasis { k, coeffs })
}

impl OrthoPolyBasis {
    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn coeffs(&self, i: usize) -> &[f64] {
        &self.coeffs[i]
    }

    /// All `Q_i(x)`, `i <= k`, by the Legendre three-term recurrence.
    pub fn eval_all(&self, x: f64, out: &mut [f64]) {
        eval_legendre(self.k, x, out);
    }

    pub fn eval(&self, i: usize, x: f64) -> f64 {
        let mut buf = [0.0; MAX_DEGREE + 1];
        eval_legendre(i, x, &mut buf[..=i]);
        buf[i]
    }
}

fn eval_legendre(k: usize, x: f64, out: &mut [f64]) {
    let z = 2.0 * x - 1.0;
    let (mut p0, mut p1) = (1.0, z);
    for (n, slot) in out.iter_mut().enumerate().take(k + 1) {
        let p = match n {
            0 => 1.0,
            1 => z,
            _ => {
                let nf = n as f64;
                let p2 = ((2.0 * nf - 1.0) * z * p1 - (nf - 1.0) * p0) / nf;
                p0 = p1;
                p1 = p2;
                p2
            }
        };
        *slot = p * ((2 * n + 1) as f64).sqrt();
    }
}

/// Basis orthonormal for the averaged inner product `(1/L) sum_s f(t_s) g(t_s)`,
/// obtained from `Q_i` by Cholesky of their discrete Gram matrix.
#[derive(Debug, Clone)]
pub(crate) struct DiscreteBasis {
    pub k: usize,
    pub len: usize,
    /// `values[i * len + s] = q_i(t_s)`.
    pub values: Vec<f64>,
    /// Monomial coefficients of `q_i` in the local coordinate `t`.
    pub monomials: Vec<Vec<f64>>,
}

impl DiscreteBasis {
    pub fn new(k: usize, len: usize) -> Result<Self> {
        if k > MAX_DEGREE {
            return Err(Error::DegreeTooLarge(k));
        }
        if len < k + 1 {
            return Err(Error::DegenerateInterval { samples: len, needed: k + 1 });
        }
        let basis = ortho_basis(k)?;
        let kk = k + 1;
        let mut q = vec![0.0; kk * len];
        let mut row = vec![0.0; kk];
        for s in 0..len {
            basis.eval_all((s as f64 + 0.5) / len as f64, &mut row);
            for i in 0..kk {
                q[i * len + s] = row[i];
            }
        }
        let mut gram = vec![0.0; kk * kk];
        for i in 0..kk {
            for j in 0..=i {
                let g: f64 = (0..len).map(|s| q[i * len + s] * q[j * len + s]).sum::<f64>()
                    / len as f64;
                gram[i * kk + j] = g;
                gram[j * kk + i] = g;
            }
        }
        let chol = cholesky(&gram, kk)
            .ok_or(Error::DegenerateInterval { samples: len, needed: k + 1 })?;
        // q~ = C^{-1} Q with C lower triangular.
        let mut values = vec![0.0; kk * len];
        let mut monomials = vec![vec![0.0; kk]; kk];
        for i in 0..kk {
            let diag = chol[i * kk + i];
            for s in 0..len {
                let mut v = q[i * len + s];
                for j in 0..i {
                    v -= chol[i * kk + j] * values[j * len + s];
                }
                values[i * len + s] = v / diag;
            }
            let mut m: Vec<f64> = basis.coeffs(i).to_vec();
            m.resize(kk, 0.0);
            for j in 0..i {
                for (t, c) in m.iter_mut().enumerate() {
                    *c -= chol[i * kk + j] * monomials[j][t];
                }
            }
            monomials[i] = m.into_iter().map(|c| c / diag).collect();
        }
        Ok(DiscreteBasis { k, len, values, monomials })
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.len..(i + 1) * self.len]
    }
}

fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for t in 0..j {
                s -= l[i * n + t] * l[j * n + t];
            }
            if i == j {
                if s <= 0.0 {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gcd(a: i128, b: i128) -> i128 {
        if b == 0 {
            a.abs()
        } else {
            gcd(b, a % b)
        }
    }

    /// `int_0^1 P_i P_j` for the integer polynomials, as an exact fraction.
    fn exact_inner(i: usize, j: usize) -> (i128, i128) {
        let a = shifted_legendre_integer_coeffs(i);
        let b = shifted_legendre_integer_coeffs(j);
        let (mut num, mut den) = (0i128, 1i128);
        for (p, &ap) in a.iter().enumerate() {
            for (q, &bq) in b.iter().enumerate() {
                let d = (p + q + 1) as i128;
                num = num * d + ap * bq * den;
                den *= d;
                let g = gcd(num, den);
                num /= g;
                den /= g;
            }
        }
        (num, den)
    }

    #[test]
    fn integer_polynomials_are_exactly_orthogonal() {
        for i in 0..=MAX_DEGREE {
            for j in 0..=MAX_DEGREE {
                let (num, den) = exact_inner(i, j);
                if i == j {
                    // ||P_i||^2 = 1/(2i+1).
                    assert_eq!((num, den), (1, (2 * i + 1) as i128), "i={i}");
                } else {
                    assert_eq!(num, 0, "i={i} j={j}");
                }
            }
        }
    }

    #[test]
    fn gauss_legendre_orthonormality_of_recurrence() {
        // 12-point rule is exact up to degree 23 >= 2 * MAX_DEGREE.
        let nodes = gauss_legendre(12);
        let basis = ortho_basis(MAX_DEGREE).unwrap();
        let mut row = [0.0; MAX_DEGREE + 1];
        let mut gram = [[0.0; MAX_DEGREE + 1]; MAX_DEGREE + 1];
        for &(x, w) in &nodes {
            basis.eval_all(x, &mut row);
            for i in 0..=MAX_DEGREE {
                for j in 0..=MAX_DEGREE {
                    gram[i][j] += w * row[i] * row[j];
                }
            }
        }
        for i in 0..=MAX_DEGREE {
            for j in 0..=MAX_DEGREE {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((gram[i][j] - want).abs() < 1e-12, "{i} {j} {}", gram[i][j]);
            }
        }
    }

    fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
        // Newton on P_n, mapped to [0, 1].
        (0..n)
            .map(|i| {
                let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
                let mut dp = 0.0;
                for _ in 0..100 {
                    let (mut p0, mut p1) = (1.0, z);
                    for m in 2..=n {
                        let mf = m as f64;
                        let p2 = ((2.0 * mf - 1.0) * z * p1 - (mf - 1.0) * p0) / mf;
                        p0 = p1;
                        p1 = p2;
                    }
                    dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
                    let dz = p1 / dp;
                    z -= dz;
                    if dz.abs() < 1e-16 {
                        break;
                    }
                }
                let w = 2.0 / ((1.0 - z * z) * dp * dp);
                ((z + 1.0) / 2.0, w / 2.0)
            })
            .collect()
    }

    #[test]
    fn low_degree_closed_forms() {
        let b = ortho_basis(2).unwrap();
        assert_eq!(b.coeffs(0), &[1.0]);
        let s3 = 3f64.sqrt();
        assert!((b.coeffs(1)[0] + s3).abs() < 1e-15 && (b.coeffs(1)[1] - 2.0 * s3).abs() < 1e-15);
        let s5 = 5f64.sqrt();
        let want = [s5, -6.0 * s5, 6.0 * s5];
        for (c, w) in b.coeffs(2).iter().zip(want) {
            assert!((c - w).abs() < 1e-14);
        }
        assert!((b.eval(2, 0.3) - s5 * (6.0 * 0.09 - 1.8 + 1.0)).abs() < 1e-14);
    }

    #[test]
    fn degree_cap() {
        assert!(ortho_basis(9).is_err());
        assert!(ortho_basis(8).is_ok());
    }

    #[test]
    fn discrete_basis_is_orthonormal_on_samples() {
        for &(k, len) in &[(0, 8), (1, 8), (2, 8), (2, 64), (4, 33)] {
            let d = DiscreteBasis::new(k, len).unwrap();
            for i in 0..=k {
                for j in 0..=k {
                    let g: f64 =
                        d.row(i).iter().zip(d.row(j)).map(|(a, b)| a * b).sum::<f64>() / len as f64;
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((g - want).abs() < 1e-12);
                }
                // monomial form reproduces the sampled values
                for s in 0..len {
                    let t = (s as f64 + 0.5) / len as f64;
                    let v: f64 = d.monomials[i].iter().rev().fold(0.0, |acc, c| acc * t + c);
                    assert!((v - d.row(i)[s]).abs() < 1e-10);
                }
            }
        }
        assert!(DiscreteBasis::new(3, 3).is_err());
    }
}
