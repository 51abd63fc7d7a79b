//! Bottom-up aggregates over the dyadic cells of the grid.
//!
//! Each cell keeps its mean, centred energy `(1/L) sum (f - mean)^2` and the
//! orthonormal moments `b_i = (1/L) sum q_i f`, `1 <= i <= k`. Children merge
//! into a parent exactly: the restriction of a parent basis polynomial to a
//! child lies in `P_k` there, so its moment is a fixed linear combination of
//! the child moments. Keeping centred quantities avoids the cancellation of
//! raw `sum f^2` against the squared mean.

use super::{DiscreteBasis, Projection};
use crate::error::{Error, Result};
use crate::fields::GridField;

#[derive(Debug, Clone)]
struct Level {
    len: usize,
    mean: Vec<f64>,
    var: Vec<f64>,
    /// `b[node * k + (i - 1)]`.
    b: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct DyadicMomentTree {
    k: usize,
    n_points: usize,
    levels: Vec<Level>,
}

impl DyadicMomentTree {
    /// Leaves sit at `max_depth`; every level up to the root is populated.
    pub fn build(f: &GridField, k: usize, max_depth: usize) -> Result<Self> {
        let values = f.real_values()?;
        let n = values.len();
        if max_depth >= usize::BITS as usize || (n >> max_depth) < k + 1 || (n >> max_depth) == 0 {
            return Err(Error::DegenerateInterval {
                samples: n.checked_shr(max_depth as u32).unwrap_or(0),
                needed: k + 1,
            });
        }
        let leaf_len = n >> max_depth;
        let leaf_basis = DiscreteBasis::new(k, leaf_len)?;
        let nodes = 1usize << max_depth;
        let mut leaf = Level {
            len: leaf_len,
            mean: Vec::with_capacity(nodes),
            var: Vec::with_capacity(nodes),
            b: Vec::with_capacity(nodes * k),
        };
        for chunk in values.chunks(leaf_len) {
            let p = Projection::from_samples(chunk, &leaf_basis);
            leaf.mean.push(p.mean);
            leaf.var.push(p.var);
            leaf.b.extend_from_slice(&p.b);
        }

        let mut levels = vec![leaf];
        let mut child_basis = leaf_basis;
        for _ in 0..max_depth {
            let child = levels.last().expect("non-empty");
            let parent_len = 2 * child.len;
            let parent_basis = DiscreteBasis::new(k, parent_len)?;
            let transfer = transfer_matrices(&parent_basis, &child_basis);
            let parent = merge(child, k, &transfer);
            levels.push(parent);
            child_basis = parent_basis;
        }
        levels.reverse();
        Ok(DyadicMomentTree { k, n_points: n, levels })
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn max_depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    /// Samples per cell at `depth`.
    pub fn cell_len(&self, depth: usize) -> usize {
        self.levels[depth].len
    }

    pub fn mean(&self, depth: usize, index: usize) -> f64 {
        self.levels[depth].mean[index]
    }

    /// Orthonormal moments `b_1..b_k` of a cell.
    pub fn moments(&self, depth: usize, index: usize) -> &[f64] {
        let k = self.k;
        &self.levels[depth].b[index * k..(index + 1) * k]
    }

    /// Squared averaged `L^2` distance to `P_j` on a cell, `j <= k`.
    pub fn deviation_sq(&self, depth: usize, index: usize, j: usize) -> f64 {
        self.projection(depth, index).deviation_sq(j.min(self.k))
    }

    pub(crate) fn projection(&self, depth: usize, index: usize) -> Projection {
        let level = &self.levels[depth];
        Projection {
            mean: level.mean[index],
            var: level.var[index],
            b: self.moments(depth, index).to_vec(),
        }
    }
}

/// `a[c][i][j] = (1/L_c) sum_{s in child c} q^P_i(s) q^c_j(s)`, zero for `j > i`.
fn transfer_matrices(parent: &DiscreteBasis, child: &DiscreteBasis) -> [Vec<f64>; 2] {
    let kk = parent.k + 1;
    let lc = child.len;
    let mut out = [vec![0.0; kk * kk], vec![0.0; kk * kk]];
    for (c, a) in out.iter_mut().enumerate() {
        for i in 0..kk {
            let prow = &parent.row(i)[c * lc..(c + 1) * lc];
            for j in 0..=i {
                a[i * kk + j] =
                    prow.iter().zip(child.row(j)).map(|(x, y)| x * y).sum::<f64>() / lc as f64;
            }
        }
    }
    out
}

fn merge(child: &Level, k: usize, a: &[Vec<f64>; 2]) -> Level {
    let kk = k + 1;
    let nodes = child.mean.len() / 2;
    let mut out = Level {
        len: child.len * 2,
        mean: Vec::with_capacity(nodes),
        var: Vec::with_capacity(nodes),
        b: Vec::with_capacity(nodes * k),
    };
    for node in 0..nodes {
        let (l, r) = (2 * node, 2 * node + 1);
        let (ml, mr) = (child.mean[l], child.mean[r]);
        let dm = ml - mr;
        out.mean.push(0.5 * (ml + mr));
        out.var.push(0.5 * (child.var[l] + child.var[r]) + 0.25 * dm * dm);
        let bl = &child.b[l * k..(l + 1) * k];
        let br = &child.b[r * k..(r + 1) * k];
        for i in 1..=k {
            // The constant parts of the two children cancel up to their difference.
            let mut acc = a[0][i * kk] * dm;
            for j in 1..=i {
                acc += a[0][i * kk + j] * bl[j - 1] + a[1][i * kk + j] * br[j - 1];
            }
            out.b.push(0.5 * acc);
        }
    }
    out
}
