//! Thin SVD for small matrices via one-sided Jacobi rotations.
//!
//! Latent-code matrices are at most a few hundred entries on a side, so a
//! simple, robust method beats anything clever. Sweeps orthogonalize column
//! pairs until every pair is numerically orthogonal.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

const MAX_SWEEPS: usize = 100;
const OFF_DIAG_TOL: f64 = 1e-12;

/// Thin singular value decomposition `M = left · diag(s) · rightᵀ`.
///
/// For an input of shape `k×T` with `p = min(k, T)`: `left` is `k×p`,
/// `right` is `T×p`, both with orthonormal columns, and `singular_values`
/// holds `p` non-negative values in non-increasing order.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub left: Tensor,
    pub singular_values: Vec<f64>,
    pub right: Tensor,
}

impl SvdResult {
    /// `left · diag(s) · rightᵀ`, the (possibly truncated) product.
    pub fn reconstruct(&self) -> Tensor {
        let k = self.left.rows();
        let t = self.right.rows();
        let p = self.singular_values.len();
        let mut out = Tensor::zeros(&[k, t]);
        for j in 0..p {
            let s = self.singular_values[j];
            if s == 0.0 {
                continue;
            }
            for row in 0..k {
                let u = self.left.at(row, j) * s;
                if u == 0.0 {
                    continue;
                }
                for col in 0..t {
                    *out.at_mut(row, col) += u * self.right.at(col, j);
                }
            }
        }
        out
    }

    /// Keeps only the top `r` singular triplets.
    pub fn truncated(&self, r: usize) -> SvdResult {
        let r = r.min(self.singular_values.len());
        let k = self.left.rows();
        let t = self.right.rows();
        let mut left = Tensor::zeros(&[k, r]);
        let mut right = Tensor::zeros(&[t, r]);
        for j in 0..r {
            for row in 0..k {
                *left.at_mut(row, j) = self.left.at(row, j);
            }
            for row in 0..t {
                *right.at_mut(row, j) = self.right.at(row, j);
            }
        }
        SvdResult {
            left,
            singular_values: self.singular_values[..r].to_vec(),
            right,
        }
    }
}

/// Thin SVD of a 2-D tensor.
pub fn svd_thin(m: &Tensor) -> Result<SvdResult> {
    if m.shape().len() != 2 {
        return Err(Error::shape("svd_thin needs a 2-D tensor".to_string()));
    }
    m.check_finite("svd_thin input")?;
    let rows = m.rows();
    let cols = m.cols();

    // One-sided Jacobi wants at least as many rows as columns; otherwise
    // factor the transpose and swap the factors back.
    if rows >= cols {
        let (u, s, v) = jacobi_tall(to_columns(m), rows, cols)?;
        Ok(SvdResult {
            left: from_columns(&u, rows),
            singular_values: s,
            right: from_columns(&v, cols),
        })
    } else {
        let transposed = transpose(m);
        let (u, s, v) = jacobi_tall(to_columns(&transposed), cols, rows)?;
        Ok(SvdResult {
            left: from_columns(&v, rows),
            singular_values: s,
            right: from_columns(&u, cols),
        })
    }
}

fn transpose(m: &Tensor) -> Tensor {
    let (rows, cols) = (m.rows(), m.cols());
    let mut out = Tensor::zeros(&[cols, rows]);
    for i in 0..rows {
        for j in 0..cols {
            *out.at_mut(j, i) = m.at(i, j);
        }
    }
    out
}

fn to_columns(m: &Tensor) -> Vec<Vec<f64>> {
    let (rows, cols) = (m.rows(), m.cols());
    (0..cols)
        .map(|j| (0..rows).map(|i| m.at(i, j)).collect())
        .collect()
}

fn from_columns(cols: &[Vec<f64>], rows: usize) -> Tensor {
    let n = cols.len();
    let mut out = Tensor::zeros(&[rows, n]);
    for (j, col) in cols.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            *out.at_mut(i, j) = v;
        }
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// One-sided Jacobi on an m×n matrix with m ≥ n, given as n columns of
/// length m. Returns (U columns, singular values, V columns) with the
/// singular values sorted descending (stable under ties) and each left
/// vector's first nonzero component made positive.
fn jacobi_tall(
    mut b: Vec<Vec<f64>>,
    m: usize,
    n: usize,
) -> Result<(Vec<Vec<f64>>, Vec<f64>, Vec<Vec<f64>>)> {
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n.saturating_sub(1) {
            for j in (i + 1)..n {
                let aii = dot(&b[i], &b[i]);
                let ajj = dot(&b[j], &b[j]);
                let aij = dot(&b[i], &b[j]);
                if aii == 0.0 || ajj == 0.0 {
                    continue;
                }
                if aij.abs() <= OFF_DIAG_TOL * (aii * ajj).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (ajj - aii) / (2.0 * aij);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for row in 0..m {
                    let bi = b[i][row];
                    let bj = b[j][row];
                    b[i][row] = cs * bi - sn * bj;
                    b[j][row] = sn * bi + cs * bj;
                }
                for row in 0..n {
                    let vi = v[i][row];
                    let vj = v[j][row];
                    v[i][row] = cs * vi - sn * vj;
                    v[j][row] = sn * vi + cs * vj;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::SvdConvergence { sweeps: MAX_SWEEPS });
    }

    let mut singular: Vec<f64> = b.iter().map(|col| dot(col, col).sqrt()).collect();
    // Stable descending sort: ties keep first-computed order.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &c| singular[c].partial_cmp(&singular[a]).unwrap());
    let b: Vec<Vec<f64>> = order.iter().map(|&j| b[j].clone()).collect();
    let v: Vec<Vec<f64>> = order.iter().map(|&j| v[j].clone()).collect();
    singular = order.iter().map(|&j| singular[j]).collect();

    // Normalize left vectors; replace numerically-zero columns by an
    // orthonormal completion so the thin factor keeps full column count.
    let scale = singular.first().copied().unwrap_or(0.0);
    let zero_cut = scale * 1e-15;
    let mut u: Vec<Vec<f64>> = Vec::with_capacity(n);
    for (col, &s) in b.iter().zip(&singular) {
        if s > zero_cut && s > 0.0 {
            u.push(col.iter().map(|x| x / s).collect());
        } else {
            u.push(vec![0.0; m]); // placeholder, completed below
        }
    }
    for j in 0..n {
        if singular[j] <= zero_cut || singular[j] == 0.0 {
            singular[j] = 0.0;
            u[j] = complete_orthonormal(&u, j, m);
        }
    }

    // Deterministic sign: first nonzero component of each left vector positive.
    let mut v = v;
    for j in 0..n {
        if let Some(first) = u[j].iter().find(|x| **x != 0.0) {
            if *first < 0.0 {
                for x in u[j].iter_mut() {
                    *x = -*x;
                }
                for x in v[j].iter_mut() {
                    *x = -*x;
                }
            }
        }
    }

    Ok((u, singular, v))
}

/// First standard basis vector with a stable orthogonal remainder against
/// the accepted columns, Gram-Schmidt'd twice and normalized.
fn complete_orthonormal(cols: &[Vec<f64>], skip: usize, m: usize) -> Vec<f64> {
    for cand in 0..m {
        let mut w = vec![0.0; m];
        w[cand] = 1.0;
        for _ in 0..2 {
            for (j, col) in cols.iter().enumerate() {
                if j == skip || col.iter().all(|x| *x == 0.0) {
                    continue;
                }
                let proj = dot(&w, col);
                for (wi, ci) in w.iter_mut().zip(col) {
                    *wi -= proj * ci;
                }
            }
        }
        let norm = dot(&w, &w).sqrt();
        if norm > 0.5 {
            for x in w.iter_mut() {
                *x /= norm;
            }
            return w;
        }
    }
    unreachable!("orthonormal completion always finds a basis vector");
}
