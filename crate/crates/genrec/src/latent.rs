//! The latent-code matrix and its constraint projections: hard rank
//! truncation, affine (mean + principal directions) linearization, grouped
//! per-sequence linearization, and linear interpolation between codes.

use crate::error::{Error, Result};
use crate::linalg::{svd_thin, SvdResult};
use crate::rng::SeededRng;
use crate::tensor::Tensor;

/// k×T matrix whose column `t` is the latent code of frame `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentMatrix {
    codes: Tensor,
}

impl LatentMatrix {
    pub fn new(codes: Tensor) -> Result<Self> {
        if codes.shape().len() != 2 {
            return Err(Error::shape("latent matrix must be 2-D".to_string()));
        }
        codes.check_finite("latent matrix")?;
        Ok(LatentMatrix { codes })
    }

    pub fn zeros(latent_dim: usize, frames: usize) -> Self {
        LatentMatrix {
            codes: Tensor::zeros(&[latent_dim, frames]),
        }
    }

    /// i.i.d. standard normal entries.
    pub fn random_normal(latent_dim: usize, frames: usize, rng: &mut SeededRng) -> Self {
        let mut m = LatentMatrix::zeros(latent_dim, frames);
        for x in m.codes.as_mut_slice() {
            *x = rng.next_normal();
        }
        m
    }

    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::invalid("latent matrix needs at least one column"));
        }
        let k = columns[0].len();
        if columns.iter().any(|c| c.len() != k) {
            return Err(Error::shape("latent columns must share one length".to_string()));
        }
        let mut m = LatentMatrix::zeros(k, columns.len());
        for (t, col) in columns.iter().enumerate() {
            m.set_column(t, col);
        }
        m.codes.check_finite("latent matrix")?;
        Ok(m)
    }

    pub fn latent_dim(&self) -> usize {
        self.codes.shape()[0]
    }

    pub fn frame_count(&self) -> usize {
        self.codes.shape()[1]
    }

    pub fn column(&self, t: usize) -> Vec<f64> {
        (0..self.latent_dim()).map(|i| self.codes.at(i, t)).collect()
    }

    pub fn set_column(&mut self, t: usize, values: &[f64]) {
        assert_eq!(values.len(), self.latent_dim());
        for (i, &v) in values.iter().enumerate() {
            *self.codes.at_mut(i, t) = v;
        }
    }

    pub fn as_tensor(&self) -> &Tensor {
        &self.codes
    }

    pub fn as_tensor_mut(&mut self) -> &mut Tensor {
        &mut self.codes
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.codes.frobenius_norm()
    }

    /// Columns `range.0 .. range.1` as their own matrix.
    fn slice_columns(&self, start: usize, end: usize) -> LatentMatrix {
        let k = self.latent_dim();
        let mut out = LatentMatrix::zeros(k, end - start);
        for t in start..end {
            for i in 0..k {
                *out.codes.at_mut(i, t - start) = self.codes.at(i, t);
            }
        }
        out
    }

    fn write_columns(&mut self, start: usize, block: &LatentMatrix) {
        for t in 0..block.frame_count() {
            for i in 0..self.latent_dim() {
                *self.codes.at_mut(i, start + t) = block.codes.at(i, t);
            }
        }
    }
}

/// Affine basis for a latent matrix: `z_t ≈ mean + Σ_j coeff[j][t] · dir_j`.
///
/// The pure rank-r factorization has a zero mean; the linearized forms carry
/// the column mean.
#[derive(Debug, Clone)]
pub struct LatentBasis {
    pub mean: Vec<f64>,
    /// Orthonormal directions, each of latent length.
    pub directions: Vec<Vec<f64>>,
    /// One T-length coefficient sequence per direction.
    pub coefficients: Vec<Vec<f64>>,
    /// Number of frames the basis describes.
    pub frames: usize,
}

impl LatentBasis {
    /// Rebuilds the latent matrix this basis describes.
    pub fn reconstruct(&self) -> LatentMatrix {
        let k = self.mean.len();
        let mut m = LatentMatrix::zeros(k, self.frames);
        for col in 0..self.frames {
            for row in 0..k {
                let mut v = self.mean[row];
                for (dir, coeff) in self.directions.iter().zip(&self.coefficients) {
                    v += coeff[col] * dir[row];
                }
                *m.codes.at_mut(row, col) = v;
            }
        }
        m
    }

    /// True when the coefficients along direction `j` are strictly monotone,
    /// a cheap diagnostic for whether a sequence keeps its temporal order in
    /// the embedding.
    pub fn coefficients_monotonic(&self, j: usize) -> bool {
        let vals = &self.coefficients[j];
        if vals.len() < 2 {
            return true;
        }
        vals.windows(2).all(|w| w[1] > w[0]) || vals.windows(2).all(|w| w[1] < w[0])
    }

    /// CSV dump: one `mean` row, one row per direction, one row per
    /// coefficient sequence.
    pub fn to_csv(&self) -> String {
        let fmt = |vals: &[f64]| {
            vals.iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let mut out = String::from("kind,index,components\n");
        out.push_str(&format!("mean,0,{}\n", fmt(&self.mean)));
        for (j, d) in self.directions.iter().enumerate() {
            out.push_str(&format!("direction,{j},{}\n", fmt(d)));
        }
        for (j, row) in self.coefficients.iter().enumerate() {
            out.push_str(&format!("coeff,{j},{}\n", fmt(row)));
        }
        out
    }
}

/// Best Frobenius rank-`r` approximation via SVD truncation, with the basis
/// (top-r left singular vectors and their scaled coefficients).
pub fn project_rank(z: &LatentMatrix, r: usize) -> Result<(LatentMatrix, LatentBasis)> {
    let p = z.latent_dim().min(z.frame_count());
    if r < 1 || r > p {
        return Err(Error::invalid(format!("rank {r} outside 1..={p}")));
    }
    let svd = svd_thin(z.as_tensor())?;
    let truncated = svd.truncated(r);
    let projected = LatentMatrix::new(truncated.reconstruct())?;
    Ok((projected, basis_from_svd(&truncated, z.latent_dim())))
}

fn basis_from_svd(svd: &SvdResult, latent_dim: usize) -> LatentBasis {
    let r = svd.singular_values.len();
    let t = svd.right.rows();
    let directions: Vec<Vec<f64>> = (0..r)
        .map(|j| (0..latent_dim).map(|i| svd.left.at(i, j)).collect())
        .collect();
    let coefficients: Vec<Vec<f64>> = (0..r)
        .map(|j| {
            (0..t)
                .map(|col| svd.singular_values[j] * svd.right.at(col, j))
                .collect()
        })
        .collect();
    LatentBasis {
        mean: vec![0.0; latent_dim],
        directions,
        coefficients,
        frames: t,
    }
}

/// Replaces every column by the column mean plus its deviation projected
/// onto the top-`d` principal directions of the centered matrix. `d = 1`
/// forces all codes onto a line; `d = 2` onto a plane.
pub fn project_affine(z: &LatentMatrix, d: usize) -> Result<(LatentMatrix, LatentBasis)> {
    let k = z.latent_dim();
    let t = z.frame_count();
    let d_max = k.min(t.saturating_sub(1));
    if d > d_max {
        return Err(Error::invalid(format!("affine dimension {d} outside 0..={d_max}")));
    }

    let mut mean = vec![0.0; k];
    for row in 0..k {
        let mut s = 0.0;
        for col in 0..t {
            s += z.codes.at(row, col);
        }
        mean[row] = s / t as f64;
    }
    let mut centered = Tensor::zeros(&[k, t]);
    for row in 0..k {
        for col in 0..t {
            *centered.at_mut(row, col) = z.codes.at(row, col) - mean[row];
        }
    }

    let (directions, coefficients) = if d == 0 {
        (Vec::new(), Vec::new())
    } else {
        let svd = svd_thin(&centered)?.truncated(d);
        let directions: Vec<Vec<f64>> = (0..d)
            .map(|j| (0..k).map(|i| svd.left.at(i, j)).collect())
            .collect();
        // Coefficients are the projections of each centered column.
        let coefficients: Vec<Vec<f64>> = directions
            .iter()
            .map(|dir| {
                (0..t)
                    .map(|col| (0..k).map(|row| dir[row] * centered.at(row, col)).sum())
                    .collect()
            })
            .collect();
        (directions, coefficients)
    };

    let basis = LatentBasis {
        mean,
        directions,
        coefficients,
        frames: t,
    };
    Ok((basis.reconstruct(), basis))
}

/// Whole-matrix rank truncation followed by an independent affine projection
/// inside each contiguous group of columns, the multi-sequence linearization
/// schedule.
pub fn project_affine_grouped(
    z: &LatentMatrix,
    group_sizes: &[usize],
    d_global: usize,
    d_per_group: usize,
) -> Result<LatentMatrix> {
    let total: usize = group_sizes.iter().sum();
    if group_sizes.is_empty() || group_sizes.iter().any(|&g| g == 0) || total != z.frame_count() {
        return Err(Error::invalid(format!(
            "group sizes {group_sizes:?} do not partition {} columns",
            z.frame_count()
        )));
    }
    let (mut projected, _) = project_rank(z, d_global)?;
    let mut start = 0;
    for &size in group_sizes {
        let block = projected.slice_columns(start, start + size);
        let (block_proj, _) = project_affine(&block, d_per_group)?;
        projected.write_columns(start, &block_proj);
        start += size;
    }
    Ok(projected)
}

/// Linear interpolation `(1−s)·a + s·b`; `s` must stay inside [0, 1].
pub fn interpolate(z_a: &[f64], z_b: &[f64], s: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::invalid(format!("interpolation parameter {s} outside [0, 1]")));
    }
    Ok(lerp(z_a, z_b, s))
}

/// Interpolation without the range check, for callers that deliberately
/// extrapolate beyond the endpoints.
pub fn interpolate_extrapolating(z_a: &[f64], z_b: &[f64], s: f64) -> Vec<f64> {
    lerp(z_a, z_b, s)
}

fn lerp(a: &[f64], b: &[f64], s: f64) -> Vec<f64> {
    assert_eq!(a.len(), b.len(), "interpolation endpoints must match");
    a.iter().zip(b).map(|(x, y)| (1.0 - s) * x + s * y).collect()
}

/// Largest distance from any column to the line through the column mean
/// along the first principal direction. Zero (to round-off) when the matrix
/// satisfies the line constraint.
pub fn max_distance_to_line(z: &LatentMatrix) -> Result<f64> {
    let (_, basis) = project_affine(z, 1)?;
    let k = z.latent_dim();
    let dir = &basis.directions[0];
    let mut worst = 0.0f64;
    for t in 0..z.frame_count() {
        let col = z.column(t);
        let mut along = 0.0;
        for i in 0..k {
            along += dir[i] * (col[i] - basis.mean[i]);
        }
        let mut dist_sq = 0.0;
        for i in 0..k {
            let resid = col[i] - basis.mean[i] - along * dir[i];
            dist_sq += resid * resid;
        }
        worst = worst.max(dist_sq.sqrt());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(k: usize, t: usize, data: Vec<f64>) -> LatentMatrix {
        LatentMatrix::new(Tensor::matrix(k, t, data).unwrap()).unwrap()
    }

    #[test]
    fn project_rank_full_rank_is_identity() {
        let z = matrix(3, 2, vec![1.0, 2.0, 0.5, -1.0, 3.0, 0.0]);
        let (p, _) = project_rank(&z, 2).unwrap();
        for (a, b) in p.as_tensor().as_slice().iter().zip(z.as_tensor().as_slice()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn project_rank_low_rank_input_unchanged() {
        // Rank-1 matrix: outer product.
        let u = [1.0, -2.0, 0.5];
        let v = [3.0, 1.0, 0.0, -1.0];
        let data: Vec<f64> = u.iter().flat_map(|a| v.iter().map(move |b| a * b)).collect();
        let z = matrix(3, 4, data);
        let (p, basis) = project_rank(&z, 1).unwrap();
        for (a, b) in p.as_tensor().as_slice().iter().zip(z.as_tensor().as_slice()) {
            assert!((a - b).abs() < 1e-10);
        }
        assert_eq!(basis.mean, vec![0.0; 3]);
        assert_eq!(basis.directions.len(), 1);
    }

    #[test]
    fn project_rank_rejects_bad_rank() {
        let z = matrix(3, 2, vec![0.0; 6]);
        assert!(project_rank(&z, 0).is_err());
        assert!(project_rank(&z, 3).is_err());
    }

    #[test]
    fn project_rank_is_idempotent() {
        let mut rng = SeededRng::new(21);
        let z = LatentMatrix::random_normal(6, 5, &mut rng);
        let (once, _) = project_rank(&z, 2).unwrap();
        let (twice, _) = project_rank(&once, 2).unwrap();
        for (a, b) in twice
            .as_tensor()
            .as_slice()
            .iter()
            .zip(once.as_tensor().as_slice())
        {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn affine_identical_columns_unchanged() {
        let col = vec![0.5, -1.0, 2.0];
        let z = LatentMatrix::from_columns(&[col.clone(), col.clone(), col.clone()]).unwrap();
        for d in 0..=1 {
            let (p, _) = project_affine(&z, d).unwrap();
            for (a, b) in p.as_tensor().as_slice().iter().zip(z.as_tensor().as_slice()) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn affine_collinear_columns_unchanged() {
        // Columns mean + alpha·u stay fixed under d = 1.
        let mean = [1.0, 2.0, -0.5, 0.0];
        let u = [0.5, -0.5, 0.5, 0.5]; // unit
        let alphas = [-2.0, -0.5, 1.0, 3.0, 4.0];
        let cols: Vec<Vec<f64>> = alphas
            .iter()
            .map(|a| mean.iter().zip(&u).map(|(m, d)| m + a * d).collect())
            .collect();
        let z = LatentMatrix::from_columns(&cols).unwrap();
        let (p, basis) = project_affine(&z, 1).unwrap();
        for (a, b) in p.as_tensor().as_slice().iter().zip(z.as_tensor().as_slice()) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(basis.coefficients_monotonic(0));
        assert!(max_distance_to_line(&p).unwrap() < 1e-10);
    }

    #[test]
    fn affine_d_zero_collapses_to_mean() {
        let z = matrix(2, 2, vec![1.0, 3.0, 0.0, 4.0]);
        let (p, _) = project_affine(&z, 0).unwrap();
        assert_eq!(p.column(0), vec![2.0, 2.0]);
        assert_eq!(p.column(1), vec![2.0, 2.0]);
    }

    #[test]
    fn grouped_single_group_matches_rank_then_affine() {
        let mut rng = SeededRng::new(31);
        let z = LatentMatrix::random_normal(5, 6, &mut rng);
        let grouped = project_affine_grouped(&z, &[6], 2, 1).unwrap();
        let (ranked, _) = project_rank(&z, 2).unwrap();
        let (expect, _) = project_affine(&ranked, 1).unwrap();
        for (a, b) in grouped
            .as_tensor()
            .as_slice()
            .iter()
            .zip(expect.as_tensor().as_slice())
        {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn grouped_rejects_bad_partition() {
        let z = LatentMatrix::zeros(3, 5);
        assert!(project_affine_grouped(&z, &[2, 2], 1, 0).is_err());
        assert!(project_affine_grouped(&z, &[], 1, 0).is_err());
    }

    #[test]
    fn interpolate_endpoints_and_midpoint() {
        let a = vec![0.0, 0.0];
        let b = vec![2.0, 4.0];
        assert_eq!(interpolate(&a, &b, 0.0).unwrap(), a);
        assert_eq!(interpolate(&a, &b, 1.0).unwrap(), b);
        assert_eq!(interpolate(&a, &b, 0.5).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn interpolate_rejects_out_of_range() {
        let a = vec![0.0];
        let b = vec![1.0];
        assert!(interpolate(&a, &b, -0.1).is_err());
        assert!(interpolate(&a, &b, 1.1).is_err());
        assert_eq!(interpolate_extrapolating(&a, &b, 2.0), vec![2.0]);
    }

    #[test]
    fn basis_reconstruction_identity() {
        let mut rng = SeededRng::new(41);
        let z = LatentMatrix::random_normal(6, 8, &mut rng);
        let (p, basis) = project_affine(&z, 2).unwrap();
        let rebuilt = basis.reconstruct();
        for (a, b) in rebuilt
            .as_tensor()
            .as_slice()
            .iter()
            .zip(p.as_tensor().as_slice())
        {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn basis_csv_shape() {
        let z = matrix(2, 3, vec![1.0, 2.0, 3.0, 0.0, 0.0, 0.0]);
        let (_, basis) = project_affine(&z, 1).unwrap();
        let csv = basis.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "kind,index,components");
        assert!(lines[1].starts_with("mean,0,"));
        assert!(lines[2].starts_with("direction,0,"));
        assert!(lines[3].starts_with("coeff,0,"));
    }
}
