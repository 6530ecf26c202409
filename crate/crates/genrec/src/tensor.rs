//! Dense row-major f64 tensors and the small-matrix products the rest of the
//! crate is built on.

use crate::error::{Error, Result};

/// Dense multi-dimensional array of f64, row-major.
///
/// Frames are stored as `[channels, height, width]`, matrices as
/// `[rows, cols]`, vectors as `[len]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    /// Builds a tensor, checking that `data` matches the shape product and is
    /// entirely finite.
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if shape.iter().any(|&d| d == 0) {
            return Err(Error::shape(format!("zero dimension in {shape:?}")));
        }
        if data.len() != expected {
            return Err(Error::shape(format!(
                "shape {shape:?} wants {expected} values, got {}",
                data.len()
            )));
        }
        let t = Tensor { shape, data };
        t.check_finite("Tensor::new")?;
        Ok(t)
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; len],
        }
    }

    /// 2-D constructor.
    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Tensor::new(vec![rows, cols], data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Number of rows; panics unless 2-D.
    pub fn rows(&self) -> usize {
        assert_eq!(self.shape.len(), 2, "rows() needs a 2-D tensor");
        self.shape[0]
    }

    /// Number of columns; panics unless 2-D.
    pub fn cols(&self) -> usize {
        assert_eq!(self.shape.len(), 2, "cols() needs a 2-D tensor");
        self.shape[1]
    }

    /// 2-D element access.
    #[inline]
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.shape[1] + col]
    }

    /// 2-D element access, mutable.
    #[inline]
    pub fn at_mut(&mut self, row: usize, col: usize) -> &mut f64 {
        &mut self.data[row * self.shape[1] + col]
    }

    /// 3-D element access for `[c, h, w]` tensors.
    #[inline]
    pub fn at3(&self, c: usize, row: usize, col: usize) -> f64 {
        self.data[(c * self.shape[1] + row) * self.shape[2] + col]
    }

    /// 3-D element access, mutable.
    #[inline]
    pub fn at3_mut(&mut self, c: usize, row: usize, col: usize) -> &mut f64 {
        &mut self.data[(c * self.shape[1] + row) * self.shape[2] + col]
    }

    /// Reinterprets the data under a new shape with the same element count.
    pub fn reshape(mut self, shape: Vec<usize>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != self.data.len() {
            return Err(Error::shape(format!(
                "cannot reshape {:?} ({} values) to {shape:?}",
                self.shape,
                self.data.len()
            )));
        }
        self.shape = shape;
        Ok(self)
    }

    /// `self += scale * other`, elementwise.
    pub fn add_scaled(&mut self, other: &Tensor, scale: f64) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::shape(format!(
                "add_scaled {:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
        Ok(())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn check_finite(&self, context: &'static str) -> Result<()> {
        if self.data.iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite(context))
        }
    }
}

/// Standard matrix product of two 2-D tensors.
pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    if a.shape().len() != 2 || b.shape().len() != 2 {
        return Err(Error::shape("matmul needs 2-D operands".to_string()));
    }
    let (m, ka) = (a.shape()[0], a.shape()[1]);
    let (kb, n) = (b.shape()[0], b.shape()[1]);
    if ka != kb {
        return Err(Error::shape(format!(
            "matmul inner dimensions disagree: {ka} vs {kb}"
        )));
    }
    let mut out = vec![0.0; m * n];
    // i-k-j order so the inner loop walks contiguous rows of b and out.
    for i in 0..m {
        let out_row = &mut out[i * n..(i + 1) * n];
        for k in 0..ka {
            let aik = a.as_slice()[i * ka + k];
            if aik == 0.0 {
                continue;
            }
            let b_row = &b.as_slice()[k * n..(k + 1) * n];
            for (o, &bv) in out_row.iter_mut().zip(b_row) {
                *o += aik * bv;
            }
        }
    }
    Tensor::matrix(m, n, out)
}

/// Matrix-vector product of a 2-D tensor with a dense vector.
pub fn matvec(a: &Tensor, x: &[f64]) -> Result<Vec<f64>> {
    if a.shape().len() != 2 {
        return Err(Error::shape("matvec needs a 2-D tensor".to_string()));
    }
    let (m, n) = (a.shape()[0], a.shape()[1]);
    if x.len() != n {
        return Err(Error::shape(format!(
            "matvec: {m}x{n} matrix against vector of length {}",
            x.len()
        )));
    }
    let mut out = vec![0.0; m];
    for (i, o) in out.iter_mut().enumerate() {
        let row = &a.as_slice()[i * n..(i + 1) * n];
        *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
    }
    Ok(out)
}

/// Transposed matrix-vector product `Aᵀ y`.
pub fn matvec_transpose(a: &Tensor, y: &[f64]) -> Result<Vec<f64>> {
    if a.shape().len() != 2 {
        return Err(Error::shape("matvec_transpose needs a 2-D tensor".to_string()));
    }
    let (m, n) = (a.shape()[0], a.shape()[1]);
    if y.len() != m {
        return Err(Error::shape(format!(
            "matvec_transpose: {m}x{n} matrix against vector of length {}",
            y.len()
        )));
    }
    let mut out = vec![0.0; n];
    for (i, &yi) in y.iter().enumerate() {
        if yi == 0.0 {
            continue;
        }
        let row = &a.as_slice()[i * n..(i + 1) * n];
        for (o, &av) in out.iter_mut().zip(row) {
            *o += av * yi;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn new_rejects_bad_length() {
        let err = Tensor::new(vec![2, 2], vec![1.0, 2.0, 3.0]);
        assert!(matches!(err, Err(Error::Shape(_))));
    }

    #[test]
    fn new_rejects_non_finite() {
        let err = Tensor::new(vec![2], vec![1.0, f64::NAN]);
        assert!(matches!(err, Err(Error::NonFinite(_))));
    }

    #[test]
    fn matmul_identity() {
        let eye = Tensor::matrix(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let m = Tensor::matrix(2, 2, vec![3.0, -1.0, 2.0, 5.0]).unwrap();
        assert_eq!(matmul(&eye, &m).unwrap(), m);
    }

    #[test]
    fn matmul_hand_sum() {
        // [[1,2],[3,4]] * [[1],[1]] = [[3],[7]]
        let a = Tensor::matrix(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = Tensor::matrix(2, 1, vec![1.0, 1.0]).unwrap();
        let c = matmul(&a, &b).unwrap();
        assert_eq!(c.as_slice(), &[3.0, 7.0]);
    }

    #[test]
    fn matmul_rejects_mismatch() {
        let a = Tensor::matrix(2, 3, vec![0.0; 6]).unwrap();
        let b = Tensor::matrix(2, 2, vec![0.0; 4]).unwrap();
        assert!(matches!(matmul(&a, &b), Err(Error::Shape(_))));
    }

    #[test]
    fn matvec_and_transpose_hand_case() {
        let a = Tensor::matrix(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(matvec(&a, &[1.0, 0.0, -1.0]).unwrap(), vec![-2.0, -2.0]);
        assert_eq!(
            matvec_transpose(&a, &[1.0, 1.0]).unwrap(),
            vec![5.0, 7.0, 9.0]
        );
    }

    #[test]
    fn add_scaled_accumulates() {
        let mut a = Tensor::zeros(&[3]);
        let b = Tensor::new(vec![3], vec![1.0, 2.0, 3.0]).unwrap();
        a.add_scaled(&b, -2.0).unwrap();
        assert_eq!(a.as_slice(), &[-2.0, -4.0, -6.0]);
    }
}
