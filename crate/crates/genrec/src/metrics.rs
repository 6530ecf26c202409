//! Reconstruction quality metrics.
//!
//! PSNR uses the reference image's own dynamic range (its max minus min),
//! not a fixed format range; implementations that assume 255 or 1.0 will not
//! match these numbers.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Mean squared error over all entries.
pub fn mse(x: &Tensor, x_hat: &Tensor) -> Result<f64> {
    if x.shape() != x_hat.shape() {
        return Err(Error::shape(format!(
            "mse over {:?} vs {:?}",
            x.shape(),
            x_hat.shape()
        )));
    }
    let n = x.len() as f64;
    Ok(x.as_slice()
        .iter()
        .zip(x_hat.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n)
}

/// `20·log10((max(x)−min(x)) / sqrt(MSE))`, with `x` the reference image.
///
/// A perfect reconstruction returns `+∞`; a constant reference with nonzero
/// error returns `−∞` to flag the degenerate range.
pub fn psnr(x: &Tensor, x_hat: &Tensor) -> Result<f64> {
    let err = mse(x, x_hat)?;
    let max = x.as_slice().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = x.as_slice().iter().cloned().fold(f64::INFINITY, f64::min);
    let range = max - min;
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    if range == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(20.0 * (range / err.sqrt()).log10())
}

/// Per-frame and aggregate quality of a reconstructed sequence.
#[derive(Debug, Clone)]
pub struct MetricsReport {
    pub per_frame_mse: Vec<f64>,
    pub per_frame_psnr: Vec<f64>,
    pub mean_psnr: f64,
}

impl MetricsReport {
    pub fn compare(truth: &[Tensor], reconstruction: &[Tensor]) -> Result<Self> {
        if truth.len() != reconstruction.len() {
            return Err(Error::shape(format!(
                "{} truth frames vs {} reconstructions",
                truth.len(),
                reconstruction.len()
            )));
        }
        if truth.is_empty() {
            return Err(Error::invalid("empty sequences have no metrics"));
        }
        let mut per_frame_mse = Vec::with_capacity(truth.len());
        let mut per_frame_psnr = Vec::with_capacity(truth.len());
        for (x, x_hat) in truth.iter().zip(reconstruction) {
            per_frame_mse.push(mse(x, x_hat)?);
            per_frame_psnr.push(psnr(x, x_hat)?);
        }
        let mean_psnr = per_frame_psnr.iter().sum::<f64>() / per_frame_psnr.len() as f64;
        Ok(MetricsReport {
            per_frame_mse,
            per_frame_psnr,
            mean_psnr,
        })
    }

    /// CSV rows `frame_index,mse,psnr` under a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("frame_index,mse,psnr\n");
        for (i, (m, p)) in self.per_frame_mse.iter().zip(&self.per_frame_psnr).enumerate() {
            out.push_str(&format!("{i},{m},{p}\n"));
        }
        out
    }
}
