//! Linear measurement operators and their exact adjoints: identity, dense
//! Gaussian, and pixel masks, plus per-sequence measurement synthesis with
//! optional additive noise.

use crate::error::{Error, Result};
use crate::rng::{gaussian, SeededRng};
use crate::tensor::{matvec, matvec_transpose, Tensor};

/// The operator variants. Dense Gaussian entries are i.i.d. N(0, 1/m) so
/// measured energy stays commensurate with the signal.
#[derive(Debug, Clone)]
pub enum OperatorKind {
    Identity,
    GaussianDense {
        /// m×n dense matrix.
        matrix: Tensor,
    },
    PixelMask {
        /// Kept indices, strictly increasing, within [0, n).
        kept: Vec<usize>,
    },
}

/// One frame's linear measurement operator together with its ambient
/// (flattened frame) dimension.
#[derive(Debug, Clone)]
pub struct MeasurementOperator {
    kind: OperatorKind,
    n: usize,
}

impl MeasurementOperator {
    pub fn identity(n: usize) -> Self {
        MeasurementOperator {
            kind: OperatorKind::Identity,
            n,
        }
    }

    /// Dense m×n operator with entries drawn i.i.d. N(0, 1/m).
    pub fn gaussian(m: usize, n: usize, rng: &mut SeededRng) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::invalid("gaussian operator needs positive dimensions"));
        }
        let stddev = (1.0 / m as f64).sqrt();
        let matrix = gaussian(rng, &[m, n], stddev)?;
        Ok(MeasurementOperator {
            kind: OperatorKind::GaussianDense { matrix },
            n,
        })
    }

    /// Mask from an explicit kept-index list.
    pub fn mask(kept: Vec<usize>, n: usize) -> Result<Self> {
        if kept.is_empty() {
            return Err(Error::invalid("mask keeps no entries"));
        }
        if kept.windows(2).any(|w| w[0] >= w[1]) || *kept.last().unwrap() >= n {
            return Err(Error::invalid(
                "mask indices must be strictly increasing and within range",
            ));
        }
        Ok(MeasurementOperator {
            kind: OperatorKind::PixelMask { kept },
            n,
        })
    }

    pub fn kind(&self) -> &OperatorKind {
        &self.kind
    }

    /// Ambient (input) dimension.
    pub fn input_dim(&self) -> usize {
        self.n
    }

    /// Measurement (output) dimension.
    pub fn output_dim(&self) -> usize {
        match &self.kind {
            OperatorKind::Identity => self.n,
            OperatorKind::GaussianDense { matrix } => matrix.rows(),
            OperatorKind::PixelMask { kept } => kept.len(),
        }
    }

    /// `A·x`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(Error::shape(format!(
                "operator expects input length {}, got {}",
                self.n,
                x.len()
            )));
        }
        match &self.kind {
            OperatorKind::Identity => Ok(x.to_vec()),
            OperatorKind::GaussianDense { matrix } => matvec(matrix, x),
            OperatorKind::PixelMask { kept } => Ok(kept.iter().map(|&i| x[i]).collect()),
        }
    }

    /// `Aᵀ·y`, the exact transpose action.
    pub fn adjoint(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.output_dim() {
            return Err(Error::shape(format!(
                "adjoint expects input length {}, got {}",
                self.output_dim(),
                y.len()
            )));
        }
        match &self.kind {
            OperatorKind::Identity => Ok(y.to_vec()),
            OperatorKind::GaussianDense { matrix } => matvec_transpose(matrix, y),
            OperatorKind::PixelMask { kept } => {
                let mut out = vec![0.0; self.n];
                for (&i, &v) in kept.iter().zip(y) {
                    out[i] = v;
                }
                Ok(out)
            }
        }
    }
}

/// Random mask keeping exactly `round(p·n)` entries (half-up), sampled
/// uniformly without replacement.
pub fn make_mask(n: usize, keep_fraction: f64, rng: &mut SeededRng) -> Result<MeasurementOperator> {
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(Error::invalid(format!(
            "keep fraction {keep_fraction} outside (0, 1]"
        )));
    }
    let count = (keep_fraction * n as f64 + 0.5).floor() as usize;
    let count = count.clamp(1, n);
    let kept = rng.sample_without_replacement(n, count);
    MeasurementOperator::mask(kept, n)
}

/// A measured sequence: one operator and one measurement vector per frame.
#[derive(Debug, Clone)]
pub struct MeasurementSet {
    pub operators: Vec<MeasurementOperator>,
    pub measurements: Vec<Vec<f64>>,
    pub noise_std: f64,
}

impl MeasurementSet {
    pub fn frame_count(&self) -> usize {
        self.operators.len()
    }
}

/// Measures every frame: `y_t = A_t·x_t + e_t` with `e_t` i.i.d.
/// N(0, noise_std²). A zero noise level keeps the products exact.
pub fn measure_sequence(
    frames: &[Tensor],
    operators: Vec<MeasurementOperator>,
    noise_std: f64,
    rng: &mut SeededRng,
) -> Result<MeasurementSet> {
    if frames.len() != operators.len() {
        return Err(Error::shape(format!(
            "{} frames but {} operators",
            frames.len(),
            operators.len()
        )));
    }
    if noise_std < 0.0 || !noise_std.is_finite() {
        return Err(Error::invalid(format!("noise_std {noise_std} must be ≥ 0")));
    }
    let mut measurements = Vec::with_capacity(frames.len());
    for (frame, op) in frames.iter().zip(&operators) {
        if frame.len() != op.input_dim() {
            return Err(Error::shape(format!(
                "frame of {} values against operator over {}",
                frame.len(),
                op.input_dim()
            )));
        }
        let mut y = op.apply(frame.as_slice())?;
        if noise_std > 0.0 {
            for v in y.iter_mut() {
                *v += noise_std * rng.next_normal();
            }
        }
        measurements.push(y);
    }
    Ok(MeasurementSet {
        operators,
        measurements,
        noise_std,
    })
}
