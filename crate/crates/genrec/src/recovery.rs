//! Recovery solvers: gradient descent on the measurement residual over the
//! latent codes, optionally jointly over the generator weights, with a
//! temporal-similarity penalty and per-epoch latent constraint projections.
//!
//! Each epoch runs in a fixed order: latent gradient step, constraint
//! projection of the latent matrix, then (in joint mode) a weight gradient
//! step computed at the updated codes. Restarts redraw the latent
//! initialization and keep the best final data loss.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::generator::{backward, backward_latent, forward, Gradients, Weights};
use crate::latent::{
    interpolate, project_affine, project_affine_grouped, project_rank, LatentBasis, LatentMatrix,
};
use crate::measurement::{measure_sequence, MeasurementOperator, MeasurementSet};
use crate::metrics::MetricsReport;
use crate::rng::SeededRng;
use crate::tensor::Tensor;

/// Frames processed per parallel batch; bounds the number of live
/// weight-gradient buffers.
const PARALLEL_BATCH: usize = 16;
/// Width of the stall-detection window, in epochs.
const STALL_WINDOW: usize = 50;

/// What the solver optimizes over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Latent codes only; the generator stays fixed.
    LatentOnly,
    /// Latent codes and generator weights together.
    Joint,
}

/// Per-epoch projection applied to the latent matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    None,
    /// Truncate to the best rank-r approximation.
    Rank(usize),
    /// Mean + top-d principal directions; d = 1 is the line constraint.
    Affine(usize),
    /// Whole-matrix rank truncation, then an affine projection inside each
    /// contiguous group of columns.
    Grouped {
        group_sizes: Vec<usize>,
        d_global: usize,
        d_per_group: usize,
    },
}

/// Everything that determines a solve. With the seed fixed, runs are
/// bitwise reproducible.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub mode: Mode,
    pub constraint: Constraint,
    /// λ in (0, 1]. Below 1 the data term is scaled by λ and the similarity
    /// penalty (1−λ)·Σ βₜ‖z_{t+1}−z_t‖² is added; exactly 1 disables the
    /// penalty entirely.
    pub similarity_lambda: f64,
    /// Per-pair weights βₜ, length T−1; `None` means all ones.
    pub similarity_beta: Option<Vec<f64>>,
    pub lr_latent: f64,
    pub lr_weights: f64,
    pub epochs: usize,
    /// Relative change of the 50-epoch windowed mean loss below which the
    /// solve stops early.
    pub tol: f64,
    pub seed: u64,
    /// 0-based frame indices excluded from the data term.
    pub holdout: Vec<usize>,
    pub restarts: usize,
    /// Evaluate per-frame passes in parallel (ordered reduction; results are
    /// bitwise identical to the serial path).
    pub parallel: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            mode: Mode::Joint,
            constraint: Constraint::None,
            similarity_lambda: 1.0,
            similarity_beta: None,
            lr_latent: 1.0,
            lr_weights: 0.01,
            epochs: 2000,
            tol: 1e-6,
            seed: 0,
            holdout: Vec::new(),
            restarts: 1,
            parallel: false,
        }
    }
}

impl SolverConfig {
    fn validate(&self, frame_count: usize) -> Result<()> {
        if !(self.similarity_lambda > 0.0 && self.similarity_lambda <= 1.0) {
            return Err(Error::invalid(format!(
                "similarity lambda {} outside (0, 1]",
                self.similarity_lambda
            )));
        }
        if self.lr_latent <= 0.0 || self.lr_weights <= 0.0 {
            return Err(Error::invalid("learning rates must be positive"));
        }
        if self.epochs == 0 || self.restarts == 0 {
            return Err(Error::invalid("epochs and restarts must be positive"));
        }
        if let Some(beta) = &self.similarity_beta {
            if beta.len() + 1 != frame_count {
                return Err(Error::invalid(format!(
                    "{} beta weights for {frame_count} frames",
                    beta.len()
                )));
            }
            if beta.iter().any(|b| !b.is_finite() || *b < 0.0) {
                return Err(Error::invalid("beta weights must be finite and ≥ 0"));
            }
        }
        let mut seen = vec![false; frame_count];
        for &h in &self.holdout {
            if h >= frame_count {
                return Err(Error::invalid(format!(
                    "holdout frame {h} outside 0..{frame_count}"
                )));
            }
            seen[h] = true;
        }
        if seen.iter().all(|&s| s) {
            return Err(Error::invalid("holdout excludes every frame"));
        }
        match &self.constraint {
            Constraint::Rank(r) => {
                if *r == 0 {
                    return Err(Error::invalid("rank constraint must be ≥ 1"));
                }
            }
            Constraint::Grouped { group_sizes, .. } => {
                let total: usize = group_sizes.iter().sum();
                if total != frame_count {
                    return Err(Error::invalid(format!(
                        "group sizes {group_sizes:?} do not partition {frame_count} frames"
                    )));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// Mutable solver state, visible to epoch observers.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub latents: LatentMatrix,
    pub weights: Weights,
    pub epoch: usize,
    pub residual_history: Vec<f64>,
}

/// Snapshot handed to a per-epoch observer after the epoch's updates.
pub struct EpochView<'a> {
    pub restart: usize,
    pub epoch: usize,
    /// Data loss recorded at the start of this epoch.
    pub data_loss: f64,
    pub latents: &'a LatentMatrix,
    pub weights: &'a Weights,
}

/// Output of a solve: reconstructed frames, the final codes and basis, the
/// final weights, and the loss trace of the winning restart.
#[derive(Debug, Clone)]
pub struct RecoveryResult {
    pub frames: Vec<Tensor>,
    pub latents: LatentMatrix,
    pub basis: Option<LatentBasis>,
    pub weights: Weights,
    pub residual_history: Vec<f64>,
    pub final_data_loss: f64,
    /// Filled by `with_metrics` when ground truth is available.
    pub metrics: Option<MetricsReport>,
}

impl RecoveryResult {
    /// Scores the reconstruction against ground-truth frames.
    pub fn with_metrics(mut self, truth: &[Tensor]) -> Result<Self> {
        self.metrics = Some(MetricsReport::compare(truth, &self.frames)?);
        Ok(self)
    }
}

/// One frame's forward/backward pass against its measurement.
fn frame_pass(
    weights: &Weights,
    code: &[f64],
    op: &MeasurementOperator,
    y: &[f64],
    want_weight_grads: bool,
) -> Result<(f64, Gradients)> {
    let (image, tape) = forward(weights, code)?;
    let predicted = op.apply(image.as_slice())?;
    if predicted.len() != y.len() {
        return Err(Error::shape(format!(
            "measurement length {} vs operator output {}",
            y.len(),
            predicted.len()
        )));
    }
    let residual: Vec<f64> = predicted.iter().zip(y).map(|(p, m)| p - m).collect();
    let loss: f64 = residual.iter().map(|r| r * r).sum();
    let d_measurement: Vec<f64> = residual.iter().map(|r| 2.0 * r).collect();
    let d_image = Tensor::new(image.shape().to_vec(), op.adjoint(&d_measurement)?)?;
    let grads = if want_weight_grads {
        backward(weights, &tape, &d_image)?
    } else {
        backward_latent(weights, &tape, &d_image)?
    };
    Ok((loss, grads))
}

/// Runs per-frame passes over every observed frame, reducing in ascending
/// frame order regardless of parallelism.
fn sweep_frames(
    weights: &Weights,
    latents: &LatentMatrix,
    meas: &MeasurementSet,
    holdout: &[usize],
    want_weight_grads: bool,
    parallel: bool,
) -> Result<(f64, Tensor, Option<Gradients>)> {
    let t_count = latents.frame_count();
    if meas.frame_count() != t_count {
        return Err(Error::shape(format!(
            "{} measurements for {t_count} latent columns",
            meas.frame_count()
        )));
    }
    let observed: Vec<usize> = (0..t_count).filter(|t| !holdout.contains(t)).collect();

    let mut total_loss = 0.0;
    let mut d_latents = Tensor::zeros(&[latents.latent_dim(), t_count]);
    let mut weight_acc = want_weight_grads.then(|| Gradients::zeros(weights.arch()));

    let mut fold = |t: usize, loss: f64, grads: &Gradients| -> Result<()> {
        total_loss += loss;
        for (i, &g) in grads.d_z.iter().enumerate() {
            *d_latents.at_mut(i, t) = g;
        }
        if let Some(acc) = weight_acc.as_mut() {
            acc.accumulate(grads)?;
        }
        Ok(())
    };

    if parallel {
        for chunk in observed.chunks(PARALLEL_BATCH) {
            let results: Vec<(usize, f64, Gradients)> = chunk
                .par_iter()
                .map(|&t| {
                    let code = latents.column(t);
                    let (loss, grads) = frame_pass(
                        weights,
                        &code,
                        &meas.operators[t],
                        &meas.measurements[t],
                        want_weight_grads,
                    )?;
                    Ok((t, loss, grads))
                })
                .collect::<Result<Vec<_>>>()?;
            for (t, loss, grads) in &results {
                fold(*t, *loss, grads)?;
            }
        }
    } else {
        for &t in &observed {
            let code = latents.column(t);
            let (loss, grads) = frame_pass(
                weights,
                &code,
                &meas.operators[t],
                &meas.measurements[t],
                want_weight_grads,
            )?;
            fold(t, loss, &grads)?;
        }
    }

    Ok((total_loss, d_latents, weight_acc))
}

/// Data term Σ‖y_t − A_t·G(z_t)‖² over the observed frames, with its
/// gradients: one latent-gradient column per frame and the weight gradients
/// accumulated in ascending frame order.
pub fn data_loss_and_grads(
    weights: &Weights,
    latents: &LatentMatrix,
    meas: &MeasurementSet,
    holdout: &[usize],
) -> Result<(f64, Tensor, Gradients)> {
    let (loss, d_latents, weight_grads) =
        sweep_frames(weights, latents, meas, holdout, true, false)?;
    Ok((loss, d_latents, weight_grads.unwrap()))
}

/// Data loss alone, no gradients.
pub fn data_loss(
    weights: &Weights,
    latents: &LatentMatrix,
    meas: &MeasurementSet,
    holdout: &[usize],
) -> Result<f64> {
    let mut total = 0.0;
    for t in 0..latents.frame_count() {
        if holdout.contains(&t) {
            continue;
        }
        let (image, _) = forward(weights, &latents.column(t))?;
        let predicted = meas.operators[t].apply(image.as_slice())?;
        total += predicted
            .iter()
            .zip(&meas.measurements[t])
            .map(|(p, m)| (p - m) * (p - m))
            .sum::<f64>();
    }
    Ok(total)
}

/// Similarity penalty `(1−λ)·Σ βₜ‖z_{t+1}−z_t‖²` and its latent gradient.
pub fn similarity_grad(
    latents: &LatentMatrix,
    lambda: f64,
    beta: &[f64],
) -> Result<(f64, Tensor)> {
    let t_count = latents.frame_count();
    if t_count < 2 {
        return Err(Error::invalid("similarity penalty needs at least two frames"));
    }
    if beta.len() + 1 != t_count {
        return Err(Error::invalid(format!(
            "{} beta weights for {t_count} frames",
            beta.len()
        )));
    }
    let k = latents.latent_dim();
    let weight = 1.0 - lambda;
    let mut penalty = 0.0;
    let mut grad = Tensor::zeros(&[k, t_count]);
    for t in 0..t_count - 1 {
        let a = latents.column(t);
        let b = latents.column(t + 1);
        let mut norm_sq = 0.0;
        for i in 0..k {
            let diff = b[i] - a[i];
            norm_sq += diff * diff;
            // d/dz_t of β‖z_{t+1}−z_t‖² is −2β·diff; d/dz_{t+1} is +2β·diff.
            *grad.at_mut(i, t) += weight * 2.0 * beta[t] * -diff;
            *grad.at_mut(i, t + 1) += weight * 2.0 * beta[t] * diff;
        }
        penalty += beta[t] * norm_sq;
    }
    Ok((weight * penalty, grad))
}

fn apply_constraint(latents: &LatentMatrix, constraint: &Constraint) -> Result<LatentMatrix> {
    match constraint {
        Constraint::None => Ok(latents.clone()),
        Constraint::Rank(r) => Ok(project_rank(latents, *r)?.0),
        Constraint::Affine(d) => Ok(project_affine(latents, *d)?.0),
        Constraint::Grouped {
            group_sizes,
            d_global,
            d_per_group,
        } => project_affine_grouped(latents, group_sizes, *d_global, *d_per_group),
    }
}

fn stalled(history: &[f64], tol: f64) -> bool {
    if history.len() < 2 * STALL_WINDOW {
        return false;
    }
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let recent = mean(&history[history.len() - STALL_WINDOW..]);
    let previous = mean(&history[history.len() - 2 * STALL_WINDOW..history.len() - STALL_WINDOW]);
    (previous - recent).abs() / previous.abs().max(1e-300) < tol
}

/// Full solve per the configuration; see `run_observed` for the epoch hook.
pub fn run(
    config: &SolverConfig,
    meas: &MeasurementSet,
    init_weights: &Weights,
) -> Result<RecoveryResult> {
    run_observed(config, meas, init_weights, |_| {})
}

/// Like `run`, additionally invoking `observer` after every epoch's updates.
pub fn run_observed(
    config: &SolverConfig,
    meas: &MeasurementSet,
    init_weights: &Weights,
    mut observer: impl FnMut(&EpochView),
) -> Result<RecoveryResult> {
    let t_count = meas.frame_count();
    if t_count == 0 {
        return Err(Error::invalid("no measurements"));
    }
    config.validate(t_count)?;
    let k = init_weights.arch().latent_dim;
    let beta = config
        .similarity_beta
        .clone()
        .unwrap_or_else(|| vec![1.0; t_count.saturating_sub(1)]);
    let penalty_active = config.similarity_lambda < 1.0;

    let mut rng = SeededRng::new(config.seed);
    let mut best: Option<(f64, LatentMatrix, Weights, Vec<f64>)> = None;

    for restart in 0..config.restarts {
        let mut latents = LatentMatrix::random_normal(k, t_count, &mut rng);
        let mut weights = init_weights.clone();
        let mut history: Vec<f64> = Vec::with_capacity(config.epochs);

        for epoch in 0..config.epochs {
            // Numeric overflow anywhere inside an epoch is divergence.
            let diverged = |e: Error| match e {
                Error::NonFinite(_) => Error::Diverged { epoch },
                other => other,
            };
            // Latent gradients at the current weights.
            let (loss, mut d_latents, _) = sweep_frames(
                &weights,
                &latents,
                meas,
                &config.holdout,
                false,
                config.parallel,
            )
            .map_err(diverged)?;
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            history.push(loss);

            if penalty_active {
                // λ scales the data term; the penalty gradient rides along.
                for g in d_latents.as_mut_slice() {
                    *g *= config.similarity_lambda;
                }
                let (_, d_sim) = similarity_grad(&latents, config.similarity_lambda, &beta)?;
                d_latents.add_scaled(&d_sim, 1.0)?;
            }
            latents
                .as_tensor_mut()
                .add_scaled(&d_latents, -config.lr_latent)?;
            if latents.as_tensor().check_finite("latent step").is_err() {
                return Err(Error::Diverged { epoch });
            }

            latents = apply_constraint(&latents, &config.constraint)?;

            if config.mode == Mode::Joint {
                // Fresh gradients at the updated, projected codes.
                let (_, _, weight_grads) = sweep_frames(
                    &weights,
                    &latents,
                    meas,
                    &config.holdout,
                    true,
                    config.parallel,
                )
                .map_err(diverged)?;
                weights.step(&weight_grads.unwrap(), config.lr_weights)?;
                if weights.fc.check_finite("weight step").is_err() {
                    return Err(Error::Diverged { epoch });
                }
            }

            observer(&EpochView {
                restart,
                epoch,
                data_loss: loss,
                latents: &latents,
                weights: &weights,
            });

            if stalled(&history, config.tol) {
                break;
            }
        }

        let final_loss = data_loss(&weights, &latents, meas, &config.holdout)?;
        let better = match &best {
            None => true,
            Some((loss, ..)) => final_loss < *loss,
        };
        if better {
            best = Some((final_loss, latents, weights, history));
        }
    }

    let (final_data_loss, latents, weights, residual_history) = best.unwrap();
    let frames = (0..t_count)
        .map(|t| forward(&weights, &latents.column(t)).map(|(img, _)| img))
        .collect::<Result<Vec<_>>>()?;
    let basis = final_basis(&latents, &config.constraint)?;

    Ok(RecoveryResult {
        frames,
        latents,
        basis,
        weights,
        residual_history,
        final_data_loss,
        metrics: None,
    })
}

/// Basis describing the final codes under the configured constraint: the
/// rank basis for rank/grouped modes, the affine basis for affine mode.
fn final_basis(latents: &LatentMatrix, constraint: &Constraint) -> Result<Option<LatentBasis>> {
    Ok(match constraint {
        Constraint::None => None,
        Constraint::Rank(r) => Some(project_rank(latents, *r)?.1),
        Constraint::Affine(d) => Some(project_affine(latents, *d)?.1),
        Constraint::Grouped { d_global, .. } => Some(project_rank(latents, *d_global)?.1),
    })
}

/// Synthesizes held-out frames by interpolating the codes of the nearest
/// observed frames bracketing each gap, then running the generator.
/// Returns `(frame_index, image)` pairs; empty holdout yields nothing.
pub fn interpolate_holdout(
    result: &RecoveryResult,
    holdout: &[usize],
) -> Result<Vec<(usize, Tensor)>> {
    let t_count = result.latents.frame_count();
    let observed: Vec<usize> = (0..t_count).filter(|t| !holdout.contains(t)).collect();
    let mut out = Vec::with_capacity(holdout.len());
    for &h in holdout {
        let before = observed.iter().rev().find(|&&t| t < h);
        let after = observed.iter().find(|&&t| t > h);
        let (a, b) = match (before, after) {
            (Some(&a), Some(&b)) => (a, b),
            _ => return Err(Error::Extrapolation { frame: h }),
        };
        let s = (h - a) as f64 / (b - a) as f64;
        let code = interpolate(&result.latents.column(a), &result.latents.column(b), s)?;
        let (image, _) = forward(&result.weights, &code)?;
        out.push((h, image));
    }
    Ok(out)
}

/// Fits a fresh random generator to a training sequence by joint
/// optimization against identity measurements, the desk-scale stand-in for a
/// pretrained model.
pub fn prefit_generator(
    arch: &crate::generator::Architecture,
    frames: &[Tensor],
    epochs: usize,
    lr_latent: f64,
    lr_weights: f64,
    seed: u64,
) -> Result<Weights> {
    let n: usize = frames
        .first()
        .map(|f| f.len())
        .ok_or_else(|| Error::invalid("prefit needs at least one frame"))?;
    let ops = (0..frames.len())
        .map(|_| MeasurementOperator::identity(n))
        .collect();
    let mut rng = SeededRng::new(seed);
    let meas = measure_sequence(frames, ops, 0.0, &mut rng)?;
    let init = Weights::random(arch, &mut rng);
    let config = SolverConfig {
        mode: Mode::Joint,
        epochs,
        lr_latent,
        lr_weights,
        seed: seed ^ 0x5eed_0f17,
        ..SolverConfig::default()
    };
    Ok(run(&config, &meas, &init)?.weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::Architecture;

    fn planted_setup(
        t_count: usize,
        seed: u64,
    ) -> (Weights, LatentMatrix, MeasurementSet) {
        let arch = Architecture::tiny();
        let mut rng = SeededRng::new(seed);
        let weights = Weights::random(&arch, &mut rng);
        let latents = LatentMatrix::random_normal(arch.latent_dim, t_count, &mut rng);
        let frames: Vec<Tensor> = (0..t_count)
            .map(|t| forward(&weights, &latents.column(t)).unwrap().0)
            .collect();
        let n = frames[0].len();
        let ops = (0..t_count).map(|_| MeasurementOperator::identity(n)).collect();
        let meas = measure_sequence(&frames, ops, 0.0, &mut rng).unwrap();
        (weights, latents, meas)
    }

    #[test]
    fn planted_optimum_has_zero_loss_and_grads() {
        let (weights, latents, meas) = planted_setup(3, 1);
        let (loss, d_latents, w_grads) =
            data_loss_and_grads(&weights, &latents, &meas, &[]).unwrap();
        assert_eq!(loss, 0.0);
        assert!(d_latents.as_slice().iter().all(|&g| g == 0.0));
        assert!(w_grads.d_fc.as_slice().iter().all(|&g| g == 0.0));
        for k in &w_grads.d_kernels {
            assert!(k.as_slice().iter().all(|&g| g == 0.0));
        }
    }

    #[test]
    fn single_frame_identity_gradient_is_chain_rule() {
        // With A = I the latent gradient is the generator backward pass with
        // cotangent 2·(G(z) − y).
        let arch = Architecture::tiny();
        let mut rng = SeededRng::new(2);
        let weights = Weights::random(&arch, &mut rng);
        let z: Vec<f64> = (0..arch.latent_dim).map(|_| rng.next_normal()).collect();
        let target = Tensor::new(
            vec![1, 16, 16],
            (0..256).map(|_| 0.3 * rng.next_normal()).collect(),
        )
        .unwrap();
        let ops = vec![MeasurementOperator::identity(256)];
        let meas = measure_sequence(std::slice::from_ref(&target), ops, 0.0, &mut rng).unwrap();
        let latents = LatentMatrix::from_columns(&[z.clone()]).unwrap();

        let (_, d_latents, _) = data_loss_and_grads(&weights, &latents, &meas, &[]).unwrap();

        let (image, tape) = forward(&weights, &z).unwrap();
        let mut cotangent = Tensor::zeros(image.shape());
        for ((c, &g), &y) in cotangent
            .as_mut_slice()
            .iter_mut()
            .zip(image.as_slice())
            .zip(target.as_slice())
        {
            *c = 2.0 * (g - y);
        }
        let expect = backward(&weights, &tape, &cotangent).unwrap();
        for (i, &e) in expect.d_z.iter().enumerate() {
            assert_eq!(d_latents.at(i, 0), e);
        }
    }

    #[test]
    fn similarity_hand_case() {
        // T = 2, β = 1, λ = 0.5, z₁ = (0), z₂ = (2): penalty 2, dz = (−2, +2).
        let latents = LatentMatrix::from_columns(&[vec![0.0], vec![2.0]]).unwrap();
        let (penalty, grad) = similarity_grad(&latents, 0.5, &[1.0]).unwrap();
        assert_eq!(penalty, 2.0);
        assert_eq!(grad.at(0, 0), -2.0);
        assert_eq!(grad.at(0, 1), 2.0);
    }

    #[test]
    fn similarity_constant_sequence_is_zero() {
        let col = vec![1.0, -2.0, 0.5];
        let latents = LatentMatrix::from_columns(&[col.clone(), col.clone(), col]).unwrap();
        let (penalty, grad) = similarity_grad(&latents, 0.5, &[1.0, 1.0]).unwrap();
        assert_eq!(penalty, 0.0);
        assert!(grad.as_slice().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn similarity_needs_two_frames() {
        let latents = LatentMatrix::from_columns(&[vec![0.0]]).unwrap();
        assert!(similarity_grad(&latents, 0.5, &[]).is_err());
    }

    #[test]
    fn solver_reduces_planted_loss() {
        let (weights, _, meas) = planted_setup(4, 3);
        let config = SolverConfig {
            mode: Mode::LatentOnly,
            lr_latent: 0.05,
            epochs: 300,
            seed: 9,
            ..SolverConfig::default()
        };
        let result = run(&config, &meas, &weights).unwrap();
        let first = result.residual_history[0];
        assert!(
            result.final_data_loss < 0.05 * first,
            "{} vs initial {first}",
            result.final_data_loss
        );
    }

    #[test]
    fn parallel_matches_serial_bitwise() {
        let (weights, _, meas) = planted_setup(5, 4);
        let base = SolverConfig {
            mode: Mode::Joint,
            lr_latent: 0.02,
            lr_weights: 0.002,
            epochs: 20,
            seed: 5,
            ..SolverConfig::default()
        };
        let serial = run(&base, &meas, &weights).unwrap();
        let parallel = run(
            &SolverConfig {
                parallel: true,
                ..base
            },
            &meas,
            &weights,
        )
        .unwrap();
        assert_eq!(
            serial.latents.as_tensor().as_slice(),
            parallel.latents.as_tensor().as_slice()
        );
        assert_eq!(serial.weights.fc.as_slice(), parallel.weights.fc.as_slice());
        assert_eq!(serial.residual_history, parallel.residual_history);
    }

    #[test]
    fn diverged_solver_reports_epoch() {
        // The similarity gradient is linear in z, so an absurd step size
        // blows the codes past f64 range within two epochs.
        let (weights, _, meas) = planted_setup(3, 6);
        let config = SolverConfig {
            mode: Mode::Joint,
            similarity_lambda: 0.5,
            lr_latent: 1e160,
            lr_weights: 0.01,
            epochs: 50,
            seed: 7,
            ..SolverConfig::default()
        };
        match run(&config, &meas, &weights) {
            Err(Error::Diverged { epoch }) => assert!(epoch <= 2, "epoch {epoch}"),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn holdout_frames_are_excluded_from_loss() {
        let (weights, latents, meas) = planted_setup(4, 8);
        // Corrupt frame 2's measurement; holding it out must keep loss zero.
        let mut meas = meas;
        for v in meas.measurements[2].iter_mut() {
            *v += 10.0;
        }
        let loss_all = data_loss(&weights, &latents, &meas, &[]).unwrap();
        let loss_holdout = data_loss(&weights, &latents, &meas, &[2]).unwrap();
        assert!(loss_all > 1.0);
        assert_eq!(loss_holdout, 0.0);
    }

    #[test]
    fn interpolate_holdout_empty_is_noop() {
        let (weights, latents, meas) = planted_setup(3, 10);
        let config = SolverConfig {
            mode: Mode::LatentOnly,
            epochs: 1,
            lr_latent: 0.01,
            seed: 1,
            ..SolverConfig::default()
        };
        let result = run(&config, &meas, &weights).unwrap();
        let _ = latents;
        assert!(interpolate_holdout(&result, &[]).unwrap().is_empty());
    }

    #[test]
    fn interpolate_holdout_needs_bracketing() {
        let (weights, _, meas) = planted_setup(3, 11);
        let config = SolverConfig {
            mode: Mode::LatentOnly,
            epochs: 1,
            lr_latent: 0.01,
            seed: 2,
            holdout: vec![0],
            ..SolverConfig::default()
        };
        let result = run(&config, &meas, &weights).unwrap();
        match interpolate_holdout(&result, &[0]) {
            Err(Error::Extrapolation { frame: 0 }) => {}
            other => panic!("expected extrapolation error, got {other:?}"),
        }
    }

    #[test]
    fn interpolated_code_is_lerp_of_brackets() {
        let (weights, _, meas) = planted_setup(5, 12);
        let config = SolverConfig {
            mode: Mode::LatentOnly,
            epochs: 2,
            lr_latent: 0.01,
            seed: 3,
            holdout: vec![2],
            ..SolverConfig::default()
        };
        let result = run(&config, &meas, &weights).unwrap();
        let frames = interpolate_holdout(&result, &[2]).unwrap();
        assert_eq!(frames.len(), 1);
        assert_eq!(frames[0].0, 2);
        let code = interpolate(
            &result.latents.column(1),
            &result.latents.column(3),
            0.5,
        )
        .unwrap();
        let (expect, _) = forward(&result.weights, &code).unwrap();
        assert_eq!(frames[0].1.as_slice(), expect.as_slice());
    }

    #[test]
    fn rank_constraint_holds_after_every_epoch() {
        let (weights, _, meas) = planted_setup(6, 13);
        let config = SolverConfig {
            mode: Mode::LatentOnly,
            constraint: Constraint::Rank(2),
            lr_latent: 0.05,
            epochs: 30,
            seed: 4,
            ..SolverConfig::default()
        };
        let mut worst_ratio = 0.0f64;
        run_observed(&config, &meas, &weights, |view| {
            let svd = crate::linalg::svd_thin(view.latents.as_tensor()).unwrap();
            let s = &svd.singular_values;
            if s[0] > 0.0 {
                worst_ratio = worst_ratio.max(s[2] / s[0]);
            }
        })
        .unwrap();
        assert!(worst_ratio < 1e-10, "σ₃/σ₁ reached {worst_ratio}");
    }

    #[test]
    fn config_validation_rejects_bad_values() {
        let (weights, _, meas) = planted_setup(3, 14);
        for config in [
            SolverConfig {
                similarity_lambda: 0.0,
                ..SolverConfig::default()
            },
            SolverConfig {
                similarity_lambda: 1.5,
                ..SolverConfig::default()
            },
            SolverConfig {
                lr_latent: 0.0,
                ..SolverConfig::default()
            },
            SolverConfig {
                holdout: vec![7],
                ..SolverConfig::default()
            },
            SolverConfig {
                holdout: vec![0, 1, 2],
                ..SolverConfig::default()
            },
        ] {
            assert!(run(&config, &meas, &weights).is_err());
        }
    }
}
