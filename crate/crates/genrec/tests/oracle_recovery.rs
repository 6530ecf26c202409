//! Solver-level oracle checks: finite differences through the full
//! objective, monotone descent at small steps, and planted-recovery sanity.

mod common;

use genrec::generator::{forward, Architecture, Weights};
use genrec::latent::LatentMatrix;
use genrec::measurement::{measure_sequence, MeasurementOperator};
use genrec::recovery::{
    data_loss, data_loss_and_grads, run, similarity_grad, Mode, SolverConfig,
};
use genrec::{SeededRng, Tensor};

fn gaussian_scene(
    frames: usize,
    m: usize,
    seed: u64,
) -> (Weights, LatentMatrix, genrec::MeasurementSet) {
    let arch = Architecture::tiny();
    let mut rng = SeededRng::new(seed);
    let weights = Weights::random(&arch, &mut rng);
    let latents = LatentMatrix::random_normal(arch.latent_dim, frames, &mut rng);
    let n = 256;
    let targets: Vec<Tensor> = (0..frames)
        .map(|_| genrec::gaussian(&mut rng, &[1, 16, 16], 0.4).unwrap())
        .collect();
    let ops = (0..frames)
        .map(|_| MeasurementOperator::gaussian(m, n, &mut rng).unwrap())
        .collect();
    let meas = measure_sequence(&targets, ops, 0.0, &mut rng).unwrap();
    (weights, latents, meas)
}

#[test]
fn full_objective_gradient_matches_finite_differences() {
    let (weights, latents, meas) = gaussian_scene(3, 24, 501);
    let (_, d_latents, w_grads) = data_loss_and_grads(&weights, &latents, &meas, &[]).unwrap();

    let h = 1e-5;
    let mut rng = SeededRng::new(502);
    // Latent directions.
    for _ in 0..10 {
        let dir: Vec<f64> = (0..d_latents.len()).map(|_| rng.next_normal()).collect();
        let analytic: f64 = d_latents.as_slice().iter().zip(&dir).map(|(g, d)| g * d).sum();
        let eval = |s: f64| {
            let mut z = latents.clone();
            for (x, d) in z.as_tensor_mut().as_mut_slice().iter_mut().zip(&dir) {
                *x += s * h * d;
            }
            data_loss(&weights, &z, &meas, &[]).unwrap()
        };
        let numeric = (eval(1.0) - eval(-1.0)) / (2.0 * h);
        let rel = (analytic - numeric).abs() / numeric.abs().max(analytic.abs()).max(1e-8);
        assert!(rel < 1e-6, "latent rel {rel}");
    }
    // Weight directions over fc.
    for _ in 0..10 {
        let dir: Vec<f64> = (0..weights.fc.len()).map(|_| rng.next_normal()).collect();
        let analytic: f64 = w_grads.d_fc.as_slice().iter().zip(&dir).map(|(g, d)| g * d).sum();
        let eval = |s: f64| {
            let mut w = weights.clone();
            for (x, d) in w.fc.as_mut_slice().iter_mut().zip(&dir) {
                *x += s * h * d;
            }
            data_loss(&w, &latents, &meas, &[]).unwrap()
        };
        let numeric = (eval(1.0) - eval(-1.0)) / (2.0 * h);
        let rel = (analytic - numeric).abs() / numeric.abs().max(analytic.abs()).max(1e-8);
        assert!(rel < 1e-6, "fc rel {rel}");
    }
}

#[test]
fn similarity_gradient_matches_finite_differences() {
    let mut rng = SeededRng::new(503);
    let latents = LatentMatrix::random_normal(5, 7, &mut rng);
    let beta: Vec<f64> = (0..6).map(|_| 0.5 + rng.next_f64()).collect();
    let lambda = 0.37;
    let (_, grad) = similarity_grad(&latents, lambda, &beta).unwrap();

    let penalty_of = |z: &LatentMatrix| {
        let (p, _) = similarity_grad(z, lambda, &beta).unwrap();
        p
    };
    let h = 1e-6;
    for i in 0..latents.as_tensor().len() {
        let mut zp = latents.clone();
        let mut zm = latents.clone();
        zp.as_tensor_mut().as_mut_slice()[i] += h;
        zm.as_tensor_mut().as_mut_slice()[i] -= h;
        let numeric = (penalty_of(&zp) - penalty_of(&zm)) / (2.0 * h);
        let analytic = grad.as_slice()[i];
        assert!(
            (analytic - numeric).abs() < 1e-8 * numeric.abs().max(1.0),
            "coord {i}: {analytic} vs {numeric}"
        );
    }
}

#[test]
fn small_steps_never_increase_planted_loss_for_100_epochs() {
    // Planted instance: measurements realizable exactly, learning rates
    // 1e-3, no constraint. Full-batch descent must be monotone.
    let arch = Architecture::tiny();
    let mut rng = SeededRng::new(504);
    let weights = Weights::random(&arch, &mut rng);
    let truth = LatentMatrix::random_normal(arch.latent_dim, 4, &mut rng);
    let frames: Vec<Tensor> = (0..4)
        .map(|t| forward(&weights, &truth.column(t)).unwrap().0)
        .collect();
    let ops = (0..4)
        .map(|_| MeasurementOperator::gaussian(24, 256, &mut rng).unwrap())
        .collect();
    let meas = measure_sequence(&frames, ops, 0.0, &mut rng).unwrap();

    let config = SolverConfig {
        mode: Mode::Joint,
        lr_latent: 1e-3,
        lr_weights: 1e-3,
        epochs: 100,
        tol: 0.0,
        seed: 505,
        ..SolverConfig::default()
    };
    let result = run(&config, &meas, &weights).unwrap();
    for pair in result.residual_history.windows(2) {
        assert!(
            pair[1] <= pair[0] + 1e-12,
            "loss increased: {} -> {}",
            pair[0],
            pair[1]
        );
    }
}

#[test]
fn planted_latent_recovery_reaches_high_psnr() {
    // Smaller sibling of the acceptance run: identity-initialized weights,
    // latent-only descent on plenty of Gaussian measurements.
    let arch = Architecture::tiny();
    let mut rng = SeededRng::new(506);
    let weights = Weights::random(&arch, &mut rng);
    let truth = LatentMatrix::random_normal(arch.latent_dim, 4, &mut rng);
    let frames: Vec<Tensor> = (0..4)
        .map(|t| forward(&weights, &truth.column(t)).unwrap().0)
        .collect();
    let ops = (0..4)
        .map(|_| MeasurementOperator::gaussian(32, 256, &mut rng).unwrap())
        .collect();
    let meas = measure_sequence(&frames, ops, 0.0, &mut rng).unwrap();

    let config = SolverConfig {
        mode: Mode::LatentOnly,
        lr_latent: 0.05,
        epochs: 1500,
        restarts: 3,
        seed: 507,
        tol: 1e-12,
        ..SolverConfig::default()
    };
    let result = run(&config, &meas, &weights).unwrap().with_metrics(&frames).unwrap();
    let initial = result.residual_history[0];
    assert!(
        result.final_data_loss < 1e-4 * initial,
        "loss {} vs initial {initial}",
        result.final_data_loss
    );
    assert!(
        result.metrics.as_ref().unwrap().mean_psnr >= 40.0,
        "psnr {}",
        result.metrics.as_ref().unwrap().mean_psnr
    );
}

#[test]
fn latent_only_mode_is_plain_latent_code_objective() {
    // With constraint none and λ = 1 the epoch reduces to gradient descent
    // on Σ‖y − A·G(z)‖² alone: weights must never change.
    let (weights, _, meas) = gaussian_scene(3, 24, 508);
    let config = SolverConfig {
        mode: Mode::LatentOnly,
        lr_latent: 0.02,
        epochs: 25,
        seed: 509,
        ..SolverConfig::default()
    };
    let result = run(&config, &meas, &weights).unwrap();
    assert_eq!(result.weights.fc.as_slice(), weights.fc.as_slice());
    for (a, b) in result.weights.kernels.iter().zip(&weights.kernels) {
        assert_eq!(a.as_slice(), b.as_slice());
    }
}
