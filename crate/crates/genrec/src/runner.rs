//! End-to-end experiment orchestration: dataset loading or synthesis,
//! operator construction, weight initialization, the solve itself, and all
//! on-disk artifacts. The CLI and the runnable examples both drive this.

use std::path::PathBuf;

use crate::config::{DatasetSource, ExperimentConfig, InitSpec, MeasureSpec};
use crate::error::{Error, Result};
use crate::generator::{Architecture, Weights};
use crate::io;
use crate::measurement::{make_mask, measure_sequence, MeasurementOperator, MeasurementSet};
use crate::metrics::MetricsReport;
use crate::recovery::{
    interpolate_holdout, prefit_generator, run, RecoveryResult, SolverConfig,
};
use crate::rng::SeededRng;
use crate::synth::{generate, SequenceSpec};
use crate::tensor::Tensor;

/// A finished experiment: the solver output, the ground truth it was
/// measured from, and where the artifacts were written.
pub struct ExperimentOutput {
    pub result: RecoveryResult,
    pub truth: Vec<Tensor>,
    pub out_dir: PathBuf,
    /// Metrics of the interpolated hold-out frames, when any were produced.
    pub interpolated: Option<MetricsReport>,
}

/// Loads the configured dataset, generating it when synthetic.
pub fn load_frames(config: &ExperimentConfig) -> Result<Vec<Tensor>> {
    match &config.dataset {
        DatasetSource::Synth(spec) => Ok(generate(spec)?.frames),
        DatasetSource::Directory(dir) => io::read_sequence(dir),
    }
}

/// One operator per frame according to the measurement spec.
pub fn build_operators(
    config: &ExperimentConfig,
    n: usize,
    frames: usize,
    rng: &mut SeededRng,
) -> Result<Vec<MeasurementOperator>> {
    match &config.measure {
        MeasureSpec::Identity => Ok((0..frames).map(|_| MeasurementOperator::identity(n)).collect()),
        MeasureSpec::Gaussian { m } => (0..frames)
            .map(|_| MeasurementOperator::gaussian(*m, n, rng))
            .collect(),
        MeasureSpec::Mask { keep_fraction } => {
            if config.shared_mask {
                let mask = make_mask(n, *keep_fraction, rng)?;
                Ok(vec![mask; frames])
            } else {
                (0..frames).map(|_| make_mask(n, *keep_fraction, rng)).collect()
            }
        }
    }
}

/// Initial generator weights per the init spec. Prefit runs a joint
/// approximation fit on a synthetic training sequence derived from the
/// configured dataset (same kind and size, shifted seed).
pub fn initial_weights(
    config: &ExperimentConfig,
    arch: &Architecture,
    rng: &mut SeededRng,
) -> Result<Weights> {
    match &config.init {
        InitSpec::Random => Ok(Weights::random(arch, rng)),
        InitSpec::File(path) => {
            let weights = io::load_weights(path)?;
            if weights.arch() != arch {
                return Err(Error::invalid(format!(
                    "weights file architecture {:?} does not match preset '{}'",
                    weights.arch(),
                    config.preset
                )));
            }
            Ok(weights)
        }
        InitSpec::Prefit => {
            let mut spec = match &config.dataset {
                DatasetSource::Synth(spec) => spec.clone(),
                DatasetSource::Directory(_) => SequenceSpec::rotating_sprite(arch.output_size()),
            };
            spec.seed = spec.seed.wrapping_add(1);
            spec.size = arch.output_size();
            let training = generate(&spec)?;
            prefit_generator(
                arch,
                &training.frames,
                config.prefit_epochs,
                config.lr_z,
                config.lr_gamma,
                config.seed.wrapping_add(0x7072_6566), // distinct prefit stream
            )
        }
    }
}

/// The solver configuration implied by an experiment configuration.
pub fn solver_config(config: &ExperimentConfig) -> Result<SolverConfig> {
    Ok(SolverConfig {
        mode: config.mode,
        constraint: config.constraint()?,
        similarity_lambda: config.lambda,
        similarity_beta: None,
        lr_latent: config.lr_z,
        lr_weights: config.lr_gamma,
        epochs: config.epochs,
        tol: config.tol,
        seed: config.seed,
        holdout: config.holdout.clone(),
        restarts: config.restarts,
        parallel: config.parallel,
    })
}

/// Runs the full recovery pipeline and writes every artifact:
/// reconstructed frames, metrics CSV, residual-trace CSV, final weights,
/// latent-basis CSV (when a constraint is active), interpolated hold-out
/// frames (when configured), and the manifest.
pub fn execute(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let truth = load_frames(config)?;
    if truth.is_empty() {
        return Err(Error::invalid("dataset has no frames"));
    }
    let arch = Architecture::by_name(&config.preset)?;
    let want_shape = arch.output_shape();
    for (i, f) in truth.iter().enumerate() {
        if f.shape() != want_shape {
            return Err(Error::shape(format!(
                "frame {i} has shape {:?} but preset '{}' generates {:?}",
                f.shape(),
                config.preset,
                want_shape
            )));
        }
    }

    let n = truth[0].len();
    let mut rng = SeededRng::new(config.seed);
    let operators = build_operators(config, n, truth.len(), &mut rng)?;
    let meas: MeasurementSet = measure_sequence(&truth, operators, config.noise_std, &mut rng)?;
    let init = initial_weights(config, &arch, &mut rng)?;

    let solver = solver_config(config)?;
    let result = run(&solver, &meas, &init)?.with_metrics(&truth)?;

    let out_dir = config.out_dir.clone();
    io::write_sequence(&out_dir.join("recon"), &result.frames)?;
    if let Some(metrics) = &result.metrics {
        io::write_report(&out_dir, "metrics.csv", &metrics.to_csv())?;
    }
    io::write_report(&out_dir, "residual.csv", &io::residual_csv(&result.residual_history))?;
    io::save_weights(&out_dir.join("generator.weights"), &result.weights)?;
    if let Some(basis) = &result.basis {
        io::write_report(&out_dir, "basis.csv", &basis.to_csv())?;
    }

    let interpolated = if config.holdout.is_empty() {
        None
    } else {
        let synthesized = interpolate_holdout(&result, &config.holdout)?;
        let frames: Vec<Tensor> = synthesized.iter().map(|(_, f)| f.clone()).collect();
        let truth_holdout: Vec<Tensor> = synthesized
            .iter()
            .map(|(idx, _)| truth[*idx].clone())
            .collect();
        io::write_sequence(&out_dir.join("interpolated"), &frames)?;
        let report = MetricsReport::compare(&truth_holdout, &frames)?;
        io::write_report(&out_dir, "interpolated.csv", &report.to_csv())?;
        Some(report)
    };

    io::write_report(
        &out_dir,
        "manifest.txt",
        &io::manifest_text(&config.manifest_pairs()),
    )?;

    Ok(ExperimentOutput {
        result,
        truth,
        out_dir,
        interpolated,
    })
}

/// Generates a synthetic sequence and writes its frames plus a manifest.
pub fn synthesize(spec: &SequenceSpec, out_dir: &PathBuf) -> Result<Vec<PathBuf>> {
    let seq = generate(spec)?;
    let paths = io::write_sequence(out_dir, &seq.frames)?;
    let mut cfg = ExperimentConfig::default();
    cfg.dataset = DatasetSource::Synth(spec.clone());
    cfg.out_dir = out_dir.clone();
    io::write_report(
        out_dir,
        "manifest.txt",
        &io::manifest_text(&cfg.manifest_pairs()),
    )?;
    Ok(paths)
}
