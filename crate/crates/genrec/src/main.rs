//! Thin CLI over the library: synthesize sequences, run recoveries,
//! interpolate held-out frames, gradient-check the backward pass, and score
//! reconstructions. The `GENREC_SEED` environment variable supplies the seed
//! when no flag does.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use genrec::config::ExperimentConfig;
use genrec::gradcheck::gradient_check;
use genrec::metrics::MetricsReport;
use genrec::synth::SequenceSpec;
use genrec::{io, runner, Architecture};

#[derive(Parser)]
#[command(name = "genrec", about = "Generator-prior video recovery", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic sequence as PGM/PPM frames.
    Synth(SynthArgs),
    /// Recover a sequence from linear measurements.
    Recover(RecoverArgs),
    /// Recover with held-out frames and synthesize them from the latent line.
    Interpolate(RecoverArgs),
    /// Finite-difference validation of the analytic gradients.
    Gradcheck(GradcheckArgs),
    /// Score a reconstruction directory against ground truth.
    Metrics(MetricsArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// rotating_sprite | color_wheel | translating_sprites
    #[arg(long)]
    kind: String,
    #[arg(long)]
    frames: Option<usize>,
    #[arg(long, default_value_t = 64)]
    size: usize,
    #[arg(long)]
    deg_per_frame: Option<f64>,
    #[arg(long)]
    glyph: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out/synth")]
    out: PathBuf,
}

#[derive(Args)]
struct RecoverArgs {
    /// Flat key = value config file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Load frames from a directory instead of synthesizing.
    #[arg(long)]
    input_dir: Option<PathBuf>,
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    frames: Option<usize>,
    #[arg(long)]
    size: Option<usize>,
    /// identity | gaussian:M | mask:P
    #[arg(long)]
    measure: Option<String>,
    #[arg(long)]
    noise_std: Option<f64>,
    /// latent | joint
    #[arg(long)]
    mode: Option<String>,
    /// none | rank:R | affine:D | grouped:DG:DP
    #[arg(long)]
    constraint: Option<String>,
    /// Contiguous group sizes for the grouped constraint, e.g. 20,20,20.
    #[arg(long)]
    groups: Option<String>,
    /// Shortcut for --constraint rank:R.
    #[arg(long)]
    rank: Option<usize>,
    /// Shortcut for --constraint affine:D.
    #[arg(long)]
    affine: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    lr_z: Option<f64>,
    #[arg(long)]
    lr_gamma: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    restarts: Option<usize>,
    /// 1-based frames to exclude from the data term, e.g. 11-15.
    #[arg(long)]
    holdout: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    parallel: bool,
    /// random | prefit | file:PATH
    #[arg(long)]
    init: Option<String>,
    /// grayscale | rgb | rgb-small | tiny
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GradcheckArgs {
    #[arg(long, default_value = "tiny")]
    preset: String,
    #[arg(long, default_value_t = 3)]
    frames: usize,
    /// Probes per tensor.
    #[arg(long, default_value_t = 13)]
    probes: usize,
    #[arg(long, default_value_t = 1e-5)]
    step: f64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1e-6)]
    threshold: f64,
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    recon: PathBuf,
    /// Optional CSV output path.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn env_seed() -> Option<u64> {
    std::env::var("GENREC_SEED").ok()?.parse().ok()
}

fn effective_seed(flag: Option<u64>) -> u64 {
    flag.or_else(env_seed).unwrap_or(0)
}

fn build_config(args: &RecoverArgs) -> genrec::Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    let set = |cfg: &mut ExperimentConfig, key: &str, value: String| -> genrec::Result<()> {
        cfg.apply(key, &value)
    };
    if let Some(dir) = &args.input_dir {
        set(&mut cfg, "input_dir", dir.display().to_string())?;
    }
    if let Some(kind) = &args.kind {
        set(&mut cfg, "kind", kind.clone())?;
    }
    if let Some(frames) = args.frames {
        set(&mut cfg, "frames", frames.to_string())?;
    }
    if let Some(size) = args.size {
        set(&mut cfg, "size", size.to_string())?;
    }
    if let Some(measure) = &args.measure {
        set(&mut cfg, "measure", measure.clone())?;
    }
    if let Some(noise) = args.noise_std {
        set(&mut cfg, "noise_std", noise.to_string())?;
    }
    if let Some(mode) = &args.mode {
        set(&mut cfg, "mode", mode.clone())?;
    }
    if let Some(constraint) = &args.constraint {
        set(&mut cfg, "constraint", constraint.clone())?;
    }
    if let Some(r) = args.rank {
        set(&mut cfg, "constraint", format!("rank:{r}"))?;
    }
    if let Some(d) = args.affine {
        set(&mut cfg, "constraint", format!("affine:{d}"))?;
    }
    if let Some(groups) = &args.groups {
        set(&mut cfg, "groups", groups.clone())?;
    }
    if let Some(lambda) = args.lambda {
        set(&mut cfg, "lambda", lambda.to_string())?;
    }
    if let Some(lr) = args.lr_z {
        set(&mut cfg, "lr_z", lr.to_string())?;
    }
    if let Some(lr) = args.lr_gamma {
        set(&mut cfg, "lr_gamma", lr.to_string())?;
    }
    if let Some(epochs) = args.epochs {
        set(&mut cfg, "epochs", epochs.to_string())?;
    }
    if let Some(tol) = args.tol {
        set(&mut cfg, "tol", tol.to_string())?;
    }
    if let Some(restarts) = args.restarts {
        set(&mut cfg, "restarts", restarts.to_string())?;
    }
    if let Some(holdout) = &args.holdout {
        set(&mut cfg, "holdout", holdout.clone())?;
    }
    if args.parallel {
        set(&mut cfg, "parallel", "true".to_string())?;
    }
    if let Some(init) = &args.init {
        set(&mut cfg, "init", init.clone())?;
    }
    if let Some(preset) = &args.preset {
        set(&mut cfg, "preset", preset.clone())?;
    }
    if let Some(out) = &args.out {
        set(&mut cfg, "out", out.display().to_string())?;
    }
    // Flag wins, then GENREC_SEED, then the config file's seed.
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    } else if let Some(seed) = env_seed() {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn cmd_synth(args: &SynthArgs) -> genrec::Result<()> {
    let mut spec = match args.kind.as_str() {
        "rotating_sprite" => SequenceSpec::rotating_sprite(args.size),
        "color_wheel" => SequenceSpec::color_wheel(args.size),
        "translating_sprites" => SequenceSpec::translating_sprites(args.size),
        other => {
            return Err(genrec::Error::InvalidArgument(format!(
                "unknown kind '{other}'"
            )))
        }
    };
    if let Some(frames) = args.frames {
        spec.frames = frames;
    }
    spec.seed = effective_seed(args.seed);
    if let Some(deg) = args.deg_per_frame {
        match &mut spec.kind {
            genrec::SequenceKind::RotatingSprite {
                degrees_per_frame, ..
            }
            | genrec::SequenceKind::ColorWheel { degrees_per_frame } => *degrees_per_frame = deg,
            _ => {}
        }
    }
    if let Some(glyph) = args.glyph {
        if let genrec::SequenceKind::RotatingSprite { glyph: g, .. } = &mut spec.kind {
            *g = glyph;
        }
    }
    let paths = runner::synthesize(&spec, &args.out)?;
    println!("wrote {} frames to {}", paths.len(), args.out.display());
    Ok(())
}

fn cmd_recover(args: &RecoverArgs, require_holdout: bool) -> genrec::Result<()> {
    let mut cfg = build_config(args)?;
    if require_holdout {
        if cfg.holdout.is_empty() {
            return Err(genrec::Error::InvalidArgument(
                "interpolate needs --holdout".to_string(),
            ));
        }
        if cfg.constraint_kind == "none" {
            // Interpolation rides on the latent line.
            cfg.constraint_kind = "affine:1".to_string();
        }
    }
    let output = runner::execute(&cfg)?;
    if let Some(metrics) = &output.result.metrics {
        println!(
            "mean PSNR {:.2} dB over {} frames (final data loss {:.6e})",
            metrics.mean_psnr,
            output.truth.len(),
            output.result.final_data_loss
        );
    }
    if let Some(interp) = &output.interpolated {
        println!(
            "interpolated hold-out mean PSNR {:.2} dB over {} frames",
            interp.mean_psnr,
            interp.per_frame_psnr.len()
        );
    }
    println!("artifacts in {}", output.out_dir.display());
    Ok(())
}

fn cmd_gradcheck(args: &GradcheckArgs) -> genrec::Result<bool> {
    let arch = Architecture::by_name(&args.preset)?;
    let report = gradient_check(
        &arch,
        args.frames,
        args.probes,
        args.step,
        effective_seed(args.seed).max(1),
    )?;
    for (name, err) in &report.entries {
        println!("{name:<8} max_rel_err {err:.3e}");
    }
    let ok = report.passed(args.threshold);
    println!(
        "gradient check: {} (threshold {:.0e})",
        if ok { "PASS" } else { "FAIL" },
        args.threshold
    );
    Ok(ok)
}

fn cmd_metrics(args: &MetricsArgs) -> genrec::Result<()> {
    let truth = io::read_sequence(&args.truth)?;
    let recon = io::read_sequence(&args.recon)?;
    let report = MetricsReport::compare(&truth, &recon)?;
    print!("{}", report.to_csv());
    println!("mean_psnr,{}", report.mean_psnr);
    if let Some(out) = &args.out {
        io::write_text(out, &report.to_csv())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Synth(args) => cmd_synth(args).map(|()| true),
        Command::Recover(args) => cmd_recover(args, false).map(|()| true),
        Command::Interpolate(args) => cmd_recover(args, true).map(|()| true),
        Command::Gradcheck(args) => cmd_gradcheck(args),
        Command::Metrics(args) => cmd_metrics(args).map(|()| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}
