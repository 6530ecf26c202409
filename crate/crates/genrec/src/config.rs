//! Flat `key = value` experiment configuration with `#` comments. A config
//! plus the binary version fully determines every output byte, and the
//! effective configuration is recorded in each run's manifest.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::recovery::{Constraint, Mode};
use crate::synth::{SequenceKind, SequenceSpec};

/// Where the frames come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    Synth(SequenceSpec),
    Directory(PathBuf),
}

/// How the per-frame operators are built.
#[derive(Debug, Clone, PartialEq)]
pub enum MeasureSpec {
    Identity,
    Gaussian { m: usize },
    Mask { keep_fraction: f64 },
}

/// Generator weight initialization.
#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    Random,
    /// Load a GENREC1 file.
    File(PathBuf),
    /// Joint-fit a fresh generator on a synthetic training sequence first.
    Prefit,
}

/// Everything one experiment needs.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    pub preset: String,
    pub measure: MeasureSpec,
    pub noise_std: f64,
    /// Reuse one mask for every frame instead of drawing one per frame.
    pub shared_mask: bool,
    pub mode: Mode,
    pub constraint_kind: String,
    pub groups: Vec<usize>,
    pub lambda: f64,
    pub lr_z: f64,
    pub lr_gamma: f64,
    pub epochs: usize,
    pub tol: f64,
    pub restarts: usize,
    /// 0-based holdout indices (parsed from 1-based config text).
    pub holdout: Vec<usize>,
    pub seed: u64,
    pub parallel: bool,
    pub init: InitSpec,
    pub out_dir: PathBuf,
    pub prefit_epochs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: DatasetSource::Synth(SequenceSpec::rotating_sprite(32)),
            preset: "grayscale".to_string(),
            measure: MeasureSpec::Identity,
            noise_std: 0.0,
            shared_mask: false,
            mode: Mode::Joint,
            constraint_kind: "none".to_string(),
            groups: Vec::new(),
            lambda: 1.0,
            lr_z: 1.0,
            lr_gamma: 0.01,
            epochs: 2000,
            tol: 1e-6,
            restarts: 1,
            holdout: Vec::new(),
            seed: 0,
            parallel: false,
            init: InitSpec::Random,
            out_dir: PathBuf::from("out"),
            prefit_epochs: 400,
        }
    }
}

/// `11-15` or `2,11-15` (1-based, inclusive) into sorted 0-based indices.
pub fn parse_holdout(text: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once('-') {
            let lo: usize = parse_num(a, "holdout")?;
            let hi: usize = parse_num(b, "holdout")?;
            if lo == 0 || hi < lo {
                return Err(Error::Parse(format!("bad holdout range '{part}'")));
            }
            out.extend((lo..=hi).map(|f| f - 1));
        } else {
            let f: usize = parse_num(part, "holdout")?;
            if f == 0 {
                return Err(Error::Parse("holdout frames are 1-based".to_string()));
            }
            out.push(f - 1);
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

fn render_holdout(holdout: &[usize]) -> String {
    holdout
        .iter()
        .map(|h| (h + 1).to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad {what} value '{s}'")))
}

impl ExperimentConfig {
    /// Parses flat `key = value` text; unknown keys are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Parse(format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            cfg.apply(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::parse(&text)
    }

    /// Applies one key/value pair, the shared path for config files and CLI
    /// flag overrides.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "kind" => {
                let spec = self.synth_spec_mut();
                spec.kind = match value {
                    "rotating_sprite" => SequenceKind::RotatingSprite {
                        degrees_per_frame: 2.0,
                        glyph: 1,
                    },
                    "color_wheel" => SequenceKind::ColorWheel {
                        degrees_per_frame: 1.0,
                    },
                    "translating_sprites" => SequenceKind::TranslatingSprites {
                        velocity_a: (1, 2),
                        velocity_b: (-2, 1),
                    },
                    other => return Err(Error::Parse(format!("unknown kind '{other}'"))),
                };
                match &spec.kind {
                    SequenceKind::RotatingSprite { .. } => spec.frames = 32,
                    SequenceKind::ColorWheel { .. } => spec.frames = 64,
                    SequenceKind::TranslatingSprites { .. } => spec.frames = 20,
                }
            }
            "frames" => self.synth_spec_mut().frames = parse_num(value, key)?,
            "size" => self.synth_spec_mut().size = parse_num(value, key)?,
            "deg_per_frame" => {
                let deg: f64 = parse_num(value, key)?;
                match &mut self.synth_spec_mut().kind {
                    SequenceKind::RotatingSprite {
                        degrees_per_frame, ..
                    }
                    | SequenceKind::ColorWheel { degrees_per_frame } => *degrees_per_frame = deg,
                    _ => return Err(Error::Parse("deg_per_frame needs a rotating kind".into())),
                }
            }
            "glyph" => {
                let g: usize = parse_num(value, key)?;
                match &mut self.synth_spec_mut().kind {
                    SequenceKind::RotatingSprite { glyph, .. } => *glyph = g,
                    _ => return Err(Error::Parse("glyph needs kind = rotating_sprite".into())),
                }
            }
            "dataset_seed" => self.synth_spec_mut().seed = parse_num(value, key)?,
            "input_dir" => self.dataset = DatasetSource::Directory(PathBuf::from(value)),
            "preset" => self.preset = value.to_string(),
            "measure" => {
                self.measure = if value == "identity" {
                    MeasureSpec::Identity
                } else if let Some(m) = value.strip_prefix("gaussian:") {
                    MeasureSpec::Gaussian {
                        m: parse_num(m, key)?,
                    }
                } else if let Some(p) = value.strip_prefix("mask:") {
                    MeasureSpec::Mask {
                        keep_fraction: parse_num(p, key)?,
                    }
                } else {
                    return Err(Error::Parse(format!("unknown measure '{value}'")));
                };
            }
            "noise_std" => self.noise_std = parse_num(value, key)?,
            "shared_mask" => self.shared_mask = parse_bool(value)?,
            "mode" => {
                self.mode = match value {
                    "latent" => Mode::LatentOnly,
                    "joint" => Mode::Joint,
                    other => return Err(Error::Parse(format!("unknown mode '{other}'"))),
                }
            }
            "constraint" => self.constraint_kind = value.to_string(),
            "groups" => {
                self.groups = value
                    .split(',')
                    .map(|g| parse_num(g, key))
                    .collect::<Result<Vec<usize>>>()?;
            }
            "lambda" => self.lambda = parse_num(value, key)?,
            "lr_z" => self.lr_z = parse_num(value, key)?,
            "lr_gamma" => self.lr_gamma = parse_num(value, key)?,
            "epochs" => self.epochs = parse_num(value, key)?,
            "tol" => self.tol = parse_num(value, key)?,
            "restarts" => self.restarts = parse_num(value, key)?,
            "holdout" => self.holdout = parse_holdout(value)?,
            "seed" => self.seed = parse_num(value, key)?,
            "parallel" => self.parallel = parse_bool(value)?,
            "prefit_epochs" => self.prefit_epochs = parse_num(value, key)?,
            "init" => {
                self.init = match value {
                    "random" => InitSpec::Random,
                    "prefit" => InitSpec::Prefit,
                    other => match other.strip_prefix("file:") {
                        Some(p) => InitSpec::File(PathBuf::from(p)),
                        None => return Err(Error::Parse(format!("unknown init '{other}'"))),
                    },
                }
            }
            "out" => self.out_dir = PathBuf::from(value),
            other => return Err(Error::Parse(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    fn synth_spec_mut(&mut self) -> &mut SequenceSpec {
        if let DatasetSource::Directory(_) = self.dataset {
            self.dataset = DatasetSource::Synth(SequenceSpec::rotating_sprite(32));
        }
        match &mut self.dataset {
            DatasetSource::Synth(spec) => spec,
            DatasetSource::Directory(_) => unreachable!(),
        }
    }

    /// Solver constraint from the `constraint`/`groups` keys.
    pub fn constraint(&self) -> Result<Constraint> {
        let c = self.constraint_kind.as_str();
        if c == "none" {
            return Ok(Constraint::None);
        }
        if let Some(r) = c.strip_prefix("rank:") {
            return Ok(Constraint::Rank(parse_num(r, "constraint")?));
        }
        if let Some(d) = c.strip_prefix("affine:") {
            return Ok(Constraint::Affine(parse_num(d, "constraint")?));
        }
        if let Some(rest) = c.strip_prefix("grouped:") {
            let (dg, dp) = rest
                .split_once(':')
                .ok_or_else(|| Error::Parse("grouped wants grouped:DGLOBAL:DGROUP".into()))?;
            if self.groups.is_empty() {
                return Err(Error::Parse("grouped constraint needs groups = a,b,...".into()));
            }
            return Ok(Constraint::Grouped {
                group_sizes: self.groups.clone(),
                d_global: parse_num(dg, "constraint")?,
                d_per_group: parse_num(dp, "constraint")?,
            });
        }
        Err(Error::Parse(format!("unknown constraint '{c}'")))
    }

    /// Manifest key/value pairs reproducing this configuration.
    pub fn manifest_pairs(&self) -> Vec<(String, String)> {
        let mut pairs: Vec<(String, String)> = Vec::new();
        let mut push = |k: &str, v: String| pairs.push((k.to_string(), v));
        match &self.dataset {
            DatasetSource::Directory(d) => push("input_dir", d.display().to_string()),
            DatasetSource::Synth(spec) => {
                let kind = match &spec.kind {
                    SequenceKind::RotatingSprite {
                        degrees_per_frame,
                        glyph,
                    } => {
                        push("deg_per_frame", degrees_per_frame.to_string());
                        push("glyph", glyph.to_string());
                        "rotating_sprite"
                    }
                    SequenceKind::ColorWheel { degrees_per_frame } => {
                        push("deg_per_frame", degrees_per_frame.to_string());
                        "color_wheel"
                    }
                    SequenceKind::TranslatingSprites { .. } => "translating_sprites",
                };
                push("kind", kind.to_string());
                push("frames", spec.frames.to_string());
                push("size", spec.size.to_string());
                push("dataset_seed", spec.seed.to_string());
            }
        }
        push("preset", self.preset.clone());
        let measure = match &self.measure {
            MeasureSpec::Identity => "identity".to_string(),
            MeasureSpec::Gaussian { m } => format!("gaussian:{m}"),
            MeasureSpec::Mask { keep_fraction } => format!("mask:{keep_fraction}"),
        };
        push("measure", measure);
        push("noise_std", self.noise_std.to_string());
        push("shared_mask", self.shared_mask.to_string());
        push(
            "mode",
            match self.mode {
                Mode::LatentOnly => "latent".to_string(),
                Mode::Joint => "joint".to_string(),
            },
        );
        push("constraint", self.constraint_kind.clone());
        if !self.groups.is_empty() {
            push(
                "groups",
                self.groups
                    .iter()
                    .map(|g| g.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            );
        }
        push("lambda", self.lambda.to_string());
        push("lr_z", self.lr_z.to_string());
        push("lr_gamma", self.lr_gamma.to_string());
        push("epochs", self.epochs.to_string());
        push("tol", self.tol.to_string());
        push("restarts", self.restarts.to_string());
        if !self.holdout.is_empty() {
            push("holdout", render_holdout(&self.holdout));
        }
        push("seed", self.seed.to_string());
        push("parallel", self.parallel.to_string());
        push("prefit_epochs", self.prefit_epochs.to_string());
        let init = match &self.init {
            InitSpec::Random => "random".to_string(),
            InitSpec::Prefit => "prefit".to_string(),
            InitSpec::File(p) => format!("file:{}", p.display()),
        };
        push("init", init);
        push("out", self.out_dir.display().to_string());
        pairs
    }
}

fn parse_bool(value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(Error::Parse(format!("bad boolean '{other}'"))),
    }
}
