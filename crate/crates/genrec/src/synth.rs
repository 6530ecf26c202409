//! Procedurally generated test sequences: a rotating glyph, a 12-slice color
//! wheel, and a pair of bouncing sprites. Pixels live in [−1, 1] with −1 as
//! background, matching the generator's tanh output range.

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::tensor::Tensor;

/// 8×8 thick-stroke glyph bitmaps; scaled up as needed so sequences carry no
/// external data dependency.
const GLYPHS: [[u8; 64]; 2] = [
    // plus
    [
        0, 0, 0, 0, 0, 0, 0, 0, //
        0, 0, 0, 1, 1, 0, 0, 0, //
        0, 0, 0, 1, 1, 0, 0, 0, //
        0, 1, 1, 1, 1, 1, 1, 0, //
        0, 1, 1, 1, 1, 1, 1, 0, //
        0, 0, 0, 1, 1, 0, 0, 0, //
        0, 0, 0, 1, 1, 0, 0, 0, //
        0, 0, 0, 0, 0, 0, 0, 0,
    ],
    // seven (asymmetric, so rotation is visible at every angle)
    [
        0, 1, 1, 1, 1, 1, 1, 0, //
        0, 1, 1, 1, 1, 1, 1, 0, //
        0, 0, 0, 0, 0, 1, 1, 0, //
        0, 0, 0, 0, 1, 1, 0, 0, //
        0, 0, 0, 1, 1, 0, 0, 0, //
        0, 0, 1, 1, 0, 0, 0, 0, //
        0, 1, 1, 0, 0, 0, 0, 0, //
        0, 1, 1, 0, 0, 0, 0, 0,
    ],
];

/// 12 distinct palette colors in [−1, 1]³, hue steps of 30°.
const WHEEL_PALETTE: [[f64; 3]; 12] = [
    [1.0, -1.0, -1.0],
    [1.0, 0.0, -1.0],
    [1.0, 1.0, -1.0],
    [0.0, 1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, 1.0, 0.0],
    [-1.0, 1.0, 1.0],
    [-1.0, 0.0, 1.0],
    [-1.0, -1.0, 1.0],
    [0.0, -1.0, 1.0],
    [1.0, -1.0, 1.0],
    [1.0, -1.0, 0.0],
];

pub const BACKGROUND: f64 = -1.0;

/// What to generate.
#[derive(Debug, Clone, PartialEq)]
pub enum SequenceKind {
    /// A glyph spinning about the frame center.
    RotatingSprite {
        degrees_per_frame: f64,
        /// Index into the bundled glyph set.
        glyph: usize,
    },
    /// 12-slice color wheel turning by a fixed angle per frame.
    ColorWheel { degrees_per_frame: f64 },
    /// Two glyphs translating with constant integer velocity, reflecting at
    /// the borders.
    TranslatingSprites {
        velocity_a: (i64, i64),
        velocity_b: (i64, i64),
    },
}

/// Full recipe for one synthetic sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceSpec {
    pub kind: SequenceKind,
    pub frames: usize,
    /// Square frame edge; 16, 32, or 64.
    pub size: usize,
    pub seed: u64,
}

impl SequenceSpec {
    /// Rotating glyph defaults: 2° per frame for 32 frames.
    pub fn rotating_sprite(size: usize) -> Self {
        SequenceSpec {
            kind: SequenceKind::RotatingSprite {
                degrees_per_frame: 2.0,
                glyph: 1,
            },
            frames: 32,
            size,
            seed: 0,
        }
    }

    /// Color wheel defaults: 1° per frame for 64 frames.
    pub fn color_wheel(size: usize) -> Self {
        SequenceSpec {
            kind: SequenceKind::ColorWheel {
                degrees_per_frame: 1.0,
            },
            frames: 64,
            size,
            seed: 0,
        }
    }

    /// Bouncing sprites defaults: 20 frames.
    pub fn translating_sprites(size: usize) -> Self {
        SequenceSpec {
            kind: SequenceKind::TranslatingSprites {
                velocity_a: (1, 2),
                velocity_b: (-2, 1),
            },
            frames: 20,
            size,
            seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.frames == 0 {
            return Err(Error::invalid("sequence needs at least one frame"));
        }
        if ![16, 32, 64].contains(&self.size) {
            return Err(Error::invalid(format!(
                "frame size {} not in {{16, 32, 64}}",
                self.size
            )));
        }
        if let SequenceKind::RotatingSprite { glyph, .. } = &self.kind {
            if *glyph >= GLYPHS.len() {
                return Err(Error::invalid(format!("glyph {glyph} out of range")));
            }
        }
        Ok(())
    }

    pub fn channels(&self) -> usize {
        match self.kind {
            SequenceKind::ColorWheel { .. } => 3,
            _ => 1,
        }
    }
}

/// A generated sequence plus the recipe that produced it.
#[derive(Debug, Clone)]
pub struct VideoSequence {
    pub frames: Vec<Tensor>,
    pub spec: SequenceSpec,
}

impl VideoSequence {
    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    /// Frames flattened to plain vectors, the measurement-side view.
    pub fn flattened(&self) -> Vec<Vec<f64>> {
        self.frames.iter().map(|f| f.as_slice().to_vec()).collect()
    }
}

/// Dispatches on the spec kind.
pub fn generate(spec: &SequenceSpec) -> Result<VideoSequence> {
    spec.validate()?;
    match spec.kind {
        SequenceKind::RotatingSprite { .. } => rotating_sprite_sequence(spec),
        SequenceKind::ColorWheel { .. } => color_wheel_sequence(spec),
        SequenceKind::TranslatingSprites { .. } => translating_sprites_sequence(spec),
    }
}

/// Rotates a square image about its center by `theta_degrees`, bilinear
/// resampling, sampling outside the frame as the background value.
pub fn rotate_frame(img: &Tensor, theta_degrees: f64) -> Result<Tensor> {
    let s = img.shape();
    if s.len() != 3 || s[1] != s[2] {
        return Err(Error::shape(format!(
            "rotate_frame wants a square [c, n, n] image, got {s:?}"
        )));
    }
    let (channels, n) = (s[0], s[1]);
    let center = (n as f64 - 1.0) / 2.0;
    let theta = theta_degrees.to_radians();
    let (sin, cos) = theta.sin_cos();
    let mut out = Tensor::zeros(s);

    for c in 0..channels {
        for r in 0..n {
            for col in 0..n {
                let dy = r as f64 - center;
                let dx = col as f64 - center;
                // Inverse map: sample the source at the un-rotated position.
                let sx = cos * dx + sin * dy + center;
                let sy = -sin * dx + cos * dy + center;
                let v = bilinear(img, c, sy, sx, n);
                *out.at3_mut(c, r, col) = v;
            }
        }
    }
    Ok(out)
}

fn bilinear(img: &Tensor, c: usize, y: f64, x: f64, n: usize) -> f64 {
    let sample = |r: i64, col: i64| -> f64 {
        if r < 0 || col < 0 || r >= n as i64 || col >= n as i64 {
            BACKGROUND
        } else {
            img.at3(c, r as usize, col as usize)
        }
    };
    let y0 = y.floor();
    let x0 = x.floor();
    let wy = y - y0;
    let wx = x - x0;
    let (r0, c0) = (y0 as i64, x0 as i64);
    let v00 = sample(r0, c0);
    let v01 = sample(r0, c0 + 1);
    let v10 = sample(r0 + 1, c0);
    let v11 = sample(r0 + 1, c0 + 1);
    (1.0 - wy) * ((1.0 - wx) * v00 + wx * v01) + wy * ((1.0 - wx) * v10 + wx * v11)
}

/// Nearest-neighbor upscale of a bundled glyph to `px`×`px`, +1 stroke on
/// −1 background.
fn glyph_bitmap(glyph: usize, px: usize) -> Tensor {
    let mut out = Tensor::zeros(&[1, px, px]);
    for r in 0..px {
        for c in 0..px {
            let gr = r * 8 / px;
            let gc = c * 8 / px;
            let v = if GLYPHS[glyph][gr * 8 + gc] == 1 { 1.0 } else { BACKGROUND };
            *out.at3_mut(0, r, c) = v;
        }
    }
    out
}

/// Glyph centered in an n×n frame.
fn centered_glyph_frame(glyph: usize, n: usize) -> Tensor {
    let px = n / 2;
    let bitmap = glyph_bitmap(glyph, px);
    let off = (n - px) / 2;
    let mut out = Tensor::zeros(&[1, n, n]);
    for x in out.as_mut_slice() {
        *x = BACKGROUND;
    }
    for r in 0..px {
        for c in 0..px {
            *out.at3_mut(0, r + off, c + off) = bitmap.at3(0, r, c);
        }
    }
    out
}

pub fn rotating_sprite_sequence(spec: &SequenceSpec) -> Result<VideoSequence> {
    spec.validate()?;
    let SequenceKind::RotatingSprite {
        degrees_per_frame,
        glyph,
    } = spec.kind
    else {
        return Err(Error::invalid("spec kind is not rotating_sprite"));
    };
    let base = centered_glyph_frame(glyph, spec.size);
    let frames = (0..spec.frames)
        .map(|t| rotate_frame(&base, degrees_per_frame * t as f64))
        .collect::<Result<Vec<_>>>()?;
    Ok(VideoSequence {
        frames,
        spec: spec.clone(),
    })
}

/// Palette index of the wheel slice covering angle `a` at frame `t`:
/// slice `s` spans [s·30 + t·δ, (s+1)·30 + t·δ).
fn wheel_slice(angle_deg: f64, t: usize, deg_per_frame: f64) -> usize {
    let shifted = (angle_deg - deg_per_frame * t as f64).rem_euclid(360.0);
    ((shifted / 30.0).floor() as usize).min(11)
}

pub fn color_wheel_sequence(spec: &SequenceSpec) -> Result<VideoSequence> {
    spec.validate()?;
    let SequenceKind::ColorWheel { degrees_per_frame } = spec.kind else {
        return Err(Error::invalid("spec kind is not color_wheel"));
    };
    let n = spec.size;
    let center = (n as f64 - 1.0) / 2.0;
    let radius = n as f64 / 2.0 - 0.5;
    let mut frames = Vec::with_capacity(spec.frames);
    for t in 0..spec.frames {
        let mut img = Tensor::zeros(&[3, n, n]);
        for x in img.as_mut_slice() {
            *x = BACKGROUND;
        }
        for r in 0..n {
            for c in 0..n {
                let dy = r as f64 - center;
                let dx = c as f64 - center;
                if (dx * dx + dy * dy).sqrt() > radius {
                    continue;
                }
                let angle = dy.atan2(dx).to_degrees().rem_euclid(360.0);
                let color = WHEEL_PALETTE[wheel_slice(angle, t, degrees_per_frame)];
                for (ch, &v) in color.iter().enumerate() {
                    *img.at3_mut(ch, r, c) = v;
                }
            }
        }
        frames.push(img);
    }
    Ok(VideoSequence {
        frames,
        spec: spec.clone(),
    })
}

/// Reflected position after `t` integer steps from `start` at `velocity`
/// inside [0, limit]: triangle-wave closed form.
fn bounce_position(start: i64, velocity: i64, t: i64, limit: i64) -> i64 {
    if limit == 0 {
        return 0;
    }
    let period = 2 * limit;
    let q = (start + velocity * t).rem_euclid(period);
    if q <= limit {
        q
    } else {
        period - q
    }
}

pub fn translating_sprites_sequence(spec: &SequenceSpec) -> Result<VideoSequence> {
    spec.validate()?;
    let SequenceKind::TranslatingSprites {
        velocity_a,
        velocity_b,
    } = spec.kind
    else {
        return Err(Error::invalid("spec kind is not translating_sprites"));
    };
    let n = spec.size;
    let px = n / 4;
    if px == 0 || px > n {
        return Err(Error::invalid("sprite larger than frame"));
    }
    let sprites = [glyph_bitmap(0, px), glyph_bitmap(1, px)];
    let limit = (n - px) as i64;
    let mut rng = SeededRng::new(spec.seed);
    let starts: Vec<(i64, i64)> = (0..2)
        .map(|_| {
            (
                rng.next_index(limit as usize + 1) as i64,
                rng.next_index(limit as usize + 1) as i64,
            )
        })
        .collect();
    let velocities = [velocity_a, velocity_b];

    let mut frames = Vec::with_capacity(spec.frames);
    for t in 0..spec.frames {
        let mut img = Tensor::zeros(&[1, n, n]);
        for x in img.as_mut_slice() {
            *x = BACKGROUND;
        }
        for (sprite, (&(sy, sx), &(vy, vx))) in
            sprites.iter().zip(starts.iter().zip(velocities.iter()))
        {
            let py = bounce_position(sy, vy, t as i64, limit) as usize;
            let pxo = bounce_position(sx, vx, t as i64, limit) as usize;
            for r in 0..px {
                for c in 0..px {
                    let v = sprite.at3(0, r, c);
                    let cur = img.at3(0, py + r, pxo + c);
                    // Overlap resolves to the brighter value.
                    *img.at3_mut(0, py + r, pxo + c) = cur.max(v);
                }
            }
        }
        frames.push(img);
    }
    Ok(VideoSequence {
        frames,
        spec: spec.clone(),
    })
}
