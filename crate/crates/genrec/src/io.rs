//! On-disk formats: binary PGM/PPM frames, the `GENREC1` weights file, CSV
//! reports, and plain-text manifests.
//!
//! Frames are quantized to 8 bits only at this boundary (byte `v` maps to
//! `v/127.5 − 1`); everything upstream stays in f64.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::generator::{param_count, Architecture, Weights};
use crate::tensor::Tensor;

pub const WEIGHTS_MAGIC: &[u8; 7] = b"GENREC1";

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

fn quantize(x: f64) -> u8 {
    ((x + 1.0) * 127.5).round().clamp(0.0, 255.0) as u8
}

fn dequantize(v: u8) -> f64 {
    v as f64 / 127.5 - 1.0
}

/// Writes a [1,h,w] tensor as binary PGM or a [3,h,w] tensor as binary PPM.
pub fn write_frame(path: &Path, frame: &Tensor) -> Result<()> {
    let s = frame.shape();
    if s.len() != 3 || (s[0] != 1 && s[0] != 3) {
        return Err(Error::shape(format!(
            "writable frames are [1|3, h, w], got {s:?}"
        )));
    }
    let (c, h, w) = (s[0], s[1], s[2]);
    let magic = if c == 1 { "P5" } else { "P6" };
    let mut bytes = format!("{magic}\n{w} {h}\n255\n").into_bytes();
    for row in 0..h {
        for col in 0..w {
            for ch in 0..c {
                bytes.push(quantize(frame.at3(ch, row, col)));
            }
        }
    }
    fs::write(path, bytes).map_err(|e| io_err(path, e))
}

/// Reads a binary PGM/PPM produced by `write_frame` (or any 8-bit file in
/// those formats).
pub fn read_frame(path: &Path) -> Result<Tensor> {
    let mut raw = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut raw))
        .map_err(|e| io_err(path, e))?;

    let mut pos = 0;
    let mut token = || -> Result<String> {
        // Skip whitespace and `#` comment lines.
        loop {
            while pos < raw.len() && raw[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < raw.len() && raw[pos] == b'#' {
                while pos < raw.len() && raw[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < raw.len() && !raw[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Parse(format!("{}: truncated header", path.display())));
        }
        Ok(String::from_utf8_lossy(&raw[start..pos]).into_owned())
    };

    let magic = token()?;
    let channels = match magic.as_str() {
        "P5" => 1,
        "P6" => 3,
        other => {
            return Err(Error::Parse(format!(
                "{}: unsupported magic '{other}'",
                path.display()
            )))
        }
    };
    let parse_dim = |s: String| -> Result<usize> {
        s.parse()
            .map_err(|_| Error::Parse(format!("{}: bad header field '{s}'", path.display())))
    };
    let w = parse_dim(token()?)?;
    let h = parse_dim(token()?)?;
    let maxval = parse_dim(token()?)?;
    if maxval != 255 {
        return Err(Error::Parse(format!(
            "{}: only maxval 255 supported, got {maxval}",
            path.display()
        )));
    }
    pos += 1; // single whitespace byte after maxval
    let need = w * h * channels;
    if raw.len() < pos + need {
        return Err(Error::Parse(format!(
            "{}: expected {need} pixel bytes, found {}",
            path.display(),
            raw.len().saturating_sub(pos)
        )));
    }

    let mut frame = Tensor::zeros(&[channels, h, w]);
    let mut idx = pos;
    for row in 0..h {
        for col in 0..w {
            for ch in 0..channels {
                *frame.at3_mut(ch, row, col) = dequantize(raw[idx]);
                idx += 1;
            }
        }
    }
    Ok(frame)
}

/// Writes frames as `frame_000.pgm`/`.ppm`, returning the paths.
pub fn write_sequence(dir: &Path, frames: &[Tensor]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut paths = Vec::with_capacity(frames.len());
    for (i, frame) in frames.iter().enumerate() {
        let ext = if frame.shape()[0] == 1 { "pgm" } else { "ppm" };
        let path = dir.join(format!("frame_{i:03}.{ext}"));
        write_frame(&path, frame)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Loads every `.pgm`/`.ppm` in a directory, sorted by file name.
pub fn read_sequence(dir: &Path) -> Result<Vec<Tensor>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| io_err(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()),
                Some("pgm") | Some("ppm")
            )
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Parse(format!(
            "{}: no .pgm/.ppm frames found",
            dir.display()
        )));
    }
    paths.iter().map(|p| read_frame(p)).collect()
}

fn push_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u32).to_le_bytes());
}

/// Serializes weights: magic, architecture header (latent width, initial
/// channels, deconv channel list), then the f64 little-endian payload in
/// fixed order (fc, then each deconv kernel).
pub fn save_weights(path: &Path, weights: &Weights) -> Result<()> {
    let arch = weights.arch();
    let mut out = Vec::new();
    out.extend_from_slice(WEIGHTS_MAGIC);
    push_u32(&mut out, arch.latent_dim);
    push_u32(&mut out, arch.initial_channels);
    push_u32(&mut out, arch.deconv_channels.len());
    for &c in &arch.deconv_channels {
        push_u32(&mut out, c);
    }
    let mut write_tensor = |t: &Tensor| {
        for &x in t.as_slice() {
            out.extend_from_slice(&x.to_le_bytes());
        }
    };
    write_tensor(&weights.fc);
    for k in &weights.kernels {
        write_tensor(k);
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

pub fn load_weights(path: &Path) -> Result<Weights> {
    let raw = fs::read(path).map_err(|e| io_err(path, e))?;
    let bad = |msg: &str| Error::Parse(format!("{}: {msg}", path.display()));
    if raw.len() < WEIGHTS_MAGIC.len() || &raw[..WEIGHTS_MAGIC.len()] != WEIGHTS_MAGIC {
        return Err(bad("not a GENREC1 weights file"));
    }
    let mut pos = WEIGHTS_MAGIC.len();
    let take_u32 = |pos: &mut usize| -> Result<usize> {
        if *pos + 4 > raw.len() {
            return Err(bad("truncated header"));
        }
        let v = u32::from_le_bytes(raw[*pos..*pos + 4].try_into().unwrap()) as usize;
        *pos += 4;
        Ok(v)
    };
    let latent_dim = take_u32(&mut pos)?;
    let initial_channels = take_u32(&mut pos)?;
    let layer_count = take_u32(&mut pos)?;
    if layer_count == 0 || layer_count > 16 {
        return Err(bad("implausible layer count"));
    }
    let mut deconv_channels = Vec::with_capacity(layer_count);
    for _ in 0..layer_count {
        deconv_channels.push(take_u32(&mut pos)?);
    }
    let arch = Architecture::new(latent_dim, initial_channels, deconv_channels)
        .map_err(|e| bad(&format!("bad architecture header: {e}")))?;

    let expected = param_count(&arch);
    if raw.len() - pos != expected * 8 {
        return Err(bad(&format!(
            "payload holds {} values, architecture wants {expected}",
            (raw.len() - pos) / 8
        )));
    }
    let mut values = raw[pos..]
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().unwrap()));

    let counts = arch.layer_param_counts();
    let mut take_tensor = |shape: Vec<usize>, count: usize| -> Result<Tensor> {
        let data: Vec<f64> = values.by_ref().take(count).collect();
        Tensor::new(shape, data)
    };
    let fc = take_tensor(
        vec![
            arch.latent_dim,
            arch.initial_channels * crate::generator::INITIAL_GRID * crate::generator::INITIAL_GRID,
        ],
        counts[0],
    )?;
    let mut kernels = Vec::with_capacity(arch.layer_count());
    for l in 0..arch.layer_count() {
        let in_ch = if l == 0 {
            arch.initial_channels
        } else {
            arch.deconv_channels[l - 1]
        };
        kernels.push(take_tensor(
            vec![in_ch, arch.deconv_channels[l], crate::generator::KERNEL, crate::generator::KERNEL],
            counts[l + 1],
        )?);
    }
    Weights::from_parts(arch, fc, kernels)
}

/// `epoch,data_loss` rows.
pub fn residual_csv(history: &[f64]) -> String {
    let mut out = String::from("epoch,data_loss\n");
    for (i, loss) in history.iter().enumerate() {
        out.push_str(&format!("{i},{loss}\n"));
    }
    out
}

/// Sorted `key = value` manifest text.
pub fn manifest_text(pairs: &[(String, String)]) -> String {
    let mut sorted: Vec<&(String, String)> = pairs.iter().collect();
    sorted.sort_by(|a, b| a.0.cmp(&b.0));
    let mut out = String::new();
    for (k, v) in sorted {
        out.push_str(&format!("{k} = {v}\n"));
    }
    out
}

/// Writes with a trailing newline guarantee and directory creation.
pub fn write_report(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let path = dir.join(name);
    let mut f = fs::File::create(&path).map_err(|e| io_err(&path, e))?;
    f.write_all(contents.as_bytes()).map_err(|e| io_err(&path, e))?;
    if !contents.ends_with('\n') {
        f.write_all(b"\n").map_err(|e| io_err(&path, e))?;
    }
    Ok(path)
}
