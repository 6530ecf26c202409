//! The deconvolutional generator: a fully-connected projection onto a 4×4
//! grid followed by stride-2 transposed convolutions, ReLU between layers and
//! tanh at the output. No bias terms, no batch normalization.
//!
//! Forward passes record a tape of pre- and post-activations so the exact
//! reverse-mode gradient with respect to the latent code and every weight
//! tensor can be computed by hand.

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::tensor::Tensor;

/// Spatial edge of the grid the latent code is projected onto.
pub const INITIAL_GRID: usize = 4;
/// Transposed-convolution kernel edge.
pub const KERNEL: usize = 4;
/// Transposed-convolution stride; each layer doubles the spatial size.
pub const STRIDE: usize = 2;
/// Transposed-convolution padding.
pub const PADDING: usize = 1;

/// Network shape: latent width, initial grid channels, and the output
/// channel count of each transposed-convolution layer (the last entry is the
/// image channel count).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    pub latent_dim: usize,
    pub initial_channels: usize,
    pub deconv_channels: Vec<usize>,
}

impl Architecture {
    pub fn new(latent_dim: usize, initial_channels: usize, deconv_channels: Vec<usize>) -> Result<Self> {
        if latent_dim == 0 || initial_channels == 0 {
            return Err(Error::invalid("latent_dim and initial_channels must be positive"));
        }
        if deconv_channels.is_empty() || deconv_channels.iter().any(|&c| c == 0) {
            return Err(Error::invalid("deconv_channels must be positive and nonempty"));
        }
        Ok(Architecture {
            latent_dim,
            initial_channels,
            deconv_channels,
        })
    }

    /// Grayscale 64×64 preset: k=32, 256×4×4 grid, deconv 128/64/32/1.
    pub fn grayscale() -> Self {
        Architecture {
            latent_dim: 32,
            initial_channels: 256,
            deconv_channels: vec![128, 64, 32, 1],
        }
    }

    /// RGB 64×64 preset: k=256, 512×4×4 grid, deconv 256/128/64/3.
    pub fn rgb() -> Self {
        Architecture {
            latent_dim: 256,
            initial_channels: 512,
            deconv_channels: vec![256, 128, 64, 3],
        }
    }

    /// RGB output at grayscale scale: k=32, 256×4×4 grid, deconv 128/64/32/3.
    pub fn rgb_small() -> Self {
        Architecture {
            latent_dim: 32,
            initial_channels: 256,
            deconv_channels: vec![128, 64, 32, 3],
        }
    }

    /// Small 16×16 network for gradient checks and planted-recovery tests.
    pub fn tiny() -> Self {
        Architecture {
            latent_dim: 4,
            initial_channels: 8,
            deconv_channels: vec![4, 1],
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "grayscale" => Ok(Self::grayscale()),
            "rgb" => Ok(Self::rgb()),
            "rgb-small" => Ok(Self::rgb_small()),
            "tiny" => Ok(Self::tiny()),
            other => Err(Error::invalid(format!("unknown architecture preset '{other}'"))),
        }
    }

    pub fn layer_count(&self) -> usize {
        self.deconv_channels.len()
    }

    /// Output spatial edge: each deconv layer doubles the 4×4 grid.
    pub fn output_size(&self) -> usize {
        INITIAL_GRID << self.deconv_channels.len()
    }

    pub fn output_channels(&self) -> usize {
        *self.deconv_channels.last().unwrap()
    }

    pub fn output_shape(&self) -> [usize; 3] {
        [self.output_channels(), self.output_size(), self.output_size()]
    }

    /// Input channels of deconv layer `l`.
    fn in_channels(&self, l: usize) -> usize {
        if l == 0 {
            self.initial_channels
        } else {
            self.deconv_channels[l - 1]
        }
    }

    /// Element count of every weight tensor, fc first, then each deconv
    /// kernel in order.
    pub fn layer_param_counts(&self) -> Vec<usize> {
        let mut counts =
            vec![self.latent_dim * self.initial_channels * INITIAL_GRID * INITIAL_GRID];
        for l in 0..self.layer_count() {
            counts.push(self.in_channels(l) * self.deconv_channels[l] * KERNEL * KERNEL);
        }
        counts
    }
}

/// Total number of weights in the network.
pub fn param_count(arch: &Architecture) -> usize {
    arch.layer_param_counts().iter().sum()
}

/// All weight tensors of a generator.
#[derive(Debug, Clone)]
pub struct Weights {
    arch: Architecture,
    /// latent_dim × (initial_channels·16) projection.
    pub fc: Tensor,
    /// One kernel per deconv layer, shaped [in_channels, out_channels, 4, 4].
    pub kernels: Vec<Tensor>,
}

impl Weights {
    pub fn zeros(arch: &Architecture) -> Self {
        let fc = Tensor::zeros(&[
            arch.latent_dim,
            arch.initial_channels * INITIAL_GRID * INITIAL_GRID,
        ]);
        let kernels = (0..arch.layer_count())
            .map(|l| Tensor::zeros(&[arch.in_channels(l), arch.deconv_channels[l], KERNEL, KERNEL]))
            .collect();
        Weights {
            arch: arch.clone(),
            fc,
            kernels,
        }
    }

    /// He-style random init: every tensor i.i.d. normal with stddev
    /// sqrt(2 / fan_in), where fan_in is the latent width for the projection
    /// and in_channels·16 for each kernel.
    pub fn random(arch: &Architecture, rng: &mut SeededRng) -> Self {
        let mut w = Weights::zeros(arch);
        let fc_std = (2.0 / arch.latent_dim as f64).sqrt();
        for x in w.fc.as_mut_slice() {
            *x = fc_std * rng.next_normal();
        }
        for (l, kernel) in w.kernels.iter_mut().enumerate() {
            let fan_in = (arch.in_channels(l) * KERNEL * KERNEL) as f64;
            let std = (2.0 / fan_in).sqrt();
            for x in kernel.as_mut_slice() {
                *x = std * rng.next_normal();
            }
        }
        w
    }

    /// Rebuilds weights from raw tensors, validating every shape.
    pub fn from_parts(arch: Architecture, fc: Tensor, kernels: Vec<Tensor>) -> Result<Self> {
        let want_fc = [
            arch.latent_dim,
            arch.initial_channels * INITIAL_GRID * INITIAL_GRID,
        ];
        if fc.shape() != want_fc {
            return Err(Error::shape(format!(
                "fc shape {:?}, want {want_fc:?}",
                fc.shape()
            )));
        }
        if kernels.len() != arch.layer_count() {
            return Err(Error::shape(format!(
                "{} kernels for {} layers",
                kernels.len(),
                arch.layer_count()
            )));
        }
        for (l, k) in kernels.iter().enumerate() {
            let want = [arch.in_channels(l), arch.deconv_channels[l], KERNEL, KERNEL];
            if k.shape() != want {
                return Err(Error::shape(format!(
                    "kernel {l} shape {:?}, want {want:?}",
                    k.shape()
                )));
            }
        }
        fc.check_finite("weights fc")?;
        for k in &kernels {
            k.check_finite("weights kernel")?;
        }
        Ok(Weights { arch, fc, kernels })
    }

    pub fn arch(&self) -> &Architecture {
        &self.arch
    }

    /// Gradient-descent step: `w -= lr · g` on every tensor.
    pub fn step(&mut self, grads: &Gradients, lr: f64) -> Result<()> {
        self.fc.add_scaled(&grads.d_fc, -lr)?;
        for (k, g) in self.kernels.iter_mut().zip(&grads.d_kernels) {
            k.add_scaled(g, -lr)?;
        }
        Ok(())
    }

    /// Order-sensitive hash of every weight bit, used to pair tapes with the
    /// weights that produced them.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |x: f64| {
            h = (h ^ x.to_bits()).wrapping_mul(0x0000_0100_0000_01b3);
        };
        for &x in self.fc.as_slice() {
            eat(x);
        }
        for k in &self.kernels {
            for &x in k.as_slice() {
                eat(x);
            }
        }
        h
    }
}

/// Activations retained from one forward pass.
///
/// `pre[0]` is the reshaped fully-connected output; `pre[l+1]` is the
/// pre-activation of deconv layer `l`. `post` holds the matching activated
/// tensors, ending with the tanh image.
#[derive(Debug, Clone)]
pub struct ForwardTape {
    weights_fingerprint: u64,
    z: Vec<f64>,
    pre: Vec<Tensor>,
    post: Vec<Tensor>,
}

impl ForwardTape {
    pub fn image(&self) -> &Tensor {
        self.post.last().unwrap()
    }
}

/// Gradients of a scalar objective with respect to every weight tensor and
/// the latent code.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub d_fc: Tensor,
    pub d_kernels: Vec<Tensor>,
    pub d_z: Vec<f64>,
}

impl Gradients {
    pub fn zeros(arch: &Architecture) -> Self {
        let w = Weights::zeros(arch);
        Gradients {
            d_fc: w.fc,
            d_kernels: w.kernels,
            d_z: vec![0.0; arch.latent_dim],
        }
    }

    /// `self += other`, tensor by tensor.
    pub fn accumulate(&mut self, other: &Gradients) -> Result<()> {
        self.d_fc.add_scaled(&other.d_fc, 1.0)?;
        for (a, b) in self.d_kernels.iter_mut().zip(&other.d_kernels) {
            a.add_scaled(b, 1.0)?;
        }
        for (a, b) in self.d_z.iter_mut().zip(&other.d_z) {
            *a += b;
        }
        Ok(())
    }
}

/// Transposed convolution, kernel 4, stride 2, padding 1: the output is
/// exactly twice the input in both spatial dimensions.
pub fn deconv2d_forward(input: &Tensor, kernel: &Tensor) -> Result<Tensor> {
    let (c_in, h, w) = unpack3(input, "deconv input")?;
    let ks = kernel.shape();
    if ks.len() != 4 || ks[2] != KERNEL || ks[3] != KERNEL {
        return Err(Error::shape(format!("kernel shape {ks:?}, want [c_in, c_out, 4, 4]")));
    }
    if ks[0] != c_in {
        return Err(Error::shape(format!(
            "kernel expects {} input channels, image has {c_in}",
            ks[0]
        )));
    }
    let c_out = ks[1];
    let (oh, ow) = (STRIDE * h, STRIDE * w);
    let hw = h * w;
    let mut out = Tensor::zeros(&[c_out, oh, ow]);

    // Tap-separated form: for each of the 16 kernel taps, the contribution
    // is a (c_out × c_in)·(c_in × h·w) product scattered onto the stride-2
    // output grid. The long contiguous rows vectorize; the scatter is cheap.
    let inp = input.as_slice();
    let packed = pack_kernel_by_tap(kernel, c_in, c_out);
    let od = out.as_mut_slice();
    let mut tap_product = vec![0.0f64; c_out * hw];
    for ky in 0..KERNEL {
        for kx in 0..KERNEL {
            let tap = ky * KERNEL + kx;
            tap_product.fill(0.0);
            for (o, trow) in tap_product.chunks_exact_mut(hw).enumerate() {
                let krow = &packed[(tap * c_out + o) * c_in..(tap * c_out + o + 1) * c_in];
                for (c, &k) in krow.iter().enumerate() {
                    if k == 0.0 {
                        continue;
                    }
                    let irow = &inp[c * hw..(c + 1) * hw];
                    for (t, i) in trow.iter_mut().zip(irow) {
                        *t += k * i;
                    }
                }
            }
            let (iy_lo, iy_hi) = tap_input_range(ky, h);
            let (ix_lo, ix_hi) = tap_input_range(kx, w);
            for o in 0..c_out {
                let trow = &tap_product[o * hw..(o + 1) * hw];
                let oplane = &mut od[o * oh * ow..(o + 1) * oh * ow];
                for iy in iy_lo..iy_hi {
                    let orow = (STRIDE * iy + ky - PADDING) * ow;
                    for ix in ix_lo..ix_hi {
                        oplane[orow + STRIDE * ix + kx - PADDING] += trow[iy * w + ix];
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Kernel repacked tap-major: `[tap][out_channel][in_channel]`.
fn pack_kernel_by_tap(kernel: &Tensor, c_in: usize, c_out: usize) -> Vec<f64> {
    let ker = kernel.as_slice();
    let mut packed = vec![0.0f64; 16 * c_out * c_in];
    for c in 0..c_in {
        for o in 0..c_out {
            let base = (c * c_out + o) * 16;
            for tap in 0..16 {
                packed[(tap * c_out + o) * c_in + c] = ker[base + tap];
            }
        }
    }
    packed
}

/// Input coordinates whose tap-(k) contribution lands inside the doubled
/// output axis: `2·i + k − 1` must fall in `[0, 2·len)`.
#[inline]
fn tap_input_range(k: usize, len: usize) -> (usize, usize) {
    let lo = usize::from(k == 0);
    let hi = ((2 * len - k) / 2 + 1).min(len);
    (lo, hi)
}

/// Kernel offsets that land inside the output for input coordinate `i`:
/// `o = 2·i + k − 1` must fall in `[0, len)`.
#[inline]
fn offset_range(i: usize, len: usize) -> (usize, usize) {
    let lo = usize::from(i == 0); // k = 0 maps below 0 only when i = 0
    let hi = KERNEL.min(len + PADDING - STRIDE * i);
    (lo, hi)
}

/// Reverse of `deconv2d_forward`: gradient w.r.t. the input, plus the kernel
/// gradient when requested.
fn deconv2d_backward(
    input: &Tensor,
    kernel: &Tensor,
    d_out: &Tensor,
    want_kernel_grad: bool,
) -> Result<(Tensor, Option<Tensor>)> {
    let (c_in, h, w) = unpack3(input, "deconv input")?;
    let c_out = kernel.shape()[1];
    let (oh, ow) = (STRIDE * h, STRIDE * w);
    if d_out.shape() != [c_out, oh, ow] {
        return Err(Error::shape(format!(
            "deconv cotangent shape {:?}, want [{c_out}, {oh}, {ow}]",
            d_out.shape()
        )));
    }
    let hw = h * w;

    let inp = input.as_slice();
    let dod = d_out.as_slice();
    let packed = pack_kernel_by_tap(kernel, c_in, c_out);
    let mut d_input = Tensor::zeros(&[c_in, h, w]);
    let mut d_kernel = want_kernel_grad.then(|| Tensor::zeros(kernel.shape()));

    let did = d_input.as_mut_slice();
    let mut dkd = d_kernel.as_mut().map(|t| t.as_mut_slice());
    // Per tap: gather the cotangent at this tap's output positions, then
    // d_input accumulates Kᵀ·gathered and d_kernel rows are input·gatheredᵀ
    // dot products.
    let mut gathered = vec![0.0f64; c_out * hw];
    for ky in 0..KERNEL {
        for kx in 0..KERNEL {
            let tap = ky * KERNEL + kx;
            let (iy_lo, iy_hi) = tap_input_range(ky, h);
            let (ix_lo, ix_hi) = tap_input_range(kx, w);
            gathered.fill(0.0);
            for o in 0..c_out {
                let grow = &mut gathered[o * hw..(o + 1) * hw];
                let dplane = &dod[o * oh * ow..(o + 1) * oh * ow];
                for iy in iy_lo..iy_hi {
                    let orow = (STRIDE * iy + ky - PADDING) * ow;
                    for ix in ix_lo..ix_hi {
                        grow[iy * w + ix] = dplane[orow + STRIDE * ix + kx - PADDING];
                    }
                }
            }
            for c in 0..c_in {
                let dirow = &mut did[c * hw..(c + 1) * hw];
                for o in 0..c_out {
                    let k = packed[(tap * c_out + o) * c_in + c];
                    if k == 0.0 {
                        continue;
                    }
                    let grow = &gathered[o * hw..(o + 1) * hw];
                    for (d, g) in dirow.iter_mut().zip(grow) {
                        *d += k * g;
                    }
                }
            }
            if let Some(dkd) = dkd.as_mut() {
                for c in 0..c_in {
                    let irow = &inp[c * hw..(c + 1) * hw];
                    for o in 0..c_out {
                        let grow = &gathered[o * hw..(o + 1) * hw];
                        let dot: f64 = irow.iter().zip(grow).map(|(a, b)| a * b).sum();
                        dkd[(c * c_out + o) * 16 + tap] += dot;
                    }
                }
            }
        }
    }
    Ok((d_input, d_kernel))
}

fn unpack3(t: &Tensor, what: &str) -> Result<(usize, usize, usize)> {
    let s = t.shape();
    if s.len() != 3 {
        return Err(Error::shape(format!("{what} must be [c, h, w], got {s:?}")));
    }
    Ok((s[0], s[1], s[2]))
}

/// Runs the generator on one latent code, returning the image and the tape
/// that `backward` consumes.
pub fn forward(weights: &Weights, z: &[f64]) -> Result<(Tensor, ForwardTape)> {
    let arch = &weights.arch;
    if z.len() != arch.latent_dim {
        return Err(Error::shape(format!(
            "latent code length {}, want {}",
            z.len(),
            arch.latent_dim
        )));
    }

    // Fully-connected projection: v = zᵀ·fc, reshaped to [c0, 4, 4].
    let grid = arch.initial_channels * INITIAL_GRID * INITIAL_GRID;
    let mut v = vec![0.0; grid];
    for (i, &zi) in z.iter().enumerate() {
        if zi == 0.0 {
            continue;
        }
        let row = &weights.fc.as_slice()[i * grid..(i + 1) * grid];
        for (o, &wv) in v.iter_mut().zip(row) {
            *o += zi * wv;
        }
    }
    let pre0 = Tensor::new(
        vec![arch.initial_channels, INITIAL_GRID, INITIAL_GRID],
        v,
    )?;
    let mut pre = vec![pre0];
    let mut post = vec![relu(&pre[0])];

    for (l, kernel) in weights.kernels.iter().enumerate() {
        let lin = deconv2d_forward(post.last().unwrap(), kernel)?;
        let act = if l + 1 == arch.layer_count() {
            tanh(&lin)
        } else {
            relu(&lin)
        };
        pre.push(lin);
        post.push(act);
    }

    let image = post.last().unwrap().clone();
    image.check_finite("generator output")?;
    Ok((
        image,
        ForwardTape {
            weights_fingerprint: weights.fingerprint(),
            z: z.to_vec(),
            pre,
            post,
        },
    ))
}

/// Exact reverse-mode gradients of the forward map contracted with
/// `d_image`, for the latent code and every weight tensor.
pub fn backward(weights: &Weights, tape: &ForwardTape, d_image: &Tensor) -> Result<Gradients> {
    backward_impl(weights, tape, d_image, true)
}

/// Same backward pass but skips the kernel/fc gradients; only `d_z` is
/// meaningful. Used by the latent-only solver path.
pub fn backward_latent(weights: &Weights, tape: &ForwardTape, d_image: &Tensor) -> Result<Gradients> {
    backward_impl(weights, tape, d_image, false)
}

fn backward_impl(
    weights: &Weights,
    tape: &ForwardTape,
    d_image: &Tensor,
    want_weight_grads: bool,
) -> Result<Gradients> {
    let arch = &weights.arch;
    if tape.weights_fingerprint != weights.fingerprint() {
        return Err(Error::TapeMismatch(
            "tape was recorded under different weights".to_string(),
        ));
    }
    let image = tape.image();
    if d_image.shape() != image.shape() {
        return Err(Error::shape(format!(
            "cotangent shape {:?}, output shape {:?}",
            d_image.shape(),
            image.shape()
        )));
    }

    // tanh' through the output layer: d/dx tanh = 1 − tanh².
    let mut d_cur = Tensor::zeros(image.shape());
    for ((d, &g), &y) in d_cur
        .as_mut_slice()
        .iter_mut()
        .zip(d_image.as_slice())
        .zip(image.as_slice())
    {
        *d = g * (1.0 - y * y);
    }

    let mut d_kernels: Vec<Option<Tensor>> = vec![None; arch.layer_count()];
    for l in (0..arch.layer_count()).rev() {
        let (d_input, d_kernel) =
            deconv2d_backward(&tape.post[l], &weights.kernels[l], &d_cur, want_weight_grads)?;
        d_kernels[l] = d_kernel;
        // ReLU gate into layer l's input; derivative at exactly 0 is 0.
        let mut gated = d_input;
        for (d, &p) in gated.as_mut_slice().iter_mut().zip(tape.pre[l].as_slice()) {
            if p <= 0.0 {
                *d = 0.0;
            }
        }
        d_cur = gated;
    }

    // Through the fully-connected projection.
    let grid = arch.initial_channels * INITIAL_GRID * INITIAL_GRID;
    let d_v = d_cur.as_slice();
    let mut d_z = vec![0.0; arch.latent_dim];
    let mut d_fc = Tensor::zeros(&[arch.latent_dim, grid]);
    for (i, dz) in d_z.iter_mut().enumerate() {
        let row = &weights.fc.as_slice()[i * grid..(i + 1) * grid];
        *dz = row.iter().zip(d_v).map(|(w, d)| w * d).sum();
        if want_weight_grads {
            let zi = tape.z[i];
            let d_fc_row = &mut d_fc.as_mut_slice()[i * grid..(i + 1) * grid];
            for (df, &d) in d_fc_row.iter_mut().zip(d_v) {
                *df = zi * d;
            }
        }
    }

    let d_kernels: Vec<Tensor> = d_kernels
        .into_iter()
        .enumerate()
        .map(|(l, k)| k.unwrap_or_else(|| Tensor::zeros(weights.kernels[l].shape())))
        .collect();
    Ok(Gradients { d_fc, d_kernels, d_z })
}

fn relu(t: &Tensor) -> Tensor {
    let mut out = t.clone();
    for x in out.as_mut_slice() {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    out
}

fn tanh(t: &Tensor) -> Tensor {
    let mut out = t.clone();
    for x in out.as_mut_slice() {
        *x = x.tanh();
    }
    out
}
