use crate::error::{NnError, Result};
use crate::tensor::Tensor;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
    Linear,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    z
                } else {
                    0.0
                }
            }
            Activation::Tanh => z.tanh(),
            Activation::Linear => z,
        }
    }

    /// Derivative expressed in terms of the layer OUTPUT y = apply(z).
    /// Valid for all three kinds: relu' = [y > 0], tanh' = 1 - y^2, linear' = 1.
    #[inline]
    pub fn deriv_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Linear => 1.0,
        }
    }
}

/// Layer descriptor. Convolutions operate on channel-major `[C, H, W]` buffers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Dense {
        inputs: usize,
        outputs: usize,
        activation: Activation,
    },
    Conv2d {
        in_channels: usize,
        in_height: usize,
        in_width: usize,
        filters: usize,
        kernel: usize,
        stride: usize,
        zero_pad: bool,
        activation: Activation,
    },
    /// Parameter-free elementwise activation.
    Activation { size: usize, activation: Activation },
    /// Parameter-free 2x2 mean pooling (spatial extents must be even).
    MeanPool2 {
        channels: usize,
        in_height: usize,
        in_width: usize,
    },
    /// Parameter-free 2x2 nearest-neighbor upsampling.
    UpsampleNearest2 {
        channels: usize,
        in_height: usize,
        in_width: usize,
    },
}

impl LayerSpec {
    pub fn validate(&self, index: usize) -> Result<()> {
        let fail = |msg: String| Err(NnError::InvalidSpec(format!("layer {index}: {msg}")));
        match *self {
            LayerSpec::Dense { inputs, outputs, .. } => {
                if inputs == 0 || outputs == 0 {
                    return fail("dense dimensions must be positive".into());
                }
            }
            LayerSpec::Conv2d {
                in_channels,
                in_height,
                in_width,
                filters,
                kernel,
                stride,
                zero_pad,
                ..
            } => {
                if in_channels == 0 || in_height == 0 || in_width == 0 || filters == 0 {
                    return fail("conv dimensions must be positive".into());
                }
                if kernel == 0 || stride == 0 {
                    return fail("kernel and stride must be positive".into());
                }
                if zero_pad && kernel % 2 == 0 {
                    return fail("zero-padded conv requires an odd kernel".into());
                }
                if !zero_pad && (kernel > in_height || kernel > in_width) {
                    return fail(format!(
                        "kernel {kernel} exceeds input extent {in_height}x{in_width}"
                    ));
                }
            }
            LayerSpec::Activation { size, .. } => {
                if size == 0 {
                    return fail("activation size must be positive".into());
                }
            }
            LayerSpec::MeanPool2 {
                channels,
                in_height,
                in_width,
            } => {
                if channels == 0 || in_height == 0 || in_width == 0 {
                    return fail("pool dimensions must be positive".into());
                }
                if in_height % 2 != 0 || in_width % 2 != 0 {
                    return fail("mean-pool input extents must be even".into());
                }
            }
            LayerSpec::UpsampleNearest2 {
                channels,
                in_height,
                in_width,
            } => {
                if channels == 0 || in_height == 0 || in_width == 0 {
                    return fail("upsample dimensions must be positive".into());
                }
            }
        }
        Ok(())
    }

    pub fn input_shape(&self) -> Vec<usize> {
        match *self {
            LayerSpec::Dense { inputs, .. } => vec![inputs],
            LayerSpec::Conv2d {
                in_channels,
                in_height,
                in_width,
                ..
            } => vec![in_channels, in_height, in_width],
            LayerSpec::Activation { size, .. } => vec![size],
            LayerSpec::MeanPool2 {
                channels,
                in_height,
                in_width,
            } => vec![channels, in_height, in_width],
            LayerSpec::UpsampleNearest2 {
                channels,
                in_height,
                in_width,
            } => vec![channels, in_height, in_width],
        }
    }

    pub fn output_shape(&self) -> Vec<usize> {
        match *self {
            LayerSpec::Dense { outputs, .. } => vec![outputs],
            LayerSpec::Conv2d {
                in_height,
                in_width,
                filters,
                kernel,
                stride,
                zero_pad,
                ..
            } => {
                let (oh, ow) = conv_output_extent(in_height, in_width, kernel, stride, zero_pad);
                vec![filters, oh, ow]
            }
            LayerSpec::Activation { size, .. } => vec![size],
            LayerSpec::MeanPool2 {
                channels,
                in_height,
                in_width,
            } => vec![channels, in_height / 2, in_width / 2],
            LayerSpec::UpsampleNearest2 {
                channels,
                in_height,
                in_width,
            } => vec![channels, in_height * 2, in_width * 2],
        }
    }

    pub fn input_len(&self) -> usize {
        self.input_shape().iter().product()
    }

    pub fn output_len(&self) -> usize {
        self.output_shape().iter().product()
    }

    /// (weight shape, bias shape); empty shapes for parameter-free layers.
    pub fn param_shapes(&self) -> (Vec<usize>, Vec<usize>) {
        match *self {
            LayerSpec::Dense { inputs, outputs, .. } => (vec![outputs, inputs], vec![outputs]),
            LayerSpec::Conv2d {
                in_channels,
                filters,
                kernel,
                ..
            } => (vec![filters, in_channels, kernel, kernel], vec![filters]),
            _ => (vec![0], vec![0]),
        }
    }

    pub fn fan_in(&self) -> usize {
        match *self {
            LayerSpec::Dense { inputs, .. } => inputs,
            LayerSpec::Conv2d {
                in_channels, kernel, ..
            } => in_channels * kernel * kernel,
            _ => 0,
        }
    }

    pub fn activation(&self) -> Activation {
        match *self {
            LayerSpec::Dense { activation, .. } => activation,
            LayerSpec::Conv2d { activation, .. } => activation,
            LayerSpec::Activation { activation, .. } => activation,
            _ => Activation::Linear,
        }
    }

    pub fn has_params(&self) -> bool {
        matches!(self, LayerSpec::Dense { .. } | LayerSpec::Conv2d { .. })
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            LayerSpec::Dense { .. } => "dense",
            LayerSpec::Conv2d { .. } => "conv2d",
            LayerSpec::Activation { .. } => "activation",
            LayerSpec::MeanPool2 { .. } => "mean_pool2",
            LayerSpec::UpsampleNearest2 { .. } => "upsample_nearest2",
        }
    }
}

pub(crate) fn conv_output_extent(
    h: usize,
    w: usize,
    kernel: usize,
    stride: usize,
    zero_pad: bool,
) -> (usize, usize) {
    let pad = if zero_pad { kernel / 2 } else { 0 };
    let oh = (h + 2 * pad - kernel) / stride + 1;
    let ow = (w + 2 * pad - kernel) / stride + 1;
    (oh, ow)
}

// ---------------------------------------------------------------------------
// Kernels. All buffers are flat f64 slices; convs use channel-major planes.
// ---------------------------------------------------------------------------

pub(crate) fn dense_forward(
    weight: &Tensor,
    bias: &Tensor,
    input: &[f64],
    output: &mut [f64],
    activation: Activation,
) {
    let inputs = input.len();
    for (j, out) in output.iter_mut().enumerate() {
        let row = &weight.data[j * inputs..(j + 1) * inputs];
        *out = activation.apply(bias.data[j] + dot(row, input));
    }
}

/// Four-lane unrolled dot product; the independent accumulators let the
/// compiler vectorize despite strict f64 ordering.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let chunks = n / 4;
    let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..chunks {
        let base = i * 4;
        s0 += a[base] * b[base];
        s1 += a[base + 1] * b[base + 1];
        s2 += a[base + 2] * b[base + 2];
        s3 += a[base + 3] * b[base + 3];
    }
    let mut s = (s0 + s1) + (s2 + s3);
    for i in chunks * 4..n {
        s += a[i] * b[i];
    }
    s
}

/// `grad_z` is the gradient wrt the pre-activation (activation already applied).
pub(crate) fn dense_backward(
    weight: &Tensor,
    input: &[f64],
    grad_z: &[f64],
    grad_weight: &mut Tensor,
    grad_bias: &mut Tensor,
    grad_input: &mut [f64],
) {
    let inputs = input.len();
    for (j, &g) in grad_z.iter().enumerate() {
        grad_bias.data[j] += g;
        let wrow = &weight.data[j * inputs..(j + 1) * inputs];
        let gwrow = &mut grad_weight.data[j * inputs..(j + 1) * inputs];
        for i in 0..inputs {
            gwrow[i] += g * input[i];
            grad_input[i] += g * wrow[i];
        }
    }
}

pub(crate) struct ConvDims {
    pub in_channels: usize,
    pub in_height: usize,
    pub in_width: usize,
    pub filters: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pad: usize,
    pub out_height: usize,
    pub out_width: usize,
}

impl ConvDims {
    pub fn from_spec(spec: &LayerSpec) -> ConvDims {
        match *spec {
            LayerSpec::Conv2d {
                in_channels,
                in_height,
                in_width,
                filters,
                kernel,
                stride,
                zero_pad,
                ..
            } => {
                let (oh, ow) = conv_output_extent(in_height, in_width, kernel, stride, zero_pad);
                ConvDims {
                    in_channels,
                    in_height,
                    in_width,
                    filters,
                    kernel,
                    stride,
                    pad: if zero_pad { kernel / 2 } else { 0 },
                    out_height: oh,
                    out_width: ow,
                }
            }
            _ => unreachable!("ConvDims::from_spec on non-conv layer"),
        }
    }
}

pub(crate) fn conv2d_forward(
    d: &ConvDims,
    weight: &Tensor,
    bias: &Tensor,
    input: &[f64],
    output: &mut [f64],
    activation: Activation,
) {
    let (h, w) = (d.in_height, d.in_width);
    let (oh, ow) = (d.out_height, d.out_width);
    let k = d.kernel;
    let out_plane = oh * ow;
    let in_plane = h * w;

    for f in 0..d.filters {
        let out_f = &mut output[f * out_plane..(f + 1) * out_plane];
        out_f.fill(bias.data[f]);
        for ic in 0..d.in_channels {
            let in_c = &input[ic * in_plane..(ic + 1) * in_plane];
            let wbase = ((f * d.in_channels) + ic) * k * k;
            for ky in 0..k {
                for kx in 0..k {
                    let wv = weight.data[wbase + ky * k + kx];
                    if wv == 0.0 {
                        continue;
                    }
                    accumulate_tap(d, in_c, out_f, wv, ky, kx, w, h, ow, oh);
                }
            }
        }
        for v in out_f.iter_mut() {
            *v = activation.apply(*v);
        }
    }
}

/// out[oy][ox] += wv * in[oy*s + ky - p][ox*s + kx - p] over the valid window.
#[inline]
fn accumulate_tap(
    d: &ConvDims,
    in_c: &[f64],
    out_f: &mut [f64],
    wv: f64,
    ky: usize,
    kx: usize,
    w: usize,
    h: usize,
    ow: usize,
    oh: usize,
) {
    let s = d.stride;
    let p = d.pad as isize;
    let dy = ky as isize - p;
    let dx = kx as isize - p;
    for oy in 0..oh {
        let iy = oy as isize * s as isize + dy;
        if iy < 0 || iy >= h as isize {
            continue;
        }
        let in_row = &in_c[iy as usize * w..(iy as usize + 1) * w];
        let out_row = &mut out_f[oy * ow..(oy + 1) * ow];
        if s == 1 {
            let ox_lo = (-dx).max(0) as usize;
            let ox_hi = ((w as isize - dx).min(ow as isize)).max(0) as usize;
            if ox_lo >= ox_hi {
                continue;
            }
            let src = &in_row[(ox_lo as isize + dx) as usize..(ox_hi as isize + dx) as usize];
            let dst = &mut out_row[ox_lo..ox_hi];
            for (o, x) in dst.iter_mut().zip(src) {
                *o += wv * x;
            }
        } else {
            for ox in 0..ow {
                let ix = ox as isize * s as isize + dx;
                if ix >= 0 && ix < w as isize {
                    out_row[ox] += wv * in_row[ix as usize];
                }
            }
        }
    }
}

/// `grad_z` is the gradient wrt pre-activations, laid out like the output.
pub(crate) fn conv2d_backward(
    d: &ConvDims,
    weight: &Tensor,
    input: &[f64],
    grad_z: &[f64],
    grad_weight: &mut Tensor,
    grad_bias: &mut Tensor,
    grad_input: &mut [f64],
) {
    let (h, w) = (d.in_height, d.in_width);
    let (oh, ow) = (d.out_height, d.out_width);
    let k = d.kernel;
    let s = d.stride;
    let p = d.pad as isize;
    let out_plane = oh * ow;
    let in_plane = h * w;

    for f in 0..d.filters {
        let gz_f = &grad_z[f * out_plane..(f + 1) * out_plane];
        grad_bias.data[f] += gz_f.iter().sum::<f64>();
        for ic in 0..d.in_channels {
            let in_c = &input[ic * in_plane..(ic + 1) * in_plane];
            let gin_c = &mut grad_input[ic * in_plane..(ic + 1) * in_plane];
            let wbase = ((f * d.in_channels) + ic) * k * k;
            for ky in 0..k {
                for kx in 0..k {
                    let dy = ky as isize - p;
                    let dx = kx as isize - p;
                    let wv = weight.data[wbase + ky * k + kx];
                    let mut gw = 0.0;
                    for oy in 0..oh {
                        let iy = oy as isize * s as isize + dy;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        let in_row = &in_c[iy as usize * w..(iy as usize + 1) * w];
                        let gin_row = &mut gin_c[iy as usize * w..(iy as usize + 1) * w];
                        let gz_row = &gz_f[oy * ow..(oy + 1) * ow];
                        if s == 1 {
                            let ox_lo = (-dx).max(0) as usize;
                            let ox_hi = ((w as isize - dx).min(ow as isize)).max(0) as usize;
                            if ox_lo >= ox_hi {
                                continue;
                            }
                            let ix_lo = (ox_lo as isize + dx) as usize;
                            let ix_hi = (ox_hi as isize + dx) as usize;
                            let xr = &in_row[ix_lo..ix_hi];
                            let gr = &gz_row[ox_lo..ox_hi];
                            gw += dot(xr, gr);
                            let gi = &mut gin_row[ix_lo..ix_hi];
                            for (q, g) in gi.iter_mut().zip(gr) {
                                *q += wv * g;
                            }
                        } else {
                            for ox in 0..ow {
                                let ix = ox as isize * s as isize + dx;
                                if ix >= 0 && ix < w as isize {
                                    gw += in_row[ix as usize] * gz_row[ox];
                                    gin_row[ix as usize] += wv * gz_row[ox];
                                }
                            }
                        }
                    }
                    grad_weight.data[wbase + ky * k + kx] += gw;
                }
            }
        }
    }
}

pub(crate) fn mean_pool2_forward(channels: usize, h: usize, w: usize, input: &[f64], output: &mut [f64]) {
    let (oh, ow) = (h / 2, w / 2);
    for c in 0..channels {
        let in_c = &input[c * h * w..(c + 1) * h * w];
        let out_c = &mut output[c * oh * ow..(c + 1) * oh * ow];
        for oy in 0..oh {
            let r0 = &in_c[(2 * oy) * w..(2 * oy) * w + w];
            let r1 = &in_c[(2 * oy + 1) * w..(2 * oy + 1) * w + w];
            let out_row = &mut out_c[oy * ow..(oy + 1) * ow];
            for ox in 0..ow {
                out_row[ox] = 0.25 * (r0[2 * ox] + r0[2 * ox + 1] + r1[2 * ox] + r1[2 * ox + 1]);
            }
        }
    }
}

pub(crate) fn mean_pool2_backward(channels: usize, h: usize, w: usize, grad_out: &[f64], grad_in: &mut [f64]) {
    let (oh, ow) = (h / 2, w / 2);
    for c in 0..channels {
        let go_c = &grad_out[c * oh * ow..(c + 1) * oh * ow];
        let gi_c = &mut grad_in[c * h * w..(c + 1) * h * w];
        for oy in 0..oh {
            let go_row = &go_c[oy * ow..(oy + 1) * ow];
            for ox in 0..ow {
                let g = 0.25 * go_row[ox];
                gi_c[(2 * oy) * w + 2 * ox] += g;
                gi_c[(2 * oy) * w + 2 * ox + 1] += g;
                gi_c[(2 * oy + 1) * w + 2 * ox] += g;
                gi_c[(2 * oy + 1) * w + 2 * ox + 1] += g;
            }
        }
    }
}

pub(crate) fn upsample2_forward(channels: usize, h: usize, w: usize, input: &[f64], output: &mut [f64]) {
    let ow = w * 2;
    let out_plane = 4 * h * w;
    for c in 0..channels {
        let in_c = &input[c * h * w..(c + 1) * h * w];
        let out_c = &mut output[c * out_plane..(c + 1) * out_plane];
        for y in 0..h {
            let in_row = &in_c[y * w..(y + 1) * w];
            for (x, &v) in in_row.iter().enumerate() {
                let base0 = (2 * y) * ow + 2 * x;
                let base1 = (2 * y + 1) * ow + 2 * x;
                out_c[base0] = v;
                out_c[base0 + 1] = v;
                out_c[base1] = v;
                out_c[base1 + 1] = v;
            }
        }
    }
}

pub(crate) fn upsample2_backward(channels: usize, h: usize, w: usize, grad_out: &[f64], grad_in: &mut [f64]) {
    let ow = w * 2;
    let out_plane = 4 * h * w;
    for c in 0..channels {
        let go_c = &grad_out[c * out_plane..(c + 1) * out_plane];
        let gi_c = &mut grad_in[c * h * w..(c + 1) * h * w];
        for y in 0..h {
            for x in 0..w {
                let base0 = (2 * y) * ow + 2 * x;
                let base1 = (2 * y + 1) * ow + 2 * x;
                gi_c[y * w + x] += go_c[base0] + go_c[base0 + 1] + go_c[base1] + go_c[base1 + 1];
            }
        }
    }
}
