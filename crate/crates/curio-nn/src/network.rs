use crate::error::{NnError, Result};
use crate::layer::{self, Activation, ConvDims, LayerSpec};
use crate::tensor::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Weight and bias of one layer (both empty for parameter-free layers).
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl LayerParams {
    fn empty() -> Self {
        Self {
            weight: Tensor::zeros(vec![0]),
            bias: Tensor::zeros(vec![0]),
        }
    }
}

/// Per-layer parameter gradients, shaped like the network's params.
#[derive(Debug, Clone)]
pub struct NetGrads {
    pub layers: Vec<LayerParams>,
}

impl NetGrads {
    pub fn zeros_like(net: &Network) -> Self {
        let layers = net
            .params
            .iter()
            .map(|p| LayerParams {
                weight: p.weight.zeros_like(),
                bias: p.bias.zeros_like(),
            })
            .collect();
        Self { layers }
    }

    /// self += alpha * other
    pub fn axpy(&mut self, alpha: f64, other: &NetGrads) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weight.axpy(alpha, &b.weight);
            a.bias.axpy(alpha, &b.bias);
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for g in self.layers.iter_mut() {
            g.weight.scale(alpha);
            g.bias.scale(alpha);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|g| g.weight.is_finite() && g.bias.is_finite())
    }
}

/// Cached per-layer inputs/outputs of one forward pass, consumed by `backward`.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// io[0] is the network input; io[i + 1] is the output of layer i.
    pub(crate) io: Vec<Tensor>,
}

impl ForwardTrace {
    pub fn input(&self) -> &Tensor {
        &self.io[0]
    }

    pub fn output(&self) -> &Tensor {
        self.io.last().expect("trace holds at least the input")
    }
}

/// Fixed sequential stack of layers with explicit parameters.
///
/// Two networks built from the same spec and seed are bit-identical.
#[derive(Debug, Clone)]
pub struct Network {
    spec: Vec<LayerSpec>,
    params: Vec<LayerParams>,
    seed: u64,
}

impl Network {
    /// Builds the network and initializes parameters: weights uniform in
    /// [-1/sqrt(fan_in), +1/sqrt(fan_in)], biases zero.
    pub fn new(spec: Vec<LayerSpec>, seed: u64) -> Result<Self> {
        if spec.is_empty() {
            return Err(NnError::InvalidSpec("network has no layers".into()));
        }
        for (i, layer) in spec.iter().enumerate() {
            layer.validate(i)?;
            if i > 0 {
                let prev_out = spec[i - 1].output_len();
                let this_in = layer.input_len();
                if prev_out != this_in {
                    return Err(NnError::InvalidSpec(format!(
                        "layer {i} ({}) expects {this_in} inputs but layer {} produces {prev_out}",
                        layer.kind_name(),
                        i - 1
                    )));
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = spec
            .iter()
            .map(|layer| {
                if !layer.has_params() {
                    return LayerParams::empty();
                }
                let (wshape, bshape) = layer.param_shapes();
                let bound = 1.0 / (layer.fan_in() as f64).sqrt();
                let n: usize = wshape.iter().product();
                let data: Vec<f64> = (0..n)
                    .map(|_| bound * (2.0 * rng.gen::<f64>() - 1.0))
                    .collect();
                LayerParams {
                    weight: Tensor::new(wshape, data).expect("consistent shapes"),
                    bias: Tensor::zeros(bshape),
                }
            })
            .collect();
        Ok(Self { spec, params, seed })
    }

    pub fn spec(&self) -> &[LayerSpec] {
        &self.spec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn params(&self) -> &[LayerParams] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [LayerParams] {
        &mut self.params
    }

    pub(crate) fn restore(spec: Vec<LayerSpec>, params: Vec<LayerParams>, seed: u64) -> Self {
        Self { spec, params, seed }
    }

    pub fn num_params(&self) -> usize {
        self.params
            .iter()
            .map(|p| p.weight.len() + p.bias.len())
            .sum()
    }

    pub fn input_shape(&self) -> Vec<usize> {
        self.spec[0].input_shape()
    }

    pub fn output_shape(&self) -> Vec<usize> {
        self.spec.last().expect("nonempty").output_shape()
    }

    pub fn input_len(&self) -> usize {
        self.spec[0].input_len()
    }

    pub fn output_len(&self) -> usize {
        self.spec.last().expect("nonempty").output_len()
    }

    /// Runs all layers, caching every layer's output for `backward`.
    pub fn forward(&self, input: &Tensor) -> Result<(Tensor, ForwardTrace)> {
        self.forward_owned(input.clone())
    }

    /// Like `forward`, but takes ownership of the input buffer (the trace
    /// would otherwise have to clone it).
    pub fn forward_owned(&self, input: Tensor) -> Result<(Tensor, ForwardTrace)> {
        if input.len() != self.input_len() {
            return Err(NnError::ShapeMismatch {
                location: format!("layer 0 ({}) input", self.spec[0].kind_name()),
                expected: self.input_shape(),
                got: input.shape.clone(),
            });
        }
        let mut io = Vec::with_capacity(self.spec.len() + 1);
        io.push(input);
        for (i, layer) in self.spec.iter().enumerate() {
            let x = &io[i];
            let mut y = Tensor::zeros(layer.output_shape());
            self.layer_forward(i, layer, &x.data, &mut y.data);
            io.push(y);
        }
        let output = io.last().expect("nonempty").clone();
        Ok((output, ForwardTrace { io }))
    }

    /// Trace-free forward pass (two ping-pong buffers, no caching).
    pub fn eval(&self, input: &Tensor) -> Result<Tensor> {
        if input.len() != self.input_len() {
            return Err(NnError::ShapeMismatch {
                location: format!("layer 0 ({}) input", self.spec[0].kind_name()),
                expected: self.input_shape(),
                got: input.shape.clone(),
            });
        }
        let mut cur = input.data.clone();
        let mut next = Vec::new();
        for (i, layer) in self.spec.iter().enumerate() {
            next.clear();
            next.resize(layer.output_len(), 0.0);
            self.layer_forward(i, layer, &cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        Tensor::new(self.output_shape(), cur)
    }

    fn layer_forward(&self, index: usize, layer: &LayerSpec, x: &[f64], y: &mut [f64]) {
        match layer {
            LayerSpec::Dense { activation, .. } => {
                let p = &self.params[index];
                layer::dense_forward(&p.weight, &p.bias, x, y, *activation);
            }
            LayerSpec::Conv2d { activation, .. } => {
                let p = &self.params[index];
                let dims = ConvDims::from_spec(layer);
                layer::conv2d_forward(&dims, &p.weight, &p.bias, x, y, *activation);
            }
            LayerSpec::Activation { activation, .. } => {
                for (out, inp) in y.iter_mut().zip(x) {
                    *out = activation.apply(*inp);
                }
            }
            LayerSpec::MeanPool2 {
                channels,
                in_height,
                in_width,
            } => layer::mean_pool2_forward(*channels, *in_height, *in_width, x, y),
            LayerSpec::UpsampleNearest2 {
                channels,
                in_height,
                in_width,
            } => layer::upsample2_forward(*channels, *in_height, *in_width, x, y),
        }
    }

    /// Backpropagates `grad_output` through the cached forward pass.
    ///
    /// Returns parameter gradients and the gradient wrt the network input
    /// (which is what lets callers chain backward passes across networks).
    pub fn backward(&self, trace: &ForwardTrace, grad_output: &Tensor) -> Result<(NetGrads, Tensor)> {
        let mut grads = NetGrads::zeros_like(self);
        let grad_input = self.backward_into(trace, grad_output, &mut grads)?;
        Ok((grads, grad_input))
    }

    /// Like `backward` but accumulates parameter gradients into `grads`.
    pub fn backward_into(
        &self,
        trace: &ForwardTrace,
        grad_output: &Tensor,
        grads: &mut NetGrads,
    ) -> Result<Tensor> {
        if trace.io.len() != self.spec.len() + 1 {
            return Err(NnError::TraceMismatch(format!(
                "trace has {} cached buffers, network expects {}",
                trace.io.len(),
                self.spec.len() + 1
            )));
        }
        for (i, layer) in self.spec.iter().enumerate() {
            if trace.io[i].len() != layer.input_len() || trace.io[i + 1].len() != layer.output_len()
            {
                return Err(NnError::TraceMismatch(format!(
                    "cached buffers do not match layer {i} ({})",
                    layer.kind_name()
                )));
            }
        }
        if grad_output.len() != self.output_len() {
            return Err(NnError::ShapeMismatch {
                location: "backward grad_output".into(),
                expected: self.output_shape(),
                got: grad_output.shape.clone(),
            });
        }

        let mut grad = grad_output.data.clone();
        for i in (0..self.spec.len()).rev() {
            let layer = &self.spec[i];
            let x = &trace.io[i];
            let y = &trace.io[i + 1];
            let mut grad_in = vec![0.0; layer.input_len()];
            match layer {
                LayerSpec::Dense { activation, .. } => {
                    apply_activation_grad(*activation, &y.data, &mut grad);
                    let p = &self.params[i];
                    let g = &mut grads.layers[i];
                    layer::dense_backward(&p.weight, &x.data, &grad, &mut g.weight, &mut g.bias, &mut grad_in);
                }
                LayerSpec::Conv2d { activation, .. } => {
                    apply_activation_grad(*activation, &y.data, &mut grad);
                    let p = &self.params[i];
                    let g = &mut grads.layers[i];
                    let dims = ConvDims::from_spec(layer);
                    layer::conv2d_backward(&dims, &p.weight, &x.data, &grad, &mut g.weight, &mut g.bias, &mut grad_in);
                }
                LayerSpec::Activation { activation, .. } => {
                    apply_activation_grad(*activation, &y.data, &mut grad);
                    grad_in.copy_from_slice(&grad);
                }
                LayerSpec::MeanPool2 {
                    channels,
                    in_height,
                    in_width,
                } => layer::mean_pool2_backward(*channels, *in_height, *in_width, &grad, &mut grad_in),
                LayerSpec::UpsampleNearest2 {
                    channels,
                    in_height,
                    in_width,
                } => layer::upsample2_backward(*channels, *in_height, *in_width, &grad, &mut grad_in),
            }
            grad = grad_in;
        }
        Tensor::new(self.input_shape(), grad)
    }

    /// Plain gradient-descent step: params -= lr * grads.
    pub fn apply_gradients_sgd(&mut self, grads: &NetGrads, lr: f64) -> Result<()> {
        for (i, (p, g)) in self.params.iter_mut().zip(&grads.layers).enumerate() {
            if !g.weight.is_finite() || !g.bias.is_finite() {
                return Err(NnError::NonFiniteGradient { layer: i });
            }
            p.weight.axpy(-lr, &g.weight);
            p.bias.axpy(-lr, &g.bias);
        }
        Ok(())
    }

    /// theta' <- tau * theta + (1 - tau) * theta', where self is theta'.
    pub fn soft_update_from(&mut self, source: &Network, tau: f64) {
        for (t, s) in self.params.iter_mut().zip(&source.params) {
            for (tv, sv) in t.weight.data.iter_mut().zip(&s.weight.data) {
                *tv = tau * sv + (1.0 - tau) * *tv;
            }
            for (tv, sv) in t.bias.data.iter_mut().zip(&s.bias.data) {
                *tv = tau * sv + (1.0 - tau) * *tv;
            }
        }
    }
}

#[inline]
fn apply_activation_grad(activation: Activation, y: &[f64], grad: &mut [f64]) {
    if activation == Activation::Linear {
        return;
    }
    for (g, &out) in grad.iter_mut().zip(y) {
        *g *= activation.deriv_from_output(out);
    }
}
