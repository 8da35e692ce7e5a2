use std::fmt;

use rand::Rng;

use super::tensor::{gemm, Tensor2};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Activation {
    Relu,
    Tanh,
    Sigmoid,
    Identity,
}

impl Activation {
    pub const ALL: [Activation; 4] = [
        Activation::Relu,
        Activation::Tanh,
        Activation::Sigmoid,
        Activation::Identity,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Sigmoid => "sigmoid",
            Activation::Identity => "identity",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.tag() == tag)
    }

    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Identity => z,
        }
    }

    /// Derivative at pre-activation `z` whose output is `y`.
    #[inline]
    fn derivative(self, z: f64, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Identity => 1.0,
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Borrowed view of one dense layer: `y = act(W x + b)` with `W` stored
/// row-major as `outputs x inputs`.
#[derive(Clone, Copy, Debug)]
pub struct LayerView<'a> {
    pub inputs: usize,
    pub outputs: usize,
    pub weight: &'a [f64],
    pub bias: &'a [f64],
    pub activation: Activation,
}

/// A fully connected feed-forward network.
///
/// All parameters live in one flat buffer, layer by layer, each layer's
/// weights (row-major) followed by its bias. Optimizers, soft updates and
/// checkpoints all operate on that buffer directly; gradients use the same
/// layout.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    dims: Vec<usize>,
    activations: Vec<Activation>,
    params: Vec<f64>,
}

/// Intermediate values of a batched forward pass, needed by [`Mlp::backward_batch`].
#[derive(Clone, Debug)]
pub struct ForwardCache {
    input: Tensor2,
    pre: Vec<Tensor2>,
    post: Vec<Tensor2>,
}

impl ForwardCache {
    pub fn output(&self) -> &Tensor2 {
        self.post.last().unwrap_or(&self.input)
    }

    pub fn input(&self) -> &Tensor2 {
        &self.input
    }

    /// Pre-activation values of every layer.
    pub fn pre_activations(&self) -> &[Tensor2] {
        &self.pre
    }
}

fn check_architecture(dims: &[usize], activations: &[Activation]) -> Result<()> {
    if dims.len() < 2 {
        return Err(Error::Architecture(
            "a network needs at least an input and an output dimension".into(),
        ));
    }
    if activations.len() != dims.len() - 1 {
        return Err(Error::Architecture(format!(
            "{} layers but {} activation tags",
            dims.len() - 1,
            activations.len()
        )));
    }
    if dims.iter().any(|&d| d == 0) {
        return Err(Error::Architecture("layer widths must be positive".into()));
    }
    Ok(())
}

pub(crate) fn param_count_for(dims: &[usize]) -> usize {
    dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl Mlp {
    /// Network with every parameter zero.
    pub fn zeros(dims: &[usize], activations: &[Activation]) -> Result<Self> {
        check_architecture(dims, activations)?;
        Ok(Self {
            dims: dims.to_vec(),
            activations: activations.to_vec(),
            params: vec![0.0; param_count_for(dims)],
        })
    }

    /// Weights and biases drawn uniformly from `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`.
    pub fn new<R: Rng + ?Sized>(
        dims: &[usize],
        activations: &[Activation],
        rng: &mut R,
    ) -> Result<Self> {
        let mut net = Self::zeros(dims, activations)?;
        let mut offset = 0;
        for w in dims.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            let n = fan_in * fan_out + fan_out;
            for p in &mut net.params[offset..offset + n] {
                *p = rng.random_range(-bound..=bound);
            }
            offset += n;
        }
        Ok(net)
    }

    pub fn from_params(dims: &[usize], activations: &[Activation], params: Vec<f64>) -> Result<Self> {
        check_architecture(dims, activations)?;
        let expected = param_count_for(dims);
        if params.len() != expected {
            return Err(Error::Dimension {
                what: "parameter vector",
                expected,
                found: params.len(),
            });
        }
        Ok(Self {
            dims: dims.to_vec(),
            activations: activations.to_vec(),
            params,
        })
    }

    /// Hidden layers of width `hidden` with `hidden_act`, then a single
    /// output layer with `output_act`.
    pub fn with_hidden<R: Rng + ?Sized>(
        input: usize,
        hidden: &[usize],
        output: usize,
        hidden_act: Activation,
        output_act: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        let mut dims = Vec::with_capacity(hidden.len() + 2);
        dims.push(input);
        dims.extend_from_slice(hidden);
        dims.push(output);
        let mut acts = vec![hidden_act; hidden.len()];
        acts.push(output_act);
        Self::new(&dims, &acts, rng)
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    pub fn num_layers(&self) -> usize {
        self.activations.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn same_architecture(&self, other: &Mlp) -> bool {
        self.dims == other.dims && self.activations == other.activations
    }

    pub fn ensure_same_architecture(&self, other: &Mlp) -> Result<()> {
        if self.same_architecture(other) {
            Ok(())
        } else {
            Err(Error::Architecture(format!(
                "{} vs {}",
                self.describe(),
                other.describe()
            )))
        }
    }

    /// Compact architecture string, e.g. `3-64-64-1 relu,relu,tanh`.
    pub fn describe(&self) -> String {
        let dims: Vec<String> = self.dims.iter().map(|d| d.to_string()).collect();
        let acts: Vec<&str> = self.activations.iter().map(|a| a.tag()).collect();
        format!("{} {}", dims.join("-"), acts.join(","))
    }

    fn layer_offset(&self, k: usize) -> usize {
        param_count_for(&self.dims[..=k])
    }

    pub fn layer(&self, k: usize) -> LayerView<'_> {
        let (inputs, outputs) = (self.dims[k], self.dims[k + 1]);
        let start = self.layer_offset(k);
        let w_end = start + inputs * outputs;
        LayerView {
            inputs,
            outputs,
            weight: &self.params[start..w_end],
            bias: &self.params[w_end..w_end + outputs],
            activation: self.activations[k],
        }
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        let x = Tensor2::from_vec(1, input.len(), input.to_vec())?;
        Ok(self.forward_batch(&x)?.into_vec())
    }

    /// Evaluates every row of `input`.
    pub fn forward_batch(&self, input: &Tensor2) -> Result<Tensor2> {
        self.check_input(input)?;
        let mut x = input.clone();
        for k in 0..self.num_layers() {
            let mut z = self.affine(k, &x);
            let act = self.activations[k];
            for v in z.data_mut() {
                *v = act.apply(*v);
            }
            x = z;
        }
        Ok(x)
    }

    pub fn forward_cached(&self, input: &Tensor2) -> Result<ForwardCache> {
        self.check_input(input)?;
        let mut pre = Vec::with_capacity(self.num_layers());
        let mut post: Vec<Tensor2> = Vec::with_capacity(self.num_layers());
        for k in 0..self.num_layers() {
            let z = self.affine(k, post.last().unwrap_or(input));
            let act = self.activations[k];
            let mut y = z.clone();
            for v in y.data_mut() {
                *v = act.apply(*v);
            }
            pre.push(z);
            post.push(y);
        }
        Ok(ForwardCache {
            input: input.clone(),
            pre,
            post,
        })
    }

    fn check_input(&self, input: &Tensor2) -> Result<()> {
        if input.cols() != self.input_dim() {
            return Err(Error::Dimension {
                what: "network input",
                expected: self.input_dim(),
                found: input.cols(),
            });
        }
        Ok(())
    }

    /// `x W^T + b` for layer `k`.
    fn affine(&self, k: usize, x: &Tensor2) -> Tensor2 {
        let layer = self.layer(k);
        let batch = x.rows();
        let mut z = Tensor2::zeros(batch, layer.outputs);
        gemm(
            batch,
            layer.inputs,
            layer.outputs,
            x.data(),
            false,
            layer.weight,
            true,
            z.data_mut(),
            0.0,
        );
        for i in 0..batch {
            for (v, b) in z.row_mut(i).iter_mut().zip(layer.bias) {
                *v += b;
            }
        }
        z
    }

    /// Reverse pass for a whole batch.
    ///
    /// `upstream` holds dL/d(output) per row. Parameter gradients are summed
    /// over rows and *added* into `param_grads` when it is given, so several
    /// batches can accumulate into one buffer. Returns dL/d(input) per row.
    pub fn backward_batch(
        &self,
        cache: &ForwardCache,
        upstream: &Tensor2,
        mut param_grads: Option<&mut [f64]>,
    ) -> Result<Tensor2> {
        let batch = cache.input.rows();
        if upstream.cols() != self.output_dim() || upstream.rows() != batch {
            return Err(Error::Dimension {
                what: "upstream gradient",
                expected: self.output_dim(),
                found: upstream.cols(),
            });
        }
        if let Some(g) = param_grads.as_deref() {
            if g.len() != self.param_count() {
                return Err(Error::Dimension {
                    what: "parameter gradient buffer",
                    expected: self.param_count(),
                    found: g.len(),
                });
            }
        }
        let mut grad = upstream.clone();
        for k in (0..self.num_layers()).rev() {
            let layer = self.layer(k);
            let act = layer.activation;
            let pre = &cache.pre[k];
            let post = &cache.post[k];
            for ((g, &z), &y) in grad.data_mut().iter_mut().zip(pre.data()).zip(post.data()) {
                *g *= act.derivative(z, y);
            }
            let x = if k == 0 { &cache.input } else { &cache.post[k - 1] };
            if let Some(buf) = param_grads.as_deref_mut() {
                let start = self.layer_offset(k);
                let w_len = layer.inputs * layer.outputs;
                let (dw, rest) = buf[start..].split_at_mut(w_len);
                gemm(
                    layer.outputs,
                    batch,
                    layer.inputs,
                    grad.data(),
                    true,
                    x.data(),
                    false,
                    dw,
                    1.0,
                );
                let db = &mut rest[..layer.outputs];
                for i in 0..batch {
                    for (d, g) in db.iter_mut().zip(grad.row(i)) {
                        *d += g;
                    }
                }
            }
            let mut dx = Tensor2::zeros(batch, layer.inputs);
            gemm(
                batch,
                layer.outputs,
                layer.inputs,
                grad.data(),
                false,
                layer.weight,
                false,
                dx.data_mut(),
                0.0,
            );
            grad = dx;
        }
        Ok(grad)
    }

    /// Single-sample reverse pass: `(parameter gradients, input gradient)`.
    pub fn backward(&self, input: &[f64], upstream_grad: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        if upstream_grad.len() != self.output_dim() {
            return Err(Error::Dimension {
                what: "upstream gradient",
                expected: self.output_dim(),
                found: upstream_grad.len(),
            });
        }
        let x = Tensor2::from_vec(1, input.len(), input.to_vec())?;
        let cache = self.forward_cached(&x)?;
        let up = Tensor2::from_vec(1, upstream_grad.len(), upstream_grad.to_vec())?;
        let mut grads = vec![0.0; self.param_count()];
        let dx = self.backward_batch(&cache, &up, Some(&mut grads))?;
        Ok((grads, dx.into_vec()))
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    /// Largest absolute parameter difference to a same-shaped network.
    pub fn max_param_gap(&self, other: &Mlp) -> Result<f64> {
        self.ensure_same_architecture(other)?;
        Ok(self
            .params
            .iter()
            .zip(&other.params)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// Polyak averaging: `target <- tau * source + (1 - tau) * target`.
pub fn soft_update(target: &mut Mlp, source: &Mlp, tau: f64) -> Result<()> {
    target.ensure_same_architecture(source)?;
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::config("tau", format!("{tau} is outside [0, 1]")));
    }
    for (t, s) in target.params.iter_mut().zip(&source.params) {
        *t = tau * s + (1.0 - tau) * *t;
    }
    Ok(())
}
