use std::ops::Deref;

use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng;

/// Layer widths `[F, h1, ..., E]`. Hidden layers are rectified, the output
/// layer is affine only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncoderSpec {
    layer_dims: Vec<usize>,
}

impl EncoderSpec {
    pub fn new(layer_dims: Vec<usize>) -> Result<Self> {
        if layer_dims.len() < 2 {
            return Err(Error::InvalidSpec(format!(
                "need at least input and output dims, got {:?}",
                layer_dims
            )));
        }
        if let Some(pos) = layer_dims.iter().position(|&d| d == 0) {
            return Err(Error::InvalidSpec(format!(
                "layer dim {pos} is zero in {:?}",
                layer_dims
            )));
        }
        Ok(Self { layer_dims })
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    pub fn n_layers(&self) -> usize {
        self.layer_dims.len() - 1
    }

    pub fn param_count(&self) -> usize {
        self.layer_dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    /// Offsets of layer `l`'s weight block and bias block in the flat
    /// parameter vector.
    fn layer_offsets(&self, l: usize) -> (usize, usize) {
        let mut off = 0;
        for w in self.layer_dims.windows(2).take(l) {
            off += w[0] * w[1] + w[1];
        }
        let (inp, out) = (self.layer_dims[l], self.layer_dims[l + 1]);
        (off, off + inp * out)
    }
}

/// An embedding vector produced by an encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding(pub Vec<f64>);

impl Deref for Embedding {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Embedding {
    fn from(v: Vec<f64>) -> Self {
        Embedding(v)
    }
}

/// Per-layer inputs and pre-activations recorded by a forward pass.
#[derive(Debug, Clone)]
pub struct ActivationCache {
    inputs: Vec<Vec<f64>>,
    pre_activations: Vec<Vec<f64>>,
}

impl ActivationCache {
    pub fn input(&self) -> &[f64] {
        &self.inputs[0]
    }

    pub fn pre_activation(&self, layer: usize) -> &[f64] {
        &self.pre_activations[layer]
    }
}

/// Parameter gradients in the encoder's flat layout plus the gradient with
/// respect to the encoder input.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub params: Vec<f64>,
    pub input: Vec<f64>,
}

/// Multi-layer perceptron. Parameters are stored flat, layer by layer, each
/// layer as a row-major `out x in` weight block followed by its bias.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoder {
    spec: EncoderSpec,
    params: Vec<f64>,
}

impl Encoder {
    /// He-style initialization: weights ~ N(0, 2 / fan_in), zero biases.
    pub fn init(spec: &EncoderSpec, seed: u64) -> Self {
        let mut rng = rng::stream(seed, "encoder-init");
        let mut params = vec![0.0; spec.param_count()];
        for l in 0..spec.n_layers() {
            let fan_in = spec.layer_dims[l];
            let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).unwrap();
            let (w_off, b_off) = spec.layer_offsets(l);
            for w in &mut params[w_off..b_off] {
                *w = normal.sample(&mut rng);
            }
        }
        Self {
            spec: spec.clone(),
            params,
        }
    }

    pub fn zeros(spec: &EncoderSpec) -> Self {
        Self {
            spec: spec.clone(),
            params: vec![0.0; spec.param_count()],
        }
    }

    pub fn from_params(spec: &EncoderSpec, params: Vec<f64>) -> Result<Self> {
        if params.len() != spec.param_count() {
            return Err(Error::dim(
                "encoder parameters",
                spec.param_count(),
                params.len(),
            ));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("encoder parameters".into()));
        }
        Ok(Self {
            spec: spec.clone(),
            params,
        })
    }

    pub fn spec(&self) -> &EncoderSpec {
        &self.spec
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn weights(&self, layer: usize) -> &[f64] {
        let (w, b) = self.spec.layer_offsets(layer);
        &self.params[w..b]
    }

    pub fn bias(&self, layer: usize) -> &[f64] {
        let (_, b) = self.spec.layer_offsets(layer);
        &self.params[b..b + self.spec.layer_dims[layer + 1]]
    }

    pub fn weights_mut(&mut self, layer: usize) -> &mut [f64] {
        let (w, b) = self.spec.layer_offsets(layer);
        &mut self.params[w..b]
    }

    pub fn bias_mut(&mut self, layer: usize) -> &mut [f64] {
        let (_, b) = self.spec.layer_offsets(layer);
        let out = self.spec.layer_dims[layer + 1];
        &mut self.params[b..b + out]
    }

    fn affine(&self, layer: usize, x: &[f64]) -> Vec<f64> {
        let w = self.weights(layer);
        let b = self.bias(layer);
        let n_in = x.len();
        b.iter()
            .enumerate()
            .map(|(o, &bo)| {
                let row = &w[o * n_in..(o + 1) * n_in];
                bo + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect()
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.spec.input_dim() {
            return Err(Error::dim(
                "encoder input",
                self.spec.input_dim(),
                input.len(),
            ));
        }
        Ok(())
    }

    /// Forward pass without recording activations.
    pub fn embed(&self, input: &[f64]) -> Result<Embedding> {
        self.check_input(input)?;
        let last = self.spec.n_layers() - 1;
        let mut x = input.to_vec();
        for l in 0..=last {
            x = self.affine(l, &x);
            if l < last {
                relu_in_place(&mut x);
            }
        }
        Ok(Embedding(x))
    }

    pub fn forward(&self, input: &[f64]) -> Result<(Embedding, ActivationCache)> {
        self.check_input(input)?;
        let n = self.spec.n_layers();
        let mut inputs = Vec::with_capacity(n);
        let mut pre_activations = Vec::with_capacity(n);
        let mut x = input.to_vec();
        for l in 0..n {
            let z = self.affine(l, &x);
            inputs.push(x);
            x = z.clone();
            if l + 1 < n {
                relu_in_place(&mut x);
            }
            pre_activations.push(z);
        }
        Ok((
            Embedding(x),
            ActivationCache {
                inputs,
                pre_activations,
            },
        ))
    }

    fn check_cache(&self, cache: &ActivationCache) -> Result<()> {
        let n = self.spec.n_layers();
        if cache.inputs.len() != n || cache.pre_activations.len() != n {
            return Err(Error::dim("activation cache layers", n, cache.inputs.len()));
        }
        for l in 0..n {
            if cache.inputs[l].len() != self.spec.layer_dims[l] {
                return Err(Error::dim(
                    "activation cache input",
                    self.spec.layer_dims[l],
                    cache.inputs[l].len(),
                ));
            }
            if cache.pre_activations[l].len() != self.spec.layer_dims[l + 1] {
                return Err(Error::dim(
                    "activation cache pre-activation",
                    self.spec.layer_dims[l + 1],
                    cache.pre_activations[l].len(),
                ));
            }
        }
        Ok(())
    }

    /// Backpropagates `grad_output` and *adds* the parameter gradient into
    /// `param_grads`. Returns the gradient with respect to the input.
    pub fn backward_into(
        &self,
        cache: &ActivationCache,
        grad_output: &[f64],
        param_grads: &mut [f64],
    ) -> Result<Vec<f64>> {
        self.check_cache(cache)?;
        if grad_output.len() != self.spec.output_dim() {
            return Err(Error::dim(
                "grad_output",
                self.spec.output_dim(),
                grad_output.len(),
            ));
        }
        if param_grads.len() != self.params.len() {
            return Err(Error::dim(
                "parameter gradient buffer",
                self.params.len(),
                param_grads.len(),
            ));
        }
        let n = self.spec.n_layers();
        let mut g = grad_output.to_vec();
        for l in (0..n).rev() {
            if l + 1 < n {
                for (gi, &z) in g.iter_mut().zip(&cache.pre_activations[l]) {
                    if z <= 0.0 {
                        *gi = 0.0;
                    }
                }
            }
            let x = &cache.inputs[l];
            let n_in = x.len();
            let (w_off, b_off) = self.spec.layer_offsets(l);
            let w = &self.params[w_off..b_off];
            let mut g_in = vec![0.0; n_in];
            for (o, &go) in g.iter().enumerate() {
                if go == 0.0 {
                    continue;
                }
                let dw = &mut param_grads[w_off + o * n_in..w_off + (o + 1) * n_in];
                for (d, &xi) in dw.iter_mut().zip(x) {
                    *d += go * xi;
                }
                param_grads[b_off + o] += go;
                for (gi, &wi) in g_in.iter_mut().zip(&w[o * n_in..(o + 1) * n_in]) {
                    *gi += go * wi;
                }
            }
            g = g_in;
        }
        Ok(g)
    }

    pub fn backward(&self, cache: &ActivationCache, grad_output: &[f64]) -> Result<Gradients> {
        let mut params = vec![0.0; self.params.len()];
        let input = self.backward_into(cache, grad_output, &mut params)?;
        Ok(Gradients { params, input })
    }
}

fn relu_in_place(x: &mut [f64]) {
    for v in x {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}
