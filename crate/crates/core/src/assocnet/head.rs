use crate::error::{Error, Result};
use crate::numcore::{Encoder, EncoderSpec};

/// Affine cluster classifier on top of an embedding: `logits = W e + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierHead {
    layer: Encoder,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifyOutput {
    pub loss: f64,
    pub logits: Vec<f64>,
    /// Gradient with respect to the head parameters (row-major `W`, then `b`).
    pub head_grads: Vec<f64>,
    pub embedding_grad: Vec<f64>,
}

impl ClassifierHead {
    pub fn init(embedding_dim: usize, n_classes: usize, seed: u64) -> Result<Self> {
        let spec = EncoderSpec::new(vec![embedding_dim, n_classes])?;
        Ok(Self {
            layer: Encoder::init(&spec, seed),
        })
    }

    pub fn from_params(embedding_dim: usize, n_classes: usize, params: Vec<f64>) -> Result<Self> {
        let spec = EncoderSpec::new(vec![embedding_dim, n_classes])?;
        Ok(Self {
            layer: Encoder::from_params(&spec, params)?,
        })
    }

    pub fn embedding_dim(&self) -> usize {
        self.layer.spec().input_dim()
    }

    pub fn n_classes(&self) -> usize {
        self.layer.spec().output_dim()
    }

    pub fn params(&self) -> &[f64] {
        self.layer.params()
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        self.layer.params_mut()
    }

    pub fn logits(&self, e: &[f64]) -> Result<Vec<f64>> {
        Ok(self.layer.embed(e)?.0)
    }
}

/// Numerically stable `ln sum exp`.
pub fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Softmax cross-entropy of the head's logits against `label`.
pub fn classify_cluster(head: &ClassifierHead, e: &[f64], label: u32) -> Result<ClassifyOutput> {
    let k = head.n_classes();
    if label as usize >= k {
        return Err(Error::InvalidArgument(format!(
            "cluster label {label} outside [0, {k})"
        )));
    }
    let (logits, cache) = head.layer.forward(e)?;
    let lse = log_sum_exp(&logits);
    let loss = lse - logits[label as usize];
    let mut dlogits: Vec<f64> = logits.iter().map(|z| (z - lse).exp()).collect();
    dlogits[label as usize] -= 1.0;
    let g = head.layer.backward(&cache, &dlogits)?;
    Ok(ClassifyOutput {
        loss,
        logits: logits.0,
        head_grads: g.params,
        embedding_grad: g.input,
    })
}
