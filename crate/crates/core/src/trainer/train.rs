use crate::assocnet::{model_forward, JointModel, ModelGrads};
use crate::error::{Error, Result};
use crate::numcore::{adam_step, AdamState};
use crate::rng;

use super::sampler::GroupSampler;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub iterations: usize,
    pub margin: f64,
    /// Fraction of each batch made of different-fabric groups.
    pub negative_ratio: f64,
    pub aux_weight: f64,
    pub master_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            batch_size: 32,
            iterations: 2000,
            margin: 2.0,
            negative_ratio: 0.5,
            aux_weight: 1.0,
            master_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.learning_rate > 0.0) {
            return bad(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            ));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive".into());
        }
        if !(self.margin > 0.0) {
            return bad(format!("margin must be positive, got {}", self.margin));
        }
        if !(self.negative_ratio > 0.0 && self.negative_ratio < 1.0) {
            return bad(format!(
                "negative_ratio must be in (0, 1), got {}",
                self.negative_ratio
            ));
        }
        if !(self.aux_weight >= 0.0) {
            return bad(format!(
                "aux_weight must be non-negative, got {}",
                self.aux_weight
            ));
        }
        Ok(())
    }

    /// Seed for model initialization, independent of the batch stream.
    pub fn init_seed(&self) -> u64 {
        rng::derive_seed(self.master_seed, "init")
    }
}

/// Trains `model` in place-by-value: one Adam step per encoder and head
/// per iteration on the batch-mean gradient. Returns the trained model and
/// the per-iteration mean batch loss.
pub fn train(
    mut model: JointModel,
    sampler: &GroupSampler<'_>,
    config: &TrainConfig,
) -> Result<(JointModel, Vec<f64>)> {
    config.validate()?;
    model = JointModel::from_parts(
        model.architecture(),
        model.branch_modalities().to_vec(),
        model.branch_encoder().to_vec(),
        model.encoders().to_vec(),
        model.heads().to_vec(),
        config.margin,
        config.aux_weight,
    )?;
    let mut rng = rng::stream(config.master_seed, "batches");
    let mut enc_states: Vec<AdamState> = model
        .encoders()
        .iter()
        .map(|e| AdamState::new(e.params().len(), config.learning_rate))
        .collect();
    let mut head_states: Vec<AdamState> = model
        .heads()
        .iter()
        .map(|h| AdamState::new(h.params().len(), config.learning_rate))
        .collect();
    let mut history = Vec::with_capacity(config.iterations);
    let scale = 1.0 / config.batch_size as f64;
    for iteration in 0..config.iterations {
        let batch = sampler.sample_batch(config.batch_size, config.negative_ratio, &mut rng)?;
        let mut grads = ModelGrads::zeros_like(&model);
        let mut total = 0.0;
        for group in &batch {
            let out = match model_forward(&model, group) {
                Err(Error::NonFinite(_)) => {
                    return Err(Error::NonFiniteLoss {
                        iteration,
                        value: f64::NAN,
                    })
                }
                r => r?,
            };
            total += out.loss;
            grads.add_assign(&out.grads);
        }
        let loss = total * scale;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss {
                iteration,
                value: loss,
            });
        }
        grads.scale(scale);
        for ((enc, g), st) in model
            .encoders_mut()
            .iter_mut()
            .zip(&grads.encoders)
            .zip(&mut enc_states)
        {
            adam_step(enc.params_mut(), g, st)?;
        }
        for ((head, g), st) in model
            .heads_mut()
            .iter_mut()
            .zip(&grads.heads)
            .zip(&mut head_states)
        {
            adam_step(head.params_mut(), g, st)?;
        }
        history.push(loss);
    }
    Ok((model, history))
}
