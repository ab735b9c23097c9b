use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::rng;

use super::fabric::FabricRecord;

pub const LATENT_DIM: usize = 4;
pub const MAP_WIDTH: usize = 32;

/// One sensing channel of a fabric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Modality {
    Depth,
    Color,
    TouchFlat,
    TouchFold,
}

impl Modality {
    pub const ALL: [Modality; 4] = [
        Modality::Depth,
        Modality::Color,
        Modality::TouchFlat,
        Modality::TouchFold,
    ];

    pub fn code(self) -> u8 {
        match self {
            Modality::Depth => 0,
            Modality::Color => 1,
            Modality::TouchFlat => 2,
            Modality::TouchFold => 3,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        Self::ALL
            .get(code as usize)
            .copied()
            .ok_or_else(|| Error::InvalidArgument(format!("unknown modality code {code}")))
    }

    pub fn name(self) -> &'static str {
        match self {
            Modality::Depth => "depth",
            Modality::Color => "color",
            Modality::TouchFlat => "touch_flat",
            Modality::TouchFold => "touch_fold",
        }
    }

    pub fn is_touch(self) -> bool {
        matches!(self, Modality::TouchFlat | Modality::TouchFold)
    }

    /// Which latents (thickness, stiffness, stretch, density) the modality
    /// exposes. A flat press only feels surface stretch and density; a press
    /// on a fold also reveals thickness and bending stiffness.
    pub fn latent_mask(self) -> [bool; LATENT_DIM] {
        match self {
            Modality::TouchFlat => [false, false, true, true],
            _ => [true; LATENT_DIM],
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Modality {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "depth" => Ok(Modality::Depth),
            "color" | "colour" => Ok(Modality::Color),
            "touch_flat" | "flat" => Ok(Modality::TouchFlat),
            "touch_fold" | "fold" | "touch" => Ok(Modality::TouchFold),
            other => Err(Error::InvalidArgument(format!(
                "unknown modality {other:?}"
            ))),
        }
    }
}

/// One observation of one fabric in one modality.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub fabric_id: u32,
    pub modality: Modality,
    pub instance_index: u32,
    pub features: Vec<f64>,
    /// Reserved for evaluation when training on a fraction of each
    /// fabric's observations.
    pub held_out: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldConfig {
    pub seed: u64,
    pub feature_dim: usize,
    pub noise_std: f64,
    /// Overall scale of the per-instance nuisance; see [`nuisance_profile`].
    pub nuisance_scale: f64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            feature_dim: 32,
            noise_std: 0.05,
            nuisance_scale: 0.3,
        }
    }
}

/// Fixed two-layer tanh map. `hidden = tanh(W1 x + b1)`, `out = W2 hidden`.
/// Per-instance nuisance of each modality: number of independent N(0, 1)
/// draws (drape, hue, press placement) and their gain relative to
/// `nuisance_scale`.
pub fn nuisance_profile(m: Modality) -> (usize, f64) {
    match m {
        Modality::Depth => (8, 2.0),
        Modality::Color => (1, 1.0),
        Modality::TouchFlat | Modality::TouchFold => (1, 0.1),
    }
}

#[derive(Debug, Clone)]
struct TanhMap {
    in_dim: usize,
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
}

impl TanhMap {
    fn new(
        rng: &mut rng::Rng,
        in_dim: usize,
        out_dim: usize,
        with_bias: bool,
        in_std: f64,
    ) -> Self {
        let n1 = Normal::new(0.0, in_std).unwrap();
        let n2 = Normal::new(0.0, 1.0 / (MAP_WIDTH as f64).sqrt()).unwrap();
        let w1 = (0..MAP_WIDTH * in_dim).map(|_| n1.sample(rng)).collect();
        let b1 = (0..MAP_WIDTH)
            .map(|_| if with_bias { n1.sample(rng) * 0.5 } else { 0.0 })
            .collect();
        let w2 = (0..out_dim * MAP_WIDTH).map(|_| n2.sample(rng)).collect();
        Self { in_dim, w1, b1, w2 }
    }

    fn apply_add(&self, x: &[f64], scale: f64, out: &mut [f64]) {
        let hidden: Vec<f64> = (0..MAP_WIDTH)
            .map(|h| {
                let row = &self.w1[h * self.in_dim..(h + 1) * self.in_dim];
                (self.b1[h] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()).tanh()
            })
            .collect();
        for (o, v) in out.iter_mut().enumerate() {
            let row = &self.w2[o * MAP_WIDTH..(o + 1) * MAP_WIDTH];
            *v += scale * row.iter().zip(&hidden).map(|(a, b)| a * b).sum::<f64>();
        }
    }
}

#[derive(Debug, Clone)]
struct ModalityRenderer {
    latent_map: TanhMap,
    nuisance_map: TanhMap,
}

/// Synthetic sensing world: each modality renders the fabric's masked latent
/// code through its own fixed random map, plus an additive per-instance
/// nuisance term and Gaussian noise.
///
/// The nuisance map has no bias and `tanh` is odd, so with the nuisance
/// drawn from a symmetric distribution its mean contribution is zero.
#[derive(Debug, Clone)]
pub struct SynthWorld {
    config: WorldConfig,
    renderers: Vec<ModalityRenderer>,
}

impl SynthWorld {
    pub fn new(config: WorldConfig) -> Result<Self> {
        if config.feature_dim == 0 {
            return Err(Error::InvalidArgument(
                "feature_dim must be positive".into(),
            ));
        }
        if !(config.noise_std >= 0.0) || !(config.nuisance_scale >= 0.0) {
            return Err(Error::InvalidArgument(
                "noise scales must be non-negative".into(),
            ));
        }
        let renderers = Modality::ALL
            .iter()
            .map(|m| {
                let mut r = rng::stream_indexed(config.seed, "world-map", &[m.code() as u64]);
                ModalityRenderer {
                    latent_map: TanhMap::new(&mut r, LATENT_DIM, config.feature_dim, true, 1.5),
                    nuisance_map: TanhMap::new(
                        &mut r,
                        nuisance_profile(*m).0,
                        config.feature_dim,
                        false,
                        1.0,
                    ),
                }
            })
            .collect();
        Ok(Self { config, renderers })
    }

    pub fn config(&self) -> &WorldConfig {
        &self.config
    }

    pub fn feature_dim(&self) -> usize {
        self.config.feature_dim
    }

    fn masked_latent(fabric: &FabricRecord, modality: Modality) -> [f64; LATENT_DIM] {
        let mut z = fabric.latent();
        for (v, keep) in z.iter_mut().zip(modality.latent_mask()) {
            if !keep {
                *v = 0.0;
            }
        }
        z
    }

    /// Noiseless, nuisance-free rendering of the fabric's latent code.
    pub fn latent_contribution(&self, fabric: &FabricRecord, modality: Modality) -> Vec<f64> {
        let mut out = vec![0.0; self.config.feature_dim];
        self.renderers[modality.code() as usize]
            .latent_map
            .apply_add(&Self::masked_latent(fabric, modality), 1.0, &mut out);
        out
    }

    pub fn observe(
        &self,
        fabric: &FabricRecord,
        modality: Modality,
        instance_index: u32,
        instance_seed: u64,
    ) -> Observation {
        let mut rng = rng::stream_indexed(
            instance_seed,
            "observe",
            &[fabric.id as u64, modality.code() as u64],
        );
        let renderer = &self.renderers[modality.code() as usize];
        let mut features = self.latent_contribution(fabric, modality);
        let (dims, gain) = nuisance_profile(modality);
        let nuisance: Vec<f64> = (0..dims).map(|_| StandardNormal.sample(&mut rng)).collect();
        renderer.nuisance_map.apply_add(
            &nuisance,
            self.config.nuisance_scale * gain,
            &mut features,
        );
        if self.config.noise_std > 0.0 {
            let noise = Normal::new(0.0, self.config.noise_std).unwrap();
            for v in &mut features {
                *v += noise.sample(&mut rng);
            }
        }
        Observation {
            fabric_id: fabric.id,
            modality,
            instance_index,
            features,
            held_out: false,
        }
    }
}

/// Convenience wrapper mirroring [`SynthWorld::observe`] with instance 0.
pub fn synth_observe(
    world: &SynthWorld,
    fabric: &FabricRecord,
    modality: Modality,
    instance_seed: u64,
) -> Observation {
    world.observe(fabric, modality, 0, instance_seed)
}
