use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng;

use super::pnm::PixelImage;

pub const BACKBONE_SIDE: usize = 64;
pub const BACKBONE_FEATURES: usize = 256;

/// Fixed feature extractor in front of the trainable encoders: box-filter
/// downsample to 64x64, scale to [0, 1], Gaussian random projection, ReLU.
/// Never updated by training.
#[derive(Debug, Clone)]
pub struct FrozenBackbone {
    seed: u64,
    channels: usize,
    feature_dim: usize,
    projection: Vec<f64>,
}

impl FrozenBackbone {
    pub fn new(seed: u64, channels: usize) -> Result<Self> {
        Self::with_features(seed, channels, BACKBONE_FEATURES)
    }

    pub fn with_features(seed: u64, channels: usize, feature_dim: usize) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidArgument(format!(
                "unsupported channel count {channels}"
            )));
        }
        let in_dim = BACKBONE_SIDE * BACKBONE_SIDE * channels;
        let normal = Normal::new(0.0, 1.0 / (in_dim as f64).sqrt()).unwrap();
        let mut r = rng::stream_indexed(seed, "backbone", &[channels as u64]);
        let projection = (0..feature_dim * in_dim)
            .map(|_| normal.sample(&mut r))
            .collect();
        Ok(Self {
            seed,
            channels,
            feature_dim,
            projection,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn in_dim(&self) -> usize {
        BACKBONE_SIDE * BACKBONE_SIDE * self.channels
    }

    pub fn projection(&self) -> &[f64] {
        &self.projection
    }

    pub fn featurize(&self, img: &PixelImage) -> Result<Vec<f64>> {
        if img.channels != self.channels {
            return Err(Error::dim("backbone channels", self.channels, img.channels));
        }
        let x = downsample(img);
        let n = x.len();
        Ok((0..self.feature_dim)
            .map(|o| {
                let row = &self.projection[o * n..(o + 1) * n];
                row.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>().max(0.0)
            })
            .collect())
    }
}

fn cell(o: usize, src: usize) -> (usize, usize) {
    let lo = o * src / BACKBONE_SIDE;
    let hi = ((o + 1) * src / BACKBONE_SIDE).max(lo + 1);
    (lo, hi.min(src))
}

/// Area-average onto a 64x64 grid with samples scaled to [0, 1]. Images
/// smaller than the grid are sampled nearest-neighbour.
pub fn downsample(img: &PixelImage) -> Vec<f64> {
    let c = img.channels;
    let max = img.max_value as f64;
    let mut out = Vec::with_capacity(BACKBONE_SIDE * BACKBONE_SIDE * c);
    for oy in 0..BACKBONE_SIDE {
        let (y0, y1) = cell(oy, img.height);
        for ox in 0..BACKBONE_SIDE {
            let (x0, x1) = cell(ox, img.width);
            let count = ((y1 - y0) * (x1 - x0)) as f64;
            for ch in 0..c {
                let mut acc = 0.0;
                for y in y0..y1 {
                    for x in x0..x1 {
                        acc += img.sample(x, y, ch) as f64;
                    }
                }
                out.push(acc / count / max);
            }
        }
    }
    out
}

/// Index of the frame deviating most (mean absolute difference) from the
/// first frame of a press sequence.
pub fn select_deepest_frame(frames: &[PixelImage]) -> Result<usize> {
    let first = frames
        .first()
        .ok_or_else(|| Error::EmptyInput("tactile sequence has no frames".into()))?;
    let mut best = (0, -1.0);
    for (i, f) in frames.iter().enumerate() {
        if f.pixels.len() != first.pixels.len() {
            return Err(Error::dim(
                "tactile frame samples",
                first.pixels.len(),
                f.pixels.len(),
            ));
        }
        let dev = f
            .pixels
            .iter()
            .zip(&first.pixels)
            .map(|(&a, &b)| (a as f64 - b as f64).abs())
            .sum::<f64>()
            / f.pixels.len() as f64;
        if dev > best.1 {
            best = (i, dev);
        }
    }
    Ok(best.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    fn random_image(w: usize, h: usize, c: usize, seed: u64) -> PixelImage {
        let mut r = rng::stream(seed, "img");
        PixelImage::new(
            w,
            h,
            c,
            255,
            (0..w * h * c).map(|_| r.random_range(0..=255)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn zero_image_gives_zero_features() {
        let b = FrozenBackbone::with_features(1, 3, 32).unwrap();
        let img = PixelImage::new(10, 7, 3, 255, vec![0; 210]).unwrap();
        assert_eq!(b.featurize(&img).unwrap(), vec![0.0; 32]);
    }

    #[test]
    fn featurize_is_deterministic() {
        let img = random_image(80, 70, 1, 3);
        let a = FrozenBackbone::with_features(9, 1, 16)
            .unwrap()
            .featurize(&img)
            .unwrap();
        let b = FrozenBackbone::with_features(9, 1, 16)
            .unwrap()
            .featurize(&img)
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn one_pixel_change_moves_features() {
        let b = FrozenBackbone::with_features(2, 3, 64).unwrap();
        let img = random_image(64, 64, 3, 1);
        let mut other = img.clone();
        other.pixels[100] = 255 - other.pixels[100];
        assert_ne!(b.featurize(&img).unwrap(), b.featurize(&other).unwrap());
    }

    #[test]
    fn channel_mismatch() {
        let b = FrozenBackbone::with_features(2, 1, 8).unwrap();
        assert!(b.featurize(&random_image(4, 4, 3, 0)).is_err());
    }

    #[test]
    fn downsample_of_constant_is_constant() {
        let img = PixelImage::new(130, 97, 1, 200, vec![50; 130 * 97]).unwrap();
        assert!(downsample(&img).iter().all(|&v| (v - 0.25).abs() < 1e-15));
        let small = PixelImage::new(3, 5, 3, 255, vec![255; 45]).unwrap();
        assert!(downsample(&small).iter().all(|&v| v == 1.0));
    }

    #[test]
    fn perturbation_bounded_by_projection_norm() {
        let b = FrozenBackbone::with_features(4, 1, 32).unwrap();
        let frob = b.projection().iter().map(|v| v * v).sum::<f64>().sqrt();
        for seed in 0..5 {
            let x = random_image(64, 64, 1, seed);
            let y = random_image(64, 64, 1, seed + 100);
            let fx = b.featurize(&x).unwrap();
            let fy = b.featurize(&y).unwrap();
            let df = fx
                .iter()
                .zip(&fy)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            let dx = downsample(&x)
                .iter()
                .zip(downsample(&y))
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(df <= frob * dx + 1e-12);
        }
    }

    #[test]
    fn deepest_frame() {
        let base = PixelImage::new(2, 1, 1, 255, vec![10, 10]).unwrap();
        let mid = PixelImage::new(2, 1, 1, 255, vec![40, 10]).unwrap();
        let deep = PixelImage::new(2, 1, 1, 255, vec![90, 0]).unwrap();
        assert_eq!(
            select_deepest_frame(&[base.clone(), mid, deep, base]).unwrap(),
            2
        );
        assert!(select_deepest_frame(&[]).is_err());
    }
}
