use crate::error::{Error, Result};

use super::pnm::PixelImage;

pub const GAMMA_RANGE: (f64, f64) = (0.5, 2.0);

/// `s -> round(max * (s / max)^gamma)` on every sample.
pub fn gamma_correct(img: &PixelImage, gamma: f64) -> Result<PixelImage> {
    if !(GAMMA_RANGE.0..=GAMMA_RANGE.1).contains(&gamma) {
        return Err(Error::InvalidArgument(format!(
            "gamma {gamma} outside [{}, {}]",
            GAMMA_RANGE.0, GAMMA_RANGE.1
        )));
    }
    let max = img.max_value as f64;
    let pixels = img
        .pixels
        .iter()
        .map(|&s| (max * (s as f64 / max).powf(gamma)).round() as u16)
        .collect();
    Ok(PixelImage {
        pixels,
        ..img.clone()
    })
}

/// Output channel `i` takes input channel `perm[i]`.
pub fn permute_channels(img: &PixelImage, perm: [usize; 3]) -> Result<PixelImage> {
    if img.channels != 3 {
        return Err(Error::InvalidArgument(format!(
            "channel permutation needs an RGB image, got {} channel(s)",
            img.channels
        )));
    }
    let mut seen = [false; 3];
    for &p in &perm {
        if p > 2 || std::mem::replace(&mut seen[p], true) {
            return Err(Error::InvalidArgument(format!(
                "{perm:?} is not a permutation of (0, 1, 2)"
            )));
        }
    }
    let mut pixels = Vec::with_capacity(img.pixels.len());
    for px in img.pixels.chunks_exact(3) {
        pixels.extend(perm.iter().map(|&p| px[p]));
    }
    Ok(PixelImage {
        pixels,
        ..img.clone()
    })
}

pub fn inverse_permutation(perm: [usize; 3]) -> [usize; 3] {
    let mut inv = [0; 3];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

pub const ALL_PERMUTATIONS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];
