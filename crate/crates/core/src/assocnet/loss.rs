use crate::error::{Error, Result};

/// Group label: `Same` (Y = 0) when every branch observes the same fabric,
/// `Different` (Y = 1) otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PairLabel {
    Same,
    Different,
}

impl PairLabel {
    pub fn y(self) -> u8 {
        match self {
            PairLabel::Same => 0,
            PairLabel::Different => 1,
        }
    }

    pub fn from_y(y: u8) -> Result<Self> {
        match y {
            0 => Ok(PairLabel::Same),
            1 => Ok(PairLabel::Different),
            _ => Err(Error::InvalidArgument(format!(
                "label must be 0 or 1, got {y}"
            ))),
        }
    }
}

/// Margin contrastive loss on a (non-negative) distance, with `dL/dd`.
///
/// `Same`: `0.5 d^2`. `Different`: `0.5 max(0, m - d)^2`.
fn contrastive(d: f64, label: PairLabel, margin: f64) -> Result<(f64, f64)> {
    if !(margin > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "margin must be positive, got {margin}"
        )));
    }
    if d.is_nan() {
        return Err(Error::NonFinite("distance is NaN".into()));
    }
    if d < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "distance must be non-negative, got {d}"
        )));
    }
    Ok(match label {
        PairLabel::Same => (0.5 * d * d, d),
        PairLabel::Different => {
            let gap = (margin - d).max(0.0);
            (0.5 * gap * gap, -gap)
        }
    })
}

/// Loss on the three-way distance D3.
pub fn contrastive_loss3(d3: f64, label: PairLabel, margin: f64) -> Result<(f64, f64)> {
    contrastive(d3, label, margin)
}

/// Loss on a pairwise distance (two-branch Siamese baseline).
pub fn contrastive_loss2(d: f64, label: PairLabel, margin: f64) -> Result<(f64, f64)> {
    contrastive(d, label, margin)
}
