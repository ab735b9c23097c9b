use rand::distr::weighted::WeightedIndex;
use rand::Rng as _;
use rand_distr::Distribution;

use crate::error::{Error, Result};
use crate::rng;

pub const THICKNESS_RANGE_MM: (f64, f64) = (0.1, 5.0);
pub const STIFFNESS_RANGE: (f64, f64) = (0.0, 6.0);
pub const DENSITY_RANGE_GSM: (f64, f64) = (30.0, 600.0);
/// Sampling weights of stretch levels 0 (none), 1 (stretchable), 2 (very).
pub const STRETCH_WEIGHTS: [f64; 3] = [0.5, 0.35, 0.15];

/// Latent physical description of one fabric.
#[derive(Debug, Clone, PartialEq)]
pub struct FabricRecord {
    pub id: u32,
    pub thickness_mm: f64,
    pub stiffness_score: f64,
    pub stretch_level: u8,
    pub density_gsm: f64,
    pub cluster_id: Option<u32>,
}

impl FabricRecord {
    pub fn validate(&self) -> Result<()> {
        let ok = self.thickness_mm > 0.0
            && self.thickness_mm.is_finite()
            && (STIFFNESS_RANGE.0..=STIFFNESS_RANGE.1).contains(&self.stiffness_score)
            && self.stretch_level <= 2
            && self.density_gsm > 0.0
            && self.density_gsm.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "fabric {} out of range: {self:?}",
                self.id
            )))
        }
    }

    /// Attributes as a raw row `[thickness, stiffness, stretch, density]`.
    pub fn attribute_row(&self) -> [f64; 4] {
        [
            self.thickness_mm,
            self.stiffness_score,
            self.stretch_level as f64,
            self.density_gsm,
        ]
    }

    /// Attributes mapped onto `[-1, 1]` using the fixed sampling ranges
    /// (log scale for thickness and density). This is the latent code the
    /// synthetic world renders from.
    pub fn latent(&self) -> [f64; 4] {
        fn log_unit(v: f64, (lo, hi): (f64, f64)) -> f64 {
            2.0 * (v.ln() - lo.ln()) / (hi.ln() - lo.ln()) - 1.0
        }
        [
            log_unit(self.thickness_mm, THICKNESS_RANGE_MM),
            self.stiffness_score / 3.0 - 1.0,
            self.stretch_level as f64 - 1.0,
            log_unit(self.density_gsm, DENSITY_RANGE_GSM),
        ]
    }
}

fn log_uniform(rng: &mut rng::Rng, (lo, hi): (f64, f64)) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

pub fn generate_fabrics(n: usize, seed: u64) -> Result<Vec<FabricRecord>> {
    if n < 1 {
        return Err(Error::InvalidArgument("need at least one fabric".into()));
    }
    let mut rng = rng::stream(seed, "fabrics");
    let stretch = WeightedIndex::new(STRETCH_WEIGHTS).unwrap();
    Ok((0..n as u32)
        .map(|id| {
            let thickness_mm = log_uniform(&mut rng, THICKNESS_RANGE_MM);
            let stiffness_score = rng.random_range(STIFFNESS_RANGE.0..STIFFNESS_RANGE.1);
            let stretch_level = stretch.sample(&mut rng) as u8;
            let density_gsm = log_uniform(&mut rng, DENSITY_RANGE_GSM);
            FabricRecord {
                id,
                thickness_mm,
                stiffness_score,
                stretch_level,
                density_gsm,
                cluster_id: None,
            }
        })
        .collect())
}

/// Column-wise z-scored attribute matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAttributes {
    pub rows: Vec<Vec<f64>>,
    /// Columns with zero variance; these are set to all zeros.
    pub constant_columns: Vec<usize>,
}

/// Z-scores each attribute column with the sample standard deviation.
/// Stretch level enters as its ordinal value.
pub fn normalize_attributes(fabrics: &[FabricRecord]) -> Result<NormalizedAttributes> {
    let n = fabrics.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "normalization needs at least 2 fabrics, got {n}"
        )));
    }
    let raw: Vec<[f64; 4]> = fabrics.iter().map(FabricRecord::attribute_row).collect();
    let mut rows = vec![vec![0.0; 4]; n];
    let mut constant_columns = Vec::new();
    for c in 0..4 {
        let mean = raw.iter().map(|r| r[c]).sum::<f64>() / n as f64;
        let var = raw.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let std = var.sqrt();
        if std == 0.0 {
            constant_columns.push(c);
            continue;
        }
        for (row, r) in rows.iter_mut().zip(&raw) {
            row[c] = (r[c] - mean) / std;
        }
    }
    Ok(NormalizedAttributes {
        rows,
        constant_columns,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generates_requested_count_with_unique_ids() {
        let f = generate_fabrics(118, 3).unwrap();
        assert_eq!(f.len(), 118);
        for (i, r) in f.iter().enumerate() {
            assert_eq!(r.id, i as u32);
            r.validate().unwrap();
            assert!((0.1..=5.0).contains(&r.thickness_mm));
            assert!((30.0..=600.0).contains(&r.density_gsm));
        }
    }

    #[test]
    fn generation_is_deterministic() {
        assert_eq!(
            generate_fabrics(20, 5).unwrap(),
            generate_fabrics(20, 5).unwrap()
        );
        assert_ne!(
            generate_fabrics(20, 5).unwrap(),
            generate_fabrics(20, 6).unwrap()
        );
    }

    #[test]
    fn zero_fabrics_is_an_error() {
        assert!(generate_fabrics(0, 1).is_err());
    }

    #[test]
    fn stretch_levels_follow_weights() {
        let f = generate_fabrics(4000, 1).unwrap();
        let frac0 = f.iter().filter(|r| r.stretch_level == 0).count() as f64 / 4000.0;
        assert!((frac0 - 0.5).abs() < 0.04, "{frac0}");
    }

    #[test]
    fn latent_is_in_unit_box() {
        for r in generate_fabrics(200, 2).unwrap() {
            for v in r.latent() {
                assert!((-1.0..=1.0).contains(&v));
            }
        }
    }

    #[test]
    fn z_scores_have_zero_mean_unit_std() {
        let f = generate_fabrics(50, 9).unwrap();
        let z = normalize_attributes(&f).unwrap();
        assert!(z.constant_columns.is_empty());
        for c in 0..4 {
            let mean = z.rows.iter().map(|r| r[c]).sum::<f64>() / 50.0;
            let var = z.rows.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / 49.0;
            assert!(mean.abs() < 1e-12);
            assert!((var.sqrt() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn hand_z_score() {
        let mut f = generate_fabrics(2, 1).unwrap();
        f[0].thickness_mm = 1.0;
        f[1].thickness_mm = 3.0;
        let z = normalize_attributes(&f).unwrap();
        // mean 2, sample std sqrt(2)
        assert!((z.rows[0][0] + 1.0 / 2f64.sqrt()).abs() < 1e-12);
        assert!((z.rows[1][0] - 1.0 / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn identical_fabrics_identical_rows_and_constant_columns_flagged() {
        let mut f = generate_fabrics(3, 1).unwrap();
        f[1] = FabricRecord {
            id: 1,
            ..f[0].clone()
        };
        f[2].stretch_level = f[0].stretch_level;
        let z = normalize_attributes(&f).unwrap();
        assert_eq!(z.rows[0], z.rows[1]);
        assert!(z.constant_columns.contains(&2));
        assert!(z.rows.iter().all(|r| r[2] == 0.0));
        assert!(normalize_attributes(&f[..1]).is_err());
    }
}
