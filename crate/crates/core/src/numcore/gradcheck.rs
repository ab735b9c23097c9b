use crate::error::{Error, Result};

use super::Encoder;

/// Central differences of `f` with respect to every coordinate of `params`.
pub fn central_differences<F>(params: &[f64], mut f: F, eps: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> f64,
{
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "eps must be positive, got {eps}"
        )));
    }
    let mut p = params.to_vec();
    let mut grad = Vec::with_capacity(p.len());
    for i in 0..p.len() {
        let orig = p[i];
        p[i] = orig + eps;
        let up = f(&p);
        p[i] = orig - eps;
        let down = f(&p);
        p[i] = orig;
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::NonFinite(format!("loss at parameter {i}")));
        }
        grad.push((up - down) / (2.0 * eps));
    }
    Ok(grad)
}

/// Central-difference gradient of `loss_fn` with respect to every encoder
/// parameter, in the encoder's flat layout.
pub fn finite_diff_grad<F>(mut loss_fn: F, enc: &Encoder, eps: f64) -> Result<Vec<f64>>
where
    F: FnMut(&Encoder) -> f64,
{
    let mut probe = enc.clone();
    central_differences(
        enc.params(),
        |p| {
            probe.params_mut().copy_from_slice(p);
            loss_fn(&probe)
        },
        eps,
    )
}

/// `||a - b|| / max(||a||, ||b||)`, zero when both vectors vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let diff = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = na.max(nb);
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::EncoderSpec;

    #[test]
    fn quadratic_derivative() {
        let g = central_differences(&[3.0], |w| 0.5 * w[0] * w[0], 1e-5).unwrap();
        assert!((g[0] - 3.0).abs() < 1e-6);
    }

    #[test]
    fn constant_loss_has_zero_gradient() {
        let g = central_differences(&[1.0, 2.0, 3.0], |_| 7.0, 1e-5).unwrap();
        assert_eq!(g, vec![0.0; 3]);
    }

    #[test]
    fn non_finite_loss_is_an_error() {
        assert!(central_differences(&[1.0], |_| f64::NAN, 1e-5).is_err());
        assert!(central_differences(&[1.0], |w| w[0], 0.0).is_err());
    }

    #[test]
    fn backward_matches_finite_differences() {
        // Loss: 0.5 * ||enc(x) - t||^2 through three layers.
        let spec = EncoderSpec::new(vec![5, 8, 6, 3]).unwrap();
        let x = [0.4, -1.0, 0.7, 0.2, -0.3];
        let t = [0.5, -0.5, 1.0];
        let loss = |e: &Encoder| {
            let y = e.embed(&x).unwrap();
            0.5 * y
                .iter()
                .zip(&t)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        };
        for seed in 0..10 {
            let enc = Encoder::init(&spec, seed);
            let (y, cache) = enc.forward(&x).unwrap();
            let go: Vec<f64> = y.iter().zip(&t).map(|(a, b)| a - b).collect();
            let analytic = enc.backward(&cache, &go).unwrap();
            let numeric = finite_diff_grad(loss, &enc, 1e-5).unwrap();
            let err = relative_error(&analytic.params, &numeric);
            assert!(err <= 1e-4, "seed {seed}: relative error {err}");
            let num_in = central_differences(
                &x,
                |xi| {
                    let y = enc.embed(xi).unwrap();
                    0.5 * y
                        .iter()
                        .zip(&t)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                },
                1e-5,
            )
            .unwrap();
            assert!(relative_error(&analytic.input, &num_in) <= 1e-4);
        }
    }
}
