use crate::error::{Error, Result};

fn check(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::dim("embedding length", a.len(), b.len()));
    }
    Ok(())
}

/// Euclidean distance between two embeddings.
pub fn pair_distance(e1: &[f64], e2: &[f64]) -> Result<f64> {
    check(e1, e2)?;
    Ok(e1
        .iter()
        .zip(e2)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

/// Sum of the three pairwise distances between the embeddings.
pub fn d3_distance(e1: &[f64], e2: &[f64], e3: &[f64]) -> Result<f64> {
    check(e1, e2)?;
    check(e2, e3)?;
    Ok(pair_distance(e1, e2)? + pair_distance(e2, e3)? + pair_distance(e3, e1)?)
}

/// Distance and its gradient with respect to `e1` (the gradient with respect
/// to `e2` is the negation). Zero gradient at coincident points.
pub(crate) fn pair_distance_grad(e1: &[f64], e2: &[f64]) -> (f64, Vec<f64>) {
    let diff: Vec<f64> = e1.iter().zip(e2).map(|(a, b)| a - b).collect();
    let d = diff.iter().map(|v| v * v).sum::<f64>().sqrt();
    if d == 0.0 {
        (0.0, vec![0.0; e1.len()])
    } else {
        (d, diff.into_iter().map(|v| v / d).collect())
    }
}

/// Sum of pairwise distances over all unordered pairs of `embeddings` and
/// the gradient with respect to each embedding. Three embeddings give D3,
/// two give the plain pair distance.
pub(crate) fn total_distance_grad(embeddings: &[&[f64]]) -> (f64, Vec<Vec<f64>>) {
    let n = embeddings.len();
    let dim = embeddings[0].len();
    let mut grads = vec![vec![0.0; dim]; n];
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let (d, g) = pair_distance_grad(embeddings[i], embeddings[j]);
            total += d;
            for k in 0..dim {
                grads[i][k] += g[k];
                grads[j][k] -= g[k];
            }
        }
    }
    (total, grads)
}
