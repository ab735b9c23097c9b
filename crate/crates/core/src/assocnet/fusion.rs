use crate::error::{Error, Result};
use crate::numcore::Embedding;

/// Element-wise maximum of several embeddings, plus for each component the
/// index of the input that supplied it (lowest index on ties).
pub fn fuse_max_with_argmax(embeddings: &[&[f64]]) -> Result<(Embedding, Vec<usize>)> {
    let first = embeddings
        .first()
        .ok_or_else(|| Error::EmptyInput("fuse_max needs at least one embedding".into()))?;
    let dim = first.len();
    if let Some(e) = embeddings.iter().find(|e| e.len() != dim) {
        return Err(Error::dim("fused embedding length", dim, e.len()));
    }
    let mut out = first.to_vec();
    let mut arg = vec![0; dim];
    for (i, e) in embeddings.iter().enumerate().skip(1) {
        for k in 0..dim {
            if e[k] > out[k] {
                out[k] = e[k];
                arg[k] = i;
            }
        }
    }
    Ok((Embedding(out), arg))
}

pub fn fuse_max(embeddings: &[&[f64]]) -> Result<Embedding> {
    Ok(fuse_max_with_argmax(embeddings)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn example() {
        let out = fuse_max(&[&[1.0, 2.0], &[3.0, 0.0], &[0.0, 1.0]]).unwrap();
        assert_eq!(out.0, vec![3.0, 2.0]);
    }

    #[test]
    fn idempotent() {
        let e = [0.5, -1.0, 7.0];
        assert_eq!(fuse_max(&[&e, &e, &e]).unwrap().0, e.to_vec());
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let (_, arg) = fuse_max_with_argmax(&[&[1.0, 0.0], &[1.0, 2.0], &[1.0, 2.0]]).unwrap();
        assert_eq!(arg, vec![0, 1]);
    }

    #[test]
    fn errors() {
        assert!(fuse_max(&[]).is_err());
        assert!(fuse_max(&[&[1.0], &[1.0, 2.0]]).is_err());
    }

    proptest! {
        #[test]
        fn permutation_invariant_and_dominating(
            v in proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, 4), 2..5),
            rot in 0usize..5,
        ) {
            let refs: Vec<&[f64]> = v.iter().map(|x| x.as_slice()).collect();
            let mut rotated = refs.clone();
            rotated.rotate_left(rot % refs.len());
            rotated.reverse();
            let a = fuse_max(&refs).unwrap();
            prop_assert_eq!(&a, &fuse_max(&rotated).unwrap());
            for e in &v {
                prop_assert!(a.iter().zip(e).all(|(m, x)| m >= x));
            }
        }
    }
}
