use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng;

use super::fabric::FabricRecord;

/// Number of test fabrics per cluster: proportional to cluster size,
/// rounded with the largest-remainder method (ties to the lower cluster id).
pub fn stratified_quotas(
    cluster_sizes: &BTreeMap<u32, usize>,
    n_test: usize,
) -> BTreeMap<u32, usize> {
    let n: usize = cluster_sizes.values().sum();
    let mut quotas = BTreeMap::new();
    let mut remainders = Vec::new();
    let mut assigned = 0;
    for (&c, &size) in cluster_sizes {
        let exact = size * n_test;
        let q = exact / n;
        quotas.insert(c, q);
        assigned += q;
        remainders.push((exact % n, c));
    }
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, c) in remainders.iter().take(n_test - assigned) {
        *quotas.get_mut(&c).unwrap() += 1;
    }
    quotas
}

/// Stratified train/test split of clustered fabrics. Returns sorted
/// `(train ids, test ids)`.
pub fn split_dataset(
    fabrics: &[FabricRecord],
    n_test: usize,
    seed: u64,
) -> Result<(Vec<u32>, Vec<u32>)> {
    if n_test >= fabrics.len() && n_test > 0 {
        return Err(Error::InvalidArgument(format!(
            "n_test ({n_test}) must be smaller than the number of fabrics ({})",
            fabrics.len()
        )));
    }
    let mut members: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for f in fabrics {
        let c = f.cluster_id.ok_or(Error::Unclustered(f.id))?;
        members.entry(c).or_default().push(f.id);
    }
    let sizes = members.iter().map(|(&c, m)| (c, m.len())).collect();
    let quotas = stratified_quotas(&sizes, n_test);
    let mut rng = rng::stream(seed, "split");
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (c, mut ids) in members {
        ids.shuffle(&mut rng);
        let q = quotas[&c];
        test.extend_from_slice(&ids[..q]);
        train.extend_from_slice(&ids[q..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataplane::generate_fabrics;

    fn clustered(n: usize, k: u32) -> Vec<FabricRecord> {
        let mut f = generate_fabrics(n, 2).unwrap();
        for r in &mut f {
            // Uneven clusters.
            r.cluster_id = Some((r.id * r.id + 3) % k);
        }
        f
    }

    #[test]
    fn paper_split_sizes() {
        let f = clustered(118, 8);
        let (train, test) = split_dataset(&f, 18, 1).unwrap();
        assert_eq!(train.len(), 100);
        assert_eq!(test.len(), 18);
        assert!(train.iter().all(|id| !test.contains(id)));
    }

    #[test]
    fn zero_test_means_all_train() {
        let f = clustered(30, 4);
        let (train, test) = split_dataset(&f, 0, 1).unwrap();
        assert!(test.is_empty());
        assert_eq!(train.len(), 30);
    }

    #[test]
    fn quotas_are_near_proportional() {
        let f = clustered(118, 8);
        let (_, test) = split_dataset(&f, 18, 3).unwrap();
        let n = f.len() as f64;
        for c in 0..8 {
            let size = f.iter().filter(|r| r.cluster_id == Some(c)).count();
            let got = test
                .iter()
                .filter(|&&id| f[id as usize].cluster_id == Some(c))
                .count();
            let exact = size as f64 * 18.0 / n;
            assert!(
                (got as f64 - exact).abs() < 1.0,
                "cluster {c}: {got} vs {exact}"
            );
            if size >= (118usize).div_ceil(18) {
                assert!(got >= 1);
            }
        }
    }

    #[test]
    fn unclustered_is_an_error() {
        let f = generate_fabrics(5, 1).unwrap();
        assert!(matches!(
            split_dataset(&f, 1, 0),
            Err(Error::Unclustered(0))
        ));
    }
}
