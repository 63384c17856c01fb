use std::collections::BTreeMap;

use rand::Rng;
use thiserror::Error;

use crate::types::NodeId;

#[derive(Debug, Error, PartialEq)]
pub enum CommitteeError {
    #[error("committee of {wanted} requested from {available} edge nodes")]
    TooLarge { wanted: usize, available: usize },
    #[error("committee size must be positive")]
    Empty,
}

/// Sample `m` distinct edge nodes without replacement, each draw proportional
/// to weight among those not yet chosen. When every remaining weight is zero
/// the draw is uniform over the remainder. The result is sorted by id.
pub fn sample_committee<R: Rng + ?Sized>(
    weights: &BTreeMap<NodeId, f64>,
    m: usize,
    rng: &mut R,
) -> Result<Vec<NodeId>, CommitteeError> {
    if m == 0 {
        return Err(CommitteeError::Empty);
    }
    if m > weights.len() {
        return Err(CommitteeError::TooLarge { wanted: m, available: weights.len() });
    }
    let mut rest: Vec<(NodeId, f64)> = weights.iter().map(|(n, w)| (*n, w.max(0.0))).collect();
    let mut chosen = Vec::with_capacity(m);
    for _ in 0..m {
        let total: f64 = rest.iter().map(|(_, w)| w).sum();
        let idx = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = rest.len() - 1;
            for (i, (_, w)) in rest.iter().enumerate() {
                if u < *w {
                    pick = i;
                    break;
                }
                u -= w;
            }
            // Guard against rounding landing on a zero-weight tail entry.
            while rest[pick].1 == 0.0 && pick > 0 {
                pick -= 1;
            }
            pick
        } else {
            rng.random_range(0..rest.len())
        };
        chosen.push(rest.remove(idx).0);
    }
    chosen.sort();
    Ok(chosen)
}

/// Highest-weight member, lowest id on ties.
pub fn select_proposer(committee: &[NodeId], weights: &BTreeMap<NodeId, f64>) -> Option<NodeId> {
    committee.iter().copied().fold(None, |best: Option<(NodeId, f64)>, n| {
        let w = weights.get(&n).copied().unwrap_or(0.0);
        match best {
            Some((b, bw)) if bw > w || (bw == w && b < n) => Some((b, bw)),
            _ => Some((n, w)),
        }
    })
    .map(|(n, _)| n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn w(ws: &[f64]) -> BTreeMap<NodeId, f64> {
        ws.iter().enumerate().map(|(i, w)| (NodeId(i as u32), *w)).collect()
    }

    /// Inclusion probability for m=2 without replacement, by enumeration.
    fn inclusion_m2(ws: &[f64]) -> Vec<f64> {
        let total: f64 = ws.iter().sum();
        let mut p = vec![0.0; ws.len()];
        for i in 0..ws.len() {
            let first = ws[i] / total;
            p[i] += first;
            for j in 0..ws.len() {
                if j != i {
                    p[j] += first * ws[j] / (total - ws[i]);
                }
            }
        }
        p
    }

    #[test]
    fn inclusion_frequencies_match_enumeration() {
        let ws = [0.4, 0.3, 0.2, 0.1];
        let expected = inclusion_m2(&ws);
        let weights = w(&ws);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let mut counts = [0u32; 4];
        for _ in 0..n {
            for id in sample_committee(&weights, 2, &mut rng).unwrap() {
                counts[id.index()] += 1;
            }
        }
        for i in 0..4 {
            let f = counts[i] as f64 / n as f64;
            assert!((f - expected[i]).abs() < 0.01, "node {i}: {f} vs {}", expected[i]);
        }
    }

    #[test]
    fn zero_weights_fall_back_to_uniform() {
        let weights = w(&[0.0, 0.0, 0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut counts = [0u32; 3];
        for _ in 0..30_000 {
            counts[sample_committee(&weights, 1, &mut rng).unwrap()[0].index()] += 1;
        }
        for c in counts {
            assert!((c as f64 / 30_000.0 - 1.0 / 3.0).abs() < 0.01);
        }
        // Only one positive weight: it is picked first, then uniform on the rest.
        let one = w(&[0.0, 1.0, 0.0]);
        let c = sample_committee(&one, 2, &mut rng).unwrap();
        assert!(c.contains(&NodeId(1)));
    }

    #[test]
    fn oversize_request_is_an_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        assert_eq!(
            sample_committee(&w(&[1.0, 1.0]), 3, &mut rng),
            Err(CommitteeError::TooLarge { wanted: 3, available: 2 })
        );
        assert_eq!(sample_committee(&w(&[1.0]), 0, &mut rng), Err(CommitteeError::Empty));
    }

    #[test]
    fn proposer_is_heaviest_then_lowest_id() {
        let weights = w(&[0.1, 0.4, 0.4, 0.1]);
        assert_eq!(select_proposer(&[NodeId(0), NodeId(2), NodeId(1)], &weights), Some(NodeId(1)));
        assert_eq!(select_proposer(&[NodeId(3), NodeId(0)], &weights), Some(NodeId(0)));
        assert_eq!(select_proposer(&[], &weights), None);
    }

    proptest! {
        #[test]
        fn committee_is_distinct_and_sized(ws in prop::collection::vec(0.0f64..1.0, 1..12), seed: u64, m in 1usize..12) {
            let weights = w(&ws);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            match sample_committee(&weights, m, &mut rng) {
                Ok(c) => {
                    prop_assert_eq!(c.len(), m);
                    prop_assert!(c.windows(2).all(|p| p[0] < p[1]));
                    prop_assert!(c.iter().all(|n| weights.contains_key(n)));
                }
                Err(_) => prop_assert!(m > ws.len()),
            }
        }
    }
}
