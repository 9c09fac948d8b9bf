//! Ground-truth comparison and Monte-Carlo certification of the bounds the
//! recovery guarantees rest on.

mod checks;
mod oracle;
mod report;

pub use checks::{
    analytic_projector, check_degree_events, check_projector_bound, check_spectral_bound,
    check_weyl_and_separation, expected_spectrum, Ensemble, ProjectorReports, TrialPlan,
    WeylSeparation,
};
pub use oracle::{brute_force_candidate_oracle, OracleOptimum, ORACLE_MAX_VERTICES};
pub use report::{wilson_interval, Allowance, BoundReport, EventTally, TrialRow};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ModelError;
use crate::recovery::RecoveryError;
use crate::spectral::SpectralError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("vertex {vertex} appears in more than one cluster of the {side} partition")]
    Overlap { vertex: usize, side: &'static str },
    #[error("exhaustive search is limited to {cap} vertices, got {n}")]
    TooLarge { n: usize, cap: usize },
    #[error("no non-empty subset satisfies the size cap {cap}")]
    NoAdmissibleSubset { cap: f64 },
    #[error("at least one trial is required")]
    NoTrials,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Recovery(#[from] RecoveryError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionMatch {
    /// Equal up to relabelling of clusters.
    pub exact: bool,
    /// Vertices outside the matched overlaps.
    pub misclassified: usize,
    /// Truth cluster matched to each non-empty recovered cluster, by position
    /// in the recovered list.
    pub mapping: Vec<Option<usize>>,
}

fn canonical(p: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = p
        .iter()
        .filter(|c| !c.is_empty())
        .map(|c| {
            let mut c = c.clone();
            c.sort_unstable();
            c
        })
        .collect();
    out.sort();
    out
}

fn owner_map(p: &[Vec<usize>], side: &'static str) -> Result<BTreeMap<usize, usize>, VerifyError> {
    let mut owner = BTreeMap::new();
    for (i, c) in p.iter().enumerate() {
        for &u in c {
            if owner.insert(u, i).is_some() {
                return Err(VerifyError::Overlap { vertex: u, side });
            }
        }
    }
    Ok(owner)
}

/// Compares two partial partitions. Recovered clusters are matched greedily
/// in decreasing size order to the unused truth cluster of largest overlap.
pub fn compare_partitions(
    recovered: &[Vec<usize>],
    truth: &[Vec<usize>],
) -> Result<PartitionMatch, VerifyError> {
    let rec_owner = owner_map(recovered, "recovered")?;
    let truth_owner = owner_map(truth, "truth")?;
    let mut universe: Vec<usize> = rec_owner.keys().chain(truth_owner.keys()).copied().collect();
    universe.sort_unstable();
    universe.dedup();

    let mut order: Vec<usize> = (0..recovered.len()).filter(|&i| !recovered[i].is_empty()).collect();
    order.sort_by(|&a, &b| recovered[b].len().cmp(&recovered[a].len()).then(a.cmp(&b)));
    let mut used = vec![false; truth.len()];
    let mut mapping = vec![None; recovered.len()];
    let mut matched = 0;
    for i in order {
        let mut overlap = vec![0usize; truth.len()];
        for u in &recovered[i] {
            if let Some(&t) = truth_owner.get(u) {
                overlap[t] += 1;
            }
        }
        let best = (0..truth.len())
            .filter(|&t| !used[t] && overlap[t] > 0)
            .max_by(|&a, &b| overlap[a].cmp(&overlap[b]).then(b.cmp(&a)));
        if let Some(t) = best {
            used[t] = true;
            mapping[i] = Some(t);
            matched += overlap[t];
        }
    }
    Ok(PartitionMatch {
        exact: canonical(recovered) == canonical(truth),
        misclassified: universe.len() - matched,
        mapping,
    })
}

/// Whether supercluster counts cover exactly `k` clusters.
pub fn counts_consistent(counts: &[usize], k: usize) -> bool {
    counts.iter().sum::<usize>() == k
}

/// `estimate` equals `truth` or splits some of its groups, i.e. both cover
/// the same clusters and every boundary of `truth` is a boundary of
/// `estimate`.
pub fn is_refinement(estimate: &[usize], truth: &[usize]) -> bool {
    fn boundaries(counts: &[usize]) -> Vec<usize> {
        counts
            .iter()
            .scan(0, |acc, &k| {
                *acc += k;
                Some(*acc)
            })
            .collect()
    }
    if estimate.contains(&0) || estimate.iter().sum::<usize>() != truth.iter().sum::<usize>() {
        return false;
    }
    let fine = boundaries(estimate);
    boundaries(truth).iter().all(|b| fine.contains(b))
}

/// Size of the largest intersection of `set` with one of `clusters`.
pub fn best_overlap(set: &[usize], clusters: &[Vec<usize>]) -> usize {
    clusters
        .iter()
        .map(|c| set.iter().filter(|u| c.contains(u)).count())
        .max()
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relabelled_partitions_match() {
        let m = compare_partitions(&[vec![1, 2], vec![3]], &[vec![3], vec![2, 1]]).unwrap();
        assert!(m.exact);
        assert_eq!(m.misclassified, 0);
        assert_eq!(m.mapping, vec![Some(1), Some(0)]);
    }

    #[test]
    fn merged_cluster_is_inexact() {
        let m = compare_partitions(&[vec![1, 2, 3]], &[vec![1, 2], vec![3]]).unwrap();
        assert!(!m.exact);
        assert_eq!(m.misclassified, 1);
    }

    #[test]
    fn identical_large_partition() {
        let p: Vec<Vec<usize>> = (0..10).map(|i| (10 * i..10 * i + 10).collect()).collect();
        let m = compare_partitions(&p, &p).unwrap();
        assert!(m.exact && m.misclassified == 0);
    }

    #[test]
    fn overlaps_rejected() {
        assert!(matches!(
            compare_partitions(&[vec![0, 1], vec![1]], &[vec![0, 1]]),
            Err(VerifyError::Overlap { vertex: 1, side: "recovered" })
        ));
    }

    #[test]
    fn missing_vertices_count_as_misclassified() {
        let m = compare_partitions(&[vec![0, 1], vec![]], &[vec![0, 1], vec![2, 3]]).unwrap();
        assert!(!m.exact);
        assert_eq!(m.misclassified, 2);
    }

    #[test]
    fn refinement() {
        assert!(is_refinement(&[2, 1], &[2, 1]));
        assert!(is_refinement(&[1, 1, 1], &[2, 1]));
        assert!(!is_refinement(&[3], &[2, 1]));
        assert!(!is_refinement(&[1, 2], &[2, 1]));
        assert!(!is_refinement(&[2], &[2, 1]));
        assert!(counts_consistent(&[2, 1], 3));
        assert!(!counts_consistent(&[2, 2], 3));
    }
}
