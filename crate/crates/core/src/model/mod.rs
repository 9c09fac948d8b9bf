//! Planted partitions, their structural assumptions, noise laws and samplers.

mod distribution;
mod sample;
pub mod text;

pub use distribution::{DistributionSpec, Family};
pub use sample::{
    expected_for_labels, expected_matrices, sample_general, sample_graph, Instance, InstanceKind,
    SampleOptions,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("cluster sizes sum to {actual}, expected n = {expected}")]
    SizeSumMismatch { expected: usize, actual: usize },
    #[error("cluster sizes must be non-increasing (size {index} is larger than its predecessor)")]
    NonMonotoneSizes { index: usize },
    #[error("supercluster counts sum to {actual}, expected {expected} clusters")]
    CountSumMismatch { expected: usize, actual: usize },
    #[error("cluster sizes and supercluster counts must be positive")]
    NonPositive,
    #[error("probability {name} = {value} outside [0, 1]")]
    ProbabilityOutOfRange { name: &'static str, value: f64 },
    #[error("intra-cluster mean {p} must exceed inter-cluster mean {q}")]
    MeanOrdering { p: f64, q: f64 },
    #[error("diagonal distribution must have mean 0, got {0}")]
    DiagonalMean(f64),
    #[error("invalid distribution: {0}")]
    Distribution(String),
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Ground-truth clusters `C_1..C_k` with sizes `s_1 >= .. >= s_k`, grouped by
/// index order into superclusters of `k_1, .., k_K` clusters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionSpec {
    n: usize,
    sizes: Vec<usize>,
    supercluster_counts: Vec<usize>,
}

pub fn build_partition(
    n: usize,
    sizes: &[usize],
    supercluster_counts: &[usize],
) -> Result<PartitionSpec, ModelError> {
    if sizes.is_empty()
        || supercluster_counts.is_empty()
        || sizes.contains(&0)
        || supercluster_counts.contains(&0)
    {
        return Err(ModelError::NonPositive);
    }
    let total: usize = sizes.iter().sum();
    if total != n {
        return Err(ModelError::SizeSumMismatch {
            expected: n,
            actual: total,
        });
    }
    if let Some(i) = (1..sizes.len()).find(|&i| sizes[i] > sizes[i - 1]) {
        return Err(ModelError::NonMonotoneSizes { index: i });
    }
    let count_total: usize = supercluster_counts.iter().sum();
    if count_total != sizes.len() {
        return Err(ModelError::CountSumMismatch {
            expected: sizes.len(),
            actual: count_total,
        });
    }
    Ok(PartitionSpec {
        n,
        sizes: sizes.to_vec(),
        supercluster_counts: supercluster_counts.to_vec(),
    })
}

impl PartitionSpec {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn supercluster_counts(&self) -> &[usize] {
        &self.supercluster_counts
    }

    /// Number of clusters `k`.
    pub fn k(&self) -> usize {
        self.sizes.len()
    }

    /// Number of superclusters `K`.
    pub fn supercluster_total(&self) -> usize {
        self.supercluster_counts.len()
    }

    /// Canonical layout: `C_i` occupies the index range right after `C_{i-1}`.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut start = 0;
        self.sizes
            .iter()
            .map(|&s| {
                let c = (start..start + s).collect();
                start += s;
                c
            })
            .collect()
    }

    /// Cluster index of each vertex in the canonical layout.
    pub fn labels(&self) -> Vec<usize> {
        self.sizes
            .iter()
            .enumerate()
            .flat_map(|(i, &s)| std::iter::repeat_n(i, s))
            .collect()
    }

    /// Cluster indices making up each supercluster.
    pub fn superclusters(&self) -> Vec<Vec<usize>> {
        let mut start = 0;
        self.supercluster_counts
            .iter()
            .map(|&k| {
                let g = (start..start + k).collect();
                start += k;
                g
            })
            .collect()
    }

    /// Sizes of the clusters in each supercluster.
    pub fn supercluster_sizes(&self) -> Vec<&[usize]> {
        let mut start = 0;
        self.supercluster_counts
            .iter()
            .map(|&k| {
                let g = &self.sizes[start..start + k];
                start += k;
                g
            })
            .collect()
    }

    /// Gaps `min 𝒞_i - max 𝒞_{i+1}` between consecutive superclusters.
    pub fn supercluster_gaps(&self) -> Vec<f64> {
        self.supercluster_sizes()
            .windows(2)
            .map(|w| *w[0].last().unwrap() as f64 - w[1][0] as f64)
            .collect()
    }

    /// Largest `c` for which both the minimum-size and the size-gap
    /// conditions hold for this spec.
    pub fn separation_constant(&self) -> f64 {
        let root = (self.n as f64).sqrt();
        let smallest = *self.sizes.last().unwrap() as f64;
        self.supercluster_gaps()
            .into_iter()
            .fold(smallest, f64::min)
            / root
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub p: f64,
    pub q: f64,
    pub epsilon: f64,
    pub c: f64,
}

impl ModelParams {
    pub fn new(p: f64, q: f64, epsilon: f64, c: f64) -> Self {
        Self { p, q, epsilon, c }
    }

    /// Bernoulli-model ranges: `0 <= q < p <= 1`.
    pub fn check_probabilities(&self) -> Result<(), ModelError> {
        for (name, value) in [("p", self.p), ("q", self.q)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ModelError::ProbabilityOutOfRange { name, value });
            }
        }
        if self.q >= self.p {
            return Err(ModelError::MeanOrdering {
                p: self.p,
                q: self.q,
            });
        }
        Ok(())
    }
}

/// Which structural assumptions a spec meets. Never an error: out-of-regime
/// parameters are legitimate experiment inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssumptionReport {
    /// `s_k >= c sqrt(n)`.
    pub min_size: bool,
    /// Consecutive superclusters differ in size by at least `c sqrt(n)`.
    pub supercluster_gap: bool,
    /// Within each supercluster, `max <= (1 + eps) min`.
    pub size_ratio: bool,
    /// `eps < (p - q) / 20`.
    pub epsilon_below_gap: bool,
    /// `c >= 14 / ((p - q) eps)`.
    pub c_large_enough: bool,
    /// `eps <= 0.01`.
    pub epsilon_small: bool,
}

impl AssumptionReport {
    pub fn all(&self) -> bool {
        self.min_size
            && self.supercluster_gap
            && self.size_ratio
            && self.epsilon_below_gap
            && self.c_large_enough
            && self.epsilon_small
    }

    /// The conditions involving only the partition and `c`.
    pub fn structural(&self) -> bool {
        self.min_size && self.supercluster_gap && self.size_ratio
    }
}

pub fn validate_assumptions(spec: &PartitionSpec, params: &ModelParams) -> AssumptionReport {
    let threshold = params.c * (spec.n as f64).sqrt();
    let d = params.p - params.q;
    AssumptionReport {
        min_size: *spec.sizes.last().unwrap() as f64 >= threshold,
        supercluster_gap: spec.supercluster_gaps().iter().all(|&g| g >= threshold),
        size_ratio: spec
            .supercluster_sizes()
            .iter()
            .all(|g| g[0] as f64 <= (1.0 + params.epsilon) * *g.last().unwrap() as f64),
        epsilon_below_gap: params.epsilon < d / 20.0,
        c_large_enough: params.c >= 14.0 / (d * params.epsilon),
        epsilon_small: params.epsilon <= 0.01,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_layout() {
        let spec = build_partition(4, &[2, 2], &[2]).unwrap();
        assert_eq!(spec.clusters(), vec![vec![0, 1], vec![2, 3]]);
        assert_eq!(spec.superclusters(), vec![vec![0, 1]]);
        assert_eq!(spec.labels(), vec![0, 0, 1, 1]);
    }

    #[test]
    fn supercluster_grouping_follows_index_order() {
        let spec = build_partition(6, &[3, 2, 1], &[1, 2]).unwrap();
        assert_eq!(spec.superclusters(), vec![vec![0], vec![1, 2]]);
        assert_eq!(spec.supercluster_gaps(), vec![1.0]);
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(
            build_partition(5, &[3, 3], &[2]),
            Err(ModelError::SizeSumMismatch { expected: 5, actual: 6 })
        ));
        assert!(matches!(
            build_partition(5, &[2, 3], &[2]),
            Err(ModelError::NonMonotoneSizes { index: 1 })
        ));
        assert!(matches!(
            build_partition(5, &[3, 2], &[1]),
            Err(ModelError::CountSumMismatch { .. })
        ));
        assert!(build_partition(0, &[], &[]).is_err());
    }

    #[test]
    fn single_supercluster_gap_is_vacuous() {
        let spec = build_partition(400, &[200, 200], &[2]).unwrap();
        let r = validate_assumptions(&spec, &ModelParams::new(0.9, 0.1, 0.01, 1.0));
        assert!(r.supercluster_gap);
        assert!(r.min_size);
    }

    #[test]
    fn ratio_check() {
        let spec = build_partition(200, &[120, 80], &[2]).unwrap();
        let r = validate_assumptions(&spec, &ModelParams::new(0.9, 0.1, 0.01, 1.0));
        assert!(!r.size_ratio);
    }

    #[test]
    fn epsilon_against_gap() {
        let spec = build_partition(4, &[2, 2], &[2]).unwrap();
        let r = validate_assumptions(&spec, &ModelParams::new(0.9, 0.1, 0.05, 1.0));
        assert!(!r.epsilon_below_gap);
        let r = validate_assumptions(&spec, &ModelParams::new(0.9, 0.1, 0.03, 1.0));
        assert!(r.epsilon_below_gap);
    }

    #[test]
    fn separation_constant_is_tight() {
        let spec = build_partition(740, &[300, 290, 150], &[2, 1]).unwrap();
        let c = spec.separation_constant();
        assert!((c - 140.0 / 740f64.sqrt()).abs() < 1e-12);
        let r = validate_assumptions(&spec, &ModelParams::new(0.8, 0.2, 0.05, c));
        assert!(r.min_size && r.supercluster_gap);
        let r = validate_assumptions(&spec, &ModelParams::new(0.8, 0.2, 0.05, c * 1.001));
        assert!(!r.supercluster_gap);
    }
}
