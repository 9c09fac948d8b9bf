use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DistributionSpec, ModelError, ModelParams, PartitionSpec};
use crate::spectral::{shifted_matrix, SymMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceKind {
    Graph,
    General,
}

impl InstanceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Graph => "graph",
            Self::General => "general",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleOptions {
    /// Relabel vertices by a seeded permutation so that cluster membership
    /// cannot be read off the index order.
    pub permute: bool,
}

impl Default for SampleOptions {
    fn default() -> Self {
        Self { permute: true }
    }
}

/// A sampled matrix together with the partition that generated it.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub matrix: SymMatrix,
    pub truth: PartitionSpec,
    /// Cluster index of each vertex (index into `truth.sizes()`).
    pub labels: Vec<usize>,
    pub seed: u64,
    pub kind: InstanceKind,
    /// Mean of the intra-cluster entries.
    pub p: f64,
    /// Mean of the inter-cluster entries.
    pub q: f64,
}

impl Instance {
    pub fn n(&self) -> usize {
        self.matrix.dim()
    }

    /// Ground-truth vertex sets, in cluster-index order, each sorted.
    pub fn truth_clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.truth.k()];
        for (u, &l) in self.labels.iter().enumerate() {
            out[l].push(u);
        }
        out
    }

    /// `(A, B)` for this instance's vertex labelling.
    pub fn expected(&self) -> (SymMatrix, SymMatrix) {
        expected_for_labels(&self.labels, self.p, self.q)
    }

    /// `B-hat = A-hat - qJ + pI`.
    pub fn b_hat(&self) -> SymMatrix {
        shifted_matrix(&self.matrix, self.p, self.q)
    }
}

fn labels_for(spec: &PartitionSpec, seed: u64, options: SampleOptions) -> Vec<usize> {
    let mut labels = spec.labels();
    if options.permute {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        labels.shuffle(&mut rng);
    }
    labels
}

fn entry_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    rng
}

/// Bernoulli planted-partition graph: symmetric 0/1 adjacency with zero
/// diagonal. Entries are drawn row by row over the strict upper triangle.
pub fn sample_graph(
    spec: &PartitionSpec,
    params: &ModelParams,
    seed: u64,
    options: SampleOptions,
) -> Result<Instance, ModelError> {
    params.check_probabilities()?;
    let n = spec.n();
    let labels = labels_for(spec, seed, options);
    let mut rng = entry_rng(seed);
    let mut m = SymMatrix::zeros(n);
    for u in 0..n {
        for v in u + 1..n {
            let prob = if labels[u] == labels[v] { params.p } else { params.q };
            if rng.random::<f64>() < prob {
                m.set(u, v, 1.0);
            }
        }
    }
    Ok(Instance {
        matrix: m,
        truth: spec.clone(),
        labels,
        seed,
        kind: InstanceKind::Graph,
        p: params.p,
        q: params.q,
    })
}

/// Random symmetric matrix: intra-cluster entries from `d1`, inter-cluster
/// from `d2`, diagonal from `d3`, drawn row by row over the upper triangle
/// including the diagonal.
pub fn sample_general(
    spec: &PartitionSpec,
    d1: &DistributionSpec,
    d2: &DistributionSpec,
    d3: &DistributionSpec,
    seed: u64,
    options: SampleOptions,
) -> Result<Instance, ModelError> {
    let (p, q) = (d1.mean(), d2.mean());
    if !(p > q) {
        return Err(ModelError::MeanOrdering { p, q });
    }
    if d3.mean() != 0.0 {
        return Err(ModelError::DiagonalMean(d3.mean()));
    }
    let n = spec.n();
    let labels = labels_for(spec, seed, options);
    let mut rng = entry_rng(seed);
    let mut m = SymMatrix::zeros(n);
    for u in 0..n {
        m.set(u, u, d3.sample(&mut rng));
        for v in u + 1..n {
            let d = if labels[u] == labels[v] { d1 } else { d2 };
            m.set(u, v, d.sample(&mut rng));
        }
    }
    Ok(Instance {
        matrix: m,
        truth: spec.clone(),
        labels,
        seed,
        kind: InstanceKind::General,
        p,
        q,
    })
}

/// `A = E[A-hat] + pI` and `B = A - qJ` for the canonical layout.
pub fn expected_matrices(spec: &PartitionSpec, params: &ModelParams) -> (SymMatrix, SymMatrix) {
    expected_for_labels(&spec.labels(), params.p, params.q)
}

/// `(A, B)` for an arbitrary vertex labelling.
pub fn expected_for_labels(labels: &[usize], p: f64, q: f64) -> (SymMatrix, SymMatrix) {
    let n = labels.len();
    let a = SymMatrix::from_fn(n, |u, v| if labels[u] == labels[v] { p } else { q });
    let b = SymMatrix::from_fn(n, |u, v| if labels[u] == labels[v] { p - q } else { 0.0 });
    (a, b)
}
