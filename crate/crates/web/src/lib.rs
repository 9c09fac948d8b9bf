//! Browser bindings for a small planted-partition playground.
//!
//! Every export takes a JSON [`DemoInput`] and returns a JSON view. The
//! `*_view` functions hold the logic and run natively as well.

use planted::model::{build_partition, sample_graph, Instance, ModelParams, SampleOptions};
use planted::recovery::{
    estimate_supercluster_counts, recover_auto, recover_nonuniform, scan_threshold, RecoveryConfig,
};
use planted::spectral::{eigendecomp, eigenvalues, rank_projector, GapPolicy};
use planted::verify::{analytic_projector, compare_partitions, expected_spectrum};
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

/// Largest instance the page will sample; dense eigensolves are cubic.
pub const MAX_VERTICES: usize = 300;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemoInput {
    pub sizes: Vec<usize>,
    pub counts: Vec<usize>,
    pub p: f64,
    pub q: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_nu")]
    pub nu: f64,
    #[serde(default)]
    pub seed: u64,
    /// Projector rank; defaults to the first supercluster count.
    #[serde(default)]
    pub rank: Option<usize>,
    /// Estimate supercluster counts from the spectrum.
    #[serde(default)]
    pub auto_counts: bool,
}

fn default_epsilon() -> f64 {
    0.05
}

fn default_nu() -> f64 {
    0.7
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumView {
    pub n: usize,
    pub lambda_hat: Vec<f64>,
    pub lambda: Vec<f64>,
    /// `None` when the scan threshold is not positive.
    pub threshold: Option<f64>,
    pub estimated_counts: Vec<usize>,
    pub true_counts: Vec<usize>,
    /// Indices `i` with a marked gap between `i - 1` and `i`.
    pub gaps: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceView {
    pub rank: usize,
    pub s_hat: f64,
    pub chosen_vertex: usize,
    pub candidate_size: usize,
    pub recovered_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveryView {
    pub n: usize,
    pub status: String,
    pub exact: bool,
    pub misclassified: usize,
    pub clusters: Vec<Vec<usize>>,
    pub traces: Vec<TraceView>,
    /// Vertices grouped by recovered cluster, unassigned ones last.
    pub order: Vec<usize>,
    /// Recovered cluster of `order[i]`, or `-1`.
    pub assigned: Vec<i64>,
    /// True cluster of `order[i]`.
    pub truth: Vec<usize>,
    /// Adjacency rows in `order`, one `0`/`1` character per entry.
    pub adjacency: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectorView {
    pub n: usize,
    pub rank: usize,
    /// Entries of the rank-`rank` projector of `B-hat`, rows and columns in
    /// true-cluster order.
    pub entries: Vec<Vec<f64>>,
    /// Frobenius distance to the projector of the expected matrix.
    pub distance: f64,
    /// `lambda_r - lambda_{r+1}` of `B-hat`.
    pub gap: Option<f64>,
    /// True cluster of each row.
    pub truth: Vec<usize>,
}

fn sample(input: &DemoInput) -> Result<Instance, String> {
    let n: usize = input.sizes.iter().sum();
    if n > MAX_VERTICES {
        return Err(format!("n = {n} exceeds the demo limit of {MAX_VERTICES}"));
    }
    let spec = build_partition(n, &input.sizes, &input.counts).map_err(|e| e.to_string())?;
    let params = ModelParams::new(input.p, input.q, input.epsilon, spec.separation_constant());
    sample_graph(&spec, &params, input.seed, SampleOptions::default()).map_err(|e| e.to_string())
}

fn config(input: &DemoInput, inst: &Instance) -> RecoveryConfig {
    RecoveryConfig::bernoulli(input.p, input.q, input.epsilon)
        .with_noise_constant(input.nu)
        .with_counts(&input.counts)
        .with_separation(inst.truth.separation_constant())
}

/// Vertices sorted by true cluster, ties by id.
fn truth_order(inst: &Instance) -> Vec<usize> {
    let mut order: Vec<usize> = (0..inst.n()).collect();
    order.sort_by_key(|&u| (inst.labels[u], u));
    order
}

pub fn spectrum_view(input: &DemoInput) -> Result<SpectrumView, String> {
    let inst = sample(input)?;
    let n = inst.n();
    let lambda_hat = eigenvalues(&inst.b_hat()).map_err(|e| e.to_string())?;
    let cfg = config(input, &inst);
    let threshold = scan_threshold(&cfg, n).ok();
    let estimated_counts = match threshold {
        Some(_) => estimate_supercluster_counts(&lambda_hat, &cfg, n).map_err(|e| e.to_string())?,
        None => Vec::new(),
    };
    let gaps = estimated_counts
        .iter()
        .scan(0, |acc, &c| {
            *acc += c;
            Some(*acc)
        })
        .collect();
    Ok(SpectrumView {
        n,
        lambda: expected_spectrum(&inst.truth, input.p, input.q),
        lambda_hat,
        threshold,
        estimated_counts,
        true_counts: input.counts.clone(),
        gaps,
    })
}

pub fn recovery_view(input: &DemoInput) -> Result<RecoveryView, String> {
    let inst = sample(input)?;
    let cfg = config(input, &inst);
    let result = if input.auto_counts {
        recover_auto(&inst, &cfg)
    } else {
        recover_nonuniform(&inst, &cfg)
    }
    .map_err(|e| e.to_string())?;
    let matched = compare_partitions(&result.clusters, &inst.truth_clusters()).map_err(|e| e.to_string())?;

    let n = inst.n();
    let mut owner = vec![-1i64; n];
    for (i, c) in result.clusters.iter().enumerate() {
        for &u in c {
            owner[u] = i as i64;
        }
    }
    let mut order: Vec<usize> = result.clusters.iter().flatten().copied().collect();
    order.extend((0..n).filter(|&u| owner[u] < 0));
    let adjacency = order
        .iter()
        .map(|&u| {
            order
                .iter()
                .map(|&v| if inst.matrix.get(u, v) > 0.5 { '1' } else { '0' })
                .collect()
        })
        .collect();
    Ok(RecoveryView {
        n,
        status: result.status.to_string(),
        exact: matched.exact,
        misclassified: matched.misclassified,
        traces: result
            .traces
            .iter()
            .map(|t| TraceView {
                rank: t.rank,
                s_hat: t.s_hat,
                chosen_vertex: t.chosen_vertex,
                candidate_size: t.candidate_size,
                recovered_size: t.recovered_size,
            })
            .collect(),
        clusters: result.clusters,
        assigned: order.iter().map(|&u| owner[u]).collect(),
        truth: order.iter().map(|&u| inst.labels[u]).collect(),
        adjacency,
        order,
    })
}

pub fn projector_view(input: &DemoInput) -> Result<ProjectorView, String> {
    let inst = sample(input)?;
    let n = inst.n();
    let rank = input.rank.unwrap_or(input.counts[0]);
    let decomp = eigendecomp(&inst.b_hat()).map_err(|e| e.to_string())?;
    let proj = rank_projector(&decomp, rank, GapPolicy::default()).map_err(|e| e.to_string())?;
    let ideal = analytic_projector(&inst.labels, inst.truth.sizes(), rank);
    let distance = proj
        .matrix()
        .sub(&ideal)
        .to_rows()
        .iter()
        .flatten()
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt();
    let order = truth_order(&inst);
    Ok(ProjectorView {
        n,
        rank,
        entries: order
            .iter()
            .map(|&u| order.iter().map(|&v| proj.entry(u, v)).collect())
            .collect(),
        distance,
        gap: proj.gap(),
        truth: order.iter().map(|&u| inst.labels[u]).collect(),
    })
}

fn run<T: Serialize>(input: &str, f: fn(&DemoInput) -> Result<T, String>) -> Result<String, String> {
    let input: DemoInput = serde_json::from_str(input).map_err(|e| e.to_string())?;
    let view = f(&input)?;
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

/// Eigenvalues of `B-hat` and `B` with the estimated supercluster gaps.
#[wasm_bindgen]
pub fn spectrum_demo(input: &str) -> Result<String, JsValue> {
    run(input, spectrum_view).map_err(|e| JsValue::from_str(&e))
}

/// One run of the iterated-projection recovery.
#[wasm_bindgen]
pub fn recovery_demo(input: &str) -> Result<String, JsValue> {
    run(input, recovery_view).map_err(|e| JsValue::from_str(&e))
}

/// Heat map of a dominant-eigenspace projector.
#[wasm_bindgen]
pub fn projector_demo(input: &str) -> Result<String, JsValue> {
    run(input, projector_view).map_err(|e| JsValue::from_str(&e))
}
