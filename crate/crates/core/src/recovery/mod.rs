//! Iterated-projection cluster recovery.
//!
//! Each iteration projects the (shifted) matrix of the surviving vertices
//! onto a dominant eigenspace, reads candidate clusters off projector
//! columns, keeps the candidate with the largest projected indicator, cleans
//! it up by neighbour counts and deletes the result before recursing.

mod drivers;
mod gap;
mod steps;

pub use drivers::{recover_auto, recover_general, recover_nonuniform, recover_uniform};
pub use gap::{estimate_supercluster_counts, gap_scan, scan_threshold};
pub use steps::{candidate_sets, estimate_shat, extract_cluster, neighbor_stat, select_candidate, Selection};

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{DistributionSpec, InstanceKind};
use crate::spectral::SpectralError;

/// Constant of the Bernoulli norm bound `||B - B-hat||_2 <= 7 sqrt(n)`.
pub const BERNOULLI_NOISE_CONSTANT: f64 = 7.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecoveryError {
    #[error("invalid recovery configuration: {0}")]
    Config(String),
    #[error("supercluster counts are required")]
    MissingCounts,
    #[error("separation constant c is required for the eigen-gap scan")]
    MissingSeparation,
    #[error("gap-scan threshold {threshold} is not positive; need (p - q) c > 2 nu")]
    NonPositiveThreshold { threshold: f64 },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Noise parameters of the general symmetric-matrix model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralParams {
    pub sigma: f64,
    pub kappa: f64,
    /// `max(|p|, |q|)`.
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryConfig {
    pub p: f64,
    pub q: f64,
    pub epsilon: f64,
    /// `nu` in `s-hat = (lambda_1 + nu sqrt(n)) / (p - q)`.
    pub noise_constant: f64,
    pub supercluster_counts: Option<Vec<usize>>,
    pub c: Option<f64>,
    pub general: Option<GeneralParams>,
}

impl RecoveryConfig {
    /// Graph model with the Bernoulli constant `nu = 7`.
    pub fn bernoulli(p: f64, q: f64, epsilon: f64) -> Self {
        Self {
            p,
            q,
            epsilon,
            noise_constant: BERNOULLI_NOISE_CONSTANT,
            supercluster_counts: None,
            c: None,
            general: None,
        }
    }

    /// General model: `sigma` and `kappa` are the largest over the three
    /// laws, `nu = 2 sigma + 6 kappa`.
    pub fn general(
        d1: &DistributionSpec,
        d2: &DistributionSpec,
        d3: &DistributionSpec,
        epsilon: f64,
    ) -> Self {
        let sigma = [d1, d2, d3].iter().map(|d| d.sigma()).fold(0.0, f64::max);
        let kappa = [d1, d2, d3].iter().map(|d| d.kappa()).fold(0.0, f64::max);
        let (p, q) = (d1.mean(), d2.mean());
        Self {
            p,
            q,
            epsilon,
            noise_constant: 2.0 * sigma + 6.0 * kappa,
            supercluster_counts: None,
            c: None,
            general: Some(GeneralParams {
                sigma,
                kappa,
                mu: p.abs().max(q.abs()),
            }),
        }
    }

    pub fn with_counts(mut self, counts: &[usize]) -> Self {
        self.supercluster_counts = Some(counts.to_vec());
        self
    }

    pub fn with_noise_constant(mut self, nu: f64) -> Self {
        self.noise_constant = nu;
        self
    }

    pub fn with_separation(mut self, c: f64) -> Self {
        self.c = Some(c);
        self
    }

    pub fn validate(&self) -> Result<(), RecoveryError> {
        let bad = |m: String| Err(RecoveryError::Config(m));
        if !(self.p > self.q) {
            return bad(format!("need p > q, got p = {}, q = {}", self.p, self.q));
        }
        if !(self.epsilon > 0.0) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !(self.noise_constant > 0.0) || !self.noise_constant.is_finite() {
            return bad(format!("noise constant must be positive, got {}", self.noise_constant));
        }
        if let Some(counts) = &self.supercluster_counts {
            if counts.is_empty() || counts.contains(&0) {
                return bad("supercluster counts must be positive".into());
            }
        }
        if let Some(g) = &self.general {
            if g.mu != self.p.abs().max(self.q.abs()) {
                return bad(format!("mu = {} must equal max(|p|, |q|)", g.mu));
            }
            if g.sigma < 0.0 || g.kappa < 0.0 {
                return bad("sigma and kappa must be non-negative".into());
            }
        }
        Ok(())
    }

    /// Statistic used by the clean-up step.
    pub fn stat_kind(&self) -> InstanceKind {
        if self.general.is_some() {
            InstanceKind::General
        } else {
            InstanceKind::Graph
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub iteration: usize,
    /// Dimension of the eigenspace projected onto.
    pub rank: usize,
    pub s_hat: f64,
    pub chosen_vertex: usize,
    pub candidate_size: usize,
    pub candidate_norm: f64,
    pub recovered_size: usize,
    /// `W_{v*}` in original vertex ids.
    pub candidate: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StallReason {
    NoAdmissibleCandidate,
    EmptyExtraction,
    /// The gap scan found no group of eigenvalues above the threshold.
    NoSuperclusterEstimate,
    /// More eigenvectors requested than vertices remain.
    RankExceedsVertices,
    /// Counts exhausted (or too few vertices left) with vertices unassigned.
    UnassignedVertices,
}

impl fmt::Display for StallReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::NoAdmissibleCandidate => "no-admissible-candidate",
            Self::EmptyExtraction => "empty-extraction",
            Self::NoSuperclusterEstimate => "no-supercluster-estimate",
            Self::RankExceedsVertices => "rank-exceeds-vertices",
            Self::UnassignedVertices => "unassigned-vertices",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecoveryStatus {
    Success,
    Stalled(StallReason),
}

impl RecoveryStatus {
    pub fn is_success(&self) -> bool {
        matches!(self, Self::Success)
    }
}

impl fmt::Display for RecoveryStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Success => f.write_str("success"),
            Self::Stalled(r) => write!(f, "stalled {r}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryResult {
    /// Recovered clusters in extraction order, each sorted.
    pub clusters: Vec<Vec<usize>>,
    pub traces: Vec<IterationTrace>,
    pub status: RecoveryStatus,
}

impl RecoveryResult {
    pub fn is_success(&self) -> bool {
        self.status.is_success()
    }

    /// Text form: a status line, the clusters, then one trace line per
    /// iteration (`index s_hat v* |W| norm |C|`).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "status {}", self.status);
        let _ = writeln!(out, "clusters {}", self.clusters.len());
        for c in &self.clusters {
            let line: Vec<String> = c.iter().map(ToString::to_string).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        let _ = writeln!(out, "trace {}", self.traces.len());
        for t in &self.traces {
            let _ = writeln!(
                out,
                "{} {} {} {} {} {}",
                t.iteration, t.s_hat, t.chosen_vertex, t.candidate_size, t.candidate_norm, t.recovered_size
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn general_constants() {
        let d1 = DistributionSpec::two_point(0.0, 1.0, 0.8).unwrap();
        let d2 = DistributionSpec::two_point(0.0, 1.0, 0.2).unwrap();
        let cfg = RecoveryConfig::general(&d1, &d2, &DistributionSpec::point(0.0), 0.01);
        let g = cfg.general.unwrap();
        assert!((g.sigma - 0.4).abs() < 1e-12);
        assert!((g.kappa - 0.8).abs() < 1e-12);
        assert_eq!(g.mu, 0.8);
        assert!((cfg.noise_constant - 5.6).abs() < 1e-12);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn validation() {
        assert!(RecoveryConfig::bernoulli(0.2, 0.3, 0.01).validate().is_err());
        assert!(RecoveryConfig::bernoulli(0.8, 0.2, 0.0).validate().is_err());
        assert!(RecoveryConfig::bernoulli(0.8, 0.2, 0.01).with_noise_constant(0.0).validate().is_err());
        assert!(RecoveryConfig::bernoulli(0.8, 0.2, 0.01).with_counts(&[1, 0]).validate().is_err());
        let mut cfg = RecoveryConfig::general(
            &DistributionSpec::point(0.5),
            &DistributionSpec::uniform(-0.1, 0.1).unwrap(),
            &DistributionSpec::point(0.0),
            0.01,
        );
        cfg.general.as_mut().unwrap().mu = 0.4;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn text_form() {
        let r = RecoveryResult {
            clusters: vec![vec![0, 2], vec![1]],
            traces: vec![IterationTrace {
                iteration: 0,
                rank: 1,
                s_hat: 2.5,
                chosen_vertex: 0,
                candidate_size: 2,
                candidate_norm: 1.5,
                recovered_size: 2,
                candidate: vec![0, 2],
            }],
            status: RecoveryStatus::Stalled(StallReason::EmptyExtraction),
        };
        assert_eq!(
            r.to_text(),
            "status stalled empty-extraction\nclusters 2\n0 2\n1\ntrace 1\n0 2.5 0 2 1.5 2\n"
        );
    }
}
