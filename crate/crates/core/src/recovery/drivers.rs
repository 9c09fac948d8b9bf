use super::steps::{candidate_sets, estimate_shat, extract_cluster, select_candidate};
use super::{
    estimate_supercluster_counts, IterationTrace, RecoveryConfig, RecoveryError, RecoveryResult,
    RecoveryStatus, StallReason,
};
use crate::model::Instance;
use crate::spectral::{rank_projector, shifted_matrix, GapPolicy, SymMatrix, SymmetricEigen};

/// How the projector rank is chosen at each iteration.
enum RankRule {
    /// Known supercluster counts, consumed front to back.
    Counts(Vec<usize>),
    /// Gap scan of the current spectrum.
    Auto,
    /// All clusters of size `s`: rank `floor(m / s)` on `A-hat` itself.
    Uniform(usize),
}

enum Next {
    Rank(usize),
    Done,
    Stall(StallReason),
}

impl RankRule {
    fn next(&mut self, eigs: &[f64], m: usize, cfg: &RecoveryConfig) -> Result<Next, RecoveryError> {
        Ok(match self {
            Self::Counts(counts) => match counts.iter().find(|&&k| k > 0) {
                Some(&k) => Next::Rank(k),
                None => Next::Done,
            },
            Self::Auto => match estimate_supercluster_counts(eigs, cfg, m)?.first() {
                Some(&k) => Next::Rank(k),
                None => Next::Stall(StallReason::NoSuperclusterEstimate),
            },
            Self::Uniform(s) => {
                if m < *s {
                    Next::Done
                } else {
                    if !m.is_multiple_of(*s) {
                        log::warn!("{m} vertices left is not a multiple of s = {s}; using k = {}", m / *s);
                    }
                    Next::Rank(m / *s)
                }
            }
        })
    }

    fn commit(&mut self) {
        if let Self::Counts(counts) = self {
            if let Some(k) = counts.iter_mut().find(|k| **k > 0) {
                *k -= 1;
            }
        }
    }

    fn when_exhausted(&self) -> RecoveryStatus {
        match self {
            Self::Counts(counts) if counts.iter().any(|&k| k > 0) => {
                RecoveryStatus::Stalled(StallReason::RankExceedsVertices)
            }
            _ => RecoveryStatus::Success,
        }
    }

    fn uniform_size(&self) -> Option<usize> {
        match self {
            Self::Uniform(s) => Some(*s),
            _ => None,
        }
    }
}

fn run(a_hat: &SymMatrix, cfg: &RecoveryConfig, mut rule: RankRule) -> Result<RecoveryResult, RecoveryError> {
    cfg.validate()?;
    let mut alive: Vec<usize> = (0..a_hat.dim()).collect();
    let mut clusters = Vec::new();
    let mut traces = Vec::new();
    let stalled = |clusters, traces, reason| RecoveryResult {
        clusters,
        traces,
        status: RecoveryStatus::Stalled(reason),
    };

    loop {
        if alive.is_empty() {
            return Ok(RecoveryResult {
                clusters,
                traces,
                status: rule.when_exhausted(),
            });
        }
        let m = alive.len();
        let sub = a_hat.principal_submatrix(&alive);
        let uniform = rule.uniform_size();
        let target = match uniform {
            Some(_) => sub.clone(),
            None => shifted_matrix(&sub, cfg.p, cfg.q),
        };
        let eig = SymmetricEigen::new(&target)?;
        let rank = match rule.next(eig.values(), m, cfg)? {
            Next::Rank(r) => r,
            Next::Done => {
                return Ok(if alive.is_empty() {
                    RecoveryResult { clusters, traces, status: RecoveryStatus::Success }
                } else {
                    stalled(clusters, traces, StallReason::UnassignedVertices)
                });
            }
            Next::Stall(reason) => return Ok(stalled(clusters, traces, reason)),
        };
        if rank > m {
            return Ok(stalled(clusters, traces, StallReason::RankExceedsVertices));
        }
        let s_hat = match uniform {
            Some(s) => s as f64,
            None => estimate_shat(eig.values()[0], cfg, m),
        };
        let decomp = eig.leading(rank)?;
        let proj = rank_projector(&decomp, rank, GapPolicy::default())?;
        let sets = candidate_sets(&proj, s_hat);
        let Some(sel) = select_candidate(&proj, &sets, s_hat, cfg.epsilon) else {
            return Ok(stalled(clusters, traces, StallReason::NoAdmissibleCandidate));
        };
        let local = extract_cluster(&sub, &sel.set, s_hat, cfg);
        let recovered: Vec<usize> = local.iter().map(|&u| alive[u]).collect();
        log::debug!(
            "iteration {}: rank {rank}, s-hat {s_hat:.3}, v* {}, |W| {}, |C| {}",
            traces.len(),
            alive[sel.vertex],
            sel.set.len(),
            recovered.len()
        );
        traces.push(IterationTrace {
            iteration: traces.len(),
            rank,
            s_hat,
            chosen_vertex: alive[sel.vertex],
            candidate_size: sel.set.len(),
            candidate_norm: sel.norm,
            recovered_size: recovered.len(),
            candidate: sel.set.iter().map(|&u| alive[u]).collect(),
        });
        if recovered.is_empty() {
            return Ok(stalled(clusters, traces, StallReason::EmptyExtraction));
        }
        let mut keep = vec![true; m];
        for &u in &local {
            keep[u] = false;
        }
        alive = alive.into_iter().zip(keep).filter_map(|(v, k)| k.then_some(v)).collect();
        clusters.push(recovered);
        rule.commit();
    }
}

/// Supercluster-aware iterated projection on `B-hat` with known counts,
/// using the graph clean-up rule.
pub fn recover_nonuniform(instance: &Instance, cfg: &RecoveryConfig) -> Result<RecoveryResult, RecoveryError> {
    let counts = cfg.supercluster_counts.clone().ok_or(RecoveryError::MissingCounts)?;
    let graph_cfg = RecoveryConfig {
        general: None,
        ..cfg.clone()
    };
    run(&instance.matrix, &graph_cfg, RankRule::Counts(counts))
}

/// The same iteration with the general-model statistic `S_{u,W}` and its
/// threshold. `cfg.general` must be set.
pub fn recover_general(instance: &Instance, cfg: &RecoveryConfig) -> Result<RecoveryResult, RecoveryError> {
    if cfg.general.is_none() {
        return Err(RecoveryError::Config("general-model parameters (sigma, kappa, mu) are required".into()));
    }
    let counts = cfg.supercluster_counts.clone().ok_or(RecoveryError::MissingCounts)?;
    run(&instance.matrix, cfg, RankRule::Counts(counts))
}

/// Counts are re-estimated by a gap scan of every shrunken `B-hat`; the
/// first estimated group sets the projector rank. Needs `cfg.c`.
pub fn recover_auto(instance: &Instance, cfg: &RecoveryConfig) -> Result<RecoveryResult, RecoveryError> {
    if cfg.c.is_none() {
        return Err(RecoveryError::MissingSeparation);
    }
    run(&instance.matrix, cfg, RankRule::Auto)
}

/// Equal-size clusters of size `s`: rank `floor(m / s)` projector of `A-hat`,
/// thresholds in terms of `s`. Stops once fewer than `s` vertices remain.
pub fn recover_uniform(instance: &Instance, s: usize, cfg: &RecoveryConfig) -> Result<RecoveryResult, RecoveryError> {
    if s == 0 {
        return Err(RecoveryError::Config("cluster size must be positive".into()));
    }
    if !instance.n().is_multiple_of(s) {
        log::warn!("n = {} is not a multiple of s = {s}", instance.n());
    }
    let graph_cfg = RecoveryConfig {
        general: None,
        ..cfg.clone()
    };
    run(&instance.matrix, &graph_cfg, RankRule::Uniform(s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_partition, sample_graph, ModelParams, SampleOptions};

    fn noiseless(n: usize, sizes: &[usize], counts: &[usize], seed: u64) -> Instance {
        let spec = build_partition(n, sizes, counts).unwrap();
        sample_graph(&spec, &ModelParams::new(1.0, 0.0, 0.01, 1.0), seed, SampleOptions::default()).unwrap()
    }

    fn sorted(mut c: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
        c.sort();
        c
    }

    #[test]
    fn two_small_clusters() {
        let inst = noiseless(5, &[3, 2], &[1, 1], 0);
        let cfg = RecoveryConfig::bernoulli(1.0, 0.0, 0.06).with_noise_constant(0.05).with_counts(&[1, 1]);
        let r = recover_nonuniform(&inst, &cfg).unwrap();
        assert!(r.is_success(), "{r:?}");
        assert_eq!(sorted(r.clusters), sorted(inst.truth_clusters()));
        assert_eq!(r.traces.len(), 2);
    }

    #[test]
    fn uniform_noiseless() {
        let inst = noiseless(12, &[3, 3, 3, 3], &[4], 2);
        let cfg = RecoveryConfig::bernoulli(1.0, 0.0, 0.04);
        let r = recover_uniform(&inst, 3, &cfg).unwrap();
        assert!(r.is_success(), "{r:?}");
        assert_eq!(sorted(r.clusters), sorted(inst.truth_clusters()));
    }

    #[test]
    fn uniform_leftover_stalls() {
        let inst = noiseless(7, &[3, 3, 1], &[2, 1], 2);
        let cfg = RecoveryConfig::bernoulli(1.0, 0.0, 0.04);
        let r = recover_uniform(&inst, 3, &cfg).unwrap();
        assert_eq!(r.status, RecoveryStatus::Stalled(StallReason::UnassignedVertices));
        assert_eq!(r.clusters.len(), 2);
    }

    #[test]
    fn missing_inputs() {
        let inst = noiseless(4, &[2, 2], &[2], 0);
        let cfg = RecoveryConfig::bernoulli(1.0, 0.0, 0.01);
        assert_eq!(recover_nonuniform(&inst, &cfg), Err(RecoveryError::MissingCounts));
        assert_eq!(recover_auto(&inst, &cfg), Err(RecoveryError::MissingSeparation));
        assert!(recover_general(&inst, &cfg.clone().with_counts(&[2])).is_err());
    }

    #[test]
    fn nu_seven_overshoots_small_clusters() {
        // s-hat = s + 7 sqrt(n) puts the degree threshold above the cluster size
        let inst = noiseless(5, &[3, 2], &[1, 1], 0);
        let cfg = RecoveryConfig::bernoulli(1.0, 0.0, 0.06).with_counts(&[1, 1]);
        let r = recover_nonuniform(&inst, &cfg).unwrap();
        assert!(!r.is_success());
    }

    #[test]
    fn auto_matches_known_counts_without_noise() {
        let inst = noiseless(90, &[40, 40, 10], &[2, 1], 5);
        let cfg = RecoveryConfig::bernoulli(1.0, 0.0, 0.02)
            .with_noise_constant(0.05)
            .with_separation(30.0 / 90f64.sqrt());
        let known = recover_nonuniform(&inst, &cfg.clone().with_counts(&[2, 1])).unwrap();
        let auto = recover_auto(&inst, &cfg).unwrap();
        assert!(known.is_success());
        assert_eq!(known, auto);
    }
}
