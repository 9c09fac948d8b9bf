use super::RecoveryConfig;
use crate::model::InstanceKind;
use crate::spectral::{Projector, SymMatrix};

/// Relative slack under which two candidate norms count as tied.
const TIE_TOLERANCE: f64 = 1e-12;

/// `s-hat = (lambda_1 + nu sqrt(n)) / (p - q)`.
pub fn estimate_shat(lambda1: f64, cfg: &RecoveryConfig, n: usize) -> f64 {
    (lambda1 + cfg.noise_constant * (n as f64).sqrt()) / (cfg.p - cfg.q)
}

/// `W_v = { u : P(u, v) >= 1 / (2 s-hat) }` for every column `v`, each sorted.
pub fn candidate_sets(p: &Projector, s_hat: f64) -> Vec<Vec<usize>> {
    let n = p.dim();
    let threshold = 1.0 / (2.0 * s_hat);
    let mut sets = vec![Vec::new(); n];
    for u in 0..n {
        for (v, &x) in p.matrix().lower_row(u).iter().enumerate() {
            if x >= threshold {
                sets[v].push(u);
                if v != u {
                    sets[u].push(v);
                }
            }
        }
    }
    // row u appends v < u first, then u itself, then later rows append u' > u
    sets
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub vertex: usize,
    pub norm: f64,
    pub set: Vec<usize>,
}

/// The admissible column (`0 < |W_v| <= (1 + eps) s-hat`) maximizing
/// `||P 1_{W_v}||_2`; ties go to the smallest vertex id.
pub fn select_candidate(
    p: &Projector,
    sets: &[Vec<usize>],
    s_hat: f64,
    epsilon: f64,
) -> Option<Selection> {
    let cap = (1.0 + epsilon) * s_hat;
    let mut best: Option<(usize, f64)> = None;
    let mut previous: Option<(&[usize], f64)> = None;
    for (v, w) in sets.iter().enumerate() {
        if w.is_empty() || w.len() as f64 > cap {
            continue;
        }
        // columns of the same cluster usually share their set
        let norm = match previous {
            Some((prev, norm)) if prev == w.as_slice() => norm,
            _ => p.indicator_image_norm(w),
        };
        previous = Some((w, norm));
        if best.is_none_or(|(_, b)| norm > b * (1.0 + TIE_TOLERANCE)) {
            best = Some((v, norm));
        }
    }
    best.map(|(vertex, norm)| Selection {
        vertex,
        norm,
        set: sets[vertex].clone(),
    })
}

/// Graph: number of neighbours of `u` in `w`, `u` itself excluded.
/// General: `S_{u,W}`, the row sum over `w` including `a_uu` when `u` is in `w`.
pub fn neighbor_stat(m: &SymMatrix, u: usize, w: &[usize], kind: InstanceKind) -> f64 {
    match kind {
        InstanceKind::Graph => w.iter().filter(|&&v| v != u).map(|&v| m.get(u, v)).sum(),
        InstanceKind::General => w.iter().map(|&v| m.get(u, v)).sum(),
    }
}

/// Degree threshold of the clean-up step.
pub(crate) fn extraction_threshold(s_hat: f64, cfg: &RecoveryConfig) -> f64 {
    match &cfg.general {
        None => (cfg.p - 10.0 * cfg.epsilon) * s_hat,
        Some(g) => (cfg.p - (18.0 * g.mu + 16.0 * g.kappa + 1.0) * cfg.epsilon) * s_hat,
    }
}

/// Vertices whose statistic against `w` reaches the clean-up threshold.
pub fn extract_cluster(m: &SymMatrix, w: &[usize], s_hat: f64, cfg: &RecoveryConfig) -> Vec<usize> {
    let threshold = extraction_threshold(s_hat, cfg);
    let kind = cfg.stat_kind();
    (0..m.dim())
        .filter(|&u| neighbor_stat(m, u, w, kind) >= threshold)
        .collect()
}
