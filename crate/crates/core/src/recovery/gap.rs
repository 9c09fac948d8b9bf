use super::{RecoveryConfig, RecoveryError};

/// `((p - q) c - 2 nu) sqrt(n)`.
pub fn scan_threshold(cfg: &RecoveryConfig, n: usize) -> Result<f64, RecoveryError> {
    let c = cfg.c.ok_or(RecoveryError::MissingSeparation)?;
    let threshold = ((cfg.p - cfg.q) * c - 2.0 * cfg.noise_constant) * (n as f64).sqrt();
    if threshold > 0.0 {
        Ok(threshold)
    } else {
        Err(RecoveryError::NonPositiveThreshold { threshold })
    }
}

/// Lengths of the runs of a descending list separated by consecutive drops
/// of at least `threshold`. The final run is discarded.
pub fn gap_scan(eigs: &[f64], threshold: f64) -> Vec<usize> {
    let mut counts = Vec::new();
    let mut start = 0;
    for i in 1..eigs.len() {
        if eigs[i - 1] - eigs[i] >= threshold {
            counts.push(i - start);
            start = i;
        }
    }
    counts
}

/// Estimated `k_1, .., k_L` from the spectrum of an `n`-vertex `B-hat`.
pub fn estimate_supercluster_counts(
    eigs: &[f64],
    cfg: &RecoveryConfig,
    n: usize,
) -> Result<Vec<usize>, RecoveryError> {
    Ok(gap_scan(eigs, scan_threshold(cfg, n)?))
}
