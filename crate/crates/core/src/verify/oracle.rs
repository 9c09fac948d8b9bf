use super::VerifyError;
use crate::spectral::Projector;

/// Hard limit on exhaustive enumeration.
pub const ORACLE_MAX_VERTICES: usize = 22;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleOptimum {
    pub set: Vec<usize>,
    pub norm: f64,
}

/// Maximizes `||P 1_W||_2` over every non-empty `W` with
/// `|W| <= (1 + eps) s-hat`, for `n <= min(size_cap, 22)`.
///
/// Subsets are visited in Gray-code order so each step adds or removes one
/// column of `P` from the running image.
pub fn brute_force_candidate_oracle(
    p: &Projector,
    s_hat: f64,
    epsilon: f64,
    size_cap: usize,
) -> Result<OracleOptimum, VerifyError> {
    let n = p.dim();
    let cap = size_cap.min(ORACLE_MAX_VERTICES);
    if n > cap {
        return Err(VerifyError::TooLarge { n, cap });
    }
    let max_size = (1.0 + epsilon) * s_hat;
    if max_size < 1.0 || n == 0 {
        return Err(VerifyError::NoAdmissibleSubset { cap: max_size });
    }
    let columns: Vec<Vec<f64>> = (0..n).map(|v| (0..n).map(|u| p.entry(u, v)).collect()).collect();
    let mut y = vec![0.0; n];
    let mut members = 0u32;
    let mut size = 0usize;
    let mut best: Option<(u32, f64)> = None;
    for step in 1u32..(1u32 << n) {
        let bit = step.trailing_zeros() as usize;
        let adding = members & (1 << bit) == 0;
        members ^= 1 << bit;
        let sign = if adding { 1.0 } else { -1.0 };
        if adding {
            size += 1;
        } else {
            size -= 1;
        }
        for (yi, c) in y.iter_mut().zip(&columns[bit]) {
            *yi += sign * c;
        }
        if size as f64 <= max_size {
            let sq: f64 = y.iter().map(|x| x * x).sum();
            if best.is_none_or(|(_, b)| sq > b) {
                best = Some((members, sq));
            }
        }
    }
    let (mask, sq) = best.ok_or(VerifyError::NoAdmissibleSubset { cap: max_size })?;
    Ok(OracleOptimum {
        set: (0..n).filter(|&u| mask & (1 << u) != 0).collect(),
        norm: sq.sqrt(),
    })
}
