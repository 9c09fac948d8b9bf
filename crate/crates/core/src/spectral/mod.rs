//! Dense symmetric linear algebra: storage, eigensolver, norms and
//! dominant-eigenspace projectors.

mod eigen;
mod matrix;
mod projector;

pub use eigen::{eigendecomp, eigenvalues, leading_eigenpairs, EigenDecomp, SymmetricEigen};
pub use matrix::SymMatrix;
pub use projector::{projector_column, rank_projector, GapPolicy, Projector, DEFAULT_GAP_TOLERANCE};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("QL iteration did not converge for eigenvalue {index} (off-diagonal residual {residual:e})")]
    NoConvergence { index: usize, residual: f64 },
    #[error("rank {rank} outside 1..={dim}")]
    RankOutOfRange { rank: usize, dim: usize },
    #[error("decomposition holds {available} eigenvectors, rank {rank} requested")]
    MissingVectors { rank: usize, available: usize },
    #[error("eigen-gap {gap:e} at rank {rank} is below tolerance {tolerance:e}")]
    DegenerateGap { rank: usize, gap: f64, tolerance: f64 },
    #[error("vertex {vertex} out of range for dimension {dim}")]
    VertexOutOfRange { vertex: usize, dim: usize },
}

/// `B-hat = A-hat - q J + p I`.
pub fn shifted_matrix(a_hat: &SymMatrix, p: f64, q: f64) -> SymMatrix {
    let n = a_hat.dim();
    SymMatrix::from_fn(n, |u, v| {
        let x = a_hat.get(u, v) - q;
        if u == v {
            x + p
        } else {
            x
        }
    })
}

/// Largest absolute eigenvalue.
pub fn spectral_norm(m: &SymMatrix) -> Result<f64, SpectralError> {
    let values = eigenvalues(m)?;
    Ok(values.iter().fold(0.0, |acc: f64, x| acc.max(x.abs())))
}

pub fn frobenius_norm(m: &SymMatrix) -> f64 {
    let n = m.dim();
    let mut sum = 0.0;
    for u in 0..n {
        let row = m.lower_row(u);
        for (v, x) in row.iter().enumerate() {
            sum += if u == v { x * x } else { 2.0 * x * x };
        }
    }
    sum.sqrt()
}
