use super::eigen::EigenDecomp;
use super::matrix::SymMatrix;
use super::SpectralError;

pub const DEFAULT_GAP_TOLERANCE: f64 = 1e-9;

/// How to treat `lambda_r - lambda_{r+1}` below tolerance, where the
/// dominant eigenspace stops being well defined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapPolicy {
    pub tolerance: f64,
    /// Reject degenerate gaps instead of warning.
    pub strict: bool,
}

impl Default for GapPolicy {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_GAP_TOLERANCE,
            strict: false,
        }
    }
}

impl GapPolicy {
    pub fn strict() -> Self {
        Self {
            strict: true,
            ..Self::default()
        }
    }
}

/// Orthogonal projection onto a dominant eigenspace.
#[derive(Debug, Clone)]
pub struct Projector {
    rank: usize,
    matrix: SymMatrix,
    /// Orthonormal spanning vectors, when the projector was built from them.
    basis: Option<Vec<Vec<f64>>>,
    gap: Option<f64>,
}

impl Projector {
    /// `sum_i b_i b_i^T` for orthonormal `basis` vectors of length `n`.
    pub fn from_orthonormal(n: usize, basis: Vec<Vec<f64>>) -> Self {
        let mut matrix = SymMatrix::zeros(n);
        {
            let data = matrix.packed_mut();
            for b in &basis {
                let mut start = 0;
                for u in 0..n {
                    let x = b[u];
                    let row = &mut data[start..start + u + 1];
                    for (r, y) in row.iter_mut().zip(&b[..=u]) {
                        *r += x * y;
                    }
                    start += u + 1;
                }
            }
        }
        Self {
            rank: basis.len(),
            matrix,
            basis: Some(basis),
            gap: None,
        }
    }

    /// Wraps an explicit projection matrix of known rank.
    pub fn from_matrix(rank: usize, matrix: SymMatrix) -> Self {
        Self {
            rank,
            matrix,
            basis: None,
            gap: None,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> SymMatrix {
        self.matrix
    }

    /// `lambda_r - lambda_{r+1}` of the source decomposition (`None` for `r = n`
    /// or when not built from a decomposition).
    pub fn gap(&self) -> Option<f64> {
        self.gap
    }

    #[inline]
    pub fn entry(&self, u: usize, v: usize) -> f64 {
        self.matrix.get(u, v)
    }

    /// `||P 1_W||_2` for the indicator of `set`.
    pub fn indicator_image_norm(&self, set: &[usize]) -> f64 {
        match &self.basis {
            // P = V V^T with orthonormal V, so ||P x|| = ||V^T x||
            Some(basis) => basis
                .iter()
                .map(|b| {
                    let s: f64 = set.iter().map(|&w| b[w]).sum();
                    s * s
                })
                .sum::<f64>()
                .sqrt(),
            None => {
                let mut x = vec![0.0; self.dim()];
                for &w in set {
                    x[w] = 1.0;
                }
                self.matrix
                    .mul_vec(&x)
                    .iter()
                    .map(|y| y * y)
                    .sum::<f64>()
                    .sqrt()
            }
        }
    }
}

/// `P_r` onto the span of the eigenvectors of the `r` largest eigenvalues.
pub fn rank_projector(
    decomp: &EigenDecomp,
    r: usize,
    policy: GapPolicy,
) -> Result<Projector, SpectralError> {
    let n = decomp.dim();
    if r == 0 || r > n {
        return Err(SpectralError::RankOutOfRange { rank: r, dim: n });
    }
    if decomp.vector_count() < r {
        return Err(SpectralError::MissingVectors {
            rank: r,
            available: decomp.vector_count(),
        });
    }
    let gap = (r < n).then(|| decomp.values()[r - 1] - decomp.values()[r]);
    if let Some(g) = gap {
        if g <= policy.tolerance {
            if policy.strict {
                return Err(SpectralError::DegenerateGap {
                    rank: r,
                    gap: g,
                    tolerance: policy.tolerance,
                });
            }
            log::warn!("rank-{r} projector: eigen-gap {g:e} below {:e}", policy.tolerance);
        }
    }
    let mut p = Projector::from_orthonormal(n, decomp.vectors()[..r].to_vec());
    p.gap = gap;
    Ok(p)
}

/// Column `v` of the projector.
pub fn projector_column(p: &Projector, v: usize) -> Result<Vec<f64>, SpectralError> {
    let n = p.dim();
    if v >= n {
        return Err(SpectralError::VertexOutOfRange { vertex: v, dim: n });
    }
    Ok((0..n).map(|u| p.entry(u, v)).collect())
}
