//! Dense symmetric eigensolver.
//!
//! Householder reduction to tridiagonal form followed by implicit-shift QL.
//! Full decompositions accumulate the QL rotations into the Householder basis;
//! leading-subspace requests instead run inverse iteration on the tridiagonal
//! factor and map the vectors back, which keeps the cost at one `O(n^3)`
//! reduction plus `O(n^2)` per requested vector.

use serde::{Deserialize, Serialize};

use super::matrix::{row_start, SymMatrix};
use super::SpectralError;

/// QL sweeps allowed per eigenvalue before giving up.
const MAX_QL_ITERATIONS: usize = 60;
/// Inverse-iteration solves per eigenvector.
const INVERSE_ITERATION_STEPS: usize = 4;
/// Eigenvalues of one tridiagonal block closer than this fraction of the
/// block norm are re-orthogonalized against each other.
const CLUSTER_FRACTION: f64 = 1e-3;

/// Eigenvalues in descending order with orthonormal eigenvectors for the
/// leading `vector_count()` of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenDecomp {
    values: Vec<f64>,
    vectors: Vec<Vec<f64>>,
}

impl EigenDecomp {
    pub fn new(values: Vec<f64>, vectors: Vec<Vec<f64>>) -> Self {
        debug_assert!(vectors.len() <= values.len());
        Self { values, vectors }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vector_count(&self) -> usize {
        self.vectors.len()
    }

    /// Eigenvector paired with `values()[i]`.
    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i]
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }
}

#[derive(Debug, Clone)]
struct Reflector {
    start: usize,
    v: Vec<f64>,
    beta: f64,
}

impl Reflector {
    /// `y <- (I - beta v v^T) y` on the trailing coordinates.
    fn apply(&self, y: &mut [f64]) {
        let tail = &mut y[self.start..];
        let dot: f64 = self.v.iter().zip(tail.iter()).map(|(a, b)| a * b).sum();
        let f = self.beta * dot;
        for (t, v) in tail.iter_mut().zip(&self.v) {
            *t -= f * v;
        }
    }
}

/// `A = Q T Q^T` with `T` tridiagonal and `Q` the product of the stored
/// reflectors.
#[derive(Debug, Clone)]
struct Tridiagonal {
    diag: Vec<f64>,
    /// `off[i]` couples `i` and `i + 1`; `off[n - 1]` is zero.
    off: Vec<f64>,
    reflectors: Vec<Reflector>,
}

impl Tridiagonal {
    fn reduce(m: &SymMatrix, keep_reflectors: bool) -> Self {
        let n = m.dim();
        let mut a = m.packed().to_vec();
        let mut off = vec![0.0; n];
        let mut reflectors = Vec::new();
        let mut p = vec![0.0; n];
        let mut w = vec![0.0; n];

        for k in 0..n.saturating_sub(2) {
            let len = n - k - 1;
            let mut v: Vec<f64> = (k + 1..n).map(|i| a[row_start(i) + k]).collect();
            let x0 = v[0];
            let sigma: f64 = v[1..].iter().map(|x| x * x).sum();
            if sigma == 0.0 {
                off[k] = x0;
                continue;
            }
            let mu = (x0 * x0 + sigma).sqrt();
            let alpha = if x0 <= 0.0 { mu } else { -mu };
            v[0] = x0 - alpha;
            let beta = 2.0 / (v[0] * v[0] + sigma);
            off[k] = alpha;

            // p = beta * A22 * v, reading only the stored lower triangle.
            let p = &mut p[..len];
            p.fill(0.0);
            for i in 0..len {
                let gi = k + 1 + i;
                let base = row_start(gi) + k + 1;
                let row = &a[base..=base + i];
                let vi = v[i];
                let mut acc = [0.0; 4];
                let (head, rest) = row[..i].split_at(i - i % 4);
                for (c, (r4, v4)) in head.chunks_exact(4).zip(v[..i].chunks_exact(4)).enumerate()
                {
                    for t in 0..4 {
                        acc[t] += r4[t] * v4[t];
                    }
                    let pj = &mut p[4 * c..4 * c + 4];
                    for t in 0..4 {
                        pj[t] += r4[t] * vi;
                    }
                }
                let off4 = head.len();
                let mut tail_acc = 0.0;
                for (j, r) in rest.iter().enumerate() {
                    tail_acc += r * v[off4 + j];
                    p[off4 + j] += r * vi;
                }
                p[i] += acc[0] + acc[1] + acc[2] + acc[3] + tail_acc + row[i] * vi;
            }
            let mut pv = 0.0;
            for (pi, vi) in p.iter_mut().zip(&v) {
                *pi *= beta;
                pv += *pi * vi;
            }
            let kcoef = 0.5 * beta * pv;
            let w = &mut w[..len];
            for i in 0..len {
                w[i] = p[i] - kcoef * v[i];
            }
            // A22 -= v w^T + w v^T
            for i in 0..len {
                let gi = k + 1 + i;
                let base = row_start(gi) + k + 1;
                let row = &mut a[base..=base + i];
                let (vi, wi) = (v[i], w[i]);
                for ((r, &wj), &vj) in row.iter_mut().zip(&w[..=i]).zip(&v[..=i]) {
                    *r -= vi * wj + wi * vj;
                }
            }
            if keep_reflectors {
                reflectors.push(Reflector {
                    start: k + 1,
                    v,
                    beta,
                });
            }
        }
        let diag: Vec<f64> = (0..n).map(|i| a[row_start(i) + i]).collect();
        if n >= 2 {
            off[n - 2] = a[row_start(n - 1) + n - 2];
        }
        Self {
            diag,
            off,
            reflectors,
        }
    }

    fn dim(&self) -> usize {
        self.diag.len()
    }

    /// `y <- Q y`.
    fn apply_q(&self, y: &mut [f64]) {
        for r in self.reflectors.iter().rev() {
            r.apply(y);
        }
    }

    /// Explicit `Q^T`, stored row-major (row `i` is column `i` of `Q`).
    fn q_transposed(&self) -> Vec<f64> {
        let n = self.dim();
        let mut q = vec![0.0; n * n];
        for i in 0..n {
            q[i * n + i] = 1.0;
        }
        let mut wrow = vec![0.0; n];
        for r in self.reflectors.iter().rev() {
            let s = r.start;
            let wrow = &mut wrow[s..];
            wrow.fill(0.0);
            for (i, vi) in r.v.iter().enumerate() {
                let row = &q[(s + i) * n + s..(s + i + 1) * n];
                for (acc, x) in wrow.iter_mut().zip(row) {
                    *acc += vi * x;
                }
            }
            for (i, vi) in r.v.iter().enumerate() {
                let f = r.beta * vi;
                let row = &mut q[(s + i) * n + s..(s + i + 1) * n];
                for (x, wc) in row.iter_mut().zip(wrow.iter()) {
                    *x -= f * wc;
                }
            }
        }
        // transpose in place
        for i in 0..n {
            for j in i + 1..n {
                q.swap(i * n + j, j * n + i);
            }
        }
        q
    }
}

/// Implicit-shift QL on a symmetric tridiagonal matrix (EISPACK `tql2`).
///
/// `off[i]` couples `i` and `i + 1`. Rotations are applied to the rows of
/// `rows` (row length `d.len()`), so if `rows` starts as `Q^T` it ends with
/// the eigenvectors of `Q T Q^T` as rows.
fn ql_implicit(d: &mut [f64], off: &mut [f64], mut rows: Option<&mut [f64]>) -> Result<(), SpectralError> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    let eps = f64::EPSILON;
    off[n - 1] = 0.0;
    let mut f = 0.0;
    let mut tst1 = 0.0f64;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + off[l].abs());
        let mut m = l;
        while m < n - 1 && off[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_QL_ITERATIONS {
                    return Err(SpectralError::NoConvergence {
                        index: l,
                        residual: off[l].abs(),
                    });
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * off[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = off[l] / (p + r);
                d[l + 1] = off[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for x in &mut d[l + 2..] {
                    *x -= h;
                }
                f += h;

                p = d[m];
                let (mut c, mut c2, mut c3) = (1.0, 1.0, 1.0);
                let el1 = off[l + 1];
                let (mut s, mut s2) = (0.0, 0.0);
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * off[i];
                    h = c * p;
                    r = p.hypot(off[i]);
                    off[i + 1] = s * r;
                    s = off[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(z) = rows.as_deref_mut() {
                        let (lo, hi) = z.split_at_mut((i + 1) * n);
                        let zi = &mut lo[i * n..];
                        let zi1 = &mut hi[..n];
                        for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                            let h = *b;
                            *b = s * *a + c * h;
                            *a = c * *a - s * h;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * off[l] / dl1;
                off[l] = s * p;
                d[l] = c * p;
                if off[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        off[l] = 0.0;
    }
    Ok(())
}

fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    idx
}

/// Full eigendecomposition: every eigenvalue and eigenvector.
pub fn eigendecomp(m: &SymMatrix) -> Result<EigenDecomp, SpectralError> {
    let tri = Tridiagonal::reduce(m, true);
    full_from_tridiagonal(&tri)
}

fn full_from_tridiagonal(tri: &Tridiagonal) -> Result<EigenDecomp, SpectralError> {
    let n = tri.dim();
    let mut d = tri.diag.clone();
    let mut off = tri.off.clone();
    let mut rows = tri.q_transposed();
    ql_implicit(&mut d, &mut off, Some(&mut rows))?;
    let order = descending_order(&d);
    let values = order.iter().map(|&i| d[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| rows[i * n..(i + 1) * n].to_vec())
        .collect();
    Ok(EigenDecomp { values, vectors })
}

/// Eigenvalues only, descending.
pub fn eigenvalues(m: &SymMatrix) -> Result<Vec<f64>, SpectralError> {
    let tri = Tridiagonal::reduce(m, false);
    let mut d = tri.diag;
    let mut off = tri.off;
    ql_implicit(&mut d, &mut off, None)?;
    d.sort_by(|a, b| b.total_cmp(a));
    Ok(d)
}

/// All eigenvalues plus orthonormal eigenvectors for the `r` largest.
pub fn leading_eigenpairs(m: &SymMatrix, r: usize) -> Result<EigenDecomp, SpectralError> {
    SymmetricEigen::new(m)?.leading(r)
}

/// Reused reduction: eigenvalues are available immediately and leading
/// eigenvectors can be requested afterwards without re-reducing.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    tri: Tridiagonal,
    /// Unreduced diagonal blocks `[lo, hi)` of the tridiagonal factor.
    blocks: Vec<(usize, usize)>,
    /// `(eigenvalue, block index)`, descending by eigenvalue.
    spectrum: Vec<(f64, usize)>,
    values: Vec<f64>,
}

impl SymmetricEigen {
    pub fn new(m: &SymMatrix) -> Result<Self, SpectralError> {
        let mut tri = Tridiagonal::reduce(m, true);
        let n = tri.dim();
        let mut blocks = Vec::new();
        let mut lo = 0;
        for i in 0..n {
            let split = i + 1 == n
                || tri.off[i].abs() <= f64::EPSILON * (tri.diag[i].abs() + tri.diag[i + 1].abs());
            if split {
                if i + 1 < n {
                    tri.off[i] = 0.0;
                }
                blocks.push((lo, i + 1));
                lo = i + 1;
            }
        }
        let mut spectrum = Vec::with_capacity(n);
        for (b, &(lo, hi)) in blocks.iter().enumerate() {
            let mut d = tri.diag[lo..hi].to_vec();
            let mut off = tri.off[lo..hi].to_vec();
            ql_implicit(&mut d, &mut off, None)?;
            d.sort_by(|a, b| b.total_cmp(a));
            spectrum.extend(d.into_iter().map(|x| (x, b)));
        }
        // stable: equal values keep block order
        spectrum.sort_by(|a, b| b.0.total_cmp(&a.0));
        let values = spectrum.iter().map(|&(x, _)| x).collect();
        Ok(Self {
            tri,
            blocks,
            spectrum,
            values,
        })
    }

    pub fn dim(&self) -> usize {
        self.tri.dim()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Decomposition carrying eigenvectors for the `r` largest eigenvalues.
    pub fn leading(&self, r: usize) -> Result<EigenDecomp, SpectralError> {
        let n = self.dim();
        if r > n {
            return Err(SpectralError::RankOutOfRange { rank: r, dim: n });
        }
        let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(r);
        // per block: (eigenvalue, local vector) already computed, for re-orthogonalization
        let mut done: Vec<Vec<(f64, Vec<f64>)>> = vec![Vec::new(); self.blocks.len()];
        for (idx, &(lambda, b)) in self.spectrum[..r].iter().enumerate() {
            let (lo, hi) = self.blocks[b];
            let local = match self.inverse_iteration(lo, hi, lambda, &done[b], idx as u64) {
                Some(v) => v,
                None => {
                    log::debug!("inverse iteration residual too large; using full QL accumulation");
                    return self.leading_via_full(r);
                }
            };
            let mut y = vec![0.0; n];
            y[lo..hi].copy_from_slice(&local);
            done[b].push((lambda, local));
            self.tri.apply_q(&mut y);
            vectors.push(y);
        }
        Ok(EigenDecomp {
            values: self.values.clone(),
            vectors,
        })
    }

    fn leading_via_full(&self, r: usize) -> Result<EigenDecomp, SpectralError> {
        let mut full = full_from_tridiagonal(&self.tri)?;
        full.vectors.truncate(r);
        Ok(full)
    }

    /// Eigenvector of the block `[lo, hi)` for `lambda`, or `None` when the
    /// residual check fails.
    fn inverse_iteration(
        &self,
        lo: usize,
        hi: usize,
        lambda: f64,
        previous: &[(f64, Vec<f64>)],
        salt: u64,
    ) -> Option<Vec<f64>> {
        let m = hi - lo;
        if m == 1 {
            return Some(vec![1.0]);
        }
        let d = &self.tri.diag[lo..hi];
        let e = &self.tri.off[lo..hi - 1];
        let norm = (0..m)
            .map(|i| {
                d[i].abs()
                    + if i > 0 { e[i - 1].abs() } else { 0.0 }
                    + if i + 1 < m { e[i].abs() } else { 0.0 }
            })
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        let cluster: Vec<&Vec<f64>> = previous
            .iter()
            .filter(|(mu, _)| (mu - lambda).abs() <= CLUSTER_FRACTION * norm)
            .map(|(_, v)| v)
            .collect();

        // separate shifts for exactly repeated values
        let mut shift = lambda;
        for (mu, _) in previous {
            if (shift - mu).abs() <= 10.0 * f64::EPSILON * norm {
                shift = mu + 10.0 * f64::EPSILON * norm;
            }
        }
        let lu = TridiagonalLu::factor(d, e, shift, f64::EPSILON * norm);

        let mut state = salt;
        let mut x: Vec<f64> = (0..m)
            .map(|_| {
                (splitmix(&mut state) >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            })
            .collect();
        for _ in 0..INVERSE_ITERATION_STEPS {
            lu.solve(&mut x);
            for _ in 0..2 {
                for z in &cluster {
                    let dot: f64 = x.iter().zip(z.iter()).map(|(a, b)| a * b).sum();
                    for (xi, zi) in x.iter_mut().zip(z.iter()) {
                        *xi -= dot * zi;
                    }
                }
            }
            let nrm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(nrm > 0.0 && nrm.is_finite()) {
                return None;
            }
            for xi in &mut x {
                *xi /= nrm;
            }
        }

        let mut res = 0.0;
        for i in 0..m {
            let mut t = (d[i] - lambda) * x[i];
            if i > 0 {
                t += e[i - 1] * x[i - 1];
            }
            if i + 1 < m {
                t += e[i] * x[i + 1];
            }
            res += t * t;
        }
        (res.sqrt() <= 1e-10 * norm.max(1.0)).then_some(x)
    }
}

/// SplitMix64 step: advances `state` and returns the next output.
fn splitmix(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut x = *state;
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// LU factorization with partial pivoting of `T - shift I` (LAPACK `dgttrf`).
struct TridiagonalLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagonalLu {
    fn factor(diag: &[f64], off: &[f64], shift: f64, tiny: f64) -> Self {
        let n = diag.len();
        let mut d: Vec<f64> = diag.iter().map(|x| x - shift).collect();
        let mut dl = off.to_vec();
        let mut du = off.to_vec();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] != 0.0 {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] -= fact * du[i];
                }
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -fact;
                }
                swapped[i] = true;
            }
        }
        let tiny = tiny.max(f64::MIN_POSITIVE);
        for x in &mut d {
            if x.abs() < tiny {
                *x = if *x < 0.0 { -tiny } else { tiny };
            }
        }
        Self {
            dl,
            d,
            du,
            du2,
            swapped,
        }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = self.d.len();
        for i in 0..n - 1 {
            if self.swapped[i] {
                b.swap(i, i + 1);
            }
            b[i + 1] -= self.dl[i] * b[i];
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(m: &SymMatrix, lambda: f64, v: &[f64]) -> f64 {
        let mv = m.mul_vec(v);
        mv.iter()
            .zip(v)
            .map(|(a, b)| (a - lambda * b).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn diagonal_values() {
        let d = eigendecomp(&SymMatrix::diagonal(&[1.0, 2.0])).unwrap();
        assert_eq!(d.values(), &[2.0, 1.0]);
        assert!((d.vector(0)[1].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rank_one_block() {
        let m = SymMatrix::ones(2).scaled(0.5);
        let d = eigendecomp(&m).unwrap();
        assert!((d.values()[0] - 1.0).abs() < 1e-12);
        assert!(d.values()[1].abs() < 1e-12);
        let v = d.vector(0);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((v[0].abs() - s).abs() < 1e-12 && (v[1].abs() - s).abs() < 1e-12);
        assert!(v[0] * v[1] > 0.0);
    }

    #[test]
    fn tiny_dimensions() {
        assert!(eigendecomp(&SymMatrix::zeros(0)).unwrap().values().is_empty());
        let d = eigendecomp(&SymMatrix::diagonal(&[-3.0])).unwrap();
        assert_eq!(d.values(), &[-3.0]);
        assert_eq!(d.vector(0), &[1.0]);
    }

    #[test]
    fn leading_matches_full_on_dense_matrix() {
        let m = SymMatrix::from_fn(30, |u, v| ((u * 7 + v * 13) % 11) as f64 / 3.0 - 1.0);
        let full = eigendecomp(&m).unwrap();
        let lead = leading_eigenpairs(&m, 5).unwrap();
        for i in 0..30 {
            assert!((full.values()[i] - lead.values()[i]).abs() < 1e-10);
        }
        for i in 0..5 {
            assert!(residual(&m, lead.values()[i], lead.vector(i)) < 1e-9);
            let dot: f64 = full.vector(i).iter().zip(lead.vector(i)).map(|(a, b)| a * b).sum();
            assert!((dot.abs() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn leading_handles_repeated_values() {
        // block-diagonal ones: eigenvalue 3 with multiplicity 2
        let m = SymMatrix::from_fn(6, |u, v| if u / 3 == v / 3 { 1.0 } else { 0.0 });
        let lead = leading_eigenpairs(&m, 2).unwrap();
        for i in 0..2 {
            assert!((lead.values()[i] - 3.0).abs() < 1e-12);
            assert!(residual(&m, 3.0, lead.vector(i)) < 1e-10);
        }
        let dot: f64 = lead.vector(0).iter().zip(lead.vector(1)).map(|(a, b)| a * b).sum();
        assert!(dot.abs() < 1e-10);
    }

    #[test]
    fn lu_solves_tridiagonal_system() {
        let d = [4.0, -1.0, 3.0, 0.5];
        let e = [1.0, 2.0, -1.5];
        let lu = TridiagonalLu::factor(&d, &e, 0.25, 1e-300);
        let x = [1.0, -2.0, 0.5, 3.0];
        let mut b = vec![0.0; 4];
        for i in 0..4 {
            b[i] = (d[i] - 0.25) * x[i];
            if i > 0 {
                b[i] += e[i - 1] * x[i - 1];
            }
            if i < 3 {
                b[i] += e[i] * x[i + 1];
            }
        }
        lu.solve(&mut b);
        for i in 0..4 {
            assert!((b[i] - x[i]).abs() < 1e-12, "{b:?}");
        }
    }
}
