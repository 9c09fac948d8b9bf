use std::fmt;

use serde::{Deserialize, Serialize};

/// Dense real symmetric matrix stored as its lower triangle, row by row.
///
/// Entry `(u, v)` and `(v, u)` share one storage slot, so symmetry holds
/// exactly for every matrix this type can represent.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

#[inline]
pub(crate) fn row_start(i: usize) -> usize {
    i * (i + 1) / 2
}

#[inline]
fn slot(u: usize, v: usize) -> usize {
    let (hi, lo) = if u >= v { (u, v) } else { (v, u) };
    row_start(hi) + lo
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; row_start(n)],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// The all-ones matrix `J_n`.
    pub fn ones(n: usize) -> Self {
        Self {
            n,
            data: vec![1.0; row_start(n)],
        }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &x) in values.iter().enumerate() {
            m.set(i, i, x);
        }
        m
    }

    /// Builds a matrix from `f(u, v)` evaluated on the lower triangle (`v <= u`).
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(row_start(n));
        for u in 0..n {
            for v in 0..=u {
                data.push(f(u, v));
            }
        }
        Self { n, data }
    }

    /// Builds a matrix from full row-major storage, reading only the lower triangle.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        Self::from_fn(n, |u, v| rows[u][v])
    }

    /// Wraps packed lower-triangular storage of length `n(n+1)/2`.
    pub fn from_packed(n: usize, data: Vec<f64>) -> Option<Self> {
        (data.len() == row_start(n)).then_some(Self { n, data })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.data[slot(u, v)]
    }

    #[inline]
    pub fn set(&mut self, u: usize, v: usize, x: f64) {
        self.data[slot(u, v)] = x;
    }

    pub fn packed(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn packed_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Lower-triangle part of row `u`: entries `(u, 0..=u)`.
    pub fn lower_row(&self, u: usize) -> &[f64] {
        &self.data[row_start(u)..row_start(u + 1)]
    }

    /// Full row `u` as a fresh vector.
    pub fn row(&self, u: usize) -> Vec<f64> {
        (0..self.n).map(|v| self.get(u, v)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|u| self.row(u)).collect()
    }

    /// Principal submatrix on `index` (kept in the given order).
    pub fn principal_submatrix(&self, index: &[usize]) -> Self {
        Self::from_fn(index.len(), |a, b| self.get(index[a], index[b]))
    }

    /// Symmetric relabeling: result `(a, b)` is `self(perm[a], perm[b])`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.n, "permutation length must match dimension");
        self.principal_submatrix(perm)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|x| x * factor).collect(),
        }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.n, other.n, "dimension mismatch");
        Self {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    /// Adds `x` to every diagonal entry.
    pub fn shift_diagonal(&mut self, x: f64) {
        for i in 0..self.n {
            self.data[row_start(i) + i] += x;
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n, "vector length must match dimension");
        let mut y = vec![0.0; self.n];
        for u in 0..self.n {
            let row = self.lower_row(u);
            let xu = x[u];
            let mut acc = 0.0;
            for v in 0..u {
                acc += row[v] * x[v];
                y[v] += row[v] * xu;
            }
            y[u] += acc + row[u] * xu;
        }
        y
    }

    /// Dense product `self * other`. Symmetric only when the factors commute,
    /// so the result is returned row-major.
    pub fn matmul(&self, other: &Self) -> Vec<Vec<f64>> {
        let a = self.to_rows();
        let b = other.to_rows();
        let n = self.n;
        let mut out = vec![vec![0.0; n]; n];
        for i in 0..n {
            for k in 0..n {
                let aik = a[i][k];
                if aik == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[i][j] += aik * b[k][j];
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "SymMatrix({}x{})", self.n, self.n)?;
        for u in 0..self.n.min(8) {
            let row: Vec<String> = (0..self.n.min(8))
                .map(|v| format!("{:9.4}", self.get(u, v)))
                .collect();
            writeln!(f, "  [{}]", row.join(" "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_storage() {
        let mut m = SymMatrix::zeros(3);
        m.set(0, 2, 5.0);
        assert_eq!(m.get(2, 0), 5.0);
        m.set(2, 0, -1.0);
        assert_eq!(m.get(0, 2), -1.0);
        assert_eq!(m.packed().len(), 6);
    }

    #[test]
    fn submatrix_and_permutation() {
        let m = SymMatrix::from_fn(4, |u, v| (10 * u + v) as f64);
        let s = m.principal_submatrix(&[1, 3]);
        assert_eq!(s.get(0, 0), 11.0);
        assert_eq!(s.get(1, 0), 31.0);
        assert_eq!(s.get(1, 1), 33.0);
        let p = m.permuted(&[3, 2, 1, 0]);
        assert_eq!(p.get(0, 0), m.get(3, 3));
        assert_eq!(p.get(0, 3), m.get(3, 0));
    }

    #[test]
    fn mul_vec_matches_dense() {
        let m = SymMatrix::from_fn(3, |u, v| (u + 2 * v) as f64 + 1.0);
        let x = [1.0, -2.0, 0.5];
        let y = m.mul_vec(&x);
        for u in 0..3 {
            let expect: f64 = (0..3).map(|v| m.get(u, v) * x[v]).sum();
            assert!((y[u] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn from_packed_checks_length() {
        assert!(SymMatrix::from_packed(3, vec![0.0; 5]).is_none());
        assert!(SymMatrix::from_packed(3, vec![0.0; 6]).is_some());
    }
}
