//! Dense symmetric positive-definite linear algebra.
//!
//! Every regressor in the crate reduces to products with `(K + ρ²I)⁻¹`, which
//! are realized here through a Cholesky factor and two triangular solves.
//! Matrices are small (a few hundred rows at most), so everything is stored
//! densely in row-major `Vec<f64>`.

use crate::error::{check_len, Error, Result};

/// First relative jitter tried when the plain factorization fails.
pub const JITTER_START: f64 = 1e-10;
/// Largest relative jitter tried before giving up.
pub const JITTER_MAX: f64 = 1e-6;

/// A dense symmetric matrix whose stored entries are exactly symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl SymMatrix {
    /// Builds a matrix from an entry function, averaging `f(i, j)` and
    /// `f(j, i)` so that the stored result is symmetric bit-for-bit.
    pub fn from_fn<F>(dim: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, usize) -> f64,
    {
        if dim == 0 {
            return Err(Error::Empty("matrix dimension"));
        }
        let mut entries = vec![0.0; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = f(i, i);
            for j in 0..i {
                let v = 0.5 * (f(i, j) + f(j, i));
                entries[i * dim + j] = v;
                entries[j * dim + i] = v;
            }
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix entries"));
        }
        Ok(Self { dim, entries })
    }

    /// Builds a matrix from square row data, symmetrizing by averaging.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        for row in rows {
            check_len(dim, row.len())?;
        }
        Self::from_fn(dim, |i, j| rows[i][j])
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::from_fn(dim, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Self::from_fn(dim, |_, _| 0.0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.dim..(i + 1) * self.dim]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| self.row(i).to_vec()).collect()
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len(self.dim, v.len())?;
        Ok((0..self.dim).map(|i| dot(self.row(i), v)).collect())
    }
}

/// Lower-triangular Cholesky factor of `a + (ridge + jitter)·I`.
#[derive(Debug, Clone, PartialEq)]
pub struct CholFactor {
    dim: usize,
    lower: Vec<f64>,
    jitter_applied: f64,
}

impl CholFactor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Total diagonal shift added on top of the requested ridge.
    pub fn jitter_applied(&self) -> f64 {
        self.jitter_applied
    }

    /// Entry `(i, j)` of the lower factor; zero above the diagonal.
    #[inline]
    pub fn lower(&self, i: usize, j: usize) -> f64 {
        if j > i {
            0.0
        } else {
            self.lower[i * self.dim + j]
        }
    }

    /// Computes `L·Lᵀ`, i.e. the shifted matrix that was factored.
    pub fn reconstruct(&self) -> SymMatrix {
        let n = self.dim;
        SymMatrix::from_fn(n, |i, j| {
            (0..=i.min(j))
                .map(|k| self.lower(i, k) * self.lower(j, k))
                .sum()
        })
        .expect("factor of a finite matrix is finite")
    }

    /// Solves `(L·Lᵀ)·v = b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        check_len(self.dim, b.len())?;
        let n = self.dim;
        let mut v = b.to_vec();
        // L·z = b
        for i in 0..n {
            let row = &self.lower[i * n..i * n + i];
            let s = v[i] - dot(row, &v[..i]);
            v[i] = s / self.lower[i * n + i];
        }
        // Lᵀ·v = z
        for i in (0..n).rev() {
            let s = v[i]
                - (i + 1..n)
                    .map(|k| self.lower[k * n + i] * v[k])
                    .sum::<f64>();
            v[i] = s / self.lower[i * n + i];
        }
        Ok(v)
    }

    /// Applies the inverse twice: `(L·Lᵀ)⁻²·b`.
    pub fn solve_twice(&self, b: &[f64]) -> Result<Vec<f64>> {
        let once = self.solve(b)?;
        self.solve(&once)
    }
}

/// Factors `a + ridge·I`, escalating a diagonal jitter when the plain
/// factorization breaks down.
///
/// The jitter is `ε·(trace(a)/dim + ridge)` for `ε` in `1e-10, 1e-9, …, 1e-6`.
/// When that scale is zero (an all-zero diagonal with no ridge) a unit scale
/// is used instead so the escalation still makes progress.
pub fn cholesky(a: &SymMatrix, ridge: f64) -> Result<CholFactor> {
    if !ridge.is_finite() || ridge < 0.0 {
        return Err(Error::InvalidParameter {
            name: "ridge",
            reason: format!("must be non-negative and finite, got {ridge}"),
        });
    }
    if let Some(lower) = try_factor(a, ridge) {
        return Ok(CholFactor {
            dim: a.dim,
            lower,
            jitter_applied: 0.0,
        });
    }

    let mut scale = a.trace() / a.dim as f64 + ridge;
    if scale.is_nan() || scale <= 0.0 {
        scale = 1.0;
    }
    let mut eps = JITTER_START;
    let mut last = 0.0;
    while eps <= JITTER_MAX * (1.0 + 1e-9) {
        let jitter = eps * scale;
        last = jitter;
        if let Some(lower) = try_factor(a, ridge + jitter) {
            return Ok(CholFactor {
                dim: a.dim,
                lower,
                jitter_applied: jitter,
            });
        }
        eps *= 10.0;
    }
    Err(Error::NotPositiveDefinite { jitter: last })
}

fn try_factor(a: &SymMatrix, shift: f64) -> Option<Vec<f64>> {
    let n = a.dim;
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let row_j = &l[j * n..j * n + j];
        let d = a.get(j, j) + shift - dot(row_j, row_j);
        if !(d.is_finite() && d > 0.0) {
            return None;
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in j + 1..n {
            let s = a.get(i, j) - dot(&l[i * n..i * n + j], &l[j * n..j * n + j]);
            l[i * n + j] = s / d;
        }
    }
    Some(l)
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn identity_factors_to_identity() {
        let f = cholesky(&SymMatrix::identity(2).unwrap(), 0.0).unwrap();
        assert_eq!(f.jitter_applied(), 0.0);
        assert_eq!(f.lower(0, 0), 1.0);
        assert_eq!(f.lower(1, 1), 1.0);
        assert_eq!(f.lower(1, 0), 0.0);
        assert_eq!(f.solve(&[3.0, 4.0]).unwrap(), vec![3.0, 4.0]);
        assert_eq!(f.solve_twice(&[1.0, 2.0]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn scalar_with_ridge() {
        let a = SymMatrix::from_rows(&[vec![1.0]]).unwrap();
        let f = cholesky(&a, 1.0).unwrap();
        assert_eq!(f.lower(0, 0), 2f64.sqrt());
        assert!(close(f.solve(&[1.0]).unwrap()[0], 0.5, 1e-15));
        assert!(close(f.solve_twice(&[1.0]).unwrap()[0], 0.25, 1e-15));
    }

    #[test]
    fn two_by_two_solves() {
        // [[2,1],[1,2]]⁻¹ = (1/3)[[2,-1],[-1,2]]; applied to (1,1) gives 1/3 each,
        // and applying it again gives 1/9 each.
        let a = SymMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let f = cholesky(&a, 0.0).unwrap();
        let v = f.solve(&[1.0, 1.0]).unwrap();
        assert!(v.iter().all(|&x| close(x, 1.0 / 3.0, 1e-14)));
        let w = f.solve_twice(&[1.0, 1.0]).unwrap();
        assert!(w.iter().all(|&x| close(x, 1.0 / 9.0, 1e-14)));
    }

    #[test]
    fn zero_matrix_engages_jitter() {
        let a = SymMatrix::zeros(1).unwrap();
        let f = cholesky(&a, 0.0).unwrap();
        // Zero diagonal falls back to unit scale, so the first retry succeeds.
        assert_eq!(f.jitter_applied(), 1e-10);
        assert!(f.jitter_applied() >= 1e-10 && f.jitter_applied() <= 1e-6);
        assert!(close(f.lower(0, 0), 1e-5, 1e-12));
    }

    #[test]
    fn indefinite_matrix_fails() {
        let a = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(
            cholesky(&a, 0.0),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn dimension_mismatch() {
        let f = cholesky(&SymMatrix::identity(2).unwrap(), 0.0).unwrap();
        assert_eq!(
            f.solve(&[1.0]),
            Err(Error::DimensionMismatch {
                expected: 2,
                actual: 1
            })
        );
        assert!(f.solve_twice(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn construction_symmetrizes() {
        let m = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![4.0, 1.0]]).unwrap();
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.get(1, 0), 3.0);
        assert!(SymMatrix::from_rows(&[vec![f64::NAN]]).is_err());
        assert!(SymMatrix::from_rows(&[vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn negative_ridge_rejected() {
        let a = SymMatrix::identity(1).unwrap();
        assert!(cholesky(&a, -1.0).is_err());
    }

    fn spd_strategy() -> impl Strategy<Value = (SymMatrix, Vec<f64>)> {
        (1usize..=20).prop_flat_map(|n| {
            (
                prop::collection::vec(-1.0f64..1.0, n * n),
                prop::collection::vec(-10.0f64..10.0, n),
            )
                .prop_map(move |(g, b)| {
                    // B·Bᵀ + n·I is well conditioned and SPD.
                    let a = SymMatrix::from_fn(n, |i, j| {
                        let s: f64 = (0..n).map(|k| g[i * n + k] * g[j * n + k]).sum();
                        s + if i == j { n as f64 } else { 0.0 }
                    })
                    .unwrap();
                    (a, b)
                })
        })
    }

    proptest! {
        #[test]
        fn solve_residual_small((a, b) in spd_strategy()) {
            let f = cholesky(&a, 0.0).unwrap();
            prop_assert_eq!(f.jitter_applied(), 0.0);
            let v = f.solve(&b).unwrap();
            let r = a.mul_vec(&v).unwrap();
            let res: f64 = r.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!(res <= 1e-9 * nb.max(f64::MIN_POSITIVE));
        }

        #[test]
        fn solve_twice_is_two_solves((a, b) in spd_strategy()) {
            let f = cholesky(&a, 0.5).unwrap();
            let once = f.solve(&b).unwrap();
            prop_assert_eq!(f.solve_twice(&b).unwrap(), f.solve(&once).unwrap());
        }

        #[test]
        fn factor_reconstructs((a, _b) in spd_strategy()) {
            let f = cholesky(&a, 0.25).unwrap();
            let r = f.reconstruct();
            let n = a.dim();
            let mut num = 0.0;
            let mut den = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let target = a.get(i, j) + if i == j { 0.25 } else { 0.0 };
                    num += (r.get(i, j) - target).powi(2);
                    den += target * target;
                }
                prop_assert!(f.lower(i, i) > 0.0);
            }
            prop_assert!(num.sqrt() <= 1e-10 * den.sqrt());
        }
    }
}
