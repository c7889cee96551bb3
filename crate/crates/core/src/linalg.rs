//! Dense complex kernels shared by the batch solvers and the recursions.
//!
//! The streaming kernels count complex multiplications into an [`OpCounter`]
//! so per-step cost can be measured rather than estimated.

use std::cell::Cell;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CVector = DVector<C64>;
pub type CMatrix = DMatrix<C64>;

/// Reciprocal condition below which a Hermitian system is reported as singular.
pub const SINGULAR_RCOND: f64 = 1e-14;

/// Running count of complex multiply(-accumulate) operations.
#[derive(Debug, Default, Clone)]
pub struct OpCounter(Cell<u64>);

impl OpCounter {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&self, n: usize) {
        self.0.set(self.0.get() + n as u64);
    }

    pub fn get(&self) -> u64 {
        self.0.get()
    }

    pub fn reset(&self) {
        self.0.set(0);
    }
}

/// Column-major slices of `a`, one per column.
fn columns(a: &CMatrix) -> std::slice::ChunksExact<'_, C64> {
    a.as_slice().chunks_exact(a.nrows().max(1))
}

/// `a * x`
pub fn matvec(a: &CMatrix, x: &CVector, ops: &OpCounter) -> CVector {
    debug_assert_eq!(a.ncols(), x.len());
    let mut y = CVector::zeros(a.nrows());
    let ys = y.as_mut_slice();
    for (col, &xj) in columns(a).zip(x.as_slice()) {
        for (yi, aij) in ys.iter_mut().zip(col) {
            *yi += aij * xj;
        }
    }
    ops.add(a.nrows() * a.ncols());
    y
}

/// `a^H * x`
pub fn adjoint_matvec(a: &CMatrix, x: &CVector, ops: &OpCounter) -> CVector {
    debug_assert_eq!(a.nrows(), x.len());
    let xs = x.as_slice();
    let y = columns(a)
        .take(a.ncols())
        .map(|col| col.iter().zip(xs).map(|(c, xi)| c.conj() * xi).sum())
        .collect::<Vec<C64>>();
    ops.add(a.nrows() * a.ncols());
    CVector::from_vec(y)
}

/// Row vector `x^H * a`, returned as a column of its entries.
pub fn row_times(x: &CVector, a: &CMatrix, ops: &OpCounter) -> CVector {
    debug_assert_eq!(a.nrows(), x.len());
    let xs = x.as_slice();
    let y = columns(a)
        .take(a.ncols())
        .map(|col| col.iter().zip(xs).map(|(c, xi)| xi.conj() * c).sum())
        .collect::<Vec<C64>>();
    ops.add(a.nrows() * a.ncols());
    CVector::from_vec(y)
}

/// `x^H * y`
pub fn dotc(x: &CVector, y: &CVector, ops: &OpCounter) -> C64 {
    debug_assert_eq!(x.len(), y.len());
    ops.add(x.len());
    x.as_slice()
        .iter()
        .zip(y.as_slice())
        .map(|(a, b)| a.conj() * b)
        .sum()
}

/// `(a - k * row) / lambda`, where `row` holds the entries of a row vector.
///
/// This is the common shape of every matrix-inversion-lemma update.
pub fn scaled_rank_one_downdate(
    a: &CMatrix,
    k: &CVector,
    row: &CVector,
    lambda: f64,
    ops: &OpCounter,
) -> CMatrix {
    debug_assert_eq!(a.nrows(), k.len());
    debug_assert_eq!(a.ncols(), row.len());
    let inv = 1.0 / lambda;
    let ks = k.as_slice();
    let mut out = a.clone();
    let rows = out.nrows().max(1);
    for (col, &rj) in out
        .as_mut_slice()
        .chunks_exact_mut(rows)
        .zip(row.as_slice())
    {
        for (o, ki) in col.iter_mut().zip(ks) {
            *o = (*o - ki * rj) * inv;
        }
    }
    ops.add(a.nrows() * a.ncols());
    out
}

/// Replace `a` with `(a + a^H) / 2`.
pub fn hermitize(a: &mut CMatrix) {
    let n = a.nrows();
    for i in 0..n {
        a[(i, i)].im = 0.0;
        for j in (i + 1)..n {
            let v = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            a[(i, j)] = v;
            a[(j, i)] = v.conj();
        }
    }
}

/// `max|a - a^H| / max|a|`, zero for the zero matrix.
pub fn hermitian_drift(a: &CMatrix) -> f64 {
    let scale = max_abs(a);
    if scale == 0.0 {
        return 0.0;
    }
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst / scale
}

pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

pub fn trace_average(a: &CMatrix) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    a.diagonal().iter().map(|z| z.re).sum::<f64>() / a.nrows() as f64
}

pub fn all_finite<'a>(it: impl IntoIterator<Item = &'a C64>) -> bool {
    it.into_iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Ratio of extreme eigenvalue magnitudes of a Hermitian matrix.
pub fn condition_estimate(a: &CMatrix) -> f64 {
    let mut h = a.clone();
    hermitize(&mut h);
    let eig = h.symmetric_eigenvalues();
    let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), v| {
        (lo.min(v.abs()), hi.max(v.abs()))
    });
    if hi == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Solve `a x = b` for Hermitian positive (semi-)definite `a`.
///
/// Fails with [`Error::Singular`] when the reciprocal condition estimate is
/// below [`SINGULAR_RCOND`].
pub fn solve_hermitian(a: &CMatrix, b: &CMatrix, context: &'static str) -> Result<CMatrix> {
    if !all_finite(a.iter()) || !all_finite(b.iter()) {
        return Err(Error::NonFinite { context });
    }
    let condition = condition_estimate(a);
    if !(condition.is_finite() && 1.0 / condition >= SINGULAR_RCOND) {
        return Err(Error::Singular { context, condition });
    }
    let mut h = a.clone();
    hermitize(&mut h);
    let x = match h.clone().cholesky() {
        Some(chol) => chol.solve(b),
        None => h
            .lu()
            .solve(b)
            .ok_or(Error::Singular { context, condition })?,
    };
    if all_finite(x.iter()) {
        Ok(x)
    } else {
        Err(Error::NonFinite { context })
    }
}

pub fn solve_hermitian_vec(a: &CMatrix, b: &CVector, context: &'static str) -> Result<CVector> {
    let x = solve_hermitian(
        a,
        &CMatrix::from_column_slice(b.len(), 1, b.as_slice()),
        context,
    )?;
    Ok(x.column(0).into_owned())
}

/// `a + ridge * I`
pub fn add_ridge(a: &CMatrix, ridge: f64) -> CMatrix {
    let mut out = a.clone();
    for i in 0..out.nrows().min(out.ncols()) {
        out[(i, i)].re += ridge;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn kernels_match_nalgebra() {
        let a = CMatrix::from_fn(3, 2, |i, j| c(i as f64 + 1.0, j as f64 - 0.5));
        let x2 = CVector::from_vec(vec![c(1.0, 2.0), c(-0.5, 0.25)]);
        let x3 = CVector::from_vec(vec![c(0.5, 0.0), c(0.0, -1.0), c(2.0, 1.0)]);
        let ops = OpCounter::new();
        assert!((matvec(&a, &x2, &ops) - &a * &x2).norm() < 1e-14);
        assert!((adjoint_matvec(&a, &x3, &ops) - a.adjoint() * &x3).norm() < 1e-14);
        let row = (x3.adjoint() * &a).transpose();
        assert!((row_times(&x3, &a, &ops) - row).norm() < 1e-14);
        assert_eq!(ops.get(), 18);
    }

    #[test]
    fn downdate_form() {
        let a = CMatrix::identity(2, 2);
        let k = CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let row = CVector::from_vec(vec![c(0.5, 0.0), c(0.0, 0.0)]);
        let out = scaled_rank_one_downdate(&a, &k, &row, 0.5, &OpCounter::new());
        assert_eq!(out[(0, 0)], c(1.0, 0.0));
        assert_eq!(out[(1, 1)], c(2.0, 0.0));
    }

    #[test]
    fn singular_is_reported_with_condition() {
        let a = CMatrix::from_element(2, 2, c(1.0, 0.0));
        let b = CVector::from_element(2, c(1.0, 0.0));
        match solve_hermitian_vec(&a, &b, "test") {
            Err(Error::Singular { condition, .. }) => assert!(condition > 1e14),
            other => panic!("expected singular error, got {other:?}"),
        }
    }

    #[test]
    fn hermitize_removes_asymmetry() {
        let mut a = CMatrix::from_fn(3, 3, |i, j| {
            c((i * 3 + j) as f64, (i as f64) - (j as f64) * 2.0)
        });
        assert!(hermitian_drift(&a) > 0.1);
        hermitize(&mut a);
        assert_eq!(hermitian_drift(&a), 0.0);
    }
}
