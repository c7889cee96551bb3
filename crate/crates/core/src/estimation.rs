//! Batch exponentially weighted least-squares machinery.
//!
//! These solvers are the closed-form counterparts of the streaming recursions
//! in [`crate::rls`] and double as their reference in tests: correlation
//! accumulation, the reduced-rank weight and projection-matrix solutions, the
//! achieved sum of error squares, and the alternating joint design of the
//! projection matrix and reduced-rank filter.

use crate::error::{check_len, Error, Result};
use crate::linalg::{
    add_ridge, hermitize, solve_hermitian, solve_hermitian_vec, trace_average, CMatrix, CVector,
    C64,
};

/// Complex full-rank input snapshot `r[i]`.
pub type ObservationVector = CVector;
/// `M x D` bank of full-rank filters, one per column.
pub type ProjectionMatrix = CMatrix;
/// Reduced-rank estimator operating on `S^H r`.
pub type ReducedWeights = CVector;

/// Ordered `(r[l], d[l])` pairs together with the forgetting factor.
#[derive(Debug, Clone)]
pub struct SampleHistory {
    samples: Vec<(ObservationVector, C64)>,
    lambda: f64,
}

impl SampleHistory {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::Input(format!(
                "forgetting factor must lie in (0, 1], got {lambda}"
            )));
        }
        Ok(Self {
            samples: Vec::new(),
            lambda,
        })
    }

    pub fn from_samples(
        lambda: f64,
        samples: impl IntoIterator<Item = (ObservationVector, C64)>,
    ) -> Result<Self> {
        let mut h = Self::new(lambda)?;
        for (r, d) in samples {
            h.push(r, d)?;
        }
        Ok(h)
    }

    pub fn push(&mut self, r: ObservationVector, d: C64) -> Result<()> {
        if let Some((first, _)) = self.samples.first() {
            check_len("sample history", first.len(), r.len())?;
        }
        if !r
            .iter()
            .chain(std::iter::once(&d))
            .all(|z| z.re.is_finite() && z.im.is_finite())
        {
            return Err(Error::NonFinite {
                context: "sample history",
            });
        }
        self.samples.push((r, d));
        Ok(())
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Full-rank dimension `M`, or zero for an empty history.
    pub fn dim(&self) -> usize {
        self.samples.first().map_or(0, |(r, _)| r.len())
    }

    pub fn samples(&self) -> &[(ObservationVector, C64)] {
        &self.samples
    }

    /// Samples paired with their weights `lambda^(i-l)`, oldest first.
    pub fn weighted(&self) -> impl Iterator<Item = (f64, &ObservationVector, C64)> + '_ {
        let n = self.samples.len();
        self.samples
            .iter()
            .enumerate()
            .map(move |(l, (r, d))| (self.lambda.powi((n - 1 - l) as i32), r, *d))
    }

    fn require_nonempty(&self) -> Result<()> {
        if self.is_empty() {
            Err(Error::Input("sample history is empty".into()))
        } else {
            Ok(())
        }
    }
}

/// Full-rank covariance `R`, cross-correlation `p` and weighted desired energy.
#[derive(Debug, Clone)]
pub struct CorrelationPair {
    pub r: CMatrix,
    pub p: CVector,
    pub sigma2_d: f64,
}

/// Reduced-rank statistics of a projection `S` and a weight trajectory.
#[derive(Debug, Clone)]
pub struct ReducedCorrelationPair {
    /// `sum lambda^(i-l) rbar rbar^H` with `rbar = S^H r`.
    pub rbar: CMatrix,
    /// `sum lambda^(i-l) d* rbar`.
    pub pbar: CVector,
    /// `sum lambda^(i-l) d* r wbar[l]^H`, an `M x D` matrix.
    pub pd: CMatrix,
    /// Weighted mean `sum lambda^(i-l) wbar[l] wbar[l]^H / sum lambda^(i-l)`.
    pub rw: CMatrix,
}

impl ReducedCorrelationPair {
    /// Accumulates the reduced statistics of `history` under projection `s`.
    ///
    /// `weights` is the reduced-weight trajectory, one vector per sample; a
    /// single vector is held constant across the whole history.
    ///
    /// `rw` is normalized by the total weight so that `R S R_w = P_D` is the
    /// exact normal equation of the cost when the weights are constant.
    pub fn from_history(
        history: &SampleHistory,
        s: &ProjectionMatrix,
        weights: &[ReducedWeights],
    ) -> Result<Self> {
        history.require_nonempty()?;
        let m = history.dim();
        let d = s.ncols();
        check_len("projection rows", m, s.nrows())?;
        if weights.len() != 1 {
            check_len("weight trajectory", history.len(), weights.len())?;
        }
        for w in weights {
            check_len("reduced weights", d, w.len())?;
        }

        let mut rbar = CMatrix::zeros(d, d);
        let mut pbar = CVector::zeros(d);
        let mut pd = CMatrix::zeros(m, d);
        let mut rw = CMatrix::zeros(d, d);
        for (l, (lam, r, dl)) in history.weighted().enumerate() {
            let w = if weights.len() == 1 {
                &weights[0]
            } else {
                &weights[l]
            };
            let rb = s.adjoint() * r;
            rbar += (&rb * rb.adjoint()) * C64::from(lam);
            pbar += &rb * (dl.conj() * lam);
            pd += (r * w.adjoint()) * (dl.conj() * lam);
            rw += (w * w.adjoint()) * C64::from(lam);
        }
        let total: f64 = history.weighted().map(|(lam, _, _)| lam).sum();
        rw /= C64::from(total);
        hermitize(&mut rbar);
        hermitize(&mut rw);
        Ok(Self { rbar, pbar, pd, rw })
    }
}

/// Exponentially weighted `R`, `p` and `sigma2_d` of a history.
pub fn accumulate_correlation(history: &SampleHistory) -> Result<CorrelationPair> {
    history.require_nonempty()?;
    let m = history.dim();
    let mut r = CMatrix::zeros(m, m);
    let mut p = CVector::zeros(m);
    let mut sigma2_d = 0.0;
    for (lam, x, d) in history.weighted() {
        r.ger(C64::from(lam), x, &x.conjugate(), C64::from(1.0));
        p.axpy(d.conj() * lam, x, C64::from(1.0));
        sigma2_d += lam * d.norm_sqr();
    }
    hermitize(&mut r);
    Ok(CorrelationPair { r, p, sigma2_d })
}

/// `(S^H R S + ridge I)^-1 S^H p`.
pub fn batch_reduced_weights(
    s: &ProjectionMatrix,
    corr: &CorrelationPair,
    ridge: f64,
) -> Result<ReducedWeights> {
    check_shape(s, corr.r.nrows())?;
    check_ridge(ridge)?;
    let mut rbar = s.adjoint() * &corr.r * s;
    hermitize(&mut rbar);
    let pbar = s.adjoint() * &corr.p;
    solve_hermitian_vec(&add_ridge(&rbar, ridge), &pbar, "reduced covariance")
}

/// `(R + ridge I)^-1 P_D (R_w + ridge I)^-1`.
pub fn batch_projection(
    corr: &CorrelationPair,
    red: &ReducedCorrelationPair,
    ridge: f64,
) -> Result<ProjectionMatrix> {
    batch_projection_with(corr, red, ridge, ridge)
}

/// [`batch_projection`] with separate loadings on `R` and `R_w`.
pub fn batch_projection_with(
    corr: &CorrelationPair,
    red: &ReducedCorrelationPair,
    ridge_r: f64,
    ridge_w: f64,
) -> Result<ProjectionMatrix> {
    check_ridge(ridge_r)?;
    check_ridge(ridge_w)?;
    check_len("cross matrix rows", corr.r.nrows(), red.pd.nrows())?;
    check_len("cross matrix columns", red.rw.nrows(), red.pd.ncols())?;
    let left = solve_hermitian(
        &add_ridge(&corr.r, ridge_r),
        &red.pd,
        "full-rank covariance",
    )?;
    // X R_w^-1 = (R_w^-1 X^H)^H for Hermitian R_w.
    let right = solve_hermitian(
        &add_ridge(&red.rw, ridge_w),
        &left.adjoint(),
        "weight covariance",
    )?;
    Ok(right.adjoint())
}

/// Sum of error squares `sigma2_d - pbar^H Rbar^-1 pbar` achieved by the
/// reduced-rank LS solution.
pub fn ses(red: &ReducedCorrelationPair, sigma2_d: f64) -> Result<f64> {
    if sigma2_d.is_nan() || sigma2_d < 0.0 {
        return Err(Error::Input(format!(
            "sigma2_d must be non-negative, got {sigma2_d}"
        )));
    }
    let x = solve_hermitian_vec(&red.rbar, &red.pbar, "reduced covariance")?;
    Ok(sigma2_d - red.pbar.dotc(&x).re)
}

/// Weighted LS cost `sum lambda^(i-l) |d[l] - wbar^H S^H r[l]|^2`.
pub fn cost(history: &SampleHistory, s: &ProjectionMatrix, wbar: &ReducedWeights) -> Result<f64> {
    check_shape(s, history.dim())?;
    check_len("reduced weights", s.ncols(), wbar.len())?;
    let composite = s * wbar;
    Ok(history
        .weighted()
        .map(|(lam, r, d)| lam * (d - composite.dotc(r)).norm_sqr())
        .sum())
}

/// Result of [`alternating_ls`].
#[derive(Debug, Clone)]
pub struct AlternatingSolution {
    pub s: ProjectionMatrix,
    pub wbar: ReducedWeights,
    /// Cost after each full sweep.
    pub cost_trace: Vec<f64>,
}

/// Alternates the reduced-weight solve and the projection solve, starting
/// from `init`.
///
/// `ridge` is relative: every inversion is loaded with `ridge` times the
/// trace average of the matrix being inverted. The reduced weights are held
/// constant over the history when forming `P_D` and `R_w`.
pub fn alternating_ls(
    history: &SampleHistory,
    rank: usize,
    iters: usize,
    init: &ProjectionMatrix,
    ridge: f64,
) -> Result<AlternatingSolution> {
    history.require_nonempty()?;
    if iters == 0 {
        return Err(Error::Input(
            "alternating_ls needs at least one sweep".into(),
        ));
    }
    check_shape(init, history.dim())?;
    check_len("initial projection rank", rank, init.ncols())?;
    check_ridge(ridge)?;

    let corr = accumulate_correlation(history)?;
    let ridge_r = ridge * trace_average(&corr.r);
    let mut s = init.clone();
    let mut wbar = CVector::zeros(rank);
    let mut cost_trace = Vec::with_capacity(iters);
    for _ in 0..iters {
        let mut rbar = s.adjoint() * &corr.r * &s;
        hermitize(&mut rbar);
        wbar = batch_reduced_weights(&s, &corr, ridge * trace_average(&rbar))?;
        let red = ReducedCorrelationPair::from_history(history, &s, std::slice::from_ref(&wbar))?;
        s = batch_projection_with(&corr, &red, ridge_r, ridge * trace_average(&red.rw))?;
        cost_trace.push(cost(history, &s, &wbar)?);
    }
    Ok(AlternatingSolution {
        s,
        wbar,
        cost_trace,
    })
}

/// `[I_D; 0]`, the truncation projection.
pub fn truncation_projection(m: usize, d: usize) -> ProjectionMatrix {
    CMatrix::identity(m, d)
}

fn check_shape(s: &ProjectionMatrix, m: usize) -> Result<()> {
    check_len("projection rows", m, s.nrows())?;
    if s.ncols() == 0 || s.ncols() > m {
        return Err(Error::Input(format!(
            "rank must satisfy 1 <= D <= M = {m}, got {}",
            s.ncols()
        )));
    }
    Ok(())
}

fn check_ridge(ridge: f64) -> Result<()> {
    if ridge >= 0.0 && ridge.is_finite() {
        Ok(())
    } else {
        Err(Error::Input(format!(
            "ridge must be finite and non-negative, got {ridge}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn basis(m: usize, k: usize) -> CVector {
        let mut v = CVector::zeros(m);
        v[k] = c(1.0, 0.0);
        v
    }

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> CVector {
        CVector::from_fn(n, |_, _| {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    fn random_history(seed: u64, m: usize, n: usize, lambda: f64) -> SampleHistory {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w0 = random_vec(&mut rng, m);
        SampleHistory::from_samples(
            lambda,
            (0..n).map(|_| {
                let r = random_vec(&mut rng, m);
                let noise = c(rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1));
                let d = w0.dotc(&r) + noise;
                (r, d)
            }),
        )
        .unwrap()
    }

    #[test]
    fn single_sample_correlation() {
        let h = SampleHistory::from_samples(1.0, [(basis(3, 0), c(1.0, 0.0))]).unwrap();
        let corr = accumulate_correlation(&h).unwrap();
        assert_eq!(corr.r, basis(3, 0) * basis(3, 0).transpose());
        assert_eq!(corr.p, basis(3, 0));
        assert_eq!(corr.sigma2_d, 1.0);
    }

    #[test]
    fn two_sample_weighted_correlation() {
        let h = SampleHistory::from_samples(
            0.5,
            [(basis(2, 0), c(1.0, 0.0)), (basis(2, 1), c(0.0, 2.0))],
        )
        .unwrap();
        let corr = accumulate_correlation(&h).unwrap();
        let mut expect_r = CMatrix::zeros(2, 2);
        expect_r[(0, 0)] = c(0.5, 0.0);
        expect_r[(1, 1)] = c(1.0, 0.0);
        assert!((corr.r - expect_r).norm() < 1e-15);
        assert!((corr.p - CVector::from_vec(vec![c(0.5, 0.0), c(0.0, -2.0)])).norm() < 1e-15);
        assert!((corr.sigma2_d - 4.5).abs() < 1e-15);
    }

    #[test]
    fn correlation_matches_double_loop() {
        let h = random_history(7, 5, 50, 0.998);
        let corr = accumulate_correlation(&h).unwrap();
        let n = h.len();
        for a in 0..5 {
            for b in 0..5 {
                let mut acc = c(0.0, 0.0);
                for (l, (r, _)) in h.samples().iter().enumerate() {
                    acc += r[a] * r[b].conj() * 0.998f64.powi((n - 1 - l) as i32);
                }
                assert!((corr.r[(a, b)] - acc).norm() < 1e-12);
            }
            let mut acc = c(0.0, 0.0);
            for (l, (r, d)) in h.samples().iter().enumerate() {
                acc += d.conj() * r[a] * 0.998f64.powi((n - 1 - l) as i32);
            }
            assert!((corr.p[a] - acc).norm() < 1e-12);
        }
    }

    #[test]
    fn empty_history_and_mismatch_are_errors() {
        let h = SampleHistory::new(1.0).unwrap();
        assert!(accumulate_correlation(&h).is_err());
        let mut h = SampleHistory::new(1.0).unwrap();
        h.push(basis(3, 0), c(1.0, 0.0)).unwrap();
        assert!(matches!(
            h.push(basis(2, 0), c(1.0, 0.0)),
            Err(Error::Dimension { .. })
        ));
        assert!(SampleHistory::new(0.0).is_err());
        assert!(SampleHistory::new(1.01).is_err());
    }

    #[test]
    fn identity_projection_gives_full_rank_solution() {
        let h = random_history(3, 6, 40, 0.99);
        let corr = accumulate_correlation(&h).unwrap();
        let w = batch_reduced_weights(&truncation_projection(6, 6), &corr, 0.0).unwrap();
        let full = corr.r.clone().lu().solve(&corr.p).unwrap();
        assert!((&w - &full).norm() / full.norm() < 1e-10);
    }

    #[test]
    fn selected_coordinates_of_diagonal_system() {
        let corr = CorrelationPair {
            r: CMatrix::from_diagonal(&CVector::from_vec(vec![
                c(2.0, 0.0),
                c(4.0, 0.0),
                c(5.0, 0.0),
                c(1.0, 0.0),
            ])),
            p: CVector::from_vec(vec![c(1.0, 1.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)]),
            sigma2_d: 10.0,
        };
        let w = batch_reduced_weights(&truncation_projection(4, 2), &corr, 0.0).unwrap();
        assert!((w[0] - c(0.5, 0.5)).norm() < 1e-14);
        assert!((w[1] - c(0.5, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn reduced_weights_minimize_cost_for_fixed_projection() {
        let h = random_history(11, 8, 60, 0.99);
        let corr = accumulate_correlation(&h).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let s = CMatrix::from_fn(8, 3, |_, _| {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let w = batch_reduced_weights(&s, &corr, 0.0).unwrap();
        let base = cost(&h, &s, &w).unwrap();
        for _ in 0..20 {
            let u = random_vec(&mut rng, 3);
            let perturbed = &w + u * c(1e-3, 0.0);
            assert!(cost(&h, &s, &perturbed).unwrap() > base);
        }
    }

    #[test]
    fn singular_reduced_covariance_is_an_error() {
        let h = SampleHistory::from_samples(1.0, [(basis(3, 0), c(1.0, 0.0))]).unwrap();
        let corr = accumulate_correlation(&h).unwrap();
        let err = batch_reduced_weights(&truncation_projection(3, 2), &corr, 0.0).unwrap_err();
        assert!(matches!(err, Error::Singular { .. }));
        // A ridge makes the same system solvable.
        assert!(batch_reduced_weights(&truncation_projection(3, 2), &corr, 1e-3).is_ok());
    }

    #[test]
    fn scalar_projection() {
        let corr = CorrelationPair {
            r: CMatrix::from_element(1, 1, c(2.0, 0.0)),
            p: CVector::from_element(1, c(1.0, 0.0)),
            sigma2_d: 1.0,
        };
        let red = ReducedCorrelationPair {
            rbar: CMatrix::from_element(1, 1, c(1.0, 0.0)),
            pbar: CVector::from_element(1, c(1.0, 0.0)),
            pd: CMatrix::from_element(1, 1, c(4.0, 0.0)),
            rw: CMatrix::from_element(1, 1, c(1.0, 0.0)),
        };
        let s = batch_projection(&corr, &red, 0.0).unwrap();
        assert!((s[(0, 0)] - c(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn projection_minimizes_cost_for_fixed_weights() {
        let h = random_history(21, 6, 80, 0.99);
        let corr = accumulate_correlation(&h).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let w = random_vec(&mut rng, 2);
        let red = ReducedCorrelationPair::from_history(
            &h,
            &truncation_projection(6, 2),
            std::slice::from_ref(&w),
        )
        .unwrap();
        let s = batch_projection(&corr, &red, 1e-8).unwrap();
        let base = cost(&h, &s, &w).unwrap();
        for _ in 0..20 {
            let e = CMatrix::from_fn(6, 2, |_, _| {
                c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            assert!(cost(&h, &(&s + e * c(1e-3, 0.0)), &w).unwrap() >= base - 1e-9);
        }
    }

    #[test]
    fn projection_matches_dense_solver() {
        let h = random_history(7, 5, 50, 0.998);
        let corr = accumulate_correlation(&h).unwrap();
        let w = CVector::from_vec(vec![c(0.7, -0.2), c(0.1, 0.4)]);
        let red =
            ReducedCorrelationPair::from_history(&h, &truncation_projection(5, 2), &[w]).unwrap();
        let s = batch_projection(&corr, &red, 0.01).unwrap();
        // Independent route: explicit inverses via LU.
        let r_inv = crate::linalg::add_ridge(&corr.r, 0.01)
            .try_inverse()
            .unwrap();
        let rw_inv = crate::linalg::add_ridge(&red.rw, 0.01)
            .try_inverse()
            .unwrap();
        let dense = r_inv * &red.pd * rw_inv;
        assert!((&s - &dense).norm() / dense.norm() < 1e-9);
    }

    #[test]
    fn ses_trivial_cases() {
        let red = ReducedCorrelationPair {
            rbar: CMatrix::identity(2, 2),
            pbar: CVector::zeros(2),
            pd: CMatrix::zeros(3, 2),
            rw: CMatrix::identity(2, 2),
        };
        assert_eq!(ses(&red, 3.0).unwrap(), 3.0);
        let red = ReducedCorrelationPair {
            rbar: CMatrix::from_element(1, 1, c(2.0, 0.0)),
            pbar: CVector::from_element(1, c(2.0, 0.0)),
            pd: CMatrix::zeros(1, 1),
            rw: CMatrix::identity(1, 1),
        };
        assert!((ses(&red, 4.0).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn ses_equals_residual_sum() {
        let h = random_history(5, 8, 70, 0.995);
        let corr = accumulate_correlation(&h).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let s = CMatrix::from_fn(8, 3, |_, _| {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let w = batch_reduced_weights(&s, &corr, 0.0).unwrap();
        let red = ReducedCorrelationPair::from_history(&h, &s, std::slice::from_ref(&w)).unwrap();
        let direct: f64 = h
            .weighted()
            .map(|(lam, r, d)| lam * (d - w.dotc(&(s.adjoint() * r))).norm_sqr())
            .sum();
        let value = ses(&red, corr.sigma2_d).unwrap();
        assert!(value >= -1e-9);
        assert!((value - direct).abs() <= 1e-9 * direct.abs().max(1.0));
    }

    #[test]
    fn full_rank_alternation_reaches_ls_cost() {
        let h = random_history(9, 5, 40, 1.0);
        let corr = accumulate_correlation(&h).unwrap();
        let ls = corr.sigma2_d - corr.p.dotc(&corr.r.clone().lu().solve(&corr.p).unwrap()).re;
        let sol = alternating_ls(&h, 5, 1, &truncation_projection(5, 5), 1e-8).unwrap();
        assert!((sol.cost_trace[0] - ls).abs() < 1e-6 * ls.max(1.0));
    }

    #[test]
    fn alternation_is_monotone() {
        let h = random_history(13, 16, 100, 0.998);
        let init = truncation_projection(16, 3);
        let sol = alternating_ls(&h, 3, 10, &init, 1e-8).unwrap();
        let mut w0 = CVector::zeros(3);
        w0[0] = c(1.0, 0.0);
        let initial = cost(&h, &init, &w0).unwrap();
        assert!(sol.cost_trace[0] < initial);
        for pair in sol.cost_trace.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-9, "{pair:?}");
        }
        assert_eq!(sol.cost_trace.len(), 10);
    }

    #[test]
    fn alternation_rejects_bad_arguments() {
        let h = random_history(1, 4, 10, 1.0);
        assert!(alternating_ls(&h, 2, 0, &truncation_projection(4, 2), 1e-8).is_err());
        assert!(alternating_ls(&h, 3, 1, &truncation_projection(4, 2), 1e-8).is_err());
        assert!(batch_reduced_weights(
            &truncation_projection(4, 2),
            &accumulate_correlation(&h).unwrap(),
            -1.0
        )
        .is_err());
    }
}
