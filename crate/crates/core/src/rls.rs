//! Streaming RLS recursions.
//!
//! [`JioState`] adapts a reduced-rank filter `wbar` and the projection matrix
//! `S` that feeds it, jointly, one sample at a time. [`FullRankState`] is the
//! conventional exponentially weighted RLS filter used as the baseline.
//!
//! Per sample, a [`JioState::step`] runs in the order given by [`STEP_ORDER`]:
//! the reduced-rank weights are updated first, and the projection update then
//! uses the freshly updated `wbar[i]`.

use crate::error::{check_len, Error, Result};
use crate::estimation::{
    truncation_projection, ObservationVector, ProjectionMatrix, ReducedWeights,
};
use crate::linalg::{
    adjoint_matvec, all_finite, dotc, hermitian_drift, matvec, row_times, scaled_rank_one_downdate,
    CMatrix, CVector, OpCounter, C64,
};

/// Sub-step order used by [`JioState::step`].
pub const STEP_ORDER: [&str; 6] = [
    "project",
    "a-priori output",
    "reduced_update",
    "projection_gain",
    "tvec_update (uses wbar[i])",
    "projection_update",
];

/// Default inverse initialization `delta`, giving `P[0] = 100 I`.
pub const DEFAULT_DELTA: f64 = 0.01;

/// Estimate and a-priori error of one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutput {
    pub x: C64,
    pub xi: C64,
}

/// Regularization of the three inverse estimates at start-up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Deltas {
    pub delta: f64,
    pub delta_bar: f64,
    pub delta_w: f64,
}

impl Default for Deltas {
    fn default() -> Self {
        Self {
            delta: DEFAULT_DELTA,
            delta_bar: DEFAULT_DELTA,
            delta_w: DEFAULT_DELTA,
        }
    }
}

/// State of the joint projection / reduced-rank filter recursion.
#[derive(Debug, Clone)]
pub struct JioState {
    pub s: ProjectionMatrix,
    pub wbar: ReducedWeights,
    /// Running estimate of `R^-1` (M x M).
    pub p: CMatrix,
    /// Running estimate of `Rbar^-1` (D x D).
    pub phibar: CMatrix,
    /// Running estimate of `R_w^-1` (D x D).
    pub qw: CMatrix,
    pub lambda: f64,
    pub step_index: u64,
    /// When false only the reduced-rank filter adapts and `S`, `P`, `Q_w`
    /// stay frozen.
    pub adapt_projection: bool,
    /// How the `t` term of the projection update is scaled.
    pub scaling: ProjectionScaling,
    /// Running weight mass `c[i] = sum_{l<=i} lambda^(i-l)`.
    pub weight_mass: f64,
    ops: OpCounter,
}

/// Scaling of `t` in the projection update `S <- S + k (c d* t^H - rbar^H)`.
///
/// `Q_w` tracks the inverse of the exponentially *summed* weight correlation,
/// so `t^H wbar` settles near `1 / c[i]`. Scaling by the weight mass `c[i]`
/// pairs `P_D` with the weight correlation averaged over the same window,
/// which makes `S wbar` follow the full-rank RLS update of the composite
/// filter. `Unit` applies the update with `c = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProjectionScaling {
    #[default]
    WeightMass,
    Unit,
}

/// Intermediate result of [`reduced_update`].
#[derive(Debug, Clone)]
pub struct ReducedStep {
    pub wbar: ReducedWeights,
    pub phibar: CMatrix,
    pub xi: C64,
}

impl JioState {
    /// `wbar = e1`, `S = [I_D; 0]` and scaled-identity inverses.
    pub fn new(m: usize, d: usize, lambda: f64, deltas: Deltas) -> Result<Self> {
        if d == 0 || d > m {
            return Err(Error::Input(format!(
                "rank must satisfy 1 <= D <= M = {m}, got {d}"
            )));
        }
        check_lambda(lambda)?;
        for (name, v) in [
            ("delta", deltas.delta),
            ("delta_bar", deltas.delta_bar),
            ("delta_w", deltas.delta_w),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Input(format!("{name} must be positive, got {v}")));
            }
        }
        let mut wbar = CVector::zeros(d);
        wbar[0] = C64::new(1.0, 0.0);
        Ok(Self {
            s: truncation_projection(m, d),
            wbar,
            p: scaled_identity(m, 1.0 / deltas.delta),
            phibar: scaled_identity(d, 1.0 / deltas.delta_bar),
            qw: scaled_identity(d, 1.0 / deltas.delta_w),
            lambda,
            step_index: 0,
            adapt_projection: true,
            scaling: ProjectionScaling::default(),
            weight_mass: 0.0,
            ops: OpCounter::new(),
        })
    }

    pub fn full_dim(&self) -> usize {
        self.s.nrows()
    }

    pub fn rank(&self) -> usize {
        self.s.ncols()
    }

    /// Complex multiplications performed since construction or the last reset.
    pub fn op_count(&self) -> u64 {
        self.ops.get()
    }

    pub fn reset_op_count(&self) {
        self.ops.reset();
    }

    /// `S wbar`, the equivalent full-rank filter.
    pub fn effective_weights(&self) -> CVector {
        &self.s * &self.wbar
    }

    /// A-priori estimate `wbar^H S^H r` without changing the state.
    pub fn output(&self, r: &ObservationVector) -> Result<C64> {
        let rbar = project(&self.s, r)?;
        Ok(self.wbar.dotc(&rbar))
    }

    /// Largest relative Hermitian asymmetry among `P`, `Phibar`, `Q_w`.
    pub fn hermitian_drift(&self) -> f64 {
        hermitian_drift(&self.p)
            .max(hermitian_drift(&self.phibar))
            .max(hermitian_drift(&self.qw))
    }

    /// `c[i]` for the step about to be taken.
    pub fn next_weight_mass(&self) -> f64 {
        self.lambda * self.weight_mass + 1.0
    }

    pub fn is_finite(&self) -> bool {
        all_finite(self.s.iter())
            && all_finite(self.wbar.iter())
            && all_finite(self.p.iter())
            && all_finite(self.phibar.iter())
            && all_finite(self.qw.iter())
    }

    /// One joint update with a known desired value.
    pub fn step(&mut self, r: &ObservationVector, d: C64) -> Result<StepOutput> {
        self.step_with(r, |_| d)
    }

    /// One joint update where the desired value is derived from the
    /// a-priori estimate (decision-directed operation).
    ///
    /// On error the state is left untouched.
    pub fn step_with(
        &mut self,
        r: &ObservationVector,
        desired: impl FnOnce(C64) -> C64,
    ) -> Result<StepOutput> {
        let rbar = project_counted(&self.s, r, &self.ops)?;
        let x = dotc(&self.wbar, &rbar, &self.ops);
        let d = desired(x);
        if !(d.re.is_finite() && d.im.is_finite()) {
            return Err(Error::NonFinite {
                context: "desired value",
            });
        }
        let reduced = reduced_update(self, &rbar, d)?;

        let projection = if self.adapt_projection {
            let k = projection_gain(self, r)?;
            let (t, qw) = tvec_update(self, &reduced.wbar)?;
            let (s, p) = projection_update(self, r, &rbar, d, &t, &k)?;
            Some((s, p, qw))
        } else {
            None
        };

        self.wbar = reduced.wbar;
        self.phibar = reduced.phibar;
        if let Some((s, p, qw)) = projection {
            self.s = s;
            self.p = p;
            self.qw = qw;
        }
        self.weight_mass = self.next_weight_mass();
        self.step_index += 1;
        Ok(StepOutput { x, xi: reduced.xi })
    }
}

/// `S^H r`.
pub fn project(s: &ProjectionMatrix, r: &ObservationVector) -> Result<CVector> {
    project_counted(s, r, &OpCounter::new())
}

fn project_counted(
    s: &ProjectionMatrix,
    r: &ObservationVector,
    ops: &OpCounter,
) -> Result<CVector> {
    check_len("observation", s.nrows(), r.len())?;
    Ok(adjoint_matvec(s, r, ops))
}

/// Gain `lambda^-1 Phibar rbar / (1 + lambda^-1 rbar^H Phibar rbar)`.
pub fn reduced_gain(state: &JioState, rbar: &CVector) -> Result<CVector> {
    check_len("reduced observation", state.rank(), rbar.len())?;
    kalman_gain(
        &state.phibar,
        rbar,
        state.lambda,
        &state.ops,
        "reduced gain",
    )
}

/// Reduced-rank weight update and its inverse-covariance update.
///
/// The error `xi = d - wbar^H rbar` is formed before the update.
pub fn reduced_update(state: &JioState, rbar: &CVector, d: C64) -> Result<ReducedStep> {
    let k = reduced_gain(state, rbar)?;
    let xi = d - dotc(&state.wbar, rbar, &state.ops);
    let wbar = &state.wbar + &k * xi.conj();
    state.ops.add(k.len());
    let row = row_times(rbar, &state.phibar, &state.ops);
    let phibar = scaled_rank_one_downdate(&state.phibar, &k, &row, state.lambda, &state.ops);
    Ok(ReducedStep { wbar, phibar, xi })
}

/// Gain `lambda^-1 P r / (1 + lambda^-1 r^H P r)` for the projection update.
pub fn projection_gain(state: &JioState, r: &ObservationVector) -> Result<CVector> {
    check_len("observation", state.full_dim(), r.len())?;
    kalman_gain(&state.p, r, state.lambda, &state.ops, "projection gain")
}

/// Vector `t` and the updated `Q_w`, driven by `wbar`.
///
/// `Q_w <- lambda^-1 Q_w - lambda^-1 t wbar^H Q_w`.
pub fn tvec_update(state: &JioState, wbar: &ReducedWeights) -> Result<(CVector, CMatrix)> {
    check_len("reduced weights", state.rank(), wbar.len())?;
    let t = kalman_gain(&state.qw, wbar, state.lambda, &state.ops, "weight gain")?;
    let row = row_times(wbar, &state.qw, &state.ops);
    let qw = scaled_rank_one_downdate(&state.qw, &t, &row, state.lambda, &state.ops);
    Ok((t, qw))
}

/// Projection update `S <- S + k (c d* t^H - rbar^H)` together with
/// `P <- lambda^-1 P - lambda^-1 k r^H P`.
///
/// `c` is the weight mass of the current step, or one under
/// [`ProjectionScaling::Unit`]; see [`ProjectionScaling`].
pub fn projection_update(
    state: &JioState,
    r: &ObservationVector,
    rbar: &CVector,
    d: C64,
    t: &CVector,
    k: &CVector,
) -> Result<(ProjectionMatrix, CMatrix)> {
    let (m, dd) = (state.full_dim(), state.rank());
    check_len("observation", m, r.len())?;
    check_len("projection gain", m, k.len())?;
    check_len("reduced observation", dd, rbar.len())?;
    check_len("t vector", dd, t.len())?;

    let mut s = state.s.clone();
    let mass = match state.scaling {
        ProjectionScaling::WeightMass => state.next_weight_mass(),
        ProjectionScaling::Unit => 1.0,
    };
    let dc = d.conj() * mass;
    for (j, mut col) in s.column_iter_mut().enumerate() {
        let coef = dc * t[j].conj() - rbar[j].conj();
        for (sij, ki) in col.iter_mut().zip(k.iter()) {
            *sij += ki * coef;
        }
    }
    state.ops.add(m * dd + dd);

    let row = row_times(r, &state.p, &state.ops);
    let p = scaled_rank_one_downdate(&state.p, k, &row, state.lambda, &state.ops);
    Ok((s, p))
}

/// Conventional exponentially weighted RLS filter.
#[derive(Debug, Clone)]
pub struct FullRankState {
    pub w: CVector,
    pub p: CMatrix,
    pub lambda: f64,
    ops: OpCounter,
}

impl FullRankState {
    /// `w = 0`, `P = delta^-1 I`.
    pub fn new(m: usize, lambda: f64, delta: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::Input("filter length must be positive".into()));
        }
        check_lambda(lambda)?;
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::Input(format!("delta must be positive, got {delta}")));
        }
        Ok(Self {
            w: CVector::zeros(m),
            p: scaled_identity(m, 1.0 / delta),
            lambda,
            ops: OpCounter::new(),
        })
    }

    pub fn op_count(&self) -> u64 {
        self.ops.get()
    }

    pub fn output(&self, r: &ObservationVector) -> Result<C64> {
        check_len("observation", self.w.len(), r.len())?;
        Ok(self.w.dotc(r))
    }

    pub fn step(&mut self, r: &ObservationVector, d: C64) -> Result<StepOutput> {
        self.step_with(r, |_| d)
    }

    pub fn step_with(
        &mut self,
        r: &ObservationVector,
        desired: impl FnOnce(C64) -> C64,
    ) -> Result<StepOutput> {
        check_len("observation", self.w.len(), r.len())?;
        let x = dotc(&self.w, r, &self.ops);
        let d = desired(x);
        let xi = d - x;
        let k = kalman_gain(&self.p, r, self.lambda, &self.ops, "full-rank gain")?;
        let row = row_times(r, &self.p, &self.ops);
        self.p = scaled_rank_one_downdate(&self.p, &k, &row, self.lambda, &self.ops);
        self.w += &k * xi.conj();
        self.ops.add(k.len());
        Ok(StepOutput { x, xi })
    }
}

fn kalman_gain(
    inv: &CMatrix,
    v: &CVector,
    lambda: f64,
    ops: &OpCounter,
    context: &'static str,
) -> Result<CVector> {
    let iv = matvec(inv, v, ops);
    let denom = 1.0 + dotc(v, &iv, ops) / lambda;
    if !(denom.re.is_finite() && denom.im.is_finite()) || denom.norm() == 0.0 {
        return Err(Error::NonFinite { context });
    }
    let scale = 1.0 / (lambda * denom);
    ops.add(iv.len());
    Ok(iv * scale)
}

fn scaled_identity(n: usize, v: f64) -> CMatrix {
    CMatrix::identity(n, n) * C64::from(v)
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda <= 1.0 {
        Ok(())
    } else {
        Err(Error::Input(format!(
            "forgetting factor must lie in (0, 1], got {lambda}"
        )))
    }
}
