//! Training / decision-directed BER trials.

use super::scenario::{SignalComponent, Snapshot, TrialScenario};
use crate::error::Result;
use crate::linalg::{CVector, C64};
use crate::rls::{FullRankState, JioState, StepOutput};

/// Anything that can be run symbol by symbol as a linear receiver.
pub trait Receiver {
    fn name(&self) -> &'static str;

    /// Adapts on `r`, taking the desired value from `desired(x)` where `x`
    /// is the a-priori estimate.
    fn step_with(&mut self, r: &CVector, desired: &mut dyn FnMut(C64) -> C64)
        -> Result<StepOutput>;

    /// Equivalent full-rank weight vector `w` with estimate `w^H r`.
    fn effective_weights(&self) -> CVector;
}

impl Receiver for JioState {
    fn name(&self) -> &'static str {
        "jio"
    }

    fn step_with(
        &mut self,
        r: &CVector,
        desired: &mut dyn FnMut(C64) -> C64,
    ) -> Result<StepOutput> {
        JioState::step_with(self, r, desired)
    }

    fn effective_weights(&self) -> CVector {
        JioState::effective_weights(self)
    }
}

impl Receiver for FullRankState {
    fn name(&self) -> &'static str {
        "full_rank"
    }

    fn step_with(
        &mut self,
        r: &CVector,
        desired: &mut dyn FnMut(C64) -> C64,
    ) -> Result<StepOutput> {
        FullRankState::step_with(self, r, desired)
    }

    fn effective_weights(&self) -> CVector {
        self.w.clone()
    }
}

/// BPSK decision on the real part; ties go to `+1`.
pub fn decide(x: C64) -> f64 {
    if x.re >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// One symbol of a trial with the data needed to evaluate SINR.
#[derive(Debug, Clone)]
pub struct Frame {
    pub snapshot: Snapshot,
    pub components: Vec<SignalComponent>,
}

/// Frames for symbols `1..=total_len`.
pub fn frames(scenario: &TrialScenario, total_len: usize) -> Vec<Frame> {
    (1..=total_len)
        .map(|i| {
            let components = scenario.components(i);
            let snapshot = scenario.snapshot_from(i, &components);
            Frame {
                snapshot,
                components,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    /// `errors[i - 1]` flags a wrong decision on symbol `i`.
    pub errors: Vec<bool>,
    /// Output SINR (linear) of the a-priori filter at each symbol.
    pub sinr: Vec<f64>,
    pub train_len: usize,
}

impl TrialOutcome {
    pub fn post_training_errors(&self) -> usize {
        self.errors[self.train_len..].iter().filter(|&&e| e).count()
    }

    /// Error rate over the decision-directed symbols.
    pub fn post_training_ber(&self) -> f64 {
        let n = self.errors.len() - self.train_len;
        self.post_training_errors() as f64 / n as f64
    }

    /// Mean linear SINR over the decision-directed symbols.
    pub fn post_training_sinr(&self) -> f64 {
        let tail = &self.sinr[self.train_len..];
        tail.iter().sum::<f64>() / tail.len() as f64
    }
}

/// Trains on `b_1[i]` for `i <= train_len`, then feeds back its own
/// decisions up to `total_len`.
pub fn run_ber_trial(
    scenario: &TrialScenario,
    receiver: &mut dyn Receiver,
    train_len: usize,
    total_len: usize,
) -> Result<TrialOutcome> {
    run_on_frames(scenario, &frames(scenario, total_len), receiver, train_len)
}

/// [`run_ber_trial`] over precomputed frames, so several receivers can
/// share one realization.
pub fn run_on_frames(
    scenario: &TrialScenario,
    frames: &[Frame],
    receiver: &mut dyn Receiver,
    train_len: usize,
) -> Result<TrialOutcome> {
    assert!(
        train_len < frames.len(),
        "training length {train_len} must be below the trial length {}",
        frames.len()
    );
    let mut errors = Vec::with_capacity(frames.len());
    let mut sinr = Vec::with_capacity(frames.len());
    for (n, frame) in frames.iter().enumerate() {
        let snap = &frame.snapshot;
        sinr.push(scenario.sinr(&receiver.effective_weights(), &frame.components));
        let training = n < train_len;
        let mut decision = 0.0;
        receiver.step_with(&snap.r, &mut |x| {
            decision = decide(x);
            if training {
                C64::from(snap.symbol)
            } else {
                C64::from(decision)
            }
        })?;
        errors.push(decision != snap.symbol);
    }
    Ok(TrialOutcome {
        errors,
        sinr,
        train_len,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cdma::channel::ChannelConfig;
    use crate::cdma::scenario::ScenarioConfig;
    use crate::rls::Deltas;

    struct Silent(usize);

    impl Receiver for Silent {
        fn name(&self) -> &'static str {
            "silent"
        }
        fn step_with(
            &mut self,
            _r: &CVector,
            desired: &mut dyn FnMut(C64) -> C64,
        ) -> Result<StepOutput> {
            let d = desired(C64::new(0.0, 0.0));
            Ok(StepOutput {
                x: C64::new(0.0, 0.0),
                xi: d,
            })
        }
        fn effective_weights(&self) -> CVector {
            CVector::zeros(self.0)
        }
    }

    fn noiseless_single_user() -> ScenarioConfig {
        ScenarioConfig {
            users: 1,
            snr_db: f64::INFINITY,
            channel: ChannelConfig {
                doppler: 0.0,
                ..ChannelConfig::default()
            },
            symbols: 400,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn decision_ties_go_positive() {
        assert_eq!(decide(C64::new(0.0, 0.0)), 1.0);
        assert_eq!(decide(C64::new(-1e-300, 5.0)), -1.0);
    }

    #[test]
    fn full_rank_recovers_clean_single_user() {
        let cfg = noiseless_single_user();
        let sc = TrialScenario::generate(&cfg, 21);
        let mut rx = FullRankState::new(cfg.observation_len(), 0.998, 0.01).unwrap();
        let out = run_ber_trial(&sc, &mut rx, 200, 400).unwrap();
        assert_eq!(out.post_training_errors(), 0);
    }

    #[test]
    fn silent_receiver_errs_on_negative_symbols() {
        let cfg = ScenarioConfig {
            symbols: 4000,
            ..ScenarioConfig::default()
        };
        let sc = TrialScenario::generate(&cfg, 8);
        let out = run_ber_trial(&sc, &mut Silent(cfg.observation_len()), 200, 4000).unwrap();
        let negatives = sc.symbols[0][201..=4000]
            .iter()
            .filter(|&&b| b < 0.0)
            .count();
        assert_eq!(out.post_training_errors(), negatives);
        assert!((out.post_training_ber() - 0.5).abs() < 0.05);
    }

    #[test]
    fn standard_protocol_runs() {
        let cfg = ScenarioConfig {
            symbols: 1500,
            ..ScenarioConfig::default()
        };
        let sc = TrialScenario::generate(&cfg, 2);
        let mut rx = JioState::new(cfg.observation_len(), 4, 0.998, Deltas::default()).unwrap();
        let out = run_ber_trial(&sc, &mut rx, 200, 1500).unwrap();
        assert_eq!(out.errors.len(), 1500);
        assert!(rx.is_finite());
        assert!(rx.hermitian_drift() < 1e-6);
        assert!(out.post_training_ber() < 0.5);
    }
}
