//! Seeded Monte-Carlo orchestration.
//!
//! Run `r` uses scenario seed `config.seed + r`. Runs execute in parallel but
//! are reduced in run order, so results do not depend on the thread count.

use rayon::prelude::*;

use super::config::{ReceiverKind, SimConfig};
use crate::cdma::{frames, run_on_frames, Frame, Receiver, TrialOutcome, TrialScenario};
use crate::error::{Error, Result};
use crate::rls::{FullRankState, JioState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    RankSweep,
    Convergence,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::RankSweep => "rank_sweep",
            Self::Convergence => "convergence",
        }
    }
}

/// One aggregated output line.
///
/// For a rank sweep `index` is the trial length and the full-rank row carries
/// `D = M`; for a convergence run `index` is the symbol number (1-based).
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: Experiment,
    pub receiver: ReceiverKind,
    pub rank: usize,
    pub index: usize,
    pub ber: f64,
    /// Mean linear SINR over runs, in dB.
    pub sinr_db: f64,
    pub runs: usize,
    pub seed: u64,
}

/// A receiver to instantiate per run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Arm {
    kind: ReceiverKind,
    rank: usize,
}

fn arms(cfg: &SimConfig) -> Vec<Arm> {
    let m = cfg.observation_len();
    let mut out = Vec::new();
    for &kind in &cfg.receivers {
        match kind {
            ReceiverKind::Jio => out.extend(cfg.ranks.iter().map(|&rank| Arm { kind, rank })),
            ReceiverKind::FullRank => out.push(Arm { kind, rank: m }),
        }
    }
    out
}

fn build(cfg: &SimConfig, arm: Arm) -> Result<Box<dyn Receiver>> {
    let m = cfg.observation_len();
    Ok(match arm.kind {
        ReceiverKind::Jio => Box::new(JioState::new(m, arm.rank, cfg.lambda, cfg.deltas)?),
        ReceiverKind::FullRank => Box::new(FullRankState::new(m, cfg.lambda, cfg.deltas.delta)?),
    })
}

/// Runs every arm on the realization of run `run`.
fn run_once(cfg: &SimConfig, arms: &[Arm], run: usize) -> Result<Vec<TrialOutcome>> {
    let seed = cfg.seed.wrapping_add(run as u64);
    let scenario = TrialScenario::generate(&cfg.scenario(), seed);
    let shared: Vec<Frame> = frames(&scenario, cfg.total_symbols);
    arms.iter()
        .map(|&arm| {
            let mut rx = build(cfg, arm)?;
            run_on_frames(&scenario, &shared, rx.as_mut(), cfg.train_symbols)
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| Error::Trial {
            run,
            seed,
            source: Box::new(e),
        })
}

/// Per-run outcomes for every arm, in run order.
fn monte_carlo(cfg: &SimConfig, arms: &[Arm]) -> Result<Vec<Vec<TrialOutcome>>> {
    cfg.validate()?;
    (0..cfg.runs)
        .into_par_iter()
        .map(|run| run_once(cfg, arms, run))
        .collect()
}

pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Mean post-training BER and SINR per receiver and rank.
pub fn run_rank_sweep(cfg: &SimConfig) -> Result<Vec<ResultRow>> {
    let arms = arms(cfg);
    let outcomes = monte_carlo(cfg, &arms)?;
    let runs = outcomes.len() as f64;
    let mut rows: Vec<ResultRow> = arms
        .iter()
        .enumerate()
        .map(|(a, arm)| {
            let ber = outcomes
                .iter()
                .map(|o| o[a].post_training_ber())
                .sum::<f64>()
                / runs;
            let sinr = outcomes
                .iter()
                .map(|o| o[a].post_training_sinr())
                .sum::<f64>()
                / runs;
            ResultRow {
                experiment: Experiment::RankSweep,
                receiver: arm.kind,
                rank: arm.rank,
                index: cfg.total_symbols,
                ber,
                sinr_db: to_db(sinr),
                runs: cfg.runs,
                seed: cfg.seed,
            }
        })
        .collect();
    rows.sort_by_key(|r| r.rank);
    Ok(rows)
}

/// Per-symbol BER and SINR traces at the single configured rank.
pub fn run_convergence(cfg: &SimConfig) -> Result<Vec<ResultRow>> {
    let &[_] = cfg.ranks.as_slice() else {
        return Err(Error::Input(format!(
            "convergence mode needs a single rank, got D={:?}",
            cfg.ranks
        )));
    };
    let arms = arms(cfg);
    let outcomes = monte_carlo(cfg, &arms)?;
    let runs = outcomes.len() as f64;
    let mut rows = Vec::with_capacity(arms.len() * cfg.total_symbols);
    for (a, arm) in arms.iter().enumerate() {
        for i in 0..cfg.total_symbols {
            let errors = outcomes.iter().filter(|o| o[a].errors[i]).count();
            let sinr = outcomes.iter().map(|o| o[a].sinr[i]).sum::<f64>() / runs;
            rows.push(ResultRow {
                experiment: Experiment::Convergence,
                receiver: arm.kind,
                rank: arm.rank,
                index: i + 1,
                ber: errors as f64 / runs,
                sinr_db: to_db(sinr),
                runs: cfg.runs,
                seed: cfg.seed,
            });
        }
    }
    Ok(rows)
}

/// Per-run mean post-training BER for each receiver, at the single
/// configured rank. Row `r` holds run `r`, columns follow `cfg.receivers`.
pub fn paired_post_training_ber(cfg: &SimConfig) -> Result<Vec<Vec<f64>>> {
    let arms = arms(cfg);
    if arms.len() != cfg.receivers.len() {
        return Err(Error::Input(format!(
            "paired comparison needs a single rank, got D={:?}",
            cfg.ranks
        )));
    }
    Ok(monte_carlo(cfg, &arms)?
        .iter()
        .map(|o| o.iter().map(TrialOutcome::post_training_ber).collect())
        .collect())
}
