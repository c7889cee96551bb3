//! `key=value` experiment definitions.
//!
//! One pair per line, `#` starts a comment, blank lines are ignored. Every
//! key is optional; see [`SimConfig::default`] for the values used when a key
//! is absent. Ranks may be a single value (`D=4`), a list (`D=1,2,4`) or an
//! inclusive range (`D=1..8`). `snr_db=inf` disables noise.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::cdma::{ChannelConfig, ScenarioConfig};
use crate::error::{Error, Result};
use crate::rls::Deltas;

/// Largest rank accepted in a sweep list, a guard against runaway ranges.
const MAX_LIST_LEN: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReceiverKind {
    Jio,
    FullRank,
}

impl ReceiverKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Jio => "jio",
            Self::FullRank => "full_rank",
        }
    }
}

impl FromStr for ReceiverKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "jio" => Ok(Self::Jio),
            "full_rank" => Ok(Self::FullRank),
            other => Err(format!(
                "unknown receiver `{other}` (expected jio or full_rank)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub spreading_gain: usize,
    pub users: usize,
    pub antennas: usize,
    pub taps: usize,
    pub snr_db: f64,
    pub lambda: f64,
    pub ranks: Vec<usize>,
    pub train_symbols: usize,
    pub total_symbols: usize,
    pub runs: usize,
    pub doppler: f64,
    pub deltas: Deltas,
    pub seed: u64,
    pub receivers: Vec<ReceiverKind>,
    pub power_std_db: f64,
}

/// Desk-scale defaults.
impl Default for SimConfig {
    fn default() -> Self {
        Self {
            spreading_gain: 16,
            users: 6,
            antennas: 2,
            taps: 9,
            snr_db: 12.0,
            lambda: 0.998,
            ranks: vec![4],
            train_symbols: 200,
            total_symbols: 1500,
            runs: 100,
            doppler: 0.001,
            deltas: Deltas::default(),
            seed: 1,
            receivers: vec![ReceiverKind::Jio, ReceiverKind::FullRank],
            power_std_db: 1.5,
        }
    }
}

/// Keys in echo order.
pub const KEYS: [&str; 17] = [
    "N",
    "K",
    "J",
    "Lp",
    "snr_db",
    "lambda",
    "D",
    "train_symbols",
    "total_symbols",
    "runs",
    "doppler",
    "delta",
    "delta_bar",
    "delta_w",
    "seed",
    "receivers",
    "power_std_db",
];

impl SimConfig {
    /// Observation length `J (N + L_p - 1)`.
    pub fn observation_len(&self) -> usize {
        self.antennas * (self.spreading_gain + self.taps - 1)
    }

    pub fn scenario(&self) -> ScenarioConfig {
        ScenarioConfig {
            spreading_gain: self.spreading_gain,
            users: self.users,
            channel: ChannelConfig {
                antennas: self.antennas,
                taps: self.taps,
                doppler: self.doppler,
                ..ChannelConfig::default()
            },
            snr_db: self.snr_db,
            power_std_db: self.power_std_db,
            symbols: self.total_symbols,
        }
    }

    /// Canonical `key=value` lines; [`parse_config`] reads them back to an
    /// equal config.
    pub fn echo_lines(&self) -> Vec<String> {
        KEYS.iter()
            .map(|k| format!("{k}={}", self.value_of(k)))
            .collect()
    }

    fn value_of(&self, key: &str) -> String {
        match key {
            "N" => self.spreading_gain.to_string(),
            "K" => self.users.to_string(),
            "J" => self.antennas.to_string(),
            "Lp" => self.taps.to_string(),
            "snr_db" => self.snr_db.to_string(),
            "lambda" => self.lambda.to_string(),
            "D" => join(self.ranks.iter()),
            "train_symbols" => self.train_symbols.to_string(),
            "total_symbols" => self.total_symbols.to_string(),
            "runs" => self.runs.to_string(),
            "doppler" => self.doppler.to_string(),
            "delta" => self.deltas.delta.to_string(),
            "delta_bar" => self.deltas.delta_bar.to_string(),
            "delta_w" => self.deltas.delta_w.to_string(),
            "seed" => self.seed.to_string(),
            "receivers" => join(self.receivers.iter().map(|r| r.name())),
            "power_std_db" => self.power_std_db.to_string(),
            _ => unreachable!("unknown key {key}"),
        }
    }

    /// Checks every range and cross-field constraint. Errors carry the line
    /// of the offending key, or line 0 when the value is a default.
    pub fn validate(&self) -> Result<()> {
        self.validate_at(&HashMap::new())
    }

    fn validate_at(&self, lines: &HashMap<&'static str, usize>) -> Result<()> {
        let fail = |key: &'static str, message: String| Error::Parse {
            line: lines.get(key).copied().unwrap_or(0),
            message: format!("{key}: {message}"),
        };
        for (key, v) in [
            ("N", self.spreading_gain),
            ("K", self.users),
            ("J", self.antennas),
            ("train_symbols", self.train_symbols),
            ("total_symbols", self.total_symbols),
            ("runs", self.runs),
        ] {
            if v == 0 {
                return Err(fail(key, "must be positive".into()));
            }
        }
        let spread = 2 * (ChannelConfig::default().path_powers_db.len() - 1);
        if self.taps <= spread {
            return Err(fail(
                "Lp",
                format!(
                    "must exceed the maximum delay spread of {spread} chips, got {}",
                    self.taps
                ),
            ));
        }
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(fail(
                "snr_db",
                format!("must be a number or inf, got {}", self.snr_db),
            ));
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err(fail(
                "lambda",
                format!("must lie in (0, 1], got {}", self.lambda),
            ));
        }
        let m = self.observation_len();
        if self.ranks.is_empty() {
            return Err(fail("D", "needs at least one rank".into()));
        }
        if let Some(&d) = self.ranks.iter().find(|&&d| d == 0 || d > m) {
            return Err(fail("D", format!("rank {d} outside 1..={m}")));
        }
        if self.train_symbols >= self.total_symbols {
            return Err(fail(
                "train_symbols",
                format!(
                    "must be below total_symbols = {}, got {}",
                    self.total_symbols, self.train_symbols
                ),
            ));
        }
        if !(self.doppler >= 0.0 && self.doppler < 0.5) {
            return Err(fail(
                "doppler",
                format!("must lie in [0, 0.5), got {}", self.doppler),
            ));
        }
        for (key, v) in [
            ("delta", self.deltas.delta),
            ("delta_bar", self.deltas.delta_bar),
            ("delta_w", self.deltas.delta_w),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(fail(key, format!("must be positive and finite, got {v}")));
            }
        }
        if self.receivers.is_empty() {
            return Err(fail("receivers", "needs at least one receiver".into()));
        }
        if !(self.power_std_db >= 0.0 && self.power_std_db.is_finite()) {
            return Err(fail(
                "power_std_db",
                format!("must be finite and non-negative, got {}", self.power_std_db),
            ));
        }
        Ok(())
    }
}

fn join<T: ToString>(items: impl Iterator<Item = T>) -> String {
    let mut out = String::new();
    for (n, it) in items.enumerate() {
        if n > 0 {
            out.push(',');
        }
        let _ = write!(out, "{}", it.to_string());
    }
    out
}

/// Parses and validates an experiment definition.
pub fn parse_config(text: &str) -> Result<SimConfig> {
    let mut cfg = SimConfig::default();
    let mut seen: HashMap<&'static str, usize> = HashMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse { line, message };
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(format!("expected key=value, got `{content}`")))?;
        let (key, value) = (key.trim(), value.trim());
        let key: &'static str = KEYS
            .iter()
            .find(|k| **k == key)
            .ok_or_else(|| err(format!("unknown key `{key}`")))?;
        if let Some(first) = seen.insert(key, line) {
            return Err(err(format!("{key} already set on line {first}")));
        }
        let bad = |e: String| err(format!("{key}: {e}"));
        match key {
            "N" => cfg.spreading_gain = number(value).map_err(bad)?,
            "K" => cfg.users = number(value).map_err(bad)?,
            "J" => cfg.antennas = number(value).map_err(bad)?,
            "Lp" => cfg.taps = number(value).map_err(bad)?,
            "snr_db" => cfg.snr_db = number(value).map_err(bad)?,
            "lambda" => cfg.lambda = number(value).map_err(bad)?,
            "D" => cfg.ranks = ranks(value).map_err(bad)?,
            "train_symbols" => cfg.train_symbols = number(value).map_err(bad)?,
            "total_symbols" => cfg.total_symbols = number(value).map_err(bad)?,
            "runs" => cfg.runs = number(value).map_err(bad)?,
            "doppler" => cfg.doppler = number(value).map_err(bad)?,
            "delta" => cfg.deltas.delta = number(value).map_err(bad)?,
            "delta_bar" => cfg.deltas.delta_bar = number(value).map_err(bad)?,
            "delta_w" => cfg.deltas.delta_w = number(value).map_err(bad)?,
            "seed" => cfg.seed = number(value).map_err(bad)?,
            "receivers" => cfg.receivers = receivers(value).map_err(bad)?,
            "power_std_db" => cfg.power_std_db = number(value).map_err(bad)?,
            _ => unreachable!(),
        }
    }
    cfg.validate_at(&seen)?;
    Ok(cfg)
}

/// Recovers a config from the `#` comment lines of a results file.
pub fn parse_echo(text: &str) -> Result<SimConfig> {
    let body: Vec<&str> = text
        .lines()
        .filter_map(|l| l.strip_prefix('#'))
        .map(str::trim)
        .collect();
    parse_config(&body.join("\n"))
}

fn number<T: FromStr>(value: &str) -> std::result::Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| format!("cannot parse `{value}`: {e}"))
}

fn ranks(value: &str) -> std::result::Result<Vec<usize>, String> {
    if let Some((lo, hi)) = value.split_once("..") {
        let (lo, hi): (usize, usize) = (number(lo.trim())?, number(hi.trim())?);
        if lo > hi {
            return Err(format!("empty range {lo}..{hi}"));
        }
        if hi - lo >= MAX_LIST_LEN {
            return Err(format!("range {lo}..{hi} is too long"));
        }
        return Ok((lo..=hi).collect());
    }
    let list = value
        .split(',')
        .map(|v| number(v.trim()))
        .collect::<std::result::Result<Vec<usize>, _>>()?;
    let mut sorted = list.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != list.len() {
        return Err("duplicate rank".into());
    }
    Ok(list)
}

fn receivers(value: &str) -> std::result::Result<Vec<ReceiverKind>, String> {
    let list = value
        .split(',')
        .map(|v| v.trim().parse())
        .collect::<std::result::Result<Vec<ReceiverKind>, _>>()?;
    for (n, r) in list.iter().enumerate() {
        if list[..n].contains(r) {
            return Err(format!("receiver {} listed twice", r.name()));
        }
    }
    Ok(list)
}
