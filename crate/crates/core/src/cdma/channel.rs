//! Multipath space-time channels with Clarke-model time variation.

use std::f64::consts::PI;

use rand::Rng;

use crate::linalg::{CMatrix, C64};

/// Oscillators per fading path in the sum-of-sinusoids generator.
pub const OSCILLATORS: usize = 16;

/// Relative path powers in dB.
pub const DEFAULT_PATH_POWERS_DB: [f64; 3] = [0.0, -3.0, -6.0];

/// Upper end of the uniform DoA range, in radians.
pub const DOA_MAX: f64 = 2.0 * PI / 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    pub antennas: usize,
    /// Tap slots per antenna (`L_p`).
    pub taps: usize,
    /// Doppler frequency normalized to the symbol rate.
    pub doppler: f64,
    pub path_powers_db: Vec<f64>,
    /// Inclusive range of the chip spacing between consecutive paths.
    pub spacing: (usize, usize),
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            antennas: 2,
            taps: 9,
            doppler: 0.001,
            path_powers_db: DEFAULT_PATH_POWERS_DB.to_vec(),
            spacing: (1, 2),
        }
    }
}

/// Complex path gain over symbol time.
#[derive(Debug, Clone, PartialEq)]
pub enum FadingProcess {
    Static(C64),
    /// `g(i) = N^-1/2 sum_n exp(j (2 pi f_n i + phi_n))`, `f_n = f_d cos(alpha_n)`.
    SumOfSinusoids {
        freqs: Vec<f64>,
        phases: Vec<f64>,
    },
}

impl FadingProcess {
    /// Unit-power Clarke process at normalized Doppler `doppler`.
    pub fn clarke<R: Rng + ?Sized>(doppler: f64, rng: &mut R) -> Self {
        let mut freqs = Vec::with_capacity(OSCILLATORS);
        let mut phases = Vec::with_capacity(OSCILLATORS);
        for _ in 0..OSCILLATORS {
            let alpha: f64 = rng.random_range(0.0..2.0 * PI);
            freqs.push(doppler * alpha.cos());
            phases.push(rng.random_range(0.0..2.0 * PI));
        }
        Self::SumOfSinusoids { freqs, phases }
    }

    pub fn gain(&self, i: usize) -> C64 {
        match self {
            Self::Static(g) => *g,
            Self::SumOfSinusoids { freqs, phases } => {
                let t = i as f64;
                let sum: C64 = freqs
                    .iter()
                    .zip(phases)
                    .map(|(f, p)| C64::from_polar(1.0, 2.0 * PI * f * t + p))
                    .sum();
                sum / (freqs.len() as f64).sqrt()
            }
        }
    }
}

/// One user's multipath model: fixed geometry, time-varying path gains.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModel {
    pub antennas: usize,
    pub taps: usize,
    pub doppler: f64,
    /// Chip delay of each path.
    pub delays: Vec<usize>,
    /// Linear path powers, summing to one.
    pub powers: Vec<f64>,
    /// Direction of arrival of each path, radians.
    pub doas: Vec<f64>,
    pub fading: Vec<FadingProcess>,
}

/// Channel taps at one symbol time.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeChannel {
    /// `J x L_p` taps, row `j` for antenna `j`.
    pub taps: CMatrix,
    pub path_delays: Vec<usize>,
    pub path_powers_db: Vec<f64>,
    pub doas: Vec<f64>,
    pub doppler: f64,
}

impl ChannelModel {
    /// Random geometry and fading processes for one run.
    pub fn draw<R: Rng + ?Sized>(cfg: &ChannelConfig, rng: &mut R) -> Self {
        let paths = cfg.path_powers_db.len();
        let mut delays = Vec::with_capacity(paths);
        let mut delay = 0usize;
        for p in 0..paths {
            if p > 0 {
                delay += rng.random_range(cfg.spacing.0..=cfg.spacing.1);
            }
            delays.push(delay);
        }
        assert!(
            delays.last().is_none_or(|&d| d < cfg.taps),
            "delay spread exceeds the {} tap slots",
            cfg.taps
        );
        let linear: Vec<f64> = cfg
            .path_powers_db
            .iter()
            .map(|db| 10f64.powf(db / 10.0))
            .collect();
        let total: f64 = linear.iter().sum();
        let powers = linear.iter().map(|p| p / total).collect();
        let doas = (0..paths).map(|_| rng.random_range(0.0..DOA_MAX)).collect();
        let fading = (0..paths)
            .map(|_| FadingProcess::clarke(cfg.doppler, rng))
            .collect();
        Self {
            antennas: cfg.antennas,
            taps: cfg.taps,
            doppler: cfg.doppler,
            delays,
            powers,
            doas,
            fading,
        }
    }

    /// Taps at symbol `i`; path `m` lands on slot `delays[m]` of every
    /// antenna with the half-wavelength array phase `exp(-j pi j sin(phi))`.
    pub fn at(&self, i: usize) -> SpaceTimeChannel {
        let mut taps = CMatrix::zeros(self.antennas, self.taps);
        for (m, fading) in self.fading.iter().enumerate() {
            let g = fading.gain(i) * self.powers[m].sqrt();
            let sin_phi = self.doas[m].sin();
            for j in 0..self.antennas {
                let steer = C64::from_polar(1.0, -PI * j as f64 * sin_phi);
                taps[(j, self.delays[m])] += g * steer;
            }
        }
        SpaceTimeChannel {
            taps,
            path_delays: self.delays.clone(),
            path_powers_db: self.powers.iter().map(|p| 10.0 * p.log10()).collect(),
            doas: self.doas.clone(),
            doppler: self.doppler,
        }
    }
}

/// Draws a channel and realizes it at symbol `i`.
pub fn gen_channel<R: Rng + ?Sized>(
    cfg: &ChannelConfig,
    rng: &mut R,
    i: usize,
) -> SpaceTimeChannel {
    ChannelModel::draw(cfg, rng).at(i)
}
