//! Received-signal generation for one Monte-Carlo run.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::channel::{ChannelConfig, ChannelModel};
use super::signature::{
    build_convolution_matrices, gen_signatures, ConvolutionMatrices, SymbolSlot,
};
use crate::linalg::{CVector, C64};

const NOISE_STREAM_SALT: u64 = 0x6e6f_6973_6500_0001;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Spreading gain `N`.
    pub spreading_gain: usize,
    pub users: usize,
    pub channel: ChannelConfig,
    /// Desired-user SNR `A_1^2 / sigma^2` in dB; `+inf` gives a noiseless run.
    pub snr_db: f64,
    /// Standard deviation of the log-normal user powers, dB.
    pub power_std_db: f64,
    /// Number of symbols `b[1..=symbols]` to be detected.
    pub symbols: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            spreading_gain: 16,
            users: 6,
            channel: ChannelConfig::default(),
            snr_db: 12.0,
            power_std_db: 1.5,
            symbols: 1500,
        }
    }
}

impl ScenarioConfig {
    /// Per-antenna window `M = N + L_p - 1`.
    pub fn window(&self) -> usize {
        self.spreading_gain + self.channel.taps - 1
    }

    /// Observation length `J M`.
    pub fn observation_len(&self) -> usize {
        self.channel.antennas * self.window()
    }
}

/// Contribution `A_k b_k[i+o] p` of one user and one symbol slot.
#[derive(Debug, Clone)]
pub struct SignalComponent {
    pub user: usize,
    pub slot: SymbolSlot,
    pub amplitude: f64,
    pub symbol: f64,
    /// Spatial signature `F H`, length `J M`.
    pub signature: CVector,
}

impl SignalComponent {
    pub fn is_desired(&self) -> bool {
        self.user == 0 && self.slot == SymbolSlot::Current
    }
}

/// Received vector at one symbol time together with its ground truth.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub index: usize,
    pub r: CVector,
    /// Transmitted desired-user symbol `b_1[i]`.
    pub symbol: f64,
}

/// Everything drawn for one run; user 0 is the desired user.
#[derive(Debug, Clone)]
pub struct TrialScenario {
    pub config: ScenarioConfig,
    pub seed: u64,
    pub convolution: Vec<ConvolutionMatrices>,
    pub channels: Vec<ChannelModel>,
    pub amplitudes: Vec<f64>,
    /// `symbols[k][i]` for `i` in `0..=config.symbols + 1`.
    pub symbols: Vec<Vec<f64>>,
    pub noise_var: f64,
}

impl TrialScenario {
    pub fn generate(config: &ScenarioConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let signatures = gen_signatures(config.spreading_gain, config.users, &mut rng);
        let convolution = signatures
            .iter()
            .map(|s| build_convolution_matrices(s, config.channel.taps, config.channel.antennas))
            .collect();
        let channels = (0..config.users)
            .map(|_| ChannelModel::draw(&config.channel, &mut rng))
            .collect();
        let gain_db = Normal::new(0.0, config.power_std_db.max(0.0)).expect("finite std");
        let amplitudes: Vec<f64> = (0..config.users)
            .map(|_| 10f64.powf(gain_db.sample(&mut rng) / 20.0))
            .collect();
        let symbols = (0..config.users)
            .map(|_| {
                (0..config.symbols + 2)
                    .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
                    .collect()
            })
            .collect();
        let noise_var = amplitudes[0].powi(2) / 10f64.powf(config.snr_db / 10.0);
        Self {
            config: config.clone(),
            seed,
            convolution,
            channels,
            amplitudes,
            symbols,
            noise_var,
        }
    }

    /// Noise-free signal components present in `r[i]`.
    pub fn components(&self, i: usize) -> Vec<SignalComponent> {
        let mut out = Vec::with_capacity(3 * self.config.users);
        for k in 0..self.config.users {
            for (slot, at) in [
                (SymbolSlot::Previous, i - 1),
                (SymbolSlot::Current, i),
                (SymbolSlot::Next, i + 1),
            ] {
                let taps = self.channels[k].at(at).taps;
                out.push(SignalComponent {
                    user: k,
                    slot,
                    amplitude: self.amplitudes[k],
                    symbol: self.symbols[k][at],
                    signature: self.convolution[k].apply(slot, &taps),
                });
            }
        }
        out
    }

    /// Complex Gaussian noise with `E[n n^H] = sigma^2 I`, a pure function
    /// of the seed and `i`.
    pub fn noise(&self, i: usize) -> CVector {
        let len = self.config.observation_len();
        if self.noise_var == 0.0 {
            return CVector::zeros(len);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ NOISE_STREAM_SALT);
        rng.set_stream(i as u64);
        let sd = (self.noise_var / 2.0).sqrt();
        CVector::from_fn(len, |_, _| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            C64::new(re * sd, im * sd)
        })
    }

    /// `r[i] = sum_k A_k (b_k[i-1] pbar_k + b_k[i] p_k + b_k[i+1] ptilde_k) + n[i]`.
    pub fn received_vector(&self, i: usize) -> Snapshot {
        self.snapshot_from(i, &self.components(i))
    }

    pub fn snapshot_from(&self, i: usize, components: &[SignalComponent]) -> Snapshot {
        let mut r = self.noise(i);
        for c in components {
            r.axpy(
                C64::from(c.amplitude * c.symbol),
                &c.signature,
                C64::from(1.0),
            );
        }
        Snapshot {
            index: i,
            r,
            symbol: self.symbols[0][i],
        }
    }

    /// Output SINR of the linear receiver `w` at symbol `i` given the
    /// components of `r[i]`. Zero when `w` passes none of the desired signal.
    pub fn sinr(&self, w: &CVector, components: &[SignalComponent]) -> f64 {
        let mut signal = 0.0;
        let mut interference = self.noise_var * w.norm_squared();
        for c in components {
            let p = c.amplitude.powi(2) * w.dotc(&c.signature).norm_sqr();
            if c.is_desired() {
                signal += p;
            } else {
                interference += p;
            }
        }
        if signal == 0.0 {
            return 0.0;
        }
        signal / interference
    }
}
