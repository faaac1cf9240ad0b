//! Seeded Monte Carlo engine.
//!
//! Every trial owns its randomness. The per-trial seed is
//! `derive_seed(master, snr_index, trial)`; the channel is drawn from ChaCha8
//! stream 1 of that seed and the design randomness (initial beams,
//! measurement matrices, training noise) from stream 2. Both hybrid modes
//! reuse the same design stream, so they start from the same beams.

mod config;
mod output;

pub use config::{apply_overrides, Mode, ReverseReg, ScenarioConfig, CONFIG_KEYS};
pub use output::{emit_csv, parse_csv, write_csv, CSV_HEADER};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::beamdesign::{iterate_design, CsiMode, DesignConfig, DesignContext, DesignOutcome, EstimationParams};
use crate::channel::{frequency_channel, sample_paths, ChannelDims, ChannelRealization};
use crate::codebook::{build_codebook, build_dictionary, AngleDictionary, BeamCodebook};
use crate::error::{Error, Result};
use crate::metrics::{full_digital_bound, spectral_efficiency};

const CHANNEL_STREAM: u64 = 1;
const DESIGN_STREAM: u64 = 2;

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `splitmix64(splitmix64(splitmix64(master) ^ snr_index) ^ trial)`.
pub fn derive_seed(master: u64, snr_index: usize, trial: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ snr_index as u64) ^ trial as u64)
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Clone)]
pub struct ModeOutcome {
    pub mode: Mode,
    pub rate: f64,
    /// Present for hybrid modes.
    pub design: Option<DesignOutcome>,
}

#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub snr_db: f64,
    pub snr_index: usize,
    pub trial: usize,
    pub seed: u64,
    /// In the order of `config.mode`.
    pub modes: Vec<ModeOutcome>,
}

impl TrialOutcome {
    pub fn rate(&self, mode: Mode) -> Option<f64> {
        self.modes.iter().find(|m| m.mode == mode).map(|m| m.rate)
    }
}

/// One `(snr, mode)` cell of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub snr_db: f64,
    pub mode: Mode,
    pub mean_rate: f64,
    /// Sample standard deviation over `sqrt(trials_used)`; 0 when only one trial ran.
    pub std_err: f64,
    pub trials_used: usize,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub records: Vec<SweepRecord>,
    pub config: ScenarioConfig,
    pub seed: u64,
    pub version: &'static str,
}

impl SweepResult {
    /// False when `std_err` is the single-trial placeholder.
    pub fn std_err_defined(&self) -> bool {
        self.records.iter().all(|r| r.trials_used > 1)
    }

    pub fn record(&self, snr_db: f64, mode: Mode) -> Option<&SweepRecord> {
        self.records.iter().find(|r| r.snr_db == snr_db && r.mode == mode)
    }
}

/// A validated config plus the codebooks and dictionaries it implies.
#[derive(Debug, Clone)]
pub struct Scenario {
    config: ScenarioConfig,
    tx_codebook: BeamCodebook,
    rx_codebook: BeamCodebook,
    tx_dictionary: AngleDictionary,
    rx_dictionary: AngleDictionary,
}

impl Scenario {
    pub fn new(config: ScenarioConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            tx_codebook: build_codebook(config.n_t, config.codebook_size)?,
            rx_codebook: build_codebook(config.n_r, config.codebook_size)?,
            tx_dictionary: build_dictionary(config.n_t, config.dictionary_resolution)?,
            rx_dictionary: build_dictionary(config.n_r, config.dictionary_resolution)?,
            config,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn context(&self) -> DesignContext<'_> {
        DesignContext {
            tx_codebook: &self.tx_codebook,
            rx_codebook: &self.rx_codebook,
            tx_dictionary: &self.tx_dictionary,
            rx_dictionary: &self.rx_dictionary,
        }
    }

    /// Transmit power for a data SNR, with `SNR = P / noise_var`.
    pub fn power(&self, snr_db: f64) -> f64 {
        db_to_linear(snr_db) * self.config.noise_var
    }

    pub fn channel_dims(&self) -> ChannelDims {
        ChannelDims {
            num_subcarriers: self.config.n,
            num_rx: self.config.n_r,
            num_tx: self.config.n_t,
            sample_period: self.config.sample_period,
            rolloff: self.config.rolloff,
        }
    }

    /// The channel realization of `(snr_index, trial)`.
    pub fn sample_channel(&self, snr_index: usize, trial: usize) -> Result<ChannelRealization> {
        let mut rng = stream(derive_seed(self.config.seed, snr_index, trial), CHANNEL_STREAM);
        let c = &self.config;
        let paths = sample_paths(&mut rng, c.l, c.n_cp, c.sample_period)?;
        frequency_channel(&paths, self.channel_dims())
    }

    /// Design settings for a hybrid mode at a data SNR.
    ///
    /// Training noise is expressed per entry of `H[k] f`: the training power
    /// is spread over `N_t` (forward) or `N_r` (reverse) antennas, so the
    /// variances are `noise_var N_t / P_train` and `noise_var N_r / P_train`.
    /// The MMSE regularizers equal these variances.
    pub fn design_config(&self, mode: Mode, snr_db: f64) -> Result<DesignConfig> {
        let c = &self.config;
        let p_train = self.power(c.training_snr_db.unwrap_or(snr_db));
        let var_fwd = c.noise_var * c.n_t as f64 / p_train;
        let var_rev = c.noise_var * c.n_r as f64 / p_train;
        let csi = match mode {
            Mode::PerfectCsi => CsiMode::Perfect,
            Mode::CsEstimated => CsiMode::Estimated(EstimationParams {
                m_r: c.measurements_forward()?,
                m_t: c.measurements_reverse()?,
                recovery: c.recovery,
                max_sparsity: c.sparsity(),
                residual_tol: c.residual_tol,
                noise_std_forward: var_fwd.sqrt(),
                noise_std_reverse: var_rev.sqrt(),
            }),
            Mode::FullDigital => return Err(Error::Config("full_digital has no hybrid design".into())),
        };
        Ok(DesignConfig {
            n_rf: c.n_rf,
            n_s: c.n_s,
            max_iterations: c.max_iterations,
            csi,
            reg_forward: var_fwd,
            reg_reverse: match c.reverse_reg {
                ReverseReg::NoiseVar => var_rev,
                ReverseReg::Unit => 1.0,
            },
        })
    }

    /// Runs the hybrid design of `mode` for trial `(snr_index, trial)` on `channel`.
    pub fn design(
        &self,
        channel: &ChannelRealization,
        mode: Mode,
        snr_index: usize,
        trial: usize,
    ) -> Result<DesignOutcome> {
        let snr_db = self.snr_db(snr_index)?;
        let config = self.design_config(mode, snr_db)?;
        let mut rng = stream(derive_seed(self.config.seed, snr_index, trial), DESIGN_STREAM);
        iterate_design(channel, self.context(), &config, &mut rng)
    }

    fn snr_db(&self, snr_index: usize) -> Result<f64> {
        self.config.snr_grid_db.get(snr_index).copied().ok_or_else(|| {
            Error::Config(format!(
                "SNR index {snr_index} outside a grid of {} points",
                self.config.snr_grid_db.len()
            ))
        })
    }

    /// One channel draw evaluated under every configured mode.
    pub fn run_trial(&self, snr_index: usize, trial: usize) -> Result<TrialOutcome> {
        let snr_db = self.snr_db(snr_index)?;
        let wrap = |e: Error| Error::Trial {
            snr_db,
            trial,
            source: Box::new(e),
        };
        let channel = self.sample_channel(snr_index, trial).map_err(wrap)?;
        let power = self.power(snr_db);
        let modes = self
            .config
            .mode
            .iter()
            .map(|&mode| {
                if mode == Mode::FullDigital {
                    let r = full_digital_bound(&channel.freq_matrices, power, self.config.noise_var, self.config.n_s)?;
                    return Ok(ModeOutcome {
                        mode,
                        rate: r.mean,
                        design: None,
                    });
                }
                let design = self.design(&channel, mode, snr_index, trial)?;
                let r = spectral_efficiency(&channel.freq_matrices, &design.beamformer, power, self.config.noise_var)?;
                Ok(ModeOutcome {
                    mode,
                    rate: r.mean,
                    design: Some(design),
                })
            })
            .collect::<Result<Vec<_>>>()
            .map_err(wrap)?;
        Ok(TrialOutcome {
            snr_db,
            snr_index,
            trial,
            seed: derive_seed(self.config.seed, snr_index, trial),
            modes,
        })
    }
}

/// Validates `config` and runs one trial.
pub fn run_trial(config: &ScenarioConfig, snr_index: usize, trial: usize) -> Result<TrialOutcome> {
    Scenario::new(config.clone())?.run_trial(snr_index, trial)
}

fn aggregate(rates: &[f64]) -> (f64, f64) {
    let n = rates.len() as f64;
    let mean = rates.iter().sum::<f64>() / n;
    if rates.len() < 2 {
        return (mean, 0.0);
    }
    let var = rates.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs `trials` trials at every SNR and reduces them in trial order.
/// The first failing trial aborts the sweep.
pub fn run_sweep(config: &ScenarioConfig) -> Result<SweepResult> {
    let scenario = Scenario::new(config.clone())?;
    let jobs: Vec<(usize, usize)> = (0..config.snr_grid_db.len())
        .flat_map(|s| (0..config.trials).map(move |t| (s, t)))
        .collect();
    let outcomes = jobs
        .par_iter()
        .map(|&(s, t)| {
            scenario.run_trial(s, t).map(|o| {
                let rates: Vec<f64> = o.modes.iter().map(|m| m.rate).collect();
                rates
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut records = Vec::with_capacity(config.snr_grid_db.len() * config.mode.len());
    for (s, &snr_db) in config.snr_grid_db.iter().enumerate() {
        let cell = &outcomes[s * config.trials..(s + 1) * config.trials];
        for (m, &mode) in config.mode.iter().enumerate() {
            let rates: Vec<f64> = cell.iter().map(|r| r[m]).collect();
            let (mean_rate, std_err) = aggregate(&rates);
            records.push(SweepRecord {
                snr_db,
                mode,
                mean_rate,
                std_err,
                trials_used: rates.len(),
            });
        }
    }
    Ok(SweepResult {
        records,
        config: config.clone(),
        seed: config.seed,
        version: env!("CARGO_PKG_VERSION"),
    })
}
