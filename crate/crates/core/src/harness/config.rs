//! Scenario configuration: TOML file schema, `key=value` overrides, and
//! validation.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};

use crate::codebook::grid_size_for_resolution;
use crate::error::{Error, Result};
use crate::sensing::Recovery;

/// What a trial evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Proposed design with compressive channel estimation.
    CsEstimated,
    /// Proposed design with exact effective channels.
    PerfectCsi,
    /// Equal-power full-digital SVD bound.
    FullDigital,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::CsEstimated, Mode::PerfectCsi, Mode::FullDigital];

    pub fn name(self) -> &'static str {
        match self {
            Mode::CsEstimated => "cs_estimated",
            Mode::PerfectCsi => "perfect_csi",
            Mode::FullDigital => "full_digital",
        }
    }

    pub fn is_hybrid(self) -> bool {
        self != Mode::FullDigital
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| {
            Error::Config(format!(
                "unknown mode `{s}` (expected cs_estimated, perfect_csi or full_digital)"
            ))
        })
    }
}

/// Regularization used by the transmitter's MMSE target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReverseReg {
    /// Reverse training noise variance, symmetric with the forward direction.
    #[default]
    NoiseVar,
    /// Identity regularization.
    Unit,
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Mode>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(Mode),
        Many(Vec<Mode>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(m) => vec![m],
        OneOrMany::Many(v) => v,
    })
}

/// Field names in the config file match the struct's serde names exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(rename = "N_t")]
    pub n_t: usize,
    #[serde(rename = "N_r")]
    pub n_r: usize,
    #[serde(rename = "N_RF")]
    pub n_rf: usize,
    #[serde(rename = "N_s")]
    pub n_s: usize,
    /// Number of subcarriers.
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "N_cp")]
    pub n_cp: usize,
    /// Number of propagation paths.
    #[serde(rename = "L")]
    pub l: usize,
    pub codebook_size: usize,
    /// Dictionary angle step in degrees; must divide 180.
    pub dictionary_resolution: f64,
    /// Forward measurement count; defaults to `ceil(2 L log2(L_grid))`.
    #[serde(rename = "M_r", skip_serializing_if = "Option::is_none")]
    pub m_r: Option<usize>,
    #[serde(rename = "M_t", skip_serializing_if = "Option::is_none")]
    pub m_t: Option<usize>,
    pub rolloff: f64,
    #[serde(rename = "snr_grid_dB")]
    pub snr_grid_db: Vec<f64>,
    pub trials: usize,
    pub max_iterations: usize,
    #[serde(deserialize_with = "one_or_many")]
    pub mode: Vec<Mode>,
    pub recovery: Recovery,
    pub reverse_reg: ReverseReg,
    pub seed: u64,
    /// Sample period; only `tau / T_s` matters.
    #[serde(rename = "T_s")]
    pub sample_period: f64,
    /// Noise variance `sigma_n^2`; SNR is `P / sigma_n^2`.
    pub noise_var: f64,
    /// Training SNR in dB; follows the data SNR when absent.
    #[serde(rename = "training_snr_dB", skip_serializing_if = "Option::is_none")]
    pub training_snr_db: Option<f64>,
    /// Pursuit atom budget; defaults to `L`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_sparsity: Option<usize>,
    /// Relative residual at which pursuit stops early.
    pub residual_tol: f64,
}

/// Every key accepted in a config file or `--set`.
pub const CONFIG_KEYS: &[&str] = &[
    "N_t",
    "N_r",
    "N_RF",
    "N_s",
    "N",
    "N_cp",
    "L",
    "codebook_size",
    "dictionary_resolution",
    "M_r",
    "M_t",
    "rolloff",
    "snr_grid_dB",
    "trials",
    "max_iterations",
    "mode",
    "recovery",
    "reverse_reg",
    "seed",
    "T_s",
    "noise_var",
    "training_snr_dB",
    "max_sparsity",
    "residual_tol",
];

impl Default for ScenarioConfig {
    /// 32x32 arrays, 4 RF chains, 32 subcarriers, 6 paths, 64-beam codebooks.
    fn default() -> Self {
        Self {
            n_t: 32,
            n_r: 32,
            n_rf: 4,
            n_s: 4,
            n: 32,
            n_cp: 8,
            l: 6,
            codebook_size: 64,
            dictionary_resolution: 2.8125,
            m_r: None,
            m_t: None,
            rolloff: 0.8,
            snr_grid_db: vec![-15.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0],
            trials: 200,
            max_iterations: 4,
            mode: vec![Mode::CsEstimated, Mode::PerfectCsi, Mode::FullDigital],
            recovery: Recovery::Somp,
            reverse_reg: ReverseReg::NoiseVar,
            seed: 1,
            sample_period: 1.0,
            noise_var: 1.0,
            training_snr_db: None,
            max_sparsity: None,
            residual_tol: 1e-6,
        }
    }
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ScenarioConfig {
    pub fn grid_size(&self) -> Result<usize> {
        grid_size_for_resolution(self.dictionary_resolution).map_err(|e| config_err(e.to_string()))
    }

    fn default_measurements(&self) -> Result<usize> {
        let grid = self.grid_size()? as f64;
        Ok((2.0 * self.l as f64 * grid.log2()).ceil().max(1.0) as usize)
    }

    pub fn measurements_forward(&self) -> Result<usize> {
        self.m_r.map_or_else(|| self.default_measurements(), Ok)
    }

    pub fn measurements_reverse(&self) -> Result<usize> {
        self.m_t.map_or_else(|| self.default_measurements(), Ok)
    }

    pub fn sparsity(&self) -> usize {
        self.max_sparsity.unwrap_or(self.l)
    }

    /// Checks every invariant; no computation should start on a config that fails.
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("N_t", self.n_t),
            ("N_r", self.n_r),
            ("N_RF", self.n_rf),
            ("N_s", self.n_s),
            ("N", self.n),
            ("N_cp", self.n_cp),
            ("L", self.l),
            ("codebook_size", self.codebook_size),
            ("trials", self.trials),
            ("max_iterations", self.max_iterations),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(config_err(format!("{name} must be positive")));
        }
        if self.n_rf > self.n_t || self.n_rf > self.n_r {
            return Err(config_err(format!(
                "N_RF = {} violates N_RF <= N_t (= {}) and N_RF <= N_r (= {})",
                self.n_rf, self.n_t, self.n_r
            )));
        }
        if self.mode.is_empty() {
            return Err(config_err(
                "mode must list at least one of cs_estimated, perfect_csi, full_digital",
            ));
        }
        for (i, m) in self.mode.iter().enumerate() {
            if self.mode[..i].contains(m) {
                return Err(config_err(format!("mode `{m}` listed twice")));
            }
        }
        if self.mode.iter().any(|m| m.is_hybrid()) && self.n_s != self.n_rf {
            return Err(config_err(format!(
                "hybrid modes require N_s = N_RF, got N_s = {} and N_RF = {}",
                self.n_s, self.n_rf
            )));
        }
        if self.n_s > self.n_t.min(self.n_r) {
            return Err(config_err(format!(
                "N_s = {} exceeds min(N_t, N_r) = {}",
                self.n_s,
                self.n_t.min(self.n_r)
            )));
        }
        if self.n_rf > self.codebook_size {
            return Err(config_err(format!(
                "N_RF = {} exceeds codebook_size = {}",
                self.n_rf, self.codebook_size
            )));
        }
        if self.n_cp > self.n {
            return Err(config_err(format!("N_cp = {} exceeds N = {}", self.n_cp, self.n)));
        }
        let grid = self.grid_size()?;
        if self.m_r == Some(0) || self.m_t == Some(0) {
            return Err(config_err("M_r and M_t must be positive"));
        }
        if self.max_sparsity == Some(0) {
            return Err(config_err("max_sparsity must be positive"));
        }
        if grid < 1 {
            return Err(config_err("dictionary_resolution gives an empty grid"));
        }
        if self.seed > i64::MAX as u64 {
            return Err(config_err(format!("seed must be at most {}", i64::MAX)));
        }
        if !(0.0..=1.0).contains(&self.rolloff) {
            return Err(config_err(format!("rolloff = {} outside [0, 1]", self.rolloff)));
        }
        if !(self.sample_period > 0.0 && self.sample_period.is_finite()) {
            return Err(config_err("T_s must be positive"));
        }
        if !(self.noise_var > 0.0 && self.noise_var.is_finite()) {
            return Err(config_err("noise_var must be positive"));
        }
        if !(self.residual_tol >= 0.0 && self.residual_tol.is_finite()) {
            return Err(config_err("residual_tol must be finite and >= 0"));
        }
        if self.snr_grid_db.is_empty() {
            return Err(config_err("snr_grid_dB must not be empty"));
        }
        if self
            .snr_grid_db
            .iter()
            .chain(&self.training_snr_db)
            .any(|s| !s.is_finite())
        {
            return Err(config_err("SNR values must be finite"));
        }
        Ok(())
    }

    /// Parses TOML text, then applies `key=value` overrides.
    pub fn from_toml_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| config_err(format!("cannot parse config: {e}")))?;
        apply_overrides(&mut table, overrides)?;
        table
            .try_into()
            .map_err(|e: toml::de::Error| config_err(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_with_overrides(&text, overrides)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::internal("config", e.to_string()))
    }
}

/// Applies `key=value` strings to a raw table. Values are read as TOML
/// (`3`, `[0, 10]`, `"x"`) and fall back to a bare string (`mode=perfect_csi`).
/// Unknown keys are rejected.
pub fn apply_overrides(table: &mut toml::Table, overrides: &[String]) -> Result<()> {
    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| config_err(format!("override `{item}` is not key=value")))?;
        let key = key.trim();
        if !CONFIG_KEYS.contains(&key) {
            return Err(config_err(format!("unknown config key `{key}` in override `{item}`")));
        }
        let raw = raw.trim();
        let value = format!("v = {raw}")
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(raw.to_string()));
        table.insert(key.to_string(), value);
    }
    Ok(())
}
