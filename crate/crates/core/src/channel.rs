//! Frequency-selective geometric channel for half-wavelength ULAs.
//!
//! A realization is a set of `L` propagation paths, each with a complex gain,
//! a delay, and arrival/departure angles. The delay-domain taps are shaped by a
//! raised-cosine pulse sampled at `d * T_s`, and the per-subcarrier matrices
//! are the N-point DFT of those taps:
//!
//! ```text
//! H[k] = sum_d sum_l alpha_l f(d T_s - tau_l) a_r(aoa_l) a_t(aod_l)^H exp(-j 2 pi k d / N)
//! ```

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{complex_gaussian, CMat, CVec};

const MODULE: &str = "channel";

/// Steering vector of an `num_elements`-element half-wavelength ULA.
///
/// Element `n` is `exp(j pi n sin(angle))`.
pub fn array_response(angle: f64, num_elements: usize) -> Result<CVec> {
    if !angle.is_finite() {
        return Err(Error::invalid(MODULE, format!("angle must be finite, got {angle}")));
    }
    if num_elements == 0 {
        return Err(Error::invalid(MODULE, "array needs at least one element"));
    }
    Ok(steering(angle, num_elements))
}

pub(crate) fn steering(angle: f64, num_elements: usize) -> CVec {
    let phase = PI * angle.sin();
    CVec::from_iterator(
        num_elements,
        (0..num_elements).map(|n| Complex64::from_polar(1.0, phase * n as f64)),
    )
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// Raised-cosine impulse response at time `t`.
///
/// At the removable singularities `t = ±T_s / (2 beta)` the analytic limit
/// `(pi/4) sinc(1 / (2 beta))` is returned.
pub fn raised_cosine(t: f64, sample_period: f64, rolloff: f64) -> Result<f64> {
    if sample_period.is_nan() || sample_period <= 0.0 || !sample_period.is_finite() {
        return Err(Error::invalid(
            MODULE,
            format!("sample period must be positive, got {sample_period}"),
        ));
    }
    if !(0.0..=1.0).contains(&rolloff) {
        return Err(Error::invalid(
            MODULE,
            format!("rolloff must lie in [0, 1], got {rolloff}"),
        ));
    }
    if !t.is_finite() {
        return Err(Error::invalid(MODULE, format!("time must be finite, got {t}")));
    }
    Ok(raised_cosine_unchecked(t / sample_period, rolloff))
}

/// `x` is time in units of the sample period.
fn raised_cosine_unchecked(x: f64, rolloff: f64) -> f64 {
    if rolloff > 0.0 {
        let edge = 2.0 * rolloff * x;
        if (edge.abs() - 1.0).abs() < 1e-10 {
            return PI / 4.0 * sinc(1.0 / (2.0 * rolloff));
        }
        sinc(x) * (PI * rolloff * x).cos() / (1.0 - edge * edge)
    } else {
        sinc(x)
    }
}

/// The geometric parameters of one channel draw.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub gains: Vec<Complex64>,
    /// Seconds, nonnegative.
    pub delays: Vec<f64>,
    /// Angles of arrival, radians in `[-pi/2, pi/2]`.
    pub aoa: Vec<f64>,
    /// Angles of departure, radians in `[-pi/2, pi/2]`.
    pub aod: Vec<f64>,
}

impl PathSet {
    pub fn new(gains: Vec<Complex64>, delays: Vec<f64>, aoa: Vec<f64>, aod: Vec<f64>) -> Result<Self> {
        let l = gains.len();
        if l == 0 {
            return Err(Error::invalid(MODULE, "a path set needs at least one path"));
        }
        if delays.len() != l || aoa.len() != l || aod.len() != l {
            return Err(Error::dims(
                MODULE,
                format!(
                    "path arrays differ in length: gains {l}, delays {}, aoa {}, aod {}",
                    delays.len(),
                    aoa.len(),
                    aod.len()
                ),
            ));
        }
        for (&a, name) in aoa.iter().map(|a| (a, "aoa")).chain(aod.iter().map(|a| (a, "aod"))) {
            if !(a.is_finite() && (-FRAC_PI_2..=FRAC_PI_2).contains(&a)) {
                return Err(Error::invalid(MODULE, format!("{name} {a} outside [-pi/2, pi/2]")));
            }
        }
        if let Some(d) = delays.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
            return Err(Error::invalid(
                MODULE,
                format!("delay {d} must be finite and nonnegative"),
            ));
        }
        if gains.iter().any(|g| !(g.re.is_finite() && g.im.is_finite())) {
            return Err(Error::invalid(MODULE, "path gains must be finite"));
        }
        Ok(Self {
            gains,
            delays,
            aoa,
            aod,
        })
    }

    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }

    /// Checks that the delay spread fits in a cyclic prefix of `n_cp` samples.
    pub fn fits_cyclic_prefix(&self, n_cp: usize, sample_period: f64) -> bool {
        let max = n_cp.saturating_sub(1) as f64 * sample_period;
        self.delays.iter().all(|&d| d <= max)
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            gains: self.gains.iter().map(|g| g * c).collect(),
            ..self.clone()
        }
    }
}

/// Draws `L` paths: angles uniform on `[-pi/2, pi/2]`, gains `CN(0, 1)`,
/// delays uniform on `[0, (N_cp - 1) T_s]`.
pub fn sample_paths<R: Rng + ?Sized>(
    rng: &mut R,
    num_paths: usize,
    n_cp: usize,
    sample_period: f64,
) -> Result<PathSet> {
    if num_paths == 0 {
        return Err(Error::invalid(MODULE, "number of paths must be positive"));
    }
    if n_cp == 0 {
        return Err(Error::invalid(MODULE, "cyclic prefix length must be positive"));
    }
    if sample_period.is_nan() || sample_period <= 0.0 {
        return Err(Error::invalid(MODULE, "sample period must be positive"));
    }
    let max_delay = (n_cp - 1) as f64 * sample_period;
    let mut gains = Vec::with_capacity(num_paths);
    let mut delays = Vec::with_capacity(num_paths);
    let mut aoa = Vec::with_capacity(num_paths);
    let mut aod = Vec::with_capacity(num_paths);
    for _ in 0..num_paths {
        gains.push(complex_gaussian(rng, 1.0));
        delays.push(rng.random::<f64>() * max_delay);
        aoa.push(rng.random_range(-FRAC_PI_2..=FRAC_PI_2));
        aod.push(rng.random_range(-FRAC_PI_2..=FRAC_PI_2));
    }
    PathSet::new(gains, delays, aoa, aod)
}

/// Link geometry and pulse parameters needed to turn paths into matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelDims {
    pub num_subcarriers: usize,
    pub num_rx: usize,
    pub num_tx: usize,
    pub sample_period: f64,
    pub rolloff: f64,
}

#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub paths: PathSet,
    pub dims: ChannelDims,
    /// `N` matrices, each `N_r x N_t`.
    pub freq_matrices: Vec<CMat>,
}

impl ChannelRealization {
    pub fn num_subcarriers(&self) -> usize {
        self.freq_matrices.len()
    }

    pub fn num_rx(&self) -> usize {
        self.dims.num_rx
    }

    pub fn num_tx(&self) -> usize {
        self.dims.num_tx
    }
}

/// Per-path frequency response `sum_d f(d T_s - tau) exp(-j 2 pi k d / N)` for
/// every subcarrier `k`.
pub(crate) fn path_frequency_response(delay: f64, dims: &ChannelDims) -> Vec<Complex64> {
    let n = dims.num_subcarriers;
    let taps: Vec<f64> = (0..n)
        .map(|d| raised_cosine_unchecked(d as f64 - delay / dims.sample_period, dims.rolloff))
        .collect();
    // Twiddle index (k*d) mod N keeps the phase argument small and exact.
    let twiddle: Vec<Complex64> = (0..n)
        .map(|m| Complex64::from_polar(1.0, -2.0 * PI * m as f64 / n as f64))
        .collect();
    (0..n)
        .map(|k| {
            taps.iter()
                .enumerate()
                .map(|(d, &tap)| twiddle[(k * d) % n] * tap)
                .sum()
        })
        .collect()
}

/// Builds `H[k]` for `k = 0..N-1` from a path set.
pub fn frequency_channel(paths: &PathSet, dims: ChannelDims) -> Result<ChannelRealization> {
    if dims.num_subcarriers == 0 {
        return Err(Error::invalid(MODULE, "number of subcarriers must be positive"));
    }
    if dims.num_rx == 0 || dims.num_tx == 0 {
        return Err(Error::dims(
            MODULE,
            format!(
                "antenna counts must be positive (N_r = {}, N_t = {})",
                dims.num_rx, dims.num_tx
            ),
        ));
    }
    if dims.sample_period.is_nan() || dims.sample_period <= 0.0 {
        return Err(Error::invalid(MODULE, "sample period must be positive"));
    }
    if !(0.0..=1.0).contains(&dims.rolloff) {
        return Err(Error::invalid(
            MODULE,
            format!("rolloff {} outside [0, 1]", dims.rolloff),
        ));
    }
    let mut freq_matrices = vec![CMat::zeros(dims.num_rx, dims.num_tx); dims.num_subcarriers];
    for l in 0..paths.len() {
        let outer = steering(paths.aoa[l], dims.num_rx) * steering(paths.aod[l], dims.num_tx).adjoint();
        let response = path_frequency_response(paths.delays[l], &dims);
        for (h, g) in freq_matrices.iter_mut().zip(response) {
            *h += &outer * (paths.gains[l] * g);
        }
    }
    Ok(ChannelRealization {
        paths: paths.clone(),
        dims,
        freq_matrices,
    })
}
