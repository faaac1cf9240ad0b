//! Compressive training and sparse recovery of the effective channel.
//!
//! During training the far end transmits on each of its analog beams in turn;
//! the near end observes the result through `M` random quaternary
//! measurement vectors (the rows of `Phi`). Since the effective channel is a
//! sum of a few steering vectors, it is recovered on the angle dictionary
//! `Psi` with simultaneous orthogonal matching pursuit: one support shared by
//! every subcarrier and every RF chain.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::codebook::AngleDictionary;
use crate::error::{Error, Result};
use crate::linalg::{complex_gaussian, CMat};

const MODULE: &str = "sensing";

const QUATERNARY: [Complex64; 4] = [
    Complex64::new(1.0, 0.0),
    Complex64::new(-1.0, 0.0),
    Complex64::new(0.0, 1.0),
    Complex64::new(0.0, -1.0),
];

/// Training measurement matrix, `M x num_antennas`, entries in `{±1, ±j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementMatrix {
    entries: CMat,
}

impl MeasurementMatrix {
    /// Wraps an arbitrary matrix after checking every entry is one of `±1, ±j`.
    pub fn from_entries(entries: CMat) -> Result<Self> {
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return Err(Error::invalid(MODULE, "measurement matrix must be non-empty"));
        }
        if !entries.iter().all(|z| QUATERNARY.contains(z)) {
            return Err(Error::invalid(MODULE, "measurement entries must be one of ±1, ±j"));
        }
        Ok(Self { entries })
    }

    /// Identity selection, used to bypass compression in tests.
    pub fn identity(n: usize) -> Self {
        Self {
            entries: CMat::identity(n, n),
        }
    }

    pub fn entries(&self) -> &CMat {
        &self.entries
    }

    pub fn num_measurements(&self) -> usize {
        self.entries.nrows()
    }

    pub fn num_antennas(&self) -> usize {
        self.entries.ncols()
    }
}

pub fn generate_measurement_matrix<R: Rng + ?Sized>(
    rng: &mut R,
    num_measurements: usize,
    num_antennas: usize,
) -> Result<MeasurementMatrix> {
    if num_measurements == 0 || num_antennas == 0 {
        return Err(Error::invalid(
            MODULE,
            format!("measurement matrix dims must be positive, got {num_measurements} x {num_antennas}"),
        ));
    }
    let entries = DMatrix::from_fn(num_measurements, num_antennas, |_, _| {
        QUATERNARY[rng.random_range(0..4)]
    });
    Ok(MeasurementMatrix { entries })
}

/// Which end transmits during a training phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkDirection {
    /// Transmitter to receiver: the effective channel is `H[k] f_i`.
    Forward,
    /// Receiver to transmitter over the reciprocal channel: `H[k]^H w_i`.
    Reverse,
}

/// Noise-free effective channel seen at the measuring end, one
/// `num_antennas x num_beams` matrix per subcarrier.
pub fn effective_channel(channel: &ChannelRealization, direction: LinkDirection, beams: &CMat) -> Result<Vec<CMat>> {
    let expected = match direction {
        LinkDirection::Forward => channel.num_tx(),
        LinkDirection::Reverse => channel.num_rx(),
    };
    if beams.nrows() != expected {
        return Err(Error::dims(
            MODULE,
            format!(
                "{direction:?} training beams have {} rows, the transmitting array has {expected} elements",
                beams.nrows()
            ),
        ));
    }
    Ok(channel
        .freq_matrices
        .iter()
        .map(|h| match direction {
            LinkDirection::Forward => h * beams,
            LinkDirection::Reverse => h.ad_mul(beams),
        })
        .collect())
}

/// Received training matrices `R[k] = Phi (H_eff[k] + N[k])`, each `M x num_beams`.
///
/// `N[k]` has i.i.d. `CN(0, noise_std^2)` entries drawn per subcarrier and per
/// beam, in subcarrier-major then column-major order.
pub fn simulate_training<R: Rng + ?Sized>(
    channel: &ChannelRealization,
    direction: LinkDirection,
    beams: &CMat,
    phi: &MeasurementMatrix,
    noise_std: f64,
    rng: &mut R,
) -> Result<Vec<CMat>> {
    if !(noise_std >= 0.0 && noise_std.is_finite()) {
        return Err(Error::invalid(
            MODULE,
            format!("noise std must be finite and >= 0, got {noise_std}"),
        ));
    }
    let eff = effective_channel(channel, direction, beams)?;
    let antennas = eff.first().map_or(0, |h| h.nrows());
    if phi.num_antennas() != antennas {
        return Err(Error::dims(
            MODULE,
            format!(
                "measurement matrix spans {} antennas, the measuring array has {antennas}",
                phi.num_antennas()
            ),
        ));
    }
    Ok(eff
        .into_iter()
        .map(|mut h| {
            if noise_std > 0.0 {
                for col in 0..h.ncols() {
                    for row in 0..h.nrows() {
                        h[(row, col)] += complex_gaussian(rng, noise_std);
                    }
                }
            }
            &phi.entries * h
        })
        .collect())
}

/// Sparse recovery strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Recovery {
    /// One support shared across all subcarriers and RF chains.
    #[default]
    Somp,
    /// Classic OMP run independently on every measurement column.
    OmpPerColumn,
}

#[derive(Debug, Clone)]
pub struct SparseEstimate {
    /// Selected dictionary columns, in selection order. For per-column OMP
    /// this is the sorted union over columns.
    pub support: Vec<usize>,
    /// `X[k]`, `L_grid x num_beams`, zero outside `support`.
    pub coefficients: Vec<CMat>,
    /// `Psi X[k]`, `num_antennas x num_beams`.
    pub effective_channel: Vec<CMat>,
    /// Aggregate residual Frobenius norm before the first and after each
    /// selection. Empty for per-column OMP.
    pub residual_history: Vec<f64>,
}

impl SparseEstimate {
    pub fn sorted_support(&self) -> Vec<usize> {
        let mut s = self.support.clone();
        s.sort_unstable();
        s
    }
}

struct Pursuit {
    support: Vec<usize>,
    /// `support.len() x target.ncols()`.
    coeffs: CMat,
    history: Vec<f64>,
}

/// Greedy common-support pursuit on the columns of `target` against the
/// sensing operator `v`.
fn pursue(v: &CMat, norms: &[f64], target: &CMat, max_sparsity: usize, residual_tol: f64) -> Result<Pursuit> {
    let total = target.norm();
    let mut support = Vec::with_capacity(max_sparsity);
    let mut coeffs = CMat::zeros(0, target.ncols());
    let mut residual = target.clone();
    let mut history = vec![total];
    if total == 0.0 {
        return Ok(Pursuit {
            support,
            coeffs,
            history,
        });
    }
    let mut selected = vec![false; v.ncols()];
    while support.len() < max_sparsity {
        if residual.norm() <= residual_tol * total {
            break;
        }
        let corr = v.ad_mul(&residual);
        let mut best: Option<(usize, f64)> = None;
        for idx in 0..v.ncols() {
            if selected[idx] || norms[idx] == 0.0 {
                continue;
            }
            let score = corr.row(idx).iter().map(|z| z.norm()).sum::<f64>() / norms[idx];
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((idx, score));
            }
        }
        let Some((idx, _)) = best else { break };
        selected[idx] = true;
        support.push(idx);

        let vs = v.select_columns(&support);
        let qr = vs.clone().qr();
        let r = qr.r();
        let scale = vs.norm().max(f64::MIN_POSITIVE);
        if (0..r.nrows()).any(|i| r[(i, i)].norm() <= 1e-12 * scale) {
            return Err(Error::internal(
                MODULE,
                format!("restricted sensing matrix is rank deficient on support {support:?}"),
            ));
        }
        let rhs = qr.q().ad_mul(target);
        coeffs = r
            .solve_upper_triangular(&rhs)
            .ok_or_else(|| Error::internal(MODULE, "triangular solve failed"))?;
        residual = target - &vs * &coeffs;
        history.push(residual.norm());
    }
    Ok(Pursuit {
        support,
        coeffs,
        history,
    })
}

fn check_inputs(
    measurements: &[CMat],
    phi: &MeasurementMatrix,
    dict: &AngleDictionary,
    max_sparsity: usize,
    residual_tol: f64,
) -> Result<usize> {
    if measurements.is_empty() {
        return Err(Error::invalid(MODULE, "no measurement matrices supplied"));
    }
    if phi.num_antennas() != dict.num_antennas() {
        return Err(Error::dims(
            MODULE,
            format!(
                "measurement matrix spans {} antennas, dictionary {}",
                phi.num_antennas(),
                dict.num_antennas()
            ),
        ));
    }
    let m = phi.num_measurements();
    let cols = measurements[0].ncols();
    if let Some((k, r)) = measurements
        .iter()
        .enumerate()
        .find(|(_, r)| r.nrows() != m || r.ncols() != cols)
    {
        return Err(Error::dims(
            MODULE,
            format!("measurement {k} is {}x{}, expected {m}x{cols}", r.nrows(), r.ncols()),
        ));
    }
    if max_sparsity == 0 || max_sparsity > m || max_sparsity > dict.grid_size() {
        return Err(Error::invalid(
            MODULE,
            format!("max sparsity {max_sparsity} must be in 1..={}", m.min(dict.grid_size())),
        ));
    }
    if residual_tol.is_nan() || residual_tol < 0.0 {
        return Err(Error::invalid(MODULE, "residual tolerance must be >= 0"));
    }
    Ok(cols)
}

fn sensing_operator(phi: &MeasurementMatrix, dict: &AngleDictionary) -> (CMat, Vec<f64>) {
    let v = &phi.entries * &dict.atoms;
    let norms = v.column_iter().map(|c| c.norm()).collect();
    (v, norms)
}

fn reconstruct(dict: &AngleDictionary, coefficients: &[CMat]) -> Vec<CMat> {
    coefficients.iter().map(|x| &dict.atoms * x).collect()
}

/// Simultaneous OMP over all subcarriers and RF-chain columns.
///
/// Stops after `max_sparsity` atoms or once the aggregate residual falls to
/// `residual_tol` times the measurement norm.
pub fn somp_recover(
    measurements: &[CMat],
    phi: &MeasurementMatrix,
    dict: &AngleDictionary,
    max_sparsity: usize,
    residual_tol: f64,
) -> Result<SparseEstimate> {
    let cols = check_inputs(measurements, phi, dict, max_sparsity, residual_tol)?;
    let (v, norms) = sensing_operator(phi, dict);
    let n = measurements.len();
    let mut stacked = CMat::zeros(phi.num_measurements(), n * cols);
    for (k, r) in measurements.iter().enumerate() {
        stacked.columns_mut(k * cols, cols).copy_from(r);
    }
    let p = pursue(&v, &norms, &stacked, max_sparsity, residual_tol)?;
    let coefficients: Vec<CMat> = (0..n)
        .map(|k| {
            let mut x = CMat::zeros(dict.grid_size(), cols);
            for (row, &idx) in p.support.iter().enumerate() {
                for c in 0..cols {
                    x[(idx, c)] = p.coeffs[(row, k * cols + c)];
                }
            }
            x
        })
        .collect();
    Ok(SparseEstimate {
        effective_channel: reconstruct(dict, &coefficients),
        support: p.support,
        coefficients,
        residual_history: p.history,
    })
}

/// Independent OMP on every `(k, i)` measurement column.
pub fn omp_per_column(
    measurements: &[CMat],
    phi: &MeasurementMatrix,
    dict: &AngleDictionary,
    max_sparsity: usize,
    residual_tol: f64,
) -> Result<SparseEstimate> {
    let cols = check_inputs(measurements, phi, dict, max_sparsity, residual_tol)?;
    let (v, norms) = sensing_operator(phi, dict);
    let mut union = vec![false; dict.grid_size()];
    let mut coefficients = Vec::with_capacity(measurements.len());
    for r in measurements {
        let mut x = CMat::zeros(dict.grid_size(), cols);
        for c in 0..cols {
            let target = r.columns(c, 1).into_owned();
            let p = pursue(&v, &norms, &target, max_sparsity, residual_tol)?;
            for (row, &idx) in p.support.iter().enumerate() {
                x[(idx, c)] = p.coeffs[(row, 0)];
                union[idx] = true;
            }
        }
        coefficients.push(x);
    }
    Ok(SparseEstimate {
        effective_channel: reconstruct(dict, &coefficients),
        support: (0..union.len()).filter(|&i| union[i]).collect(),
        coefficients,
        residual_history: Vec::new(),
    })
}

pub fn recover(
    method: Recovery,
    measurements: &[CMat],
    phi: &MeasurementMatrix,
    dict: &AngleDictionary,
    max_sparsity: usize,
    residual_tol: f64,
) -> Result<SparseEstimate> {
    match method {
        Recovery::Somp => somp_recover(measurements, phi, dict, max_sparsity, residual_tol),
        Recovery::OmpPerColumn => omp_per_column(measurements, phi, dict, max_sparsity, residual_tol),
    }
}
