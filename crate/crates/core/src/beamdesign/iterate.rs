//! Forward/reverse alternating design of the analog beams.
//!
//! Each iteration the receiver estimates `H[k] F_RF` from forward training
//! and chooses `W_RF`; the transmitter then estimates `H[k]^H W_RF` from
//! reverse training and chooses `F_RF`. The loop stops once both selected
//! beam sets repeat, or after `max_iterations`.

use rand::seq::index::sample;
use rand::Rng;

use crate::channel::ChannelRealization;
use crate::codebook::{AngleDictionary, BeamCodebook};
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::sensing::{
    effective_channel, generate_measurement_matrix, recover, simulate_training, LinkDirection, MeasurementMatrix,
    Recovery,
};

use super::analog::{mmse_target, select_analog, AnalogSelection};
use super::digital::digital_stage;
use super::{HybridBeamformer, MODULE};

/// Training and recovery settings for the compressive-sensing path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimationParams {
    /// Forward measurement count (rows of `Phi_r`).
    pub m_r: usize,
    /// Reverse measurement count (rows of `Phi_t`).
    pub m_t: usize,
    pub recovery: Recovery,
    pub max_sparsity: usize,
    pub residual_tol: f64,
    /// Noise std in the units of `H[k] f`, forward direction.
    pub noise_std_forward: f64,
    pub noise_std_reverse: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CsiMode {
    Estimated(EstimationParams),
    /// Estimation bypassed: the designer sees the exact effective channels.
    Perfect,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignConfig {
    pub n_rf: usize,
    pub n_s: usize,
    pub max_iterations: usize,
    pub csi: CsiMode,
    /// Regularization of the receiver's MMSE target.
    pub reg_forward: f64,
    /// Regularization of the transmitter's MMSE target.
    pub reg_reverse: f64,
}

/// Codebooks and dictionaries for both ends of the link.
#[derive(Debug, Clone, Copy)]
pub struct DesignContext<'a> {
    pub tx_codebook: &'a BeamCodebook,
    pub rx_codebook: &'a BeamCodebook,
    pub tx_dictionary: &'a AngleDictionary,
    pub rx_dictionary: &'a AngleDictionary,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IterationRecord {
    pub combiner_indices: Vec<usize>,
    pub precoder_indices: Vec<usize>,
    /// Columns whose Gram-Schmidt remainder vanished in this iteration.
    pub degenerate_columns: usize,
}

#[derive(Debug, Clone)]
pub struct DesignOutcome {
    pub beamformer: HybridBeamformer,
    pub initial_precoder: Vec<usize>,
    pub trace: Vec<IterationRecord>,
    /// True when the loop ended on a repeated selection rather than the cap.
    pub converged: bool,
    pub last_combiner: AnalogSelection,
    pub last_precoder: AnalogSelection,
    /// Subcarriers where the digital stage saw an all-zero baseband channel.
    pub zero_channel: Vec<usize>,
}

struct Estimator<'a> {
    channel: &'a ChannelRealization,
    ctx: DesignContext<'a>,
    /// `(Phi_r, Phi_t, params)` when estimating.
    sensing: Option<(MeasurementMatrix, MeasurementMatrix, EstimationParams)>,
}

impl Estimator<'_> {
    fn estimate<R: Rng + ?Sized>(&self, direction: LinkDirection, beams: &CMat, rng: &mut R) -> Result<Vec<CMat>> {
        let Some((phi_r, phi_t, p)) = &self.sensing else {
            return effective_channel(self.channel, direction, beams);
        };
        let (phi, dict, m, std) = match direction {
            LinkDirection::Forward => (phi_r, self.ctx.rx_dictionary, p.m_r, p.noise_std_forward),
            LinkDirection::Reverse => (phi_t, self.ctx.tx_dictionary, p.m_t, p.noise_std_reverse),
        };
        let received = simulate_training(self.channel, direction, beams, phi, std, rng)?;
        let sparsity = p.max_sparsity.min(m).min(dict.grid_size());
        Ok(recover(p.recovery, &received, phi, dict, sparsity, p.residual_tol)?.effective_channel)
    }
}

fn sorted(v: &[usize]) -> Vec<usize> {
    let mut s = v.to_vec();
    s.sort_unstable();
    s
}

fn validate(channel: &ChannelRealization, ctx: &DesignContext<'_>, config: &DesignConfig) -> Result<()> {
    if config.max_iterations == 0 {
        return Err(Error::invalid(MODULE, "max_iterations must be at least 1"));
    }
    if config.n_rf == 0 || config.n_s == 0 || config.n_s > config.n_rf {
        return Err(Error::invalid(
            MODULE,
            format!(
                "need 1 <= N_s <= N_RF, got N_s = {}, N_RF = {}",
                config.n_s, config.n_rf
            ),
        ));
    }
    if config.n_rf > channel.num_tx() || config.n_rf > channel.num_rx() {
        return Err(Error::invalid(
            MODULE,
            format!(
                "N_RF = {} exceeds an antenna count (N_t = {}, N_r = {})",
                config.n_rf,
                channel.num_tx(),
                channel.num_rx()
            ),
        ));
    }
    let checks = [
        ("transmit codebook", ctx.tx_codebook.num_antennas(), channel.num_tx()),
        ("receive codebook", ctx.rx_codebook.num_antennas(), channel.num_rx()),
        (
            "transmit dictionary",
            ctx.tx_dictionary.num_antennas(),
            channel.num_tx(),
        ),
        ("receive dictionary", ctx.rx_dictionary.num_antennas(), channel.num_rx()),
    ];
    for (name, got, want) in checks {
        if got != want {
            return Err(Error::dims(
                MODULE,
                format!("{name} has {got} antennas, expected {want}"),
            ));
        }
    }
    if config.n_rf > ctx.tx_codebook.num_beams() {
        return Err(Error::invalid(MODULE, "transmit codebook smaller than N_RF"));
    }
    Ok(())
}

/// Runs the alternating analog design and the final digital stage.
///
/// Randomness (initial beams, measurement matrices, training noise) is drawn
/// from `rng` in a fixed order, so equal seeds give identical outcomes.
pub fn iterate_design<R: Rng + ?Sized>(
    channel: &ChannelRealization,
    ctx: DesignContext<'_>,
    config: &DesignConfig,
    rng: &mut R,
) -> Result<DesignOutcome> {
    validate(channel, &ctx, config)?;

    let initial_precoder = sample(rng, ctx.tx_codebook.num_beams(), config.n_rf).into_vec();
    let sensing = match config.csi {
        CsiMode::Perfect => None,
        CsiMode::Estimated(p) => Some((
            generate_measurement_matrix(rng, p.m_r, channel.num_rx())?,
            generate_measurement_matrix(rng, p.m_t, channel.num_tx())?,
            p,
        )),
    };
    let estimator = Estimator { channel, ctx, sensing };

    let mut f_indices = initial_precoder.clone();
    let mut f_rf = ctx.tx_codebook.select(&f_indices);
    let mut trace: Vec<IterationRecord> = Vec::new();
    let mut converged = false;
    let mut last: Option<(AnalogSelection, AnalogSelection)> = None;
    // Forward estimate and the precoder indices it was measured with.
    let mut forward_estimate: Option<(Vec<usize>, Vec<CMat>)> = None;

    for _ in 0..config.max_iterations {
        let h_r = estimator.estimate(LinkDirection::Forward, &f_rf, rng)?;
        let combiner = select_analog(&mmse_target(&h_r, config.reg_forward)?, ctx.rx_codebook)?;
        forward_estimate = Some((f_indices.clone(), h_r));

        let h_t = estimator.estimate(LinkDirection::Reverse, &combiner.matrix, rng)?;
        let precoder = select_analog(&mmse_target(&h_t, config.reg_reverse)?, ctx.tx_codebook)?;
        f_indices = precoder.indices.clone();
        f_rf = precoder.matrix.clone();

        let record = IterationRecord {
            combiner_indices: combiner.indices.clone(),
            precoder_indices: precoder.indices.clone(),
            degenerate_columns: combiner.degenerate_columns() + precoder.degenerate_columns(),
        };
        let repeated = trace.last().is_some_and(|prev| {
            sorted(&prev.combiner_indices) == sorted(&record.combiner_indices)
                && sorted(&prev.precoder_indices) == sorted(&record.precoder_indices)
        });
        trace.push(record);
        last = Some((combiner, precoder));
        if repeated {
            converged = true;
            break;
        }
    }

    let (last_combiner, last_precoder) =
        last.ok_or_else(|| Error::internal(MODULE, "design loop ran zero iterations"))?;
    let w_rf = last_combiner.matrix.clone();

    // The digital stage needs Htilde_r measured through the final F_RF.
    let h_r = match forward_estimate {
        Some((indices, h)) if indices == f_indices => h,
        _ => estimator.estimate(LinkDirection::Forward, &f_rf, rng)?,
    };
    let digital = digital_stage(&w_rf, &f_rf, &h_r, config.n_s)?;

    Ok(DesignOutcome {
        beamformer: HybridBeamformer {
            f_rf,
            w_rf,
            f_bb: digital.f_bb,
            w_bb: digital.w_bb,
        },
        initial_precoder,
        trace,
        converged,
        last_combiner,
        last_precoder,
        zero_channel: digital.zero_channel,
    })
}
