//! Hybrid precoder/combiner design: MMSE targets, deflated greedy codebook
//! selection, the forward/reverse iteration, and the SVD baseband stage.

mod analog;
mod digital;
mod iterate;

pub use analog::{mmse_target, select_analog, AnalogSelection, MmseTarget, GS_DEGENERATE_NORM};
pub use digital::{digital_stage, DigitalStage};
pub use iterate::{
    iterate_design, CsiMode, DesignConfig, DesignContext, DesignOutcome, EstimationParams, IterationRecord,
};

use crate::linalg::CMat;

pub(crate) const MODULE: &str = "beamdesign";

/// Analog matrices shared by all subcarriers plus per-subcarrier baseband
/// matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridBeamformer {
    /// `N_t x N_RF`.
    pub f_rf: CMat,
    /// `N_r x N_RF`.
    pub w_rf: CMat,
    /// `N_RF x N_s` per subcarrier.
    pub f_bb: Vec<CMat>,
    /// `N_RF x N_s` per subcarrier.
    pub w_bb: Vec<CMat>,
}

impl HybridBeamformer {
    pub fn num_streams(&self) -> usize {
        self.f_bb.first().map_or(0, |f| f.ncols())
    }

    /// Largest `| ||X_RF X_BB[k]||_F^2 - N_s |` over subcarriers and both ends.
    pub fn power_normalization_error(&self) -> f64 {
        let n_s = self.num_streams() as f64;
        self.f_bb
            .iter()
            .map(|f| ((&self.f_rf * f).norm_squared() - n_s).abs())
            .chain(self.w_bb.iter().map(|w| ((&self.w_rf * w).norm_squared() - n_s).abs()))
            .fold(0.0, f64::max)
    }
}
