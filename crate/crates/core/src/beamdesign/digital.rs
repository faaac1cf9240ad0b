//! Per-subcarrier SVD baseband stage.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CMat;

use super::MODULE;

#[derive(Debug, Clone)]
pub struct DigitalStage {
    /// `N_RF x N_s` per subcarrier, normalized so `||F_RF F_BB[k]||_F^2 = N_s`.
    pub f_bb: Vec<CMat>,
    /// `N_RF x N_s` per subcarrier, normalized so `||W_RF W_BB[k]||_F^2 = N_s`.
    pub w_bb: Vec<CMat>,
    /// Subcarriers whose baseband channel was identically zero.
    pub zero_channel: Vec<usize>,
}

/// Rotates each column so its first non-negligible entry is real and positive.
fn canonical_phase(m: &mut CMat) {
    for mut col in m.column_iter_mut() {
        let scale = col.norm();
        if let Some(&pivot) = col.iter().find(|z| z.norm() > 1e-12 * scale) {
            let rot = pivot.conj() / pivot.norm();
            for z in col.iter_mut() {
                *z *= rot;
            }
        }
    }
}

/// Left and right singular vectors of `m`, ordered by non-increasing singular value.
pub(crate) fn sorted_svd(m: &CMat) -> Result<(CMat, Vec<f64>, CMat)> {
    let svd = m.clone().svd(true, true);
    let u = svd.u.ok_or_else(|| Error::internal(MODULE, "SVD returned no U"))?;
    let v_t = svd.v_t.ok_or_else(|| Error::internal(MODULE, "SVD returned no V^H"))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let u = u.select_columns(&order);
    let v = v_t.adjoint().select_columns(&order);
    let s = order.iter().map(|&i| svd.singular_values[i]).collect();
    Ok((u, s, v))
}

/// Baseband precoder and combiner from the SVD of `H_e[k] = W_RF^H Htilde[k]`,
/// where `Htilde[k]` is the effective channel `H[k] F_RF` (estimated or exact).
pub fn digital_stage(w_rf: &CMat, f_rf: &CMat, effective: &[CMat], n_s: usize) -> Result<DigitalStage> {
    let n_rf = w_rf.ncols();
    if f_rf.ncols() != n_rf {
        return Err(Error::dims(
            MODULE,
            format!("W_RF has {n_rf} columns, F_RF has {}", f_rf.ncols()),
        ));
    }
    if n_s == 0 || n_s > n_rf {
        return Err(Error::invalid(
            MODULE,
            format!("need 1 <= N_s <= N_RF = {n_rf}, got {n_s}"),
        ));
    }
    let mut f_bb = Vec::with_capacity(effective.len());
    let mut w_bb = Vec::with_capacity(effective.len());
    let mut zero_channel = Vec::new();
    let target = (n_s as f64).sqrt();
    for (k, h) in effective.iter().enumerate() {
        if h.shape() != (w_rf.nrows(), n_rf) {
            return Err(Error::dims(
                MODULE,
                format!(
                    "effective channel {k} is {:?}, expected {:?}",
                    h.shape(),
                    (w_rf.nrows(), n_rf)
                ),
            ));
        }
        let h_e = w_rf.ad_mul(h);
        let (mut f, mut w) = if h_e.norm() == 0.0 {
            zero_channel.push(k);
            (CMat::identity(n_rf, n_s), CMat::identity(n_rf, n_s))
        } else {
            let (u, _, v) = sorted_svd(&h_e)?;
            let mut f = v.columns(0, n_s).into_owned();
            let mut w = u.columns(0, n_s).into_owned();
            canonical_phase(&mut f);
            canonical_phase(&mut w);
            (f, w)
        };
        let f_norm = (f_rf * &f).norm();
        let w_norm = (w_rf * &w).norm();
        if f_norm == 0.0 || w_norm == 0.0 {
            return Err(Error::internal(
                MODULE,
                format!("hybrid beamformer has zero norm at subcarrier {k}"),
            ));
        }
        f *= Complex64::new(target / f_norm, 0.0);
        w *= Complex64::new(target / w_norm, 0.0);
        f_bb.push(f);
        w_bb.push(w);
    }
    Ok(DigitalStage {
        f_bb,
        w_bb,
        zero_channel,
    })
}
