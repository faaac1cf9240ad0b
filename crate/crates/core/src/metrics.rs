//! Spectral efficiency of a hybrid design and the full-digital SVD bound.
//!
//! Rates are always evaluated on the true channel, so estimation error in
//! the design shows up as rate loss.

use crate::beamdesign::HybridBeamformer;
use crate::error::{Error, Result};
use crate::linalg::CMat;

const MODULE: &str = "metrics";

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    /// bits/s/Hz per subcarrier.
    pub per_subcarrier: Vec<f64>,
    /// Arithmetic mean of `per_subcarrier`.
    pub mean: f64,
}

impl RateReport {
    fn from_rates(per_subcarrier: Vec<f64>) -> Self {
        let mean = if per_subcarrier.is_empty() {
            0.0
        } else {
            per_subcarrier.iter().sum::<f64>() / per_subcarrier.len() as f64
        };
        Self { per_subcarrier, mean }
    }
}

fn check_power(power: f64, noise_var: f64) -> Result<()> {
    if !(power >= 0.0 && power.is_finite()) {
        return Err(Error::invalid(
            MODULE,
            format!("transmit power must be finite and >= 0, got {power}"),
        ));
    }
    if !(noise_var > 0.0 && noise_var.is_finite()) {
        return Err(Error::invalid(
            MODULE,
            format!("noise variance must be positive, got {noise_var}"),
        ));
    }
    Ok(())
}

/// Mean over subcarriers of
/// `log2 det(I + P/N_s R_n^-1 G G^H)` with `G = W^H H F`, `R_n = sigma^2 W^H W`,
/// `F = F_RF F_BB[k]`, `W = W_RF W_BB[k]`.
///
/// Computed as `sum_i log2(1 + P/N_s s_i^2)` over the singular values of
/// `L^-1 G`, where `R_n = L L^H`.
pub fn spectral_efficiency(channel: &[CMat], bf: &HybridBeamformer, power: f64, noise_var: f64) -> Result<RateReport> {
    check_power(power, noise_var)?;
    if channel.len() != bf.f_bb.len() || channel.len() != bf.w_bb.len() {
        return Err(Error::dims(
            MODULE,
            format!(
                "{} channel matrices but {} precoders and {} combiners",
                channel.len(),
                bf.f_bb.len(),
                bf.w_bb.len()
            ),
        ));
    }
    let n_s = bf.num_streams();
    if n_s == 0 {
        return Err(Error::invalid(MODULE, "beamformer carries no streams"));
    }
    let snr = power / n_s as f64;
    let rates = channel
        .iter()
        .enumerate()
        .map(|(k, h)| {
            if h.shape() != (bf.w_rf.nrows(), bf.f_rf.nrows()) {
                return Err(Error::dims(
                    MODULE,
                    format!(
                        "channel {k} is {:?}, beamformer expects {:?}",
                        h.shape(),
                        (bf.w_rf.nrows(), bf.f_rf.nrows())
                    ),
                ));
            }
            let f = &bf.f_rf * &bf.f_bb[k];
            let w = &bf.w_rf * &bf.w_bb[k];
            if f.ncols() != n_s || w.ncols() != n_s {
                return Err(Error::dims(MODULE, format!("stream count differs at subcarrier {k}")));
            }
            let g = w.ad_mul(&(h * &f));
            let r_n = w.ad_mul(&w) * nalgebra::Complex::new(noise_var, 0.0);
            let chol = r_n
                .clone()
                .cholesky()
                .ok_or(Error::SingularNoiseCovariance { subcarrier: k })?;
            let l = chol.l();
            let min_pivot = (0..n_s).map(|i| l[(i, i)].re).fold(f64::INFINITY, f64::min);
            let max_pivot = (0..n_s).map(|i| l[(i, i)].re).fold(0.0, f64::max);
            if min_pivot.is_nan() || min_pivot <= 1e-7 * max_pivot {
                return Err(Error::SingularNoiseCovariance { subcarrier: k });
            }
            let whitened = l
                .solve_lower_triangular(&g)
                .ok_or(Error::SingularNoiseCovariance { subcarrier: k })?;
            Ok(whitened
                .singular_values()
                .iter()
                .map(|s| (snr * s * s).ln_1p() / std::f64::consts::LN_2)
                .sum())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(RateReport::from_rates(rates))
}

/// Equal-power full-digital SVD rate with `N_s` streams on the top singular
/// directions of each `H[k]`.
pub fn full_digital_bound(channel: &[CMat], power: f64, noise_var: f64, n_s: usize) -> Result<RateReport> {
    check_power(power, noise_var)?;
    let snr = power / (n_s as f64 * noise_var);
    let rates = channel
        .iter()
        .map(|h| {
            if n_s == 0 || n_s > h.nrows().min(h.ncols()) {
                return Err(Error::invalid(
                    MODULE,
                    format!("N_s = {n_s} must be in 1..={}", h.nrows().min(h.ncols())),
                ));
            }
            let mut s: Vec<f64> = h.singular_values().iter().copied().collect();
            s.sort_by(|a, b| b.total_cmp(a));
            Ok(s[..n_s]
                .iter()
                .map(|s| (snr * s * s).ln_1p() / std::f64::consts::LN_2)
                .sum())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(RateReport::from_rates(rates))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::complex_gaussian;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar(x: f64) -> CMat {
        CMat::from_element(1, 1, Complex64::new(x, 0.0))
    }

    fn unit_scalar_bf() -> HybridBeamformer {
        HybridBeamformer {
            f_rf: scalar(1.0),
            w_rf: scalar(1.0),
            f_bb: vec![scalar(1.0)],
            w_bb: vec![scalar(1.0)],
        }
    }

    #[test]
    fn scalar_link() {
        let r = spectral_efficiency(&[scalar(2.0)], &unit_scalar_bf(), 1.0, 1.0).unwrap();
        assert!((r.mean - 5f64.log2()).abs() < 1e-12);
        assert!((r.mean - 2.3219).abs() < 1e-4);
    }

    #[test]
    fn zero_power_gives_zero_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h: Vec<CMat> = (0..3)
            .map(|_| CMat::from_fn(4, 4, |_, _| complex_gaussian(&mut rng, 1.0)))
            .collect();
        let bf = HybridBeamformer {
            f_rf: CMat::identity(4, 2),
            w_rf: CMat::identity(4, 2),
            f_bb: vec![CMat::identity(2, 2); 3],
            w_bb: vec![CMat::identity(2, 2); 3],
        };
        let r = spectral_efficiency(&h, &bf, 0.0, 1.0).unwrap();
        assert!(r.per_subcarrier.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn singular_combiner_names_subcarrier() {
        let col = CMat::from_element(2, 1, Complex64::new(1.0, 0.0));
        let w_rf = CMat::from_columns(&[col.column(0), col.column(0)]);
        let bf = HybridBeamformer {
            f_rf: CMat::identity(2, 2),
            w_rf,
            f_bb: vec![CMat::identity(2, 2); 2],
            w_bb: vec![CMat::identity(2, 2); 2],
        };
        let h = vec![CMat::identity(2, 2); 2];
        match spectral_efficiency(&h, &bf, 1.0, 1.0) {
            Err(Error::SingularNoiseCovariance { subcarrier }) => assert_eq!(subcarrier, 0),
            other => panic!("expected singular covariance, got {other:?}"),
        }
    }

    #[test]
    fn bound_identity_and_rank_one() {
        let r = full_digital_bound(&[CMat::identity(2, 2)], 2.0, 1.0, 2).unwrap();
        assert!((r.mean - 2.0).abs() < 1e-12);

        let u = CMat::from_fn(3, 1, |i, _| Complex64::new(1.0 + i as f64, 0.5));
        let v = CMat::from_fn(2, 1, |i, _| Complex64::new(0.0, 1.0 - i as f64 * 0.3));
        let h = &u * v.adjoint();
        let s = h.norm();
        let r = full_digital_bound(&[h], 3.0, 0.5, 1).unwrap();
        assert!((r.mean - (1.0 + 3.0 * s * s / 0.5).log2()).abs() < 1e-12);
    }

    #[test]
    fn bound_rejects_too_many_streams() {
        assert!(full_digital_bound(&[CMat::identity(2, 3)], 1.0, 1.0, 3).is_err());
    }

    #[test]
    fn bound_is_unitarily_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let h = CMat::from_fn(5, 4, |_, _| complex_gaussian(&mut rng, 1.0));
        let u = CMat::from_fn(5, 5, |_, _| complex_gaussian(&mut rng, 1.0)).qr().q();
        let v = CMat::from_fn(4, 4, |_, _| complex_gaussian(&mut rng, 1.0)).qr().q();
        let a = full_digital_bound(std::slice::from_ref(&h), 4.0, 1.0, 3).unwrap();
        let b = full_digital_bound(&[&u * &h * v.adjoint()], 4.0, 1.0, 3).unwrap();
        assert!((a.mean - b.mean).abs() < 1e-9);
    }
}
