//! MMSE targets and greedy, deflated codebook selection of analog beams.

use num_complex::Complex64;

use crate::codebook::BeamCodebook;
use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec};

use super::MODULE;

/// Below this norm a Gram-Schmidt remainder is treated as zero.
pub const GS_DEGENERATE_NORM: f64 = 1e-12;

/// Column-normalized MMSE combiners, one `num_antennas x N_RF` matrix per subcarrier.
#[derive(Debug, Clone)]
pub struct MmseTarget {
    pub columns: Vec<CMat>,
    /// `(subcarrier, column)` pairs that came out exactly zero and were left zero.
    pub zero_columns: Vec<(usize, usize)>,
}

impl MmseTarget {
    pub fn num_antennas(&self) -> usize {
        self.columns.first().map_or(0, |g| g.nrows())
    }

    pub fn num_rf(&self) -> usize {
        self.columns.first().map_or(0, |g| g.ncols())
    }
}

/// `Gamma[k] = (H[k] H[k]^H + reg I)^-1 H[k]`, then every column scaled to unit norm.
pub fn mmse_target(effective: &[CMat], reg: f64) -> Result<MmseTarget> {
    if !(reg > 0.0 && reg.is_finite()) {
        return Err(Error::invalid(
            MODULE,
            format!("MMSE regularization must be positive, got {reg}"),
        ));
    }
    let Some(first) = effective.first() else {
        return Err(Error::invalid(MODULE, "no effective-channel matrices supplied"));
    };
    let (n_a, n_rf) = first.shape();
    let mut zero_columns = Vec::new();
    let mut columns = Vec::with_capacity(effective.len());
    for (k, h) in effective.iter().enumerate() {
        if h.shape() != (n_a, n_rf) {
            return Err(Error::dims(
                MODULE,
                format!("effective channel {k} is {:?}, expected {:?}", h.shape(), (n_a, n_rf)),
            ));
        }
        let mut gram = h * h.adjoint();
        for i in 0..n_a {
            gram[(i, i)] += Complex64::new(reg, 0.0);
        }
        let mut gamma = match gram.clone().cholesky() {
            Some(chol) => chol.solve(h),
            None => gram
                .lu()
                .solve(h)
                .ok_or_else(|| Error::internal(MODULE, format!("MMSE system singular at subcarrier {k}")))?,
        };
        for (i, mut col) in gamma.column_iter_mut().enumerate() {
            let norm = col.norm();
            if norm == 0.0 {
                zero_columns.push((k, i));
            } else {
                col.unscale_mut(norm);
            }
        }
        columns.push(gamma);
    }
    Ok(MmseTarget { columns, zero_columns })
}

/// Result of one greedy analog design pass.
#[derive(Debug, Clone)]
pub struct AnalogSelection {
    /// `num_antennas x N_RF`, columns copied from the codebook.
    pub matrix: CMat,
    pub indices: Vec<usize>,
    /// Orthonormal component of each selected beam; `None` where the beam lay
    /// in the span of earlier ones and no deflation was applied.
    pub basis: Vec<Option<CVec>>,
}

impl AnalogSelection {
    pub fn degenerate_columns(&self) -> usize {
        self.basis.iter().filter(|q| q.is_none()).count()
    }
}

/// Orthonormal component of `w` against `basis` (two modified Gram-Schmidt
/// passes). Returns the remainder and its norm before normalization.
pub(crate) fn orthogonal_component(w: &CVec, basis: &[CVec]) -> (CVec, f64) {
    let mut q = w.clone();
    for _ in 0..2 {
        for b in basis {
            let proj = b.dotc(&q);
            q.axpy(-proj, b, Complex64::new(1.0, 0.0));
        }
    }
    let norm = q.norm();
    (q, norm)
}

/// `g <- (I - q q^H) g`.
pub(crate) fn deflate(g: &mut CVec, q: &CVec) {
    let proj = q.dotc(g);
    g.axpy(-proj, q, Complex64::new(1.0, 0.0));
}

/// Picks one codebook beam per RF chain.
///
/// Column `i` takes the beam maximizing `sum_k |w^H Gamma[k][:, i]|`, lowest
/// index on ties, skipping beams already chosen for earlier chains. The
/// selected beam's orthonormal component is then projected out of every
/// later target column on every subcarrier.
pub fn select_analog(target: &MmseTarget, codebook: &BeamCodebook) -> Result<AnalogSelection> {
    let n_rf = target.num_rf();
    if target.columns.is_empty() || n_rf == 0 {
        return Err(Error::invalid(MODULE, "empty MMSE target"));
    }
    if codebook.num_antennas() != target.num_antennas() {
        return Err(Error::dims(
            MODULE,
            format!(
                "codebook has {} antennas, target has {}",
                codebook.num_antennas(),
                target.num_antennas()
            ),
        ));
    }
    if n_rf > codebook.num_beams() {
        return Err(Error::invalid(
            MODULE,
            format!(
                "{n_rf} RF chains need at least as many codebook beams, got {}",
                codebook.num_beams()
            ),
        ));
    }
    let mut gamma = target.columns.clone();
    let mut indices = Vec::with_capacity(n_rf);
    let mut basis: Vec<Option<CVec>> = Vec::with_capacity(n_rf);
    let mut taken = vec![false; codebook.num_beams()];
    let mut scores = vec![0.0; codebook.num_beams()];

    for i in 0..n_rf {
        scores.iter_mut().for_each(|s| *s = 0.0);
        for g in &gamma {
            let corr = codebook.vectors.ad_mul(&g.column(i));
            for (s, c) in scores.iter_mut().zip(corr.iter()) {
                *s += c.norm();
            }
        }
        let best = scores
            .iter()
            .enumerate()
            .filter(|(b, _)| !taken[*b])
            .fold(None, |acc: Option<(usize, f64)>, (b, &s)| match acc {
                Some((_, top)) if s <= top => acc,
                _ => Some((b, s)),
            })
            .map(|(b, _)| b)
            .ok_or_else(|| Error::internal(MODULE, "codebook exhausted"))?;
        taken[best] = true;
        indices.push(best);

        let w = codebook.beam(best);
        let done: Vec<CVec> = basis.iter().flatten().cloned().collect();
        let (q, norm) = orthogonal_component(&w, &done);
        if norm < GS_DEGENERATE_NORM {
            basis.push(None);
            continue;
        }
        let q = q.unscale(norm);
        for g in gamma.iter_mut() {
            for j in i + 1..n_rf {
                let mut col = g.column(j).into_owned();
                let before = col.norm();
                deflate(&mut col, &q);
                // A column inside span(q_1..q_i) leaves only round-off; zero it so
                // the next argmax is a clean lowest-index tie.
                if col.norm() <= GS_DEGENERATE_NORM * before {
                    col.fill(Complex64::new(0.0, 0.0));
                }
                g.set_column(j, &col);
            }
        }
        basis.push(Some(q));
    }
    Ok(AnalogSelection {
        matrix: codebook.select(&indices),
        indices,
        basis,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::build_codebook;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, cols: usize) -> CMat {
        CMat::from_fn(r, cols, |_, _| crate::linalg::complex_gaussian(rng, 1.0))
    }

    #[test]
    fn identity_channel_target() {
        let h = CMat::identity(2, 2);
        let t = mmse_target(&[h], 1.0).unwrap();
        assert!((&t.columns[0] - CMat::identity(2, 2)).norm() < 1e-14);
    }

    #[test]
    fn rank_one_target_is_matched_filter() {
        let u = CVec::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8), c(0.0, 0.0)]);
        let mut h = CMat::zeros(3, 2);
        h.set_column(0, &(u.clone() * c(-2.5, 1.0)));
        let t = mmse_target(&[h], 0.3).unwrap();
        let g = t.columns[0].column(0).into_owned();
        // Equal up to a unit phase.
        assert!((u.dotc(&g).norm() - 1.0).abs() < 1e-12);
        assert_eq!(t.zero_columns, vec![(0, 1)]);
        assert!(t.columns[0].column(1).iter().all(|z| *z == c(0.0, 0.0)));
    }

    #[test]
    fn target_columns_are_unit_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let hs: Vec<CMat> = (0..4).map(|_| random_matrix(&mut rng, 8, 3)).collect();
        let t = mmse_target(&hs, 0.1).unwrap();
        for g in &t.columns {
            for col in g.column_iter() {
                assert!((col.norm() - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn nonpositive_reg_rejected() {
        assert!(mmse_target(&[CMat::identity(2, 2)], 0.0).is_err());
        assert!(mmse_target(&[CMat::identity(2, 2)], -1.0).is_err());
    }

    #[test]
    fn exact_codebook_column_is_selected() {
        let cb = build_codebook(8, 16).unwrap();
        let target_col = cb.beam(11).unscale(8f64.sqrt());
        let gamma: Vec<CMat> = (0..3)
            .map(|_| CMat::from_columns(std::slice::from_ref(&target_col)))
            .collect();
        let sel = select_analog(
            &MmseTarget {
                columns: gamma.clone(),
                zero_columns: vec![],
            },
            &cb,
        )
        .unwrap();
        // Brute force over the codebook.
        let brute = (0..16)
            .map(|b| gamma.iter().map(|g| cb.beam(b).dotc(&g.column(0)).norm()).sum::<f64>())
            .enumerate()
            .fold((0, f64::MIN), |a, (b, s)| if s > a.1 { (b, s) } else { a });
        assert_eq!(sel.indices, vec![brute.0]);
        assert_eq!(sel.indices, vec![11]);
        assert_eq!(sel.matrix.column(0), cb.vectors.column(11));
    }

    #[test]
    fn orthogonal_selection_is_gs_fixed_point() {
        // Broadside and endfire beams of a 4-element array are orthogonal.
        let w1 = crate::channel::steering(0.0, 4);
        let w2 = crate::channel::steering(std::f64::consts::FRAC_PI_2, 4);
        let q1 = w1.unscale(2.0);
        let (q2, norm) = orthogonal_component(&w2, std::slice::from_ref(&q1));
        assert!((norm - 2.0).abs() < 1e-14);
        assert!((q2.unscale(norm) - w2.unscale(2.0)).norm() < 1e-14);
    }

    #[test]
    fn deflation_forces_a_different_beam() {
        let cb = build_codebook(8, 8).unwrap();
        let col = cb.beam(5).unscale(8f64.sqrt());
        let g = CMat::from_columns(&[col.clone(), col]);
        let sel = select_analog(
            &MmseTarget {
                columns: vec![g.clone()],
                zero_columns: vec![],
            },
            &cb,
        )
        .unwrap();
        assert_eq!(sel.indices[0], 5);
        assert_ne!(sel.indices[1], 5);

        // Explicit projection leaves nothing for any candidate, so every
        // remaining beam ties at zero and the lowest index wins.
        let q = cb.beam(5).unscale(8f64.sqrt());
        let proj = CMat::identity(8, 8) - &q * q.adjoint();
        let deflated = &proj * g.column(1);
        for b in 0..8 {
            assert!(cb.beam(b).dotc(&deflated).norm() < 1e-12);
        }
        assert_eq!(sel.indices[1], 0);
    }

    #[test]
    fn deflated_choice_matches_brute_force() {
        let cb = build_codebook(8, 8).unwrap();
        let mix = cb.beam(5) * c(0.8, 0.0) + cb.beam(2) * c(0.0, 0.6);
        let col = mix.unscale(mix.norm());
        let g = CMat::from_columns(&[col.clone(), col]);
        let sel = select_analog(
            &MmseTarget {
                columns: vec![g.clone()],
                zero_columns: vec![],
            },
            &cb,
        )
        .unwrap();

        let mut first = (usize::MAX, f64::MIN);
        for b in 0..8 {
            let s = cb.beam(b).dotc(&g.column(0)).norm();
            if s > first.1 {
                first = (b, s);
            }
        }
        assert_eq!(sel.indices[0], first.0);

        let w = cb.beam(first.0);
        let q = w.unscale(w.norm());
        let deflated = (CMat::identity(8, 8) - &q * q.adjoint()) * g.column(1);
        let mut second = (usize::MAX, f64::MIN);
        for b in 0..8 {
            let s = cb.beam(b).dotc(&deflated).norm();
            if b != first.0 && s > second.1 {
                second = (b, s);
            }
        }
        assert_eq!(sel.indices[1], second.0);
        assert_ne!(sel.indices[1], sel.indices[0]);
    }

    #[test]
    fn basis_is_orthonormal_and_deflation_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let cb = build_codebook(16, 64).unwrap();
        let hs: Vec<CMat> = (0..6).map(|_| random_matrix(&mut rng, 16, 4)).collect();
        let t = mmse_target(&hs, 0.5).unwrap();
        let sel = select_analog(&t, &cb).unwrap();
        let qs: Vec<CVec> = sel.basis.iter().flatten().cloned().collect();
        assert_eq!(qs.len(), 4);
        for (i, qi) in qs.iter().enumerate() {
            assert!((qi.norm() - 1.0).abs() < 1e-12);
            for qj in &qs[i + 1..] {
                assert!(qi.dotc(qj).norm() < 1e-10);
            }
        }
        let mut once = random_matrix(&mut rng, 16, 1).column(0).into_owned();
        deflate(&mut once, &qs[0]);
        let mut twice = once.clone();
        deflate(&mut twice, &qs[0]);
        assert!((once - twice).norm() < 1e-12);
    }

    #[test]
    fn scaling_targets_keeps_selection() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cb = build_codebook(8, 32).unwrap();
        let hs: Vec<CMat> = (0..3).map(|_| random_matrix(&mut rng, 8, 2)).collect();
        let t = mmse_target(&hs, 1.0).unwrap();
        let scaled = MmseTarget {
            columns: t.columns.iter().map(|g| g * c(7.5, 0.0)).collect(),
            zero_columns: vec![],
        };
        assert_eq!(
            select_analog(&t, &cb).unwrap().indices,
            select_analog(&scaled, &cb).unwrap().indices
        );
    }

    #[test]
    fn mismatched_codebook_rejected() {
        let cb = build_codebook(4, 8).unwrap();
        let t = MmseTarget {
            columns: vec![CMat::identity(8, 2)],
            zero_columns: vec![],
        };
        assert!(select_analog(&t, &cb).is_err());
    }
}
