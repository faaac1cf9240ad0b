//! Steering-vector codebooks for analog beam search and the angle
//! dictionaries used as the sparse basis for channel estimation.
//!
//! Both use the same grid: `B` angles uniform in the angle domain over
//! `[-pi/2, pi/2)`, left-closed. The right endpoint is excluded because
//! `sin(-pi/2)` and `sin(pi/2)` produce the same half-wavelength steering
//! vector.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::channel::steering;
use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec};

const MODULE: &str = "codebook";

fn uniform_angle_grid(size: usize) -> Vec<f64> {
    (0..size).map(|i| -FRAC_PI_2 + i as f64 * (PI / size as f64)).collect()
}

fn steering_matrix(angles: &[f64], num_antennas: usize) -> CMat {
    let cols: Vec<CVec> = angles.iter().map(|&a| steering(a, num_antennas)).collect();
    CMat::from_columns(&cols)
}

/// Candidate analog beams. Every entry has unit modulus.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamCodebook {
    /// `num_antennas x num_beams`.
    pub vectors: CMat,
    pub angles: Vec<f64>,
}

impl BeamCodebook {
    pub fn num_antennas(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn num_beams(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn beam(&self, index: usize) -> CVec {
        self.vectors.column(index).into_owned()
    }

    /// Gathers the listed beams into a `num_antennas x indices.len()` matrix.
    pub fn select(&self, indices: &[usize]) -> CMat {
        self.vectors.select_columns(indices)
    }
}

pub fn build_codebook(num_antennas: usize, num_beams: usize) -> Result<BeamCodebook> {
    if num_beams == 0 {
        return Err(Error::invalid(MODULE, "codebook needs at least one beam"));
    }
    if num_antennas == 0 {
        return Err(Error::invalid(MODULE, "codebook needs at least one antenna"));
    }
    let angles = uniform_angle_grid(num_beams);
    Ok(BeamCodebook {
        vectors: steering_matrix(&angles, num_antennas),
        angles,
    })
}

/// Sparse-representation basis for the angular domain.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleDictionary {
    /// `num_antennas x L_grid`.
    pub atoms: CMat,
    pub grid_angles: Vec<f64>,
}

impl AngleDictionary {
    pub fn num_antennas(&self) -> usize {
        self.atoms.nrows()
    }

    pub fn grid_size(&self) -> usize {
        self.atoms.ncols()
    }

    /// Index of the grid angle closest to `angle`, if it lies within `tol` radians.
    pub fn grid_index(&self, angle: f64, tol: f64) -> Option<usize> {
        self.grid_angles.iter().position(|&g| (g - angle).abs() <= tol)
    }
}

/// Dictionary with `180 / resolution_deg` atoms. The resolution must divide 180.
pub fn build_dictionary(num_antennas: usize, resolution_deg: f64) -> Result<AngleDictionary> {
    let grid_size = grid_size_for_resolution(resolution_deg)?;
    if num_antennas == 0 {
        return Err(Error::invalid(MODULE, "dictionary needs at least one antenna"));
    }
    let grid_angles = uniform_angle_grid(grid_size);
    Ok(AngleDictionary {
        atoms: steering_matrix(&grid_angles, num_antennas),
        grid_angles,
    })
}

/// `180 / resolution_deg` when that is a positive integer.
pub fn grid_size_for_resolution(resolution_deg: f64) -> Result<usize> {
    if !(resolution_deg.is_finite() && resolution_deg > 0.0 && resolution_deg <= 180.0) {
        return Err(Error::invalid(
            MODULE,
            format!("resolution must lie in (0, 180] degrees, got {resolution_deg}"),
        ));
    }
    let ratio = 180.0 / resolution_deg;
    let rounded = ratio.round();
    if (ratio - rounded).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::invalid(
            MODULE,
            format!("resolution {resolution_deg} degrees does not divide 180"),
        ));
    }
    Ok(rounded as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::array_response;
    use num_complex::Complex64;

    #[test]
    fn default_sized_codebook_is_constant_modulus() {
        let cb = build_codebook(32, 64).unwrap();
        assert_eq!(cb.vectors.shape(), (32, 64));
        assert!(cb.vectors.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
        assert!(cb.angles.windows(2).all(|w| w[0] < w[1]));
        assert!(cb.angles[0] >= -FRAC_PI_2 && *cb.angles.last().unwrap() < FRAC_PI_2);
    }

    #[test]
    fn single_beam_points_at_minus_ninety() {
        let cb = build_codebook(4, 1).unwrap();
        let expect = [1.0, -1.0, 1.0, -1.0];
        for (z, e) in cb.vectors.column(0).iter().zip(expect) {
            assert!((z - Complex64::new(e, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn gram_diagonal_equals_antenna_count() {
        let cb = build_codebook(7, 11).unwrap();
        let gram = cb.vectors.adjoint() * &cb.vectors;
        for i in 0..11 {
            assert!((gram[(i, i)] - Complex64::new(7.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_beams_rejected() {
        assert!(build_codebook(4, 0).is_err());
    }

    #[test]
    fn default_resolution_gives_64_atoms() {
        let d = build_dictionary(32, 2.8125).unwrap();
        assert_eq!(d.atoms.shape(), (32, 64));
    }

    #[test]
    fn ninety_degree_dictionary() {
        let d = build_dictionary(4, 90.0).unwrap();
        assert_eq!(d.grid_size(), 2);
        assert!((d.grid_angles[0] + FRAC_PI_2).abs() < 1e-15);
        assert_eq!(d.grid_angles[1], 0.0);
        for z in d.atoms.column(1).iter() {
            assert!((z - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn atoms_are_steering_vectors() {
        let d = build_dictionary(9, 7.5).unwrap();
        for (i, &g) in d.grid_angles.iter().enumerate() {
            let a = array_response(g, 9).unwrap();
            assert!((d.atoms.column(i) - a).norm() < 1e-12);
        }
    }

    #[test]
    fn non_dividing_resolution_rejected() {
        assert!(build_dictionary(8, 7.0).is_err());
        assert!(build_dictionary(8, 0.0).is_err());
        assert!(build_dictionary(8, -3.0).is_err());
    }

    #[test]
    fn codebook_and_dictionary_coincide() {
        let cb = build_codebook(16, 64).unwrap();
        let d = build_dictionary(16, 2.8125).unwrap();
        assert_eq!(cb.vectors, d.atoms);
        assert_eq!(cb.angles, d.grid_angles);
    }

    #[test]
    fn no_duplicate_atoms() {
        for &(n, res) in &[(32usize, 2.8125), (16, 5.625), (4, 45.0)] {
            let d = build_dictionary(n, res).unwrap();
            let gram = d.atoms.adjoint() * &d.atoms;
            let l = d.grid_size();
            let mut coherence: f64 = 0.0;
            for i in 0..l {
                for j in 0..l {
                    if i != j {
                        coherence = coherence.max(gram[(i, j)].norm() / n as f64);
                    }
                }
            }
            assert!(coherence < 1.0, "n = {n}: coherence {coherence}");
        }
    }
}
