//! Complex dense matrix aliases and a few helpers shared across modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// One draw from CN(0, std²).
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, std: f64) -> Complex64 {
    let scale = std / std::f64::consts::SQRT_2;
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * scale, im * scale)
}

/// Frobenius norm of `a - b` relative to the Frobenius norm of `b`.
/// Falls back to the absolute error when `b` is zero.
pub fn rel_frobenius_error(a: &CMat, b: &CMat) -> f64 {
    let diff = (a - b).norm();
    let base = b.norm();
    if base > 0.0 {
        diff / base
    } else {
        diff
    }
}
