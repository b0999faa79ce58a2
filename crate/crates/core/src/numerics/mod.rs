//! Complex linear algebra and FFT primitives.

mod eig;
mod fft;
mod matrix;

pub use eig::{hermitian_eig, HermitianEigen};
pub use fft::{
    apply_transform, circular_convolution, circular_correlation, dft_matrix, fft_in_place, ifft_in_place,
    reversed, Direction, TransformQ,
};
pub use matrix::ComplexMatrix;

/// Relative asymmetry tolerated by [`hermitian_eig`].
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Relative imaginary residue tolerated after a real circular convolution.
pub const CONV_RESIDUE_TOL: f64 = 1e-10;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Numerically stable softmax (max-subtracted).
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|&v| (v - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_survives_large_logits() {
        let p = softmax(&[1000.0, 1000.0, -1000.0]);
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15 && p[2] == 0.0);
        let p = softmax(&[3.0]);
        assert_eq!(p, vec![1.0]);
    }
}
