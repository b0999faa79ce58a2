//! Per-batch error and rate metrics.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::ComplexMatrix;

/// `||H - H^||_F^2 / (M T)`.
pub fn normalized_mse(h: &ComplexMatrix, h_est: &ComplexMatrix) -> Result<f64> {
    Ok(h.sub(h_est)?.frobenius_norm_sqr() / (h.rows() * h.cols()) as f64)
}

/// `log2(1 + |h^^H h|^2 / (sigma^2 ||h^||^2))`; an all-zero estimate gives 0.
pub fn matched_filter_rate(h_est: &[Complex64], h: &[Complex64], sigma2: f64) -> Result<f64> {
    if h_est.len() != h.len() {
        return Err(Error::DimensionMismatch { expected: h.len(), actual: h_est.len() });
    }
    let norm2: f64 = h_est.iter().map(|z| z.norm_sqr()).sum();
    if norm2 == 0.0 {
        return Ok(0.0);
    }
    let inner: Complex64 = h_est.iter().zip(h).map(|(a, b)| a.conj() * b).sum();
    Ok((inner.norm_sqr() / (sigma2 * norm2)).ln_1p() / std::f64::consts::LN_2)
}

/// Rate of the estimate of the last snapshot.
pub fn last_snapshot_rate(h: &ComplexMatrix, h_est: &ComplexMatrix, sigma2: f64) -> Result<f64> {
    let t = h.cols().checked_sub(1).ok_or_else(|| Error::InvalidArgument("empty batch".into()))?;
    matched_filter_rate(&h_est.column(t), &h.column(t), sigma2)
}
