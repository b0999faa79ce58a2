use super::bank::FilterBank;
use super::estimate::apply_diagonal;
use super::genie::wiener_gain;
use crate::channel::{spectrum_grid, AngularSpectrum, Geometry, ObservationBatch};
use crate::error::{Error, Result};
use crate::numerics::{circular_convolution, reversed, softmax, ComplexMatrix, TransformQ};

/// Generating kernel of the fast estimator
/// `w_out = w0 * softmax(w0~ * c_hat + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeKernel {
    pub w0: Vec<f64>,
    pub w0_reversed: Vec<f64>,
    pub b: Vec<f64>,
    pub transform: TransformQ,
    pub snapshots: usize,
    pub sigma2: f64,
}

impl FeKernel {
    /// Kernel from samples `f_k` of the transformed spectrum of the
    /// zero-centered path on the DFT grid.
    pub fn from_spectrum_grid(f: &[f64], snapshots: usize, sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0) || snapshots == 0 || f.is_empty() {
            return Err(Error::InvalidArgument(format!("invalid FE kernel T={snapshots} sigma2={sigma2}")));
        }
        let w0: Vec<f64> = f.iter().map(|&v| wiener_gain(v, sigma2)).collect();
        // Every shift has the same eigenvalues, hence the same offset.
        let offset = snapshots as f64 * w0.iter().map(|&g| (-g).ln_1p()).sum::<f64>();
        Self::from_parts(w0, vec![offset; f.len()], snapshots, sigma2)
    }

    pub fn from_parts(w0: Vec<f64>, b: Vec<f64>, snapshots: usize, sigma2: f64) -> Result<Self> {
        if w0.len() != b.len() {
            return Err(Error::DimensionMismatch { expected: w0.len(), actual: b.len() });
        }
        Ok(Self {
            w0_reversed: reversed(&w0),
            transform: TransformQ::Dft(w0.len()),
            w0,
            b,
            snapshots,
            sigma2,
        })
    }

    pub fn len(&self) -> usize {
        self.w0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w0.is_empty()
    }

    /// The equivalent structured bank: filter `i` is `w0` cyclically shifted by `i`.
    pub fn to_structured_bank(&self) -> Result<FilterBank> {
        let k = self.len();
        let filters = (0..k).map(|i| (0..k).map(|j| self.w0[(j + k - i) % k]).collect()).collect();
        FilterBank::from_structured(self.transform, filters, self.b.clone(), self.snapshots, self.sigma2)
    }
}

/// FE kernel for the single-path Laplace model with spread `angular_spread`.
pub fn build_fe_kernel(angular_spread: f64, m: usize, snapshots: usize, sigma2: f64) -> Result<FeKernel> {
    let sp = AngularSpectrum::single(0.0, angular_spread, Geometry::Ula(m))?;
    FeKernel::from_spectrum_grid(&spectrum_grid(&sp, m), snapshots, sigma2)
}

/// `w0 * softmax(w0~ * c_hat + b)`, two circular convolutions.
pub fn fast_filter(kernel: &FeKernel, c_hat: &[f64]) -> Result<Vec<f64>> {
    let mut z = circular_convolution(&kernel.w0_reversed, c_hat)?;
    z.iter_mut().zip(&kernel.b).for_each(|(v, b)| *v += b);
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("fast estimator logits".into()));
    }
    circular_convolution(&kernel.w0, &softmax(&z))
}

pub fn fast_estimate(kernel: &FeKernel, batch: &ObservationBatch) -> Result<ComplexMatrix> {
    if batch.transform != kernel.transform {
        return Err(Error::BankMismatch(format!("batch statistic uses {}, FE uses {}", batch.transform, kernel.transform)));
    }
    if batch.snapshots() != kernel.snapshots || (batch.sigma2 - kernel.sigma2).abs() > 1e-12 * kernel.sigma2 {
        return Err(Error::BankMismatch("FE kernel built for a different T or sigma2".into()));
    }
    let w = fast_filter(kernel, &batch.c_hat)?;
    apply_diagonal(&kernel.transform, &w, &batch.y)
}
