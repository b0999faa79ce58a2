use crate::channel::ObservationBatch;
use crate::error::{Error, Result};
use crate::estimators::{apply_diagonal, genie_filter_from_eigen};
use crate::numerics::{hermitian_eig, ComplexMatrix, HermitianEigen, TransformQ};

/// `P_+((sigma^2 / T) C_hat - sigma^2 I)`: the ML covariance estimate, with
/// negative eigenvalues set to zero.
pub fn ml_full(c_hat: &ComplexMatrix, sigma2: f64, snapshots: usize) -> Result<ComplexMatrix> {
    Ok(ml_full_eigen(c_hat, sigma2, snapshots)?.reconstruct())
}

fn ml_full_eigen(c_hat: &ComplexMatrix, sigma2: f64, snapshots: usize) -> Result<HermitianEigen> {
    if !(sigma2 > 0.0) || snapshots == 0 {
        return Err(Error::InvalidArgument(format!("invalid sigma2={sigma2} T={snapshots}")));
    }
    let mut eig = hermitian_eig(c_hat)?;
    let s = sigma2 / snapshots as f64;
    eig.values.iter_mut().for_each(|l| *l = (*l * s - sigma2).max(0.0));
    Ok(eig)
}

/// Wiener filter built from [`ml_full`], applied to the batch.
pub fn ml_full_estimate(batch: &ObservationBatch) -> Result<ComplexMatrix> {
    let eig = ml_full_eigen(&batch.sample_covariance(), batch.sigma2, batch.snapshots())?;
    genie_filter_from_eigen(&eig, batch.sigma2)?.matmul(&batch.y)
}

/// Gains `c / (c + sigma^2)` with `c = [s - sigma^2]_+` and
/// `s = (1/T) sum_t |F y_t|^2` (unitary DFT).
pub fn ml_circulant_gains(y: &ComplexMatrix, sigma2: f64) -> Result<Vec<f64>> {
    if !(sigma2 > 0.0) {
        return Err(Error::InvalidArgument(format!("sigma2 must be positive, got {sigma2}")));
    }
    let q = TransformQ::Dft(y.rows());
    let mut s = vec![0.0; y.rows()];
    for t in 0..y.cols() {
        for (acc, z) in s.iter_mut().zip(q.forward(&y.column(t))?) {
            *acc += z.norm_sqr();
        }
    }
    let t = y.cols() as f64;
    Ok(s.into_iter()
        .map(|v| {
            let c = (v / t - sigma2).max(0.0);
            c / (c + sigma2)
        })
        .collect())
}

pub fn ml_circulant_estimate(batch: &ObservationBatch) -> Result<ComplexMatrix> {
    let gains = ml_circulant_gains(&batch.y, batch.sigma2)?;
    apply_diagonal(&TransformQ::Dft(batch.antennas()), &gains, &batch.y)
}
