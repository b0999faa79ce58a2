use crate::channel::CovarianceModel;
use crate::error::{Error, Result};
use crate::numerics::{hermitian_eig, ComplexMatrix, HermitianEigen};

fn check_sigma2(sigma2: f64) -> Result<()> {
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::InvalidArgument(format!("sigma2 must be positive and finite, got {sigma2}")));
    }
    Ok(())
}

/// Wiener gain `lambda / (lambda + sigma^2)` with tiny negative eigenvalues
/// treated as zero.
pub fn wiener_gain(lambda: f64, sigma2: f64) -> f64 {
    let l = lambda.max(0.0);
    l / (l + sigma2)
}

/// `W = C (C + sigma^2 I)^{-1} = V diag(lambda / (lambda + sigma^2)) V^H`.
pub fn genie_filter_from_eigen(eig: &HermitianEigen, sigma2: f64) -> Result<ComplexMatrix> {
    check_sigma2(sigma2)?;
    Ok(eig.reconstruct_with(|l| wiener_gain(l, sigma2)))
}

pub fn genie_filter(c: &CovarianceModel, sigma2: f64) -> Result<ComplexMatrix> {
    check_sigma2(sigma2)?;
    genie_filter_from_eigen(&c.eigen()?, sigma2)
}

/// `T sum_m [log sigma^2 - log(lambda_m + sigma^2)] = T log|I - W|`.
pub fn offset_from_eigenvalues(eigenvalues: &[f64], sigma2: f64, t: usize) -> f64 {
    let ls = sigma2.ln();
    t as f64 * eigenvalues.iter().map(|&l| ls - (l.max(0.0) + sigma2).ln()).sum::<f64>()
}

pub fn filter_offset(c: &CovarianceModel, sigma2: f64, t: usize) -> Result<f64> {
    check_sigma2(sigma2)?;
    Ok(offset_from_eigenvalues(&c.eigen()?.values, sigma2, t))
}

/// `T log|I - W|` for a filter given directly (eigenvalues of `W` in `[0, 1)`).
pub fn offset_of_filter(w: &ComplexMatrix, t: usize) -> Result<f64> {
    let eig = hermitian_eig(w)?;
    if let Some(&bad) = eig.values.iter().find(|&&g| g >= 1.0) {
        return Err(Error::InvalidArgument(format!("filter eigenvalue {bad} outside [0, 1)")));
    }
    Ok(t as f64 * eig.values.iter().map(|&g| (-g).ln_1p()).sum::<f64>())
}
