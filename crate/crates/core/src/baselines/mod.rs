//! Comparison estimators: maximum-likelihood covariance estimation (full and
//! circulant) and genie-aided multiple-measurement OMP.

mod ml;
mod omp;

pub use ml::{ml_circulant_estimate, ml_circulant_gains, ml_full, ml_full_estimate};
pub use omp::{build_dictionary, genie_omp_estimate, omp_mmv, GenieMetric, SparseApprox, DEFAULT_K_MAX};
