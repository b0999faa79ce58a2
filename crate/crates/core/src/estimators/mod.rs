//! Non-learned estimators: genie MMSE, gridded (GE), structured (SE) and
//! fast (FE) estimators.

mod bank;
mod estimate;
mod fast;
mod genie;
#[cfg(test)]
mod tests;

pub use bank::{
    bank_from_filters, build_filter_bank, fit_structured_weights, BankFilters, BankMode, CovarianceBank, FilterBank,
    NormalSolver, StructuredBasis, NORMAL_RIDGE,
};
pub use estimate::{
    apply_diagonal, gridded_estimate, gridded_filter, gridded_weights, linear_estimate, structured_estimate,
    structured_filter, structured_weights,
};
pub use fast::{build_fe_kernel, fast_estimate, fast_filter, FeKernel};
pub use genie::{filter_offset, genie_filter, genie_filter_from_eigen, offset_from_eigenvalues, offset_of_filter, wiener_gain};
