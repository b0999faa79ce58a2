//! Conditionally Gaussian channel model: angular spectra, covariance
//! synthesis, scenario priors and observation batches.

mod batch;
mod covariance;
pub mod quadrature;
mod scenario;
mod spectrum;

pub use batch::{adaptive_update, draw_batch, transform_statistic, ChannelFactor, ObservationBatch};
pub use covariance::{
    circulant_approx, circulant_from_eigenvalues, covariance_ula, covariance_ura, ula_lags, CovarianceModel,
    DEFAULT_QUADRATURE_POINTS, MIN_QUADRATURE_POINTS,
};
pub use scenario::{db_to_linear, sample_scenario, sigma2_from_snr_db, PlacedUser, ScenarioDraw, ScenarioKind, DEG};
pub use spectrum::{
    elevation_density, endfire_cell_average, laplace_density, laplace_normalizer, spectrum_grid,
    transformed_spectrum, wrap_angle, wrap_distance, AngularSpectrum, Geometry, PathComponent,
};

use crate::error::Result;

/// Covariance for any geometry.
pub fn covariance(spectrum: &AngularSpectrum, quadrature_points: usize) -> Result<CovarianceModel> {
    match spectrum.geometry() {
        Geometry::Ula(m) => covariance_ula(spectrum, m, quadrature_points),
        Geometry::Ura { .. } => covariance_ura(spectrum, quadrature_points),
    }
}
