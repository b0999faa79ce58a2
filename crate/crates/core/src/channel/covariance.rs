//! Covariance synthesis `C = int g(theta) a(theta) a(theta)^H dtheta` for
//! uniform linear and rectangular arrays, and the circulant approximation.
//!
//! Steering vectors use `[a(theta)]_m = exp(+i pi m sin(theta))`, so
//! `[C]_{mn} = int g(theta) exp(i pi (m - n) sin(theta)) dtheta` and the
//! DFT bin `k` of `Q = F` lines up with `u = 2 pi k / M` of the transformed
//! spectrum.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use super::quadrature::Rule;
use super::spectrum::{spectrum_grid, AngularSpectrum, Geometry};
use crate::error::{Error, Result};
use crate::numerics::{hermitian_eig, ifft_in_place, ComplexMatrix, HermitianEigen};

/// Default total number of azimuth quadrature nodes.
pub const DEFAULT_QUADRATURE_POINTS: usize = 4096;
pub const MIN_QUADRATURE_POINTS: usize = 256;

/// Nodes whose weighted density falls below this are skipped.
const NEGLIGIBLE_WEIGHT: f64 = 1e-22;

#[derive(Debug, Clone)]
pub struct CovarianceModel {
    pub matrix: ComplexMatrix,
    /// First column (Toeplitz and circulant instances).
    pub first_column: Option<Vec<Complex64>>,
    pub source: AngularSpectrum,
}

impl CovarianceModel {
    pub fn antennas(&self) -> usize {
        self.matrix.rows()
    }

    pub fn eigen(&self) -> Result<HermitianEigen> {
        hermitian_eig(&self.matrix)
    }
}

fn hermitian_toeplitz(col: &[Complex64]) -> ComplexMatrix {
    let m = col.len();
    ComplexMatrix::from_fn(m, m, |r, c| if r >= c { col[r - c] } else { col[c - r].conj() })
}

fn check_points(quadrature_points: usize) -> Result<()> {
    if quadrature_points < MIN_QUADRATURE_POINTS {
        return Err(Error::InvalidArgument(format!(
            "quadrature_points must be at least {MIN_QUADRATURE_POINTS}, got {quadrature_points}"
        )));
    }
    Ok(())
}

/// First column `c_k = int g(theta) exp(i pi k sin theta) dtheta`, k = 0..m-1,
/// with no trace normalization.
pub fn ula_lags(spectrum: &AngularSpectrum, m: usize, quadrature_points: usize) -> Vec<Complex64> {
    let rule = Rule::composite(-PI, PI, &spectrum.azimuth_kinks(), quadrature_points);
    let mut col = vec![Complex64::new(0.0, 0.0); m];
    for (&theta, &w) in rule.nodes.iter().zip(&rule.weights) {
        let weight = w * spectrum.density(theta);
        if weight < NEGLIGIBLE_WEIGHT {
            continue;
        }
        let step = Complex64::from_polar(1.0, PI * theta.sin());
        let mut z = Complex64::new(weight, 0.0);
        for c in col.iter_mut() {
            *c += z;
            z *= step;
        }
    }
    col
}

/// Hermitian Toeplitz ULA covariance with unit diagonal (trace M).
pub fn covariance_ula(spectrum: &AngularSpectrum, m: usize, quadrature_points: usize) -> Result<CovarianceModel> {
    if m == 0 {
        return Err(Error::InvalidArgument("M must be at least 1".into()));
    }
    check_points(quadrature_points)?;
    let mut col = ula_lags(spectrum, m, quadrature_points);
    let power = col[0].re;
    if !(power > 0.0) {
        return Err(Error::NonFinite(format!("covariance power {power}")));
    }
    col.iter_mut().for_each(|c| *c /= power);
    col[0] = Complex64::new(1.0, 0.0);
    Ok(CovarianceModel {
        matrix: hermitian_toeplitz(&col),
        first_column: Some(col),
        source: spectrum.with_geometry(Geometry::Ula(m)),
    })
}

/// Circulant matrix `F^H diag(f(2 pi k / M)) F` with the transformed spectrum
/// sampled on the DFT grid.
pub fn circulant_approx(model: &CovarianceModel, spectrum: &AngularSpectrum) -> Result<CovarianceModel> {
    if !matches!(spectrum.geometry(), Geometry::Ula(_)) || model.first_column.is_none() {
        return Err(Error::InvalidArgument("circulant approximation needs a ULA covariance".into()));
    }
    let m = model.antennas();
    let eig = spectrum_grid(spectrum, m);
    Ok(circulant_from_eigenvalues(&eig, spectrum.clone()))
}

/// Circulant `F^H diag(eigenvalues) F` for the unitary DFT `F`.
pub fn circulant_from_eigenvalues(eigenvalues: &[f64], source: AngularSpectrum) -> CovarianceModel {
    let m = eigenvalues.len();
    let mut col: Vec<Complex64> = eigenvalues.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    ifft_in_place(&mut col);
    col.iter_mut().for_each(|c| *c /= m as f64);
    let matrix = ComplexMatrix::from_fn(m, m, |r, c| col[(r + m - c) % m]);
    CovarianceModel { matrix, first_column: Some(col), source }
}

/// Nested block-Toeplitz URA covariance. Antenna `(h, v)` has index
/// `h * M_V + v`; the entry for `(m, p), (n, q)` is
/// `int int g(theta, phi) exp(i pi ((m - n) sin theta + (p - q) cos theta sin phi))`.
pub fn covariance_ura(spectrum: &AngularSpectrum, quadrature_points: usize) -> Result<CovarianceModel> {
    let Geometry::Ura { horizontal, vertical } = spectrum.geometry() else {
        return Err(Error::InvalidArgument("covariance_ura needs a URA geometry".into()));
    };
    if horizontal == 0 || vertical == 0 {
        return Err(Error::InvalidArgument("URA dimensions must be at least 1".into()));
    }
    check_points(quadrature_points)?;
    let az = Rule::composite(-PI, PI, &spectrum.azimuth_kinks(), quadrature_points);
    let el = Rule::composite(-FRAC_PI_2, FRAC_PI_2, &spectrum.elevation_kinks(), quadrature_points / 2);
    // lag table over dh in 0..H, dv in -(V-1)..V; negative dh follow by symmetry
    let nv = 2 * vertical - 1;
    let mut lags = vec![Complex64::new(0.0, 0.0); horizontal * nv];
    for (&theta, &wt) in az.nodes.iter().zip(&az.weights) {
        let (s, c) = theta.sin_cos();
        let h_step = Complex64::from_polar(1.0, PI * s);
        for (&phi, &wp) in el.nodes.iter().zip(&el.weights) {
            let weight = wt * wp * spectrum.density_2d(theta, phi);
            if weight < NEGLIGIBLE_WEIGHT {
                continue;
            }
            let v_step = Complex64::from_polar(1.0, PI * c * phi.sin());
            let v_first = v_step.powi(-(vertical as i32 - 1));
            let mut zh = Complex64::new(weight, 0.0);
            for dh in 0..horizontal {
                let mut z = zh * v_first;
                for slot in &mut lags[dh * nv..(dh + 1) * nv] {
                    *slot += z;
                    z *= v_step;
                }
                zh *= h_step;
            }
        }
    }
    let lag = |dh: isize, dv: isize| -> Complex64 {
        if dh >= 0 {
            lags[dh as usize * nv + (dv + vertical as isize - 1) as usize]
        } else {
            lags[(-dh) as usize * nv + (-dv + vertical as isize - 1) as usize].conj()
        }
    };
    let power = lag(0, 0).re;
    if !(power > 0.0) {
        return Err(Error::NonFinite(format!("covariance power {power}")));
    }
    let m = horizontal * vertical;
    let mut matrix = ComplexMatrix::from_fn(m, m, |r, c| {
        let (hm, vp) = ((r / vertical) as isize, (r % vertical) as isize);
        let (hn, vq) = ((c / vertical) as isize, (c % vertical) as isize);
        lag(hm - hn, vp - vq) / power
    });
    for i in 0..m {
        matrix[(i, i)] = Complex64::new(1.0, 0.0);
    }
    Ok(CovarianceModel { matrix, first_column: None, source: spectrum.clone() })
}
