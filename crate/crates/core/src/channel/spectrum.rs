//! Angular power spectra: the wrapped Laplace path density, multi-path
//! mixtures and the ULA-transformed spectrum `f(u)`.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};

const TWO_PI: f64 = 2.0 * PI;

/// Wraps an angle to `[-pi, pi)`.
pub fn wrap_angle(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(TWO_PI) - PI;
    if y >= PI {
        y - TWO_PI
    } else {
        y
    }
}

/// Wrap-around distance on the circle, in `[0, pi]`.
pub fn wrap_distance(a: f64, b: f64) -> f64 {
    wrap_angle(a - b).abs()
}

/// `Z` such that `exp(-d(theta, delta) / spread) / Z` integrates to one over
/// a period.
pub fn laplace_normalizer(angular_spread: f64) -> f64 {
    2.0 * angular_spread * (-(-PI / angular_spread).exp_m1())
}

/// Wrapped Laplace power density of one path.
pub fn laplace_density(theta: f64, delta: f64, angular_spread: f64) -> f64 {
    debug_assert!(angular_spread > 0.0);
    (-wrap_distance(delta, theta) / angular_spread).exp() / laplace_normalizer(angular_spread)
}

/// Laplace density in elevation, truncated to `[-pi/2, pi/2]` and normalized there.
pub fn elevation_density(phi: f64, center: f64, angular_spread: f64) -> f64 {
    if !(-FRAC_PI_2..=FRAC_PI_2).contains(&phi) {
        return 0.0;
    }
    let s = angular_spread;
    let z = s * (2.0 - (-(FRAC_PI_2 - center) / s).exp() - (-(FRAC_PI_2 + center) / s).exp());
    (-(phi - center).abs() / s).exp() / z
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Geometry {
    Ula(usize),
    Ura { horizontal: usize, vertical: usize },
}

impl Geometry {
    pub fn antennas(&self) -> usize {
        match *self {
            Geometry::Ula(m) => m,
            Geometry::Ura { horizontal, vertical } => horizontal * vertical,
        }
    }
}

/// One propagation path: azimuth center, elevation center (URA only) and
/// relative power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathComponent {
    pub azimuth: f64,
    pub elevation: f64,
    pub gain: f64,
}

/// Mixture of Laplace paths sharing a common angular spread.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularSpectrum {
    paths: Vec<PathComponent>,
    angular_spread: f64,
    geometry: Geometry,
}

impl AngularSpectrum {
    pub fn new(paths: Vec<PathComponent>, angular_spread: f64, geometry: Geometry) -> Result<Self> {
        if !(angular_spread > 0.0) {
            return Err(Error::InvalidArgument(format!("angular spread must be positive, got {angular_spread}")));
        }
        if paths.is_empty() {
            return Err(Error::InvalidArgument("spectrum needs at least one path".into()));
        }
        let total: f64 = paths.iter().map(|p| p.gain).sum();
        if paths.iter().any(|p| p.gain < 0.0) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("path gains must be nonnegative and sum to 1, got {total}")));
        }
        let paths = paths
            .into_iter()
            .map(|p| PathComponent { azimuth: wrap_angle(p.azimuth), ..p })
            .collect();
        Ok(Self { paths, angular_spread, geometry })
    }

    /// Single path with unit gain at `azimuth`.
    pub fn single(azimuth: f64, angular_spread: f64, geometry: Geometry) -> Result<Self> {
        Self::new(vec![PathComponent { azimuth, elevation: 0.0, gain: 1.0 }], angular_spread, geometry)
    }

    pub fn paths(&self) -> &[PathComponent] {
        &self.paths
    }

    pub fn angular_spread(&self) -> f64 {
        self.angular_spread
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn with_geometry(&self, geometry: Geometry) -> Self {
        Self { geometry, ..self.clone() }
    }

    /// Same spectrum with every path center negated.
    pub fn mirrored(&self) -> Self {
        let paths = self
            .paths
            .iter()
            .map(|p| PathComponent { azimuth: wrap_angle(-p.azimuth), ..*p })
            .collect();
        Self { paths, ..self.clone() }
    }

    /// Azimuth power density `g(theta)`.
    pub fn density(&self, theta: f64) -> f64 {
        self.paths
            .iter()
            .map(|p| p.gain * laplace_density(theta, p.azimuth, self.angular_spread))
            .sum()
    }

    /// Joint azimuth/elevation density: per path a product of an azimuth and
    /// an elevation Laplace factor.
    pub fn density_2d(&self, theta: f64, phi: f64) -> f64 {
        self.paths
            .iter()
            .map(|p| {
                p.gain
                    * laplace_density(theta, p.azimuth, self.angular_spread)
                    * elevation_density(phi, p.elevation, self.angular_spread)
            })
            .sum()
    }

    /// Azimuth points where `g` is not smooth (path centers and antipodes).
    pub fn azimuth_kinks(&self) -> Vec<f64> {
        let mut k: Vec<f64> = self
            .paths
            .iter()
            .flat_map(|p| [p.azimuth, wrap_angle(p.azimuth + PI)])
            .collect();
        k.sort_by(f64::total_cmp);
        k.dedup();
        k
    }

    pub fn elevation_kinks(&self) -> Vec<f64> {
        let mut k: Vec<f64> = self
            .paths
            .iter()
            .map(|p| p.elevation)
            .filter(|e| e.abs() < FRAC_PI_2)
            .collect();
        k.sort_by(f64::total_cmp);
        k.dedup();
        k
    }
}

/// ULA-transformed spectrum
/// `f(u) = 2 pi [g(asin(u/pi)) + g(pi - asin(u/pi))] / sqrt(pi^2 - u^2)`.
///
/// The endpoints `|u| = pi` are singular and rejected.
pub fn transformed_spectrum(u: f64, spectrum: &AngularSpectrum) -> Result<f64> {
    if !(u.abs() < PI) {
        return Err(Error::SingularEndpoint(u));
    }
    let theta = (u / PI).asin();
    let g = spectrum.density(theta) + spectrum.density(PI - theta);
    Ok(TWO_PI * g / (PI * PI - u * u).sqrt())
}

/// Average of `f` over the u-cell of width `2 pi / m` centered on `u = -pi`
/// (equivalently `+pi`), which stays finite where the point value does not.
pub fn endfire_cell_average(spectrum: &AngularSpectrum, m: usize) -> f64 {
    // The cell maps to |sin(theta)| >= 1 - 1/m; f averaged over it is m times
    // the power of g in those angular sectors.
    let edge = (1.0 - 1.0 / m as f64).clamp(-1.0, 1.0).asin();
    let sectors = [(edge, PI - edge), (-PI + edge, -edge)];
    let mass: f64 = sectors
        .iter()
        .map(|&(a, b)| super::quadrature::integrate_with_kinks(|t| spectrum.density(t), a, b, &spectrum.azimuth_kinks(), 512))
        .sum();
    m as f64 * mass
}

/// Transform-domain sample `f(2 pi k / m)` on the wrapped grid, substituting
/// the cell average at the singular endpoint.
pub fn spectrum_grid(spectrum: &AngularSpectrum, m: usize) -> Vec<f64> {
    (0..m)
        .map(|k| {
            let u = wrap_angle(TWO_PI * k as f64 / m as f64);
            transformed_spectrum(u, spectrum).unwrap_or_else(|_| endfire_cell_average(spectrum, m))
        })
        .collect()
}
