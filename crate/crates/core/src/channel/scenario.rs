//! Priors over the angular spectrum `p(delta)`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::spectrum::{AngularSpectrum, Geometry, PathComponent};
use crate::error::Result;

pub const DEG: f64 = PI / 180.0;

/// Link budget of the placed-user scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlacedUser {
    pub path_loss_exponent: f64,
    pub shadow_fading_db: f64,
    pub min_distance_m: f64,
    pub max_distance_m: f64,
    pub snr_edge_db: f64,
    /// Per-path angular spread in radians.
    pub angular_spread: f64,
    pub paths: usize,
}

impl Default for PlacedUser {
    fn default() -> Self {
        Self {
            path_loss_exponent: 3.5,
            shadow_fading_db: 0.0,
            min_distance_m: 1000.0,
            max_distance_m: 1500.0,
            snr_edge_db: -10.0,
            angular_spread: 5.0 * DEG,
            paths: 3,
        }
    }
}

impl PlacedUser {
    /// Mean SNR in dB at distance `d` (no shadowing).
    pub fn snr_db_at(&self, distance_m: f64) -> f64 {
        self.snr_edge_db - 10.0 * self.path_loss_exponent * (distance_m / self.max_distance_m).log10()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScenarioKind {
    /// One path, uniform center angle.
    SinglePath { angular_spread: f64 },
    /// Several paths with iid uniform centers and gains uniform in [0, 1],
    /// normalized to sum 1.
    MultiPath { paths: usize, angular_spread: f64 },
    PlacedUser(PlacedUser),
}

impl ScenarioKind {
    pub fn three_path(angular_spread: f64) -> Self {
        ScenarioKind::MultiPath { paths: 3, angular_spread }
    }

    pub fn angular_spread(&self) -> f64 {
        match *self {
            ScenarioKind::SinglePath { angular_spread } | ScenarioKind::MultiPath { angular_spread, .. } => {
                angular_spread
            }
            ScenarioKind::PlacedUser(p) => p.angular_spread,
        }
    }

    pub fn is_single_path(&self) -> bool {
        matches!(self, ScenarioKind::SinglePath { .. } | ScenarioKind::MultiPath { paths: 1, .. })
    }
}

/// One draw from the prior.
#[derive(Debug, Clone)]
pub struct ScenarioDraw {
    pub spectrum: AngularSpectrum,
    /// Only for placed users.
    pub distance_m: Option<f64>,
    /// Only for placed users.
    pub snr_db: Option<f64>,
}

fn random_paths<R: Rng + ?Sized>(rng: &mut R, n: usize, uniform_gains: bool, geometry: Geometry) -> Vec<PathComponent> {
    let mut paths: Vec<PathComponent> = (0..n)
        .map(|_| {
            let azimuth = rng.random_range(-PI..PI);
            let elevation = match geometry {
                Geometry::Ula(_) => 0.0,
                Geometry::Ura { .. } => rng.random_range(-PI / 6.0..PI / 6.0),
            };
            let gain = if uniform_gains { rng.random_range(0.0..1.0) } else { 1.0 };
            PathComponent { azimuth, elevation, gain }
        })
        .collect();
    let total: f64 = paths.iter().map(|p| p.gain).sum();
    if total > 0.0 {
        paths.iter_mut().for_each(|p| p.gain /= total);
    } else {
        paths.iter_mut().for_each(|p| p.gain = 1.0 / n as f64);
    }
    // exact unit sum after normalization rounding
    let drift = 1.0 - paths.iter().map(|p| p.gain).sum::<f64>();
    if let Some(p) = paths.iter_mut().max_by(|a, b| a.gain.total_cmp(&b.gain)) {
        p.gain += drift;
    }
    paths
}

pub fn sample_scenario<R: Rng + ?Sized>(kind: &ScenarioKind, geometry: Geometry, rng: &mut R) -> Result<ScenarioDraw> {
    match *kind {
        ScenarioKind::SinglePath { angular_spread } => Ok(ScenarioDraw {
            spectrum: AngularSpectrum::new(random_paths(rng, 1, false, geometry), angular_spread, geometry)?,
            distance_m: None,
            snr_db: None,
        }),
        ScenarioKind::MultiPath { paths, angular_spread } => Ok(ScenarioDraw {
            spectrum: AngularSpectrum::new(random_paths(rng, paths.max(1), true, geometry), angular_spread, geometry)?,
            distance_m: None,
            snr_db: None,
        }),
        ScenarioKind::PlacedUser(p) => {
            let d = rng.random_range(p.min_distance_m..=p.max_distance_m);
            let shadow = if p.shadow_fading_db > 0.0 {
                Normal::new(0.0, p.shadow_fading_db).expect("finite std").sample(rng)
            } else {
                0.0
            };
            Ok(ScenarioDraw {
                spectrum: AngularSpectrum::new(random_paths(rng, p.paths.max(1), true, geometry), p.angular_spread, geometry)?,
                distance_m: Some(d),
                snr_db: Some(p.snr_db_at(d) + shadow),
            })
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Noise variance for a given SNR under unit per-antenna channel power.
pub fn sigma2_from_snr_db(snr_db: f64) -> f64 {
    db_to_linear(-snr_db)
}
