use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::registry::Algorithm;
use crate::channel::{PlacedUser, ScenarioKind, DEFAULT_QUADRATURE_POINTS, DEG};
use crate::error::{Error, Result};
use crate::learning::Activation;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioConfig {
    SinglePath {
        angular_spread_deg: f64,
    },
    ThreePath {
        angular_spread_deg: f64,
    },
    MultiPath {
        paths: usize,
        angular_spread_deg: f64,
    },
    PlacedUser {
        #[serde(default = "placed::path_loss_exponent")]
        path_loss_exponent: f64,
        #[serde(default)]
        shadow_fading_db: f64,
        #[serde(default = "placed::min_distance_m")]
        min_distance_m: f64,
        #[serde(default = "placed::max_distance_m")]
        max_distance_m: f64,
        #[serde(default = "placed::snr_edge_db")]
        snr_edge_db: f64,
        #[serde(default = "placed::angular_spread_deg")]
        angular_spread_deg: f64,
        #[serde(default = "placed::paths")]
        paths: usize,
    },
}

mod placed {
    use crate::channel::{PlacedUser, DEG};

    pub fn path_loss_exponent() -> f64 {
        PlacedUser::default().path_loss_exponent
    }
    pub fn min_distance_m() -> f64 {
        PlacedUser::default().min_distance_m
    }
    pub fn max_distance_m() -> f64 {
        PlacedUser::default().max_distance_m
    }
    pub fn snr_edge_db() -> f64 {
        PlacedUser::default().snr_edge_db
    }
    pub fn angular_spread_deg() -> f64 {
        PlacedUser::default().angular_spread / DEG
    }
    pub fn paths() -> usize {
        PlacedUser::default().paths
    }
}

impl ScenarioConfig {
    pub fn placed_user_default() -> Self {
        let p = PlacedUser::default();
        ScenarioConfig::PlacedUser {
            path_loss_exponent: p.path_loss_exponent,
            shadow_fading_db: p.shadow_fading_db,
            min_distance_m: p.min_distance_m,
            max_distance_m: p.max_distance_m,
            snr_edge_db: p.snr_edge_db,
            angular_spread_deg: p.angular_spread / DEG,
            paths: p.paths,
        }
    }

    pub fn kind(&self) -> ScenarioKind {
        match *self {
            ScenarioConfig::SinglePath { angular_spread_deg } => {
                ScenarioKind::SinglePath { angular_spread: angular_spread_deg * DEG }
            }
            ScenarioConfig::ThreePath { angular_spread_deg } => ScenarioKind::three_path(angular_spread_deg * DEG),
            ScenarioConfig::MultiPath { paths, angular_spread_deg } => {
                ScenarioKind::MultiPath { paths, angular_spread: angular_spread_deg * DEG }
            }
            ScenarioConfig::PlacedUser {
                path_loss_exponent,
                shadow_fading_db,
                min_distance_m,
                max_distance_m,
                snr_edge_db,
                angular_spread_deg,
                paths,
            } => ScenarioKind::PlacedUser(PlacedUser {
                path_loss_exponent,
                shadow_fading_db,
                min_distance_m,
                max_distance_m,
                snr_edge_db,
                angular_spread: angular_spread_deg * DEG,
                paths,
            }),
        }
    }

    /// The SNR is drawn with the user position instead of being swept.
    pub fn has_own_snr(&self) -> bool {
        matches!(self, ScenarioConfig::PlacedUser { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepVariable {
    #[serde(rename = "nAntennas")]
    Antennas,
    #[serde(rename = "SNR")]
    Snr,
    #[serde(rename = "nCoherence")]
    Coherence,
    #[serde(rename = "none")]
    None,
}

impl SweepVariable {
    /// CSV column name; a single-point run is labeled by its antenna count.
    pub fn column(&self) -> &'static str {
        match self {
            SweepVariable::Antennas | SweepVariable::None => "nAntennas",
            SweepVariable::Snr => "SNR",
            SweepVariable::Coherence => "nCoherence",
        }
    }

    pub fn from_column(name: &str) -> Option<Self> {
        match name {
            "nAntennas" => Some(SweepVariable::Antennas),
            "SNR" => Some(SweepVariable::Snr),
            "nCoherence" => Some(SweepVariable::Coherence),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Mse,
    Rate,
}

impl MetricKind {
    pub fn column(&self) -> &'static str {
        match self {
            MetricKind::Mse => "MSE",
            MetricKind::Rate => "rate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub variable: SweepVariable,
    #[serde(default)]
    pub values: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { variable: SweepVariable::None, values: Vec::new() }
    }
}

/// Operating point used for every quantity that is not swept.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BasePoint {
    pub antennas: usize,
    pub snr_db: f64,
    pub snapshots: usize,
}

impl Default for BasePoint {
    fn default() -> Self {
        Self { antennas: 64, snr_db: 0.0, snapshots: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorSettings {
    /// Filter bank size `N = bank_factor * M`.
    pub bank_factor: usize,
    pub omp_oversampling: usize,
    pub omp_max_sparsity: usize,
    pub quadrature_points: usize,
    pub relu_transform: String,
    pub softmax_transform: String,
}

impl Default for EstimatorSettings {
    fn default() -> Self {
        Self {
            bank_factor: 16,
            omp_oversampling: 4,
            omp_max_sparsity: crate::baselines::DEFAULT_K_MAX,
            quadrature_points: DEFAULT_QUADRATURE_POINTS,
            relu_transform: "dft2".into(),
            softmax_transform: "dft2".into(),
        }
    }
}

impl EstimatorSettings {
    pub fn transform_kind(&self, activation: Activation) -> &str {
        match activation {
            Activation::Relu => &self.relu_transform,
            Activation::Softmax => &self.softmax_transform,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingSettings {
    pub iterations: usize,
    pub batch_size: usize,
    /// Antenna growth factor between hierarchical stages.
    pub beta: f64,
    /// Number of hierarchical refinements; `0` is plain training.
    pub stages: usize,
    pub validation_batches: usize,
    pub validation_every: usize,
}

impl Default for TrainingSettings {
    fn default() -> Self {
        Self { iterations: 2500, batch_size: 20, beta: 2.0, stages: 2, validation_batches: 500, validation_every: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoxplotSettings {
    pub repetitions: usize,
    pub evaluation_batches: usize,
    pub activation: Activation,
    pub transform: String,
}

impl Default for BoxplotSettings {
    fn default() -> Self {
        Self { repetitions: 10, evaluation_batches: 2000, activation: Activation::Relu, transform: "dft".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub trials: usize,
    #[serde(default = "default_metric")]
    pub metric: MetricKind,
    #[serde(default)]
    pub output: Option<PathBuf>,
    pub algorithms: Vec<String>,
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub point: BasePoint,
    #[serde(default)]
    pub estimators: EstimatorSettings,
    #[serde(default)]
    pub training: TrainingSettings,
    #[serde(default)]
    pub boxplot: BoxplotSettings,
    /// Pretrained CNN files by algorithm identifier; these skip training.
    #[serde(default)]
    pub models: BTreeMap<String, PathBuf>,
}

fn default_metric() -> MetricKind {
    MetricKind::Mse
}

impl ExperimentConfig {
    pub fn new(scenario: ScenarioConfig, algorithms: &[Algorithm], trials: usize, seed: u64) -> Self {
        Self {
            seed,
            trials,
            metric: MetricKind::Mse,
            output: None,
            algorithms: algorithms.iter().map(|a| a.to_string()).collect(),
            scenario,
            sweep: SweepConfig::default(),
            point: BasePoint::default(),
            estimators: EstimatorSettings::default(),
            training: TrainingSettings::default(),
            boxplot: BoxplotSettings::default(),
            models: BTreeMap::new(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).context(path.display().to_string()))?;
        Self::from_toml(&text).map_err(|e| e.context(path.display().to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn algorithm_list(&self) -> Result<Vec<Algorithm>> {
        self.algorithms.iter().map(|s| s.parse()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::Config("no algorithms configured".into()));
        }
        self.algorithm_list()?;
        for name in self.models.keys() {
            let a: Algorithm = name.parse()?;
            if a.activation().is_none() {
                return Err(Error::Config(format!("model file given for non-learned algorithm {a}")));
            }
        }
        if self.sweep.variable != SweepVariable::None && self.sweep.values.is_empty() {
            return Err(Error::Config("sweep values must be nonempty".into()));
        }
        if self.sweep.variable == SweepVariable::Snr && self.scenario.has_own_snr() {
            return Err(Error::Config("the placed-user scenario draws its own SNR and cannot sweep it".into()));
        }
        for &v in &self.sweep.values {
            let integral = matches!(self.sweep.variable, SweepVariable::Antennas | SweepVariable::Coherence);
            if !v.is_finite() || (integral && (v < 1.0 || v.fract() != 0.0)) {
                return Err(Error::Config(format!("invalid {} value {v}", self.sweep.variable.column())));
            }
        }
        if self.point.antennas == 0 || self.point.snapshots == 0 {
            return Err(Error::Config("antennas and snapshots must be positive".into()));
        }
        let e = &self.estimators;
        if e.bank_factor == 0 || e.omp_oversampling == 0 || e.omp_max_sparsity == 0 {
            return Err(Error::Config("estimator settings must be positive".into()));
        }
        if e.quadrature_points < crate::channel::MIN_QUADRATURE_POINTS {
            return Err(Error::Config(format!(
                "quadrature_points must be at least {}",
                crate::channel::MIN_QUADRATURE_POINTS
            )));
        }
        for kind in [&e.relu_transform, &e.softmax_transform, &self.boxplot.transform] {
            if !matches!(kind.as_str(), "dft" | "dft2") {
                return Err(Error::Config(format!("CNN transform must be dft or dft2, got `{kind}`")));
            }
        }
        let t = &self.training;
        if t.batch_size == 0 || !(t.beta > 1.0) || t.validation_batches == 0 {
            return Err(Error::Config("training needs batch_size >= 1, beta > 1 and validation_batches >= 1".into()));
        }
        Ok(())
    }
}
