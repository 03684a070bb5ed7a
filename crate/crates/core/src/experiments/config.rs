use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{KernelSpec, PointSet};
use crate::sampling::{self, DomainBox};

pub const DEFAULT_SEED: u64 = 42;

/// Point-set construction schemes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case", deny_unknown_fields)]
pub enum PointScheme {
    /// `count` equidistant points per axis, endpoints included.
    Equidistant { count: usize },
    /// `count` uniform points. Without `seed` the stream derives from the
    /// run seed.
    Random {
        count: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Explicit { points: Vec<Vec<f64>> },
}

impl PointScheme {
    pub fn build(&self, domain: &DomainBox, default_seed: u64) -> Result<PointSet> {
        match self {
            PointScheme::Equidistant { count } => match *count {
                0 => Ok(PointSet::empty(domain.dim())),
                1 => {
                    let mid: Vec<f64> = domain.bounds.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect();
                    PointSet::from_rows(domain.dim(), &[mid])
                }
                c => Ok(domain.grid(c)),
            },
            PointScheme::Random { count, seed } => {
                let mut rng = sampling::rng(seed.unwrap_or(default_seed));
                Ok(domain.sample_points(*count, &mut rng))
            }
            PointScheme::Explicit { points } => PointSet::from_rows(domain.dim(), points),
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            PointScheme::Random { seed, .. } => *seed,
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetConfig {
    Example1,
    /// `f = Σ_j k(·, y_j) β_j` with uniform sites and standard normal weights.
    NativeSpan {
        #[serde(default = "default_sites")]
        sites: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    /// Tabulated data with columns `x_1..x_d, f_1..f_m`.
    Data { path: String },
}

fn default_sites() -> usize {
    5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ShapeSource {
    /// The shape values listed for the four kernels.
    #[default]
    Table,
    /// A fresh grid search.
    Tuned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuningConfig {
    pub lo: f64,
    pub hi: f64,
    pub grid_size: usize,
    pub validation_points: usize,
    pub centers: usize,
    pub candidate_cap: usize,
    /// Joint candidates are re-fitted in full instead of using the decoupled
    /// per-slot errors.
    pub full_fit: bool,
}

impl Default for TuningConfig {
    fn default() -> Self {
        Self {
            lo: 0.1,
            hi: 100.0,
            grid_size: 50,
            validation_points: 40,
            centers: 35,
            candidate_cap: crate::tuning::DEFAULT_CANDIDATE_CAP,
            full_fit: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Example1Config {
    pub max_centers: usize,
    pub shapes: ShapeSource,
    pub covariance_samples: usize,
}

impl Default for Example1Config {
    fn default() -> Self {
        Self {
            max_centers: 35,
            shapes: ShapeSource::Table,
            covariance_samples: 401,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Example2Config {
    pub max_centers: usize,
    /// Number of independent native-span targets.
    pub targets: usize,
    /// Replace the last centers by the sites of the first target.
    pub include_sites: bool,
    /// Pseudo-inverse cut-off for the power-function.
    pub rank_tol: f64,
    /// Slack for bound violations, relative to `‖f‖ · max_x ‖k(x,x)‖₂^{1/2}`.
    pub violation_slack: f64,
}

impl Default for Example2Config {
    fn default() -> Self {
        Self {
            max_centers: 100,
            targets: 1,
            include_sites: false,
            rank_tol: crate::linalg::RANK_TOL,
            violation_slack: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub bounds: Vec<[f64; 2]>,
}

impl DomainConfig {
    pub fn to_box(&self) -> Result<DomainBox> {
        DomainBox::new(self.bounds.iter().map(|b| (b[0], b[1])).collect())
            .map_err(|e| Error::Config(format!("domain: {e}")))
    }
}

/// Run configuration. Every section is optional; each subcommand fills in
/// its own defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub centers: Option<PointScheme>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_set: Option<PointScheme>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetConfig>,
    pub tuning: TuningConfig,
    pub example1: Example1Config,
    pub example2: Example2Config,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            output_dir: None,
            domain: None,
            kernel: None,
            centers: None,
            test_set: None,
            target: None,
            tuning: TuningConfig::default(),
            example1: Example1Config::default(),
            example2: Example2Config::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, source_name: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            source_name: source_name.to_string(),
            message: e.to_string(),
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn domain_or(&self, default: DomainBox) -> Result<DomainBox> {
        match &self.domain {
            Some(d) => d.to_box(),
            None => Ok(default),
        }
    }
}
