//! Experiment configuration: a single JSON document with sections
//! {distribution, seeds, grids, tolerances, output}. Anything omitted falls
//! back to the checked-in calibration defaults.

use lsvlab::{LabError, ParamDistribution};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Debug, Clone, Deserialize)]
pub struct Config {
    pub experiment: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub distribution: Option<DistConfig>,
    #[serde(default)]
    pub grids: Grids,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputCfg,
}

fn default_seed() -> u64 {
    1
}

/// Parameter law; `point` gives the constant path at one exponent.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DistConfig {
    Discrete { alpha0: f64, alpha1: f64, #[serde(default = "default_p1")] p1: f64 },
    Uniform { alpha0: f64, alpha1: f64 },
    Quadratic { alpha0: f64, alpha1: f64 },
    Point { alpha: f64 },
}

fn default_p1() -> f64 {
    0.5
}

impl DistConfig {
    pub fn build(&self) -> Result<ParamDistribution, LabError> {
        match *self {
            DistConfig::Discrete { alpha0, alpha1, p1 } => {
                ParamDistribution::discrete(alpha0, alpha1, p1)
            }
            DistConfig::Uniform { alpha0, alpha1 } => ParamDistribution::uniform(alpha0, alpha1),
            DistConfig::Quadratic { alpha0, alpha1 } => {
                ParamDistribution::quadratic(alpha0, alpha1)
            }
            DistConfig::Point { alpha } => ParamDistribution::point_mass(alpha),
        }
    }
}

/// Grid and sample-size knobs shared by the experiments; every field is
/// optional and experiment runners pick the ones they use.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default)]
pub struct Grids {
    pub ells: Option<Vec<u64>>,
    pub ns: Option<Vec<u64>>,
    pub thresholds: Option<Vec<f64>>,
    pub height: Option<usize>,
    pub cells: Option<usize>,
    pub pullback: Option<usize>,
    pub cesaro_terms: Option<usize>,
    pub n_samples: Option<usize>,
    pub n_paths: Option<usize>,
    pub horizon: Option<u64>,
    pub ell0: Option<u64>,
    /// (a, b, n) cases for the appendix sums.
    pub cases: Option<Vec<(f64, f64, u64)>>,
    pub at_index: Option<i64>,
}

/// Tolerance overrides; defaults come from the calibration file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub rel_err: Option<f64>,
    pub final_rel: Option<f64>,
    pub slope_max: Option<f64>,
    pub l1: Option<f64>,
    pub se_excess: Option<f64>,
    pub markov: Option<f64>,
    pub ratio_band: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default)]
pub struct OutputCfg {
    pub dir: Option<PathBuf>,
    pub prefix: Option<String>,
}

/// One verified quantity in the experiment summary.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub detail: String,
    pub pass: bool,
}

impl Check {
    pub fn le(name: &str, value: f64, bound: f64) -> Self {
        Check {
            name: name.into(),
            value,
            detail: format!("require <= {bound}"),
            pass: value <= bound,
        }
    }

    pub fn in_band(name: &str, value: f64, band: (f64, f64)) -> Self {
        Check {
            name: name.into(),
            value,
            detail: format!("require inside [{}, {}]", band.0, band.1),
            pass: value >= band.0 && value <= band.1,
        }
    }

    pub fn boolean(name: &str, pass: bool, detail: &str) -> Self {
        Check { name: name.into(), value: if pass { 1.0 } else { 0.0 }, detail: detail.into(), pass }
    }
}

/// The machine-readable record written next to the CSVs.
#[derive(Debug, Serialize)]
pub struct Summary {
    pub experiment: String,
    pub seed: u64,
    pub workers: usize,
    pub distribution: Option<DistConfig>,
    pub checks: Vec<Check>,
    pub pass: bool,
    pub outputs: Vec<String>,
    #[serde(flatten)]
    pub extra: serde_json::Map<String, serde_json::Value>,
}
