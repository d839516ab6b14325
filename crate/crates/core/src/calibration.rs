//! Calibrated tolerances and measured reference constants.
//!
//! The limit theorems this lab measures come without convergence rates, so
//! every tolerance on an asymptotic statement was fixed by a calibration run
//! (`cargo run --release -p lsvlab --example calibrate` regenerates the
//! numbers). The values live in `calibration.json` next to this file and are
//! embedded at compile time; the acceptance suite and the experiment runner
//! read them from here instead of carrying ad-hoc magic numbers.

use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PreimageCal {
    /// Band for l^{1/alpha} x_l at alpha = 0.5, l = 10^6 (limit is 2).
    pub deterministic_ratio_band: (f64, f64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartialSumCal {
    /// Relative tolerance on S_l / c at l = 10^6 for the discrete law.
    pub discrete_rel_tol: f64,
    /// Snapshot lengths for the continuous-law series.
    pub continuous_ells: Vec<u64>,
    /// Relative tolerance on the last uniform-law snapshot (measured 0.165).
    pub uniform_final_rel_tol: f64,
    /// Relative tolerance on the last quadratic-law snapshot (measured
    /// 0.369 against the Laplace constant; convergence is 1/log-slow).
    pub quadratic_final_rel_tol: f64,
    /// Which constant the quadratic-law checks compare against
    /// ("laplace" or "nominal"); set by the quadrature oracle, which found
    /// S_l moving away from the nominal constant and toward the Laplace one.
    pub quadratic_c_basis: String,
    /// Measured ratio (nominal / laplace) for the quadratic law at the
    /// calibration parameters, recorded for the record.
    pub quadratic_nominal_over_laplace: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SharpCal {
    pub discrete_paths: usize,
    pub discrete_median_band: (f64, f64),
    pub continuous_paths: usize,
    pub continuous_ells: Vec<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HoeffdingCal {
    pub ells: Vec<u64>,
    pub thresholds: Vec<f64>,
    pub n_samples: usize,
    pub max_se_excess: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TowerCal {
    pub markov_height: usize,
    pub markov_tol: f64,
    /// Heights for the level-mass (finiteness) partial sums.
    pub finiteness_height: usize,
    /// Fit window and slope margin for the annealed return-time tail.
    pub annealed_ns: Vec<u64>,
    pub annealed_samples: usize,
    pub annealed_slope_margin: f64,
    /// Windowed constant for the annealed bound curve
    /// C (log n)^{q(a0+1)/a0} / n^{1/a0+1} (covers the measured estimates
    /// with margin; an asymptotic constant is not identifiable at desk
    /// scale).
    pub annealed_c_hat: f64,
    /// Measured distortion surrogate (max |J(x)/J(y) - 1| over columns at
    /// the calibration parameters), recorded for reports.
    pub measured_distortion: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityCal {
    pub grid_cells: usize,
    pub pullback: usize,
    pub histogram_orbit_points: u64,
    pub histogram_l1_tol: f64,
    pub residual_pullbacks: Vec<usize>,
    pub cesaro_terms: usize,
    pub cesaro_l1_tol: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrelationCal {
    pub grid_cells: usize,
    pub pullback: usize,
    /// Geometric grid of lags inside the fit window.
    pub ns: Vec<u64>,
    pub fit_window: (u64, u64),
    pub noise_floor: f64,
    pub constant_slope_max: f64,
    pub random_slope_max: f64,
    pub pushforward_slope_max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CouplingCal {
    pub ns: Vec<u64>,
    pub fit_window: (u64, u64),
    pub n_samples: usize,
    pub ell0: u64,
    pub horizon: u64,
    pub slope_margin: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AppendixCal {
    pub tail_ratio_tol: f64,
    pub log_power_ratio_band: (f64, f64),
}

/// The full calibration record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Calibration {
    pub preimage: PreimageCal,
    pub partial_sums: PartialSumCal,
    pub sharp: SharpCal,
    pub hoeffding: HoeffdingCal,
    pub tower: TowerCal,
    pub density: DensityCal,
    pub correlation: CorrelationCal,
    pub coupling: CouplingCal,
    pub appendix: AppendixCal,
}

static CAL: OnceLock<Calibration> = OnceLock::new();

/// The checked-in calibration, parsed once.
pub fn calibration() -> &'static Calibration {
    CAL.get_or_init(|| {
        serde_json::from_str(include_str!("calibration.json"))
            .expect("embedded calibration.json must parse")
    })
}
