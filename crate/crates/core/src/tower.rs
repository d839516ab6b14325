//! The random tower over the base Λ = (1/2, 1].
//!
//! On each fiber the primed pre-image points cut Λ into return-time
//! intervals: R = n on (x'_n, x'_{n-1}], and the n-fold composition along the
//! path maps that interval bijectively onto Λ. A tower point climbs its
//! column one level per step and re-enters the base at its composed image.
//! Because an orbit that leaves Λ stays in (0, 1/2] until the step it
//! returns, base returns coincide with visits of the plain interval orbit to
//! Λ, which is what the simulation uses.

use crate::error::{LabError, Result};
use crate::map;
use crate::noise::{NoisePath, ParamDistribution};
use crate::par;
use crate::preimages;
use crate::rng;

/// Return-time partition of the base on one fiber, truncated at `height`.
#[derive(Debug, Clone)]
pub struct TowerPartition {
    pub anchor: i64,
    pub height: usize,
    /// Fixed-anchor primed points x'_0 = 1, x'_1 = 3/4, ..., x'_height,
    /// strictly decreasing; the return time is n on (x'_n, x'_{n-1}].
    pub xprime: Vec<f64>,
    /// Lebesgue mass of the discarded part (x_height(shifted path) / 2).
    pub truncated_tail_mass: f64,
    /// Worst endpoint-image deviation seen by the Markov check.
    pub markov_defect: f64,
}

impl TowerPartition {
    /// The interval carrying return time n (1-based, n <= height).
    pub fn interval(&self, n: usize) -> (f64, f64) {
        (self.xprime[n], self.xprime[n - 1])
    }

    /// Return time of a base point, `None` if it sits beyond the truncation.
    pub fn return_time_of(&self, x: f64) -> Option<usize> {
        if x <= *self.xprime.last().unwrap() || x > 1.0 {
            return None;
        }
        // xprime is decreasing: find n with xprime[n] < x <= xprime[n-1]
        let n = self.xprime.partition_point(|p| *p >= x);
        Some(n.max(1))
    }

    /// Lebesgue mass of {R = n}.
    pub fn interval_mass(&self, n: usize) -> f64 {
        let (lo, hi) = self.interval(n);
        hi - lo
    }
}

/// Compose the map along the path for `n` steps starting at `index`.
fn compose_forward(path: &NoisePath, index: i64, n: usize, x: f64) -> f64 {
    let mut y = x;
    for j in 0..n {
        y = map::apply_raw(path.alpha_at(index + j as i64), y);
    }
    y
}

/// Build the return-time partition on the fiber at `anchor` and verify the
/// Markov property: the n-step image of (x'_n, x'_{n-1}] must be (1/2, 1],
/// checked on endpoints to within `markov_tol`.
pub fn build_partition(
    path: &NoisePath,
    anchor: i64,
    height: usize,
    markov_tol: f64,
) -> Result<TowerPartition> {
    if height == 0 {
        return Err(LabError::Domain("partition height must be >= 1".into()));
    }
    // Fixed-anchor primed points: x'_n = (x_n(@anchor+1) + 1) / 2, each from
    // its own backward pass.
    let shifted: Vec<f64> =
        par::map_indexed(height, |i| preimages::x_ell(path, anchor + 1, i + 1));
    let mut xprime = Vec::with_capacity(height + 1);
    xprime.push(1.0);
    xprime.push(0.75);
    for x in shifted.iter().take(height).skip(1) {
        xprime.push(0.5 * (x + 1.0));
    }

    // Column n reaches onto (1/2, 1]: its lower endpoint x'_n hits exactly
    // 1/2 at step n, and its upper endpoint is the lower endpoint of column
    // n-1 (or x'_0 = 1, fixed by the map). The n-step image of the upper
    // endpoint is the branch value at the break, 1, so certifying the
    // 1/2-hit of every x'_m covers both endpoints of every column without
    // composing a rounded iterate across the branch discontinuity.
    let defects = par::map_indexed(height, |i| {
        let m = i + 1;
        (compose_forward(path, anchor, m, xprime[m]) - 0.5).abs()
    });
    let markov_defect = defects
        .into_iter()
        .fold((map::apply_raw(path.alpha_at(anchor), 1.0) - 1.0).abs(), f64::max);
    if markov_defect > markov_tol {
        return Err(LabError::TowerConsistency(format!(
            "endpoint image defect {markov_defect:.3e} exceeds {markov_tol:.3e} at height {height}"
        )));
    }

    Ok(TowerPartition {
        anchor,
        height,
        xprime,
        truncated_tail_mass: 0.5 * shifted[height - 1],
        markov_defect,
    })
}

/// First base-return data of an orbit started at `x` in Λ on the fiber at
/// `anchor`: (return time R, composed image f^R(x)). `None` if the orbit has
/// not returned within `cap` steps.
pub fn base_return(path: &NoisePath, anchor: i64, x: f64, cap: usize) -> Option<(usize, f64)> {
    debug_assert!(x > 0.5 && x <= 1.0);
    let mut y = x;
    for n in 1..=cap {
        y = map::apply_raw(path.alpha_at(anchor + n as i64 - 1), y);
        if y > 0.5 {
            return Some((n, y));
        }
    }
    None
}

/// A point of the random tower: a base coordinate, the level it has climbed
/// to, and the fiber index it currently sits over.
#[derive(Debug, Clone, Copy)]
pub struct TowerPoint {
    /// Base coordinate in (1/2, 1] (where the column was entered).
    pub base: f64,
    /// Current level; always < column return time.
    pub level: usize,
    /// Fiber index of the current tower.
    pub anchor: i64,
    /// Return time of the column (computed on entry).
    column: usize,
    /// Image in Λ when the roof is reached.
    return_image: f64,
}

impl TowerPoint {
    /// Enter the tower at level 0. Fails if the column is taller than `cap`.
    pub fn enter(path: &NoisePath, x: f64, anchor: i64, cap: usize) -> Result<Self> {
        if !(x > 0.5 && x <= 1.0) {
            return Err(LabError::Domain(format!("base point must lie in (1/2, 1], got {x}")));
        }
        let (column, return_image) = base_return(path, anchor, x, cap).ok_or_else(|| {
            LabError::Undersampled(format!("no base return within {cap} steps"))
        })?;
        Ok(Self { base: x, level: 0, anchor, column, return_image })
    }

    /// Steps remaining until the next base return (>= 1).
    pub fn hat_return(&self) -> usize {
        self.column - self.level
    }

    /// Return time of the column this point lives in.
    pub fn column(&self) -> usize {
        self.column
    }

    /// Position of the point under the projection to the interval,
    /// f^level applied at the fiber the column was entered on.
    pub fn project(&self, path: &NoisePath) -> f64 {
        compose_forward(path, self.anchor - self.level as i64, self.level, self.base)
    }
}

/// One step of the tower map: climb, or return to the base at the composed
/// image when the roof is reached. The fiber index always advances by one.
pub fn tower_step(pt: &TowerPoint, path: &NoisePath, cap: usize) -> Result<TowerPoint> {
    if pt.level + 1 < pt.column {
        Ok(TowerPoint { level: pt.level + 1, anchor: pt.anchor + 1, ..*pt })
    } else {
        TowerPoint::enter(path, pt.return_image, pt.anchor + 1, cap)
    }
}

/// Lebesgue masses of tower levels 0..height on the fiber at `anchor`:
/// level l is a copy of {R(@anchor-l shifted fiber) > l}, of mass
/// x_l(@anchor+1-l)/2 (with x_0 = 1). One backward-extending pass.
pub fn tower_level_masses(path: &NoisePath, anchor: i64, height: usize) -> Vec<f64> {
    let mut masses = Vec::with_capacity(height);
    let mut x = 1.0f64; // x_0
    for level in 0..height {
        if level == 1 {
            x = 0.5;
        } else if level >= 2 {
            x = map::invert_left_raw(path.alpha_at(anchor + 1 - level as i64), x);
        }
        masses.push(0.5 * x);
    }
    masses
}

/// One annealed return-time estimate: both algebraic routes to
/// (P x m){R = n} and the Monte Carlo error of the estimate.
#[derive(Debug, Clone, Copy)]
pub struct AnnealedTailPoint {
    pub n: u64,
    /// Mean of (x_{n-1}(shifted) - x_n) / 2 over sampled paths.
    pub diff_form: f64,
    /// Mean of 2^{a} x_n^{a+1} / 2 over the same paths.
    pub closed_form: f64,
    pub mc_se: f64,
}

/// Monte Carlo estimate of the annealed return-time mass (P x m){R = n}
/// over `n_samples` independent paths, for every n in `ns`.
pub fn annealed_tail_series(
    dist: &ParamDistribution,
    ns: &[u64],
    n_samples: usize,
    seed: u64,
) -> Result<Vec<AnnealedTailPoint>> {
    if n_samples < 2 {
        return Err(LabError::Undersampled("need at least two sample paths".into()));
    }
    ns.iter()
        .map(|&n| {
            if n == 0 {
                return Err(LabError::Domain("return time must be >= 1".into()));
            }
            let per_path = par::map_indexed(n_samples, |j| {
                let path = NoisePath::new(rng::child_seed(seed, j as u64), *dist);
                if n == 1 {
                    // {R = 1} = (3/4, 1] exactly, no path dependence
                    return (0.25, 0.25);
                }
                let xn = preimages::x_ell(&path, 0, n as usize);
                let xprev = preimages::x_ell(&path, 1, n as usize - 1);
                let alpha = path.alpha_at(0);
                let closed = 0.5 * 2f64.powf(alpha) * xn.powf(alpha + 1.0);
                (0.5 * (xprev - xn), closed)
            });
            let m = n_samples as f64;
            let diff_mean = per_path.iter().map(|p| p.0).sum::<f64>() / m;
            let closed_mean = per_path.iter().map(|p| p.1).sum::<f64>() / m;
            let var = per_path
                .iter()
                .map(|p| (p.1 - closed_mean) * (p.1 - closed_mean))
                .sum::<f64>()
                / (m - 1.0);
            Ok(AnnealedTailPoint {
                n,
                diff_form: diff_mean,
                closed_form: closed_mean,
                mc_se: (var / m).sqrt(),
            })
        })
        .collect()
}

/// Empirical distortion data for full-return branches.
#[derive(Debug, Clone)]
pub struct DistortionReport {
    /// max |J(x)/J(y) - 1| over sampled same-column pairs, per column.
    pub per_column: Vec<f64>,
    /// Overall maximum (the measured surrogate for the distortion constant).
    pub max_deviation: f64,
    /// Smallest composed full-return derivative seen (weak expansion check).
    pub min_return_derivative: f64,
}

/// Log-derivative of the n-step composition along the path at `x`.
fn log_jacobian(path: &NoisePath, index: i64, n: usize, x: f64) -> f64 {
    let mut y = x;
    let mut acc = 0.0;
    for j in 0..n {
        let alpha = path.alpha_at(index + j as i64);
        acc += map::derivative_raw(alpha, y).ln();
        y = map::apply_raw(alpha, y);
    }
    acc
}

/// Sample same-column pairs and measure the distortion of the full-return
/// Jacobian, |J(x)/J(y) - 1|, together with the weakest expansion factor.
pub fn check_distortion(
    path: &NoisePath,
    anchor: i64,
    height: usize,
    pairs_per_column: usize,
    seed: u64,
) -> Result<DistortionReport> {
    if height < 1 || pairs_per_column < 1 {
        return Err(LabError::Domain("need height >= 1 and at least one pair".into()));
    }
    let part = build_partition(path, anchor, height, 1e-8)?;
    let per_column = par::map_indexed(height, |i| {
        let n = i + 1;
        let (lo, hi) = part.interval(n);
        let mut worst = 0.0f64;
        for p in 0..pairs_per_column {
            let u1 = rng::unit_at(seed, 20, (i * pairs_per_column + p) as i64);
            let u2 = rng::unit_at(seed, 21, (i * pairs_per_column + p) as i64);
            let x = lo + (hi - lo) * u1;
            let y = lo + (hi - lo) * u2;
            let dev = ((log_jacobian(path, anchor, n, x) - log_jacobian(path, anchor, n, y))
                .exp()
                - 1.0)
                .abs();
            worst = worst.max(dev);
        }
        worst
    });
    let min_return_derivative = (1..=height)
        .map(|n| {
            let (lo, hi) = part.interval(n);
            // endpoints plus midpoint; the derivative is monotone enough for
            // a sampled minimum
            [lo + 1e-12 * (hi - lo), 0.5 * (lo + hi), hi]
                .into_iter()
                .map(|x| log_jacobian(path, anchor, n, x).exp())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(f64::INFINITY, f64::min);
    let max_deviation = per_column.iter().copied().fold(0.0, f64::max);
    Ok(DistortionReport { per_column, max_deviation, min_return_derivative })
}
