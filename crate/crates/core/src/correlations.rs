//! Fiberwise correlation estimation and log-log decay fitting.
//!
//! Future correlations over fiber i:
//!   Cor(n) = ∫ phi d(push of psi*h_i over n steps) - ∫ phi h_{i+n} ∫ psi h_i,
//! past correlations re-anchor the same quantity n steps back, and the
//! pushforward distance tracks || push(d, n) - push(d', n) ||_1. All decay
//! statements are one-sided upper bounds, so fits are compared against a
//! bound plus tolerance, never asserted equal.

use crate::density::{push_masses, transfer_step, FiberDensity, FiberGrid};
use crate::error::{LabError, Result};
use crate::noise::NoisePath;
use crate::rng;
use crate::transfer;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Built-in observables with known Holder regularity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "name", content = "eta")]
pub enum Observable {
    /// Constant 1 (correlations against it vanish by mass conservation).
    One,
    Identity,
    /// x^eta with 0 < eta <= 1 (Holder exponent eta).
    Power(f64),
    Cosine,
    /// Smooth bump supported in (1/4, 3/4).
    Bump,
}

impl Observable {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Observable::One => 1.0,
            Observable::Identity => x,
            Observable::Power(eta) => x.powf(*eta),
            Observable::Cosine => (2.0 * std::f64::consts::PI * x).cos(),
            Observable::Bump => {
                let t = (x - 0.5) * 4.0;
                if t.abs() >= 1.0 {
                    0.0
                } else {
                    (-1.0 / (1.0 - t * t)).exp() * std::f64::consts::E
                }
            }
        }
    }

    /// Holder exponent the observable is declared with.
    pub fn holder_exponent(&self) -> f64 {
        match self {
            Observable::Power(eta) => *eta,
            _ => 1.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Observable::One => "one",
            Observable::Identity => "identity",
            Observable::Power(_) => "power",
            Observable::Cosine => "cosine",
            Observable::Bump => "bump",
        }
    }
}

/// An n-indexed decay series with helpers for log-log fitting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailSeries {
    pub ns: Vec<u64>,
    pub values: Vec<f64>,
}

impl TailSeries {
    pub fn new(ns: Vec<u64>, values: Vec<f64>) -> Self {
        assert_eq!(ns.len(), values.len());
        Self { ns, values }
    }

    /// Fit log|value| against log n inside `window`, ignoring points at or
    /// below `floor`.
    pub fn fit(&self, window: (u64, u64), floor: f64) -> Result<DecayFit> {
        fit_decay(self, window, floor)
    }
}

/// Least-squares line through (log n, log |value|).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (u64, u64),
}

/// Default floor below which correlation values are treated as numerical
/// noise and excluded from fits.
pub const NOISE_FLOOR: f64 = 1e-12;

/// Fit a log-log decay line over the points of `series` with n inside
/// `window` and |value| above `floor`. Needs at least 5 usable points.
pub fn fit_decay(series: &TailSeries, window: (u64, u64), floor: f64) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = series
        .ns
        .iter()
        .zip(&series.values)
        .filter(|(n, v)| **n >= window.0 && **n <= window.1 && v.abs() > floor)
        .map(|(n, v)| ((*n as f64).ln(), v.abs().ln()))
        .collect();
    if pts.len() < 5 {
        return Err(LabError::Undersampled(format!(
            "decay fit needs >= 5 points above the noise floor in [{}, {}], found {}",
            window.0,
            window.1,
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mx, my) = (sx / n, sy / n);
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(DecayFit { slope, intercept, r_squared, window })
}

/// Correlation engine for one fiber: holds the pulled-back density and walks
/// pushforwards once per requested series.
pub struct Correlator {
    path: NoisePath,
    at_index: i64,
    grid: Arc<FiberGrid>,
    pullback: usize,
    h: FiberDensity,
}

impl Correlator {
    pub fn new(path: NoisePath, at_index: i64, grid: Arc<FiberGrid>, pullback: usize) -> Result<Self> {
        let h = transfer::equivariant_density(&path, at_index, pullback, Arc::clone(&grid))?;
        Ok(Self { path, at_index, grid, pullback, h })
    }

    /// The equivariant density estimate at the engine's fiber.
    pub fn density(&self) -> &FiberDensity {
        &self.h
    }

    fn cell_values<F: Fn(f64) -> f64>(&self, f: &F) -> Vec<f64> {
        (0..self.grid.cells()).map(|j| f(self.grid.midpoint(j))).collect()
    }

    /// Future correlations at every n in `ns` (strictly increasing), for
    /// arbitrary evaluators. One sequential sweep serves all of them.
    pub fn future_series_fn<F, G>(&self, phi: &F, psi: &G, ns: &[u64]) -> Result<TailSeries>
    where
        F: Fn(f64) -> f64,
        G: Fn(f64) -> f64,
    {
        check_sorted(ns)?;
        let phi_vals = self.cell_values(phi);
        let psi_vals = self.cell_values(psi);
        let int_psi: f64 = psi_vals.iter().zip(self.h.masses()).map(|(p, m)| p * m).sum();

        // signed measure psi * h pushed n steps; h itself pushed alongside
        let mut weighted: Vec<f64> =
            psi_vals.iter().zip(self.h.masses()).map(|(p, m)| p * m).collect();
        let mut h_fwd = self.h.masses().to_vec();
        let mut out = Vec::with_capacity(ns.len());
        let mut step = 0u64;
        for &n in ns {
            while step < n {
                let p = self.path.at(self.at_index + step as i64);
                weighted = push_masses(p, &self.grid, &weighted).0;
                h_fwd = push_masses(p, &self.grid, &h_fwd).0;
                step += 1;
            }
            let lhs: f64 = phi_vals.iter().zip(&weighted).map(|(p, m)| p * m).sum();
            let mean_phi: f64 = phi_vals.iter().zip(&h_fwd).map(|(p, m)| p * m).sum();
            out.push(lhs - mean_phi * int_psi);
        }
        Ok(TailSeries::new(ns.to_vec(), out))
    }

    pub fn future_series(&self, phi: Observable, psi: Observable, ns: &[u64]) -> Result<TailSeries> {
        self.future_series_fn(&|x| phi.eval(x), &|x| psi.eval(x), ns)
    }

    /// Single future correlation value (n = 0 is legal and gives the static
    /// covariance).
    pub fn future(&self, phi: Observable, psi: Observable, n: u64) -> Result<f64> {
        Ok(self.future_series(phi, psi, &[n])?.values[0])
    }

    /// Past correlations at every n in `ns` (strictly increasing): the same
    /// functional with the path re-anchored n steps back.
    pub fn past_series_fn<F, G>(&self, phi: &F, psi: &G, ns: &[u64]) -> Result<TailSeries>
    where
        F: Fn(f64) -> f64,
        G: Fn(f64) -> f64,
    {
        check_sorted(ns)?;
        let max_n = *ns.last().unwrap() as i64;
        let phi_vals = self.cell_values(phi);
        let psi_vals = self.cell_values(psi);

        // March the equivariant family from the far past, capturing h at
        // every -n we will need (pullback length grows along the way).
        let start = self.at_index - max_n - self.pullback as i64;
        let mut g = FiberDensity::uniform(Arc::clone(&self.grid));
        g = transfer::quenched_push(&self.path, &g, start, self.pullback);
        let mut h_at: std::collections::HashMap<i64, FiberDensity> = Default::default();
        let mut idx = self.at_index - max_n;
        for &n in ns.iter().rev() {
            let target = self.at_index - n as i64;
            while idx < target {
                g = transfer_step(self.path.at(idx), &g);
                idx += 1;
            }
            h_at.insert(target, g.clone());
        }
        while idx < self.at_index {
            g = transfer_step(self.path.at(idx), &g);
            idx += 1;
        }
        let int_phi_h0: f64 = phi_vals.iter().zip(g.masses()).map(|(p, m)| p * m).sum();

        let mut out = Vec::with_capacity(ns.len());
        for &n in ns {
            let anchor = self.at_index - n as i64;
            let h_past = &h_at[&anchor];
            let int_psi: f64 = psi_vals.iter().zip(h_past.masses()).map(|(p, m)| p * m).sum();
            let weighted: Vec<f64> =
                psi_vals.iter().zip(h_past.masses()).map(|(p, m)| p * m).collect();
            let pushed =
                transfer::quenched_push_masses(&self.path, &self.grid, &weighted, anchor, n as usize);
            let lhs: f64 = phi_vals.iter().zip(&pushed).map(|(p, m)| p * m).sum();
            out.push(lhs - int_phi_h0 * int_psi);
        }
        Ok(TailSeries::new(ns.to_vec(), out))
    }

    pub fn past_series(&self, phi: Observable, psi: Observable, ns: &[u64]) -> Result<TailSeries> {
        self.past_series_fn(&|x| phi.eval(x), &|x| psi.eval(x), ns)
    }

    /// Single past correlation value.
    pub fn past(&self, phi: Observable, psi: Observable, n: u64) -> Result<f64> {
        Ok(self.past_series(phi, psi, &[n])?.values[0])
    }

    /// Monte Carlo cross-check of the future correlation: N initial points
    /// drawn from h by inverse CDF, orbits run n steps along the path.
    pub fn future_mc(
        &self,
        phi: Observable,
        psi: Observable,
        n: u64,
        n_points: usize,
        seed: u64,
    ) -> f64 {
        let edges = self.grid.edges();
        let masses = self.h.masses();
        let mut cum = Vec::with_capacity(masses.len() + 1);
        let mut acc = 0.0;
        cum.push(0.0);
        for m in masses {
            acc += m;
            cum.push(acc);
        }
        let total = acc;
        let sample = |u: f64| -> f64 {
            let target = u * total;
            let j = cum.partition_point(|c| *c <= target).clamp(1, masses.len()) - 1;
            let frac = if masses[j] > 0.0 { (target - cum[j]) / masses[j] } else { 0.5 };
            edges[j] + (edges[j + 1] - edges[j]) * frac
        };
        let results = crate::par::map_indexed(n_points, |i| {
            let x0 = sample(rng::unit_at(seed, 40, i as i64));
            let mut y = x0;
            for j in 0..n {
                y = crate::map::apply_raw(self.path.alpha_at(self.at_index + j as i64), y);
            }
            (phi.eval(y) * psi.eval(x0), phi.eval(y), psi.eval(x0))
        });
        let m = n_points as f64;
        let (mut s_xy, mut s_x, mut s_y) = (0.0, 0.0, 0.0);
        for (xy, x, y) in results {
            s_xy += xy;
            s_x += x;
            s_y += y;
        }
        s_xy / m - (s_x / m) * (s_y / m)
    }
}

fn check_sorted(ns: &[u64]) -> Result<()> {
    if ns.is_empty() || ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(LabError::Domain("series grid must be nonempty, strictly increasing".into()));
    }
    Ok(())
}

/// || push(d, n) - push(d', n) ||_1 at every n in `ns` (strictly
/// increasing); nonincreasing in n for any pair of probability densities.
pub fn pushforward_distance(
    path: &NoisePath,
    from_index: i64,
    d: &FiberDensity,
    d_prime: &FiberDensity,
    ns: &[u64],
) -> Result<TailSeries> {
    check_sorted(ns)?;
    let mut a = d.clone();
    let mut b = d_prime.clone();
    let mut out = Vec::with_capacity(ns.len());
    let mut step = 0u64;
    for &n in ns {
        while step < n {
            let p = path.at(from_index + step as i64);
            a = transfer_step(p, &a);
            b = transfer_step(p, &b);
            step += 1;
        }
        out.push(a.l1_distance(&b));
    }
    Ok(TailSeries::new(ns.to_vec(), out))
}
