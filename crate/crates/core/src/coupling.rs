//! Simultaneous base returns of two orbits driven by the same noise.
//!
//! Two tower orbits x, x' run under one path. Auxiliary stopping times
//! tau_1 < tau_2 < ... alternate between the coordinates: tau_1 is the first
//! base return of x at or after l0, tau_2 the first return of x' at or after
//! tau_1 + l0, and so on. The stopping time T is the first tau_i with i >= 2
//! at which BOTH coordinates sit in the base. Its tail controls how fast
//! pushforwards of two densities merge.
//!
//! Base membership of a tower orbit coincides with the interval orbit
//! visiting (1/2, 1], so the simulation just iterates the maps.

use crate::correlations::TailSeries;
use crate::error::{LabError, Result};
use crate::map;
use crate::noise::{NoisePath, ParamDistribution};
use crate::par;
use crate::rng;
use serde::Serialize;

/// Outcome of one paired run.
#[derive(Debug, Clone, Serialize)]
pub struct CouplingRun {
    pub seed: u64,
    pub x: f64,
    pub x_prime: f64,
    pub ell0: u64,
    /// Alternating stopping times observed until T resolved (or horizon).
    pub taus: Vec<u64>,
    /// First simultaneous return at a tau_i with i >= 2; None if the run was
    /// censored at the horizon.
    pub t_value: Option<u64>,
}

/// Simulate the alternating stopping times and the simultaneous return time
/// for one pair under one path.
pub fn simulate_t(
    path: &NoisePath,
    x: f64,
    x_prime: f64,
    ell0: u64,
    horizon: u64,
) -> Result<CouplingRun> {
    if !(x > 0.5 && x <= 1.0 && x_prime > 0.5 && x_prime <= 1.0) {
        return Err(LabError::Domain("both coordinates must start in (1/2, 1]".into()));
    }
    if ell0 < 1 || horizon < ell0 {
        return Err(LabError::Domain("need l0 >= 1 and horizon >= l0".into()));
    }

    // advance both orbits to time n, recording base membership
    let mut ya = x;
    let mut yb = x_prime;
    let mut n: u64 = 0;
    let mut taus = Vec::new();
    let mut t_value = None;
    // next index at which a stopping time may fire, and whose turn it is
    let mut next_allowed = ell0;
    let mut first_coord = true;
    while n < horizon {
        n += 1;
        let alpha = path.alpha_at(n as i64 - 1);
        ya = map::apply_raw(alpha, ya);
        yb = map::apply_raw(alpha, yb);
        if n < next_allowed {
            continue;
        }
        let watched_in = if first_coord { ya > 0.5 } else { yb > 0.5 };
        if watched_in {
            taus.push(n);
            if taus.len() >= 2 && ya > 0.5 && yb > 0.5 {
                t_value = Some(n);
                break;
            }
            next_allowed = n + ell0;
            first_coord = !first_coord;
        }
    }
    Ok(CouplingRun { seed: path.seed, x, x_prime, ell0, taus, t_value })
}

/// Empirical survival curve of T with its fitted decay data.
#[derive(Debug, Clone)]
pub struct CouplingTail {
    pub series: TailSeries,
    pub censored_fraction: f64,
    pub n_samples: usize,
    /// Uncensored runs with T beyond the largest grid point.
    pub beyond_grid: usize,
}

/// Estimate P{T > n} over `n_samples` independent (path, pair) draws for
/// every n in `ns`; runs that reach `horizon` stay in every survival count.
pub fn coupling_tail(
    dist: &ParamDistribution,
    ns: &[u64],
    n_samples: usize,
    ell0: u64,
    horizon: u64,
    seed: u64,
) -> Result<CouplingTail> {
    if ns.is_empty() || ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(LabError::Domain("survival grid must be strictly increasing".into()));
    }
    if n_samples < 10_000 {
        return Err(LabError::Undersampled(format!(
            "coupling tail needs >= 10^4 samples, got {n_samples}"
        )));
    }
    let max_n = *ns.last().unwrap();
    if max_n >= horizon {
        return Err(LabError::Domain(format!(
            "largest grid point {max_n} must stay below the horizon {horizon}"
        )));
    }

    let outcomes: Vec<Option<u64>> = par::map_indexed(n_samples, |j| {
        let run_seed = rng::child_seed(seed, j as u64);
        let path = NoisePath::new(run_seed, *dist);
        // base pair drawn uniformly on (1/2, 1]^2 from dedicated streams
        let x = 0.5 + 0.5 * rng::unit_at(run_seed, 50, 0).max(f64::MIN_POSITIVE);
        let xp = 0.5 + 0.5 * rng::unit_at(run_seed, 51, 0).max(f64::MIN_POSITIVE);
        simulate_t(&path, x, xp, ell0, horizon).expect("valid start by construction").t_value
    });

    let censored = outcomes.iter().filter(|o| o.is_none()).count();
    let beyond_grid =
        outcomes.iter().filter(|o| o.map(|t| t > max_n).unwrap_or(false)).count();
    if beyond_grid < 100 {
        return Err(LabError::Undersampled(format!(
            "only {beyond_grid} uncensored runs beyond n = {max_n}; extend the horizon or add samples"
        )));
    }
    let m = n_samples as f64;
    let values: Vec<f64> = ns
        .iter()
        .map(|&n| outcomes.iter().filter(|o| o.map(|t| t > n).unwrap_or(true)).count() as f64 / m)
        .collect();
    Ok(CouplingTail {
        series: TailSeries::new(ns.to_vec(), values),
        censored_fraction: censored as f64 / m,
        n_samples,
        beyond_grid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist() -> ParamDistribution {
        ParamDistribution::discrete(0.5, 0.8, 0.5).unwrap()
    }

    #[test]
    fn equal_points_couple_at_tau_two() {
        // for x = x', every return is simultaneous: T = tau_2 always
        for seed in 0..50u64 {
            let path = NoisePath::new(seed, dist());
            let x = 0.5 + 0.5 * rng::unit_at(seed, 1, 0).max(1e-12);
            let run = simulate_t(&path, x, x, 1, 100_000).unwrap();
            let t = run.t_value.expect("no censoring expected here");
            assert_eq!(run.taus.len(), 2);
            assert_eq!(t, run.taus[1]);
        }
    }

    #[test]
    fn tau_sequence_obeys_gap_rule() {
        for seed in 0..100u64 {
            let path = NoisePath::new(seed, dist());
            let x = 0.5 + 0.5 * rng::unit_at(seed, 2, 0).max(1e-12);
            let xp = 0.5 + 0.5 * rng::unit_at(seed, 3, 0).max(1e-12);
            let ell0 = 1 + seed % 3;
            let run = simulate_t(&path, x, xp, ell0, 50_000).unwrap();
            if run.taus.is_empty() {
                continue;
            }
            assert!(run.taus[0] >= ell0);
            for w in run.taus.windows(2) {
                assert!(w[1] >= w[0] + ell0, "gap rule violated: {:?}", run.taus);
            }
            if let Some(t) = run.t_value {
                assert!(run.taus.len() >= 2);
                assert_eq!(t, *run.taus.last().unwrap());
            }
        }
    }

    #[test]
    fn quick_coupling_when_both_in_rightmost_cell() {
        // both points in (3/4, 1] return immediately; with l0 = 1 the first
        // two steps resolve T whenever the orbits keep landing in the base
        let path = NoisePath::new(1234, dist());
        let run = simulate_t(&path, 0.9, 0.95, 1, 10_000).unwrap();
        assert!(run.t_value.unwrap() <= 20);
    }

    #[test]
    fn survival_is_one_below_two_ell0() {
        // T >= tau_2 >= 2 l0, so P{T > n} = 1 for n < 2 l0
        let ell0 = 3u64;
        let tail = coupling_tail(&dist(), &[1, 2, 5, 10, 50], 10_000, ell0, 2_000, 9).unwrap();
        assert_eq!(tail.series.values[0], 1.0);
        assert_eq!(tail.series.values[1], 1.0);
        // monotone nonincreasing
        for w in tail.series.values.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let path = NoisePath::new(1, dist());
        assert!(simulate_t(&path, 0.4, 0.9, 1, 100).is_err());
        assert!(simulate_t(&path, 0.9, 0.9, 0, 100).is_err());
        assert!(coupling_tail(&dist(), &[10, 5], 20_000, 1, 1_000, 1).is_err());
        assert!(coupling_tail(&dist(), &[10, 20], 100, 1, 1_000, 1).is_err());
    }
}
