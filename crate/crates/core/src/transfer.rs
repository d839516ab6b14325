//! Quenched transfer-operator composition along a noise path and the
//! equivariant density estimators built from it.
//!
//! The density over fiber i is estimated by pulling the uniform density
//! forward from the far past: push(uniform @ i - n, n steps). A Cesaro
//! variant averages pushforwards of base-supported Lebesgue over all lags;
//! the two estimators converging to each other is itself one of the lab's
//! checks.

use crate::density::{push_masses, transfer_step, FiberDensity, FiberGrid};
use crate::error::{LabError, Result};
use crate::noise::NoisePath;
use crate::par;
use std::sync::Arc;

/// Compose `n` transfer steps with exponents at `from_index`,
/// `from_index + 1`, ..., `from_index + n - 1`.
pub fn quenched_push(path: &NoisePath, d: &FiberDensity, from_index: i64, n: usize) -> FiberDensity {
    let mut out = d.clone();
    for j in 0..n {
        out = transfer_step(path.at(from_index + j as i64), &out);
    }
    out
}

/// Signed-mass version of [`quenched_push`] (linear, used by the correlation
/// sweeps which push observable-weighted measures).
pub fn quenched_push_masses(
    path: &NoisePath,
    grid: &FiberGrid,
    masses: &[f64],
    from_index: i64,
    n: usize,
) -> Vec<f64> {
    let mut out = masses.to_vec();
    for j in 0..n {
        out = push_masses(path.at(from_index + j as i64), grid, &out).0;
    }
    out
}

/// Equivariant density estimate over fiber `at_index`: the uniform density
/// pulled forward from `at_index - n_pullback`.
pub fn equivariant_density(
    path: &NoisePath,
    at_index: i64,
    n_pullback: usize,
    grid: Arc<FiberGrid>,
) -> Result<FiberDensity> {
    if n_pullback == 0 {
        return Err(LabError::Domain("pullback length must be >= 1".into()));
    }
    let start = FiberDensity::uniform(grid);
    Ok(quenched_push(path, &start, at_index - n_pullback as i64, n_pullback))
}

/// Cesaro density estimate over fiber `at_index`: the average of
/// pushforwards of base-supported Lebesgue over lags 0..n_terms-1.
pub fn cesaro_density(
    path: &NoisePath,
    at_index: i64,
    n_terms: usize,
    grid: Arc<FiberGrid>,
) -> Result<FiberDensity> {
    if n_terms == 0 {
        return Err(LabError::Domain("need at least one Cesaro term".into()));
    }
    let cells = grid.cells();
    let terms: Vec<Vec<f64>> = par::map_indexed(n_terms, |j| {
        let start = FiberDensity::base_uniform(Arc::clone(&grid));
        quenched_push(path, &start, at_index - j as i64, j).masses().to_vec()
    });
    let mut mass = vec![0.0f64; cells];
    for term in &terms {
        for (m, t) in mass.iter_mut().zip(term) {
            *m += t;
        }
    }
    let scale = 1.0 / n_terms as f64;
    for m in &mut mass {
        *m *= scale;
    }
    FiberDensity::from_masses(grid, mass)
}

/// L1 defect of equivariance at pullback length n:
/// || push(h_i, 1) - h_{i+1} || with both densities pulled back n steps.
/// Decreasing values in n certify that the pullback is converging onto an
/// equivariant family.
pub fn equivariance_residual(
    path: &NoisePath,
    at_index: i64,
    n_pullback: usize,
    grid: Arc<FiberGrid>,
) -> Result<f64> {
    let h = equivariant_density(path, at_index, n_pullback, Arc::clone(&grid))?;
    let h_next = equivariant_density(path, at_index + 1, n_pullback, grid)?;
    let pushed = transfer_step(path.at(at_index), &h);
    Ok(pushed.l1_distance(&h_next))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::transfer_step;
    use crate::map::{self, MapParam};
    use crate::noise::ParamDistribution;
    use crate::rng;

    fn grid(cells: usize) -> Arc<FiberGrid> {
        Arc::new(FiberGrid::standard(cells).unwrap())
    }

    fn upath(seed: u64) -> NoisePath {
        NoisePath::new(seed, ParamDistribution::uniform(0.4, 0.7).unwrap())
    }

    #[test]
    fn zero_steps_is_identity() {
        let d = FiberDensity::uniform(grid(256));
        let out = quenched_push(&upath(1), &d, 0, 0);
        assert_eq!(d.masses(), out.masses());
    }

    #[test]
    fn composition_law_is_exact() {
        let path = upath(2);
        let d = FiberDensity::uniform(grid(512));
        let whole = quenched_push(&path, &d, -3, 17);
        let first = quenched_push(&path, &d, -3, 9);
        let second = quenched_push(&path, &first, 6, 8);
        assert_eq!(whole.masses(), second.masses());
    }

    #[test]
    fn mass_and_positivity_along_random_pushes() {
        // 100 random (path, start, n <= 200) cases on a moderate grid
        let g = grid(512);
        for case in 0..100u64 {
            let path = upath(case);
            let start = (rng::bits_at(7, 30, case as i64) % 101) as i64 - 50;
            let n = (rng::bits_at(7, 31, case as i64) % 200) as usize + 1;
            let d = FiberDensity::uniform(Arc::clone(&g));
            let out = quenched_push(&path, &d, start, n);
            assert!((out.total_mass() - 1.0).abs() < 1e-12, "case {case} (n={n})");
            assert!(out.masses().iter().all(|m| *m >= 0.0), "case {case}");
        }
    }

    /// Independent single-map pushforward: subdivide every source cell and
    /// transport midpoint masses. Coarse, but shares no code with the exact
    /// CDF-based route.
    fn naive_push(p: MapParam, grid: &FiberGrid, masses: &[f64]) -> Vec<f64> {
        const SUB: usize = 2048;
        let mut out = vec![0.0; grid.cells()];
        for (j, m) in masses.iter().enumerate() {
            let (lo, w) = (grid.edges()[j], grid.width(j));
            for s in 0..SUB {
                let x = lo + w * (s as f64 + 0.5) / SUB as f64;
                let y = map::apply(p, x).unwrap();
                out[grid.cell_of(y)] += m / SUB as f64;
            }
        }
        out
    }

    #[test]
    fn exact_push_close_to_naive_oracle() {
        let g = grid(2048);
        let p = MapParam::new(0.5).unwrap();
        let d = FiberDensity::uniform(Arc::clone(&g));
        let exact = transfer_step(p, &d);
        let naive = naive_push(p, &g, d.masses());
        let l1: f64 = exact.masses().iter().zip(&naive).map(|(a, b)| (a - b).abs()).sum();
        assert!(l1 < 0.01, "L1 between exact and subdivided-midpoint push: {l1}");
    }

    #[test]
    fn constant_path_density_has_neutral_blowup() {
        // mass near the neutral point grows like the x^{-alpha} profile: the
        // log-density slope against log x is about -alpha. The fit window
        // [1e-4, 1e-2] stays above the depth a 400-step pullback has had
        // time to equilibrate (escape time from x is ~ x^{-alpha}).
        let g = grid(4096);
        let path = NoisePath::new(1, ParamDistribution::point_mass(0.5).unwrap());
        let h = equivariant_density(&path, 0, 400, Arc::clone(&g)).unwrap();
        let mut pts = Vec::new();
        for j in 0..g.cells() {
            let x = g.midpoint(j);
            if (1e-4..1e-2).contains(&x) && h.masses()[j] > 0.0 {
                pts.push((x.ln(), h.value(j).ln()));
            }
        }
        assert!(pts.len() > 50);
        let n = pts.len() as f64;
        let (sx, sy): (f64, f64) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
        let (mx, my) = (sx / n, sy / n);
        let slope: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum::<f64>();
        assert!((slope + 0.5).abs() < 0.05, "log-density slope {slope}, want ~ -0.5");
    }

    #[test]
    fn equivariance_residual_decreases() {
        let g = grid(1024);
        let path = upath(9);
        let r: Vec<f64> = [25usize, 50, 100]
            .iter()
            .map(|&n| equivariance_residual(&path, 0, n, Arc::clone(&g)).unwrap())
            .collect();
        assert!(r[1] < r[0] && r[2] < r[1], "residuals {r:?}");
    }

    #[test]
    fn density_positive_everywhere_after_pullback() {
        let g = grid(512);
        let h = equivariant_density(&upath(11), 0, 120, Arc::clone(&g)).unwrap();
        assert!(h.masses().iter().all(|m| *m > 0.0), "some cell stayed massless");
    }

    #[test]
    fn cesaro_agrees_with_pullback() {
        let g = grid(1024);
        let path = upath(13);
        let h = equivariant_density(&path, 0, 150, Arc::clone(&g)).unwrap();
        let phi = cesaro_density(&path, 0, 150, Arc::clone(&g)).unwrap();
        let d = h.l1_distance(&phi);
        assert!(d < 0.08, "pullback vs Cesaro L1 distance {d}");
        // Cesaro density stays uniformly bounded on the base
        assert!(phi.sup_on((0.5, 1.0)) < 10.0);
    }

    #[test]
    fn tv_contraction_is_monotone() {
        let g = grid(512);
        let path = upath(15);
        let a = FiberDensity::uniform(Arc::clone(&g));
        let b = FiberDensity::base_uniform(Arc::clone(&g));
        let mut da = a;
        let mut db = b;
        let mut prev = da.l1_distance(&db);
        for j in 0..60 {
            da = transfer_step(path.at(j), &da);
            db = transfer_step(path.at(j), &db);
            let d = da.l1_distance(&db);
            assert!(d <= prev + 1e-12, "step {j}: {d} > {prev}");
            prev = d;
        }
    }

    #[test]
    fn grid_refinement_stability_of_integrals_and_base_sup() {
        let path = upath(17);
        let phi = |x: f64| (2.0 * std::f64::consts::PI * x).cos();
        let mut vals = Vec::new();
        let mut sups = Vec::new();
        for cells in [2048usize, 4096] {
            let h = equivariant_density(&path, 0, 120, grid(cells)).unwrap();
            vals.push(h.integrate(phi));
            sups.push(h.sup_on((0.5, 1.0)));
        }
        assert!((vals[0] - vals[1]).abs() < 1e-3, "integrals {vals:?}");
        assert!(sups.iter().all(|s| s.is_finite()));
        assert!((sups[0] / sups[1] - 1.0).abs() < 0.05, "base sup unstable: {sups:?}");
    }
}
