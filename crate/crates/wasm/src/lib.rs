//! Browser demo bindings: three interactive views onto the laboratory —
//! equivariant densities, sharp pre-image asymptotics, and quenched
//! correlation decay. Compiled to WebAssembly with wasm-bindgen; the inner
//! functions are plain Rust so the host test suite exercises them too.

use lsvlab::asymptotics;
use lsvlab::correlations::{Correlator, Observable};
use lsvlab::density::FiberGrid;
use lsvlab::noise::ParamDistribution;
use lsvlab::preimages;
use lsvlab::transfer;
use lsvlab::NoisePath;
use std::sync::Arc;
use wasm_bindgen::prelude::*;

fn build_dist(kind: &str, alpha0: f64, alpha1: f64, p1: f64) -> Result<ParamDistribution, String> {
    let d = match kind {
        "discrete" => ParamDistribution::discrete(alpha0, alpha1, p1),
        "uniform" => ParamDistribution::uniform(alpha0, alpha1),
        "quadratic" => ParamDistribution::quadratic(alpha0, alpha1),
        "point" => ParamDistribution::point_mass(alpha0),
        other => return Err(format!("unknown law '{other}'")),
    };
    d.map_err(|e| e.to_string())
}

/// Equivariant density curve: interleaved (cell midpoint, density value)
/// pairs, ready for plotting.
pub fn density_curve_impl(
    kind: &str,
    alpha0: f64,
    alpha1: f64,
    p1: f64,
    seed: u64,
    pullback: usize,
    cells: usize,
) -> Result<Vec<f64>, String> {
    let dist = build_dist(kind, alpha0, alpha1, p1)?;
    let grid = Arc::new(FiberGrid::standard(cells.clamp(64, 8192)).map_err(|e| e.to_string())?);
    let path = NoisePath::new(seed, dist);
    let h = transfer::equivariant_density(&path, 0, pullback.clamp(1, 2000), Arc::clone(&grid))
        .map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(2 * grid.cells());
    for j in 0..grid.cells() {
        out.push(grid.midpoint(j));
        out.push(h.value(j));
    }
    Ok(out)
}

/// Sharp-asymptotics curve: interleaved (l, x_l / predicted) pairs on a
/// geometric grid of lengths, using the Laplace-derived constant.
pub fn sharp_curve_impl(
    kind: &str,
    alpha0: f64,
    alpha1: f64,
    p1: f64,
    seed: u64,
    l_max: u64,
    points: usize,
) -> Result<Vec<f64>, String> {
    let dist = build_dist(kind, alpha0, alpha1, p1)?;
    let path = NoisePath::new(seed, dist);
    let sig = dist.laplace_signature();
    let l_max = l_max.clamp(64, 3_000_000);
    let points = points.clamp(4, 64);
    let mut out = Vec::with_capacity(2 * points);
    for i in 0..points {
        let t = i as f64 / (points - 1) as f64;
        let l = (16.0 * (l_max as f64 / 16.0).powf(t)).round() as u64;
        let r = asymptotics::sharp_ratio(&path, 0, l.max(2), &sig).map_err(|e| e.to_string())?;
        out.push(l as f64);
        out.push(r);
    }
    Ok(out)
}

/// Correlation decay of the identity observable: JSON with the lag grid, the
/// correlation values and the fitted log-log slope.
pub fn correlation_curve_impl(
    kind: &str,
    alpha0: f64,
    alpha1: f64,
    p1: f64,
    seed: u64,
    n_max: u64,
    cells: usize,
) -> Result<String, String> {
    let dist = build_dist(kind, alpha0, alpha1, p1)?;
    let grid = Arc::new(FiberGrid::standard(cells.clamp(256, 4096)).map_err(|e| e.to_string())?);
    let path = NoisePath::new(seed, dist);
    let engine = Correlator::new(path, 0, grid, 100).map_err(|e| e.to_string())?;
    let n_max = n_max.clamp(32, 4000);
    let mut ns = Vec::new();
    let mut n = 4u64;
    while n < n_max {
        ns.push(n);
        n = ((n as f64) * 1.35).ceil() as u64;
    }
    ns.push(n_max);
    let series = engine
        .future_series(Observable::Identity, Observable::Identity, &ns)
        .map_err(|e| e.to_string())?;
    let fit = series.fit((ns[0], n_max), 1e-12).map_err(|e| e.to_string())?;
    serde_json::to_string(&serde_json::json!({
        "ns": series.ns,
        "corr": series.values,
        "slope": fit.slope,
        "r_squared": fit.r_squared,
    }))
    .map_err(|e| e.to_string())
}

/// Limit constant of l^{1/alpha} x_l on the constant path (shown as a guide
/// line in the sharp-asymptotics view).
pub fn deterministic_limit_impl(alpha: f64) -> Result<f64, String> {
    let p = lsvlab::MapParam::new(alpha).map_err(|e| e.to_string())?;
    Ok(preimages::deterministic_c_limit(p))
}

#[wasm_bindgen]
pub fn density_curve(
    kind: &str,
    alpha0: f64,
    alpha1: f64,
    p1: f64,
    seed: u64,
    pullback: usize,
    cells: usize,
) -> Result<Vec<f64>, JsValue> {
    density_curve_impl(kind, alpha0, alpha1, p1, seed, pullback, cells).map_err(|e| e.into())
}

#[wasm_bindgen]
pub fn sharp_curve(
    kind: &str,
    alpha0: f64,
    alpha1: f64,
    p1: f64,
    seed: u64,
    l_max: u64,
    points: usize,
) -> Result<Vec<f64>, JsValue> {
    sharp_curve_impl(kind, alpha0, alpha1, p1, seed, l_max, points).map_err(|e| e.into())
}

#[wasm_bindgen]
pub fn correlation_curve(
    kind: &str,
    alpha0: f64,
    alpha1: f64,
    p1: f64,
    seed: u64,
    n_max: u64,
    cells: usize,
) -> Result<String, JsValue> {
    correlation_curve_impl(kind, alpha0, alpha1, p1, seed, n_max, cells).map_err(|e| e.into())
}

#[wasm_bindgen]
pub fn deterministic_limit(alpha: f64) -> Result<f64, JsValue> {
    deterministic_limit_impl(alpha).map_err(|e| e.into())
}
