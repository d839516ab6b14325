//! Backward pre-image sequences of 1/2 under left branches.
//!
//! With x_1 = 1/2 on every fiber, the recursion
//!
//!   x_n(path @ i) = invert_left(alpha_i, x_{n-1}(path @ i+1))
//!
//! produces the points whose halves-plus-one cut the tower base into return
//! intervals, and whose size controls the return-time tail through
//! m{R > l} = x_l(path @ i+1) / 2.
//!
//! Anchoring convention: a backward pass of length `l` based at index `i`
//! seeds 1/2 at the far end and applies `invert_left` with exponents at
//! indices i+l-2 down to i. Entry k of the pass therefore holds x_k anchored
//! at index i+l-k, and only the final entry x_l is anchored at `i` itself.
//! The value x_l(@i) depends on exponents at indices i ..= i+l-2 only.

use crate::error::{LabError, Result};
use crate::map::{self, MapParam};
use crate::noise::NoisePath;

/// The two backward-recursion arrays for one anchored pass.
#[derive(Debug, Clone)]
pub struct PreimageTable {
    /// Base index the pass is anchored at.
    pub anchor: i64,
    /// Target length l >= 1.
    pub length: usize,
    /// x[k-1] = x_k anchored at `anchor + length - k`, k = 1..=length.
    /// Strictly decreasing, inside (0, 1/2].
    pub x: Vec<f64>,
    /// xprime[k] = x'_k anchored at `anchor + length - k`, k = 0..=length:
    /// x'_0 = 1, x'_1 = 3/4, x'_k = (x_k(shifted path) + 1)/2. Strictly
    /// decreasing, inside (1/2, 1].
    pub xprime: Vec<f64>,
}

impl PreimageTable {
    /// x_l anchored at the table's base index.
    #[inline]
    pub fn last(&self) -> f64 {
        self.x[self.length - 1]
    }
}

/// Raw backward pass: returns [x_1, x_2, ..., x_l] with x_k anchored at
/// `base_index + l - k` (see module docs).
pub fn backward_pass(path: &NoisePath, base_index: i64, length: usize) -> Vec<f64> {
    let mut xs = Vec::with_capacity(length);
    let mut y = 0.5f64;
    xs.push(y);
    for k in 2..=length {
        let alpha = path.alpha_at(base_index + (length - k) as i64);
        y = map::invert_left_raw(alpha, y);
        xs.push(y);
    }
    xs
}

/// Only the final value x_l(@ base_index); O(l) time, O(1) memory.
pub fn x_ell(path: &NoisePath, base_index: i64, length: usize) -> f64 {
    let mut y = 0.5f64;
    for k in 2..=length {
        let alpha = path.alpha_at(base_index + (length - k) as i64);
        y = map::invert_left_raw(alpha, y);
    }
    y
}

/// Full table with both sequences (two O(l) passes).
pub fn preimage_sequence(path: &NoisePath, base_index: i64, length: usize) -> Result<PreimageTable> {
    if length == 0 {
        return Err(LabError::Domain("pass length must be >= 1".into()));
    }
    let x = backward_pass(path, base_index, length);
    // The primed sequence at matching anchors comes from the pass based one
    // index later: x'_k(@j) = (x_k(@j+1) + 1)/2.
    let shifted = backward_pass(path, base_index + 1, length);
    let mut xprime = Vec::with_capacity(length + 1);
    xprime.push(1.0);
    if length >= 1 {
        xprime.push(0.75);
    }
    for k in 2..=length {
        xprime.push(0.5 * (shifted[k - 1] + 1.0));
    }
    Ok(PreimageTable { anchor: base_index, length, x, xprime })
}

/// Return-time tail m{R_(@base_index) > l} = x_l(@base_index + 1) / 2.
pub fn return_tail(path: &NoisePath, base_index: i64, length: usize) -> Result<f64> {
    if length == 0 {
        return Err(LabError::Domain("tail index must be >= 1".into()));
    }
    Ok(0.5 * x_ell(path, base_index + 1, length))
}

/// Pre-image sequence along a constant path: x_1 = 1/2,
/// x_{k+1} = invert_left(alpha, x_k). Returns [x_1, ..., x_len].
pub fn det_x_sequence(p: MapParam, len: usize) -> Vec<f64> {
    let alpha = p.alpha();
    let mut xs = Vec::with_capacity(len);
    let mut y = 0.5f64;
    xs.push(y);
    for _ in 1..len {
        y = map::invert_left_raw(alpha, y);
        xs.push(y);
    }
    xs
}

/// Normalized constant c_k(alpha) = x_k(constant path) * k^{1/alpha}; tends
/// to alpha^{-1/alpha} / 2 as k grows.
pub fn deterministic_c(p: MapParam, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(LabError::Domain("index must be >= 1".into()));
    }
    let alpha = p.alpha();
    let mut y = 0.5f64;
    for _ in 1..k {
        y = map::invert_left_raw(alpha, y);
    }
    Ok(y * (k as f64).powf(1.0 / alpha))
}

/// Limit of [`deterministic_c`]: alpha^{-1/alpha} / 2.
pub fn deterministic_c_limit(p: MapParam) -> f64 {
    0.5 * p.alpha().powf(-1.0 / p.alpha())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::ParamDistribution;

    fn path(seed: u64) -> NoisePath {
        NoisePath::new(seed, ParamDistribution::uniform(0.3, 0.6).unwrap())
    }

    #[test]
    fn length_one_is_half() {
        let t = preimage_sequence(&path(1), 0, 1).unwrap();
        assert_eq!(t.last(), 0.5);
        assert_eq!(t.xprime, vec![1.0, 0.75]);
    }

    #[test]
    fn sequences_strictly_decreasing_in_range() {
        let t = preimage_sequence(&path(7), -5, 400).unwrap();
        assert!(t.x.windows(2).all(|w| w[1] < w[0]));
        assert!(t.x.iter().all(|&v| v > 0.0 && v <= 0.5));
        assert!(t.xprime.windows(2).all(|w| w[1] < w[0]));
        assert!(t.xprime.iter().all(|&v| v > 0.5 && v <= 1.0));
    }

    #[test]
    fn forward_consistency() {
        // Applying f with the exponent used by the pass sends x_k back to
        // x_{k-1} at the shifted anchor.
        let p = path(42);
        let base = 3i64;
        let l = 300usize;
        let t = preimage_sequence(&p, base, l).unwrap();
        for k in 2..=l {
            let alpha = p.alpha_at(base + (l - k) as i64);
            let fwd = map::apply(p.at(base + (l - k) as i64), t.x[k - 1]).unwrap();
            assert!(
                (fwd - t.x[k - 2]).abs() <= 1e-11,
                "k={k}: f(x_k)={fwd} vs x_(k-1)={} (alpha={alpha})",
                t.x[k - 2]
            );
        }
    }

    #[test]
    fn x_ell_depends_only_on_its_window() {
        // x_l(@base) is a function of the exponents at base ..= base+l-2:
        // folding those l-1 values (read once, in backward order) reproduces
        // the direct computation exactly.
        let p = path(111);
        let (base, l) = (10i64, 64usize);
        let direct = x_ell(&p, base, l);
        let window: Vec<f64> = (base..=base + (l as i64) - 2).map(|i| p.alpha_at(i)).collect();
        let folded = window.iter().rev().fold(0.5, |y, &a| map::invert_left_raw(a, y));
        assert_eq!(direct, folded);
    }

    #[test]
    fn envelope_between_constant_paths() {
        // constant-path envelopes bound every random path value
        let dist = ParamDistribution::uniform(0.3, 0.6).unwrap();
        let lo = det_x_sequence(MapParam::new(0.3).unwrap(), 10_000);
        let hi = det_x_sequence(MapParam::new(0.6).unwrap(), 10_000);
        for seed in 0..100u64 {
            let p = NoisePath::new(seed, dist);
            for l in [100usize, 1_000, 10_000] {
                let v = x_ell(&p, seed as i64 % 17 - 8, l);
                assert!(
                    lo[l - 1] <= v && v <= hi[l - 1],
                    "seed {seed}, l={l}: {} <= {v} <= {}",
                    lo[l - 1],
                    hi[l - 1]
                );
            }
        }
    }

    #[test]
    fn one_step_inequalities_termwise() {
        // With t = (2 x_n)^alpha and s = x_n^{-a0} - x_{n-1}^{-a0} (shifted
        // anchor), the bounds a0 2^{a0} (2x_n)^{a-a0} [1 - (1+a0)/2 (2x_n)^a]
        // <= s <= a0 2^{a0} (2x_n)^{a-a0} hold term by term.
        let p = path(5);
        let base = 0i64;
        let l = 500usize;
        let t = preimage_sequence(&p, base, l).unwrap();
        let a0 = 0.3f64;
        let r0 = a0 * 2f64.powf(a0);
        for k in 2..=l {
            let xn = t.x[k - 1];
            let xprev = t.x[k - 2];
            let alpha = p.alpha_at(base + (l - k) as i64);
            let s = xn.powf(-a0) - xprev.powf(-a0);
            let upper = r0 * (2.0 * xn).powf(alpha - a0);
            let lower = upper - 0.5 * (1.0 + a0) * r0 * (2.0 * xn).powf(2.0 * alpha - a0);
            let slack = 1e-12 * s.abs().max(1.0);
            assert!(s <= upper + slack, "upper violated at k={k}");
            assert!(s >= lower - slack, "lower violated at k={k}");
        }
    }

    #[test]
    fn return_tail_basics() {
        let p = path(3);
        assert_eq!(return_tail(&p, 0, 1).unwrap(), 0.25);
        let mut prev = f64::INFINITY;
        for l in 1..200 {
            let v = return_tail(&p, 0, l).unwrap();
            assert!(v < prev && v > 0.0 && v <= 0.25);
            prev = v;
        }
    }

    #[test]
    fn deterministic_constant_small_k() {
        assert_eq!(deterministic_c(MapParam::new(0.5).unwrap(), 1).unwrap(), 0.5);
        // k = 10^4 already within a few percent of the limit 2
        let c = deterministic_c(MapParam::new(0.5).unwrap(), 10_000).unwrap();
        assert!((c - 2.0).abs() / 2.0 < 0.05, "c_1e4 = {c}");
        let lim = deterministic_c_limit(MapParam::new(0.5).unwrap());
        assert_eq!(lim, 2.0);
    }

    #[test]
    fn deterministic_constant_alpha_03() {
        // approaches alpha^{-1/alpha}/2 for small exponents too
        let p = MapParam::new(0.3).unwrap();
        let c = deterministic_c(p, 200_000).unwrap();
        let lim = deterministic_c_limit(p);
        assert!((c / lim - 1.0).abs() < 0.02, "c = {c}, limit = {lim}");
    }

    #[test]
    fn return_tail_constant_path_inverse_square() {
        // alpha = 1/2 constant path: m{R > l} = x_l/2 ~ 1/l^2
        let path = NoisePath::new(1, ParamDistribution::point_mass(0.5).unwrap());
        let l = 10_000usize;
        let tail = return_tail(&path, 0, l).unwrap();
        let scaled = tail * (l as f64) * (l as f64);
        assert!((scaled - 1.0).abs() < 0.01, "l^2 m{{R > l}} = {scaled}");
    }
}
