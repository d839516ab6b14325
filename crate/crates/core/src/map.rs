//! The Liverani-Saussol-Vaienti (LSV) interval map family
//!
//!   f_a(x) = x (1 + 2^a x^a)   on [0, 1/2],
//!   f_a(x) = 2x - 1            on (1/2, 1],
//!
//! with exponent 0 < a < 1, a neutral fixed point at 0 and a full affine
//! right branch. The break point x = 1/2 is assigned to the left branch
//! (f_a(1/2) = 1 for every a).

use crate::error::{LabError, Result};
use serde::{Deserialize, Serialize};

/// Intermittency exponent of one LSV map. Invariant: 0 < alpha < 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MapParam {
    alpha: f64,
}

impl MapParam {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha.is_finite() && alpha > 0.0 && alpha < 1.0 {
            Ok(Self { alpha })
        } else {
            Err(LabError::Domain(format!(
                "map exponent must lie in (0,1), got {alpha}"
            )))
        }
    }

    #[inline]
    pub fn alpha(self) -> f64 {
        self.alpha
    }
}

fn check_unit_interval(x: f64, what: &str) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(LabError::Domain(format!("{what} must lie in [0,1], got {x}")))
    }
}

/// Unchecked map evaluation; `x` must lie in [0,1].
#[inline]
pub(crate) fn apply_raw(alpha: f64, x: f64) -> f64 {
    if x <= 0.5 {
        x * (1.0 + (2.0 * x).powf(alpha))
    } else {
        2.0 * x - 1.0
    }
}

/// Evaluate f_a(x).
pub fn apply(p: MapParam, x: f64) -> Result<f64> {
    check_unit_interval(x, "map argument")?;
    Ok(apply_raw(p.alpha, x))
}

/// Derivative f_a'(x); the value at the break x = 1/2 is the left-hand one.
///
/// Left branch: 1 + 2^a (a+1) x^a. Right branch: 2. Always >= 1.
pub fn derivative(p: MapParam, x: f64) -> Result<f64> {
    check_unit_interval(x, "map argument")?;
    Ok(derivative_raw(p.alpha, x))
}

#[inline]
pub(crate) fn derivative_raw(alpha: f64, x: f64) -> f64 {
    if x <= 0.5 {
        1.0 + (1.0 + alpha) * (2.0 * x).powf(alpha)
    } else {
        2.0
    }
}

/// Residual tolerance for the left-branch inversion. The documented
/// contract is absolute 1e-13 (1e-15 below 1e-6); the iteration actually
/// runs to a 1e-15 tolerance relative to the target, because backward
/// recursions walk y down to ~1e-19 where only relative accuracy is
/// meaningful, and tower checks compose dozens of maps whose derivatives
/// amplify endpoint error.
#[inline]
fn invert_tolerance(y: f64) -> f64 {
    1e-15 * y
}

/// Invert the left branch: the unique x in [0, 1/2] with f_a(x) = y.
///
/// g(x) = x (1 + (2x)^a) is strictly increasing and convex on [0, 1/2], so a
/// Newton iteration started from an upper bound decreases monotonically to
/// the root; a bisection bracket is kept as a safeguard.
pub fn invert_left(p: MapParam, y: f64) -> Result<f64> {
    check_unit_interval(y, "inversion target")?;
    Ok(invert_left_raw(p.alpha, y))
}

pub(crate) fn invert_left_raw(alpha: f64, y: f64) -> f64 {
    if y == 0.0 {
        return 0.0;
    }
    if y == 1.0 {
        return 0.5;
    }
    let tol = invert_tolerance(y);
    // Root lies in [0, min(y, 1/2)] and g(hi) >= y there.
    let mut lo = 0.0f64;
    let mut hi = y.min(0.5);
    let mut x = hi;
    for _ in 0..200 {
        let t = (2.0 * x).powf(alpha);
        let g = x * (1.0 + t) - y;
        if g.abs() <= tol {
            return x;
        }
        if g > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let dg = 1.0 + (1.0 + alpha) * t;
        let step = g / dg;
        let mut next = x - step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= f64::EPSILON * x.abs() {
            return next;
        }
        x = next;
    }
    x
}
