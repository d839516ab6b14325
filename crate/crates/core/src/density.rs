//! Piecewise-constant densities on a nonuniform grid of [0,1] and the
//! one-step transfer (Perron-Frobenius) action of an LSV map on them.
//!
//! The pushforward is Ulam-type but exact for piecewise-constant input: the
//! pre-image of every target cell is computed under both branches and the
//! source mass of those sub-intervals is read off the cumulative mass
//! function. Pre-images of consecutive cells share endpoints, so the total
//! mass telescopes and is conserved to rounding.

use crate::error::{LabError, Result};
use crate::map::{self, MapParam};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// First positive edge of the standard grid; everything below sits in one
/// sliver cell so the neutral fixed point never produces a zero-width cell.
const GRID_FLOOR: f64 = 1e-8;

/// A strictly increasing partition of [0,1] into cells, geometrically refined
/// near 0 (where invariant densities blow up like x^{-alpha}) and uniform on
/// the expanding half [1/2, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberGrid {
    edges: Vec<f64>,
}

impl FiberGrid {
    /// Standard lab grid with the requested number of cells. About a quarter
    /// of the cells end up below 1e-2. An edge is always placed exactly at
    /// 1/2 so the two branches split cleanly.
    pub fn standard(cells: usize) -> Result<Self> {
        if cells < 16 {
            return Err(LabError::Config(format!("grid needs at least 16 cells, got {cells}")));
        }
        // Fraction of geometric cells on [1e-8, 1/2] that land below 1e-2.
        let below = (1e-2 / GRID_FLOOR).ln() / (0.5 / GRID_FLOOR).ln();
        let n_left = (((cells as f64) / 4.0 - 1.0) / below).round() as usize;
        let n_left = n_left.clamp(4, cells - 8);
        let n_right = cells - 1 - n_left;

        let mut edges = Vec::with_capacity(cells + 1);
        edges.push(0.0);
        let log_ratio = (0.5 / GRID_FLOOR).ln() / n_left as f64;
        for j in 0..n_left {
            edges.push(GRID_FLOOR * (log_ratio * j as f64).exp());
        }
        edges.push(0.5);
        for j in 1..n_right {
            edges.push(0.5 + 0.5 * j as f64 / n_right as f64);
        }
        edges.push(1.0);
        let grid = Self { edges };
        grid.check()?;
        Ok(grid)
    }

    pub fn from_edges(edges: Vec<f64>) -> Result<Self> {
        let grid = Self { edges };
        grid.check()?;
        Ok(grid)
    }

    fn check(&self) -> Result<()> {
        if self.edges.len() < 2 || self.edges[0] != 0.0 || *self.edges.last().unwrap() != 1.0 {
            return Err(LabError::Invariant("grid must span [0,1]".into()));
        }
        if !self.edges.windows(2).all(|w| w[1] > w[0]) {
            return Err(LabError::Invariant("grid edges must be strictly increasing".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn cells(&self) -> usize {
        self.edges.len() - 1
    }

    #[inline]
    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    #[inline]
    pub fn width(&self, j: usize) -> f64 {
        self.edges[j + 1] - self.edges[j]
    }

    #[inline]
    pub fn midpoint(&self, j: usize) -> f64 {
        0.5 * (self.edges[j] + self.edges[j + 1])
    }

    /// Index of the cell containing `x` (cells are [e_j, e_{j+1}), the last
    /// one closed at 1).
    #[inline]
    pub fn cell_of(&self, x: f64) -> usize {
        let n = self.cells();
        self.edges.partition_point(|e| *e <= x).clamp(1, n) - 1
    }
}

/// Tolerance on the total-mass invariant of a probability density.
pub const MASS_TOL: f64 = 1e-12;

/// A probability density on a [`FiberGrid`], stored as one mass per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberDensity {
    grid: Arc<FiberGrid>,
    mass: Vec<f64>,
}

impl FiberDensity {
    /// Lebesgue measure on [0,1].
    pub fn uniform(grid: Arc<FiberGrid>) -> Self {
        let mass: Vec<f64> = (0..grid.cells()).map(|j| grid.width(j)).collect();
        Self::normalized(grid, mass)
    }

    /// Normalized Lebesgue measure restricted to the tower base (1/2, 1].
    pub fn base_uniform(grid: Arc<FiberGrid>) -> Self {
        let mass: Vec<f64> = (0..grid.cells())
            .map(|j| if grid.edges()[j] >= 0.5 { grid.width(j) } else { 0.0 })
            .collect();
        Self::normalized(grid, mass)
    }

    fn normalized(grid: Arc<FiberGrid>, mut mass: Vec<f64>) -> Self {
        let total = neumaier_sum(&mass);
        for m in &mut mass {
            *m /= total;
        }
        Self { grid, mass }
    }

    /// Build from raw masses, enforcing nonnegativity and unit total mass.
    pub fn from_masses(grid: Arc<FiberGrid>, mass: Vec<f64>) -> Result<Self> {
        if mass.len() != grid.cells() {
            return Err(LabError::Invariant(format!(
                "mass vector length {} does not match grid with {} cells",
                mass.len(),
                grid.cells()
            )));
        }
        if mass.iter().any(|m| *m < 0.0 || !m.is_finite()) {
            return Err(LabError::Invariant("cell masses must be nonnegative and finite".into()));
        }
        let total = neumaier_sum(&mass);
        if (total - 1.0).abs() > MASS_TOL {
            return Err(LabError::Invariant(format!("total mass {total} differs from 1")));
        }
        Ok(Self { grid, mass })
    }

    #[inline]
    pub fn grid(&self) -> &Arc<FiberGrid> {
        &self.grid
    }

    #[inline]
    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn total_mass(&self) -> f64 {
        neumaier_sum(&self.mass)
    }

    /// Density value (mass / width) on cell `j`.
    #[inline]
    pub fn value(&self, j: usize) -> f64 {
        self.mass[j] / self.grid.width(j)
    }

    /// L1 distance on the common grid: sum of |mass difference|.
    pub fn l1_distance(&self, other: &Self) -> f64 {
        assert_eq!(self.grid.cells(), other.grid.cells(), "densities live on different grids");
        self.mass.iter().zip(&other.mass).map(|(a, b)| (a - b).abs()).sum()
    }

    /// Integrate an observable against the density (midpoint rule per cell).
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.mass
            .iter()
            .enumerate()
            .map(|(j, m)| f(self.grid.midpoint(j)) * m)
            .sum()
    }

    /// Largest cell-averaged density value over cells intersecting
    /// [region.0, region.1].
    pub fn sup_on(&self, region: (f64, f64)) -> f64 {
        let mut sup = 0.0f64;
        for j in 0..self.grid.cells() {
            if self.grid.edges()[j + 1] > region.0 && self.grid.edges()[j] < region.1 {
                sup = sup.max(self.value(j));
            }
        }
        sup
    }
}

fn neumaier_sum(xs: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Diagnostics from one transfer step.
#[derive(Debug, Clone, Copy, Default)]
pub struct TransferDiag {
    /// Largest number of source cells straddled by the pre-image of a single
    /// target cell, over both branches.
    pub max_straddle: usize,
}

impl TransferDiag {
    /// Whether the grid resolved the step below the given straddle budget.
    pub fn grid_ok(&self, max_allowed: usize) -> bool {
        self.max_straddle <= max_allowed
    }
}

/// Cumulative mass function of a mass vector on a grid.
struct Cdf<'a> {
    grid: &'a FiberGrid,
    mass: &'a [f64],
    cum: Vec<f64>,
}

impl<'a> Cdf<'a> {
    fn new(grid: &'a FiberGrid, mass: &'a [f64]) -> Self {
        let mut cum = Vec::with_capacity(mass.len() + 1);
        let mut acc = 0.0;
        cum.push(0.0);
        for m in mass {
            acc += m;
            cum.push(acc);
        }
        Self { grid, mass, cum }
    }

    /// Mass of [0, t].
    #[inline]
    fn at(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t >= 1.0 {
            return self.cum[self.mass.len()];
        }
        let j = self.grid.cell_of(t);
        let frac = (t - self.grid.edges()[j]) / self.grid.width(j);
        self.cum[j] + self.mass[j] * frac
    }
}

/// One transfer step on raw masses (linear in the input; signed input is
/// fine, which the correlation sweeps rely on).
pub fn push_masses(p: MapParam, grid: &FiberGrid, mass: &[f64]) -> (Vec<f64>, TransferDiag) {
    let alpha = p.alpha();
    let edges = grid.edges();
    let n = grid.cells();
    let cdf = Cdf::new(grid, mass);

    // Pre-images of all edges under each branch.
    let left: Vec<f64> = edges.iter().map(|&e| map::invert_left_raw(alpha, e)).collect();
    let right: Vec<f64> = edges.iter().map(|&e| 0.5 * (e + 1.0)).collect();

    let mut out = Vec::with_capacity(n);
    let mut diag = TransferDiag::default();
    let mut cl_prev = cdf.at(left[0]);
    let mut cr_prev = cdf.at(right[0]);
    let mut jl_prev = grid.cell_of(left[0]);
    let mut jr_prev = grid.cell_of(right[0]);
    for j in 0..n {
        let cl = cdf.at(left[j + 1]);
        let cr = cdf.at(right[j + 1]);
        let jl = grid.cell_of(left[j + 1]);
        let jr = grid.cell_of(right[j + 1]);
        diag.max_straddle = diag.max_straddle.max(jl - jl_prev).max(jr - jr_prev);
        out.push((cl - cl_prev) + (cr - cr_prev));
        (cl_prev, cr_prev, jl_prev, jr_prev) = (cl, cr, jl, jr);
    }
    (out, diag)
}

/// Pushforward of a probability density under f_p, discretized on its grid.
/// Mass is conserved to rounding and the result stays nonnegative.
pub fn transfer_step(p: MapParam, d: &FiberDensity) -> FiberDensity {
    let (mut mass, _) = push_masses(p, &d.grid, &d.mass);
    for m in &mut mass {
        // monotone CDF differences; only rounding can produce -0.0-scale dips
        if *m < 0.0 {
            debug_assert!(*m > -1e-15, "pushforward produced mass {m}");
            *m = 0.0;
        }
    }
    FiberDensity { grid: Arc::clone(&d.grid), mass }
}

/// [`transfer_step`] with its grid-resolution diagnostics.
pub fn transfer_step_diag(p: MapParam, d: &FiberDensity) -> (FiberDensity, TransferDiag) {
    let (mut mass, diag) = push_masses(p, &d.grid, &d.mass);
    for m in &mut mass {
        if *m < 0.0 {
            *m = 0.0;
        }
    }
    (FiberDensity { grid: Arc::clone(&d.grid), mass }, diag)
}
