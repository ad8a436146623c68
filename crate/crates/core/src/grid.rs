//! Radial grids on a truncated interval `[r_min, r_max]`, trapezoid
//! quadrature against the measure `r dr`, and second-order finite
//! differences.
//!
//! The grid carries both node data and cell data. Node weights realize the
//! trapezoid rule for `∫ g(r) r dr`; per cell `j = [r_j, r_{j+1}]` we store
//! the width `h_j`, the midpoint `ρ_j` and the exact cell mass
//! `μ_j = ∫_cell r dr = h_j ρ_j`. Quadratic forms are evaluated cell-wise
//! (see `forms`), which makes the discrete calculus obey exact product and
//! summation-by-parts rules:
//!
//! * `Δ(fg)_j = mean(f)_j Δg_j + Δf_j mean(g)_j`
//! * `Σ_j h_j Δg_j = g(r_max) − g(r_min)`
//!
//! Both hold on any node distribution, which is what lets the integral
//! identities of the quadratic forms close to rounding error rather than
//! to discretization error.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    /// Equally spaced nodes.
    Uniform,
    /// Ratio-spaced nodes, clustered near `r_min`.
    Geometric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    r_min: f64,
    r_max: f64,
    kind: GridKind,
    nodes: Vec<f64>,
    /// Node weights for `∫ g(r) r dr` (trapezoid against `r dr`).
    weights: Vec<f64>,
    cell_width: Vec<f64>,
    cell_mid: Vec<f64>,
    cell_mass: Vec<f64>,
}

pub const MIN_NODES: usize = 16;

/// Build a grid with `n_nodes` nodes on `[r_min, r_max]`.
pub fn build_grid(r_min: f64, r_max: f64, n_nodes: usize, kind: GridKind) -> Result<RadialGrid> {
    if !(r_min > 0.0) || !(r_max > r_min) || !r_max.is_finite() {
        return Err(Error::Parameter(format!(
            "need 0 < r_min < r_max, got r_min={r_min}, r_max={r_max}"
        )));
    }
    if n_nodes < MIN_NODES {
        return Err(Error::Parameter(format!(
            "need at least {MIN_NODES} nodes, got {n_nodes}"
        )));
    }

    let n = n_nodes;
    let mut nodes = vec![0.0; n];
    match kind {
        GridKind::Uniform => {
            let h = (r_max - r_min) / (n - 1) as f64;
            for (i, x) in nodes.iter_mut().enumerate() {
                *x = r_min + h * i as f64;
            }
        }
        GridKind::Geometric => {
            let step = math::ln(r_max / r_min) / (n - 1) as f64;
            for (i, x) in nodes.iter_mut().enumerate() {
                *x = r_min * math::exp(step * i as f64);
            }
        }
    }
    nodes[0] = r_min;
    nodes[n - 1] = r_max;

    RadialGrid::from_nodes(nodes, kind)
}

impl RadialGrid {
    /// Build directly from a strictly increasing node array.
    pub fn from_nodes(nodes: Vec<f64>, kind: GridKind) -> Result<RadialGrid> {
        let n = nodes.len();
        if n < 2 {
            return Err(Error::Parameter(format!("need at least 2 nodes, got {n}")));
        }
        if !(nodes[0] > 0.0) {
            return Err(Error::Parameter(format!(
                "first node must be positive, got {}",
                nodes[0]
            )));
        }
        for i in 1..n {
            if !(nodes[i] > nodes[i - 1]) {
                return Err(Error::Parameter(format!(
                    "nodes must be strictly increasing (violated at index {i})"
                )));
            }
        }

        let mut cell_width = vec![0.0; n - 1];
        let mut cell_mid = vec![0.0; n - 1];
        let mut cell_mass = vec![0.0; n - 1];
        for j in 0..n - 1 {
            let h = nodes[j + 1] - nodes[j];
            let mid = 0.5 * (nodes[j] + nodes[j + 1]);
            cell_width[j] = h;
            cell_mid[j] = mid;
            cell_mass[j] = h * mid;
        }

        let mut weights = vec![0.0; n];
        for j in 0..n - 1 {
            weights[j] += 0.5 * cell_mass[j];
            weights[j + 1] += 0.5 * cell_mass[j];
        }

        Ok(RadialGrid {
            r_min: nodes[0],
            r_max: nodes[n - 1],
            kind,
            nodes,
            weights,
            cell_width,
            cell_mid,
            cell_mass,
        })
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn n_cells(&self) -> usize {
        self.cell_width.len()
    }

    pub fn cell_width(&self) -> &[f64] {
        &self.cell_width
    }

    pub fn cell_mid(&self) -> &[f64] {
        &self.cell_mid
    }

    /// Exact cell masses `∫_{r_j}^{r_{j+1}} r dr`.
    pub fn cell_mass(&self) -> &[f64] {
        &self.cell_mass
    }

    pub fn check_len(&self, values: &[f64]) -> Result<()> {
        if values.len() == self.len() {
            Ok(())
        } else {
            Err(Error::Shape {
                expected: self.len(),
                got: values.len(),
            })
        }
    }

    /// Index of the node closest to `r`.
    pub fn nearest_node(&self, r: f64) -> usize {
        match self
            .nodes
            .binary_search_by(|x| x.partial_cmp(&r).expect("finite nodes"))
        {
            Ok(i) => i,
            Err(i) => {
                if i == 0 {
                    0
                } else if i >= self.len() {
                    self.len() - 1
                } else if r - self.nodes[i - 1] <= self.nodes[i] - r {
                    i - 1
                } else {
                    i
                }
            }
        }
    }
}

/// A function sampled on the nodes of a grid. Pairing with the right grid is
/// the caller's responsibility; every operation length-checks.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialFunction {
    values: Vec<f64>,
}

impl RadialFunction {
    pub fn new(grid: &RadialGrid, values: Vec<f64>) -> Result<RadialFunction> {
        grid.check_len(&values)?;
        Ok(RadialFunction { values })
    }

    pub fn zeros(grid: &RadialGrid) -> RadialFunction {
        RadialFunction {
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_fn(grid: &RadialGrid, mut f: impl FnMut(f64) -> f64) -> RadialFunction {
        RadialFunction {
            values: grid.nodes().iter().map(|&r| f(r)).collect(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Whether both endpoint samples vanish (compact-support surrogate).
    pub fn vanishes_at_endpoints(&self) -> bool {
        match (self.values.first(), self.values.last()) {
            (Some(&a), Some(&b)) => a == 0.0 && b == 0.0,
            _ => false,
        }
    }
}

/// Trapezoid quadrature of `∫ g(r) r dr` over the grid.
pub fn integrate(grid: &RadialGrid, g: &RadialFunction) -> Result<f64> {
    grid.check_len(g.values())?;
    Ok(dot_weights(grid, g.values()))
}

pub(crate) fn dot_weights(grid: &RadialGrid, values: &[f64]) -> f64 {
    grid.weights
        .iter()
        .zip(values)
        .map(|(w, v)| w * v)
        .sum()
}

/// Second-order finite differences: centered three-point stencils in the
/// interior, one-sided three-point stencils at the ends. Exact on quadratics.
pub fn differentiate(grid: &RadialGrid, g: &RadialFunction) -> Result<RadialFunction> {
    grid.check_len(g.values())?;
    Ok(RadialFunction {
        values: differentiate_values(grid, g.values()),
    })
}

pub(crate) fn differentiate_values(grid: &RadialGrid, v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let r = grid.nodes();
    let mut out = vec![0.0; n];
    if n == 2 {
        let s = (v[1] - v[0]) / (r[1] - r[0]);
        out[0] = s;
        out[1] = s;
        return out;
    }

    for i in 1..n - 1 {
        let hm = r[i] - r[i - 1];
        let hp = r[i + 1] - r[i];
        out[i] = -hp / (hm * (hm + hp)) * v[i - 1]
            + (hp - hm) / (hm * hp) * v[i]
            + hm / (hp * (hm + hp)) * v[i + 1];
    }
    {
        let h1 = r[1] - r[0];
        let h2 = r[2] - r[1];
        out[0] = -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * v[0] + (h1 + h2) / (h1 * h2) * v[1]
            - h1 / (h2 * (h1 + h2)) * v[2];
    }
    {
        let h1 = r[n - 1] - r[n - 2];
        let h2 = r[n - 2] - r[n - 3];
        out[n - 1] = (2.0 * h1 + h2) / (h1 * (h1 + h2)) * v[n - 1]
            - (h1 + h2) / (h1 * h2) * v[n - 2]
            + h1 / (h2 * (h1 + h2)) * v[n - 3];
    }
    out
}

/// Slope `(v_{j+1} − v_j)/h_j` on cell `j`.
#[inline]
pub(crate) fn cell_delta(grid: &RadialGrid, v: &[f64], j: usize) -> f64 {
    (v[j + 1] - v[j]) / grid.cell_width[j]
}

/// Average `(v_j + v_{j+1})/2` on cell `j`.
#[inline]
pub(crate) fn cell_mean(v: &[f64], j: usize) -> f64 {
    0.5 * (v[j] + v[j + 1])
}
