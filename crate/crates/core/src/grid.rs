//! Uniform grids and the fields sampled on them.
//!
//! Storage is row-major with `y` as the outer index: node `(i, j)` lives at
//! `j * nx + i`, where `i` runs along `x`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
    pub x0: f64,
    pub y0: f64,
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize, hx: f64, hy: f64, x0: f64, y0: f64) -> Result<Self> {
        if nx < 3 || ny < 3 {
            return Err(Error::InvalidGrid(format!(
                "need at least 3 nodes per axis, got {nx}x{ny}"
            )));
        }
        if !(hx > 0.0 && hx.is_finite() && hy > 0.0 && hy.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "spacings must be positive and finite, got hx = {hx}, hy = {hy}"
            )));
        }
        if !(x0.is_finite() && y0.is_finite()) {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        Ok(Grid2D { nx, ny, hx, hy, x0, y0 })
    }

    /// Grid with `nx * ny` nodes spanning `[xmin, xmax] x [ymin, ymax]`.
    pub fn spanning(nx: usize, ny: usize, xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Result<Self> {
        if nx < 3 || ny < 3 {
            return Err(Error::InvalidGrid(format!(
                "need at least 3 nodes per axis, got {nx}x{ny}"
            )));
        }
        let hx = (xmax - xmin) / (nx - 1) as f64;
        let hy = (ymax - ymin) / (ny - 1) as f64;
        Grid2D::new(nx, ny, hx, hy, xmin, ymin)
    }

    /// Square grid of `n x n` nodes centred on the origin with half-width `half`.
    pub fn centered_square(n: usize, half: f64) -> Result<Self> {
        Grid2D::spanning(n, n, -half, half, -half, half)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.hx
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        self.y0 + j as f64 * self.hy
    }

    #[inline]
    pub fn position(&self, idx: usize) -> (f64, f64) {
        let (i, j) = self.coords(idx);
        (self.x(i), self.y(j))
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        let (i, j) = self.coords(idx);
        i == 0 || j == 0 || i + 1 == self.nx || j + 1 == self.ny
    }

    /// Same node layout, spacings within a relative `1e-12`.
    pub fn same_as(&self, other: &Grid2D) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);
        self.nx == other.nx
            && self.ny == other.ny
            && close(self.hx, other.hx)
            && close(self.hy, other.hy)
            && close(self.x0, other.x0)
            && close(self.y0, other.y0)
    }

    /// Largest spacing, used as the `h` of convergence studies.
    pub fn spacing(&self) -> f64 {
        self.hx.max(self.hy)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField2D {
    pub grid: Grid2D,
    pub values: Vec<f64>,
}

impl ScalarField2D {
    pub fn new(grid: Grid2D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::FieldMismatch(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(node) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { node });
        }
        Ok(ScalarField2D { grid, values })
    }

    pub fn zeros(grid: Grid2D) -> Self {
        ScalarField2D { grid, values: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: Grid2D, c: f64) -> Self {
        ScalarField2D { grid, values: vec![c; grid.len()] }
    }

    /// Sample `f(x, y)` at every node.
    pub fn from_fn<F>(grid: Grid2D, f: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Sync,
    {
        let values = (0..grid.len())
            .into_par_iter()
            .map(|idx| {
                let (x, y) = grid.position(idx);
                f(x, y)
            })
            .collect();
        ScalarField2D { grid, values }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn map<F: Fn(f64) -> f64 + Sync>(&self, f: F) -> Self {
        ScalarField2D {
            grid: self.grid,
            values: self.values.par_iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Largest `|value|` over nodes where `mask` is set; zero for an empty mask.
    pub fn max_abs_masked(&self, mask: &[bool]) -> f64 {
        self.values
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .fold(0.0_f64, |m, (v, _)| m.max(v.abs()))
    }
}

/// Stereographic field `omega = u + i v`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField2D {
    pub u: ScalarField2D,
    pub v: ScalarField2D,
}

impl ComplexField2D {
    pub fn new(u: ScalarField2D, v: ScalarField2D) -> Result<Self> {
        if !u.grid.same_as(&v.grid) {
            return Err(Error::FieldMismatch("u and v live on different grids".into()));
        }
        Ok(ComplexField2D { u, v })
    }

    pub fn from_fn<F>(grid: Grid2D, f: F) -> Self
    where
        F: Fn(f64, f64) -> Complex64 + Sync,
    {
        let vals: Vec<Complex64> = (0..grid.len())
            .into_par_iter()
            .map(|idx| {
                let (x, y) = grid.position(idx);
                f(x, y)
            })
            .collect();
        Self::from_values(grid, &vals)
    }

    pub fn from_values(grid: Grid2D, vals: &[Complex64]) -> Self {
        ComplexField2D {
            u: ScalarField2D { grid, values: vals.iter().map(|w| w.re).collect() },
            v: ScalarField2D { grid, values: vals.iter().map(|w| w.im).collect() },
        }
    }

    pub fn constant(grid: Grid2D, w: Complex64) -> Self {
        ComplexField2D {
            u: ScalarField2D::constant(grid, w.re),
            v: ScalarField2D::constant(grid, w.im),
        }
    }

    #[inline]
    pub fn grid(&self) -> Grid2D {
        self.u.grid
    }

    #[inline]
    pub fn omega(&self, idx: usize) -> Complex64 {
        Complex64::new(self.u.values[idx], self.v.values[idx])
    }

    /// `|omega|^2 = u^2 + v^2`.
    #[inline]
    pub fn rho(&self, idx: usize) -> f64 {
        let (u, v) = (self.u.values[idx], self.v.values[idx]);
        u * u + v * v
    }

    /// The field with its components exchanged, `(u, v) -> (v, u)`.
    pub fn swapped(&self) -> Self {
        ComplexField2D { u: self.v.clone(), v: self.u.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        for (node, (a, b)) in self.u.values.iter().zip(&self.v.values).enumerate() {
            if !(a.is_finite() && b.is_finite()) {
                return Err(Error::NonFinite { node });
            }
        }
        Ok(())
    }
}

/// Sphere-valued field `S = (s1, s2, s3)` with `|S| = 1` at every node.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitVectorField {
    pub s1: ScalarField2D,
    pub s2: ScalarField2D,
    pub s3: ScalarField2D,
}

impl UnitVectorField {
    /// Builds the field, rejecting nodes whose norm is off by more than `1e-12`.
    pub fn new(s1: ScalarField2D, s2: ScalarField2D, s3: ScalarField2D) -> Result<Self> {
        if !s1.grid.same_as(&s2.grid) || !s1.grid.same_as(&s3.grid) {
            return Err(Error::FieldMismatch("components live on different grids".into()));
        }
        for idx in 0..s1.grid.len() {
            let n2 = s1.values[idx].powi(2) + s2.values[idx].powi(2) + s3.values[idx].powi(2);
            if (n2 - 1.0).abs() > 1e-12 {
                return Err(Error::FieldMismatch(format!(
                    "node {idx} has |S|^2 = {n2}, not a unit vector"
                )));
            }
        }
        Ok(UnitVectorField { s1, s2, s3 })
    }

    #[inline]
    pub fn grid(&self) -> Grid2D {
        self.s1.grid
    }

    #[inline]
    pub fn at(&self, idx: usize) -> [f64; 3] {
        [self.s1.values[idx], self.s2.values[idx], self.s3.values[idx]]
    }

    pub fn max_norm_defect(&self) -> f64 {
        (0..self.grid().len())
            .map(|idx| {
                let s = self.at(idx);
                (s[0] * s[0] + s[1] * s[1] + s[2] * s[2] - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }
}
