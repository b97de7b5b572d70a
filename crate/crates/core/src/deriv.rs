//! Second-order finite differences on [`Grid2D`].
//!
//! Interior nodes use central stencils; boundary rows and columns use
//! one-sided stencils of the same order.

use rayon::prelude::*;

use crate::grid::{ComplexField2D, Grid2D, ScalarField2D};

#[derive(Clone, Copy)]
enum Axis {
    X,
    Y,
}

fn stride_of(grid: &Grid2D, axis: Axis) -> (usize, usize, f64) {
    match axis {
        Axis::X => (1, grid.nx, grid.hx),
        Axis::Y => (grid.nx, grid.ny, grid.hy),
    }
}

#[inline]
fn first_at(f: &[f64], idx: usize, pos: usize, n: usize, stride: usize, h: f64) -> f64 {
    if pos == 0 {
        (-3.0 * f[idx] + 4.0 * f[idx + stride] - f[idx + 2 * stride]) / (2.0 * h)
    } else if pos + 1 == n {
        (3.0 * f[idx] - 4.0 * f[idx - stride] + f[idx - 2 * stride]) / (2.0 * h)
    } else {
        (f[idx + stride] - f[idx - stride]) / (2.0 * h)
    }
}

#[inline]
fn second_at(f: &[f64], idx: usize, pos: usize, n: usize, stride: usize, h: f64) -> f64 {
    let h2 = h * h;
    if pos == 0 {
        if n >= 4 {
            (2.0 * f[idx] - 5.0 * f[idx + stride] + 4.0 * f[idx + 2 * stride]
                - f[idx + 3 * stride])
                / h2
        } else {
            (f[idx] - 2.0 * f[idx + stride] + f[idx + 2 * stride]) / h2
        }
    } else if pos + 1 == n {
        if n >= 4 {
            (2.0 * f[idx] - 5.0 * f[idx - stride] + 4.0 * f[idx - 2 * stride]
                - f[idx - 3 * stride])
                / h2
        } else {
            (f[idx] - 2.0 * f[idx - stride] + f[idx - 2 * stride]) / h2
        }
    } else {
        (f[idx + stride] - 2.0 * f[idx] + f[idx - stride]) / h2
    }
}

fn apply(f: &ScalarField2D, axis: Axis, second: bool) -> ScalarField2D {
    let grid = f.grid;
    let (stride, n, h) = stride_of(&grid, axis);
    let values = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let (i, j) = grid.coords(idx);
            let pos = match axis {
                Axis::X => i,
                Axis::Y => j,
            };
            if second {
                second_at(&f.values, idx, pos, n, stride, h)
            } else {
                first_at(&f.values, idx, pos, n, stride, h)
            }
        })
        .collect();
    ScalarField2D { grid, values }
}

pub fn partial_x(f: &ScalarField2D) -> ScalarField2D {
    apply(f, Axis::X, false)
}

pub fn partial_y(f: &ScalarField2D) -> ScalarField2D {
    apply(f, Axis::Y, false)
}

pub fn partial_xx(f: &ScalarField2D) -> ScalarField2D {
    apply(f, Axis::X, true)
}

pub fn partial_yy(f: &ScalarField2D) -> ScalarField2D {
    apply(f, Axis::Y, true)
}

/// Mixed derivative as `partial_x(partial_y(f))`.
pub fn partial_xy(f: &ScalarField2D) -> ScalarField2D {
    partial_x(&partial_y(f))
}

/// First partials of both field components.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub ux: ScalarField2D,
    pub uy: ScalarField2D,
    pub vx: ScalarField2D,
    pub vy: ScalarField2D,
}

impl Gradients {
    pub fn of(w: &ComplexField2D) -> Self {
        Gradients {
            ux: partial_x(&w.u),
            uy: partial_y(&w.u),
            vx: partial_x(&w.v),
            vy: partial_y(&w.v),
        }
    }

    /// `u_x v_y - u_y v_x` at one node.
    #[inline]
    pub fn jacobian_at(&self, idx: usize) -> f64 {
        self.ux.values[idx] * self.vy.values[idx] - self.uy.values[idx] * self.vx.values[idx]
    }
}

/// First and second partials of both field components.
#[derive(Debug, Clone)]
pub struct Hessians {
    pub uxx: ScalarField2D,
    pub uyy: ScalarField2D,
    pub uxy: ScalarField2D,
    pub vxx: ScalarField2D,
    pub vyy: ScalarField2D,
    pub vxy: ScalarField2D,
}

impl Hessians {
    pub fn of(w: &ComplexField2D) -> Self {
        Hessians {
            uxx: partial_xx(&w.u),
            uyy: partial_yy(&w.u),
            uxy: partial_xy(&w.u),
            vxx: partial_xx(&w.v),
            vyy: partial_yy(&w.v),
            vxy: partial_xy(&w.v),
        }
    }
}

/// Jacobian density `J = u_x v_y - u_y v_x` of the map `(x, y) -> (u, v)`.
///
/// In complex form `omega_x conj(omega)_y - omega_y conj(omega)_x = -2 i J`.
pub fn jacobian_det(w: &ComplexField2D) -> ScalarField2D {
    let g = Gradients::of(w);
    let grid = w.grid();
    let values = (0..grid.len()).into_par_iter().map(|idx| g.jacobian_at(idx)).collect();
    ScalarField2D { grid, values }
}
