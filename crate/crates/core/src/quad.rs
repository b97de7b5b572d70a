//! Deterministic summation and tensor-product quadrature on uniform grids.

use crate::grid::{Grid2D, ScalarField2D};

/// Pairwise (cascade) summation with a fixed split order, so the result does
/// not depend on how the inputs were produced.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 64;
    if xs.len() <= LEAF {
        let mut s = 0.0;
        for &x in xs {
            s += x;
        }
        s
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

/// 1D weights: composite Simpson for odd node counts, trapezoid otherwise.
pub fn axis_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![0.0; n];
    if n % 2 == 1 && n >= 3 {
        for (k, wk) in w.iter_mut().enumerate() {
            *wk = if k == 0 || k + 1 == n {
                h / 3.0
            } else if k % 2 == 1 {
                4.0 * h / 3.0
            } else {
                2.0 * h / 3.0
            };
        }
    } else {
        for (k, wk) in w.iter_mut().enumerate() {
            *wk = if k == 0 || k + 1 == n { h / 2.0 } else { h };
        }
    }
    w
}

/// Product weights for every node of `grid`, row-major.
pub fn node_weights(grid: &Grid2D) -> Vec<f64> {
    let wx = axis_weights(grid.nx, grid.hx);
    let wy = axis_weights(grid.ny, grid.hy);
    let mut out = Vec::with_capacity(grid.len());
    for wyj in &wy {
        for wxi in &wx {
            out.push(wxi * wyj);
        }
    }
    out
}

/// Integral of `f` over the grid rectangle.
pub fn integrate(f: &ScalarField2D) -> f64 {
    let w = node_weights(&f.grid);
    let terms: Vec<f64> = f.values.iter().zip(&w).map(|(a, b)| a * b).collect();
    pairwise_sum(&terms)
}

/// Integral of `f` restricted to nodes where `mask` is set (others count as zero).
pub fn integrate_masked(f: &ScalarField2D, mask: &[bool]) -> f64 {
    let w = node_weights(&f.grid);
    let terms: Vec<f64> = f
        .values
        .iter()
        .zip(&w)
        .zip(mask)
        .map(|((a, b), &m)| if m { a * b } else { 0.0 })
        .collect();
    pairwise_sum(&terms)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for k in 0..n {
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for m in 2..=n {
                let p2 = ((2 * m - 1) as f64 * x * p1 - (m - 1) as f64 * p0) / m as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[k] = x;
        weights[k] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}
