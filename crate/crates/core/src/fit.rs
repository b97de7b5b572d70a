//! Least-squares representation of nodal data as a function of the field
//! values `(u, v)`: quadratic polynomials plus a lattice of Gaussian bumps.

use nalgebra::{DMatrix, DVector};

use crate::grid::ComplexField2D;

/// Row cap for the least-squares system.
pub const MAX_FIT_ROWS: usize = 20_000;

#[derive(Debug, Clone)]
pub struct UvFit {
    coeffs: Vec<f64>,
    centers: Vec<(f64, f64)>,
    width: f64,
    /// Largest `|fit - data|` over all supplied nodes.
    pub max_error: f64,
}

const N_POLY: usize = 6;

impl UvFit {
    fn basis(&self, u: f64, v: f64, out: &mut Vec<f64>, grad: Option<&mut Vec<(f64, f64)>>) {
        out.clear();
        out.extend_from_slice(&[1.0, u, v, u * u, u * v, v * v]);
        let mut gs = grad;
        if let Some(g) = gs.as_deref_mut() {
            g.clear();
            g.extend_from_slice(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (2.0 * u, 0.0), (v, u), (0.0, 2.0 * v)]);
        }
        let inv = 1.0 / (self.width * self.width);
        for &(cu, cv) in &self.centers {
            let (du, dv) = (u - cu, v - cv);
            let e = (-(du * du + dv * dv) * inv).exp();
            out.push(e);
            if let Some(g) = gs.as_deref_mut() {
                g.push((-2.0 * du * inv * e, -2.0 * dv * inv * e));
            }
        }
    }

    pub fn eval(&self, u: f64, v: f64) -> f64 {
        let mut b = Vec::with_capacity(self.coeffs.len());
        self.basis(u, v, &mut b, None);
        b.iter().zip(&self.coeffs).map(|(a, c)| a * c).sum()
    }

    pub fn grad(&self, u: f64, v: f64) -> (f64, f64) {
        let mut b = Vec::with_capacity(self.coeffs.len());
        let mut g = Vec::with_capacity(self.coeffs.len());
        self.basis(u, v, &mut b, Some(&mut g));
        g.iter().zip(&self.coeffs).fold((0.0, 0.0), |acc, (d, c)| (acc.0 + c * d.0, acc.1 + c * d.1))
    }
}

/// Fits `data[idx]` over the nodes with `mask[idx]` set, using a `lattice x
/// lattice` set of Gaussians over the padded bounding box of attained values.
pub fn fit_uv(w: &ComplexField2D, data: &[f64], mask: &[bool], lattice: usize) -> UvFit {
    let nodes: Vec<usize> = (0..data.len()).filter(|&i| mask[i]).collect();
    let (mut ua, mut ub, mut va, mut vb) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &i in &nodes {
        ua = ua.min(w.u.values[i]);
        ub = ub.max(w.u.values[i]);
        va = va.min(w.v.values[i]);
        vb = vb.max(w.v.values[i]);
    }
    let mut fit = UvFit { coeffs: vec![0.0; N_POLY], centers: vec![], width: 1.0, max_error: 0.0 };
    if nodes.is_empty() {
        return fit;
    }
    let span = (ub - ua).max(vb - va).max(1e-12);
    let pad = 0.1 * span;
    let (ua, ub, va, vb) = (ua - pad, ub + pad, va - pad, vb + pad);
    if lattice >= 2 {
        for j in 0..lattice {
            for i in 0..lattice {
                let s = |k: usize| k as f64 / (lattice - 1) as f64;
                fit.centers.push((ua + s(i) * (ub - ua), va + s(j) * (vb - va)));
            }
        }
        fit.width = (1.5 * (ub - ua).max(vb - va) / (lattice - 1) as f64).max(1e-12);
    }
    let stride = nodes.len().div_ceil(MAX_FIT_ROWS).max(1);
    let rows: Vec<usize> = nodes.iter().copied().step_by(stride).collect();
    let ncol = N_POLY + fit.centers.len();
    let mut a = DMatrix::<f64>::zeros(rows.len(), ncol);
    let mut rhs = DVector::<f64>::zeros(rows.len());
    let mut b = Vec::with_capacity(ncol);
    for (r, &i) in rows.iter().enumerate() {
        fit.basis(w.u.values[i], w.v.values[i], &mut b, None);
        for (c, val) in b.iter().enumerate() {
            a[(r, c)] = *val;
        }
        rhs[r] = data[i];
    }
    // Column scaling keeps the SVD threshold meaningful across bases.
    let scales: Vec<f64> = (0..ncol).map(|c| a.column(c).norm().max(1e-300)).collect();
    for (c, s) in scales.iter().enumerate() {
        a.column_mut(c).scale_mut(1.0 / s);
    }
    let svd = a.svd(true, true);
    let max_sv = svd.singular_values.max();
    let sol = svd.solve(&rhs, 1e-12 * max_sv).unwrap_or_else(|_| DVector::zeros(ncol));
    fit.coeffs = sol.iter().zip(&scales).map(|(x, s)| x / s).collect();
    fit.max_error = nodes
        .iter()
        .map(|&i| (fit.eval(w.u.values[i], w.v.values[i]) - data[i]).abs())
        .fold(0.0, f64::max);
    fit
}
