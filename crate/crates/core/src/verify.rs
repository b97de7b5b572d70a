//! Independent checks on a field: Euler-Lagrange residuals, dual equations,
//! divergence identities, energies, topological charge and saturation.
//!
//! Orientation: the grid is right-handed and `omega = conj(z)` has `Q = +1`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::deriv::{partial_x, partial_y, Gradients, Hessians};
use crate::error::Result;
use crate::grid::{ComplexField2D, Grid2D, ScalarField2D, UnitVectorField};
use crate::harmonic::{Conjugate, HarmonicData};
use crate::potential::{Branch, ModelParams, PotentialSpec};
use crate::quad::integrate_masked;
use crate::restricted::residual_bogomolny_restricted;

/// Width of the excluded band around a compacton edge, in nodes.
pub const EDGE_COLLAR_NODES: usize = 3;

/// Nodes used for norms and quadrature, and nodes reported separately.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    /// Nodes entering interior norms.
    pub interior: Vec<bool>,
    /// Band around a compacton edge.
    pub collar: Vec<bool>,
    /// Disc around the soliton centre excluded from norms.
    pub core: Vec<bool>,
    pub core_radius: f64,
    /// Disc excluded from quadrature.
    pub hole: Vec<bool>,
    pub hole_radius: f64,
}

impl Region {
    /// Every node at least `depth` nodes away from the grid boundary.
    pub fn interior(grid: &Grid2D, depth: usize) -> Self {
        let interior = (0..grid.len())
            .map(|idx| {
                let (i, j) = grid.coords(idx);
                i >= depth && j >= depth && i + depth < grid.nx && j + depth < grid.ny
            })
            .collect();
        Region {
            interior,
            collar: vec![false; grid.len()],
            core: vec![false; grid.len()],
            core_radius: 0.0,
            hole: vec![false; grid.len()],
            hole_radius: 0.0,
        }
    }

    /// Interior minus a collar of `collar_nodes` spacings about the circle of
    /// radius `edge`, and minus the disc `r < core_radius`.
    pub fn compacton(
        grid: &Grid2D,
        center: (f64, f64),
        edge: Option<f64>,
        collar_nodes: usize,
        core_radius: f64,
    ) -> Self {
        let mut reg = Region::interior(grid, 1);
        let band = collar_nodes as f64 * grid.spacing();
        for idx in 0..grid.len() {
            let (x, y) = grid.position(idx);
            let r = (x - center.0).hypot(y - center.1);
            if let Some(e) = edge {
                if (r - e).abs() <= band {
                    reg.collar[idx] = true;
                    reg.interior[idx] = false;
                }
            }
            if r < core_radius {
                reg.core[idx] = true;
                reg.interior[idx] = false;
            }
        }
        reg.core_radius = core_radius;
        reg.hole = reg.core.clone();
        reg.hole_radius = core_radius;
        reg
    }

    /// Hedgehog about `center` with centre value `f0`; see [`default_core_radius`].
    /// A pole at the centre keeps regular densities, so only the nodes whose
    /// stencils reach the centre node are dropped from quadrature.
    pub fn hedgehog(grid: &Grid2D, center: (f64, f64), edge: Option<f64>, f0: f64, r_max: f64) -> Self {
        let core = default_core_radius(f0, edge, r_max);
        let mut reg = Region::compacton(grid, center, edge, EDGE_COLLAR_NODES, core);
        if f0 >= POLE_CENTRE {
            let hole = 2.5 * grid.spacing();
            reg.hole = (0..grid.len())
                .map(|idx| {
                    let (x, y) = grid.position(idx);
                    (x - center.0).hypot(y - center.1) < hole
                })
                .collect();
            reg.hole_radius = hole;
        }
        reg
    }

    /// Nodes used for quadrature.
    pub fn quadrature(&self) -> Vec<bool> {
        self.hole.iter().map(|c| !c).collect()
    }

    pub fn collar_count(&self) -> usize {
        self.collar.iter().filter(|&&c| c).count()
    }
}

/// Centre values at and above this are treated as the pole `|omega| = inf`.
pub const POLE_CENTRE: f64 = 1e3;

/// Default excluded core for a hedgehog with centre value `f0`: half the
/// support radius unless the centre is effectively the vacuum. For `f0` of
/// order one the lifted field has a phase singularity there, which spoils both
/// norms and quadrature; at a pole the densities stay regular but residuals
/// carry factors of `(1+rho)^2` and are dropped from norms only.
pub fn default_core_radius(f0: f64, edge: Option<f64>, r_max: f64) -> f64 {
    if f0 > 1e-3 {
        0.5 * edge.unwrap_or(0.5 * r_max)
    } else {
        0.0
    }
}

#[derive(Clone, Copy)]
struct Node {
    w: Complex64,
    wx: Complex64,
    wy: Complex64,
    wxx: Complex64,
    wyy: Complex64,
    wxy: Complex64,
}

fn node_data(w: &ComplexField2D, g: &Gradients, h: &Hessians, idx: usize) -> Node {
    let c = |a: &ScalarField2D, b: &ScalarField2D| Complex64::new(a.values[idx], b.values[idx]);
    Node {
        w: w.omega(idx),
        wx: c(&g.ux, &g.vx),
        wy: c(&g.uy, &g.vy),
        wxx: c(&h.uxx, &h.vxx),
        wyy: c(&h.uyy, &h.vyy),
        wxy: c(&h.uxy, &h.vxy),
    }
}

/// `V_omega = (V_u - i V_v) / 2`.
#[inline]
fn v_omega(v: &PotentialSpec, u: f64, vv: f64) -> Complex64 {
    let (a, b) = v.grad(u, vv);
    Complex64::new(0.5 * a, -0.5 * b)
}

/// Complex left-hand side of the restricted Euler-Lagrange equation at every node.
pub fn el_restricted_complex(w: &ComplexField2D, v: &PotentialSpec, params: &ModelParams) -> Vec<Complex64> {
    let g = Gradients::of(w);
    let h = Hessians::of(w);
    let beta = params.beta;
    (0..w.grid().len())
        .into_par_iter()
        .map(|idx| {
            let n = node_data(w, &g, &h, idx);
            let wc = n.w.conj();
            let (wxc, wyc) = (n.wx.conj(), n.wy.conj());
            let (wxxc, wyyc, wxyc) = (n.wxx.conj(), n.wyy.conj(), n.wxy.conj());
            let jc = n.wx * wyc - n.wy * wxc;
            let d = 1.0 + n.w.norm_sqr();
            let d4 = d.powi(4);
            let t1 = 16.0 * beta * jc * jc * wc / (d4 * d);
            let t2 = -8.0 * beta
                * (n.wxx * wyc * wyc + n.wyy * wxc * wxc + (n.wx * wyc + n.wy * wxc) * wxyc)
                / d4;
            let t3 = 8.0 * beta * (2.0 * n.wxy * wxc * wyc + n.wx * wxc * wyyc + n.wy * wyc * wxxc) / d4;
            t1 + t2 + t3 - v_omega(v, n.w.re, n.w.im)
        })
        .collect()
}

/// Modulus of the restricted Euler-Lagrange residual.
pub fn el_residual_restricted(w: &ComplexField2D, v: &PotentialSpec, params: &ModelParams) -> ScalarField2D {
    let values = el_restricted_complex(w, v, params).iter().map(|z| z.norm()).collect();
    ScalarField2D { grid: w.grid(), values }
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn el_full_one(
    l1: f64,
    l2: f64,
    (u, v): (f64, f64),
    (ux, uy, vx, vy): (f64, f64, f64, f64),
    (uxx, uyy, uxy): (f64, f64, f64),
    (vxx, vyy, vxy): (f64, f64, f64),
    v_u: f64,
) -> f64 {
    let d = 1.0 + u * u + v * v;
    let j = ux * vy - uy * vx;
    l1 * (uxx + uyy) / (d * d)
        - 2.0 * l1 * (u * (ux * ux + uy * uy - vx * vx - vy * vy) + 2.0 * v * (ux * vx + uy * vy)) / d.powi(3)
        + 2.0 * l2
            * (uxx * vy * vy + uyy * vx * vx + (ux * vy + uy * vx) * vxy
                - 2.0 * uxy * vx * vy
                - ux * vx * vyy
                - uy * vy * vxx)
            / d.powi(4)
        - 8.0 * l2 * j * j * u / d.powi(5)
        - v_u
}

/// Residuals of the full-model Euler-Lagrange equations for `u` and `v`.
pub fn el_residual_full(
    w: &ComplexField2D,
    v: &PotentialSpec,
    params: &ModelParams,
) -> (ScalarField2D, ScalarField2D) {
    let g = Gradients::of(w);
    let h = Hessians::of(w);
    let grid = w.grid();
    let (l1, l2) = (params.lambda1, params.lambda2);
    let pairs: Vec<(f64, f64)> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let (u, vv) = (w.u.values[idx], w.v.values[idx]);
            let (ux, uy, vx, vy) = (g.ux.values[idx], g.uy.values[idx], g.vx.values[idx], g.vy.values[idx]);
            let us = (h.uxx.values[idx], h.uyy.values[idx], h.uxy.values[idx]);
            let vs = (h.vxx.values[idx], h.vyy.values[idx], h.vxy.values[idx]);
            let (v_u, v_v) = v.grad(u, vv);
            let eu = el_full_one(l1, l2, (u, vv), (ux, uy, vx, vy), us, vs, v_u);
            // The density is symmetric under (u, v) -> (v, u).
            let ev = el_full_one(l1, l2, (vv, u), (vx, vy, ux, uy), vs, us, v_v);
            (eu, ev)
        })
        .collect();
    (
        ScalarField2D { grid, values: pairs.iter().map(|p| p.0).collect() },
        ScalarField2D { grid, values: pairs.iter().map(|p| p.1).collect() },
    )
}

/// Names of the fields returned by [`dual_residuals_restricted`], in order.
pub const DUAL_NAMES: [&str; 8] = [
    "gorne1",
    "gorne2",
    "dolne1",
    "dolne2",
    "dolne3",
    "dolne4",
    "divergence",
    "potential_condition",
];

/// Moduli of the six dual equations with `G2 = G3 = const`, followed by the
/// divergence combination `-8 beta Jc^2 / (1+rho)^4 + G1 Jc` and the potential
/// condition `V + G1^2 (1+rho)^4 / (16 beta)`. Here `Jc = -2 i J`.
pub fn dual_residuals_restricted(
    w: &ComplexField2D,
    v: &PotentialSpec,
    params: &ModelParams,
    sigma: Branch,
) -> Result<Vec<ScalarField2D>> {
    let g = Gradients::of(w);
    let grid = w.grid();
    let beta = params.beta;
    let c = Complex64::new(0.0, -sigma.sign() * 4.0 * beta.sqrt());
    let rows = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let om = w.omega(idx);
            let wx = Complex64::new(g.ux.values[idx], g.vx.values[idx]);
            let wy = Complex64::new(g.uy.values[idx], g.vy.values[idx]);
            let (wxc, wyc) = (wx.conj(), wy.conj());
            let jc = wx * wyc - wy * wxc;
            let d = 1.0 + om.norm_sqr();
            let d4 = d.powi(4);
            let s = v.sqrt_at(om.re, om.im, idx)?;
            let vw = v_omega(v, om.re, om.im);
            let g1 = c * s / (d * d);
            let (ratio, ratio_c) = if s > 1e-150 {
                (vw / (2.0 * s), vw.conj() / (2.0 * s))
            } else {
                (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))
            };
            let g1_w = c * (ratio / (d * d) - 2.0 * s * om.conj() / d.powi(3));
            let g1_wc = c * (ratio_c / (d * d) - 2.0 * s * om / d.powi(3));
            let k = 8.0 * beta * jc / d4;
            let out = [
                16.0 * beta * jc * jc * om.conj() / (d4 * d) + vw + g1_w * jc,
                16.0 * beta * jc * jc * om / (d4 * d) + vw.conj() + g1_wc * jc,
                -k * wyc + g1 * wyc,
                k * wxc - g1 * wxc,
                k * wy - g1 * wy,
                -k * wx + g1 * wx,
                -8.0 * beta * jc * jc / d4 + g1 * jc,
                v.eval(om.re, om.im) + g1 * g1 * d4 / (16.0 * beta),
            ];
            Ok(out.map(|z| z.norm()))
        })
        .collect::<Result<Vec<[f64; 8]>>>()?;
    Ok((0..DUAL_NAMES.len())
        .map(|k| ScalarField2D { grid, values: rows.iter().map(|r| r[k]).collect() })
        .collect())
}

/// Residuals of the four full-model divergence identities:
///
/// * `lambda1 (u_x^2 + v_x^2)/(1+rho)^2 + H1 J + D_x H2`
/// * `lambda1 (u_x u_y + v_x v_y)/(1+rho)^2 + D_y H2`
/// * `lambda1 (u_x u_y + v_x v_y)/(1+rho)^2 + D_x H3`
/// * `lambda1 (u_y^2 + v_y^2)/(1+rho)^2 + H1 J + D_y H3`
///
/// with `H1 = lambda1 / (1+rho)^2` and total derivatives by the chain rule.
pub fn divergence_residuals_full(
    w: &ComplexField2D,
    h2: &HarmonicData,
    h3: &Conjugate,
    params: &ModelParams,
) -> [ScalarField2D; 4] {
    let g = Gradients::of(w);
    let grid = w.grid();
    let l1 = params.lambda1;
    let rows: Vec<[f64; 4]> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let (u, v) = (w.u.values[idx], w.v.values[idx]);
            let (ux, uy, vx, vy) = (g.ux.values[idx], g.uy.values[idx], g.vx.values[idx], g.vy.values[idx]);
            let d2 = (1.0 + u * u + v * v).powi(2);
            let j = ux * vy - uy * vx;
            let h1 = l1 / d2;
            let (h2u, h2v) = h2.grad(u, v);
            let (h3u, h3v) = h3.grad(u, v);
            let cross = l1 * (ux * uy + vx * vy) / d2;
            [
                l1 * (ux * ux + vx * vx) / d2 + h1 * j + h2u * ux + h2v * vx,
                cross + h2u * uy + h2v * vy,
                cross + h3u * ux + h3v * vx,
                l1 * (uy * uy + vy * vy) / d2 + h1 * j + h3u * uy + h3v * vy,
            ]
        })
        .collect();
    std::array::from_fn(|k| ScalarField2D { grid, values: rows.iter().map(|r| r[k]).collect() })
}

/// `D_y H2 - D_x H3` along the field.
pub fn compatibility_residual(w: &ComplexField2D, h2: &HarmonicData, h3: &Conjugate) -> ScalarField2D {
    let g = Gradients::of(w);
    let grid = w.grid();
    let values = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let (u, v) = (w.u.values[idx], w.v.values[idx]);
            let (h2u, h2v) = h2.grad(u, v);
            let (h3u, h3v) = h3.grad(u, v);
            (h2u * g.uy.values[idx] + h2v * g.vy.values[idx]) - (h3u * g.ux.values[idx] + h3v * g.vx.values[idx])
        })
        .collect();
    ScalarField2D { grid, values }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyParts {
    pub total: f64,
    pub quartic: f64,
    pub o3: f64,
    pub potential: f64,
    /// Boundary density below `1e-8` of the maximum density.
    pub boundary_decays: bool,
}

fn energy_from_densities(grid: &Grid2D, dens: &[[f64; 3]], mask: &[bool]) -> EnergyParts {
    let part = |k: usize| {
        let f = ScalarField2D { grid: *grid, values: dens.iter().map(|d| 0.5 * d[k]).collect() };
        integrate_masked(&f, mask)
    };
    let (o3, quartic, potential) = (part(0), part(1), part(2));
    let total_density: Vec<f64> = dens.iter().map(|d| d[0] + d[1] + d[2]).collect();
    let max_d = total_density.iter().zip(mask).filter(|(_, &m)| m).fold(0.0_f64, |a, (b, _)| a.max(b.abs()));
    let max_b = (0..grid.len())
        .filter(|&i| grid.is_boundary(i) && mask[i])
        .fold(0.0_f64, |a, i| a.max(total_density[i].abs()));
    EnergyParts {
        total: o3 + quartic + potential,
        quartic,
        o3,
        potential,
        boundary_decays: max_b <= 1e-8 * max_d,
    }
}

fn densities(
    w: &ComplexField2D,
    v: &PotentialSpec,
    l1: f64,
    l2: f64,
    mask: &[bool],
) -> Result<Vec<[f64; 3]>> {
    let g = Gradients::of(w);
    (0..w.grid().len())
        .into_par_iter()
        .map(|idx| {
            if !mask[idx] {
                return Ok([0.0; 3]);
            }
            let (u, vv) = (w.u.values[idx], w.v.values[idx]);
            let (ux, uy, vx, vy) = (g.ux.values[idx], g.uy.values[idx], g.vx.values[idx], g.vy.values[idx]);
            let d = 1.0 + u * u + vv * vv;
            let j = ux * vy - uy * vx;
            let pot = v.checked_at(u, vv, idx)?;
            Ok([
                0.5 * l1 * (ux * ux + uy * uy + vx * vx + vy * vy) / (d * d),
                l2 * j * j / d.powi(4),
                pot,
            ])
        })
        .collect()
}

/// `E = 1/2 int [16 beta J^2 / (1+rho)^4 + V]` over `mask`.
pub fn energy_restricted_masked(
    w: &ComplexField2D,
    v: &PotentialSpec,
    params: &ModelParams,
    mask: &[bool],
) -> Result<EnergyParts> {
    let d = densities(w, v, 0.0, 16.0 * params.beta, mask)?;
    Ok(energy_from_densities(&w.grid(), &d, mask))
}

pub fn energy_restricted(w: &ComplexField2D, v: &PotentialSpec, params: &ModelParams) -> Result<EnergyParts> {
    energy_restricted_masked(w, v, params, &vec![true; w.grid().len()])
}

/// `E = 1/2 int [lambda1/2 |grad omega|^2/(1+rho)^2 + lambda2 J^2/(1+rho)^4 + V]` over `mask`.
pub fn energy_full_masked(
    w: &ComplexField2D,
    v: &PotentialSpec,
    params: &ModelParams,
    mask: &[bool],
) -> Result<EnergyParts> {
    let d = densities(w, v, params.lambda1, params.lambda2, mask)?;
    Ok(energy_from_densities(&w.grid(), &d, mask))
}

pub fn energy_full(w: &ComplexField2D, v: &PotentialSpec, params: &ModelParams) -> Result<EnergyParts> {
    energy_full_masked(w, v, params, &vec![true; w.grid().len()])
}

/// Charge density `q = -J / (pi (1+rho)^2)`.
pub fn charge_density(w: &ComplexField2D) -> ScalarField2D {
    let g = Gradients::of(w);
    let grid = w.grid();
    let values = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let d = 1.0 + w.rho(idx);
            -g.jacobian_at(idx) / (std::f64::consts::PI * d * d)
        })
        .collect();
    ScalarField2D { grid, values }
}

pub fn topological_charge_masked(w: &ComplexField2D, mask: &[bool]) -> f64 {
    integrate_masked(&charge_density(w), mask)
}

pub fn topological_charge(w: &ComplexField2D) -> f64 {
    topological_charge_masked(w, &vec![true; w.grid().len()])
}

/// `Q = -(1 / (4 pi)) int S . (S_x x S_y)`, evaluated directly on the unit vectors.
pub fn topological_charge_vector(s: &UnitVectorField, mask: &[bool]) -> f64 {
    let grid = s.grid();
    let sx = [partial_x(&s.s1), partial_x(&s.s2), partial_x(&s.s3)];
    let sy = [partial_y(&s.s1), partial_y(&s.s2), partial_y(&s.s3)];
    let values = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let a = [sx[0].values[idx], sx[1].values[idx], sx[2].values[idx]];
            let b = [sy[0].values[idx], sy[1].values[idx], sy[2].values[idx]];
            let cr = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
            let p = s.at(idx);
            -(p[0] * cr[0] + p[1] * cr[1] + p[2] * cr[2]) / (4.0 * std::f64::consts::PI)
        })
        .collect();
    integrate_masked(&ScalarField2D { grid, values }, mask)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Saturation {
    pub energy: f64,
    pub crossterm: f64,
    pub gap: f64,
    pub equipartition_defect: f64,
}

/// `CT = 4 sqrt(beta) int sqrt(V) |J| / (1+rho)^2` over `quad_mask`, and the
/// largest `|16 beta J^2 / (1+rho)^4 - V|` over `norm_mask`.
pub fn saturation_check(
    w: &ComplexField2D,
    v: &PotentialSpec,
    params: &ModelParams,
    quad_mask: &[bool],
    norm_mask: &[bool],
) -> Result<Saturation> {
    let g = Gradients::of(w);
    let grid = w.grid();
    let beta = params.beta;
    let rows = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let (u, vv) = (w.u.values[idx], w.v.values[idx]);
            let d = 1.0 + u * u + vv * vv;
            let j = g.jacobian_at(idx);
            let s = v.sqrt_at(u, vv, idx)?;
            let eq = 16.0 * beta * j * j / d.powi(4) - s * s;
            Ok((4.0 * beta.sqrt() * s * j.abs() / (d * d), eq))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let ct_density = ScalarField2D { grid, values: rows.iter().map(|r| r.0).collect() };
    let crossterm = integrate_masked(&ct_density, quad_mask);
    let energy = energy_restricted_masked(w, v, params, quad_mask)?.total;
    let equipartition_defect = rows
        .iter()
        .zip(norm_mask)
        .filter(|(_, &m)| m)
        .fold(0.0_f64, |a, (r, _)| a.max(r.1.abs()));
    Ok(Saturation { energy, crossterm, gap: energy - crossterm, equipartition_defect })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub model: String,
    pub grid_spacing: f64,
    pub el_residual_norm: f64,
    pub el_residual_collar: f64,
    pub bogomolny_residual_norm: Option<f64>,
    pub bogomolny_residual_collar: Option<f64>,
    pub dual_residual_names: Vec<String>,
    pub dual_residual_norms: Vec<f64>,
    pub energy: f64,
    pub energy_quartic: f64,
    pub energy_o3: f64,
    pub energy_potential: f64,
    pub charge: f64,
    pub charge_unmasked: f64,
    pub crossterm: f64,
    pub equipartition_defect: f64,
    pub boundary_decays: bool,
    pub excluded_core_radius: f64,
    pub quadrature_hole_radius: f64,
    pub collar_nodes: usize,
    pub sqrt_clamps: usize,
}

/// Full report for a restricted-model field.
pub fn verify_restricted(
    w: &ComplexField2D,
    v: &PotentialSpec,
    params: &ModelParams,
    sigma: Branch,
    region: &Region,
) -> Result<VerificationReport> {
    let quad = region.quadrature();
    let el = el_residual_restricted(w, v, params);
    let bog = residual_bogomolny_restricted(w, v, params, sigma)?;
    let duals = dual_residuals_restricted(w, v, params, sigma)?;
    let e = energy_restricted_masked(w, v, params, &quad)?;
    let sat = saturation_check(w, v, params, &quad, &region.interior)?;
    Ok(VerificationReport {
        model: "restricted".into(),
        grid_spacing: w.grid().spacing(),
        el_residual_norm: el.max_abs_masked(&region.interior),
        el_residual_collar: el.max_abs_masked(&region.collar),
        bogomolny_residual_norm: Some(bog.max_abs_masked(&region.interior)),
        bogomolny_residual_collar: Some(bog.max_abs_masked(&region.collar)),
        dual_residual_names: DUAL_NAMES.iter().map(|s| s.to_string()).collect(),
        dual_residual_norms: duals.iter().map(|d| d.max_abs_masked(&region.interior)).collect(),
        energy: e.total,
        energy_quartic: e.quartic,
        energy_o3: e.o3,
        energy_potential: e.potential,
        charge: topological_charge_masked(w, &quad),
        charge_unmasked: topological_charge(w),
        crossterm: sat.crossterm,
        equipartition_defect: sat.equipartition_defect,
        boundary_decays: e.boundary_decays,
        excluded_core_radius: region.core_radius,
        quadrature_hole_radius: region.hole_radius,
        collar_nodes: region.collar_count(),
        sqrt_clamps: v.clamp_count(),
    })
}

/// Full report for a full-model field. Divergence identities are included
/// when `h2` is given.
pub fn verify_full(
    w: &ComplexField2D,
    v: &PotentialSpec,
    params: &ModelParams,
    h2: Option<(&HarmonicData, &Conjugate)>,
    region: &Region,
) -> Result<VerificationReport> {
    let quad = region.quadrature();
    let (eu, ev) = el_residual_full(w, v, params);
    let el = ScalarField2D {
        grid: w.grid(),
        values: eu.values.iter().zip(&ev.values).map(|(a, b)| a.hypot(*b)).collect(),
    };
    let (names, norms) = match h2 {
        Some((h, c)) => {
            let d = divergence_residuals_full(w, h, c, params);
            let comp = compatibility_residual(w, h, c);
            (
                vec!["full_dywerg1", "full_dywerg2", "full_dywerg3", "full_dywerg4", "compatibility"],
                d.iter().chain(std::iter::once(&comp)).map(|f| f.max_abs_masked(&region.interior)).collect(),
            )
        }
        None => (vec![], vec![]),
    };
    let e = energy_full_masked(w, v, params, &quad)?;
    let sat = saturation_check(w, v, params, &quad, &region.interior)?;
    Ok(VerificationReport {
        model: "full".into(),
        grid_spacing: w.grid().spacing(),
        el_residual_norm: el.max_abs_masked(&region.interior),
        el_residual_collar: el.max_abs_masked(&region.collar),
        bogomolny_residual_norm: None,
        bogomolny_residual_collar: None,
        dual_residual_names: names.into_iter().map(String::from).collect(),
        dual_residual_norms: norms,
        energy: e.total,
        energy_quartic: e.quartic,
        energy_o3: e.o3,
        energy_potential: e.potential,
        charge: topological_charge_masked(w, &quad),
        charge_unmasked: topological_charge(w),
        crossterm: sat.crossterm,
        equipartition_defect: sat.equipartition_defect,
        boundary_decays: e.boundary_decays,
        excluded_core_radius: region.core_radius,
        quadrature_hole_radius: region.hole_radius,
        collar_nodes: region.collar_count(),
        sqrt_clamps: v.clamp_count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{builtin_potential, UvFunction};
    use crate::stereo::stereographic_project;

    fn all(g: &Grid2D) -> Vec<bool> {
        vec![true; g.len()]
    }

    #[test]
    fn vacuum_has_zero_everything() {
        let g = Grid2D::centered_square(17, 2.0).unwrap();
        let w = ComplexField2D::constant(g, Complex64::new(0.0, 0.0));
        let v = builtin_potential("old_baby", &[1.0]).unwrap();
        let p = ModelParams::restricted(1.0).unwrap();
        assert_eq!(el_residual_restricted(&w, &v, &p).max_abs(), 0.0);
        let (a, b) = el_residual_full(&w, &v, &ModelParams::full(1.0, 16.0).unwrap());
        assert_eq!(a.max_abs() + b.max_abs(), 0.0);
        let e = energy_restricted(&w, &v, &p).unwrap();
        assert_eq!(e.total, 0.0);
        assert_eq!(topological_charge(&w), 0.0);
        let s = saturation_check(&w, &v, &p, &all(&g), &all(&g)).unwrap();
        assert_eq!((s.energy, s.crossterm), (0.0, 0.0));
    }

    #[test]
    fn zero_potential_rank_one_field_solves_duals() {
        let g = Grid2D::centered_square(17, 2.0).unwrap();
        let w = ComplexField2D::from_fn(g, |x, _| Complex64::new(x.sin(), 0.3 * x));
        let p = ModelParams::restricted(1.0).unwrap();
        let d = dual_residuals_restricted(&w, &PotentialSpec::zero(), &p, Branch::Minus).unwrap();
        assert_eq!(d.len(), 8);
        for f in &d {
            assert!(f.max_abs() < 1e-14);
        }
    }

    #[test]
    fn charge_vector_and_jacobian_forms_agree() {
        // Both discretisations converge to the same integral; their gap is O(h^2).
        let gap = |n: usize| {
            let g = Grid2D::centered_square(n, 6.0).unwrap();
            let w = ComplexField2D::from_fn(g, |x, y| {
                let z = Complex64::new(x, y);
                (z.conj() - 0.5) * (-0.05 * z.norm_sqr()).exp() + 0.2 * z * z / (1.0 + z.norm_sqr())
            });
            let m = all(&g);
            let a = topological_charge_masked(&w, &m);
            let b = topological_charge_vector(&stereographic_project(&w), &m);
            (a - b).abs()
        };
        let (a, b) = (gap(101), gap(201));
        assert!(b < 5e-3 && a / b > 3.5, "{a} {b}");
    }

    #[test]
    fn conj_z_has_positive_unit_charge() {
        let half = 20.0;
        let g = Grid2D::centered_square(401, half).unwrap();
        let w = ComplexField2D::from_fn(g, |x, y| Complex64::new(x, -y));
        let q = topological_charge(&w);
        // On the square the missing tail is below the tail of the inscribed disc, 1/(1+R^2).
        assert!(q > 0.0 && (q - 1.0).abs() < 1.0 / (1.0 + half * half), "{q}");
        let wz = ComplexField2D::from_fn(g, |x, y| Complex64::new(x, y));
        assert!((topological_charge(&wz) + q).abs() < 1e-12);
    }

    #[test]
    fn energy_parts_sum() {
        let p = ModelParams::full(2.0, 16.0).unwrap();
        let v = builtin_potential("old_baby", &[0.5]).unwrap();
        let g = Grid2D::centered_square(161, 8.0).unwrap();
        let w = ComplexField2D::from_fn(g, |x, y| 0.8 * Complex64::new(x, -y) * (-(x * x + y * y) / 4.0).exp());
        let e = energy_full(&w, &v, &p).unwrap();
        let rel = (e.total - (e.o3 + e.quartic + e.potential)).abs() / e.total;
        assert!(rel < 1e-12);
        assert!(e.boundary_decays);
    }

    #[test]
    fn energy_quadrature_is_fourth_order_when_derivatives_are_exact() {
        let p = ModelParams::full(2.0, 16.0).unwrap();
        let v = builtin_potential("old_baby", &[0.5]).unwrap();
        let e = |n| {
            let g = Grid2D::centered_square(n, 2.0).unwrap();
            let w = ComplexField2D::from_fn(g, |x, y| Complex64::new(0.5 * x + 0.1, -0.5 * y));
            energy_full(&w, &v, &p).unwrap().total
        };
        let (a, b, c) = (e(17), e(33), e(65));
        let ratio = (a - b) / (b - c);
        assert!((14.0..18.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn el_forms_agree_in_the_restricted_limit() {
        // With lambda1 = 0, lambda2 = 16 beta, the complex equation equals
        // (EL_u - i EL_v) / 2 node by node.
        let g = Grid2D::centered_square(41, 2.0).unwrap();
        let w = ComplexField2D::from_fn(g, |x, y| {
            Complex64::new(0.7 * x + 0.2 * x * y, -0.4 * y + 0.1 * x * x * x)
        });
        let v = builtin_potential("old_baby", &[1.0]).unwrap();
        let beta = 0.75;
        let pr = ModelParams::restricted(beta).unwrap();
        let pf = ModelParams { beta, lambda1: 0.0, lambda2: 16.0 * beta, gamma: 1.0 };
        let c = el_restricted_complex(&w, &v, &pr);
        let (eu, ev) = el_residual_full(&w, &v, &pf);
        for idx in 0..g.len() {
            let expect = 0.5 * Complex64::new(eu.values[idx], -ev.values[idx]);
            assert!((c[idx] - expect).norm() <= 1e-10 * (1.0 + expect.norm()), "node {idx}");
        }
    }

    #[test]
    fn el_full_is_the_negative_functional_derivative() {
        // d/de E[u + e phi] = -1/2 int EL_u phi for a compact bump phi.
        let g = Grid2D::centered_square(201, 3.0).unwrap();
        let p = ModelParams::full(1.5, 8.0).unwrap();
        let v = builtin_potential("old_baby", &[0.7]).unwrap();
        let base = |x: f64, y: f64| {
            Complex64::new(0.6 * x + 0.1 * y * y, 0.3 * x * y - 0.5 * y) * (-(x * x + y * y) / 2.0).exp()
        };
        let bump = |x: f64, y: f64| {
            let r2 = (x - 0.3).powi(2) + (y + 0.2).powi(2);
            if r2 < 1.0 {
                (-1.0 / (1.0 - r2)).exp()
            } else {
                0.0
            }
        };
        for comp in 0..2 {
            let shifted = |e: f64| {
                ComplexField2D::from_fn(g, |x, y| {
                    let d = e * bump(x, y);
                    base(x, y) + if comp == 0 { Complex64::new(d, 0.0) } else { Complex64::new(0.0, d) }
                })
            };
            let eps = 1e-4;
            let ep = energy_full(&shifted(eps), &v, &p).unwrap().total;
            let em = energy_full(&shifted(-eps), &v, &p).unwrap().total;
            let de = (ep - em) / (2.0 * eps);
            let w0 = shifted(0.0);
            let (eu, ev) = el_residual_full(&w0, &v, &p);
            let el = if comp == 0 { eu } else { ev };
            let phi = ScalarField2D::from_fn(g, bump);
            let prod = ScalarField2D {
                grid: g,
                values: el.values.iter().zip(&phi.values).map(|(a, b)| -0.5 * a * b).collect(),
            };
            let pred = integrate_masked(&prod, &all(&g));
            assert!((de - pred).abs() < 2e-3 * de.abs().max(1e-3), "comp {comp}: {de} vs {pred}");
        }
    }

    #[test]
    fn linear_bps_field_closes_the_duals() {
        // omega = conj(z) with V = 16 beta / (1+rho)^4 solves J = -sqrt(V)(1+rho)^2/(4 sqrt(beta)).
        let beta = 1.0;
        let g = Grid2D::centered_square(33, 1.5).unwrap();
        let w = ComplexField2D::from_fn(g, |x, y| Complex64::new(x, -y));
        let v = PotentialSpec::new(
            "inverse_quartic",
            UvFunction::from_fns(
                move |u, v| 16.0 * beta / (1.0 + u * u + v * v).powi(4),
                move |u, v| {
                    let k = -128.0 * beta / (1.0 + u * u + v * v).powi(5);
                    (k * u, k * v)
                },
            ),
            vec![],
        );
        let p = ModelParams::restricted(beta).unwrap();
        let reg = Region::interior(&g, 1);
        let d = dual_residuals_restricted(&w, &v, &p, Branch::Minus).unwrap();
        for (name, f) in DUAL_NAMES.iter().zip(&d) {
            assert!(f.max_abs_masked(&reg.interior) < 1e-12, "{name}: {}", f.max_abs());
        }
        // Wrong branch: dolne residuals become 2 |G1| |omega_y| = 8 sqrt(beta) sqrt(V)/(1+rho)^2.
        let wrong = dual_residuals_restricted(&w, &v, &p, Branch::Plus).unwrap();
        for idx in (0..g.len()).filter(|&i| reg.interior[i]) {
            let rho = w.rho(idx);
            let expect = 8.0 * beta.sqrt() * v.eval(w.u.values[idx], w.v.values[idx]).sqrt() / (1.0 + rho).powi(2);
            assert!((wrong[2].values[idx] - expect).abs() < 1e-12 * expect.max(1.0));
        }
        let el = el_residual_restricted(&w, &v, &p);
        assert!(el.max_abs_masked(&reg.interior) < 1e-12);
    }

    #[test]
    fn compacton_region_masks() {
        let g = Grid2D::centered_square(41, 4.0).unwrap();
        let r = Region::compacton(&g, (0.0, 0.0), Some(2.0), 3, 1.0);
        assert!(r.collar_count() > 0);
        for idx in 0..g.len() {
            let (x, y) = g.position(idx);
            let rad = x.hypot(y);
            if rad < 1.0 {
                assert!(r.core[idx] && !r.interior[idx]);
            }
            if (rad - 2.0).abs() <= 0.6 {
                assert!(r.collar[idx] && !r.interior[idx]);
            }
        }
        assert!(!r.interior[0]);
    }
}
