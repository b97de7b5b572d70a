//! The three-equation first-order system of the full model:
//!
//! * `R1 = J + (1+rho)^4 g1 / (2 lambda2)`
//! * `R2 = u_x + v_y + (1+rho)^2 H2_u / lambda1`
//! * `R3 = u_y - v_x - (1+rho)^2 H2_v / lambda1`
//!
//! `R2 = R3 = 0` is solved for `(u, v)` with Dirichlet data from the initial
//! field; `g1` is then induced from `R1 = 0` and fitted as a function of `(u, v)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::deriv::{jacobian_det, Gradients};
use crate::error::{Error, Result};
use crate::fit::{fit_uv, UvFit};
use crate::grid::{ComplexField2D, Grid2D, ScalarField2D};
use crate::harmonic::HarmonicData;
use crate::potential::{build_full_model_potential, Branch, ModelParams, PotentialSpec, UvFunction};
use crate::quad::pairwise_sum;
use crate::restricted::residual_bogomolny_restricted;
use crate::verify::Region;

/// Gaussian lattice size used for the `g1` fit.
pub const FIT_LATTICE: usize = 10;

/// `[R1, R2, R3]` at every node.
pub fn residual_full_system(
    w: &ComplexField2D,
    g1: &UvFunction,
    h2: &HarmonicData,
    params: &ModelParams,
) -> [ScalarField2D; 3] {
    let g = Gradients::of(w);
    let grid = w.grid();
    let (l1, l2) = (params.lambda1, params.lambda2);
    let rows: Vec<[f64; 3]> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let (u, v) = (w.u.values[idx], w.v.values[idx]);
            let d = 1.0 + u * u + v * v;
            let (hu, hv) = h2.grad(u, v);
            let (ux, uy, vx, vy) = (g.ux.values[idx], g.uy.values[idx], g.vx.values[idx], g.vy.values[idx]);
            [
                ux * vy - uy * vx + d.powi(4) * g1.eval(u, v) / (2.0 * l2),
                ux + vy + d * d * hu / l1,
                uy - vx - d * d * hv / l1,
            ]
        })
        .collect();
    std::array::from_fn(|k| ScalarField2D { grid, values: rows.iter().map(|r| r[k]).collect() })
}

/// `g1 = -2 lambda2 J / (1+rho)^4` at every node.
pub fn induced_g1(w: &ComplexField2D, params: &ModelParams) -> ScalarField2D {
    let j = jacobian_det(w);
    let grid = w.grid();
    let values = (0..grid.len())
        .map(|idx| -2.0 * params.lambda2 * j.values[idx] / (1.0 + w.rho(idx)).powi(4))
        .collect();
    ScalarField2D { grid, values }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub iters: usize,
    pub tol: f64,
    pub linear_iters: usize,
    pub linear_tol: f64,
}

impl SolverOptions {
    pub fn new(iters: usize, tol: f64) -> Self {
        SolverOptions { iters, tol, linear_iters: 4000, linear_tol: 1e-13 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveLog {
    pub iterations: usize,
    pub newton_steps: usize,
    pub picard_steps: usize,
    /// Interior max-norm of `(R2, R3)` after each iteration, starting with the initial field.
    pub history: Vec<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct FullSolution {
    pub w: ComplexField2D,
    pub g1_induced: ScalarField2D,
    pub g1_fit: UvFunction,
    /// Largest `|g1_fit - g1_induced|` over interior nodes.
    pub fit_defect: f64,
    pub v_constructed: PotentialSpec,
    /// Interior max-norms of `R1` (with the fitted `g1`), `R2` and `R3`.
    pub residual_norms: [f64; 3],
    pub log: SolveLog,
}

/// Interior unknowns and the maps between them and grid nodes.
struct Layout {
    grid: Grid2D,
    nodes: Vec<usize>,
    slot: Vec<Option<usize>>,
}

impl Layout {
    fn new(grid: Grid2D) -> Self {
        let nodes: Vec<usize> = (0..grid.len()).filter(|&i| !grid.is_boundary(i)).collect();
        let mut slot = vec![None; grid.len()];
        for (k, &i) in nodes.iter().enumerate() {
            slot[i] = Some(k);
        }
        Layout { grid, nodes, slot }
    }

    fn m(&self) -> usize {
        self.nodes.len()
    }

    #[inline]
    fn get(&self, x: &[f64], node: usize) -> f64 {
        self.slot[node].map_or(0.0, |k| x[k])
    }
}

/// Linearisation coefficients at each interior node: `[a, b, c, d]`.
fn coefficients(w: &ComplexField2D, h2: &HarmonicData, l1: f64, lay: &Layout) -> Vec<[f64; 4]> {
    lay.nodes
        .par_iter()
        .map(|&i| {
            let (u, v) = (w.u.values[i], w.v.values[i]);
            let d = 1.0 + u * u + v * v;
            let (hu, hv) = h2.grad(u, v);
            let [huu, huv, hvv] = h2.hessian(u, v);
            [
                (4.0 * u * d * hu + d * d * huu) / l1,
                (4.0 * v * d * hu + d * d * huv) / l1,
                (4.0 * u * d * hv + d * d * huv) / l1,
                (4.0 * v * d * hv + d * d * hvv) / l1,
            ]
        })
        .collect()
}

/// `J x` for `x = (du, dv)` stacked; output `(R2, R3)` stacked.
fn apply(lay: &Layout, coef: Option<&[[f64; 4]]>, x: &[f64]) -> Vec<f64> {
    let m = lay.m();
    let (du, dv) = x.split_at(m);
    let g = lay.grid;
    let (sx, sy) = (1.0 / (2.0 * g.hx), 1.0 / (2.0 * g.hy));
    let nx = g.nx;
    let rows: Vec<(f64, f64)> = (0..m)
        .into_par_iter()
        .map(|k| {
            let i = lay.nodes[k];
            let dxu = (lay.get(du, i + 1) - lay.get(du, i - 1)) * sx;
            let dyu = (lay.get(du, i + nx) - lay.get(du, i - nx)) * sy;
            let dxv = (lay.get(dv, i + 1) - lay.get(dv, i - 1)) * sx;
            let dyv = (lay.get(dv, i + nx) - lay.get(dv, i - nx)) * sy;
            let (mut r2, mut r3) = (dxu + dyv, dyu - dxv);
            if let Some(c) = coef {
                let [a, b, cc, d] = c[k];
                r2 += a * du[k] + b * dv[k];
                r3 -= cc * du[k] + d * dv[k];
            }
            (r2, r3)
        })
        .collect();
    let mut out = Vec::with_capacity(2 * m);
    out.extend(rows.iter().map(|r| r.0));
    out.extend(rows.iter().map(|r| r.1));
    out
}

/// `J^T y`, written as a gather so it parallelises without write conflicts.
fn apply_t(lay: &Layout, coef: Option<&[[f64; 4]]>, y: &[f64]) -> Vec<f64> {
    let m = lay.m();
    let (r2, r3) = y.split_at(m);
    let g = lay.grid;
    let (sx, sy) = (1.0 / (2.0 * g.hx), 1.0 / (2.0 * g.hy));
    let nx = g.nx;
    let rows: Vec<(f64, f64)> = (0..m)
        .into_par_iter()
        .map(|k| {
            let i = lay.nodes[k];
            // Row p of Dx contributes +s to column p+1 and -s to column p-1,
            // so column i receives s (r[i-1] - r[i+1]).
            let tx = |r: &[f64]| (lay.get(r, i - 1) - lay.get(r, i + 1)) * sx;
            let ty = |r: &[f64]| (lay.get(r, i - nx) - lay.get(r, i + nx)) * sy;
            let mut gu = tx(r2) + ty(r3);
            let mut gv = ty(r2) - tx(r3);
            if let Some(c) = coef {
                let [a, b, cc, d] = c[k];
                gu += a * r2[k] - cc * r3[k];
                gv += b * r2[k] - d * r3[k];
            }
            (gu, gv)
        })
        .collect();
    let mut out = Vec::with_capacity(2 * m);
    out.extend(rows.iter().map(|r| r.0));
    out.extend(rows.iter().map(|r| r.1));
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let p: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    pairwise_sum(&p)
}

/// CGLS for `min |J x - b|`.
fn cgls(lay: &Layout, coef: Option<&[[f64; 4]]>, b: &[f64], iters: usize, tol: f64) -> Vec<f64> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut s = apply_t(lay, coef, &r);
    let mut p = s.clone();
    let mut gamma = dot(&s, &s);
    let gamma0 = gamma;
    if gamma0 == 0.0 {
        return x;
    }
    for _ in 0..iters {
        let q = apply(lay, coef, &p);
        let qq = dot(&q, &q);
        if qq == 0.0 {
            break;
        }
        let alpha = gamma / qq;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * q[k];
        }
        s = apply_t(lay, coef, &r);
        let gnew = dot(&s, &s);
        if gnew <= tol * tol * gamma0 {
            break;
        }
        let beta = gnew / gamma;
        gamma = gnew;
        for k in 0..n {
            p[k] = s[k] + beta * p[k];
        }
    }
    x
}

fn residual_vec(w: &ComplexField2D, h2: &HarmonicData, l1: f64, lay: &Layout) -> Vec<f64> {
    let g = lay.grid;
    let (sx, sy) = (1.0 / (2.0 * g.hx), 1.0 / (2.0 * g.hy));
    let nx = g.nx;
    let (u, v) = (&w.u.values, &w.v.values);
    let rows: Vec<(f64, f64)> = lay
        .nodes
        .par_iter()
        .map(|&i| {
            let d = 1.0 + u[i] * u[i] + v[i] * v[i];
            let (hu, hv) = h2.grad(u[i], v[i]);
            let ux = (u[i + 1] - u[i - 1]) * sx;
            let uy = (u[i + nx] - u[i - nx]) * sy;
            let vx = (v[i + 1] - v[i - 1]) * sx;
            let vy = (v[i + nx] - v[i - nx]) * sy;
            (ux + vy + d * d * hu / l1, uy - vx - d * d * hv / l1)
        })
        .collect();
    let mut out = Vec::with_capacity(2 * rows.len());
    out.extend(rows.iter().map(|r| r.0));
    out.extend(rows.iter().map(|r| r.1));
    out
}

fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

fn updated(w: &ComplexField2D, lay: &Layout, dx: &[f64], alpha: f64) -> ComplexField2D {
    let m = lay.m();
    let mut out = w.clone();
    for (k, &i) in lay.nodes.iter().enumerate() {
        out.u.values[i] += alpha * dx[k];
        out.v.values[i] += alpha * dx[m + k];
    }
    out
}

/// Drives `R2, R3` below `opts.tol` on interior nodes, then induces and fits `g1`
/// and builds the matching potential.
pub fn solve_full_bps(
    h2: &HarmonicData,
    params: &ModelParams,
    initial: &ComplexField2D,
    opts: &SolverOptions,
) -> Result<FullSolution> {
    if !(params.lambda1 > 0.0 && params.lambda2 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "full model needs lambda1 > 0 and lambda2 > 0, got {} and {}",
            params.lambda1, params.lambda2
        )));
    }
    h2.ensure_harmonic()?;
    initial.validate()?;
    let l1 = params.lambda1;
    let lay = Layout::new(initial.grid());
    let mut w = initial.clone();
    let mut f = residual_vec(&w, h2, l1, &lay);
    let mut norm = max_abs(&f);
    let mut log = SolveLog { history: vec![norm], ..SolveLog::default() };
    while norm >= opts.tol && log.iterations < opts.iters {
        log.iterations += 1;
        let coef = coefficients(&w, h2, l1, &lay);
        let rhs: Vec<f64> = f.iter().map(|x| -x).collect();
        let dx = cgls(&lay, Some(&coef), &rhs, opts.linear_iters, opts.linear_tol);
        let mut accepted = None;
        let mut alpha = 1.0;
        for _ in 0..8 {
            let trial = updated(&w, &lay, &dx, alpha);
            let ft = residual_vec(&trial, h2, l1, &lay);
            let nt = max_abs(&ft);
            if nt.is_finite() && nt < norm {
                accepted = Some((trial, ft, nt));
                break;
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((trial, ft, nt)) => {
                log.newton_steps += 1;
                w = trial;
                f = ft;
                norm = nt;
            }
            None => {
                // Frozen-coefficient step: solve the constant-coefficient part only.
                log.picard_steps += 1;
                let dx = cgls(&lay, None, &rhs, opts.linear_iters, opts.linear_tol);
                let trial = updated(&w, &lay, &dx, 0.5);
                let ft = residual_vec(&trial, h2, l1, &lay);
                let nt = max_abs(&ft);
                if !(nt.is_finite() && nt < norm) {
                    log.history.push(norm);
                    break;
                }
                w = trial;
                f = ft;
                norm = nt;
            }
        }
        log.history.push(norm);
    }
    log.converged = norm < opts.tol;
    finish(w, h2, params, log)
}

fn finish(w: ComplexField2D, h2: &HarmonicData, params: &ModelParams, log: SolveLog) -> Result<FullSolution> {
    let grid = w.grid();
    let interior = Region::interior(&grid, 1).interior;
    let j = jacobian_det(&w);
    let fit = fit_uv(&w, &j.values, &interior, FIT_LATTICE);
    let l2 = params.lambda2;
    let g1_fit = g1_from_jacobian_fit(fit, l2);
    let g1_induced = induced_g1(&w, params);
    let fit_defect = (0..grid.len())
        .filter(|&i| interior[i])
        .map(|i| (g1_fit.eval(w.u.values[i], w.v.values[i]) - g1_induced.values[i]).abs())
        .fold(0.0, f64::max);
    let v_constructed = build_full_model_potential(&g1_fit, h2, params)?;
    let r = residual_full_system(&w, &g1_fit, h2, params);
    let residual_norms = std::array::from_fn(|k| r[k].max_abs_masked(&interior));
    Ok(FullSolution { w, g1_induced, g1_fit, fit_defect, v_constructed, residual_norms, log })
}

/// `g1 = -2 lambda2 J_fit(u, v) / (1+rho)^4` with its analytic gradient.
fn g1_from_jacobian_fit(fit: UvFit, l2: f64) -> UvFunction {
    let fv = fit.clone();
    UvFunction::from_fns(
        move |u, v| -2.0 * l2 * fv.eval(u, v) / (1.0 + u * u + v * v).powi(4),
        move |u, v| {
            let d = 1.0 + u * u + v * v;
            let j = fit.eval(u, v);
            let (ju, jv) = fit.grad(u, v);
            let k = -2.0 * l2;
            (k * (ju / d.powi(4) - 8.0 * u * j / d.powi(5)), k * (jv / d.powi(4) - 8.0 * v * j / d.powi(5)))
        },
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetReport {
    /// `None` when the solution did not converge.
    pub passed: Option<bool>,
    pub restricted_norm: f64,
    pub r1_norm: f64,
    pub sigma: Branch,
}

/// Evaluates the restricted decomposition on `sol.w` with
/// `V_r = (1+rho)^4 g1^2 / (4 lambda2)` and `sigma = -sign(g1)`.
pub fn subset_check(sol: &FullSolution, params: &ModelParams, tol: f64) -> Result<SubsetReport> {
    let g1 = sol.g1_fit.clone();
    let l2 = params.lambda2;
    let grid = sol.w.grid();
    let interior = Region::interior(&grid, 1).interior;
    let total: Vec<f64> = (0..grid.len())
        .filter(|&i| interior[i])
        .map(|i| g1.eval(sol.w.u.values[i], sol.w.v.values[i]))
        .collect();
    let sigma = if pairwise_sum(&total) > 0.0 { Branch::Minus } else { Branch::Plus };
    let gv = g1.clone();
    let vr = PotentialSpec::new(
        "induced_restricted",
        UvFunction::value_only(move |u, v| {
            let g = gv.eval(u, v);
            (1.0 + u * u + v * v).powi(4) * g * g / (4.0 * l2)
        }),
        vec![],
    );
    let rp = ModelParams { beta: l2 / 16.0, lambda1: 0.0, lambda2: l2, gamma: params.gamma };
    let res = residual_bogomolny_restricted(&sol.w, &vr, &rp, sigma)?;
    let restricted_norm = res.max_abs_masked(&interior);
    let r1_norm = sol.residual_norms[0];
    let passed = sol.log.converged.then_some(restricted_norm <= r1_norm + tol);
    Ok(SubsetReport { passed, restricted_norm, r1_norm, sigma })
}

/// `omega = a (x - i y)` about `center`.
pub fn antiholomorphic_field(grid: Grid2D, a: f64, center: (f64, f64)) -> ComplexField2D {
    ComplexField2D::from_fn(grid, |x, y| num_complex::Complex64::new(a * (x - center.0), -a * (y - center.1)))
}
