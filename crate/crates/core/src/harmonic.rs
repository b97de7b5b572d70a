//! Harmonic gauge data `H2(u, v)` of the full model and its conjugate `H3`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{ComplexField2D, Grid2D};
use crate::quad::gauss_legendre;

/// Largest accepted `|H2_uu + H2_vv|` and conjugate path discrepancy.
pub const HARMONIC_TOL: f64 = 1e-8;

pub trait HarmonicFn: Send + Sync + fmt::Debug {
    fn value(&self, u: f64, v: f64) -> f64;
    fn grad(&self, u: f64, v: f64) -> (f64, f64);
    /// `[H_uu, H_uv, H_vv]` when known in closed form.
    fn hessian(&self, _u: f64, _v: f64) -> Option<[f64; 3]> {
        None
    }
}

/// Real polynomial `sum c_ij u^i v^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly2 {
    pub terms: Vec<(u32, u32, f64)>,
}

impl Poly2 {
    pub fn new(terms: Vec<(u32, u32, f64)>) -> Self {
        Poly2 { terms: terms.into_iter().filter(|t| t.2 != 0.0).collect() }
    }

    /// Coefficients in graded order: `1, u, v, u^2, uv, v^2, u^3, u^2 v, ...`.
    pub fn from_graded(coeffs: &[f64]) -> Self {
        let mut terms = Vec::new();
        let mut k = 0;
        let mut deg = 0u32;
        while k < coeffs.len() {
            for j in 0..=deg {
                if k == coeffs.len() {
                    break;
                }
                terms.push((deg - j, j, coeffs[k]));
                k += 1;
            }
            deg += 1;
        }
        Poly2::new(terms)
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|t| t.0 + t.1).max().unwrap_or(0)
    }

    fn mono(x: f64, p: u32) -> f64 {
        if p == 0 {
            1.0
        } else {
            x.powi(p as i32)
        }
    }

    fn partial(&self, du: u32, dv: u32, u: f64, v: f64) -> f64 {
        let mut s = 0.0;
        for &(i, j, c) in &self.terms {
            if i < du || j < dv {
                continue;
            }
            let mut k = c;
            for m in 0..du {
                k *= (i - m) as f64;
            }
            for m in 0..dv {
                k *= (j - m) as f64;
            }
            s += k * Self::mono(u, i - du) * Self::mono(v, j - dv);
        }
        s
    }
}

impl HarmonicFn for Poly2 {
    fn value(&self, u: f64, v: f64) -> f64 {
        self.partial(0, 0, u, v)
    }

    fn grad(&self, u: f64, v: f64) -> (f64, f64) {
        (self.partial(1, 0, u, v), self.partial(0, 1, u, v))
    }

    fn hessian(&self, u: f64, v: f64) -> Option<[f64; 3]> {
        Some([self.partial(2, 0, u, v), self.partial(1, 1, u, v), self.partial(0, 2, u, v)])
    }
}

/// Parses an `H2` specification.
///
/// Accepted: `zero`, `const:<c>`, `u`, `v`, `u2-v2`, `uv`, `u2`, or
/// `poly:<c0>,<c1>,...` with graded coefficients (see [`Poly2::from_graded`]).
pub fn parse_h2(spec: &str) -> Result<Poly2> {
    let s = spec.trim();
    let p = match s {
        "zero" => Poly2::new(vec![]),
        "u" => Poly2::new(vec![(1, 0, 1.0)]),
        "v" => Poly2::new(vec![(0, 1, 1.0)]),
        "u2-v2" => Poly2::new(vec![(2, 0, 1.0), (0, 2, -1.0)]),
        "uv" => Poly2::new(vec![(1, 1, 1.0)]),
        "u2" => Poly2::new(vec![(2, 0, 1.0)]),
        _ => {
            if let Some(c) = s.strip_prefix("const:") {
                let c: f64 = c
                    .trim()
                    .parse()
                    .map_err(|e| Error::Parse(format!("H2 `{spec}`: bad constant: {e}")))?;
                Poly2::new(vec![(0, 0, c)])
            } else if let Some(list) = s.strip_prefix("poly:") {
                let coeffs = list
                    .split(',')
                    .map(|t| t.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| Error::Parse(format!("H2 `{spec}`: bad coefficient: {e}")))?;
                Poly2::from_graded(&coeffs)
            } else {
                return Err(Error::Parse(format!(
                    "unknown H2 `{spec}` (expected zero, const:<c>, u, v, u2-v2, uv, u2 or poly:<coeffs>)"
                )));
            }
        }
    };
    if p.terms.iter().any(|t| !t.2.is_finite()) {
        return Err(Error::Parse(format!("H2 `{spec}` has non-finite coefficients")));
    }
    Ok(p)
}

/// `max |H_uu + H_vv|` over the nodes of `probe` (a grid in `(u, v)`-space).
pub fn check_harmonic(h2: &dyn HarmonicFn, probe: &Grid2D) -> f64 {
    let mut worst = 0.0_f64;
    for idx in 0..probe.len() {
        let (u, v) = probe.position(idx);
        let lap = match h2.hessian(u, v) {
            Some([huu, _, hvv]) => huu + hvv,
            None => {
                let hu = 1e-3 * (1.0 + u.abs());
                let hv = 1e-3 * (1.0 + v.abs());
                let c = h2.value(u, v);
                (h2.value(u + hu, v) - 2.0 * c + h2.value(u - hu, v)) / (hu * hu)
                    + (h2.value(u, v + hv) - 2.0 * c + h2.value(u, v - hv)) / (hv * hv)
            }
        };
        worst = worst.max(lap.abs());
    }
    worst
}

/// Bounding box of the values attained by `w`, padded by 10% per side,
/// sampled with `n x n` nodes.
pub fn probe_grid_for(w: &ComplexField2D, n: usize) -> Result<Grid2D> {
    let bounds = |xs: &[f64]| {
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let pad = (0.1 * (hi - lo)).max(0.1 * (1.0 + lo.abs().max(hi.abs())) * 1e-3).max(1e-6);
        (lo - pad, hi + pad)
    };
    let (ua, ub) = bounds(&w.u.values);
    let (va, vb) = bounds(&w.v.values);
    Grid2D::spanning(n, n, ua, ub, va, vb)
}

/// `H2` together with the Laplace residual measured on its probe set.
#[derive(Clone, Debug)]
pub struct HarmonicData {
    pub name: String,
    pub h2: Arc<dyn HarmonicFn>,
    pub probe: Grid2D,
    pub laplace_residual: f64,
}

impl HarmonicData {
    pub fn new(name: impl Into<String>, h2: Arc<dyn HarmonicFn>, probe: Grid2D) -> Self {
        let laplace_residual = check_harmonic(h2.as_ref(), &probe);
        HarmonicData { name: name.into(), h2, probe, laplace_residual }
    }

    /// Parses `spec` and probes it on `probe`.
    pub fn from_spec(spec: &str, probe: Grid2D) -> Result<Self> {
        let p = parse_h2(spec)?;
        Ok(HarmonicData::new(spec, Arc::new(p), probe))
    }

    pub fn ensure_harmonic(&self) -> Result<()> {
        if self.laplace_residual <= HARMONIC_TOL {
            Ok(())
        } else {
            Err(Error::NotHarmonic { residual: self.laplace_residual, tolerance: HARMONIC_TOL })
        }
    }

    #[inline]
    pub fn value(&self, u: f64, v: f64) -> f64 {
        self.h2.value(u, v)
    }

    #[inline]
    pub fn grad(&self, u: f64, v: f64) -> (f64, f64) {
        self.h2.grad(u, v)
    }

    /// Second partials, by central differences of the gradient when no closed form exists.
    pub fn hessian(&self, u: f64, v: f64) -> [f64; 3] {
        self.h2.hessian(u, v).unwrap_or_else(|| {
            let hu = 1e-5 * (1.0 + u.abs());
            let hv = 1e-5 * (1.0 + v.abs());
            let (ap, _) = self.grad(u + hu, v);
            let (am, _) = self.grad(u - hu, v);
            let (bp, cp) = self.grad(u, v + hv);
            let (bm, cm) = self.grad(u, v - hv);
            [(ap - am) / (2.0 * hu), (bp - bm) / (2.0 * hv), (cp - cm) / (2.0 * hv)]
        })
    }
}

/// Harmonic conjugate `H3` defined by path integration of `(-H2_v, H2_u)`.
#[derive(Clone, Debug)]
pub struct Conjugate {
    h2: Arc<dyn HarmonicFn>,
    base: (f64, f64),
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Conjugate {
    fn segment(&self, a: (f64, f64), b: (f64, f64)) -> f64 {
        let (du, dv) = (b.0 - a.0, b.1 - a.1);
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let t = 0.5 * (x + 1.0);
            let (hu, hv) = self.h2.grad(a.0 + t * du, a.1 + t * dv);
            s += 0.5 * w * (-hv * du + hu * dv);
        }
        s
    }

    /// `H3(u, v)` along the straight path from the base point.
    pub fn eval(&self, u: f64, v: f64) -> f64 {
        self.segment(self.base, (u, v))
    }

    /// `H3(u, v)` along the path that moves in `u` first, then in `v`.
    pub fn eval_l_path(&self, u: f64, v: f64) -> f64 {
        let corner = (u, self.base.1);
        self.segment(self.base, corner) + self.segment(corner, (u, v))
    }

    /// `(H3_u, H3_v) = (-H2_v, H2_u)`.
    pub fn grad(&self, u: f64, v: f64) -> (f64, f64) {
        let (hu, hv) = self.h2.grad(u, v);
        (-hv, hu)
    }

    pub fn base(&self) -> (f64, f64) {
        self.base
    }
}

/// Builds `H3` with `H3(base) = 0` and checks path independence on the probe set.
pub fn conjugate_of(h2: &HarmonicData, base: (f64, f64)) -> Result<Conjugate> {
    let (nodes, weights) = gauss_legendre(24);
    let c = Conjugate { h2: h2.h2.clone(), base, nodes, weights };
    let g = h2.probe;
    let step_i = (g.nx / 12).max(1);
    let step_j = (g.ny / 12).max(1);
    for j in (0..g.ny).step_by(step_j) {
        for i in (0..g.nx).step_by(step_i) {
            let (u, v) = (g.x(i), g.y(j));
            let a = c.eval(u, v);
            let b = c.eval_l_path(u, v);
            let discrepancy = (a - b).abs();
            if discrepancy > HARMONIC_TOL * a.abs().max(1.0) {
                return Err(Error::PathDependent { discrepancy, u, v });
            }
        }
    }
    Ok(c)
}
