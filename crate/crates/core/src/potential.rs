//! Potentials `V(u, v)`, model couplings, and the gauge function `g1`.
//!
//! All potentials are written in stereographic variables. `gamma` is folded
//! into `V` when the potential is constructed.

use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid2D;
use crate::harmonic::HarmonicData;

/// Slack below zero that is clamped to `V = 0` (and counted) inside `sqrt(V)`.
pub const SQRT_CLAMP_TOL: f64 = 1e-14;

pub type ScalarFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type GradFn = Arc<dyn Fn(f64, f64) -> (f64, f64) + Send + Sync>;

/// A real function of the field values with an optional analytic gradient.
#[derive(Clone)]
pub struct UvFunction {
    value: ScalarFn,
    grad: Option<GradFn>,
}

impl UvFunction {
    pub fn new(value: ScalarFn, grad: Option<GradFn>) -> Self {
        UvFunction { value, grad }
    }

    pub fn from_fns<F, G>(value: F, grad: G) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64, f64) -> (f64, f64) + Send + Sync + 'static,
    {
        UvFunction { value: Arc::new(value), grad: Some(Arc::new(grad)) }
    }

    pub fn value_only<F>(value: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        UvFunction { value: Arc::new(value), grad: None }
    }

    pub fn constant(c: f64) -> Self {
        UvFunction::from_fns(move |_, _| c, |_, _| (0.0, 0.0))
    }

    #[inline]
    pub fn eval(&self, u: f64, v: f64) -> f64 {
        (self.value)(u, v)
    }

    pub fn has_analytic_grad(&self) -> bool {
        self.grad.is_some()
    }

    /// Analytic gradient when available, central differences otherwise.
    pub fn grad(&self, u: f64, v: f64) -> (f64, f64) {
        match &self.grad {
            Some(g) => g(u, v),
            None => self.fd_grad(u, v),
        }
    }

    pub fn fd_grad(&self, u: f64, v: f64) -> (f64, f64) {
        let hu = 1e-5 * (1.0 + u.abs());
        let hv = 1e-5 * (1.0 + v.abs());
        (
            (self.eval(u + hu, v) - self.eval(u - hu, v)) / (2.0 * hu),
            (self.eval(u, v + hv) - self.eval(u, v - hv)) / (2.0 * hv),
        )
    }
}

impl fmt::Debug for UvFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UvFunction").field("analytic_grad", &self.grad.is_some()).finish()
    }
}

/// Evaluator for a nonnegative potential and its partials.
#[derive(Clone, Debug)]
pub struct PotentialSpec {
    pub name: String,
    pub params: Vec<f64>,
    pub vacuum_points: Vec<(f64, f64)>,
    /// Families added for testing that are not among the physical potentials.
    pub synthetic: bool,
    func: UvFunction,
    clamp_count: Arc<AtomicUsize>,
}

impl PotentialSpec {
    pub fn new(name: impl Into<String>, func: UvFunction, vacuum_points: Vec<(f64, f64)>) -> Self {
        PotentialSpec {
            name: name.into(),
            params: Vec::new(),
            vacuum_points,
            synthetic: false,
            func,
            clamp_count: Arc::new(AtomicUsize::new(0)),
        }
    }

    pub fn zero() -> Self {
        PotentialSpec::new("zero", UvFunction::constant(0.0), vec![])
    }

    #[inline]
    pub fn eval(&self, u: f64, v: f64) -> f64 {
        self.func.eval(u, v)
    }

    /// `(V_u, V_v)`.
    #[inline]
    pub fn grad(&self, u: f64, v: f64) -> (f64, f64) {
        self.func.grad(u, v)
    }

    pub fn has_analytic_grad(&self) -> bool {
        self.func.has_analytic_grad()
    }

    pub fn function(&self) -> &UvFunction {
        &self.func
    }

    /// `sqrt(V)` with small negative round-off clamped to zero.
    pub fn sqrt_at(&self, u: f64, v: f64, node: usize) -> Result<f64> {
        let val = self.eval(u, v);
        if val >= 0.0 {
            Ok(val.sqrt())
        } else if val >= -SQRT_CLAMP_TOL {
            self.clamp_count.fetch_add(1, Ordering::Relaxed);
            Ok(0.0)
        } else {
            Err(Error::NegativePotential { node, u, v, value: val })
        }
    }

    /// `V` checked for sign, with the same clamp rule as [`Self::sqrt_at`].
    pub fn checked_at(&self, u: f64, v: f64, node: usize) -> Result<f64> {
        self.sqrt_at(u, v, node).map(|s| s * s)
    }

    /// Number of times negative round-off was clamped since construction.
    pub fn clamp_count(&self) -> usize {
        self.clamp_count.load(Ordering::Relaxed)
    }

    /// Checks nonnegativity on every node of `probe` (interpreted as a grid in
    /// `(u, v)`-space) and that listed vacua vanish within `1e-12`.
    pub fn check_on(&self, probe: &Grid2D) -> Result<()> {
        for idx in 0..probe.len() {
            let (u, v) = probe.position(idx);
            let val = self.eval(u, v);
            if !val.is_finite() {
                return Err(Error::NonFinite { node: idx });
            }
            if val < -SQRT_CLAMP_TOL {
                return Err(Error::NegativePotential { node: idx, u, v, value: val });
            }
        }
        for &(u, v) in &self.vacuum_points {
            let val = self.eval(u, v);
            if val.abs() > 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "potential `{}` does not vanish at listed vacuum ({u}, {v}): V = {val:e}",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

/// Couplings. `lambda1 = 8 alpha`, `lambda2 = 16 beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub beta: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub gamma: f64,
}

impl ModelParams {
    /// Restricted model: no O(3) term.
    pub fn restricted(beta: f64) -> Result<Self> {
        let p = ModelParams { beta, lambda1: 0.0, lambda2: 16.0 * beta, gamma: 1.0 };
        p.validate()?;
        Ok(p)
    }

    /// Full model with `beta = lambda2 / 16`.
    pub fn full(lambda1: f64, lambda2: f64) -> Result<Self> {
        let p = ModelParams { beta: lambda2 / 16.0, lambda1, lambda2, gamma: 1.0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidParameter(format!("beta must be positive, got {}", self.beta)));
        }
        if !(self.lambda1 >= 0.0 && self.lambda1.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lambda1 must be nonnegative, got {}",
                self.lambda1
            )));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma must be positive, got {}", self.gamma)));
        }
        let expect = 16.0 * self.beta;
        if (self.lambda2 - expect).abs() > 1e-12 * expect {
            return Err(Error::InvalidParameter(format!(
                "lambda2 = {} must equal 16 beta = {expect}",
                self.lambda2
            )));
        }
        Ok(())
    }
}

/// Branch of the square root of `V`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i32", into = "i32")]
pub enum Branch {
    Plus,
    #[default]
    Minus,
}

impl Branch {
    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Branch::Plus => Branch::Minus,
            Branch::Minus => Branch::Plus,
        }
    }

    pub fn from_sign(s: f64) -> Result<Self> {
        if s == 1.0 {
            Ok(Branch::Plus)
        } else if s == -1.0 {
            Ok(Branch::Minus)
        } else {
            Err(Error::InvalidParameter(format!("sigma must be +1 or -1, got {s}")))
        }
    }
}

impl TryFrom<i32> for Branch {
    type Error = Error;
    fn try_from(s: i32) -> Result<Self> {
        Branch::from_sign(s as f64)
    }
}

impl From<Branch> for i32 {
    fn from(b: Branch) -> i32 {
        b.sign() as i32
    }
}

fn expect_params(name: &str, params: &[f64], count: usize, names: &str) -> Result<()> {
    if params.len() != count {
        return Err(Error::InvalidParameter(format!(
            "potential `{name}` takes {count} parameter(s) [{names}], got {}",
            params.len()
        )));
    }
    if let Some(p) = params.iter().find(|p| !p.is_finite()) {
        return Err(Error::InvalidParameter(format!("potential `{name}`: non-finite parameter {p}")));
    }
    Ok(())
}

fn nonneg(name: &str, what: &str, x: f64) -> Result<()> {
    if x < 0.0 {
        Err(Error::InvalidParameter(format!("potential `{name}`: {what} must be nonnegative, got {x}")))
    } else {
        Ok(())
    }
}

/// Built-in potential families.
///
/// * `old_baby [mu2]`: `V = mu2 * 2 rho / (1 + rho)`, i.e. `mu2 (1 - S3)`.
/// * `half_U_squared [a, p]`: `V = U^2 / 2` with `U = a (1 - S3)^p`.
/// * `bps_test [beta, lambda]`: `V = 4 beta lambda^2 rho / (1 + rho)^4`.
///
/// Here `rho = u^2 + v^2`.
pub fn builtin_potential(name: &str, params: &[f64]) -> Result<PotentialSpec> {
    let mut spec = match name {
        "old_baby" => {
            expect_params(name, params, 1, "mu2")?;
            let mu2 = params[0];
            nonneg(name, "mu^2", mu2)?;
            let f = UvFunction::from_fns(
                move |u, v| {
                    let rho = u * u + v * v;
                    mu2 * 2.0 * rho / (1.0 + rho)
                },
                move |u, v| {
                    let d = 1.0 + u * u + v * v;
                    let k = 4.0 * mu2 / (d * d);
                    (k * u, k * v)
                },
            );
            PotentialSpec::new(name, f, vec![(0.0, 0.0)])
        }
        "half_U_squared" => {
            expect_params(name, params, 2, "a, p")?;
            let (a, p) = (params[0], params[1]);
            nonneg(name, "a", a)?;
            if p <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "potential `{name}`: exponent p must be positive, got {p}"
                )));
            }
            let f = UvFunction::from_fns(
                move |u, v| {
                    let rho = u * u + v * v;
                    let t = 2.0 * rho / (1.0 + rho);
                    0.5 * a * a * t.powf(2.0 * p)
                },
                move |u, v| {
                    let rho = u * u + v * v;
                    if rho == 0.0 {
                        return (0.0, 0.0);
                    }
                    let d = 1.0 + rho;
                    let t = 2.0 * rho / d;
                    let k = a * a * p * t.powf(2.0 * p - 1.0) * 4.0 / (d * d);
                    (k * u, k * v)
                },
            );
            PotentialSpec::new(name, f, vec![(0.0, 0.0)])
        }
        "bps_test" => {
            expect_params(name, params, 2, "beta, lambda")?;
            let (beta, lambda) = (params[0], params[1]);
            nonneg(name, "beta", beta)?;
            nonneg(name, "lambda", lambda)?;
            let c = 4.0 * beta * lambda * lambda;
            let f = UvFunction::from_fns(
                move |u, v| {
                    let rho = u * u + v * v;
                    c * rho / (1.0 + rho).powi(4)
                },
                move |u, v| {
                    let rho = u * u + v * v;
                    let k = 2.0 * c * (1.0 - 3.0 * rho) / (1.0 + rho).powi(5);
                    (k * u, k * v)
                },
            );
            let mut s = PotentialSpec::new(name, f, vec![(0.0, 0.0)]);
            s.synthetic = true;
            s
        }
        _ => return Err(Error::UnknownPotential(name.to_string())),
    };
    spec.params = params.to_vec();
    Ok(spec)
}

/// Real gauge function `g1(u, v)` induced by a potential on branch `sigma`.
///
/// `g1 = -sigma lambda2 sqrt(V) / (2 sqrt(beta) (1 + rho)^2)`, so that
/// `J + (1 + rho)^4 g1 / (2 lambda2) = J - sigma sqrt(V) (1 + rho)^2 / (4 sqrt(beta))`.
#[derive(Clone, Debug)]
pub struct InducedG1 {
    pub potential: PotentialSpec,
    pub params: ModelParams,
    pub sigma: Branch,
}

impl InducedG1 {
    pub fn eval(&self, u: f64, v: f64, node: usize) -> Result<f64> {
        let s = self.potential.sqrt_at(u, v, node)?;
        let d = 1.0 + u * u + v * v;
        Ok(-self.sigma.sign() * self.params.lambda2 * s / (2.0 * self.params.beta.sqrt() * d * d))
    }

    /// Complex form `G1 = -sigma 4 i sqrt(beta) sqrt(V) / (1 + rho)^2`, returned as its
    /// imaginary part.
    pub fn complex_im(&self, u: f64, v: f64, node: usize) -> Result<f64> {
        let s = self.potential.sqrt_at(u, v, node)?;
        let d = 1.0 + u * u + v * v;
        Ok(-self.sigma.sign() * 4.0 * self.params.beta.sqrt() * s / (d * d))
    }
}

pub fn g1_from_potential(v: &PotentialSpec, params: &ModelParams, sigma: Branch) -> InducedG1 {
    InducedG1 { potential: v.clone(), params: *params, sigma }
}

/// Full-model potential `V = (1+rho)^4 g1^2 / (4 lambda2) + (1+rho)^2 |grad H2|^2 / (2 lambda1)`.
///
/// Fails if `h2` was not accepted as harmonic.
pub fn build_full_model_potential(
    g1: &UvFunction,
    h2: &HarmonicData,
    params: &ModelParams,
) -> Result<PotentialSpec> {
    if !(params.lambda1 > 0.0 && params.lambda2 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "constructed potential needs lambda1 > 0 and lambda2 > 0, got {} and {}",
            params.lambda1, params.lambda2
        )));
    }
    h2.ensure_harmonic()?;
    let (l1, l2) = (params.lambda1, params.lambda2);
    let gv = g1.clone();
    let hv = h2.clone();
    let value = move |u: f64, v: f64| {
        let d = 1.0 + u * u + v * v;
        let g = gv.eval(u, v);
        let (hu, hvv) = hv.grad(u, v);
        d.powi(4) * g * g / (4.0 * l2) + d * d * (hu * hu + hvv * hvv) / (2.0 * l1)
    };
    let func = if g1.has_analytic_grad() {
        let gg = g1.clone();
        let hg = h2.clone();
        let grad = move |u: f64, v: f64| {
            let d = 1.0 + u * u + v * v;
            let g = gg.eval(u, v);
            let (gu, gvv) = gg.grad(u, v);
            let (hu, hvv) = hg.grad(u, v);
            let [huu, huv, hvv2] = hg.hessian(u, v);
            let q = hu * hu + hvv * hvv;
            let a = d.powi(4) / (4.0 * l2);
            let da = 2.0 * d.powi(3) / l2;
            let b = d * d / (2.0 * l1);
            let db = 2.0 * d / l1;
            let du = da * u * g * g + 2.0 * a * g * gu + db * u * q + 2.0 * b * (hu * huu + hvv * huv);
            let dv = da * v * g * g + 2.0 * a * g * gvv + db * v * q + 2.0 * b * (hu * huv + hvv * hvv2);
            (du, dv)
        };
        UvFunction::from_fns(value, grad)
    } else {
        UvFunction::value_only(value)
    };
    Ok(PotentialSpec::new(format!("constructed[{}]", h2.name), func, vec![]))
}
