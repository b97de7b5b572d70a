//! Hedgehog reduction of the restricted decomposition
//! `J = sigma sqrt(V) (1 + rho)^2 / (4 sqrt(beta))`, its radial solution,
//! lifting to the plane, and the 2D residual.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::deriv::jacobian_det;
use crate::error::{Error, Result};
use crate::grid::{ComplexField2D, Grid2D, ScalarField2D};
use crate::ode::{integrate_to_zero, OdeOptions};
use crate::potential::{Branch, ModelParams, PotentialSpec};

/// Starting radius of the radial integration.
pub const EPS_R: f64 = 1e-6;

/// `f'(r)` for `omega = f(r) e^{i n theta}`, from `J = n f f' / r`.
///
/// Negative `f` is evaluated through `|f|` so trajectories cross the vacuum
/// smoothly and the crossing can be located.
pub fn radial_rhs(
    r: f64,
    f: f64,
    v: &PotentialSpec,
    params: &ModelParams,
    n: i32,
    sigma: Branch,
) -> Result<f64> {
    if f == 0.0 {
        return Ok(0.0);
    }
    let a = f.abs();
    let s = v.sqrt_at(a, 0.0, 0)?;
    let d = 1.0 + a * a;
    Ok(sigma.sign() * r * s * d * d / (4.0 * n as f64 * params.beta.sqrt() * a))
}

#[derive(Debug, Clone)]
pub struct HedgehogProfile {
    pub n: i32,
    pub r: Vec<f64>,
    pub f: Vec<f64>,
    pub sigma: Branch,
    pub f0: f64,
    /// Radius where the profile reaches the vacuum, if it does.
    pub edge: Option<f64>,
}

impl HedgehogProfile {
    /// Number of leading nodes on the support (including the edge node itself).
    pub fn support_len(&self) -> usize {
        match self.edge {
            Some(_) => self.f.iter().position(|&x| x == 0.0).map_or(self.f.len(), |k| k + 1),
            None => self.f.len(),
        }
    }

    pub fn r_max(&self) -> f64 {
        *self.r.last().unwrap_or(&EPS_R)
    }

    /// Monotone cubic interpolant of the profile, zero beyond the edge.
    pub fn interpolant(&self) -> ProfileInterp {
        let m = self.support_len();
        ProfileInterp {
            pchip: Pchip::new(self.r[..m].to_vec(), self.f[..m].to_vec()),
            f0: self.f0,
            r_last: self.r[m - 1],
            beyond: if self.edge.is_some() { 0.0 } else { self.f[m - 1] },
        }
    }
}

pub fn solve_profile(
    v: &PotentialSpec,
    params: &ModelParams,
    n: i32,
    sigma: Branch,
    f0: f64,
    r_max: f64,
    tol: f64,
) -> Result<HedgehogProfile> {
    if n == 0 {
        return Err(Error::InvalidParameter("winding n must be nonzero".into()));
    }
    if !(f0 > 0.0 && f0.is_finite()) {
        return Err(Error::InvalidParameter(format!("f0 must be positive, got {f0}")));
    }
    if !(r_max > EPS_R && r_max.is_finite()) {
        return Err(Error::InvalidParameter(format!("r_max must exceed {EPS_R}, got {r_max}")));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidParameter(format!("tol must lie in (0, 1), got {tol}")));
    }
    params.validate()?;
    let opts = OdeOptions::with_tol(tol, r_max);
    let traj = integrate_to_zero(
        |r, f| radial_rhs(r, f, v, params, n, sigma),
        EPS_R,
        f0,
        r_max,
        &opts,
    )?;
    let mut r = traj.r;
    let mut f: Vec<f64> = traj.y.iter().map(|&y| y.max(0.0)).collect();
    if let Some(edge) = traj.zero_at {
        if edge < r_max {
            r.push(r_max);
            f.push(0.0);
        }
    }
    Ok(HedgehogProfile { n, r, f, sigma, f0, edge: traj.zero_at })
}

/// Fritsch-Carlson monotone cubic Hermite interpolation.
#[derive(Debug, Clone)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        let mut d = vec![0.0; n];
        if n >= 2 {
            let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
            let del: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
            if n == 2 {
                d[0] = del[0];
                d[1] = del[0];
            } else {
                for k in 1..n - 1 {
                    if del[k - 1] * del[k] > 0.0 {
                        let w1 = 2.0 * h[k] + h[k - 1];
                        let w2 = h[k] + 2.0 * h[k - 1];
                        d[k] = (w1 + w2) / (w1 / del[k - 1] + w2 / del[k]);
                    }
                }
                d[0] = end_slope(h[0], h[1], del[0], del[1]);
                d[n - 1] = end_slope(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
            }
        }
        Pchip { x, y, d }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if n == 1 {
            return self.y[0];
        }
        let k = match self.x.binary_search_by(|p| p.partial_cmp(&t).unwrap()) {
            Ok(k) => return self.y[k],
            Err(0) => 0,
            Err(k) if k >= n => n - 2,
            Err(k) => k - 1,
        };
        let h = self.x[k + 1] - self.x[k];
        let s = (t - self.x[k]) / h;
        let (h00, h10, h01, h11) = (
            (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s),
            s * (1.0 - s) * (1.0 - s),
            s * s * (3.0 - 2.0 * s),
            s * s * (s - 1.0),
        );
        h00 * self.y[k] + h10 * h * self.d[k] + h01 * self.y[k + 1] + h11 * h * self.d[k + 1]
    }
}

fn end_slope(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d.signum() != del0.signum() {
        0.0
    } else if del0.signum() != del1.signum() && d.abs() > 3.0 * del0.abs() {
        3.0 * del0
    } else {
        d
    }
}

#[derive(Debug, Clone)]
pub struct ProfileInterp {
    pchip: Pchip,
    f0: f64,
    r_last: f64,
    beyond: f64,
}

impl ProfileInterp {
    pub fn eval(&self, r: f64) -> f64 {
        if r <= EPS_R {
            self.f0
        } else if r >= self.r_last {
            self.beyond
        } else {
            self.pchip.eval(r).max(0.0)
        }
    }
}

/// `omega(x, y) = f(|x - c|) e^{i n theta}` about `center`.
pub fn profile_to_field(p: &HedgehogProfile, grid: Grid2D, center: (f64, f64)) -> ComplexField2D {
    let interp = p.interpolant();
    let n = p.n as f64;
    ComplexField2D::from_fn(grid, |x, y| {
        let (dx, dy) = (x - center.0, y - center.1);
        let r = dx.hypot(dy);
        let f = interp.eval(r);
        if f == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            f * Complex64::from_polar(1.0, n * dy.atan2(dx))
        }
    })
}

/// `R = J - sigma sqrt(V) (1 + rho)^2 / (4 sqrt(beta))` at every node.
pub fn residual_bogomolny_restricted(
    w: &ComplexField2D,
    v: &PotentialSpec,
    params: &ModelParams,
    sigma: Branch,
) -> Result<ScalarField2D> {
    let j = jacobian_det(w);
    let grid = w.grid();
    let k = sigma.sign() / (4.0 * params.beta.sqrt());
    let values = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let (u, vv) = (w.u.values[idx], w.v.values[idx]);
            let s = v.sqrt_at(u, vv, idx)?;
            let d = 1.0 + u * u + vv * vv;
            Ok(j.values[idx] - k * s * d * d)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ScalarField2D { grid, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::builtin_potential;
    use rand::{Rng, SeedableRng};

    fn bps_test() -> (PotentialSpec, ModelParams) {
        (builtin_potential("bps_test", &[1.0, 1.0]).unwrap(), ModelParams::restricted(1.0).unwrap())
    }

    #[test]
    fn rhs_for_closed_form_family() {
        let (v, p) = bps_test();
        for n in [1, 2, 3] {
            for &(r, f) in &[(0.3, 0.9), (1.2, 0.4), (2.0, 3.0)] {
                let fp = radial_rhs(r, f, &v, &p, n, Branch::Minus).unwrap();
                assert!((fp + r / (2.0 * n as f64)).abs() < 1e-14);
                let fq = radial_rhs(r, f, &v, &p, n, Branch::Plus).unwrap();
                assert_eq!(fp, -fq);
            }
        }
    }

    #[test]
    fn zero_potential_gives_flat_profile() {
        let p = ModelParams::restricted(1.0).unwrap();
        let prof = solve_profile(&PotentialSpec::zero(), &p, 1, Branch::Minus, 1.0, 3.0, 1e-10).unwrap();
        assert!(prof.edge.is_none());
        assert!(prof.f.iter().all(|&f| f == 1.0));
    }

    #[test]
    fn closed_form_profiles_and_edges() {
        let (v, p) = bps_test();
        for n in [1, 2] {
            let prof = solve_profile(&v, &p, n, Branch::Minus, 1.0, 4.0, 1e-10).unwrap();
            let expect_edge = (4.0 * n as f64).sqrt();
            assert!((prof.edge.unwrap() - expect_edge).abs() < 1e-9);
            let m = prof.support_len();
            for k in 0..m {
                let r = prof.r[k];
                let exact = (1.0 - r * r / (4.0 * n as f64)).max(0.0);
                assert!((prof.f[k] - exact).abs() < 1e-9);
            }
            assert!(prof.f[m..].iter().all(|&f| f == 0.0));
        }
    }

    #[test]
    fn reduction_matches_two_dimensional_jacobian() {
        // Substitute the ansatz, with f' from the reduced equation, into the
        // planar decomposition at random collocation points.
        let (v, p) = bps_test();
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..200 {
            let n: i32 = rng.random_range(1..=3);
            let r: f64 = rng.random_range(0.2..1.5);
            let th: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let f0 = 1.5;
            let prof = |rr: f64| f0 - rr * rr / (4.0 * n as f64);
            let omega = |x: f64, y: f64| prof(x.hypot(y)) * Complex64::from_polar(1.0, n as f64 * y.atan2(x));
            let (x, y) = (r * th.cos(), r * th.sin());
            let e = 1e-4;
            let wx = (omega(x - 2.0 * e, y) - 8.0 * omega(x - e, y) + 8.0 * omega(x + e, y)
                - omega(x + 2.0 * e, y))
                / (12.0 * e);
            let wy = (omega(x, y - 2.0 * e) - 8.0 * omega(x, y - e) + 8.0 * omega(x, y + e)
                - omega(x, y + 2.0 * e))
                / (12.0 * e);
            let jac = wx.re * wy.im - wy.re * wx.im;
            let f = prof(r);
            let fp = radial_rhs(r, f, &v, &p, n, Branch::Minus).unwrap();
            assert!((jac - n as f64 * f * fp / r).abs() < 1e-8);
            let rhs = -v.sqrt_at(f, 0.0, 0).unwrap() * (1.0 + f * f).powi(2) / 4.0;
            assert!((jac - rhs).abs() < 1e-8);
        }
    }

    #[test]
    fn pchip_reproduces_monotone_data_and_stays_monotone() {
        let x: Vec<f64> = (0..20).map(|k| k as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|t| 1.0 - t * t / 4.0).collect();
        let p = Pchip::new(x.clone(), y.clone());
        for (a, b) in x.iter().zip(&y) {
            assert_eq!(p.eval(*a), *b);
        }
        let mut prev = f64::INFINITY;
        for k in 0..=1900 {
            let t = k as f64 * 1e-3;
            let val = p.eval(t);
            assert!(val <= prev + 1e-15);
            assert!((val - (1.0 - t * t / 4.0)).abs() < 1e-3);
            prev = val;
        }
    }

    #[test]
    fn lifted_field_modulus_phase_and_winding() {
        let prof = HedgehogProfile {
            n: 2,
            r: vec![EPS_R, 1.0, 2.0, 3.0],
            f: vec![1.0; 4],
            sigma: Branch::Minus,
            f0: 1.0,
            edge: None,
        };
        let g = Grid2D::centered_square(21, 2.0).unwrap();
        let w = profile_to_field(&prof, g, (0.0, 0.0));
        for idx in 0..g.len() {
            let (x, y) = g.position(idx);
            if x.hypot(y) > 0.0 {
                assert!((w.omega(idx).norm() - 1.0).abs() < 1e-14);
            }
        }
        let on_axis = w.omega(g.index(15, 10));
        assert!(on_axis.im.abs() < 1e-14 && on_axis.re > 0.0);
        // Phase unwinding around a circle of radius 1.
        let interp = prof.interpolant();
        let m = 400;
        let mut total = 0.0;
        let mut prev = Complex64::new(interp.eval(1.0), 0.0);
        for k in 1..=m {
            let th = std::f64::consts::TAU * k as f64 / m as f64;
            let cur = interp.eval(1.0) * Complex64::from_polar(1.0, 2.0 * th);
            total += (cur / prev).arg();
            prev = cur;
        }
        assert!((total - 2.0 * std::f64::consts::TAU).abs() < 1e-10);
    }

    #[test]
    fn residual_vanishes_for_zero_potential_rank_one_field() {
        let g = Grid2D::centered_square(11, 1.0).unwrap();
        let w = ComplexField2D::from_fn(g, |x, _| Complex64::new(x.sin(), x * x));
        let p = ModelParams::restricted(1.0).unwrap();
        let r = residual_bogomolny_restricted(&w, &PotentialSpec::zero(), &p, Branch::Minus).unwrap();
        assert!(r.max_abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_arguments() {
        let (v, p) = bps_test();
        assert!(solve_profile(&v, &p, 0, Branch::Minus, 1.0, 3.0, 1e-8).is_err());
        assert!(solve_profile(&v, &p, 1, Branch::Minus, -1.0, 3.0, 1e-8).is_err());
        assert!(solve_profile(&v, &p, 1, Branch::Minus, 1.0, 0.0, 1e-8).is_err());
    }
}
