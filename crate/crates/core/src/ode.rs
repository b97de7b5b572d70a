//! Adaptive Dormand-Prince 5(4) integration of a scalar ODE `y' = g(r, y)`,
//! with location of the first zero crossing of `y`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on accepted step sizes.
    pub max_step: f64,
    pub min_step: f64,
    /// Values above this are reported as blow-up.
    pub blow_up: f64,
}

impl OdeOptions {
    pub fn with_tol(tol: f64, span: f64) -> Self {
        OdeOptions {
            rtol: tol,
            atol: tol * 1e-2,
            max_step: span / 10_000.0,
            min_step: 1e-14 * span.max(1.0),
            blow_up: 1e12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub r: Vec<f64>,
    pub y: Vec<f64>,
    /// First `r` with `y = 0`, if reached before the end of the range.
    pub zero_at: Option<f64>,
    pub steps_rejected: usize,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One step; returns the 5th-order value and the embedded error estimate.
fn step<G>(g: &G, r: f64, y: f64, h: f64) -> Result<(f64, f64)>
where
    G: Fn(f64, f64) -> Result<f64>,
{
    let mut k = [0.0; 7];
    for s in 0..7 {
        let mut ys = y;
        for (a, kk) in A[s].iter().zip(&k).take(s) {
            ys += h * a * kk;
        }
        if !ys.is_finite() {
            return Ok((f64::NAN, f64::NAN));
        }
        k[s] = g(r + C[s] * h, ys)?;
    }
    let mut y5 = y;
    let mut err = 0.0;
    for s in 0..7 {
        y5 += h * B5[s] * k[s];
        err += h * (B5[s] - B4[s]) * k[s];
    }
    Ok((y5, err))
}

/// Integrates from `(r0, y0)` to `r_end`, stopping at the first zero of `y`.
pub fn integrate_to_zero<G>(g: G, r0: f64, y0: f64, r_end: f64, opts: &OdeOptions) -> Result<Trajectory>
where
    G: Fn(f64, f64) -> Result<f64>,
{
    let mut r = r0;
    let mut y = y0;
    let mut out = Trajectory { r: vec![r0], y: vec![y0], zero_at: None, steps_rejected: 0 };
    if y0 == 0.0 {
        out.zero_at = Some(r0);
        return Ok(out);
    }
    let slope = g(r0, y0)?.abs();
    let mut h = opts.max_step.min(r_end - r0);
    if slope > 0.0 {
        h = h.min(1e-2 * y0.abs() / slope).max(opts.min_step);
    }
    while r < r_end {
        h = h.min(r_end - r).min(opts.max_step);
        if h < opts.min_step {
            return Err(Error::StepUnderflow { radius: r });
        }
        let (y_new, err) = step(&g, r, y, h)?;
        let sc = opts.atol + opts.rtol * y.abs().max(y_new.abs());
        let e = (err / sc).abs();
        if e > 1.0 || !y_new.is_finite() {
            out.steps_rejected += 1;
            h *= (0.9 * e.powf(-0.2)).clamp(0.1, 0.5);
            if !y_new.is_finite() {
                h *= 0.1;
            }
            continue;
        }
        if y_new.abs() > opts.blow_up {
            return Err(Error::BlowUp { radius: r + h });
        }
        if y_new.signum() != y.signum() || y_new == 0.0 {
            let r_star = locate_zero(&g, r, y, h)?;
            out.r.push(r_star);
            out.y.push(0.0);
            out.zero_at = Some(r_star);
            return Ok(out);
        }
        r += h;
        y = y_new;
        out.r.push(r);
        out.y.push(y);
        let grow = if e == 0.0 { 5.0 } else { (0.9 * e.powf(-0.2)).clamp(0.2, 5.0) };
        h *= grow;
    }
    Ok(out)
}

/// Bisection on the length of a single step started at `(r, y)`.
fn locate_zero<G>(g: &G, r: f64, y: f64, h: f64) -> Result<f64>
where
    G: Fn(f64, f64) -> Result<f64>,
{
    let (mut lo, mut hi) = (0.0, h);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (ym, _) = step(g, r, y, mid)?;
        if ym == 0.0 {
            return Ok(r + mid);
        }
        if ym.signum() == y.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(r + 0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_meets_tolerance() {
        let opts = OdeOptions { max_step: 0.5, ..OdeOptions::with_tol(1e-10, 3.0) };
        let t = integrate_to_zero(|_, y| Ok(-y), 0.0, 1.0, 3.0, &opts).unwrap();
        assert!(t.zero_at.is_none());
        let last = *t.y.last().unwrap();
        assert!((last - (-3.0f64).exp()).abs() < 1e-9);
        assert!((t.r.last().unwrap() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn zero_crossing_is_located() {
        let opts = OdeOptions::with_tol(1e-10, 3.0);
        let t = integrate_to_zero(|r, _| Ok(-r / 2.0), 1e-6, 1.0, 3.0, &opts).unwrap();
        let rs = t.zero_at.unwrap();
        let exact = (4.0 + 1e-12f64).sqrt();
        assert!((rs - exact).abs() < 1e-12, "{rs}");
    }

    #[test]
    fn blow_up_is_reported() {
        let opts = OdeOptions::with_tol(1e-8, 2.0);
        let err = integrate_to_zero(|_, y| Ok(y * y), 0.0, 1.0, 2.0, &opts).unwrap_err();
        match err {
            Error::BlowUp { radius } => assert!((radius - 1.0).abs() < 1e-3),
            Error::StepUnderflow { radius } => assert!((radius - 1.0).abs() < 1e-3),
            e => panic!("{e:?}"),
        }
    }
}
