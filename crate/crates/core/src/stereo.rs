//! Stereographic projection between `omega = u + i v` and unit vectors.
//!
//! `omega = 0` maps to the north pole `S = (0, 0, 1)`.

use rayon::prelude::*;

use crate::grid::{ComplexField2D, ScalarField2D, UnitVectorField};

/// Default largest representable `|omega|` for the inverse map.
pub const DEFAULT_CAP: f64 = 1e8;

/// `S` for a single value of `omega`.
#[inline]
pub fn project_point(u: f64, v: f64) -> [f64; 3] {
    let rho = u * u + v * v;
    let d = 1.0 + rho;
    [2.0 * u / d, 2.0 * v / d, (1.0 - rho) / d]
}

/// `omega` for a unit vector, clamped to modulus `cap` near the south pole.
/// Returns `(u, v, clamped)`.
#[inline]
pub fn inverse_point(s: [f64; 3], cap: f64) -> (f64, f64, bool) {
    let denom = 1.0 + s[2];
    // |omega| = sqrt((1 - s3) / (1 + s3)) exceeds cap once 1 + s3 < 2 / (1 + cap^2).
    if denom > 2.0 / (1.0 + cap * cap) {
        (s[0] / denom, s[1] / denom, false)
    } else {
        let planar = s[0].hypot(s[1]);
        if planar > 0.0 {
            (cap * s[0] / planar, cap * s[1] / planar, true)
        } else {
            (cap, 0.0, true)
        }
    }
}

pub fn stereographic_project(w: &ComplexField2D) -> UnitVectorField {
    let grid = w.grid();
    let pts: Vec<[f64; 3]> = (0..grid.len())
        .into_par_iter()
        .map(|idx| project_point(w.u.values[idx], w.v.values[idx]))
        .collect();
    let comp = |k: usize| ScalarField2D { grid, values: pts.iter().map(|s| s[k]).collect() };
    UnitVectorField { s1: comp(0), s2: comp(1), s3: comp(2) }
}

/// Result of [`stereographic_inverse`]: the field plus the nodes that had to
/// be clamped to `|omega| = cap`.
#[derive(Debug, Clone)]
pub struct InverseProjection {
    pub field: ComplexField2D,
    pub clamped: Vec<usize>,
}

pub fn stereographic_inverse(s: &UnitVectorField, cap: f64) -> InverseProjection {
    let grid = s.grid();
    let pts: Vec<(f64, f64, bool)> =
        (0..grid.len()).into_par_iter().map(|idx| inverse_point(s.at(idx), cap)).collect();
    let clamped = pts.iter().enumerate().filter(|(_, p)| p.2).map(|(i, _)| i).collect();
    let field = ComplexField2D {
        u: ScalarField2D { grid, values: pts.iter().map(|p| p.0).collect() },
        v: ScalarField2D { grid, values: pts.iter().map(|p| p.1).collect() },
    };
    InverseProjection { field, clamped }
}
