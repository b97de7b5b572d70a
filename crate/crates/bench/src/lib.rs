//! Shared fixtures for the criterion benchmarks.

use bps_core::full::antiholomorphic_field;
use bps_core::harmonic::probe_grid_for;
use bps_core::{
    builtin_potential, profile_to_field, solve_profile, Branch, ComplexField2D, Grid2D, HarmonicData,
    ModelParams, PotentialSpec,
};

/// Compacton of the `bps_test` potential lifted to an `n x n` grid.
pub struct RestrictedFixture {
    pub potential: PotentialSpec,
    pub params: ModelParams,
    pub field: ComplexField2D,
}

impl RestrictedFixture {
    pub fn new(n: usize) -> Self {
        let potential = builtin_potential("bps_test", &[1.0, 1.0]).expect("built-in potential");
        let params = ModelParams::restricted(1.0).expect("beta");
        let profile = solve_profile(&potential, &params, 1, Branch::Minus, 1.0, 2.5, 1e-10).expect("profile");
        let grid = Grid2D::centered_square(n, 2.5).expect("grid");
        let field = profile_to_field(&profile, grid, (0.0, 0.0));
        RestrictedFixture { potential, params, field }
    }
}

/// Perturbed anti-holomorphic start for the full-model solver.
pub struct FullFixture {
    pub h2: HarmonicData,
    pub params: ModelParams,
    pub initial: ComplexField2D,
}

impl FullFixture {
    pub fn new(n: usize) -> Self {
        let grid = Grid2D::centered_square(n, 1.0).expect("grid");
        let mut initial = antiholomorphic_field(grid, 1.0, (0.0, 0.0));
        for idx in 0..grid.len() {
            if !grid.is_boundary(idx) {
                let (x, y) = grid.position(idx);
                let bump = 0.05 * (1.0 - x * x) * (1.0 - y * y);
                initial.u.values[idx] += bump;
                initial.v.values[idx] -= bump;
            }
        }
        let h2 = HarmonicData::from_spec("const:2.5", probe_grid_for(&initial, 21).expect("probe")).expect("h2");
        FullFixture { h2, params: ModelParams::full(1.0, 16.0).expect("lambdas"), initial }
    }
}
