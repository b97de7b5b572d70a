//! Construction, solution and verification of Bogomolny (BPS) decompositions
//! for the restricted and full baby Skyrme models in two dimensions.
//!
//! Fields are stored in stereographic form `omega = u + i v` on uniform grids.

pub mod deriv;
pub mod error;
pub mod fit;
pub mod full;
pub mod grid;
pub mod harmonic;
pub mod io;
pub mod ode;
pub mod potential;
pub mod quad;
pub mod restricted;
pub mod stereo;
pub mod verify;

pub use error::{Error, Result};
pub use full::{
    residual_full_system, solve_full_bps, subset_check, FullSolution, SolveLog, SolverOptions,
    SubsetReport,
};
pub use grid::{ComplexField2D, Grid2D, ScalarField2D, UnitVectorField};
pub use harmonic::{check_harmonic, conjugate_of, HarmonicData, Poly2};
pub use potential::{
    build_full_model_potential, builtin_potential, g1_from_potential, Branch, ModelParams,
    PotentialSpec, UvFunction,
};
pub use restricted::{
    profile_to_field, radial_rhs, residual_bogomolny_restricted, solve_profile, HedgehogProfile,
};
pub use stereo::{stereographic_inverse, stereographic_project};
pub use verify::{
    saturation_check, topological_charge, verify_full, verify_restricted, Region, VerificationReport,
};
