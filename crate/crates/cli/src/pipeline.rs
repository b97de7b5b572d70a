//! Solve and verify pipelines behind each subcommand. Pipelines return the
//! artifacts as strings; writing them is left to the caller.

use std::fmt::Write as _;
use std::path::Path;

use bps_core::full::{antiholomorphic_field, induced_g1, SolveLog};
use bps_core::harmonic::probe_grid_for;
use bps_core::io::{field_to_csv, fmt17, parse_field_csv, profile_to_csv, render_node_table};
use bps_core::verify::{energy_full_masked, energy_restricted_masked, EnergyParts};
use bps_core::{
    builtin_potential, conjugate_of, profile_to_field, solve_full_bps, solve_profile, stereographic_project,
    subset_check, topological_charge, verify_full, verify_restricted, Branch, ComplexField2D, Grid2D,
    HarmonicData, ModelParams, PotentialSpec, Region, SolverOptions, SubsetReport, VerificationReport,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Init, Model, Resolved};
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Check { name: name.into(), value, tolerance, passed: value <= tolerance }
    }
}

/// Files produced by a run, keyed by suffix (`.field.csv`, ...).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Artifacts {
    pub files: Vec<(String, String)>,
}

impl Artifacts {
    fn push(&mut self, suffix: &str, body: String) {
        self.files.push((suffix.into(), body));
    }

    pub fn get(&self, suffix: &str) -> Option<&str> {
        self.files.iter().find(|(s, _)| s == suffix).map(|(_, b)| b.as_str())
    }

    pub fn write(&self, prefix: &Path) -> Result<(), CliError> {
        for (suffix, body) in &self.files {
            let mut p = prefix.as_os_str().to_owned();
            p.push(suffix);
            std::fs::write(&p, body)
                .map_err(|e| CliError::Input(format!("cannot write {}: {e}", Path::new(&p).display())))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub artifacts: Artifacts,
    pub summary: String,
    pub passed: bool,
    pub metrics: Metrics,
}

/// Scalars tabulated by `sweep`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Metrics {
    pub energy: f64,
    pub charge: f64,
    pub crossterm: f64,
    pub el_residual: f64,
    /// Bogomolny residual (restricted) or `max(R2, R3)` (full).
    pub first_order_residual: f64,
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serialises");
    s.push('\n');
    s
}

pub fn build_grid(cfg: &Resolved) -> Result<Grid2D, CliError> {
    let g = cfg.grid;
    Ok(Grid2D::new(g.nx, g.ny, g.hx, g.hy, g.origin[0], g.origin[1])?)
}

fn potential_of(cfg: &Resolved) -> Result<PotentialSpec, CliError> {
    Ok(builtin_potential(&cfg.potential, &cfg.potential_params)?)
}

/// Checks shared by every restricted-model verification.
fn restricted_checks(r: &VerificationReport, cfg: &Resolved) -> Vec<Check> {
    let t = &cfg.tolerances;
    let mut checks = vec![
        Check::at_most("bogomolny_residual", r.bogomolny_residual_norm.unwrap_or(f64::NAN), t.bogomolny),
        Check::at_most("el_residual", r.el_residual_norm, t.el),
        Check::at_most("saturation_gap", relative_gap(r.energy, r.crossterm), t.saturation),
        Check::at_most("equipartition_defect", r.equipartition_defect, t.equipartition),
    ];
    if let Some(tc) = t.charge {
        checks.push(Check::at_most("charge_integrality", (r.charge - r.charge.round()).abs(), tc));
    }
    checks
}

fn relative_gap(e: f64, ct: f64) -> f64 {
    if e == 0.0 && ct == 0.0 {
        0.0
    } else {
        (e - ct).abs() / e.abs().max(ct.abs())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileSummary {
    pub n: i32,
    pub f0: f64,
    pub sigma: Branch,
    pub edge: Option<f64>,
    pub nodes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RestrictedReport<'a> {
    pub config: &'a Resolved,
    pub profile: ProfileSummary,
    pub verification: VerificationReport,
    pub checks: Vec<Check>,
    pub passed: bool,
}

pub fn solve_restricted(cfg: &Resolved) -> Result<Outcome, CliError> {
    let v = potential_of(cfg)?;
    let params = ModelParams::restricted(cfg.beta)?;
    let profile = solve_profile(&v, &params, cfg.n, cfg.sigma, cfg.f0, cfg.rmax, cfg.tol)?;
    let grid = build_grid(cfg)?;
    let w = profile_to_field(&profile, grid, (0.0, 0.0));
    let region = Region::hedgehog(&grid, (0.0, 0.0), profile.edge, cfg.f0, cfg.rmax);
    let verification = verify_restricted(&w, &v, &params, cfg.sigma, &region)?;
    let checks = restricted_checks(&verification, cfg);
    let passed = checks.iter().all(|c| c.passed);
    let metrics = Metrics {
        energy: verification.energy,
        charge: verification.charge,
        crossterm: verification.crossterm,
        el_residual: verification.el_residual_norm,
        first_order_residual: verification.bogomolny_residual_norm.unwrap_or(f64::NAN),
    };
    let summary = format!(
        "restricted {} n={} E={:.10e} Q={:.10e} CT={:.10e} bogomolny={:.3e} el={:.3e} {}",
        cfg.potential,
        cfg.n,
        metrics.energy,
        metrics.charge,
        metrics.crossterm,
        metrics.first_order_residual,
        metrics.el_residual,
        pass_word(passed)
    );
    let report = RestrictedReport {
        config: cfg,
        profile: ProfileSummary {
            n: profile.n,
            f0: profile.f0,
            sigma: profile.sigma,
            edge: profile.edge,
            nodes: profile.r.len(),
        },
        verification,
        checks,
        passed,
    };
    let mut artifacts = Artifacts::default();
    artifacts.push(".profile.csv", profile_to_csv(&profile.r, &profile.f));
    artifacts.push(".field.csv", field_to_csv(&w));
    artifacts.push(".report.json", to_json(&report));
    Ok(Outcome { artifacts, summary, passed, metrics })
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualNorms {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub fit_defect: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FullReport<'a> {
    pub config: &'a Resolved,
    pub h2: String,
    pub laplace_residual: f64,
    pub residual_norms: ResidualNorms,
    pub converged: bool,
    pub solver: SolveLog,
    pub subset: SubsetReport,
    pub verification: VerificationReport,
    pub checks: Vec<Check>,
    pub passed: bool,
}

fn initial_field(cfg: &Resolved) -> Result<ComplexField2D, CliError> {
    match &cfg.init {
        Init::Antiholo => Ok(antiholomorphic_field(build_grid(cfg)?, 1.0, (0.0, 0.0))),
        Init::File(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Input(format!("cannot read {}: {e}", p.display())))?;
            Ok(parse_field_csv(&text)?)
        }
    }
}

pub fn solve_full(cfg: &Resolved) -> Result<Outcome, CliError> {
    let params = ModelParams::full(cfg.lambda1, cfg.lambda2)?;
    let init = initial_field(cfg)?;
    let probe = probe_grid_for(&init, 21)?;
    let h2 = HarmonicData::from_spec(&cfg.h2, probe)?;
    h2.ensure_harmonic()?;
    let sol = solve_full_bps(&h2, &params, &init, &SolverOptions::new(cfg.iters, cfg.tol))?;
    let subset = subset_check(&sol, &params, cfg.tol)?;
    let conj = conjugate_of(&h2, (0.0, 0.0))?;
    let grid = sol.w.grid();
    let region = Region::interior(&grid, 1);
    let verification = verify_full(&sol.w, &sol.v_constructed, &params, Some((&h2, &conj)), &region)?;
    let [r1, r2, r3] = sol.residual_norms;
    let mut checks = vec![
        Check::at_most("r2", r2, cfg.tol),
        Check::at_most("r3", r3, cfg.tol),
        Check::at_most("el_residual", verification.el_residual_norm, cfg.tolerances.el),
    ];
    if let Some(p) = subset.passed {
        checks.push(Check {
            name: "subset".into(),
            value: subset.restricted_norm,
            tolerance: r1 + cfg.tol,
            passed: p,
        });
    }
    let passed = sol.log.converged && checks.iter().all(|c| c.passed);
    let metrics = Metrics {
        energy: verification.energy,
        charge: verification.charge,
        crossterm: verification.crossterm,
        el_residual: verification.el_residual_norm,
        first_order_residual: r2.max(r3),
    };
    let summary = format!(
        "full h2={} E={:.10e} Q={:.10e} R1={:.3e} R2={:.3e} R3={:.3e} iters={} {}",
        h2.name,
        metrics.energy,
        metrics.charge,
        r1,
        r2,
        r3,
        sol.log.iterations,
        pass_word(passed)
    );

    let g1_fit: Vec<f64> = (0..grid.len()).map(|i| sol.g1_fit.eval(sol.w.u.values[i], sol.w.v.values[i])).collect();
    let g1_table = render_node_table(&grid, &["g1_induced", "g1_fit"], &[&induced_g1(&sol.w, &params).values, &g1_fit]);
    let samples = potential_samples(&sol.v_constructed, &sol.w)?;
    let report = FullReport {
        config: cfg,
        h2: h2.name.clone(),
        laplace_residual: h2.laplace_residual,
        residual_norms: ResidualNorms { r1, r2, r3, fit_defect: sol.fit_defect },
        converged: sol.log.converged,
        solver: sol.log.clone(),
        subset,
        verification,
        checks,
        passed,
    };
    let mut artifacts = Artifacts::default();
    artifacts.push(".field.csv", field_to_csv(&sol.w));
    artifacts.push(".g1.csv", g1_table);
    artifacts.push(".potential.csv", samples);
    artifacts.push(".report.json", to_json(&report));
    Ok(Outcome { artifacts, summary, passed, metrics })
}

/// `u,v,V` on a 41 x 41 lattice over the values attained by `w`.
fn potential_samples(v: &PotentialSpec, w: &ComplexField2D) -> Result<String, CliError> {
    let probe = probe_grid_for(w, 41)?;
    let mut out = String::from("u,v,V\n");
    for idx in 0..probe.len() {
        let (u, vv) = probe.position(idx);
        let _ = writeln!(out, "{},{},{}", fmt17(u), fmt17(vv), fmt17(v.eval(u, vv)));
    }
    Ok(out)
}

pub fn run(cfg: &Resolved) -> Result<Outcome, CliError> {
    match cfg.model {
        Model::Restricted => solve_restricted(cfg),
        Model::Full => solve_full(cfg),
    }
}

fn pass_word(p: bool) -> &'static str {
    if p {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Norm and quadrature regions for a field read from disk. The centre is
/// the grid midpoint; the compacton edge is the smallest radius of an exact
/// vacuum node, and the centre value decides whether a core is excluded.
pub fn detect_region(w: &ComplexField2D) -> Region {
    let g = w.grid();
    let c = g.position(g.index(g.nx / 2, g.ny / 2));
    let half = (0.5 * (g.nx - 1) as f64 * g.hx).min(0.5 * (g.ny - 1) as f64 * g.hy);
    let r_of = |i: usize| {
        let (x, y) = g.position(i);
        (x - c.0).hypot(y - c.1)
    };
    let edge = (0..g.len())
        .filter(|&i| w.u.values[i] == 0.0 && w.v.values[i] == 0.0 && r_of(i) > 0.0)
        .map(r_of)
        .fold(f64::INFINITY, f64::min);
    let edge = (edge < half).then_some(edge);
    let centre = (0..g.len()).min_by(|&a, &b| r_of(a).total_cmp(&r_of(b))).unwrap_or(0);
    let f0 = w.omega(centre).norm();
    Region::hedgehog(&g, c, edge, f0, half)
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyOutput<'a> {
    pub config: &'a Resolved,
    pub verification: VerificationReport,
    pub checks: Vec<Check>,
    pub passed: bool,
}

pub fn verify_field(cfg: &Resolved, w: &ComplexField2D, h2: Option<&str>) -> Result<Outcome, CliError> {
    let v = potential_of(cfg)?;
    let region = detect_region(w);
    let (verification, checks) = match cfg.model {
        Model::Restricted => {
            let params = ModelParams::restricted(cfg.beta)?;
            let r = verify_restricted(w, &v, &params, cfg.sigma, &region)?;
            let c = restricted_checks(&r, cfg);
            (r, c)
        }
        Model::Full => {
            let params = ModelParams::full(cfg.lambda1, cfg.lambda2)?;
            let r = match h2 {
                Some(spec) => {
                    let h = HarmonicData::from_spec(spec, probe_grid_for(w, 21)?)?;
                    h.ensure_harmonic()?;
                    let conj = conjugate_of(&h, (0.0, 0.0))?;
                    verify_full(w, &v, &params, Some((&h, &conj)), &region)?
                }
                None => verify_full(w, &v, &params, None, &region)?,
            };
            let c = vec![Check::at_most("el_residual", r.el_residual_norm, cfg.tolerances.el)];
            (r, c)
        }
    };
    let passed = checks.iter().all(|c| c.passed);
    let metrics = Metrics {
        energy: verification.energy,
        charge: verification.charge,
        crossterm: verification.crossterm,
        el_residual: verification.el_residual_norm,
        first_order_residual: verification.bogomolny_residual_norm.unwrap_or(f64::NAN),
    };
    let summary = format!(
        "verify {} E={:.10e} Q={:.10e} el={:.3e} {}",
        verification.model,
        metrics.energy,
        metrics.charge,
        metrics.el_residual,
        pass_word(passed)
    );
    let out = VerifyOutput { config: cfg, verification, checks, passed };
    let mut artifacts = Artifacts::default();
    artifacts.push(".report.json", to_json(&out));
    Ok(Outcome { artifacts, summary, passed, metrics })
}

#[derive(Debug, Clone, Serialize)]
pub struct ChargeReport {
    /// Jacobian form over the quadrature region.
    pub charge: f64,
    pub charge_unmasked: f64,
    /// Unit-vector form over the quadrature region.
    pub charge_vector: f64,
    pub quadrature_hole_radius: f64,
    pub checks: Vec<Check>,
    pub passed: bool,
}

pub fn charge_of(cfg: &Resolved, w: &ComplexField2D) -> Result<Outcome, CliError> {
    let region = detect_region(w);
    let quad = region.quadrature();
    let charge = bps_core::verify::topological_charge_masked(w, &quad);
    let charge_vector = bps_core::verify::topological_charge_vector(&stereographic_project(w), &quad);
    let checks: Vec<Check> = cfg
        .tolerances
        .charge
        .map(|t| Check::at_most("charge_integrality", (charge - charge.round()).abs(), t))
        .into_iter()
        .collect();
    let passed = checks.iter().all(|c| c.passed);
    let report = ChargeReport {
        charge,
        charge_unmasked: topological_charge(w),
        charge_vector,
        quadrature_hole_radius: region.hole_radius,
        checks,
        passed,
    };
    let summary = format!("Q={:.10e} Q_vector={:.10e} {}", charge, charge_vector, pass_word(passed));
    let mut artifacts = Artifacts::default();
    artifacts.push(".report.json", to_json(&report));
    let metrics = Metrics { charge, ..Metrics::default() };
    Ok(Outcome { artifacts, summary, passed, metrics })
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyReport {
    pub model: Model,
    pub energy: EnergyParts,
    pub quadrature_hole_radius: f64,
}

pub fn energy_of(cfg: &Resolved, w: &ComplexField2D) -> Result<Outcome, CliError> {
    let v = potential_of(cfg)?;
    let region = detect_region(w);
    let quad = region.quadrature();
    let energy = match cfg.model {
        Model::Restricted => energy_restricted_masked(w, &v, &ModelParams::restricted(cfg.beta)?, &quad)?,
        Model::Full => energy_full_masked(w, &v, &ModelParams::full(cfg.lambda1, cfg.lambda2)?, &quad)?,
    };
    let report = EnergyReport { model: cfg.model, energy, quadrature_hole_radius: region.hole_radius };
    let summary = format!(
        "E={:.10e} quartic={:.10e} o3={:.10e} potential={:.10e}",
        energy.total, energy.quartic, energy.o3, energy.potential
    );
    let mut artifacts = Artifacts::default();
    artifacts.push(".report.json", to_json(&report));
    let metrics = Metrics { energy: energy.total, ..Metrics::default() };
    Ok(Outcome { artifacts, summary, passed: true, metrics })
}

/// Names accepted by [`apply_sweep_value`].
pub const SWEEP_PARAMETERS: [&str; 8] = ["f0", "n", "sigma", "beta", "rmax", "lambda1", "lambda2", "potential.params.K"];

/// Returns a copy of `cfg` with `name` set to `value`.
pub fn apply_sweep_value(cfg: &Resolved, name: &str, value: f64) -> Result<Resolved, CliError> {
    let mut c = cfg.clone();
    let bad = |m: String| CliError::Config { path: "sweep.parameter".into(), message: m };
    match name {
        "f0" => c.f0 = value,
        "n" => {
            if value.fract() != 0.0 || value == 0.0 {
                return Err(CliError::Input(format!("n must be a nonzero integer, got {value}")));
            }
            c.n = value as i32;
        }
        "sigma" => {
            // The profile decreases only when sigma * n keeps its sign, so the
            // winding follows the branch.
            c.sigma = Branch::from_sign(value)?;
            if c.sigma != cfg.sigma {
                c.n = -cfg.n;
            }
        }
        "beta" => {
            c.beta = value;
            c.lambda2 = 16.0 * value;
        }
        "rmax" => c.rmax = value,
        "lambda1" => c.lambda1 = value,
        "lambda2" => {
            c.lambda2 = value;
            c.beta = value / 16.0;
        }
        other => {
            let k = other
                .strip_prefix("potential.params.")
                .and_then(|k| k.parse::<usize>().ok())
                .ok_or_else(|| bad(format!("unknown sweep parameter `{other}` (expected one of {SWEEP_PARAMETERS:?})")))?;
            if k >= c.potential_params.len() {
                return Err(bad(format!("potential has only {} parameters", c.potential_params.len())));
            }
            c.potential_params[k] = value;
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, PartialEq)]
pub enum RowStatus {
    Ok,
    ToleranceFailure,
    Error(String),
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: f64,
    pub status: RowStatus,
    pub metrics: Metrics,
}

/// Runs the configured pipeline once per value. Rows are ordered by value
/// and each run is independent, so the table does not depend on scheduling.
pub fn sweep(cfg: &Resolved, name: &str, values: &[f64]) -> Result<Vec<SweepRow>, CliError> {
    apply_sweep_value(cfg, name, values.first().copied().unwrap_or(1.0))?;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted
        .par_iter()
        .map(|&value| {
            let result = apply_sweep_value(cfg, name, value).and_then(|c| run(&c));
            match result {
                Ok(o) => SweepRow {
                    value,
                    status: if o.passed { RowStatus::Ok } else { RowStatus::ToleranceFailure },
                    metrics: o.metrics,
                },
                Err(e) => SweepRow { value, status: RowStatus::Error(e.to_string()), metrics: Metrics::default() },
            }
        })
        .collect())
}

pub fn sweep_to_csv(name: &str, rows: &[SweepRow]) -> String {
    let mut out = String::from("parameter,value,status,energy,charge,crossterm,el_residual,first_order_residual,message\n");
    for r in rows {
        let (status, msg) = match &r.status {
            RowStatus::Ok => ("ok", String::new()),
            RowStatus::ToleranceFailure => ("tolerance_failure", String::new()),
            RowStatus::Error(m) => ("error", m.replace(['"', '\n'], " ")),
        };
        let m = &r.metrics;
        let _ = writeln!(
            out,
            "{name},{},{status},{},{},{},{},{},\"{msg}\"",
            fmt17(r.value),
            fmt17(m.energy),
            fmt17(m.charge),
            fmt17(m.crossterm),
            fmt17(m.el_residual),
            fmt17(m.first_order_residual),
        );
    }
    out
}
