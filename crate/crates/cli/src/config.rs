//! Run configuration: a JSON document, command-line overrides and defaults.
//!
//! Every leaf is optional in the document. [`RunConfig::overlay`] applies
//! flag values on top of a loaded document and [`RunConfig::resolve`] fills
//! defaults and validates, reporting failures by field path.

use std::path::{Path, PathBuf};

use bps_core::potential::Branch;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Restricted,
    Full,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialBlock {
    pub name: Option<String>,
    pub params: Option<Vec<f64>>,
    pub sigma: Option<i32>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsBlock {
    pub beta: Option<f64>,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub nx: Option<usize>,
    pub ny: Option<usize>,
    pub hx: Option<f64>,
    pub hy: Option<f64>,
    /// Lower-left node; the grid is centred on the origin when absent.
    pub origin: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverBlock {
    pub n: Option<i32>,
    pub f0: Option<f64>,
    pub rmax: Option<f64>,
    pub tol: Option<f64>,
    pub iters: Option<usize>,
    /// Alternative spelling of `potential.sigma`.
    pub sigma: Option<i32>,
    pub h2: Option<String>,
    /// `antiholo` or a path to a field CSV.
    pub init: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceBlock {
    pub bogomolny: Option<f64>,
    pub el: Option<f64>,
    pub saturation: Option<f64>,
    pub equipartition: Option<f64>,
    /// Distance of `Q` from the nearest integer; unchecked when absent.
    pub charge: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub parameter: Option<String>,
    pub values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<Model>,
    #[serde(default)]
    pub potential: PotentialBlock,
    #[serde(default)]
    pub params: ParamsBlock,
    #[serde(default)]
    pub grid: GridBlock,
    #[serde(default)]
    pub solver: SolverBlock,
    pub output: Option<String>,
    #[serde(default)]
    pub tolerances: ToleranceBlock,
    #[serde(default)]
    pub sweep: SweepBlock,
}

macro_rules! overlay_fields {
    ($dst:expr, $src:expr, $($f:ident),+) => {
        $(if $src.$f.is_some() { $dst.$f = $src.$f.clone(); })+
    };
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::Config { path, message: e.into_inner().to_string() }
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Replaces every field set in `top`.
    pub fn overlay(&mut self, top: &RunConfig) {
        overlay_fields!(self, top, model, output);
        overlay_fields!(self.potential, top.potential, name, params, sigma);
        overlay_fields!(self.params, top.params, beta, lambda1, lambda2, gamma);
        overlay_fields!(self.grid, top.grid, nx, ny, hx, hy, origin);
        if top.potential.sigma.is_some() {
            self.solver.sigma = None;
        }
        overlay_fields!(self.solver, top.solver, n, f0, rmax, tol, iters, sigma, h2, init);
        overlay_fields!(self.tolerances, top.tolerances, bogomolny, el, saturation, equipartition, charge);
        overlay_fields!(self.sweep, top.sweep, parameter, values);
    }

    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let model = self.model.unwrap_or(Model::Restricted);
        let name = self.potential.name.clone().unwrap_or_else(|| "bps_test".into());
        let potential_params = match &self.potential.params {
            Some(p) => p.clone(),
            None => default_potential_params(&name),
        };
        let sigma = match (self.potential.sigma, self.solver.sigma) {
            (Some(a), Some(b)) if a != b => {
                return Err(field("solver.sigma", format!("conflicts with potential.sigma = {a}, got {b}")))
            }
            (a, b) => a.or(b),
        };
        let sigma = match sigma.unwrap_or(-1) {
            -1 => Branch::Minus,
            1 => Branch::Plus,
            s => return Err(field("potential.sigma", format!("must be -1 or +1, got {s}"))),
        };
        let p = &self.params;
        let (beta, lambda1, lambda2) = match model {
            Model::Restricted => {
                let beta = p.beta.unwrap_or(1.0);
                (beta, 0.0, 16.0 * beta)
            }
            Model::Full => {
                let lambda2 = p.lambda2.or(p.beta.map(|b| 16.0 * b)).unwrap_or(16.0);
                (p.beta.unwrap_or(lambda2 / 16.0), p.lambda1.unwrap_or(1.0), lambda2)
            }
        };
        positive("params.beta", beta)?;
        if model == Model::Full {
            positive("params.lambda1", lambda1)?;
            positive("params.lambda2", lambda2)?;
            if (lambda2 - 16.0 * beta).abs() > 1e-12 * lambda2 {
                return Err(field("params.beta", format!("must equal lambda2 / 16 = {}, got {beta}", lambda2 / 16.0)));
            }
        }
        let gamma = p.gamma.unwrap_or(1.0);
        positive("params.gamma", gamma)?;

        let s = &self.solver;
        let n = s.n.unwrap_or(1);
        if n == 0 {
            return Err(field("solver.n", "winding must be nonzero".into()));
        }
        let f0 = s.f0.unwrap_or(1.0);
        positive("solver.f0", f0)?;
        let rmax = s.rmax.unwrap_or(3.0);
        positive("solver.rmax", rmax)?;
        let tol = s.tol.unwrap_or(1e-10);
        if !(tol > 0.0 && tol < 1.0) {
            return Err(field("solver.tol", format!("must lie in (0, 1), got {tol}")));
        }
        let iters = s.iters.unwrap_or(50);
        let h2 = s.h2.clone().unwrap_or_else(|| "const:1".into());
        let init = match s.init.as_deref() {
            None | Some("antiholo") => Init::Antiholo,
            Some(path) => {
                let pb = PathBuf::from(path);
                if !pb.exists() {
                    return Err(field("solver.init", format!("file {} does not exist", pb.display())));
                }
                Init::File(pb)
            }
        };

        let grid = self.resolve_grid(model, rmax)?;

        let t = &self.tolerances;
        let tolerances = Tolerances {
            bogomolny: t.bogomolny.unwrap_or(1e-2),
            el: t.el.unwrap_or(1e-1),
            saturation: t.saturation.unwrap_or(1e-3),
            equipartition: t.equipartition.unwrap_or(1e-2),
            charge: t.charge,
        };
        for (path, v) in [
            ("tolerances.bogomolny", tolerances.bogomolny),
            ("tolerances.el", tolerances.el),
            ("tolerances.saturation", tolerances.saturation),
            ("tolerances.equipartition", tolerances.equipartition),
        ] {
            positive(path, v)?;
        }
        if let Some(c) = tolerances.charge {
            positive("tolerances.charge", c)?;
        }

        Ok(Resolved {
            model,
            potential: name,
            potential_params,
            sigma,
            beta,
            lambda1,
            lambda2,
            gamma,
            grid,
            n,
            f0,
            rmax,
            tol,
            iters,
            h2,
            init,
            output: self.output.clone().map(PathBuf::from),
            tolerances,
        })
    }

    fn resolve_grid(&self, model: Model, rmax: f64) -> Result<GridSpec, CliError> {
        let g = &self.grid;
        let (default_n, half) = match model {
            Model::Restricted => (257, rmax),
            Model::Full => (65, 1.0),
        };
        let nx = g.nx.unwrap_or(default_n);
        let ny = g.ny.unwrap_or(nx);
        if nx < 3 {
            return Err(field("grid.nx", format!("needs at least 3 nodes, got {nx}")));
        }
        if ny < 3 {
            return Err(field("grid.ny", format!("needs at least 3 nodes, got {ny}")));
        }
        let hx = g.hx.unwrap_or(2.0 * half / (nx - 1) as f64);
        let hy = g.hy.unwrap_or(2.0 * half / (ny - 1) as f64);
        positive("grid.hx", hx)?;
        positive("grid.hy", hy)?;
        let origin = g
            .origin
            .unwrap_or([-0.5 * (nx - 1) as f64 * hx, -0.5 * (ny - 1) as f64 * hy]);
        Ok(GridSpec { nx, ny, hx, hy, origin })
    }
}

pub fn default_potential_params(name: &str) -> Vec<f64> {
    match name {
        "old_baby" => vec![1.0],
        "half_U_squared" => vec![1.0, 1.0],
        _ => vec![1.0, 1.0],
    }
}

fn field(path: &str, message: String) -> CliError {
    CliError::Config { path: path.into(), message }
}

fn positive(path: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(field(path, format!("must be positive, got {v}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Init {
    Antiholo,
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
    pub origin: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub bogomolny: f64,
    pub el: f64,
    pub saturation: f64,
    pub equipartition: f64,
    pub charge: Option<f64>,
}

/// A validated configuration with every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    pub model: Model,
    pub potential: String,
    pub potential_params: Vec<f64>,
    pub sigma: Branch,
    pub beta: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub gamma: f64,
    pub grid: GridSpec,
    pub n: i32,
    pub f0: f64,
    pub rmax: f64,
    pub tol: f64,
    pub iters: usize,
    pub h2: String,
    pub init: Init,
    #[serde(skip)]
    pub output: Option<PathBuf>,
    pub tolerances: Tolerances,
}
