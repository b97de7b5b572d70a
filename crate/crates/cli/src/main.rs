use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bps_cli::config::{Model, RunConfig};
use bps_cli::error::CliError;
use bps_cli::pipeline::{self, Outcome, RowStatus};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bps", version, about = "Solve and verify Bogomolny decompositions of baby Skyrme models")]
struct Cli {
    /// JSON run configuration; flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output prefix for artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Suppress the summary line.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the hedgehog profile of the restricted model and verify the lifted field.
    SolveRestricted(RestrictedArgs),
    /// Solve the first-order system of the full model and construct its potential.
    SolveFull(FullArgs),
    /// Verify a field read from CSV.
    Verify(VerifyArgs),
    /// Topological charge of a field read from CSV.
    Charge(FieldArgs),
    /// Energy of a field read from CSV.
    Energy(EnergyArgs),
    /// Run the configured pipeline over a list of parameter values.
    Sweep(SweepArgs),
}

#[derive(Args, Default)]
struct PotentialArgs {
    /// Potential name with optional parameters, e.g. `bps_test:1,1`.
    #[arg(long)]
    potential: Option<String>,
    #[arg(long)]
    beta: Option<f64>,
    /// Branch sign, -1 or +1.
    #[arg(long)]
    sigma: Option<i32>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct RestrictedArgs {
    #[command(flatten)]
    pot: PotentialArgs,
    #[arg(long)]
    n: Option<i32>,
    #[arg(long)]
    f0: Option<f64>,
    #[arg(long)]
    rmax: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    /// `nx,ny,hx,hy`
    #[arg(long)]
    grid: Option<String>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct FullArgs {
    /// `zero`, `u`, `v`, `uv`, `u2-v2`, `const:c` or `poly:c0,c1,...`.
    #[arg(long)]
    h2: Option<String>,
    #[arg(long)]
    lambda1: Option<f64>,
    #[arg(long)]
    lambda2: Option<f64>,
    /// `antiholo` or a field CSV.
    #[arg(long)]
    init: Option<String>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// `nx,ny,hx,hy`
    #[arg(long)]
    grid: Option<String>,
}

#[derive(Args)]
struct FieldArgs {
    #[arg(long)]
    field: PathBuf,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct VerifyArgs {
    #[arg(long)]
    field: PathBuf,
    #[command(flatten)]
    pot: PotentialArgs,
    #[arg(long, value_enum)]
    model: Option<Model>,
    #[arg(long)]
    h2: Option<String>,
    #[arg(long)]
    lambda1: Option<f64>,
    #[arg(long)]
    lambda2: Option<f64>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct EnergyArgs {
    #[arg(long)]
    field: PathBuf,
    #[command(flatten)]
    pot: PotentialArgs,
    #[arg(long, value_enum)]
    model: Option<Model>,
    #[arg(long)]
    lambda1: Option<f64>,
    #[arg(long)]
    lambda2: Option<f64>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct SweepArgs {
    /// Parameter to vary: f0, n, sigma, beta, rmax, lambda1, lambda2 or potential.params.K.
    #[arg(long)]
    param: Option<String>,
    /// Comma-separated values; an empty string gives an empty table.
    #[arg(long, allow_hyphen_values = true)]
    values: Option<String>,
    #[arg(long, value_enum)]
    model: Option<Model>,
    #[command(flatten)]
    pot: PotentialArgs,
}

fn parse_list(path: &str, s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| CliError::Config { path: path.into(), message: format!("`{t}` is not a number") })
        })
        .collect()
}

fn apply_potential(flags: &mut RunConfig, p: &PotentialArgs) -> Result<(), CliError> {
    if let Some(spec) = &p.potential {
        let (name, params) = match spec.split_once(':') {
            Some((n, rest)) => (n, Some(parse_list("potential.params", rest)?)),
            None => (spec.as_str(), None),
        };
        flags.potential.name = Some(name.into());
        flags.potential.params = params;
    }
    flags.potential.sigma = p.sigma;
    flags.params.beta = p.beta;
    Ok(())
}

fn apply_grid(flags: &mut RunConfig, grid: &Option<String>) -> Result<(), CliError> {
    if let Some(g) = grid {
        let parts: Vec<&str> = g.split(',').map(str::trim).collect();
        let bad = || CliError::Config { path: "grid".into(), message: format!("expected nx,ny,hx,hy, got `{g}`") };
        if parts.len() != 4 {
            return Err(bad());
        }
        flags.grid.nx = Some(parts[0].parse().map_err(|_| bad())?);
        flags.grid.ny = Some(parts[1].parse().map_err(|_| bad())?);
        flags.grid.hx = Some(parts[2].parse().map_err(|_| bad())?);
        flags.grid.hy = Some(parts[3].parse().map_err(|_| bad())?);
    }
    Ok(())
}

fn read_field(path: &Path) -> Result<bps_core::ComplexField2D, CliError> {
    Ok(bps_core::io::read_field_csv(path)?)
}

/// Writes artifacts to the prefix, or prints the report when there is none.
fn emit(o: &Outcome, prefix: Option<PathBuf>, quiet: bool, print_report: bool) -> Result<bool, CliError> {
    match prefix {
        Some(p) => o.artifacts.write(&p)?,
        None if print_report => {
            if let Some(r) = o.artifacts.get(".report.json") {
                print!("{r}");
            }
        }
        None => {}
    }
    if !quiet {
        if print_report {
            eprintln!("{}", o.summary);
        } else {
            println!("{}", o.summary);
        }
    }
    Ok(o.passed)
}

fn execute(cli: Cli) -> Result<bool, CliError> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Config { path: "threads".into(), message: "must be at least 1".into() });
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Input(e.to_string()))?;
    }
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let mut flags = RunConfig { output: cli.out.as_ref().map(|p| p.display().to_string()), ..RunConfig::default() };
    let mut h2_for_verify = None;
    let mut field = None;
    match &cli.cmd {
        Cmd::SolveRestricted(a) => {
            flags.model = Some(Model::Restricted);
            apply_potential(&mut flags, &a.pot)?;
            flags.solver.n = a.n;
            flags.solver.f0 = a.f0;
            flags.solver.rmax = a.rmax;
            flags.solver.tol = a.tol;
            apply_grid(&mut flags, &a.grid)?;
        }
        Cmd::SolveFull(a) => {
            flags.model = Some(Model::Full);
            flags.solver.h2 = a.h2.clone();
            flags.params.lambda1 = a.lambda1;
            flags.params.lambda2 = a.lambda2;
            flags.solver.init = a.init.clone();
            flags.solver.iters = a.iters;
            flags.solver.tol = a.tol;
            apply_grid(&mut flags, &a.grid)?;
        }
        Cmd::Verify(a) => {
            flags.model = a.model;
            apply_potential(&mut flags, &a.pot)?;
            flags.params.lambda1 = a.lambda1;
            flags.params.lambda2 = a.lambda2;
            h2_for_verify = a.h2.clone();
            field = Some(a.field.clone());
        }
        Cmd::Charge(a) => field = Some(a.field.clone()),
        Cmd::Energy(a) => {
            flags.model = a.model;
            apply_potential(&mut flags, &a.pot)?;
            flags.params.lambda1 = a.lambda1;
            flags.params.lambda2 = a.lambda2;
            field = Some(a.field.clone());
        }
        Cmd::Sweep(a) => {
            flags.model = a.model;
            apply_potential(&mut flags, &a.pot)?;
            flags.sweep.parameter = a.param.clone();
            if let Some(v) = &a.values {
                flags.sweep.values = Some(parse_list("sweep.values", v)?);
            }
        }
    }
    cfg.overlay(&flags);
    let resolved = cfg.resolve()?;
    let prefix = resolved.output.clone();
    let default_prefix = || Some(prefix.clone().unwrap_or_else(|| PathBuf::from("bps")));
    match &cli.cmd {
        Cmd::SolveRestricted(_) => emit(&pipeline::solve_restricted(&resolved)?, default_prefix(), cli.quiet, false),
        Cmd::SolveFull(_) => emit(&pipeline::solve_full(&resolved)?, default_prefix(), cli.quiet, false),
        Cmd::Verify(_) => {
            let w = read_field(field.as_ref().expect("field flag"))?;
            let h2 = h2_for_verify.or(cfg.solver.h2.clone());
            emit(&pipeline::verify_field(&resolved, &w, h2.as_deref())?, prefix, cli.quiet, true)
        }
        Cmd::Charge(_) => {
            let w = read_field(field.as_ref().expect("field flag"))?;
            emit(&pipeline::charge_of(&resolved, &w)?, prefix, cli.quiet, true)
        }
        Cmd::Energy(_) => {
            let w = read_field(field.as_ref().expect("field flag"))?;
            emit(&pipeline::energy_of(&resolved, &w)?, prefix, cli.quiet, true)
        }
        Cmd::Sweep(_) => {
            let name = cfg.sweep.parameter.clone().ok_or_else(|| CliError::Config {
                path: "sweep.parameter".into(),
                message: "a sweep parameter is required".into(),
            })?;
            let values = cfg.sweep.values.clone().unwrap_or_default();
            let rows = pipeline::sweep(&resolved, &name, &values)?;
            let csv = pipeline::sweep_to_csv(&name, &rows);
            let mut p = default_prefix().expect("prefix").into_os_string();
            p.push(".sweep.csv");
            std::fs::write(&p, csv).map_err(|e| CliError::Input(format!("cannot write sweep table: {e}")))?;
            let failed = rows.iter().filter(|r| r.status != RowStatus::Ok).count();
            if !cli.quiet {
                println!("sweep {name}: {} rows, {failed} not ok", rows.len());
            }
            if rows.iter().any(|r| matches!(r.status, RowStatus::Error(_))) {
                return Err(CliError::Input(format!("{failed} sweep rows failed; see the status column")));
            }
            Ok(failed == 0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
