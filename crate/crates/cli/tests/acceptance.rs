//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use bps_core::full::{antiholomorphic_field, induced_g1};
use bps_core::harmonic::probe_grid_for;
use bps_core::stereo::{inverse_point, project_point, DEFAULT_CAP};
use bps_core::verify::{
    dual_residuals_restricted, el_residual_full, el_residual_restricted, saturation_check, topological_charge,
    topological_charge_masked, EDGE_COLLAR_NODES,
};
use bps_core::{
    builtin_potential, check_harmonic, profile_to_field, residual_bogomolny_restricted, solve_full_bps,
    solve_profile, subset_check, Branch, ComplexField2D, Error, Grid2D, HarmonicData, HedgehogProfile,
    ModelParams, Poly2, PotentialSpec, Region, SolverOptions, UvFunction,
};
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

/// The manufactured compacton: bps_test with beta = lambda = n = f0 = 1, sigma = -1.
struct Manufactured {
    v: PotentialSpec,
    params: ModelParams,
    profile: HedgehogProfile,
}

const HALF_WIDTH: f64 = 2.5;

fn manufactured() -> Manufactured {
    let v = builtin_potential("bps_test", &[1.0, 1.0]).unwrap();
    let params = ModelParams::restricted(1.0).unwrap();
    let profile = solve_profile(&v, &params, 1, Branch::Minus, 1.0, HALF_WIDTH, 1e-12).unwrap();
    Manufactured { v, params, profile }
}

impl Manufactured {
    fn lifted(&self, n: usize) -> (ComplexField2D, Region) {
        let g = Grid2D::centered_square(n, HALF_WIDTH).unwrap();
        let w = profile_to_field(&self.profile, g, (0.0, 0.0));
        let edge = self.profile.edge;
        let core = 0.5 * edge.unwrap();
        let reg = Region::compacton(&g, (0.0, 0.0), edge, EDGE_COLLAR_NODES, core);
        (w, reg)
    }
}

fn sci(xs: &[f64]) -> String {
    let items: Vec<String> = xs.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", items.join(", "))
}

fn order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

fn c1_stereographic_round_trip() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut worst = 0.0_f64;
    for _ in 0..1000 {
        let s3: f64 = rng.random_range(-1.0 + 1e-6..1.0);
        let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let p = (1.0 - s3 * s3).sqrt();
        let s = [p * phi.cos(), p * phi.sin(), s3];
        let (u, v, clamped) = inverse_point(s, DEFAULT_CAP);
        assert!(!clamped);
        let back = project_point(u, v);
        for k in 0..3 {
            worst = worst.max((back[k] - s[k]).abs());
        }
    }
    outcome(worst <= 1e-12, format!("max error {worst:.3e} (limit 1e-12)"))
}

fn c2_manufactured_solution(m: &Manufactured) -> Outcome {
    let p = &m.profile;
    let ode_err = p.r.iter().zip(&p.f).map(|(r, f)| (f - (1.0 - r * r / 4.0).max(0.0)).abs()).fold(0.0, f64::max);
    let edge = p.edge.unwrap_or(f64::NAN);
    let res = |n: usize| {
        let (w, reg) = m.lifted(n);
        residual_bogomolny_restricted(&w, &m.v, &m.params, Branch::Minus).unwrap().max_abs_masked(&reg.interior)
    };
    let (a, b) = (res(257), res(513));
    let q = order(a, b);
    let passed = ode_err < 1e-6 && (edge - 2.0).abs() < 1e-6 && (q - 2.0).abs() <= 0.3;
    outcome(
        passed,
        format!("ODE error {ode_err:.3e}, edge {edge:.9}, residual {a:.3e} -> {b:.3e}, order {q:.3} (2.0 +- 0.3)"),
    )
}

fn c3_el_from_bps(m: &Manufactured) -> Outcome {
    let el = |n: usize| {
        let (w, reg) = m.lifted(n);
        el_residual_restricted(&w, &m.v, &m.params).max_abs_masked(&reg.interior)
    };
    let norms: Vec<f64> = [129, 257, 513].iter().map(|&n| el(n)).collect();
    let ratios: Vec<f64> = norms.windows(2).map(|w| w[0] / w[1]).collect();
    let passed = ratios.iter().all(|r| (r / 4.0 - 1.0).abs() <= 0.15);
    outcome(passed, format!("EL norms {}, ratios {ratios:.3?} (4 +- 15%)", sci(&norms)))
}

fn c4_dual_closure(m: &Manufactured) -> Outcome {
    let (w, reg) = m.lifted(513);
    let d = dual_residuals_restricted(&w, &m.v, &m.params, Branch::Minus).unwrap();
    let norms: Vec<f64> = d.iter().take(6).map(|f| f.max_abs_masked(&reg.interior)).collect();
    let worst = norms.iter().copied().fold(0.0, f64::max);
    outcome(worst < 1e-6, format!("six residual norms {}, max {worst:.3e} (limit 1e-6)", sci(&norms)))
}

fn compacton_charge(n: i32) -> f64 {
    let v = builtin_potential("old_baby", &[1.0]).unwrap();
    let params = ModelParams::restricted(1.0).unwrap();
    let p = solve_profile(&v, &params, n, Branch::Minus, 1e6, 20.0, 1e-10).unwrap();
    let g = Grid2D::centered_square(1025, 1.2 * p.edge.unwrap()).unwrap();
    topological_charge(&profile_to_field(&p, g, (0.0, 0.0)))
}

fn c5_charge() -> Outcome {
    let q1 = compacton_charge(1);
    let q2 = compacton_charge(2);
    let g = Grid2D::centered_square(401, 20.0).unwrap();
    let zbar = antiholomorphic_field(g, 1.0, (0.0, 0.0));
    let disc: Vec<bool> = (0..g.len())
        .map(|i| {
            let (x, y) = g.position(i);
            x.hypot(y) <= 20.0
        })
        .collect();
    let qz = topological_charge_masked(&zbar, &disc);
    let passed = (q1 - 1.0).abs() < 1e-3 && (q2 - 2.0).abs() < 1e-3 && (qz - 1.0).abs() < 0.02;
    outcome(passed, format!("Q(n=1) = {q1:.6}, Q(n=2) = {q2:.6}, Q(zbar, R=20) = {qz:.6}"))
}

fn c6_saturation(m: &Manufactured) -> Outcome {
    let (w, reg) = m.lifted(513);
    let quad = reg.quadrature();
    let s = saturation_check(&w, &m.v, &m.params, &quad, &reg.interior).unwrap();
    let rel = (s.energy - s.crossterm).abs() / s.energy;

    let g = w.grid();
    let interp = m.profile.interpolant();
    let scaled = ComplexField2D::from_fn(g, |x, y| {
        let f = interp.eval(2.0 * x.hypot(y));
        if f == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            f * Complex64::from_polar(1.0, y.atan2(x))
        }
    });
    let half_core: Vec<bool> = (0..g.len())
        .map(|i| {
            let (x, y) = g.position(i);
            x.hypot(y) >= 0.5 * reg.core_radius
        })
        .collect();
    let t = saturation_check(&scaled, &m.v, &m.params, &half_core, &half_core).unwrap();
    let gap = (t.energy - t.crossterm) / t.energy;
    let passed = rel < 1e-3 && s.equipartition_defect < 1e-4 && gap > 0.01;
    outcome(
        passed,
        format!(
            "|E-CT|/E = {rel:.3e}, equipartition {:.3e} (limit 1e-4), scaled (E-CT)/E = {gap:.3} (E/CT = {:.3})",
            s.equipartition_defect,
            t.energy / t.crossterm
        ),
    )
}

/// `V = lambda2 * 81 c^(4/3) rho^(4/3) / (1+rho)^4`, the potential for which
/// `omega = c zbar^3` saturates the bound.
fn cubic_potential(c: f64, l2: f64) -> PotentialSpec {
    let k = l2 * 81.0 * c.powf(4.0 / 3.0);
    let f = UvFunction::from_fns(
        move |u, v| {
            let rho: f64 = u * u + v * v;
            k * rho.powf(4.0 / 3.0) / (1.0 + rho).powi(4)
        },
        move |u, v| {
            let rho: f64 = u * u + v * v;
            let d = 1.0 + rho;
            let dr = k * ((4.0 / 3.0) * rho.cbrt() / d.powi(4) - 4.0 * rho.powf(4.0 / 3.0) / d.powi(5));
            (2.0 * u * dr, 2.0 * v * dr)
        },
    );
    PotentialSpec::new("cubic", f, vec![(0.0, 0.0)])
}

fn c7_full_chain() -> Outcome {
    let (l1, l2) = (1.0, 16.0);
    let params = ModelParams::full(l1, l2).unwrap();
    let tol = 1e-12;
    let mut r23 = 0.0_f64;
    let mut nodal = 0.0_f64;
    let mut el_linear = Vec::new();
    for n in [65, 129] {
        let g = Grid2D::centered_square(n, 1.0).unwrap();
        let w0 = antiholomorphic_field(g, 1.0, (0.0, 0.0));
        let h2 = HarmonicData::from_spec("const:2.5", probe_grid_for(&w0, 21).unwrap()).unwrap();
        let sol = solve_full_bps(&h2, &params, &w0, &SolverOptions::new(10, tol)).unwrap();
        r23 = r23.max(sol.residual_norms[1]).max(sol.residual_norms[2]);
        let g1 = induced_g1(&sol.w, &params);
        for i in 0..g.len() {
            let (u, v) = (sol.w.u.values[i], sol.w.v.values[i]);
            let d = 1.0 + u * u + v * v;
            nodal = nodal.max((g1.values[i] - 2.0 * l2 / d.powi(4)).abs());
            nodal = nodal.max((sol.v_constructed.eval(u, v) - l2 / d.powi(4)).abs());
        }
        let reg = Region::interior(&g, 1);
        let (eu, ev) = el_residual_full(&sol.w, &sol.v_constructed, &params);
        el_linear.push(eu.max_abs_masked(&reg.interior).max(ev.max_abs_masked(&reg.interior)));
    }
    let linear_exact = el_linear.iter().all(|e| *e < 1e-9);

    let c = 0.5;
    let v = cubic_potential(c, l2);
    let el_cubic: Vec<f64> = [65, 129, 257]
        .iter()
        .map(|&n| {
            let g = Grid2D::centered_square(n, 1.0).unwrap();
            let w = ComplexField2D::from_fn(g, |x, y| c * Complex64::new(x, -y).powi(3));
            let reg = Region::interior(&g, 1);
            let (eu, ev) = el_residual_full(&w, &v, &params);
            eu.max_abs_masked(&reg.interior).max(ev.max_abs_masked(&reg.interior))
        })
        .collect();
    let orders: Vec<f64> = el_cubic.windows(2).map(|w| order(w[0], w[1])).collect();
    let order_ok = orders.iter().all(|q| (q - 2.0).abs() <= 0.3);
    let passed = r23 < 1e-12 && nodal < 1e-10 && linear_exact && order_ok;
    outcome(
        passed,
        format!(
            "max(R2,R3) = {r23:.3e}, nodal g1/V defect {nodal:.3e}, EL(linear) {} (round-off, order undefined), \
             EL(c zbar^3) {} orders {orders:.3?} (2.0 +- 0.3)",
            sci(&el_linear),
            sci(&el_cubic)
        ),
    )
}

fn c8_harmonic_gatekeeping() -> Outcome {
    let probe = Grid2D::centered_square(21, 2.0).unwrap();
    let ok = HarmonicData::from_spec("u2-v2", probe).unwrap();
    let accepted = ok.ensure_harmonic().is_ok() && ok.laplace_residual < 1e-10;
    let direct = check_harmonic(&Poly2::new(vec![(2, 0, 1.0)]), &probe);
    let rejected = match HarmonicData::from_spec("u2", probe).unwrap().ensure_harmonic() {
        Err(Error::NotHarmonic { residual, .. }) => Some(residual),
        _ => None,
    };
    let passed = accepted && rejected.is_some_and(|r| (r - 2.0).abs() <= 1e-8) && (direct - 2.0).abs() <= 1e-8;
    outcome(
        passed,
        format!("u2-v2 residual {:.3e}, u2 rejected with residual {rejected:?}", ok.laplace_residual),
    )
}

fn c9_subset_property() -> Outcome {
    let mut converged = 0;
    let mut failures = Vec::new();
    let mut skipped = 0;
    let cases: [(&str, f64, f64, f64); 5] = [
        ("const:1", 1.0, 16.0, 0.0),
        ("const:-3", 2.0, 8.0, 0.0),
        ("zero", 1.0, 16.0, 1e-2),
        ("const:0.5", 0.5, 4.0, 1e-2),
        ("poly:0,0.2", 4.0, 16.0, 0.0),
    ];
    for (k, &(h2, l1, l2, noise)) in cases.iter().enumerate() {
        let params = ModelParams::full(l1, l2).unwrap();
        let g = Grid2D::centered_square(33, 1.0).unwrap();
        let mut w = antiholomorphic_field(g, 1.0, (0.0, 0.0));
        let mut rng = StdRng::seed_from_u64(k as u64);
        for i in 0..g.len() {
            if !g.is_boundary(i) {
                w.u.values[i] += noise * rng.random_range(-1.0..1.0);
                w.v.values[i] += noise * rng.random_range(-1.0..1.0);
            }
        }
        let h = HarmonicData::from_spec(h2, probe_grid_for(&w, 21).unwrap()).unwrap();
        let tol = 1e-10;
        let sol = solve_full_bps(&h, &params, &w, &SolverOptions::new(30, tol)).unwrap();
        let s = subset_check(&sol, &params, tol).unwrap();
        match s.passed {
            Some(true) => converged += 1,
            Some(false) => failures.push(format!("{h2}: {:.3e} > {:.3e}", s.restricted_norm, s.r1_norm)),
            None => skipped += 1,
        }
    }
    let passed = failures.is_empty() && converged > 0;
    outcome(
        passed,
        format!("{converged} converged solutions pass, {skipped} non-converged excluded, failures {failures:?}"),
    )
}

fn run_cli(dir: &Path, prefix: &str, threads: usize, args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_bps"))
        .current_dir(dir)
        .args(["--quiet", "--threads", &threads.to_string(), "--out", prefix])
        .args(args)
        .output()
        .expect("bps runs");
    assert!(out.status.code().is_some_and(|c| c == 0 || c == 2), "{}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

fn c10_reproducibility() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"potential": {"name": "bps_test", "params": [1, 1], "sigma": -1},
            "solver": {"n": 1, "f0": 1, "rmax": 2.5, "tol": 1e-10, "h2": "const:1", "iters": 20},
            "grid": {"nx": 129}}"#,
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap();
    let runs: [(&str, &[&str], &[&str]); 3] = [
        ("restricted", &["solve-restricted"], &[".profile.csv", ".field.csv", ".report.json"]),
        ("full", &["solve-full", "--grid", "33,33,0.0625,0.0625"], &[".field.csv", ".g1.csv", ".potential.csv", ".report.json"]),
        ("sweep", &["sweep", "--param", "f0", "--values", "0.5,1,2"], &[".sweep.csv"]),
    ];
    let mut mismatches = Vec::new();
    let mut compared = 0;
    for (name, args, suffixes) in runs {
        let mut all: Vec<&str> = vec!["--config", cfg];
        all.extend_from_slice(args);
        let tags = [("a", 1), ("b", 1), ("c", 4)];
        for (tag, threads) in tags {
            run_cli(dir.path(), &format!("{name}_{tag}"), threads, &all);
        }
        for s in suffixes {
            let read = |tag: &str| std::fs::read(dir.path().join(format!("{name}_{tag}{s}"))).unwrap();
            let base = read("a");
            for tag in ["b", "c"] {
                compared += 1;
                if read(tag) != base {
                    mismatches.push(format!("{name}{s} ({tag})"));
                }
            }
        }
    }
    outcome(mismatches.is_empty(), format!("{compared} artifact pairs compared, mismatches {mismatches:?}"))
}

fn main() {
    let m = manufactured();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("stereographic round-trip", Box::new(c1_stereographic_round_trip)),
        ("manufactured BPS solution", Box::new(|| c2_manufactured_solution(&m))),
        ("EL from BPS", Box::new(|| c3_el_from_bps(&m))),
        ("dual-equation closure", Box::new(|| c4_dual_closure(&m))),
        ("topological charge quantization", Box::new(c5_charge)),
        ("BPS saturation", Box::new(|| c6_saturation(&m))),
        ("full-model anti-holomorphic chain", Box::new(c7_full_chain)),
        ("harmonic gatekeeping", Box::new(c8_harmonic_gatekeeping)),
        ("subset property", Box::new(c9_subset_property)),
        ("reproducibility", Box::new(c10_reproducibility)),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = run();
        if !o.passed {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<34} {} [{:.2}s] {}",
            k + 1,
            name,
            if o.passed { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
