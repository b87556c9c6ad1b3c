//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pff_core::evolution::{energy_inequality_report, prepare_initial_state, run_evolution};
use pff_core::io::config::{Preset, RunConfig};
use pff_core::io::{self, tables};
use pff_core::oracle::{self, equilibrium_residual, OracleVerdict};
use pff_core::viscosity::{delta_sweep, reparametrize_on_grid, StepRule, SweepOptions};
use pff_core::{MaterialModel, Model, SymTensor2, Trajectory};

const SEED: u64 = 20240611;

// tolerances
const TENSOR_TOL: f64 = 1e-12;
const SAMPLES: usize = 10_000;
const GRADIENT_TOL: f64 = 1e-6;
const GRADIENT_STATES: usize = 20;
const SLOPE_TOL: f64 = 1e-8;
const SLOPE_INSTANCES: usize = 60;
const IDENTITY_TOL: f64 = 1e-6;
const EQUILIBRIUM_TOL: f64 = 1e-9;
const INCREMENT_DROP: f64 = 1.5;
const ODE_TOL: f64 = 1e-6;
const NORMALIZATION_TOL: f64 = 1e-10;
const ARC_SPREAD: f64 = 2.0;
const SLOPE_NOISE: f64 = 1.10;
const PROBE_TOL: f64 = 1e-8;

// benchmark setup
const MESH_CELLS: usize = 16;
const STEPS: usize = 50;
const DELTA: f64 = 0.05;
const SWEEP_DELTAS: [f64; 3] = [0.1, 0.05, 0.025];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

struct PresetRun {
    name: &'static str,
    model: Model,
    traj: Trajectory,
}

fn run_preset(preset: Preset, name: &'static str, steps: usize) -> PresetRun {
    let setup = RunConfig::preset(preset, MESH_CELLS, steps, DELTA).setup().expect("preset");
    let init = prepare_initial_state(&setup.model, &setup.evolution, &setup.z_seed).expect("initial state");
    let traj = run_evolution(&setup.model, &setup.evolution, init).expect("preset run");
    PresetRun { name, model: setup.model, traj }
}

fn random_tensor(rng: &mut ChaCha8Rng) -> SymTensor2 {
    SymTensor2::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0))
}

fn c1_tensor_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for _ in 0..SAMPLES {
        let e = random_tensor(&mut rng);
        let (v, d) = e.vol_dev_split();
        let (p, m) = e.tensile_compressive();
        let errs = [
            v.ddot(&d).abs(),
            (e.norm_sq() - v.norm_sq() - d.norm_sq()).abs(),
            (v + d - e).norm(),
            p.ddot(&m).abs(),
            (v.norm_sq() - p.norm_sq() - m.norm_sq()).abs(),
            (p - m - v).norm(),
        ];
        worst = errs.iter().copied().fold(worst, f64::max);
    }
    outcome(worst <= TENSOR_TOL, format!("{SAMPLES} tensors, max abs err {worst:.2e} (tol {TENSOR_TOL:.0e})"))
}

fn c2_structural_inequalities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let materials = [
        MaterialModel::standard(1.0, 1.5, 0.01).unwrap(),
        MaterialModel::standard(0.3, 4.0, 0.1).unwrap(),
        MaterialModel::standard(5.0, 0.5, 0.001).unwrap(),
    ];
    let mut violations = 0;
    let mut min_mono = f64::INFINITY;
    let mut max_lip = 0.0f64;
    for k in 0..SAMPLES {
        let mat = &materials[k % materials.len()];
        let (h0, h1) = (mat.h.value(0.0), mat.h.value(1.0));
        let c = (2.0 * mat.mu * h0).min(mat.kappa * h0.min(1.0));
        let big = 2.0 * mat.mu.max(mat.kappa) * h1.max(1.0);
        let z = rng.random_range(0.0..=1.0);
        let (a, b) = (random_tensor(&mut rng), random_tensor(&mut rng));
        let d = a - b;
        let ds = mat.stress(z, &a) - mat.stress(z, &b);
        let mono = ds.ddot(&d) / d.norm_sq();
        let lip = ds.norm() / d.norm();
        let growth = mat.stress(z, &a).norm() / a.norm();
        min_mono = min_mono.min(mono / c);
        max_lip = max_lip.max(lip / big).max(growth / big);
        let slack = 1e-12;
        if mono < c * (1.0 - slack) || lip > big * (1.0 + slack) || growth > big * (1.0 + slack) {
            violations += 1;
        }
    }
    outcome(
        violations == 0,
        format!(
            "{SAMPLES} samples, {violations} violations; min monotonicity ratio {min_mono:.3}, max Lipschitz ratio {max_lip:.3}"
        ),
    )
}

fn verdict_outcome(verdicts: &[OracleVerdict], tol: f64) -> Outcome {
    let failed: Vec<&OracleVerdict> = verdicts.iter().filter(|v| !(v.pass && v.err <= tol)).collect();
    let worst = verdicts.iter().map(|v| v.err).fold(0.0, f64::max);
    let names: Vec<&str> = failed.iter().map(|v| v.name.as_str()).collect();
    outcome(
        failed.is_empty(),
        format!("{} checks, worst err {worst:.2e} (tol {tol:.0e}){}", verdicts.len(), if names.is_empty() {
            String::new()
        } else {
            format!("; failed: {}", names.join(" "))
        }),
    )
}

fn c3_gradients() -> Outcome {
    let mat = MaterialModel::standard(1.0, 1.5, 0.01).unwrap();
    verdict_outcome(&oracle::gradient_checks(&mat, GRADIENT_STATES, SEED + 2), GRADIENT_TOL)
}

fn c4_slope() -> Outcome {
    match oracle::slope_checks(SLOPE_INSTANCES, SEED + 3) {
        Ok(v) => verdict_outcome(&v, SLOPE_TOL),
        Err(e) => outcome(false, e.to_string()),
    }
}

fn c5_identities(runs: &[PresetRun]) -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for r in runs {
        let steps = &r.traj.records[1..];
        let id = steps.iter().map(|s| s.slope_identity_rel_err).fold(0.0, f64::max);
        let al = steps.iter().map(|s| s.alignment_rel_err).fold(0.0, f64::max);
        let min_slope = steps.iter().map(|s| s.slope).fold(f64::INFINITY, f64::min);
        pass &= id <= IDENTITY_TOL && al <= IDENTITY_TOL;
        parts.push(format!("{}: slope {id:.2e}, alignment {al:.2e}, min slope {min_slope:.2e}", r.name));
    }
    outcome(pass, format!("{} (tol {IDENTITY_TOL:.0e})", parts.join("; ")))
}

fn c6_certificates(runs: &[PresetRun]) -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for r in runs {
        let irr = r.traj.irreversibility_violation();
        // recomputed independently of the solver's bookkeeping
        let eq = r
            .traj
            .states
            .iter()
            .map(|s| equilibrium_residual(&r.model, &s.u, &s.z))
            .fold(0.0, f64::max);
        pass &= irr.is_none() && eq <= EQUILIBRIUM_TOL;
        parts.push(format!(
            "{}: irreversibility {}, max residual {eq:.2e}",
            r.name,
            irr.map_or("exact".into(), |(s, n)| format!("violated at step {s} node {n}"))
        ));
    }
    outcome(pass, format!("{} (tol {EQUILIBRIUM_TOL:.0e})", parts.join("; ")))
}

fn c7_energy_inequality(runs: &[PresetRun], shear_fine: &PresetRun) -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for r in runs {
        let rep = energy_inequality_report(&r.traj);
        let v = rep.violations();
        pass &= v.is_empty() && rep.c_r.is_finite();
        parts.push(format!(
            "{}: C_R {:.3e}, min slack {:.2e} (raw {:.2e}), {} violations",
            r.name,
            rep.c_r,
            rep.min_slack_fitted(),
            rep.min_slack_raw(),
            v.len()
        ));
    }
    let coarse = runs.iter().find(|r| r.name == "shear").expect("shear run");
    let a = energy_inequality_report(&coarse.traj).total_increment_sum;
    let b = energy_inequality_report(&shear_fine.traj).total_increment_sum;
    let drop = a / b;
    pass &= drop >= INCREMENT_DROP;
    parts.push(format!("shear increment sum k={STEPS} {a:.3e} -> k={} {b:.3e}, drop {drop:.2}x (need {INCREMENT_DROP}x)", 2 * STEPS));
    outcome(pass, parts.join("; "))
}

fn c8_ode(runs: &[PresetRun]) -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for r in runs {
        let d = r.traj.config.delta;
        let err = r.traj.records[1..]
            .iter()
            .map(|s| (d * s.rate_l2 - s.slope).abs() / (1.0 + s.slope))
            .fold(0.0, f64::max);
        pass &= err <= ODE_TOL;
        parts.push(format!("{}: {err:.2e}", r.name));
    }
    outcome(pass, format!("{} (tol {ODE_TOL:.0e})", parts.join("; ")))
}

fn c9_reparametrization(runs: &[PresetRun]) -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for r in runs {
        let s = r.traj.config.horizon + r.traj.total_arc_length();
        let rt = match reparametrize_on_grid(&r.model, &r.traj, 1.25 * s, 2000) {
            Ok(rt) => rt,
            Err(e) => return outcome(false, e.to_string()),
        };
        let norm = rt.knot_normalization_errors(&r.model).into_iter().fold(0.0, f64::max);
        let inc = rt.knots_strictly_increasing();
        let ext = rt.constant_extension_exact();
        let extended = rt.grid.iter().filter(|p| p.interval.is_none()).count();
        pass &= norm <= NORMALIZATION_TOL && inc && ext && extended > 0;
        parts.push(format!(
            "{}: normalization {norm:.2e}, strictly increasing {inc}, constant extension exact {ext} ({extended} points)",
            r.name
        ));
    }
    outcome(pass, format!("{} (tol {NORMALIZATION_TOL:.0e})", parts.join("; ")))
}

fn shear_sweep(cells: usize) -> pff_core::Result<pff_core::viscosity::SweepReport> {
    let setup = RunConfig::preset(Preset::Shear, cells, STEPS, SWEEP_DELTAS[0]).setup()?;
    let init = prepare_initial_state(&setup.model, &setup.evolution, &setup.z_seed)?;
    let mut opts = SweepOptions::new(SWEEP_DELTAS.to_vec());
    opts.step_rule = StepRule::TauOverDelta(0.5);
    delta_sweep(&setup.model, &setup.evolution, &opts, init)
}

fn c10_sweep() -> Outcome {
    let rep = match shear_sweep(MESH_CELLS) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let spread = rep.arc_length_spread();
    let slopes: Vec<f64> = rep.rows.iter().map(|r| r.max_advancing_slope).collect();
    let monotone = slopes.windows(2).all(|w| w[1] <= SLOPE_NOISE * w[0]);
    let s: Vec<String> = rep.rows.iter().map(|r| format!("{:.4}", r.arc_length)).collect();
    let sl: Vec<String> = slopes.iter().map(|x| format!("{x:.3e}")).collect();
    outcome(
        spread < ARC_SPREAD && monotone,
        format!(
            "S = [{}], spread {spread:.4} (< {ARC_SPREAD}); max advancing slope [{}], nonincreasing within {:.0}%: {monotone}",
            s.join(", "),
            sl.join(", "),
            (SLOPE_NOISE - 1.0) * 100.0
        ),
    )
}

fn c11_fixed_points() -> Outcome {
    let mut verdicts = Vec::new();
    for k in 0..3 {
        match oracle::fixed_point_checks(SEED + 10 + k) {
            Ok(v) => verdicts.extend(v),
            Err(e) => return outcome(false, e.to_string()),
        }
    }
    verdict_outcome(&verdicts, PROBE_TOL)
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .expect("output dir")
        .map(|e| e.expect("entry").path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

fn c12_determinism() -> Outcome {
    let tmp = tempfile::tempdir().expect("tempdir");
    let cfg = RunConfig::preset(Preset::Tension, 8, 20, DELTA);
    let mut runs = Vec::new();
    for k in 0..2 {
        let dir = tmp.path().join(format!("run{k}"));
        let setup = cfg.setup().expect("setup");
        let init = prepare_initial_state(&setup.model, &setup.evolution, &setup.z_seed).expect("init");
        let traj = run_evolution(&setup.model, &setup.evolution, init).expect("run");
        io::write_run(&dir, &cfg, &setup.model.mesh, &traj, 0).expect("write");
        let sweep = shear_sweep(6).expect("sweep");
        io::write_sweep_outputs(&dir, &sweep).expect("write sweep");
        runs.push(csv_files(&dir));
    }
    let identical = runs[0] == runs[1];
    let bytes: usize = runs[0].iter().map(|(_, b)| b.len()).sum();
    let headers_ok = runs[0]
        .iter()
        .find(|(n, _)| n == io::TRACE_FILE)
        .is_some_and(|(_, b)| b.starts_with(tables::TRACE_HEADER.as_bytes()));
    outcome(
        identical && headers_ok && runs[0].len() >= 10,
        format!("{} CSV files ({bytes} bytes) compared, bit-identical: {identical}", runs[0].len()),
    )
}

fn main() {
    let t0 = Instant::now();
    let runs = vec![
        run_preset(Preset::Tension, "tension", STEPS),
        run_preset(Preset::Shear, "shear", STEPS),
    ];
    let shear_fine = run_preset(Preset::Shear, "shear", 2 * STEPS);
    let results: Vec<(usize, &str, Outcome)> = vec![
        (1, "tensor identities", c1_tensor_identities()),
        (2, "monotonicity/Lipschitz/growth of the stress", c2_structural_inequalities()),
        (3, "gradient oracles", c3_gradients()),
        (4, "slope closed form vs QP", c4_slope()),
        (5, "slope and alignment identities", c5_identities(&runs)),
        (6, "irreversibility and equilibrium", c6_certificates(&runs)),
        (7, "discrete energy inequality", c7_energy_inequality(&runs, &shear_fine)),
        (8, "viscous rate identity", c8_ode(&runs)),
        (9, "arc-length reparametrization", c9_reparametrization(&runs)),
        (10, "viscosity sweep", c10_sweep()),
        (11, "joint fixed points", c11_fixed_points()),
        (12, "determinism", c12_determinism()),
    ];
    let mut failed = 0;
    for (n, name, o) in &results {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] criterion {n:2} {name}: {}", o.detail);
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {}/{} criteria passed in {:.1}s",
        results.len() - failed,
        results.len(),
        t0.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
