use std::fs;
use std::path::Path;

use pff_core::evolution::{prepare_initial_state, run_evolution};
use pff_core::io::config::{Preset, RunConfig};
use pff_core::io::tables::{read_displacement_dump, read_phase_dump, read_sweep, SWEEP_HEADER};
use pff_core::io::vtk::read_vtk_summary;
use pff_core::io::{self, audit_dir, read_trace, TRACE_HEADER};
use pff_core::viscosity::{delta_sweep, StepRule, SweepOptions};
use pff_core::Trajectory;

fn small_run(preset: Preset) -> (RunConfig, pff_core::io::Setup, Trajectory) {
    let mut cfg = RunConfig::preset(preset, 5, 6, 0.1);
    cfg.output.vtk_every = 2;
    let setup = cfg.setup().unwrap();
    let init = prepare_initial_state(&setup.model, &setup.evolution, &setup.z_seed).unwrap();
    let traj = run_evolution(&setup.model, &setup.evolution, init).unwrap();
    (cfg, setup, traj)
}

fn write(dir: &Path, preset: Preset) -> Trajectory {
    let (cfg, setup, traj) = small_run(preset);
    io::write_run(dir, &cfg, &setup.model.mesh, &traj, cfg.output.vtk_every).unwrap();
    traj
}

#[test]
fn trace_header_and_rows_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let traj = write(tmp.path(), Preset::Tension);
    let text = fs::read_to_string(tmp.path().join(io::TRACE_FILE)).unwrap();
    assert_eq!(text.lines().next().unwrap(), TRACE_HEADER);
    let rows = read_trace(tmp.path().join(io::TRACE_FILE)).unwrap();
    assert_eq!(rows.len(), traj.records.len());
    for (row, rec) in rows.iter().zip(&traj.records) {
        assert_eq!(row.step, rec.step);
        assert_eq!(row.f, rec.energy.total);
        assert_eq!(row.slope, rec.slope);
        assert_eq!(row.cum_arc_len, rec.cum_arc_length);
    }
}

#[test]
fn state_dumps_are_bit_exact() {
    let tmp = tempfile::tempdir().unwrap();
    let traj = write(tmp.path(), Preset::Shear);
    let z = read_phase_dump(tmp.path().join(io::PHASE_FILE)).unwrap();
    let u = read_displacement_dump(tmp.path().join(io::DISPLACEMENT_FILE)).unwrap();
    for (i, st) in traj.states.iter().enumerate() {
        assert_eq!(z[i], st.z);
        assert_eq!(u[i], st.u);
    }
}

#[test]
fn vtk_snapshots_carry_a_phase_field_in_the_unit_interval() {
    let tmp = tempfile::tempdir().unwrap();
    let traj = write(tmp.path(), Preset::Tension);
    let snaps: Vec<_> = (0..traj.states.len()).filter(|i| i % 2 == 0 || *i == traj.states.len() - 1).collect();
    for i in snaps {
        let s = read_vtk_summary(tmp.path().join(format!("state_{i:05}.vtk"))).unwrap();
        assert_eq!(s.points, 36);
        assert_eq!(s.cells, 50);
        assert!(s.phase.iter().all(|z| (0.0..=1.0).contains(z)));
        assert_eq!(s.phase, traj.states[i].z);
    }
    assert!(!tmp.path().join("state_00001.vtk").exists());
}

#[test]
fn written_runs_pass_the_audit() {
    for preset in [Preset::Tension, Preset::Shear] {
        let tmp = tempfile::tempdir().unwrap();
        write(tmp.path(), preset);
        let rep = audit_dir(tmp.path()).unwrap();
        assert!(rep.ok(), "{:?}", rep.violations);
        assert_eq!(rep.steps, 6);
        assert!(rep.max_equilibrium_residual <= 1e-9);
    }
}

#[test]
fn audit_flags_a_tampered_energy_column() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), Preset::Tension);
    let path = tmp.path().join(io::TRACE_FILE);
    let text = fs::read_to_string(&path).unwrap();
    let lines: Vec<String> = text
        .lines()
        .enumerate()
        .map(|(i, l)| {
            if i == 3 {
                let mut cols: Vec<String> = l.split(',').map(str::to_owned).collect();
                let f: f64 = cols[2].parse().unwrap();
                cols[2] = format!("{:.16e}", f * 1.01);
                cols.join(",")
            } else {
                l.to_owned()
            }
        })
        .collect();
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    let rep = audit_dir(tmp.path()).unwrap();
    assert!(rep.violations.iter().any(|v| v.step == 2 && v.message.contains("energy")), "{:?}", rep.violations);
}

#[test]
fn audit_reports_missing_files_as_io_errors() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), Preset::Shear);
    fs::remove_file(tmp.path().join(io::PHASE_FILE)).unwrap();
    let err = audit_dir(tmp.path()).unwrap_err();
    assert!(matches!(err, pff_core::Error::Io { .. }), "{err}");
}

#[test]
fn sweep_outputs_have_the_expected_schema() {
    let cfg = RunConfig::preset(Preset::Shear, 4, 5, 0.2);
    let setup = cfg.setup().unwrap();
    let init = prepare_initial_state(&setup.model, &setup.evolution, &setup.z_seed).unwrap();
    let mut opts = SweepOptions::new(vec![0.2, 0.1]);
    opts.step_rule = StepRule::TauOverDelta(0.5);
    opts.grid_intervals = 100;
    let rep = delta_sweep(&setup.model, &setup.evolution, &opts, init).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let files = io::write_sweep_outputs(tmp.path(), &rep).unwrap();
    assert_eq!(files.len(), 5);
    let text = fs::read_to_string(tmp.path().join(io::SWEEP_FILE)).unwrap();
    assert_eq!(text.lines().next().unwrap(), SWEEP_HEADER);
    let rows = read_sweep(tmp.path().join(io::SWEEP_FILE)).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][0], 0.2);
    assert!(rows[0][4].is_finite() && rows[1][4].is_nan());
    let reparam = fs::read_to_string(tmp.path().join("reparam_delta_1.csv")).unwrap();
    let s: Vec<f64> = reparam.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(s.len(), 101);
    assert!(s.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn config_snapshot_reloads_to_the_same_config() {
    let tmp = tempfile::tempdir().unwrap();
    let (cfg, _, _) = small_run(Preset::Shear);
    let text = cfg.to_toml();
    let back = RunConfig::parse(&text, "snapshot").unwrap();
    assert_eq!(back, cfg);
    let path = tmp.path().join("c.toml");
    fs::write(&path, text).unwrap();
    assert_eq!(RunConfig::load(&path).unwrap(), cfg);
}
