//! Configuration, output files and the post-hoc audit of a run directory.

pub mod audit;
pub mod config;
pub mod tables;
pub mod vtk;

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::evolution::{energy_inequality_report, Trajectory};
use crate::mesh::TriMesh;
use crate::viscosity::SweepReport;

pub use audit::{audit_dir, AuditReport, Violation};
pub use config::{Preset, RunConfig, Setup};
pub use tables::{read_trace, write_trace, TraceRow, TRACE_HEADER};
pub use vtk::write_vtk;

pub const CONFIG_FILE: &str = "config.toml";
pub const MESH_FILE: &str = "mesh.txt";
pub const TRACE_FILE: &str = "trace.csv";
pub const PHASE_FILE: &str = "phase.csv";
pub const DISPLACEMENT_FILE: &str = "displacement.csv";
pub const INEQUALITY_FILE: &str = "energy_inequality.csv";
pub const SWEEP_FILE: &str = "sweep.csv";

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes the config snapshot, mesh, trace, state dumps, energy-inequality table and VTK
/// snapshots (`every` steps, plus the final state) of one trajectory into `dir`.
pub fn write_run(dir: &Path, cfg: &RunConfig, mesh: &TriMesh, traj: &Trajectory, every: usize) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut written = Vec::new();
    let mut put = |name: &str| {
        let p = dir.join(name);
        written.push(p.clone());
        p
    };
    let p = put(CONFIG_FILE);
    std::fs::write(&p, cfg.to_toml()).map_err(|e| Error::io(&p, e))?;
    mesh.write(put(MESH_FILE))?;
    tables::write_trace(put(TRACE_FILE), &traj.records)?;
    tables::write_phase_dump(put(PHASE_FILE), &traj.states)?;
    tables::write_displacement_dump(put(DISPLACEMENT_FILE), &traj.states)?;
    tables::write_inequality(put(INEQUALITY_FILE), &energy_inequality_report(traj))?;
    let last = traj.states.len() - 1;
    for (i, st) in traj.states.iter().enumerate() {
        if i == last || (every > 0 && i % every == 0) {
            vtk::write_vtk(put(&format!("state_{i:05}.vtk")), mesh, &st.u, &st.z)?;
        }
    }
    Ok(written)
}

/// Writes `sweep.csv` plus, per δ (indexed in sweep order), the trace and the
/// reparametrized curve.
pub fn write_sweep_outputs(dir: &Path, report: &SweepReport) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut written = vec![dir.join(SWEEP_FILE)];
    tables::write_sweep(&written[0], report)?;
    for (j, (traj, rt)) in report.trajectories.iter().zip(&report.curves).enumerate() {
        let p = dir.join(format!("trace_delta_{j}.csv"));
        tables::write_trace(&p, &traj.records)?;
        written.push(p);
        let p = dir.join(format!("reparam_delta_{j}.csv"));
        tables::write_reparam(&p, rt)?;
        written.push(p);
    }
    Ok(written)
}
