//! Re-audits a run directory from its files alone.

use std::fmt;
use std::path::Path;

use super::config::RunConfig;
use super::tables::{read_displacement_dump, read_phase_dump, read_trace, TraceRow};
use super::{CONFIG_FILE, DISPLACEMENT_FILE, MESH_FILE, PHASE_FILE, TRACE_FILE};
use crate::energy::Model;
use crate::error::Result;
use crate::fem::diff;
use crate::mesh::TriMesh;

/// Relative tolerance for the per-step identities.
pub const IDENTITY_TOL: f64 = 1e-6;
/// Relative tolerance for recomputed energies and arc lengths against the trace.
pub const CONSISTENCY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub step: usize,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "step {}: {}", self.step, self.message)
    }
}

#[derive(Debug, Clone, Default)]
pub struct AuditReport {
    pub steps: usize,
    pub violations: Vec<Violation>,
    pub max_equilibrium_residual: f64,
    pub max_identity_err: f64,
    pub max_ode_err: f64,
    /// Fitted remainder constant of the energy inequality.
    pub c_r: f64,
    pub min_slack_raw: f64,
    pub min_phase: f64,
}

impl AuditReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn flag(&mut self, step: usize, message: String) {
        self.violations.push(Violation { step, message });
    }
}

/// Loads `config.toml`, `mesh.txt`, the trace and the state dumps from `dir` and audits them.
pub fn audit_dir(dir: &Path) -> Result<AuditReport> {
    let cfg = RunConfig::load(dir.join(CONFIG_FILE))?;
    let mesh = TriMesh::read(dir.join(MESH_FILE))?;
    let trace = read_trace(dir.join(TRACE_FILE))?;
    let phases = read_phase_dump(dir.join(PHASE_FILE))?;
    let disps = read_displacement_dump(dir.join(DISPLACEMENT_FILE))?;
    let model = Model::new(mesh, cfg.material_model()?);
    Ok(audit(&cfg, &model, &trace, &phases, &disps))
}

/// Checks irreversibility, equilibrium, the per-step identities, trace/state consistency
/// and the discrete energy inequality (with a fitted remainder constant).
pub fn audit(cfg: &RunConfig, model: &Model, trace: &[TraceRow], phases: &[Vec<f64>], disps: &[Vec<f64>]) -> AuditReport {
    let mut rep = AuditReport {
        steps: trace.len().saturating_sub(1),
        min_phase: f64::INFINITY,
        ..Default::default()
    };
    let k = cfg.time.steps;
    if trace.len() != k + 1 || phases.len() != k + 1 || disps.len() != k + 1 {
        rep.flag(
            trace.len().min(phases.len()).min(disps.len()),
            format!(
                "expected {} states, found trace {}, phase {}, displacement {}",
                k + 1,
                trace.len(),
                phases.len(),
                disps.len()
            ),
        );
        return rep;
    }
    let n = model.num_nodes();
    if let Some(i) = (0..=k).find(|&i| phases[i].len() != n || disps[i].len() != 2 * n) {
        rep.flag(i, "state size does not match the mesh".into());
        return rep;
    }
    let tau = cfg.time.horizon / k as f64;
    let delta = cfg.viscosity.delta;
    let mask = model.mesh.dirichlet_dof_mask();

    for (i, row) in trace.iter().enumerate() {
        if row.step != i {
            rep.flag(i, format!("trace row carries step {}", row.step));
        }
        let (u, z) = (&disps[i], &phases[i]);
        rep.min_phase = z.iter().copied().fold(rep.min_phase, f64::min);
        if i > 0 {
            if let Some(node) = (0..n).find(|&j| z[j] > phases[i - 1][j]) {
                rep.flag(
                    i,
                    format!(
                        "irreversibility violated at node {node}: {} > {}",
                        z[node],
                        phases[i - 1][node]
                    ),
                );
            }
            if !(row.t > trace[i - 1].t) {
                rep.flag(i, "time does not increase".into());
            }
            let arc = trace[i - 1].cum_arc_len + model.mats.h1(&diff(z, &phases[i - 1]));
            if (arc - row.cum_arc_len).abs() > CONSISTENCY_TOL * (1.0 + arc) {
                rep.flag(i, format!("arc length {} disagrees with states ({arc})", row.cum_arc_len));
            }
        }
        let res = model
            .residual_u(u, z)
            .iter()
            .zip(&mask)
            .filter(|(_, &f)| !f)
            .map(|(r, _)| r.abs())
            .fold(0.0, f64::max);
        rep.max_equilibrium_residual = rep.max_equilibrium_residual.max(res);
        if res > cfg.tol.tol_u {
            rep.flag(i, format!("equilibrium residual {res:.3e} exceeds {:.1e}", cfg.tol.tol_u));
        }
        let f = model.total_energy(u, z).total;
        if (f - row.f).abs() > CONSISTENCY_TOL * (1.0 + f.abs()) {
            rep.flag(i, format!("trace energy {} disagrees with state energy {f}", row.f));
        }
        let id = row.slope_id_rel_err.max(row.align_rel_err);
        rep.max_identity_err = rep.max_identity_err.max(id);
        if !(id <= IDENTITY_TOL) {
            rep.flag(i, format!("slope/alignment identity error {id:.3e}"));
        }
        if i > 0 {
            let ode = (delta * row.rate_l2 - row.slope).abs() / (1.0 + row.slope);
            rep.max_ode_err = rep.max_ode_err.max(ode);
            if !(ode <= IDENTITY_TOL) {
                rep.flag(i, format!("viscous rate identity error {ode:.3e}"));
            }
        }
    }

    // energy inequality from the trace columns
    let g_sq = cfg_load_h1_sq(cfg, model) * (cfg.bc.rate * tau).powi(2);
    let f0 = trace[0].f;
    let (mut bound, mut incs) = (f0, 0.0);
    let mut rows = Vec::with_capacity(k + 1);
    for row in trace.iter() {
        if row.step > 0 {
            bound += tau * (row.power - row.slope * row.slope / (2.0 * delta) - 0.5 * delta * row.rate_l2 * row.rate_l2);
            incs += (row.rate_h1 * tau).powi(2) + g_sq;
        }
        rows.push((row.step, bound - row.f, incs));
    }
    let tol = 1e-8 * (1.0 + f0.abs());
    let mut c_r: f64 = 0.0;
    for &(_, slack, inc) in &rows {
        if slack < 0.0 {
            c_r = if inc > 0.0 {
                c_r.max(-slack / inc)
            } else if slack < -tol {
                f64::INFINITY
            } else {
                c_r
            };
        }
    }
    rep.c_r = c_r;
    rep.min_slack_raw = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    for &(step, slack, inc) in &rows {
        let fitted = if c_r.is_finite() { slack + c_r * inc } else { slack };
        if fitted < -tol {
            rep.flag(step, format!("energy inequality slack {fitted:.3e}"));
        }
    }
    rep
}

fn cfg_load_h1_sq(cfg: &RunConfig, model: &Model) -> f64 {
    model.mats.h1_sq_vector(&cfg.load_profile(&model.mesh))
}
