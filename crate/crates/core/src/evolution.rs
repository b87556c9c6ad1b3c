//! Time stepping with the viscously penalized alternate minimization, plus per-step
//! optimality diagnostics and the discrete energy-inequality audit.

use crate::energy::{EnergyReport, Model};
use crate::error::{Error, Result};
use crate::fem::diff;
use crate::solvers::{kkt_report, DisplacementSolver, PhaseSolver, DEFAULT_MAX_NEWTON, DEFAULT_TOL};

/// Dirichlet datum `g(t, x) = rate · t · profile(x)`.
///
/// `profile` is a full nodal vector field; only its Dirichlet values constrain the
/// displacement, the rest is the extension used for `‖g(t) − g(s)‖_{H¹}` and the power.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryLoad {
    pub profile: Vec<f64>,
    pub rate: f64,
}

impl BoundaryLoad {
    pub fn zero(num_nodes: usize) -> Self {
        BoundaryLoad {
            profile: vec![0.0; 2 * num_nodes],
            rate: 0.0,
        }
    }

    pub fn at(&self, t: f64) -> Vec<f64> {
        let s = self.rate * t;
        self.profile.iter().map(|p| s * p).collect()
    }

    /// `(g(t) − g(s)) / (t − s)`; constant in time for a linear ramp.
    pub fn difference_quotient(&self, _t: f64, _s: f64) -> Vec<f64> {
        self.profile.iter().map(|p| self.rate * p).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    /// Inner loop stops when the combined H¹ increment is below
    /// `stag_rel · (1 + ‖z_prev‖_{H¹,h})`.
    pub stag_rel: f64,
    pub tol_u: f64,
    pub tol_z: f64,
    pub max_inner: usize,
    pub max_newton: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            stag_rel: 1e-8,
            tol_u: DEFAULT_TOL,
            tol_z: DEFAULT_TOL,
            max_inner: 1000,
            max_newton: DEFAULT_MAX_NEWTON,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionConfig {
    /// Time horizon `T`.
    pub horizon: f64,
    /// Number of steps `k`; `τ = T/k`.
    pub steps: usize,
    /// Viscosity `δ`.
    pub delta: f64,
    pub load: BoundaryLoad,
    pub tol: Tolerances,
}

impl EvolutionConfig {
    pub fn tau(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        self.horizon * i as f64 / self.steps as f64
    }

    pub fn validate(&self, model: &Model) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidArgument(format!("time horizon must be positive, got {}", self.horizon)));
        }
        if self.steps == 0 {
            return Err(Error::InvalidArgument("need at least one time step".into()));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidArgument(format!("viscosity must be positive, got {}", self.delta)));
        }
        if self.load.profile.len() != 2 * model.num_nodes() {
            return Err(Error::InvalidArgument("load profile does not match the mesh".into()));
        }
        Ok(())
    }

    fn displacement_solver(&self) -> DisplacementSolver {
        DisplacementSolver {
            tol: self.tol.tol_u,
            max_iter: self.tol.max_newton,
        }
    }

    fn phase_solver(&self) -> PhaseSolver {
        PhaseSolver {
            tol: self.tol.tol_z,
            max_iter: self.tol.max_newton,
        }
    }
}

/// Absolute floor of [`rel_err`]. At a stationary state the slope is pure round-off of
/// the nodal gradient amplified by `1/√m`, which reaches 1e-13 on moderate meshes; with
/// this floor a relative tolerance of 1e-6 allows 1e-12 absolute.
pub const REL_ERR_FLOOR: f64 = 1e-6;

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / (a.abs().max(b.abs()) + REL_ERR_FLOOR)
}

/// Relative error of `∂_zF[Δz] = −slope·‖Δz‖_{L²,h}`, compared in slope units (both
/// sides divided by `‖Δz‖`) so that [`REL_ERR_FLOOR`] applies at the right scale.
pub fn alignment_rel_err(pairing: f64, slope: f64, dz_l2: f64) -> f64 {
    if dz_l2 == 0.0 {
        return 0.0;
    }
    rel_err(pairing / dz_l2, -slope)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub energy: EnergyReport,
    pub slope: f64,
    /// `‖z_i − z_{i−1}‖_{L²,h} / τ`.
    pub rate_l2: f64,
    /// `‖z_i − z_{i−1}‖_{H¹,h} / τ`.
    pub rate_h1: f64,
    /// `P(u_{i−1}, z_{i−1}, (g(t_i) − g(t_{i−1}))/τ)`.
    pub power: f64,
    pub inner_iters: usize,
    /// `slope` vs `(δ/τ)‖z_i − z_{i−1}‖_{L²,h}`.
    pub slope_identity_rel_err: f64,
    /// `∂_zF[z_i − z_{i−1}]` vs `−slope · ‖z_i − z_{i−1}‖_{L²,h}`, see [`alignment_rel_err`].
    pub alignment_rel_err: f64,
    pub cum_arc_length: f64,
    /// Free-dof residual ∞-norm of `u_i` at `z_i`.
    pub equilibrium_residual: f64,
    /// KKT residual of `z_i` for the penalized step at `u_i`.
    pub kkt_residual: f64,
    /// `F(u_{i,j}, z_{i,j}) + (δ/2τ)‖z_{i,j} − z_{i−1}‖²` per inner iteration.
    pub descent_log: Vec<f64>,
    /// Combined H¹ increment per inner iteration.
    pub increments: Vec<f64>,
    /// `‖g(t_i) − g(t_{i−1})‖²_{H¹,h}`.
    pub load_increment_sq: f64,
}

impl StepRecord {
    fn initial(model: &Model, u: &[f64], z: &[f64]) -> Self {
        let g = model.grad_z(u, z);
        let mask = model.mesh.dirichlet_dof_mask();
        StepRecord {
            step: 0,
            t: 0.0,
            energy: model.total_energy(u, z),
            slope: crate::energy::unilateral_slope_from_gradient(&g, model.lumped()).value,
            rate_l2: 0.0,
            rate_h1: 0.0,
            power: 0.0,
            inner_iters: 0,
            slope_identity_rel_err: 0.0,
            alignment_rel_err: 0.0,
            cum_arc_length: 0.0,
            equilibrium_residual: free_residual(model, u, z, &mask),
            kkt_residual: kkt_report(model, u, z, z, 0.0).residual(),
            descent_log: Vec::new(),
            increments: Vec::new(),
            load_increment_sq: 0.0,
        }
    }

    pub fn z_increment_h1(&self, tau: f64) -> f64 {
        self.rate_h1 * tau
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub u: Vec<f64>,
    pub z: Vec<f64>,
}

/// States at `t_0, …, t_k` and one record per state (record 0 is the initial state).
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub config: EvolutionConfig,
    pub states: Vec<State>,
    pub records: Vec<StepRecord>,
}

impl Trajectory {
    pub fn initial(&self) -> &State {
        &self.states[0]
    }

    pub fn last(&self) -> &State {
        self.states.last().expect("trajectory has an initial state")
    }

    pub fn total_arc_length(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.cum_arc_length)
    }

    /// First step where some node increased, with the offending node.
    pub fn irreversibility_violation(&self) -> Option<(usize, usize)> {
        self.states.windows(2).enumerate().find_map(|(i, w)| {
            w[1].z
                .iter()
                .zip(&w[0].z)
                .position(|(a, b)| a > b)
                .map(|node| (i + 1, node))
        })
    }
}

pub(crate) fn free_residual(model: &Model, u: &[f64], z: &[f64], mask: &[bool]) -> f64 {
    model
        .residual_u(u, z)
        .iter()
        .zip(mask)
        .filter(|(_, &fixed)| !fixed)
        .map(|(r, _)| r.abs())
        .fold(0.0, f64::max)
}

/// Alternates displacement and unpenalized phase-field solves at `t = 0` until the pair
/// satisfies both initial stability conditions. The phase-field bound is `z_seed`.
pub fn prepare_initial_state(
    model: &Model,
    config: &EvolutionConfig,
    z_seed: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    config.validate(model)?;
    let n = model.num_nodes();
    if z_seed.len() != n {
        return Err(Error::InvalidArgument("seed phase field does not match the mesh".into()));
    }
    if let Some(v) = z_seed.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::InvalidArgument(format!("seed phase field must lie in [0, 1], found {v}")));
    }
    let g0 = config.load.at(0.0);
    let mask = model.mesh.dirichlet_dof_mask();
    let us = config.displacement_solver();
    let zs = config.phase_solver();
    let stag_tol = config.tol.stag_rel * (1.0 + model.mats.h1(z_seed));
    let mut u = vec![0.0; 2 * n];
    let mut z = z_seed.to_vec();
    let mut inc = f64::INFINITY;
    for _ in 0..config.tol.max_inner {
        let (u_new, _) = us.solve(model, &z, &g0, &u)?;
        let (z_new, _) = zs.solve(model, &u_new, z_seed, 0.0, &z)?;
        inc = model.mats.h1(&diff(&z_new, &z)) + model.mats.h1_vector(&diff(&u_new, &u));
        u = u_new;
        z = z_new;
        if inc <= stag_tol && free_residual(model, &u, &z, &mask) <= config.tol.tol_u {
            return Ok((u, z));
        }
    }
    Err(Error::StaggeredNonConvergence {
        iterations: config.tol.max_inner,
        increment: inc,
        last_u: u,
        last_z: z,
        descent_log: Vec::new(),
    })
}

/// One time step of the alternate minimization, seeded with the previous state.
///
/// The inner loop stops once the combined H¹ increment is below the staggered tolerance
/// and the displacement is in equilibrium with the current phase field, so the returned
/// pair carries both partial optimality certificates.
pub fn staggered_step(
    model: &Model,
    u_prev: &[f64],
    z_prev: &[f64],
    step: usize,
    config: &EvolutionConfig,
) -> Result<(Vec<f64>, Vec<f64>, StepRecord)> {
    let tau = config.tau();
    let penalty = config.delta / tau;
    let t = config.time(step);
    let t_prev = config.time(step - 1);
    let g_t = config.load.at(t);
    let mask = model.mesh.dirichlet_dof_mask();
    let us = config.displacement_solver();
    let zs = config.phase_solver();
    let stag_tol = config.tol.stag_rel * (1.0 + model.mats.h1(z_prev));

    let mut u = u_prev.to_vec();
    let mut z = z_prev.to_vec();
    let mut descent_log = Vec::new();
    let mut increments: Vec<f64> = Vec::new();
    let mut converged = false;
    for _ in 0..config.tol.max_inner {
        let (u_new, _) = us.solve(model, &z, &g_t, &u)?;
        let (z_new, _) = zs.solve(model, &u_new, z_prev, penalty, &z)?;
        let inc = model.mats.h1(&diff(&z_new, &z)) + model.mats.h1_vector(&diff(&u_new, &u));
        if let Some(&last) = increments.last() {
            if inc > last {
                log::debug!("step {step}: inner increment grew from {last:.3e} to {inc:.3e}");
            }
        }
        u = u_new;
        z = z_new;
        let dz = diff(&z, z_prev);
        descent_log.push(model.total_energy(&u, &z).total + 0.5 * penalty * model.mats.l2_sq(&dz));
        increments.push(inc);
        if inc <= stag_tol && free_residual(model, &u, &z, &mask) <= config.tol.tol_u {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::StaggeredNonConvergence {
            iterations: config.tol.max_inner,
            increment: increments.last().copied().unwrap_or(f64::INFINITY),
            last_u: u,
            last_z: z,
            descent_log,
        });
    }

    let dz = diff(&z, z_prev);
    let dz_l2 = model.mats.l2(&dz);
    let dz_h1 = model.mats.h1(&dz);
    let g = model.grad_z(&u, &z);
    let slope = crate::energy::unilateral_slope_from_gradient(&g, model.lumped()).value;
    let pairing: f64 = g.iter().zip(&dz).map(|(a, b)| a * b).sum();
    let gdot = config.load.difference_quotient(t, t_prev);
    let dg = diff(&g_t, &config.load.at(t_prev));
    let record = StepRecord {
        step,
        t,
        energy: model.total_energy(&u, &z),
        slope,
        rate_l2: dz_l2 / tau,
        rate_h1: dz_h1 / tau,
        power: model.power(u_prev, z_prev, &gdot),
        inner_iters: descent_log.len(),
        slope_identity_rel_err: rel_err(slope, penalty * dz_l2),
        alignment_rel_err: alignment_rel_err(pairing, slope, dz_l2),
        cum_arc_length: 0.0,
        equilibrium_residual: free_residual(model, &u, &z, &mask),
        kkt_residual: kkt_report(model, &u, &z, z_prev, penalty).residual(),
        descent_log,
        increments,
        load_increment_sq: model.mats.h1_sq_vector(&dg),
    };
    Ok((u, z, record))
}

/// Runs `k` staggered steps from a prepared initial state.
pub fn run_evolution(
    model: &Model,
    config: &EvolutionConfig,
    initial: (Vec<f64>, Vec<f64>),
) -> Result<Trajectory> {
    config.validate(model)?;
    let (u0, z0) = initial;
    model.check_sizes(&u0, &z0)?;
    let mut records = vec![StepRecord::initial(model, &u0, &z0)];
    let mut states = vec![State { t: 0.0, u: u0, z: z0 }];
    let mut arc = 0.0;
    for i in 1..=config.steps {
        let prev = states.last().expect("nonempty");
        let (u, z, mut rec) = staggered_step(model, &prev.u, &prev.z, i, config)
            .map_err(|e| Error::Step { step: i, source: Box::new(e) })?;
        arc += rec.rate_h1 * config.tau();
        rec.cum_arc_length = arc;
        log::debug!(
            "step {i}: t = {:.4}, F = {:.6e}, slope = {:.3e}, inner = {}",
            rec.t,
            rec.energy.total,
            rec.slope,
            rec.inner_iters
        );
        records.push(rec);
        states.push(State { t: config.time(i), u, z });
    }
    Ok(Trajectory {
        config: config.clone(),
        states,
        records,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct InequalityRow {
    pub step: usize,
    pub t: f64,
    /// `F(u_i, z_i)`.
    pub energy: f64,
    /// `F(u_0,z_0) − Σ τ[slope²/(2δ) + δ rate²/2] + Σ τ P`, without the remainder.
    pub bound: f64,
    /// `Σ_{l≤i} ‖z_l − z_{l−1}‖²_{H¹,h} + ‖g(t_l) − g(t_{l−1})‖²_{H¹,h}`.
    pub increment_sum: f64,
    /// `bound − energy` (remainder constant 0).
    pub slack_raw: f64,
    /// `bound + C_R · increment_sum − energy` with the fitted constant.
    pub slack_fitted: f64,
}

#[derive(Debug, Clone)]
pub struct InequalityReport {
    pub rows: Vec<InequalityRow>,
    /// Smallest `C_R ≥ 0` making every fitted slack nonnegative; infinite if some violation
    /// occurs with a vanishing increment sum.
    pub c_r: f64,
    pub total_increment_sum: f64,
    pub initial_energy: f64,
}

impl InequalityReport {
    pub fn tolerance(&self) -> f64 {
        1e-8 * (1.0 + self.initial_energy.abs())
    }

    /// Steps whose fitted slack is below `−1e-8 (1 + |F(u_0, z_0)|)`.
    pub fn violations(&self) -> Vec<usize> {
        let tol = self.tolerance();
        self.rows
            .iter()
            .filter(|r| !(r.slack_fitted >= -tol))
            .map(|r| r.step)
            .collect()
    }

    pub fn min_slack_fitted(&self) -> f64 {
        self.rows.iter().map(|r| r.slack_fitted).fold(f64::INFINITY, f64::min)
    }

    pub fn min_slack_raw(&self) -> f64 {
        self.rows.iter().map(|r| r.slack_raw).fold(f64::INFINITY, f64::min)
    }
}

/// Audits the discrete energy inequality at every step with rectangle sums over the
/// completed steps. The power uses the state at the left end of each interval.
pub fn energy_inequality_report(traj: &Trajectory) -> InequalityReport {
    let cfg = &traj.config;
    let tau = cfg.tau();
    let delta = cfg.delta;
    let f0 = traj.records[0].energy.total;
    let mut rows = Vec::with_capacity(traj.records.len());
    let (mut dissipated, mut work, mut incs) = (0.0, 0.0, 0.0);
    for rec in &traj.records {
        if rec.step > 0 {
            dissipated += tau * (rec.slope * rec.slope / (2.0 * delta) + 0.5 * delta * rec.rate_l2 * rec.rate_l2);
            work += tau * rec.power;
            let dz_h1 = rec.rate_h1 * tau;
            incs += dz_h1 * dz_h1 + rec.load_increment_sq;
        }
        let bound = f0 - dissipated + work;
        rows.push(InequalityRow {
            step: rec.step,
            t: rec.t,
            energy: rec.energy.total,
            bound,
            increment_sum: incs,
            slack_raw: bound - rec.energy.total,
            slack_fitted: 0.0,
        });
    }
    let mut c_r: f64 = 0.0;
    for r in &rows {
        if r.slack_raw < 0.0 {
            if r.increment_sum > 0.0 {
                c_r = c_r.max(-r.slack_raw / r.increment_sum);
            } else if r.slack_raw < -1e-8 * (1.0 + f0.abs()) {
                c_r = f64::INFINITY;
            }
        }
    }
    for r in &mut rows {
        r.slack_fitted = if c_r.is_finite() {
            r.slack_raw + c_r * r.increment_sum
        } else {
            r.slack_raw
        };
    }
    InequalityReport {
        rows,
        c_r,
        total_increment_sum: incs,
        initial_energy: f0,
    }
}
