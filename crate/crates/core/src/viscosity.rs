//! Arc-length reparametrization of discrete trajectories and the δ-sweep.

use rayon::prelude::*;

use crate::energy::{unilateral_slope_from_gradient, Model};
use crate::error::{Error, Result};
use crate::evolution::{alignment_rel_err, run_evolution, EvolutionConfig, State, Trajectory};
use crate::fem::diff;

pub const DEFAULT_GRID_INTERVALS: usize = 2000;
pub const DEFAULT_PLATEAU_EPS: f64 = 1e-3;

/// Per-knot data of the reparametrized curve. Knot `i` is the image of `t_i`.
#[derive(Debug, Clone)]
pub struct Knot {
    pub sigma: f64,
    pub t: f64,
    pub slope: f64,
    /// `(g)₊` at the knot state.
    pub gradient: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub s: f64,
    pub t: f64,
    /// Interval `i` (between knots `i−1` and `i`) containing `s`; `None` past the last knot.
    pub interval: Option<usize>,
    /// Position inside the interval, in `[0, 1]`.
    pub theta: f64,
    pub t_prime: f64,
    pub z_prime_h1: f64,
    pub z_prime_l2: f64,
    /// Slope of the state at the right knot of the interval (piecewise-constant interpolant).
    pub slope: f64,
}

/// Trajectory in the arc-length variable `s`, sampled on a uniform grid.
///
/// Fields at grid points are linear interpolants between knot states; use
/// [`ReparamTrajectory::state_at`] to materialize them.
#[derive(Debug, Clone)]
pub struct ReparamTrajectory {
    pub delta: f64,
    pub tau: f64,
    pub knots: Vec<Knot>,
    pub states: Vec<State>,
    pub ds: f64,
    pub grid: Vec<GridPoint>,
    lumped: Vec<f64>,
}

fn knot_data(model: &Model, traj: &Trajectory) -> Result<Vec<Knot>> {
    if traj.states.is_empty() {
        return Err(Error::InvalidArgument("empty trajectory".into()));
    }
    let mut sigma = 0.0;
    let mut knots = Vec::with_capacity(traj.states.len());
    for (i, st) in traj.states.iter().enumerate() {
        if i > 0 {
            let prev = &traj.states[i - 1];
            sigma += (st.t - prev.t) + model.mats.h1(&diff(&st.z, &prev.z));
        }
        let g = model.grad_z(&st.u, &st.z);
        let slope = unilateral_slope_from_gradient(&g, model.lumped()).value;
        knots.push(Knot {
            sigma: if i == 0 { st.t } else { sigma },
            t: st.t,
            slope,
            gradient: g,
        });
    }
    Ok(knots)
}

/// Reparametrizes on the trajectory's own arc length with the default grid.
pub fn reparametrize(model: &Model, traj: &Trajectory) -> Result<ReparamTrajectory> {
    let knots = knot_data(model, traj)?;
    let s_end = knots.last().expect("nonempty").sigma;
    Ok(resample(model, traj, knots, s_end, DEFAULT_GRID_INTERVALS))
}

/// Reparametrizes on `[0, s_max]` with `intervals` uniform cells; constant past `σ(T)`.
pub fn reparametrize_on_grid(
    model: &Model,
    traj: &Trajectory,
    s_max: f64,
    intervals: usize,
) -> Result<ReparamTrajectory> {
    if intervals == 0 || !(s_max > 0.0) {
        return Err(Error::InvalidArgument("grid needs a positive length and at least one cell".into()));
    }
    let knots = knot_data(model, traj)?;
    Ok(resample(model, traj, knots, s_max, intervals))
}

fn resample(
    model: &Model,
    traj: &Trajectory,
    knots: Vec<Knot>,
    s_max: f64,
    intervals: usize,
) -> ReparamTrajectory {
    let ds = s_max / intervals as f64;
    let last = knots.len() - 1;
    let s_end = knots[last].sigma;
    let mut grid = Vec::with_capacity(intervals + 1);
    let mut i = 1;
    for j in 0..=intervals {
        let s = ds * j as f64;
        if last == 0 || s > s_end {
            grid.push(GridPoint {
                s,
                t: knots[last].t,
                interval: None,
                theta: 0.0,
                t_prime: 0.0,
                z_prime_h1: 0.0,
                z_prime_l2: 0.0,
                slope: knots[last].slope,
            });
            continue;
        }
        while i < last && s > knots[i].sigma {
            i += 1;
        }
        let (a, b) = (&knots[i - 1], &knots[i]);
        let len = b.sigma - a.sigma;
        let theta = ((s - a.sigma) / len).clamp(0.0, 1.0);
        let dz = diff(&traj.states[i].z, &traj.states[i - 1].z);
        grid.push(GridPoint {
            s,
            t: a.t + theta * (b.t - a.t),
            interval: Some(i),
            theta,
            t_prime: (b.t - a.t) / len,
            z_prime_h1: model.mats.h1(&dz) / len,
            z_prime_l2: model.mats.l2(&dz) / len,
            slope: b.slope,
        });
    }
    ReparamTrajectory {
        delta: traj.config.delta,
        tau: traj.config.tau(),
        knots,
        states: traj.states.clone(),
        ds,
        grid,
        lumped: model.lumped().to_vec(),
    }
}

impl ReparamTrajectory {
    /// Total arc length `S = σ(T)`.
    pub fn arc_length(&self) -> f64 {
        self.knots.last().map_or(0.0, |k| k.sigma)
    }

    /// `(u(s_j), z(s_j))` at grid point `j`.
    pub fn state_at(&self, j: usize) -> (Vec<f64>, Vec<f64>) {
        let p = &self.grid[j];
        match p.interval {
            None => {
                let st = self.states.last().expect("nonempty");
                (st.u.clone(), st.z.clone())
            }
            Some(i) => {
                let (a, b) = (&self.states[i - 1], &self.states[i]);
                let lerp = |x: &[f64], y: &[f64]| -> Vec<f64> {
                    x.iter().zip(y).map(|(x, y)| p_theta(x, y, p.theta)).collect()
                };
                (lerp(&a.u, &b.u), lerp(&a.z, &b.z))
            }
        }
    }

    pub fn phase_at(&self, j: usize) -> Vec<f64> {
        let p = &self.grid[j];
        match p.interval {
            None => self.states.last().expect("nonempty").z.clone(),
            Some(i) => {
                let (a, b) = (&self.states[i - 1].z, &self.states[i].z);
                a.iter().zip(b).map(|(x, y)| p_theta(x, y, p.theta)).collect()
            }
        }
    }

    /// `|t′ + ‖z′‖_{H¹,h} − 1|` on each original interval, recomputed from the knots.
    pub fn knot_normalization_errors(&self, model: &Model) -> Vec<f64> {
        (1..self.knots.len())
            .map(|i| {
                let len = self.knots[i].sigma - self.knots[i - 1].sigma;
                let dt = self.knots[i].t - self.knots[i - 1].t;
                let dz = model.mats.h1(&diff(&self.states[i].z, &self.states[i - 1].z));
                (dt / len + dz / len - 1.0).abs()
            })
            .collect()
    }

    pub fn max_grid_normalization(&self) -> f64 {
        self.grid
            .iter()
            .map(|p| p.t_prime + p.z_prime_h1)
            .fold(0.0, f64::max)
    }

    pub fn knots_strictly_increasing(&self) -> bool {
        self.knots.windows(2).all(|w| w[1].sigma > w[0].sigma)
    }

    /// Grid points past `σ(T)` carry exactly the final state.
    pub fn constant_extension_exact(&self) -> bool {
        let last = self.states.last().expect("nonempty");
        self.grid
            .iter()
            .enumerate()
            .filter(|(_, p)| p.interval.is_none())
            .all(|(j, p)| p.t == last.t && self.phase_at(j) == last.z)
    }

    fn l2(&self, v: &[f64]) -> f64 {
        v.iter().zip(&self.lumped).map(|(x, m)| m * x * x).sum::<f64>().sqrt()
    }

    /// Direction property at every knot where the phase field moved: nodally
    /// `Δz · slope = −‖Δz‖_{L²,h} (g)₊ / m`, reported as a relative error in `L²,h`.
    pub fn direction_errors(&self) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        for i in 1..self.knots.len() {
            let dz = diff(&self.states[i].z, &self.states[i - 1].z);
            let n = self.l2(&dz);
            if n == 0.0 {
                continue;
            }
            let k = &self.knots[i];
            let mismatch: Vec<f64> = dz
                .iter()
                .zip(&k.gradient)
                .zip(&self.lumped)
                .map(|((d, g), m)| d * k.slope + n * g.max(0.0) / m)
                .collect();
            out.push((i, self.l2(&mismatch) / (n * k.slope).max(f64::MIN_POSITIVE)));
        }
        out
    }
}

fn p_theta(a: &f64, b: &f64, theta: f64) -> f64 {
    a + theta * (b - a)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationarityReport {
    pub plateau_eps: f64,
    pub advancing_points: usize,
    pub plateau_points: usize,
    /// Max slope over advancing points.
    pub max_advancing_slope: f64,
    /// Max over advancing points of `max_i (g_i)₊ / m_i`, the lumped pointwise residual.
    pub max_norm_residual: f64,
    /// Max relative error of `slope·‖z′‖ + ∂_zF[z′]` where `z′ ≠ 0`.
    pub max_alignment_rel_err: f64,
}

/// Splits the grid into plateau points (`t′ ≤ plateau_eps`) and advancing points and
/// reports the stationarity diagnostics on the advancing ones.
pub fn stationarity_check(rt: &ReparamTrajectory, plateau_eps: f64) -> StationarityReport {
    let mut rep = StationarityReport {
        plateau_eps,
        advancing_points: 0,
        plateau_points: 0,
        max_advancing_slope: 0.0,
        max_norm_residual: 0.0,
        max_alignment_rel_err: 0.0,
    };
    for p in &rt.grid {
        // past σ(T) neither t nor z moves
        let knot = match p.interval {
            Some(i) if p.t_prime > plateau_eps => i,
            _ => {
                rep.plateau_points += 1;
                continue;
            }
        };
        rep.advancing_points += 1;
        let k = &rt.knots[knot];
        rep.max_advancing_slope = rep.max_advancing_slope.max(k.slope);
        let res = k
            .gradient
            .iter()
            .zip(&rt.lumped)
            .map(|(g, m)| g.max(0.0) / m)
            .fold(0.0, f64::max);
        rep.max_norm_residual = rep.max_norm_residual.max(res);
        if p.z_prime_l2 > 0.0 {
            let dz = diff(&rt.states[knot].z, &rt.states[knot - 1].z);
            let pairing: f64 = k.gradient.iter().zip(&dz).map(|(a, b)| a * b).sum();
            let err = alignment_rel_err(pairing, k.slope, rt.l2(&dz));
            rep.max_alignment_rel_err = rep.max_alignment_rel_err.max(err);
        }
    }
    rep
}

/// How the step count is chosen for each viscosity in a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    /// Use the base configuration's step count for every δ.
    Fixed,
    /// `τ = ratio · δ`, rounded so that `k = ⌈T / (ratio·δ)⌉`.
    TauOverDelta(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub deltas: Vec<f64>,
    pub step_rule: StepRule,
    pub plateau_eps: f64,
    pub grid_intervals: usize,
}

impl SweepOptions {
    pub fn new(deltas: Vec<f64>) -> Self {
        SweepOptions {
            deltas,
            step_rule: StepRule::Fixed,
            plateau_eps: DEFAULT_PLATEAU_EPS,
            grid_intervals: DEFAULT_GRID_INTERVALS,
        }
    }

    fn config_for(&self, base: &EvolutionConfig, delta: f64) -> EvolutionConfig {
        let mut cfg = base.clone();
        cfg.delta = delta;
        if let StepRule::TauOverDelta(r) = self.step_rule {
            cfg.steps = ((base.horizon / (r * delta)) - 1e-9).ceil().max(1.0) as usize;
        }
        cfg
    }

    pub fn validate(&self, base: &EvolutionConfig) -> Result<()> {
        if self.deltas.is_empty() {
            return Err(Error::Config("viscosity sweep needs at least one delta".into()));
        }
        if self.deltas.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return Err(Error::Config("sweep deltas must be positive".into()));
        }
        if self.deltas.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config("sweep deltas must be strictly descending".into()));
        }
        if let StepRule::TauOverDelta(r) = self.step_rule {
            if !(r > 0.0 && r <= 1.0) {
                return Err(Error::Config(format!("tau_over_delta must lie in (0, 1], got {r}")));
            }
        }
        let dmin = *self.deltas.last().expect("nonempty");
        for &d in &self.deltas {
            let tau = self.config_for(base, d).tau();
            if tau > dmin * (1.0 + 1e-12) && matches!(self.step_rule, StepRule::Fixed) {
                return Err(Error::Config(format!(
                    "time step {tau} exceeds the smallest viscosity {dmin}"
                )));
            }
            if tau > d * (1.0 + 1e-12) {
                return Err(Error::Config(format!("time step {tau} exceeds viscosity {d}")));
            }
        }
        if self.grid_intervals == 0 {
            return Err(Error::Config("grid_intervals must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub delta: f64,
    pub steps: usize,
    pub arc_length: f64,
    pub max_norm_residual: f64,
    pub max_advancing_slope: f64,
    /// `sup_s ‖z_δ(s) − z_{δ'}(s)‖_{L²,h}` against the next (smaller) δ.
    pub pairwise_distance_to_next: Option<f64>,
    pub stationarity: StationarityReport,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// `max S_{δ_{j+1}} / S_{δ_j}` over consecutive sweep entries.
    pub c_growth: f64,
    pub s_max: f64,
    pub curves: Vec<ReparamTrajectory>,
    pub trajectories: Vec<Trajectory>,
}

impl SweepReport {
    pub fn arc_length_spread(&self) -> f64 {
        let (lo, hi) = self
            .rows
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r.arc_length), hi.max(r.arc_length)));
        hi / lo
    }
}

/// Runs one evolution per δ (in parallel), reparametrizes every trajectory on a common
/// `s`-grid and assembles the Cauchy and stationarity diagnostics.
pub fn delta_sweep(
    model: &Model,
    base: &EvolutionConfig,
    opts: &SweepOptions,
    initial: (Vec<f64>, Vec<f64>),
) -> Result<SweepReport> {
    opts.validate(base)?;
    let trajectories: Vec<Trajectory> = opts
        .deltas
        .par_iter()
        .map(|&d| run_evolution(model, &opts.config_for(base, d), initial.clone()))
        .collect::<Result<_>>()?;
    let s_max = trajectories
        .iter()
        .map(|t| knot_data(model, t).map(|k| k.last().expect("nonempty").sigma))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let curves: Vec<ReparamTrajectory> = trajectories
        .par_iter()
        .map(|t| reparametrize_on_grid(model, t, s_max, opts.grid_intervals))
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(curves.len());
    for (j, c) in curves.iter().enumerate() {
        let st = stationarity_check(c, opts.plateau_eps);
        let dist = curves.get(j + 1).map(|next| sup_distance(c, next));
        rows.push(SweepRow {
            delta: c.delta,
            steps: trajectories[j].config.steps,
            arc_length: c.arc_length(),
            max_norm_residual: st.max_norm_residual,
            max_advancing_slope: st.max_advancing_slope,
            pairwise_distance_to_next: dist,
            stationarity: st,
        });
    }
    let c_growth = rows
        .windows(2)
        .map(|w| w[1].arc_length / w[0].arc_length)
        .fold(0.0, f64::max);
    Ok(SweepReport {
        rows,
        c_growth,
        s_max,
        curves,
        trajectories,
    })
}

/// `max_j ‖z_a(s_j) − z_b(s_j)‖_{L²,h}` on a shared grid.
pub fn sup_distance(a: &ReparamTrajectory, b: &ReparamTrajectory) -> f64 {
    (0..a.grid.len().min(b.grid.len()))
        .into_par_iter()
        .map(|j| a.l2(&diff(&a.phase_at(j), &b.phase_at(j))))
        .reduce(|| 0.0, f64::max)
}
