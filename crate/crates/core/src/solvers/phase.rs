use super::{roundoff_allowance, SolveStats, DEFAULT_MAX_NEWTON};
use crate::energy::Model;
use crate::error::{Error, Result};
use crate::sparse::SparseCholesky;

/// Extra Newton steps allowed after the tolerance is met.
const MAX_POLISH: usize = 3;

/// Projected Newton with active-set freezing for
///
/// ```text
/// min_z F(u, z) + (δ/2τ) ‖z − z_prev‖²_{L²,h}   subject to  z ≤ z_prev
/// ```
///
/// The non-quadratic terms are nodally diagonal (vertex quadrature), so the Hessian is
/// `K + diag(½ h″ Q + ½ w f″ + (δ/τ) m)`.
#[derive(Debug, Clone)]
pub struct PhaseSolver {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PhaseSolver {
    fn default() -> Self {
        PhaseSolver {
            tol: super::DEFAULT_TOL,
            max_iter: DEFAULT_MAX_NEWTON,
        }
    }
}

/// KKT certificate of a phase-field step. `multiplier` is `λ = max(−G, 0)` with `G` the
/// gradient of the penalized objective.
#[derive(Debug, Clone)]
pub struct KktReport {
    pub gradient: Vec<f64>,
    pub multiplier: Vec<f64>,
    /// `max_i |G_i + λ_i|` restricted to what the bound permits.
    pub stationarity: f64,
    /// `max_i λ_i (z_prev,i − z_i)`.
    pub complementarity: f64,
    pub active: usize,
}

impl KktReport {
    pub fn residual(&self) -> f64 {
        self.stationarity.max(self.complementarity)
    }
}

struct PenalizedObjective<'a> {
    model: &'a Model,
    q: Vec<f64>,
    z_prev: &'a [f64],
    penalty: f64,
}

impl PenalizedObjective<'_> {
    fn value(&self, z: &[f64]) -> f64 {
        let h = &self.model.material.h;
        let m = self.model.lumped();
        let mut acc = self.model.dissipation(z);
        for i in 0..z.len() {
            let dz = z[i] - self.z_prev[i];
            acc += 0.5 * h.value(z[i]) * self.q[i] + 0.5 * self.penalty * m[i] * dz * dz;
        }
        acc
    }

    fn gradient(&self, z: &[f64]) -> Vec<f64> {
        let m = self.model.lumped();
        let mut g = self.model.grad_z_with(&self.q, z);
        for i in 0..z.len() {
            g[i] += self.penalty * m[i] * (z[i] - self.z_prev[i]);
        }
        g
    }

    fn hessian_diagonal(&self, z: &[f64]) -> Vec<f64> {
        let (h, f) = (&self.model.material.h, &self.model.material.f);
        let m = self.model.lumped();
        (0..z.len())
            .map(|i| {
                0.5 * h.d2(z[i]) * self.q[i] + 0.5 * m[i] * f.d2(z[i]) + self.penalty * m[i]
            })
            .collect()
    }
}

fn certificate(z: &[f64], z_prev: &[f64], g: Vec<f64>) -> KktReport {
    let mut stationarity: f64 = 0.0;
    let mut complementarity: f64 = 0.0;
    let mut active = 0;
    let mut multiplier = vec![0.0; z.len()];
    for i in 0..z.len() {
        let lambda = (-g[i]).max(0.0);
        multiplier[i] = lambda;
        if z[i] >= z_prev[i] {
            active += 1;
            stationarity = stationarity.max(g[i].max(0.0));
        } else {
            stationarity = stationarity.max(g[i].abs());
            complementarity = complementarity.max(lambda * (z_prev[i] - z[i]));
        }
    }
    KktReport {
        gradient: g,
        multiplier,
        stationarity,
        complementarity,
        active,
    }
}

/// KKT certificate of `z` for the penalized phase-field problem at displacement `u`.
pub fn kkt_report(
    model: &Model,
    u: &[f64],
    z: &[f64],
    z_prev: &[f64],
    penalty: f64,
) -> KktReport {
    let obj = PenalizedObjective {
        model,
        q: model.nodal_degradable(u),
        z_prev,
        penalty,
    };
    certificate(z, z_prev, obj.gradient(z))
}

impl PhaseSolver {
    /// `penalty` is `δ/τ` (zero for the unpenalized problem).
    pub fn solve(
        &self,
        model: &Model,
        u: &[f64],
        z_prev: &[f64],
        penalty: f64,
        z_init: &[f64],
    ) -> Result<(Vec<f64>, SolveStats)> {
        model.check_sizes(u, z_prev)?;
        if z_init.len() != z_prev.len() {
            return Err(Error::InvalidArgument("initial phase field has the wrong length".into()));
        }
        if !(penalty >= 0.0 && penalty.is_finite()) {
            return Err(Error::InvalidArgument(format!("penalty must be finite and ≥ 0, got {penalty}")));
        }
        let obj = PenalizedObjective {
            model,
            q: model.nodal_degradable(u),
            z_prev,
            penalty,
        };
        let n = z_prev.len();
        let mut z: Vec<f64> = z_init.iter().zip(z_prev).map(|(a, b)| a.min(*b)).collect();
        let mut value = obj.value(&z);
        let mut stats = SolveStats {
            objective_log: vec![value],
            ..Default::default()
        };
        // Once within tolerance, keep taking Newton steps while each one cuts the residual
        // tenfold. The objective is quadratic for the default profiles, so this reaches
        // round-off and the slope identities downstream hold to relative precision.
        let mut best: Option<(Vec<f64>, f64, usize, usize, usize)> = None;
        let mut polish = 0;
        for it in 0..=self.max_iter {
            let g = obj.gradient(&z);
            let cert = certificate(&z, z_prev, g);
            let res = cert.residual();
            let improves = best.as_ref().is_none_or(|b| res < 0.1 * b.1);
            if (best.is_some() && improves) || (best.is_none() && res <= self.tol) {
                best = Some((z.clone(), res, it, cert.active, stats.objective_log.len()));
                polish += 1;
            }
            if best.is_some() && (!improves || res == 0.0 || polish > MAX_POLISH) {
                break;
            }
            if best.is_none() {
                stats.iterations = it;
                stats.final_residual = res;
                stats.active_set_size = cert.active;
            }
            if it == self.max_iter {
                break;
            }
            let g = cert.gradient;
            // Bertsekas' ε-active set: near the bound with the gradient pushing outward.
            let eps = z
                .iter()
                .zip(z_prev)
                .zip(&g)
                .map(|((zi, pi), gi)| (zi - (zi - gi).min(*pi)).abs())
                .fold(0.0, f64::max)
                .min(1e-3);
            let active: Vec<bool> = (0..n)
                .map(|i| z_prev[i] - z[i] <= eps && g[i] < 0.0)
                .collect();
            let free: Vec<usize> = (0..n).filter(|&i| !active[i]).collect();
            let full = model.mats.stiffness.plus_diagonal(&obj.hessian_diagonal(&z));
            // Diagonally scaled gradient step on the active block; the projection in the
            // line search clips it at the bound.
            let mut dir = vec![0.0; n];
            for i in 0..n {
                if active[i] {
                    dir[i] = -g[i] / full.get(i, i);
                }
            }
            if !free.is_empty() {
                let hess = full.principal_submatrix(&free);
                let rhs: Vec<f64> = free.iter().map(|&i| -g[i]).collect();
                let step = SparseCholesky::factor(&hess)?.solve(&rhs);
                for (k, &i) in free.iter().enumerate() {
                    dir[i] = step[k];
                }
            }
            let mut alpha = 1.0;
            let mut accepted = None;
            while alpha > 1e-14 {
                let trial: Vec<f64> = (0..n).map(|i| (z[i] + alpha * dir[i]).min(z_prev[i])).collect();
                let predicted: f64 = (0..n).map(|i| g[i] * (trial[i] - z[i])).sum();
                let v = obj.value(&trial);
                if v <= value + 1e-4 * predicted.min(0.0) + roundoff_allowance(value) {
                    accepted = Some((trial, v));
                    break;
                }
                alpha *= 0.5;
            }
            match accepted {
                Some((trial, v)) => {
                    z = trial;
                    value = v;
                    stats.objective_log.push(value);
                }
                None => break,
            }
        }
        if let Some((z, res, it, active, log_len)) = best {
            stats.iterations = it;
            stats.final_residual = res;
            stats.active_set_size = active;
            stats.converged = true;
            stats.objective_log.truncate(log_len);
            let zmin = z.iter().copied().fold(f64::INFINITY, f64::min);
            if zmin < -self.tol {
                log::warn!("phase field left [0, 1]: min z = {zmin:.3e}");
            }
            return Ok((z, stats));
        }
        Err(Error::NonConvergence {
            solver: "phase-field projected Newton",
            iterations: stats.iterations,
            residual: stats.final_residual,
            best: z,
        })
    }
}

/// `argmin F(u,·) + (δ/2τ)‖z − z_prev‖²` subject to `z ≤ z_prev`.
pub fn solve_z(
    model: &Model,
    u: &[f64],
    z_prev: &[f64],
    delta: f64,
    tau: f64,
    z_init: &[f64],
    tol: f64,
) -> Result<(Vec<f64>, SolveStats)> {
    if !(tau > 0.0) || !(delta >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need tau > 0 and delta ≥ 0 (tau = {tau}, delta = {delta})"
        )));
    }
    PhaseSolver {
        tol,
        ..Default::default()
    }
    .solve(model, u, z_prev, delta / tau, z_init)
}

/// `argmin F(u,·)` subject to `z ≤ z_prev`.
pub fn solve_z_unpenalized(
    model: &Model,
    u: &[f64],
    z_prev: &[f64],
    tol: f64,
) -> Result<(Vec<f64>, SolveStats)> {
    PhaseSolver {
        tol,
        ..Default::default()
    }
    .solve(model, u, z_prev, 0.0, z_prev)
}
