use super::{roundoff_allowance, SolveStats, DEFAULT_MAX_NEWTON};
use crate::energy::Model;
use crate::error::{Error, Result};
use crate::fem::{element_strain, unit_strain};
use crate::sparse::{SparseCholesky, TripletBuilder};

/// Semismooth Newton for `min_u E(u, z)` subject to `u = g` on Dirichlet dofs.
///
/// The stress is piecewise linear in the strain with a kink at `tr ε = 0`, so each
/// iteration linearizes with the current trace sign per element and safeguards with an
/// Armijo backtracking search on the energy.
#[derive(Debug, Clone)]
pub struct DisplacementSolver {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for DisplacementSolver {
    fn default() -> Self {
        DisplacementSolver {
            tol: super::DEFAULT_TOL,
            max_iter: DEFAULT_MAX_NEWTON,
        }
    }
}

struct Frozen<'a> {
    model: &'a Model,
    hbar: Vec<f64>,
}

impl Frozen<'_> {
    fn energy(&self, u: &[f64]) -> f64 {
        let mesh = &self.model.mesh;
        (0..mesh.num_triangles())
            .map(|e| {
                let (q, c) = self.model.material.split_energies(&element_strain(u, e, mesh));
                0.5 * mesh.area(e) * (self.hbar[e] * q + c)
            })
            .sum()
    }

    fn residual(&self, u: &[f64]) -> Vec<f64> {
        let mesh = &self.model.mesh;
        let mut r = vec![0.0; u.len()];
        for (e, tri) in mesh.triangles().iter().enumerate() {
            let eps = element_strain(u, e, mesh);
            let sigma = self.model.material.stress_with_factor(self.hbar[e], &eps);
            let g = mesh.basis_gradients(e);
            let s = 0.5 * mesh.area(e);
            for a in 0..3 {
                for c in 0..2 {
                    r[2 * tri[a] + c] += s * sigma.ddot(&unit_strain(&g[a], c));
                }
            }
        }
        r
    }

    fn tangent(&self, u: &[f64], free_index: &[usize], nfree: usize) -> Result<SparseCholesky> {
        let mesh = &self.model.mesh;
        let mut b = TripletBuilder::new(nfree);
        for (e, tri) in mesh.triangles().iter().enumerate() {
            let eps = element_strain(u, e, mesh);
            let g = mesh.basis_gradients(e);
            let s = 0.5 * mesh.area(e);
            let units: Vec<_> = (0..6).map(|k| unit_strain(&g[k / 2], k % 2)).collect();
            for k in 0..6 {
                let row = free_index[2 * tri[k / 2] + k % 2];
                if row == usize::MAX {
                    continue;
                }
                let ck = self.model.material.tangent_with_factor(self.hbar[e], &eps, &units[k]);
                for l in 0..6 {
                    let col = free_index[2 * tri[l / 2] + l % 2];
                    if col != usize::MAX {
                        b.push(row, col, s * ck.ddot(&units[l]));
                    }
                }
            }
        }
        SparseCholesky::factor(&b.build())
    }
}

impl DisplacementSolver {
    pub fn solve(
        &self,
        model: &Model,
        z: &[f64],
        g_t: &[f64],
        u_init: &[f64],
    ) -> Result<(Vec<f64>, SolveStats)> {
        model.check_sizes(u_init, z)?;
        if g_t.len() != u_init.len() {
            return Err(Error::InvalidArgument("boundary datum has the wrong length".into()));
        }
        let mask = model.mesh.dirichlet_dof_mask();
        if !mask.iter().any(|&m| m) {
            return Err(Error::NoDirichlet);
        }
        let mut free_index = vec![usize::MAX; mask.len()];
        let mut free = Vec::new();
        for (dof, &fixed) in mask.iter().enumerate() {
            if !fixed {
                free_index[dof] = free.len();
                free.push(dof);
            }
        }
        let mut u = u_init.to_vec();
        for (dof, &fixed) in mask.iter().enumerate() {
            if fixed {
                u[dof] = g_t[dof];
            }
        }
        let frozen = Frozen {
            model,
            hbar: model.element_degradation(z),
        };
        let mut energy = frozen.energy(&u);
        let mut stats = SolveStats {
            objective_log: vec![energy],
            ..Default::default()
        };
        for it in 0..=self.max_iter {
            let r = frozen.residual(&u);
            let res = free.iter().map(|&d| r[d].abs()).fold(0.0, f64::max);
            stats.iterations = it;
            stats.final_residual = res;
            if res <= self.tol {
                stats.converged = true;
                return Ok((u, stats));
            }
            if it == self.max_iter {
                break;
            }
            let rhs: Vec<f64> = free.iter().map(|&d| -r[d]).collect();
            let step = frozen.tangent(&u, &free_index, free.len())?.solve(&rhs);
            let decrease: f64 = -rhs.iter().zip(&step).map(|(a, b)| a * b).sum::<f64>();
            let mut alpha = 1.0;
            let mut accepted = None;
            while alpha > 1e-14 {
                let mut trial = u.clone();
                for (k, &d) in free.iter().enumerate() {
                    trial[d] += alpha * step[k];
                }
                let e_trial = frozen.energy(&trial);
                if e_trial <= energy + 1e-4 * alpha * decrease + roundoff_allowance(energy) {
                    accepted = Some((trial, e_trial));
                    break;
                }
                alpha *= 0.5;
            }
            match accepted {
                Some((trial, e_trial)) => {
                    u = trial;
                    energy = e_trial;
                    stats.objective_log.push(energy);
                }
                None => break,
            }
        }
        Err(Error::NonConvergence {
            solver: "displacement Newton",
            iterations: stats.iterations,
            residual: stats.final_residual,
            best: u,
        })
    }
}

/// `argmin_u E(u, z)` with `u = g_t` on Dirichlet dofs; free-dof residual ∞-norm ≤ `tol`.
pub fn solve_u(
    model: &Model,
    z: &[f64],
    g_t: &[f64],
    u_init: &[f64],
    tol: f64,
) -> Result<(Vec<f64>, SolveStats)> {
    DisplacementSolver {
        tol,
        ..Default::default()
    }
    .solve(model, z, g_t, u_init)
}
