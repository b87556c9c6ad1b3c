//! Discrete total energy `F = E + D`, its partial gradients, the power functional and the
//! unilateral L² slope.
//!
//! Nonlinear-in-`z` integrands use vertex quadrature, so with `w_i` the lumped weight and
//! `Q_i = Σ_{e∋i} (area_e/3)(μ|ε_d|² + κ|ε_v⁺|²)`:
//!
//! ```text
//! E(u, z) = ½ Σ_i h(z_i) Q_i + ½ Σ_e area_e κ|ε_v⁻|²
//! D(z)    = ½ zᵀKz + ½ Σ_i w_i f(z_i)
//! ```
//!
//! Every gradient here is the exact derivative of these expressions.

use crate::error::{Error, Result};
use crate::fem::{assemble_scalar_matrices, element_strain, unit_strain, ScalarMatrices};
use crate::material::MaterialModel;
use crate::mesh::TriMesh;

/// Mesh, material and the scalar matrices assembled on the mesh.
#[derive(Debug, Clone)]
pub struct Model {
    pub mesh: TriMesh,
    pub material: MaterialModel,
    pub mats: ScalarMatrices,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    pub elastic: f64,
    pub dissipation: f64,
    pub total: f64,
}

/// Unilateral slope with its maximizing direction `φ̄ ≤ 0`, `‖φ̄‖_{L²,h} = 1` (when positive).
#[derive(Debug, Clone)]
pub struct Slope {
    pub value: f64,
    pub direction: Option<Vec<f64>>,
}

impl Model {
    pub fn new(mesh: TriMesh, material: MaterialModel) -> Self {
        let mats = assemble_scalar_matrices(&mesh);
        Model { mesh, material, mats }
    }

    pub fn num_nodes(&self) -> usize {
        self.mesh.num_nodes()
    }

    pub fn lumped(&self) -> &[f64] {
        &self.mats.lumped
    }

    pub fn check_sizes(&self, u: &[f64], z: &[f64]) -> Result<()> {
        let n = self.num_nodes();
        if u.len() != 2 * n || z.len() != n {
            return Err(Error::InvalidArgument(format!(
                "field sizes ({}, {}) do not match mesh with {n} nodes",
                u.len(),
                z.len()
            )));
        }
        Ok(())
    }

    /// Per-element `(μ|ε_d|² + κ|ε_v⁺|², κ|ε_v⁻|²)`.
    pub fn element_parts(&self, u: &[f64]) -> Vec<(f64, f64)> {
        (0..self.mesh.num_triangles())
            .map(|e| self.material.split_energies(&element_strain(u, e, &self.mesh)))
            .collect()
    }

    /// Vertex-accumulated degradable energy `Q_i`.
    pub fn nodal_degradable(&self, u: &[f64]) -> Vec<f64> {
        let mut q = vec![0.0; self.num_nodes()];
        for (e, tri) in self.mesh.triangles().iter().enumerate() {
            let (qe, _) = self.material.split_energies(&element_strain(u, e, &self.mesh));
            let share = self.mesh.area(e) / 3.0 * qe;
            for &v in tri {
                q[v] += share;
            }
        }
        q
    }

    /// `½ Σ_e area_e κ|ε_v⁻|²`, the part of `E` that does not depend on `z`.
    pub fn compressive_energy(&self, u: &[f64]) -> f64 {
        self.element_parts(u)
            .iter()
            .enumerate()
            .map(|(e, (_, c))| 0.5 * self.mesh.area(e) * c)
            .sum()
    }

    pub fn elastic_energy(&self, u: &[f64], z: &[f64]) -> f64 {
        let h = &self.material.h;
        let mut acc = 0.0;
        for (e, tri) in self.mesh.triangles().iter().enumerate() {
            let (q, c) = self.material.split_energies(&element_strain(u, e, &self.mesh));
            let hbar = tri.iter().map(|&v| h.value(z[v])).sum::<f64>() / 3.0;
            acc += 0.5 * self.mesh.area(e) * (hbar * q + c);
        }
        acc
    }

    pub fn dissipation(&self, z: &[f64]) -> f64 {
        let f = &self.material.f;
        let well: f64 = self
            .mats
            .lumped
            .iter()
            .zip(z)
            .map(|(w, &zi)| w * f.value(zi))
            .sum();
        0.5 * self.mats.stiffness.quad_form(z) + 0.5 * well
    }

    pub fn total_energy(&self, u: &[f64], z: &[f64]) -> EnergyReport {
        let elastic = self.elastic_energy(u, z);
        let dissipation = self.dissipation(z);
        EnergyReport {
            elastic,
            dissipation,
            total: elastic + dissipation,
        }
    }

    /// `g_i = ½ h′(z_i) Q_i + (Kz)_i + ½ w_i f′(z_i)`.
    pub fn grad_z(&self, u: &[f64], z: &[f64]) -> Vec<f64> {
        let q = self.nodal_degradable(u);
        self.grad_z_with(&q, z)
    }

    /// `grad_z` for a precomputed `Q`.
    pub fn grad_z_with(&self, q: &[f64], z: &[f64]) -> Vec<f64> {
        let (h, f) = (&self.material.h, &self.material.f);
        let mut g = self.mats.stiffness.mul_vec(z);
        for i in 0..g.len() {
            g[i] += 0.5 * h.d1(z[i]) * q[i] + 0.5 * self.mats.lumped[i] * f.d1(z[i]);
        }
        g
    }

    /// Per-element vertex average of `h(z)`.
    pub fn element_degradation(&self, z: &[f64]) -> Vec<f64> {
        let h = &self.material.h;
        self.mesh
            .triangles()
            .iter()
            .map(|tri| tri.iter().map(|&v| h.value(z[v])).sum::<f64>() / 3.0)
            .collect()
    }

    /// Exact gradient of `E(·, z)`, all dofs (interleaved).
    pub fn residual_u(&self, u: &[f64], z: &[f64]) -> Vec<f64> {
        let hbar = self.element_degradation(z);
        let mut r = vec![0.0; u.len()];
        for (e, tri) in self.mesh.triangles().iter().enumerate() {
            let eps = element_strain(u, e, &self.mesh);
            let sigma = self.material.stress_with_factor(hbar[e], &eps);
            let g = self.mesh.basis_gradients(e);
            let scale = 0.5 * self.mesh.area(e);
            for a in 0..3 {
                r[2 * tri[a]] += scale * sigma.ddot(&unit_strain(&g[a], 0));
                r[2 * tri[a] + 1] += scale * sigma.ddot(&unit_strain(&g[a], 1));
            }
        }
        r
    }

    /// `P(u, z, w) = ∂_u F(u, z)[w]`.
    pub fn power(&self, u: &[f64], z: &[f64], w: &[f64]) -> f64 {
        self.residual_u(u, z).iter().zip(w).map(|(r, x)| r * x).sum()
    }

    pub fn unilateral_slope(&self, u: &[f64], z: &[f64]) -> Slope {
        unilateral_slope_from_gradient(&self.grad_z(u, z), &self.mats.lumped)
    }
}

/// Closed form of `sup{ −g·φ : φ ≤ 0, φᵀ diag(m) φ ≤ 1 }`, i.e. `sqrt(Σ (g_i)₊² / m_i)`.
pub fn unilateral_slope_from_gradient(g: &[f64], m: &[f64]) -> Slope {
    let value = g
        .iter()
        .zip(m)
        .map(|(gi, mi)| {
            let p = gi.max(0.0);
            p * p / mi
        })
        .sum::<f64>()
        .sqrt();
    let direction = (value > 0.0).then(|| {
        g.iter()
            .zip(m)
            .map(|(gi, mi)| -gi.max(0.0) / (mi * value))
            .collect()
    });
    Slope { value, direction }
}

pub fn total_energy(u: &[f64], z: &[f64], model: &Model) -> EnergyReport {
    model.total_energy(u, z)
}

pub fn grad_z_f(u: &[f64], z: &[f64], model: &Model) -> Vec<f64> {
    model.grad_z(u, z)
}

pub fn residual_u(u: &[f64], z: &[f64], model: &Model) -> Vec<f64> {
    model.residual_u(u, z)
}

pub fn power_p(u: &[f64], z: &[f64], w: &[f64], model: &Model) -> f64 {
    model.power(u, z, w)
}

pub fn unilateral_slope(u: &[f64], z: &[f64], model: &Model) -> Slope {
    model.unilateral_slope(u, z)
}
