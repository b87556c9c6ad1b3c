//! Element strains, scalar mass/stiffness matrices and the discrete norms built on them.

use crate::mesh::TriMesh;
use crate::sparse::{SparseMatrix, TripletBuilder};
use crate::tensor::SymTensor2;

/// Symmetric gradient of the P1 interpolant of `u` on element `elem`.
pub fn element_strain(u: &[f64], elem: usize, mesh: &TriMesh) -> SymTensor2 {
    let tri = mesh.triangles()[elem];
    let g = mesh.basis_gradients(elem);
    let (mut xx, mut yy, mut xy) = (0.0, 0.0, 0.0);
    for a in 0..3 {
        let (ux, uy) = (u[2 * tri[a]], u[2 * tri[a] + 1]);
        xx += ux * g[a][0];
        yy += uy * g[a][1];
        xy += 0.5 * (ux * g[a][1] + uy * g[a][0]);
    }
    SymTensor2::new(xx, yy, xy)
}

/// Strain produced by a unit value of local dof `(a, comp)` on an element.
pub(crate) fn unit_strain(grad: &[f64; 2], comp: usize) -> SymTensor2 {
    if comp == 0 {
        SymTensor2::new(grad[0], 0.0, 0.5 * grad[1])
    } else {
        SymTensor2::new(0.0, grad[1], 0.5 * grad[0])
    }
}

#[derive(Debug, Clone)]
pub struct ScalarMatrices {
    /// Row-sum lumped mass; equals the vertex-quadrature weights `Σ_e area_e / 3`.
    pub lumped: Vec<f64>,
    pub consistent: SparseMatrix,
    /// Neumann P1 stiffness.
    pub stiffness: SparseMatrix,
}

pub fn assemble_scalar_matrices(mesh: &TriMesh) -> ScalarMatrices {
    let n = mesh.num_nodes();
    let mut mass = TripletBuilder::new(n);
    let mut stiff = TripletBuilder::new(n);
    let mut lumped = vec![0.0; n];
    for (e, tri) in mesh.triangles().iter().enumerate() {
        let area = mesh.area(e);
        let g = mesh.basis_gradients(e);
        for a in 0..3 {
            lumped[tri[a]] += area / 3.0;
            for b in 0..3 {
                let m = if a == b { area / 6.0 } else { area / 12.0 };
                mass.push(tri[a], tri[b], m);
                stiff.push(tri[a], tri[b], area * (g[a][0] * g[b][0] + g[a][1] * g[b][1]));
            }
        }
    }
    ScalarMatrices {
        lumped,
        consistent: mass.build(),
        stiffness: stiff.build(),
    }
}

impl ScalarMatrices {
    /// `‖v‖²_{L²,h} = vᵀ M_lumped v`.
    pub fn l2_sq(&self, v: &[f64]) -> f64 {
        self.lumped.iter().zip(v).map(|(m, x)| m * x * x).sum()
    }

    pub fn l2(&self, v: &[f64]) -> f64 {
        self.l2_sq(v).sqrt()
    }

    /// `‖v‖²_{H¹,h} = vᵀ (M_lumped + K) v`.
    pub fn h1_sq(&self, v: &[f64]) -> f64 {
        self.l2_sq(v) + self.stiffness.quad_form(v)
    }

    pub fn h1(&self, v: &[f64]) -> f64 {
        self.h1_sq(v).sqrt()
    }

    /// Componentwise `H¹,h` norm squared of an interleaved vector field.
    pub fn h1_sq_vector(&self, u: &[f64]) -> f64 {
        let (x, y) = split_components(u);
        self.h1_sq(&x) + self.h1_sq(&y)
    }

    pub fn h1_vector(&self, u: &[f64]) -> f64 {
        self.h1_sq_vector(u).sqrt()
    }

    pub fn l2_sq_vector(&self, u: &[f64]) -> f64 {
        let (x, y) = split_components(u);
        self.l2_sq(&x) + self.l2_sq(&y)
    }
}

pub fn split_components(u: &[f64]) -> (Vec<f64>, Vec<f64>) {
    (
        u.iter().step_by(2).copied().collect(),
        u.iter().skip(1).step_by(2).copied().collect(),
    )
}

/// Difference `a − b` of two equally sized fields.
pub fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}
