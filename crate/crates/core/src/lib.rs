//! Quasi-static phase-field fracture with a tension/compression energy split on P1
//! triangle meshes: a viscously penalized staggered scheme, optimality diagnostics along
//! the discrete trajectory, and tools for the vanishing-viscosity study.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod energy;
pub mod error;
pub mod evolution;
pub mod fem;
pub mod io;
pub mod material;
pub mod mesh;
pub mod oracle;
pub mod solvers;
pub mod sparse;
pub mod tensor;
pub mod viscosity;

pub use energy::{EnergyReport, Model, Slope};
pub use error::{Error, Result};
pub use evolution::{BoundaryLoad, EvolutionConfig, StepRecord, Tolerances, Trajectory};
pub use material::MaterialModel;
pub use mesh::{build_structured_mesh, EdgeMarker, TriMesh};
pub use tensor::SymTensor2;
