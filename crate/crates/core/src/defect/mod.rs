//! The defect operator: conormal-angle mismatch across paired boundary
//! circles, its linearization, the discrete Dirichlet-to-Neumann operator on
//! even boundary functions, and the kernel projections.

mod dtn;
mod family;
mod kernel;
mod linearize;

pub use dtn::{
    matched_leaf_dtn, relative_asymmetry, singular_values, BoundaryComponent, DtnSystem,
};
pub use family::{ComponentSolve, DefectValue, LatticeSolver, SolverOptions};
pub use kernel::{
    c_delta, kernel_basis_trace, kernel_projections, phase_projection_factor, KernelAxis,
};
pub use linearize::{dtn_from_solves, linearize_defect, rho_normal_trace, LinearizeReport};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DefectError {
    #[error(transparent)]
    Solve(#[from] crate::necksolve::SolveError),
    #[error(transparent)]
    Fem(#[from] crate::fem::FemError),
    #[error(transparent)]
    Mesh(#[from] crate::mesh::MeshError),
    #[error("conormal projection degenerate at circle {0} (|eta'| = {1:.3})")]
    DegenerateProjection(u32, f64),
    #[error("{0}")]
    Invalid(String),
}
