//! The construction pipeline: symmetric background solve, symmetry-breaking
//! Newton for the correction block, branch matching through the
//! translational-error operator, the embedded choice of relative
//! translations, and the extra-end surgery.

mod background;
mod breaking;
mod checkpoint;
mod matching;

pub use background::solve_background;
pub use breaking::{solve_symmetry_breaking, BreakOptions, SolveState, SymDof, SymRow, SymmetricBasis};
pub use checkpoint::{read_state, write_state};
pub use matching::{
    branch_mesh, embedded_d, match_branches, translational_error, weld_output, BranchMotion,
    MatchResult, TranslationalError,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AssembleError {
    #[error(transparent)]
    Defect(#[from] crate::defect::DefectError),
    #[error(transparent)]
    Lattice(#[from] crate::lattice::LatticeError),
    #[error(transparent)]
    Mesh(#[from] crate::mesh::MeshError),
    #[error("newton diverged: {0}")]
    Diverged(String),
    #[error("{0}")]
    Invalid(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
