//! Construction and verification of complete embedded constant-mean-curvature
//! surfaces obtained by resolving tangencies in a lattice of spheres with
//! catenoidal-type necks.
//!
//! The crate is organized around a pipeline:
//!
//! 1. [`surfaces`] generates the classical building blocks (catenoidal necks,
//!    spherical domains, Delaunay profiles) as analytic charts and meshes.
//! 2. [`necksolve`] runs the nonlinear CMC graph solves that realize the neck,
//!    cap and spherical-domain families with prescribed boundary data.
//! 3. [`lattice`] assembles the truncated configuration: components, the
//!    boundary pairing, parameter vectors and the weighted/graded norms.
//! 4. [`defect`] evaluates the conormal-mismatch operator, its linearization,
//!    and the discrete Dirichlet-to-Neumann operator with its kernel.
//! 5. [`assembler`] drives the solves: symmetric background, symmetry-breaking
//!    Newton, branch matching, the embedded choice of relative translations,
//!    and the add-one-end surgery.
//! 6. [`verify`] checks the results on meshes: CMC residuals, flux, genus,
//!    self-intersections, asymptotic axis tilts, and writes reports.
//!
//! [`mesh`] supplies the discrete-surface substrate used throughout, and
//! [`fem`] the P1 finite-element machinery behind the solves.

pub mod assembler;
pub mod defect;
pub mod fem;
pub mod lattice;
pub mod mesh;
pub mod necksolve;
pub mod numerics;
pub mod surfaces;
pub mod verify;

pub use mesh::{BoundaryFunction, FourierCircle, TriMesh, VertexField};
