//! Nonlinear CMC graph solves: the neck family with waist normalization, the
//! cap family with center tangency, and spherical domains with prescribed
//! boundary curves.

#[cfg(test)]
mod tests;

mod cap;
mod neck;
mod spherical;

pub use cap::{flat_disk_mesh, solve_cap, CapSolution};
pub use neck::{graded_neck_heights, solve_neck, solve_neck_axisymmetric, NeckSolution};
pub use spherical::{solve_spherical, SphericalSolution};

use thiserror::Error;

use crate::fem::FemError;
use crate::mesh::MeshError;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error("parameter out of admissible range: {0}")]
    Inadmissible(String),
    #[error("nondegeneracy failure: condition estimate {0:.3e} exceeds 1e8")]
    Degenerate(f64),
}

/// Specification of one CMC neck solve. `tau` is the flux of the underlying
/// catenoid, `delta` the target mean curvature of the solve (the family
/// label; rescaling by `1/delta` yields unit mean curvature), and `f_bottom`,
/// `f_top` the higher-mode Dirichlet data on the two boundary circles. The
/// phase rotation is applied to the solved mesh afterwards, not inside the
/// solve.
#[derive(Debug, Clone)]
pub struct NeckSpec {
    pub tau: f64,
    pub delta: f64,
    pub f_bottom: crate::mesh::FourierCircle,
    pub f_top: crate::mesh::FourierCircle,
}

/// Admissibility threshold for `tau` and boundary data, in family units.
pub const ADMISSIBLE_EPS: f64 = 0.05;

impl NeckSpec {
    pub fn axisymmetric(tau: f64, delta: f64) -> NeckSpec {
        NeckSpec {
            tau,
            delta,
            f_bottom: crate::mesh::FourierCircle::zero(0),
            f_top: crate::mesh::FourierCircle::zero(0),
        }
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        if !(0.0..1.0).contains(&self.tau) {
            return Err(SolveError::Inadmissible(format!("tau = {}", self.tau)));
        }
        for (name, f) in [("f_bottom", &self.f_bottom), ("f_top", &self.f_top)] {
            if f.lower().norm_sup_coeff() > 0.0 {
                return Err(SolveError::Inadmissible(format!(
                    "{name} carries lower modes; only modes >= 2 are admissible"
                )));
            }
            if f.norm_sup_coeff() > ADMISSIBLE_EPS {
                return Err(SolveError::Inadmissible(format!(
                    "{name} exceeds the admissibility bound {ADMISSIBLE_EPS}"
                )));
            }
        }
        Ok(())
    }
}
