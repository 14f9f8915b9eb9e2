//! Analytic generators for the classical building blocks: catenoidal necks,
//! spherical domains, CMC caps and Delaunay profiles, plus the closed-form
//! quantities the construction pivots on.

mod catenoid;
mod delaunay;
mod revolve;
mod sphere;

pub use catenoid::{
    catenoid_neck_mesh, flux, neck_mesh_with_rows, sigma_of_tau, sigma_prime, tau_of_sigma,
    CutConvention, NeckChart, SIGMA_TAU_MAX,
};
pub use delaunay::{delaunay_solve, DelaunayError, DelaunayProfile};
pub use revolve::{revolve_profile, ProfileSample};
pub use sphere::{
    sphere_domain_mesh, spherical_cap_mesh, RemovedDisk, SphereDomainChart, SphereDomainMesh,
};

/// Mean curvature (sum of principal curvatures) of the lattice configuration:
/// spheres of radius 1/2 on the unit lattice.
pub const LATTICE_H: f64 = 4.0;

/// Sphere radius of the lattice configuration.
pub const SPHERE_RADIUS: f64 = 0.5;

/// Radius of the boundary circle cut by a ball of radius `delta` around a
/// tangency point of two radius-1/2 spheres.
pub fn excision_circle_radius(delta: f64) -> f64 {
    delta * (1.0 - delta * delta).sqrt()
}

/// Signed distance from the sphere center to the plane of that circle.
pub fn excision_plane_offset(delta: f64) -> f64 {
    0.5 - delta * delta
}

/// Polar angle of the excision circle seen from the sphere center.
pub fn excision_polar_angle(delta: f64) -> f64 {
    (1.0 - 2.0 * delta * delta).acos()
}
