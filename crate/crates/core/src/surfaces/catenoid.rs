//! Catenoidal necks: the separation law, neck meshes and boundary flux.
//!
//! The neck of flux `tau` is the minimal catenoid with waist radius
//! `sin(tau)`, which carries boundary flux exactly `2 pi sin(tau) e_z` over
//! any loop around the axis. Its boundary planes are placed at
//! `z = +- sigma(tau) = +- tau * arcosh(1 / tau)`, so the half-separation of
//! the boundary planes realizes the separation law exactly as well. The two
//! normalizations differ only at third order in `tau`.

use nalgebra::{Point3, Vector3};

use crate::mesh::{conormal, MeshError, TriMesh};
use crate::numerics::{arcosh, invert_monotone};

/// Flux value beyond which the separation law leaves its monotone branch
/// (the maximizer of `tau * arcosh(1/tau)` on `(0, 1)`).
pub const SIGMA_TAU_MAX: f64 = 0.552434124530920;

/// Separation of the neck of flux `tau`: half the distance between its
/// boundary planes, `sigma = tau * arcosh(1 / tau)`.
pub fn sigma_of_tau(tau: f64) -> Result<f64, MeshError> {
    if !(0.0..1.0).contains(&tau) {
        return Err(MeshError::Parse {
            line: 0,
            message: format!("flux parameter {tau} outside (0, 1)"),
        });
    }
    if tau == 0.0 {
        return Ok(0.0);
    }
    Ok(tau * arcosh(1.0 / tau))
}

/// Derivative of the separation law: `arcosh(1/tau) - 1/sqrt(1 - tau^2)`.
pub fn sigma_prime(tau: f64) -> Result<f64, MeshError> {
    if !(0.0 < tau && tau < 1.0) {
        return Err(MeshError::Parse {
            line: 0,
            message: format!("flux parameter {tau} outside (0, 1)"),
        });
    }
    Ok(arcosh(1.0 / tau) - 1.0 / (1.0 - tau * tau).sqrt())
}

/// Invert the separation law on its monotone branch `tau in (0, tau_max]`.
pub fn tau_of_sigma(sigma: f64) -> Result<f64, MeshError> {
    if sigma < 0.0 {
        return Err(MeshError::Parse { line: 0, message: format!("negative separation {sigma}") });
    }
    if sigma == 0.0 {
        return Ok(0.0);
    }
    let sigma_max = sigma_of_tau(SIGMA_TAU_MAX)?;
    if sigma > sigma_max {
        return Err(MeshError::Parse {
            line: 0,
            message: format!("separation {sigma} exceeds the monotone branch maximum {sigma_max}"),
        });
    }
    let mut tau = invert_monotone(
        |t| t * arcosh(1.0 / t),
        sigma,
        1e-300_f64.max(1e-18),
        SIGMA_TAU_MAX,
        1e-15,
    );
    // Newton polish.
    for _ in 0..4 {
        let f = tau * arcosh(1.0 / tau) - sigma;
        let fp = arcosh(1.0 / tau) - 1.0 / (1.0 - tau * tau).sqrt();
        if fp.abs() > 1e-14 {
            tau -= f / fp;
        }
    }
    Ok(tau.clamp(0.0, SIGMA_TAU_MAX))
}

/// Where the neck profile is cut.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutConvention {
    /// Boundary planes at `z = +- sigma(tau)`; boundary circles lie slightly
    /// outside the unit tube. Realizes the separation law exactly.
    PlanesAtSigma,
    /// Boundary circles exactly on the tube of radius 1.
    UnitTube,
}

/// Chart of a catenoidal neck of flux `tau`.
#[derive(Debug, Clone)]
pub struct NeckChart {
    pub tau: f64,
    pub cut: CutConvention,
}

impl NeckChart {
    pub fn new(tau: f64, cut: CutConvention) -> Result<NeckChart, MeshError> {
        if !(0.0 < tau && tau < 1.0) {
            return Err(MeshError::Parse {
                line: 0,
                message: format!("flux parameter {tau} outside (0, 1)"),
            });
        }
        Ok(NeckChart { tau, cut })
    }

    /// Waist radius of the profile `r = a cosh(z / a)`.
    pub fn waist_radius(&self) -> f64 {
        self.tau.sin()
    }

    /// Half-height of the cut.
    pub fn half_height(&self) -> f64 {
        let a = self.waist_radius();
        match self.cut {
            CutConvention::PlanesAtSigma => self.tau * arcosh(1.0 / self.tau),
            CutConvention::UnitTube => a * arcosh(1.0 / a),
        }
    }

    pub fn radius_at(&self, z: f64) -> f64 {
        let a = self.waist_radius();
        a * (z / a).cosh()
    }

    /// Outward unit normal of the catenoid at height `z`, azimuth `theta`.
    pub fn normal_at(&self, z: f64, theta: f64) -> Vector3<f64> {
        let a = self.waist_radius();
        let rp = (z / a).sinh();
        let denom = (1.0 + rp * rp).sqrt();
        Vector3::new(theta.cos() / denom, theta.sin() / denom, -rp / denom)
    }
}

/// Mesh a catenoidal neck. `n_around` is the boundary sample count (at least
/// 16); `n_rings` the number of profile intervals per half (the waist ring is
/// always present and marked `"waist"`).
pub fn catenoid_neck_mesh(tau: f64, n_around: usize, n_rings: usize) -> Result<TriMesh, MeshError> {
    let chart = NeckChart::new(tau, CutConvention::PlanesAtSigma)?;
    neck_mesh_from_chart(&chart, n_around, n_rings)
}

pub fn neck_mesh_from_chart(
    chart: &NeckChart,
    n_around: usize,
    n_rings: usize,
) -> Result<TriMesh, MeshError> {
    if n_around < 16 {
        return Err(MeshError::Parse {
            line: 0,
            message: format!("resolution too small: {n_around} samples around, need >= 16"),
        });
    }
    let half = chart.half_height();
    // Rows from -half to +half, including z = 0 exactly.
    let rows = 2 * n_rings.max(4);
    let mut zs = Vec::with_capacity(rows + 1);
    for k in 0..=rows {
        zs.push(half * (2.0 * k as f64 / rows as f64 - 1.0));
    }
    zs[n_rings.max(4)] = 0.0;
    build_revolved_catenoid(chart, &zs, n_around)
}

/// Mesh a neck chart at explicit profile heights `zs` (must contain 0 for the
/// waist ring to be marked).
pub fn neck_mesh_with_rows(
    chart: &NeckChart,
    zs: &[f64],
    n_around: usize,
) -> Result<TriMesh, MeshError> {
    build_revolved_catenoid(chart, zs, n_around)
}

fn build_revolved_catenoid(
    chart: &NeckChart,
    zs: &[f64],
    n_around: usize,
) -> Result<TriMesh, MeshError> {
    let rows = zs.len();
    let mut vertices = Vec::with_capacity(rows * n_around);
    let mut normals = Vec::with_capacity(rows * n_around);
    for &z in zs {
        let r = chart.radius_at(z);
        for j in 0..n_around {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / n_around as f64;
            vertices.push(Point3::new(r * theta.cos(), r * theta.sin(), z));
            normals.push(chart.normal_at(z, theta));
        }
    }
    let mut faces = Vec::with_capacity(2 * (rows - 1) * n_around);
    let idx = |k: usize, j: usize| (k * n_around + j % n_around) as u32;
    for k in 0..rows - 1 {
        // Mirror the quad diagonals about the waist plane so the triangulation
        // is exactly symmetric under the z-reflection.
        let below = zs[k] + zs[k + 1] < 0.0;
        for j in 0..n_around {
            let (a, b) = (idx(k, j), idx(k, j + 1));
            let (d, c) = (idx(k + 1, j), idx(k + 1, j + 1));
            // Outward orientation: (d theta) x (d z) points away from the axis.
            if below {
                faces.push([a, b, d]);
                faces.push([b, c, d]);
            } else {
                faces.push([a, b, c]);
                faces.push([a, c, d]);
            }
        }
    }
    let mut mesh = TriMesh::with_normals(vertices, faces, normals)?;
    let waist_row = zs.iter().position(|&z| z == 0.0);
    if let Some(k) = waist_row {
        let ring: Vec<u32> = (0..n_around).map(|j| idx(k, j)).collect();
        mesh.marked_circles.push(("waist".to_string(), ring));
    }
    Ok(mesh)
}

/// Line integral of the outward conormal over a boundary loop, by the
/// trapezoid rule on loop edges.
pub fn flux(mesh: &TriMesh, loop_id: usize) -> Result<Vector3<f64>, MeshError> {
    let lp = mesh.boundary_loops.get(loop_id).ok_or(MeshError::UnknownLoop(loop_id))?;
    let eta = conormal(mesh, loop_id)?;
    let n = lp.len();
    let mut total = Vector3::zeros();
    for k in 0..n {
        let a = mesh.vertices[lp[k] as usize];
        let b = mesh.vertices[lp[(k + 1) % n] as usize];
        let len = (b - a).norm();
        total += 0.5 * len * (eta[k] + eta[(k + 1) % n]);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_formula_value() {
        // tau = 0.1: sigma = 0.1 * ln(10 + sqrt(99)).
        let sigma = sigma_of_tau(0.1).unwrap();
        let expected = 0.1 * (10.0 + 99.0_f64.sqrt()).ln();
        assert!((sigma - expected).abs() < 1e-15);
        assert!((sigma - 0.299322).abs() < 1e-6);
    }

    #[test]
    fn sigma_small_tau_limits() {
        // sigma -> 0 while sigma / tau -> infinity as tau -> 0.
        let mut prev_ratio = 0.0;
        for &tau in &[1e-2, 1e-4, 1e-6] {
            let sigma = sigma_of_tau(tau).unwrap();
            assert!(sigma < 10.0 * tau * (1.0 / tau).ln());
            let ratio = sigma / tau;
            assert!(ratio > prev_ratio);
            prev_ratio = ratio;
        }
        assert!(prev_ratio > 10.0);
    }

    #[test]
    fn tau_sigma_round_trip() {
        let tau = 0.05;
        let sigma = sigma_of_tau(tau).unwrap();
        let back = tau_of_sigma(sigma).unwrap();
        assert!((back - tau).abs() < 1e-12, "round trip error {}", (back - tau).abs());
    }

    #[test]
    fn sigma_prime_matches_finite_differences() {
        for &tau in &[0.05, 0.1, 0.3] {
            let h = 1e-6;
            let fd = (sigma_of_tau(tau + h).unwrap() - sigma_of_tau(tau - h).unwrap()) / (2.0 * h);
            let exact = sigma_prime(tau).unwrap();
            assert!((fd - exact).abs() < 1e-6, "tau={tau}: fd={fd} exact={exact}");
        }
    }

    #[test]
    fn neck_mesh_waist_and_planes() {
        let tau = 0.1;
        let mesh = catenoid_neck_mesh(tau, 64, 24).unwrap();
        let (_, waist) = mesh
            .marked_circles
            .iter()
            .find(|(name, _)| name == "waist")
            .map(|(n, r)| (n.clone(), r.clone()))
            .unwrap();
        for &v in &waist {
            let p = mesh.vertices[v as usize];
            let r = (p.x * p.x + p.y * p.y).sqrt();
            assert!((r - tau.sin()).abs() < 1e-14);
            // Third-order agreement with the nominal waist radius tau.
            assert!((r - tau).abs() < 2e-4);
        }
        // Boundary planes exactly at +- sigma.
        let sigma = sigma_of_tau(tau).unwrap();
        for lp in &mesh.boundary_loops {
            let z = mesh.vertices[lp[0] as usize].z;
            assert!((z.abs() - sigma).abs() < 1e-14);
            for &v in lp {
                assert!((mesh.vertices[v as usize].z - z).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn neck_flux_matches_formula() {
        let tau = 0.1;
        let mesh = catenoid_neck_mesh(tau, 256, 32).unwrap();
        let top = (0..mesh.boundary_loops.len())
            .find(|&i| mesh.vertices[mesh.boundary_loops[i][0] as usize].z > 0.0)
            .unwrap();
        let f = flux(&mesh, top).unwrap();
        let expected = 2.0 * std::f64::consts::PI * tau.sin();
        assert!((f.z - expected).abs() / expected < 0.01, "flux {} vs {}", f.z, expected);
        assert!(f.x.abs() < 1e-12 && f.y.abs() < 1e-12);
        // Bottom loop carries the same vertical flux by symmetry.
        let bottom = 1 - top;
        let fb = flux(&mesh, bottom).unwrap();
        assert!((fb.z.abs() - f.z.abs()).abs() < 1e-12);
        assert!(fb.x.abs() < 1e-12 && fb.y.abs() < 1e-12);
    }

    #[test]
    fn flat_disk_flux_vanishes() {
        // Radial conormal integrates to zero over the rim.
        let n = 64;
        let mut vertices = vec![Point3::new(0.0, 0.0, 0.0)];
        let mut normals = vec![Vector3::z()];
        for j in 0..n {
            let t = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
            vertices.push(Point3::new(t.cos(), t.sin(), 0.0));
            normals.push(Vector3::z());
        }
        let mut faces = Vec::new();
        for j in 0..n {
            faces.push([0u32, 1 + j as u32, 1 + ((j + 1) % n) as u32]);
        }
        let mesh = TriMesh::with_normals(vertices, faces, normals).unwrap();
        let f = flux(&mesh, 0).unwrap();
        assert!(f.norm() < 1e-12);
        // And the conormal itself is radial.
        let eta = conormal(&mesh, 0).unwrap();
        let lp = &mesh.boundary_loops[0];
        for (k, &v) in lp.iter().enumerate() {
            let p = mesh.vertices[v as usize];
            let r = Vector3::new(p.x, p.y, 0.0).normalize();
            assert!((eta[k] - r).norm() < 1e-9);
        }
    }
}
