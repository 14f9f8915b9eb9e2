//! Surfaces of revolution from arclength profile tables.

use nalgebra::{Point3, Vector3};

use crate::mesh::{MeshError, TriMesh};

/// One arclength sample of a profile curve in the `(r, z)` half plane, with
/// the tangent angle `psi` (so `r' = cos psi`, `z' = sin psi`).
#[derive(Debug, Clone, Copy)]
pub struct ProfileSample {
    pub s: f64,
    pub r: f64,
    pub z: f64,
    pub psi: f64,
}

impl ProfileSample {
    /// Outward unit normal of the revolved surface at azimuth `theta`.
    pub fn normal(&self, theta: f64) -> Vector3<f64> {
        Vector3::new(
            self.psi.sin() * theta.cos(),
            self.psi.sin() * theta.sin(),
            -self.psi.cos(),
        )
    }

    pub fn position(&self, theta: f64, axis_offset: &Point3<f64>) -> Point3<f64> {
        axis_offset + Vector3::new(self.r * theta.cos(), self.r * theta.sin(), self.z)
    }
}

/// Revolve a profile about the z-axis through `origin`. The profile samples
/// become mesh rings in order; rings at both ends stay open boundaries.
pub fn revolve_profile(
    samples: &[ProfileSample],
    origin: Point3<f64>,
    n_around: usize,
) -> Result<TriMesh, MeshError> {
    if samples.len() < 2 || n_around < 8 {
        return Err(MeshError::Parse { line: 0, message: "profile too small to revolve".into() });
    }
    let rows = samples.len();
    let mut vertices = Vec::with_capacity(rows * n_around);
    let mut normals = Vec::with_capacity(rows * n_around);
    for sample in samples {
        for j in 0..n_around {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / n_around as f64;
            vertices.push(sample.position(theta, &origin));
            normals.push(sample.normal(theta));
        }
    }
    let idx = |k: usize, j: usize| (k * n_around + j % n_around) as u32;
    let mut faces = Vec::with_capacity(2 * (rows - 1) * n_around);
    for k in 0..rows - 1 {
        for j in 0..n_around {
            faces.push([idx(k, j), idx(k, j + 1), idx(k + 1, j)]);
            faces.push([idx(k, j + 1), idx(k + 1, j + 1), idx(k + 1, j)]);
        }
    }
    TriMesh::with_normals(vertices, faces, normals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::mean_curvature;
    use crate::surfaces::delaunay_solve;

    #[test]
    fn revolved_unduloid_mean_curvature() {
        // A posteriori check of the Delaunay solve: the revolved mesh has the
        // lattice mean curvature away from discretization error, and the
        // profile-table finite differences reproduce it far more accurately.
        let p = delaunay_solve(0.05).unwrap();
        // Table-based oracle: H = psi' + sin(psi)/r with a five-point stencil
        // on the uniform part of the table.
        let mut max_err = 0.0f64;
        for w in p.samples.windows(5) {
            let ds = w[1].s - w[0].s;
            let uniform = w.windows(2).all(|pair| ((pair[1].s - pair[0].s) - ds).abs() < 1e-12);
            if !uniform || ds < 1e-9 {
                continue;
            }
            let dpsi = (-w[4].psi + 8.0 * w[3].psi - 8.0 * w[1].psi + w[0].psi) / (12.0 * ds);
            let h = dpsi + w[2].psi.sin() / w[2].r;
            max_err = max_err.max((h - p.h).abs());
        }
        assert!(max_err / p.h < 1e-4, "table H relative error {}", max_err / p.h);

        // Mesh-level audit at moderate resolution; interior vertices only.
        let rows = p.resample(400, p.period);
        let mesh = revolve_profile(&rows, Point3::origin(), 128).unwrap();
        let h = mean_curvature(&mesh).unwrap();
        let mut max_mesh = 0.0f64;
        for v in 0..mesh.vertex_count() {
            if !mesh.is_boundary_vertex(v) {
                max_mesh = max_mesh.max((h[v] - p.h).abs());
            }
        }
        assert!(max_mesh / p.h < 0.05, "mesh H relative error {}", max_mesh / p.h);
    }
}
