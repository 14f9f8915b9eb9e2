//! Indexed triangle meshes with oriented boundary loops, the discrete
//! differential operators on them, and Fourier analysis on boundary circles.

#[cfg(test)]
mod tests;

mod boundary;
mod curvature;
mod fourier;
mod io;
mod ops;

pub use boundary::conormal;
pub use curvature::{fitted_normal as curvature_fitted_normal, principal_curvatures, squared_second_form};
pub use fourier::{circle_fourier, BoundaryFunction, FourierCircle};
pub use io::{read_obj, read_ply, write_obj, write_ply};
pub use ops::{
    cotan_stiffness_triplets, discrete_mean_curvature_raw, mean_curvature, mixed_vertex_areas,
    normal_graph, stability_apply, stability_apply_with, stiffness_times_positions, vertex_areas,
};

use nalgebra::{Point3, Vector3};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("mesh has no faces")]
    Empty,
    #[error("face {face} references vertex {vertex} out of range {count}")]
    VertexOutOfRange { face: usize, vertex: u32, count: usize },
    #[error("edge ({a}, {b}) is shared by more than two faces")]
    NonManifoldEdge { a: u32, b: u32 },
    #[error("edge ({a}, {b}) is traversed twice in the same direction; orientation is inconsistent")]
    InconsistentOrientation { a: u32, b: u32 },
    #[error("vertex normal {vertex} has length {len}, expected unit within 1e-12")]
    NonUnitNormal { vertex: usize, len: f64 },
    #[error("{count} degenerate faces (area below {threshold:.3e} of mean face area), first: {first}")]
    DegenerateFaces { count: usize, threshold: f64, first: usize },
    #[error("boundary loop id {0} unknown")]
    UnknownLoop(usize),
    #[error("normal graph inverts {count} faces, first: {first}")]
    FaceInversion { count: usize, first: usize },
    #[error("boundary loop has fewer than 3 vertices")]
    ShortLoop,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Scalar data attached to every vertex of a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexField(pub Vec<f64>);

impl VertexField {
    pub fn zeros(n: usize) -> Self {
        VertexField(vec![0.0; n])
    }

    pub fn constant(n: usize, value: f64) -> Self {
        VertexField(vec![value; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Exact distance from `p` to the triangle `(a, b, c)`.
pub fn point_triangle_distance(
    p: &Point3<f64>,
    a: &Point3<f64>,
    b: &Point3<f64>,
    c: &Point3<f64>,
) -> f64 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return ap.norm();
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return bp.norm();
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (ap - v * ab).norm();
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return cp.norm();
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (ap - w * ac).norm();
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        let proj = b + w * (c - b);
        return (p - proj).norm();
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (p - (a + ab * v + ac * w)).norm()
}

impl std::ops::Index<usize> for VertexField {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl std::ops::IndexMut<usize> for VertexField {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

/// Indexed triangle mesh with consistently oriented faces, per-vertex unit
/// normals, and ordered boundary loops.
///
/// Boundary loops are ordered so that walking a loop keeps the surface on the
/// left when seen from the normal side; the outward conormal is then
/// `tangent × normal`.
#[derive(Debug, Clone)]
pub struct TriMesh {
    pub vertices: Vec<Point3<f64>>,
    pub faces: Vec<[u32; 3]>,
    pub normals: Vec<Vector3<f64>>,
    pub boundary_loops: Vec<Vec<u32>>,
    /// Interior vertex rings carrying a label, e.g. the waist of a neck.
    pub marked_circles: Vec<(String, Vec<u32>)>,
    boundary_flag: Vec<bool>,
}

impl TriMesh {
    /// Build a mesh from vertices and faces, computing area-weighted vertex
    /// normals. Boundary loops are extracted from the face orientation.
    pub fn new(vertices: Vec<Point3<f64>>, faces: Vec<[u32; 3]>) -> Result<TriMesh, MeshError> {
        let normals = ops::averaged_normals(&vertices, &faces);
        Self::with_normals(vertices, faces, normals)
    }

    /// Build a mesh with externally supplied (typically analytic) unit normals.
    pub fn with_normals(
        vertices: Vec<Point3<f64>>,
        faces: Vec<[u32; 3]>,
        normals: Vec<Vector3<f64>>,
    ) -> Result<TriMesh, MeshError> {
        if faces.is_empty() {
            return Err(MeshError::Empty);
        }
        for (fi, f) in faces.iter().enumerate() {
            for &v in f {
                if v as usize >= vertices.len() {
                    return Err(MeshError::VertexOutOfRange {
                        face: fi,
                        vertex: v,
                        count: vertices.len(),
                    });
                }
            }
        }
        for (vi, n) in normals.iter().enumerate() {
            let len = n.norm();
            if (len - 1.0).abs() > 1e-12 {
                return Err(MeshError::NonUnitNormal { vertex: vi, len });
            }
        }
        let boundary_loops = boundary::extract_loops(vertices.len(), &faces)?;
        let mut boundary_flag = vec![false; vertices.len()];
        for lp in &boundary_loops {
            for &v in lp {
                boundary_flag[v as usize] = true;
            }
        }
        Ok(TriMesh {
            vertices,
            faces,
            normals,
            boundary_loops,
            marked_circles: Vec::new(),
            boundary_flag,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_flag[v]
    }

    pub fn face_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.faces[f];
        let (pa, pb, pc) = (
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        );
        0.5 * (pb - pa).cross(&(pc - pa)).norm()
    }

    pub fn face_normal(&self, f: usize) -> Vector3<f64> {
        let [a, b, c] = self.faces[f];
        let (pa, pb, pc) = (
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        );
        (pb - pa).cross(&(pc - pa)).normalize()
    }

    /// Reject meshes containing degenerate faces. The threshold is relative to
    /// the mean face area.
    pub fn check_degenerate(&self) -> Result<(), MeshError> {
        let mean: f64 =
            self.faces.iter().enumerate().map(|(i, _)| self.face_area(i)).sum::<f64>()
                / self.faces.len() as f64;
        let threshold = 1e-14;
        let mut first = usize::MAX;
        let mut count = 0;
        for i in 0..self.faces.len() {
            if self.face_area(i) < threshold * mean {
                count += 1;
                if first == usize::MAX {
                    first = i;
                }
            }
        }
        if count > 0 {
            return Err(MeshError::DegenerateFaces { count, threshold, first });
        }
        Ok(())
    }

    /// One-ring vertex neighborhoods.
    pub fn vertex_rings(&self) -> Vec<Vec<u32>> {
        let mut rings: Vec<Vec<u32>> = vec![Vec::new(); self.vertices.len()];
        for f in &self.faces {
            for k in 0..3 {
                let a = f[k] as usize;
                let b = f[(k + 1) % 3];
                if !rings[a].contains(&b) {
                    rings[a].push(b);
                }
                let bb = f[(k + 1) % 3] as usize;
                if !rings[bb].contains(&f[k]) {
                    rings[bb].push(f[k]);
                }
            }
        }
        rings
    }

    /// Translate the whole mesh rigidly.
    pub fn translate(&mut self, t: Vector3<f64>) {
        for v in &mut self.vertices {
            *v += t;
        }
    }

    /// Distance from a point to the mesh surface (exact point-triangle
    /// distance, brute force over faces).
    pub fn distance_to_point(&self, p: &Point3<f64>) -> f64 {
        let mut best = f64::MAX;
        for f in &self.faces {
            let d = point_triangle_distance(
                p,
                &self.vertices[f[0] as usize],
                &self.vertices[f[1] as usize],
                &self.vertices[f[2] as usize],
            );
            best = best.min(d);
        }
        best
    }

    /// Euler characteristic `V - E + F`; edges counted from the face set.
    pub fn euler_characteristic(&self) -> i64 {
        use std::collections::HashSet;
        let mut edges: HashSet<(u32, u32)> = HashSet::new();
        for f in &self.faces {
            for k in 0..3 {
                let a = f[k];
                let b = f[(k + 1) % 3];
                edges.insert((a.min(b), a.max(b)));
            }
        }
        self.vertices.len() as i64 - edges.len() as i64 + self.faces.len() as i64
    }
}
