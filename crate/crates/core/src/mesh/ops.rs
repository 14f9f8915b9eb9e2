//! Discrete differential operators: cotangent stiffness, lumped areas, mean
//! curvature, the stability operator, and normal graphs.

use nalgebra::{Point3, Vector3};

use super::{curvature, MeshError, TriMesh, VertexField};

pub(super) fn averaged_normals(
    vertices: &[Point3<f64>],
    faces: &[[u32; 3]],
) -> Vec<Vector3<f64>> {
    let mut normals = vec![Vector3::zeros(); vertices.len()];
    for f in faces {
        let (pa, pb, pc) = (
            vertices[f[0] as usize],
            vertices[f[1] as usize],
            vertices[f[2] as usize],
        );
        let n = (pb - pa).cross(&(pc - pa));
        for &v in f {
            normals[v as usize] += n;
        }
    }
    for n in &mut normals {
        let len = n.norm();
        if len > 0.0 {
            *n /= len;
        } else {
            *n = Vector3::z();
        }
    }
    normals
}

/// Triplets `(i, j, w)` of the cotangent stiffness matrix `K`, the positive
/// semidefinite form with `K_ii = sum_j w_ij`, `K_ij = -w_ij` and
/// `w_ij = (cot a + cot b) / 2` over the angles opposite edge `ij`.
pub fn cotan_stiffness_triplets(mesh: &TriMesh) -> Vec<(usize, usize, f64)> {
    let mut trips = Vec::with_capacity(mesh.faces.len() * 12);
    for f in &mesh.faces {
        let idx = [f[0] as usize, f[1] as usize, f[2] as usize];
        let p = [
            mesh.vertices[idx[0]],
            mesh.vertices[idx[1]],
            mesh.vertices[idx[2]],
        ];
        for k in 0..3 {
            // Angle at vertex k is opposite edge (k+1, k+2).
            let a = p[(k + 1) % 3] - p[k];
            let b = p[(k + 2) % 3] - p[k];
            let cross = a.cross(&b).norm();
            let cot = a.dot(&b) / cross.max(1e-300);
            let (i, j) = (idx[(k + 1) % 3], idx[(k + 2) % 3]);
            let w = 0.5 * cot;
            trips.push((i, i, w));
            trips.push((j, j, w));
            trips.push((i, j, -w));
            trips.push((j, i, -w));
        }
    }
    trips
}

/// Barycentric lumped vertex areas (one third of incident face areas).
pub fn vertex_areas(mesh: &TriMesh) -> Vec<f64> {
    let mut areas = vec![0.0; mesh.vertex_count()];
    for (fi, f) in mesh.faces.iter().enumerate() {
        let a = mesh.face_area(fi) / 3.0;
        for &v in f {
            areas[v as usize] += a;
        }
    }
    areas
}

/// Mixed Voronoi vertex areas: the Voronoi cell area for non-obtuse
/// triangles, with the standard obtuse-triangle fallback. Behaves much better
/// than barycentric areas on thin fan triangles.
pub fn mixed_vertex_areas(mesh: &TriMesh) -> Vec<f64> {
    let mut areas = vec![0.0; mesh.vertex_count()];
    for (fi, f) in mesh.faces.iter().enumerate() {
        let idx = [f[0] as usize, f[1] as usize, f[2] as usize];
        let p = [
            mesh.vertices[idx[0]],
            mesh.vertices[idx[1]],
            mesh.vertices[idx[2]],
        ];
        let face_area = mesh.face_area(fi);
        let mut cot = [0.0f64; 3];
        let mut obtuse = usize::MAX;
        for k in 0..3 {
            let a = p[(k + 1) % 3] - p[k];
            let b = p[(k + 2) % 3] - p[k];
            let cross = a.cross(&b).norm();
            cot[k] = a.dot(&b) / cross.max(1e-300);
            if cot[k] < 0.0 {
                obtuse = k;
            }
        }
        if obtuse == usize::MAX {
            for k in 0..3 {
                let e1 = (p[(k + 1) % 3] - p[k]).norm_squared();
                let e2 = (p[(k + 2) % 3] - p[k]).norm_squared();
                areas[idx[k]] += (e1 * cot[(k + 2) % 3] + e2 * cot[(k + 1) % 3]) / 8.0;
            }
        } else {
            for k in 0..3 {
                areas[idx[k]] += if k == obtuse { face_area / 2.0 } else { face_area / 4.0 };
            }
        }
    }
    areas
}

/// The cotangent stiffness applied to the coordinate functions,
/// `(K x)_v = sum_j w_vj (x_v - x_j)`; the discrete mean-curvature vector
/// times the vertex area in the interior, and the ingredient of variational
/// boundary-flux recovery at the boundary.
pub fn stiffness_times_positions(mesh: &TriMesh) -> Vec<Vector3<f64>> {
    apply_stiffness_positions(mesh)
}

fn apply_stiffness_positions(mesh: &TriMesh) -> Vec<Vector3<f64>> {
    let mut kx = vec![Vector3::zeros(); mesh.vertex_count()];
    for f in &mesh.faces {
        let idx = [f[0] as usize, f[1] as usize, f[2] as usize];
        let p = [
            mesh.vertices[idx[0]],
            mesh.vertices[idx[1]],
            mesh.vertices[idx[2]],
        ];
        for k in 0..3 {
            let a = p[(k + 1) % 3] - p[k];
            let b = p[(k + 2) % 3] - p[k];
            let cross = a.cross(&b).norm();
            let w = 0.5 * a.dot(&b) / cross.max(1e-300);
            let (i, j) = (idx[(k + 1) % 3], idx[(k + 2) % 3]);
            let d = p[(k + 1) % 3] - p[(k + 2) % 3];
            kx[i] += w * d;
            kx[j] -= w * d;
        }
    }
    kx
}

/// Discrete mean curvature (sum of principal curvatures) per vertex.
///
/// A round sphere of radius `R` oriented by the outward normal returns
/// `2 / R`. Boundary values are extrapolated from interior neighbors and
/// should be excluded from residual statistics.
pub fn mean_curvature(mesh: &TriMesh) -> Result<VertexField, MeshError> {
    mesh.check_degenerate()?;
    let kx = apply_stiffness_positions(mesh);
    let areas = mixed_vertex_areas(mesh);
    let mut h = vec![0.0; mesh.vertex_count()];
    for v in 0..mesh.vertex_count() {
        h[v] = kx[v].dot(&mesh.normals[v]) / areas[v];
    }
    extrapolate_boundary(mesh, &mut h);
    Ok(VertexField(h))
}

/// Discrete mean curvature from raw positions and faces in a single pass:
/// cotangent stiffness applied to positions, mixed Voronoi areas and
/// area-averaged face normals. Boundary values are returned untrusted.
pub fn discrete_mean_curvature_raw(vertices: &[Point3<f64>], faces: &[[u32; 3]]) -> Vec<f64> {
    let n = vertices.len();
    let mut kx = vec![Vector3::zeros(); n];
    let mut areas = vec![0.0f64; n];
    let mut normals = vec![Vector3::zeros(); n];
    for f in faces {
        let idx = [f[0] as usize, f[1] as usize, f[2] as usize];
        let p = [vertices[idx[0]], vertices[idx[1]], vertices[idx[2]]];
        let face_vec = (p[1] - p[0]).cross(&(p[2] - p[0]));
        let face_area = 0.5 * face_vec.norm();
        let mut cot = [0.0f64; 3];
        let mut obtuse = usize::MAX;
        for k in 0..3 {
            let a = p[(k + 1) % 3] - p[k];
            let b = p[(k + 2) % 3] - p[k];
            let cross = a.cross(&b).norm();
            cot[k] = a.dot(&b) / cross.max(1e-300);
            if cot[k] < 0.0 {
                obtuse = k;
            }
            let (i, j) = (idx[(k + 1) % 3], idx[(k + 2) % 3]);
            let d = p[(k + 1) % 3] - p[(k + 2) % 3];
            let w = 0.5 * cot[k];
            kx[i] += w * d;
            kx[j] -= w * d;
        }
        for k in 0..3 {
            normals[idx[k]] += face_vec;
            if obtuse == usize::MAX {
                let e1 = (p[(k + 1) % 3] - p[k]).norm_squared();
                let e2 = (p[(k + 2) % 3] - p[k]).norm_squared();
                areas[idx[k]] += (e1 * cot[(k + 2) % 3] + e2 * cot[(k + 1) % 3]) / 8.0;
            } else {
                areas[idx[k]] += if k == obtuse { face_area / 2.0 } else { face_area / 4.0 };
            }
        }
    }
    let mut h = vec![0.0f64; n];
    for v in 0..n {
        let nn = normals[v].norm();
        if nn > 0.0 && areas[v] > 0.0 {
            h[v] = kx[v].dot(&normals[v]) / (nn * areas[v]);
        }
    }
    h
}

/// Replace boundary values by the mean over interior one-ring neighbors,
/// falling back to the raw value where a boundary vertex has none.
pub(super) fn extrapolate_boundary(mesh: &TriMesh, values: &mut [f64]) {
    let rings = mesh.vertex_rings();
    let orig = values.to_vec();
    for v in 0..mesh.vertex_count() {
        if !mesh.is_boundary_vertex(v) {
            continue;
        }
        let mut sum = 0.0;
        let mut count = 0;
        for &n in &rings[v] {
            if !mesh.is_boundary_vertex(n as usize) {
                sum += orig[n as usize];
                count += 1;
            }
        }
        if count > 0 {
            values[v] = sum / count as f64;
        }
    }
}

/// Apply the stability operator `L = lap + |A|^2` pointwise, with `|A|^2`
/// estimated by quadric fits.
pub fn stability_apply(mesh: &TriMesh, u: &VertexField) -> Result<VertexField, MeshError> {
    let a2 = curvature::squared_second_form(mesh)?;
    stability_apply_with(mesh, u, &a2)
}

/// Apply `L = lap + |A|^2` with an externally supplied `|A|^2` field
/// (analytic for chart-generated meshes).
pub fn stability_apply_with(
    mesh: &TriMesh,
    u: &VertexField,
    a_sq: &VertexField,
) -> Result<VertexField, MeshError> {
    mesh.check_degenerate()?;
    assert_eq!(u.len(), mesh.vertex_count());
    let areas = mixed_vertex_areas(mesh);
    let mut ku = vec![0.0; mesh.vertex_count()];
    for (i, j, w) in cotan_stiffness_triplets(mesh) {
        ku[i] += w * u[j];
    }
    let mut out = vec![0.0; mesh.vertex_count()];
    for v in 0..mesh.vertex_count() {
        out[v] = -ku[v] / areas[v] + a_sq[v] * u[v];
    }
    Ok(VertexField(out))
}

/// Displace the mesh along its stored vertex normals by `u`, preserving
/// connectivity. Rejects displacements that invert faces.
pub fn normal_graph(mesh: &TriMesh, u: &VertexField) -> Result<TriMesh, MeshError> {
    assert_eq!(u.len(), mesh.vertex_count());
    let mut vertices = mesh.vertices.clone();
    for v in 0..vertices.len() {
        vertices[v] += u[v] * mesh.normals[v];
    }
    let mut inverted = Vec::new();
    for (fi, f) in mesh.faces.iter().enumerate() {
        let (pa, pb, pc) = (
            vertices[f[0] as usize],
            vertices[f[1] as usize],
            vertices[f[2] as usize],
        );
        let n = (pb - pa).cross(&(pc - pa));
        if n.dot(&mesh.face_normal(fi)) <= 0.0 {
            inverted.push(fi);
        }
    }
    if !inverted.is_empty() {
        return Err(MeshError::FaceInversion { count: inverted.len(), first: inverted[0] });
    }
    let normals = averaged_normals(&vertices, &mesh.faces);
    let mut out = TriMesh::with_normals(vertices, mesh.faces.clone(), normals)?;
    out.marked_circles = mesh.marked_circles.clone();
    Ok(out)
}
