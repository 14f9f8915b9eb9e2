//! Boundary loop extraction and outward conormal estimation.

use std::collections::HashMap;

use nalgebra::Vector3;

use super::{MeshError, TriMesh};

/// Extract ordered boundary loops from consistently oriented faces.
///
/// Every directed edge of a face that has no opposite partner is a boundary
/// edge; following these directed edges yields loops that keep the surface on
/// the left when viewed from the normal side. Errors on non-manifold or
/// inconsistently oriented edges.
pub(super) fn extract_loops(
    vertex_count: usize,
    faces: &[[u32; 3]],
) -> Result<Vec<Vec<u32>>, MeshError> {
    let mut directed: HashMap<(u32, u32), u32> = HashMap::new();
    for f in faces {
        for k in 0..3 {
            let a = f[k];
            let b = f[(k + 1) % 3];
            if directed.insert((a, b), 1).is_some() {
                return Err(MeshError::InconsistentOrientation { a, b });
            }
        }
    }
    // An undirected edge with both directions present is interior; with one
    // direction it is boundary; more than two incidences were caught above,
    // except the case of an edge shared by >2 faces in alternating directions.
    let mut next: HashMap<u32, Vec<u32>> = HashMap::new();
    for (&(a, b), _) in directed.iter() {
        if !directed.contains_key(&(b, a)) {
            next.entry(a).or_default().push(b);
        }
    }
    for (a, succs) in next.iter() {
        if succs.len() > 1 {
            return Err(MeshError::NonManifoldEdge { a: *a, b: succs[0] });
        }
    }
    let mut next_single: HashMap<u32, u32> =
        next.into_iter().map(|(a, mut v)| (a, v.pop().unwrap())).collect();
    let mut loops = Vec::new();
    let mut starts: Vec<u32> = next_single.keys().copied().collect();
    starts.sort_unstable();
    for start in starts {
        if !next_single.contains_key(&start) {
            continue;
        }
        let mut lp = vec![start];
        let mut cur = start;
        loop {
            let nxt = match next_single.remove(&cur) {
                Some(n) => n,
                None => return Err(MeshError::ShortLoop),
            };
            if nxt == start {
                break;
            }
            lp.push(nxt);
            cur = nxt;
        }
        if lp.len() < 3 {
            return Err(MeshError::ShortLoop);
        }
        loops.push(lp);
    }
    let _ = vertex_count;
    Ok(loops)
}

/// Outward unit conormals at the vertices of a boundary loop.
///
/// The conormal at each boundary vertex is `tangent × normal` where the
/// tangent is the centered difference along the loop and the normal is the
/// stored vertex normal. It is orthogonal to both by construction.
pub fn conormal(mesh: &TriMesh, loop_id: usize) -> Result<Vec<Vector3<f64>>, MeshError> {
    let lp = mesh
        .boundary_loops
        .get(loop_id)
        .ok_or(MeshError::UnknownLoop(loop_id))?;
    let n = lp.len();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let prev = mesh.vertices[lp[(k + n - 1) % n] as usize];
        let nextv = mesh.vertices[lp[(k + 1) % n] as usize];
        let tangent = (nextv - prev).normalize();
        let normal = mesh.normals[lp[k] as usize];
        out.push(tangent.cross(&normal).normalize());
    }
    Ok(out)
}
