//! CMC perturbations of spherical domains with fully prescribed boundary
//! curves.

use nalgebra::Point3;

use crate::fem::{fd_jacobian_triplets, newton_custom, FdPattern, NewtonOptions, SparseLu};
use crate::mesh::{discrete_mean_curvature_raw, TriMesh, VertexField};

use super::SolveError;

#[derive(Debug, Clone)]
pub struct SphericalSolution {
    pub mesh: TriMesh,
    /// Normal offsets at interior vertices (zero at boundary, where positions
    /// are prescribed).
    pub h: VertexField,
    pub target_h: f64,
    pub residual: f64,
    pub residual_history: Vec<f64>,
    /// Crude estimate of the final Newton system's inverse norm.
    pub condition_estimate: f64,
}

/// Solve for the CMC surface near the base spherical domain whose boundary
/// vertices are moved to `boundary_positions` (indexed by vertex id). The
/// unknown is the normal offset at interior vertices.
pub fn solve_spherical(
    base: &TriMesh,
    boundary_positions: &[(u32, Point3<f64>)],
    target_h: f64,
    tol: f64,
) -> Result<SphericalSolution, SolveError> {
    let nv = base.vertex_count();
    let mut prescribed: Vec<Option<Point3<f64>>> = vec![None; nv];
    for &(v, p) in boundary_positions {
        prescribed[v as usize] = Some(p);
    }
    for v in 0..nv {
        if base.is_boundary_vertex(v) && prescribed[v].is_none() {
            return Err(SolveError::Inadmissible(format!(
                "boundary vertex {v} has no prescribed position"
            )));
        }
    }
    let interior: Vec<usize> = (0..nv).filter(|&v| !base.is_boundary_vertex(v)).collect();
    let index_of: Vec<Option<usize>> = {
        let mut m = vec![None; nv];
        for (k, &v) in interior.iter().enumerate() {
            m[v] = Some(k);
        }
        m
    };
    let n = interior.len();
    let faces = base.faces.clone();
    // Rigidly pre-align the base to the prescribed boundary: the mean
    // boundary displacement is absorbed as a translation of the base, so a
    // purely translated data set reproduces the translated solution exactly.
    let mean_shift = {
        let mut s = nalgebra::Vector3::zeros();
        let mut count = 0.0;
        for &(v, p) in boundary_positions {
            s += p - base.vertices[v as usize];
            count += 1.0;
        }
        if count > 0.0 {
            s / count
        } else {
            s
        }
    };
    let base_positions: Vec<Point3<f64>> = (0..nv)
        .map(|v| prescribed[v].unwrap_or(base.vertices[v] + mean_shift))
        .collect();
    let base_normals = base.normals.clone();
    let interior_c = interior.clone();
    let mut residual = {
        let base_positions = base_positions.clone();
        let base_normals = base_normals.clone();
        let faces = faces.clone();
        move |x: &[f64]| -> Vec<f64> {
            let mut pos = base_positions.clone();
            for (k, &v) in interior_c.iter().enumerate() {
                pos[v] += x[k] * base_normals[v];
            }
            let hval = discrete_mean_curvature_raw(&pos, &faces);
            interior_c.iter().map(|&v| hval[v] - target_h).collect()
        }
    };

    let rings = base.vertex_rings();
    let mut rows_of: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (k, &v) in interior.iter().enumerate() {
        rows_of[k].push(k);
        for &w in &rings[v] {
            if let Some(r) = index_of[w as usize] {
                rows_of[k].push(r);
            }
        }
    }
    let pattern = FdPattern::new(rows_of, n);
    let mut last_trips: Vec<(usize, usize, f64)> = Vec::new();
    let mut jacobian = |res: &mut dyn FnMut(&[f64]) -> Vec<f64>,
                        x: &[f64],
                        f0: &[f64]|
     -> Vec<(usize, usize, f64)> {
        let trips = fd_jacobian_triplets(res, x, f0, &pattern, 1e-7);
        last_trips = trips.clone();
        trips
    };
    let options = NewtonOptions { tol, max_iterations: 25, fd_step: 1e-7 };
    let result = newton_custom(&mut residual, &mut jacobian, vec![0.0; n], &options)?;

    // Condition estimate from the last assembled Jacobian: a few solves with
    // alternating-sign probes bound the inverse norm from below.
    let condition_estimate = if last_trips.is_empty() || n == 0 {
        0.0
    } else {
        let lu = SparseLu::factor(n, &last_trips)?;
        let mut worst = 0.0f64;
        for probe in 0..3 {
            let v: Vec<f64> = (0..n)
                .map(|i| if (i * (probe + 3) / 2 + i % (probe + 2)) % 2 == 0 { 1.0 } else { -1.0 })
                .collect();
            let sol = lu.solve(&v);
            let norm = sol.iter().fold(0.0f64, |a, s| a.max(s.abs()));
            worst = worst.max(norm);
        }
        let jnorm: f64 = {
            let mut row_abs = vec![0.0f64; n];
            for &(i, _, v) in &last_trips {
                row_abs[i] += v.abs();
            }
            row_abs.iter().fold(0.0f64, |a, &v| a.max(v))
        };
        worst * jnorm
    };
    if condition_estimate > 1e8 {
        return Err(SolveError::Degenerate(condition_estimate));
    }

    let mut pos = base_positions.clone();
    let mut h_full = vec![0.0; nv];
    for (k, &v) in interior.iter().enumerate() {
        pos[v] += result.x[k] * base_normals[v];
        h_full[v] = result.x[k];
    }
    let hval = discrete_mean_curvature_raw(&pos, &faces);
    let mut resid = 0.0f64;
    for &v in &interior {
        resid = resid.max((hval[v] - target_h).abs());
    }
    let mesh = TriMesh::new(pos, faces)?;
    Ok(SphericalSolution {
        mesh,
        h: VertexField(h_full),
        target_h,
        residual: resid,
        residual_history: result.residual_history,
        condition_estimate,
    })
}
