//! The CMC cap solve: a graph over the unit disk with prescribed higher-mode
//! trace, tangent to the base plane at the center.

use nalgebra::{Point3, Vector3};

use crate::fem::{fd_jacobian_triplets, newton_custom, FdPattern, NewtonOptions};
use crate::mesh::{discrete_mean_curvature_raw, FourierCircle, TriMesh, VertexField};

use super::{SolveError, ADMISSIBLE_EPS};

#[derive(Debug, Clone)]
pub struct CapSolution {
    pub base: TriMesh,
    pub mesh: TriMesh,
    pub h: VertexField,
    /// Lower-mode trace `(a0, a1, b1)` determined by the center tangency.
    pub lower: [f64; 3],
    pub target_h: f64,
    pub residual: f64,
    pub residual_history: Vec<f64>,
    pub n_around: usize,
    pub n_rings: usize,
}

impl CapSolution {
    pub fn boundary_ring(&self) -> Vec<Point3<f64>> {
        let first = 1 + (self.n_rings - 1) * self.n_around;
        (0..self.n_around).map(|j| self.mesh.vertices[first + j]).collect()
    }
}

/// Flat unit disk mesh: center vertex 0, then `n_rings` rings of `n_around`
/// vertices; the stored normal is `sign * e_z` everywhere.
pub fn flat_disk_mesh(n_around: usize, n_rings: usize, sign: f64) -> TriMesh {
    let mut vertices = vec![Point3::origin()];
    for k in 1..=n_rings {
        let r = k as f64 / n_rings as f64;
        for j in 0..n_around {
            let t = 2.0 * std::f64::consts::PI * j as f64 / n_around as f64;
            vertices.push(Point3::new(r * t.cos(), r * t.sin(), 0.0));
        }
    }
    let ring = |k: usize, j: usize| -> u32 { (1 + (k - 1) * n_around + j % n_around) as u32 };
    let mut faces = Vec::new();
    for j in 0..n_around {
        if sign > 0.0 {
            faces.push([0u32, ring(1, j), ring(1, j + 1)]);
        } else {
            faces.push([0u32, ring(1, j + 1), ring(1, j)]);
        }
    }
    for k in 1..n_rings {
        for j in 0..n_around {
            if sign > 0.0 {
                faces.push([ring(k, j), ring(k + 1, j), ring(k + 1, j + 1)]);
                faces.push([ring(k, j), ring(k + 1, j + 1), ring(k, j + 1)]);
            } else {
                faces.push([ring(k, j), ring(k + 1, j + 1), ring(k + 1, j)]);
                faces.push([ring(k, j), ring(k, j + 1), ring(k + 1, j + 1)]);
            }
        }
    }
    let normals = vec![sign * Vector3::z(); vertices.len()];
    TriMesh::with_normals(vertices, faces, normals).expect("disk mesh is valid")
}

/// Solve for the CMC graph over the unit disk with higher-mode trace `f`,
/// `h(0) = 0` and vanishing gradient at the center. `sign` selects the stored
/// base normal `sign * e_z`; the target mean curvature is with respect to it.
pub fn solve_cap(
    f: &FourierCircle,
    target_h: f64,
    sign: f64,
    n_around: usize,
    n_rings: usize,
    tol: f64,
) -> Result<CapSolution, SolveError> {
    if f.lower().norm_sup_coeff() > 0.0 {
        return Err(SolveError::Inadmissible("cap trace carries lower modes".into()));
    }
    if f.norm_sup_coeff() > ADMISSIBLE_EPS {
        return Err(SolveError::Inadmissible(format!(
            "cap trace exceeds the admissibility bound {ADMISSIBLE_EPS}"
        )));
    }
    let base = flat_disk_mesh(n_around, n_rings, sign);
    let nv = base.vertex_count();
    let faces = base.faces.clone();
    let base_positions = base.vertices.clone();
    let base_normals = base.normals.clone();
    let theta = |j: usize| 2.0 * std::f64::consts::PI * j as f64 / n_around as f64;
    let boundary_first = 1 + (n_rings - 1) * n_around;

    let n_unknown = nv + 3;
    let f_data = f.clone();
    let mut residual = {
        let base_positions = base_positions.clone();
        let base_normals = base_normals.clone();
        let faces = faces.clone();
        move |x: &[f64]| -> Vec<f64> {
            let mut pos = base_positions.clone();
            for v in 0..nv {
                pos[v] += x[v] * base_normals[v];
            }
            let hval = discrete_mean_curvature_raw(&pos, &faces);
            let mut r = vec![0.0; n_unknown];
            for v in 0..nv {
                if v >= boundary_first {
                    let t = theta(v - boundary_first);
                    r[v] =
                        x[v] - f_data.eval(t) - (x[nv] + x[nv + 1] * t.cos() + x[nv + 2] * t.sin());
                } else {
                    r[v] = hval[v] - target_h;
                }
            }
            // Tangency normalization: value and first-ring modes 1.
            r[nv] = x[0];
            let wn = n_around as f64;
            let mut m1c = 0.0;
            let mut m1s = 0.0;
            for j in 0..n_around {
                let t = theta(j);
                m1c += 2.0 * x[1 + j] * t.cos() / wn;
                m1s += 2.0 * x[1 + j] * t.sin() / wn;
            }
            r[nv + 1] = m1c;
            r[nv + 2] = m1s;
            r
        }
    };

    let rings = base.vertex_rings();
    let mut rows_of: Vec<Vec<usize>> = vec![Vec::new(); n_unknown];
    for v in 0..nv {
        if v < boundary_first {
            rows_of[v].push(v);
        }
        for &w in &rings[v] {
            if (w as usize) < boundary_first {
                rows_of[v].push(w as usize);
            }
        }
    }
    let pattern = FdPattern::new(rows_of, n_unknown);
    let wn = n_around as f64;
    let mut jacobian = |res: &mut dyn FnMut(&[f64]) -> Vec<f64>,
                        x: &[f64],
                        f0: &[f64]|
     -> Vec<(usize, usize, f64)> {
        let mut trips = fd_jacobian_triplets(res, x, f0, &pattern, 1e-7);
        for j in 0..n_around {
            let t = theta(j);
            let vb = boundary_first + j;
            trips.push((vb, vb, 1.0));
            trips.push((vb, nv, -1.0));
            trips.push((vb, nv + 1, -t.cos()));
            trips.push((vb, nv + 2, -t.sin()));
            trips.push((nv + 1, 1 + j, 2.0 * t.cos() / wn));
            trips.push((nv + 2, 1 + j, 2.0 * t.sin() / wn));
        }
        trips.push((nv, 0, 1.0));
        trips
    };
    let options = NewtonOptions { tol, max_iterations: 25, fd_step: 1e-7 };
    let result = newton_custom(&mut residual, &mut jacobian, vec![0.0; n_unknown], &options)?;
    let x = result.x;
    let h = VertexField(x[..nv].to_vec());
    let mut pos = base.vertices.clone();
    for v in 0..nv {
        pos[v] += h[v] * base.normals[v];
    }
    let hval = discrete_mean_curvature_raw(&pos, &base.faces);
    let mut resid = 0.0f64;
    for v in 0..boundary_first {
        resid = resid.max((hval[v] - target_h).abs());
    }
    let mesh = TriMesh::new(pos, base.faces.clone())?;
    Ok(CapSolution {
        base,
        mesh,
        h,
        lower: [x[nv], x[nv + 1], x[nv + 2]],
        target_h,
        residual: resid,
        residual_history: result.residual_history,
        n_around,
        n_rings,
    })
}
