//! P1 finite elements on surface meshes and a sparse Newton driver with
//! colored finite-difference Jacobians.

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use thiserror::Error;

use crate::mesh::{cotan_stiffness_triplets, vertex_areas, TriMesh, VertexField};

#[derive(Debug, Error)]
pub enum FemError {
    #[error("sparse factorization failed: {0}")]
    Factorization(String),
    #[error("newton diverged after {iterations} iterations, residual history {history:?}")]
    NewtonDiverged { iterations: usize, history: Vec<f64> },
    #[error("linear system is near-singular (condition estimate {estimate:.3e})")]
    NearSingular { estimate: f64 },
}

/// Sparse matrix assembled from triplets with a cached LU factorization.
pub struct SparseLu {
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
    n: usize,
}

impl SparseLu {
    pub fn factor(n: usize, triplets: &[(usize, usize, f64)]) -> Result<SparseLu, FemError> {
        let trips: Vec<Triplet<usize, usize, f64>> =
            triplets.iter().map(|&(i, j, v)| Triplet::new(i, j, v)).collect();
        let mat = SparseColMat::try_new_from_triplets(n, n, &trips)
            .map_err(|e| FemError::Factorization(format!("{e:?}")))?;
        let lu = mat.sp_lu().map_err(|e| FemError::Factorization(format!("{e:?}")))?;
        Ok(SparseLu { lu, n })
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let b = Mat::<f64>::from_fn(self.n, 1, |i, _| rhs[i]);
        let x = self.lu.solve(&b);
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }

    /// Solve against several right-hand sides with one factorization.
    pub fn solve_many(&self, rhs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        if rhs.is_empty() {
            return Vec::new();
        }
        let b = Mat::<f64>::from_fn(self.n, rhs.len(), |i, j| rhs[j][i]);
        let x = self.lu.solve(&b);
        (0..rhs.len()).map(|j| (0..self.n).map(|i| x[(i, j)]).collect()).collect()
    }
}

/// Weak form of the stability operator `L = lap + |A|^2` on a mesh with
/// Dirichlet boundary, i.e. the matrix of `int grad u . grad v - |A|^2 u v`.
///
/// Keeps the full assembled triplets so both interior solves and weak boundary
/// fluxes (the discrete conormal-derivative functional) are available.
pub struct JacobiSystem {
    pub mesh_vertices: usize,
    pub free: Vec<usize>,
    pub index_of: Vec<Option<usize>>,
    full_triplets: Vec<(usize, usize, f64)>,
    lu: SparseLu,
}

impl JacobiSystem {
    /// Assemble with `|A|^2` given per vertex and the listed Dirichlet
    /// vertices eliminated.
    pub fn assemble(
        mesh: &TriMesh,
        a_sq: &VertexField,
        dirichlet: &[u32],
    ) -> Result<JacobiSystem, FemError> {
        let n = mesh.vertex_count();
        let areas = vertex_areas(mesh);
        let mut full = cotan_stiffness_triplets(mesh);
        for v in 0..n {
            full.push((v, v, -a_sq[v] * areas[v]));
        }
        let mut is_dirichlet = vec![false; n];
        for &d in dirichlet {
            is_dirichlet[d as usize] = true;
        }
        let mut index_of = vec![None; n];
        let mut free = Vec::new();
        for v in 0..n {
            if !is_dirichlet[v] {
                index_of[v] = Some(free.len());
                free.push(v);
            }
        }
        let reduced: Vec<(usize, usize, f64)> = full
            .iter()
            .filter_map(|&(i, j, v)| match (index_of[i], index_of[j]) {
                (Some(a), Some(b)) => Some((a, b, v)),
                _ => None,
            })
            .collect();
        let lu = SparseLu::factor(free.len(), &reduced)?;
        Ok(JacobiSystem { mesh_vertices: n, free, index_of, full_triplets: full, lu })
    }

    /// Solve `L u = 0` with the given values at the Dirichlet vertices.
    /// Returns the full vertex field including the boundary values.
    pub fn solve(&self, boundary_values: &[f64]) -> VertexField {
        // rhs = -A_ib g on free dofs.
        let mut rhs = vec![0.0; self.free.len()];
        for &(i, j, v) in &self.full_triplets {
            if let Some(fi) = self.index_of[i] {
                if self.index_of[j].is_none() {
                    rhs[fi] -= v * boundary_values[j];
                }
            }
        }
        let sol = self.lu.solve(&rhs);
        let mut u = boundary_values.to_vec();
        for (k, &v) in self.free.iter().enumerate() {
            u[v] = sol[k];
        }
        VertexField(u)
    }

    /// Weak residual `(A u)_b` at the constrained vertices: the discrete
    /// conormal-derivative functional `int u_eta phi_b ds` of the solution.
    pub fn weak_flux(&self, u: &VertexField) -> Vec<f64> {
        let mut r = vec![0.0; self.mesh_vertices];
        for &(i, j, v) in &self.full_triplets {
            if self.index_of[i].is_none() {
                r[i] += v * u[j];
            }
        }
        r
    }
}

/// Lumped boundary arc-length weights along a loop (half the two adjacent
/// edge lengths per vertex), used to turn weak fluxes into point values.
pub fn loop_lumped_lengths(mesh: &TriMesh, lp: &[u32]) -> Vec<f64> {
    let n = lp.len();
    let mut w = vec![0.0; n];
    for k in 0..n {
        let a = mesh.vertices[lp[k] as usize];
        let b = mesh.vertices[lp[(k + 1) % n] as usize];
        let len = (b - a).norm();
        w[k] += 0.5 * len;
        w[(k + 1) % n] += 0.5 * len;
    }
    w
}

/// Sparsity pattern for a finite-difference Jacobian: `rows_of[j]` lists the
/// residual rows that depend on unknown `j`.
pub struct FdPattern {
    pub rows_of: Vec<Vec<usize>>,
    colors: Vec<usize>,
    pub color_count: usize,
}

impl FdPattern {
    pub fn new(rows_of: Vec<Vec<usize>>, residual_len: usize) -> FdPattern {
        // Greedy coloring of the column conflict graph: two columns conflict
        // when they touch a common row.
        let ncols = rows_of.len();
        let mut cols_of_row: Vec<Vec<usize>> = vec![Vec::new(); residual_len];
        for (j, rows) in rows_of.iter().enumerate() {
            for &r in rows {
                cols_of_row[r].push(j);
            }
        }
        let mut colors = vec![usize::MAX; ncols];
        let mut color_count = 0;
        let mut forbidden = vec![usize::MAX; 0];
        for j in 0..ncols {
            forbidden.clear();
            forbidden.resize(color_count, usize::MAX);
            for &r in &rows_of[j] {
                for &c in &cols_of_row[r] {
                    if colors[c] != usize::MAX {
                        forbidden[colors[c]] = j;
                    }
                }
            }
            let color = (0..color_count).find(|&c| forbidden[c] != j).unwrap_or_else(|| {
                color_count += 1;
                color_count - 1
            });
            colors[j] = color;
        }
        FdPattern { rows_of, colors, color_count }
    }
}

pub struct NewtonOptions {
    pub tol: f64,
    pub max_iterations: usize,
    pub fd_step: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { tol: 1e-10, max_iterations: 25, fd_step: 1e-7 }
    }
}

pub struct NewtonResult {
    pub x: Vec<f64>,
    pub residual_history: Vec<f64>,
    pub iterations: usize,
}

/// Colored forward-difference Jacobian triplets over the pattern's rows,
/// given the residual value `f0` at `x`.
pub fn fd_jacobian_triplets(
    residual: &mut dyn FnMut(&[f64]) -> Vec<f64>,
    x: &[f64],
    f0: &[f64],
    pattern: &FdPattern,
    fd_step: f64,
) -> Vec<(usize, usize, f64)> {
    let n = x.len();
    let mut trips: Vec<(usize, usize, f64)> = Vec::new();
    for color in 0..pattern.color_count {
        let mut xp = x.to_vec();
        let mut steps = vec![0.0; n];
        for j in 0..n {
            if pattern.colors[j] == color {
                let h = fd_step * (1.0 + x[j].abs());
                xp[j] += h;
                steps[j] = h;
            }
        }
        let fp = residual(&xp);
        for j in 0..n {
            if pattern.colors[j] == color {
                for &r in &pattern.rows_of[j] {
                    trips.push((r, j, (fp[r] - f0[r]) / steps[j]));
                }
            }
        }
    }
    trips
}

/// Newton iteration with a caller-supplied Jacobian assembler and
/// backtracking line search on the sup norm.
pub fn newton_custom(
    residual: &mut dyn FnMut(&[f64]) -> Vec<f64>,
    jacobian: &mut dyn FnMut(&mut dyn FnMut(&[f64]) -> Vec<f64>, &[f64], &[f64]) -> Vec<(usize, usize, f64)>,
    x0: Vec<f64>,
    options: &NewtonOptions,
) -> Result<NewtonResult, FemError> {
    let n = x0.len();
    let mut x = x0;
    let mut history = Vec::new();
    let mut f = residual(&x);
    assert_eq!(f.len(), n, "newton requires a square system");
    for iter in 0..options.max_iterations {
        let norm = f.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        history.push(norm);
        if norm < options.tol {
            return Ok(NewtonResult { x, residual_history: history, iterations: iter });
        }
        let trips = jacobian(residual, &x, &f);
        let lu = SparseLu::factor(n, &trips)?;
        let neg_f: Vec<f64> = f.iter().map(|v| -v).collect();
        let dx = lu.solve(&neg_f);
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..10 {
            let xt: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + step * d).collect();
            let ft = residual(&xt);
            let nt = ft.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if nt < norm || nt < options.tol {
                x = xt;
                f = ft;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            return Err(FemError::NewtonDiverged { iterations: iter, history });
        }
    }
    let norm = f.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    history.push(norm);
    if norm < options.tol {
        let iterations = history.len() - 1;
        Ok(NewtonResult { x, residual_history: history, iterations })
    } else {
        Err(FemError::NewtonDiverged { iterations: options.max_iterations, history })
    }
}

/// Sparse Newton iteration with a pure forward-difference Jacobian assembled
/// in `color_count + 1` residual evaluations per iteration.
pub fn newton_sparse(
    residual: &mut dyn FnMut(&[f64]) -> Vec<f64>,
    x0: Vec<f64>,
    pattern: &FdPattern,
    options: &NewtonOptions,
) -> Result<NewtonResult, FemError> {
    let fd_step = options.fd_step;
    newton_custom(
        residual,
        &mut |res, x, f0| fd_jacobian_triplets(res, x, f0, pattern, fd_step),
        x0,
        options,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn colored_newton_quadratic() {
        // F_i = x_i^2 + 0.1 x_{i+1} - 1, tridiagonal-ish pattern.
        let n = 50;
        let rows_of: Vec<Vec<usize>> = (0..n)
            .map(|j| {
                let mut r = vec![j];
                if j > 0 {
                    r.push(j - 1);
                }
                r
            })
            .collect();
        let pattern = FdPattern::new(rows_of, n);
        assert!(pattern.color_count <= 3);
        let mut residual = |x: &[f64]| {
            (0..n)
                .map(|i| x[i] * x[i] + if i + 1 < n { 0.1 * x[i + 1] } else { 0.0 } - 1.0)
                .collect()
        };
        let res =
            newton_sparse(&mut residual, vec![0.8; n], &pattern, &NewtonOptions::default())
                .unwrap();
        let f = residual(&res.x);
        assert!(f.iter().all(|v| v.abs() < 1e-9));
        // Quadratic tail: last ratios square-ish.
        assert!(res.residual_history.len() <= 8);
    }
}
