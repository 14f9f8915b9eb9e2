//! The normalized CMC neck solve: a graph over a catenoidal neck whose trace
//! agrees with the prescribed data up to lower modes, closed by six waist
//! orthogonality constraints.

use nalgebra::{Point3, Vector3};

use crate::fem::{fd_jacobian_triplets, newton_custom, FdPattern, NewtonOptions};
use crate::mesh::{discrete_mean_curvature_raw, TriMesh, VertexField};
use crate::numerics::arcosh;
use crate::surfaces::{neck_mesh_with_rows, CutConvention, NeckChart};

use super::{NeckSpec, SolveError};

/// Result of a neck solve. Lower-mode coefficients are ordered
/// `(a0, a1, b1)` per circle.
#[derive(Debug, Clone)]
pub struct NeckSolution {
    pub base: TriMesh,
    pub mesh: TriMesh,
    pub h: VertexField,
    pub lower_bottom: [f64; 3],
    pub lower_top: [f64; 3],
    pub target_h: f64,
    /// Final sup norm of the discrete system residual.
    pub residual: f64,
    /// The six waist normalization integrals at convergence.
    pub normalization: [f64; 6],
    pub residual_history: Vec<f64>,
    pub n_around: usize,
    /// Row index of the waist ring in the structured layout.
    pub waist_row: usize,
    pub rows: usize,
}

impl NeckSolution {
    pub fn vertex(&self, row: usize, j: usize) -> usize {
        row * self.n_around + (j % self.n_around)
    }

    /// Positions of a boundary ring (row 0 = bottom, last row = top), ordered
    /// by the chart angle.
    pub fn boundary_ring(&self, top: bool) -> Vec<Point3<f64>> {
        let row = if top { self.rows - 1 } else { 0 };
        (0..self.n_around).map(|j| self.mesh.vertices[self.vertex(row, j)]).collect()
    }

    /// Waist circle center of the solved mesh.
    pub fn waist_center(&self) -> Point3<f64> {
        let mut c = Vector3::zeros();
        for j in 0..self.n_around {
            c += self.mesh.vertices[self.vertex(self.waist_row, j)].coords;
        }
        Point3::from(c / self.n_around as f64)
    }
}

/// Profile heights for a neck mesh graded toward the waist: uniform in
/// `log r` inside `r < 3 a`, then geometric out to the cut. Both row counts
/// are fixed by the resolution alone so the discretization varies smoothly
/// with the flux (finite differences in `tau` stay clean).
pub fn graded_neck_heights(chart: &NeckChart, inner_cells: usize, outer_min: usize) -> Vec<f64> {
    let a = chart.waist_radius();
    let r_end = chart.radius_at(chart.half_height());
    let r_mid = (3.0 * a).min(r_end);
    let mut rs = Vec::new();
    let inner = inner_cells.max(8);
    for k in 0..=inner {
        rs.push(a * (r_mid / a).powf(k as f64 / inner as f64));
    }
    if r_mid < r_end {
        let outer = (2 * inner + 16).max(outer_min);
        let ratio = (r_end / r_mid).powf(1.0 / outer as f64);
        for k in 1..=outer {
            rs.push(r_mid * ratio.powi(k as i32));
        }
        if let Some(last) = rs.last_mut() {
            *last = r_end;
        }
    }
    let mut zs: Vec<f64> = rs
        .iter()
        .skip(1)
        .map(|&r| a * arcosh((r / a).max(1.0)))
        .collect();
    let half = chart.half_height();
    if let Some(last) = zs.last_mut() {
        *last = half;
    }
    let mut out: Vec<f64> = zs.iter().rev().map(|z| -z).collect();
    out.push(0.0);
    out.extend(zs.iter());
    out
}

/// Solve for the normalized CMC graph over the catenoidal neck `N_tau` with
/// higher-mode trace data from `spec`.
pub fn solve_neck(
    spec: &NeckSpec,
    n_around: usize,
    inner_cells: usize,
    tol: f64,
) -> Result<NeckSolution, SolveError> {
    spec.validate()?;
    if spec.tau <= 0.0 {
        return Err(SolveError::Inadmissible("tau = 0 splits into the cap pair".into()));
    }
    let chart = NeckChart::new(spec.tau, CutConvention::UnitTube)?;
    let zs = graded_neck_heights(&chart, inner_cells, inner_cells / 2);
    let base = neck_mesh_with_rows(&chart, &zs, n_around)?;
    solve_on_base(spec, base, zs.len(), n_around, tol)
}

/// Ring-reduced solve for axisymmetric data (`f = 0`): one unknown per ring
/// plus the two mode-0 boundary scalars. The reduced system is exactly the
/// full system restricted to ring-constant fields.
pub fn solve_neck_axisymmetric(
    spec: &NeckSpec,
    n_around: usize,
    inner_cells: usize,
    tol: f64,
) -> Result<NeckSolution, SolveError> {
    spec.validate()?;
    if spec.f_bottom.norm_sup_coeff() > 0.0 || spec.f_top.norm_sup_coeff() > 0.0 {
        return Err(SolveError::Inadmissible("axisymmetric solve requires f = 0".into()));
    }
    let chart = NeckChart::new(spec.tau, CutConvention::UnitTube)?;
    let zs = graded_neck_heights(&chart, inner_cells, inner_cells / 2);
    let base = neck_mesh_with_rows(&chart, &zs, n_around)?;
    let rows = zs.len();
    let waist_row = rows / 2;
    let nv = base.vertex_count();
    let faces = base.faces.clone();
    let base_positions = base.vertices.clone();
    let base_normals = base.normals.clone();
    let s_of_row: Vec<f64> = zs
        .iter()
        .map(|&z| chart.waist_radius() * (z / chart.waist_radius()).sinh())
        .collect();

    // Unknowns: h per ring, then (c0 bottom, c0 top).
    let n_unknown = rows + 2;
    let expand = |x: &[f64]| -> Vec<f64> {
        let mut h = vec![0.0; nv];
        for k in 0..rows {
            for j in 0..n_around {
                h[k * n_around + j] = x[k];
            }
        }
        h
    };
    let delta = spec.delta;
    let ds_waist = s_of_row[waist_row + 1] - s_of_row[waist_row - 1];
    let mut residual = move |x: &[f64]| -> Vec<f64> {
        let h = expand(x);
        let mut pos = base_positions.clone();
        for v in 0..nv {
            pos[v] += h[v] * base_normals[v];
        }
        let hval = discrete_mean_curvature_raw(&pos, &faces);
        let mut r = vec![0.0; n_unknown];
        for k in 0..rows {
            if k == 0 {
                r[k] = x[k] - x[rows];
            } else if k == rows - 1 {
                r[k] = x[k] - x[rows + 1];
            } else {
                r[k] = hval[k * n_around] - delta;
            }
        }
        // Waist normalization: mode 0 of h and of its conormal derivative.
        r[rows] = x[waist_row];
        r[rows + 1] = (x[waist_row + 1] - x[waist_row - 1]) / ds_waist;
        r
    };

    let mut rows_of: Vec<Vec<usize>> = vec![Vec::new(); n_unknown];
    for k in 0..rows {
        for t in k.saturating_sub(1)..=(k + 1).min(rows - 1) {
            if t != 0 && t != rows - 1 {
                rows_of[k].push(t);
            }
        }
    }
    let pattern = FdPattern::new(rows_of, n_unknown);
    let mut jacobian = |res: &mut dyn FnMut(&[f64]) -> Vec<f64>,
                        x: &[f64],
                        f0: &[f64]|
     -> Vec<(usize, usize, f64)> {
        let mut trips = fd_jacobian_triplets(res, x, f0, &pattern, 1e-7);
        trips.push((0, 0, 1.0));
        trips.push((0, rows, -1.0));
        trips.push((rows - 1, rows - 1, 1.0));
        trips.push((rows - 1, rows + 1, -1.0));
        trips.push((rows, waist_row, 1.0));
        trips.push((rows + 1, waist_row + 1, 1.0 / ds_waist));
        trips.push((rows + 1, waist_row - 1, -1.0 / ds_waist));
        trips
    };
    let options = NewtonOptions { tol, max_iterations: 25, fd_step: 1e-7 };
    let result = newton_custom(&mut residual, &mut jacobian, vec![0.0; n_unknown], &options)?;

    let h_full = {
        let mut h = vec![0.0; nv];
        for k in 0..rows {
            for j in 0..n_around {
                h[k * n_around + j] = result.x[k];
            }
        }
        VertexField(h)
    };
    finish(
        spec, base, h_full,
        [result.x[rows], 0.0, 0.0],
        [result.x[rows + 1], 0.0, 0.0],
        rows, waist_row, n_around, &s_of_row, result.residual_history,
    )
}

fn solve_on_base(
    spec: &NeckSpec,
    base: TriMesh,
    rows: usize,
    n_around: usize,
    tol: f64,
) -> Result<NeckSolution, SolveError> {
    let chart = NeckChart::new(spec.tau, CutConvention::UnitTube)?;
    let waist_row = rows / 2;
    let nv = base.vertex_count();
    let faces = base.faces.clone();
    let base_positions = base.vertices.clone();
    let base_normals = base.normals.clone();
    let s_of_row: Vec<f64> = (0..rows)
        .map(|k| {
            let z = base.vertices[k * n_around].z;
            chart.waist_radius() * (z / chart.waist_radius()).sinh()
        })
        .collect();
    let theta = |j: usize| 2.0 * std::f64::consts::PI * j as f64 / n_around as f64;

    // Unknowns: h per vertex, then lower modes (a0, a1, b1) bottom, then top.
    let n_unknown = nv + 6;
    let delta = spec.delta;
    let f_bottom = spec.f_bottom.clone();
    let f_top = spec.f_top.clone();
    let ds_waist = s_of_row[waist_row + 1] - s_of_row[waist_row - 1];
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
            for k in 0..rows {
                for j in 0..n_around {
                    let v = k * n_around + j;
                    if k == 0 {
                        let t = theta(j);
                        r[v] = x[v]
                            - f_bottom.eval(t)
                            - (x[nv] + x[nv + 1] * t.cos() + x[nv + 2] * t.sin());
                    } else if k == rows - 1 {
                        let t = theta(j);
                        r[v] = x[v]
                            - f_top.eval(t)
                            - (x[nv + 3] + x[nv + 4] * t.cos() + x[nv + 5] * t.sin());
                    } else {
                        r[v] = hval[v] - delta;
                    }
                }
            }
            // Six waist constraints: modes 0 and 1 of h and of h_s.
            let wn = n_around as f64;
            for (slot, deriv) in [(0usize, false), (3, true)] {
                let mut m0 = 0.0;
                let mut m1c = 0.0;
                let mut m1s = 0.0;
                for j in 0..n_around {
                    let val = if deriv {
                        (x[(waist_row + 1) * n_around + j] - x[(waist_row - 1) * n_around + j])
                            / ds_waist
                    } else {
                        x[waist_row * n_around + j]
                    };
                    let t = theta(j);
                    m0 += val / wn;
                    m1c += 2.0 * val * t.cos() / wn;
                    m1s += 2.0 * val * t.sin() / wn;
                }
                r[nv + slot] = m0;
                r[nv + slot + 1] = m1c;
                r[nv + slot + 2] = m1s;
            }
            r
        }
    };

    // FD pattern over the interior curvature rows only; boundary and
    // constraint rows are linear and assembled analytically.
    let rings = base.vertex_rings();
    let mut rows_of: Vec<Vec<usize>> = vec![Vec::new(); n_unknown];
    let is_interior = |v: usize| v >= n_around && v < (rows - 1) * n_around;
    for v in 0..nv {
        if is_interior(v) {
            rows_of[v].push(v);
        }
        for &w in &rings[v] {
            if is_interior(w as usize) {
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
            let vb = j;
            trips.push((vb, vb, 1.0));
            trips.push((vb, nv, -1.0));
            trips.push((vb, nv + 1, -t.cos()));
            trips.push((vb, nv + 2, -t.sin()));
            let vt = (rows - 1) * n_around + j;
            trips.push((vt, vt, 1.0));
            trips.push((vt, nv + 3, -1.0));
            trips.push((vt, nv + 4, -t.cos()));
            trips.push((vt, nv + 5, -t.sin()));
            // Constraint rows.
            let w = waist_row * n_around + j;
            let wp = (waist_row + 1) * n_around + j;
            let wm = (waist_row - 1) * n_around + j;
            trips.push((nv, w, 1.0 / wn));
            trips.push((nv + 1, w, 2.0 * t.cos() / wn));
            trips.push((nv + 2, w, 2.0 * t.sin() / wn));
            trips.push((nv + 3, wp, 1.0 / (ds_waist * wn)));
            trips.push((nv + 3, wm, -1.0 / (ds_waist * wn)));
            trips.push((nv + 4, wp, 2.0 * t.cos() / (ds_waist * wn)));
            trips.push((nv + 4, wm, -2.0 * t.cos() / (ds_waist * wn)));
            trips.push((nv + 5, wp, 2.0 * t.sin() / (ds_waist * wn)));
            trips.push((nv + 5, wm, -2.0 * t.sin() / (ds_waist * wn)));
        }
        trips
    };
    let options = NewtonOptions { tol, max_iterations: 25, fd_step: 1e-7 };
    let result = newton_custom(&mut residual, &mut jacobian, vec![0.0; n_unknown], &options)?;
    let x = result.x;
    let h = VertexField(x[..nv].to_vec());
    finish(
        spec, base, h,
        [x[nv], x[nv + 1], x[nv + 2]],
        [x[nv + 3], x[nv + 4], x[nv + 5]],
        rows, waist_row, n_around, &s_of_row, result.residual_history,
    )
}

#[allow(clippy::too_many_arguments)]
fn finish(
    spec: &NeckSpec,
    base: TriMesh,
    h: VertexField,
    lower_bottom: [f64; 3],
    lower_top: [f64; 3],
    rows: usize,
    waist_row: usize,
    n_around: usize,
    s_of_row: &[f64],
    residual_history: Vec<f64>,
) -> Result<NeckSolution, SolveError> {
    let nv = base.vertex_count();
    let mut pos = base.vertices.clone();
    for v in 0..nv {
        pos[v] += h[v] * base.normals[v];
    }
    let hval = discrete_mean_curvature_raw(&pos, &base.faces);
    let mut residual = 0.0f64;
    for k in 1..rows - 1 {
        for j in 0..n_around {
            residual = residual.max((hval[k * n_around + j] - spec.delta).abs());
        }
    }
    let mut normalization = [0.0f64; 6];
    let wn = n_around as f64;
    let ds = s_of_row[waist_row + 1] - s_of_row[waist_row - 1];
    for j in 0..n_around {
        let t = 2.0 * std::f64::consts::PI * j as f64 / n_around as f64;
        let hv = h[waist_row * n_around + j];
        let hs = (h[(waist_row + 1) * n_around + j] - h[(waist_row - 1) * n_around + j]) / ds;
        normalization[0] += hv / wn;
        normalization[1] += 2.0 * hv * t.cos() / wn;
        normalization[2] += 2.0 * hv * t.sin() / wn;
        normalization[3] += hs / wn;
        normalization[4] += 2.0 * hs * t.cos() / wn;
        normalization[5] += 2.0 * hs * t.sin() / wn;
    }
    let mut mesh = TriMesh::new(pos, base.faces.clone())?;
    mesh.marked_circles = base.marked_circles.clone();
    Ok(NeckSolution {
        base,
        mesh,
        h,
        lower_bottom,
        lower_top,
        target_h: spec.delta,
        residual,
        normalization,
        residual_history,
        n_around,
        waist_row,
        rows,
    })
}
