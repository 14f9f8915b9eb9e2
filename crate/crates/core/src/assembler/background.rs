//! The symmetric background: the unique rotation-invariant correction making
//! the vertical pairs match at base flux, solved on a representative column,
//! plus the horizontal-pair data making the bridge caps match the lattice
//! spheres.

use std::collections::BTreeMap;

use crate::defect::LatticeSolver;
use crate::lattice::{build_configuration, Axis, CircleSide, ParamVector, Resolution};

use super::AssembleError;

/// Solve the symmetric background of a configuration, installing the
/// calibration factor, the vertical circle offset and the horizontal pair
/// data into the solver. Returns the residual history of the offset solve.
pub fn solve_background(solver: &mut LatticeSolver, tol: f64) -> Result<Vec<f64>, AssembleError> {
    solver.calibrate()?;
    if solver.tau0 == 0.0 {
        solver.bg_offset = 0.0;
        solver.bg_rho_y = 0.0;
        solver.bg_f_horizontal = crate::mesh::FourierCircle::zero(solver.modes());
        return Ok(vec![0.0]);
    }

    // Representative sealed column: one branch, no bridges. The offset c
    // moves every vertical sphere circle axially outward; the matching
    // condition is the vanishing of the mode-0 even angle defect at a
    // mid-column vertical pair.
    let mini = build_configuration(
        0,
        2,
        &BTreeMap::new(),
        solver.config.delta,
        solver.config.tau0,
        solver.config.mu,
        Resolution {
            modes: solver.modes(),
            ..solver.config.resolution.clone()
        },
    )?;
    let mut mini_solver = LatticeSolver::new(mini);
    mini_solver.beta_tau = solver.beta_tau;
    mini_solver.tau0 = solver.tau0;
    mini_solver.options = solver.options.clone();

    let mid_pair = mid_vertical_pair(&mini_solver);
    let residual = |s: &LatticeSolver| -> Result<f64, AssembleError> {
        let value = s.eval_lambda(&ParamVector::zero())?;
        Ok(value.capital.get(mid_pair).map(|f| f.a0).unwrap_or(0.0))
    };

    // Secant iteration on the scalar offset.
    let mut history = Vec::new();
    let mut c0 = 0.0;
    mini_solver.bg_offset = c0;
    let mut r0 = residual(&mini_solver)?;
    history.push(r0.abs());
    let mut c1 = 0.5 * solver.tau0 * solver.scale;
    for _ in 0..20 {
        if r0.abs() < tol {
            break;
        }
        mini_solver.bg_offset = c1;
        let r1 = residual(&mini_solver)?;
        history.push(r1.abs());
        if r1.abs() < tol {
            c0 = c1;
            r0 = r1;
            break;
        }
        let dc = (c1 - c0) / (r1 - r0);
        let next = c1 - r1 * dc;
        c0 = c1;
        r0 = r1;
        c1 = next;
    }
    if r0.abs() >= tol {
        return Err(AssembleError::Diverged(format!(
            "background offset stalled at residual {r0:.3e}"
        )));
    }
    solver.bg_offset = c0;

    // Horizontal pairs: solve the bridge-cap data (axial offset plus even
    // cosine trace modes) so the bridge caps match the deformed spheres. The
    // representative is any bridged pair; configurations without bridges
    // skip this stage.
    let has_horizontal = solver
        .config
        .circles
        .iter()
        .any(|c| c.axis == Axis::Horizontal);
    if has_horizontal {
        solve_horizontal_background(solver, tol * 10.0)?;
    } else {
        solver.bg_rho_y = 0.0;
        solver.bg_f_horizontal = crate::mesh::FourierCircle::zero(solver.modes());
    }
    Ok(history)
}

fn mid_vertical_pair(solver: &LatticeSolver) -> u32 {
    // The sphere-side circle of the tangency between rows 0 and 1 of the
    // first column.
    solver
        .config
        .circles
        .iter()
        .find(|c| {
            c.side == CircleSide::Sphere
                && c.axis == Axis::Vertical
                && c.sphere == crate::lattice::LatticeIndex::Sphere { i: 0, j: 0 }
                && c.polar_dir.z > 0.0
        })
        .map(|c| c.id)
        .expect("column has a mid pair")
}

/// Newton over (rho_y, even cosine trace modes) of a representative bridged
/// pair at zero bridge flux, using a small bridged configuration.
fn solve_horizontal_background(
    solver: &mut LatticeSolver,
    tol: f64,
) -> Result<(), AssembleError> {
    let mut f_set = BTreeMap::new();
    f_set.insert(1, vec![0]);
    let mini = build_configuration(
        1,
        1,
        &f_set,
        solver.config.delta,
        solver.config.tau0,
        solver.config.mu,
        Resolution {
            modes: solver.modes(),
            ..solver.config.resolution.clone()
        },
    )?;
    let mut ms = LatticeSolver::new(mini);
    ms.beta_tau = solver.beta_tau;
    ms.tau0 = solver.tau0;
    ms.bg_offset = solver.bg_offset;
    ms.options = solver.options.clone();

    let modes = ms.modes();
    // Unknowns: rho_y offset plus the even cosine modes 2, 4, ... of the
    // shared horizontal trace.
    let even_modes: Vec<usize> = (2..=modes).step_by(2).collect();
    let nu = 1 + even_modes.len();
    let pair = ms
        .config
        .circles
        .iter()
        .find(|c| c.side == CircleSide::Sphere && c.axis == Axis::Horizontal)
        .map(|c| c.id)
        .expect("bridged configuration has a horizontal pair");

    let apply = |s: &mut LatticeSolver, x: &[f64]| {
        s.bg_rho_y = x[0];
        let mut f = crate::mesh::FourierCircle::zero(modes);
        for (k, &m) in even_modes.iter().enumerate() {
            f.cos[m - 1] = x[1 + k];
        }
        s.bg_f_horizontal = f;
    };
    let residual = |s: &mut LatticeSolver, x: &[f64]| -> Result<Vec<f64>, AssembleError> {
        apply(s, x);
        let value = s.eval_lambda(&ParamVector::zero())?;
        let f = value
            .capital
            .get(pair)
            .cloned()
            .unwrap_or_else(|| crate::mesh::FourierCircle::zero(modes));
        let mut r = vec![f.a0];
        for &m in &even_modes {
            r.push(f.cos[m - 1]);
        }
        Ok(r)
    };

    let mut x = vec![0.0; nu];
    let mut r = residual(&mut ms, &x)?;
    for _iter in 0..12 {
        let norm = r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if norm < tol {
            break;
        }
        // Dense finite-difference Jacobian over the few unknowns.
        let h = 1e-5;
        let mut jac = vec![vec![0.0; nu]; nu];
        for k in 0..nu {
            let mut xp = x.clone();
            xp[k] += h;
            let rp = residual(&mut ms, &xp)?;
            for row in 0..nu {
                jac[row][k] = (rp[row] - r[row]) / h;
            }
        }
        let dx = solve_dense(&mut jac, &r.iter().map(|v| -v).collect::<Vec<_>>());
        for k in 0..nu {
            x[k] += dx[k];
        }
        r = residual(&mut ms, &x)?;
    }
    let norm = r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if norm >= tol {
        return Err(AssembleError::Diverged(format!(
            "horizontal background stalled at residual {norm:.3e}"
        )));
    }
    apply(solver, &x);
    Ok(())
}

fn solve_dense(a: &mut [Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut x = b.to_vec();
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if a[r][col].abs() > a[piv][col].abs() {
                piv = r;
            }
        }
        a.swap(col, piv);
        x.swap(col, piv);
        let d = a[col][col];
        for r in col + 1..n {
            let f = a[r][col] / d;
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            x[r] -= f * x[col];
        }
    }
    for i in (0..n).rev() {
        for j in i + 1..n {
            let xj = x[j];
            x[i] -= a[i][j] * xj;
        }
        x[i] /= a[i][i];
    }
    x
}
