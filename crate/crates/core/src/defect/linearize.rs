//! Numerical linearization of the defect: finite-difference columns per
//! parameter direction, with the Jacobi-extension shortcut for type-II
//! directions as an independent cross-check.

use std::collections::BTreeMap;

use crate::lattice::{Configuration, LatticeIndex, ParamVector};
use crate::mesh::{BoundaryFunction, FourierCircle};

use super::dtn::{BoundaryComponent, DtnSystem};
use super::family::{ComponentSolve, LatticeSolver};
use super::DefectError;

/// A finite-difference column report.
#[derive(Debug, Clone)]
pub struct LinearizeReport {
    pub columns: Vec<BoundaryFunction>,
    pub fd_step: f64,
    /// One-sided columns (directions that would leave the admissible range
    /// under a central stencil).
    pub one_sided: Vec<bool>,
}

/// Whether a direction would push a horizontal flux negative from the base.
fn needs_one_sided(solver: &LatticeSolver, base: &ParamVector, dir: &ParamVector, h: f64) -> bool {
    for (&key, &v) in &dir.tau_h {
        if v != 0.0 {
            let index = LatticeIndex::HNeck { i: key.0, j: key.1 };
            if solver.total_tau(index, base) - h * v.abs() < 0.0 {
                return true;
            }
        }
    }
    for (&key, &v) in &dir.tau_v {
        if v != 0.0 {
            let index = LatticeIndex::VNeck { i: key.0, j: key.1 };
            if solver.total_tau(index, base) - h * v.abs() < 0.0 {
                return true;
            }
        }
    }
    false
}

/// Finite-difference columns of the defect in the given directions, at the
/// base parameter. Central differences where admissible, second-order
/// one-sided stencils at the flux boundary.
pub fn linearize_defect(
    solver: &LatticeSolver,
    base: &ParamVector,
    directions: &[ParamVector],
    h: f64,
) -> Result<LinearizeReport, DefectError> {
    let mut columns = Vec::with_capacity(directions.len());
    let mut one_sided_flags = Vec::with_capacity(directions.len());
    let base_value = solver.eval_lambda(base)?;
    for dir in directions {
        let one_sided = needs_one_sided(solver, base, dir, h);
        let col = if one_sided {
            let f1 = solver.eval_lambda(&base.add_scaled(dir, h))?;
            let f2 = solver.eval_lambda(&base.add_scaled(dir, 2.0 * h))?;
            // (-3 f0 + 4 f1 - f2) / (2h)
            combine(&[(&base_value.capital, -3.0), (&f1.capital, 4.0), (&f2.capital, -1.0)])
                .scale(1.0 / (2.0 * h))
        } else {
            let fp = solver.eval_lambda(&base.add_scaled(dir, h))?;
            let fm = solver.eval_lambda(&base.add_scaled(dir, -h))?;
            combine(&[(&fp.capital, 1.0), (&fm.capital, -1.0)]).scale(1.0 / (2.0 * h))
        };
        columns.push(col);
        one_sided_flags.push(one_sided);
    }
    Ok(LinearizeReport { columns, fd_step: h, one_sided: one_sided_flags })
}

fn combine(terms: &[(&BoundaryFunction, f64)]) -> BoundaryFunction {
    let mut out = BoundaryFunction::new();
    for (bf, w) in terms {
        out = out.add(&bf.scale(*w));
    }
    out
}

/// Build the even-DtN system from a set of solved components (typically at
/// the background). Clamped truncation rings enter as homogeneous Dirichlet
/// boundaries.
pub fn dtn_from_solves(
    config: &Configuration,
    solves: &BTreeMap<LatticeIndex, ComponentSolve>,
    modes: usize,
) -> Result<DtnSystem, DefectError> {
    let mut components = Vec::new();
    for solve in solves.values() {
        let mut rings: Vec<(u32, Vec<u32>)> =
            solve.rings.iter().map(|(&id, ring)| (id, ring.clone())).collect();
        // Clamped rings participate as Dirichlet-zero boundaries under
        // synthetic out-of-range circle ids that belong to no pair.
        for (k, clamped) in solve.clamped_rings.iter().enumerate() {
            let synthetic = config.circles.len() as u32 + k as u32;
            rings.push((synthetic, clamped.clone()));
        }
        components.push(BoundaryComponent {
            mesh: solve.mesh.clone(),
            a_sq: solve.a_sq.clone(),
            rings,
        });
    }
    let mut pairs = Vec::new();
    for c in &config.circles {
        if c.side == crate::lattice::CircleSide::Sphere {
            pairs.push((c.id, c.partner));
        }
    }
    let radius = config.circles.first().map(|c| c.radius).unwrap_or(1.0);
    DtnSystem::assemble(components, pairs, radius, modes)
}

/// The normal component of a per-circle translation as lower-mode data on
/// that circle, in the reference frame of the tangent-sphere configuration.
pub fn rho_normal_trace(
    config: &Configuration,
    circle: u32,
    rho: nalgebra::Vector3<f64>,
    modes: usize,
) -> FourierCircle {
    let c = config.circle(circle);
    let delta = config.delta;
    let (u, v) = c.axis.frame();
    let cos_td = 1.0 - 2.0 * delta * delta;
    let sin_td = 2.0 * delta * (1.0 - delta * delta).sqrt();
    let mut f = FourierCircle::zero(modes);
    f.a0 = cos_td * rho.dot(&c.polar_dir);
    if modes >= 1 {
        f.cos[0] = sin_td * rho.dot(&u);
        f.sin[0] = sin_td * rho.dot(&v);
    }
    f
}
