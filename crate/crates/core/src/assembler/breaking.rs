//! The symmetry-breaking solve: given the free bridge parameters, find the
//! correction block (vertical neck scalars, chain fluxes, boundary
//! translations and higher-mode traces) annihilating the defect.
//!
//! The reflection symmetry through the `{z = 0}` plane and through the
//! lattice plane `{x = 0}` is imposed structurally: unknowns live on a
//! fundamental domain and expand by the reflection actions, which halves the
//! system. The linearization combines Jacobi-extension columns for the
//! type-II block (assembled once per solve from the factored background
//! operators) with localized finite-difference columns for the type-I
//! scalars; the kernel directions are deflated by a truncated-SVD
//! minimum-norm Newton step. The residual is taken in delta form against the
//! background's own discrete defect, so the zero perturbation is an exact
//! root.

use std::collections::BTreeMap;

use faer::prelude::*;

use crate::defect::{ComponentSolve, DefectValue, LatticeSolver};
use crate::lattice::{Axis, CircleSide, LatticeIndex, ParamVector};
use crate::mesh::{BoundaryFunction, FourierCircle};

use super::AssembleError;

/// One symmetric degree of freedom of the correction block.
#[derive(Debug, Clone, PartialEq)]
pub enum SymDof {
    /// Vertical neck flux at rows `j >= 1` (row 0 pinned by convention),
    /// mirrored evenly to `(i, -j-1)`.
    TauV { i: i64, j: i64 },
    /// Vertical neck phase at rows `j >= 0`, mirrored oddly.
    PhiV { i: i64, j: i64 },
    /// Chain neck flux (self-mirrored).
    TauChain { i: i64 },
    /// Boundary translation component on a fundamental-domain circle:
    /// `component` 0 is `e_y`, 1 is `e_z`.
    Rho { circle: u32, component: usize },
    /// Higher-mode trace coefficient on a fundamental-domain pair:
    /// `(mode, is_sin)`.
    F { pair: u32, mode: usize, is_sin: bool },
}

/// One residual functional: a surviving defect coefficient at a
/// fundamental-domain pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SymRow {
    pub pair: u32,
    pub mode: usize,
    pub is_sin: bool,
}

/// The symmetric reduction: dof list, row list, and the expansion maps.
pub struct SymmetricBasis {
    pub dofs: Vec<SymDof>,
    pub rows: Vec<SymRow>,
}

impl SymmetricBasis {
    pub fn build(solver: &LatticeSolver) -> SymmetricBasis {
        let config = &solver.config;
        let modes = solver.modes();
        let mut dofs = Vec::new();
        for neck in &config.necks {
            match neck.index {
                LatticeIndex::VNeck { i, j } => {
                    if j >= 1 {
                        dofs.push(SymDof::TauV { i, j });
                    }
                    if j >= 0 {
                        dofs.push(SymDof::PhiV { i, j });
                    }
                }
                LatticeIndex::HNeck { i, j: 0 } if i <= -2 => {
                    dofs.push(SymDof::TauChain { i });
                }
                _ => {}
            }
        }
        // Fundamental-domain circles: vertical circles with polar row
        // above the plane, plus horizontal circles at rows j >= 0.
        for c in &config.circles {
            if c.side != CircleSide::Sphere {
                continue;
            }
            let LatticeIndex::Sphere { j, .. } = c.sphere else { unreachable!() };
            match c.axis {
                Axis::Vertical => {
                    let keep = j > 0 || (j == 0 && c.polar_dir.z > 0.0);
                    if keep {
                        dofs.push(SymDof::Rho { circle: c.id, component: 0 });
                        dofs.push(SymDof::Rho { circle: c.id, component: 1 });
                    }
                }
                Axis::Horizontal => {
                    if j > 0 {
                        dofs.push(SymDof::Rho { circle: c.id, component: 0 });
                        dofs.push(SymDof::Rho { circle: c.id, component: 1 });
                    } else if j == 0 {
                        dofs.push(SymDof::Rho { circle: c.id, component: 0 });
                    }
                }
            }
        }
        // Higher-mode trace coefficients per fundamental pair.
        let mut rows = Vec::new();
        for c in &config.circles {
            if c.side != CircleSide::Sphere {
                continue;
            }
            let LatticeIndex::Sphere { j, .. } = c.sphere else { unreachable!() };
            match c.axis {
                Axis::Vertical => {
                    if !(j > 0 || (j == 0 && c.polar_dir.z > 0.0)) {
                        continue;
                    }
                    // Survivors of the x-reflection: even cosines, odd sines.
                    rows.push(SymRow { pair: c.id, mode: 0, is_sin: false });
                    rows.push(SymRow { pair: c.id, mode: 1, is_sin: true });
                    for m in 2..=modes {
                        if m % 2 == 0 {
                            rows.push(SymRow { pair: c.id, mode: m, is_sin: false });
                            dofs.push(SymDof::F { pair: c.id, mode: m, is_sin: false });
                        } else {
                            rows.push(SymRow { pair: c.id, mode: m, is_sin: true });
                            dofs.push(SymDof::F { pair: c.id, mode: m, is_sin: true });
                        }
                    }
                }
                Axis::Horizontal => {
                    if j > 0 {
                        for m in 0..=modes {
                            rows.push(SymRow { pair: c.id, mode: m, is_sin: false });
                            if m >= 2 {
                                dofs.push(SymDof::F { pair: c.id, mode: m, is_sin: false });
                            }
                        }
                    } else if j == 0 {
                        for m in (0..=modes).step_by(2) {
                            rows.push(SymRow { pair: c.id, mode: m, is_sin: false });
                            if m >= 2 {
                                dofs.push(SymDof::F { pair: c.id, mode: m, is_sin: false });
                            }
                        }
                    }
                }
            }
        }
        SymmetricBasis { dofs, rows }
    }

    /// Expand reduced coordinates into a full parameter vector by the
    /// reflection actions.
    pub fn expand(&self, solver: &LatticeSolver, x: &[f64]) -> ParamVector {
        let config = &solver.config;
        let modes = solver.modes();
        let mut xi = ParamVector::zero();
        for (dof, &v) in self.dofs.iter().zip(x) {
            match *dof {
                SymDof::TauV { i, j } => {
                    *xi.tau_v.entry((i, j)).or_insert(0.0) += v;
                    *xi.tau_v.entry((i, -j - 1)).or_insert(0.0) += v;
                }
                SymDof::PhiV { i, j } => {
                    *xi.phi_v.entry((i, j)).or_insert(0.0) += v;
                    *xi.phi_v.entry((i, -j - 1)).or_insert(0.0) -= v;
                }
                SymDof::TauChain { i } => {
                    *xi.tau_h.entry((i, 0)).or_insert(0.0) += v;
                }
                SymDof::Rho { circle, component } => {
                    let e = if component == 0 {
                        nalgebra::Vector3::y()
                    } else {
                        nalgebra::Vector3::z()
                    };
                    let entry = xi.rho.entry(circle).or_insert_with(nalgebra::Vector3::zeros);
                    *entry += v * e;
                    let image = crate::lattice::reflect_circle_z(config, circle);
                    if image != circle {
                        let mirrored = nalgebra::Vector3::new(0.0, e.y, -e.z);
                        let entry = xi.rho.entry(image).or_insert_with(nalgebra::Vector3::zeros);
                        *entry += v * mirrored;
                    }
                }
                SymDof::F { pair, mode, is_sin } => {
                    let mut f = xi
                        .f
                        .get(pair)
                        .cloned()
                        .unwrap_or_else(|| FourierCircle::zero(modes));
                    if is_sin {
                        f.sin[mode - 1] += v;
                    } else {
                        f.cos[mode - 1] += v;
                    }
                    xi.f.set(pair, f.clone());
                    let image = crate::lattice::reflect_circle_z(config, pair);
                    if image != pair {
                        let axis = config.circle(pair).axis;
                        let mut single = FourierCircle::zero(modes);
                        if is_sin {
                            single.sin[mode - 1] = v;
                        } else {
                            single.cos[mode - 1] = v;
                        }
                        let reflected = crate::lattice::reflect_fourier_z(&single, axis);
                        let existing = xi
                            .f
                            .get(image)
                            .cloned()
                            .unwrap_or_else(|| FourierCircle::zero(modes));
                        xi.f.set(image, existing.add(&reflected));
                    }
                }
            }
        }
        xi
    }

    /// Read the reduced residual out of a defect value, averaging each row
    /// with its reflected partner.
    pub fn readout(&self, solver: &LatticeSolver, capital: &BoundaryFunction) -> Vec<f64> {
        let config = &solver.config;
        let modes = solver.modes();
        let coeff = |pair: u32, mode: usize, is_sin: bool| -> f64 {
            let f = match capital.get(pair) {
                Some(f) => f.clone(),
                None => FourierCircle::zero(modes),
            };
            if mode == 0 {
                f.a0
            } else if is_sin {
                f.sin[mode - 1]
            } else {
                f.cos[mode - 1]
            }
        };
        self.rows
            .iter()
            .map(|row| {
                let direct = coeff(row.pair, row.mode, row.is_sin);
                let image = crate::lattice::reflect_circle_z(config, row.pair);
                if image == row.pair {
                    direct
                } else {
                    // Coefficient of the mirrored function at the image pair.
                    let axis = config.circle(row.pair).axis;
                    let mirrored = {
                        let f = match capital.get(image) {
                            Some(f) => f.clone(),
                            None => FourierCircle::zero(modes),
                        };
                        let r = crate::lattice::reflect_fourier_z(&f, axis);
                        if row.mode == 0 {
                            r.a0
                        } else if row.is_sin {
                            r.sin[row.mode - 1]
                        } else {
                            r.cos[row.mode - 1]
                        }
                    };
                    0.5 * (direct + mirrored)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct BreakOptions {
    pub tol: f64,
    pub max_iterations: usize,
    pub fd_step: f64,
    /// Relative singular-value threshold of the minimum-norm step.
    pub svd_threshold: f64,
}

impl Default for BreakOptions {
    fn default() -> Self {
        BreakOptions { tol: 1e-9, max_iterations: 14, fd_step: 1e-4, svd_threshold: 1e-6 }
    }
}

/// Converged state of the symmetry-breaking solve.
pub struct SolveState {
    pub v: ParamVector,
    pub e: ParamVector,
    pub e_reduced: Vec<f64>,
    pub residual_history: Vec<f64>,
    /// Sup norm of the background's own discrete defect (the delta-form
    /// subtraction).
    pub background_defect: f64,
    pub solves: BTreeMap<LatticeIndex, ComponentSolve>,
}

/// Solve the correction block at fixed bridge parameters `v`.
pub fn solve_symmetry_breaking(
    solver: &LatticeSolver,
    v: &ParamVector,
    options: &BreakOptions,
) -> Result<SolveState, AssembleError> {
    let basis = SymmetricBasis::build(solver);
    let background_solves = solver.solve_all(&ParamVector::zero())?;
    let background_value = solver.lambda_of_solves(&background_solves)?;
    let r0 = basis.readout(solver, &background_value.capital);
    let background_defect = background_value.capital.norm_sup_coeff();

    // Every Jacobian column by localized one-sided finite differences: only
    // the components a degree of freedom touches are re-solved. The assembly
    // can be refreshed at a later state when the frozen linearization stops
    // making progress (the bridge necks change type as their flux leaves
    // zero).
    let h = options.fd_step;
    let assemble = |at: &ParamVector,
                    solves_at: &BTreeMap<LatticeIndex, ComponentSolve>,
                    lambda_at: &BoundaryFunction,
                    r_at: &[f64]|
     -> Result<Mat<f64>, AssembleError> {
        let mut jac = Mat::<f64>::zeros(basis.rows.len(), basis.dofs.len());
        for col in 0..basis.dofs.len() {
            let mut unit = vec![0.0; basis.dofs.len()];
            unit[col] = 1.0;
            let dxi = basis.expand(solver, &unit);
            let scaled = at.add_scaled(&dxi, h);
            let perturbed = lambda_perturbed(solver, solves_at, lambda_at, &scaled)?;
            let rp = basis.readout(solver, &perturbed);
            for row in 0..basis.rows.len() {
                jac[(row, col)] = (rp[row] - r_at[row]) / h;
            }
        }
        Ok(jac)
    };
    let jac = assemble(
        &v.add_scaled(&ParamVector::zero(), 0.0),
        &background_solves,
        &background_value.lambda,
        &r0,
    )?;

    // Gauge rows: rigid per-column translations along e_y are exact null
    // directions of the defect (angles are translation invariant); pin the
    // mean of each column's rho_y so the pseudoinverse cannot wander along
    // them.
    let mut columns_of_gauge: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (col, dof) in basis.dofs.iter().enumerate() {
        if let SymDof::Rho { circle, component: 0 } = dof {
            let LatticeIndex::Sphere { i, .. } = solver.config.circle(*circle).sphere else {
                continue;
            };
            columns_of_gauge.entry(i).or_default().push(col);
        }
    }
    let gauge_rows: Vec<Vec<usize>> = columns_of_gauge.into_values().collect();
    let total_rows = basis.rows.len() + gauge_rows.len();
    let mut jac_aug = Mat::<f64>::zeros(total_rows, basis.dofs.len());
    for r in 0..basis.rows.len() {
        for c in 0..basis.dofs.len() {
            jac_aug[(r, c)] = jac[(r, c)];
        }
    }
    for (k, cols) in gauge_rows.iter().enumerate() {
        for &c in cols {
            jac_aug[(basis.rows.len() + k, c)] = 1.0;
        }
    }
    let jac = jac_aug;

    // Minimum-norm Newton on the assembled linearization, with the gauge
    // rows appended and a refresh of the linearization when a step fails.
    let augment = |jac: &Mat<f64>| -> Mat<f64> {
        let mut out = Mat::<f64>::zeros(total_rows, basis.dofs.len());
        for r in 0..basis.rows.len() {
            for c in 0..basis.dofs.len() {
                out[(r, c)] = jac[(r, c)];
            }
        }
        for (k, cols) in gauge_rows.iter().enumerate() {
            for &c in cols {
                out[(basis.rows.len() + k, c)] = 1.0;
            }
        }
        out
    };
    let pinv_of = |jac_aug: &Mat<f64>| -> Result<
        Box<dyn Fn(&[f64]) -> Vec<f64>>,
        AssembleError,
    > {
        let svd = jac_aug
            .svd()
            .map_err(|e| AssembleError::Invalid(format!("svd failed: {e:?}")))?;
        let m = total_rows;
        let n = basis.dofs.len();
        let k = m.min(n);
        let mut u = vec![0.0; m * k];
        let mut vmat = vec![0.0; n * k];
        let mut sv = vec![0.0; k];
        for q in 0..k {
            sv[q] = svd.S()[q];
            for row in 0..m {
                u[row * k + q] = svd.U()[(row, q)];
            }
            for col in 0..n {
                vmat[col * k + q] = svd.V()[(col, q)];
            }
        }
        let rank_tol = options.svd_threshold * sv[0].max(1e-300);
        Ok(Box::new(move |r: &[f64]| -> Vec<f64> {
            let mut x = vec![0.0; n];
            for q in 0..k {
                if sv[q] <= rank_tol {
                    continue;
                }
                let mut uy = 0.0;
                for row in 0..m {
                    uy += u[row * k + q] * r[row];
                }
                let c = uy / sv[q];
                for col in 0..n {
                    x[col] += vmat[col * k + q] * c;
                }
            }
            x
        }))
    };
    let mut pinv = pinv_of(&augment(&jac))?;

    let mut x = vec![0.0; basis.dofs.len()];
    let mut history = Vec::new();
    let mut best: Option<(Vec<f64>, f64)> = None;
    type EvalOut = (Vec<f64>, BTreeMap<LatticeIndex, ComponentSolve>, DefectValue);
    let evaluate = |x: &[f64]| -> Result<EvalOut, AssembleError> {
        let e = basis.expand(solver, x);
        let xi = v.add_scaled(&e, 1.0);
        let solves = solver.solve_all(&xi)?;
        let value = solver.lambda_of_solves(&solves)?;
        let r = basis.readout(solver, &value.capital);
        let delta = r.iter().zip(&r0).map(|(a, b)| a - b).collect();
        Ok((delta, solves, value))
    };
    let (mut delta, mut cur_solves, mut cur_value) = evaluate(&x)?;
    let mut refreshes = 0;
    let mut iter = 0;
    while iter < options.max_iterations {
        iter += 1;
        let norm = delta.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        history.push(norm);
        if best.as_ref().map(|(_, b)| norm < *b).unwrap_or(true) {
            best = Some((x.clone(), norm));
        }
        if norm < options.tol {
            break;
        }
        let mut r_aug = delta.clone();
        for cols in &gauge_rows {
            r_aug.push(cols.iter().map(|&c| x[c]).sum());
        }
        let step = pinv(&r_aug);
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..6 {
            let xt: Vec<f64> =
                x.iter().zip(&step).map(|(xv, dv)| xv - scale * dv).collect();
            if let Ok((dt, st, val)) = evaluate(&xt) {
                let nt = dt.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                if nt < norm || nt < options.tol {
                    x = xt;
                    delta = dt;
                    cur_solves = st;
                    cur_value = val;
                    accepted = true;
                    break;
                }
            }
            scale *= 0.5;
        }
        if !accepted || (history.len() >= 2 && norm > 0.8 * history[history.len() - 2]) {
            if refreshes >= 3 {
                if !accepted {
                    break;
                }
                continue;
            }
            refreshes += 1;
            let e = basis.expand(solver, &x);
            let xi = v.add_scaled(&e, 1.0);
            let r_here = basis.readout(solver, &cur_value.capital);
            let jac_here = assemble(&xi, &cur_solves, &cur_value.lambda, &r_here)?;
            pinv = pinv_of(&augment(&jac_here))?;
        }
    }
    let (x, norm) = best.unwrap();
    if norm >= options.tol && history.len() >= options.max_iterations {
        return Err(AssembleError::Diverged(format!(
            "symmetry-breaking stalled at residual {norm:.3e}, history {history:?}"
        )));
    }
    let e = basis.expand(solver, &x);
    let xi = v.add_scaled(&e, 1.0);
    let solves = solver.solve_all(&xi)?;
    Ok(SolveState {
        v: v.clone(),
        e,
        e_reduced: x,
        residual_history: history,
        background_defect,
        solves,
    })
}

/// Re-evaluate the defect after perturbing only the components touched by
/// `dxi`, reusing the base solves and their precomputed angles elsewhere.
fn lambda_perturbed(
    solver: &LatticeSolver,
    base: &BTreeMap<LatticeIndex, ComponentSolve>,
    base_lambda: &BoundaryFunction,
    dxi: &ParamVector,
) -> Result<BoundaryFunction, AssembleError> {
    // Dirty necks: any neck whose scalars changed. Dirty spheres: any sphere
    // adjacent to a dirty neck or carrying changed rho / f data.
    let mut dirty_necks: Vec<LatticeIndex> = Vec::new();
    for (&(i, j), &t) in dxi.tau_v.iter() {
        if t != 0.0 {
            dirty_necks.push(LatticeIndex::VNeck { i, j });
        }
    }
    for (&(i, j), &t) in dxi.phi_v.iter() {
        if t != 0.0 && !dirty_necks.contains(&LatticeIndex::VNeck { i, j }) {
            dirty_necks.push(LatticeIndex::VNeck { i, j });
        }
    }
    for (&(i, j), &t) in dxi.tau_h.iter().chain(dxi.phi_h.iter()) {
        if t != 0.0 && !dirty_necks.contains(&LatticeIndex::HNeck { i, j }) {
            dirty_necks.push(LatticeIndex::HNeck { i, j });
        }
    }
    // Trace data dirties the neck carrying it, and a dirty neck dirties all
    // its adjacent spheres (its other boundary curve moves too).
    for (&c, _) in dxi.f.circles.iter() {
        let info = solver.config.circle(c);
        let neck = match info.side {
            crate::lattice::CircleSide::Neck => info.component,
            crate::lattice::CircleSide::Sphere => {
                solver.config.circle(info.partner).component
            }
        };
        if !dirty_necks.contains(&neck) {
            dirty_necks.push(neck);
        }
    }
    let mut dirty_spheres: Vec<LatticeIndex> = Vec::new();
    for neck in &dirty_necks {
        let comp = solver
            .config
            .neck_component(*neck)
            .ok_or_else(|| AssembleError::Invalid(format!("unknown neck {neck:?}")))?;
        for circ in [comp.lower_circle, comp.upper_circle].into_iter().flatten() {
            let sphere = solver.config.circle(solver.config.circle(circ).partner).sphere;
            if !dirty_spheres.contains(&sphere) {
                dirty_spheres.push(sphere);
            }
        }
    }
    for (&c, _) in dxi.rho.iter() {
        let sphere = solver.config.circle(c).sphere;
        if !dirty_spheres.contains(&sphere) {
            dirty_spheres.push(sphere);
        }
    }

    // Recompute dirty necks, then dirty spheres with updated boundary
    // curves.
    let mut lambda = base_lambda.clone();
    let mut new_bc: BTreeMap<u32, Vec<nalgebra::Point3<f64>>> = BTreeMap::new();
    for neck_index in &dirty_necks {
        let comp = solver.config.neck_component(*neck_index).unwrap();
        let solved = solver.solve_neck_component(comp, dxi)?;
        for (cid, f) in solver.lambda_on_rings(&solved)? {
            lambda.set(cid, f);
        }
        for (cid, curve) in &solved.sphere_bc {
            new_bc.insert(*cid, curve.clone());
        }
    }
    for sphere_index in &dirty_spheres {
        let LatticeIndex::Sphere { i, j } = sphere_index else { continue };
        let sphere = solver
            .config
            .sphere_component(*i, *j)
            .ok_or_else(|| AssembleError::Invalid(format!("unknown sphere {i},{j}")))?
            .clone();
        // Boundary curves: new ones where necks moved, otherwise from the
        // base solves.
        let mut bc = BTreeMap::new();
        for &cid in &sphere.circles {
            if let Some(curve) = new_bc.get(&cid) {
                bc.insert(cid, curve.clone());
            } else {
                let neck_circle = solver.config.circle(cid).partner;
                let neck_index = solver.config.circle(neck_circle).component;
                let neck_solve = base
                    .get(&neck_index)
                    .ok_or_else(|| AssembleError::Invalid("missing base solve".into()))?;
                let curve = neck_solve
                    .sphere_bc
                    .get(&cid)
                    .ok_or_else(|| AssembleError::Invalid("missing base curve".into()))?;
                bc.insert(cid, curve.clone());
            }
        }
        let solved = solver.solve_sphere_component(&sphere, dxi, &bc)?;
        for (cid, f) in solver.lambda_on_rings(&solved)? {
            lambda.set(cid, f);
        }
    }
    // Even part.
    let mut capital = BoundaryFunction::new();
    for (&cid, f) in &lambda.circles {
        let partner = solver.config.circle(cid).partner;
        if let Some(fp) = lambda.get(partner) {
            capital.set(cid, f.add(fp).scale(0.5));
        }
    }
    Ok(capital)
}
