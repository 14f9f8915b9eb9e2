//! Branch assembly and the translational-error operator: leaves are glued by
//! piecewise translations within each column, branches are moved by their
//! relative translations, and the waist mismatch of each bridge neck is
//! driven to zero over the regular bridge parameters.

use std::collections::BTreeMap;

use nalgebra::{Point3, Vector3};

use crate::defect::{ComponentSolve, LatticeSolver};
use crate::lattice::{LatticeIndex, ParamVector};
use crate::mesh::TriMesh;
use crate::numerics::{arcosh, invert_monotone};

use super::breaking::{solve_symmetry_breaking, BreakOptions, SolveState};
use super::AssembleError;

/// Branchwise translation: branch `i` moves by the partial sum of the
/// relative translations times `e_y`; branch 0 is pinned at the identity.
/// The chain (when present) moves by `-d_chain e_y`.
#[derive(Debug, Clone, Default)]
pub struct BranchMotion {
    /// `d[i - 1]` is the relative translation between branches `i - 1` and
    /// `i`, for `i = 1..=n`.
    pub d: Vec<f64>,
    pub d_chain: f64,
}

impl BranchMotion {
    pub fn zero(n: i64) -> BranchMotion {
        BranchMotion { d: vec![0.0; n.max(0) as usize], d_chain: 0.0 }
    }

    /// Absolute translation of branch `i` (columns), or of the chain for
    /// negative `i`.
    pub fn of_branch(&self, i: i64) -> Vector3<f64> {
        if i < 0 {
            return -self.d_chain * Vector3::y();
        }
        let sum: f64 = self.d.iter().take(i as usize).sum();
        sum * Vector3::y()
    }
}

/// Per-bridge waist mismatch, the `(y, z)` components.
#[derive(Debug, Clone, Default)]
pub struct TranslationalError {
    pub per_neck: BTreeMap<(i64, i64), [f64; 2]>,
}

impl TranslationalError {
    pub fn sup(&self) -> f64 {
        self.per_neck
            .values()
            .fold(0.0f64, |m, v| m.max(v[0].abs()).max(v[1].abs()))
    }
}

fn ring_center(solve: &ComponentSolve, circle: u32) -> Option<Point3<f64>> {
    let ring = solve.rings.get(&circle)?;
    let mut c = Vector3::zeros();
    for &v in ring {
        c += solve.mesh.vertices[v as usize].coords;
    }
    Some(Point3::from(c / ring.len() as f64))
}

/// Placement of every component: the translation gluing it into its branch.
/// Column spheres chain upward and downward from row 0 through the vertical
/// necks; the chain extends leftward from branch 0.
pub struct Placement {
    pub translations: BTreeMap<LatticeIndex, Vector3<f64>>,
}

pub fn place_components(
    solver: &LatticeSolver,
    solves: &BTreeMap<LatticeIndex, ComponentSolve>,
    motion: &BranchMotion,
) -> Result<Placement, AssembleError> {
    let config = &solver.config;
    let mut t: BTreeMap<LatticeIndex, Vector3<f64>> = BTreeMap::new();

    let sphere_ring_center = |i: i64, j: i64, circle: u32| -> Result<Point3<f64>, AssembleError> {
        let solve = solves
            .get(&LatticeIndex::Sphere { i, j })
            .ok_or_else(|| AssembleError::Invalid(format!("missing sphere solve {i},{j}")))?;
        ring_center(solve, circle)
            .ok_or_else(|| AssembleError::Invalid(format!("missing ring {circle}")))
    };

    for i in 0..=config.n {
        let anchor = motion.of_branch(i);
        t.insert(LatticeIndex::Sphere { i, j: 0 }, anchor);
        // Upward.
        for j in 0..=config.big_j {
            let neck_index = LatticeIndex::VNeck { i, j };
            let Some(neck) = config.neck_component(neck_index) else { continue };
            let neck_solve = solves
                .get(&neck_index)
                .ok_or_else(|| AssembleError::Invalid(format!("missing neck {neck_index:?}")))?;
            let t_sph = t[&LatticeIndex::Sphere { i, j }];
            let lower = neck.lower_circle.unwrap();
            let c_sph = sphere_ring_center(i, j, config.circle(lower).partner)?;
            let c_neck = ring_center(neck_solve, lower)
                .ok_or_else(|| AssembleError::Invalid("neck ring missing".into()))?;
            let t_neck = t_sph + (c_sph - c_neck);
            t.insert(neck_index, t_neck);
            if let Some(upper) = neck.upper_circle {
                if j + 1 <= config.big_j {
                    let c_top_neck = ring_center(neck_solve, upper).unwrap();
                    let c_top_sph = sphere_ring_center(i, j + 1, config.circle(upper).partner)?;
                    t.insert(
                        LatticeIndex::Sphere { i, j: j + 1 },
                        t_neck + (c_top_neck - c_top_sph),
                    );
                }
            }
        }
        // Downward.
        for j in (-config.big_j - 1..0).rev() {
            let neck_index = LatticeIndex::VNeck { i, j };
            let Some(neck) = config.neck_component(neck_index) else { continue };
            let neck_solve = solves
                .get(&neck_index)
                .ok_or_else(|| AssembleError::Invalid(format!("missing neck {neck_index:?}")))?;
            let Some(t_sph) = t.get(&LatticeIndex::Sphere { i, j: j + 1 }).copied() else {
                continue;
            };
            let upper = neck.upper_circle.unwrap();
            let c_sph = sphere_ring_center(i, j + 1, config.circle(upper).partner)?;
            let c_neck = ring_center(neck_solve, upper)
                .ok_or_else(|| AssembleError::Invalid("neck ring missing".into()))?;
            let t_neck = t_sph + (c_sph - c_neck);
            t.insert(neck_index, t_neck);
            if let Some(lower) = neck.lower_circle {
                if j >= -config.big_j {
                    let c_low_neck = ring_center(neck_solve, lower).unwrap();
                    let c_low_sph = sphere_ring_center(i, j, config.circle(lower).partner)?;
                    t.insert(LatticeIndex::Sphere { i, j }, t_neck + (c_low_neck - c_low_sph));
                }
            }
        }
    }
    // Chain: walk leftward from its anchor sphere (-1, 0).
    if config.chain_len > 0 {
        t.insert(LatticeIndex::Sphere { i: -1, j: 0 }, motion.of_branch(-1));
        for i in (-config.chain_len + 1..=-1).rev() {
            // The neck left of sphere (i, 0) joins spheres (i-1, 0), (i, 0).
            let neck_index = LatticeIndex::HNeck { i: i - 1, j: 0 };
            let Some(neck) = config.neck_component(neck_index) else { continue };
            let neck_solve = solves
                .get(&neck_index)
                .ok_or_else(|| AssembleError::Invalid(format!("missing neck {neck_index:?}")))?;
            let t_sph = t[&LatticeIndex::Sphere { i, j: 0 }];
            let upper = neck.upper_circle.unwrap();
            let c_sph = sphere_ring_center(i, 0, config.circle(upper).partner)?;
            let c_neck = ring_center(neck_solve, upper)
                .ok_or_else(|| AssembleError::Invalid("chain ring missing".into()))?;
            let t_neck = t_sph + (c_sph - c_neck);
            t.insert(neck_index, t_neck);
            if let Some(lower) = neck.lower_circle {
                let c_low_neck = ring_center(neck_solve, lower).unwrap();
                let c_low_sph = sphere_ring_center(i - 1, 0, config.circle(lower).partner)?;
                t.insert(
                    LatticeIndex::Sphere { i: i - 1, j: 0 },
                    t_neck + (c_low_neck - c_low_sph),
                );
            }
        }
        // Far-end clamp neck of the chain.
        let i = -config.chain_len - 1;
        let clamp = LatticeIndex::HNeck { i, j: 0 };
        if let Some(neck) = config.neck_component(clamp) {
            if let Some(neck_solve) = solves.get(&clamp) {
                let upper = neck.upper_circle.unwrap();
                let t_sph = t[&LatticeIndex::Sphere { i: i + 1, j: 0 }];
                let c_sph = sphere_ring_center(i + 1, 0, config.circle(upper).partner)?;
                let c_neck = ring_center(neck_solve, upper).unwrap();
                t.insert(clamp, t_sph + (c_sph - c_neck));
            }
        }
    }
    Ok(Placement { translations: t })
}

/// Waist mismatch at every bridge and connector neck: the difference between
/// the attachment translations demanded by the two adjacent branches.
pub fn translational_error(
    solver: &LatticeSolver,
    solves: &BTreeMap<LatticeIndex, ComponentSolve>,
    motion: &BranchMotion,
) -> Result<TranslationalError, AssembleError> {
    let config = &solver.config;
    let placement = place_components(solver, solves, motion)?;
    let mut out = TranslationalError::default();
    for neck in &config.necks {
        let LatticeIndex::HNeck { i, j } = neck.index else { continue };
        let (Some(lower), Some(upper)) = (neck.lower_circle, neck.upper_circle) else {
            continue;
        };
        // Interior chain necks glue within one branch; only the connector
        // (i = -1) and the bridges (i >= 0) cross branches.
        if i < -1 {
            continue;
        }
        let neck_solve = solves
            .get(&neck.index)
            .ok_or_else(|| AssembleError::Invalid("missing bridge solve".into()))?;
        let left_sphere = config.circle(lower).sphere;
        let right_sphere = config.circle(upper).sphere;
        let t_left_branch = placement.translations[&left_sphere];
        let t_right_branch = placement.translations[&right_sphere];
        let sphere_solve = |idx: LatticeIndex| {
            solves
                .get(&idx)
                .ok_or_else(|| AssembleError::Invalid("missing sphere solve".into()))
        };
        let c_sph_l = ring_center(sphere_solve(left_sphere)?, config.circle(lower).partner)
            .ok_or_else(|| AssembleError::Invalid("missing left ring".into()))?;
        let c_sph_r = ring_center(sphere_solve(right_sphere)?, config.circle(upper).partner)
            .ok_or_else(|| AssembleError::Invalid("missing right ring".into()))?;
        let c_neck_l = ring_center(neck_solve, lower).unwrap();
        let c_neck_r = ring_center(neck_solve, upper).unwrap();
        let t_attach_left = t_left_branch + (c_sph_l - c_neck_l);
        let t_attach_right = t_right_branch + (c_sph_r - c_neck_r);
        let e = t_attach_right - t_attach_left;
        out.per_neck.insert((i, j), [e.y, e.z]);
    }
    Ok(out)
}

/// The regular parameter map: separation (full boundary-plane distance at
/// configuration scale) of the bridge neck at calibrated flux `tau`.
pub fn separation_of_tau(solver: &LatticeSolver, tau: f64) -> f64 {
    if tau <= 0.0 {
        return 0.0;
    }
    let a = (tau / solver.beta_tau).sin();
    2.0 * solver.scale * a * arcosh(1.0 / a)
}

pub fn tau_of_separation(solver: &LatticeSolver, sigma: f64) -> Result<f64, AssembleError> {
    if sigma <= 0.0 {
        return Ok(0.0);
    }
    let max_tau = 0.45 * solver.beta_tau;
    let max_sigma = separation_of_tau(solver, max_tau);
    if sigma >= max_sigma {
        return Err(AssembleError::Invalid(format!(
            "separation {sigma} beyond the monotone branch (max {max_sigma})"
        )));
    }
    Ok(invert_monotone(|t| separation_of_tau(solver, t), sigma, 1e-12, max_tau, 1e-15))
}

/// Result of the branch-matching solve.
pub struct MatchResult {
    pub state: SolveState,
    pub motion: BranchMotion,
    /// Regular parameters per bridge/connector: `(sigma, phi)`.
    pub r: BTreeMap<(i64, i64), [f64; 2]>,
    pub error: TranslationalError,
    pub error_history: Vec<f64>,
}

/// Drive the bridge separations and phases until the waist mismatches
/// vanish, using the identity-pattern Jacobian of the translational error
/// (quasi-Newton).
pub fn match_branches(
    solver: &LatticeSolver,
    motion: &BranchMotion,
    tol: f64,
    break_options: &BreakOptions,
) -> Result<MatchResult, AssembleError> {
    let config = &solver.config;
    let mut keys: Vec<(i64, i64)> = Vec::new();
    for neck in &config.necks {
        if let LatticeIndex::HNeck { i, j } = neck.index {
            if i >= -1 && neck.lower_circle.is_some() && neck.upper_circle.is_some() {
                keys.push((i, j));
            }
        }
    }
    keys.sort_unstable();
    // Initial separations: the relative translation of the adjacent pair.
    let mut r: BTreeMap<(i64, i64), [f64; 2]> = BTreeMap::new();
    for &(i, j) in &keys {
        let d = if i < 0 {
            motion.d_chain
        } else {
            motion.d.get(i as usize).copied().unwrap_or(0.0)
        };
        r.insert((i, j), [d.max(1e-6), 0.0]);
    }

    let mut history = Vec::new();
    let mut last: Option<(SolveState, TranslationalError)> = None;
    for _iter in 0..30 {
        let mut v = ParamVector::zero();
        for (&(i, j), &[sigma, phi]) in &r {
            let tau = tau_of_separation(solver, sigma)?;
            v.tau_h.insert((i, j), tau);
            v.phi_h.insert((i, j), phi);
        }
        let state = solve_symmetry_breaking(solver, &v, break_options)?;
        let error = translational_error(solver, &state.solves, motion)?;
        let sup = error.sup();
        history.push(sup);
        let converged = sup < tol;
        for (&key, &[ey, ez]) in &error.per_neck {
            if let Some(entry) = r.get_mut(&key) {
                // dE / d sigma = -e_y, dE / d phi = +e_z.
                entry[0] += ey;
                entry[1] -= ez;
                if entry[0] < 1e-9 {
                    entry[0] = 1e-9;
                }
            }
        }
        last = Some((state, error));
        if converged {
            break;
        }
    }
    let (state, error) = last.ok_or_else(|| AssembleError::Diverged("no iterations".into()))?;
    if error.sup() >= tol {
        return Err(AssembleError::Diverged(format!(
            "branch matching stalled at |E| = {:.3e}, history {history:?}",
            error.sup()
        )));
    }
    Ok(MatchResult { state, motion: motion.clone(), r, error, error_history: history })
}

/// The embedded choice of relative translations: a shifted quadratic flux
/// profile across the active column pairs, converted to separations.
pub fn embedded_d(
    solver: &LatticeSolver,
    c: f64,
) -> Result<(BranchMotion, Vec<f64>), AssembleError> {
    let config = &solver.config;
    if c <= 0.0 {
        return Err(AssembleError::Invalid("profile constant must be positive".into()));
    }
    let mut d = Vec::new();
    let mut taus = Vec::new();
    for i in 1..=config.n {
        let count = config.f_set.get(&i).map(|r| r.len()).unwrap_or(0) as f64;
        if count == 0.0 {
            return Err(AssembleError::Invalid(format!("column pair {i} has no bridges")));
        }
        // The quadratic profile shifted so the first active pair already
        // carries positive flux.
        let tau_i = c * (i * (i + 1)) as f64 / (2.0 * count);
        let sigma = separation_of_tau(solver, tau_i);
        if sigma == 0.0 {
            return Err(AssembleError::Invalid(format!("profile constant {c} too small")));
        }
        taus.push(tau_i);
        d.push(sigma);
    }
    let d_chain =
        if config.chain_len > 0 { separation_of_tau(solver, 0.5 * c) } else { 0.0 };
    Ok((BranchMotion { d, d_chain }, taus))
}

/// Weld the solved components into a single mesh: paired rings are snapped
/// to the sphere-side positions and merged by index; truncation rings stay
/// open. Returns the mesh and the largest snap distance.
pub fn weld_output(
    solver: &LatticeSolver,
    solves: &BTreeMap<LatticeIndex, ComponentSolve>,
    motion: &BranchMotion,
) -> Result<(TriMesh, f64), AssembleError> {
    let config = &solver.config;
    let placement = place_components(solver, solves, motion)?;
    let mut vertices: Vec<Point3<f64>> = Vec::new();
    let mut faces: Vec<[u32; 3]> = Vec::new();
    let mut max_snap = 0.0f64;
    let mut offsets: BTreeMap<LatticeIndex, u32> = BTreeMap::new();
    for (index, solve) in solves {
        let t = placement
            .translations
            .get(index)
            .copied()
            .unwrap_or_else(Vector3::zeros);
        offsets.insert(*index, vertices.len() as u32);
        for p in &solve.mesh.vertices {
            vertices.push(p + t);
        }
    }
    let mut remap: BTreeMap<u32, u32> = BTreeMap::new();
    for neck in &config.necks {
        let neck_solve = match solves.get(&neck.index) {
            Some(s) => s,
            None => continue,
        };
        for circle in [neck.lower_circle, neck.upper_circle].into_iter().flatten() {
            let sphere_circle = config.circle(circle).partner;
            let sphere_index = config.circle(circle).sphere;
            let sphere_solve = solves
                .get(&sphere_index)
                .ok_or_else(|| AssembleError::Invalid("missing sphere in weld".into()))?;
            let neck_ring = &neck_solve.rings[&circle];
            let sphere_ring = &sphere_solve.rings[&sphere_circle];
            if neck_ring.len() != sphere_ring.len() {
                return Err(AssembleError::Invalid("ring lengths differ in weld".into()));
            }
            let no = offsets[&neck.index];
            let so = offsets[&sphere_index];
            for (a, b) in neck_ring.iter().zip(sphere_ring) {
                let ga = no + a;
                let gb = so + b;
                let snap = (vertices[ga as usize] - vertices[gb as usize]).norm();
                max_snap = max_snap.max(snap);
                remap.insert(ga, gb);
            }
        }
    }
    for (index, solve) in solves {
        let off = offsets[index];
        for f in &solve.mesh.faces {
            let m = |v: u32| -> u32 {
                let g = off + v;
                remap.get(&g).copied().unwrap_or(g)
            };
            faces.push([m(f[0]), m(f[1]), m(f[2])]);
        }
    }
    let mut used = vec![false; vertices.len()];
    for f in &faces {
        for &v in f {
            used[v as usize] = true;
        }
    }
    let mut newid = vec![u32::MAX; vertices.len()];
    let mut out_vertices = Vec::new();
    for (i, p) in vertices.into_iter().enumerate() {
        if used[i] {
            newid[i] = out_vertices.len() as u32;
            out_vertices.push(p);
        }
    }
    let out_faces: Vec<[u32; 3]> = faces
        .into_iter()
        .map(|f| [newid[f[0] as usize], newid[f[1] as usize], newid[f[2] as usize]])
        .collect();
    let mesh = TriMesh::new(out_vertices, out_faces)?;
    Ok((mesh, max_snap))
}

/// Mesh of one branch (its spheres and vertical necks placed by the matching
/// translations), open at the truncation rings.
pub fn branch_mesh(
    solver: &LatticeSolver,
    solves: &BTreeMap<LatticeIndex, ComponentSolve>,
    column: i64,
) -> Result<TriMesh, AssembleError> {
    let config = &solver.config;
    let motion = BranchMotion::zero(config.n);
    let placement = place_components(solver, solves, &motion)?;
    let keep = |idx: &LatticeIndex| -> bool {
        match *idx {
            LatticeIndex::Sphere { i, .. } => i == column,
            LatticeIndex::VNeck { i, .. } => i == column,
            LatticeIndex::HNeck { .. } => false,
        }
    };
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (index, solve) in solves {
        if !keep(index) {
            continue;
        }
        let t = placement.translations[index];
        let off = vertices.len() as u32;
        for p in &solve.mesh.vertices {
            vertices.push(p + t);
        }
        for f in &solve.mesh.faces {
            faces.push([off + f[0], off + f[1], off + f[2]]);
        }
    }
    Ok(TriMesh::new(vertices, faces)?)
}
