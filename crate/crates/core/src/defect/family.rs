//! Realization of the configuration family: component solves at a parameter
//! vector, the boundary-curve transfer from necks to spheres, and the
//! conormal-angle defect across paired circles.
//!
//! All components are solved at configuration scale. Necks and caps are
//! solved in model coordinates (tube radius near one) and mapped by the
//! tangency isometry and the excision scale; spheres take their boundary
//! curves from the paired neck traces displaced by the trace-difference
//! field, so paired boundary components differ by translations throughout.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::rc::Rc;

use nalgebra::{Matrix3, Point3, Rotation3, Vector3};

use crate::lattice::{Axis, CircleSide, Configuration, LatticeIndex, ParamVector};
use crate::mesh::{circle_fourier, BoundaryFunction, FourierCircle, TriMesh, VertexField};
use crate::necksolve::{
    solve_cap, solve_neck, solve_neck_axisymmetric, solve_spherical, CapSolution, NeckSolution,
    NeckSpec,
};
use crate::surfaces::{
    excision_circle_radius, sphere_domain_mesh, RemovedDisk, SphereDomainChart, LATTICE_H,
};

use super::DefectError;

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub tol: f64,
    pub fd_step: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-10, fd_step: 1e-3 }
    }
}

/// The raw angle field and its even part.
#[derive(Debug, Clone)]
pub struct DefectValue {
    /// Raw conormal angle per circle.
    pub lambda: BoundaryFunction,
    /// Even part per circle (equal coefficients across each pair).
    pub capital: BoundaryFunction,
}

impl DefectValue {
    pub fn sup_norm(&self) -> f64 {
        self.capital.norm_sup_coeff()
    }
}

/// One solved component, positioned in configuration space.
pub struct ComponentSolve {
    pub index: LatticeIndex,
    pub mesh: TriMesh,
    /// Ring vertices per circle id, in tangency-frame order.
    pub rings: BTreeMap<u32, Vec<u32>>,
    /// Truncation rings clamped to the background (no paired circle).
    pub clamped_rings: Vec<Vec<u32>>,
    /// Squared second form along the solved surface (for Jacobi solves).
    pub a_sq: VertexField,
    /// Waist circle center (necks only), after positioning.
    pub waist_center: Option<Point3<f64>>,
    pub waist_radius: Option<f64>,
    /// Dirichlet curves this component imposes on its paired spheres.
    pub sphere_bc: BTreeMap<u32, Vec<Point3<f64>>>,
}

/// Driver for component solves on a configuration with a fixed symmetric
/// background.
pub struct LatticeSolver {
    pub config: Configuration,
    /// Excision scale: model tube radius maps to this.
    pub scale: f64,
    /// Mean-curvature target of model-scale solves.
    pub delta_model: f64,
    /// Flux calibration: the geometric catenoid flux is `tau / beta_tau`,
    /// making the conormal angle respond to `tau` at unit rate.
    pub beta_tau: f64,
    /// Background vertical flux (calibrated parameter units).
    pub tau0: f64,
    /// Background axial offset of the vertical sphere circles.
    pub bg_offset: f64,
    /// Background data on horizontal pairs (keyed by sphere-side circle id).
    pub bg_rho_y: f64,
    pub bg_f_horizontal: FourierCircle,
    pub options: SolverOptions,
    baseline_necks: RefCell<BTreeMap<u64, Rc<NeckSolution>>>,
    baseline_cap: RefCell<Option<Rc<CapSolution>>>,
}

impl LatticeSolver {
    pub fn new(config: Configuration) -> LatticeSolver {
        let scale = excision_circle_radius(config.delta);
        let tau0 = config.tau0;
        LatticeSolver {
            config,
            scale,
            delta_model: LATTICE_H * scale,
            beta_tau: 1.0,
            tau0,
            bg_offset: 0.0,
            bg_rho_y: 0.0,
            bg_f_horizontal: FourierCircle::zero(0),
            options: SolverOptions::default(),
            baseline_necks: RefCell::new(BTreeMap::new()),
            baseline_cap: RefCell::new(None),
        }
    }

    pub fn modes(&self) -> usize {
        self.config.resolution.modes
    }

    fn geometric_tau(&self, tau_param: f64) -> f64 {
        tau_param / self.beta_tau
    }

    /// Cached axisymmetric baseline solve of the model neck at calibrated
    /// flux `tau`.
    pub fn baseline_neck(&self, tau_param: f64) -> Result<Rc<NeckSolution>, DefectError> {
        let tau_g = self.geometric_tau(tau_param);
        let key = tau_g.to_bits();
        if let Some(cached) = self.baseline_necks.borrow().get(&key) {
            return Ok(cached.clone());
        }
        let spec = NeckSpec::axisymmetric(tau_g, self.delta_model);
        let sol = solve_neck_axisymmetric(
            &spec,
            self.config.resolution.n_around,
            self.config.resolution.neck_inner,
            self.options.tol,
        )?;
        let rc = Rc::new(sol);
        self.baseline_necks.borrow_mut().insert(key, rc.clone());
        Ok(rc)
    }

    pub fn baseline_cap(&self) -> Result<Rc<CapSolution>, DefectError> {
        if let Some(cached) = self.baseline_cap.borrow().as_ref() {
            return Ok(cached.clone());
        }
        let sol = solve_cap(
            &FourierCircle::zero(self.modes()),
            self.delta_model,
            1.0,
            self.config.resolution.n_around,
            self.config.resolution.neck_inner.max(12),
            self.options.tol,
        )?;
        let rc = Rc::new(sol);
        *self.baseline_cap.borrow_mut() = Some(rc.clone());
        Ok(rc)
    }

    /// Total flux of a neck component at a parameter vector.
    pub fn total_tau(&self, index: LatticeIndex, xi: &ParamVector) -> f64 {
        match index {
            LatticeIndex::VNeck { .. } => self.tau0 + xi.tau(index),
            LatticeIndex::HNeck { .. } => xi.tau(index),
            LatticeIndex::Sphere { .. } => 0.0,
        }
    }

    /// Background data on a sphere-side circle: the axial offset on vertical
    /// circles, the solved horizontal offset and trace data on bridge
    /// circles.
    pub fn background_rho(&self, circle: u32) -> Vector3<f64> {
        let c = self.config.circle(circle);
        match c.axis {
            Axis::Vertical => self.bg_offset * c.polar_dir,
            Axis::Horizontal => self.bg_rho_y * c.polar_dir,
        }
    }

    pub fn background_f(&self, circle: u32) -> FourierCircle {
        let c = self.config.circle(circle);
        match c.axis {
            Axis::Vertical => FourierCircle::zero(self.modes()),
            Axis::Horizontal => {
                let mut f = self.bg_f_horizontal.clone();
                if f.modes() < self.modes() {
                    f.cos.resize(self.modes(), 0.0);
                    f.sin.resize(self.modes(), 0.0);
                }
                f
            }
        }
    }

    /// The local-to-global isometry of a tangency: local `e_z` maps to the
    /// tangency axis and the local circle frame to the tangency frame.
    fn tangency_rotation(&self, axis: Axis) -> Matrix3<f64> {
        let (u, v) = axis.frame();
        Matrix3::from_columns(&[u, v, axis.direction()])
    }

    /// Solve one neck (or cap-pair) component at the given parameters and
    /// position it in configuration space, collecting both the lambda rings
    /// and the boundary curves it imposes on the paired spheres.
    pub fn solve_neck_component(
        &self,
        neck: &crate::lattice::NeckComponent,
        xi: &ParamVector,
    ) -> Result<ComponentSolve, DefectError> {
        let tau = self.total_tau(neck.index, xi);
        if tau < 0.0 {
            return Err(DefectError::Invalid(format!(
                "negative total flux {tau} at {:?}",
                neck.index
            )));
        }
        let phi = xi.phi(neck.index);
        let modes = self.modes();
        let f_lower = neck
            .lower_circle
            .map(|c| xi.f_of(self.pair_key(c), modes).add(&self.background_f(c)))
            .unwrap_or_else(|| FourierCircle::zero(modes));
        let f_upper = neck
            .upper_circle
            .map(|c| xi.f_of(self.pair_key(c), modes).add(&self.background_f(c)))
            .unwrap_or_else(|| FourierCircle::zero(modes));
        if tau > 1e-12 {
            self.realized_neck(neck, tau, phi, &f_lower, &f_upper)
        } else {
            self.realized_cap_pair(neck, phi, &f_lower, &f_upper)
        }
    }

    /// Canonical key of the pair containing circle `c`: the sphere-side id.
    pub fn pair_key(&self, c: u32) -> u32 {
        let info = self.config.circle(c);
        match info.side {
            CircleSide::Sphere => c,
            CircleSide::Neck => info.partner,
        }
    }

    fn realized_neck(
        &self,
        neck: &crate::lattice::NeckComponent,
        tau: f64,
        phi: f64,
        f_lower: &FourierCircle,
        f_upper: &FourierCircle,
    ) -> Result<ComponentSolve, DefectError> {
        let tau_g = self.geometric_tau(tau);
        let s = self.scale;
        let f_scale = 1.0 / s;
        let spec = NeckSpec {
            tau: tau_g,
            delta: self.delta_model,
            f_bottom: f_lower.higher().scale(f_scale),
            f_top: f_upper.higher().scale(f_scale),
        };
        let axisym = spec.f_bottom.norm_sup_coeff() == 0.0 && spec.f_top.norm_sup_coeff() == 0.0;
        let sol = if axisym {
            (*self.baseline_neck(tau)?).clone()
        } else {
            solve_neck(
                &spec,
                self.config.resolution.n_around,
                self.config.resolution.neck_inner,
                self.options.tol,
            )?
        };
        let baseline = self.baseline_neck(tau)?;

        // Local-to-global map: rotate by phi about the local x axis, embed by
        // the tangency rotation, scale, translate to the tangency point.
        let rot_axis = self.tangency_rotation(neck.axis);
        let rot_phi =
            Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(-Vector3::x()), phi);
        let map_dir = |d: &Vector3<f64>| -> Vector3<f64> { rot_phi * (rot_axis * d) };
        let map_pt =
            |p: &Point3<f64>| -> Point3<f64> { neck.tangency + map_dir(&(s * p.coords)) };

        let mut mesh = sol.mesh.clone();
        for v in 0..mesh.vertex_count() {
            mesh.vertices[v] = map_pt(&sol.mesh.vertices[v]);
            mesh.normals[v] = map_dir(&sol.mesh.normals[v]);
        }
        let n_around = sol.n_around;
        let mut rings = BTreeMap::new();
        let mut clamped_rings = Vec::new();
        let mut sphere_bc = BTreeMap::new();
        for (is_upper, circle) in [(false, neck.lower_circle), (true, neck.upper_circle)] {
            let row = if is_upper { sol.rows - 1 } else { 0 };
            let ring: Vec<u32> = (0..n_around).map(|j| sol.vertex(row, j) as u32).collect();
            let Some(cid) = circle else {
                clamped_rings.push(ring);
                continue;
            };
            rings.insert(cid, ring);
            // Boundary curve for the paired sphere: the reference circle
            // rotated about the tangency, displaced by the trace difference
            // along the baseline boundary normal.
            let info = self.config.circle(cid);
            let f_data = if is_upper { f_upper } else { f_lower };
            let (lower_modes, lower_base) = if is_upper {
                (sol.lower_top, baseline.lower_top)
            } else {
                (sol.lower_bottom, baseline.lower_bottom)
            };
            let sphere_center = match info.sphere {
                LatticeIndex::Sphere { i, j } => Point3::new(0.0, i as f64, j as f64),
                _ => unreachable!(),
            };
            let mut curve = Vec::with_capacity(n_around);
            for k in 0..n_around {
                let theta = 2.0 * std::f64::consts::PI * k as f64 / n_around as f64;
                let p0 = info.point(theta);
                // The phase relocates the excision around the adjacent
                // sphere: rotate about the sphere center.
                let rotated = sphere_center + rot_phi * (p0 - sphere_center);
                // Trace difference (f + l)_{tau,f} - l_{tau,0} at model
                // scale; lower modes are (a0, a1, b1) in the ring angle.
                let ell = lower_modes[0]
                    + lower_modes[1] * theta.cos()
                    + lower_modes[2] * theta.sin();
                let ell0 = lower_base[0];
                let x_model = f_data.eval(theta) / s + ell - ell0;
                let nb = baseline.base.normals[baseline.vertex(row, k)];
                curve.push(rotated + s * x_model * map_dir(&nb));
            }
            sphere_bc.insert(info.partner, curve);
        }
        let a_sq = revolution_a_sq(&mesh, neck.tangency, &map_dir(&Vector3::z()));
        let waist_center = Some(map_pt(&sol.waist_center()));
        let wr = {
            let wv = sol.vertex(sol.waist_row, 0);
            let p = sol.mesh.vertices[wv];
            s * (p.x * p.x + p.y * p.y).sqrt()
        };
        Ok(ComponentSolve {
            index: neck.index,
            mesh,
            rings,
            clamped_rings,
            a_sq,
            waist_center,
            waist_radius: Some(wr),
            sphere_bc,
        })
    }

    fn realized_cap_pair(
        &self,
        neck: &crate::lattice::NeckComponent,
        phi: f64,
        f_lower: &FourierCircle,
        f_upper: &FourierCircle,
    ) -> Result<ComponentSolve, DefectError> {
        let s = self.scale;
        let rot_axis = self.tangency_rotation(neck.axis);
        let rot_phi =
            Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(-Vector3::x()), phi);
        let baseline = self.baseline_cap()?;

        let mut vertices = Vec::new();
        let mut normals = Vec::new();
        let mut faces: Vec<[u32; 3]> = Vec::new();
        let mut rings = BTreeMap::new();
        let mut sphere_bc = BTreeMap::new();

        for (is_upper, circle, f_data) in
            [(false, neck.lower_circle, f_lower), (true, neck.upper_circle, f_upper)]
        {
            let Some(cid) = circle else { continue };
            let cap = if f_data.higher().norm_sup_coeff() == 0.0 {
                (*baseline).clone()
            } else {
                solve_cap(
                    &f_data.higher().scale(1.0 / s),
                    self.delta_model,
                    1.0,
                    self.config.resolution.n_around,
                    self.config.resolution.neck_inner.max(12),
                    self.options.tol,
                )?
            };
            // The solve is the cap of the lower sphere (base normal +e_z);
            // the upper cap is its mirror through the tangency plane.
            let zsign = if is_upper { -1.0 } else { 1.0 };
            let map_dir = |d: &Vector3<f64>| -> Vector3<f64> {
                rot_phi * (rot_axis * Vector3::new(d.x, d.y, zsign * d.z))
            };
            let map_pt = |p: &Point3<f64>| -> Point3<f64> {
                neck.tangency
                    + rot_phi
                        * (rot_axis * (s * Vector3::new(p.x, p.y, zsign * p.z)))
            };
            let offset = vertices.len() as u32;
            for v in 0..cap.mesh.vertex_count() {
                vertices.push(map_pt(&cap.mesh.vertices[v]));
                normals.push(map_dir(&cap.mesh.normals[v]));
            }
            for f in &cap.mesh.faces {
                if is_upper {
                    faces.push([offset + f[0], offset + f[2], offset + f[1]]);
                } else {
                    faces.push([offset + f[0], offset + f[1], offset + f[2]]);
                }
            }
            let n_around = cap.n_around;
            let first = 1 + (cap.n_rings - 1) * n_around;
            let ring: Vec<u32> =
                (0..n_around).map(|j| offset + (first + j) as u32).collect();
            rings.insert(cid, ring);

            let info = self.config.circle(cid);
            let sphere_center = match info.sphere {
                LatticeIndex::Sphere { i, j } => Point3::new(0.0, i as f64, j as f64),
                _ => unreachable!(),
            };
            let mut curve = Vec::with_capacity(n_around);
            for k in 0..n_around {
                let theta = 2.0 * std::f64::consts::PI * k as f64 / n_around as f64;
                let p0 = info.point(theta);
                let rotated = sphere_center + rot_phi * (p0 - sphere_center);
                let ell = cap.lower[0] + cap.lower[1] * theta.cos() + cap.lower[2] * theta.sin();
                let x_model = f_data.eval(theta) / s + ell - baseline.lower[0];
                // Baseline cap boundary normal, mirrored for the upper side.
                let nb = {
                    let first_b = 1 + (baseline.n_rings - 1) * baseline.n_around;
                    baseline.mesh.normals[first_b + (k % baseline.n_around)]
                };
                curve.push(rotated + s * x_model * map_dir(&nb));
            }
            sphere_bc.insert(info.partner, curve);
        }
        let mesh = TriMesh::with_normals(
            vertices,
            faces,
            normals.iter().map(|n| n.normalize()).collect(),
        )?;
        let a_sq = VertexField::constant(mesh.vertex_count(), 8.0);
        Ok(ComponentSolve {
            index: neck.index,
            mesh,
            rings,
            clamped_rings: Vec::new(),
            a_sq,
            waist_center: None,
            waist_radius: None,
            sphere_bc,
        })
    }

    /// Base mesh of a sphere component (canonical center, translated).
    pub fn sphere_base(
        &self,
        sphere: &crate::lattice::SphereComponent,
    ) -> Result<(TriMesh, BTreeMap<u32, Vec<u32>>), DefectError> {
        let mut disks = Vec::new();
        let mut ids = Vec::new();
        for &cid in &sphere.circles {
            let c = self.config.circle(cid);
            let (u, v) = c.axis.frame();
            disks.push(RemovedDisk::with_frame(c.polar_dir, self.config.delta, u, v));
            ids.push(cid);
        }
        // Vertical disks first so the lat-long axis is the column axis.
        let mut order: Vec<usize> = (0..disks.len()).collect();
        order.sort_by_key(|&k| {
            let c = self.config.circle(ids[k]);
            match c.axis {
                Axis::Vertical => (0, (c.polar_dir.z < 0.0) as i64),
                Axis::Horizontal => (1, (c.polar_dir.y < 0.0) as i64),
            }
        });
        let disks: Vec<RemovedDisk> = order.iter().map(|&k| disks[k].clone()).collect();
        let ids: Vec<u32> = order.iter().map(|&k| ids[k]).collect();
        let chart = SphereDomainChart::new(Point3::origin(), disks);
        let built = sphere_domain_mesh(
            &chart,
            self.config.resolution.n_around,
            self.config.resolution.sphere_rows,
        )?;
        let mut mesh = built.mesh;
        mesh.translate(sphere.center.coords);
        let rings: BTreeMap<u32, Vec<u32>> = ids
            .into_iter()
            .zip(built.circle_rings)
            .collect();
        Ok((mesh, rings))
    }

    /// Solve one sphere component given the boundary curves collected from
    /// the paired necks, plus the translation parameters.
    pub fn solve_sphere_component(
        &self,
        sphere: &crate::lattice::SphereComponent,
        xi: &ParamVector,
        neck_bc: &BTreeMap<u32, Vec<Point3<f64>>>,
    ) -> Result<ComponentSolve, DefectError> {
        let (base, rings) = self.sphere_base(sphere)?;
        let mut boundary = Vec::new();
        for (&cid, ring) in &rings {
            let curve = neck_bc.get(&cid).ok_or_else(|| {
                DefectError::Invalid(format!("no boundary curve for circle {cid}"))
            })?;
            let rho = self.background_rho(cid) + xi.rho_of(cid);
            for (k, &v) in ring.iter().enumerate() {
                boundary.push((v, curve[k] + rho));
            }
        }
        let sol = solve_spherical(&base, &boundary, LATTICE_H, self.options.tol)?;
        let a_sq = sphere_a_sq(&sol.mesh, &sol.h);
        Ok(ComponentSolve {
            index: sphere.index,
            mesh: sol.mesh,
            rings,
            clamped_rings: Vec::new(),
            a_sq,
            waist_center: None,
            waist_radius: None,
            sphere_bc: BTreeMap::new(),
        })
    }

    /// Solve every component at the given perturbation of the background.
    pub fn solve_all(
        &self,
        xi: &ParamVector,
    ) -> Result<BTreeMap<LatticeIndex, ComponentSolve>, DefectError> {
        let mut out = BTreeMap::new();
        let mut sphere_bc: BTreeMap<u32, Vec<Point3<f64>>> = BTreeMap::new();
        let necks = self.config.necks.clone();
        for neck in &necks {
            let solved = self.solve_neck_component(neck, xi)?;
            for (cid, curve) in &solved.sphere_bc {
                sphere_bc.insert(*cid, curve.clone());
            }
            out.insert(neck.index, solved);
        }
        let spheres = self.config.spheres.clone();
        for sphere in &spheres {
            let solved = self.solve_sphere_component(sphere, xi, &sphere_bc)?;
            out.insert(sphere.index, solved);
        }
        Ok(out)
    }

    /// Conormal angles against the reference frames, per circle of a solved
    /// component.
    pub fn lambda_on_rings(
        &self,
        solve: &ComponentSolve,
    ) -> Result<BTreeMap<u32, FourierCircle>, DefectError> {
        let mut out = BTreeMap::new();
        for (&cid, ring) in &solve.rings {
            let info = self.config.circle(cid);
            let eta = weak_ring_conormals(&solve.mesh, ring, LATTICE_H);
            let n = ring.len();
            let mut angles = Vec::with_capacity(n);
            for (k, e) in eta.iter().enumerate() {
                let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                let eta0 = info.reference_conormal(self.config.delta, theta);
                let n0 = info.reference_normal(self.config.delta, theta);
                let pe = e.dot(&eta0);
                let pn = e.dot(&n0);
                let norm = (pe * pe + pn * pn).sqrt();
                if norm < 0.5 {
                    return Err(DefectError::DegenerateProjection(cid, norm));
                }
                angles.push(pn.atan2(pe));
            }
            out.insert(cid, circle_fourier(&angles, self.modes())?);
        }
        Ok(out)
    }

    /// Evaluate the defect at a perturbation `xi` of the background: the raw
    /// angle field and its even part.
    pub fn eval_lambda(&self, xi: &ParamVector) -> Result<DefectValue, DefectError> {
        let solves = self.solve_all(xi)?;
        self.lambda_of_solves(&solves)
    }

    pub fn lambda_of_solves(
        &self,
        solves: &BTreeMap<LatticeIndex, ComponentSolve>,
    ) -> Result<DefectValue, DefectError> {
        let mut lambda = BoundaryFunction::new();
        for solve in solves.values() {
            for (cid, f) in self.lambda_on_rings(solve)? {
                lambda.set(cid, f);
            }
        }
        let mut capital = BoundaryFunction::new();
        for (&cid, f) in &lambda.circles {
            let partner = self.config.circle(cid).partner;
            if let Some(fp) = lambda.get(partner) {
                capital.set(cid, f.add(fp).scale(0.5));
            }
        }
        Ok(DefectValue { lambda, capital })
    }

    /// Measure the calibration factor: the response rate of the neck-side
    /// mode-0 angle to the geometric flux at the family origin, and install
    /// it so the angle responds to the calibrated parameter at rate -1.
    pub fn calibrate(&mut self) -> Result<(), DefectError> {
        self.beta_tau = 1.0;
        let h = 2e-3;
        let mut angles = Vec::new();
        for tau_g in [h, 2.0 * h, 4.0 * h] {
            let sol = solve_neck_axisymmetric(
                &NeckSpec::axisymmetric(tau_g, self.delta_model),
                self.config.resolution.n_around,
                self.config.resolution.neck_inner,
                self.options.tol,
            )?;
            // Angle of the lower boundary conormal against the cap reference,
            // in a local vertical tangency frame.
            let ring: Vec<u32> = (0..sol.n_around).map(|j| sol.vertex(0, j) as u32).collect();
            let eta = ring_outward_conormals(&sol.mesh, &ring);
            // Reference frames of the lower circle of a vertical tangency at
            // the origin (sphere below): polar dir +e_z, neck side.
            let delta = self.config.delta;
            let cos_td = 1.0 - 2.0 * delta * delta;
            let sin_td = 2.0 * delta * (1.0 - delta * delta).sqrt();
            let mut mean = 0.0;
            for (k, e) in eta.iter().enumerate() {
                let theta = 2.0 * std::f64::consts::PI * k as f64 / sol.n_around as f64;
                let e_r = Vector3::new(theta.cos(), theta.sin(), 0.0);
                let eta0 = cos_td * e_r - sin_td * Vector3::z();
                let n0 = sin_td * e_r + cos_td * Vector3::z();
                mean += e.dot(&n0).atan2(e.dot(&eta0));
            }
            angles.push(mean / sol.n_around as f64);
        }
        // Secant slopes at steps h and 2h, Richardson-extrapolated to zero.
        let s1 = (angles[1] - angles[0]) / h;
        let s2 = (angles[2] - angles[1]) / (2.0 * h);
        let dl = 2.0 * s1 - s2;
        if dl >= 0.0 {
            return Err(DefectError::Invalid(format!(
                "flux calibration found non-negative angle response {dl}"
            )));
        }
        self.beta_tau = -dl;
        Ok(())
    }
}

/// |A|^2 for a CMC surface of revolution about `axis` through `origin`:
/// with the azimuthal curvature k2 read from the mesh, |A|^2 = (H - k2)^2 +
/// k2^2.
fn revolution_a_sq(mesh: &TriMesh, origin: Point3<f64>, axis: &Vector3<f64>) -> VertexField {
    let h = LATTICE_H;
    let n = mesh.vertex_count();
    let mut out = vec![0.0; n];
    for v in 0..n {
        let d = mesh.vertices[v] - origin;
        let radial = d - d.dot(axis) * axis;
        let r = radial.norm().max(1e-12);
        // k2 = sin(psi) / r where sin(psi) is the axial tilt of the profile
        // tangent; equivalently the radial component of the outward normal
        // over r.
        let sin_psi = mesh.normals[v].dot(&radial) / r;
        let k2 = sin_psi / r;
        out[v] = (h - k2).powi(2) + k2 * k2;
    }
    VertexField(out)
}

/// |A|^2 for a solved sphere component: the base is the round radius-1/2
/// sphere (|A|^2 = 8); an outward offset `h` flattens it at first order per
/// the umbilic expansion |A|^2 = 8 (1 - 4 h) + O(h^2).
fn sphere_a_sq(mesh: &TriMesh, h: &VertexField) -> VertexField {
    VertexField((0..mesh.vertex_count()).map(|v| 8.0 * (1.0 - 4.0 * h[v])).collect())
}

/// Outward conormals along a boundary ring of a solved CMC mesh by
/// variational flux recovery: for each coordinate function, the boundary
/// flux is the assembled stiffness residual minus the curvature load, which
/// is insensitive to mesh irregularity near the ring.
pub fn weak_ring_conormals(mesh: &TriMesh, ring: &[u32], h_cmc: f64) -> Vec<Vector3<f64>> {
    let kx = crate::mesh::stiffness_times_positions(mesh);
    let areas = crate::mesh::mixed_vertex_areas(mesh);
    let lumped = crate::fem::loop_lumped_lengths(mesh, ring);
    let rings = mesh.vertex_rings();
    let n = ring.len();
    let mut out = Vec::with_capacity(n);
    for (k, &v) in ring.iter().enumerate() {
        let normal = crate::mesh::curvature_fitted_normal(mesh, &rings, v as usize);
        let flux = kx[v as usize] - h_cmc * areas[v as usize] * normal;
        let eta = flux / lumped[k];
        // Project onto the tangent plane and normalize; the raw recovery can
        // carry a small normal component from the curvature load mismatch.
        let tangent_part = eta - eta.dot(&normal) * normal;
        out.push(tangent_part.normalize());
    }
    out
}

/// Outward conormals along a ring of boundary vertices of the mesh, indexed
/// like the ring. Normals come from quadric fits, which stay second-order
/// accurate on the one-sided boundary neighborhoods.
pub fn ring_outward_conormals(mesh: &TriMesh, ring: &[u32]) -> Vec<Vector3<f64>> {
    let n = ring.len();
    let rings = mesh.vertex_rings();
    let mut out = Vec::with_capacity(n);
    // Outward orientation: away from the mean of the interior neighbors.
    let mut votes = 0.0f64;
    let mut raw = Vec::with_capacity(n);
    for k in 0..n {
        let prev = mesh.vertices[ring[(k + n - 1) % n] as usize];
        let next = mesh.vertices[ring[(k + 1) % n] as usize];
        let tangent = (next - prev).normalize();
        let normal = crate::mesh::curvature_fitted_normal(mesh, &rings, ring[k] as usize);
        let eta = tangent.cross(&normal).normalize();
        let mut interior = Vector3::zeros();
        let mut count = 0.0;
        for &w in &rings[ring[k] as usize] {
            if !ring.contains(&w) {
                interior += mesh.vertices[w as usize].coords;
                count += 1.0;
            }
        }
        if count > 0.0 {
            let dir = mesh.vertices[ring[k] as usize].coords - interior / count;
            votes += eta.dot(&dir);
        }
        raw.push(eta);
    }
    let sign = if votes >= 0.0 { 1.0 } else { -1.0 };
    for eta in raw {
        out.push(sign * eta);
    }
    out
}
