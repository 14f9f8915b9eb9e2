//! Discrete Dirichlet-to-Neumann operator on even boundary functions,
//! assembled per component from the weak conormal fluxes of Jacobi
//! extensions.
//!
//! The matrix is built in the per-pair Fourier basis with the boundary L2
//! pairing, which renders the self-adjointness of the even operator as exact
//! matrix symmetry up to solver roundoff.

use std::collections::BTreeMap;

use faer::prelude::*;

use crate::fem::{loop_lumped_lengths, JacobiSystem};
use crate::mesh::{circle_fourier, BoundaryFunction, FourierCircle, TriMesh, VertexField};

use super::DefectError;

/// One component of the disjoint union: a mesh whose Dirichlet boundary is a
/// set of circle rings (vertices in tangency-frame order), plus the squared
/// second fundamental form entering the stability operator.
pub struct BoundaryComponent {
    pub mesh: TriMesh,
    pub a_sq: VertexField,
    /// `(circle id, ring vertices in theta order)`.
    pub rings: Vec<(u32, Vec<u32>)>,
}

struct FactoredComponent {
    system: JacobiSystem,
    rings: Vec<(u32, Vec<u32>)>,
    lumped: Vec<(u32, Vec<f64>)>,
    nv: usize,
}

/// The assembled even-DtN operator over a set of circle pairs.
pub struct DtnSystem {
    components: Vec<FactoredComponent>,
    /// Pairs `(a, b)` of circle ids; the even basis lives on both copies.
    pairs: Vec<(u32, u32)>,
    /// Fourier modes per circle in the basis (total `2 modes + 1` functions).
    pub modes: usize,
    pub radius: f64,
}

fn basis_eval(k: usize, theta: f64) -> f64 {
    if k == 0 {
        1.0
    } else if k % 2 == 1 {
        (((k + 1) / 2) as f64 * theta).cos()
    } else {
        ((k / 2) as f64 * theta).sin()
    }
}

impl DtnSystem {
    pub fn assemble(
        components: Vec<BoundaryComponent>,
        pairs: Vec<(u32, u32)>,
        radius: f64,
        modes: usize,
    ) -> Result<DtnSystem, DefectError> {
        let mut factored = Vec::new();
        for comp in components {
            let dirichlet: Vec<u32> =
                comp.rings.iter().flat_map(|(_, ring)| ring.iter().copied()).collect();
            let system = JacobiSystem::assemble(&comp.mesh, &comp.a_sq, &dirichlet)?;
            let lumped = comp
                .rings
                .iter()
                .map(|(id, ring)| (*id, loop_lumped_lengths(&comp.mesh, ring)))
                .collect();
            factored.push(FactoredComponent {
                system,
                rings: comp.rings,
                lumped,
                nv: comp.mesh.vertex_count(),
            });
        }
        Ok(DtnSystem { components: factored, pairs, modes, radius })
    }

    pub fn basis_size(&self) -> usize {
        self.pairs.len() * (2 * self.modes + 1)
    }

    fn nodal_data(&self, comp: &FactoredComponent, g: &BoundaryFunction) -> Vec<f64> {
        let mut bc = vec![0.0; comp.nv];
        for (id, ring) in &comp.rings {
            if let Some(f) = g.get(*id) {
                let n = ring.len();
                for (k, &v) in ring.iter().enumerate() {
                    let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                    bc[v as usize] = f.eval(theta);
                }
            }
        }
        bc
    }

    /// Apply the Dirichlet-to-Neumann operator to an even boundary function:
    /// solve the Jacobi equation on each component with trace `g` and return
    /// the even part of the conormal derivative, circle by circle.
    pub fn apply(&self, g: &BoundaryFunction) -> Result<BoundaryFunction, DefectError> {
        let mut per_circle: BTreeMap<u32, FourierCircle> = BTreeMap::new();
        for comp in &self.components {
            let bc = self.nodal_data(comp, g);
            let u = comp.system.solve(&bc);
            let flux = comp.system.weak_flux(&u);
            for ((id, ring), (_, lump)) in comp.rings.iter().zip(&comp.lumped) {
                let samples: Vec<f64> = ring
                    .iter()
                    .zip(lump)
                    .map(|(&v, &w)| flux[v as usize] / w)
                    .collect();
                let f = circle_fourier(&samples, self.modes)?;
                per_circle.insert(*id, f);
            }
        }
        // Even part across pairs.
        let mut out = BoundaryFunction::new();
        for &(a, b) in &self.pairs {
            let fa = per_circle
                .get(&a)
                .cloned()
                .unwrap_or_else(|| FourierCircle::zero(self.modes));
            let fb = per_circle
                .get(&b)
                .cloned()
                .unwrap_or_else(|| FourierCircle::zero(self.modes));
            let even = fa.add(&fb).scale(0.5);
            out.set(a, even.clone());
            out.set(b, even);
        }
        Ok(out)
    }

    /// Basis function `k` of pair `p` as a boundary function on both copies.
    pub fn basis_function(&self, p: usize, k: usize) -> BoundaryFunction {
        let mut f = FourierCircle::zero(self.modes);
        if k == 0 {
            f.a0 = 1.0;
        } else if k % 2 == 1 {
            f.cos[(k - 1) / 2] = 1.0;
        } else {
            f.sin[k / 2 - 1] = 1.0;
        }
        let (a, b) = self.pairs[p];
        let mut out = BoundaryFunction::new();
        out.set(a, f.clone());
        out.set(b, f);
        out
    }

    /// Assemble the dense matrix `A[(q,l),(p,k)] = <b_l^q, dtn b_k^p>` with
    /// the boundary L2 pairing over both circle copies, in the orthonormal
    /// scaling of the basis.
    pub fn matrix(&self) -> Result<Mat<f64>, DefectError> {
        let nb = 2 * self.modes + 1;
        let size = self.basis_size();
        let mut a = Mat::<f64>::zeros(size, size);
        // Orthonormalization weights: |1|^2 = 2 * 2 pi r, |cos|^2 = 2 pi r
        // over the two copies.
        let weight = |k: usize| -> f64 {
            let two_pi_r = 2.0 * std::f64::consts::PI * self.radius;
            if k == 0 {
                (2.0 * two_pi_r).sqrt()
            } else {
                (two_pi_r).sqrt()
            }
        };
        for p in 0..self.pairs.len() {
            for k in 0..nb {
                let g = self.basis_function(p, k);
                let col = p * nb + k;
                // Solve on every component and pair the weak flux against all
                // basis functions.
                for comp in &self.components {
                    let bc = self.nodal_data(comp, &g);
                    if bc.iter().all(|&v| v == 0.0) {
                        continue;
                    }
                    let u = comp.system.solve(&bc);
                    let flux = comp.system.weak_flux(&u);
                    for (id, ring) in &comp.rings {
                        let q = self
                            .pairs
                            .iter()
                            .position(|&(x, y)| x == *id || y == *id)
                            .expect("ring belongs to a pair");
                        let n = ring.len();
                        for l in 0..nb {
                            let mut acc = 0.0;
                            for (kk, &v) in ring.iter().enumerate() {
                                let theta = 2.0 * std::f64::consts::PI * kk as f64 / n as f64;
                                acc += flux[v as usize] * basis_eval(l, theta);
                            }
                            let row = q * nb + l;
                            a[(row, col)] += acc / (weight(l) * weight(k));
                        }
                    }
                }
            }
        }
        Ok(a)
    }
}

/// The matched-leaf Dirichlet-to-Neumann setup: one spherical domain with
/// four excisions plus the four caps, glued along exact circles (the zero
/// flux tangency state, where the leaf closes up to the round sphere). The
/// returned kernel traces are the three translational fields.
pub fn matched_leaf_dtn(
    delta: f64,
    n_around: usize,
    rows: usize,
    modes: usize,
) -> Result<(DtnSystem, [BoundaryFunction; 3]), DefectError> {
    use crate::surfaces::{
        excision_circle_radius, spherical_cap_mesh, sphere_domain_mesh, RemovedDisk,
        SphereDomainChart,
    };
    use nalgebra::{Point3, Vector3};

    let dirs = [
        (Vector3::z(), Vector3::x(), Vector3::y()),
        (-Vector3::z(), Vector3::x(), Vector3::y()),
        (Vector3::y(), Vector3::z(), Vector3::x()),
        (-Vector3::y(), Vector3::z(), Vector3::x()),
    ];
    let disks: Vec<RemovedDisk> = dirs
        .iter()
        .map(|(d, u, v)| RemovedDisk::with_frame(*d, delta, *u, *v))
        .collect();
    let chart = SphereDomainChart::new(Point3::origin(), disks.clone());
    let sm = sphere_domain_mesh(&chart, n_around, rows)?;
    let mut components = vec![BoundaryComponent {
        a_sq: VertexField::constant(sm.mesh.vertex_count(), 8.0),
        rings: sm
            .circle_rings
            .iter()
            .enumerate()
            .map(|(k, r)| (2 * k as u32, r.clone()))
            .collect(),
        mesh: sm.mesh,
    }];
    for (k, disk) in disks.iter().enumerate() {
        let cap = spherical_cap_mesh(Point3::origin(), disk, n_around, (rows / 3).max(6))?;
        components.push(BoundaryComponent {
            a_sq: VertexField::constant(cap.mesh.vertex_count(), 8.0),
            rings: vec![(2 * k as u32 + 1, cap.circle_rings[0].clone())],
            mesh: cap.mesh,
        });
    }
    let pairs: Vec<(u32, u32)> = (0..4).map(|k| (2 * k as u32, 2 * k as u32 + 1)).collect();
    let radius = excision_circle_radius(delta);
    let sys = DtnSystem::assemble(components, pairs, radius, modes)?;

    let axes = [Vector3::x(), Vector3::y(), Vector3::z()];
    let kernels = axes.map(|e| {
        let mut bf = BoundaryFunction::new();
        for (k, (d, u, v)) in dirs.iter().enumerate() {
            let mut f = FourierCircle::zero(modes);
            f.a0 = (0.5 - delta * delta) * d.dot(&e);
            f.cos[0] = radius * u.dot(&e);
            f.sin[0] = radius * v.dot(&e);
            bf.set(2 * k as u32, f.clone());
            bf.set(2 * k as u32 + 1, f);
        }
        bf
    });
    Ok((sys, kernels))
}

/// Relative asymmetry `|A - A^T| / |A|` in the Frobenius norm.
pub fn relative_asymmetry(a: &Mat<f64>) -> f64 {
    let n = a.nrows();
    let mut asym = 0.0f64;
    let mut norm = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            asym += (a[(i, j)] - a[(j, i)]).powi(2);
            norm += a[(i, j)].powi(2);
        }
    }
    (asym / norm).sqrt()
}

/// Singular values in decreasing order.
pub fn singular_values(a: &Mat<f64>) -> Vec<f64> {
    let svd = a.svd().expect("svd");
    let s = svd.S();
    let mut out: Vec<f64> = (0..a.nrows().min(a.ncols())).map(|i| s[i]).collect();
    out.sort_by(|x, y| y.partial_cmp(x).unwrap());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leaf_dtn_symmetry_and_kernel() {
        // Coarse version of the matched-leaf check: the even operator is
        // symmetric to roundoff and carries exactly the three translational
        // near-null directions, well separated from the rest of the
        // spectrum.
        let (sys, kernels) = matched_leaf_dtn(0.15, 48, 44, 10).unwrap();
        let m = sys.matrix().unwrap();
        assert!(relative_asymmetry(&m) < 1e-12);
        let sv = singular_values(&m);
        let k = sv.len();
        let ratio = sv[k - 3] / sv[0];
        let gap = sv[k - 4] / sv[k - 3];
        assert!(ratio < 5e-5, "kernel ratio {ratio}");
        assert!(gap > 1e2, "kernel gap {gap}");
        // Applying the operator to a kernel trace yields a small response
        // relative to a generic higher mode.
        let generic = sys.apply(&sys.basis_function(0, 3)).unwrap().norm_sup_coeff();
        for bf in &kernels {
            let out = sys.apply(bf).unwrap().norm_sup_coeff();
            assert!(out < 5e-3 * generic.max(1.0), "kernel response {out} vs {generic}");
        }
    }

    #[test]
    fn dtn_locality_decay() {
        // A higher mode supported on one pair produces responses that decay
        // strongly on the other pairs of the leaf.
        let (sys, _) = matched_leaf_dtn(0.15, 48, 44, 8).unwrap();
        let g = sys.basis_function(0, 5);
        let out = sys.apply(&g).unwrap();
        let on = out.get(0).unwrap().norm_sup_coeff();
        let mut off: f64 = 0.0;
        for id in [2u32, 4, 6] {
            off = off.max(out.get(id).unwrap().norm_sup_coeff());
        }
        assert!(off < on / 1e2, "off-pair leak {off} vs on-pair {on}");
    }
}
