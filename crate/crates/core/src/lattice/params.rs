//! Parameter vectors on the lattice, the even/odd split under the pairing,
//! the reflection actions, and the weighted and vertically graded norms.

use nalgebra::Vector3;
use std::collections::BTreeMap;

use crate::mesh::{BoundaryFunction, FourierCircle};

use super::{Axis, Configuration, LatticeIndex};

pub type PerCircleVec = BTreeMap<u32, Vector3<f64>>;

/// The parameter vector `(tau, phi, rho, f)`. Neck scalars are perturbations
/// on top of the background flux assignment; `rho` holds per-circle
/// translations of the sphere boundaries keyed by the sphere-side circle id;
/// `f` holds even higher-mode Dirichlet data keyed by the sphere-side circle
/// id of each pair. Absent entries are zero.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamVector {
    pub tau_v: BTreeMap<(i64, i64), f64>,
    pub phi_v: BTreeMap<(i64, i64), f64>,
    pub tau_h: BTreeMap<(i64, i64), f64>,
    pub phi_h: BTreeMap<(i64, i64), f64>,
    pub rho: PerCircleVec,
    pub f: BoundaryFunction,
}

impl ParamVector {
    pub fn zero() -> ParamVector {
        ParamVector::default()
    }

    pub fn tau(&self, index: LatticeIndex) -> f64 {
        match index {
            LatticeIndex::VNeck { i, j } => self.tau_v.get(&(i, j)).copied().unwrap_or(0.0),
            LatticeIndex::HNeck { i, j } => self.tau_h.get(&(i, j)).copied().unwrap_or(0.0),
            LatticeIndex::Sphere { .. } => 0.0,
        }
    }

    pub fn phi(&self, index: LatticeIndex) -> f64 {
        match index {
            LatticeIndex::VNeck { i, j } => self.phi_v.get(&(i, j)).copied().unwrap_or(0.0),
            LatticeIndex::HNeck { i, j } => self.phi_h.get(&(i, j)).copied().unwrap_or(0.0),
            LatticeIndex::Sphere { .. } => 0.0,
        }
    }

    pub fn rho_of(&self, circle: u32) -> Vector3<f64> {
        self.rho.get(&circle).copied().unwrap_or_else(Vector3::zeros)
    }

    pub fn f_of(&self, pair_key: u32, modes: usize) -> FourierCircle {
        self.f.get(pair_key).cloned().unwrap_or_else(|| FourierCircle::zero(modes))
    }

    pub fn add_scaled(&self, other: &ParamVector, s: f64) -> ParamVector {
        let mut out = self.clone();
        for (k, v) in &other.tau_v {
            *out.tau_v.entry(*k).or_insert(0.0) += s * v;
        }
        for (k, v) in &other.phi_v {
            *out.phi_v.entry(*k).or_insert(0.0) += s * v;
        }
        for (k, v) in &other.tau_h {
            *out.tau_h.entry(*k).or_insert(0.0) += s * v;
        }
        for (k, v) in &other.phi_h {
            *out.phi_h.entry(*k).or_insert(0.0) += s * v;
        }
        for (k, v) in &other.rho {
            let e = out.rho.entry(*k).or_insert_with(Vector3::zeros);
            *e += s * v;
        }
        out.f = out.f.add(&other.f.scale(s));
        out
    }

    pub fn sup_norm(&self) -> f64 {
        let mut m = 0.0f64;
        for v in self.tau_v.values().chain(self.phi_v.values()) {
            m = m.max(v.abs());
        }
        for v in self.tau_h.values().chain(self.phi_h.values()) {
            m = m.max(v.abs());
        }
        for v in self.rho.values() {
            m = m.max(v.amax());
        }
        m.max(self.f.norm_sup_coeff())
    }

    /// Reflect through the plane `{z = 0}`. Sphere `(i, j)` maps to
    /// `(i, -j)`, the vertical neck `(i, j)` to `(i, -j - 1)`, the horizontal
    /// neck `(i, j)` to `(i, -j)`; phases flip sign, fluxes are invariant.
    pub fn reflect_z(&self, config: &Configuration) -> ParamVector {
        let mut out = ParamVector::zero();
        for (&(i, j), &v) in &self.tau_v {
            out.tau_v.insert((i, -j - 1), v);
        }
        for (&(i, j), &v) in &self.phi_v {
            out.phi_v.insert((i, -j - 1), -v);
        }
        for (&(i, j), &v) in &self.tau_h {
            out.tau_h.insert((i, -j), v);
        }
        for (&(i, j), &v) in &self.phi_h {
            out.phi_h.insert((i, -j), -v);
        }
        for (&c, v) in &self.rho {
            let image = reflect_circle_z(config, c);
            out.rho.insert(image, Vector3::new(v.x, v.y, -v.z));
        }
        for (&c, f) in &self.f.circles {
            let image = reflect_circle_z(config, c);
            let axis = config.circle(c).axis;
            out.f.set(image, reflect_fourier_z(f, axis));
        }
        out
    }

    /// Exactly symmetric under the z-reflection.
    pub fn is_z_symmetric(&self, config: &Configuration, tol: f64) -> bool {
        let r = self.reflect_z(config);
        diff_sup(self, &r) <= tol
    }
}

fn diff_sup(a: &ParamVector, b: &ParamVector) -> f64 {
    a.add_scaled(b, -1.0).sup_norm()
}

/// Image of a circle id under the z-reflection.
pub fn reflect_circle_z(config: &Configuration, id: u32) -> u32 {
    let c = config.circle(id);
    let (si, sj) = match c.sphere {
        LatticeIndex::Sphere { i, j } => (i, -j),
        _ => unreachable!("circle owner is always a sphere"),
    };
    let polar = Vector3::new(c.polar_dir.x, c.polar_dir.y, -c.polar_dir.z);
    config
        .circles
        .iter()
        .find(|d| {
            d.side == c.side
                && d.sphere == LatticeIndex::Sphere { i: si, j: sj }
                && (d.polar_dir - polar).norm() < 1e-12
        })
        .map(|d| d.id)
        .expect("configuration is closed under the z-reflection")
}

/// Coefficient action of the z-reflection on a circle function. Vertical
/// circles keep their frame; horizontal circles (frame `(e_z, e_x)`) see the
/// angle map `theta -> pi - theta`.
pub fn reflect_fourier_z(f: &FourierCircle, axis: Axis) -> FourierCircle {
    match axis {
        Axis::Vertical => f.clone(),
        Axis::Horizontal => {
            let mut out = f.clone();
            for m in 1..=f.modes() {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                out.cos[m - 1] = sign * f.cos[m - 1];
                out.sin[m - 1] = -sign * f.sin[m - 1];
            }
            out
        }
    }
}

/// Even/odd split of a boundary function under the pairing, at coefficient
/// level: paired circles share their parametrization, so `f*` on a circle is
/// the partner's coefficient vector.
pub fn even_odd(bf: &BoundaryFunction, config: &Configuration) -> (BoundaryFunction, BoundaryFunction) {
    let mut even = BoundaryFunction::new();
    let mut odd = BoundaryFunction::new();
    for (&id, f) in &bf.circles {
        let partner = config.circle(id).partner;
        let modes = f.modes();
        let fp = bf.get(partner).cloned().unwrap_or_else(|| FourierCircle::zero(modes));
        even.set(id, f.add(&fp).scale(0.5));
        odd.set(id, f.add(&fp.scale(-1.0)).scale(0.5));
    }
    (even, odd)
}

/// A per-`(i, j)` family of scalars with finite support.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GradedFamily {
    pub values: BTreeMap<(i64, i64), f64>,
}

impl GradedFamily {
    pub fn from_fn(
        is: impl Iterator<Item = i64> + Clone,
        js: impl Iterator<Item = i64> + Clone,
        f: impl Fn(i64, i64) -> f64,
    ) -> GradedFamily {
        let mut values = BTreeMap::new();
        for i in is {
            for j in js.clone() {
                values.insert((i, j), f(i, j));
            }
        }
        GradedFamily { values }
    }

    pub fn get(&self, i: i64, j: i64) -> f64 {
        self.values.get(&(i, j)).copied().unwrap_or(0.0)
    }

    /// Forward differences: vertical `f_{i,j+1} - f_{i,j}` or horizontal
    /// `f_{i+1,j} - f_{i,j}`, over index pairs where both entries exist.
    pub fn differences(&self, direction: Axis) -> GradedFamily {
        let mut values = BTreeMap::new();
        for &(i, j) in self.values.keys() {
            let shifted = match direction {
                Axis::Vertical => (i, j + 1),
                Axis::Horizontal => (i + 1, j),
            };
            if self.values.contains_key(&shifted) {
                values.insert((i, j), self.values[&shifted] - self.values[&(i, j)]);
            }
        }
        GradedFamily { values }
    }

    pub fn sup(&self) -> f64 {
        self.values.values().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Weighted norm `sup cosh^mu(j) |f_{i,j}|`.
pub fn weighted_norm(fam: &GradedFamily, mu: f64) -> f64 {
    fam.values
        .iter()
        .fold(0.0f64, |m, (&(_, j), &v)| m.max((j as f64).cosh().powf(mu) * v.abs()))
}

/// Vertically graded norm: `sup_i sup_j ( |f_{i,0}| + cosh^mu(j) |f_{i,j} -
/// f_{i,j-1}| )`, base value plus weighted backward differences within the
/// support.
pub fn graded_norm(fam: &GradedFamily, mu: f64) -> f64 {
    let mut out = 0.0f64;
    let columns: std::collections::BTreeSet<i64> = fam.values.keys().map(|&(i, _)| i).collect();
    for &i in &columns {
        let base = fam.get(i, 0).abs();
        let mut col = base;
        for (&(ii, j), &v) in &fam.values {
            if ii != i {
                continue;
            }
            if let Some(prev) = fam.values.get(&(i, j - 1)) {
                col = col.max(base + (j as f64).cosh().powf(mu) * (v - prev).abs());
            }
        }
        out = out.max(col);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_configuration, Resolution};

    fn config() -> Configuration {
        let mut f = BTreeMap::new();
        f.insert(1, vec![0]);
        build_configuration(1, 2, &f, 0.15, 0.02, 0.5, Resolution::default()).unwrap()
    }

    #[test]
    fn even_odd_reconstruction_and_projection() {
        let config = config();
        let mut bf = BoundaryFunction::new();
        for c in &config.circles {
            let mut f = FourierCircle::zero(4);
            f.a0 = (c.id as f64 * 0.37).sin();
            f.cos[2] = (c.id as f64 * 0.11).cos();
            f.sin[0] = 0.25 - c.id as f64 * 0.01;
            bf.set(c.id, f);
        }
        let (even, odd) = even_odd(&bf, &config);
        // f = f^e + f^o exactly in coefficients.
        let sum = even.add(&odd);
        for (&id, f) in &bf.circles {
            let s = sum.get(id).unwrap();
            assert!((s.a0 - f.a0).abs() < 1e-15);
            for m in 0..4 {
                assert!((s.cos[m] - f.cos[m]).abs() < 1e-15);
                assert!((s.sin[m] - f.sin[m]).abs() < 1e-15);
            }
        }
        // (f^e)* = f^e: the even part is pairing-invariant.
        for c in &config.circles {
            let a = even.get(c.id).unwrap();
            let b = even.get(c.partner).unwrap();
            assert_eq!(a, b);
        }
        // Idempotence.
        let (even2, odd_of_even) = even_odd(&even, &config);
        for (&id, f) in &even.circles {
            assert_eq!(even2.get(id).unwrap(), f);
        }
        assert!(odd_of_even.norm_sup_coeff() < 1e-15);
    }

    #[test]
    fn pairing_symmetric_function_has_zero_odd_part() {
        let config = config();
        let mut bf = BoundaryFunction::new();
        for c in &config.circles {
            let key = c.id.min(c.partner);
            let mut f = FourierCircle::zero(3);
            f.cos[1] = key as f64 * 0.01;
            bf.set(c.id, f);
        }
        let (_, odd) = even_odd(&bf, &config);
        assert!(odd.norm_sup_coeff() < 1e-15);
    }

    #[test]
    fn one_sided_function_splits_in_half() {
        let config = config();
        let c0 = &config.circles[0];
        let mut bf = BoundaryFunction::zeros(config.circles.iter().map(|c| c.id), 3);
        let mut f = FourierCircle::zero(3);
        f.cos[1] = 1.0;
        bf.set(c0.id, f);
        let (even, odd) = even_odd(&bf, &config);
        assert!((even.get(c0.id).unwrap().cos[1] - 0.5).abs() < 1e-15);
        assert!((even.get(c0.partner).unwrap().cos[1] - 0.5).abs() < 1e-15);
        // f = f^e + f^o, so the odd part is +1/2 on the supported circle.
        assert!((odd.get(c0.id).unwrap().cos[1] - 0.5).abs() < 1e-15);
        assert!((odd.get(c0.partner).unwrap().cos[1] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn difference_families() {
        let constant = GradedFamily::from_fn(0..2, -3..=3, |_, _| 2.5);
        assert!(constant.differences(Axis::Vertical).sup() < 1e-15);
        let linear = GradedFamily::from_fn(0..2, -3..=3, |_, j| j as f64);
        let d = linear.differences(Axis::Vertical);
        for j in -3..3 {
            assert_eq!(d.get(0, j), 1.0);
        }
    }

    #[test]
    fn graded_norm_examples() {
        let zero = GradedFamily::default();
        assert_eq!(graded_norm(&zero, 0.5), 0.0);
        // Constant family: differences vanish, norm is the base value.
        let ones = GradedFamily::from_fn(0..1, -6..=6, |_, _| 1.0);
        assert!((graded_norm(&ones, 1.0) - 1.0).abs() < 1e-12);
        // Partial sums of sech: each weighted backward difference is exactly
        // 1, so the norm is f_{0,0} + 1.
        let sums = GradedFamily::from_fn(0..1, 0..=12, |_, j| {
            (0..=j).map(|k| 1.0 / (k as f64).cosh()).sum()
        });
        // Differences of the partial sums cancel, so allow for the rounding
        // amplified by the cosh weight at the deepest row.
        let expect = sums.get(0, 0) + 1.0;
        assert!((graded_norm(&sums, 1.0) - expect).abs() < 1e-9);
    }

    #[test]
    fn sup_bounded_by_graded_norm() {
        // |f| <= C |f|~_{-mu} with C = sum of the weights, checked for the
        // sech-sum family at mu = 0.5 and J = 8.
        let mu = 0.5;
        let big_j = 8i64;
        let fam = GradedFamily::from_fn(0..1, 0..=big_j, |_, j| {
            (0..=j).map(|k| 1.0 / (k as f64).cosh().powf(mu)).sum()
        });
        let c: f64 = (0..=big_j).map(|k| 1.0 / (k as f64).cosh().powf(mu)).sum();
        let sup = fam.sup();
        let graded = graded_norm(&fam, -mu);
        assert!(sup <= c * graded + 1e-12, "sup {sup} vs C |f| = {}", c * graded);
    }

    #[test]
    fn z_reflection_is_involution_and_fixes_symmetric_vectors() {
        let config = config();
        let mut xi = ParamVector::zero();
        xi.tau_v.insert((0, 1), 0.01);
        xi.phi_v.insert((0, 1), 0.02);
        xi.tau_h.insert((0, 0), 0.003);
        let c0 = config.spheres[0].circles[0];
        xi.rho.insert(c0, Vector3::new(0.0, 0.01, 0.02));
        let mut f = FourierCircle::zero(4);
        f.cos[1] = 0.004;
        f.sin[2] = 0.002;
        xi.f.set(c0, f);
        let back = xi.reflect_z(&config).reflect_z(&config);
        assert!(diff_sup(&xi, &back) < 1e-14);

        // Symmetrized vector is fixed.
        let sym = xi.add_scaled(&xi.reflect_z(&config), 1.0).add_scaled(&ParamVector::zero(), 0.0);
        let sym = ParamVector {
            tau_v: sym.tau_v.iter().map(|(k, v)| (*k, 0.5 * v)).collect(),
            phi_v: sym.phi_v.iter().map(|(k, v)| (*k, 0.5 * v)).collect(),
            tau_h: sym.tau_h.iter().map(|(k, v)| (*k, 0.5 * v)).collect(),
            phi_h: sym.phi_h.iter().map(|(k, v)| (*k, 0.5 * v)).collect(),
            rho: sym.rho.iter().map(|(k, v)| (*k, 0.5 * v)).collect(),
            f: sym.f.scale(0.5),
        };
        assert!(sym.is_z_symmetric(&config, 1e-14));
    }

    #[test]
    fn horizontal_reflection_action_on_coefficients() {
        // theta -> pi - theta: cos m theta picks (-1)^m, sin m theta picks
        // -(-1)^m; check against direct sampling.
        let mut f = FourierCircle::zero(5);
        f.a0 = 0.3;
        for m in 1..=5 {
            f.cos[m - 1] = 0.1 / m as f64;
            f.sin[m - 1] = -0.2 / m as f64;
        }
        let r = reflect_fourier_z(&f, Axis::Horizontal);
        for k in 0..17 {
            let t = 2.0 * std::f64::consts::PI * k as f64 / 17.0;
            let expect = f.eval(std::f64::consts::PI - t);
            assert!((r.eval(t) - expect).abs() < 1e-13);
        }
    }
}
