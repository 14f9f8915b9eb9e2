//! Translational kernel fields and the closed-form projection constant.
//!
//! The kernel of the even Dirichlet-to-Neumann operator is spanned, sphere by
//! sphere, by the coordinate components of the position relative to the
//! sphere center; on the boundary circles these restrict to explicit lower
//! modes.

use crate::lattice::{Configuration, LatticeIndex};
use crate::mesh::{BoundaryFunction, FourierCircle};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelAxis {
    X,
    Y,
    Z,
}

impl KernelAxis {
    pub fn unit(&self) -> nalgebra::Vector3<f64> {
        match self {
            KernelAxis::X => nalgebra::Vector3::x(),
            KernelAxis::Y => nalgebra::Vector3::y(),
            KernelAxis::Z => nalgebra::Vector3::z(),
        }
    }
}

/// Projection constant `c_delta = pi delta sqrt(1 - delta^2) (1/2 - delta^2)`
/// of the flux-variation pairing against the in-plane kernel fields.
pub fn c_delta(delta: f64) -> f64 {
    std::f64::consts::PI * delta * (1.0 - delta * delta).sqrt() * (0.5 - delta * delta)
}

/// Trace of the kernel field of sphere `(i, j)` along `axis` on that sphere's
/// boundary circles: the coordinate of the circle point relative to the
/// sphere center. Returned on the sphere-side circle ids.
pub fn kernel_basis_trace(
    config: &Configuration,
    i: i64,
    j: i64,
    axis: KernelAxis,
    modes: usize,
) -> BoundaryFunction {
    let mut out = BoundaryFunction::new();
    let sphere = config
        .sphere_component(i, j)
        .expect("kernel basis requested for an existing sphere");
    let e = axis.unit();
    for &cid in &sphere.circles {
        let c = config.circle(cid);
        let (u, v) = c.axis.frame();
        let offset = c.center - sphere.center;
        let mut f = FourierCircle::zero(modes);
        f.a0 = offset.dot(&e);
        if modes >= 1 {
            f.cos[0] = c.radius * u.dot(&e);
            f.sin[0] = c.radius * v.dot(&e);
        }
        out.set(cid, f);
    }
    out
}

/// L2 projections of a boundary function onto the kernel fields of every
/// sphere, over the sphere-side circles.
pub fn kernel_projections(
    config: &Configuration,
    g: &BoundaryFunction,
) -> Vec<((i64, i64), [f64; 3])> {
    let mut out = Vec::new();
    for sphere in &config.spheres {
        let (i, j) = match sphere.index {
            LatticeIndex::Sphere { i, j } => (i, j),
            _ => unreachable!(),
        };
        let mut projections = [0.0f64; 3];
        for (a, axis) in [KernelAxis::X, KernelAxis::Y, KernelAxis::Z].iter().enumerate() {
            let k = kernel_basis_trace(config, i, j, *axis, 1);
            let mut acc = 0.0;
            for &cid in &sphere.circles {
                if let (Some(gf), Some(kf)) = (g.get(cid), k.get(cid)) {
                    acc += gf.inner(kf, config.circle(cid).radius);
                }
            }
            projections[a] = acc;
        }
        out.push(((i, j), projections));
    }
    out
}

/// Background waist radius entering the phase-projection pattern; measured
/// from a solved branch rather than asserted, see the pipeline docs.
pub fn phase_projection_factor(waist_radius: f64) -> f64 {
    (2.0 - waist_radius) / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_configuration, Axis, Resolution};
    use std::collections::BTreeMap;

    #[test]
    fn c_delta_closed_form() {
        // delta = 0.1: pi * 0.1 * sqrt(0.99) * 0.49.
        let c = c_delta(0.1);
        assert!((c - 0.15316).abs() < 1e-5, "c_delta {c}");
        let direct = std::f64::consts::PI * 0.1 * 0.99f64.sqrt() * 0.49;
        assert!((c - direct).abs() < 1e-16);
    }

    #[test]
    fn kernel_trace_values_on_circles() {
        let mut f = BTreeMap::new();
        f.insert(1, vec![0]);
        let config =
            build_configuration(1, 2, &f, 0.15, 0.02, 0.5, Resolution::default()).unwrap();
        let delta = 0.15;
        // k^y on sphere (0,0): on the right (horizontal, +y) circle it is the
        // constant 1/2 - delta^2; on vertical circles it is the sin mode with
        // amplitude r0 (frame (e_x, e_y)).
        let k = kernel_basis_trace(&config, 0, 0, KernelAxis::Y, 2);
        let sphere = config.sphere_component(0, 0).unwrap();
        for &cid in &sphere.circles {
            let c = config.circle(cid);
            let kf = k.get(cid).unwrap();
            match c.axis {
                Axis::Horizontal => {
                    let expect = (0.5 - delta * delta) * c.polar_dir.y;
                    assert!((kf.a0 - expect).abs() < 1e-14);
                    assert!(kf.cos[0].abs() < 1e-14 && kf.sin[0].abs() < 1e-14);
                }
                Axis::Vertical => {
                    assert!(kf.a0.abs() < 1e-14);
                    assert!(kf.cos[0].abs() < 1e-14);
                    assert!((kf.sin[0] - c.radius).abs() < 1e-14);
                }
            }
        }
        // k^z on a top circle: constant 1/2 - delta^2.
        let k = kernel_basis_trace(&config, 0, 0, KernelAxis::Z, 2);
        for &cid in &sphere.circles {
            let c = config.circle(cid);
            if c.axis == Axis::Vertical {
                let expect = (0.5 - delta * delta) * c.polar_dir.z;
                assert!((k.get(cid).unwrap().a0 - expect).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn projection_of_constant_against_ky_gives_c_delta() {
        // A function equal to -tau/2 on the left circle of sphere (i,j)
        // projects onto k^y as +c_delta tau; this is the closed-form pattern
        // the flux variations reproduce.
        let mut f = BTreeMap::new();
        f.insert(1, vec![0]);
        let delta = 0.15;
        let config =
            build_configuration(1, 2, &f, delta, 0.02, 0.5, Resolution::default()).unwrap();
        // Left circle of sphere (1, 0): polar dir -e_y.
        let sphere = config.sphere_component(1, 0).unwrap();
        let left = sphere
            .circles
            .iter()
            .copied()
            .find(|&cid| {
                let c = config.circle(cid);
                c.axis == Axis::Horizontal && c.polar_dir.y < 0.0
            })
            .unwrap();
        let tau = 0.01;
        let mut g = BoundaryFunction::new();
        let mut fc = FourierCircle::zero(1);
        fc.a0 = -tau / 2.0;
        g.set(left, fc);
        let projections = kernel_projections(&config, &g);
        let ((_, _), p) = projections
            .iter()
            .find(|((i, j), _)| *i == 1 && *j == 0)
            .unwrap();
        // k^y on the left circle is -(1/2 - delta^2); the L2 product is
        // (-tau/2)(-(1/2-delta^2)) * 2 pi r0 = c_delta tau.
        let expect = c_delta(delta) * tau;
        assert!((p[1] - expect).abs() < 1e-12, "projection {} vs {}", p[1], expect);
        assert!(p[0].abs() < 1e-15 && p[2].abs() < 1e-15);
    }
}
