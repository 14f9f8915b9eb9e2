//! Delaunay (unduloid) profiles: CMC surfaces of revolution at the lattice
//! mean curvature, solved as an arclength ODE in the profile tangent angle.
//!
//! With `H` the sum of principal curvatures and `psi` the tangent angle of
//! the arclength profile `(r(s), z(s))`, the CMC condition is
//! `psi' = H - sin(psi) / r`. The force-balance first integral is
//! `r sin(psi) - (H/2) r^2 = const`; the waist and bulge radii satisfy
//! `a + b = 2 / H`.

use thiserror::Error;

use crate::numerics::rk4_step;
use crate::surfaces::revolve::ProfileSample;
use crate::surfaces::LATTICE_H;

#[derive(Debug, Error)]
pub enum DelaunayError {
    #[error("neck radius {0} outside the unduloid branch (0, {1})")]
    OutOfRange(f64, f64),
    #[error("profile is degenerate near the cylinder limit (neck radius {0})")]
    CylinderDegenerate(f64),
    #[error("profile failed to close after {0} revolutions")]
    NoPeriod(usize),
}

/// Arclength table of one period of an unduloid profile.
#[derive(Debug, Clone)]
pub struct DelaunayProfile {
    /// Target mean curvature (sum convention) of the revolved surface.
    pub h: f64,
    pub neck_radius: f64,
    pub bulge_radius: f64,
    /// Samples over one period starting at the waist, `z(0) = 0`.
    pub samples: Vec<ProfileSample>,
    pub period: f64,
}

impl DelaunayProfile {
    /// Interpolate `(r, z, psi)` at arclength `s` (periodically extended).
    pub fn at(&self, s: f64) -> ProfileSample {
        let span = self.samples.last().unwrap().s;
        let mut t = s.rem_euclid(self.period);
        if t > span {
            t = span;
        }
        let n = self.samples.len();
        let dz_period = self.z_shift_per_period();
        let wraps = ((s - t) / self.period).round();
        let mut lo = 0;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.samples[mid].s <= t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let a = &self.samples[lo];
        let b = &self.samples[hi];
        let w = if b.s > a.s { (t - a.s) / (b.s - a.s) } else { 0.0 };
        ProfileSample {
            s,
            r: a.r + w * (b.r - a.r),
            z: a.z + w * (b.z - a.z) + wraps * dz_period,
            psi: a.psi + w * (b.psi - a.psi),
        }
    }

    /// Axial translation per period.
    pub fn z_shift_per_period(&self) -> f64 {
        self.samples.last().unwrap().z - self.samples.first().unwrap().z
    }

    /// Re-integrate the profile ODE to produce `n + 1` arclength-uniform
    /// samples over `[0, span]`. Unlike interpolating the stored table, this
    /// keeps positions accurate to integrator order, which matters when the
    /// samples feed second-difference estimates.
    pub fn resample(&self, n: usize, span: f64) -> Vec<ProfileSample> {
        let rhs = |y: &[f64; 3]| -> [f64; 3] {
            [y[2].cos(), y[2].sin(), self.h - y[2].sin() / y[0]]
        };
        let mut y = [self.neck_radius, 0.0, std::f64::consts::PI / 2.0];
        let mut out = Vec::with_capacity(n + 1);
        let ds = span / n as f64;
        let substeps = (ds / (2e-4 * self.period)).ceil().max(1.0) as usize;
        out.push(ProfileSample { s: 0.0, r: y[0], z: y[1], psi: y[2] });
        for k in 1..=n {
            for _ in 0..substeps {
                rk4_step(&rhs, &mut y, ds / substeps as f64);
            }
            out.push(ProfileSample { s: ds * k as f64, r: y[0], z: y[1], psi: y[2] });
        }
        out
    }

    /// Largest violation of periodicity `|(r, sin psi)(s + T) - (r, sin psi)(s)|`
    /// over the sample range, using the stored end state.
    pub fn periodicity_defect(&self) -> f64 {
        let first = self.samples.first().unwrap();
        let last = self.samples.last().unwrap();
        ((first.r - last.r).powi(2) + (first.psi.sin() - last.psi.sin()).powi(2)).sqrt()
    }
}

/// Integrate one period of the CMC-`LATTICE_H` unduloid with the given waist
/// radius. The profile starts at the waist with `z = 0`.
pub fn delaunay_solve(neck_radius: f64) -> Result<DelaunayProfile, DelaunayError> {
    delaunay_solve_h(neck_radius, LATTICE_H)
}

pub fn delaunay_solve_h(neck_radius: f64, h: f64) -> Result<DelaunayProfile, DelaunayError> {
    let cylinder = 1.0 / h;
    if !(neck_radius > 0.0 && neck_radius < 2.0 * cylinder) {
        return Err(DelaunayError::OutOfRange(neck_radius, 2.0 * cylinder));
    }
    if neck_radius >= cylinder * (1.0 - 1e-6) {
        return Err(DelaunayError::CylinderDegenerate(neck_radius));
    }
    let bulge = 2.0 / h - neck_radius;
    // Period scale estimate: between pi * (a + b) (sphere string) and the
    // cylinder's 2 pi / H; integrate with a conservative fixed step.
    let period_estimate = std::f64::consts::PI * (neck_radius + bulge);
    let step = 1e-3 * period_estimate;
    let rhs = |y: &[f64; 3]| -> [f64; 3] { [y[2].cos(), y[2].sin(), h - y[2].sin() / y[0]] };
    let mut y = [neck_radius, 0.0, std::f64::consts::PI / 2.0];
    let mut s = 0.0;
    let mut samples = vec![ProfileSample { s, r: y[0], z: y[1], psi: y[2] }];
    // psi oscillates about pi/2: it leaves the waist downward, crosses pi/2
    // upward at the bulge, and crosses downward again at the next waist.
    let target = std::f64::consts::PI / 2.0;
    let max_s = 10.0 * period_estimate;
    let mut found = None;
    while s < max_s {
        let prev = y;
        let prev_s = s;
        rk4_step(&rhs, &mut y, step);
        s += step;
        samples.push(ProfileSample { s, r: y[0], z: y[1], psi: y[2] });
        if prev[2] > target && y[2] <= target {
            // Bisect the downward crossing at the next waist.
            let mut lo = prev;
            let mut lo_s = prev_s;
            let mut hs = step;
            for _ in 0..60 {
                hs *= 0.5;
                let mut mid = lo;
                rk4_step(&rhs, &mut mid, hs);
                if mid[2] > target {
                    lo = mid;
                    lo_s += hs;
                }
            }
            found = Some((lo_s, lo));
            break;
        }
    }
    let (period, end) = match found {
        Some(p) => p,
        None => return Err(DelaunayError::NoPeriod(10)),
    };
    // Replace samples beyond the period with the refined end state.
    samples.retain(|p| p.s < period);
    samples.push(ProfileSample { s: period, r: end[0], z: end[1], psi: end[2] });
    let profile = DelaunayProfile {
        h,
        neck_radius,
        bulge_radius: samples.iter().fold(0.0f64, |m, p| m.max(p.r)),
        samples,
        period,
    };
    Ok(profile)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn waist_and_bulge_satisfy_force_balance() {
        let p = delaunay_solve(0.05).unwrap();
        // a + b = 2 / H.
        assert!(
            (p.neck_radius + p.bulge_radius - 2.0 / LATTICE_H).abs() < 1e-6,
            "a + b = {}",
            p.neck_radius + p.bulge_radius
        );
    }

    #[test]
    fn periodicity_closes() {
        let p = delaunay_solve(0.05).unwrap();
        assert!(p.periodicity_defect() < 1e-8, "defect {}", p.periodicity_defect());
    }

    #[test]
    fn first_integral_conserved() {
        let p = delaunay_solve(0.08).unwrap();
        let c0 = p.neck_radius - 0.5 * p.h * p.neck_radius * p.neck_radius;
        for sample in &p.samples {
            let c = sample.r * sample.psi.sin() - 0.5 * p.h * sample.r * sample.r;
            assert!((c - c0).abs() < 1e-9, "first integral drift {}", (c - c0).abs());
        }
    }

    #[test]
    fn small_neck_bulge_tends_to_sphere_radius() {
        // Tangent-sphere limit: bulge -> sphere radius 1/2.
        let p = delaunay_solve(0.004).unwrap();
        assert!((p.bulge_radius - 0.5).abs() < 0.01, "bulge {}", p.bulge_radius);
        // And the period tends to the sphere diameter.
        assert!((p.z_shift_per_period().abs() - 1.0).abs() < 0.05);
    }

    #[test]
    fn cylinder_limit_flagged() {
        match delaunay_solve(0.2499999) {
            Err(DelaunayError::CylinderDegenerate(_)) => {}
            other => panic!("expected cylinder degeneracy, got {other:?}"),
        }
    }

    #[test]
    fn arclength_parametrization() {
        let p = delaunay_solve(0.1).unwrap();
        // r'^2 + z'^2 = 1 along the profile, checked by table differences.
        for w in p.samples.windows(2) {
            let ds = w[1].s - w[0].s;
            if ds < 1e-12 {
                continue;
            }
            let dr = (w[1].r - w[0].r) / ds;
            let dz = (w[1].z - w[0].z) / ds;
            let speed = (dr * dr + dz * dz).sqrt();
            assert!((speed - 1.0).abs() < 1e-4, "speed {speed}");
        }
    }
}
