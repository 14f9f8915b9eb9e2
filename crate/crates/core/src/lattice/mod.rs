//! The truncated lattice configuration: spherical domains and necks indexed
//! on the integer lattice, the boundary-circle pairing, parameter vectors
//! with their type-I/type-II and symmetric/free splits, and the weighted and
//! vertically graded norms.

mod configfile;
mod params;

pub use configfile::{parse_config, serialize_config, ConfigError, ConfigFile};
pub use params::{
    even_odd, graded_norm, reflect_circle_z, reflect_fourier_z, weighted_norm, GradedFamily,
    ParamVector, PerCircleVec,
};

use nalgebra::{Point3, Vector3};
use std::collections::BTreeMap;

use crate::surfaces::{excision_circle_radius, excision_plane_offset};

/// Which lattice axis a tangency lives on. Vertical necks join spheres in the
/// same column (axis `e_z`), horizontal necks join adjacent columns (axis
/// `e_y`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Axis {
    Vertical,
    Horizontal,
}

impl Axis {
    pub fn direction(&self) -> Vector3<f64> {
        match self {
            Axis::Vertical => Vector3::z(),
            Axis::Horizontal => Vector3::y(),
        }
    }

    /// Shared tangency frame: circle point `k` sits at angle `2 pi k / n` in
    /// `(u, v)`; `(u, v, axis)` is right-handed.
    pub fn frame(&self) -> (Vector3<f64>, Vector3<f64>) {
        match self {
            Axis::Vertical => (Vector3::x(), Vector3::y()),
            Axis::Horizontal => (Vector3::z(), Vector3::x()),
        }
    }
}

/// Lattice index of a component. Spheres sit at `(0, i, j)`; the vertical
/// neck `(i, j)` contains the tangency `(0, i, j + 1/2)` joining spheres
/// `(i, j)` and `(i, j + 1)`; the horizontal neck `(i, j)` contains
/// `(0, i + 1/2, j)` joining spheres `(i, j)` and `(i + 1, j)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LatticeIndex {
    Sphere { i: i64, j: i64 },
    VNeck { i: i64, j: i64 },
    HNeck { i: i64, j: i64 },
}

impl LatticeIndex {
    pub fn tangency_point(&self) -> Option<Point3<f64>> {
        match *self {
            LatticeIndex::Sphere { .. } => None,
            LatticeIndex::VNeck { i, j } => Some(Point3::new(0.0, i as f64, j as f64 + 0.5)),
            LatticeIndex::HNeck { i, j } => Some(Point3::new(0.0, i as f64 + 0.5, j as f64)),
        }
    }
}

/// Which side of a paired circle a copy belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CircleSide {
    Sphere,
    Neck,
}

/// One boundary circle of the disjoint union. Paired circles coincide as
/// point sets at vanishing total parameter.
#[derive(Debug, Clone)]
pub struct CircleInfo {
    pub id: u32,
    pub partner: u32,
    pub side: CircleSide,
    pub component: LatticeIndex,
    /// The sphere whose excision cut this circle.
    pub sphere: LatticeIndex,
    /// Unit vector from that sphere's center toward the tangency point.
    pub polar_dir: Vector3<f64>,
    pub axis: Axis,
    pub center: Point3<f64>,
    pub radius: f64,
}

impl CircleInfo {
    /// Reference outward conormal of this side at circle angle `theta`, in
    /// the tangent-sphere configuration.
    pub fn reference_conormal(&self, delta: f64, theta: f64) -> Vector3<f64> {
        let (u, v) = self.axis.frame();
        let e_r = theta.cos() * u + theta.sin() * v;
        let cos_td = 1.0 - 2.0 * delta * delta;
        let sin_td = 2.0 * delta * (1.0 - delta * delta).sqrt();
        match self.side {
            // Out of the spherical domain, toward the removed cap.
            CircleSide::Sphere => -cos_td * e_r + sin_td * self.polar_dir,
            // Out of the cap, back toward the domain.
            CircleSide::Neck => cos_td * e_r - sin_td * self.polar_dir,
        }
    }

    /// Common unit normal of the two sides at circle angle `theta` in the
    /// tangent-sphere configuration (even under the pairing).
    pub fn reference_normal(&self, delta: f64, theta: f64) -> Vector3<f64> {
        let (u, v) = self.axis.frame();
        let e_r = theta.cos() * u + theta.sin() * v;
        let cos_td = 1.0 - 2.0 * delta * delta;
        let sin_td = 2.0 * delta * (1.0 - delta * delta).sqrt();
        sin_td * e_r + cos_td * self.polar_dir
    }

    pub fn point(&self, theta: f64) -> Point3<f64> {
        let (u, v) = self.axis.frame();
        self.center + self.radius * (theta.cos() * u + theta.sin() * v)
    }
}

/// A sphere component with its excisions.
#[derive(Debug, Clone)]
pub struct SphereComponent {
    pub index: LatticeIndex,
    pub center: Point3<f64>,
    /// Circle ids of this sphere's excisions (the sphere-side copies).
    pub circles: Vec<u32>,
}

/// A neck component bridging a tangency. At zero flux it degenerates to the
/// pair of spherical caps. A `None` circle is a truncation side clamped to
/// the symmetric background.
#[derive(Debug, Clone)]
pub struct NeckComponent {
    pub index: LatticeIndex,
    pub axis: Axis,
    pub tangency: Point3<f64>,
    /// Neck-side circle toward the lower-index sphere, if that sphere exists.
    pub lower_circle: Option<u32>,
    /// Neck-side circle toward the higher-index sphere.
    pub upper_circle: Option<u32>,
}

/// The truncated lattice configuration.
#[derive(Debug, Clone)]
pub struct Configuration {
    /// Number of branches is `n + 1` (columns `0..=n`).
    pub n: i64,
    /// Rows `-J..=J` of spheres per column.
    pub big_j: i64,
    pub delta: f64,
    pub tau0: f64,
    pub mu: f64,
    /// Active horizontal tangencies: `f_set[i]` (for `i = 1..=n`) lists the
    /// rows where branches `i-1` and `i` are bridged.
    pub f_set: BTreeMap<i64, Vec<i64>>,
    /// Length of the extra-end chain attached at `(0, -1/2, 0)` (0 = none).
    pub chain_len: i64,
    pub spheres: Vec<SphereComponent>,
    pub necks: Vec<NeckComponent>,
    pub circles: Vec<CircleInfo>,
    pub resolution: Resolution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resolution {
    pub n_around: usize,
    pub sphere_rows: usize,
    pub neck_inner: usize,
    /// Fourier mode cutoff for boundary data in the defect system.
    pub modes: usize,
}

impl Default for Resolution {
    fn default() -> Self {
        Resolution { n_around: 48, sphere_rows: 40, neck_inner: 20, modes: 6 }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LatticeError {
    #[error("invalid truncation: n = {0}, J = {1}")]
    BadTruncation(i64, i64),
    #[error("F references out-of-range column {0} (valid 1..={1})")]
    BadColumn(i64, i64),
    #[error("F references out-of-range row {0} (valid -J..=J with J = {1})")]
    BadRow(i64, i64),
}

/// Build the truncated configuration. Per column the spheres occupy rows
/// `-J..=J`; every in-column tangency carries a vertical neck, the two
/// outermost of which are clamped at their far circles; horizontal necks
/// exist exactly at the tangencies listed in `f_set`.
pub fn build_configuration(
    n: i64,
    big_j: i64,
    f_set: &BTreeMap<i64, Vec<i64>>,
    delta: f64,
    tau0: f64,
    mu: f64,
    resolution: Resolution,
) -> Result<Configuration, LatticeError> {
    build_configuration_with_chain(n, big_j, f_set, delta, tau0, mu, resolution, 0)
}

/// Build a configuration extended by a horizontal chain of `chain_len`
/// spheres at `(0, -m, 0)`, attached to branch 0 through the tangency
/// `(0, -1/2, 0)`. The chain realizes the extra-end surgery.
#[allow(clippy::too_many_arguments)]
pub fn build_configuration_with_chain(
    n: i64,
    big_j: i64,
    f_set: &BTreeMap<i64, Vec<i64>>,
    delta: f64,
    tau0: f64,
    mu: f64,
    resolution: Resolution,
    chain_len: i64,
) -> Result<Configuration, LatticeError> {
    if n < 0 || big_j < 1 {
        return Err(LatticeError::BadTruncation(n, big_j));
    }
    for (&fi, rows) in f_set {
        if fi < 1 || fi > n {
            return Err(LatticeError::BadColumn(fi, n));
        }
        for &j in rows {
            if j < -big_j || j > big_j {
                return Err(LatticeError::BadRow(j, big_j));
            }
        }
    }
    let r0 = excision_circle_radius(delta);
    let offset = excision_plane_offset(delta);
    let mut circles: Vec<CircleInfo> = Vec::new();
    let mut sphere_circles: BTreeMap<(i64, i64), Vec<u32>> = BTreeMap::new();
    let mut necks: Vec<NeckComponent> = Vec::new();

    let add_pair = |circles: &mut Vec<CircleInfo>,
                        sphere_circles: &mut BTreeMap<(i64, i64), Vec<u32>>,
                        neck: LatticeIndex,
                        sphere: (i64, i64),
                        axis: Axis,
                        polar_dir: Vector3<f64>|
     -> u32 {
        let sphere_center = Point3::new(0.0, sphere.0 as f64, sphere.1 as f64);
        let center = sphere_center + offset * polar_dir;
        let sphere_id = circles.len() as u32;
        let neck_id = sphere_id + 1;
        circles.push(CircleInfo {
            id: sphere_id,
            partner: neck_id,
            side: CircleSide::Sphere,
            component: LatticeIndex::Sphere { i: sphere.0, j: sphere.1 },
            sphere: LatticeIndex::Sphere { i: sphere.0, j: sphere.1 },
            polar_dir,
            axis,
            center,
            radius: r0,
        });
        circles.push(CircleInfo {
            id: neck_id,
            partner: sphere_id,
            side: CircleSide::Neck,
            component: neck,
            sphere: LatticeIndex::Sphere { i: sphere.0, j: sphere.1 },
            polar_dir,
            axis,
            center,
            radius: r0,
        });
        sphere_circles.entry(sphere).or_default().push(sphere_id);
        neck_id
    };

    for i in 0..=n {
        // Vertical necks at tangencies (i, j + 1/2) for j in -J-1 ..= J.
        for j in -big_j - 1..=big_j {
            let index = LatticeIndex::VNeck { i, j };
            let tangency = index.tangency_point().unwrap();
            let lower = if j >= -big_j {
                Some(add_pair(
                    &mut circles,
                    &mut sphere_circles,
                    index,
                    (i, j),
                    Axis::Vertical,
                    Vector3::z(),
                ))
            } else {
                None
            };
            let upper = if j + 1 <= big_j {
                Some(add_pair(
                    &mut circles,
                    &mut sphere_circles,
                    index,
                    (i, j + 1),
                    Axis::Vertical,
                    -Vector3::z(),
                ))
            } else {
                None
            };
            necks.push(NeckComponent {
                index,
                axis: Axis::Vertical,
                tangency,
                lower_circle: lower,
                upper_circle: upper,
            });
        }
    }
    for (&fi, rows) in f_set {
        // The pair label `fi` joins branches fi-1 and fi; the h-neck lattice
        // index uses the left column.
        let i = fi - 1;
        for &j in rows {
            let index = LatticeIndex::HNeck { i, j };
            let tangency = index.tangency_point().unwrap();
            let lower = Some(add_pair(
                &mut circles,
                &mut sphere_circles,
                index,
                (i, j),
                Axis::Horizontal,
                Vector3::y(),
            ));
            let upper = Some(add_pair(
                &mut circles,
                &mut sphere_circles,
                index,
                (i + 1, j),
                Axis::Horizontal,
                -Vector3::y(),
            ));
            necks.push(NeckComponent {
                index,
                axis: Axis::Horizontal,
                tangency,
                lower_circle: lower,
                upper_circle: upper,
            });
        }
    }

    // Horizontal chain: spheres at (0, -m, 0) joined by horizontal necks,
    // with a clamped truncation at the far end.
    for i in (-chain_len..0).rev() {
        // Neck h(i, 0) joins sphere (i, 0) to sphere (i + 1, 0); for i = -1
        // that attaches the chain to branch 0.
        let index = LatticeIndex::HNeck { i, j: 0 };
        let tangency = index.tangency_point().unwrap();
        let lower = if i > -chain_len - 1 && i >= -chain_len {
            Some(add_pair(
                &mut circles,
                &mut sphere_circles,
                index,
                (i, 0),
                Axis::Horizontal,
                Vector3::y(),
            ))
        } else {
            None
        };
        let upper = Some(add_pair(
            &mut circles,
            &mut sphere_circles,
            index,
            (i + 1, 0),
            Axis::Horizontal,
            -Vector3::y(),
        ));
        necks.push(NeckComponent {
            index,
            axis: Axis::Horizontal,
            tangency,
            lower_circle: lower,
            upper_circle: upper,
        });
    }
    if chain_len > 0 {
        // Far-end clamp neck for the chain.
        let i = -chain_len - 1;
        let index = LatticeIndex::HNeck { i, j: 0 };
        necks.push(NeckComponent {
            index,
            axis: Axis::Horizontal,
            tangency: index.tangency_point().unwrap(),
            lower_circle: None,
            upper_circle: Some(add_pair(
                &mut circles,
                &mut sphere_circles,
                index,
                (i + 1, 0),
                Axis::Horizontal,
                -Vector3::y(),
            )),
        });
    }

    let mut spheres = Vec::new();
    for i in 0..=n {
        for j in -big_j..=big_j {
            spheres.push(SphereComponent {
                index: LatticeIndex::Sphere { i, j },
                center: Point3::new(0.0, i as f64, j as f64),
                circles: sphere_circles.remove(&(i, j)).unwrap_or_default(),
            });
        }
    }
    for i in -chain_len..0 {
        spheres.push(SphereComponent {
            index: LatticeIndex::Sphere { i, j: 0 },
            center: Point3::new(0.0, i as f64, 0.0),
            circles: sphere_circles.remove(&(i, 0)).unwrap_or_default(),
        });
    }

    Ok(Configuration {
        n,
        big_j,
        delta,
        tau0,
        mu,
        f_set: f_set.clone(),
        chain_len,
        spheres,
        necks,
        circles,
        resolution,
    })
}

impl Configuration {
    pub fn circle(&self, id: u32) -> &CircleInfo {
        &self.circles[id as usize]
    }

    /// The pairing is a fixed-point-free involution.
    pub fn pairing_is_involution(&self) -> bool {
        self.circles
            .iter()
            .all(|c| c.partner != c.id && self.circles[c.partner as usize].partner == c.id)
    }

    pub fn sphere_component(&self, i: i64, j: i64) -> Option<&SphereComponent> {
        self.spheres.iter().find(|s| s.index == LatticeIndex::Sphere { i, j })
    }

    pub fn neck_component(&self, index: LatticeIndex) -> Option<&NeckComponent> {
        self.necks.iter().find(|n| n.index == index)
    }

    /// Genus of the closed-up output surface: each bridge beyond the chain
    /// connectivity contributes one handle.
    pub fn genus_target(&self) -> i64 {
        let bridges: i64 = self.f_set.values().map(|rows| rows.len() as i64).sum();
        bridges - self.n
    }

    /// Number of (truncated) ends: two per branch plus one for the chain.
    pub fn end_count(&self) -> i64 {
        2 * (self.n + 1) + if self.chain_len > 0 { 1 } else { 0 }
    }

    /// The leaves of a branch: sphere row indices of column `i`, each with
    /// its four incident tangencies (left, right, bottom, top). Sealed
    /// tangencies (no active horizontal neck) are reported as `None`.
    pub fn leaves(&self, i: i64) -> Vec<Leaf> {
        let mut out = Vec::new();
        for j in -self.big_j..=self.big_j {
            let bottom = LatticeIndex::VNeck { i, j: j - 1 };
            let top = LatticeIndex::VNeck { i, j };
            let left = LatticeIndex::HNeck { i: i - 1, j };
            let right = LatticeIndex::HNeck { i, j };
            out.push(Leaf {
                sphere: LatticeIndex::Sphere { i, j },
                bottom: self.neck_component(bottom).map(|n| n.index),
                top: self.neck_component(top).map(|n| n.index),
                left: self.neck_component(left).map(|n| n.index),
                right: self.neck_component(right).map(|n| n.index),
            });
        }
        out
    }
}

/// One leaf of a branch: a sphere with its four incident half necks.
#[derive(Debug, Clone)]
pub struct Leaf {
    pub sphere: LatticeIndex,
    pub left: Option<LatticeIndex>,
    pub right: Option<LatticeIndex>,
    pub bottom: Option<LatticeIndex>,
    pub top: Option<LatticeIndex>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f_single() -> BTreeMap<i64, Vec<i64>> {
        let mut f = BTreeMap::new();
        f.insert(1, vec![0]);
        f
    }

    #[test]
    fn counting_n1_j2() {
        let config =
            build_configuration(1, 2, &f_single(), 0.15, 0.02, 0.5, Resolution::default())
                .unwrap();
        // 2 columns x 5 spheres.
        assert_eq!(config.spheres.len(), 10);
        // Vertical necks: 2 columns x (tangencies j = -3..=2) = 2 x 6, plus
        // one horizontal neck.
        assert_eq!(config.necks.len(), 13);
        // Each sphere contributes top and bottom circles; the horizontal
        // bridge adds two more pairs; every circle has a neck-side copy.
        assert_eq!(config.circles.len(), 2 * (10 * 2 + 2));
        assert!(config.pairing_is_involution());
        assert_eq!(config.genus_target(), 0);
        assert_eq!(config.end_count(), 4);
    }

    #[test]
    fn genus_targets_follow_bridge_count() {
        let mut f = BTreeMap::new();
        f.insert(1, vec![-1, 0, 1]);
        let c = build_configuration(1, 2, &f, 0.15, 0.02, 0.5, Resolution::default()).unwrap();
        assert_eq!(c.genus_target(), 2);
        let mut f = BTreeMap::new();
        f.insert(1, vec![-1, 1]);
        let c = build_configuration(1, 2, &f, 0.15, 0.02, 0.5, Resolution::default()).unwrap();
        assert_eq!(c.genus_target(), 1);
    }

    #[test]
    fn out_of_range_f_rejected() {
        let mut f = BTreeMap::new();
        f.insert(2, vec![0]);
        assert!(matches!(
            build_configuration(1, 2, &f, 0.15, 0.02, 0.5, Resolution::default()),
            Err(LatticeError::BadColumn(2, 1))
        ));
    }

    #[test]
    fn paired_circles_coincide() {
        let config =
            build_configuration(1, 2, &f_single(), 0.15, 0.02, 0.5, Resolution::default())
                .unwrap();
        for c in &config.circles {
            let p = config.circle(c.partner);
            assert_eq!(c.center, p.center);
            assert_eq!(c.radius, p.radius);
            for k in 0..8 {
                let t = 2.0 * std::f64::consts::PI * k as f64 / 8.0;
                assert!((c.point(t) - p.point(t)).norm() < 1e-15);
                // Reference conormals oppose; normals agree.
                let sum = c.reference_conormal(0.15, t) + p.reference_conormal(0.15, t);
                assert!(sum.norm() < 1e-14);
                let dn = c.reference_normal(0.15, t) - p.reference_normal(0.15, t);
                assert!(dn.norm() < 1e-14);
            }
        }
    }

    #[test]
    fn single_column_leaves() {
        let config = build_configuration(
            0,
            1,
            &BTreeMap::new(),
            0.15,
            0.02,
            0.5,
            Resolution::default(),
        )
        .unwrap();
        let leaves = config.leaves(0);
        assert_eq!(leaves.len(), 3);
        for leaf in &leaves {
            assert!(leaf.top.is_some() && leaf.bottom.is_some());
            assert!(leaf.left.is_none() && leaf.right.is_none());
        }
        assert_eq!(config.end_count(), 2);
    }

    #[test]
    fn reference_frames_are_orthonormal() {
        for axis in [Axis::Vertical, Axis::Horizontal] {
            let (u, v) = axis.frame();
            let d = axis.direction();
            assert!((u.norm() - 1.0).abs() < 1e-15);
            assert!((v.norm() - 1.0).abs() < 1e-15);
            assert!(u.dot(&v).abs() < 1e-15);
            assert!((u.cross(&v) - d).norm() < 1e-15);
        }
    }
}
