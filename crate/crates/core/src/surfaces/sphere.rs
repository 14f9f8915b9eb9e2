//! Spherical domains: radius-1/2 spheres with circular disks removed around
//! tangency directions, meshed so every boundary circle is an exact uniform
//! circle in its tangency frame.
//!
//! The mesh is a latitude-longitude grid about the first removed disk's axis;
//! polar disks cut exact coordinate circles, equatorial disks are carved from
//! the grid and stitched to their exact circle with a zipper band.

use nalgebra::{Point3, Vector3};

use crate::mesh::{MeshError, TriMesh};
use crate::surfaces::{excision_polar_angle, SPHERE_RADIUS};

/// One removed disk: the excision ball has radius `delta`, and the boundary
/// circle is sampled in the frame `(frame_u, frame_v)` shared with the neck
/// on the other side of the tangency.
#[derive(Debug, Clone)]
pub struct RemovedDisk {
    pub direction: Vector3<f64>,
    pub delta: f64,
    pub frame_u: Vector3<f64>,
    pub frame_v: Vector3<f64>,
}

impl RemovedDisk {
    /// Disk with a deterministic default frame orthogonal to `direction`.
    pub fn new(direction: Vector3<f64>, delta: f64) -> RemovedDisk {
        let direction = direction.normalize();
        let seed = if direction.z.abs() < 0.9 { Vector3::z() } else { Vector3::x() };
        let frame_u = (seed - seed.dot(&direction) * direction).normalize();
        let frame_v = direction.cross(&frame_u);
        RemovedDisk { direction, delta, frame_u, frame_v }
    }

    pub fn with_frame(
        direction: Vector3<f64>,
        delta: f64,
        frame_u: Vector3<f64>,
        frame_v: Vector3<f64>,
    ) -> RemovedDisk {
        RemovedDisk { direction: direction.normalize(), delta, frame_u, frame_v }
    }
}

/// A radius-1/2 sphere with disks removed.
#[derive(Debug, Clone)]
pub struct SphereDomainChart {
    pub center: Point3<f64>,
    pub removed_disks: Vec<RemovedDisk>,
}

impl SphereDomainChart {
    pub fn new(center: Point3<f64>, removed_disks: Vec<RemovedDisk>) -> SphereDomainChart {
        SphereDomainChart { center, removed_disks }
    }

    /// Disks must be pairwise disjoint on the sphere.
    pub fn validate(&self) -> Result<(), MeshError> {
        for (i, a) in self.removed_disks.iter().enumerate() {
            for b in self.removed_disks.iter().skip(i + 1) {
                let gap = a.direction.dot(&b.direction).clamp(-1.0, 1.0).acos();
                if gap < excision_polar_angle(a.delta) + excision_polar_angle(b.delta) {
                    return Err(MeshError::Parse {
                        line: 0,
                        message: "removed disks overlap on the sphere".into(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Mesh of a spherical domain plus, per removed disk, the ordered boundary
/// ring (vertex `k` at angle `2 pi k / n_around` in the disk frame).
pub struct SphereDomainMesh {
    pub mesh: TriMesh,
    pub circle_rings: Vec<Vec<u32>>,
}

pub fn sphere_domain_mesh(
    chart: &SphereDomainChart,
    n_around: usize,
    n_rows: usize,
) -> Result<SphereDomainMesh, MeshError> {
    chart.validate()?;
    let r = SPHERE_RADIUS;
    let c = chart.center;

    // Polar axis: the first disk's direction, or e_z for a closed sphere.
    let axis = chart
        .removed_disks
        .first()
        .map(|d| d.direction)
        .unwrap_or_else(Vector3::z);
    let mut polar_top: Option<usize> = None;
    let mut polar_bottom: Option<usize> = None;
    let mut equatorial: Vec<usize> = Vec::new();
    for (i, d) in chart.removed_disks.iter().enumerate() {
        let a = d.direction.dot(&axis);
        if a > 1.0 - 1e-12 {
            polar_top = Some(i);
        } else if a < -1.0 + 1e-12 {
            polar_bottom = Some(i);
        } else {
            equatorial.push(i);
        }
    }

    // Grid equatorial frame: taken from the top disk so its circle row is the
    // identity sampling of the tangency frame.
    let (e1, e2) = match polar_top {
        Some(i) => (chart.removed_disks[i].frame_u, chart.removed_disks[i].frame_v),
        None => {
            let seed = if axis.z.abs() < 0.9 { Vector3::z() } else { Vector3::x() };
            let u = (seed - seed.dot(&axis) * axis).normalize();
            (u, axis.cross(&u))
        }
    };

    let theta_start = polar_top
        .map(|i| excision_polar_angle(chart.removed_disks[i].delta))
        .unwrap_or(0.0);
    let theta_end = polar_bottom
        .map(|i| std::f64::consts::PI - excision_polar_angle(chart.removed_disks[i].delta))
        .unwrap_or(std::f64::consts::PI);

    let rows = n_rows.max(8);
    let dtheta = (theta_end - theta_start) / rows as f64;
    let point_at = |theta: f64, phi: f64| -> Point3<f64> {
        c + r * (theta.sin() * (phi.cos() * e1 + phi.sin() * e2) + theta.cos() * axis)
    };

    let mut vertices: Vec<Point3<f64>> = Vec::new();
    let mut grid: Vec<Vec<u32>> = Vec::new();
    for k in 0..=rows {
        let theta = theta_start + dtheta * k as f64;
        let mut ring = Vec::with_capacity(n_around);
        for j in 0..n_around {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / n_around as f64;
            ring.push(vertices.len() as u32);
            vertices.push(point_at(theta, phi));
        }
        grid.push(ring);
    }

    let mut faces: Vec<[u32; 3]> = Vec::new();
    let theta_mid = 0.5 * (theta_start + theta_end);
    for k in 0..rows {
        // Mirror diagonals about the mid latitude so the triangulation is
        // symmetric under the equatorial reflection when the domain is.
        let upper = theta_start + dtheta * (k as f64 + 0.5) < theta_mid;
        for j in 0..n_around {
            let a = grid[k][j];
            let b = grid[k][(j + 1) % n_around];
            let dcorner = grid[k + 1][j];
            let ccorner = grid[k + 1][(j + 1) % n_around];
            // (d theta) x (d phi) points outward.
            if upper {
                faces.push([a, dcorner, ccorner]);
                faces.push([a, ccorner, b]);
            } else {
                faces.push([a, dcorner, b]);
                faces.push([b, dcorner, ccorner]);
            }
        }
    }

    // Pole caps where no disk is removed.
    if polar_top.is_none() {
        let pole = vertices.len() as u32;
        vertices.push(c + r * axis);
        // Collapse the first row to the pole: replace row-0 quad band.
        // The grid row 0 was built at theta_start = 0, i.e. all its points
        // coincide with the pole; rebuild the band as a fan instead.
        faces.retain(|f| !f.iter().any(|&v| grid[0].contains(&v)));
        for j in 0..n_around {
            let a = grid[1][j];
            let b = grid[1][(j + 1) % n_around];
            faces.push([pole, a, b]);
        }
    }
    if polar_bottom.is_none() {
        let pole = vertices.len() as u32;
        vertices.push(c - r * axis);
        faces.retain(|f| !f.iter().any(|&v| grid[rows].contains(&v)));
        for j in 0..n_around {
            let a = grid[rows - 1][j];
            let b = grid[rows - 1][(j + 1) % n_around];
            faces.push([pole, b, a]);
        }
    }

    // Carve equatorial disks and stitch exact circles.
    let mut circle_rings: Vec<Vec<u32>> = vec![Vec::new(); chart.removed_disks.len()];
    let grid_h = dtheta.max(2.0 * std::f64::consts::PI / n_around as f64);
    for &di in &equatorial {
        let disk = &chart.removed_disks[di];
        let theta_d = excision_polar_angle(disk.delta);
        // Carve and extract the hole's boundary cycle. Staircase carves can
        // pinch at a vertex (two boundary edges leaving it); such vertices
        // are carved as well and the rim is rebuilt.
        let mut carved: Vec<bool> = {
            let carve = theta_d + 0.75 * grid_h;
            vertices
                .iter()
                .map(|p| {
                    let dirp = (p - c).normalize();
                    dirp.dot(&disk.direction).clamp(-1.0, 1.0).acos() < carve
                })
                .collect()
        };
        let mut rim: Vec<u32> = Vec::new();
        let mut kept: Vec<[u32; 3]> = Vec::new();
        for _attempt in 0..8 {
            kept = faces
                .iter()
                .copied()
                .filter(|f| !f.iter().any(|&v| carved[v as usize]))
                .collect();
            let mut directed = std::collections::HashSet::new();
            for f in &kept {
                for kk in 0..3 {
                    directed.insert((f[kk], f[(kk + 1) % 3]));
                }
            }
            let mut succ: std::collections::HashMap<u32, Vec<u32>> =
                std::collections::HashMap::new();
            for f in &kept {
                for kk in 0..3 {
                    let a = f[kk];
                    let b = f[(kk + 1) % 3];
                    if !directed.contains(&(b, a)) {
                        let pa = vertices[a as usize];
                        let ang =
                            (pa - c).normalize().dot(&disk.direction).clamp(-1.0, 1.0).acos();
                        if ang < theta_d + 4.0 * grid_h {
                            succ.entry(a).or_default().push(b);
                        }
                    }
                }
            }
            // Pinched vertices get carved and the extraction retried.
            let pinched: Vec<u32> =
                succ.iter().filter(|(_, bs)| bs.len() > 1).map(|(&a, _)| a).collect();
            if !pinched.is_empty() {
                for v in pinched {
                    carved[v as usize] = true;
                }
                continue;
            }
            if succ.len() < 3 {
                return Err(MeshError::Parse {
                    line: 0,
                    message: format!("carving disk {di} produced a degenerate rim"),
                });
            }
            let start = *succ.keys().min().unwrap();
            rim = vec![start];
            let mut cur = start;
            let mut ok = true;
            loop {
                let Some(nxts) = succ.get(&cur) else {
                    ok = false;
                    break;
                };
                let nxt = nxts[0];
                if nxt == start {
                    break;
                }
                rim.push(nxt);
                cur = nxt;
                if rim.len() > succ.len() {
                    ok = false;
                    break;
                }
            }
            if ok && rim.len() == succ.len() {
                break;
            }
            // The chain missed part of the rim (disconnected staircase);
            // widen the carve slightly and retry.
            let widen = theta_d
                + 0.75 * grid_h
                + 0.15 * grid_h * (_attempt + 1) as f64;
            for (v, p) in vertices.iter().enumerate() {
                let dirp = (p - c).normalize();
                if dirp.dot(&disk.direction).clamp(-1.0, 1.0).acos() < widen {
                    carved[v] = true;
                }
            }
            rim.clear();
        }
        if rim.len() < 3 {
            return Err(MeshError::Parse {
                line: 0,
                message: format!("carve rim of disk {di} does not close"),
            });
        }
        faces = kept;
        // The boundary cycle runs clockwise seen from outside the hole;
        // reverse it so zipper triangles traverse rim edges opposite to the
        // existing boundary direction.
        rim.reverse();

        // Exact circle ring in the disk frame.
        let rad = r * theta_d.sin();
        let off = r * theta_d.cos();
        let mut ring = Vec::with_capacity(n_around);
        for kk in 0..n_around {
            let phi = 2.0 * std::f64::consts::PI * kk as f64 / n_around as f64;
            ring.push(vertices.len() as u32);
            vertices.push(
                c + off * disk.direction + rad * (phi.cos() * disk.frame_u + phi.sin() * disk.frame_v),
            );
        }
        circle_rings[di] = ring.clone();
        // The zipper needs loops ordered counterclockwise about the disk
        // direction; a left-handed shared frame traverses the ring the other
        // way.
        let handed = disk.frame_u.cross(&disk.frame_v).dot(&disk.direction);
        if handed >= 0.0 {
            zipper(&vertices, c, disk, &rim, &ring, &mut faces);
        } else {
            let reversed: Vec<u32> = ring.iter().rev().copied().collect();
            zipper(&vertices, c, disk, &rim, &reversed, &mut faces);
        }
    }

    // Polar circle rings are grid rows (identity sampling by construction).
    if let Some(i) = polar_top {
        circle_rings[i] = grid[0].clone();
    }
    if let Some(i) = polar_bottom {
        // The bottom row's frame angle runs with the grid phi when the bottom
        // disk frame satisfies (u', v') = (u, -v) mirrored; recover the ring
        // order from explicit angles.
        let disk = &chart.removed_disks[i];
        let angle_of = |v: u32| -> f64 {
            let d = vertices[v as usize] - c;
            let mut a = (d.dot(&disk.frame_v)).atan2(d.dot(&disk.frame_u));
            if a < 0.0 {
                a += 2.0 * std::f64::consts::PI;
            }
            a
        };
        let mut ring = grid[rows].clone();
        ring.sort_by(|&a, &b| angle_of(a).partial_cmp(&angle_of(b)).unwrap());
        // Check the sampling is uniform and starts at angle 0.
        for (kk, &v) in ring.iter().enumerate() {
            let expect = 2.0 * std::f64::consts::PI * kk as f64 / n_around as f64;
            if (angle_of(v) - expect).abs() > 1e-9 {
                return Err(MeshError::Parse {
                    line: 0,
                    message: "bottom polar circle frame is not grid-aligned".into(),
                });
            }
        }
        circle_rings[i] = ring;
    }

    let (vertices, faces, circle_rings) = compact(vertices, faces, circle_rings);
    let normals: Vec<Vector3<f64>> = vertices.iter().map(|p| (p - c) / r).collect();
    let mesh = TriMesh::with_normals(vertices, faces, normals)?;
    Ok(SphereDomainMesh { mesh, circle_rings })
}

/// Stitch the annular band between an outer loop (the carve rim) and an inner
/// loop (the exact circle), both star-shaped around the disk direction.
fn zipper(
    vertices: &[Point3<f64>],
    center: Point3<f64>,
    disk: &RemovedDisk,
    outer: &[u32],
    inner: &[u32],
    faces: &mut Vec<[u32; 3]>,
) {
    let tau = 2.0 * std::f64::consts::PI;
    // Angles in a right-handed companion frame about the disk direction.
    let v_rh = disk.direction.cross(&disk.frame_u);
    let angle_of = |v: u32| -> f64 {
        let d = vertices[v as usize] - center;
        (d.dot(&v_rh)).atan2(d.dot(&disk.frame_u)).rem_euclid(tau)
    };
    let no = outer.len();
    let ni = inner.len();
    let a0 = angle_of(outer[0]);
    // Inner start: nearest in angle to the outer start.
    let j0 = (0..ni)
        .min_by(|&a, &b| {
            let da = (angle_of(inner[a]) - a0 + tau / 2.0).rem_euclid(tau) - tau / 2.0;
            let db = (angle_of(inner[b]) - a0 + tau / 2.0).rem_euclid(tau) - tau / 2.0;
            da.abs().partial_cmp(&db.abs()).unwrap()
        })
        .unwrap();
    // Unwrapped angle sequences over one full turn plus the closing vertex;
    // increments are taken signed so a mildly zigzagging rim stays near its
    // true winding.
    let unwrap = |ids: &[u32], start: usize| -> Vec<f64> {
        let n = ids.len();
        let mut out = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        out.push(0.0);
        for k in 1..=n {
            let prev = angle_of(ids[(start + k - 1) % n]);
            let cur = angle_of(ids[(start + k) % n]);
            let d = (cur - prev + tau / 2.0).rem_euclid(tau) - tau / 2.0;
            acc += d;
            out.push(if k == n { tau } else { acc });
        }
        out
    };
    let oa = unwrap(outer, 0);
    let mut ia = unwrap(inner, j0);
    // Shift inner angles into the outer's reference.
    let shift = (angle_of(inner[j0]) - a0 + tau / 2.0).rem_euclid(tau) - tau / 2.0;
    for a in &mut ia {
        *a += shift;
    }
    let mut i = 0usize;
    let mut j = 0usize;
    while i < no || j < ni {
        let ov = outer[i % no];
        let iv = inner[(j0 + j) % ni];
        let advance_outer = if i >= no {
            false
        } else if j >= ni {
            true
        } else {
            oa[i + 1] <= ia[j + 1]
        };
        if advance_outer {
            let ov2 = outer[(i + 1) % no];
            faces.push([ov, ov2, iv]);
            i += 1;
        } else {
            let iv2 = inner[(j0 + j + 1) % ni];
            faces.push([ov, iv2, iv]);
            j += 1;
        }
    }
}

/// Drop vertices not referenced by any face, remapping faces and rings.
fn compact(
    vertices: Vec<Point3<f64>>,
    faces: Vec<[u32; 3]>,
    rings: Vec<Vec<u32>>,
) -> (Vec<Point3<f64>>, Vec<[u32; 3]>, Vec<Vec<u32>>) {
    let mut used = vec![false; vertices.len()];
    for f in &faces {
        for &v in f {
            used[v as usize] = true;
        }
    }
    let mut remap = vec![u32::MAX; vertices.len()];
    let mut out_vertices = Vec::new();
    for (i, v) in vertices.into_iter().enumerate() {
        if used[i] {
            remap[i] = out_vertices.len() as u32;
            out_vertices.push(v);
        }
    }
    let out_faces = faces
        .into_iter()
        .map(|f| [remap[f[0] as usize], remap[f[1] as usize], remap[f[2] as usize]])
        .collect();
    let out_rings = rings
        .into_iter()
        .map(|ring| ring.into_iter().map(|v| remap[v as usize]).collect())
        .collect();
    (out_vertices, out_faces, out_rings)
}

/// Polar cap of a radius-1/2 sphere around `direction`, the piece removed by
/// an excision ball of radius `delta`. Its single boundary ring is sampled in
/// the given tangency frame.
pub fn spherical_cap_mesh(
    center: Point3<f64>,
    disk: &RemovedDisk,
    n_around: usize,
    n_rings: usize,
) -> Result<SphereDomainMesh, MeshError> {
    let r = SPHERE_RADIUS;
    let theta_d = excision_polar_angle(disk.delta);
    let rings = n_rings.max(3);
    let mut vertices = vec![center + r * disk.direction];
    let mut grid: Vec<Vec<u32>> = Vec::new();
    for k in 1..=rings {
        let theta = theta_d * k as f64 / rings as f64;
        let mut ring = Vec::with_capacity(n_around);
        for j in 0..n_around {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / n_around as f64;
            ring.push(vertices.len() as u32);
            vertices.push(
                center
                    + r * (theta.sin() * (phi.cos() * disk.frame_u + phi.sin() * disk.frame_v)
                        + theta.cos() * disk.direction),
            );
        }
        grid.push(ring);
    }
    let mut faces = Vec::new();
    for j in 0..n_around {
        faces.push([0u32, grid[0][j], grid[0][(j + 1) % n_around]]);
    }
    for k in 0..rings - 1 {
        for j in 0..n_around {
            let a = grid[k][j];
            let b = grid[k][(j + 1) % n_around];
            let d = grid[k + 1][j];
            let c2 = grid[k + 1][(j + 1) % n_around];
            faces.push([a, d, c2]);
            faces.push([a, c2, b]);
        }
    }
    let normals: Vec<Vector3<f64>> = vertices.iter().map(|p| (p - center) / r).collect();
    let mesh = TriMesh::with_normals(vertices, faces, normals)?;
    let ring = grid[rings - 1].clone();
    Ok(SphereDomainMesh { mesh, circle_rings: vec![ring] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surfaces::excision_circle_radius;

    #[test]
    fn closed_sphere_euler_characteristic() {
        let chart = SphereDomainChart::new(Point3::origin(), vec![]);
        let m = sphere_domain_mesh(&chart, 32, 32).unwrap();
        assert_eq!(m.mesh.euler_characteristic(), 2);
        assert!(m.mesh.boundary_loops.is_empty());
    }

    #[test]
    fn one_polar_disk_circle_radius() {
        let delta = 0.1;
        let chart = SphereDomainChart::new(
            Point3::origin(),
            vec![RemovedDisk::new(Vector3::z(), delta)],
        );
        let m = sphere_domain_mesh(&chart, 64, 48).unwrap();
        assert_eq!(m.mesh.boundary_loops.len(), 1);
        let expected = excision_circle_radius(delta);
        assert!((expected - 0.0994987).abs() < 1e-6);
        for &v in &m.circle_rings[0] {
            let p = m.mesh.vertices[v as usize];
            let rho = (p.x * p.x + p.y * p.y).sqrt();
            assert!((rho - expected).abs() < 1e-12);
            assert!((p.z - (0.5 - delta * delta)).abs() < 1e-12);
        }
    }

    #[test]
    fn four_disk_lattice_leaf() {
        let delta = 0.15;
        let chart = SphereDomainChart::new(
            Point3::origin(),
            vec![
                RemovedDisk::with_frame(Vector3::z(), delta, Vector3::x(), Vector3::y()),
                RemovedDisk::with_frame(-Vector3::z(), delta, Vector3::x(), Vector3::y()),
                RemovedDisk::with_frame(Vector3::y(), delta, Vector3::z(), Vector3::x()),
                RemovedDisk::with_frame(-Vector3::y(), delta, Vector3::z(), Vector3::x()),
            ],
        );
        let m = sphere_domain_mesh(&chart, 48, 48).unwrap();
        assert_eq!(m.mesh.boundary_loops.len(), 4);
        // Sphere minus 4 disks: chi = 2 - 4.
        assert_eq!(m.mesh.euler_characteristic(), -2);
        // All vertices on the sphere; all circles exact.
        for p in &m.mesh.vertices {
            assert!(((p - Point3::origin()).norm() - 0.5).abs() < 1e-12);
        }
        let rad = excision_circle_radius(delta);
        for (di, ring) in m.circle_rings.iter().enumerate() {
            assert_eq!(ring.len(), 48, "disk {di}");
            let disk = &chart.removed_disks[di];
            for (k, &v) in ring.iter().enumerate() {
                let p = m.mesh.vertices[v as usize];
                let d = p - Point3::origin();
                let phi = 2.0 * std::f64::consts::PI * k as f64 / 48.0;
                let expect = (0.5 - delta * delta) * disk.direction
                    + rad * (phi.cos() * disk.frame_u + phi.sin() * disk.frame_v);
                assert!((d - expect).norm() < 1e-9, "disk {di} vertex {k}");
            }
        }
        m.mesh.check_degenerate().unwrap();
    }

    #[test]
    fn overlapping_disks_rejected() {
        let chart = SphereDomainChart::new(
            Point3::origin(),
            vec![
                RemovedDisk::new(Vector3::z(), 0.3),
                RemovedDisk::new(Vector3::new(0.0, 0.3, 0.954).normalize(), 0.3),
            ],
        );
        assert!(sphere_domain_mesh(&chart, 32, 32).is_err());
    }

    #[test]
    fn cap_mesh_matches_excision() {
        let delta = 0.15;
        let disk = RemovedDisk::with_frame(Vector3::y(), delta, Vector3::z(), Vector3::x());
        let m = spherical_cap_mesh(Point3::origin(), &disk, 48, 12).unwrap();
        assert_eq!(m.mesh.boundary_loops.len(), 1);
        assert_eq!(m.mesh.euler_characteristic(), 1);
        let rad = excision_circle_radius(delta);
        for (k, &v) in m.circle_rings[0].iter().enumerate() {
            let p = m.mesh.vertices[v as usize];
            let phi = 2.0 * std::f64::consts::PI * k as f64 / 48.0;
            let expect = Point3::origin()
                + (0.5 - delta * delta) * disk.direction
                + rad * (phi.cos() * disk.frame_u + phi.sin() * disk.frame_v);
            assert!((p - expect).norm() < 1e-12);
        }
    }
}
