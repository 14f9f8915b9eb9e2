use nalgebra::{Point3, Vector3};

use super::*;
use crate::surfaces::{
    catenoid_neck_mesh, excision_polar_angle, sphere_domain_mesh, RemovedDisk, SphereDomainChart,
};

fn unit_sphere_mesh(n: usize) -> TriMesh {
    // Scale the radius-1/2 generator by two.
    let chart = SphereDomainChart::new(Point3::origin(), vec![]);
    let half = sphere_domain_mesh(&chart, n, n).unwrap().mesh;
    let vertices: Vec<Point3<f64>> =
        half.vertices.iter().map(|p| Point3::from(2.0 * p.coords)).collect();
    let normals = half.normals.clone();
    TriMesh::with_normals(vertices, half.faces.clone(), normals).unwrap()
}

fn interior_max_abs(mesh: &TriMesh, values: &VertexField, offset: f64) -> f64 {
    let mut m = 0.0f64;
    for v in 0..mesh.vertex_count() {
        if !mesh.is_boundary_vertex(v) {
            m = m.max((values[v] - offset).abs());
        }
    }
    m
}

#[test]
fn unit_sphere_mean_curvature_is_two() {
    let mesh = unit_sphere_mesh(48);
    let h = mean_curvature(&mesh).unwrap();
    let err = interior_max_abs(&mesh, &h, 2.0);
    assert!(err < 0.02, "unit sphere H error {err}");
}

#[test]
fn half_radius_sphere_mean_curvature_is_four() {
    // Sum of principal curvatures of the radius-1/2 sphere: 2 / (1/2) = 4.
    let chart = SphereDomainChart::new(Point3::origin(), vec![]);
    let mesh = sphere_domain_mesh(&chart, 48, 48).unwrap().mesh;
    let h = mean_curvature(&mesh).unwrap();
    let err = interior_max_abs(&mesh, &h, 4.0);
    assert!(err < 0.04, "radius-1/2 sphere H error {err}");
}

#[test]
fn sphere_mean_curvature_converges_under_refinement() {
    let errors: Vec<f64> = [24usize, 48, 96]
        .iter()
        .map(|&n| {
            let mesh = unit_sphere_mesh(n);
            let h = mean_curvature(&mesh).unwrap();
            interior_max_abs(&mesh, &h, 2.0)
        })
        .collect();
    assert!(
        errors[0] / errors[1] >= 3.0 && errors[1] / errors[2] >= 3.0,
        "convergence factors {:?}",
        errors
    );
}

#[test]
fn catenoid_is_discretely_minimal() {
    let mesh = catenoid_neck_mesh(0.2, 128, 64).unwrap();
    let h = mean_curvature(&mesh).unwrap();
    let coarse = interior_max_abs(&mesh, &h, 0.0);
    assert!(coarse < 5e-3, "catenoid max |H| {coarse}");
    let fine = catenoid_neck_mesh(0.2, 256, 128).unwrap();
    let hf = mean_curvature(&fine).unwrap();
    let fine_err = interior_max_abs(&fine, &hf, 0.0);
    assert!(fine_err < coarse, "refinement did not reduce |H|: {coarse} -> {fine_err}");
}

#[test]
fn degenerate_face_rejected() {
    let vertices = vec![
        Point3::new(0.0, 0.0, 0.0),
        Point3::new(1.0, 0.0, 0.0),
        Point3::new(0.0, 1.0, 0.0),
        Point3::new(1.0 + 1e-18, 1e-18, 0.0),
    ];
    let faces = vec![[0u32, 1, 2], [1, 3, 2]];
    let normals = vec![Vector3::z(); 4];
    let mesh = TriMesh::with_normals(vertices, faces, normals).unwrap();
    assert!(matches!(mean_curvature(&mesh), Err(MeshError::DegenerateFaces { .. })));
}

#[test]
fn stability_operator_annihilates_sphere_translations() {
    // On the radius-1/2 sphere |A|^2 = 8 and the degree-1 Laplace eigenvalue
    // is -8, so translational fields N . e are Jacobi fields.
    let mut errs = Vec::new();
    for &n in &[32usize, 64] {
        let chart = SphereDomainChart::new(Point3::origin(), vec![]);
        let mesh = sphere_domain_mesh(&chart, n, n).unwrap().mesh;
        let u = VertexField(mesh.normals.iter().map(|nrm| nrm.z).collect());
        let lu = stability_apply_with(&mesh, &u, &VertexField::constant(mesh.vertex_count(), 8.0))
            .unwrap();
        errs.push(interior_max_abs(&mesh, &lu, 0.0));
    }
    assert!(errs[1] < errs[0] / 2.5, "no convergence: {errs:?}");
    assert!(errs[1] < 0.2, "residual too large: {errs:?}");
}

#[test]
fn stability_operator_annihilates_catenoid_translations() {
    let mut errs = Vec::new();
    for &n in &[(64usize, 32usize), (128, 64)] {
        let mesh = catenoid_neck_mesh(0.3, n.0, n.1).unwrap();
        let u = VertexField(mesh.normals.iter().map(|nrm| nrm.x).collect());
        // Analytic |A|^2 of the catenoid r = a cosh(z/a): 2 / (a cosh^2)^2.
        let a = 0.3f64.sin();
        let a2 = VertexField(
            mesh.vertices
                .iter()
                .map(|p| {
                    let c = (p.z / a).cosh();
                    2.0 / (a * c * c).powi(2)
                })
                .collect(),
        );
        let lu = stability_apply_with(&mesh, &u, &a2).unwrap();
        errs.push(interior_max_abs(&mesh, &lu, 0.0));
    }
    assert!(errs[1] < errs[0] / 2.0, "no convergence: {errs:?}");
}

#[test]
fn stability_apply_is_linear_and_zero_on_zero() {
    let mesh = catenoid_neck_mesh(0.2, 48, 24).unwrap();
    let n = mesh.vertex_count();
    let zero = stability_apply(&mesh, &VertexField::zeros(n)).unwrap();
    assert_eq!(zero.max_abs(), 0.0);
    let u = VertexField((0..n).map(|i| (i as f64 * 0.37).sin()).collect());
    let v = VertexField((0..n).map(|i| (i as f64 * 0.11).cos()).collect());
    let (a, b) = (1.7, -0.6);
    let combo = VertexField((0..n).map(|i| a * u[i] + b * v[i]).collect());
    let lhs = stability_apply(&mesh, &combo).unwrap();
    let lu = stability_apply(&mesh, &u).unwrap();
    let lv = stability_apply(&mesh, &v).unwrap();
    let scale = lhs.max_abs().max(1.0);
    for i in 0..n {
        assert!((lhs[i] - a * lu[i] - b * lv[i]).abs() <= 1e-12 * scale);
    }
}

#[test]
fn catenoid_conormal_tilt_matches_formula() {
    let tau = 0.1;
    let mesh = catenoid_neck_mesh(tau, 128, 48).unwrap();
    let top = (0..mesh.boundary_loops.len())
        .find(|&i| mesh.vertices[mesh.boundary_loops[i][0] as usize].z > 0.0)
        .unwrap();
    let eta = conormal(&mesh, top).unwrap();
    let mean_tilt: f64 = eta.iter().map(|e| e.z).sum::<f64>() / eta.len() as f64;
    // Boundary circles sit slightly outside the unit tube, so the mean tilt
    // is sin(tau) scaled by the boundary radius ratio; 1% covers it.
    let expected = tau.sin();
    assert!(
        (mean_tilt - expected).abs() / expected < 0.01,
        "tilt {mean_tilt} vs sin(tau) = {expected}"
    );
    for (k, e) in eta.iter().enumerate() {
        let lp = &mesh.boundary_loops[top];
        let n = lp.len();
        let prev = mesh.vertices[lp[(k + n - 1) % n] as usize];
        let next = mesh.vertices[lp[(k + 1) % n] as usize];
        let t = (next - prev).normalize();
        assert!(e.dot(&t).abs() < 1e-8);
        assert!(e.dot(&mesh.normals[lp[k] as usize]).abs() < 1e-8);
    }
}

#[test]
fn sphere_circle_conormal_closed_form() {
    let delta = 0.1;
    let chart = SphereDomainChart::new(
        Point3::origin(),
        vec![RemovedDisk::with_frame(Vector3::z(), delta, Vector3::x(), Vector3::y())],
    );
    let m = sphere_domain_mesh(&chart, 64, 64).unwrap();
    let eta = conormal(&m.mesh, 0).unwrap();
    let lp = &m.mesh.boundary_loops[0];
    let theta = excision_polar_angle(delta);
    for (k, &v) in lp.iter().enumerate() {
        let p = m.mesh.vertices[v as usize];
        let phi = p.y.atan2(p.x);
        // Outward conormal points from the domain toward the removed cap:
        // toward decreasing polar angle, so its horizontal part aims at the
        // axis while its vertical part is sin(theta).
        let expect = Vector3::new(
            -theta.cos() * phi.cos(),
            -theta.cos() * phi.sin(),
            theta.sin(),
        );
        assert!((eta[k] - expect).norm() < 5e-3, "vertex {k}: {:?} vs {:?}", eta[k], expect);
    }
}

#[test]
fn normal_graph_identity_and_offset_sphere() {
    let chart = SphereDomainChart::new(Point3::origin(), vec![]);
    let mesh = sphere_domain_mesh(&chart, 32, 32).unwrap().mesh;
    let same = normal_graph(&mesh, &VertexField::zeros(mesh.vertex_count())).unwrap();
    for (a, b) in mesh.vertices.iter().zip(&same.vertices) {
        assert_eq!(a, b);
    }
    // Offset by +0.1 along outward normals: sphere of radius 0.6.
    let off = normal_graph(&mesh, &VertexField::constant(mesh.vertex_count(), 0.1)).unwrap();
    for p in &off.vertices {
        assert!(((p - Point3::origin()).norm() - 0.6).abs() < 1e-12);
    }
}

#[test]
fn normal_graph_quadratic_remainder_for_jacobi_field() {
    // Along a family of normal graphs by a translational Jacobi field the
    // mean curvature changes only at second order. Use the pole-free domain
    // so no degenerate fan triangles enter the statistic.
    let chart = SphereDomainChart::new(
        Point3::origin(),
        vec![
            RemovedDisk::with_frame(Vector3::z(), 0.15, Vector3::x(), Vector3::y()),
            RemovedDisk::with_frame(-Vector3::z(), 0.15, Vector3::x(), Vector3::y()),
        ],
    );
    let mesh = sphere_domain_mesh(&chart, 48, 48).unwrap().mesh;
    let u = VertexField(mesh.normals.iter().map(|n| n.z).collect());
    // Reference through the same path so displaced and base curvature use the
    // same (face-averaged) normal convention.
    let h0 = mean_curvature(&normal_graph(&mesh, &VertexField::zeros(mesh.vertex_count())).unwrap())
        .unwrap();
    let mut devs = Vec::new();
    for &t in &[0.02, 0.01, 0.005] {
        // Symmetric second difference along the family kills the linear term
        // (including its discretization leakage), leaving the quadratic
        // remainder.
        let up =
            normal_graph(&mesh, &VertexField(u.0.iter().map(|v| t * v).collect())).unwrap();
        let down =
            normal_graph(&mesh, &VertexField(u.0.iter().map(|v| -t * v).collect())).unwrap();
        let hp = mean_curvature(&up).unwrap();
        let hm = mean_curvature(&down).unwrap();
        let mut dev = 0.0f64;
        for i in 0..mesh.vertex_count() {
            if !mesh.is_boundary_vertex(i) {
                dev = dev.max((0.5 * (hp[i] + hm[i]) - h0[i]).abs());
            }
        }
        devs.push(dev);
    }
    // Quadratic: halving t divides the remainder by about 4.
    assert!(devs[0] / devs[1] > 3.0, "remainder not quadratic: {devs:?}");
    assert!(devs[1] / devs[2] > 3.0, "remainder not quadratic: {devs:?}");
}

#[test]
fn normal_graph_face_inversion_detected() {
    let mesh = catenoid_neck_mesh(0.3, 32, 16).unwrap();
    // Push the waist inward past the axis.
    let a = 0.3f64.sin();
    let u = VertexField(
        mesh.vertices
            .iter()
            .map(|p| {
                let r = (p.x * p.x + p.y * p.y).sqrt();
                if r < 1.5 * a {
                    -3.0 * a
                } else {
                    0.0
                }
            })
            .collect(),
    );
    assert!(matches!(normal_graph(&mesh, &u), Err(MeshError::FaceInversion { .. })));
}

#[test]
fn obj_ply_round_trip() {
    let dir = std::env::temp_dir().join("cmc_gluing_io_test");
    std::fs::create_dir_all(&dir).unwrap();
    let mesh = catenoid_neck_mesh(0.15, 24, 8).unwrap();

    let obj = dir.join("neck.obj");
    write_obj(&mesh, &obj).unwrap();
    let back = read_obj(&obj).unwrap();
    assert_eq!(back.faces, mesh.faces);
    assert_eq!(back.boundary_loops.len(), mesh.boundary_loops.len());
    for (a, b) in mesh.vertices.iter().zip(&back.vertices) {
        assert!((a - b).norm() < 1e-15);
    }

    let ply = dir.join("neck.ply");
    write_ply(&mesh, &ply).unwrap();
    let back = read_ply(&ply).unwrap();
    assert_eq!(back.faces, mesh.faces);
    for (a, b) in mesh.vertices.iter().zip(&back.vertices) {
        assert_eq!(a, b);
    }
    for (a, b) in mesh.normals.iter().zip(&back.normals) {
        assert_eq!(a, b);
    }
}

#[test]
fn principal_curvatures_on_sphere() {
    let mesh = unit_sphere_mesh(48);
    let pc = principal_curvatures(&mesh).unwrap();
    for v in 0..mesh.vertex_count() {
        if mesh.is_boundary_vertex(v) {
            continue;
        }
        let (k1, k2) = pc[v];
        assert!((k1 - 1.0).abs() < 0.05 && (k2 - 1.0).abs() < 0.05, "({k1}, {k2})");
    }
    let a2 = squared_second_form(&mesh).unwrap();
    for v in 0..mesh.vertex_count() {
        assert!((a2[v] - 2.0).abs() < 0.1);
    }
}
