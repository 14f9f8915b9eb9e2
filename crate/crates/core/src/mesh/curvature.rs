//! Principal curvature estimation by quadric fits over two-ring
//! neighborhoods.

use nalgebra::{Matrix2, Vector3};

use super::{MeshError, TriMesh, VertexField};

/// Per-vertex principal curvatures `(k1, k2)` with `k1 <= k2`, signed so that
/// a sphere oriented by the outward normal has positive curvatures.
pub fn principal_curvatures(mesh: &TriMesh) -> Result<Vec<(f64, f64)>, MeshError> {
    mesh.check_degenerate()?;
    let rings = mesh.vertex_rings();
    let n = mesh.vertex_count();
    let mut out = vec![(0.0, 0.0); n];
    for v in 0..n {
        // Two-ring neighborhood.
        let mut nbrs: Vec<u32> = rings[v].clone();
        for &w in &rings[v] {
            for &x in &rings[w as usize] {
                if x as usize != v && !nbrs.contains(&x) {
                    nbrs.push(x);
                }
            }
        }
        out[v] = fit_vertex(mesh, v, &nbrs);
    }
    Ok(out)
}

/// `|A|^2 = k1^2 + k2^2`, with boundary values extrapolated from the interior.
pub fn squared_second_form(mesh: &TriMesh) -> Result<VertexField, MeshError> {
    let pc = principal_curvatures(mesh)?;
    let mut a2: Vec<f64> = pc.iter().map(|(k1, k2)| k1 * k1 + k2 * k2).collect();
    super::ops::extrapolate_boundary(mesh, &mut a2);
    Ok(VertexField(a2))
}

/// Second-order normal estimate at a vertex from a quadric fit over its
/// two-ring neighborhood; robust on one-sided (boundary) neighborhoods where
/// face averaging is first-order biased.
pub fn fitted_normal(mesh: &TriMesh, rings: &[Vec<u32>], v: usize) -> nalgebra::Vector3<f64> {
    let mut nbrs: Vec<u32> = rings[v].clone();
    for &w in &rings[v] {
        for &x in &rings[w as usize] {
            if x as usize != v && !nbrs.contains(&x) {
                nbrs.push(x);
            }
        }
    }
    let normal = mesh.normals[v];
    let mut e1 = if normal.x.abs() < 0.9 {
        Vector3::x().cross(&normal)
    } else {
        Vector3::y().cross(&normal)
    };
    e1.normalize_mut();
    let e2 = normal.cross(&e1);
    let origin = mesh.vertices[v];
    let mut ata = [[0.0f64; 5]; 5];
    let mut atb = [0.0f64; 5];
    for &w in &nbrs {
        let d = mesh.vertices[w as usize] - origin;
        let x = d.dot(&e1);
        let y = d.dot(&e2);
        let z = d.dot(&normal);
        let row = [0.5 * x * x, x * y, 0.5 * y * y, x, y];
        for i in 0..5 {
            for j in 0..5 {
                ata[i][j] += row[i] * row[j];
            }
            atb[i] += row[i] * z;
        }
    }
    let sol = solve5(&mut ata, &mut atb);
    // The graph normal at the origin is (-dx, -ey, 1) in the local frame.
    (normal - sol[3] * e1 - sol[4] * e2).normalize()
}

fn fit_vertex(mesh: &TriMesh, v: usize, nbrs: &[u32]) -> (f64, f64) {
    let normal = mesh.normals[v];
    // Local orthonormal tangent frame.
    let mut e1 = if normal.x.abs() < 0.9 {
        Vector3::x().cross(&normal)
    } else {
        Vector3::y().cross(&normal)
    };
    e1.normalize_mut();
    let e2 = normal.cross(&e1);
    let origin = mesh.vertices[v];

    // Fit z = 0.5 a x^2 + b x y + 0.5 c y^2 + d x + e y over the neighbors.
    let mut ata = [[0.0f64; 5]; 5];
    let mut atb = [0.0f64; 5];
    for &w in nbrs {
        let d = mesh.vertices[w as usize] - origin;
        let x = d.dot(&e1);
        let y = d.dot(&e2);
        let z = d.dot(&normal);
        let row = [0.5 * x * x, x * y, 0.5 * y * y, x, y];
        for i in 0..5 {
            for j in 0..5 {
                ata[i][j] += row[i] * row[j];
            }
            atb[i] += row[i] * z;
        }
    }
    let sol = solve5(&mut ata, &mut atb);
    let (a, b, c, dx, ey) = (sol[0], sol[1], sol[2], sol[3], sol[4]);

    // Second fundamental form of the graph against the outward normal; the
    // sign flip makes a sphere with outward normals have positive curvature.
    let wsq = 1.0 + dx * dx + ey * ey;
    let denom = wsq.sqrt();
    let ii = Matrix2::new(a, b, b, c) / denom;
    let i_form = Matrix2::new(1.0 + dx * dx, dx * ey, dx * ey, 1.0 + ey * ey);
    let shape = -i_form.try_inverse().unwrap_or_else(Matrix2::identity) * ii;
    // Principal curvatures are the eigenvalues of the (non-symmetric but
    // diagonalizable) shape operator.
    let tr = shape.trace();
    let det = shape.determinant();
    let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
    (tr / 2.0 - disc, tr / 2.0 + disc)
}

fn solve5(ata: &mut [[f64; 5]; 5], atb: &mut [f64; 5]) -> [f64; 5] {
    // Gaussian elimination with partial pivoting; tiny ridge for rank safety.
    for i in 0..5 {
        ata[i][i] += 1e-14;
    }
    for col in 0..5 {
        let mut piv = col;
        for r in col + 1..5 {
            if ata[r][col].abs() > ata[piv][col].abs() {
                piv = r;
            }
        }
        ata.swap(col, piv);
        atb.swap(col, piv);
        let d = ata[col][col];
        for r in col + 1..5 {
            let f = ata[r][col] / d;
            for c in col..5 {
                ata[r][c] -= f * ata[col][c];
            }
            atb[r] -= f * atb[col];
        }
    }
    let mut x = [0.0; 5];
    for i in (0..5).rev() {
        let mut s = atb[i];
        for j in i + 1..5 {
            s -= ata[i][j] * x[j];
        }
        x[i] = s / ata[i][i];
    }
    x
}
