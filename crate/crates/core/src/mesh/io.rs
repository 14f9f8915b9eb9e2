//! OBJ (ASCII) and binary PLY import/export.
//!
//! OBJ uses `v`/`vn`/`f` records with 1-based indices; boundary loops are
//! serialized as named groups holding `l` polyline records.

use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{Point3, Vector3};

use super::{MeshError, TriMesh};

pub fn write_obj(mesh: &TriMesh, path: &Path) -> Result<(), MeshError> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    for v in &mesh.vertices {
        writeln!(w, "v {:.17} {:.17} {:.17}", v.x, v.y, v.z)?;
    }
    for n in &mesh.normals {
        writeln!(w, "vn {:.17} {:.17} {:.17}", n.x, n.y, n.z)?;
    }
    writeln!(w, "g surface")?;
    for f in &mesh.faces {
        writeln!(
            w,
            "f {}//{} {}//{} {}//{}",
            f[0] + 1,
            f[0] + 1,
            f[1] + 1,
            f[1] + 1,
            f[2] + 1,
            f[2] + 1
        )?;
    }
    for (i, lp) in mesh.boundary_loops.iter().enumerate() {
        writeln!(w, "g loop_{i}")?;
        write!(w, "l")?;
        for &v in lp {
            write!(w, " {}", v + 1)?;
        }
        writeln!(w, " {}", lp[0] + 1)?;
    }
    Ok(())
}

pub fn read_obj(path: &Path) -> Result<TriMesh, MeshError> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut vertices = Vec::new();
    let mut normals = Vec::new();
    let mut faces = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("v") => {
                let coords: Vec<f64> = tok
                    .take(3)
                    .map(|t| t.parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| MeshError::Parse { line: lineno + 1, message: e.to_string() })?;
                if coords.len() != 3 {
                    return Err(MeshError::Parse {
                        line: lineno + 1,
                        message: "vertex needs 3 coordinates".into(),
                    });
                }
                vertices.push(Point3::new(coords[0], coords[1], coords[2]));
            }
            Some("vn") => {
                let coords: Vec<f64> = tok
                    .take(3)
                    .map(|t| t.parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| MeshError::Parse { line: lineno + 1, message: e.to_string() })?;
                normals.push(Vector3::new(coords[0], coords[1], coords[2]).normalize());
            }
            Some("f") => {
                let idx: Vec<u32> = tok
                    .map(|t| {
                        let first = t.split('/').next().unwrap_or(t);
                        first.parse::<u32>().map(|i| i - 1)
                    })
                    .collect::<Result<_, _>>()
                    .map_err(|e| MeshError::Parse { line: lineno + 1, message: e.to_string() })?;
                if idx.len() != 3 {
                    return Err(MeshError::Parse {
                        line: lineno + 1,
                        message: "only triangle faces supported".into(),
                    });
                }
                faces.push([idx[0], idx[1], idx[2]]);
            }
            _ => {}
        }
    }
    if normals.len() == vertices.len() {
        TriMesh::with_normals(vertices, faces, normals)
    } else {
        TriMesh::new(vertices, faces)
    }
}

/// Binary little-endian PLY with vertex positions, normals and triangle faces.
pub fn write_ply(mesh: &TriMesh, path: &Path) -> Result<(), MeshError> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    write!(
        w,
        "ply\nformat binary_little_endian 1.0\nelement vertex {}\n\
         property double x\nproperty double y\nproperty double z\n\
         property double nx\nproperty double ny\nproperty double nz\n\
         element face {}\nproperty list uchar uint vertex_indices\nend_header\n",
        mesh.vertices.len(),
        mesh.faces.len()
    )?;
    for (v, n) in mesh.vertices.iter().zip(&mesh.normals) {
        for val in [v.x, v.y, v.z, n.x, n.y, n.z] {
            w.write_all(&val.to_le_bytes())?;
        }
    }
    for f in &mesh.faces {
        w.write_all(&[3u8])?;
        for &i in f {
            w.write_all(&i.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_ply(path: &Path) -> Result<TriMesh, MeshError> {
    let mut file = std::fs::File::open(path)?;
    let mut data = Vec::new();
    file.read_to_end(&mut data)?;
    let header_end = data
        .windows(11)
        .position(|w| w == b"end_header\n")
        .ok_or(MeshError::Parse { line: 0, message: "missing end_header".into() })?
        + 11;
    let header = std::str::from_utf8(&data[..header_end])
        .map_err(|e| MeshError::Parse { line: 0, message: e.to_string() })?;
    let mut nv = 0usize;
    let mut nf = 0usize;
    for line in header.lines() {
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.len() == 3 && t[0] == "element" {
            let n = t[2]
                .parse()
                .map_err(|_| MeshError::Parse { line: 0, message: "bad element count".into() })?;
            match t[1] {
                "vertex" => nv = n,
                "face" => nf = n,
                _ => {}
            }
        }
    }
    let mut off = header_end;
    let f64_at = |o: usize| f64::from_le_bytes(data[o..o + 8].try_into().unwrap());
    let mut vertices = Vec::with_capacity(nv);
    let mut normals = Vec::with_capacity(nv);
    for _ in 0..nv {
        vertices.push(Point3::new(f64_at(off), f64_at(off + 8), f64_at(off + 16)));
        normals.push(Vector3::new(f64_at(off + 24), f64_at(off + 32), f64_at(off + 40)));
        off += 48;
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let count = data[off];
        off += 1;
        if count != 3 {
            return Err(MeshError::Parse { line: 0, message: "non-triangle face".into() });
        }
        let mut idx = [0u32; 3];
        for k in 0..3 {
            idx[k] = u32::from_le_bytes(data[off..off + 4].try_into().unwrap());
            off += 4;
        }
        faces.push(idx);
    }
    TriMesh::with_normals(vertices, faces, normals)
}
