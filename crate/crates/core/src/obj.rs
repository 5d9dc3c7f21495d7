//! Minimal OBJ reader and writer: `v x y z` and `f i j k` lines only,
//! one-based indices, winding preserved.

use crate::mesh::{MeshError, TriMesh};
use nalgebra::Point3;
use std::io::{self, BufRead, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ObjError {
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: unsupported directive {directive:?}")]
    UnsupportedDirective { line: usize, directive: String },
    #[error("line {line}: malformed {kind} entry")]
    Malformed { line: usize, kind: &'static str },
    #[error("line {line}: face index {index} out of range")]
    FaceIndexOutOfRange { line: usize, index: i64 },
    #[error("mesh invalid: {0}")]
    Mesh(#[from] MeshError),
}

pub fn write_obj(mesh: &TriMesh, mut out: impl Write) -> io::Result<()> {
    for p in mesh.vertices() {
        writeln!(out, "v {} {} {}", p.x, p.y, p.z)?;
    }
    for tri in mesh.triangles() {
        writeln!(out, "f {} {} {}", tri[0] + 1, tri[1] + 1, tri[2] + 1)?;
    }
    Ok(())
}

pub fn read_obj(input: impl BufRead) -> Result<TriMesh, ObjError> {
    let mut vertices: Vec<Point3<f64>> = Vec::new();
    let mut triangles: Vec<[usize; 3]> = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let number = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut parts = trimmed.split_whitespace();
        match parts.next() {
            Some("v") => {
                let mut coord = || -> Option<f64> { parts.next().and_then(|s| s.parse().ok()) };
                let (x, y, z) = match (coord(), coord(), coord()) {
                    (Some(x), Some(y), Some(z)) => (x, y, z),
                    _ => return Err(ObjError::Malformed { line: number, kind: "vertex" }),
                };
                vertices.push(Point3::new(x, y, z));
            }
            Some("f") => {
                let mut index = || -> Result<usize, ObjError> {
                    let raw = parts
                        .next()
                        .ok_or(ObjError::Malformed { line: number, kind: "face" })?;
                    let value: i64 = raw
                        .parse()
                        .map_err(|_| ObjError::Malformed { line: number, kind: "face" })?;
                    if value < 1 || value as usize > vertices.len() {
                        return Err(ObjError::FaceIndexOutOfRange { line: number, index: value });
                    }
                    Ok(value as usize - 1)
                };
                let tri = [index()?, index()?, index()?];
                if parts.next().is_some() {
                    return Err(ObjError::Malformed { line: number, kind: "face" });
                }
                triangles.push(tri);
            }
            Some(other) => {
                return Err(ObjError::UnsupportedDirective {
                    line: number,
                    directive: other.to_string(),
                })
            }
            None => {}
        }
    }
    Ok(TriMesh::new(vertices, triangles)?)
}

pub fn save_obj(mesh: &TriMesh, path: impl AsRef<Path>) -> io::Result<()> {
    let file = std::fs::File::create(path)?;
    write_obj(mesh, io::BufWriter::new(file))
}

pub fn load_obj(path: impl AsRef<Path>) -> Result<TriMesh, ObjError> {
    let file = std::fs::File::open(path)?;
    read_obj(io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    #[test]
    fn roundtrip_preserves_geometry_exactly() {
        let mesh = shapes::icosphere(2, 1.0);
        let mut buf = Vec::new();
        write_obj(&mesh, &mut buf).unwrap();
        let back = read_obj(buf.as_slice()).unwrap();
        assert_eq!(mesh.n_vertices(), back.n_vertices());
        assert_eq!(mesh.triangles(), back.triangles());
        for (a, b) in mesh.vertices().iter().zip(back.vertices()) {
            assert_eq!(a, b, "coordinates must roundtrip bit for bit");
        }
    }

    #[test]
    fn rejects_unsupported_directives() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nf 1 2 3\n";
        let err = read_obj(text.as_bytes()).unwrap_err();
        assert!(matches!(err, ObjError::UnsupportedDirective { .. }));
    }

    #[test]
    fn rejects_out_of_range_faces() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 4\n";
        let err = read_obj(text.as_bytes()).unwrap_err();
        assert!(matches!(err, ObjError::FaceIndexOutOfRange { .. }));
    }

    #[test]
    fn writes_expected_plain_format() {
        let mesh = TriMesh::new(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(0.0, 1.0, 0.5),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_obj(&mesh, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "v 0 0 0\nv 1 0 0\nv 0 1 0.5\nf 1 2 3\n");
    }
}
