//! STL reading and writing (binary and ASCII).
//!
//! A file is treated as binary when its length equals `84 + 50 * n` for the
//! facet count `n` stored at byte 80; anything else is parsed as ASCII.

use std::fs;
use std::path::Path;

use super::{GeometryError, Point, TriangleMesh};

/// Parses STL bytes into a facet soup.
pub fn parse_stl(bytes: &[u8]) -> Result<Vec<[Point; 3]>, GeometryError> {
    if bytes.len() >= 84 {
        let n = u32::from_le_bytes(bytes[80..84].try_into().expect("4 bytes")) as usize;
        if bytes.len() == 84 + 50 * n {
            return Ok(parse_binary(&bytes[84..], n));
        }
    }
    let text = std::str::from_utf8(bytes)
        .map_err(|_| GeometryError::Stl("not a binary STL and not valid UTF-8 text".into()))?;
    parse_ascii(text)
}

fn parse_binary(body: &[u8], n: usize) -> Vec<[Point; 3]> {
    let f = |b: &[u8]| f32::from_le_bytes(b.try_into().expect("4 bytes")) as f64;
    (0..n)
        .map(|t| {
            let rec = &body[t * 50..t * 50 + 50];
            // 12 bytes of normal, then three vertices
            [0, 1, 2].map(|v| {
                let o = 12 + 12 * v;
                [
                    f(&rec[o..o + 4]),
                    f(&rec[o + 4..o + 8]),
                    f(&rec[o + 8..o + 12]),
                ]
            })
        })
        .collect()
}

fn parse_ascii(text: &str) -> Result<Vec<[Point; 3]>, GeometryError> {
    let mut facets = Vec::new();
    let mut current: Vec<Point> = Vec::new();
    let mut saw_solid = false;
    for (lineno, line) in text.lines().enumerate() {
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("solid") => saw_solid = true,
            Some("vertex") => {
                let coords: Result<Vec<f64>, _> = tok.map(str::parse::<f64>).collect();
                match coords {
                    Ok(c) if c.len() == 3 => current.push([c[0], c[1], c[2]]),
                    _ => {
                        return Err(GeometryError::Stl(format!(
                            "line {}: malformed vertex",
                            lineno + 1
                        )))
                    }
                }
            }
            Some("endfacet") => {
                if current.len() != 3 {
                    return Err(GeometryError::Stl(format!(
                        "line {}: facet with {} vertices",
                        lineno + 1,
                        current.len()
                    )));
                }
                facets.push([current[0], current[1], current[2]]);
                current.clear();
            }
            _ => {}
        }
    }
    if !saw_solid {
        return Err(GeometryError::Stl("missing 'solid' header".into()));
    }
    if facets.is_empty() {
        return Err(GeometryError::EmptyMesh);
    }
    Ok(facets)
}

/// Reads an STL file and builds a welded, watertight mesh.
pub fn read_stl(path: &Path) -> Result<TriangleMesh, GeometryError> {
    let bytes = fs::read(path)?;
    TriangleMesh::from_soup(&parse_stl(&bytes)?)
}

fn facet_normal(f: &[Point; 3]) -> [f64; 3] {
    let u = [0, 1, 2].map(|k| f[1][k] - f[0][k]);
    let v = [0, 1, 2].map(|k| f[2][k] - f[0][k]);
    let n = [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ];
    let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    if len > 0.0 {
        n.map(|c| c / len)
    } else {
        [0.0; 3]
    }
}

fn facets_of(mesh: &TriangleMesh) -> impl Iterator<Item = [Point; 3]> + '_ {
    mesh.triangles()
        .iter()
        .map(|t| t.map(|i| mesh.vertices()[i]))
}

/// Binary STL bytes for `mesh` (single-precision vertices).
pub fn to_binary(mesh: &TriangleMesh) -> Vec<u8> {
    let mut out = vec![0u8; 80];
    out[..16].copy_from_slice(b"binary stl      ");
    out.extend_from_slice(&(mesh.triangles().len() as u32).to_le_bytes());
    for f in facets_of(mesh) {
        for c in facet_normal(&f) {
            out.extend_from_slice(&(c as f32).to_le_bytes());
        }
        for v in f {
            for c in v {
                out.extend_from_slice(&(c as f32).to_le_bytes());
            }
        }
        out.extend_from_slice(&[0, 0]);
    }
    out
}

/// ASCII STL text for `mesh`.
pub fn to_ascii(mesh: &TriangleMesh, name: &str) -> String {
    let mut s = format!("solid {name}\n");
    for f in facets_of(mesh) {
        let n = facet_normal(&f);
        s.push_str(&format!(
            "  facet normal {:e} {:e} {:e}\n    outer loop\n",
            n[0], n[1], n[2]
        ));
        for v in f {
            s.push_str(&format!("      vertex {:e} {:e} {:e}\n", v[0], v[1], v[2]));
        }
        s.push_str("    endloop\n  endfacet\n");
    }
    s.push_str(&format!("endsolid {name}\n"));
    s
}
