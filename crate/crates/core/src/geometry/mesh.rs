//! Closed triangle meshes with ray-parity containment.
//!
//! Containment casts an axis-aligned ray from the query point and counts
//! triangle crossings ahead of it. Crossings are looked up through a
//! per-axis 2D bin grid over the projected triangles. Degenerate hits
//! (the ray grazes an edge or a vertex) are resolved by a fixed rule:
//!
//! 1. try the `+x` ray, then `+y`, then `+z`;
//! 2. if all three are degenerate, nudge the point by `1e-9` of the mesh
//!    bounding-box diagonal along `(0.2718, 0.5772, 0.7071)` and repeat,
//!    at most three times;
//! 3. if still degenerate, report the point as inside.
//!
//! A point lying on a triangle (within `1e-12` of the mesh scale) is
//! inside.

use std::collections::HashMap;

use super::{Aabb, GeometryError, Point};

/// Vertex welding tolerance in meters.
pub const WELD_TOLERANCE: f64 = 1e-9;

const NUDGE_DIR: [f64; 3] = [0.2718, 0.5772, 0.7071];

#[derive(Debug, Clone)]
pub struct TriangleMesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    bbox: Aabb,
    scale: f64,
    bins: [BinGrid; 3],
}

#[derive(Debug, Clone)]
struct BinGrid {
    // projected coordinates (u, v) = the two axes other than the ray axis
    u_axis: usize,
    v_axis: usize,
    umin: f64,
    vmin: f64,
    du: f64,
    dv: f64,
    nu: usize,
    nv: usize,
    cells: Vec<Vec<u32>>,
}

enum RayOutcome {
    Parity(bool),
    OnSurface,
    Degenerate,
}

impl TriangleMesh {
    /// Welds vertices closer than [`WELD_TOLERANCE`], drops triangles that
    /// collapse, and checks that every edge is shared by exactly two
    /// triangles.
    pub fn new(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Self, GeometryError> {
        if triangles.is_empty() {
            return Err(GeometryError::EmptyMesh);
        }
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v >= vertices.len() {
                    return Err(GeometryError::BadIndex(t, v));
                }
            }
        }
        let (vertices, remap) = weld(&vertices, WELD_TOLERANCE);
        let triangles: Vec<[usize; 3]> = triangles
            .iter()
            .map(|t| t.map(|v| remap[v]))
            .filter(|t| t[0] != t[1] && t[1] != t[2] && t[0] != t[2])
            .collect();
        if triangles.is_empty() {
            return Err(GeometryError::EmptyMesh);
        }
        check_watertight(&triangles)?;

        let mut min = [f64::INFINITY; 3];
        let mut max = [f64::NEG_INFINITY; 3];
        for t in &triangles {
            for &v in t {
                for a in 0..3 {
                    min[a] = min[a].min(vertices[v][a]);
                    max[a] = max[a].max(vertices[v][a]);
                }
            }
        }
        let bbox = Aabb { min, max };
        let scale = (0..3)
            .map(|a| (max[a] - min[a]).powi(2))
            .sum::<f64>()
            .sqrt()
            .max(f64::MIN_POSITIVE);
        let bins = [0, 1, 2].map(|d| BinGrid::build(&vertices, &triangles, &bbox, d));
        Ok(TriangleMesh {
            vertices,
            triangles,
            bbox,
            scale,
            bins,
        })
    }

    /// Builds a mesh from a flat triangle soup (three vertices per facet).
    pub fn from_soup(facets: &[[Point; 3]]) -> Result<Self, GeometryError> {
        let mut vertices = Vec::with_capacity(facets.len() * 3);
        let mut triangles = Vec::with_capacity(facets.len());
        for f in facets {
            let base = vertices.len();
            vertices.extend_from_slice(f);
            triangles.push([base, base + 1, base + 2]);
        }
        Self::new(vertices, triangles)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn bounding_box(&self) -> Aabb {
        self.bbox
    }

    /// Ray-parity containment with the degenerate-hit rule described in
    /// the module docs.
    pub fn contains(&self, p: &Point) -> bool {
        if !self.bbox.contains(p) {
            return false;
        }
        let nudge = 1e-9 * self.scale;
        let mut q = *p;
        for attempt in 0..4 {
            for d in 0..3 {
                match self.cast(&q, d) {
                    RayOutcome::Parity(inside) => return inside,
                    RayOutcome::OnSurface => return true,
                    RayOutcome::Degenerate => {}
                }
            }
            if attempt < 3 {
                for a in 0..3 {
                    q[a] += nudge * NUDGE_DIR[a];
                }
            }
        }
        true
    }

    fn cast(&self, p: &Point, d: usize) -> RayOutcome {
        let bins = &self.bins[d];
        let (u, v) = (p[bins.u_axis], p[bins.v_axis]);
        let Some(cell) = bins.cell_of(u, v) else {
            return RayOutcome::Parity(false);
        };
        let tol_len = 1e-12 * self.scale;
        let mut crossings = 0usize;
        for &t in &bins.cells[cell] {
            let tri = self.triangles[t as usize];
            let [a, b, c] = tri.map(|i| self.vertices[i]);
            let (au, av) = (a[bins.u_axis], a[bins.v_axis]);
            let (bu, bv) = (b[bins.u_axis], b[bins.v_axis]);
            let (cu, cv) = (c[bins.u_axis], c[bins.v_axis]);
            let area = (bu - au) * (cv - av) - (bv - av) * (cu - au);
            let w0 = (cu - bu) * (v - bv) - (cv - bv) * (u - bu);
            let w1 = (au - cu) * (v - cv) - (av - cv) * (u - cu);
            let w2 = (bu - au) * (v - av) - (bv - av) * (u - au);
            let extent = ((bu - au).abs() + (cu - au).abs() + (bv - av).abs() + (cv - av).abs())
                .max(f64::MIN_POSITIVE);
            if area.abs() <= 1e-14 * extent * extent {
                // Triangle parallel to the ray: crossings are picked up on its
                // neighbours' shared edges, which are reported degenerate.
                continue;
            }
            let eps = 1e-10 * area.abs();
            let s = area.signum();
            let (s0, s1, s2) = (w0 * s, w1 * s, w2 * s);
            if s0 < -eps || s1 < -eps || s2 < -eps {
                continue;
            }
            let hit = (w0 * a[d] + w1 * b[d] + w2 * c[d]) / area;
            if (hit - p[d]).abs() <= tol_len {
                return RayOutcome::OnSurface;
            }
            if hit < p[d] {
                continue;
            }
            if s0 <= eps || s1 <= eps || s2 <= eps {
                return RayOutcome::Degenerate;
            }
            crossings += 1;
        }
        RayOutcome::Parity(crossings % 2 == 1)
    }
}

impl BinGrid {
    fn build(vertices: &[Point], triangles: &[[usize; 3]], bbox: &Aabb, d: usize) -> Self {
        let (u_axis, v_axis) = ((d + 1) % 3, (d + 2) % 3);
        let n = ((triangles.len() as f64).sqrt() * 2.0)
            .ceil()
            .clamp(1.0, 256.0) as usize;
        let umin = bbox.min[u_axis];
        let vmin = bbox.min[v_axis];
        let du = ((bbox.max[u_axis] - umin) / n as f64).max(f64::MIN_POSITIVE);
        let dv = ((bbox.max[v_axis] - vmin) / n as f64).max(f64::MIN_POSITIVE);
        let mut cells = vec![Vec::new(); n * n];
        let pad = 1e-9;
        for (t, tri) in triangles.iter().enumerate() {
            let us = tri.map(|i| vertices[i][u_axis]);
            let vs = tri.map(|i| vertices[i][v_axis]);
            let lo_u = us.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi_u = us.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo_v = vs.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi_v = vs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let iu0 = clamp_bin((lo_u - umin) / du - pad, n);
            let iu1 = clamp_bin((hi_u - umin) / du + pad, n);
            let iv0 = clamp_bin((lo_v - vmin) / dv - pad, n);
            let iv1 = clamp_bin((hi_v - vmin) / dv + pad, n);
            for iv in iv0..=iv1 {
                for iu in iu0..=iu1 {
                    cells[iu + n * iv].push(t as u32);
                }
            }
        }
        BinGrid {
            u_axis,
            v_axis,
            umin,
            vmin,
            du,
            dv,
            nu: n,
            nv: n,
            cells,
        }
    }

    fn cell_of(&self, u: f64, v: f64) -> Option<usize> {
        let fu = (u - self.umin) / self.du;
        let fv = (v - self.vmin) / self.dv;
        if !(fu >= -1e-9
            && fv >= -1e-9
            && fu <= self.nu as f64 + 1e-9
            && fv <= self.nv as f64 + 1e-9)
        {
            return None;
        }
        let iu = clamp_bin(fu, self.nu);
        let iv = clamp_bin(fv, self.nv);
        Some(iu + self.nu * iv)
    }
}

fn clamp_bin(f: f64, n: usize) -> usize {
    if f <= 0.0 {
        0
    } else {
        (f.floor() as usize).min(n - 1)
    }
}

fn weld(vertices: &[Point], tol: f64) -> (Vec<Point>, Vec<usize>) {
    let key = |p: &Point| p.map(|x| (x / tol).round() as i64);
    let mut buckets: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    let mut out: Vec<Point> = Vec::new();
    let mut remap = Vec::with_capacity(vertices.len());
    for p in vertices {
        let k = key(p);
        let mut found = None;
        'search: for dz in -1..=1 {
            for dy in -1..=1 {
                for dx in -1..=1 {
                    if let Some(list) = buckets.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                        for &idx in list {
                            let q = out[idx];
                            if (0..3).all(|a| (q[a] - p[a]).abs() <= tol) {
                                found = Some(idx);
                                break 'search;
                            }
                        }
                    }
                }
            }
        }
        let idx = match found {
            Some(i) => i,
            None => {
                out.push(*p);
                buckets.entry(k).or_default().push(out.len() - 1);
                out.len() - 1
            }
        };
        remap.push(idx);
    }
    (out, remap)
}

fn check_watertight(triangles: &[[usize; 3]]) -> Result<(), GeometryError> {
    let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
    for t in triangles {
        for e in 0..3 {
            let (a, b) = (t[e], t[(e + 1) % 3]);
            *edges.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    let mut bad: Vec<_> = edges.into_iter().filter(|(_, n)| *n != 2).collect();
    bad.sort();
    if let Some(((a, b), n)) = bad.first() {
        return Err(GeometryError::NotWatertight(*a, *b, *n));
    }
    Ok(())
}

/// Axis-aligned box as a closed, outward-oriented 12-triangle mesh.
pub fn box_mesh(min: Point, max: Point) -> TriangleMesh {
    let c = |i: usize| -> Point {
        [
            if i & 1 == 0 { min[0] } else { max[0] },
            if i & 2 == 0 { min[1] } else { max[1] },
            if i & 4 == 0 { min[2] } else { max[2] },
        ]
    };
    let vertices: Vec<Point> = (0..8).map(c).collect();
    let triangles = vec![
        [0, 2, 1],
        [1, 2, 3],
        [4, 5, 6],
        [5, 7, 6],
        [0, 1, 4],
        [1, 5, 4],
        [2, 6, 3],
        [3, 6, 7],
        [0, 4, 2],
        [2, 4, 6],
        [1, 3, 5],
        [3, 7, 5],
    ];
    TriangleMesh::new(vertices, triangles).expect("box mesh is closed")
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force parity along a generic, non-axis direction.
    fn oracle_inside(mesh: &TriangleMesh, p: &Point) -> bool {
        let dir = [0.577_215_664_9, 0.318_309_886_2, 0.752_694_011_9];
        let mut n = 0;
        for t in mesh.triangles() {
            let [a, b, c] = t.map(|i| mesh.vertices()[i]);
            let e1 = [0, 1, 2].map(|k| b[k] - a[k]);
            let e2 = [0, 1, 2].map(|k| c[k] - a[k]);
            let h = cross(dir, e2);
            let det = dot(e1, h);
            if det.abs() < 1e-15 {
                continue;
            }
            let s = [0, 1, 2].map(|k| p[k] - a[k]);
            let u = dot(s, h) / det;
            let q = cross(s, e1);
            let v = dot(dir, q) / det;
            let t = dot(e2, q) / det;
            if u >= 0.0 && v >= 0.0 && u + v <= 1.0 && t > 0.0 {
                n += 1;
            }
        }
        n % 2 == 1
    }

    fn cross(a: Point, b: Point) -> Point {
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    }

    fn dot(a: Point, b: Point) -> f64 {
        a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
    }

    #[test]
    fn unit_cube_center_is_inside() {
        let m = box_mesh([0.0; 3], [1.0; 3]);
        // the +x ray from the center hits the face diagonal: degenerate path
        assert!(m.contains(&[0.5, 0.5, 0.5]));
        assert!(oracle_inside(&m, &[0.5, 0.5, 0.5]));
        assert!(!m.contains(&[1.5, 0.5, 0.5]));
        assert!(!m.contains(&[0.5, -0.1, 0.5]));
    }

    #[test]
    fn surface_points_are_inside() {
        let m = box_mesh([0.0; 3], [1.0; 3]);
        for p in [
            [1.0, 0.3, 0.4],
            [0.0, 0.2, 0.2],
            [0.3, 1.0, 0.9],
            [0.25, 0.75, 0.0],
            [1.0, 1.0, 1.0],
            [0.5, 0.0, 0.5],
        ] {
            assert!(m.contains(&p), "{p:?}");
        }
    }

    #[test]
    fn agrees_with_oblique_ray_oracle() {
        let m = box_mesh([-0.3, 0.1, 0.2], [0.9, 0.8, 1.7]);
        let mut s = 12345u64;
        let mut next = || {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..2000 {
            let p = [next() * 2.0 - 0.7, next() * 1.5 - 0.3, next() * 2.5 - 0.2];
            assert_eq!(m.contains(&p), oracle_inside(&m, &p), "{p:?}");
        }
    }

    #[test]
    fn open_mesh_rejected() {
        let m = box_mesh([0.0; 3], [1.0; 3]);
        let mut tris = m.triangles().to_vec();
        tris.pop();
        assert!(matches!(
            TriangleMesh::new(m.vertices().to_vec(), tris),
            Err(GeometryError::NotWatertight(..))
        ));
    }

    #[test]
    fn welding_merges_soup_duplicates() {
        let m = box_mesh([0.0; 3], [1.0; 3]);
        let soup: Vec<[Point; 3]> = m
            .triangles()
            .iter()
            .map(|t| {
                t.map(|i| {
                    let v = m.vertices()[i];
                    [v[0] + 1e-11, v[1], v[2] - 1e-11]
                })
            })
            .collect();
        let welded = TriangleMesh::from_soup(&soup).unwrap();
        assert_eq!(welded.vertices().len(), 8);
    }
}
