//! Conformal edge lengths and face areas.
//!
//! Edge lengths come from sampling the containment predicate at 257
//! equispaced points and bisecting every sign change down to `1e-6` of the
//! edge length. Features thinner than one sampling interval that start and
//! end between two samples are not resolved.
//!
//! Face areas integrate the free length of lines across the face with
//! adaptive Simpson quadrature (at least 16 panels, refined where the
//! integrand is rough). The integrand is continuous, so this converges much
//! faster than counting sample points in 2D.

use std::fmt::Write as _;
use std::io::{Read, Write};

use crate::grid::{Axis, Component, Field3, GridSpec};

use super::{Aabb, GeometryError, Point, Scene, Shape};

/// Small-cell clamp threshold as a fraction of the full face area.
pub const DEFAULT_EPS_AREA: f64 = 1e-6;

const EDGE_SAMPLES: usize = 256;
const EDGE_BISECT_REL: f64 = 1e-6;
const FACE_MIN_PANELS: usize = 16;
const FACE_MAX_DEPTH: u32 = 24;
/// Default face-area tolerance relative to the full face area.
const FACE_TOL_REL: f64 = 1e-7;

/// Axis-aligned segment `start .. start + length * e_axis`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub start: Point,
    pub axis: Axis,
    pub length: f64,
}

/// Axis-aligned rectangle with normal `normal`. It spans `len_a` along the
/// axis after `normal` (cyclically) and `len_b` along the one after that.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Face {
    pub corner: Point,
    pub normal: Axis,
    pub len_a: f64,
    pub len_b: f64,
}

impl Edge {
    fn point_at(&self, s: f64) -> Point {
        let mut p = self.start;
        p[self.axis.index()] += s;
        p
    }

    fn bounds(&self) -> Aabb {
        Aabb::from_points(self.start, self.point_at(self.length))
    }
}

impl Face {
    fn axes(&self) -> (usize, usize) {
        let n = self.normal.index();
        ((n + 1) % 3, (n + 2) % 3)
    }

    fn corners(&self) -> [Point; 4] {
        let (a, b) = self.axes();
        let mut out = [self.corner; 4];
        out[1][a] += self.len_a;
        out[2][b] += self.len_b;
        out[3][a] += self.len_a;
        out[3][b] += self.len_b;
        out
    }

    fn bounds(&self) -> Aabb {
        let c = self.corners();
        Aabb::from_points(c[0], c[3])
    }

    pub fn area(&self) -> f64 {
        self.len_a * self.len_b
    }
}

fn inside_any(shapes: &[&Shape], p: &Point) -> bool {
    shapes.iter().any(|s| s.contains(p))
}

/// Free (outside-PEC) length of `edge`.
pub fn edge_free_length(scene: &Scene, edge: &Edge) -> f64 {
    let region = edge.bounds();
    let shapes: Vec<&Shape> = scene.candidates(&region).collect();
    edge_free_length_in(&shapes, edge)
}

fn edge_free_length_in(shapes: &[&Shape], edge: &Edge) -> f64 {
    let len = edge.length;
    if shapes.is_empty() {
        return len;
    }
    let a = edge.start;
    let b = edge.point_at(len);
    if shapes
        .iter()
        .any(|s| s.is_convex() && s.contains(&a) && s.contains(&b))
    {
        return 0.0;
    }
    let h = len / EDGE_SAMPLES as f64;
    let tol = EDGE_BISECT_REL * len;
    let mut prev_in = inside_any(shapes, &a);
    let mut free = 0.0;
    for i in 1..=EDGE_SAMPLES {
        let s0 = (i - 1) as f64 * h;
        let s1 = if i == EDGE_SAMPLES { len } else { i as f64 * h };
        let cur_in = inside_any(shapes, &edge.point_at(s1));
        if prev_in == cur_in {
            if !cur_in {
                free += s1 - s0;
            }
        } else {
            let (mut lo, mut hi) = (s0, s1);
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                if inside_any(shapes, &edge.point_at(mid)) == prev_in {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let t = 0.5 * (lo + hi);
            free += if prev_in { s1 - t } else { t - s0 };
        }
        prev_in = cur_in;
    }
    free.clamp(0.0, len)
}

/// Free (outside-PEC) area of `face`.
pub fn face_free_area(scene: &Scene, face: &Face) -> f64 {
    face_free_area_tol(scene, face, FACE_TOL_REL * face.area())
}

/// As [`face_free_area`] with an explicit absolute quadrature tolerance.
pub fn face_free_area_tol(scene: &Scene, face: &Face, tol: f64) -> f64 {
    let region = face.bounds();
    let shapes: Vec<&Shape> = scene.candidates(&region).collect();
    face_free_area_in(&shapes, face, tol)
}

fn face_free_area_in(shapes: &[&Shape], face: &Face, tol: f64) -> f64 {
    let full = face.area();
    if shapes.is_empty() {
        return full;
    }
    let corners = face.corners();
    if shapes
        .iter()
        .any(|s| s.is_convex() && corners.iter().all(|c| s.contains(c)))
    {
        return 0.0;
    }
    let (a, b) = face.axes();
    let line = |v: f64| -> f64 {
        let mut start = face.corner;
        start[b] += v;
        let edge = Edge {
            start,
            axis: Axis::from_index(a),
            length: face.len_a,
        };
        let region = edge.bounds();
        let local: Vec<&Shape> = shapes
            .iter()
            .copied()
            .filter(|s| s.may_touch(&region))
            .collect();
        edge_free_length_in(&local, &edge)
    };
    let n = FACE_MIN_PANELS;
    let w = face.len_b / n as f64;
    let tol_panel = tol.max(1e-12) / n as f64;
    let mut total = 0.0;
    let mut f_lo = line(0.0);
    for p in 0..n {
        let v0 = p as f64 * w;
        let v1 = if p + 1 == n { face.len_b } else { v0 + w };
        let vm = 0.5 * (v0 + v1);
        let (fm, f_hi) = (line(vm), line(v1));
        let whole = (v1 - v0) / 6.0 * (f_lo + 4.0 * fm + f_hi);
        total += simpson(
            &line,
            v0,
            v1,
            f_lo,
            fm,
            f_hi,
            whole,
            tol_panel,
            FACE_MAX_DEPTH,
        );
        f_lo = f_hi;
    }
    total.clamp(0.0, full)
}

#[allow(clippy::too_many_arguments)]
fn simpson(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        return left + right + diff / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Per-edge free lengths and per-face free areas aligned with the Yee node
/// sets: `lx` with Ex, `syz` with Hx, and so on.
#[derive(Debug, Clone, PartialEq)]
pub struct ConformalCoefficients {
    pub grid: GridSpec,
    pub eps_area: f64,
    pub lx: Field3,
    pub ly: Field3,
    pub lz: Field3,
    pub syz: Field3,
    pub sxz: Field3,
    pub sxy: Field3,
}

impl ConformalCoefficients {
    /// Free-space coefficients: every edge and face fully open.
    pub fn free_space(grid: &GridSpec) -> Self {
        let [dx, dy, dz] = grid.spacing();
        ConformalCoefficients {
            grid: *grid,
            eps_area: DEFAULT_EPS_AREA,
            lx: Field3::filled(grid.dims(Component::Ex), dx),
            ly: Field3::filled(grid.dims(Component::Ey), dy),
            lz: Field3::filled(grid.dims(Component::Ez), dz),
            syz: Field3::filled(grid.dims(Component::Hx), dy * dz),
            sxz: Field3::filled(grid.dims(Component::Hy), dx * dz),
            sxy: Field3::filled(grid.dims(Component::Hz), dx * dy),
        }
    }

    /// Edge lengths for the E component along `axis`.
    pub fn length(&self, axis: Axis) -> &Field3 {
        match axis {
            Axis::X => &self.lx,
            Axis::Y => &self.ly,
            Axis::Z => &self.lz,
        }
    }

    pub fn length_mut(&mut self, axis: Axis) -> &mut Field3 {
        match axis {
            Axis::X => &mut self.lx,
            Axis::Y => &mut self.ly,
            Axis::Z => &mut self.lz,
        }
    }

    /// Face areas for the H component along `normal`.
    pub fn area(&self, normal: Axis) -> &Field3 {
        match normal {
            Axis::X => &self.syz,
            Axis::Y => &self.sxz,
            Axis::Z => &self.sxy,
        }
    }

    pub fn area_mut(&mut self, normal: Axis) -> &mut Field3 {
        match normal {
            Axis::X => &mut self.syz,
            Axis::Y => &mut self.sxz,
            Axis::Z => &mut self.sxy,
        }
    }

    /// Full (unobstructed) length of an edge along `axis`.
    pub fn full_length(&self, axis: Axis) -> f64 {
        self.grid.delta(axis)
    }

    /// Full (unobstructed) area of a face with normal `normal`.
    pub fn full_area(&self, normal: Axis) -> f64 {
        let n = normal.index();
        self.grid.delta(Axis::from_index((n + 1) % 3))
            * self.grid.delta(Axis::from_index((n + 2) % 3))
    }

    /// Node indices of the four edges bounding face `(i, j, k)` with normal
    /// `normal`, as `(edge axis, [i, j, k])` pairs.
    pub fn face_edges(normal: Axis, i: usize, j: usize, k: usize) -> [(Axis, [usize; 3]); 4] {
        let n = normal.index();
        let a = (n + 1) % 3;
        let b = (n + 2) % 3;
        let base = [i, j, k];
        let mut bump_a = base;
        bump_a[a] += 1;
        let mut bump_b = base;
        bump_b[b] += 1;
        [
            (Axis::from_index(a), base),
            (Axis::from_index(a), bump_b),
            (Axis::from_index(b), base),
            (Axis::from_index(b), bump_a),
        ]
    }

    /// Summary counts used by the mesh export report.
    pub fn stats(&self) -> CoefficientStats {
        let mut st = CoefficientStats::default();
        let rel = 1e-12;
        for axis in Axis::ALL {
            let full = self.full_length(axis);
            for &l in self.length(axis).as_slice() {
                if l <= 0.0 {
                    st.pec_edges += 1;
                } else if l < full * (1.0 - rel) {
                    st.partial_edges += 1;
                }
            }
        }
        st.min_area_fraction = f64::INFINITY;
        for normal in Axis::ALL {
            let full = self.full_area(normal);
            let s_arr = self.area(normal);
            let [ni, nj, nk] = s_arr.dims();
            for k in 0..nk {
                for j in 0..nj {
                    for i in 0..ni {
                        let s = s_arr.get(i, j, k);
                        if s <= 0.0 {
                            st.pec_faces += 1;
                            continue;
                        }
                        if s < full * (1.0 - rel) {
                            st.partial_faces += 1;
                        }
                        st.min_area_fraction = st.min_area_fraction.min(s / full);
                        let lmax = Self::face_edges(normal, i, j, k)
                            .iter()
                            .map(|(ax, [a, b, c])| self.length(*ax).get(*a, *b, *c))
                            .fold(0.0, f64::max);
                        st.max_l_over_s = st.max_l_over_s.max(lmax / s);
                    }
                }
            }
        }
        if !st.min_area_fraction.is_finite() {
            st.min_area_fraction = 0.0;
        }
        st
    }

    /// Checks the documented coefficient invariants.
    pub fn check_invariants(&self) -> Result<(), GeometryError> {
        let bad = |msg: String| Err(GeometryError::CoefficientFormat(msg));
        for axis in Axis::ALL {
            let full = self.full_length(axis);
            let expect = self.grid.dims(Component::electric(axis));
            if self.length(axis).dims() != expect {
                return bad(format!(
                    "l{axis} has dims {:?}, expected {expect:?}",
                    self.length(axis).dims()
                ));
            }
            if let Some(l) = self
                .length(axis)
                .as_slice()
                .iter()
                .find(|l| !(**l >= 0.0 && **l <= full * (1.0 + 1e-12)))
            {
                return bad(format!("l{axis} value {l} outside [0, {full}]"));
            }
        }
        for normal in Axis::ALL {
            let full = self.full_area(normal);
            let expect = self.grid.dims(Component::magnetic(normal));
            let s_arr = self.area(normal);
            if s_arr.dims() != expect {
                return bad(format!(
                    "S normal {normal} has dims {:?}, expected {expect:?}",
                    s_arr.dims()
                ));
            }
            let [ni, nj, nk] = expect;
            for k in 0..nk {
                for j in 0..nj {
                    for i in 0..ni {
                        let s = s_arr.get(i, j, k);
                        if !(s >= 0.0 && s <= full * (1.0 + 1e-12)) {
                            return bad(format!("S normal {normal} value {s} outside [0, {full}]"));
                        }
                        let edges = Self::face_edges(normal, i, j, k);
                        let lens = edges.map(|(ax, [a, b, c])| self.length(ax).get(a, b, c));
                        if s == 0.0 && lens.iter().any(|&l| l > 0.0) {
                            return bad(format!(
                                "face normal {normal} at ({i},{j},{k}) has S = 0 but an open bounding edge"
                            ));
                        }
                        if s > 0.0 && lens.iter().all(|&l| l == 0.0) {
                            return bad(format!(
                                "face normal {normal} at ({i},{j},{k}) is open but all bounding edges are closed"
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Partial/closed cell counts and the conditioning ratios of a map.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CoefficientStats {
    pub partial_edges: usize,
    pub partial_faces: usize,
    pub pec_edges: usize,
    pub pec_faces: usize,
    /// Smallest nonzero `S` as a fraction of its full face area.
    pub min_area_fraction: f64,
    /// Largest ratio of a bounding edge length to its face's open area (1/m).
    pub max_l_over_s: f64,
}

/// Extracts the conformal map of `scene` on `grid` and applies the
/// small-cell clamp: a face with `S < eps_area * full` (or `S = 0`) is
/// closed together with its four bounding edges, and any face whose four
/// edges all end up closed is closed too.
pub fn build_conformal_map(
    scene: &Scene,
    grid: &GridSpec,
    eps_area: f64,
) -> Result<ConformalCoefficients, GeometryError> {
    if !(0.0..0.5).contains(&eps_area) {
        return Err(GeometryError::InvalidShape(format!(
            "eps_area {eps_area} outside [0, 0.5)"
        )));
    }
    let mut map = ConformalCoefficients::free_space(grid);
    map.eps_area = eps_area;
    if scene.is_empty() {
        return Ok(map);
    }
    for axis in Axis::ALL {
        let comp = Component::electric(axis);
        let full = grid.delta(axis);
        let [ni, nj, nk] = grid.dims(comp);
        let out = map.length_mut(axis);
        for k in 0..nk {
            for j in 0..nj {
                for i in 0..ni {
                    let edge = Edge {
                        start: corner(grid, i, j, k),
                        axis,
                        length: full,
                    };
                    out.set(i, j, k, edge_free_length(scene, &edge));
                }
            }
        }
    }
    for normal in Axis::ALL {
        let comp = Component::magnetic(normal);
        let n = normal.index();
        let len_a = grid.delta(Axis::from_index((n + 1) % 3));
        let len_b = grid.delta(Axis::from_index((n + 2) % 3));
        let [ni, nj, nk] = grid.dims(comp);
        let out = map.area_mut(normal);
        for k in 0..nk {
            for j in 0..nj {
                for i in 0..ni {
                    let face = Face {
                        corner: corner(grid, i, j, k),
                        normal,
                        len_a,
                        len_b,
                    };
                    out.set(i, j, k, face_free_area(scene, &face));
                }
            }
        }
    }
    clamp_small_cells(&mut map);
    Ok(map)
}

fn corner(grid: &GridSpec, i: usize, j: usize, k: usize) -> Point {
    let [dx, dy, dz] = grid.spacing();
    [
        grid.origin[0] + i as f64 * dx,
        grid.origin[1] + j as f64 * dy,
        grid.origin[2] + k as f64 * dz,
    ]
}

fn clamp_small_cells(map: &mut ConformalCoefficients) {
    for normal in Axis::ALL {
        let thresh = map.eps_area * map.full_area(normal);
        let [ni, nj, nk] = map.area(normal).dims();
        for k in 0..nk {
            for j in 0..nj {
                for i in 0..ni {
                    let s = map.area(normal).get(i, j, k);
                    if s < thresh || s == 0.0 {
                        map.area_mut(normal).set(i, j, k, 0.0);
                        for (ax, [a, b, c]) in ConformalCoefficients::face_edges(normal, i, j, k) {
                            map.length_mut(ax).set(a, b, c, 0.0);
                        }
                    }
                }
            }
        }
    }
    // Closing edges never reopens anything, so one pass settles the rule.
    for normal in Axis::ALL {
        let [ni, nj, nk] = map.area(normal).dims();
        for k in 0..nk {
            for j in 0..nj {
                for i in 0..ni {
                    let all_closed = ConformalCoefficients::face_edges(normal, i, j, k)
                        .iter()
                        .all(|(ax, [a, b, c])| map.length(*ax).get(*a, *b, *c) == 0.0);
                    if all_closed {
                        map.area_mut(normal).set(i, j, k, 0.0);
                    }
                }
            }
        }
    }
}

const COEFF_MAGIC: &str = "clod-coefficients 1";
const ARRAY_NAMES: [&str; 6] = ["lx", "ly", "lz", "syz", "sxz", "sxy"];

/// Writes the text header (terminated by a line `end`) followed by the six
/// arrays `lx ly lz syz sxz sxy` as little-endian `f64`, x fastest.
pub fn write_coefficients<W: Write>(
    map: &ConformalCoefficients,
    mut w: W,
) -> Result<(), GeometryError> {
    let g = &map.grid;
    let mut header = String::new();
    let _ = writeln!(header, "{COEFF_MAGIC}");
    let _ = writeln!(header, "dims {} {} {}", g.nx, g.ny, g.nz);
    let _ = writeln!(header, "spacing {:e} {:e} {:e}", g.dx, g.dy, g.dz);
    let _ = writeln!(
        header,
        "origin {:e} {:e} {:e}",
        g.origin[0], g.origin[1], g.origin[2]
    );
    let _ = writeln!(header, "eps_area {:e}", map.eps_area);
    let _ = writeln!(header, "arrays {}", ARRAY_NAMES.join(" "));
    let _ = writeln!(header, "end");
    w.write_all(header.as_bytes())?;
    for arr in [&map.lx, &map.ly, &map.lz, &map.syz, &map.sxz, &map.sxy] {
        let mut buf = Vec::with_capacity(arr.len() * 8);
        for v in arr.as_slice() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

/// Reads the format produced by [`write_coefficients`].
pub fn read_coefficients<R: Read>(mut r: R) -> Result<ConformalCoefficients, GeometryError> {
    let fmt_err = |m: &str| GeometryError::CoefficientFormat(m.to_string());
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let marker = b"\nend\n";
    let pos = bytes
        .windows(marker.len())
        .position(|w| w == marker)
        .ok_or_else(|| fmt_err("missing header terminator"))?;
    let header = std::str::from_utf8(&bytes[..pos]).map_err(|_| fmt_err("header is not UTF-8"))?;
    let body = &bytes[pos + marker.len()..];

    let mut lines = header.lines();
    if lines.next() != Some(COEFF_MAGIC) {
        return Err(fmt_err("bad magic line"));
    }
    let mut dims = None;
    let mut spacing = None;
    let mut origin = None;
    let mut eps_area = None;
    for line in lines {
        let mut parts = line.split_whitespace();
        let key = parts.next().unwrap_or("");
        let vals: Vec<&str> = parts.collect();
        let floats = || -> Result<Vec<f64>, GeometryError> {
            vals.iter()
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|_| fmt_err(&format!("bad number in '{line}'")))
                })
                .collect()
        };
        match key {
            "dims" => {
                let d: Result<Vec<usize>, _> = vals.iter().map(|v| v.parse::<usize>()).collect();
                let d = d.map_err(|_| fmt_err("bad dims"))?;
                if d.len() != 3 {
                    return Err(fmt_err("dims needs 3 values"));
                }
                dims = Some([d[0], d[1], d[2]]);
            }
            "spacing" | "origin" => {
                let f = floats()?;
                if f.len() != 3 {
                    return Err(fmt_err(&format!("{key} needs 3 values")));
                }
                let v = [f[0], f[1], f[2]];
                if key == "spacing" {
                    spacing = Some(v);
                } else {
                    origin = Some(v);
                }
            }
            "eps_area" => eps_area = floats()?.first().copied(),
            "arrays" => {
                if vals != ARRAY_NAMES {
                    return Err(fmt_err("unexpected array list"));
                }
            }
            _ => return Err(fmt_err(&format!("unknown header key '{key}'"))),
        }
    }
    let (dims, spacing, origin, eps_area) = match (dims, spacing, origin, eps_area) {
        (Some(a), Some(b), Some(c), Some(d)) => (a, b, c, d),
        _ => return Err(fmt_err("incomplete header")),
    };
    let grid = GridSpec::new(dims, spacing, origin).map_err(|e| fmt_err(&e.to_string()))?;
    let comps = [
        Component::Ex,
        Component::Ey,
        Component::Ez,
        Component::Hx,
        Component::Hy,
        Component::Hz,
    ];
    let expected: usize = comps.iter().map(|c| grid.node_count(*c) * 8).sum();
    if body.len() != expected {
        return Err(fmt_err(&format!(
            "payload has {} bytes, expected {expected}",
            body.len()
        )));
    }
    let mut offset = 0;
    let mut arrays = comps.iter().map(|c| {
        let n = grid.node_count(*c);
        let data = body[offset..offset + n * 8]
            .chunks_exact(8)
            .map(|ch| f64::from_le_bytes(ch.try_into().expect("8-byte chunk")))
            .collect();
        offset += n * 8;
        Field3::from_vec(grid.dims(*c), data)
    });
    let mut next = || arrays.next().expect("six arrays");
    Ok(ConformalCoefficients {
        grid,
        eps_area,
        lx: next(),
        ly: next(),
        lz: next(),
        syz: next(),
        sxz: next(),
        sxy: next(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere_scene(center: Point, radius: f64) -> Scene {
        Scene::new(vec![Shape::Sphere { center, radius }]).unwrap()
    }

    #[test]
    fn edge_limits() {
        let e = Edge {
            start: [0.0; 3],
            axis: Axis::X,
            length: 1.0,
        };
        assert_eq!(edge_free_length(&Scene::empty(), &e), 1.0);
        assert_eq!(
            edge_free_length(&sphere_scene([0.5, 0.0, 0.0], 2.0), &e),
            0.0
        );
    }

    #[test]
    fn edge_cut_by_sphere() {
        // segment [0,1] on the x axis against a sphere centred on its far end
        let e = Edge {
            start: [0.0; 3],
            axis: Axis::X,
            length: 1.0,
        };
        let l = edge_free_length(&sphere_scene([1.0, 0.0, 0.0], 0.5), &e);
        assert!((l - 0.5).abs() < 2e-6, "{l}");
    }

    #[test]
    fn edge_chord_matches_analytic_intersection() {
        // off-axis chord: free length = L - 2*sqrt(r^2 - h^2)
        let (r, h) = (0.3, 0.17);
        let e = Edge {
            start: [0.0, h, 0.0],
            axis: Axis::X,
            length: 1.0,
        };
        let l = edge_free_length(&sphere_scene([0.5, 0.0, 0.0], r), &e);
        let oracle = 1.0 - 2.0 * (r * r - h * h).sqrt();
        assert!((l - oracle).abs() < 4e-6, "{l} vs {oracle}");
    }

    #[test]
    fn face_circle_cut() {
        let scene = Scene::new(vec![Shape::CylinderZ {
            center: [0.5, 0.5],
            radius: 0.5,
            zmin: -1.0,
            zmax: 1.0,
        }])
        .unwrap();
        let face = Face {
            corner: [0.0; 3],
            normal: Axis::Z,
            len_a: 1.0,
            len_b: 1.0,
        };
        let s = face_free_area(&scene, &face);
        let oracle = 1.0 - std::f64::consts::PI * 0.25;
        assert!(((s - oracle) / oracle).abs() < 1e-4, "{s} vs {oracle}");
    }

    #[test]
    fn face_limits() {
        let face = Face {
            corner: [0.0; 3],
            normal: Axis::X,
            len_a: 0.2,
            len_b: 0.3,
        };
        assert_eq!(face_free_area(&Scene::empty(), &face), 0.2 * 0.3);
        assert_eq!(
            face_free_area(&sphere_scene([0.0, 0.1, 0.1], 1.0), &face),
            0.0
        );
    }

    #[test]
    fn face_edges_layout() {
        // Hz face (i,j,k) is bounded by lx(i,j,k), lx(i,j+1,k), ly(i,j,k), ly(i+1,j,k)
        let e = ConformalCoefficients::face_edges(Axis::Z, 2, 3, 4);
        assert_eq!(e[0], (Axis::X, [2, 3, 4]));
        assert_eq!(e[1], (Axis::X, [2, 4, 4]));
        assert_eq!(e[2], (Axis::Y, [2, 3, 4]));
        assert_eq!(e[3], (Axis::Y, [3, 3, 4]));
        // Hx face bounded by ly(i,j,k), ly(i,j,k+1), lz(i,j,k), lz(i,j+1,k)
        let e = ConformalCoefficients::face_edges(Axis::X, 1, 1, 1);
        assert_eq!(e[0], (Axis::Y, [1, 1, 1]));
        assert_eq!(e[1], (Axis::Y, [1, 1, 2]));
        assert_eq!(e[2], (Axis::Z, [1, 1, 1]));
        assert_eq!(e[3], (Axis::Z, [1, 2, 1]));
    }

    #[test]
    fn map_limits_and_round_trip() {
        let grid = GridSpec::uniform([3, 2, 2], 0.5).unwrap();
        let empty = build_conformal_map(&Scene::empty(), &grid, DEFAULT_EPS_AREA).unwrap();
        assert_eq!(empty, ConformalCoefficients::free_space(&grid));
        let all = Scene::new(vec![Shape::Box {
            min: [-1.0; 3],
            max: [5.0; 3],
        }])
        .unwrap();
        let closed = build_conformal_map(&all, &grid, DEFAULT_EPS_AREA).unwrap();
        for a in Axis::ALL {
            assert!(closed.length(a).as_slice().iter().all(|&v| v == 0.0));
            assert!(closed.area(a).as_slice().iter().all(|&v| v == 0.0));
        }
        let scene = sphere_scene([0.7, 0.5, 0.4], 0.45);
        let map = build_conformal_map(&scene, &grid, DEFAULT_EPS_AREA).unwrap();
        map.check_invariants().unwrap();
        let mut buf = Vec::new();
        write_coefficients(&map, &mut buf).unwrap();
        let back = read_coefficients(buf.as_slice()).unwrap();
        assert_eq!(back, map);
    }
}
