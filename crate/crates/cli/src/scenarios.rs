//! Bundled scenario files.

use std::io;
use std::path::Path;

use clod_core::geometry::stl::to_ascii;
use clod_core::geometry::{box_mesh, Point, TriangleMesh};

pub struct Scenario {
    pub name: &'static str,
    pub file: &'static str,
    pub text: &'static str,
}

macro_rules! scenario {
    ($name:literal) => {
        Scenario {
            name: $name,
            file: concat!($name, ".cfg"),
            text: include_str!(concat!("../scenarios/", $name, ".cfg")),
        }
    };
}

pub const SCENARIOS: &[Scenario] = &[
    scenario!("cavity_cylinder"),
    scenario!("cavity_cylinder_fine"),
    scenario!("stability_clod"),
    scenario!("stability_cfdtd"),
    scenario!("stability_timedomain"),
    scenario!("cfdtd_blowup"),
    scenario!("missile_desk"),
];

pub const MISSILE_STL: &str = "missile_desk.stl";

impl Scenario {
    /// The `description = "..."` line of the file.
    pub fn description(&self) -> &'static str {
        self.text
            .lines()
            .find_map(|l| l.strip_prefix("description = "))
            .map(|d| d.trim_matches('"'))
            .unwrap_or("")
    }
}

pub fn find(name: &str) -> Option<&'static Scenario> {
    let stem = name.strip_suffix(".cfg").unwrap_or(name);
    SCENARIOS.iter().find(|s| s.name == stem)
}

/// Writes every scenario plus the missile mesh into `dir`.
pub fn write_all(dir: &Path) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for s in SCENARIOS {
        std::fs::write(dir.join(s.file), s.text)?;
    }
    std::fs::write(
        dir.join(MISSILE_STL),
        to_ascii(&missile_mesh(), "missile_desk"),
    )
}

/// Missile-like body along `x`: a 16-sided prism with a conical nose and
/// four tail fins, as disjoint closed shells. The fins sit flush on flat
/// faces of the prism.
pub fn missile_mesh() -> TriangleMesh {
    let (x_tail, x_shoulder, x_tip) = (0.4, 1.5, 1.8);
    let (cy, cz) = (0.6, 0.6);
    let radius = 0.08;
    let sides = 16usize;
    let step = std::f64::consts::TAU / sides as f64;

    let mut v: Vec<Point> = Vec::new();
    let mut t: Vec<[usize; 3]> = Vec::new();
    // corners at half-step angles so that faces point along ±y and ±z
    let ring = |x: f64| -> Vec<Point> {
        (0..sides)
            .map(|k| {
                let a = (k as f64 + 0.5) * step;
                [x, cy + radius * a.cos(), cz + radius * a.sin()]
            })
            .collect()
    };
    v.extend(ring(x_tail));
    v.extend(ring(x_shoulder));
    let tail_c = v.len();
    v.push([x_tail, cy, cz]);
    let tip = v.len();
    v.push([x_tip, cy, cz]);
    for k in 0..sides {
        let k1 = (k + 1) % sides;
        let (a0, a1, b0, b1) = (k, k1, sides + k, sides + k1);
        t.push([a0, a1, b1]);
        t.push([a0, b1, b0]);
        t.push([tail_c, a1, a0]);
        t.push([b0, b1, tip]);
    }

    let apothem = radius * (step / 2.0).cos();
    let (span, thick, chord) = (0.12, 0.016, 0.24);
    let fins = [
        (
            [x_tail, cy - thick / 2.0, cz + apothem],
            [x_tail + chord, cy + thick / 2.0, cz + apothem + span],
        ),
        (
            [x_tail, cy - thick / 2.0, cz - apothem - span],
            [x_tail + chord, cy + thick / 2.0, cz - apothem],
        ),
        (
            [x_tail, cy + apothem, cz - thick / 2.0],
            [x_tail + chord, cy + apothem + span, cz + thick / 2.0],
        ),
        (
            [x_tail, cy - apothem - span, cz - thick / 2.0],
            [x_tail + chord, cy - apothem, cz + thick / 2.0],
        ),
    ];
    for (min, max) in fins {
        let b = box_mesh(min, max);
        let base = v.len();
        v.extend_from_slice(b.vertices());
        t.extend(b.triangles().iter().map(|tri| tri.map(|i| i + base)));
    }
    TriangleMesh::new(v, t).expect("missile shells are closed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use clod_core::geometry::stl::parse_stl;

    #[test]
    fn missile_is_closed_and_solid() {
        let m = missile_mesh();
        assert!(m.contains(&[1.0, 0.6, 0.6]));
        assert!(m.contains(&[1.7, 0.6, 0.6]));
        assert!(!m.contains(&[1.7, 0.6, 0.6 + 0.079]));
        // inside a fin, outside the body
        assert!(m.contains(&[0.5, 0.6, 0.6 + 0.15]));
        assert!(!m.contains(&[0.7, 0.6, 0.6 + 0.15]));
        assert!(!m.contains(&[1.9, 0.6, 0.6]));
    }

    #[test]
    fn bundled_stl_matches_generator() {
        let text = include_str!("../scenarios/missile_desk.stl");
        let parsed = TriangleMesh::from_soup(&parse_stl(text.as_bytes()).unwrap()).unwrap();
        let fresh = missile_mesh();
        assert_eq!(parsed.triangles().len(), fresh.triangles().len());
        for (ta, tb) in parsed.triangles().iter().zip(fresh.triangles()) {
            for c in 0..3 {
                let (a, b) = (parsed.vertices()[ta[c]], fresh.vertices()[tb[c]]);
                for k in 0..3 {
                    assert!((a[k] - b[k]).abs() < 1e-12);
                }
            }
        }
    }
}
