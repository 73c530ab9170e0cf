//! PEC scene description and extraction of the per-edge / per-face
//! coefficients used by the conformal and staircase schemes.

mod conformal;
mod mesh;
mod staircase;
pub mod stl;

use std::sync::Arc;

use thiserror::Error;

pub use conformal::{
    build_conformal_map, edge_free_length, face_free_area, read_coefficients, write_coefficients,
    CoefficientStats, ConformalCoefficients, Edge, Face, DEFAULT_EPS_AREA,
};
pub use mesh::{box_mesh, TriangleMesh, WELD_TOLERANCE};
pub use staircase::{build_staircase_map, StaircaseMap};

pub type Point = [f64; 3];

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("triangle mesh is not watertight: edge ({0}, {1}) is shared by {2} triangles")]
    NotWatertight(usize, usize, usize),
    #[error("triangle mesh is empty")]
    EmptyMesh,
    #[error("triangle {0} references missing vertex {1}")]
    BadIndex(usize, usize),
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("STL parse error: {0}")]
    Stl(String),
    #[error("coefficient file error: {0}")]
    CoefficientFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point,
    pub max: Point,
}

impl Aabb {
    pub fn intersects(&self, other: &Aabb) -> bool {
        (0..3).all(|a| self.min[a] <= other.max[a] && other.min[a] <= self.max[a])
    }

    pub fn contains(&self, p: &Point) -> bool {
        (0..3).all(|a| self.min[a] <= p[a] && p[a] <= self.max[a])
    }

    pub fn from_points(a: Point, b: Point) -> Aabb {
        Aabb {
            min: [0, 1, 2].map(|i| a[i].min(b[i])),
            max: [0, 1, 2].map(|i| a[i].max(b[i])),
        }
    }
}

/// A closed PEC solid. Points on the surface count as inside.
#[derive(Debug, Clone)]
pub enum Shape {
    Box {
        min: Point,
        max: Point,
    },
    Sphere {
        center: Point,
        radius: f64,
    },
    /// Circular cylinder with its axis parallel to `z`.
    CylinderZ {
        center: [f64; 2],
        radius: f64,
        zmin: f64,
        zmax: f64,
    },
    TriangleMesh(Arc<TriangleMesh>),
}

impl Shape {
    pub fn validate(&self) -> Result<(), GeometryError> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            Shape::Box { min, max } => {
                if !finite(min) || !finite(max) || (0..3).any(|a| min[a] > max[a]) {
                    return Err(GeometryError::InvalidShape(format!(
                        "box corners {min:?} / {max:?}"
                    )));
                }
            }
            Shape::Sphere { center, radius } => {
                if !finite(center) || !(radius.is_finite() && *radius > 0.0) {
                    return Err(GeometryError::InvalidShape(format!(
                        "sphere radius {radius}"
                    )));
                }
            }
            Shape::CylinderZ {
                center,
                radius,
                zmin,
                zmax,
            } => {
                if !finite(center) || !(radius.is_finite() && *radius > 0.0) || !(zmin <= zmax) {
                    return Err(GeometryError::InvalidShape(format!(
                        "cylinder radius {radius}, z range [{zmin}, {zmax}]"
                    )));
                }
            }
            Shape::TriangleMesh(_) => {}
        }
        Ok(())
    }

    pub fn contains(&self, p: &Point) -> bool {
        match self {
            Shape::Box { min, max } => (0..3).all(|a| min[a] <= p[a] && p[a] <= max[a]),
            Shape::Sphere { center, radius } => {
                let d2: f64 = (0..3).map(|a| (p[a] - center[a]).powi(2)).sum();
                d2 <= radius * radius
            }
            Shape::CylinderZ {
                center,
                radius,
                zmin,
                zmax,
            } => {
                let d2 = (p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2);
                d2 <= radius * radius && *zmin <= p[2] && p[2] <= *zmax
            }
            Shape::TriangleMesh(mesh) => mesh.contains(p),
        }
    }

    pub fn bounding_box(&self) -> Aabb {
        match self {
            Shape::Box { min, max } => Aabb {
                min: *min,
                max: *max,
            },
            Shape::Sphere { center, radius } => Aabb {
                min: center.map(|c| c - radius),
                max: center.map(|c| c + radius),
            },
            Shape::CylinderZ {
                center,
                radius,
                zmin,
                zmax,
            } => Aabb {
                min: [center[0] - radius, center[1] - radius, *zmin],
                max: [center[0] + radius, center[1] + radius, *zmax],
            },
            Shape::TriangleMesh(mesh) => mesh.bounding_box(),
        }
    }

    /// Conservative overlap test: `false` guarantees the shape and `region`
    /// share no point.
    pub fn may_touch(&self, region: &Aabb) -> bool {
        if !self.bounding_box().intersects(region) {
            return false;
        }
        let dist2 = |p: &[f64], lo: &[f64], hi: &[f64]| -> f64 {
            p.iter()
                .zip(lo.iter().zip(hi))
                .map(|(x, (a, b))| (a - x).max(0.0).max(x - b).powi(2))
                .sum()
        };
        match self {
            Shape::Sphere { center, radius } => {
                dist2(center, &region.min, &region.max) <= radius * radius
            }
            Shape::CylinderZ { center, radius, .. } => {
                dist2(center, &region.min[..2], &region.max[..2]) <= radius * radius
            }
            _ => true,
        }
    }

    /// Whether the solid is convex, so that containment of a segment's or
    /// rectangle's corners implies containment of the whole primitive.
    pub fn is_convex(&self) -> bool {
        !matches!(self, Shape::TriangleMesh(_))
    }
}

/// Union of PEC shapes.
#[derive(Debug, Clone, Default)]
pub struct Scene {
    shapes: Vec<Shape>,
}

impl Scene {
    pub fn new(shapes: Vec<Shape>) -> Result<Self, GeometryError> {
        for s in &shapes {
            s.validate()?;
        }
        Ok(Scene { shapes })
    }

    pub fn empty() -> Self {
        Scene { shapes: Vec::new() }
    }

    pub fn shapes(&self) -> &[Shape] {
        &self.shapes
    }

    pub fn is_empty(&self) -> bool {
        self.shapes.is_empty()
    }

    pub fn push(&mut self, shape: Shape) -> Result<(), GeometryError> {
        shape.validate()?;
        self.shapes.push(shape);
        Ok(())
    }

    /// Shapes whose bounding box touches `region`.
    pub(crate) fn candidates<'a>(
        &'a self,
        region: &'a Aabb,
    ) -> impl Iterator<Item = &'a Shape> + 'a {
        self.shapes.iter().filter(move |s| s.may_touch(region))
    }
}

/// True iff `p` is inside (or on the surface of) any shape of the scene.
pub fn point_inside(scene: &Scene, p: &Point) -> bool {
    scene.shapes.iter().any(|s| s.contains(p))
}
