//! Staircase PEC classification for the non-conformal schemes.

use crate::grid::{Axis, Component, GridSpec};

use super::{point_inside, ConformalCoefficients, Scene};

/// PEC flags per E-edge (aligned with Ex/Ey/Ez) and per H-face (aligned
/// with Hx/Hy/Hz). Stored x-fastest like the field arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct StaircaseMap {
    pub grid: GridSpec,
    edges: [Vec<bool>; 3],
    faces: [Vec<bool>; 3],
}

impl StaircaseMap {
    pub fn empty(grid: &GridSpec) -> Self {
        StaircaseMap {
            grid: *grid,
            edges: Axis::ALL.map(|a| vec![false; grid.node_count(Component::electric(a))]),
            faces: Axis::ALL.map(|a| vec![false; grid.node_count(Component::magnetic(a))]),
        }
    }

    /// Flat flags of the edges along `axis`.
    pub fn edge_flags(&self, axis: Axis) -> &[bool] {
        &self.edges[axis.index()]
    }

    /// Flat flags of the faces with normal `normal`.
    pub fn face_flags(&self, normal: Axis) -> &[bool] {
        &self.faces[normal.index()]
    }

    pub fn edge_is_pec(&self, axis: Axis, i: usize, j: usize, k: usize) -> bool {
        let [ni, nj, _] = self.grid.dims(Component::electric(axis));
        self.edges[axis.index()][i + ni * (j + nj * k)]
    }

    pub fn face_is_pec(&self, normal: Axis, i: usize, j: usize, k: usize) -> bool {
        let [ni, nj, _] = self.grid.dims(Component::magnetic(normal));
        self.faces[normal.index()][i + ni * (j + nj * k)]
    }

    pub fn pec_edge_count(&self) -> usize {
        self.edges.iter().flatten().filter(|f| **f).count()
    }
}

/// An E-edge is PEC iff its midpoint is inside the scene; an H-face is
/// PEC iff its four bounding edges are.
pub fn build_staircase_map(scene: &Scene, grid: &GridSpec) -> StaircaseMap {
    let mut map = StaircaseMap::empty(grid);
    if scene.is_empty() {
        return map;
    }
    for axis in Axis::ALL {
        let comp = Component::electric(axis);
        let [ni, nj, nk] = grid.dims(comp);
        let flags = &mut map.edges[axis.index()];
        for k in 0..nk {
            for j in 0..nj {
                for i in 0..ni {
                    let p = grid.node_position(comp, i, j, k);
                    flags[i + ni * (j + nj * k)] = point_inside(scene, &p);
                }
            }
        }
    }
    for normal in Axis::ALL {
        let [ni, nj, nk] = grid.dims(Component::magnetic(normal));
        for k in 0..nk {
            for j in 0..nj {
                for i in 0..ni {
                    let closed = ConformalCoefficients::face_edges(normal, i, j, k)
                        .iter()
                        .all(|(ax, [a, b, c])| map.edge_is_pec(*ax, *a, *b, *c));
                    map.faces[normal.index()][i + ni * (j + nj * k)] = closed;
                }
            }
        }
    }
    map
}
