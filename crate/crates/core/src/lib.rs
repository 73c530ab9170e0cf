//! Time-domain Maxwell solvers on a uniform Yee grid.
//!
//! Four schemes share one field layout: explicit FDTD and conformal FDTD
//! (CFDTD), and the split-step implicit LOD-FDTD and its conformal variant
//! (CLOD). The conformal schemes weight the curl with the free edge lengths
//! and face areas of cells cut by curved PEC surfaces.

pub mod boundaries;
pub mod engines;
pub mod geometry;
pub mod grid;
pub mod sources;
pub mod stability;
pub mod tridiag;

pub use grid::{
    cfl_max_dt, node_coords, node_index, steps_for_duration, Axis, Component, Field3, FieldState,
    GridError, GridSpec, MediumParams, Timebase, EPS0, MU0,
};
