//! Uniform staggered Yee grid, field storage and the CFL time-step limit.
//!
//! Every field component lives in its own flat buffer with `x` varying
//! fastest, then `y`, then `z`. Component node sets follow the usual Yee
//! staggering on a grid of `nx × ny × nz` cells:
//!
//! | component | position            | node counts            |
//! |-----------|---------------------|------------------------|
//! | `Ex`      | `(i+½, j, k)`       | `nx, ny+1, nz+1`       |
//! | `Ey`      | `(i, j+½, k)`       | `nx+1, ny, nz+1`       |
//! | `Ez`      | `(i, j, k+½)`       | `nx+1, ny+1, nz`       |
//! | `Hx`      | `(i, j+½, k+½)`     | `nx+1, ny, nz`         |
//! | `Hy`      | `(i+½, j, k+½)`     | `nx, ny+1, nz`         |
//! | `Hz`      | `(i+½, j+½, k)`     | `nx, ny, nz+1`         |

use std::f64::consts::PI;
use std::fmt;

use thiserror::Error;

/// Vacuum permittivity (F/m).
pub const EPS0: f64 = 8.854_187_812_8e-12;
/// Vacuum permeability (H/m).
pub const MU0: f64 = 4.0 * PI * 1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("cell counts must be at least 1, got ({0}, {1}, {2})")]
    EmptyGrid(usize, usize, usize),
    #[error("cell sizes must be positive and finite, got ({0}, {1}, {2})")]
    BadSpacing(f64, f64, f64),
    #[error("medium parameters must be positive and finite (epsilon = {0}, mu = {1})")]
    BadMedium(f64, f64),
    #[error("index ({i}, {j}, {k}) out of bounds for {component} with dims {dims:?}")]
    OutOfBounds {
        component: Component,
        i: usize,
        j: usize,
        k: usize,
        dims: [usize; 3],
    },
    #[error("invalid timebase: {0}")]
    BadTimebase(String),
}

/// Cartesian axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn from_index(i: usize) -> Axis {
        match i {
            0 => Axis::X,
            1 => Axis::Y,
            2 => Axis::Z,
            _ => panic!("axis index {i} out of range"),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

/// One of the six staggered field components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Component {
    Ex,
    Ey,
    Ez,
    Hx,
    Hy,
    Hz,
}

impl Component {
    /// Packing order used everywhere a full state is flattened.
    pub const ALL: [Component; 6] = [
        Component::Ex,
        Component::Ey,
        Component::Ez,
        Component::Hx,
        Component::Hy,
        Component::Hz,
    ];

    pub fn is_electric(self) -> bool {
        matches!(self, Component::Ex | Component::Ey | Component::Ez)
    }

    /// Field direction.
    pub fn axis(self) -> Axis {
        match self {
            Component::Ex | Component::Hx => Axis::X,
            Component::Ey | Component::Hy => Axis::Y,
            Component::Ez | Component::Hz => Axis::Z,
        }
    }

    pub fn electric(axis: Axis) -> Component {
        match axis {
            Axis::X => Component::Ex,
            Axis::Y => Component::Ey,
            Axis::Z => Component::Ez,
        }
    }

    pub fn magnetic(axis: Axis) -> Component {
        match axis {
            Axis::X => Component::Hx,
            Axis::Y => Component::Hy,
            Axis::Z => Component::Hz,
        }
    }

    /// Half-cell offsets of the node positions, per axis (`true` = `+½`).
    pub fn half_offsets(self) -> [bool; 3] {
        match self {
            Component::Ex => [true, false, false],
            Component::Ey => [false, true, false],
            Component::Ez => [false, false, true],
            Component::Hx => [false, true, true],
            Component::Hy => [true, false, true],
            Component::Hz => [true, true, false],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Component::Ex => "Ex",
            Component::Ey => "Ey",
            Component::Ez => "Ez",
            Component::Hx => "Hx",
            Component::Hy => "Hy",
            Component::Hz => "Hz",
        }
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Component {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ex" => Ok(Component::Ex),
            "ey" => Ok(Component::Ey),
            "ez" => Ok(Component::Ez),
            "hx" => Ok(Component::Hx),
            "hy" => Ok(Component::Hy),
            "hz" => Ok(Component::Hz),
            other => Err(format!("unknown field component '{other}'")),
        }
    }
}

/// Uniform Cartesian grid of `nx × ny × nz` cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
    pub origin: [f64; 3],
}

impl GridSpec {
    pub fn new(cells: [usize; 3], spacing: [f64; 3], origin: [f64; 3]) -> Result<Self, GridError> {
        let [nx, ny, nz] = cells;
        let [dx, dy, dz] = spacing;
        if nx == 0 || ny == 0 || nz == 0 {
            return Err(GridError::EmptyGrid(nx, ny, nz));
        }
        if !spacing.iter().all(|d| d.is_finite() && *d > 0.0) {
            return Err(GridError::BadSpacing(dx, dy, dz));
        }
        Ok(GridSpec {
            nx,
            ny,
            nz,
            dx,
            dy,
            dz,
            origin,
        })
    }

    /// Cubic cells of edge `delta`, origin at zero.
    pub fn uniform(cells: [usize; 3], delta: f64) -> Result<Self, GridError> {
        Self::new(cells, [delta; 3], [0.0; 3])
    }

    pub fn cells(&self) -> [usize; 3] {
        [self.nx, self.ny, self.nz]
    }

    pub fn spacing(&self) -> [f64; 3] {
        [self.dx, self.dy, self.dz]
    }

    pub fn delta(&self, axis: Axis) -> f64 {
        self.spacing()[axis.index()]
    }

    /// Physical extent of the domain along each axis.
    pub fn extent(&self) -> [f64; 3] {
        [
            self.nx as f64 * self.dx,
            self.ny as f64 * self.dy,
            self.nz as f64 * self.dz,
        ]
    }

    /// Node counts of `component`.
    pub fn dims(&self, component: Component) -> [usize; 3] {
        let off = component.half_offsets();
        let cells = self.cells();
        [0, 1, 2].map(|a| if off[a] { cells[a] } else { cells[a] + 1 })
    }

    pub fn node_count(&self, component: Component) -> usize {
        self.dims(component).iter().product()
    }

    /// Sum of the node counts of all six components.
    pub fn total_nodes(&self) -> usize {
        Component::ALL.iter().map(|&c| self.node_count(c)).sum()
    }

    /// Physical coordinates of node `(i, j, k)` of `component`.
    pub fn node_position(&self, component: Component, i: usize, j: usize, k: usize) -> [f64; 3] {
        let off = component.half_offsets();
        let idx = [i, j, k];
        let sp = self.spacing();
        [0, 1, 2].map(|a| {
            let shift = if off[a] { 0.5 } else { 0.0 };
            self.origin[a] + (idx[a] as f64 + shift) * sp[a]
        })
    }
}

/// Flat offset of node `(i, j, k)` in the buffer of `component` (x fastest).
pub fn node_index(
    component: Component,
    i: usize,
    j: usize,
    k: usize,
    grid: &GridSpec,
) -> Result<usize, GridError> {
    let dims = grid.dims(component);
    if i >= dims[0] || j >= dims[1] || k >= dims[2] {
        return Err(GridError::OutOfBounds {
            component,
            i,
            j,
            k,
            dims,
        });
    }
    Ok(i + dims[0] * (j + dims[1] * k))
}

/// Inverse of [`node_index`].
pub fn node_coords(
    component: Component,
    offset: usize,
    grid: &GridSpec,
) -> Result<[usize; 3], GridError> {
    let dims = grid.dims(component);
    let total = dims[0] * dims[1] * dims[2];
    if offset >= total {
        return Err(GridError::OutOfBounds {
            component,
            i: offset,
            j: 0,
            k: 0,
            dims,
        });
    }
    let i = offset % dims[0];
    let j = (offset / dims[0]) % dims[1];
    let k = offset / (dims[0] * dims[1]);
    Ok([i, j, k])
}

/// Linear, lossless, isotropic medium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MediumParams {
    pub epsilon: f64,
    pub mu: f64,
}

impl MediumParams {
    pub fn new(epsilon: f64, mu: f64) -> Result<Self, GridError> {
        if !(epsilon.is_finite() && epsilon > 0.0 && mu.is_finite() && mu > 0.0) {
            return Err(GridError::BadMedium(epsilon, mu));
        }
        Ok(MediumParams { epsilon, mu })
    }

    pub fn vacuum() -> Self {
        MediumParams {
            epsilon: EPS0,
            mu: MU0,
        }
    }

    /// Wave speed `1/sqrt(epsilon·mu)`.
    pub fn c(&self) -> f64 {
        1.0 / (self.epsilon * self.mu).sqrt()
    }

    pub fn relative_permittivity(&self) -> f64 {
        self.epsilon / EPS0
    }
}

impl Default for MediumParams {
    fn default() -> Self {
        Self::vacuum()
    }
}

/// Largest stable explicit Yee time step, `1 / (c·sqrt(dx⁻² + dy⁻² + dz⁻²))`.
pub fn cfl_max_dt(grid: &GridSpec, medium: &MediumParams) -> f64 {
    let s = grid.dx.powi(-2) + grid.dy.powi(-2) + grid.dz.powi(-2);
    1.0 / (medium.c() * s.sqrt())
}

/// Time step, its ratio to the CFL limit, and the number of steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timebase {
    pub dt: f64,
    pub cfln: f64,
    pub n_steps: usize,
}

impl Timebase {
    pub fn from_cfln(
        grid: &GridSpec,
        medium: &MediumParams,
        cfln: f64,
        n_steps: usize,
    ) -> Result<Self, GridError> {
        if !(cfln.is_finite() && cfln > 0.0) {
            return Err(GridError::BadTimebase(format!(
                "cfln must be positive, got {cfln}"
            )));
        }
        Ok(Timebase {
            dt: cfln * cfl_max_dt(grid, medium),
            cfln,
            n_steps,
        })
    }

    /// Steps needed to cover `duration`: `floor(duration/dt)`, with a
    /// relative slack of 1e-9 so exact multiples are not lost to rounding.
    pub fn for_duration(
        grid: &GridSpec,
        medium: &MediumParams,
        cfln: f64,
        duration: f64,
    ) -> Result<Self, GridError> {
        if !(duration.is_finite() && duration >= 0.0) {
            return Err(GridError::BadTimebase(format!(
                "duration must be non-negative, got {duration}"
            )));
        }
        let mut tb = Self::from_cfln(grid, medium, cfln, 0)?;
        tb.n_steps = steps_for_duration(duration, tb.dt);
        Ok(tb)
    }

    /// Explicit time step; the CFL ratio is derived from it.
    pub fn from_dt(
        grid: &GridSpec,
        medium: &MediumParams,
        dt: f64,
        n_steps: usize,
    ) -> Result<Self, GridError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(GridError::BadTimebase(format!(
                "dt must be positive, got {dt}"
            )));
        }
        Ok(Timebase {
            dt,
            cfln: dt / cfl_max_dt(grid, medium),
            n_steps,
        })
    }

    /// Simulated time at step `n`, computed as `n·dt` (no accumulation).
    pub fn time_at(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }
}

pub fn steps_for_duration(duration: f64, dt: f64) -> usize {
    (duration / dt * (1.0 + 1e-9)).floor() as usize
}

/// One component's values on its staggered node set.
#[derive(Debug, Clone, PartialEq)]
pub struct Field3 {
    dims: [usize; 3],
    data: Vec<f64>,
}

impl Field3 {
    pub fn zeros(dims: [usize; 3]) -> Self {
        Self::filled(dims, 0.0)
    }

    pub fn filled(dims: [usize; 3], value: f64) -> Self {
        Field3 {
            dims,
            data: vec![value; dims[0] * dims[1] * dims[2]],
        }
    }

    pub fn from_vec(dims: [usize; 3], data: Vec<f64>) -> Self {
        assert_eq!(
            data.len(),
            dims[0] * dims[1] * dims[2],
            "buffer/dims mismatch"
        );
        Field3 { dims, data }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        debug_assert!(i < self.dims[0] && j < self.dims[1] && k < self.dims[2]);
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.idx(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let n = self.idx(i, j, k);
        self.data[n] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn fill(&mut self, value: f64) {
        self.data.iter_mut().for_each(|v| *v = value);
    }
}

/// The six field arrays of one time level.
///
/// For the leapfrog schemes the magnetic arrays hold `H^{n-½}` alongside
/// `E^n`; the split-step schemes keep both at `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    grid: GridSpec,
    pub ex: Field3,
    pub ey: Field3,
    pub ez: Field3,
    pub hx: Field3,
    pub hy: Field3,
    pub hz: Field3,
}

impl FieldState {
    pub fn zeros(grid: &GridSpec) -> Self {
        FieldState {
            grid: *grid,
            ex: Field3::zeros(grid.dims(Component::Ex)),
            ey: Field3::zeros(grid.dims(Component::Ey)),
            ez: Field3::zeros(grid.dims(Component::Ez)),
            hx: Field3::zeros(grid.dims(Component::Hx)),
            hy: Field3::zeros(grid.dims(Component::Hy)),
            hz: Field3::zeros(grid.dims(Component::Hz)),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn component(&self, c: Component) -> &Field3 {
        match c {
            Component::Ex => &self.ex,
            Component::Ey => &self.ey,
            Component::Ez => &self.ez,
            Component::Hx => &self.hx,
            Component::Hy => &self.hy,
            Component::Hz => &self.hz,
        }
    }

    pub fn component_mut(&mut self, c: Component) -> &mut Field3 {
        match c {
            Component::Ex => &mut self.ex,
            Component::Ey => &mut self.ey,
            Component::Ez => &mut self.ez,
            Component::Hx => &mut self.hx,
            Component::Hy => &mut self.hy,
            Component::Hz => &mut self.hz,
        }
    }

    pub fn max_abs_e(&self) -> f64 {
        self.ex
            .max_abs()
            .max(self.ey.max_abs())
            .max(self.ez.max_abs())
    }

    pub fn max_abs_h(&self) -> f64 {
        self.hx
            .max_abs()
            .max(self.hy.max_abs())
            .max(self.hz.max_abs())
    }

    pub fn all_finite(&self) -> bool {
        Component::ALL
            .iter()
            .all(|&c| self.component(c).all_finite())
    }

    /// Packs `[Ex, Ey, Ez, Hx, Hy, Hz]` into one vector.
    pub fn pack(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.grid.total_nodes());
        for c in Component::ALL {
            out.extend_from_slice(self.component(c).as_slice());
        }
        out
    }

    /// Inverse of [`FieldState::pack`].
    pub fn unpack(grid: &GridSpec, packed: &[f64]) -> Self {
        assert_eq!(packed.len(), grid.total_nodes(), "packed length mismatch");
        let mut state = FieldState::zeros(grid);
        let mut offset = 0;
        for c in Component::ALL {
            let f = state.component_mut(c);
            let n = f.len();
            f.as_mut_slice()
                .copy_from_slice(&packed[offset..offset + n]);
            offset += n;
        }
        state
    }

    /// Offset of `component`'s block inside the packed vector.
    pub fn block_offset(grid: &GridSpec, component: Component) -> usize {
        Component::ALL
            .iter()
            .take_while(|&&c| c != component)
            .map(|&c| grid.node_count(c))
            .sum()
    }

    pub fn scale(&mut self, s: f64) {
        for c in Component::ALL {
            self.component_mut(c)
                .as_mut_slice()
                .iter_mut()
                .for_each(|v| *v *= s);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cfl_limit_matches_tabulated_coarse_and_fine_values() {
        let vac = MediumParams::vacuum();
        let coarse = GridSpec::uniform([1, 1, 1], 0.1).unwrap();
        let fine = GridSpec::uniform([1, 1, 1], 0.025).unwrap();
        let dt_c = cfl_max_dt(&coarse, &vac);
        let dt_f = cfl_max_dt(&fine, &vac);
        // 0.19245 / 0.04811 ns assume c = 3e8 m/s; with c from eps0 and mu0
        // the limits are 0.07% larger.
        assert!((dt_c * 1e9 / 0.19245 - 1.0).abs() < 1e-3, "{dt_c}");
        assert!((dt_f * 1e9 / 0.04811 - 1.0).abs() < 1e-3, "{dt_f}");
        assert!((dt_c * 1e9 / 0.193 - 1.0).abs() < 5e-3);
        assert!((dt_f * 1e9 / 0.048 - 1.0).abs() < 5e-3);
        let exact = 0.1 / (vac.c() * 3f64.sqrt());
        assert!((dt_c - exact).abs() <= 1e-15 * exact);
    }

    #[test]
    fn cfl_limit_for_cubic_cells() {
        let vac = MediumParams::vacuum();
        for delta in [1e-3, 0.05, 0.3] {
            let g = GridSpec::uniform([2, 3, 4], delta).unwrap();
            let expect = delta / (vac.c() * 3f64.sqrt());
            assert!((cfl_max_dt(&g, &vac) - expect).abs() <= 1e-15 * expect);
        }
    }

    #[test]
    fn cfl_limit_monotone_in_each_spacing() {
        let vac = MediumParams::vacuum();
        let base = [0.1, 0.2, 0.05];
        for a in 0..3 {
            let mut prev = 0.0;
            for s in [0.5, 1.0, 1.5, 2.0, 4.0] {
                let mut sp = base;
                sp[a] *= s;
                let g = GridSpec::new([1, 1, 1], sp, [0.0; 3]).unwrap();
                let dt = cfl_max_dt(&g, &vac);
                assert!(dt > prev);
                prev = dt;
            }
        }
    }

    #[test]
    fn node_index_examples() {
        let g = GridSpec::uniform([2, 2, 2], 1.0).unwrap();
        assert_eq!(node_index(Component::Ex, 0, 0, 0, &g).unwrap(), 0);
        assert_eq!(node_index(Component::Ex, 1, 0, 0, &g).unwrap(), 1);
        assert_eq!(node_index(Component::Ex, 0, 1, 0, &g).unwrap(), 2);
        assert!(node_index(Component::Ex, 2, 0, 0, &g).is_err());
        assert!(node_index(Component::Hx, 0, 2, 0, &g).is_err());
    }

    #[test]
    fn node_index_agrees_with_enumeration_order() {
        // Enumerate staggered nodes in x-fastest order and check positions.
        let g = GridSpec::uniform([2, 3, 2], 1.0).unwrap();
        for c in Component::ALL {
            let d = g.dims(c);
            let mut expected = 0;
            for k in 0..d[2] {
                for j in 0..d[1] {
                    for i in 0..d[0] {
                        assert_eq!(node_index(c, i, j, k, &g).unwrap(), expected);
                        expected += 1;
                    }
                }
            }
        }
    }

    #[test]
    fn node_index_round_trips_exhaustively() {
        for nx in 1..=5 {
            for ny in 1..=5 {
                for nz in 1..=5 {
                    let g = GridSpec::uniform([nx, ny, nz], 0.1).unwrap();
                    for c in Component::ALL {
                        let n = g.node_count(c);
                        let mut seen = vec![false; n];
                        let d = g.dims(c);
                        for k in 0..d[2] {
                            for j in 0..d[1] {
                                for i in 0..d[0] {
                                    let off = node_index(c, i, j, k, &g).unwrap();
                                    assert!(!seen[off]);
                                    seen[off] = true;
                                    assert_eq!(node_coords(c, off, &g).unwrap(), [i, j, k]);
                                }
                            }
                        }
                        assert!(seen.iter().all(|&s| s));
                    }
                }
            }
        }
    }

    #[test]
    fn allocation_sizes_follow_staggering() {
        let g = GridSpec::uniform([3, 4, 5], 0.1).unwrap();
        let s = FieldState::zeros(&g);
        assert_eq!(s.ex.len(), 3 * 5 * 6);
        assert_eq!(s.ey.len(), 4 * 4 * 6);
        assert_eq!(s.ez.len(), 4 * 5 * 5);
        assert_eq!(s.hx.len(), 4 * 4 * 5);
        assert_eq!(s.hy.len(), 3 * 5 * 5);
        assert_eq!(s.hz.len(), 3 * 4 * 6);
        assert_eq!(s.pack().len(), g.total_nodes());
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(GridSpec::new([0, 1, 1], [1.0; 3], [0.0; 3]).is_err());
        assert!(GridSpec::new([1, 1, 1], [1.0, 0.0, 1.0], [0.0; 3]).is_err());
        assert!(MediumParams::new(-1.0, MU0).is_err());
        let g = GridSpec::uniform([1, 1, 1], 1.0).unwrap();
        assert!(Timebase::from_cfln(&g, &MediumParams::vacuum(), 0.0, 1).is_err());
    }

    #[test]
    fn vacuum_wave_speed() {
        let c = MediumParams::vacuum().c();
        assert!((c - 299_792_458.0).abs() < 1.0);
    }
}
