//! Time stepping for FDTD, CFDTD, LOD-FDTD and CLOD-FDTD.
//!
//! All four schemes are built from the same six curl couplings. Coupling
//! `(a, b, c, σ)` links `E_a` and `H_c` through differences along `b`:
//!
//! ```text
//! ε ∂E_a/∂t     = σ δ_b H_c / Δ_b
//! μ S_c ∂H_c/∂t = σ δ_b (l_a E_a)
//! ```
//!
//! Couplings 0..3 are the first LOD sub-step (`Ex/Hz` along y, `Ey/Hx`
//! along z, `Ez/Hy` along x, all σ = +1), couplings 3..6 the second (`Ex/Hy`
//! along z, `Ey/Hz` along x, `Ez/Hx` along y, all σ = -1).
//!
//! The split schemes advance each coupling with a full-Δt Crank-Nicolson
//! step of half the curl, which after eliminating `H` gives one tridiagonal
//! system per grid line along `b`. The explicit schemes run the usual
//! leapfrog: `H^{n+½}` from `E^n`, then `E^{n+1}` from `H^{n+½}`.
//!
//! Staircase schemes use full `l` and `S` everywhere and pin PEC edges;
//! conformal schemes use the extracted free lengths and areas. In both,
//! wall-tangential edges and zero-length edges are pinned at zero and
//! faces with zero area (or four pinned edges) are frozen at zero. Both
//! projections are applied at the start of every step.

mod coeffs;
mod kernels;
mod run;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::boundaries::{cpml_profiles, BoundaryError, BoundarySpec, CpmlState};
use crate::geometry::{
    build_conformal_map, build_staircase_map, ConformalCoefficients, GeometryError, Scene,
    StaircaseMap,
};
use crate::grid::{Axis, Component, FieldState, GridSpec, MediumParams};
use crate::sources::SnappedSource;
use crate::tridiag::TridiagError;

pub use coeffs::{assemble_substep_coeffs, SubstepCoefficients};
pub use run::{run, RunArtifacts, RunOutcome, SimulationSetup, SliceRequest};

use kernels::{PairFactors, PairGeom};

/// A step fails when any field magnitude exceeds this bound.
pub const DIVERGENCE_LIMIT: f64 = 1e30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    Fdtd,
    Cfdtd,
    Lod,
    Clod,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 4] = [
        SchemeKind::Fdtd,
        SchemeKind::Cfdtd,
        SchemeKind::Lod,
        SchemeKind::Clod,
    ];

    pub fn is_implicit(self) -> bool {
        matches!(self, SchemeKind::Lod | SchemeKind::Clod)
    }

    pub fn is_conformal(self) -> bool {
        matches!(self, SchemeKind::Cfdtd | SchemeKind::Clod)
    }

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Fdtd => "fdtd",
            SchemeKind::Cfdtd => "cfdtd",
            SchemeKind::Lod => "lod",
            SchemeKind::Clod => "clod",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "fdtd" => Ok(SchemeKind::Fdtd),
            "cfdtd" => Ok(SchemeKind::Cfdtd),
            "lod" | "lodfdtd" => Ok(SchemeKind::Lod),
            "clod" | "clodfdtd" => Ok(SchemeKind::Clod),
            _ => Err(format!(
                "unknown scheme '{s}' (expected fdtd, cfdtd, lod or clod)"
            )),
        }
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("fields diverged at step {step} (max |field| = {max:e})")]
    Divergence { step: usize, max: f64 },
    #[error("tridiagonal solve failed: {0}")]
    Singular(#[from] TridiagError),
    #[error("coefficient assembly failed: {0}")]
    Assembly(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub step: usize,
    pub wall_time: Duration,
    pub max_e: f64,
    pub max_h: f64,
    pub finite: bool,
}

/// Effective geometry seen by an engine.
///
/// `lengths[a]` is laid out like `E_a` and holds the edge length used in
/// the magnetic update (zero on pinned edges); `areas[c]` is laid out like
/// `H_c` and holds the face area (zero on frozen faces).
#[derive(Debug, Clone, PartialEq)]
pub struct Discretization {
    pub grid: GridSpec,
    pub medium: MediumParams,
    pub lengths: [Vec<f64>; 3],
    pub areas: [Vec<f64>; 3],
    pub e_active: [Vec<bool>; 3],
    pub h_active: [Vec<bool>; 3],
}

impl Discretization {
    /// Open cavity with PEC walls.
    pub fn free_space(grid: &GridSpec, medium: &MediumParams) -> Self {
        Self::from_conformal(&ConformalCoefficients::free_space(grid), medium)
    }

    /// Conformal geometry: edges with `l = 0` are pinned, faces with
    /// `S = 0` frozen.
    pub fn from_conformal(coeffs: &ConformalCoefficients, medium: &MediumParams) -> Self {
        let grid = coeffs.grid;
        let pinned = Axis::ALL.map(|a| {
            let l = coeffs.length(a).as_slice();
            wall_pins(&grid, a)
                .into_iter()
                .zip(l)
                .map(|(wall, &len)| wall || len <= 0.0)
                .collect::<Vec<bool>>()
        });
        let lengths = Axis::ALL.map(|a| coeffs.length(a).as_slice().to_vec());
        let areas = Axis::ALL.map(|c| coeffs.area(c).as_slice().to_vec());
        Self::finish(grid, *medium, lengths, areas, pinned)
    }

    /// Staircase geometry: PEC edges pinned, everything else full size.
    pub fn from_staircase(map: &StaircaseMap, medium: &MediumParams) -> Self {
        let grid = map.grid;
        let free = ConformalCoefficients::free_space(&grid);
        let pinned = Axis::ALL.map(|a| {
            wall_pins(&grid, a)
                .into_iter()
                .zip(map.edge_flags(a))
                .map(|(wall, &pec)| wall || pec)
                .collect::<Vec<bool>>()
        });
        let lengths = Axis::ALL.map(|a| free.length(a).as_slice().to_vec());
        let areas = Axis::ALL.map(|c| free.area(c).as_slice().to_vec());
        Self::finish(grid, *medium, lengths, areas, pinned)
    }

    /// Builds the geometry a scheme consumes from a scene.
    pub fn for_scheme(
        scheme: SchemeKind,
        scene: &Scene,
        grid: &GridSpec,
        medium: &MediumParams,
        eps_area: f64,
    ) -> Result<Self, GeometryError> {
        Ok(if scheme.is_conformal() {
            Self::from_conformal(&build_conformal_map(scene, grid, eps_area)?, medium)
        } else {
            Self::from_staircase(&build_staircase_map(scene, grid), medium)
        })
    }

    fn finish(
        grid: GridSpec,
        medium: MediumParams,
        mut lengths: [Vec<f64>; 3],
        mut areas: [Vec<f64>; 3],
        pinned: [Vec<bool>; 3],
    ) -> Self {
        for a in 0..3 {
            for (l, &p) in lengths[a].iter_mut().zip(&pinned[a]) {
                if p {
                    *l = 0.0;
                }
            }
        }
        let e_active = pinned.map(|p| p.iter().map(|x| !x).collect::<Vec<bool>>());
        let mut h_active: [Vec<bool>; 3] = Default::default();
        for normal in Axis::ALL {
            let c = normal.index();
            let [ni, nj, nk] = grid.dims(Component::magnetic(normal));
            let mut act = vec![false; ni * nj * nk];
            for k in 0..nk {
                for j in 0..nj {
                    for i in 0..ni {
                        let f = i + ni * (j + nj * k);
                        let any_open = ConformalCoefficients::face_edges(normal, i, j, k)
                            .iter()
                            .any(|(ax, [a, b, cc])| {
                                let [ei, ej, _] = grid.dims(Component::electric(*ax));
                                e_active[ax.index()][a + ei * (b + ej * cc)]
                            });
                        act[f] = areas[c][f] > 0.0 && any_open;
                        if !act[f] {
                            areas[c][f] = 0.0;
                        }
                    }
                }
            }
            h_active[c] = act;
        }
        Discretization {
            grid,
            medium,
            lengths,
            areas,
            e_active,
            h_active,
        }
    }

    /// Zeroes pinned electric and frozen magnetic entries.
    pub fn project(&self, state: &mut FieldState) {
        for a in Axis::ALL {
            let e = state.component_mut(Component::electric(a)).as_mut_slice();
            for (v, &act) in e.iter_mut().zip(&self.e_active[a.index()]) {
                if !act {
                    *v = 0.0;
                }
            }
            let h = state.component_mut(Component::magnetic(a)).as_mut_slice();
            for (v, &act) in h.iter_mut().zip(&self.h_active[a.index()]) {
                if !act {
                    *v = 0.0;
                }
            }
        }
    }

    /// Per-entry weights of the discrete energy, in packed order.
    ///
    /// `w_E = ε l A⊥` on active edges and `w_H = μ S L⊥` on active faces,
    /// where `A⊥` is the dual face area of the edge and `L⊥` the dual edge
    /// length of the face. Both split sub-steps conserve `½ Σ w u²`.
    pub fn energy_weights(&self) -> Vec<f64> {
        let g = &self.grid;
        let mut w = Vec::with_capacity(g.total_nodes());
        for a in Axis::ALL {
            let i = a.index();
            let dual =
                g.delta(Axis::from_index((i + 1) % 3)) * g.delta(Axis::from_index((i + 2) % 3));
            w.extend(
                self.lengths[i]
                    .iter()
                    .zip(&self.e_active[i])
                    .map(|(&l, &act)| {
                        if act {
                            self.medium.epsilon * l * dual
                        } else {
                            0.0
                        }
                    }),
            );
        }
        for c in Axis::ALL {
            let i = c.index();
            let dual = g.delta(c);
            w.extend(
                self.areas[i]
                    .iter()
                    .zip(&self.h_active[i])
                    .map(|(&s, &act)| if act { self.medium.mu * s * dual } else { 0.0 }),
            );
        }
        w
    }

    /// `½ Σ w u²` over the packed state.
    pub fn energy(&self, state: &FieldState) -> f64 {
        let w = self.energy_weights();
        0.5 * state
            .pack()
            .iter()
            .zip(&w)
            .map(|(u, w)| w * u * u)
            .sum::<f64>()
    }
}

/// Flags of the `E_a` nodes lying tangentially on a domain wall.
fn wall_pins(grid: &GridSpec, a: Axis) -> Vec<bool> {
    let comp = Component::electric(a);
    let [ni, nj, nk] = grid.dims(comp);
    let cells = grid.cells();
    let mut out = Vec::with_capacity(ni * nj * nk);
    for k in 0..nk {
        for j in 0..nj {
            for i in 0..ni {
                let idx = [i, j, k];
                let on_wall = (0..3)
                    .filter(|&ax| ax != a.index())
                    .any(|ax| idx[ax] == 0 || idx[ax] == cells[ax]);
                out.push(on_wall);
            }
        }
    }
    out
}

/// One time-stepping engine bound to a geometry, time step and boundary.
#[derive(Debug, Clone)]
pub struct Engine {
    scheme: SchemeKind,
    disc: Discretization,
    dt: f64,
    pairs: [PairGeom; 6],
    factors: Option<Vec<PairFactors>>,
    cpml: Option<CpmlState>,
    e_mask: [Vec<f64>; 3],
    inv_s: [Vec<f64>; 3],
    scratch_e: [Vec<f64>; 3],
    scratch_h: Vec<f64>,
}

impl Engine {
    pub fn new(
        scheme: SchemeKind,
        disc: Discretization,
        dt: f64,
        boundaries: &BoundarySpec,
    ) -> Result<Self, EngineError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(EngineError::Config(format!(
                "time step {dt} must be positive"
            )));
        }
        let grid = disc.grid;
        let pairs = kernels::PAIRS.map(|p| PairGeom::new(&grid, p));
        let e_mask = Axis::ALL.map(|a| {
            disc.e_active[a.index()]
                .iter()
                .map(|&x| if x { 1.0 } else { 0.0 })
                .collect::<Vec<f64>>()
        });
        let inv_s = Axis::ALL.map(|c| {
            disc.areas[c.index()]
                .iter()
                .zip(&disc.h_active[c.index()])
                .map(|(&s, &act)| if act { 1.0 / s } else { 0.0 })
                .collect::<Vec<f64>>()
        });
        let cpml = if boundaries.has_cpml() {
            let profiles = cpml_profiles(boundaries, &grid, &disc.medium, dt)?;
            let e_sizes = pairs
                .clone()
                .map(|p| grid.node_count(Component::electric(p.e)));
            let h_sizes = pairs
                .clone()
                .map(|p| grid.node_count(Component::magnetic(p.h)));
            Some(CpmlState::new(profiles, e_sizes, h_sizes))
        } else {
            boundaries.validate(&grid)?;
            None
        };
        let mut engine = Engine {
            scheme,
            disc,
            dt,
            pairs,
            factors: None,
            cpml,
            e_mask,
            inv_s,
            scratch_e: Axis::ALL.map(|a| vec![0.0; grid.node_count(Component::electric(a))]),
            scratch_h: Vec::new(),
        };
        if scheme.is_implicit() {
            let mut f = Vec::with_capacity(6);
            for p in 0..6 {
                f.push(engine.factor_pair(p)?);
            }
            engine.factors = Some(f);
            let max_h = engine
                .pairs
                .iter()
                .map(|p| (p.n) * p.batch)
                .max()
                .unwrap_or(0);
            engine.scratch_h = vec![0.0; max_h];
        }
        Ok(engine)
    }

    pub fn scheme(&self) -> SchemeKind {
        self.scheme
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &GridSpec {
        &self.disc.grid
    }

    pub fn discretization(&self) -> &Discretization {
        &self.disc
    }

    pub fn cpml(&self) -> Option<&CpmlState> {
        self.cpml.as_ref()
    }

    /// Clears the CPML memory (the field state is owned by the caller).
    pub fn reset(&mut self) {
        if let Some(c) = self.cpml.as_mut() {
            c.reset();
        }
    }

    fn factor_pair(&self, p: usize) -> Result<PairFactors, EngineError> {
        let pg = &self.pairs[p];
        let a = pg.e.index();
        let c = pg.h.index();
        let prof = self.cpml.as_ref().map(|s| &s.profiles.axes[pg.b.index()]);
        kernels::factor(
            pg,
            &self.disc.lengths[a],
            &self.e_mask[a],
            &self.inv_s[c],
            prof,
            self.dt,
            &self.disc.medium,
            self.disc.grid.delta(pg.b),
        )
    }

    /// Rows `(lower, diag, upper)` of the tridiagonal systems of coupling
    /// `p`, laid out like its electric component.
    pub fn system_rows(&self, p: usize) -> Option<Vec<(f64, f64, f64)>> {
        let f = self.factors.as_ref()?;
        Some(kernels::rows_from_factors(&self.pairs[p], &f[p]))
    }

    /// First split sub-step (couplings 0..3). `step` is the index `n` of
    /// the full step, used for the source time `(n + ¼) Δt`.
    pub fn lod_substep1(
        &mut self,
        state: &mut FieldState,
        sources: &[SnappedSource],
        step: usize,
    ) -> Result<(), EngineError> {
        self.require_implicit()?;
        self.disc.project(state);
        let t = (step as f64 + 0.25) * self.dt;
        for p in 0..3 {
            self.implicit_pair(state, p, sources, t);
        }
        Ok(())
    }

    /// Second split sub-step (couplings 3..6), sources at `(n + ¾) Δt`.
    pub fn lod_substep2(
        &mut self,
        state: &mut FieldState,
        sources: &[SnappedSource],
        step: usize,
    ) -> Result<(), EngineError> {
        self.require_implicit()?;
        self.disc.project(state);
        let t = (step as f64 + 0.75) * self.dt;
        for p in 3..6 {
            self.implicit_pair(state, p, sources, t);
        }
        Ok(())
    }

    fn require_implicit(&self) -> Result<(), EngineError> {
        if self.factors.is_none() {
            return Err(EngineError::Config(format!(
                "{} is not a split-step scheme",
                self.scheme
            )));
        }
        Ok(())
    }

    fn implicit_pair(
        &mut self,
        state: &mut FieldState,
        p: usize,
        sources: &[SnappedSource],
        t: f64,
    ) {
        let pg = &self.pairs[p];
        let a = pg.e.index();
        let c = pg.h.index();
        let medium = self.disc.medium;
        let delta = self.disc.grid.delta(pg.b);
        let (e, h) = e_h_mut(state, pg.e, pg.h);
        let scratch = &mut self.scratch_e[a];
        let factors = &self.factors.as_ref().expect("implicit engine")[p];
        let cpml = self.cpml.as_mut().map(|s| {
            let CpmlState {
                profiles,
                psi_e,
                psi_h,
            } = s;
            kernels::CpmlView {
                profile: &profiles.axes[pg.b.index()],
                psi_e: &mut psi_e[p],
                psi_h: &mut psi_h[p],
            }
        });
        // soft sources enter the right-hand side of their own row
        let src: Vec<(usize, f64)> = sources
            .iter()
            .filter(|s| s.axis == pg.e)
            .map(|s| {
                (
                    s.offset,
                    -self.dt / (2.0 * medium.epsilon) * s.current_density(t),
                )
            })
            .collect();
        kernels::implicit_sweep(
            pg,
            factors,
            e.as_mut_slice(),
            h.as_mut_slice(),
            scratch,
            &mut self.scratch_h,
            &self.disc.lengths[a],
            &self.e_mask[a],
            &self.inv_s[c],
            cpml,
            &src,
            self.dt,
            &medium,
            delta,
        );
    }

    /// Explicit leapfrog step `E^n, H^{n-½} → E^{n+1}, H^{n+½}`, sources at
    /// `(n + ½) Δt`.
    pub fn leapfrog_step(
        &mut self,
        state: &mut FieldState,
        sources: &[SnappedSource],
        step: usize,
    ) -> Result<(), EngineError> {
        if self.scheme.is_implicit() {
            return Err(EngineError::Config(format!(
                "{} is not an explicit scheme",
                self.scheme
            )));
        }
        self.disc.project(state);
        let medium = self.disc.medium;
        for p in 0..6 {
            let pg = &self.pairs[p];
            let (a, c) = (pg.e.index(), pg.h.index());
            let delta = self.disc.grid.delta(pg.b);
            let (e, h) = e_h_mut(state, pg.e, pg.h);
            let cpml = self.cpml.as_mut().map(|s| kernels::CpmlView {
                profile: &s.profiles.axes[pg.b.index()],
                psi_e: &mut s.psi_e[p],
                psi_h: &mut s.psi_h[p],
            });
            kernels::explicit_h(
                pg,
                e.as_slice(),
                h.as_mut_slice(),
                &self.disc.lengths[a],
                &self.inv_s[c],
                cpml,
                self.dt,
                &medium,
                delta,
            );
        }
        for p in 0..6 {
            let pg = &self.pairs[p];
            let a = pg.e.index();
            let delta = self.disc.grid.delta(pg.b);
            let (e, h) = e_h_mut(state, pg.e, pg.h);
            let cpml = self.cpml.as_mut().map(|s| kernels::CpmlView {
                profile: &s.profiles.axes[pg.b.index()],
                psi_e: &mut s.psi_e[p],
                psi_h: &mut s.psi_h[p],
            });
            kernels::explicit_e(
                pg,
                e.as_mut_slice(),
                h.as_slice(),
                &self.e_mask[a],
                cpml,
                self.dt,
                &medium,
                delta,
            );
        }
        let t = (step as f64 + 0.5) * self.dt;
        for s in sources {
            let d = -self.dt / medium.epsilon * s.current_density(t);
            state
                .component_mut(Component::electric(s.axis))
                .as_mut_slice()[s.offset] += d;
        }
        Ok(())
    }

    /// One full step of the engine's scheme with divergence detection.
    pub fn step(
        &mut self,
        state: &mut FieldState,
        sources: &[SnappedSource],
        step: usize,
    ) -> Result<StepReport, EngineError> {
        let start = Instant::now();
        self.advance(state, sources, step)?;
        let max_e = state.max_abs_e();
        let max_h = state.max_abs_h();
        let finite = state.all_finite();
        let report = StepReport {
            step,
            wall_time: start.elapsed(),
            max_e,
            max_h,
            finite,
        };
        let max = max_e.max(max_h);
        if !finite || max > DIVERGENCE_LIMIT {
            return Err(EngineError::Divergence {
                step,
                max: if finite { max } else { f64::INFINITY },
            });
        }
        Ok(report)
    }

    /// One full step without the divergence scan.
    pub fn advance(
        &mut self,
        state: &mut FieldState,
        sources: &[SnappedSource],
        step: usize,
    ) -> Result<(), EngineError> {
        if self.scheme.is_implicit() {
            self.lod_substep1(state, sources, step)?;
            self.lod_substep2(state, sources, step)
        } else {
            self.leapfrog_step(state, sources, step)
        }
    }
}

fn e_h_mut(
    state: &mut FieldState,
    a: Axis,
    c: Axis,
) -> (&mut crate::grid::Field3, &mut crate::grid::Field3) {
    let FieldState {
        ex,
        ey,
        ez,
        hx,
        hy,
        hz,
        ..
    } = state;
    let e = match a {
        Axis::X => ex,
        Axis::Y => ey,
        Axis::Z => ez,
    };
    let h = match c {
        Axis::X => hx,
        Axis::Y => hy,
        Axis::Z => hz,
    };
    (e, h)
}
