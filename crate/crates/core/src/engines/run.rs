//! Driver that builds an engine from a scene and runs it to completion.

use std::time::{Duration, Instant};

use log::{info, warn};

use crate::boundaries::BoundarySpec;
use crate::geometry::Scene;
use crate::grid::{cfl_max_dt, FieldState, GridSpec, MediumParams};
use crate::sources::{
    slice_dump, snap_source, ProbeRecord, ProbeSpec, Slice, SlicePlane, SourceSpec,
};

use super::{Discretization, Engine, EngineError, SchemeKind};

/// A slice taken after `step` full steps (0 is the initial state).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceRequest {
    pub step: usize,
    pub plane: SlicePlane,
}

#[derive(Debug, Clone)]
pub struct SimulationSetup {
    pub scheme: SchemeKind,
    pub grid: GridSpec,
    pub medium: MediumParams,
    pub dt: f64,
    pub n_steps: usize,
    pub scene: Scene,
    pub eps_area: f64,
    pub boundaries: BoundarySpec,
    pub sources: Vec<SourceSpec>,
    pub probes: Vec<ProbeSpec>,
    pub slices: Vec<SliceRequest>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RunOutcome {
    Completed,
    /// The run stopped at `step`; artifacts hold everything before it.
    Diverged {
        step: usize,
        max: f64,
    },
}

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub outcome: RunOutcome,
    pub steps_completed: usize,
    pub dt: f64,
    pub probes: Vec<ProbeRecord>,
    pub slices: Vec<(usize, Slice)>,
    /// `max |E|` after each completed step.
    pub max_e: Vec<f64>,
    pub max_h: Vec<f64>,
    pub wall_time: Duration,
    pub final_state: FieldState,
}

impl RunArtifacts {
    pub fn diverged(&self) -> bool {
        matches!(self.outcome, RunOutcome::Diverged { .. })
    }
}

/// Runs `setup`. Invalid input is an error; a blow-up ends the run early
/// with [`RunOutcome::Diverged`] and keeps the partial artifacts.
pub fn run(setup: &SimulationSetup) -> Result<RunArtifacts, EngineError> {
    let disc = Discretization::for_scheme(
        setup.scheme,
        &setup.scene,
        &setup.grid,
        &setup.medium,
        setup.eps_area,
    )?;
    if !setup.scheme.is_implicit() {
        let limit = cfl_max_dt(&setup.grid, &setup.medium);
        if setup.dt > limit {
            warn!(
                "{} with dt = {:e} s exceeds the CFL limit {:e} s",
                setup.scheme, setup.dt, limit
            );
        }
    }
    let sources = setup
        .sources
        .iter()
        .map(|s| snap_source(s, &disc))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| EngineError::Config(e.to_string()))?;
    for s in &sources {
        if s.snap_distance > 0.0 {
            info!(
                "source snapped to E{} {:?} ({:e} m away)",
                s.axis, s.index, s.snap_distance
            );
        }
    }
    let mut probes = setup
        .probes
        .iter()
        .map(|p| ProbeRecord::new(p, &setup.grid, setup.dt))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| EngineError::Config(e.to_string()))?;
    let mut engine = Engine::new(setup.scheme, disc, setup.dt, &setup.boundaries)?;
    let mut state = FieldState::zeros(&setup.grid);

    let mut slices = Vec::new();
    let take_slices = |step: usize, state: &FieldState, out: &mut Vec<(usize, Slice)>| {
        for r in setup.slices.iter().filter(|r| r.step == step) {
            out.push((
                step,
                slice_dump(state, &r.plane).map_err(|e| EngineError::Config(e.to_string()))?,
            ));
        }
        Ok::<(), EngineError>(())
    };
    take_slices(0, &state, &mut slices)?;
    for p in probes.iter_mut() {
        p.sample(&state);
    }

    let start = Instant::now();
    let mut max_e = Vec::with_capacity(setup.n_steps);
    let mut max_h = Vec::with_capacity(setup.n_steps);
    let mut outcome = RunOutcome::Completed;
    let mut done = 0;
    let progress = (setup.n_steps / 10).max(1);
    for n in 0..setup.n_steps {
        match engine.step(&mut state, &sources, n) {
            Ok(rep) => {
                max_e.push(rep.max_e);
                max_h.push(rep.max_h);
            }
            Err(EngineError::Divergence { step, max }) => {
                warn!("{} diverged at step {step}", setup.scheme);
                outcome = RunOutcome::Diverged { step, max };
                break;
            }
            Err(e) => return Err(e),
        }
        done = n + 1;
        for p in probes.iter_mut() {
            p.sample(&state);
        }
        take_slices(done, &state, &mut slices)?;
        if done % progress == 0 {
            info!("step {done}/{}", setup.n_steps);
        }
    }
    Ok(RunArtifacts {
        outcome,
        steps_completed: done,
        dt: setup.dt,
        probes,
        slices,
        max_e,
        max_h,
        wall_time: start.elapsed(),
        final_state: state,
    })
}
