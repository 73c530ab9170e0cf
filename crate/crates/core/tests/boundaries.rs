use clod_core::boundaries::{BoundarySpec, CpmlParams};
use clod_core::engines::{run, RunArtifacts, SchemeKind, SimulationSetup};
use clod_core::geometry::Scene;
use clod_core::grid::{cfl_max_dt, Axis, Component, GridSpec, MediumParams};
use clod_core::sources::{DifferentiatedGaussian, ProbeSpec, SourceSpec};

const DX: f64 = 0.05;

/// Pulse from the domain center, probed two cells in front of the +x
/// layer, against a PEC box padded so that its wall echo arrives after the
/// window closes.
fn reflection_db(scheme: SchemeKind, cfln: f64) -> f64 {
    let (n, pad, window) = (24usize, 30usize, 10e-9);
    let m = MediumParams::vacuum();
    let c = n as f64 * DX / 2.0;
    let grid = GridSpec::uniform([n; 3], DX).unwrap();
    let dt = cfln * cfl_max_dt(&grid, &m);
    let setup = |grid: GridSpec, boundaries: BoundarySpec| SimulationSetup {
        scheme,
        grid,
        medium: m,
        dt,
        n_steps: (window / dt).ceil() as usize,
        scene: Scene::empty(),
        eps_area: 1e-6,
        boundaries,
        sources: vec![SourceSpec {
            axis: Axis::Z,
            location: [c; 3],
            waveform: DifferentiatedGaussian::new(1e-9, 1.0),
        }],
        probes: vec![ProbeSpec {
            component: Component::Ez,
            location: [c + 2.0 * DX, c, c],
        }],
        slices: vec![],
    };
    let absorbing: RunArtifacts =
        run(&setup(grid, BoundarySpec::all_cpml(CpmlParams::default()))).unwrap();
    let big = GridSpec::new([n + 2 * pad; 3], [DX; 3], [-(pad as f64) * DX; 3]).unwrap();
    let reference = run(&setup(big, BoundarySpec::all_pec())).unwrap();
    let (a, b) = (&absorbing.probes[0].values, &reference.probes[0].values);
    let peak = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = a
        .iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    20.0 * (diff / peak).log10()
}

#[test]
fn cpml_absorbs_explicit_pulse() {
    let db = reflection_db(SchemeKind::Fdtd, 0.9);
    assert!(db <= -40.0, "{db:.1} dB");
}

#[test]
fn cpml_absorbs_split_scheme_pulse() {
    let db = reflection_db(SchemeKind::Lod, 4.0);
    assert!(db <= -35.0, "{db:.1} dB");
}
