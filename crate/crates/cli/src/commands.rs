//! Subcommand implementations.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};

use log::info;
use thiserror::Error;

use clod_core::engines::{self, Discretization, EngineError, RunOutcome, SchemeKind};
use clod_core::geometry::{build_conformal_map, write_coefficients, GeometryError};
use clod_core::grid::GridSpec;
use clod_core::sources::dft_spectrum;
use clod_core::stability::{
    cfln_sweep, write_spectrum_csv, write_sweep_csv, SweepCase, SweepOptions,
};

use crate::config::{cells_for, ConfigError, SimulationConfig, StepSize};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Invalid(String),
    #[error("diverged at step {step} (max |field| = {max:e}); partial results in {dir}")]
    Diverged { step: usize, max: f64, dir: PathBuf },
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(ConfigError::Io { .. }) | CliError::Io { .. } => EXIT_IO,
            CliError::Config(_) | CliError::Invalid(_) => EXIT_INVALID,
            CliError::Diverged { .. } => EXIT_DIVERGED,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub cfln: Option<f64>,
    pub scheme: Option<SchemeKind>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut SimulationConfig) -> Result<(), CliError> {
        if let Some(c) = self.cfln {
            if !(c > 0.0 && c.is_finite()) {
                return Err(CliError::Invalid(format!("--cfln {c} must be positive")));
            }
            cfg.step = StepSize::Cfln(c);
        }
        if let Some(s) = self.scheme {
            cfg.scheme = s;
        }
        Ok(())
    }

    fn out_dir(&self, cfg: &SimulationConfig) -> PathBuf {
        self.out
            .clone()
            .or_else(|| cfg.output.clone())
            .unwrap_or_else(|| PathBuf::from("out").join(&cfg.name))
    }
}

fn map_engine(e: EngineError) -> CliError {
    match e {
        EngineError::Divergence { step, max } => CliError::Diverged {
            step,
            max,
            dir: PathBuf::new(),
        },
        other => CliError::Invalid(other.to_string()),
    }
}

/// Runs the time-domain simulation and writes its artifacts.
pub fn cmd_run(
    cfg: &SimulationConfig,
    config_text: &str,
    ov: &Overrides,
) -> Result<String, CliError> {
    let dir = ov.out_dir(cfg);
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let cfg_copy = dir.join("config.cfg");
    fs::write(&cfg_copy, config_text).map_err(io_err(&cfg_copy))?;

    let setup = cfg.setup();
    info!(
        "{}: {} on {:?} cells, dt = {:e} s (CFLN {}), {} steps",
        cfg.name,
        cfg.scheme,
        cfg.grid.cells(),
        setup.dt,
        cfg.cfln(),
        setup.n_steps
    );
    let out = engines::run(&setup).map_err(map_engine)?;

    for ((name, _), rec) in cfg.probes.iter().zip(&out.probes) {
        let p = dir.join(format!("{name}.csv"));
        rec.write_csv(create(&p)?).map_err(io_err(&p))?;
        if let Some(sp) = &cfg.spectrum {
            match dft_spectrum(rec, sp.f_min, sp.f_max, sp.n_freq) {
                Ok(s) => {
                    let p = dir.join(format!("{name}_spectrum.csv"));
                    let mut text = String::from("f,re,im,normalized\n");
                    for i in 0..s.freqs.len() {
                        let _ = writeln!(
                            text,
                            "{:e},{:e},{:e},{:e}",
                            s.freqs[i], s.amplitudes[i].re, s.amplitudes[i].im, s.normalized[i]
                        );
                    }
                    fs::write(&p, text).map_err(io_err(&p))?;
                }
                Err(e) => log::warn!("spectrum of {name} skipped: {e}"),
            }
        }
    }
    for (i, (step, slice)) in out.slices.iter().enumerate() {
        let p = dir.join(format!(
            "slice{i}_{}_{}_step{step}.bin",
            slice.plane.component, slice.plane.normal
        ));
        slice.write_binary(create(&p)?).map_err(io_err(&p))?;
    }

    let max_e = out.max_e.iter().cloned().fold(0.0, f64::max);
    let max_h = out.max_h.iter().cloned().fold(0.0, f64::max);
    let status = match out.outcome {
        RunOutcome::Completed => "completed".to_string(),
        RunOutcome::Diverged { step, .. } => format!("diverged at step {step}"),
    };
    let summary = format!(
        "name: {}\ndescription: {}\nscheme: {}\ncells: {:?}\ndt: {:e}\ncfln: {}\nsteps: {}/{}\nwall_time_s: {:.3}\nmax_e: {:e}\nmax_h: {:e}\nstatus: {}\n",
        cfg.name,
        cfg.description,
        cfg.scheme,
        cfg.grid.cells(),
        setup.dt,
        cfg.cfln(),
        out.steps_completed,
        setup.n_steps,
        out.wall_time.as_secs_f64(),
        max_e,
        max_h,
        status
    );
    let p = dir.join("summary.txt");
    fs::write(&p, &summary).map_err(io_err(&p))?;
    if let RunOutcome::Diverged { step, max } = out.outcome {
        let p = dir.join("FAILED");
        fs::write(&p, format!("diverged at step {step}\n")).map_err(io_err(&p))?;
        return Err(CliError::Diverged { step, max, dir });
    }
    Ok(summary)
}

/// Grid with the extent of `base` and cell size `mesh`.
pub fn remesh(base: &GridSpec, mesh: f64) -> Result<GridSpec, CliError> {
    let ext = base.extent();
    let mut cells = [0usize; 3];
    for a in 0..3 {
        cells[a] = cells_for(ext[a], mesh).ok_or_else(|| {
            CliError::Invalid(format!(
                "extent {} is not a whole number of {mesh} m cells",
                ext[a]
            ))
        })?;
    }
    GridSpec::new(cells, [mesh; 3], base.origin).map_err(|e| CliError::Invalid(e.to_string()))
}

/// CFLN sweep over the configured meshes; writes `stability.csv`.
pub fn cmd_stability(cfg: &SimulationConfig, ov: &Overrides) -> Result<String, CliError> {
    let req = cfg
        .stability
        .as_ref()
        .ok_or_else(|| CliError::Invalid("config has no [stability] section".into()))?;
    let mut cflns = req.cflns.clone();
    if let Some(c) = ov.cfln {
        cflns = vec![c];
    }
    let mut cases = Vec::new();
    for &mesh in &req.meshes {
        let grid = remesh(&cfg.grid, mesh)?;
        let disc =
            Discretization::for_scheme(cfg.scheme, &cfg.scene, &grid, &cfg.medium, cfg.eps_area)
                .map_err(|e: GeometryError| CliError::Invalid(e.to_string()))?;
        cases.push(SweepCase { mesh, disc });
    }
    let opts = SweepOptions {
        dense_limit: cfg.dense_limit,
        iters: req.iterations,
        seed: 0,
        threads: ov.threads.unwrap_or(1),
    };
    let rows = cfln_sweep(cfg.scheme, &cases, &cflns, &opts);
    let dir = ov.out_dir(cfg);
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let p = dir.join("stability.csv");
    write_sweep_csv(&rows, create(&p)?).map_err(io_err(&p))?;
    let mut text = String::new();
    let _ = writeln!(
        text,
        "{:>8} {:>8} {:>8} {:>22} {:>9} {}",
        "mesh", "cfln", "n_tot", "max|lambda|", "method", "verdict"
    );
    for r in &rows {
        if req.spectra && !r.eigenvalues.is_empty() {
            let p = dir.join(format!("spectrum_{}_{}.csv", r.mesh, r.cfln));
            write_spectrum_csv(&r.eigenvalues, create(&p)?).map_err(io_err(&p))?;
        }
        let verdict = match (&r.error, r.stable) {
            (Some(e), _) => format!("error: {e}"),
            (None, true) => "stable".into(),
            (None, false) => "unstable".into(),
        };
        let _ = writeln!(
            text,
            "{:>8} {:>8} {:>8} {:>22.15} {:>9} {}",
            r.mesh,
            r.cfln,
            r.n_tot,
            r.max_modulus,
            r.method.name(),
            verdict
        );
    }
    Ok(text)
}

/// Extracts the conformal coefficients and writes `coefficients.clodc`.
pub fn cmd_mesh_export(cfg: &SimulationConfig, ov: &Overrides) -> Result<String, CliError> {
    let map = build_conformal_map(&cfg.scene, &cfg.grid, cfg.eps_area)
        .map_err(|e| CliError::Invalid(e.to_string()))?;
    map.check_invariants()
        .map_err(|e| CliError::Invalid(e.to_string()))?;
    let dir = ov.out_dir(cfg);
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let p = dir.join("coefficients.clodc");
    let mut w = create(&p)?;
    write_coefficients(&map, &mut w).map_err(|e| match e {
        GeometryError::Io(source) => CliError::Io {
            path: p.clone(),
            source,
        },
        other => CliError::Invalid(other.to_string()),
    })?;
    let s = map.stats();
    Ok(format!(
        "cells: {:?}\npartial edges: {}\npartial faces: {}\nPEC edges: {}\nPEC faces: {}\nmin nonzero S fraction: {:e}\nmax l/S (1/m): {:e}\nwritten: {}\n",
        cfg.grid.cells(),
        s.partial_edges,
        s.partial_faces,
        s.pec_edges,
        s.pec_faces,
        s.min_area_fraction,
        s.max_l_over_s,
        p.display()
    ))
}
