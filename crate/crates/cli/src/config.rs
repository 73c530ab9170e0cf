//! Simulation configuration files.
//!
//! Configs are TOML documents. Parsing happens in two passes: `serde` turns
//! the text into loosely typed raw tables (rejecting unknown keys), then
//! [`SimulationConfig::from_raw`] validates every field and reports all
//! problems at once.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;
use thiserror::Error;

use clod_core::boundaries::{BoundaryKind, BoundarySpec, CpmlParams};
use clod_core::engines::{SchemeKind, SimulationSetup, SliceRequest};
use clod_core::geometry::stl::read_stl;
use clod_core::geometry::{Scene, Shape, DEFAULT_EPS_AREA};
use clod_core::grid::{
    cfl_max_dt, steps_for_duration, Axis, Component, GridSpec, MediumParams, EPS0, MU0,
};
use clod_core::sources::{
    DifferentiatedGaussian, ProbeSpec, SlicePlane, SliceTransform, SourceSpec,
};
use clod_core::stability::DEFAULT_DENSE_LIMIT;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("syntax error at line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("{} validation error(s):\n  {}", .0.len(), .0.join("\n  "))]
    Invalid(Vec<String>),
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: Option<String>,
    description: Option<String>,
    scheme: Option<String>,
    eps_area: Option<f64>,
    dense_limit: Option<usize>,
    output: Option<String>,
    grid: Option<RawGrid>,
    medium: Option<RawMedium>,
    time: Option<RawTime>,
    #[serde(default)]
    shape: Vec<RawShape>,
    boundaries: Option<RawBoundaries>,
    #[serde(default)]
    source: Vec<RawSource>,
    #[serde(default)]
    probe: Vec<RawProbe>,
    #[serde(default)]
    slice: Vec<RawSlice>,
    spectrum: Option<RawSpectrum>,
    stability: Option<RawStability>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Triple {
    Scalar(f64),
    Vector(Vec<f64>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    cells: Option<Vec<i64>>,
    spacing: Option<Triple>,
    extent: Option<Triple>,
    origin: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMedium {
    epsilon_r: Option<f64>,
    mu_r: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTime {
    cfln: Option<f64>,
    dt: Option<f64>,
    duration: Option<f64>,
    n_steps: Option<i64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawShape {
    kind: String,
    min: Option<Vec<f64>>,
    max: Option<Vec<f64>>,
    center: Option<Vec<f64>>,
    radius: Option<f64>,
    zmin: Option<f64>,
    zmax: Option<f64>,
    path: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBoundaries {
    default: Option<String>,
    x_low: Option<String>,
    x_high: Option<String>,
    y_low: Option<String>,
    y_high: Option<String>,
    z_low: Option<String>,
    z_high: Option<String>,
    cpml: Option<RawCpml>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCpml {
    thickness: Option<i64>,
    order: Option<f64>,
    sigma_ratio: Option<f64>,
    kappa_max: Option<f64>,
    alpha_max: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSource {
    axis: String,
    location: Vec<f64>,
    tau: f64,
    amplitude: Option<f64>,
    t0: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProbe {
    component: String,
    location: Vec<f64>,
    name: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSlice {
    component: String,
    normal: String,
    coordinate: f64,
    step: i64,
    transform: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpectrum {
    f_min: f64,
    f_max: f64,
    n_freq: i64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStability {
    meshes: Option<Vec<f64>>,
    cflns: Vec<f64>,
    iterations: Option<i64>,
    spectra: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeLength {
    Duration(f64),
    Steps(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    Cfln(f64),
    Dt(f64),
}

#[derive(Debug, Clone)]
pub struct SpectrumRequest {
    pub f_min: f64,
    pub f_max: f64,
    pub n_freq: usize,
}

#[derive(Debug, Clone)]
pub struct StabilityRequest {
    /// Mesh sizes; the domain extent of `grid` is kept.
    pub meshes: Vec<f64>,
    pub cflns: Vec<f64>,
    pub iterations: usize,
    pub spectra: bool,
}

#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub name: String,
    pub description: String,
    pub scheme: SchemeKind,
    pub grid: GridSpec,
    pub medium: MediumParams,
    pub step: StepSize,
    pub length: TimeLength,
    pub scene: Scene,
    pub eps_area: f64,
    pub dense_limit: usize,
    pub boundaries: BoundarySpec,
    pub sources: Vec<SourceSpec>,
    pub probes: Vec<(String, ProbeSpec)>,
    pub slices: Vec<SliceRequest>,
    pub spectrum: Option<SpectrumRequest>,
    pub stability: Option<StabilityRequest>,
    pub output: Option<PathBuf>,
    /// Directory relative paths in the file are resolved against.
    pub base_dir: PathBuf,
}

impl SimulationConfig {
    pub fn dt(&self) -> f64 {
        match self.step {
            StepSize::Cfln(c) => c * cfl_max_dt(&self.grid, &self.medium),
            StepSize::Dt(dt) => dt,
        }
    }

    /// Time-domain run description for the engine driver.
    pub fn setup(&self) -> SimulationSetup {
        SimulationSetup {
            scheme: self.scheme,
            grid: self.grid,
            medium: self.medium,
            dt: self.dt(),
            n_steps: self.n_steps(),
            scene: self.scene.clone(),
            eps_area: self.eps_area,
            boundaries: self.boundaries,
            sources: self.sources.clone(),
            probes: self.probes.iter().map(|(_, p)| *p).collect(),
            slices: self.slices.clone(),
        }
    }

    pub fn cfln(&self) -> f64 {
        match self.step {
            StepSize::Cfln(c) => c,
            StepSize::Dt(dt) => dt / cfl_max_dt(&self.grid, &self.medium),
        }
    }

    pub fn n_steps(&self) -> usize {
        match self.length {
            TimeLength::Steps(n) => n,
            TimeLength::Duration(d) => steps_for_duration(d, self.dt()),
        }
    }
}

/// Reads and validates a config file.
pub fn parse_config(path: &Path) -> Result<SimulationConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_config_str(&text, &base)
}

pub fn parse_config_str(text: &str, base_dir: &Path) -> Result<SimulationConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let line = e
            .span()
            .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
            .unwrap_or(0);
        ConfigError::Syntax {
            line,
            msg: e.message().to_string(),
        }
    })?;
    SimulationConfig::from_raw(raw, base_dir)
}

fn point(v: &[f64], what: &str, errs: &mut Vec<String>) -> [f64; 3] {
    if v.len() != 3 || v.iter().any(|x| !x.is_finite()) {
        errs.push(format!("{what}: expected 3 finite numbers, got {v:?}"));
        return [0.0; 3];
    }
    [v[0], v[1], v[2]]
}

fn triple(t: &Triple, what: &str, errs: &mut Vec<String>) -> [f64; 3] {
    match t {
        Triple::Scalar(s) => [*s; 3],
        Triple::Vector(v) => point(v, what, errs),
    }
}

fn parse_axis(s: &str, what: &str, errs: &mut Vec<String>) -> Axis {
    match s.to_ascii_lowercase().as_str() {
        "x" => Axis::X,
        "y" => Axis::Y,
        "z" => Axis::Z,
        _ => {
            errs.push(format!("{what}: unknown axis '{s}' (expected x, y or z)"));
            Axis::X
        }
    }
}

fn parse_component(s: &str, what: &str, errs: &mut Vec<String>) -> Component {
    let lower = s.to_ascii_lowercase();
    let (kind, axis) = lower.split_at(lower.len().min(1));
    let mut local = Vec::new();
    let a = parse_axis(axis, what, &mut local);
    match (kind, local.is_empty() && axis.len() == 1) {
        ("e", true) => Component::electric(a),
        ("h", true) => Component::magnetic(a),
        _ => {
            errs.push(format!(
                "{what}: unknown field component '{s}' (expected Ex..Hz)"
            ));
            Component::Ex
        }
    }
}

fn positive(v: Option<f64>, what: &str, errs: &mut Vec<String>) -> Option<f64> {
    match v {
        Some(x) if x > 0.0 && x.is_finite() => Some(x),
        Some(x) => {
            errs.push(format!("{what} = {x} must be positive and finite"));
            None
        }
        None => None,
    }
}

impl SimulationConfig {
    fn from_raw(raw: RawConfig, base_dir: &Path) -> Result<Self, ConfigError> {
        let mut errs = Vec::new();

        let scheme = match raw
            .scheme
            .as_deref()
            .unwrap_or("clod")
            .parse::<SchemeKind>()
        {
            Ok(s) => s,
            Err(e) => {
                errs.push(format!("scheme: {e}"));
                SchemeKind::Clod
            }
        };

        let medium = {
            let m = raw.medium.unwrap_or(RawMedium {
                epsilon_r: None,
                mu_r: None,
            });
            let er = positive(
                Some(m.epsilon_r.unwrap_or(1.0)),
                "medium.epsilon_r",
                &mut errs,
            )
            .unwrap_or(1.0);
            let mr = positive(Some(m.mu_r.unwrap_or(1.0)), "medium.mu_r", &mut errs).unwrap_or(1.0);
            MediumParams::new(EPS0 * er, MU0 * mr).unwrap_or_else(|_| MediumParams::vacuum())
        };

        let grid = match raw.grid {
            None => {
                errs.push("grid: section missing".into());
                None
            }
            Some(g) => grid_from_raw(&g, &mut errs),
        };

        let eps_area = raw.eps_area.unwrap_or(DEFAULT_EPS_AREA);
        if !(0.0..0.5).contains(&eps_area) {
            errs.push(format!("eps_area = {eps_area} must lie in [0, 0.5)"));
        }
        let dense_limit = raw.dense_limit.unwrap_or(DEFAULT_DENSE_LIMIT);

        let (step, length) = match raw.time {
            None => {
                errs.push("time: section missing".into());
                (StepSize::Cfln(1.0), TimeLength::Steps(0))
            }
            Some(t) => {
                let step = match (t.cfln, t.dt) {
                    (Some(c), None) => {
                        StepSize::Cfln(positive(Some(c), "time.cfln", &mut errs).unwrap_or(1.0))
                    }
                    (None, Some(d)) => {
                        StepSize::Dt(positive(Some(d), "time.dt", &mut errs).unwrap_or(1.0))
                    }
                    (None, None) => StepSize::Cfln(1.0),
                    (Some(_), Some(_)) => {
                        errs.push("time: give either cfln or dt, not both".into());
                        StepSize::Cfln(1.0)
                    }
                };
                let length = match (t.duration, t.n_steps) {
                    (Some(d), None) => TimeLength::Duration(
                        positive(Some(d), "time.duration", &mut errs).unwrap_or(0.0),
                    ),
                    (None, Some(n)) if n >= 0 => TimeLength::Steps(n as usize),
                    (None, Some(n)) => {
                        errs.push(format!("time.n_steps = {n} must be >= 0"));
                        TimeLength::Steps(0)
                    }
                    _ => {
                        errs.push("time: exactly one of duration and n_steps is required".into());
                        TimeLength::Steps(0)
                    }
                };
                (step, length)
            }
        };

        let mut shapes = Vec::new();
        for (i, s) in raw.shape.iter().enumerate() {
            if let Some(shape) = shape_from_raw(s, i, base_dir, &mut errs) {
                if let Err(e) = shape.validate() {
                    errs.push(format!("shape[{i}]: {e}"));
                } else {
                    shapes.push(shape);
                }
            }
        }
        let scene = Scene::new(shapes).unwrap_or_else(|_| Scene::empty());

        let boundaries = boundaries_from_raw(raw.boundaries.as_ref(), &mut errs);
        if let Some(g) = &grid {
            if let Err(e) = boundaries.validate(g) {
                errs.push(format!("boundaries: {e}"));
            }
        }

        let sources = raw
            .source
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let what = format!("source[{i}]");
                let tau = positive(Some(s.tau), &format!("{what}.tau"), &mut errs).unwrap_or(1.0);
                let mut w = DifferentiatedGaussian::new(tau, s.amplitude.unwrap_or(1.0));
                if let Some(t0) = s.t0 {
                    w.t0 = t0;
                }
                SourceSpec {
                    axis: parse_axis(&s.axis, &format!("{what}.axis"), &mut errs),
                    location: point(&s.location, &format!("{what}.location"), &mut errs),
                    waveform: w,
                }
            })
            .collect();

        let probes = raw
            .probe
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let what = format!("probe[{i}]");
                let spec = ProbeSpec {
                    component: parse_component(
                        &p.component,
                        &format!("{what}.component"),
                        &mut errs,
                    ),
                    location: point(&p.location, &format!("{what}.location"), &mut errs),
                };
                let name = p
                    .name
                    .clone()
                    .unwrap_or_else(|| format!("probe{i}_{}", spec.component));
                (name, spec)
            })
            .collect();

        let slices = raw
            .slice
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let what = format!("slice[{i}]");
                if s.step < 0 {
                    errs.push(format!("{what}.step = {} must be >= 0", s.step));
                }
                let transform = match s.transform.as_deref().map(str::parse::<SliceTransform>) {
                    None => SliceTransform::Identity,
                    Some(Ok(t)) => t,
                    Some(Err(e)) => {
                        errs.push(format!("{what}.transform: {e}"));
                        SliceTransform::Identity
                    }
                };
                SliceRequest {
                    step: s.step.max(0) as usize,
                    plane: SlicePlane {
                        normal: parse_axis(&s.normal, &format!("{what}.normal"), &mut errs),
                        coordinate: s.coordinate,
                        component: parse_component(
                            &s.component,
                            &format!("{what}.component"),
                            &mut errs,
                        ),
                        transform,
                    },
                }
            })
            .collect();

        let spectrum = raw.spectrum.map(|s| {
            if !(s.f_min >= 0.0 && s.f_max > s.f_min) {
                errs.push(format!(
                    "spectrum: need 0 <= f_min < f_max, got {} and {}",
                    s.f_min, s.f_max
                ));
            }
            if s.n_freq < 2 {
                errs.push(format!("spectrum.n_freq = {} must be >= 2", s.n_freq));
            }
            SpectrumRequest {
                f_min: s.f_min,
                f_max: s.f_max,
                n_freq: s.n_freq.max(2) as usize,
            }
        });

        let stability = raw.stability.map(|s| {
            for c in &s.cflns {
                positive(Some(*c), "stability.cflns entry", &mut errs);
            }
            let meshes = s
                .meshes
                .unwrap_or_else(|| grid.map(|g| vec![g.dx]).unwrap_or_default());
            for m in &meshes {
                positive(Some(*m), "stability.meshes entry", &mut errs);
            }
            let iterations = s.iterations.unwrap_or(500);
            if iterations < 100 {
                errs.push(format!(
                    "stability.iterations = {iterations} must be >= 100"
                ));
            }
            StabilityRequest {
                meshes,
                cflns: s.cflns,
                iterations: iterations.max(100) as usize,
                spectra: s.spectra.unwrap_or(false),
            }
        });

        if !errs.is_empty() {
            return Err(ConfigError::Invalid(errs));
        }
        Ok(SimulationConfig {
            name: raw.name.unwrap_or_else(|| "run".into()),
            description: raw.description.unwrap_or_default(),
            scheme,
            grid: grid.expect("checked above"),
            medium,
            step,
            length,
            scene,
            eps_area,
            dense_limit,
            boundaries,
            sources,
            probes,
            slices,
            spectrum,
            stability,
            output: raw.output.map(PathBuf::from),
            base_dir: base_dir.to_path_buf(),
        })
    }
}

fn grid_from_raw(g: &RawGrid, errs: &mut Vec<String>) -> Option<GridSpec> {
    let origin = g
        .origin
        .as_deref()
        .map(|o| point(o, "grid.origin", errs))
        .unwrap_or([0.0; 3]);
    let spacing = g.spacing.as_ref().map(|s| triple(s, "grid.spacing", errs));
    let cells = match (&g.cells, &g.extent, spacing) {
        (Some(c), None, _) => {
            if c.len() != 3 || c.iter().any(|&n| n < 1) {
                errs.push(format!(
                    "grid.cells: expected 3 positive integers, got {c:?}"
                ));
                return None;
            }
            [c[0] as usize, c[1] as usize, c[2] as usize]
        }
        (None, Some(e), Some(sp)) => {
            let e = triple(e, "grid.extent", errs);
            let mut c = [0usize; 3];
            for a in 0..3 {
                match cells_for(e[a], sp[a]) {
                    Some(n) => c[a] = n,
                    None => {
                        errs.push(format!(
                            "grid: extent {} is not a whole number of {} m cells",
                            e[a], sp[a]
                        ));
                        return None;
                    }
                }
            }
            c
        }
        _ => {
            errs.push("grid: give cells or extent (with spacing), but not both".into());
            return None;
        }
    };
    let Some(spacing) = spacing else {
        errs.push("grid.spacing: missing".into());
        return None;
    };
    match GridSpec::new(cells, spacing, origin) {
        Ok(g) => Some(g),
        Err(e) => {
            errs.push(format!("grid: {e}"));
            None
        }
    }
}

/// Cell count for `extent / spacing` when it is an integer up to rounding.
pub fn cells_for(extent: f64, spacing: f64) -> Option<usize> {
    let r = extent / spacing;
    let n = r.round();
    (n >= 1.0 && (r - n).abs() < 1e-6 * n).then_some(n as usize)
}

fn shape_from_raw(
    s: &RawShape,
    i: usize,
    base_dir: &Path,
    errs: &mut Vec<String>,
) -> Option<Shape> {
    let what = format!("shape[{i}]");
    let need = |v: &Option<Vec<f64>>, key: &str, errs: &mut Vec<String>| -> Option<[f64; 3]> {
        match v {
            Some(v) => Some(point(v, &format!("{what}.{key}"), errs)),
            None => {
                errs.push(format!("{what}.{key}: missing"));
                None
            }
        }
    };
    let need_f = |v: Option<f64>, key: &str, errs: &mut Vec<String>| -> Option<f64> {
        if v.is_none() {
            errs.push(format!("{what}.{key}: missing"));
        }
        v
    };
    match s.kind.as_str() {
        "box" => Some(Shape::Box {
            min: need(&s.min, "min", errs)?,
            max: need(&s.max, "max", errs)?,
        }),
        "sphere" => Some(Shape::Sphere {
            center: need(&s.center, "center", errs)?,
            radius: need_f(s.radius, "radius", errs)?,
        }),
        "cylinder_z" => {
            let c = s.center.as_deref();
            let center = match c {
                Some(&[x, y]) => [x, y],
                _ => {
                    errs.push(format!("{what}.center: expected [x, y]"));
                    return None;
                }
            };
            Some(Shape::CylinderZ {
                center,
                radius: need_f(s.radius, "radius", errs)?,
                zmin: need_f(s.zmin, "zmin", errs)?,
                zmax: need_f(s.zmax, "zmax", errs)?,
            })
        }
        "stl" => {
            let p = base_dir.join(s.path.as_deref().or_else(|| {
                errs.push(format!("{what}.path: missing"));
                None
            })?);
            match read_stl(&p) {
                Ok(mesh) => Some(Shape::TriangleMesh(Arc::new(mesh))),
                Err(e) => {
                    errs.push(format!("{what}: {}: {e}", p.display()));
                    None
                }
            }
        }
        k => {
            errs.push(format!(
                "{what}.kind: unknown shape '{k}' (expected box, sphere, cylinder_z or stl)"
            ));
            None
        }
    }
}

fn boundaries_from_raw(b: Option<&RawBoundaries>, errs: &mut Vec<String>) -> BoundarySpec {
    let Some(b) = b else {
        return BoundarySpec::all_pec();
    };
    let mut params = CpmlParams::default();
    if let Some(c) = &b.cpml {
        if let Some(t) = c.thickness {
            if t < 0 {
                errs.push(format!("boundaries.cpml.thickness = {t} must be >= 0"));
            } else {
                params.thickness = t as usize;
            }
        }
        params.order = c.order.unwrap_or(params.order);
        params.sigma_ratio = c.sigma_ratio.unwrap_or(params.sigma_ratio);
        params.kappa_max = c.kappa_max.unwrap_or(params.kappa_max);
        params.alpha_max = c.alpha_max.unwrap_or(params.alpha_max);
    }
    let kind =
        |s: Option<&String>, what: &str, fallback: BoundaryKind, errs: &mut Vec<String>| match s
            .map(|s| s.as_str())
        {
            None => fallback,
            Some("pec") => BoundaryKind::Pec,
            Some("cpml") => BoundaryKind::Cpml(params),
            Some(other) => {
                errs.push(format!(
                    "boundaries.{what}: unknown kind '{other}' (expected pec or cpml)"
                ));
                fallback
            }
        };
    let default = kind(b.default.as_ref(), "default", BoundaryKind::Pec, errs);
    let faces = [
        [
            kind(b.x_low.as_ref(), "x_low", default, errs),
            kind(b.x_high.as_ref(), "x_high", default, errs),
        ],
        [
            kind(b.y_low.as_ref(), "y_low", default, errs),
            kind(b.y_high.as_ref(), "y_high", default, errs),
        ],
        [
            kind(b.z_low.as_ref(), "z_low", default, errs),
            kind(b.z_high.as_ref(), "z_high", default, errs),
        ],
    ];
    BoundarySpec { faces }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[grid]
cells = [4, 4, 4]
spacing = 0.1

[time]
n_steps = 10
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config_str(MINIMAL, Path::new(".")).unwrap();
        assert_eq!(c.medium, MediumParams::vacuum());
        assert_eq!(c.boundaries, BoundarySpec::all_pec());
        assert_eq!(c.eps_area, 1e-6);
        assert_eq!(c.scheme, SchemeKind::Clod);
        assert_eq!(c.n_steps(), 10);
        assert!(c.scene.is_empty());
    }

    #[test]
    fn zero_cfln_names_the_field() {
        let text = format!("{MINIMAL}cfln = 0\n");
        let err = parse_config_str(&text, Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("time.cfln"), "{err}");
    }

    #[test]
    fn errors_are_batched() {
        let text = r#"
scheme = "adi"
[grid]
cells = [4, 4]
spacing = 0.1
[time]
cfln = -1
[[probe]]
component = "Qx"
location = [0, 0, 0]
"#;
        match parse_config_str(text, Path::new(".")) {
            Err(ConfigError::Invalid(list)) => assert!(list.len() >= 4, "{list:?}"),
            other => panic!("expected batched errors, got {other:?}"),
        }
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let text = "[grid]\ncells = [4, 4, 4]\nspacing = = 0.1\n";
        match parse_config_str(text, Path::new(".")) {
            Err(ConfigError::Syntax { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn extent_and_spacing_give_cells() {
        assert_eq!(cells_for(2.0, 0.25), Some(8));
        assert_eq!(cells_for(2.0, 0.05), Some(40));
        assert_eq!(cells_for(2.0, 0.3), None);
    }
}
