//! Excitation, probes, spectra and field slices.
//!
//! A line current source is one E-edge soft source: the current `I(t)`
//! spread over the edge's dual face gives `J = I / (Δa Δb)`, which enters
//! the electric update as `-Δt J / ε` per explicit step, or as
//! `-Δt J / (2ε)` in each of the two split sub-steps.

use std::fmt;
use std::io::Write;

use num_complex::Complex64;
use thiserror::Error;

use crate::engines::{Discretization, SchemeKind};
use crate::geometry::Point;
use crate::grid::{Axis, Component, FieldState, GridSpec, MediumParams};

/// Floor added before taking `log10` of slice magnitudes.
pub const LOG_FLOOR: f64 = 1e-30;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SourceError {
    #[error("{what} at {location:?} lies outside the grid")]
    OutOfDomain { what: &'static str, location: Point },
    #[error("source snapped to {component} node {index:?}, which is a PEC edge")]
    OnPec {
        component: Component,
        index: [usize; 3],
    },
    #[error("frequency band [{f_min:e}, {f_max:e}] Hz is invalid or exceeds the Nyquist limit {nyquist:e} Hz")]
    Band {
        f_min: f64,
        f_max: f64,
        nyquist: f64,
    },
    #[error("need at least 2 frequencies, got {0}")]
    TooFewFrequencies(usize),
    #[error("slice plane {normal} = {coordinate} lies outside the grid")]
    SlicePlane { normal: Axis, coordinate: f64 },
}

/// `A (t - t0) exp(-(t - t0)² / τ²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DifferentiatedGaussian {
    pub t0: f64,
    pub tau: f64,
    pub amplitude: f64,
}

impl DifferentiatedGaussian {
    /// Pulse with the default delay `t0 = 3τ`.
    pub fn new(tau: f64, amplitude: f64) -> Self {
        DifferentiatedGaussian {
            t0: 3.0 * tau,
            tau,
            amplitude,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        waveform_eval(self, t)
    }
}

pub fn waveform_eval(w: &DifferentiatedGaussian, t: f64) -> f64 {
    let s = t - w.t0;
    w.amplitude * s * (-(s * s) / (w.tau * w.tau)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceSpec {
    /// Orientation of the current (and of the fed E component).
    pub axis: Axis,
    pub location: Point,
    pub waveform: DifferentiatedGaussian,
}

/// A source bound to one E-edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnappedSource {
    pub axis: Axis,
    pub index: [usize; 3],
    /// Flat offset into the `E_axis` buffer.
    pub offset: usize,
    /// Distance from the requested location to the edge center.
    pub snap_distance: f64,
    /// Dual face area `Δa Δb` carrying the current.
    pub area: f64,
    pub waveform: DifferentiatedGaussian,
}

impl SnappedSource {
    /// Current density `J(t)` in A/m².
    pub fn current_density(&self, t: f64) -> f64 {
        self.waveform.eval(t) / self.area
    }
}

/// Index of the node of `component` nearest to `p`, or `None` outside the
/// grid's node range by more than half a cell.
pub fn nearest_node(grid: &GridSpec, component: Component, p: &Point) -> Option<[usize; 3]> {
    let dims = grid.dims(component);
    let off = component.half_offsets();
    let sp = grid.spacing();
    let mut idx = [0usize; 3];
    for a in 0..3 {
        let shift = if off[a] { 0.5 } else { 0.0 };
        let f = (p[a] - grid.origin[a]) / sp[a] - shift;
        let r = f.round();
        if !(r >= -0.5 && r <= dims[a] as f64 - 0.5) || !f.is_finite() {
            return None;
        }
        idx[a] = (r.max(0.0) as usize).min(dims[a] - 1);
    }
    Some(idx)
}

/// Snaps `spec` onto the nearest `E_axis` edge; fails on pinned edges.
pub fn snap_source(spec: &SourceSpec, disc: &Discretization) -> Result<SnappedSource, SourceError> {
    let grid = &disc.grid;
    let comp = Component::electric(spec.axis);
    let index = nearest_node(grid, comp, &spec.location).ok_or(SourceError::OutOfDomain {
        what: "source",
        location: spec.location,
    })?;
    let dims = grid.dims(comp);
    let offset = index[0] + dims[0] * (index[1] + dims[1] * index[2]);
    if !disc.e_active[spec.axis.index()][offset] {
        return Err(SourceError::OnPec {
            component: comp,
            index,
        });
    }
    let pos = grid.node_position(comp, index[0], index[1], index[2]);
    let snap_distance = (0..3)
        .map(|a| (pos[a] - spec.location[a]).powi(2))
        .sum::<f64>()
        .sqrt();
    let a = spec.axis.index();
    let area =
        grid.delta(Axis::from_index((a + 1) % 3)) * grid.delta(Axis::from_index((a + 2) % 3));
    Ok(SnappedSource {
        axis: spec.axis,
        index,
        offset,
        snap_distance,
        area,
        waveform: spec.waveform,
    })
}

/// Soft-source increment of the fed edge for one update at time `t`:
/// a full explicit step, or one split sub-step.
pub fn source_delta(
    src: &SnappedSource,
    t: f64,
    dt: f64,
    medium: &MediumParams,
    scheme: SchemeKind,
) -> f64 {
    let scale = if scheme.is_implicit() { 0.5 } else { 1.0 };
    -scale * dt / medium.epsilon * src.current_density(t)
}

/// Adds [`source_delta`] to the fed edge and returns it.
pub fn inject(
    state: &mut FieldState,
    src: &SnappedSource,
    t: f64,
    dt: f64,
    medium: &MediumParams,
    scheme: SchemeKind,
) -> f64 {
    let d = source_delta(src, t, dt, medium, scheme);
    state
        .component_mut(Component::electric(src.axis))
        .as_mut_slice()[src.offset] += d;
    d
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeSpec {
    pub component: Component,
    pub location: Point,
}

/// Time series of one field sample; `values[n]` is taken at `t = n Δt`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRecord {
    pub component: Component,
    pub location: Point,
    pub index: [usize; 3],
    offset: usize,
    pub dt: f64,
    pub values: Vec<f64>,
}

impl ProbeRecord {
    pub fn new(spec: &ProbeSpec, grid: &GridSpec, dt: f64) -> Result<Self, SourceError> {
        let index =
            nearest_node(grid, spec.component, &spec.location).ok_or(SourceError::OutOfDomain {
                what: "probe",
                location: spec.location,
            })?;
        let dims = grid.dims(spec.component);
        Ok(ProbeRecord {
            component: spec.component,
            location: grid.node_position(spec.component, index[0], index[1], index[2]),
            index,
            offset: index[0] + dims[0] * (index[1] + dims[1] * index[2]),
            dt,
            values: Vec::new(),
        })
    }

    pub fn sample(&mut self, state: &FieldState) {
        self.values
            .push(state.component(self.component).as_slice()[self.offset]);
    }

    /// Sample time `n Δt`, computed by multiplication.
    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.values.len()).map(|n| self.time(n)).collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# component {}", self.component)?;
        writeln!(
            w,
            "# location {:e} {:e} {:e}",
            self.location[0], self.location[1], self.location[2]
        )?;
        writeln!(w, "# dt {:e}", self.dt)?;
        writeln!(w, "t,value")?;
        for (n, v) in self.values.iter().enumerate() {
            writeln!(w, "{:e},{:e}", self.time(n), v)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    pub freqs: Vec<f64>,
    pub amplitudes: Vec<Complex64>,
    /// `|F(f)|` divided by its in-band maximum (all zeros for a zero record).
    pub normalized: Vec<f64>,
}

impl SpectrumResult {
    /// Frequency of the largest magnitude.
    pub fn peak_frequency(&self) -> f64 {
        let (i, _) =
            self.normalized
                .iter()
                .enumerate()
                .fold(
                    (0, f64::NEG_INFINITY),
                    |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc },
                );
        self.freqs[i]
    }
}

/// Direct DFT `Σ v_n exp(-j 2π f n Δt) Δt` on `n_freq` equispaced
/// frequencies spanning `[f_min, f_max]`.
pub fn dft_spectrum(
    rec: &ProbeRecord,
    f_min: f64,
    f_max: f64,
    n_freq: usize,
) -> Result<SpectrumResult, SourceError> {
    dft_of(&rec.values, rec.dt, f_min, f_max, n_freq)
}

/// [`dft_spectrum`] for a bare sample sequence.
pub fn dft_of(
    values: &[f64],
    dt: f64,
    f_min: f64,
    f_max: f64,
    n_freq: usize,
) -> Result<SpectrumResult, SourceError> {
    if n_freq < 2 {
        return Err(SourceError::TooFewFrequencies(n_freq));
    }
    let nyquist = 0.5 / dt;
    if !(f_min >= 0.0 && f_max > f_min && f_max <= nyquist) {
        return Err(SourceError::Band {
            f_min,
            f_max,
            nyquist,
        });
    }
    let freqs: Vec<f64> = (0..n_freq)
        .map(|i| f_min + (f_max - f_min) * i as f64 / (n_freq - 1) as f64)
        .collect();
    let amplitudes: Vec<Complex64> = freqs
        .iter()
        .map(|&f| {
            let w = -2.0 * std::f64::consts::PI * f * dt;
            values
                .iter()
                .enumerate()
                .map(|(n, &v)| Complex64::from_polar(v, w * n as f64))
                .sum::<Complex64>()
                * dt
        })
        .collect();
    let mags: Vec<f64> = amplitudes.iter().map(|a| a.norm()).collect();
    let peak = mags.iter().cloned().fold(0.0, f64::max);
    let normalized = if peak > 0.0 {
        mags.iter().map(|m| m / peak).collect()
    } else {
        vec![0.0; mags.len()]
    };
    Ok(SpectrumResult {
        freqs,
        amplitudes,
        normalized,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SliceTransform {
    #[default]
    Identity,
    /// `log10(|v| + 1e-30)`.
    LogMagnitude,
}

impl fmt::Display for SliceTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SliceTransform::Identity => "identity",
            SliceTransform::LogMagnitude => "log-magnitude",
        })
    }
}

impl std::str::FromStr for SliceTransform {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "identity" => Ok(SliceTransform::Identity),
            "log-magnitude" | "log" => Ok(SliceTransform::LogMagnitude),
            _ => Err(format!("unknown slice transform '{s}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlicePlane {
    pub normal: Axis,
    pub coordinate: f64,
    pub component: Component,
    pub transform: SliceTransform,
}

/// A 2D cut of one component; `data` runs fastest along the first in-plane
/// axis (the axis after `normal`, cyclically).
#[derive(Debug, Clone, PartialEq)]
pub struct Slice {
    pub plane: SlicePlane,
    pub index: usize,
    pub dims: [usize; 2],
    pub spacing: [f64; 2],
    pub data: Vec<f64>,
}

/// Nearest-node extraction of `plane` from `state`.
pub fn slice_dump(state: &FieldState, plane: &SlicePlane) -> Result<Slice, SourceError> {
    let grid = state.grid();
    let comp = plane.component;
    let n = plane.normal.index();
    let (ua, va) = ((n + 1) % 3, (n + 2) % 3);
    let dims3 = grid.dims(comp);
    let shift = if comp.half_offsets()[n] { 0.5 } else { 0.0 };
    let f = (plane.coordinate - grid.origin[n]) / grid.spacing()[n] - shift;
    let r = f.round();
    if !(r >= -0.5 && r <= dims3[n] as f64 - 0.5) {
        return Err(SourceError::SlicePlane {
            normal: plane.normal,
            coordinate: plane.coordinate,
        });
    }
    let index = (r.max(0.0) as usize).min(dims3[n] - 1);
    let field = state.component(comp);
    let mut data = Vec::with_capacity(dims3[ua] * dims3[va]);
    for jv in 0..dims3[va] {
        for iu in 0..dims3[ua] {
            let mut idx = [0usize; 3];
            idx[n] = index;
            idx[ua] = iu;
            idx[va] = jv;
            let v = field.get(idx[0], idx[1], idx[2]);
            data.push(match plane.transform {
                SliceTransform::Identity => v,
                SliceTransform::LogMagnitude => (v.abs() + LOG_FLOOR).log10(),
            });
        }
    }
    Ok(Slice {
        plane: *plane,
        index,
        dims: [dims3[ua], dims3[va]],
        spacing: [grid.spacing()[ua], grid.spacing()[va]],
        data,
    })
}

impl Slice {
    /// Text header terminated by `end`, then little-endian `f64` values.
    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "clod-slice 1")?;
        writeln!(w, "component {}", self.plane.component)?;
        writeln!(w, "normal {}", self.plane.normal)?;
        writeln!(w, "coordinate {:e}", self.plane.coordinate)?;
        writeln!(w, "index {}", self.index)?;
        writeln!(w, "dims {} {}", self.dims[0], self.dims[1])?;
        writeln!(w, "spacing {:e} {:e}", self.spacing[0], self.spacing[1])?;
        writeln!(w, "transform {}", self.plane.transform)?;
        writeln!(w, "end")?;
        let mut buf = Vec::with_capacity(self.data.len() * 8);
        for v in &self.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "u,v,value")?;
        for jv in 0..self.dims[1] {
            for iu in 0..self.dims[0] {
                writeln!(w, "{iu},{jv},{:e}", self.data[iu + self.dims[0] * jv])?;
            }
        }
        Ok(())
    }
}
