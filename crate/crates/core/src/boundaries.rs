//! Outer boundaries: PEC walls and convolutional PML layers.
//!
//! A CPML occupies the outermost `thickness` cells on its side of the
//! domain and is itself terminated by the PEC wall. Depth `d` is measured
//! from the inner interface, so `d = 0` there and `d = δ` at the wall.
//!
//! ```text
//! σ(d) = σ_max (d/δ)^m,  σ_max = ratio (m+1) / (150 π Δ sqrt(ε_r))
//! κ(d) = 1 + (κ_max - 1) (d/δ)^m
//! α(d) = α_max (1 - d/δ)
//! b    = exp(-(σ/κ + α) Δt / ε)
//! a    = σ (b - 1) / (σ κ + κ² α)          (a = 0 when σ = α = 0)
//! ψ'   = b ψ + a ∂
//! ```
//!
//! Outside every layer `κ = 1`, `b = 1`, `a = 0`, which leaves ψ at zero
//! and the interior update untouched.

use std::f64::consts::PI;

use thiserror::Error;

use crate::grid::{Axis, GridSpec, MediumParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundaryError {
    #[error("CPML on the {side} {axis} side: {msg}")]
    BadCpml {
        axis: Axis,
        side: &'static str,
        msg: String,
    },
    #[error(
        "CPML layers on the {axis} axis overlap: {low} + {high} cells in a {cells}-cell domain"
    )]
    Overlap {
        axis: Axis,
        low: usize,
        high: usize,
        cells: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpmlParams {
    pub thickness: usize,
    pub order: f64,
    pub sigma_ratio: f64,
    pub kappa_max: f64,
    pub alpha_max: f64,
}

impl Default for CpmlParams {
    fn default() -> Self {
        CpmlParams {
            thickness: 8,
            order: 4.0,
            sigma_ratio: 1.0,
            kappa_max: 5.0,
            alpha_max: 0.05,
        }
    }
}

impl CpmlParams {
    fn validate(&self) -> Result<(), String> {
        if self.thickness < 4 {
            return Err(format!("thickness {} < 4 cells", self.thickness));
        }
        if !(self.order >= 1.0) {
            return Err(format!("order {} < 1", self.order));
        }
        if !(self.sigma_ratio >= 0.0 && self.sigma_ratio.is_finite()) {
            return Err(format!(
                "sigma_ratio {} must be finite and >= 0",
                self.sigma_ratio
            ));
        }
        if !(self.kappa_max >= 1.0 && self.kappa_max.is_finite()) {
            return Err(format!("kappa_max {} < 1", self.kappa_max));
        }
        if !(self.alpha_max >= 0.0 && self.alpha_max.is_finite()) {
            return Err(format!("alpha_max {} < 0", self.alpha_max));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum BoundaryKind {
    #[default]
    Pec,
    Cpml(CpmlParams),
}

/// Boundary kind per domain face, indexed `[axis][0 = low, 1 = high]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BoundarySpec {
    pub faces: [[BoundaryKind; 2]; 3],
}

impl BoundarySpec {
    pub fn all_pec() -> Self {
        Self::default()
    }

    pub fn all_cpml(params: CpmlParams) -> Self {
        BoundarySpec {
            faces: [[BoundaryKind::Cpml(params); 2]; 3],
        }
    }

    pub fn has_cpml(&self) -> bool {
        self.faces
            .iter()
            .flatten()
            .any(|k| matches!(k, BoundaryKind::Cpml(_)))
    }

    pub fn validate(&self, grid: &GridSpec) -> Result<(), BoundaryError> {
        for axis in Axis::ALL {
            let mut widths = [0usize; 2];
            for (s, kind) in self.faces[axis.index()].iter().enumerate() {
                if let BoundaryKind::Cpml(p) = kind {
                    p.validate().map_err(|msg| BoundaryError::BadCpml {
                        axis,
                        side: if s == 0 { "low" } else { "high" },
                        msg,
                    })?;
                    widths[s] = p.thickness;
                }
            }
            let cells = grid.cells()[axis.index()];
            if widths[0] + widths[1] > cells {
                return Err(BoundaryError::Overlap {
                    axis,
                    low: widths[0],
                    high: widths[1],
                    cells,
                });
            }
        }
        Ok(())
    }
}

/// Recursion coefficients at one sample position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpmlCoeff {
    pub sigma: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub b: f64,
    pub a: f64,
}

impl CpmlCoeff {
    pub const VACUUM: CpmlCoeff = CpmlCoeff {
        sigma: 0.0,
        kappa: 1.0,
        alpha: 0.0,
        b: 1.0,
        a: 0.0,
    };

    pub fn new(sigma: f64, kappa: f64, alpha: f64, dt: f64, epsilon: f64) -> Self {
        let b = (-(sigma / kappa + alpha) * dt / epsilon).exp();
        let a = if sigma == 0.0 && alpha == 0.0 {
            0.0
        } else {
            let den = sigma * kappa + kappa * kappa * alpha;
            if den == 0.0 {
                0.0
            } else {
                sigma * (b - 1.0) / den
            }
        };
        CpmlCoeff {
            sigma,
            kappa,
            alpha,
            b,
            a,
        }
    }

    /// True when this sample lies outside every layer.
    pub fn is_vacuum(&self) -> bool {
        self.kappa == 1.0 && self.b == 1.0 && self.a == 0.0
    }
}

/// Graded coefficients along one axis at integer node positions
/// (`n + 1` samples) and at half-cell positions (`n` samples).
#[derive(Debug, Clone, PartialEq)]
pub struct AxisProfile {
    pub integer: Vec<CpmlCoeff>,
    pub half: Vec<CpmlCoeff>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CpmlProfiles {
    pub axes: [AxisProfile; 3],
}

/// `σ_max = ratio (m+1) / (150 π Δ sqrt(ε_r))`.
pub fn sigma_max(params: &CpmlParams, delta: f64, eps_r: f64) -> f64 {
    params.sigma_ratio * (params.order + 1.0) / (150.0 * PI * delta * eps_r.sqrt())
}

/// Profile value at normalized depth `x = d/δ ∈ [0, 1]`.
pub fn graded(params: &CpmlParams, delta: f64, eps_r: f64, x: f64) -> (f64, f64, f64) {
    let x = x.clamp(0.0, 1.0);
    let poly = x.powf(params.order);
    let sigma = sigma_max(params, delta, eps_r) * poly;
    let kappa = 1.0 + (params.kappa_max - 1.0) * poly;
    let alpha = params.alpha_max * (1.0 - x);
    (sigma, kappa, alpha)
}

/// Builds the graded profiles for every axis.
pub fn cpml_profiles(
    spec: &BoundarySpec,
    grid: &GridSpec,
    medium: &MediumParams,
    dt: f64,
) -> Result<CpmlProfiles, BoundaryError> {
    spec.validate(grid)?;
    let eps_r = medium.relative_permittivity();
    let axes = Axis::ALL.map(|axis| {
        let n = grid.cells()[axis.index()];
        let delta = grid.delta(axis);
        let sample = |pos: f64| -> CpmlCoeff {
            for (side, kind) in spec.faces[axis.index()].iter().enumerate() {
                if let BoundaryKind::Cpml(p) = kind {
                    let l = p.thickness as f64;
                    let depth = if side == 0 {
                        l - pos
                    } else {
                        pos - (n as f64 - l)
                    };
                    if depth > 0.0 {
                        let (s, k, a) = graded(p, delta, eps_r, depth / l);
                        return CpmlCoeff::new(s, k, a, dt, medium.epsilon);
                    }
                }
            }
            CpmlCoeff::VACUUM
        };
        AxisProfile {
            integer: (0..=n).map(|t| sample(t as f64)).collect(),
            half: (0..n).map(|f| sample(f as f64 + 0.5)).collect(),
        }
    });
    Ok(CpmlProfiles { axes })
}

/// One step of the recursive convolution `ψ ← b ψ + a ∂`.
#[inline]
pub fn psi_update(psi: f64, coeff: &CpmlCoeff, derivative: f64) -> f64 {
    coeff.b * psi + coeff.a * derivative
}

/// CPML profiles plus the ψ accumulators of the six curl couplings.
///
/// `psi_e[p]` is laid out like the electric component of coupling `p`,
/// `psi_h[p]` like its magnetic component.
#[derive(Debug, Clone, PartialEq)]
pub struct CpmlState {
    pub profiles: CpmlProfiles,
    pub psi_e: [Vec<f64>; 6],
    pub psi_h: [Vec<f64>; 6],
}

impl CpmlState {
    pub fn new(profiles: CpmlProfiles, e_sizes: [usize; 6], h_sizes: [usize; 6]) -> Self {
        CpmlState {
            profiles,
            psi_e: e_sizes.map(|n| vec![0.0; n]),
            psi_h: h_sizes.map(|n| vec![0.0; n]),
        }
    }

    pub fn reset(&mut self) {
        for v in self.psi_e.iter_mut().chain(self.psi_h.iter_mut()) {
            v.fill(0.0);
        }
    }
}
