//! Node-labelled sub-step coefficients of the conformal split scheme.
//!
//! For an electric component `E_a` whose sub-step couples it along axis
//! `b` to `H_c`, with `k = Δt² / (4 μ ε Δ_b)`:
//!
//! ```text
//! C1_m = -k l_m / S_{m+½}     C3_m = -k l_m / S_{m-½}
//! C2_m = 1 + k l_m (1/S_{m+½} + 1/S_{m-½})
//! C4_m = 1 - k l_m (1/S_{m+½} + 1/S_{m-½})
//! ```
//!
//! and row `j` of the line system reads
//! `C1_{j-1} E_{j-1} + C2_j E_j + C3_{j+1} E_{j+1}`. The first sub-step
//! uses the names C1..C4, the second C5..C8. A ratio `l/S` with both
//! factors zero is zero; a zero area beside an open edge is an error.

use crate::geometry::ConformalCoefficients;
use crate::grid::{Axis, Component, MediumParams};

use super::kernels::PAIRS;
use super::EngineError;

#[derive(Debug, Clone, PartialEq)]
pub struct SubstepCoefficients {
    pub component: Axis,
    /// 1 or 2.
    pub substep: u8,
    pub line_axis: Axis,
    pub face_normal: Axis,
    /// Node layout of `E_component`.
    pub dims: [usize; 3],
    /// C1 (C5) labelled at each node.
    pub lower: Vec<f64>,
    /// C2 (C6).
    pub diag: Vec<f64>,
    /// C3 (C7).
    pub upper: Vec<f64>,
    /// C4 (C8).
    pub rhs: Vec<f64>,
}

impl SubstepCoefficients {
    fn offset(&self, idx: [usize; 3]) -> usize {
        idx[0] + self.dims[0] * (idx[1] + self.dims[1] * idx[2])
    }

    /// `(C1_{j-1}, C2_j, C3_{j+1})` of the row at `idx`; neighbours outside
    /// the line contribute zero.
    pub fn row(&self, idx: [usize; 3]) -> (f64, f64, f64) {
        let b = self.line_axis.index();
        let j = idx[b];
        let here = self.offset(idx);
        let lower = if j > 0 {
            let mut m = idx;
            m[b] -= 1;
            self.lower[self.offset(m)]
        } else {
            0.0
        };
        let upper = if j + 1 < self.dims[b] {
            let mut m = idx;
            m[b] += 1;
            self.upper[self.offset(m)]
        } else {
            0.0
        };
        (lower, self.diag[here], upper)
    }

    /// Checks `C2 + C4 = 2`, `C1, C3 <= 0` and column diagonal dominance
    /// `C2_m >= 1 + |C1_m| + |C3_m|` at every node, all up to rounding.
    pub fn check_identities(&self) -> Result<(), String> {
        for i in 0..self.diag.len() {
            let (c1, c2, c3, c4) = (self.lower[i], self.diag[i], self.upper[i], self.rhs[i]);
            let tol = 4.0 * f64::EPSILON * c2.abs().max(1.0);
            if (c2 + c4 - 2.0).abs() > tol {
                return Err(format!("node {i}: C2 + C4 = {} differs from 2", c2 + c4));
            }
            if c1 > 0.0 || c3 > 0.0 {
                return Err(format!(
                    "node {i}: off-diagonal coefficients {c1:e}, {c3:e} must be <= 0"
                ));
            }
            if c2 - 1.0 < -c1 - c3 - tol {
                return Err(format!(
                    "node {i}: C2 = {c2} is not dominant over {c1:e}, {c3:e}"
                ));
            }
        }
        Ok(())
    }
}

/// `l / S`, with `0 / 0 = 0`.
fn ratio(l: f64, s: f64, node: [usize; 3], component: Axis) -> Result<f64, EngineError> {
    if s == 0.0 {
        if l == 0.0 {
            Ok(0.0)
        } else {
            Err(EngineError::Assembly(format!(
                "E{component} node {node:?} has length {l:e} next to a zero-area face"
            )))
        }
    } else {
        Ok(l / s)
    }
}

/// Literal node-wise evaluation of the sub-step coefficients of `component`
/// from raw conformal lengths and areas (no pinning applied).
pub fn assemble_substep_coeffs(
    coeffs: &ConformalCoefficients,
    medium: &MediumParams,
    dt: f64,
    substep: u8,
    component: Axis,
) -> Result<SubstepCoefficients, EngineError> {
    let range = match substep {
        1 => 0..3,
        2 => 3..6,
        _ => {
            return Err(EngineError::Config(format!(
                "sub-step must be 1 or 2, got {substep}"
            )))
        }
    };
    let (_, b, c, _) = PAIRS[range]
        .iter()
        .copied()
        .find(|p| p.0 == component)
        .expect("each sub-step couples every component");
    let grid = coeffs.grid;
    let dims = grid.dims(Component::electric(component));
    let hdims = grid.dims(Component::magnetic(c));
    let l = coeffs.length(component).as_slice();
    let s = coeffs.area(c).as_slice();
    let k = dt * dt / (4.0 * medium.mu * medium.epsilon * grid.delta(b));
    let bi = b.index();
    let n = dims[0] * dims[1] * dims[2];
    let mut out = SubstepCoefficients {
        component,
        substep,
        line_axis: b,
        face_normal: c,
        dims,
        lower: vec![0.0; n],
        diag: vec![0.0; n],
        upper: vec![0.0; n],
        rhs: vec![0.0; n],
    };
    let h_off = |idx: [usize; 3]| idx[0] + hdims[0] * (idx[1] + hdims[1] * idx[2]);
    for kk in 0..dims[2] {
        for jj in 0..dims[1] {
            for ii in 0..dims[0] {
                let idx = [ii, jj, kk];
                let o = ii + dims[0] * (jj + dims[1] * kk);
                let m = idx[bi];
                // face m+½ shares the node's index; face m-½ sits one below
                let plus = if m < hdims[bi] {
                    ratio(l[o], s[h_off(idx)], idx, component)?
                } else {
                    0.0
                };
                let minus = if m > 0 {
                    let mut f = idx;
                    f[bi] -= 1;
                    ratio(l[o], s[h_off(f)], idx, component)?
                } else {
                    0.0
                };
                out.lower[o] = -k * plus;
                out.upper[o] = -k * minus;
                out.diag[o] = 1.0 + k * (plus + minus);
                out.rhs[o] = 1.0 - k * (plus + minus);
            }
        }
    }
    Ok(out)
}
