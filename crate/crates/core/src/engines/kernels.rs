//! Line kernels shared by the four schemes.
//!
//! Lines along axis `b` are processed in groups: when `b` is not `x`, a
//! group is a slab of lines that are adjacent in `x`, so every inner loop
//! runs over contiguous memory. Lines along `x` are already contiguous and
//! form groups of one.

use crate::boundaries::{AxisProfile, CpmlCoeff};
use crate::grid::{Axis, Component, GridSpec, MediumParams};
use crate::tridiag::{TridiagError, PIVOT_FLOOR};

use super::EngineError;

/// `(E axis, line axis, H axis, sign)` of the six curl couplings.
pub(crate) const PAIRS: [(Axis, Axis, Axis, f64); 6] = [
    (Axis::X, Axis::Y, Axis::Z, 1.0),
    (Axis::Y, Axis::Z, Axis::X, 1.0),
    (Axis::Z, Axis::X, Axis::Y, 1.0),
    (Axis::X, Axis::Z, Axis::Y, -1.0),
    (Axis::Y, Axis::X, Axis::Z, -1.0),
    (Axis::Z, Axis::Y, Axis::X, -1.0),
];

#[derive(Debug, Clone)]
pub(crate) struct PairGeom {
    pub e: Axis,
    pub b: Axis,
    pub h: Axis,
    pub sign: f64,
    /// Faces per line; each line has `n + 1` electric nodes.
    pub n: usize,
    pub se: usize,
    pub sh: usize,
    pub batch: usize,
    /// Base offsets `(E, H)` of each group.
    pub groups: Vec<(usize, usize)>,
}

impl PairGeom {
    pub fn new(grid: &GridSpec, (e, b, h, sign): (Axis, Axis, Axis, f64)) -> Self {
        let ed = grid.dims(Component::electric(e));
        let hd = grid.dims(Component::magnetic(h));
        let es = [1, ed[0], ed[0] * ed[1]];
        let hs = [1, hd[0], hd[0] * hd[1]];
        let bi = b.index();
        let mut groups = Vec::new();
        let batch;
        if bi != 0 {
            debug_assert_eq!(ed[0], hd[0]);
            batch = ed[0];
            let r = 3 - bi;
            debug_assert_eq!(ed[r], hd[r]);
            for m in 0..ed[r] {
                groups.push((m * es[r], m * hs[r]));
            }
        } else {
            batch = 1;
            debug_assert_eq!((ed[1], ed[2]), (hd[1], hd[2]));
            for k in 0..ed[2] {
                for j in 0..ed[1] {
                    groups.push((j * es[1] + k * es[2], j * hs[1] + k * hs[2]));
                }
            }
        }
        PairGeom {
            e,
            b,
            h,
            sign,
            n: grid.cells()[bi],
            se: es[bi],
            sh: hs[bi],
            batch,
            groups,
        }
    }
}

/// Thomas factors of every line of one coupling, laid out like `E_a`.
#[derive(Debug, Clone)]
pub(crate) struct PairFactors {
    pub lower: Vec<f64>,
    pub cprime: Vec<f64>,
    pub inv: Vec<f64>,
}

pub(crate) struct CpmlView<'a> {
    pub profile: &'a AxisProfile,
    pub psi_e: &'a mut [f64],
    pub psi_h: &'a mut [f64],
}

/// Derivative scale `1/κ + a/2` of the Crank-Nicolson CPML update.
#[inline]
fn cn_scale(c: Option<&CpmlCoeff>) -> f64 {
    match c {
        Some(c) => 1.0 / c.kappa + 0.5 * c.a,
        None => 1.0,
    }
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn factor(
    pg: &PairGeom,
    l: &[f64],
    mask: &[f64],
    inv_s: &[f64],
    prof: Option<&AxisProfile>,
    dt: f64,
    medium: &MediumParams,
    delta: f64,
) -> Result<PairFactors, EngineError> {
    let size = l.len();
    let mut out = PairFactors {
        lower: vec![0.0; size],
        cprime: vec![0.0; size],
        inv: vec![0.0; size],
    };
    let (n, se, sh, nb) = (pg.n, pg.se, pg.sh, pg.batch);
    for &(eb, hb) in &pg.groups {
        for t in 0..=n {
            let ro = eb + t * se;
            let (beta, gt_c, gm_c) = if t == 0 || t == n {
                (0.0, 0.0, 0.0)
            } else {
                let p = cn_scale(prof.map(|p| &p.integer[t]));
                let qt = cn_scale(prof.map(|p| &p.half[t]));
                let qm = cn_scale(prof.map(|p| &p.half[t - 1]));
                (
                    dt * p / (2.0 * medium.epsilon * delta),
                    dt * qt / (2.0 * medium.mu),
                    dt * qm / (2.0 * medium.mu),
                )
            };
            for u in 0..nb {
                let ie = ro + u;
                let (lower, diag, upper) = if beta == 0.0 || mask[ie] == 0.0 {
                    (0.0, 1.0, 0.0)
                } else {
                    let hf = hb + t * sh + u;
                    let gt = gt_c * inv_s[hf];
                    let gm = gm_c * inv_s[hf - sh];
                    (
                        -beta * gm * l[ie - se],
                        1.0 + beta * l[ie] * (gt + gm),
                        -beta * gt * l[ie + se],
                    )
                };
                let denom = if t == 0 {
                    diag
                } else {
                    diag - lower * out.cprime[ie - se]
                };
                if !(denom.abs() > PIVOT_FLOOR) {
                    return Err(TridiagError::SingularPivot {
                        row: ie,
                        pivot: denom,
                    }
                    .into());
                }
                let inv = 1.0 / denom;
                out.inv[ie] = inv;
                out.cprime[ie] = upper * inv;
                out.lower[ie] = lower;
            }
        }
    }
    Ok(out)
}

/// Reconstructs `(lower, diag, upper)` per row from stored factors.
pub(crate) fn rows_from_factors(pg: &PairGeom, f: &PairFactors) -> Vec<(f64, f64, f64)> {
    let mut rows = vec![(0.0, 1.0, 0.0); f.inv.len()];
    for &(eb, _) in &pg.groups {
        for t in 0..=pg.n {
            for u in 0..pg.batch {
                let ie = eb + t * pg.se + u;
                let prev = if t == 0 { 0.0 } else { f.cprime[ie - pg.se] };
                let diag = 1.0 / f.inv[ie] + f.lower[ie] * prev;
                rows[ie] = (f.lower[ie], diag, f.cprime[ie] / f.inv[ie]);
            }
        }
    }
    rows
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn implicit_sweep(
    pg: &PairGeom,
    fac: &PairFactors,
    e: &mut [f64],
    h: &mut [f64],
    x: &mut [f64],
    dh: &mut [f64],
    l: &[f64],
    mask: &[f64],
    inv_s: &[f64],
    mut cpml: Option<CpmlView<'_>>,
    src: &[(usize, f64)],
    dt: f64,
    medium: &MediumParams,
    delta: f64,
) {
    let (n, se, sh, nb) = (pg.n, pg.se, pg.sh, pg.batch);
    let sigma = pg.sign;
    let (eps, mu) = (medium.epsilon, medium.mu);
    let prof = cpml.as_ref().map(|c| c.profile);
    let p_at = |t: usize| cn_scale(prof.map(|p| &p.integer[t]));
    let q_at = |f: usize| cn_scale(prof.map(|p| &p.half[f]));
    // weights of the old ψ in the averaged update: (1 + b)/2 times Δt/ε or Δt/μ
    let zeta_at = |t: usize| prof.map_or(0.0, |p| dt / eps * 0.5 * (1.0 + p.integer[t].b));
    let eta_at = |f: usize| prof.map_or(0.0, |p| dt / mu * 0.5 * (1.0 + p.half[f].b));

    // right-hand sides of every line
    for &(eb, hb) in &pg.groups {
        for u in 0..nb {
            x[eb + u] = 0.0;
            x[eb + n * se + u] = 0.0;
        }
        for t in 1..n {
            let ro = eb + t * se;
            let beta = dt * p_at(t) / (2.0 * eps * delta);
            let two_sb = 2.0 * sigma * beta;
            let gt_c = dt * q_at(t) / (2.0 * mu);
            let gm_c = dt * q_at(t - 1) / (2.0 * mu);
            let hof = hb + t * sh;
            let hom = hof - sh;
            match cpml.as_ref() {
                None => {
                    for u in 0..nb {
                        let ie = ro + u;
                        let (lm, lt, lp) = (l[ie - se], l[ie], l[ie + se]);
                        let (em, et, ep) = (e[ie - se], e[ie], e[ie + se]);
                        let gt = gt_c * inv_s[hof + u];
                        let gm = gm_c * inv_s[hom + u];
                        let r = et
                            + two_sb * (h[hof + u] - h[hom + u])
                            + beta * (gt * (lp * ep - lt * et) - gm * (lt * et - lm * em));
                        x[ie] = r * mask[ie];
                    }
                }
                Some(c) => {
                    let (zt, et_c, em_c) = (zeta_at(t), eta_at(t), eta_at(t - 1));
                    for u in 0..nb {
                        let ie = ro + u;
                        let (lm, lt, lp) = (l[ie - se], l[ie], l[ie + se]);
                        let (em, et, ep) = (e[ie - se], e[ie], e[ie + se]);
                        let gt = gt_c * inv_s[hof + u];
                        let gm = gm_c * inv_s[hom + u];
                        let r = et
                            + two_sb * (h[hof + u] - h[hom + u])
                            + beta * (gt * (lp * ep - lt * et) - gm * (lt * et - lm * em))
                            + beta * (et_c * c.psi_h[hof + u] - em_c * c.psi_h[hom + u])
                            + sigma * zt * c.psi_e[ie];
                        x[ie] = r * mask[ie];
                    }
                }
            }
        }
    }
    for &(off, d) in src {
        x[off] += d;
    }

    for &(eb, hb) in &pg.groups {
        // forward elimination and back substitution, lanes in parallel
        for u in 0..nb {
            x[eb + u] *= fac.inv[eb + u];
        }
        for t in 1..=n {
            let ro = eb + t * se;
            for u in 0..nb {
                let ie = ro + u;
                x[ie] = (x[ie] - fac.lower[ie] * x[ie - se]) * fac.inv[ie];
            }
        }
        for t in (0..n).rev() {
            let ro = eb + t * se;
            for u in 0..nb {
                let ie = ro + u;
                x[ie] -= fac.cprime[ie] * x[ie + se];
            }
        }

        match cpml.as_mut() {
            None => {
                for f in 0..n {
                    let g_c = sigma * dt * q_at(f) / (2.0 * mu);
                    let e0 = eb + f * se;
                    let hf0 = hb + f * sh;
                    for u in 0..nb {
                        let (i0, i1) = (e0 + u, e0 + se + u);
                        let d = l[i1] * (e[i1] + x[i1]) - l[i0] * (e[i0] + x[i0]);
                        h[hf0 + u] += g_c * inv_s[hf0 + u] * d;
                    }
                }
            }
            Some(c) => {
                let prof = c.profile;
                for f in 0..n {
                    let g_c = dt * q_at(f) / (2.0 * mu);
                    let eta = eta_at(f);
                    let e0 = eb + f * se;
                    let hf0 = hb + f * sh;
                    for u in 0..nb {
                        let (i0, i1) = (e0 + u, e0 + se + u);
                        let d = l[i1] * (e[i1] + x[i1]) - l[i0] * (e[i0] + x[i0]);
                        let hf = hf0 + u;
                        dh[f * nb + u] = sigma * (g_c * inv_s[hf] * d + eta * c.psi_h[hf]);
                    }
                }
                for t in 1..n {
                    let coef = prof.integer[t];
                    let ro = eb + t * se;
                    let (hof, hom) = (hb + t * sh, hb + (t - 1) * sh);
                    for u in 0..nb {
                        let ie = ro + u;
                        let sum =
                            2.0 * (h[hof + u] - h[hom + u]) + dh[t * nb + u] - dh[(t - 1) * nb + u];
                        c.psi_e[ie] =
                            (coef.b * c.psi_e[ie] + coef.a * sum / (2.0 * delta)) * mask[ie];
                    }
                }
                for f in 0..n {
                    let coef = prof.half[f];
                    let e0 = eb + f * se;
                    let hf0 = hb + f * sh;
                    for u in 0..nb {
                        let (i0, i1) = (e0 + u, e0 + se + u);
                        let hf = hf0 + u;
                        let d = l[i1] * (e[i1] + x[i1]) - l[i0] * (e[i0] + x[i0]);
                        c.psi_h[hf] = coef.b * c.psi_h[hf] + coef.a * 0.5 * d * inv_s[hf];
                        h[hf] += dh[f * nb + u];
                    }
                }
            }
        }

        for t in 0..=n {
            let ro = eb + t * se;
            e[ro..ro + nb].copy_from_slice(&x[ro..ro + nb]);
        }
    }
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn explicit_h(
    pg: &PairGeom,
    e: &[f64],
    h: &mut [f64],
    l: &[f64],
    inv_s: &[f64],
    cpml: Option<CpmlView<'_>>,
    dt: f64,
    medium: &MediumParams,
    _delta: f64,
) {
    let (n, se, sh, nb) = (pg.n, pg.se, pg.sh, pg.batch);
    let c0 = pg.sign * dt / medium.mu;
    match cpml {
        None => {
            for &(eb, hb) in &pg.groups {
                for f in 0..n {
                    let e0 = eb + f * se;
                    let hf0 = hb + f * sh;
                    for u in 0..nb {
                        let (i0, i1) = (e0 + u, e0 + se + u);
                        let d = (l[i1] * e[i1] - l[i0] * e[i0]) * inv_s[hf0 + u];
                        h[hf0 + u] += c0 * (d / 1.0);
                    }
                }
            }
        }
        Some(c) => {
            for &(eb, hb) in &pg.groups {
                for f in 0..n {
                    let coef = c.profile.half[f];
                    let e0 = eb + f * se;
                    let hf0 = hb + f * sh;
                    for u in 0..nb {
                        let (i0, i1) = (e0 + u, e0 + se + u);
                        let hf = hf0 + u;
                        let d = (l[i1] * e[i1] - l[i0] * e[i0]) * inv_s[hf];
                        c.psi_h[hf] = coef.b * c.psi_h[hf] + coef.a * d;
                        h[hf] += c0 * (d / coef.kappa + c.psi_h[hf]);
                    }
                }
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn explicit_e(
    pg: &PairGeom,
    e: &mut [f64],
    h: &[f64],
    mask: &[f64],
    cpml: Option<CpmlView<'_>>,
    dt: f64,
    medium: &MediumParams,
    delta: f64,
) {
    let (n, se, sh, nb) = (pg.n, pg.se, pg.sh, pg.batch);
    let c0 = pg.sign * dt / medium.epsilon;
    match cpml {
        None => {
            for &(eb, hb) in &pg.groups {
                for t in 1..n {
                    let ro = eb + t * se;
                    let (hof, hom) = (hb + t * sh, hb + (t - 1) * sh);
                    for u in 0..nb {
                        let d = (h[hof + u] - h[hom + u]) / delta;
                        e[ro + u] += mask[ro + u] * (c0 * (d / 1.0));
                    }
                }
            }
        }
        Some(c) => {
            for &(eb, hb) in &pg.groups {
                for t in 1..n {
                    let coef = c.profile.integer[t];
                    let ro = eb + t * se;
                    let (hof, hom) = (hb + t * sh, hb + (t - 1) * sh);
                    for u in 0..nb {
                        let ie = ro + u;
                        let d = (h[hof + u] - h[hom + u]) / delta;
                        c.psi_e[ie] = (coef.b * c.psi_e[ie] + coef.a * d) * mask[ie];
                        e[ie] += mask[ie] * (c0 * (d / coef.kappa + c.psi_e[ie]));
                    }
                }
            }
        }
    }
}
