//! Eigenvalue stability analysis of the one-step operators.
//!
//! The amplification matrix is assembled by column probing: every column is
//! one engine step applied to a canonical basis state, so the analysis
//! certifies the production stepper. Explicit schemes act on
//! `[E^n, H^{n-½}]`, split schemes on `[E^n, H^n]`.
//!
//! Pinned and frozen entries are projected to zero before every step, so
//! their columns vanish. [`eigen_spectrum`] deflates such zero columns
//! (each contributes an exact eigenvalue 0) and diagonally rescales the rest
//! by the square roots of the energy weights before the dense solve. The
//! rescaling is a similarity transform; it makes the split-step operators
//! orthogonal and keeps round-off in the eigenvalues near machine precision.

use std::io::Write;

use log::debug;
use ndarray::Array2;
use ndarray_linalg::EigVals;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::boundaries::BoundarySpec;
use crate::engines::{Discretization, Engine, EngineError, SchemeKind};
use crate::grid::{cfl_max_dt, FieldState};

pub const DEFAULT_DENSE_LIMIT: usize = 6000;

/// A spectrum is stable when `max |λ| <= 1 + EIG_TOL`.
pub const EIG_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum StabilityError {
    #[error("{n} unknowns exceed the dense limit {limit}; use the iterative estimator")]
    TooLarge { n: usize, limit: usize },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("eigensolver failed: {0}")]
    Eigen(String),
    #[error("invalid request: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Dense,
    Iterative,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Dense => "dense",
            Method::Iterative => "iterative",
        }
    }
}

#[derive(Debug, Clone)]
pub struct AmplificationMatrix {
    pub scheme: SchemeKind,
    pub cfln: f64,
    pub dt: f64,
    pub matrix: Array2<f64>,
    /// Energy weights of the packed unknowns (zero on pinned/frozen ones).
    pub weights: Vec<f64>,
}

impl AmplificationMatrix {
    pub fn n_tot(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix.dot(&ndarray::ArrayView1::from(x)).to_vec()
    }
}

/// Engine for a stability study: PEC walls, `Δt = cfln · Δt_CFL`.
pub fn stability_engine(
    scheme: SchemeKind,
    disc: &Discretization,
    cfln: f64,
) -> Result<Engine, StabilityError> {
    if !(cfln > 0.0 && cfln.is_finite()) {
        return Err(StabilityError::Invalid(format!(
            "cfln {cfln} must be positive"
        )));
    }
    let dt = cfln * cfl_max_dt(&disc.grid, &disc.medium);
    Ok(Engine::new(
        scheme,
        disc.clone(),
        dt,
        &BoundarySpec::all_pec(),
    )?)
}

/// One source-free step of `engine` on a packed state.
pub fn apply_step(engine: &mut Engine, packed: &[f64]) -> Result<Vec<f64>, StabilityError> {
    let mut s = FieldState::unpack(engine.grid(), packed);
    engine.advance(&mut s, &[], 0)?;
    Ok(s.pack())
}

pub fn assemble_amplification(
    scheme: SchemeKind,
    disc: &Discretization,
    cfln: f64,
    dense_limit: usize,
) -> Result<AmplificationMatrix, StabilityError> {
    assemble_amplification_threaded(scheme, disc, cfln, dense_limit, 1)
}

/// [`assemble_amplification`] with the column probes split over `threads`
/// workers, each owning a copy of the engine.
pub fn assemble_amplification_threaded(
    scheme: SchemeKind,
    disc: &Discretization,
    cfln: f64,
    dense_limit: usize,
    threads: usize,
) -> Result<AmplificationMatrix, StabilityError> {
    let n = disc.grid.total_nodes();
    if n > dense_limit {
        return Err(StabilityError::TooLarge {
            n,
            limit: dense_limit,
        });
    }
    let engine = stability_engine(scheme, disc, cfln)?;
    let dt = engine.dt();
    let threads = threads.clamp(1, n.max(1));
    let chunk = n.div_ceil(threads).max(1);
    let probe = |range: std::ops::Range<usize>,
                 mut engine: Engine|
     -> Result<Vec<Vec<f64>>, StabilityError> {
        let mut basis = vec![0.0; n];
        let mut cols = Vec::with_capacity(range.len());
        for j in range {
            basis[j] = 1.0;
            cols.push(apply_step(&mut engine, &basis)?);
            basis[j] = 0.0;
        }
        Ok(cols)
    };
    let blocks: Vec<Result<Vec<Vec<f64>>, StabilityError>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..n)
            .step_by(chunk)
            .map(|start| {
                let e = engine.clone();
                let probe = &probe;
                s.spawn(move || probe(start..(start + chunk).min(n), e))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("probe worker panicked"))
            .collect()
    });
    let mut matrix = Array2::<f64>::zeros((n, n));
    let mut j = 0;
    for block in blocks {
        for col in block? {
            for (i, v) in col.into_iter().enumerate() {
                matrix[[i, j]] = v;
            }
            j += 1;
        }
    }
    Ok(AmplificationMatrix {
        scheme,
        cfln,
        dt,
        matrix,
        weights: disc.energy_weights(),
    })
}

#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub scheme: SchemeKind,
    pub cfln: f64,
    pub n_tot: usize,
    /// Unknowns left after deflating zero columns (dense) or the full count.
    pub n_active: usize,
    /// Full dense spectrum (empty for iterative estimates).
    pub eigenvalues: Vec<Complex64>,
    pub max_modulus: f64,
    pub method: Method,
    pub stable: bool,
}

pub fn eigen_spectrum(m: &AmplificationMatrix) -> Result<StabilityReport, StabilityError> {
    let n = m.n_tot();
    let keep: Vec<usize> = (0..n)
        .filter(|&j| m.matrix.column(j).iter().any(|&v| v != 0.0))
        .collect();
    let k = keep.len();
    let scale: Vec<f64> = keep
        .iter()
        .map(|&j| {
            let w = m.weights.get(j).copied().unwrap_or(0.0);
            if w > 0.0 {
                w.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let mut b = Array2::<f64>::zeros((k, k));
    for (c, &j) in keep.iter().enumerate() {
        for (r, &i) in keep.iter().enumerate() {
            b[[r, c]] = scale[r] * m.matrix[[i, j]] / scale[c];
        }
    }
    debug!("dense eigensolve of order {k} ({} deflated)", n - k);
    let mut eigenvalues: Vec<Complex64> = if k == 0 {
        Vec::new()
    } else {
        b.eigvals()
            .map_err(|e| StabilityError::Eigen(e.to_string()))?
            .iter()
            .map(|z| Complex64::new(z.re, z.im))
            .collect()
    };
    eigenvalues.extend(std::iter::repeat_n(Complex64::new(0.0, 0.0), n - k));
    let max_modulus = eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(StabilityReport {
        scheme: m.scheme,
        cfln: m.cfln,
        n_tot: n,
        n_active: k,
        eigenvalues,
        max_modulus,
        method: Method::Dense,
        stable: max_modulus <= 1.0 + EIG_TOL,
    })
}

#[derive(Debug, Clone)]
pub struct RadiusEstimate {
    /// Lower-bound estimate of the spectral radius.
    pub estimate: f64,
    /// Per-iteration quantity: `ω² Δt²` Rayleigh quotients for explicit
    /// schemes, weighted-norm growth factors for split schemes.
    pub growth_log: Vec<f64>,
}

/// Largest modulus of the leapfrog eigenvalues for `x = ω² Δt²`, the roots
/// of `λ² - (2 - x) λ + 1 = 0`.
pub fn leapfrog_modulus(x: f64) -> f64 {
    if x <= 4.0 {
        1.0
    } else {
        0.5 * ((x - 2.0) + (x * x - 4.0 * x).sqrt())
    }
}

/// Matrix-free spectral radius estimate from `iters` power iterations.
///
/// Explicit schemes: a step from `(x, H = 0)` returns `E' = x - Δt² A x`,
/// where `A` is the discrete curl-curl operator, self-adjoint and positive
/// semidefinite in the electric energy inner product. Power iteration on
/// `A` gives a Rayleigh quotient `r <= ω²_max` and the estimate is
/// [`leapfrog_modulus`]`(r Δt²)`.
///
/// Split schemes: power iteration on the full step, reporting the geometric
/// mean of the weighted-norm growth over the second half of the run.
pub fn spectral_radius_estimate(
    scheme: SchemeKind,
    disc: &Discretization,
    cfln: f64,
    iters: usize,
    seed: u64,
) -> Result<RadiusEstimate, StabilityError> {
    if iters < 100 {
        return Err(StabilityError::Invalid(format!(
            "need at least 100 iterations, got {iters}"
        )));
    }
    let mut engine = stability_engine(scheme, disc, cfln)?;
    let n = disc.grid.total_nodes();
    let w = disc.energy_weights();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let norm = |v: &[f64]| v.iter().zip(&w).map(|(x, w)| w * x * x).sum::<f64>().sqrt();
    let n_e: usize = disc.lengths.iter().map(|l| l.len()).sum();
    let mut x: Vec<f64> = (0..n)
        .map(|i| {
            if w[i] > 0.0 && (scheme.is_implicit() || i < n_e) {
                rng.random_range(-1.0..1.0)
            } else {
                0.0
            }
        })
        .collect();
    let nx = norm(&x);
    if nx == 0.0 {
        return Ok(RadiusEstimate {
            estimate: 0.0,
            growth_log: vec![],
        });
    }
    x.iter_mut().for_each(|v| *v /= nx);
    let mut log = Vec::with_capacity(iters);
    if scheme.is_implicit() {
        for _ in 0..iters {
            let y = apply_step(&mut engine, &x)?;
            let g = norm(&y);
            log.push(g);
            if g == 0.0 {
                break;
            }
            x = y.into_iter().map(|v| v / g).collect();
        }
        let tail = &log[log.len() / 2..];
        let estimate = if log.last() == Some(&0.0) {
            0.0
        } else {
            (tail.iter().map(|g| g.ln()).sum::<f64>() / tail.len() as f64).exp()
        };
        Ok(RadiusEstimate {
            estimate,
            growth_log: log,
        })
    } else {
        let dt = engine.dt();
        let mut best = 0.0f64;
        for _ in 0..iters {
            let y = apply_step(&mut engine, &x)?;
            // A x on the electric block, zero magnetic block
            let ax: Vec<f64> = (0..n)
                .map(|i| {
                    if i < n_e {
                        (x[i] - y[i]) / (dt * dt)
                    } else {
                        0.0
                    }
                })
                .collect();
            let num: f64 = (0..n_e).map(|i| w[i] * x[i] * ax[i]).sum();
            let r = num * dt * dt;
            log.push(r);
            best = best.max(r);
            let g = norm(&ax);
            if g == 0.0 {
                break;
            }
            x = ax.into_iter().map(|v| v / g).collect();
        }
        Ok(RadiusEstimate {
            estimate: leapfrog_modulus(best),
            growth_log: log,
        })
    }
}

/// One mesh of a sweep.
#[derive(Debug, Clone)]
pub struct SweepCase {
    pub mesh: f64,
    pub disc: Discretization,
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub scheme: SchemeKind,
    pub mesh: f64,
    pub cfln: f64,
    pub n_tot: usize,
    pub max_modulus: f64,
    pub method: Method,
    pub stable: bool,
    pub error: Option<String>,
    /// Dense spectrum when one was computed.
    pub eigenvalues: Vec<Complex64>,
}

#[derive(Debug, Clone, Copy)]
pub struct SweepOptions {
    pub dense_limit: usize,
    pub iters: usize,
    pub seed: u64,
    /// Workers for the dense column probes.
    pub threads: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            dense_limit: DEFAULT_DENSE_LIMIT,
            iters: 500,
            seed: 0,
            threads: 1,
        }
    }
}

/// Stability verdict for a single case: dense within the limit, the
/// iterative estimator above it.
pub fn analyze(
    scheme: SchemeKind,
    disc: &Discretization,
    cfln: f64,
    opts: &SweepOptions,
) -> Result<StabilityReport, StabilityError> {
    let n = disc.grid.total_nodes();
    if n <= opts.dense_limit {
        eigen_spectrum(&assemble_amplification_threaded(
            scheme,
            disc,
            cfln,
            opts.dense_limit,
            opts.threads,
        )?)
    } else {
        let est = spectral_radius_estimate(scheme, disc, cfln, opts.iters, opts.seed)?;
        Ok(StabilityReport {
            scheme,
            cfln,
            n_tot: n,
            n_active: n,
            eigenvalues: Vec::new(),
            max_modulus: est.estimate,
            method: Method::Iterative,
            stable: est.estimate <= 1.0 + EIG_TOL,
        })
    }
}

/// One row per `(case, cfln)`; failures are recorded and the sweep goes on.
pub fn cfln_sweep(
    scheme: SchemeKind,
    cases: &[SweepCase],
    cflns: &[f64],
    opts: &SweepOptions,
) -> Vec<SweepRow> {
    let mut rows = Vec::new();
    for case in cases {
        for &cfln in cflns {
            let n_tot = case.disc.grid.total_nodes();
            let row = match analyze(scheme, &case.disc, cfln, opts) {
                Ok(rep) => SweepRow {
                    scheme,
                    mesh: case.mesh,
                    cfln,
                    n_tot,
                    max_modulus: rep.max_modulus,
                    method: rep.method,
                    stable: rep.stable,
                    error: None,
                    eigenvalues: rep.eigenvalues,
                },
                Err(e) => SweepRow {
                    scheme,
                    mesh: case.mesh,
                    cfln,
                    n_tot,
                    max_modulus: f64::NAN,
                    method: if n_tot <= opts.dense_limit {
                        Method::Dense
                    } else {
                        Method::Iterative
                    },
                    stable: false,
                    error: Some(e.to_string()),
                    eigenvalues: Vec::new(),
                },
            };
            rows.push(row);
        }
    }
    rows
}

/// Columns `scheme,mesh,cfln,n_tot,max_modulus,verdict,method`.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "scheme,mesh,cfln,n_tot,max_modulus,verdict,method")?;
    for r in rows {
        let verdict = match (&r.error, r.stable) {
            (Some(_), _) => "error",
            (None, true) => "stable",
            (None, false) => "unstable",
        };
        writeln!(
            w,
            "{},{},{},{},{:.15e},{},{}",
            r.scheme,
            r.mesh,
            r.cfln,
            r.n_tot,
            r.max_modulus,
            verdict,
            r.method.name()
        )?;
    }
    Ok(())
}

/// `re,im` per eigenvalue.
pub fn write_spectrum_csv<W: Write>(eigenvalues: &[Complex64], mut w: W) -> std::io::Result<()> {
    writeln!(w, "re,im")?;
    for z in eigenvalues {
        writeln!(w, "{:.17e},{:.17e}", z.re, z.im)?;
    }
    Ok(())
}
