use clod_core::engines::{Discretization, SchemeKind};
use clod_core::geometry::{Scene, Shape};
use clod_core::grid::{cfl_max_dt, Component, FieldState, GridSpec, MediumParams};
use clod_core::stability::{
    apply_step, assemble_amplification, eigen_spectrum, spectral_radius_estimate, stability_engine,
};
use ndarray::Array2;
use ndarray_linalg::Inverse;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cylinder() -> Scene {
    Scene::new(vec![Shape::CylinderZ {
        center: [0.52, 0.47],
        radius: 0.21,
        zmin: 0.2,
        zmax: 0.8,
    }])
    .unwrap()
}

fn max_abs(v: impl Iterator<Item = f64>) -> f64 {
    v.fold(0.0, |m, x| m.max(x.abs()))
}

#[test]
fn assembled_matrix_reproduces_stepping() {
    let g = GridSpec::uniform([4, 4, 4], 0.25).unwrap();
    let m = MediumParams::vacuum();
    for scheme in SchemeKind::ALL {
        let disc = Discretization::for_scheme(scheme, &cylinder(), &g, &m, 1e-6).unwrap();
        let cfln = if scheme.is_implicit() { 6.0 } else { 0.7 };
        let lam = assemble_amplification(scheme, &disc, cfln, 10_000).unwrap();
        let mut engine = stability_engine(scheme, &disc, cfln).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let x: Vec<f64> = (0..g.total_nodes())
                .map(|_| rng.random_range(-1.0..1.0))
                .collect();
            let mut s = FieldState::unpack(&g, &x);
            disc.project(&mut s);
            let x = s.pack();
            let direct = apply_step(&mut engine, &x).unwrap();
            let via = lam.apply(&x);
            let scale = max_abs(direct.iter().copied());
            let err = max_abs(direct.iter().zip(&via).map(|(a, b)| a - b));
            assert!(err <= 1e-12 * scale, "{scheme}: {err:e} vs {scale:e}");
        }
    }
}

/// Packed-index helper for the independent operator build.
struct Layout {
    g: GridSpec,
}

impl Layout {
    fn at(&self, c: Component, i: isize, j: isize, k: isize) -> Option<usize> {
        let d = self.g.dims(c);
        if i < 0 || j < 0 || k < 0 || i as usize >= d[0] || j as usize >= d[1] || k as usize >= d[2]
        {
            return None;
        }
        let local = i as usize + d[0] * (j as usize + d[1] * k as usize);
        Some(FieldState::block_offset(&self.g, c) + local)
    }
}

/// Semi-discrete operators of the two LOD sub-steps on a uniform vacuum
/// box, written out stencil by stencil.
fn lod_operators(g: &GridSpec, m: &MediumParams) -> (Array2<f64>, Array2<f64>) {
    use Component::*;
    let n = g.total_nodes();
    let lay = Layout { g: *g };
    let [dx, dy, dz] = g.spacing();
    let (ie, im) = (1.0 / m.epsilon, 1.0 / m.mu);
    let mut a = Array2::<f64>::zeros((n, n));
    let mut b = Array2::<f64>::zeros((n, n));
    // (target, source component, source offsets (minus, plus), coefficient)
    type Rule = (Component, Component, [isize; 3], [isize; 3], f64, bool);
    let rules: [Rule; 12] = [
        // first sub-step: dEx/dt = dHz/dy / eps, dHz/dt = dEx/dy / mu, ...
        (Ex, Hz, [0, -1, 0], [0, 0, 0], ie / dy, true),
        (Hz, Ex, [0, 0, 0], [0, 1, 0], im / dy, true),
        (Ey, Hx, [0, 0, -1], [0, 0, 0], ie / dz, true),
        (Hx, Ey, [0, 0, 0], [0, 0, 1], im / dz, true),
        (Ez, Hy, [-1, 0, 0], [0, 0, 0], ie / dx, true),
        (Hy, Ez, [0, 0, 0], [1, 0, 0], im / dx, true),
        // second sub-step: dEx/dt = -dHy/dz / eps, dHy/dt = -dEx/dz / mu, ...
        (Ex, Hy, [0, 0, -1], [0, 0, 0], -ie / dz, false),
        (Hy, Ex, [0, 0, 0], [0, 0, 1], -im / dz, false),
        (Ey, Hz, [-1, 0, 0], [0, 0, 0], -ie / dx, false),
        (Hz, Ey, [0, 0, 0], [1, 0, 0], -im / dx, false),
        (Ez, Hx, [0, -1, 0], [0, 0, 0], -ie / dy, false),
        (Hx, Ez, [0, 0, 0], [0, 1, 0], -im / dy, false),
    ];
    for (t, s, minus, plus, coef, first) in rules {
        let op = if first { &mut a } else { &mut b };
        let [ni, nj, nk] = g.dims(t);
        for k in 0..nk as isize {
            for j in 0..nj as isize {
                for i in 0..ni as isize {
                    let row = lay.at(t, i, j, k).unwrap();
                    if let Some(c) = lay.at(s, i + plus[0], j + plus[1], k + plus[2]) {
                        op[[row, c]] += coef;
                    }
                    if let Some(c) = lay.at(s, i + minus[0], j + minus[1], k + minus[2]) {
                        op[[row, c]] -= coef;
                    }
                }
            }
        }
    }
    (a, b)
}

/// Unknowns of a PEC box: interior tangential E plus H with an open edge.
fn box_unknowns(g: &GridSpec) -> Vec<usize> {
    use Component::*;
    let lay = Layout { g: *g };
    let [nx, ny, nz] = g.cells().map(|v| v as isize);
    let mut keep = Vec::new();
    for c in Component::ALL {
        let [ni, nj, nk] = g.dims(c);
        for k in 0..nk as isize {
            for j in 0..nj as isize {
                for i in 0..ni as isize {
                    let ok = match c {
                        Ex => j > 0 && j < ny && k > 0 && k < nz,
                        Ey => i > 0 && i < nx && k > 0 && k < nz,
                        Ez => i > 0 && i < nx && j > 0 && j < ny,
                        Hx => i > 0 && i < nx,
                        Hy => j > 0 && j < ny,
                        Hz => k > 0 && k < nz,
                    };
                    if ok {
                        keep.push(lay.at(c, i, j, k).unwrap());
                    }
                }
            }
        }
    }
    keep
}

fn crank_nicolson(op: &Array2<f64>, dt: f64) -> Array2<f64> {
    let n = op.nrows();
    let eye = Array2::<f64>::eye(n);
    let lhs = &eye - &(op * (dt / 2.0));
    let rhs = &eye + &(op * (dt / 2.0));
    lhs.inv().unwrap().dot(&rhs)
}

#[test]
fn lod_matrix_matches_independent_operator_build() {
    let g = GridSpec::new([4, 3, 5], [0.2, 0.25, 0.15], [0.0; 3]).unwrap();
    let m = MediumParams::vacuum();
    let disc = Discretization::free_space(&g, &m);
    let keep = box_unknowns(&g);
    let (a, b) = lod_operators(&g, &m);
    let sub = |op: &Array2<f64>| {
        Array2::from_shape_fn((keep.len(), keep.len()), |(r, c)| op[[keep[r], keep[c]]])
    };
    let (a, b) = (sub(&a), sub(&b));
    for cfln in [0.5, 3.0, 40.0] {
        let dt = cfln * cfl_max_dt(&g, &m);
        let oracle = crank_nicolson(&b, dt).dot(&crank_nicolson(&a, dt));
        for scheme in [SchemeKind::Lod, SchemeKind::Clod] {
            let lam = assemble_amplification(scheme, &disc, cfln, 10_000).unwrap();
            let scale = max_abs(oracle.iter().copied());
            let mut err = 0.0f64;
            for (r, &i) in keep.iter().enumerate() {
                for (c, &j) in keep.iter().enumerate() {
                    err = err.max((lam.matrix[[i, j]] - oracle[[r, c]]).abs());
                }
            }
            assert!(err <= 1e-12 * scale, "{scheme} cfln {cfln}: {err:e}");
            // everything outside the box unknowns is pinned or frozen
            let outside: f64 = (0..g.total_nodes())
                .filter(|i| keep.binary_search(i).is_err())
                .map(|i| {
                    max_abs(lam.matrix.row(i).iter().copied())
                        + max_abs(lam.matrix.column(i).iter().copied())
                })
                .sum();
            assert_eq!(outside, 0.0);
        }
    }
}

#[test]
fn estimator_does_not_overshoot_dense_spectrum() {
    let g = GridSpec::uniform([5, 5, 5], 0.2).unwrap();
    let m = MediumParams::vacuum();
    for (scheme, cfln) in [
        (SchemeKind::Cfdtd, 0.5),
        (SchemeKind::Cfdtd, 1.0),
        (SchemeKind::Fdtd, 0.99),
        (SchemeKind::Clod, 8.0),
    ] {
        let disc = Discretization::for_scheme(scheme, &cylinder(), &g, &m, 1e-6).unwrap();
        let dense =
            eigen_spectrum(&assemble_amplification(scheme, &disc, cfln, 10_000).unwrap()).unwrap();
        let est = spectral_radius_estimate(scheme, &disc, cfln, 400, 5).unwrap();
        assert!(
            est.estimate <= dense.max_modulus + 1e-6,
            "{scheme} {cfln}: {} > {}",
            est.estimate,
            dense.max_modulus
        );
        // the verdict agrees as well
        assert_eq!(
            est.estimate > 1.0 + 1e-6,
            dense.max_modulus > 1.0 + 1e-6,
            "{scheme} {cfln}"
        );
    }
}

#[test]
fn lod_spectrum_is_unimodular_in_free_space() {
    let g = GridSpec::uniform([4, 4, 4], 0.25).unwrap();
    let m = MediumParams::vacuum();
    let disc = Discretization::free_space(&g, &m);
    for cfln in [1.0, 64.0] {
        let r =
            eigen_spectrum(&assemble_amplification(SchemeKind::Lod, &disc, cfln, 10_000).unwrap())
                .unwrap();
        assert!(r.stable);
        assert!(r.max_modulus <= 1.0 + 1e-9, "{}", r.max_modulus);
        // the split scheme is lossless: every active eigenvalue sits on the unit circle
        let on_circle = r
            .eigenvalues
            .iter()
            .filter(|z| (z.norm() - 1.0).abs() < 1e-9)
            .count();
        assert_eq!(on_circle, r.n_active);
    }
}
