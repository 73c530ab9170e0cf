//! Thomas algorithm for tridiagonal systems.
//!
//! Row `i` reads `lower[i-1] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]`.
//! No pivoting is done; the implicit sweeps only produce diagonally
//! dominant systems.

use thiserror::Error;

/// Pivots with magnitude at or below this are treated as zero.
pub const PIVOT_FLOOR: f64 = 1e-300;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TridiagError {
    #[error("singular tridiagonal system: pivot {pivot:e} at row {row}")]
    SingularPivot { row: usize, pivot: f64 },
    #[error("inconsistent lengths: diag {n}, lower {lower}, upper {upper}, rhs {rhs}")]
    Shape {
        n: usize,
        lower: usize,
        upper: usize,
        rhs: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalSystem {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl TridiagonalSystem {
    fn check(&self) -> Result<(), TridiagError> {
        let n = self.diag.len();
        let off = n.saturating_sub(1);
        if self.lower.len() != off || self.upper.len() != off || self.rhs.len() != n {
            return Err(TridiagError::Shape {
                n,
                lower: self.lower.len(),
                upper: self.upper.len(),
                rhs: self.rhs.len(),
            });
        }
        Ok(())
    }

    /// `A x` for the stored matrix.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.diag.len();
        (0..n)
            .map(|i| {
                let mut v = self.diag[i] * x[i];
                if i > 0 {
                    v += self.lower[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    v += self.upper[i] * x[i + 1];
                }
                v
            })
            .collect()
    }
}

/// Solves `sys` without modifying it.
pub fn thomas_solve(sys: &TridiagonalSystem) -> Result<Vec<f64>, TridiagError> {
    sys.check()?;
    let fac = TridiagFactor::new(&sys.lower, &sys.diag, &sys.upper)?;
    let mut x = sys.rhs.clone();
    fac.solve_in_place(&mut x);
    Ok(x)
}

/// LU factors of a tridiagonal matrix, reusable across right-hand sides.
///
/// The implicit engines factor every line once per run and only substitute
/// per step.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagFactor {
    lower: Vec<f64>,
    c_prime: Vec<f64>,
    inv_denom: Vec<f64>,
}

impl TridiagFactor {
    pub fn new(lower: &[f64], diag: &[f64], upper: &[f64]) -> Result<Self, TridiagError> {
        let n = diag.len();
        let off = n.saturating_sub(1);
        if lower.len() != off || upper.len() != off {
            return Err(TridiagError::Shape {
                n,
                lower: lower.len(),
                upper: upper.len(),
                rhs: n,
            });
        }
        let mut c_prime = vec![0.0; off];
        let mut inv_denom = vec![0.0; n];
        for i in 0..n {
            let denom = if i == 0 {
                diag[0]
            } else {
                diag[i] - lower[i - 1] * c_prime[i - 1]
            };
            if !(denom.abs() > PIVOT_FLOOR) {
                return Err(TridiagError::SingularPivot {
                    row: i,
                    pivot: denom,
                });
            }
            inv_denom[i] = 1.0 / denom;
            if i < off {
                c_prime[i] = upper[i] * inv_denom[i];
            }
        }
        Ok(TridiagFactor {
            lower: lower.to_vec(),
            c_prime,
            inv_denom,
        })
    }

    pub fn len(&self) -> usize {
        self.inv_denom.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv_denom.is_empty()
    }

    /// Overwrites `x` (holding the right-hand side) with the solution.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.len();
        debug_assert_eq!(x.len(), n);
        if n == 0 {
            return;
        }
        x[0] *= self.inv_denom[0];
        for i in 1..n {
            x[i] = (x[i] - self.lower[i - 1] * x[i - 1]) * self.inv_denom[i];
        }
        for i in (0..n - 1).rev() {
            x[i] -= self.c_prime[i] * x[i + 1];
        }
    }
}
