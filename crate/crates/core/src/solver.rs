//! Sparse direct solves of the assembled saddle-point systems.

use std::sync::{Mutex, Once};

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Par};

use crate::assembly::SaddleSystem;
use crate::error::{Error, Result};
use crate::sparse::{CooMatrix, CsrMatrix};

/// Relative residual `‖Ax − b‖ / ‖b‖` required of every solve.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;
/// Condition estimates above this are reported as singular.
pub const SINGULAR_CONDITION: f64 = 1e13;
const MAX_REFINEMENTS: usize = 3;

static SEQUENTIAL: Once = Once::new();

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub residual: f64,
    pub refinements: usize,
    pub condition_estimate: f64,
}

/// LU solver that reuses its symbolic factorization while the sparsity
/// pattern stays the same.
pub struct SaddleSolver {
    tolerance: f64,
    symbolic: Mutex<Option<(Vec<usize>, Vec<usize>, SymbolicLu<usize>)>>,
}

impl Default for SaddleSolver {
    fn default() -> Self {
        Self::new()
    }
}

impl std::fmt::Debug for SaddleSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SaddleSolver")
            .field("tolerance", &self.tolerance)
            .finish_non_exhaustive()
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn to_faer(a: &CsrMatrix) -> Result<SparseColMat<usize, f64>> {
    let triplets: Vec<Triplet<usize, usize, f64>> = (0..a.nrows)
        .flat_map(|r| a.row(r).map(move |(c, v)| Triplet::new(r, c, v)))
        .collect();
    SparseColMat::try_new_from_triplets(a.nrows, a.ncols, &triplets)
        .map_err(|e| Error::Internal(format!("sparse conversion failed: {e:?}")))
}

impl SaddleSolver {
    pub fn new() -> Self {
        SEQUENTIAL.call_once(|| faer::set_global_parallelism(Par::Seq));
        Self {
            tolerance: RESIDUAL_TOLERANCE,
            symbolic: Mutex::new(None),
        }
    }

    /// Solver accepting relative residuals up to `tolerance`.
    pub fn with_tolerance(tolerance: f64) -> Self {
        Self {
            tolerance,
            ..Self::new()
        }
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    fn factorize(&self, a: &CsrMatrix) -> Result<Lu<usize, f64>> {
        let mat = to_faer(a)?;
        let mut cache = self.symbolic.lock().unwrap_or_else(|p| p.into_inner());
        let symbolic = match cache.as_ref() {
            Some((rp, ci, s)) if *rp == a.row_ptr && *ci == a.col_idx => s.clone(),
            _ => {
                let s = SymbolicLu::try_new(mat.symbolic())
                    .map_err(|e| Error::Solver(format!("symbolic factorization failed: {e:?}")))?;
                *cache = Some((a.row_ptr.clone(), a.col_idx.clone(), s.clone()));
                s
            }
        };
        drop(cache);
        Lu::try_new_with_symbolic(symbolic, mat.as_ref())
            .map_err(|e| Error::Solver(format!("LU factorization failed: {e:?}")))
    }

    /// Factorizes `a` and rejects it when the condition estimate
    /// `‖A‖₁‖A⁻¹z‖₁/‖z‖₁` for a fixed probe `z` is non-finite or too large.
    fn factor_checked(&self, a: &CsrMatrix) -> Result<(Factored, f64)> {
        let n = a.nrows;
        let f = Factored { lu: self.factorize(a)?, n };
        let probe: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * (0.7 * i as f64 + 0.3).sin()).collect();
        let y = f.apply(&probe);
        let condition = a.one_norm() * y.iter().map(|v| v.abs()).sum::<f64>() / probe.iter().map(|v| v.abs()).sum::<f64>();
        if !condition.is_finite() || condition > SINGULAR_CONDITION {
            return Err(Error::Solver(format!(
                "matrix of size {n} is singular or ill-conditioned (condition estimate {condition:.3e})"
            )));
        }
        Ok((f, condition))
    }

    /// Iterative refinement of `a x = b` with an approximate inverse.
    fn refine(
        &self,
        a: &CsrMatrix,
        b: &[f64],
        apply: impl Fn(&[f64]) -> Vec<f64>,
        condition_estimate: f64,
    ) -> Result<(Vec<f64>, SolveReport)> {
        let bnorm = norm(b);
        let scale = if bnorm > 0.0 { bnorm } else { 1.0 };
        let residual_of = |x: &[f64]| -> Vec<f64> { a.mul_vec(x).iter().zip(b).map(|(ax, bi)| bi - ax).collect() };
        let mut x = apply(b);
        let mut r = residual_of(&x);
        let mut residual = norm(&r) / scale;
        let mut refinements = 0;
        while residual > 0.01 * self.tolerance && refinements < MAX_REFINEMENTS {
            let dx = apply(&r);
            let candidate: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
            let rc = residual_of(&candidate);
            let rn = norm(&rc) / scale;
            refinements += 1;
            if !(rn < residual) {
                break;
            }
            x = candidate;
            r = rc;
            residual = rn;
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::Solver("solution contains non-finite values".into()));
        }
        if !(residual <= self.tolerance) {
            return Err(Error::Convergence {
                residual,
                tolerance: self.tolerance,
            });
        }
        Ok((
            x,
            SolveReport {
                residual,
                refinements,
                condition_estimate,
            },
        ))
    }

    /// Solves `a x = b` with iterative refinement, rejecting singular or
    /// badly conditioned matrices.
    pub fn solve_matrix(&self, a: &CsrMatrix, b: &[f64]) -> Result<(Vec<f64>, SolveReport)> {
        if a.nrows != a.ncols || a.nrows != b.len() {
            return Err(Error::InvalidInput(format!(
                "system is {}x{} with a right-hand side of length {}",
                a.nrows,
                a.ncols,
                b.len()
            )));
        }
        let (f, condition) = self.factor_checked(a)?;
        self.refine(a, b, |r| f.apply(r), condition)
    }

    /// Solves the assembled system. A zero-mean border is handled without
    /// factorizing its dense row: the unbordered operator, whose null space is
    /// the constant scalar field, is factorized with one scalar unknown
    /// pinned, and the multiplier and constant shift are recovered in closed
    /// form. Residuals are always measured against the full bordered matrix;
    /// if this route does not reach the tolerance the bordered matrix is
    /// factorized directly.
    pub fn solve(&self, system: &SaddleSystem) -> Result<(Vec<f64>, SolveReport)> {
        let full = system.global_matrix();
        let b = system.global_rhs();
        let Some(mc) = &system.mean_constraint else {
            return self.solve_matrix(&full, &b);
        };
        let (nf, ns) = (system.nflux(), system.nscalar());
        let total: f64 = mc.weights.iter().sum();
        if ns == 0 || !(total.abs() > 0.0) {
            return self.solve_matrix(&full, &b);
        }
        let pin = nf + (0..ns)
            .max_by(|&i, &j| mc.weights[i].abs().total_cmp(&mc.weights[j].abs()))
            .unwrap_or(0);
        let core = system.without_mean_constraint().global_matrix();
        let diag = core.max_abs().max(f64::MIN_POSITIVE);
        let mut coo = CooMatrix::new(core.nrows, core.ncols);
        for r in 0..core.nrows {
            if r == pin {
                coo.push(r, r, diag);
            } else {
                for (c, v) in core.row(r) {
                    coo.push(r, c, v);
                }
            }
        }
        let pinned = coo.to_csr();
        let (f, condition) = self.factor_checked(&pinned)?;
        let apply = |r: &[f64]| -> Vec<f64> {
            let lambda = r[nf..nf + ns].iter().sum::<f64>() / total;
            let mut rhs: Vec<f64> = r[..nf + ns].to_vec();
            for (ri, w) in rhs[nf..].iter_mut().zip(&mc.weights) {
                *ri -= lambda * w;
            }
            rhs[pin] = 0.0;
            let mut x = f.apply(&rhs);
            let mean: f64 = x[nf..].iter().zip(&mc.weights).map(|(p, w)| p * w).sum();
            let shift = (r[nf + ns] - mean) / total;
            for p in &mut x[nf..] {
                *p += shift;
            }
            x.push(lambda);
            x
        };
        match self.refine(&full, &b, apply, condition) {
            Err(Error::Convergence { residual, .. }) => {
                log::debug!("pinned solve stalled at {residual:.3e}; factorizing the bordered matrix");
                self.solve_matrix(&full, &b)
            }
            other => other,
        }
    }
}

struct Factored {
    lu: Lu<usize, f64>,
    n: usize,
}

impl Factored {
    fn apply(&self, rhs: &[f64]) -> Vec<f64> {
        let m = Mat::from_fn(self.n, 1, |i, _| rhs[i]);
        let x = self.lu.solve(&m);
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }
}

/// One-off solve of an assembled saddle system.
pub fn solve_saddle(system: &SaddleSystem) -> Result<(Vec<f64>, SolveReport)> {
    SaddleSolver::new().solve(system)
}
