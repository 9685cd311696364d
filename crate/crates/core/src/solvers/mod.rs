//! Iterative linear solvers with an iteration cap `K` and an early exit on the
//! relative residual `‖Au − b‖ / ‖b‖ < ε`, plus a dense direct solver.
//!
//! All iterative solvers start from the zero vector.

mod direct;
mod gmres;
mod jacobi;
mod steepest;

use alloc::vec;
use alloc::vec::Vec;

pub use direct::direct_solve;
pub use gmres::gmres_solve;
pub use jacobi::jacobi_solve;
pub use steepest::steepest_descent_solve;

use crate::error::{Error, Result};
use crate::linalg::norm2;
use crate::operators::LinearProblem;
use crate::scalar::{to_f64, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverKind {
    Jacobi,
    SteepestDescent,
    /// Restarted GMRES; one iteration is one full restart cycle.
    Gmres,
}

impl SolverKind {
    pub fn name(&self) -> &'static str {
        match self {
            SolverKind::Jacobi => "jacobi",
            SolverKind::SteepestDescent => "steepest_descent",
            SolverKind::Gmres => "gmres",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveConfig {
    /// Iteration cap `K`.
    pub max_iterations: usize,
    /// Relative residual tolerance `ε`.
    pub tolerance: f64,
    /// Krylov dimension `m` per GMRES restart.
    pub gmres_restart: usize,
    /// Keep every iterate `u^[0..=k]` for unrolled differentiation.
    pub store_iterates: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self { max_iterations: 100, tolerance: 1e-5, gmres_restart: 20, store_iterates: false }
    }
}

impl SolveConfig {
    pub fn with_iterations(max_iterations: usize) -> Self {
        Self { max_iterations, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidConfig(alloc::format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if self.gmres_restart == 0 {
            return Err(Error::InvalidConfig("gmres restart must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport<T> {
    pub solution: Vec<T>,
    pub iterations_used: usize,
    pub converged: bool,
    /// Relative residuals `ξ^[0..=iterations_used]`.
    pub residual_history: Vec<f64>,
    /// `u^[0..=iterations_used]` when requested.
    pub iterates: Option<Vec<Vec<T>>>,
}

impl<T: Real> SolveReport<T> {
    fn trivial(n: usize, store: bool) -> Self {
        Self {
            solution: vec![T::zero(); n],
            iterations_used: 0,
            converged: true,
            residual_history: vec![0.0],
            iterates: store.then(|| vec![vec![T::zero(); n]]),
        }
    }

    pub fn final_residual(&self) -> f64 {
        *self.residual_history.last().unwrap_or(&f64::NAN)
    }
}

/// `‖Au − b‖₂ / ‖b‖₂`
pub fn relative_residual<T: Real>(p: &LinearProblem<T>, u: &[T]) -> Result<f64> {
    let b = p.rhs();
    let bn = to_f64(norm2(&b));
    if bn == 0.0 {
        return Err(Error::ZeroRhs);
    }
    let au = p.matvec(u);
    let r: Vec<T> = au.iter().zip(&b).map(|(&a, &bb)| a - bb).collect();
    Ok(to_f64(norm2(&r)) / bn)
}

/// Dispatches to the requested iterative solver.
pub fn solve<T: Real>(kind: SolverKind, p: &LinearProblem<T>, cfg: &SolveConfig) -> Result<SolveReport<T>> {
    match kind {
        SolverKind::Jacobi => jacobi_solve(p, cfg),
        SolverKind::SteepestDescent => steepest_descent_solve(p, cfg),
        SolverKind::Gmres => gmres_solve(p, cfg),
    }
}

/// Common prologue: validates, returns the rhs and its norm, or a finished
/// report for a zero right-hand side (whose solution is zero).
fn prologue<T: Real>(p: &LinearProblem<T>, cfg: &SolveConfig) -> Result<core::result::Result<(Vec<T>, T), SolveReport<T>>> {
    cfg.validate()?;
    let b = p.rhs();
    let bn = norm2(&b);
    if !bn.is_finite() {
        return Err(Error::NonFinite("right-hand side"));
    }
    if bn == T::zero() {
        return Ok(Err(SolveReport::trivial(p.size(), cfg.store_iterates)));
    }
    Ok(Ok((b, bn)))
}
