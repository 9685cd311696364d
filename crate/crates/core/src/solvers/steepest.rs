use alloc::vec;

use super::{prologue, SolveConfig, SolveReport};
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm2};
use crate::operators::LinearProblem;
use crate::scalar::{to_f64, Real};

/// Steepest descent with exact line search and recurrence residuals.
pub fn steepest_descent_solve<T: Real>(p: &LinearProblem<T>, cfg: &SolveConfig) -> Result<SolveReport<T>> {
    let (b, bn) = match prologue(p, cfg)? {
        Ok(x) => x,
        Err(done) => return Ok(done),
    };
    let n = p.size();
    let bn = to_f64(bn);
    let mut u = vec![T::zero(); n];
    let mut r = b;
    let mut q = vec![T::zero(); n];
    let mut history = vec![1.0];
    let mut iterates = cfg.store_iterates.then(|| vec![u.clone()]);
    let mut k = 0;
    while k < cfg.max_iterations {
        p.apply(&r, &mut q);
        let rq = dot(&r, &q);
        if !(rq > T::zero()) {
            return Err(Error::NotPositiveDefinite { value: to_f64(rq) });
        }
        let alpha = dot(&r, &r) / rq;
        axpy(alpha, &r, &mut u);
        axpy(-alpha, &q, &mut r);
        k += 1;
        if let Some(it) = iterates.as_mut() {
            it.push(u.clone());
        }
        let xi = to_f64(norm2(&r)) / bn;
        history.push(xi);
        if xi < cfg.tolerance {
            break;
        }
    }
    let converged = *history.last().unwrap() < cfg.tolerance;
    Ok(SolveReport { solution: u, iterations_used: k, converged, residual_history: history, iterates })
}
