use alloc::vec;

use super::{prologue, SolveConfig, SolveReport};
use crate::error::{Error, Result};
use crate::linalg::norm2;
use crate::operators::LinearProblem;
use crate::scalar::{to_f64, Real};

/// Jacobi relaxation `u⁺ = u + D⁻¹(b − Au)`; one matvec per iteration.
pub fn jacobi_solve<T: Real>(p: &LinearProblem<T>, cfg: &SolveConfig) -> Result<SolveReport<T>> {
    let (b, bn) = match prologue(p, cfg)? {
        Ok(x) => x,
        Err(done) => return Ok(done),
    };
    let d = p.diagonal().ok_or(Error::MissingDiagonal)?;
    if let Some(index) = d.iter().position(|&x| x == T::zero()) {
        return Err(Error::ZeroDiagonal { index });
    }
    let n = p.size();
    let bn = to_f64(bn);
    let mut u = vec![T::zero(); n];
    let mut r = b.clone();
    let mut au = vec![T::zero(); n];
    let mut history = vec![1.0];
    let mut iterates = cfg.store_iterates.then(|| vec![u.clone()]);
    let mut k = 0;
    while k < cfg.max_iterations {
        for ((ui, &ri), &di) in u.iter_mut().zip(&r).zip(&d) {
            *ui = *ui + ri / di;
        }
        k += 1;
        if let Some(it) = iterates.as_mut() {
            it.push(u.clone());
        }
        p.apply(&u, &mut au);
        for ((ri, &bi), &ai) in r.iter_mut().zip(&b).zip(&au) {
            *ri = bi - ai;
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

#[cfg(test)]
mod tests {
    use super::super::tests::dense;
    use super::*;

    #[test]
    fn two_by_two_contracts_by_half() {
        let p = dense(&[&[2.0, 1.0], &[1.0, 2.0]], &[3.0, 3.0]);
        let r = jacobi_solve(&p, &SolveConfig::with_iterations(100)).unwrap();
        assert!(r.converged);
        // Error e_k = (-1/2)^k e_0 along [1,1]; residual ratio is exactly 1/2.
        let expected = (0..).find(|&k| 0.5f64.powi(k) < 1e-5).unwrap() as usize;
        assert_eq!(r.iterations_used, expected);
        for w in r.residual_history.windows(2) {
            assert!((w[1] / w[0] - 0.5).abs() < 1e-9);
        }
        assert!((r.solution[0] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn zero_diagonal_is_an_error() {
        let p = dense(&[&[0.0, 1.0], &[1.0, 2.0]], &[3.0, 3.0]);
        assert_eq!(jacobi_solve(&p, &SolveConfig::default()), Err(Error::ZeroDiagonal { index: 0 }));
    }

    #[test]
    fn iterates_are_stored() {
        let p = dense(&[&[2.0, 1.0], &[1.0, 2.0]], &[3.0, 3.0]);
        let cfg = SolveConfig { max_iterations: 4, store_iterates: true, ..SolveConfig::default() };
        let r = jacobi_solve(&p, &cfg).unwrap();
        let it = r.iterates.unwrap();
        assert_eq!(it.len(), 5);
        assert_eq!(it[0], vec![0.0, 0.0]);
        assert_eq!(it[1], vec![1.5, 1.5]);
        assert!(!r.converged);
    }
}
