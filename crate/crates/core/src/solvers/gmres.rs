use alloc::vec;
use alloc::vec::Vec;

use super::{prologue, SolveConfig, SolveReport};
use crate::error::Result;
use crate::linalg::{axpy, dot, norm2, scale};
use crate::operators::LinearProblem;
use crate::scalar::{to_f64, Real};

/// Restarted GMRES(m). Each iteration builds a full `m`-dimensional Krylov
/// basis with modified Gram-Schmidt, solves the Hessenberg least-squares
/// problem by Givens rotations and checks convergence only afterwards.
pub fn gmres_solve<T: Real>(p: &LinearProblem<T>, cfg: &SolveConfig) -> Result<SolveReport<T>> {
    let (b, bn) = match prologue(p, cfg)? {
        Ok(x) => x,
        Err(done) => return Ok(done),
    };
    let n = p.size();
    let m = cfg.gmres_restart.min(n);
    let bnf = to_f64(bn);
    let mut u = vec![T::zero(); n];
    let mut r = b.clone();
    let mut beta = bn;
    let mut history = vec![1.0];
    let mut iterates = cfg.store_iterates.then(|| vec![u.clone()]);
    let mut basis: Vec<Vec<T>> = (0..=m).map(|_| vec![T::zero(); n]).collect();
    let mut h = vec![vec![T::zero(); m]; m + 1];
    let mut cs = vec![T::zero(); m];
    let mut sn = vec![T::zero(); m];
    let mut g = vec![T::zero(); m + 1];
    let mut w = vec![T::zero(); n];
    let mut k = 0;
    while k < cfg.max_iterations {
        basis[0].copy_from_slice(&r);
        scale(T::one() / beta, &mut basis[0]);
        g.iter_mut().for_each(|x| *x = T::zero());
        g[0] = beta;
        let mut used = 0;
        for j in 0..m {
            p.apply(&basis[j], &mut w);
            let wnorm = norm2(&w);
            for i in 0..=j {
                let hij = dot(&basis[i], &w);
                h[i][j] = hij;
                axpy(-hij, &basis[i], &mut w);
            }
            let hnext = norm2(&w);
            for i in 0..j {
                let (a, c) = (h[i][j], h[i + 1][j]);
                h[i][j] = cs[i] * a + sn[i] * c;
                h[i + 1][j] = -sn[i] * a + cs[i] * c;
            }
            let denom = h[j][j].hypot(hnext);
            if denom == T::zero() {
                break;
            }
            cs[j] = h[j][j] / denom;
            sn[j] = hnext / denom;
            h[j][j] = denom;
            g[j + 1] = -sn[j] * g[j];
            g[j] = cs[j] * g[j];
            used = j + 1;
            if hnext <= T::epsilon() * wnorm {
                break;
            }
            basis[j + 1].copy_from_slice(&w);
            scale(T::one() / hnext, &mut basis[j + 1]);
        }
        let mut y = vec![T::zero(); used];
        for i in (0..used).rev() {
            let mut s = g[i];
            for l in (i + 1)..used {
                s = s - h[i][l] * y[l];
            }
            y[i] = s / h[i][i];
        }
        for (i, &yi) in y.iter().enumerate() {
            axpy(yi, &basis[i], &mut u);
        }
        k += 1;
        if let Some(it) = iterates.as_mut() {
            it.push(u.clone());
        }
        p.apply(&u, &mut w);
        for ((ri, &bi), &ai) in r.iter_mut().zip(&b).zip(&w) {
            *ri = bi - ai;
        }
        beta = norm2(&r);
        let xi = to_f64(beta) / bnf;
        history.push(xi);
        if xi < cfg.tolerance || beta == T::zero() || !xi.is_finite() {
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
    fn full_krylov_dimension_is_exact() {
        let p = dense(&[&[2.0, 1.0], &[0.0, 3.0]], &[3.0, 3.0]);
        let cfg = SolveConfig { gmres_restart: 2, ..SolveConfig::default() };
        let r = gmres_solve(&p, &cfg).unwrap();
        assert_eq!(r.iterations_used, 1);
        assert!(r.converged);
        assert!((r.solution[0] - 1.0).abs() < 1e-12 && (r.solution[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn restarted_residuals_do_not_increase() {
        let p = dense(
            &[&[4.0, 1.0, 0.0, 2.0], &[-1.0, 3.0, 1.0, 0.0], &[0.0, 2.0, 5.0, 1.0], &[1.0, 0.0, -2.0, 4.0]],
            &[1.0, 2.0, 3.0, 4.0],
        );
        let cfg = SolveConfig { gmres_restart: 1, max_iterations: 200, ..SolveConfig::default() };
        let r = gmres_solve(&p, &cfg).unwrap();
        assert!(r.converged);
        for w in r.residual_history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
    }
}
