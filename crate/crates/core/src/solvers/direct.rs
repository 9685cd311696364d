use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::LuFactorization;
use crate::operators::LinearProblem;
use crate::scalar::{cast, to_f64, Real};

/// Dense LU solve of the materialized system in `f64`.
///
/// Systems with a gauge freedom (the periodic pressure constant) get the last
/// gauge row replaced by `Σ p = 0`.
pub fn direct_solve<T: Real>(p: &LinearProblem<T>) -> Result<Vec<T>> {
    let mut a = p.to_dense().convert::<f64>();
    let mut b: Vec<f64> = p.rhs().iter().map(|&x| to_f64(x)).collect();
    if let Some(range) = p.gauge() {
        let row = range.end - 1;
        for j in 0..a.cols() {
            a[(row, j)] = if range.contains(&j) { 1.0 } else { 0.0 };
        }
        b[row] = 0.0;
    }
    let lu = LuFactorization::new(&a)?;
    let x = lu.solve_f64(&b);
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("direct solution"));
    }
    Ok(x.into_iter().map(cast).collect())
}
