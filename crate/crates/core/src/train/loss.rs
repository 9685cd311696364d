use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::scalar::{cast, to_f64, Real};

/// `‖pred − ref‖² / ‖ref‖²` and its gradient `2(pred − ref)/‖ref‖²`.
pub fn nmse<T: Real>(pred: &[T], reference: &[T]) -> Result<(f64, Vec<T>)> {
    check(pred, reference)?;
    let den: f64 = reference.iter().map(|&r| to_f64(r) * to_f64(r)).sum();
    if den == 0.0 {
        return Err(Error::ZeroReference);
    }
    let num: f64 = pred.iter().zip(reference).map(|(&p, &r)| sq(to_f64(p) - to_f64(r))).sum();
    let scale = cast::<T>(2.0 / den);
    let grad = pred.iter().zip(reference).map(|(&p, &r)| scale * (p - r)).collect();
    Ok((num / den, grad))
}

/// Mean over entries of `(pred − ref)²` and its gradient.
pub fn mse<T: Real>(pred: &[T], reference: &[T]) -> Result<(f64, Vec<T>)> {
    check(pred, reference)?;
    let n = pred.len().max(1) as f64;
    let val: f64 = pred.iter().zip(reference).map(|(&p, &r)| sq(to_f64(p) - to_f64(r))).sum::<f64>() / n;
    let scale = cast::<T>(2.0 / n);
    let grad = pred.iter().zip(reference).map(|(&p, &r)| scale * (p - r)).collect();
    Ok((val, grad))
}

/// Squared relative error `(‖pred − ref‖ / ‖ref‖)²`.
pub fn relative_sq_error<T: Real>(pred: &[T], reference: &[T]) -> Result<f64> {
    Ok(nmse(pred, reference)?.0)
}

fn check<T>(a: &[T], b: &[T]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch { expected: b.len(), got: a.len() });
    }
    Ok(())
}

fn sq(x: f64) -> f64 {
    x * x
}
