//! Finite-difference building blocks on a [`Grid`], each with its transpose.
//!
//! All routines overwrite `out`. Off-grid neighbors of Dirichlet grids read as
//! zero; periodic grids wrap around.

use alloc::vec;
use alloc::vec::Vec;

use super::grid::Grid;
use crate::scalar::{cast, Real};

#[inline]
fn at<T: Real>(x: &[T], idx: Option<usize>) -> T {
    idx.map_or(T::zero(), |i| x[i])
}

/// Calls `f(i, prev, next)` for every node with its neighbors along `axis`,
/// walking grid lines so no index arithmetic beyond additions is needed.
#[inline(always)]
fn sweep(g: &Grid, axis: usize, mut f: impl FnMut(usize, Option<usize>, Option<usize>)) {
    let n = g.n();
    let s = g.stride(axis);
    let periodic = g.is_periodic();
    for block in (0..g.points()).step_by(s * n) {
        for base in block..block + s {
            let last = base + (n - 1) * s;
            for c in 0..n {
                let i = base + c * s;
                let prev = if c > 0 { Some(i - s) } else if periodic { Some(last) } else { None };
                let next = if c + 1 < n { Some(i + s) } else if periodic { Some(base) } else { None };
                f(i, prev, next);
            }
        }
    }
}

/// `out[i] = x[i + offset * e_axis]`.
pub fn shift<T: Real>(g: &Grid, axis: usize, offset: isize, x: &[T], out: &mut [T]) {
    match offset {
        1 => sweep(g, axis, |i, _, ip| out[i] = at(x, ip)),
        -1 => sweep(g, axis, |i, im, _| out[i] = at(x, im)),
        _ => {
            for (i, o) in out.iter_mut().enumerate() {
                *o = at(x, g.neighbor(i, axis, offset));
            }
        }
    }
}

/// Second-order central Laplacian summed over all axes.
pub fn laplacian<T: Real>(g: &Grid, x: &[T], out: &mut [T]) {
    let inv = cast::<T>(1.0 / (g.spacing() * g.spacing()));
    let two = cast::<T>(2.0);
    out.iter_mut().for_each(|o| *o = T::zero());
    for a in 0..g.dim() {
        sweep(g, a, |i, im, ip| out[i] = out[i] + at(x, im) + at(x, ip) - two * x[i]);
    }
    out.iter_mut().for_each(|o| *o = *o * inv);
}

/// `(x[i+1] - x[i]) / dx` along `axis`.
pub fn forward_diff<T: Real>(g: &Grid, axis: usize, x: &[T], out: &mut [T]) {
    let inv = cast::<T>(1.0 / g.spacing());
    sweep(g, axis, |i, _, ip| out[i] = (at(x, ip) - x[i]) * inv);
}

/// `(x[i] - x[i-1]) / dx` along `axis`.
pub fn backward_diff<T: Real>(g: &Grid, axis: usize, x: &[T], out: &mut [T]) {
    let inv = cast::<T>(1.0 / g.spacing());
    sweep(g, axis, |i, im, _| out[i] = (x[i] - at(x, im)) * inv);
}

pub fn forward_diff_transpose<T: Real>(g: &Grid, axis: usize, y: &[T], out: &mut [T]) {
    let inv = cast::<T>(1.0 / g.spacing());
    sweep(g, axis, |i, im, _| out[i] = (at(y, im) - y[i]) * inv);
}

pub fn backward_diff_transpose<T: Real>(g: &Grid, axis: usize, y: &[T], out: &mut [T]) {
    let inv = cast::<T>(1.0 / g.spacing());
    sweep(g, axis, |i, _, ip| out[i] = (y[i] - at(y, ip)) * inv);
}

/// First-order upwind convection `Γ(w) = Σ_a diag(pos_a) B_a + diag(neg_a) F_a`.
///
/// `pos_a[i] = max((w_a[i-1] + w_a[i]) / 2, 0)` and
/// `neg_a[i] = min((w_a[i] + w_a[i+1]) / 2, 0)` along axis `a`.
#[derive(Debug, Clone)]
pub struct Upwind<T> {
    grid: Grid,
    pos: Vec<Vec<T>>,
    neg: Vec<Vec<T>>,
}

impl<T: Real> Upwind<T> {
    /// `winds[a]` is the wind component along axis `a`.
    pub fn new(grid: &Grid, winds: &[&[T]]) -> Self {
        assert_eq!(winds.len(), grid.dim());
        let half = cast::<T>(0.5);
        let mut pos = Vec::with_capacity(grid.dim());
        let mut neg = Vec::with_capacity(grid.dim());
        for (a, w) in winds.iter().enumerate() {
            let mut p = vec![T::zero(); w.len()];
            let mut q = vec![T::zero(); w.len()];
            sweep(grid, a, |i, im, ip| {
                p[i] = ((at(w, im) + w[i]) * half).max(T::zero());
                q[i] = ((w[i] + at(w, ip)) * half).min(T::zero());
            });
            pos.push(p);
            neg.push(q);
        }
        Self { grid: *grid, pos, neg }
    }

    pub fn positive(&self, axis: usize) -> &[T] {
        &self.pos[axis]
    }

    pub fn negative(&self, axis: usize) -> &[T] {
        &self.neg[axis]
    }

    /// `out += scale * Γ v`
    pub fn apply_add(&self, scale: T, v: &[T], out: &mut [T]) {
        let g = &self.grid;
        let c = scale * cast::<T>(1.0 / g.spacing());
        for a in 0..g.dim() {
            let (p, q) = (&self.pos[a], &self.neg[a]);
            sweep(g, a, |i, im, ip| {
                let back = v[i] - at(v, im);
                let fwd = at(v, ip) - v[i];
                out[i] = out[i] + c * (p[i] * back + q[i] * fwd);
            });
        }
    }

    /// `out += scale * Γᵀ v`
    pub fn apply_transpose_add(&self, scale: T, v: &[T], out: &mut [T]) {
        let g = &self.grid;
        let c = scale * cast::<T>(1.0 / g.spacing());
        for a in 0..g.dim() {
            let (p, q) = (&self.pos[a], &self.neg[a]);
            // Bᵀ(p v): (p v)[i] - (p v)[i+1]; Fᵀ(q v): (q v)[i-1] - (q v)[i]
            sweep(g, a, |i, im, ip| {
                let b = p[i] * v[i] - ip.map_or(T::zero(), |j| p[j] * v[j]);
                let f = im.map_or(T::zero(), |j| q[j] * v[j]) - q[i] * v[i];
                out[i] = out[i] + c * (b + f);
            });
        }
    }

    /// `out += scale * diag(Γ)`
    pub fn diagonal_add(&self, scale: T, out: &mut [T]) {
        let c = scale * cast::<T>(1.0 / self.grid.spacing());
        for a in 0..self.grid.dim() {
            for (i, o) in out.iter_mut().enumerate() {
                *o = *o + c * (self.pos[a][i] - self.neg[a][i]);
            }
        }
    }

    /// Cotangents on `pos_a`, `neg_a` of `λᵀ (scale Γ) u`, per axis.
    pub fn coefficient_vjp(&self, scale: T, u: &[T], lambda: &[T]) -> Vec<(Vec<T>, Vec<T>)> {
        let g = &self.grid;
        let c = scale * cast::<T>(1.0 / g.spacing());
        (0..g.dim())
            .map(|a| {
                let mut pb = vec![T::zero(); u.len()];
                let mut nb = vec![T::zero(); u.len()];
                sweep(g, a, |i, im, ip| {
                    pb[i] = c * lambda[i] * (u[i] - at(u, im));
                    nb[i] = c * lambda[i] * (at(u, ip) - u[i]);
                });
                (pb, nb)
            })
            .collect()
    }

    /// Accumulates into `w_bar` the cotangent of the wind along `axis` given
    /// cotangents on the split coefficients of that axis.
    pub fn wind_vjp(grid: &Grid, axis: usize, wind: &[T], pos_bar: &[T], neg_bar: &[T], w_bar: &mut [T]) {
        let half = cast::<T>(0.5);
        sweep(grid, axis, |i, im, ip| {
            let a = (at(wind, im) + wind[i]) * half;
            if a > T::zero() {
                let s = half * pos_bar[i];
                w_bar[i] = w_bar[i] + s;
                if let Some(j) = im {
                    w_bar[j] = w_bar[j] + s;
                }
            }
            let a = (wind[i] + at(wind, ip)) * half;
            if a < T::zero() {
                let s = half * neg_bar[i];
                w_bar[i] = w_bar[i] + s;
                if let Some(j) = ip {
                    w_bar[j] = w_bar[j] + s;
                }
            }
        });
    }
}

const TO_U1: [(isize, isize); 4] = [(-1, 0), (0, 0), (-1, 1), (0, 1)];
const TO_U2: [(isize, isize); 4] = [(0, -1), (1, -1), (0, 0), (1, 0)];

fn average4<T: Real>(g: &Grid, offsets: &[(isize, isize); 4], sign: isize, x: &[T], out: &mut [T]) {
    let quarter = cast::<T>(0.25);
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = T::zero();
        for &(di, dj) in offsets {
            let k = g.neighbor(i, 0, sign * di).and_then(|k| g.neighbor(k, 1, sign * dj));
            acc = acc + at(x, k);
        }
        *o = acc * quarter;
    }
}

/// Bilinear interpolation of `u2` (horizontal faces) onto `u1` locations.
pub fn interp_to_u1<T: Real>(g: &Grid, u2: &[T], out: &mut [T]) {
    average4(g, &TO_U1, 1, u2, out);
}

pub fn interp_to_u1_transpose<T: Real>(g: &Grid, y: &[T], out: &mut [T]) {
    average4(g, &TO_U1, -1, y, out);
}

/// Bilinear interpolation of `u1` (vertical faces) onto `u2` locations.
pub fn interp_to_u2<T: Real>(g: &Grid, u1: &[T], out: &mut [T]) {
    average4(g, &TO_U2, 1, u1, out);
}

pub fn interp_to_u2_transpose<T: Real>(g: &Grid, y: &[T], out: &mut [T]) {
    average4(g, &TO_U2, -1, y, out);
}
