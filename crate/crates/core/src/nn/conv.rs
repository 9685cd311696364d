use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{axpy, dot};
use crate::scalar::Real;

const PAD: u32 = u32::MAX;

/// Neighbor table for a `k^dim` stencil on an `n^dim` grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvPlan {
    pub points: usize,
    pub taps: usize,
    /// `nbr[p * taps + t]`: source point of tap `t` at point `p`, or padding.
    nbr: Vec<u32>,
}

impl ConvPlan {
    pub fn new(dim: usize, n: usize, kernel: usize, circular: bool) -> Self {
        let points = n.pow(dim as u32);
        let taps = kernel.pow(dim as u32);
        let half = (kernel / 2) as isize;
        let mut nbr = Vec::with_capacity(points * taps);
        let mut coord = vec![0isize; dim];
        let mut off = vec![0isize; dim];
        for p in 0..points {
            let mut rem = p;
            for a in (0..dim).rev() {
                coord[a] = (rem % n) as isize;
                rem /= n;
            }
            for t in 0..taps {
                let mut rem = t;
                for a in (0..dim).rev() {
                    off[a] = (rem % kernel) as isize - half;
                    rem /= kernel;
                }
                let mut idx = 0usize;
                let mut inside = true;
                for a in 0..dim {
                    let mut c = coord[a] + off[a];
                    if circular {
                        c = c.rem_euclid(n as isize);
                    } else if c < 0 || c >= n as isize {
                        inside = false;
                    }
                    idx = idx * n + c.max(0) as usize;
                }
                nbr.push(if inside { idx as u32 } else { PAD });
            }
        }
        Self { points, taps, nbr }
    }

    /// `cols[(ci * taps + t) * P + p] = x[ci * P + nbr(p, t)]`
    pub fn im2col<T: Real>(&self, x: &[T], channels: usize) -> Vec<T> {
        let (pn, tn) = (self.points, self.taps);
        let mut cols = vec![T::zero(); channels * tn * pn];
        for ci in 0..channels {
            let xc = &x[ci * pn..(ci + 1) * pn];
            for t in 0..tn {
                let dst = &mut cols[(ci * tn + t) * pn..(ci * tn + t + 1) * pn];
                for (p, d) in dst.iter_mut().enumerate() {
                    let s = self.nbr[p * tn + t];
                    if s != PAD {
                        *d = xc[s as usize];
                    }
                }
            }
        }
        cols
    }

    fn col2im_add<T: Real>(&self, cols: &[T], channels: usize, x_bar: &mut [T]) {
        let (pn, tn) = (self.points, self.taps);
        for ci in 0..channels {
            let xc = &mut x_bar[ci * pn..(ci + 1) * pn];
            for t in 0..tn {
                let src = &cols[(ci * tn + t) * pn..(ci * tn + t + 1) * pn];
                for (p, &v) in src.iter().enumerate() {
                    let s = self.nbr[p * tn + t];
                    if s != PAD {
                        xc[s as usize] = xc[s as usize] + v;
                    }
                }
            }
        }
    }

    /// `y[co] = b[co] + Σ_k w[co, k] cols[k]` with `k` over `cin * taps`.
    pub fn forward<T: Real>(&self, cols: &[T], w: &[T], b: &[T], cout: usize) -> Vec<T> {
        let pn = self.points;
        let kn = cols.len() / pn;
        let mut y = vec![T::zero(); cout * pn];
        for co in 0..cout {
            let yc = &mut y[co * pn..(co + 1) * pn];
            yc.iter_mut().for_each(|v| *v = b[co]);
            let wr = &w[co * kn..(co + 1) * kn];
            for (k, &wk) in wr.iter().enumerate() {
                if wk != T::zero() {
                    axpy(wk, &cols[k * pn..(k + 1) * pn], yc);
                }
            }
        }
        y
    }

    /// Accumulates weight and bias cotangents and returns the input cotangent.
    #[allow(clippy::too_many_arguments)]
    pub fn backward<T: Real>(
        &self,
        cols: &[T],
        w: &[T],
        cin: usize,
        cout: usize,
        y_bar: &[T],
        w_bar: &mut [T],
        b_bar: &mut [T],
    ) -> Vec<T> {
        let pn = self.points;
        let kn = cin * self.taps;
        let mut cols_bar = vec![T::zero(); kn * pn];
        for co in 0..cout {
            let yb = &y_bar[co * pn..(co + 1) * pn];
            b_bar[co] = b_bar[co] + yb.iter().copied().sum::<T>();
            for k in 0..kn {
                let col = &cols[k * pn..(k + 1) * pn];
                w_bar[co * kn + k] = w_bar[co * kn + k] + dot(yb, col);
                axpy(w[co * kn + k], yb, &mut cols_bar[k * pn..(k + 1) * pn]);
            }
        }
        let mut x_bar = vec![T::zero(); cin * pn];
        self.col2im_add(&cols_bar, cin, &mut x_bar);
        x_bar
    }
}
