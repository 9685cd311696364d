use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use super::grid::Grid;
use super::problem::{LinearProblem, SystemAssembly};
use super::stencil::{self, Upwind};
use crate::error::{Error, Result};
use crate::scalar::{cast, Real};

/// Coupled velocity-pressure step on a biperiodic staggered grid:
///
/// ```text
/// [ V(W₁)   0      G₁ ] [u₁]   [u₁ᵗ]
/// [ 0       V(W₂)  G₂ ] [u₂] = [u₂ᵗ]
/// [ D₁      D₂     0  ] [p ]   [ 0 ]
/// ```
///
/// with `V(W) = I + Δt Γ₂(W) - Δt ν L₂`, `D_a = F_a`, `G_a = B_a`,
/// `W₁ = (u₁, M₁u₂)` and `W₂ = (M₂u₁, u₂)`.
#[derive(Debug, Clone)]
pub struct NavierStokesAssembly<T> {
    grid: Grid,
    dt: T,
    diffusion: T,
    /// Winds at `u1` locations, per axis.
    w1: [Vec<T>; 2],
    /// Winds at `u2` locations, per axis.
    w2: [Vec<T>; 2],
    up1: Upwind<T>,
    up2: Upwind<T>,
    rhs: Vec<T>,
}

impl<T: Real> NavierStokesAssembly<T> {
    pub fn new(grid: &Grid, nu: f64, dt: f64, state: &[T]) -> Result<Self> {
        if !grid.is_staggered() || !grid.is_periodic() {
            return Err(Error::InvalidGrid("Navier-Stokes step expects a staggered periodic grid".into()));
        }
        if nu < 0.0 || dt <= 0.0 {
            return Err(Error::InvalidConfig(alloc::format!("need nu >= 0 and dt > 0, got {nu}, {dt}")));
        }
        grid.check_len(state.len(), grid.dofs())?;
        let m = grid.points();
        let (u1, u2) = (&state[..m], &state[m..2 * m]);
        let mut m1u2 = vec![T::zero(); m];
        stencil::interp_to_u1(grid, u2, &mut m1u2);
        let mut m2u1 = vec![T::zero(); m];
        stencil::interp_to_u2(grid, u1, &mut m2u1);
        let up1 = Upwind::new(grid, &[u1, &m1u2]);
        let up2 = Upwind::new(grid, &[&m2u1, u2]);
        let mut rhs = vec![T::zero(); 3 * m];
        rhs[..2 * m].copy_from_slice(&state[..2 * m]);
        Ok(Self {
            grid: *grid,
            dt: cast(dt),
            diffusion: cast(nu * dt),
            w1: [u1.to_vec(), m1u2],
            w2: [m2u1, u2.to_vec()],
            up1,
            up2,
            rhs,
        })
    }

    fn velocity_block(&self, up: &Upwind<T>, transpose: bool, v: &[T], out: &mut [T]) {
        stencil::laplacian(&self.grid, v, out);
        for (o, &x) in out.iter_mut().zip(v) {
            *o = x - self.diffusion * *o;
        }
        if transpose {
            up.apply_transpose_add(self.dt, v, out);
        } else {
            up.apply_add(self.dt, v, out);
        }
    }

    fn apply_impl(&self, transpose: bool, v: &[T], out: &mut [T]) {
        let g = &self.grid;
        let m = g.points();
        let (v1, rest) = v.split_at(m);
        let (v2, v3) = rest.split_at(m);
        let (o1, rest) = out.split_at_mut(m);
        let (o2, o3) = rest.split_at_mut(m);
        let mut tmp = vec![T::zero(); m];
        let mut tmp2 = vec![T::zero(); m];

        self.velocity_block(&self.up1, transpose, v1, o1);
        self.velocity_block(&self.up2, transpose, v2, o2);
        if transpose {
            // [Dᵀ] in the velocity rows, [Gᵀ] in the pressure row.
            stencil::forward_diff_transpose(g, 0, v3, &mut tmp);
            add(o1, &tmp);
            stencil::forward_diff_transpose(g, 1, v3, &mut tmp);
            add(o2, &tmp);
            stencil::backward_diff_transpose(g, 0, v1, &mut tmp);
            stencil::backward_diff_transpose(g, 1, v2, &mut tmp2);
        } else {
            stencil::backward_diff(g, 0, v3, &mut tmp);
            add(o1, &tmp);
            stencil::backward_diff(g, 1, v3, &mut tmp);
            add(o2, &tmp);
            stencil::forward_diff(g, 0, v1, &mut tmp);
            stencil::forward_diff(g, 1, v2, &mut tmp2);
        }
        for ((o, &a), &b) in o3.iter_mut().zip(&tmp).zip(&tmp2) {
            *o = a + b;
        }
    }
}

fn add<T: Real>(dst: &mut [T], src: &[T]) {
    for (d, &s) in dst.iter_mut().zip(src) {
        *d = *d + s;
    }
}

impl<T: Real> SystemAssembly<T> for NavierStokesAssembly<T> {
    fn size(&self) -> usize {
        self.grid.dofs()
    }

    fn input_len(&self) -> usize {
        self.grid.dofs()
    }

    fn apply(&self, v: &[T], out: &mut [T]) {
        self.apply_impl(false, v, out);
    }

    fn apply_transpose(&self, v: &[T], out: &mut [T]) {
        self.apply_impl(true, v, out);
    }

    fn diagonal(&self) -> Option<Vec<T>> {
        let m = self.grid.points();
        let h = self.grid.spacing();
        let base = T::one() + self.diffusion * cast::<T>(4.0 / (h * h));
        let mut d = vec![base; 3 * m];
        self.up1.diagonal_add(self.dt, &mut d[..m]);
        self.up2.diagonal_add(self.dt, &mut d[m..2 * m]);
        d[2 * m..].iter_mut().for_each(|x| *x = T::zero());
        Some(d)
    }

    fn rhs(&self) -> &[T] {
        &self.rhs
    }

    fn rhs_vjp(&self, b_bar: &[T], g_bar: &mut [T]) {
        let m2 = 2 * self.grid.points();
        add(&mut g_bar[..m2], &b_bar[..m2]);
    }

    fn matrix_vjp(&self, u: &[T], lambda: &[T], g_bar: &mut [T]) {
        let g = &self.grid;
        let m = g.points();
        let mut w1_bar = [vec![T::zero(); m], vec![T::zero(); m]];
        let mut w2_bar = [vec![T::zero(); m], vec![T::zero(); m]];
        for (a, (pb, nb)) in self.up1.coefficient_vjp(self.dt, &u[..m], &lambda[..m]).iter().enumerate() {
            Upwind::wind_vjp(g, a, &self.w1[a], pb, nb, &mut w1_bar[a]);
        }
        for (a, (pb, nb)) in self.up2.coefficient_vjp(self.dt, &u[m..2 * m], &lambda[m..2 * m]).iter().enumerate() {
            Upwind::wind_vjp(g, a, &self.w2[a], pb, nb, &mut w2_bar[a]);
        }
        self.route_wind_cotangents(&w1_bar, &w2_bar, g_bar);
    }

    fn diagonal_vjp(&self, d_bar: &[T], g_bar: &mut [T]) {
        let g = &self.grid;
        let m = g.points();
        let c = self.dt * cast::<T>(1.0 / g.spacing());
        let mut w1_bar = [vec![T::zero(); m], vec![T::zero(); m]];
        let mut w2_bar = [vec![T::zero(); m], vec![T::zero(); m]];
        for (block, (winds, bars)) in [(&self.w1, &mut w1_bar), (&self.w2, &mut w2_bar)].into_iter().enumerate() {
            let db = &d_bar[block * m..(block + 1) * m];
            let pb: Vec<T> = db.iter().map(|&d| c * d).collect();
            let nb: Vec<T> = db.iter().map(|&d| -c * d).collect();
            for a in 0..2 {
                Upwind::wind_vjp(g, a, &winds[a], &pb, &nb, &mut bars[a]);
            }
        }
        self.route_wind_cotangents(&w1_bar, &w2_bar, g_bar);
    }

    fn matrix_depends_on_input(&self) -> bool {
        true
    }

    fn gauge(&self) -> Option<Range<usize>> {
        let m = self.grid.points();
        Some(2 * m..3 * m)
    }
}

impl<T: Real> NavierStokesAssembly<T> {
    fn route_wind_cotangents(&self, w1_bar: &[Vec<T>; 2], w2_bar: &[Vec<T>; 2], g_bar: &mut [T]) {
        let g = &self.grid;
        let m = g.points();
        let mut tmp = vec![T::zero(); m];
        add(&mut g_bar[..m], &w1_bar[0]);
        stencil::interp_to_u1_transpose(g, &w1_bar[1], &mut tmp);
        add(&mut g_bar[m..2 * m], &tmp);
        stencil::interp_to_u2_transpose(g, &w2_bar[0], &mut tmp);
        add(&mut g_bar[..m], &tmp);
        add(&mut g_bar[m..2 * m], &w2_bar[1]);
    }
}

/// One coupled Navier-Stokes step from `state = (u1, u2, p)`.
pub fn assemble_navier_stokes_coupled<T: Real>(
    grid: &Grid,
    nu: f64,
    dt: f64,
    state: &[T],
) -> Result<LinearProblem<T>> {
    Ok(LinearProblem::new(NavierStokesAssembly::new(grid, nu, dt, state)?))
}
