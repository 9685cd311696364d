use alloc::vec;
use alloc::vec::Vec;

use super::grid::Grid;
use super::problem::{LinearProblem, SystemAssembly};
use super::stencil::{self, Upwind};
use crate::error::{Error, Result};
use crate::scalar::{cast, Real};

/// Oseen-linearized Burgers step `(I + Δt Γ₁(u) - Δt ν L₁) u⁺ = u` on a
/// periodic 1D grid.
#[derive(Debug, Clone)]
pub struct BurgersAssembly<T> {
    grid: Grid,
    dt: T,
    diffusion: T,
    upwind: Upwind<T>,
    wind: Vec<T>,
}

impl<T: Real> BurgersAssembly<T> {
    pub fn new(grid: &Grid, nu: f64, dt: f64, u_prev: &[T]) -> Result<Self> {
        if grid.dim() != 1 || !grid.is_periodic() {
            return Err(Error::InvalidGrid("Burgers step expects a periodic 1D grid".into()));
        }
        if nu < 0.0 || dt <= 0.0 {
            return Err(Error::InvalidConfig(alloc::format!("need nu >= 0 and dt > 0, got {nu}, {dt}")));
        }
        grid.check_len(u_prev.len(), grid.points())?;
        Ok(Self {
            grid: *grid,
            dt: cast(dt),
            diffusion: cast(nu * dt),
            upwind: Upwind::new(grid, &[u_prev]),
            wind: u_prev.to_vec(),
        })
    }

    pub fn upwind(&self) -> &Upwind<T> {
        &self.upwind
    }
}

impl<T: Real> SystemAssembly<T> for BurgersAssembly<T> {
    fn size(&self) -> usize {
        self.grid.points()
    }

    fn input_len(&self) -> usize {
        self.grid.points()
    }

    fn apply(&self, v: &[T], out: &mut [T]) {
        stencil::laplacian(&self.grid, v, out);
        for (o, &x) in out.iter_mut().zip(v) {
            *o = x - self.diffusion * *o;
        }
        self.upwind.apply_add(self.dt, v, out);
    }

    fn apply_transpose(&self, v: &[T], out: &mut [T]) {
        stencil::laplacian(&self.grid, v, out);
        for (o, &x) in out.iter_mut().zip(v) {
            *o = x - self.diffusion * *o;
        }
        self.upwind.apply_transpose_add(self.dt, v, out);
    }

    fn diagonal(&self) -> Option<Vec<T>> {
        let h = self.grid.spacing();
        let base = T::one() + self.diffusion * cast::<T>(2.0 / (h * h));
        let mut d = vec![base; self.size()];
        self.upwind.diagonal_add(self.dt, &mut d);
        Some(d)
    }

    fn rhs(&self) -> &[T] {
        &self.wind
    }

    fn rhs_vjp(&self, b_bar: &[T], g_bar: &mut [T]) {
        for (g, &b) in g_bar.iter_mut().zip(b_bar) {
            *g = *g + b;
        }
    }

    fn matrix_vjp(&self, u: &[T], lambda: &[T], g_bar: &mut [T]) {
        let cot = self.upwind.coefficient_vjp(self.dt, u, lambda);
        let (pb, nb) = &cot[0];
        Upwind::wind_vjp(&self.grid, 0, &self.wind, pb, nb, g_bar);
    }

    fn diagonal_vjp(&self, d_bar: &[T], g_bar: &mut [T]) {
        let c = self.dt * cast::<T>(1.0 / self.grid.spacing());
        let pb: Vec<T> = d_bar.iter().map(|&d| c * d).collect();
        let nb: Vec<T> = d_bar.iter().map(|&d| -c * d).collect();
        Upwind::wind_vjp(&self.grid, 0, &self.wind, &pb, &nb, g_bar);
    }

    fn matrix_depends_on_input(&self) -> bool {
        true
    }
}

/// One linearized Burgers step from `u_prev`.
pub fn assemble_burgers_oseen<T: Real>(grid: &Grid, nu: f64, dt: f64, u_prev: &[T]) -> Result<LinearProblem<T>> {
    Ok(LinearProblem::new(BurgersAssembly::new(grid, nu, dt, u_prev)?))
}
