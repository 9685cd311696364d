use alloc::vec::Vec;

use super::grid::Grid;
use super::problem::{LinearProblem, SystemAssembly};
use super::stencil;
use crate::error::{Error, Result};
use crate::scalar::{cast, Real};

/// Backward-Euler, central-space diffusion step `(I - νΔt L̃) u⁺ = u`.
#[derive(Debug, Clone)]
pub struct HeatAssembly<T> {
    grid: Grid,
    coef: T,
    rhs: Vec<T>,
}

impl<T: Real> HeatAssembly<T> {
    pub fn new(grid: &Grid, nu: f64, dt: f64, u_prev: &[T]) -> Result<Self> {
        if grid.is_periodic() {
            return Err(Error::InvalidGrid("heat step expects a Dirichlet grid".into()));
        }
        if nu < 0.0 || dt <= 0.0 {
            return Err(Error::InvalidConfig(alloc::format!("need nu >= 0 and dt > 0, got {nu}, {dt}")));
        }
        grid.check_len(u_prev.len(), grid.points())?;
        Ok(Self { grid: *grid, coef: cast(nu * dt), rhs: u_prev.to_vec() })
    }
}

impl<T: Real> SystemAssembly<T> for HeatAssembly<T> {
    fn size(&self) -> usize {
        self.grid.points()
    }

    fn input_len(&self) -> usize {
        self.grid.points()
    }

    fn apply(&self, v: &[T], out: &mut [T]) {
        stencil::laplacian(&self.grid, v, out);
        for (o, &x) in out.iter_mut().zip(v) {
            *o = x - self.coef * *o;
        }
    }

    fn apply_transpose(&self, v: &[T], out: &mut [T]) {
        self.apply(v, out);
    }

    fn diagonal(&self) -> Option<Vec<T>> {
        let h = self.grid.spacing();
        let d = T::one() + self.coef * cast::<T>(2.0 * self.grid.dim() as f64 / (h * h));
        Some(alloc::vec![d; self.size()])
    }

    fn rhs(&self) -> &[T] {
        &self.rhs
    }

    fn rhs_vjp(&self, b_bar: &[T], g_bar: &mut [T]) {
        for (g, &b) in g_bar.iter_mut().zip(b_bar) {
            *g = *g + b;
        }
    }

    fn matrix_vjp(&self, _u: &[T], _lambda: &[T], _g_bar: &mut [T]) {}

    fn matrix_depends_on_input(&self) -> bool {
        false
    }
}

/// One implicit diffusion step from `u_prev`.
pub fn assemble_heat_btcs<T: Real>(grid: &Grid, nu: f64, dt: f64, u_prev: &[T]) -> Result<LinearProblem<T>> {
    Ok(LinearProblem::new(HeatAssembly::new(grid, nu, dt, u_prev)?))
}
