use alloc::format;
use alloc::vec::Vec;

use super::grid::Grid;
use super::problem::{LinearProblem, SystemAssembly};
use super::stencil;
use crate::error::{Error, Result};
use crate::scalar::{cast, Real};

/// `L̃₁ u = b` with `b = -Σᵢ θᵢ sin(2iπx)` sampled at the interior nodes.
#[derive(Debug, Clone)]
pub struct PoissonAssembly<T> {
    grid: Grid,
    /// `modes[i][j] = sin(2(i+1)π x_j)`
    modes: Vec<Vec<T>>,
    rhs: Vec<T>,
}

impl<T: Real> PoissonAssembly<T> {
    pub fn new(grid: &Grid, theta: &[T]) -> Result<Self> {
        if grid.dim() != 1 || grid.is_periodic() {
            return Err(Error::InvalidGrid(format!(
                "Poisson needs a 1D Dirichlet grid, got dim {} {:?}",
                grid.dim(),
                grid.boundary()
            )));
        }
        if theta.is_empty() {
            return Err(Error::InvalidConfig("Poisson needs at least one mode".into()));
        }
        let n = grid.n();
        let modes: Vec<Vec<T>> = (1..=theta.len())
            .map(|i| {
                (0..n)
                    .map(|j| cast(libm::sin(2.0 * i as f64 * core::f64::consts::PI * grid.node(j))))
                    .collect()
            })
            .collect();
        let mut rhs = alloc::vec![T::zero(); n];
        for (m, &t) in modes.iter().zip(theta) {
            for (r, &s) in rhs.iter_mut().zip(m) {
                *r = *r - t * s;
            }
        }
        Ok(Self { grid: *grid, modes, rhs })
    }
}

impl<T: Real> SystemAssembly<T> for PoissonAssembly<T> {
    fn size(&self) -> usize {
        self.grid.n()
    }

    fn input_len(&self) -> usize {
        self.modes.len()
    }

    fn apply(&self, v: &[T], out: &mut [T]) {
        stencil::laplacian(&self.grid, v, out);
    }

    fn apply_transpose(&self, v: &[T], out: &mut [T]) {
        stencil::laplacian(&self.grid, v, out);
    }

    fn diagonal(&self) -> Option<Vec<T>> {
        let h = self.grid.spacing();
        Some(alloc::vec![cast(-2.0 / (h * h)); self.grid.n()])
    }

    fn rhs(&self) -> &[T] {
        &self.rhs
    }

    fn rhs_vjp(&self, b_bar: &[T], g_bar: &mut [T]) {
        for (g, m) in g_bar.iter_mut().zip(&self.modes) {
            let s: T = m.iter().zip(b_bar).map(|(&a, &b)| a * b).sum();
            *g = *g - s;
        }
    }

    fn matrix_vjp(&self, _u: &[T], _lambda: &[T], _g_bar: &mut [T]) {}

    fn matrix_depends_on_input(&self) -> bool {
        false
    }
}

/// Poisson inverse-problem system for load amplitudes `theta`.
pub fn assemble_poisson_1d<T: Real>(grid: &Grid, theta: &[T]) -> Result<LinearProblem<T>> {
    Ok(LinearProblem::new(PoissonAssembly::new(grid, theta)?))
}
