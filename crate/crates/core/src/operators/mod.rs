//! Matrix-free linear systems from finite-difference discretizations.
//!
//! Every scenario provides an assembly (`A = Λ(g)`, `b = β(g)`) implementing
//! [`SystemAssembly`]; [`LinearProblem`] wraps it with transposition,
//! negation and right-hand-side replacement for adjoint solves.

mod burgers;
mod grid;
mod heat;
mod navier_stokes;
mod poisson;
mod problem;
pub mod stencil;

pub use burgers::{assemble_burgers_oseen, BurgersAssembly};
pub use grid::{Boundary, Grid};
pub use heat::{assemble_heat_btcs, HeatAssembly};
pub use navier_stokes::{assemble_navier_stokes_coupled, NavierStokesAssembly};
pub use poisson::{assemble_poisson_1d, PoissonAssembly};
pub use problem::{LinearProblem, SystemAssembly};

use crate::error::Result;
use crate::scalar::Real;

/// A time-stepping physics whose next state solves a system assembled from
/// the current state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Physics {
    Heat { grid: Grid, nu: f64, dt: f64 },
    Burgers { grid: Grid, nu: f64, dt: f64 },
    NavierStokes { grid: Grid, nu: f64, dt: f64 },
}

impl Physics {
    pub fn grid(&self) -> &Grid {
        match self {
            Physics::Heat { grid, .. } | Physics::Burgers { grid, .. } | Physics::NavierStokes { grid, .. } => grid,
        }
    }

    pub fn state_len(&self) -> usize {
        self.grid().dofs()
    }

    pub fn assemble<T: Real>(&self, state: &[T]) -> Result<LinearProblem<T>> {
        match *self {
            Physics::Heat { grid, nu, dt } => assemble_heat_btcs(&grid, nu, dt, state),
            Physics::Burgers { grid, nu, dt } => assemble_burgers_oseen(&grid, nu, dt, state),
            Physics::NavierStokes { grid, nu, dt } => assemble_navier_stokes_coupled(&grid, nu, dt, state),
        }
    }
}
