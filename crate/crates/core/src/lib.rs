//! Core numerics for training neural networks through iterative linear solvers.
//!
//! The crate is `no_std` (with `alloc`) and contains everything that is pure
//! computation:
//!
//! - [`operators`]: matrix-free assembly of the linear systems produced by
//!   finite-difference discretizations (Poisson, BTCS heat, Oseen-linearized
//!   Burgers, coupled staggered Navier-Stokes), including transposes and the
//!   vector-Jacobian products of the assembly routines.
//! - [`solvers`]: Jacobi, steepest descent, restarted GMRES and a dense LU
//!   reference solver, all terminated by an iteration cap and a relative
//!   residual tolerance.
//! - [`adjoint`]: reverse-mode derivatives of a truncated solve, either by an
//!   adjoint (transposed) solve or by unrolling the stored iterates.
//! - [`nn`]: fully connected and convolutional residual networks with exact
//!   reverse-mode gradients.
//! - [`train`]: losses, optimizers, learning-rate schedules, minibatching and
//!   the composed training steps.
//! - [`refine`]: the plateau-driven controller that decides when to raise the
//!   solver iteration budget.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod adjoint;
pub mod error;
pub mod linalg;
pub mod nn;
pub mod operators;
pub mod refine;
pub mod scalar;
pub mod solvers;
pub mod train;

pub use error::{Error, Result};
pub use scalar::Real;
