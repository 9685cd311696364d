//! Losses, optimizers, schedules, minibatching and composed training steps.

pub mod batch;
pub mod loss;
pub mod optim;
pub mod pipeline;

pub use batch::minibatches;
pub use loss::{mse, nmse, relative_sq_error};
pub use optim::{Optimizer, OptimizerKind, Schedule};
pub use pipeline::{emulator_validation, rollout, CorrectorChain, MixedChain, PoissonInverse, SolverSetup, StepOutcome, CONVERGED_CAP};
