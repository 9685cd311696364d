//! Composed forward/backward passes through network, physics and loss.

use alloc::vec;
use alloc::vec::Vec;

use crate::adjoint::{solve_with_vjp, DiffMode};
use crate::error::{Error, Result};
use crate::nn::Network;
use crate::operators::{assemble_poisson_1d, Grid, LinearProblem, Physics};
use crate::scalar::{cast, to_f64, Real};
use crate::solvers::{solve, SolveConfig, SolverKind};
use crate::train::loss::{mse, nmse};

/// Iteration cap standing in for "run to tolerance".
pub const CONVERGED_CAP: usize = 1_000_000;

/// How the truncated physics solve is executed and differentiated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSetup {
    pub kind: SolverKind,
    pub mode: DiffMode,
    pub tolerance: f64,
    pub gmres_restart: usize,
}

impl SolverSetup {
    pub fn new(kind: SolverKind, mode: DiffMode) -> Self {
        Self { kind, mode, tolerance: 1e-5, gmres_restart: 20 }
    }

    pub fn config(&self, k: usize) -> SolveConfig {
        SolveConfig { max_iterations: k, tolerance: self.tolerance, gmres_restart: self.gmres_restart, store_iterates: false }
    }

    /// Steepest descent needs a positive definite operator; Poisson systems
    /// are negative definite and get flipped. Jacobi iterates are unchanged by
    /// the flip.
    fn orient<T: Real>(&self, p: LinearProblem<T>, negative_definite: bool) -> LinearProblem<T> {
        if negative_definite && self.kind == SolverKind::SteepestDescent {
            p.negated()
        } else {
            p
        }
    }
}

/// Loss, parameter gradient and work spent by one differentiated step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome<T> {
    pub loss: f64,
    pub grad: Vec<T>,
    /// Charged budget of the update step: `K` per physics solve in the
    /// graph, independent of the batch size.
    pub budget_iterations: usize,
    /// Iterations actually run by the primal solves (early exit included).
    pub primal_iterations: usize,
    pub adjoint_iterations: usize,
}

/// Inverse problem: recover the load coefficients `θ` of a 1D Poisson
/// system from the observed solution.
#[derive(Debug, Clone)]
pub struct PoissonInverse<T: Real> {
    pub grid: Grid,
    pub reference: Vec<T>,
    pub theta_ref: Vec<f64>,
    pub solver: SolverSetup,
}

impl<T: Real> PoissonInverse<T> {
    /// Builds the observation by running the configured solver at
    /// `theta_ref` to its tolerance, so that `theta_ref` is the exact
    /// minimizer of the converged problem.
    pub fn new(grid: Grid, theta_ref: &[f64], solver: SolverSetup) -> Result<Self> {
        let mut inv = Self { grid, reference: Vec::new(), theta_ref: theta_ref.to_vec(), solver };
        let theta: Vec<T> = theta_ref.iter().map(|&t| cast(t)).collect();
        inv.reference = solve(solver.kind, &inv.problem(&theta)?, &solver.config(CONVERGED_CAP))?.solution;
        Ok(inv)
    }

    /// Iterations the configured solver needs to reach its tolerance at `theta`.
    pub fn iterations_to_converge(&self, theta: &[T]) -> Result<usize> {
        Ok(solve(self.solver.kind, &self.problem(theta)?, &self.solver.config(CONVERGED_CAP))?.iterations_used)
    }

    pub fn problem(&self, theta: &[T]) -> Result<LinearProblem<T>> {
        Ok(self.solver.orient(assemble_poisson_1d(&self.grid, theta)?, true))
    }

    /// `½ · mean((u_K(θ) − u_r)²)` and its gradient in `θ`.
    pub fn loss_and_grad(&self, theta: &[T], k: usize) -> Result<StepOutcome<T>> {
        let p = self.problem(theta)?;
        let vjp = solve_with_vjp(&p, self.solver.kind, &self.solver.config(k), self.solver.mode)?;
        let u = vjp.solution();
        let (m, g) = mse(u, &self.reference)?;
        let half = cast::<T>(0.5);
        let u_bar: Vec<T> = g.into_iter().map(|x| half * x).collect();
        let pb = vjp.pullback(&u_bar)?;
        Ok(StepOutcome {
            loss: 0.5 * m,
            grad: pb.g_bar,
            budget_iterations: k,
            primal_iterations: vjp.primal.iterations_used,
            adjoint_iterations: pb.adjoint_iterations,
        })
    }

    /// `‖θ − θ_r‖ / ‖θ_r‖`
    pub fn suboptimality(&self, theta: &[T]) -> f64 {
        let num: f64 = theta.iter().zip(&self.theta_ref).map(|(&a, &b)| sq(to_f64(a) - b)).sum();
        let den: f64 = self.theta_ref.iter().map(|b| b * b).sum();
        libm::sqrt(num / den)
    }
}

/// Network predicts one step, the truncated physics advances the next, and
/// the loss compares against the converged second step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedChain {
    pub physics: Physics,
    pub solver: SolverSetup,
}

impl MixedChain {
    /// Mean nMSE over the batch of `(u⁰, u²_ref)` pairs and its gradient.
    pub fn loss_and_grad<T: Real>(&self, net: &Network<T>, batch: &[(&[T], &[T])], k: usize) -> Result<StepOutcome<T>> {
        if batch.is_empty() {
            return Err(Error::InvalidConfig("empty batch".into()));
        }
        let inv = cast::<T>(1.0 / batch.len() as f64);
        let mut grad = vec![T::zero(); net.param_count()];
        let mut out = StepOutcome { loss: 0.0, grad: Vec::new(), budget_iterations: 0, primal_iterations: 0, adjoint_iterations: 0 };
        for &(u0, target) in batch {
            let (u1, tape) = net.forward_tape(u0)?;
            let p = self.physics.assemble(&u1)?;
            let vjp = solve_with_vjp(&p, self.solver.kind, &self.solver.config(k), self.solver.mode)?;
            let (l, cot) = nmse(vjp.solution(), target)?;
            let cot: Vec<T> = cot.into_iter().map(|c| c * inv).collect();
            let pb = vjp.pullback(&cot)?;
            net.backward(&tape, &pb.g_bar, &mut grad)?;
            out.loss += l / batch.len() as f64;
            out.primal_iterations += vjp.primal.iterations_used;
            out.adjoint_iterations += pb.adjoint_iterations;
        }
        out.grad = grad;
        out.budget_iterations = k;
        Ok(out)
    }
}

/// Autoregressive network rollout for `steps` steps.
pub fn rollout<T: Real>(net: &Network<T>, u0: &[T], steps: usize) -> Result<Vec<T>> {
    let mut u = u0.to_vec();
    for _ in 0..steps {
        u = net.forward(&u)?;
    }
    Ok(u)
}

/// Mean squared relative error of `steps`-step rollouts against references.
pub fn emulator_validation<T: Real>(net: &Network<T>, samples: &[(&[T], &[T])], steps: usize) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidConfig("empty validation set".into()));
    }
    let mut acc = 0.0;
    for &(u0, r) in samples {
        acc += nmse(&rollout(net, u0, steps)?, r)?.0;
    }
    Ok(acc / samples.len() as f64)
}

/// Coarse solver followed by a learned velocity correction with a skip
/// connection; pressure passes through unchanged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectorChain {
    pub physics: Physics,
    pub solver: SolverSetup,
}

impl CorrectorChain {
    fn velocity_len(&self) -> usize {
        2 * self.physics.grid().points()
    }

    fn correct<T: Real>(&self, net: &Network<T>, a: &[T]) -> Result<(Vec<T>, crate::nn::Tape<T>)> {
        let v = self.velocity_len();
        let (d, tape) = net.forward_tape(&a[..v])?;
        let mut y = a.to_vec();
        for (yi, di) in y[..v].iter_mut().zip(d) {
            *yi = *yi + di;
        }
        Ok((y, tape))
    }

    /// One corrected step with the coarse solve capped at `k` iterations.
    pub fn step<T: Real>(&self, net: &Network<T>, s: &[T], k: usize) -> Result<Vec<T>> {
        let p = self.physics.assemble(s)?;
        let a = solve(self.solver.kind, &p, &self.solver.config(k))?.solution;
        Ok(self.correct(net, &a)?.0)
    }

    /// Sum of velocity MSEs after one and two corrected steps, averaged over
    /// the batch of `(s⁰, s¹_ref, s²_ref)` triples. Both solves use `k`.
    pub fn loss_and_grad<T: Real>(&self, net: &Network<T>, batch: &[(&[T], &[T], &[T])], k: usize) -> Result<StepOutcome<T>> {
        if batch.is_empty() {
            return Err(Error::InvalidConfig("empty batch".into()));
        }
        let v = self.velocity_len();
        let inv = cast::<T>(1.0 / batch.len() as f64);
        let mut grad = vec![T::zero(); net.param_count()];
        let mut out = StepOutcome { loss: 0.0, grad: Vec::new(), budget_iterations: 0, primal_iterations: 0, adjoint_iterations: 0 };
        let cfg = self.solver.config(k);
        for &(s0, r1, r2) in batch {
            // s0 is data, so the first solve needs no derivative.
            let p0 = self.physics.assemble(s0)?;
            let first = solve(self.solver.kind, &p0, &cfg)?;
            let (y1, tape1) = self.correct(net, &first.solution)?;
            let p1 = self.physics.assemble(&y1)?;
            let vjp = solve_with_vjp(&p1, self.solver.kind, &cfg, self.solver.mode)?;
            let (y2, tape2) = self.correct(net, vjp.solution())?;

            let (l1, c1) = mse(&y1[..v], &r1[..v])?;
            let (l2, c2) = mse(&y2[..v], &r2[..v])?;

            let y2_bar: Vec<T> = c2.into_iter().map(|c| c * inv).collect();
            let x2_bar = net.backward(&tape2, &y2_bar, &mut grad)?;
            let mut a2_bar = vec![T::zero(); y2.len()];
            for i in 0..v {
                a2_bar[i] = y2_bar[i] + x2_bar[i];
            }
            let pb = vjp.pullback(&a2_bar)?;
            let mut y1_bar = pb.g_bar;
            for i in 0..v {
                y1_bar[i] = y1_bar[i] + c1[i] * inv;
            }
            net.backward(&tape1, &y1_bar[..v], &mut grad)?;

            out.loss += (l1 + l2) / batch.len() as f64;
            out.primal_iterations += first.iterations_used + vjp.primal.iterations_used;
            out.adjoint_iterations += pb.adjoint_iterations;
        }
        out.grad = grad;
        out.budget_iterations = 2 * k;
        Ok(out)
    }

    /// Mean squared relative error of the first velocity component after
    /// `steps` corrected steps, each solve capped at `k`.
    pub fn validation<T: Real>(&self, net: &Network<T>, samples: &[(&[T], &[T])], steps: usize, k: usize) -> Result<f64> {
        if samples.is_empty() {
            return Err(Error::InvalidConfig("empty validation set".into()));
        }
        let m = self.physics.grid().points();
        let mut acc = 0.0;
        for &(s0, r) in samples {
            let mut s = s0.to_vec();
            for _ in 0..steps {
                s = self.step(net, &s, k)?;
            }
            acc += nmse(&s[..m], &r[..m])?.0;
        }
        Ok(acc / samples.len() as f64)
    }
}

fn sq(x: f64) -> f64 {
    x * x
}
