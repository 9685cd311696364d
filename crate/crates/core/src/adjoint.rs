//! Reverse-mode derivatives of a truncated linear solve `u^[K] = P_K(g)`.
//!
//! Two routes lead from a cotangent `ū` on the solution to a cotangent `ḡ` on
//! the assembly input:
//!
//! - [`DiffMode::Implicit`] solves `Aᵀλ = ū` with the same solver and the same
//!   iteration cap as the primal, then forms `ḡ = J_βᵀλ − ∂_g(λᵀ A(g) u^[K])`.
//! - [`DiffMode::Unrolled`] runs the reverse sweep through every stored
//!   iterate using hand-derived per-step pullbacks (Jacobi and steepest
//!   descent only).
//!
//! Matrix cotangents are never materialized; they flow through
//! [`LinearProblem::matrix_vjp`].

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot};
use crate::operators::LinearProblem;
use crate::scalar::Real;
use crate::solvers::{solve, SolveConfig, SolveReport, SolverKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DiffMode {
    Implicit,
    Unrolled,
}

impl DiffMode {
    pub fn name(&self) -> &'static str {
        match self {
            DiffMode::Implicit => "implicit",
            DiffMode::Unrolled => "unrolled",
        }
    }
}

/// Result of a pullback.
#[derive(Debug, Clone, PartialEq)]
pub struct Pullback<T> {
    /// Cotangent on the assembly input `g`.
    pub g_bar: Vec<T>,
    /// Iterations spent in the adjoint solve (zero for unrolled mode).
    pub adjoint_iterations: usize,
}

/// A primal solve together with everything needed to pull cotangents back.
#[derive(Debug, Clone)]
pub struct SolveVjp<T: Real> {
    pub primal: SolveReport<T>,
    problem: LinearProblem<T>,
    kind: SolverKind,
    cfg: SolveConfig,
    mode: DiffMode,
}

/// Solves `p` and prepares the pullback for `mode`.
pub fn solve_with_vjp<T: Real>(
    p: &LinearProblem<T>,
    kind: SolverKind,
    cfg: &SolveConfig,
    mode: DiffMode,
) -> Result<SolveVjp<T>> {
    if mode == DiffMode::Unrolled && kind == SolverKind::Gmres {
        return Err(Error::UnsupportedMode("gmres"));
    }
    let mut cfg = *cfg;
    cfg.store_iterates = mode == DiffMode::Unrolled;
    let primal = solve(kind, p, &cfg)?;
    Ok(SolveVjp { primal, problem: p.clone(), kind, cfg, mode })
}

impl<T: Real> SolveVjp<T> {
    pub fn solution(&self) -> &[T] {
        &self.primal.solution
    }

    pub fn mode(&self) -> DiffMode {
        self.mode
    }

    pub fn pullback(&self, u_bar: &[T]) -> Result<Pullback<T>> {
        if u_bar.len() != self.problem.size() {
            return Err(Error::ShapeMismatch { expected: self.problem.size(), got: u_bar.len() });
        }
        match self.mode {
            DiffMode::Implicit => implicit_pullback(&self.problem, self.kind, &self.cfg, &self.primal.solution, u_bar),
            DiffMode::Unrolled => {
                let iterates = self.primal.iterates.as_ref().ok_or(Error::MissingIterates)?;
                let g_bar = unrolled_pullback(&self.problem, self.kind, iterates, self.primal.iterations_used, u_bar)?;
                Ok(Pullback { g_bar, adjoint_iterations: 0 })
            }
        }
    }
}

/// Adjoint solve `Aᵀλ = ū` capped at the primal `K`, then
/// `ḡ = J_βᵀλ − ∂_g(λᵀ A(g) u_K)`.
pub fn implicit_pullback<T: Real>(
    p: &LinearProblem<T>,
    kind: SolverKind,
    cfg: &SolveConfig,
    u_k: &[T],
    u_bar: &[T],
) -> Result<Pullback<T>> {
    let adjoint = p.transpose().with_rhs(u_bar.to_vec());
    let cfg = SolveConfig { store_iterates: false, ..*cfg };
    let report = solve(kind, &adjoint, &cfg)?;
    let lambda = report.solution;
    let mut g_bar = vec![T::zero(); p.input_len()];
    p.rhs_vjp(&lambda, &mut g_bar);
    let mut m_bar = vec![T::zero(); p.input_len()];
    p.matrix_vjp(u_k, &lambda, &mut m_bar);
    for (g, &m) in g_bar.iter_mut().zip(&m_bar) {
        *g = *g - m;
    }
    Ok(Pullback { g_bar, adjoint_iterations: report.iterations_used })
}

/// Reverse sweep through `iterations` stored solver steps.
pub fn unrolled_pullback<T: Real>(
    p: &LinearProblem<T>,
    kind: SolverKind,
    iterates: &[Vec<T>],
    iterations: usize,
    u_bar: &[T],
) -> Result<Vec<T>> {
    if iterates.len() != iterations + 1 {
        return Err(Error::TapeMismatch { iterates: iterates.len(), iterations });
    }
    match kind {
        SolverKind::Jacobi => jacobi_reverse(p, iterates, u_bar),
        SolverKind::SteepestDescent => steepest_reverse(p, iterations, u_bar),
        SolverKind::Gmres => Err(Error::UnsupportedMode("gmres")),
    }
}

/// Step `u⁺ = u + D⁻¹(b − Au)`:
/// `b̄ += D⁻¹v`, `Ā −= D⁻¹v uᵀ`, `D̄ −= D⁻¹v ⊙ D⁻¹(b − Au)`, `v ← v − AᵀD⁻¹v`.
fn jacobi_reverse<T: Real>(p: &LinearProblem<T>, iterates: &[Vec<T>], u_bar: &[T]) -> Result<Vec<T>> {
    let n = p.size();
    let d = p.diagonal().ok_or(Error::MissingDiagonal)?;
    let b = p.rhs();
    let diag_varies = p.matrix_depends_on_input();
    let mut v = u_bar.to_vec();
    let mut b_bar = vec![T::zero(); n];
    let mut d_bar = vec![T::zero(); n];
    let mut g_bar = vec![T::zero(); p.input_len()];
    let mut m_bar = vec![T::zero(); p.input_len()];
    let mut s = vec![T::zero(); n];
    let mut tmp = vec![T::zero(); n];
    for u in iterates[..iterates.len() - 1].iter().rev() {
        for ((si, &vi), &di) in s.iter_mut().zip(&v).zip(&d) {
            *si = vi / di;
        }
        axpy(T::one(), &s, &mut b_bar);
        p.matrix_vjp(u, &s, &mut m_bar);
        if diag_varies {
            p.apply(u, &mut tmp);
            for i in 0..n {
                d_bar[i] = d_bar[i] - s[i] * (b[i] - tmp[i]) / d[i];
            }
        }
        p.apply_transpose(&s, &mut tmp);
        axpy(-T::one(), &tmp, &mut v);
    }
    p.rhs_vjp(&b_bar, &mut g_bar);
    p.diagonal_vjp(&d_bar, &mut g_bar);
    for (g, &m) in g_bar.iter_mut().zip(&m_bar) {
        *g = *g - m;
    }
    Ok(g_bar)
}

/// Replays the residual recurrence forward, then reverses
/// `q = Ar`, `α = (r·r)/(r·q)`, `u⁺ = u + αr`, `r⁺ = r − αq`.
fn steepest_reverse<T: Real>(p: &LinearProblem<T>, iterations: usize, u_bar: &[T]) -> Result<Vec<T>> {
    let n = p.size();
    let mut rs: Vec<Vec<T>> = Vec::with_capacity(iterations);
    let mut qs: Vec<Vec<T>> = Vec::with_capacity(iterations);
    let mut alphas: Vec<(T, T, T)> = Vec::with_capacity(iterations);
    let mut r = p.rhs();
    for _ in 0..iterations {
        let q = p.matvec(&r);
        let (nn, dd) = (dot(&r, &r), dot(&r, &q));
        if !(dd > T::zero()) {
            return Err(Error::NotPositiveDefinite { value: crate::scalar::to_f64(dd) });
        }
        let alpha = nn / dd;
        let mut next = r.clone();
        axpy(-alpha, &q, &mut next);
        rs.push(core::mem::replace(&mut r, next));
        qs.push(q);
        alphas.push((alpha, nn, dd));
    }

    let mut g_bar = vec![T::zero(); p.input_len()];
    let mut m_bar = vec![T::zero(); p.input_len()];
    let mut r_bar = vec![T::zero(); n];
    let two = T::one() + T::one();
    let mut tmp = vec![T::zero(); n];
    for k in (0..iterations).rev() {
        let (r, q) = (&rs[k], &qs[k]);
        let (alpha, nn, dd) = alphas[k];
        let a_bar = dot(u_bar, r) - dot(&r_bar, q);
        let mut q_bar: Vec<T> = r_bar.iter().map(|&x| -alpha * x).collect();
        let n_bar = a_bar / dd;
        let d_bar = -a_bar * nn / (dd * dd);
        let mut r_prev_bar = r_bar.clone();
        axpy(alpha, u_bar, &mut r_prev_bar);
        axpy(two * n_bar, r, &mut r_prev_bar);
        axpy(d_bar, q, &mut r_prev_bar);
        axpy(d_bar, r, &mut q_bar);
        p.apply_transpose(&q_bar, &mut tmp);
        axpy(T::one(), &tmp, &mut r_prev_bar);
        p.matrix_vjp(r, &q_bar, &mut m_bar);
        r_bar = r_prev_bar;
    }
    p.rhs_vjp(&r_bar, &mut g_bar);
    for (g, &m) in g_bar.iter_mut().zip(&m_bar) {
        *g = *g + m;
    }
    Ok(g_bar)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{assemble_heat_btcs, assemble_poisson_1d, Grid};

    fn heat(n: usize) -> (LinearProblem<f64>, Vec<f64>) {
        let g = Grid::dirichlet(1, n).unwrap();
        let u: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin() + 0.3).collect();
        (assemble_heat_btcs(&g, 0.01, 1.0, &u).unwrap(), u)
    }

    #[test]
    fn zero_cotangent_gives_zero_gradient() {
        let (p, _) = heat(8);
        for mode in [DiffMode::Implicit, DiffMode::Unrolled] {
            let s = solve_with_vjp(&p, SolverKind::Jacobi, &SolveConfig::with_iterations(10), mode).unwrap();
            let pb = s.pullback(&[0.0; 8]).unwrap();
            assert!(pb.g_bar.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn zero_budget_gives_zero_gradient() {
        let (p, _) = heat(8);
        for mode in [DiffMode::Implicit, DiffMode::Unrolled] {
            let s = solve_with_vjp(&p, SolverKind::Jacobi, &SolveConfig::with_iterations(0), mode).unwrap();
            assert!(s.solution().iter().all(|&x| x == 0.0));
            let pb = s.pullback(&[1.0; 8]).unwrap();
            assert!(pb.g_bar.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn single_jacobi_step_on_poisson() {
        let g = Grid::dirichlet(1, 6).unwrap();
        let p = assemble_poisson_1d(&g, &[1.0f64, -0.5]).unwrap();
        let s = solve_with_vjp(&p, SolverKind::Jacobi, &SolveConfig::with_iterations(1), DiffMode::Unrolled).unwrap();
        let u_bar = [0.3, -1.0, 2.0, 0.5, 0.1, -0.2];
        let got = s.pullback(&u_bar).unwrap().g_bar;
        let d = p.diagonal().unwrap();
        let scaled: Vec<f64> = u_bar.iter().zip(&d).map(|(a, b)| a / b).collect();
        let mut expect = vec![0.0; 2];
        p.rhs_vjp(&scaled, &mut expect);
        for (a, b) in got.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn gmres_rejects_unrolled() {
        let (p, _) = heat(4);
        assert!(matches!(
            solve_with_vjp(&p, SolverKind::Gmres, &SolveConfig::default(), DiffMode::Unrolled),
            Err(Error::UnsupportedMode(_))
        ));
    }

    #[test]
    fn heat_adjoint_needs_as_many_iterations() {
        let (p, _) = heat(30);
        let cfg = SolveConfig { max_iterations: 1000, tolerance: 1e-5, ..SolveConfig::default() };
        let s = solve_with_vjp(&p, SolverKind::Jacobi, &cfg, DiffMode::Implicit).unwrap();
        let pb = s.pullback(&p.rhs()).unwrap();
        assert_eq!(pb.adjoint_iterations, s.primal.iterations_used);
    }

    #[test]
    fn tape_mismatch_detected() {
        let (p, _) = heat(4);
        let tape = vec![vec![0.0; 4]; 3];
        assert_eq!(
            unrolled_pullback(&p, SolverKind::Jacobi, &tape, 5, &[1.0; 4]),
            Err(Error::TapeMismatch { iterates: 3, iterations: 5 })
        );
    }
}
