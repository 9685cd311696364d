use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::linalg::DenseMatrix;
use crate::scalar::Real;

/// Assembly routines `A = Λ(g)`, `b = β(g)` of one linear system, exposed
/// matrix-free together with the pullbacks of both routines.
pub trait SystemAssembly<T: Real>: Send + Sync {
    /// Number of unknowns.
    fn size(&self) -> usize;

    /// Length of the assembly input `g`.
    fn input_len(&self) -> usize;

    /// `out = A v`
    fn apply(&self, v: &[T], out: &mut [T]);

    /// `out = Aᵀ v`
    fn apply_transpose(&self, v: &[T], out: &mut [T]);

    /// Main diagonal of `A`, if known analytically.
    fn diagonal(&self) -> Option<Vec<T>>;

    /// `b = β(g)`
    fn rhs(&self) -> &[T];

    /// `g_bar += J_βᵀ b_bar`
    fn rhs_vjp(&self, b_bar: &[T], g_bar: &mut [T]);

    /// `g_bar += ∂/∂g (λᵀ Λ(g) u)`; a no-op when the matrix is constant.
    fn matrix_vjp(&self, u: &[T], lambda: &[T], g_bar: &mut [T]);

    /// `g_bar += ∂/∂g (d_barᵀ diag(Λ(g)))`
    fn diagonal_vjp(&self, _d_bar: &[T], _g_bar: &mut [T]) {}

    fn matrix_depends_on_input(&self) -> bool;

    /// Unknowns whose sum is undetermined by the system (a pressure gauge).
    /// Direct solvers pin their sum to zero.
    fn gauge(&self) -> Option<Range<usize>> {
        None
    }
}

/// A linear system `Ã u = b̃` derived from an assembly, where `Ã` is `±A` or
/// `±Aᵀ` and `b̃` defaults to `±β(g)` but may be replaced.
///
/// Cheap to clone; the assembly is shared.
#[derive(Clone)]
pub struct LinearProblem<T: Real> {
    assembly: Arc<dyn SystemAssembly<T>>,
    rhs: Option<Arc<Vec<T>>>,
    transposed: bool,
    negated: bool,
}

impl<T: Real> core::fmt::Debug for LinearProblem<T> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("LinearProblem")
            .field("size", &self.size())
            .field("transposed", &self.transposed)
            .field("negated", &self.negated)
            .finish()
    }
}

impl<T: Real> LinearProblem<T> {
    pub fn new(assembly: impl SystemAssembly<T> + 'static) -> Self {
        Self { assembly: Arc::new(assembly), rhs: None, transposed: false, negated: false }
    }

    pub fn from_arc(assembly: Arc<dyn SystemAssembly<T>>) -> Self {
        Self { assembly, rhs: None, transposed: false, negated: false }
    }

    pub fn assembly(&self) -> &Arc<dyn SystemAssembly<T>> {
        &self.assembly
    }

    pub fn size(&self) -> usize {
        self.assembly.size()
    }

    pub fn input_len(&self) -> usize {
        self.assembly.input_len()
    }

    pub fn is_transposed(&self) -> bool {
        self.transposed
    }

    pub fn is_negated(&self) -> bool {
        self.negated
    }

    /// Swaps `apply` and `apply_transpose`. The right-hand side is kept.
    pub fn transpose(&self) -> Self {
        Self { transposed: !self.transposed, ..self.clone() }
    }

    /// `(-A) u = -b`: same solution, opposite definiteness.
    pub fn negated(&self) -> Self {
        let rhs = self.rhs.as_ref().map(|b| Arc::new(b.iter().map(|&x| -x).collect()));
        Self { negated: !self.negated, rhs, ..self.clone() }
    }

    /// Same operator with a different right-hand side.
    pub fn with_rhs(&self, b: Vec<T>) -> Self {
        assert_eq!(b.len(), self.size());
        Self { rhs: Some(Arc::new(b)), ..self.clone() }
    }

    pub fn has_assembled_rhs(&self) -> bool {
        self.rhs.is_none()
    }

    fn sign(&self, out: &mut [T]) {
        if self.negated {
            for o in out.iter_mut() {
                *o = -*o;
            }
        }
    }

    pub fn apply(&self, v: &[T], out: &mut [T]) {
        if self.transposed {
            self.assembly.apply_transpose(v, out);
        } else {
            self.assembly.apply(v, out);
        }
        self.sign(out);
    }

    pub fn apply_transpose(&self, v: &[T], out: &mut [T]) {
        if self.transposed {
            self.assembly.apply(v, out);
        } else {
            self.assembly.apply_transpose(v, out);
        }
        self.sign(out);
    }

    pub fn matvec(&self, v: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.size()];
        self.apply(v, &mut out);
        out
    }

    pub fn diagonal(&self) -> Option<Vec<T>> {
        let mut d = self.assembly.diagonal()?;
        self.sign(&mut d);
        Some(d)
    }

    pub fn rhs(&self) -> Vec<T> {
        match &self.rhs {
            Some(b) => b.as_ref().clone(),
            None => {
                let mut b = self.assembly.rhs().to_vec();
                self.sign(&mut b);
                b
            }
        }
    }

    /// `g_bar += J_βᵀ b_bar` for the assembled right-hand side.
    pub fn rhs_vjp(&self, b_bar: &[T], g_bar: &mut [T]) {
        if self.negated {
            let nb: Vec<T> = b_bar.iter().map(|&x| -x).collect();
            self.assembly.rhs_vjp(&nb, g_bar);
        } else {
            self.assembly.rhs_vjp(b_bar, g_bar);
        }
    }

    /// `g_bar += ∂/∂g (λᵀ Ã(g) u)`
    pub fn matrix_vjp(&self, u: &[T], lambda: &[T], g_bar: &mut [T]) {
        if !self.assembly.matrix_depends_on_input() {
            return;
        }
        let (u, lambda) = if self.transposed { (lambda, u) } else { (u, lambda) };
        if self.negated {
            let nl: Vec<T> = lambda.iter().map(|&x| -x).collect();
            self.assembly.matrix_vjp(u, &nl, g_bar);
        } else {
            self.assembly.matrix_vjp(u, lambda, g_bar);
        }
    }

    /// `g_bar += ∂/∂g (d_barᵀ diag(Ã(g)))`
    pub fn diagonal_vjp(&self, d_bar: &[T], g_bar: &mut [T]) {
        if !self.assembly.matrix_depends_on_input() {
            return;
        }
        if self.negated {
            let nd: Vec<T> = d_bar.iter().map(|&x| -x).collect();
            self.assembly.diagonal_vjp(&nd, g_bar);
        } else {
            self.assembly.diagonal_vjp(d_bar, g_bar);
        }
    }

    pub fn matrix_depends_on_input(&self) -> bool {
        self.assembly.matrix_depends_on_input()
    }

    pub fn gauge(&self) -> Option<Range<usize>> {
        self.assembly.gauge()
    }

    /// Column-by-column materialization; oracle use only.
    pub fn to_dense(&self) -> DenseMatrix<T> {
        DenseMatrix::from_operator(self.size(), |v, o| self.apply(v, o))
    }
}
