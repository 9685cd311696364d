use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::scalar::{cast, Real};

/// Learning-rate schedule evaluated at the number of completed updates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Schedule {
    Constant { lr: f64 },
    /// `base · rate^(step / transition_steps)` with a continuous exponent.
    Exponential { base: f64, rate: f64, transition_steps: u64 },
    /// `base · ½(1 + cos(π · min(step, decay_steps) / decay_steps))`.
    Cosine { base: f64, decay_steps: u64 },
}

impl Schedule {
    pub fn lr_at(&self, step: u64) -> f64 {
        match *self {
            Schedule::Constant { lr } => lr,
            Schedule::Exponential { base, rate, transition_steps } => {
                base * libm::pow(rate, step as f64 / transition_steps.max(1) as f64)
            }
            Schedule::Cosine { base, decay_steps } => {
                let d = decay_steps.max(1);
                let frac = step.min(d) as f64 / d as f64;
                base * 0.5 * (1.0 + libm::cos(core::f64::consts::PI * frac))
            }
        }
    }

    pub fn base(&self) -> f64 {
        match *self {
            Schedule::Constant { lr } => lr,
            Schedule::Exponential { base, .. } | Schedule::Cosine { base, .. } => base,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OptimizerKind {
    GradientDescent,
    Adam,
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct Optimizer<T> {
    kind: OptimizerKind,
    schedule: Schedule,
    step: u64,
    m: Vec<T>,
    v: Vec<T>,
}

impl<T: Real> Optimizer<T> {
    pub fn new(kind: OptimizerKind, schedule: Schedule, params: usize) -> Self {
        let (m, v) = match kind {
            OptimizerKind::Adam => (vec![T::zero(); params], vec![T::zero(); params]),
            OptimizerKind::GradientDescent => (Vec::new(), Vec::new()),
        };
        Self { kind, schedule, step: 0, m, v }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn current_lr(&self) -> f64 {
        self.schedule.lr_at(self.step)
    }

    pub fn update(&mut self, params: &mut [T], grad: &[T]) -> Result<()> {
        if params.len() != grad.len() {
            return Err(Error::ShapeMismatch { expected: params.len(), got: grad.len() });
        }
        let lr = self.schedule.lr_at(self.step);
        self.step += 1;
        match self.kind {
            OptimizerKind::GradientDescent => {
                let lr = cast::<T>(lr);
                for (p, &g) in params.iter_mut().zip(grad) {
                    *p = *p - lr * g;
                }
            }
            OptimizerKind::Adam => {
                if self.m.len() != params.len() {
                    return Err(Error::ShapeMismatch { expected: self.m.len(), got: params.len() });
                }
                let t = self.step as i32;
                let (b1, b2) = (cast::<T>(ADAM_BETA1), cast::<T>(ADAM_BETA2));
                let c1 = cast::<T>(1.0 - libm::pow(ADAM_BETA1, t as f64));
                let c2 = cast::<T>(1.0 - libm::pow(ADAM_BETA2, t as f64));
                let (lr, eps, one) = (cast::<T>(lr), cast::<T>(ADAM_EPS), T::one());
                for i in 0..params.len() {
                    let g = grad[i];
                    self.m[i] = b1 * self.m[i] + (one - b1) * g;
                    self.v[i] = b2 * self.v[i] + (one - b2) * g * g;
                    let mh = self.m[i] / c1;
                    let vh = self.v[i] / c2;
                    params[i] = params[i] - lr * mh / (vh.sqrt() + eps);
                }
            }
        }
        Ok(())
    }
}
