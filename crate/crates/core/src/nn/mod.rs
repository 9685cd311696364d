//! Small ReLU networks with exact reverse-mode gradients over a flat
//! parameter vector.
//!
//! Two architectures are available: a fully connected [`NetworkSpec::Mlp`]
//! and a convolutional residual network [`NetworkSpec::ConvResNet`] on 1D, 2D
//! or 3D grids with circular or zero padding. The ReLU derivative at exactly
//! zero is taken as zero.

mod conv;

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

pub use conv::ConvPlan;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot};
use crate::scalar::{cast, convert, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Padding {
    Circular,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NetworkSpec {
    Mlp {
        input: usize,
        output: usize,
        hidden_width: usize,
        hidden_layers: usize,
    },
    /// Lift conv, then `blocks` residual blocks `h + conv(relu(conv(h)))`,
    /// then a projection conv.
    ConvResNet {
        spatial_dim: usize,
        resolution: usize,
        channels_in: usize,
        channels_out: usize,
        blocks: usize,
        hidden_channels: usize,
        kernel_size: usize,
        padding: Padding,
    },
}

/// Offsets of one affine layer inside the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Layer {
    w: usize,
    b: usize,
    fan_in: usize,
    fan_out: usize,
}

impl NetworkSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            NetworkSpec::Mlp { input, output, hidden_width, .. } => input > 0 && output > 0 && hidden_width > 0,
            NetworkSpec::ConvResNet {
                spatial_dim,
                resolution,
                channels_in,
                channels_out,
                hidden_channels,
                kernel_size,
                ..
            } => {
                (1..=3).contains(&spatial_dim)
                    && resolution > 0
                    && channels_in > 0
                    && channels_out > 0
                    && hidden_channels > 0
                    && kernel_size % 2 == 1
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(alloc::format!("invalid network spec {self:?}")))
        }
    }

    pub fn input_len(&self) -> usize {
        match *self {
            NetworkSpec::Mlp { input, .. } => input,
            NetworkSpec::ConvResNet { spatial_dim, resolution, channels_in, .. } => {
                channels_in * resolution.pow(spatial_dim as u32)
            }
        }
    }

    pub fn output_len(&self) -> usize {
        match *self {
            NetworkSpec::Mlp { output, .. } => output,
            NetworkSpec::ConvResNet { spatial_dim, resolution, channels_out, .. } => {
                channels_out * resolution.pow(spatial_dim as u32)
            }
        }
    }

    fn layers(&self) -> Vec<Layer> {
        let mut sizes: Vec<(usize, usize)> = Vec::new();
        match *self {
            NetworkSpec::Mlp { input, output, hidden_width, hidden_layers } => {
                let mut prev = input;
                for _ in 0..hidden_layers {
                    sizes.push((prev, hidden_width));
                    prev = hidden_width;
                }
                sizes.push((prev, output));
            }
            NetworkSpec::ConvResNet {
                spatial_dim,
                channels_in,
                channels_out,
                blocks,
                hidden_channels: h,
                kernel_size,
                ..
            } => {
                let taps = kernel_size.pow(spatial_dim as u32);
                sizes.push((channels_in * taps, h));
                for _ in 0..2 * blocks {
                    sizes.push((h * taps, h));
                }
                sizes.push((h * taps, channels_out));
            }
        }
        let mut off = 0;
        sizes
            .into_iter()
            .map(|(fan_in, fan_out)| {
                let l = Layer { w: off, b: off + fan_in * fan_out, fan_in, fan_out };
                off += fan_in * fan_out + fan_out;
                l
            })
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers().last().map_or(0, |l| l.b + l.fan_out)
    }
}

/// Stored activations of one forward pass.
#[derive(Debug, Clone)]
pub struct Tape<T> {
    /// Per-layer inputs (MLP) or im2col matrices (conv).
    inputs: Vec<Vec<T>>,
    /// Pre-activations feeding a ReLU.
    pre: Vec<Vec<T>>,
}

#[derive(Debug, Clone)]
pub struct Network<T> {
    spec: NetworkSpec,
    params: Vec<T>,
    layers: Vec<Layer>,
    plan: Option<Arc<ConvPlan>>,
}

fn relu<T: Real>(x: &[T]) -> Vec<T> {
    x.iter().map(|&v| if v > T::zero() { v } else { T::zero() }).collect()
}

fn relu_mask<T: Real>(g: &mut [T], pre: &[T]) {
    for (gi, &p) in g.iter_mut().zip(pre) {
        if !(p > T::zero()) {
            *gi = T::zero();
        }
    }
}

impl<T: Real> Network<T> {
    pub fn new(spec: NetworkSpec, params: Vec<T>) -> Result<Self> {
        spec.validate()?;
        if params.len() != spec.param_count() {
            return Err(Error::ShapeMismatch { expected: spec.param_count(), got: params.len() });
        }
        let plan = match spec {
            NetworkSpec::ConvResNet { spatial_dim, resolution, kernel_size, padding, .. } => Some(Arc::new(
                ConvPlan::new(spatial_dim, resolution, kernel_size, padding == Padding::Circular),
            )),
            NetworkSpec::Mlp { .. } => None,
        };
        Ok(Self { spec, params, layers: spec.layers(), plan })
    }

    pub fn zeros(spec: NetworkSpec) -> Result<Self> {
        Self::new(spec, vec![T::zero(); spec.param_count()])
    }

    /// Weights and biases drawn from `U(±1/√fan_in)`.
    pub fn init(spec: NetworkSpec, seed: u64) -> Result<Self> {
        let mut net = Self::zeros(spec)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for l in net.layers.clone() {
            let bound = libm::sqrt(1.0 / l.fan_in as f64);
            for w in &mut net.params[l.w..l.b + l.fan_out] {
                *w = cast(rng.random_range(-bound..bound));
            }
        }
        Ok(net)
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [T] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn input_len(&self) -> usize {
        self.spec.input_len()
    }

    pub fn output_len(&self) -> usize {
        self.spec.output_len()
    }

    /// Weight ranges `(offset, len, fan_in)` of every layer.
    pub fn weight_blocks(&self) -> Vec<(usize, usize, usize)> {
        self.layers.iter().map(|l| (l.w, l.b - l.w, l.fan_in)).collect()
    }

    pub fn convert<U: Real>(&self) -> Network<U> {
        Network { spec: self.spec, params: convert(&self.params), layers: self.layers.clone(), plan: self.plan.clone() }
    }

    pub fn forward(&self, x: &[T]) -> Result<Vec<T>> {
        Ok(self.forward_tape(x)?.0)
    }

    pub fn forward_tape(&self, x: &[T]) -> Result<(Vec<T>, Tape<T>)> {
        if x.len() != self.input_len() {
            return Err(Error::ShapeMismatch { expected: self.input_len(), got: x.len() });
        }
        Ok(match self.plan.as_deref() {
            None => self.mlp_forward(x),
            Some(plan) => self.resnet_forward(plan, x),
        })
    }

    /// Accumulates `∂(ȳᵀf)/∂θ` into `grad` and returns `∂(ȳᵀf)/∂x`.
    pub fn backward(&self, tape: &Tape<T>, y_bar: &[T], grad: &mut [T]) -> Result<Vec<T>> {
        if y_bar.len() != self.output_len() {
            return Err(Error::ShapeMismatch { expected: self.output_len(), got: y_bar.len() });
        }
        if grad.len() != self.param_count() {
            return Err(Error::ShapeMismatch { expected: self.param_count(), got: grad.len() });
        }
        Ok(match self.plan.as_deref() {
            None => self.mlp_backward(tape, y_bar, grad),
            Some(plan) => self.resnet_backward(plan, tape, y_bar, grad),
        })
    }

    fn affine(&self, l: &Layer, x: &[T]) -> Vec<T> {
        let w = &self.params[l.w..l.b];
        (0..l.fan_out)
            .map(|o| self.params[l.b + o] + dot(&w[o * l.fan_in..(o + 1) * l.fan_in], x))
            .collect()
    }

    fn mlp_forward(&self, x: &[T]) -> (Vec<T>, Tape<T>) {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len() - 1);
        let mut a = x.to_vec();
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            let z = self.affine(l, &a);
            inputs.push(a);
            if i < last {
                a = relu(&z);
                pre.push(z);
            } else {
                a = z;
            }
        }
        (a, Tape { inputs, pre })
    }

    fn mlp_backward(&self, tape: &Tape<T>, y_bar: &[T], grad: &mut [T]) -> Vec<T> {
        let mut delta = y_bar.to_vec();
        for (i, l) in self.layers.iter().enumerate().rev() {
            let a = &tape.inputs[i];
            let w = &self.params[l.w..l.b];
            let mut prev = vec![T::zero(); l.fan_in];
            for (o, &d) in delta.iter().enumerate() {
                grad[l.b + o] = grad[l.b + o] + d;
                if d == T::zero() {
                    continue;
                }
                axpy(d, a, &mut grad[l.w + o * l.fan_in..l.w + (o + 1) * l.fan_in]);
                axpy(d, &w[o * l.fan_in..(o + 1) * l.fan_in], &mut prev);
            }
            if i > 0 {
                relu_mask(&mut prev, &tape.pre[i - 1]);
            }
            delta = prev;
        }
        delta
    }

    fn conv(&self, plan: &ConvPlan, l: &Layer, x: &[T], cin: usize, inputs: &mut Vec<Vec<T>>) -> Vec<T> {
        let cols = plan.im2col(x, cin);
        let y = plan.forward(&cols, &self.params[l.w..l.b], &self.params[l.b..l.b + l.fan_out], l.fan_out);
        inputs.push(cols);
        y
    }

    fn conv_back(&self, plan: &ConvPlan, i: usize, tape: &Tape<T>, y_bar: &[T], grad: &mut [T]) -> Vec<T> {
        let l = &self.layers[i];
        let cin = l.fan_in / plan.taps;
        let (wg, bg) = grad[l.w..l.b + l.fan_out].split_at_mut(l.b - l.w);
        plan.backward(&tape.inputs[i], &self.params[l.w..l.b], cin, l.fan_out, y_bar, wg, bg)
    }

    fn resnet_forward(&self, plan: &ConvPlan, x: &[T]) -> (Vec<T>, Tape<T>) {
        let NetworkSpec::ConvResNet { channels_in, blocks, hidden_channels: h, .. } = self.spec else {
            unreachable!()
        };
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(blocks);
        let mut hid = self.conv(plan, &self.layers[0], x, channels_in, &mut inputs);
        for blk in 0..blocks {
            let z = self.conv(plan, &self.layers[1 + 2 * blk], &hid, h, &mut inputs);
            let r = relu(&z);
            pre.push(z);
            let c = self.conv(plan, &self.layers[2 + 2 * blk], &r, h, &mut inputs);
            for (a, &b) in hid.iter_mut().zip(&c) {
                *a = *a + b;
            }
        }
        let y = self.conv(plan, &self.layers[1 + 2 * blocks], &hid, h, &mut inputs);
        (y, Tape { inputs, pre })
    }

    fn resnet_backward(&self, plan: &ConvPlan, tape: &Tape<T>, y_bar: &[T], grad: &mut [T]) -> Vec<T> {
        let NetworkSpec::ConvResNet { blocks, .. } = self.spec else { unreachable!() };
        let mut h_bar = self.conv_back(plan, 1 + 2 * blocks, tape, y_bar, grad);
        for blk in (0..blocks).rev() {
            let mut r_bar = self.conv_back(plan, 2 + 2 * blk, tape, &h_bar, grad);
            relu_mask(&mut r_bar, &tape.pre[blk]);
            let through = self.conv_back(plan, 1 + 2 * blk, tape, &r_bar, grad);
            for (a, &b) in h_bar.iter_mut().zip(&through) {
                *a = *a + b;
            }
        }
        self.conv_back(plan, 0, tape, &h_bar, grad)
    }
}
