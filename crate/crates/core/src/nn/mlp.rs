//! Dense feed-forward network with ReLU hidden layers, an identity output
//! layer and hand-written backpropagation over mini-batches.

use std::io::{Read, Write};

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use crate::error::{Error, Result};

/// Layer `l` maps `sizes[l]` inputs to `sizes[l + 1]` outputs; weights are
/// stored `fan_in x fan_out` so a batch forward is `X W + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    weights: Vec<Array2<f64>>,
    biases: Vec<Array1<f64>>,
    bias: bool,
}

/// Gradients (or any parameter-shaped update) for an [`Mlp`].
#[derive(Debug, Clone, PartialEq)]
pub struct Grads {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

/// Intermediate values of a batch forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// `inputs[l]` is the input to layer `l` (post-activation of `l - 1`).
    inputs: Vec<Array2<f64>>,
    output: Array2<f64>,
}

impl ForwardCache {
    pub fn output(&self) -> &Array2<f64> {
        &self.output
    }
}

impl Mlp {
    /// Weights uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`, same for
    /// biases.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], bias: bool, rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(sizes, bias)?;
        for (w, b) in net.weights.iter_mut().zip(net.biases.iter_mut()) {
            let bound = 1.0 / (w.nrows() as f64).sqrt();
            w.mapv_inplace(|_| rng.random_range(-bound..bound));
            if bias {
                b.mapv_inplace(|_| rng.random_range(-bound..bound));
            }
        }
        Ok(net)
    }

    pub fn zeros(sizes: &[usize], bias: bool) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "network needs at least an input and an output layer of positive width, got {sizes:?}"
            )));
        }
        let weights = sizes.windows(2).map(|w| Array2::zeros((w[0], w[1]))).collect();
        let biases = sizes[1..].iter().map(|&n| Array1::zeros(n)).collect();
        Ok(Self {
            sizes: sizes.to_vec(),
            weights,
            biases,
            bias,
        })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn has_bias(&self) -> bool {
        self.bias
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("at least two layers")
    }

    pub fn n_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[Array2<f64>] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [Array2<f64>] {
        &mut self.weights
    }

    pub fn biases(&self) -> &[Array1<f64>] {
        &self.biases
    }

    fn check_input(&self, cols: usize) -> Result<()> {
        if cols != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: cols,
            });
        }
        Ok(())
    }

    /// Batch forward, one row per observation.
    pub fn forward(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(x.ncols())?;
        let mut a = x.to_owned();
        let last = self.n_layers() - 1;
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            a = a.dot(w);
            if self.bias {
                a += b;
            }
            if l < last {
                a.mapv_inplace(|v| v.max(0.0));
            }
        }
        Ok(a)
    }

    /// Forward for a single observation.
    pub fn predict(&self, obs: &[f64]) -> Result<Vec<f64>> {
        let x = ArrayView2::from_shape((1, obs.len()), obs).expect("contiguous slice");
        Ok(self.forward(x)?.into_raw_vec_and_offset().0)
    }

    /// Batch forward keeping what [`Mlp::backward`] needs.
    pub fn forward_cached(&self, x: ArrayView2<f64>) -> Result<ForwardCache> {
        self.check_input(x.ncols())?;
        let mut inputs = Vec::with_capacity(self.n_layers());
        let mut a = x.to_owned();
        let last = self.n_layers() - 1;
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = a.dot(w);
            if self.bias {
                z += b;
            }
            if l < last {
                z.mapv_inplace(|v| v.max(0.0));
            }
            inputs.push(a);
            a = z;
        }
        Ok(ForwardCache { inputs, output: a })
    }

    /// Gradients of `sum_ij grad_out[i, j] * output[i, j]` with respect to
    /// every parameter, i.e. backpropagation of an upstream gradient.
    pub fn backward(&self, cache: &ForwardCache, grad_out: ArrayView2<f64>) -> Result<Grads> {
        if grad_out.dim() != cache.output.dim() {
            return Err(Error::DimensionMismatch {
                expected: cache.output.len(),
                got: grad_out.len(),
            });
        }
        let n = self.n_layers();
        let mut gw = vec![Array2::zeros((0, 0)); n];
        let mut gb = vec![Array1::zeros(0); n];
        let mut delta = grad_out.to_owned();
        for l in (0..n).rev() {
            let input = &cache.inputs[l];
            gw[l] = input.t().dot(&delta);
            gb[l] = if self.bias {
                delta.sum_axis(Axis(0))
            } else {
                Array1::zeros(self.biases[l].len())
            };
            if l > 0 {
                let mut back = delta.dot(&self.weights[l].t());
                // `input` is the ReLU output of layer l - 1: positive exactly
                // where the pre-activation was.
                ndarray::Zip::from(&mut back).and(input).for_each(|d, &a| {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                });
                delta = back;
            }
        }
        Ok(Grads { weights: gw, biases: gb })
    }

    /// Number of trainable scalars (biases excluded when disabled).
    pub fn n_params(&self) -> usize {
        let w: usize = self.weights.iter().map(|w| w.len()).sum();
        let b: usize = if self.bias { self.biases.iter().map(|b| b.len()).sum() } else { 0 };
        w + b
    }

    /// Trainable parameters flattened layer by layer: weights (row-major)
    /// then biases.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.iter());
            if self.bias {
                out.extend(b.iter());
            }
        }
        out
    }

    pub fn set_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.n_params() {
            return Err(Error::DimensionMismatch {
                expected: self.n_params(),
                got: flat.len(),
            });
        }
        let mut it = flat.iter().copied();
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            w.iter_mut().for_each(|v| *v = it.next().expect("length checked"));
            if self.bias {
                b.iter_mut().for_each(|v| *v = it.next().expect("length checked"));
            }
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.iter().all(|v| v.is_finite()))
            && self.biases.iter().all(|b| b.iter().all(|v| v.is_finite()))
    }

    /// `self += scale * g`.
    pub fn add_scaled(&mut self, g: &Grads, scale: f64) {
        for (w, gw) in self.weights.iter_mut().zip(&g.weights) {
            w.scaled_add(scale, gw);
        }
        if self.bias {
            for (b, gb) in self.biases.iter_mut().zip(&g.biases) {
                b.scaled_add(scale, gb);
            }
        }
    }

    /// Binary checkpoint, all integers and floats little-endian:
    /// `u32` layer-size count, the `u32` sizes, a `u8` bias flag, then per
    /// layer the `fan_in x fan_out` weights row-major as `f64` followed by
    /// the `fan_out` biases.
    pub fn save<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(&(self.sizes.len() as u32).to_le_bytes())?;
        for &s in &self.sizes {
            out.write_all(&(s as u32).to_le_bytes())?;
        }
        out.write_all(&[self.bias as u8])?;
        for (w, b) in self.weights.iter().zip(&self.biases) {
            for v in w.iter().chain(b.iter()) {
                out.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn load<R: Read>(mut input: R) -> Result<Self> {
        let mut u32_buf = [0u8; 4];
        let mut read_u32 = |input: &mut R| -> Result<usize> {
            input.read_exact(&mut u32_buf)?;
            Ok(u32::from_le_bytes(u32_buf) as usize)
        };
        let count = read_u32(&mut input)?;
        if count > 64 {
            return Err(Error::InvalidArgument(format!("implausible layer count {count} in checkpoint")));
        }
        let sizes = (0..count).map(|_| read_u32(&mut input)).collect::<Result<Vec<_>>>()?;
        let mut flag = [0u8; 1];
        input.read_exact(&mut flag)?;
        let mut net = Self::zeros(&sizes, flag[0] != 0)?;
        let mut f64_buf = [0u8; 8];
        for (w, b) in net.weights.iter_mut().zip(net.biases.iter_mut()) {
            for v in w.iter_mut().chain(b.iter_mut()) {
                input.read_exact(&mut f64_buf)?;
                *v = f64::from_le_bytes(f64_buf);
            }
        }
        Ok(net)
    }
}

impl Grads {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            weights: net.weights.iter().map(|w| Array2::zeros(w.dim())).collect(),
            biases: net.biases.iter().map(|b| Array1::zeros(b.len())).collect(),
        }
    }

    /// Flattened in the same order as [`Mlp::params`].
    pub fn flatten(&self, with_bias: bool) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.iter());
            if with_bias {
                out.extend(b.iter());
            }
        }
        out
    }

    pub fn sup_norm(&self) -> f64 {
        self.weights
            .iter()
            .flat_map(|w| w.iter())
            .chain(self.biases.iter().flat_map(|b| b.iter()))
            .fold(0.0, |m, v| f64::max(m, v.abs()))
    }
}

/// Parameter update rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerKind {
    /// Gradient descent with heavy-ball momentum (`momentum = 0` is plain SGD).
    Sgd { lr: f64, momentum: f64 },
    Adam { lr: f64, beta1: f64, beta2: f64, eps: f64 },
}

impl OptimizerKind {
    pub fn adam(lr: f64) -> Self {
        Self::Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn sgd(lr: f64) -> Self {
        Self::Sgd { lr, momentum: 0.0 }
    }
}

/// Optimizer state for one network.
#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    m: Grads,
    v: Grads,
    t: i32,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, net: &Mlp) -> Self {
        Self {
            kind,
            m: Grads::zeros_like(net),
            v: Grads::zeros_like(net),
            t: 0,
        }
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    /// One descent step along `g`.
    pub fn step(&mut self, net: &mut Mlp, g: &Grads) {
        match self.kind {
            OptimizerKind::Sgd { lr, momentum } => {
                if momentum == 0.0 {
                    net.add_scaled(g, -lr);
                    return;
                }
                for (m, gw) in self.m.weights.iter_mut().zip(&g.weights) {
                    m.mapv_inplace(|v| v * momentum);
                    *m += gw;
                }
                for (m, gb) in self.m.biases.iter_mut().zip(&g.biases) {
                    m.mapv_inplace(|v| v * momentum);
                    *m += gb;
                }
                net.add_scaled(&self.m, -lr);
            }
            OptimizerKind::Adam { lr, beta1, beta2, eps } => {
                self.t += 1;
                let c1 = 1.0 - beta1.powi(self.t);
                let c2 = 1.0 - beta2.powi(self.t);
                let update = |p: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
                    *m = beta1 * *m + (1.0 - beta1) * g;
                    *v = beta2 * *v + (1.0 - beta2) * g * g;
                    *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
                };
                for l in 0..net.weights.len() {
                    ndarray::Zip::from(&mut net.weights[l])
                        .and(&mut self.m.weights[l])
                        .and(&mut self.v.weights[l])
                        .and(&g.weights[l])
                        .for_each(|p, m, v, &g| update(p, m, v, g));
                    if net.bias {
                        ndarray::Zip::from(&mut net.biases[l])
                            .and(&mut self.m.biases[l])
                            .and(&mut self.v.biases[l])
                            .and(&g.biases[l])
                            .for_each(|p, m, v, &g| update(p, m, v, g));
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn zero_net_outputs_zero() {
        let net = Mlp::zeros(&[3, 5, 2], true).unwrap();
        assert_eq!(net.predict(&[1.0, -2.0, 3.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn linear_layer_gradient_is_input() {
        let mut rng = crate::seeded_rng(0);
        let net = Mlp::new(&[3, 2], true, &mut rng).unwrap();
        let x = array![[0.5, -1.0, 2.0]];
        let cache = net.forward_cached(x.view()).unwrap();
        // d output_1 / d W[:, 1] = x, d output_1 / d b_1 = 1.
        let g = net.backward(&cache, array![[0.0, 1.0]].view()).unwrap();
        assert_eq!(g.weights[0].column(1).to_vec(), vec![0.5, -1.0, 2.0]);
        assert_eq!(g.weights[0].column(0).to_vec(), vec![0.0; 3]);
        assert_eq!(g.biases[0].to_vec(), vec![0.0, 1.0]);
    }

    #[test]
    fn relu_masks_hidden_units() {
        let mut net = Mlp::zeros(&[1, 2, 1], true).unwrap();
        net.weights[0] = array![[1.0, -1.0]];
        net.weights[1] = array![[2.0], [3.0]];
        assert_eq!(net.predict(&[2.0]).unwrap(), vec![4.0]);
        assert_eq!(net.predict(&[-2.0]).unwrap(), vec![6.0]);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let net = Mlp::zeros(&[3, 2], true).unwrap();
        assert!(net.predict(&[1.0]).is_err());
        assert!(Mlp::zeros(&[3], true).is_err());
        assert!(Mlp::zeros(&[3, 0, 2], true).is_err());
    }

    #[test]
    fn params_round_trip() {
        let mut rng = crate::seeded_rng(1);
        let a = Mlp::new(&[4, 8, 3], true, &mut rng).unwrap();
        let mut b = Mlp::zeros(&[4, 8, 3], true).unwrap();
        b.set_params(&a.params()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_params(), 4 * 8 + 8 + 8 * 3 + 3);
        let nb = Mlp::new(&[4, 3], false, &mut rng).unwrap();
        assert_eq!(nb.n_params(), 12);
        assert!(nb.biases().iter().all(|b| b.iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn checkpoint_round_trip_and_layout() {
        let mut rng = crate::seeded_rng(2);
        let net = Mlp::new(&[2, 3, 1], true, &mut rng).unwrap();
        let mut buf = Vec::new();
        net.save(&mut buf).unwrap();
        assert_eq!(buf.len(), 4 + 3 * 4 + 1 + 8 * (2 * 3 + 3 + 3 + 1));
        assert_eq!(&buf[..4], &3u32.to_le_bytes());
        let first_weight = f64::from_le_bytes(buf[17..25].try_into().unwrap());
        assert_eq!(first_weight, net.weights()[0][(0, 0)]);
        assert_eq!(Mlp::load(&buf[..]).unwrap(), net);
        assert!(Mlp::load(&buf[..10]).is_err());
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        let mut net = Mlp::zeros(&[1, 1], false).unwrap();
        let mut opt = Optimizer::new(OptimizerKind::adam(0.1), &net);
        let mut g = Grads::zeros_like(&net);
        g.weights[0][(0, 0)] = 3.0;
        opt.step(&mut net, &g);
        assert!((net.weights()[0][(0, 0)] + 0.1).abs() < 1e-9);
    }

    #[test]
    fn momentum_accumulates() {
        let mut net = Mlp::zeros(&[1, 1], false).unwrap();
        let mut opt = Optimizer::new(OptimizerKind::Sgd { lr: 1.0, momentum: 0.5 }, &net);
        let mut g = Grads::zeros_like(&net);
        g.weights[0][(0, 0)] = 1.0;
        opt.step(&mut net, &g);
        opt.step(&mut net, &g);
        assert_eq!(net.weights()[0][(0, 0)], -2.5);
    }
}
