//! The discriminator `D(·; θ)`: a fully-connected network ending in a single
//! sigmoid unit, with exact reverse-mode gradients of `log D` and
//! `log(1 − D)` with respect to both its parameters and its input.

mod checkpoint;
mod matrix;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint};
pub use matrix::Matrix;

use rand::Rng;

use crate::error::{GonError, Result};
use crate::rng::rng_from_seed;

/// Probabilities are clamped to `[PROB_EPS, 1 − PROB_EPS]` before any log.
pub const PROB_EPS: f64 = 1e-7;

pub const DEFAULT_HIDDEN_WIDTH: usize = 128;
pub const DEFAULT_HIDDEN_LAYERS: usize = 3;

/// Hidden-layer nonlinearity. The output unit is always a sigmoid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    LeakyRelu(f64),
    Tanh,
}

impl Default for Activation {
    fn default() -> Self {
        Activation::LeakyRelu(0.01)
    }
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::LeakyRelu(slope) => {
                if z > 0.0 {
                    z
                } else {
                    slope * z
                }
            }
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative evaluated at the pre-activation `z`.
    #[inline]
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::LeakyRelu(slope) => {
                if z > 0.0 {
                    1.0
                } else {
                    slope
                }
            }
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
        }
    }

    pub fn name(self) -> String {
        match self {
            Activation::LeakyRelu(slope) => format!("leaky_relu({slope})"),
            Activation::Tanh => "tanh".to_string(),
        }
    }
}

/// Which log term a gradient is taken of: `log D(x)` for real samples or
/// `log(1 − D(z))` for generated ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogTarget {
    Real,
    Fake,
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

#[inline]
pub fn clamp_probability(p: f64) -> f64 {
    p.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

/// The clamped log term as a function of the output logit.
pub fn log_term(logit: f64, target: LogTarget) -> f64 {
    let s = sigmoid(logit);
    let clamped = !(PROB_EPS..=1.0 - PROB_EPS).contains(&s);
    match (target, clamped) {
        (LogTarget::Real, false) => -softplus(-logit),
        (LogTarget::Fake, false) => -softplus(logit),
        (LogTarget::Real, true) => clamp_probability(s).ln(),
        (LogTarget::Fake, true) => (1.0 - clamp_probability(s)).ln(),
    }
}

/// d(log term)/d(logit). The `1/D` (or `1/(1 − D)`) factor uses the clamped
/// probability, so the result is finite for every finite logit.
pub fn log_term_logit_grad(logit: f64, target: LogTarget) -> f64 {
    let s = sigmoid(logit);
    let slope = s * sigmoid(-logit);
    let p = clamp_probability(s);
    match target {
        LogTarget::Real => slope / p,
        LogTarget::Fake => -slope / (1.0 - p),
    }
}

/// Cached intermediate values of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// Pre-activations of every layer; the last holds the single output logit.
    pre: Vec<Vec<f64>>,
    /// Layer inputs: `act[0]` is the network input, `act[i]` feeds layer `i`.
    act: Vec<Vec<f64>>,
    probability: f64,
}

impl ForwardTrace {
    pub fn logit(&self) -> f64 {
        self.pre.last().map_or(0.0, |v| v[0])
    }

    /// Clamped output probability.
    pub fn probability(&self) -> f64 {
        self.probability
    }

    pub fn input(&self) -> &[f64] {
        &self.act[0]
    }

    pub fn layer_count(&self) -> usize {
        self.pre.len()
    }

    pub fn log_term(&self, target: LogTarget) -> f64 {
        log_term(self.logit(), target)
    }
}

/// Parameter-shaped gradient buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(d: &Discriminator) -> Self {
        Self {
            weights: d.weights.iter().map(|w| Matrix::zeros(w.rows(), w.cols())).collect(),
            biases: d.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    /// Buffers in the same order as [`Discriminator::param_buffers_mut`].
    pub fn buffers(&self) -> Vec<&[f64]> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| [w.data(), b.as_slice()])
            .collect()
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.buffers().concat()
    }

    pub fn scale(&mut self, s: f64) {
        for w in &mut self.weights {
            w.data_mut().iter_mut().for_each(|v| *v *= s);
        }
        for b in &mut self.biases {
            b.iter_mut().for_each(|v| *v *= s);
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (w, o) in self.weights.iter_mut().zip(&other.weights) {
            w.data_mut().iter_mut().zip(o.data()).for_each(|(a, b)| *a += b);
        }
        for (b, o) in self.biases.iter_mut().zip(&other.biases) {
            b.iter_mut().zip(o).for_each(|(a, c)| *a += c);
        }
    }
}

/// Multilayer perceptron discriminator with a scalar sigmoid output.
#[derive(Debug, Clone, PartialEq)]
pub struct Discriminator {
    layer_sizes: Vec<usize>,
    weights: Vec<Matrix>,
    biases: Vec<Vec<f64>>,
    activation: Activation,
}

fn validate_layer_sizes(layer_sizes: &[usize]) -> Result<()> {
    if layer_sizes.len() < 2 {
        return Err(GonError::config(format!(
            "discriminator needs an input and an output layer, got {layer_sizes:?}"
        )));
    }
    if layer_sizes.contains(&0) {
        return Err(GonError::config(format!("zero-width layer in {layer_sizes:?}")));
    }
    if *layer_sizes.last().unwrap() != 1 {
        return Err(GonError::config(format!(
            "output layer must have width 1, got {layer_sizes:?}"
        )));
    }
    Ok(())
}

/// Glorot-uniform weights and zero biases, deterministic per seed.
pub fn init_discriminator(layer_sizes: &[usize], activation: Activation, seed: u64) -> Result<Discriminator> {
    Discriminator::new(layer_sizes, activation, seed)
}

impl Discriminator {
    pub fn new(layer_sizes: &[usize], activation: Activation, seed: u64) -> Result<Self> {
        validate_layer_sizes(layer_sizes)?;
        let mut rng = rng_from_seed(seed);
        let mut weights = Vec::with_capacity(layer_sizes.len() - 1);
        for pair in layer_sizes.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let data = (0..fan_in * fan_out)
                .map(|_| (2.0 * rng.random::<f64>() - 1.0) * bound)
                .collect();
            weights.push(Matrix::from_vec(fan_out, fan_in, data)?);
        }
        let biases = layer_sizes[1..].iter().map(|&n| vec![0.0; n]).collect();
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            weights,
            biases,
            activation,
        })
    }

    /// All-zero parameters; outputs 0.5 everywhere.
    pub fn zeros(layer_sizes: &[usize], activation: Activation) -> Result<Self> {
        validate_layer_sizes(layer_sizes)?;
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            weights: layer_sizes.windows(2).map(|p| Matrix::zeros(p[1], p[0])).collect(),
            biases: layer_sizes[1..].iter().map(|&n| vec![0.0; n]).collect(),
            activation,
        })
    }

    pub fn from_parts(
        layer_sizes: Vec<usize>,
        weights: Vec<Matrix>,
        biases: Vec<Vec<f64>>,
        activation: Activation,
    ) -> Result<Self> {
        validate_layer_sizes(&layer_sizes)?;
        let layers = layer_sizes.len() - 1;
        if weights.len() != layers || biases.len() != layers {
            return Err(GonError::DimensionMismatch {
                context: "parameter layer count",
                expected: layers,
                actual: weights.len().min(biases.len()),
            });
        }
        for (i, pair) in layer_sizes.windows(2).enumerate() {
            if weights[i].shape() != (pair[1], pair[0]) {
                return Err(GonError::config(format!(
                    "layer {i} weight shape {:?}, expected {:?}",
                    weights[i].shape(),
                    (pair[1], pair[0])
                )));
            }
            if biases[i].len() != pair[1] {
                return Err(GonError::DimensionMismatch {
                    context: "bias length",
                    expected: pair[1],
                    actual: biases[i].len(),
                });
            }
        }
        Ok(Self {
            layer_sizes,
            weights,
            biases,
            activation,
        })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    pub fn weights_mut(&mut self) -> &mut [Matrix] {
        &mut self.weights
    }

    pub fn biases_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.biases
    }

    /// Σ out·(in + 1) over layers.
    pub fn param_count(&self) -> usize {
        param_count_for(&self.layer_sizes)
    }

    /// Weight and bias buffers of every layer, interleaved `W0, b0, W1, b1, …`.
    pub fn param_buffers_mut(&mut self) -> Vec<&mut [f64]> {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| [w.data_mut(), b.as_mut_slice()])
            .collect()
    }

    pub fn param_buffers(&self) -> Vec<&[f64]> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| [w.data(), b.as_slice()])
            .collect()
    }

    pub fn params_finite(&self) -> bool {
        self.param_buffers().iter().all(|b| b.iter().all(|v| v.is_finite()))
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(GonError::DimensionMismatch {
                context: "discriminator input",
                expected: self.input_dim(),
                actual: x.len(),
            });
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(GonError::NonFinite("discriminator input"));
        }
        Ok(())
    }

    /// Runs the network on `x`, returning the clamped probability and the trace.
    pub fn forward(&self, x: &[f64]) -> Result<(f64, ForwardTrace)> {
        self.check_input(x)?;
        let layers = self.weights.len();
        let mut pre = Vec::with_capacity(layers);
        let mut act = Vec::with_capacity(layers);
        act.push(x.to_vec());
        for (i, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = vec![0.0; w.rows()];
            w.affine(&act[i], b, &mut z);
            if i + 1 < layers {
                act.push(z.iter().map(|&v| self.activation.apply(v)).collect());
            }
            pre.push(z);
        }
        let logit = pre[layers - 1][0];
        if !logit.is_finite() {
            return Err(GonError::NonFinite("discriminator output"));
        }
        let probability = clamp_probability(sigmoid(logit));
        Ok((probability, ForwardTrace { pre, act, probability }))
    }

    pub fn probability(&self, x: &[f64]) -> Result<f64> {
        self.forward(x).map(|(p, _)| p)
    }

    /// Clamped `log D(x)` or `log(1 − D(x))`.
    pub fn log_d(&self, x: &[f64], target: LogTarget) -> Result<f64> {
        self.forward(x).map(|(_, t)| t.log_term(target))
    }

    fn check_trace(&self, trace: &ForwardTrace) -> Result<()> {
        let ok = trace.pre.len() == self.weights.len()
            && trace.act.len() == self.weights.len()
            && trace.pre.iter().zip(&self.layer_sizes[1..]).all(|(p, &n)| p.len() == n)
            && trace.act.iter().zip(&self.layer_sizes).all(|(a, &n)| a.len() == n);
        if ok {
            Ok(())
        } else {
            Err(GonError::config(
                "forward trace does not match this discriminator's shape",
            ))
        }
    }

    /// Reverse pass from d(loss)/d(logit). Accumulates `scale ·` parameter
    /// gradients into `grads` when given; returns the input gradient when
    /// `want_input` is set.
    fn backward(
        &self,
        trace: &ForwardTrace,
        logit_grad: f64,
        mut grads: Option<(&mut Gradients, f64)>,
        want_input: bool,
    ) -> Option<Vec<f64>> {
        let mut delta = vec![logit_grad];
        for i in (0..self.weights.len()).rev() {
            if let Some((g, scale)) = grads.as_mut() {
                g.weights[i].add_outer(&delta, &trace.act[i], *scale);
                for (gb, d) in g.biases[i].iter_mut().zip(&delta) {
                    *gb += *scale * d;
                }
            }
            if i == 0 && !want_input {
                return None;
            }
            let mut prev = vec![0.0; self.layer_sizes[i]];
            self.weights[i].transpose_mul(&delta, &mut prev);
            if i > 0 {
                for (p, &z) in prev.iter_mut().zip(&trace.pre[i - 1]) {
                    *p *= self.activation.derivative(z);
                }
            }
            delta = prev;
        }
        Some(delta)
    }

    /// ∇θ of `log D(x)` ([`LogTarget::Real`]) or `log(1 − D(x))`
    /// ([`LogTarget::Fake`]) at the input recorded in `trace`.
    pub fn grad_params_log_d(&self, trace: &ForwardTrace, target: LogTarget) -> Result<Gradients> {
        let mut grads = Gradients::zeros_like(self);
        self.accumulate_param_grad(trace, target, 1.0, &mut grads)?;
        Ok(grads)
    }

    /// `grads += scale · ∇θ(log term)`.
    pub fn accumulate_param_grad(
        &self,
        trace: &ForwardTrace,
        target: LogTarget,
        scale: f64,
        grads: &mut Gradients,
    ) -> Result<()> {
        self.check_trace(trace)?;
        if grads.weights.len() != self.weights.len()
            || grads
                .weights
                .iter()
                .zip(&self.weights)
                .any(|(g, w)| g.shape() != w.shape())
        {
            return Err(GonError::config("gradient buffers do not match parameter shapes"));
        }
        let g = log_term_logit_grad(trace.logit(), target);
        self.backward(trace, g, Some((grads, scale)), false);
        Ok(())
    }

    /// ∇x log D(x).
    pub fn grad_input_log_d(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.log_d_with_input_grad(x).map(|(_, _, g)| g)
    }

    /// `(log D(x), D(x), ∇x log D(x))` from one forward and one reverse pass.
    pub fn log_d_with_input_grad(&self, x: &[f64]) -> Result<(f64, f64, Vec<f64>)> {
        let (p, trace) = self.forward(x)?;
        let logit = trace.logit();
        let g = log_term_logit_grad(logit, LogTarget::Real);
        let grad = self.backward(&trace, g, None, true).expect("input gradient requested");
        Ok((log_term(logit, LogTarget::Real), p, grad))
    }
}

/// Parameter count of an MLP with the given layer sizes.
pub fn param_count_for(layer_sizes: &[usize]) -> usize {
    layer_sizes.windows(2).map(|p| p[1] * (p[0] + 1)).sum()
}

/// Layer sizes `[input, hidden × layers, 1]`.
pub fn layer_plan(input_dim: usize, hidden_width: usize, hidden_layers: usize) -> Vec<usize> {
    let mut sizes = Vec::with_capacity(hidden_layers + 2);
    sizes.push(input_dim);
    sizes.extend(std::iter::repeat_n(hidden_width, hidden_layers));
    sizes.push(1);
    sizes
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn init_is_deterministic() {
        let a = Discriminator::new(&[4, 128, 1], Activation::default(), 0).unwrap();
        let b = Discriminator::new(&[4, 128, 1], Activation::default(), 0).unwrap();
        assert_eq!(a, b);
        let c = Discriminator::new(&[4, 128, 1], Activation::default(), 1).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn glorot_bounds_and_zero_bias() {
        let d = Discriminator::new(&[10, 30, 1], Activation::Tanh, 3).unwrap();
        let bound = (6.0f64 / 40.0).sqrt();
        assert!(d.weights()[0].data().iter().all(|w| w.abs() <= bound));
        assert!(d.biases().iter().flatten().all(|&b| b == 0.0));
    }

    #[test]
    fn rejects_degenerate_layers() {
        assert!(Discriminator::new(&[3, 0, 1], Activation::default(), 0).is_err());
        assert!(Discriminator::new(&[], Activation::default(), 0).is_err());
        assert!(Discriminator::new(&[3], Activation::default(), 0).is_err());
        assert!(Discriminator::new(&[3, 4, 2], Activation::default(), 0).is_err());
    }

    #[test]
    fn zero_network_outputs_half() {
        let d = Discriminator::zeros(&[3, 5, 1], Activation::default()).unwrap();
        let (p, _) = d.forward(&[0.3, -2.0, 7.0]).unwrap();
        assert_eq!(p, 0.5);
        assert_eq!(d.grad_input_log_d(&[0.3, -2.0, 7.0]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn one_one_one_hand_evaluation() {
        // D(x) = σ(w2·leaky(w1·x + b1) + b2)
        let (w1, b1, w2, b2) = (1.5, -0.25, -2.0, 0.5);
        let d = Discriminator::from_parts(
            vec![1, 1, 1],
            vec![
                Matrix::from_vec(1, 1, vec![w1]).unwrap(),
                Matrix::from_vec(1, 1, vec![w2]).unwrap(),
            ],
            vec![vec![b1], vec![b2]],
            Activation::LeakyRelu(0.1),
        )
        .unwrap();
        for x in [0.7, -0.4] {
            let h = w1 * x + b1;
            let h = if h > 0.0 { h } else { 0.1 * h };
            let expected = 1.0 / (1.0 + (-(w2 * h + b2)).exp());
            assert_relative_eq!(d.probability(&[x]).unwrap(), expected, max_relative = 1e-15);
        }
    }

    #[test]
    fn forward_rejects_bad_input() {
        let d = Discriminator::new(&[2, 3, 1], Activation::default(), 0).unwrap();
        assert!(matches!(d.forward(&[1.0]), Err(GonError::DimensionMismatch { .. })));
        assert!(matches!(d.forward(&[1.0, f64::NAN]), Err(GonError::NonFinite(_))));
    }

    #[test]
    fn half_probability_bias_symmetry() {
        let d = Discriminator::zeros(&[2, 3, 1], Activation::default()).unwrap();
        let (_, trace) = d.forward(&[0.1, 0.2]).unwrap();
        let real = d.grad_params_log_d(&trace, LogTarget::Real).unwrap();
        let fake = d.grad_params_log_d(&trace, LogTarget::Fake).unwrap();
        let (br, bf) = (real.biases[1][0], fake.biases[1][0]);
        assert_eq!(br, 0.5);
        assert_eq!(br, -bf);
    }

    #[test]
    fn saturated_fake_gradient_is_finite() {
        // logit 40 puts σ within 1e-17 of 1, well inside the clamp
        let d = Discriminator::from_parts(
            vec![1, 1],
            vec![Matrix::from_vec(1, 1, vec![1.0]).unwrap()],
            vec![vec![0.0]],
            Activation::default(),
        )
        .unwrap();
        let (p, trace) = d.forward(&[40.0]).unwrap();
        assert_eq!(p, 1.0 - PROB_EPS);
        let g = d.grad_params_log_d(&trace, LogTarget::Fake).unwrap();
        // clamped formula: −σ'(a)/(1 − (1 − ε)) with σ'(40) = σ(40)σ(−40)
        let expected = -(sigmoid(40.0) * sigmoid(-40.0)) / (1.0 - (1.0 - PROB_EPS));
        assert!(g.biases[0][0].is_finite());
        assert_relative_eq!(g.biases[0][0], expected, max_relative = 1e-12);
        assert_relative_eq!(g.weights[0].get(0, 0), 40.0 * expected, max_relative = 1e-12);
        assert_eq!(trace.log_term(LogTarget::Fake), (1.0 - (1.0 - PROB_EPS)).ln());
    }

    #[test]
    fn param_count_formula() {
        let d = Discriminator::new(&[4, 128, 1], Activation::default(), 0).unwrap();
        assert_eq!(d.param_count(), 769);
        let total: usize = d.param_buffers().iter().map(|b| b.len()).sum();
        assert_eq!(total, 769);
    }

    #[test]
    fn trace_mismatch_is_rejected() {
        let a = Discriminator::new(&[2, 3, 1], Activation::default(), 0).unwrap();
        let b = Discriminator::new(&[2, 4, 1], Activation::default(), 0).unwrap();
        let (_, trace) = a.forward(&[0.0, 1.0]).unwrap();
        assert!(b.grad_params_log_d(&trace, LogTarget::Real).is_err());
    }
}
