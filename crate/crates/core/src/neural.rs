//! Multilayer perceptron for binary targets: tanh hidden layers, a sigmoid
//! output unit, binary cross-entropy plus `(l2 / 2) * sum(w^2)` over the
//! weight matrices (biases are not penalized), trained by mini-batch SGD or
//! Adam.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::dataset::Standardizer;
use crate::math::{sigmoid, softplus};
use crate::matrix::{expect_cols, Design};
use crate::rng::{self};
use crate::{Error, Result};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub optimizer: Optimizer,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub l2: f64,
    /// Rescale inputs with statistics of the training rows.
    pub standardize: bool,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden: vec![32, 32],
            activation: Activation::Tanh,
            optimizer: Optimizer::Adam,
            learning_rate: 0.01,
            batch_size: 256,
            epochs: 20,
            l2: 1e-4,
            standardize: true,
        }
    }
}

impl MlpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden.is_empty() {
            return Err(Error::config("hidden", "at least one hidden layer is required"));
        }
        if self.hidden.contains(&0) {
            return Err(Error::config("hidden", "layer widths must be positive"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::config("learning_rate", "must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size", "must be at least 1"));
        }
        if self.epochs == 0 {
            return Err(Error::config("epochs", "must be at least 1"));
        }
        if !(self.l2.is_finite() && self.l2 >= 0.0) {
            return Err(Error::config("l2", "must be nonnegative"));
        }
        Ok(())
    }
}

/// Weights and biases. Layer `l` maps `layer_sizes[l]` inputs to
/// `layer_sizes[l + 1]` outputs; its weight matrix is row-major
/// `out x in`. The same shape doubles as a gradient container.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub layer_sizes: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

/// Symmetric uniform weights in `±1/sqrt(fan_in)`, zero biases.
pub fn init_mlp(layer_sizes: &[usize], seed: u64) -> Result<MlpParams> {
    if layer_sizes.len() < 3 {
        return Err(Error::invalid("an MLP needs input, hidden and output layers"));
    }
    if layer_sizes.contains(&0) {
        return Err(Error::invalid("layer widths must be positive"));
    }
    if *layer_sizes.last().unwrap() != 1 {
        return Err(Error::invalid("the output layer must have one unit"));
    }
    let mut rng = rng::from_seed(seed);
    let mut weights = Vec::new();
    let mut biases = Vec::new();
    for pair in layer_sizes.windows(2) {
        let (fan_in, fan_out) = (pair[0], pair[1]);
        let bound = 1.0 / libm::sqrt(fan_in as f64);
        weights.push(
            (0..fan_in * fan_out)
                .map(|_| rng.gen_range(-bound..=bound))
                .collect(),
        );
        biases.push(vec![0.0; fan_out]);
    }
    Ok(MlpParams {
        layer_sizes: layer_sizes.to_vec(),
        weights,
        biases,
    })
}

impl MlpParams {
    pub fn zeros_like(&self) -> MlpParams {
        MlpParams {
            layer_sizes: self.layer_sizes.clone(),
            weights: self.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: self.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn n_inputs(&self) -> usize {
        self.layer_sizes[0]
    }

    fn n_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.biases).flatten().all(|v| v.is_finite())
    }

    /// Activations of every layer; the last holds the output logit.
    fn activations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(self.n_layers() + 1);
        acts.push(x.to_vec());
        for l in 0..self.n_layers() {
            let (n_in, n_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            let input = &acts[l];
            let w = &self.weights[l];
            let last = l + 1 == self.n_layers();
            let out: Vec<f64> = (0..n_out)
                .map(|j| {
                    let row = &w[j * n_in..(j + 1) * n_in];
                    let z = self.biases[l][j]
                        + row.iter().zip(input).map(|(a, b)| a * b).sum::<f64>();
                    if last {
                        z
                    } else {
                        libm::tanh(z)
                    }
                })
                .collect();
            acts.push(out);
        }
        acts
    }

    pub fn logit(&self, x: &[f64]) -> f64 {
        self.activations(x).last().unwrap()[0]
    }

    /// Probability of the positive class.
    pub fn forward(&self, x: &[f64]) -> f64 {
        sigmoid(self.logit(x))
    }

    pub fn weight_penalty(&self, l2: f64) -> f64 {
        0.5 * l2 * self.weights.iter().flatten().map(|w| w * w).sum::<f64>()
    }

    /// Mean cross-entropy over `rows` plus the L2 penalty, and its gradient.
    /// `inputs` yields the (already standardized) feature vector of a row.
    pub fn loss_and_gradient(
        &self,
        inputs: &[Vec<f64>],
        targets: &[bool],
        l2: f64,
    ) -> (f64, MlpParams) {
        let mut grad = self.zeros_like();
        let batch = inputs.len().max(1) as f64;
        let mut loss = 0.0;
        for (x, &y) in inputs.iter().zip(targets) {
            let acts = self.activations(x);
            let z = acts.last().unwrap()[0];
            let target = f64::from(u8::from(y));
            loss += softplus(z) - target * z;
            let mut delta = vec![(sigmoid(z) - target) / batch];
            for l in (0..self.n_layers()).rev() {
                let n_in = self.layer_sizes[l];
                let input = &acts[l];
                let gw = &mut grad.weights[l];
                for (j, d) in delta.iter().enumerate() {
                    grad.biases[l][j] += d;
                    for (g, a) in gw[j * n_in..(j + 1) * n_in].iter_mut().zip(input) {
                        *g += d * a;
                    }
                }
                if l == 0 {
                    break;
                }
                let w = &self.weights[l];
                delta = (0..n_in)
                    .map(|i| {
                        let back: f64 = delta
                            .iter()
                            .enumerate()
                            .map(|(j, d)| w[j * n_in + i] * d)
                            .sum();
                        back * (1.0 - input[i] * input[i])
                    })
                    .collect();
            }
        }
        for (g, w) in grad.weights.iter_mut().zip(&self.weights) {
            for (gi, wi) in g.iter_mut().zip(w) {
                *gi += l2 * wi;
            }
        }
        (loss / batch + self.weight_penalty(l2), grad)
    }

    fn zip_mut(&mut self, other: &MlpParams, mut f: impl FnMut(&mut f64, f64)) {
        for (a, b) in self
            .weights
            .iter_mut()
            .chain(self.biases.iter_mut())
            .zip(other.weights.iter().chain(&other.biases))
        {
            for (x, y) in a.iter_mut().zip(b) {
                f(x, *y);
            }
        }
    }

    /// Plain gradient step.
    pub fn sgd_step(&mut self, grad: &MlpParams, learning_rate: f64) {
        self.zip_mut(grad, |p, g| *p -= learning_rate * g);
    }
}

struct AdamState {
    m: MlpParams,
    v: MlpParams,
    t: i32,
}

impl AdamState {
    fn new(params: &MlpParams) -> Self {
        AdamState {
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
        }
    }

    fn step(&mut self, params: &mut MlpParams, grad: &MlpParams, learning_rate: f64) {
        self.t += 1;
        self.m.zip_mut(grad, |m, g| *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g);
        self.v.zip_mut(grad, |v, g| *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g);
        let c1 = 1.0 - libm::pow(ADAM_BETA1, f64::from(self.t));
        let c2 = 1.0 - libm::pow(ADAM_BETA2, f64::from(self.t));
        let step = |p: &mut f64, m: f64, v: f64| {
            *p -= learning_rate * (m / c1) / (libm::sqrt(v / c2) + ADAM_EPSILON);
        };
        for l in 0..params.weights.len() {
            for i in 0..params.weights[l].len() {
                step(&mut params.weights[l][i], self.m.weights[l][i], self.v.weights[l][i]);
            }
            for i in 0..params.biases[l].len() {
                step(&mut params.biases[l][i], self.m.biases[l][i], self.v.biases[l][i]);
            }
        }
    }
}

/// Runs `config.epochs` passes of shuffled mini-batches over `(x, y)`.
/// Rows are standardized with `scaler` when given.
pub fn train(
    mut params: MlpParams,
    x: &dyn Design,
    y: &[bool],
    scaler: Option<&Standardizer>,
    config: &MlpConfig,
    seed: u64,
) -> Result<MlpParams> {
    config.validate()?;
    expect_cols(x, params.n_inputs())?;
    let n = x.n_rows();
    if n == 0 || y.len() != n {
        return Err(Error::Shape {
            what: "training rows",
            expected: n,
            found: y.len(),
        });
    }
    let batch_size = config.batch_size.min(n);
    let mut rng = rng::substream(seed, 1);
    let mut order: Vec<usize> = (0..n).collect();
    let mut adam = AdamState::new(&params);
    let mut inputs: Vec<Vec<f64>> = Vec::with_capacity(batch_size);
    let mut targets: Vec<bool> = Vec::with_capacity(batch_size);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for (batch, chunk) in order.chunks(batch_size).enumerate() {
            inputs.clear();
            targets.clear();
            for &r in chunk {
                let mut row = vec![0.0; x.n_cols()];
                x.row_into(r, &mut row);
                if let Some(s) = scaler {
                    s.apply(&mut row);
                }
                inputs.push(row);
                targets.push(y[r]);
            }
            let (loss, grad) = params.loss_and_gradient(&inputs, &targets, config.l2);
            if !loss.is_finite() {
                return Err(Error::NonFinite { epoch, batch });
            }
            match config.optimizer {
                Optimizer::Sgd => params.sgd_step(&grad, config.learning_rate),
                Optimizer::Adam => adam.step(&mut params, &grad, config.learning_rate),
            }
            if !params.is_finite() {
                return Err(Error::NonFinite { epoch, batch });
            }
        }
    }
    Ok(params)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub config: MlpConfig,
    pub seed: u64,
    pub standardizer: Option<Standardizer>,
    pub params: MlpParams,
}

/// Fits the input standardizer (if configured), initializes and trains.
pub fn fit_mlp(x: &dyn Design, y: &[bool], config: &MlpConfig, seed: u64) -> Result<MlpModel> {
    config.validate()?;
    if x.n_rows() == 0 || x.n_cols() == 0 {
        return Err(Error::invalid("cannot fit on empty input"));
    }
    let standardizer = if config.standardize {
        Some(Standardizer::fit(x)?)
    } else {
        None
    };
    let mut sizes = vec![x.n_cols()];
    sizes.extend_from_slice(&config.hidden);
    sizes.push(1);
    let init = init_mlp(&sizes, rng::derive_seed(seed, 0))?;
    let params = train(init, x, y, standardizer.as_ref(), config, seed)?;
    Ok(MlpModel {
        config: config.clone(),
        seed,
        standardizer,
        params,
    })
}

impl MlpModel {
    pub fn n_features(&self) -> usize {
        self.params.n_inputs()
    }

    pub fn predict_proba(&self, x: &dyn Design) -> Result<Vec<f64>> {
        expect_cols(x, self.n_features())?;
        let mut row = vec![0.0; x.n_cols()];
        Ok((0..x.n_rows())
            .map(|r| {
                x.row_into(r, &mut row);
                if let Some(s) = &self.standardizer {
                    s.apply(&mut row);
                }
                self.params.forward(&row)
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::DenseMatrix;

    #[test]
    fn init_shapes_and_bounds() {
        let p = init_mlp(&[4, 3, 1], 0).unwrap();
        assert_eq!(p.weights[0].len(), 3 * 4);
        assert_eq!(p.weights[1].len(), 3);
        assert_eq!(p, init_mlp(&[4, 3, 1], 0).unwrap());
        let wide = init_mlp(&[100, 8, 1], 1).unwrap();
        assert!(wide.weights[0].iter().all(|w| w.abs() <= 0.1));
        assert!(wide.biases.iter().flatten().all(|b| *b == 0.0));
        assert!(init_mlp(&[4, 0, 1], 0).is_err());
        assert!(init_mlp(&[4, 1], 0).is_err());
    }

    #[test]
    fn zero_network_outputs_one_half() {
        let p = init_mlp(&[3, 5, 4, 1], 2).unwrap().zeros_like();
        for x in [[0.0, 0.0, 0.0], [5.0, -2.0, 1e3]] {
            assert_eq!(p.forward(&x), 0.5);
        }
    }

    #[test]
    fn sgd_step_reduces_single_sample_loss() {
        let p = init_mlp(&[3, 4, 1], 5).unwrap();
        let x = vec![vec![0.3, -1.2, 0.8]];
        let y = [true];
        let (before, grad) = p.loss_and_gradient(&x, &y, 0.01);
        let mut q = p.clone();
        q.sgd_step(&grad, 1e-4);
        let (after, _) = q.loss_and_gradient(&x, &y, 0.01);
        assert!(after < before);
    }

    #[test]
    fn learns_a_threshold() {
        let rows: Vec<Vec<f64>> = (0..200).map(|i| vec![i as f64 / 10.0]).collect();
        let y: Vec<bool> = (0..200).map(|i| i >= 100).collect();
        let x = DenseMatrix::from_rows(&rows).unwrap();
        let config = MlpConfig {
            hidden: vec![8],
            epochs: 60,
            batch_size: 16,
            learning_rate: 0.05,
            ..MlpConfig::default()
        };
        let model = fit_mlp(&x, &y, &config, 3).unwrap();
        let p = model.predict_proba(&x).unwrap();
        let acc = p.iter().zip(&y).filter(|(p, l)| (**p >= 0.5) == **l).count();
        assert!(acc >= 195, "accuracy {acc}/200");
        assert_eq!(model, fit_mlp(&x, &y, &config, 3).unwrap());
    }

    #[test]
    fn divergence_is_reported() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 * 1e150]).collect();
        let y: Vec<bool> = (0..20).map(|i| i % 2 == 0).collect();
        let x = DenseMatrix::from_rows(&rows).unwrap();
        let config = MlpConfig {
            hidden: vec![2],
            standardize: false,
            optimizer: Optimizer::Sgd,
            learning_rate: 1e10,
            l2: 1.0,
            ..MlpConfig::default()
        };
        let err = fit_mlp(&x, &y, &config, 0).unwrap_err();
        assert!(err.is_training_failure(), "{err:?}");
    }

    #[test]
    fn table_config_is_valid() {
        MlpConfig {
            hidden: vec![32, 32],
            optimizer: Optimizer::Sgd,
            learning_rate: 0.05,
            batch_size: 256,
            epochs: 75,
            l2: 0.07,
            ..MlpConfig::default()
        }
        .validate()
        .unwrap();
    }
}
