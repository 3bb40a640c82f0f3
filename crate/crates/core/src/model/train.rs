use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::mlp::{Gradients, MlpModel};
use crate::rng::SplitMix64;
use crate::signal::{FeatureDataset, N_FEATURES, N_TARGETS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub l2_penalty: f64,
    pub batch_size: usize,
    pub shuffle_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            learning_rate: 1e-4,
            momentum: 0.9,
            l2_penalty: 1e-2,
            batch_size: 16,
            shuffle_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("epochs and batch_size must be positive".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config(format!("learning_rate must be positive, got {}", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!("momentum must be in [0, 1), got {}", self.momentum)));
        }
        if !(self.l2_penalty.is_finite() && self.l2_penalty >= 0.0) {
            return Err(Error::Config(format!("l2_penalty must be non-negative, got {}", self.l2_penalty)));
        }
        Ok(())
    }
}

/// Momentum buffers, one per parameter, starting at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub velocity: Gradients,
}

impl OptimizerState {
    pub fn new(model: &MlpModel) -> Self {
        Self {
            velocity: Gradients::zeros_like(model),
        }
    }
}

/// `v <- momentum * v - learning_rate * g; theta <- theta + v`.
/// `g` is expected to already contain the L2 term.
pub fn sgd_step(model: &mut MlpModel, state: &mut OptimizerState, grads: &Gradients, config: &TrainConfig) {
    let (mu, eta) = (config.momentum, config.learning_rate);
    let params = model.weights.iter_mut().chain(model.biases.iter_mut());
    let velocities = state.velocity.weights.iter_mut().chain(state.velocity.biases.iter_mut());
    let gradients = grads.weights.iter().chain(grads.biases.iter());
    for ((theta, v), g) in params.zip(velocities).zip(gradients) {
        for ((t, vi), gi) in theta.iter_mut().zip(v.iter_mut()).zip(g) {
            *vi = mu * *vi - eta * gi;
            *t += *vi;
        }
    }
}

/// Trains on every row of `data`; returns the per-epoch loss trace.
pub fn train(model: &mut MlpModel, data: &FeatureDataset, config: &TrainConfig) -> Result<Vec<f64>> {
    train_rows(model, &data.inputs, &data.targets, config)
}

/// Mini-batch SGD over `inputs`/`targets`. Each epoch visits the rows in a
/// fresh permutation drawn from `SplitMix64::derive(shuffle_seed, [epoch])`;
/// the last batch of an epoch may be short. The trace entry for an epoch is
/// the row-weighted mean of its mini-batch losses.
pub fn train_rows(
    model: &mut MlpModel,
    inputs: &[[f64; N_FEATURES]],
    targets: &[[f64; N_TARGETS]],
    config: &TrainConfig,
) -> Result<Vec<f64>> {
    config.validate()?;
    model.validate()?;
    if inputs.is_empty() || inputs.len() != targets.len() {
        return Err(Error::Training {
            location: "dataset".into(),
            message: format!("{} input rows and {} target rows", inputs.len(), targets.len()),
        });
    }
    if model.input_dim() != N_FEATURES || model.output_dim() != N_TARGETS {
        return Err(Error::Config(format!(
            "model maps {} -> {}, data has {N_FEATURES} features and {N_TARGETS} targets",
            model.input_dim(),
            model.output_dim()
        )));
    }

    let n = inputs.len();
    let batch = config.batch_size.min(n);
    let mut state = OptimizerState::new(model);
    let mut grads = Gradients::zeros_like(model);
    let mut order: Vec<usize> = (0..n).collect();
    let mut xb = Vec::with_capacity(batch * N_FEATURES);
    let mut yb = Vec::with_capacity(batch * N_TARGETS);
    let mut trace = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.iter_mut().enumerate().for_each(|(i, o)| *o = i);
        SplitMix64::derive(config.shuffle_seed, &[epoch as u64]).shuffle(&mut order);
        let mut total = 0.0;
        for chunk in order.chunks(batch) {
            xb.clear();
            yb.clear();
            for &r in chunk {
                xb.extend_from_slice(&inputs[r]);
                yb.extend_from_slice(&targets[r]);
            }
            let loss = model
                .loss_and_gradient_into(&xb, &yb, chunk.len(), config.l2_penalty, &mut grads)
                .map_err(|e| match e {
                    Error::Training { location, message } => Error::Training {
                        location: format!("epoch {}, {location}", epoch + 1),
                        message,
                    },
                    other => other,
                })?;
            total += loss * chunk.len() as f64;
            sgd_step(model, &mut state, &grads, config);
        }
        let mean = total / n as f64;
        if !mean.is_finite() || model.weights.iter().flatten().any(|w| !w.is_finite()) {
            return Err(Error::Training {
                location: format!("epoch {}", epoch + 1),
                message: "training diverged".into(),
            });
        }
        log::debug!("epoch {}: loss {mean:.6}", epoch + 1);
        trace.push(mean);
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::mlp::DEFAULT_LAYER_DIMS;

    fn scalar_model(w: f64) -> MlpModel {
        let mut m = MlpModel::zeros(&[1, 1]).unwrap();
        m.weights[0][0] = w;
        m
    }

    fn scalar_grads(g: f64) -> Gradients {
        Gradients {
            weights: vec![vec![g]],
            biases: vec![vec![0.0]],
        }
    }

    #[test]
    fn default_config_values() {
        let c = TrainConfig::default();
        assert_eq!((c.epochs, c.batch_size), (30, 16));
        assert_eq!((c.learning_rate, c.momentum, c.l2_penalty), (1e-4, 0.9, 1e-2));
        c.validate().unwrap();
    }

    #[test]
    fn rejects_bad_config() {
        for c in [
            TrainConfig { momentum: 1.0, ..Default::default() },
            TrainConfig { batch_size: 0, ..Default::default() },
            TrainConfig { learning_rate: 0.0, ..Default::default() },
            TrainConfig { epochs: 0, ..Default::default() },
        ] {
            assert!(matches!(c.validate(), Err(Error::Config(_))));
        }
    }

    #[test]
    fn zero_gradient_from_rest_is_a_fixed_point() {
        let mut m = MlpModel::init(&[6, 4, 2], 1).unwrap();
        let before = m.clone();
        let mut s = OptimizerState::new(&m);
        sgd_step(&mut m, &mut s, &Gradients::zeros_like(&before), &TrainConfig::default());
        assert_eq!(m, before);
    }

    #[test]
    fn scalar_update_matches_hand_evaluation() {
        let mut m = scalar_model(1.0);
        let mut s = OptimizerState::new(&m);
        sgd_step(&mut m, &mut s, &scalar_grads(0.51), &TrainConfig::default());
        assert!((s.velocity.weights[0][0] + 5.1e-5).abs() < 1e-18);
        assert!((m.weights[0][0] - 0.999949).abs() < 1e-15);
    }

    #[test]
    fn second_step_with_constant_gradient_is_1_9_times_the_first() {
        let mut m = scalar_model(1.0);
        let mut s = OptimizerState::new(&m);
        let cfg = TrainConfig::default();
        sgd_step(&mut m, &mut s, &scalar_grads(0.51), &cfg);
        let d1 = m.weights[0][0] - 1.0;
        let w1 = m.weights[0][0];
        sgd_step(&mut m, &mut s, &scalar_grads(0.51), &cfg);
        let d2 = m.weights[0][0] - w1;
        assert!((d2 / d1 - 1.9).abs() < 1e-9);
    }

    #[test]
    fn weight_decay_alone_shrinks_weights() {
        // Perfect fit: only the L2 term contributes to the gradient.
        let m0 = MlpModel::init(&[6, 8, 2], 4).unwrap();
        let x = vec![0.5; 6 * 3];
        let y = m0.forward_batch(&x, 3).unwrap();
        let (_, g) = m0.loss_and_gradient(&x, &y, 3, 0.01).unwrap();
        let mut m = m0.clone();
        sgd_step(&mut m, &mut OptimizerState::new(&m0), &g, &TrainConfig::default());
        assert!(m.sum_squared_weights() < m0.sum_squared_weights());
    }

    fn random_rows(seed: u64, n: usize) -> Vec<[f64; N_FEATURES]> {
        let mut rng = SplitMix64::new(seed);
        (0..n).map(|_| std::array::from_fn(|_| rng.next_f64())).collect()
    }

    #[test]
    fn training_is_deterministic_and_loss_decreases() {
        let x = random_rows(3, 200);
        let y: Vec<[f64; 2]> = x.iter().map(|r| [10.0 * (r[0] * 3.0).sin() + r[3], 5.0 * r[1] * r[4]]).collect();
        let cfg = TrainConfig {
            epochs: 5,
            learning_rate: 1e-3,
            shuffle_seed: 7,
            ..Default::default()
        };
        let mut a = MlpModel::init(&DEFAULT_LAYER_DIMS, 1).unwrap();
        let mut b = a.clone();
        let ta = train_rows(&mut a, &x, &y, &cfg).unwrap();
        let tb = train_rows(&mut b, &x, &y, &cfg).unwrap();
        assert_eq!(ta.len(), 5);
        assert_eq!(ta, tb);
        assert_eq!(a, b);
        assert!(ta[4] < ta[0]);
    }

    #[test]
    fn linear_net_approaches_least_squares_optimum() {
        let n = 300;
        let x = random_rows(11, n);
        let mut rng = SplitMix64::new(12);
        let y: Vec<[f64; 2]> = x
            .iter()
            .map(|r| {
                let a = 1.0 + 2.0 * r[0] - r[1] + 0.5 * r[2] + 3.0 * r[5];
                let b = -1.0 + r[3] - 2.0 * r[4];
                [a + 0.1 * rng.standard_normal(), b + 0.1 * rng.standard_normal()]
            })
            .collect();

        // Least-squares optimum per output via the normal equations.
        let design = nalgebra::DMatrix::from_fn(n, 7, |i, j| if j == 6 { 1.0 } else { x[i][j] });
        let mut optimum = 0.0;
        for k in 0..2 {
            let t = nalgebra::DVector::from_fn(n, |i, _| y[i][k]);
            let beta = (design.transpose() * &design).lu().solve(&(design.transpose() * &t)).unwrap();
            optimum += (&design * beta - t).norm_squared();
        }
        let optimal_half_mse = 0.5 * optimum / n as f64;

        let mut m = MlpModel::init(&[6, 2], 5).unwrap();
        let cfg = TrainConfig {
            epochs: 400,
            learning_rate: 0.05,
            momentum: 0.9,
            l2_penalty: 0.0,
            batch_size: 16,
            shuffle_seed: 1,
        };
        train_rows(&mut m, &x, &y, &cfg).unwrap();
        let flat: Vec<f64> = x.iter().flatten().copied().collect();
        let pred = m.forward_batch(&flat, n).unwrap();
        let achieved: f64 = pred
            .chunks(2)
            .zip(&y)
            .map(|(p, t)| (p[0] - t[0]).powi(2) + (p[1] - t[1]).powi(2))
            .sum::<f64>()
            * 0.5
            / n as f64;
        assert!(achieved <= 1.05 * optimal_half_mse, "{achieved} vs {optimal_half_mse}");
    }

    #[test]
    fn divergence_reports_epoch() {
        let x = random_rows(3, 50);
        let y: Vec<[f64; 2]> = x.iter().map(|r| [1e6 * r[0], 1e6 * r[1]]).collect();
        let mut m = MlpModel::init(&DEFAULT_LAYER_DIMS, 1).unwrap();
        let cfg = TrainConfig {
            learning_rate: 10.0,
            momentum: 0.99,
            ..Default::default()
        };
        match train_rows(&mut m, &x, &y, &cfg) {
            Err(Error::Training { location, .. }) => assert!(location.starts_with("epoch"), "{location}"),
            other => panic!("expected training error, got {other:?}"),
        }
    }
}
