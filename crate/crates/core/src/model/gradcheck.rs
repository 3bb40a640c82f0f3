use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::mlp::{MlpModel, DEFAULT_LAYER_DIMS};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckConfig {
    pub layer_dims: Vec<usize>,
    pub seed: u64,
    pub batch_rows: usize,
    pub weights_per_layer: usize,
    pub biases_per_layer: usize,
    pub step: f64,
    pub l2_penalty: f64,
    pub tolerance: f64,
    /// Negates the analytic gradient; used to confirm the check can fail.
    pub negate_analytic: bool,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            layer_dims: DEFAULT_LAYER_DIMS.to_vec(),
            seed: 2024,
            batch_rows: 8,
            weights_per_layer: 50,
            biases_per_layer: 10,
            step: 1e-5,
            l2_penalty: 1e-2,
            tolerance: 1e-4,
            negate_analytic: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerCheck {
    pub layer: usize,
    pub checked: usize,
    pub failed: usize,
    pub max_rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub layers: Vec<LayerCheck>,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.layers.iter().all(|l| l.failed == 0)
    }

    pub fn max_rel_error(&self) -> f64 {
        self.layers.iter().map(|l| l.max_rel_error).fold(0.0, f64::max)
    }
}

/// Error relative to the larger magnitude, with a 1e-3 floor so that
/// gradients near zero are judged on absolute error.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-3)
}

/// Compares backpropagated gradients with central differences on a freshly
/// initialized network and a random batch (inputs uniform in [0, 1],
/// targets standard normal scaled by 10).
pub fn gradient_check(config: &GradCheckConfig) -> Result<GradCheckReport> {
    let mut model = MlpModel::init(&config.layer_dims, config.seed)?;
    let n = config.batch_rows;
    let mut rng = SplitMix64::derive(config.seed, &[1]);
    let x: Vec<f64> = (0..n * model.input_dim()).map(|_| rng.next_f64()).collect();
    let y: Vec<f64> = (0..n * model.output_dim()).map(|_| 10.0 * rng.standard_normal()).collect();
    let (_, grads) = model.loss_and_gradient(&x, &y, n, config.l2_penalty)?;
    let sign = if config.negate_analytic { -1.0 } else { 1.0 };

    let mut pick = SplitMix64::derive(config.seed, &[2]);
    let mut layers = Vec::with_capacity(model.n_layers());
    for l in 0..model.n_layers() {
        let mut w_idx: Vec<usize> = (0..model.weights[l].len()).collect();
        pick.shuffle(&mut w_idx);
        w_idx.truncate(config.weights_per_layer);
        let mut b_idx: Vec<usize> = (0..model.biases[l].len()).collect();
        pick.shuffle(&mut b_idx);
        b_idx.truncate(config.biases_per_layer);

        let mut check = LayerCheck {
            layer: l,
            checked: 0,
            failed: 0,
            max_rel_error: 0.0,
        };
        for (is_bias, i) in w_idx.into_iter().map(|i| (false, i)).chain(b_idx.into_iter().map(|i| (true, i))) {
            let analytic = sign * if is_bias { grads.biases[l][i] } else { grads.weights[l][i] };
            let original = *param(&mut model, l, is_bias, i);
            *param(&mut model, l, is_bias, i) = original + config.step;
            let plus = model.loss_and_gradient(&x, &y, n, config.l2_penalty)?.0;
            *param(&mut model, l, is_bias, i) = original - config.step;
            let minus = model.loss_and_gradient(&x, &y, n, config.l2_penalty)?.0;
            *param(&mut model, l, is_bias, i) = original;
            let numeric = (plus - minus) / (2.0 * config.step);

            let err = relative_error(analytic, numeric);
            check.checked += 1;
            check.max_rel_error = check.max_rel_error.max(err);
            if err >= config.tolerance {
                check.failed += 1;
            }
        }
        layers.push(check);
    }
    Ok(GradCheckReport {
        layers,
        tolerance: config.tolerance,
    })
}

fn param(model: &mut MlpModel, layer: usize, is_bias: bool, i: usize) -> &mut f64 {
    if is_bias {
        &mut model.biases[layer][i]
    } else {
        &mut model.weights[layer][i]
    }
}
