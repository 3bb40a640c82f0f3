use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// `[6, 100, 100, 100, 2]`: three hidden layers of 100 rectifier units.
pub const DEFAULT_LAYER_DIMS: [usize; 5] = [6, 100, 100, 100, 2];

/// Fully connected network, rectifier hidden layers and a linear output.
/// `weights[l]` is row-major `layer_dims[l + 1] x layer_dims[l]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub layer_dims: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

/// Same shapes as the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(model: &MlpModel) -> Self {
        Self {
            weights: model.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: model.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.weights.iter().flatten().chain(self.biases.iter().flatten())
    }
}

fn validate_dims(layer_dims: &[usize]) -> Result<()> {
    if layer_dims.len() < 2 || layer_dims.contains(&0) {
        return Err(Error::Config(format!(
            "layer_dims must have at least two positive entries, got {layer_dims:?}"
        )));
    }
    Ok(())
}

impl MlpModel {
    /// Weights uniform in ±sqrt(6 / (fan_in + fan_out)) from SplitMix64
    /// seeded with `seed`, drawn layer by layer in row-major order; biases 0.
    pub fn init(layer_dims: &[usize], seed: u64) -> Result<Self> {
        validate_dims(layer_dims)?;
        let mut rng = SplitMix64::new(seed);
        let mut weights = Vec::with_capacity(layer_dims.len() - 1);
        let mut biases = Vec::with_capacity(layer_dims.len() - 1);
        for pair in layer_dims.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            weights.push((0..fan_in * fan_out).map(|_| rng.uniform(-bound, bound)).collect());
            biases.push(vec![0.0; fan_out]);
        }
        Ok(Self {
            layer_dims: layer_dims.to_vec(),
            weights,
            biases,
        })
    }

    /// All-zero parameters.
    pub fn zeros(layer_dims: &[usize]) -> Result<Self> {
        validate_dims(layer_dims)?;
        Ok(Self {
            layer_dims: layer_dims.to_vec(),
            weights: layer_dims.windows(2).map(|p| vec![0.0; p[0] * p[1]]).collect(),
            biases: layer_dims.windows(2).map(|p| vec![0.0; p[1]]).collect(),
        })
    }

    pub fn n_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().expect("validated dims")
    }

    pub fn n_params(&self) -> usize {
        self.weights.iter().map(Vec::len).sum::<usize>() + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    /// Checks shapes against `layer_dims` and that every parameter is finite.
    pub fn validate(&self) -> Result<()> {
        validate_dims(&self.layer_dims)?;
        let expected = self.layer_dims.len() - 1;
        if self.weights.len() != expected || self.biases.len() != expected {
            return Err(Error::Config(format!(
                "model has {} weight and {} bias layers, layer_dims implies {expected}",
                self.weights.len(),
                self.biases.len()
            )));
        }
        for (l, pair) in self.layer_dims.windows(2).enumerate() {
            if self.weights[l].len() != pair[0] * pair[1] || self.biases[l].len() != pair[1] {
                return Err(Error::Config(format!("layer {l} parameter shape mismatch")));
            }
            if self.weights[l].iter().chain(&self.biases[l]).any(|v| !v.is_finite()) {
                return Err(Error::Config(format!("layer {l} has non-finite parameters")));
            }
        }
        Ok(())
    }

    pub fn sum_squared_weights(&self) -> f64 {
        self.weights.iter().flatten().map(|w| w * w).sum()
    }

    /// Single-sample forward pass.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::Evaluation(format!(
                "input has {} values, model expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        self.forward_batch(x, 1)
    }

    /// Row-major `n x input_dim` in, row-major `n x output_dim` out.
    pub fn forward_batch(&self, x: &[f64], n: usize) -> Result<Vec<f64>> {
        if x.len() != n * self.input_dim() {
            return Err(Error::Evaluation(format!(
                "batch buffer holds {} values, expected {n} x {}",
                x.len(),
                self.input_dim()
            )));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::Evaluation(format!(
                "non-finite input at row {}, column {}",
                i / self.input_dim(),
                i % self.input_dim()
            )));
        }
        let mut act = x.to_vec();
        for l in 0..self.n_layers() {
            let mut z = self.affine(l, &act, n);
            if l + 1 < self.n_layers() {
                relu_in_place(&mut z);
            }
            act = z;
        }
        Ok(act)
    }

    /// `A W^T + b` for layer `l`, `a` row-major `n x fan_in`.
    fn affine(&self, l: usize, a: &[f64], n: usize) -> Vec<f64> {
        let (fan_in, fan_out) = (self.layer_dims[l], self.layer_dims[l + 1]);
        let mut z = Vec::with_capacity(n * fan_out);
        for _ in 0..n {
            z.extend_from_slice(&self.biases[l]);
        }
        // SAFETY: slice lengths match the dimensions and strides passed.
        unsafe {
            matrixmultiply::dgemm(
                n,
                fan_in,
                fan_out,
                1.0,
                a.as_ptr(),
                fan_in as isize,
                1,
                self.weights[l].as_ptr(),
                1,
                fan_in as isize,
                1.0,
                z.as_mut_ptr(),
                fan_out as isize,
                1,
            );
        }
        z
    }

    /// Loss `(1/2n) sum ||y_hat - y||^2 + (l2/2) sum ||W||^2` and its gradient
    /// (biases are not penalized). `x` is `n x input_dim`, `y` is
    /// `n x output_dim`, both row-major.
    pub fn loss_and_gradient(&self, x: &[f64], y: &[f64], n: usize, l2_penalty: f64) -> Result<(f64, Gradients)> {
        let mut grads = Gradients::zeros_like(self);
        let loss = self.loss_and_gradient_into(x, y, n, l2_penalty, &mut grads)?;
        Ok((loss, grads))
    }

    /// As [`loss_and_gradient`](Self::loss_and_gradient), writing into `grads`.
    pub fn loss_and_gradient_into(
        &self,
        x: &[f64],
        y: &[f64],
        n: usize,
        l2_penalty: f64,
        grads: &mut Gradients,
    ) -> Result<f64> {
        if n == 0 {
            return Err(Error::Training {
                location: "batch".into(),
                message: "empty batch".into(),
            });
        }
        let out_dim = self.output_dim();
        if x.len() != n * self.input_dim() || y.len() != n * out_dim {
            return Err(Error::Training {
                location: "batch".into(),
                message: format!("batch buffers do not match {n} rows"),
            });
        }

        // activations[0] = x, activations[l + 1] = output of layer l
        let mut activations: Vec<Vec<f64>> = Vec::with_capacity(self.n_layers() + 1);
        activations.push(x.to_vec());
        for l in 0..self.n_layers() {
            let mut z = self.affine(l, &activations[l], n);
            if l + 1 < self.n_layers() {
                relu_in_place(&mut z);
            }
            if z.iter().any(|v| !v.is_finite()) {
                return Err(Error::Training {
                    location: format!("layer {l}"),
                    message: "non-finite activation".into(),
                });
            }
            activations.push(z);
        }

        let output = &activations[self.n_layers()];
        let inv_n = 1.0 / n as f64;
        let mut data_loss = 0.0;
        let mut delta: Vec<f64> = output
            .iter()
            .zip(y)
            .map(|(p, t)| {
                let r = p - t;
                data_loss += r * r;
                r * inv_n
            })
            .collect();
        let loss = 0.5 * inv_n * data_loss + 0.5 * l2_penalty * self.sum_squared_weights();
        if !loss.is_finite() {
            return Err(Error::Training {
                location: format!("layer {}", self.n_layers() - 1),
                message: "non-finite loss".into(),
            });
        }

        for l in (0..self.n_layers()).rev() {
            let (fan_in, fan_out) = (self.layer_dims[l], self.layer_dims[l + 1]);
            let a_prev = &activations[l];
            // dW = delta^T A_prev + l2 W
            let gw = &mut grads.weights[l];
            gw.copy_from_slice(&self.weights[l]);
            // SAFETY: slice lengths match the dimensions and strides passed.
            unsafe {
                matrixmultiply::dgemm(
                    fan_out,
                    n,
                    fan_in,
                    1.0,
                    delta.as_ptr(),
                    1,
                    fan_out as isize,
                    a_prev.as_ptr(),
                    fan_in as isize,
                    1,
                    l2_penalty,
                    gw.as_mut_ptr(),
                    fan_in as isize,
                    1,
                );
            }
            let gb = &mut grads.biases[l];
            gb.iter_mut().for_each(|v| *v = 0.0);
            for row in delta.chunks_exact(fan_out) {
                for (g, d) in gb.iter_mut().zip(row) {
                    *g += d;
                }
            }
            if l == 0 {
                break;
            }
            // delta_prev = (delta W) * relu'(z_prev); relu'(0) = 0
            let mut prev = vec![0.0; n * fan_in];
            // SAFETY: as above.
            unsafe {
                matrixmultiply::dgemm(
                    n,
                    fan_out,
                    fan_in,
                    1.0,
                    delta.as_ptr(),
                    fan_out as isize,
                    1,
                    self.weights[l].as_ptr(),
                    fan_in as isize,
                    1,
                    0.0,
                    prev.as_mut_ptr(),
                    fan_in as isize,
                    1,
                );
            }
            for (d, a) in prev.iter_mut().zip(a_prev) {
                if *a <= 0.0 {
                    *d = 0.0;
                }
            }
            delta = prev;
        }
        Ok(loss)
    }
}

fn relu_in_place(z: &mut [f64]) {
    for v in z {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}
