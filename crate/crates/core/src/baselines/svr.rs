use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TOLERANCE: f64 = 1e-3;
pub const DEFAULT_MAX_ITER: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrParams {
    pub c: f64,
    pub epsilon: f64,
    pub gamma: f64,
}

impl SvrParams {
    /// `C = 10`, `epsilon = 0.01`, `gamma = 1 / n_inputs`.
    pub fn defaults_for(n_inputs: usize) -> Self {
        Self {
            c: 10.0,
            epsilon: 0.01,
            gamma: 1.0 / n_inputs.max(1) as f64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.gamma > 0.0 && self.epsilon >= 0.0)
            || !(self.c.is_finite() && self.gamma.is_finite() && self.epsilon.is_finite())
        {
            return Err(Error::Config(format!(
                "SVR needs C > 0, gamma > 0, epsilon >= 0, got {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_TOLERANCE,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

/// Single-output epsilon-SVR with RBF kernel. Only rows with a non-zero
/// coefficient are kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub params: SvrParams,
    pub support_vectors: Vec<Vec<f64>>,
    /// `alpha_i - alpha_i*` for each support vector.
    pub coefficients: Vec<f64>,
    pub bias: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Final dual objective `1/2 a^T Q a + p^T a` of the 2n-variable problem.
    pub dual_objective: f64,
}

pub fn rbf_kernel(u: &[f64], v: &[f64], gamma: f64) -> f64 {
    let d2: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
    (-gamma * d2).exp()
}

/// Dense symmetric RBF Gram matrix, row-major.
pub fn kernel_matrix<X: AsRef<[f64]>>(x: &[X], gamma: f64) -> Vec<f64> {
    let n = x.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        k[i * n + i] = 1.0;
        for j in 0..i {
            let v = rbf_kernel(x[i].as_ref(), x[j].as_ref(), gamma);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    k
}

impl SvrModel {
    /// `sum_i coef_i k(sv_i, x) + b`.
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.coefficients)
            .map(|(sv, c)| c * rbf_kernel(sv, x, self.params.gamma))
            .sum::<f64>()
            + self.bias
    }
}

/// Solves the epsilon-SVR dual with SMO.
///
/// The 2n variables `a = [alpha; alpha*]` carry signs `s = [+1; -1]`, and the
/// problem is `min 1/2 a^T Q a + p^T a` subject to `s^T a = 0`,
/// `0 <= a <= C`, with `Q_ij = s_i s_j K(x_i, x_j)`,
/// `p = [epsilon - y; epsilon + y]`. Each iteration picks the maximally
/// violating pair (first-order selection), solves the two-variable
/// subproblem in closed form and clips it to the box. The loop stops once
/// the violation `max_up(-s G) - min_low(-s G)` drops below `tolerance`.
pub fn svr_fit<X: AsRef<[f64]>>(x: &[X], y: &[f64], params: SvrParams, options: SolverOptions) -> Result<SvrModel> {
    params.validate()?;
    let kernel = kernel_matrix(x, params.gamma);
    svr_fit_with_kernel(x, y, &kernel, params, options)
}

/// As [`svr_fit`] with a precomputed Gram matrix (`params.gamma` must match).
pub fn svr_fit_with_kernel<X: AsRef<[f64]>>(
    x: &[X],
    y: &[f64],
    kernel: &[f64],
    params: SvrParams,
    options: SolverOptions,
) -> Result<SvrModel> {
    params.validate()?;
    let n = x.len();
    if n == 0 || y.len() != n || kernel.len() != n * n {
        return Err(Error::Config(format!(
            "svr_fit needs matching non-empty inputs, got {n} rows, {} targets",
            y.len()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("svr_fit targets contain non-finite values".into()));
    }

    let m = 2 * n;
    let c = params.c;
    let sign = |t: usize| if t < n { 1.0 } else { -1.0 };
    let row = |t: usize| t % n;
    let q = |a: usize, b: usize| sign(a) * sign(b) * kernel[row(a) * n + row(b)];
    let p: Vec<f64> = (0..m)
        .map(|t| if t < n { params.epsilon - y[t] } else { params.epsilon + y[t - n] })
        .collect();

    let mut alpha = vec![0.0; m];
    let mut grad = p.clone();
    let at_upper = |a: f64| a >= c;
    let at_lower = |a: f64| a <= 0.0;

    let mut iterations = 0;
    let mut converged = false;
    while iterations < options.max_iter {
        let mut g_max = f64::NEG_INFINITY;
        let mut g_min = f64::INFINITY;
        let (mut i, mut j) = (usize::MAX, usize::MAX);
        for t in 0..m {
            let v = -sign(t) * grad[t];
            let up = if sign(t) > 0.0 { !at_upper(alpha[t]) } else { !at_lower(alpha[t]) };
            let low = if sign(t) > 0.0 { !at_lower(alpha[t]) } else { !at_upper(alpha[t]) };
            if up && v >= g_max {
                g_max = v;
                i = t;
            }
            if low && v <= g_min {
                g_min = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || g_max - g_min < options.tolerance {
            converged = true;
            break;
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let qij = q(i, j);
        if sign(i) != sign(j) {
            let quad = (2.0 + 2.0 * qij).max(1e-12);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (2.0 - 2.0 * qij).max(1e-12);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        let (ri, rj) = (row(i) * n, row(j) * n);
        let (si, sj) = (sign(i), sign(j));
        for t in 0..m {
            let st = sign(t);
            let rt = row(t);
            grad[t] += st * (si * kernel[ri + rt] * di + sj * kernel[rj + rt] * dj);
        }
    }
    if !converged {
        log::warn!("svr_fit: stopped at the iteration cap ({}) before reaching tolerance", options.max_iter);
    }

    // rho from free variables, or the midpoint of the feasible interval.
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free_sum, mut free_n) = (0.0, 0usize);
    for t in 0..m {
        let yg = sign(t) * grad[t];
        if at_upper(alpha[t]) {
            if sign(t) < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if at_lower(alpha[t]) {
            if sign(t) > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free_sum += yg;
            free_n += 1;
        }
    }
    let rho = if free_n > 0 {
        free_sum / free_n as f64
    } else if ub.is_finite() && lb.is_finite() {
        0.5 * (ub + lb)
    } else if ub.is_finite() {
        ub
    } else {
        lb
    };

    let dual_objective = 0.5 * (0..m).map(|t| alpha[t] * (grad[t] + p[t])).sum::<f64>();
    let mut support_vectors = Vec::new();
    let mut coefficients = Vec::new();
    for i in 0..n {
        let beta = alpha[i] - alpha[i + n];
        if beta != 0.0 {
            support_vectors.push(x[i].as_ref().to_vec());
            coefficients.push(beta);
        }
    }
    Ok(SvrModel {
        params,
        support_vectors,
        coefficients,
        bias: -rho,
        converged,
        iterations,
        dual_objective,
    })
}

/// Independent per-output SVR fits on targets standardized with the
/// training mean and standard deviation; predictions are mapped back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiSvr {
    pub outputs: Vec<SvrModel>,
    pub target_mean: Vec<f64>,
    pub target_std: Vec<f64>,
}

impl MultiSvr {
    pub fn fit<X: AsRef<[f64]>, Y: AsRef<[f64]>>(x: &[X], y: &[Y], params: SvrParams, options: SolverOptions) -> Result<Self> {
        params.validate()?;
        let k = y.first().map_or(0, |r| r.as_ref().len());
        if k == 0 || y.len() != x.len() || y.iter().any(|r| r.as_ref().len() != k) {
            return Err(Error::Config("SVR targets must be non-empty with a consistent width".into()));
        }
        let kernel = kernel_matrix(x, params.gamma);
        let mut outputs = Vec::with_capacity(k);
        let mut target_mean = Vec::with_capacity(k);
        let mut target_std = Vec::with_capacity(k);
        for c in 0..k {
            let col: Vec<f64> = y.iter().map(|r| r.as_ref()[c]).collect();
            let (mean, std) = mean_std(&col);
            let std = if std > 0.0 { std } else { 1.0 };
            let z: Vec<f64> = col.iter().map(|v| (v - mean) / std).collect();
            outputs.push(svr_fit_with_kernel(x, &z, &kernel, params, options)?);
            target_mean.push(mean);
            target_std.push(std);
        }
        Ok(Self {
            outputs,
            target_mean,
            target_std,
        })
    }

    pub fn predict(&self, x: &[f64]) -> Vec<f64> {
        self.outputs
            .iter()
            .zip(self.target_mean.iter().zip(&self.target_std))
            .map(|(m, (mean, std))| mean + std * m.predict(x))
            .collect()
    }

    pub fn converged(&self) -> bool {
        self.outputs.iter().all(|m| m.converged)
    }
}

/// Mean and population standard deviation.
fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}
