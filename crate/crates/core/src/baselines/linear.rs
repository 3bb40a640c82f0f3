use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::lstsq_min_norm;

/// Affine least-squares map, one weight row per output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    /// `n_outputs x n_inputs`.
    pub weights: Vec<Vec<f64>>,
    pub intercept: Vec<f64>,
    /// False when the design was rank-deficient and the minimum-norm
    /// solution was used.
    pub full_rank: bool,
}

impl LinearModel {
    pub fn n_inputs(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn predict(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.intercept)
            .map(|(w, b)| b + w.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>())
            .collect()
    }
}

/// Singular values below this fraction of the largest count as zero.
const RANK_TOL: f64 = 1e-10;

/// Minimizes `||X W^T + b - Y||^2` column by column via a Householder QR of
/// `[X | 1]` followed by an SVD of the triangular factor. Rank-deficient
/// designs get the minimum-norm solution and a logged warning.
pub fn linear_fit<X: AsRef<[f64]>, Y: AsRef<[f64]>>(x: &[X], y: &[Y]) -> Result<LinearModel> {
    let n = x.len();
    if n == 0 || y.len() != n {
        return Err(Error::Config(format!("linear_fit needs matching non-empty X and Y, got {n} and {}", y.len())));
    }
    let d = x[0].as_ref().len();
    let k = y[0].as_ref().len();
    if x.iter().any(|r| r.as_ref().len() != d) || y.iter().any(|r| r.as_ref().len() != k) || k == 0 {
        return Err(Error::Config("linear_fit rows have inconsistent widths".into()));
    }
    if x.iter().flat_map(|r| r.as_ref()).chain(y.iter().flat_map(|r| r.as_ref())).any(|v| !v.is_finite()) {
        return Err(Error::Config("linear_fit input contains non-finite values".into()));
    }

    let p = d + 1;
    let design = DMatrix::from_fn(n, p, |i, j| if j == d { 1.0 } else { x[i].as_ref()[j] });
    let targets = DMatrix::from_fn(n, k, |i, j| y[i].as_ref()[j]);

    let (beta, full_rank) = lstsq_min_norm(&design, &targets, RANK_TOL);
    if !full_rank {
        log::warn!("linear_fit: design matrix is rank-deficient, using the minimum-norm solution");
    }

    Ok(LinearModel {
        weights: (0..k).map(|c| (0..d).map(|j| beta[(j, c)]).collect()).collect(),
        intercept: (0..k).map(|c| beta[(d, c)]).collect(),
        full_rank,
    })
}

/// `X^T r` and the residual sum (the constant regressor) for output `k`.
pub fn residual_correlations<X: AsRef<[f64]>, Y: AsRef<[f64]>>(model: &LinearModel, x: &[X], y: &[Y], k: usize) -> Vec<f64> {
    let d = model.n_inputs();
    let mut out = DVector::zeros(d + 1);
    for (xi, yi) in x.iter().zip(y) {
        let xi = xi.as_ref();
        let r = model.predict(xi)[k] - yi.as_ref()[k];
        for j in 0..d {
            out[j] += xi[j] * r;
        }
        out[d] += r;
    }
    out.iter().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn random_rows(seed: u64, n: usize, d: usize) -> Vec<Vec<f64>> {
        let mut rng = SplitMix64::new(seed);
        (0..n).map(|_| (0..d).map(|_| rng.uniform(-1.0, 1.0)).collect()).collect()
    }

    #[test]
    fn two_point_line() {
        let m = linear_fit(&[[0.0], [1.0]], &[[0.0], [2.0]]).unwrap();
        assert!((m.weights[0][0] - 2.0).abs() < 1e-12);
        assert!(m.intercept[0].abs() < 1e-12);
        assert!(m.full_rank);
    }

    #[test]
    fn exact_affine_recovery() {
        let x = random_rows(1, 50, 6);
        let y: Vec<[f64; 2]> = x
            .iter()
            .map(|r| [3.0 + r.iter().enumerate().map(|(j, v)| (j as f64 - 2.0) * v).sum::<f64>(), -1.0 + 0.5 * r[0]])
            .collect();
        let m = linear_fit(&x, &y).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            let p = m.predict(xi);
            assert!((p[0] - yi[0]).abs() < 1e-9 && (p[1] - yi[1]).abs() < 1e-9);
        }
        assert!((m.intercept[0] - 3.0).abs() < 1e-10);
    }

    #[test]
    fn constant_target_on_centered_inputs() {
        let mut x = random_rows(2, 40, 6);
        let means: Vec<f64> = (0..6).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / 40.0).collect();
        for r in &mut x {
            for j in 0..6 {
                r[j] -= means[j];
            }
        }
        let y = vec![[1.0]; 40];
        let m = linear_fit(&x, &y).unwrap();
        assert!((m.intercept[0] - 1.0).abs() < 1e-12);
        assert!(m.weights[0].iter().all(|w| w.abs() < 1e-12));
    }

    #[test]
    fn residuals_are_orthogonal_to_regressors() {
        let x = random_rows(3, 300, 6);
        let mut rng = SplitMix64::new(4);
        let y: Vec<[f64; 2]> = x.iter().map(|r| [r[0] * r[1] * 40.0 + rng.standard_normal(), (3.0 * r[2]).sin() * 60.0]).collect();
        let m = linear_fit(&x, &y).unwrap();
        for k in 0..2 {
            let c = residual_correlations(&m, &x, &y, k);
            assert!(c.iter().all(|v| v.abs() < 1e-8), "{c:?}");
        }
    }

    #[test]
    fn duplicated_column_uses_minimum_norm() {
        let x: Vec<Vec<f64>> = random_rows(5, 30, 1).into_iter().map(|r| vec![r[0], r[0]]).collect();
        let y: Vec<[f64; 1]> = x.iter().map(|r| [4.0 * r[0] + 1.0]).collect();
        let m = linear_fit(&x, &y).unwrap();
        assert!(!m.full_rank);
        // Minimum norm splits the slope evenly across the identical columns.
        assert!((m.weights[0][0] - 2.0).abs() < 1e-8 && (m.weights[0][1] - 2.0).abs() < 1e-8);
        assert!((m.intercept[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn underdetermined_is_minimum_norm() {
        let x = random_rows(6, 3, 6);
        let y: Vec<[f64; 1]> = x.iter().map(|r| [r[0]]).collect();
        let m = linear_fit(&x, &y).unwrap();
        assert!(!m.full_rank);
        for (xi, yi) in x.iter().zip(&y) {
            assert!((m.predict(xi)[0] - yi[0]).abs() < 1e-9);
        }
    }
}
