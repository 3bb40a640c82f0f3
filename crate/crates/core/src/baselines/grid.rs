use serde::{Deserialize, Serialize};

use crate::baselines::svr::{MultiSvr, SolverOptions, SvrParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvrGrid {
    pub c: Vec<f64>,
    pub epsilon: Vec<f64>,
    pub gamma: Vec<f64>,
    pub folds: usize,
}

impl SvrGrid {
    /// Candidates in lexicographic `(C, epsilon, gamma)` order.
    pub fn candidates(&self) -> Vec<SvrParams> {
        let mut out = Vec::new();
        let sorted = |v: &[f64]| {
            let mut v = v.to_vec();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        };
        let (cs, es, gs) = (sorted(&self.c), sorted(&self.epsilon), sorted(&self.gamma));
        for &c in &cs {
            for &epsilon in &es {
                for &gamma in &gs {
                    out.push(SvrParams { c, epsilon, gamma });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridScore {
    pub params: SvrParams,
    /// Validation RMSE in standardized target units, averaged over folds and outputs.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridResult {
    pub best: SvrParams,
    pub scores: Vec<GridScore>,
}

/// Trial-level k-fold search. `groups[i]` names the trial of row `i`; trials
/// are assigned to folds round-robin in order of first appearance. The
/// lowest mean standardized validation RMSE wins; ties go to the
/// lexicographically smallest `(C, epsilon, gamma)`.
pub fn grid_search_svr<X: AsRef<[f64]> + Sync, Y: AsRef<[f64]> + Sync>(
    x: &[X],
    y: &[Y],
    groups: &[&str],
    grid: &SvrGrid,
    options: SolverOptions,
) -> Result<GridResult> {
    let candidates = grid.candidates();
    if candidates.is_empty() {
        return Err(Error::Config("SVR grid is empty".into()));
    }
    if x.len() != y.len() || x.len() != groups.len() {
        return Err(Error::Config("grid search rows, targets and groups differ in length".into()));
    }
    let mut order: Vec<&str> = Vec::new();
    for g in groups {
        if !order.contains(g) {
            order.push(g);
        }
    }
    if grid.folds < 2 || order.len() < grid.folds {
        return Err(Error::Config(format!(
            "grid search needs 2 <= folds <= trials, got {} folds for {} trials",
            grid.folds,
            order.len()
        )));
    }
    let fold_of_row: Vec<usize> = groups
        .iter()
        .map(|g| order.iter().position(|o| o == g).expect("group seen") % grid.folds)
        .collect();

    let mut scores = Vec::with_capacity(candidates.len());
    for params in candidates {
        let mut total = 0.0;
        let mut count = 0usize;
        for f in 0..grid.folds {
            let train: Vec<usize> = (0..x.len()).filter(|&i| fold_of_row[i] != f).collect();
            let valid: Vec<usize> = (0..x.len()).filter(|&i| fold_of_row[i] == f).collect();
            let xt: Vec<&[f64]> = train.iter().map(|&i| x[i].as_ref()).collect();
            let yt: Vec<&[f64]> = train.iter().map(|&i| y[i].as_ref()).collect();
            let model = MultiSvr::fit(&xt, &yt, params, options)?;
            for (k, std) in model.target_std.iter().enumerate() {
                let se: f64 = valid
                    .iter()
                    .map(|&i| (model.predict(x[i].as_ref())[k] - y[i].as_ref()[k]).powi(2))
                    .sum();
                total += (se / valid.len() as f64).sqrt() / std;
                count += 1;
            }
        }
        scores.push(GridScore {
            params,
            score: total / count as f64,
        });
    }
    // Candidates are already lexicographic, so the first minimum wins ties.
    let best = scores
        .iter()
        .fold(None::<&GridScore>, |acc, s| match acc {
            Some(a) if a.score <= s.score => Some(a),
            _ => Some(s),
        })
        .expect("non-empty")
        .params;
    Ok(GridResult { best, scores })
}
