use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::N_FEATURES;

/// Per-feature min/max for 0..1 scaling. Columns with `max == min` are
/// degenerate and map to 0.0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub min: [f64; N_FEATURES],
    pub max: [f64; N_FEATURES],
}

impl NormalizationParams {
    pub fn is_degenerate(&self, column: usize) -> bool {
        self.max[column] == self.min[column]
    }

    pub fn degenerate_columns(&self) -> Vec<usize> {
        (0..N_FEATURES).filter(|&c| self.is_degenerate(c)).collect()
    }

    /// Fits on training rows only; needs at least two rows.
    pub fn fit(rows: &[[f64; N_FEATURES]]) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::Preprocess(format!(
                "normalization needs at least 2 rows, got {}",
                rows.len()
            )));
        }
        let mut min = [f64::INFINITY; N_FEATURES];
        let mut max = [f64::NEG_INFINITY; N_FEATURES];
        for row in rows {
            for c in 0..N_FEATURES {
                min[c] = min[c].min(row[c]);
                max[c] = max[c].max(row[c]);
            }
        }
        let params = Self { min, max };
        let degenerate = params.degenerate_columns();
        if !degenerate.is_empty() {
            log::warn!("constant feature columns {degenerate:?} will normalize to 0.0");
        }
        Ok(params)
    }

    /// (x - min) / (max - min), unclamped.
    pub fn apply_row(&self, row: &[f64; N_FEATURES]) -> [f64; N_FEATURES] {
        std::array::from_fn(|c| {
            if self.is_degenerate(c) {
                0.0
            } else {
                (row[c] - self.min[c]) / (self.max[c] - self.min[c])
            }
        })
    }

    pub fn apply(&self, rows: &[[f64; N_FEATURES]]) -> Vec<[f64; N_FEATURES]> {
        rows.iter().map(|r| self.apply_row(r)).collect()
    }

    /// Inverse of [`apply_row`](Self::apply_row) on non-degenerate columns;
    /// degenerate columns come back as `min`.
    pub fn invert_row(&self, row: &[f64; N_FEATURES]) -> [f64; N_FEATURES] {
        std::array::from_fn(|c| {
            if self.is_degenerate(c) {
                self.min[c]
            } else {
                row[c] * (self.max[c] - self.min[c]) + self.min[c]
            }
        })
    }
}

/// Shape-checked variant for dynamically sized input rows.
pub fn apply_normalization(rows: &[Vec<f64>], params: &NormalizationParams) -> Result<Vec<[f64; N_FEATURES]>> {
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            let row: [f64; N_FEATURES] = r.as_slice().try_into().map_err(|_| {
                Error::Preprocess(format!(
                    "row {i} has {} columns, expected {N_FEATURES}",
                    r.len()
                ))
            })?;
            Ok(params.apply_row(&row))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rows_with_col0(values: &[f64]) -> Vec<[f64; N_FEATURES]> {
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| [v, i as f64, 0.0, 1.0, -(i as f64), 2.0 * i as f64])
            .collect()
    }

    #[test]
    fn min_max_of_column() {
        let p = NormalizationParams::fit(&rows_with_col0(&[2.0, 4.0, 6.0])).unwrap();
        assert_eq!(p.min[0], 2.0);
        assert_eq!(p.max[0], 6.0);
    }

    #[test]
    fn out_of_range_values_are_not_clamped() {
        let p = NormalizationParams::fit(&rows_with_col0(&[2.0, 4.0, 6.0])).unwrap();
        let mut row = [0.0; N_FEATURES];
        row[0] = 8.0;
        assert_eq!(p.apply_row(&row)[0], 1.5);
        row[0] = 2.0;
        assert_eq!(p.apply_row(&row)[0], 0.0);
    }

    #[test]
    fn unit_interval_column_is_a_fixed_point() {
        let vals = [0.0, 0.25, 0.7, 1.0];
        let p = NormalizationParams::fit(&rows_with_col0(&vals)).unwrap();
        let out = p.apply(&rows_with_col0(&vals));
        for (o, v) in out.iter().zip(vals) {
            assert_eq!(o[0], v);
        }
    }

    #[test]
    fn identical_rows_are_all_degenerate() {
        let row = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let p = NormalizationParams::fit(&[row, row]).unwrap();
        assert_eq!(p.degenerate_columns(), vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(p.apply_row(&row), [0.0; N_FEATURES]);
    }

    #[test]
    fn single_row_rejected() {
        assert!(NormalizationParams::fit(&[[0.0; N_FEATURES]]).is_err());
    }

    #[test]
    fn shape_mismatch_rejected() {
        let p = NormalizationParams::fit(&rows_with_col0(&[1.0, 2.0])).unwrap();
        assert!(apply_normalization(&[vec![1.0; 5]], &p).is_err());
        assert!(apply_normalization(&[vec![1.0; 6]], &p).is_ok());
    }

    proptest! {
        #[test]
        fn training_rows_land_in_unit_interval(
            rows in prop::collection::vec(prop::array::uniform6(-1e3f64..1e3), 2..40)
        ) {
            let p = NormalizationParams::fit(&rows).unwrap();
            for r in p.apply(&rows) {
                for v in r {
                    prop_assert!((0.0..=1.0).contains(&v));
                }
            }
        }

        #[test]
        fn inverse_roundtrip(
            rows in prop::collection::vec(prop::array::uniform6(-1e3f64..1e3), 2..40),
            probe in prop::array::uniform6(-2e3f64..2e3),
        ) {
            let p = NormalizationParams::fit(&rows).unwrap();
            let back = p.invert_row(&p.apply_row(&probe));
            for c in 0..N_FEATURES {
                if !p.is_degenerate(c) {
                    let scale = probe[c].abs() + p.min[c].abs() + p.max[c].abs();
                    prop_assert!((back[c] - probe[c]).abs() <= 1e-12 * scale);
                }
            }
        }
    }
}
