use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsutil::write_atomic;
use crate::model::mlp::MlpModel;
use crate::model::train::TrainConfig;

/// On-disk model: layer dims, row-major weights, biases and the training
/// configuration that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub layer_dims: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub train_config: TrainConfig,
}

impl Checkpoint {
    pub fn new(model: &MlpModel, train_config: &TrainConfig) -> Self {
        Self {
            layer_dims: model.layer_dims.clone(),
            weights: model.weights.clone(),
            biases: model.biases.clone(),
            train_config: train_config.clone(),
        }
    }

    pub fn model(&self) -> Result<MlpModel> {
        let m = MlpModel {
            layer_dims: self.layer_dims.clone(),
            weights: self.weights.clone(),
            biases: self.biases.clone(),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_vec_pretty(self).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        write_atomic(path, &json)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ckpt: Self = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        ckpt.model()?;
        Ok(ckpt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::mlp::DEFAULT_LAYER_DIMS;

    #[test]
    fn round_trip_preserves_predictions_bit_for_bit() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let m = MlpModel::init(&DEFAULT_LAYER_DIMS, 99).unwrap();
        Checkpoint::new(&m, &TrainConfig::default()).save(&path).unwrap();
        let loaded = Checkpoint::load(&path).unwrap();
        assert_eq!(loaded.train_config, TrainConfig::default());
        let m2 = loaded.model().unwrap();
        assert_eq!(m, m2);
        let x = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        assert_eq!(m.forward(&x).unwrap(), m2.forward(&x).unwrap());
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let mut c = Checkpoint::new(&MlpModel::init(&[6, 3, 2], 1).unwrap(), &TrainConfig::default());
        c.biases[0].pop();
        std::fs::write(&path, serde_json::to_string(&c).unwrap()).unwrap();
        assert!(matches!(Checkpoint::load(&path), Err(Error::Config(_))));
    }
}
