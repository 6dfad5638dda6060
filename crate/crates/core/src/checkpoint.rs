//! Checkpoints: one JSON file holding the model (kind, hyperparameters,
//! named parameter arrays) and the training configuration it was run with.
//! Floats round-trip bitwise through the shortest-representation encoding.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::AnyModel;
use crate::nn::TrainConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub model: AnyModel,
    pub config: TrainConfig,
}

impl Checkpoint {
    pub fn new(model: AnyModel, config: TrainConfig) -> Self {
        Checkpoint { model, config }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::Checkpoint(format!("serialize: {e}")))
    }

    pub fn from_json(json: &str) -> Result<Self> {
        serde_json::from_str(json).map_err(|e| Error::Checkpoint(format!("parse: {e}")))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)
            .map_err(|e| Error::Checkpoint(format!("write {}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let json = fs::read_to_string(path)
            .map_err(|e| Error::Checkpoint(format!("read {}: {e}", path.display())))?;
        Self::from_json(&json)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelKind;
    use crate::nn::GraphModel;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample_features() -> Vec<Vec<f64>> {
        vec![vec![0.5, 1.0, 2.0, 3.0], vec![0.7, 1.3, 2.1, 2.9]]
    }

    #[test]
    fn round_trips_bitwise_for_every_model_kind() {
        let features = sample_features();
        for kind in ModelKind::ALL {
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            let model = AnyModel::new(kind, &features, &mut rng);
            let ckpt = Checkpoint::new(model, TrainConfig::default());
            let back = Checkpoint::from_json(&ckpt.to_json().unwrap()).unwrap();
            let (a, b) = (ckpt.model.store(), back.model.store());
            assert_eq!(a, b, "{kind}: parameters changed across round trip");
            assert_eq!(ckpt.to_json().unwrap(), back.to_json().unwrap());
        }
    }

    #[test]
    fn file_round_trip_and_missing_file_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let model = AnyModel::new(ModelKind::Ginn, &sample_features(), &mut rng);
        let ckpt = Checkpoint::new(model, TrainConfig::default());
        ckpt.save(&path).unwrap();
        let back = Checkpoint::load(&path).unwrap();
        assert_eq!(ckpt.to_json().unwrap(), back.to_json().unwrap());
        assert!(matches!(
            Checkpoint::load(&dir.path().join("absent.json")),
            Err(Error::Checkpoint(_))
        ));
    }

    #[test]
    fn loaded_model_predicts_identically() {
        let features = sample_features();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let model = AnyModel::new(ModelKind::Kan, &features, &mut rng);
        let ckpt = Checkpoint::new(model, TrainConfig::default());
        let back = Checkpoint::from_json(&ckpt.to_json().unwrap()).unwrap();
        let a = crate::nn::predict(&ckpt.model, &features).unwrap();
        let b = crate::nn::predict(&back.model, &features).unwrap();
        assert_eq!(a, b);
    }
}
