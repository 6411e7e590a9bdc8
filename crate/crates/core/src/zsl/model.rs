//! Linear max-margin classifier: regularized hinge loss fit by seeded
//! subgradient descent. Training is deterministic given the seed; a trained
//! model is immutable.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::zsl::features::{Catalog, FeatureVector};

/// One labeled (feature vector, ±1) training example.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingPair {
    pub fv: FeatureVector,
    pub positive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct TrainingMeta {
    pub protocols: Vec<String>,
    pub seed: u64,
    pub epochs: u32,
}

/// Weights over a feature catalog plus a bias term (last element) and a
/// decision threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub format_version: u32,
    pub catalog_version: u32,
    pub feature_names: Vec<String>,
    /// Length = feature count + 1; the final entry is the bias.
    pub weights: Vec<f64>,
    pub margin_threshold: f64,
    pub training_meta: TrainingMeta,
}

pub const MODEL_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_EPOCHS: u32 = 50;

const LEARNING_RATE: f64 = 0.5;
const REGULARIZATION: f64 = 1e-4;

impl LinearModel {
    pub fn bias(&self) -> f64 {
        *self.weights.last().expect("bias weight")
    }

    /// Dot product of weights and active bits, plus bias.
    pub fn score(&self, fv: &FeatureVector) -> Result<f64, ModelError> {
        if fv.catalog_version != self.catalog_version
            || fv.bits.len() + 1 != self.weights.len()
        {
            return Err(ModelError::CatalogMismatch {
                model: self.catalog_version,
                vector: fv.catalog_version,
            });
        }
        let mut s = self.bias();
        for i in fv.active() {
            s += self.weights[i];
        }
        Ok(s)
    }

    pub fn is_positive(&self, score: f64) -> bool {
        score >= self.margin_threshold
    }

    /// Canonical model file text; round-trips bit-exactly.
    pub fn to_text(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_text(text: &str, path: &Path) -> Result<LinearModel, ModelError> {
        let model: LinearModel =
            serde_json::from_str(text).map_err(|e| ModelError::ModelFile {
                path: path.to_path_buf(),
                reason: e.to_string(),
            })?;
        if model.weights.len() != model.feature_names.len() + 1 {
            return Err(ModelError::ModelFile {
                path: path.to_path_buf(),
                reason: format!(
                    "{} weights for {} features (+1 bias expected)",
                    model.weights.len(),
                    model.feature_names.len()
                ),
            });
        }
        if !model.weights.iter().all(|w| w.is_finite()) {
            return Err(ModelError::ModelFile {
                path: path.to_path_buf(),
                reason: "non-finite weight".to_string(),
            });
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        std::fs::write(path, self.to_text()).map_err(|e| ModelError::ModelFile {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<LinearModel, ModelError> {
        let text = std::fs::read_to_string(path).map_err(|e| ModelError::ModelFile {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        LinearModel::from_text(&text, path)
    }
}

/// Fits a linear model by minimizing L2-regularized hinge loss with a fixed
/// learning-rate schedule and seeded per-epoch shuffling.
pub fn train(
    pairs: &[TrainingPair],
    catalog: &Catalog,
    seed: u64,
    epochs: u32,
    protocols: Vec<String>,
) -> Result<LinearModel, ModelError> {
    let positives = pairs.iter().filter(|p| p.positive).count();
    if positives == 0 {
        return Err(ModelError::DegenerateTraining("negative"));
    }
    if positives == pairs.len() {
        return Err(ModelError::DegenerateTraining("positive"));
    }
    for p in pairs {
        if p.fv.catalog_version != catalog.version || p.fv.bits.len() != catalog.len() {
            return Err(ModelError::CatalogMismatch {
                model: catalog.version,
                vector: p.fv.catalog_version,
            });
        }
    }

    let n_features = catalog.len();
    let mut weights = vec![0.0f64; n_features + 1];
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    for epoch in 0..epochs {
        order.shuffle(&mut rng);
        let eta = LEARNING_RATE / (1.0 + epoch as f64);
        for &idx in &order {
            let pair = &pairs[idx];
            let y = if pair.positive { 1.0 } else { -1.0 };
            let mut s = weights[n_features];
            for i in pair.fv.active() {
                s += weights[i];
            }
            // L2 shrinkage on the feature weights (bias unregularized).
            let shrink = 1.0 - eta * REGULARIZATION;
            for w in weights.iter_mut().take(n_features) {
                *w *= shrink;
            }
            if y * s < 1.0 {
                for i in pair.fv.active() {
                    weights[i] += eta * y;
                }
                weights[n_features] += eta * y;
            }
        }
    }

    Ok(LinearModel {
        format_version: MODEL_FORMAT_VERSION,
        catalog_version: catalog.version,
        feature_names: catalog.names.iter().map(|s| s.to_string()).collect(),
        weights,
        margin_threshold: 0.0,
        training_meta: TrainingMeta {
            protocols,
            seed,
            epochs,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zsl::features::MENTION_CATALOG;

    fn fv(active: &[usize]) -> FeatureVector {
        let mut bits = vec![false; MENTION_CATALOG.len()];
        for &i in active {
            bits[i] = true;
        }
        FeatureVector {
            bits,
            catalog_version: MENTION_CATALOG.version,
        }
    }

    fn toy_pairs() -> Vec<TrainingPair> {
        let mut pairs = Vec::new();
        for _ in 0..20 {
            pairs.push(TrainingPair {
                fv: fv(&[0, 5]),
                positive: true,
            });
            pairs.push(TrainingPair {
                fv: fv(&[12]),
                positive: false,
            });
            pairs.push(TrainingPair {
                fv: fv(&[]),
                positive: false,
            });
        }
        pairs
    }

    #[test]
    fn separable_set_is_separated() {
        let model = train(&toy_pairs(), &MENTION_CATALOG, 7, 50, vec![]).unwrap();
        let pos = model.score(&fv(&[0, 5])).unwrap();
        let neg_a = model.score(&fv(&[12])).unwrap();
        let neg_b = model.score(&fv(&[])).unwrap();
        assert!(pos > neg_a && pos > neg_b);
        assert!(model.is_positive(pos));
        assert!(!model.is_positive(neg_a));
        assert!(!model.is_positive(neg_b));
    }

    #[test]
    fn training_is_deterministic() {
        let a = train(&toy_pairs(), &MENTION_CATALOG, 42, 50, vec![]).unwrap();
        let b = train(&toy_pairs(), &MENTION_CATALOG, 42, 50, vec![]).unwrap();
        assert_eq!(a.weights, b.weights);
        let c = train(&toy_pairs(), &MENTION_CATALOG, 43, 50, vec![]).unwrap();
        assert_ne!(a.weights, c.weights);
    }

    #[test]
    fn single_class_is_degenerate() {
        let pairs = vec![TrainingPair {
            fv: fv(&[0]),
            positive: true,
        }];
        assert!(matches!(
            train(&pairs, &MENTION_CATALOG, 1, 10, vec![]),
            Err(ModelError::DegenerateTraining(_))
        ));
    }

    #[test]
    fn zero_vector_scores_bias() {
        let model = train(&toy_pairs(), &MENTION_CATALOG, 7, 50, vec![]).unwrap();
        assert_eq!(model.score(&fv(&[])).unwrap(), model.bias());
    }

    #[test]
    fn score_is_linear_over_disjoint_features() {
        let model = train(&toy_pairs(), &MENTION_CATALOG, 7, 50, vec![]).unwrap();
        let a = fv(&[0, 3]);
        let b = fv(&[5, 12]);
        let ab = fv(&[0, 3, 5, 12]);
        let sum = model.score(&a).unwrap() + model.score(&b).unwrap() - model.bias();
        assert!((sum - model.score(&ab).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn catalog_mismatch_is_error() {
        let model = train(&toy_pairs(), &MENTION_CATALOG, 7, 10, vec![]).unwrap();
        let bad = FeatureVector {
            bits: vec![false; 3],
            catalog_version: 99,
        };
        assert!(matches!(
            model.score(&bad),
            Err(ModelError::CatalogMismatch { .. })
        ));
    }

    #[test]
    fn model_file_round_trip_is_bit_exact() {
        let model = train(&toy_pairs(), &MENTION_CATALOG, 7, 50, vec!["x".into()]).unwrap();
        let text = model.to_text();
        let back = LinearModel::from_text(&text, Path::new("mem")).unwrap();
        assert_eq!(model, back);
        assert_eq!(back.to_text(), text);
    }
}
