//! Rule-based baselines: token-overlap string matching at a percentage
//! threshold, and manually weighted versions of the classifier's own
//! feature set (RB1 frequency weights, RB2 sign weights).

use std::collections::BTreeSet;

use crate::corpus::Document;
use crate::type_extraction::FieldType;
use crate::zsl::features::{property_phrase_tokens, Catalog};
use crate::zsl::model::{LinearModel, TrainingMeta, TrainingPair};
use crate::zsl::{Mention, PropertySpan};

/// Classifies a chunk as a mention of a type when the token overlap ratio
/// |shared| / |type tokens| (case-folded sets) reaches `threshold` percent.
/// Each qualifying chunk links to its highest-overlap type.
pub fn overlap_baseline(
    types: &[FieldType],
    doc: &Document,
    threshold_percent: u32,
) -> Vec<Mention> {
    let threshold = threshold_percent as f64 / 100.0;
    let type_tokens: Vec<BTreeSet<String>> = types
        .iter()
        .map(|t| {
            t.name_tokens()
                .iter()
                .map(|s| s.to_lowercase())
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    for (ci, chunk) in doc.chunks.iter().enumerate() {
        let chunk_set: BTreeSet<String> =
            chunk.tokens.iter().map(|s| s.to_lowercase()).collect();
        let mut best: Option<(f64, usize)> = None;
        for (ti, tt) in type_tokens.iter().enumerate() {
            if tt.is_empty() {
                continue;
            }
            let shared = tt.intersection(&chunk_set).count();
            let ratio = shared as f64 / tt.len() as f64;
            if ratio >= threshold {
                let better = match best {
                    None => true,
                    Some((b, _)) => ratio > b,
                };
                if better {
                    best = Some((ratio, ti));
                }
            }
        }
        if let Some((ratio, ti)) = best {
            out.push(Mention {
                chunk_index: ci,
                type_index: ti,
                type_name: types[ti].name.clone(),
                span: chunk.span,
                score: ratio,
            });
        }
    }
    out
}

/// Property variant: overlap between a chunk and any property key phrase,
/// measured against the phrase's token set.
pub fn property_overlap_baseline(doc: &Document, threshold_percent: u32) -> Vec<PropertySpan> {
    let threshold = threshold_percent as f64 / 100.0;
    let phrases: Vec<BTreeSet<String>> = property_phrase_tokens()
        .into_iter()
        .map(|p| p.into_iter().collect())
        .collect();
    let mut out = Vec::new();
    for (ci, chunk) in doc.chunks.iter().enumerate() {
        let chunk_set: BTreeSet<String> =
            crate::zsl::normalize_match_tokens(&chunk.tokens.join(" "))
                .into_iter()
                .collect();
        let mut best: Option<f64> = None;
        for phrase in &phrases {
            if phrase.is_empty() {
                continue;
            }
            let shared = phrase.intersection(&chunk_set).count();
            let ratio = shared as f64 / phrase.len() as f64;
            if ratio >= threshold && best.map(|b| ratio > b).unwrap_or(true) {
                best = Some(ratio);
            }
        }
        if let Some(score) = best {
            out.push(PropertySpan {
                chunk_index: ci,
                span: chunk.span,
                score,
                kind: None,
                argument: None,
            });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RbVariant {
    /// Frequency weights: +pr when pr > nr, −nr when nr > pr, 0 on ties;
    /// bias −nr of the always-on bias term, i.e. −1.
    Rb1,
    /// Sign weights: +1 when the feature is more frequent in positives,
    /// −1 when more frequent in negatives; bias −1.
    Rb2,
}

/// Builds a manually weighted model over the same feature set from labeled
/// pairs, without any learning.
pub fn rb_weights(pairs: &[TrainingPair], variant: RbVariant, catalog: &Catalog) -> LinearModel {
    let n = catalog.len();
    let pos_total = pairs.iter().filter(|p| p.positive).count().max(1);
    let neg_total = pairs.iter().filter(|p| !p.positive).count().max(1);
    let mut pos_counts = vec![0usize; n];
    let mut neg_counts = vec![0usize; n];
    for p in pairs {
        let counts = if p.positive {
            &mut pos_counts
        } else {
            &mut neg_counts
        };
        for i in p.fv.active() {
            counts[i] += 1;
        }
    }
    let mut weights = vec![0.0f64; n + 1];
    for i in 0..n {
        let pr = pos_counts[i] as f64 / pos_total as f64;
        let nr = neg_counts[i] as f64 / neg_total as f64;
        weights[i] = match variant {
            RbVariant::Rb1 => {
                if pr > nr {
                    pr
                } else if nr > pr {
                    -nr
                } else {
                    0.0
                }
            }
            RbVariant::Rb2 => {
                if pr > nr {
                    1.0
                } else if nr > pr {
                    -1.0
                } else {
                    0.0
                }
            }
        };
    }
    // The bias term fires on every example (pr = nr = 1), so both variants
    // assign it −1.
    weights[n] = -1.0;
    LinearModel {
        format_version: crate::zsl::model::MODEL_FORMAT_VERSION,
        catalog_version: catalog.version,
        feature_names: catalog.names.iter().map(|s| s.to_string()).collect(),
        weights,
        margin_threshold: 0.0,
        training_meta: TrainingMeta::default(),
    }
}
