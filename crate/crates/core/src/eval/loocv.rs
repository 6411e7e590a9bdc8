//! Leave-one-protocol-out cross-validation over an annotated corpus,
//! evaluating the trained classifiers against every baseline under both the
//! known-types (K) and extracted-types (E) conditions.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::EvalError;
use crate::eval::baselines::{
    overlap_baseline, property_overlap_baseline, rb_weights, RbVariant,
};
use crate::eval::{
    eval_mentions, eval_properties, negative_chunk_count, AnnotationSet, MentionMetrics,
    PropertyMetrics,
};
use crate::type_extraction::extract_entity_types;
use crate::zsl::{
    build_mention_pairs, build_property_pairs, identify_mentions, identify_property_spans, train,
    LinearModel, TokenLog, TrainingPair, MENTION_CATALOG, PROPERTY_CATALOG,
};

/// One annotated document of the evaluation corpus.
#[derive(Debug, Clone)]
pub struct CorpusDocument {
    pub document: Document,
    pub annotations: AnnotationSet,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EvalConfig {
    pub seed: u64,
    pub epochs: u32,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            seed: 0,
            epochs: crate::zsl::DEFAULT_EPOCHS,
        }
    }
}

/// Overlap-baseline thresholds mirroring the reference table rows.
pub const OVERLAP_THRESHOLDS: [u32; 4] = [50, 70, 85, 100];

pub const APPROACH_OURS_K: &str = "our (K)";
pub const APPROACH_OURS_E: &str = "our (E)";
pub const APPROACH_RB1: &str = "RB1";
pub const APPROACH_RB2: &str = "RB2";

pub fn overlap_approach_name(threshold: u32) -> String {
    format!("O>={threshold}%")
}

/// Metrics for one held-out protocol.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct FoldReport {
    pub held_out: String,
    pub train_protocols: Vec<String>,
    pub gold_mentions: usize,
    pub mentions: BTreeMap<String, MentionMetrics>,
    pub properties: BTreeMap<String, PropertyMetrics>,
    pub mention_pairs: usize,
    pub property_pairs: usize,
    pub observed_tokens: usize,
    /// Full observed-token log; written to a side file, not the report.
    #[serde(skip)]
    pub token_log: TokenLog,
    /// Training failure, when a fold could not run; remaining folds still do.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct LoocvReport {
    pub seed: u64,
    pub epochs: u32,
    pub folds: Vec<FoldReport>,
    pub aggregate_mentions: BTreeMap<String, MentionMetrics>,
    pub aggregate_properties: BTreeMap<String, PropertyMetrics>,
}

/// Runs the full leave-one-protocol-out evaluation. Training for fold `k`
/// reads only the other documents; the per-fold token log proves it.
pub fn loocv(corpus: &[CorpusDocument], config: &EvalConfig) -> Result<LoocvReport, EvalError> {
    if corpus.len() < 2 {
        return Err(EvalError::TooFewDocuments(corpus.len()));
    }
    let mut report = LoocvReport {
        seed: config.seed,
        epochs: config.epochs,
        ..Default::default()
    };
    for held in 0..corpus.len() {
        let fold = run_fold(corpus, held, config);
        report.folds.push(fold);
    }
    for fold in &report.folds {
        for (name, m) in &fold.mentions {
            let entry = report
                .aggregate_mentions
                .entry(name.clone())
                .or_default();
            *entry = entry.accumulate(m);
        }
        for (name, m) in &fold.properties {
            let entry = report
                .aggregate_properties
                .entry(name.clone())
                .or_default();
            *entry = entry.accumulate(m);
        }
    }
    Ok(report)
}

fn run_fold(corpus: &[CorpusDocument], held: usize, config: &EvalConfig) -> FoldReport {
    let held_doc = &corpus[held];
    let mut fold = FoldReport {
        held_out: held_doc.annotations.protocol_id.clone(),
        train_protocols: corpus
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != held)
            .map(|(_, d)| d.annotations.protocol_id.clone())
            .collect(),
        gold_mentions: held_doc.annotations.gold_mentions.len(),
        ..Default::default()
    };

    // Build training pairs from the other documents only.
    let mut log = TokenLog::new();
    let mut mention_pairs: Vec<TrainingPair> = Vec::new();
    let mut property_pairs: Vec<TrainingPair> = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(held as u64));
    for (i, d) in corpus.iter().enumerate() {
        if i == held {
            continue;
        }
        mention_pairs.extend(build_mention_pairs(
            &d.document,
            &d.annotations.gold_types,
            &d.annotations.gold_mentions,
            &mut rng,
            &mut log,
        ));
        property_pairs.extend(build_property_pairs(
            &d.document,
            &d.annotations.property_spans_flat(),
            &mut rng,
            &mut log,
        ));
    }
    fold.mention_pairs = mention_pairs.len();
    fold.property_pairs = property_pairs.len();
    fold.observed_tokens = log.len();

    let mention_model = match train(
        &mention_pairs,
        &MENTION_CATALOG,
        config.seed,
        config.epochs,
        fold.train_protocols.clone(),
    ) {
        Ok(m) => m,
        Err(e) => {
            fold.error = Some(e.to_string());
            fold.token_log = log;
            return fold;
        }
    };
    // Property training is skipped when the training documents carry no
    // property annotations; the mention evaluation still runs.
    let property_model = if property_pairs.iter().any(|p| p.positive) {
        match train(
            &property_pairs,
            &PROPERTY_CATALOG,
            config.seed,
            config.epochs,
            fold.train_protocols.clone(),
        ) {
            Ok(m) => Some(m),
            Err(e) => {
                fold.error = Some(e.to_string());
                fold.token_log = log;
                return fold;
            }
        }
    } else {
        None
    };

    let doc = &held_doc.document;
    let gold_types = &held_doc.annotations.gold_types;
    let gold_mentions = &held_doc.annotations.gold_mentions;

    let score_mentions = |model: &LinearModel| -> MentionMetrics {
        match identify_mentions(model, doc, gold_types) {
            Ok(pred) => eval_mentions(&pred, gold_mentions),
            Err(_) => MentionMetrics::from_counts(0, 0, gold_mentions.len()),
        }
    };

    fold.mentions
        .insert(APPROACH_OURS_K.to_string(), score_mentions(&mention_model));

    // Extracted-types condition: the pipeline's own type list.
    let extracted = extract_entity_types(&doc.raw, &doc.sections);
    let ours_e = if extracted.is_empty() {
        MentionMetrics::from_counts(0, 0, gold_mentions.len())
    } else {
        match identify_mentions(&mention_model, doc, &extracted) {
            Ok(pred) => eval_mentions(&pred, gold_mentions),
            Err(_) => MentionMetrics::from_counts(0, 0, gold_mentions.len()),
        }
    };
    fold.mentions.insert(APPROACH_OURS_E.to_string(), ours_e);

    for threshold in OVERLAP_THRESHOLDS {
        let pred = overlap_baseline(gold_types, doc, threshold);
        fold.mentions.insert(
            overlap_approach_name(threshold),
            eval_mentions(&pred, gold_mentions),
        );
    }
    for (variant, name) in [(RbVariant::Rb1, APPROACH_RB1), (RbVariant::Rb2, APPROACH_RB2)] {
        let model = rb_weights(&mention_pairs, variant, &MENTION_CATALOG);
        fold.mentions.insert(name.to_string(), score_mentions(&model));
    }

    // Property task.
    let gold_props = &held_doc.annotations.gold_properties;
    if !gold_props.is_empty() && property_model.is_some() {
        let negatives = negative_chunk_count(doc, gold_props);
        let mut prop_result = |name: String, model: &LinearModel| {
            let metrics = match identify_property_spans(model, doc) {
                Ok(pred) => eval_properties(&pred, gold_props, negatives)
                    .unwrap_or_default(),
                Err(_) => PropertyMetrics::default(),
            };
            fold.properties.insert(name, metrics);
        };
        prop_result("our".to_string(), property_model.as_ref().expect("checked"));
        for (variant, name) in [(RbVariant::Rb1, APPROACH_RB1), (RbVariant::Rb2, APPROACH_RB2)] {
            let model = rb_weights(&property_pairs, variant, &PROPERTY_CATALOG);
            prop_result(name.to_string(), &model);
        }
        for threshold in OVERLAP_THRESHOLDS {
            let pred = property_overlap_baseline(doc, threshold);
            fold.properties.insert(
                overlap_approach_name(threshold),
                eval_properties(&pred, gold_props, negatives).unwrap_or_default(),
            );
        }
    }

    fold.token_log = log;
    fold
}

/// Renders the aggregate mention table in the reference layout.
pub fn render_mention_table(report: &LoocvReport) -> String {
    let mut out = String::from("Entity Mention Identification (aggregate over folds)\n");
    out.push_str(&format!(
        "{:<12} {:>6} {:>7} {:>6} {:>6} {:>6}\n",
        "Approach", "Prec", "Recall", "F1", "TP", "FP"
    ));
    let order = table_order(&report.aggregate_mentions);
    for name in order {
        let m = &report.aggregate_mentions[&name];
        out.push_str(&format!(
            "{:<12} {:>6.2} {:>7.2} {:>6.2} {:>6} {:>6}\n",
            name, m.precision, m.recall, m.f1, m.tp, m.fp
        ));
    }
    out
}

/// Renders the per-protocol mention table for the trained classifier under
/// the known-types condition, with `Total (K)` / `Total (E)` rows.
pub fn render_per_protocol_table(report: &LoocvReport) -> String {
    let mut out = String::from("Entity Mention Identification per Protocol\n");
    out.push_str(&format!(
        "{:<12} {:>6} {:>7} {:>6} {:>7}\n",
        "Protocol", "Prec", "Recall", "F1", "#Inst"
    ));
    for fold in &report.folds {
        if let Some(m) = fold.mentions.get(APPROACH_OURS_K) {
            out.push_str(&format!(
                "{:<12} {:>6.2} {:>7.2} {:>6.2} {:>7}\n",
                fold.held_out, m.precision, m.recall, m.f1, fold.gold_mentions
            ));
        }
    }
    for (label, key) in [("Total (K)", APPROACH_OURS_K), ("Total (E)", APPROACH_OURS_E)] {
        if let Some(m) = report.aggregate_mentions.get(key) {
            let inst: usize = report.folds.iter().map(|f| f.gold_mentions).sum();
            out.push_str(&format!(
                "{:<12} {:>6.2} {:>7.2} {:>6.2} {:>7}\n",
                label, m.precision, m.recall, m.f1, inst
            ));
        }
    }
    out
}

/// Renders the aggregate property table.
pub fn render_property_table(report: &LoocvReport) -> String {
    let mut out = String::from("Property Extraction (aggregate over folds)\n");
    out.push_str(&format!("{:<12} {:>6} {:>6}\n", "Approach", "S-TPR", "C-FPR"));
    let order = table_order(&report.aggregate_properties);
    for name in order {
        let m = &report.aggregate_properties[&name];
        out.push_str(&format!(
            "{:<12} {:>6.2} {:>6.2}\n",
            name, m.s_tpr, m.c_fpr
        ));
    }
    out
}

/// Baselines first, then RB variants, then ours — the reference row order.
fn table_order<V>(map: &BTreeMap<String, V>) -> Vec<String> {
    let mut names: Vec<String> = Vec::new();
    for t in OVERLAP_THRESHOLDS {
        let n = overlap_approach_name(t);
        if map.contains_key(&n) {
            names.push(n);
        }
    }
    for n in [APPROACH_RB1, APPROACH_RB2, "our", APPROACH_OURS_K, APPROACH_OURS_E] {
        if map.contains_key(n) {
            names.push(n.to_string());
        }
    }
    for k in map.keys() {
        if !names.contains(k) {
            names.push(k.clone());
        }
    }
    names
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{load_rfc_str, Span};
    use crate::type_extraction::FieldType;

    /// Tiny synthetic corpus: three "protocols" whose field names are
    /// disjoint, every mention an exact name match.
    fn synthetic_corpus() -> Vec<CorpusDocument> {
        let specs = [
            ("alpha", vec!["Alpha Count", "Beam Width"]),
            ("beta", vec!["Crest Factor", "Drift Rate"]),
            ("gamma", vec!["Echo Depth", "Flux Margin"]),
        ];
        specs
            .iter()
            .map(|(id, fields)| {
                let mut text = String::from("1.  Header Format\n\n");
                for f in fields {
                    text.push_str(&format!(
                        "  {f}: 16 bits\n\n    The {f} field holds a value. Senders set the {f} before transmit.\n\n",
                    ));
                }
                text.push_str("  Unrelated prose wanders here with no specific meaning.\n");
                let document = Document::ingest(load_rfc_str(&text, id).unwrap());
                let gold_types: Vec<FieldType> = fields
                    .iter()
                    .enumerate()
                    .map(|(i, f)| FieldType::with_layout(f, 16, i))
                    .collect();
                let gold_mentions: Vec<(Span, String)> = document
                    .chunks
                    .iter()
                    .filter(|c| !c.is_anaphor && fields.contains(&c.text().as_str()))
                    .map(|c| (c.span, c.text()))
                    .collect();
                CorpusDocument {
                    document,
                    annotations: AnnotationSet {
                        protocol_id: id.to_string(),
                        gold_types,
                        gold_mentions,
                        gold_properties: vec![],
                    },
                }
            })
            .collect()
    }

    #[test]
    fn loocv_produces_one_fold_per_document() {
        let corpus = synthetic_corpus();
        let report = loocv(&corpus, &EvalConfig::default()).unwrap();
        assert_eq!(report.folds.len(), 3);
        let held: Vec<&str> = report.folds.iter().map(|f| f.held_out.as_str()).collect();
        assert_eq!(held, vec!["alpha", "beta", "gamma"]);
        for fold in &report.folds {
            assert!(fold.error.is_none(), "{:?}", fold.error);
            assert!(!fold.train_protocols.contains(&fold.held_out));
        }
        assert!(report.aggregate_mentions.contains_key(APPROACH_OURS_K));
    }

    #[test]
    fn loocv_is_deterministic() {
        let corpus = synthetic_corpus();
        let cfg = EvalConfig { seed: 5, epochs: 20 };
        let a = loocv(&corpus, &cfg).unwrap();
        let b = loocv(&corpus, &cfg).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn training_never_observes_held_out_tokens() {
        let mut corpus = synthetic_corpus();
        // Plant a unique canary in each document's text.
        for (i, cd) in corpus.iter_mut().enumerate() {
            let canary = format!("zzcanary{i}");
            let text = format!(
                "{}\n  The {canary} token appears once.\n",
                cd.document.raw.text
            );
            cd.document = Document::ingest(load_rfc_str(&text, cd.document.protocol_id()).unwrap());
        }
        let report = loocv(&corpus, &EvalConfig::default()).unwrap();
        for (i, fold) in report.folds.iter().enumerate() {
            let canary = format!("zzcanary{i}");
            assert!(
                !fold.token_log.contains(&canary),
                "fold {i} leaked its held-out canary"
            );
            // Sanity: other documents' canaries do appear.
            let other = format!("zzcanary{}", (i + 1) % corpus.len());
            assert!(fold.token_log.contains(&other));
        }
    }

    #[test]
    fn too_few_documents_is_error() {
        let corpus = synthetic_corpus();
        assert!(matches!(
            loocv(&corpus[..1], &EvalConfig::default()),
            Err(EvalError::TooFewDocuments(1))
        ));
    }

    #[test]
    fn e_condition_does_not_beat_k_condition() {
        let corpus = synthetic_corpus();
        let report = loocv(&corpus, &EvalConfig::default()).unwrap();
        let k = report.aggregate_mentions[APPROACH_OURS_K].f1;
        let e = report.aggregate_mentions[APPROACH_OURS_E].f1;
        assert!(e <= k + 1e-9, "E={e} K={k}");
    }

    #[test]
    fn tables_render_all_rows() {
        let corpus = synthetic_corpus();
        let report = loocv(&corpus, &EvalConfig::default()).unwrap();
        let table = render_mention_table(&report);
        for needle in ["O>=50%", "O>=100%", "RB1", "RB2", "our (K)", "our (E)"] {
            assert!(table.contains(needle), "missing {needle} in:\n{table}");
        }
        let per_proto = render_per_protocol_table(&report);
        assert!(per_proto.contains("Total (K)"));
        assert!(per_proto.contains("Total (E)"));
    }
}
