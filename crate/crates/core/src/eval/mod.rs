//! Intrinsic evaluation: gold annotations, mention and property metrics,
//! rule-based baselines, and the leave-one-protocol-out driver.

pub mod baselines;
pub mod loocv;

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Document, Span};
use crate::error::EvalError;
use crate::grammar::PropertyKind;
use crate::type_extraction::FieldType;
use crate::zsl::{Mention, PropertySpan};

pub use baselines::{overlap_baseline, property_overlap_baseline, rb_weights, RbVariant};
pub use loocv::{loocv, CorpusDocument, EvalConfig, FoldReport, LoocvReport};

/// One gold property annotation: a property kind, its argument field, and
/// the span(s) of text expressing it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldProperty {
    pub spans: Vec<Span>,
    pub kind: PropertyKind,
    pub argument: String,
}

/// Gold annotations for one document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationSet {
    pub protocol_id: String,
    pub gold_types: Vec<FieldType>,
    pub gold_mentions: Vec<(Span, String)>,
    pub gold_properties: Vec<GoldProperty>,
}

impl AnnotationSet {
    /// Validates spans against the document and mention labels against the
    /// gold type list.
    pub fn validate(&self, doc: &Document, path: &Path) -> Result<(), EvalError> {
        let len = doc.raw.text.len();
        let names: BTreeSet<String> =
            self.gold_types.iter().map(|t| t.folded_name()).collect();
        for (i, (span, label)) in self.gold_mentions.iter().enumerate() {
            if span.end > len || span.start >= span.end {
                return Err(EvalError::Annotation {
                    path: path.to_path_buf(),
                    line: i + 1,
                    reason: format!("mention span {}..{} outside document", span.start, span.end),
                });
            }
            if !names.contains(&label.to_lowercase()) {
                return Err(EvalError::Annotation {
                    path: path.to_path_buf(),
                    line: i + 1,
                    reason: format!("mention label {label:?} is not a gold type"),
                });
            }
        }
        for (i, p) in self.gold_properties.iter().enumerate() {
            for span in &p.spans {
                if span.end > len || span.start >= span.end {
                    return Err(EvalError::Annotation {
                        path: path.to_path_buf(),
                        line: i + 1,
                        reason: format!(
                            "property span {}..{} outside document",
                            span.start, span.end
                        ),
                    });
                }
            }
        }
        Ok(())
    }

    /// All property spans flattened, for training-pair construction.
    pub fn property_spans_flat(&self) -> Vec<Span> {
        self.gold_properties
            .iter()
            .flat_map(|p| p.spans.iter().copied())
            .collect()
    }
}

/// Annotation file format: tab-separated records
/// `doc<TAB>start<TAB>end<TAB>kind<TAB>label<TAB>argument`, where kind is
/// `type`, `mention`, or `property`. For `type` records the argument column
/// holds `size_bits/order` with `-` for missing parts. Property records
/// with the same (label, argument) merge into one multi-span annotation.
pub fn read_annotations(path: &Path) -> Result<AnnotationSet, EvalError> {
    let content = std::fs::read_to_string(path).map_err(|e| EvalError::Annotation {
        path: path.to_path_buf(),
        line: 0,
        reason: e.to_string(),
    })?;
    parse_annotations(&content, path)
}

pub fn parse_annotations(content: &str, path: &Path) -> Result<AnnotationSet, EvalError> {
    let err = |line: usize, reason: String| EvalError::Annotation {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let mut protocol_id = String::new();
    let mut gold_types = Vec::new();
    let mut gold_mentions = Vec::new();
    let mut props: Vec<GoldProperty> = Vec::new();

    for (lineno, line) in content.lines().enumerate() {
        let lineno = lineno + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 5 {
            return Err(err(lineno, format!("expected ≥5 tab-separated columns, got {}", cols.len())));
        }
        let doc_id = cols[0];
        if protocol_id.is_empty() {
            protocol_id = doc_id.to_string();
        } else if protocol_id != doc_id {
            return Err(err(lineno, format!("mixed doc ids {protocol_id:?} and {doc_id:?}")));
        }
        let start: usize = cols[1]
            .parse()
            .map_err(|_| err(lineno, format!("bad start offset {:?}", cols[1])))?;
        let end: usize = cols[2]
            .parse()
            .map_err(|_| err(lineno, format!("bad end offset {:?}", cols[2])))?;
        let label = cols[4].to_string();
        match cols[3] {
            "type" => {
                let mut t = FieldType::named(&label);
                if let Some(arg) = cols.get(5).filter(|a| !a.is_empty()) {
                    let mut parts = arg.split('/');
                    let size = parts.next().filter(|s| *s != "-");
                    let order = parts.next().filter(|s| *s != "-");
                    t.size_bits = size
                        .map(|s| s.parse::<u32>())
                        .transpose()
                        .map_err(|_| err(lineno, format!("bad size in {arg:?}")))?;
                    t.order = order
                        .map(|s| s.parse::<usize>())
                        .transpose()
                        .map_err(|_| err(lineno, format!("bad order in {arg:?}")))?;
                }
                gold_types.push(t);
            }
            "mention" => {
                gold_mentions.push((Span::new(start, end), label));
            }
            "property" => {
                let kind = PropertyKind::from_name(&label)
                    .ok_or_else(|| err(lineno, format!("unknown property kind {label:?}")))?;
                let argument = cols
                    .get(5)
                    .filter(|a| !a.is_empty())
                    .ok_or_else(|| err(lineno, "property record missing argument".to_string()))?
                    .to_string();
                let span = Span::new(start, end);
                if let Some(existing) = props
                    .iter_mut()
                    .find(|p| p.kind == kind && p.argument == argument)
                {
                    existing.spans.push(span);
                } else {
                    props.push(GoldProperty {
                        spans: vec![span],
                        kind,
                        argument,
                    });
                }
            }
            other => return Err(err(lineno, format!("unknown record kind {other:?}"))),
        }
    }
    Ok(AnnotationSet {
        protocol_id,
        gold_types,
        gold_mentions,
        gold_properties: props,
    })
}

/// Serializes an annotation set back to the tab-separated format.
pub fn write_annotations(set: &AnnotationSet) -> String {
    let mut out = String::new();
    for t in &set.gold_types {
        let size = t.size_bits.map(|s| s.to_string()).unwrap_or("-".into());
        let order = t.order.map(|o| o.to_string()).unwrap_or("-".into());
        out.push_str(&format!(
            "{}\t0\t0\ttype\t{}\t{}/{}\n",
            set.protocol_id, t.name, size, order
        ));
    }
    for (span, label) in &set.gold_mentions {
        out.push_str(&format!(
            "{}\t{}\t{}\tmention\t{}\t\n",
            set.protocol_id, span.start, span.end, label
        ));
    }
    for p in &set.gold_properties {
        for span in &p.spans {
            out.push_str(&format!(
                "{}\t{}\t{}\tproperty\t{}\t{}\n",
                set.protocol_id,
                span.start,
                span.end,
                p.kind.name(),
                p.argument
            ));
        }
    }
    out
}

/// Precision/recall/F1 with raw counts for mention identification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct MentionMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl MentionMetrics {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> MentionMetrics {
        // Undefined ratios report as 0 by convention.
        let precision = if tp + fp > 0 {
            tp as f64 / (tp + fp) as f64
        } else {
            0.0
        };
        let recall = if tp + fn_ > 0 {
            tp as f64 / (tp + fn_) as f64
        } else {
            0.0
        };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        MentionMetrics {
            precision,
            recall,
            f1,
            tp,
            fp,
            fn_,
        }
    }

    pub fn accumulate(&self, other: &MentionMetrics) -> MentionMetrics {
        MentionMetrics::from_counts(self.tp + other.tp, self.fp + other.fp, self.fn_ + other.fn_)
    }
}

/// Span-level true positive rate and chunk-level false positive rate for
/// property extraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct PropertyMetrics {
    pub s_tpr: f64,
    pub c_fpr: f64,
    pub spans_hit: usize,
    pub spans_total: usize,
    pub false_chunks: usize,
    pub negative_chunks: usize,
}

impl PropertyMetrics {
    pub fn from_counts(
        spans_hit: usize,
        spans_total: usize,
        false_chunks: usize,
        negative_chunks: usize,
    ) -> PropertyMetrics {
        PropertyMetrics {
            s_tpr: if spans_total > 0 {
                spans_hit as f64 / spans_total as f64
            } else {
                0.0
            },
            c_fpr: if negative_chunks > 0 {
                false_chunks as f64 / negative_chunks as f64
            } else {
                0.0
            },
            spans_hit,
            spans_total,
            false_chunks,
            negative_chunks,
        }
    }

    pub fn accumulate(&self, other: &PropertyMetrics) -> PropertyMetrics {
        PropertyMetrics::from_counts(
            self.spans_hit + other.spans_hit,
            self.spans_total + other.spans_total,
            self.false_chunks + other.false_chunks,
            self.negative_chunks + other.negative_chunks,
        )
    }
}

/// Scores predicted mentions against gold: a prediction is a true positive
/// iff its span and type match a gold mention exactly; each gold mention
/// matches at most one prediction.
pub fn eval_mentions(predicted: &[Mention], gold: &[(Span, String)]) -> MentionMetrics {
    let mut unmatched: Vec<(Span, String)> = gold
        .iter()
        .map(|(s, n)| (*s, n.to_lowercase()))
        .collect();
    let mut tp = 0usize;
    let mut fp = 0usize;
    for m in predicted {
        let key = (m.span, m.type_name.to_lowercase());
        if let Some(pos) = unmatched.iter().position(|g| *g == key) {
            unmatched.swap_remove(pos);
            tp += 1;
        } else {
            fp += 1;
        }
    }
    MentionMetrics::from_counts(tp, fp, unmatched.len())
}

/// Scores flagged property chunks: a gold annotation counts as found when
/// any predicted chunk lies inside one of its spans; predicted chunks
/// inside no gold span are false chunks, over the document's negative
/// chunk count.
pub fn eval_properties(
    predicted: &[PropertySpan],
    gold: &[GoldProperty],
    total_negative_chunks: usize,
) -> Result<PropertyMetrics, EvalError> {
    if gold.is_empty() {
        return Err(EvalError::UndefinedMetric(
            "S-TPR over zero gold property spans",
        ));
    }
    let hit = |g: &GoldProperty| {
        predicted
            .iter()
            .any(|p| g.spans.iter().any(|gs| p.span.within(gs)))
    };
    let spans_hit = gold.iter().filter(|g| hit(g)).count();
    let false_chunks = predicted
        .iter()
        .filter(|p| {
            !gold
                .iter()
                .any(|g| g.spans.iter().any(|gs| p.span.within(gs)))
        })
        .count();
    Ok(PropertyMetrics::from_counts(
        spans_hit,
        gold.len(),
        false_chunks,
        total_negative_chunks,
    ))
}

/// Number of chunks lying inside no gold property span: the C-FPR
/// denominator.
pub fn negative_chunk_count(doc: &Document, gold: &[GoldProperty]) -> usize {
    doc.chunks
        .iter()
        .filter(|c| {
            !gold
                .iter()
                .any(|g| g.spans.iter().any(|gs| c.span.within(gs)))
        })
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mention(start: usize, end: usize, name: &str) -> Mention {
        Mention {
            chunk_index: 0,
            type_index: 0,
            type_name: name.to_string(),
            span: Span::new(start, end),
            score: 1.0,
        }
    }

    #[test]
    fn paper_aggregate_precision_fixture() {
        // 875 gold mentions, 735 predictions, 576 exact matches.
        let gold: Vec<(Span, String)> = (0..875)
            .map(|i| (Span::new(i * 10, i * 10 + 5), format!("T{i}")))
            .collect();
        let mut predicted: Vec<Mention> = (0..576)
            .map(|i| mention(i * 10, i * 10 + 5, &format!("T{i}")))
            .collect();
        for i in 0..159 {
            predicted.push(mention(100_000 + i * 10, 100_000 + i * 10 + 5, "junk"));
        }
        let m = eval_mentions(&predicted, &gold);
        assert_eq!((m.tp, m.fp, m.fn_), (576, 159, 299));
        assert!((m.precision - 576.0 / 735.0).abs() < 1e-9);
        assert!((m.recall - 576.0 / 875.0).abs() < 1e-9);
        assert!((m.f1 - 1152.0 / 1610.0).abs() < 1e-9);
        assert!((m.precision - 0.78).abs() < 0.005);
    }

    #[test]
    fn empty_predictions_report_zero() {
        let gold = vec![(Span::new(0, 5), "A".to_string())];
        let m = eval_mentions(&[], &gold);
        assert_eq!(m.precision, 0.0);
        assert_eq!(m.recall, 0.0);
        assert_eq!(m.f1, 0.0);
        assert_eq!(m.fn_, 1);
    }

    #[test]
    fn identical_predictions_are_perfect() {
        let gold = vec![
            (Span::new(0, 5), "A".to_string()),
            (Span::new(10, 15), "B".to_string()),
        ];
        let predicted = vec![mention(0, 5, "A"), mention(10, 15, "B")];
        let m = eval_mentions(&predicted, &gold);
        assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn type_mismatch_is_fp() {
        let gold = vec![(Span::new(0, 5), "A".to_string())];
        let predicted = vec![mention(0, 5, "B")];
        let m = eval_mentions(&predicted, &gold);
        assert_eq!((m.tp, m.fp, m.fn_), (0, 1, 1));
    }

    fn pspan(start: usize, end: usize) -> PropertySpan {
        PropertySpan {
            chunk_index: 0,
            span: Span::new(start, end),
            score: 1.0,
            kind: None,
            argument: None,
        }
    }

    #[test]
    fn property_metrics_perfect_case() {
        let gold = vec![GoldProperty {
            spans: vec![Span::new(0, 20)],
            kind: PropertyKind::Checksum,
            argument: "Checksum".into(),
        }];
        let m = eval_properties(&[pspan(2, 10)], &gold, 100).unwrap();
        assert_eq!((m.s_tpr, m.c_fpr), (1.0, 0.0));
    }

    #[test]
    fn property_metrics_counts_stray_chunks() {
        let gold = vec![GoldProperty {
            spans: vec![Span::new(0, 20)],
            kind: PropertyKind::Port,
            argument: "Source Port".into(),
        }];
        let m = eval_properties(&[pspan(50, 60), pspan(70, 80)], &gold, 10).unwrap();
        assert_eq!(m.s_tpr, 0.0);
        assert_eq!(m.c_fpr, 0.2);
    }

    #[test]
    fn zero_gold_spans_is_undefined() {
        assert!(eval_properties(&[pspan(0, 5)], &[], 10).is_err());
    }

    #[test]
    fn annotation_round_trip() {
        let content = "tcp\t0\t0\ttype\tSource Port\t16/0\ntcp\t0\t0\ttype\tChecksum\t16/8\ntcp\t120\t131\tmention\tSource Port\t\ntcp\t400\t460\tproperty\tChecksum\tChecksum\ntcp\t500\t520\tproperty\tChecksum\tChecksum\n";
        let set = parse_annotations(content, Path::new("mem")).unwrap();
        assert_eq!(set.protocol_id, "tcp");
        assert_eq!(set.gold_types.len(), 2);
        assert_eq!(set.gold_types[0].size_bits, Some(16));
        assert_eq!(set.gold_mentions.len(), 1);
        assert_eq!(set.gold_properties.len(), 1);
        assert_eq!(set.gold_properties[0].spans.len(), 2);
        let text = write_annotations(&set);
        let again = parse_annotations(&text, Path::new("mem")).unwrap();
        assert_eq!(set, again);
    }

    #[test]
    fn annotation_errors_carry_line_numbers() {
        let content = "tcp\t0\t0\ttype\tA\t-/-\ntcp\tzzz\t5\tmention\tA\t\n";
        let err = parse_annotations(content, Path::new("mem")).unwrap_err();
        match err {
            EvalError::Annotation { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other}"),
        }
    }
}
