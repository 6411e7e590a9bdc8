//! Zero-shot pairwise classification: linking chunks to entity types
//! (mention identification) and flagging property-bearing chunks, plus
//! property-kind assignment and argument resolution.

pub mod features;
pub mod model;
pub mod pairs;

use serde::{Deserialize, Serialize};

use crate::corpus::{ancestor_chain, Document, Section, Span};
use crate::error::{ModelError, PropertyError};
use crate::grammar::{self, PropertyKind, PropertyTuple, Provenance, KIND_PRIORITY};
use crate::type_extraction::FieldType;

pub use features::{
    featurize_mention, featurize_property, normalize_match_tokens, property_phrase_tokens,
    Catalog, FeatureVector, MentionContext, MENTION_CATALOG, PROPERTY_CATALOG,
};
pub use model::{train, LinearModel, TrainingMeta, TrainingPair, DEFAULT_EPOCHS};
pub use pairs::{build_mention_pairs, build_property_pairs, TokenLog};

/// A chunk linked to an entity type with its classifier score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mention {
    pub chunk_index: usize,
    pub type_index: usize,
    pub type_name: String,
    pub span: Span,
    pub score: f64,
}

/// A chunk flagged as expressing some property; kind and argument are
/// filled by [`assign_property_kind`] and [`resolve_property_argument`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertySpan {
    pub chunk_index: usize,
    pub span: Span,
    pub score: f64,
    pub kind: Option<PropertyKind>,
    pub argument: Option<String>,
}

/// Scores every (type, chunk) pair and emits at most one mention per chunk
/// (argmax type, threshold gate), then resolves span overlaps: keep the
/// highest score, break ties toward the longer chunk, then the earlier one.
pub fn identify_mentions(
    model: &LinearModel,
    doc: &Document,
    types: &[FieldType],
) -> Result<Vec<Mention>, ModelError> {
    if types.is_empty() {
        return Err(ModelError::EmptyTypeList);
    }
    let mut candidates: Vec<Mention> = Vec::new();
    for (ci, chunk) in doc.chunks.iter().enumerate() {
        let ctx = MentionContext::from_document(doc, chunk);
        let mut best: Option<(f64, usize)> = None;
        for (ti, ty) in types.iter().enumerate() {
            let fv = featurize_mention(ty, chunk, &ctx);
            let s = model.score(&fv)?;
            let better = match best {
                None => true,
                Some((bs, _)) => s > bs,
            };
            if better {
                best = Some((s, ti));
            }
        }
        if let Some((score, ti)) = best {
            if model.is_positive(score) {
                candidates.push(Mention {
                    chunk_index: ci,
                    type_index: ti,
                    type_name: types[ti].name.clone(),
                    span: chunk.span,
                    score,
                });
            }
        }
    }
    Ok(resolve_overlaps(candidates))
}

/// Greedy overlap resolution over positive chunks.
fn resolve_overlaps(mut candidates: Vec<Mention>) -> Vec<Mention> {
    candidates.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| b.span.len().cmp(&a.span.len()))
            .then_with(|| a.span.start.cmp(&b.span.start))
            .then_with(|| a.type_index.cmp(&b.type_index))
    });
    let mut kept: Vec<Mention> = Vec::new();
    for m in candidates {
        if kept.iter().all(|k| !k.span.overlaps(&m.span)) {
            kept.push(m);
        }
    }
    kept.sort_by_key(|m| (m.span.start, m.span.end));
    kept
}

/// Returns every chunk the property model scores at or above its threshold.
pub fn identify_property_spans(
    model: &LinearModel,
    doc: &Document,
) -> Result<Vec<PropertySpan>, ModelError> {
    let phrases = property_phrase_tokens();
    let mut out = Vec::new();
    for (ci, chunk) in doc.chunks.iter().enumerate() {
        let ctx = MentionContext::from_document(doc, chunk);
        let fv = featurize_property(chunk, &ctx, doc.sentence_text(chunk.sentence_index), &phrases);
        let s = model.score(&fv)?;
        if model.is_positive(s) {
            out.push(PropertySpan {
                chunk_index: ci,
                span: chunk.span,
                score: s,
                kind: None,
                argument: None,
            });
        }
    }
    Ok(out)
}

/// Picks the kind with the maximum key-phrase token overlap inside the
/// span's sentence; ties break by the fixed kind priority order.
pub fn assign_property_kind(
    span: &PropertySpan,
    doc: &Document,
) -> Result<PropertyKind, PropertyError> {
    let chunk = &doc.chunks[span.chunk_index];
    let sentence_tokens = normalize_match_tokens(doc.sentence_text(chunk.sentence_index));
    let mut best: Option<(usize, PropertyKind)> = None;
    for kind in KIND_PRIORITY {
        let mut count = 0usize;
        for phrase in kind.key_phrases() {
            let phrase_tokens = normalize_match_tokens(phrase);
            if features::contains_subsequence(&sentence_tokens, &phrase_tokens) {
                count += phrase_tokens.len();
            }
        }
        if count > 0 && best.map(|(c, _)| count > c).unwrap_or(true) {
            best = Some((count, kind));
        }
    }
    best.map(|(_, k)| k).ok_or(PropertyError::UnassignableKind {
        start: span.span.start,
        end: span.span.end,
    })
}

/// Resolves a property's argument to the field type named in the enclosing
/// section's title, walking up parent sections when needed. When several
/// type names appear in one title the longest match wins.
pub fn resolve_property_argument<'t>(
    span: &PropertySpan,
    doc: &Document,
    sections: &[Section],
    types: &'t [FieldType],
) -> Result<&'t FieldType, PropertyError> {
    let chunk = &doc.chunks[span.chunk_index];
    for section_index in ancestor_chain(sections, chunk.section_index) {
        let title = sections[section_index].title.to_lowercase();
        if title.is_empty() {
            continue;
        }
        let mut best: Option<(usize, usize, usize)> = None; // (name len, pos, type idx)
        for (ti, ty) in types.iter().enumerate() {
            let name = ty.folded_name();
            if let Some(pos) = title.find(&name) {
                let cand = (name.len(), pos, ti);
                let better = match best {
                    None => true,
                    Some((blen, bpos, bti)) => {
                        (cand.0 > blen)
                            || (cand.0 == blen && pos < bpos)
                            || (cand.0 == blen && pos == bpos && ti < bti)
                    }
                };
                if better {
                    best = Some(cand);
                }
            }
        }
        if let Some((_, _, ti)) = best {
            return Ok(&types[ti]);
        }
    }
    Err(PropertyError::UnresolvedArgument {
        start: span.span.start,
        end: span.span.end,
        section: sections[chunk.section_index].title.clone(),
    })
}

/// Outcome counters from running the full property pipeline on a document.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyPipelineStats {
    pub flagged_chunks: usize,
    pub unassignable_kind: usize,
    pub unresolved_argument: usize,
    pub tuples: usize,
}

/// Glue: flag spans, assign kinds, resolve arguments, and emit raw property
/// tuples ready for post-processing. Spans that fail kind assignment or
/// argument resolution are dropped and counted.
pub fn extract_property_tuples(
    model: &LinearModel,
    doc: &Document,
    types: &[FieldType],
) -> Result<(Vec<PropertyTuple>, PropertyPipelineStats), ModelError> {
    let spans = identify_property_spans(model, doc)?;
    let mut stats = PropertyPipelineStats {
        flagged_chunks: spans.len(),
        ..Default::default()
    };
    let mut tuples = Vec::new();
    for span in spans {
        let kind = match assign_property_kind(&span, doc) {
            Ok(k) => k,
            Err(_) => {
                stats.unassignable_kind += 1;
                continue;
            }
        };
        let field = match resolve_property_argument(&span, doc, &doc.sections, types) {
            Ok(f) => f,
            Err(_) => {
                stats.unresolved_argument += 1;
                continue;
            }
        };
        let chunk = &doc.chunks[span.chunk_index];
        tuples.push(PropertyTuple {
            kind,
            field: field.name.clone(),
            score: span.score,
            provenance: Provenance::Extracted,
            evidence: Some(grammar::Evidence::new(
                span.span,
                doc.sentence_text(chunk.sentence_index),
            )),
        });
    }
    stats.tuples = tuples.len();
    Ok((tuples, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::load_rfc_str;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn train_exact_match_model() -> LinearModel {
        // Synthetic corpus: positives are exact type-name chunks, negatives
        // share nothing with any type.
        let doc = Document::ingest(
            load_rfc_str(
                "1.  Header Format\n\n  The Checksum covers everything. The Window shifts. Pelicans wander elsewhere today.\n",
                "syn",
            )
            .unwrap(),
        );
        let types = vec![FieldType::named("Checksum"), FieldType::named("Window")];
        let gold: Vec<(Span, String)> = doc
            .chunks
            .iter()
            .filter(|c| ["Checksum", "Window"].contains(&c.text().as_str()))
            .map(|c| (c.span, c.text()))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut log = TokenLog::new();
        let pairs = build_mention_pairs(&doc, &types, &gold, &mut rng, &mut log);
        train(&pairs, &MENTION_CATALOG, 11, 50, vec!["syn".into()]).unwrap()
    }

    #[test]
    fn exact_match_synthetic_corpus_is_perfect() {
        let model = train_exact_match_model();
        let test_doc = Document::ingest(
            load_rfc_str(
                "1.  Header Format\n\n  The Payload arrives intact. A Cursor moves. Giraffes roam around quietly.\n",
                "held",
            )
            .unwrap(),
        );
        let types = vec![FieldType::named("Payload"), FieldType::named("Cursor")];
        let mentions = identify_mentions(&model, &test_doc, &types).unwrap();
        let got: Vec<(String, String)> = mentions
            .iter()
            .map(|m| {
                (
                    test_doc.chunk_text(&test_doc.chunks[m.chunk_index]).to_string(),
                    m.type_name.clone(),
                )
            })
            .collect();
        assert_eq!(
            got,
            vec![
                ("Payload".to_string(), "Payload".to_string()),
                ("Cursor".to_string(), "Cursor".to_string()),
            ]
        );
    }

    #[test]
    fn empty_types_is_error() {
        let model = train_exact_match_model();
        let doc = Document::ingest(load_rfc_str("Anything at all.\n", "d").unwrap());
        assert!(matches!(
            identify_mentions(&model, &doc, &[]),
            Err(ModelError::EmptyTypeList)
        ));
    }

    #[test]
    fn mention_output_is_stable() {
        let model = train_exact_match_model();
        let doc = Document::ingest(
            load_rfc_str("1.  Header\n\n  The Checksum covers the Window value.\n", "d").unwrap(),
        );
        let types = vec![FieldType::named("Checksum"), FieldType::named("Window")];
        let a = identify_mentions(&model, &doc, &types).unwrap();
        let b = identify_mentions(&model, &doc, &types).unwrap();
        assert_eq!(a, b);
        // Non-overlapping output.
        for (i, m) in a.iter().enumerate() {
            for n in a.iter().skip(i + 1) {
                assert!(!m.span.overlaps(&n.span));
            }
        }
    }

    #[test]
    fn kind_assignment_prefers_max_overlap() {
        let doc = Document::ingest(
            load_rfc_str(
                "5.1.  Generic Header\n\n   Data Offset: 8 bits\n      The offset from the start of the packet's DCCP header to the start of its application data area, in 32-bit words.\n",
                "dccp",
            )
            .unwrap(),
        );
        let chunk_index = doc
            .chunks
            .iter()
            .position(|c| c.text() == "header")
            .expect("header chunk");
        let span = PropertySpan {
            chunk_index,
            span: doc.chunks[chunk_index].span,
            score: 1.0,
            kind: None,
            argument: None,
        };
        assert_eq!(
            assign_property_kind(&span, &doc).unwrap(),
            PropertyKind::HeaderLength
        );
    }

    #[test]
    fn kind_assignment_checksum_sentence() {
        let doc = Document::ingest(
            load_rfc_str("This field is the ones complement checksum of the header.\n", "d")
                .unwrap(),
        );
        let chunk_index = doc
            .chunks
            .iter()
            .position(|c| c.text() == "checksum")
            .expect("chunk");
        let span = PropertySpan {
            chunk_index,
            span: doc.chunks[chunk_index].span,
            score: 1.0,
            kind: None,
            argument: None,
        };
        // Checksum phrases outweigh the bare "header" hit.
        assert_eq!(
            assign_property_kind(&span, &doc).unwrap(),
            PropertyKind::Checksum
        );
    }

    #[test]
    fn kind_assignment_tie_uses_priority() {
        // "port" (1 token) vs "checksum" (1 token): tie, Checksum precedes
        // Port in the priority order.
        let doc = Document::ingest(
            load_rfc_str("The port and checksum values appear together.\n", "d").unwrap(),
        );
        let chunk_index = doc
            .chunks
            .iter()
            .position(|c| c.text() == "values")
            .expect("chunk");
        let span = PropertySpan {
            chunk_index,
            span: doc.chunks[chunk_index].span,
            score: 1.0,
            kind: None,
            argument: None,
        };
        assert_eq!(
            assign_property_kind(&span, &doc).unwrap(),
            PropertyKind::Checksum
        );
    }

    #[test]
    fn zero_overlap_kind_is_error() {
        let doc = Document::ingest(load_rfc_str("Nothing relevant appears anywhere.\n", "d").unwrap());
        let span = PropertySpan {
            chunk_index: 0,
            span: doc.chunks[0].span,
            score: 1.0,
            kind: None,
            argument: None,
        };
        assert!(matches!(
            assign_property_kind(&span, &doc),
            Err(PropertyError::UnassignableKind { .. })
        ));
    }

    #[test]
    fn argument_resolves_via_section_title_and_parent_walk() {
        let doc = Document::ingest(
            load_rfc_str(
                "5.1.  Checksum: 16 bits\n\n   Details follow.\n\n5.1.1.  Computation Notes\n\n   The value spans the header.\n",
                "d",
            )
            .unwrap(),
        );
        let types = vec![FieldType::named("Checksum"), FieldType::named("Window")];
        // A chunk in the nested subsection resolves through the parent walk.
        let chunk_index = doc
            .chunks
            .iter()
            .position(|c| c.text() == "value spans" || c.text() == "value")
            .expect("chunk");
        let span = PropertySpan {
            chunk_index,
            span: doc.chunks[chunk_index].span,
            score: 1.0,
            kind: None,
            argument: None,
        };
        let arg = resolve_property_argument(&span, &doc, &doc.sections, &types).unwrap();
        assert_eq!(arg.name, "Checksum");
    }

    #[test]
    fn preamble_argument_is_unresolved() {
        let doc = Document::ingest(
            load_rfc_str("Loose preamble text about headers.\n", "d").unwrap(),
        );
        let types = vec![FieldType::named("Checksum")];
        let span = PropertySpan {
            chunk_index: 0,
            span: doc.chunks[0].span,
            score: 1.0,
            kind: None,
            argument: None,
        };
        assert!(matches!(
            resolve_property_argument(&span, &doc, &doc.sections, &types),
            Err(PropertyError::UnresolvedArgument { .. })
        ));
    }
}
