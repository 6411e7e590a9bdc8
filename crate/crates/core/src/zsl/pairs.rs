//! Training-pair construction for the mention and property classifiers,
//! with an observed-token log that makes the zero-shot contract auditable:
//! every token string touched while building pairs is recorded, so a test
//! can assert that held-out documents never leak into training.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Document, Span};
use crate::type_extraction::FieldType;
use crate::zsl::features::{
    featurize_mention, featurize_property, property_phrase_tokens, MentionContext,
};
use crate::zsl::model::TrainingPair;

/// Negative pairs generated per positive pair.
pub const NEGATIVES_PER_POSITIVE: usize = 5;
/// Of those, how many reuse the positive chunk with a different type.
const OTHER_TYPE_NEGATIVES: usize = 3;

/// Sorted set of every token string observed while constructing training
/// pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenLog {
    tokens: BTreeSet<String>,
}

impl TokenLog {
    pub fn new() -> TokenLog {
        TokenLog::default()
    }

    pub fn record(&mut self, token: &str) {
        self.tokens.insert(token.to_string());
    }

    pub fn record_text(&mut self, text: &str) {
        for t in crate::corpus::tokenize(text, 0) {
            self.tokens.insert(t.text);
        }
    }

    pub fn contains(&self, token: &str) -> bool {
        self.tokens.contains(token)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn merge(&mut self, other: &TokenLog) {
        self.tokens.extend(other.tokens.iter().cloned());
    }

    /// One token per line, sorted.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for t in &self.tokens {
            s.push_str(t);
            s.push('\n');
        }
        s
    }
}

fn log_chunk_context(log: &mut TokenLog, doc: &Document, chunk_index: usize) {
    let chunk = &doc.chunks[chunk_index];
    for t in &chunk.tokens {
        log.record(t);
    }
    for t in &doc.sentence(chunk.sentence_index).tokens {
        log.record(&t.text);
    }
    log.record_text(&doc.sections[chunk.section_index].title);
}

/// Builds labeled mention pairs for one annotated document.
///
/// Positives pair each gold mention chunk with its gold type. Negatives are
/// capped at [`NEGATIVES_PER_POSITIVE`] per positive: the same chunk paired
/// with other types, plus sampled non-mention chunks paired with the gold
/// type.
pub fn build_mention_pairs(
    doc: &Document,
    types: &[FieldType],
    gold_mentions: &[(Span, String)],
    rng: &mut ChaCha8Rng,
    log: &mut TokenLog,
) -> Vec<TrainingPair> {
    for t in types {
        log.record_text(&t.name);
        for a in &t.aliases {
            log.record_text(a);
        }
    }

    // Chunk lookup by exact span.
    let mut by_span: std::collections::BTreeMap<Span, usize> = std::collections::BTreeMap::new();
    for (i, c) in doc.chunks.iter().enumerate() {
        by_span.entry(c.span).or_insert(i);
    }
    let gold_spans: BTreeSet<Span> = gold_mentions.iter().map(|(s, _)| *s).collect();
    let gold_set: BTreeSet<(Span, String)> = gold_mentions
        .iter()
        .map(|(s, n)| (*s, n.to_lowercase()))
        .collect();

    let non_mention_chunks: Vec<usize> = (0..doc.chunks.len())
        .filter(|&i| !gold_spans.contains(&doc.chunks[i].span))
        .collect();

    let mut pairs = Vec::new();
    let mut seen: BTreeSet<(usize, Span, bool)> = BTreeSet::new();

    for (span, type_name) in gold_mentions {
        let folded = type_name.to_lowercase();
        let Some(type_index) = types.iter().position(|t| t.folded_name() == folded) else {
            continue;
        };
        let Some(&chunk_index) = by_span.get(span) else {
            continue;
        };
        if !seen.insert((type_index, *span, true)) {
            continue;
        }
        let chunk = &doc.chunks[chunk_index];
        log_chunk_context(log, doc, chunk_index);
        let ctx = MentionContext::from_document(doc, chunk);
        pairs.push(TrainingPair {
            fv: featurize_mention(&types[type_index], chunk, &ctx),
            positive: true,
        });

        // Same chunk, other types.
        let mut others: Vec<usize> = (0..types.len()).filter(|&i| i != type_index).collect();
        others.shuffle(rng);
        let mut negatives = 0usize;
        for &oi in others.iter() {
            if negatives >= OTHER_TYPE_NEGATIVES {
                break;
            }
            if gold_set.contains(&(*span, types[oi].folded_name())) {
                continue;
            }
            if !seen.insert((oi, *span, false)) {
                continue;
            }
            pairs.push(TrainingPair {
                fv: featurize_mention(&types[oi], chunk, &ctx),
                positive: false,
            });
            negatives += 1;
        }

        // Gold type, sampled non-mention chunks.
        let mut sampled = 0usize;
        let mut attempts = 0usize;
        while sampled < NEGATIVES_PER_POSITIVE - negatives
            && attempts < 50
            && !non_mention_chunks.is_empty()
        {
            attempts += 1;
            let pick = non_mention_chunks[rng.random_range(0..non_mention_chunks.len())];
            let c = &doc.chunks[pick];
            if !seen.insert((type_index, c.span, false)) {
                continue;
            }
            log_chunk_context(log, doc, pick);
            let cctx = MentionContext::from_document(doc, c);
            pairs.push(TrainingPair {
                fv: featurize_mention(&types[type_index], c, &cctx),
                positive: false,
            });
            sampled += 1;
        }
    }
    pairs
}

/// Builds labeled property pairs for one annotated document. Positives are
/// all chunks lying inside any gold property span; negatives are sampled
/// chunks that overlap no gold span.
pub fn build_property_pairs(
    doc: &Document,
    gold_spans: &[Span],
    rng: &mut ChaCha8Rng,
    log: &mut TokenLog,
) -> Vec<TrainingPair> {
    let phrases = property_phrase_tokens();
    let mut pairs = Vec::new();
    let mut positive_indices: Vec<usize> = Vec::new();
    let mut negative_pool: Vec<usize> = Vec::new();
    for (i, c) in doc.chunks.iter().enumerate() {
        if gold_spans.iter().any(|g| c.span.within(g)) {
            positive_indices.push(i);
        } else if !gold_spans.iter().any(|g| c.span.overlaps(g)) {
            negative_pool.push(i);
        }
    }

    for &i in &positive_indices {
        let chunk = &doc.chunks[i];
        log_chunk_context(log, doc, i);
        let ctx = MentionContext::from_document(doc, chunk);
        pairs.push(TrainingPair {
            fv: featurize_property(chunk, &ctx, doc.sentence_text(chunk.sentence_index), &phrases),
            positive: true,
        });
    }

    let wanted = positive_indices.len() * NEGATIVES_PER_POSITIVE;
    let mut pool = negative_pool.clone();
    pool.shuffle(rng);
    for &i in pool.iter().take(wanted) {
        let chunk = &doc.chunks[i];
        log_chunk_context(log, doc, i);
        let ctx = MentionContext::from_document(doc, chunk);
        pairs.push(TrainingPair {
            fv: featurize_property(chunk, &ctx, doc.sentence_text(chunk.sentence_index), &phrases),
            positive: false,
        });
    }
    pairs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::load_rfc_str;
    use rand::SeedableRng;

    fn doc() -> Document {
        Document::ingest(
            load_rfc_str(
                "3.1.  Header Format\n\n  Checksum:  16 bits\n\n    The Checksum field covers the header. The quick brown fox jumps over the lazy dog. Window values vary.\n",
                "t",
            )
            .unwrap(),
        )
    }

    fn gold(doc: &Document) -> Vec<(Span, String)> {
        let c = doc
            .chunks
            .iter()
            .find(|c| c.text() == "Checksum" && !c.is_anaphor)
            .unwrap();
        vec![(c.span, "Checksum".to_string())]
    }

    #[test]
    fn pairs_respect_negative_cap() {
        let d = doc();
        let types = vec![
            FieldType::named("Checksum"),
            FieldType::named("Window"),
            FieldType::named("Source Port"),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut log = TokenLog::new();
        let pairs = build_mention_pairs(&d, &types, &gold(&d), &mut rng, &mut log);
        let pos = pairs.iter().filter(|p| p.positive).count();
        let neg = pairs.len() - pos;
        assert_eq!(pos, 1);
        assert!(neg <= pos * NEGATIVES_PER_POSITIVE);
        assert!(neg >= 1);
    }

    #[test]
    fn pair_building_is_deterministic() {
        let d = doc();
        let types = vec![FieldType::named("Checksum"), FieldType::named("Window")];
        let g = gold(&d);
        let mut log_a = TokenLog::new();
        let mut rng_a = ChaCha8Rng::seed_from_u64(9);
        let a = build_mention_pairs(&d, &types, &g, &mut rng_a, &mut log_a);
        let mut log_b = TokenLog::new();
        let mut rng_b = ChaCha8Rng::seed_from_u64(9);
        let b = build_mention_pairs(&d, &types, &g, &mut rng_b, &mut log_b);
        assert_eq!(a, b);
        assert_eq!(log_a, log_b);
    }

    #[test]
    fn token_log_records_observed_text() {
        let d = doc();
        let types = vec![FieldType::named("Checksum"), FieldType::named("Window")];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut log = TokenLog::new();
        build_mention_pairs(&d, &types, &gold(&d), &mut rng, &mut log);
        assert!(log.contains("Checksum"));
        assert!(!log.contains("zz-never-seen"));
    }

    #[test]
    fn property_pairs_label_span_chunks_positive() {
        let d = doc();
        let span = d
            .chunks
            .iter()
            .find(|c| c.text() == "Checksum field covers")
            .map(|c| c.span)
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut log = TokenLog::new();
        let pairs = build_property_pairs(&d, &[span], &mut rng, &mut log);
        let pos = pairs.iter().filter(|p| p.positive).count();
        assert!(pos >= 1);
        let neg = pairs.len() - pos;
        assert!(neg <= pos * NEGATIVES_PER_POSITIVE);
    }
}
