//! Binary feature catalogs for the zero-shot pairwise classifiers.
//!
//! Two catalogs exist: one for (entity type, chunk) mention pairs and one
//! for (chunk, property catalog) pairs. Feature names are protocol-agnostic
//! by construction; nothing here encodes a specific protocol's vocabulary.

use serde::{Deserialize, Serialize};

use crate::corpus::{tokenize, Chunk, Document, Token};
use crate::grammar::PropertyKind;
use crate::type_extraction::FieldType;

/// A fixed-length binary feature vector tied to a catalog version.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub bits: Vec<bool>,
    pub catalog_version: u32,
}

impl FeatureVector {
    pub fn active(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, b)| if *b { Some(i) } else { None })
    }
}

/// A versioned, named feature catalog.
pub struct Catalog {
    pub version: u32,
    pub names: &'static [&'static str],
}

impl Catalog {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn by_version(version: u32) -> Option<&'static Catalog> {
        match version {
            v if v == MENTION_CATALOG.version => Some(&MENTION_CATALOG),
            v if v == PROPERTY_CATALOG.version => Some(&PROPERTY_CATALOG),
            _ => None,
        }
    }
}

pub const MENTION_CATALOG: Catalog = Catalog {
    version: 1,
    names: &[
        "exact_match",
        "chunk_in_type",
        "type_in_chunk",
        "jaccard_ge_half",
        "jaccard_ge_threequarters",
        "jaccard_full",
        "edit_similarity_high",
        "acronym_match",
        "both_title_case",
        "followed_by_field_token",
        "context_keyword",
        "token_len_match",
        "has_digit",
        "anaphor_in_own_section",
        "type_in_section_title",
    ],
};

pub const PROPERTY_CATALOG: Catalog = Catalog {
    version: 2,
    names: &[
        "phrase_exact",
        "phrase_in_chunk",
        "chunk_in_phrase",
        "shares_phrase_token",
        "phrase_jaccard_half",
        "sentence_has_phrase",
        "context_phrase_token",
        "has_digit",
        "is_anaphor",
    ],
};

/// Context words whose presence near a chunk hints at a field mention.
const CONTEXT_KEYWORDS: [&str; 6] = ["field", "bits", "header", "value", "set", "contains"];

/// Window, in tokens, examined on each side of a chunk.
pub const CONTEXT_WINDOW: usize = 5;

/// Everything [`featurize_mention`] needs to know about a chunk's
/// surroundings, precomputed from the document.
pub struct MentionContext<'a> {
    pub sentence_tokens: &'a [Token],
    pub token_start: usize,
    pub token_len: usize,
    pub section_title: &'a str,
    pub is_anaphor: bool,
}

impl<'a> MentionContext<'a> {
    pub fn from_document(doc: &'a Document, chunk: &Chunk) -> MentionContext<'a> {
        MentionContext {
            sentence_tokens: &doc.sentence(chunk.sentence_index).tokens,
            token_start: chunk.token_start,
            token_len: chunk.tokens.len(),
            section_title: &doc.sections[chunk.section_index].title,
            is_anaphor: chunk.is_anaphor,
        }
    }

    fn window(&self) -> impl Iterator<Item = &Token> {
        let before_start = self.token_start.saturating_sub(CONTEXT_WINDOW);
        let after_end = (self.token_start + self.token_len + CONTEXT_WINDOW)
            .min(self.sentence_tokens.len());
        self.sentence_tokens[before_start..self.token_start]
            .iter()
            .chain(self.sentence_tokens[self.token_start + self.token_len..after_end].iter())
    }

    fn next_token(&self) -> Option<&Token> {
        self.sentence_tokens.get(self.token_start + self.token_len)
    }
}

fn folded(s: &str) -> String {
    s.to_lowercase()
}

fn jaccard(a: &[String], b: &[String]) -> f64 {
    let sa: std::collections::BTreeSet<String> = a.iter().map(|t| folded(t)).collect();
    let sb: std::collections::BTreeSet<String> = b.iter().map(|t| folded(t)).collect();
    if sa.is_empty() && sb.is_empty() {
        return 0.0;
    }
    let inter = sa.intersection(&sb).count();
    let union = sa.union(&sb).count();
    inter as f64 / union as f64
}

/// Classic dynamic-programming edit distance; gated by callers so it only
/// runs when the similarity threshold is reachable.
fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let cost = if ca == cb { 0 } else { 1 };
            cur[j + 1] = (prev[j + 1] + 1).min(cur[j] + 1).min(prev[j] + cost);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn edit_similarity_at_least(a: &str, b: &str, threshold: f64) -> bool {
    let max_len = a.chars().count().max(b.chars().count());
    if max_len == 0 {
        return false;
    }
    let min_len = a.chars().count().min(b.chars().count());
    // Distance is at least the length difference; skip the DP when that
    // already pushes similarity below the threshold.
    let diff = max_len - min_len;
    if 1.0 - (diff as f64 / max_len as f64) < threshold {
        return false;
    }
    let dist = levenshtein(&folded(a), &folded(b));
    1.0 - (dist as f64 / max_len as f64) >= threshold
}

fn title_contains_type(title: &str, entity: &FieldType) -> bool {
    let title = folded(title);
    if title.contains(&entity.folded_name()) {
        return true;
    }
    entity
        .aliases
        .iter()
        .any(|a| a.len() > 1 && title.contains(&folded(a)))
}

/// Builds the mention feature vector for an (entity type, chunk) pair.
pub fn featurize_mention(
    entity: &FieldType,
    chunk: &Chunk,
    ctx: &MentionContext<'_>,
) -> FeatureVector {
    let mut bits = vec![false; MENTION_CATALOG.len()];
    let chunk_text = chunk.tokens.join(" ");
    let chunk_folded = folded(&chunk_text);
    let name_folded = entity.folded_name();

    // Acronym aliases are scored by the dedicated acronym feature, not as
    // exact matches.
    let acronym = crate::type_extraction::initials_acronym(&entity.name);
    let exact = chunk_folded == name_folded
        || entity
            .aliases
            .iter()
            .filter(|a| Some(*a) != acronym.as_ref())
            .any(|a| folded(a) == chunk_folded);
    bits[0] = exact;
    bits[1] = !exact && name_folded.contains(&chunk_folded);
    bits[2] = !exact && chunk_folded.contains(&name_folded);

    let name_tokens = entity.name_tokens();
    let j = jaccard(&chunk.tokens, &name_tokens);
    bits[3] = j >= 0.5;
    bits[4] = j >= 0.75;
    bits[5] = (j - 1.0).abs() < f64::EPSILON;
    bits[6] = edit_similarity_at_least(&chunk_folded, &name_folded, 0.8);

    if chunk.tokens.len() == 1 {
        if let Some(acr) = crate::type_extraction::initials_acronym(&entity.name) {
            bits[7] = chunk.tokens[0] == acr;
        }
    }

    let title_case = |t: &str| t.chars().next().is_some_and(|c| c.is_uppercase());
    bits[8] = !chunk.tokens.is_empty()
        && chunk.tokens.iter().all(|t| title_case(t))
        && !name_tokens.is_empty()
        && name_tokens.iter().all(|t| title_case(t));

    bits[9] = ctx
        .next_token()
        .is_some_and(|t| folded(&t.text) == "field");
    bits[10] = ctx
        .window()
        .any(|t| CONTEXT_KEYWORDS.contains(&folded(&t.text).as_str()));
    bits[11] = chunk.tokens.len() == name_tokens.len();
    bits[12] = chunk_text.chars().any(|c| c.is_ascii_digit());
    bits[13] = ctx.is_anaphor && title_contains_type(ctx.section_title, entity);
    bits[14] = title_contains_type(ctx.section_title, entity);

    FeatureVector {
        bits,
        catalog_version: MENTION_CATALOG.version,
    }
}

/// Tokens of every kind's key phrases, normalized (lowercase, apostrophes
/// stripped), pooled across the whole property catalog.
pub fn property_phrase_tokens() -> Vec<Vec<String>> {
    let mut phrases = Vec::new();
    for kind in PropertyKind::all() {
        for phrase in kind.key_phrases() {
            phrases.push(normalize_match_tokens(phrase));
        }
    }
    phrases
}

/// Lowercases, strips apostrophes, and tokenizes for key-phrase matching,
/// dropping punctuation tokens. "one's complement" matches "ones complement".
pub fn normalize_match_tokens(text: &str) -> Vec<String> {
    tokenize(&text.replace('\'', "").to_lowercase(), 0)
        .into_iter()
        .filter(|t| !t.is_punctuation())
        .map(|t| t.text)
        .collect()
}

/// True when `needle` occurs as a contiguous subsequence of `haystack`.
pub fn contains_subsequence(haystack: &[String], needle: &[String]) -> bool {
    if needle.is_empty() || needle.len() > haystack.len() {
        return false;
    }
    haystack.windows(needle.len()).any(|w| w == needle)
}

/// Builds the property feature vector for a (chunk, property catalog) pair.
pub fn featurize_property(
    chunk: &Chunk,
    ctx: &MentionContext<'_>,
    sentence_text: &str,
    phrases: &[Vec<String>],
) -> FeatureVector {
    let mut bits = vec![false; PROPERTY_CATALOG.len()];
    let chunk_tokens = normalize_match_tokens(&chunk.tokens.join(" "));

    let vocab: std::collections::BTreeSet<&String> = phrases
        .iter()
        .flatten()
        .filter(|t| !crate::corpus::is_stopword(t))
        .collect();

    for phrase in phrases {
        if !bits[0] && chunk_tokens == *phrase {
            bits[0] = true;
        }
        if !bits[1] && contains_subsequence(&chunk_tokens, phrase) {
            bits[1] = true;
        }
        if !bits[2] && contains_subsequence(phrase, &chunk_tokens) {
            bits[2] = true;
        }
        if !bits[4] && jaccard(&chunk_tokens, phrase) >= 0.5 {
            bits[4] = true;
        }
    }
    bits[3] = chunk_tokens.iter().any(|t| vocab.contains(t));

    let sentence_tokens = normalize_match_tokens(sentence_text);
    bits[5] = phrases
        .iter()
        .any(|p| contains_subsequence(&sentence_tokens, p));
    bits[6] = ctx.window().any(|t| {
        let norm = t.text.replace('\'', "").to_lowercase();
        vocab.contains(&norm)
    });
    bits[7] = chunk_tokens.iter().any(|t| t.chars().any(|c| c.is_ascii_digit()));
    bits[8] = ctx.is_anaphor;

    FeatureVector {
        bits,
        catalog_version: PROPERTY_CATALOG.version,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{load_rfc_str, Document};

    fn doc_with(text: &str) -> Document {
        Document::ingest(load_rfc_str(text, "t").unwrap())
    }

    fn chunk_named<'d>(doc: &'d Document, text: &str) -> &'d Chunk {
        doc.chunks
            .iter()
            .find(|c| c.text() == text)
            .unwrap_or_else(|| panic!("chunk {text:?} not found"))
    }

    #[test]
    fn exact_match_surface() {
        let doc = doc_with("The Checksum field is computed.\n");
        let entity = FieldType::named("Checksum");
        let chunk = chunk_named(&doc, "Checksum");
        let ctx = MentionContext::from_document(&doc, chunk);
        let fv = featurize_mention(&entity, chunk, &ctx);
        assert!(fv.bits[0], "exact");
        assert!(fv.bits[5], "jaccard 1.0");
        assert!(fv.bits[3] && fv.bits[4], "jaccard thresholds");
        assert!(fv.bits[11], "token length");
        assert!(fv.bits[9], "followed by 'field'");
        assert!(!fv.bits[12], "no digit");
    }

    #[test]
    fn acronym_fires_without_exact() {
        let doc = doc_with("The DO value is set.\n");
        let entity = FieldType::named("Data Offset");
        let chunk = chunk_named(&doc, "DO");
        let ctx = MentionContext::from_document(&doc, chunk);
        let fv = featurize_mention(&entity, chunk, &ctx);
        assert!(fv.bits[7], "acronym");
        assert!(!fv.bits[0], "not exact by name");
    }

    #[test]
    fn anaphor_in_own_section() {
        let doc = doc_with(
            "5.1.  Generic Header\n\n   Data Offset: 8 bits\n      The offset value. It must be ignored by the receiver.\n",
        );
        let entity = FieldType::named("Data Offset");
        let chunk = doc
            .chunks
            .iter()
            .find(|c| c.is_anaphor && c.text() == "It")
            .expect("anaphor");
        let ctx = MentionContext::from_document(&doc, chunk);
        let fv = featurize_mention(&entity, chunk, &ctx);
        assert!(fv.bits[13], "anaphor in own section");
        assert!(fv.bits[14], "type in section title");
        assert!(!fv.bits[0]);
    }

    #[test]
    fn unrelated_chunk_has_no_surface_features() {
        let doc = doc_with("The quick brown fox jumps.\n");
        let entity = FieldType::named("Sequence Number");
        let chunk = chunk_named(&doc, "quick brown fox");
        let ctx = MentionContext::from_document(&doc, chunk);
        let fv = featurize_mention(&entity, chunk, &ctx);
        for i in [0usize, 1, 2, 3, 4, 5, 6, 7, 13, 14] {
            assert!(!fv.bits[i], "feature {i} should be off");
        }
    }

    #[test]
    fn catalog_names_are_protocol_agnostic() {
        for catalog in [&MENTION_CATALOG, &PROPERTY_CATALOG] {
            for name in catalog.names {
                for proto in ["tcp", "dccp", "sctp", "gre", "ipv6"] {
                    assert!(!name.contains(proto), "{name} mentions {proto}");
                }
                assert_ne!(*name, "ip");
            }
        }
    }

    #[test]
    fn property_features_key_on_phrases() {
        let doc = doc_with("The offset from the start of the header in 32-bit words.\n");
        let phrases = property_phrase_tokens();
        let chunk = chunk_named(&doc, "header");
        let ctx = MentionContext::from_document(&doc, chunk);
        let sentence = doc.sentence_text(chunk.sentence_index);
        let fv = featurize_property(chunk, &ctx, sentence, &phrases);
        assert!(fv.bits[0], "exact phrase");
        assert!(fv.bits[5], "sentence has phrase");

        let junk_doc = doc_with("Zebras gallop quietly across town.\n");
        let junk = chunk_named(&junk_doc, "Zebras gallop");
        let jctx = MentionContext::from_document(&junk_doc, junk);
        let jfv = featurize_property(
            junk,
            &jctx,
            junk_doc.sentence_text(junk.sentence_index),
            &phrases,
        );
        assert!(!jfv.bits[0] && !jfv.bits[1] && !jfv.bits[3] && !jfv.bits[5]);
    }

    #[test]
    fn apostrophes_normalize_for_phrase_matching() {
        let tokens = normalize_match_tokens("the one's complement sum");
        assert!(contains_subsequence(
            &tokens,
            &normalize_match_tokens("ones complement")
        ));
    }

    #[test]
    fn edit_similarity_gate() {
        assert!(edit_similarity_at_least("checksum", "checksums", 0.8));
        assert!(!edit_similarity_at_least("a", "completely different", 0.8));
    }
}
