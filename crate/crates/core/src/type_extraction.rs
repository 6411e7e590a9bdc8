//! Rule-based extraction of protocol entity types (header field symbols)
//! from RFC formatting conventions.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus::{RawDocument, Section, SectionKind};
use crate::error::EvalError;

/// A protocol header field symbol.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldType {
    pub name: String,
    pub size_bits: Option<u32>,
    /// 0-based position in the header, by first appearance.
    pub order: Option<usize>,
    /// Alternative surface forms: the raw heading surface and an initials
    /// acronym for multi-word names.
    pub aliases: Vec<String>,
    /// Index of the defining section, when extracted from a document.
    pub source_section: Option<usize>,
    /// Additional sections that also define or redefine this field.
    pub evidence_sections: Vec<usize>,
}

impl FieldType {
    pub fn named(name: &str) -> FieldType {
        FieldType {
            name: name.to_string(),
            size_bits: None,
            order: None,
            aliases: derive_aliases(name, name),
            source_section: None,
            evidence_sections: Vec::new(),
        }
    }

    pub fn with_layout(name: &str, size_bits: u32, order: usize) -> FieldType {
        FieldType {
            size_bits: Some(size_bits),
            order: Some(order),
            ..FieldType::named(name)
        }
    }

    /// Case-folded name used for uniqueness and matching.
    pub fn folded_name(&self) -> String {
        self.name.to_lowercase()
    }

    pub fn name_tokens(&self) -> Vec<String> {
        self.name.split_whitespace().map(str::to_string).collect()
    }
}

/// Initials acronym for a multi-word name: "Data Offset" -> "DO".
pub fn initials_acronym(name: &str) -> Option<String> {
    let words: Vec<&str> = name.split_whitespace().collect();
    if words.len() < 2 {
        return None;
    }
    Some(
        words
            .iter()
            .filter_map(|w| w.chars().next())
            .map(|c| c.to_ascii_uppercase())
            .collect(),
    )
}

fn derive_aliases(name: &str, raw_surface: &str) -> Vec<String> {
    let mut aliases = Vec::new();
    if raw_surface != name {
        aliases.push(raw_surface.to_string());
    }
    if let Some(acr) = initials_acronym(name) {
        if !aliases.contains(&acr) {
            aliases.push(acr);
        }
    }
    aliases
}

/// Trim, collapse internal whitespace, strip trailing punctuation.
pub fn canonicalize_name(raw: &str) -> String {
    let collapsed: String = raw.split_whitespace().collect::<Vec<_>>().join(" ");
    collapsed
        .trim_end_matches(|c: char| !c.is_alphanumeric() && c != ')')
        .trim()
        .to_string()
}

static SIZE_SPEC: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(.*?):\s*(\d+)\s*(bits?|bytes?)\b").expect("size regex"));
static NAME_FIELD_HEADING: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(.*\S)\s+[Ff]ield$").expect("field-heading regex"));
static DEF_LIST_LINE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^\s{2,}([A-Za-z][A-Za-z0-9 ()/-]*):\s*(\d+)\s*(bits?|bytes?)\b").expect("def regex")
});

fn parse_size(value: &str, unit: &str) -> Option<u32> {
    let n: u32 = value.parse().ok()?;
    if n == 0 {
        return None;
    }
    match unit {
        "bit" | "bits" => Some(n),
        "byte" | "bytes" => Some(n * 8),
        _ => None,
    }
}

/// Extracts one [`FieldType`] per field-definition heading, ordered by
/// document position. Matching rules, in priority order:
///   1. a heading `Name: k bits|bytes`;
///   2. a heading `Name Field`;
///   3. an indented definition-list line `Name: k bits` inside a section
///      whose title marks a header-format description.
pub fn extract_entity_types(doc: &RawDocument, sections: &[Section]) -> Vec<FieldType> {
    let mut out: Vec<FieldType> = Vec::new();
    let mut by_folded: BTreeMap<String, usize> = BTreeMap::new();

    let push = |name: String,
                    raw_surface: &str,
                    size_bits: Option<u32>,
                    section: usize,
                    out: &mut Vec<FieldType>,
                    by_folded: &mut BTreeMap<String, usize>| {
        if name.is_empty() {
            return;
        }
        let folded = name.to_lowercase();
        if let Some(&idx) = by_folded.get(&folded) {
            // Keep the first definition; later ones become extra evidence.
            if !out[idx].evidence_sections.contains(&section) {
                out[idx].evidence_sections.push(section);
            }
            if out[idx].size_bits.is_none() {
                out[idx].size_bits = size_bits;
            }
            return;
        }
        let order = out.len();
        by_folded.insert(folded, order);
        out.push(FieldType {
            name: name.clone(),
            size_bits,
            order: Some(order),
            aliases: derive_aliases(&name, raw_surface),
            source_section: Some(section),
            evidence_sections: Vec::new(),
        });
    };

    for (si, section) in sections.iter().enumerate() {
        // Rules 1 and 2 operate on section titles.
        if section.kind == SectionKind::FieldDef {
            if let Some(caps) = SIZE_SPEC.captures(&section.title) {
                let raw = caps.get(1).expect("name").as_str();
                let name = canonicalize_name(raw);
                let size = parse_size(
                    caps.get(2).expect("num").as_str(),
                    caps.get(3).expect("unit").as_str(),
                );
                push(name, raw.trim(), size, si, &mut out, &mut by_folded);
                continue;
            }
        }
        if let Some(caps) = NAME_FIELD_HEADING.captures(&section.title) {
            let raw = caps.get(1).expect("name").as_str();
            let name = canonicalize_name(raw);
            push(name, raw.trim(), None, si, &mut out, &mut by_folded);
            continue;
        }
        // Rule 3: indented definition-list lines in header-format section
        // bodies that were not promoted to their own sections.
        let title_lower = section.title.to_lowercase();
        if title_lower.contains("header") || title_lower.contains("format") {
            let body = &doc.text[section.span.start..section.span.end];
            for line in body.lines().skip(1) {
                if let Some(caps) = DEF_LIST_LINE.captures(line) {
                    let raw = caps.get(1).expect("name").as_str();
                    let name = canonicalize_name(raw);
                    let size = parse_size(
                        caps.get(2).expect("num").as_str(),
                        caps.get(3).expect("unit").as_str(),
                    );
                    push(name, raw.trim(), size, si, &mut out, &mut by_folded);
                }
            }
        }
    }
    out
}

/// Fraction of gold names recovered, case-folded: |matches| / |gold|.
pub fn type_extraction_accuracy(
    predicted: &[FieldType],
    gold: &[FieldType],
) -> Result<f64, EvalError> {
    if gold.is_empty() {
        return Err(EvalError::UndefinedMetric(
            "type extraction accuracy over empty gold set",
        ));
    }
    let predicted_names: std::collections::BTreeSet<String> =
        predicted.iter().map(|t| t.folded_name()).collect();
    let hits = gold
        .iter()
        .filter(|g| predicted_names.contains(&g.folded_name()))
        .count();
    Ok(hits as f64 / gold.len() as f64)
}

/// Writes the line-delimited types file: `name<TAB>size_bits<TAB>order`,
/// with `-` for missing values.
pub fn write_types_file(path: &Path, types: &[FieldType]) -> std::io::Result<()> {
    let mut f = std::fs::File::create(path)?;
    for t in types {
        let size = t
            .size_bits
            .map(|s| s.to_string())
            .unwrap_or_else(|| "-".to_string());
        let order = t
            .order
            .map(|o| o.to_string())
            .unwrap_or_else(|| "-".to_string());
        writeln!(f, "{}\t{}\t{}", t.name, size, order)?;
    }
    Ok(())
}

/// Reads a types file written by [`write_types_file`] (or by hand).
pub fn read_types_file(path: &Path) -> std::io::Result<Vec<FieldType>> {
    let content = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for line in content.lines() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split('\t');
        let name = parts.next().unwrap_or("").trim();
        if name.is_empty() {
            continue;
        }
        let size = parts
            .next()
            .map(str::trim)
            .filter(|s| *s != "-")
            .and_then(|s| s.parse::<u32>().ok());
        let order = parts
            .next()
            .map(str::trim)
            .filter(|s| *s != "-")
            .and_then(|s| s.parse::<usize>().ok());
        let mut t = FieldType::named(name);
        t.size_bits = size;
        t.order = order;
        out.push(t);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{load_rfc_str, segment_sections};

    fn extract(text: &str) -> Vec<FieldType> {
        let doc = load_rfc_str(text, "test").expect("load");
        let sections = segment_sections(&doc);
        extract_entity_types(&doc, &sections)
    }

    #[test]
    fn extracts_bits_heading() {
        let types = extract("5.1.  Generic Header\n\n   Data Offset: 8 bits\n      The offset from the start of the packet.\n");
        assert_eq!(types.len(), 1);
        assert_eq!(types[0].name, "Data Offset");
        assert_eq!(types[0].size_bits, Some(8));
        assert_eq!(types[0].order, Some(0));
        assert!(types[0].aliases.contains(&"DO".to_string()));
    }

    #[test]
    fn converts_bytes_to_bits() {
        let types = extract("2.  Header\n\n  Checksum: 2 bytes\n    The checksum over the header.\n");
        assert_eq!(types[0].name, "Checksum");
        assert_eq!(types[0].size_bits, Some(16));
    }

    #[test]
    fn name_field_heading_rule() {
        let types =
            extract("2.  Header\n\n  Urgent Pointer Field\n    Communicates the urgent pointer.\n");
        assert_eq!(types.len(), 1);
        assert_eq!(types[0].name, "Urgent Pointer");
        assert_eq!(types[0].size_bits, None);
    }

    #[test]
    fn duplicate_names_keep_first_and_gather_evidence() {
        let types = extract(
            "1.  Header Format\n\n  Checksum: 16 bits\n    First definition.\n\n2.  Details\n\n  Checksum: 16 bits\n    Repeated definition.\n",
        );
        assert_eq!(types.len(), 1);
        assert_eq!(types[0].evidence_sections.len(), 1);
    }

    #[test]
    fn no_matches_returns_empty() {
        let types = extract("1.  Introduction\n\n  Nothing about fields here.\n");
        assert!(types.is_empty());
    }

    #[test]
    fn extraction_is_deterministic_and_ordered() {
        let text = "3.1.  Header Format\n\n  Source Port:  16 bits\n\n    The source port number.\n\n  Destination Port:  16 bits\n\n    The destination port number.\n";
        let a = extract(text);
        let b = extract(text);
        assert_eq!(a, b);
        assert_eq!(a[0].name, "Source Port");
        assert_eq!(a[1].name, "Destination Port");
        assert_eq!(a[0].order, Some(0));
        assert_eq!(a[1].order, Some(1));
    }

    #[test]
    fn accuracy_ratio() {
        let gold: Vec<FieldType> = (0..10)
            .map(|i| FieldType::named(&format!("Field {i}")))
            .collect();
        let predicted: Vec<FieldType> = (0..8)
            .map(|i| FieldType::named(&format!("field {i}")))
            .collect();
        assert_eq!(type_extraction_accuracy(&predicted, &gold).unwrap(), 0.8);
        assert_eq!(type_extraction_accuracy(&gold, &gold).unwrap(), 1.0);
        assert!(type_extraction_accuracy(&gold, &[]).is_err());
    }

    #[test]
    fn source_section_title_contains_name() {
        let text = "3.1.  Header Format\n\n  Sequence Number:  32 bits\n\n    The sequence number of the first data octet.\n";
        let doc = load_rfc_str(text, "t").unwrap();
        let sections = segment_sections(&doc);
        let types = extract_entity_types(&doc, &sections);
        for t in &types {
            let sec = t.source_section.expect("source");
            assert!(sections[sec].title.contains(&t.name));
        }
    }

    #[test]
    fn types_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("types.tsv");
        let types = vec![
            FieldType::with_layout("Source Port", 16, 0),
            FieldType::named("Options"),
        ];
        write_types_file(&path, &types).unwrap();
        let back = read_types_file(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].name, "Source Port");
        assert_eq!(back[0].size_bits, Some(16));
        assert_eq!(back[0].order, Some(0));
        assert_eq!(back[1].size_bits, None);
    }
}
