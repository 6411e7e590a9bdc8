//! Regenerates the committed corpus fixtures:
//!
//!   data/annotations/<protocol>.tsv  gold annotations located in the text
//!   data/grammars/tcp_manual.json    hand-written reference grammars
//!   data/grammars/dccp_manual.json
//!
//! The annotation content (which surfaces mention which field, which
//! sentences express which property) is specified by hand in the tables
//! below; this tool only resolves those decisions to byte offsets so the
//! files stay consistent with the tokenizer. Run from the workspace root:
//!
//!   cargo run -p rfcfuzz-core --example make_fixtures

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rfcfuzz_core::corpus::{load_rfc, Document, SectionKind, Span};
use rfcfuzz_core::eval::{write_annotations, AnnotationSet, GoldProperty};
use rfcfuzz_core::grammar::{serialize_grammar, PropertyKind};
use rfcfuzz_core::simnet::{reference_grammar, Protocol};
use rfcfuzz_core::type_extraction::FieldType;

struct TypeSpec {
    name: &'static str,
    size_bits: u32,
    /// Additional surface forms annotated as mentions of this type.
    surfaces: &'static [&'static str],
}

struct PropSpec {
    kind: PropertyKind,
    argument: &'static str,
    /// Each locator uniquely identifies one sentence; its whole span is的
    /// annotated.
    locators: &'static [&'static str],
}

struct DocSpec {
    protocol: &'static str,
    types: &'static [TypeSpec],
    properties: &'static [PropSpec],
}

fn t(name: &'static str, size_bits: u32) -> TypeSpec {
    TypeSpec {
        name,
        size_bits,
        surfaces: &[],
    }
}

fn corpus_spec() -> Vec<DocSpec> {
    use PropertyKind::*;
    vec![
        DocSpec {
            protocol: "tcp",
            types: &[
                t("Source Port", 16),
                t("Destination Port", 16),
                t("Sequence Number", 32),
                t("Acknowledgment Number", 32),
                t("Data Offset", 4),
                t("Reserved", 6),
                t("Control Bits", 6),
                t("Window", 16),
                t("Checksum", 16),
                t("Urgent Pointer", 16),
            ],
            properties: &[
                PropSpec {
                    kind: Port,
                    argument: "Source Port",
                    locators: &["The source port number identifies"],
                },
                PropSpec {
                    kind: Port,
                    argument: "Destination Port",
                    locators: &["The destination port number identifies"],
                },
                PropSpec {
                    kind: SequenceNumber,
                    argument: "Sequence Number",
                    locators: &["The sequence number of the first data octet"],
                },
                PropSpec {
                    kind: AcknowledgementNumber,
                    argument: "Acknowledgment Number",
                    locators: &["acknowledgment mechanism is cumulative"],
                },
                PropSpec {
                    kind: HeaderLength,
                    argument: "Data Offset",
                    locators: &["The number of 32 bit words in the TCP Header"],
                },
                PropSpec {
                    kind: WindowFlowControl,
                    argument: "Window",
                    locators: &[
                        "which the sender of this\n    segment is willing to accept",
                        "provides the means for\n    flow control",
                    ],
                },
                PropSpec {
                    kind: Checksum,
                    argument: "Checksum",
                    locators: &[
                        "complement sum of all 16 bit words in the header and text",
                        "the checksum field itself is replaced with zeros",
                    ],
                },
            ],
        },
        DocSpec {
            protocol: "dccp",
            types: &[
                t("Source Port", 16),
                t("Dest Port", 16),
                t("Data Offset", 8),
                t("CCVal", 4),
                TypeSpec {
                    name: "Checksum Coverage (CsCov)",
                    size_bits: 4,
                    surfaces: &["Checksum Coverage", "CsCov"],
                },
                t("Checksum", 16),
                TypeSpec {
                    name: "Reserved (Res)",
                    size_bits: 3,
                    surfaces: &[],
                },
                t("Type", 4),
                TypeSpec {
                    name: "Extended Sequence Numbers (X)",
                    size_bits: 1,
                    surfaces: &["Extended Sequence Numbers", "X"],
                },
                t("Reserved", 8),
                TypeSpec {
                    name: "Sequence Number",
                    size_bits: 48,
                    surfaces: &["SN"],
                },
                t("Service Code", 32),
                t("Acknowledgement Number", 48),
            ],
            properties: &[
                PropSpec {
                    kind: Port,
                    argument: "Source Port",
                    locators: &["port number used by the sender"],
                },
                PropSpec {
                    kind: Port,
                    argument: "Dest Port",
                    locators: &["port number used by the receiving"],
                },
                PropSpec {
                    kind: HeaderLength,
                    argument: "Data Offset",
                    locators: &["The offset from the start of the packet's DCCP header"],
                },
                PropSpec {
                    kind: Checksum,
                    argument: "Checksum",
                    locators: &[
                        "The Internet checksum of the packet's DCCP header",
                        "verifies the Checksum over the\n  parts of the packet",
                    ],
                },
                PropSpec {
                    kind: PacketType,
                    argument: "Type",
                    locators: &["specifies the type of the packet"],
                },
                PropSpec {
                    kind: SequenceNumber,
                    argument: "Sequence Number",
                    locators: &["increases by\n    one (modulo"],
                },
                PropSpec {
                    kind: AcknowledgementNumber,
                    argument: "Acknowledgement Number",
                    locators: &["generally equals the greatest sequence"],
                },
            ],
        },
        DocSpec {
            protocol: "ip",
            types: &[
                t("Version", 4),
                TypeSpec {
                    name: "IHL",
                    size_bits: 4,
                    surfaces: &["Internet Header Length"],
                },
                t("Type of Service", 8),
                t("Total Length", 16),
                t("Identification", 16),
                t("Flags", 3),
                t("Fragment Offset", 13),
                t("Time to Live", 8),
                t("Protocol", 8),
                t("Header Checksum", 16),
                t("Source Address", 32),
                t("Destination Address", 32),
            ],
            properties: &[
                PropSpec {
                    kind: HeaderLength,
                    argument: "IHL",
                    locators: &["is the length of the header in 32 bit"],
                },
                PropSpec {
                    kind: PayloadLength,
                    argument: "Total Length",
                    locators: &["the length of the datagram, measured in octets"],
                },
                PropSpec {
                    kind: Multiple,
                    argument: "Fragment Offset",
                    locators: &["measured in units of 8 octets"],
                },
                PropSpec {
                    kind: Checksum,
                    argument: "Header Checksum",
                    locators: &[
                        "A checksum on the header only",
                        "checksum algorithm is the 16 bit one's complement",
                    ],
                },
            ],
        },
        DocSpec {
            protocol: "ipv6",
            types: &[
                t("Version", 4),
                t("Traffic Class", 8),
                t("Flow Label", 20),
                t("Payload Length", 16),
                t("Next Header", 8),
                t("Hop Limit", 8),
                t("Source Address", 128),
                t("Destination Address", 128),
            ],
            properties: &[PropSpec {
                kind: PayloadLength,
                argument: "Payload Length",
                locators: &[
                    "is the length of the rest of the packet",
                    "counted in\n    the Payload Length",
                ],
            }],
        },
        DocSpec {
            protocol: "gre",
            types: &[
                TypeSpec {
                    name: "Checksum Present (C)",
                    size_bits: 1,
                    surfaces: &["Checksum Present"],
                },
                t("Reserved0", 12),
                TypeSpec {
                    name: "Version Number (Ver)",
                    size_bits: 3,
                    surfaces: &["Version Number"],
                },
                t("Protocol Type", 16),
                t("Checksum", 16),
                t("Reserved1", 16),
            ],
            properties: &[
                PropSpec {
                    kind: Checksum,
                    argument: "Checksum",
                    locators: &[
                        "contains the IP (one's complement) checksum sum",
                        "verifies the Checksum over the GRE header",
                    ],
                },
                PropSpec {
                    kind: PacketType,
                    argument: "Protocol Type",
                    locators: &["The Protocol Type field contains the protocol type"],
                },
            ],
        },
        DocSpec {
            protocol: "sctp",
            types: &[
                t("Source Port Number", 16),
                t("Destination Port Number", 16),
                t("Verification Tag", 32),
                t("Checksum", 32),
                t("Chunk Type", 8),
                t("Chunk Flags", 8),
                t("Chunk Length", 16),
            ],
            properties: &[
                PropSpec {
                    kind: Port,
                    argument: "Source Port Number",
                    locators: &["supports the multiplexing of associations"],
                },
                PropSpec {
                    kind: Port,
                    argument: "Destination Port Number",
                    locators: &["This is the SCTP port number to which"],
                },
                PropSpec {
                    kind: Checksum,
                    argument: "Checksum",
                    locators: &[
                        "contains the checksum of this SCTP packet",
                        "While computing the checksum",
                        "the Checksum gives protection against data corruption",
                    ],
                },
            ],
        },
    ]
}

/// Every non-anaphor chunk whose folded text equals one of a type's
/// surfaces, filtered to maximal spans, plus anaphor chunks inside
/// field-definition sections.
fn locate_mentions(doc: &Document, types: &[(FieldType, Vec<String>)]) -> Vec<(Span, String)> {
    let mut candidates: Vec<(Span, String)> = Vec::new();
    for chunk in &doc.chunks {
        if chunk.is_anaphor {
            continue;
        }
        let folded = chunk.text().to_lowercase();
        for (ty, surfaces) in types {
            if surfaces.iter().any(|s| *s == folded) {
                candidates.push((chunk.span, ty.name.clone()));
                break;
            }
        }
    }
    // Maximal-span filter: drop matches contained in a longer match.
    let spans: Vec<Span> = candidates.iter().map(|(s, _)| *s).collect();
    let mut kept: Vec<(Span, String)> = candidates
        .into_iter()
        .filter(|(span, _)| {
            !spans
                .iter()
                .any(|other| *other != *span && span.within(other))
        })
        .collect();

    // Anaphora inside field-definition sections refer to the section's
    // field.
    for chunk in doc.chunks.iter().filter(|c| c.is_anaphor) {
        let section = &doc.sections[chunk.section_index];
        if section.kind != SectionKind::FieldDef {
            continue;
        }
        let title = section.title.to_lowercase();
        let mut best: Option<(usize, &FieldType)> = None;
        for (ty, _) in types {
            let name = ty.folded_name();
            if title.contains(&name) && best.map(|(l, _)| name.len() > l).unwrap_or(true) {
                best = Some((name.len(), ty));
            }
        }
        if let Some((_, ty)) = best {
            kept.push((chunk.span, ty.name.clone()));
        }
    }
    kept.sort_by_key(|(s, _)| (s.start, s.end));
    kept.dedup();
    kept
}

fn locate_sentence(doc: &Document, locator: &str) -> Span {
    let needle = locator.replace('\n', "\n");
    let mut found: Option<Span> = None;
    for i in 0..doc.sentence_count() {
        let span = doc.sentence(i).span;
        let text = &doc.raw.text[span.start..span.end];
        if text.contains(&needle) {
            assert!(
                found.is_none(),
                "locator {locator:?} matches more than one sentence in {}",
                doc.protocol_id()
            );
            found = Some(span);
        }
    }
    found.unwrap_or_else(|| panic!("locator {locator:?} not found in {}", doc.protocol_id()))
}

fn main() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..");
    let data = root.join("data");

    for spec in corpus_spec() {
        let rfc = data.join("rfc").join(format!("{}.txt", spec.protocol));
        let raw = load_rfc(&rfc, spec.protocol).expect("fixture loads");
        let doc = Document::ingest(raw);

        let types: Vec<(FieldType, Vec<String>)> = spec
            .types
            .iter()
            .enumerate()
            .map(|(order, ts)| {
                let ft = FieldType::with_layout(ts.name, ts.size_bits, order);
                let mut surfaces: Vec<String> = vec![ts.name.to_lowercase()];
                surfaces.extend(ts.surfaces.iter().map(|s| s.to_lowercase()));
                (ft, surfaces)
            })
            .collect();

        let gold_mentions = locate_mentions(&doc, &types);
        let mut gold_properties: Vec<GoldProperty> = Vec::new();
        for p in spec.properties {
            let spans: Vec<Span> = p
                .locators
                .iter()
                .map(|locator| locate_sentence(&doc, locator))
                .collect();
            gold_properties.push(GoldProperty {
                spans,
                kind: p.kind,
                argument: p.argument.to_string(),
            });
        }

        // Sanity: property arguments must name gold types.
        let names: BTreeSet<String> = types.iter().map(|(t, _)| t.folded_name()).collect();
        for p in &gold_properties {
            assert!(
                names.contains(&p.argument.to_lowercase()),
                "property argument {:?} is not a gold type of {}",
                p.argument,
                spec.protocol
            );
        }

        let set = AnnotationSet {
            protocol_id: spec.protocol.to_string(),
            gold_types: types.into_iter().map(|(t, _)| t).collect(),
            gold_mentions,
            gold_properties,
        };
        let out = data.join("annotations").join(format!("{}.tsv", spec.protocol));
        std::fs::write(&out, write_annotations(&set)).expect("write annotations");
        println!(
            "{}: {} types, {} mentions, {} properties -> {}",
            spec.protocol,
            set.gold_types.len(),
            set.gold_mentions.len(),
            set.gold_properties.len(),
            out.display()
        );
    }

    for (protocol, name) in [
        (Protocol::ToyTcp, "tcp_manual.json"),
        (Protocol::ToyDccp, "dccp_manual.json"),
    ] {
        let grammar = reference_grammar(protocol);
        let out = data.join("grammars").join(name);
        std::fs::write(&out, serialize_grammar(&grammar)).expect("write grammar");
        println!("{} -> {}", grammar.protocol, out.display());
    }
    let _ = Path::new("");
}
