//! Test-strategy generation: random byte fuzzing with no protocol
//! knowledge, and grammar-based generation that enumerates packet types and
//! applies delivery actions, injection, and field modifications — pruned or
//! extended by field properties under the NLP-based configuration.

use serde::{Deserialize, Serialize};

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::FuzzError;
use crate::grammar::{PacketTypeEntry, PropertyKind, ProtocolGrammar};

/// Testing configuration, mirroring the three evaluated setups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FuzzConfigKind {
    Random,
    Manual,
    NlpBased,
}

impl FuzzConfigKind {
    pub fn name(&self) -> &'static str {
        match self {
            FuzzConfigKind::Random => "random",
            FuzzConfigKind::Manual => "manual",
            FuzzConfigKind::NlpBased => "nlp",
        }
    }

    pub fn from_name(s: &str) -> Option<FuzzConfigKind> {
        match s {
            "random" => Some(FuzzConfigKind::Random),
            "manual" => Some(FuzzConfigKind::Manual),
            "nlp" | "nlp-based" | "nlpbased" => Some(FuzzConfigKind::NlpBased),
            _ => None,
        }
    }
}

/// How a field modification picks its replacement value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValueRule {
    Zeros,
    Ones,
    One,
    Random { seed: u64 },
    NotMultiple,
    HugeOffset,
    /// The single modification applied to checksum/port fields.
    SingleRandom { seed: u64 },
}

/// Number of extra events a delayed packet waits.
pub const DELAY_EVENTS: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeliveryAction {
    Drop,
    Duplicate,
    Delay { events: u64 },
    ReorderWithNext,
}

pub const DELIVERY_ACTIONS: [DeliveryAction; 4] = [
    DeliveryAction::Drop,
    DeliveryAction::Duplicate,
    DeliveryAction::Delay {
        events: DELAY_EVENTS,
    },
    DeliveryAction::ReorderWithNext,
];

/// The single action a strategy applies to every matching packet of a run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "kebab-case")]
pub enum Action {
    FieldModify { field: String, rule: ValueRule },
    Delivery { delivery: DeliveryAction },
    /// Duplicate the last seen packet of the target type with a fresh
    /// random payload byte.
    Inject { seed: u64 },
    /// Overwrite a fixed subset of the first 20 bytes with random data.
    RandomBytes { byte_indices: Vec<u8>, seed: u64 },
}

/// One fuzz test: an action applied to all packets of the targeted type.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestStrategy {
    pub id: u32,
    pub config: FuzzConfigKind,
    pub target_packet_type: Option<String>,
    #[serde(flatten)]
    pub action: Action,
}

/// First-20-bytes random replacement strategies; deterministic given seed.
pub fn generate_random_strategies(n: u32, seed: u64) -> Vec<TestStrategy> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n as usize);
    for id in 0..n {
        let count = rng.random_range(1..=20usize);
        let mut indices: Vec<u8> = (0u8..20).collect();
        indices.shuffle(&mut rng);
        indices.truncate(count);
        indices.sort_unstable();
        let data_seed = rng.next_u64();
        out.push(TestStrategy {
            id,
            config: FuzzConfigKind::Random,
            target_packet_type: None,
            action: Action::RandomBytes {
                byte_indices: indices,
                seed: data_seed,
            },
        });
    }
    out
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn derive_seed(base: u64, pt: usize, field: usize, salt: u64) -> u64 {
    splitmix64(base ^ ((pt as u64) << 40) ^ ((field as u64) << 20) ^ salt)
}

/// Enumerates the packet types a grammar can target: the declared list when
/// present, otherwise all values of the PacketType field.
pub fn packet_type_entries(grammar: &ProtocolGrammar) -> Result<Vec<PacketTypeEntry>, FuzzError> {
    let type_field =
        grammar
            .field_with_kind(PropertyKind::PacketType)
            .ok_or(FuzzError::MissingPacketType {
                protocol_id: grammar.protocol.clone(),
            })?;
    if !grammar.packet_types.is_empty() {
        return Ok(grammar.packet_types.clone());
    }
    if type_field.size_bits > 6 {
        return Err(FuzzError::TypeSpaceTooLarge {
            field: type_field.name.clone(),
            bits: type_field.size_bits,
        });
    }
    let count = 1u64 << type_field.size_bits;
    Ok((0..count)
        .map(|v| PacketTypeEntry {
            name: format!("TYPE_{v}"),
            value: v,
        })
        .collect())
}

/// Size-based value rules applied to every field under the manual
/// configuration.
fn size_rules(base_seed: u64, pt: usize, field: usize) -> Vec<ValueRule> {
    vec![
        ValueRule::Zeros,
        ValueRule::Ones,
        ValueRule::One,
        ValueRule::Random {
            seed: derive_seed(base_seed, pt, field, 1),
        },
    ]
}

/// Builds the per-packet-type cross product of delivery actions, injection,
/// and field modification rules. The NLP-based configuration prunes
/// checksum/port fields to a single modification and adds rules for fields
/// with multiple-of and sequence-number properties.
pub fn generate_grammar_strategies(
    grammar: &ProtocolGrammar,
    config: FuzzConfigKind,
    base_seed: u64,
) -> Result<Vec<TestStrategy>, FuzzError> {
    if config == FuzzConfigKind::Random {
        return Err(FuzzError::Config(
            "random configuration does not use a grammar".to_string(),
        ));
    }
    let packet_types = packet_type_entries(grammar)?;
    let mut fields: Vec<&crate::grammar::GrammarField> = grammar.fields.iter().collect();
    fields.sort_by_key(|f| f.offset_bits);

    let mut out = Vec::new();
    let mut id = 0u32;
    let mut push = |out: &mut Vec<TestStrategy>, target: &str, action: Action| {
        out.push(TestStrategy {
            id,
            config,
            target_packet_type: Some(target.to_string()),
            action,
        });
        id += 1;
    };

    for (pi, pt) in packet_types.iter().enumerate() {
        for delivery in DELIVERY_ACTIONS {
            push(&mut out, &pt.name, Action::Delivery { delivery });
        }
        push(
            &mut out,
            &pt.name,
            Action::Inject {
                seed: derive_seed(base_seed, pi, usize::MAX, 2),
            },
        );
        for (fi, field) in fields.iter().enumerate() {
            let props = grammar.properties_of(&field.name);
            let rules = match config {
                FuzzConfigKind::Manual => size_rules(base_seed, pi, fi),
                FuzzConfigKind::NlpBased => {
                    if props.contains(&PropertyKind::Checksum)
                        || props.contains(&PropertyKind::Port)
                    {
                        vec![ValueRule::SingleRandom {
                            seed: derive_seed(base_seed, pi, fi, 3),
                        }]
                    } else {
                        let mut rules = size_rules(base_seed, pi, fi);
                        if props.contains(&PropertyKind::Multiple) {
                            rules.push(ValueRule::NotMultiple);
                        }
                        if props.contains(&PropertyKind::SequenceNumber) {
                            rules.push(ValueRule::HugeOffset);
                        }
                        rules
                    }
                }
                FuzzConfigKind::Random => unreachable!("rejected above"),
            };
            for rule in rules {
                push(
                    &mut out,
                    &pt.name,
                    Action::FieldModify {
                        field: field.name.clone(),
                        rule,
                    },
                );
            }
        }
    }
    Ok(out)
}

/// Audit form: one JSON record per strategy.
pub fn strategies_to_jsonl(strategies: &[TestStrategy]) -> String {
    let mut out = String::new();
    for s in strategies {
        out.push_str(&serde_json::to_string(s).expect("strategy serializes"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::{GrammarField, PropertyTuple, Provenance};

    fn grammar_2fields() -> ProtocolGrammar {
        ProtocolGrammar {
            protocol: "toy".into(),
            header_bits: 12,
            fields: vec![
                GrammarField {
                    name: "Kind".into(),
                    size_bits: 4,
                    offset_bits: 0,
                    order: 0,
                },
                GrammarField {
                    name: "Value".into(),
                    size_bits: 8,
                    offset_bits: 4,
                    order: 1,
                },
            ],
            symbols: vec![],
            properties: vec![PropertyTuple {
                kind: PropertyKind::PacketType,
                field: "Kind".into(),
                score: 1.0,
                provenance: Provenance::Extracted,
                evidence: None,
            }],
            packet_types: vec![PacketTypeEntry {
                name: "PING".into(),
                value: 1,
            }],
        }
    }

    #[test]
    fn random_strategies_are_bounded_and_deterministic() {
        let a = generate_random_strategies(1000, 9);
        assert_eq!(a.len(), 1000);
        for s in &a {
            match &s.action {
                Action::RandomBytes { byte_indices, .. } => {
                    assert!(!byte_indices.is_empty());
                    assert!(byte_indices.iter().all(|&b| b < 20));
                    assert!(byte_indices.windows(2).all(|w| w[0] < w[1]));
                }
                other => panic!("unexpected action {other:?}"),
            }
            assert_eq!(s.config, FuzzConfigKind::Random);
            assert!(s.target_packet_type.is_none());
        }
        let b = generate_random_strategies(1000, 9);
        assert_eq!(a, b);
        let c = generate_random_strategies(1000, 10);
        assert_ne!(a, c);
    }

    #[test]
    fn cross_product_count_matches() {
        // 1 packet type, 2 fields, 4 value rules, 4 delivery actions,
        // 1 inject: 4 + 1 + 2*4 = 13.
        let strategies =
            generate_grammar_strategies(&grammar_2fields(), FuzzConfigKind::Manual, 0).unwrap();
        assert_eq!(strategies.len(), 13);
    }

    #[test]
    fn missing_packet_type_is_error() {
        let mut g = grammar_2fields();
        g.properties.clear();
        assert!(matches!(
            generate_grammar_strategies(&g, FuzzConfigKind::Manual, 0),
            Err(FuzzError::MissingPacketType { .. })
        ));
    }

    #[test]
    fn nlp_prunes_checksum_and_port_fields() {
        let mut g = grammar_2fields();
        g.properties.push(PropertyTuple {
            kind: PropertyKind::Checksum,
            field: "Value".into(),
            score: 1.0,
            provenance: Provenance::Extracted,
            evidence: None,
        });
        let manual = generate_grammar_strategies(&g, FuzzConfigKind::Manual, 0).unwrap();
        let nlp = generate_grammar_strategies(&g, FuzzConfigKind::NlpBased, 0).unwrap();
        // The checksum field drops from 4 rules to 1.
        assert_eq!(manual.len() - nlp.len(), 3);
        let value_rules: Vec<&TestStrategy> = nlp
            .iter()
            .filter(|s| matches!(&s.action, Action::FieldModify { field, .. } if field == "Value"))
            .collect();
        assert_eq!(value_rules.len(), 1);
        assert!(matches!(
            &value_rules[0].action,
            Action::FieldModify {
                rule: ValueRule::SingleRandom { .. },
                ..
            }
        ));
    }

    #[test]
    fn nlp_extends_multiple_and_sequence_fields() {
        let mut g = grammar_2fields();
        g.properties.push(PropertyTuple {
            kind: PropertyKind::Multiple,
            field: "Value".into(),
            score: 1.0,
            provenance: Provenance::Extracted,
            evidence: None,
        });
        let manual = generate_grammar_strategies(&g, FuzzConfigKind::Manual, 0).unwrap();
        let nlp = generate_grammar_strategies(&g, FuzzConfigKind::NlpBased, 0).unwrap();
        assert_eq!(nlp.len(), manual.len() + 1);
        assert!(nlp.iter().any(|s| matches!(
            &s.action,
            Action::FieldModify {
                rule: ValueRule::NotMultiple,
                ..
            }
        )));
    }

    #[test]
    fn enumerates_types_when_list_missing() {
        let mut g = grammar_2fields();
        g.packet_types.clear();
        let entries = packet_type_entries(&g).unwrap();
        assert_eq!(entries.len(), 16); // 4-bit type field
        assert_eq!(entries[3].name, "TYPE_3");
    }

    #[test]
    fn strategies_reference_only_grammar_names() {
        let g = grammar_2fields();
        let strategies = generate_grammar_strategies(&g, FuzzConfigKind::Manual, 0).unwrap();
        let type_names: Vec<&str> = g.packet_types.iter().map(|p| p.name.as_str()).collect();
        for s in &strategies {
            assert!(type_names.contains(&s.target_packet_type.as_deref().unwrap()));
            if let Action::FieldModify { field, .. } = &s.action {
                assert!(g.field(field).is_some());
            }
        }
    }

    #[test]
    fn generation_is_pure() {
        let g = grammar_2fields();
        let a = generate_grammar_strategies(&g, FuzzConfigKind::NlpBased, 4).unwrap();
        let b = generate_grammar_strategies(&g, FuzzConfigKind::NlpBased, 4).unwrap();
        assert_eq!(a, b);
    }
}
