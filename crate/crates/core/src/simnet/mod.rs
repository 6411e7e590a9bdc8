//! Deterministic simulation of toy TCP/DCCP endpoints behind a malicious
//! proxy: run strategies, record packet-type traces, detect availability
//! attacks, and count trace coverage.

pub mod checksum;
pub mod endpoints;
pub mod engine;
pub mod packet;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::FuzzError;
use crate::fuzzer::{Action, TestStrategy};
use crate::grammar::{
    GrammarField, PacketTypeEntry, PropertyKind, PropertyTuple, ProtocolGrammar, Provenance,
};

pub use checksum::{internet_checksum, verifies};
pub use engine::{EngineConfig, Verdict};
pub use packet::{Packet, Protocol};

/// Attack class; the harness observes availability attacks only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackClass {
    Availability,
}

/// On-path attackers modify in-flight packets; off-path attackers only
/// inject. Injection is the only action an off-path attacker could mount.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackPath {
    OnPath,
    OffPath,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackReport {
    pub strategy_id: u32,
    pub class: AttackClass,
    pub path: AttackPath,
    pub verdict: Verdict,
    pub trace: Vec<String>,
}

/// One strategy's simulated outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub strategy_id: u32,
    pub verdict: Verdict,
    pub trace: Vec<String>,
    pub events_used: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attack: Option<AttackReport>,
}

/// Validates a strategy/grammar pair against a protocol and runs it.
pub fn run_strategy(
    protocol: Protocol,
    strategy: &TestStrategy,
    grammar: Option<&ProtocolGrammar>,
    event_budget: u64,
) -> Result<RunResult, FuzzError> {
    let needs_grammar = !matches!(strategy.action, Action::RandomBytes { .. });
    if needs_grammar {
        let g = grammar.ok_or_else(|| {
            FuzzError::Config(format!(
                "strategy {} requires a grammar",
                strategy.id
            ))
        })?;
        if !g.protocol.eq_ignore_ascii_case(protocol.id()) {
            return Err(FuzzError::Config(format!(
                "grammar is for {:?}, protocol under test is {:?}",
                g.protocol,
                protocol.id()
            )));
        }
        if let Some(target) = &strategy.target_packet_type {
            let field = g
                .field_with_kind(PropertyKind::PacketType)
                .ok_or(FuzzError::MissingPacketType {
                    protocol_id: g.protocol.clone(),
                })?;
            if field.offset_bits + field.size_bits > protocol.header_bits() {
                return Err(FuzzError::Config(format!(
                    "grammar packet-type field {} at bits {}..{} lies outside the {}-bit header",
                    field.name,
                    field.offset_bits,
                    field.offset_bits + field.size_bits,
                    protocol.header_bits()
                )));
            }
            let resolvable = g.packet_types.iter().any(|p| p.name == *target)
                || target
                    .strip_prefix("TYPE_")
                    .and_then(|v| v.parse::<u64>().ok())
                    .is_some();
            if !resolvable {
                return Err(FuzzError::Config(format!(
                    "target packet type {target:?} is not declared by the grammar"
                )));
            }
        }
        if let Action::FieldModify { field, .. } = &strategy.action {
            if g.field(field).is_none() {
                return Err(FuzzError::Config(format!(
                    "strategy {} modifies unknown field {field:?}",
                    strategy.id
                )));
            }
        }
    }
    let config = EngineConfig {
        event_budget,
        ..EngineConfig::default()
    };
    let outcome = engine::run_engine(protocol, Some(strategy), grammar, &config);
    Ok(RunResult {
        strategy_id: strategy.id,
        verdict: outcome.verdict,
        trace: outcome.trace,
        events_used: outcome.events_used,
        attack: None,
    })
}

/// Pass-through run with no attacker action; the baseline trace.
pub fn run_null(protocol: Protocol, event_budget: u64) -> RunResult {
    let config = EngineConfig {
        event_budget,
        ..EngineConfig::default()
    };
    let outcome = engine::run_engine(protocol, None, None, &config);
    RunResult {
        strategy_id: u32::MAX,
        verdict: outcome.verdict,
        trace: outcome.trace,
        events_used: outcome.events_used,
        attack: None,
    }
}

/// Stalled or failed runs are availability attacks; injection-only
/// strategies are the off-path ones.
pub fn detect_attack(result: &RunResult, strategy: &TestStrategy) -> Option<AttackReport> {
    match result.verdict {
        Verdict::Completed => None,
        Verdict::Stalled | Verdict::Failed => Some(AttackReport {
            strategy_id: strategy.id,
            class: AttackClass::Availability,
            path: if matches!(strategy.action, Action::Inject { .. }) {
                AttackPath::OffPath
            } else {
                AttackPath::OnPath
            },
            verdict: result.verdict,
            trace: result.trace.clone(),
        }),
    }
}

/// Coverage: number of distinct packet-type traces, with the strategy count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coverage {
    pub unique_traces: usize,
    pub total_strategies: usize,
}

pub fn coverage(results: &[RunResult]) -> Coverage {
    let unique: BTreeSet<&Vec<String>> = results.iter().map(|r| &r.trace).collect();
    Coverage {
        unique_traces: unique.len(),
        total_strategies: results.len(),
    }
}

/// The hand-written reference grammar for a toy protocol: the native layout
/// plus the semantic properties an expert would declare. This is what the
/// manual fuzzing configuration consumes.
pub fn reference_grammar(protocol: Protocol) -> ProtocolGrammar {
    let mut fields = Vec::new();
    let mut offset = 0u32;
    for (i, (name, size)) in protocol.layout().iter().enumerate() {
        fields.push(GrammarField {
            name: name.to_string(),
            size_bits: *size,
            offset_bits: offset,
            order: i,
        });
        offset += size;
    }
    let prop = |kind: PropertyKind, field: &str| PropertyTuple {
        kind,
        field: field.to_string(),
        score: 1.0,
        provenance: Provenance::Extracted,
        evidence: None,
    };
    let (properties, packet_types) = match protocol {
        Protocol::ToyTcp => (
            vec![
                prop(PropertyKind::PacketType, "Control Bits"),
                prop(PropertyKind::HeaderLength, "Data Offset"),
                prop(PropertyKind::Checksum, "Checksum"),
                prop(PropertyKind::Port, "Source Port"),
                prop(PropertyKind::Port, "Destination Port"),
                prop(PropertyKind::SequenceNumber, "Sequence Number"),
                prop(PropertyKind::AcknowledgementNumber, "Acknowledgment Number"),
                prop(PropertyKind::WindowFlowControl, "Window"),
            ],
            vec![
                ("SYN", 0x02),
                ("SYN-ACK", 0x12),
                ("ACK", 0x10),
                ("DATA", 0x18),
                ("FIN", 0x11),
                ("RST", 0x04),
            ],
        ),
        Protocol::ToyDccp => (
            vec![
                prop(PropertyKind::PacketType, "Type"),
                prop(PropertyKind::HeaderLength, "Data Offset"),
                prop(PropertyKind::Checksum, "Checksum"),
                prop(PropertyKind::Port, "Source Port"),
                prop(PropertyKind::Port, "Dest Port"),
                prop(PropertyKind::SequenceNumber, "Sequence Number"),
            ],
            vec![
                ("Request", 0),
                ("Response", 1),
                ("Data", 2),
                ("Ack", 3),
                ("DataAck", 4),
                ("Close", 6),
                ("Reset", 7),
            ],
        ),
    };
    let grammar = ProtocolGrammar {
        protocol: protocol.id().to_string(),
        header_bits: offset,
        fields,
        symbols: vec![],
        properties,
        packet_types: packet_types
            .into_iter()
            .map(|(name, value)| PacketTypeEntry {
                name: name.to_string(),
                value,
            })
            .collect(),
    };
    grammar.validate().expect("reference grammar is valid");
    grammar
}
