use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while loading and normalizing RFC text.
#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read document {path}: {source}")]
    Load {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("document {protocol_id} is empty after normalization")]
    EmptyDocument { protocol_id: String },
}

/// Errors raised by classifier training and scoring.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("training set contains only {0} examples; need at least one positive and one negative")]
    DegenerateTraining(&'static str),
    #[error("feature catalog mismatch: model has version {model}, vector has version {vector}")]
    CatalogMismatch { model: u32, vector: u32 },
    #[error("cannot identify mentions with an empty type list")]
    EmptyTypeList,
    #[error("model file {path}: {reason}")]
    ModelFile { path: PathBuf, reason: String },
}

/// Errors raised while assigning property kinds and arguments.
#[derive(Debug, Error)]
pub enum PropertyError {
    #[error("no property kind overlaps the sentence of span at {start}..{end}")]
    UnassignableKind { start: usize, end: usize },
    #[error("no field type resolves for the span at {start}..{end} (section {section:?})")]
    UnresolvedArgument {
        start: usize,
        end: usize,
        section: String,
    },
}

/// Errors raised while building, validating, or parsing grammars.
#[derive(Debug, Error)]
pub enum GrammarError {
    #[error("layout error: {0}")]
    Layout(String),
    #[error("singleton property {kind} appears on both {first} and {second}")]
    SingletonViolation {
        kind: String,
        first: String,
        second: String,
    },
    #[error("mutually exclusive properties {a} and {b} on field {field}")]
    ExclusionViolation { a: String, b: String, field: String },
    #[error("property references unknown field {0}")]
    UnknownField(String),
    #[error("grammar syntax error at line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("invalid grammar: {0}")]
    Invalid(String),
}

/// Errors raised by the evaluation harness.
#[derive(Debug, Error)]
pub enum EvalError {
    #[error("metric undefined: {0}")]
    UndefinedMetric(&'static str),
    #[error("annotation file {path} line {line}: {reason}")]
    Annotation {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("cross-validation needs at least 2 annotated documents, got {0}")]
    TooFewDocuments(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Errors raised by strategy generation and simulation runs.
#[derive(Debug, Error)]
pub enum FuzzError {
    #[error("grammar for {protocol_id} has no PacketType property; cannot generate per-type strategies")]
    MissingPacketType { protocol_id: String },
    #[error("packet type field {field} is {bits} bits wide; declare an explicit packet_types list")]
    TypeSpaceTooLarge { field: String, bits: u32 },
    #[error("configuration error: {0}")]
    Config(String),
}
