//! Extracts protocol grammars (header fields plus semantic field properties)
//! from plain-text RFC specifications and uses them to drive a grammar-based
//! fuzzer against simulated transport endpoints.
//!
//! The pipeline has two halves connected by the grammar file format:
//!
//! 1. NLP half: [`corpus`] normalizes RFC text, [`type_extraction`] recovers
//!    header field symbols from RFC formatting, and [`zsl`] links text chunks
//!    to fields and flags property-bearing chunks with zero-shot pairwise
//!    classifiers. [`grammar`] post-processes the raw tuples into a validated
//!    [`grammar::ProtocolGrammar`]. [`eval`] reproduces the intrinsic
//!    evaluation (baselines, metrics, leave-one-protocol-out driver).
//! 2. Fuzzing half: [`fuzzer`] turns a grammar into test strategies and
//!    [`simnet`] executes them against toy TCP/DCCP endpoints behind a
//!    malicious proxy, recording packet-type traces and attack reports.

pub mod cli;
pub mod corpus;
pub mod type_extraction;
pub mod zsl;
pub mod error;
pub mod eval;
pub mod fuzzer;
pub mod simnet;
pub mod grammar;

pub use corpus::{Chunk, Document, RawDocument, Section, Sentence, Span, Token};
