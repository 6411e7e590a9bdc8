//! Command-line pipeline orchestration. Every command resolves its settings
//! from an optional TOML config file plus flags (flags win), validates
//! referenced paths up front, logs the resolved config into the output
//! directory, and writes all artifacts under stable names.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::corpus::{load_rfc, Document};
use crate::error::FuzzError;
use crate::eval::{
    loocv::{render_mention_table, render_per_protocol_table, render_property_table},
    read_annotations, CorpusDocument, EvalConfig, LoocvReport,
};
use crate::fuzzer::{
    generate_grammar_strategies, generate_random_strategies, strategies_to_jsonl, FuzzConfigKind,
    TestStrategy,
};
use crate::grammar::{parse_grammar, postprocess_with, serialize_grammar, ProtocolGrammar};
use crate::simnet::{coverage, detect_attack, run_strategy, AttackPath, Protocol, RunResult};
use crate::type_extraction::{extract_entity_types, read_types_file, write_types_file};
use crate::zsl::{
    build_mention_pairs, build_property_pairs, extract_property_tuples, identify_mentions, train,
    LinearModel, TokenLog, MENTION_CATALOG, PROPERTY_CATALOG,
};

/// Exit code 2: bad configuration. Exit code 1: a pipeline stage failed.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Pipeline(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Pipeline(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Pipeline(m) => m,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Pipeline(m) => write!(f, "pipeline error: {m}"),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "rfcfuzz",
    about = "Extract protocol grammars from RFC text and fuzz simulated endpoints with them"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Normalize an RFC text file and dump its sections/sentences/chunks.
    Ingest(IngestArgs),
    /// Run rule-based entity type extraction over an RFC text file.
    ExtractTypes(IngestArgs),
    /// Train the mention and property classifiers on an annotated corpus.
    Train(TrainArgs),
    /// Run the full extraction pipeline and emit a grammar file.
    Extract(ExtractArgs),
    /// Leave-one-protocol-out intrinsic evaluation with baselines.
    EvalNlp(TrainArgs),
    /// Generate and execute fuzz strategies against a simulated endpoint.
    Fuzz(FuzzArgs),
    /// Re-render summary tables from a previously produced report file.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
pub struct IngestArgs {
    /// RFC plain-text file.
    #[arg(long)]
    pub rfc: PathBuf,
    /// Short protocol identifier, e.g. "tcp".
    #[arg(long)]
    pub protocol: String,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// TOML config naming the corpus documents and annotation files.
    #[arg(long)]
    pub config: PathBuf,
    /// Training seed; required here or in the config file.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<u32>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ExtractArgs {
    #[arg(long)]
    pub rfc: PathBuf,
    #[arg(long)]
    pub protocol: String,
    #[arg(long)]
    pub mention_model: PathBuf,
    #[arg(long)]
    pub property_model: PathBuf,
    /// Known-types condition: use this types file instead of rule-based
    /// extraction.
    #[arg(long)]
    pub types_file: Option<PathBuf>,
    /// Disable post-processing fallback guessing of missing key properties.
    #[arg(long)]
    pub no_fallback: bool,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct FuzzArgs {
    /// Optional TOML config; flags below override its [fuzz] section.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Protocol under test: tcp | dccp.
    #[arg(long)]
    pub protocol: Option<String>,
    /// Testing configuration: random | manual | nlp.
    #[arg(long)]
    pub fuzz_config: Option<String>,
    /// Grammar file (required for manual/nlp).
    #[arg(long)]
    pub grammar: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Maximum number of strategies to generate/execute.
    #[arg(long)]
    pub strategy_budget: Option<u32>,
    /// Event budget per simulated run.
    #[arg(long)]
    pub event_budget: Option<u64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// A run log (.jsonl) from `fuzz` or a report.json from `eval-nlp`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

/// TOML pipeline configuration shared by train / eval-nlp / fuzz.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PipelineConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub epochs: Option<u32>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub corpus: Vec<CorpusEntry>,
    #[serde(default)]
    pub fuzz: Option<FuzzSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub protocol: String,
    pub rfc: PathBuf,
    #[serde(default)]
    pub annotations: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FuzzSection {
    #[serde(default)]
    pub protocol: Option<String>,
    #[serde(default)]
    pub configuration: Option<String>,
    #[serde(default)]
    pub grammar: Option<PathBuf>,
    #[serde(default)]
    pub strategy_budget: Option<u32>,
    #[serde(default)]
    pub event_budget: Option<u64>,
}

fn read_config(path: &Path) -> Result<PipelineConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text)
        .map_err(|e| CliError::Config(format!("bad config {}: {e}", path.display())))
}

fn ensure_exists(path: &Path, what: &str) -> Result<(), CliError> {
    if !path.exists() {
        return Err(CliError::Config(format!(
            "{what} not found: {}",
            path.display()
        )));
    }
    Ok(())
}

fn make_out_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))
}

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content)
        .map_err(|e| CliError::Pipeline(format!("cannot write {}: {e}", path.display())))
}

/// Logs the fully resolved settings so a run is reproducible from its
/// output directory alone.
fn log_config(out_dir: &Path, resolved: &PipelineConfig, original: Option<&Path>) -> Result<(), CliError> {
    let text = toml::to_string_pretty(resolved)
        .map_err(|e| CliError::Pipeline(format!("config serialization: {e}")))?;
    write_file(&out_dir.join("config_used.toml"), &text)?;
    if let Some(orig) = original {
        let bytes = std::fs::read_to_string(orig)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", orig.display())))?;
        write_file(&out_dir.join("config_input.toml"), &bytes)?;
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Ingest(args) => cmd_ingest(args),
        Command::ExtractTypes(args) => cmd_extract_types(args),
        Command::Train(args) => cmd_train(args),
        Command::Extract(args) => cmd_extract(args),
        Command::EvalNlp(args) => cmd_eval_nlp(args),
        Command::Fuzz(args) => cmd_fuzz(args),
        Command::Report(args) => cmd_report(args),
    }
}

/// Convenience for tests: parse argv and run.
pub fn run_from<I, S>(argv: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| CliError::Config(e.to_string()))?;
    run(cli)
}

fn load_document(rfc: &Path, protocol: &str) -> Result<Document, CliError> {
    ensure_exists(rfc, "RFC file")?;
    let raw = load_rfc(rfc, protocol)
        .map_err(|e| CliError::Pipeline(format!("ingest stage: {e}")))?;
    Ok(Document::ingest(raw))
}

fn cmd_ingest(args: IngestArgs) -> Result<(), CliError> {
    make_out_dir(&args.out_dir)?;
    let doc = load_document(&args.rfc, &args.protocol)?;
    let dump = doc.dump_jsonl();
    let out = args.out_dir.join(format!("{}_document.jsonl", args.protocol));
    write_file(&out, &dump)?;
    log_config(
        &args.out_dir,
        &PipelineConfig {
            corpus: vec![CorpusEntry {
                protocol: args.protocol.clone(),
                rfc: args.rfc.clone(),
                annotations: None,
            }],
            ..Default::default()
        },
        None,
    )?;
    println!(
        "ingest: {} sections={} sentences={} chunks={} -> {}",
        args.protocol,
        doc.sections.len(),
        doc.sentence_count(),
        doc.chunks.len(),
        out.display()
    );
    Ok(())
}

fn cmd_extract_types(args: IngestArgs) -> Result<(), CliError> {
    make_out_dir(&args.out_dir)?;
    let doc = load_document(&args.rfc, &args.protocol)?;
    let types = extract_entity_types(&doc.raw, &doc.sections);
    let out = args.out_dir.join(format!("{}_types.tsv", args.protocol));
    write_types_file(&out, &types)
        .map_err(|e| CliError::Pipeline(format!("types stage: {e}")))?;
    log_config(
        &args.out_dir,
        &PipelineConfig {
            corpus: vec![CorpusEntry {
                protocol: args.protocol.clone(),
                rfc: args.rfc.clone(),
                annotations: None,
            }],
            ..Default::default()
        },
        None,
    )?;
    println!(
        "extract-types: {} types={} -> {}",
        args.protocol,
        types.len(),
        out.display()
    );
    Ok(())
}

/// Loads every corpus entry named by a config, with annotations.
fn load_annotated_corpus(config: &PipelineConfig) -> Result<Vec<CorpusDocument>, CliError> {
    if config.corpus.is_empty() {
        return Err(CliError::Config("config lists no corpus documents".into()));
    }
    let mut out = Vec::new();
    for entry in &config.corpus {
        let ann_path = entry.annotations.as_ref().ok_or_else(|| {
            CliError::Config(format!("corpus entry {} has no annotations", entry.protocol))
        })?;
        ensure_exists(&entry.rfc, "RFC file")?;
        ensure_exists(ann_path, "annotation file")?;
        let document = load_document(&entry.rfc, &entry.protocol)?;
        let annotations = read_annotations(ann_path)
            .map_err(|e| CliError::Pipeline(format!("annotation stage: {e}")))?;
        annotations
            .validate(&document, ann_path)
            .map_err(|e| CliError::Pipeline(format!("annotation stage: {e}")))?;
        out.push(CorpusDocument {
            document,
            annotations,
        });
    }
    Ok(out)
}

fn resolve_train_settings(
    args: &TrainArgs,
) -> Result<(PipelineConfig, u64, u32, PathBuf), CliError> {
    ensure_exists(&args.config, "config file")?;
    let mut config = read_config(&args.config)?;
    if let Some(s) = args.seed {
        config.seed = Some(s);
    }
    if let Some(e) = args.epochs {
        config.epochs = Some(e);
    }
    if let Some(d) = &args.out_dir {
        config.out_dir = Some(d.clone());
    }
    let seed = config
        .seed
        .ok_or_else(|| CliError::Config("seed required (flag --seed or config key)".into()))?;
    let epochs = config.epochs.unwrap_or(crate::zsl::DEFAULT_EPOCHS);
    let out_dir = config
        .out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("out"));
    Ok((config, seed, epochs, out_dir))
}

fn cmd_train(args: TrainArgs) -> Result<(), CliError> {
    let (config, seed, epochs, out_dir) = resolve_train_settings(&args)?;
    make_out_dir(&out_dir)?;
    let corpus = load_annotated_corpus(&config)?;
    log_config(&out_dir, &config, Some(&args.config))?;

    let mut log = TokenLog::new();
    let mut mention_pairs = Vec::new();
    let mut property_pairs = Vec::new();
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
    for cd in &corpus {
        mention_pairs.extend(build_mention_pairs(
            &cd.document,
            &cd.annotations.gold_types,
            &cd.annotations.gold_mentions,
            &mut rng,
            &mut log,
        ));
        property_pairs.extend(build_property_pairs(
            &cd.document,
            &cd.annotations.property_spans_flat(),
            &mut rng,
            &mut log,
        ));
    }
    let protocols: Vec<String> = corpus
        .iter()
        .map(|c| c.annotations.protocol_id.clone())
        .collect();
    let mention_model = train(&mention_pairs, &MENTION_CATALOG, seed, epochs, protocols.clone())
        .map_err(|e| CliError::Pipeline(format!("train stage: {e}")))?;
    let property_model = train(&property_pairs, &PROPERTY_CATALOG, seed, epochs, protocols)
        .map_err(|e| CliError::Pipeline(format!("train stage: {e}")))?;

    let mention_path = out_dir.join("mention_model.json");
    let property_path = out_dir.join("property_model.json");
    mention_model
        .save(&mention_path)
        .map_err(|e| CliError::Pipeline(e.to_string()))?;
    property_model
        .save(&property_path)
        .map_err(|e| CliError::Pipeline(e.to_string()))?;
    write_file(&out_dir.join("token_log.txt"), &log.to_text())?;
    println!(
        "train: mention_pairs={} property_pairs={} observed_tokens={} -> {}, {}",
        mention_pairs.len(),
        property_pairs.len(),
        log.len(),
        mention_path.display(),
        property_path.display()
    );
    Ok(())
}

fn load_model(path: &Path) -> Result<LinearModel, CliError> {
    ensure_exists(path, "model file")?;
    LinearModel::load(path).map_err(|e| CliError::Pipeline(format!("model stage: {e}")))
}

fn cmd_extract(args: ExtractArgs) -> Result<(), CliError> {
    make_out_dir(&args.out_dir)?;
    let mention_model = load_model(&args.mention_model)?;
    let property_model = load_model(&args.property_model)?;
    let doc = load_document(&args.rfc, &args.protocol)?;

    let types = match &args.types_file {
        Some(path) => {
            ensure_exists(path, "types file")?;
            read_types_file(path)
                .map_err(|e| CliError::Pipeline(format!("types stage: {e}")))?
        }
        None => extract_entity_types(&doc.raw, &doc.sections),
    };
    if types.is_empty() {
        return Err(CliError::Pipeline(
            "types stage: no entity types found; supply --types-file".into(),
        ));
    }

    let mentions = identify_mentions(&mention_model, &doc, &types)
        .map_err(|e| CliError::Pipeline(format!("mention stage: {e}")))?;
    let (tuples, stats) = extract_property_tuples(&property_model, &doc, &types)
        .map_err(|e| CliError::Pipeline(format!("property stage: {e}")))?;
    let grammar = postprocess_with(&args.protocol, &tuples, &types, !args.no_fallback)
        .map_err(|e| CliError::Pipeline(format!("postprocess stage: {e}")))?;

    let out = args.out_dir.join(format!("{}_grammar.json", args.protocol));
    write_file(&out, &serialize_grammar(&grammar))?;
    log_config(
        &args.out_dir,
        &PipelineConfig {
            corpus: vec![CorpusEntry {
                protocol: args.protocol.clone(),
                rfc: args.rfc.clone(),
                annotations: None,
            }],
            ..Default::default()
        },
        None,
    )?;
    println!(
        "extract: {} types={} mentions={} flagged={} tuples={} kept_properties={} -> {}",
        args.protocol,
        types.len(),
        mentions.len(),
        stats.flagged_chunks,
        stats.tuples,
        grammar.properties.len(),
        out.display()
    );
    Ok(())
}

fn cmd_eval_nlp(args: TrainArgs) -> Result<(), CliError> {
    let (config, seed, epochs, out_dir) = resolve_train_settings(&args)?;
    make_out_dir(&out_dir)?;
    let corpus = load_annotated_corpus(&config)?;
    log_config(&out_dir, &config, Some(&args.config))?;

    let report = crate::eval::loocv(&corpus, &EvalConfig { seed, epochs })
        .map_err(|e| CliError::Pipeline(format!("eval stage: {e}")))?;

    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Pipeline(format!("report serialization: {e}")))?;
    write_file(&out_dir.join("report.json"), &format!("{json}\n"))?;
    let mut tables = render_mention_table(&report);
    tables.push('\n');
    tables.push_str(&render_per_protocol_table(&report));
    tables.push('\n');
    tables.push_str(&render_property_table(&report));
    write_file(&out_dir.join("tables.txt"), &tables)?;
    for fold in &report.folds {
        write_file(
            &out_dir.join(format!("token_log_{}.txt", fold.held_out)),
            &fold.token_log.to_text(),
        )?;
    }
    let ours = report
        .aggregate_mentions
        .get(crate::eval::loocv::APPROACH_OURS_K);
    println!(
        "eval-nlp: folds={} aggregate_f1={}",
        report.folds.len(),
        ours.map(|m| format!("{:.3}", m.f1)).unwrap_or_default()
    );
    Ok(())
}

/// Fuzz run summary in the shape of the coverage/attack tables.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FuzzSummary {
    pub protocol: String,
    pub configuration: String,
    pub unique_traces: usize,
    pub total_strategies: usize,
    pub reported_attacks: usize,
    pub offpath_attacks: usize,
}

pub fn render_fuzz_summary(s: &FuzzSummary) -> String {
    let mut out = String::from("Fuzzer run summary\n");
    out.push_str(&format!(
        "{:<10} {:<8} {:>14} {:>17} {:>17} {:>16}\n",
        "Protocol", "Config", "Unique Traces", "Total Strategies", "Reported Attacks", "Off-path Attacks"
    ));
    out.push_str(&format!(
        "{:<10} {:<8} {:>14} {:>17} {:>17} {:>16}\n",
        s.protocol,
        s.configuration,
        s.unique_traces,
        s.total_strategies,
        s.reported_attacks,
        s.offpath_attacks
    ));
    out
}

fn cmd_fuzz(args: FuzzArgs) -> Result<(), CliError> {
    let mut config = match &args.config {
        Some(path) => {
            ensure_exists(path, "config file")?;
            read_config(path)?
        }
        None => PipelineConfig::default(),
    };
    let mut fuzz = config.fuzz.clone().unwrap_or_default();
    if let Some(p) = &args.protocol {
        fuzz.protocol = Some(p.clone());
    }
    if let Some(c) = &args.fuzz_config {
        fuzz.configuration = Some(c.clone());
    }
    if let Some(g) = &args.grammar {
        fuzz.grammar = Some(g.clone());
    }
    if let Some(b) = args.strategy_budget {
        fuzz.strategy_budget = Some(b);
    }
    if let Some(b) = args.event_budget {
        fuzz.event_budget = Some(b);
    }
    if let Some(s) = args.seed {
        config.seed = Some(s);
    }
    if let Some(d) = &args.out_dir {
        config.out_dir = Some(d.clone());
    }

    let protocol_name = fuzz
        .protocol
        .clone()
        .ok_or_else(|| CliError::Config("protocol required (tcp | dccp)".into()))?;
    let protocol = Protocol::from_id(&protocol_name)
        .ok_or_else(|| CliError::Config(format!("unknown protocol {protocol_name:?}")))?;
    let config_name = fuzz
        .configuration
        .clone()
        .ok_or_else(|| CliError::Config("fuzz configuration required (random | manual | nlp)".into()))?;
    let kind = FuzzConfigKind::from_name(&config_name)
        .ok_or_else(|| CliError::Config(format!("unknown configuration {config_name:?}")))?;
    let seed = config
        .seed
        .ok_or_else(|| CliError::Config("seed required (flag --seed or config key)".into()))?;
    let budget = fuzz.strategy_budget.unwrap_or(1000);
    let event_budget = fuzz.event_budget.unwrap_or(100);
    let out_dir = config
        .out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("out"));
    make_out_dir(&out_dir)?;

    let grammar: Option<ProtocolGrammar> = match kind {
        FuzzConfigKind::Random => None,
        _ => {
            let path = fuzz.grammar.clone().ok_or_else(|| {
                CliError::Config("grammar file required for manual/nlp configurations".into())
            })?;
            ensure_exists(&path, "grammar file")?;
            let text = std::fs::read_to_string(&path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            Some(
                parse_grammar(&text)
                    .map_err(|e| CliError::Pipeline(format!("grammar stage: {e}")))?,
            )
        }
    };

    config.fuzz = Some(fuzz.clone());
    log_config(&out_dir, &config, args.config.as_deref())?;

    let mut strategies: Vec<TestStrategy> = match kind {
        FuzzConfigKind::Random => generate_random_strategies(budget, seed),
        _ => generate_grammar_strategies(grammar.as_ref().expect("checked"), kind, seed)
            .map_err(|e| match e {
                FuzzError::MissingPacketType { .. } => {
                    CliError::Pipeline(format!("strategy stage: {e}"))
                }
                other => CliError::Pipeline(format!("strategy stage: {other}")),
            })?,
    };
    strategies.truncate(budget as usize);
    write_file(&out_dir.join("strategies.jsonl"), &strategies_to_jsonl(&strategies))?;

    let mut results: Vec<RunResult> = Vec::with_capacity(strategies.len());
    let mut log_lines = String::new();
    for s in &strategies {
        let mut result = run_strategy(protocol, s, grammar.as_ref(), event_budget)
            .map_err(|e| CliError::Pipeline(format!("run stage: {e}")))?;
        result.attack = detect_attack(&result, s);
        log_lines.push_str(
            &serde_json::to_string(&result)
                .map_err(|e| CliError::Pipeline(format!("log serialization: {e}")))?,
        );
        log_lines.push('\n');
        results.push(result);
    }
    write_file(&out_dir.join("run_log.jsonl"), &log_lines)?;

    let cov = coverage(&results);
    let reported = results.iter().filter(|r| r.attack.is_some()).count();
    let offpath = results
        .iter()
        .filter(|r| {
            r.attack
                .as_ref()
                .is_some_and(|a| a.path == AttackPath::OffPath)
        })
        .count();
    let summary = FuzzSummary {
        protocol: protocol.id().to_string(),
        configuration: kind.name().to_string(),
        unique_traces: cov.unique_traces,
        total_strategies: cov.total_strategies,
        reported_attacks: reported,
        offpath_attacks: offpath,
    };
    let summary_json = serde_json::to_string_pretty(&summary)
        .map_err(|e| CliError::Pipeline(format!("summary serialization: {e}")))?;
    write_file(&out_dir.join("summary.json"), &format!("{summary_json}\n"))?;
    write_file(&out_dir.join("summary.txt"), &render_fuzz_summary(&summary))?;
    println!(
        "fuzz: {} {} strategies={} unique_traces={} attacks={} offpath={}",
        summary.protocol,
        summary.configuration,
        summary.total_strategies,
        summary.unique_traces,
        summary.reported_attacks,
        summary.offpath_attacks
    );
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<(), CliError> {
    ensure_exists(&args.input, "input file")?;
    make_out_dir(&args.out_dir)?;
    let text = std::fs::read_to_string(&args.input)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", args.input.display())))?;

    // Either a loocv report.json or a fuzz run_log.jsonl.
    if let Ok(report) = serde_json::from_str::<LoocvReport>(&text) {
        let mut tables = render_mention_table(&report);
        tables.push('\n');
        tables.push_str(&render_per_protocol_table(&report));
        tables.push('\n');
        tables.push_str(&render_property_table(&report));
        write_file(&args.out_dir.join("tables.txt"), &tables)?;
        println!("report: rendered eval tables -> {}", args.out_dir.display());
        return Ok(());
    }

    let mut results = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let r: RunResult = serde_json::from_str(line).map_err(|e| {
            CliError::Pipeline(format!("{} line {}: {e}", args.input.display(), i + 1))
        })?;
        results.push(r);
    }
    let cov = coverage(&results);
    let reported = results.iter().filter(|r| r.attack.is_some()).count();
    let offpath = results
        .iter()
        .filter(|r| {
            r.attack
                .as_ref()
                .is_some_and(|a| a.path == AttackPath::OffPath)
        })
        .count();
    let verdicts: BTreeSet<String> = results
        .iter()
        .map(|r| format!("{:?}", r.verdict).to_lowercase())
        .collect();
    let summary = FuzzSummary {
        protocol: "?".to_string(),
        configuration: "?".to_string(),
        unique_traces: cov.unique_traces,
        total_strategies: cov.total_strategies,
        reported_attacks: reported,
        offpath_attacks: offpath,
    };
    write_file(&args.out_dir.join("summary.txt"), &render_fuzz_summary(&summary))?;
    println!(
        "report: strategies={} unique_traces={} attacks={} verdicts={:?} -> {}",
        cov.total_strategies,
        cov.unique_traces,
        reported,
        verdicts,
        args.out_dir.display()
    );
    Ok(())
}
