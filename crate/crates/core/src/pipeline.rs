//! End-to-end runs: read and pair the corpus, generate questions per
//! sentence on a worker pool, write the dataset in input order.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agen::{extract_answer, node_label};
use crate::annotate::{align_concepts, parse_conllu, ConlluError, SentenceAnnotation};
use crate::corpus::{
    compute_stats, parse_block, read_blocks, read_dataset, read_text, write_dataset, AmrCorpusEntry, CorpusError,
    CorpusStats, PairingStrategy, QaPair, RawBlock,
};
use crate::penman::parse_penman;
use crate::preprocess::{preorder_entries, preprocess, preprocess_with_counts, PreprocessConfig};
use crate::qgen::{answer_position, best_question, candidates_or_skip, sense_question, SkipReason};
use crate::scorer::{FallbackScorer, NgramModel, QuestionScorer, RemoteScorer, ScorerError, DEFAULT_MAX_IN_FLIGHT};
use crate::templates::{
    load_role_mapping, load_templates, parse_role_mapping, TemplateError, TemplateStore, BUNDLED_ROLE_MAPPING,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Scorer(#[from] ScorerError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("annotations: {0}")]
    Annotation(#[from] ConlluError),
    #[error("no sentences were processed")]
    NoSentences,
    #[error("entry {index} out of range ({len} entries)")]
    IndexOutOfRange { index: usize, len: usize },
}

impl PipelineError {
    /// 1 usage or configuration, 2 unreadable input or output, 3 nothing
    /// produced.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::IndexOutOfRange { .. } => 1,
            PipelineError::Template(TemplateError::Io { .. }) | PipelineError::Scorer(ScorerError::Io { .. }) => 2,
            PipelineError::Template(_) | PipelineError::Scorer(_) => 1,
            PipelineError::Corpus(_) | PipelineError::Annotation(_) => 2,
            PipelineError::NoSentences => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScorerChoice {
    #[default]
    Baseline,
    Remote,
}

impl std::str::FromStr for ScorerChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "baseline" => Ok(ScorerChoice::Baseline),
            "remote" => Ok(ScorerChoice::Remote),
            _ => Err(format!("unknown scorer `{s}` (expected baseline or remote)")),
        }
    }
}

/// Settings of a generation run. Unset template and mapping paths use the
/// bundled resources; an unset model path uses the bundled baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub amr_path: Option<PathBuf>,
    pub conllu_path: Option<PathBuf>,
    pub template_path: Option<PathBuf>,
    pub mapping_path: Option<PathBuf>,
    pub output_path: Option<PathBuf>,
    pub report_path: Option<PathBuf>,
    pub model_path: Option<PathBuf>,
    pub scorer: ScorerChoice,
    pub scorer_url: Option<String>,
    pub scorer_timeout_ms: u64,
    pub max_in_flight: usize,
    pub pairing: PairingStrategy,
    pub preprocess: PreprocessConfig,
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            amr_path: None,
            conllu_path: None,
            template_path: None,
            mapping_path: None,
            output_path: None,
            report_path: None,
            model_path: None,
            scorer: ScorerChoice::Baseline,
            scorer_url: None,
            scorer_timeout_ms: 5000,
            max_in_flight: DEFAULT_MAX_IN_FLIGHT,
            pairing: PairingStrategy::ById,
            preprocess: PreprocessConfig::default(),
            workers: 1,
        }
    }
}

fn required<'a>(path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, PipelineError> {
    path.as_deref()
        .ok_or_else(|| PipelineError::Config(format!("missing {flag}")))
}

fn existing(path: &Path) -> Result<(), PipelineError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CorpusError::Io {
            path: path.display().to_string(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
        }
        .into())
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        serde_json::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.workers == 0 {
            return Err(PipelineError::Config("workers must be at least 1".into()));
        }
        if self.max_in_flight == 0 {
            return Err(PipelineError::Config("max_in_flight must be at least 1".into()));
        }
        if self.scorer == ScorerChoice::Remote && self.scorer_url.as_deref().is_none_or(str::is_empty) {
            return Err(PipelineError::Config("the remote scorer needs a URL".into()));
        }
        existing(required(&self.amr_path, "--amr")?)?;
        existing(required(&self.conllu_path, "--conllu")?)?;
        required(&self.output_path, "--out")?;
        for path in [&self.template_path, &self.mapping_path, &self.model_path]
            .into_iter()
            .flatten()
        {
            existing(path)?;
        }
        Ok(())
    }

    pub fn template_store(&self) -> Result<TemplateStore, PipelineError> {
        let mapping = match &self.mapping_path {
            Some(path) => load_role_mapping(path)?,
            None => parse_role_mapping(BUNDLED_ROLE_MAPPING)?,
        };
        let store = match &self.template_path {
            Some(path) => load_templates(path)?.with_mapping(mapping)?,
            None if self.mapping_path.is_none() => TemplateStore::bundled(),
            None => TemplateStore::bundled().with_mapping(mapping)?,
        };
        Ok(store)
    }

    pub fn baseline_model(&self) -> Result<NgramModel, PipelineError> {
        Ok(match &self.model_path {
            Some(path) => NgramModel::load(path)?,
            None => NgramModel::bundled(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceFailure {
    pub sentence_id: String,
    pub block: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub sentences_total: usize,
    pub sentences_processed: usize,
    pub sentences_failed: usize,
    pub failures: Vec<SentenceFailure>,
    /// Dataset lines written: primary plus sense questions.
    pub questions_emitted: usize,
    pub primary_questions: usize,
    pub sense_questions: usize,
    /// Non-root tree positions over processed sentences.
    pub non_root_nodes: usize,
    pub skipped_no_template: usize,
    pub skipped_pos_mismatch: usize,
    pub skipped_duplicate: usize,
    pub concept_fallback_answers: usize,
    pub scorer_id: String,
    pub scorer_fallbacks: usize,
    pub wall_time_ms: u64,
}

impl RunReport {
    pub fn skipped_nodes(&self) -> usize {
        self.skipped_no_template + self.skipped_pos_mismatch + self.skipped_duplicate
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let rows: [(&str, usize); 11] = [
            ("sentences", self.sentences_total),
            ("processed", self.sentences_processed),
            ("failed", self.sentences_failed),
            ("questions emitted", self.questions_emitted),
            ("  primary", self.primary_questions),
            ("  sense", self.sense_questions),
            ("non-root nodes", self.non_root_nodes),
            ("skipped: no template", self.skipped_no_template),
            ("skipped: pos mismatch", self.skipped_pos_mismatch),
            ("skipped: duplicate", self.skipped_duplicate),
            ("scorer fallbacks", self.scorer_fallbacks),
        ];
        for (label, value) in rows {
            let _ = writeln!(out, "{label:<22}{value:>8}");
        }
        let _ = writeln!(out, "{:<22}{:>8}", "scorer", self.scorer_id);
        let _ = writeln!(out, "{:<22}{:>6}ms", "wall time", self.wall_time_ms);
        out
    }
}

/// Questions and tallies of one sentence.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SentenceOutput {
    pub pairs: Vec<QaPair>,
    pub non_root_nodes: usize,
    pub primary: usize,
    pub sense: usize,
    pub skipped: BTreeMap<SkipReason, usize>,
}

/// Generates the sentence's pairs in tree pre-order: each position's
/// primary question, then its sense question. Pairs repeating an earlier
/// (question, answer) are dropped.
pub fn generate_for_sentence(
    entry: &AmrCorpusEntry,
    ann: &SentenceAnnotation,
    store: &TemplateStore,
    scorer: &dyn QuestionScorer,
    config: &PreprocessConfig,
) -> Result<SentenceOutput, ScorerError> {
    let tree = preprocess(&entry.graph, config);
    let alignment = align_concepts(&tree, ann);
    let entries = preorder_entries(&tree);
    let mut out = SentenceOutput::default();
    let mut seen: HashSet<(String, String)> = HashSet::new();
    let mut keep = |pair: &QaPair| seen.insert((pair.question.clone(), pair.answer.text.clone()));

    for node in &entries {
        if let Some(parent) = node.parent.map(|p| &entries[p]) {
            out.non_root_nodes += 1;
            match candidates_or_skip(node, parent, store, ann, &alignment) {
                Err(reason) => *out.skipped.entry(reason).or_insert(0) += 1,
                Ok(candidates) => {
                    let (best, score) = best_question(candidates, scorer)?.expect("non-empty candidates");
                    let answer = extract_answer(answer_position(node, parent), ann, &alignment);
                    let pair = QaPair {
                        sentence_id: entry.id.clone(),
                        question: best.filled_text,
                        answer,
                        relation: best.relation,
                        node: node_label(node.node, node.index),
                        template_id: best.template_id,
                        score: score.value,
                        scorer_id: score.scorer_id,
                    };
                    if keep(&pair) {
                        out.primary += 1;
                        out.pairs.push(pair);
                    } else {
                        *out.skipped.entry(SkipReason::Duplicate).or_insert(0) += 1;
                    }
                }
            }
        }
        if let Some(mut pair) = sense_question(node, ann, &alignment, scorer)? {
            pair.sentence_id = entry.id.clone();
            if keep(&pair) {
                out.sense += 1;
                out.pairs.push(pair);
            }
        }
    }
    Ok(out)
}

enum Outcome {
    Done(SentenceOutput),
    Failed(SentenceFailure),
}

fn block_id(block: &RawBlock) -> String {
    block.id().map_or_else(|| (block.index + 1).to_string(), str::to_string)
}

/// Runs generation and writes the dataset and, if configured, the report.
pub fn run_generate(config: &RunConfig) -> Result<RunReport, PipelineError> {
    let started = Instant::now();
    config.validate()?;
    let store = config.template_store()?;
    let baseline = Arc::new(config.baseline_model()?);
    let remote = match config.scorer {
        ScorerChoice::Baseline => None,
        ScorerChoice::Remote => {
            let url = config.scorer_url.clone().unwrap_or_default();
            let client = RemoteScorer::with_limits(
                url,
                Duration::from_millis(config.scorer_timeout_ms),
                config.max_in_flight,
            );
            Some(FallbackScorer::new(Box::new(client), baseline.clone()))
        }
    };
    let scorer: &dyn QuestionScorer = match &remote {
        Some(s) => s,
        None => baseline.as_ref(),
    };

    let blocks = read_blocks(&read_text(required(&config.amr_path, "--amr")?)?);
    if blocks.is_empty() {
        return Err(PipelineError::NoSentences);
    }
    let annotations = parse_conllu(&read_text(required(&config.conllu_path, "--conllu")?)?)?;
    let ids: Vec<String> = blocks.iter().map(block_id).collect();
    let pairing: Vec<Result<usize, String>> = match config.pairing {
        PairingStrategy::ByOrder => {
            if blocks.len() != annotations.len() {
                return Err(CorpusError::CountMismatch {
                    amr: blocks.len(),
                    annotations: annotations.len(),
                }
                .into());
            }
            (0..blocks.len()).map(Ok).collect()
        }
        PairingStrategy::ById => {
            let mut by_id = BTreeMap::new();
            for (i, a) in annotations.iter().enumerate() {
                by_id.entry(a.sentence_id.as_str()).or_insert(i);
            }
            ids.iter()
                .map(|id| {
                    by_id
                        .get(id.as_str())
                        .copied()
                        .ok_or_else(|| CorpusError::UnresolvedId { id: id.clone() }.to_string())
                })
                .collect()
        }
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| PipelineError::Config(e.to_string()))?;
    let outcomes: Vec<Outcome> = pool.install(|| {
        blocks
            .par_iter()
            .zip(pairing.par_iter())
            .zip(ids.par_iter())
            .map(|((block, paired), id)| {
                let failed = |message: String| {
                    log::warn!("sentence {id} (block {}): {message}", block.index);
                    Outcome::Failed(SentenceFailure {
                        sentence_id: id.clone(),
                        block: block.index,
                        message,
                    })
                };
                let ann = match paired {
                    Ok(i) => &annotations[*i],
                    Err(message) => return failed(message.clone()),
                };
                let entry = match parse_block(block) {
                    Ok(entry) => entry,
                    Err(e) => return failed(e.to_string()),
                };
                match generate_for_sentence(&entry, ann, &store, scorer, &config.preprocess) {
                    Ok(output) => Outcome::Done(output),
                    Err(e) => failed(e.to_string()),
                }
            })
            .collect()
    });

    let mut report = RunReport {
        sentences_total: blocks.len(),
        scorer_id: scorer.id().to_string(),
        ..RunReport::default()
    };
    let mut pairs = Vec::new();
    for outcome in outcomes {
        match outcome {
            Outcome::Failed(failure) => {
                report.sentences_failed += 1;
                report.failures.push(failure);
            }
            Outcome::Done(output) => {
                report.sentences_processed += 1;
                report.non_root_nodes += output.non_root_nodes;
                report.primary_questions += output.primary;
                report.sense_questions += output.sense;
                for (reason, n) in output.skipped {
                    match reason {
                        SkipReason::NoTemplate => report.skipped_no_template += n,
                        SkipReason::PosMismatch => report.skipped_pos_mismatch += n,
                        SkipReason::Duplicate => report.skipped_duplicate += n,
                    }
                }
                pairs.extend(output.pairs);
            }
        }
    }
    if report.sentences_processed == 0 {
        return Err(PipelineError::NoSentences);
    }
    report.questions_emitted = pairs.len();
    report.concept_fallback_answers = pairs
        .iter()
        .filter(|p| p.answer.kind == crate::agen::AnswerKind::ConceptFallback)
        .count();
    report.scorer_fallbacks = remote.as_ref().map_or(0, FallbackScorer::fallback_count);
    write_dataset(&pairs, required(&config.output_path, "--out")?)?;
    report.wall_time_ms = started.elapsed().as_millis() as u64;
    if let Some(path) = &config.report_path {
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        std::fs::write(path, json + "\n").map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
    }
    Ok(report)
}

/// Statistics of a dataset file. Without a report, the sentence count is
/// the number of distinct sentence ids in the dataset.
pub fn run_stats(dataset: &Path, report: Option<&Path>) -> Result<CorpusStats, PipelineError> {
    let pairs = read_dataset(dataset)?;
    let (sentences, skipped) = match report {
        Some(path) => {
            let report: RunReport = serde_json::from_str(&read_text(path)?)
                .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
            (report.sentences_processed, report.skipped_nodes())
        }
        None => {
            let ids: HashSet<&str> = pairs.iter().map(|p| p.sentence_id.as_str()).collect();
            (ids.len(), 0)
        }
    };
    let mut stats = compute_stats(&pairs, sentences.max(1))?.with_skipped(skipped);
    stats.sentence_count = sentences;
    Ok(stats)
}

/// Debug view of one corpus entry: the graph before and after
/// preprocessing and the traversal order.
pub fn run_inspect(amr_path: &Path, index: usize, config: &PreprocessConfig) -> Result<String, PipelineError> {
    let blocks = read_blocks(&read_text(amr_path)?);
    let block = blocks.get(index).ok_or(PipelineError::IndexOutOfRange {
        index,
        len: blocks.len(),
    })?;
    let graph = parse_penman(&block.graph_text).map_err(|source| CorpusError::Parse {
        block: index,
        line: block.line,
        source,
    })?;
    Ok(inspect_graph(&block_id(block), block.sentence(), &graph, config))
}

pub fn inspect_graph(
    id: &str,
    sentence: Option<&str>,
    graph: &crate::penman::AmrGraph,
    config: &PreprocessConfig,
) -> String {
    let (tree, counts) = preprocess_with_counts(graph, config);
    let mut out = String::new();
    let _ = writeln!(out, "# id: {id}");
    if let Some(s) = sentence {
        let _ = writeln!(out, "# sentence: {s}");
    }
    let _ = writeln!(out, "original:  {}", graph.to_penman());
    let _ = writeln!(out, "condensed: {}", tree.to_penman());
    let _ = writeln!(
        out,
        "dropped {} / absorbed {} positions",
        counts.dropped, counts.absorbed
    );
    let _ = writeln!(out, "traversal:");
    for entry in preorder_entries(&tree) {
        let relation = entry
            .node
            .relation_to_parent
            .as_ref()
            .map_or("(root)".to_string(), |r| format!(":{r}"));
        let _ = writeln!(
            out,
            "  {:>3} {}{} {}",
            entry.index,
            "  ".repeat(entry.depth),
            relation,
            crate::penman::quote(&entry.node.concept_text)
        );
    }
    out
}
