//! AMR release files, AMR/CoNLL-U pairing, the JSON Lines dataset and its
//! summary statistics.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agen::{Answer, AnswerKind};
use crate::annotate::SentenceAnnotation;
use crate::penman::{parse_penman, AmrGraph, PenmanError};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("block {block} (line {line}): no `::snt` metadata")]
    MissingSentence { block: usize, line: usize },
    #[error("block {block} (line {line}): {source}")]
    Parse {
        block: usize,
        line: usize,
        #[source]
        source: PenmanError,
    },
    #[error("{amr} AMR entries but {annotations} annotations")]
    CountMismatch { amr: usize, annotations: usize },
    #[error("no annotation with sentence id `{id}`")]
    UnresolvedId { id: String },
    #[error("dataset line {line}: {message}")]
    MalformedLine { line: usize, message: String },
    #[error("statistics need at least one sentence")]
    ZeroSentences,
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn read_text(path: &Path) -> Result<String, CorpusError> {
    std::fs::read_to_string(path).map_err(io_error(path))
}

/// A blank-line-separated block of an AMR file before its graph is parsed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawBlock {
    /// 0-based index among blocks that carry a graph.
    pub index: usize,
    /// 1-based line of the block's first line.
    pub line: usize,
    pub metadata: BTreeMap<String, String>,
    pub graph_text: String,
}

impl RawBlock {
    pub fn id(&self) -> Option<&str> {
        self.metadata.get("id").map(String::as_str)
    }

    pub fn sentence(&self) -> Option<&str> {
        self.metadata
            .get("snt")
            .map(String::as_str)
            .filter(|s| !s.trim().is_empty())
    }
}

/// `::key value` pairs of one comment line; several may share a line.
fn parse_metadata(comment: &str, into: &mut BTreeMap<String, String>) {
    let mut rest = comment;
    let mut current: Option<(String, String)> = None;
    loop {
        let next = rest
            .match_indices("::")
            .map(|(i, _)| i)
            .find(|&i| i == 0 || rest[..i].ends_with(char::is_whitespace));
        let (text, tail) = match next {
            Some(i) => (&rest[..i], Some(&rest[i + 2..])),
            None => (rest, None),
        };
        if let Some((_, value)) = current.as_mut() {
            value.push_str(text);
        }
        let Some(tail) = tail else { break };
        if let Some((key, value)) = current.take() {
            into.insert(key, value.trim().to_string());
        }
        let key_end = tail.find(char::is_whitespace).unwrap_or(tail.len());
        current = Some((tail[..key_end].to_string(), String::new()));
        rest = &tail[key_end..];
    }
    if let Some((key, value)) = current {
        into.insert(key, value.trim().to_string());
    }
}

/// Splits an AMR file into blocks, skipping blocks made only of comments.
pub fn read_blocks(text: &str) -> Vec<RawBlock> {
    let mut blocks = Vec::new();
    let mut lines = text.lines().enumerate().peekable();
    while lines.peek().is_some() {
        while lines.next_if(|(_, l)| l.trim().is_empty()).is_some() {}
        let Some(&(first, _)) = lines.peek() else { break };
        let mut metadata = BTreeMap::new();
        let mut graph_text = String::new();
        while let Some((_, line)) = lines.next_if(|(_, l)| !l.trim().is_empty()) {
            let trimmed = line.trim_start();
            if graph_text.is_empty() && trimmed.starts_with('#') {
                parse_metadata(trimmed.trim_start_matches('#'), &mut metadata);
            } else {
                graph_text.push_str(line);
                graph_text.push('\n');
            }
        }
        if !graph_text.trim().is_empty() {
            blocks.push(RawBlock {
                index: blocks.len(),
                line: first + 1,
                metadata,
                graph_text,
            });
        }
    }
    blocks
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmrCorpusEntry {
    pub id: String,
    pub sentence: String,
    pub graph: AmrGraph,
}

/// Parses one block. Blocks without `::id` are named by their 1-based
/// ordinal.
pub fn parse_block(block: &RawBlock) -> Result<AmrCorpusEntry, CorpusError> {
    let sentence = block.sentence().ok_or(CorpusError::MissingSentence {
        block: block.index,
        line: block.line,
    })?;
    let graph = parse_penman(&block.graph_text).map_err(|source| CorpusError::Parse {
        block: block.index,
        line: block.line,
        source,
    })?;
    Ok(AmrCorpusEntry {
        id: block.id().map_or_else(|| (block.index + 1).to_string(), str::to_string),
        sentence: sentence.to_string(),
        graph,
    })
}

pub fn parse_amr_corpus(text: &str) -> Result<Vec<AmrCorpusEntry>, CorpusError> {
    read_blocks(text).iter().map(parse_block).collect()
}

pub fn read_amr_corpus(path: impl AsRef<Path>) -> Result<Vec<AmrCorpusEntry>, CorpusError> {
    parse_amr_corpus(&read_text(path.as_ref())?)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairingStrategy {
    #[default]
    ById,
    ByOrder,
}

impl std::str::FromStr for PairingStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "by-id" => Ok(PairingStrategy::ById),
            "by-order" => Ok(PairingStrategy::ByOrder),
            _ => Err(format!("unknown pairing strategy `{s}` (expected by-id or by-order)")),
        }
    }
}

/// For each AMR id, the index of its annotation. By id, the first
/// annotation carrying an id wins.
pub fn pair_ids(
    amr_ids: &[&str],
    annotations: &[SentenceAnnotation],
    strategy: PairingStrategy,
) -> Result<Vec<usize>, CorpusError> {
    match strategy {
        PairingStrategy::ByOrder => {
            if amr_ids.len() != annotations.len() {
                return Err(CorpusError::CountMismatch {
                    amr: amr_ids.len(),
                    annotations: annotations.len(),
                });
            }
            Ok((0..amr_ids.len()).collect())
        }
        PairingStrategy::ById => {
            let mut by_id: HashMap<&str, usize> = HashMap::new();
            for (i, ann) in annotations.iter().enumerate() {
                by_id.entry(ann.sentence_id.as_str()).or_insert(i);
            }
            amr_ids
                .iter()
                .map(|id| {
                    by_id
                        .get(id)
                        .copied()
                        .ok_or_else(|| CorpusError::UnresolvedId { id: id.to_string() })
                })
                .collect()
        }
    }
}

pub fn pair_annotations<'a>(
    entries: &'a [AmrCorpusEntry],
    annotations: &'a [SentenceAnnotation],
    strategy: PairingStrategy,
) -> Result<Vec<(&'a AmrCorpusEntry, &'a SentenceAnnotation)>, CorpusError> {
    let ids: Vec<&str> = entries.iter().map(|e| e.id.as_str()).collect();
    let pairing = pair_ids(&ids, annotations, strategy)?;
    Ok(entries.iter().zip(pairing).map(|(e, i)| (e, &annotations[i])).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaPair {
    pub sentence_id: String,
    pub question: String,
    pub answer: Answer,
    pub relation: String,
    /// Variable of the node the question is about (`@N` for constants).
    pub node: String,
    pub template_id: String,
    pub score: f64,
    pub scorer_id: String,
}

pub fn dataset_line(pair: &QaPair) -> String {
    serde_json::to_string(pair).expect("QaPair serializes")
}

pub fn write_dataset_to<W: Write>(pairs: &[QaPair], out: W) -> std::io::Result<()> {
    let mut out = BufWriter::new(out);
    for pair in pairs {
        out.write_all(dataset_line(pair).as_bytes())?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn write_dataset(pairs: &[QaPair], path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(io_error(path))?;
    write_dataset_to(pairs, file).map_err(io_error(path))
}

pub fn parse_dataset(text: &str) -> Result<Vec<QaPair>, CorpusError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| CorpusError::MalformedLine {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Vec<QaPair>, CorpusError> {
    parse_dataset(&read_text(path.as_ref())?)
}

/// An exact ratio of two counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Ratio {
    pub numerator: u64,
    pub denominator: u64,
}

impl Ratio {
    pub fn new(numerator: u64, denominator: u64) -> Self {
        Ratio { numerator, denominator }
    }

    pub fn value(self) -> f64 {
        if self.denominator == 0 {
            0.0
        } else {
            self.numerator as f64 / self.denominator as f64
        }
    }

    /// Two decimals, halves rounded up, computed without floating point.
    pub fn display_2dp(self) -> String {
        if self.denominator == 0 {
            return "0.00".to_string();
        }
        let n = self.numerator as u128;
        let d = self.denominator as u128;
        let hundredths = (n * 200 + d) / (2 * d);
        format!("{}.{:02}", hundredths / 100, hundredths % 100)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub sentence_count: usize,
    pub total_questions: usize,
    pub avg_questions_per_sentence: Ratio,
    pub unique_word_count: usize,
    pub avg_question_length: Ratio,
    pub avg_answer_length: Ratio,
    pub skipped_node_count: usize,
    pub fallback_answer_count: usize,
}

fn is_word(token: &str) -> bool {
    token.chars().any(char::is_alphanumeric)
}

/// Lengths are whitespace token counts; unique words are lowercased
/// question tokens containing a letter or digit.
pub fn compute_stats(pairs: &[QaPair], sentence_count: usize) -> Result<CorpusStats, CorpusError> {
    if sentence_count == 0 {
        return Err(CorpusError::ZeroSentences);
    }
    let mut words = BTreeSet::new();
    let mut question_tokens = 0u64;
    let mut answer_tokens = 0u64;
    for pair in pairs {
        for token in pair.question.split_whitespace() {
            question_tokens += 1;
            if is_word(token) {
                words.insert(token.to_lowercase());
            }
        }
        answer_tokens += pair.answer.text.split_whitespace().count() as u64;
    }
    let n = pairs.len() as u64;
    Ok(CorpusStats {
        sentence_count,
        total_questions: pairs.len(),
        avg_questions_per_sentence: Ratio::new(n, sentence_count as u64),
        unique_word_count: words.len(),
        avg_question_length: Ratio::new(question_tokens, n),
        avg_answer_length: Ratio::new(answer_tokens, n),
        skipped_node_count: 0,
        fallback_answer_count: pairs
            .iter()
            .filter(|p| p.answer.kind == AnswerKind::ConceptFallback)
            .count(),
    })
}

impl CorpusStats {
    pub fn with_skipped(mut self, skipped: usize) -> Self {
        self.skipped_node_count = skipped;
        self
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "sentences": self.sentence_count,
            "total_questions": self.total_questions,
            "avg_questions_per_sentence": self.avg_questions_per_sentence.display_2dp(),
            "unique_word_count": self.unique_word_count,
            "avg_question_length": self.avg_question_length.display_2dp(),
            "avg_answer_length": self.avg_answer_length.display_2dp(),
            "skipped_node_count": self.skipped_node_count,
            "fallback_answer_count": self.fallback_answer_count,
        })
    }

    /// Plain-text table, one statistic per row.
    pub fn render_table(&self) -> String {
        let rows = [
            ("Sentences", self.sentence_count.to_string()),
            ("Total # of questions", self.total_questions.to_string()),
            (
                "Avg # of questions per sentence",
                self.avg_questions_per_sentence.display_2dp(),
            ),
            ("# of unique words", self.unique_word_count.to_string()),
            ("Avg length of questions", self.avg_question_length.display_2dp()),
            ("Avg length of answers", self.avg_answer_length.display_2dp()),
            ("Skipped nodes", self.skipped_node_count.to_string()),
            ("Fallback answers", self.fallback_answer_count.to_string()),
        ];
        let label_width = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0);
        let value_width = rows.iter().map(|(_, v)| v.len()).max().unwrap_or(0);
        let mut out = String::new();
        for (label, value) in rows {
            let _ = writeln!(out, "{label:<label_width$}  {value:>value_width$}");
        }
        out
    }
}
