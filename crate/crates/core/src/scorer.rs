//! Fluency scoring for candidate questions.
//!
//! [`NgramModel`] is the bundled add-k smoothed baseline; [`RemoteScorer`]
//! posts questions to an external language-model service, and
//! [`FallbackScorer`] drops back to the baseline whenever the remote side
//! fails.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const BASELINE_ID: &str = "baseline";
pub const REMOTE_ID: &str = "remote";
/// Environment variable holding the remote scorer endpoint.
pub const SCORER_URL_ENV: &str = "ASQ_SCORER_URL";

pub const BUNDLED_CORPUS: &str = include_str!("../resources/baseline-corpus.txt");
pub const BUNDLED_MODEL: &str = include_str!("../resources/baseline.model");

const BOS: &str = "<s>";
const EOS: &str = "</s>";
const UNK: &str = "<unk>";
const HEADER: &str = "ngram-model v1";

#[derive(Debug, Error)]
pub enum ScorerError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("cannot score an empty question")]
    EmptyQuestion,
    #[error("n-gram order must be at least 2, got {0}")]
    InvalidOrder(usize),
    #[error("smoothing constant must be positive and finite, got {0}")]
    InvalidSmoothing(f64),
    #[error("model line {line}: {reason}")]
    ModelFormat { line: usize, reason: String },
    #[error("scorer unavailable: {0}")]
    Unavailable(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionScore {
    pub value: f64,
    pub scorer_id: String,
}

pub trait QuestionScorer: Send + Sync {
    fn id(&self) -> &str;

    fn score(&self, question: &str) -> Result<QuestionScore, ScorerError>;

    /// Scores a candidate set; a failure on any member fails the batch.
    fn score_batch(&self, questions: &[String]) -> Result<Vec<QuestionScore>, ScorerError> {
        questions.iter().map(|q| self.score(q)).collect()
    }
}

/// Lowercased tokens with leading and trailing punctuation split off.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for word in text.split_whitespace() {
        let word = word.to_lowercase();
        let lead = word.len() - word.trim_start_matches(is_split_punct).len();
        let end = word.trim_end_matches(is_split_punct).len().max(lead);
        out.extend(word[..lead].chars().map(String::from));
        if lead < end {
            out.push(word[lead..end].to_string());
        }
        out.extend(word[end..].chars().map(String::from));
    }
    out
}

fn is_split_punct(c: char) -> bool {
    matches!(c, '.' | ',' | '?' | '!' | ';' | ':' | '"' | '(' | ')')
}

fn is_sentence_end(token: &str) -> bool {
    matches!(token, "." | "?" | "!")
}

/// Sentences of a training text: one per line, further split after
/// sentence-final punctuation.
fn sentences(text: &str) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut current = Vec::new();
        for token in tokenize(line) {
            let ends = is_sentence_end(&token);
            current.push(token);
            if ends {
                out.push(std::mem::take(&mut current));
            }
        }
        if !current.is_empty() {
            out.push(current);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct NgramModel {
    order: usize,
    smoothing: f64,
    /// Counts for every order 1..=order, keyed by space-joined tokens.
    counts: BTreeMap<String, u64>,
    context_totals: HashMap<String, u64>,
    vocabulary: usize,
    token_total: u64,
}

pub fn train_ngram(corpus: &str, order: usize) -> Result<NgramModel, ScorerError> {
    NgramModel::train(corpus, order, 1.0)
}

impl NgramModel {
    pub fn train(corpus: &str, order: usize, smoothing: f64) -> Result<Self, ScorerError> {
        check_params(order, smoothing)?;
        let sentences = sentences(corpus);
        if sentences.is_empty() {
            return Err(ScorerError::EmptyCorpus);
        }
        let mut counts = BTreeMap::new();
        for sentence in &sentences {
            let padded = pad(order, sentence.iter().map(String::as_str));
            for n in 1..=order {
                for gram in padded.windows(n) {
                    if n < order && gram.iter().all(|t| *t == BOS) {
                        continue;
                    }
                    *counts.entry(gram.join(" ")).or_insert(0) += 1;
                }
            }
        }
        Ok(NgramModel::from_counts(order, smoothing, counts))
    }

    fn from_counts(order: usize, smoothing: f64, counts: BTreeMap<String, u64>) -> Self {
        let mut context_totals: HashMap<String, u64> = HashMap::new();
        let mut vocabulary = 1;
        let mut token_total = 0;
        for (gram, &count) in &counts {
            let tokens: Vec<&str> = gram.split(' ').collect();
            if tokens.len() == order {
                *context_totals.entry(tokens[..order - 1].join(" ")).or_insert(0) += count;
            } else if tokens.len() == 1 && tokens[0] != BOS {
                vocabulary += 1;
                token_total += count;
            }
        }
        NgramModel {
            order,
            smoothing,
            counts,
            context_totals,
            vocabulary,
            token_total,
        }
    }

    /// The pretrained model shipped with the crate.
    pub fn bundled() -> Self {
        NgramModel::parse(BUNDLED_MODEL).expect("bundled model is valid")
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    /// Distinct scored tokens, counting `</s>` and the unknown token.
    pub fn vocabulary_size(&self) -> usize {
        self.vocabulary
    }

    pub fn count(&self, tokens: &[&str]) -> u64 {
        self.counts.get(&tokens.join(" ")).copied().unwrap_or(0)
    }

    fn known(&self, token: &str) -> bool {
        token == EOS || self.counts.contains_key(token)
    }

    fn conditional_logprob(&self, context: &[&str], token: &str) -> f64 {
        let mut gram = context.join(" ");
        let total = self.context_totals.get(&gram).copied().unwrap_or(0);
        gram.push(' ');
        gram.push_str(token);
        let count = self.counts.get(&gram).copied().unwrap_or(0);
        let k = self.smoothing;
        ((count as f64 + k) / (total as f64 + k * self.vocabulary as f64)).ln()
    }

    fn unigram_logprob(&self, token: &str) -> f64 {
        let k = self.smoothing;
        let count = self.counts.get(token).copied().unwrap_or(0);
        ((count as f64 + k) / (self.token_total as f64 + k * self.vocabulary as f64)).ln()
    }

    /// Mean per-token log-probability of `text`, `</s>` included. A single
    /// token has no context and is scored by its smoothed unigram
    /// probability.
    pub fn logprob(&self, text: &str) -> Result<f64, ScorerError> {
        let tokens: Vec<String> = tokenize(text)
            .into_iter()
            .map(|t| if self.known(&t) { t } else { UNK.to_string() })
            .collect();
        match tokens.len() {
            0 => Err(ScorerError::EmptyQuestion),
            1 => Ok(self.unigram_logprob(&tokens[0])),
            _ => {
                let padded = pad(self.order, tokens.iter().map(String::as_str));
                let grams = padded.windows(self.order);
                let n = grams.len();
                let sum: f64 = grams
                    .map(|g| self.conditional_logprob(&g[..self.order - 1], g[self.order - 1]))
                    .sum();
                Ok(sum / n as f64)
            }
        }
    }

    pub fn serialize(&self) -> String {
        let mut out = format!("{HEADER} order={} smoothing={}\n", self.order, self.smoothing);
        for (gram, count) in &self.counts {
            let _ = writeln!(out, "{gram}\t{count}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, ScorerError> {
        let bad = |line: usize, reason: &str| ScorerError::ModelFormat {
            line,
            reason: reason.to_string(),
        };
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad(1, "missing header"))?;
        let rest = header
            .strip_prefix(HEADER)
            .ok_or_else(|| bad(1, "expected `ngram-model v1` header"))?;
        let mut order = None;
        let mut smoothing = None;
        for field in rest.split_whitespace() {
            match field.split_once('=') {
                Some(("order", v)) => order = v.parse::<usize>().ok(),
                Some(("smoothing", v)) => smoothing = v.parse::<f64>().ok(),
                _ => return Err(bad(1, "unknown header field")),
            }
        }
        let (Some(order), Some(smoothing)) = (order, smoothing) else {
            return Err(bad(1, "header needs order and smoothing"));
        };
        check_params(order, smoothing)?;
        let mut counts = BTreeMap::new();
        for (i, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let (gram, count) = line
                .split_once('\t')
                .ok_or_else(|| bad(i + 2, "expected tokens<TAB>count"))?;
            let count: u64 = count
                .trim()
                .parse()
                .map_err(|_| bad(i + 2, "count is not an integer"))?;
            let n = gram.split(' ').count();
            if gram.is_empty() || n > order || count == 0 {
                return Err(bad(i + 2, "bad n-gram entry"));
            }
            counts.insert(gram.to_string(), count);
        }
        if counts.is_empty() {
            return Err(ScorerError::EmptyCorpus);
        }
        Ok(NgramModel::from_counts(order, smoothing, counts))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScorerError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ScorerError::Io {
            path: path.display().to_string(),
            source,
        })?;
        NgramModel::parse(&text)
    }
}

fn check_params(order: usize, smoothing: f64) -> Result<(), ScorerError> {
    if order < 2 {
        return Err(ScorerError::InvalidOrder(order));
    }
    if !(smoothing.is_finite() && smoothing > 0.0) {
        return Err(ScorerError::InvalidSmoothing(smoothing));
    }
    Ok(())
}

fn pad<'a>(order: usize, tokens: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
    let mut padded = vec![BOS; order - 1];
    padded.extend(tokens);
    padded.push(EOS);
    padded
}

impl QuestionScorer for NgramModel {
    fn id(&self) -> &str {
        BASELINE_ID
    }

    fn score(&self, question: &str) -> Result<QuestionScore, ScorerError> {
        Ok(QuestionScore {
            value: self.logprob(question)?,
            scorer_id: BASELINE_ID.to_string(),
        })
    }
}

/// Counting semaphore bounding in-flight requests.
#[derive(Debug)]
struct Limiter {
    free: Mutex<usize>,
    ready: Condvar,
}

impl Limiter {
    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.ready.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        Permit(self)
    }
}

struct Permit<'a>(&'a Limiter);

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.ready.notify_one();
    }
}

#[derive(Serialize)]
struct ScoreRequest<'a> {
    text: &'a str,
}

#[derive(Deserialize)]
struct ScoreReply {
    logprob: f64,
}

/// Client for an HTTP service answering `{"text": q}` with
/// `{"logprob": x}`.
#[derive(Debug)]
pub struct RemoteScorer {
    endpoint: String,
    agent: ureq::Agent,
    limiter: Limiter,
}

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(5);
pub const DEFAULT_MAX_IN_FLIGHT: usize = 4;

impl RemoteScorer {
    pub fn new(endpoint: impl Into<String>) -> Self {
        RemoteScorer::with_limits(endpoint, DEFAULT_TIMEOUT, DEFAULT_MAX_IN_FLIGHT)
    }

    pub fn with_limits(endpoint: impl Into<String>, timeout: Duration, max_in_flight: usize) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(true)
            .build()
            .into();
        RemoteScorer {
            endpoint: endpoint.into(),
            agent,
            limiter: Limiter {
                free: Mutex::new(max_in_flight.max(1)),
                ready: Condvar::new(),
            },
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }
}

pub fn remote_score(endpoint: &str, question: &str) -> Result<QuestionScore, ScorerError> {
    RemoteScorer::new(endpoint).score(question)
}

impl QuestionScorer for RemoteScorer {
    fn id(&self) -> &str {
        REMOTE_ID
    }

    fn score(&self, question: &str) -> Result<QuestionScore, ScorerError> {
        if question.trim().is_empty() {
            return Err(ScorerError::EmptyQuestion);
        }
        let unavailable = |e: ureq::Error| ScorerError::Unavailable(e.to_string());
        let _permit = self.limiter.acquire();
        let mut response = self
            .agent
            .post(&self.endpoint)
            .send_json(ScoreRequest { text: question })
            .map_err(unavailable)?;
        let reply: ScoreReply = response.body_mut().read_json().map_err(unavailable)?;
        if !reply.logprob.is_finite() {
            return Err(ScorerError::Unavailable(format!(
                "non-finite logprob {}",
                reply.logprob
            )));
        }
        Ok(QuestionScore {
            value: reply.logprob,
            scorer_id: REMOTE_ID.to_string(),
        })
    }
}

/// Scores with `primary`, re-scoring the whole candidate set with the
/// baseline when the primary fails, so candidates are always compared on
/// one scale.
pub struct FallbackScorer {
    primary: Box<dyn QuestionScorer>,
    baseline: Arc<NgramModel>,
    fallbacks: AtomicUsize,
}

impl FallbackScorer {
    pub fn new(primary: Box<dyn QuestionScorer>, baseline: Arc<NgramModel>) -> Self {
        FallbackScorer {
            primary,
            baseline,
            fallbacks: AtomicUsize::new(0),
        }
    }

    /// Number of candidate sets that fell back to the baseline.
    pub fn fallback_count(&self) -> usize {
        self.fallbacks.load(Ordering::Relaxed)
    }
}

impl QuestionScorer for FallbackScorer {
    fn id(&self) -> &str {
        self.primary.id()
    }

    fn score(&self, question: &str) -> Result<QuestionScore, ScorerError> {
        Ok(self.score_batch(std::slice::from_ref(&question.to_string()))?.remove(0))
    }

    fn score_batch(&self, questions: &[String]) -> Result<Vec<QuestionScore>, ScorerError> {
        match self.primary.score_batch(questions) {
            Ok(scores) => Ok(scores),
            Err(ScorerError::EmptyQuestion) => Err(ScorerError::EmptyQuestion),
            Err(e) => {
                if self.fallbacks.fetch_add(1, Ordering::Relaxed) == 0 {
                    log::warn!("{e}; falling back to the baseline scorer");
                } else {
                    log::debug!("{e}; falling back to the baseline scorer");
                }
                self.baseline.score_batch(questions)
            }
        }
    }
}
