//! Sentence annotations read from CoNLL-U, plus concept-to-token alignment,
//! tense lookup and dependency sub-tree spans.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::preprocess::{preorder_entries, CondensedNode};
use crate::templates::Tense;

/// Universal POS tags.
#[allow(clippy::upper_case_acronyms)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Upos {
    ADJ,
    ADP,
    ADV,
    AUX,
    CCONJ,
    DET,
    INTJ,
    NOUN,
    NUM,
    PART,
    PRON,
    PROPN,
    PUNCT,
    SCONJ,
    SYM,
    VERB,
    X,
}

impl Upos {
    pub const ALL: [Upos; 17] = [
        Upos::ADJ,
        Upos::ADP,
        Upos::ADV,
        Upos::AUX,
        Upos::CCONJ,
        Upos::DET,
        Upos::INTJ,
        Upos::NOUN,
        Upos::NUM,
        Upos::PART,
        Upos::PRON,
        Upos::PROPN,
        Upos::PUNCT,
        Upos::SCONJ,
        Upos::SYM,
        Upos::VERB,
        Upos::X,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Upos::ADJ => "ADJ",
            Upos::ADP => "ADP",
            Upos::ADV => "ADV",
            Upos::AUX => "AUX",
            Upos::CCONJ => "CCONJ",
            Upos::DET => "DET",
            Upos::INTJ => "INTJ",
            Upos::NOUN => "NOUN",
            Upos::NUM => "NUM",
            Upos::PART => "PART",
            Upos::PRON => "PRON",
            Upos::PROPN => "PROPN",
            Upos::PUNCT => "PUNCT",
            Upos::SCONJ => "SCONJ",
            Upos::SYM => "SYM",
            Upos::VERB => "VERB",
            Upos::X => "X",
        }
    }
}

impl fmt::Display for Upos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownUpos(pub String);

impl FromStr for Upos {
    type Err = UnknownUpos;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Upos::ALL
            .iter()
            .copied()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| UnknownUpos(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    /// 1-based position in the sentence.
    pub index: usize,
    pub surface: String,
    pub lemma: String,
    pub upos: Upos,
    pub xpos: String,
    pub feats: String,
    /// Governor index, 0 for the root.
    pub head: usize,
    pub deprel: String,
    pub space_after: bool,
}

impl Token {
    /// Value of a `Key=Value` morphological feature.
    pub fn feature(&self, key: &str) -> Option<&str> {
        self.feats
            .split('|')
            .filter_map(|kv| kv.split_once('='))
            .find(|(k, _)| *k == key)
            .map(|(_, v)| v)
    }

    pub fn is_verb(&self) -> bool {
        matches!(self.upos, Upos::VERB | Upos::AUX)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceAnnotation {
    pub sentence_id: String,
    pub text: String,
    pub tokens: Vec<Token>,
}

impl SentenceAnnotation {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn token(&self, index: usize) -> Option<&Token> {
        index.checked_sub(1).and_then(|i| self.tokens.get(i))
    }

    pub fn dependents(&self, index: usize) -> impl Iterator<Item = &Token> {
        self.tokens.iter().filter(move |t| t.head == index)
    }

    /// Surfaces of tokens `start..=end` joined by single spaces.
    pub fn span_text(&self, start: usize, end: usize) -> String {
        (start..=end)
            .filter_map(|i| self.token(i))
            .map(|t| t.surface.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Text rebuilt from surfaces, honouring `SpaceAfter=No`.
    pub fn reconstructed_text(&self) -> String {
        let mut out = String::new();
        for token in &self.tokens {
            out.push_str(&token.surface);
            if token.space_after {
                out.push(' ');
            }
        }
        out.trim_end().to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConlluError {
    #[error("line {line}: expected 10 tab-separated columns, found {found}")]
    BadColumnCount { line: usize, found: usize },
    #[error("line {line}: head is not an integer")]
    NonIntegerHead { line: usize },
    #[error("line {line}: token id out of sequence")]
    BadTokenId { line: usize },
    #[error("line {line}: unknown UPOS tag `{tag}`")]
    UnknownUpos { line: usize, tag: String },
    #[error("line {line}: head points outside the sentence")]
    HeadOutOfRange { line: usize },
    #[error("sentence `{sentence}`: dependency heads contain a cycle")]
    CyclicTree { sentence: String },
    #[error("sentence `{sentence}`: expected exactly one root, found {count}")]
    RootCount { sentence: String, count: usize },
}

pub fn parse_conllu(text: &str) -> Result<Vec<SentenceAnnotation>, ConlluError> {
    let mut sentences = Vec::new();
    let mut block = Block::default();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            if let Some(sentence) = block.finish(sentences.len() + 1)? {
                sentences.push(sentence);
            }
            block = Block::default();
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                match key.trim() {
                    "sent_id" => block.sentence_id = Some(value.trim().to_string()),
                    "text" => block.text = Some(value.trim().to_string()),
                    _ => {}
                }
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(ConlluError::BadColumnCount {
                line: line_no,
                found: cols.len(),
            });
        }
        // Multiword token ranges and empty nodes.
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let index: usize = cols[0].parse().map_err(|_| ConlluError::BadTokenId { line: line_no })?;
        if index != block.tokens.len() + 1 {
            return Err(ConlluError::BadTokenId { line: line_no });
        }
        let upos = match cols[3] {
            "_" => Upos::X,
            tag => tag.parse().map_err(|_| ConlluError::UnknownUpos {
                line: line_no,
                tag: tag.to_string(),
            })?,
        };
        let head: usize = cols[6]
            .parse()
            .map_err(|_| ConlluError::NonIntegerHead { line: line_no })?;
        let field = |s: &str| if s == "_" { String::new() } else { s.to_string() };
        let surface = cols[1].to_string();
        let lemma = match cols[2] {
            "_" if cols[1] != "_" => surface.clone(),
            l => l.to_string(),
        };
        block.lines.push(line_no);
        block.tokens.push(Token {
            index,
            surface,
            lemma,
            upos,
            xpos: field(cols[4]),
            feats: field(cols[5]),
            head,
            deprel: field(cols[7]),
            space_after: !cols[9].split('|').any(|m| m == "SpaceAfter=No"),
        });
    }
    if let Some(sentence) = block.finish(sentences.len() + 1)? {
        sentences.push(sentence);
    }
    Ok(sentences)
}

#[derive(Default)]
struct Block {
    sentence_id: Option<String>,
    text: Option<String>,
    tokens: Vec<Token>,
    lines: Vec<usize>,
}

impl Block {
    fn finish(&mut self, ordinal: usize) -> Result<Option<SentenceAnnotation>, ConlluError> {
        if self.tokens.is_empty() {
            return Ok(None);
        }
        let n = self.tokens.len();
        for (token, &line) in self.tokens.iter().zip(&self.lines) {
            if token.head > n {
                return Err(ConlluError::HeadOutOfRange { line });
            }
        }
        let sentence_id = self.sentence_id.take().unwrap_or_else(|| ordinal.to_string());
        let roots = self.tokens.iter().filter(|t| t.head == 0).count();
        if heads_have_cycle(&self.tokens) {
            return Err(ConlluError::CyclicTree { sentence: sentence_id });
        }
        if roots != 1 {
            return Err(ConlluError::RootCount {
                sentence: sentence_id,
                count: roots,
            });
        }
        let mut sentence = SentenceAnnotation {
            sentence_id,
            text: String::new(),
            tokens: std::mem::take(&mut self.tokens),
        };
        sentence.text = self.text.take().unwrap_or_else(|| sentence.reconstructed_text());
        Ok(Some(sentence))
    }
}

fn heads_have_cycle(tokens: &[Token]) -> bool {
    let n = tokens.len();
    tokens.iter().any(|start| {
        let mut current = start.index;
        for _ in 0..=n {
            let head = tokens[current - 1].head;
            if head == 0 {
                return false;
            }
            current = head;
        }
        true
    })
}

/// Where a condensed node was found in the sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeAlignment {
    Token(usize),
    /// Contiguous inclusive token range for multi-word concepts.
    Range(usize, usize),
    Unaligned,
}

impl NodeAlignment {
    pub fn is_aligned(self) -> bool {
        !matches!(self, NodeAlignment::Unaligned)
    }

    pub fn bounds(self) -> Option<(usize, usize)> {
        match self {
            NodeAlignment::Token(i) => Some((i, i)),
            NodeAlignment::Range(a, b) => Some((a, b)),
            NodeAlignment::Unaligned => None,
        }
    }
}

/// Per-position alignment, indexed by pre-order position of the tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alignment {
    nodes: Vec<NodeAlignment>,
}

impl Alignment {
    pub fn get(&self, position: usize) -> NodeAlignment {
        self.nodes.get(position).copied().unwrap_or(NodeAlignment::Unaligned)
    }

    pub fn positions(&self) -> &[NodeAlignment] {
        &self.nodes
    }

    /// Surface text of an aligned position.
    pub fn surface(&self, position: usize, ann: &SentenceAnnotation) -> Option<String> {
        self.get(position).bounds().map(|(a, b)| ann.span_text(a, b))
    }

    /// The token standing for the position: the single token, or the
    /// dependency head of a multi-word range.
    pub fn head_token(&self, position: usize, ann: &SentenceAnnotation) -> Option<usize> {
        match self.get(position) {
            NodeAlignment::Token(i) => Some(i),
            NodeAlignment::Range(a, b) => Some(range_head(ann, a, b)),
            NodeAlignment::Unaligned => None,
        }
    }
}

/// First token in `start..=end` whose governor lies outside the range.
pub fn range_head(ann: &SentenceAnnotation, start: usize, end: usize) -> usize {
    (start..=end)
        .find(|&i| ann.token(i).is_some_and(|t| t.head < start || t.head > end))
        .unwrap_or(end)
}

/// Concepts that name a frame or entity type rather than a sentence word.
fn is_abstract(node: &CondensedNode) -> bool {
    if node.is_constant() {
        return false;
    }
    let label = node.concept.label();
    let uncondensed = node.concept_text == label;
    matches!(label, "amr-unknown" | "multi-sentence")
        || label.ends_with("-91")
        || (uncondensed && (label.ends_with("-entity") || label.ends_with("-quantity")))
}

pub fn align_concepts(tree: &CondensedNode, ann: &SentenceAnnotation) -> Alignment {
    let entries = preorder_entries(tree);
    let mut nodes = vec![NodeAlignment::Unaligned; entries.len()];
    let mut used = vec![false; ann.len() + 1];
    let mut by_variable = HashMap::new();

    for entry in entries.iter().filter(|e| !e.node.is_reentrant) {
        let node = entry.node;
        if is_abstract(node) {
            continue;
        }
        let words: Vec<String> = node.plain_text().split_whitespace().map(str::to_lowercase).collect();
        let found = match words.len() {
            0 => None,
            1 => ann
                .tokens
                .iter()
                .find(|t| !used[t.index] && t.lemma.to_lowercase() == words[0])
                .map(|t| NodeAlignment::Token(t.index)),
            k => (1..=(ann.len() + 1).saturating_sub(k))
                .find(|&start| {
                    words.iter().enumerate().all(|(offset, word)| {
                        let t = &ann.tokens[start + offset - 1];
                        !used[t.index] && (t.surface.to_lowercase() == *word || t.lemma.to_lowercase() == *word)
                    })
                })
                .map(|start| NodeAlignment::Range(start, start + k - 1)),
        };
        if let Some(alignment) = found {
            if let Some((a, b)) = alignment.bounds() {
                used[a..=b].iter_mut().for_each(|u| *u = true);
            }
            nodes[entry.index] = alignment;
            if let Some(var) = &node.variable {
                by_variable.insert(var.clone(), alignment);
            }
        }
    }

    for entry in entries.iter().filter(|e| e.node.is_reentrant) {
        if let Some(alignment) = entry.node.variable.as_ref().and_then(|v| by_variable.get(v)) {
            nodes[entry.index] = *alignment;
        }
    }
    Alignment { nodes }
}

fn is_past_marked(token: &Token) -> bool {
    token.feature("Tense") == Some("Past") || matches!(token.xpos.as_str(), "VBD" | "VBN")
}

pub fn infer_tense(ann: &SentenceAnnotation, token_index: usize) -> Tense {
    let Some(token) = ann.token(token_index) else {
        return Tense::Present;
    };
    if !token.is_verb() {
        return Tense::Present;
    }
    let mut auxiliaries = ann.dependents(token_index).filter(|t| t.deprel.starts_with("aux"));
    let aux: Vec<&Token> = auxiliaries.by_ref().collect();
    if aux.iter().any(|t| {
        let lemma = t.lemma.to_lowercase();
        let surface = t.surface.to_lowercase();
        matches!(lemma.as_str(), "will" | "shall") || matches!(surface.as_str(), "will" | "shall" | "'ll")
    }) {
        return Tense::Future;
    }
    if is_past_marked(token) || aux.iter().any(|t| is_past_marked(t)) {
        return Tense::Past;
    }
    Tense::Present
}

/// Inclusive `[leftmost, rightmost]` bounds of the tokens dominated by
/// `token_index`, the token itself included.
pub fn subtree_span(ann: &SentenceAnnotation, token_index: usize) -> Result<(usize, usize), ConlluError> {
    let n = ann.len();
    let cyclic = || ConlluError::CyclicTree {
        sentence: ann.sentence_id.clone(),
    };
    if token_index == 0 || token_index > n {
        return Err(cyclic());
    }
    let mut left = token_index;
    let mut right = token_index;
    for token in &ann.tokens {
        let mut current = token.index;
        let mut steps = 0;
        let dominated = loop {
            if current == token_index {
                break true;
            }
            if current == 0 || current > n {
                break false;
            }
            steps += 1;
            if steps > n {
                return Err(cyclic());
            }
            current = ann.tokens[current - 1].head;
        };
        if dominated {
            left = left.min(token.index);
            right = right.max(token.index);
        }
    }
    Ok((left, right))
}
