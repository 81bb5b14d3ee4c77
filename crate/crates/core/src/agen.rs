//! Answers taken from the dependency sub-tree of a node's aligned word.

use serde::{Deserialize, Serialize};

use crate::annotate::{subtree_span, Alignment, SentenceAnnotation};
use crate::penman::strip_sense;
use crate::preprocess::{CondensedNode, PreorderEntry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerKind {
    /// A contiguous run of sentence tokens.
    Span,
    /// The node's condensed concept text, for nodes with no aligned word.
    ConceptFallback,
    /// A full predicate label answering a sense question.
    Sense,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Answer {
    pub kind: AnswerKind,
    /// 1-based inclusive token range, present for span answers.
    pub span: Option<(usize, usize)>,
    pub text: String,
    pub source_node: String,
}

/// Identifier of a tree position: its variable, or `@N` (pre-order index)
/// for constants.
pub fn node_label(node: &CondensedNode, position: usize) -> String {
    match &node.variable {
        Some(v) => v.to_string(),
        None => format!("@{position}"),
    }
}

pub fn extract_answer(entry: &PreorderEntry<'_>, ann: &SentenceAnnotation, alignment: &Alignment) -> Answer {
    let source_node = node_label(entry.node, entry.index);
    let span = alignment.get(entry.index).bounds().and_then(|(start, end)| {
        let head = alignment.head_token(entry.index, ann)?;
        let (left, right) = subtree_span(ann, head).ok()?;
        Some((left.min(start), right.max(end)))
    });
    match span {
        Some((start, end)) => Answer {
            kind: AnswerKind::Span,
            span: Some((start, end)),
            text: ann.span_text(start, end),
            source_node,
        },
        None => Answer {
            kind: AnswerKind::ConceptFallback,
            span: None,
            text: strip_sense(entry.node.plain_text()).to_string(),
            source_node,
        },
    }
}
