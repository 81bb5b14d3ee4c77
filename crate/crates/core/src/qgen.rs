//! Question generation: template filling, candidate ranking and
//! verb-sense questions.

use thiserror::Error;

use crate::agen::{node_label, Answer, AnswerKind};
use crate::annotate::{infer_tense, Alignment, SentenceAnnotation, Upos};
use crate::corpus::QaPair;
use crate::preprocess::{CondensedNode, PreorderEntry};
use crate::scorer::{QuestionScore, QuestionScorer, ScorerError};
use crate::templates::{select_templates, Template, TemplateStore, Tense};

pub const SENSE_TEMPLATE_ID: &str = "sense";
/// Relation recorded for sense questions, which are about the node's
/// instance triple.
pub const SENSE_RELATION: &str = "instance";

#[derive(Debug, Error)]
pub enum QgenError {
    #[error("template `{template}` has {expected} blanks, got {got} fills")]
    ArityMismatch {
        template: String,
        expected: usize,
        got: usize,
    },
    #[error(transparent)]
    Scorer(#[from] ScorerError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuestionCandidate {
    pub template_id: String,
    pub filled_text: String,
    pub fill_words: Vec<String>,
    /// Pre-order position of the node the question is asked for.
    pub node_position: usize,
    pub relation: String,
    /// Every blank was filled with an aligned sentence word.
    pub aligned_fill: bool,
}

pub fn fill_template(template: &Template, fills: &[String]) -> Result<String, QgenError> {
    if fills.len() != template.blank_count() {
        return Err(QgenError::ArityMismatch {
            template: template.id.clone(),
            expected: template.blank_count(),
            got: fills.len(),
        });
    }
    let mut out = String::with_capacity(template.pattern.len() + 16);
    let mut rest = template.pattern.as_str();
    while let Some(open) = rest.find('{') {
        let close = open + rest[open..].find('}').expect("validated pattern");
        let index: usize = rest[open + 1..close].parse().expect("validated pattern");
        out.push_str(&rest[..open]);
        out.push_str(&fills[index]);
        rest = &rest[close + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

/// How one side of a relation is realized for template filling.
struct Filler {
    text: String,
    pos: Upos,
    aligned: bool,
}

fn filler(entry: &PreorderEntry<'_>, ann: &SentenceAnnotation, alignment: &Alignment) -> (Filler, Option<usize>) {
    let head = alignment.head_token(entry.index, ann);
    let node = entry.node;
    let filler = match (alignment.surface(entry.index, ann), head.and_then(|h| ann.token(h))) {
        (Some(text), Some(token)) => Filler {
            text,
            pos: token.upos,
            aligned: true,
        },
        _ => Filler {
            text: node.plain_text().to_string(),
            pos: unaligned_pos(node),
            aligned: false,
        },
    };
    (filler, head)
}

fn unaligned_pos(node: &CondensedNode) -> Upos {
    if node.is_constant() && node.concept_text.chars().all(|c| c.is_ascii_digit() || c == '.') {
        Upos::NUM
    } else if node.concept.sense().is_some() {
        Upos::VERB
    } else {
        Upos::NOUN
    }
}

/// Parent and child of a relation with inverse edges flipped, so the
/// predicate side comes first.
fn orient<'a, 'b>(
    node: &'b PreorderEntry<'a>,
    parent: &'b PreorderEntry<'a>,
) -> (&'b PreorderEntry<'a>, &'b PreorderEntry<'a>) {
    match &node.node.relation_to_parent {
        Some(r) if r.is_inverse() => (node, parent),
        _ => (parent, node),
    }
}

/// The tree position that answers the question generated for `node`.
pub fn answer_position<'a, 'b>(node: &'b PreorderEntry<'a>, parent: &'b PreorderEntry<'a>) -> &'b PreorderEntry<'a> {
    orient(node, parent).1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SkipReason {
    /// The store has no template for the relation (or its thematic role).
    NoTemplate,
    /// Templates exist, but none accepts the tense and parts of speech.
    PosMismatch,
    /// The best question duplicated an earlier pair of the sentence.
    Duplicate,
}

impl SkipReason {
    pub fn as_str(self) -> &'static str {
        match self {
            SkipReason::NoTemplate => "no_template",
            SkipReason::PosMismatch => "pos_mismatch",
            SkipReason::Duplicate => "duplicate",
        }
    }
}

pub fn generate_candidates(
    node: &PreorderEntry<'_>,
    parent: &PreorderEntry<'_>,
    store: &TemplateStore,
    ann: &SentenceAnnotation,
    alignment: &Alignment,
) -> Vec<QuestionCandidate> {
    candidates_or_skip(node, parent, store, ann, alignment).unwrap_or_default()
}

/// Candidates for `node`, or why there are none.
pub fn candidates_or_skip(
    node: &PreorderEntry<'_>,
    parent: &PreorderEntry<'_>,
    store: &TemplateStore,
    ann: &SentenceAnnotation,
    alignment: &Alignment,
) -> Result<Vec<QuestionCandidate>, SkipReason> {
    let Some(relation) = &node.node.relation_to_parent else {
        return Err(SkipReason::NoTemplate);
    };
    let (predicate, argument) = orient(node, parent);
    let (pred_fill, pred_token) = filler(predicate, ann, alignment);
    let (arg_fill, _) = filler(argument, ann, alignment);
    let tense = pred_token.map_or(Tense::Present, |t| infer_tense(ann, t));
    let concept = &predicate.node.concept;

    if select_templates(store, relation, Some(concept), Tense::Any, None).is_empty() {
        return Err(SkipReason::NoTemplate);
    }
    let mut out = Vec::new();
    for template in select_templates(store, relation, Some(concept), tense, Some(pred_fill.pos)) {
        let fills: Vec<&Filler> = [&pred_fill, &arg_fill]
            .into_iter()
            .take(template.blank_count())
            .collect();
        if template.blank_count() > 2 || !fills.iter().enumerate().all(|(i, f)| template.accepts(i, f.pos)) {
            continue;
        }
        let words: Vec<String> = fills.iter().map(|f| f.text.clone()).collect();
        let Ok(filled_text) = fill_template(template, &words) else {
            continue;
        };
        out.push(QuestionCandidate {
            template_id: template.id.clone(),
            filled_text,
            fill_words: words,
            node_position: node.index,
            relation: relation.as_str().to_string(),
            aligned_fill: !fills.is_empty() && fills.iter().all(|f| f.aligned),
        });
    }
    if out.is_empty() {
        Err(SkipReason::PosMismatch)
    } else {
        Ok(out)
    }
}

/// Highest-scoring candidate; the earliest candidate wins ties.
pub fn best_question(
    candidates: Vec<QuestionCandidate>,
    scorer: &dyn QuestionScorer,
) -> Result<Option<(QuestionCandidate, QuestionScore)>, ScorerError> {
    if candidates.is_empty() {
        return Ok(None);
    }
    let texts: Vec<String> = candidates.iter().map(|c| c.filled_text.clone()).collect();
    let scores = scorer.score_batch(&texts)?;
    Ok(pick_best(candidates, scores))
}

/// First index holding the strict maximum; uses only score ordering.
pub fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if best.is_none_or(|b| v > values[b]) {
            best = Some(i);
        }
    }
    best
}

fn pick_best(
    candidates: Vec<QuestionCandidate>,
    scores: Vec<QuestionScore>,
) -> Option<(QuestionCandidate, QuestionScore)> {
    let values: Vec<f64> = scores.iter().map(|s| s.value).collect();
    let best = argmax(&values)?;
    candidates.into_iter().zip(scores).nth(best)
}

pub fn sense_question_text(surface: &str) -> String {
    format!("What is the sense of {surface} ?")
}

/// A question asking for the frame sense of a predicate aligned to a verb.
/// Reentrant positions yield nothing; their definition already asked.
pub fn sense_question(
    entry: &PreorderEntry<'_>,
    ann: &SentenceAnnotation,
    alignment: &Alignment,
    scorer: &dyn QuestionScorer,
) -> Result<Option<QaPair>, ScorerError> {
    let node = entry.node;
    if node.is_reentrant || node.concept.sense().is_none() {
        return Ok(None);
    }
    let Some(token) = alignment.head_token(entry.index, ann).and_then(|h| ann.token(h)) else {
        return Ok(None);
    };
    if !token.is_verb() {
        return Ok(None);
    }
    let surface = alignment
        .surface(entry.index, ann)
        .unwrap_or_else(|| token.surface.clone());
    let question = sense_question_text(&surface);
    let score = scorer.score_batch(std::slice::from_ref(&question))?.remove(0);
    let label = node_label(node, entry.index);
    Ok(Some(QaPair {
        sentence_id: ann.sentence_id.clone(),
        question,
        answer: Answer {
            kind: AnswerKind::Sense,
            span: None,
            text: node.concept.label().to_string(),
            source_node: label.clone(),
        },
        relation: SENSE_RELATION.to_string(),
        node: label,
        template_id: SENSE_TEMPLATE_ID.to_string(),
        score: score.value,
        scorer_id: score.scorer_id,
    }))
}
