//! Graph preprocessing: turns a parsed graph into the condensed tree that
//! question generation walks.
//!
//! Passes run in a fixed order: ignored relations are dropped, entity
//! subgraphs are condensed into single multi-word concepts, and literal
//! `:opN` children are merged into their parent.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::penman::{quote, strip_sense, AmrGraph, Concept, NodeId, RelationName, Variable};

pub const DEFAULT_ENTITY_CONCEPTS: &[&str] = &[
    "date-entity",
    "temporal-quantity",
    "distance-entity",
    "area-entity",
    "volume-entity",
];

pub const DEFAULT_IGNORED_RELATIONS: &[&str] = &["polarity", "wiki", "polite", "polite-of", "mode"];

const DATE_FIELDS: &[&str] = &["day", "month", "year", "weekday", "time"];
const QUANTITY_FIELDS: &[&str] = &["quant", "unit"];

const MONTHS: [&str; 12] = [
    "January",
    "February",
    "March",
    "April",
    "May",
    "June",
    "July",
    "August",
    "September",
    "October",
    "November",
    "December",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    pub entity_concepts: BTreeSet<String>,
    pub ignored_relations: BTreeSet<String>,
    pub sense_suffix_stripping: bool,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            entity_concepts: DEFAULT_ENTITY_CONCEPTS.iter().map(|s| s.to_string()).collect(),
            ignored_relations: DEFAULT_IGNORED_RELATIONS.iter().map(|s| s.to_string()).collect(),
            sense_suffix_stripping: false,
        }
    }
}

/// A position in the condensed tree.
#[derive(Debug, Clone, PartialEq)]
pub struct CondensedNode {
    pub variable: Option<Variable>,
    /// The node's own concept as it appeared in the graph.
    pub concept: Concept,
    /// Text used for alignment and answers; multi-word after condensation.
    pub concept_text: String,
    /// Concepts of the positions folded into this one.
    pub source_concepts: Vec<Concept>,
    pub relation_to_parent: Option<RelationName>,
    pub children: Vec<CondensedNode>,
    pub is_reentrant: bool,
}

impl CondensedNode {
    /// Mirrors the PENMAN tree of `graph` without any rewriting.
    pub fn from_graph(graph: &AmrGraph, strip_senses: bool) -> Self {
        lift(graph, graph.root(), None, strip_senses)
    }

    pub fn is_constant(&self) -> bool {
        self.concept.is_constant()
    }

    /// Number of positions in this subtree.
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(CondensedNode::size).sum::<usize>()
    }

    /// `concept_text` without a trailing sense suffix.
    pub fn plain_text(&self) -> &str {
        strip_sense(&self.concept_text)
    }

    /// Single-line PENMAN view; multi-word concept texts are quoted.
    pub fn to_penman(&self) -> String {
        let mut out = String::new();
        self.write_penman(&mut out);
        out
    }

    fn write_penman(&self, out: &mut String) {
        match &self.variable {
            Some(var) if self.is_reentrant => out.push_str(var.as_str()),
            Some(var) => {
                out.push('(');
                out.push_str(var.as_str());
                out.push_str(" / ");
                if self.concept_text.contains(char::is_whitespace) || self.concept_text.is_empty() {
                    out.push_str(&quote(&self.concept_text));
                } else {
                    out.push_str(&self.concept_text);
                }
                for child in &self.children {
                    out.push_str(" :");
                    if let Some(rel) = &child.relation_to_parent {
                        out.push_str(rel.as_str());
                    }
                    out.push(' ');
                    child.write_penman(out);
                }
                out.push(')');
            }
            None => {
                if self.concept.is_quoted() || self.concept_text.contains(char::is_whitespace) {
                    out.push_str(&quote(&self.concept_text));
                } else {
                    out.push_str(&self.concept_text);
                }
            }
        }
    }

    /// Indented one-line-per-position listing used for golden files.
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.render_into(0, &mut out);
        out
    }

    fn render_into(&self, depth: usize, out: &mut String) {
        for _ in 0..depth {
            out.push_str("  ");
        }
        if let Some(rel) = &self.relation_to_parent {
            out.push(':');
            out.push_str(rel.as_str());
            out.push(' ');
        }
        out.push_str(self.variable.as_ref().map_or("_", |v| v.as_str()));
        out.push_str(" / ");
        out.push_str(self.concept.label());
        out.push_str(" => ");
        out.push_str(&quote(&self.concept_text));
        if !self.source_concepts.is_empty() {
            let labels: Vec<&str> = self.source_concepts.iter().map(Concept::label).collect();
            out.push_str(" <- [");
            out.push_str(&labels.join(", "));
            out.push(']');
        }
        if self.is_reentrant {
            out.push_str(" *ref");
        }
        out.push('\n');
        for child in &self.children {
            child.render_into(depth + 1, out);
        }
    }
}

fn lift(graph: &AmrGraph, id: NodeId, relation: Option<RelationName>, strip: bool) -> CondensedNode {
    let node = graph.node(id);
    let concept = node.concept().clone();
    let concept_text = if strip && !concept.is_constant() {
        concept.lemma().to_string()
    } else {
        concept.label().to_string()
    };
    CondensedNode {
        variable: node.variable().cloned(),
        concept,
        concept_text,
        source_concepts: Vec::new(),
        relation_to_parent: relation,
        children: node
            .children()
            .iter()
            .map(|(rel, child)| lift(graph, *child, Some(rel.clone()), strip))
            .collect(),
        is_reentrant: node.is_reentrant_ref(),
    }
}

/// Positions removed by each pass.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PassCounts {
    pub dropped: usize,
    pub absorbed: usize,
}

pub fn drop_ignored(tree: CondensedNode, config: &PreprocessConfig) -> CondensedNode {
    let mut tree = tree;
    drop_ignored_counted(&mut tree, config);
    tree
}

fn drop_ignored_counted(node: &mut CondensedNode, config: &PreprocessConfig) -> usize {
    let mut dropped = 0;
    node.children.retain(|child| {
        let ignored = child
            .relation_to_parent
            .as_ref()
            .is_some_and(|rel| config.ignored_relations.contains(rel.as_str()));
        if ignored {
            dropped += child.size();
        }
        !ignored
    });
    for child in &mut node.children {
        dropped += drop_ignored_counted(child, config);
    }
    dropped
}

pub fn condense_entities(tree: CondensedNode, config: &PreprocessConfig) -> CondensedNode {
    let mut tree = tree;
    condense_counted(&mut tree, config);
    tree
}

fn condense_counted(node: &mut CondensedNode, config: &PreprocessConfig) -> usize {
    let mut absorbed = 0;
    for child in &mut node.children {
        absorbed += condense_counted(child, config);
    }
    if node.is_reentrant || !config.entity_concepts.contains(node.concept.label()) {
        return absorbed;
    }
    let fields = if node.concept.label() == "date-entity" {
        DATE_FIELDS
    } else {
        QUANTITY_FIELDS
    };
    let field_of = |child: &CondensedNode| {
        child
            .relation_to_parent
            .as_ref()
            .filter(|rel| !rel.is_inverse())
            .and_then(|rel| fields.iter().position(|f| *f == rel.as_str()))
    };
    if !node.children.iter().any(|c| field_of(c).is_some()) {
        return absorbed;
    }
    let (mut taken, kept): (Vec<_>, Vec<_>) = std::mem::take(&mut node.children)
        .into_iter()
        .partition(|c| field_of(c).is_some());
    // Stable, so repeated fields keep source order.
    taken.sort_by_key(|c| field_of(c));
    let mut parts = Vec::with_capacity(taken.len());
    for child in &taken {
        let field = fields[field_of(child).unwrap_or(0)];
        parts.push(entity_field_text(field, child.plain_text()));
        absorbed += child.size();
        for inner in preorder(child) {
            node.source_concepts.push(inner.concept.clone());
            node.source_concepts.extend(inner.source_concepts.iter().cloned());
        }
    }
    node.concept_text = parts.join(" ");
    node.children = kept;
    absorbed
}

fn entity_field_text(field: &str, value: &str) -> String {
    match field {
        "month" => match value.parse::<usize>() {
            Ok(m @ 1..=12) => MONTHS[m - 1].to_string(),
            _ => value.to_string(),
        },
        "weekday" => capitalize(value),
        _ => value.to_string(),
    }
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn op_index(rel: &RelationName) -> Option<u32> {
    rel.as_str().strip_prefix("op").and_then(|n| n.parse().ok())
}

fn is_literal_op(child: &CondensedNode) -> bool {
    child.is_constant() && child.children.is_empty() && child.relation_to_parent.as_ref().and_then(op_index).is_some()
}

pub fn merge_ops(tree: CondensedNode) -> CondensedNode {
    let mut tree = tree;
    merge_counted(&mut tree);
    tree
}

fn merge_counted(node: &mut CondensedNode) -> usize {
    let mut absorbed = 0;
    for child in &mut node.children {
        absorbed += merge_counted(child);
    }
    if node.is_reentrant {
        return absorbed;
    }

    let is_name = node.concept.label() == "name";
    let op_children = node
        .children
        .iter()
        .filter(|c| c.relation_to_parent.as_ref().and_then(op_index).is_some())
        .count();
    let literal_ops = node.children.iter().filter(|c| is_literal_op(c)).count();
    if literal_ops > 0 && (is_name || literal_ops == op_children) {
        let (mut ops, kept): (Vec<_>, Vec<_>) = std::mem::take(&mut node.children).into_iter().partition(is_literal_op);
        ops.sort_by_key(|c| c.relation_to_parent.as_ref().and_then(op_index));
        let words: Vec<&str> = ops.iter().map(|c| c.concept_text.as_str()).collect();
        node.concept_text = if is_name {
            words.join(" ")
        } else {
            list_text(node.concept.label(), &words)
        };
        absorbed += ops.len();
        node.source_concepts.extend(ops.iter().map(|c| c.concept.clone()));
        node.children = kept;
    }

    // A merged name stands in for the entity that owns it.
    if let Some(i) = node.children.iter().position(|c| {
        c.relation_to_parent.as_ref().is_some_and(|r| r.as_str() == "name")
            && c.concept.label() == "name"
            && !c.is_reentrant
            && c.children.is_empty()
            && !c.source_concepts.is_empty()
    }) {
        let name = node.children.remove(i);
        node.concept_text = name.concept_text;
        node.source_concepts.push(name.concept);
        node.source_concepts.extend(name.source_concepts);
        absorbed += 1;
    }
    absorbed
}

fn list_text(concept: &str, words: &[&str]) -> String {
    match (concept, words) {
        ("and" | "or", [init @ .., last]) if !init.is_empty() => {
            format!("{} {concept} {last}", init.join(", "))
        }
        _ => words.join(" "),
    }
}

/// Gives reentrant positions the final text of their definition.
fn resolve_references(tree: &mut CondensedNode) {
    let mut texts = HashMap::new();
    collect_definitions(tree, &mut texts);
    apply_definitions(tree, &texts);
}

fn collect_definitions(node: &CondensedNode, texts: &mut HashMap<Variable, String>) {
    if let (Some(var), false) = (&node.variable, node.is_reentrant) {
        texts.insert(var.clone(), node.concept_text.clone());
    }
    for child in &node.children {
        collect_definitions(child, texts);
    }
}

fn apply_definitions(node: &mut CondensedNode, texts: &HashMap<Variable, String>) {
    if node.is_reentrant {
        if let Some(text) = node.variable.as_ref().and_then(|v| texts.get(v)) {
            node.concept_text = text.clone();
        }
    }
    for child in &mut node.children {
        apply_definitions(child, texts);
    }
}

pub fn preprocess(graph: &AmrGraph, config: &PreprocessConfig) -> CondensedNode {
    preprocess_with_counts(graph, config).0
}

pub fn preprocess_with_counts(graph: &AmrGraph, config: &PreprocessConfig) -> (CondensedNode, PassCounts) {
    let tree = CondensedNode::from_graph(graph, config.sense_suffix_stripping);
    preprocess_tree_with_counts(tree, config)
}

/// Runs the passes on an already lifted (or already preprocessed) tree.
pub fn preprocess_tree(tree: CondensedNode, config: &PreprocessConfig) -> CondensedNode {
    preprocess_tree_with_counts(tree, config).0
}

fn preprocess_tree_with_counts(mut tree: CondensedNode, config: &PreprocessConfig) -> (CondensedNode, PassCounts) {
    let dropped = drop_ignored_counted(&mut tree, config);
    let mut absorbed = condense_counted(&mut tree, config);
    absorbed += merge_counted(&mut tree);
    resolve_references(&mut tree);
    (tree, PassCounts { dropped, absorbed })
}

/// A tree position visited in depth-first pre-order.
#[derive(Debug, Clone, Copy)]
pub struct PreorderEntry<'a> {
    pub index: usize,
    pub parent: Option<usize>,
    pub depth: usize,
    pub node: &'a CondensedNode,
}

pub fn preorder(tree: &CondensedNode) -> Vec<&CondensedNode> {
    preorder_entries(tree).into_iter().map(|e| e.node).collect()
}

pub fn preorder_entries(tree: &CondensedNode) -> Vec<PreorderEntry<'_>> {
    let mut out = Vec::with_capacity(tree.size());
    let mut stack = vec![(tree, None, 0)];
    while let Some((node, parent, depth)) = stack.pop() {
        let index = out.len();
        out.push(PreorderEntry {
            index,
            parent,
            depth,
            node,
        });
        for child in node.children.iter().rev() {
            stack.push((child, Some(index), depth + 1));
        }
    }
    out
}
