//! PENMAN notation reader and writer.
//!
//! A graph is stored as an arena of tree positions in pre-order. Every
//! variable has exactly one defining position; later bare mentions of the
//! same variable become reentrant references that point back at it.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// Maximum nesting depth accepted by the parser.
pub const MAX_DEPTH: usize = 1000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PenmanError {
    #[error("empty input at offset {offset}")]
    EmptyInput { offset: usize },
    #[error("unbalanced parentheses at offset {offset}")]
    UnbalancedParens { offset: usize },
    #[error("variable `{variable}` defined twice (second definition at offset {offset})")]
    DuplicateVariableDefinition { variable: String, offset: usize },
    #[error("reference to undefined variable `{variable}` at offset {offset}")]
    DanglingVariableReference { variable: String, offset: usize },
    #[error("unterminated string starting at offset {offset}")]
    UnterminatedString { offset: usize },
    #[error("nesting deeper than {MAX_DEPTH} at offset {offset}")]
    NestingTooDeep { offset: usize },
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
}

impl PenmanError {
    pub fn offset(&self) -> usize {
        match self {
            PenmanError::EmptyInput { offset }
            | PenmanError::UnbalancedParens { offset }
            | PenmanError::DuplicateVariableDefinition { offset, .. }
            | PenmanError::DanglingVariableReference { offset, .. }
            | PenmanError::UnterminatedString { offset }
            | PenmanError::NestingTooDeep { offset }
            | PenmanError::Syntax { offset, .. } => *offset,
        }
    }
}

/// Short identifier naming a node, e.g. `b` or `s2`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Variable(String);

impl Variable {
    pub fn new(name: impl Into<String>) -> Self {
        let name = name.into();
        debug_assert!(!name.is_empty());
        Variable(name)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Node label. Predicate frames such as `break-01` carry a sense.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Concept {
    label: String,
    sense: Option<String>,
    is_constant: bool,
    quoted: bool,
}

impl Concept {
    /// A concept in instance position (`x / label`).
    pub fn new(label: impl Into<String>) -> Self {
        let label = label.into();
        let sense = split_sense(&label).map(|(_, s)| s.to_string());
        Concept {
            label,
            sense,
            is_constant: false,
            quoted: false,
        }
    }

    /// An attribute value: number, symbol such as `-`, or quoted string
    /// (stored without its quotes).
    pub fn constant(label: impl Into<String>, quoted: bool) -> Self {
        Concept {
            label: label.into(),
            sense: None,
            is_constant: true,
            quoted,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn sense(&self) -> Option<&str> {
        self.sense.as_deref()
    }

    pub fn is_constant(&self) -> bool {
        self.is_constant
    }

    pub fn is_quoted(&self) -> bool {
        self.quoted
    }

    /// Label without the sense suffix.
    pub fn lemma(&self) -> &str {
        match &self.sense {
            Some(s) => &self.label[..self.label.len() - s.len() - 1],
            None => &self.label,
        }
    }
}

/// Splits `lemma-NN` into its lemma and two-digit sense.
pub fn split_sense(label: &str) -> Option<(&str, &str)> {
    let (lemma, digits) = label.rsplit_once('-')?;
    if lemma.is_empty() || digits.len() != 2 || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    Some((lemma, digits))
}

/// Strips a trailing `-NN` sense suffix from free text.
pub fn strip_sense(text: &str) -> &str {
    split_sense(text).map_or(text, |(lemma, _)| lemma)
}

const NON_INVERSE_OF: &[&str] = &["consist-of", "prep-out-of", "prep-on-behalf-of"];

/// Edge label without its leading colon.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RelationName {
    name: String,
    is_inverse: bool,
}

impl RelationName {
    pub fn new(name: impl Into<String>) -> Self {
        let name = name.into();
        let name = name.strip_prefix(':').map(str::to_string).unwrap_or(name);
        let is_inverse =
            name.len() > 3 && name.ends_with("-of") && !NON_INVERSE_OF.contains(&name.to_ascii_lowercase().as_str());
        RelationName { name, is_inverse }
    }

    pub fn as_str(&self) -> &str {
        &self.name
    }

    pub fn is_inverse(&self) -> bool {
        self.is_inverse
    }

    /// Name with an inverse `-of` suffix removed.
    pub fn base(&self) -> &str {
        if self.is_inverse {
            &self.name[..self.name.len() - 3]
        } else {
            &self.name
        }
    }

    /// Core roles are the numbered arguments ARG0 to ARG5.
    pub fn is_core(&self) -> bool {
        core_index(self.base()).is_some()
    }

    /// `ARGn` in canonical upper case for core roles.
    pub fn core_name(&self) -> Option<String> {
        core_index(self.base()).map(|n| format!("ARG{n}"))
    }
}

fn core_index(name: &str) -> Option<u8> {
    let b = name.as_bytes();
    if b.len() == 4 && b[..3].eq_ignore_ascii_case(b"arg") && (b'0'..=b'5').contains(&b[3]) {
        Some(b[3] - b'0')
    } else {
        None
    }
}

impl fmt::Display for RelationName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

/// One tree position of the graph.
#[derive(Debug, Clone, PartialEq)]
pub struct AmrNode {
    variable: Option<Variable>,
    concept: Concept,
    children: Vec<(RelationName, NodeId)>,
    reference: Option<NodeId>,
}

impl AmrNode {
    pub fn variable(&self) -> Option<&Variable> {
        self.variable.as_ref()
    }

    pub fn concept(&self) -> &Concept {
        &self.concept
    }

    pub fn children(&self) -> &[(RelationName, NodeId)] {
        &self.children
    }

    /// Set for bare variable mentions after the defining occurrence.
    pub fn is_reentrant_ref(&self) -> bool {
        self.reference.is_some()
    }

    /// The defining position for a reentrant reference.
    pub fn definition(&self) -> Option<NodeId> {
        self.reference
    }

    pub fn is_constant(&self) -> bool {
        self.concept.is_constant
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TripleTarget {
    Variable(String),
    Concept(String),
    Constant { text: String, quoted: bool },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub source: String,
    pub relation: String,
    pub target: TripleTarget,
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let target = match &self.target {
            TripleTarget::Variable(v) | TripleTarget::Concept(v) => v.clone(),
            TripleTarget::Constant { text, quoted: true } => quote(text),
            TripleTarget::Constant { text, quoted: false } => text.clone(),
        };
        write!(f, "({}, {}, {})", self.source, self.relation, target)
    }
}

/// Rooted graph in PENMAN tree order.
#[derive(Debug, Clone, PartialEq)]
pub struct AmrGraph {
    nodes: Vec<AmrNode>,
    definitions: HashMap<Variable, NodeId>,
}

impl AmrGraph {
    pub fn root(&self) -> NodeId {
        NodeId(0)
    }

    pub fn node(&self, id: NodeId) -> &AmrNode {
        &self.nodes[id.0]
    }

    /// All tree positions in pre-order.
    pub fn nodes(&self) -> &[AmrNode] {
        &self.nodes
    }

    pub fn definition(&self, variable: &Variable) -> Option<NodeId> {
        self.definitions.get(variable).copied()
    }

    pub fn variables(&self) -> impl Iterator<Item = &Variable> {
        self.nodes
            .iter()
            .filter(|n| n.reference.is_none())
            .filter_map(|n| n.variable.as_ref())
    }

    /// Number of positions carrying a concept definition.
    pub fn concept_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| n.variable.is_some() && n.reference.is_none())
            .count()
    }

    /// Pre-order instance triples followed by pre-order edge triples.
    pub fn to_triples(&self) -> Vec<Triple> {
        let mut triples = Vec::new();
        for node in &self.nodes {
            if let (Some(var), None) = (&node.variable, node.reference) {
                triples.push(Triple {
                    source: var.0.clone(),
                    relation: "instance".to_string(),
                    target: TripleTarget::Concept(node.concept.label.clone()),
                });
            }
        }
        for node in &self.nodes {
            let Some(source) = &node.variable else { continue };
            for (rel, child) in &node.children {
                let child = &self.nodes[child.0];
                let target = match &child.variable {
                    Some(v) => TripleTarget::Variable(v.0.clone()),
                    None => TripleTarget::Constant {
                        text: child.concept.label.clone(),
                        quoted: child.concept.quoted,
                    },
                };
                triples.push(Triple {
                    source: source.0.clone(),
                    relation: rel.name.clone(),
                    target,
                });
            }
        }
        triples
    }

    /// Canonical single-line PENMAN.
    pub fn to_penman(&self) -> String {
        let mut out = String::new();
        self.write_node(self.root(), &mut out);
        out
    }

    fn write_node(&self, id: NodeId, out: &mut String) {
        let node = &self.nodes[id.0];
        match (&node.variable, node.reference) {
            (Some(var), None) => {
                out.push('(');
                out.push_str(var.as_str());
                out.push_str(" / ");
                out.push_str(&node.concept.label);
                for (rel, child) in &node.children {
                    out.push_str(" :");
                    out.push_str(rel.as_str());
                    out.push(' ');
                    self.write_node(*child, out);
                }
                out.push(')');
            }
            (Some(var), Some(_)) => out.push_str(var.as_str()),
            (None, _) => {
                if node.concept.quoted {
                    out.push_str(&quote(&node.concept.label));
                } else {
                    out.push_str(&node.concept.label);
                }
            }
        }
    }
}

impl fmt::Display for AmrGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_penman())
    }
}

pub fn quote(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 2);
    out.push('"');
    for c in text.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

pub fn parse_penman(text: &str) -> Result<AmrGraph, PenmanError> {
    let tokens = lex(text)?;
    Parser::new(tokens, text.len()).parse()
}

pub fn serialize_penman(graph: &AmrGraph) -> String {
    graph.to_penman()
}

pub fn to_triples(graph: &AmrGraph) -> Vec<Triple> {
    graph.to_triples()
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    LParen,
    RParen,
    Slash,
    Role(String),
    Str(String),
    Sym(String),
}

fn is_delim(c: char) -> bool {
    c.is_whitespace() || matches!(c, '(' | ')' | '"' | '/')
}

/// Drops `~e.N` style alignment suffixes.
fn strip_alignment(s: &str) -> &str {
    match s.find('~') {
        Some(i) => &s[..i],
        None => s,
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, PenmanError> {
    let mut tokens = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(start, c)) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '#' => {
                while let Some(&(_, c)) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                }
            }
            '(' => {
                chars.next();
                tokens.push((Tok::LParen, start));
            }
            ')' => {
                chars.next();
                tokens.push((Tok::RParen, start));
            }
            '/' => {
                chars.next();
                tokens.push((Tok::Slash, start));
            }
            '"' => {
                chars.next();
                let mut value = String::new();
                let mut closed = false;
                while let Some((_, c)) = chars.next() {
                    match c {
                        '\\' => {
                            if let Some((_, escaped)) = chars.next() {
                                value.push(escaped);
                            }
                        }
                        '"' => {
                            closed = true;
                            break;
                        }
                        c => value.push(c),
                    }
                }
                if !closed {
                    return Err(PenmanError::UnterminatedString { offset: start });
                }
                // Alignment marker glued to the closing quote.
                if let Some(&(_, '~')) = chars.peek() {
                    while let Some(&(_, c)) = chars.peek() {
                        if is_delim(c) {
                            break;
                        }
                        chars.next();
                    }
                }
                tokens.push((Tok::Str(value), start));
            }
            _ => {
                let mut end = start;
                while let Some(&(i, c)) = chars.peek() {
                    if is_delim(c) {
                        break;
                    }
                    end = i + c.len_utf8();
                    chars.next();
                }
                let raw = &text[start..end];
                if let Some(role) = raw.strip_prefix(':') {
                    let role = strip_alignment(role);
                    if role.is_empty() {
                        return Err(PenmanError::Syntax {
                            offset: start,
                            message: "empty role name".to_string(),
                        });
                    }
                    tokens.push((Tok::Role(role.to_string()), start));
                } else {
                    let sym = strip_alignment(raw);
                    if !sym.is_empty() {
                        tokens.push((Tok::Sym(sym.to_string()), start));
                    }
                }
            }
        }
    }
    Ok(tokens)
}

fn looks_like_variable(sym: &str) -> bool {
    let mut chars = sym.chars();
    let Some(first) = chars.next() else { return false };
    if !first.is_ascii_lowercase() {
        return false;
    }
    let rest: String = chars.collect();
    let digits = rest.trim_start_matches(|c: char| c.is_ascii_lowercase());
    rest.len() - digits.len() <= 1 && digits.bytes().all(|b| b.is_ascii_digit())
}

struct PendingSymbol {
    node: NodeId,
    symbol: String,
    offset: usize,
}

struct Parser {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
    nodes: Vec<AmrNode>,
    definitions: HashMap<Variable, NodeId>,
    pending: Vec<PendingSymbol>,
}

impl Parser {
    fn new(tokens: Vec<(Tok, usize)>, end: usize) -> Self {
        Parser {
            tokens,
            pos: 0,
            end,
            nodes: Vec::new(),
            definitions: HashMap::new(),
            pending: Vec::new(),
        }
    }

    fn peek(&self) -> Option<&(Tok, usize)> {
        self.tokens.get(self.pos)
    }

    fn next_offset(&self) -> usize {
        self.peek().map_or(self.end, |(_, o)| *o)
    }

    fn syntax(&self, message: &str) -> PenmanError {
        PenmanError::Syntax {
            offset: self.next_offset(),
            message: message.to_string(),
        }
    }

    fn parse(mut self) -> Result<AmrGraph, PenmanError> {
        match self.peek() {
            None => return Err(PenmanError::EmptyInput { offset: 0 }),
            Some((Tok::LParen, _)) => {}
            Some((Tok::RParen, o)) => return Err(PenmanError::UnbalancedParens { offset: *o }),
            Some(_) => return Err(self.syntax("expected `(`")),
        }
        // Stack of open node ids with the offset of their `(`.
        let mut stack: Vec<(NodeId, usize)> = Vec::new();
        let root_offset = self.tokens[0].1;
        self.pos += 1;
        let root = self.open_node(root_offset)?;
        stack.push((root, root_offset));

        while let Some(&(current, open_offset)) = stack.last() {
            let Some((tok, _)) = self.peek().cloned() else {
                return Err(PenmanError::UnbalancedParens { offset: open_offset });
            };
            self.pos += 1;
            match tok {
                Tok::RParen => {
                    stack.pop();
                }
                Tok::Role(role) => {
                    let relation = RelationName::new(role);
                    let Some((target, t_offset)) = self.peek().cloned() else {
                        return Err(PenmanError::UnbalancedParens { offset: open_offset });
                    };
                    self.pos += 1;
                    let child = match target {
                        Tok::LParen => {
                            if stack.len() >= MAX_DEPTH {
                                return Err(PenmanError::NestingTooDeep { offset: t_offset });
                            }
                            let child = self.open_node(t_offset)?;
                            stack.push((child, t_offset));
                            child
                        }
                        Tok::Str(s) => self.push(AmrNode {
                            variable: None,
                            concept: Concept::constant(s, true),
                            children: Vec::new(),
                            reference: None,
                        }),
                        Tok::Sym(s) => {
                            let id = self.push(AmrNode {
                                variable: None,
                                concept: Concept::constant(s.clone(), false),
                                children: Vec::new(),
                                reference: None,
                            });
                            self.pending.push(PendingSymbol {
                                node: id,
                                symbol: s,
                                offset: t_offset,
                            });
                            id
                        }
                        Tok::RParen | Tok::Role(_) | Tok::Slash => {
                            self.pos -= 1;
                            return Err(self.syntax("missing relation target"));
                        }
                    };
                    self.nodes[current.0].children.push((relation, child));
                }
                Tok::LParen => {
                    self.pos -= 1;
                    return Err(self.syntax("node without a relation"));
                }
                Tok::Slash | Tok::Str(_) | Tok::Sym(_) => {
                    self.pos -= 1;
                    return Err(self.syntax("expected a relation or `)`"));
                }
            }
        }

        if let Some((tok, offset)) = self.peek() {
            return Err(match tok {
                Tok::RParen => PenmanError::UnbalancedParens { offset: *offset },
                _ => PenmanError::Syntax {
                    offset: *offset,
                    message: "trailing content after graph".to_string(),
                },
            });
        }
        self.resolve()?;
        Ok(AmrGraph {
            nodes: self.nodes,
            definitions: self.definitions,
        })
    }

    fn push(&mut self, node: AmrNode) -> NodeId {
        self.nodes.push(node);
        NodeId(self.nodes.len() - 1)
    }

    /// Reads `var / concept` after an opening parenthesis.
    fn open_node(&mut self, open_offset: usize) -> Result<NodeId, PenmanError> {
        let (var, var_offset) = match self.peek().cloned() {
            Some((Tok::Sym(s), o)) => (s, o),
            None => return Err(PenmanError::UnbalancedParens { offset: open_offset }),
            _ => return Err(self.syntax("expected a variable")),
        };
        self.pos += 1;
        match self.peek() {
            Some((Tok::Slash, _)) => self.pos += 1,
            None => return Err(PenmanError::UnbalancedParens { offset: open_offset }),
            _ => return Err(self.syntax("expected `/`")),
        }
        let concept = match self.peek().cloned() {
            Some((Tok::Sym(s), _)) => Concept::new(s),
            Some((Tok::Str(s), _)) => Concept::new(s),
            None => return Err(PenmanError::UnbalancedParens { offset: open_offset }),
            _ => return Err(self.syntax("expected a concept")),
        };
        self.pos += 1;
        let variable = Variable::new(var);
        let id = NodeId(self.nodes.len());
        if self.definitions.insert(variable.clone(), id).is_some() {
            return Err(PenmanError::DuplicateVariableDefinition {
                variable: variable.0,
                offset: var_offset,
            });
        }
        Ok(self.push(AmrNode {
            variable: Some(variable),
            concept,
            children: Vec::new(),
            reference: None,
        }))
    }

    fn resolve(&mut self) -> Result<(), PenmanError> {
        for pending in std::mem::take(&mut self.pending) {
            let variable = Variable::new(pending.symbol.clone());
            if let Some(&def) = self.definitions.get(&variable) {
                let concept = self.nodes[def.0].concept.clone();
                let node = &mut self.nodes[pending.node.0];
                node.variable = Some(variable);
                node.concept = concept;
                node.reference = Some(def);
            } else if looks_like_variable(&pending.symbol) {
                return Err(PenmanError::DanglingVariableReference {
                    variable: pending.symbol,
                    offset: pending.offset,
                });
            }
        }
        Ok(())
    }
}
