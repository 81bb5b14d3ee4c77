//! Question templates and the numbered-argument to thematic-role mapping.
//!
//! Template records are pipe-delimited, one per line:
//!
//! ```text
//! kind|key|tense|pattern|pos0[,pos1...]
//! core|Agent|past|Who {0} ?|VERB
//! noncore|frequency|present|How many times someone {0} {1} ?|VERB,NOUN
//! ```
//!
//! Each comma-separated POS field belongs to one blank; alternatives for a
//! single blank are separated by `/` (`NOUN/PROPN`). Role mapping records
//! are `lemma|sense|ARGn|role`; `*` in the lemma and sense columns makes a
//! fallback entry for that argument.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotate::Upos;
use crate::penman::{Concept, RelationName};

pub const BUNDLED_TEMPLATES: &str = include_str!("../resources/templates.txt");
pub const BUNDLED_ROLE_MAPPING: &str = include_str!("../resources/role-mapping.txt");
/// Relations from the AMR guidelines that the bundled pack is expected to cover.
pub const BUNDLED_RELATION_LIST: &str = include_str!("../resources/amr-relations.txt");

const WH_WORDS: &[&str] = &["what", "who", "whom", "whose", "which", "where", "when", "why", "how"];

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("line {line}: malformed record: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("line {line}: record duplicates template `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: unknown POS tag `{tag}`")]
    UnknownPosTag { line: usize, tag: String },
    #[error("line {line}: blank markers must be numbered contiguously from 0, one POS field each")]
    BlankIndexGap { line: usize },
    #[error("no role mapping for {predicate} {relation} and no fallback")]
    NoMappingAndNoFallback { predicate: String, relation: String },
    #[error("thematic role `{role}` has no core template")]
    RoleWithoutTemplates { role: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemplateKind {
    Core,
    NonCore,
}

impl TemplateKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TemplateKind::Core => "core",
            TemplateKind::NonCore => "noncore",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tense {
    Past,
    Present,
    Future,
    Any,
}

impl Tense {
    pub fn as_str(self) -> &'static str {
        match self {
            Tense::Past => "past",
            Tense::Present => "present",
            Tense::Future => "future",
            Tense::Any => "any",
        }
    }

    /// `any` on either side matches everything.
    pub fn matches(self, other: Tense) -> bool {
        self == Tense::Any || other == Tense::Any || self == other
    }
}

impl fmt::Display for Tense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Tense {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "past" => Ok(Tense::Past),
            "present" => Ok(Tense::Present),
            "future" => Ok(Tense::Future),
            "any" => Ok(Tense::Any),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub id: String,
    pub kind: TemplateKind,
    /// Thematic role for core templates, relation name otherwise.
    pub key: String,
    pub tense: Tense,
    pub pattern: String,
    /// Accepted POS tags, one list per blank.
    pub blank_pos: Vec<Vec<Upos>>,
}

impl Template {
    pub fn blank_count(&self) -> usize {
        self.blank_pos.len()
    }

    pub fn accepts(&self, blank: usize, pos: Upos) -> bool {
        self.blank_pos.get(blank).is_some_and(|tags| tags.contains(&pos))
    }
}

/// Blank indices in order of appearance, or `None` for an unclosed brace.
fn blank_markers(pattern: &str) -> Option<Vec<usize>> {
    let mut markers = Vec::new();
    let mut rest = pattern;
    while let Some(open) = rest.find('{') {
        let close = rest[open..].find('}')? + open;
        markers.push(rest[open + 1..close].parse().ok()?);
        rest = &rest[close + 1..];
    }
    Some(markers)
}

fn parse_template_line(line_no: usize, line: &str) -> Result<Template, TemplateError> {
    let malformed = |reason: &str| TemplateError::MalformedRecord {
        line: line_no,
        reason: reason.to_string(),
    };
    let fields: Vec<&str> = line.split('|').collect();
    if fields.len() != 5 {
        return Err(malformed("expected 5 `|`-separated fields"));
    }
    let kind = match fields[0] {
        "core" => TemplateKind::Core,
        "noncore" => TemplateKind::NonCore,
        _ => return Err(malformed("kind must be `core` or `noncore`")),
    };
    let key = fields[1].trim();
    if key.is_empty() {
        return Err(malformed("empty key"));
    }
    let tense: Tense = fields[2].parse().map_err(|_| malformed("unknown tense"))?;
    let pattern = fields[3].trim();
    let first = pattern.split_whitespace().next().unwrap_or("").to_lowercase();
    if !WH_WORDS.contains(&first.as_str()) {
        return Err(malformed("pattern must open with a wh-word or `How`"));
    }
    if !pattern.ends_with('?') {
        return Err(malformed("pattern must end with `?`"));
    }
    let mut markers = blank_markers(pattern).ok_or_else(|| malformed("unclosed blank marker"))?;
    markers.sort_unstable();
    let blanks = markers.len();
    let blank_pos: Vec<Vec<Upos>> = if fields[4].trim().is_empty() {
        Vec::new()
    } else {
        fields[4]
            .split(',')
            .map(|blank| {
                blank
                    .split('/')
                    .map(|tag| {
                        tag.trim().parse::<Upos>().map_err(|_| TemplateError::UnknownPosTag {
                            line: line_no,
                            tag: tag.trim().to_string(),
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<_, _>>()?
    };
    if markers.iter().enumerate().any(|(i, &m)| i != m) || blank_pos.len() != blanks {
        return Err(TemplateError::BlankIndexGap { line: line_no });
    }
    Ok(Template {
        id: String::new(),
        kind,
        key: key.to_string(),
        tense,
        pattern: pattern.to_string(),
        blank_pos,
    })
}

fn records(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
}

/// Parses template records. Ids are `kind/key/N`, numbering templates of
/// one key in file order.
pub fn parse_templates(text: &str) -> Result<Vec<Template>, TemplateError> {
    let mut templates: Vec<Template> = Vec::new();
    let mut ordinals: HashMap<(TemplateKind, String), usize> = HashMap::new();
    for (line_no, line) in records(text) {
        let mut template = parse_template_line(line_no, line)?;
        if let Some(existing) = templates.iter().find(|t| {
            t.kind == template.kind
                && t.key == template.key
                && t.tense == template.tense
                && t.pattern == template.pattern
        }) {
            return Err(TemplateError::DuplicateId {
                line: line_no,
                id: existing.id.clone(),
            });
        }
        let n = ordinals.entry((template.kind, template.key.clone())).or_insert(0);
        *n += 1;
        template.id = format!("{}/{}/{}", template.kind.as_str(), template.key, n);
        templates.push(template);
    }
    Ok(templates)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RoleMapping {
    entries: HashMap<(String, String, String), String>,
    fallback: BTreeMap<String, String>,
}

impl RoleMapping {
    pub fn insert(&mut self, lemma: &str, sense: &str, argument: &str, role: &str) {
        if lemma == "*" {
            self.fallback.insert(argument.to_string(), role.to_string());
        } else {
            self.entries.insert(
                (lemma.to_string(), sense.to_string(), argument.to_string()),
                role.to_string(),
            );
        }
    }

    pub fn fallback(&self) -> &BTreeMap<String, String> {
        &self.fallback
    }

    pub fn len(&self) -> usize {
        self.entries.len() + self.fallback.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn roles(&self) -> impl Iterator<Item = &str> {
        self.entries.values().chain(self.fallback.values()).map(String::as_str)
    }

    fn lookup(&self, lemma: &str, sense: &str, argument: &str) -> Option<&str> {
        let get = |sense: &str| {
            self.entries
                .get(&(lemma.to_string(), sense.to_string(), argument.to_string()))
                .map(String::as_str)
        };
        get(sense).or_else(|| get("*"))
    }
}

pub fn parse_role_mapping(text: &str) -> Result<RoleMapping, TemplateError> {
    let mut mapping = RoleMapping::default();
    for (line_no, line) in records(text) {
        let malformed = |reason: &str| TemplateError::MalformedRecord {
            line: line_no,
            reason: reason.to_string(),
        };
        let fields: Vec<&str> = line.split('|').map(str::trim).collect();
        let [lemma, sense, argument, role] = fields[..] else {
            return Err(malformed("expected 4 `|`-separated fields"));
        };
        let Some(argument) = RelationName::new(argument).core_name() else {
            return Err(malformed("argument must be ARG0..ARG5"));
        };
        if lemma.is_empty() || role.is_empty() {
            return Err(malformed("empty lemma or role"));
        }
        if sense != "*" && !(sense.len() == 2 && sense.bytes().all(|b| b.is_ascii_digit())) {
            return Err(malformed("sense must be two digits or `*`"));
        }
        mapping.insert(lemma, sense, &argument, role);
    }
    Ok(mapping)
}

pub fn resolve_core_role(
    mapping: &RoleMapping,
    predicate: &Concept,
    relation: &RelationName,
) -> Result<String, TemplateError> {
    let missing = || TemplateError::NoMappingAndNoFallback {
        predicate: predicate.label().to_string(),
        relation: relation.as_str().to_string(),
    };
    let argument = relation.core_name().ok_or_else(missing)?;
    mapping
        .lookup(predicate.lemma(), predicate.sense().unwrap_or("*"), &argument)
        .or_else(|| mapping.fallback.get(&argument).map(String::as_str))
        .map(str::to_string)
        .ok_or_else(missing)
}

/// Template key for a non-core relation: inverse suffix dropped and
/// numbered list relations (`op2`, `snt3`) folded onto their stem.
pub fn noncore_key(relation: &RelationName) -> String {
    let base = relation.base();
    for stem in ["op", "snt"] {
        if let Some(digits) = base.strip_prefix(stem) {
            if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                return stem.to_string();
            }
        }
    }
    base.to_string()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TemplateStats {
    pub core_templates: usize,
    pub core_keys: usize,
    pub noncore_templates: usize,
    pub noncore_keys: usize,
}

impl TemplateStats {
    pub fn avg_core_per_key(&self) -> f64 {
        ratio(self.core_templates, self.core_keys)
    }

    pub fn avg_noncore_per_key(&self) -> f64 {
        ratio(self.noncore_templates, self.noncore_keys)
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

#[derive(Debug, Clone, Default)]
pub struct TemplateStore {
    templates: Vec<Template>,
    core: HashMap<String, Vec<usize>>,
    noncore: HashMap<String, Vec<usize>>,
    mapping: RoleMapping,
}

impl TemplateStore {
    pub fn from_templates(templates: Vec<Template>) -> Self {
        let mut store = TemplateStore {
            templates,
            ..TemplateStore::default()
        };
        for (i, t) in store.templates.iter().enumerate() {
            let index = match t.kind {
                TemplateKind::Core => &mut store.core,
                TemplateKind::NonCore => &mut store.noncore,
            };
            index.entry(t.key.clone()).or_default().push(i);
        }
        store
    }

    pub fn parse(templates: &str, mapping: &str) -> Result<Self, TemplateError> {
        TemplateStore::from_templates(parse_templates(templates)?).with_mapping(parse_role_mapping(mapping)?)
    }

    /// The template pack and role mapping shipped with the crate.
    pub fn bundled() -> Self {
        TemplateStore::parse(BUNDLED_TEMPLATES, BUNDLED_ROLE_MAPPING).expect("bundled templates are valid")
    }

    /// Attaches a role mapping, checking that every role it can yield has
    /// at least one core template.
    pub fn with_mapping(mut self, mapping: RoleMapping) -> Result<Self, TemplateError> {
        if let Some(role) = mapping.roles().find(|r| !self.core.contains_key(*r)) {
            return Err(TemplateError::RoleWithoutTemplates { role: role.to_string() });
        }
        self.mapping = mapping;
        Ok(self)
    }

    pub fn mapping(&self) -> &RoleMapping {
        &self.mapping
    }

    pub fn templates(&self) -> &[Template] {
        &self.templates
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    pub fn core_templates(&self, role: &str) -> impl Iterator<Item = &Template> {
        self.core.get(role).into_iter().flatten().map(|&i| &self.templates[i])
    }

    pub fn noncore_templates(&self, relation: &str) -> impl Iterator<Item = &Template> {
        self.noncore
            .get(relation)
            .into_iter()
            .flatten()
            .map(|&i| &self.templates[i])
    }

    pub fn has_noncore(&self, relation: &str) -> bool {
        self.noncore.contains_key(relation)
    }

    pub fn stats(&self) -> TemplateStats {
        TemplateStats {
            core_templates: self.core.values().map(Vec::len).sum(),
            core_keys: self.core.len(),
            noncore_templates: self.noncore.values().map(Vec::len).sum(),
            noncore_keys: self.noncore.len(),
        }
    }

    /// Position of a template in the resource file.
    pub fn order_of(&self, id: &str) -> Option<usize> {
        self.templates.iter().position(|t| t.id == id)
    }
}

pub fn load_templates(path: impl AsRef<Path>) -> Result<TemplateStore, TemplateError> {
    Ok(TemplateStore::from_templates(parse_templates(&read(path.as_ref())?)?))
}

pub fn load_role_mapping(path: impl AsRef<Path>) -> Result<RoleMapping, TemplateError> {
    parse_role_mapping(&read(path.as_ref())?)
}

fn read(path: &Path) -> Result<String, TemplateError> {
    std::fs::read_to_string(path).map_err(|source| TemplateError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Templates for `relation`, in resource order. Core relations go through
/// the role mapping (using `predicate` when given); everything else is
/// keyed by relation name. `pos` filters on the first blank.
pub fn select_templates<'a>(
    store: &'a TemplateStore,
    relation: &RelationName,
    predicate: Option<&Concept>,
    tense: Tense,
    pos: Option<Upos>,
) -> Vec<&'a Template> {
    let candidates: Vec<&Template> = if relation.is_core() {
        let role = match predicate {
            Some(p) => resolve_core_role(&store.mapping, p, relation).ok(),
            None => relation
                .core_name()
                .and_then(|arg| store.mapping.fallback.get(&arg).cloned()),
        };
        match role {
            Some(role) => store.core_templates(&role).collect(),
            None => Vec::new(),
        }
    } else {
        store.noncore_templates(&noncore_key(relation)).collect()
    };
    candidates
        .into_iter()
        .filter(|t| t.tense.matches(tense))
        .filter(|t| match (pos, t.blank_pos.first()) {
            (Some(pos), Some(accepted)) => accepted.contains(&pos),
            _ => true,
        })
        .collect()
}
