//! Test corpora: the Little Prince release when `ASQ_LITTLE_PRINCE_DIR`
//! points at it, otherwise a seeded synthetic stand-in of the same size.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const LITTLE_PRINCE_ENV: &str = "ASQ_LITTLE_PRINCE_DIR";
pub const LITTLE_PRINCE_SENTENCES: usize = 1562;

pub struct Corpus {
    pub label: String,
    pub amr: PathBuf,
    pub conllu: PathBuf,
}

/// The real corpus (`amr.txt` and `annotations.conllu` in the directory
/// named by the environment), or a synthetic one written under `dir`.
pub fn little_prince(dir: &Path) -> Corpus {
    if let Some(root) = std::env::var_os(LITTLE_PRINCE_ENV) {
        let root = PathBuf::from(root);
        return Corpus {
            label: format!("Little Prince corpus at {}", root.display()),
            amr: root.join("amr.txt"),
            conllu: root.join("annotations.conllu"),
        };
    }
    let (amr, conllu) = synthetic(LITTLE_PRINCE_SENTENCES, 1943);
    let corpus = Corpus {
        label: format!("synthetic stand-in, {LITTLE_PRINCE_SENTENCES} sentences"),
        amr: dir.join("synthetic.amr"),
        conllu: dir.join("synthetic.conllu"),
    };
    std::fs::write(&corpus.amr, amr).unwrap();
    std::fs::write(&corpus.conllu, conllu).unwrap();
    corpus
}

struct Tok {
    form: String,
    lemma: String,
    upos: &'static str,
    xpos: &'static str,
    feats: String,
    head: usize,
    deprel: &'static str,
}

#[derive(Default)]
struct Sentence {
    toks: Vec<Tok>,
    vars: usize,
}

impl Sentence {
    fn tok(&mut self, form: &str, lemma: &str, upos: &'static str, xpos: &'static str, feats: &str) -> usize {
        self.toks.push(Tok {
            form: form.into(),
            lemma: lemma.into(),
            upos,
            xpos,
            feats: if feats.is_empty() { "_".into() } else { feats.into() },
            head: 0,
            deprel: "root",
        });
        self.toks.len()
    }

    fn attach(&mut self, index: usize, head: usize, deprel: &'static str) {
        let t = &mut self.toks[index - 1];
        t.head = head;
        t.deprel = deprel;
    }

    fn var(&mut self) -> String {
        self.vars += 1;
        format!("v{}", self.vars)
    }

    fn node(&mut self, concept: &str, edges: &[(&str, String)]) -> (String, String) {
        let var = self.var();
        let mut out = format!("({var} / {concept}");
        for (rel, target) in edges {
            out.push_str(&format!(" :{rel} {target}"));
        }
        out.push(')');
        (var, out)
    }

    fn text(&self) -> String {
        self.toks.iter().map(|t| t.form.as_str()).collect::<Vec<_>>().join(" ")
    }

    fn conllu(&self, id: &str) -> String {
        let mut out = format!("# sent_id = {id}\n# text = {}\n", self.text());
        for (i, t) in self.toks.iter().enumerate() {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t_\t_\n",
                i + 1,
                t.form,
                t.lemma,
                t.upos,
                t.xpos,
                t.feats,
                t.head,
                t.deprel
            ));
        }
        out
    }
}

const NOUNS: &[(&str, &str)] = &[
    ("prince", "princes"),
    ("fox", "foxes"),
    ("rose", "roses"),
    ("planet", "planets"),
    ("sheep", "sheep"),
    ("star", "stars"),
    ("flower", "flowers"),
    ("king", "kings"),
    ("box", "boxes"),
    ("engine", "engines"),
    ("pilot", "pilots"),
    ("hat", "hats"),
    ("snake", "snakes"),
    ("drawing", "drawings"),
    ("volcano", "volcanoes"),
    ("baobab", "baobabs"),
    ("lamp", "lamps"),
    ("well", "wells"),
    ("businessman", "businessmen"),
    ("geographer", "geographers"),
];
const ADJECTIVES: &[&str] = &[
    "little",
    "old",
    "small",
    "big",
    "red",
    "proud",
    "beautiful",
    "sad",
    "tired",
    "strange",
];
const NAMES: &[&[&str]] = &[
    &["Antoine"],
    &["Leon", "Werth"],
    &["Marie"],
    &["Saint", "Exupery"],
    &["Asteroid", "B612"],
];
const PLACES: &[&str] = &["planet", "desert", "asteroid", "garden", "wall", "road"];

struct Verb {
    lemma: &'static str,
    past: &'static str,
    present: &'static str,
    participle: &'static str,
    frame: &'static str,
}

const fn v(
    lemma: &'static str,
    past: &'static str,
    present: &'static str,
    participle: &'static str,
    frame: &'static str,
) -> Verb {
    Verb {
        lemma,
        past,
        present,
        participle,
        frame,
    }
}

const TRANSITIVE: &[Verb] = &[
    v("tame", "tamed", "tames", "tamed", "tame-01"),
    v("draw", "drew", "draws", "drawn", "draw-01"),
    v("see", "saw", "sees", "seen", "see-01"),
    v("water", "watered", "waters", "watered", "water-01"),
    v("break", "broke", "breaks", "broken", "break-01"),
    v("love", "loved", "loves", "loved", "love-01"),
    v("find", "found", "finds", "found", "find-01"),
    v("make", "made", "makes", "made", "make-01"),
    v("eat", "ate", "eats", "eaten", "eat-01"),
    v("visit", "visited", "visits", "visited", "visit-01"),
    v("repair", "repaired", "repairs", "repaired", "repair-01"),
    v("count", "counted", "counts", "counted", "count-01"),
];
const INTRANSITIVE: &[Verb] = &[
    v("sleep", "slept", "sleeps", "slept", "sleep-01"),
    v("laugh", "laughed", "laughs", "laughed", "laugh-01"),
    v("cry", "cried", "cries", "cried", "cry-02"),
    v("arrive", "arrived", "arrives", "arrived", "arrive-01"),
    v("live", "lived", "lives", "lived", "live-01"),
    v("travel", "traveled", "travels", "traveled", "travel-01"),
];
const MONTHS: &[&str] = &[
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

#[derive(Clone, Copy, PartialEq)]
enum Tense {
    Past,
    Present,
    Future,
}

struct Phrase {
    head: usize,
    var: String,
    amr: String,
}

fn noun_phrase(s: &mut Sentence, rng: &mut ChaCha8Rng, modifiers: bool) -> Phrase {
    let roll = rng.random_range(0..100);
    if roll < 12 {
        let parts = *NAMES.choose(rng).unwrap();
        let first = s.tok(parts[0], parts[0], "PROPN", "NNP", "Number=Sing");
        for part in &parts[1..] {
            let t = s.tok(part, part, "PROPN", "NNP", "Number=Sing");
            s.attach(t, first, "flat");
        }
        let ops: Vec<(String, String)> = parts
            .iter()
            .enumerate()
            .map(|(i, p)| (format!("op{}", i + 1), format!("\"{p}\"")))
            .collect();
        let ops: Vec<(&str, String)> = ops.iter().map(|(r, t)| (r.as_str(), t.clone())).collect();
        let (_, name) = s.node("name", &ops);
        let mut edges = vec![("name", name)];
        if rng.random_bool(0.4) {
            edges.insert(0, ("wiki", format!("\"{}\"", parts.join("_"))));
        }
        let (var, amr) = s.node("person", &edges);
        return Phrase { head: first, var, amr };
    }
    if roll < 20 {
        let pronoun = *["he", "she", "they"].choose(rng).unwrap();
        let head = s.tok(pronoun, pronoun, "PRON", "PRP", "Case=Nom|PronType=Prs");
        let (var, amr) = s.node(pronoun, &[]);
        return Phrase { head, var, amr };
    }
    let (noun, plural) = *NOUNS.choose(rng).unwrap();
    let mut edges = Vec::new();
    let mut dependents = Vec::new();
    let quantity = roll < 28;
    if quantity {
        let n = rng.random_range(2..10).to_string();
        dependents.push((s.tok(&n, &n, "NUM", "CD", "NumType=Card"), "nummod"));
        edges.push(("quant", n));
    } else {
        dependents.push((s.tok("the", "the", "DET", "DT", "Definite=Def|PronType=Art"), "det"));
    }
    if modifiers && rng.random_bool(0.3) {
        let adj = *ADJECTIVES.choose(rng).unwrap();
        dependents.push((s.tok(adj, adj, "ADJ", "JJ", "Degree=Pos"), "amod"));
        let (_, m) = s.node(adj, &[]);
        edges.push(("mod", m));
    }
    let head = if quantity {
        s.tok(plural, noun, "NOUN", "NNS", "Number=Plur")
    } else {
        s.tok(noun, noun, "NOUN", "NN", "Number=Sing")
    };
    for (d, rel) in dependents {
        s.attach(d, head, rel);
    }
    if modifiers && rng.random_bool(0.08) {
        let verb = INTRANSITIVE.choose(rng).unwrap();
        let that = s.tok("that", "that", "PRON", "WDT", "PronType=Rel");
        let clause = s.tok(verb.past, verb.lemma, "VERB", "VBD", "Mood=Ind|Tense=Past|VerbForm=Fin");
        s.attach(that, clause, "nsubj");
        s.attach(clause, head, "acl:relcl");
        let (_, rel) = s.node(verb.frame, &[]);
        edges.push(("ARG0-of", rel));
    }
    let (var, amr) = s.node(noun, &edges);
    Phrase { head, var, amr }
}

/// Auxiliaries and the main verb for an active clause; returns the verb.
fn verb_group(s: &mut Sentence, verb: &Verb, tense: Tense, negated: bool) -> usize {
    let mut aux = Vec::new();
    let head = match (tense, negated) {
        (Tense::Future, _) => {
            aux.push((s.tok("will", "will", "AUX", "MD", "VerbForm=Fin"), "aux"));
            if negated {
                aux.push((s.tok("not", "not", "PART", "RB", "Polarity=Neg"), "advmod"));
            }
            s.tok(verb.lemma, verb.lemma, "VERB", "VB", "VerbForm=Inf")
        }
        (t, true) => {
            let (form, xpos, feats) = if t == Tense::Past {
                ("did", "VBD", "Mood=Ind|Tense=Past|VerbForm=Fin")
            } else {
                ("does", "VBZ", "Mood=Ind|Number=Sing|Person=3|Tense=Pres|VerbForm=Fin")
            };
            aux.push((s.tok(form, "do", "AUX", xpos, feats), "aux"));
            aux.push((s.tok("not", "not", "PART", "RB", "Polarity=Neg"), "advmod"));
            s.tok(verb.lemma, verb.lemma, "VERB", "VB", "VerbForm=Inf")
        }
        (Tense::Past, false) => s.tok(verb.past, verb.lemma, "VERB", "VBD", "Mood=Ind|Tense=Past|VerbForm=Fin"),
        (Tense::Present, false) => s.tok(
            verb.present,
            verb.lemma,
            "VERB",
            "VBZ",
            "Mood=Ind|Number=Sing|Person=3|Tense=Pres|VerbForm=Fin",
        ),
    };
    for (a, rel) in aux {
        s.attach(a, head, rel);
    }
    head
}

fn extra(s: &mut Sentence, rng: &mut ChaCha8Rng, kind: usize, verb: usize) -> (&'static str, String) {
    match kind {
        0 => {
            let month = rng.random_range(1..=12);
            let year = rng.random_range(1900..2000);
            let case = s.tok("in", "in", "ADP", "IN", "");
            let m = s.tok(MONTHS[month - 1], MONTHS[month - 1], "PROPN", "NNP", "Number=Sing");
            let y = s.tok(&year.to_string(), &year.to_string(), "NUM", "CD", "NumType=Card");
            s.attach(case, m, "case");
            s.attach(m, verb, "obl");
            s.attach(y, m, "nummod");
            let (_, amr) = s.node(
                "date-entity",
                &[("month", month.to_string()), ("year", year.to_string())],
            );
            ("time", amr)
        }
        1 => {
            let n = rng.random_range(2..10).to_string();
            let (unit, plural) = *[("day", "days"), ("year", "years"), ("hour", "hours")]
                .choose(rng)
                .unwrap();
            let case = s.tok("for", "for", "ADP", "IN", "");
            let q = s.tok(&n, &n, "NUM", "CD", "NumType=Card");
            let u = s.tok(plural, unit, "NOUN", "NNS", "Number=Plur");
            s.attach(case, u, "case");
            s.attach(q, u, "nummod");
            s.attach(u, verb, "obl");
            let (_, unit_amr) = s.node(unit, &[]);
            let (_, amr) = s.node("temporal-quantity", &[("quant", n), ("unit", unit_amr)]);
            ("duration", amr)
        }
        2 => {
            let n = rng.random_range(2..10).to_string();
            let q = s.tok(&n, &n, "NUM", "CD", "NumType=Card");
            let t = s.tok("times", "time", "NOUN", "NNS", "Number=Plur");
            s.attach(q, t, "nummod");
            s.attach(t, verb, "obl:tmod");
            ("frequency", n)
        }
        3 => {
            let place = *PLACES.choose(rng).unwrap();
            let prep = *["on", "in", "near"].choose(rng).unwrap();
            let case = s.tok(prep, prep, "ADP", "IN", "");
            let det = s.tok("the", "the", "DET", "DT", "Definite=Def|PronType=Art");
            let p = s.tok(place, place, "NOUN", "NN", "Number=Sing");
            s.attach(case, p, "case");
            s.attach(det, p, "det");
            s.attach(p, verb, "obl");
            let (_, amr) = s.node(place, &[]);
            ("location", amr)
        }
        _ => {
            let adv = s.tok("quickly", "quickly", "ADV", "RB", "");
            s.attach(adv, verb, "advmod");
            let (_, amr) = s.node("quick-02", &[]);
            ("manner", amr)
        }
    }
}

fn extras(s: &mut Sentence, rng: &mut ChaCha8Rng, verb: usize) -> Vec<(&'static str, String)> {
    let count = rng.random_range(0..=2);
    let mut kinds: Vec<usize> = (0..5).collect();
    let mut out = Vec::new();
    for _ in 0..count {
        let kind = kinds.remove(rng.random_range(0..kinds.len()));
        out.push(extra(s, rng, kind, verb));
    }
    out
}

fn tense(rng: &mut ChaCha8Rng) -> Tense {
    match rng.random_range(0..10) {
        0..=5 => Tense::Past,
        6..=8 => Tense::Present,
        _ => Tense::Future,
    }
}

fn polarity(negated: bool, edges: &mut Vec<(&str, String)>) {
    if negated {
        edges.push(("polarity", "-".into()));
    }
}

/// One sentence and its graph.
fn sentence(rng: &mut ChaCha8Rng) -> (Sentence, String) {
    let mut s = Sentence::default();
    let pattern = rng.random_range(0..100);
    let negated = rng.random_bool(0.1);
    let root;
    let mut edges: Vec<(&str, String)> = Vec::new();
    let frame;
    if pattern < 35 {
        let verb = TRANSITIVE.choose(rng).unwrap();
        let subject = noun_phrase(&mut s, rng, true);
        root = verb_group(&mut s, verb, tense(rng), negated);
        let object = noun_phrase(&mut s, rng, true);
        s.attach(subject.head, root, "nsubj");
        s.attach(object.head, root, "obj");
        frame = verb.frame;
        edges.push(("ARG0", subject.amr));
        edges.push(("ARG1", object.amr));
    } else if pattern < 50 {
        let verb = TRANSITIVE.choose(rng).unwrap();
        let patient = noun_phrase(&mut s, rng, true);
        let past = rng.random_bool(0.7);
        let aux = if past {
            s.tok(
                "was",
                "be",
                "AUX",
                "VBD",
                "Mood=Ind|Number=Sing|Person=3|Tense=Past|VerbForm=Fin",
            )
        } else {
            s.tok(
                "is",
                "be",
                "AUX",
                "VBZ",
                "Mood=Ind|Number=Sing|Person=3|Tense=Pres|VerbForm=Fin",
            )
        };
        root = s.tok(
            verb.participle,
            verb.lemma,
            "VERB",
            "VBN",
            "Tense=Past|VerbForm=Part|Voice=Pass",
        );
        s.attach(patient.head, root, "nsubj:pass");
        s.attach(aux, root, "aux:pass");
        frame = verb.frame;
        edges.push(("ARG1", patient.amr));
        if rng.random_bool(0.5) {
            let by = s.tok("by", "by", "ADP", "IN", "");
            let agent = noun_phrase(&mut s, rng, false);
            s.attach(by, agent.head, "case");
            s.attach(agent.head, root, "obl:agent");
            edges.push(("ARG0", agent.amr));
        }
    } else if pattern < 70 {
        let verb = INTRANSITIVE.choose(rng).unwrap();
        let subject = noun_phrase(&mut s, rng, true);
        root = verb_group(&mut s, verb, tense(rng), negated);
        s.attach(subject.head, root, "nsubj");
        frame = verb.frame;
        edges.push(("ARG0", subject.amr));
    } else if pattern < 80 {
        let subject = noun_phrase(&mut s, rng, false);
        let past = rng.random_bool(0.6);
        let cop = if past {
            s.tok(
                "was",
                "be",
                "AUX",
                "VBD",
                "Mood=Ind|Number=Sing|Person=3|Tense=Past|VerbForm=Fin",
            )
        } else {
            s.tok(
                "is",
                "be",
                "AUX",
                "VBZ",
                "Mood=Ind|Number=Sing|Person=3|Tense=Pres|VerbForm=Fin",
            )
        };
        let adj = *ADJECTIVES.choose(rng).unwrap();
        root = s.tok(adj, adj, "ADJ", "JJ", "Degree=Pos");
        s.attach(subject.head, root, "nsubj");
        s.attach(cop, root, "cop");
        frame = adj;
        edges.push(("domain", subject.amr));
    } else if pattern < 90 {
        let verb = TRANSITIVE.choose(rng).unwrap();
        let subject = noun_phrase(&mut s, rng, false);
        let want = v("want", "wanted", "wants", "wanted", "want-01");
        root = verb_group(
            &mut s,
            &want,
            if rng.random_bool(0.6) {
                Tense::Past
            } else {
                Tense::Present
            },
            negated,
        );
        let to = s.tok("to", "to", "PART", "TO", "");
        let inner = s.tok(verb.lemma, verb.lemma, "VERB", "VB", "VerbForm=Inf");
        let object = noun_phrase(&mut s, rng, true);
        s.attach(subject.head, root, "nsubj");
        s.attach(to, inner, "mark");
        s.attach(inner, root, "xcomp");
        s.attach(object.head, inner, "obj");
        let (_, clause) = s.node(verb.frame, &[("ARG0", subject.var.clone()), ("ARG1", object.amr)]);
        frame = "want-01";
        edges.push(("ARG0", subject.amr));
        edges.push(("ARG1", clause));
    } else {
        let verb = INTRANSITIVE.choose(rng).unwrap();
        let first = noun_phrase(&mut s, rng, false);
        let and = s.tok("and", "and", "CCONJ", "CC", "");
        let second = noun_phrase(&mut s, rng, false);
        root = verb_group(&mut s, verb, tense(rng), negated);
        s.attach(first.head, root, "nsubj");
        s.attach(and, second.head, "cc");
        s.attach(second.head, first.head, "conj");
        let (_, conj) = s.node("and", &[("op1", first.amr), ("op2", second.amr)]);
        frame = verb.frame;
        edges.push(("ARG0", conj));
    }
    if frame != "want-01" || rng.random_bool(0.5) {
        edges.extend(extras(&mut s, rng, root));
    }
    let negation_realized = !(35..50).contains(&pattern) && !(70..80).contains(&pattern);
    polarity(negated && negation_realized, &mut edges);
    let punct = s.tok(".", ".", "PUNCT", ".", "");
    s.attach(punct, root, "punct");
    s.toks[0].form = capitalize(&s.toks[0].form);

    // The root variable is taken last so it never collides.
    let root_var = format!("r{}", s.vars + 1);
    let mut amr = format!("({root_var} / {frame}");
    for (rel, target) in &edges {
        amr.push_str(&format!(" :{rel} {target}"));
    }
    amr.push(')');
    (s, amr)
}

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// `count` sentences as (AMR corpus text, CoNLL-U text).
pub fn synthetic(count: usize, seed: u64) -> (String, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut amr = String::from("# synthetic AMR corpus\n\n");
    let mut conllu = String::new();
    for i in 1..=count {
        let id = format!("lpp_1943.{i}");
        let (s, graph) = sentence(&mut rng);
        amr.push_str(&format!("# ::id {id}\n# ::snt {}\n{graph}\n\n", s.text()));
        conllu.push_str(&s.conllu(&id));
        conllu.push('\n');
    }
    (amr, conllu)
}
