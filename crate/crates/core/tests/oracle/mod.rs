//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use std::collections::BTreeMap;

/// Triples of a well-formed PENMAN string, as `(source, relation, target)`
/// display strings, read by a plain recursive-descent parser.
pub fn reference_triples(text: &str) -> Vec<String> {
    let cleaned: String = text
        .lines()
        .map(|l| match l.find('#') {
            Some(i) if !l[..i].contains('"') => &l[..i],
            _ => l,
        })
        .collect::<Vec<_>>()
        .join(" ");
    let mut p = RefParser {
        chars: cleaned.chars().collect(),
        pos: 0,
        instances: Vec::new(),
        edges: Vec::new(),
    };
    p.node();
    let mut out: Vec<String> = p
        .instances
        .iter()
        .map(|(v, c)| format!("({v}, instance, {c})"))
        .collect();
    for (src, rel, tgt) in &p.edges {
        let tgt = match tgt {
            Target::Var(v) => v.clone(),
            Target::Quoted(s) => format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\"")),
            Target::Sym(s) => s.clone(),
        };
        out.push(format!("({src}, {rel}, {tgt})"));
    }
    out
}

enum Target {
    Var(String),
    Quoted(String),
    Sym(String),
}

struct RefParser {
    chars: Vec<char>,
    pos: usize,
    instances: Vec<(String, String)>,
    edges: Vec<(String, String, Target)>,
}

impl RefParser {
    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> char {
        self.skip_ws();
        self.chars[self.pos]
    }

    fn expect(&mut self, c: char) {
        assert_eq!(self.peek(), c, "at {}", self.pos);
        self.pos += 1;
    }

    fn symbol(&mut self) -> String {
        self.skip_ws();
        let mut s = String::new();
        while self.pos < self.chars.len() {
            let c = self.chars[self.pos];
            if c.is_whitespace() || "()/\"".contains(c) {
                break;
            }
            s.push(c);
            self.pos += 1;
        }
        match s.find('~') {
            Some(i) => s[..i].to_string(),
            None => s,
        }
    }

    fn quoted(&mut self) -> String {
        self.expect('"');
        let mut s = String::new();
        loop {
            let c = self.chars[self.pos];
            self.pos += 1;
            match c {
                '\\' => {
                    s.push(self.chars[self.pos]);
                    self.pos += 1;
                }
                '"' => break,
                c => s.push(c),
            }
        }
        if self.pos < self.chars.len() && self.chars[self.pos] == '~' {
            self.symbol();
        }
        s
    }

    fn node(&mut self) -> String {
        self.expect('(');
        let var = self.symbol();
        self.expect('/');
        let concept = self.symbol();
        self.instances.push((var.clone(), concept));
        loop {
            match self.peek() {
                ')' => {
                    self.pos += 1;
                    return var;
                }
                ':' => {
                    let role = self.symbol()[1..].to_string();
                    let target = match self.peek() {
                        '(' => Target::Var(self.node()),
                        '"' => Target::Quoted(self.quoted()),
                        _ => Target::Sym(self.symbol()),
                    };
                    self.edges.push((var.clone(), role, target));
                }
                c => panic!("unexpected {c:?} at {}", self.pos),
            }
        }
    }
}

/// Blank-line separated blocks of a fixture file, comment-only blocks
/// dropped.
pub fn fixture_blocks(text: &str) -> Vec<String> {
    text.split("\n\n")
        .map(|b| {
            b.lines()
                .filter(|l| !l.trim_start().starts_with('#'))
                .collect::<Vec<_>>()
                .join("\n")
        })
        .filter(|b| !b.trim().is_empty())
        .collect()
}

/// Tokens dominated by `root` (inclusive) in a 1-based head array, found
/// by repeated breadth-first expansion over the dependents relation.
pub fn descendants(heads: &[usize], root: usize) -> Vec<usize> {
    let mut children: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &h) in heads.iter().enumerate() {
        children.entry(h).or_default().push(i + 1);
    }
    let mut seen = vec![root];
    let mut frontier = vec![root];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for n in frontier {
            for &c in children.get(&n).map(Vec::as_slice).unwrap_or(&[]) {
                if !seen.contains(&c) {
                    seen.push(c);
                    next.push(c);
                }
            }
        }
        frontier = next;
    }
    seen.sort_unstable();
    seen
}

/// Minimal CoNLL-U text for a head array; every token is `wN`.
pub fn conllu_for_heads(heads: &[usize]) -> String {
    let mut out = String::from("# sent_id = random\n");
    for (i, &h) in heads.iter().enumerate() {
        let rel = if h == 0 { "root" } else { "dep" };
        out.push_str(&format!(
            "{}\tw{}\tw{}\tNOUN\tNN\t_\t{}\t{}\t_\t_\n",
            i + 1,
            i + 1,
            i + 1,
            h,
            rel
        ));
    }
    out
}
