//! Shared fixtures and an exhaustive reference enumerator for the
//! integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use pt_core::grammar::{check_against_schema, Direction, LexemeEntry, Lexicon};
use pt_core::parser::Reading;
use pt_core::{define_schema, load_lexicon, KbSchema, Parser, ParserConfig};

pub const LEXICON: &str = include_str!("../../data/desk.lex");
pub const SCHEMA: &str = include_str!("../../data/desk.kb");
pub const CORPUS: &str = include_str!("../../data/corpus.txt");

pub struct Fixture {
    pub lex: Arc<Lexicon>,
    pub schema: Arc<KbSchema>,
}

impl Fixture {
    pub fn parser(&self) -> Parser {
        self.parser_with(ParserConfig::default())
    }

    pub fn parser_with(&self, config: ParserConfig) -> Parser {
        Parser::new(self.lex.clone(), self.schema.clone(), config)
    }
}

pub fn fixture() -> Fixture {
    let lex = load_lexicon(LEXICON).expect("desk lexicon loads");
    let schema = define_schema(SCHEMA).expect("desk schema loads");
    check_against_schema(&lex, &schema).expect("lexicon concepts exist");
    Fixture {
        lex: Arc::new(lex),
        schema: Arc::new(schema),
    }
}

/// Corpus sentences without their gold annotations.
pub fn corpus_sentences() -> Vec<String> {
    CORPUS
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.split("|||").next().unwrap().trim().to_string())
        .collect()
}

/// One dependency arc: dependent position, head position (`None` for the
/// root), slot, lexeme and class of the dependent.
pub type Arc_ = (usize, Option<usize>, String, String, String);

/// Order-independent description of a reading over real tokens.
pub fn arcs(reading: &Reading) -> BTreeSet<Arc_> {
    let t = &reading.tree;
    t.nodes
        .iter()
        .map(|n| {
            let (head, slot) = match &n.head {
                Some((h, s)) => (t.nodes[*h].position.token(), s.clone()),
                None => (None, String::new()),
            };
            (
                n.position.token().expect("no virtual words"),
                head,
                slot,
                n.lexeme().to_string(),
                n.class().to_string(),
            )
        })
        .collect()
}

pub fn arc_sets(readings: &[Reading]) -> BTreeSet<BTreeSet<Arc_>> {
    readings.iter().map(arcs).collect()
}

pub fn heads(reading: &Reading) -> Vec<Option<usize>> {
    let a = arcs(reading);
    a.iter().map(|(_, h, ..)| *h).collect()
}

// ---------------------------------------------------------------------
// Reference enumerator. It rebuilds every analysis from the raw lexicon
// and schema data: choose a reading per token, a head and slot per word,
// then filter whole structures.

fn class_subsumes(lex: &Lexicon, general: &str, specific: &str) -> bool {
    let mut cur = Some(specific.to_string());
    while let Some(c) = cur {
        if c == general {
            return true;
        }
        cur = lex.class(&c).and_then(|k| k.parent.clone());
    }
    false
}

fn concept_subsumes(schema: &KbSchema, general: &str, specific: &str) -> bool {
    let mut cur = Some(specific.to_string());
    while let Some(c) = cur {
        if c == general {
            return true;
        }
        cur = schema.concept(&c).and_then(|k| k.parent.clone());
    }
    false
}

/// Most specific definition of `role` on `concept` or its ancestors.
fn role_def(schema: &KbSchema, concept: &str, role: &str) -> Option<(String, usize)> {
    let mut cur = Some(concept.to_string());
    while let Some(c) = cur {
        let k = schema.concept(&c)?;
        if let Some(r) = k.roles.iter().find(|r| r.name == role) {
            return Some((r.filler.clone(), r.max_cardinality));
        }
        cur = k.parent.clone();
    }
    None
}

type Values = BTreeMap<String, BTreeSet<String>>;

fn full_values(lex: &Lexicon, entry: &LexemeEntry) -> Values {
    lex.feature_decls()
        .iter()
        .map(|d| {
            let v = entry
                .features
                .get(&d.name)
                .cloned()
                .unwrap_or_else(|| d.domain.iter().cloned().collect());
            (d.name.clone(), v)
        })
        .collect()
}

struct Candidate<'a> {
    entries: Vec<&'a LexemeEntry>,
    /// Per word: `None` for the root, else (head, slot index).
    links: Vec<Option<(usize, usize)>>,
}

impl Candidate<'_> {
    fn deps(&self, h: usize) -> Vec<usize> {
        (0..self.links.len())
            .filter(|&d| matches!(self.links[d], Some((x, _)) if x == h))
            .collect()
    }

    fn dominates(&self, a: usize, mut b: usize) -> bool {
        loop {
            if a == b {
                return true;
            }
            match self.links[b] {
                Some((h, _)) => b = h,
                None => return false,
            }
        }
    }

    fn tree_shaped(&self) -> bool {
        let n = self.links.len();
        if self.links.iter().filter(|l| l.is_none()).count() != 1 {
            return false;
        }
        (0..n).all(|i| {
            let mut cur = i;
            for _ in 0..=n {
                match self.links[cur] {
                    Some((h, _)) => cur = h,
                    None => return true,
                }
            }
            false
        })
    }

    fn projective(&self) -> bool {
        (0..self.links.len()).all(|d| match self.links[d] {
            None => true,
            Some((h, _)) => {
                let (lo, hi) = if h < d { (h, d) } else { (d, h) };
                (lo + 1..hi).all(|k| self.dominates(h, k))
            }
        })
    }

    fn slots_ok(&self) -> bool {
        (0..self.links.len()).all(|h| {
            let frame = &self.entries[h].frame;
            let deps = self.deps(h);
            let mut used = vec![0usize; frame.len()];
            for &d in &deps {
                used[self.links[d].unwrap().1] += 1;
            }
            let counts_ok = frame
                .iter()
                .zip(&used)
                .all(|(s, &u)| u <= s.max_fillers && (!s.is_mandatory() || u > 0));
            let order_ok = [Direction::Left, Direction::Right].iter().all(|side| {
                let mut on_side: Vec<usize> = deps
                    .iter()
                    .copied()
                    .filter(|&d| {
                        if *side == Direction::Left {
                            d < h
                        } else {
                            d > h
                        }
                    })
                    .collect();
                on_side.sort_by_key(|&d| d.abs_diff(h));
                on_side.windows(2).all(|w| {
                    frame[self.links[w[0]].unwrap().1].rank
                        <= frame[self.links[w[1]].unwrap().1].rank
                })
            });
            counts_ok && order_ok
        })
    }

    /// Arc-consistent narrowing of feature values under `where` and
    /// agreement constraints.
    fn features_ok(&self, lex: &Lexicon) -> bool {
        let mut vals: Vec<Values> = self.entries.iter().map(|e| full_values(lex, e)).collect();
        loop {
            let before = vals.clone();
            for d in 0..self.links.len() {
                let Some((h, si)) = self.links[d] else {
                    continue;
                };
                let slot = &self.entries[h].frame[si];
                for (f, allowed) in &slot.modifier_features.0 {
                    let v = vals[d].get_mut(f).unwrap();
                    *v = v.intersection(allowed).cloned().collect();
                }
                for f in &slot.agreement {
                    let both: BTreeSet<String> =
                        vals[d][f].intersection(&vals[h][f]).cloned().collect();
                    vals[d].insert(f.clone(), both.clone());
                    vals[h].insert(f.clone(), both);
                }
            }
            if vals.iter().any(|v| v.values().any(BTreeSet::is_empty)) {
                return false;
            }
            if vals == before {
                return true;
            }
        }
    }

    fn slot_role(&self, d: usize) -> Option<(usize, &str)> {
        self.links[d].map(|(h, si)| (h, self.entries[h].frame[si].role.as_str()))
    }

    /// The word whose concept a dependent of `h` with `role` relates to.
    fn governor(&self, h: usize, role: &str) -> Option<(usize, String)> {
        match role {
            "none" => None,
            "^" => {
                let (g, r) = self.slot_role(h)?;
                self.governor(g, r)
            }
            _ => self.entries[h]
                .concept
                .as_ref()
                .map(|_| (h, role.to_string())),
        }
    }

    fn fillers(&self, d: usize) -> Vec<usize> {
        if self.entries[d].concept.is_some() {
            return vec![d];
        }
        self.deps(d)
            .into_iter()
            .filter(|&x| self.slot_role(x).is_some_and(|(_, r)| r == "^"))
            .flat_map(|x| self.fillers(x))
            .collect()
    }

    fn concepts_ok(&self, schema: &KbSchema) -> bool {
        let mut filled: BTreeMap<(usize, String), BTreeSet<usize>> = BTreeMap::new();
        for d in 0..self.links.len() {
            let Some((h, role)) = self.slot_role(d) else {
                continue;
            };
            let Some((g, role)) = self.governor(h, role) else {
                continue;
            };
            for f in self.fillers(d) {
                filled.entry((g, role.clone())).or_default().insert(f);
            }
        }
        filled.iter().all(|((g, role), fs)| {
            let concept = self.entries[*g].concept.as_deref().unwrap();
            let Some((filler, max)) = role_def(schema, concept, role) else {
                return false;
            };
            fs.len() <= max
                && fs.iter().all(|f| {
                    concept_subsumes(
                        schema,
                        &filler,
                        self.entries[*f].concept.as_deref().unwrap(),
                    )
                })
        })
    }

    fn arcs(&self) -> BTreeSet<Arc_> {
        (0..self.links.len())
            .map(|d| {
                let e = self.entries[d];
                let (head, slot) = match self.links[d] {
                    Some((h, si)) => (Some(h), self.entries[h].frame[si].name.clone()),
                    None => (None, String::new()),
                };
                (d, head, slot, e.lexeme.clone(), e.word_class.clone())
            })
            .collect()
    }
}

/// Every analysis of `tokens` the grammar and schema license.
pub fn brute_force(lex: &Lexicon, schema: &KbSchema, tokens: &[&str]) -> BTreeSet<BTreeSet<Arc_>> {
    let options: Vec<Vec<&LexemeEntry>> = tokens
        .iter()
        .map(|t| lex.lookup(t).iter().map(|e| e.as_ref()).collect())
        .collect();
    let mut out = BTreeSet::new();
    let mut choice = vec![0usize; tokens.len()];
    if options.iter().any(Vec::is_empty) {
        return out;
    }
    loop {
        let entries: Vec<&LexemeEntry> = choice.iter().zip(&options).map(|(&c, o)| o[c]).collect();
        enumerate_links(lex, schema, &entries, &mut out);
        // Odometer over lexical choices.
        let mut i = 0;
        loop {
            if i == choice.len() {
                return out;
            }
            choice[i] += 1;
            if choice[i] < options[i].len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

fn enumerate_links(
    lex: &Lexicon,
    schema: &KbSchema,
    entries: &[&LexemeEntry],
    out: &mut BTreeSet<BTreeSet<Arc_>>,
) {
    let n = entries.len();
    // Locally possible (head, slot) pairs per word, plus the root option.
    let local: Vec<Vec<Option<(usize, usize)>>> = (0..n)
        .map(|d| {
            let mut v = vec![None];
            for h in (0..n).filter(|&h| h != d) {
                for (si, s) in entries[h].frame.iter().enumerate() {
                    let side_ok = match s.direction {
                        Direction::Left => d < h,
                        Direction::Right => d > h,
                    };
                    if side_ok && class_subsumes(lex, &s.modifier_class, &entries[d].word_class) {
                        v.push(Some((h, si)));
                    }
                }
            }
            v
        })
        .collect();
    let mut links = vec![None; n];
    let mut used: Vec<Vec<usize>> = entries.iter().map(|e| vec![0; e.frame.len()]).collect();
    search(lex, schema, entries, &local, 0, &mut links, &mut used, out);
}

/// Depth-first assignment of links, pruning on slot capacity, a second
/// root, and cycles through already assigned words.
#[allow(clippy::too_many_arguments)]
fn search(
    lex: &Lexicon,
    schema: &KbSchema,
    entries: &[&LexemeEntry],
    local: &[Vec<Option<(usize, usize)>>],
    d: usize,
    links: &mut Vec<Option<(usize, usize)>>,
    used: &mut Vec<Vec<usize>>,
    out: &mut BTreeSet<BTreeSet<Arc_>>,
) {
    let n = entries.len();
    if d == n {
        let cand = Candidate {
            entries: entries.to_vec(),
            links: links.clone(),
        };
        if cand.tree_shaped()
            && cand.projective()
            && cand.slots_ok()
            && cand.features_ok(lex)
            && cand.concepts_ok(schema)
        {
            out.insert(cand.arcs());
        }
        return;
    }
    for &option in &local[d] {
        match option {
            None => {
                if links[..d].iter().any(Option::is_none) {
                    continue;
                }
            }
            Some((h, si)) => {
                if used[h][si] >= entries[h].frame[si].max_fillers {
                    continue;
                }
                // Walking up from h through assigned words must not reach d.
                let mut cur = h;
                let mut cyclic = false;
                while cur < d {
                    match links[cur] {
                        Some((x, _)) if x == d => {
                            cyclic = true;
                            break;
                        }
                        Some((x, _)) => cur = x,
                        None => break,
                    }
                }
                if cyclic {
                    continue;
                }
                used[h][si] += 1;
            }
        }
        links[d] = option;
        search(lex, schema, entries, local, d + 1, links, used, out);
        if let Some((h, si)) = option {
            used[h][si] -= 1;
        }
        links[d] = None;
    }
}
