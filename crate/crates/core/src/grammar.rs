//! Lexicalized dependency grammar: word-class hierarchy, feature
//! declarations, valency frames and the lexicon file format.
//!
//! The file format is line oriented with four sections:
//!
//! ```text
//! classes:
//! word abstract
//! noun word
//! indefDet determiner predicts-head(noun)
//! features:
//! num = sg|pl
//! barriers:
//! ,
//! entries:
//! printer printer noun {num=sg} [slot(det left mandatory determiner 2 none agree=num)] Printer
//! ```
//!
//! See `docs/formats.md` at the repository root for the full grammar.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Role name marking a purely syntactic slot.
pub const ROLE_NONE: &str = "none";
/// Role name marking a transparent slot: the conceptual relation is taken
/// from the slot through which the head itself is governed.
pub const ROLE_INHERIT: &str = "^";
/// Surface prefix marking a virtual-word template entry.
pub const VIRTUAL_SURFACE: &str = "*";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GrammarError {
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{message}: `{identifier}`")]
    Semantic { identifier: String, message: String },
    #[error("unknown word class `{0}`")]
    UnknownClass(String),
}

impl GrammarError {
    fn semantic(identifier: impl Into<String>, message: impl Into<String>) -> Self {
        GrammarError::Semantic {
            identifier: identifier.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Left,
    Right,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Left => "left",
            Direction::Right => "right",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optionality {
    Mandatory,
    Optional,
}

/// Which direction a word class predicts a virtual word in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Prediction {
    /// The trigger is subordinated under a predicted head.
    Head(Vec<String>),
    /// The predicted word becomes a dependent of the trigger.
    Modifier(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordClass {
    pub name: String,
    pub parent: Option<String>,
    pub is_abstract: bool,
    pub predicts: Option<Prediction>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureDecl {
    pub name: String,
    pub domain: Vec<String>,
}

/// Feature name to admissible value set. A feature that is not mentioned is
/// implicitly the full declared domain.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FeatureStructure(pub BTreeMap<String, BTreeSet<String>>);

impl FeatureStructure {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, feature: &str, values: &[&str]) -> Self {
        self.0.insert(
            feature.to_string(),
            values.iter().map(|v| v.to_string()).collect(),
        );
        self
    }

    pub fn get(&self, feature: &str) -> Option<&BTreeSet<String>> {
        self.0.get(feature)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn features(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }
}

impl fmt::Display for FeatureStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (name, values)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}=", name)?;
            for (j, v) in values.iter().enumerate() {
                if j > 0 {
                    f.write_str("|")?;
                }
                f.write_str(v)?;
            }
        }
        f.write_str("}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValencySlot {
    pub name: String,
    pub direction: Direction,
    pub optionality: Optionality,
    pub max_fillers: usize,
    pub modifier_class: String,
    pub modifier_features: FeatureStructure,
    pub agreement: BTreeSet<String>,
    pub role: String,
    pub rank: i32,
}

impl ValencySlot {
    pub fn is_mandatory(&self) -> bool {
        self.optionality == Optionality::Mandatory
    }

    /// The conceptual role, or `None` for purely syntactic slots.
    pub fn concept_role(&self) -> Option<&str> {
        (self.role != ROLE_NONE).then_some(self.role.as_str())
    }
}

impl fmt::Display for ValencySlot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "slot({} {} {} {} {} {}",
            self.name,
            self.direction,
            match self.optionality {
                Optionality::Mandatory => "mandatory",
                Optionality::Optional => "optional",
            },
            self.modifier_class,
            self.rank,
            self.role
        )?;
        if self.max_fillers != 1 {
            write!(f, " max={}", self.max_fillers)?;
        }
        if !self.agreement.is_empty() {
            let agree: Vec<&str> = self.agreement.iter().map(String::as_str).collect();
            write!(f, " agree={}", agree.join("|"))?;
        }
        if !self.modifier_features.is_empty() {
            write!(f, " where={}", self.modifier_features)?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexemeEntry {
    pub surface: String,
    pub lexeme: String,
    pub word_class: String,
    pub features: FeatureStructure,
    pub frame: Vec<ValencySlot>,
    pub concept: Option<String>,
}

impl LexemeEntry {
    pub fn is_template(&self) -> bool {
        self.surface == VIRTUAL_SURFACE
    }

    pub fn slot(&self, name: &str) -> Option<&ValencySlot> {
        self.frame.iter().find(|s| s.name == name)
    }
}

impl fmt::Display for LexemeEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {} [",
            self.surface, self.lexeme, self.word_class, self.features
        )?;
        for (i, slot) in self.frame.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}", slot)?;
        }
        write!(f, "] {}", self.concept.as_deref().unwrap_or(ROLE_NONE))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Lexicon {
    classes: Vec<WordClass>,
    class_index: HashMap<String, usize>,
    features: Vec<FeatureDecl>,
    entries: BTreeMap<String, Vec<Arc<LexemeEntry>>>,
    templates: BTreeMap<String, Arc<LexemeEntry>>,
    barriers: BTreeSet<String>,
}

impl Lexicon {
    pub fn classes(&self) -> &[WordClass] {
        &self.classes
    }

    pub fn class(&self, name: &str) -> Option<&WordClass> {
        self.class_index.get(name).map(|&i| &self.classes[i])
    }

    pub fn feature_decls(&self) -> &[FeatureDecl] {
        &self.features
    }

    pub fn feature(&self, name: &str) -> Option<&FeatureDecl> {
        self.features.iter().find(|f| f.name == name)
    }

    pub fn barriers(&self) -> &BTreeSet<String> {
        &self.barriers
    }

    pub fn is_barrier(&self, surface: &str) -> bool {
        self.barriers.contains(surface)
    }

    pub fn entries(&self) -> impl Iterator<Item = &Arc<LexemeEntry>> {
        self.entries.values().flatten()
    }

    pub fn entry_count(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    /// All entries whose surface matches exactly. Unknown words yield an
    /// empty slice.
    pub fn lookup(&self, surface: &str) -> &[Arc<LexemeEntry>] {
        self.entries.get(surface).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Virtual-word template for a class, falling back to the nearest
    /// ancestor that declares one.
    pub fn virtual_template(&self, class: &str) -> Option<&Arc<LexemeEntry>> {
        let mut cur = Some(class);
        while let Some(c) = cur {
            if let Some(t) = self.templates.get(c) {
                return Some(t);
            }
            cur = self.class(c).and_then(|wc| wc.parent.as_deref());
        }
        None
    }

    pub fn is_subclass_of(&self, sub: &str, sup: &str) -> Result<bool, GrammarError> {
        if self.class(sup).is_none() {
            return Err(GrammarError::UnknownClass(sup.to_string()));
        }
        let mut cur = Some(
            self.class(sub)
                .ok_or_else(|| GrammarError::UnknownClass(sub.to_string()))?,
        );
        while let Some(c) = cur {
            if c.name == sup {
                return Ok(true);
            }
            cur = c.parent.as_deref().and_then(|p| self.class(p));
        }
        Ok(false)
    }

    /// Subsumption for names already validated at load time.
    pub(crate) fn subsumes_class(&self, sup: &str, sub: &str) -> bool {
        self.is_subclass_of(sub, sup).unwrap_or(false)
    }

    /// Non-abstract proper descendants of `class`.
    pub fn concrete_descendants(&self, class: &str) -> Vec<&str> {
        self.classes
            .iter()
            .filter(|c| !c.is_abstract && c.name != class && self.subsumes_class(class, &c.name))
            .map(|c| c.name.as_str())
            .collect()
    }

    /// Replaces every complete set of concrete subclasses of some abstract
    /// class by that class, to a fixpoint, and drops members subsumed by another
    /// member.
    pub fn collapse_predictions(
        &self,
        classes: &BTreeSet<String>,
    ) -> Result<BTreeSet<String>, GrammarError> {
        for c in classes {
            if self.class(c).is_none() {
                return Err(GrammarError::UnknownClass(c.clone()));
            }
        }
        let mut set = classes.clone();
        loop {
            minimize(self, &mut set);
            let covered =
                |set: &BTreeSet<String>, d: &str| set.iter().any(|s| self.subsumes_class(s, d));
            let candidate = self.classes.iter().find(|w| {
                let desc = self.concrete_descendants(&w.name);
                w.is_abstract
                    && !desc.is_empty()
                    && !set.iter().any(|s| self.subsumes_class(s, &w.name))
                    && desc.iter().all(|d| covered(&set, d))
            });
            match candidate {
                Some(w) => {
                    set.retain(|s| !self.subsumes_class(&w.name, s));
                    set.insert(w.name.clone());
                }
                None => return Ok(set),
            }
        }
    }
}

fn minimize(lex: &Lexicon, set: &mut BTreeSet<String>) {
    let snapshot: Vec<String> = set.iter().cloned().collect();
    set.retain(|s| !snapshot.iter().any(|t| t != s && lex.subsumes_class(t, s)));
}

impl fmt::Display for Lexicon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "classes:")?;
        for c in &self.classes {
            f.write_str(&c.name)?;
            if let Some(p) = &c.parent {
                write!(f, " {}", p)?;
            }
            if c.is_abstract {
                f.write_str(" abstract")?;
            }
            match &c.predicts {
                Some(Prediction::Head(v)) => write!(f, " predicts-head({})", v.join("|"))?,
                Some(Prediction::Modifier(v)) => write!(f, " predicts-modifier({})", v.join("|"))?,
                None => {}
            }
            writeln!(f)?;
        }
        writeln!(f, "features:")?;
        for d in &self.features {
            writeln!(f, "{} = {}", d.name, d.domain.join("|"))?;
        }
        writeln!(f, "barriers:")?;
        for b in &self.barriers {
            writeln!(f, "{}", b)?;
        }
        writeln!(f, "entries:")?;
        for e in self.templates.values() {
            writeln!(f, "{}", e)?;
        }
        for e in self.entries() {
            writeln!(f, "{}", e)?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Loading
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    Classes,
    Features,
    Barriers,
    Entries,
}

/// Cursor over one line, tracking the column for error reporting.
pub(crate) struct LineCursor<'a> {
    line_no: usize,
    text: &'a str,
    pos: usize,
}

impl<'a> LineCursor<'a> {
    pub(crate) fn new(line_no: usize, text: &'a str) -> Self {
        LineCursor {
            line_no,
            text,
            pos: 0,
        }
    }

    pub(crate) fn error(&self, message: impl Into<String>) -> GrammarError {
        GrammarError::Parse {
            line: self.line_no,
            column: self.text[..self.pos].chars().count() + 1,
            message: message.into(),
        }
    }

    pub(crate) fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    pub(crate) fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    pub(crate) fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.text.len()
    }

    pub(crate) fn expect_end(&mut self) -> Result<(), GrammarError> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.error(format!(
                "unexpected trailing input `{}`",
                &self.text[self.pos..]
            )))
        }
    }

    /// A whitespace-delimited word.
    pub(crate) fn word(&mut self) -> Result<&'a str, GrammarError> {
        self.skip_ws();
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
        if start == self.pos {
            Err(self.error("expected a token"))
        } else {
            Ok(&self.text[start..self.pos])
        }
    }

    /// An identifier made of alphanumerics, `_`, `-` and `^`.
    pub(crate) fn ident(&mut self) -> Result<&'a str, GrammarError> {
        self.skip_ws();
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_alphanumeric() || c == '_' || c == '-' || c == '^' {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
        if start == self.pos {
            Err(self.error("expected an identifier"))
        } else {
            Ok(&self.text[start..self.pos])
        }
    }

    pub(crate) fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    pub(crate) fn expect(&mut self, c: char) -> Result<(), GrammarError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{}`", c)))
        }
    }

    pub(crate) fn rest_starts_with(&mut self, s: &str) -> bool {
        self.skip_ws();
        self.text[self.pos..].starts_with(s)
    }
}

/// Strips a trailing comment: `#` at line start or preceded by whitespace.
pub(crate) fn strip_comment(line: &str) -> &str {
    let mut prev_ws = true;
    for (i, c) in line.char_indices() {
        if c == '#' && prev_ws {
            return &line[..i];
        }
        prev_ws = c.is_whitespace();
    }
    line
}

fn parse_value_set(cur: &mut LineCursor<'_>) -> Result<BTreeSet<String>, GrammarError> {
    let mut values = BTreeSet::new();
    loop {
        let v = cur.ident()?;
        if !values.insert(v.to_string()) {
            return Err(cur.error(format!("duplicate value `{}`", v)));
        }
        if !cur.eat('|') {
            return Ok(values);
        }
    }
}

pub(crate) fn parse_feature_structure(
    cur: &mut LineCursor<'_>,
) -> Result<FeatureStructure, GrammarError> {
    cur.expect('{')?;
    let mut fs = FeatureStructure::new();
    if cur.eat('}') {
        return Ok(fs);
    }
    loop {
        let name = cur.ident()?;
        cur.expect('=')?;
        let values = parse_value_set(cur)?;
        if fs.0.insert(name.to_string(), values).is_some() {
            return Err(cur.error(format!("feature `{}` given twice", name)));
        }
        if cur.eat('}') {
            return Ok(fs);
        }
        cur.expect(',')?;
    }
}

fn parse_slot(cur: &mut LineCursor<'_>) -> Result<ValencySlot, GrammarError> {
    let kw = cur.ident()?;
    if kw != "slot" {
        return Err(cur.error("expected `slot(`"));
    }
    cur.expect('(')?;
    let name = cur.ident()?.to_string();
    let direction = match cur.ident()? {
        "left" => Direction::Left,
        "right" => Direction::Right,
        other => return Err(cur.error(format!("bad direction `{}`", other))),
    };
    let optionality = match cur.ident()? {
        "mandatory" => Optionality::Mandatory,
        "optional" => Optionality::Optional,
        other => return Err(cur.error(format!("bad optionality `{}`", other))),
    };
    let modifier_class = cur.ident()?.to_string();
    let rank_text = cur.ident()?;
    let rank: i32 = rank_text
        .parse()
        .map_err(|_| cur.error(format!("bad rank `{}`", rank_text)))?;
    let role = cur.ident()?.to_string();
    let mut slot = ValencySlot {
        name,
        direction,
        optionality,
        max_fillers: 1,
        modifier_class,
        modifier_features: FeatureStructure::new(),
        agreement: BTreeSet::new(),
        role,
        rank,
    };
    while !cur.eat(')') {
        let key = cur.ident()?;
        cur.expect('=')?;
        match key {
            "max" => {
                let t = cur.ident()?;
                slot.max_fillers = t
                    .parse()
                    .ok()
                    .filter(|&n: &usize| n > 0)
                    .ok_or_else(|| cur.error(format!("bad max `{}`", t)))?;
            }
            "agree" => slot.agreement = parse_value_set(cur)?,
            "where" => slot.modifier_features = parse_feature_structure(cur)?,
            other => return Err(cur.error(format!("unknown slot option `{}`", other))),
        }
    }
    Ok(slot)
}

fn parse_entry(cur: &mut LineCursor<'_>) -> Result<LexemeEntry, GrammarError> {
    let surface = cur.word()?.to_string();
    let lexeme = cur.word()?.to_string();
    let word_class = cur.ident()?.to_string();
    let features = parse_feature_structure(cur)?;
    cur.expect('[')?;
    let mut frame = Vec::new();
    if !cur.eat(']') {
        loop {
            frame.push(parse_slot(cur)?);
            if cur.eat(']') {
                break;
            }
            cur.expect(',')?;
        }
    }
    let concept = cur.ident()?;
    cur.expect_end()?;
    Ok(LexemeEntry {
        surface,
        lexeme,
        word_class,
        features,
        frame,
        concept: (concept != ROLE_NONE).then(|| concept.to_string()),
    })
}

fn parse_class(cur: &mut LineCursor<'_>) -> Result<WordClass, GrammarError> {
    let name = cur.ident()?.to_string();
    let mut class = WordClass {
        name,
        parent: None,
        is_abstract: false,
        predicts: None,
    };
    while !cur.at_end() {
        let tok = cur.ident()?;
        match tok {
            "abstract" => class.is_abstract = true,
            "predicts-head" | "predicts-modifier" => {
                cur.expect('(')?;
                let set: Vec<String> = parse_value_set(cur)?.into_iter().collect();
                cur.expect(')')?;
                class.predicts = Some(if tok == "predicts-head" {
                    Prediction::Head(set)
                } else {
                    Prediction::Modifier(set)
                });
            }
            parent if class.parent.is_none() && !class.is_abstract && class.predicts.is_none() => {
                class.parent = Some(parent.to_string())
            }
            other => return Err(cur.error(format!("unexpected `{}`", other))),
        }
    }
    Ok(class)
}

fn parse_feature_decl(cur: &mut LineCursor<'_>) -> Result<FeatureDecl, GrammarError> {
    let name = cur.ident()?.to_string();
    cur.expect('=')?;
    let mut domain = Vec::new();
    loop {
        let v = cur.ident()?.to_string();
        if domain.contains(&v) {
            return Err(cur.error(format!("duplicate value `{}`", v)));
        }
        domain.push(v);
        if !cur.eat('|') {
            break;
        }
    }
    cur.expect_end()?;
    Ok(FeatureDecl { name, domain })
}

/// Parses and validates a lexicon document.
pub fn load_lexicon(source: &str) -> Result<Lexicon, GrammarError> {
    let mut section = Section::None;
    let mut classes = Vec::new();
    let mut features = Vec::new();
    let mut barriers = BTreeSet::new();
    let mut raw_entries = Vec::new();

    for (i, raw) in source.lines().enumerate() {
        let line_no = i + 1;
        let text = strip_comment(raw);
        let trimmed = text.trim();
        if trimmed.is_empty() {
            continue;
        }
        let header = match trimmed {
            "classes:" => Some(Section::Classes),
            "features:" => Some(Section::Features),
            "barriers:" => Some(Section::Barriers),
            "entries:" => Some(Section::Entries),
            _ => None,
        };
        if let Some(h) = header {
            section = h;
            continue;
        }
        let mut cur = LineCursor::new(line_no, text);
        match section {
            Section::None => return Err(cur.error("content before any section header")),
            Section::Classes => classes.push(parse_class(&mut cur)?),
            Section::Features => features.push(parse_feature_decl(&mut cur)?),
            Section::Barriers => {
                let b = cur.word()?;
                cur.expect_end()?;
                barriers.insert(b.to_string());
            }
            Section::Entries => raw_entries.push(parse_entry(&mut cur)?),
        }
    }
    build_lexicon(classes, features, barriers, raw_entries)
}

fn build_lexicon(
    classes: Vec<WordClass>,
    features: Vec<FeatureDecl>,
    barriers: BTreeSet<String>,
    raw_entries: Vec<LexemeEntry>,
) -> Result<Lexicon, GrammarError> {
    let mut lex = Lexicon {
        barriers,
        ..Lexicon::default()
    };
    for c in classes {
        if lex.class_index.contains_key(&c.name) {
            return Err(GrammarError::semantic(c.name, "class declared twice"));
        }
        lex.class_index.insert(c.name.clone(), lex.classes.len());
        lex.classes.push(c);
    }
    validate_hierarchy(&lex)?;
    for c in &lex.classes {
        if let Some(Prediction::Head(v) | Prediction::Modifier(v)) = &c.predicts {
            for p in v {
                if lex.class(p).is_none() {
                    return Err(GrammarError::semantic(p, "unknown predicted class"));
                }
            }
        }
    }

    for d in &features {
        if d.domain.is_empty() {
            return Err(GrammarError::semantic(&d.name, "empty feature domain"));
        }
        if features.iter().filter(|e| e.name == d.name).count() > 1 {
            return Err(GrammarError::semantic(&d.name, "feature declared twice"));
        }
    }
    lex.features = features;

    for e in raw_entries {
        validate_entry(&lex, &e)?;
        if e.is_template() {
            if lex.templates.contains_key(&e.word_class) {
                return Err(GrammarError::semantic(
                    &e.word_class,
                    "virtual template declared twice",
                ));
            }
            lex.templates.insert(e.word_class.clone(), Arc::new(e));
        } else {
            lex.entries
                .entry(e.surface.clone())
                .or_default()
                .push(Arc::new(e));
        }
    }
    Ok(lex)
}

fn validate_hierarchy(lex: &Lexicon) -> Result<(), GrammarError> {
    let roots: Vec<&WordClass> = lex.classes.iter().filter(|c| c.parent.is_none()).collect();
    if lex.classes.is_empty() {
        return Err(GrammarError::semantic(
            "classes",
            "no word classes declared",
        ));
    }
    if roots.len() != 1 {
        let names: Vec<&str> = roots.iter().map(|c| c.name.as_str()).collect();
        return Err(GrammarError::semantic(
            names.join(","),
            "class hierarchy must have exactly one root",
        ));
    }
    for c in &lex.classes {
        let mut seen = BTreeSet::new();
        let mut cur = c;
        while let Some(p) = &cur.parent {
            if !seen.insert(cur.name.as_str()) {
                return Err(GrammarError::semantic(&c.name, "cycle in class hierarchy"));
            }
            cur = lex
                .class(p)
                .ok_or_else(|| GrammarError::semantic(p, "unknown parent class"))?;
        }
    }
    Ok(())
}

fn validate_features(lex: &Lexicon, fs: &FeatureStructure) -> Result<(), GrammarError> {
    for (name, values) in &fs.0 {
        let decl = lex
            .feature(name)
            .ok_or_else(|| GrammarError::semantic(name, "undeclared feature"))?;
        if values.is_empty() {
            return Err(GrammarError::semantic(name, "empty feature value set"));
        }
        for v in values {
            if !decl.domain.contains(v) {
                return Err(GrammarError::semantic(v, "value outside feature domain"));
            }
        }
    }
    Ok(())
}

fn validate_entry(lex: &Lexicon, e: &LexemeEntry) -> Result<(), GrammarError> {
    let class = lex
        .class(&e.word_class)
        .ok_or_else(|| GrammarError::semantic(&e.word_class, "unknown word class"))?;
    if class.is_abstract && !e.is_template() {
        return Err(GrammarError::semantic(
            &e.word_class,
            "lexical entry of abstract class",
        ));
    }
    validate_features(lex, &e.features)?;
    let mut seen_ranks = BTreeSet::new();
    let mut seen_names = BTreeSet::new();
    for s in &e.frame {
        if !seen_names.insert(&s.name) {
            return Err(GrammarError::semantic(&s.name, "slot declared twice"));
        }
        if lex.class(&s.modifier_class).is_none() {
            return Err(GrammarError::semantic(
                &s.modifier_class,
                "unknown word class",
            ));
        }
        validate_features(lex, &s.modifier_features)?;
        for a in &s.agreement {
            if lex.feature(a).is_none() {
                return Err(GrammarError::semantic(a, "undeclared feature"));
            }
        }
        if !seen_ranks.insert((s.direction, s.rank)) {
            return Err(GrammarError::semantic(
                &s.name,
                "order rank reused on one side of a frame",
            ));
        }
    }
    Ok(())
}

/// Checks that every concept and role a lexicon mentions is known to the
/// schema.
pub fn check_against_schema(
    lex: &Lexicon,
    schema: &crate::kb::KbSchema,
) -> Result<(), GrammarError> {
    for e in lex.entries().chain(lex.templates.values()) {
        if let Some(c) = &e.concept {
            if schema.concept(c).is_none() {
                return Err(GrammarError::semantic(c, "unknown concept"));
            }
        }
        for s in &e.frame {
            if s.role == ROLE_NONE || s.role == ROLE_INHERIT {
                continue;
            }
            if !schema.has_role(&s.role) {
                return Err(GrammarError::semantic(&s.role, "unknown conceptual role"));
            }
            if let Some(c) = &e.concept {
                if schema.role_of(c, &s.role).is_none() {
                    return Err(GrammarError::semantic(
                        &s.role,
                        format!("role not defined on concept {}", c),
                    ));
                }
            }
        }
    }
    Ok(())
}
