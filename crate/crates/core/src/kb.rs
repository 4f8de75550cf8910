//! A small terminological knowledge base: a concept tree with typed roles,
//! copy-on-write interpretation contexts and the conceptual attachment test.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::{self, Write as _};
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grammar::{strip_comment, GrammarError, LineCursor};
use crate::metrics::Metrics;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KbError {
    #[error(transparent)]
    Format(#[from] GrammarError),
    #[error("unknown concept `{0}`")]
    UnknownConcept(String),
    #[error("cannot instantiate abstract concept `{0}`")]
    AbstractConcept(String),
}

fn semantic(identifier: &str, message: &str) -> KbError {
    KbError::Format(GrammarError::Semantic {
        identifier: identifier.to_string(),
        message: message.to_string(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoleDef {
    pub name: String,
    pub filler: String,
    pub max_cardinality: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KbConcept {
    pub name: String,
    pub parent: Option<String>,
    pub is_abstract: bool,
    pub roles: Vec<RoleDef>,
}

#[derive(Debug, Clone, Default)]
pub struct KbSchema {
    concepts: Vec<KbConcept>,
    index: HashMap<String, usize>,
}

impl KbSchema {
    pub fn concept(&self, name: &str) -> Option<&KbConcept> {
        self.index.get(name).map(|&i| &self.concepts[i])
    }

    pub fn concepts(&self) -> &[KbConcept] {
        &self.concepts
    }

    pub fn has_role(&self, role: &str) -> bool {
        self.concepts
            .iter()
            .any(|c| c.roles.iter().any(|r| r.name == role))
    }

    /// The nearest definition of `role` on `concept` or one of its ancestors.
    pub fn role_of(&self, concept: &str, role: &str) -> Option<&RoleDef> {
        let mut cur = self.concept(concept);
        while let Some(c) = cur {
            if let Some(r) = c.roles.iter().find(|r| r.name == role) {
                return Some(r);
            }
            cur = c.parent.as_deref().and_then(|p| self.concept(p));
        }
        None
    }

    pub fn subsumes(&self, general: &str, specific: &str) -> Result<bool, KbError> {
        if self.concept(general).is_none() {
            return Err(KbError::UnknownConcept(general.to_string()));
        }
        let mut cur = Some(
            self.concept(specific)
                .ok_or_else(|| KbError::UnknownConcept(specific.to_string()))?,
        );
        while let Some(c) = cur {
            if c.name == general {
                return Ok(true);
            }
            cur = c.parent.as_deref().and_then(|p| self.concept(p));
        }
        Ok(false)
    }

    pub(crate) fn subsumes_known(&self, general: &str, specific: &str) -> bool {
        self.subsumes(general, specific).unwrap_or(false)
    }
}

impl fmt::Display for KbSchema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "concepts:")?;
        for c in &self.concepts {
            f.write_str(&c.name)?;
            if let Some(p) = &c.parent {
                write!(f, " {}", p)?;
            }
            if c.is_abstract {
                f.write_str(" abstract")?;
            }
            if !c.roles.is_empty() {
                let roles: Vec<String> = c
                    .roles
                    .iter()
                    .map(|r| format!("{} {} {}", r.name, r.filler, r.max_cardinality))
                    .collect();
                write!(f, " roles({})", roles.join(", "))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

fn parse_concept(cur: &mut LineCursor<'_>) -> Result<KbConcept, GrammarError> {
    let name = cur.ident()?.to_string();
    let mut concept = KbConcept {
        name,
        parent: None,
        is_abstract: false,
        roles: Vec::new(),
    };
    while !cur.at_end() {
        if cur.rest_starts_with("roles(") {
            cur.ident()?;
            cur.expect('(')?;
            loop {
                let role = cur.ident()?.to_string();
                let filler = cur.ident()?.to_string();
                let max_text = cur.ident()?;
                let max_cardinality = max_text
                    .parse()
                    .ok()
                    .filter(|&n: &usize| n > 0)
                    .ok_or_else(|| cur.error(format!("bad cardinality `{}`", max_text)))?;
                concept.roles.push(RoleDef {
                    name: role,
                    filler,
                    max_cardinality,
                });
                if cur.eat(')') {
                    break;
                }
                cur.expect(',')?;
            }
            cur.expect_end()?;
            break;
        }
        let tok = cur.ident()?;
        match tok {
            "abstract" => concept.is_abstract = true,
            p if concept.parent.is_none() && !concept.is_abstract => {
                concept.parent = Some(p.to_string())
            }
            other => return Err(cur.error(format!("unexpected `{}`", other))),
        }
    }
    Ok(concept)
}

/// Parses and validates a schema document (`concepts:` section).
pub fn define_schema(source: &str) -> Result<KbSchema, KbError> {
    let mut in_section = false;
    let mut schema = KbSchema::default();
    for (i, raw) in source.lines().enumerate() {
        let text = strip_comment(raw);
        let trimmed = text.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed == "concepts:" {
            in_section = true;
            continue;
        }
        let mut cur = LineCursor::new(i + 1, text);
        if !in_section {
            return Err(cur.error("content before `concepts:`").into());
        }
        let c = parse_concept(&mut cur)?;
        if schema.index.contains_key(&c.name) {
            return Err(semantic(&c.name, "concept declared twice"));
        }
        schema.index.insert(c.name.clone(), schema.concepts.len());
        schema.concepts.push(c);
    }
    validate_schema(&schema)?;
    Ok(schema)
}

fn validate_schema(schema: &KbSchema) -> Result<(), KbError> {
    for c in &schema.concepts {
        let mut seen = BTreeSet::new();
        let mut cur = c;
        while let Some(p) = &cur.parent {
            if !seen.insert(cur.name.as_str()) {
                return Err(semantic(&c.name, "cycle in concept hierarchy"));
            }
            cur = schema
                .concept(p)
                .ok_or_else(|| semantic(p, "unknown parent concept"))?;
        }
    }
    for c in &schema.concepts {
        for r in &c.roles {
            if schema.concept(&r.filler).is_none() {
                return Err(semantic(&r.filler, "unknown role filler concept"));
            }
            let inherited = c.parent.as_deref().and_then(|p| schema.role_of(p, &r.name));
            if let Some(base) = inherited {
                if !schema.subsumes_known(&base.filler, &r.filler) {
                    return Err(semantic(
                        &r.name,
                        "inherited role restricted outside the parent's filler",
                    ));
                }
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Instances and contexts
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct InstanceId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ReferentId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ContextId(pub u32);

impl fmt::Display for InstanceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "i{}", self.0)
    }
}

impl fmt::Display for ReferentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KbInstance {
    pub id: InstanceId,
    pub concept: String,
    pub referent: ReferentId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceRecord {
    pub concept: String,
    pub referent: ReferentId,
    pub fillers: BTreeMap<String, Vec<InstanceId>>,
}

/// An interpretation context. Children see their ancestors' records and
/// shadow them on write.
#[derive(Debug, Clone)]
pub struct KbContext {
    id: ContextId,
    parent: Option<Arc<KbContext>>,
    local: BTreeMap<InstanceId, InstanceRecord>,
}

impl KbContext {
    pub fn id(&self) -> ContextId {
        self.id
    }

    pub fn parent_id(&self) -> Option<ContextId> {
        self.parent.as_ref().map(|p| p.id)
    }

    pub fn record(&self, inst: InstanceId) -> Option<&InstanceRecord> {
        let mut cur = Some(self);
        while let Some(c) = cur {
            if let Some(r) = c.local.get(&inst) {
                return Some(r);
            }
            cur = c.parent.as_deref();
        }
        None
    }

    /// Every visible instance with its effective record.
    pub fn instances(&self) -> BTreeMap<InstanceId, &InstanceRecord> {
        let mut out = BTreeMap::new();
        let mut cur = Some(self);
        while let Some(c) = cur {
            for (id, r) in &c.local {
                out.entry(*id).or_insert(r);
            }
            cur = c.parent.as_deref();
        }
        out
    }

    fn ancestor_ids(&self) -> BTreeSet<ContextId> {
        let mut out = BTreeSet::new();
        let mut cur = Some(self);
        while let Some(c) = cur {
            out.insert(c.id);
            cur = c.parent.as_deref();
        }
        out
    }

    /// Instance graph, one line per instance: `id: Concept {role -> id, ...}`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (id, r) in self.instances() {
            let _ = write!(out, "{}: {} {{", id, r.concept);
            let mut first = true;
            for (role, fillers) in &r.fillers {
                for f in fillers {
                    if !first {
                        out.push_str(", ");
                    }
                    first = false;
                    let _ = write!(out, "{} -> {}", role, f);
                }
            }
            out.push_str("}\n");
        }
        out
    }
}

/// Session-scoped knowledge base: the schema plus identifier allocators.
#[derive(Debug)]
pub struct Kb {
    schema: Arc<KbSchema>,
    next_context: AtomicU32,
    next_instance: AtomicU32,
    next_referent: AtomicU32,
}

impl Kb {
    pub fn new(schema: Arc<KbSchema>) -> Self {
        Kb {
            schema,
            next_context: AtomicU32::new(0),
            next_instance: AtomicU32::new(0),
            next_referent: AtomicU32::new(0),
        }
    }

    pub fn schema(&self) -> &KbSchema {
        &self.schema
    }

    fn fresh_context(&self) -> ContextId {
        ContextId(self.next_context.fetch_add(1, Ordering::Relaxed))
    }

    pub fn root_context(&self) -> KbContext {
        KbContext {
            id: self.fresh_context(),
            parent: None,
            local: BTreeMap::new(),
        }
    }

    pub fn fork(&self, parent: &KbContext) -> KbContext {
        KbContext {
            id: self.fresh_context(),
            parent: Some(Arc::new(parent.clone())),
            local: BTreeMap::new(),
        }
    }

    pub fn instantiate(&self, ctx: &mut KbContext, concept: &str) -> Result<KbInstance, KbError> {
        let c = self
            .schema
            .concept(concept)
            .ok_or_else(|| KbError::UnknownConcept(concept.to_string()))?;
        if c.is_abstract {
            return Err(KbError::AbstractConcept(concept.to_string()));
        }
        let id = InstanceId(self.next_instance.fetch_add(1, Ordering::Relaxed));
        let referent = ReferentId(self.next_referent.fetch_add(1, Ordering::Relaxed));
        ctx.local.insert(
            id,
            InstanceRecord {
                concept: concept.to_string(),
                referent,
                fillers: BTreeMap::new(),
            },
        );
        Ok(KbInstance {
            id,
            concept: concept.to_string(),
            referent,
        })
    }

    /// Inserts or replaces a record directly; used when folding sentence
    /// results into a text context.
    pub fn put_record(&self, ctx: &mut KbContext, id: InstanceId, record: InstanceRecord) {
        ctx.local.insert(id, record);
    }

    /// Removes an instance from the context's own layer.
    pub fn remove_local(&self, ctx: &mut KbContext, id: InstanceId) -> Option<InstanceRecord> {
        ctx.local.remove(&id)
    }

    /// Fills `role` of `head` with `filler` in a fresh child of `ctx`, or
    /// returns `None` if the role is undefined, the filler's concept is not
    /// admissible, or the role is saturated.
    pub fn concept_check(
        &self,
        ctx: &KbContext,
        head: InstanceId,
        role: &str,
        filler: InstanceId,
        metrics: &Metrics,
    ) -> Option<KbContext> {
        metrics.count_concept_check();
        let head_rec = ctx.record(head)?;
        let filler_rec = ctx.record(filler)?;
        let def = self.schema.role_of(&head_rec.concept, role)?;
        if !self.schema.subsumes_known(&def.filler, &filler_rec.concept) {
            return None;
        }
        let current = head_rec.fillers.get(role).map_or(0, Vec::len);
        if current >= def.max_cardinality {
            return None;
        }
        let mut updated = head_rec.clone();
        updated
            .fillers
            .entry(role.to_string())
            .or_default()
            .push(filler);
        let mut child = self.fork(ctx);
        child.local.insert(head, updated);
        Some(child)
    }

    /// A child of `base` that also carries every record `other` changed
    /// since its common ancestor with `base`. The two contexts must touch
    /// disjoint instances.
    pub fn merge(&self, base: &KbContext, other: &KbContext) -> KbContext {
        let shared = base.ancestor_ids();
        let mut child = self.fork(base);
        let mut cur = Some(other);
        while let Some(c) = cur {
            if shared.contains(&c.id) {
                break;
            }
            for (id, r) in &c.local {
                child.local.entry(*id).or_insert_with(|| r.clone());
            }
            cur = c.parent.as_deref();
        }
        child
    }
}
