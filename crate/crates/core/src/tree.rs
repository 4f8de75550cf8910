//! Dependency trees shared by the actor engine and the chart baseline.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::grammar::{Direction, FeatureStructure, LexemeEntry, Lexicon, ROLE_INHERIT, ROLE_NONE};
use crate::kb::{InstanceId, Kb, KbContext};
use crate::metrics::Metrics;
use crate::runtime::ActorRef;
use crate::unify::{syntax_check_all, UnifyResult, WordView};

/// Surface position of a word. Virtual words have no position yet; they
/// sort after every token, and a later prediction sorts before an earlier
/// one since predicted material nests inside what was predicted before.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Position {
    Token(usize),
    Virtual(u32),
}

impl Position {
    pub fn token(self) -> Option<usize> {
        match self {
            Position::Token(p) => Some(p),
            Position::Virtual(_) => None,
        }
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Position::Token(p) => write!(f, "{}", p),
            Position::Virtual(_) => f.write_str("_"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WordNode {
    pub actor: Option<ActorRef>,
    pub entry: Arc<LexemeEntry>,
    pub surface: String,
    pub position: Position,
    pub features: FeatureStructure,
    pub is_virtual: bool,
    pub instance: Option<InstanceId>,
    pub head: Option<(usize, String)>,
    pub dependents: Vec<(String, usize)>,
    /// Governor of an auxiliary projective relation bridging a
    /// discontinuity, if any.
    pub aux_head: Option<usize>,
}

impl WordNode {
    pub fn lexical(entry: Arc<LexemeEntry>, position: usize, instance: Option<InstanceId>) -> Self {
        WordNode {
            actor: None,
            surface: entry.surface.clone(),
            features: entry.features.clone(),
            entry,
            position: Position::Token(position),
            is_virtual: false,
            instance,
            head: None,
            dependents: Vec::new(),
            aux_head: None,
        }
    }

    pub fn virtual_word(template: Arc<LexemeEntry>, seq: u32) -> Self {
        WordNode {
            actor: None,
            surface: format!("*V:{}*", template.word_class),
            features: template.features.clone(),
            entry: template,
            position: Position::Virtual(u32::MAX - seq),
            is_virtual: true,
            instance: None,
            head: None,
            dependents: Vec::new(),
            aux_head: None,
        }
    }

    pub fn class(&self) -> &str {
        &self.entry.word_class
    }

    pub fn lexeme(&self) -> &str {
        if self.is_virtual {
            "_"
        } else {
            &self.entry.lexeme
        }
    }
}

/// Canonical, engine-independent description of one analysis: for each
/// word its position, lexeme, class, head position and slot.
pub type ReadingSignature = Vec<(Position, String, String, Option<Position>, String)>;

#[derive(Debug, Clone, PartialEq)]
pub struct DepTree {
    pub nodes: Vec<WordNode>,
    pub root: usize,
}

impl DepTree {
    pub fn singleton(node: WordNode) -> Self {
        DepTree {
            nodes: vec![node],
            root: 0,
        }
    }

    pub fn node(&self, idx: usize) -> &WordNode {
        &self.nodes[idx]
    }

    pub fn root_node(&self) -> &WordNode {
        &self.nodes[self.root]
    }

    pub fn view(&self, idx: usize) -> WordView<'_> {
        let n = &self.nodes[idx];
        WordView {
            class: n.class(),
            features: &n.features,
            position: n.position,
            frame: &n.entry.frame,
            dependents: n
                .dependents
                .iter()
                .map(|(s, d)| (s.as_str(), self.nodes[*d].position))
                .collect(),
        }
    }

    fn extreme_dependent(&self, idx: usize, side: Direction) -> Option<usize> {
        let n = &self.nodes[idx];
        let on_side = n.dependents.iter().map(|(_, d)| *d).filter(|&d| {
            let p = self.nodes[d].position;
            match side {
                Direction::Right => p > n.position,
                Direction::Left => p < n.position,
            }
        });
        match side {
            Direction::Right => on_side.max_by_key(|&d| self.nodes[d].position),
            Direction::Left => on_side.min_by_key(|&d| self.nodes[d].position),
        }
    }

    /// Root, its rightmost right dependent, that one's rightmost right
    /// dependent, and so on.
    pub fn right_rim(&self) -> Vec<usize> {
        self.rim(Direction::Right)
    }

    pub fn left_rim(&self) -> Vec<usize> {
        self.rim(Direction::Left)
    }

    fn rim(&self, side: Direction) -> Vec<usize> {
        let mut out = vec![self.root];
        while let Some(next) = self.extreme_dependent(*out.last().unwrap(), side) {
            out.push(next);
        }
        out
    }

    pub fn positions(&self) -> BTreeSet<usize> {
        self.nodes
            .iter()
            .filter_map(|n| n.position.token())
            .collect()
    }

    pub fn has_virtual(&self) -> bool {
        self.nodes.iter().any(|n| n.is_virtual)
    }

    pub fn virtual_nodes(&self) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&i| self.nodes[i].is_virtual)
            .collect()
    }

    pub fn unfilled_mandatory(
        &self,
        idx: usize,
    ) -> impl Iterator<Item = &crate::grammar::ValencySlot> {
        let n = &self.nodes[idx];
        n.entry
            .frame
            .iter()
            .filter(move |s| s.is_mandatory() && !n.dependents.iter().any(|(d, _)| *d == s.name))
    }

    /// Every mandatory slot of every word is filled.
    pub fn is_saturated(&self) -> bool {
        (0..self.nodes.len()).all(|i| self.unfilled_mandatory(i).next().is_none())
    }

    /// The root still lacks a mandatory dependent to its left.
    pub fn root_needs_left_material(&self) -> bool {
        self.unfilled_mandatory(self.root)
            .any(|s| s.direction == Direction::Left)
    }

    /// Copies `modifier` into this tree and links its root under `head`.
    /// Returns the new tree and the index offset of the copied nodes.
    pub fn attach(
        &self,
        head: usize,
        modifier: &DepTree,
        result: &UnifyResult,
    ) -> (DepTree, usize) {
        let offset = self.nodes.len();
        let mut nodes = self.nodes.clone();
        for n in &modifier.nodes {
            let mut c = n.clone();
            c.head = c.head.map(|(h, s)| (h + offset, s));
            c.dependents = c
                .dependents
                .iter()
                .map(|(s, d)| (s.clone(), d + offset))
                .collect();
            c.aux_head = c.aux_head.map(|a| a + offset);
            nodes.push(c);
        }
        let m = modifier.root + offset;
        nodes[m].head = Some((head, result.slot_used.clone()));
        nodes[m].features = result.unified_modifier_features.clone();
        nodes[head].features = result.unified_head_features.clone();
        nodes[head].dependents.push((result.slot_used.clone(), m));
        (
            DepTree {
                nodes,
                root: self.root,
            },
            offset,
        )
    }

    /// Depth-first subtree of `idx`, including `idx`.
    pub fn subtree(&self, idx: usize) -> Vec<usize> {
        let mut out = vec![idx];
        let mut i = 0;
        while i < out.len() {
            out.extend(self.nodes[out[i]].dependents.iter().map(|(_, d)| *d));
            i += 1;
        }
        out
    }

    /// Drops unreachable nodes and renumbers.
    pub fn compact(&self) -> DepTree {
        let keep = self.subtree(self.root);
        let mut map = vec![usize::MAX; self.nodes.len()];
        let mut order = keep.clone();
        order.sort_unstable();
        for (new, &old) in order.iter().enumerate() {
            map[old] = new;
        }
        let nodes = order
            .iter()
            .map(|&old| {
                let mut n = self.nodes[old].clone();
                n.head = n.head.map(|(h, s)| (map[h], s));
                n.dependents = n
                    .dependents
                    .iter()
                    .map(|(s, d)| (s.clone(), map[*d]))
                    .collect();
                n.aux_head = n
                    .aux_head
                    .and_then(|a| (map[a] != usize::MAX).then(|| map[a]));
                n
            })
            .collect();
        DepTree {
            nodes,
            root: map[self.root],
        }
    }

    /// Whether `anc` dominates `idx` (reflexively).
    pub fn dominates(&self, anc: usize, idx: usize) -> bool {
        let mut cur = Some(idx);
        while let Some(c) = cur {
            if c == anc {
                return true;
            }
            cur = self.nodes[c].head.as_ref().map(|(h, _)| *h);
        }
        false
    }

    /// Tokens strictly between `a` and `b` that `head` does not dominate.
    pub fn crossing_arc(&self, head: usize, dep: usize) -> bool {
        let (Some(h), Some(d)) = (
            self.nodes[head].position.token(),
            self.nodes[dep].position.token(),
        ) else {
            return false;
        };
        let (lo, hi) = if h < d { (h, d) } else { (d, h) };
        self.nodes.iter().enumerate().any(|(i, n)| {
            matches!(n.position.token(), Some(p) if p > lo && p < hi) && !self.dominates(head, i)
        })
    }

    pub fn signature(&self) -> ReadingSignature {
        let mut sig: ReadingSignature = self
            .nodes
            .iter()
            .map(|n| {
                let (hp, slot) = match &n.head {
                    Some((h, s)) => (Some(self.nodes[*h].position), s.clone()),
                    None => (None, String::new()),
                };
                (
                    n.position,
                    n.lexeme().to_string(),
                    n.class().to_string(),
                    hp,
                    slot,
                )
            })
            .collect();
        sig.sort();
        sig
    }

    /// Indented text rendering, one word per line.
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.render_node(self.root, 0, &mut out);
        out
    }

    fn render_node(&self, idx: usize, depth: usize, out: &mut String) {
        let n = &self.nodes[idx];
        let _ = write!(
            out,
            "{}{} {} {} {}",
            "  ".repeat(depth),
            n.position,
            n.surface,
            n.lexeme(),
            n.class()
        );
        match &n.head {
            Some((h, s)) => {
                let _ = write!(out, " <-{}- {}", s, self.nodes[*h].position);
            }
            None => out.push_str(" <-root- _"),
        }
        if let Some(a) = n.aux_head {
            let _ = write!(out, " ~{}", self.nodes[a].position);
        }
        out.push('\n');
        let mut deps: Vec<usize> = n.dependents.iter().map(|(_, d)| *d).collect();
        deps.sort_by_key(|&d| self.nodes[d].position);
        for d in deps {
            self.render_node(d, depth + 1, out);
        }
    }
}

/// The instance and role a dependent of `head` via `role` would fill,
/// following transparent slots upward.
pub fn governor(tree: &DepTree, head: usize, role: &str) -> Option<(InstanceId, String)> {
    if role == ROLE_NONE {
        return None;
    }
    if role == ROLE_INHERIT {
        let (g, slot) = tree.nodes[head].head.as_ref()?;
        let role = &tree.nodes[*g].entry.slot(slot)?.role;
        return governor(tree, *g, role);
    }
    tree.nodes[head].instance.map(|i| (i, role.to_string()))
}

/// Instances that stand for the word `idx` conceptually: its own instance,
/// or those of its transparent dependents.
pub fn fillers(tree: &DepTree, idx: usize) -> Vec<InstanceId> {
    let n = &tree.nodes[idx];
    if let Some(i) = n.instance {
        return vec![i];
    }
    n.dependents
        .iter()
        .filter(|(s, _)| n.entry.slot(s).is_some_and(|s| s.role == ROLE_INHERIT))
        .flat_map(|(_, d)| fillers(tree, *d))
        .collect()
}

/// Conceptual links that become checkable once `modifier`'s root hangs
/// under `head` via `slot`.
pub fn concept_links(
    head_tree: &DepTree,
    head: usize,
    slot: &str,
    modifier: &DepTree,
    mod_idx: usize,
) -> Vec<(InstanceId, String, InstanceId)> {
    let Some(role) = head_tree.nodes[head]
        .entry
        .slot(slot)
        .map(|s| s.role.clone())
    else {
        return Vec::new();
    };
    let Some((gov, role)) = governor(head_tree, head, &role) else {
        return Vec::new();
    };
    fillers(modifier, mod_idx)
        .into_iter()
        .map(|f| (gov, role.clone(), f))
        .collect()
}

/// Runs the conceptual checks for `links` in sequence.
pub fn check_links(
    kb: &Kb,
    ctx: KbContext,
    links: &[(InstanceId, String, InstanceId)],
    metrics: &Metrics,
) -> Option<KbContext> {
    let mut ctx = ctx;
    for (h, r, f) in links {
        ctx = kb.concept_check(&ctx, *h, r, *f, metrics)?;
    }
    Some(ctx)
}

#[derive(Debug, Clone)]
pub struct Attachment {
    pub unify: UnifyResult,
    pub ctx: KbContext,
}

/// The full attachment test: grammatical match, then conceptual checks on
/// the merged interpretation context.
#[allow(clippy::too_many_arguments)]
pub fn try_attach(
    lex: &Lexicon,
    kb: &Kb,
    head_tree: &DepTree,
    head_ctx: &KbContext,
    head: usize,
    modifier: &DepTree,
    mod_ctx: &KbContext,
    mod_idx: usize,
    metrics: &Metrics,
    all_slots: bool,
) -> Vec<Attachment> {
    let hv = head_tree.view(head);
    let mv = modifier.view(mod_idx);
    let mut out = Vec::new();
    for u in syntax_check_all(lex, &hv, &mv, metrics) {
        let links = concept_links(head_tree, head, &u.slot_used, modifier, mod_idx);
        let merged = if head_ctx.id() == mod_ctx.id() {
            head_ctx.clone()
        } else {
            kb.merge(head_ctx, mod_ctx)
        };
        if let Some(ctx) = check_links(kb, merged, &links, metrics) {
            out.push(Attachment { unify: u, ctx });
            if !all_slots {
                break;
            }
        }
    }
    out
}
