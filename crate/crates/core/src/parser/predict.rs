//! Virtual words: prediction, merge, split, and the auxiliary projective
//! relations that bridge the non-projective configurations a split leaves.

use std::collections::BTreeSet;

use crate::grammar::{Lexicon, Prediction};
use crate::kb::{Kb, KbContext};
use crate::metrics::Metrics;
use crate::tree::{try_attach, DepTree, Position, WordNode};
use crate::unify::unify_features;

use super::messages::PhraseData;

pub(crate) type Candidate = (DepTree, KbContext);

/// Linear key that places virtual words after every token.
pub(crate) fn pos_key(p: Position) -> i64 {
    match p {
        Position::Token(t) => t as i64,
        Position::Virtual(k) => (1i64 << 33) + i64::from(k),
    }
}

/// Copy of the subtree under `idx`, detached from its head.
pub(crate) fn extract(tree: &DepTree, idx: usize) -> DepTree {
    let mut t = DepTree {
        nodes: tree.nodes.clone(),
        root: idx,
    };
    t.nodes[idx].head = None;
    t.compact()
}

/// `tree` without the subtrees under `cut`; also returns the old-to-new
/// index map (`usize::MAX` for removed nodes).
pub(crate) fn remove_subtrees(tree: &DepTree, cut: &[usize]) -> (DepTree, Vec<usize>) {
    let mut t = tree.clone();
    for &c in cut {
        if let Some((h, _)) = t.nodes[c].head.take() {
            t.nodes[h].dependents.retain(|(_, d)| *d != c);
        }
    }
    let keep = t.subtree(t.root);
    let mut map = vec![usize::MAX; t.nodes.len()];
    let mut order = keep;
    order.sort_unstable();
    for (new, &old) in order.iter().enumerate() {
        map[old] = new;
    }
    (t.compact(), map)
}

/// Dependents of `v`, nearest to `anchor` first.
fn deps_by_proximity(tree: &DepTree, v: usize, anchor: Position) -> Vec<usize> {
    let mut deps: Vec<usize> = tree.nodes[v].dependents.iter().map(|(_, d)| *d).collect();
    let a = pos_key(anchor);
    deps.sort_by_key(|&d| {
        let p = pos_key(tree.nodes[d].position);
        ((p - a).abs(), p)
    });
    deps
}

fn attach_first(
    lex: &Lexicon,
    kb: &Kb,
    metrics: &Metrics,
    head_tree: &DepTree,
    head: usize,
    modifier: &DepTree,
    ctx: &KbContext,
) -> Option<Candidate> {
    let att = try_attach(
        lex,
        kb,
        head_tree,
        ctx,
        head,
        modifier,
        ctx,
        modifier.root,
        metrics,
        false,
    )
    .into_iter()
    .next()?;
    Some((head_tree.attach(head, modifier, &att.unify).0, att.ctx))
}

/// Hangs `sub` back under what used to govern the virtual word `v`.
fn rehang(
    lex: &Lexicon,
    kb: &Kb,
    metrics: &Metrics,
    data: &PhraseData,
    v: usize,
    sub: DepTree,
    ctx: KbContext,
) -> Option<Candidate> {
    match data.tree.nodes[v].head.clone() {
        None => Some((annotate_aux(&sub), ctx)),
        Some((g, _)) => {
            let (rest, map) = remove_subtrees(&data.tree, &[v]);
            let (t, ctx) = attach_first(lex, kb, metrics, &rest, map[g], &sub, &ctx)?;
            Some((annotate_aux(&t), ctx))
        }
    }
}

/// The item replaces the virtual word `v` if it is at least as specific
/// and can govern every dependent of `v`.
pub(crate) fn merge(
    lex: &Lexicon,
    kb: &Kb,
    metrics: &Metrics,
    data: &PhraseData,
    v: usize,
    item: &PhraseData,
) -> Option<Candidate> {
    let vn = &data.tree.nodes[v];
    let r = item.tree.root;
    let rn = &item.tree.nodes[r];
    if !lex.subsumes_class(vn.class(), rn.class()) {
        return None;
    }
    let feats = unify_features(lex, &rn.features, &vn.features, vn.features.features()).ok()??;
    let mut cur = item.tree.clone();
    cur.nodes[r].features = feats;
    let mut ctx = kb.merge(&data.ctx, &item.ctx);
    for d in deps_by_proximity(&data.tree, v, rn.position) {
        let sub = extract(&data.tree, d);
        let (t, c) = attach_first(lex, kb, metrics, &cur, cur.root, &sub, &ctx)?;
        cur = t;
        ctx = c;
    }
    rehang(lex, kb, metrics, data, v, cur, ctx)
}

/// The item takes over the dependents of `v` it can govern and is itself
/// subordinated under the residual virtual word keeping the rest.
pub(crate) fn split(
    lex: &Lexicon,
    kb: &Kb,
    metrics: &Metrics,
    data: &PhraseData,
    v: usize,
    item: &PhraseData,
) -> Option<Candidate> {
    let mut cur = item.tree.clone();
    let mut ctx = kb.merge(&data.ctx, &item.ctx);
    let mut moved = Vec::new();
    for d in deps_by_proximity(&data.tree, v, item.tree.root_node().position) {
        let sub = extract(&data.tree, d);
        if let Some((t, c)) = attach_first(lex, kb, metrics, &cur, cur.root, &sub, &ctx) {
            cur = t;
            ctx = c;
            moved.push(d);
        }
    }
    if moved.is_empty() {
        return None;
    }
    let (rest, map) = remove_subtrees(&data.tree, &moved);
    let (t, ctx) = attach_first(lex, kb, metrics, &rest, map[v], &cur, &ctx)?;
    Some((annotate_aux(&t), ctx))
}

pub(crate) fn merge_or_split(
    lex: &Lexicon,
    kb: &Kb,
    metrics: &Metrics,
    data: &PhraseData,
    v: usize,
    item: &PhraseData,
) -> (Vec<Candidate>, Vec<Candidate>) {
    if let Some(m) = merge(lex, kb, metrics, data, v, item) {
        return (vec![m], Vec::new());
    }
    (
        Vec::new(),
        split(lex, kb, metrics, data, v, item).into_iter().collect(),
    )
}

/// The prediction licensed by `class` or its nearest ancestor.
fn licensed(lex: &Lexicon, class: &str) -> Option<Prediction> {
    let mut cur = Some(class);
    while let Some(c) = cur {
        let wc = lex.class(c)?;
        if let Some(p) = &wc.predicts {
            return Some(p.clone());
        }
        cur = wc.parent.as_deref();
    }
    None
}

pub(crate) fn licenses_prediction(lex: &Lexicon, class: &str) -> bool {
    licensed(lex, class).is_some()
}

/// Builds the tentative structures a trigger phrase licenses: one per
/// collapsed predicted class.
pub(crate) fn predict(
    lex: &Lexicon,
    kb: &Kb,
    metrics: &Metrics,
    item: &PhraseData,
    seq: u32,
) -> Vec<Candidate> {
    let Some(pred) = licensed(lex, item.tree.root_node().class()) else {
        return Vec::new();
    };
    let (classes, as_head) = match pred {
        Prediction::Head(v) => (v, true),
        Prediction::Modifier(v) => (v, false),
    };
    let set: BTreeSet<String> = classes.into_iter().collect();
    let collapsed = lex.collapse_predictions(&set).unwrap_or(set);
    let mut out = Vec::new();
    for class in collapsed {
        let Some(template) = lex.virtual_template(&class) else {
            continue;
        };
        let mut node = WordNode::virtual_word(template.clone(), seq);
        if template.word_class != class {
            // A template borrowed from an ancestor still stands for `class`.
            let mut e = (**template).clone();
            e.word_class = class.clone();
            node.entry = std::sync::Arc::new(e);
            node.surface = format!("*V:{}*", class);
        }
        let virt = DepTree::singleton(node);
        let found = if as_head {
            attach_first(lex, kb, metrics, &virt, 0, &item.tree, &item.ctx)
        } else {
            attach_first(
                lex,
                kb,
                metrics,
                &item.tree,
                item.tree.root,
                &virt,
                &item.ctx,
            )
        };
        out.extend(found);
    }
    out
}

/// Recomputes auxiliary projective relations: a dependent whose arc
/// crosses material its head does not dominate is linked to the nearest
/// ancestor of the head that spans it projectively.
pub(crate) fn annotate_aux(tree: &DepTree) -> DepTree {
    let mut t = tree.clone();
    for n in &mut t.nodes {
        n.aux_head = None;
    }
    let spans = |t: &DepTree, a: usize, d: usize| {
        let (x, y) = (pos_key(t.nodes[a].position), pos_key(t.nodes[d].position));
        let (lo, hi) = if x < y { (x, y) } else { (y, x) };
        t.nodes.iter().enumerate().all(|(i, n)| {
            let p = pos_key(n.position);
            p <= lo || p >= hi || t.dominates(a, i)
        })
    };
    for d in 0..t.nodes.len() {
        let Some((h, _)) = t.nodes[d].head.clone() else {
            continue;
        };
        if spans(&t, h, d) {
            continue;
        }
        let mut cur = t.nodes[h].head.as_ref().map(|(g, _)| *g);
        while let Some(a) = cur {
            if spans(&t, a, d) {
                t.nodes[d].aux_head = Some(a);
                break;
            }
            cur = t.nodes[a].head.as_ref().map(|(g, _)| *g);
        }
    }
    t
}
