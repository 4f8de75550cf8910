//! Serial bottom-up chart parser used as the comparison baseline.
//!
//! Edges are projective dependency trees over contiguous token spans. Two
//! adjacent edges combine when the root of one attaches to a rim word of
//! the other, using the same syntactic and conceptual checks (and the same
//! counters) as the actor parser. The chart never predicts, skips or
//! backtracks; it simply enumerates.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::grammar::{Direction, Lexicon};
use crate::kb::{Kb, KbContext, KbSchema};
use crate::metrics::{Metrics, MetricsSnapshot};
use crate::parser::{ParserConfig, Reading};
use crate::tree::{try_attach, DepTree, ReadingSignature, WordNode};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ChartError {
    #[error("empty input")]
    EmptyInput,
    #[error("unknown word `{surface}` at position {position}")]
    UnknownWord { surface: String, position: usize },
}

#[derive(Debug, Clone)]
pub struct Edge {
    /// Half-open token span.
    pub start: usize,
    pub end: usize,
    pub tree: DepTree,
    pub ctx: KbContext,
}

#[derive(Debug, Clone)]
pub struct ChartResult {
    pub tokens: Vec<String>,
    pub readings: Vec<Reading>,
    pub counters: MetricsSnapshot,
    pub edges: usize,
}

impl ChartResult {
    pub fn is_complete(&self) -> bool {
        !self.readings.is_empty()
    }
}

pub struct ChartParser<'a> {
    lex: &'a Lexicon,
    schema: std::sync::Arc<KbSchema>,
    all_slots: bool,
}

/// Every word still missing a mandatory dependent on one side must remain
/// reachable from that side, or the edge can never be completed.
fn viable(tree: &DepTree) -> bool {
    let left: BTreeSet<usize> = tree.left_rim().into_iter().collect();
    let right: BTreeSet<usize> = tree.right_rim().into_iter().collect();
    (0..tree.nodes.len()).all(|i| {
        tree.unfilled_mandatory(i).all(|s| match s.direction {
            Direction::Left => left.contains(&i),
            Direction::Right => right.contains(&i),
        })
    })
}

impl<'a> ChartParser<'a> {
    pub fn new(lex: &'a Lexicon, schema: std::sync::Arc<KbSchema>, config: &ParserConfig) -> Self {
        ChartParser {
            lex,
            schema,
            all_slots: config.fork_on_multi_slot,
        }
    }

    pub fn parse(&self, tokens: &[String]) -> Result<ChartResult, ChartError> {
        if tokens.is_empty() {
            return Err(ChartError::EmptyInput);
        }
        let kb = Kb::new(self.schema.clone());
        let metrics = Metrics::new();
        let base = kb.root_context();
        let n = tokens.len();
        let barrier: Vec<bool> = tokens.iter().map(|t| self.lex.is_barrier(t)).collect();
        // cells[i][j] holds edges spanning i..j.
        let mut cells: Vec<Vec<Vec<Edge>>> = vec![vec![Vec::new(); n + 1]; n + 1];
        for (t, surface) in tokens.iter().enumerate() {
            if barrier[t] {
                continue;
            }
            let entries = self.lex.lookup(surface);
            if entries.is_empty() {
                return Err(ChartError::UnknownWord {
                    surface: surface.clone(),
                    position: t,
                });
            }
            for e in entries {
                let mut ctx = kb.fork(&base);
                let inst = e
                    .concept
                    .as_ref()
                    .and_then(|c| kb.instantiate(&mut ctx, c).ok())
                    .map(|i| i.id);
                cells[t][t + 1].push(Edge {
                    start: t,
                    end: t + 1,
                    tree: DepTree::singleton(WordNode::lexical(e.clone(), t, inst)),
                    ctx,
                });
            }
        }
        for len in 2..=n {
            for i in 0..=n - len {
                let j = i + len;
                if barrier[i..j].iter().any(|&b| b) {
                    continue;
                }
                let mut seen: BTreeSet<ReadingSignature> = BTreeSet::new();
                let mut found = Vec::new();
                for (k, left) in cells[i].iter().enumerate().take(j).skip(i + 1) {
                    for a in left {
                        for b in &cells[k][j] {
                            for e in self.combine(&kb, a, b, &metrics) {
                                if viable(&e.tree) && seen.insert(e.tree.signature()) {
                                    found.push(e);
                                }
                            }
                        }
                    }
                }
                cells[i][j] = found;
            }
        }
        let first = barrier.iter().position(|&b| !b);
        let last = barrier.iter().rposition(|&b| !b);
        let mut readings: Vec<Reading> = match (first, last) {
            (Some(s), Some(e)) => cells[s][e + 1]
                .iter()
                .filter(|e| e.tree.is_saturated())
                .map(|e| Reading {
                    tree: e.tree.clone(),
                    ctx: e.ctx.clone(),
                })
                .collect(),
            _ => Vec::new(),
        };
        readings.sort_by_cached_key(|r| r.tree.signature());
        metrics.count_readings(readings.len() as u64, 0);
        let edges = cells.iter().flatten().map(Vec::len).sum();
        Ok(ChartResult {
            tokens: tokens.to_vec(),
            readings,
            counters: metrics.snapshot(),
            edges,
        })
    }

    /// All edges obtained by hanging `b` under the right rim of `a` or `a`
    /// under the left rim of `b`.
    fn combine(&self, kb: &Kb, a: &Edge, b: &Edge, metrics: &Metrics) -> Vec<Edge> {
        let mut out = Vec::new();
        for h in a.tree.right_rim() {
            for att in try_attach(
                self.lex,
                kb,
                &a.tree,
                &a.ctx,
                h,
                &b.tree,
                &b.ctx,
                b.tree.root,
                metrics,
                self.all_slots,
            ) {
                let (tree, _) = a.tree.attach(h, &b.tree, &att.unify);
                out.push(Edge {
                    start: a.start,
                    end: b.end,
                    tree,
                    ctx: att.ctx,
                });
            }
        }
        for h in b.tree.left_rim() {
            for att in try_attach(
                self.lex,
                kb,
                &b.tree,
                &b.ctx,
                h,
                &a.tree,
                &a.ctx,
                a.tree.root,
                metrics,
                self.all_slots,
            ) {
                let (tree, _) = b.tree.attach(h, &a.tree, &att.unify);
                out.push(Edge {
                    start: a.start,
                    end: b.end,
                    tree,
                    ctx: att.ctx,
                });
            }
        }
        out
    }
}
