//! The incremental actor-based parser.
//!
//! Tokens are shifted left to right. Each shift creates a container actor
//! holding one singleton phrase per lexical reading, and the session then
//! drives that container through the attachment protocols, running the
//! actor system to quiescence after every request round:
//!
//! 1. merge/split against virtual words of the preceding container,
//! 2. `searchHeadFor`, then `searchModifierFor` against the preceding
//!    container,
//! 3. prediction of a virtual head or dependent,
//! 4. skipping leftward over containers that yield nothing,
//! 5. backtracking along the historical `previous` links, followed by
//!    reanalysis of the tokens the superseded analysis had absorbed.
//!
//! If all of these fail the container simply waits for later input.

mod actors;
mod messages;
mod output;
mod predict;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grammar::{LexemeEntry, Lexicon};
use crate::kb::{InstanceId, InstanceRecord, Kb, KbContext, KbSchema};
use crate::metrics::{Metrics, MetricsSnapshot};
use crate::runtime::{
    ActorKind, ActorRef, Runtime, RuntimeError, RuntimeStats, ScheduleTrace, Scheduler,
    DEFAULT_STEP_LIMIT,
};
use crate::tree::{DepTree, WordNode};

use actors::{ActorState, ContainerState, ParserBehavior, Reply, ReplyKind};
pub use messages::{Found, Msg, PhraseData};
pub use output::{MachineReading, MachineResult, MachineWord};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct ParserConfig {
    /// Return every slot a modifier fits instead of the lowest-ranked one.
    pub fork_on_multi_slot: bool,
    pub max_virtual_words: usize,
    pub step_limit: u64,
    pub scheduler: Scheduler,
    pub seed: u64,
    /// Centering salience per slot name; lower ranks are more salient.
    /// Slots not listed rank after all listed ones.
    pub salience: BTreeMap<String, u32>,
}

impl Default for ParserConfig {
    fn default() -> Self {
        let salience = [("subj", 0), ("obj", 1), ("pobj", 2), ("pp", 3)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        ParserConfig {
            fork_on_multi_slot: false,
            max_virtual_words: 4,
            step_limit: DEFAULT_STEP_LIMIT,
            scheduler: Scheduler::Deterministic,
            seed: 0,
            salience,
        }
    }
}

impl ParserConfig {
    pub fn from_toml(source: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(source)
    }
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("empty input")]
    EmptyInput,
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coverage {
    Complete,
    Partial,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ParseEvents {
    pub skipped_containers: u32,
    pub backtrack_escalations: u32,
    pub backtracks: u32,
    pub predictions: u32,
    pub merges: u32,
    pub splits: u32,
    pub reanalysis_attachments: u32,
    pub deleted_containers: u32,
}

#[derive(Debug, Clone)]
pub struct Reading {
    pub tree: DepTree,
    pub ctx: KbContext,
}

#[derive(Debug, Clone)]
pub struct ParseResult {
    pub tokens: Vec<String>,
    pub readings: Vec<Reading>,
    pub coverage: Coverage,
    pub skipped_tokens: Vec<usize>,
    pub counters: MetricsSnapshot,
    pub events: ParseEvents,
    pub runtime: RuntimeStats,
    pub trace: ScheduleTrace,
    /// After each token: the rendered phrases of every container in the
    /// textual chain, left to right.
    pub snapshots: Vec<Vec<String>>,
}

impl ParseResult {
    pub fn is_complete(&self) -> bool {
        self.coverage == Coverage::Complete
    }
}

pub fn tokenize(sentence: &str) -> Vec<String> {
    sentence.split_whitespace().map(str::to_string).collect()
}

pub struct Parser {
    lex: Arc<Lexicon>,
    schema: Arc<KbSchema>,
    config: ParserConfig,
}

impl Parser {
    pub fn new(lex: Arc<Lexicon>, schema: Arc<KbSchema>, config: ParserConfig) -> Self {
        Parser {
            lex,
            schema,
            config,
        }
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lex
    }

    pub fn schema(&self) -> &Arc<KbSchema> {
        &self.schema
    }

    pub fn config(&self) -> &ParserConfig {
        &self.config
    }

    pub fn parse(&self, sentence: &str) -> Result<ParseResult, ParseError> {
        let kb = Kb::new(self.schema.clone());
        self.parse_in(&kb, &tokenize(sentence))
    }

    /// Parses `tokens` allocating instances and contexts from `kb`, so
    /// several sentences of one text share identifier spaces.
    pub fn parse_in(&self, kb: &Kb, tokens: &[String]) -> Result<ParseResult, ParseError> {
        if tokens.is_empty() {
            return Err(ParseError::EmptyInput);
        }
        let mut s = Session::new(&self.lex, kb, &self.config, tokens);
        for t in 0..tokens.len() {
            s.shift(t)?;
        }
        Ok(s.finish())
    }
}

/// A lexical reading with its pre-created concept instance, if any.
type TokenReading = (Arc<LexemeEntry>, Option<(InstanceId, InstanceRecord)>);

struct TokenInfo {
    surface: String,
    readings: Vec<TokenReading>,
    barrier: bool,
}

#[derive(Clone, Copy)]
enum Request {
    Head,
    Modifier,
    Prediction,
}

struct Session<'p> {
    lex: &'p Lexicon,
    kb: &'p Kb,
    config: &'p ParserConfig,
    metrics: Metrics,
    rt: Runtime<ActorState, Msg>,
    base: KbContext,
    tokens: Vec<TokenInfo>,
    containers: Vec<ActorRef>,
    last: Option<ActorRef>,
    generation: u32,
    virtual_seq: u32,
    events: ParseEvents,
    trace: ScheduleTrace,
    snapshots: Vec<Vec<String>>,
}

impl<'p> Session<'p> {
    fn new(lex: &'p Lexicon, kb: &'p Kb, config: &'p ParserConfig, tokens: &[String]) -> Self {
        let base = kb.root_context();
        let mut scratch = kb.fork(&base);
        let tokens = tokens
            .iter()
            .map(|surface| {
                let readings = lex
                    .lookup(surface)
                    .iter()
                    .map(|e| {
                        let inst = e.concept.as_ref().and_then(|c| {
                            let i = kb.instantiate(&mut scratch, c).ok()?;
                            let rec = scratch.record(i.id).cloned()?;
                            Some((i.id, rec))
                        });
                        (e.clone(), inst)
                    })
                    .collect();
                TokenInfo {
                    surface: surface.clone(),
                    readings,
                    barrier: lex.is_barrier(surface),
                }
            })
            .collect();
        Session {
            lex,
            kb,
            config,
            metrics: Metrics::new(),
            rt: Runtime::new(config.step_limit),
            base,
            tokens,
            containers: Vec::new(),
            last: None,
            generation: 0,
            virtual_seq: 0,
            events: ParseEvents::default(),
            trace: ScheduleTrace::default(),
            snapshots: Vec::new(),
        }
    }

    // ----- actor bookkeeping -------------------------------------------

    fn token_phrases(&self, t: usize) -> Vec<(DepTree, KbContext)> {
        self.tokens[t]
            .readings
            .iter()
            .map(|(entry, inst)| {
                let mut ctx = self.kb.fork(&self.base);
                let id = inst.as_ref().map(|(id, rec)| {
                    self.kb.put_record(&mut ctx, *id, rec.clone());
                    *id
                });
                (
                    DepTree::singleton(WordNode::lexical(entry.clone(), t, id)),
                    ctx,
                )
            })
            .collect()
    }

    fn spawn_phrase(&mut self, mut tree: DepTree, ctx: KbContext) -> Arc<PhraseData> {
        let phrase = self.rt.spawn(
            ActorKind::Phrase,
            ActorState::Word {
                phrase: None,
                node: 0,
            },
        );
        let mut words = Vec::with_capacity(tree.nodes.len());
        for (i, n) in tree.nodes.iter_mut().enumerate() {
            let kind = if n.is_virtual {
                ActorKind::VirtualWord
            } else {
                ActorKind::Word
            };
            let w = self.rt.spawn(
                kind,
                ActorState::Word {
                    phrase: None,
                    node: i,
                },
            );
            n.actor = Some(w);
            words.push(w);
        }
        let data = Arc::new(PhraseData {
            actor: phrase,
            tree,
            ctx,
        });
        *self.rt.state_mut(phrase).expect("just spawned") = ActorState::Phrase(data.clone());
        for w in words {
            if let Some(ActorState::Word { phrase, .. }) = self.rt.state_mut(w) {
                *phrase = Some(data.clone());
            }
        }
        data
    }

    fn spawn_container(
        &mut self,
        candidates: Vec<(DepTree, KbContext)>,
        span: BTreeSet<usize>,
        preceding: Option<ActorRef>,
        previous: Option<ActorRef>,
    ) -> ActorRef {
        let mut seen = BTreeSet::new();
        let mut phrases = Vec::new();
        for (tree, ctx) in candidates {
            if seen.insert(tree.signature()) {
                phrases.push(self.spawn_phrase(tree, ctx));
            }
        }
        let state = ContainerState {
            phrases,
            span,
            preceding,
            previous,
            unknown: false,
            barrier: false,
            generation: 0,
            replies: Vec::new(),
            failures: 0,
        };
        let c = self
            .rt
            .spawn(ActorKind::Container, ActorState::Container(state));
        self.containers.push(c);
        c
    }

    fn container(&self, c: ActorRef) -> &ContainerState {
        match self.rt.state(c) {
            Some(ActorState::Container(s)) => s,
            _ => panic!("{} is not a container", c),
        }
    }

    fn container_mut(&mut self, c: ActorRef) -> &mut ContainerState {
        match self.rt.state_mut(c) {
            Some(ActorState::Container(s)) => s,
            _ => panic!("not a container"),
        }
    }

    fn attachable(&self, c: ActorRef) -> bool {
        let s = self.container(c);
        !s.unknown && !s.barrier && !s.phrases.is_empty()
    }

    /// Terminates a container together with its phrase and word actors.
    fn retire(&mut self, c: ActorRef) {
        let phrases = self.container(c).phrases.clone();
        for p in phrases {
            for n in &p.tree.nodes {
                if let Some(a) = n.actor {
                    self.rt.terminate(a);
                }
            }
            self.rt.terminate(p.actor);
        }
        self.rt.terminate(c);
    }

    fn run(&mut self) -> Result<(), ParseError> {
        let behavior = ParserBehavior {
            lex: self.lex,
            kb: self.kb,
            metrics: &self.metrics,
            fork_on_multi_slot: self.config.fork_on_multi_slot,
        };
        let t = self.rt.run_to_quiescence(
            &behavior,
            self.config.scheduler,
            self.config.seed ^ u64::from(self.generation),
        )?;
        self.trace.extend(t);
        Ok(())
    }

    fn open_round(&mut self, n: ActorRef) -> u32 {
        self.generation += 1;
        let g = self.generation;
        let s = self.container_mut(n);
        s.generation = g;
        s.replies.clear();
        s.failures = 0;
        g
    }

    /// Collected replies in canonical order, without duplicates.
    fn close_round(&mut self, n: ActorRef) -> Vec<Reply> {
        let mut replies = std::mem::take(&mut self.container_mut(n).replies);
        replies.sort_by_cached_key(|r| (r.kind as u8, r.found.tree.signature()));
        let mut seen = BTreeSet::new();
        replies.retain(|r| seen.insert(r.found.tree.signature()));
        replies
    }

    fn request(
        &mut self,
        n: ActorRef,
        target: ActorRef,
        kind: Request,
    ) -> Result<Vec<Reply>, ParseError> {
        let generation = self.open_round(n);
        let phrases = self.container(n).phrases.clone();
        for p in phrases {
            let msg = match kind {
                Request::Head => Msg::SearchHeadFor {
                    requester: p,
                    reply_to: n,
                    generation,
                },
                Request::Modifier => Msg::SearchModifierFor {
                    requester: p,
                    candidate: None,
                    reply_to: n,
                    generation,
                },
                Request::Prediction => Msg::SearchPredictionFor {
                    item: p,
                    reply_to: n,
                    generation,
                },
            };
            self.rt.send(target, msg);
        }
        self.run()?;
        Ok(self.close_round(n))
    }

    fn candidates(replies: Vec<Reply>) -> Vec<(DepTree, KbContext)> {
        replies
            .into_iter()
            .map(|r| (r.found.tree, r.found.ctx))
            .collect()
    }

    fn union(&self, a: ActorRef, b: ActorRef) -> BTreeSet<usize> {
        self.container(a)
            .span
            .union(&self.container(b).span)
            .copied()
            .collect()
    }

    // ----- protocol driver --------------------------------------------

    fn shift(&mut self, t: usize) -> Result<(), ParseError> {
        let preceding = self.last;
        let span = BTreeSet::from([t]);
        let n = self.spawn_container(self.token_phrases(t), span, preceding, None);
        self.last = Some(n);
        let info = &self.tokens[t];
        let (barrier, unknown) = (info.barrier, info.readings.is_empty());
        {
            let s = self.container_mut(n);
            s.barrier = barrier;
            s.unknown = unknown && !barrier;
        }
        if !barrier && !unknown {
            self.settle(n)?;
        }
        self.snapshot();
        Ok(())
    }

    fn snapshot(&mut self) {
        let rendered = self
            .chain()
            .into_iter()
            .flat_map(|c| {
                self.container(c)
                    .phrases
                    .iter()
                    .map(|p| p.tree.render())
                    .collect::<Vec<_>>()
            })
            .collect();
        self.snapshots.push(rendered);
    }

    /// Containers of the textual chain, left to right.
    fn chain(&self) -> Vec<ActorRef> {
        let mut out = Vec::new();
        let mut cur = self.last;
        while let Some(c) = cur {
            out.push(c);
            cur = self.container(c).preceding;
        }
        out.reverse();
        out
    }

    fn replace_last(&mut self, old: ActorRef, new: ActorRef) {
        if self.last == Some(old) {
            self.last = Some(new);
        }
    }

    fn virtual_count(&self, c: ActorRef) -> usize {
        self.container(c)
            .phrases
            .iter()
            .map(|p| p.tree.virtual_nodes().len())
            .max()
            .unwrap_or(0)
    }

    fn settle(&mut self, mut n: ActorRef) -> Result<(), ParseError> {
        loop {
            let p = self.container(n).preceding.filter(|&p| self.attachable(p));
            if let Some(p) = p {
                if let Some(r) = self.try_basic(n, p)? {
                    n = r;
                    continue;
                }
            }
            if let Some(r) = self.try_predict(n, p)? {
                n = r;
                continue;
            }
            if let Some(r) = self.try_skip(n)? {
                n = r;
                continue;
            }
            if let Some(r) = self.try_backtrack(n)? {
                n = r;
                continue;
            }
            return Ok(());
        }
    }

    /// Prediction merge/split, head search and modifier search against `p`.
    fn try_basic(&mut self, n: ActorRef, p: ActorRef) -> Result<Option<ActorRef>, ParseError> {
        let has_virtual = self
            .container(p)
            .phrases
            .iter()
            .any(|ph| ph.tree.has_virtual());
        if has_virtual {
            let replies = self.request(n, p, Request::Prediction)?;
            if !replies.is_empty() {
                for r in &replies {
                    match r.kind {
                        ReplyKind::Merged => self.events.merges += 1,
                        ReplyKind::Split => self.events.splits += 1,
                        _ => {}
                    }
                }
                return Ok(Some(self.combine(n, p, p, replies)));
            }
        }
        let replies = self.request(n, p, Request::Head)?;
        if !replies.is_empty() {
            return Ok(Some(self.combine(n, p, p, replies)));
        }
        let replies = self.request(n, p, Request::Modifier)?;
        if !replies.is_empty() {
            return Ok(Some(self.combine(n, p, n, replies)));
        }
        Ok(None)
    }

    /// Container for the analyses combining adjacent `p` and `n`.
    fn combine(
        &mut self,
        n: ActorRef,
        p: ActorRef,
        previous: ActorRef,
        replies: Vec<Reply>,
    ) -> ActorRef {
        let span = self.union(n, p);
        let preceding = self.container(p).preceding;
        let r = self.spawn_container(Self::candidates(replies), span, preceding, Some(previous));
        self.replace_last(n, r);
        r
    }

    fn try_predict(
        &mut self,
        n: ActorRef,
        p: Option<ActorRef>,
    ) -> Result<Option<ActorRef>, ParseError> {
        let phrases = self.container(n).phrases.clone();
        if phrases.iter().any(|ph| ph.tree.has_virtual()) {
            return Ok(None);
        }
        let budget = p.map_or(0, |p| self.virtual_count(p)) + 1;
        if budget > self.config.max_virtual_words {
            return Ok(None);
        }
        let mut cands = Vec::new();
        for ph in &phrases {
            if !predict::licenses_prediction(self.lex, ph.tree.root_node().class()) {
                continue;
            }
            self.virtual_seq += 1;
            cands.extend(predict::predict(
                self.lex,
                self.kb,
                &self.metrics,
                ph,
                self.virtual_seq,
            ));
        }
        if cands.is_empty() {
            return Ok(None);
        }
        self.events.predictions += 1;
        let span = self.container(n).span.clone();
        let preceding = self.container(n).preceding;
        let r = self.spawn_container(cands, span, preceding, Some(n));
        self.replace_last(n, r);
        Ok(Some(r))
    }

    /// Forwards the request pair past containers that yield nothing, up to
    /// a barrier or the start of the sentence.
    fn try_skip(&mut self, n: ActorRef) -> Result<Option<ActorRef>, ParseError> {
        let Some(first) = self.container(n).preceding else {
            return Ok(None);
        };
        if self.container(first).barrier {
            return Ok(None);
        }
        let mut skipped = vec![first];
        let mut cur = self.container(first).preceding;
        while let Some(c) = cur {
            if self.container(c).barrier {
                break;
            }
            if self.attachable(c) {
                for (kind, head_side) in [(Request::Head, c), (Request::Modifier, n)] {
                    let replies = self.request(n, c, kind)?;
                    if replies.is_empty() {
                        continue;
                    }
                    self.events.skipped_containers += skipped.len() as u32;
                    let leftmost = *skipped.last().expect("non-empty");
                    let outer = self.container(c).preceding;
                    self.container_mut(leftmost).preceding = outer;
                    let span = self.union(n, c);
                    let r = self.spawn_container(
                        Self::candidates(replies),
                        span,
                        Some(first),
                        Some(head_side),
                    );
                    self.replace_last(n, r);
                    return Ok(Some(r));
                }
            }
            skipped.push(c);
            cur = self.container(c).preceding;
        }
        Ok(None)
    }

    /// Redirects the request pair to historically previous containers when
    /// the active phrase still lacks mandatory material on its left.
    fn try_backtrack(&mut self, n: ActorRef) -> Result<Option<ActorRef>, ParseError> {
        let needs_left = self
            .container(n)
            .phrases
            .iter()
            .any(|ph| ph.tree.root_needs_left_material());
        let Some(p) = self.container(n).preceding.filter(|&p| self.attachable(p)) else {
            return Ok(None);
        };
        if !needs_left {
            return Ok(None);
        }
        let mut hop = self.container(p).previous;
        while let Some(h) = hop {
            self.events.backtrack_escalations += 1;
            if self.rt.is_alive(h) && self.attachable(h) {
                for (kind, head_side) in [(Request::Head, h), (Request::Modifier, n)] {
                    let replies = self.request(n, h, kind)?;
                    if replies.is_empty() {
                        continue;
                    }
                    self.events.backtracks += 1;
                    let superseded: BTreeSet<usize> = self
                        .container(p)
                        .span
                        .difference(&self.container(h).span)
                        .copied()
                        .collect();
                    self.delete_history(&superseded, &[h, n, p]);
                    let span = self.union(n, h);
                    let preceding = self.container(p).preceding;
                    let b = self.spawn_container(
                        Self::candidates(replies),
                        span,
                        preceding,
                        Some(head_side),
                    );
                    self.replace_last(n, b);
                    let b = self.reanalyze(b, superseded.into_iter().collect())?;
                    return Ok(Some(b));
                }
            }
            hop = self.container(h).previous;
        }
        Ok(None)
    }

    /// Deletes every container holding only material of the superseded
    /// modifier span.
    fn delete_history(&mut self, superseded: &BTreeSet<usize>, keep: &[ActorRef]) {
        if superseded.is_empty() {
            return;
        }
        let doomed: Vec<ActorRef> = self
            .containers
            .iter()
            .copied()
            .filter(|c| !keep.contains(c) && self.rt.is_alive(*c))
            .filter(|c| {
                let s = &self.container(*c).span;
                !s.is_empty() && s.is_subset(superseded)
            })
            .collect();
        for c in doomed {
            self.retire(c);
            self.events.deleted_containers += 1;
        }
    }

    /// Words of `tree` at the discontinuity containing token `t`: its
    /// nearest neighbours and the endpoints of arcs spanning it.
    fn discontinuity_words(tree: &DepTree, t: usize) -> Vec<usize> {
        let mut out = BTreeSet::new();
        let tokens: Vec<(usize, usize)> = tree
            .nodes
            .iter()
            .enumerate()
            .filter_map(|(i, n)| n.position.token().map(|p| (p, i)))
            .collect();
        if let Some(&(_, i)) = tokens.iter().filter(|(p, _)| *p < t).max() {
            out.insert(i);
        }
        if let Some(&(_, i)) = tokens.iter().filter(|(p, _)| *p > t).min() {
            out.insert(i);
        }
        for (d, n) in tree.nodes.iter().enumerate() {
            if let Some((h, _)) = &n.head {
                let (a, b) = (
                    predict::pos_key(tree.nodes[*h].position),
                    predict::pos_key(n.position),
                );
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                if lo < t as i64 && (t as i64) < hi {
                    out.insert(*h);
                    out.insert(d);
                }
            }
        }
        out.into_iter().collect()
    }

    /// Offers each skipped token, right to left and in all its readings,
    /// to the discontinuity words of the rebuilt phrase until nothing more
    /// attaches.
    fn reanalyze(
        &mut self,
        mut b: ActorRef,
        mut skipped: Vec<usize>,
    ) -> Result<ActorRef, ParseError> {
        loop {
            let mut progress = false;
            for idx in (0..skipped.len()).rev() {
                let t = skipped[idx];
                if self.tokens[t].barrier || self.tokens[t].readings.is_empty() {
                    continue;
                }
                let item =
                    self.spawn_container(self.token_phrases(t), BTreeSet::from([t]), None, None);
                let generation = self.open_round(item);
                let items = self.container(item).phrases.clone();
                let targets = self.container(b).phrases.clone();
                let span = self.container(b).span.clone();
                let outside =
                    span.first().is_some_and(|&lo| t < lo) || span.last().is_some_and(|&hi| t > hi);
                for tp in &targets {
                    let words = Self::discontinuity_words(&tp.tree, t);
                    for ip in &items {
                        self.rt.send(
                            tp.actor,
                            Msg::ReSearchHeadFor {
                                requester: ip.clone(),
                                targets: words.clone(),
                                reply_to: item,
                                generation,
                            },
                        );
                        if outside {
                            self.rt.send(
                                tp.actor,
                                Msg::ReSearchModifierFor {
                                    requester: ip.clone(),
                                    reply_to: item,
                                    generation,
                                },
                            );
                        }
                    }
                }
                self.run()?;
                let replies = self.close_round(item);
                self.retire(item);
                if replies.is_empty() {
                    continue;
                }
                self.events.reanalysis_attachments += 1;
                let mut span = span;
                span.insert(t);
                let (preceding, previous) = {
                    let s = self.container(b);
                    (s.preceding, s.previous)
                };
                let nb = self.spawn_container(Self::candidates(replies), span, preceding, previous);
                self.replace_last(b, nb);
                b = nb;
                skipped.remove(idx);
                progress = true;
                break;
            }
            if !progress {
                return Ok(b);
            }
        }
    }

    fn finish(self) -> ParseResult {
        let chain = self.chain();
        let content: BTreeSet<usize> = (0..self.tokens.len())
            .filter(|&t| !self.tokens[t].barrier)
            .collect();
        let fragments: Vec<ActorRef> = chain
            .iter()
            .copied()
            .filter(|&c| self.attachable(c))
            .collect();
        let best = fragments.iter().copied().max_by(|a, b| {
            let (sa, sb) = (self.container(*a).span.len(), self.container(*b).span.len());
            sa.cmp(&sb).then_with(|| b.id.cmp(&a.id))
        });
        let mut readings: Vec<Reading> = Vec::new();
        let mut coverage = Coverage::Partial;
        let mut skipped_tokens: Vec<usize> = content.iter().copied().collect();
        if let Some(best) = best {
            let s = self.container(best);
            let good: Vec<&Arc<PhraseData>> = s
                .phrases
                .iter()
                .filter(|p| p.tree.is_saturated() && !p.tree.has_virtual())
                .collect();
            if s.span == content && !good.is_empty() {
                coverage = Coverage::Complete;
                readings = good.into_iter().map(strip).collect();
            } else {
                readings = s.phrases.iter().map(strip).collect();
            }
            skipped_tokens = content.difference(&s.span).copied().collect();
        }
        readings.sort_by_cached_key(|r| r.tree.signature());
        let stats = self.rt.stats();
        self.metrics.count_messages(stats.sent);
        self.metrics.count_readings(readings.len() as u64, 0);
        ParseResult {
            tokens: self.tokens.iter().map(|t| t.surface.clone()).collect(),
            readings,
            coverage,
            skipped_tokens,
            counters: self.metrics.snapshot(),
            events: self.events,
            runtime: stats,
            trace: self.trace,
            snapshots: self.snapshots,
        }
    }
}

/// A reading detached from the actor system.
fn strip(p: &Arc<PhraseData>) -> Reading {
    let mut tree = p.tree.clone();
    for n in &mut tree.nodes {
        n.actor = None;
    }
    Reading {
        tree,
        ctx: p.ctx.clone(),
    }
}
