//! Actor substrate: identities, mailboxes, asynchronous send, and two
//! schedulers with the same per-actor serialization contract.
//!
//! The deterministic scheduler always delivers the oldest pending message of
//! the lowest-numbered actor, so a given sequence of sends yields one trace.
//! The concurrent scheduler works in rounds: every actor with mail drains
//! the messages it held at the start of the round on a rayon worker, and the
//! resulting sends are merged in a seeded random actor order.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::{self, Write as _};
use std::sync::atomic::{AtomicBool, Ordering};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_STEP_LIMIT: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ActorKind {
    Word,
    Phrase,
    Container,
    Centering,
    VirtualWord,
}

impl ActorKind {
    pub fn name(self) -> &'static str {
        match self {
            ActorKind::Word => "word",
            ActorKind::Phrase => "phrase",
            ActorKind::Container => "container",
            ActorKind::Centering => "centering",
            ActorKind::VirtualWord => "virtualWord",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ActorRef {
    pub id: u32,
    pub kind: ActorKind,
}

impl fmt::Display for ActorRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.kind.name(), self.id)
    }
}

/// The closed set of protocol message variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum MessageKind {
    SearchHeadFor,
    SearchModifierFor,
    HeadFound,
    ModifierFound,
    AttachmentFailed,
    ReSearchHeadFor,
    ReSearchModifierFor,
    SearchPredictionFor,
    PredictionMerged,
    PredictionSplit,
    SearchNomAntecedent,
    AntecedentFound,
    AnaphorSucceed,
}

impl MessageKind {
    pub fn name(self) -> &'static str {
        match self {
            MessageKind::SearchHeadFor => "searchHeadFor",
            MessageKind::SearchModifierFor => "searchModifierFor",
            MessageKind::HeadFound => "headFound",
            MessageKind::ModifierFound => "modifierFound",
            MessageKind::AttachmentFailed => "attachmentFailed",
            MessageKind::ReSearchHeadFor => "reSearchHeadFor",
            MessageKind::ReSearchModifierFor => "reSearchModifierFor",
            MessageKind::SearchPredictionFor => "searchPredictionFor",
            MessageKind::PredictionMerged => "predictionMerged",
            MessageKind::PredictionSplit => "predictionSplit",
            MessageKind::SearchNomAntecedent => "searchNomAntecedent",
            MessageKind::AntecedentFound => "antecedentFound",
            MessageKind::AnaphorSucceed => "anaphorSucceed",
        }
    }
}

impl fmt::Display for MessageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub trait Message: Send {
    fn kind(&self) -> MessageKind;
}

/// Sends produced by one handler invocation, in order.
pub struct Outbox<M> {
    me: ActorRef,
    sends: Vec<(ActorRef, ActorRef, M)>,
}

impl<M> Outbox<M> {
    pub fn send(&mut self, to: ActorRef, msg: M) {
        self.sends.push((self.me, to, msg));
    }
}

pub trait Behavior: Sync {
    type State: Send;
    type Msg: Message;

    fn receive(
        &self,
        me: ActorRef,
        state: &mut Self::State,
        sender: Option<ActorRef>,
        msg: Self::Msg,
        out: &mut Outbox<Self::Msg>,
    );
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub step: u64,
    pub receiver: ActorRef,
    pub kind: MessageKind,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleTrace {
    pub entries: Vec<TraceEntry>,
}

impl ScheduleTrace {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn count(&self, kind: MessageKind) -> usize {
        self.entries.iter().filter(|e| e.kind == kind).count()
    }

    pub fn count_at(&self, kind: MessageKind, receiver: ActorKind) -> usize {
        self.entries
            .iter()
            .filter(|e| e.kind == kind && e.receiver.kind == receiver)
            .count()
    }

    pub fn extend(&mut self, other: ScheduleTrace) {
        self.entries.extend(other.entries);
    }

    /// One line per step: `step receiverKind#id variant`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let _ = writeln!(out, "{} {} {}", e.step, e.receiver, e.kind);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheduler {
    #[default]
    Deterministic,
    Concurrent,
}

/// One actor's share of a concurrent round: its id, the messages it
/// processed, and what it sent as (from, to, message).
type RoundResult<M> = (
    u32,
    Vec<(ActorRef, MessageKind)>,
    Vec<(ActorRef, ActorRef, M)>,
);

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuntimeStats {
    pub sent: u64,
    pub processed: u64,
    pub dead_lettered: u64,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RuntimeError {
    #[error("step limit {limit} exceeded; pending: {}", .pending.join(", "))]
    StepLimit { limit: u64, pending: Vec<String> },
}

struct Cell<S, M> {
    actor: ActorRef,
    alive: bool,
    busy: AtomicBool,
    state: S,
    mailbox: VecDeque<(Option<ActorRef>, M)>,
}

pub struct Runtime<S, M> {
    cells: Vec<Cell<S, M>>,
    pending: BTreeSet<u32>,
    step: u64,
    step_limit: u64,
    stats: RuntimeStats,
    dead_letters: Vec<(ActorRef, MessageKind)>,
}

impl<S: Send, M: Message> Runtime<S, M> {
    pub fn new(step_limit: u64) -> Self {
        Runtime {
            cells: Vec::new(),
            pending: BTreeSet::new(),
            step: 0,
            step_limit,
            stats: RuntimeStats::default(),
            dead_letters: Vec::new(),
        }
    }

    pub fn spawn(&mut self, kind: ActorKind, state: S) -> ActorRef {
        let actor = ActorRef {
            id: self.cells.len() as u32,
            kind,
        };
        self.cells.push(Cell {
            actor,
            alive: true,
            busy: AtomicBool::new(false),
            state,
            mailbox: VecDeque::new(),
        });
        actor
    }

    pub fn terminate(&mut self, actor: ActorRef) {
        if let Some(c) = self.cells.get_mut(actor.id as usize) {
            c.alive = false;
            let dropped = c.mailbox.len() as u64;
            for (_, m) in c.mailbox.drain(..) {
                self.dead_letters.push((actor, m.kind()));
            }
            self.stats.dead_lettered += dropped;
            self.pending.remove(&actor.id);
        }
    }

    pub fn is_alive(&self, actor: ActorRef) -> bool {
        self.cells.get(actor.id as usize).is_some_and(|c| c.alive)
    }

    /// Inspection hook.
    pub fn state(&self, actor: ActorRef) -> Option<&S> {
        self.cells.get(actor.id as usize).map(|c| &c.state)
    }

    pub fn state_mut(&mut self, actor: ActorRef) -> Option<&mut S> {
        self.cells.get_mut(actor.id as usize).map(|c| &mut c.state)
    }

    pub fn actor_count(&self) -> usize {
        self.cells.len()
    }

    pub fn stats(&self) -> RuntimeStats {
        self.stats
    }

    pub fn dead_letters(&self) -> &[(ActorRef, MessageKind)] {
        &self.dead_letters
    }

    pub fn pending_count(&self) -> usize {
        self.cells.iter().map(|c| c.mailbox.len()).sum()
    }

    /// Enqueues a message from outside any actor.
    pub fn send(&mut self, to: ActorRef, msg: M) {
        self.enqueue(None, to, msg);
    }

    fn enqueue(&mut self, from: Option<ActorRef>, to: ActorRef, msg: M) {
        self.stats.sent += 1;
        match self.cells.get_mut(to.id as usize) {
            Some(c) if c.alive => {
                c.mailbox.push_back((from, msg));
                self.pending.insert(to.id);
            }
            _ => {
                self.stats.dead_lettered += 1;
                self.dead_letters.push((to, msg.kind()));
            }
        }
    }

    fn pending_summary(&self) -> Vec<String> {
        self.cells
            .iter()
            .flat_map(|c| {
                c.mailbox
                    .iter()
                    .map(move |(_, m)| format!("{} {}", c.actor, m.kind()))
            })
            .collect()
    }

    /// Delivers messages until every mailbox is empty.
    pub fn run_to_quiescence<B>(
        &mut self,
        behavior: &B,
        scheduler: Scheduler,
        seed: u64,
    ) -> Result<ScheduleTrace, RuntimeError>
    where
        B: Behavior<State = S, Msg = M>,
    {
        match scheduler {
            Scheduler::Deterministic => self.run_sequential(behavior),
            Scheduler::Concurrent => self.run_rounds(behavior, seed),
        }
    }

    fn run_sequential<B>(&mut self, behavior: &B) -> Result<ScheduleTrace, RuntimeError>
    where
        B: Behavior<State = S, Msg = M>,
    {
        let mut trace = ScheduleTrace::default();
        let mut steps = 0u64;
        while let Some(&id) = self.pending.iter().next() {
            if steps >= self.step_limit {
                return Err(RuntimeError::StepLimit {
                    limit: self.step_limit,
                    pending: self.pending_summary(),
                });
            }
            let cell = &mut self.cells[id as usize];
            let (from, msg) = cell.mailbox.pop_front().expect("pending actor has mail");
            if cell.mailbox.is_empty() {
                self.pending.remove(&id);
            }
            steps += 1;
            self.step += 1;
            trace.entries.push(TraceEntry {
                step: self.step,
                receiver: cell.actor,
                kind: msg.kind(),
            });
            let mut out = Outbox {
                me: cell.actor,
                sends: Vec::new(),
            };
            let was_busy = cell.busy.swap(true, Ordering::SeqCst);
            assert!(!was_busy, "reentrant delivery to {}", cell.actor);
            behavior.receive(cell.actor, &mut cell.state, from, msg, &mut out);
            cell.busy.store(false, Ordering::SeqCst);
            self.stats.processed += 1;
            for (from, to, m) in out.sends {
                self.enqueue(Some(from), to, m);
            }
        }
        Ok(trace)
    }

    fn run_rounds<B>(&mut self, behavior: &B, seed: u64) -> Result<ScheduleTrace, RuntimeError>
    where
        B: Behavior<State = S, Msg = M>,
    {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut trace = ScheduleTrace::default();
        let mut steps = 0u64;
        while !self.pending.is_empty() {
            if steps >= self.step_limit {
                return Err(RuntimeError::StepLimit {
                    limit: self.step_limit,
                    pending: self.pending_summary(),
                });
            }
            let active: BTreeSet<u32> = std::mem::take(&mut self.pending);
            let mut results: Vec<RoundResult<M>> = self
                .cells
                .par_iter_mut()
                .filter(|c| active.contains(&c.actor.id))
                .map(|cell| {
                    let inbox: Vec<_> = cell.mailbox.drain(..).collect();
                    let was_busy = cell.busy.swap(true, Ordering::SeqCst);
                    assert!(!was_busy, "reentrant delivery to {}", cell.actor);
                    let mut delivered = Vec::with_capacity(inbox.len());
                    let mut out = Outbox {
                        me: cell.actor,
                        sends: Vec::new(),
                    };
                    for (from, msg) in inbox {
                        delivered.push((cell.actor, msg.kind()));
                        behavior.receive(cell.actor, &mut cell.state, from, msg, &mut out);
                    }
                    cell.busy.store(false, Ordering::SeqCst);
                    (cell.actor.id, delivered, out.sends)
                })
                .collect();
            results.shuffle(&mut rng);
            for (_, delivered, sends) in results {
                for (receiver, kind) in delivered {
                    steps += 1;
                    self.step += 1;
                    self.stats.processed += 1;
                    trace.entries.push(TraceEntry {
                        step: self.step,
                        receiver,
                        kind,
                    });
                }
                for (from, to, m) in sends {
                    self.enqueue(Some(from), to, m);
                }
            }
        }
        Ok(trace)
    }
}
