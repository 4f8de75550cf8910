//! Message handlers for word, phrase, and container actors.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::grammar::Lexicon;
use crate::kb::Kb;
use crate::metrics::Metrics;
use crate::runtime::{ActorRef, Behavior, Outbox};
use crate::tree::try_attach;

use super::messages::{Found, Msg, PhraseData};
use super::predict;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReplyKind {
    Head,
    Modifier,
    Merged,
    Split,
}

#[derive(Debug, Clone)]
pub struct Reply {
    pub kind: ReplyKind,
    pub found: Found,
}

#[derive(Debug, Clone)]
pub struct ContainerState {
    pub phrases: Vec<Arc<PhraseData>>,
    pub span: BTreeSet<usize>,
    pub preceding: Option<ActorRef>,
    pub previous: Option<ActorRef>,
    pub unknown: bool,
    pub barrier: bool,
    pub generation: u32,
    pub replies: Vec<Reply>,
    pub failures: usize,
}

#[derive(Debug)]
pub enum ActorState {
    Word {
        phrase: Option<Arc<PhraseData>>,
        node: usize,
    },
    Phrase(Arc<PhraseData>),
    Container(ContainerState),
}

pub struct ParserBehavior<'a> {
    pub lex: &'a Lexicon,
    pub kb: &'a Kb,
    pub metrics: &'a Metrics,
    pub fork_on_multi_slot: bool,
}

fn actor_of(data: &PhraseData, idx: usize) -> ActorRef {
    data.tree.nodes[idx]
        .actor
        .expect("phrase nodes have actors")
}

impl ParserBehavior<'_> {
    /// `head_data`'s word `head` tries to govern the root of `modifier`.
    fn attach_here(
        &self,
        head_data: &PhraseData,
        head: usize,
        modifier: &PhraseData,
        generation: u32,
    ) -> Vec<Found> {
        try_attach(
            self.lex,
            self.kb,
            &head_data.tree,
            &head_data.ctx,
            head,
            &modifier.tree,
            &modifier.ctx,
            modifier.tree.root,
            self.metrics,
            self.fork_on_multi_slot,
        )
        .into_iter()
        .map(|a| {
            let (tree, _) = head_data.tree.attach(head, &modifier.tree, &a.unify);
            Found {
                tree,
                ctx: a.ctx,
                generation,
            }
        })
        .collect()
    }

    fn on_word(&self, phrase: &Arc<PhraseData>, node: usize, msg: Msg, out: &mut Outbox<Msg>) {
        let head_of = phrase.tree.nodes[node].head.as_ref().map(|(h, _)| *h);
        match msg {
            Msg::SearchHeadFor {
                requester,
                reply_to,
                generation,
            } => {
                for f in self.attach_here(phrase, node, &requester, generation) {
                    out.send(reply_to, Msg::HeadFound(f));
                }
                if let Some(h) = head_of {
                    out.send(
                        actor_of(phrase, h),
                        Msg::SearchHeadFor {
                            requester,
                            reply_to,
                            generation,
                        },
                    );
                }
            }
            Msg::SearchModifierFor {
                requester,
                candidate: Some(candidate),
                reply_to,
                generation,
            } => {
                for f in self.attach_here(phrase, node, &candidate, generation) {
                    out.send(reply_to, Msg::ModifierFound(f));
                }
                if let Some(h) = head_of {
                    out.send(
                        actor_of(phrase, h),
                        Msg::SearchModifierFor {
                            requester,
                            candidate: Some(candidate),
                            reply_to,
                            generation,
                        },
                    );
                }
            }
            Msg::ReSearchHeadFor {
                requester,
                reply_to,
                generation,
                ..
            } => {
                for f in self.attach_here(phrase, node, &requester, generation) {
                    out.send(reply_to, Msg::HeadFound(f));
                }
            }
            Msg::ReSearchModifierFor {
                requester,
                reply_to,
                generation,
            } => {
                let root = requester.tree.root;
                for f in self.attach_here(&requester, root, phrase, generation) {
                    out.send(reply_to, Msg::ModifierFound(f));
                }
            }
            Msg::SearchPredictionFor {
                item,
                reply_to,
                generation,
            } => {
                let (merged, split) =
                    predict::merge_or_split(self.lex, self.kb, self.metrics, phrase, node, &item);
                if merged.is_empty() && split.is_empty() {
                    out.send(reply_to, Msg::AttachmentFailed { generation });
                }
                for (tree, ctx) in merged {
                    out.send(
                        reply_to,
                        Msg::PredictionMerged(Found {
                            tree,
                            ctx,
                            generation,
                        }),
                    );
                }
                for (tree, ctx) in split {
                    out.send(
                        reply_to,
                        Msg::PredictionSplit(Found {
                            tree,
                            ctx,
                            generation,
                        }),
                    );
                }
            }
            _ => {}
        }
    }

    fn on_phrase(&self, data: &Arc<PhraseData>, msg: Msg, out: &mut Outbox<Msg>) {
        match msg {
            Msg::SearchHeadFor { .. } => {
                let bottom = *data.tree.right_rim().last().expect("rim is never empty");
                out.send(actor_of(data, bottom), msg);
            }
            Msg::SearchModifierFor {
                requester,
                candidate: None,
                reply_to,
                generation,
            } => {
                let bottom = *requester
                    .tree
                    .left_rim()
                    .last()
                    .expect("rim is never empty");
                out.send(
                    actor_of(&requester, bottom),
                    Msg::SearchModifierFor {
                        requester: requester.clone(),
                        candidate: Some(data.clone()),
                        reply_to,
                        generation,
                    },
                );
            }
            Msg::ReSearchHeadFor {
                requester,
                targets,
                reply_to,
                generation,
            } => {
                for &t in &targets {
                    out.send(
                        actor_of(data, t),
                        Msg::ReSearchHeadFor {
                            requester: requester.clone(),
                            targets: Vec::new(),
                            reply_to,
                            generation,
                        },
                    );
                }
            }
            Msg::ReSearchModifierFor { .. } => {
                out.send(actor_of(data, data.tree.root), msg);
            }
            Msg::SearchPredictionFor {
                item,
                reply_to,
                generation,
            } => {
                for v in data.tree.virtual_nodes() {
                    out.send(
                        actor_of(data, v),
                        Msg::SearchPredictionFor {
                            item: item.clone(),
                            reply_to,
                            generation,
                        },
                    );
                }
            }
            _ => {}
        }
    }

    fn on_container(&self, state: &mut ContainerState, msg: Msg, out: &mut Outbox<Msg>) {
        let accept = |state: &mut ContainerState, kind, found: Found| {
            if found.generation == state.generation {
                state.replies.push(Reply { kind, found });
            }
        };
        match msg {
            Msg::SearchHeadFor { .. }
            | Msg::SearchModifierFor { .. }
            | Msg::SearchPredictionFor { .. } => {
                for p in &state.phrases {
                    out.send(p.actor, msg.clone());
                }
            }
            Msg::HeadFound(f) => accept(state, ReplyKind::Head, f),
            Msg::ModifierFound(f) => accept(state, ReplyKind::Modifier, f),
            Msg::PredictionMerged(f) => accept(state, ReplyKind::Merged, f),
            Msg::PredictionSplit(f) => accept(state, ReplyKind::Split, f),
            Msg::AttachmentFailed { generation } => {
                if generation == state.generation {
                    state.failures += 1;
                }
            }
            Msg::ReSearchHeadFor { .. } | Msg::ReSearchModifierFor { .. } => {}
        }
    }
}

impl Behavior for ParserBehavior<'_> {
    type State = ActorState;
    type Msg = Msg;

    fn receive(
        &self,
        _me: ActorRef,
        state: &mut ActorState,
        _sender: Option<ActorRef>,
        msg: Msg,
        out: &mut Outbox<Msg>,
    ) {
        match state {
            ActorState::Word {
                phrase: Some(phrase),
                node,
            } => self.on_word(phrase, *node, msg, out),
            ActorState::Word { phrase: None, .. } => {}
            ActorState::Phrase(data) => self.on_phrase(data, msg, out),
            ActorState::Container(c) => self.on_container(c, msg, out),
        }
    }
}
