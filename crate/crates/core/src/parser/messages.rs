use std::sync::Arc;

use crate::kb::KbContext;
use crate::runtime::{ActorRef, Message, MessageKind};
use crate::tree::DepTree;

/// Immutable snapshot of one phrase reading: the tree plus its
/// interpretation context. Shared by the phrase actor, its word actors,
/// and any request that carries it.
#[derive(Debug, Clone)]
pub struct PhraseData {
    pub actor: ActorRef,
    pub tree: DepTree,
    pub ctx: KbContext,
}

/// A candidate analysis returned to the requesting container.
#[derive(Debug, Clone)]
pub struct Found {
    pub tree: DepTree,
    pub ctx: KbContext,
    pub generation: u32,
}

#[derive(Debug, Clone)]
pub enum Msg {
    SearchHeadFor {
        requester: Arc<PhraseData>,
        reply_to: ActorRef,
        generation: u32,
    },
    /// Sent by the requesting container to a preceding container, then by
    /// each candidate phrase (filling in `candidate`) to the left rim of
    /// the requester.
    SearchModifierFor {
        requester: Arc<PhraseData>,
        candidate: Option<Arc<PhraseData>>,
        reply_to: ActorRef,
        generation: u32,
    },
    HeadFound(Found),
    ModifierFound(Found),
    AttachmentFailed {
        generation: u32,
    },
    /// A skipped item asks the discontinuity words of a rebuilt phrase.
    ReSearchHeadFor {
        requester: Arc<PhraseData>,
        targets: Vec<usize>,
        reply_to: ActorRef,
        generation: u32,
    },
    /// A skipped item offers itself as head of the rebuilt phrase's root.
    ReSearchModifierFor {
        requester: Arc<PhraseData>,
        reply_to: ActorRef,
        generation: u32,
    },
    SearchPredictionFor {
        item: Arc<PhraseData>,
        reply_to: ActorRef,
        generation: u32,
    },
    PredictionMerged(Found),
    PredictionSplit(Found),
}

impl Message for Msg {
    fn kind(&self) -> MessageKind {
        match self {
            Msg::SearchHeadFor { .. } => MessageKind::SearchHeadFor,
            Msg::SearchModifierFor { .. } => MessageKind::SearchModifierFor,
            Msg::HeadFound(_) => MessageKind::HeadFound,
            Msg::ModifierFound(_) => MessageKind::ModifierFound,
            Msg::AttachmentFailed { .. } => MessageKind::AttachmentFailed,
            Msg::ReSearchHeadFor { .. } => MessageKind::ReSearchHeadFor,
            Msg::ReSearchModifierFor { .. } => MessageKind::ReSearchModifierFor,
            Msg::SearchPredictionFor { .. } => MessageKind::SearchPredictionFor,
            Msg::PredictionMerged(_) => MessageKind::PredictionMerged,
            Msg::PredictionSplit(_) => MessageKind::PredictionSplit,
        }
    }
}
