//! Text-level coherence: a centering actor keeps the forward-looking
//! centers of the previous utterance, nominal anaphors of the current one
//! ask it for antecedents, and resolved readings are folded into one
//! persistent text knowledge base.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::grammar::{FeatureStructure, Lexicon};
use crate::kb::{InstanceId, InstanceRecord, Kb, KbContext, KbSchema, ReferentId};
use crate::parser::{tokenize, ParseError, ParseResult, Parser, Reading};
use crate::runtime::{
    ActorKind, ActorRef, Behavior, Message, MessageKind, Outbox, Runtime, ScheduleTrace,
};
use crate::tree::DepTree;
use crate::unify::unify_features;

/// Class names the text layer looks for in the lexicon.
const NOMINAL_CLASS: &str = "nominal";
const PRONOUN_CLASS: &str = "pronoun";
const DEFINITE_FEATURE: &str = "def";
const NUMBER_FEATURE: &str = "num";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CfEntry {
    pub referent: ReferentId,
    pub instance: InstanceId,
    pub concept: String,
    pub features: FeatureStructure,
    /// Slot salience, then surface position.
    pub rank: (u32, usize),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CenteringState {
    pub cb: Option<ReferentId>,
    pub cf: Vec<CfEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnaphorStatus {
    Pending,
    Resolved,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnaphorRecord {
    /// 1-based sentence number.
    pub sentence: usize,
    pub position: usize,
    pub surface: String,
    pub instance: InstanceId,
    pub antecedent: Option<InstanceId>,
    pub referent: Option<ReferentId>,
    pub status: AnaphorStatus,
}

/// What an anaphor tells the centering actor about itself.
#[derive(Debug, Clone)]
pub struct AnaphorQuery {
    pub concept: String,
    pub features: FeatureStructure,
    pub pronoun: bool,
}

#[derive(Debug, Clone)]
pub enum TextMsg {
    SearchNomAntecedent {
        anaphor: ActorRef,
        query: AnaphorQuery,
    },
    AntecedentFound {
        entry: CfEntry,
    },
    AnaphorSucceed {
        referent: ReferentId,
    },
}

impl Message for TextMsg {
    fn kind(&self) -> MessageKind {
        match self {
            TextMsg::SearchNomAntecedent { .. } => MessageKind::SearchNomAntecedent,
            TextMsg::AntecedentFound { .. } => MessageKind::AntecedentFound,
            TextMsg::AnaphorSucceed { .. } => MessageKind::AnaphorSucceed,
        }
    }
}

#[derive(Debug)]
pub enum TextState {
    Centering {
        state: CenteringState,
        reserved: BTreeSet<ReferentId>,
    },
    Anaphor {
        found: Option<CfEntry>,
    },
}

pub struct TextBehavior<'a> {
    pub lex: &'a Lexicon,
    pub schema: &'a KbSchema,
    pub centering: ActorRef,
}

impl TextBehavior<'_> {
    /// Number agreement plus, for full noun phrases, concept subsumption in
    /// either direction.
    pub fn compatible(&self, query: &AnaphorQuery, entry: &CfEntry) -> bool {
        if self.lex.feature(NUMBER_FEATURE).is_some()
            && !matches!(
                unify_features(self.lex, &query.features, &entry.features, [NUMBER_FEATURE]),
                Ok(Some(_))
            )
        {
            return false;
        }
        query.pronoun
            || self.schema.subsumes_known(&query.concept, &entry.concept)
            || self.schema.subsumes_known(&entry.concept, &query.concept)
    }
}

impl Behavior for TextBehavior<'_> {
    type State = TextState;
    type Msg = TextMsg;

    fn receive(
        &self,
        _me: ActorRef,
        state: &mut TextState,
        _: Option<ActorRef>,
        msg: TextMsg,
        out: &mut Outbox<TextMsg>,
    ) {
        match (state, msg) {
            (
                TextState::Centering { state, reserved },
                TextMsg::SearchNomAntecedent { anaphor, query },
            ) => {
                let hit = state
                    .cf
                    .iter()
                    .find(|e| !reserved.contains(&e.referent) && self.compatible(&query, e));
                if let Some(e) = hit {
                    reserved.insert(e.referent);
                    out.send(anaphor, TextMsg::AntecedentFound { entry: e.clone() });
                }
            }
            (TextState::Centering { state, reserved }, TextMsg::AnaphorSucceed { referent }) => {
                state.cf.retain(|e| e.referent != referent);
                reserved.remove(&referent);
            }
            (TextState::Anaphor { found }, TextMsg::AntecedentFound { entry }) => {
                let referent = entry.referent;
                *found = Some(entry);
                out.send(self.centering, TextMsg::AnaphorSucceed { referent });
            }
            _ => {}
        }
    }
}

fn is_nominal(lex: &Lexicon, tree: &DepTree, idx: usize) -> bool {
    let n = &tree.nodes[idx];
    n.instance.is_some()
        && lex
            .is_subclass_of(n.class(), NOMINAL_CLASS)
            .unwrap_or(false)
}

fn is_pronoun(lex: &Lexicon, tree: &DepTree, idx: usize) -> bool {
    lex.is_subclass_of(tree.nodes[idx].class(), PRONOUN_CLASS)
        .unwrap_or(false)
}

fn is_definite(tree: &DepTree, idx: usize) -> bool {
    tree.nodes[idx].dependents.iter().any(|(_, d)| {
        tree.nodes[*d]
            .features
            .get(DEFINITE_FEATURE)
            .is_some_and(|v| v.len() == 1 && v.contains("yes"))
    })
}

/// Salience of the slot through which `idx` is governed.
fn salience_of(tree: &DepTree, idx: usize, table: &BTreeMap<String, u32>) -> u32 {
    match &tree.nodes[idx].head {
        None => 0,
        Some((_, slot)) => table.get(slot).copied().unwrap_or(u32::MAX - 1),
    }
}

/// Forward-looking centers of one reading, most salient first. `alias`
/// maps resolved anaphor instances to their antecedents.
pub fn compute_cf(
    lex: &Lexicon,
    reading: &Reading,
    salience: &BTreeMap<String, u32>,
    alias: &BTreeMap<InstanceId, CfEntry>,
) -> Vec<CfEntry> {
    let tree = &reading.tree;
    let mut out: Vec<CfEntry> = Vec::new();
    for idx in 0..tree.nodes.len() {
        if !is_nominal(lex, tree, idx) {
            continue;
        }
        let n = &tree.nodes[idx];
        let inst = n.instance.expect("nominals have instances");
        let rank = (
            salience_of(tree, idx, salience),
            n.position.token().unwrap_or(usize::MAX),
        );
        let entry = match alias.get(&inst) {
            Some(a) => CfEntry { rank, ..a.clone() },
            None => {
                let Some(rec) = reading.ctx.record(inst) else {
                    continue;
                };
                CfEntry {
                    referent: rec.referent,
                    instance: inst,
                    concept: rec.concept.clone(),
                    features: n.features.clone(),
                    rank,
                }
            }
        };
        out.push(entry);
    }
    out.sort_by_key(|e| e.rank);
    let mut seen = BTreeSet::new();
    out.retain(|e| seen.insert(e.referent));
    out
}

#[derive(Debug, Clone)]
pub struct TextParse {
    pub results: Vec<ParseResult>,
    pub anaphors: Vec<AnaphorRecord>,
    /// Centering state computed for each utterance.
    pub centering: Vec<CenteringState>,
    /// For each utterance, the previous utterance's centers as left after
    /// resolution removed the antecedents.
    pub consulted: Vec<Vec<CfEntry>>,
    pub kb: KbContext,
    pub trace: ScheduleTrace,
}

impl TextParse {
    /// One line per anaphor: `sentence#pos surface -> referent|FAILED`.
    pub fn resolution_log(&self) -> String {
        let mut out = String::new();
        for a in &self.anaphors {
            let target = match a.referent {
                Some(r) if a.status == AnaphorStatus::Resolved => r.to_string(),
                _ => "FAILED".to_string(),
            };
            let _ = writeln!(
                out,
                "{}#{} {} -> {}",
                a.sentence, a.position, a.surface, target
            );
        }
        out
    }

    pub fn kb_dump(&self) -> String {
        self.kb.dump()
    }

    /// Distinct discourse referents in the text knowledge base.
    pub fn referent_count(&self) -> usize {
        self.kb
            .instances()
            .values()
            .map(|r| r.referent)
            .collect::<BTreeSet<_>>()
            .len()
    }
}

/// Folds a sentence reading into the text context, replacing each resolved
/// anaphor's instance by its antecedent's.
fn fold(
    kb: &Kb,
    text: &mut KbContext,
    reading: &Reading,
    alias: &BTreeMap<InstanceId, InstanceId>,
) {
    let map = |i: InstanceId| alias.get(&i).copied().unwrap_or(i);
    let ids: BTreeSet<InstanceId> = reading
        .tree
        .nodes
        .iter()
        .filter_map(|n| n.instance)
        .collect();
    for id in ids {
        let Some(rec) = reading.ctx.record(id) else {
            continue;
        };
        let target = map(id);
        let mut merged = text
            .record(target)
            .cloned()
            .unwrap_or_else(|| InstanceRecord {
                concept: rec.concept.clone(),
                referent: rec.referent,
                fillers: BTreeMap::new(),
            });
        for (role, fillers) in &rec.fillers {
            let slot = merged.fillers.entry(role.clone()).or_default();
            for f in fillers {
                let f = map(*f);
                if !slot.contains(&f) {
                    slot.push(f);
                }
            }
        }
        kb.put_record(text, target, merged);
    }
}

pub fn parse_text(parser: &Parser, sentences: &[&str]) -> Result<TextParse, ParseError> {
    if sentences.is_empty() {
        return Err(ParseError::EmptyInput);
    }
    let lex = parser.lexicon();
    let kb = Kb::new(parser.schema().clone());
    let mut text = kb.root_context();
    let config = parser.config();
    let mut rt: Runtime<TextState, TextMsg> = Runtime::new(config.step_limit);
    let centering = rt.spawn(
        ActorKind::Centering,
        TextState::Centering {
            state: CenteringState::default(),
            reserved: BTreeSet::new(),
        },
    );
    let behavior = TextBehavior {
        lex,
        schema: parser.schema(),
        centering,
    };
    let mut out = TextParse {
        results: Vec::new(),
        anaphors: Vec::new(),
        centering: Vec::new(),
        consulted: Vec::new(),
        kb: text.clone(),
        trace: ScheduleTrace::default(),
    };
    for (si, sentence) in sentences.iter().enumerate() {
        let result = parser.parse_in(&kb, &tokenize(sentence))?;
        let Some(reading) = result.readings.first().cloned() else {
            out.consulted.push(Vec::new());
            out.centering.push(CenteringState::default());
            if let Some(TextState::Centering { state, .. }) = rt.state_mut(centering) {
                *state = CenteringState::default();
            }
            out.results.push(result);
            continue;
        };
        let previous_cf = match rt.state(centering) {
            Some(TextState::Centering { state, .. }) => state.cf.clone(),
            _ => Vec::new(),
        };
        let tree = &reading.tree;
        let mut pending = Vec::new();
        for idx in 0..tree.nodes.len() {
            if !is_nominal(lex, tree, idx) {
                continue;
            }
            let pronoun = is_pronoun(lex, tree, idx);
            let n = &tree.nodes[idx];
            let inst = n.instance.expect("nominal");
            let Some(rec) = reading.ctx.record(inst) else {
                continue;
            };
            let query = AnaphorQuery {
                concept: rec.concept.clone(),
                features: n.features.clone(),
                pronoun,
            };
            let seen_before = previous_cf.iter().any(|e| {
                behavior.schema.subsumes_known(&query.concept, &e.concept)
                    || behavior.schema.subsumes_known(&e.concept, &query.concept)
            });
            if !(pronoun || (is_definite(tree, idx) && seen_before)) {
                continue;
            }
            let actor = rt.spawn(ActorKind::Word, TextState::Anaphor { found: None });
            rt.send(
                centering,
                TextMsg::SearchNomAntecedent {
                    anaphor: actor,
                    query,
                },
            );
            pending.push((actor, idx, inst));
        }
        out.trace
            .extend(rt.run_to_quiescence(&behavior, config.scheduler, config.seed)?);

        let mut alias_inst = BTreeMap::new();
        let mut alias_entry = BTreeMap::new();
        for (actor, idx, inst) in pending {
            let found = match rt.state(actor) {
                Some(TextState::Anaphor { found }) => found.clone(),
                _ => None,
            };
            let n = &tree.nodes[idx];
            let record = AnaphorRecord {
                sentence: si + 1,
                position: n.position.token().unwrap_or(usize::MAX),
                surface: n.surface.clone(),
                instance: inst,
                antecedent: found.as_ref().map(|e| e.instance),
                referent: found.as_ref().map(|e| e.referent),
                status: if found.is_some() {
                    AnaphorStatus::Resolved
                } else {
                    AnaphorStatus::Failed
                },
            };
            if let Some(e) = found {
                alias_inst.insert(inst, e.instance);
                alias_entry.insert(inst, e);
            }
            out.anaphors.push(record);
            rt.terminate(actor);
        }
        fold(&kb, &mut text, &reading, &alias_inst);

        let consulted = match rt.state(centering) {
            Some(TextState::Centering { state, .. }) => state.cf.clone(),
            _ => Vec::new(),
        };
        let cf = compute_cf(lex, &reading, &config.salience, &alias_entry);
        let cb = previous_cf
            .iter()
            .find(|p| cf.iter().any(|c| c.referent == p.referent))
            .map(|p| p.referent);
        let next = CenteringState { cb, cf };
        if let Some(TextState::Centering { state, reserved }) = rt.state_mut(centering) {
            *state = next.clone();
            reserved.clear();
        }
        out.consulted.push(consulted);
        out.centering.push(next);
        out.results.push(result);
    }
    out.kb = text;
    Ok(out)
}
