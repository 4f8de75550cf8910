//! Feature unification and the grammatical attachment test.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::grammar::{Direction, FeatureStructure, Lexicon, ValencySlot};
use crate::metrics::Metrics;
use crate::tree::Position;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum UnifyError {
    #[error("undeclared feature `{0}`")]
    UndeclaredFeature(String),
}

/// Value set of `feature` in `fs`, falling back to the full domain.
fn values_of(
    lex: &Lexicon,
    fs: &FeatureStructure,
    feature: &str,
) -> Result<BTreeSet<String>, UnifyError> {
    let decl = lex
        .feature(feature)
        .ok_or_else(|| UnifyError::UndeclaredFeature(feature.to_string()))?;
    Ok(match fs.get(feature) {
        Some(v) => v.clone(),
        None => decl.domain.iter().cloned().collect(),
    })
}

/// Intersects `a` and `b` on every feature in `over`. The result carries
/// `a`'s remaining features untouched; `None` if any intersection is empty.
pub fn unify_features<'a, I>(
    lex: &Lexicon,
    a: &FeatureStructure,
    b: &FeatureStructure,
    over: I,
) -> Result<Option<FeatureStructure>, UnifyError>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut out = a.clone();
    for feature in over {
        let left = values_of(lex, a, feature)?;
        let right = values_of(lex, b, feature)?;
        let both: BTreeSet<String> = left.intersection(&right).cloned().collect();
        if both.is_empty() {
            return Ok(None);
        }
        out.0.insert(feature.to_string(), both);
    }
    Ok(Some(out))
}

/// Copies the values of `over` from `src` into `dst`.
fn overwrite(
    dst: &FeatureStructure,
    src: &FeatureStructure,
    over: &BTreeSet<String>,
) -> FeatureStructure {
    let mut out = dst.clone();
    for f in over {
        if let Some(v) = src.get(f) {
            out.0.insert(f.clone(), v.clone());
        }
    }
    out
}

/// What a word looks like to the attachment test.
#[derive(Debug, Clone)]
pub struct WordView<'a> {
    pub class: &'a str,
    pub features: &'a FeatureStructure,
    pub position: Position,
    pub frame: &'a [ValencySlot],
    /// Already attached dependents: slot name and surface position.
    pub dependents: Vec<(&'a str, Position)>,
}

/// A successful head/modifier match.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UnifyResult {
    pub slot_used: String,
    pub unified_head_features: FeatureStructure,
    pub unified_modifier_features: FeatureStructure,
}

fn side_of(head: Position, modifier: Position) -> Option<Direction> {
    match modifier.cmp(&head) {
        std::cmp::Ordering::Less => Some(Direction::Left),
        std::cmp::Ordering::Greater => Some(Direction::Right),
        std::cmp::Ordering::Equal => None,
    }
}

/// Dependents on one side must appear with non-decreasing rank as the
/// distance from the head grows.
fn rank_order_holds(
    head: &WordView<'_>,
    side: Direction,
    new_rank: i32,
    new_pos: Position,
) -> bool {
    let mut deps: Vec<(Position, i32)> = head
        .dependents
        .iter()
        .filter(|(_, p)| side_of(head.position, *p) == Some(side))
        .filter_map(|(name, p)| {
            head.frame
                .iter()
                .find(|s| s.name == *name)
                .map(|s| (*p, s.rank))
        })
        .collect();
    deps.push((new_pos, new_rank));
    match side {
        Direction::Right => deps.sort_by_key(|d| d.0),
        Direction::Left => deps.sort_by_key(|d| std::cmp::Reverse(d.0)),
    }
    deps.windows(2).all(|w| w[0].1 <= w[1].1)
}

fn try_slot(
    lex: &Lexicon,
    head: &WordView<'_>,
    modifier: &WordView<'_>,
    slot: &ValencySlot,
) -> Option<UnifyResult> {
    let used = head
        .dependents
        .iter()
        .filter(|(n, _)| *n == slot.name)
        .count();
    if used >= slot.max_fillers {
        return None;
    }
    if side_of(head.position, modifier.position) != Some(slot.direction) {
        return None;
    }
    if !lex.subsumes_class(&slot.modifier_class, modifier.class) {
        return None;
    }
    if !rank_order_holds(head, slot.direction, slot.rank, modifier.position) {
        return None;
    }
    let constrained = unify_features(
        lex,
        modifier.features,
        &slot.modifier_features,
        slot.modifier_features.features(),
    )
    .ok()??;
    let agreed = unify_features(
        lex,
        &constrained,
        head.features,
        slot.agreement.iter().map(String::as_str),
    )
    .ok()??;
    Some(UnifyResult {
        slot_used: slot.name.clone(),
        unified_head_features: overwrite(head.features, &agreed, &slot.agreement),
        unified_modifier_features: agreed,
    })
}

/// Every slot of `head` that `modifier` can fill, by ascending rank.
/// Counts as a single invocation.
pub fn syntax_check_all(
    lex: &Lexicon,
    head: &WordView<'_>,
    modifier: &WordView<'_>,
    metrics: &Metrics,
) -> Vec<UnifyResult> {
    metrics.count_syntax_check();
    let mut slots: Vec<&ValencySlot> = head.frame.iter().collect();
    slots.sort_by_key(|s| s.rank);
    slots
        .into_iter()
        .filter_map(|s| try_slot(lex, head, modifier, s))
        .collect()
}

/// The lowest-ranked slot of `head` that `modifier` can fill.
pub fn syntax_check(
    lex: &Lexicon,
    head: &WordView<'_>,
    modifier: &WordView<'_>,
    metrics: &Metrics,
) -> Option<UnifyResult> {
    syntax_check_all(lex, head, modifier, metrics)
        .into_iter()
        .next()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::load_lexicon;

    const LEX: &str = "\
classes:
word abstract
noun word
adj word
features:
num = sg|pl
case = nom|acc|dat
entries:
n n noun {num=sg} [slot(a left optional adj 1 none agree=num max=2), slot(b right optional noun 1 none where={case=acc})] none
";

    fn lex() -> Lexicon {
        load_lexicon(LEX).unwrap()
    }

    fn brute_intersection(
        lex: &Lexicon,
        a: &FeatureStructure,
        b: &FeatureStructure,
        f: &str,
    ) -> BTreeSet<String> {
        let dom: Vec<String> = lex.feature(f).unwrap().domain.clone();
        dom.into_iter()
            .filter(|v| a.get(f).is_none_or(|s| s.contains(v)))
            .filter(|v| b.get(f).is_none_or(|s| s.contains(v)))
            .collect()
    }

    #[test]
    fn intersection_cases() {
        let lex = lex();
        let a = FeatureStructure::new().with("num", &["sg"]);
        let b = FeatureStructure::new().with("num", &["sg", "pl"]);
        let r = unify_features(&lex, &a, &b, ["num"]).unwrap().unwrap();
        assert_eq!(r, FeatureStructure::new().with("num", &["sg"]));

        let c = FeatureStructure::new().with("num", &["pl"]);
        assert_eq!(unify_features(&lex, &a, &c, ["num"]).unwrap(), None);
    }

    #[test]
    fn underspecified_side_is_full_domain() {
        let lex = lex();
        let a = FeatureStructure::new();
        let b = FeatureStructure::new().with("case", &["nom"]);
        let r = unify_features(&lex, &a, &b, ["case"]).unwrap().unwrap();
        let expected = brute_intersection(&lex, &a, &b, "case");
        assert_eq!(r.get("case"), Some(&expected));
        assert_eq!(r, FeatureStructure::new().with("case", &["nom"]));
    }

    #[test]
    fn undeclared_feature_errors() {
        let lex = lex();
        let a = FeatureStructure::new();
        assert_eq!(
            unify_features(&lex, &a, &a, ["gender"]),
            Err(UnifyError::UndeclaredFeature("gender".into()))
        );
    }

    #[test]
    fn features_outside_over_are_untouched() {
        let lex = lex();
        let a = FeatureStructure::new()
            .with("num", &["sg"])
            .with("case", &["nom", "acc"]);
        let b = FeatureStructure::new().with("case", &["dat"]);
        let r = unify_features(&lex, &a, &b, ["num"]).unwrap().unwrap();
        assert_eq!(r, a);
    }

    #[test]
    fn slot_selection_and_ranks() {
        let lex = lex();
        let entry = &lex.lookup("n")[0];
        let m = Metrics::new();
        let adj_feats = FeatureStructure::new();
        let head = WordView {
            class: "noun",
            features: &entry.features,
            position: Position::Token(5),
            frame: &entry.frame,
            dependents: vec![],
        };
        let adj = WordView {
            class: "adj",
            features: &adj_feats,
            position: Position::Token(4),
            frame: &[],
            dependents: vec![],
        };
        let r = syntax_check(&lex, &head, &adj, &m).unwrap();
        assert_eq!(r.slot_used, "a");
        assert_eq!(r.unified_modifier_features.get("num").unwrap().len(), 1);

        // Wrong side.
        let adj_right = WordView {
            position: Position::Token(6),
            ..adj.clone()
        };
        assert!(syntax_check(&lex, &head, &adj_right, &m).is_none());

        // maxFillers.
        let full = WordView {
            dependents: vec![("a", Position::Token(4)), ("a", Position::Token(3))],
            ..head.clone()
        };
        let adj2 = WordView {
            position: Position::Token(2),
            ..adj.clone()
        };
        assert!(syntax_check(&lex, &full, &adj2, &m).is_none());
        assert_eq!(m.snapshot().syntax_check_calls, 3);
    }

    #[test]
    fn where_constraint_applies() {
        let lex = lex();
        let entry = &lex.lookup("n")[0];
        let m = Metrics::new();
        let head = WordView {
            class: "noun",
            features: &entry.features,
            position: Position::Token(0),
            frame: &entry.frame,
            dependents: vec![],
        };
        let nom = FeatureStructure::new().with("case", &["nom"]);
        let any = FeatureStructure::new();
        let mk = |f| WordView {
            class: "noun",
            features: f,
            position: Position::Token(1),
            frame: &[],
            dependents: vec![],
        };
        assert!(syntax_check(&lex, &head, &mk(&nom), &m).is_none());
        let ok = syntax_check(&lex, &head, &mk(&any), &m).unwrap();
        assert_eq!(ok.unified_modifier_features.get("case").unwrap().len(), 1);
    }
}
