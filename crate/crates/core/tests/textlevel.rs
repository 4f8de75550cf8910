mod common;

use std::collections::BTreeSet;

use common::fixture;
use pt_core::textlevel::{parse_text, AnaphorQuery, AnaphorStatus, TextBehavior};

const TEXT: [&str; 2] = [
    "Zenon sells printers .",
    "the company sells these printers for $2,000 .",
];

#[test]
fn both_anaphors_resolve() {
    let f = fixture();
    let out = parse_text(&f.parser(), &TEXT).unwrap();
    assert_eq!(out.anaphors.len(), 2);
    assert!(out
        .anaphors
        .iter()
        .all(|a| a.status == AnaphorStatus::Resolved));
    let surfaces: Vec<&str> = out.anaphors.iter().map(|a| a.surface.as_str()).collect();
    assert_eq!(surfaces, ["company", "printers"]);
    // Antecedents are the referents introduced by the first sentence.
    let first_cf: BTreeSet<_> = out.centering[0].cf.iter().map(|e| e.referent).collect();
    assert!(out
        .anaphors
        .iter()
        .all(|a| first_cf.contains(&a.referent.unwrap())));
    assert_eq!(out.resolution_log().lines().count(), 2);
    assert!(out.resolution_log().starts_with("2#1 company -> r"));
}

#[test]
fn text_kb_holds_one_company_and_one_printer() {
    let f = fixture();
    let out = parse_text(&f.parser(), &TEXT).unwrap();
    let concepts: Vec<String> = out
        .kb
        .instances()
        .values()
        .map(|r| r.concept.clone())
        .collect();
    assert_eq!(concepts.iter().filter(|c| *c == "Company").count(), 1);
    assert_eq!(concepts.iter().filter(|c| *c == "Printer").count(), 1);
    // Nominal mentions minus resolved anaphors.
    let mentions = 2 + 3;
    let nominal_referents: BTreeSet<_> = out
        .kb
        .instances()
        .values()
        .filter(|r| ["Company", "Printer", "Money"].contains(&r.concept.as_str()))
        .map(|r| r.referent)
        .collect();
    assert_eq!(nominal_referents.len(), mentions - out.anaphors.len());
    // The second sale refers to the first sentence's company.
    let dump = out.kb_dump();
    let sells: Vec<&str> = dump.lines().filter(|l| l.contains(": Sell")).collect();
    assert_eq!(sells.len(), 2);
    let agent = |l: &str| {
        l.split("agent -> ")
            .nth(1)
            .unwrap()
            .split([',', '}'])
            .next()
            .unwrap()
            .to_string()
    };
    assert_eq!(agent(sells[0]), agent(sells[1]));
}

#[test]
fn resolved_antecedents_leave_the_consulted_centers() {
    let f = fixture();
    let out = parse_text(&f.parser(), &TEXT).unwrap();
    let consulted = &out.consulted[1];
    for a in &out.anaphors {
        assert!(consulted.iter().all(|e| e.referent != a.referent.unwrap()));
    }
    // A further search against what is left finds nothing compatible.
    let behavior = TextBehavior {
        lex: &f.lex,
        schema: &f.schema,
        centering: pt_core::ActorRef {
            id: 0,
            kind: pt_core::ActorKind::Centering,
        },
    };
    let query = AnaphorQuery {
        concept: "Company".into(),
        features: Default::default(),
        pronoun: false,
    };
    assert!(consulted.iter().all(|e| !behavior.compatible(&query, e)));
}

#[test]
fn centering_orders_by_salience_then_position() {
    let f = fixture();
    let out = parse_text(&f.parser(), &TEXT).unwrap();
    let cf = &out.centering[1].cf;
    let concepts: Vec<&str> = cf.iter().map(|e| e.concept.as_str()).collect();
    assert_eq!(concepts, ["Company", "Printer", "Money"]);
    assert!(cf.windows(2).all(|w| w[0].rank <= w[1].rank));
    assert_eq!(out.centering[1].cb, Some(out.centering[0].cf[0].referent));
}

#[test]
fn unrelated_definite_is_not_an_anaphor() {
    let f = fixture();
    let out = parse_text(
        &f.parser(),
        &[
            "Zenon sells printers .",
            "the customer bought the notebook .",
        ],
    )
    .unwrap();
    assert!(out.anaphors.is_empty());
}

#[test]
fn first_sentence_definite_has_no_antecedent() {
    let f = fixture();
    let out = parse_text(&f.parser(), &["the customer bought the notebook ."]).unwrap();
    assert!(out.anaphors.is_empty());
    assert_eq!(out.results.len(), 1);
}

#[test]
fn empty_text_is_rejected() {
    assert!(parse_text(&fixture().parser(), &[]).is_err());
}
