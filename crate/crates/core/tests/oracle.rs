mod common;

use common::{arc_sets, brute_force, corpus_sentences, fixture};
use pt_core::chart::{ChartError, ChartParser};
use pt_core::parser::tokenize;
use pt_core::ParserConfig;

fn chart_sets(
    sentence: &str,
) -> std::collections::BTreeSet<std::collections::BTreeSet<common::Arc_>> {
    let f = fixture();
    let chart = ChartParser::new(&f.lex, f.schema.clone(), &ParserConfig::default());
    arc_sets(&chart.parse(&tokenize(sentence)).unwrap().readings)
}

#[test]
fn chart_equals_enumerator_on_short_corpus_sentences() {
    let f = fixture();
    let mut checked = 0;
    for s in corpus_sentences() {
        let toks: Vec<&str> = s.split_whitespace().collect();
        if toks.len() > 7 {
            continue;
        }
        let expected = brute_force(&f.lex, &f.schema, &toks);
        assert_eq!(chart_sets(&s), expected, "{}", s);
        checked += 1;
    }
    assert!(checked >= 10, "only {} short sentences", checked);
}

#[test]
fn pt_readings_are_chart_readings_on_corpus() {
    let f = fixture();
    let parser = f.parser();
    for s in corpus_sentences() {
        let pt = parser.parse(&s).unwrap();
        if !pt.is_complete() {
            continue;
        }
        let cp = chart_sets(&s);
        for r in arc_sets(&pt.readings) {
            assert!(cp.contains(&r), "{}: PT reading outside the chart set", s);
        }
    }
}

#[test]
fn two_stacked_prepositional_phrases() {
    let f = fixture();
    let s = "Zenon sells the printer with the drive for $2,000";
    let toks: Vec<&str> = s.split_whitespace().collect();
    let expected = brute_force(&f.lex, &f.schema, &toks);
    let cp = chart_sets(s);
    assert_eq!(cp, expected);
    assert_eq!(cp.len(), 3);
    let pt = f.parser().parse(s).unwrap();
    assert_eq!(arc_sets(&pt.readings), cp);
}

#[test]
fn three_stacked_prepositional_phrases() {
    let f = fixture();
    let s = "the customer bought the notebook with the printer with the drive for $2,000";
    let toks: Vec<&str> = s.split_whitespace().collect();
    let expected = brute_force(&f.lex, &f.schema, &toks);
    assert!(expected.len() >= 2, "{} analyses", expected.len());
    assert_eq!(chart_sets(s), expected);
    let pt = f.parser().parse(s).unwrap();
    let pt_sets = arc_sets(&pt.readings);
    assert!(pt.is_complete());
    assert!(pt_sets.is_subset(&expected));
}

#[test]
fn pp_fixture_has_two_enumerated_readings() {
    let f = fixture();
    let toks = ["Zenon", "sells", "this", "printer", "for", "$2,000"];
    assert_eq!(brute_force(&f.lex, &f.schema, &toks).len(), 2);
    assert_eq!(chart_sets(&toks.join(" ")).len(), 2);
}

#[test]
fn chart_rejects_unknown_words() {
    let f = fixture();
    let chart = ChartParser::new(&f.lex, f.schema.clone(), &ParserConfig::default());
    let err = chart
        .parse(&tokenize("Zenon sells this printer totally over-priced"))
        .unwrap_err();
    assert_eq!(
        err,
        ChartError::UnknownWord {
            surface: "totally".into(),
            position: 4
        }
    );
    assert_eq!(chart.parse(&[]).unwrap_err(), ChartError::EmptyInput);
}

#[test]
fn chart_ignores_outer_barriers_but_not_inner_ones() {
    let f = fixture();
    let chart = ChartParser::new(&f.lex, f.schema.clone(), &ParserConfig::default());
    let end = chart.parse(&tokenize("Zenon sells printers .")).unwrap();
    assert_eq!(end.readings.len(), 1);
    let inner = chart.parse(&tokenize("Zenon sells , printers")).unwrap();
    assert!(inner.readings.is_empty());
}
