//! Side-by-side comparison of the actor parser and the chart baseline on a
//! corpus, in check counts rather than wall-clock time.
//!
//! Corpus format: one sentence per line, optionally followed by `|||` and
//! one or more `;`-separated gold analyses. A gold analysis lists, for each
//! token, the position of its head or `_` for the root (and for barrier
//! tokens). Blank lines and lines starting with `#` are ignored.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;

use crate::chart::ChartParser;
use crate::metrics::MetricsSnapshot;
use crate::parser::{tokenize, ParseError, Parser, Reading};
use crate::tree::ReadingSignature;

/// Head position per token; `None` marks the root or an unattached token.
pub type HeadVector = Vec<Option<usize>>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusEntry {
    /// 1-based line order among the sentences of the corpus.
    pub id: usize,
    pub sentence: String,
    pub gold: Vec<HeadVector>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CorpusError {
    #[error("line {line}: bad head `{token}`")]
    BadHead { line: usize, token: String },
    #[error("line {line}: gold analysis has {got} heads for {expected} tokens")]
    GoldLength {
        line: usize,
        got: usize,
        expected: usize,
    },
}

pub fn load_corpus(source: &str) -> Result<Vec<CorpusEntry>, CorpusError> {
    let mut out = Vec::new();
    for (i, raw) in source.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (sentence, gold_part) = match line.split_once("|||") {
            Some((s, g)) => (s.trim(), Some(g)),
            None => (line, None),
        };
        let n = tokenize(sentence).len();
        let mut gold = Vec::new();
        for analysis in gold_part.into_iter().flat_map(|g| g.split(';')) {
            let heads = analysis
                .split_whitespace()
                .map(|t| match t {
                    "_" => Ok(None),
                    _ => t.parse().map(Some).map_err(|_| CorpusError::BadHead {
                        line: i + 1,
                        token: t.to_string(),
                    }),
                })
                .collect::<Result<HeadVector, _>>()?;
            if heads.len() != n {
                return Err(CorpusError::GoldLength {
                    line: i + 1,
                    got: heads.len(),
                    expected: n,
                });
            }
            gold.push(heads);
        }
        out.push(CorpusEntry {
            id: out.len() + 1,
            sentence: sentence.to_string(),
            gold,
        });
    }
    Ok(out)
}

/// Head vector of a reading over `n` tokens.
pub fn head_vector(reading: &Reading, n: usize) -> HeadVector {
    let mut heads = vec![None; n];
    let tree = &reading.tree;
    for node in &tree.nodes {
        if let (Some(p), Some((h, _))) = (node.position.token(), &node.head) {
            if p < n {
                heads[p] = tree.nodes[*h].position.token();
            }
        }
    }
    heads
}

/// `CP / PT`, or `inf` when PT is zero, or `n/a` when CP has no value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ratio {
    Value(f64),
    Inf,
    NotAvailable,
}

impl Ratio {
    pub fn of(cp: Option<u64>, pt: u64) -> Ratio {
        match cp {
            None => Ratio::NotAvailable,
            Some(_) if pt == 0 => Ratio::Inf,
            Some(c) => Ratio::Value(c as f64 / pt as f64),
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Ratio::Value(v) => Some(v),
            _ => None,
        }
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ratio::Value(v) => write!(f, "{:.2}", v),
            Ratio::Inf => f.write_str("inf"),
            Ratio::NotAvailable => f.write_str("n/a"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Row {
    pub id: usize,
    pub sentence: String,
    pub pt: MetricsSnapshot,
    pub pt_readings: usize,
    pub pt_complete: bool,
    /// PT readings counted as correct (see [`ComparisonReport`]).
    pub pt_correct: usize,
    /// `None` when the chart parser rejected the input.
    pub cp: Option<MetricsSnapshot>,
    pub cp_readings: Option<usize>,
    pub cp_correct: Option<usize>,
    /// Every complete PT reading is also a CP reading.
    pub pt_within_cp: Option<bool>,
    pub pt_time: Duration,
    pub cp_time: Duration,
}

impl Row {
    pub fn syn_ratio(&self) -> Ratio {
        Ratio::of(
            self.cp.map(|c| c.syntax_check_calls),
            self.pt.syntax_check_calls,
        )
    }

    pub fn con_ratio(&self) -> Ratio {
        Ratio::of(
            self.cp.map(|c| c.concept_check_calls),
            self.pt.concept_check_calls,
        )
    }
}

/// Rows are ordered by increasing CP syntax-check count; rows the chart
/// parser failed on come last.
///
/// A reading is correct when its head vector matches a gold analysis of the
/// sentence. Sentences without gold analyses take the chart readings as the
/// reference: all of them count as correct, and a PT reading counts if the
/// chart also found it.
#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Totals {
    pub pt: MetricsSnapshot,
    pub cp: MetricsSnapshot,
    pub pt_correct: u64,
    pub cp_correct: u64,
}

impl ComparisonReport {
    /// Sums over the rows where both engines produced a result.
    pub fn totals(&self) -> Totals {
        let mut t = Totals::default();
        for r in &self.rows {
            let Some(cp) = r.cp else { continue };
            t.pt += r.pt;
            t.cp += cp;
            t.pt_correct += r.pt_correct as u64;
            t.cp_correct += r.cp_correct.unwrap_or(0) as u64;
        }
        t
    }

    pub fn syn_ratio(&self) -> Ratio {
        let t = self.totals();
        Ratio::of(Some(t.cp.syntax_check_calls), t.pt.syntax_check_calls)
    }

    pub fn con_ratio(&self) -> Ratio {
        let t = self.totals();
        Ratio::of(Some(t.cp.concept_check_calls), t.pt.concept_check_calls)
    }

    /// Correct PT readings over correct CP readings.
    pub fn completeness(&self) -> Option<f64> {
        let t = self.totals();
        (t.cp_correct > 0).then(|| t.pt_correct as f64 / t.cp_correct as f64)
    }

    fn cells(r: &Row) -> [String; 9] {
        let opt = |v: Option<u64>| v.map_or_else(|| "n/a".to_string(), |v| v.to_string());
        [
            r.id.to_string(),
            opt(r.cp.map(|c| c.syntax_check_calls)),
            r.pt.syntax_check_calls.to_string(),
            opt(r.cp.map(|c| c.concept_check_calls)),
            r.pt.concept_check_calls.to_string(),
            opt(r.cp_readings.map(|n| n as u64)),
            r.pt_readings.to_string(),
            r.syn_ratio().to_string(),
            r.con_ratio().to_string(),
        ]
    }

    pub const COLUMNS: [&'static str; 9] = [
        "id",
        "cp_syn",
        "pt_syn",
        "cp_con",
        "pt_con",
        "cp_readings",
        "pt_readings",
        "syn_ratio",
        "con_ratio",
    ];

    pub fn to_csv(&self) -> String {
        let mut out = Self::COLUMNS.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&Self::cells(r).join(","));
            out.push('\n');
        }
        out
    }

    fn summary(&self) -> String {
        let t = self.totals();
        let completeness = self
            .completeness()
            .map_or_else(|| "n/a".to_string(), |c| format!("{:.1}%", c * 100.0));
        format!(
            "total syntaxCheck: cp {} pt {} ratio {}\n\
             total conceptCheck: cp {} pt {} ratio {}\n\
             completeness: pt {} / cp {} correct = {}\n",
            t.cp.syntax_check_calls,
            t.pt.syntax_check_calls,
            self.syn_ratio(),
            t.cp.concept_check_calls,
            t.pt.concept_check_calls,
            self.con_ratio(),
            t.pt_correct,
            t.cp_correct,
            completeness
        )
    }

    /// Aligned text table followed by the aggregate lines.
    pub fn render_table(&self) -> String {
        let rows: Vec<[String; 9]> = self.rows.iter().map(Self::cells).collect();
        let mut width = Self::COLUMNS.map(str::len);
        for r in &rows {
            for (w, c) in width.iter_mut().zip(r) {
                *w = (*w).max(c.len());
            }
        }
        let mut out = String::new();
        let line = |cells: &[String], out: &mut String| {
            let padded: Vec<String> = cells
                .iter()
                .zip(width)
                .map(|(c, w)| format!("{:>w$}", c))
                .collect();
            let _ = writeln!(out, "{}", padded.join("  "));
        };
        line(&Self::COLUMNS.map(String::from), &mut out);
        for r in &rows {
            line(r, &mut out);
        }
        out.push_str(&self.summary());
        out
    }
}

fn signatures(readings: &[Reading]) -> BTreeSet<ReadingSignature> {
    readings.iter().map(|r| r.tree.signature()).collect()
}

fn compare_one(parser: &Parser, entry: &CorpusEntry) -> Result<Row, ParseError> {
    let tokens = tokenize(&entry.sentence);
    let n = tokens.len();
    let started = Instant::now();
    let pt = parser.parse(&entry.sentence)?;
    let pt_time = started.elapsed();
    let started = Instant::now();
    let chart = ChartParser::new(parser.lexicon(), parser.schema().clone(), parser.config());
    let cp = chart.parse(&tokens).ok();
    let cp_time = started.elapsed();

    let pt_complete: &[Reading] = if pt.is_complete() { &pt.readings } else { &[] };
    let matches_gold = |r: &Reading| entry.gold.contains(&head_vector(r, n));
    let (pt_correct, cp_correct, pt_within_cp) = match &cp {
        Some(c) => {
            let cp_sigs = signatures(&c.readings);
            let within = signatures(pt_complete).is_subset(&cp_sigs);
            if entry.gold.is_empty() {
                let pt_ok = pt_complete
                    .iter()
                    .filter(|r| cp_sigs.contains(&r.tree.signature()))
                    .count();
                (pt_ok, Some(c.readings.len()), Some(within))
            } else {
                let pt_ok = pt_complete.iter().filter(|r| matches_gold(r)).count();
                let cp_ok = c.readings.iter().filter(|r| matches_gold(r)).count();
                (pt_ok, Some(cp_ok), Some(within))
            }
        }
        None => (
            pt_complete.iter().filter(|r| matches_gold(r)).count(),
            None,
            None,
        ),
    };
    Ok(Row {
        id: entry.id,
        sentence: entry.sentence.clone(),
        pt: pt.counters,
        pt_readings: pt.readings.len(),
        pt_complete: pt.is_complete(),
        pt_correct,
        cp: cp.as_ref().map(|c| c.counters),
        cp_readings: cp.as_ref().map(|c| c.readings.len()),
        cp_correct,
        pt_within_cp,
        pt_time,
        cp_time,
    })
}

/// Runs both engines on every entry, `jobs` sentences at a time. Sessions
/// share only the immutable lexicon and schema.
pub fn compare(
    parser: &Parser,
    corpus: &[CorpusEntry],
    jobs: usize,
) -> Result<ComparisonReport, ParseError> {
    let run = || {
        corpus
            .par_iter()
            .map(|e| compare_one(parser, e))
            .collect::<Result<Vec<_>, _>>()
    };
    let mut rows = match rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
    {
        Ok(pool) => pool.install(run)?,
        Err(_) => run()?,
    };
    rows.sort_by_key(|r| (r.cp.map_or(u64::MAX, |c| c.syntax_check_calls), r.id));
    Ok(ComparisonReport { rows })
}
