use std::ops::AddAssign;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

/// Run-scoped counters. Each parse session owns one; the checks bump them
/// through a shared reference so concurrent handlers can count safely.
#[derive(Debug, Default)]
pub struct Metrics {
    syntax_checks: AtomicU64,
    concept_checks: AtomicU64,
    messages_sent: AtomicU64,
    readings_found: AtomicU64,
    readings_correct: AtomicU64,
}

impl Metrics {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn count_syntax_check(&self) {
        self.syntax_checks.fetch_add(1, Ordering::Relaxed);
    }

    pub fn count_concept_check(&self) {
        self.concept_checks.fetch_add(1, Ordering::Relaxed);
    }

    pub fn count_messages(&self, n: u64) {
        self.messages_sent.fetch_add(n, Ordering::Relaxed);
    }

    pub fn count_readings(&self, found: u64, correct: u64) {
        self.readings_found.fetch_add(found, Ordering::Relaxed);
        self.readings_correct.fetch_add(correct, Ordering::Relaxed);
    }

    pub fn snapshot(&self) -> MetricsSnapshot {
        MetricsSnapshot {
            syntax_check_calls: self.syntax_checks.load(Ordering::Relaxed),
            concept_check_calls: self.concept_checks.load(Ordering::Relaxed),
            messages_sent: self.messages_sent.load(Ordering::Relaxed),
            readings_found: self.readings_found.load(Ordering::Relaxed),
            readings_correct: self.readings_correct.load(Ordering::Relaxed),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricsSnapshot {
    pub syntax_check_calls: u64,
    pub concept_check_calls: u64,
    pub messages_sent: u64,
    pub readings_found: u64,
    pub readings_correct: u64,
}

impl AddAssign for MetricsSnapshot {
    fn add_assign(&mut self, rhs: Self) {
        self.syntax_check_calls += rhs.syntax_check_calls;
        self.concept_check_calls += rhs.concept_check_calls;
        self.messages_sent += rhs.messages_sent;
        self.readings_found += rhs.readings_found;
        self.readings_correct += rhs.readings_correct;
    }
}
