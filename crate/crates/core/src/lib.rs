//! Concurrent dependency parsing over a typed knowledge base, with a
//! serial chart parser as the comparison baseline.

pub mod chart;
pub mod grammar;
pub mod kb;
pub mod metrics;
pub mod parser;
pub mod report;
pub mod runtime;
pub mod textlevel;
pub mod tree;
pub mod unify;

pub use grammar::{load_lexicon, GrammarError, Lexicon};
pub use kb::{define_schema, Kb, KbContext, KbError, KbSchema};
pub use metrics::{Metrics, MetricsSnapshot};
pub use parser::{Coverage, ParseResult, Parser, ParserConfig};
pub use runtime::{ActorKind, ActorRef, MessageKind, Scheduler};
pub use tree::{DepTree, Position};
