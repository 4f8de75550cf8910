use serde::{Deserialize, Serialize};

use crate::metrics::MetricsSnapshot;
use crate::runtime::RuntimeStats;
use crate::tree::DepTree;

use super::{Coverage, ParseEvents, ParseResult};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MachineWord {
    /// Token index; absent for a virtual word.
    pub position: Option<usize>,
    pub surface: String,
    pub lexeme: String,
    pub class: String,
    pub is_virtual: bool,
    /// Token index of the head; absent for the root or a virtual head.
    pub head: Option<usize>,
    pub head_is_virtual: bool,
    pub slot: Option<String>,
    pub aux_head: Option<usize>,
    pub instance: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MachineReading {
    pub context: u32,
    pub words: Vec<MachineWord>,
    pub kb: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MachineResult {
    pub tokens: Vec<String>,
    pub coverage: Coverage,
    pub skipped_tokens: Vec<usize>,
    pub readings: Vec<MachineReading>,
    pub counters: MetricsSnapshot,
    pub events: ParseEvents,
    pub runtime: RuntimeStats,
}

fn words(tree: &DepTree) -> Vec<MachineWord> {
    let mut order: Vec<usize> = (0..tree.nodes.len()).collect();
    order.sort_by_key(|&i| tree.nodes[i].position);
    order
        .into_iter()
        .map(|i| {
            let n = &tree.nodes[i];
            let head = n.head.as_ref().map(|(h, _)| &tree.nodes[*h]);
            MachineWord {
                position: n.position.token(),
                surface: n.surface.clone(),
                lexeme: n.lexeme().to_string(),
                class: n.class().to_string(),
                is_virtual: n.is_virtual,
                head: head.and_then(|h| h.position.token()),
                head_is_virtual: head.is_some_and(|h| h.is_virtual),
                slot: n.head.as_ref().map(|(_, s)| s.clone()),
                aux_head: n.aux_head.and_then(|a| tree.nodes[a].position.token()),
                instance: n.instance.map(|i| i.to_string()),
            }
        })
        .collect()
}

impl ParseResult {
    pub fn to_machine(&self) -> MachineResult {
        MachineResult {
            tokens: self.tokens.clone(),
            coverage: self.coverage,
            skipped_tokens: self.skipped_tokens.clone(),
            readings: self
                .readings
                .iter()
                .map(|r| MachineReading {
                    context: r.ctx.id().0,
                    words: words(&r.tree),
                    kb: r.ctx.dump().lines().map(str::to_string).collect(),
                })
                .collect(),
            counters: self.counters,
            events: self.events,
            runtime: self.runtime,
        }
    }

    /// Indented trees separated by blank lines, then a skipped-token line
    /// for partial results.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, r) in self.readings.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            out.push_str(&r.tree.render());
        }
        if self.coverage == Coverage::Partial {
            let list: Vec<String> = self.skipped_tokens.iter().map(|t| t.to_string()).collect();
            out.push_str(&format!("skipped: [{}]\n", list.join(", ")));
        }
        out
    }
}
