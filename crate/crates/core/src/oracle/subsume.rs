use serde::{Deserialize, Serialize};

use super::{abstract_value, Trace};
use crate::ir::Program;
use crate::pvpg::origin_text;
use crate::solver::AnalysisResult;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    /// A method ran but is not in the reachable set.
    Unreachable,
    /// A value was observed at an element whose flow is disabled.
    Disabled,
    /// An observed value is not covered by the flow's state.
    Value,
    /// No flow exists for an observed element of a reachable method.
    MissingFlow,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub detail: String,
}

/// Everything the run observed must be covered by `result`.
pub fn check_subsumption(trace: &Trace, result: &AnalysisResult, program: &Program) -> Vec<Violation> {
    let mut out = Vec::new();
    for m in &trace.executed {
        if !result.reachable.contains(m) {
            out.push(Violation {
                kind: ViolationKind::Unreachable,
                detail: format!("{} executed but not reachable", program.method(*m).qualified_name()),
            });
        }
    }
    for (key, values) in &trace.observations {
        if key.method.is_some_and(|m| !result.reachable.contains(&m)) {
            continue;
        }
        let owner = key
            .method
            .map(|m| program.method(m).qualified_name())
            .unwrap_or_else(|| "global".into());
        let at = format!("{owner} {}", origin_text(&key.origin, key.method, program));
        let Some(f) = result.graph.by_key(key) else {
            out.push(Violation {
                kind: ViolationKind::MissingFlow,
                detail: format!("no flow for {at}"),
            });
            continue;
        };
        if !result.is_enabled(f) {
            out.push(Violation {
                kind: ViolationKind::Disabled,
                detail: format!("{at} executed but its flow is disabled"),
            });
            continue;
        }
        let vs = result.value(f);
        for v in values {
            let a = abstract_value(v);
            if !a.leq(vs) {
                out.push(Violation {
                    kind: ViolationKind::Value,
                    detail: format!("{at}: observed {} not within {}", a.render(program), vs.render(program)),
                });
            }
        }
    }
    out
}
