use serde::{Deserialize, Serialize};

use super::AnalysisResult;
use crate::ir::Program;
use crate::pvpg::CheckKind;

/// Counters over a fixed point. A check counts when neither of its branches
/// was proven dead, i.e. it could not be removed.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metrics {
    pub reachable_methods: usize,
    pub type_checks: usize,
    pub null_checks: usize,
    pub primitive_checks: usize,
    pub polycalls: usize,
}

impl Metrics {
    pub fn compute(r: &AnalysisResult, _program: &Program) -> Metrics {
        let mut m = Metrics {
            reachable_methods: r.reachable.len(),
            ..Metrics::default()
        };
        for mid in &r.reachable {
            let Some(mg) = r.graph.method(*mid) else {
                continue;
            };
            for site in &mg.branches {
                let live = |f| !r.value(f).is_empty();
                if live(site.then_pred) && live(site.else_pred) {
                    match site.kind {
                        CheckKind::Type => m.type_checks += 1,
                        CheckKind::Null => m.null_checks += 1,
                        CheckKind::Primitive => m.primitive_checks += 1,
                    }
                }
            }
            m.polycalls += mg
                .invokes
                .iter()
                .filter(|f| r.is_enabled(**f) && r.callees.get(f).is_some_and(|c| c.len() >= 2))
                .count();
        }
        m
    }
}
