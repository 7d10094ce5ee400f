//! Serializable summaries of analysis results. Nothing here depends on wall
//! time, so reports of the same input are byte-identical.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::ir::Program;
use crate::pvpg::origin_text;
use crate::solver::{AnalysisResult, Metrics, Stats};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowReport {
    pub element: String,
    pub kind: String,
    pub enabled: bool,
    pub value: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub mode: String,
    pub metrics: Metrics,
    pub stats: Stats,
    /// Sorted `Owner.name` of every reachable method.
    pub reachable: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flows: Vec<FlowReport>,
}

impl Report {
    pub fn new(result: &AnalysisResult, program: &Program) -> Self {
        Report {
            mode: result.mode.as_str().into(),
            metrics: result.metrics(program),
            stats: result.stats.clone(),
            reachable: result.reachable_names(program),
            flows: Vec::new(),
        }
    }

    /// Adds one entry per flow, in graph order.
    pub fn with_flows(mut self, result: &AnalysisResult, program: &Program) -> Self {
        self.flows = result
            .graph
            .flows()
            .map(|(id, f)| FlowReport {
                element: origin_text(&f.key.origin, f.key.method, program),
                kind: f.kind.label(program),
                enabled: result.is_enabled(id),
                value: result.value(id).render(program),
            })
            .collect();
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "mode: {}", self.mode).unwrap();
        writeln!(s, "reachable methods ({}):", self.reachable.len()).unwrap();
        for m in &self.reachable {
            writeln!(s, "  {m}").unwrap();
        }
        let m = &self.metrics;
        writeln!(s, "type checks: {}", m.type_checks).unwrap();
        writeln!(s, "null checks: {}", m.null_checks).unwrap();
        writeln!(s, "primitive checks: {}", m.primitive_checks).unwrap();
        writeln!(s, "polymorphic calls: {}", m.polycalls).unwrap();
        writeln!(s, "steps: {} (bound {})", self.stats.steps, self.stats.step_bound).unwrap();
        s
    }
}

/// Both analyses side by side.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comparison {
    pub skipflow: Report,
    pub baseline: Report,
    /// Methods reachable only in the baseline.
    pub pruned: Vec<String>,
}

impl Comparison {
    pub fn new(skipflow: &AnalysisResult, baseline: &AnalysisResult, program: &Program) -> Self {
        let skipflow = Report::new(skipflow, program);
        let baseline = Report::new(baseline, program);
        let pruned = baseline
            .reachable
            .iter()
            .filter(|m| !skipflow.reachable.contains(m))
            .cloned()
            .collect();
        Comparison {
            skipflow,
            baseline,
            pruned,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn to_text(&self) -> String {
        let (a, b) = (&self.skipflow.metrics, &self.baseline.metrics);
        let rows = [
            ("reachable methods", a.reachable_methods, b.reachable_methods),
            ("type checks", a.type_checks, b.type_checks),
            ("null checks", a.null_checks, b.null_checks),
            ("primitive checks", a.primitive_checks, b.primitive_checks),
            ("polymorphic calls", a.polycalls, b.polycalls),
        ];
        let mut s = format!("{:<20}{:>10}{:>10}\n", "metric", "skipflow", "baseline");
        for (name, x, y) in rows {
            writeln!(s, "{name:<20}{x:>10}{y:>10}").unwrap();
        }
        if !self.pruned.is_empty() {
            writeln!(s, "pruned: {}", self.pruned.join(", ")).unwrap();
        }
        s
    }
}
