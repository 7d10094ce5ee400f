use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use super::{FlowId, Graph};
use crate::ir::{MethodId, Program};
use crate::lattice::ValueState;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DotScope {
    Method(MethodId),
    All,
}

/// Graphviz rendering. Use edges are solid, predicate edges dashed and
/// observe edges dotted; enabled flows are filled red, disabled ones grey.
///
/// `enabled` and `values` are indexed by flow id and may be shorter than
/// the graph (missing entries count as disabled and empty). The always-on
/// predicate is drawn enabled regardless.
pub fn render_dot(
    graph: &Graph,
    program: &Program,
    scope: DotScope,
    enabled: &[bool],
    values: &[ValueState],
) -> String {
    let mut nodes: BTreeSet<FlowId> = BTreeSet::new();
    match scope {
        DotScope::Method(m) => {
            if let Some(mg) = graph.method(m) {
                nodes.extend(mg.flows.iter().copied());
            }
            nodes.insert(graph.pred_on());
        }
        DotScope::All => nodes.extend(graph.flows().map(|(id, _)| id)),
    }

    let title = match scope {
        DotScope::Method(m) => program.method(m).qualified_name(),
        DotScope::All => "program".to_string(),
    };
    let mut out = String::new();
    writeln!(out, "digraph {} {{", quote(&title)).unwrap();
    out.push_str("  node [shape=box, style=filled, fontname=\"Helvetica\"];\n");

    // Group nodes per method so whole-program output stays readable.
    let mut groups: BTreeMap<Option<MethodId>, Vec<FlowId>> = BTreeMap::new();
    for &n in &nodes {
        groups.entry(graph.flow(n).key.method).or_default().push(n);
    }
    for (owner, ids) in &groups {
        let indent = match (scope, owner) {
            (DotScope::All, Some(m)) => {
                writeln!(out, "  subgraph cluster_{} {{", m.0).unwrap();
                writeln!(out, "    label={};", quote(&program.method(*m).qualified_name())).unwrap();
                "    "
            }
            _ => "  ",
        };
        for &id in ids {
            let f = graph.flow(id);
            let on = id == graph.pred_on() || enabled.get(id.index()).copied().unwrap_or(false);
            let mut label = f.kind.label(program);
            if let Some(v) = values.get(id.index()) {
                if !v.is_empty() {
                    write!(label, "\nVS = {}", v.render(program)).unwrap();
                }
            }
            let (fill, font) = if on { ("#e8554e", "white") } else { ("#d0d0d0", "#555555") };
            writeln!(
                out,
                "{indent}{id} [label={}, fillcolor=\"{fill}\", fontcolor=\"{font}\"];",
                quote(&label)
            )
            .unwrap();
        }
        if matches!((scope, owner), (DotScope::All, Some(_))) {
            out.push_str("  }\n");
        }
    }

    for &id in &nodes {
        let f = graph.flow(id);
        let edges = f
            .use_out
            .iter()
            .map(|t| (t, "solid"))
            .chain(f.pred_out.iter().map(|t| (t, "dashed")))
            .chain(f.obs_out.iter().map(|t| (t, "dotted")));
        for (t, style) in edges {
            if nodes.contains(t) {
                writeln!(out, "  {id} -> {t} [style={style}];").unwrap();
            }
        }
    }
    out.push_str("}\n");
    out
}

fn quote(s: &str) -> String {
    let mut q = String::with_capacity(s.len() + 2);
    q.push('"');
    for c in s.chars() {
        match c {
            '"' => q.push_str("\\\""),
            '\\' => q.push_str("\\\\"),
            '\n' => q.push_str("\\n"),
            c => q.push(c),
        }
    }
    q.push('"');
    q
}
