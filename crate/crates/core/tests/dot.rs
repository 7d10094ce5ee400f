mod common;

use skipflow_core::pvpg::{render_dot, DotScope, FlowKind};
use skipflow_core::solver::{analyze, Config};

#[test]
fn method_scope_styles() {
    let p = common::load("jdk_onexit.sfir");
    let r = analyze(&p, &Config::skipflow()).unwrap();
    let m = p.method_id("SharedThreadContainer", "onExit").unwrap();
    let dot = render_dot(&r.graph, &p, DotScope::Method(m), &r.enabled, &r.vs);
    assert!(dot.starts_with("digraph \"SharedThreadContainer.onExit\" {"));
    assert!(dot.trim_end().ends_with('}'));
    for style in ["solid", "dashed", "dotted"] {
        assert!(dot.contains(&format!("[style={style}]")), "no {style} edge");
    }
    // The call to remove is drawn disabled.
    let remove = r.find(&p, "SharedThreadContainer.onExit", |k| {
        matches!(k, FlowKind::Invoke { method, .. } if method == "remove")
    })[0];
    let line = dot
        .lines()
        .find(|l| l.trim_start().starts_with(&format!("{remove} [")))
        .unwrap();
    assert!(line.contains("#d0d0d0"), "{line}");
    // Nothing from other methods except the shared predicate.
    assert!(!dot.contains("cluster_"));
}

#[test]
fn whole_program_clusters_and_is_deterministic() {
    let p = common::load("sunflow_display.sfir");
    let r = analyze(&p, &Config::skipflow()).unwrap();
    let a = render_dot(&r.graph, &p, DotScope::All, &r.enabled, &r.vs);
    let b = render_dot(&r.graph, &p, DotScope::All, &r.enabled, &r.vs);
    assert_eq!(a, b);
    for m in &r.reachable {
        assert!(a.contains(&format!("subgraph cluster_{} {{", m.0)));
    }
    assert_eq!(a.matches('{').count(), a.matches('}').count());
}

#[test]
fn states_shown_in_labels() {
    let p = common::load("jdk_onexit.sfir");
    let r = analyze(&p, &Config::skipflow()).unwrap();
    let m = p.method_id("Thread", "isVirtual").unwrap();
    let dot = render_dot(&r.graph, &p, DotScope::Method(m), &r.enabled, &r.vs);
    assert!(dot.contains("VS = 0"), "{dot}");
    let bare = render_dot(&r.graph, &p, DotScope::Method(m), &[], &[]);
    assert!(!bare.contains("VS ="));
    // Without a state only the always-on predicate is drawn enabled.
    assert_eq!(bare.matches("#e8554e").count(), 1);
}
