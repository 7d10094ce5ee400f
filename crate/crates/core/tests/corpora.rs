use skipflow_core::ir::Program;
use skipflow_core::lattice::{CondOp, ValueState};
use skipflow_core::pvpg::{FlowKind, Side};
use skipflow_core::solver::{analyze, AnalysisResult, Config};
use skipflow_core::text::{parse_program, SourceFile};

fn load(name: &str) -> Program {
    let path = format!("{}/corpus/{name}", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(&path).unwrap();
    parse_program(&SourceFile::new(path, text)).unwrap()
}

fn one(r: &AnalysisResult, p: &Program, m: &str, pred: impl Fn(&FlowKind) -> bool) -> skipflow_core::pvpg::FlowId {
    let v = r.find(p, m, pred);
    assert_eq!(v.len(), 1, "expected exactly one matching flow in {m}");
    v[0]
}

#[test]
fn jdk_fixed_point() {
    let p = load("jdk_onexit.sfir");
    let r = analyze(&p, &Config::skipflow()).unwrap();
    assert!(!r.is_reachable(&p, "Set.remove"));
    assert!(r.is_reachable(&p, "Thread.isVirtual"));
    let ret = one(&r, &p, "Thread.isVirtual", |k| matches!(k, FlowKind::Return));
    assert_eq!(r.value(ret), &ValueState::Prim(0));
    let ne = one(&r, &p, "SharedThreadContainer.onExit", |k| {
        matches!(k, FlowKind::Filter { op: CondOp::Ne, side: Side::Left, .. })
    });
    assert_eq!(r.value(ne), &ValueState::Empty);
    assert!(r.is_enabled(ne));
    let remove = one(&r, &p, "SharedThreadContainer.onExit", |k| {
        matches!(k, FlowKind::Invoke { method, .. } if method == "remove")
    });
    assert!(!r.is_enabled(remove));
    let load = one(&r, &p, "SharedThreadContainer.onExit", |k| matches!(k, FlowKind::Load { .. }));
    assert!(!r.is_enabled(load));

    let b = analyze(&p, &Config::baseline()).unwrap();
    assert!(b.is_reachable(&p, "Set.remove"));
    assert!(b.is_reachable(&p, "Set.rehash"));
}

#[test]
fn sunflow_fixed_point() {
    let p = load("sunflow_display.sfir");
    let r = analyze(&p, &Config::skipflow()).unwrap();
    let frame = p.type_id("FrameDisplay").unwrap();
    let fd = one(&r, &p, "Scene.render", |k| *k == FlowKind::New(frame));
    assert!(!r.is_enabled(fd));
    for m in ["FrameDisplay.imageBegin", "AwtFrame.show", "SwingComponent.paint"] {
        assert!(!r.is_reachable(&p, m), "{m}");
    }
    assert!(r.is_reachable(&p, "FileDisplay.imageBegin"));
    assert!(r.vs.iter().all(|v| !v.type_set().any(|t| t == frame)));

    let b = analyze(&p, &Config::baseline()).unwrap();
    for m in ["FrameDisplay.imageBegin", "AwtFrame.show", "SwingComponent.paint"] {
        assert!(b.is_reachable(&p, m), "{m}");
    }
}

/// The loop corpus with its loop replaced by `trips` explicit trips.
fn unrolled_loop(trips: usize) -> Program {
    let mut s = String::from(
        "type Object {}\ntype Cell extends Object { field v : int }\ntype Main extends Object {}\nroot Main.main\n\
         method Main.main(this) {\n  b0: start(this)\n    c = new Cell\n    five = 5\n    c.v = five\n    jump t0\n",
    );
    for i in 0..trips {
        let next = if i + 1 == trips { "out".to_string() } else { format!("t{}", i + 1) };
        s += &format!(
            "  t{i}: merge\n    stop{i} = any\n    zero{i} = 0\n    if stop{i} < zero{i} then x{i} else y{i}\n\
             x{i}: label\n    jump out\n\
             y{i}: label\n    ten{i} = 10\n    c.v = ten{i}\n    jump {next}\n"
        );
    }
    s += "  out: merge\n    r = c.v\n    return r\n}\n";
    parse_program(&SourceFile::new("unrolled.sfir", s)).unwrap()
}

#[test]
fn loop_covers_its_unrolling() {
    let p = load("counting_loop.sfir");
    let r = analyze(&p, &Config::skipflow()).unwrap();
    assert!(r.stats.max_growths_per_flow <= 3);
    let ret = one(&r, &p, "Main.main", |k| matches!(k, FlowKind::Return));
    let phi = one(&r, &p, "Main.main", |k| matches!(k, FlowKind::Phi));
    assert_eq!(r.value(ret), &ValueState::Any);
    assert_eq!(r.value(phi), &ValueState::Any);

    let u = unrolled_loop(10);
    let ru = analyze(&u, &Config::skipflow()).unwrap();
    let uret = one(&ru, &u, "Main.main", |k| matches!(k, FlowKind::Return));
    assert!(ru.value(uret).leq(r.value(ret)));
    assert_eq!(ru.value(uret), &ValueState::Any);
}
