//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any failed.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use skipflow_core::ir::{Program, TypeId};
use skipflow_core::lattice::{compare_filter, CondOp, ValueState};
use skipflow_core::oracle::{check_containment, gen_program, run_many, DiffConfig, GenSize};
use skipflow_core::pvpg::{FlowKind, Side};
use skipflow_core::solver::{analyze, AnalysisResult, Config, Mode, Order};
use skipflow_core::text::{parse_program, print_program, SourceFile};

type Outcome = Result<String, String>;

fn check(cond: bool, what: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what.into())
    }
}

fn one(r: &AnalysisResult, p: &Program, m: &str, pred: impl Fn(&FlowKind) -> bool) -> Result<usize, String> {
    match r.find(p, m, pred).as_slice() {
        [f] => Ok(f.index()),
        other => Err(format!("expected one matching flow in {m}, found {}", other.len())),
    }
}

fn within(limit: Duration, start: Instant) -> Result<Duration, String> {
    let t = start.elapsed();
    check(t < limit, format!("took {t:?}, limit {limit:?}"))?;
    Ok(t)
}

/// Largest growth count seen by any run, folded across criteria.
struct Growth {
    max: u32,
    budget: f64,
}

impl Growth {
    fn note(&mut self, r: &AnalysisResult) {
        self.max = self.max.max(r.stats.max_growths_per_flow);
        self.budget = self.budget.max(r.stats.steps as f64 / r.stats.step_bound.max(1) as f64);
    }
}

fn jdk(g: &mut Growth) -> Outcome {
    let start = Instant::now();
    let p = common::load("jdk_onexit.sfir");
    let r = analyze(&p, &Config::skipflow()).map_err(|e| e.to_string())?;
    let b = analyze(&p, &Config::baseline()).map_err(|e| e.to_string())?;
    let t = within(Duration::from_secs(1), start)?;
    g.note(&r);
    g.note(&b);
    check(!r.is_reachable(&p, "Set.remove"), "remove() reachable")?;
    let ret = one(&r, &p, "Thread.isVirtual", |k| matches!(k, FlowKind::Return))?;
    check(r.vs[ret] == ValueState::Prim(0), format!("isVirtual returns {}", r.vs[ret]))?;
    let ne = one(&r, &p, "SharedThreadContainer.onExit", |k| {
        matches!(k, FlowKind::Filter { op: CondOp::Ne, side: Side::Left, .. })
    })?;
    check(r.vs[ne] == ValueState::Empty, format!("≠ filter holds {}", r.vs[ne]))?;
    let inv = one(&r, &p, "SharedThreadContainer.onExit", |k| {
        matches!(k, FlowKind::Invoke { method, .. } if method == "remove")
    })?;
    let load = one(&r, &p, "SharedThreadContainer.onExit", |k| matches!(k, FlowKind::Load { .. }))?;
    check(!r.enabled[inv] && !r.enabled[load], "remove call or field load enabled")?;
    check(b.is_reachable(&p, "Set.remove"), "baseline misses remove()")?;
    Ok(format!("{t:?}"))
}

fn sunflow(g: &mut Growth) -> Outcome {
    let start = Instant::now();
    let p = common::load("sunflow_display.sfir");
    let r = analyze(&p, &Config::skipflow()).map_err(|e| e.to_string())?;
    let b = analyze(&p, &Config::baseline()).map_err(|e| e.to_string())?;
    let t = within(Duration::from_secs(1), start)?;
    g.note(&r);
    g.note(&b);
    let frame = p.type_id("FrameDisplay").ok_or("no FrameDisplay")?;
    let alloc = one(&r, &p, "Scene.render", |k| *k == FlowKind::New(frame))?;
    check(!r.enabled[alloc], "New(FrameDisplay) enabled")?;
    for m in ["FrameDisplay.imageBegin", "AwtFrame.show", "SwingComponent.paint"] {
        check(!r.is_reachable(&p, m), format!("{m} reachable"))?;
        check(b.is_reachable(&p, m), format!("baseline misses {m}"))?;
    }
    Ok(format!("{t:?}"))
}

fn compare_table() -> Outcome {
    let (a, b, c) = (TypeId(0), TypeId(1), TypeId(2));
    let ts = |v: &[TypeId]| ValueState::types(v.iter().copied());
    let p = ValueState::Prim;
    let cases = [
        (CondOp::Eq, ValueState::Any, p(5), p(5)),
        (CondOp::Eq, ValueState::Any, ValueState::Any, ValueState::Any),
        (CondOp::Eq, ts(&[a, b]), ts(&[b, c]), ts(&[b])),
        (CondOp::Eq, p(3), p(3), p(3)),
        (CondOp::Eq, p(3), p(5), ValueState::Empty),
        (CondOp::Ne, p(0), p(0), ValueState::Empty),
        (CondOp::Ne, p(5), p(3), p(5)),
        (CondOp::Lt, p(3), p(5), p(3)),
        (CondOp::Lt, p(3), p(1), ValueState::Empty),
        // Restricted ≠: a type set on the right removes nothing.
        (CondOp::Ne, ts(&[a, b]), ts(&[b, c]), ts(&[a, b])),
        (CondOp::Ne, ts(&[a, TypeId::NULL]), ValueState::null(), ts(&[a])),
    ];
    for (op, l, r, want) in &cases {
        let got = compare_filter(*op, l, r).map_err(|e| e.to_string())?;
        check(got == *want, format!("{l} {} {r} = {got}, expected {want}", op.symbol()))?;
    }
    Ok(format!("{} evaluations", cases.len()))
}

fn lattice_laws() -> Outcome {
    let start = Instant::now();
    let d = common::sampled_domain();
    let mut bad = common::lattice_law_failures(&d);
    bad.extend(common::filter_failures(&d, &common::three_types()));
    check(bad.is_empty(), format!("{} counterexamples, first: {}", bad.len(), bad.first().cloned().unwrap_or_default()))?;
    let t = within(Duration::from_secs(5), start)?;
    Ok(format!("{} states, {t:?}", d.len()))
}

fn differential(g: &mut Growth) -> Outcome {
    let start = Instant::now();
    let cfg = DiffConfig {
        programs: 1000,
        seed: 0x5eed,
        runs: 3,
        ..DiffConfig::default()
    };
    let s = run_many(&cfg);
    g.max = g.max.max(s.max_growths_per_flow);
    g.budget = g.budget.max(s.max_budget_used);
    if let Some(c) = s.failures.first() {
        return Err(format!(
            "{} failing programs; seed {}: {}",
            s.failures.len(),
            c.seed,
            c.failures.first().cloned().unwrap_or_default()
        ));
    }
    let t = start.elapsed();
    check(t < Duration::from_secs(300), format!("took {t:?}"))?;
    Ok(format!(
        "{} programs, {} runs ({} cut short), {t:?}",
        s.programs, s.runs, s.partial_runs
    ))
}

fn containment(g: &mut Growth) -> Outcome {
    // Generated programs are covered by the differential run; here the
    // checked-in corpora must be strictly more precise.
    for name in ["jdk_onexit.sfir", "sunflow_display.sfir", "counting_loop.sfir"] {
        let p = common::load(name);
        let r = analyze(&p, &Config::skipflow()).map_err(|e| e.to_string())?;
        let b = analyze(&p, &Config::baseline()).map_err(|e| e.to_string())?;
        g.note(&r);
        g.note(&b);
        let bad = check_containment(&r, &b, &p);
        check(bad.is_empty(), format!("{name}: {}", bad.join("; ")))?;
        if name != "counting_loop.sfir" {
            check(
                r.reachable.len() < b.reachable.len(),
                format!("{name}: reachable sets not strictly smaller"),
            )?;
        }
    }
    Ok("corpora strict, generated programs contained".into())
}

fn confluence(g: &mut Growth) -> Outcome {
    for seed in 0..50u64 {
        let p = gen_program(0xc0ff_ee00 + seed, GenSize::default());
        for mode in [Mode::SkipFlow, Mode::Baseline] {
            let run = |order| analyze(&p, &Config { mode, order, ..Config::default() });
            let x = run(Order::Random(seed)).map_err(|e| e.to_string())?;
            let y = run(Order::Random(seed ^ 0xffff)).map_err(|e| e.to_string())?;
            g.note(&x);
            g.note(&y);
            check(
                x.snapshot() == y.snapshot(),
                format!("program {seed} ({}) depends on worklist order", mode.as_str()),
            )?;
        }
    }
    Ok("50 programs × 2 orders × 2 modes".into())
}

fn termination(g: &Growth) -> Outcome {
    check(g.budget <= 1.0, format!("step budget exceeded ({:.2} of bound)", g.budget))?;
    check(g.max <= 3, format!("a flow grew {} times", g.max))?;
    Ok(format!("max growths per flow {}, max budget used {:.1}%", g.max, g.budget * 100.0))
}

fn round_trip() -> Outcome {
    for seed in 0..1000u64 {
        let p = gen_program(seed.wrapping_mul(0x9e37_79b9), GenSize::default());
        let text = print_program(&p);
        let q = parse_program(&SourceFile::new("gen.sfir", text.clone())).map_err(|e| format!("seed {seed}: {e}"))?;
        check(q == p, format!("seed {seed}: structure changed"))?;
        check(print_program(&q) == text, format!("seed {seed}: printing not stable"))?;
    }
    Ok("1000 programs".into())
}

fn main() -> ExitCode {
    let mut g = Growth { max: 0, budget: 0.0 };
    let mut results: Vec<(&str, Outcome)> = vec![
        ("jdk example fixed point", jdk(&mut g)),
        ("sunflow example fixed point", sunflow(&mut g)),
        ("compare table", compare_table()),
        ("lattice laws", lattice_laws()),
        ("differential soundness", differential(&mut g)),
        ("precision containment", containment(&mut g)),
        ("confluence", confluence(&mut g)),
    ];
    results.push(("termination bound", termination(&g)));
    results.push(("round trip", round_trip()));

    let mut failed = 0;
    for (name, r) in &results {
        match r {
            Ok(note) => println!("PASS {name}: {note}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
