mod common;

use proptest::prelude::*;
use skipflow_core::ir::{validate, BlockEnd, Cond, Program, TypeId};
use skipflow_core::lattice::{compare_filter, CondOp, ValueState};
use skipflow_core::oracle::{check_containment, check_subsumption, gen_program, interpret, GenSize};
use skipflow_core::pvpg::{build_method, Branch, FlowKind, Graph, Origin, Side};
use skipflow_core::solver::{analyze, Config, Mode, Order, Solver};
use skipflow_core::text::{parse_program, print_program, SourceFile};

fn arb_state() -> impl Strategy<Value = ValueState> {
    prop_oneof![
        Just(ValueState::Empty),
        Just(ValueState::Any),
        (-3i64..=3).prop_map(ValueState::Prim),
        any::<i64>().prop_map(ValueState::Prim),
        prop::collection::btree_set(prop_oneof![(0u32..6).prop_map(TypeId), Just(TypeId::NULL)], 1..5)
            .prop_map(ValueState::types),
    ]
}

fn arb_comparison() -> impl Strategy<Value = CondOp> {
    prop::sample::select(common::COMPARISONS.to_vec())
}

fn generated(seed: u64) -> Program {
    gen_program(seed, GenSize::small())
}

fn build_all(p: &Program) -> Graph {
    let mut g = Graph::new();
    for i in 0..p.methods().len() {
        build_method(&mut g, p, skipflow_core::ir::MethodId(i as u32)).unwrap();
    }
    g
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn join_is_a_semilattice(a in arb_state(), b in arb_state(), c in arb_state()) {
        prop_assert_eq!(a.join(&b), b.join(&a));
        prop_assert_eq!(a.join(&b).join(&c), a.join(&b.join(&c)));
        prop_assert_eq!(a.join(&a), a.clone());
        prop_assert_eq!(a.leq(&b), a.join(&b) == b);
    }

    #[test]
    fn comparisons_narrow_and_are_monotone(op in arb_comparison(), a in arb_state(), b in arb_state(), r in arb_state()) {
        if let Ok(x) = compare_filter(op, &a, &r) {
            prop_assert!(x.leq(&a));
            let big = a.join(&b);
            if let Ok(y) = compare_filter(op, &big, &r) {
                prop_assert!(x.leq(&y), "{a} ≤ {big} but {x} ≰ {y}");
            }
            let big_r = r.join(&b);
            if let Ok(y) = compare_filter(op, &a, &big_r) {
                prop_assert!(x.leq(&y), "{r} ≤ {big_r} but {x} ≰ {y}");
            }
        }
    }

    #[test]
    fn inversions(op in arb_comparison(), l in -3i64..3, r in -3i64..3) {
        prop_assert_eq!(op.inv().inv(), op);
        prop_assert_eq!(op.flip().flip(), op);
        prop_assert_eq!(op.holds(l, r), !op.inv().holds(l, r));
        prop_assert_eq!(op.holds(l, r), op.flip().holds(r, l));
    }

    #[test]
    fn print_parse_round_trip(seed in any::<u64>()) {
        let p = generated(seed);
        let text = print_program(&p);
        let q = parse_program(&SourceFile::new("gen.sfir", text.clone())).unwrap();
        prop_assert_eq!(&q, &p);
        prop_assert_eq!(print_program(&q), text);
    }

    #[test]
    fn generated_programs_validate_deterministically(seed in any::<u64>()) {
        let p = generated(seed);
        let v = validate(&p);
        prop_assert!(v.is_empty(), "{v:?}");
        prop_assert_eq!(validate(&p), v);
    }

    #[test]
    fn resolution_follows_the_chain(seed in any::<u64>()) {
        let p = generated(seed);
        for m in p.methods() {
            let owner = p.type_id(&m.owner).unwrap();
            for t in p.type_ids().filter(|t| p.is_subtype(*t, owner)) {
                let got = p.resolve(t, &m.name).unwrap();
                let declarer = p
                    .chain(t)
                    .into_iter()
                    .find(|c| p.method_id(p.type_name(*c), &m.name).is_some())
                    .unwrap();
                prop_assert_eq!(got, p.method_id(p.type_name(declarer), &m.name).unwrap());
            }
        }
    }

    #[test]
    fn construction_invariants(seed in any::<u64>()) {
        let p = generated(seed);
        let g = build_all(&p);
        for (id, f) in g.flows() {
            if id == g.pred_on() {
                prop_assert!(f.pred_in.is_empty());
                continue;
            }
            prop_assert!(!f.pred_in.is_empty(), "{} has no predicate", g.describe(id, &p));
            if f.pred_in.len() > 1 {
                prop_assert_eq!(&f.kind, &FlowKind::PhiPred);
            }
            for u in &f.use_in {
                prop_assert_eq!(g.flow(u.src).key.method, f.key.method, "use edge crosses methods");
            }
        }
        for mg in g.methods() {
            let def = p.method(mg.id);
            for (b, block) in def.blocks.iter().enumerate() {
                let BlockEnd::If { cond, .. } = &block.end else { continue };
                let filters = |branch: Branch| -> Vec<(Side, CondOp)> {
                    mg.flows
                        .iter()
                        .filter_map(|&f| {
                            let fl = g.flow(f);
                            match (&fl.key.origin, &fl.kind) {
                                (Origin::Filter { block, branch: br, side }, FlowKind::Filter { op, .. })
                                    if *block == b && *br == branch => Some((*side, *op)),
                                _ => None,
                            }
                        })
                        .collect()
                };
                let (t, e) = (filters(Branch::Then), filters(Branch::Else));
                let expected = if matches!(cond, Cond::InstanceOf(..)) { 1 } else { 2 };
                prop_assert_eq!(t.len(), expected);
                prop_assert_eq!(e.len(), expected);
                for ((ts, top), (es, eop)) in t.iter().zip(&e) {
                    prop_assert_eq!(ts, es);
                    prop_assert_eq!(top.inv(), *eop);
                }
            }
        }
        // Building again gives the same graph.
        prop_assert_eq!(format!("{:?}", build_all(&p).flows().collect::<Vec<_>>()), format!("{:?}", g.flows().collect::<Vec<_>>()));
    }

    #[test]
    fn solver_invariants(seed in any::<u64>()) {
        let p = generated(seed);
        let mut s = Solver::new(&p, Config::skipflow()).unwrap();
        s.run().unwrap();
        let r = s.result();
        for (id, _) in r.graph.flows() {
            if !r.is_enabled(id) {
                prop_assert!(r.value(id).is_empty(), "disabled flow with a value");
            }
        }
        prop_assert!(r.stats.growth_events <= 3 * r.stats.flows as u64);
        prop_assert!(r.stats.enable_events <= r.stats.flows as u64);
        prop_assert!(r.stats.steps <= r.stats.step_bound);
        prop_assert_eq!(s.reapply().unwrap(), 0);
        prop_assert_eq!(s.result().snapshot(), r.snapshot());
    }

    #[test]
    fn worklist_order_is_irrelevant(seed in any::<u64>(), a in any::<u64>(), b in any::<u64>()) {
        let p = generated(seed);
        for mode in [Mode::SkipFlow, Mode::Baseline] {
            let run = |order| analyze(&p, &Config { mode, order, ..Config::default() }).unwrap().snapshot();
            let fifo = run(Order::Fifo);
            prop_assert_eq!(&run(Order::Random(a)), &fifo);
            prop_assert_eq!(&run(Order::Random(b)), &fifo);
        }
    }

    #[test]
    fn sound_and_contained(seed in any::<u64>(), run_seed in any::<u64>()) {
        let p = generated(seed);
        let sf = analyze(&p, &Config::skipflow()).unwrap();
        let base = analyze(&p, &Config::baseline()).unwrap();
        let root = p.root_ids()[0];
        let trace = interpret(&p, root, run_seed, 5_000);
        prop_assert_eq!(trace.uninitialized_reads, 0);
        prop_assert_eq!(check_subsumption(&trace, &sf, &p), vec![]);
        prop_assert_eq!(check_subsumption(&trace, &base, &p), vec![]);
        prop_assert_eq!(check_containment(&sf, &base, &p), Vec::<String>::new());
        prop_assert_eq!(interpret(&p, root, run_seed, 5_000), trace);
    }
}

#[test]
fn exhaustive_lattice_laws() {
    let d = common::sampled_domain_with_null();
    assert_eq!(common::lattice_law_failures(&d), Vec::<String>::new());
    assert_eq!(common::filter_failures(&d, &common::three_types()), Vec::<String>::new());
}

#[test]
fn minimal_generated_program() {
    let p = gen_program(1, GenSize::minimal());
    assert_eq!(p.methods().len(), 1);
    assert_eq!(p.methods()[0].blocks.len(), 1);
    assert!(validate(&p).is_empty());
}
