//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use skipflow_core::ir::{Program, TypeId};
use skipflow_core::lattice::{compare_filter, instanceof_filter, CondOp, ValueState};
use skipflow_core::text::{parse_program, SourceFile};

pub fn load(name: &str) -> Program {
    let path = format!("{}/corpus/{name}", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(&path).unwrap();
    parse_program(&SourceFile::new(path, text)).unwrap()
}

/// `Object`, `A extends Object`, `B extends A`: three declared types.
pub fn three_types() -> Program {
    parse_program(&SourceFile::new(
        "types.sfir",
        "type Object {} type A extends Object {} type B extends A {}",
    ))
    .unwrap()
}

/// Prim −2..=2, every subset of the three-type universe (null excluded),
/// Empty and Any. The empty subset is Empty itself.
pub fn sampled_domain() -> Vec<ValueState> {
    let mut d = vec![ValueState::Empty, ValueState::Any];
    d.extend((-2..=2).map(ValueState::Prim));
    for mask in 1u32..8 {
        d.push(ValueState::types((0..3).filter(|i| mask & (1 << i) != 0).map(TypeId)));
    }
    d
}

/// Same as [`sampled_domain`] with null added to every type set.
pub fn sampled_domain_with_null() -> Vec<ValueState> {
    let mut d = sampled_domain();
    for mask in 0u32..8 {
        d.push(ValueState::types(
            (0..3)
                .filter(|i| mask & (1 << i) != 0)
                .map(TypeId)
                .chain([TypeId::NULL]),
        ));
    }
    d
}

pub const COMPARISONS: [CondOp; 6] = [CondOp::Eq, CondOp::Ne, CondOp::Lt, CondOp::Le, CondOp::Gt, CondOp::Ge];

/// Semilattice laws and the join/leq link. Returns counterexamples.
pub fn lattice_law_failures(d: &[ValueState]) -> Vec<String> {
    let mut out = Vec::new();
    for a in d {
        if a.join(a) != *a {
            out.push(format!("idempotence: {a}"));
        }
        if !ValueState::Empty.leq(a) || !a.leq(&ValueState::Any) {
            out.push(format!("bounds: {a}"));
        }
        for b in d {
            let ab = a.join(b);
            if ab != b.join(a) {
                out.push(format!("commutativity: {a}, {b}"));
            }
            if !a.leq(&ab) || !b.leq(&ab) {
                out.push(format!("upper bound: {a}, {b}"));
            }
            if a.leq(b) != (ab == *b) {
                out.push(format!("absorption: {a}, {b}"));
            }
            if a.leq(b) && b.leq(a) && a != b {
                out.push(format!("antisymmetry: {a}, {b}"));
            }
            for c in d {
                if ab.join(c) != a.join(&b.join(c)) {
                    out.push(format!("associativity: {a}, {b}, {c}"));
                }
                if a.leq(c) && b.leq(c) && !ab.leq(c) {
                    out.push(format!("least upper bound: {a}, {b}, {c}"));
                }
            }
        }
    }
    out
}

/// Filters narrow and are monotone in both operands.
pub fn filter_failures(d: &[ValueState], program: &Program) -> Vec<String> {
    let mut out = Vec::new();
    for op in &COMPARISONS {
        for a in d {
            for r in d {
                let Ok(x) = compare_filter(*op, a, r) else {
                    continue;
                };
                if !x.leq(a) {
                    out.push(format!("widens: {a} {} {r} = {x}", op.symbol()));
                }
                for a2 in d.iter().filter(|a2| a.leq(a2)) {
                    if let Ok(y) = compare_filter(*op, a2, r) {
                        if !x.leq(&y) {
                            out.push(format!("left: {a} ≤ {a2} but {a} {} {r}", op.symbol()));
                        }
                    }
                }
                for r2 in d.iter().filter(|r2| r.leq(r2)) {
                    if let Ok(y) = compare_filter(*op, a, r2) {
                        if !x.leq(&y) {
                            out.push(format!("right: {r} ≤ {r2} but {a} {} {r}", op.symbol()));
                        }
                    }
                }
            }
        }
    }
    for t in program.type_ids() {
        for negated in [false, true] {
            for a in d {
                let x = instanceof_filter(a, t, negated, program);
                if !x.leq(a) {
                    out.push(format!("instanceof widens {a}"));
                }
                for a2 in d.iter().filter(|a2| a.leq(a2)) {
                    if !x.leq(&instanceof_filter(a2, t, negated, program)) {
                        out.push(format!("instanceof not monotone: {a} ≤ {a2}"));
                    }
                }
            }
        }
    }
    out
}
