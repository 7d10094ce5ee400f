//! The value domain: ⊥, one integer constant, a set of types, or ⊤.
//!
//! Primitive constants and type sets share the lattice but are only related
//! through ⊥ and ⊤. Two different constants join straight to ⊤.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::ir::{Program, TypeId};

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ValueState {
    #[default]
    Empty,
    Prim(i64),
    /// Never empty. May contain [`TypeId::NULL`].
    Types(BTreeSet<TypeId>),
    Any,
}

impl ValueState {
    /// A type set, or `Empty` when `tys` is empty.
    pub fn types(tys: impl IntoIterator<Item = TypeId>) -> Self {
        let s: BTreeSet<TypeId> = tys.into_iter().collect();
        if s.is_empty() {
            ValueState::Empty
        } else {
            ValueState::Types(s)
        }
    }

    pub fn single(t: TypeId) -> Self {
        ValueState::Types(BTreeSet::from([t]))
    }

    pub fn null() -> Self {
        Self::single(TypeId::NULL)
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, ValueState::Empty)
    }

    /// The type set, or an empty slice-like view for the other elements.
    pub fn type_set(&self) -> impl Iterator<Item = TypeId> + '_ {
        let s = match self {
            ValueState::Types(s) => Some(s.iter().copied()),
            _ => None,
        };
        s.into_iter().flatten()
    }

    pub fn join(&self, other: &ValueState) -> ValueState {
        use ValueState::*;
        match (self, other) {
            (Empty, x) | (x, Empty) => x.clone(),
            (Any, _) | (_, Any) => Any,
            (Prim(a), Prim(b)) if a == b => Prim(*a),
            (Types(a), Types(b)) => Types(a.union(b).copied().collect()),
            _ => Any,
        }
    }

    pub fn leq(&self, other: &ValueState) -> bool {
        use ValueState::*;
        match (self, other) {
            (Empty, _) | (_, Any) => true,
            (Prim(a), Prim(b)) => a == b,
            (Types(a), Types(b)) => a.is_subset(b),
            _ => false,
        }
    }

    /// Report form: `⊥`, `5`, `{A,B,null}`, `⊤`.
    pub fn render(&self, program: &Program) -> String {
        match self {
            ValueState::Empty => "⊥".into(),
            ValueState::Prim(n) => n.to_string(),
            ValueState::Types(s) => format!("{{{}}}", names(s, program).join(",")),
            ValueState::Any => "⊤".into(),
        }
    }

    /// Machine form used in JSON: `empty`, `prim:5`, `types:[A,B,null]`, `any`.
    pub fn encode(&self, program: &Program) -> String {
        match self {
            ValueState::Empty => "empty".into(),
            ValueState::Prim(n) => format!("prim:{n}"),
            ValueState::Types(s) => format!("types:[{}]", names(s, program).join(",")),
            ValueState::Any => "any".into(),
        }
    }
}

fn names(s: &BTreeSet<TypeId>, program: &Program) -> Vec<String> {
    s.iter().map(|t| program.type_name(*t).to_string()).collect()
}

/// Rendering without type names, for debugging.
impl fmt::Display for ValueState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueState::Empty => f.write_str("⊥"),
            ValueState::Prim(n) => write!(f, "{n}"),
            ValueState::Types(s) => {
                let v: Vec<String> = s
                    .iter()
                    .map(|t| {
                        if t.is_null() {
                            "null".to_string()
                        } else {
                            format!("#{}", t.0)
                        }
                    })
                    .collect();
                write!(f, "{{{}}}", v.join(","))
            }
            ValueState::Any => f.write_str("⊤"),
        }
    }
}

/// Branch condition operator, including the derived forms produced by
/// inverting (else branch) and flipping (right operand).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CondOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    InstanceOf(TypeId),
    NotInstanceOf(TypeId),
}

impl CondOp {
    /// Negation, used for the else branch.
    pub fn inv(self) -> CondOp {
        use CondOp::*;
        match self {
            Eq => Ne,
            Ne => Eq,
            Lt => Ge,
            Ge => Lt,
            Gt => Le,
            Le => Gt,
            InstanceOf(t) => NotInstanceOf(t),
            NotInstanceOf(t) => InstanceOf(t),
        }
    }

    /// Swaps the operands: `a < b` holds iff `b > a`. Type tests are unary
    /// and stay as they are.
    pub fn flip(self) -> CondOp {
        use CondOp::*;
        match self {
            Lt => Gt,
            Gt => Lt,
            Le => Ge,
            Ge => Le,
            other => other,
        }
    }

    pub fn is_comparison(self) -> bool {
        !matches!(self, CondOp::InstanceOf(_) | CondOp::NotInstanceOf(_))
    }

    pub fn holds(self, l: i64, r: i64) -> bool {
        use CondOp::*;
        match self {
            Eq => l == r,
            Ne => l != r,
            Lt => l < r,
            Le => l <= r,
            Gt => l > r,
            Ge => l >= r,
            InstanceOf(_) | NotInstanceOf(_) => false,
        }
    }

    pub fn symbol(self) -> &'static str {
        use CondOp::*;
        match self {
            Eq => "=",
            Ne => "≠",
            Lt => "<",
            Le => "≤",
            Gt => ">",
            Ge => "≥",
            InstanceOf(_) => "instanceof",
            NotInstanceOf(_) => "!instanceof",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum DomainError {
    #[error("cannot compare {left} {op} {right}: operands mix integers and references")]
    Mixed {
        op: &'static str,
        left: String,
        right: String,
    },
    #[error("ordered comparison {op} on references ({left}, {right})")]
    OrderedTypes {
        op: &'static str,
        left: String,
        right: String,
    },
    #[error("`{0}` is not a comparison operator")]
    NotComparison(&'static str),
}

/// The values of `vl` that can satisfy `vl op vr`.
///
/// `≠` only removes something when the right side is a single known value
/// (a constant or `{null}`): two distinct objects of one type compare
/// unequal, so subtracting a set of types would drop live values.
pub fn compare_filter(
    op: CondOp,
    vl: &ValueState,
    vr: &ValueState,
) -> Result<ValueState, DomainError> {
    use ValueState::*;
    if !op.is_comparison() {
        return Err(DomainError::NotComparison(op.symbol()));
    }
    if vl.is_empty() || vr.is_empty() {
        return Ok(Empty);
    }
    let mixed = matches!((vl, vr), (Prim(_), Types(_)) | (Types(_), Prim(_)));
    if mixed {
        return Err(DomainError::Mixed {
            op: op.symbol(),
            left: vl.to_string(),
            right: vr.to_string(),
        });
    }
    match op {
        CondOp::Eq => Ok(match (vl, vr) {
            (Any, x) | (x, Any) => x.clone(),
            (Prim(a), Prim(b)) => {
                if a == b {
                    vl.clone()
                } else {
                    Empty
                }
            }
            (Types(a), Types(b)) => ValueState::types(a.intersection(b).copied()),
            _ => unreachable!("mixed operands handled above"),
        }),
        CondOp::Ne => Ok(match (vl, vr) {
            (Prim(a), Prim(b)) if a == b => Empty,
            (Types(a), Types(b)) if *b == BTreeSet::from([TypeId::NULL]) => {
                ValueState::types(a.iter().copied().filter(|t| !t.is_null()))
            }
            _ => vl.clone(),
        }),
        _ => match (vl, vr) {
            (Types(_), _) | (_, Types(_)) => Err(DomainError::OrderedTypes {
                op: op.symbol(),
                left: vl.to_string(),
                right: vr.to_string(),
            }),
            (Prim(a), Prim(b)) => Ok(if op.holds(*a, *b) { vl.clone() } else { Empty }),
            _ => Ok(vl.clone()),
        },
    }
}

/// Type-test filter with an explicit subtype oracle. A declared type passes
/// iff `is_sub(t) != negated`; null passes only the negated test.
pub fn type_filter(v: &ValueState, negated: bool, is_sub: impl Fn(TypeId) -> bool) -> ValueState {
    match v {
        ValueState::Types(s) => ValueState::types(s.iter().copied().filter(|&t| {
            if t.is_null() {
                negated
            } else {
                is_sub(t) != negated
            }
        })),
        other => other.clone(),
    }
}

pub fn instanceof_filter(
    v: &ValueState,
    target: TypeId,
    negated: bool,
    program: &Program,
) -> ValueState {
    type_filter(v, negated, |t| program.is_subtype(t, target))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ValueState::*;

    const A: TypeId = TypeId(0);
    const B: TypeId = TypeId(1);
    const C: TypeId = TypeId(2);

    fn ts(v: &[TypeId]) -> ValueState {
        ValueState::types(v.iter().copied())
    }

    #[test]
    fn join_examples() {
        assert_eq!(Prim(1).join(&Prim(0)), Any);
        assert_eq!(Prim(4).join(&Prim(4)), Prim(4));
        assert_eq!(Empty.join(&Prim(3)), Prim(3));
        assert_eq!(ts(&[A]).join(&ts(&[B, TypeId::NULL])), ts(&[A, B, TypeId::NULL]));
        assert_eq!(Prim(1).join(&ts(&[A])), Any);
    }

    #[test]
    fn leq_examples() {
        assert!(Empty.leq(&Prim(0)));
        assert!(!Prim(3).leq(&ts(&[A])));
        assert!(!ts(&[A]).leq(&Prim(3)));
        assert!(ts(&[A]).leq(&Any));
        assert!(ts(&[A]).leq(&ts(&[A, C])));
    }

    #[test]
    fn compare_examples() {
        let c = |op, l: &ValueState, r: &ValueState| compare_filter(op, l, r).unwrap();
        assert_eq!(c(CondOp::Eq, &Any, &Prim(5)), Prim(5));
        assert_eq!(c(CondOp::Eq, &ts(&[A, B]), &ts(&[B, C])), ts(&[B]));
        assert_eq!(c(CondOp::Ne, &Prim(0), &Prim(0)), Empty);
        assert_eq!(c(CondOp::Ne, &Prim(5), &Prim(3)), Prim(5));
        assert_eq!(c(CondOp::Ne, &ts(&[A, B]), &ts(&[B, C])), ts(&[A, B]));
        assert_eq!(c(CondOp::Ne, &ts(&[A, TypeId::NULL]), &ValueState::null()), ts(&[A]));
        assert_eq!(c(CondOp::Lt, &Prim(3), &Prim(5)), Prim(3));
        assert_eq!(c(CondOp::Lt, &Prim(3), &Prim(1)), Empty);
        assert_eq!(c(CondOp::Lt, &Prim(3), &Any), Prim(3));
        assert_eq!(c(CondOp::Ge, &Any, &Prim(1)), Any);
        assert_eq!(c(CondOp::Lt, &Empty, &Prim(1)), Empty);
        assert_eq!(c(CondOp::Eq, &Prim(1), &Empty), Empty);
    }

    #[test]
    fn compare_rejects_ill_typed_operands() {
        assert!(matches!(
            compare_filter(CondOp::Eq, &Prim(1), &ts(&[A])),
            Err(DomainError::Mixed { .. })
        ));
        assert!(matches!(
            compare_filter(CondOp::Lt, &ts(&[A]), &Any),
            Err(DomainError::OrderedTypes { .. })
        ));
        assert!(compare_filter(CondOp::InstanceOf(A), &Any, &Any).is_err());
    }

    #[test]
    fn type_filter_examples() {
        // B <: T, A not.
        let is_sub = |t: TypeId| t == B;
        assert_eq!(type_filter(&ts(&[A, B]), false, is_sub), ts(&[B]));
        assert_eq!(type_filter(&ts(&[A, B]), true, is_sub), ts(&[A]));
        assert_eq!(type_filter(&ValueState::null(), false, is_sub), Empty);
        assert_eq!(type_filter(&ValueState::null(), true, is_sub), ValueState::null());
        assert_eq!(type_filter(&Empty, false, is_sub), Empty);
        assert_eq!(type_filter(&Any, true, is_sub), Any);
    }

    #[test]
    fn inv_and_flip_are_involutions() {
        let ops = [
            CondOp::Eq,
            CondOp::Ne,
            CondOp::Lt,
            CondOp::Le,
            CondOp::Gt,
            CondOp::Ge,
            CondOp::InstanceOf(A),
            CondOp::NotInstanceOf(A),
        ];
        for op in ops {
            assert_eq!(op.inv().inv(), op);
            assert_eq!(op.flip().flip(), op);
            if op.is_comparison() {
                for (l, r) in [(1, 2), (2, 2), (3, 2)] {
                    assert_eq!(op.inv().holds(l, r), !op.holds(l, r));
                    assert_eq!(op.flip().holds(r, l), op.holds(l, r));
                }
            }
        }
        assert_eq!(CondOp::Lt.inv(), CondOp::Ge);
        assert_eq!(CondOp::Lt.flip(), CondOp::Gt);
        assert_eq!(CondOp::Eq.flip(), CondOp::Eq);
    }
}
