//! Differential soundness testing: a concrete interpreter, a generator of
//! well-typed random programs, and a checker that every concrete value is
//! covered by the analysis result.

mod diff;
mod gen;
mod interp;
mod subsume;

pub use diff::{check_containment, run_case, run_many, CaseOutcome, DiffConfig, DiffSummary};
pub use gen::{gen_program, GenSize};
pub use interp::{interpret, Stop, Trace};
pub use subsume::{check_subsumption, Violation, ViolationKind};

use serde::{Deserialize, Serialize};

use crate::ir::TypeId;
use crate::lattice::ValueState;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ConcreteValue {
    Int(i64),
    /// Object number and its exact type.
    Ref(u32, TypeId),
    Null,
}

impl ConcreteValue {
    /// Runtime equality: integers by value, references by identity.
    pub fn same(&self, other: &ConcreteValue) -> bool {
        match (self, other) {
            (ConcreteValue::Int(a), ConcreteValue::Int(b)) => a == b,
            (ConcreteValue::Ref(a, _), ConcreteValue::Ref(b, _)) => a == b,
            (ConcreteValue::Null, ConcreteValue::Null) => true,
            _ => false,
        }
    }
}

pub fn abstract_value(v: &ConcreteValue) -> ValueState {
    match v {
        ConcreteValue::Int(n) => ValueState::Prim(*n),
        ConcreteValue::Ref(_, t) => ValueState::single(*t),
        ConcreteValue::Null => ValueState::null(),
    }
}
