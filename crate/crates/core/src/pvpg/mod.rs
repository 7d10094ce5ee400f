//! Predicated value propagation graphs.
//!
//! One graph holds the flows of every method built so far plus the global
//! flows (the always-on predicate and one sink per field location). Each
//! flow has three kinds of outgoing edges:
//!
//! * use: the target joins the source's value state,
//! * predicate: the target becomes enabled once the source is enabled with
//!   a non-empty state,
//! * observe: the target is re-run when the source changes (receivers of
//!   loads, stores and invokes, and the opposite operand of a filter).

mod build;
mod dot;

pub use build::{build_method, BuildError};
pub use dot::{render_dot, DotScope};

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ir::{FieldLoc, MethodId, Program, TypeId};
use crate::lattice::CondOp;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FlowId(pub u32);

impl FlowId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Then,
    Else,
}

/// Which operand of the condition a filter re-defines.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Unary,
    Left,
    Right,
}

/// The program element a flow stands for. Together with the owning method
/// this is stable across runs, unlike [`FlowId`]s, which depend on the order
/// in which methods were reached.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "at", rename_all = "kebab-case")]
pub enum Origin {
    PredOn,
    Param { index: usize },
    Stmt { block: usize, index: usize },
    Phi { block: usize, index: usize },
    /// A join created for a variable without an explicit φ whose definition
    /// differs between the incoming edges (a filter re-defined it).
    MergeVar { block: usize, var: String },
    PhiPred { block: usize },
    Return,
    Filter { block: usize, branch: Branch, side: Side },
    FieldSink { ty: TypeId, field: String },
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FlowKey {
    pub method: Option<MethodId>,
    pub origin: Origin,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FlowKind {
    PredOn,
    Param(usize),
    ConstInt(i64),
    AnyPrim,
    New(TypeId),
    NullConst,
    Load { recv: FlowId, field: String },
    Store { recv: FlowId, field: String },
    Invoke { recv: FlowId, method: String, args: Vec<FlowId> },
    Return,
    Phi,
    PhiPred,
    /// `other` is the opposite operand of a binary condition.
    Filter { op: CondOp, side: Side, other: Option<FlowId> },
    FieldSink(FieldLoc),
}

impl FlowKind {
    pub fn is_source(&self) -> bool {
        matches!(
            self,
            FlowKind::PredOn
                | FlowKind::PhiPred
                | FlowKind::ConstInt(_)
                | FlowKind::AnyPrim
                | FlowKind::New(_)
                | FlowKind::NullConst
        )
    }

    pub fn label(&self, program: &Program) -> String {
        match self {
            FlowKind::PredOn => "pred_on".into(),
            FlowKind::Param(i) => format!("p{i}"),
            FlowKind::ConstInt(n) => format!("{n}"),
            FlowKind::AnyPrim => "any".into(),
            FlowKind::New(t) => format!("new {}", program.type_name(*t)),
            FlowKind::NullConst => "null".into(),
            FlowKind::Load { field, .. } => format!("load {field}"),
            FlowKind::Store { field, .. } => format!("store {field}"),
            FlowKind::Invoke { method, .. } => format!("invoke {method}()"),
            FlowKind::Return => "return".into(),
            FlowKind::Phi => "φ".into(),
            FlowKind::PhiPred => "φ_pred".into(),
            FlowKind::Filter { op, .. } => match op {
                CondOp::InstanceOf(t) => format!("instanceof {}", program.type_name(*t)),
                CondOp::NotInstanceOf(t) => format!("!instanceof {}", program.type_name(*t)),
                _ => op.symbol().to_string(),
            },
            FlowKind::FieldSink(loc) => format!("{}.{}", program.type_name(loc.ty), loc.field),
        }
    }
}

/// An incoming use edge. Receiver-to-`this` links carry the dispatch they
/// were created for: only receiver types that resolve to the linked callee
/// pass through.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UseIn {
    pub src: FlowId,
    pub dispatch: Option<Dispatch>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dispatch {
    pub method: String,
    pub callee: MethodId,
}

#[derive(Clone, Debug)]
pub struct Flow {
    pub kind: FlowKind,
    pub key: FlowKey,
    pub use_out: Vec<FlowId>,
    pub pred_out: Vec<FlowId>,
    pub obs_out: Vec<FlowId>,
    pub use_in: Vec<UseIn>,
    pub pred_in: Vec<FlowId>,
    pub obs_in: Vec<FlowId>,
}

impl Flow {
    pub fn in_degree(&self) -> usize {
        self.use_in.len() + self.pred_in.len() + self.obs_in.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckKind {
    Type,
    Null,
    Primitive,
}

/// One `if`, with the last filter of each branch (the branch predicate).
#[derive(Clone, Debug)]
pub struct BranchSite {
    pub block: usize,
    pub kind: CheckKind,
    pub then_pred: FlowId,
    pub else_pred: FlowId,
}

#[derive(Clone, Debug)]
pub struct MethodGraph {
    pub id: MethodId,
    pub params: Vec<FlowId>,
    pub ret: FlowId,
    pub flows: Vec<FlowId>,
    pub branches: Vec<BranchSite>,
    pub invokes: Vec<FlowId>,
}

#[derive(Clone, Debug)]
pub struct Graph {
    flows: Vec<Flow>,
    keys: HashMap<FlowKey, FlowId>,
    use_edges: HashSet<(FlowId, FlowId)>,
    methods: HashMap<MethodId, MethodGraph>,
    sinks: HashMap<FieldLoc, FlowId>,
    pred_on: FlowId,
}

impl Default for Graph {
    fn default() -> Self {
        Self::new()
    }
}

impl Graph {
    pub fn new() -> Self {
        let mut g = Graph {
            flows: Vec::new(),
            keys: HashMap::new(),
            use_edges: HashSet::new(),
            methods: HashMap::new(),
            sinks: HashMap::new(),
            pred_on: FlowId(0),
        };
        g.pred_on = g.add_flow(
            FlowKind::PredOn,
            FlowKey {
                method: None,
                origin: Origin::PredOn,
            },
        );
        g
    }

    pub fn pred_on(&self) -> FlowId {
        self.pred_on
    }

    pub fn len(&self) -> usize {
        self.flows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flows.is_empty()
    }

    pub fn flow(&self, id: FlowId) -> &Flow {
        &self.flows[id.index()]
    }

    pub fn flows(&self) -> impl Iterator<Item = (FlowId, &Flow)> {
        self.flows
            .iter()
            .enumerate()
            .map(|(i, f)| (FlowId(i as u32), f))
    }

    pub fn by_key(&self, key: &FlowKey) -> Option<FlowId> {
        self.keys.get(key).copied()
    }

    pub fn method(&self, id: MethodId) -> Option<&MethodGraph> {
        self.methods.get(&id)
    }

    pub fn methods(&self) -> impl Iterator<Item = &MethodGraph> {
        self.methods.values()
    }

    pub(crate) fn insert_method(&mut self, mg: MethodGraph) {
        self.methods.insert(mg.id, mg);
    }

    pub fn sink(&self, loc: &FieldLoc) -> Option<FlowId> {
        self.sinks.get(loc).copied()
    }

    /// The sink for `loc`, created on first use. New sinks are predicated by
    /// the always-on predicate. Returns whether it was created.
    pub fn ensure_sink(&mut self, loc: &FieldLoc) -> (FlowId, bool) {
        if let Some(&f) = self.sinks.get(loc) {
            return (f, false);
        }
        let f = self.add_flow(
            FlowKind::FieldSink(loc.clone()),
            FlowKey {
                method: None,
                origin: Origin::FieldSink {
                    ty: loc.ty,
                    field: loc.field.clone(),
                },
            },
        );
        self.add_pred(self.pred_on, f);
        self.sinks.insert(loc.clone(), f);
        (f, true)
    }

    pub fn add_flow(&mut self, kind: FlowKind, key: FlowKey) -> FlowId {
        let id = FlowId(self.flows.len() as u32);
        debug_assert!(!self.keys.contains_key(&key), "duplicate flow key {key:?}");
        self.keys.insert(key.clone(), id);
        self.flows.push(Flow {
            kind,
            key,
            use_out: Vec::new(),
            pred_out: Vec::new(),
            obs_out: Vec::new(),
            use_in: Vec::new(),
            pred_in: Vec::new(),
            obs_in: Vec::new(),
        });
        id
    }

    /// Adds a use edge unless one already exists. Returns whether it was new.
    pub fn add_use(&mut self, src: FlowId, tgt: FlowId, dispatch: Option<Dispatch>) -> bool {
        if !self.use_edges.insert((src, tgt)) {
            return false;
        }
        self.flows[src.index()].use_out.push(tgt);
        self.flows[tgt.index()].use_in.push(UseIn { src, dispatch });
        true
    }

    pub fn add_pred(&mut self, src: FlowId, tgt: FlowId) {
        self.flows[src.index()].pred_out.push(tgt);
        self.flows[tgt.index()].pred_in.push(src);
    }

    pub fn add_obs(&mut self, src: FlowId, tgt: FlowId) {
        self.flows[src.index()].obs_out.push(tgt);
        self.flows[tgt.index()].obs_in.push(src);
    }

    pub fn max_in_degree(&self) -> usize {
        self.flows.iter().map(Flow::in_degree).max().unwrap_or(0)
    }

    /// Human-readable name of a flow for diagnostics.
    pub fn describe(&self, id: FlowId, program: &Program) -> String {
        let f = self.flow(id);
        let owner = match f.key.method {
            Some(m) => program.method(m).qualified_name(),
            None => "global".into(),
        };
        format!("{owner}:{} [{}]", f.kind.label(program), origin_text(&f.key.origin, f.key.method, program))
    }
}

/// Short text for an origin, using block labels where a method is known.
pub fn origin_text(origin: &Origin, method: Option<MethodId>, program: &Program) -> String {
    let label = |b: usize| match method {
        Some(m) => program
            .method(m)
            .blocks
            .get(b)
            .map(|bl| bl.label.clone())
            .unwrap_or_else(|| b.to_string()),
        None => b.to_string(),
    };
    match origin {
        Origin::PredOn => "pred_on".into(),
        Origin::Param { index } => format!("param {index}"),
        Origin::Stmt { block, index } => format!("{}#{index}", label(*block)),
        Origin::Phi { block, index } => format!("{} phi {index}", label(*block)),
        Origin::MergeVar { block, var } => format!("{} join {var}", label(*block)),
        Origin::PhiPred { block } => format!("{} pred", label(*block)),
        Origin::Return => "return".into(),
        Origin::Filter {
            block,
            branch,
            side,
        } => {
            let b = match branch {
                Branch::Then => "then",
                Branch::Else => "else",
            };
            let s = match side {
                Side::Unary => "",
                Side::Left => " left",
                Side::Right => " right",
            };
            format!("{} {b}{s}", label(*block))
        }
        Origin::FieldSink { ty, field } => format!("{}.{field}", program.type_name(*ty)),
    }
}

impl fmt::Display for FlowId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f{}", self.0)
    }
}
