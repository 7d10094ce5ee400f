//! Worklist fixed-point engine over predicated value propagation graphs.
//!
//! A flow only does anything once it is enabled. Enabled flows pull the
//! join of their enabled use sources, apply their filter, and join the
//! result into their state. Growth re-schedules use and observe targets;
//! the first non-empty state enables predicate targets. Loads, stores and
//! invokes react to new receiver types by linking field sinks and callees.
//!
//! The baseline analysis runs on the same engine with every flow enabled on
//! creation and integer constants collapsed to ⊤.

mod metrics;

pub use metrics::Metrics;

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ir::{MethodId, MethodRef, Program, TypeId};
use crate::lattice::{compare_filter, type_filter, CondOp, ValueState};
use crate::pvpg::{build_method, Dispatch, FlowId, FlowKey, FlowKind, Graph};

pub use crate::pvpg::BuildError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    SkipFlow,
    Baseline,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::SkipFlow => "skipflow",
            Mode::Baseline => "baseline",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Order {
    #[default]
    Fifo,
    /// Pops a uniformly random pending flow, seeded.
    Random(u64),
}

/// How parameters of root methods are seeded.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RootSeeding {
    /// Roots receive nothing.
    #[default]
    None,
    /// The receiver gets every subtype of the owner; other parameters get
    /// every declared type plus null.
    Types,
    /// Every parameter is ⊤.
    Any,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Budget {
    /// 4 × |flows| × (1 + max in-degree), re-evaluated as the graph grows.
    #[default]
    Auto,
    Steps(u64),
    Unlimited,
}

/// Deliberate engine faults, used to check that the soundness harness
/// notices a broken analysis.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Fault {
    #[default]
    None,
    /// Predicate edges only fire from the always-on predicate.
    NoPredicateRule,
}

#[derive(Clone, Debug, Default)]
pub struct Config {
    pub mode: Mode,
    pub order: Order,
    pub seeding: RootSeeding,
    pub budget: Budget,
    /// Overrides the program's `root` directives when non-empty.
    pub roots: Vec<MethodRef>,
    pub fault: Fault,
}

impl Config {
    pub fn skipflow() -> Self {
        Config::default()
    }

    pub fn baseline() -> Self {
        Config {
            mode: Mode::Baseline,
            ..Config::default()
        }
    }
}

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("no root methods")]
    NoRoots,
    #[error("unknown root method `{0}`")]
    UnknownRoot(String),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error("ill-typed program at {at}: {detail}")]
    IllTyped { at: String, detail: String },
    #[error("step budget exhausted after {steps} steps (limit {limit})")]
    Budget {
        steps: u64,
        limit: u64,
        partial: Box<AnalysisResult>,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowCounters {
    pub growths: u32,
    pub enables: u32,
    pub steps: u32,
    pub links: u32,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    pub steps: u64,
    pub growth_events: u64,
    pub enable_events: u64,
    pub link_events: u64,
    pub flows: usize,
    pub max_in_degree: usize,
    pub max_growths_per_flow: u32,
    /// The automatic step budget for the final graph.
    pub step_bound: u64,
}

/// Fixed-point state of one run.
#[derive(Clone, Debug)]
pub struct AnalysisResult {
    pub mode: Mode,
    pub graph: Graph,
    pub vs: Vec<ValueState>,
    pub enabled: Vec<bool>,
    pub reachable: BTreeSet<MethodId>,
    /// Resolved callees per invoke flow.
    pub callees: BTreeMap<FlowId, BTreeSet<MethodId>>,
    pub counters: Vec<FlowCounters>,
    pub stats: Stats,
}

/// Order-independent view of a result: everything keyed by stable flow keys.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Snapshot {
    pub reachable: BTreeSet<MethodId>,
    pub flows: BTreeMap<FlowKey, (bool, ValueState)>,
}

impl AnalysisResult {
    pub fn is_reachable(&self, program: &Program, qualified: &str) -> bool {
        let Ok(r) = qualified.parse::<MethodRef>() else {
            return false;
        };
        program
            .method_by_ref(&r)
            .is_some_and(|m| self.reachable.contains(&m))
    }

    /// Reachable methods as `Owner.name`, sorted.
    pub fn reachable_names(&self, program: &Program) -> Vec<String> {
        let mut v: Vec<String> = self
            .reachable
            .iter()
            .map(|m| program.method(*m).qualified_name())
            .collect();
        v.sort();
        v
    }

    pub fn value(&self, f: FlowId) -> &ValueState {
        &self.vs[f.index()]
    }

    pub fn is_enabled(&self, f: FlowId) -> bool {
        self.enabled[f.index()]
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            reachable: self.reachable.clone(),
            flows: self
                .graph
                .flows()
                .map(|(id, f)| (f.key.clone(), (self.enabled[id.index()], self.vs[id.index()].clone())))
                .collect(),
        }
    }

    /// Flows of `method` (`Owner.name`) whose kind satisfies `pred`, in
    /// creation order. Empty when the method was never reached.
    pub fn find(
        &self,
        program: &Program,
        method: &str,
        pred: impl Fn(&FlowKind) -> bool,
    ) -> Vec<FlowId> {
        let Some(m) = method.parse::<MethodRef>().ok().and_then(|r| program.method_by_ref(&r)) else {
            return Vec::new();
        };
        self.graph
            .method(m)
            .map(|mg| {
                mg.flows
                    .iter()
                    .copied()
                    .filter(|f| pred(&self.graph.flow(*f).kind))
                    .collect()
            })
            .unwrap_or_default()
    }

    pub fn metrics(&self, program: &Program) -> Metrics {
        Metrics::compute(self, program)
    }
}

pub fn analyze(program: &Program, config: &Config) -> Result<AnalysisResult, AnalysisError> {
    let mut s = Solver::new(program, config.clone())?;
    s.run()?;
    Ok(s.result())
}

/// The flow-insensitive comparison analysis.
pub fn analyze_baseline(program: &Program, config: &Config) -> Result<AnalysisResult, AnalysisError> {
    let config = Config {
        mode: Mode::Baseline,
        ..config.clone()
    };
    analyze(program, &config)
}

enum Queue {
    Fifo(VecDeque<FlowId>),
    Random(Vec<FlowId>, Box<ChaCha8Rng>),
}

pub struct Solver<'p> {
    program: &'p Program,
    config: Config,
    graph: Graph,
    vs: Vec<ValueState>,
    enabled: Vec<bool>,
    in_queue: Vec<bool>,
    counters: Vec<FlowCounters>,
    queue: Queue,
    reachable: BTreeSet<MethodId>,
    callees: BTreeMap<FlowId, BTreeSet<MethodId>>,
    seen_receivers: HashMap<FlowId, BTreeSet<TypeId>>,
    root_seed: HashMap<FlowId, ValueState>,
    max_in_degree: usize,
    stats: Stats,
}

impl<'p> Solver<'p> {
    /// Builds the root methods and schedules their entry flows.
    pub fn new(program: &'p Program, config: Config) -> Result<Self, AnalysisError> {
        let queue = match config.order {
            Order::Fifo => Queue::Fifo(VecDeque::new()),
            Order::Random(seed) => Queue::Random(Vec::new(), Box::new(ChaCha8Rng::seed_from_u64(seed))),
        };
        let mut s = Solver {
            program,
            config,
            graph: Graph::new(),
            vs: Vec::new(),
            enabled: Vec::new(),
            in_queue: Vec::new(),
            counters: Vec::new(),
            queue,
            reachable: BTreeSet::new(),
            callees: BTreeMap::new(),
            seen_receivers: HashMap::new(),
            root_seed: HashMap::new(),
            max_in_degree: 0,
            stats: Stats::default(),
        };
        s.grow_tables();
        let on = s.graph.pred_on();
        s.enable(on);

        let roots = if s.config.roots.is_empty() {
            program.roots().to_vec()
        } else {
            s.config.roots.clone()
        };
        if roots.is_empty() {
            return Err(AnalysisError::NoRoots);
        }
        for r in roots {
            let m = program
                .method_by_ref(&r)
                .ok_or_else(|| AnalysisError::UnknownRoot(r.to_string()))?;
            s.reach(m)?;
            s.seed_root(m);
        }
        Ok(s)
    }

    fn seed_root(&mut self, m: MethodId) {
        let params = self.graph.method(m).expect("root was built").params.clone();
        let program = self.program;
        for (i, p) in params.into_iter().enumerate() {
            let seed = match self.config.seeding {
                RootSeeding::None => continue,
                RootSeeding::Any => ValueState::Any,
                RootSeeding::Types if i == 0 => {
                    let owner = program.type_id(&program.method(m).owner);
                    ValueState::types(
                        program
                            .type_ids()
                            .filter(|t| owner.is_some_and(|o| program.is_subtype(*t, o))),
                    )
                }
                RootSeeding::Types => {
                    ValueState::types(program.type_ids().chain(std::iter::once(TypeId::NULL)))
                }
            };
            let e = self.root_seed.entry(p).or_default();
            *e = e.join(&seed);
            self.schedule(p);
        }
    }

    fn grow_tables(&mut self) {
        let n = self.graph.len();
        self.vs.resize(n, ValueState::Empty);
        self.enabled.resize(n, false);
        self.in_queue.resize(n, false);
        self.counters.resize(n, FlowCounters::default());
    }

    fn baseline(&self) -> bool {
        self.config.mode == Mode::Baseline
    }

    fn schedule(&mut self, f: FlowId) {
        if self.in_queue[f.index()] {
            return;
        }
        self.in_queue[f.index()] = true;
        match &mut self.queue {
            Queue::Fifo(q) => q.push_back(f),
            Queue::Random(v, _) => v.push(f),
        }
    }

    fn pop(&mut self) -> Option<FlowId> {
        let f = match &mut self.queue {
            Queue::Fifo(q) => q.pop_front(),
            Queue::Random(v, rng) => {
                if v.is_empty() {
                    None
                } else {
                    let i = rng.random_range(0..v.len());
                    Some(v.swap_remove(i))
                }
            }
        }?;
        self.in_queue[f.index()] = false;
        Some(f)
    }

    fn enable(&mut self, f: FlowId) {
        if self.enabled[f.index()] {
            return;
        }
        self.enabled[f.index()] = true;
        self.counters[f.index()].enables += 1;
        self.stats.enable_events += 1;
        self.schedule(f);
    }

    fn fires(&self, src: FlowId) -> bool {
        if self.config.fault == Fault::NoPredicateRule && src != self.graph.pred_on() {
            return false;
        }
        self.enabled[src.index()] && !self.vs[src.index()].is_empty()
    }

    fn note_in_degree(&mut self, f: FlowId) {
        self.max_in_degree = self.max_in_degree.max(self.graph.flow(f).in_degree());
    }

    /// Marks `m` reachable, building its graph on first contact.
    fn reach(&mut self, m: MethodId) -> Result<(), AnalysisError> {
        if !self.reachable.insert(m) {
            return Ok(());
        }
        build_method(&mut self.graph, self.program, m)?;
        self.grow_tables();
        let flows = self.graph.method(m).expect("just built").flows.clone();
        for f in flows {
            self.note_in_degree(f);
            let on = self.baseline()
                || self.graph.flow(f).pred_in.iter().any(|&p| self.fires(p));
            if on {
                self.enable(f);
            }
        }
        Ok(())
    }

    fn ill_typed(&self, f: FlowId, detail: impl Into<String>) -> AnalysisError {
        AnalysisError::IllTyped {
            at: self.graph.describe(f, self.program),
            detail: detail.into(),
        }
    }

    fn limit(&self) -> Option<u64> {
        match self.config.budget {
            Budget::Auto => Some(self.auto_bound()),
            Budget::Steps(n) => Some(n),
            Budget::Unlimited => None,
        }
    }

    fn auto_bound(&self) -> u64 {
        4 * self.graph.len() as u64 * (1 + self.max_in_degree as u64)
    }

    /// Runs to quiescence.
    pub fn run(&mut self) -> Result<(), AnalysisError> {
        while let Some(f) = self.pop() {
            self.stats.steps += 1;
            self.counters[f.index()].steps += 1;
            if let Some(limit) = self.limit() {
                if self.stats.steps > limit {
                    return Err(AnalysisError::Budget {
                        steps: self.stats.steps,
                        limit,
                        partial: Box::new(self.result()),
                    });
                }
            }
            if !self.enabled[f.index()] {
                continue;
            }
            self.step(f)?;
        }
        Ok(())
    }

    fn step(&mut self, f: FlowId) -> Result<(), AnalysisError> {
        let new = self.compute(f)?;
        let i = f.index();
        if !new.leq(&self.vs[i]) {
            let was_empty = self.vs[i].is_empty();
            self.vs[i] = self.vs[i].join(&new);
            self.counters[i].growths += 1;
            self.stats.growth_events += 1;
            let flow = self.graph.flow(f);
            let targets: Vec<FlowId> = flow.use_out.iter().chain(&flow.obs_out).copied().collect();
            for t in targets {
                self.schedule(t);
            }
            if was_empty && self.fires(f) {
                let preds = self.graph.flow(f).pred_out.clone();
                for t in preds {
                    self.enable(t);
                }
            }
        }
        match self.graph.flow(f).kind {
            FlowKind::Invoke { .. } => self.link_invoke(f),
            FlowKind::Load { .. } | FlowKind::Store { .. } => self.link_field(f),
            _ => Ok(()),
        }
    }

    /// Join of the enabled use sources, with dispatch filtering on
    /// receiver-to-`this` links.
    fn input(&self, f: FlowId) -> ValueState {
        let mut acc = self.root_seed.get(&f).cloned().unwrap_or_default();
        for u in &self.graph.flow(f).use_in {
            if !self.enabled[u.src.index()] {
                continue;
            }
            let v = &self.vs[u.src.index()];
            match &u.dispatch {
                None => acc = acc.join(v),
                Some(d) => acc = acc.join(&self.dispatch_filter(v, d)),
            }
        }
        acc
    }

    fn dispatch_filter(&self, v: &ValueState, d: &Dispatch) -> ValueState {
        ValueState::types(
            self.receiver_types(v)
                .into_iter()
                .filter(|t| self.program.resolve(*t, &d.method).ok() == Some(d.callee)),
        )
    }

    /// Non-null receiver types; ⊤ stands for every declared type.
    fn receiver_types(&self, v: &ValueState) -> Vec<TypeId> {
        match v {
            ValueState::Types(s) => s.iter().copied().filter(|t| !t.is_null()).collect(),
            ValueState::Any => self.program.type_ids().collect(),
            _ => Vec::new(),
        }
    }

    fn compute(&self, f: FlowId) -> Result<ValueState, AnalysisError> {
        let flow = self.graph.flow(f);
        Ok(match &flow.kind {
            FlowKind::PredOn | FlowKind::PhiPred | FlowKind::AnyPrim => ValueState::Any,
            FlowKind::ConstInt(n) => {
                if self.baseline() {
                    ValueState::Any
                } else {
                    ValueState::Prim(*n)
                }
            }
            FlowKind::New(t) => ValueState::single(*t),
            FlowKind::NullConst => ValueState::null(),
            FlowKind::Param(_)
            | FlowKind::Phi
            | FlowKind::Return
            | FlowKind::Load { .. }
            | FlowKind::Store { .. }
            | FlowKind::Invoke { .. }
            | FlowKind::FieldSink(_) => self.input(f),
            FlowKind::Filter { op, other, .. } => {
                let vl = self.input(f);
                match (op, other) {
                    (CondOp::InstanceOf(t) | CondOp::NotInstanceOf(t), _) => {
                        let negated = matches!(op, CondOp::NotInstanceOf(_));
                        type_filter(&vl, negated, |s| self.program.is_subtype(s, *t))
                    }
                    (_, Some(o)) => {
                        let vr = &self.vs[o.index()];
                        let untracked = |v: &ValueState| matches!(v, ValueState::Prim(_) | ValueState::Any);
                        if self.baseline() && (untracked(&vl) || untracked(vr)) {
                            vl
                        } else {
                            compare_filter(*op, &vl, vr)
                                .map_err(|e| self.ill_typed(f, e.to_string()))?
                        }
                    }
                    (_, None) => return Err(self.ill_typed(f, "comparison filter without an operand")),
                }
            }
        })
    }

    fn new_receiver_types(&mut self, f: FlowId, recv: FlowId) -> Vec<TypeId> {
        let types = self.receiver_types(&self.vs[recv.index()]);
        let seen = self.seen_receivers.entry(f).or_default();
        types.into_iter().filter(|t| seen.insert(*t)).collect()
    }

    fn link_invoke(&mut self, f: FlowId) -> Result<(), AnalysisError> {
        let FlowKind::Invoke { recv, method, args } = self.graph.flow(f).kind.clone() else {
            unreachable!("caller checked the kind")
        };
        let lenient = matches!(self.vs[recv.index()], ValueState::Any);
        for t in self.new_receiver_types(f, recv) {
            let callee = match self.program.resolve(t, &method) {
                Ok(c) => c,
                Err(_) if lenient => continue,
                Err(e) => return Err(self.ill_typed(f, e.to_string())),
            };
            if !self.callees.entry(f).or_default().insert(callee) {
                continue;
            }
            self.reach(callee)?;
            let mg = self.graph.method(callee).expect("reached methods are built");
            let (params, ret) = (mg.params.clone(), mg.ret);
            if params.len() != args.len() + 1 {
                return Err(self.ill_typed(
                    f,
                    format!(
                        "{} takes {} parameters, call passes {}",
                        self.program.method(callee).qualified_name(),
                        params.len(),
                        args.len() + 1
                    ),
                ));
            }
            let dispatch = Dispatch {
                method: method.clone(),
                callee,
            };
            self.add_use(recv, params[0], Some(dispatch));
            for (a, p) in args.iter().zip(&params[1..]) {
                self.add_use(*a, *p, None);
            }
            self.add_use(ret, f, None);
            self.counters[f.index()].links += 1;
            self.stats.link_events += 1;
        }
        Ok(())
    }

    fn link_field(&mut self, f: FlowId) -> Result<(), AnalysisError> {
        let (recv, field, is_load) = match &self.graph.flow(f).kind {
            FlowKind::Load { recv, field } => (*recv, field.clone(), true),
            FlowKind::Store { recv, field } => (*recv, field.clone(), false),
            _ => unreachable!("caller checked the kind"),
        };
        let lenient = matches!(self.vs[recv.index()], ValueState::Any);
        for t in self.new_receiver_types(f, recv) {
            let loc = match self.program.lookup(t, &field) {
                Ok(l) => l,
                Err(_) if lenient => continue,
                Err(e) => return Err(self.ill_typed(f, e.to_string())),
            };
            let (sink, created) = self.graph.ensure_sink(&loc);
            if created {
                self.grow_tables();
                self.note_in_degree(sink);
                // Sinks hang off the always-on predicate.
                self.enable(sink);
            }
            if is_load {
                self.add_use(sink, f, None);
            } else {
                self.add_use(f, sink, None);
            }
            self.counters[f.index()].links += 1;
            self.stats.link_events += 1;
        }
        Ok(())
    }

    fn add_use(&mut self, src: FlowId, tgt: FlowId, dispatch: Option<Dispatch>) {
        if self.graph.add_use(src, tgt, dispatch) {
            self.note_in_degree(tgt);
            self.schedule(tgt);
        }
    }

    /// Re-applies every rule to the current state and runs to quiescence
    /// again. Returns the number of changes (growths, enables, links); zero
    /// at a true fixed point.
    pub fn reapply(&mut self) -> Result<u64, AnalysisError> {
        let before = self.stats.growth_events + self.stats.enable_events + self.stats.link_events;
        let ids: Vec<FlowId> = self.graph.flows().map(|(id, _)| id).collect();
        for f in ids {
            let on = self.baseline() || self.graph.flow(f).pred_in.iter().any(|&p| self.fires(p));
            if on {
                self.enable(f);
            }
            self.schedule(f);
        }
        self.run()?;
        Ok(self.stats.growth_events + self.stats.enable_events + self.stats.link_events - before)
    }

    pub fn result(&self) -> AnalysisResult {
        let mut stats = self.stats.clone();
        stats.flows = self.graph.len();
        stats.max_in_degree = self.max_in_degree;
        stats.max_growths_per_flow = self.counters.iter().map(|c| c.growths).max().unwrap_or(0);
        stats.step_bound = self.auto_bound();
        AnalysisResult {
            mode: self.config.mode,
            graph: self.graph.clone(),
            vs: self.vs.clone(),
            enabled: self.enabled.clone(),
            reachable: self.reachable.clone(),
            callees: self.callees.clone(),
            counters: self.counters.clone(),
            stats,
        }
    }
}
