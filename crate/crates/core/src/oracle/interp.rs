use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ConcreteValue;
use crate::ir::{BlockBegin, BlockEnd, Cfg, Cond, Expr, FieldKind, MethodId, Program, Stmt, TypeId};
use crate::pvpg::{Branch, FlowKey, Origin, Side};

/// Why a run stopped before the root returned.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "kebab-case")]
pub enum Stop {
    NullDereference { method: String, block: String },
    StepLimit,
    /// A call resolved to nothing; only possible in ill-typed programs.
    Stuck { method: String, detail: String },
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    pub executed: BTreeSet<MethodId>,
    /// Concrete values seen per program element, keyed like graph flows.
    pub observations: BTreeMap<FlowKey, BTreeSet<ConcreteValue>>,
    pub steps: u64,
    pub partial: Option<Stop>,
    pub returned: Option<ConcreteValue>,
    /// Loads of fields never written. The analysis does not model default
    /// field values, so generated programs avoid these.
    pub uninitialized_reads: u64,
}

struct Frame {
    method: MethodId,
    env: HashMap<String, ConcreteValue>,
    block: usize,
    stmt: usize,
    /// Variable in the caller receiving the result.
    ret_dst: Option<String>,
}

struct Object {
    fields: HashMap<String, ConcreteValue>,
}

struct Machine<'p> {
    program: &'p Program,
    rng: ChaCha8Rng,
    heap: Vec<Object>,
    cfgs: HashMap<MethodId, Cfg>,
    trace: Trace,
}

/// Runs `root` concretely. `any` draws from a seeded generator: half the
/// time a small value in -4..=4, otherwise any 64-bit integer. A root with
/// parameters receives a fresh object of its owner type as receiver and
/// null for the rest.
pub fn interpret(program: &Program, root: MethodId, seed: u64, step_limit: u64) -> Trace {
    let mut m = Machine {
        program,
        rng: ChaCha8Rng::seed_from_u64(seed),
        heap: Vec::new(),
        cfgs: HashMap::new(),
        trace: Trace::default(),
    };
    let params = program.method(root).params().len();
    let mut args = Vec::with_capacity(params);
    if params > 0 {
        args.push(match program.type_id(&program.method(root).owner) {
            Some(t) => m.alloc(t),
            None => ConcreteValue::Null,
        });
        args.resize(params, ConcreteValue::Null);
    }
    m.run(root, args, step_limit);
    m.trace
}

impl Machine<'_> {
    fn alloc(&mut self, ty: TypeId) -> ConcreteValue {
        self.heap.push(Object {
            fields: HashMap::new(),
        });
        ConcreteValue::Ref(self.heap.len() as u32 - 1, ty)
    }

    fn observe(&mut self, method: Option<MethodId>, origin: Origin, v: ConcreteValue) {
        self.trace
            .observations
            .entry(FlowKey { method, origin })
            .or_default()
            .insert(v);
    }

    fn any(&mut self) -> i64 {
        if self.rng.random_bool(0.5) {
            self.rng.random_range(-4..=4)
        } else {
            self.rng.random()
        }
    }

    fn enter(&mut self, method: MethodId, args: Vec<ConcreteValue>, ret_dst: Option<String>) -> Frame {
        self.trace.executed.insert(method);
        let def = self.program.method(method);
        self.cfgs.entry(method).or_insert_with(|| Cfg::new(def));
        let mut env = HashMap::new();
        for (i, (p, a)) in def.params().iter().zip(args).enumerate() {
            self.observe(Some(method), Origin::Param { index: i }, a);
            env.insert(p.clone(), a);
        }
        Frame {
            method,
            env,
            block: def.entry().expect("validated methods have an entry"),
            stmt: 0,
            ret_dst,
        }
    }

    fn run(&mut self, root: MethodId, args: Vec<ConcreteValue>, step_limit: u64) {
        let mut stack = vec![self.enter(root, args, None)];
        while let Some(frame) = stack.last_mut() {
            if self.trace.steps >= step_limit {
                self.trace.partial = Some(Stop::StepLimit);
                return;
            }
            self.trace.steps += 1;
            let program = self.program;
            let mid = frame.method;
            let def = program.method(mid);
            let block = &def.blocks[frame.block];
            let null_deref = |frame: &Frame| Stop::NullDereference {
                method: def.qualified_name(),
                block: def.blocks[frame.block].label.clone(),
            };

            if let Some(stmt) = block.stmts.get(frame.stmt) {
                let origin = Origin::Stmt {
                    block: frame.block,
                    index: frame.stmt,
                };
                frame.stmt += 1;
                match stmt {
                    Stmt::Assign { dst, expr } => {
                        let v = match expr {
                            Expr::Int(n) => ConcreteValue::Int(*n),
                            Expr::Any => ConcreteValue::Int(self.any()),
                            Expr::New(t) => {
                                let t = program.type_id(t).expect("validated type");
                                self.alloc(t)
                            }
                            Expr::Null => ConcreteValue::Null,
                        };
                        self.observe(Some(mid), origin, v);
                        let frame = stack.last_mut().unwrap();
                        frame.env.insert(dst.clone(), v);
                    }
                    Stmt::Load { dst, recv, field } => {
                        let ConcreteValue::Ref(obj, ty) = frame.env[recv] else {
                            self.trace.partial = Some(null_deref(frame));
                            return;
                        };
                        let v = match self.heap[obj as usize].fields.get(field) {
                            Some(v) => *v,
                            None => {
                                self.trace.uninitialized_reads += 1;
                                match program.field_decl(ty, field).map(|d| &d.kind) {
                                    Ok(FieldKind::Int) => ConcreteValue::Int(0),
                                    _ => ConcreteValue::Null,
                                }
                            }
                        };
                        frame.env.insert(dst.clone(), v);
                        self.observe(Some(mid), origin, v);
                    }
                    Stmt::Store { recv, field, src } => {
                        let ConcreteValue::Ref(obj, ty) = frame.env[recv] else {
                            self.trace.partial = Some(null_deref(frame));
                            return;
                        };
                        let v = frame.env[src];
                        self.heap[obj as usize].fields.insert(field.clone(), v);
                        self.observe(Some(mid), origin, v);
                        self.observe(
                            None,
                            Origin::FieldSink {
                                ty,
                                field: field.clone(),
                            },
                            v,
                        );
                    }
                    Stmt::Invoke {
                        dst,
                        recv,
                        method,
                        args,
                    } => {
                        let ConcreteValue::Ref(_, ty) = frame.env[recv] else {
                            self.trace.partial = Some(null_deref(frame));
                            return;
                        };
                        let callee = match program.resolve(ty, method) {
                            Ok(c) => c,
                            Err(e) => {
                                self.trace.partial = Some(Stop::Stuck {
                                    method: def.qualified_name(),
                                    detail: e.to_string(),
                                });
                                return;
                            }
                        };
                        let mut actual = vec![frame.env[recv]];
                        actual.extend(args.iter().map(|a| frame.env[a]));
                        // Rewind so the result is observed at this statement
                        // once the callee returns.
                        frame.stmt -= 1;
                        let callee_frame = self.enter(callee, actual, Some(dst.clone()));
                        stack.push(callee_frame);
                    }
                }
                continue;
            }

            match &block.end {
                BlockEnd::Return(v) => {
                    let value = frame.env[v];
                    self.observe(Some(mid), Origin::Return, value);
                    let done = stack.pop().expect("non-empty stack");
                    match stack.last_mut() {
                        None => {
                            self.trace.returned = Some(value);
                            return;
                        }
                        Some(caller) => {
                            let dst = done.ret_dst.expect("callee frames carry a destination");
                            let origin = Origin::Stmt {
                                block: caller.block,
                                index: caller.stmt,
                            };
                            caller.env.insert(dst, value);
                            caller.stmt += 1;
                            let cm = caller.method;
                            self.observe(Some(cm), origin, value);
                        }
                    }
                }
                BlockEnd::Jump(label) => {
                    let from = frame.block;
                    let to = def.block_index(label).expect("validated label");
                    let j = self.cfgs[&mid]
                        .jump_index(to, from)
                        .expect("jump is an edge of the control-flow graph");
                    if let BlockBegin::Merge(phis) = &def.blocks[to].begin {
                        // φs read their arguments simultaneously.
                        let vals: Vec<ConcreteValue> = phis.iter().map(|p| frame.env[&p.args[j]]).collect();
                        for (index, (p, v)) in phis.iter().zip(vals).enumerate() {
                            frame.env.insert(p.dst.clone(), v);
                            self.observe(Some(mid), Origin::Phi { block: to, index }, v);
                        }
                    }
                    let frame = stack.last_mut().unwrap();
                    frame.block = to;
                    frame.stmt = 0;
                }
                BlockEnd::If {
                    cond,
                    then_label,
                    else_label,
                } => {
                    let here = frame.block;
                    let (taken, observed): (bool, Vec<(Side, ConcreteValue)>) = match cond {
                        Cond::Eq(a, b) => {
                            let (x, y) = (frame.env[a], frame.env[b]);
                            (x.same(&y), vec![(Side::Left, x), (Side::Right, y)])
                        }
                        Cond::Lt(a, b) => {
                            let (x, y) = (frame.env[a], frame.env[b]);
                            let lt = matches!((x, y), (ConcreteValue::Int(p), ConcreteValue::Int(q)) if p < q);
                            (lt, vec![(Side::Left, x), (Side::Right, y)])
                        }
                        Cond::InstanceOf(v, t) => {
                            let x = frame.env[v];
                            let target = program.type_id(t).expect("validated type");
                            let ok = matches!(x, ConcreteValue::Ref(_, ty) if program.is_subtype(ty, target));
                            (ok, vec![(Side::Unary, x)])
                        }
                    };
                    let branch = if taken { Branch::Then } else { Branch::Else };
                    for (side, v) in observed {
                        self.observe(
                            Some(mid),
                            Origin::Filter {
                                block: here,
                                branch,
                                side,
                            },
                            v,
                        );
                    }
                    let label = if taken { then_label } else { else_label };
                    let frame = stack.last_mut().unwrap();
                    frame.block = def.block_index(label).expect("validated label");
                    frame.stmt = 0;
                }
            }
        }
    }
}
