use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use super::{Branch, BranchSite, CheckKind, FlowId, FlowKey, FlowKind, Graph, MethodGraph, Origin, Side};
use crate::ir::{BlockBegin, BlockEnd, Cfg, Cond, Expr, MethodId, Program, Stmt};
use crate::lattice::CondOp;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum BuildError {
    #[error("{method}: variable `{var}` has no definition on this path")]
    UndefinedVariable { method: String, var: String },
    #[error("{method}: unknown type `{ty}`")]
    UnknownType { method: String, ty: String },
    #[error("{method}: block `{label}` is malformed ({why})")]
    Malformed {
        method: String,
        label: String,
        why: &'static str,
    },
}

#[derive(Clone)]
struct BlockState {
    m: HashMap<String, FlowId>,
    pred: FlowId,
}

struct MergeInfo {
    phi_pred: FlowId,
    phis: Vec<FlowId>,
    /// Variable maps at the end of the predecessors processed so far.
    snapshots: Vec<HashMap<String, FlowId>>,
}

struct Builder<'a> {
    g: &'a mut Graph,
    program: &'a Program,
    mid: MethodId,
    name: String,
    cfg: Cfg,
    merges: HashMap<usize, MergeInfo>,
    defs: HashMap<String, FlowId>,
}

/// Builds the graph of one method into `g` in a single reverse-postorder
/// pass. Variables without an explicit φ keep the definition they had on the
/// forward edges into a merge; when filters gave them different definitions
/// on different edges, a join flow is created for them.
pub fn build_method(g: &mut Graph, program: &Program, mid: MethodId) -> Result<(), BuildError> {
    let method = program.method(mid);
    let first = g.len();
    let mut b = Builder {
        g,
        program,
        mid,
        name: method.qualified_name(),
        cfg: Cfg::new(method),
        merges: HashMap::new(),
        defs: HashMap::new(),
    };

    let pred_on = b.g.pred_on();
    let mut params = Vec::new();
    let mut entry_m = HashMap::new();
    for (i, p) in method.params().iter().enumerate() {
        let f = b.flow(FlowKind::Param(i), Origin::Param { index: i }, pred_on);
        params.push(f);
        entry_m.insert(p.clone(), f);
        b.defs.insert(p.clone(), f);
    }

    let mut states: Vec<Option<BlockState>> = vec![None; method.blocks.len()];
    let mut ret = None;
    let mut branches = Vec::new();
    let mut invokes = Vec::new();
    let rpo = b.cfg.rpo.clone();
    for bi in rpo {
        let block = &method.blocks[bi];
        let mut st = match &block.begin {
            BlockBegin::Start(_) => BlockState {
                m: entry_m.clone(),
                pred: pred_on,
            },
            BlockBegin::Label => states[bi].take().ok_or_else(|| b.malformed(bi, "label without a branch"))?,
            BlockBegin::Merge(phis) => b.enter_merge(bi, phis.iter().map(|p| p.dst.clone()).collect())?,
        };

        for (si, stmt) in block.stmts.iter().enumerate() {
            let origin = Origin::Stmt {
                block: bi,
                index: si,
            };
            match stmt {
                Stmt::Assign { dst, expr } => {
                    let kind = match expr {
                        Expr::Int(n) => FlowKind::ConstInt(*n),
                        Expr::Any => FlowKind::AnyPrim,
                        Expr::New(t) => FlowKind::New(b.type_id(t)?),
                        Expr::Null => FlowKind::NullConst,
                    };
                    let f = b.flow(kind, origin, st.pred);
                    b.define(&mut st, dst, f);
                }
                Stmt::Load { dst, recv, field } => {
                    let r = b.var(&st, recv)?;
                    let f = b.flow(
                        FlowKind::Load {
                            recv: r,
                            field: field.clone(),
                        },
                        origin,
                        st.pred,
                    );
                    b.g.add_obs(r, f);
                    b.define(&mut st, dst, f);
                }
                Stmt::Store { recv, field, src } => {
                    let r = b.var(&st, recv)?;
                    let v = b.var(&st, src)?;
                    let f = b.flow(
                        FlowKind::Store {
                            recv: r,
                            field: field.clone(),
                        },
                        origin,
                        st.pred,
                    );
                    b.g.add_use(v, f, None);
                    b.g.add_obs(r, f);
                }
                Stmt::Invoke {
                    dst,
                    recv,
                    method: name,
                    args,
                } => {
                    let r = b.var(&st, recv)?;
                    let args = args
                        .iter()
                        .map(|a| b.var(&st, a))
                        .collect::<Result<Vec<_>, _>>()?;
                    let f = b.flow(
                        FlowKind::Invoke {
                            recv: r,
                            method: name.clone(),
                            args,
                        },
                        origin,
                        st.pred,
                    );
                    b.g.add_obs(r, f);
                    b.define(&mut st, dst, f);
                    invokes.push(f);
                    // Code after a call only runs if the call returns.
                    st.pred = f;
                }
            }
        }

        match &block.end {
            BlockEnd::Return(v) => {
                let src = b.var(&st, v)?;
                let f = b.flow(FlowKind::Return, Origin::Return, st.pred);
                b.g.add_use(src, f, None);
                ret = Some(f);
            }
            BlockEnd::Jump(label) => {
                let target = method
                    .block_index(label)
                    .ok_or_else(|| b.malformed(bi, "unknown jump target"))?;
                b.wire_jump(&st, bi, target)?;
            }
            BlockEnd::If {
                cond,
                then_label,
                else_label,
            } => {
                let mut preds = [FlowId(0); 2];
                for (k, (branch, label)) in [(Branch::Then, then_label), (Branch::Else, else_label)]
                    .into_iter()
                    .enumerate()
                {
                    let target = method
                        .block_index(label)
                        .ok_or_else(|| b.malformed(bi, "unknown branch target"))?;
                    let ts = b.init_branch(&st, bi, cond, branch)?;
                    preds[k] = ts.pred;
                    states[target] = Some(ts);
                }
                branches.push(BranchSite {
                    block: bi,
                    kind: check_kind(cond, program, mid),
                    then_pred: preds[0],
                    else_pred: preds[1],
                });
            }
        }
    }

    let ret = ret.ok_or_else(|| BuildError::Malformed {
        method: b.name.clone(),
        label: String::new(),
        why: "no reachable return",
    })?;
    let last = b.g.len();
    b.g.insert_method(MethodGraph {
        id: mid,
        params,
        ret,
        flows: (first..last).map(|i| FlowId(i as u32)).collect(),
        branches,
        invokes,
    });
    Ok(())
}

fn check_kind(cond: &Cond, program: &Program, mid: MethodId) -> CheckKind {
    let method = program.method(mid);
    match cond {
        Cond::InstanceOf(..) => CheckKind::Type,
        Cond::Eq(a, b) => {
            let is_null = |v: &str| matches!(method.assigned_expr(v), Some(Expr::Null));
            if is_null(a) || is_null(b) {
                CheckKind::Null
            } else {
                CheckKind::Primitive
            }
        }
        Cond::Lt(..) => CheckKind::Primitive,
    }
}

impl Builder<'_> {
    fn flow(&mut self, kind: FlowKind, origin: Origin, pred: FlowId) -> FlowId {
        let f = self.g.add_flow(
            kind,
            FlowKey {
                method: Some(self.mid),
                origin,
            },
        );
        self.g.add_pred(pred, f);
        f
    }

    fn define(&mut self, st: &mut BlockState, var: &str, f: FlowId) {
        st.m.insert(var.to_string(), f);
        self.defs.insert(var.to_string(), f);
    }

    fn var(&self, st: &BlockState, v: &str) -> Result<FlowId, BuildError> {
        st.m.get(v).copied().ok_or_else(|| BuildError::UndefinedVariable {
            method: self.name.clone(),
            var: v.to_string(),
        })
    }

    fn type_id(&self, t: &str) -> Result<crate::ir::TypeId, BuildError> {
        self.program
            .type_id(t)
            .ok_or_else(|| BuildError::UnknownType {
                method: self.name.clone(),
                ty: t.to_string(),
            })
    }

    fn malformed(&self, block: usize, why: &'static str) -> BuildError {
        BuildError::Malformed {
            method: self.name.clone(),
            label: self.program.method(self.mid).blocks[block].label.clone(),
            why,
        }
    }

    /// The φ_pred and explicit φ flows of a merge, created on first contact.
    fn merge_info(&mut self, block: usize) -> Result<&mut MergeInfo, BuildError> {
        if !self.merges.contains_key(&block) {
            let method = self.program.method(self.mid);
            let BlockBegin::Merge(phis) = &method.blocks[block].begin else {
                return Err(self.malformed(block, "jump into a non-merge block"));
            };
            let phi_pred = self.g.add_flow(
                FlowKind::PhiPred,
                FlowKey {
                    method: Some(self.mid),
                    origin: Origin::PhiPred { block },
                },
            );
            let phis = (0..phis.len())
                .map(|index| self.flow(FlowKind::Phi, Origin::Phi { block, index }, phi_pred))
                .collect();
            self.merges.insert(
                block,
                MergeInfo {
                    phi_pred,
                    phis,
                    snapshots: Vec::new(),
                },
            );
        }
        Ok(self.merges.get_mut(&block).expect("inserted above"))
    }

    fn wire_jump(&mut self, st: &BlockState, from: usize, target: usize) -> Result<(), BuildError> {
        let method = self.program.method(self.mid);
        let j = self
            .cfg
            .jump_index(target, from)
            .ok_or_else(|| self.malformed(from, "jump missing from the control-flow graph"))?;
        let BlockBegin::Merge(phis) = &method.blocks[target].begin else {
            return Err(self.malformed(target, "jump into a non-merge block"));
        };
        let mut sources = Vec::with_capacity(phis.len());
        for phi in phis {
            let arg = phi
                .args
                .get(j)
                .ok_or_else(|| self.malformed(target, "φ arity differs from its jump count"))?;
            sources.push(self.var(st, arg)?);
        }
        let info = self.merge_info(target)?;
        let (phi_pred, phi_flows) = (info.phi_pred, info.phis.clone());
        info.snapshots.push(st.m.clone());
        self.g.add_pred(st.pred, phi_pred);
        for (src, phi) in sources.into_iter().zip(phi_flows) {
            self.g.add_use(src, phi, None);
        }
        Ok(())
    }

    fn enter_merge(&mut self, block: usize, phi_vars: Vec<String>) -> Result<BlockState, BuildError> {
        let pos = self.cfg.rpo_position(block);
        let irreducible = self.cfg.preds[block]
            .iter()
            .any(|&p| self.cfg.rpo_position(p) >= pos && !self.cfg.dominates(block, p));
        let info = self.merge_info(block)?;
        let phi_pred = info.phi_pred;
        let phis = info.phis.clone();
        let snapshots = std::mem::take(&mut info.snapshots);

        let mut m = HashMap::new();
        if let Some((first, rest)) = snapshots.split_first() {
            let common: BTreeSet<&String> = first
                .keys()
                .filter(|v| rest.iter().all(|s| s.contains_key(*v)))
                .collect();
            for var in common {
                let distinct: BTreeSet<FlowId> = snapshots.iter().map(|s| s[var]).collect();
                let f = if irreducible {
                    // Paths through a retreating edge may bypass the filters
                    // seen on the forward edges.
                    self.defs[var]
                } else if distinct.len() == 1 {
                    *distinct.iter().next().unwrap()
                } else {
                    let j = self.flow(
                        FlowKind::Phi,
                        Origin::MergeVar {
                            block,
                            var: var.clone(),
                        },
                        phi_pred,
                    );
                    for src in distinct {
                        self.g.add_use(src, j, None);
                    }
                    j
                };
                m.insert(var.clone(), f);
            }
        }
        for (var, f) in phi_vars.into_iter().zip(phis) {
            self.defs.insert(var.clone(), f);
            m.insert(var, f);
        }
        Ok(BlockState { m, pred: phi_pred })
    }

    fn init_branch(
        &mut self,
        st: &BlockState,
        block: usize,
        cond: &Cond,
        branch: Branch,
    ) -> Result<BlockState, BuildError> {
        let negate = |op: CondOp| if branch == Branch::Else { op.inv() } else { op };
        let mut out = st.clone();
        match cond {
            Cond::InstanceOf(v, t) => {
                let x = self.var(st, v)?;
                let op = negate(CondOp::InstanceOf(self.type_id(t)?));
                let f = self.flow(
                    FlowKind::Filter {
                        op,
                        side: Side::Unary,
                        other: None,
                    },
                    Origin::Filter {
                        block,
                        branch,
                        side: Side::Unary,
                    },
                    st.pred,
                );
                self.g.add_use(x, f, None);
                out.m.insert(v.clone(), f);
                out.pred = f;
            }
            Cond::Eq(l, r) | Cond::Lt(l, r) => {
                let base = if matches!(cond, Cond::Eq(..)) {
                    CondOp::Eq
                } else {
                    CondOp::Lt
                };
                let op = negate(base);
                let (xl, xr) = (self.var(st, l)?, self.var(st, r)?);
                let fl = self.flow(
                    FlowKind::Filter {
                        op,
                        side: Side::Left,
                        other: Some(xr),
                    },
                    Origin::Filter {
                        block,
                        branch,
                        side: Side::Left,
                    },
                    st.pred,
                );
                self.g.add_use(xl, fl, None);
                self.g.add_obs(xr, fl);
                let fr = self.flow(
                    FlowKind::Filter {
                        op: op.flip(),
                        side: Side::Right,
                        other: Some(xl),
                    },
                    Origin::Filter {
                        block,
                        branch,
                        side: Side::Right,
                    },
                    fl,
                );
                self.g.add_use(xr, fr, None);
                self.g.add_obs(xl, fr);
                out.m.insert(l.clone(), fl);
                out.m.insert(r.clone(), fr);
                out.pred = fr;
            }
        }
        Ok(out)
    }
}
