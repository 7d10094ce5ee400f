use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use super::{BlockBegin, BlockEnd, Cfg, Cond, Expr, FieldKind, MethodDef, Program, Stmt};

/// Structural rule a program can break.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    DuplicateType,
    UnknownSupertype,
    InheritanceCycle,
    SingleRootType,
    DuplicateField,
    UnknownFieldType,
    DuplicateMethod,
    UnknownOwner,
    InconsistentArity,
    SingleStart,
    SingleReturn,
    DuplicateLabel,
    UnknownLabel,
    JumpTarget,
    IfTarget,
    LabelPredecessor,
    PhiArity,
    UnreachableBlock,
    Redefinition,
    UndefinedVariable,
    NotDominated,
    UnknownType,
    InstanceofNull,
    UnknownField,
    UnknownMethod,
    InvokeArity,
    UnknownRoot,
}

impl Rule {
    pub fn as_str(self) -> &'static str {
        match self {
            Rule::DuplicateType => "duplicate-type",
            Rule::UnknownSupertype => "unknown-supertype",
            Rule::InheritanceCycle => "inheritance-cycle",
            Rule::SingleRootType => "single-root-type",
            Rule::DuplicateField => "duplicate-field",
            Rule::UnknownFieldType => "unknown-field-type",
            Rule::DuplicateMethod => "duplicate-method",
            Rule::UnknownOwner => "unknown-owner",
            Rule::InconsistentArity => "inconsistent-arity",
            Rule::SingleStart => "single-start",
            Rule::SingleReturn => "single-return",
            Rule::DuplicateLabel => "duplicate-label",
            Rule::UnknownLabel => "unknown-label",
            Rule::JumpTarget => "jump-target",
            Rule::IfTarget => "if-target",
            Rule::LabelPredecessor => "label-predecessor",
            Rule::PhiArity => "phi-arity",
            Rule::UnreachableBlock => "unreachable-block",
            Rule::Redefinition => "redefinition",
            Rule::UndefinedVariable => "undefined-variable",
            Rule::NotDominated => "not-dominated",
            Rule::UnknownType => "unknown-type",
            Rule::InstanceofNull => "instanceof-null",
            Rule::UnknownField => "unknown-field",
            Rule::UnknownMethod => "unknown-method",
            Rule::InvokeArity => "invoke-arity",
            Rule::UnknownRoot => "unknown-root",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where a violation was found.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Site {
    Type { index: usize },
    Method { index: usize },
    Block { method: usize, block: usize },
    Root { index: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub rule: Rule,
    pub site: Site,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.rule, self.detail)
    }
}

struct Sink<'a> {
    out: Vec<Violation>,
    method: usize,
    program: &'a Program,
}

impl Sink<'_> {
    fn ty(&mut self, rule: Rule, index: usize, detail: String) {
        self.out.push(Violation {
            rule,
            site: Site::Type { index },
            detail,
        });
    }

    fn at(&mut self, rule: Rule, block: Option<usize>, detail: impl Into<String>) {
        let method = self.method;
        let site = match block {
            Some(block) => Site::Block { method, block },
            None => Site::Method { index: method },
        };
        let m = &self.program.methods()[method];
        let detail = match block {
            Some(b) => format!("{}/{}: {}", m.qualified_name(), m.blocks[b].label, detail.into()),
            None => format!("{}: {}", m.qualified_name(), detail.into()),
        };
        self.out.push(Violation { rule, site, detail });
    }
}

/// Checks every structural invariant of `program`. Violations are data: an
/// empty list means the program is well formed.
pub fn validate(program: &Program) -> Vec<Violation> {
    let mut sink = Sink {
        out: Vec::new(),
        method: 0,
        program,
    };
    check_types(program, &mut sink);
    check_methods(program, &mut sink);
    for (index, r) in program.roots().iter().enumerate() {
        if program.method_by_ref(r).is_none() {
            sink.out.push(Violation {
                rule: Rule::UnknownRoot,
                site: Site::Root { index },
                detail: format!("root `{r}` names no method"),
            });
        }
    }
    sink.out
}

fn check_types(p: &Program, sink: &mut Sink<'_>) {
    let mut seen = HashSet::new();
    let mut roots = 0;
    for (i, t) in p.types().iter().enumerate() {
        if !seen.insert(t.name.as_str()) {
            sink.ty(Rule::DuplicateType, i, format!("type `{}` declared twice", t.name));
        }
        match &t.supertype {
            None => roots += 1,
            Some(s) if p.type_id(s).is_none() => sink.ty(
                Rule::UnknownSupertype,
                i,
                format!("`{}` extends undeclared `{s}`", t.name),
            ),
            Some(_) => {}
        }
        for f in &t.fields {
            if let FieldKind::Ref(ft) = &f.kind {
                if p.type_id(ft).is_none() {
                    sink.ty(
                        Rule::UnknownFieldType,
                        i,
                        format!("field `{}.{}` has undeclared type `{ft}`", t.name, f.name),
                    );
                }
            }
        }
    }
    if !p.types().is_empty() && roots != 1 {
        sink.ty(
            Rule::SingleRootType,
            0,
            format!("expected exactly one type without a supertype, found {roots}"),
        );
    }
    for id in p.type_ids() {
        let i = id.index();
        // A chain that loops back to its start marks a cycle member.
        let mut cur = p.supertype(id);
        let mut steps = 0;
        let mut cyclic = false;
        while let Some(c) = cur {
            if c == id {
                cyclic = true;
                break;
            }
            steps += 1;
            if steps > p.types().len() {
                break;
            }
            cur = p.supertype(c);
        }
        if cyclic {
            sink.ty(
                Rule::InheritanceCycle,
                i,
                format!("`{}` is its own supertype", p.types()[i].name),
            );
            continue;
        }
        let mut names = HashSet::new();
        for f in p.all_fields(id) {
            if !names.insert(f.name.as_str()) {
                sink.ty(
                    Rule::DuplicateField,
                    i,
                    format!("field `{}` repeats along the chain of `{}`", f.name, p.types()[i].name),
                );
            }
        }
    }
}

fn check_methods(p: &Program, sink: &mut Sink<'_>) {
    // First declaration of a name fixes its arity.
    let mut arity: HashMap<&str, usize> = HashMap::new();
    for m in p.methods() {
        arity.entry(m.name.as_str()).or_insert(m.params().len());
    }
    let mut seen = HashSet::new();
    for (i, m) in p.methods().iter().enumerate() {
        sink.method = i;
        if !seen.insert((m.owner.as_str(), m.name.as_str())) {
            sink.at(Rule::DuplicateMethod, None, "declared twice");
        }
        if p.type_id(&m.owner).is_none() {
            sink.at(Rule::UnknownOwner, None, format!("owner `{}` is not a type", m.owner));
        }
        let n = m.params().len();
        let k = arity[m.name.as_str()];
        if k != n {
            sink.at(
                Rule::InconsistentArity,
                None,
                format!("`{}` takes {n} parameters here but {k} elsewhere", m.name),
            );
        }
        check_body(p, m, &arity, sink);
    }
}

fn check_body(p: &Program, m: &MethodDef, arity: &HashMap<&str, usize>, sink: &mut Sink<'_>) {
    let starts = m
        .blocks
        .iter()
        .filter(|b| matches!(b.begin, BlockBegin::Start(_)))
        .count();
    if starts != 1 {
        sink.at(Rule::SingleStart, None, format!("{starts} start blocks"));
    }
    let returns = m
        .blocks
        .iter()
        .filter(|b| matches!(b.end, BlockEnd::Return(_)))
        .count();
    if returns != 1 {
        sink.at(Rule::SingleReturn, None, format!("{returns} return instructions"));
    }
    let mut labels = HashSet::new();
    for (bi, b) in m.blocks.iter().enumerate() {
        if !labels.insert(b.label.as_str()) {
            sink.at(Rule::DuplicateLabel, Some(bi), format!("label `{}` reused", b.label));
        }
    }

    let cfg = Cfg::new(m);
    for (bi, b) in m.blocks.iter().enumerate() {
        match &b.end {
            BlockEnd::Return(_) => {}
            BlockEnd::Jump(l) => match m.block_index(l) {
                None => sink.at(Rule::UnknownLabel, Some(bi), format!("jump to unknown `{l}`")),
                Some(t) => match m.blocks[t].begin {
                    BlockBegin::Merge(_) => {}
                    // Reported once, from the label's side.
                    BlockBegin::Label => {}
                    BlockBegin::Start(_) => sink.at(
                        Rule::JumpTarget,
                        Some(bi),
                        format!("jump to `{l}`, which is not a merge"),
                    ),
                },
            },
            BlockEnd::If {
                then_label,
                else_label,
                cond,
            } => {
                for l in [then_label, else_label] {
                    match m.block_index(l) {
                        None => sink.at(Rule::UnknownLabel, Some(bi), format!("branch to unknown `{l}`")),
                        Some(t) if !matches!(m.blocks[t].begin, BlockBegin::Label) => sink.at(
                            Rule::IfTarget,
                            Some(bi),
                            format!("branch target `{l}` does not begin with `label`"),
                        ),
                        Some(_) => {}
                    }
                }
                if let Cond::InstanceOf(_, t) = cond {
                    check_type_name(p, t, bi, sink);
                }
            }
        }
        match &b.begin {
            BlockBegin::Label => {
                let preds = &cfg.preds[bi];
                let ok = preds.len() == 1
                    && matches!(m.blocks[preds[0]].end, BlockEnd::If { .. });
                if !ok {
                    sink.at(
                        Rule::LabelPredecessor,
                        Some(bi),
                        format!("label `{}` needs exactly one predecessor ending in `if`", b.label),
                    );
                }
            }
            BlockBegin::Merge(phis) => {
                let jumps = cfg.preds[bi].len();
                for phi in phis {
                    if phi.args.len() != jumps {
                        sink.at(
                            Rule::PhiArity,
                            Some(bi),
                            format!(
                                "`{}` has {} arguments for {jumps} incoming jumps",
                                phi.dst,
                                phi.args.len()
                            ),
                        );
                    }
                }
            }
            BlockBegin::Start(_) => {}
        }
        for s in &b.stmts {
            match s {
                Stmt::Assign {
                    expr: Expr::New(t), ..
                } => check_type_name(p, t, bi, sink),
                Stmt::Load { field, .. } | Stmt::Store { field, .. } => {
                    let known = p
                        .types()
                        .iter()
                        .any(|t| t.fields.iter().any(|f| &f.name == field));
                    if !known {
                        sink.at(Rule::UnknownField, Some(bi), format!("no type declares `{field}`"));
                    }
                }
                Stmt::Invoke { method, args, .. } => match arity.get(method.as_str()).copied() {
                    None => sink.at(Rule::UnknownMethod, Some(bi), format!("no type declares `{method}`")),
                    Some(n) if n != args.len() + 1 => sink.at(
                        Rule::InvokeArity,
                        Some(bi),
                        format!("`{method}` takes {n} parameters, call passes {}", args.len() + 1),
                    ),
                    Some(_) => {}
                },
                _ => {}
            }
        }
        if !cfg.is_reachable(bi) {
            sink.at(
                Rule::UnreachableBlock,
                Some(bi),
                format!("block `{}` is unreachable from the entry", b.label),
            );
        }
    }
    check_ssa(m, &cfg, sink);
}

fn check_type_name(p: &Program, t: &str, block: usize, sink: &mut Sink<'_>) {
    if t == "null" {
        sink.at(Rule::InstanceofNull, Some(block), "`instanceof null` is not allowed");
    } else if p.type_id(t).is_none() {
        sink.at(Rule::UnknownType, Some(block), format!("unknown type `{t}`"));
    }
}

/// Definition point: block and position inside it. Position 0 holds params
/// and φs, statement `i` is at `i + 1`, the terminator at `len + 1`.
type Point = (usize, usize);

fn check_ssa<'m>(m: &'m MethodDef, cfg: &Cfg, sink: &mut Sink<'_>) {
    let mut defs: HashMap<&'m str, Point> = HashMap::new();
    for (bi, b) in m.blocks.iter().enumerate() {
        let mut here: Vec<(&'m str, Point)> = match &b.begin {
            BlockBegin::Start(ps) => ps.iter().map(|v| (v.as_str(), (bi, 0))).collect(),
            BlockBegin::Merge(phis) => phis.iter().map(|p| (p.dst.as_str(), (bi, 0))).collect(),
            BlockBegin::Label => Vec::new(),
        };
        for (si, s) in b.stmts.iter().enumerate() {
            if let Some(d) = s.def() {
                here.push((d, (bi, si + 1)));
            }
        }
        for (var, at) in here {
            if defs.insert(var, at).is_some() {
                sink.at(Rule::Redefinition, Some(bi), format!("`{var}` defined more than once"));
            }
        }
    }

    let check = |var: &str, at: Point, sink: &mut Sink<'_>| {
        let rule = match defs.get(var) {
            None => Some(Rule::UndefinedVariable),
            Some(&(db, dp)) => {
                let ok = if db == at.0 {
                    dp < at.1
                } else {
                    cfg.dominates(db, at.0)
                };
                (!ok).then_some(Rule::NotDominated)
            }
        };
        if let Some(rule) = rule {
            let what = match rule {
                Rule::UndefinedVariable => "is never defined",
                _ => "is used where its definition does not dominate",
            };
            sink.at(rule, Some(at.0), format!("`{var}` {what}"));
        }
    };

    for (bi, b) in m.blocks.iter().enumerate() {
        if !cfg.is_reachable(bi) {
            continue;
        }
        if let BlockBegin::Merge(phis) = &b.begin {
            for phi in phis {
                for (j, arg) in phi.args.iter().enumerate() {
                    if let Some(&pred) = cfg.preds[bi].get(j) {
                        check(arg, (pred, m.blocks[pred].stmts.len() + 1), sink);
                    }
                }
            }
        }
        for (si, s) in b.stmts.iter().enumerate() {
            for u in s.uses() {
                check(u, (bi, si + 1), sink);
            }
        }
        let end = b.stmts.len() + 1;
        let uses: Vec<&str> = match &b.end {
            BlockEnd::Return(v) => vec![v.as_str()],
            BlockEnd::Jump(_) => vec![],
            BlockEnd::If { cond, .. } => cond.uses(),
        };
        for u in uses {
            check(u, (bi, end), sink);
        }
    }
}
