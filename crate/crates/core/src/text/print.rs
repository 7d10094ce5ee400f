use std::fmt::Write;

use crate::ir::{BlockBegin, BlockEnd, Cond, Expr, FieldKind, Program, Stmt};

/// Canonical text of `p`. Printing is deterministic and re-parses to an
/// equal program.
pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    for t in p.types() {
        write!(out, "type {}", t.name).unwrap();
        if let Some(s) = &t.supertype {
            write!(out, " extends {s}").unwrap();
        }
        if t.fields.is_empty() {
            out.push_str(" {}\n");
        } else {
            out.push_str(" {\n");
            for f in &t.fields {
                let kind = match &f.kind {
                    FieldKind::Int => "int",
                    FieldKind::Ref(t) => t,
                };
                writeln!(out, "  field {} : {kind}", f.name).unwrap();
            }
            out.push_str("}\n");
        }
    }
    if !p.roots().is_empty() {
        out.push('\n');
        for r in p.roots() {
            writeln!(out, "root {r}").unwrap();
        }
    }
    for m in p.methods() {
        writeln!(
            out,
            "\nmethod {}.{}({}) {{",
            m.owner,
            m.name,
            m.params().join(", ")
        )
        .unwrap();
        for b in &m.blocks {
            let begin = match &b.begin {
                BlockBegin::Start(ps) => format!("start({})", ps.join(", ")),
                BlockBegin::Label => "label".into(),
                BlockBegin::Merge(phis) if phis.is_empty() => "merge".into(),
                BlockBegin::Merge(phis) => {
                    let list: Vec<String> = phis
                        .iter()
                        .map(|p| format!("{} = phi({})", p.dst, p.args.join(", ")))
                        .collect();
                    format!("merge [{}]", list.join(", "))
                }
            };
            writeln!(out, "  {}: {begin}", b.label).unwrap();
            for s in &b.stmts {
                let line = match s {
                    Stmt::Assign { dst, expr } => match expr {
                        Expr::Int(n) => format!("{dst} = {n}"),
                        Expr::Any => format!("{dst} = any"),
                        Expr::New(t) => format!("{dst} = new {t}"),
                        Expr::Null => format!("{dst} = null"),
                    },
                    Stmt::Load { dst, recv, field } => format!("{dst} = {recv}.{field}"),
                    Stmt::Store { recv, field, src } => format!("{recv}.{field} = {src}"),
                    Stmt::Invoke {
                        dst,
                        recv,
                        method,
                        args,
                    } => format!("{dst} = {recv}.{method}({})", args.join(", ")),
                };
                writeln!(out, "    {line}").unwrap();
            }
            let end = match &b.end {
                BlockEnd::Return(v) => format!("return {v}"),
                BlockEnd::Jump(l) => format!("jump {l}"),
                BlockEnd::If {
                    cond,
                    then_label,
                    else_label,
                } => {
                    let c = match cond {
                        Cond::Eq(a, b) => format!("{a} == {b}"),
                        Cond::Lt(a, b) => format!("{a} < {b}"),
                        Cond::InstanceOf(v, t) => format!("{v} instanceof {t}"),
                    };
                    format!("if {c} then {then_label} else {else_label}")
                }
            };
            writeln!(out, "    {end}").unwrap();
        }
        out.push_str("}\n");
    }
    out
}
