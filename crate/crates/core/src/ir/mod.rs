//! Program model for the analysed object language.
//!
//! A program is a single-inheritance type hierarchy plus method bodies in SSA
//! block form. Every block begins with `start`, `merge` or `label` and ends
//! with `return`, `jump` or `if`. Conditions only occur in `if` terminators.
//!
//! Names are kept as written in the source; [`Program`] builds the lookup
//! tables (type ids, method ids, per-type method tables) on construction.

mod cfg;
mod validate;

pub use cfg::Cfg;
pub use validate::{validate, Rule, Site, Violation};

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index of a declared type, or the null sentinel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TypeId(pub u32);

impl TypeId {
    /// The type of the `null` reference. Sorts after every declared type.
    pub const NULL: TypeId = TypeId(u32::MAX);

    pub fn is_null(self) -> bool {
        self == TypeId::NULL
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MethodId(pub u32);

impl MethodId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Declared kind of a field.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum FieldKind {
    Int,
    Ref(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldDecl {
    pub name: String,
    pub kind: FieldKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeDecl {
    pub name: String,
    pub supertype: Option<String>,
    pub fields: Vec<FieldDecl>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Int(i64),
    Any,
    New(String),
    Null,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stmt {
    /// `dst = expr`
    Assign { dst: String, expr: Expr },
    /// `dst = recv.field`
    Load { dst: String, recv: String, field: String },
    /// `recv.field = src`
    Store { recv: String, field: String, src: String },
    /// `dst = recv.method(args...)`
    Invoke { dst: String, recv: String, method: String, args: Vec<String> },
}

impl Stmt {
    /// Variable defined by the statement, if any.
    pub fn def(&self) -> Option<&str> {
        match self {
            Stmt::Assign { dst, .. } | Stmt::Load { dst, .. } | Stmt::Invoke { dst, .. } => {
                Some(dst)
            }
            Stmt::Store { .. } => None,
        }
    }

    pub fn uses(&self) -> Vec<&str> {
        match self {
            Stmt::Assign { .. } => Vec::new(),
            Stmt::Load { recv, .. } => vec![recv.as_str()],
            Stmt::Store { recv, src, .. } => vec![recv.as_str(), src.as_str()],
            Stmt::Invoke { recv, args, .. } => std::iter::once(recv.as_str())
                .chain(args.iter().map(String::as_str))
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Phi {
    pub dst: String,
    pub args: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BlockBegin {
    Start(Vec<String>),
    Merge(Vec<Phi>),
    Label,
}

/// Source-level branch condition. Only the three base forms exist in programs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Cond {
    Eq(String, String),
    Lt(String, String),
    InstanceOf(String, String),
}

impl Cond {
    pub fn uses(&self) -> Vec<&str> {
        match self {
            Cond::Eq(a, b) | Cond::Lt(a, b) => vec![a.as_str(), b.as_str()],
            Cond::InstanceOf(v, _) => vec![v.as_str()],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BlockEnd {
    Return(String),
    Jump(String),
    If { cond: Cond, then_label: String, else_label: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub label: String,
    pub begin: BlockBegin,
    pub stmts: Vec<Stmt>,
    pub end: BlockEnd,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MethodDef {
    pub owner: String,
    pub name: String,
    pub blocks: Vec<Block>,
}

impl MethodDef {
    /// Index of the block beginning with `start`.
    pub fn entry(&self) -> Option<usize> {
        self.blocks
            .iter()
            .position(|b| matches!(b.begin, BlockBegin::Start(_)))
    }

    pub fn params(&self) -> &[String] {
        match self.entry().map(|e| &self.blocks[e].begin) {
            Some(BlockBegin::Start(ps)) => ps,
            _ => &[],
        }
    }

    pub fn block_index(&self, label: &str) -> Option<usize> {
        self.blocks.iter().position(|b| b.label == label)
    }

    pub fn qualified_name(&self) -> String {
        format!("{}.{}", self.owner, self.name)
    }

    /// The expression assigned to `var`, if it is defined by `var = expr`.
    pub fn assigned_expr(&self, var: &str) -> Option<&Expr> {
        self.blocks.iter().flat_map(|b| &b.stmts).find_map(|s| match s {
            Stmt::Assign { dst, expr } if dst == var => Some(expr),
            _ => None,
        })
    }
}

/// `OWNER.NAME` reference used for roots.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MethodRef {
    pub owner: String,
    pub name: String,
}

impl fmt::Display for MethodRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.owner, self.name)
    }
}

impl std::str::FromStr for MethodRef {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once('.') {
            Some((owner, name)) if !owner.is_empty() && !name.is_empty() => Ok(MethodRef {
                owner: owner.to_string(),
                name: name.to_string(),
            }),
            _ => Err(format!("expected OWNER.NAME, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("unknown type `{0}`")]
    UnknownType(String),
    #[error("type `{ty}` has no method `{method}` on its supertype chain")]
    Unresolved { ty: String, method: String },
    #[error("type `{ty}` has no field `{field}` on its supertype chain")]
    NoSuchField { ty: String, field: String },
    #[error("the null type has no members")]
    NullReceiver,
}

/// A whole program plus derived lookup tables.
#[derive(Clone, Debug)]
pub struct Program {
    types: Vec<TypeDecl>,
    methods: Vec<MethodDef>,
    roots: Vec<MethodRef>,
    type_index: HashMap<String, TypeId>,
    method_index: HashMap<(String, String), MethodId>,
    supers: Vec<Option<TypeId>>,
}

impl PartialEq for Program {
    fn eq(&self, other: &Self) -> bool {
        self.types == other.types && self.methods == other.methods && self.roots == other.roots
    }
}

impl Eq for Program {}

impl Program {
    pub fn new(types: Vec<TypeDecl>, methods: Vec<MethodDef>, roots: Vec<MethodRef>) -> Self {
        let mut type_index = HashMap::new();
        for (i, t) in types.iter().enumerate() {
            type_index.entry(t.name.clone()).or_insert(TypeId(i as u32));
        }
        let supers = types
            .iter()
            .map(|t| t.supertype.as_ref().and_then(|s| type_index.get(s).copied()))
            .collect();
        let mut method_index = HashMap::new();
        for (i, m) in methods.iter().enumerate() {
            method_index
                .entry((m.owner.clone(), m.name.clone()))
                .or_insert(MethodId(i as u32));
        }
        Program {
            types,
            methods,
            roots,
            type_index,
            method_index,
            supers,
        }
    }

    pub fn types(&self) -> &[TypeDecl] {
        &self.types
    }

    pub fn methods(&self) -> &[MethodDef] {
        &self.methods
    }

    pub fn roots(&self) -> &[MethodRef] {
        &self.roots
    }

    pub fn type_id(&self, name: &str) -> Option<TypeId> {
        self.type_index.get(name).copied()
    }

    pub fn type_ids(&self) -> impl Iterator<Item = TypeId> {
        (0..self.types.len() as u32).map(TypeId)
    }

    pub fn type_name(&self, ty: TypeId) -> &str {
        if ty.is_null() {
            "null"
        } else {
            &self.types[ty.index()].name
        }
    }

    pub fn method(&self, id: MethodId) -> &MethodDef {
        &self.methods[id.index()]
    }

    pub fn method_id(&self, owner: &str, name: &str) -> Option<MethodId> {
        self.method_index
            .get(&(owner.to_string(), name.to_string()))
            .copied()
    }

    pub fn method_by_ref(&self, r: &MethodRef) -> Option<MethodId> {
        self.method_id(&r.owner, &r.name)
    }

    pub fn root_ids(&self) -> Vec<MethodId> {
        self.roots
            .iter()
            .filter_map(|r| self.method_by_ref(r))
            .collect()
    }

    pub fn supertype(&self, ty: TypeId) -> Option<TypeId> {
        if ty.is_null() {
            None
        } else {
            self.supers[ty.index()]
        }
    }

    /// `ty` followed by its supertypes, nearest first. Stops on cycles.
    pub fn chain(&self, ty: TypeId) -> Vec<TypeId> {
        let mut out = Vec::new();
        let mut cur = Some(ty);
        while let Some(t) = cur {
            if t.is_null() || out.contains(&t) {
                break;
            }
            out.push(t);
            cur = self.supertype(t);
        }
        out
    }

    /// Reflexive subtype test. The null sentinel is a subtype of nothing.
    pub fn is_subtype(&self, sub: TypeId, sup: TypeId) -> bool {
        !sub.is_null() && self.chain(sub).contains(&sup)
    }

    /// Name-based [`Program::is_subtype`] that reports undeclared types.
    pub fn subtype_of(&self, sub: &str, sup: &str) -> Result<bool, StructureError> {
        let s = self
            .type_id(sub)
            .ok_or_else(|| StructureError::UnknownType(sub.to_string()))?;
        let t = self
            .type_id(sup)
            .ok_or_else(|| StructureError::UnknownType(sup.to_string()))?;
        Ok(self.is_subtype(s, t))
    }

    /// Virtual dispatch: the first declarer of `method` walking up from `receiver`.
    pub fn resolve(&self, receiver: TypeId, method: &str) -> Result<MethodId, StructureError> {
        if receiver.is_null() {
            return Err(StructureError::NullReceiver);
        }
        self.chain(receiver)
            .into_iter()
            .find_map(|t| self.method_id(self.type_name(t), method))
            .ok_or_else(|| StructureError::Unresolved {
                ty: self.type_name(receiver).to_string(),
                method: method.to_string(),
            })
    }

    /// Declaration of `field` visible from `ty`.
    pub fn field_decl(&self, ty: TypeId, field: &str) -> Result<&FieldDecl, StructureError> {
        if ty.is_null() {
            return Err(StructureError::NullReceiver);
        }
        self.chain(ty)
            .into_iter()
            .find_map(|t| self.types[t.index()].fields.iter().find(|f| f.name == field))
            .ok_or_else(|| StructureError::NoSuchField {
                ty: self.type_name(ty).to_string(),
                field: field.to_string(),
            })
    }

    /// Field location for `(ty, field)`. One location exists per concrete
    /// type, so `A.x` and `B.x` differ even when `B` inherits `x` from `A`.
    pub fn lookup(&self, ty: TypeId, field: &str) -> Result<FieldLoc, StructureError> {
        self.field_decl(ty, field)?;
        Ok(FieldLoc {
            ty,
            field: field.to_string(),
        })
    }

    /// All fields of `ty` including inherited ones, root-most first.
    pub fn all_fields(&self, ty: TypeId) -> Vec<&FieldDecl> {
        let mut chain = self.chain(ty);
        chain.reverse();
        chain
            .into_iter()
            .flat_map(|t| self.types[t.index()].fields.iter())
            .collect()
    }

    /// Method names implemented directly by `ty`.
    pub fn methods_of(&self, ty: TypeId) -> Vec<&str> {
        let name = self.type_name(ty);
        self.methods
            .iter()
            .filter(|m| m.owner == name)
            .map(|m| m.name.as_str())
            .collect()
    }
}

/// Identifies the field state shared by all objects of one concrete type.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FieldLoc {
    pub ty: TypeId,
    pub field: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hierarchy() -> Program {
        let t = |n: &str, s: Option<&str>, fields: &[&str]| TypeDecl {
            name: n.into(),
            supertype: s.map(Into::into),
            fields: fields
                .iter()
                .map(|f| FieldDecl {
                    name: (*f).into(),
                    kind: FieldKind::Int,
                })
                .collect(),
        };
        let m = |owner: &str, name: &str| MethodDef {
            owner: owner.into(),
            name: name.into(),
            blocks: vec![Block {
                label: "b0".into(),
                begin: BlockBegin::Start(vec!["this".into()]),
                stmts: vec![Stmt::Assign {
                    dst: "z".into(),
                    expr: Expr::Int(0),
                }],
                end: BlockEnd::Return("z".into()),
            }],
        };
        Program::new(
            vec![
                t("Object", None, &[]),
                t("A", Some("Object"), &["x"]),
                t("B", Some("A"), &[]),
                t("C", Some("Object"), &[]),
            ],
            vec![m("A", "m"), m("B", "m"), m("A", "k")],
            vec![],
        )
    }

    #[test]
    fn subtype_is_reflexive_and_directed() {
        let p = hierarchy();
        assert!(p.subtype_of("A", "A").unwrap());
        assert!(p.subtype_of("B", "A").unwrap());
        assert!(!p.subtype_of("A", "B").unwrap());
        assert!(p.subtype_of("B", "Object").unwrap());
        assert!(!p.is_subtype(TypeId::NULL, p.type_id("A").unwrap()));
        assert_eq!(
            p.subtype_of("Nope", "A"),
            Err(StructureError::UnknownType("Nope".into()))
        );
    }

    #[test]
    fn resolve_walks_to_first_declarer() {
        let p = hierarchy();
        let a = p.type_id("A").unwrap();
        let b = p.type_id("B").unwrap();
        let c = p.type_id("C").unwrap();
        assert_eq!(p.method(p.resolve(b, "m").unwrap()).qualified_name(), "B.m");
        assert_eq!(p.method(p.resolve(a, "m").unwrap()).qualified_name(), "A.m");
        assert_eq!(p.method(p.resolve(b, "k").unwrap()).qualified_name(), "A.k");
        assert!(matches!(
            p.resolve(c, "m"),
            Err(StructureError::Unresolved { .. })
        ));
        assert_eq!(p.resolve(TypeId::NULL, "m"), Err(StructureError::NullReceiver));
    }

    #[test]
    fn lookup_is_per_concrete_type() {
        let p = hierarchy();
        let a = p.type_id("A").unwrap();
        let b = p.type_id("B").unwrap();
        let lb = p.lookup(b, "x").unwrap();
        assert_eq!(lb.ty, b);
        assert_ne!(p.lookup(a, "x").unwrap(), lb);
        assert!(p.lookup(a, "y").is_err());
        assert!(p.lookup(p.type_id("C").unwrap(), "x").is_err());
    }
}
