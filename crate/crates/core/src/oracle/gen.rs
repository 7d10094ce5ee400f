//! Random well-typed programs.
//!
//! Programs get a small single-inheritance hierarchy rooted at `Object`,
//! fields with globally unique names, and method families (a declaring type
//! plus some overriding subtypes sharing one signature). Bodies are built
//! from straight-line code, diamonds and `any`-driven loops, tracking a
//! static kind per variable so every load, store and call is well typed.
//! Every allocation is followed by stores to all of its fields, so no field
//! is ever read before it is written.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ir::{
    Block, BlockBegin, BlockEnd, Cond, Expr, FieldDecl, FieldKind, MethodDef, MethodRef, Phi, Program, Stmt,
    TypeDecl, TypeId,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GenSize {
    pub max_types: usize,
    pub max_fields: usize,
    pub max_families: usize,
    /// Statement budget per method body.
    pub max_stmts: usize,
    pub max_depth: usize,
}

impl GenSize {
    /// One type, no calls: the root is a single block.
    pub fn minimal() -> Self {
        GenSize {
            max_types: 1,
            max_fields: 0,
            max_families: 0,
            max_stmts: 0,
            max_depth: 0,
        }
    }

    pub fn small() -> Self {
        GenSize {
            max_types: 5,
            max_fields: 2,
            max_families: 3,
            max_stmts: 14,
            max_depth: 2,
        }
    }
}

impl Default for GenSize {
    fn default() -> Self {
        GenSize {
            max_types: 8,
            max_fields: 2,
            max_families: 5,
            max_stmts: 24,
            max_depth: 3,
        }
    }
}

/// Declared kind of a field, parameter or result.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Decl {
    Int,
    Ref(TypeId),
}

/// Static kind of a variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Int,
    Ref { ty: TypeId, nonnull: bool },
    Null,
}

struct Family {
    name: String,
    owner: TypeId,
    params: Vec<Decl>,
    ret: Decl,
}

type Env = Vec<(String, Kind)>;

pub fn gen_program(seed: u64, size: GenSize) -> Program {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let n_types = rng.random_range(1..=size.max_types.max(1));
    let mut types: Vec<TypeDecl> = (0..n_types)
        .map(|i| TypeDecl {
            name: if i == 0 { "Object".into() } else { format!("T{i}") },
            supertype: None,
            fields: Vec::new(),
        })
        .collect();
    for i in 1..n_types {
        let parent = rng.random_range(0..i);
        types[i].supertype = Some(types[parent].name.clone());
    }
    let mut next_field = 0;
    for i in 0..n_types {
        for _ in 0..rng.random_range(0..=size.max_fields) {
            let kind = if rng.random_bool(0.5) {
                FieldKind::Int
            } else {
                FieldKind::Ref(types[rng.random_range(0..n_types)].name.clone())
            };
            types[i].fields.push(FieldDecl {
                name: format!("f{next_field}"),
                kind,
            });
            next_field += 1;
        }
    }
    let schema = Program::new(types.clone(), Vec::new(), Vec::new());
    let all: Vec<TypeId> = schema.type_ids().collect();

    let random_decl = |rng: &mut ChaCha8Rng| {
        if rng.random_bool(0.5) {
            Decl::Int
        } else {
            Decl::Ref(*all.choose(rng).unwrap())
        }
    };
    let n_families = rng.random_range(0..=size.max_families);
    let families: Vec<Family> = (0..n_families)
        .map(|k| Family {
            name: format!("m{k}"),
            owner: *all.choose(&mut rng).unwrap(),
            params: (0..rng.random_range(0..=2)).map(|_| random_decl(&mut rng)).collect(),
            ret: random_decl(&mut rng),
        })
        .collect();

    let mut methods = vec![Body::new(&mut rng, &schema, &families, None, size).method("Object", "main", None)];
    for (k, fam) in families.iter().enumerate() {
        let mut impls = vec![fam.owner];
        for &t in &all {
            if t != fam.owner && schema.is_subtype(t, fam.owner) && rng.random_bool(0.4) {
                impls.push(t);
            }
        }
        for t in impls {
            let owner = schema.type_name(t).to_string();
            let m = Body::new(&mut rng, &schema, &families, Some(k), size).method(&owner, &fam.name, Some(t));
            methods.push(m);
        }
    }

    Program::new(
        types,
        methods,
        vec![MethodRef {
            owner: "Object".into(),
            name: "main".into(),
        }],
    )
}

struct Body<'a> {
    rng: &'a mut ChaCha8Rng,
    schema: &'a Program,
    families: &'a [Family],
    family: Option<usize>,
    size: GenSize,
    blocks: Vec<Block>,
    cur: usize,
    vars: usize,
    budget: usize,
}

impl<'a> Body<'a> {
    fn new(
        rng: &'a mut ChaCha8Rng,
        schema: &'a Program,
        families: &'a [Family],
        family: Option<usize>,
        size: GenSize,
    ) -> Self {
        Body {
            rng,
            schema,
            families,
            family,
            size,
            blocks: Vec::new(),
            cur: 0,
            vars: 0,
            budget: size.max_stmts,
        }
    }

    /// Generates the body of `owner.name`. `this_ty` is `None` for the
    /// parameterless root.
    fn method(mut self, owner: &str, name: &str, this_ty: Option<TypeId>) -> MethodDef {
        let mut env: Env = Vec::new();
        let mut params = Vec::new();
        let mut ret = Decl::Int;
        if let (Some(t), Some(k)) = (this_ty, self.family) {
            params.push("this".to_string());
            env.push(("this".into(), Kind::Ref { ty: t, nonnull: true }));
            let fam = &self.families[k];
            for (i, d) in fam.params.iter().enumerate() {
                let p = format!("a{}", i + 1);
                params.push(p.clone());
                env.push((p, kind_of(*d)));
            }
            ret = fam.ret;
        }
        self.cur = self.new_block(BlockBegin::Start(params));
        self.seq(&mut env, 0);
        let r = self.value(&mut env, ret);
        self.end(BlockEnd::Return(r));
        MethodDef {
            owner: owner.into(),
            name: name.into(),
            blocks: self.blocks,
        }
    }

    fn new_block(&mut self, begin: BlockBegin) -> usize {
        self.blocks.push(Block {
            label: format!("b{}", self.blocks.len()),
            begin,
            stmts: Vec::new(),
            end: BlockEnd::Return(String::new()),
        });
        self.blocks.len() - 1
    }

    fn label(&self, b: usize) -> String {
        self.blocks[b].label.clone()
    }

    fn end(&mut self, end: BlockEnd) {
        self.blocks[self.cur].end = end;
    }

    fn fresh(&mut self) -> String {
        self.vars += 1;
        format!("v{}", self.vars)
    }

    fn emit(&mut self, s: Stmt) {
        self.budget = self.budget.saturating_sub(1);
        self.blocks[self.cur].stmts.push(s);
    }

    fn assign(&mut self, env: &mut Env, expr: Expr, kind: Kind) -> String {
        let v = self.fresh();
        self.emit(Stmt::Assign { dst: v.clone(), expr });
        env.push((v.clone(), kind));
        v
    }

    fn fits(&self, k: Kind, d: Decl) -> bool {
        match (k, d) {
            (Kind::Int, Decl::Int) => true,
            (Kind::Ref { ty, .. }, Decl::Ref(u)) => self.schema.is_subtype(ty, u),
            (Kind::Null, Decl::Ref(_)) => true,
            _ => false,
        }
    }

    fn small_int(&mut self) -> i64 {
        if self.rng.random_bool(0.9) {
            self.rng.random_range(-3..=3)
        } else {
            self.rng.random()
        }
    }

    /// A variable of declared kind `d`, reusing one when possible. Never
    /// allocates, so it is safe inside field initialisation.
    fn plain_value(&mut self, env: &mut Env, d: Decl) -> String {
        if self.rng.random_bool(0.7) {
            let c: Vec<String> = env
                .iter()
                .filter(|(_, k)| self.fits(*k, d))
                .map(|(v, _)| v.clone())
                .collect();
            if let Some(v) = c.choose(self.rng) {
                return v.clone();
            }
        }
        match d {
            Decl::Int => {
                let n = self.small_int();
                self.assign(env, Expr::Int(n), Kind::Int)
            }
            Decl::Ref(_) => self.assign(env, Expr::Null, Kind::Null),
        }
    }

    fn value(&mut self, env: &mut Env, d: Decl) -> String {
        if let Decl::Ref(u) = d {
            if self.rng.random_bool(0.3) {
                let subs: Vec<TypeId> = self.schema.type_ids().filter(|t| self.schema.is_subtype(*t, u)).collect();
                let t = *subs.choose(self.rng).unwrap();
                return self.alloc(env, t);
            }
        }
        self.plain_value(env, d)
    }

    fn alloc(&mut self, env: &mut Env, t: TypeId) -> String {
        let name = self.schema.type_name(t).to_string();
        let v = self.assign(env, Expr::New(name), Kind::Ref { ty: t, nonnull: true });
        let fields: Vec<(String, Decl)> = self
            .schema
            .all_fields(t)
            .into_iter()
            .map(|f| (f.name.clone(), decl_of(&f.kind, self.schema)))
            .collect();
        for (f, d) in fields {
            let src = self.plain_value(env, d);
            self.emit(Stmt::Store {
                recv: v.clone(),
                field: f,
                src,
            });
        }
        v
    }

    fn int(&mut self, env: &mut Env) -> String {
        self.plain_value(env, Decl::Int)
    }

    /// A non-null receiver, allocating one if none is in scope.
    fn receiver(&mut self, env: &mut Env) -> (String, TypeId) {
        if self.rng.random_bool(0.8) {
            let c: Vec<(String, TypeId)> = env
                .iter()
                .filter_map(|(v, k)| match k {
                    Kind::Ref { ty, nonnull: true } => Some((v.clone(), *ty)),
                    _ => None,
                })
                .collect();
            if let Some(r) = c.choose(self.rng) {
                return r.clone();
            }
        }
        let t = *self.schema.type_ids().collect::<Vec<_>>().choose(self.rng).unwrap();
        (self.alloc(env, t), t)
    }

    fn seq(&mut self, env: &mut Env, depth: usize) {
        while self.budget > 0 && self.rng.random_bool(0.85) {
            let roll: f64 = self.rng.random();
            if depth < self.size.max_depth && roll < 0.18 {
                self.diamond(env, depth);
            } else if depth < self.size.max_depth && roll < 0.28 {
                self.lp(env, depth);
            } else {
                self.simple(env);
            }
        }
    }

    fn simple(&mut self, env: &mut Env) {
        match self.rng.random_range(0..8) {
            0 => {
                let n = self.small_int();
                self.assign(env, Expr::Int(n), Kind::Int);
            }
            1 => {
                self.assign(env, Expr::Any, Kind::Int);
            }
            2 => {
                self.assign(env, Expr::Null, Kind::Null);
            }
            3 => {
                let t = *self.schema.type_ids().collect::<Vec<_>>().choose(self.rng).unwrap();
                self.alloc(env, t);
            }
            4 => self.load(env),
            5 => self.store(env),
            _ => self.invoke(env),
        }
    }

    fn load(&mut self, env: &mut Env) {
        let (r, t) = self.receiver(env);
        let fields: Vec<(String, Decl)> = self
            .schema
            .all_fields(t)
            .into_iter()
            .map(|f| (f.name.clone(), decl_of(&f.kind, self.schema)))
            .collect();
        let Some((field, d)) = fields.choose(self.rng).cloned() else {
            return;
        };
        let dst = self.fresh();
        self.emit(Stmt::Load {
            dst: dst.clone(),
            recv: r,
            field,
        });
        env.push((dst, kind_of(d)));
    }

    fn store(&mut self, env: &mut Env) {
        let (r, t) = self.receiver(env);
        let fields: Vec<(String, Decl)> = self
            .schema
            .all_fields(t)
            .into_iter()
            .map(|f| (f.name.clone(), decl_of(&f.kind, self.schema)))
            .collect();
        let Some((field, d)) = fields.choose(self.rng).cloned() else {
            return;
        };
        let src = self.value(env, d);
        self.emit(Stmt::Store { recv: r, field, src });
    }

    fn invoke(&mut self, env: &mut Env) {
        let (r, t) = self.receiver(env);
        let current = self.family;
        let callable: Vec<usize> = (0..self.families.len())
            .filter(|&k| self.schema.is_subtype(t, self.families[k].owner))
            .filter(|&k| match current {
                Some(c) if k <= c => self.rng.random_bool(0.1),
                _ => true,
            })
            .collect();
        let Some(&k) = callable.choose(self.rng) else {
            return;
        };
        let fam = &self.families[k];
        let (name, params, ret) = (fam.name.clone(), fam.params.clone(), fam.ret);
        let args = params.iter().map(|d| self.value(env, *d)).collect();
        let dst = self.fresh();
        self.emit(Stmt::Invoke {
            dst: dst.clone(),
            recv: r,
            method: name,
            args,
        });
        env.push((dst, kind_of(ret)));
    }

    /// A branch condition plus the environments of the two branches.
    fn cond(&mut self, env: &mut Env) -> (Cond, Env, Env) {
        let refs: Vec<(String, Kind)> = env
            .iter()
            .filter(|(_, k)| !matches!(k, Kind::Int))
            .cloned()
            .collect();
        let roll = self.rng.random_range(0..5);
        if roll >= 2 && !refs.is_empty() {
            let (v, k) = refs.choose(self.rng).unwrap().clone();
            match roll {
                2 => {
                    let n = self.assign(env, Expr::Null, Kind::Null);
                    let mut else_env = env.clone();
                    if let Kind::Ref { ty, .. } = k {
                        set_kind(&mut else_env, &v, Kind::Ref { ty, nonnull: true });
                    }
                    let cond = if self.rng.random_bool(0.5) {
                        Cond::Eq(v, n)
                    } else {
                        Cond::Eq(n, v)
                    };
                    return (cond, env.clone(), else_env);
                }
                3 => {
                    let t = *self.schema.type_ids().collect::<Vec<_>>().choose(self.rng).unwrap();
                    let mut then_env = env.clone();
                    let narrowed = match k {
                        Kind::Ref { ty, .. } if self.schema.is_subtype(t, ty) => Kind::Ref { ty: t, nonnull: true },
                        Kind::Ref { ty, .. } => Kind::Ref { ty, nonnull: true },
                        other => other,
                    };
                    set_kind(&mut then_env, &v, narrowed);
                    let name = self.schema.type_name(t).to_string();
                    return (Cond::InstanceOf(v, name), then_env, env.clone());
                }
                _ => {
                    let (w, _) = refs.choose(self.rng).unwrap().clone();
                    return (Cond::Eq(v, w), env.clone(), env.clone());
                }
            }
        }
        let a = self.int(env);
        let b = self.int(env);
        let cond = if roll == 0 { Cond::Lt(a, b) } else { Cond::Eq(a, b) };
        (cond, env.clone(), env.clone())
    }

    fn random_decl(&mut self) -> Decl {
        if self.rng.random_bool(0.5) {
            Decl::Int
        } else {
            let ts: Vec<TypeId> = self.schema.type_ids().collect();
            Decl::Ref(*ts.choose(self.rng).unwrap())
        }
    }

    fn diamond(&mut self, env: &mut Env, depth: usize) {
        let (cond, mut then_env, mut else_env) = self.cond(env);
        let then_b = self.new_block(BlockBegin::Label);
        let else_b = self.new_block(BlockBegin::Label);
        self.end(BlockEnd::If {
            cond,
            then_label: self.label(then_b),
            else_label: self.label(else_b),
        });

        let decls: Vec<Decl> = (0..self.rng.random_range(0..=2)).map(|_| self.random_decl()).collect();
        let mut arms = Vec::new();
        for (start, arm_env) in [(then_b, &mut then_env), (else_b, &mut else_env)] {
            self.cur = start;
            self.seq(arm_env, depth + 1);
            let args: Vec<String> = decls.iter().map(|d| self.value(arm_env, *d)).collect();
            let kinds: Vec<Kind> = args.iter().map(|a| kind_in(arm_env, a)).collect();
            arms.push((self.cur, args, kinds));
        }

        // φ arguments follow the block order of the jumps.
        arms.sort_by_key(|(b, _, _)| *b);
        let merge_label = format!("b{}", self.blocks.len());
        for (b, _, _) in &arms {
            self.cur = *b;
            self.end(BlockEnd::Jump(merge_label.clone()));
        }
        let mut phis = Vec::new();
        for (i, d) in decls.iter().enumerate() {
            let dst = self.fresh();
            let nonnull = arms
                .iter()
                .all(|(_, _, ks)| matches!(ks[i], Kind::Ref { nonnull: true, .. }));
            let kind = match d {
                Decl::Int => Kind::Int,
                Decl::Ref(u) => Kind::Ref { ty: *u, nonnull },
            };
            phis.push(Phi {
                dst: dst.clone(),
                args: arms.iter().map(|(_, a, _)| a[i].clone()).collect(),
            });
            env.push((dst, kind));
        }
        self.cur = self.new_block(BlockBegin::Merge(phis));
    }

    /// `jump head; head: merge [..]; c = any; z = 0; if c < z then exit else body`
    /// with the body jumping back to the head.
    fn lp(&mut self, env: &mut Env, depth: usize) {
        let decls: Vec<Decl> = (0..self.rng.random_range(0..=2)).map(|_| self.random_decl()).collect();
        let inits: Vec<String> = decls.iter().map(|d| self.plain_value(env, *d)).collect();
        let head_label = format!("b{}", self.blocks.len());
        self.end(BlockEnd::Jump(head_label));
        let head = self.new_block(BlockBegin::Merge(Vec::new()));
        let mut dsts = Vec::new();
        for d in &decls {
            let dst = self.fresh();
            env.push((dst.clone(), kind_of(*d)));
            dsts.push(dst);
        }
        self.cur = head;
        let c = self.assign(env, Expr::Any, Kind::Int);
        let z = self.assign(env, Expr::Int(0), Kind::Int);
        let exit = self.new_block(BlockBegin::Label);
        let body = self.new_block(BlockBegin::Label);
        self.end(BlockEnd::If {
            cond: Cond::Lt(c, z),
            then_label: self.label(exit),
            else_label: self.label(body),
        });

        self.cur = body;
        let mut body_env = env.clone();
        self.seq(&mut body_env, depth + 1);
        let backs: Vec<String> = decls.iter().map(|d| self.value(&mut body_env, *d)).collect();
        self.end(BlockEnd::Jump(self.label(head)));

        let phis = dsts
            .into_iter()
            .zip(inits.into_iter().zip(backs))
            .map(|(dst, (i, b))| Phi { dst, args: vec![i, b] })
            .collect();
        self.blocks[head].begin = BlockBegin::Merge(phis);
        self.cur = exit;
    }
}

fn decl_of(k: &FieldKind, schema: &Program) -> Decl {
    match k {
        FieldKind::Int => Decl::Int,
        FieldKind::Ref(t) => Decl::Ref(schema.type_id(t).expect("generated field types exist")),
    }
}

fn kind_of(d: Decl) -> Kind {
    match d {
        Decl::Int => Kind::Int,
        Decl::Ref(ty) => Kind::Ref { ty, nonnull: false },
    }
}

fn kind_in(env: &Env, v: &str) -> Kind {
    env.iter().rev().find(|(n, _)| n == v).map(|(_, k)| *k).expect("variable in scope")
}

fn set_kind(env: &mut Env, v: &str, k: Kind) {
    if let Some(e) = env.iter_mut().rev().find(|(n, _)| n == v) {
        e.1 = k;
    }
}
