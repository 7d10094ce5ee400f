use super::lexer::{lex, Tok};
use super::{is_keyword, ParseError, Pos};
use crate::ir::{
    Block, BlockBegin, BlockEnd, Cond, Expr, FieldDecl, FieldKind, MethodDef, MethodRef, Phi,
    Program, Stmt, TypeDecl,
};

/// Source positions of the declarations of a parsed program.
#[derive(Clone, Debug, Default)]
pub struct Spans {
    pub types: Vec<Pos>,
    pub methods: Vec<Pos>,
    pub blocks: Vec<Vec<Pos>>,
    pub roots: Vec<Pos>,
}

/// Parses without validating. Used directly by tests that need malformed
/// programs.
pub fn parse_unchecked(src: &str) -> Result<(Program, Spans), ParseError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, at: 0 };
    let mut types = Vec::new();
    let mut methods = Vec::new();
    let mut roots = Vec::new();
    let mut spans = Spans::default();
    loop {
        let (tok, pos) = p.peek();
        match tok {
            Tok::Eof => break,
            Tok::Ident(k) if k == "type" => {
                spans.types.push(pos);
                types.push(p.type_decl()?);
            }
            Tok::Ident(k) if k == "root" => {
                p.bump();
                spans.roots.push(pos);
                let owner = p.name("type name")?;
                p.expect(Tok::Dot)?;
                let name = p.name("method name")?;
                roots.push(MethodRef { owner, name });
            }
            Tok::Ident(k) if k == "method" => {
                spans.methods.push(pos);
                let (m, bs) = p.method()?;
                methods.push(m);
                spans.blocks.push(bs);
            }
            other => {
                return Err(ParseError::new(
                    pos,
                    format!("expected `type`, `root` or `method`, found {}", other.describe()),
                ))
            }
        }
    }
    Ok((Program::new(types, methods, roots), spans))
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> (Tok, Pos) {
        self.toks[self.at].clone()
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.at + k).min(self.toks.len() - 1)].0
    }

    fn bump(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(&self.toks[self.at].0, Tok::Ident(s) if s == kw)
    }

    fn unexpected<T>(&self, wanted: &str) -> Result<T, ParseError> {
        let (tok, pos) = self.peek();
        Err(ParseError::new(
            pos,
            format!("expected {wanted}, found {}", tok.describe()),
        ))
    }

    fn expect(&mut self, want: Tok) -> Result<Pos, ParseError> {
        if self.peek().0 == want {
            Ok(self.bump().1)
        } else {
            self.unexpected(&want.describe())
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<Pos, ParseError> {
        if self.is_kw(kw) {
            Ok(self.bump().1)
        } else {
            self.unexpected(&format!("`{kw}`"))
        }
    }

    fn name(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek().0 {
            Tok::Ident(s) if !is_keyword(&s) => {
                self.bump();
                Ok(s)
            }
            _ => self.unexpected(what),
        }
    }

    fn names_in_parens(&mut self, what: &str) -> Result<Vec<String>, ParseError> {
        self.expect(Tok::LParen)?;
        let mut out = Vec::new();
        if self.peek().0 != Tok::RParen {
            loop {
                out.push(self.name(what)?);
                if self.peek().0 == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        Ok(out)
    }

    fn type_decl(&mut self) -> Result<TypeDecl, ParseError> {
        self.keyword("type")?;
        let name = self.name("type name")?;
        let supertype = if self.is_kw("extends") {
            self.bump();
            Some(self.name("supertype name")?)
        } else {
            None
        };
        self.expect(Tok::LBrace)?;
        let mut fields = Vec::new();
        while self.is_kw("field") {
            self.bump();
            let fname = self.name("field name")?;
            self.expect(Tok::Colon)?;
            let kind = if self.is_kw("int") {
                self.bump();
                FieldKind::Int
            } else {
                FieldKind::Ref(self.name("`int` or a type name")?)
            };
            fields.push(FieldDecl { name: fname, kind });
        }
        self.expect(Tok::RBrace)?;
        Ok(TypeDecl {
            name,
            supertype,
            fields,
        })
    }

    fn method(&mut self) -> Result<(MethodDef, Vec<Pos>), ParseError> {
        self.keyword("method")?;
        let owner = self.name("type name")?;
        self.expect(Tok::Dot)?;
        let name = self.name("method name")?;
        let header = self.names_in_parens("parameter name")?;
        self.expect(Tok::LBrace)?;
        let mut blocks = Vec::new();
        let mut spans = Vec::new();
        while self.peek().0 != Tok::RBrace {
            let (pos, block) = self.block()?;
            if let BlockBegin::Start(ps) = &block.begin {
                if *ps != header {
                    return Err(ParseError::new(
                        pos,
                        format!(
                            "start parameters ({}) differ from the method header ({})",
                            ps.join(", "),
                            header.join(", ")
                        ),
                    ));
                }
            }
            spans.push(pos);
            blocks.push(block);
        }
        if blocks.is_empty() {
            return self.unexpected("a block");
        }
        self.expect(Tok::RBrace)?;
        Ok((
            MethodDef {
                owner,
                name,
                blocks,
            },
            spans,
        ))
    }

    fn block(&mut self) -> Result<(Pos, Block), ParseError> {
        let pos = self.peek().1;
        let label = self.name("block label")?;
        self.expect(Tok::Colon)?;
        let begin = if self.is_kw("start") {
            self.bump();
            BlockBegin::Start(self.names_in_parens("parameter name")?)
        } else if self.is_kw("merge") {
            self.bump();
            let mut phis = Vec::new();
            if self.peek().0 == Tok::LBracket {
                self.bump();
                if self.peek().0 != Tok::RBracket {
                    loop {
                        let dst = self.name("φ target")?;
                        self.expect(Tok::Assign)?;
                        self.keyword("phi")?;
                        let args = self.names_in_parens("φ argument")?;
                        phis.push(Phi { dst, args });
                        if self.peek().0 == Tok::Comma {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                }
                self.expect(Tok::RBracket)?;
            }
            BlockBegin::Merge(phis)
        } else if self.is_kw("label") {
            self.bump();
            BlockBegin::Label
        } else {
            return self.unexpected("`start`, `merge` or `label`");
        };

        let mut stmts = Vec::new();
        let end = loop {
            if self.is_kw("return") {
                self.bump();
                break BlockEnd::Return(self.name("variable")?);
            }
            if self.is_kw("jump") {
                self.bump();
                break BlockEnd::Jump(self.name("merge label")?);
            }
            if self.is_kw("if") {
                self.bump();
                let cond = self.cond()?;
                self.keyword("then")?;
                let then_label = self.name("branch label")?;
                self.keyword("else")?;
                let else_label = self.name("branch label")?;
                break BlockEnd::If {
                    cond,
                    then_label,
                    else_label,
                };
            }
            stmts.push(self.stmt()?);
        };
        Ok((
            pos,
            Block {
                label,
                begin,
                stmts,
                end,
            },
        ))
    }

    fn stmt(&mut self) -> Result<Stmt, ParseError> {
        let first = self.name("a statement, `return`, `jump` or `if`")?;
        if self.peek().0 == Tok::Dot {
            self.bump();
            let field = self.name("field name")?;
            self.expect(Tok::Assign)?;
            let src = self.name("variable")?;
            return Ok(Stmt::Store {
                recv: first,
                field,
                src,
            });
        }
        self.expect(Tok::Assign)?;
        let dst = first;
        let (tok, _) = self.peek();
        let expr = match tok {
            Tok::Int(n) => {
                self.bump();
                Expr::Int(n)
            }
            Tok::Ident(k) if k == "any" => {
                self.bump();
                Expr::Any
            }
            Tok::Ident(k) if k == "null" => {
                self.bump();
                Expr::Null
            }
            Tok::Ident(k) if k == "new" => {
                self.bump();
                Expr::New(self.name("type name")?)
            }
            Tok::Ident(k) if !is_keyword(&k) => {
                self.bump();
                let recv = k;
                self.expect(Tok::Dot)?;
                let member = self.name("field or method name")?;
                if self.peek().0 == Tok::LParen {
                    let args = self.names_in_parens("argument")?;
                    return Ok(Stmt::Invoke {
                        dst,
                        recv,
                        method: member,
                        args,
                    });
                }
                return Ok(Stmt::Load {
                    dst,
                    recv,
                    field: member,
                });
            }
            _ => return self.unexpected("an integer, `any`, `new`, `null` or a member access"),
        };
        Ok(Stmt::Assign { dst, expr })
    }

    fn cond(&mut self) -> Result<Cond, ParseError> {
        let left = self.name("condition operand")?;
        match self.peek().0 {
            Tok::EqEq => {
                self.bump();
                Ok(Cond::Eq(left, self.name("condition operand")?))
            }
            Tok::Lt => {
                self.bump();
                Ok(Cond::Lt(left, self.name("condition operand")?))
            }
            Tok::Ident(k) if k == "instanceof" => {
                self.bump();
                // `null` is kept so validation can reject it with a rule id.
                if self.is_kw("null") && matches!(self.peek_at(1), Tok::Ident(s) if s == "then") {
                    self.bump();
                    return Ok(Cond::InstanceOf(left, "null".into()));
                }
                Ok(Cond::InstanceOf(left, self.name("type name")?))
            }
            _ => self.unexpected("`==`, `<` or `instanceof`"),
        }
    }
}
