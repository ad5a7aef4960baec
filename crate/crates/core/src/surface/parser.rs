use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::lexer::{lex, Tok, Token};
use super::{Decl, ParseError, SourceProgram};
use crate::model::{BaseType, Effects, PrimOp, TableKind, TableSchema, Term, Time, Type};

/// Name bound by `M; N`. It cannot be written as a variable reference, so the
/// binding is never observable.
pub const SEQ_BINDER: &str = "_";

pub fn parse_program(src: &str) -> Result<SourceProgram, ParseError> {
    let tokens = lex(src)?;
    let tables = declared_tables(&tokens);
    let mut p = Parser {
        tokens,
        pos: 0,
        tables,
        bound: Vec::new(),
    };
    p.program()
}

/// Parses a single term. Identifiers naming one of `tables` (and not bound by
/// an enclosing binder) become table references.
pub fn parse_term(src: &str, tables: &BTreeSet<String>) -> Result<Term, ParseError> {
    let tokens = lex(src)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        tables: tables.clone(),
        bound: Vec::new(),
    };
    let t = p.expr()?;
    p.expect_eof()?;
    Ok(t)
}

pub fn parse_type(src: &str) -> Result<Type, ParseError> {
    let tokens = lex(src)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        tables: BTreeSet::new(),
        bound: Vec::new(),
    };
    let t = p.ty()?;
    p.expect_eof()?;
    Ok(t)
}

fn declared_tables(tokens: &[Token]) -> BTreeSet<String> {
    tokens
        .windows(2)
        .filter_map(|w| match (&w[0].tok, &w[1].tok) {
            (Tok::Kw("table"), Tok::Ident(name)) => Some(name.clone()),
            _ => None,
        })
        .collect()
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    tables: BTreeSet<String>,
    bound: Vec<String>,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.tokens[self.pos].tok.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        let tok = &self.tokens[self.pos];
        ParseError {
            line: tok.line,
            col: tok.col,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: tok.tok.describe(),
            message: None,
        }
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Kw(x) if *x == k)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, k: &str) -> bool {
        if self.is_kw(k) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.error(&[&format!("`{s}`")]))
        }
    }

    fn expect_kw(&mut self, k: &str) -> PResult<()> {
        if self.eat_kw(k) {
            Ok(())
        } else {
            Err(self.error(&[&format!("`{k}`")]))
        }
    }

    fn expect_eof(&mut self) -> PResult<()> {
        if matches!(self.peek(), Tok::Eof) {
            Ok(())
        } else {
            Err(self.error(&["end of input"]))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if s != SEQ_BINDER => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.error(&["identifier"])),
        }
    }

    /// Binder position: an identifier or the wildcard `_`.
    fn binder(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.error(&["identifier"])),
        }
    }

    /// Field label: identifiers and reserved words alike.
    fn label(&mut self) -> PResult<String> {
        match self.peek().label() {
            Some(l) => {
                let l = l.to_string();
                self.bump();
                Ok(l)
            }
            None => Err(self.error(&["field label"])),
        }
    }

    fn with_bound<T>(
        &mut self,
        name: &str,
        f: impl FnOnce(&mut Parser) -> PResult<T>,
    ) -> PResult<T> {
        self.bound.push(name.to_string());
        let r = f(self);
        self.bound.pop();
        r
    }

    // ---- programs ----

    fn program(&mut self) -> PResult<SourceProgram> {
        let mut decls = Vec::new();
        let mut seen_tables = BTreeSet::new();
        let mut seen_main = false;
        loop {
            match self.peek() {
                Tok::Eof => break,
                Tok::Kw("table") => {
                    let (line, col) = (self.tokens[self.pos].line, self.tokens[self.pos].col);
                    let (name, schema) = self.table_decl()?;
                    if !seen_tables.insert(name.clone()) {
                        return Err(ParseError::new(
                            line,
                            col,
                            &format!("table `{name}` declared twice"),
                        ));
                    }
                    decls.push(Decl::Table { name, schema });
                }
                Tok::Kw("def") => {
                    self.bump();
                    let (line, col) = (self.tokens[self.pos].line, self.tokens[self.pos].col);
                    let name = self.ident()?;
                    if self.tables.contains(&name) {
                        return Err(ParseError::new(
                            line,
                            col,
                            &format!("`{name}` is already a table"),
                        ));
                    }
                    self.expect_sym("=")?;
                    let term = self.expr()?;
                    self.eat_sym(";");
                    self.bound.push(name.clone());
                    decls.push(Decl::Def { name, term });
                }
                Tok::Kw("main") => {
                    let (line, col) = (self.tokens[self.pos].line, self.tokens[self.pos].col);
                    self.bump();
                    if seen_main {
                        return Err(ParseError::new(line, col, "more than one `main`"));
                    }
                    seen_main = true;
                    self.expect_sym("=")?;
                    let term = self.expr()?;
                    self.eat_sym(";");
                    decls.push(Decl::Main(term));
                }
                _ => return Err(self.error(&["declaration"])),
            }
        }
        if decls.is_empty() {
            return Err(self.error(&["declaration"]));
        }
        if !seen_main {
            return Err(self.error(&["`main`"]));
        }
        self.bound.clear();
        Ok(SourceProgram { decls })
    }

    fn table_decl(&mut self) -> PResult<(String, TableSchema)> {
        self.expect_kw("table")?;
        let name = self.ident()?;
        self.expect_sym("(")?;
        let mut columns = BTreeMap::new();
        if !self.is_sym(")") {
            loop {
                let (line, col) = (self.tokens[self.pos].line, self.tokens[self.pos].col);
                let label = self.label()?;
                self.expect_sym(":")?;
                let base = self.base_type()?;
                if columns.insert(label.clone(), base).is_some() {
                    return Err(ParseError::new(
                        line,
                        col,
                        &format!("column `{label}` declared twice"),
                    ));
                }
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym(")")?;
        let kind = if self.eat_kw("transaction") {
            TableKind::Transaction
        } else if self.eat_kw("valid") {
            TableKind::Valid
        } else {
            TableKind::Plain
        };
        let mut schema = TableSchema {
            columns,
            kind,
            period: ("start".into(), "end".into()),
        };
        if self.is_kw("period") {
            let (line, col) = (self.tokens[self.pos].line, self.tokens[self.pos].col);
            self.bump();
            if !kind.is_temporal() {
                return Err(ParseError::new(
                    line,
                    col,
                    "only temporal tables have period columns",
                ));
            }
            self.expect_sym("(")?;
            let s = self.label()?;
            self.expect_sym(",")?;
            let e = self.label()?;
            self.expect_sym(")")?;
            schema.period = (s, e);
        }
        if kind.is_temporal() {
            let (s, e) = &schema.period;
            if s == e || schema.columns.contains_key(s) || schema.columns.contains_key(e) {
                return Err(self.error(&["period columns distinct from the data columns"]));
            }
        }
        self.eat_sym(";");
        Ok((name, schema))
    }

    // ---- types ----

    fn base_type(&mut self) -> PResult<BaseType> {
        if let Tok::Ident(s) = self.peek() {
            if let Some(b) = BaseType::from_name(s) {
                self.bump();
                return Ok(b);
            }
        }
        Err(self.error(&["`int`", "`bool`", "`string`", "`time`"]))
    }

    fn ty(&mut self) -> PResult<Type> {
        let arg = self.ty_atom()?;
        if self.eat_sym("->") {
            let result = self.ty()?;
            return Ok(Type::function(arg, result, Effects::PURE));
        }
        if self.is_sym("-") && matches!(self.peek_at(1), Tok::Sym("{")) {
            self.bump();
            self.bump();
            let mut effects = Effects::PURE;
            if !self.is_sym("}") {
                loop {
                    match self.peek() {
                        Tok::Ident(s) if s == "read" => effects.read = true,
                        Tok::Ident(s) if s == "write" => effects.write = true,
                        _ => return Err(self.error(&["`read`", "`write`"])),
                    }
                    self.bump();
                    if !self.eat_sym(",") {
                        break;
                    }
                }
            }
            self.expect_sym("}")?;
            self.expect_sym("->")?;
            let result = self.ty()?;
            return Ok(Type::function(arg, result, effects));
        }
        Ok(arg)
    }

    fn ty_atom(&mut self) -> PResult<Type> {
        if self.eat_sym("(") {
            if self.eat_sym(")") {
                return Ok(Type::unit());
            }
            if self.peek().label().is_some() && matches!(self.peek_at(1), Tok::Sym(":")) {
                let mut fields = BTreeMap::new();
                loop {
                    let l = self.label()?;
                    self.expect_sym(":")?;
                    let t = self.ty()?;
                    if fields.insert(l, t).is_some() {
                        return Err(self.error(&["distinct labels"]));
                    }
                    if !self.eat_sym(",") {
                        break;
                    }
                }
                self.expect_sym(")")?;
                return Ok(Type::Record(fields));
            }
            let t = self.ty()?;
            self.expect_sym(")")?;
            return Ok(t);
        }
        let Tok::Ident(name) = self.peek().clone() else {
            return Err(self.error(&["type"]));
        };
        if let Some(b) = BaseType::from_name(&name) {
            self.bump();
            return Ok(Type::Base(b));
        }
        let wrap: fn(Type) -> Type = match name.as_str() {
            "bag" => Type::bag,
            "table" => |t| Type::table(t, TableKind::Plain),
            "ttable" => |t| Type::table(t, TableKind::Transaction),
            "vtable" => |t| Type::table(t, TableKind::Valid),
            "trow" => |t| Type::TransactionRow(Box::new(t)),
            "vrow" => |t| Type::ValidRow(Box::new(t)),
            _ => return Err(self.error(&["type"])),
        };
        self.bump();
        self.expect_sym("(")?;
        let inner = self.ty()?;
        self.expect_sym(")")?;
        Ok(wrap(inner))
    }

    // ---- terms ----

    /// Sequencing level: `M; N`. A trailing `;` before a declaration or the
    /// end of input terminates instead.
    fn expr(&mut self) -> PResult<Term> {
        let first = self.open()?;
        if self.is_sym(";") && self.starts_term(1) {
            self.bump();
            let rest = self.with_bound(SEQ_BINDER, |p| p.expr())?;
            return Ok(Term::let_in(SEQ_BINDER, first, rest));
        }
        Ok(first)
    }

    fn starts_term(&self, k: usize) -> bool {
        match self.peek_at(k) {
            Tok::Ident(_) | Tok::Int(_) | Tok::Str(_) | Tok::Time(_) => true,
            Tok::Kw(k) => !matches!(
                *k,
                "def"
                    | "main"
                    | "table"
                    | "in"
                    | "then"
                    | "else"
                    | "and"
                    | "set"
                    | "values"
                    | "between"
                    | "to"
                    | "from"
                    | "valid"
                    | "period"
                    | "transaction"
                    | "sequenced"
                    | "nonsequenced"
            ),
            Tok::Sym(s) => matches!(*s, "(" | "[|" | "-"),
            Tok::Eof => false,
        }
    }

    /// Right-open forms (binders, conditionals, modifications) or an operator expression.
    fn open(&mut self) -> PResult<Term> {
        match self.peek() {
            Tok::Kw("fun") => {
                self.bump();
                let (param, param_ty) = if self.eat_sym("(") {
                    let x = self.binder()?;
                    self.expect_sym(":")?;
                    let t = self.ty()?;
                    self.expect_sym(")")?;
                    (x, Some(t))
                } else {
                    (self.binder()?, None)
                };
                self.expect_sym("->")?;
                let body = self.with_bound(&param, |p| p.expr())?;
                Ok(Term::Lambda {
                    param,
                    param_ty,
                    body: Box::new(body),
                })
            }
            Tok::Kw("let") => {
                self.bump();
                let x = self.binder()?;
                self.expect_sym("=")?;
                let bound = self.expr()?;
                self.expect_kw("in")?;
                let body = self.with_bound(&x, |p| p.expr())?;
                Ok(Term::let_in(x, bound, body))
            }
            Tok::Kw("if") => {
                self.bump();
                let c = self.expr()?;
                self.expect_kw("then")?;
                let t = self.expr()?;
                self.expect_kw("else")?;
                let e = self.open()?;
                Ok(Term::if_(c, t, e))
            }
            Tok::Kw("where") => {
                self.bump();
                self.expect_sym("(")?;
                let c = self.expr()?;
                self.expect_sym(")")?;
                let body = self.open()?;
                Ok(Term::where_(c, body))
            }
            Tok::Kw("for") => {
                self.bump();
                self.expect_sym("(")?;
                let mut gens = Vec::new();
                loop {
                    let x = self.binder()?;
                    let is_get = if self.eat_sym("<-") {
                        false
                    } else if self.eat_sym("<t-") || self.eat_sym("<v-") {
                        true
                    } else {
                        return Err(self.error(&["`<-`", "`<t-`", "`<v-`"]));
                    };
                    // earlier generators scope over later sources
                    let src = self.expr()?;
                    let src = if is_get { Term::get(src) } else { src };
                    self.bound.push(x.clone());
                    gens.push((x, src));
                    if !self.eat_sym(",") {
                        break;
                    }
                }
                let close = self.expect_sym(")");
                let body = close.and_then(|_| self.open());
                for _ in &gens {
                    self.bound.pop();
                }
                let mut body = body?;
                for (x, src) in gens.into_iter().rev() {
                    body = Term::for_(x, src, body);
                }
                Ok(body)
            }
            Tok::Kw("insert") => {
                self.bump();
                let seq = self.eat_kw("sequenced");
                let table = self.unary()?;
                self.expect_kw("values")?;
                let rows = self.open()?;
                Ok(if seq {
                    Term::seq_insert(table, rows)
                } else {
                    Term::insert(table, rows)
                })
            }
            Tok::Kw("update") => {
                self.bump();
                if self.eat_kw("sequenced") {
                    let (x, table) = self.generator()?;
                    self.expect_kw("between")?;
                    let from = self.ops()?;
                    self.expect_kw("and")?;
                    let to = self.ops()?;
                    let (pred, set) = self.with_bound(&x, |p| {
                        p.expect_kw("where")?;
                        let pred = p.ops()?;
                        p.expect_kw("set")?;
                        Ok((pred, p.assignments()?))
                    })?;
                    Ok(Term::seq_update(x, table, from, to, pred, set))
                } else if self.eat_kw("nonsequenced") {
                    let (x, table) = self.generator()?;
                    let (pred, set, vf, vt) = self.with_bound(&x, |p| {
                        p.expect_kw("where")?;
                        let pred = p.ops()?;
                        p.expect_kw("set")?;
                        let set = p.assignments()?;
                        p.expect_kw("valid")?;
                        p.expect_kw("from")?;
                        let vf = p.ops()?;
                        p.expect_kw("to")?;
                        let vt = p.open()?;
                        Ok((pred, set, vf, vt))
                    })?;
                    Ok(Term::nonseq_update(x, table, pred, set, vf, vt))
                } else {
                    let (x, table) = self.generator()?;
                    let (pred, set) = self.with_bound(&x, |p| {
                        p.expect_kw("where")?;
                        let pred = p.ops()?;
                        p.expect_kw("set")?;
                        Ok((pred, p.assignments()?))
                    })?;
                    Ok(Term::update(x, table, pred, set))
                }
            }
            Tok::Kw("delete") => {
                self.bump();
                if self.eat_kw("sequenced") {
                    let (x, table) = self.generator()?;
                    self.expect_kw("between")?;
                    let from = self.ops()?;
                    self.expect_kw("and")?;
                    let to = self.ops()?;
                    let pred = self.with_bound(&x, |p| {
                        p.expect_kw("where")?;
                        p.open()
                    })?;
                    Ok(Term::seq_delete(x, table, from, to, pred))
                } else {
                    let nonseq = self.eat_kw("nonsequenced");
                    let (x, table) = self.generator()?;
                    let pred = self.with_bound(&x, |p| {
                        p.expect_kw("where")?;
                        p.open()
                    })?;
                    Ok(if nonseq {
                        Term::nonseq_delete(x, table, pred)
                    } else {
                        Term::delete(x, table, pred)
                    })
                }
            }
            _ => self.ops(),
        }
    }

    /// `(x <- M)` in modification syntax.
    fn generator(&mut self) -> PResult<(String, Term)> {
        self.expect_sym("(")?;
        let x = self.binder()?;
        self.expect_sym("<-")?;
        let table = self.expr()?;
        self.expect_sym(")")?;
        Ok((x, table))
    }

    fn assignments(&mut self) -> PResult<Vec<(String, Term)>> {
        self.expect_sym("(")?;
        let mut out: Vec<(String, Term)> = Vec::new();
        if !self.is_sym(")") {
            loop {
                let l = self.label()?;
                if out.iter().any(|(m, _)| *m == l) {
                    return Err(self.error(&["distinct labels"]));
                }
                self.expect_sym("=")?;
                out.push((l, self.expr()?));
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym(")")?;
        Ok(out)
    }

    /// Binary operators by precedence climbing; open forms are accepted as
    /// the last operand.
    fn ops(&mut self) -> PResult<Term> {
        self.binary(0)
    }

    fn binary(&mut self, min_level: u8) -> PResult<Term> {
        let mut lhs = self.operand()?;
        while let Some((op, level)) = self.binop() {
            if level < min_level {
                break;
            }
            self.bump();
            let rhs = if level == 2 {
                // comparisons do not chain
                let r = self.binary(level + 1)?;
                lhs = mk_binop(op, lhs, r);
                if let Some((_, 2)) = self.binop() {
                    return Err(self.error(&["parentheses around chained comparison"]));
                }
                continue;
            } else {
                self.binary(level + 1)?
            };
            lhs = mk_binop(op, lhs, rhs);
        }
        Ok(lhs)
    }

    /// `None` stands for bag union.
    fn binop(&self) -> Option<(Option<PrimOp>, u8)> {
        let Tok::Sym(s) = self.peek() else {
            return None;
        };
        Some(match *s {
            "||" => (Some(PrimOp::Or), 0),
            "&&" => (Some(PrimOp::And), 1),
            "==" => (Some(PrimOp::Eq), 2),
            "!=" => (Some(PrimOp::Neq), 2),
            "<" => (Some(PrimOp::Lt), 2),
            "<=" => (Some(PrimOp::Le), 2),
            ">" => (Some(PrimOp::Gt), 2),
            ">=" => (Some(PrimOp::Ge), 2),
            "++" => (None, 3),
            "+" => (Some(PrimOp::Add), 4),
            "-" => (Some(PrimOp::Sub), 4),
            "*" => (Some(PrimOp::Mul), 5),
            _ => return None,
        })
    }

    fn operand(&mut self) -> PResult<Term> {
        match self.peek() {
            Tok::Kw("fun" | "let" | "if" | "where" | "for" | "insert" | "update" | "delete") => {
                self.open()
            }
            _ => self.unary(),
        }
    }

    fn unary(&mut self) -> PResult<Term> {
        match self.peek() {
            Tok::Kw("get") => {
                self.bump();
                Ok(Term::get(self.unary()?))
            }
            Tok::Kw("data") => {
                self.bump();
                Ok(Term::data(self.unary()?))
            }
            Tok::Kw("start") => {
                self.bump();
                Ok(Term::start(self.unary()?))
            }
            Tok::Kw("end") => {
                self.bump();
                Ok(Term::end(self.unary()?))
            }
            Tok::Sym("-") => {
                self.bump();
                match self.bump() {
                    Tok::Int(n) => neg_int(n).ok_or_else(|| self.error(&["integer in range"])),
                    _ => {
                        self.pos -= 1;
                        Err(self.error(&["integer literal"]))
                    }
                }
            }
            _ => self.application(),
        }
    }

    fn application(&mut self) -> PResult<Term> {
        let mut f = self.postfix()?;
        while self.starts_atom() {
            let arg = self.postfix()?;
            f = Term::apply(f, arg);
        }
        Ok(f)
    }

    fn starts_atom(&self) -> bool {
        match self.peek() {
            Tok::Ident(s) => s != SEQ_BINDER,
            Tok::Int(_) | Tok::Str(_) | Tok::Time(_) => true,
            Tok::Kw(k) => matches!(
                *k,
                "true"
                    | "false"
                    | "now"
                    | "forever"
                    | "beginning"
                    | "query"
                    | "join"
                    | "row"
                    | "not"
                    | "greatest"
                    | "least"
                    | "check_period"
            ),
            Tok::Sym(s) => matches!(*s, "(" | "[|"),
            Tok::Eof => false,
        }
    }

    fn postfix(&mut self) -> PResult<Term> {
        let mut t = self.atom()?;
        while self.eat_sym(".") {
            let l = self.label()?;
            t = Term::project(t, l);
        }
        Ok(t)
    }

    fn atom(&mut self) -> PResult<Term> {
        let tok = self.peek().clone();
        match tok {
            Tok::Ident(name) if name != SEQ_BINDER => {
                self.bump();
                if !self.bound.contains(&name) && self.tables.contains(&name) {
                    Ok(Term::TableRef(name))
                } else {
                    Ok(Term::Var(name))
                }
            }
            Tok::Int(n) => {
                self.bump();
                i64::try_from(n)
                    .map(Term::int)
                    .map_err(|_| self.error(&["integer in range"]))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Term::str(s))
            }
            Tok::Time(t) => {
                self.bump();
                Ok(Term::time(Time::new(t)))
            }
            Tok::Kw("true") => {
                self.bump();
                Ok(Term::bool(true))
            }
            Tok::Kw("false") => {
                self.bump();
                Ok(Term::bool(false))
            }
            Tok::Kw("now") => {
                self.bump();
                Ok(Term::Now)
            }
            Tok::Kw("forever") => {
                self.bump();
                Ok(Term::time(Time::FOREVER))
            }
            Tok::Kw("beginning") => {
                self.bump();
                Ok(Term::time(Time::BEGINNING))
            }
            Tok::Kw(k @ ("query" | "join")) => {
                self.bump();
                self.expect_sym("{")?;
                let body = self.expr()?;
                self.expect_sym("}")?;
                Ok(if k == "query" {
                    Term::query(body)
                } else {
                    Term::join(body)
                })
            }
            Tok::Kw("row") => {
                self.bump();
                let mut args = self.call_args()?;
                if args.len() != 3 {
                    return Err(self.error(&["three arguments to `row`"]));
                }
                let e = args.pop().unwrap_or(Term::EmptyBag);
                let s = args.pop().unwrap_or(Term::EmptyBag);
                let d = args.pop().unwrap_or(Term::EmptyBag);
                Ok(Term::row(d, s, e))
            }
            Tok::Kw(k @ ("not" | "greatest" | "least" | "check_period")) => {
                self.bump();
                let op = PrimOp::from_call_name(k).unwrap_or(PrimOp::Not);
                let args = self.call_args()?;
                Ok(Term::op(op, args))
            }
            Tok::Sym("[|") => {
                self.bump();
                let mut items = Vec::new();
                if !self.is_sym("|]") {
                    loop {
                        items.push(self.expr()?);
                        if !self.eat_sym(",") {
                            break;
                        }
                    }
                }
                self.expect_sym("|]")?;
                Ok(Term::bag_of(items))
            }
            Tok::Sym("(") => {
                self.bump();
                if self.eat_sym(")") {
                    return Ok(Term::unit());
                }
                if self.peek().label().is_some() && matches!(self.peek_at(1), Tok::Sym("=")) {
                    let mut fields: Vec<(String, Term)> = Vec::new();
                    loop {
                        let l = self.label()?;
                        if fields.iter().any(|(m, _)| *m == l) {
                            return Err(self.error(&["distinct labels"]));
                        }
                        self.expect_sym("=")?;
                        fields.push((l, self.expr()?));
                        if !self.eat_sym(",") {
                            break;
                        }
                    }
                    self.expect_sym(")")?;
                    return Ok(Term::Record(fields));
                }
                let t = self.expr()?;
                self.expect_sym(")")?;
                Ok(t)
            }
            _ => Err(self.error(&["term"])),
        }
    }

    fn call_args(&mut self) -> PResult<Vec<Term>> {
        self.expect_sym("(")?;
        let mut args = Vec::new();
        if !self.is_sym(")") {
            loop {
                args.push(self.expr()?);
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym(")")?;
        Ok(args)
    }
}

fn mk_binop(op: Option<PrimOp>, l: Term, r: Term) -> Term {
    match op {
        Some(op) => Term::PrimOp(op, vec![l, r]),
        None => Term::union(l, r),
    }
}

fn neg_int(n: u64) -> Option<Term> {
    let v = -(i128::from(n));
    i64::try_from(v).ok().map(Term::int)
}
