use alloc::string::String;
use core::fmt::Write;

use super::parser::SEQ_BINDER;
use super::{Decl, SourceProgram};
use crate::model::{Const, PrimOp, TableKind, Term};

// Precedence levels, loosest first. A subterm printed in a context that
// demands a tighter level is parenthesised.
const SEQ: u8 = 0;
const OPEN: u8 = 1;
const OR: u8 = 2;
const AND: u8 = 3;
const CMP: u8 = 4;
const UNION: u8 = 5;
const ADD: u8 = 6;
const MUL: u8 = 7;
const UNARY: u8 = 8;
const APP: u8 = 9;
const ATOM: u8 = 10;

pub fn print_term(t: &Term) -> String {
    let mut out = String::new();
    Printer { out: &mut out }.term(t, SEQ);
    out
}

pub fn print_program(p: &SourceProgram) -> String {
    let mut out = String::new();
    for d in &p.decls {
        match d {
            Decl::Table { name, schema } => {
                let _ = write!(out, "table {name}(");
                for (i, (l, b)) in schema.columns.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    let _ = write!(out, "{l}: {}", b.name());
                }
                out.push(')');
                match schema.kind {
                    TableKind::Plain => {}
                    TableKind::Transaction => out.push_str(" transaction"),
                    TableKind::Valid => out.push_str(" valid"),
                }
                if schema.kind.is_temporal()
                    && (schema.period.0 != "start" || schema.period.1 != "end")
                {
                    let _ = write!(out, " period({}, {})", schema.period.0, schema.period.1);
                }
                out.push_str(";\n");
            }
            Decl::Def { name, term } => {
                let _ = writeln!(out, "def {name} = {};", print_term(term));
            }
            Decl::Main(term) => {
                let _ = writeln!(out, "main = {};", print_term(term));
            }
        }
    }
    out
}

fn op_level(op: PrimOp) -> u8 {
    match op {
        PrimOp::Or => OR,
        PrimOp::And => AND,
        PrimOp::Eq | PrimOp::Neq | PrimOp::Lt | PrimOp::Le | PrimOp::Gt | PrimOp::Ge => CMP,
        PrimOp::Add | PrimOp::Sub => ADD,
        PrimOp::Mul => MUL,
        _ => ATOM,
    }
}

fn level(t: &Term) -> u8 {
    match t {
        Term::Apply(f, _) => match &**f {
            Term::Lambda { param_ty: None, .. } => SEQ,
            _ => APP,
        },
        Term::Lambda { .. } => SEQ,
        Term::If(..)
        | Term::For { .. }
        | Term::Insert { .. }
        | Term::SeqInsert { .. }
        | Term::Update { .. }
        | Term::Delete { .. }
        | Term::SeqUpdate { .. }
        | Term::SeqDelete { .. }
        | Term::NonseqUpdate { .. }
        | Term::NonseqDelete { .. } => OPEN,
        Term::PrimOp(op, args) if op.is_infix() && args.len() == 2 => op_level(*op),
        Term::Union(..) => UNION,
        Term::Get { .. } | Term::Data(_) | Term::Start(_) | Term::End(_) => UNARY,
        Term::Const(Const::Int(i)) if *i < 0 => UNARY,
        _ => ATOM,
    }
}

struct Printer<'a> {
    out: &'a mut String,
}

impl Printer<'_> {
    fn s(&mut self, s: &str) {
        self.out.push_str(s);
    }

    fn term(&mut self, t: &Term, ctx: u8) {
        if level(t) < ctx {
            self.s("(");
            self.bare(t);
            self.s(")");
        } else {
            self.bare(t);
        }
    }

    fn binder_clause(&mut self, kw: &str, var: &str, table: &Term) {
        self.s(kw);
        self.s(" (");
        self.s(var);
        self.s(" <- ");
        self.term(table, SEQ);
        self.s(")");
    }

    fn assignments(&mut self, set: &[(String, Term)]) {
        self.s("(");
        for (i, (l, b)) in set.iter().enumerate() {
            if i > 0 {
                self.s(", ");
            }
            self.s(l);
            self.s(" = ");
            self.term(b, SEQ);
        }
        self.s(")");
    }

    fn args(&mut self, args: &[&Term]) {
        self.s("(");
        for (i, a) in args.iter().enumerate() {
            if i > 0 {
                self.s(", ");
            }
            self.term(a, SEQ);
        }
        self.s(")");
    }

    fn bare(&mut self, t: &Term) {
        match t {
            Term::Var(x) | Term::TableRef(x) => self.s(x),
            Term::Const(c) => {
                let _ = write!(self.out, "{c}");
            }
            Term::Lambda {
                param,
                param_ty,
                body,
            } => {
                match param_ty {
                    Some(ty) => {
                        let _ = write!(self.out, "fun ({param}: {ty}) -> ");
                    }
                    None => {
                        let _ = write!(self.out, "fun {param} -> ");
                    }
                }
                self.term(body, SEQ);
            }
            Term::Apply(f, a) => match &**f {
                Term::Lambda {
                    param,
                    param_ty: None,
                    body,
                } if param == SEQ_BINDER => {
                    self.term(a, OPEN);
                    self.s("; ");
                    self.term(body, SEQ);
                }
                Term::Lambda {
                    param,
                    param_ty: None,
                    body,
                } => {
                    let _ = write!(self.out, "let {param} = ");
                    self.term(a, SEQ);
                    self.s(" in ");
                    self.term(body, SEQ);
                }
                _ => {
                    self.term(f, APP);
                    self.s(" ");
                    self.term(a, ATOM);
                }
            },
            Term::PrimOp(op, args) if op.is_infix() && args.len() == 2 => {
                let lvl = op_level(*op);
                let left_ctx = if lvl == CMP { CMP + 1 } else { lvl };
                self.term(&args[0], left_ctx);
                let _ = write!(self.out, " {} ", op.symbol());
                self.term(&args[1], lvl + 1);
            }
            Term::PrimOp(op, args) => {
                self.s(op.symbol());
                let refs: alloc::vec::Vec<&Term> = args.iter().collect();
                self.args(&refs);
            }
            Term::If(c, th, el) => {
                if **el == Term::EmptyBag {
                    self.s("where (");
                    self.term(c, SEQ);
                    self.s(") ");
                    self.term(th, OPEN);
                } else {
                    self.s("if ");
                    self.term(c, SEQ);
                    self.s(" then ");
                    self.term(th, SEQ);
                    self.s(" else ");
                    self.term(el, OPEN);
                }
            }
            Term::EmptyBag => self.s("[||]"),
            Term::Singleton(m) => {
                self.s("[|");
                self.term(m, SEQ);
                self.s("|]");
            }
            Term::Union(l, r) => {
                self.term(l, UNION);
                self.s(" ++ ");
                self.term(r, UNION + 1);
            }
            Term::For { var, source, body } => {
                self.binder_clause("for", var, source);
                self.s(" ");
                self.term(body, OPEN);
            }
            Term::Record(fields) => self.assignments(fields),
            Term::Project(m, l) => {
                self.term(m, ATOM);
                self.s(".");
                self.s(l);
            }
            Term::Now => self.s("now"),
            Term::Query(m) | Term::Join(m) => {
                self.s(if matches!(t, Term::Query(_)) {
                    "query { "
                } else {
                    "join { "
                });
                self.term(m, SEQ);
                self.s(" }");
            }
            Term::Get { table, .. } => {
                self.s("get ");
                self.term(table, UNARY);
            }
            Term::Data(m) | Term::Start(m) | Term::End(m) => {
                self.s(match t {
                    Term::Data(_) => "data ",
                    Term::Start(_) => "start ",
                    _ => "end ",
                });
                self.term(m, UNARY);
            }
            Term::Insert { table, rows, .. } | Term::SeqInsert { table, rows, .. } => {
                self.s(if matches!(t, Term::Insert { .. }) {
                    "insert "
                } else {
                    "insert sequenced "
                });
                self.term(table, UNARY);
                self.s(" values ");
                self.term(rows, OPEN);
            }
            Term::Update {
                var,
                table,
                pred,
                set,
                ..
            } => {
                self.binder_clause("update", var, table);
                self.s(" where ");
                self.term(pred, OR);
                self.s(" set ");
                self.assignments(set);
            }
            Term::Delete {
                var, table, pred, ..
            }
            | Term::NonseqDelete {
                var, table, pred, ..
            } => {
                let kw = if matches!(t, Term::Delete { .. }) {
                    "delete"
                } else {
                    "delete nonsequenced"
                };
                self.binder_clause(kw, var, table);
                self.s(" where ");
                self.term(pred, OPEN);
            }
            Term::Row(d, s, e) => {
                self.s("row");
                self.args(&[d, s, e]);
            }
            Term::SeqUpdate {
                var,
                table,
                from,
                to,
                pred,
                set,
                ..
            } => {
                self.binder_clause("update sequenced", var, table);
                self.s(" between ");
                self.term(from, OR);
                self.s(" and ");
                self.term(to, OR);
                self.s(" where ");
                self.term(pred, OR);
                self.s(" set ");
                self.assignments(set);
            }
            Term::SeqDelete {
                var,
                table,
                from,
                to,
                pred,
                ..
            } => {
                self.binder_clause("delete sequenced", var, table);
                self.s(" between ");
                self.term(from, OR);
                self.s(" and ");
                self.term(to, OR);
                self.s(" where ");
                self.term(pred, OPEN);
            }
            Term::NonseqUpdate {
                var,
                table,
                pred,
                set,
                valid_from,
                valid_to,
                ..
            } => {
                self.binder_clause("update nonsequenced", var, table);
                self.s(" where ");
                self.term(pred, OR);
                self.s(" set ");
                self.assignments(set);
                self.s(" valid from ");
                self.term(valid_from, OR);
                self.s(" to ");
                self.term(valid_to, OPEN);
            }
        }
    }
}
