//! Translations from the temporal calculi into the plain one.
//!
//! Temporal tables become plain tables with two extra period columns, and
//! timestamped rows become `(data, start, end)` records. Every temporal
//! database operation is expanded into plain queries and modifications over
//! the flattened table. Translations need the row-type annotations placed by
//! [`crate::typecheck::annotate`].

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::interp::CurrentMode;
use crate::model::{
    eta_expand, restrict, Assignments, FreshNames, PrimOp, Schema, TableAnn, TableKind, Term, Time,
    Type, Value,
};
use crate::querycomp::{normalize_open, rewrite_sequenced_join, HeadStyle, NormalizeError};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TranslateError {
    /// A database term was not annotated with its table's row type.
    MissingAnnotation(&'static str),
    /// A sequenced join whose body cannot be normalised.
    Join(NormalizeError),
}

impl fmt::Display for TranslateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TranslateError::MissingAnnotation(k) => {
                write!(f, "`{k}` has no table annotation; typecheck first")
            }
            TranslateError::Join(e) => write!(f, "cannot translate join: {e}"),
        }
    }
}

impl core::error::Error for TranslateError {}

type TResult = Result<Term, TranslateError>;

/// The record a timestamped row of data type `data` translates to.
pub fn row_record_type(data: Type) -> Type {
    Type::record([("data", data), ("start", Type::TIME), ("end", Type::TIME)])
}

/// Type translation with the default period column names.
pub fn translate_type(t: &Type) -> Type {
    translate_type_in(&Schema::new(), t)
}

/// Type translation. Temporal table types become plain tables whose rows
/// carry the period columns; the column names are taken from a schema table
/// with the same row type and kind when there is one.
pub fn translate_type_in(schema: &Schema, t: &Type) -> Type {
    match t {
        Type::Base(_) => t.clone(),
        Type::Function {
            arg,
            result,
            effects,
        } => Type::function(
            translate_type_in(schema, arg),
            translate_type_in(schema, result),
            *effects,
        ),
        Type::Bag(e) => Type::bag(translate_type_in(schema, e)),
        Type::Record(fs) => Type::Record(
            fs.iter()
                .map(|(l, t)| (l.clone(), translate_type_in(schema, t)))
                .collect(),
        ),
        Type::Table {
            kind: TableKind::Plain,
            ..
        } => t.clone(),
        Type::Table { row, kind } => {
            let (ps, pe) = schema
                .tables
                .values()
                .find(|ts| ts.kind == *kind && ts.row_type() == **row)
                .map(|ts| ts.period.clone())
                .unwrap_or_else(|| ("start".to_string(), "end".to_string()));
            let mut fields = row.as_record().cloned().unwrap_or_default();
            fields.insert(ps, Type::TIME);
            fields.insert(pe, Type::TIME);
            Type::table(Type::Record(fields), TableKind::Plain)
        }
        Type::TransactionRow(d) | Type::ValidRow(d) => {
            row_record_type(translate_type_in(schema, d))
        }
    }
}

/// Value translation: rows become `(data, start, end)` records.
pub fn translate_value(v: &Value) -> Value {
    match v {
        Value::Row(d, s, e) => Value::record([
            ("data", translate_value(d)),
            ("start", Value::time(*s)),
            ("end", Value::time(*e)),
        ]),
        Value::Record(r) => Value::Record(
            r.iter()
                .map(|(l, v)| (l.clone(), translate_value(v)))
                .collect(),
        ),
        Value::Bag(b) => Value::Bag(b.iter().map(translate_value).collect()),
        other => other.clone(),
    }
}

/// Rewrites one current insert, update or delete into the sequenced
/// operation over `[now, forever)`. Returns `None` for any other term.
pub fn current_as_sequenced(t: &Term) -> Option<Term> {
    match t.clone() {
        Term::Insert { table, rows, ann } => {
            let mut fresh = FreshNames::for_term(&rows);
            let x = fresh.fresh("x");
            let rows = match &ann {
                Some(a) if mentions_empty_bag(&rows) => {
                    let r = fresh.fresh("rows");
                    let ty = Type::bag(a.row.clone());
                    Term::apply(Term::lambda(r.clone(), ty, Term::var(r)), *rows)
                }
                _ => *rows,
            };
            let stamped = Term::for_(
                x.clone(),
                rows,
                Term::singleton(Term::row(Term::var(x), Term::Now, Term::forever())),
            );
            Some(Term::SeqInsert {
                table,
                rows: Box::new(stamped),
                ann,
            })
        }
        Term::Update {
            var,
            table,
            pred,
            set,
            ann,
        } => Some(Term::SeqUpdate {
            var,
            table,
            from: Box::new(Term::Now),
            to: Box::new(Term::forever()),
            pred,
            set,
            ann,
        }),
        Term::Delete {
            var,
            table,
            pred,
            ann,
        } => Some(Term::SeqDelete {
            var,
            table,
            from: Box::new(Term::Now),
            to: Box::new(Term::forever()),
            pred,
            ann,
        }),
        _ => None,
    }
}

/// Replaces every current modification of a valid-time table by its
/// sequenced equivalent. Tables are recognised by annotation, or by name
/// when the term is unannotated.
pub fn desugar_current(schema: &Schema, term: &Term) -> Term {
    let mut t = term.clone();
    desugar_in_place(schema, &mut t);
    t
}

fn desugar_in_place(schema: &Schema, t: &mut Term) {
    for c in t.children_mut() {
        desugar_in_place(schema, c);
    }
    let valid = match t {
        Term::Insert { table, ann, .. }
        | Term::Update { table, ann, .. }
        | Term::Delete { table, ann, .. } => match (ann, &**table) {
            (Some(a), _) => a.kind == TableKind::Valid,
            (None, Term::TableRef(name)) => schema
                .get(name)
                .is_some_and(|ts| ts.kind == TableKind::Valid),
            _ => false,
        },
        _ => false,
    };
    if valid {
        if let Some(seq) = current_as_sequenced(t) {
            *t = seq;
        }
    }
}

/// Translates an annotated transaction-time program.
pub fn translate_t(schema: &Schema, term: &Term) -> TResult {
    Translator::new(schema, term).tr(term)
}

/// Translates an annotated valid-time program. Current modifications use
/// the dedicated translations or are desugared to sequenced ones first.
pub fn translate_v(schema: &Schema, term: &Term, current: CurrentMode) -> TResult {
    let source = match current {
        CurrentMode::Direct => term.clone(),
        CurrentMode::Desugar => desugar_current(schema, term),
    };
    Translator::new(schema, &source).tr(&source)
}

struct Translator<'a> {
    schema: &'a Schema,
    fresh: FreshNames,
}

fn seq(a: Term, b: Term) -> Term {
    Term::let_in(crate::surface::SEQ_BINDER, a, b)
}

fn proj(x: &str, l: &str) -> Term {
    Term::project(Term::var(x), l)
}

fn and_all(terms: Vec<Term>) -> Term {
    terms
        .into_iter()
        .reduce(Term::and)
        .unwrap_or_else(|| Term::bool(true))
}

fn lt(a: Term, b: Term) -> Term {
    Term::binop(PrimOp::Lt, a, b)
}

fn gt(a: Term, b: Term) -> Term {
    Term::binop(PrimOp::Gt, a, b)
}

fn ge(a: Term, b: Term) -> Term {
    Term::binop(PrimOp::Ge, a, b)
}

fn le(a: Term, b: Term) -> Term {
    Term::binop(PrimOp::Le, a, b)
}

/// `eta(x) ++ extra`, the data fields of flat row `x` plus the given fields.
fn eta_with(x: &str, labels: &[String], extra: Vec<(String, Term)>) -> Term {
    let Term::Record(mut fields) = eta_expand(x, labels) else {
        unreachable!()
    };
    fields.extend(extra);
    Term::Record(fields)
}

fn mentions_empty_bag(t: &Term) -> bool {
    matches!(t, Term::EmptyBag) || t.children().into_iter().any(mentions_empty_bag)
}

impl Translator<'_> {
    /// Pins the type of `t` with an identity function when it contains a
    /// `[||]` whose element type would otherwise come from the context.
    fn ascribe(&mut self, t: Term, ty: Type) -> Term {
        if !mentions_empty_bag(&t) {
            return t;
        }
        let v = self.fresh.fresh("rows");
        Term::apply(Term::lambda(v.clone(), ty, Term::var(v)), t)
    }
}

fn need(ann: &Option<TableAnn>, kind: &'static str) -> Result<TableAnn, TranslateError> {
    ann.clone().ok_or(TranslateError::MissingAnnotation(kind))
}

impl<'a> Translator<'a> {
    fn new(schema: &'a Schema, term: &Term) -> Translator<'a> {
        let mut fresh = FreshNames::for_term(term);
        for name in schema.tables.keys() {
            fresh.reserve(name);
        }
        Translator { schema, fresh }
    }

    fn set(
        &mut self,
        x: &str,
        ann: &TableAnn,
        set: &[(String, Term)],
    ) -> Result<Vec<(String, Term)>, TranslateError> {
        set.iter()
            .map(|(l, b)| Ok((l.clone(), restrict(x, &ann.row, self.tr(b)?))))
            .collect()
    }

    /// `(data = eta(x), start = x.ps, end = x.pe)` for flat row `x`.
    fn nested_view(&self, x: &str, ann: &TableAnn) -> Term {
        Term::record([
            ("data", eta_expand(x, &ann.labels())),
            ("start", proj(x, &ann.period.0)),
            ("end", proj(x, &ann.period.1)),
        ])
    }

    /// Runs `body` with `x` bound to the nested view of flat row `x`.
    fn lift(&self, x: &str, ann: &TableAnn, body: Term) -> Term {
        let ty = row_record_type(ann.row.clone());
        Term::apply(Term::lambda(x, ty, body), self.nested_view(x, ann))
    }

    fn tr(&mut self, t: &Term) -> TResult {
        match t {
            Term::Lambda {
                param,
                param_ty,
                body,
            } => Ok(Term::Lambda {
                param: param.clone(),
                param_ty: param_ty
                    .as_ref()
                    .map(|ty| translate_type_in(self.schema, ty)),
                body: Box::new(self.tr(body)?),
            }),
            Term::Data(m) => Ok(Term::project(self.tr(m)?, "data")),
            Term::Start(m) => Ok(Term::project(self.tr(m)?, "start")),
            Term::End(m) => Ok(Term::project(self.tr(m)?, "end")),
            Term::Row(d, s, e) => Ok(Term::record([
                ("data", self.tr(d)?),
                ("start", self.tr(s)?),
                ("end", self.tr(e)?),
            ])),
            Term::Get { table, ann } => {
                let a = need(ann, "get")?;
                let table = self.tr(table)?;
                if a.kind == TableKind::Plain {
                    return Ok(Term::get(table));
                }
                let x = self.fresh.fresh("x");
                let head = self.nested_view(&x, &a);
                Ok(Term::query(Term::for_(
                    x,
                    Term::get(table),
                    Term::singleton(head),
                )))
            }
            Term::Insert { table, rows, ann } => {
                let a = need(ann, "insert")?;
                if a.kind == TableKind::Plain {
                    return Ok(Term::insert(self.tr(table)?, self.tr(rows)?));
                }
                let (tbl, new, x) = (
                    self.fresh.fresh("tbl"),
                    self.fresh.fresh("rows"),
                    self.fresh.fresh("x"),
                );
                let stamped = eta_with(
                    &x,
                    &a.labels(),
                    Vec::from([
                        (a.period.0.clone(), Term::Now),
                        (a.period.1.clone(), Term::forever()),
                    ]),
                );
                Ok(Term::let_in(
                    tbl.clone(),
                    self.tr(table)?,
                    Term::let_in(
                        new.clone(),
                        Term::for_(
                            x,
                            {
                                let rows = self.tr(rows)?;
                                self.ascribe(rows, Type::bag(a.row.clone()))
                            },
                            Term::singleton(stamped),
                        ),
                        Term::insert(Term::var(tbl), Term::var(new)),
                    ),
                ))
            }
            Term::Delete {
                var,
                table,
                pred,
                ann,
            } => {
                let a = need(ann, "delete")?;
                match a.kind {
                    TableKind::Plain => {
                        Ok(Term::delete(var.clone(), self.tr(table)?, self.tr(pred)?))
                    }
                    TableKind::Transaction => {
                        let p = Term::and(
                            restrict(var, &a.row, self.tr(pred)?),
                            self.is_current(var, &a),
                        );
                        Ok(Term::update(
                            var.clone(),
                            self.tr(table)?,
                            p,
                            Vec::from([(a.period.1.clone(), Term::Now)]),
                        ))
                    }
                    TableKind::Valid => self.current_delete(var, table, pred, &a),
                }
            }
            Term::Update {
                var,
                table,
                pred,
                set,
                ann,
            } => {
                let a = need(ann, "update")?;
                match a.kind {
                    TableKind::Plain => {
                        let set = set
                            .iter()
                            .map(|(l, b)| Ok((l.clone(), self.tr(b)?)))
                            .collect::<Result<_, _>>()?;
                        Ok(Term::update(
                            var.clone(),
                            self.tr(table)?,
                            self.tr(pred)?,
                            set,
                        ))
                    }
                    TableKind::Transaction => self.transaction_update(var, table, pred, set, &a),
                    TableKind::Valid => self.current_update(var, table, pred, set, &a),
                }
            }
            Term::SeqInsert { table, rows, ann } => {
                let a = need(ann, "insert sequenced")?;
                let (tbl, new, x) = (
                    self.fresh.fresh("tbl"),
                    self.fresh.fresh("rows"),
                    self.fresh.fresh("x"),
                );
                let data = Term::project(Term::var(x.clone()), "data");
                let start = Term::project(Term::var(x.clone()), "start");
                let end = Term::project(Term::var(x.clone()), "end");
                let mut fields: Vec<(String, Term)> = a
                    .labels()
                    .into_iter()
                    .map(|l| (l.clone(), Term::project(data.clone(), l)))
                    .collect();
                fields.push((a.period.0.clone(), start.clone()));
                fields.push((a.period.1.clone(), end.clone()));
                let body = Term::where_(
                    Term::op(PrimOp::CheckPeriod, Vec::from([start, end])),
                    Term::singleton(Term::Record(fields)),
                );
                Ok(Term::let_in(
                    tbl.clone(),
                    self.tr(table)?,
                    Term::let_in(
                        new.clone(),
                        Term::for_(
                            x,
                            {
                                let rows = self.tr(rows)?;
                                self.ascribe(rows, Type::bag(row_record_type(a.row.clone())))
                            },
                            body,
                        ),
                        Term::insert(Term::var(tbl), Term::var(new)),
                    ),
                ))
            }
            Term::SeqUpdate {
                var,
                table,
                from,
                to,
                pred,
                set,
                ann,
            } => {
                let a = need(ann, "update sequenced")?;
                self.sequenced(var, table, from, to, pred, Some(set), &a)
            }
            Term::SeqDelete {
                var,
                table,
                from,
                to,
                pred,
                ann,
            } => {
                let a = need(ann, "delete sequenced")?;
                self.sequenced(var, table, from, to, pred, None, &a)
            }
            Term::NonseqUpdate {
                var,
                table,
                pred,
                set,
                valid_from,
                valid_to,
                ann,
            } => {
                let a = need(ann, "update nonsequenced")?;
                let p = {
                    let inner = self.tr(pred)?;
                    self.lift(var, &a, inner)
                };
                let f = {
                    let inner = self.tr(valid_from)?;
                    self.lift(var, &a, inner)
                };
                let to = {
                    let inner = self.tr(valid_to)?;
                    self.lift(var, &a, inner)
                };
                let guard = Term::if_(
                    p,
                    Term::op(PrimOp::CheckPeriod, Vec::from([f.clone(), to.clone()])),
                    Term::bool(false),
                );
                let mut assigns = Vec::new();
                for (l, b) in set {
                    let lifted = {
                        let inner = self.tr(b)?;
                        self.lift(var, &a, inner)
                    };
                    assigns.push((l.clone(), lifted));
                }
                assigns.push((a.period.0.clone(), f));
                assigns.push((a.period.1.clone(), to));
                Ok(Term::update(var.clone(), self.tr(table)?, guard, assigns))
            }
            Term::NonseqDelete {
                var,
                table,
                pred,
                ann,
            } => {
                let a = need(ann, "delete nonsequenced")?;
                let p = {
                    let inner = self.tr(pred)?;
                    self.lift(var, &a, inner)
                };
                Ok(Term::delete(var.clone(), self.tr(table)?, p))
            }
            Term::Join(body) => {
                let nf = normalize_open(self.schema, body).map_err(TranslateError::Join)?;
                if nf.comps.is_empty() {
                    // Always empty, but `[||]` alone carries no element type.
                    let x = self.fresh.fresh("x");
                    let row = Term::record([
                        ("data", Term::var(x.clone())),
                        ("start", Term::time(Time::BEGINNING)),
                        ("end", Term::forever()),
                    ]);
                    let body = self.tr(body)?;
                    return Ok(Term::for_(
                        x,
                        body,
                        Term::where_(Term::bool(false), Term::singleton(row)),
                    ));
                }
                rewrite_sequenced_join(&nf, HeadStyle::Record).map_err(TranslateError::Join)
            }
            _ => {
                let mut out = t.clone();
                if let Some(slot) = out.ann_mut() {
                    *slot = None;
                }
                for c in out.children_mut() {
                    *c = self.tr(c)?;
                }
                Ok(out)
            }
        }
    }

    fn is_current(&self, x: &str, a: &TableAnn) -> Term {
        Term::eq(proj(x, &a.period.1), Term::forever())
    }

    fn transaction_update(
        &mut self,
        var: &str,
        table: &Term,
        pred: &Term,
        set: &[(String, Term)],
        a: &TableAnn,
    ) -> TResult {
        let (tbl, affected) = (self.fresh.fresh("tbl"), self.fresh.fresh("affected"));
        let p = self.tr(pred)?;
        let matches = Term::and(restrict(var, &a.row, p), self.is_current(var, a));
        let changed: Vec<&str> = set.iter().map(|(l, _)| l.as_str()).collect();
        let mut head: Vec<(String, Term)> = a
            .labels()
            .into_iter()
            .filter(|l| !changed.contains(&l.as_str()))
            .map(|l| (l.clone(), proj(var, &l)))
            .collect();
        head.extend(self.set(var, a, set)?);
        head.push((a.period.0.clone(), Term::Now));
        head.push((a.period.1.clone(), Term::forever()));
        let query = Term::query(Term::for_(
            var,
            Term::get(Term::var(tbl.clone())),
            Term::where_(matches.clone(), Term::singleton(Term::Record(head))),
        ));
        let close = Term::update(
            var,
            Term::var(tbl.clone()),
            matches,
            Vec::from([(a.period.1.clone(), Term::Now)]),
        );
        Ok(Term::let_in(
            tbl.clone(),
            self.tr(table)?,
            Term::let_in(
                affected.clone(),
                query,
                seq(close, Term::insert(Term::var(tbl), Term::var(affected))),
            ),
        ))
    }

    fn current_delete(&mut self, var: &str, table: &Term, pred: &Term, a: &TableAnn) -> TResult {
        let (tbl, time) = (self.fresh.fresh("tbl"), self.fresh.fresh("time"));
        let p = restrict(var, &a.row, self.tr(pred)?);
        let (ps, pe) = (proj(var, &a.period.0), proj(var, &a.period.1));
        let close = Term::update(
            var,
            Term::var(tbl.clone()),
            and_all(Vec::from([
                p.clone(),
                le(ps.clone(), Term::var(time.clone())),
                gt(pe, Term::var(time.clone())),
            ])),
            Vec::from([(a.period.1.clone(), Term::var(time.clone()))]),
        );
        let remove = Term::delete(
            var,
            Term::var(tbl.clone()),
            Term::and(p, ge(ps, Term::var(time.clone()))),
        );
        Ok(Term::let_in(
            tbl,
            self.tr(table)?,
            Term::let_in(time, Term::Now, seq(close, remove)),
        ))
    }

    fn current_update(
        &mut self,
        var: &str,
        table: &Term,
        pred: &Term,
        set: &[(String, Term)],
        a: &TableAnn,
    ) -> TResult {
        let (tbl, time, affected) = (
            self.fresh.fresh("tbl"),
            self.fresh.fresh("time"),
            self.fresh.fresh("affected"),
        );
        let p = restrict(var, &a.row, self.tr(pred)?);
        let (ps, pe) = (proj(var, &a.period.0), proj(var, &a.period.1));
        let now = Term::var(time.clone());
        let straddles = and_all(Vec::from([
            p.clone(),
            lt(ps.clone(), now.clone()),
            gt(pe.clone(), now.clone()),
        ]));
        let changed: Vec<&str> = set.iter().map(|(l, _)| l.as_str()).collect();
        let mut head: Vec<(String, Term)> = a
            .labels()
            .into_iter()
            .filter(|l| !changed.contains(&l.as_str()))
            .map(|l| (l.clone(), proj(var, &l)))
            .collect();
        let assigns = self.set(var, a, set)?;
        head.extend(assigns.clone());
        head.push((a.period.0.clone(), now.clone()));
        head.push((a.period.1.clone(), pe));
        let query = Term::query(Term::for_(
            var,
            Term::get(Term::var(tbl.clone())),
            Term::where_(straddles.clone(), Term::singleton(Term::Record(head))),
        ));
        let close = Term::update(
            var,
            Term::var(tbl.clone()),
            straddles,
            Vec::from([(a.period.1.clone(), now.clone())]),
        );
        let future = Term::update(
            var,
            Term::var(tbl.clone()),
            Term::and(p, ge(ps, now)),
            assigns,
        );
        Ok(Term::let_in(
            tbl.clone(),
            self.tr(table)?,
            Term::let_in(
                time,
                Term::Now,
                Term::let_in(
                    affected.clone(),
                    query,
                    seq(
                        close,
                        seq(future, Term::insert(Term::var(tbl), Term::var(affected))),
                    ),
                ),
            ),
        ))
    }

    /// Sequenced update (with `set`) or delete (without).
    #[allow(clippy::too_many_arguments)]
    fn sequenced(
        &mut self,
        var: &str,
        table: &Term,
        from: &Term,
        to: &Term,
        pred: &Term,
        set: Option<&Assignments>,
        a: &TableAnn,
    ) -> TResult {
        let tbl = self.fresh.fresh("tbl");
        let a_start = self.fresh.fresh("aStart");
        let a_end = self.fresh.fresh("aEnd");
        let l_rows = self.fresh.fresh("lRows");
        let r_rows = self.fresh.fresh("rRows");
        let p = restrict(var, &a.row, self.tr(pred)?);
        let (ps, pe) = (proj(var, &a.period.0), proj(var, &a.period.1));
        let (vs, ve) = (Term::var(a_start.clone()), Term::var(a_end.clone()));
        let labels = a.labels();
        let remainder = |cond: Term, s: Term, e: Term| {
            Term::query(Term::for_(
                var,
                Term::get(Term::var(tbl.clone())),
                Term::where_(
                    cond,
                    Term::singleton(eta_with(
                        var,
                        &labels,
                        Vec::from([(a.period.0.clone(), s), (a.period.1.clone(), e)]),
                    )),
                ),
            ))
        };
        let left = remainder(
            and_all(Vec::from([
                p.clone(),
                lt(ps.clone(), vs.clone()),
                gt(pe.clone(), vs.clone()),
            ])),
            ps.clone(),
            vs.clone(),
        );
        let right = remainder(
            and_all(Vec::from([
                p.clone(),
                lt(ps.clone(), ve.clone()),
                gt(pe.clone(), ve.clone()),
            ])),
            ve.clone(),
            pe.clone(),
        );
        let overlapping = and_all(Vec::from([
            p,
            lt(ps.clone(), ve.clone()),
            gt(pe.clone(), vs.clone()),
        ]));
        let modify = match set {
            Some(set) => {
                let mut assigns = self.set(var, a, set)?;
                assigns.push((
                    a.period.0.clone(),
                    Term::op(PrimOp::Greatest, Vec::from([ps, vs.clone()])),
                ));
                assigns.push((
                    a.period.1.clone(),
                    Term::op(PrimOp::Least, Vec::from([pe, ve.clone()])),
                ));
                Term::update(var, Term::var(tbl.clone()), overlapping, assigns)
            }
            None => Term::delete(var, Term::var(tbl.clone()), overlapping),
        };
        let body = seq(
            modify,
            seq(
                Term::insert(Term::var(tbl.clone()), Term::var(l_rows.clone())),
                Term::insert(Term::var(tbl.clone()), Term::var(r_rows.clone())),
            ),
        );
        let checked = seq(
            Term::op(PrimOp::CheckPeriod, Vec::from([vs, ve])),
            Term::let_in(l_rows, left, Term::let_in(r_rows, right, body)),
        );
        Ok(Term::let_in(
            tbl,
            self.tr(table)?,
            Term::let_in(
                a_start,
                self.tr(from)?,
                Term::let_in(a_end, self.tr(to)?, checked),
            ),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BaseType;

    #[test]
    fn row_types_become_nested_records() {
        let data = Type::record([("task", Type::STRING), ("done", Type::BOOL)]);
        assert_eq!(
            translate_type(&Type::TransactionRow(Box::new(data.clone()))),
            row_record_type(data)
        );
        assert_eq!(translate_type(&Type::Base(BaseType::Int)), Type::INT);
    }

    #[test]
    fn data_projects() {
        let mut s = Schema::new();
        s.tables.clear();
        let t = translate_t(&s, &Term::data(Term::var("x"))).unwrap();
        assert_eq!(t, Term::project(Term::var("x"), "data"));
    }

    #[test]
    fn desugar_is_identity_without_current_operations() {
        let t = Term::query(Term::bag_of(Vec::from([Term::int(1)])));
        assert_eq!(desugar_current(&Schema::new(), &t), t);
    }
}
