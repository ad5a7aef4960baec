//! Type-and-effect checking for the three dialects, and the annotation pass
//! that records table row types on database terms.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::model::{BaseType, Effects, PrimOp, Schema, TableAnn, TableKind, Term, Type, Value};
use crate::surface::print_term;

/// Which calculus a program is written in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Dialect {
    Linq,
    Transaction,
    Valid,
}

impl Dialect {
    pub fn name(self) -> &'static str {
        match self {
            Dialect::Linq => "linq",
            Dialect::Transaction => "transaction-time",
            Dialect::Valid => "valid-time",
        }
    }

    fn allows_table(self, kind: TableKind) -> bool {
        match self {
            Dialect::Linq => kind == TableKind::Plain,
            Dialect::Transaction => kind != TableKind::Valid,
            Dialect::Valid => kind != TableKind::Transaction,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TypeErrorKind {
    Mismatch,
    UnknownVar,
    UnknownTable,
    EffectViolation,
    NotQueryType,
    NotFlat,
    LabelError,
    /// A construct or table that the program's dialect does not have.
    Dialect,
    /// The type of a parameter or empty bag cannot be determined.
    NeedsAnnotation,
}

impl TypeErrorKind {
    pub fn name(self) -> &'static str {
        match self {
            TypeErrorKind::Mismatch => "mismatch",
            TypeErrorKind::UnknownVar => "unknown-var",
            TypeErrorKind::UnknownTable => "unknown-table",
            TypeErrorKind::EffectViolation => "effect-violation",
            TypeErrorKind::NotQueryType => "not-query-type",
            TypeErrorKind::NotFlat => "not-flat",
            TypeErrorKind::LabelError => "label-error",
            TypeErrorKind::Dialect => "dialect",
            TypeErrorKind::NeedsAnnotation => "needs-annotation",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeError {
    pub kind: TypeErrorKind,
    pub message: String,
    /// Rendering of the offending subterm.
    pub location: String,
    pub expected: Option<Type>,
    pub found: Option<Type>,
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind.name(), self.message)?;
        if let (Some(e), Some(g)) = (&self.expected, &self.found) {
            write!(f, " (expected {e}, found {g})")?;
        }
        write!(f, "\n  in: {}", self.location)
    }
}

impl core::error::Error for TypeError {}

fn locate(t: &Term) -> String {
    let s = print_term(t);
    if s.chars().count() > 72 {
        let mut cut: String = s.chars().take(69).collect();
        cut.push_str("...");
        cut
    } else {
        s
    }
}

/// Ordered variable typing; lookups find the innermost binding.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TypeEnv {
    vars: Vec<(String, Type)>,
}

impl TypeEnv {
    pub fn new() -> TypeEnv {
        TypeEnv::default()
    }

    pub fn with(mut self, name: impl Into<String>, ty: Type) -> TypeEnv {
        self.vars.push((name.into(), ty));
        self
    }

    pub fn lookup(&self, name: &str) -> Option<&Type> {
        self.vars
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
    }

    pub fn iter(&self) -> impl Iterator<Item = &(String, Type)> {
        self.vars.iter()
    }
}

/// Base types, and records and bags of query types. Timestamped rows of
/// query types also qualify, since they flatten to records.
pub fn is_query_type(t: &Type) -> bool {
    match t {
        Type::Base(_) => true,
        Type::Record(fields) => fields.values().all(is_query_type),
        Type::Bag(e) => is_query_type(e),
        Type::TransactionRow(d) | Type::ValidRow(d) => is_query_type(d),
        Type::Function { .. } | Type::Table { .. } => false,
    }
}

/// The dialect implied by the tables, row types and constructs a term uses.
pub fn dialect_of(schema: &Schema, term: &Term) -> Result<Dialect, TypeError> {
    let mut tt = false;
    let mut vt = false;
    let mut neutral = false;
    scan_dialect(schema, term, &mut tt, &mut vt, &mut neutral);
    match (tt, vt) {
        (true, true) => Err(TypeError {
            kind: TypeErrorKind::Dialect,
            message: "program mixes transaction-time and valid-time features".into(),
            location: locate(term),
            expected: None,
            found: None,
        }),
        (true, false) => Ok(Dialect::Transaction),
        (false, true) => Ok(Dialect::Valid),
        (false, false) if neutral => Ok(Dialect::Valid),
        _ => Ok(Dialect::Linq),
    }
}

fn type_features(t: &Type, tt: &mut bool, vt: &mut bool) {
    match t {
        Type::Base(_) => {}
        Type::Function { arg, result, .. } => {
            type_features(arg, tt, vt);
            type_features(result, tt, vt);
        }
        Type::Bag(e) => type_features(e, tt, vt),
        Type::Record(fs) => fs.values().for_each(|f| type_features(f, tt, vt)),
        Type::Table { row, kind } => {
            *tt |= *kind == TableKind::Transaction;
            *vt |= *kind == TableKind::Valid;
            type_features(row, tt, vt);
        }
        Type::TransactionRow(d) => {
            *tt = true;
            type_features(d, tt, vt);
        }
        Type::ValidRow(d) => {
            *vt = true;
            type_features(d, tt, vt);
        }
    }
}

fn scan_dialect(schema: &Schema, t: &Term, tt: &mut bool, vt: &mut bool, neutral: &mut bool) {
    match t {
        Term::TableRef(name) => {
            if let Some(ts) = schema.get(name) {
                *tt |= ts.kind == TableKind::Transaction;
                *vt |= ts.kind == TableKind::Valid;
            }
        }
        Term::Lambda {
            param_ty: Some(ty), ..
        } => type_features(ty, tt, vt),
        Term::Row(..)
        | Term::SeqInsert { .. }
        | Term::SeqUpdate { .. }
        | Term::SeqDelete { .. }
        | Term::NonseqUpdate { .. }
        | Term::NonseqDelete { .. } => *vt = true,
        Term::Join(_) | Term::Data(_) | Term::Start(_) | Term::End(_) => *neutral = true,
        _ => {}
    }
    for c in t.children() {
        scan_dialect(schema, c, tt, vt, neutral);
    }
}

/// Infers type and effects of `term` without modifying it.
pub fn infer(
    schema: &Schema,
    env: &TypeEnv,
    term: &Term,
    dialect: Dialect,
) -> Result<(Type, Effects), TypeError> {
    let mut t = term.clone();
    let mut env = env.clone();
    Checker { schema, dialect }.go(&mut t, &mut env, None)
}

/// Fills the annotation slot of every database term.
pub fn annotate(schema: &Schema, term: &Term, dialect: Dialect) -> Result<Term, TypeError> {
    let mut t = term.clone();
    Checker { schema, dialect }.go(&mut t, &mut TypeEnv::new(), None)?;
    Ok(t)
}

/// Result of checking a closed program.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Checked {
    pub dialect: Dialect,
    pub ty: Type,
    pub effects: Effects,
    pub term: Term,
}

/// Determines the dialect, then infers and annotates a closed term.
pub fn check_program(schema: &Schema, term: &Term) -> Result<Checked, TypeError> {
    let dialect = dialect_of(schema, term)?;
    let mut t = term.clone();
    let (ty, effects) = Checker { schema, dialect }.go(&mut t, &mut TypeEnv::new(), None)?;
    Ok(Checked {
        dialect,
        ty,
        effects,
        term: t,
    })
}

/// Whether a value inhabits a type. Closures are checked on their parameter
/// type only.
pub fn value_has_type(schema: &Schema, v: &Value, ty: &Type) -> bool {
    match (v, ty) {
        (Value::Const(c), Type::Base(b)) => c.base_type() == *b,
        (Value::Record(r), Type::Record(fs)) => {
            r.len() == fs.len()
                && fs
                    .iter()
                    .all(|(l, t)| r.get(l).is_some_and(|x| value_has_type(schema, x, t)))
        }
        (Value::Bag(b), Type::Bag(e)) => b.counts().all(|(x, _)| value_has_type(schema, x, e)),
        (Value::Table(name), Type::Table { row, kind }) => schema
            .get(name)
            .is_some_and(|t| t.kind == *kind && t.row_type() == **row),
        (Value::Row(d, _, _), Type::TransactionRow(a) | Type::ValidRow(a)) => {
            value_has_type(schema, d, a)
        }
        (Value::Closure(c), Type::Function { arg, .. }) => {
            c.param_ty.as_ref().is_none_or(|p| p == &**arg)
        }
        _ => false,
    }
}

struct Checker<'a> {
    schema: &'a Schema,
    dialect: Dialect,
}

type TResult = Result<(Type, Effects), TypeError>;

fn err(kind: TypeErrorKind, t: &Term, message: impl Into<String>) -> TypeError {
    TypeError {
        kind,
        message: message.into(),
        location: locate(t),
        expected: None,
        found: None,
    }
}

fn mismatch(t: &Term, what: &str, expected: &Type, found: &Type) -> TypeError {
    TypeError {
        kind: TypeErrorKind::Mismatch,
        message: what.to_string(),
        location: locate(t),
        expected: Some(expected.clone()),
        found: Some(found.clone()),
    }
}

impl Checker<'_> {
    fn dialect_err(&self, t: &Term, what: &str) -> TypeError {
        err(
            TypeErrorKind::Dialect,
            t,
            format!(
                "{what} is not available in {} programs",
                self.dialect.name()
            ),
        )
    }

    fn check_type_dialect(&self, t: &Term, ty: &Type) -> Result<(), TypeError> {
        let (mut tt, mut vt) = (false, false);
        type_features(ty, &mut tt, &mut vt);
        let bad = match self.dialect {
            Dialect::Linq => tt || vt,
            Dialect::Transaction => vt,
            Dialect::Valid => tt,
        };
        if bad {
            return Err(self.dialect_err(t, &format!("type {ty}")));
        }
        Ok(())
    }

    fn with_var<R>(
        &self,
        env: &mut TypeEnv,
        name: &str,
        ty: Type,
        f: impl FnOnce(&Self, &mut TypeEnv) -> R,
    ) -> R {
        env.vars.push((name.to_string(), ty));
        let r = f(self, env);
        env.vars.pop();
        r
    }

    /// Checks `t` against `expected`.
    fn expect(
        &self,
        t: &mut Term,
        env: &mut TypeEnv,
        expected: &Type,
        what: &str,
    ) -> Result<Effects, TypeError> {
        let (ty, eff) = self.go(t, env, Some(expected))?;
        if &ty != expected {
            return Err(mismatch(t, what, expected, &ty));
        }
        Ok(eff)
    }

    fn expect_pure(
        &self,
        t: &mut Term,
        env: &mut TypeEnv,
        expected: &Type,
        what: &str,
    ) -> Result<(), TypeError> {
        let eff = self.expect(t, env, expected, what)?;
        if !eff.is_pure() {
            return Err(err(
                TypeErrorKind::EffectViolation,
                t,
                format!("{what} must be pure but has effects {eff}"),
            ));
        }
        Ok(())
    }

    /// Infers two terms that must share a type; either may supply the hint for the other.
    fn pair(
        &self,
        a: &mut Term,
        b: &mut Term,
        env: &mut TypeEnv,
        hint: Option<&Type>,
        what: &str,
    ) -> Result<(Type, Effects, Effects), TypeError> {
        match self.go(a, env, hint) {
            Ok((ta, ea)) => {
                let eb = self.expect(b, env, &ta, what)?;
                Ok((ta, ea, eb))
            }
            Err(e) if e.kind == TypeErrorKind::NeedsAnnotation && hint.is_none() => {
                let (tb, eb) = self.go(b, env, None)?;
                let ea = self.expect(a, env, &tb, what)?;
                Ok((tb, ea, eb))
            }
            Err(e) => Err(e),
        }
    }

    /// Table operand of a database term: its row record type and kind.
    fn table(
        &self,
        t: &mut Term,
        env: &mut TypeEnv,
    ) -> Result<(Type, TableKind, Effects), TypeError> {
        let (ty, eff) = self.go(t, env, None)?;
        match ty {
            Type::Table { row, kind } => Ok((*row, kind, eff)),
            other => Err(err(
                TypeErrorKind::Mismatch,
                t,
                format!("expected a table, found {other}"),
            )),
        }
    }

    fn annotation(&self, table: &Term, row: &Type, kind: TableKind) -> Result<TableAnn, TypeError> {
        let period = match table {
            Term::TableRef(name) => self.schema.get(name).map(|t| t.period.clone()),
            _ => {
                let mut candidates = self
                    .schema
                    .tables
                    .values()
                    .filter(|t| t.kind == kind && t.row_type() == *row)
                    .map(|t| &t.period);
                let first = candidates.next().cloned();
                if candidates.any(|p| Some(p) != first.as_ref()) {
                    return Err(err(
                        TypeErrorKind::Mismatch,
                        table,
                        "cannot tell which period columns this table uses; refer to the table by name",
                    ));
                }
                first
            }
        };
        let period = period.unwrap_or_else(|| ("start".into(), "end".into()));
        Ok(TableAnn {
            row: row.clone(),
            kind,
            period,
        })
    }

    fn set_ann(&self, t: &mut Term, ann: TableAnn) {
        if let Some(slot) = t.ann_mut() {
            *slot = Some(ann);
        }
    }

    fn assignments(
        &self,
        set: &mut [(String, Term)],
        env: &mut TypeEnv,
        row: &Type,
        whole: &Term,
    ) -> Result<(), TypeError> {
        let fields = row.as_record().cloned().unwrap_or_default();
        let mut seen: Vec<&str> = Vec::new();
        for (label, b) in set.iter_mut() {
            if seen.contains(&label.as_str()) {
                return Err(err(
                    TypeErrorKind::LabelError,
                    whole,
                    format!("field `{label}` assigned twice"),
                ));
            }
            seen.push(label);
            let Some(fty) = fields.get(label.as_str()) else {
                return Err(err(
                    TypeErrorKind::LabelError,
                    whole,
                    format!("table has no column `{label}`"),
                ));
            };
            self.expect_pure(b, env, fty, &format!("assignment to `{label}`"))?;
        }
        Ok(())
    }

    fn go(&self, t: &mut Term, env: &mut TypeEnv, hint: Option<&Type>) -> TResult {
        let whole = t.clone();
        match t {
            Term::Var(x) => match env.lookup(x) {
                Some(ty) => Ok((ty.clone(), Effects::PURE)),
                None => Err(err(
                    TypeErrorKind::UnknownVar,
                    &whole,
                    format!("unbound variable `{x}`"),
                )),
            },
            Term::Const(c) => Ok((Type::Base(c.base_type()), Effects::PURE)),
            Term::TableRef(name) => {
                let Some(ts) = self.schema.get(name) else {
                    return Err(err(
                        TypeErrorKind::UnknownTable,
                        &whole,
                        format!("unknown table `{name}`"),
                    ));
                };
                if !self.dialect.allows_table(ts.kind) {
                    return Err(
                        self.dialect_err(&whole, &format!("{} table `{name}`", ts.kind.name()))
                    );
                }
                Ok((ts.table_type(), Effects::PURE))
            }
            Term::Lambda {
                param,
                param_ty,
                body,
            } => {
                let arg = match (param_ty.as_ref(), hint) {
                    (Some(a), _) => a.clone(),
                    (None, Some(Type::Function { arg, .. })) => (**arg).clone(),
                    (None, _) => {
                        return Err(err(
                            TypeErrorKind::NeedsAnnotation,
                            &whole,
                            format!("parameter `{param}` needs a type annotation"),
                        ))
                    }
                };
                self.check_type_dialect(&whole, &arg)?;
                let body_hint = match hint {
                    Some(Type::Function { result, .. }) => Some(&**result),
                    _ => None,
                };
                let (res, eff) =
                    self.with_var(env, param, arg.clone(), |c, env| c.go(body, env, body_hint))?;
                Ok((Type::function(arg, res, eff), Effects::PURE))
            }
            Term::Apply(f, a) => {
                if let Term::Lambda {
                    param,
                    param_ty: None,
                    body,
                } = &mut **f
                {
                    let (at, ae) = self.go(a, env, None)?;
                    let (bt, be) = self.with_var(env, param, at, |c, env| c.go(body, env, hint))?;
                    return Ok((bt, ae.union(be)));
                }
                let (ft, fe) = self.go(f, env, None)?;
                let Type::Function {
                    arg,
                    result,
                    effects,
                } = ft
                else {
                    return Err(err(
                        TypeErrorKind::Mismatch,
                        &whole,
                        format!("applying a non-function of type {ft}"),
                    ));
                };
                let ae = self.expect(a, env, &arg, "function argument")?;
                Ok((*result, effects.union(fe).union(ae)))
            }
            Term::PrimOp(op, args) => self.prim(*op, args, env, &whole),
            Term::If(c, th, el) => {
                let ce = self.expect(c, env, &Type::BOOL, "condition")?;
                let (ty, e1, e2) = self.pair(th, el, env, hint, "else branch")?;
                Ok((ty, ce.union(e1).union(e2)))
            }
            Term::EmptyBag => match hint {
                Some(Type::Bag(e)) => Ok((Type::Bag(e.clone()), Effects::PURE)),
                _ => Err(err(
                    TypeErrorKind::NeedsAnnotation,
                    &whole,
                    "cannot determine the element type of `[||]`",
                )),
            },
            Term::Singleton(m) => {
                let h = match hint {
                    Some(Type::Bag(e)) => Some(&**e),
                    _ => None,
                };
                let (ty, eff) = self.go(m, env, h)?;
                Ok((Type::bag(ty), eff))
            }
            Term::Union(l, r) => {
                let (ty, e1, e2) = self.pair(l, r, env, hint, "union operand")?;
                if !matches!(ty, Type::Bag(_)) {
                    return Err(err(
                        TypeErrorKind::Mismatch,
                        &whole,
                        format!("union of non-bags of type {ty}"),
                    ));
                }
                Ok((ty, e1.union(e2)))
            }
            Term::For { var, source, body } => {
                let (st, se) = self.go(source, env, None)?;
                let Type::Bag(elem) = st else {
                    return Err(err(
                        TypeErrorKind::Mismatch,
                        &whole,
                        format!("comprehension over non-bag {st}"),
                    ));
                };
                let (bt, be) = self.with_var(env, var, *elem, |c, env| c.go(body, env, hint))?;
                if !matches!(bt, Type::Bag(_)) {
                    return Err(err(
                        TypeErrorKind::Mismatch,
                        &whole,
                        format!("comprehension body has type {bt}"),
                    ));
                }
                Ok((bt, se.union(be)))
            }
            Term::Record(fields) => {
                let mut tys = alloc::collections::BTreeMap::new();
                let mut eff = Effects::PURE;
                let hints = hint
                    .and_then(|h| h.as_record())
                    .cloned()
                    .unwrap_or_default();
                for (l, m) in fields.iter_mut() {
                    let (ty, e) = self.go(m, env, hints.get(l.as_str()))?;
                    if tys.insert(l.clone(), ty).is_some() {
                        return Err(err(
                            TypeErrorKind::LabelError,
                            &whole,
                            format!("duplicate field `{l}`"),
                        ));
                    }
                    eff = eff.union(e);
                }
                Ok((Type::Record(tys), eff))
            }
            Term::Project(m, l) => {
                let (ty, eff) = self.go(m, env, None)?;
                match ty.as_record().and_then(|r| r.get(l.as_str())) {
                    Some(f) => Ok((f.clone(), eff)),
                    None => Err(err(
                        TypeErrorKind::LabelError,
                        &whole,
                        format!("no field `{l}` in {ty}"),
                    )),
                }
            }
            Term::Now => Ok((Type::TIME, Effects::PURE)),
            Term::Query(m) => {
                let (ty, eff) = self.go(m, env, hint)?;
                let Type::Bag(elem) = &ty else {
                    return Err(err(
                        TypeErrorKind::Mismatch,
                        &whole,
                        format!("query body has type {ty}"),
                    ));
                };
                if !is_query_type(elem) {
                    return Err(err(
                        TypeErrorKind::NotQueryType,
                        &whole,
                        format!("{ty} is not a query type"),
                    ));
                }
                if !eff.is_subset_of(Effects::READ) {
                    return Err(err(
                        TypeErrorKind::EffectViolation,
                        &whole,
                        format!("query body has effects {eff}"),
                    ));
                }
                Ok((ty, eff))
            }
            Term::Get { table, .. } => {
                let (row, kind, eff) = self.table(table, env)?;
                let ann = self.annotation(table, &row, kind)?;
                self.set_ann(t, ann);
                Ok((
                    Type::bag(Type::temporal_row(kind, row)),
                    eff.union(Effects::READ),
                ))
            }
            Term::Insert { table, rows, .. } => {
                let (row, kind, eff) = self.table(table, env)?;
                self.expect_pure(rows, env, &Type::bag(row.clone()), "inserted rows")?;
                let ann = self.annotation(table, &row, kind)?;
                self.set_ann(t, ann);
                Ok((Type::unit(), eff.union(Effects::WRITE)))
            }
            Term::Update {
                var,
                table,
                pred,
                set,
                ..
            } => {
                let (row, kind, eff) = self.table(table, env)?;
                self.with_var(env, var, row.clone(), |c, env| {
                    c.expect_pure(pred, env, &Type::BOOL, "update predicate")?;
                    c.assignments(set, env, &row, &whole)
                })?;
                let ann = self.annotation(table, &row, kind)?;
                self.set_ann(t, ann);
                Ok((Type::unit(), eff.union(Effects::WRITE)))
            }
            Term::Delete {
                var, table, pred, ..
            } => {
                let (row, kind, eff) = self.table(table, env)?;
                self.with_var(env, var, row.clone(), |c, env| {
                    c.expect_pure(pred, env, &Type::BOOL, "delete predicate")
                })?;
                let ann = self.annotation(table, &row, kind)?;
                self.set_ann(t, ann);
                Ok((Type::unit(), eff.union(Effects::WRITE)))
            }
            Term::Row(d, s, e) => {
                if self.dialect != Dialect::Valid {
                    return Err(self.dialect_err(&whole, "`row`"));
                }
                let (dt, de) = self.go(d, env, None)?;
                if !dt.is_base_record() {
                    return Err(err(
                        TypeErrorKind::Mismatch,
                        &whole,
                        format!("row data must be a base record, found {dt}"),
                    ));
                }
                let se = self.expect(s, env, &Type::TIME, "row start")?;
                let ee = self.expect(e, env, &Type::TIME, "row end")?;
                Ok((Type::ValidRow(Box::new(dt)), de.union(se).union(ee)))
            }
            Term::Data(m) | Term::Start(m) | Term::End(m) => {
                if self.dialect == Dialect::Linq {
                    return Err(self.dialect_err(&whole, "row accessors"));
                }
                let (ty, eff) = self.go(m, env, None)?;
                let (Type::TransactionRow(d) | Type::ValidRow(d)) = ty else {
                    return Err(err(
                        TypeErrorKind::Mismatch,
                        &whole,
                        format!("expected a timestamped row, found {ty}"),
                    ));
                };
                let out = if matches!(whole, Term::Data(_)) {
                    *d
                } else {
                    Type::TIME
                };
                Ok((out, eff))
            }
            Term::SeqInsert { table, rows, .. } => {
                let (row, kind, eff) = self.valid_table(table, env, &whole)?;
                self.expect_pure(
                    rows,
                    env,
                    &Type::bag(Type::ValidRow(Box::new(row.clone()))),
                    "inserted rows",
                )?;
                let ann = self.annotation(table, &row, kind)?;
                self.set_ann(t, ann);
                Ok((Type::unit(), eff.union(Effects::WRITE)))
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
                let (row, kind, eff) = self.valid_table(table, env, &whole)?;
                self.expect_pure(from, env, &Type::TIME, "period start")?;
                self.expect_pure(to, env, &Type::TIME, "period end")?;
                self.with_var(env, var, row.clone(), |c, env| {
                    c.expect_pure(pred, env, &Type::BOOL, "update predicate")?;
                    c.assignments(set, env, &row, &whole)
                })?;
                let ann = self.annotation(table, &row, kind)?;
                self.set_ann(t, ann);
                Ok((Type::unit(), eff.union(Effects::WRITE)))
            }
            Term::SeqDelete {
                var,
                table,
                from,
                to,
                pred,
                ..
            } => {
                let (row, kind, eff) = self.valid_table(table, env, &whole)?;
                self.expect_pure(from, env, &Type::TIME, "period start")?;
                self.expect_pure(to, env, &Type::TIME, "period end")?;
                self.with_var(env, var, row.clone(), |c, env| {
                    c.expect_pure(pred, env, &Type::BOOL, "delete predicate")
                })?;
                let ann = self.annotation(table, &row, kind)?;
                self.set_ann(t, ann);
                Ok((Type::unit(), eff.union(Effects::WRITE)))
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
                let (row, kind, eff) = self.valid_table(table, env, &whole)?;
                let xt = Type::ValidRow(Box::new(row.clone()));
                self.with_var(env, var, xt, |c, env| {
                    c.expect_pure(pred, env, &Type::BOOL, "update predicate")?;
                    c.assignments(set, env, &row, &whole)?;
                    c.expect_pure(valid_from, env, &Type::TIME, "new period start")?;
                    c.expect_pure(valid_to, env, &Type::TIME, "new period end")
                })?;
                let ann = self.annotation(table, &row, kind)?;
                self.set_ann(t, ann);
                Ok((Type::unit(), eff.union(Effects::WRITE)))
            }
            Term::NonseqDelete {
                var, table, pred, ..
            } => {
                let (row, kind, eff) = self.valid_table(table, env, &whole)?;
                let xt = Type::ValidRow(Box::new(row.clone()));
                self.with_var(env, var, xt, |c, env| {
                    c.expect_pure(pred, env, &Type::BOOL, "delete predicate")
                })?;
                let ann = self.annotation(table, &row, kind)?;
                self.set_ann(t, ann);
                Ok((Type::unit(), eff.union(Effects::WRITE)))
            }
            Term::Join(m) => {
                let wrap = match self.dialect {
                    Dialect::Linq => return Err(self.dialect_err(&whole, "`join`")),
                    Dialect::Transaction => Type::TransactionRow,
                    Dialect::Valid => Type::ValidRow,
                };
                let (ty, eff) = self.go(m, env, None)?;
                let Type::Bag(elem) = ty else {
                    return Err(err(
                        TypeErrorKind::Mismatch,
                        &whole,
                        format!("join body has type {ty}"),
                    ));
                };
                if !elem.is_base_record() {
                    return Err(err(
                        TypeErrorKind::NotFlat,
                        &whole,
                        format!("join results must be records of base values, found {elem}"),
                    ));
                }
                if !eff.is_subset_of(Effects::READ) {
                    return Err(err(
                        TypeErrorKind::EffectViolation,
                        &whole,
                        format!("join body has effects {eff}"),
                    ));
                }
                Ok((Type::bag(wrap(elem)), eff))
            }
        }
    }

    fn valid_table(
        &self,
        t: &mut Term,
        env: &mut TypeEnv,
        whole: &Term,
    ) -> Result<(Type, TableKind, Effects), TypeError> {
        let (row, kind, eff) = self.table(t, env)?;
        if kind != TableKind::Valid {
            return Err(err(
                TypeErrorKind::Mismatch,
                whole,
                "sequenced and nonsequenced operations need a valid-time table",
            ));
        }
        Ok((row, kind, eff))
    }

    fn prim(&self, op: PrimOp, args: &mut [Term], env: &mut TypeEnv, whole: &Term) -> TResult {
        let mut tys = Vec::with_capacity(args.len());
        let mut eff = Effects::PURE;
        for a in args.iter_mut() {
            let (ty, e) = self.go(a, env, None)?;
            eff = eff.union(e);
            tys.push(ty);
        }
        let base = |i: usize| tys.get(i).and_then(Type::as_base);
        let arity = |n: usize| -> Result<(), TypeError> {
            if tys.len() != n {
                return Err(err(
                    TypeErrorKind::Mismatch,
                    whole,
                    format!("`{}` takes {n} arguments, given {}", op.symbol(), tys.len()),
                ));
            }
            Ok(())
        };
        let bad = |expected: &str| {
            let found: Vec<String> = tys.iter().map(|t| t.to_string()).collect();
            err(
                TypeErrorKind::Mismatch,
                whole,
                format!(
                    "`{}` expects {expected}, given ({})",
                    op.symbol(),
                    found.join(", ")
                ),
            )
        };
        let result = match op {
            PrimOp::Eq | PrimOp::Neq | PrimOp::Lt | PrimOp::Le | PrimOp::Gt | PrimOp::Ge => {
                arity(2)?;
                match (base(0), base(1)) {
                    (Some(a), Some(b)) if a == b => Type::BOOL,
                    _ => return Err(bad("two values of the same base type")),
                }
            }
            PrimOp::And | PrimOp::Or => {
                arity(2)?;
                if base(0) != Some(BaseType::Bool) || base(1) != Some(BaseType::Bool) {
                    return Err(bad("(bool, bool)"));
                }
                Type::BOOL
            }
            PrimOp::Not => {
                arity(1)?;
                if base(0) != Some(BaseType::Bool) {
                    return Err(bad("(bool)"));
                }
                Type::BOOL
            }
            PrimOp::Add | PrimOp::Sub => {
                arity(2)?;
                match (base(0), base(1)) {
                    (Some(BaseType::Int), Some(BaseType::Int)) => Type::INT,
                    (Some(BaseType::Time), Some(BaseType::Int)) => Type::TIME,
                    _ => return Err(bad("(int, int) or (time, int)")),
                }
            }
            PrimOp::Mul => {
                arity(2)?;
                if base(0) != Some(BaseType::Int) || base(1) != Some(BaseType::Int) {
                    return Err(bad("(int, int)"));
                }
                Type::INT
            }
            PrimOp::Greatest | PrimOp::Least => {
                if tys.iter().any(|t| t.as_base() != Some(BaseType::Time)) {
                    return Err(bad("times"));
                }
                Type::TIME
            }
            PrimOp::CheckPeriod => {
                arity(2)?;
                if base(0) != Some(BaseType::Time) || base(1) != Some(BaseType::Time) {
                    return Err(bad("(time, time)"));
                }
                Type::BOOL
            }
        };
        Ok((result, eff))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TableSchema;
    use crate::surface::parse_term;
    use alloc::collections::BTreeSet;

    fn schema() -> Schema {
        Schema::new()
            .with_table(
                "tasks",
                TableSchema::new(
                    TableKind::Transaction,
                    [("task", BaseType::String), ("done", BaseType::Bool)],
                ),
            )
            .with_table(
                "employees",
                TableSchema::new(
                    TableKind::Valid,
                    [
                        ("name", BaseType::String),
                        ("position", BaseType::String),
                        ("salary", BaseType::Int),
                    ],
                ),
            )
            .with_table(
                "plain",
                TableSchema::new(TableKind::Plain, [("a", BaseType::Int)]),
            )
    }

    fn check(src: &str) -> Result<Checked, TypeError> {
        let s = schema();
        let names: BTreeSet<String> = s.tables.keys().cloned().collect();
        let t = parse_term(src, &names).unwrap();
        check_program(&s, &t)
    }

    #[test]
    fn now_is_pure_time() {
        let (ty, eff) = infer(&Schema::new(), &TypeEnv::new(), &Term::Now, Dialect::Linq).unwrap();
        assert_eq!(ty, Type::TIME);
        assert!(eff.is_pure());
    }

    #[test]
    fn transaction_get_reads_rows() {
        let c = check("get tasks").unwrap();
        assert_eq!(c.dialect, Dialect::Transaction);
        let row = schema().get("tasks").unwrap().row_type();
        assert_eq!(c.ty, Type::bag(Type::TransactionRow(Box::new(row.clone()))));
        assert_eq!(c.effects, Effects::READ);
        let Term::Get { ann: Some(ann), .. } = c.term else {
            panic!()
        };
        assert_eq!(ann.row, row);
    }

    #[test]
    fn query_rejects_writes() {
        let e = check("query { insert plain values [|(a = 1)|]; [|1|] }").unwrap_err();
        assert_eq!(e.kind, TypeErrorKind::EffectViolation);
        assert!(e.to_string().contains("in: query"));
    }

    #[test]
    fn nonsequenced_binder_is_a_row() {
        let c = check(
            "update nonsequenced (x <- employees) where (data x).position == \"PhD Student\" set () valid from start x to end x + 1",
        )
        .unwrap();
        assert_eq!(c.dialect, Dialect::Valid);
        assert_eq!(c.effects, Effects::WRITE);
        assert!(check(
            "update nonsequenced (x <- employees) where x.name == \"a\" set () valid from @1 to @2"
        )
        .is_err());
    }

    #[test]
    fn query_types() {
        assert!(is_query_type(&Type::bag(Type::record([(
            "name",
            Type::STRING
        )]))));
        assert!(is_query_type(&Type::bag(Type::bag(Type::INT))));
        assert!(!is_query_type(&Type::function(
            Type::INT,
            Type::INT,
            Effects::PURE
        )));
    }

    #[test]
    fn predicates_must_be_pure() {
        let e = check(
            "delete (x <- plain) where (fun (u: ()) -> true) (insert plain values [|(a = 1)|])",
        )
        .unwrap_err();
        assert_eq!(e.kind, TypeErrorKind::EffectViolation, "{e}");
        let e = check("delete (x <- plain) where (query { get plain }) == [||]").unwrap_err();
        assert_eq!(e.kind, TypeErrorKind::NeedsAnnotation, "{e}");
    }

    #[test]
    fn empty_bags_take_their_type_from_context() {
        assert!(check("for (x <- get plain) where (x.a > 1) [|x.a|]").is_ok());
        assert!(check("[||] ++ [|1|]").is_ok());
        assert_eq!(
            check("[||]").unwrap_err().kind,
            TypeErrorKind::NeedsAnnotation
        );
        assert!(check("insert plain values [||]").is_ok());
    }

    #[test]
    fn dialects_do_not_mix() {
        assert_eq!(
            check("get tasks; get employees").unwrap_err().kind,
            TypeErrorKind::Dialect
        );
        assert_eq!(
            check("row((a = 1), @1, @2)").unwrap().dialect,
            Dialect::Valid
        );
        assert_eq!(check("get plain").unwrap().dialect, Dialect::Linq);
    }

    #[test]
    fn join_is_flat_and_read_only() {
        let c = check("join { for (e <v- employees) [|(n = (data e).name)|] }").unwrap();
        assert_eq!(
            c.ty,
            Type::bag(Type::ValidRow(Box::new(Type::record([(
                "n",
                Type::STRING
            )]))))
        );
        let e = check("join { for (e <v- employees) [|[|1|]|] }").unwrap_err();
        assert_eq!(e.kind, TypeErrorKind::NotFlat);
    }

    #[test]
    fn annotation_is_idempotent() {
        let s = schema();
        let c = check("delete (x <- tasks) where x.task == \"Watch TV\"").unwrap();
        let again = annotate(&s, &c.term, c.dialect).unwrap();
        assert_eq!(again, c.term);
        let Term::Delete { ann: Some(ann), .. } = &c.term else {
            panic!()
        };
        assert_eq!(
            ann.row,
            Type::record([("task", Type::STRING), ("done", Type::BOOL)])
        );
    }
}
