//! Reference big-step interpreter for all three dialects.
//!
//! One evaluator covers plain, transaction-time and valid-time programs: the
//! behaviour of a database operation is chosen by the kind of table it acts
//! on. Evaluation happens at a fixed clock and is atomic: if a dynamic period
//! check fails the database is left exactly as it was.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::model::{
    flatten_db, record_with, Bag, Closure, Const, Database, Env, PrimOp, Schema, TableKind, Term,
    Time, Value,
};
use crate::querycomp::{normalize_with_env, rewrite_sequenced_join, HeadStyle};
use crate::translate::current_as_sequenced;
use crate::typecheck::{dialect_of, Dialect};

/// Which side effects evaluation may perform.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Mode {
    /// No database access at all.
    Pure,
    /// Reads only.
    Read,
    Full,
}

/// How current (non-sequenced, non-nonsequenced) modifications of valid-time
/// tables are evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum CurrentMode {
    /// The dedicated three-case rules for current updates and deletes.
    #[default]
    Direct,
    /// Rewrite to a sequenced operation between `now` and `forever` first.
    Desugar,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EvalError {
    /// A declared dynamic check failed; the transaction is rolled back.
    Aborted(String),
    /// No rule applies. Unreachable for well-typed programs.
    Internal(String),
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::Aborted(m) => write!(f, "aborted: {m}"),
            EvalError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl core::error::Error for EvalError {}

/// Number of times each evaluation rule fired, keyed by rule name.
pub type Coverage = BTreeMap<&'static str, usize>;

/// Rules of the plain calculus.
pub const LINQ_RULES: &[&str] = &[
    "E-Var",
    "E-Const",
    "E-Lam",
    "E-App",
    "E-Op",
    "E-IfT",
    "E-IfF",
    "E-EmptyBag",
    "E-Bag",
    "E-BagUnion",
    "E-Record",
    "E-Project",
    "E-Now",
    "E-Query",
    "E-ForEmpty",
    "E-For",
    "E-Get",
    "E-Insert",
    "E-Update",
    "E-Delete",
];

/// Rules specific to transaction-time tables.
pub const TRANSACTION_RULES: &[&str] = &[
    "ET-Get",
    "ET-Insert",
    "ET-Update",
    "ET-Delete",
    "ET-Data",
    "ET-Start",
    "ET-End",
];

/// Rules specific to valid-time tables, including the overlap cases.
pub const VALID_RULES: &[&str] = &[
    "EV-Get",
    "EV-Row",
    "EV-Data",
    "EV-Start",
    "EV-End",
    "EV-Insert",
    "EV-Update",
    "EV-Delete",
    "EV-SeqInsert",
    "EV-SeqUpdate",
    "EV-SeqDelete",
    "EV-NonseqUpdate",
    "EV-NonseqDelete",
    "EV-SeqUpdate/1",
    "EV-SeqUpdate/2",
    "EV-SeqUpdate/3",
    "EV-SeqUpdate/4",
    "EV-SeqUpdate/5",
    "EV-SeqDelete/1",
    "EV-SeqDelete/2",
    "EV-SeqDelete/3",
    "EV-SeqDelete/4",
    "EV-SeqDelete/5",
];

/// Interpreter state for one program run.
pub struct Interp<'s> {
    schema: &'s Schema,
    pub db: Database,
    clock: Time,
    current: CurrentMode,
    dialect: Dialect,
    pub coverage: Coverage,
}

fn internal<T>(msg: impl Into<String>) -> Result<T, EvalError> {
    Err(EvalError::Internal(msg.into()))
}

fn bind(env: &Env, x: &str, v: Value) -> Env {
    let mut e = env.clone();
    e.insert(x.to_string(), v);
    e
}

/// Which of the five overlap cases a row period falls into for the period of
/// applicability `[a_start, a_end)`. Case 5 covers both a false predicate and
/// periods that do not overlap at all.
pub fn overlap_case(a_start: Time, a_end: Time, start: Time, end: Time) -> u8 {
    if !(a_start < end && a_end > start) {
        return 5;
    }
    match (a_start <= start, a_end >= end) {
        (true, true) => 1,
        (true, false) => 2,
        (false, false) => 3,
        (false, true) => 4,
    }
}

impl<'s> Interp<'s> {
    pub fn new(schema: &'s Schema, db: Database, clock: Time) -> Interp<'s> {
        Interp {
            schema,
            db,
            clock,
            current: CurrentMode::Direct,
            dialect: Dialect::Linq,
            coverage: Coverage::new(),
        }
    }

    pub fn with_current(mut self, mode: CurrentMode) -> Interp<'s> {
        self.current = mode;
        self
    }

    pub fn clock(&self) -> Time {
        self.clock
    }

    fn hit(&mut self, rule: &'static str) {
        *self.coverage.entry(rule).or_insert(0) += 1;
    }

    /// Runs a closed program in full mode. On failure the database is restored.
    pub fn run(&mut self, term: &Term) -> Result<Value, EvalError> {
        self.dialect = dialect_of(self.schema, term).unwrap_or(Dialect::Linq);
        let saved = self.db.clone();
        let out = self.eval(&Env::new(), term, Mode::Full);
        if out.is_err() {
            self.db = saved;
        }
        out
    }

    fn kind_of(&self, name: &str) -> Result<TableKind, EvalError> {
        match self.schema.get(name) {
            Some(t) => Ok(t.kind),
            None => internal(format!("unknown table `{name}`")),
        }
    }

    fn table_rows(&self, name: &str) -> Bag {
        self.db.table(name).cloned().unwrap_or_default()
    }

    fn table_value(&mut self, env: &Env, t: &Term, mode: Mode) -> Result<String, EvalError> {
        match self.eval(env, t, mode)? {
            Value::Table(name) => Ok(name),
            other => internal(format!("expected a table, found {other}")),
        }
    }

    fn eval_bool(&mut self, env: &Env, t: &Term, mode: Mode) -> Result<bool, EvalError> {
        match self.eval(env, t, mode)? {
            Value::Const(Const::Bool(b)) => Ok(b),
            other => internal(format!("expected a boolean, found {other}")),
        }
    }

    fn eval_time(&mut self, env: &Env, t: &Term, mode: Mode) -> Result<Time, EvalError> {
        match self.eval(env, t, mode)? {
            Value::Const(Const::Time(x)) => Ok(x),
            other => internal(format!("expected a time, found {other}")),
        }
    }

    fn eval_bag(&mut self, env: &Env, t: &Term, mode: Mode) -> Result<Bag, EvalError> {
        match self.eval(env, t, mode)? {
            Value::Bag(b) => Ok(b),
            other => internal(format!("expected a bag, found {other}")),
        }
    }

    fn require(&self, mode: Mode, needed: Mode, what: &str) -> Result<(), EvalError> {
        if mode < needed {
            return internal(format!("{what} attempted in {mode:?} evaluation"));
        }
        Ok(())
    }

    fn assignments(
        &mut self,
        env: &Env,
        set: &[(String, Term)],
    ) -> Result<Vec<(String, Value)>, EvalError> {
        set.iter()
            .map(|(l, b)| Ok((l.clone(), self.eval(env, b, Mode::Pure)?)))
            .collect()
    }

    fn with(&self, data: &Value, updates: &[(String, Value)]) -> Result<Value, EvalError> {
        match data {
            Value::Record(r) => record_with(r, updates)
                .map(Value::Record)
                .map_err(|e| EvalError::Internal(e.to_string())),
            other => internal(format!("cannot update non-record {other}")),
        }
    }

    fn row_parts(v: &Value) -> Result<(&Value, Time, Time), EvalError> {
        v.as_row()
            .ok_or_else(|| EvalError::Internal(format!("expected a timestamped row, found {v}")))
    }

    /// Evaluates `t` under `env`, threading the database through `self`.
    pub fn eval(&mut self, env: &Env, t: &Term, mode: Mode) -> Result<Value, EvalError> {
        match t {
            Term::Var(x) => {
                self.hit("E-Var");
                env.get(x)
                    .cloned()
                    .ok_or_else(|| EvalError::Internal(format!("unbound variable `{x}`")))
            }
            Term::Const(c) => {
                self.hit("E-Const");
                Ok(Value::Const(c.clone()))
            }
            Term::TableRef(name) => Ok(Value::Table(name.clone())),
            Term::Lambda {
                param,
                param_ty,
                body,
            } => {
                self.hit("E-Lam");
                let free = t.free_vars();
                let captured: Env = env
                    .iter()
                    .filter(|(k, _)| free.contains(*k))
                    .map(|(k, v)| (k.clone(), v.clone()))
                    .collect();
                Ok(Value::Closure(Arc::new(Closure {
                    param: param.clone(),
                    param_ty: param_ty.clone(),
                    body: (**body).clone(),
                    env: captured,
                })))
            }
            Term::Apply(f, a) => {
                let fv = self.eval(env, f, mode)?;
                let av = self.eval(env, a, mode)?;
                self.hit("E-App");
                match fv {
                    Value::Closure(c) => {
                        let inner = bind(&c.env, &c.param, av);
                        self.eval(&inner, &c.body, mode)
                    }
                    other => internal(format!("applying non-function {other}")),
                }
            }
            Term::PrimOp(op, args) => {
                let vals = args
                    .iter()
                    .map(|a| self.eval(env, a, mode))
                    .collect::<Result<Vec<_>, _>>()?;
                self.hit("E-Op");
                apply_prim(*op, &vals)
            }
            Term::If(c, th, el) => {
                if self.eval_bool(env, c, mode)? {
                    self.hit("E-IfT");
                    self.eval(env, th, mode)
                } else {
                    self.hit("E-IfF");
                    self.eval(env, el, mode)
                }
            }
            Term::EmptyBag => {
                self.hit("E-EmptyBag");
                Ok(Value::Bag(Bag::new()))
            }
            Term::Singleton(m) => {
                let v = self.eval(env, m, mode)?;
                self.hit("E-Bag");
                Ok(Value::Bag(Bag::singleton(v)))
            }
            Term::Union(l, r) => {
                let a = self.eval_bag(env, l, mode)?;
                let b = self.eval_bag(env, r, mode)?;
                self.hit("E-BagUnion");
                Ok(Value::Bag(a.union(b)))
            }
            Term::For { var, source, body } => {
                let src = self.eval_bag(env, source, mode)?;
                if src.is_empty() {
                    self.hit("E-ForEmpty");
                    return Ok(Value::Bag(Bag::new()));
                }
                self.hit("E-For");
                let mut out = Bag::new();
                for (v, n) in src.counts() {
                    let inner = bind(env, var, v.clone());
                    if mode == Mode::Full {
                        for _ in 0..*n {
                            out.extend_bag(self.eval_bag(&inner, body, mode)?);
                        }
                    } else {
                        let b = self.eval_bag(&inner, body, mode)?;
                        for (w, m) in b.counts() {
                            out.insert_n(w.clone(), m * n);
                        }
                    }
                }
                Ok(Value::Bag(out))
            }
            Term::Record(fields) => {
                let mut r = BTreeMap::new();
                for (l, m) in fields {
                    let v = self.eval(env, m, mode)?;
                    r.insert(l.clone(), v);
                }
                self.hit("E-Record");
                Ok(Value::Record(r))
            }
            Term::Project(m, l) => {
                let v = self.eval(env, m, mode)?;
                self.hit("E-Project");
                match v {
                    Value::Record(mut r) => r
                        .remove(l)
                        .ok_or_else(|| EvalError::Internal(format!("no field `{l}`"))),
                    other => internal(format!("projecting `{l}` from non-record {other}")),
                }
            }
            Term::Now => {
                self.hit("E-Now");
                Ok(Value::time(self.clock))
            }
            Term::Query(m) => {
                self.require(mode, Mode::Read, "query")?;
                self.hit("E-Query");
                self.eval(env, m, Mode::Read)
            }
            Term::Get { table, .. } => {
                self.require(mode, Mode::Read, "get")?;
                let name = self.table_value(env, table, mode)?;
                let rule = match self.kind_of(&name)? {
                    TableKind::Plain => "E-Get",
                    TableKind::Transaction => "ET-Get",
                    TableKind::Valid => "EV-Get",
                };
                self.hit(rule);
                Ok(Value::Bag(self.table_rows(&name)))
            }
            Term::Data(m) | Term::Start(m) | Term::End(m) => {
                let v = self.eval(env, m, mode)?;
                let (d, s, e) = Self::row_parts(&v)?;
                let tt = self.dialect == Dialect::Transaction;
                let (rule, out) = match t {
                    Term::Data(_) => (if tt { "ET-Data" } else { "EV-Data" }, d.clone()),
                    Term::Start(_) => (if tt { "ET-Start" } else { "EV-Start" }, Value::time(s)),
                    _ => (if tt { "ET-End" } else { "EV-End" }, Value::time(e)),
                };
                self.hit(rule);
                Ok(out)
            }
            Term::Row(d, s, e) => {
                let dv = self.eval(env, d, mode)?;
                let sv = self.eval_time(env, s, mode)?;
                let ev = self.eval_time(env, e, mode)?;
                self.hit("EV-Row");
                Ok(Value::row(dv, sv, ev))
            }
            Term::Insert { table, rows, .. } => {
                self.require(mode, Mode::Full, "insert")?;
                let name = self.table_value(env, table, mode)?;
                let kind = self.kind_of(&name)?;
                if kind == TableKind::Valid && self.current == CurrentMode::Desugar {
                    return self.eval_desugared(env, t, name);
                }
                let new = self.eval_bag(env, rows, Mode::Pure)?;
                let new = match kind {
                    TableKind::Plain => {
                        self.hit("E-Insert");
                        new
                    }
                    TableKind::Transaction | TableKind::Valid => {
                        self.hit(if kind == TableKind::Valid {
                            "EV-Insert"
                        } else {
                            "ET-Insert"
                        });
                        let clock = self.clock;
                        new.into_iter()
                            .map(|d| Value::row(d, clock, Time::FOREVER))
                            .collect()
                    }
                };
                let rows = self.table_rows(&name).union(new);
                self.db.set_table(name, rows);
                Ok(Value::unit())
            }
            Term::Update {
                var,
                table,
                pred,
                set,
                ..
            } => {
                self.require(mode, Mode::Full, "update")?;
                let name = self.table_value(env, table, mode)?;
                let kind = self.kind_of(&name)?;
                if kind == TableKind::Valid && self.current == CurrentMode::Desugar {
                    return self.eval_desugared(env, t, name);
                }
                let clock = self.clock;
                let mut out = Bag::new();
                for (row, n) in self.table_rows(&name).counts() {
                    let data = match kind {
                        TableKind::Plain => row,
                        _ => Self::row_parts(row)?.0,
                    };
                    let inner = bind(env, var, data.clone());
                    let matched = self.eval_bool(&inner, pred, Mode::Pure)?;
                    match kind {
                        TableKind::Plain => {
                            if matched {
                                let updates = self.assignments(&inner, set)?;
                                out.insert_n(self.with(row, &updates)?, *n);
                            } else {
                                out.insert_n(row.clone(), *n);
                            }
                        }
                        TableKind::Transaction => {
                            let (d, s, e) = Self::row_parts(row)?;
                            if matched && e.is_forever() {
                                let updates = self.assignments(&inner, set)?;
                                out.insert_n(Value::row(d.clone(), s, clock), *n);
                                out.insert_n(
                                    Value::row(self.with(d, &updates)?, clock, Time::FOREVER),
                                    *n,
                                );
                            } else {
                                out.insert_n(row.clone(), *n);
                            }
                        }
                        TableKind::Valid => {
                            let (d, s, e) = Self::row_parts(row)?;
                            if matched && clock <= s {
                                let updates = self.assignments(&inner, set)?;
                                out.insert_n(Value::row(self.with(d, &updates)?, s, e), *n);
                            } else if matched && s < clock && clock < e {
                                let updates = self.assignments(&inner, set)?;
                                out.insert_n(Value::row(d.clone(), s, clock), *n);
                                out.insert_n(Value::row(self.with(d, &updates)?, clock, e), *n);
                            } else {
                                out.insert_n(row.clone(), *n);
                            }
                        }
                    }
                }
                self.hit(match kind {
                    TableKind::Plain => "E-Update",
                    TableKind::Transaction => "ET-Update",
                    TableKind::Valid => "EV-Update",
                });
                self.db.set_table(name, out);
                Ok(Value::unit())
            }
            Term::Delete {
                var, table, pred, ..
            } => {
                self.require(mode, Mode::Full, "delete")?;
                let name = self.table_value(env, table, mode)?;
                let kind = self.kind_of(&name)?;
                if kind == TableKind::Valid && self.current == CurrentMode::Desugar {
                    return self.eval_desugared(env, t, name);
                }
                let clock = self.clock;
                let mut out = Bag::new();
                for (row, n) in self.table_rows(&name).counts() {
                    let data = match kind {
                        TableKind::Plain => row,
                        _ => Self::row_parts(row)?.0,
                    };
                    let matched =
                        self.eval_bool(&bind(env, var, data.clone()), pred, Mode::Pure)?;
                    match kind {
                        TableKind::Plain => {
                            if !matched {
                                out.insert_n(row.clone(), *n);
                            }
                        }
                        TableKind::Transaction => {
                            let (d, s, e) = Self::row_parts(row)?;
                            if matched && e.is_forever() {
                                out.insert_n(Value::row(d.clone(), s, clock), *n);
                            } else {
                                out.insert_n(row.clone(), *n);
                            }
                        }
                        TableKind::Valid => {
                            let (d, s, e) = Self::row_parts(row)?;
                            if matched && clock <= s {
                            } else if matched && s < clock && clock < e {
                                out.insert_n(Value::row(d.clone(), s, clock), *n);
                            } else {
                                out.insert_n(row.clone(), *n);
                            }
                        }
                    }
                }
                self.hit(match kind {
                    TableKind::Plain => "E-Delete",
                    TableKind::Transaction => "ET-Delete",
                    TableKind::Valid => "EV-Delete",
                });
                self.db.set_table(name, out);
                Ok(Value::unit())
            }
            Term::SeqInsert { table, rows, .. } => {
                self.require(mode, Mode::Full, "insert")?;
                let name = self.table_value(env, table, mode)?;
                let new = self.eval_bag(env, rows, Mode::Pure)?;
                for r in new.iter() {
                    let (_, s, e) = Self::row_parts(r)?;
                    if s >= e {
                        return Err(EvalError::Aborted(format!(
                            "inserted row {r} has an empty period"
                        )));
                    }
                }
                self.hit("EV-SeqInsert");
                let rows = self.table_rows(&name).union(new);
                self.db.set_table(name, rows);
                Ok(Value::unit())
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
                self.require(mode, Mode::Full, "update")?;
                let name = self.table_value(env, table, mode)?;
                let (a_start, a_end) = self.period_of_applicability(env, from, to)?;
                let mut out = Bag::new();
                for (row, n) in self.table_rows(&name).counts() {
                    let (d, s, e) = Self::row_parts(row)?;
                    let inner = bind(env, var, d.clone());
                    let matched = self.eval_bool(&inner, pred, Mode::Pure)?;
                    let case = if matched {
                        overlap_case(a_start, a_end, s, e)
                    } else {
                        5
                    };
                    self.hit(
                        [
                            "",
                            "EV-SeqUpdate/1",
                            "EV-SeqUpdate/2",
                            "EV-SeqUpdate/3",
                            "EV-SeqUpdate/4",
                            "EV-SeqUpdate/5",
                        ][case as usize],
                    );
                    if case == 5 {
                        out.insert_n(row.clone(), *n);
                        continue;
                    }
                    let updates = self.assignments(&inner, set)?;
                    let w = self.with(d, &updates)?;
                    let pieces = match case {
                        1 => Vec::from([Value::row(w, s, e)]),
                        2 => Vec::from([Value::row(w, s, a_end), Value::row(d.clone(), a_end, e)]),
                        3 => Vec::from([
                            Value::row(d.clone(), s, a_start),
                            Value::row(w, a_start, a_end),
                            Value::row(d.clone(), a_end, e),
                        ]),
                        _ => Vec::from([
                            Value::row(d.clone(), s, a_start),
                            Value::row(w, a_start, e),
                        ]),
                    };
                    for p in pieces {
                        out.insert_n(p, *n);
                    }
                }
                self.hit("EV-SeqUpdate");
                self.db.set_table(name, out);
                Ok(Value::unit())
            }
            Term::SeqDelete {
                var,
                table,
                from,
                to,
                pred,
                ..
            } => {
                self.require(mode, Mode::Full, "delete")?;
                let name = self.table_value(env, table, mode)?;
                let (a_start, a_end) = self.period_of_applicability(env, from, to)?;
                let mut out = Bag::new();
                for (row, n) in self.table_rows(&name).counts() {
                    let (d, s, e) = Self::row_parts(row)?;
                    let matched = self.eval_bool(&bind(env, var, d.clone()), pred, Mode::Pure)?;
                    let case = if matched {
                        overlap_case(a_start, a_end, s, e)
                    } else {
                        5
                    };
                    self.hit(
                        [
                            "",
                            "EV-SeqDelete/1",
                            "EV-SeqDelete/2",
                            "EV-SeqDelete/3",
                            "EV-SeqDelete/4",
                            "EV-SeqDelete/5",
                        ][case as usize],
                    );
                    let pieces = match case {
                        1 => Vec::new(),
                        2 => Vec::from([Value::row(d.clone(), a_end, e)]),
                        3 => Vec::from([
                            Value::row(d.clone(), s, a_start),
                            Value::row(d.clone(), a_end, e),
                        ]),
                        4 => Vec::from([Value::row(d.clone(), s, a_start)]),
                        _ => Vec::from([row.clone()]),
                    };
                    for p in pieces {
                        out.insert_n(p, *n);
                    }
                }
                self.hit("EV-SeqDelete");
                self.db.set_table(name, out);
                Ok(Value::unit())
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
                self.require(mode, Mode::Full, "update")?;
                let name = self.table_value(env, table, mode)?;
                let mut out = Bag::new();
                for (row, n) in self.table_rows(&name).counts() {
                    let inner = bind(env, var, row.clone());
                    if !self.eval_bool(&inner, pred, Mode::Pure)? {
                        out.insert_n(row.clone(), *n);
                        continue;
                    }
                    let updates = self.assignments(&inner, set)?;
                    let s = self.eval_time(&inner, valid_from, Mode::Pure)?;
                    let e = self.eval_time(&inner, valid_to, Mode::Pure)?;
                    if s >= e {
                        return Err(EvalError::Aborted(format!(
                            "updated row {row} would have the empty period [{s}, {e})"
                        )));
                    }
                    let (d, _, _) = Self::row_parts(row)?;
                    out.insert_n(Value::row(self.with(d, &updates)?, s, e), *n);
                }
                self.hit("EV-NonseqUpdate");
                self.db.set_table(name, out);
                Ok(Value::unit())
            }
            Term::NonseqDelete {
                var, table, pred, ..
            } => {
                self.require(mode, Mode::Full, "delete")?;
                let name = self.table_value(env, table, mode)?;
                let mut out = Bag::new();
                for (row, n) in self.table_rows(&name).counts() {
                    if !self.eval_bool(&bind(env, var, row.clone()), pred, Mode::Pure)? {
                        out.insert_n(row.clone(), *n);
                    }
                }
                self.hit("EV-NonseqDelete");
                self.db.set_table(name, out);
                Ok(Value::unit())
            }
            Term::Join(body) => {
                self.require(mode, Mode::Read, "join")?;
                self.hit("EV-Join");
                self.eval_join(env, body)
            }
        }
    }

    fn period_of_applicability(
        &mut self,
        env: &Env,
        from: &Term,
        to: &Term,
    ) -> Result<(Time, Time), EvalError> {
        let a_start = self.eval_time(env, from, Mode::Pure)?;
        let a_end = self.eval_time(env, to, Mode::Pure)?;
        if a_start >= a_end {
            return Err(EvalError::Aborted(format!(
                "period of applicability [{a_start}, {a_end}) is empty"
            )));
        }
        Ok((a_start, a_end))
    }

    /// Evaluates a current modification as the equivalent sequenced one, with
    /// the already evaluated table bound to a name no program can mention.
    fn eval_desugared(&mut self, env: &Env, t: &Term, table: String) -> Result<Value, EvalError> {
        const TABLE_VAR: &str = "%table";
        let mut node = t.clone();
        match &mut node {
            Term::Insert { table: tb, .. }
            | Term::Update { table: tb, .. }
            | Term::Delete { table: tb, .. } => {
                **tb = Term::var(TABLE_VAR);
            }
            _ => return internal("only current modifications are desugared"),
        }
        let seq = current_as_sequenced(&node)
            .ok_or_else(|| EvalError::Internal("not a current modification".into()))?;
        self.eval(&bind(env, TABLE_VAR, Value::Table(table)), &seq, Mode::Full)
    }

    /// Sequenced join: normalise the body, intersect the periods of its
    /// temporal generators and run the result over the flattened database.
    fn eval_join(&mut self, env: &Env, body: &Term) -> Result<Value, EvalError> {
        let nf = normalize_with_env(self.schema, env, body)
            .map_err(|e| EvalError::Internal(e.to_string()))?;
        let rewritten = rewrite_sequenced_join(&nf, HeadStyle::Row)
            .map_err(|e| EvalError::Internal(e.to_string()))?;
        let flat_schema = self.schema.flattened();
        let flat_db =
            flatten_db(self.schema, &self.db).map_err(|e| EvalError::Internal(e.to_string()))?;
        let mut sub = Interp::new(&flat_schema, flat_db, self.clock);
        sub.dialect = Dialect::Valid;
        let out = sub.eval(&Env::new(), &rewritten, Mode::Read);
        for (k, v) in sub.coverage {
            *self.coverage.entry(k).or_insert(0) += v;
        }
        out
    }
}

fn as_time(v: &Value) -> Result<Time, EvalError> {
    v.as_time()
        .ok_or_else(|| EvalError::Internal(format!("expected a time, found {v}")))
}

fn as_int(v: &Value) -> Result<i64, EvalError> {
    match v {
        Value::Const(Const::Int(i)) => Ok(*i),
        other => internal(format!("expected an int, found {other}")),
    }
}

fn as_bool(v: &Value) -> Result<bool, EvalError> {
    v.as_bool()
        .ok_or_else(|| EvalError::Internal(format!("expected a boolean, found {v}")))
}

/// Applies a primitive operator to evaluated arguments.
pub fn apply_prim(op: PrimOp, args: &[Value]) -> Result<Value, EvalError> {
    let arg = |i: usize| {
        args.get(i)
            .ok_or_else(|| EvalError::Internal(format!("`{}` is missing an argument", op.symbol())))
    };
    Ok(match op {
        PrimOp::Eq => Value::bool(arg(0)? == arg(1)?),
        PrimOp::Neq => Value::bool(arg(0)? != arg(1)?),
        PrimOp::Lt => Value::bool(arg(0)? < arg(1)?),
        PrimOp::Le => Value::bool(arg(0)? <= arg(1)?),
        PrimOp::Gt => Value::bool(arg(0)? > arg(1)?),
        PrimOp::Ge => Value::bool(arg(0)? >= arg(1)?),
        PrimOp::And => Value::bool(as_bool(arg(0)?)? && as_bool(arg(1)?)?),
        PrimOp::Or => Value::bool(as_bool(arg(0)?)? || as_bool(arg(1)?)?),
        PrimOp::Not => Value::bool(!as_bool(arg(0)?)?),
        PrimOp::Add | PrimOp::Sub => {
            let delta = as_int(arg(1)?)?;
            match arg(0)? {
                Value::Const(Const::Time(t)) => Value::time(t.shift(if op == PrimOp::Add {
                    delta
                } else {
                    delta.wrapping_neg()
                })),
                other => {
                    let base = as_int(other)?;
                    Value::int(if op == PrimOp::Add {
                        base.wrapping_add(delta)
                    } else {
                        base.wrapping_sub(delta)
                    })
                }
            }
        }
        PrimOp::Mul => Value::int(as_int(arg(0)?)?.wrapping_mul(as_int(arg(1)?)?)),
        PrimOp::Greatest => {
            let ts = args.iter().map(as_time).collect::<Result<Vec<_>, _>>()?;
            Value::time(ts.into_iter().max().unwrap_or(Time::BEGINNING))
        }
        PrimOp::Least => {
            let ts = args.iter().map(as_time).collect::<Result<Vec<_>, _>>()?;
            Value::time(ts.into_iter().min().unwrap_or(Time::FOREVER))
        }
        PrimOp::CheckPeriod => {
            let (s, e) = (as_time(arg(0)?)?, as_time(arg(1)?)?);
            if s >= e {
                return Err(EvalError::Aborted(format!("period [{s}, {e}) is empty")));
            }
            Value::bool(true)
        }
    })
}

/// Runs a closed program atomically, returning the result and the new
/// database. The input database is never modified.
pub fn evaluate(
    schema: &Schema,
    db: &Database,
    clock: Time,
    term: &Term,
    current: CurrentMode,
) -> Result<(Value, Database), EvalError> {
    let mut it = Interp::new(schema, db.clone(), clock).with_current(current);
    let v = it.run(term)?;
    Ok((v, it.db))
}

/// Like [`evaluate`], also returning rule coverage.
pub fn evaluate_with_coverage(
    schema: &Schema,
    db: &Database,
    clock: Time,
    term: &Term,
    current: CurrentMode,
) -> (Result<(Value, Database), EvalError>, Coverage) {
    let mut it = Interp::new(schema, db.clone(), clock).with_current(current);
    let r = it.run(term);
    let cov = core::mem::take(&mut it.coverage);
    (r.map(|v| (v, it.db)), cov)
}

/// Evaluates a term in a restricted mode without touching any database.
pub fn eval_pure(term: &Term, env: &Env, clock: Time) -> Result<Value, EvalError> {
    let schema = Schema::new();
    Interp::new(&schema, Database::new(), clock).eval(env, term, Mode::Pure)
}

/// Evaluates a read-only term against a database.
pub fn eval_read(
    schema: &Schema,
    db: &Database,
    clock: Time,
    term: &Term,
) -> Result<Value, EvalError> {
    Interp::new(schema, db.clone(), clock).eval(&Env::new(), term, Mode::Read)
}

/// Converts a value back into a closed term that evaluates to it.
pub fn value_to_term(v: &Value) -> Term {
    match v {
        Value::Const(c) => Term::Const(c.clone()),
        Value::Table(name) => Term::TableRef(name.clone()),
        Value::Record(r) => Term::Record(
            r.iter()
                .map(|(l, v)| (l.clone(), value_to_term(v)))
                .collect(),
        ),
        Value::Bag(b) => {
            let items: Vec<Term> = b.iter().map(value_to_term).collect();
            Term::bag_of(items)
        }
        Value::Row(d, s, e) => Term::Row(
            Box::new(value_to_term(d)),
            Box::new(Term::time(*s)),
            Box::new(Term::time(*e)),
        ),
        Value::Closure(c) => {
            let mut t = Term::Lambda {
                param: c.param.clone(),
                param_ty: c.param_ty.clone(),
                body: Box::new(c.body.clone()),
            };
            for (x, v) in c.env.iter().rev() {
                t = Term::let_in(x.clone(), value_to_term(v), t);
            }
            t
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BaseType, TableSchema};
    use crate::surface::parse_term;
    use alloc::collections::BTreeSet;
    use alloc::vec;

    fn parse(src: &str, schema: &Schema) -> Term {
        let names: BTreeSet<String> = schema.tables.keys().cloned().collect();
        parse_term(src, &names).unwrap()
    }

    fn one_row_valid(s: i64, e: i64) -> (Schema, Database) {
        let schema = Schema::new().with_table(
            "t",
            TableSchema::new(TableKind::Valid, [("v", BaseType::Int)]),
        );
        let mut db = Database::new();
        db.set_table(
            "t",
            Bag::singleton(Value::row(
                Value::record([("v", Value::int(0))]),
                Time::new(s),
                Time::new(e),
            )),
        );
        (schema, db)
    }

    fn periods(db: &Database) -> Vec<(i64, i64, i64)> {
        let mut v: Vec<_> = db
            .table("t")
            .unwrap()
            .iter()
            .map(|r| {
                let (d, s, e) = r.as_row().unwrap();
                let Value::Const(Const::Int(x)) = d.as_record().unwrap()["v"] else {
                    panic!()
                };
                (x, s.raw(), e.raw())
            })
            .collect();
        v.sort();
        v
    }

    #[test]
    fn overlap_cases_classify_touching_as_disjoint() {
        let t = Time::new;
        assert_eq!(overlap_case(t(1), t(9), t(2), t(8)), 1);
        assert_eq!(overlap_case(t(1), t(5), t(2), t(8)), 2);
        assert_eq!(overlap_case(t(3), t(5), t(2), t(8)), 3);
        assert_eq!(overlap_case(t(3), t(9), t(2), t(8)), 4);
        assert_eq!(overlap_case(t(0), t(2), t(2), t(8)), 5);
        assert_eq!(overlap_case(t(8), t(9), t(2), t(8)), 5);
    }

    #[test]
    fn sequenced_update_case_three_splits_in_three() {
        let (schema, db) = one_row_valid(2, 8);
        let term = parse(
            "update sequenced (x <- t) between @3 and @5 where true set (v = 1)",
            &schema,
        );
        let (_, out) = evaluate(&schema, &db, Time::new(0), &term, CurrentMode::Direct).unwrap();
        assert_eq!(periods(&out), vec![(0, 2, 3), (0, 5, 8), (1, 3, 5)]);
    }

    #[test]
    fn empty_period_aborts_and_rolls_back() {
        let (schema, db) = one_row_valid(2, 8);
        let term = parse("delete nonsequenced (x <- t) where true; insert sequenced t values [|row((v = 3), @4, @4)|]", &schema);
        let mut it = Interp::new(&schema, db.clone(), Time::new(0));
        assert!(matches!(it.run(&term), Err(EvalError::Aborted(_))));
        assert_eq!(it.db, db);
    }

    #[test]
    fn current_modes_agree_on_a_straddling_row() {
        let (schema, db) = one_row_valid(2, 8);
        for src in [
            "update (x <- t) where true set (v = 1)",
            "delete (x <- t) where x.v == 0",
        ] {
            let term = parse(src, &schema);
            let a = evaluate(&schema, &db, Time::new(5), &term, CurrentMode::Direct).unwrap();
            let b = evaluate(&schema, &db, Time::new(5), &term, CurrentMode::Desugar).unwrap();
            assert_eq!(a, b, "{src}");
        }
    }

    #[test]
    fn for_over_empty_is_empty() {
        let v = eval_pure(
            &parse("for (x <- [||]) [|x|]", &Schema::new()),
            &Env::new(),
            Time::new(0),
        )
        .unwrap();
        assert_eq!(v, Value::Bag(Bag::new()));
    }

    #[test]
    fn greatest_and_least_of_nothing() {
        assert_eq!(
            apply_prim(PrimOp::Greatest, &[]).unwrap(),
            Value::time(Time::BEGINNING)
        );
        assert_eq!(
            apply_prim(PrimOp::Least, &[]).unwrap(),
            Value::time(Time::FOREVER)
        );
    }

    #[test]
    fn values_convert_back_to_terms() {
        let v = Value::record([
            (
                "a",
                Value::Bag([Value::int(1), Value::int(1)].into_iter().collect()),
            ),
            ("b", Value::str("x")),
        ]);
        assert_eq!(
            eval_pure(&value_to_term(&v), &Env::new(), Time::new(0)).unwrap(),
            v
        );
    }
}
