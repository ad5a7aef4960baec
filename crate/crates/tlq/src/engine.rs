//! Database store: snapshot files, atomic application of programs and
//! time-travel views of temporal tables.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde_json::{json, Map, Value as Json};
use thiserror::Error;
use tlq_core::interp::{CurrentMode, EvalError, Interp};
use tlq_core::model::Term;
use tlq_core::model::{
    first_ill_formed, Bag, BaseType, Const, Database, ModelError, Schema, TableKind, TableSchema,
    Time, Value,
};
use tlq_core::typecheck::{check_program, Dialect, TypeError};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("cannot read or write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid snapshot: {0}")]
    Format(String),
    #[error("{0}")]
    Model(#[from] ModelError),
    #[error("table `{table}` contains a row with an empty period: {row}")]
    IllFormed { table: String, row: String },
    #[error("{0}")]
    Type(#[from] TypeError),
    #[error("clock {clock} is earlier than the latest transaction timestamp {latest}")]
    ClockBehind { clock: Time, latest: Time },
    #[error("table `{0}` does not exist")]
    UnknownTable(String),
    #[error("table `{0}` is not temporal")]
    NotTemporal(String),
    #[error("internal evaluation error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, EngineError>;

/// A schema, its database and the clock of the last committed run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Store {
    pub schema: Schema,
    pub db: Database,
    pub clock: Option<Time>,
}

/// What happened when a program was applied.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Committed {
        value: Value,
        db: Database,
    },
    /// A dynamic check failed; nothing was written.
    Aborted {
        reason: String,
    },
}

/// Typechecks and runs `term` against `db`. The input database is never
/// touched: on success the new state is returned, on abort there is none.
pub fn apply_atomic(
    schema: &Schema,
    db: &Database,
    clock: Time,
    term: &Term,
    current: CurrentMode,
) -> Result<Outcome> {
    let checked = check_program(schema, term)?;
    if checked.dialect == Dialect::Transaction {
        let latest = latest_transaction_time(schema, db);
        if clock < latest {
            return Err(EngineError::ClockBehind { clock, latest });
        }
    }
    let mut it = Interp::new(schema, db.clone(), clock).with_current(current);
    match it.run(&checked.term) {
        Ok(value) => Ok(Outcome::Committed { value, db: it.db }),
        Err(EvalError::Aborted(reason)) => Ok(Outcome::Aborted { reason }),
        Err(EvalError::Internal(msg)) => Err(EngineError::Internal(msg)),
    }
}

/// Latest non-forever timestamp among transaction-time rows. Valid-time rows
/// may legitimately lie in the future and are ignored.
pub fn latest_transaction_time(schema: &Schema, db: &Database) -> Time {
    let mut latest = Time::BEGINNING;
    for (name, rows) in &db.tables {
        if schema.get(name).map(|t| t.kind) != Some(TableKind::Transaction) {
            continue;
        }
        for row in rows.iter() {
            if let Some((_, s, e)) = row.as_row() {
                for t in [s, e] {
                    if !t.is_forever() && t > latest {
                        latest = t;
                    }
                }
            }
        }
    }
    latest
}

/// Whether `[start, end)` contains `t`. A row that runs to `forever` is
/// considered present at `forever`, which makes `at(forever)` the current
/// snapshot.
pub fn period_contains(start: Time, end: Time, t: Time) -> bool {
    start <= t && (t < end || (end.is_forever() && t.is_forever()))
}

/// Data records of the rows of a temporal table present at `t`.
pub fn snapshot_at(schema: &Schema, db: &Database, table: &str, t: Time) -> Result<Bag> {
    let ts = schema
        .get(table)
        .ok_or_else(|| EngineError::UnknownTable(table.into()))?;
    if !ts.kind.is_temporal() {
        return Err(EngineError::NotTemporal(table.into()));
    }
    let mut out = Bag::new();
    if let Some(rows) = db.table(table) {
        for (row, n) in rows.counts() {
            if let Some((data, s, e)) = row.as_row() {
                if period_contains(s, e, t) {
                    out.insert_n(data.clone(), *n);
                }
            }
        }
    }
    Ok(out)
}

/// The rows of a temporal table that are open-ended.
pub fn current_snapshot(schema: &Schema, db: &Database, table: &str) -> Result<Bag> {
    snapshot_at(schema, db, table, Time::FOREVER)
}

impl Store {
    pub fn new(schema: Schema) -> Store {
        let db = Database::empty_for(&schema);
        Store {
            schema,
            db,
            clock: None,
        }
    }

    pub fn load(path: &Path) -> Result<Store> {
        let text = fs::read_to_string(path).map_err(|source| EngineError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Store::from_json_str(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json_string()).map_err(|source| EngineError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    /// Applies a program; the store changes only if it commits.
    pub fn apply(&mut self, term: &Term, clock: Time, current: CurrentMode) -> Result<Outcome> {
        let out = apply_atomic(&self.schema, &self.db, clock, term, current)?;
        if let Outcome::Committed { db, .. } = &out {
            self.db = db.clone();
            self.clock = Some(clock);
        }
        Ok(out)
    }

    pub fn snapshot_at(&self, table: &str, t: Time) -> Result<Bag> {
        snapshot_at(&self.schema, &self.db, table, t)
    }

    pub fn from_json_str(text: &str) -> Result<Store> {
        let root: Json = serde_json::from_str(text)?;
        let obj = root
            .as_object()
            .ok_or_else(|| fmt_err("top level must be an object"))?;
        for key in obj.keys() {
            if key != "clock" && key != "tables" {
                return Err(fmt_err(format!("unexpected key `{key}`")));
            }
        }
        let clock = match obj.get("clock") {
            None | Some(Json::Null) => None,
            Some(j) => Some(time_from_json(j)?),
        };
        let mut schema = Schema::new();
        let mut db = Database::new();
        let tables = match obj.get("tables") {
            None => Map::new(),
            Some(Json::Object(m)) => m.clone(),
            Some(_) => return Err(fmt_err("`tables` must be an object")),
        };
        for (name, tj) in &tables {
            let (ts, rows) = table_from_json(name, tj)?;
            schema.tables.insert(name.clone(), ts);
            db.set_table(name.clone(), rows);
        }
        schema.validate()?;
        db.conforms_to(&schema)?;
        if let Some((table, row)) = first_ill_formed(&db) {
            return Err(EngineError::IllFormed {
                table,
                row: row.to_string(),
            });
        }
        Ok(Store { schema, db, clock })
    }

    pub fn to_json(&self) -> Json {
        let mut tables = Map::new();
        for (name, ts) in &self.schema.tables {
            let rows = self.db.table(name).cloned().unwrap_or_default();
            tables.insert(name.clone(), table_to_json(ts, &rows));
        }
        json!({
            "clock": self.clock.map_or(Json::Null, time_to_json),
            "tables": tables,
        })
    }

    /// Canonical text: sorted keys, rows in value order, trailing newline.
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("snapshot serialises");
        s.push('\n');
        s
    }
}

fn fmt_err(msg: impl Into<String>) -> EngineError {
    EngineError::Format(msg.into())
}

pub fn time_to_json(t: Time) -> Json {
    if t.is_forever() {
        json!("inf")
    } else if t.is_beginning() {
        json!("-inf")
    } else {
        json!(t.raw())
    }
}

pub fn time_from_json(j: &Json) -> Result<Time> {
    match j {
        Json::Number(n) => n
            .as_i64()
            .map(Time::new)
            .ok_or_else(|| fmt_err(format!("timestamp {n} is not an integer"))),
        Json::String(s) if s == "inf" || s == "forever" => Ok(Time::FOREVER),
        Json::String(s) if s == "-inf" || s == "beginning" => Ok(Time::BEGINNING),
        other => Err(fmt_err(format!("invalid timestamp {other}"))),
    }
}

fn const_to_json(c: &Const) -> Json {
    match c {
        Const::Int(i) => json!(i),
        Const::Str(s) => json!(s),
        Const::Bool(b) => json!(b),
        Const::Time(t) => time_to_json(*t),
    }
}

fn const_from_json(ty: BaseType, j: &Json) -> Result<Const> {
    let bad = || fmt_err(format!("expected a {} value, found {j}", ty.name()));
    Ok(match ty {
        BaseType::Int => Const::Int(j.as_i64().ok_or_else(bad)?),
        BaseType::String => Const::Str(j.as_str().ok_or_else(bad)?.to_string()),
        BaseType::Bool => Const::Bool(j.as_bool().ok_or_else(bad)?),
        BaseType::Time => Const::Time(time_from_json(j).map_err(|_| bad())?),
    })
}

fn table_to_json(ts: &TableSchema, rows: &Bag) -> Json {
    let columns: Map<String, Json> = ts
        .columns
        .iter()
        .map(|(l, b)| (l.clone(), json!(b.name())))
        .collect();
    let mut out = Vec::new();
    for (row, n) in rows.counts() {
        let mut r = Map::new();
        let (data, period) = match row.as_row() {
            Some((d, s, e)) => (d, Some((s, e))),
            None => (row, None),
        };
        if let Some(rec) = data.as_record() {
            let fields: Map<String, Json> = rec
                .iter()
                .map(|(l, v)| {
                    let j = match v {
                        Value::Const(c) => const_to_json(c),
                        other => json!(other.to_string()),
                    };
                    (l.clone(), j)
                })
                .collect();
            r.insert("data".into(), Json::Object(fields));
        }
        if let Some((s, e)) = period {
            r.insert("start".into(), time_to_json(s));
            r.insert("end".into(), time_to_json(e));
        }
        if *n > 1 {
            r.insert("multiplicity".into(), json!(n));
        }
        out.push(Json::Object(r));
    }
    let mut t = Map::new();
    t.insert("kind".into(), json!(ts.kind.name()));
    t.insert("columns".into(), Json::Object(columns));
    if ts.kind.is_temporal() {
        t.insert("period".into(), json!([ts.period.0, ts.period.1]));
    }
    t.insert("rows".into(), Json::Array(out));
    Json::Object(t)
}

fn kind_from_name(s: &str) -> Option<TableKind> {
    [TableKind::Plain, TableKind::Transaction, TableKind::Valid]
        .into_iter()
        .find(|k| k.name() == s)
}

fn table_from_json(name: &str, j: &Json) -> Result<(TableSchema, Bag)> {
    let ctx = |m: String| fmt_err(format!("table `{name}`: {m}"));
    let obj = j
        .as_object()
        .ok_or_else(|| ctx("must be an object".into()))?;
    let kind = match obj.get("kind") {
        None => TableKind::Plain,
        Some(k) => k
            .as_str()
            .and_then(kind_from_name)
            .ok_or_else(|| ctx(format!("unknown kind {k}")))?,
    };
    let mut columns = BTreeMap::new();
    let cols = obj
        .get("columns")
        .and_then(Json::as_object)
        .ok_or_else(|| ctx("missing `columns` object".into()))?;
    for (l, t) in cols {
        let b = t
            .as_str()
            .and_then(BaseType::from_name)
            .ok_or_else(|| ctx(format!("column `{l}` has unknown type {t}")))?;
        columns.insert(l.clone(), b);
    }
    let mut ts = TableSchema::new(kind, columns);
    if let Some(p) = obj.get("period") {
        let pair = p
            .as_array()
            .filter(|a| a.len() == 2)
            .and_then(|a| Some((a[0].as_str()?, a[1].as_str()?)))
            .ok_or_else(|| ctx("`period` must be a pair of column names".into()))?;
        ts = ts.with_period(pair.0, pair.1);
    }
    let mut bag = Bag::new();
    let rows = match obj.get("rows") {
        None => Vec::new(),
        Some(Json::Array(a)) => a.clone(),
        Some(_) => return Err(ctx("`rows` must be an array".into())),
    };
    for (i, rj) in rows.iter().enumerate() {
        let ro = rj
            .as_object()
            .ok_or_else(|| ctx(format!("row {i} must be an object")))?;
        let data = ro
            .get("data")
            .and_then(Json::as_object)
            .ok_or_else(|| ctx(format!("row {i} has no `data` object")))?;
        let mut rec = BTreeMap::new();
        for (l, v) in data {
            let b = ts
                .columns
                .get(l)
                .ok_or_else(|| ctx(format!("row {i} has unknown column `{l}`")))?;
            let c = const_from_json(*b, v).map_err(|e| ctx(format!("row {i}: {e}")))?;
            rec.insert(l.clone(), Value::Const(c));
        }
        if rec.len() != ts.columns.len() {
            return Err(ctx(format!("row {i} is missing columns")));
        }
        let data = Value::Record(rec);
        let value = if kind.is_temporal() {
            let s = ro
                .get("start")
                .ok_or_else(|| ctx(format!("row {i} has no `start`")))?;
            let e = ro
                .get("end")
                .ok_or_else(|| ctx(format!("row {i} has no `end`")))?;
            Value::row(data, time_from_json(s)?, time_from_json(e)?)
        } else {
            data
        };
        let n = match ro.get("multiplicity") {
            None => 1,
            Some(m) => m
                .as_u64()
                .filter(|n| *n >= 1)
                .ok_or_else(|| ctx(format!("row {i} has invalid multiplicity {m}")))?
                as usize,
        };
        bag.insert_n(value, n);
    }
    Ok((ts, bag))
}

/// Renders a value as JSON: bags become arrays (duplicates repeated), rows
/// become objects with `data`, `start` and `end`.
pub fn value_to_json(v: &Value) -> Json {
    match v {
        Value::Const(c) => const_to_json(c),
        Value::Record(r) => Json::Object(
            r.iter()
                .map(|(l, v)| (l.clone(), value_to_json(v)))
                .collect(),
        ),
        Value::Bag(b) => Json::Array(b.iter().map(value_to_json).collect()),
        Value::Row(d, s, e) => json!({
            "data": value_to_json(d),
            "start": time_to_json(*s),
            "end": time_to_json(*e),
        }),
        Value::Table(name) => json!({ "table": name }),
        Value::Closure(_) => json!("<function>"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn todo_schema() -> Schema {
        Schema::new().with_table(
            "tasks",
            TableSchema::new(
                TableKind::Transaction,
                [("task", BaseType::String), ("done", BaseType::Bool)],
            ),
        )
    }

    #[test]
    fn empty_snapshot_is_an_empty_database() {
        let s = Store::from_json_str("{}").unwrap();
        assert!(s.schema.tables.is_empty());
        assert_eq!(s.db.total_rows(), 0);
        assert_eq!(s.clock, None);
    }

    #[test]
    fn canonical_text_round_trips_byte_for_byte() {
        let mut store = Store::new(todo_schema());
        let rec =
            |t: &str, d: bool| Value::record([("task", Value::str(t)), ("done", Value::bool(d))]);
        let mut bag = Bag::new();
        bag.insert_n(Value::row(rec("b", false), Time::new(3), Time::FOREVER), 2);
        bag.insert(Value::row(rec("a", true), Time::new(1), Time::new(3)));
        store.db.set_table("tasks", bag);
        store.clock = Some(Time::new(5));
        let text = store.to_json_string();
        let back = Store::from_json_str(&text).unwrap();
        assert_eq!(back, store);
        assert_eq!(back.to_json_string(), text);
        assert!(text.contains("\"multiplicity\": 2"));
        assert!(text.contains("\"inf\""));
    }

    #[test]
    fn ill_formed_rows_are_named() {
        let text = r#"{"tables": {"t": {"kind": "valid", "columns": {"a": "int"},
            "rows": [{"data": {"a": 1}, "start": 4, "end": 4}]}}}"#;
        let err = Store::from_json_str(text).unwrap_err();
        assert!(
            matches!(err, EngineError::IllFormed { ref table, .. } if table == "t"),
            "{err}"
        );
        assert!(err.to_string().contains("a = 1"), "{err}");
    }

    #[test]
    fn rows_must_match_columns() {
        let text =
            r#"{"tables": {"t": {"columns": {"a": "int"}, "rows": [{"data": {"a": "x"}}]}}}"#;
        assert!(Store::from_json_str(text).is_err());
        let text = r#"{"tables": {"t": {"columns": {"a": "int"}, "rows": [{"data": {}}]}}}"#;
        assert!(Store::from_json_str(text).is_err());
    }

    #[test]
    fn periods_are_closed_open() {
        let schema = todo_schema();
        let mut db = Database::empty_for(&schema);
        let row = Value::row(
            Value::record([("task", Value::str("x")), ("done", Value::bool(false))]),
            Time::new(2),
            Time::new(5),
        );
        db.set_table("tasks", Bag::singleton(row));
        let at = |t| {
            snapshot_at(&schema, &db, "tasks", Time::new(t))
                .unwrap()
                .len()
        };
        assert_eq!((at(1), at(2), at(4), at(5)), (0, 1, 1, 0));
        assert!(current_snapshot(&schema, &db, "tasks").unwrap().is_empty());
        assert!(matches!(
            snapshot_at(&schema, &db, "nope", Time::new(1)),
            Err(EngineError::UnknownTable(_))
        ));
    }

    #[test]
    fn transaction_clock_may_not_run_backwards() {
        let schema = todo_schema();
        let mut store = Store::new(schema);
        let p = tlq_core::surface::parse_term(
            "insert tasks values [|(task = \"a\", done = false)|]",
            &store.schema.tables.keys().cloned().collect(),
        )
        .unwrap();
        store.apply(&p, Time::new(10), CurrentMode::Direct).unwrap();
        assert_eq!(store.clock, Some(Time::new(10)));
        let err = store
            .apply(&p, Time::new(9), CurrentMode::Direct)
            .unwrap_err();
        assert!(matches!(err, EngineError::ClockBehind { .. }));
    }
}
