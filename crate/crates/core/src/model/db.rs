use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::term::{Const, Term};
use super::time::Time;
use super::types::{BaseType, TableKind, Type};
use super::value::{Bag, RecordVal, Value};
use super::ModelError;

pub const DEFAULT_PERIOD: (&str, &str) = ("start", "end");

/// Declaration of one table.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TableSchema {
    pub columns: BTreeMap<String, BaseType>,
    pub kind: TableKind,
    /// Names of the columns that hold the period in the flat representation.
    pub period: (String, String),
}

impl TableSchema {
    pub fn new<I, L>(kind: TableKind, columns: I) -> TableSchema
    where
        I: IntoIterator<Item = (L, BaseType)>,
        L: Into<String>,
    {
        TableSchema {
            columns: columns.into_iter().map(|(l, t)| (l.into(), t)).collect(),
            kind,
            period: (DEFAULT_PERIOD.0.to_string(), DEFAULT_PERIOD.1.to_string()),
        }
    }

    pub fn with_period(mut self, start: impl Into<String>, end: impl Into<String>) -> TableSchema {
        self.period = (start.into(), end.into());
        self
    }

    /// Record type of the data part of each row.
    pub fn row_type(&self) -> Type {
        Type::record(
            self.columns
                .iter()
                .map(|(l, b)| (l.clone(), Type::Base(*b))),
        )
    }

    pub fn table_type(&self) -> Type {
        Type::table(self.row_type(), self.kind)
    }

    pub fn labels(&self) -> Vec<String> {
        self.columns.keys().cloned().collect()
    }

    /// The same table stored as a plain table with explicit period columns.
    pub fn flattened(&self) -> TableSchema {
        if !self.kind.is_temporal() {
            return self.clone();
        }
        let mut columns = self.columns.clone();
        columns.insert(self.period.0.clone(), BaseType::Time);
        columns.insert(self.period.1.clone(), BaseType::Time);
        TableSchema {
            columns,
            kind: TableKind::Plain,
            period: self.period.clone(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Schema {
    pub tables: BTreeMap<String, TableSchema>,
}

impl Schema {
    pub fn new() -> Schema {
        Schema::default()
    }

    pub fn with_table(mut self, name: impl Into<String>, table: TableSchema) -> Schema {
        self.tables.insert(name.into(), table);
        self
    }

    pub fn get(&self, name: &str) -> Option<&TableSchema> {
        self.tables.get(name)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, t) in &self.tables {
            if t.kind.is_temporal() {
                let (s, e) = &t.period;
                if s == e || t.columns.contains_key(s) || t.columns.contains_key(e) {
                    return Err(ModelError::PeriodClash(name.clone()));
                }
            }
        }
        Ok(())
    }

    pub fn flattened(&self) -> Schema {
        Schema {
            tables: self
                .tables
                .iter()
                .map(|(n, t)| (n.clone(), t.flattened()))
                .collect(),
        }
    }

    /// Whether any table has the given kind.
    pub fn has_kind(&self, kind: TableKind) -> bool {
        self.tables.values().any(|t| t.kind == kind)
    }
}

/// Table contents: plain tables hold records, temporal tables hold rows.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Database {
    pub tables: BTreeMap<String, Bag>,
}

impl Database {
    pub fn new() -> Database {
        Database::default()
    }

    /// An empty table for every table of the schema.
    pub fn empty_for(schema: &Schema) -> Database {
        Database {
            tables: schema
                .tables
                .keys()
                .map(|n| (n.clone(), Bag::new()))
                .collect(),
        }
    }

    pub fn table(&self, name: &str) -> Option<&Bag> {
        self.tables.get(name)
    }

    pub fn set_table(&mut self, name: impl Into<String>, rows: Bag) {
        self.tables.insert(name.into(), rows);
    }

    pub fn total_rows(&self) -> usize {
        self.tables.values().map(Bag::len).sum()
    }

    /// Checks each row against the schema's column types and table kind.
    pub fn conforms_to(&self, schema: &Schema) -> Result<(), ModelError> {
        for (name, rows) in &self.tables {
            let table = schema
                .get(name)
                .ok_or_else(|| ModelError::UnknownTable(name.clone()))?;
            for row in rows.iter() {
                let data = match (table.kind, row) {
                    (TableKind::Plain, Value::Record(r)) => r,
                    (TableKind::Transaction | TableKind::Valid, Value::Row(d, _, _)) => {
                        match &**d {
                            Value::Record(r) => r,
                            _ => return Err(ModelError::RowShape(name.clone(), row.to_string())),
                        }
                    }
                    _ => return Err(ModelError::RowShape(name.clone(), row.to_string())),
                };
                let ok = data.len() == table.columns.len()
                    && table.columns.iter().all(|(l, b)| {
                        matches!(data.get(l), Some(Value::Const(c)) if c.base_type() == *b)
                    });
                if !ok {
                    return Err(ModelError::RowShape(name.clone(), row.to_string()));
                }
            }
        }
        Ok(())
    }
}

/// Flattens a timestamped row into a record with the period as two extra fields.
pub fn flatten_row(row: &Value, period: (&str, &str)) -> Result<Value, ModelError> {
    let Value::Row(data, start, end) = row else {
        return Err(ModelError::NotARow(row.to_string()));
    };
    let Value::Record(fields) = &**data else {
        return Err(ModelError::NotARow(row.to_string()));
    };
    let mut out = fields.clone();
    for (label, t) in [(period.0, *start), (period.1, *end)] {
        if out.insert(label.to_string(), Value::time(t)).is_some() {
            return Err(ModelError::LabelClash(label.to_string()));
        }
    }
    Ok(Value::Record(out))
}

/// Inverse of [`flatten_row`].
pub fn unflatten_row(record: &Value, period: (&str, &str)) -> Result<Value, ModelError> {
    let Value::Record(fields) = record else {
        return Err(ModelError::NotARow(record.to_string()));
    };
    let mut data: RecordVal = fields.clone();
    let mut take = |label: &str| match data.remove(label) {
        Some(Value::Const(Const::Time(t))) => Ok(t),
        _ => Err(ModelError::UnknownLabel(label.to_string())),
    };
    let start = take(period.0)?;
    let end = take(period.1)?;
    Ok(Value::row(Value::Record(data), start, end))
}

fn period_of(schema: &Schema, name: &str) -> Result<Option<(String, String)>, ModelError> {
    let t = schema
        .get(name)
        .ok_or_else(|| ModelError::UnknownTable(name.to_string()))?;
    Ok(t.kind.is_temporal().then(|| t.period.clone()))
}

/// Flattens every temporal table; plain tables are unchanged.
pub fn flatten_db(schema: &Schema, db: &Database) -> Result<Database, ModelError> {
    let mut out = Database::new();
    for (name, rows) in &db.tables {
        let rows = match period_of(schema, name)? {
            Some((s, e)) => rows.try_map(|r| flatten_row(r, (&s, &e)))?,
            None => rows.clone(),
        };
        out.tables.insert(name.clone(), rows);
    }
    Ok(out)
}

/// Inverse of [`flatten_db`] for the same schema.
pub fn unflatten_db(schema: &Schema, flat: &Database) -> Result<Database, ModelError> {
    let mut out = Database::new();
    for (name, rows) in &flat.tables {
        let rows = match period_of(schema, name)? {
            Some((s, e)) => rows.try_map(|r| unflatten_row(r, (&s, &e)))?,
            None => rows.clone(),
        };
        out.tables.insert(name.clone(), rows);
    }
    Ok(out)
}

/// Largest end timestamp other than `forever`, or `beginning` if there is none.
pub fn max_timestamp(db: &Database) -> Time {
    db.tables
        .values()
        .flat_map(|rows| rows.counts().map(|(v, _)| v))
        .filter_map(|v| v.as_row().map(|(_, _, end)| end))
        .filter(|end| !end.is_forever())
        .max()
        .unwrap_or(Time::BEGINNING)
}

/// Every timestamped row has a non-empty period.
pub fn well_formed(db: &Database) -> bool {
    db.tables
        .values()
        .flat_map(|rows| rows.counts().map(|(v, _)| v))
        .all(|v| v.as_row().is_none_or(|(_, s, e)| s < e))
}

/// The first row with an empty period, if any.
pub fn first_ill_formed(db: &Database) -> Option<(String, Value)> {
    db.tables.iter().find_map(|(name, rows)| {
        rows.counts()
            .map(|(v, _)| v)
            .find(|v| matches!(v.as_row(), Some((_, s, e)) if s >= e))
            .map(|v| (name.clone(), v.clone()))
    })
}

/// `(l1 = x.l1, ..., ln = x.ln)`.
pub fn eta_expand(var: &str, labels: &[String]) -> Term {
    Term::Record(
        labels
            .iter()
            .map(|l| (l.clone(), Term::project(Term::var(var), l.clone())))
            .collect(),
    )
}

/// `(fun (x: A) -> body) (eta x)`: runs `body` with `x` narrowed to the given labels.
pub fn restrict(var: &str, row: &Type, body: Term) -> Term {
    let labels: Vec<String> = row
        .as_record()
        .map(|r| r.keys().cloned().collect())
        .unwrap_or_default();
    Term::apply(
        Term::lambda(var, row.clone(), body),
        eta_expand(var, &labels),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn todo_schema() -> Schema {
        Schema::new().with_table(
            "tasks",
            TableSchema::new(
                TableKind::Transaction,
                [("task", BaseType::String), ("done", BaseType::Bool)],
            ),
        )
    }

    fn task(name: &str, done: bool, s: Time, e: Time) -> Value {
        Value::row(
            Value::record([("task", Value::str(name)), ("done", Value::bool(done))]),
            s,
            e,
        )
    }

    #[test]
    fn flatten_row_adds_period_fields() {
        let r = task("Cook dinner", false, Time::hm(11, 0), Time::hm(17, 30));
        let flat = flatten_row(&r, DEFAULT_PERIOD).unwrap();
        let rec = flat.as_record().unwrap();
        assert_eq!(rec.len(), 4);
        assert_eq!(rec["end"], Value::time(Time::hm(17, 30)));
        assert_eq!(unflatten_row(&flat, DEFAULT_PERIOD).unwrap(), r);

        let empty = Value::row(Value::unit(), Time::new(1), Time::new(2));
        let flat = flatten_row(&empty, DEFAULT_PERIOD).unwrap();
        assert_eq!(
            flat,
            Value::record([
                ("start", Value::time(Time::new(1))),
                ("end", Value::time(Time::new(2)))
            ])
        );
    }

    #[test]
    fn flatten_row_rejects_clash() {
        let r = Value::row(
            Value::record([("start", Value::int(1))]),
            Time::new(1),
            Time::new(2),
        );
        assert_eq!(
            flatten_row(&r, DEFAULT_PERIOD),
            Err(ModelError::LabelClash("start".into()))
        );
    }

    #[test]
    fn max_timestamp_and_wellformedness() {
        let f = Time::FOREVER;
        let rows: Bag = vec![
            task("Go shopping", true, Time::hm(11, 0), f),
            task("Cook dinner", false, Time::hm(11, 0), Time::hm(17, 30)),
            task("Walk the dog", false, Time::hm(11, 0), f),
            task("Cook dinner", true, Time::hm(17, 30), f),
            task("Watch TV", false, Time::hm(11, 0), Time::hm(19, 0)),
        ]
        .into_iter()
        .collect();
        let mut db = Database::new();
        db.set_table("tasks", rows);
        assert_eq!(max_timestamp(&db), Time::hm(19, 0));
        assert!(well_formed(&db));
        assert!(db.conforms_to(&todo_schema()).is_ok());

        let flat = flatten_db(&todo_schema(), &db).unwrap();
        assert_eq!(flat.table("tasks").unwrap().len(), 5);
        assert_eq!(unflatten_db(&todo_schema(), &flat).unwrap(), db);

        let mut forever_only = Database::new();
        forever_only.set_table("tasks", Bag::singleton(task("x", false, Time::new(0), f)));
        assert_eq!(max_timestamp(&forever_only), Time::BEGINNING);

        let mut bad = Database::new();
        bad.set_table(
            "tasks",
            Bag::singleton(task("x", false, Time::new(3), Time::new(3))),
        );
        assert!(!well_formed(&bad));
        assert!(first_ill_formed(&bad).is_some());
    }

    #[test]
    fn eta_expansion_shape() {
        let t = eta_expand("x", &["task".into(), "done".into()]);
        assert_eq!(
            t,
            Term::record([
                ("task", Term::project(Term::var("x"), "task")),
                ("done", Term::project(Term::var("x"), "done")),
            ])
        );
    }
}
