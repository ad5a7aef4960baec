//! Built-in worked examples: the to-do list kept in transaction time, the
//! employees table kept in valid time, and the sequenced salary join.

use std::collections::BTreeSet;

use tlq_core::interp::CurrentMode;
use tlq_core::model::{Bag, Database, Schema, Time, Value};
use tlq_core::surface::{parse_program, parse_term};

use crate::engine::{apply_atomic, snapshot_at, EngineError, Outcome};
use crate::render::{render_bag, TimeStyle};

#[derive(Clone, Debug)]
pub enum Step {
    /// Run a program at the given clock and show `table` afterwards, or the
    /// result when `table` is `None`.
    Run {
        clock: Time,
        source: &'static str,
        table: Option<&'static str>,
    },
    /// Show the snapshot of a temporal table at a time.
    At { table: &'static str, time: Time },
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: &'static str,
    pub summary: &'static str,
    pub schema: Schema,
    pub db: Database,
    pub style: TimeStyle,
    pub columns: &'static [&'static str],
    pub steps: Vec<Step>,
}

/// One displayed table of a replay.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub title: String,
    pub rows: Bag,
}

pub const NAMES: [&str; 3] = ["todo", "employees", "join"];

pub fn by_name(name: &str) -> Option<Scenario> {
    match name {
        "todo" => Some(todo()),
        "employees" => Some(employees()),
        "join" => Some(join()),
        _ => None,
    }
}

fn schema_of(decls: &str) -> Schema {
    parse_program(&format!("{decls}\nmain = ();"))
        .expect("scenario declarations parse")
        .schema()
}

fn rec(fields: &[(&str, Value)]) -> Value {
    Value::record(fields.iter().cloned())
}

fn row(data: Value, s: i64, e: Option<i64>) -> Value {
    Value::row(data, Time::new(s), e.map_or(Time::FOREVER, Time::new))
}

pub fn todo() -> Scenario {
    let schema = schema_of("table tasks(task: string, done: bool) transaction;");
    let db = Database::empty_for(&schema);
    Scenario {
        name: "todo",
        summary: "to-do list in transaction time",
        schema,
        db,
        style: TimeStyle::Clock,
        columns: &["task", "done"],
        steps: vec![
            Step::Run {
                clock: Time::hm(11, 0),
                source: r#"insert tasks values [|(task = "Go shopping", done = true), (task = "Cook dinner", done = false), (task = "Walk the dog", done = false), (task = "Watch TV", done = false)|]"#,
                table: Some("tasks"),
            },
            Step::Run {
                clock: Time::hm(17, 30),
                source: r#"update (x <- tasks) where x.task == "Cook dinner" set (done = true)"#,
                table: Some("tasks"),
            },
            Step::Run {
                clock: Time::hm(19, 0),
                source: r#"delete (x <- tasks) where x.task == "Watch TV""#,
                table: Some("tasks"),
            },
            Step::Run {
                clock: Time::hm(19, 0),
                source: "let at = fun (t: ttable((task: string, done: bool))) -> fun (time: time) -> query { for (x <t- t) where (start x <= time && time < end x) [|data x|] } in at tasks @18:00",
                table: None,
            },
            Step::At {
                table: "tasks",
                time: Time::hm(18, 0),
            },
            Step::At {
                table: "tasks",
                time: Time::FOREVER,
            },
        ],
    }
}

fn employee(name: &str, position: &str, salary: i64) -> Value {
    rec(&[
        ("name", Value::str(name)),
        ("position", Value::str(position)),
        ("salary", Value::int(salary)),
    ])
}

pub fn employees() -> Scenario {
    let schema = schema_of("table employees(name: string, position: string, salary: int) valid;");
    let mut db = Database::empty_for(&schema);
    db.set_table(
        "employees",
        [
            row(employee("Alice", "Lecturer", 40000), 2010, Some(2018)),
            row(employee("Alice", "Senior Lecturer", 50000), 2018, None),
            row(employee("Bob", "PhD Student", 15000), 2019, Some(2023)),
            row(employee("Charles", "PhD Student", 15000), 2018, Some(2022)),
        ]
        .into_iter()
        .collect(),
    );
    let now = Time::new(2022);
    Scenario {
        name: "employees",
        summary: "employees in valid time: current, sequenced and nonsequenced changes",
        schema,
        db,
        style: TimeStyle::Plain,
        columns: &["name", "position", "salary"],
        steps: vec![
            Step::Run {
                clock: now,
                source: r#"insert employees values [|(name = "Dolores", position = "Professor", salary = 70000)|]"#,
                table: Some("employees"),
            },
            Step::Run {
                clock: now,
                source: r#"delete (x <- employees) where x.name == "Alice""#,
                table: Some("employees"),
            },
            Step::Run {
                clock: now,
                source: r#"update sequenced (x <- employees) between @2023 and @2028 where x.name == "Dolores" set (position = "Head of School")"#,
                table: Some("employees"),
            },
            Step::Run {
                clock: now,
                source: r#"update nonsequenced (x <- employees) where (data x).position == "PhD Student" set () valid from start x to end x + 1"#,
                table: Some("employees"),
            },
        ],
    }
}

fn staff(name: &str, position: &str, band: &str) -> Value {
    rec(&[
        ("name", Value::str(name)),
        ("position", Value::str(position)),
        ("band", Value::str(band)),
    ])
}

fn band(band: &str, salary: i64) -> Value {
    rec(&[("band", Value::str(band)), ("salary", Value::int(salary))])
}

pub fn join() -> Scenario {
    let schema = schema_of(
        "table staff(name: string, position: string, band: string);
         table bands(band: string, salary: int);
         table employees(name: string, position: string, band: string) valid;
         table salaries(band: string, salary: int) valid;",
    );
    let mut db = Database::empty_for(&schema);
    db.set_table(
        "staff",
        [
            staff("Alice", "Senior Lecturer", "A08"),
            staff("Bob", "PhD Student", "B01"),
            staff("Charles", "PhD Student", "B01"),
            staff("Dolores", "Professor", "A10"),
        ]
        .into_iter()
        .collect(),
    );
    db.set_table(
        "bands",
        [
            band("A08", 40000),
            band("A09", 50000),
            band("A10", 70000),
            band("B01", 15000),
        ]
        .into_iter()
        .collect(),
    );
    db.set_table(
        "employees",
        [
            row(staff("Alice", "Lecturer", "A08"), 2010, Some(2018)),
            row(staff("Alice", "Senior Lecturer", "A09"), 2018, None),
            row(staff("Bob", "PhD Student", "B01"), 2019, Some(2023)),
            row(staff("Charles", "PhD Student", "B01"), 2018, Some(2022)),
            row(staff("Dolores", "Professor", "A10"), 2022, None),
        ]
        .into_iter()
        .collect(),
    );
    db.set_table(
        "salaries",
        [
            row(band("A08", 38000), 2000, Some(2015)),
            row(band("A09", 48000), 2000, Some(2015)),
            row(band("A08", 40000), 2015, None),
            row(band("A09", 50000), 2015, None),
            row(band("A10", 70000), 2000, None),
            row(band("B01", 15000), 2000, None),
        ]
        .into_iter()
        .collect(),
    );
    let now = Time::new(2022);
    Scenario {
        name: "join",
        summary: "joining employees with salary bands, plain and sequenced",
        schema,
        db,
        style: TimeStyle::Plain,
        columns: &["name", "salary"],
        steps: vec![
            Step::Run {
                clock: now,
                source: "query { for (e <- get staff) for (s <- get bands) where (e.band == s.band) [|(name = e.name, salary = s.salary)|] }",
                table: None,
            },
            Step::Run {
                clock: now,
                source: "query { for (e <v- employees) for (s <- get bands) where ((data e).band == s.band) [|row((name = (data e).name, salary = s.salary), start e, end e)|] }",
                table: None,
            },
            Step::Run {
                clock: now,
                source: SEQUENCED_JOIN,
                table: None,
            },
        ],
    }
}

/// The sequenced join of employees with their salary band.
pub const SEQUENCED_JOIN: &str = "join { for (e <v- employees, s <v- salaries) where ((data e).band == (data s).band) [|(name = (data e).name, salary = (data s).salary)|] }";

#[derive(Debug, thiserror::Error)]
pub enum ReplayError {
    #[error("step {step}: {message}")]
    Parse { step: usize, message: String },
    #[error("step {step}: {source}")]
    Engine {
        step: usize,
        source: Box<EngineError>,
    },
    #[error("step {step} aborted: {reason}")]
    Aborted { step: usize, reason: String },
}

impl Scenario {
    fn tables(&self) -> BTreeSet<String> {
        self.schema.tables.keys().cloned().collect()
    }

    /// Runs every step in order, collecting the tables to display.
    pub fn replay(&self, current: CurrentMode) -> Result<Vec<Frame>, ReplayError> {
        let mut db = self.db.clone();
        let mut frames = Vec::new();
        for (i, step) in self.steps.iter().enumerate() {
            let n = i + 1;
            match step {
                Step::Run {
                    clock,
                    source,
                    table,
                } => {
                    let term =
                        parse_term(source, &self.tables()).map_err(|e| ReplayError::Parse {
                            step: n,
                            message: e.to_string(),
                        })?;
                    let out = apply_atomic(&self.schema, &db, *clock, &term, current).map_err(
                        |source| ReplayError::Engine {
                            step: n,
                            source: Box::new(source),
                        },
                    )?;
                    let value = match out {
                        Outcome::Committed { value, db: next } => {
                            db = next;
                            value
                        }
                        Outcome::Aborted { reason } => {
                            return Err(ReplayError::Aborted { step: n, reason })
                        }
                    };
                    let clock = self.style.show(*clock);
                    let (title, rows) = match table {
                        Some(t) => (
                            format!("at {clock}: {source}\n-- {t}"),
                            db.table(t).cloned().unwrap_or_default(),
                        ),
                        None => (
                            format!("at {clock}: {source}"),
                            value.into_bag().unwrap_or_default(),
                        ),
                    };
                    frames.push(Frame { title, rows });
                }
                Step::At { table, time } => {
                    let rows = snapshot_at(&self.schema, &db, table, *time).map_err(|source| {
                        ReplayError::Engine {
                            step: n,
                            source: Box::new(source),
                        }
                    })?;
                    let title = if time.is_forever() {
                        format!("current snapshot of {table}")
                    } else {
                        format!("{table} as it stood at {}", self.style.show(*time))
                    };
                    frames.push(Frame { title, rows });
                }
            }
        }
        Ok(frames)
    }

    pub fn render(&self, frames: &[Frame]) -> String {
        let mut out = String::new();
        for (i, f) in frames.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            out.push_str(&f.title);
            out.push('\n');
            out.push_str(&render_bag(&f.rows, self.columns, self.style));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_scenario_replays_in_both_current_modes() {
        for name in NAMES {
            let s = by_name(name).unwrap();
            let a = s.replay(CurrentMode::Direct).unwrap();
            let b = s.replay(CurrentMode::Desugar).unwrap();
            assert_eq!(a, b, "{name}");
            println!("{}", s.render(&a));
        }
    }
}
