//! The differential checkers. Each takes a seed, builds its own inputs and
//! returns a verdict.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use tlq_core::interp::{eval_read, overlap_case, Coverage, CurrentMode, EvalError, Interp};
use tlq_core::model::{
    flatten_db, well_formed, Bag, BaseType, Database, Schema, TableKind, TableSchema, Term, Time,
    Value,
};
use tlq_core::querycomp::{emit_sql, nf_to_term, normalize, SqlConfig, SqlMode};
use tlq_core::surface::parse_term;
use tlq_core::translate::{translate_t, translate_type_in, translate_v, translate_value};
use tlq_core::typecheck::{annotate, infer, value_has_type, Dialect, TypeEnv};

use super::gen::{
    gen_db, gen_program, rng_for, schema_for, sub_seed, well_typed_in, ProgramGen, MAX_TS,
};
use super::shrink::shrink;
use super::{Counterexample, Trial, TrialStats, Verdict};
use crate::engine::{period_contains, snapshot_at};
use crate::scenarios::{self, Step};

fn merge(into: &mut Coverage, from: &Coverage) {
    for (k, v) in from {
        *into.entry(k).or_default() += v;
    }
}

/// Runs a program directly and through its translation, comparing results
/// and final databases.
pub fn compare_translation(trial: &Trial, current: CurrentMode) -> Result<TrialStats, String> {
    let schema = &trial.schema;
    let term = annotate(schema, &trial.term, trial.dialect)
        .map_err(|e| format!("program does not typecheck: {e}"))?;
    let (ty, _) = infer(schema, &TypeEnv::new(), &term, trial.dialect)
        .map_err(|e| format!("program does not typecheck: {e}"))?;
    let translated = match trial.dialect {
        Dialect::Transaction => translate_t(schema, &term),
        Dialect::Valid => translate_v(schema, &term, current),
        Dialect::Linq => Ok(term.clone()),
    }
    .map_err(|e| format!("translation failed: {e}"))?;
    let flat_schema = schema.flattened();
    let flat_db = flatten_db(schema, &trial.db).map_err(|e| e.to_string())?;
    let (tty, _) = infer(&flat_schema, &TypeEnv::new(), &translated, Dialect::Linq)
        .map_err(|e| format!("translated program does not typecheck: {e}"))?;
    let want = translate_type_in(schema, &ty);
    if tty != want {
        return Err(format!(
            "translated program has type {tty}, expected {want}"
        ));
    }

    let mut direct = Interp::new(schema, trial.db.clone(), trial.clock).with_current(current);
    let d = direct.run(&term);
    let mut tr = Interp::new(&flat_schema, flat_db.clone(), trial.clock);
    let t = tr.run(&translated);
    let mut stats = TrialStats {
        coverage: std::mem::take(&mut direct.coverage),
        ..TrialStats::default()
    };
    match (d, t) {
        (Ok(v1), Ok(v2)) => {
            let expect = translate_value(&v1);
            if expect != v2 {
                return Err(format!(
                    "results differ\n  direct:     {v1}\n  translated: {v2}"
                ));
            }
            let f1 = flatten_db(schema, &direct.db).map_err(|e| e.to_string())?;
            if f1 != tr.db {
                return Err(db_diff(&f1, &tr.db));
            }
        }
        (Err(EvalError::Aborted(why)), other) => {
            stats.aborted = true;
            if direct.db != trial.db {
                return Err(format!(
                    "direct run aborted ({why}) but changed the database"
                ));
            }
            if tr.db != flat_db {
                let what = match other {
                    Ok(_) => "committed",
                    Err(_) => "aborted",
                };
                return Err(format!(
                    "direct run aborted ({why}); translated run {what} and changed the database"
                ));
            }
        }
        (Ok(_), Err(EvalError::Aborted(why))) => {
            return Err(format!(
                "translated run aborted ({why}) but the direct run did not"
            ))
        }
        (Err(EvalError::Internal(e)), _) => return Err(format!("direct run failed: {e}")),
        (_, Err(EvalError::Internal(e))) => return Err(format!("translated run failed: {e}")),
    }
    Ok(stats)
}

fn db_diff(a: &Database, b: &Database) -> String {
    let mut out = String::from("final databases differ");
    for name in a
        .tables
        .keys()
        .chain(b.tables.keys())
        .collect::<BTreeSet<_>>()
    {
        let (x, y) = (
            a.table(name).cloned().unwrap_or_default(),
            b.table(name).cloned().unwrap_or_default(),
        );
        if x != y {
            out.push_str(&format!("\n  {name} direct:     {}", Value::Bag(x)));
            out.push_str(&format!("\n  {name} translated: {}", Value::Bag(y)));
        }
    }
    out
}

/// Both evaluation strategies for current modifications must agree.
fn compare_current_modes(trial: &Trial) -> Result<(), String> {
    let term = annotate(&trial.schema, &trial.term, trial.dialect).map_err(|e| e.to_string())?;
    let run = |mode| {
        let mut it = Interp::new(&trial.schema, trial.db.clone(), trial.clock).with_current(mode);
        let r = it.run(&term);
        (r.map_err(|e| matches!(e, EvalError::Aborted(_))), it.db)
    };
    let (a, b) = (run(CurrentMode::Direct), run(CurrentMode::Desugar));
    if a != b {
        return Err(format!(
            "current modifications disagree\n  direct:    {:?} {}\n  desugared: {:?} {}",
            a.0,
            db_summary(&a.1),
            b.0,
            db_summary(&b.1)
        ));
    }
    Ok(())
}

fn db_summary(db: &Database) -> String {
    db.tables
        .iter()
        .map(|(n, b)| format!("{n}={}", Value::Bag(b.clone())))
        .collect::<Vec<_>>()
        .join(" ")
}

fn theorem_trial(trial: &Trial) -> Result<TrialStats, String> {
    if trial.dialect == Dialect::Valid {
        compare_current_modes(trial)?;
        let mut a = compare_translation(trial, CurrentMode::Direct)?;
        let b = compare_translation(trial, CurrentMode::Desugar)?;
        merge(&mut a.coverage, &b.coverage);
        Ok(a)
    } else {
        compare_translation(trial, CurrentMode::Direct)
    }
}

/// Program depth used by the random checkers.
pub const DEPTH: u32 = 4;
/// Maximum rows per table in generated databases.
pub const DB_SIZE: usize = 5;

/// A random trial for a dialect. Transaction-time clocks never precede the
/// database's latest timestamp.
pub fn random_trial(seed: u64, dialect: Dialect) -> (Trial, usize) {
    let schema = schema_for(dialect);
    let g = gen_db(sub_seed(seed, 1), &schema, DB_SIZE);
    let mut rng = rng_for(sub_seed(seed, 2));
    let clock = match dialect {
        Dialect::Transaction => Time::new(g.max_time.raw().max(0) + rng.gen_range(0..=1)),
        _ => Time::new(rng.gen_range(0..=MAX_TS + 1)),
    };
    let (term, rejected) = gen_program(sub_seed(seed, 3), &schema, dialect, DEPTH);
    (
        Trial {
            seed,
            check: "",
            schema,
            db: g.db,
            clock,
            term,
            dialect,
        },
        rejected,
    )
}

fn finish(
    trial: Trial,
    result: Result<TrialStats, String>,
    check: &dyn Fn(&Trial) -> Result<TrialStats, String>,
) -> Verdict {
    match result {
        Ok(stats) => Verdict::Match(stats),
        Err(_) => {
            let small = shrink(&trial, &|t| check(t).is_err());
            let reason = check(&small).err().unwrap_or_default();
            Verdict::Mismatch(Box::new(Counterexample::new(&small, reason)))
        }
    }
}

fn scenario_trials(
    s: &scenarios::Scenario,
    dialect: Dialect,
    check: &'static str,
) -> Result<Vec<Trial>, String> {
    let tables: BTreeSet<String> = s.schema.tables.keys().cloned().collect();
    let mut db = s.db.clone();
    let mut out = Vec::new();
    for step in &s.steps {
        if let Step::Run { clock, source, .. } = step {
            let term = parse_term(source, &tables).map_err(|e| e.to_string())?;
            let trial = Trial {
                seed: 0,
                check,
                schema: s.schema.clone(),
                db: db.clone(),
                clock: *clock,
                term,
                dialect,
            };
            let annotated =
                annotate(&trial.schema, &trial.term, dialect).map_err(|e| e.to_string())?;
            let mut it = Interp::new(&trial.schema, db.clone(), *clock);
            it.run(&annotated).map_err(|e| e.to_string())?;
            db = it.db;
            out.push(trial);
        }
    }
    Ok(out)
}

fn check_scenario(s: &scenarios::Scenario, dialect: Dialect, check: &'static str) -> Verdict {
    let trials = match scenario_trials(s, dialect, check) {
        Ok(t) => t,
        Err(e) => {
            return Verdict::Mismatch(Box::new(Counterexample {
                seed: 0,
                check,
                reason: e,
                ..Counterexample::default()
            }))
        }
    };
    let mut stats = TrialStats::default();
    for t in trials {
        match theorem_trial(&t) {
            Ok(s) => merge(&mut stats.coverage, &s.coverage),
            Err(e) => return Verdict::Mismatch(Box::new(Counterexample::new(&t, e))),
        }
    }
    Verdict::Match(stats)
}

/// Transaction-time translation correctness. Seed 0 replays the to-do list.
pub fn check_theorem_t(seed: u64) -> Verdict {
    if seed == 0 {
        return check_scenario(&scenarios::todo(), Dialect::Transaction, "theorem-t");
    }
    let (mut trial, rejected) = random_trial(seed, Dialect::Transaction);
    trial.check = "theorem-t";
    let r = theorem_trial(&trial).map(|mut s| {
        s.rejected = rejected;
        s
    });
    finish(trial, r, &theorem_trial)
}

/// Valid-time translation correctness, for both strategies of current
/// modifications. Seed 0 replays the employees example.
pub fn check_theorem_v(seed: u64) -> Verdict {
    if seed == 0 {
        return check_scenario(&scenarios::employees(), Dialect::Valid, "theorem-v");
    }
    let (mut trial, rejected) = random_trial(seed, Dialect::Valid);
    trial.check = "theorem-v";
    let r = theorem_trial(&trial).map(|mut s| {
        s.rejected = rejected;
        s
    });
    finish(trial, r, &theorem_trial)
}

fn soundness_trial(trial: &Trial) -> Result<TrialStats, String> {
    let term = annotate(&trial.schema, &trial.term, trial.dialect)
        .map_err(|e| format!("program does not typecheck: {e}"))?;
    let (ty, _) =
        infer(&trial.schema, &TypeEnv::new(), &term, trial.dialect).map_err(|e| e.to_string())?;
    let mut it = Interp::new(&trial.schema, trial.db.clone(), trial.clock);
    let r = it.run(&term);
    let mut stats = TrialStats {
        coverage: std::mem::take(&mut it.coverage),
        ..TrialStats::default()
    };
    match r {
        Ok(v) => {
            if !value_has_type(&trial.schema, &v, &ty) {
                return Err(format!("result {v} does not have type {ty}"));
            }
            it.db
                .conforms_to(&trial.schema)
                .map_err(|e| format!("final database: {e}"))?;
            // A transaction-time update of a row inserted at the same clock
            // legitimately leaves an empty period behind.
            if trial.dialect != Dialect::Transaction && !well_formed(&it.db) {
                return Err("final database is not well formed".into());
            }
        }
        Err(EvalError::Aborted(why)) => {
            if trial.dialect != Dialect::Valid {
                return Err(format!("{} program aborted: {why}", trial.dialect.name()));
            }
            if it.db != trial.db {
                return Err("aborted run changed the database".into());
            }
            stats.aborted = true;
        }
        Err(EvalError::Internal(e)) => return Err(format!("evaluation went wrong: {e}")),
    }
    Ok(stats)
}

/// Well-typed programs evaluate without internal errors, to a value of
/// their type; only valid-time programs may abort.
pub fn check_soundness(seed: u64) -> Verdict {
    let dialect = [Dialect::Linq, Dialect::Transaction, Dialect::Valid][(seed % 3) as usize];
    let (mut trial, rejected) = random_trial(seed, dialect);
    trial.check = "soundness";
    let r = soundness_trial(&trial).map(|mut s| {
        s.rejected = rejected;
        s
    });
    finish(trial, r, &soundness_trial)
}

fn normalizer_trial(trial: &Trial) -> Result<TrialStats, String> {
    let schema = &trial.schema;
    let body = &trial.term;
    let nf = normalize(schema, body).map_err(|e| format!("did not normalise: {e}"))?;
    nf.validate(schema)
        .map_err(|e| format!("output is not in normal form: {e}"))?;
    emit_sql(&nf, SqlMode::Query, &SqlConfig::default()).map_err(|e| format!("no SQL: {e}"))?;
    let out = nf_to_term(&nf);
    let input = Term::query(body.clone());
    for k in 0..5 {
        let db = gen_db(sub_seed(trial.seed, 100 + k), schema, DB_SIZE).db;
        let clock = Time::new((k as i64) * 3);
        let a = eval_read(schema, &db, clock, &input).map_err(|e| format!("input failed: {e}"))?;
        let b =
            eval_read(schema, &db, clock, &out).map_err(|e| format!("normal form failed: {e}"))?;
        if a != b {
            return Err(format!("results differ on database {k}\n  input:       {a}\n  normal form: {b}\n  normal form term: {nf}"));
        }
    }
    Ok(TrialStats::default())
}

/// Normalisation preserves meaning and produces the normal-form grammar.
pub fn check_normalizer(seed: u64) -> Verdict {
    let dialect = [Dialect::Linq, Dialect::Valid, Dialect::Transaction][(seed % 3) as usize];
    let schema = schema_for(dialect);
    let mut rejected = 0;
    let mut attempt = 0;
    let body = loop {
        let mut g = ProgramGen::new(sub_seed(seed, 10 + attempt), &schema, dialect);
        let body = g.normalizable_query();
        if well_typed_in(&schema, dialect, &Term::query(body.clone())) {
            break body;
        }
        rejected += 1;
        attempt += 1;
    };
    let trial = Trial {
        seed,
        check: "normalizer",
        db: Database::empty_for(&schema),
        schema,
        clock: Time::new(0),
        term: body,
        dialect,
    };
    let r = normalizer_trial(&trial).map(|mut s| {
        s.rejected = rejected;
        s
    });
    finish(trial, r, &normalizer_trial)
}

fn join_tables() -> Schema {
    fn cols(x: &str) -> [(&str, BaseType); 2] {
        [("k", BaseType::Int), (x, BaseType::Int)]
    }
    Schema::new()
        .with_table("r", TableSchema::new(TableKind::Valid, cols("a")))
        .with_table(
            "s",
            TableSchema::new(TableKind::Valid, cols("b")).with_period("vf", "vt"),
        )
        .with_table("p", TableSchema::new(TableKind::Plain, cols("c")))
}

struct JoinForm {
    gens: Vec<(&'static str, &'static str)>,
    cond: Option<String>,
    head: Vec<(&'static str, &'static str, &'static str)>,
}

impl JoinForm {
    fn render(&self, schema: &Schema, temporal: bool) -> String {
        let acc = |v: &str, f: &str| {
            let table = self.gens.iter().find(|g| g.0 == v).unwrap().1;
            if temporal && schema.get(table).unwrap().kind.is_temporal() {
                format!("(data {v}).{f}")
            } else {
                format!("{v}.{f}")
            }
        };
        let gens: Vec<String> = self
            .gens
            .iter()
            .map(|(v, t)| {
                if temporal && schema.get(t).unwrap().kind.is_temporal() {
                    format!("{v} <v- {t}")
                } else {
                    format!("{v} <- get {t}")
                }
            })
            .collect();
        let cond = self.cond.clone().unwrap_or_default();
        // Conditions are written with `{x:f}` placeholders.
        let mut rendered = String::new();
        let mut rest = cond.as_str();
        while let Some(i) = rest.find('{') {
            rendered.push_str(&rest[..i]);
            let j = rest[i..].find('}').unwrap() + i;
            let (v, f) = rest[i + 1..j].split_once(':').unwrap();
            rendered.push_str(&acc(v, f));
            rest = &rest[j + 1..];
        }
        rendered.push_str(rest);
        let head: Vec<String> = self
            .head
            .iter()
            .map(|(l, v, f)| format!("{l} = {}", acc(v, f)))
            .collect();
        let body = format!("[|({})|]", head.join(", "));
        let body = if self.cond.is_some() {
            format!("where ({rendered}) {body}")
        } else {
            body
        };
        format!("for ({}) {body}", gens.join(", "))
    }
}

fn join_form(rng: &mut impl Rng) -> Vec<JoinForm> {
    let on = |x: &str, y: &str| Some(format!("{{{x}:k}} == {{{y}:k}}"));
    let f = |gens, cond, head| JoinForm { gens, cond, head };
    let pick = rng.gen_range(0..7);
    let one = |i: u32| -> JoinForm {
        match i {
            0 => f(
                vec![("x", "r"), ("y", "s")],
                on("x", "y"),
                vec![("u", "x", "a"), ("w", "y", "b")],
            ),
            1 => f(
                vec![("x", "r"), ("y", "s")],
                Some("{x:k} == {y:k} && {x:a} <= {y:b}".into()),
                vec![("u", "x", "a"), ("w", "y", "b")],
            ),
            2 => f(
                vec![("x", "r")],
                Some("{x:a} > 1".into()),
                vec![("u", "x", "a"), ("w", "x", "k")],
            ),
            3 => f(
                vec![("x", "r"), ("y", "r")],
                on("x", "y"),
                vec![("u", "x", "a"), ("w", "y", "a")],
            ),
            4 => f(
                vec![("x", "r"), ("z", "p")],
                on("x", "z"),
                vec![("u", "x", "a"), ("w", "z", "c")],
            ),
            _ => f(
                vec![("x", "r"), ("y", "s"), ("z", "p")],
                Some("{x:k} == {y:k} && {y:k} == {z:k}".into()),
                vec![("u", "y", "b"), ("w", "z", "c")],
            ),
        }
    };
    if pick == 6 {
        vec![one(0), one(rng.gen_range(1..6))]
    } else {
        vec![one(pick)]
    }
}

fn join_db(rng: &mut impl Rng, schema: &Schema) -> Database {
    let mut db = Database::empty_for(schema);
    let mut points: Vec<i64> = vec![0];
    for (name, ts) in &schema.tables {
        let n = rng.gen_range(0..=5);
        let mut bag = Bag::new();
        for _ in 0..n {
            let data = Value::Record(
                ts.columns
                    .keys()
                    .map(|l| {
                        let hi = if l == "k" { 3 } else { 5 };
                        (l.clone(), Value::int(rng.gen_range(0..hi)))
                    })
                    .collect(),
            );
            if !ts.kind.is_temporal() {
                bag.insert(data);
                continue;
            }
            let s = match points.choose(rng) {
                Some(&p) if p < MAX_TS && rng.gen_bool(0.5) => p,
                _ => rng.gen_range(0..MAX_TS),
            };
            let e = if rng.gen_ratio(1, 3) {
                Time::FOREVER
            } else {
                let e = rng.gen_range(s + 1..=MAX_TS);
                points.push(e);
                Time::new(e)
            };
            points.push(s);
            bag.insert(Value::row(data, Time::new(s), e));
        }
        db.set_table(name.clone(), bag);
    }
    db
}

/// Every timestamp at which a snapshot can change, with midpoints between
/// neighbours and `forever`.
fn probe_points(db: &Database) -> Vec<Time> {
    let mut ends: BTreeSet<Time> = BTreeSet::new();
    for rows in db.tables.values() {
        for (_, s, e) in rows.iter().filter_map(Value::as_row) {
            ends.insert(s);
            ends.insert(e);
        }
    }
    let ordinary: Vec<i64> = ends
        .iter()
        .filter(|t| !t.is_sentinel())
        .map(|t| t.raw())
        .collect();
    let mut out: BTreeSet<Time> = ends.clone();
    for w in ordinary.windows(2) {
        out.insert(Time::new((w[0] + w[1]) / 2));
    }
    if let (Some(lo), Some(hi)) = (ordinary.first(), ordinary.last()) {
        out.insert(Time::new(lo - 1));
        out.insert(Time::new(hi + 1));
    }
    out.insert(Time::FOREVER);
    out.into_iter().collect()
}

fn join_trial(seed: u64) -> Result<TrialStats, String> {
    let mut rng = rng_for(seed);
    let schema = join_tables();
    let db = join_db(&mut rng, &schema);
    let forms = join_form(&mut rng);
    let temporal: Vec<String> = forms.iter().map(|f| f.render(&schema, true)).collect();
    let plain: Vec<String> = forms.iter().map(|f| f.render(&schema, false)).collect();
    let tables: BTreeSet<String> = schema.tables.keys().cloned().collect();
    let src = format!("join {{ {} }}", temporal.join(" ++ "));
    let term = parse_term(&src, &tables).map_err(|e| format!("{src}: {e}"))?;
    let trial = Trial {
        seed,
        check: "join",
        schema: schema.clone(),
        db: db.clone(),
        clock: Time::new(0),
        term,
        dialect: Dialect::Valid,
    };
    let stats =
        compare_translation(&trial, CurrentMode::Direct).map_err(|e| format!("{src}: {e}"))?;
    let term = annotate(&schema, &trial.term, Dialect::Valid).map_err(|e| e.to_string())?;
    let result = Interp::new(&schema, db.clone(), Time::new(0))
        .run(&term)
        .map_err(|e| e.to_string())?
        .into_bag()
        .ok_or("join result is not a bag")?;
    if let Some(bad) = result
        .iter()
        .find(|v| matches!(v.as_row(), Some((_, s, e)) if s >= e))
    {
        return Err(format!("{src}: empty period in result row {bad}"));
    }

    let mut snap_schema = Schema::new();
    for (n, ts) in &schema.tables {
        snap_schema = snap_schema.with_table(
            n.clone(),
            TableSchema::new(TableKind::Plain, ts.columns.clone()),
        );
    }
    let oracle_src = format!("query {{ {} }}", plain.join(" ++ "));
    let oracle = parse_term(&oracle_src, &tables).map_err(|e| e.to_string())?;
    for t in probe_points(&db) {
        let mut snap = Database::empty_for(&snap_schema);
        for (n, ts) in &schema.tables {
            let rows = if ts.kind.is_temporal() {
                snapshot_at(&schema, &db, n, t).map_err(|e| e.to_string())?
            } else {
                db.table(n).cloned().unwrap_or_default()
            };
            snap.set_table(n.clone(), rows);
        }
        let want = eval_read(&snap_schema, &snap, Time::new(0), &oracle)
            .map_err(|e| e.to_string())?
            .into_bag()
            .ok_or("oracle result is not a bag")?;
        let mut got = Bag::new();
        for (row, n) in result.counts() {
            if let Some((d, s, e)) = row.as_row() {
                if period_contains(s, e, t) {
                    got.insert_n(d.clone(), *n);
                }
            }
        }
        if got != want {
            return Err(format!(
                "{src}\n  at {t}: join gives {}, snapshots give {}",
                Value::Bag(got),
                Value::Bag(want)
            ));
        }
    }
    Ok(stats)
}

/// Sequenced join against the brute-force snapshot oracle.
pub fn check_join_oracle(seed: u64) -> Verdict {
    match join_trial(seed) {
        Ok(s) => Verdict::Match(s),
        Err(reason) => Verdict::Mismatch(Box::new(Counterexample {
            seed,
            check: "join",
            reason,
            ..Counterexample::default()
        })),
    }
}

/// One row of the overlap-case table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OverlapCase {
    pub label: String,
    pub case: u8,
    pub update: Vec<(i64, i64, i64)>,
    pub delete: Vec<(i64, i64, i64)>,
}

/// The period of validity every fixture starts from.
pub const FIXTURE_PV: (i64, i64) = (4, 8);

/// Periods of applicability with the case each exhibits and the exact
/// `(value, start, end)` rows expected after update and delete.
pub fn overlap_fixtures() -> Vec<(String, (i64, i64), OverlapCase)> {
    let c = |label: &str,
             pa: (i64, i64),
             case: u8,
             update: &[(i64, i64, i64)],
             delete: &[(i64, i64, i64)]| {
        (
            label.to_string(),
            pa,
            OverlapCase {
                label: label.to_string(),
                case,
                update: update.to_vec(),
                delete: delete.to_vec(),
            },
        )
    };
    vec![
        c("PA covers PV", (2, 10), 1, &[(1, 4, 8)], &[]),
        c("PA equals PV", (4, 8), 1, &[(1, 4, 8)], &[]),
        c(
            "PA overlaps the start",
            (2, 6),
            2,
            &[(0, 6, 8), (1, 4, 6)],
            &[(0, 6, 8)],
        ),
        c(
            "PA inside PV",
            (5, 7),
            3,
            &[(0, 4, 5), (0, 7, 8), (1, 5, 7)],
            &[(0, 4, 5), (0, 7, 8)],
        ),
        c(
            "PA overlaps the end",
            (6, 10),
            4,
            &[(0, 4, 6), (1, 6, 8)],
            &[(0, 4, 6)],
        ),
        c("PA after PV", (9, 11), 5, &[(0, 4, 8)], &[(0, 4, 8)]),
        c("PA before PV", (0, 2), 5, &[(0, 4, 8)], &[(0, 4, 8)]),
        c(
            "PA ends where PV starts",
            (1, 4),
            5,
            &[(0, 4, 8)],
            &[(0, 4, 8)],
        ),
        c(
            "PA starts where PV ends",
            (8, 10),
            5,
            &[(0, 4, 8)],
            &[(0, 4, 8)],
        ),
    ]
}

fn one_row_table() -> (Schema, Database) {
    let schema = Schema::new().with_table(
        "t",
        TableSchema::new(TableKind::Valid, [("v", BaseType::Int)]),
    );
    let mut db = Database::empty_for(&schema);
    db.set_table(
        "t",
        Bag::singleton(Value::row(
            Value::record([("v", Value::int(0))]),
            Time::new(FIXTURE_PV.0),
            Time::new(FIXTURE_PV.1),
        )),
    );
    (schema, db)
}

fn triples(db: &Database) -> Vec<(i64, i64, i64)> {
    let mut out: Vec<(i64, i64, i64)> = db
        .table("t")
        .map(|b| {
            b.iter()
                .filter_map(Value::as_row)
                .map(|(d, s, e)| {
                    let v = match d.as_record().and_then(|r| r.get("v")) {
                        Some(Value::Const(tlq_core::model::Const::Int(i))) => *i,
                        _ => -1,
                    };
                    (v, s.raw(), e.raw())
                })
                .collect()
        })
        .unwrap_or_default();
    out.sort();
    out
}

/// Runs every overlap fixture: direct and translated results must both
/// match the expected rows exactly, and the classifier must agree.
pub fn check_overlap_cases() -> Result<Vec<OverlapCase>, String> {
    let (schema, db) = one_row_table();
    let tables: BTreeSet<String> = ["t".to_string()].into();
    let mut out = Vec::new();
    for (label, (a, b), want) in overlap_fixtures() {
        let (pv_s, pv_e) = FIXTURE_PV;
        let case = overlap_case(Time::new(a), Time::new(b), Time::new(pv_s), Time::new(pv_e));
        if case != want.case {
            return Err(format!(
                "{label}: classified as case {case}, expected {}",
                want.case
            ));
        }
        let mut got = OverlapCase {
            label: label.clone(),
            case,
            update: Vec::new(),
            delete: Vec::new(),
        };
        for (op, src) in [
            (
                "update",
                format!("update sequenced (x <- t) between @{a} and @{b} where true set (v = 1)"),
            ),
            (
                "delete",
                format!("delete sequenced (x <- t) between @{a} and @{b} where true"),
            ),
        ] {
            let term = parse_term(&src, &tables).map_err(|e| e.to_string())?;
            let trial = Trial {
                seed: 0,
                check: "overlap",
                schema: schema.clone(),
                db: db.clone(),
                clock: Time::new(0),
                term: term.clone(),
                dialect: Dialect::Valid,
            };
            let stats = compare_translation(&trial, CurrentMode::Direct)
                .map_err(|e| format!("{label} {op}: {e}"))?;
            let rule = format!(
                "EV-Seq{}/{case}",
                if op == "update" { "Update" } else { "Delete" }
            );
            if stats.coverage.get(rule.as_str()).copied().unwrap_or(0) == 0 {
                return Err(format!("{label} {op}: rule {rule} did not fire"));
            }
            let annotated = annotate(&schema, &term, Dialect::Valid).map_err(|e| e.to_string())?;
            let mut it = Interp::new(&schema, db.clone(), Time::new(0));
            it.run(&annotated).map_err(|e| e.to_string())?;
            let rows = triples(&it.db);
            let expected = if op == "update" {
                &want.update
            } else {
                &want.delete
            };
            if &rows != expected {
                return Err(format!("{label} {op}: got {rows:?}, expected {expected:?}"));
            }
            if op == "update" {
                got.update = rows;
            } else {
                got.delete = rows;
            }
        }
        out.push(got);
    }
    Ok(out)
}
