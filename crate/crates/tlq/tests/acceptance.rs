//! Acceptance criteria. Each test prints one PASS or FAIL line.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use tlq::difftest::check::check_overlap_cases;
use tlq::difftest::{run_campaign, CampaignConfig, CampaignReport, Check};
use tlq::scenarios;
use tlq_core::interp::CurrentMode;
use tlq_core::model::{Bag, Time, Value};

/// Writes straight to the process's stderr so the line shows even when the
/// harness captures output.
fn report(n: u32, title: &str, started: Instant, outcome: &Result<String, String>) {
    let secs = started.elapsed().as_secs_f64();
    let line = match outcome {
        Ok(detail) => format!("criterion {n:2} PASS  {title} ({detail}; {secs:.2}s)"),
        Err(why) => format!("criterion {n:2} FAIL  {title} ({secs:.2}s): {why}"),
    };
    let _ = writeln!(std::io::stderr(), "{line}");
}

fn criterion(n: u32, title: &str, limit: Duration, body: impl FnOnce() -> Result<String, String>) {
    let started = Instant::now();
    let mut outcome = body();
    if outcome.is_ok() && started.elapsed() > limit {
        outcome = Err(format!("took longer than {}s", limit.as_secs_f64()));
    }
    report(n, title, started, &outcome);
    if let Err(why) = outcome {
        panic!("criterion {n} failed: {why}");
    }
}

fn rec(fields: &[(&str, Value)]) -> Value {
    Value::record(fields.iter().cloned())
}

fn row(data: Value, s: i64, e: Option<i64>) -> Value {
    Value::row(data, Time::new(s), e.map_or(Time::FOREVER, Time::new))
}

fn bag(items: Vec<Value>) -> Bag {
    items.into_iter().collect()
}

fn expect_eq(what: &str, got: &Bag, want: &Bag) -> Result<(), String> {
    if got == want {
        Ok(())
    } else {
        Err(format!(
            "{what}: got {}, expected {}",
            Value::Bag(got.clone()),
            Value::Bag(want.clone())
        ))
    }
}

fn frames(s: &scenarios::Scenario, mode: CurrentMode) -> Result<Vec<Bag>, String> {
    Ok(s.replay(mode)
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|f| f.rows)
        .collect())
}

fn task(name: &str, done: bool) -> Value {
    rec(&[("task", Value::str(name)), ("done", Value::bool(done))])
}

#[test]
fn criterion_01_todo_scenario() {
    criterion(
        1,
        "to-do list in transaction time",
        Duration::from_secs(1),
        || {
            let f = frames(&scenarios::todo(), CurrentMode::Direct)?;
            let hm = |h, m| Time::hm(h, m).raw();
            let want = bag(vec![
                row(task("Go shopping", true), hm(11, 0), None),
                row(task("Cook dinner", false), hm(11, 0), Some(hm(17, 30))),
                row(task("Walk the dog", false), hm(11, 0), None),
                row(task("Watch TV", false), hm(11, 0), Some(hm(19, 0))),
                row(task("Cook dinner", true), hm(17, 30), None),
            ]);
            expect_eq("final table", &f[2], &want)?;
            let want18 = bag(vec![
                task("Go shopping", true),
                task("Cook dinner", true),
                task("Walk the dog", false),
                task("Watch TV", false),
            ]);
            expect_eq("at(tasks, 18:00) query", &f[3], &want18)?;
            expect_eq("snapshot at 18:00", &f[4], &want18)?;
            let want_now = bag(vec![
                task("Go shopping", true),
                task("Cook dinner", true),
                task("Walk the dog", false),
            ]);
            expect_eq("current snapshot", &f[5], &want_now)?;
            Ok("5 rows, 4 at 18:00, 3 current".into())
        },
    );
}

fn employee(name: &str, position: &str, salary: i64) -> Value {
    rec(&[
        ("name", Value::str(name)),
        ("position", Value::str(position)),
        ("salary", Value::int(salary)),
    ])
}

#[test]
fn criterion_02_employees_scenario() {
    criterion(
        2,
        "employees in valid time, both current-update strategies",
        Duration::from_secs(1),
        || {
            let alice_l = row(employee("Alice", "Lecturer", 40000), 2010, Some(2018));
            let alice_sl = |end| row(employee("Alice", "Senior Lecturer", 50000), 2018, end);
            let bob = |end| row(employee("Bob", "PhD Student", 15000), 2019, Some(end));
            let charles = |end| row(employee("Charles", "PhD Student", 15000), 2018, Some(end));
            let prof = |s, e| row(employee("Dolores", "Professor", 70000), s, e);
            let head = row(
                employee("Dolores", "Head of School", 70000),
                2023,
                Some(2028),
            );
            let expected = [
                bag(vec![
                    alice_l.clone(),
                    alice_sl(None),
                    bob(2023),
                    charles(2022),
                    prof(2022, None),
                ]),
                bag(vec![
                    alice_l.clone(),
                    alice_sl(Some(2022)),
                    bob(2023),
                    charles(2022),
                    prof(2022, None),
                ]),
                bag(vec![
                    alice_l.clone(),
                    alice_sl(Some(2022)),
                    bob(2023),
                    charles(2022),
                    prof(2022, Some(2023)),
                    head.clone(),
                    prof(2028, None),
                ]),
                bag(vec![
                    alice_l.clone(),
                    alice_sl(Some(2022)),
                    bob(2024),
                    charles(2023),
                    prof(2022, Some(2023)),
                    head,
                    prof(2028, None),
                ]),
            ];
            let s = scenarios::employees();
            for mode in [CurrentMode::Direct, CurrentMode::Desugar] {
                let f = frames(&s, mode)?;
                if f.len() != expected.len() {
                    return Err(format!("{} frames", f.len()));
                }
                for (i, (got, want)) in f.iter().zip(&expected).enumerate() {
                    expect_eq(&format!("{mode:?} step {}", i + 1), got, want)?;
                }
            }
            Ok("4 steps under 2 strategies".into())
        },
    );
}

#[test]
fn criterion_03_sequenced_join() {
    criterion(
        3,
        "sequenced join of employees and salaries",
        Duration::from_secs(1),
        || {
            let f = frames(&scenarios::join(), CurrentMode::Direct)?;
            let result = f.last().ok_or("no frames")?;
            let ns =
                |n: &str, sal: i64| rec(&[("name", Value::str(n)), ("salary", Value::int(sal))]);
            let alice_want = bag(vec![
                row(ns("Alice", 38000), 2010, Some(2015)),
                row(ns("Alice", 40000), 2015, Some(2018)),
                row(ns("Alice", 50000), 2018, None),
            ]);
            let alice: Bag = result
                .iter()
                .filter(|v| {
                    v.as_row()
                        .and_then(|(d, _, _)| d.as_record())
                        .is_some_and(|r| r.get("name") == Some(&Value::str("Alice")))
                })
                .cloned()
                .collect();
            expect_eq("Alice's rows", &alice, &alice_want)?;
            let mut want = alice_want;
            for v in [
                row(ns("Bob", 15000), 2019, Some(2023)),
                row(ns("Charles", 15000), 2018, Some(2022)),
                row(ns("Dolores", 70000), 2022, None),
            ] {
                want.insert(v);
            }
            expect_eq("full result", result, &want)?;
            Ok(format!("{} rows, Alice has 3", result.len()))
        },
    );
}

fn campaign(check: Check, trials: u64, seed: u64) -> CampaignReport {
    let threads = std::thread::available_parallelism().map_or(2, |n| n.get());
    run_campaign(&CampaignConfig {
        check,
        trials,
        seed,
        threads,
    })
}

fn judge(r: &CampaignReport, want_coverage: bool) -> Result<String, String> {
    if let Some(m) = r.mismatches.first() {
        return Err(format!("{} mismatches; first:\n{m}", r.mismatches.len()));
    }
    if r.trials != r.matched {
        return Err(format!("{} of {} trials matched", r.matched, r.trials));
    }
    if want_coverage && !r.missing_rules().is_empty() {
        return Err(format!(
            "rules never exercised: {}",
            r.missing_rules().join(", ")
        ));
    }
    Ok(format!(
        "{} trials, 0 mismatches, {} aborted",
        r.trials, r.aborted
    ))
}

#[test]
fn criterion_04_transaction_time_translation() {
    criterion(
        4,
        "transaction-time translation, 1000 random programs",
        Duration::from_secs(60),
        || judge(&campaign(Check::TheoremT, 1000, 0), true),
    );
}

#[test]
fn criterion_05_valid_time_translation() {
    criterion(
        5,
        "valid-time translation, 1000 random programs",
        Duration::from_secs(60),
        || judge(&campaign(Check::TheoremV, 1000, 0), true),
    );
}

#[test]
fn criterion_06_overlap_cases() {
    criterion(
        6,
        "sequenced update and delete overlap cases",
        Duration::from_secs(1),
        || {
            let cases = check_overlap_cases()?;
            let mut counts = std::collections::BTreeMap::new();
            for c in &cases {
                counts
                    .entry(c.case)
                    .or_insert((c.update.len(), c.delete.len()));
                if counts[&c.case] != (c.update.len(), c.delete.len()) {
                    return Err(format!(
                        "{} disagrees with other case {} fixtures",
                        c.label, c.case
                    ));
                }
            }
            let got: Vec<(usize, usize)> = (1..=5)
                .map(|k| counts.get(&k).copied().unwrap_or_default())
                .collect();
            let want = vec![(1, 0), (2, 1), (3, 2), (2, 1), (1, 1)];
            if got != want {
                return Err(format!("row counts {got:?}, expected {want:?}"));
            }
            if !cases
                .iter()
                .any(|c| c.label.contains("ends where PV starts") && c.case == 5)
            {
                return Err("touching fixture missing".into());
            }
            Ok(format!("{} fixtures", cases.len()))
        },
    );
}

#[test]
fn criterion_07_normaliser() {
    criterion(
        7,
        "normaliser on 300 generated queries",
        Duration::from_secs(60),
        || judge(&campaign(Check::Normalizer, 300, 0), false),
    );
}

#[test]
fn criterion_08_join_oracle() {
    criterion(
        8,
        "sequenced join against snapshots, 200 instances",
        Duration::from_secs(60),
        || judge(&campaign(Check::Join, 200, 0), false),
    );
}

#[test]
fn criterion_09_type_soundness() {
    criterion(
        9,
        "type soundness on 2000 programs",
        Duration::from_secs(120),
        || judge(&campaign(Check::Soundness, 2000, 0), false),
    );
}

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/sql_corpus")
}

fn compile(path: &Path) -> Result<String, String> {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let args = ["tlq".as_ref(), "emit-sql".as_ref(), path.as_os_str()];
    let code = tlq::cli::main_with(args, &mut out, &mut err);
    if code != 0 {
        return Err(format!(
            "{}: {}",
            path.display(),
            String::from_utf8_lossy(&err).trim()
        ));
    }
    String::from_utf8(out).map_err(|e| e.to_string())
}

#[test]
fn criterion_10_sql_golden_files() {
    criterion(
        10,
        "SQL emission golden files",
        Duration::from_secs(60),
        || {
            let bless = std::env::var_os("TLQ_BLESS").is_some();
            let mut files: Vec<PathBuf> = std::fs::read_dir(corpus_dir())
                .map_err(|e| e.to_string())?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "tq"))
                .collect();
            files.sort();
            if files.len() < 25 {
                return Err(format!("corpus has {} queries, expected 25", files.len()));
            }
            let mut joins = 0;
            for f in &files {
                let first = compile(f)?;
                let second = compile(f)?;
                if first != second {
                    return Err(format!("{}: two runs differ", f.display()));
                }
                if f.to_string_lossy().contains("sequenced_join") {
                    joins += 1;
                }
                let golden = f.with_extension("sql");
                if bless {
                    std::fs::write(&golden, &first).map_err(|e| e.to_string())?;
                    continue;
                }
                let want = std::fs::read_to_string(&golden).map_err(|e| {
                    format!(
                        "{}: {e}; run with TLQ_BLESS=1 to create it",
                        golden.display()
                    )
                })?;
                if want != first {
                    return Err(format!(
                        "{} differs from its golden file:\n{first}",
                        f.display()
                    ));
                }
            }
            if joins == 0 {
                return Err("no sequenced join in the corpus".into());
            }
            Ok(format!("{} queries, {joins} sequenced joins", files.len()))
        },
    );
}
