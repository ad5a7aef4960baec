use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value as Json;

fn tlq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tlq"))
        .args(args)
        .output()
        .expect("tlq binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn program(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "programs", name]
        .iter()
        .collect();
    p.to_string_lossy().into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn typecheck_prints_type_and_effects() {
    let o = tlq(&["typecheck", &program("todo_at.tq")]);
    assert_eq!(o.status.code(), Some(0));
    assert!(
        stdout(&o).contains("(done: bool, task: string)"),
        "{}",
        stdout(&o)
    );
}

#[test]
fn effectful_query_body_is_a_type_error() {
    let o = tlq(&["--json", "typecheck", &program("ill_effected.tq")]);
    assert_eq!(o.status.code(), Some(1));
    let j: Json = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(j["ok"], false);
    assert_eq!(j["error"]["kind"], "effect-violation");
}

#[test]
fn todo_chain_through_a_snapshot_file() {
    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("todo.json");
    let db = db.to_str().unwrap();
    for (file, at) in [
        ("todo_insert.tq", "11:00"),
        ("todo_update.tq", "17:30"),
        ("todo_delete.tq", "19:00"),
    ] {
        let o = tlq(&["run", &program(file), "--db", db, "--write-db", "--at", at]);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{file}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    let o = tlq(&[
        "--json",
        "run",
        &program("todo_at.tq"),
        "--db",
        db,
        "--at",
        "19:00",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let j: Json = serde_json::from_str(stdout(&o).trim()).unwrap();
    let rows = j["value"].as_array().expect("a bag");
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().any(|r| r["task"] == "Watch TV"));

    let snap: Json = serde_json::from_str(&std::fs::read_to_string(db).unwrap()).unwrap();
    assert_eq!(snap["clock"], 19 * 60);
    assert_eq!(snap["tables"]["tasks"]["rows"].as_array().unwrap().len(), 5);

    // The clock may not run backwards.
    let o = tlq(&[
        "run",
        &program("todo_delete.tq"),
        "--db",
        db,
        "--write-db",
        "--at",
        "12:00",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let after: Json = serde_json::from_str(&std::fs::read_to_string(db).unwrap()).unwrap();
    assert_eq!(after, snap);
}

#[test]
fn aborted_program_leaves_snapshot_alone() {
    let dir = tempfile::tempdir().unwrap();
    let db = write(
        dir.path(),
        "db.json",
        r#"{"tables": {"emp": {"kind": "valid", "columns": {"name": "string"}, "rows": []}}}"#,
    );
    let before = std::fs::read_to_string(&db).unwrap();
    let prog = write(
        dir.path(),
        "bad.tq",
        "table emp(name: string) valid;\nmain = insert sequenced emp values [|row((name = \"x\"), @10, @5)|];\n",
    );
    let o = tlq(&["run", &prog, "--db", &db, "--write-db", "--at", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("aborted"));
    assert_eq!(std::fs::read_to_string(&db).unwrap(), before);
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(tlq(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(tlq(&["replay", "nonesuch"]).status.code(), Some(64));
    assert_eq!(tlq(&["difftest"]).status.code(), Some(64));
    assert_eq!(tlq(&["--help"]).status.code(), Some(0));
}

#[test]
fn missing_file_reports_json_error() {
    let o = tlq(&["--json", "typecheck", "/nonexistent/x.tq"]);
    assert_eq!(o.status.code(), Some(1));
    let j: Json = serde_json::from_str(stdout(&o).lines().next().unwrap()).unwrap();
    assert_eq!(j["ok"], false);
    assert!(j["error"].as_str().unwrap().contains("cannot read"));
}

#[test]
fn replay_todo_shows_every_frame() {
    let o = tlq(&["replay", "todo"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for needle in [
        "Go shopping",
        "Watch TV",
        "17:30",
        "current snapshot of tasks",
    ] {
        assert!(text.contains(needle), "missing {needle}:\n{text}");
    }
}

#[test]
fn replay_employees_agrees_across_strategies() {
    let a = tlq(&["--json", "replay", "employees", "--current", "direct"]);
    let b = tlq(&["--json", "replay", "employees", "--current", "desugar"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn translate_output_typechecks_as_plain_program() {
    let dir = tempfile::tempdir().unwrap();
    let o = tlq(&["translate", "--dialect", "t", &program("todo_update.tq")]);
    assert_eq!(o.status.code(), Some(0));
    let out = write(dir.path(), "plain.tq", &stdout(&o));
    let o = tlq(&["--json", "typecheck", &out]);
    let j: Json = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(j["ok"], true, "{j}");
    assert_eq!(j["dialect"], "linq");
}

#[test]
fn emit_sql_for_sequenced_join() {
    let o = tlq(&["emit-sql", &program("salary_join.tq")]);
    assert_eq!(o.status.code(), Some(0));
    let sql = stdout(&o);
    assert!(
        sql.contains("GREATEST(x1.\"start\", x2.\"start\")"),
        "{sql}"
    );
    assert!(sql.contains("< LEAST(x1.\"end\", x2.\"end\")"), "{sql}");
}

#[test]
fn emit_sql_honours_dialect_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", r#"{"forever": "'infinity'"}"#);
    let prog = write(
        dir.path(),
        "q.tq",
        "table e(name: string) valid;\nmain = query { for (x <v- e) where (end x == forever) [|(name = (data x).name)|] };\n",
    );
    let o = tlq(&["emit-sql", &prog, "--dialect-config", &cfg]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(stdout(&o).contains("'infinity'"), "{}", stdout(&o));
}

#[test]
fn difftest_writes_junit_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let junit = dir.path().join("report.xml");
    let o = tlq(&[
        "--json",
        "difftest",
        "--dialect",
        "v",
        "--n",
        "50",
        "--seed",
        "3",
        "--junit",
        junit.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let j: Json = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(j["ok"], true);
    assert_eq!(j["trials"], 50);
    let xml = std::fs::read_to_string(junit).unwrap();
    assert!(xml.starts_with("<?xml"));
    assert!(xml.contains("tests=\"50\" failures=\"0\""), "{xml}");
}

#[test]
fn difftest_overlap_check() {
    let o = tlq(&["difftest", "--check", "overlap"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("case 5"), "{}", stdout(&o));
}
