//! The `tlq` command line.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value as Json};
use tlq_core::interp::CurrentMode;
use tlq_core::model::{Schema, Term, Time};
use tlq_core::querycomp::{
    emit_sql, normalize, rewrite_sequenced_join, HeadStyle, SqlConfig, SqlMode,
};
use tlq_core::surface::{parse_program, print_program, print_term, Decl, SourceProgram};
use tlq_core::translate::{translate_t, translate_v};
use tlq_core::typecheck::{
    annotate, check_program, dialect_of, infer, Dialect, TypeEnv, TypeError,
};

use crate::difftest::{check::check_overlap_cases, run_campaign, CampaignConfig, Check};
use crate::engine::{value_to_json, Outcome, Store};
use crate::scenarios;

/// Exit status for a successful command.
pub const EXIT_OK: i32 = 0;
/// Something went wrong: bad input, a type error, a failing check.
pub const EXIT_ERROR: i32 = 1;
/// A program aborted on a dynamic check and nothing was written.
pub const EXIT_ABORTED: i32 = 2;
/// The command line itself was malformed.
pub const EXIT_USAGE: i32 = 64;

#[derive(Parser, Debug)]
#[command(name = "tlq", version, about = "Temporal language-integrated queries")]
struct Cli {
    /// Machine-readable JSON output.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum DialectArg {
    T,
    V,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum CurrentArg {
    Direct,
    Desugar,
}

impl From<CurrentArg> for CurrentMode {
    fn from(c: CurrentArg) -> CurrentMode {
        match c {
            CurrentArg::Direct => CurrentMode::Direct,
            CurrentArg::Desugar => CurrentMode::Desugar,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Infer the type and effects of a program.
    Typecheck { file: PathBuf },
    /// Run a program against a snapshot and print its result.
    Run {
        file: PathBuf,
        /// Snapshot to run against; tables missing from it start empty.
        #[arg(long)]
        db: Option<PathBuf>,
        /// Clock for this run: an integer, `hh:mm`, `forever` or `beginning`.
        /// Defaults to the wall clock in minutes since the Unix epoch.
        #[arg(long)]
        at: Option<String>,
        /// Save the resulting database back to the snapshot.
        #[arg(long, requires = "db")]
        write_db: bool,
        #[arg(long, value_enum, default_value = "direct")]
        current: CurrentArg,
    },
    /// Print the plain program a temporal program translates to.
    Translate {
        file: PathBuf,
        #[arg(long, value_enum)]
        dialect: DialectArg,
        #[arg(long, value_enum, default_value = "direct")]
        current: CurrentArg,
    },
    /// Print the normal form of a query.
    Normalize { file: PathBuf },
    /// Print the SQL for a query or a sequenced join.
    EmitSql {
        file: PathBuf,
        /// JSON object overriding `forever`, `beginning` and `now` literals.
        #[arg(long)]
        dialect_config: Option<PathBuf>,
    },
    /// Differentially test the translations on random programs.
    Difftest {
        /// Shorthand for `--check theorem-t` or `--check theorem-v`.
        #[arg(long, value_enum)]
        dialect: Option<DialectArg>,
        /// theorem-t, theorem-v, soundness, normalizer, join or overlap.
        #[arg(long, conflicts_with = "dialect")]
        check: Option<String>,
        #[arg(long, default_value_t = 1000)]
        n: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        threads: Option<usize>,
        /// Write a JUnit XML report here.
        #[arg(long)]
        junit: Option<PathBuf>,
    },
    /// Replay a built-in scenario: todo, employees or join.
    Replay {
        scenario: String,
        #[arg(long, value_enum, default_value = "direct")]
        current: CurrentArg,
    },
}

/// Failure of a command, carrying its exit status.
struct Failure {
    code: i32,
    error: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Failure {
        Failure {
            code: EXIT_ERROR,
            error,
        }
    }
}

impl From<crate::engine::EngineError> for Failure {
    fn from(e: crate::engine::EngineError) -> Failure {
        anyhow::Error::new(e).into()
    }
}

type CmdResult = Result<i32, Failure>;

/// Runs the command line `args` (program name first), writing to `out` and
/// `err`, and returns the exit status.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    let json = cli.json;
    match dispatch(cli, out) {
        Ok(code) => code,
        Err(Failure { code, error }) => {
            if json {
                let _ = writeln!(
                    out,
                    "{}",
                    json!({ "ok": false, "error": format!("{error:#}") })
                );
            }
            let _ = writeln!(err, "error: {error:#}");
            code
        }
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> CmdResult {
    let json = cli.json;
    match cli.command {
        Command::Typecheck { file } => typecheck(&file, json, out),
        Command::Run {
            file,
            db,
            at,
            write_db,
            current,
        } => run(
            &file,
            db.as_deref(),
            at.as_deref(),
            write_db,
            current.into(),
            json,
            out,
        ),
        Command::Translate {
            file,
            dialect,
            current,
        } => translate(&file, dialect, current.into(), json, out),
        Command::Normalize { file } => normalize_cmd(&file, json, out),
        Command::EmitSql {
            file,
            dialect_config,
        } => emit_sql_cmd(&file, dialect_config.as_deref(), json, out),
        Command::Difftest {
            dialect,
            check,
            n,
            seed,
            threads,
            junit,
        } => difftest(
            dialect,
            check.as_deref(),
            n,
            seed,
            threads,
            junit.as_deref(),
            json,
            out,
        ),
        Command::Replay { scenario, current } => replay(&scenario, current.into(), json, out),
    }
}

fn emit(out: &mut dyn Write, text: impl std::fmt::Display) -> anyhow::Result<()> {
    writeln!(out, "{text}").context("cannot write output")
}

fn load_source(path: &Path) -> anyhow::Result<SourceProgram> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_program(&text).map_err(|e| anyhow!("{}:{e}", path.display()))
}

fn type_error_json(e: &TypeError) -> Json {
    json!({
        "kind": e.kind.name(),
        "message": e.message,
        "location": e.location,
        "expected": e.expected.as_ref().map(ToString::to_string),
        "found": e.found.as_ref().map(ToString::to_string),
    })
}

fn typecheck(file: &Path, json: bool, out: &mut dyn Write) -> CmdResult {
    let src = load_source(file)?;
    match check_program(&src.schema(), &src.to_term()) {
        Ok(c) => {
            if json {
                emit(
                    out,
                    json!({
                        "ok": true,
                        "type": c.ty.to_string(),
                        "effects": c.effects.to_string(),
                        "dialect": c.dialect.name(),
                    }),
                )?;
            } else {
                emit(out, format_args!("{} ! {}", c.ty, c.effects))?;
            }
            Ok(EXIT_OK)
        }
        Err(e) => {
            if json {
                emit(out, json!({ "ok": false, "error": type_error_json(&e) }))?;
                Ok(EXIT_ERROR)
            } else {
                Err(anyhow!("{e}").into())
            }
        }
    }
}

/// Parses a clock: `forever`, `beginning`, `hh:mm`, or an integer with an
/// optional leading `@`.
pub fn parse_clock(s: &str) -> anyhow::Result<Time> {
    let s = s.trim();
    match s {
        "forever" | "inf" => return Ok(Time::FOREVER),
        "beginning" | "-inf" => return Ok(Time::BEGINNING),
        _ => {}
    }
    let s = s.strip_prefix('@').unwrap_or(s);
    if let Some((h, m)) = s.split_once(':') {
        let h: i64 = h.parse().with_context(|| format!("bad hour in `{s}`"))?;
        let m: i64 = m.parse().with_context(|| format!("bad minute in `{s}`"))?;
        if !(0..60).contains(&m) || h < 0 {
            bail!("`{s}` is not a valid hh:mm time");
        }
        return Ok(Time::hm(h, m));
    }
    let n: i64 = s.parse().with_context(|| format!("`{s}` is not a time"))?;
    Ok(Time::new(n))
}

fn wall_clock() -> Time {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    Time::new((secs / 60) as i64)
}

/// The snapshot schema extended with tables the program declares. A table
/// declared differently in both places is an error.
fn merged_schema(store: &Schema, program: &Schema) -> anyhow::Result<Schema> {
    let mut out = store.clone();
    for (name, ts) in &program.tables {
        match store.get(name) {
            Some(existing) if existing != ts => {
                bail!("table `{name}` is declared differently in the program and the snapshot")
            }
            Some(_) => {}
            None => {
                out.tables.insert(name.clone(), ts.clone());
            }
        }
    }
    Ok(out)
}

fn run(
    file: &Path,
    db: Option<&Path>,
    at: Option<&str>,
    write_db: bool,
    current: CurrentMode,
    json: bool,
    out: &mut dyn Write,
) -> CmdResult {
    let src = load_source(file)?;
    let mut store = match db {
        Some(p) if p.exists() || !write_db => Store::load(p)?,
        _ => Store::new(Schema::new()),
    };
    store.schema = merged_schema(&store.schema, &src.schema())?;
    for name in store.schema.tables.keys() {
        if store.db.table(name).is_none() {
            store.db.set_table(name.clone(), Default::default());
        }
    }
    let clock = match at {
        Some(s) => parse_clock(s)?,
        None => wall_clock(),
    };
    match store.apply(&src.to_term(), clock, current)? {
        Outcome::Committed { value, .. } => {
            if let (true, Some(p)) = (write_db, db) {
                store.save(p)?;
            }
            let v = value_to_json(&value);
            if json {
                emit(out, json!({ "ok": true, "value": v }))?;
            } else {
                emit(out, v)?;
            }
            Ok(EXIT_OK)
        }
        Outcome::Aborted { reason } => {
            if json {
                emit(out, json!({ "ok": false, "aborted": reason }))?;
            }
            Err(Failure {
                code: EXIT_ABORTED,
                error: anyhow!("aborted: {reason}; the database is unchanged"),
            })
        }
    }
}

fn with_tables(schema: &Schema, main: Term) -> String {
    let mut decls: Vec<Decl> = schema
        .tables
        .iter()
        .map(|(name, schema)| Decl::Table {
            name: name.clone(),
            schema: schema.clone(),
        })
        .collect();
    decls.push(Decl::Main(main));
    print_program(&SourceProgram { decls })
}

fn translate(
    file: &Path,
    dialect: DialectArg,
    current: CurrentMode,
    json: bool,
    out: &mut dyn Write,
) -> CmdResult {
    let src = load_source(file)?;
    let schema = src.schema();
    let term = src.to_term();
    let want = match dialect {
        DialectArg::T => Dialect::Transaction,
        DialectArg::V => Dialect::Valid,
    };
    let annotated = annotate(&schema, &term, want).map_err(|e| anyhow!("{e}"))?;
    let translated = match want {
        Dialect::Transaction => translate_t(&schema, &annotated),
        _ => translate_v(&schema, &annotated, current),
    }
    .map_err(|e| anyhow!("{e}"))?;
    let text = with_tables(&schema.flattened(), translated);
    if json {
        emit(out, json!({ "ok": true, "program": text }))?;
    } else {
        write!(out, "{text}").context("cannot write output")?;
    }
    Ok(EXIT_OK)
}

/// The query body of a program's main term: the body of `query`, of
/// `join`, or the term itself. Returns whether it was a join.
fn query_body(src: &SourceProgram) -> anyhow::Result<(Schema, Term, bool)> {
    let schema = src.schema();
    let term = src.to_term();
    let dialect = dialect_of(&schema, &term).map_err(|e| anyhow!("{e}"))?;
    let (_, eff) = infer(&schema, &TypeEnv::new(), &term, dialect).map_err(|e| anyhow!("{e}"))?;
    if eff.write {
        bail!("only read-only queries can be normalised; this program has effects {eff}");
    }
    let mut body = term;
    // Definitions are bound around main by `let`; keep them, they normalise away.
    let join = is_join(&body);
    if join {
        body = strip_join(body);
    } else if let Term::Query(m) = body {
        body = *m;
    }
    Ok((schema, body, join))
}

fn is_join(t: &Term) -> bool {
    match t {
        Term::Join(_) => true,
        Term::Apply(f, _) => {
            matches!(&**f, Term::Lambda { param_ty: None, body, .. } if is_join(body))
        }
        _ => false,
    }
}

fn strip_join(t: Term) -> Term {
    match t {
        Term::Join(m) => *m,
        Term::Apply(f, arg) => match *f {
            Term::Lambda {
                param,
                param_ty: None,
                body,
            } => Term::let_in(param, *arg, strip_join(*body)),
            other => Term::Apply(Box::new(other), arg),
        },
        other => other,
    }
}

fn normalize_cmd(file: &Path, json: bool, out: &mut dyn Write) -> CmdResult {
    let src = load_source(file)?;
    let (schema, body, join) = query_body(&src)?;
    let nf = normalize(&schema, &body).map_err(|e| anyhow!("{e}"))?;
    let text = if join {
        print_term(&rewrite_sequenced_join(&nf, HeadStyle::Row).map_err(|e| anyhow!("{e}"))?)
    } else {
        nf.to_string()
    };
    if json {
        emit(
            out,
            json!({ "ok": true, "normal_form": text, "comprehensions": nf.comps.len() }),
        )?;
    } else {
        emit(out, text)?;
    }
    Ok(EXIT_OK)
}

/// Reads a dialect configuration: a JSON object whose optional string
/// fields `forever`, `beginning` and `now` replace the default literals.
pub fn load_sql_config(path: &Path) -> anyhow::Result<SqlConfig> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let j: Json =
        serde_json::from_str(&text).with_context(|| format!("{} is not JSON", path.display()))?;
    let obj = j
        .as_object()
        .ok_or_else(|| anyhow!("dialect config must be a JSON object"))?;
    let mut cfg = SqlConfig::default();
    for (k, v) in obj {
        let s = match v {
            Json::String(s) => s.clone(),
            Json::Number(n) => n.to_string(),
            _ => bail!("dialect config field `{k}` must be a string or number"),
        };
        match k.as_str() {
            "forever" => cfg.forever = s,
            "beginning" => cfg.beginning = s,
            "now" => cfg.now = s,
            _ => bail!("unknown dialect config field `{k}`"),
        }
    }
    Ok(cfg)
}

fn emit_sql_cmd(file: &Path, config: Option<&Path>, json: bool, out: &mut dyn Write) -> CmdResult {
    let cfg = match config {
        Some(p) => load_sql_config(p)?,
        None => SqlConfig::default(),
    };
    let src = load_source(file)?;
    let (schema, body, join) = query_body(&src)?;
    let nf = normalize(&schema, &body).map_err(|e| anyhow!("{e}"))?;
    let mode = if join {
        SqlMode::SequencedJoin
    } else {
        SqlMode::Query
    };
    let sql = emit_sql(&nf, mode, &cfg).map_err(|e| anyhow!("{e}"))?;
    if json {
        emit(out, json!({ "ok": true, "sql": sql }))?;
    } else {
        emit(out, sql.trim_end())?;
    }
    Ok(EXIT_OK)
}

#[allow(clippy::too_many_arguments)]
fn difftest(
    dialect: Option<DialectArg>,
    check: Option<&str>,
    n: u64,
    seed: u64,
    threads: Option<usize>,
    junit: Option<&Path>,
    json: bool,
    out: &mut dyn Write,
) -> CmdResult {
    let name = match (dialect, check) {
        (Some(DialectArg::T), _) => "theorem-t",
        (Some(DialectArg::V), _) => "theorem-v",
        (None, Some(c)) => c,
        (None, None) => {
            return Err(Failure {
                code: EXIT_USAGE,
                error: anyhow!("difftest needs --dialect or --check"),
            })
        }
    };
    if name == "overlap" {
        return overlap(json, out);
    }
    let check: Check = name.parse().map_err(|e: String| Failure {
        code: EXIT_USAGE,
        error: anyhow!(e),
    })?;
    let threads =
        threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let report = run_campaign(&CampaignConfig {
        check,
        trials: n,
        seed,
        threads,
    });
    if let Some(p) = junit {
        fs::write(p, report.junit()).with_context(|| format!("cannot write {}", p.display()))?;
    }
    if json {
        let coverage: serde_json::Map<String, Json> = report
            .coverage
            .iter()
            .map(|(k, v)| (k.to_string(), json!(v)))
            .collect();
        emit(
            out,
            json!({
                "ok": report.passed(),
                "check": check.name(),
                "seed": seed,
                "trials": report.trials,
                "matched": report.matched,
                "mismatched": report.mismatches.len(),
                "aborted": report.aborted,
                "rejection_rate": report.rejection_rate(),
                "missing_rules": report.missing_rules(),
                "coverage": coverage,
                "counterexamples": report.mismatches.iter().map(|m| json!({
                    "seed": m.seed,
                    "reason": m.reason,
                    "program": m.program,
                    "db": m.db,
                    "clock": m.clock.map(|c| c.to_string()),
                })).collect::<Vec<_>>(),
            }),
        )?;
    } else {
        emit(out, report.summary())?;
        for m in &report.mismatches {
            emit(out, format_args!("\n{m}"))?;
        }
    }
    Ok(if report.passed() { EXIT_OK } else { EXIT_ERROR })
}

fn overlap(json: bool, out: &mut dyn Write) -> CmdResult {
    let cases = check_overlap_cases().map_err(|e| anyhow!("overlap fixture failed: {e}"))?;
    if json {
        let rows: Vec<Json> = cases
            .iter()
            .map(|c| json!({ "fixture": c.label, "case": c.case, "update": c.update, "delete": c.delete }))
            .collect();
        emit(out, json!({ "ok": true, "fixtures": rows }))?;
    } else {
        let rows = |n: usize| {
            if n == 1 {
                "1 row".to_string()
            } else {
                format!("{n} rows")
            }
        };
        for c in &cases {
            emit(
                out,
                format_args!(
                    "case {}, {}: update leaves {}, delete leaves {}",
                    c.case,
                    c.label,
                    rows(c.update.len()),
                    rows(c.delete.len())
                ),
            )?;
        }
    }
    Ok(EXIT_OK)
}

fn replay(name: &str, current: CurrentMode, json: bool, out: &mut dyn Write) -> CmdResult {
    let s = scenarios::by_name(name).ok_or_else(|| Failure {
        code: EXIT_USAGE,
        error: anyhow!(
            "unknown scenario `{name}`; choose one of {}",
            scenarios::NAMES.join(", ")
        ),
    })?;
    let frames = s.replay(current).map_err(|e| anyhow!("{e}"))?;
    if json {
        let frames: Vec<Json> = frames
            .iter()
            .map(|f| json!({ "title": f.title, "rows": f.rows.iter().map(value_to_json).collect::<Vec<_>>() }))
            .collect();
        emit(
            out,
            json!({ "ok": true, "scenario": s.name, "frames": frames }),
        )?;
    } else {
        write!(out, "{}", s.render(&frames)).context("cannot write output")?;
    }
    Ok(EXIT_OK)
}
