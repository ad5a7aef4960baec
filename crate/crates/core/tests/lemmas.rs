//! Properties of pure evaluation and of the translations on pure terms,
//! checked on randomly generated terms.
//!
//! Terms are produced as source text from a byte tape supplied by proptest,
//! so shrinking the tape shrinks the term. A zero byte always picks a leaf,
//! which makes an exhausted tape terminate the term.

use proptest::prelude::*;
use tlq_core::interp::{eval_pure, evaluate, value_to_term, CurrentMode};
use tlq_core::model::{
    restrict, Bag, BaseType, Database, Env, Schema, TableKind, TableSchema, Term, Time, Type, Value,
};
use tlq_core::surface::parse_term;
use tlq_core::translate::{translate_t, translate_v, translate_value};
use tlq_core::typecheck::{annotate, infer, Dialect, TypeEnv};

struct Gen<'a> {
    tape: &'a [u8],
    pos: usize,
    rows: bool,
    recs: Vec<String>,
    row_vars: Vec<String>,
    fresh: u32,
}

impl<'a> Gen<'a> {
    fn new(tape: &'a [u8], rows: bool, recs: &[&str]) -> Gen<'a> {
        Gen {
            tape,
            pos: 0,
            rows,
            recs: recs.iter().map(|s| s.to_string()).collect(),
            row_vars: Vec::new(),
            fresh: 0,
        }
    }

    fn pick(&mut self, n: usize) -> usize {
        let b = self.tape.get(self.pos).copied().unwrap_or(0);
        self.pos += 1;
        b as usize % n
    }

    fn var(&mut self, scope: &[String]) -> Option<String> {
        if scope.is_empty() {
            None
        } else {
            let i = self.pick(scope.len());
            Some(scope[i].clone())
        }
    }

    fn int(&mut self, d: u32) -> String {
        match if d == 0 { 0 } else { self.pick(5) } {
            0 => match self.pick(3) {
                1 => match self.var(&self.recs.clone()) {
                    Some(v) => format!("{v}.a"),
                    None => self.pick(5).to_string(),
                },
                2 => match self.var(&self.row_vars.clone()) {
                    Some(r) => format!("(data {r}).a"),
                    None => self.pick(5).to_string(),
                },
                _ => self.pick(5).to_string(),
            },
            1 => format!("({} + {})", self.int(d - 1), self.int(d - 1)),
            2 => format!("({} * {})", self.int(d - 1), self.int(d - 1)),
            3 => format!("({} - {})", self.int(d - 1), self.int(d - 1)),
            _ => format!(
                "(if {} then {} else {})",
                self.boolean(d - 1),
                self.int(d - 1),
                self.int(d - 1)
            ),
        }
    }

    fn boolean(&mut self, d: u32) -> String {
        match if d == 0 { 0 } else { self.pick(6) } {
            0 => match self.pick(3) {
                1 => match self.var(&self.recs.clone()) {
                    Some(v) => format!("{v}.b"),
                    None => "true".into(),
                },
                2 => match self.var(&self.row_vars.clone()) {
                    Some(r) => format!("(data {r}).b"),
                    None => "false".into(),
                },
                _ => ["true", "false"][self.pick(2)].into(),
            },
            1 => format!("({} < {})", self.int(d - 1), self.int(d - 1)),
            2 => format!("({} == {})", self.int(d - 1), self.int(d - 1)),
            3 => format!("({} && {})", self.boolean(d - 1), self.boolean(d - 1)),
            4 => format!("not({})", self.boolean(d - 1)),
            _ if self.rows => format!("({} < {})", self.time(d - 1), self.time(d - 1)),
            _ => format!("({} || {})", self.boolean(d - 1), self.boolean(d - 1)),
        }
    }

    fn time(&mut self, d: u32) -> String {
        match if d == 0 { 0 } else { self.pick(3) } {
            0 => match (self.pick(3), self.var(&self.row_vars.clone())) {
                (1, Some(r)) => format!("start {r}"),
                (2, Some(r)) => format!("end {r}"),
                _ => format!("@{}", self.pick(8)),
            },
            1 => format!("greatest({}, {})", self.time(d - 1), self.time(d - 1)),
            _ => format!("least({}, {})", self.time(d - 1), self.time(d - 1)),
        }
    }

    fn record(&mut self, d: u32) -> String {
        format!("(a = {}, b = {})", self.int(d), self.boolean(d))
    }

    fn fresh(&mut self, prefix: &str) -> String {
        self.fresh += 1;
        format!("{prefix}{}", self.fresh)
    }

    fn bag(&mut self, d: u32) -> String {
        match if d == 0 { 0 } else { self.pick(4) } {
            0 => format!("[|{}|]", self.record(d.saturating_sub(1))),
            1 => format!("({} ++ {})", self.bag(d - 1), self.bag(d - 1)),
            2 => {
                let src = self.bag(d - 1);
                let y = self.fresh("y");
                self.recs.push(y.clone());
                let body = format!("where ({}) [|{}|]", self.boolean(d - 1), self.record(d - 1));
                self.recs.pop();
                format!("(for ({y} <- {src}) {body})")
            }
            _ if self.rows => {
                let src = self.row_bag(d - 1);
                let r = self.fresh("r");
                self.row_vars.push(r.clone());
                let body = format!("where ({}) [|{}|]", self.boolean(d - 1), self.record(d - 1));
                self.row_vars.pop();
                format!("(for ({r} <- {src}) {body})")
            }
            _ => format!(
                "(if {} then {} else {})",
                self.boolean(d - 1),
                self.bag(d - 1),
                self.bag(d - 1)
            ),
        }
    }

    fn row_bag(&mut self, d: u32) -> String {
        match if d == 0 { 0 } else { self.pick(3) } {
            0 => {
                let d = d.saturating_sub(1);
                format!(
                    "[|row({}, {}, {})|]",
                    self.record(d),
                    self.time(d),
                    self.time(d)
                )
            }
            1 => format!("({} ++ {})", self.row_bag(d - 1), self.row_bag(d - 1)),
            _ => {
                let src = self.row_bag(d - 1);
                let r = self.fresh("r");
                self.row_vars.push(r.clone());
                let body = format!(
                    "[|row({}, {}, {})|]",
                    self.record(d - 1),
                    self.time(d - 1),
                    self.time(d - 1)
                );
                self.row_vars.pop();
                format!("(for ({r} <- {src}) {body})")
            }
        }
    }

    /// A term of a randomly chosen type.
    fn term(&mut self, d: u32) -> String {
        match self.pick(if self.rows { 5 } else { 4 }) {
            0 => self.int(d),
            1 => self.boolean(d),
            2 => self.record(d),
            3 => self.bag(d),
            _ => self.row_bag(d),
        }
    }
}

const DEPTH: u32 = 4;

fn rec_type() -> Type {
    Type::record([("a", Type::INT), ("b", Type::BOOL)])
}

fn parse(src: &str) -> Term {
    parse_term(src, &Default::default()).unwrap_or_else(|e| panic!("{src}: {e}"))
}

/// Parses and typechecks a generated term, which must be pure.
fn checked(src: &str, env: &TypeEnv, dialect: Dialect) -> (Term, Type) {
    let t = parse(src);
    let (ty, eff) =
        infer(&Schema::new(), env, &t, dialect).unwrap_or_else(|e| panic!("{src}: {e}"));
    assert!(eff.is_pure(), "{src} has effects {eff}");
    (t, ty)
}

fn run(t: &Term, env: &Env) -> Value {
    eval_pure(t, env, Time::new(5)).unwrap_or_else(|e| panic!("{t:?}: {e}"))
}

fn record(a: i64, b: bool) -> Value {
    Value::record([("a", Value::int(a)), ("b", Value::bool(b))])
}

/// `r` with period fields added, as the translated programs see it.
fn widened(r: &Value, s: i64, e: i64) -> Value {
    let mut fields = r.as_record().unwrap().clone();
    fields.insert("start".into(), Value::time(Time::new(s)));
    fields.insert("end".into(), Value::time(Time::new(e)));
    Value::Record(fields)
}

fn tape() -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(any::<u8>(), 0..96)
}

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 500,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config())]

    /// A comprehension over a bag value is the union of its body evaluated
    /// at each element.
    #[test]
    fn pure_comprehensions(src_tape in tape(), body_tape in tape(), rows in any::<bool>()) {
        let dialect = if rows { Dialect::Valid } else { Dialect::Linq };
        let src = Gen::new(&src_tape, rows, &[]).bag(DEPTH);
        let (src, _) = checked(&src, &TypeEnv::new(), dialect);
        let elems = run(&src, &Env::new()).into_bag().unwrap();
        let body = Gen::new(&body_tape, rows, &["z"]).bag(DEPTH);
        let (body, _) = checked(&body, &TypeEnv::new().with("z", rec_type()), dialect);

        let whole = Term::for_("z", value_to_term(&Value::Bag(elems.clone())), body.clone());
        let got = run(&whole, &Env::new());
        let mut want = Bag::new();
        for v in elems.iter() {
            let env: Env = [("z".to_string(), v.clone())].into_iter().collect();
            want.extend_bag(run(&body, &env).into_bag().unwrap());
        }
        prop_assert_eq!(got, Value::Bag(want));
    }

    /// Pure terms evaluate the same under the full evaluator and leave any
    /// database as it was.
    #[test]
    fn pure_evaluation_lifts(t in tape(), rows in any::<bool>(), seed in 0i64..5) {
        let dialect = if rows { Dialect::Valid } else { Dialect::Linq };
        let src = Gen::new(&t, rows, &[]).term(DEPTH);
        let (term, _) = checked(&src, &TypeEnv::new(), dialect);
        let schema = Schema::new().with_table(
            "t",
            TableSchema::new(TableKind::Plain, [("a", BaseType::Int)]),
        );
        let mut db = Database::empty_for(&schema);
        db.set_table("t", (0..seed).map(|i| Value::record([("a", Value::int(i))])).collect());
        let pure = run(&term, &Env::new());
        let (full, after) = evaluate(&schema, &db, Time::new(5), &term, CurrentMode::Direct).unwrap();
        prop_assert_eq!(full, pure);
        prop_assert_eq!(after, db);
    }

    /// Translating a pure transaction-time term commutes with evaluation.
    #[test]
    fn transaction_translation_of_pure_terms(t in tape()) {
        let src = Gen::new(&t, false, &[]).term(DEPTH);
        let (term, _) = checked(&src, &TypeEnv::new(), Dialect::Transaction);
        let term = annotate(&Schema::new(), &term, Dialect::Transaction).unwrap();
        let translated = translate_t(&Schema::new(), &term).unwrap();
        prop_assert_eq!(run(&translated, &Env::new()), translate_value(&run(&term, &Env::new())));
    }

    /// Restricting a widened binder back to its original fields recovers
    /// the translated result.
    #[test]
    fn transaction_translation_under_restrict(t in tape(), a in 0i64..5, b in any::<bool>(), s in 0i64..5) {
        let src = Gen::new(&t, false, &["x"]).term(DEPTH);
        let env = TypeEnv::new().with("x", rec_type());
        let (term, _) = checked(&src, &env, Dialect::Transaction);
        let x = record(a, b);
        let v = run(&term, &[("x".to_string(), x.clone())].into_iter().collect());
        let translated = translate_t(&Schema::new(), &term).unwrap();
        let wide: Env = [("x".to_string(), widened(&x, s, s + 3))].into_iter().collect();
        prop_assert_eq!(run(&restrict("x", &rec_type(), translated), &wide), translate_value(&v));
    }

    /// Translating a pure valid-time term, rows included, commutes with
    /// evaluation.
    #[test]
    fn valid_translation_of_pure_terms(t in tape(), direct in any::<bool>()) {
        let src = Gen::new(&t, true, &[]).term(DEPTH);
        let (term, _) = checked(&src, &TypeEnv::new(), Dialect::Valid);
        let term = annotate(&Schema::new(), &term, Dialect::Valid).unwrap();
        let mode = if direct { CurrentMode::Direct } else { CurrentMode::Desugar };
        let translated = translate_v(&Schema::new(), &term, mode).unwrap();
        prop_assert_eq!(run(&translated, &Env::new()), translate_value(&run(&term, &Env::new())));
    }

    #[test]
    fn valid_translation_under_restrict(t in tape(), a in 0i64..5, b in any::<bool>(), s in 0i64..5) {
        let src = Gen::new(&t, true, &["x"]).term(DEPTH);
        let env = TypeEnv::new().with("x", rec_type());
        let (term, _) = checked(&src, &env, Dialect::Valid);
        let x = record(a, b);
        let v = run(&term, &[("x".to_string(), x.clone())].into_iter().collect());
        let translated = translate_v(&Schema::new(), &term, CurrentMode::Direct).unwrap();
        let wide: Env = [("x".to_string(), widened(&x, s, s + 1))].into_iter().collect();
        prop_assert_eq!(run(&restrict("x", &rec_type(), translated), &wide), translate_value(&v));
    }

    /// Values of base type, or records of them, translate to themselves.
    #[test]
    fn base_values_translate_to_themselves(t in tape(), pick in 0u8..3) {
        let mut g = Gen::new(&t, true, &[]);
        let src = match pick {
            0 => g.int(DEPTH),
            1 => g.boolean(DEPTH),
            _ => g.record(DEPTH),
        };
        let (term, ty) = checked(&src, &TypeEnv::new(), Dialect::Valid);
        prop_assert!(ty.as_base().is_some() || ty.is_base_record());
        let v = run(&term, &Env::new());
        prop_assert_eq!(translate_value(&v), v);
    }
}
