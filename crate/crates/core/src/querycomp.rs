//! Query normalisation, the sequenced-join rewrite and SQL generation.
//!
//! Normalisation symbolically evaluates a read-only query into a union of
//! flat comprehensions: each has table generators, a conjunction of base
//! conditions and a flat head. Conditionals in non-bag positions are handled
//! by carrying guarded alternatives until they reach a comprehension, where
//! the guard joins its condition.

use alloc::borrow::ToOwned;
use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::fmt::Write;

use crate::interp::apply_prim;
use crate::model::{Const, Env, FreshNames, PrimOp, Schema, TableKind, Term, Time, Value};

/// Access path step applied to a free variable.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Step {
    Label(String),
    Data,
    Start,
    End,
}

/// Base terms: constants, generator column projections and operators.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BaseTerm {
    Const(Const),
    /// Column of a generator's (flattened) row.
    Proj(String, String),
    Op(PrimOp, Vec<BaseTerm>),
    Now,
    /// A variable bound outside the query, with the path used to reach a base value.
    Free(String, Vec<Step>),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Generator {
    pub var: String,
    pub table: String,
    pub kind: TableKind,
    pub period: (String, String),
}

impl Generator {
    pub fn is_temporal(&self) -> bool {
        self.kind.is_temporal()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Head {
    Base(BaseTerm),
    Record(BTreeMap<String, BaseTerm>),
    /// A timestamped row, from queries returning rows of temporal tables.
    Row {
        data: BTreeMap<String, BaseTerm>,
        start: BaseTerm,
        end: BaseTerm,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Comprehension {
    pub gens: Vec<Generator>,
    /// Conjunction; empty means `true`.
    pub cond: Vec<BaseTerm>,
    pub head: Head,
}

/// A union of flat comprehensions.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NormalForm {
    pub comps: Vec<Comprehension>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NormalizeError {
    /// A construct outside the fragment that normal forms can express.
    NotNormalizable(String),
    /// A result that is not a base value or a record of base values.
    NotFlat(String),
    /// The rewriting exceeded its step budget.
    StepBound(usize),
}

impl fmt::Display for NormalizeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormalizeError::NotNormalizable(m) => write!(f, "not normalisable: {m}"),
            NormalizeError::NotFlat(m) => write!(f, "not flat: {m}"),
            NormalizeError::StepBound(n) => write!(f, "normalisation exceeded {n} steps"),
        }
    }
}

impl core::error::Error for NormalizeError {}

type NResult<T> = Result<T, NormalizeError>;

fn not_normalizable<T>(msg: impl Into<String>) -> NResult<T> {
    Err(NormalizeError::NotNormalizable(msg.into()))
}

#[derive(Clone, Debug)]
enum SVal {
    Base(BaseTerm),
    Record(BTreeMap<String, SVal>),
    Bag(Vec<SComp>),
    Closure {
        param: String,
        body: Term,
        env: SEnv,
    },
    Table(String),
    Row(Box<SVal>, BaseTerm, BaseTerm),
    Free(String, Vec<Step>),
}

#[derive(Clone, Debug)]
struct SComp {
    gens: Vec<Generator>,
    cond: Vec<BaseTerm>,
    head: SVal,
}

type SEnv = BTreeMap<String, SVal>;
type Alts = Vec<(Vec<BaseTerm>, SVal)>;

fn value_to_sval(v: &Value) -> SVal {
    match v {
        Value::Const(c) => SVal::Base(BaseTerm::Const(c.clone())),
        Value::Table(n) => SVal::Table(n.clone()),
        Value::Record(r) => SVal::Record(
            r.iter()
                .map(|(l, v)| (l.clone(), value_to_sval(v)))
                .collect(),
        ),
        Value::Bag(b) => SVal::Bag(
            b.iter()
                .map(|v| SComp {
                    gens: Vec::new(),
                    cond: Vec::new(),
                    head: value_to_sval(v),
                })
                .collect(),
        ),
        Value::Row(d, s, e) => SVal::Row(
            Box::new(value_to_sval(d)),
            BaseTerm::Const(Const::Time(*s)),
            BaseTerm::Const(Const::Time(*e)),
        ),
        Value::Closure(c) => SVal::Closure {
            param: c.param.clone(),
            body: c.body.clone(),
            env: c
                .env
                .iter()
                .map(|(k, v)| (k.clone(), value_to_sval(v)))
                .collect(),
        },
    }
}

fn value_names(v: &Value, out: &mut BTreeSet<String>) {
    match v {
        Value::Closure(c) => {
            out.extend(c.body.all_names());
            out.insert(c.param.clone());
            for (k, v) in &c.env {
                out.insert(k.clone());
                value_names(v, out);
            }
        }
        Value::Record(r) => r.values().for_each(|v| value_names(v, out)),
        Value::Bag(b) => b.iter().for_each(|v| value_names(v, out)),
        _ => {}
    }
}

fn value_size(v: &Value) -> usize {
    match v {
        Value::Closure(c) => c.body.size() + c.env.values().map(value_size).sum::<usize>(),
        Value::Record(r) => 1 + r.values().map(value_size).sum::<usize>(),
        Value::Bag(b) => 1 + b.iter().map(value_size).sum::<usize>(),
        Value::Row(d, _, _) => 3 + value_size(d),
        _ => 1,
    }
}

/// Folds operators over constants and splits conjunctions.
fn simplify(op: PrimOp, args: Vec<BaseTerm>) -> BaseTerm {
    if op != PrimOp::CheckPeriod && args.iter().all(|a| matches!(a, BaseTerm::Const(_))) {
        let vals: Vec<Value> = args
            .iter()
            .map(|a| match a {
                BaseTerm::Const(c) => Value::Const(c.clone()),
                _ => unreachable!(),
            })
            .collect();
        if let Ok(Value::Const(c)) = apply_prim(op, &vals) {
            return BaseTerm::Const(c);
        }
    }
    let t = BaseTerm::Const(Const::Bool(true));
    let f = BaseTerm::Const(Const::Bool(false));
    if args.len() != 2 {
        return BaseTerm::Op(op, args);
    }
    match op {
        PrimOp::And if args[0] == t => args[1].clone(),
        PrimOp::And if args[1] == t => args[0].clone(),
        PrimOp::And if args[0] == f || args[1] == f => f,
        PrimOp::Or if args[0] == f => args[1].clone(),
        PrimOp::Or if args[1] == f => args[0].clone(),
        PrimOp::Or if args[0] == t || args[1] == t => t,
        _ => BaseTerm::Op(op, args),
    }
}

/// Adds a condition to a conjunction; returns false if it is unsatisfiable.
fn push_cond(cond: &mut Vec<BaseTerm>, c: BaseTerm) -> bool {
    match c {
        BaseTerm::Const(Const::Bool(true)) => true,
        BaseTerm::Const(Const::Bool(false)) => false,
        BaseTerm::Op(PrimOp::And, args) => args.into_iter().all(|a| push_cond(cond, a)),
        other => {
            cond.push(other);
            true
        }
    }
}

fn with_guard(guard: &[BaseTerm], mut comps: Vec<SComp>) -> Vec<SComp> {
    if guard.is_empty() {
        return comps;
    }
    comps.retain_mut(|c| {
        let mut cond = guard.to_vec();
        let ok = core::mem::take(&mut c.cond)
            .into_iter()
            .all(|x| push_cond(&mut cond, x));
        c.cond = cond;
        ok
    });
    comps
}

struct Normalizer<'a> {
    schema: &'a Schema,
    fresh: FreshNames,
    steps: usize,
    budget: usize,
}

impl Normalizer<'_> {
    fn tick(&mut self) -> NResult<()> {
        self.steps += 1;
        if self.steps > self.budget {
            return Err(NormalizeError::StepBound(self.budget));
        }
        Ok(())
    }

    /// Bag-typed evaluation: all alternatives merged into one union.
    fn bag(&mut self, env: &SEnv, t: &Term) -> NResult<Vec<SComp>> {
        let mut out = Vec::new();
        for (guard, v) in self.sym(env, t)? {
            match v {
                SVal::Bag(comps) => out.extend(with_guard(&guard, comps)),
                SVal::Free(x, _) => {
                    return not_normalizable(format!(
                        "bag-valued variable `{x}` bound outside the query"
                    ))
                }
                other => {
                    return not_normalizable(format!("expected a bag, found {}", describe(&other)))
                }
            }
        }
        Ok(out)
    }

    fn base(&mut self, env: &SEnv, t: &Term) -> NResult<Vec<(Vec<BaseTerm>, BaseTerm)>> {
        self.sym(env, t)?
            .into_iter()
            .map(|(g, v)| Ok((g, to_base(v)?)))
            .collect()
    }

    /// Cartesian product of alternatives for several subterms.
    fn product(&mut self, env: &SEnv, terms: &[&Term]) -> NResult<Vec<(Vec<BaseTerm>, Vec<SVal>)>> {
        let mut acc: Vec<(Vec<BaseTerm>, Vec<SVal>)> = Vec::from([(Vec::new(), Vec::new())]);
        for t in terms {
            let alts = self.sym(env, t)?;
            let mut next = Vec::new();
            for (g, vs) in &acc {
                for (g2, v) in &alts {
                    self.tick()?;
                    let mut g = g.clone();
                    g.extend(g2.iter().cloned());
                    let mut vs = vs.clone();
                    vs.push(v.clone());
                    next.push((g, vs));
                }
            }
            acc = next;
        }
        Ok(acc)
    }

    fn single(v: SVal) -> Alts {
        Vec::from([(Vec::new(), v)])
    }

    fn tidy(alts: Alts) -> Alts {
        if alts.len() > 1 && alts.iter().all(|(_, v)| matches!(v, SVal::Bag(_))) {
            let mut comps = Vec::new();
            for (g, v) in alts {
                if let SVal::Bag(cs) = v {
                    comps.extend(with_guard(&g, cs));
                }
            }
            return Self::single(SVal::Bag(comps));
        }
        alts
    }

    fn sym(&mut self, env: &SEnv, t: &Term) -> NResult<Alts> {
        self.tick()?;
        let out = match t {
            Term::Var(x) => Self::single(
                env.get(x)
                    .cloned()
                    .unwrap_or_else(|| SVal::Free(x.clone(), Vec::new())),
            ),
            Term::Const(c) => Self::single(SVal::Base(BaseTerm::Const(c.clone()))),
            Term::TableRef(n) => Self::single(SVal::Table(n.clone())),
            Term::Now => Self::single(SVal::Base(BaseTerm::Now)),
            Term::Lambda { param, body, .. } => Self::single(SVal::Closure {
                param: param.clone(),
                body: (**body).clone(),
                env: env.clone(),
            }),
            Term::Apply(f, a) => {
                let mut out = Vec::new();
                for (g, vs) in self.product(env, &[f, a])? {
                    let mut vs = vs.into_iter();
                    let (fv, av) = (vs.next().unwrap(), vs.next().unwrap());
                    let SVal::Closure {
                        param,
                        body,
                        env: cenv,
                    } = fv
                    else {
                        return not_normalizable(format!("applying {}", describe(&fv)));
                    };
                    let mut inner = cenv;
                    inner.insert(param, av);
                    for (g2, v) in self.sym(&inner, &body)? {
                        let mut g = g.clone();
                        g.extend(g2);
                        out.push((g, v));
                    }
                }
                out
            }
            Term::PrimOp(op, args) => {
                let refs: Vec<&Term> = args.iter().collect();
                let mut out = Vec::new();
                for (g, vs) in self.product(env, &refs)? {
                    let bases = vs.into_iter().map(to_base).collect::<NResult<Vec<_>>>()?;
                    out.push((g, SVal::Base(simplify(*op, bases))));
                }
                out
            }
            Term::If(c, th, el) => {
                let mut out = Vec::new();
                for (g, b) in self.base(env, c)? {
                    let branches: [(&Term, Option<BaseTerm>); 2] = match &b {
                        BaseTerm::Const(Const::Bool(true)) => {
                            [(th, None), (el, Some(BaseTerm::Const(Const::Bool(false))))]
                        }
                        BaseTerm::Const(Const::Bool(false)) => {
                            [(el, None), (th, Some(BaseTerm::Const(Const::Bool(false))))]
                        }
                        _ => [
                            (th, Some(b.clone())),
                            (el, Some(simplify(PrimOp::Not, Vec::from([b.clone()])))),
                        ],
                    };
                    for (branch, extra) in branches {
                        let mut guard = g.clone();
                        match extra {
                            Some(BaseTerm::Const(Const::Bool(false))) => continue,
                            Some(c) => {
                                if !push_cond(&mut guard, c) {
                                    continue;
                                }
                            }
                            None => {}
                        }
                        for (g2, v) in self.sym(env, branch)? {
                            let mut guard = guard.clone();
                            guard.extend(g2);
                            out.push((guard, v));
                        }
                    }
                }
                out
            }
            Term::EmptyBag => Self::single(SVal::Bag(Vec::new())),
            Term::Singleton(m) => {
                let comps = self
                    .sym(env, m)?
                    .into_iter()
                    .filter_map(|(g, head)| {
                        let mut cond = Vec::new();
                        g.into_iter()
                            .all(|c| push_cond(&mut cond, c))
                            .then_some(SComp {
                                gens: Vec::new(),
                                cond,
                                head,
                            })
                    })
                    .collect();
                Self::single(SVal::Bag(comps))
            }
            Term::Union(l, r) => {
                let mut comps = self.bag(env, l)?;
                comps.extend(self.bag(env, r)?);
                Self::single(SVal::Bag(comps))
            }
            Term::For { var, source, body } => {
                let mut out = Vec::new();
                for c in self.bag(env, source)? {
                    let mut inner = env.clone();
                    inner.insert(var.clone(), c.head.clone());
                    for b in self.bag(&inner, body)? {
                        self.tick()?;
                        let mut gens = c.gens.clone();
                        gens.extend(b.gens);
                        let mut cond = c.cond.clone();
                        if b.cond.into_iter().all(|x| push_cond(&mut cond, x)) {
                            out.push(SComp {
                                gens,
                                cond,
                                head: b.head,
                            });
                        }
                    }
                }
                Self::single(SVal::Bag(out))
            }
            Term::Record(fields) => {
                let refs: Vec<&Term> = fields.iter().map(|(_, m)| m).collect();
                self.product(env, &refs)?
                    .into_iter()
                    .map(|(g, vs)| {
                        (
                            g,
                            SVal::Record(fields.iter().map(|(l, _)| l.clone()).zip(vs).collect()),
                        )
                    })
                    .collect()
            }
            Term::Project(m, l) => self
                .sym(env, m)?
                .into_iter()
                .map(|(g, v)| match v {
                    SVal::Record(mut r) => match r.remove(l) {
                        Some(f) => Ok((g, f)),
                        None => not_normalizable(format!("no field `{l}`")),
                    },
                    SVal::Free(x, mut path) => {
                        path.push(Step::Label(l.clone()));
                        Ok((g, SVal::Free(x, path)))
                    }
                    other => {
                        not_normalizable(format!("projecting `{l}` from {}", describe(&other)))
                    }
                })
                .collect::<NResult<_>>()?,
            Term::Data(m) | Term::Start(m) | Term::End(m) => {
                let step = match t {
                    Term::Data(_) => Step::Data,
                    Term::Start(_) => Step::Start,
                    _ => Step::End,
                };
                self.sym(env, m)?
                    .into_iter()
                    .map(|(g, v)| match (v, &step) {
                        (SVal::Row(d, _, _), Step::Data) => Ok((g, *d)),
                        (SVal::Row(_, s, _), Step::Start) => Ok((g, SVal::Base(s))),
                        (SVal::Row(_, _, e), _) => Ok((g, SVal::Base(e))),
                        (SVal::Free(x, mut path), _) => {
                            path.push(step.clone());
                            Ok((g, SVal::Free(x, path)))
                        }
                        (other, _) => {
                            not_normalizable(format!("row accessor on {}", describe(&other)))
                        }
                    })
                    .collect::<NResult<_>>()?
            }
            Term::Row(d, s, e) => {
                let mut out = Vec::new();
                for (g, vs) in self.product(env, &[d, s, e])? {
                    let mut vs = vs.into_iter();
                    let d = vs.next().unwrap();
                    let s = to_base(vs.next().unwrap())?;
                    let e = to_base(vs.next().unwrap())?;
                    out.push((g, SVal::Row(Box::new(d), s, e)));
                }
                out
            }
            Term::Query(m) => self.sym(env, m)?,
            Term::Get { table, .. } => {
                let mut out = Vec::new();
                for (g, v) in self.sym(env, table)? {
                    let SVal::Table(name) = v else {
                        return not_normalizable(format!("generator over {}", describe(&v)));
                    };
                    let Some(ts) = self.schema.get(&name) else {
                        return not_normalizable(format!("unknown table `{name}`"));
                    };
                    let var = self.fresh.fresh("g");
                    let col = |l: &str| BaseTerm::Proj(var.clone(), l.to_string());
                    let data = SVal::Record(
                        ts.columns
                            .keys()
                            .map(|l| (l.clone(), SVal::Base(col(l))))
                            .collect(),
                    );
                    let head = if ts.kind.is_temporal() {
                        SVal::Row(Box::new(data), col(&ts.period.0), col(&ts.period.1))
                    } else {
                        data
                    };
                    let gen = Generator {
                        var: var.clone(),
                        table: name.clone(),
                        kind: ts.kind,
                        period: ts.period.clone(),
                    };
                    out.push((
                        g,
                        SVal::Bag(Vec::from([SComp {
                            gens: Vec::from([gen]),
                            cond: Vec::new(),
                            head,
                        }])),
                    ));
                }
                out
            }
            Term::Join(_) => return not_normalizable("nested join"),
            other => return not_normalizable(format!("`{}` inside a query", other.kind_name())),
        };
        Ok(Self::tidy(out))
    }
}

fn describe(v: &SVal) -> &'static str {
    match v {
        SVal::Base(_) => "a base value",
        SVal::Record(_) => "a record",
        SVal::Bag(_) => "a bag",
        SVal::Closure { .. } => "a function",
        SVal::Table(_) => "a table",
        SVal::Row(..) => "a row",
        SVal::Free(..) => "a variable bound outside the query",
    }
}

fn to_base(v: SVal) -> NResult<BaseTerm> {
    match v {
        SVal::Base(b) => Ok(b),
        SVal::Free(x, path) => Ok(BaseTerm::Free(x, path)),
        other => not_normalizable(format!("expected a base value, found {}", describe(&other))),
    }
}

fn base_record(r: BTreeMap<String, SVal>) -> NResult<BTreeMap<String, BaseTerm>> {
    r.into_iter()
        .map(|(l, v)| match to_base(v) {
            Ok(b) => Ok((l, b)),
            Err(_) => Err(NormalizeError::NotFlat(format!(
                "field `{l}` is not a base value"
            ))),
        })
        .collect()
}

fn to_head(v: SVal) -> NResult<Head> {
    match v {
        SVal::Base(b) => Ok(Head::Base(b)),
        SVal::Free(x, path) => Ok(Head::Base(BaseTerm::Free(x, path))),
        SVal::Record(r) => Ok(Head::Record(base_record(r)?)),
        SVal::Row(d, start, end) => match *d {
            SVal::Record(r) => Ok(Head::Row {
                data: base_record(r)?,
                start,
                end,
            }),
            _ => Err(NormalizeError::NotFlat("row data is not a record".into())),
        },
        other => Err(NormalizeError::NotFlat(format!(
            "result element is {}",
            describe(&other)
        ))),
    }
}

fn run_normalizer(
    schema: &Schema,
    env: SEnv,
    body: &Term,
    names: BTreeSet<String>,
    extra_size: usize,
) -> NResult<NormalForm> {
    let mut fresh = FreshNames::avoiding(names);
    for n in body.all_names() {
        fresh.reserve(&n);
    }
    let n = (body.size() + extra_size).max(4);
    let mut nz = Normalizer {
        schema,
        fresh,
        steps: 0,
        budget: 10 * n * n,
    };
    let comps = nz.bag(&env, body)?;
    let comps = comps
        .into_iter()
        .map(|c| {
            Ok(Comprehension {
                gens: c.gens,
                cond: c.cond,
                head: to_head(c.head)?,
            })
        })
        .collect::<NResult<Vec<_>>>()?;
    Ok(NormalForm { comps })
}

/// Normalises a read-only query of flat element type. Variables free in
/// `body` are kept symbolic and may only be used as base values.
pub fn normalize(schema: &Schema, body: &Term) -> NResult<NormalForm> {
    normalize_open(schema, body)
}

/// Same as [`normalize`].
pub fn normalize_open(schema: &Schema, body: &Term) -> NResult<NormalForm> {
    run_normalizer(schema, SEnv::new(), body, BTreeSet::new(), 0)
}

/// Normalises with free variables bound to known values.
pub fn normalize_with_env(schema: &Schema, env: &Env, body: &Term) -> NResult<NormalForm> {
    let mut names = BTreeSet::new();
    let mut size = 0;
    let free = body.free_vars();
    let mut senv = SEnv::new();
    for (k, v) in env {
        names.insert(k.clone());
        if free.contains(k) {
            value_names(v, &mut names);
            size += value_size(v);
            senv.insert(k.clone(), value_to_sval(v));
        }
    }
    run_normalizer(schema, senv, body, names, size)
}

impl NormalForm {
    /// Checks the normal-form grammar: generators are distinct and name
    /// existing tables, and every projection refers to a generator of the
    /// same comprehension and one of its table's columns.
    pub fn validate(&self, schema: &Schema) -> Result<(), String> {
        for (i, c) in self.comps.iter().enumerate() {
            let mut vars: BTreeMap<&str, &Generator> = BTreeMap::new();
            for g in &c.gens {
                if vars.insert(&g.var, g).is_some() {
                    return Err(format!(
                        "comprehension {i}: generator `{}` bound twice",
                        g.var
                    ));
                }
                match schema.get(&g.table) {
                    Some(ts) if ts.kind == g.kind && ts.period == g.period => {}
                    _ => {
                        return Err(format!(
                            "comprehension {i}: bad generator over `{}`",
                            g.table
                        ))
                    }
                }
            }
            let check = |b: &BaseTerm| {
                check_base(b, &vars, schema).map_err(|e| format!("comprehension {i}: {e}"))
            };
            for b in &c.cond {
                check(b)?;
            }
            match &c.head {
                Head::Base(b) => check(b)?,
                Head::Record(r) => r.values().try_for_each(check)?,
                Head::Row { data, start, end } => {
                    data.values().try_for_each(check)?;
                    check(start)?;
                    check(end)?;
                }
            }
        }
        Ok(())
    }

    /// Number of generators over temporal tables, per comprehension.
    pub fn temporal_generators(&self) -> Vec<usize> {
        self.comps
            .iter()
            .map(|c| c.gens.iter().filter(|g| g.is_temporal()).count())
            .collect()
    }
}

fn check_base(
    b: &BaseTerm,
    vars: &BTreeMap<&str, &Generator>,
    schema: &Schema,
) -> Result<(), String> {
    match b {
        BaseTerm::Const(_) | BaseTerm::Now | BaseTerm::Free(..) => Ok(()),
        BaseTerm::Proj(x, l) => {
            let g = vars
                .get(x.as_str())
                .ok_or_else(|| format!("`{x}` is not a generator"))?;
            let ts = schema
                .get(&g.table)
                .ok_or_else(|| format!("unknown table `{}`", g.table))?;
            let known = ts.columns.contains_key(l)
                || (ts.kind.is_temporal() && (ts.period.0 == *l || ts.period.1 == *l));
            if known {
                Ok(())
            } else {
                Err(format!("table `{}` has no column `{l}`", g.table))
            }
        }
        BaseTerm::Op(_, args) => args.iter().try_for_each(|a| check_base(a, vars, schema)),
    }
}

/// How a free variable's access path is rendered.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Level {
    /// Temporal generators bind rows; projections go through `data`/`start`/`end`.
    Source,
    /// Everything is flat; rows are `(data, start, end)` records.
    Flat,
}

fn free_term(x: &str, path: &[Step], level: Level) -> Term {
    let mut t = Term::var(x);
    for s in path {
        t = match (s, level) {
            (Step::Label(l), _) => Term::project(t, l.clone()),
            (Step::Data, Level::Source) => Term::data(t),
            (Step::Start, Level::Source) => Term::start(t),
            (Step::End, Level::Source) => Term::end(t),
            (Step::Data, Level::Flat) => Term::project(t, "data"),
            (Step::Start, Level::Flat) => Term::project(t, "start"),
            (Step::End, Level::Flat) => Term::project(t, "end"),
        };
    }
    t
}

fn base_term(b: &BaseTerm, gens: &[Generator], level: Level) -> Term {
    match b {
        BaseTerm::Const(c) => Term::Const(c.clone()),
        BaseTerm::Now => Term::Now,
        BaseTerm::Free(x, path) => free_term(x, path, level),
        BaseTerm::Op(op, args) => Term::op(
            *op,
            args.iter().map(|a| base_term(a, gens, level)).collect(),
        ),
        BaseTerm::Proj(x, l) => {
            let g = gens.iter().find(|g| g.var == *x);
            match (g, level) {
                (Some(g), Level::Source) if g.is_temporal() => {
                    if *l == g.period.0 {
                        Term::start(Term::var(x.clone()))
                    } else if *l == g.period.1 {
                        Term::end(Term::var(x.clone()))
                    } else {
                        Term::project(Term::data(Term::var(x.clone())), l.clone())
                    }
                }
                _ => Term::project(Term::var(x.clone()), l.clone()),
            }
        }
    }
}

fn record_term(r: &BTreeMap<String, BaseTerm>, gens: &[Generator], level: Level) -> Term {
    Term::Record(
        r.iter()
            .map(|(l, b)| (l.clone(), base_term(b, gens, level)))
            .collect(),
    )
}

fn comprehension_term(c: &Comprehension, cond: &[BaseTerm], head: Term, level: Level) -> Term {
    let mut body = Term::singleton(head);
    if let Some(conj) = cond
        .iter()
        .map(|b| base_term(b, &c.gens, level))
        .reduce(Term::and)
    {
        body = Term::where_(conj, body);
    }
    for g in c.gens.iter().rev() {
        body = Term::for_(g.var.clone(), Term::get(Term::table(g.table.clone())), body);
    }
    body
}

fn union_all(parts: Vec<Term>) -> Term {
    parts
        .into_iter()
        .reduce(Term::union)
        .unwrap_or(Term::EmptyBag)
}

/// The normal form as a source-level query over the original tables.
pub fn nf_to_term(nf: &NormalForm) -> Term {
    let parts = nf
        .comps
        .iter()
        .map(|c| {
            let head = match &c.head {
                Head::Base(b) => base_term(b, &c.gens, Level::Source),
                Head::Record(r) => record_term(r, &c.gens, Level::Source),
                Head::Row { data, start, end } => Term::row(
                    record_term(data, &c.gens, Level::Source),
                    base_term(start, &c.gens, Level::Source),
                    base_term(end, &c.gens, Level::Source),
                ),
            };
            comprehension_term(c, &c.cond, head, Level::Source)
        })
        .collect();
    Term::query(union_all(parts))
}

/// Head shape produced by [`rewrite_sequenced_join`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeadStyle {
    /// `row(R, joinStart, joinEnd)`, for direct evaluation.
    Row,
    /// `(data = R, start = joinStart, end = joinEnd)`, for translated programs.
    Record,
}

fn period_bounds(c: &Comprehension) -> (BaseTerm, BaseTerm) {
    let temporal: Vec<&Generator> = c.gens.iter().filter(|g| g.is_temporal()).collect();
    let starts = temporal
        .iter()
        .map(|g| BaseTerm::Proj(g.var.clone(), g.period.0.clone()))
        .collect();
    let ends = temporal
        .iter()
        .map(|g| BaseTerm::Proj(g.var.clone(), g.period.1.clone()))
        .collect();
    (
        BaseTerm::Op(PrimOp::Greatest, starts),
        BaseTerm::Op(PrimOp::Least, ends),
    )
}

/// Sequenced join: each comprehension's result period is the intersection
/// of its temporal generators' periods, and empty intersections are
/// filtered out. The result is a query over the flattened tables.
pub fn rewrite_sequenced_join(nf: &NormalForm, style: HeadStyle) -> NResult<Term> {
    let mut parts = Vec::new();
    for c in &nf.comps {
        let Head::Record(r) = &c.head else {
            return Err(NormalizeError::NotFlat(
                "join results must be records of base values".into(),
            ));
        };
        let (js, je) = period_bounds(c);
        let mut cond = c.cond.clone();
        cond.push(BaseTerm::Op(
            PrimOp::Lt,
            Vec::from([js.clone(), je.clone()]),
        ));
        let data = record_term(r, &c.gens, Level::Flat);
        let (s, e) = (
            base_term(&js, &c.gens, Level::Flat),
            base_term(&je, &c.gens, Level::Flat),
        );
        let head = match style {
            HeadStyle::Row => Term::row(data, s, e),
            HeadStyle::Record => Term::record([("data", data), ("start", s), ("end", e)]),
        };
        parts.push(comprehension_term(c, &cond, head, Level::Flat));
    }
    Ok(Term::query(union_all(parts)))
}

impl fmt::Display for NormalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::surface::print_term(&nf_to_term(self)))
    }
}

/// Literal renderings used by [`emit_sql`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SqlConfig {
    pub forever: String,
    pub beginning: String,
    pub now: String,
}

impl Default for SqlConfig {
    fn default() -> SqlConfig {
        SqlConfig {
            forever: Time::FOREVER.raw().to_string(),
            beginning: Time::BEGINNING.raw().to_string(),
            now: ":now".into(),
        }
    }
}

/// Whether to emit a plain query or the sequenced join of the normal form.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SqlMode {
    Query,
    SequencedJoin,
}

const SQL_RESERVED: &[&str] = &[
    "all", "and", "as", "by", "case", "cast", "check", "column", "create", "current", "default",
    "distinct", "else", "end", "false", "from", "group", "having", "in", "is", "join", "limit",
    "not", "null", "on", "or", "order", "select", "start", "table", "then", "true", "union",
    "user", "value", "values", "when", "where", "with",
];

fn ident(name: &str) -> String {
    let plain = name
        .chars()
        .next()
        .is_some_and(|c| c.is_ascii_lowercase() || c == '_')
        && name
            .chars()
            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_');
    if plain && !SQL_RESERVED.contains(&name) {
        name.to_owned()
    } else {
        format!("\"{}\"", name.replace('"', "\"\""))
    }
}

struct SqlWriter<'a> {
    cfg: &'a SqlConfig,
    aliases: BTreeMap<String, String>,
}

impl SqlWriter<'_> {
    fn time(&self, t: Time) -> String {
        if t.is_forever() {
            self.cfg.forever.clone()
        } else if t.is_beginning() {
            self.cfg.beginning.clone()
        } else {
            t.raw().to_string()
        }
    }

    fn operand(&self, b: &BaseTerm) -> String {
        match b {
            BaseTerm::Op(op, args) if op.is_infix() && args.len() == 2 => {
                format!("({})", self.base(b))
            }
            _ => self.base(b),
        }
    }

    fn base(&self, b: &BaseTerm) -> String {
        match b {
            BaseTerm::Const(Const::Int(i)) => i.to_string(),
            BaseTerm::Const(Const::Str(s)) => format!("'{}'", s.replace('\'', "''")),
            BaseTerm::Const(Const::Bool(x)) => (if *x { "TRUE" } else { "FALSE" }).into(),
            BaseTerm::Const(Const::Time(t)) => self.time(*t),
            BaseTerm::Now => self.cfg.now.clone(),
            BaseTerm::Proj(x, l) => {
                format!(
                    "{}.{}",
                    self.aliases.get(x).cloned().unwrap_or_else(|| x.clone()),
                    ident(l)
                )
            }
            BaseTerm::Free(x, path) => {
                let mut s = format!(":{x}");
                for p in path {
                    s.push('_');
                    s.push_str(match p {
                        Step::Label(l) => l,
                        Step::Data => "data",
                        Step::Start => "start",
                        Step::End => "end",
                    });
                }
                s
            }
            BaseTerm::Op(op, args) => {
                let sym = match op {
                    PrimOp::Eq => Some("="),
                    PrimOp::Neq => Some("<>"),
                    PrimOp::And => Some("AND"),
                    PrimOp::Or => Some("OR"),
                    PrimOp::Lt
                    | PrimOp::Le
                    | PrimOp::Gt
                    | PrimOp::Ge
                    | PrimOp::Add
                    | PrimOp::Sub
                    | PrimOp::Mul => Some(op.symbol()),
                    _ => None,
                };
                match (sym, op) {
                    (Some(s), _) if args.len() == 2 => {
                        format!("{} {s} {}", self.operand(&args[0]), self.operand(&args[1]))
                    }
                    (_, PrimOp::Not) => format!("NOT {}", self.operand(&args[0])),
                    (_, PrimOp::Greatest) if args.is_empty() => self.cfg.beginning.clone(),
                    (_, PrimOp::Least) if args.is_empty() => self.cfg.forever.clone(),
                    (_, PrimOp::Greatest | PrimOp::Least) if args.len() == 1 => self.base(&args[0]),
                    _ => {
                        let name = match op {
                            PrimOp::Greatest => "GREATEST",
                            PrimOp::Least => "LEAST",
                            PrimOp::CheckPeriod => "CHECK_PERIOD",
                            other => other.symbol(),
                        };
                        let parts: Vec<String> = args.iter().map(|a| self.base(a)).collect();
                        format!("{name}({})", parts.join(", "))
                    }
                }
            }
        }
    }
}

/// Renders a normal form as SQL: one `SELECT` per comprehension joined by
/// `UNION ALL`. Generators are aliased `x1`, `x2`, ... in order.
pub fn emit_sql(nf: &NormalForm, mode: SqlMode, cfg: &SqlConfig) -> Result<String, NormalizeError> {
    if nf.comps.is_empty() {
        return Ok("SELECT NULL WHERE FALSE LIMIT 0".into());
    }
    let mut selects = Vec::new();
    for c in &nf.comps {
        let w = SqlWriter {
            cfg,
            aliases: c
                .gens
                .iter()
                .enumerate()
                .map(|(i, g)| (g.var.clone(), format!("x{}", i + 1)))
                .collect(),
        };
        let mut cols: Vec<String> = Vec::new();
        let mut cond = c.cond.clone();
        match (&c.head, mode) {
            (Head::Base(b), SqlMode::Query) => cols.push(format!("{} AS value", w.base(b))),
            (Head::Record(r), SqlMode::Query) => {
                cols.extend(
                    r.iter()
                        .map(|(l, b)| format!("{} AS {}", w.base(b), ident(l))),
                );
            }
            (Head::Row { data, start, end }, SqlMode::Query) => {
                cols.extend(
                    data.iter()
                        .map(|(l, b)| format!("{} AS {}", w.base(b), ident(l))),
                );
                cols.push(format!("{} AS {}", w.base(start), ident("start")));
                cols.push(format!("{} AS {}", w.base(end), ident("end")));
            }
            (Head::Record(r), SqlMode::SequencedJoin) => {
                let (js, je) = period_bounds(c);
                cols.extend(
                    r.iter()
                        .map(|(l, b)| format!("{} AS {}", w.base(b), ident(l))),
                );
                cols.push(format!("{} AS {}", w.base(&js), ident("start")));
                cols.push(format!("{} AS {}", w.base(&je), ident("end")));
                cond.push(BaseTerm::Op(PrimOp::Lt, Vec::from([js, je])));
            }
            (_, SqlMode::SequencedJoin) => {
                return Err(NormalizeError::NotFlat(
                    "join results must be records of base values".into(),
                ))
            }
        }
        if cols.is_empty() {
            cols.push("NULL AS unit".into());
        }
        let mut s = format!("SELECT {}", cols.join(", "));
        if !c.gens.is_empty() {
            let from: Vec<String> = c
                .gens
                .iter()
                .map(|g| format!("{} AS {}", ident(&g.table), w.aliases[&g.var]))
                .collect();
            let _ = write!(s, " FROM {}", from.join(", "));
        }
        if !cond.is_empty() {
            let parts: Vec<String> = if cond.len() == 1 {
                Vec::from([w.base(&cond[0])])
            } else {
                cond.iter().map(|b| w.operand(b)).collect()
            };
            let _ = write!(s, " WHERE {}", parts.join(" AND "));
        }
        selects.push(s);
    }
    Ok(selects.join("\nUNION ALL\n"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::eval_read;
    use crate::model::{Bag, BaseType, Database, TableSchema};
    use crate::surface::parse_term;

    fn schema() -> Schema {
        Schema::new()
            .with_table(
                "employees",
                TableSchema::new(
                    TableKind::Plain,
                    [("name", BaseType::String), ("band", BaseType::String)],
                ),
            )
            .with_table(
                "salaries",
                TableSchema::new(
                    TableKind::Plain,
                    [("band", BaseType::String), ("salary", BaseType::Int)],
                ),
            )
    }

    fn parse(src: &str) -> Term {
        parse_term(src, &schema().tables.keys().cloned().collect()).unwrap()
    }

    const JOIN: &str = "query { for (e <- get employees, s <- get salaries) where (e.band == s.band) [|(name = e.name, salary = s.salary)|] }";

    #[test]
    fn join_normalizes_to_one_comprehension() {
        let nf = normalize(&schema(), &parse(JOIN)).unwrap();
        assert_eq!(nf.comps.len(), 1);
        assert_eq!(nf.comps[0].gens.len(), 2);
        assert_eq!(nf.comps[0].cond.len(), 1);
        nf.validate(&schema()).unwrap();
        let sql = emit_sql(&nf, SqlMode::Query, &SqlConfig::default()).unwrap();
        assert_eq!(
            sql,
            "SELECT x1.name AS name, x2.salary AS salary FROM employees AS x1, salaries AS x2 WHERE x1.band = x2.band"
        );
    }

    #[test]
    fn normal_forms_are_fixpoints() {
        let nf = normalize(&schema(), &parse(JOIN)).unwrap();
        let again = normalize(&schema(), &nf_to_term(&nf)).unwrap();
        assert_eq!(
            emit_sql(&again, SqlMode::Query, &SqlConfig::default()),
            emit_sql(&nf, SqlMode::Query, &SqlConfig::default())
        );
    }

    #[test]
    fn conditionals_and_functions_are_eliminated() {
        let src = "query { let f = fun (x: int) -> x + 1 in for (e <- get salaries) [|if e.salary > 3 then f e.salary else 0|] ++ [||] }";
        let t = parse(src);
        let nf = normalize(&schema(), &t).unwrap();
        assert_eq!(nf.comps.len(), 2);
        let mut db = Database::empty_for(&schema());
        db.set_table(
            "salaries",
            Bag::from_iter(
                [2, 5, 5]
                    .map(|s| Value::record([("band", Value::str("b")), ("salary", Value::int(s))])),
            ),
        );
        let clock = Time::new(0);
        assert_eq!(
            eval_read(&schema(), &db, clock, &t).unwrap(),
            eval_read(&schema(), &db, clock, &nf_to_term(&nf)).unwrap()
        );
    }

    #[test]
    fn empty_union_sql() {
        let sql = emit_sql(
            &NormalForm::default(),
            SqlMode::Query,
            &SqlConfig::default(),
        )
        .unwrap();
        assert_eq!(sql, "SELECT NULL WHERE FALSE LIMIT 0");
    }

    #[test]
    fn modifications_are_not_normalizable() {
        let e = normalize(&schema(), &parse("delete (x <- salaries) where true")).unwrap_err();
        assert!(matches!(e, NormalizeError::NotNormalizable(_)));
    }
}
