//! Random schemas, databases and well-typed programs.
//!
//! Programs are generated type-directed: every request names the type to
//! produce and the effects the context allows, so almost every candidate
//! typechecks. Timestamps come from the small universe `0..=12` plus
//! `forever` so that periods collide and touch often.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tlq_core::model::{
    max_timestamp, Bag, BaseType, Const, Database, Effects, PrimOp, Schema, TableKind, TableSchema,
    Term, Time, Type, Value,
};
use tlq_core::surface::SEQ_BINDER;
use tlq_core::typecheck::{dialect_of, infer, Dialect, TypeEnv};

/// Largest ordinary timestamp the generators use.
pub const MAX_TS: i64 = 12;

pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent seed for a sub-task.
pub fn sub_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The fixed test schema for a dialect: two tables of the dialect's kind
/// (one with non-default period names) and a plain table.
pub fn schema_for(dialect: Dialect) -> Schema {
    let kind = match dialect {
        Dialect::Linq => TableKind::Plain,
        Dialect::Transaction => TableKind::Transaction,
        Dialect::Valid => TableKind::Valid,
    };
    let mut s = TableSchema::new(kind, [("a", BaseType::Int), ("c", BaseType::Bool)]);
    if kind.is_temporal() {
        s = s.with_period("since", "until");
    }
    Schema::new()
        .with_table(
            "r",
            TableSchema::new(kind, [("a", BaseType::Int), ("b", BaseType::String)]),
        )
        .with_table("s", s)
        .with_table(
            "p",
            TableSchema::new(
                TableKind::Plain,
                [("a", BaseType::Int), ("d", BaseType::Int)],
            ),
        )
}

/// A generated database with the latest ordinary timestamp it mentions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratedDb {
    pub db: Database,
    pub max_time: Time,
}

fn gen_const(rng: &mut ChaCha8Rng, b: BaseType) -> Const {
    match b {
        BaseType::Int => Const::Int(rng.gen_range(0..4)),
        BaseType::String => Const::Str(["a", "b", "c"].choose(rng).unwrap().to_string()),
        BaseType::Bool => Const::Bool(rng.gen()),
        BaseType::Time => Const::Time(Time::new(rng.gen_range(0..=MAX_TS))),
    }
}

/// A well-formed database with up to `size` rows per table.
pub fn gen_db(seed: u64, schema: &Schema, size: usize) -> GeneratedDb {
    let mut rng = rng_for(seed);
    let mut db = Database::empty_for(schema);
    let mut points: Vec<i64> = Vec::new();
    for (name, ts) in &schema.tables {
        let n = if size == 0 {
            0
        } else {
            rng.gen_range(0..=size)
        };
        let mut rows: Vec<Value> = Vec::new();
        for _ in 0..n {
            if !rows.is_empty() && rng.gen_ratio(1, 10) {
                let dup = rows.choose(&mut rng).unwrap().clone();
                rows.push(dup);
                continue;
            }
            let data = Value::Record(
                ts.columns
                    .iter()
                    .map(|(l, b)| (l.clone(), Value::Const(gen_const(&mut rng, *b))))
                    .collect(),
            );
            if !ts.kind.is_temporal() {
                rows.push(data);
                continue;
            }
            // Reuse an earlier endpoint as this row's start a third of the
            // time so adjacent periods meet exactly.
            let start = match points.choose(&mut rng) {
                Some(&p) if p < MAX_TS && rng.gen_ratio(1, 3) => p,
                _ => rng.gen_range(0..MAX_TS),
            };
            let end = if rng.gen_ratio(1, 3) {
                Time::FOREVER
            } else {
                let e = rng.gen_range(start + 1..=MAX_TS);
                points.push(e);
                Time::new(e)
            };
            points.push(start);
            rows.push(Value::row(data, Time::new(start), end));
        }
        let bag: Bag = rows.into_iter().collect();
        db.set_table(name.clone(), bag);
    }
    let max_time = db
        .tables
        .values()
        .flat_map(|b| {
            b.iter()
                .filter_map(|v| v.as_row())
                .map(|(_, s, _)| s)
                .collect::<Vec<_>>()
        })
        .fold(max_timestamp(&db), Time::max);
    GeneratedDb { db, max_time }
}

#[derive(Clone)]
struct Ctx {
    env: Vec<(String, Type)>,
    allow: Effects,
    /// Whether the typechecker will know the expected type here, so that a
    /// bare `[||]` is acceptable.
    hinted: bool,
}

impl Ctx {
    fn with(&self, x: &str, t: Type) -> Ctx {
        let mut c = self.clone();
        c.env.push((x.to_string(), t));
        c
    }

    fn pure(&self) -> Ctx {
        Ctx {
            allow: Effects::PURE,
            ..self.clone()
        }
    }

    fn read_only(&self) -> Ctx {
        Ctx {
            allow: Effects {
                read: self.allow.read,
                write: false,
            },
            ..self.clone()
        }
    }

    fn hinted(&self, hinted: bool) -> Ctx {
        Ctx {
            hinted,
            ..self.clone()
        }
    }

    /// Innermost binding of each name with the given type.
    fn vars_of(&self, ty: &Type) -> Vec<String> {
        let mut out = Vec::new();
        for (i, (x, t)) in self.env.iter().enumerate() {
            let shadowed = self.env[i + 1..].iter().any(|(y, _)| y == x);
            if t == ty && !shadowed {
                out.push(x.clone());
            }
        }
        out
    }

    fn visible(&self) -> Vec<(String, Type)> {
        let mut out = Vec::new();
        for (i, (x, t)) in self.env.iter().enumerate() {
            if !self.env[i + 1..].iter().any(|(y, _)| y == x) {
                out.push((x.clone(), t.clone()));
            }
        }
        out
    }
}

/// Program generator for one dialect and schema.
pub struct ProgramGen<'a> {
    rng: ChaCha8Rng,
    schema: &'a Schema,
    dialect: Dialect,
    next: usize,
}

fn int(i: i64) -> Term {
    Term::int(i)
}

fn op2(op: PrimOp, a: Term, b: Term) -> Term {
    Term::binop(op, a, b)
}

impl<'a> ProgramGen<'a> {
    pub fn new(seed: u64, schema: &'a Schema, dialect: Dialect) -> ProgramGen<'a> {
        ProgramGen {
            rng: rng_for(seed),
            schema,
            dialect,
            next: 0,
        }
    }

    fn fresh(&mut self, hint: &str) -> String {
        self.next += 1;
        format!("{hint}{}", self.next)
    }

    fn chance(&mut self, num: u32, den: u32) -> bool {
        self.rng.gen_ratio(num, den)
    }

    fn pick<T: Clone>(&mut self, xs: &[T]) -> T {
        xs.choose(&mut self.rng).expect("non-empty choice").clone()
    }

    fn tables_of(&self, pred: impl Fn(&TableSchema) -> bool) -> Vec<(String, TableSchema)> {
        self.schema
            .tables
            .iter()
            .filter(|(_, t)| pred(t))
            .map(|(n, t)| (n.clone(), t.clone()))
            .collect()
    }

    /// Element type of `get t`.
    fn elem_of(t: &TableSchema) -> Type {
        Type::temporal_row(t.kind, t.row_type())
    }

    fn temporal_row(&self, r: Type) -> Option<Type> {
        match self.dialect {
            Dialect::Linq => None,
            Dialect::Transaction => Some(Type::TransactionRow(Box::new(r))),
            Dialect::Valid => Some(Type::ValidRow(Box::new(r))),
        }
    }

    fn time_const(&mut self) -> Term {
        match self.rng.gen_range(0..20) {
            0 => Term::forever(),
            1 => Term::time(Time::BEGINNING),
            _ => Term::time(Time::new(self.rng.gen_range(0..=MAX_TS))),
        }
    }

    fn leaf(&mut self, ty: &Type, ctx: &Ctx) -> Term {
        let vars = ctx.vars_of(ty);
        let must = matches!(ty, Type::TransactionRow(_));
        if !vars.is_empty() && (must || self.chance(1, 2)) {
            return Term::var(self.pick(&vars));
        }
        match ty {
            Type::Base(BaseType::Int) => int(self.rng.gen_range(-1..5)),
            Type::Base(BaseType::Bool) => Term::bool(self.rng.gen()),
            Type::Base(BaseType::String) => Term::str(self.pick(&["a", "b", "c"])),
            Type::Base(BaseType::Time) => {
                if self.chance(1, 4) {
                    Term::Now
                } else {
                    self.time_const()
                }
            }
            Type::Record(fields) => Term::Record(
                fields
                    .iter()
                    .map(|(l, t)| (l.clone(), self.leaf(t, ctx)))
                    .collect(),
            ),
            Type::Bag(elem) => {
                let stuck = !ctx.hinted && !self.constructible(elem, ctx);
                if ctx.allow.read {
                    let tables = self.tables_of(|t| Self::elem_of(t) == **elem);
                    if !tables.is_empty() && (stuck || self.chance(2, 3)) {
                        let (name, _) = self.pick(&tables);
                        return Term::get(Term::table(name));
                    }
                }
                let can_build = self.constructible(elem, ctx);
                if !ctx.hinted && can_build {
                    let m = Term::singleton(self.leaf(elem, ctx));
                    if self.chance(1, 3) {
                        Term::where_(Term::bool(false), m)
                    } else {
                        m
                    }
                } else if self.chance(1, 3) || !can_build {
                    Term::EmptyBag
                } else {
                    Term::singleton(self.leaf(elem, ctx))
                }
            }
            Type::ValidRow(d) => {
                let d = self.leaf(d, ctx);
                let (s, e) = self.period_terms(ctx);
                Term::row(d, s, e)
            }
            other => panic!("no leaf for {other}"),
        }
    }

    /// Whether a value of `ty` can be built without reading a table.
    fn constructible(&self, ty: &Type, ctx: &Ctx) -> bool {
        match ty {
            Type::TransactionRow(_) => !ctx.vars_of(ty).is_empty(),
            Type::Record(f) => f.values().all(|t| self.constructible(t, ctx)),
            _ => true,
        }
    }

    /// Start and end for a constructed row; usually a non-empty period.
    fn period_terms(&mut self, ctx: &Ctx) -> (Term, Term) {
        if self.chance(1, 8) {
            return (self.gen_time(ctx, 1), self.gen_time(ctx, 1));
        }
        let s = self.rng.gen_range(0..MAX_TS);
        let e = if self.chance(1, 3) {
            Term::forever()
        } else {
            Term::time(Time::new(self.rng.gen_range(s + 1..=MAX_TS)))
        };
        (Term::time(Time::new(s)), e)
    }

    /// A term of type `ty` using at most the effects `ctx` allows.
    fn gen(&mut self, ty: &Type, ctx: &Ctx, depth: u32) -> Term {
        if depth == 0 || self.chance(1, 6) {
            return self.leaf(ty, ctx);
        }
        match self.rng.gen_range(0..12) {
            0 => {
                let c = self.gen(&Type::BOOL, ctx, depth - 1);
                let a = self.gen(ty, ctx, depth - 1);
                let b = self.gen(ty, ctx, depth - 1);
                return Term::if_(c, a, b);
            }
            1 => {
                let bt = self.simple_type();
                let x = self.fresh("v");
                let bound = self.gen(&bt, &ctx.hinted(false), depth - 1);
                let body = self.gen(ty, &ctx.with(&x, bt), depth - 1);
                return Term::let_in(x, bound, body);
            }
            2 => {
                let at = self.simple_type();
                let y = self.fresh("y");
                let body = self.gen(ty, &ctx.with(&y, at.clone()).hinted(false), depth - 1);
                let arg = self.gen(&at, &ctx.hinted(true), depth - 1);
                return Term::apply(Term::lambda(y, at, body), arg);
            }
            _ => {}
        }
        match ty {
            Type::Base(b) => self.gen_base(*b, ctx, depth),
            Type::Record(fields) => Term::Record(
                fields
                    .iter()
                    .map(|(l, t)| (l.clone(), self.gen(t, ctx, depth - 1)))
                    .collect(),
            ),
            Type::Bag(elem) => self.gen_bag(elem, ctx, depth),
            _ => self.leaf(ty, ctx),
        }
    }

    fn simple_type(&mut self) -> Type {
        match self.rng.gen_range(0..8) {
            0 | 1 => Type::INT,
            2 => Type::BOOL,
            3 => Type::STRING,
            4 => Type::TIME,
            5 => Type::record([("a", Type::INT), ("b", Type::STRING)]),
            _ => Type::bag(Type::INT),
        }
    }

    /// Projections available from variables in scope.
    fn projections(&self, b: BaseType, ctx: &Ctx) -> Vec<Term> {
        let mut out = Vec::new();
        for (x, t) in ctx.visible() {
            match &t {
                Type::Record(f) => {
                    for (l, ft) in f {
                        if *ft == Type::Base(b) {
                            out.push(Term::project(Term::var(&x), l.clone()));
                        }
                    }
                }
                Type::TransactionRow(d) | Type::ValidRow(d) => {
                    if let Type::Record(f) = &**d {
                        for (l, ft) in f {
                            if *ft == Type::Base(b) {
                                out.push(Term::project(Term::data(Term::var(&x)), l.clone()));
                            }
                        }
                    }
                    if b == BaseType::Time {
                        out.push(Term::start(Term::var(&x)));
                        out.push(Term::end(Term::var(&x)));
                    }
                }
                _ => {}
            }
        }
        out
    }

    fn gen_base(&mut self, b: BaseType, ctx: &Ctx, depth: u32) -> Term {
        let projections = self.projections(b, ctx);
        if !projections.is_empty() && self.chance(2, 5) {
            return self.pick(&projections);
        }
        let d = depth - 1;
        match b {
            BaseType::Int => match self.rng.gen_range(0..5) {
                0 => op2(
                    PrimOp::Add,
                    self.gen(&Type::INT, ctx, d),
                    self.gen(&Type::INT, ctx, d),
                ),
                1 => op2(
                    PrimOp::Sub,
                    self.gen(&Type::INT, ctx, d),
                    self.gen(&Type::INT, ctx, d),
                ),
                2 => op2(
                    PrimOp::Mul,
                    self.gen(&Type::INT, ctx, d),
                    self.leaf(&Type::INT, ctx),
                ),
                3 => {
                    let rt = Type::record([("a", Type::INT), ("b", Type::STRING)]);
                    Term::project(self.gen(&rt, ctx, d), "a")
                }
                _ => self.leaf(&Type::INT, ctx),
            },
            BaseType::Bool => match self.rng.gen_range(0..6) {
                0 => op2(
                    PrimOp::And,
                    self.gen(&Type::BOOL, ctx, d),
                    self.gen(&Type::BOOL, ctx, d),
                ),
                1 => op2(
                    PrimOp::Or,
                    self.gen(&Type::BOOL, ctx, d),
                    self.gen(&Type::BOOL, ctx, d),
                ),
                2 => Term::op(PrimOp::Not, vec![self.gen(&Type::BOOL, ctx, d)]),
                _ => self.comparison(ctx, d),
            },
            BaseType::String => self.leaf(&Type::STRING, ctx),
            BaseType::Time => match self.rng.gen_range(0..5) {
                0 => {
                    let op = self.pick(&[PrimOp::Greatest, PrimOp::Least]);
                    let n = self.pick(&[0usize, 1, 2, 2, 3]);
                    let args = (0..n).map(|_| self.gen(&Type::TIME, ctx, d)).collect();
                    Term::op(op, args)
                }
                1 => {
                    let op = self.pick(&[PrimOp::Add, PrimOp::Sub]);
                    op2(
                        op,
                        self.gen(&Type::TIME, ctx, d),
                        self.leaf(&Type::INT, ctx),
                    )
                }
                _ => self.leaf(&Type::TIME, ctx),
            },
        }
    }

    fn comparison(&mut self, ctx: &Ctx, depth: u32) -> Term {
        let t = self.pick(&[Type::INT, Type::INT, Type::STRING, Type::TIME, Type::BOOL]);
        let op = self.pick(&[
            PrimOp::Eq,
            PrimOp::Eq,
            PrimOp::Neq,
            PrimOp::Lt,
            PrimOp::Le,
            PrimOp::Gt,
            PrimOp::Ge,
        ]);
        op2(op, self.gen(&t, ctx, depth), self.gen(&t, ctx, depth))
    }

    /// Element types a comprehension can range over in this context.
    fn sources(&self, ctx: &Ctx) -> Vec<Type> {
        let mut out = vec![
            Type::INT,
            Type::record([("a", Type::INT), ("b", Type::STRING)]),
        ];
        if ctx.allow.read {
            for (_, t) in self.tables_of(|_| true) {
                out.push(Self::elem_of(&t));
            }
        }
        out
    }

    fn gen_bag(&mut self, elem: &Type, ctx: &Ctx, depth: u32) -> Term {
        let d = depth - 1;
        match self.rng.gen_range(0..10) {
            0 | 1 if self.constructible(elem, ctx) => {
                let m = self.gen(elem, ctx, d);
                Term::singleton(m)
            }
            2 => {
                let l = self.gen(&Type::bag(elem.clone()), ctx, d);
                let r = self.gen(&Type::bag(elem.clone()), ctx, d);
                if l == Term::EmptyBag && r == Term::EmptyBag {
                    Term::union(l, self.leaf(&Type::bag(elem.clone()), ctx))
                } else {
                    Term::union(l, r)
                }
            }
            3..=5 => self.comprehension(elem, ctx, depth),
            6 if ctx.allow.read && typecheck_query_elem(elem) => {
                let body = self.gen_bag(elem, &ctx.read_only(), depth);
                Term::query(body)
            }
            7 if ctx.allow.read => match self.join_elem(elem) {
                Some(data) => self.gen_join(&data, ctx),
                None => self.comprehension(elem, ctx, depth),
            },
            _ => self.leaf(&Type::bag(elem.clone()), ctx),
        }
    }

    fn join_elem(&self, elem: &Type) -> Option<Type> {
        match (self.dialect, elem) {
            (Dialect::Transaction, Type::TransactionRow(d))
            | (Dialect::Valid, Type::ValidRow(d))
                if d.is_base_record() =>
            {
                Some((**d).clone())
            }
            _ => None,
        }
    }

    fn comprehension(&mut self, elem: &Type, ctx: &Ctx, depth: u32) -> Term {
        let d = depth - 1;
        let srcs = self.sources(ctx);
        let st = self.pick(&srcs);
        let mut src = self.gen(&Type::bag(st.clone()), &ctx.hinted(false), d);
        if src == Term::EmptyBag {
            // An empty source needs its element type from somewhere.
            src = if self.constructible(&st, ctx) {
                Term::where_(Term::bool(false), Term::singleton(self.leaf(&st, ctx)))
            } else {
                self.leaf(&Type::bag(st.clone()), ctx)
            };
        }
        let x = self.fresh("x");
        let inner = ctx.with(&x, st);
        let mut body = self.gen_bag(elem, &inner, d.max(1));
        if self.chance(1, 2) {
            let c = self.gen(&Type::BOOL, &inner.pure(), d);
            body = Term::where_(c, body);
        }
        Term::for_(x, src, body)
    }

    /// `join { ... }` whose body normalises: comprehensions over tables with
    /// a base condition and a record head of type `data`.
    fn gen_join(&mut self, data: &Type, ctx: &Ctx) -> Term {
        let body = self.flat_query(data, ctx, 2, true);
        Term::join(body)
    }

    /// A normalisable query body: nested comprehensions over table
    /// generators, conditions on projections, a flat record head, and the
    /// occasional union, `let` or conditional.
    fn flat_query(&mut self, head: &Type, ctx: &Ctx, max_gens: usize, want_temporal: bool) -> Term {
        let pure = ctx.pure();
        match self.rng.gen_range(0..8) {
            0 => {
                let a = self.flat_query(head, ctx, max_gens, want_temporal);
                let b = self.flat_query(head, ctx, max_gens, want_temporal);
                return Term::union(a, b);
            }
            1 => {
                let x = self.fresh("v");
                let bound = self.gen(&Type::INT, &pure, 1);
                let body = self.flat_query(head, &ctx.with(&x, Type::INT), max_gens, want_temporal);
                return Term::let_in(x, bound, body);
            }
            2 => {
                let c = self.gen(&Type::BOOL, &pure, 1);
                let a = self.flat_query(head, ctx, max_gens, want_temporal);
                let b = self.flat_query(head, ctx, max_gens, want_temporal);
                return Term::if_(c, a, b);
            }
            _ => {}
        }
        let n = self.rng.gen_range(1..=max_gens);
        let tables = self.tables_of(|_| true);
        let temporal: Vec<(String, TableSchema)> = tables
            .iter()
            .filter(|(_, t)| t.kind.is_temporal())
            .cloned()
            .collect();
        let mut gens = Vec::new();
        let mut inner = ctx.clone();
        for i in 0..n {
            let (name, ts) = if want_temporal && i == 0 && !temporal.is_empty() {
                self.pick(&temporal)
            } else {
                self.pick(&tables)
            };
            let x = self.fresh("g");
            inner = inner.with(&x, Self::elem_of(&ts));
            gens.push((x, Term::get(Term::table(name))));
        }
        let ipure = inner.pure();
        let head_term = match head {
            Type::Record(f) => Term::Record(
                f.iter()
                    .map(|(l, t)| {
                        let b = t.as_base().expect("flat head");
                        (l.clone(), self.base_expr(b, &ipure))
                    })
                    .collect(),
            ),
            Type::Base(b) => self.base_expr(*b, &ipure),
            other => self.leaf(other, &ipure),
        };
        let mut body = Term::singleton(head_term);
        if self.chance(3, 4) {
            let c = self.base_cond(&ipure);
            body = Term::where_(c, body);
        }
        for (x, src) in gens.into_iter().rev() {
            body = Term::for_(x, src, body);
        }
        body
    }

    fn base_expr(&mut self, b: BaseType, ctx: &Ctx) -> Term {
        let ps = self.projections(b, ctx);
        if !ps.is_empty() && self.chance(4, 5) {
            let p = self.pick(&ps);
            if b == BaseType::Int && self.chance(1, 6) {
                return op2(PrimOp::Add, p, self.leaf(&Type::INT, ctx));
            }
            return p;
        }
        self.leaf(&Type::Base(b), ctx)
    }

    fn base_cond(&mut self, ctx: &Ctx) -> Term {
        let mut conds = Vec::new();
        for _ in 0..self.rng.gen_range(1..=2) {
            let b = self.pick(&[
                BaseType::Int,
                BaseType::Int,
                BaseType::Time,
                BaseType::String,
                BaseType::Bool,
            ]);
            let op = if b == BaseType::Bool || b == BaseType::String {
                self.pick(&[PrimOp::Eq, PrimOp::Neq])
            } else {
                self.pick(&[PrimOp::Eq, PrimOp::Eq, PrimOp::Lt, PrimOp::Le, PrimOp::Gt])
            };
            conds.push(op2(op, self.base_expr(b, ctx), self.base_expr(b, ctx)));
        }
        let mut c = conds.pop().unwrap();
        while let Some(d) = conds.pop() {
            let op = if self.chance(3, 4) {
                PrimOp::And
            } else {
                PrimOp::Or
            };
            c = op2(op, d, c);
        }
        if self.chance(1, 10) {
            c = Term::op(PrimOp::Not, vec![c]);
        }
        c
    }

    fn gen_time(&mut self, ctx: &Ctx, depth: u32) -> Term {
        self.gen(&Type::TIME, &ctx.pure(), depth)
    }

    /// Pure time bound for a period of applicability.
    fn bound(&mut self, ctx: &Ctx) -> Term {
        match self.rng.gen_range(0..10) {
            0 => Term::Now,
            1 => Term::forever(),
            2 => self.gen_time(ctx, 2),
            _ => Term::time(Time::new(self.rng.gen_range(0..=MAX_TS))),
        }
    }

    fn assignments(&mut self, ts: &TableSchema, ctx: &Ctx) -> Vec<(String, Term)> {
        let mut out = Vec::new();
        for (l, b) in &ts.columns {
            if self.chance(1, 2) {
                out.push((l.clone(), self.gen(&Type::Base(*b), ctx, 2)));
            }
        }
        out
    }

    /// One modification of a table.
    fn modification(&mut self, ctx: &Ctx) -> Term {
        let tables = self.tables_of(|_| true);
        let (name, ts) = self.pick(&tables);
        let tbl = Term::table(name);
        let row = ts.row_type();
        let pure = ctx.pure();
        let x = self.fresh("x");
        let px = pure.with(&x, row.clone());
        let valid = ts.kind == TableKind::Valid;
        let choice = if valid {
            self.rng.gen_range(0..8)
        } else {
            self.rng.gen_range(0..3)
        };
        match choice {
            0 => {
                let rows = self.gen(&Type::bag(row), &pure.hinted(true), 2);
                Term::insert(tbl, rows)
            }
            1 => {
                let p = self.gen(&Type::BOOL, &px, 2);
                let set = self.assignments(&ts, &px);
                Term::update(x, tbl, p, set)
            }
            2 => {
                let p = self.gen(&Type::BOOL, &px, 2);
                Term::delete(x, tbl, p)
            }
            3 => {
                let vr = Type::ValidRow(Box::new(row));
                let rows = self.gen(&Type::bag(vr), &pure.hinted(true), 2);
                Term::seq_insert(tbl, rows)
            }
            4 => {
                let (a, b) = (self.bound(&pure), self.bound(&pure));
                let p = self.gen(&Type::BOOL, &px, 2);
                let set = self.assignments(&ts, &px);
                Term::seq_update(x, tbl, a, b, p, set)
            }
            5 => {
                let (a, b) = (self.bound(&pure), self.bound(&pure));
                let p = self.gen(&Type::BOOL, &px, 2);
                Term::seq_delete(x, tbl, a, b, p)
            }
            6 => {
                let rx = pure.with(&x, Type::ValidRow(Box::new(row)));
                let p = self.gen(&Type::BOOL, &rx, 2);
                let set = self.assignments(&ts, &rx);
                let (f, t) = self.new_period(&x, &rx);
                Term::nonseq_update(x, tbl, p, set, f, t)
            }
            _ => {
                let rx = pure.with(&x, Type::ValidRow(Box::new(row)));
                let p = self.gen(&Type::BOOL, &rx, 2);
                Term::nonseq_delete(x, tbl, p)
            }
        }
    }

    fn new_period(&mut self, x: &str, ctx: &Ctx) -> (Term, Term) {
        let s = Term::start(Term::var(x));
        let e = Term::end(Term::var(x));
        match self.rng.gen_range(0..5) {
            0 => (s, op2(PrimOp::Add, e, int(self.rng.gen_range(0..3)))),
            1 => (op2(PrimOp::Sub, s, int(1)), e),
            2 => (self.gen_time(ctx, 1), self.gen_time(ctx, 1)),
            3 => {
                let a = self.rng.gen_range(0..MAX_TS);
                (
                    Term::time(Time::new(a)),
                    Term::time(Time::new(self.rng.gen_range(a..=MAX_TS))),
                )
            }
            _ => (s, e),
        }
    }

    /// Result types for a query program.
    fn query_type(&mut self) -> Type {
        let mut opts = vec![
            Type::INT,
            Type::BOOL,
            Type::TIME,
            Type::bag(Type::INT),
            Type::bag(Type::record([("a", Type::INT), ("b", Type::STRING)])),
            Type::record([("a", Type::INT), ("b", Type::STRING)]),
        ];
        for (_, t) in self.tables_of(|_| true) {
            opts.push(Type::bag(Self::elem_of(&t)));
            opts.push(Type::bag(t.row_type()));
        }
        if let Some(r) = self.temporal_row(Type::record([("a", Type::INT), ("b", Type::STRING)])) {
            opts.push(Type::bag(r));
        }
        self.pick(&opts)
    }

    /// A whole program: a sequence of modifications, a query, or a mix of
    /// both bound along a `let` spine.
    pub fn program(&mut self, depth: u32) -> Term {
        let top = Ctx {
            env: Vec::new(),
            allow: Effects::ALL,
            hinted: false,
        };
        if depth <= 1 {
            let ty = self.query_type();
            return self.leaf(&ty, &top.read_only());
        }
        let shape = self.rng.gen_range(0..10);
        if shape < 4 {
            let n = self.rng.gen_range(1..=3);
            let mut stmts: Vec<Term> = (0..n).map(|_| self.modification(&top)).collect();
            let last = if self.chance(1, 2) {
                let ty = self.query_type();
                self.gen(&ty, &top.read_only(), depth - 1)
            } else {
                Term::unit()
            };
            stmts.push(last);
            sequence(stmts)
        } else if shape < 8 {
            let ty = self.query_type();
            self.gen(&ty, &top.read_only(), depth)
        } else {
            let mut ctx = top.clone();
            let mut binds = Vec::new();
            for _ in 0..self.rng.gen_range(2..=4) {
                if self.chance(1, 2) {
                    binds.push((SEQ_BINDER.to_string(), self.modification(&ctx)));
                } else {
                    let ty = self.query_type();
                    let m = self.gen(&ty, &ctx.read_only().hinted(false), depth - 1);
                    let v = self.fresh("v");
                    ctx = ctx.with(&v, ty);
                    binds.push((v, m));
                }
            }
            let ty = self.query_type();
            let mut body = self.gen(&ty, &ctx.read_only(), depth - 1);
            for (x, m) in binds.into_iter().rev() {
                body = Term::let_in(x, m, body);
            }
            body
        }
    }

    /// A read-only query body that should normalise, over the schema.
    pub fn normalizable_query(&mut self) -> Term {
        let ctx = Ctx {
            env: Vec::new(),
            allow: Effects::READ,
            hinted: false,
        };
        let head = match self.rng.gen_range(0..4) {
            0 => Type::INT,
            1 => Type::record([("a", Type::INT), ("t", Type::TIME)]),
            _ => Type::record([("a", Type::INT), ("k", Type::BOOL), ("n", Type::INT)]),
        };
        let mut body = self.flat_query(&head, &ctx, 3, false);
        if self.chance(1, 3) {
            // Route part of the query through a function to exercise beta.
            let f = self.fresh("f");
            let y = self.fresh("y");
            let inner = self.flat_query(&head, &ctx.with(&y, Type::INT), 2, false);
            let call = Term::apply(Term::var(&f), int(self.rng.gen_range(0..4)));
            body = Term::let_in(
                f.clone(),
                Term::lambda(y, Type::INT, inner),
                Term::union(body, call),
            );
        }
        body
    }
}

fn typecheck_query_elem(t: &Type) -> bool {
    tlq_core::typecheck::is_query_type(t)
}

/// `M1; M2; ...; Mn`.
pub fn sequence(mut stmts: Vec<Term>) -> Term {
    let mut body = stmts.pop().unwrap_or_else(Term::unit);
    while let Some(m) = stmts.pop() {
        body = Term::let_in(SEQ_BINDER, m, body);
    }
    body
}

/// A closed well-typed program of the requested dialect. Candidates that
/// fail to typecheck are discarded; the number discarded is returned too.
pub fn gen_program(seed: u64, schema: &Schema, dialect: Dialect, depth: u32) -> (Term, usize) {
    for attempt in 0u64.. {
        let mut g = ProgramGen::new(sub_seed(seed, attempt), schema, dialect);
        let t = g.program(depth);
        if well_typed_in(schema, dialect, &t) {
            return (t, attempt as usize);
        }
    }
    unreachable!()
}

/// Whether `t` typechecks as a closed program of `dialect`. Programs that
/// use no temporal table at all are legal in every dialect.
pub fn well_typed_in(schema: &Schema, dialect: Dialect, t: &Term) -> bool {
    dialect_of(schema, t).is_ok() && infer(schema, &TypeEnv::new(), t, dialect).is_ok()
}
