use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use super::time::Time;
use super::types::{BaseType, TableKind, Type};

/// Base-type constants.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Const {
    Int(i64),
    Str(String),
    Bool(bool),
    Time(Time),
}

impl Const {
    pub fn base_type(&self) -> BaseType {
        match self {
            Const::Int(_) => BaseType::Int,
            Const::Str(_) => BaseType::String,
            Const::Bool(_) => BaseType::Bool,
            Const::Time(_) => BaseType::Time,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Const::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_time(&self) -> Option<Time> {
        match self {
            Const::Time(t) => Some(*t),
            _ => None,
        }
    }
}

impl fmt::Display for Const {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Const::Int(i) => write!(f, "{i}"),
            Const::Str(s) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")
            }
            Const::Bool(b) => write!(f, "{b}"),
            Const::Time(t) => write!(f, "{t}"),
        }
    }
}

/// The fixed registry of primitive operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PrimOp {
    Eq,
    Neq,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    Not,
    Add,
    Sub,
    Mul,
    /// Largest of any number of timestamps; `beginning` when empty.
    Greatest,
    /// Smallest of any number of timestamps; `forever` when empty.
    Least,
    /// `true` when its two timestamps form a non-empty period, otherwise a
    /// dynamic abort.
    CheckPeriod,
}

impl PrimOp {
    pub const ALL: [PrimOp; 15] = [
        PrimOp::Eq,
        PrimOp::Neq,
        PrimOp::Lt,
        PrimOp::Le,
        PrimOp::Gt,
        PrimOp::Ge,
        PrimOp::And,
        PrimOp::Or,
        PrimOp::Not,
        PrimOp::Add,
        PrimOp::Sub,
        PrimOp::Mul,
        PrimOp::Greatest,
        PrimOp::Least,
        PrimOp::CheckPeriod,
    ];

    /// Surface spelling: infix symbol for binary operators, call name otherwise.
    pub fn symbol(self) -> &'static str {
        match self {
            PrimOp::Eq => "==",
            PrimOp::Neq => "!=",
            PrimOp::Lt => "<",
            PrimOp::Le => "<=",
            PrimOp::Gt => ">",
            PrimOp::Ge => ">=",
            PrimOp::And => "&&",
            PrimOp::Or => "||",
            PrimOp::Not => "not",
            PrimOp::Add => "+",
            PrimOp::Sub => "-",
            PrimOp::Mul => "*",
            PrimOp::Greatest => "greatest",
            PrimOp::Least => "least",
            PrimOp::CheckPeriod => "check_period",
        }
    }

    pub fn is_infix(self) -> bool {
        !matches!(
            self,
            PrimOp::Not | PrimOp::Greatest | PrimOp::Least | PrimOp::CheckPeriod
        )
    }

    pub fn from_call_name(name: &str) -> Option<PrimOp> {
        Some(match name {
            "not" => PrimOp::Not,
            "greatest" => PrimOp::Greatest,
            "least" => PrimOp::Least,
            "check_period" => PrimOp::CheckPeriod,
            _ => return None,
        })
    }
}

/// Row type and storage details of the table a database term operates on,
/// filled in by the annotation pass.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TableAnn {
    /// Base record type of the data part of each row.
    pub row: Type,
    pub kind: TableKind,
    pub period: (String, String),
}

impl TableAnn {
    pub fn labels(&self) -> Vec<String> {
        self.row
            .as_record()
            .map(|r| r.keys().cloned().collect())
            .unwrap_or_default()
    }
}

pub type Assignments = Vec<(String, Term)>;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String),
    Const(Const),
    TableRef(String),
    /// `param_ty` may be omitted only when the lambda is applied directly
    /// (the `let` form), where the argument supplies the type.
    Lambda {
        param: String,
        param_ty: Option<Type>,
        body: Box<Term>,
    },
    Apply(Box<Term>, Box<Term>),
    PrimOp(PrimOp, Vec<Term>),
    If(Box<Term>, Box<Term>, Box<Term>),
    EmptyBag,
    Singleton(Box<Term>),
    Union(Box<Term>, Box<Term>),
    For {
        var: String,
        source: Box<Term>,
        body: Box<Term>,
    },
    Record(Assignments),
    Project(Box<Term>, String),
    Now,
    Query(Box<Term>),
    Get {
        table: Box<Term>,
        ann: Option<TableAnn>,
    },
    Insert {
        table: Box<Term>,
        rows: Box<Term>,
        ann: Option<TableAnn>,
    },
    Update {
        var: String,
        table: Box<Term>,
        pred: Box<Term>,
        set: Assignments,
        ann: Option<TableAnn>,
    },
    Delete {
        var: String,
        table: Box<Term>,
        pred: Box<Term>,
        ann: Option<TableAnn>,
    },
    Row(Box<Term>, Box<Term>, Box<Term>),
    Data(Box<Term>),
    Start(Box<Term>),
    End(Box<Term>),
    SeqInsert {
        table: Box<Term>,
        rows: Box<Term>,
        ann: Option<TableAnn>,
    },
    SeqUpdate {
        var: String,
        table: Box<Term>,
        from: Box<Term>,
        to: Box<Term>,
        pred: Box<Term>,
        set: Assignments,
        ann: Option<TableAnn>,
    },
    SeqDelete {
        var: String,
        table: Box<Term>,
        from: Box<Term>,
        to: Box<Term>,
        pred: Box<Term>,
        ann: Option<TableAnn>,
    },
    NonseqUpdate {
        var: String,
        table: Box<Term>,
        pred: Box<Term>,
        set: Assignments,
        valid_from: Box<Term>,
        valid_to: Box<Term>,
        ann: Option<TableAnn>,
    },
    NonseqDelete {
        var: String,
        table: Box<Term>,
        pred: Box<Term>,
        ann: Option<TableAnn>,
    },
    Join(Box<Term>),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(name.into())
    }

    pub fn int(i: i64) -> Term {
        Term::Const(Const::Int(i))
    }

    pub fn str(s: impl Into<String>) -> Term {
        Term::Const(Const::Str(s.into()))
    }

    pub fn bool(b: bool) -> Term {
        Term::Const(Const::Bool(b))
    }

    pub fn time(t: Time) -> Term {
        Term::Const(Const::Time(t))
    }

    pub fn forever() -> Term {
        Term::time(Time::FOREVER)
    }

    pub fn table(name: impl Into<String>) -> Term {
        Term::TableRef(name.into())
    }

    pub fn lambda(param: impl Into<String>, ty: Type, body: Term) -> Term {
        Term::Lambda {
            param: param.into(),
            param_ty: Some(ty),
            body: Box::new(body),
        }
    }

    pub fn apply(f: Term, arg: Term) -> Term {
        Term::Apply(Box::new(f), Box::new(arg))
    }

    /// `let x = bound in body`, sugar for `(fun x -> body) bound`.
    pub fn let_in(x: impl Into<String>, bound: Term, body: Term) -> Term {
        Term::apply(
            Term::Lambda {
                param: x.into(),
                param_ty: None,
                body: Box::new(body),
            },
            bound,
        )
    }

    pub fn op(op: PrimOp, args: Vec<Term>) -> Term {
        Term::PrimOp(op, args)
    }

    pub fn binop(op: PrimOp, l: Term, r: Term) -> Term {
        Term::PrimOp(op, vec![l, r])
    }

    pub fn and(l: Term, r: Term) -> Term {
        Term::binop(PrimOp::And, l, r)
    }

    pub fn eq(l: Term, r: Term) -> Term {
        Term::binop(PrimOp::Eq, l, r)
    }

    pub fn if_(c: Term, t: Term, e: Term) -> Term {
        Term::If(Box::new(c), Box::new(t), Box::new(e))
    }

    /// `where c m`, sugar for `if c then m else [||]`.
    pub fn where_(c: Term, m: Term) -> Term {
        Term::if_(c, m, Term::EmptyBag)
    }

    pub fn singleton(m: Term) -> Term {
        Term::Singleton(Box::new(m))
    }

    pub fn union(l: Term, r: Term) -> Term {
        Term::Union(Box::new(l), Box::new(r))
    }

    /// `[| m1, ..., mn |]` as nested unions of singletons.
    pub fn bag_of(items: Vec<Term>) -> Term {
        let mut items = items.into_iter();
        match items.next() {
            None => Term::EmptyBag,
            Some(first) => items.fold(Term::singleton(first), |acc, m| {
                Term::union(acc, Term::singleton(m))
            }),
        }
    }

    pub fn for_(var: impl Into<String>, source: Term, body: Term) -> Term {
        Term::For {
            var: var.into(),
            source: Box::new(source),
            body: Box::new(body),
        }
    }

    pub fn record<I, L>(fields: I) -> Term
    where
        I: IntoIterator<Item = (L, Term)>,
        L: Into<String>,
    {
        Term::Record(fields.into_iter().map(|(l, t)| (l.into(), t)).collect())
    }

    pub fn unit() -> Term {
        Term::Record(Vec::new())
    }

    pub fn project(m: Term, label: impl Into<String>) -> Term {
        Term::Project(Box::new(m), label.into())
    }

    pub fn query(m: Term) -> Term {
        Term::Query(Box::new(m))
    }

    pub fn get(table: Term) -> Term {
        Term::Get {
            table: Box::new(table),
            ann: None,
        }
    }

    pub fn insert(table: Term, rows: Term) -> Term {
        Term::Insert {
            table: Box::new(table),
            rows: Box::new(rows),
            ann: None,
        }
    }

    pub fn update(var: impl Into<String>, table: Term, pred: Term, set: Assignments) -> Term {
        Term::Update {
            var: var.into(),
            table: Box::new(table),
            pred: Box::new(pred),
            set,
            ann: None,
        }
    }

    pub fn delete(var: impl Into<String>, table: Term, pred: Term) -> Term {
        Term::Delete {
            var: var.into(),
            table: Box::new(table),
            pred: Box::new(pred),
            ann: None,
        }
    }

    pub fn row(data: Term, start: Term, end: Term) -> Term {
        Term::Row(Box::new(data), Box::new(start), Box::new(end))
    }

    pub fn data(m: Term) -> Term {
        Term::Data(Box::new(m))
    }

    pub fn start(m: Term) -> Term {
        Term::Start(Box::new(m))
    }

    pub fn end(m: Term) -> Term {
        Term::End(Box::new(m))
    }

    pub fn seq_insert(table: Term, rows: Term) -> Term {
        Term::SeqInsert {
            table: Box::new(table),
            rows: Box::new(rows),
            ann: None,
        }
    }

    pub fn seq_update(
        var: impl Into<String>,
        table: Term,
        from: Term,
        to: Term,
        pred: Term,
        set: Assignments,
    ) -> Term {
        Term::SeqUpdate {
            var: var.into(),
            table: Box::new(table),
            from: Box::new(from),
            to: Box::new(to),
            pred: Box::new(pred),
            set,
            ann: None,
        }
    }

    pub fn seq_delete(
        var: impl Into<String>,
        table: Term,
        from: Term,
        to: Term,
        pred: Term,
    ) -> Term {
        Term::SeqDelete {
            var: var.into(),
            table: Box::new(table),
            from: Box::new(from),
            to: Box::new(to),
            pred: Box::new(pred),
            ann: None,
        }
    }

    pub fn nonseq_update(
        var: impl Into<String>,
        table: Term,
        pred: Term,
        set: Assignments,
        valid_from: Term,
        valid_to: Term,
    ) -> Term {
        Term::NonseqUpdate {
            var: var.into(),
            table: Box::new(table),
            pred: Box::new(pred),
            set,
            valid_from: Box::new(valid_from),
            valid_to: Box::new(valid_to),
            ann: None,
        }
    }

    pub fn nonseq_delete(var: impl Into<String>, table: Term, pred: Term) -> Term {
        Term::NonseqDelete {
            var: var.into(),
            table: Box::new(table),
            pred: Box::new(pred),
            ann: None,
        }
    }

    pub fn join(m: Term) -> Term {
        Term::Join(Box::new(m))
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        1 + self.children().into_iter().map(Term::size).sum::<usize>()
    }

    /// Immediate subterms in evaluation order.
    pub fn children(&self) -> Vec<&Term> {
        match self {
            Term::Var(_) | Term::Const(_) | Term::TableRef(_) | Term::EmptyBag | Term::Now => {
                Vec::new()
            }
            Term::Lambda { body, .. } => vec![body],
            Term::Apply(f, a) => vec![f, a],
            Term::PrimOp(_, args) => args.iter().collect(),
            Term::If(c, t, e) => vec![c, t, e],
            Term::Singleton(m)
            | Term::Project(m, _)
            | Term::Query(m)
            | Term::Data(m)
            | Term::Start(m)
            | Term::End(m)
            | Term::Join(m) => vec![m],
            Term::Union(l, r) => vec![l, r],
            Term::For { source, body, .. } => vec![source, body],
            Term::Record(fields) => fields.iter().map(|(_, t)| t).collect(),
            Term::Get { table, .. } => vec![table],
            Term::Insert { table, rows, .. } | Term::SeqInsert { table, rows, .. } => {
                vec![table, rows]
            }
            Term::Update {
                table, pred, set, ..
            } => {
                let mut v: Vec<&Term> = vec![table, pred];
                v.extend(set.iter().map(|(_, t)| t));
                v
            }
            Term::Delete { table, pred, .. } | Term::NonseqDelete { table, pred, .. } => {
                vec![table, pred]
            }
            Term::Row(a, b, c) => vec![a, b, c],
            Term::SeqUpdate {
                table,
                from,
                to,
                pred,
                set,
                ..
            } => {
                let mut v: Vec<&Term> = vec![table, from, to, pred];
                v.extend(set.iter().map(|(_, t)| t));
                v
            }
            Term::SeqDelete {
                table,
                from,
                to,
                pred,
                ..
            } => vec![table, from, to, pred],
            Term::NonseqUpdate {
                table,
                pred,
                set,
                valid_from,
                valid_to,
                ..
            } => {
                let mut v: Vec<&Term> = vec![table, pred];
                v.extend(set.iter().map(|(_, t)| t));
                v.push(valid_from);
                v.push(valid_to);
                v
            }
        }
    }

    /// Mutable immediate subterms, in the same order as [`Term::children`].
    pub fn children_mut(&mut self) -> Vec<&mut Term> {
        match self {
            Term::Var(_) | Term::Const(_) | Term::TableRef(_) | Term::EmptyBag | Term::Now => {
                Vec::new()
            }
            Term::Lambda { body, .. } => vec![body],
            Term::Apply(f, a) => vec![f, a],
            Term::PrimOp(_, args) => args.iter_mut().collect(),
            Term::If(c, t, e) => vec![c, t, e],
            Term::Singleton(m)
            | Term::Project(m, _)
            | Term::Query(m)
            | Term::Data(m)
            | Term::Start(m)
            | Term::End(m)
            | Term::Join(m) => vec![m],
            Term::Union(l, r) => vec![l, r],
            Term::For { source, body, .. } => vec![source, body],
            Term::Record(fields) => fields.iter_mut().map(|(_, t)| t).collect(),
            Term::Get { table, .. } => vec![table],
            Term::Insert { table, rows, .. } | Term::SeqInsert { table, rows, .. } => {
                vec![table, rows]
            }
            Term::Update {
                table, pred, set, ..
            } => {
                let mut v: Vec<&mut Term> = vec![table, pred];
                v.extend(set.iter_mut().map(|(_, t)| t));
                v
            }
            Term::Delete { table, pred, .. } | Term::NonseqDelete { table, pred, .. } => {
                vec![table, pred]
            }
            Term::Row(a, b, c) => vec![a, b, c],
            Term::SeqUpdate {
                table,
                from,
                to,
                pred,
                set,
                ..
            } => {
                let mut v: Vec<&mut Term> = vec![table, from, to, pred];
                v.extend(set.iter_mut().map(|(_, t)| t));
                v
            }
            Term::SeqDelete {
                table,
                from,
                to,
                pred,
                ..
            } => vec![table, from, to, pred],
            Term::NonseqUpdate {
                table,
                pred,
                set,
                valid_from,
                valid_to,
                ..
            } => {
                let mut v: Vec<&mut Term> = vec![table, pred];
                v.extend(set.iter_mut().map(|(_, t)| t));
                v.push(valid_from);
                v.push(valid_to);
                v
            }
        }
    }

    /// Every variable name occurring anywhere, bound or free.
    pub fn all_names(&self) -> BTreeSet<String> {
        let mut names = BTreeSet::new();
        self.collect_names(&mut names);
        names
    }

    fn collect_names(&self, names: &mut BTreeSet<String>) {
        match self {
            Term::Var(x) => {
                names.insert(x.clone());
            }
            Term::Lambda { param, .. } => {
                names.insert(param.clone());
            }
            Term::For { var, .. }
            | Term::Update { var, .. }
            | Term::Delete { var, .. }
            | Term::SeqUpdate { var, .. }
            | Term::SeqDelete { var, .. }
            | Term::NonseqUpdate { var, .. }
            | Term::NonseqDelete { var, .. } => {
                names.insert(var.clone());
            }
            _ => {}
        }
        for c in self.children() {
            c.collect_names(names);
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        // (subterm, whether the binder of this node scopes over it)
        let binder: Option<&String> = match self {
            Term::Var(x) => {
                if !bound.iter().any(|b| b == x) {
                    out.insert(x.clone());
                }
                return;
            }
            Term::Lambda { param, .. } => Some(param),
            Term::For { var, .. }
            | Term::Update { var, .. }
            | Term::Delete { var, .. }
            | Term::SeqUpdate { var, .. }
            | Term::SeqDelete { var, .. }
            | Term::NonseqUpdate { var, .. }
            | Term::NonseqDelete { var, .. } => Some(var),
            _ => None,
        };
        let scoped = self.binder_scope();
        for (i, c) in self.children().into_iter().enumerate() {
            if let (Some(b), true) = (binder, scoped.contains(&i)) {
                bound.push(b.clone());
                c.collect_free(bound, out);
                bound.pop();
            } else {
                c.collect_free(bound, out);
            }
        }
    }

    /// Indices (into [`Term::children`]) of the subterms under this node's binder.
    pub fn binder_scope(&self) -> Vec<usize> {
        match self {
            Term::Lambda { .. } => vec![0],
            Term::For { .. } => vec![1],
            Term::Update { set, .. } => (1..2 + set.len()).collect(),
            Term::Delete { .. } | Term::NonseqDelete { .. } => vec![1],
            Term::SeqUpdate { set, .. } => (3..4 + set.len()).collect(),
            Term::SeqDelete { .. } => vec![3],
            Term::NonseqUpdate { set, .. } => (1..4 + set.len()).collect(),
            _ => Vec::new(),
        }
    }

    /// The annotation slot of a database term, if the node has one.
    pub fn ann(&self) -> Option<&Option<TableAnn>> {
        match self {
            Term::Get { ann, .. }
            | Term::Insert { ann, .. }
            | Term::Update { ann, .. }
            | Term::Delete { ann, .. }
            | Term::SeqInsert { ann, .. }
            | Term::SeqUpdate { ann, .. }
            | Term::SeqDelete { ann, .. }
            | Term::NonseqUpdate { ann, .. }
            | Term::NonseqDelete { ann, .. } => Some(ann),
            _ => None,
        }
    }

    pub fn ann_mut(&mut self) -> Option<&mut Option<TableAnn>> {
        match self {
            Term::Get { ann, .. }
            | Term::Insert { ann, .. }
            | Term::Update { ann, .. }
            | Term::Delete { ann, .. }
            | Term::SeqInsert { ann, .. }
            | Term::SeqUpdate { ann, .. }
            | Term::SeqDelete { ann, .. }
            | Term::NonseqUpdate { ann, .. }
            | Term::NonseqDelete { ann, .. } => Some(ann),
            _ => None,
        }
    }

    /// Removes every annotation, recursively.
    pub fn strip_annotations(&mut self) {
        if let Some(slot) = self.ann_mut() {
            *slot = None;
        }
        for c in self.children_mut() {
            c.strip_annotations();
        }
    }

    /// Short constructor name, used by coverage counters and diagnostics.
    pub fn kind_name(&self) -> &'static str {
        match self {
            Term::Var(_) => "var",
            Term::Const(_) => "const",
            Term::TableRef(_) => "table",
            Term::Lambda { .. } => "lambda",
            Term::Apply(..) => "apply",
            Term::PrimOp(..) => "op",
            Term::If(..) => "if",
            Term::EmptyBag => "empty",
            Term::Singleton(_) => "singleton",
            Term::Union(..) => "union",
            Term::For { .. } => "for",
            Term::Record(_) => "record",
            Term::Project(..) => "project",
            Term::Now => "now",
            Term::Query(_) => "query",
            Term::Get { .. } => "get",
            Term::Insert { .. } => "insert",
            Term::Update { .. } => "update",
            Term::Delete { .. } => "delete",
            Term::Row(..) => "row",
            Term::Data(_) => "data",
            Term::Start(_) => "start",
            Term::End(_) => "end",
            Term::SeqInsert { .. } => "insert sequenced",
            Term::SeqUpdate { .. } => "update sequenced",
            Term::SeqDelete { .. } => "delete sequenced",
            Term::NonseqUpdate { .. } => "update nonsequenced",
            Term::NonseqDelete { .. } => "delete nonsequenced",
            Term::Join(_) => "join",
        }
    }
}

/// Supplies variable names that avoid a given set.
#[derive(Clone, Debug, Default)]
pub struct FreshNames {
    taken: BTreeSet<String>,
    counter: usize,
}

impl FreshNames {
    pub fn avoiding(taken: BTreeSet<String>) -> FreshNames {
        FreshNames { taken, counter: 0 }
    }

    pub fn for_term(term: &Term) -> FreshNames {
        FreshNames::avoiding(term.all_names())
    }

    pub fn reserve(&mut self, name: &str) {
        self.taken.insert(name.to_string());
    }

    pub fn fresh(&mut self, hint: &str) -> String {
        loop {
            self.counter += 1;
            let name = format!("{hint}{}", self.counter);
            if self.taken.insert(name.clone()) {
                return name;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_vars_respect_binders() {
        let t = Term::update(
            "x",
            Term::var("tbl"),
            Term::eq(Term::project(Term::var("x"), "a"), Term::var("y")),
            vec![("a".into(), Term::var("x"))],
        );
        let fv = t.free_vars();
        assert!(fv.contains("tbl") && fv.contains("y"));
        assert!(!fv.contains("x"));

        let s = Term::seq_delete(
            "x",
            Term::var("t"),
            Term::var("x"),
            Term::Now,
            Term::var("x"),
        );
        // the period bounds are outside the binder
        assert!(s.free_vars().contains("x"));
    }

    #[test]
    fn bag_of_builds_unions() {
        assert_eq!(Term::bag_of(vec![]), Term::EmptyBag);
        let b = Term::bag_of(vec![Term::int(1), Term::int(2)]);
        assert_eq!(
            b,
            Term::union(Term::singleton(Term::int(1)), Term::singleton(Term::int(2)))
        );
        assert_eq!(b.size(), 5);
    }

    #[test]
    fn fresh_names_avoid_existing() {
        let t = Term::let_in("tbl1", Term::int(1), Term::var("tbl2"));
        let mut fresh = FreshNames::for_term(&t);
        assert_eq!(fresh.fresh("tbl"), "tbl3");
        assert_eq!(fresh.fresh("tbl"), "tbl4");
    }
}
