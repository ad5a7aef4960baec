use alloc::boxed::Box;
use alloc::collections::btree_map;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use super::term::{Const, Term};
use super::time::Time;
use super::types::Type;
use super::ModelError;

pub type Env = BTreeMap<String, Value>;
pub type RecordVal = BTreeMap<String, Value>;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Closure {
    pub param: String,
    pub param_ty: Option<Type>,
    pub body: Term,
    pub env: Env,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Const(Const),
    Closure(Arc<Closure>),
    Table(String),
    Record(RecordVal),
    Bag(Bag),
    Row(Box<Value>, Time, Time),
}

impl Value {
    pub fn int(i: i64) -> Value {
        Value::Const(Const::Int(i))
    }

    pub fn str(s: impl Into<String>) -> Value {
        Value::Const(Const::Str(s.into()))
    }

    pub fn bool(b: bool) -> Value {
        Value::Const(Const::Bool(b))
    }

    pub fn time(t: Time) -> Value {
        Value::Const(Const::Time(t))
    }

    pub fn unit() -> Value {
        Value::Record(BTreeMap::new())
    }

    pub fn record<I, L>(fields: I) -> Value
    where
        I: IntoIterator<Item = (L, Value)>,
        L: Into<String>,
    {
        Value::Record(fields.into_iter().map(|(l, v)| (l.into(), v)).collect())
    }

    pub fn row(data: Value, start: Time, end: Time) -> Value {
        Value::Row(Box::new(data), start, end)
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Const(Const::Bool(b)) => Some(*b),
            _ => None,
        }
    }

    pub fn as_time(&self) -> Option<Time> {
        match self {
            Value::Const(Const::Time(t)) => Some(*t),
            _ => None,
        }
    }

    pub fn as_record(&self) -> Option<&RecordVal> {
        match self {
            Value::Record(r) => Some(r),
            _ => None,
        }
    }

    pub fn as_bag(&self) -> Option<&Bag> {
        match self {
            Value::Bag(b) => Some(b),
            _ => None,
        }
    }

    pub fn into_bag(self) -> Option<Bag> {
        match self {
            Value::Bag(b) => Some(b),
            _ => None,
        }
    }

    pub fn as_row(&self) -> Option<(&Value, Time, Time)> {
        match self {
            Value::Row(d, s, e) => Some((d, *s, *e)),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Const(c) => write!(f, "{c}"),
            Value::Closure(c) => write!(f, "<closure {}>", c.param),
            Value::Table(t) => write!(f, "<table {t}>"),
            Value::Record(r) => {
                f.write_str("(")?;
                for (i, (l, v)) in r.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{l} = {v}")?;
                }
                f.write_str(")")
            }
            Value::Bag(b) => {
                f.write_str("[|")?;
                for (i, v) in b.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("|]")
            }
            Value::Row(d, s, e) => write!(f, "row({d}, {s}, {e})"),
        }
    }
}

/// A finite multiset, stored as element counts.
///
/// Equality is multiset equality. Iteration visits elements in value order,
/// repeating each according to its multiplicity.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bag {
    counts: BTreeMap<Value, usize>,
    len: usize,
}

impl Bag {
    pub fn new() -> Bag {
        Bag::default()
    }

    pub fn singleton(v: Value) -> Bag {
        let mut b = Bag::new();
        b.insert(v);
        b
    }

    pub fn insert(&mut self, v: Value) {
        self.insert_n(v, 1);
    }

    pub fn insert_n(&mut self, v: Value, n: usize) {
        if n == 0 {
            return;
        }
        *self.counts.entry(v).or_insert(0) += n;
        self.len += n;
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn count(&self, v: &Value) -> usize {
        self.counts.get(v).copied().unwrap_or(0)
    }

    pub fn contains(&self, v: &Value) -> bool {
        self.count(v) > 0
    }

    /// Distinct elements with their multiplicities.
    pub fn counts(&self) -> btree_map::Iter<'_, Value, usize> {
        self.counts.iter()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Value> + '_ {
        self.counts
            .iter()
            .flat_map(|(v, n)| core::iter::repeat_n(v, *n))
    }

    /// Multiset sum.
    pub fn union(mut self, other: Bag) -> Bag {
        self.extend_bag(other);
        self
    }

    pub fn extend_bag(&mut self, other: Bag) {
        for (v, n) in other.counts {
            self.insert_n(v, n);
        }
    }

    /// Applies `f` to each element, keeping multiplicities.
    pub fn try_map<E>(&self, mut f: impl FnMut(&Value) -> Result<Value, E>) -> Result<Bag, E> {
        let mut out = Bag::new();
        for (v, n) in &self.counts {
            out.insert_n(f(v)?, *n);
        }
        Ok(out)
    }

    pub fn to_vec(&self) -> Vec<Value> {
        self.iter().cloned().collect()
    }
}

impl FromIterator<Value> for Bag {
    fn from_iter<I: IntoIterator<Item = Value>>(iter: I) -> Bag {
        let mut b = Bag::new();
        for v in iter {
            b.insert(v);
        }
        b
    }
}

impl Extend<Value> for Bag {
    fn extend<I: IntoIterator<Item = Value>>(&mut self, iter: I) {
        for v in iter {
            self.insert(v);
        }
    }
}

impl IntoIterator for Bag {
    type Item = Value;
    type IntoIter = alloc::vec::IntoIter<Value>;

    fn into_iter(self) -> Self::IntoIter {
        let mut out = Vec::with_capacity(self.len);
        for (v, n) in self.counts {
            for _ in 1..n {
                out.push(v.clone());
            }
            out.push(v);
        }
        out.into_iter()
    }
}

pub fn bag_union(a: Bag, b: Bag) -> Bag {
    a.union(b)
}

/// Replaces the given fields of a record; every updated label must already exist.
pub fn record_with(
    record: &RecordVal,
    updates: &[(String, Value)],
) -> Result<RecordVal, ModelError> {
    let mut out = record.clone();
    for (label, value) in updates {
        match out.get_mut(label) {
            Some(slot) => *slot = value.clone(),
            None => return Err(ModelError::UnknownLabel(label.clone())),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn bag_union_counts() {
        let a: Bag = [Value::int(1), Value::int(2)].into_iter().collect();
        let b = Bag::singleton(Value::int(2));
        let u = bag_union(a.clone(), b);
        assert_eq!(u.len(), 3);
        assert_eq!(u.count(&Value::int(2)), 2);
        assert_eq!(bag_union(Bag::new(), a.clone()), a);
    }

    #[test]
    fn bag_equality_ignores_order() {
        let a: Bag = [Value::int(3), Value::int(1), Value::int(3)]
            .into_iter()
            .collect();
        let b: Bag = [Value::int(1), Value::int(3), Value::int(3)]
            .into_iter()
            .collect();
        assert_eq!(a, b);
        assert_ne!(
            a,
            [Value::int(1), Value::int(3)].into_iter().collect::<Bag>()
        );
        assert_eq!(a.clone().into_iter().count(), 3);
    }

    #[test]
    fn record_with_replaces_fields() {
        let r = RecordVal::from([
            ("task".to_string(), Value::str("Cook dinner")),
            ("done".to_string(), Value::bool(false)),
        ]);
        let r2 = record_with(&r, &[("done".to_string(), Value::bool(true))]).unwrap();
        assert_eq!(r2["done"], Value::bool(true));
        assert_eq!(r2["task"], Value::str("Cook dinner"));
        assert_eq!(record_with(&r, &[]).unwrap(), r);
        assert_eq!(
            record_with(&r, &[("due".to_string(), Value::int(1))]),
            Err(ModelError::UnknownLabel("due".into()))
        );
    }
}
