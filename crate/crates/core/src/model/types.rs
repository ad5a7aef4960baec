use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::String;
use core::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BaseType {
    String,
    Int,
    Bool,
    Time,
}

impl BaseType {
    pub fn name(self) -> &'static str {
        match self {
            BaseType::String => "string",
            BaseType::Int => "int",
            BaseType::Bool => "bool",
            BaseType::Time => "time",
        }
    }

    pub fn from_name(name: &str) -> Option<BaseType> {
        Some(match name {
            "string" => BaseType::String,
            "int" => BaseType::Int,
            "bool" => BaseType::Bool,
            "time" => BaseType::Time,
            _ => return None,
        })
    }
}

/// A subset of `{read, write}`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Effects {
    pub read: bool,
    pub write: bool,
}

impl Effects {
    pub const PURE: Effects = Effects {
        read: false,
        write: false,
    };
    pub const READ: Effects = Effects {
        read: true,
        write: false,
    };
    pub const WRITE: Effects = Effects {
        read: false,
        write: true,
    };
    pub const ALL: Effects = Effects {
        read: true,
        write: true,
    };

    pub fn union(self, other: Effects) -> Effects {
        Effects {
            read: self.read || other.read,
            write: self.write || other.write,
        }
    }

    pub fn is_pure(self) -> bool {
        !self.read && !self.write
    }

    pub fn is_subset_of(self, other: Effects) -> bool {
        (!self.read || other.read) && (!self.write || other.write)
    }
}

impl fmt::Display for Effects {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.read, self.write) {
            (false, false) => f.write_str("{}"),
            (true, false) => f.write_str("{read}"),
            (false, true) => f.write_str("{write}"),
            (true, true) => f.write_str("{read,write}"),
        }
    }
}

/// How a table stores its rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TableKind {
    Plain,
    Transaction,
    Valid,
}

impl TableKind {
    pub fn is_temporal(self) -> bool {
        !matches!(self, TableKind::Plain)
    }

    pub fn name(self) -> &'static str {
        match self {
            TableKind::Plain => "plain",
            TableKind::Transaction => "transaction",
            TableKind::Valid => "valid",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Type {
    Base(BaseType),
    Function {
        arg: Box<Type>,
        result: Box<Type>,
        effects: Effects,
    },
    Bag(Box<Type>),
    Record(BTreeMap<String, Type>),
    Table {
        row: Box<Type>,
        kind: TableKind,
    },
    TransactionRow(Box<Type>),
    ValidRow(Box<Type>),
}

impl Type {
    pub const INT: Type = Type::Base(BaseType::Int);
    pub const BOOL: Type = Type::Base(BaseType::Bool);
    pub const STRING: Type = Type::Base(BaseType::String);
    pub const TIME: Type = Type::Base(BaseType::Time);

    pub fn unit() -> Type {
        Type::Record(BTreeMap::new())
    }

    pub fn bag(elem: Type) -> Type {
        Type::Bag(Box::new(elem))
    }

    pub fn function(arg: Type, result: Type, effects: Effects) -> Type {
        Type::Function {
            arg: Box::new(arg),
            result: Box::new(result),
            effects,
        }
    }

    pub fn table(row: Type, kind: TableKind) -> Type {
        Type::Table {
            row: Box::new(row),
            kind,
        }
    }

    pub fn record<I, L>(fields: I) -> Type
    where
        I: IntoIterator<Item = (L, Type)>,
        L: Into<String>,
    {
        Type::Record(fields.into_iter().map(|(l, t)| (l.into(), t)).collect())
    }

    /// Row wrapper matching a temporal table kind.
    pub fn temporal_row(kind: TableKind, data: Type) -> Type {
        match kind {
            TableKind::Plain => data,
            TableKind::Transaction => Type::TransactionRow(Box::new(data)),
            TableKind::Valid => Type::ValidRow(Box::new(data)),
        }
    }

    pub fn as_base(&self) -> Option<BaseType> {
        match self {
            Type::Base(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_record(&self) -> Option<&BTreeMap<String, Type>> {
        match self {
            Type::Record(fields) => Some(fields),
            _ => None,
        }
    }

    /// A record whose fields all have base type.
    pub fn is_base_record(&self) -> bool {
        matches!(self, Type::Record(fields) if fields.values().all(|t| t.as_base().is_some()))
    }

    /// Base type or base record: the shapes a flat query may return.
    pub fn is_flat(&self) -> bool {
        self.as_base().is_some() || self.is_base_record()
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Base(b) => f.write_str(b.name()),
            Type::Function {
                arg,
                result,
                effects,
            } => {
                if matches!(**arg, Type::Function { .. }) {
                    write!(f, "({arg})")?;
                } else {
                    write!(f, "{arg}")?;
                }
                if effects.is_pure() {
                    write!(f, " -> {result}")
                } else {
                    write!(f, " -{effects}-> {result}")
                }
            }
            Type::Bag(t) => write!(f, "bag({t})"),
            Type::Record(fields) => {
                f.write_str("(")?;
                for (i, (l, t)) in fields.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{l}: {t}")?;
                }
                f.write_str(")")
            }
            Type::Table { row, kind } => match kind {
                TableKind::Plain => write!(f, "table({row})"),
                TableKind::Transaction => write!(f, "ttable({row})"),
                TableKind::Valid => write!(f, "vtable({row})"),
            },
            Type::TransactionRow(t) => write!(f, "trow({t})"),
            Type::ValidRow(t) => write!(f, "vrow({t})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn effect_union_is_idempotent_and_commutative() {
        let all = [Effects::PURE, Effects::READ, Effects::WRITE, Effects::ALL];
        for a in all {
            assert_eq!(a.union(a), a);
            for b in all {
                assert_eq!(a.union(b), b.union(a));
                assert!(a.is_subset_of(a.union(b)));
            }
        }
    }

    #[test]
    fn display_function_types() {
        let t = Type::function(Type::INT, Type::bag(Type::INT), Effects::READ);
        assert_eq!(alloc::format!("{t}"), "int -{read}-> bag(int)");
        let r = Type::record([("task", Type::STRING), ("done", Type::BOOL)]);
        assert_eq!(alloc::format!("{r}"), "(done: bool, task: string)");
        assert!(r.is_base_record());
    }
}
