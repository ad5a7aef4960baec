//! Types, terms, values and databases shared by every other module.

mod db;
mod term;
mod time;
mod types;
mod value;

use alloc::string::String;
use core::fmt;

pub use db::{
    eta_expand, first_ill_formed, flatten_db, flatten_row, max_timestamp, restrict, unflatten_db,
    unflatten_row, well_formed, Database, Schema, TableSchema, DEFAULT_PERIOD,
};
pub use term::{Assignments, Const, FreshNames, PrimOp, TableAnn, Term};
pub use time::Time;
pub use types::{BaseType, Effects, TableKind, Type};
pub use value::{bag_union, record_with, Bag, Closure, Env, RecordVal, Value};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ModelError {
    UnknownLabel(String),
    LabelClash(String),
    UnknownTable(String),
    NotARow(String),
    RowShape(String, String),
    PeriodClash(String),
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::UnknownLabel(l) => write!(f, "no field named `{l}`"),
            ModelError::LabelClash(l) => write!(f, "field `{l}` clashes with a period column"),
            ModelError::UnknownTable(t) => write!(f, "unknown table `{t}`"),
            ModelError::NotARow(v) => write!(f, "expected a timestamped row, found {v}"),
            ModelError::RowShape(t, v) => {
                write!(f, "row {v} does not match the declaration of table `{t}`")
            }
            ModelError::PeriodClash(t) => {
                write!(f, "period columns of table `{t}` must be distinct from each other and from data columns")
            }
        }
    }
}

impl core::error::Error for ModelError {}
