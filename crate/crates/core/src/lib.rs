//! Language-integrated query with transaction-time and valid-time tables.
//!
//! The crate provides the three calculi (plain, transaction-time and
//! valid-time), their typechecker and reference interpreter, the translations
//! from the temporal calculi into the plain one, and query normalisation with
//! SQL generation. It needs only `alloc`.

#![no_std]

extern crate alloc;

pub mod interp;
pub mod model;
pub mod querycomp;
pub mod surface;
pub mod translate;
pub mod typecheck;
