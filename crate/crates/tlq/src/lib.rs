//! Command-line tooling around `tlq-core`: snapshot files, table rendering,
//! the worked example scenarios and a differential tester for the
//! translations.

pub mod cli;
pub mod difftest;
pub mod engine;
pub mod render;
pub mod scenarios;
