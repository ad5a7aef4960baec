//! Concrete syntax: lexer, parser and printer.
//!
//! The grammar is documented in `docs/grammar.md`. Printing is deterministic
//! and the printed form of any term parses back to an equal term.

mod lexer;
mod parser;
mod printer;

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::model::{Schema, TableSchema, Term};

pub use lexer::{is_keyword, KEYWORDS};
pub use parser::{parse_program, parse_term, parse_type, SEQ_BINDER};
pub use printer::{print_program, print_term};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub expected: Vec<String>,
    pub found: String,
    pub message: Option<String>,
}

impl ParseError {
    pub fn new(line: usize, col: usize, message: &str) -> ParseError {
        ParseError {
            line,
            col,
            expected: Vec::new(),
            found: String::new(),
            message: Some(message.to_string()),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: ", self.line, self.col)?;
        if let Some(m) = &self.message {
            return f.write_str(m);
        }
        f.write_str("expected ")?;
        for (i, e) in self.expected.iter().enumerate() {
            if i > 0 {
                f.write_str(" or ")?;
            }
            f.write_str(e)?;
        }
        write!(f, ", found {}", self.found)
    }
}

impl core::error::Error for ParseError {}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decl {
    Table { name: String, schema: TableSchema },
    Def { name: String, term: Term },
    Main(Term),
}

/// A parsed source file: table declarations, definitions and the main term.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceProgram {
    pub decls: Vec<Decl>,
}

impl SourceProgram {
    pub fn schema(&self) -> Schema {
        let mut s = Schema::new();
        for d in &self.decls {
            if let Decl::Table { name, schema } = d {
                s.tables.insert(name.clone(), schema.clone());
            }
        }
        s
    }

    pub fn table_names(&self) -> BTreeSet<String> {
        self.schema().tables.into_keys().collect()
    }

    pub fn main(&self) -> Option<&Term> {
        self.decls.iter().find_map(|d| match d {
            Decl::Main(t) => Some(t),
            _ => None,
        })
    }

    /// The main term with every definition bound around it by `let`.
    pub fn to_term(&self) -> Term {
        let mut body = self.main().cloned().unwrap_or_else(Term::unit);
        for d in self.decls.iter().rev() {
            if let Decl::Def { name, term } = d {
                body = Term::let_in(name.clone(), term.clone(), body);
            }
        }
        body
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PrimOp, TableKind, Time};

    fn tables(names: &[&str]) -> BTreeSet<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn round_trip(src: &str, tbls: &[&str]) -> Term {
        let t = parse_term(src, &tables(tbls)).unwrap();
        let printed = print_term(&t);
        let again =
            parse_term(&printed, &tables(tbls)).unwrap_or_else(|e| panic!("{printed}: {e}"));
        assert_eq!(t, again, "{printed}");
        assert_eq!(print_term(&again), printed);
        t
    }

    #[test]
    fn at_definition_parses() {
        let src = "fun (t: ttable((task: string, done: bool))) -> fun (time: time) ->
            for (x <- get t) where (start x <= time && time < end x) [|data x|]";
        let t = round_trip(src, &[]);
        let Term::Lambda { body, .. } = t else {
            panic!()
        };
        let Term::Lambda { body, .. } = *body else {
            panic!()
        };
        let Term::For { body, .. } = *body else {
            panic!()
        };
        let Term::If(_, then, els) = *body else {
            panic!()
        };
        assert!(matches!(*then, Term::Singleton(_)));
        assert_eq!(*els, Term::EmptyBag);
    }

    #[test]
    fn empty_input_is_an_error() {
        let e = parse_program("  -- nothing\n").unwrap_err();
        assert!(e.to_string().contains("expected declaration"), "{e}");
    }

    #[test]
    fn program_with_tables_and_defs() {
        let src = "
            table tasks(task: string, done: bool) transaction;
            table emp(name: string) valid period(valid_from, valid_to);
            def cur = fun (t: ttable((task: string, done: bool))) -> query { for (x <t- t) [|data x|] };
            main = insert tasks values [|(task = \"Go shopping\", done = false)|]; cur tasks;
        ";
        let p = parse_program(src).unwrap();
        let schema = p.schema();
        assert_eq!(schema.get("tasks").unwrap().kind, TableKind::Transaction);
        assert_eq!(schema.get("emp").unwrap().period.0, "valid_from");
        let printed = print_program(&p);
        assert_eq!(parse_program(&printed).unwrap(), p);
        assert!(matches!(p.to_term(), Term::Apply(..)));
    }

    #[test]
    fn temporal_keywords_print_like_the_paper() {
        let t = round_trip(
            "update sequenced (x <- employees) between @2023 and @2028 where x.name == \"Dolores\" set (position = \"Head of School\")",
            &["employees"],
        );
        let printed = print_term(&t);
        assert!(
            printed.starts_with("update sequenced (x <- employees) between @2023 and @2028 where")
        );
        assert_eq!(print_term(&Term::Now), "now");

        round_trip(
            "update nonsequenced (x <- employees) where (data x).position == \"PhD Student\" set () valid from start x to end x + 1",
            &["employees"],
        );
        round_trip(
            "delete sequenced (x <- e) between now and forever where true",
            &["e"],
        );
        round_trip("delete nonsequenced (x <- e) where start x < @3; insert sequenced e values [|row((a = 1), @1, @2)|]", &["e"]);
    }

    #[test]
    fn operators_and_sugar() {
        let t = round_trip("1 + 2 * 3 - -4", &[]);
        let Term::PrimOp(PrimOp::Sub, args) = t else {
            panic!()
        };
        assert_eq!(args[1], Term::int(-4));
        round_trip("[|1, 2, 3|] ++ [||]", &[]);
        round_trip("let x = @11:00 in greatest(x, beginning) == least()", &[]);
        round_trip(
            "(fun (f: int -{read}-> bag(int)) -> f 1) (fun (y: int) -> query { [|y|] })",
            &[],
        );
        round_trip("join { for (e <v- emp, s <v- sal) where ((data e).band == (data s).band) [|(n = (data e).name)|] }", &["emp", "sal"]);
        round_trip("if a then b else c; d", &[]);
        round_trip("(for (x <- y) [|x|]); z", &[]);
        assert!(parse_term("a < b < c", &tables(&[])).is_err());
        assert_eq!(
            parse_term("@17:30", &tables(&[])).unwrap(),
            Term::time(Time::hm(17, 30))
        );
    }

    #[test]
    fn tables_are_shadowed_by_binders() {
        let t = parse_term("for (t <- get t) [|t|]", &tables(&["t"])).unwrap();
        assert_eq!(
            t,
            Term::for_(
                "t",
                Term::get(Term::table("t")),
                Term::singleton(Term::var("t"))
            )
        );
    }
}
