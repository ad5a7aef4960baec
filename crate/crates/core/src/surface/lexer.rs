use alloc::string::String;
use alloc::vec::Vec;

use super::ParseError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    /// Reserved word; see [`KEYWORDS`].
    Kw(&'static str),
    Int(u64),
    Str(String),
    /// `@N` or `@HH:MM`, already converted to the integer axis.
    Time(i64),
    Sym(&'static str),
    Eof,
}

pub const KEYWORDS: &[&str] = &[
    "and",
    "beginning",
    "between",
    "check_period",
    "data",
    "def",
    "delete",
    "else",
    "end",
    "false",
    "for",
    "forever",
    "from",
    "fun",
    "get",
    "greatest",
    "if",
    "in",
    "insert",
    "join",
    "least",
    "let",
    "main",
    "nonsequenced",
    "not",
    "now",
    "period",
    "query",
    "row",
    "sequenced",
    "set",
    "start",
    "table",
    "then",
    "to",
    "transaction",
    "true",
    "update",
    "valid",
    "values",
    "where",
];

// Longest first so that prefixes do not shadow longer symbols.
const SYMBOLS: &[&str] = &[
    "<t-", "<v-", "[|", "|]", "->", "<-", "==", "!=", "<=", ">=", "&&", "||", "++", "<", ">", "+",
    "-", "*", "(", ")", "{", "}", ",", ";", ":", ".", "=",
];

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => alloc::format!("identifier `{s}`"),
            Tok::Kw(k) => alloc::format!("`{k}`"),
            Tok::Int(i) => alloc::format!("integer {i}"),
            Tok::Str(_) => "string literal".into(),
            Tok::Time(_) => "time literal".into(),
            Tok::Sym(s) => alloc::format!("`{s}`"),
            Tok::Eof => "end of input".into(),
        }
    }

    /// Identifier or keyword text, for positions where labels may be reserved words.
    pub fn label(&self) -> Option<&str> {
        match self {
            Tok::Ident(s) => Some(s),
            Tok::Kw(k) => Some(k),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

pub fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    let err = |line, col, msg: &str| ParseError::new(line, col, msg);

    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'-') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (tline, tcol) = (line, col);
        let start = i;
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            match KEYWORDS.iter().find(|k| **k == word) {
                Some(k) => Tok::Kw(k),
                None => Tok::Ident(word),
            }
        } else if c.is_ascii_digit() {
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let digits: String = chars[start..i].iter().collect();
            Tok::Int(
                digits
                    .parse()
                    .map_err(|_| err(tline, tcol, "integer literal out of range"))?,
            )
        } else if c == '@' {
            i += 1;
            let neg = chars.get(i) == Some(&'-');
            if neg {
                i += 1;
            }
            let num_start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if num_start == i {
                return Err(err(tline, tcol, "expected digits after `@`"));
            }
            let first: String = chars[num_start..i].iter().collect();
            let first: i64 = first
                .parse()
                .map_err(|_| err(tline, tcol, "time literal out of range"))?;
            let value = if chars.get(i) == Some(&':')
                && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())
            {
                i += 1;
                let m_start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let minutes: String = chars[m_start..i].iter().collect();
                let minutes: i64 = minutes
                    .parse()
                    .map_err(|_| err(tline, tcol, "bad minutes"))?;
                if minutes >= 60 {
                    return Err(err(tline, tcol, "minutes must be below 60"));
                }
                first
                    .checked_mul(60)
                    .and_then(|h| h.checked_add(minutes))
                    .ok_or_else(|| err(tline, tcol, "time literal out of range"))?
            } else {
                first
            };
            Tok::Time(if neg { -value } else { value })
        } else if c == '"' {
            i += 1;
            let mut s = String::new();
            loop {
                match chars.get(i) {
                    None | Some('\n') => {
                        return Err(err(tline, tcol, "unterminated string literal"))
                    }
                    Some('"') => {
                        i += 1;
                        break;
                    }
                    Some('\\') => {
                        let esc = match chars.get(i + 1) {
                            Some('n') => '\n',
                            Some('"') => '"',
                            Some('\\') => '\\',
                            _ => {
                                return Err(err(line, col + (i - start), "unknown escape sequence"))
                            }
                        };
                        s.push(esc);
                        i += 2;
                    }
                    Some(ch) => {
                        s.push(*ch);
                        i += 1;
                    }
                }
            }
            Tok::Str(s)
        } else {
            let sym = SYMBOLS.iter().find(|s| {
                let sc: Vec<char> = s.chars().collect();
                chars[i..].starts_with(&sc)
            });
            match sym {
                Some(s) => {
                    i += s.chars().count();
                    Tok::Sym(s)
                }
                None => {
                    return Err(err(
                        tline,
                        tcol,
                        &alloc::format!("unexpected character `{c}`"),
                    ))
                }
            }
        };
        col += i - start;
        out.push(Token {
            tok,
            line: tline,
            col: tcol,
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn toks(s: &str) -> Vec<Tok> {
        lex(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn lexes_arrows_and_times() {
        assert_eq!(
            toks("for (x <t- t) @17:30 -- comment\n@-3"),
            vec![
                Tok::Kw("for"),
                Tok::Sym("("),
                Tok::Ident("x".into()),
                Tok::Sym("<t-"),
                Tok::Ident("t".into()),
                Tok::Sym(")"),
                Tok::Time(1050),
                Tok::Time(-3),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn effect_arrows_split() {
        assert_eq!(
            toks("int -{read}-> int"),
            vec![
                Tok::Ident("int".into()),
                Tok::Sym("-"),
                Tok::Sym("{"),
                Tok::Ident("read".into()),
                Tok::Sym("}"),
                Tok::Sym("->"),
                Tok::Ident("int".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn strings_and_positions() {
        let t = lex("\n  \"a\\\"b\"").unwrap();
        assert_eq!(t[0].tok, Tok::Str("a\"b".into()));
        assert_eq!((t[0].line, t[0].col), (2, 3));
        assert!(lex("\"open").is_err());
    }
}
