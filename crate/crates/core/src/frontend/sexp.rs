//! Minimal S-expression reader and writer with source positions.

use std::fmt;

use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SExp {
    Atom(Atom),
    List(Vec<SExp>, Pos),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Atom {
    pub text: String,
    /// Quoted string atoms keep their unescaped contents in `text`.
    pub quoted: bool,
    pub pos: Pos,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{pos}: {msg}")]
pub struct ParseError {
    pub pos: Pos,
    pub msg: String,
}

impl ParseError {
    pub fn new(pos: Pos, msg: impl Into<String>) -> ParseError {
        ParseError { pos, msg: msg.into() }
    }
}

impl SExp {
    pub fn pos(&self) -> Pos {
        match self {
            SExp::Atom(a) => a.pos,
            SExp::List(_, p) => *p,
        }
    }

    pub fn atom(text: impl Into<String>) -> SExp {
        SExp::Atom(Atom {
            text: text.into(),
            quoted: false,
            pos: Pos::default(),
        })
    }

    pub fn string(text: impl Into<String>) -> SExp {
        SExp::Atom(Atom {
            text: text.into(),
            quoted: true,
            pos: Pos::default(),
        })
    }

    pub fn list(items: Vec<SExp>) -> SExp {
        SExp::List(items, Pos::default())
    }

    /// Tagged list `(tag a b ...)`.
    pub fn tagged(tag: &str, mut rest: Vec<SExp>) -> SExp {
        rest.insert(0, SExp::atom(tag));
        SExp::list(rest)
    }
}

struct Reader<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    pos: Pos,
}

impl Reader<'_> {
    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.pos.line += 1;
            self.pos.col = 1;
        } else {
            self.pos.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == ';' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn read(&mut self) -> Result<SExp, ParseError> {
        self.skip_trivia();
        let start = self.pos;
        match self.chars.peek().copied() {
            None => Err(ParseError::new(start, "expected expression, found end of input")),
            Some('(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    match self.chars.peek() {
                        None => {
                            return Err(ParseError::new(
                                self.pos,
                                format!("expected ')' to close list opened at {start}"),
                            ))
                        }
                        Some(')') => {
                            self.bump();
                            return Ok(SExp::List(items, start));
                        }
                        Some(_) => items.push(self.read()?),
                    }
                }
            }
            Some(')') => Err(ParseError::new(start, "unexpected ')'")),
            Some('"') => {
                self.bump();
                let mut text = String::new();
                loop {
                    match self.bump() {
                        None => return Err(ParseError::new(self.pos, "unterminated string")),
                        Some('"') => break,
                        Some('\\') => match self.bump() {
                            Some(c @ ('"' | '\\')) => text.push(c),
                            Some('n') => text.push('\n'),
                            _ => return Err(ParseError::new(self.pos, "invalid escape in string")),
                        },
                        Some(c) => text.push(c),
                    }
                }
                Ok(SExp::Atom(Atom {
                    text,
                    quoted: true,
                    pos: start,
                }))
            }
            Some(_) => {
                let mut text = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_whitespace() || matches!(c, '(' | ')' | '"' | ';') {
                        break;
                    }
                    text.push(c);
                    self.bump();
                }
                Ok(SExp::Atom(Atom {
                    text,
                    quoted: false,
                    pos: start,
                }))
            }
        }
    }
}

/// Reads exactly one S-expression; trailing non-comment text is an error.
pub fn read_one(text: &str) -> Result<SExp, ParseError> {
    let mut r = Reader {
        chars: text.chars().peekable(),
        pos: Pos { line: 1, col: 1 },
    };
    let e = r.read()?;
    r.skip_trivia();
    if r.chars.peek().is_some() {
        return Err(ParseError::new(r.pos, "unexpected text after expression"));
    }
    Ok(e)
}

/// Reads every top-level S-expression in `text`.
pub fn read_all(text: &str) -> Result<Vec<SExp>, ParseError> {
    let mut r = Reader {
        chars: text.chars().peekable(),
        pos: Pos { line: 1, col: 1 },
    };
    let mut out = Vec::new();
    loop {
        r.skip_trivia();
        if r.chars.peek().is_none() {
            return Ok(out);
        }
        out.push(r.read()?);
    }
}

fn write_atom(a: &Atom, out: &mut String) {
    if a.quoted {
        out.push('"');
        for c in a.text.chars() {
            match c {
                '"' => out.push_str("\\\""),
                '\\' => out.push_str("\\\\"),
                '\n' => out.push_str("\\n"),
                c => out.push(c),
            }
        }
        out.push('"');
    } else {
        out.push_str(&a.text);
    }
}

/// Single-line rendering.
pub fn write_flat(e: &SExp, out: &mut String) {
    match e {
        SExp::Atom(a) => write_atom(a, out),
        SExp::List(items, _) => {
            out.push('(');
            for (k, it) in items.iter().enumerate() {
                if k > 0 {
                    out.push(' ');
                }
                write_flat(it, out);
            }
            out.push(')');
        }
    }
}

pub fn flat(e: &SExp) -> String {
    let mut s = String::new();
    write_flat(e, &mut s);
    s
}

/// Indented rendering: lists that fit in `width` columns stay on one line,
/// longer ones put the head on the first line and each remaining element on
/// its own line.
pub fn write_pretty(e: &SExp, indent: usize, width: usize, out: &mut String) {
    let one = flat(e);
    match e {
        SExp::List(items, _) if indent + one.len() > width && items.len() > 1 => {
            out.push('(');
            write_flat(&items[0], out);
            for it in &items[1..] {
                out.push('\n');
                out.push_str(&" ".repeat(indent + 2));
                write_pretty(it, indent + 2, width, out);
            }
            out.push(')');
        }
        _ => out.push_str(&one),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_nested_lists_and_strings() {
        let e = read_one("(a (b \"x \\\"y\\\\\") ; comment\n c)").unwrap();
        let SExp::List(items, _) = &e else { panic!() };
        assert_eq!(items.len(), 3);
        let SExp::List(inner, _) = &items[1] else { panic!() };
        let SExp::Atom(s) = &inner[1] else { panic!() };
        assert!(s.quoted);
        assert_eq!(s.text, "x \"y\\");
        assert_eq!(flat(&read_one(&flat(&e)).unwrap()), flat(&e));
    }

    #[test]
    fn reports_positions() {
        let err = read_one("(a\n  (b c)").unwrap_err();
        assert_eq!(err.pos.line, 2);
        let err = read_one(")").unwrap_err();
        assert_eq!(err.pos, Pos { line: 1, col: 1 });
        assert!(read_one("(a) b").is_err());
        assert!(read_one("\"abc").is_err());
    }
}
