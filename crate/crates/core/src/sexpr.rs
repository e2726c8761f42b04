//! Minimal s-expression reader shared by the concept and problem parsers.

use std::fmt;

/// 1-based line and column of a token.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{pos}: {message}")]
pub struct ParseError {
    pub pos: Pos,
    pub message: String,
}

impl ParseError {
    pub fn new(pos: Pos, message: impl Into<String>) -> Self {
        ParseError {
            pos,
            message: message.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SExpr {
    Atom(String, Pos),
    List(Vec<SExpr>, Pos),
}

impl SExpr {
    pub fn pos(&self) -> Pos {
        match self {
            SExpr::Atom(_, p) | SExpr::List(_, p) => *p,
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            SExpr::Atom(s, _) => Some(s),
            SExpr::List(..) => None,
        }
    }
}

enum Tok {
    Open(Pos),
    Close(Pos),
    Atom(String, Pos),
}

fn tokenize(text: &str) -> Vec<Tok> {
    let mut out = Vec::new();
    let mut line = 1;
    let mut col = 1;
    let mut chars = text.chars().peekable();
    while let Some(&ch) = chars.peek() {
        let pos = Pos { line, col };
        match ch {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                chars.next();
                col += 1;
            }
            ';' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                }
            }
            '(' => {
                chars.next();
                col += 1;
                out.push(Tok::Open(pos));
            }
            ')' => {
                chars.next();
                col += 1;
                out.push(Tok::Close(pos));
            }
            _ => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    s.push(c);
                    chars.next();
                    col += 1;
                }
                out.push(Tok::Atom(s, pos));
            }
        }
    }
    out
}

/// Reads every top-level expression in `text`.
pub fn parse_all(text: &str) -> Result<Vec<SExpr>, ParseError> {
    let toks = tokenize(text);
    let mut stack: Vec<(Pos, Vec<SExpr>)> = Vec::new();
    let mut top = Vec::new();
    for tok in toks {
        match tok {
            Tok::Open(p) => stack.push((p, Vec::new())),
            Tok::Close(p) => {
                let (open, items) = stack
                    .pop()
                    .ok_or_else(|| ParseError::new(p, "unbalanced ')'"))?;
                let e = SExpr::List(items, open);
                match stack.last_mut() {
                    Some((_, parent)) => parent.push(e),
                    None => top.push(e),
                }
            }
            Tok::Atom(s, p) => {
                let e = SExpr::Atom(s, p);
                match stack.last_mut() {
                    Some((_, parent)) => parent.push(e),
                    None => top.push(e),
                }
            }
        }
    }
    if let Some((p, _)) = stack.pop() {
        return Err(ParseError::new(p, "unclosed '('"));
    }
    Ok(top)
}

/// Reads exactly one expression.
pub fn parse_one(text: &str) -> Result<SExpr, ParseError> {
    let mut all = parse_all(text)?;
    match all.len() {
        1 => Ok(all.pop().unwrap()),
        0 => Err(ParseError::new(Pos { line: 1, col: 1 }, "empty input")),
        _ => Err(ParseError::new(all[1].pos(), "trailing input")),
    }
}
