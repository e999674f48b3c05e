//! Tokenizer and parsing cursor shared by every textual view language and
//! the network language.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    /// `%name` annotation.
    Annot(String),
    Punct(&'static str),
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

// Longest first so that `|->` wins over `|` etc.
const PUNCTS: &[&str] = &[
    "|->", "->", "--", ":=", "==", "!=", "<=", ">=", "&&", "||", "..", "{", "}", "(", ")", "[",
    "]", ":", ";", ",", ".", "<", ">", "+", "-", "!", "=", "*", "/", "_",
];

pub fn tokenize(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
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
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (start_line, start_col) = (line, col);
        if c.is_ascii_alphabetic() || (c == '_' && chars.get(i + 1).is_some_and(|n| n.is_ascii_alphanumeric() || *n == '_')) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            col += i - start;
            out.push(Token {
                tok: Tok::Ident(s),
                line: start_line,
                col: start_col,
            });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            col += i - start;
            let v: i64 = s
                .parse()
                .map_err(|_| Error::at(start_line, start_col, format!("integer literal '{s}' out of range")))?;
            out.push(Token {
                tok: Tok::Int(v),
                line: start_line,
                col: start_col,
            });
            continue;
        }
        if c == '"' {
            let start = i + 1;
            i += 1;
            while i < chars.len() && chars[i] != '"' && chars[i] != '\n' {
                i += 1;
            }
            if i >= chars.len() || chars[i] != '"' {
                return Err(Error::at(start_line, start_col, "unterminated string literal"));
            }
            let s: String = chars[start..i].iter().collect();
            i += 1;
            col += s.chars().count() + 2;
            out.push(Token {
                tok: Tok::Str(s),
                line: start_line,
                col: start_col,
            });
            continue;
        }
        if c == '%' {
            let start = i + 1;
            i += 1;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            if i == start {
                return Err(Error::at(start_line, start_col, "empty annotation after '%'"));
            }
            let s: String = chars[start..i].iter().collect();
            col += i - start + 1;
            out.push(Token {
                tok: Tok::Annot(s),
                line: start_line,
                col: start_col,
            });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
        match PUNCTS.iter().find(|p| rest.starts_with(**p)) {
            Some(p) => {
                i += p.len();
                col += p.len();
                out.push(Token {
                    tok: Tok::Punct(p),
                    line: start_line,
                    col: start_col,
                });
            }
            None => {
                return Err(Error::at(start_line, start_col, format!("unexpected character '{c}'")));
            }
        }
    }
    Ok(out)
}

/// Position-tracking view over a token stream.
pub struct Cursor {
    toks: Vec<Token>,
    pos: usize,
    eof_line: usize,
}

impl Cursor {
    pub fn new(src: &str) -> Result<Self> {
        let toks = tokenize(src)?;
        let eof_line = src.lines().count().max(1);
        Ok(Cursor {
            toks,
            pos: 0,
            eof_line,
        })
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    pub fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    pub fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|t| &t.tok)
    }

    pub fn loc(&self) -> (usize, usize) {
        match self.toks.get(self.pos) {
            Some(t) => (t.line, t.col),
            None => (self.eof_line, 1),
        }
    }

    pub fn error(&self, msg: impl Into<String>) -> Error {
        let (l, c) = self.loc();
        Error::at(l, c, msg)
    }

    fn describe(&self) -> String {
        match self.peek() {
            None => "end of input".into(),
            Some(Tok::Ident(s)) => format!("'{s}'"),
            Some(Tok::Int(v)) => format!("'{v}'"),
            Some(Tok::Str(s)) => format!("\"{s}\""),
            Some(Tok::Annot(s)) => format!("'%{s}'"),
            Some(Tok::Punct(p)) => format!("'{p}'"),
        }
    }

    pub fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.tok.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    pub fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Some(Tok::Punct(q)) if *q == p)
    }

    pub fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == kw)
    }

    pub fn is_kw_at(&self, k: usize, kw: &str) -> bool {
        matches!(self.peek_at(k), Some(Tok::Ident(s)) if s == kw)
    }

    pub fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn expect_punct(&mut self, p: &str) -> Result<()> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.error(format!("expected '{p}', found {}", self.describe())))
        }
    }

    pub fn expect_kw(&mut self, kw: &str) -> Result<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.error(format!("expected '{kw}', found {}", self.describe())))
        }
    }

    pub fn expect_ident(&mut self) -> Result<String> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.error(format!("expected identifier, found {}", self.describe()))),
        }
    }

    pub fn expect_int(&mut self) -> Result<i64> {
        let neg = self.eat_punct("-");
        match self.peek() {
            Some(Tok::Int(v)) => {
                let v = *v;
                self.pos += 1;
                Ok(if neg { -v } else { v })
            }
            _ => Err(self.error(format!("expected integer, found {}", self.describe()))),
        }
    }

    pub fn expect_str(&mut self) -> Result<String> {
        match self.peek() {
            Some(Tok::Str(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.error(format!("expected string literal, found {}", self.describe()))),
        }
    }

    pub fn unexpected(&self) -> Error {
        self.error(format!("unexpected {}", self.describe()))
    }

    pub fn expect_end(&self) -> Result<()> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.error(format!("trailing input starting at {}", self.describe())))
        }
    }

    /// Skips any `;` separators.
    pub fn skip_semis(&mut self) {
        while self.eat_punct(";") {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexes_maps_and_ranges() {
        let toks: Vec<Tok> = tokenize("with cid |-> atm Int 0..3 // tail\n%consistent")
            .unwrap()
            .into_iter()
            .map(|t| t.tok)
            .collect();
        assert_eq!(
            toks,
            vec![
                Tok::Ident("with".into()),
                Tok::Ident("cid".into()),
                Tok::Punct("|->"),
                Tok::Ident("atm".into()),
                Tok::Ident("Int".into()),
                Tok::Int(0),
                Tok::Punct(".."),
                Tok::Int(3),
                Tok::Annot("consistent".into()),
            ]
        );
    }

    #[test]
    fn tracks_locations() {
        let toks = tokenize("a\n  b").unwrap();
        assert_eq!((toks[1].line, toks[1].col), (2, 3));
    }

    #[test]
    fn rejects_stray_characters() {
        let err = tokenize("a $ b").unwrap_err();
        assert_eq!(err.diagnostics()[0].col, 3);
    }
}
