//! Recursive-descent parser for the constraint DSL.
//!
//! Grammar (lowest precedence first):
//!
//! ```text
//! formula    := or_chain ( "->" formula )?              right associative
//! or_chain   := and_chain ( "||" and_chain )*
//! and_chain  := negation ( "&&" negation )*
//! negation   := "!" negation | "(" formula ")" | comparison
//! comparison := term ( "<=" | "<" | "=" | ">" | ">=" ) term
//! term       := factor ( ( "+" | "-" ) factor )*
//! factor     := unary ( ( "*" | "/" ) unary )*
//! unary      := "-" unary | power
//! power      := atom ( "^" natural )?
//! atom       := number | identifier | "(" term ")"
//! ```
//!
//! Numbers accept an optional fraction and exponent. A parenthesized prefix
//! is tried as a formula first and reparsed as a term on failure, so both
//! `(x > 1) && y < 2` and `(x + 1) * 2 > y` parse.

use thiserror::Error;

use super::ast::{Cmp, Formula, Term};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("syntax error at column {col}: {msg}")]
pub struct ParseError {
    /// 1-based character column.
    pub col: usize,
    pub msg: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Le,
    Lt,
    Eq,
    Gt,
    Ge,
    AndAnd,
    OrOr,
    Bang,
    Arrow,
}

#[derive(Debug, Clone)]
struct Token {
    kind: Tok,
    start: usize,
    end: usize, // column of the last character, inclusive
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0usize;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let two = if i + 1 < chars.len() { Some(chars[i + 1]) } else { None };
        let (kind, len) = match (c, two) {
            ('&', Some('&')) => (Tok::AndAnd, 2),
            ('|', Some('|')) => (Tok::OrOr, 2),
            ('-', Some('>')) => (Tok::Arrow, 2),
            ('<', Some('=')) => (Tok::Le, 2),
            ('>', Some('=')) => (Tok::Ge, 2),
            ('<', _) => (Tok::Lt, 1),
            ('>', _) => (Tok::Gt, 1),
            ('=', _) => (Tok::Eq, 1),
            ('+', _) => (Tok::Plus, 1),
            ('-', _) => (Tok::Minus, 1),
            ('*', _) => (Tok::Star, 1),
            ('/', _) => (Tok::Slash, 1),
            ('^', _) => (Tok::Caret, 1),
            ('(', _) => (Tok::LParen, 1),
            (')', _) => (Tok::RParen, 1),
            ('!', _) => (Tok::Bang, 1),
            _ if c.is_ascii_digit() => {
                let mut j = i;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                if j < chars.len() && chars[j] == '.' {
                    j += 1;
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                }
                if j < chars.len() && (chars[j] == 'e' || chars[j] == 'E') {
                    let mut k = j + 1;
                    if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                        k += 1;
                    }
                    if k < chars.len() && chars[k].is_ascii_digit() {
                        j = k;
                        while j < chars.len() && chars[j].is_ascii_digit() {
                            j += 1;
                        }
                    }
                }
                let s: String = chars[i..j].iter().collect();
                let v = s
                    .parse::<f64>()
                    .map_err(|_| ParseError { col, msg: format!("bad number `{s}`") })?;
                (Tok::Num(v), j - i)
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                (Tok::Ident(chars[i..j].iter().collect()), j - i)
            }
            _ => {
                return Err(ParseError { col, msg: format!("unexpected character `{c}`") });
            }
        };
        toks.push(Token { kind, start: col, end: col + len - 1 });
        i += len;
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.kind)
    }

    fn advance(&mut self) -> Option<Token> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, kind: &Tok) -> bool {
        if self.peek() == Some(kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    // Column where the next token would need to start: right after the
    // previous token, or the current token's own start.
    fn here(&self) -> usize {
        match self.toks.get(self.pos) {
            Some(t) => t.start,
            None => self.toks.last().map_or(1, |t| t.end + 1),
        }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError { col: self.here(), msg: msg.into() })
    }

    fn parse_formula(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.parse_or()?;
        if self.eat(&Tok::Arrow) {
            let rhs = self.parse_formula()?;
            return Ok(Formula::Implies(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn parse_or(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.parse_and()?;
        while self.eat(&Tok::OrOr) {
            let rhs = self.parse_and()?;
            lhs = Formula::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_and(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.parse_negation()?;
        while self.eat(&Tok::AndAnd) {
            let rhs = self.parse_negation()?;
            lhs = Formula::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_negation(&mut self) -> Result<Formula, ParseError> {
        if self.eat(&Tok::Bang) {
            let inner = self.parse_negation()?;
            return Ok(Formula::Not(Box::new(inner)));
        }
        if self.peek() == Some(&Tok::LParen) {
            // Could open a formula or a term; try the formula reading and
            // fall back to a comparison on failure.
            let save = self.pos;
            self.pos += 1;
            if let Ok(f) = self.parse_formula() {
                if self.eat(&Tok::RParen) {
                    return Ok(f);
                }
            }
            self.pos = save;
        }
        self.parse_comparison()
    }

    fn parse_comparison(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.parse_term()?;
        let op = match self.peek() {
            Some(Tok::Le) => Cmp::Le,
            Some(Tok::Lt) => Cmp::Lt,
            Some(Tok::Eq) => Cmp::Eq,
            Some(Tok::Gt) => Cmp::Gt,
            Some(Tok::Ge) => Cmp::Ge,
            _ => return self.err("expected a comparison operator"),
        };
        self.pos += 1;
        let rhs = self.parse_term()?;
        Ok(Formula::Cmp(op, lhs, rhs))
    }

    fn parse_term(&mut self) -> Result<Term, ParseError> {
        let mut lhs = self.parse_factor()?;
        loop {
            if self.eat(&Tok::Plus) {
                let rhs = self.parse_factor()?;
                lhs = Term::Add(Box::new(lhs), Box::new(rhs));
            } else if self.eat(&Tok::Minus) {
                let rhs = self.parse_factor()?;
                lhs = Term::Sub(Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn parse_factor(&mut self) -> Result<Term, ParseError> {
        let mut lhs = self.parse_unary()?;
        loop {
            if self.eat(&Tok::Star) {
                let rhs = self.parse_unary()?;
                lhs = Term::Mul(Box::new(lhs), Box::new(rhs));
            } else if self.eat(&Tok::Slash) {
                let rhs = self.parse_unary()?;
                lhs = Term::Div(Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn parse_unary(&mut self) -> Result<Term, ParseError> {
        if self.eat(&Tok::Minus) {
            let inner = self.parse_unary()?;
            return Ok(Term::Neg(Box::new(inner)));
        }
        self.parse_power()
    }

    fn parse_power(&mut self) -> Result<Term, ParseError> {
        let base = self.parse_atom()?;
        if self.eat(&Tok::Caret) {
            let col = self.here();
            match self.advance().map(|t| t.kind) {
                Some(Tok::Num(v)) if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 => {
                    return Ok(Term::Pow(Box::new(base), v as u32));
                }
                _ => {
                    return Err(ParseError { col, msg: "exponent must be a natural number".into() });
                }
            }
        }
        Ok(base)
    }

    fn parse_atom(&mut self) -> Result<Term, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Term::Const(v))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                Ok(Term::Var(name))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let t = self.parse_term()?;
                if !self.eat(&Tok::RParen) {
                    return self.err("expected `)`");
                }
                Ok(t)
            }
            _ => self.err("expected a number, variable, or `(`"),
        }
    }
}

/// Parses a formula in the documented grammar.
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let toks = lex(text)?;
    if toks.is_empty() {
        return Err(ParseError { col: 1, msg: "empty input".into() });
    }
    let mut p = Parser { toks, pos: 0 };
    let f = p.parse_formula()?;
    if p.pos != p.toks.len() {
        return p.err("unexpected trailing input");
    }
    Ok(f)
}

/// Parses a bare arithmetic term (used by tests and diagnostics).
pub fn parse_term(text: &str) -> Result<Term, ParseError> {
    let toks = lex(text)?;
    if toks.is_empty() {
        return Err(ParseError { col: 1, msg: "empty input".into() });
    }
    let mut p = Parser { toks, pos: 0 };
    let t = p.parse_term()?;
    if p.pos != p.toks.len() {
        return p.err("unexpected trailing input");
    }
    Ok(t)
}
