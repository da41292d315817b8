//! Text syntax for formulas.
//!
//! ```text
//! formula  := disj
//! disj     := conj ('or' conj)*
//! conj     := impl ('and' impl)*
//! impl     := unary ('=>' impl)?
//! unary    := 'not' unary
//!           | 'always' interval? unary
//!           | 'eventually' interval? unary
//!           | '(' formula ('until' interval? formula)? ')'
//!           | atom
//! interval := '[' number ',' (number | 'end') ']'
//! atom     := ident cmp number          cmp := '<' | '<=' | '>' | '>='
//! ```
//!
//! `and` binds tighter than `or`; `=>` is right-associative. Omitted
//! intervals default to `[0,end]`, the whole remaining trace. Channel names
//! are not resolved here; unknown channels surface at evaluation time.

use std::fmt;

use thiserror::Error;

use crate::stl::ast::{Comparison, Formula, Interval};

#[derive(Debug, Clone, Error, PartialEq)]
#[error("syntax error at position {position}: {message}")]
pub struct ParseError {
    /// 1-based character position in the input.
    pub position: usize,
    pub message: String,
}

impl ParseError {
    fn new(position: usize, message: impl Into<String>) -> Self {
        ParseError {
            position,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Arrow,
    Cmp(Comparison),
    Number(f64),
    Ident(String),
    Not,
    And,
    Or,
    Always,
    Eventually,
    Until,
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::LParen => write!(f, "'('"),
            Tok::RParen => write!(f, "')'"),
            Tok::LBracket => write!(f, "'['"),
            Tok::RBracket => write!(f, "']'"),
            Tok::Comma => write!(f, "','"),
            Tok::Arrow => write!(f, "'=>'"),
            Tok::Cmp(c) => write!(f, "'{}'", c),
            Tok::Number(n) => write!(f, "number {}", n),
            Tok::Ident(s) => write!(f, "identifier '{}'", s),
            Tok::Not => write!(f, "'not'"),
            Tok::And => write!(f, "'and'"),
            Tok::Or => write!(f, "'or'"),
            Tok::Always => write!(f, "'always'"),
            Tok::Eventually => write!(f, "'eventually'"),
            Tok::Until => write!(f, "'until'"),
            Tok::End => write!(f, "'end'"),
        }
    }
}

/// Token plus the 1-based character position where it starts.
struct Spanned {
    tok: Tok,
    pos: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let pos = i + 1;
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                i += 1;
            }
            '(' => {
                toks.push(Spanned {
                    tok: Tok::LParen,
                    pos,
                });
                i += 1;
            }
            ')' => {
                toks.push(Spanned {
                    tok: Tok::RParen,
                    pos,
                });
                i += 1;
            }
            '[' => {
                toks.push(Spanned {
                    tok: Tok::LBracket,
                    pos,
                });
                i += 1;
            }
            ']' => {
                toks.push(Spanned {
                    tok: Tok::RBracket,
                    pos,
                });
                i += 1;
            }
            ',' => {
                toks.push(Spanned {
                    tok: Tok::Comma,
                    pos,
                });
                i += 1;
            }
            '=' => {
                if chars.get(i + 1) == Some(&'>') {
                    toks.push(Spanned {
                        tok: Tok::Arrow,
                        pos,
                    });
                    i += 2;
                } else {
                    return Err(ParseError::new(pos, "expected '=>' after '='"));
                }
            }
            '<' | '>' => {
                let cmp = if chars.get(i + 1) == Some(&'=') {
                    i += 2;
                    if c == '<' {
                        Comparison::Le
                    } else {
                        Comparison::Ge
                    }
                } else {
                    i += 1;
                    if c == '<' {
                        Comparison::Lt
                    } else {
                        Comparison::Gt
                    }
                };
                toks.push(Spanned {
                    tok: Tok::Cmp(cmp),
                    pos,
                });
            }
            '-' => {
                if chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()) {
                    let (tok, next) = lex_number(&chars, i)?;
                    toks.push(Spanned { tok, pos });
                    i = next;
                } else {
                    return Err(ParseError::new(pos, "'-' must start a number"));
                }
            }
            _ if c.is_ascii_digit() => {
                let (tok, next) = lex_number(&chars, i)?;
                toks.push(Spanned { tok, pos });
                i = next;
            }
            _ if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                let tok = match word.as_str() {
                    "not" => Tok::Not,
                    "and" => Tok::And,
                    "or" => Tok::Or,
                    "always" => Tok::Always,
                    "eventually" => Tok::Eventually,
                    "until" => Tok::Until,
                    "end" => Tok::End,
                    _ => Tok::Ident(word),
                };
                toks.push(Spanned { tok, pos });
            }
            other => {
                return Err(ParseError::new(
                    pos,
                    format!("unexpected character '{}'", other),
                ));
            }
        }
    }
    Ok(toks)
}

fn lex_number(chars: &[char], start: usize) -> Result<(Tok, usize), ParseError> {
    let mut i = start;
    if chars[i] == '-' {
        i += 1;
    }
    while i < chars.len() && chars[i].is_ascii_digit() {
        i += 1;
    }
    if i < chars.len() && chars[i] == '.' {
        i += 1;
        if i >= chars.len() || !chars[i].is_ascii_digit() {
            return Err(ParseError::new(i + 1, "expected digit after decimal point"));
        }
        while i < chars.len() && chars[i].is_ascii_digit() {
            i += 1;
        }
    }
    if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
        let mut j = i + 1;
        if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
            j += 1;
        }
        if j < chars.len() && chars[j].is_ascii_digit() {
            i = j;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
        }
    }
    let text: String = chars[start..i].iter().collect();
    let value: f64 = text
        .parse()
        .map_err(|_| ParseError::new(start + 1, format!("invalid number '{}'", text)))?;
    Ok((Tok::Number(value), i))
}

struct Parser {
    toks: Vec<Spanned>,
    idx: usize,
    end_pos: usize,
}

/// Parses DSL text into a [`Formula`].
pub fn parse(text: &str) -> Result<Formula, ParseError> {
    let toks = lex(text)?;
    let end_pos = text.chars().count() + 1;
    if toks.is_empty() {
        return Err(ParseError::new(1, "empty formula"));
    }
    let mut parser = Parser {
        toks,
        idx: 0,
        end_pos,
    };
    let formula = parser.disj()?;
    if let Some(sp) = parser.peek() {
        return Err(ParseError::new(
            sp.pos,
            format!("unexpected {} after formula", sp.tok),
        ));
    }
    Ok(formula)
}

impl Parser {
    fn peek(&self) -> Option<&Spanned> {
        self.toks.get(self.idx)
    }

    fn next(&mut self) -> Option<&Spanned> {
        let sp = self.toks.get(self.idx);
        if sp.is_some() {
            self.idx += 1;
        }
        sp
    }

    fn here(&self) -> usize {
        self.peek().map(|s| s.pos).unwrap_or(self.end_pos)
    }

    fn eat(&mut self, want: &Tok, what: &str) -> Result<usize, ParseError> {
        match self.next() {
            Some(sp) if sp.tok == *want => Ok(sp.pos),
            Some(sp) => Err(ParseError::new(
                sp.pos,
                format!("expected {}, found {}", what, sp.tok),
            )),
            None => Err(ParseError::new(
                self.end_pos,
                format!("expected {}, found end of input", what),
            )),
        }
    }

    fn disj(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.conj()?;
        while matches!(self.peek(), Some(sp) if sp.tok == Tok::Or) {
            self.idx += 1;
            let rhs = self.conj()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn conj(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.implication()?;
        while matches!(self.peek(), Some(sp) if sp.tok == Tok::And) {
            self.idx += 1;
            let rhs = self.implication()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn implication(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.unary()?;
        if matches!(self.peek(), Some(sp) if sp.tok == Tok::Arrow) {
            self.idx += 1;
            let rhs = self.implication()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        let sp = match self.peek() {
            Some(sp) => sp,
            None => {
                return Err(ParseError::new(
                    self.end_pos,
                    "expected formula, found end of input",
                ));
            }
        };
        match sp.tok.clone() {
            Tok::Not => {
                self.idx += 1;
                Ok(Formula::not_(self.unary()?))
            }
            Tok::Always => {
                self.idx += 1;
                let iv = self.optional_interval()?;
                Ok(Formula::always(iv, self.unary()?))
            }
            Tok::Eventually => {
                self.idx += 1;
                let iv = self.optional_interval()?;
                Ok(Formula::eventually(iv, self.unary()?))
            }
            Tok::LParen => {
                self.idx += 1;
                let inner = self.disj()?;
                if matches!(self.peek(), Some(sp) if sp.tok == Tok::Until) {
                    self.idx += 1;
                    let iv = self.optional_interval()?;
                    let rhs = self.disj()?;
                    self.eat(&Tok::RParen, "')'")?;
                    return Ok(Formula::until(iv, inner, rhs));
                }
                self.eat(&Tok::RParen, "')'")?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.idx += 1;
                let cmp = match self.next() {
                    Some(sp) => match sp.tok {
                        Tok::Cmp(c) => c,
                        ref other => {
                            return Err(ParseError::new(
                                sp.pos,
                                format!("expected comparison operator, found {}", other),
                            ));
                        }
                    },
                    None => {
                        return Err(ParseError::new(
                            self.end_pos,
                            "expected comparison operator, found end of input",
                        ));
                    }
                };
                let threshold = self.number("threshold")?;
                Ok(Formula::atom(name, cmp, threshold))
            }
            other => Err(ParseError::new(
                sp.pos,
                format!("expected formula, found {}", other),
            )),
        }
    }

    fn number(&mut self, what: &str) -> Result<f64, ParseError> {
        match self.next() {
            Some(sp) => match sp.tok {
                Tok::Number(n) => Ok(n),
                ref other => Err(ParseError::new(
                    sp.pos,
                    format!("expected {} number, found {}", what, other),
                )),
            },
            None => Err(ParseError::new(
                self.end_pos,
                format!("expected {} number, found end of input", what),
            )),
        }
    }

    fn optional_interval(&mut self) -> Result<Interval, ParseError> {
        if !matches!(self.peek(), Some(sp) if sp.tok == Tok::LBracket) {
            return Ok(Interval::full());
        }
        let open_pos = self.here();
        self.idx += 1;
        let start = self.number("interval lower bound")?;
        self.eat(&Tok::Comma, "','")?;
        let iv = match self.peek() {
            Some(sp) if sp.tok == Tok::End => {
                self.idx += 1;
                Interval::unbounded_from(start)
            }
            _ => {
                let end = self.number("interval upper bound")?;
                Interval::bounded(start, end)
            }
        };
        let iv = iv.map_err(|e| ParseError::new(open_pos, e.to_string()))?;
        self.eat(&Tok::RBracket, "']'")?;
        Ok(iv)
    }
}
