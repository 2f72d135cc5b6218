//! Recursive-descent parser for the textual formula language.
//!
//! ```text
//! phi   := disj
//! disj  := conj ("or" conj)*
//! conj  := unary ("and" unary)*
//! unary := "not" unary | ("G" | "F") "[" int "," int "]" "(" phi ")" | "(" phi ")" | pred
//! pred  := ident op number          ident = x1 .. xn, op = < | <= | > | >=
//! ```

use super::{Comparison, Interval, StlFormula};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Ident(String),
    Number(String),
    Op(Comparison),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
}

fn syntax(position: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        position,
        message: message.into(),
    }
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token)>> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'(' => tokens.push((start, Token::LParen)),
            b')' => tokens.push((start, Token::RParen)),
            b'[' => tokens.push((start, Token::LBracket)),
            b']' => tokens.push((start, Token::RBracket)),
            b',' => tokens.push((start, Token::Comma)),
            b'<' | b'>' => {
                let eq = bytes.get(i + 1) == Some(&b'=');
                let op = match (c, eq) {
                    (b'<', false) => Comparison::Lt,
                    (b'<', true) => Comparison::Le,
                    (b'>', false) => Comparison::Gt,
                    _ => Comparison::Ge,
                };
                if eq {
                    i += 1;
                }
                tokens.push((start, Token::Op(op)));
            }
            b'-' | b'+' | b'.' | b'0'..=b'9' => {
                i += 1;
                while i < bytes.len() {
                    let d = bytes[i];
                    let exp_sign = (d == b'-' || d == b'+') && matches!(bytes[i - 1], b'e' | b'E');
                    if d.is_ascii_digit() || d == b'.' || d == b'e' || d == b'E' || exp_sign {
                        i += 1;
                    } else {
                        break;
                    }
                }
                tokens.push((start, Token::Number(text[start..i].to_string())));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                tokens.push((start, Token::Ident(text[start..i].to_string())));
                continue;
            }
            _ => {
                return Err(syntax(
                    start,
                    format!("unexpected character `{}`", c as char),
                ))
            }
        }
        i += 1;
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn next(&mut self) -> Option<Token> {
        let tok = self.tokens.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        tok
    }

    fn expect(&mut self, want: Token, what: &str) -> Result<()> {
        let at = self.offset();
        match self.next() {
            Some(ref t) if *t == want => Ok(()),
            _ => Err(syntax(at, format!("expected {what}"))),
        }
    }

    fn keyword(&self, word: &str) -> bool {
        matches!(self.peek(), Some(Token::Ident(w)) if w == word)
    }

    fn disjunction(&mut self) -> Result<StlFormula> {
        let mut lhs = self.conjunction()?;
        while self.keyword("or") {
            self.pos += 1;
            lhs = lhs.or(self.conjunction()?);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<StlFormula> {
        let mut lhs = self.unary()?;
        while self.keyword("and") {
            self.pos += 1;
            lhs = lhs.and(self.unary()?);
        }
        Ok(lhs)
    }

    fn integer(&mut self) -> Result<usize> {
        let at = self.offset();
        match self.next() {
            Some(Token::Number(n)) => n
                .parse()
                .map_err(|_| syntax(at, format!("`{n}` is not a non-negative integer"))),
            _ => Err(syntax(at, "expected an integer time bound")),
        }
    }

    fn unary(&mut self) -> Result<StlFormula> {
        let at = self.offset();
        match self.peek().cloned() {
            Some(Token::Ident(word)) if word == "not" => {
                self.pos += 1;
                Ok(self.unary()?.not())
            }
            Some(Token::Ident(word))
                if (word == "G" || word == "F")
                    && self.tokens.get(self.pos + 1).map(|(_, t)| t) == Some(&Token::LBracket) =>
            {
                self.pos += 2;
                let start = self.integer()?;
                self.expect(Token::Comma, "`,`")?;
                let end = self.integer()?;
                self.expect(Token::RBracket, "`]`")?;
                if start > end {
                    return Err(syntax(
                        at,
                        format!("interval [{start},{end}] has start after end"),
                    ));
                }
                self.expect(Token::LParen, "`(`")?;
                let body = self.disjunction()?;
                self.expect(Token::RParen, "`)`")?;
                let interval = Interval::new(start, end)?;
                Ok(if word == "G" {
                    StlFormula::Always(interval, Box::new(body))
                } else {
                    StlFormula::Eventually(interval, Box::new(body))
                })
            }
            Some(Token::LParen) => {
                self.pos += 1;
                let inner = self.disjunction()?;
                self.expect(Token::RParen, "`)`")?;
                Ok(inner)
            }
            Some(Token::Ident(name)) => {
                self.pos += 1;
                let component = name
                    .strip_prefix('x')
                    .and_then(|d| d.parse::<usize>().ok())
                    .filter(|&j| j >= 1)
                    .ok_or_else(|| syntax(at, format!("unknown identifier `{name}`")))?;
                let op_at = self.offset();
                let comparison = match self.next() {
                    Some(Token::Op(op)) => op,
                    _ => return Err(syntax(op_at, "expected one of < <= > >=")),
                };
                let num_at = self.offset();
                let threshold = match self.next() {
                    Some(Token::Number(n)) => n
                        .parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| syntax(num_at, format!("bad number `{n}`")))?,
                    _ => return Err(syntax(num_at, "expected a number")),
                };
                Ok(StlFormula::predicate(component - 1, comparison, threshold))
            }
            _ => Err(syntax(at, "expected a formula")),
        }
    }
}

/// Parses a formula from text.
pub fn parse(text: &str) -> Result<StlFormula> {
    let mut parser = Parser {
        tokens: tokenize(text)?,
        pos: 0,
        end: text.len(),
    };
    let formula = parser.disjunction()?;
    if parser.pos < parser.tokens.len() {
        return Err(syntax(parser.offset(), "unexpected trailing input"));
    }
    Ok(formula)
}
