//! Arithmetic expressions over feature names, compiled once to an index tree.
//!
//! Grammar: `+ - * /`, `^` (right associative), unary minus, parentheses,
//! decimal literals, bare identifiers and `"quoted names"`. The symbols
//! `×`, `÷` and `−` are accepted as aliases.

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Feature(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn eval<T: Scalar>(&self, row: &[T]) -> T {
        match self {
            Expr::Const(c) => T::lit(*c),
            Expr::Feature(j) => row[*j],
            Expr::Neg(a) => -a.eval(row),
            Expr::Add(a, b) => a.eval(row) + b.eval(row),
            Expr::Sub(a, b) => a.eval(row) - b.eval(row),
            Expr::Mul(a, b) => a.eval(row) * b.eval(row),
            Expr::Div(a, b) => a.eval(row) / b.eval(row),
            Expr::Pow(a, b) => a.eval(row).powf(b.eval(row)),
        }
    }

    pub fn max_feature(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Feature(j) => Some(*j),
            Expr::Neg(a) => a.max_feature(),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => a.max_feature().max(b.max_feature()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Num(x) => write!(f, "{x}"),
            Token::Ident(s) => write!(f, "{s}"),
            Token::Op(c) => write!(f, "{c}"),
            Token::LParen => f.write_str("("),
            Token::RParen => f.write_str(")"),
        }
    }
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let mut chars = src.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '0'..='9' | '.' => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_digit() || c == '.' {
                        s.push(c);
                        chars.next();
                    } else if (c == 'e' || c == 'E') && !s.contains(['e', 'E']) {
                        s.push(c);
                        chars.next();
                        if let Some(&sign @ ('+' | '-')) = chars.peek() {
                            s.push(sign);
                            chars.next();
                        }
                    } else {
                        break;
                    }
                }
                let x = s
                    .parse::<f64>()
                    .map_err(|_| Error::validation(format!("bad number {s:?} in expression")))?;
                out.push(Token::Num(x));
            }
            '"' => {
                chars.next();
                let mut s = String::new();
                loop {
                    match chars.next() {
                        Some('"') => break,
                        Some(c) => s.push(c),
                        None => return Err(Error::validation("unterminated quoted name")),
                    }
                }
                out.push(Token::Ident(s));
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_alphanumeric() || c == '_' {
                        s.push(c);
                        chars.next();
                    } else {
                        break;
                    }
                }
                out.push(Token::Ident(s));
            }
            '+' | '-' | '*' | '/' | '^' => {
                out.push(Token::Op(c));
                chars.next();
            }
            '×' => {
                out.push(Token::Op('*'));
                chars.next();
            }
            '÷' => {
                out.push(Token::Op('/'));
                chars.next();
            }
            '−' => {
                out.push(Token::Op('-'));
                chars.next();
            }
            '(' => {
                out.push(Token::LParen);
                chars.next();
            }
            ')' => {
                out.push(Token::RParen);
                chars.next();
            }
            other => {
                return Err(Error::validation(format!(
                    "unexpected character {other:?} in expression"
                )))
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    names: &'a [String],
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(Token::Op(op @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' {
                Expr::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(Token::Op(op @ ('*' | '/'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' {
                Expr::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if let Some(Token::Op('-')) = self.peek() {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if let Some(Token::Op('+')) = self.peek() {
            self.pos += 1;
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if let Some(Token::Op('^')) = self.peek() {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.next() {
            Some(Token::Num(x)) => Ok(Expr::Const(x)),
            Some(Token::Ident(name)) => self
                .names
                .iter()
                .position(|n| *n == name)
                .map(Expr::Feature)
                .ok_or_else(|| Error::validation(format!("undeclared feature {name:?}"))),
            Some(Token::LParen) => {
                let inner = self.expr()?;
                match self.next() {
                    Some(Token::RParen) => Ok(inner),
                    _ => Err(Error::validation("missing ')' in expression")),
                }
            }
            Some(t) => Err(Error::validation(format!("unexpected {t} in expression"))),
            None => Err(Error::validation("unexpected end of expression")),
        }
    }
}

/// Parses `src`, resolving identifiers against `feature_names`.
pub fn compile(src: &str, feature_names: &[String]) -> Result<Expr> {
    let tokens = tokenize(src)?;
    if tokens.is_empty() {
        return Err(Error::validation("empty expression"));
    }
    let mut parser = Parser {
        tokens,
        pos: 0,
        names: feature_names,
    };
    let expr = parser.expr()?;
    if let Some(t) = parser.peek() {
        return Err(Error::validation(format!("trailing {t} in expression")));
    }
    Ok(expr)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn precedence_and_associativity() {
        let n = names(&["a", "b"]);
        let e = compile("1 + 2 * a ^ 2 ^ 0.5 - b / 4", &n).unwrap();
        let got: f64 = e.eval(&[2.0, 8.0]);
        let want = 1.0 + 2.0 * 2f64.powf(2f64.powf(0.5)) - 2.0;
        assert!((got - want).abs() < 1e-12);
        let e = compile("-(a - b) × 2 − -1", &n).unwrap();
        assert_eq!(e.eval(&[1.0f64, 3.0]), 5.0);
    }

    #[test]
    fn admissions_weights() {
        let n = names(&["gpa", "sat", "essay"]);
        let e = compile("0.4*gpa + 0.4*sat + 0.2*essay", &n).unwrap();
        assert!((e.eval(&[4.0f64, 5.0, 5.0]) - 4.6).abs() < 1e-12);
    }

    #[test]
    fn quoted_names_and_exponents() {
        let n = names(&["% won", "x"]);
        let e = compile("\"% won\" * 1e2 + x", &n).unwrap();
        assert_eq!(e.eval(&[0.5f64, 1.0]), 51.0);
    }

    #[test]
    fn errors() {
        let n = names(&["a"]);
        assert!(compile("a + z", &n).is_err());
        assert!(compile("(a + 1", &n).is_err());
        assert!(compile("a a", &n).is_err());
        assert!(compile("", &n).is_err());
        assert!(compile("a $ 1", &n).is_err());
    }
}
