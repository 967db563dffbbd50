//! Arithmetic expressions over `x1..xn` and `t` used as boundary data.
//!
//! Supported: numbers, `pi`, `e`, `+ - * / ^`, parentheses and the
//! functions `exp sin cos sqrt abs` (one argument) and `min max` (two).

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var(usize),
    Time,
    Neg(Box<Node>),
    Bin(Op, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Func {
    Exp,
    Sin,
    Cos,
    Sqrt,
    Abs,
    Min,
    Max,
}

impl Func {
    fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }

    fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }
}

/// A parsed expression; keeps its source text for reports and sidecars.
#[derive(Debug, Clone)]
pub struct Expr {
    source: String,
    root: Node,
    max_var: usize,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.source == other.source
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl Serialize for Expr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.source)
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Expr::parse(&s).map_err(serde::de::Error::custom)
    }
}

impl Expr {
    pub fn parse(source: &str) -> Result<Self> {
        let tokens = tokenize(source)?;
        let mut p = Parser {
            tokens: &tokens,
            pos: 0,
            end: source.len(),
            max_var: 0,
        };
        let root = p.expr()?;
        if let Some(tok) = p.tokens.get(p.pos) {
            return Err(Error::Expression {
                position: tok.pos,
                message: format!("unexpected {:?}", tok.kind),
            });
        }
        Ok(Self {
            source: source.to_string(),
            root,
            max_var: p.max_var,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Highest `xk` index referenced (1-based, 0 if none).
    pub fn max_variable(&self) -> usize {
        self.max_var
    }

    pub fn eval(&self, x: &[f64], t: f64) -> Result<f64> {
        if self.max_var > x.len() {
            return Err(Error::DimensionMismatch {
                expected: self.max_var,
                got: x.len(),
            });
        }
        Ok(eval(&self.root, x, t))
    }
}

fn eval(node: &Node, x: &[f64], t: f64) -> f64 {
    match node {
        Node::Num(v) => *v,
        Node::Var(i) => x[*i],
        Node::Time => t,
        Node::Neg(a) => -eval(a, x, t),
        Node::Bin(op, a, b) => {
            let (a, b) = (eval(a, x, t), eval(b, x, t));
            match op {
                Op::Add => a + b,
                Op::Sub => a - b,
                Op::Mul => a * b,
                Op::Div => a / b,
                Op::Pow => a.powf(b),
            }
        }
        Node::Call(f, args) => {
            let a = eval(&args[0], x, t);
            match f {
                Func::Exp => a.exp(),
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Sqrt => a.sqrt(),
                Func::Abs => a.abs(),
                Func::Min => a.min(eval(&args[1], x, t)),
                Func::Max => a.max(eval(&args[1], x, t)),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokKind {
    Num(f64),
    Ident(String),
    Sym(char),
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokKind,
    pos: usize,
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            let v: f64 = text.parse().map_err(|_| Error::Expression {
                position: start,
                message: format!("malformed number '{text}'"),
            })?;
            out.push(Token {
                kind: TokKind::Num(v),
                pos: start,
            });
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token {
                kind: TokKind::Ident(src[start..i].to_string()),
                pos: start,
            });
        } else if "+-*/^(),".contains(c) {
            out.push(Token {
                kind: TokKind::Sym(c),
                pos: i,
            });
            i += 1;
        } else {
            return Err(Error::Expression {
                position: i,
                message: format!("unexpected character '{}'", src[i..].chars().next().unwrap()),
            });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    end: usize,
    max_var: usize,
}

impl Parser<'_> {
    fn peek_sym(&self) -> Option<char> {
        match self.tokens.get(self.pos) {
            Some(Token {
                kind: TokKind::Sym(c),
                ..
            }) => Some(*c),
            _ => None,
        }
    }

    fn here(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |t| t.pos)
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.peek_sym() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(Error::Expression {
                position: self.here(),
                message: format!("expected '{c}'"),
            })
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        while let Some(c @ ('+' | '-')) = self.peek_sym() {
            self.pos += 1;
            let rhs = self.term()?;
            let op = if c == '+' { Op::Add } else { Op::Sub };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while let Some(c @ ('*' | '/')) = self.peek_sym() {
            self.pos += 1;
            let rhs = self.unary()?;
            let op = if c == '*' { Op::Mul } else { Op::Div };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        match self.peek_sym() {
            Some('-') => {
                self.pos += 1;
                Ok(Node::Neg(Box::new(self.unary()?)))
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.primary()?;
        if self.peek_sym() == Some('^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Node::Bin(Op::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node> {
        let Some(tok) = self.tokens.get(self.pos) else {
            return Err(Error::Expression {
                position: self.end,
                message: "unexpected end of expression".into(),
            });
        };
        let pos = tok.pos;
        match &tok.kind {
            TokKind::Num(v) => {
                self.pos += 1;
                Ok(Node::Num(*v))
            }
            TokKind::Sym('(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(')')?;
                Ok(inner)
            }
            TokKind::Sym(c) => Err(Error::Expression {
                position: pos,
                message: format!("unexpected '{c}'"),
            }),
            TokKind::Ident(name) => {
                self.pos += 1;
                if let Some(f) = Func::lookup(name) {
                    self.expect('(')?;
                    let mut args = vec![self.expr()?];
                    while self.peek_sym() == Some(',') {
                        self.pos += 1;
                        args.push(self.expr()?);
                    }
                    self.expect(')')?;
                    if args.len() != f.arity() {
                        return Err(Error::Expression {
                            position: pos,
                            message: format!(
                                "{name} takes {} argument(s), got {}",
                                f.arity(),
                                args.len()
                            ),
                        });
                    }
                    return Ok(Node::Call(f, args));
                }
                match name.as_str() {
                    "t" => Ok(Node::Time),
                    "pi" => Ok(Node::Num(std::f64::consts::PI)),
                    "e" => Ok(Node::Num(std::f64::consts::E)),
                    _ => {
                        let idx = name
                            .strip_prefix('x')
                            .and_then(|d| d.parse::<usize>().ok())
                            .filter(|&k| k >= 1);
                        match idx {
                            Some(k) => {
                                self.max_var = self.max_var.max(k);
                                Ok(Node::Var(k - 1))
                            }
                            None => Err(Error::Expression {
                                position: pos,
                                message: format!("unknown identifier '{name}'"),
                            }),
                        }
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(src: &str, x: &[f64], t: f64) -> f64 {
        Expr::parse(src).unwrap().eval(x, t).unwrap()
    }

    #[test]
    fn precedence_and_functions() {
        assert_eq!(ev("1 + 2 * 3", &[], 0.0), 7.0);
        assert_eq!(ev("-2^2", &[], 0.0), -4.0);
        assert_eq!(ev("2^3^2", &[], 0.0), 512.0);
        assert_eq!(ev("(1 + 2) * 3", &[], 0.0), 9.0);
        assert_eq!(ev("max(x1, x2) - min(x1, x2)", &[0.25, 1.0], 0.0), 0.75);
        assert_eq!(ev("abs(-3) + sqrt(16)", &[], 0.0), 7.0);
        assert_eq!(ev("exp(0.5*t + x1)", &[0.0, 0.0], 0.0), 1.0);
        assert!((ev("sin(pi/2) + cos(0)", &[], 0.0) - 2.0).abs() < 1e-15);
        assert_eq!(ev("1.5e-1 * 2", &[], 0.0), 0.3);
        assert_eq!(ev("x1 - x2 * t", &[1.0, 2.0], 3.0), -5.0);
    }

    #[test]
    fn errors_carry_positions() {
        let err = Expr::parse("1 + * 2").unwrap_err();
        assert_eq!(
            err,
            Error::Expression {
                position: 4,
                message: "unexpected '*'".into()
            }
        );
        assert!(matches!(Expr::parse("exp(x1"), Err(Error::Expression { position: 6, .. })));
        assert!(matches!(Expr::parse("y + 1"), Err(Error::Expression { position: 0, .. })));
        assert!(matches!(Expr::parse("1 $ 2"), Err(Error::Expression { position: 2, .. })));
        assert!(matches!(Expr::parse("min(1)"), Err(Error::Expression { position: 0, .. })));
        assert!(matches!(Expr::parse("1 2"), Err(Error::Expression { position: 2, .. })));
        assert!(matches!(Expr::parse(""), Err(Error::Expression { position: 0, .. })));
    }

    #[test]
    fn dimension_checked_at_eval() {
        let e = Expr::parse("x3 + 1").unwrap();
        assert_eq!(e.max_variable(), 3);
        assert!(e.eval(&[0.0, 0.0], 0.0).is_err());
    }
}
