//! A small whitelisted expression grammar for scenario inputs: constants,
//! the variables `r` and `theta`, `pi`, arithmetic, powers and a fixed set
//! of one-argument functions (trig, exp/log, sqrt, abs).
//!
//! Expressions keep their source text, so they serialize as plain strings
//! and re-parse on load; evaluation is a pure function of `(r, theta)`.

use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    R,
    Theta,
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Neg(Box<Node>),
    Fn1(Func, Box<Node>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Abs,
}

impl Node {
    fn eval(&self, r: f64, theta: f64) -> f64 {
        match self {
            Node::Num(v) => *v,
            Node::R => r,
            Node::Theta => theta,
            Node::Add(a, b) => a.eval(r, theta) + b.eval(r, theta),
            Node::Sub(a, b) => a.eval(r, theta) - b.eval(r, theta),
            Node::Mul(a, b) => a.eval(r, theta) * b.eval(r, theta),
            Node::Div(a, b) => a.eval(r, theta) / b.eval(r, theta),
            Node::Pow(a, b) => a.eval(r, theta).powf(b.eval(r, theta)),
            Node::Neg(a) => -a.eval(r, theta),
            Node::Fn1(f, a) => {
                let x = a.eval(r, theta);
                match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Tan => x.tan(),
                    Func::Exp => x.exp(),
                    Func::Ln => x.ln(),
                    Func::Sqrt => x.sqrt(),
                    Func::Abs => x.abs(),
                }
            }
        }
    }
}

/// A parsed expression in the whitelisted grammar.
#[derive(Debug, Clone)]
pub struct Expr {
    src: String,
    ast: Node,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.src == other.src
    }
}

impl Expr {
    /// Parse `src`; errors carry the 1-based column of the offending token.
    pub fn parse(src: &str) -> Result<Expr> {
        let mut p = Parser {
            chars: src.as_bytes(),
            pos: 0,
            src,
        };
        let ast = p.expr()?;
        p.skip_ws();
        if p.pos < p.chars.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(Expr {
            src: src.trim().to_string(),
            ast,
        })
    }

    /// Parse a constant expression (no `r`/`theta`) and evaluate it.
    pub fn parse_const(src: &str) -> Result<f64> {
        let e = Expr::parse(src)?;
        if e.uses_variables() {
            return Err(Error::Parse {
                line: 1,
                col: 1,
                msg: format!("expected a constant expression, got '{src}'"),
            });
        }
        Ok(e.eval(f64::NAN, f64::NAN))
    }

    pub fn eval(&self, r: f64, theta: f64) -> f64 {
        self.ast.eval(r, theta)
    }

    pub fn src(&self) -> &str {
        &self.src
    }

    pub fn uses_variables(&self) -> bool {
        fn walk(n: &Node) -> bool {
            match n {
                Node::R | Node::Theta => true,
                Node::Num(_) => false,
                Node::Add(a, b)
                | Node::Sub(a, b)
                | Node::Mul(a, b)
                | Node::Div(a, b)
                | Node::Pow(a, b) => walk(a) || walk(b),
                Node::Neg(a) | Node::Fn1(_, a) => walk(a),
            }
        }
        walk(&self.ast)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.src)
    }
}

impl Serialize for Expr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.src)
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Expr::parse(&s).map_err(|e| D::Error::custom(e.to_string()))
    }
}

struct Parser<'a> {
    chars: &'a [u8],
    pos: usize,
    src: &'a str,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: &str) -> Error {
        Error::Parse {
            line: 1,
            col: self.pos + 1,
            msg: format!("{msg} in '{}'", self.src),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Node> {
        let mut node = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    node = Node::Add(Box::new(node), Box::new(self.term()?));
                }
                Some(b'-') => {
                    self.pos += 1;
                    node = Node::Sub(Box::new(node), Box::new(self.term()?));
                }
                _ => return Ok(node),
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut node = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    node = Node::Mul(Box::new(node), Box::new(self.factor()?));
                }
                Some(b'/') => {
                    self.pos += 1;
                    node = Node::Div(Box::new(node), Box::new(self.factor()?));
                }
                _ => return Ok(node),
            }
        }
    }

    fn factor(&mut self) -> Result<Node> {
        // Unary minus binds looser than '^': -r^2 is -(r^2).
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Node::Neg(Box::new(self.factor()?)));
        }
        let base = self.primary()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exp = self.factor()?; // right associative
            return Ok(Node::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            _ => Err(self.err("expected a number, name or '('")),
        }
    }

    fn number(&mut self) -> Result<Node> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.chars.len() {
            let c = self.chars[self.pos];
            if c.is_ascii_digit() || c == b'.' {
                self.pos += 1;
            } else if (c == b'e' || c == b'E')
                && self.pos > start
                && self
                    .chars
                    .get(self.pos + 1)
                    .is_some_and(|&n| n.is_ascii_digit() || n == b'+' || n == b'-')
            {
                self.pos += 2;
            } else {
                break;
            }
        }
        let text = &self.src[start..self.pos];
        text.parse::<f64>()
            .map(Node::Num)
            .map_err(|_| self.err("malformed number"))
    }

    fn ident(&mut self) -> Result<Node> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let name = &self.src[start..self.pos];
        let func = match name {
            "r" => return Ok(Node::R),
            "theta" => return Ok(Node::Theta),
            "pi" => return Ok(Node::Num(std::f64::consts::PI)),
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "ln" | "log" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return Err(self.err(&format!("unknown name '{name}'"))),
        };
        if self.peek() != Some(b'(') {
            return Err(self.err(&format!("function '{name}' needs '('")));
        }
        self.pos += 1;
        let arg = self.expr()?;
        if self.peek() != Some(b')') {
            return Err(self.err("expected ')'"));
        }
        self.pos += 1;
        Ok(Node::Fn1(func, Box::new(arg)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn parses_and_evaluates() {
        let e = Expr::parse("r^2 * sin(pi*theta/2) + 1").unwrap();
        assert!((e.eval(3.0, 1.0) - 10.0).abs() < 1e-12);
        let e = Expr::parse("1 + 0.1*cos(theta)").unwrap();
        assert!((e.eval(1.0, 0.0) - 1.1).abs() < 1e-15);
        let e = Expr::parse("-r^-2").unwrap();
        assert!((e.eval(2.0, 0.0) + 0.25).abs() < 1e-15);
        assert!((Expr::parse("2^3^2").unwrap().eval(0.0, 0.0) - 512.0).abs() < 1e-12);
        assert!((Expr::parse("1e-3 + 2E+1").unwrap().eval(0.0, 0.0) - 20.001).abs() < 1e-12);
        assert!((Expr::parse_const("pi/4").unwrap() - PI / 4.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Expr::parse("x + 1").is_err());
        assert!(Expr::parse("sin").is_err());
        assert!(Expr::parse("(1 + 2").is_err());
        assert!(Expr::parse("1 2").is_err());
        assert!(Expr::parse_const("r + 1").is_err());
        // the column lands on the offending token
        match Expr::parse("1 + foo(2)") {
            Err(Error::Parse { col, .. }) => assert!(col >= 5),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn serde_roundtrip_keeps_source() {
        let e = Expr::parse("r * cos(theta)").unwrap();
        let json = serde_json::to_string(&e).unwrap();
        assert_eq!(json, "\"r * cos(theta)\"");
        let back: Expr = serde_json::from_str(&json).unwrap();
        assert_eq!(back, e);
        assert_eq!(back.eval(2.0, 0.0), 2.0);
    }
}
