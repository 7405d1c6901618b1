//! A small expression language for state-dependent parameters.
//!
//! Parameters such as `γ(x)`, `m(x)`, drift and diffusion entries, σ(x) and
//! user densities are written as plain strings in JSON configs:
//!
//! ```text
//! 0.6 + 0.2*sin(x)
//! 1 / (1 + r^2)
//! exp(-y^2) * abs(y)^(-1.5)
//! ```
//!
//! Identifiers:
//!
//! | name              | meaning                                   |
//! |-------------------|-------------------------------------------|
//! | `x`, `y`          | first coordinate of the evaluation point  |
//! | `x1`..`x9`, `y1`..| coordinates (1-based)                     |
//! | `r`               | Euclidean norm of the evaluation point    |
//! | `k`               | `|ξ|` (custom symbols only)               |
//! | `xi`, `xi1`..     | frequency coordinates (custom symbols)    |
//! | `pi`, `e`         | constants                                 |
//!
//! Functions: `sin cos tan exp ln log sqrt abs atan tanh sinh cosh step`
//! (`step(a)` is 1 for `a > 0`, else 0), and the two-argument `min max pow`. Operators `+ - * / ^` with the usual
//! precedence; `^` is right associative.

use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Const(f64),
    Coord(usize),
    Norm,
    FreqNorm,
    Freq(usize),
    Neg(Box<Node>),
    Bin(Op, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Abs,
    Atan,
    Tanh,
    Sinh,
    Cosh,
    Step,
    Min,
    Max,
    Pow,
}

impl Func {
    fn lookup(name: &str) -> Option<(Func, usize)> {
        let f = match name {
            "sin" => (Func::Sin, 1),
            "cos" => (Func::Cos, 1),
            "tan" => (Func::Tan, 1),
            "exp" => (Func::Exp, 1),
            "ln" | "log" => (Func::Ln, 1),
            "sqrt" => (Func::Sqrt, 1),
            "abs" => (Func::Abs, 1),
            "atan" => (Func::Atan, 1),
            "tanh" => (Func::Tanh, 1),
            "sinh" => (Func::Sinh, 1),
            "cosh" => (Func::Cosh, 1),
            "step" => (Func::Step, 1),
            "min" => (Func::Min, 2),
            "max" => (Func::Max, 2),
            "pow" => (Func::Pow, 2),
            _ => return None,
        };
        Some(f)
    }
}

/// A parsed expression together with its source text.
#[derive(Clone)]
pub struct Expr {
    src: String,
    root: Node,
    uses_state: bool,
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({:?})", self.src)
    }
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Self> {
        let tokens = lex(src)?;
        let mut p = Parser { tokens, pos: 0 };
        let root = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Expr(format!(
                "unexpected trailing input in {src:?} at token {}",
                p.pos
            )));
        }
        let uses_state = root.uses_state();
        Ok(Expr {
            src: src.to_string(),
            root,
            uses_state,
        })
    }

    pub fn constant(v: f64) -> Self {
        Expr {
            src: format!("{v}"),
            root: Node::Const(v),
            uses_state: false,
        }
    }

    pub fn source(&self) -> &str {
        &self.src
    }

    /// `Some(v)` when the expression does not depend on any variable.
    pub fn as_constant(&self) -> Option<f64> {
        if self.uses_state {
            None
        } else {
            Some(self.root.eval(&[], &[]))
        }
    }

    pub fn is_constant(&self) -> bool {
        !self.uses_state
    }

    /// Evaluates at a point (state or jump location).
    pub fn eval(&self, point: &[f64]) -> f64 {
        self.root.eval(point, &[])
    }

    /// Evaluates with an additional frequency vector bound to `k` and `xi*`.
    pub fn eval_with_freq(&self, point: &[f64], freq: &[f64]) -> f64 {
        self.root.eval(point, freq)
    }
}

impl Node {
    fn uses_state(&self) -> bool {
        match self {
            Node::Const(_) => false,
            Node::Coord(_) | Node::Norm | Node::FreqNorm | Node::Freq(_) => true,
            Node::Neg(a) => a.uses_state(),
            Node::Bin(_, a, b) => a.uses_state() || b.uses_state(),
            Node::Call(_, args) => args.iter().any(Node::uses_state),
        }
    }

    fn eval(&self, p: &[f64], freq: &[f64]) -> f64 {
        match self {
            Node::Const(v) => *v,
            Node::Coord(i) => p.get(*i).copied().unwrap_or(f64::NAN),
            Node::Norm => norm(p),
            Node::FreqNorm => norm(freq),
            Node::Freq(i) => freq.get(*i).copied().unwrap_or(f64::NAN),
            Node::Neg(a) => -a.eval(p, freq),
            Node::Bin(op, a, b) => {
                let (a, b) = (a.eval(p, freq), b.eval(p, freq));
                match op {
                    Op::Add => a + b,
                    Op::Sub => a - b,
                    Op::Mul => a * b,
                    Op::Div => a / b,
                    Op::Pow => a.powf(b),
                }
            }
            Node::Call(f, args) => {
                let a = args[0].eval(p, freq);
                match f {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Tan => a.tan(),
                    Func::Exp => a.exp(),
                    Func::Ln => a.ln(),
                    Func::Sqrt => a.sqrt(),
                    Func::Abs => a.abs(),
                    Func::Atan => a.atan(),
                    Func::Tanh => a.tanh(),
                    Func::Sinh => a.sinh(),
                    Func::Cosh => a.cosh(),
                    Func::Step => {
                        if a > 0.0 {
                            1.0
                        } else {
                            0.0
                        }
                    }
                    Func::Min => a.min(args[1].eval(p, freq)),
                    Func::Max => a.max(args[1].eval(p, freq)),
                    Func::Pow => a.powf(args[1].eval(p, freq)),
                }
            }
        }
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0].abs(),
        _ => v.iter().map(|a| a * a).sum::<f64>().sqrt(),
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
}

fn lex(src: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            // exponent part, e.g. 1e-3
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let save = i;
                i += 1;
                if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
                    i += 1;
                }
                if i < chars.len() && chars[i].is_ascii_digit() {
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                } else {
                    i = save;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v = text
                .parse::<f64>()
                .map_err(|_| Error::Expr(format!("bad number {text:?}")))?;
            out.push(Tok::Num(v));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^(),".contains(c) {
            out.push(Tok::Sym(c));
            i += 1;
        } else {
            return Err(Error::Expr(format!("unexpected character {c:?} in {src:?}")));
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek_sym(&self, c: char) -> bool {
        matches!(self.tokens.get(self.pos), Some(Tok::Sym(s)) if *s == c)
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.peek_sym(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(Error::Expr(format!("expected {c:?} at token {}", self.pos)))
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.peek_sym('+') {
                Op::Add
            } else if self.peek_sym('-') {
                Op::Sub
            } else {
                break;
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.peek_sym('*') {
                Op::Mul
            } else if self.peek_sym('/') {
                Op::Div
            } else {
                break;
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        if self.peek_sym('-') {
            self.pos += 1;
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.peek_sym('+') {
            self.pos += 1;
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.peek_sym('^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Node::Bin(Op::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.tokens.get(self.pos).cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Node::Const(v))
            }
            Some(Tok::Sym('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if self.peek_sym('(') {
                    let (func, arity) = Func::lookup(&name)
                        .ok_or_else(|| Error::Expr(format!("unknown function {name:?}")))?;
                    self.pos += 1;
                    let mut args = vec![self.expr()?];
                    while self.peek_sym(',') {
                        self.pos += 1;
                        args.push(self.expr()?);
                    }
                    self.expect(')')?;
                    if args.len() != arity {
                        return Err(Error::Expr(format!(
                            "{name} takes {arity} argument(s), got {}",
                            args.len()
                        )));
                    }
                    return Ok(Node::Call(func, args));
                }
                variable(&name)
            }
            other => Err(Error::Expr(format!("unexpected token {other:?}"))),
        }
    }
}

fn variable(name: &str) -> Result<Node> {
    let indexed = |prefix: &str| -> Option<usize> {
        let rest = name.strip_prefix(prefix)?;
        let i: usize = rest.parse().ok()?;
        (1..=9).contains(&i).then(|| i - 1)
    };
    let node = match name {
        "x" | "y" => Node::Coord(0),
        "r" => Node::Norm,
        "k" => Node::FreqNorm,
        "xi" => Node::Freq(0),
        "pi" => Node::Const(std::f64::consts::PI),
        "e" => Node::Const(std::f64::consts::E),
        _ => {
            if let Some(i) = indexed("xi") {
                Node::Freq(i)
            } else if let Some(i) = indexed("x").or_else(|| indexed("y")) {
                Node::Coord(i)
            } else {
                return Err(Error::Expr(format!("unknown identifier {name:?}")));
            }
        }
    };
    Ok(node)
}

impl Serialize for Expr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.as_constant() {
            Some(v) if self.src.parse::<f64>().is_ok() => s.serialize_f64(v),
            _ => s.serialize_str(&self.src),
        }
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Expr;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or an expression string")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Expr, E> {
                Ok(Expr::constant(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Expr, E> {
                Ok(Expr::constant(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Expr, E> {
                Ok(Expr::constant(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Expr, E> {
                Expr::parse(v).map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

impl From<f64> for Expr {
    fn from(v: f64) -> Self {
        Expr::constant(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_and_associativity() {
        let e = Expr::parse("1 + 2*3^2^0.5 - 4/2").unwrap();
        let want = 1.0 + 2.0 * 3f64.powf(2f64.powf(0.5)) - 2.0;
        assert!((e.eval(&[]) - want).abs() < 1e-12);
        assert_eq!(Expr::parse("-2^2").unwrap().eval(&[]), -4.0);
        assert_eq!(Expr::parse("1/2").unwrap().eval(&[]), 0.5);
    }

    #[test]
    fn variables_and_functions() {
        let e = Expr::parse("0.6 + 0.2*sin(x)").unwrap();
        assert!((e.eval(&[1.0]) - (0.6 + 0.2 * 1f64.sin())).abs() < 1e-15);
        assert!(!e.is_constant());
        let r = Expr::parse("1/(1+r^2)").unwrap();
        assert!((r.eval(&[3.0, 4.0]) - 1.0 / 26.0).abs() < 1e-15);
        let two = Expr::parse("max(x1, x2) + pow(2, 3)").unwrap();
        assert_eq!(two.eval(&[1.0, 5.0]), 13.0);
        let f = Expr::parse("k^0.5 + xi2").unwrap();
        assert!((f.eval_with_freq(&[], &[3.0, 4.0]) - (5f64.sqrt() + 4.0)).abs() < 1e-15);
        assert_eq!(Expr::parse("1e-3*2").unwrap().eval(&[]), 2e-3);
    }

    #[test]
    fn rejects_garbage() {
        assert!(Expr::parse("sin(").is_err());
        assert!(Expr::parse("foo(1)").is_err());
        assert!(Expr::parse("z + 1").is_err());
        assert!(Expr::parse("min(1)").is_err());
        assert!(Expr::parse("1 2").is_err());
    }

    #[test]
    fn serde_round_trip() {
        let e: Expr = serde_json::from_str("\"0.5 + x\"").unwrap();
        assert_eq!(serde_json::to_string(&e).unwrap(), "\"0.5 + x\"");
        let c: Expr = serde_json::from_str("1.5").unwrap();
        assert_eq!(c.as_constant(), Some(1.5));
        assert_eq!(serde_json::to_string(&c).unwrap(), "1.5");
    }
}
