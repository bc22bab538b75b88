//! Integer-valued expressions in `n` and an inner index, used by sequence
//! specifications.
//!
//! Grammar (whitespace insignificant):
//!
//! ```text
//! sum     := product (("+" | "-") product)*
//! product := unary (("*" | "/") unary)*
//! unary   := "-" unary | power
//! power   := atom ("^" unary)?
//! atom    := uint | ident | func "(" sum ")" | "(" sum ")"
//! func    := floor | ceil | log2 | sqrt
//! ```
//!
//! Arithmetic is exact on rationals. `sqrt` and `log2` stay exact when the
//! result is rational and fall back to `f64` otherwise. Instantiation rounds
//! the final value up (`ceil`); an inexact value within `1e-9` of an integer
//! is snapped to it first so `sqrt(2)^2` does not become 3.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Floor,
    Ceil,
    Log2,
    Sqrt,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Floor => "floor",
            Func::Ceil => "ceil",
            Func::Log2 => "log2",
            Func::Sqrt => "sqrt",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Int(BigInt),
    Var(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Int(v) => write!(f, "{v}"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "({a} ^ {b})"),
            Expr::Call(func, e) => write!(f, "{}({e})", func.name()),
        }
    }
}

/// Value of an expression: exact where possible.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Exact(Rational),
    Approx(f64),
}

impl Value {
    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Value::Approx(x) => *x,
        }
    }

    fn int(v: i64) -> Value {
        Value::Exact(Rational::from_integer(v.into()))
    }

    /// Smallest integer not below the value.
    pub fn ceil(&self) -> Result<BigInt> {
        match self {
            Value::Exact(r) => Ok(r.ceil().to_integer()),
            Value::Approx(x) => round_approx(*x, f64::ceil),
        }
    }

    pub fn floor(&self) -> Result<BigInt> {
        match self {
            Value::Exact(r) => Ok(r.floor().to_integer()),
            Value::Approx(x) => round_approx(*x, f64::floor),
        }
    }
}

fn round_approx(x: f64, f: fn(f64) -> f64) -> Result<BigInt> {
    if !x.is_finite() {
        return Err(Error::InvalidArgument(format!("expression value {x} is not finite")));
    }
    let near = x.round();
    let y = if (x - near).abs() < 1e-9 { near } else { f(x) };
    num_traits::FromPrimitive::from_f64(y).ok_or_else(|| Error::InvalidArgument(format!("cannot round {x} to an integer")))
}

/// Parses `text`, accepting only the variable names in `vars`.
pub fn parse_expr(text: &str, vars: &[&str]) -> Result<Expr> {
    let mut p = Parser { src: text.as_bytes(), pos: 0, vars };
    let e = p.sum()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    vars: &'a [&'a str],
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Syntax { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut lhs = self.product()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.product()?));
            } else if self.eat(b'-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.product()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn product(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(b'/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        let base = self.atom()?;
        if self.eat(b'^') {
            return Ok(Expr::Pow(Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let digits = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                Ok(Expr::Int(digits.parse().unwrap()))
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                let func = match name {
                    "floor" => Some(Func::Floor),
                    "ceil" => Some(Func::Ceil),
                    "log2" => Some(Func::Log2),
                    "sqrt" => Some(Func::Sqrt),
                    _ => None,
                };
                if let Some(func) = func {
                    if !self.eat(b'(') {
                        return Err(self.err(&format!("expected `(` after {name}")));
                    }
                    let arg = self.sum()?;
                    if !self.eat(b')') {
                        return Err(self.err("expected `)`"));
                    }
                    return Ok(Expr::Call(func, Box::new(arg)));
                }
                if !self.vars.contains(&name) {
                    self.pos = start;
                    return Err(self.err(&format!("unknown variable `{name}`")));
                }
                Ok(Expr::Var(name.to_string()))
            }
            Some(b'(') => {
                self.pos += 1;
                let e = self.sum()?;
                if !self.eat(b')') {
                    return Err(self.err("expected `)`"));
                }
                Ok(e)
            }
            Some(_) => Err(self.err("expected a number, variable, function or `(`")),
            None => Err(self.err("unexpected end of expression")),
        }
    }
}

impl Expr {
    pub fn eval(&self, env: &HashMap<&str, i64>) -> Result<Value> {
        use Value::*;
        let arith = |a: Value, b: Value, op: fn(Rational, Rational) -> Rational, fop: fn(f64, f64) -> f64| match (a, b) {
            (Exact(x), Exact(y)) => Exact(op(x, y)),
            (a, b) => Approx(fop(a.to_f64(), b.to_f64())),
        };
        Ok(match self {
            Expr::Int(v) => Exact(Rational::from_integer(v.clone())),
            Expr::Var(name) => Value::int(
                *env.get(name.as_str()).ok_or_else(|| Error::InvalidArgument(format!("variable `{name}` is unbound")))?,
            ),
            Expr::Neg(e) => match e.eval(env)? {
                Exact(r) => Exact(-r),
                Approx(x) => Approx(-x),
            },
            Expr::Add(a, b) => arith(a.eval(env)?, b.eval(env)?, |x, y| x + y, |x, y| x + y),
            Expr::Sub(a, b) => arith(a.eval(env)?, b.eval(env)?, |x, y| x - y, |x, y| x - y),
            Expr::Mul(a, b) => arith(a.eval(env)?, b.eval(env)?, |x, y| x * y, |x, y| x * y),
            Expr::Div(a, b) => {
                let d = b.eval(env)?;
                if d.to_f64() == 0.0 {
                    return Err(Error::InvalidArgument(format!("division by zero in `{self}`")));
                }
                arith(a.eval(env)?, d, |x, y| x / y, |x, y| x / y)
            }
            Expr::Pow(a, b) => {
                let base = a.eval(env)?;
                let exp = match b.eval(env)? {
                    Exact(r) if r.is_integer() => r.to_integer(),
                    _ => return Err(Error::InvalidArgument(format!("exponent in `{self}` is not an integer"))),
                };
                let e = exp
                    .to_i32()
                    .filter(|e| e.abs() <= 4096)
                    .ok_or_else(|| Error::InvalidArgument(format!("exponent {exp} too large")))?;
                match base {
                    Exact(r) if r.is_zero() && e < 0 => {
                        return Err(Error::InvalidArgument(format!("zero to a negative power in `{self}`")))
                    }
                    Exact(r) => Exact(num_traits::pow::Pow::pow(&r, e)),
                    Approx(x) => Approx(x.powi(e)),
                }
            }
            Expr::Call(func, arg) => {
                let v = arg.eval(env)?;
                match func {
                    Func::Floor => Exact(Rational::from_integer(v.floor()?)),
                    Func::Ceil => Exact(Rational::from_integer(v.ceil()?)),
                    Func::Sqrt => sqrt(v, self)?,
                    Func::Log2 => log2(v, self)?,
                }
            }
        })
    }

    /// Evaluates and rounds up to an integer.
    pub fn eval_ceil(&self, env: &HashMap<&str, i64>) -> Result<BigInt> {
        self.eval(env)?.ceil()
    }
}

fn exact_sqrt(v: &BigInt) -> Option<BigInt> {
    let r = v.sqrt();
    (&r * &r == *v).then_some(r)
}

fn sqrt(v: Value, e: &Expr) -> Result<Value> {
    if v.to_f64() < 0.0 {
        return Err(Error::InvalidArgument(format!("square root of a negative value in `{e}`")));
    }
    if let Value::Exact(r) = &v {
        if let (Some(p), Some(q)) = (exact_sqrt(r.numer()), exact_sqrt(r.denom())) {
            return Ok(Value::Exact(Rational::new(p, q)));
        }
    }
    Ok(Value::Approx(v.to_f64().sqrt()))
}

/// Exact when the argument is a power of two (possibly negative power).
fn log2(v: Value, e: &Expr) -> Result<Value> {
    if v.to_f64() <= 0.0 {
        return Err(Error::InvalidArgument(format!("log2 of a non-positive value in `{e}`")));
    }
    if let Value::Exact(r) = &v {
        let pow2 = |x: &BigInt| -> Option<i64> {
            let bits = x.bits();
            (bits > 0 && *x == BigInt::one() << (bits - 1)).then(|| bits as i64 - 1)
        };
        if let (Some(a), Some(b)) = (pow2(r.numer()), pow2(r.denom())) {
            return Ok(Value::int(a - b));
        }
        if r.is_positive() {
            // ln of huge rationals: go through bit lengths to avoid overflow
            let approx = r.numer().bits() as f64 - r.denom().bits() as f64;
            if approx.abs() > 1000.0 {
                return Ok(Value::Approx(approx));
            }
        }
    }
    Ok(Value::Approx(v.to_f64().log2()))
}
