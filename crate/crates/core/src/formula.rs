//! A small language for complex trigonometric polynomials in `t`, such as
//! `1/2 + i sin t`, `0.3 cos(2t) - i`, `exp(3it)` or `i(1 - cos t)^2`.
//!
//! Grammar (implicit multiplication binds like `*`):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/')? unary)*
//! unary  := ('+' | '-') unary | power
//! power  := atom ('^' integer)?
//! atom   := number | 'i' | 'pi' | 't' | '(' expr ')' | func arg
//! func   := 'sin' | 'cos' | 'exp'
//! arg    := '(' expr ')' | power
//! ```
//!
//! `t` may only appear linearly inside a function argument: `sin`/`cos` take
//! `k t + b` with integer `k`, `exp` takes `i k t + b`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{FormulaError, TorusError};
use crate::torus::TorusFunction;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// `Σ_k c_k e^{ikt}` with finitely many nonzero terms.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrigPoly {
    terms: BTreeMap<i64, Complex64>,
}

impl TrigPoly {
    pub fn constant(z: Complex64) -> Self {
        let mut p = Self::default();
        p.add_term(0, z);
        p
    }

    fn add_term(&mut self, k: i64, z: Complex64) {
        let e = self.terms.entry(k).or_insert(Complex64::new(0.0, 0.0));
        *e += z;
        if *e == Complex64::new(0.0, 0.0) {
            self.terms.remove(&k);
        }
    }

    pub fn terms(&self) -> Vec<(i64, Complex64)> {
        self.terms.iter().map(|(k, v)| (*k, *v)).collect()
    }

    pub fn max_frequency(&self) -> u64 {
        self.terms.keys().map(|k| k.unsigned_abs()).max().unwrap_or(0)
    }

    fn as_constant(&self) -> Option<Complex64> {
        match self.terms.len() {
            0 => Some(Complex64::new(0.0, 0.0)),
            1 => self.terms.get(&0).copied(),
            _ => None,
        }
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        self.terms.iter().map(|(k, c)| c * (I * (*k as f64) * t).exp()).sum()
    }

    /// Samples on an `n`-point grid; fails when a frequency reaches `n/2`.
    pub fn to_torus(&self, n: usize) -> Result<TorusFunction, TorusError> {
        TorusFunction::from_trig(n, &self.terms())
    }

    fn add(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (k, v) in &o.terms {
            out.add_term(*k, *v);
        }
        out
    }

    fn scale(&self, z: Complex64) -> Self {
        let mut out = Self::default();
        for (k, v) in &self.terms {
            out.add_term(*k, v * z);
        }
        out
    }

    fn mul(&self, o: &Self) -> Self {
        let mut out = Self::default();
        for (a, x) in &self.terms {
            for (b, y) in &o.terms {
                out.add_term(a + b, x * y);
            }
        }
        out
    }
}

/// Intermediate values: trig polynomials, or `a t + b` inside an argument.
#[derive(Debug, Clone)]
enum Value {
    Poly(TrigPoly),
    Linear { a: Complex64, b: Complex64 },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    len: usize,
}

fn err(position: usize, message: impl Into<String>) -> FormulaError {
    FormulaError { position, message: message.into() }
}

fn tokenize(s: &str) -> Result<Vec<(usize, Tok)>, FormulaError> {
    let b = s.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < b.len() && ((b[i] as char).is_ascii_digit() || b[i] == b'.') {
                i += 1;
            }
            if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
                let mut k = i + 1;
                if k < b.len() && (b[k] == b'+' || b[k] == b'-') {
                    k += 1;
                }
                if k < b.len() && (b[k] as char).is_ascii_digit() {
                    i = k;
                    while i < b.len() && (b[i] as char).is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let v: f64 = s[start..i].parse().map_err(|_| err(start, format!("bad number '{}'", &s[start..i])))?;
            out.push((start, Tok::Num(v)));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < b.len() && (b[i] as char).is_ascii_alphabetic() {
                i += 1;
            }
            // split runs such as "it" or "pit" into known identifiers
            let mut word = &s[start..i];
            let mut at = start;
            while !word.is_empty() {
                let known = ["sin", "cos", "exp", "pi", "i", "t"].iter().find(|k| word.starts_with(**k));
                let Some(k) = known else { return Err(err(at, format!("unknown identifier '{word}'"))) };
                out.push((at, Tok::Ident(k.to_string())));
                word = &word[k.len()..];
                at += k.len();
            }
        } else if "+-*/^()".contains(c) {
            out.push((i, Tok::Op(c)));
            i += 1;
        } else {
            return Err(err(i, format!("unexpected character '{c}'")));
        }
    }
    Ok(out)
}

fn lin_const(v: &Value) -> Option<Complex64> {
    match v {
        Value::Poly(p) => p.as_constant(),
        Value::Linear { .. } => None,
    }
}

fn as_linear(v: Value) -> Option<(Complex64, Complex64)> {
    match v {
        Value::Linear { a, b } => Some((a, b)),
        Value::Poly(p) => p.as_constant().map(|b| (Complex64::new(0.0, 0.0), b)),
    }
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.0).unwrap_or(self.len)
    }

    fn expr(&mut self) -> Result<Value, FormulaError> {
        let mut acc = self.term()?;
        while let Some(Tok::Op(op @ ('+' | '-'))) = self.peek().cloned() {
            let at = self.here();
            self.pos += 1;
            let rhs = self.term()?;
            let rhs = if op == '-' { self.neg(rhs) } else { rhs };
            acc = self.add(acc, rhs, at)?;
        }
        Ok(acc)
    }

    fn starts_factor(&self) -> bool {
        matches!(self.peek(), Some(Tok::Num(_)) | Some(Tok::Ident(_)) | Some(Tok::Op('(')))
    }

    fn term(&mut self) -> Result<Value, FormulaError> {
        let mut acc = self.unary()?;
        loop {
            let at = self.here();
            match self.peek() {
                Some(Tok::Op('*')) => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    acc = self.mul(acc, rhs, at)?;
                }
                Some(Tok::Op('/')) => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    let d = lin_const(&rhs).ok_or_else(|| err(at, "division only by constants"))?;
                    if d == Complex64::new(0.0, 0.0) {
                        return Err(err(at, "division by zero"));
                    }
                    acc = self.mul(acc, Value::Poly(TrigPoly::constant(1.0 / d)), at)?;
                }
                _ if self.starts_factor() => {
                    let rhs = self.power()?;
                    acc = self.mul(acc, rhs, at)?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Value, FormulaError> {
        match self.peek() {
            Some(Tok::Op('-')) => {
                self.pos += 1;
                let v = self.unary()?;
                Ok(self.neg(v))
            }
            Some(Tok::Op('+')) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Value, FormulaError> {
        let base = self.atom()?;
        if self.peek() != Some(&Tok::Op('^')) {
            return Ok(base);
        }
        let at = self.here();
        self.pos += 1;
        let neg = if self.peek() == Some(&Tok::Op('-')) {
            self.pos += 1;
            true
        } else {
            false
        };
        let e = match self.peek() {
            Some(Tok::Num(v)) if v.fract() == 0.0 && *v <= 64.0 => *v as u32,
            _ => return Err(err(self.here(), "exponent must be an integer between 0 and 64")),
        };
        self.pos += 1;
        let Value::Poly(p) = base else { return Err(err(at, "t may only appear inside sin, cos or exp")) };
        if neg {
            let c = p.as_constant().ok_or_else(|| err(at, "negative powers only of constants"))?;
            return Ok(Value::Poly(TrigPoly::constant(c.powi(-(e as i32)))));
        }
        let mut out = TrigPoly::constant(Complex64::new(1.0, 0.0));
        for _ in 0..e {
            out = out.mul(&p);
        }
        Ok(Value::Poly(out))
    }

    fn atom(&mut self) -> Result<Value, FormulaError> {
        let at = self.here();
        let tok = self.peek().cloned().ok_or_else(|| err(at, "unexpected end of input"))?;
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(Value::Poly(TrigPoly::constant(Complex64::new(v, 0.0)))),
            Tok::Op('(') => {
                let v = self.expr()?;
                if self.peek() != Some(&Tok::Op(')')) {
                    return Err(err(self.here(), "expected ')'"));
                }
                self.pos += 1;
                Ok(v)
            }
            Tok::Ident(name) => match name.as_str() {
                "i" => Ok(Value::Poly(TrigPoly::constant(I))),
                "pi" => Ok(Value::Poly(TrigPoly::constant(Complex64::new(PI, 0.0)))),
                "t" => Ok(Value::Linear { a: Complex64::new(1.0, 0.0), b: Complex64::new(0.0, 0.0) }),
                f => {
                    let arg = if self.peek() == Some(&Tok::Op('(')) { self.atom()? } else { self.arg_chain()? };
                    self.apply(f, arg, at)
                }
            },
            Tok::Op(c) => Err(err(at, format!("unexpected '{c}'"))),
        }
    }

    /// Unparenthesized argument such as `2t` or `3 i t`.
    fn arg_chain(&mut self) -> Result<Value, FormulaError> {
        let at = self.here();
        let mut acc = self.power()?;
        while matches!(self.peek(), Some(Tok::Num(_))) || matches!(self.peek(), Some(Tok::Ident(s)) if s == "t" || s == "i" || s == "pi") {
            let rhs = self.power()?;
            acc = self.mul(acc, rhs, at)?;
        }
        Ok(acc)
    }

    fn apply(&self, f: &str, arg: Value, at: usize) -> Result<Value, FormulaError> {
        let (a, b) = as_linear(arg).ok_or_else(|| err(at, format!("argument of {f} must be linear in t")))?;
        let int = |x: f64| (x.fract() == 0.0 && x.abs() < 1e9).then_some(x as i64);
        let mut p = TrigPoly::default();
        match f {
            "sin" | "cos" => {
                let k = (a.im == 0.0).then_some(a.re).and_then(int).ok_or_else(|| err(at, format!("{f} needs an integer multiple of t")))?;
                let ep = (I * b).exp() / 2.0;
                let em = (-I * b).exp() / 2.0;
                if f == "cos" {
                    p.add_term(k, ep);
                    p.add_term(-k, em);
                } else {
                    p.add_term(k, ep / I);
                    p.add_term(-k, -em / I);
                }
            }
            "exp" => {
                let k = (a.re == 0.0).then_some(a.im).and_then(int).ok_or_else(|| err(at, "exp needs i times an integer multiple of t"))?;
                p.add_term(k, b.exp());
            }
            _ => return Err(err(at, format!("unknown function '{f}'"))),
        }
        Ok(Value::Poly(p))
    }

    fn neg(&self, v: Value) -> Value {
        match v {
            Value::Poly(p) => Value::Poly(p.scale(Complex64::new(-1.0, 0.0))),
            Value::Linear { a, b } => Value::Linear { a: -a, b: -b },
        }
    }

    fn add(&self, x: Value, y: Value, at: usize) -> Result<Value, FormulaError> {
        match (x, y) {
            (Value::Poly(p), Value::Poly(q)) => Ok(Value::Poly(p.add(&q))),
            (x, y) => {
                let (a1, b1) = as_linear(x).ok_or_else(|| err(at, "t may only appear inside sin, cos or exp"))?;
                let (a2, b2) = as_linear(y).ok_or_else(|| err(at, "t may only appear inside sin, cos or exp"))?;
                Ok(Value::Linear { a: a1 + a2, b: b1 + b2 })
            }
        }
    }

    fn mul(&self, x: Value, y: Value, at: usize) -> Result<Value, FormulaError> {
        match (x, y) {
            (Value::Poly(p), Value::Poly(q)) => Ok(Value::Poly(p.mul(&q))),
            (Value::Linear { a, b }, other) | (other, Value::Linear { a, b }) => {
                let c = lin_const(&other).ok_or_else(|| err(at, "t may only appear linearly inside sin, cos or exp"))?;
                Ok(Value::Linear { a: a * c, b: b * c })
            }
        }
    }
}

/// Parses a formula into a trigonometric polynomial.
pub fn parse_formula(s: &str) -> Result<TrigPoly, FormulaError> {
    let toks = tokenize(s)?;
    if toks.is_empty() {
        return Err(err(0, "empty formula"));
    }
    let mut p = Parser { toks, pos: 0, len: s.len() };
    let v = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(err(p.here(), "unexpected trailing input"));
    }
    match v {
        Value::Poly(poly) => Ok(poly),
        Value::Linear { .. } => Err(err(0, "t may only appear inside sin, cos or exp")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(p: &TrigPoly, f: impl Fn(f64) -> Complex64) {
        for i in 0..17 {
            let t = 0.37 * i as f64;
            assert!((p.eval(t) - f(t)).norm() < 1e-13, "t = {t}");
        }
    }

    #[test]
    fn parses_examples() {
        close(&parse_formula("1/2 + i sin t").unwrap(), |t| Complex64::new(0.5, t.sin()));
        close(&parse_formula("i(1 - cos t)").unwrap(), |t| Complex64::new(0.0, 1.0 - t.cos()));
        close(&parse_formula("0.3*cos(2t) - 2i").unwrap(), |t| Complex64::new(0.3 * (2.0 * t).cos(), -2.0));
        close(&parse_formula("exp(3it)").unwrap(), |t| (I * 3.0 * t).exp());
        close(&parse_formula("exp(i t) + (sin t)^2").unwrap(), |t| (I * t).exp() + t.sin().powi(2));
        close(&parse_formula("cos(t + pi/2)").unwrap(), |t| Complex64::new(-t.sin(), 0.0));
        close(&parse_formula("-1e-1 sin 3t").unwrap(), |t| Complex64::new(-0.1 * (3.0 * t).sin(), 0.0));
        assert_eq!(parse_formula("sin t").unwrap().max_frequency(), 1);
        assert_eq!(parse_formula("(1+cos t)^3").unwrap().max_frequency(), 3);
    }

    #[test]
    fn rejects_bad_input() {
        for bad in ["", "t", "sin(t*t)", "sin(0.5 t)", "exp(t)", "1/(cos t)", "foo", "1 +", "(1", "2 $ 3"] {
            assert!(parse_formula(bad).is_err(), "{bad}");
        }
        assert_eq!(parse_formula("1 + q").unwrap_err().position, 4);
    }
}
