//! Minimal arithmetic expression language for user-supplied density and
//! weight formulas.
//!
//! One variable `t`, the constant `pi`, the operators `+ - * / ^` (with `^`
//! right-associative and binding tighter than unary minus), and the functions
//! `abs`, `log`, `exp`. Whitespace is insignificant. This is deliberately the
//! smallest language that covers the densities the library ships with; it is
//! not a CAS and does no symbolic work.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var,
    Pi,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Abs(Box<Expr>),
    Log(Box<Expr>),
    Exp(Box<Expr>),
}

#[derive(Debug, Error, PartialEq)]
#[error("syntax error at offset {offset}: {message}")]
pub struct SyntaxError {
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("log of non-positive value")]
    LogNonPositive,
    #[error("result is not finite")]
    NonFinite,
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr, SyntaxError> {
        let mut p = Parser {
            src: text.as_bytes(),
            pos: 0,
        };
        p.skip_ws();
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(e)
    }

    /// Evaluates at `t`. Intermediate overflow to infinity is tolerated as
    /// long as the final value is finite (e.g. `1/(1+t^2)` at astronomically
    /// large `t` evaluates to 0).
    pub fn eval(&self, t: f64) -> Result<f64, EvalError> {
        let v = self.eval_raw(t)?;
        if !v.is_finite() {
            return Err(EvalError::NonFinite);
        }
        Ok(v)
    }

    fn eval_raw(&self, t: f64) -> Result<f64, EvalError> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::Var => t,
            Expr::Pi => std::f64::consts::PI,
            Expr::Neg(a) => -a.eval_raw(t)?,
            Expr::Add(a, b) => a.eval_raw(t)? + b.eval_raw(t)?,
            Expr::Sub(a, b) => a.eval_raw(t)? - b.eval_raw(t)?,
            Expr::Mul(a, b) => a.eval_raw(t)? * b.eval_raw(t)?,
            Expr::Div(a, b) => {
                let d = b.eval_raw(t)?;
                if d == 0.0 {
                    return Err(EvalError::DivisionByZero);
                }
                a.eval_raw(t)? / d
            }
            Expr::Pow(a, b) => a.eval_raw(t)?.powf(b.eval_raw(t)?),
            Expr::Abs(a) => a.eval_raw(t)?.abs(),
            Expr::Log(a) => {
                let v = a.eval_raw(t)?;
                if v <= 0.0 {
                    return Err(EvalError::LogNonPositive);
                }
                v.ln()
            }
            Expr::Exp(a) => a.eval_raw(t)?.exp(),
        })
    }

    /// True when the expression does not mention the variable `t`.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Var => false,
            Expr::Num(_) | Expr::Pi => true,
            Expr::Neg(a) | Expr::Abs(a) | Expr::Log(a) | Expr::Exp(a) => a.is_constant(),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => a.is_constant() && b.is_constant(),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(..) => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        }
    }

    fn fmt_prec(&self, f: &mut std::fmt::Formatter<'_>, min: u8) -> std::fmt::Result {
        let prec = self.precedence();
        if prec < min {
            write!(f, "(")?;
        }
        match self {
            Expr::Num(v) => write!(f, "{v}")?,
            Expr::Var => write!(f, "t")?,
            Expr::Pi => write!(f, "pi")?,
            Expr::Neg(a) => {
                write!(f, "-")?;
                a.fmt_prec(f, 4)?;
            }
            Expr::Add(a, b) => {
                a.fmt_prec(f, 1)?;
                write!(f, "+")?;
                b.fmt_prec(f, 2)?;
            }
            Expr::Sub(a, b) => {
                a.fmt_prec(f, 1)?;
                write!(f, "-")?;
                b.fmt_prec(f, 2)?;
            }
            Expr::Mul(a, b) => {
                a.fmt_prec(f, 2)?;
                write!(f, "*")?;
                b.fmt_prec(f, 3)?;
            }
            Expr::Div(a, b) => {
                a.fmt_prec(f, 2)?;
                write!(f, "/")?;
                b.fmt_prec(f, 3)?;
            }
            Expr::Pow(a, b) => {
                a.fmt_prec(f, 5)?;
                write!(f, "^")?;
                // exponent may itself be a unary minus or power
                b.fmt_prec(f, 3)?;
            }
            Expr::Abs(a) => {
                write!(f, "abs(")?;
                a.fmt_prec(f, 0)?;
                write!(f, ")")?;
            }
            Expr::Log(a) => {
                write!(f, "log(")?;
                a.fmt_prec(f, 0)?;
                write!(f, ")")?;
            }
            Expr::Exp(a) => {
                write!(f, "exp(")?;
                a.fmt_prec(f, 0)?;
                write!(f, ")")?;
            }
        }
        if prec < min {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl std::fmt::Display for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.fmt_prec(f, 0)
    }
}

/// Parses a constant expression ("pi/4", "0.25", ...) to its value.
pub fn parse_constant(text: &str) -> Result<f64, String> {
    let e = Expr::parse(text).map_err(|e| e.to_string())?;
    if !e.is_constant() {
        return Err("expression must not mention the variable t".into());
    }
    e.eval(0.0).map_err(|e| e.to_string())
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, message: &str) -> SyntaxError {
        SyntaxError {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            self.skip_ws();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, SyntaxError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, SyntaxError> {
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

    fn unary(&mut self) -> Result<Expr, SyntaxError> {
        if self.eat(b'-') {
            Ok(Expr::Neg(Box::new(self.unary()?)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr, SyntaxError> {
        let base = self.atom()?;
        if self.eat(b'^') {
            // right-associative; exponent admits unary minus
            Ok(Expr::Pow(Box::new(base), Box::new(self.unary()?)))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Expr, SyntaxError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                self.skip_ws();
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.err("expected ')'"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            Some(_) => Err(self.err("expected a value")),
            None => Err(self.err("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Expr, SyntaxError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.peek() == Some(b'.') {
            self.pos += 1;
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                self.pos += 1;
            }
        }
        if matches!(self.peek(), Some(b'e' | b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    self.pos += 1;
                }
            } else {
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let v: f64 = text.parse().map_err(|_| SyntaxError {
            offset: start,
            message: format!("invalid number literal '{text}'"),
        })?;
        self.skip_ws();
        Ok(Expr::Num(v))
    }

    fn ident(&mut self) -> Result<Expr, SyntaxError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphabetic()) {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        self.skip_ws();
        match name {
            "t" => Ok(Expr::Var),
            "pi" => Ok(Expr::Pi),
            "abs" | "log" | "exp" => {
                if !self.eat(b'(') {
                    return Err(self.err("expected '(' after function name"));
                }
                let arg = Box::new(self.expr()?);
                if !self.eat(b')') {
                    return Err(self.err("expected ')'"));
                }
                Ok(match name {
                    "abs" => Expr::Abs(arg),
                    "log" => Expr::Log(arg),
                    _ => Expr::Exp(arg),
                })
            }
            _ => Err(SyntaxError {
                offset: start,
                message: format!("unknown identifier '{name}'"),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_shipped_densities() {
        assert!(Expr::parse("1/(pi*(1+t^2)^2)").is_ok());
        assert!(Expr::parse("1/((1+t^2)*t)").is_ok());
    }

    #[test]
    fn unbalanced_paren_offset() {
        let e = Expr::parse("1+(2").unwrap_err();
        assert_eq!(e.offset, 4);
    }

    #[test]
    fn eval_pins() {
        let e = Expr::parse("1/(pi*(1+t^2)^2)").unwrap();
        assert!((e.eval(0.0).unwrap() - 1.0 / std::f64::consts::PI).abs() < 1e-15);
        let e = Expr::parse("1/((1+t^2)*t)").unwrap();
        assert_eq!(e.eval(1.0).unwrap(), 0.5);
        let e = Expr::parse("1/t").unwrap();
        assert_eq!(e.eval(0.0), Err(EvalError::DivisionByZero));
    }

    #[test]
    fn precedence_pin() {
        let e = Expr::parse("1+2*3^2").unwrap();
        assert_eq!(e.eval(0.0).unwrap(), 19.0);
        // ^ binds tighter than unary minus, and is right-associative
        assert_eq!(Expr::parse("-2^2").unwrap().eval(0.0).unwrap(), -4.0);
        assert_eq!(Expr::parse("2^3^2").unwrap().eval(0.0).unwrap(), 512.0);
        assert_eq!(Expr::parse("2^-1").unwrap().eval(0.0).unwrap(), 0.5);
    }

    #[test]
    fn huge_argument_collapses_without_error() {
        let e = Expr::parse("1/(1+t^2)").unwrap();
        assert_eq!(e.eval(1e200).unwrap(), 0.0);
    }

    #[test]
    fn constant_expressions() {
        assert!((parse_constant("pi/4").unwrap() - std::f64::consts::FRAC_PI_4).abs() < 1e-16);
        assert!(parse_constant("t+1").is_err());
    }

    #[test]
    fn log_domain() {
        let e = Expr::parse("log(t)").unwrap();
        assert_eq!(e.eval(-1.0), Err(EvalError::LogNonPositive));
        assert_eq!(e.eval(0.0), Err(EvalError::LogNonPositive));
    }
}
