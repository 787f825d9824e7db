//! A tiny closed term language for test functions, and its text syntax:
//!
//! ```text
//! expr   := term ('+' term)*
//! term   := factor ('*' factor)*
//! factor := number | '-' factor | '(' expr ')'
//!         | const(c) | powabs(alpha[, axis]) | powrho(alpha)
//!         | ind(lo:hi, ...) | ind(lo, hi) | scale(c[, expr])
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{rho_quasi_norm, Anisotropy, RHO_TOL};
use crate::grid::{parse_f64, Domain, Grid, GridFunction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Const(f64),
    /// `[x]_a^alpha`
    PowRho(f64),
    /// `|x_axis|^alpha`
    PowAbs { alpha: f64, axis: usize },
    /// Indicator of a closed box.
    Indicator(Domain),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Scale(f64, Box<Expr>),
}

impl Expr {
    pub fn eval(&self, x: &[f64], a: &Anisotropy) -> Result<f64> {
        Ok(match self {
            Expr::Const(c) => *c,
            Expr::PowRho(alpha) => rho_quasi_norm(x, a, RHO_TOL)?.powf(*alpha),
            Expr::PowAbs { alpha, axis } => {
                let v = x.get(*axis).ok_or(Error::DimensionMismatch {
                    expected: axis + 1,
                    got: x.len(),
                })?;
                v.abs().powf(*alpha)
            }
            Expr::Indicator(b) => {
                if b.dim() != x.len() {
                    return Err(Error::DimensionMismatch {
                        expected: x.len(),
                        got: b.dim(),
                    });
                }
                if b.contains(x) {
                    1.0
                } else {
                    0.0
                }
            }
            Expr::Sum(terms) => {
                let mut s = 0.0;
                for t in terms {
                    s += t.eval(x, a)?;
                }
                s
            }
            Expr::Product(terms) => {
                let mut p = 1.0;
                let mut zero = false;
                for t in terms {
                    let v = t.eval(x, a)?;
                    zero |= v == 0.0;
                    p *= v;
                }
                // 0 * inf: an indicator switches a singular factor off.
                if zero {
                    0.0
                } else {
                    p
                }
            }
            Expr::Scale(c, e) => c * e.eval(x, a)?,
        })
    }

    pub fn parse(s: &str) -> Result<Self> {
        let mut p = Parser {
            src: s.as_bytes(),
            pos: 0,
        };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("trailing input"));
        }
        Ok(e)
    }
}

/// Samples `expr` at every cell center; a non-finite value is an error that
/// names the offending point.
pub fn sample(expr: &Expr, grid: &Grid, a: &Anisotropy) -> Result<GridFunction> {
    a.check_dim(grid.dim())?;
    let mut values = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let x = grid.center_of(i);
        let v = expr.eval(&x, a)?;
        if !v.is_finite() {
            return Err(Error::NonFiniteSample { point: x });
        }
        values.push(v);
    }
    GridFunction::new(grid.clone(), values)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, what: &str) -> Error {
        Error::Parse(format!(
            "{what} at offset {} in `{}`",
            self.pos,
            String::from_utf8_lossy(self.src)
        ))
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

    fn expr(&mut self) -> Result<Expr> {
        let mut terms = vec![self.term()?];
        while self.eat(b'+') {
            terms.push(self.term()?);
        }
        Ok(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            Expr::Sum(terms)
        })
    }

    fn term(&mut self) -> Result<Expr> {
        let mut factors = vec![self.factor()?];
        while self.eat(b'*') {
            factors.push(self.factor()?);
        }
        Ok(if factors.len() == 1 {
            factors.pop().unwrap()
        } else {
            Expr::Product(factors)
        })
    }

    fn factor(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(e)
            }
            Some(b'-') => {
                self.pos += 1;
                Ok(Expr::Scale(-1.0, Box::new(self.factor()?)))
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => Ok(Expr::Const(self.number()?)),
            Some(c) if c.is_ascii_alphabetic() => self.call(),
            _ => Err(self.error("expected a term")),
        }
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            let exp_sign = (c == b'-' || c == b'+')
                && self.pos > start
                && matches!(self.src[self.pos - 1], b'e' | b'E');
            if c.is_ascii_digit() || c == b'.' || c == b'e' || c == b'E' || exp_sign {
                self.pos += 1;
            } else {
                break;
            }
        }
        parse_f64(std::str::from_utf8(&self.src[start..self.pos]).unwrap())
    }

    /// Raw text of the comma-separated arguments up to the matching `)`.
    fn args(&mut self) -> Result<Vec<String>> {
        if !self.eat(b'(') {
            return Err(self.error("expected `(`"));
        }
        let mut depth = 0usize;
        let mut args = Vec::new();
        let mut cur = String::new();
        while let Some(&c) = self.src.get(self.pos) {
            self.pos += 1;
            match c {
                b'(' => {
                    depth += 1;
                    cur.push('(');
                }
                b')' if depth == 0 => {
                    args.push(cur.trim().to_string());
                    return Ok(args);
                }
                b')' => {
                    depth -= 1;
                    cur.push(')');
                }
                b',' if depth == 0 => args.push(std::mem::take(&mut cur).trim().to_string()),
                _ => cur.push(c as char),
            }
        }
        Err(self.error("unclosed `(`"))
    }

    fn call(&mut self) -> Result<Expr> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let name = String::from_utf8_lossy(&self.src[start..self.pos]).to_string();
        let args = self.args()?;
        let num = |i: usize| -> Result<f64> {
            args.get(i)
                .ok_or_else(|| Error::Parse(format!("{name}: missing argument {}", i + 1)))
                .and_then(|s| parse_f64(s))
        };
        match (name.as_str(), args.len()) {
            ("const", 1) => Ok(Expr::Const(num(0)?)),
            ("powrho", 1) => Ok(Expr::PowRho(num(0)?)),
            ("powabs", 1) => Ok(Expr::PowAbs {
                alpha: num(0)?,
                axis: 0,
            }),
            ("powabs", 2) => Ok(Expr::PowAbs {
                alpha: num(0)?,
                axis: num(1)? as usize,
            }),
            ("scale", 1) => Ok(Expr::Const(num(0)?)),
            ("scale", 2) => Ok(Expr::Scale(num(0)?, Box::new(Expr::parse(&args[1])?))),
            ("ind", _) => parse_indicator(&args),
            _ => Err(Error::Parse(format!(
                "unknown function `{name}` with {} argument(s)",
                args.len()
            ))),
        }
    }
}

fn parse_indicator(args: &[String]) -> Result<Expr> {
    if args.iter().all(|a| a.contains(':')) {
        return Ok(Expr::Indicator(Domain::parse(&args.join(","))?));
    }
    if args.len() == 2 && args.iter().all(|a| !a.contains(':')) {
        let lo = parse_f64(&args[0])?;
        let hi = parse_f64(&args[1])?;
        return Ok(Expr::Indicator(Domain::new(vec![lo], vec![hi])?));
    }
    Err(Error::Parse(format!(
        "ind expects lo:hi per axis or (lo, hi) in 1-D, got ({})",
        args.join(",")
    )))
}
