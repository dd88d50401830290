//! Polynomial text syntax: `+ - * ^ ( )`, integer and `p/q` literals, chart
//! variable names. Division is only allowed by nonzero constants.

use num_bigint::BigInt;
use num_rational::BigRational;

use super::{ChartRef, Rat, ScalarFn, SymError};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(BigInt),
    Ident(String),
    Op(char),
}

fn lex(s: &str) -> Result<Vec<Tok>, SymError> {
    let mut out = Vec::new();
    let cs: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < cs.len() {
        let c = cs[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let st = i;
            while i < cs.len() && cs[i].is_ascii_digit() {
                i += 1;
            }
            let lit: String = cs[st..i].iter().collect();
            out.push(Tok::Num(lit.parse().unwrap()));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let st = i;
            while i < cs.len() && (cs[i].is_ascii_alphanumeric() || cs[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(cs[st..i].iter().collect()));
        } else if "+-*/^()".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else {
            return Err(SymError::Parse(format!(
                "unexpected character `{c}` in `{s}`"
            )));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Tok>,
    pos: usize,
    chart: &'a ChartRef,
    src: &'a str,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: &str) -> SymError {
        SymError::Parse(format!("{msg} in `{}`", self.src))
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Op(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<ScalarFn, SymError> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                acc = &acc + &self.term()?;
            } else if self.eat('-') {
                acc = &acc - &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<ScalarFn, SymError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat('*') {
                acc = &acc * &self.unary()?;
            } else if self.eat('/') {
                let d = self.unary()?;
                match d.as_constant() {
                    Some(c) if !c.is_zero() => acc = acc.scale(&c.recip()),
                    _ => return Err(self.err("division by a non-constant or zero")),
                }
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<ScalarFn, SymError> {
        if self.eat('-') {
            return Ok(-self.unary()?);
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<ScalarFn, SymError> {
        let base = self.atom()?;
        if self.eat('^') {
            match self.peek().cloned() {
                Some(Tok::Num(n)) => {
                    self.pos += 1;
                    let k: u32 = n.try_into().map_err(|_| self.err("exponent too large"))?;
                    if k > 255 {
                        return Err(self.err("exponent too large"));
                    }
                    Ok(base.pow(k))
                }
                _ => Err(self.err("expected a nonnegative integer exponent")),
            }
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<ScalarFn, SymError> {
        match self.peek().cloned() {
            Some(Tok::Num(n)) => {
                self.pos += 1;
                Ok(ScalarFn::constant(
                    self.chart,
                    Rat::from(BigRational::from_integer(n)),
                ))
            }
            Some(Tok::Ident(v)) => {
                self.pos += 1;
                match self.chart.var_index(&v) {
                    Some(i) => Ok(ScalarFn::var(self.chart, i)),
                    None => Err(self.err(&format!(
                        "unknown variable `{v}` for chart `{}`",
                        self.chart.name()
                    ))),
                }
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(self.err("missing `)`"));
                }
                Ok(e)
            }
            _ => Err(self.err("unexpected end of expression")),
        }
    }
}

/// Parses polynomial text on `chart`.
pub fn parse_scalar(chart: &ChartRef, s: &str) -> Result<ScalarFn, SymError> {
    let toks = lex(s)?;
    if toks.is_empty() {
        return Err(SymError::Parse("empty expression".into()));
    }
    let mut p = Parser {
        toks,
        pos: 0,
        chart,
        src: s,
    };
    let f = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(p.err("trailing input"));
    }
    Ok(f)
}

impl ScalarFn {
    pub fn parse(chart: &ChartRef, s: &str) -> Result<ScalarFn, SymError> {
        parse_scalar(chart, s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symkernel::Chart;

    #[test]
    fn parses_and_prints_canonically() {
        let c = Chart::from_names("M", &["x", "y"]);
        let f = ScalarFn::parse(&c, "1/2*x*y - 3 + x^2 - (x+y)^2 + y^2").unwrap();
        assert_eq!(f.to_string(), "-3/2*x*y - 3");
        let g = ScalarFn::parse(&c, &f.to_string()).unwrap();
        assert_eq!(f, g);
        assert_eq!(ScalarFn::parse(&c, "x/2").unwrap().to_string(), "1/2*x");
        assert_eq!(ScalarFn::parse(&c, "0").unwrap().to_string(), "0");
        assert_eq!(ScalarFn::parse(&c, "-x").unwrap().to_string(), "-x");
    }

    #[test]
    fn rejects_bad_input() {
        let c = Chart::from_names("M", &["x"]);
        for s in ["", "x/x", "z", "x^y", "(x", "x $ 1", "1/0", "x x"] {
            assert!(ScalarFn::parse(&c, s).is_err(), "{s}");
        }
    }
}
