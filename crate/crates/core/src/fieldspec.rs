//! Scalar field specifications over the plane.
//!
//! A deliberately small vocabulary: numeric constants, the coordinates `x1`,
//! `x2`, the radius `r = |x|`, the operators `+ - * / ^` (integer exponents
//! only), the functions `ln`, `sqrt`, `abs`, and two named profiles:
//!
//! * `paraboloid` = `|x|^2 / 2`
//! * `circle_profile` = `|x| x2 / 2 + (x1^2 / 2) ln((|x| + x2) / |x1|)`
//!
//! `circle_profile` has a removable logarithmic singularity on `x1 = 0`; for
//! `|x1| < 1e-12` it evaluates to the limit `|x| x2 / 2`.

use std::fmt;

use crate::error::{Error, Result};

/// Threshold below which `|x1|` is treated as zero in `circle_profile`.
pub const SINGULAR_X1: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedProfile {
    Paraboloid,
    CircleProfile,
}

impl NamedProfile {
    pub fn value(self, x1: f64, x2: f64) -> f64 {
        match self {
            NamedProfile::Paraboloid => 0.5 * (x1 * x1 + x2 * x2),
            NamedProfile::CircleProfile => {
                let r = x1.hypot(x2);
                let base = 0.5 * r * x2;
                if x1.abs() < SINGULAR_X1 {
                    base
                } else {
                    let arg = (r + x2) / x1.abs();
                    // r + x2 underflows to 0 only when x1 is negligible next to x2
                    if arg <= 0.0 {
                        base
                    } else {
                        base + 0.5 * x1 * x1 * arg.ln()
                    }
                }
            }
        }
    }

    /// Exact gradient. For `circle_profile`: `(x1 ln((r + x2)/|x1|), r)`.
    pub fn gradient(self, x1: f64, x2: f64) -> [f64; 2] {
        match self {
            NamedProfile::Paraboloid => [x1, x2],
            NamedProfile::CircleProfile => {
                let r = x1.hypot(x2);
                let d1 = if x1.abs() < SINGULAR_X1 {
                    0.0
                } else {
                    let arg = (r + x2) / x1.abs();
                    if arg <= 0.0 {
                        0.0
                    } else {
                        x1 * arg.ln()
                    }
                };
                [d1, r]
            }
        }
    }

    fn name(self) -> &'static str {
        match self {
            NamedProfile::Paraboloid => "paraboloid",
            NamedProfile::CircleProfile => "circle_profile",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Const(f64),
    X1,
    X2,
    R,
    Named(NamedProfile),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, i32),
    Ln(Box<Node>),
    Sqrt(Box<Node>),
    Abs(Box<Node>),
}

impl Node {
    fn eval(&self, x1: f64, x2: f64) -> f64 {
        match self {
            Node::Const(c) => *c,
            Node::X1 => x1,
            Node::X2 => x2,
            Node::R => x1.hypot(x2),
            Node::Named(p) => p.value(x1, x2),
            Node::Neg(a) => -a.eval(x1, x2),
            Node::Add(a, b) => a.eval(x1, x2) + b.eval(x1, x2),
            Node::Sub(a, b) => a.eval(x1, x2) - b.eval(x1, x2),
            Node::Mul(a, b) => a.eval(x1, x2) * b.eval(x1, x2),
            Node::Div(a, b) => a.eval(x1, x2) / b.eval(x1, x2),
            Node::Pow(a, k) => a.eval(x1, x2).powi(*k),
            Node::Ln(a) => a.eval(x1, x2).ln(),
            Node::Sqrt(a) => a.eval(x1, x2).sqrt(),
            Node::Abs(a) => a.eval(x1, x2).abs(),
        }
    }

    fn write(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Const(c) => write!(f, "{c:?}"),
            Node::X1 => write!(f, "x1"),
            Node::X2 => write!(f, "x2"),
            Node::R => write!(f, "r"),
            Node::Named(p) => write!(f, "{}", p.name()),
            Node::Neg(a) => {
                write!(f, "(-")?;
                a.write(f)?;
                write!(f, ")")
            }
            Node::Add(a, b) => bin(f, a, "+", b),
            Node::Sub(a, b) => bin(f, a, "-", b),
            Node::Mul(a, b) => bin(f, a, "*", b),
            Node::Div(a, b) => bin(f, a, "/", b),
            Node::Pow(a, k) => {
                write!(f, "(")?;
                a.write(f)?;
                write!(f, "^{k})")
            }
            Node::Ln(a) => call(f, "ln", a),
            Node::Sqrt(a) => call(f, "sqrt", a),
            Node::Abs(a) => call(f, "abs", a),
        }
    }
}

fn bin(f: &mut fmt::Formatter<'_>, a: &Node, op: &str, b: &Node) -> fmt::Result {
    write!(f, "(")?;
    a.write(f)?;
    write!(f, " {op} ")?;
    b.write(f)?;
    write!(f, ")")
}

fn call(f: &mut fmt::Formatter<'_>, name: &str, a: &Node) -> fmt::Result {
    write!(f, "{name}(")?;
    a.write(f)?;
    write!(f, ")")
}

/// A parsed scalar field `x -> value`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSpec {
    source: String,
    root: Node,
}

impl FieldSpec {
    pub fn parse(src: &str) -> Result<Self> {
        let mut p = Parser {
            src: src.as_bytes(),
            pos: 0,
        };
        let root = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(FieldSpec {
            source: src.to_string(),
            root,
        })
    }

    pub fn constant(c: f64) -> Self {
        FieldSpec {
            source: format!("{c:?}"),
            root: Node::Const(c),
        }
    }

    pub fn named(p: NamedProfile) -> Self {
        FieldSpec {
            source: p.name().to_string(),
            root: Node::Named(p),
        }
    }

    pub fn eval(&self, x1: f64, x2: f64) -> f64 {
        self.root.eval(x1, x2)
    }

    /// The text this spec was parsed from.
    pub fn source(&self) -> &str {
        &self.source
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.write(f)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, message: &str) -> Error {
        Error::FieldSpec {
            column: self.pos + 1,
            message: message.to_string(),
        }
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

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(b'-') => {
                    self.pos += 1;
                    lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(b'/') => {
                    self.pos += 1;
                    lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let neg = if self.peek() == Some(b'-') {
                self.pos += 1;
                true
            } else {
                false
            };
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(self.err("exponent must be an integer literal"));
            }
            let k: i32 = std::str::from_utf8(&self.src[start..self.pos])
                .unwrap()
                .parse()
                .map_err(|_| self.err("exponent out of range"))?;
            return Ok(Node::Pow(Box::new(base), if neg { -k } else { k }));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let ident = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                let func = |p: &mut Self, wrap: fn(Box<Node>) -> Node| -> Result<Node> {
                    p.expect(b'(')?;
                    let e = p.expr()?;
                    p.expect(b')')?;
                    Ok(wrap(Box::new(e)))
                };
                match ident {
                    "x1" => Ok(Node::X1),
                    "x2" => Ok(Node::X2),
                    "r" => Ok(Node::R),
                    "pi" => Ok(Node::Const(std::f64::consts::PI)),
                    "paraboloid" => Ok(Node::Named(NamedProfile::Paraboloid)),
                    "circle_profile" => Ok(Node::Named(NamedProfile::CircleProfile)),
                    "ln" => func(self, Node::Ln),
                    "sqrt" => func(self, Node::Sqrt),
                    "abs" => func(self, Node::Abs),
                    _ => {
                        self.pos = start;
                        Err(self.err(&format!("unknown identifier `{ident}`")))
                    }
                }
            }
            Some(_) => Err(self.err("unexpected character")),
            None => Err(self.err("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Node> {
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
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse::<f64>().map(Node::Const).map_err(|_| {
            self.pos = start;
            self.err(&format!("bad number `{text}`"))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_and_precedence() {
        let f = FieldSpec::parse("1 + 2*x1 - x2/4 + r^2").unwrap();
        let (x1, x2) = (0.3, -0.8);
        let expect = 1.0 + 2.0 * x1 - x2 / 4.0 + (x1 * x1 + x2 * x2);
        assert!((f.eval(x1, x2) - expect).abs() < 1e-15);
        let g = FieldSpec::parse("-x1^2").unwrap();
        assert_eq!(g.eval(2.0, 0.0), -4.0);
    }

    #[test]
    fn functions_and_named_profiles() {
        let f = FieldSpec::parse("paraboloid + 1").unwrap();
        assert!((f.eval(1.0, 1.0) - 2.0).abs() < 1e-15);
        let g = FieldSpec::parse("ln(sqrt(abs(-4)))").unwrap();
        assert!((g.eval(0.0, 0.0) - 2f64.ln()).abs() < 1e-15);
        let h = FieldSpec::parse("1.5e-1*pi").unwrap();
        assert!((h.eval(0.0, 0.0) - 0.15 * std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn parse_errors_carry_column() {
        match FieldSpec::parse("x1 + foo") {
            Err(Error::FieldSpec { column, .. }) => assert_eq!(column, 6),
            other => panic!("unexpected {other:?}"),
        }
        assert!(FieldSpec::parse("x1 +").is_err());
        assert!(FieldSpec::parse("(x1").is_err());
        assert!(FieldSpec::parse("x1^0.5").is_err());
    }

    #[test]
    fn circle_profile_singular_convention() {
        let p = NamedProfile::CircleProfile;
        let (x2, r) = (0.4, 0.4);
        assert_eq!(p.value(0.0, x2), 0.5 * r * x2);
        assert_eq!(p.value(1e-13, x2), 0.5 * (1e-13f64).hypot(x2) * x2);
        // continuity across the singular set
        let near = p.value(1e-6, x2);
        assert!((near - 0.5 * r * x2).abs() < 1e-10);
    }

    #[test]
    fn named_gradients_match_differences() {
        let step = 1e-6;
        for p in [NamedProfile::Paraboloid, NamedProfile::CircleProfile] {
            for &(x1, x2) in &[(0.3, 0.4), (-0.3, 0.2), (0.1, -0.5), (-0.45, -0.1)] {
                let g = p.gradient(x1, x2);
                let d1 = (p.value(x1 + step, x2) - p.value(x1 - step, x2)) / (2.0 * step);
                let d2 = (p.value(x1, x2 + step) - p.value(x1, x2 - step)) / (2.0 * step);
                assert!((g[0] - d1).abs() < 1e-7, "{p:?} d1 {} vs {}", g[0], d1);
                assert!((g[1] - d2).abs() < 1e-7, "{p:?} d2 {} vs {}", g[1], d2);
            }
        }
    }

    #[test]
    fn display_reparses_to_same_values() {
        let f = FieldSpec::parse("x1*x2 - 2/(1+r^2) + ln(2+x1)").unwrap();
        let g = FieldSpec::parse(&f.to_string()).unwrap();
        for &(a, b) in &[(0.1, 0.2), (-0.7, 0.3)] {
            assert_eq!(f.eval(a, b), g.eval(a, b));
        }
    }
}
