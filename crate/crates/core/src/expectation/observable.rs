//! Phase-space observables `a(q, p)`: a small expression language.
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' '-'? integer)?
//! atom  := number | variable | func '(' expr ')' | '(' expr ')'
//! ```
//!
//! Variables are `q`, `p` in one dimension and `q_i`, `p_i` (`1 ≤ i ≤ d`)
//! in general; functions are `sin`, `cos` and `exp`.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::real::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
        }
    }

    fn apply<T: Real>(self, x: T) -> T {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Exp => x.exp(),
        }
    }
}

/// Expression tree. Variables index phase-space coordinates
/// `(q_1, …, q_d, p_1, …, p_d)`.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn eval<T: Real>(&self, z: &[T]) -> T {
        match self {
            Expr::Const(c) => T::c(*c),
            Expr::Var(i) => z[*i],
            Expr::Neg(a) => -a.eval(z),
            Expr::Add(a, b) => a.eval(z) + b.eval(z),
            Expr::Sub(a, b) => a.eval(z) - b.eval(z),
            Expr::Mul(a, b) => a.eval(z) * b.eval(z),
            Expr::Div(a, b) => a.eval(z) / b.eval(z),
            Expr::Pow(a, n) => a.eval(z).powi(*n),
            Expr::Call(f, a) => f.apply(a.eval(z)),
        }
    }

    /// Polynomial degree, `None` for non-polynomial expressions.
    pub fn degree(&self) -> Option<u32> {
        match self {
            Expr::Const(_) => Some(0),
            Expr::Var(_) => Some(1),
            Expr::Neg(a) => a.degree(),
            Expr::Add(a, b) | Expr::Sub(a, b) => Some(a.degree()?.max(b.degree()?)),
            Expr::Mul(a, b) => Some(a.degree()? + b.degree()?),
            Expr::Div(a, b) => match b.degree()? {
                0 => a.degree(),
                _ => None,
            },
            Expr::Pow(a, n) => {
                let d = a.degree()?;
                if *n >= 0 {
                    Some(d * *n as u32)
                } else if d == 0 {
                    Some(0)
                } else {
                    None
                }
            }
            Expr::Call(_, a) => match a.degree()? {
                0 => Some(0),
                _ => None,
            },
        }
    }

    fn uses(&self, out: &mut Vec<bool>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(i) => out[*i] = true,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.uses(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.uses(out);
                b.uses(out);
            }
        }
    }

    fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    /// Folds constant subtrees.
    fn fold(self) -> Expr {
        let folded = match self {
            Expr::Neg(a) => Expr::Neg(Box::new(a.fold())),
            Expr::Add(a, b) => Expr::Add(Box::new(a.fold()), Box::new(b.fold())),
            Expr::Sub(a, b) => Expr::Sub(Box::new(a.fold()), Box::new(b.fold())),
            Expr::Mul(a, b) => Expr::Mul(Box::new(a.fold()), Box::new(b.fold())),
            Expr::Div(a, b) => Expr::Div(Box::new(a.fold()), Box::new(b.fold())),
            Expr::Pow(a, n) => Expr::Pow(Box::new(a.fold()), n),
            Expr::Call(f, a) => Expr::Call(f, Box::new(a.fold())),
            leaf => leaf,
        };
        let constant = match &folded {
            Expr::Neg(a) => a.as_const().map(|x| -x),
            Expr::Add(a, b) => a.as_const().zip(b.as_const()).map(|(x, y)| x + y),
            Expr::Sub(a, b) => a.as_const().zip(b.as_const()).map(|(x, y)| x - y),
            Expr::Mul(a, b) => a.as_const().zip(b.as_const()).map(|(x, y)| x * y),
            Expr::Div(a, b) => a.as_const().zip(b.as_const()).map(|(x, y)| x / y),
            Expr::Pow(a, n) => a.as_const().map(|x| x.powi(*n)),
            Expr::Call(f, a) => a.as_const().map(|x| f.apply(x)),
            _ => None,
        };
        match constant {
            Some(c) if c.is_finite() => Expr::Const(c),
            _ => folded,
        }
    }
}

/// Sparse polynomial in the `2d` phase-space coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial<T> {
    pub vars: usize,
    /// Exponent vector ↦ coefficient.
    pub terms: BTreeMap<Vec<u32>, T>,
}

impl<T: Real> Polynomial<T> {
    fn constant(vars: usize, c: T) -> Self {
        let mut terms = BTreeMap::new();
        if c != T::zero() {
            terms.insert(vec![0; vars], c);
        }
        Polynomial { vars, terms }
    }

    fn variable(vars: usize, i: usize) -> Self {
        let mut e = vec![0; vars];
        e[i] = 1;
        Polynomial { vars, terms: BTreeMap::from([(e, T::one())]) }
    }

    fn add(mut self, other: &Self, sign: T) -> Self {
        for (e, &c) in &other.terms {
            let slot = self.terms.entry(e.clone()).or_insert(T::zero());
            *slot = *slot + sign * c;
        }
        self
    }

    fn mul(&self, other: &Self) -> Self {
        let mut out = Polynomial { vars: self.vars, terms: BTreeMap::new() };
        for (ea, &ca) in &self.terms {
            for (eb, &cb) in &other.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                let slot = out.terms.entry(e).or_insert(T::zero());
                *slot = *slot + ca * cb;
            }
        }
        out
    }

    fn scale(mut self, s: T) -> Self {
        for c in self.terms.values_mut() {
            *c = *c * s;
        }
        self
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }
}

/// A parsed observable on `R^{2d}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Observable {
    dim: usize,
    expr: Expr,
}

impl Observable {
    pub fn parse(src: &str, dim: usize) -> Result<Self> {
        parse_observable(src, dim)
    }

    pub fn from_expr(expr: Expr, dim: usize) -> Self {
        Observable { dim, expr: expr.fold() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    /// `a(z)` with `z = (q_1, …, q_d, p_1, …, p_d)`.
    pub fn eval<T: Real>(&self, z: &[T]) -> T {
        self.expr.eval(z)
    }

    pub fn degree(&self) -> Option<u32> {
        self.expr.degree()
    }

    pub fn is_polynomial(&self) -> bool {
        self.degree().is_some()
    }

    /// Coordinates the expression actually depends on.
    pub fn used_variables(&self) -> Vec<usize> {
        let mut used = vec![false; 2 * self.dim];
        self.expr.uses(&mut used);
        used.iter().enumerate().filter(|(_, u)| **u).map(|(i, _)| i).collect()
    }

    /// Monomial expansion; `None` if the expression is not a polynomial.
    pub fn polynomial<T: Real>(&self) -> Option<Polynomial<T>> {
        expand(&self.expr, 2 * self.dim)
    }
}

pub(crate) fn expand<T: Real>(e: &Expr, vars: usize) -> Option<Polynomial<T>> {
    Some(match e {
        Expr::Const(c) => Polynomial::constant(vars, T::c(*c)),
        Expr::Var(i) => Polynomial::variable(vars, *i),
        Expr::Neg(a) => expand::<T>(a, vars)?.scale(-T::one()),
        Expr::Add(a, b) => expand::<T>(a, vars)?.add(&expand(b, vars)?, T::one()),
        Expr::Sub(a, b) => expand::<T>(a, vars)?.add(&expand(b, vars)?, -T::one()),
        Expr::Mul(a, b) => expand::<T>(a, vars)?.mul(&expand(b, vars)?),
        Expr::Div(a, b) => {
            let c = b.as_const()?;
            expand::<T>(a, vars)?.scale(T::one() / T::c(c))
        }
        Expr::Pow(a, n) => {
            if *n < 0 {
                return None;
            }
            let base = expand::<T>(a, vars)?;
            (0..*n).fold(Polynomial::constant(vars, T::one()), |acc, _| acc.mul(&base))
        }
        Expr::Call(..) => return None,
    })
}

fn var_name(i: usize, dim: usize) -> String {
    let (axis, letter) = if i < dim { (i, 'q') } else { (i - dim, 'p') };
    if dim == 1 {
        letter.to_string()
    } else {
        format!("{letter}_{}", axis + 1)
    }
}

struct Printer<'a> {
    expr: &'a Expr,
    dim: usize,
}

impl fmt::Display for Printer<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sub = |e| Printer { expr: e, dim: self.dim };
        match self.expr {
            Expr::Const(c) if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) => write!(f, "(-{})", -c),
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(i) => write!(f, "{}", var_name(*i, self.dim)),
            Expr::Neg(a) => write!(f, "(-{})", sub(a)),
            Expr::Add(a, b) => write!(f, "({} + {})", sub(a), sub(b)),
            Expr::Sub(a, b) => write!(f, "({} - {})", sub(a), sub(b)),
            Expr::Mul(a, b) => write!(f, "({} * {})", sub(a), sub(b)),
            Expr::Div(a, b) => write!(f, "({} / {})", sub(a), sub(b)),
            Expr::Pow(a, n) => write!(f, "({}^{})", sub(a), n),
            Expr::Call(func, a) => write!(f, "{}({})", func.name(), sub(a)),
        }
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        Printer { expr: &self.expr, dim: self.dim }.fmt(f)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    tok: Tok,
    tok_start: usize,
    dim: usize,
}

fn syntax(offset: usize, message: impl Into<String>) -> Error {
    Error::Syntax { offset, message: message.into() }
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, dim: usize) -> Result<Self> {
        let mut p = Parser { src, pos: 0, tok: Tok::End, tok_start: 0, dim };
        p.advance()?;
        Ok(p)
    }

    fn advance(&mut self) -> Result<()> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        self.tok_start = self.pos;
        if self.pos >= bytes.len() {
            self.tok = Tok::End;
            return Ok(());
        }
        let c = bytes[self.pos];
        if c.is_ascii_digit() || c == b'.' {
            let start = self.pos;
            while self.pos < bytes.len() && (bytes[self.pos].is_ascii_digit() || bytes[self.pos] == b'.') {
                self.pos += 1;
            }
            if self.pos < bytes.len() && (bytes[self.pos] == b'e' || bytes[self.pos] == b'E') {
                let save = self.pos;
                self.pos += 1;
                if self.pos < bytes.len() && (bytes[self.pos] == b'+' || bytes[self.pos] == b'-') {
                    self.pos += 1;
                }
                if self.pos < bytes.len() && bytes[self.pos].is_ascii_digit() {
                    while self.pos < bytes.len() && bytes[self.pos].is_ascii_digit() {
                        self.pos += 1;
                    }
                } else {
                    self.pos = save;
                }
            }
            let text = &self.src[start..self.pos];
            let v = text.parse::<f64>().map_err(|_| syntax(start, format!("malformed number {text:?}")))?;
            self.tok = Tok::Num(v);
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = self.pos;
            while self.pos < bytes.len() && (bytes[self.pos].is_ascii_alphanumeric() || bytes[self.pos] == b'_') {
                self.pos += 1;
            }
            self.tok = Tok::Ident(self.src[start..self.pos].to_string());
        } else if b"+-*/^()".contains(&c) {
            self.pos += 1;
            self.tok = Tok::Sym(c as char);
        } else {
            let ch = self.src[self.pos..].chars().next().unwrap_or('?');
            return Err(syntax(self.pos, format!("unexpected character {ch:?}")));
        }
        Ok(())
    }

    fn unexpected(&self, wanted: &str) -> Error {
        let found = match &self.tok {
            Tok::End => "end of input".to_string(),
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier {s:?}"),
            Tok::Sym(c) => format!("{c:?}"),
        };
        syntax(self.tok_start, format!("expected {wanted}, found {found}"))
    }

    fn eat(&mut self, c: char) -> Result<bool> {
        if self.tok == Tok::Sym(c) {
            self.advance()?;
            Ok(true)
        } else {
            Ok(false)
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+')? {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-')? {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*')? {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/')? {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-')? {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        let base = self.atom()?;
        if self.eat('^')? {
            let negative = self.eat('-')?;
            let at = self.tok_start;
            let n = match self.tok {
                Tok::Num(v) if v.fract() == 0.0 && v <= i32::MAX as f64 => v as i32,
                _ => return Err(self.unexpected("an integer exponent")),
            };
            if !self.src[at..].starts_with(|c: char| c.is_ascii_digit())
                || self.src[at..self.pos].contains(['.', 'e', 'E'])
            {
                return Err(syntax(at, "exponent must be an integer literal"));
            }
            self.advance()?;
            return Ok(Expr::Pow(Box::new(base), if negative { -n } else { n }));
        }
        Ok(base)
    }

    fn variable(&self, name: &str, at: usize) -> Result<Expr> {
        let (letter, rest) = name.split_at(1);
        let offset = match letter {
            "q" => 0,
            "p" => self.dim,
            _ => return Err(syntax(at, format!("unknown identifier {name:?}"))),
        };
        if rest.is_empty() {
            if self.dim == 1 {
                return Ok(Expr::Var(offset));
            }
            return Err(syntax(
                at,
                format!("{name:?} needs an axis index (q_1..q_{}) in dimension {}", self.dim, self.dim),
            ));
        }
        let axis = rest
            .strip_prefix('_')
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| syntax(at, format!("unknown identifier {name:?}")))?;
        if axis == 0 || axis > self.dim {
            return Err(syntax(at, format!("{name:?} is out of range for dimension {}", self.dim)));
        }
        Ok(Expr::Var(offset + axis - 1))
    }

    fn atom(&mut self) -> Result<Expr> {
        let at = self.tok_start;
        match self.tok.clone() {
            Tok::Num(v) => {
                self.advance()?;
                Ok(Expr::Const(v))
            }
            Tok::Sym('(') => {
                self.advance()?;
                let e = self.expr()?;
                if !self.eat(')')? {
                    return Err(self.unexpected("')'"));
                }
                Ok(e)
            }
            Tok::Ident(name) => {
                self.advance()?;
                let func = match name.as_str() {
                    "sin" => Some(Func::Sin),
                    "cos" => Some(Func::Cos),
                    "exp" => Some(Func::Exp),
                    _ => None,
                };
                match func {
                    Some(f) => {
                        if !self.eat('(')? {
                            return Err(self.unexpected("'(' after function name"));
                        }
                        let arg = self.expr()?;
                        if !self.eat(')')? {
                            return Err(self.unexpected("')'"));
                        }
                        Ok(Expr::Call(f, Box::new(arg)))
                    }
                    None => self.variable(&name, at),
                }
            }
            _ => Err(self.unexpected("a number, variable, function or '('")),
        }
    }
}

/// Parses `src` as an observable on `R^{2d}`.
pub fn parse_observable(src: &str, dim: usize) -> Result<Observable> {
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    if src.trim().is_empty() {
        return Err(syntax(0, "empty expression"));
    }
    let mut p = Parser::new(src, dim)?;
    let e = p.expr()?;
    if p.tok != Tok::End {
        return Err(p.unexpected("an operator or end of input"));
    }
    Ok(Observable { dim, expr: e.fold() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let a = parse_observable("q^4 + 1", 1).unwrap();
        assert_eq!(a.degree(), Some(4));
        let b = parse_observable("0.25*(p^2 - q)^3", 1).unwrap();
        assert_eq!(b.degree(), Some(6));
        let d = parse_observable("exp(sin(q))", 1).unwrap();
        assert_eq!(d.degree(), None);
        assert_eq!(
            parse_observable("q +", 1),
            Err(Error::Syntax {
                offset: 3,
                message: "expected a number, variable, function or '(', found end of input".into()
            })
        );
    }

    #[test]
    fn evaluation() {
        let b = parse_observable("0.25*(p^2 - q)^3", 1).unwrap();
        let v: f64 = b.eval(&[0.5, -1.0]);
        assert!((v - 0.25 * 0.125).abs() < 1e-15);
        let m = parse_observable("q_1 * p_2 - 2/q_2^-1", 2).unwrap();
        assert_eq!(m.eval(&[2.0, 3.0, 5.0, 7.0]), 2.0 * 7.0 - 2.0 * 3.0);
        assert_eq!(m.used_variables(), vec![0, 1, 3]);
        assert_eq!(parse_observable("-q^2", 1).unwrap().eval(&[3.0, 0.0]), -9.0);
    }

    #[test]
    fn rejections() {
        assert!(matches!(parse_observable("x + 1", 1), Err(Error::Syntax { offset: 0, .. })));
        assert!(matches!(parse_observable("q_3", 2), Err(Error::Syntax { .. })));
        assert!(matches!(parse_observable("q", 2), Err(Error::Syntax { .. })));
        assert!(matches!(parse_observable("q^1.5", 1), Err(Error::Syntax { offset: 2, .. })));
        assert!(matches!(parse_observable("sin q", 1), Err(Error::Syntax { .. })));
        assert!(matches!(parse_observable("(q", 1), Err(Error::Syntax { offset: 2, .. })));
        assert!(matches!(parse_observable("q $", 1), Err(Error::Syntax { offset: 2, .. })));
        assert!(parse_observable("   ", 1).is_err());
    }

    #[test]
    fn folding_and_expansion() {
        let a = parse_observable("2*3 + q*(1+1)", 1).unwrap();
        assert_eq!(
            a.expr(),
            &Expr::Add(
                Box::new(Expr::Const(6.0)),
                Box::new(Expr::Mul(Box::new(Expr::Var(0)), Box::new(Expr::Const(2.0))))
            )
        );
        let p = parse_observable("(q + p)^2 - 2*q*p", 1).unwrap().polynomial::<f64>().unwrap();
        assert_eq!(p.terms.get(&vec![2, 0]), Some(&1.0));
        assert_eq!(p.terms.get(&vec![0, 2]), Some(&1.0));
        assert_eq!(p.terms.get(&vec![1, 1]), Some(&0.0));
        assert!(parse_observable("cos(q)", 1).unwrap().polynomial::<f64>().is_none());
        assert_eq!(parse_observable("cos(0)", 1).unwrap().degree(), Some(0));
    }

    #[test]
    fn printing_round_trips() {
        for src in ["q^4 + 1", "0.25*(p^2 - q)^3", "cos(q)", "exp(sin(q))", "-q*-2 + p/3", "q^-2 - 1e-7"] {
            let a = parse_observable(src, 1).unwrap();
            let again = parse_observable(&a.to_string(), 1).unwrap();
            assert_eq!(a, again, "{src} -> {a}");
        }
    }

    fn arb_expr(dim: usize) -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![(-100.0..100.0f64).prop_map(Expr::Const), (0..2 * dim).prop_map(Expr::Var),];
        leaf.prop_recursive(5, 40, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Div(Box::new(a), Box::new(b))),
                (inner.clone(), -3i32..5).prop_map(|(a, n)| Expr::Pow(Box::new(a), n)),
                (inner, 0usize..3).prop_map(|(a, f)| Expr::Call([Func::Sin, Func::Cos, Func::Exp][f], Box::new(a))),
            ]
        })
    }

    proptest! {
        #[test]
        fn round_trip_random_trees(e in arb_expr(2)) {
            let a = Observable::from_expr(e, 2);
            let printed = a.to_string();
            let again = parse_observable(&printed, 2).unwrap();
            prop_assert_eq!(a, again);
        }
    }
}
