//! Symbolic scalar fields over chart coordinates.
//!
//! Expressions are small trees over numeric literals, coordinates `x1..xn`,
//! the four arithmetic operators, non-negative integer powers, unary negation
//! and `sin`/`cos`/`exp`. They carry every coordinate formula used elsewhere
//! in the crate: bivector entries, anchors, structure functions, Christoffel
//! coefficients, group actions and form coefficients.
//!
//! Trees built by [`parse_expr`] are kept verbatim, so printing and
//! re-parsing returns a structurally equal tree. Trees built by
//! differentiation and substitution go through the folding constructors
//! ([`Expr::add`], [`Expr::mul`], ...) which drop additive zeros and
//! multiplicative ones but perform no further simplification.

mod parse;

use std::fmt;

use thiserror::Error;

pub use parse::{parse_expr, ParseError};

/// Elementary functions admitted by the grammar.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
        }
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Exp => v.exp(),
        }
    }
}

/// Expression tree. Coordinates are zero-based internally and print as
/// `x{index + 1}`.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("non-finite value produced by `{0}`")]
    Domain(&'static str),
    #[error("coordinate x{index} is not available in a point of dimension {dim}")]
    MissingCoordinate { index: usize, dim: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ComposeError {
    #[error("expression references x{index} but only {len} substitutions were given")]
    DimensionMismatch { index: usize, len: usize },
}

fn finite(v: f64, what: &'static str) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::Domain(what))
    }
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn zero() -> Expr {
        Expr::Num(0.0)
    }

    pub fn one() -> Expr {
        Expr::Num(1.0)
    }

    /// Zero-based coordinate.
    pub fn var(index: usize) -> Expr {
        Expr::Var(index)
    }

    pub fn as_num(&self) -> Option<f64> {
        match self {
            Expr::Num(v) => Some(*v),
            _ => None,
        }
    }

    /// Structural zero test (a literal `0`).
    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Num(v) if *v == 0.0)
    }

    fn is_one(&self) -> bool {
        matches!(self, Expr::Num(v) if *v == 1.0)
    }

    /// True when no coordinate occurs in the tree.
    pub fn is_constant(&self) -> bool {
        self.max_var().is_none()
    }

    /// Largest zero-based coordinate index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Num(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.max_var(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                match (a.max_var(), b.max_var()) {
                    (Some(x), Some(y)) => Some(x.max(y)),
                    (x, y) => x.or(y),
                }
            }
        }
    }

    /// Number of nodes in the tree.
    pub fn has_division(&self) -> bool {
        match self {
            Expr::Num(_) | Expr::Var(_) => false,
            Expr::Div(..) => true,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.has_division(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => a.has_division() || b.has_division(),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Var(_) => 1,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => 1 + a.size(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                1 + a.size() + b.size()
            }
        }
    }

    // Folding constructors.

    pub fn neg(a: Expr) -> Expr {
        match a {
            Expr::Num(v) => Expr::Num(-v),
            Expr::Neg(inner) => *inner,
            other => Expr::Neg(Box::new(other)),
        }
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        match (a.as_num(), b.as_num()) {
            (Some(x), Some(y)) => Expr::Num(x + y),
            _ if a.is_zero() => b,
            _ if b.is_zero() => a,
            _ => Expr::Add(Box::new(a), Box::new(b)),
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (a.as_num(), b.as_num()) {
            (Some(x), Some(y)) => Expr::Num(x - y),
            _ if b.is_zero() => a,
            _ if a.is_zero() => Expr::neg(b),
            _ => Expr::Sub(Box::new(a), Box::new(b)),
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (a.as_num(), b.as_num()) {
            (Some(x), Some(y)) => Expr::Num(x * y),
            _ if (a.is_zero() && !b.has_division()) || (b.is_zero() && !a.has_division()) => Expr::zero(),
            _ if a.is_one() => b,
            _ if b.is_one() => a,
            _ => Expr::Mul(Box::new(a), Box::new(b)),
        }
    }

    /// Division; a literal zero denominator is kept so evaluation reports it.
    /// Folding never discards a subtree containing a division, so folded
    /// trees fail exactly where the unfolded ones do.
    pub fn div(a: Expr, b: Expr) -> Expr {
        match (a.as_num(), b.as_num()) {
            (Some(x), Some(y)) if y != 0.0 => Expr::Num(x / y),
            _ if b.is_one() => a,
            _ => Expr::Div(Box::new(a), Box::new(b)),
        }
    }

    pub fn powi(a: Expr, n: u32) -> Expr {
        match (n, a.as_num()) {
            (0, _) if !a.has_division() => Expr::one(),
            (1, _) => a,
            (_, Some(x)) => Expr::Num(x.powi(n as i32)),
            _ => Expr::Pow(Box::new(a), n),
        }
    }

    pub fn call(f: Func, a: Expr) -> Expr {
        match a.as_num() {
            Some(x) if f.apply(x).is_finite() => Expr::Num(f.apply(x)),
            _ => Expr::Call(f, Box::new(a)),
        }
    }

    /// Sum of a sequence, folding zeros.
    pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
        terms.into_iter().fold(Expr::zero(), Expr::add)
    }

    /// IEEE double evaluation; left operands are evaluated before right ones.
    pub fn eval(&self, point: &[f64]) -> Result<f64, EvalError> {
        match self {
            Expr::Num(v) => Ok(*v),
            Expr::Var(i) => point.get(*i).copied().ok_or(EvalError::MissingCoordinate {
                index: i + 1,
                dim: point.len(),
            }),
            Expr::Neg(a) => Ok(-a.eval(point)?),
            Expr::Add(a, b) => {
                let x = a.eval(point)?;
                finite(x + b.eval(point)?, "+")
            }
            Expr::Sub(a, b) => {
                let x = a.eval(point)?;
                finite(x - b.eval(point)?, "-")
            }
            Expr::Mul(a, b) => {
                let x = a.eval(point)?;
                finite(x * b.eval(point)?, "*")
            }
            Expr::Div(a, b) => {
                let x = a.eval(point)?;
                let y = b.eval(point)?;
                if y == 0.0 {
                    return Err(EvalError::DivisionByZero);
                }
                finite(x / y, "/")
            }
            Expr::Pow(a, n) => finite(a.eval(point)?.powi(*n as i32), "^"),
            Expr::Call(f, a) => finite(f.apply(a.eval(point)?), f.name()),
        }
    }

    /// Exact symbolic partial derivative with respect to the zero-based
    /// coordinate `i`.
    pub fn diff(&self, i: usize) -> Expr {
        match self {
            Expr::Num(_) => Expr::zero(),
            Expr::Var(j) => {
                if *j == i {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Expr::Neg(a) => Expr::neg(a.diff(i)),
            Expr::Add(a, b) => Expr::add(a.diff(i), b.diff(i)),
            Expr::Sub(a, b) => Expr::sub(a.diff(i), b.diff(i)),
            Expr::Mul(a, b) => Expr::add(
                Expr::mul(a.diff(i), (**b).clone()),
                Expr::mul((**a).clone(), b.diff(i)),
            ),
            Expr::Div(a, b) => Expr::div(
                Expr::sub(
                    Expr::mul(a.diff(i), (**b).clone()),
                    Expr::mul((**a).clone(), b.diff(i)),
                ),
                Expr::powi((**b).clone(), 2),
            ),
            Expr::Pow(_, 0) => Expr::zero(),
            Expr::Pow(a, n) => Expr::mul(
                Expr::mul(Expr::num(*n as f64), Expr::powi((**a).clone(), n - 1)),
                a.diff(i),
            ),
            Expr::Call(f, a) => {
                let outer = match f {
                    Func::Sin => Expr::call(Func::Cos, (**a).clone()),
                    Func::Cos => Expr::neg(Expr::call(Func::Sin, (**a).clone())),
                    Func::Exp => self.clone(),
                };
                Expr::mul(outer, a.diff(i))
            }
        }
    }

    /// Replace every coordinate `x_{i+1}` by `substitution[i]`.
    pub fn compose(&self, substitution: &[Expr]) -> Result<Expr, ComposeError> {
        if let Some(m) = self.max_var() {
            if m >= substitution.len() {
                return Err(ComposeError::DimensionMismatch {
                    index: m + 1,
                    len: substitution.len(),
                });
            }
        }
        Ok(self.substitute(substitution))
    }

    fn substitute(&self, s: &[Expr]) -> Expr {
        match self {
            Expr::Num(v) => Expr::Num(*v),
            Expr::Var(i) => s[*i].clone(),
            Expr::Neg(a) => Expr::neg(a.substitute(s)),
            Expr::Add(a, b) => Expr::add(a.substitute(s), b.substitute(s)),
            Expr::Sub(a, b) => Expr::sub(a.substitute(s), b.substitute(s)),
            Expr::Mul(a, b) => Expr::mul(a.substitute(s), b.substitute(s)),
            Expr::Div(a, b) => Expr::div(a.substitute(s), b.substitute(s)),
            Expr::Pow(a, n) => Expr::powi(a.substitute(s), *n),
            Expr::Call(f, a) => Expr::call(*f, a.substitute(s)),
        }
    }

    /// Binding strength used by the printer: 1 sums, 2 products,
    /// 3 negations, 4 powers, 5 atoms.
    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Num(v) if v.is_sign_negative() => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        }
    }

    fn write_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            write!(f, "(")?;
            self.write_at(f, 0)?;
            return write!(f, ")");
        }
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Neg(a) => {
                write!(f, "-")?;
                a.write_at(f, 4)
            }
            Expr::Add(a, b) => {
                a.write_at(f, 1)?;
                write!(f, " + ")?;
                b.write_at(f, 2)
            }
            Expr::Sub(a, b) => {
                a.write_at(f, 1)?;
                write!(f, " - ")?;
                b.write_at(f, 2)
            }
            Expr::Mul(a, b) => {
                a.write_at(f, 2)?;
                write!(f, "*")?;
                b.write_at(f, 3)
            }
            Expr::Div(a, b) => {
                a.write_at(f, 2)?;
                write!(f, "/")?;
                b.write_at(f, 3)
            }
            Expr::Pow(a, n) => {
                a.write_at(f, 5)?;
                write!(f, "^{n}")
            }
            Expr::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                a.write_at(f, 0)?;
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_at(f, 0)
    }
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::add(self, rhs)
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::sub(self, rhs)
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::mul(self, rhs)
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

/// Evaluate `e` at `point`.
pub fn eval_expr(e: &Expr, point: &[f64]) -> Result<f64, EvalError> {
    e.eval(point)
}

/// Partial derivative with respect to the one-based coordinate `i`.
pub fn diff_expr(e: &Expr, i: usize) -> Expr {
    assert!(i >= 1, "coordinate indices are one-based");
    e.diff(i - 1)
}

/// Substitute one expression per coordinate.
pub fn compose_expr(e: &Expr, substitution: &[Expr]) -> Result<Expr, ComposeError> {
    e.compose(substitution)
}

/// Identity substitution `[x1, ..., xn]`.
pub fn coordinates(n: usize) -> Vec<Expr> {
    (0..n).map(Expr::Var).collect()
}
