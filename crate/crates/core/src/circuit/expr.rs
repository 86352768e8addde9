use super::closure::OdeClosure;
use super::smooth;
use crate::poly::{rational_to_f64, MultiPoly, Rational};
use num_traits::Signed;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("variable {index} out of range ({available} provided)")]
    VarOutOfRange { index: usize, available: usize },
    #[error("{prim} expects {expected} argument(s), got {found}")]
    BadArity { prim: String, expected: String, found: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("closure evaluation failed: {0}")]
    Closure(String),
}

/// Primitive generable functions.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prim {
    Tanh,
    /// `1 - tanh(u)^2`, kept exact where `tanh` saturates.
    Sech2,
    Sin,
    Cos,
    /// Marked unbounded: lowering refuses it unless explicitly allowed.
    Exp,
    /// Natural logarithm on (0, inf).
    Ln,
    /// Reciprocal on (0, inf).
    Recip,
    /// Smooth infinity norm: `|x| <= norm <= |x| + delta`.
    Norm {
        #[serde(with = "rat_serde")]
        delta: Rational,
    },
    /// Smooth maximum: `max <= mx <= max + delta`.
    Mx {
        #[serde(with = "rat_serde")]
        delta: Rational,
    },
    /// Low-to-high switch over `[a, b]`, arguments `(t, mu, x)`.
    Lxh {
        #[serde(with = "rat_serde")]
        a: Rational,
        #[serde(with = "rat_serde")]
        b: Rational,
    },
    /// High-to-low switch over `[a, b]`, arguments `(t, mu, x)`.
    Hxl {
        #[serde(with = "rat_serde")]
        a: Rational,
        #[serde(with = "rat_serde")]
        b: Rational,
    },
    /// Component of the solution of an autonomous system, argument is time.
    #[serde(skip)]
    Closure(Arc<OdeClosure>, usize),
}

impl PartialEq for Prim {
    fn eq(&self, other: &Self) -> bool {
        use Prim::*;
        match (self, other) {
            (Tanh, Tanh) | (Sech2, Sech2) | (Sin, Sin) | (Cos, Cos) | (Exp, Exp) | (Ln, Ln) | (Recip, Recip) => true,
            (Norm { delta: a }, Norm { delta: b }) | (Mx { delta: a }, Mx { delta: b }) => a == b,
            (Lxh { a, b }, Lxh { a: c, b: d }) | (Hxl { a, b }, Hxl { a: c, b: d }) => a == c && b == d,
            (Closure(f, i), Closure(g, j)) => Arc::ptr_eq(f, g) && i == j,
            _ => false,
        }
    }
}

impl Prim {
    pub fn name(&self) -> &'static str {
        match self {
            Prim::Tanh => "tanh",
            Prim::Sech2 => "sech2",
            Prim::Sin => "sin",
            Prim::Cos => "cos",
            Prim::Exp => "exp",
            Prim::Ln => "ln",
            Prim::Recip => "recip",
            Prim::Norm { .. } => "norm",
            Prim::Mx { .. } => "mx",
            Prim::Lxh { .. } => "lxh",
            Prim::Hxl { .. } => "hxl",
            Prim::Closure(..) => "closure",
        }
    }

    pub fn is_unbounded(&self) -> bool {
        matches!(self, Prim::Exp)
    }

    pub fn check_arity(&self, n: usize) -> Result<(), ExprError> {
        let (ok, expected) = match self {
            Prim::Norm { .. } | Prim::Mx { .. } => (n >= 1, "at least 1"),
            Prim::Lxh { .. } | Prim::Hxl { .. } => (n == 3, "3"),
            _ => (n == 1, "1"),
        };
        if ok {
            Ok(())
        } else {
            Err(ExprError::BadArity { prim: self.name().into(), expected: expected.into(), found: n })
        }
    }

    pub fn check_params(&self) -> Result<(), ExprError> {
        match self {
            Prim::Norm { delta } | Prim::Mx { delta } if !delta.is_positive() => {
                Err(ExprError::Param(format!("{} needs delta > 0", self.name())))
            }
            Prim::Lxh { a, b } | Prim::Hxl { a, b } if a >= b => {
                Err(ExprError::Param(format!("{} needs a < b", self.name())))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expr {
    Var(usize),
    Time,
    Const(#[serde(with = "rat_serde")] Rational),
    Poly(Arc<MultiPoly>, Vec<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Pow(Box<Expr>, u32),
    Prim(Prim, Vec<Expr>),
}

pub(crate) mod rat_serde {
    use crate::poly::Rational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&r.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl Expr {
    pub fn var(i: usize) -> Expr {
        Expr::Var(i)
    }

    pub fn int(n: i64) -> Expr {
        Expr::Const(crate::poly::rat(n))
    }

    pub fn rat(r: Rational) -> Expr {
        Expr::Const(r)
    }

    /// Exact rational embedding of a finite double.
    pub fn num(x: f64) -> Expr {
        Expr::Const(crate::poly::rational_from_f64(x).expect("finite constant"))
    }

    pub fn prim(p: Prim, args: Vec<Expr>) -> Result<Expr, ExprError> {
        p.check_arity(args.len())?;
        p.check_params()?;
        Ok(Expr::Prim(p, args))
    }

    pub fn tanh(self) -> Expr {
        Expr::Prim(Prim::Tanh, vec![self])
    }

    pub fn sech2(self) -> Expr {
        Expr::Prim(Prim::Sech2, vec![self])
    }

    pub fn sin(self) -> Expr {
        Expr::Prim(Prim::Sin, vec![self])
    }

    pub fn cos(self) -> Expr {
        Expr::Prim(Prim::Cos, vec![self])
    }

    pub fn exp(self) -> Expr {
        Expr::Prim(Prim::Exp, vec![self])
    }

    pub fn ln(self) -> Expr {
        Expr::Prim(Prim::Ln, vec![self])
    }

    pub fn recip(self) -> Expr {
        Expr::Prim(Prim::Recip, vec![self])
    }

    pub fn pow(self, k: u32) -> Expr {
        Expr::Pow(Box::new(self), k)
    }

    /// Polynomial applied to argument expressions.
    pub fn poly(p: MultiPoly, args: Vec<Expr>) -> Result<Expr, ExprError> {
        if p.arity() != args.len() {
            return Err(ExprError::BadArity {
                prim: "poly".into(),
                expected: p.arity().to_string(),
                found: args.len(),
            });
        }
        Ok(Expr::Poly(Arc::new(p), args))
    }

    /// Polynomial over the first `p.arity()` variables.
    pub fn poly_in_vars(p: MultiPoly) -> Expr {
        let args = (0..p.arity()).map(Expr::Var).collect();
        Expr::Poly(Arc::new(p), args)
    }

    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Var(_) | Expr::Time | Expr::Const(_) => vec![],
            Expr::Poly(_, c) | Expr::Prim(_, c) => c.iter().collect(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => vec![a, b],
            Expr::Neg(a) | Expr::Pow(a, _) => vec![a],
        }
    }

    pub fn any(&self, pred: &dyn Fn(&Expr) -> bool) -> bool {
        pred(self) || self.children().into_iter().any(|c| c.any(pred))
    }

    pub fn uses_time(&self) -> bool {
        self.any(&|e| matches!(e, Expr::Time))
    }

    pub fn max_var(&self) -> Option<usize> {
        let own = if let Expr::Var(i) = self { Some(*i) } else { None };
        self.children().into_iter().filter_map(Expr::max_var).chain(own).max()
    }

    pub fn uses_var_at_least(&self, k: usize) -> bool {
        self.any(&|e| matches!(e, Expr::Var(i) if *i >= k))
    }

    pub fn has_unbounded(&self) -> bool {
        self.any(&|e| matches!(e, Expr::Prim(p, _) if p.is_unbounded()))
    }

    pub fn is_constant(&self) -> bool {
        !self.any(&|e| matches!(e, Expr::Var(_) | Expr::Time))
    }

    /// Replaces variables and time by the given expressions.
    pub fn substitute(&self, vars: &[Expr], time: Option<&Expr>) -> Expr {
        match self {
            Expr::Var(i) => vars.get(*i).cloned().unwrap_or(Expr::Var(*i)),
            Expr::Time => time.cloned().unwrap_or(Expr::Time),
            Expr::Const(_) => self.clone(),
            Expr::Poly(p, c) => Expr::Poly(p.clone(), c.iter().map(|e| e.substitute(vars, time)).collect()),
            Expr::Prim(p, c) => Expr::Prim(p.clone(), c.iter().map(|e| e.substitute(vars, time)).collect()),
            Expr::Add(a, b) => Expr::Add(Box::new(a.substitute(vars, time)), Box::new(b.substitute(vars, time))),
            Expr::Sub(a, b) => Expr::Sub(Box::new(a.substitute(vars, time)), Box::new(b.substitute(vars, time))),
            Expr::Mul(a, b) => Expr::Mul(Box::new(a.substitute(vars, time)), Box::new(b.substitute(vars, time))),
            Expr::Neg(a) => Expr::Neg(Box::new(a.substitute(vars, time))),
            Expr::Pow(a, k) => Expr::Pow(Box::new(a.substitute(vars, time)), *k),
        }
    }

    pub fn eval(&self, vars: &[f64], t: f64) -> Result<f64, ExprError> {
        Ok(match self {
            Expr::Var(i) => *vars.get(*i).ok_or(ExprError::VarOutOfRange { index: *i, available: vars.len() })?,
            Expr::Time => t,
            Expr::Const(c) => rational_to_f64(c),
            Expr::Poly(p, c) => {
                let args: Result<Vec<f64>, _> = c.iter().map(|e| e.eval(vars, t)).collect();
                p.compile().eval(&args?)
            }
            Expr::Add(a, b) => a.eval(vars, t)? + b.eval(vars, t)?,
            Expr::Sub(a, b) => a.eval(vars, t)? - b.eval(vars, t)?,
            Expr::Mul(a, b) => a.eval(vars, t)? * b.eval(vars, t)?,
            Expr::Neg(a) => -a.eval(vars, t)?,
            Expr::Pow(a, k) => a.eval(vars, t)?.powi(*k as i32),
            Expr::Prim(p, c) => {
                let args: Result<Vec<f64>, _> = c.iter().map(|e| e.eval(vars, t)).collect();
                eval_prim(p, &args?)?
            }
        })
    }

    /// Rewrites norm, mx, lxh and hxl into tanh, ln and arithmetic.
    pub fn expand(&self) -> Expr {
        match self {
            Expr::Var(_) | Expr::Time | Expr::Const(_) => self.clone(),
            Expr::Poly(p, c) => Expr::Poly(p.clone(), c.iter().map(Expr::expand).collect()),
            Expr::Add(a, b) => Expr::Add(Box::new(a.expand()), Box::new(b.expand())),
            Expr::Sub(a, b) => Expr::Sub(Box::new(a.expand()), Box::new(b.expand())),
            Expr::Mul(a, b) => Expr::Mul(Box::new(a.expand()), Box::new(b.expand())),
            Expr::Neg(a) => Expr::Neg(Box::new(a.expand())),
            Expr::Pow(a, k) => Expr::Pow(Box::new(a.expand()), *k),
            Expr::Prim(p, c) => {
                let args: Vec<Expr> = c.iter().map(Expr::expand).collect();
                match p {
                    Prim::Norm { delta } => smooth::norm_expr(&args, delta),
                    Prim::Mx { delta } => smooth::mx_expr(&args, delta),
                    Prim::Lxh { a, b } => smooth::lxh_expr(a, b, &args[0], &args[1], &args[2], true),
                    Prim::Hxl { a, b } => smooth::lxh_expr(a, b, &args[0], &args[1], &args[2], false),
                    _ => Expr::Prim(p.clone(), args),
                }
            }
        }
    }

    /// Renders with a custom variable namer.
    pub fn display_with<'a>(&'a self, names: &'a dyn Fn(usize) -> String) -> impl fmt::Display + 'a {
        Named { e: self, names }
    }
}

pub fn eval_prim(p: &Prim, a: &[f64]) -> Result<f64, ExprError> {
    p.check_arity(a.len())?;
    Ok(match p {
        Prim::Tanh => a[0].tanh(),
        Prim::Sech2 => {
            let e = (-2.0 * a[0].abs()).exp();
            4.0 * e / ((1.0 + e) * (1.0 + e))
        }
        Prim::Sin => a[0].sin(),
        Prim::Cos => a[0].cos(),
        Prim::Exp => a[0].exp(),
        Prim::Ln => {
            if a[0] <= 0.0 {
                return Err(ExprError::Domain(format!("ln of {}", a[0])));
            }
            a[0].ln()
        }
        Prim::Recip => {
            if a[0] <= 0.0 {
                return Err(ExprError::Domain(format!("recip of {}", a[0])));
            }
            1.0 / a[0]
        }
        Prim::Norm { delta } => smooth::norm(a, rational_to_f64(delta)),
        Prim::Mx { delta } => smooth::mx(a, rational_to_f64(delta)),
        Prim::Lxh { a: lo, b: hi } => smooth::lxh(rational_to_f64(lo), rational_to_f64(hi), a[0], a[1], a[2]),
        Prim::Hxl { a: lo, b: hi } => smooth::hxl(rational_to_f64(lo), rational_to_f64(hi), a[0], a[1], a[2]),
        Prim::Closure(c, k) => c.eval(a[0]).map_err(|e| ExprError::Closure(e.to_string()))?[*k],
    })
}

macro_rules! expr_op {
    ($tr:ident, $m:ident, $v:ident) => {
        impl std::ops::$tr for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                Expr::$v(Box::new(self), Box::new(rhs))
            }
        }
    };
}
expr_op!(Add, add, Add);
expr_op!(Sub, sub, Sub);
expr_op!(Mul, mul, Mul);

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }
}

struct Named<'a> {
    e: &'a Expr,
    names: &'a dyn Fn(usize) -> String,
}

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => 1,
        Expr::Mul(..) => 2,
        Expr::Neg(..) => 3,
        Expr::Const(c) if c.is_negative() || !c.is_integer() => 2,
        Expr::Pow(..) => 4,
        _ => 5,
    }
}

pub(crate) fn fmt_rat(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl Named<'_> {
    fn sub(&self, e: &Expr, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let inner = Named { e, names: self.names };
        if prec(e) < min {
            write!(f, "({inner})")
        } else {
            write!(f, "{inner}")
        }
    }

    fn list(&self, xs: &[Expr], f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in xs.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            self.sub(c, 0, f)?;
        }
        Ok(())
    }
}

impl fmt::Display for Named<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.e {
            Expr::Var(i) => write!(f, "{}", (self.names)(*i)),
            Expr::Time => write!(f, "t"),
            Expr::Const(c) => write!(f, "{}", fmt_rat(c)),
            Expr::Poly(p, c) => {
                write!(f, "{{{p}}}(")?;
                self.list(c, f)?;
                write!(f, ")")
            }
            Expr::Add(a, b) => {
                self.sub(a, 1, f)?;
                write!(f, " + ")?;
                self.sub(b, 2, f)
            }
            Expr::Sub(a, b) => {
                self.sub(a, 1, f)?;
                write!(f, " - ")?;
                self.sub(b, 2, f)
            }
            Expr::Mul(a, b) => {
                self.sub(a, 2, f)?;
                write!(f, "*")?;
                self.sub(b, 3, f)
            }
            Expr::Neg(a) => {
                write!(f, "-")?;
                self.sub(a, 3, f)
            }
            Expr::Pow(a, k) => {
                self.sub(a, 5, f)?;
                write!(f, "^{k}")
            }
            Expr::Prim(p, c) => {
                match p {
                    Prim::Norm { delta } | Prim::Mx { delta } => write!(f, "{}[delta={}](", p.name(), fmt_rat(delta))?,
                    Prim::Lxh { a, b } | Prim::Hxl { a, b } => {
                        write!(f, "{}[I=({}, {})](", p.name(), fmt_rat(a), fmt_rat(b))?
                    }
                    Prim::Closure(cl, k) => write!(f, "closure@{:p}[{}](", Arc::as_ptr(cl), k)?,
                    _ => write!(f, "{}(", p.name())?,
                }
                self.list(c, f)?;
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = |i: usize| format!("x{}", i + 1);
        write!(f, "{}", Named { e: self, names: &names })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_uses_precedence() {
        let e = (Expr::var(0) + Expr::var(1)) * Expr::var(0).tanh();
        assert_eq!(e.to_string(), "(x1 + x2)*tanh(x1)");
        let e = Expr::var(0) - (Expr::var(1) - Expr::int(1));
        assert_eq!(e.to_string(), "x1 - (x2 - 1)");
        let e = (-Expr::var(0)).pow(2);
        assert_eq!(e.to_string(), "(-x1)^2");
    }

    #[test]
    fn eval_basic() {
        let e = Expr::Time.sin() * Expr::var(0).tanh();
        let v = e.eval(&[0.5], 1.0).unwrap();
        assert!((v - 1f64.sin() * 0.5f64.tanh()).abs() < 1e-15);
        assert!(Expr::var(3).eval(&[1.0], 0.0).is_err());
        assert!(Expr::var(0).ln().eval(&[-1.0], 0.0).is_err());
    }

    #[test]
    fn prim_validation() {
        assert!(Expr::prim(Prim::Tanh, vec![]).is_err());
        assert!(Expr::prim(Prim::Mx { delta: crate::poly::rat(0) }, vec![Expr::int(1)]).is_err());
        let lxh = Prim::Lxh { a: crate::poly::rat(2), b: crate::poly::rat(1) };
        assert!(Expr::prim(lxh, vec![Expr::Time, Expr::int(1), Expr::int(1)]).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let e = Expr::prim(
            Prim::Mx { delta: crate::poly::ratio(1, 2) },
            vec![Expr::var(0), Expr::var(1).tanh() - Expr::int(3)],
        )
        .unwrap();
        let s = serde_json::to_string(&e).unwrap();
        let back: Expr = serde_json::from_str(&s).unwrap();
        assert_eq!(back, e);
    }
}
