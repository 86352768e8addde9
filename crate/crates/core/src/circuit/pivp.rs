use super::expr::{Expr, ExprError};
use crate::poly::{MultiPoly, PolyVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SystemError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("output index {0} out of range")]
    Output(usize),
    #[error("initial condition: {0}")]
    Init(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Polynomial initial value problem `y' = p(y, u(t))`, `y(0) = q(x)`.
///
/// The right-hand side ranges over the states followed by the external
/// inputs. Initial values are expressions over the `n_args` arguments;
/// for a plain polynomial system they are all polynomial nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pivp {
    pub dim: usize,
    pub input_arity: usize,
    pub n_args: usize,
    pub rhs: PolyVector,
    pub init: Vec<Expr>,
    pub outputs: Vec<usize>,
}

impl Pivp {
    pub fn new(
        rhs: PolyVector,
        input_arity: usize,
        n_args: usize,
        init: Vec<Expr>,
        outputs: Vec<usize>,
    ) -> Result<Pivp, SystemError> {
        let dim = rhs.len();
        let p = Pivp { dim, input_arity, n_args, rhs, init, outputs };
        p.validate()?;
        Ok(p)
    }

    /// Constant initial condition.
    pub fn with_constant_init(rhs: PolyVector, input_arity: usize, y0: &[f64], outputs: Vec<usize>) -> Result<Pivp, SystemError> {
        let init = y0.iter().map(|&v| Expr::num(v)).collect();
        Pivp::new(rhs, input_arity, 0, init, outputs)
    }

    /// Polynomial initial condition `q(x)`.
    pub fn with_poly_init(rhs: PolyVector, input_arity: usize, q: PolyVector, outputs: Vec<usize>) -> Result<Pivp, SystemError> {
        let n = q.arity;
        let init = q.components.into_iter().map(Expr::poly_in_vars).collect();
        Pivp::new(rhs, input_arity, n, init, outputs)
    }

    pub fn validate(&self) -> Result<(), SystemError> {
        if self.rhs.len() != self.dim {
            return Err(SystemError::Dimension(format!("{} right-hand sides for dimension {}", self.rhs.len(), self.dim)));
        }
        if self.rhs.arity != self.dim + self.input_arity {
            return Err(SystemError::Dimension(format!(
                "right-hand side arity {} but {} states and {} inputs",
                self.rhs.arity, self.dim, self.input_arity
            )));
        }
        if self.init.len() != self.dim {
            return Err(SystemError::Init(format!("{} initial values for dimension {}", self.init.len(), self.dim)));
        }
        for e in &self.init {
            if e.uses_time() {
                return Err(SystemError::Init("initial values cannot depend on time".into()));
            }
            if e.uses_var_at_least(self.n_args) {
                return Err(SystemError::Init(format!("initial value uses more than {} arguments", self.n_args)));
            }
        }
        for &o in &self.outputs {
            if o >= self.dim {
                return Err(SystemError::Output(o));
            }
        }
        Ok(())
    }

    pub fn initial_state(&self, args: &[f64]) -> Result<Vec<f64>, SystemError> {
        if args.len() != self.n_args {
            return Err(SystemError::Init(format!("expected {} arguments, got {}", self.n_args, args.len())));
        }
        self.init.iter().map(|e| e.eval(args, 0.0).map_err(SystemError::from)).collect()
    }

    /// Initial condition as polynomials, when it is one.
    pub fn init_polys(&self) -> Option<PolyVector> {
        let mut comps = Vec::new();
        for e in &self.init {
            comps.push(as_poly(e, self.n_args)?);
        }
        PolyVector::new(self.n_args, comps).ok()
    }

    pub fn degree(&self) -> u32 {
        self.rhs.degree()
    }

    /// Largest coefficient sum over the components.
    pub fn sigma(&self) -> f64 {
        crate::poly::rational_to_f64(&self.rhs.sigma())
    }

    pub fn to_expr_system(&self) -> ExprSystem {
        ExprSystem {
            dim: self.dim,
            input_arity: self.input_arity,
            n_args: self.n_args,
            rhs: self.rhs.components.iter().cloned().map(Expr::poly_in_vars).collect(),
            init: self.init.clone(),
            outputs: self.outputs.clone(),
        }
    }
}

/// Best-effort conversion of an expression to a polynomial over `arity` variables.
pub fn as_poly(e: &Expr, arity: usize) -> Option<MultiPoly> {
    Some(match e {
        Expr::Var(i) if *i < arity => MultiPoly::var(arity, *i),
        Expr::Var(_) | Expr::Time | Expr::Prim(..) => return None,
        Expr::Const(c) => MultiPoly::constant(arity, c.clone()),
        Expr::Poly(p, c) => {
            let subs: Option<Vec<MultiPoly>> = c.iter().map(|x| as_poly(x, arity)).collect();
            let subs = subs?;
            if subs.is_empty() {
                p.extend_arity(arity)
            } else {
                p.compose(&subs).ok()?
            }
        }
        Expr::Add(a, b) => as_poly(a, arity)? + as_poly(b, arity)?,
        Expr::Sub(a, b) => as_poly(a, arity)? - as_poly(b, arity)?,
        Expr::Mul(a, b) => as_poly(a, arity)? * as_poly(b, arity)?,
        Expr::Neg(a) => as_poly(a, arity)?.neg(),
        Expr::Pow(a, k) => as_poly(a, arity)?.pow(*k),
    })
}

/// Initial value problem with a generable right-hand side.
///
/// Variables `0..dim` are states, `dim..dim + input_arity` are inputs, and
/// `Expr::Time` is the time variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExprSystem {
    pub dim: usize,
    pub input_arity: usize,
    pub n_args: usize,
    pub rhs: Vec<Expr>,
    pub init: Vec<Expr>,
    pub outputs: Vec<usize>,
}

impl ExprSystem {
    pub fn new(rhs: Vec<Expr>, input_arity: usize, n_args: usize, init: Vec<Expr>, outputs: Vec<usize>) -> Result<Self, SystemError> {
        let s = ExprSystem { dim: rhs.len(), input_arity, n_args, rhs, init, outputs };
        s.validate()?;
        Ok(s)
    }

    pub fn with_constant_init(rhs: Vec<Expr>, input_arity: usize, y0: &[f64], outputs: Vec<usize>) -> Result<Self, SystemError> {
        let init = y0.iter().map(|&v| Expr::num(v)).collect();
        Self::new(rhs, input_arity, 0, init, outputs)
    }

    pub fn validate(&self) -> Result<(), SystemError> {
        if self.init.len() != self.dim {
            return Err(SystemError::Init(format!("{} initial values for dimension {}", self.init.len(), self.dim)));
        }
        for e in &self.rhs {
            if e.uses_var_at_least(self.dim + self.input_arity) {
                return Err(SystemError::Dimension("right-hand side uses an undeclared variable".into()));
            }
        }
        for e in &self.init {
            if e.uses_time() || e.uses_var_at_least(self.n_args) {
                return Err(SystemError::Init("initial value uses time or an undeclared argument".into()));
            }
        }
        for &o in &self.outputs {
            if o >= self.dim {
                return Err(SystemError::Output(o));
            }
        }
        Ok(())
    }

    pub fn initial_state(&self, args: &[f64]) -> Result<Vec<f64>, SystemError> {
        if args.len() != self.n_args {
            return Err(SystemError::Init(format!("expected {} arguments, got {}", self.n_args, args.len())));
        }
        self.init.iter().map(|e| e.eval(args, 0.0).map_err(SystemError::from)).collect()
    }

    pub fn eval_rhs(&self, t: f64, y: &[f64], u: &[f64], out: &mut [f64]) -> Result<(), ExprError> {
        let mut vars = Vec::with_capacity(y.len() + u.len());
        vars.extend_from_slice(y);
        vars.extend_from_slice(u);
        for (o, e) in out.iter_mut().zip(&self.rhs) {
            *o = e.eval(&vars, t)?;
        }
        Ok(())
    }

    pub fn has_unbounded(&self) -> bool {
        self.rhs.iter().chain(&self.init).any(Expr::has_unbounded)
    }

    /// Variable names `y1.., u1..` for diagnostics.
    pub fn var_name(&self, i: usize) -> String {
        if i < self.dim {
            format!("y{}", i + 1)
        } else {
            format!("u{}", i - self.dim + 1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::MultiPoly;

    fn sine() -> Pivp {
        let rhs = PolyVector::new(2, vec!["x2".parse().unwrap(), MultiPoly::parse_with_arity("-x1", 2).unwrap()]).unwrap();
        Pivp::with_constant_init(rhs, 0, &[0.0, 1.0], vec![0]).unwrap()
    }

    #[test]
    fn validates_shapes() {
        let p = sine();
        assert_eq!(p.initial_state(&[]).unwrap(), vec![0.0, 1.0]);
        assert!(p.init_polys().is_some());
        let mut bad = p.clone();
        bad.outputs = vec![5];
        assert!(bad.validate().is_err());
    }

    #[test]
    fn json_round_trip() {
        let p = sine();
        let s = serde_json::to_string(&p).unwrap();
        let back: Pivp = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
    }
}
