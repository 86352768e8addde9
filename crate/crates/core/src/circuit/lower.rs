//! Lowering of generable systems to polynomial systems.
//!
//! Each primitive node gets auxiliary states whose derivatives are
//! polynomial in the enlarged state: `tanh(u)' = sech2(u) u'` with
//! `sech2(u)' = -2 tanh(u) sech2(u) u'`,
//! `sin(u)' = cos(u) u'`, `cos(u)' = -sin(u) u'`, `exp(u)' = exp(u) u'`,
//! `(1/u)' = -(1/u)^2 u'` and `ln(u)' = (1/u) u'`.

use super::expr::{eval_prim, Expr, ExprError, Prim};
use super::pivp::{ExprSystem, Pivp, SystemError};
use super::OdeClosure;
use crate::poly::{rat, rational_from_f64, MultiPoly, PolyVector};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LowerError {
    #[error("expression uses exp, which is not polynomially bounded; allow it explicitly")]
    Unbounded,
    #[error("an input enters a primitive; initial input values are required")]
    MissingInputValues,
    #[error("closure system must be autonomous without inputs")]
    ClosureInputs,
    #[error("gradient realization needs an expression without time or inputs")]
    NotStatic,
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    System(#[from] SystemError),
}

#[derive(Debug, Clone, Default)]
pub struct LowerOptions {
    /// Accept `exp` nodes.
    pub allow_unbounded: bool,
    /// Input values at the initial time, needed when inputs enter primitives.
    pub input_values: Option<Vec<f64>>,
}

/// Where each primitive's value lives in the lowered state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxEntry {
    pub prim: String,
    pub argument: String,
    pub states: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoweringCert {
    pub original_dim: usize,
    pub aux: Vec<AuxEntry>,
    pub clock: Option<usize>,
    /// Lowered inputs are the original inputs followed by their derivatives.
    pub input_derivatives: bool,
}

impl LoweringCert {
    pub fn aux_state_count(&self) -> usize {
        self.aux.iter().map(|a| a.states.len()).sum()
    }

    /// Signals for the lowered system from signals for the original one.
    pub fn lowered_inputs(&self, inputs: &[crate::sim::InputSignal]) -> Vec<crate::sim::InputSignal> {
        let mut out = inputs.to_vec();
        if self.input_derivatives {
            out.extend(inputs.iter().map(|s| s.derivative()));
        }
        out
    }
}

#[derive(Debug, Clone)]
enum AuxKind {
    Tanh,
    Trig,
    Exp,
    Recip,
    Ln { recip: usize },
    Closure(Arc<OdeClosure>),
}

#[derive(Debug, Clone)]
struct Aux {
    kind: AuxKind,
    child: Expr,
    key: String,
    /// Offset of the first auxiliary variable, relative to the aux block.
    offset: usize,
    width: usize,
}

/// Evaluates primitives whose arguments are constant.
pub fn fold_constants(e: &Expr) -> Result<Expr, ExprError> {
    Ok(match e {
        Expr::Var(_) | Expr::Time | Expr::Const(_) => e.clone(),
        Expr::Poly(p, c) => Expr::Poly(p.clone(), c.iter().map(fold_constants).collect::<Result<_, _>>()?),
        Expr::Add(a, b) => Expr::Add(Box::new(fold_constants(a)?), Box::new(fold_constants(b)?)),
        Expr::Sub(a, b) => Expr::Sub(Box::new(fold_constants(a)?), Box::new(fold_constants(b)?)),
        Expr::Mul(a, b) => Expr::Mul(Box::new(fold_constants(a)?), Box::new(fold_constants(b)?)),
        Expr::Neg(a) => Expr::Neg(Box::new(fold_constants(a)?)),
        Expr::Pow(a, k) => Expr::Pow(Box::new(fold_constants(a)?), *k),
        Expr::Prim(p, c) => {
            let c: Vec<Expr> = c.iter().map(fold_constants).collect::<Result<_, _>>()?;
            if !matches!(p, Prim::Closure(..)) && c.iter().all(Expr::is_constant) {
                let args: Vec<f64> = c.iter().map(|x| x.eval(&[], 0.0)).collect::<Result<_, _>>()?;
                let v = eval_prim(p, &args)?;
                Expr::Const(rational_from_f64(v).ok_or_else(|| ExprError::Domain(format!("{} is not finite", p.name())))?)
            } else {
                Expr::Prim(p.clone(), c)
            }
        }
    })
}

/// Auxiliary variable plan shared by lowering and gradient realization.
struct Plan {
    base: usize,
    aux: Vec<Aux>,
    index: HashMap<String, usize>,
    width: usize,
}

impl Plan {
    fn new(base: usize) -> Self {
        Plan { base, aux: Vec::new(), index: HashMap::new(), width: 0 }
    }

    fn push(&mut self, key: String, kind: AuxKind, child: Expr, width: usize) -> usize {
        if let Some(&i) = self.index.get(&key) {
            return i;
        }
        let a = Aux { kind, child, key: key.clone(), offset: self.width, width };
        self.width += width;
        self.aux.push(a);
        self.index.insert(key, self.aux.len() - 1);
        self.aux.len() - 1
    }

    fn collect(&mut self, e: &Expr) {
        for c in e.children() {
            self.collect(c);
        }
        if let Expr::Prim(p, c) = e {
            let child = &c[0];
            let arg = child.to_string();
            match p {
                Prim::Tanh | Prim::Sech2 => {
                    self.push(format!("tanh:{arg}"), AuxKind::Tanh, child.clone(), 2);
                }
                Prim::Sin | Prim::Cos => {
                    self.push(format!("trig:{arg}"), AuxKind::Trig, child.clone(), 2);
                }
                Prim::Exp => {
                    self.push(format!("exp:{arg}"), AuxKind::Exp, child.clone(), 1);
                }
                Prim::Recip => {
                    self.push(format!("recip:{arg}"), AuxKind::Recip, child.clone(), 1);
                }
                Prim::Ln => {
                    let r = self.push(format!("recip:{arg}"), AuxKind::Recip, child.clone(), 1);
                    self.push(format!("ln:{arg}"), AuxKind::Ln { recip: r }, child.clone(), 1);
                }
                Prim::Closure(cl, _) => {
                    let key = format!("closure@{:p}:{arg}", Arc::as_ptr(cl));
                    self.push(key, AuxKind::Closure(cl.clone()), child.clone(), cl.pivp().dim);
                }
                Prim::Norm { .. } | Prim::Mx { .. } | Prim::Lxh { .. } | Prim::Hxl { .. } => {
                    unreachable!("expanded before lowering")
                }
            }
        }
    }

    fn var_of(&self, p: &Prim, child: &Expr) -> usize {
        let arg = child.to_string();
        let (key, sub) = match p {
            Prim::Tanh => (format!("tanh:{arg}"), 0),
            Prim::Sech2 => (format!("tanh:{arg}"), 1),
            Prim::Sin => (format!("trig:{arg}"), 0),
            Prim::Cos => (format!("trig:{arg}"), 1),
            Prim::Exp => (format!("exp:{arg}"), 0),
            Prim::Recip => (format!("recip:{arg}"), 0),
            Prim::Ln => (format!("ln:{arg}"), 0),
            Prim::Closure(cl, k) => (format!("closure@{:p}:{arg}", Arc::as_ptr(cl)), *k),
            _ => unreachable!("expanded before lowering"),
        };
        let a = &self.aux[self.index[&key]];
        self.base + a.offset + sub
    }
}

/// Variable layout of a polynomial image.
struct Layout {
    /// Number of original states; their variables come first.
    states: usize,
    /// Where original input `j` lives.
    input_var: Vec<usize>,
    clock: Option<usize>,
    arity: usize,
}

fn value(plan: &Plan, lay: &Layout, e: &Expr) -> MultiPoly {
    let n = lay.arity;
    match e {
        Expr::Var(i) if *i < lay.states => MultiPoly::var(n, *i),
        Expr::Var(i) => MultiPoly::var(n, lay.input_var[*i - lay.states]),
        Expr::Time => MultiPoly::var(n, lay.clock.expect("clock allocated for time")),
        Expr::Const(c) => MultiPoly::constant(n, c.clone()),
        Expr::Poly(p, c) => {
            let subs: Vec<MultiPoly> = c.iter().map(|x| value(plan, lay, x)).collect();
            if subs.is_empty() {
                MultiPoly::constant(n, p.constant_value().unwrap_or_default())
            } else {
                p.compose(&subs).expect("composition arity")
            }
        }
        Expr::Add(a, b) => value(plan, lay, a) + value(plan, lay, b),
        Expr::Sub(a, b) => value(plan, lay, a) - value(plan, lay, b),
        Expr::Mul(a, b) => value(plan, lay, a) * value(plan, lay, b),
        Expr::Neg(a) => value(plan, lay, a).neg(),
        Expr::Pow(a, k) => value(plan, lay, a).pow(*k),
        Expr::Prim(p, c) => MultiPoly::var(n, plan.var_of(p, &c[0])),
    }
}

/// Derivative of `u` along `rates`, where `rates[k]` is the rate of variable `k`.
fn along(u: &MultiPoly, rates: &[Option<MultiPoly>]) -> MultiPoly {
    let mut acc = MultiPoly::zero(u.arity());
    for (k, r) in rates.iter().enumerate() {
        if !u.uses_var(k) {
            continue;
        }
        let r = r.as_ref().expect("rate of a dependency is known");
        acc = &acc + &(&u.partial(k) * r);
    }
    acc
}

/// Fills in the rates of all auxiliary variables.
fn propagate(plan: &Plan, lay: &Layout, rates: &mut [Option<MultiPoly>]) {
    let n = lay.arity;
    for a in &plan.aux {
        let u = value(plan, lay, &a.child);
        let du = along(&u, rates);
        let v0 = plan.base + a.offset;
        match &a.kind {
            AuxKind::Tanh => {
                // the sech2 factor evolves multiplicatively, so it keeps full
                // relative precision deep in saturation
                let v = MultiPoly::var(n, v0);
                let w = MultiPoly::var(n, v0 + 1);
                let wdu = &w * &du;
                rates[v0] = Some(wdu.clone());
                rates[v0 + 1] = Some((&v * &wdu).scale(&rat(-2)));
            }
            AuxKind::Trig => {
                let s = MultiPoly::var(n, v0);
                let c = MultiPoly::var(n, v0 + 1);
                rates[v0] = Some(&c * &du);
                rates[v0 + 1] = Some(&(-&s) * &du);
            }
            AuxKind::Exp => {
                rates[v0] = Some(&MultiPoly::var(n, v0) * &du);
            }
            AuxKind::Recip => {
                let r = MultiPoly::var(n, v0);
                rates[v0] = Some(&(-&(&r * &r)) * &du);
            }
            AuxKind::Ln { recip } => {
                let r = MultiPoly::var(n, plan.base + plan.aux[*recip].offset);
                rates[v0] = Some(&r * &du);
            }
            AuxKind::Closure(cl) => {
                let p = cl.pivp();
                let map: Vec<usize> = (0..p.dim).map(|k| v0 + k).collect();
                for k in 0..p.dim {
                    rates[v0 + k] = Some(&p.rhs.components[k].remap(n, &map) * &du);
                }
            }
        }
    }
}

/// Initial value of each auxiliary variable as an expression over the arguments.
fn aux_init(plan: &Plan, state_init: &[Expr], input_init: &[Expr]) -> Vec<Expr> {
    let mut vars: Vec<Expr> = state_init.to_vec();
    vars.extend_from_slice(input_init);
    let zero = Expr::int(0);
    let mut out = Vec::with_capacity(plan.width);
    for a in &plan.aux {
        let c0 = a.child.substitute(&vars, Some(&zero));
        match &a.kind {
            AuxKind::Tanh => {
                out.push(c0.clone().tanh());
                out.push(c0.sech2());
            }
            AuxKind::Trig => {
                out.push(c0.clone().sin());
                out.push(c0.cos());
            }
            AuxKind::Exp => out.push(c0.exp()),
            AuxKind::Recip => out.push(c0.recip()),
            AuxKind::Ln { .. } => out.push(c0.ln()),
            AuxKind::Closure(cl) => {
                for k in 0..cl.pivp().dim {
                    out.push(Expr::Prim(Prim::Closure(cl.clone(), k), vec![c0.clone()]));
                }
            }
        }
    }
    out
}

fn prepare(e: &Expr, opts: &LowerOptions) -> Result<Expr, LowerError> {
    if e.has_unbounded() && !opts.allow_unbounded {
        return Err(LowerError::Unbounded);
    }
    Ok(fold_constants(&e.expand())?)
}

/// Lowers a generable system to a polynomial one with a certificate.
pub fn lower_system(sys: &ExprSystem, opts: &LowerOptions) -> Result<(Pivp, LoweringCert), LowerError> {
    sys.validate()?;
    let d = sys.dim;
    let m = sys.input_arity;
    let rhs: Vec<Expr> = sys.rhs.iter().map(|e| prepare(e, opts)).collect::<Result<_, _>>()?;
    let mut plan = Plan::new(d);
    for e in &rhs {
        plan.collect(e);
    }
    let uses_time = rhs.iter().any(Expr::uses_time) || plan.aux.iter().any(|a| a.child.uses_time());
    let inputs_in_prims = plan.aux.iter().any(|a| a.child.uses_var_at_least(d));
    let big_d = d + plan.width + usize::from(uses_time);
    let clock = uses_time.then_some(d + plan.width);
    let n_inputs_lowered = if inputs_in_prims { 2 * m } else { m };
    let arity = big_d + n_inputs_lowered;
    let lay = Layout { states: d, input_var: (0..m).map(|j| big_d + j).collect(), clock, arity };

    let mut rates: Vec<Option<MultiPoly>> = vec![None; arity];
    let state_rhs: Vec<MultiPoly> = rhs.iter().map(|e| value(&plan, &lay, e)).collect();
    for (k, r) in state_rhs.iter().enumerate() {
        rates[k] = Some(r.clone());
    }
    if let Some(c) = clock {
        rates[c] = Some(MultiPoly::one(arity));
    }
    for j in 0..m {
        rates[big_d + j] = if inputs_in_prims { Some(MultiPoly::var(arity, big_d + m + j)) } else { Some(MultiPoly::zero(arity)) };
    }
    propagate(&plan, &lay, &mut rates);

    let input_init: Vec<Expr> = if inputs_in_prims {
        let vals = opts.input_values.as_ref().ok_or(LowerError::MissingInputValues)?;
        if vals.len() != m {
            return Err(LowerError::MissingInputValues);
        }
        vals.iter().map(|&v| Expr::num(v)).collect()
    } else {
        vec![Expr::int(0); m]
    };
    let mut init = sys.init.clone();
    init.extend(aux_init(&plan, &sys.init, &input_init));
    if uses_time {
        init.push(Expr::int(0));
    }
    let comps: Vec<MultiPoly> = rates[..big_d].iter().map(|r| r.clone().expect("state rate")).collect();
    let pivp = Pivp::new(PolyVector::new(arity, comps).expect("uniform arity"), n_inputs_lowered, sys.n_args, init, sys.outputs.clone())?;
    let cert = LoweringCert {
        original_dim: d,
        aux: plan
            .aux
            .iter()
            .map(|a| AuxEntry {
                prim: a.key.split(':').next().unwrap_or_default().split('@').next().unwrap_or_default().to_string(),
                argument: a.child.to_string(),
                states: (0..a.width).map(|k| d + a.offset + k).collect(),
            })
            .collect(),
        clock,
        input_derivatives: inputs_in_prims,
    };
    Ok((pivp, cert))
}

/// Lowers `y' = rhs(y, u)` from a numeric initial state.
pub fn lower_to_pivp(rhs: &[Expr], y0: &[f64], input_arity: usize, opts: &LowerOptions) -> Result<(Pivp, LoweringCert), LowerError> {
    let outputs = (0..rhs.len()).collect();
    let sys = ExprSystem::with_constant_init(rhs.to_vec(), input_arity, y0, outputs)?;
    lower_system(&sys, opts)
}

/// A generable realization `z` of a function `g` of `d` variables:
/// `z_0 = g`, `z_{1..=d}` are the variables, and `dz/dy = jacobian(z)`.
#[derive(Debug, Clone)]
pub struct Realization {
    pub dim: usize,
    pub vars: usize,
    /// `jacobian[k][j] = dz_k / dy_j` as a polynomial in `z`.
    pub jacobian: Vec<Vec<MultiPoly>>,
    /// `z_k` as expressions over the `d` variables.
    pub components: Vec<Expr>,
}

pub fn gradient_realization(g: &Expr, d: usize, opts: &LowerOptions) -> Result<Realization, LowerError> {
    let g = prepare(g, opts)?;
    if g.uses_time() || g.uses_var_at_least(d) {
        return Err(LowerError::NotStatic);
    }
    // variables: y_0..y_{d-1}, aux..., later shifted by one to make room for g
    let mut plan = Plan::new(d);
    plan.collect(&g);
    let inner = d + plan.width;
    let lay = Layout { states: d, input_var: vec![], clock: None, arity: inner };
    let gv = value(&plan, &lay, &g);
    let shift: Vec<usize> = (1..=inner).collect();
    let dim = inner + 1;
    let mut jac = vec![vec![MultiPoly::zero(dim); d]; dim];
    for j in 0..d {
        let mut rates: Vec<Option<MultiPoly>> = vec![None; inner];
        for (k, r) in rates.iter_mut().enumerate().take(d) {
            *r = Some(if k == j { MultiPoly::one(inner) } else { MultiPoly::zero(inner) });
        }
        propagate(&plan, &lay, &mut rates);
        jac[0][j] = along(&gv, &rates).remap(dim, &shift);
        for k in 0..inner {
            jac[k + 1][j] = rates[k].as_ref().expect("rate").remap(dim, &shift);
        }
    }
    let vars: Vec<Expr> = (0..d).map(Expr::Var).collect();
    let mut components = vec![g.clone()];
    components.extend(vars.iter().cloned());
    components.extend(aux_init(&plan, &vars, &[]));
    Ok(Realization { dim, vars: d, jacobian: jac, components })
}

/// Polynomial `1/2` convenience for builders.
pub fn half_poly(arity: usize) -> MultiPoly {
    MultiPoly::constant(arity, rat(1) / rat(2))
}
