use super::*;
use odeprog::circuit::{as_poly, lower_system, Expr as CExpr, ExprSystem, LowerError, LowerOptions, LoweringCert, Pivp, Prim};
use odeprog::gadgets::{build_slowstop, reach_expr, Interval, PlilSpec, SampleSpec, SlowStop, SlowStopSystem};
use odeprog::poly::{rational_to_f64, PolyVector, Rational};
use odeprog::sim::InputSignal;
use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::str::FromStr;

/// A parameterized gadget instance bound to a name.
#[derive(Debug, Clone, PartialEq)]
pub enum Gadget {
    Plil(PlilSpec),
    Sample(SampleSpec),
    Lxh { a: Rational, b: Rational, rising: bool },
    Sabs { beta: Rational },
    Mx2 { beta: Rational },
    Mx { delta: Rational },
    Norm { delta: Rational },
    Reach,
}

#[derive(Debug, Clone)]
pub struct SystemDef {
    pub name: String,
    pub system: ExprSystem,
    pub states: Vec<String>,
    pub inputs: Vec<String>,
    pub args: Vec<String>,
    /// Polynomial form, when lowering succeeds without input values.
    pub lowered: Option<(Pivp, LoweringCert)>,
    pub slowstop: Option<SlowStopSystem>,
}

impl SystemDef {
    pub fn dim(&self) -> usize {
        self.system.dim
    }

    pub fn output_names(&self) -> Vec<String> {
        self.system.outputs.iter().map(|&o| self.states[o].clone()).collect()
    }
}

/// How to obtain a witness; built on demand by the runner.
#[derive(Debug, Clone, PartialEq)]
pub enum WitnessDef {
    Builtin(String),
    Load(PathBuf),
    Transform { kind: String, source: String },
}

#[derive(Debug, Clone, Default)]
pub struct Env {
    pub lets: BTreeMap<String, ast::Expr>,
    pub signals: BTreeMap<String, InputSignal>,
    pub gadgets: BTreeMap<String, Gadget>,
    pub systems: BTreeMap<String, SystemDef>,
    pub witnesses: BTreeMap<String, WitnessDef>,
}

pub const BUILTIN_WITNESSES: &[&str] = &["square_atsp", "square_axp"];
pub const WITNESS_TRANSFORMS: &[&str] = &["atsp_to_alp", "alp_to_atsp", "atsp_as_awp", "awp_to_arp", "arp_to_asp", "online"];
pub const TRANSFORMS: &[&str] = &["atsp-to-alp", "alp-to-atsp", "atsp-as-awp", "awp-to-arp", "arp-to-asp", "online"];

/// Verification checks and the options each accepts.
pub const CHECKS: &[(&str, &[&str])] = &[
    ("tanh-bound", &["lo", "hi", "points"]),
    ("reach", &["trials", "horizon", "form"]),
    ("plil", &["gadget", "trials", "span"]),
    ("sample", &["gadget", "trials", "horizon"]),
    ("slowstop", &["system", "trials"]),
    ("dependency", &["system", "trials", "eps", "horizon", "perturbation"]),
    ("continuity", &["fn", "trials"]),
    ("lowering", &["system", "trials", "horizon"]),
    ("witness", &["witness", "cases"]),
    ("roundtrip", &["witness"]),
    ("online", &["witness", "steps", "mu", "horizon"]),
];

const SIMULATE_OPTS: &[&str] = &["horizon", "tol", "order", "method", "args", "inputs", "dt", "out", "format"];
const TRANSFORM_OPTS: &[&str] = &["out"];

fn name_err(span: Span, msg: impl Into<String>) -> DslError {
    DslError::new(ErrorKind::Name, span, msg)
}

fn arity_err(span: Span, msg: impl Into<String>) -> DslError {
    DslError::new(ErrorKind::Arity, span, msg)
}

fn invariant_err(span: Span, msg: impl Into<String>) -> DslError {
    DslError::new(ErrorKind::Invariant, span, msg)
}

/// Exact value of a decimal literal such as `-1.25e-3`.
pub fn decimal(text: &str) -> Option<Rational> {
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let (mant, exp) = match body.find(['e', 'E']) {
        Some(i) => (&body[..i], body[i + 1..].parse::<i64>().ok()?),
        None => (body, 0),
    };
    let (int, frac) = mant.split_once('.').unwrap_or((mant, ""));
    let digits = format!("{int}{frac}");
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let shift = exp - frac.len() as i64;
    let zeros = "0".repeat(shift.unsigned_abs() as usize);
    let src = if shift >= 0 { format!("{digits}{zeros}/1") } else { format!("{digits}/1{zeros}") };
    let r = Rational::from_str(&src).ok()?;
    Some(if neg { -r } else { r })
}

pub fn value_num(v: &Value) -> Result<Rational, DslError> {
    match v {
        Value::Num(n, sp) => decimal(n).ok_or_else(|| DslError::syntax(*sp, format!("malformed number `{n}`"))),
        other => Err(arity_err(other.span(), "expected a number")),
    }
}

pub fn value_f64(v: &Value) -> Result<f64, DslError> {
    value_num(v).map(|r| rational_to_f64(&r))
}

pub fn value_nums(v: &Value) -> Result<Vec<f64>, DslError> {
    match v {
        Value::Tuple(vs, _) => vs.iter().map(value_f64).collect(),
        other => Ok(vec![value_f64(other)?]),
    }
}

fn value_pair(v: &Value) -> Result<(Rational, Rational), DslError> {
    match v {
        Value::Tuple(vs, _) if vs.len() == 2 => Ok((value_num(&vs[0])?, value_num(&vs[1])?)),
        other => Err(arity_err(other.span(), "expected a pair `(a, b)`")),
    }
}

/// Names listed by a value: a bare identifier or a tuple of identifiers.
pub fn value_names(v: &Value) -> Result<Vec<Ident>, DslError> {
    match v {
        Value::Ident(i) => Ok(vec![i.clone()]),
        Value::Tuple(vs, _) => vs
            .iter()
            .map(|x| match x {
                Value::Ident(i) => Ok(i.clone()),
                other => Err(arity_err(other.span(), "expected a name")),
            })
            .collect(),
        other => Err(arity_err(other.span(), "expected a name or a tuple of names")),
    }
}

fn find_param<'a>(params: &'a [Param], key: &str) -> Option<&'a Value> {
    params.iter().find(|p| p.key.name == key).map(|p| &p.value)
}

fn need_param<'a>(params: &'a [Param], key: &str, kind: &str, span: Span) -> Result<&'a Value, DslError> {
    find_param(params, key).ok_or_else(|| arity_err(span, format!("{kind} needs parameter `{key}`")))
}

fn check_param_keys(params: &[Param], allowed: &[&str], kind: &str) -> Result<(), DslError> {
    for p in params {
        if !allowed.contains(&p.key.name.as_str()) {
            return Err(name_err(p.key.span, format!("{kind} has no parameter `{}`", p.key.name)));
        }
    }
    Ok(())
}

fn window(params: &[Param], kind: &str, span: Span) -> Result<(Interval, f64), DslError> {
    let (a, b) = value_pair(need_param(params, "I", kind, span)?)?;
    let tau = value_f64(need_param(params, "tau", kind, span)?)?;
    let iv = Interval::new(rational_to_f64(&a), rational_to_f64(&b)).map_err(|e| invariant_err(span, e.to_string()))?;
    Ok((iv, tau))
}

/// Instantiates a gadget kind; `kind` names a builtin taking parameters.
pub fn make_gadget(kind: &str, params: &[Param], span: Span) -> Result<Option<Gadget>, DslError> {
    let positive = |key: &str| -> Result<Rational, DslError> {
        let v = value_num(need_param(params, key, kind, span)?)?;
        if v <= Rational::from_integer(0.into()) {
            return Err(invariant_err(span, format!("{kind} needs {key} > 0")));
        }
        Ok(v)
    };
    let g = match kind {
        "plil" | "sample" => {
            check_param_keys(params, &["I", "tau"], kind)?;
            let (iv, tau) = window(params, kind, span)?;
            let spec = PlilSpec::new(iv, tau).map_err(|e| invariant_err(span, e.to_string()))?;
            if kind == "plil" {
                Gadget::Plil(spec)
            } else {
                Gadget::Sample(SampleSpec { plil: spec })
            }
        }
        "lxh" | "hxl" => {
            check_param_keys(params, &["I"], kind)?;
            let (a, b) = value_pair(need_param(params, "I", kind, span)?)?;
            if a >= b {
                return Err(invariant_err(span, format!("{kind} needs a < b")));
            }
            Gadget::Lxh { a, b, rising: kind == "lxh" }
        }
        "sabs" | "mx2" => {
            check_param_keys(params, &["beta"], kind)?;
            let beta = positive("beta")?;
            if kind == "sabs" {
                Gadget::Sabs { beta }
            } else {
                Gadget::Mx2 { beta }
            }
        }
        "mx" | "norm" => {
            check_param_keys(params, &["delta"], kind)?;
            let delta = positive("delta")?;
            if kind == "mx" {
                Gadget::Mx { delta }
            } else {
                Gadget::Norm { delta }
            }
        }
        "reach" => {
            check_param_keys(params, &[], kind)?;
            Gadget::Reach
        }
        _ => return Ok(None),
    };
    Ok(Some(g))
}

impl Gadget {
    /// `(min, max)` argument count.
    pub fn arity(&self) -> (usize, usize) {
        match self {
            Gadget::Plil(_) | Gadget::Lxh { .. } | Gadget::Reach => (3, 3),
            Gadget::Sample(_) => (4, 4),
            Gadget::Sabs { .. } => (1, 1),
            Gadget::Mx2 { .. } => (2, 2),
            Gadget::Mx { .. } | Gadget::Norm { .. } => (1, usize::MAX),
        }
    }

    pub fn apply(&self, args: &[CExpr]) -> CExpr {
        use odeprog::circuit::smooth::{lxh_expr, mx2_expr, sabs_expr};
        match self {
            Gadget::Plil(p) => p.expr(&args[0], &args[1], &args[2]),
            Gadget::Sample(s) => s.expr(&args[0], &args[1], &args[2], &args[3]),
            Gadget::Lxh { a, b, rising } => lxh_expr(a, b, &args[0], &args[1], &args[2], *rising),
            Gadget::Sabs { beta } => sabs_expr(&args[0], beta),
            Gadget::Mx2 { beta } => mx2_expr(&args[0], &args[1], beta),
            Gadget::Mx { delta } => CExpr::prim(Prim::Mx { delta: delta.clone() }, args.to_vec()).expect("checked arity"),
            Gadget::Norm { delta } => CExpr::prim(Prim::Norm { delta: delta.clone() }, args.to_vec()).expect("checked arity"),
            Gadget::Reach => reach_expr(args[0].clone(), args[1].clone(), args[2].clone()),
        }
    }
}

const UNARY: &[&str] = &["tanh", "sech2", "sin", "cos", "exp", "ln", "recip"];

/// Resolution context for expressions.
struct Scope<'a> {
    env: &'a Env,
    vars: BTreeMap<String, usize>,
    allow_time: bool,
    used_lets: &'a mut BTreeSet<String>,
}

impl Scope<'_> {
    fn expr(&mut self, e: &ast::Expr, stack: &mut Vec<String>) -> Result<CExpr, DslError> {
        Ok(match &e.kind {
            ExprKind::Num(n) => CExpr::rat(decimal(n).ok_or_else(|| DslError::syntax(e.span, format!("malformed number `{n}`")))?),
            ExprKind::Name(n) => {
                if let Some(&i) = self.vars.get(n) {
                    CExpr::var(i)
                } else if n == "t" {
                    if !self.allow_time {
                        return Err(invariant_err(e.span, "time cannot appear in initial values"));
                    }
                    CExpr::Time
                } else if n == "pi" {
                    CExpr::num(std::f64::consts::PI)
                } else if let Some(body) = self.env.lets.get(n) {
                    if stack.contains(n) {
                        return Err(invariant_err(e.span, format!("`{n}` is defined in terms of itself")));
                    }
                    self.used_lets.insert(n.clone());
                    stack.push(n.clone());
                    let v = self.expr(body, stack);
                    stack.pop();
                    v?
                } else {
                    return Err(name_err(e.span, format!("`{n}` is not defined")));
                }
            }
            ExprKind::Neg(x) => -self.expr(x, stack)?,
            ExprKind::Bin(op, l, r) => {
                let (l, r) = (self.expr(l, stack)?, self.expr(r, stack)?);
                match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div => match &r {
                        CExpr::Const(c) if c.numer() == &0.into() => return Err(invariant_err(e.span, "division by zero")),
                        CExpr::Const(c) => CExpr::rat(c.recip()) * l,
                        _ => l * r.recip(),
                    },
                }
            }
            ExprKind::Pow(b, k) => {
                let k: u32 = k.parse().map_err(|_| DslError::syntax(e.span, "exponent too large"))?;
                self.expr(b, stack)?.pow(k)
            }
            ExprKind::Call { name, params, args } => {
                let (lo, hi, gadget) = if UNARY.contains(&name.name.as_str()) {
                    if !params.is_empty() {
                        return Err(arity_err(name.span, format!("{} takes no parameters", name.name)));
                    }
                    (1, 1, None)
                } else if let Some(g) = make_gadget(&name.name, params, name.span)? {
                    let (lo, hi) = g.arity();
                    (lo, hi, Some(g))
                } else if let Some(g) = self.env.gadgets.get(&name.name) {
                    if !params.is_empty() {
                        return Err(arity_err(name.span, format!("gadget `{}` is already parameterized", name.name)));
                    }
                    let (lo, hi) = g.arity();
                    (lo, hi, Some(g.clone()))
                } else {
                    return Err(name_err(name.span, format!("unknown function `{}`", name.name)));
                };
                if args.len() < lo || args.len() > hi {
                    let want = if lo == hi { lo.to_string() } else { format!("at least {lo}") };
                    return Err(arity_err(name.span, format!("`{}` expects {want} argument(s), got {}", name.name, args.len())));
                }
                let xs: Vec<CExpr> = args.iter().map(|a| self.expr(a, stack)).collect::<Result<_, _>>()?;
                match gadget {
                    Some(g) => g.apply(&xs),
                    None => {
                        let x = xs.into_iter().next().expect("one argument");
                        match name.name.as_str() {
                            "tanh" => x.tanh(),
                            "sech2" => x.sech2(),
                            "sin" => x.sin(),
                            "cos" => x.cos(),
                            "exp" => x.exp(),
                            "ln" => x.ln(),
                            _ => x.recip(),
                        }
                    }
                }
            }
        })
    }
}

fn free_names(e: &ast::Expr, out: &mut Vec<(String, Span)>) {
    match &e.kind {
        ExprKind::Num(_) => {}
        ExprKind::Name(n) => out.push((n.clone(), e.span)),
        ExprKind::Neg(x) | ExprKind::Pow(x, _) => free_names(x, out),
        ExprKind::Bin(_, l, r) => {
            free_names(l, out);
            free_names(r, out);
        }
        ExprKind::Call { args, .. } => args.iter().for_each(|a| free_names(a, out)),
    }
}

fn define<T>(map: &mut BTreeMap<String, T>, taken: &mut BTreeSet<String>, name: &Ident, v: T) -> Result<(), DslError> {
    if !taken.insert(name.name.clone()) {
        return Err(name_err(name.span, format!("`{}` is defined twice", name.name)));
    }
    map.insert(name.name.clone(), v);
    Ok(())
}

pub fn make_signal(v: &Value) -> Result<InputSignal, DslError> {
    let (f, args) = match v {
        Value::Call(f, args) => (f, args.as_slice()),
        Value::Num(..) => return Ok(InputSignal::constant(value_f64(v)?)),
        other => return Err(arity_err(other.span(), "expected a signal such as `const(1)` or `steps((0, 1), (5, 2))`")),
    };
    let nums = || args.iter().map(value_f64).collect::<Result<Vec<_>, _>>();
    let count = |lo: usize, hi: usize| {
        if args.len() < lo || args.len() > hi {
            Err(arity_err(f.span, format!("`{}` expects {lo} to {hi} arguments, got {}", f.name, args.len())))
        } else {
            Ok(())
        }
    };
    Ok(match f.name.as_str() {
        "const" => {
            count(1, 1)?;
            InputSignal::constant(nums()?[0])
        }
        "poly" => {
            count(1, usize::MAX)?;
            InputSignal::polynomial(nums()?)
        }
        "sine" => {
            count(2, 4)?;
            let a = nums()?;
            InputSignal::sine(a[0], a[1], a.get(2).copied().unwrap_or(0.0)).shifted(a.get(3).copied().unwrap_or(0.0))
        }
        "noise" => {
            count(3, 4)?;
            let a = nums()?;
            if a[2] <= 0.0 || a[0] < 0.0 || a[0].fract() != 0.0 {
                return Err(invariant_err(f.span, "noise needs an integer seed and a positive hold"));
            }
            InputSignal::held_noise(a[0] as u64, a[1], a[2]).shifted(a.get(3).copied().unwrap_or(0.0))
        }
        "steps" => {
            count(1, usize::MAX)?;
            let steps = args
                .iter()
                .map(|a| match a {
                    Value::Tuple(p, _) if p.len() == 2 => Ok((value_f64(&p[0])?, value_f64(&p[1])?)),
                    other => Err(arity_err(other.span(), "steps are `(time, value)` pairs")),
                })
                .collect::<Result<Vec<_>, _>>()?;
            InputSignal::steps(&steps)
        }
        other => return Err(name_err(f.span, format!("unknown signal form `{other}`"))),
    })
}

fn make_witness(v: &Value, env: &Env) -> Result<WitnessDef, DslError> {
    let source = |args: &[Value], f: &Ident| -> Result<String, DslError> {
        match args {
            [Value::Ident(w)] if env.witnesses.contains_key(&w.name) => Ok(w.name.clone()),
            [Value::Ident(w)] => Err(name_err(w.span, format!("witness `{}` is not defined", w.name))),
            _ => Err(arity_err(f.span, format!("`{}` expects one witness name", f.name))),
        }
    };
    match v {
        Value::Ident(f) | Value::Call(f, _) if BUILTIN_WITNESSES.contains(&f.name.as_str()) => {
            if let Value::Call(_, a) = v {
                if !a.is_empty() {
                    return Err(arity_err(f.span, format!("`{}` takes no arguments", f.name)));
                }
            }
            Ok(WitnessDef::Builtin(f.name.clone()))
        }
        Value::Call(f, args) if f.name == "load" => match args.as_slice() {
            [Value::Str(p, _)] => Ok(WitnessDef::Load(PathBuf::from(p))),
            _ => Err(arity_err(f.span, "`load` expects one file name string")),
        },
        Value::Call(f, args) if WITNESS_TRANSFORMS.contains(&f.name.as_str()) => {
            Ok(WitnessDef::Transform { kind: f.name.replace('_', "-"), source: source(args, f)? })
        }
        Value::Ident(f) | Value::Call(f, _) => Err(name_err(f.span, format!("unknown witness constructor `{}`", f.name))),
        other => Err(arity_err(other.span(), "expected a witness constructor")),
    }
}

fn make_system(name: &Ident, wrapper: Option<&(Ident, Vec<Value>)>, stmts: &[Stmt], env: &Env, used: &mut BTreeSet<String>) -> Result<SystemDef, DslError> {
    let mut states: Vec<Ident> = Vec::new();
    let (mut inputs, mut args, mut outputs) = (Vec::new(), Vec::new(), None);
    let mut init = None;
    for s in stmts {
        match s {
            Stmt::Deriv(x, _) => states.push(x.clone()),
            Stmt::Input(v) => inputs.extend(v.iter().cloned()),
            Stmt::Args(v) => args.extend(v.iter().cloned()),
            Stmt::Output(v) => outputs = Some(v.clone()),
            Stmt::Init(es, sp) => {
                if init.is_some() {
                    return Err(invariant_err(*sp, "initial values given twice"));
                }
                init = Some((es, *sp));
            }
        }
    }
    if states.is_empty() {
        return Err(invariant_err(name.span, format!("system `{}` declares no states", name.name)));
    }
    let mut seen = BTreeSet::new();
    for id in states.iter().chain(&inputs).chain(&args) {
        if id.name == "t" || !seen.insert(id.name.clone()) {
            return Err(name_err(id.span, format!("`{}` is declared twice in `{}`", id.name, name.name)));
        }
    }
    let d = states.len();
    let mut vars: BTreeMap<String, usize> = states.iter().enumerate().map(|(i, s)| (s.name.clone(), i)).collect();
    vars.extend(inputs.iter().enumerate().map(|(k, s)| (s.name.clone(), d + k)));
    let mut rhs = Vec::with_capacity(d);
    {
        let mut scope = Scope { env, vars, allow_time: true, used_lets: used };
        for s in stmts {
            if let Stmt::Deriv(_, e) = s {
                rhs.push(scope.expr(e, &mut Vec::new())?);
            }
        }
    }
    let init_exprs = match init {
        None => vec![CExpr::int(0); d],
        Some((es, sp)) => {
            if es.len() != d {
                return Err(arity_err(sp, format!("{} initial values for {d} states", es.len())));
            }
            let vars = args.iter().enumerate().map(|(i, s)| (s.name.clone(), i)).collect();
            let mut scope = Scope { env, vars, allow_time: false, used_lets: used };
            es.iter().map(|e| scope.expr(e, &mut Vec::new())).collect::<Result<Vec<_>, _>>()?
        }
    };
    let outputs: Vec<usize> = match outputs {
        None => vec![0],
        Some(v) => v
            .iter()
            .map(|o| {
                states
                    .iter()
                    .position(|s| s.name == o.name)
                    .ok_or_else(|| name_err(o.span, format!("output `{}` is not a state of `{}`", o.name, name.name)))
            })
            .collect::<Result<_, _>>()?,
    };
    let system = ExprSystem::new(rhs, inputs.len(), args.len(), init_exprs, outputs)
        .map_err(|e| invariant_err(name.span, e.to_string()))?;
    let lowered = match lower_system(&system, &LowerOptions::default()) {
        Ok(pair) => Some(pair),
        Err(LowerError::MissingInputValues) | Err(LowerError::Unbounded) => None,
        Err(e) => return Err(invariant_err(name.span, e.to_string())),
    };
    let slowstop = match wrapper {
        None => None,
        Some((w, vals)) => {
            if w.name != "slowstop" {
                return Err(name_err(w.span, format!("unknown system wrapper `{}`", w.name)));
            }
            if vals.len() != 2 {
                return Err(arity_err(w.span, "`slowstop` expects (T, theta)"));
            }
            let spec = SlowStop::new(value_f64(&vals[0])?, value_f64(&vals[1])?).map_err(|e| invariant_err(w.span, e.to_string()))?;
            if !inputs.is_empty() || !args.is_empty() {
                return Err(invariant_err(w.span, "a slow-stop system takes no inputs or arguments"));
            }
            let comps = system
                .rhs
                .iter()
                .map(|e| as_poly(e, d))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| invariant_err(w.span, "a slow-stop system needs a polynomial right-hand side in its states"))?;
            let p = PolyVector::new(d, comps).map_err(|e| invariant_err(w.span, e.to_string()))?;
            let y0 = system.initial_state(&[]).map_err(|e| invariant_err(w.span, e.to_string()))?;
            Some(build_slowstop(spec, &p, &y0).map_err(|e| invariant_err(w.span, e.to_string()))?)
        }
    };
    Ok(SystemDef {
        name: name.name.clone(),
        system,
        states: states.into_iter().map(|s| s.name).collect(),
        inputs: inputs.into_iter().map(|s| s.name).collect(),
        args: args.into_iter().map(|s| s.name).collect(),
        lowered,
        slowstop,
    })
}

fn check_directive(d: &Directive, env: &Env) -> Result<(), DslError> {
    let allowed: &[&str] = match d.kind {
        DirectiveKind::Simulate => {
            if !env.systems.contains_key(&d.target.name) {
                return Err(name_err(d.target.span, format!("system `{}` is not defined", d.target.name)));
            }
            SIMULATE_OPTS
        }
        DirectiveKind::Verify => match CHECKS.iter().find(|(c, _)| *c == d.target.name) {
            Some((_, keys)) => keys,
            None => return Err(name_err(d.target.span, format!("unknown check `{}`", d.target.name))),
        },
        DirectiveKind::Transform => {
            if !TRANSFORMS.contains(&d.target.name.as_str()) {
                return Err(name_err(d.target.span, format!("unknown transformation `{}`", d.target.name)));
            }
            let src = d.source.as_ref().expect("transform source");
            let is_file = src.name.contains('.') || src.name.contains('/');
            if !is_file && !env.witnesses.contains_key(&src.name) {
                return Err(name_err(src.span, format!("witness `{}` is not defined", src.name)));
            }
            TRANSFORM_OPTS
        }
    };
    for p in &d.opts {
        if !allowed.contains(&p.key.name.as_str()) {
            return Err(name_err(p.key.span, format!("`{} {}` has no option `{}`", d.kind.keyword(), d.target.name, p.key.name)));
        }
        let check = |known: bool, what: &str| -> Result<(), DslError> {
            if known {
                Ok(())
            } else {
                Err(name_err(p.value.span(), format!("{what} is not defined")))
            }
        };
        match p.key.name.as_str() {
            "system" | "gadget" | "witness" => {
                let [id] = value_names(&p.value)?.try_into().map_err(|_| arity_err(p.value.span(), "expected one name"))?;
                let known = match p.key.name.as_str() {
                    "system" => env.systems.contains_key(&id.name),
                    "gadget" => env.gadgets.contains_key(&id.name),
                    _ => env.witnesses.contains_key(&id.name) || BUILTIN_WITNESSES.contains(&id.name.as_str()),
                };
                check(known, &format!("{} `{}`", p.key.name, id.name))?;
            }
            "inputs" | "perturbation" => {
                for id in value_names(&p.value)? {
                    check(env.signals.contains_key(&id.name), &format!("signal `{}`", id.name))?;
                }
            }
            _ => {}
        }
    }
    Ok(())
}

/// Resolves every declaration and checks names, arities and gadget invariants.
pub fn elaborate(prog: &Program) -> Result<Env, DslError> {
    let mut env = Env::default();
    let mut taken = BTreeSet::new();
    let mut used = BTreeSet::new();
    for item in &prog.items {
        match item {
            Item::Let { name, value } => define(&mut env.lets, &mut taken, name, value.clone())?,
            Item::Signal { name, value } => {
                let s = make_signal(value)?;
                define(&mut env.signals, &mut taken, name, s)?
            }
            Item::Gadget { name, kind, params } => {
                let g = make_gadget(&kind.name, params, kind.span)?
                    .ok_or_else(|| name_err(kind.span, format!("unknown gadget kind `{}`", kind.name)))?;
                define(&mut env.gadgets, &mut taken, name, g)?
            }
            Item::System { name, wrapper, stmts } => {
                let s = make_system(name, wrapper.as_ref(), stmts, &env, &mut used)?;
                define(&mut env.systems, &mut taken, name, s)?
            }
            Item::Witness { name, value } => {
                let w = make_witness(value, &env)?;
                define(&mut env.witnesses, &mut taken, name, w)?
            }
            Item::Directive(d) => check_directive(d, &env)?,
        }
    }
    // lets never expanded inside a system may only mention other lets and time
    for (name, body) in &env.lets {
        if used.contains(name) {
            continue;
        }
        let mut names = Vec::new();
        free_names(body, &mut names);
        for (n, sp) in names {
            if n != "t" && n != "pi" && !env.lets.contains_key(&n) {
                return Err(name_err(sp, format!("`{n}` is not defined")));
            }
        }
        let mut scratch = BTreeSet::new();
        Scope { env: &env, vars: BTreeMap::new(), allow_time: true, used_lets: &mut scratch }.expr(body, &mut vec![name.clone()])?;
    }
    Ok(env)
}
