//! Integration of polynomial and generable systems with curve-length,
//! space and error-budget meters.

mod config;
mod embedded;
pub mod quad;
mod signal;
mod taylor;
mod trace;

pub use config::{Method, SolverConfig};
pub use signal::{next_breakpoint, norm_at, InputSignal, SignalForm};
pub use taylor::SeriesTape;
pub use trace::{Sample, Segment, Trace, TraceStatus};

use crate::circuit::{ExprSystem, Pivp};
use crate::poly::CompiledPoly;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("expected {expected} input signals, got {found}")]
    InputArity { expected: usize, found: usize },
    #[error("expected {expected} perturbation components, got {found}")]
    PerturbationArity { expected: usize, found: usize },
    #[error("initial state: {0}")]
    Init(String),
    #[error("right-hand side evaluation failed: {0}")]
    Eval(String),
    #[error("the Taylor method needs a polynomial right-hand side")]
    NotPolynomial,
}

/// A right-hand side `f(t, y, u)`.
pub trait VectorField: Sync {
    fn dim(&self) -> usize;
    fn input_arity(&self) -> usize {
        0
    }
    fn eval(&self, t: f64, y: &[f64], u: &[f64], out: &mut [f64]) -> Result<(), SimError>;
}

/// Closure-backed vector field.
pub struct FnField<F> {
    dim: usize,
    inputs: usize,
    f: F,
}

impl<F> FnField<F>
where
    F: Fn(f64, &[f64], &[f64], &mut [f64]) + Sync,
{
    pub fn new(dim: usize, inputs: usize, f: F) -> Self {
        FnField { dim, inputs, f }
    }
}

impl<F> VectorField for FnField<F>
where
    F: Fn(f64, &[f64], &[f64], &mut [f64]) + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn input_arity(&self) -> usize {
        self.inputs
    }
    fn eval(&self, t: f64, y: &[f64], u: &[f64], out: &mut [f64]) -> Result<(), SimError> {
        (self.f)(t, y, u, out);
        Ok(())
    }
}

impl VectorField for ExprSystem {
    fn dim(&self) -> usize {
        self.dim
    }
    fn input_arity(&self) -> usize {
        self.input_arity
    }
    fn eval(&self, t: f64, y: &[f64], u: &[f64], out: &mut [f64]) -> Result<(), SimError> {
        self.eval_rhs(t, y, u, out).map_err(|e| SimError::Eval(e.to_string()))
    }
}

struct PolyField {
    dim: usize,
    inputs: usize,
    comps: Vec<CompiledPoly>,
}

impl PolyField {
    fn new(p: &Pivp) -> Self {
        PolyField { dim: p.dim, inputs: p.input_arity, comps: p.rhs.components.iter().map(CompiledPoly::new).collect() }
    }
}

impl VectorField for PolyField {
    fn dim(&self) -> usize {
        self.dim
    }
    fn input_arity(&self) -> usize {
        self.inputs
    }
    fn eval(&self, _t: f64, y: &[f64], u: &[f64], out: &mut [f64]) -> Result<(), SimError> {
        let mut v = Vec::with_capacity(y.len() + u.len());
        v.extend_from_slice(y);
        v.extend_from_slice(u);
        for (o, c) in out.iter_mut().zip(&self.comps) {
            *o = c.eval(&v);
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
pub enum SystemRef<'a> {
    Pivp(&'a Pivp),
    Expr(&'a ExprSystem),
    Field(&'a dyn VectorField),
}

/// A configured run: system, signals, initial condition and time span.
#[derive(Clone)]
pub struct Simulation<'a> {
    system: SystemRef<'a>,
    inputs: Vec<InputSignal>,
    perturbation: Vec<InputSignal>,
    initial_error: Vec<f64>,
    args: Vec<f64>,
    initial_state: Option<Vec<f64>>,
    t0: f64,
    t_end: f64,
}

impl<'a> Simulation<'a> {
    pub fn new(system: SystemRef<'a>) -> Self {
        Simulation {
            system,
            inputs: Vec::new(),
            perturbation: Vec::new(),
            initial_error: Vec::new(),
            args: Vec::new(),
            initial_state: None,
            t0: 0.0,
            t_end: 1.0,
        }
    }

    pub fn pivp(p: &'a Pivp) -> Self {
        Self::new(SystemRef::Pivp(p))
    }

    pub fn expr(s: &'a ExprSystem) -> Self {
        Self::new(SystemRef::Expr(s))
    }

    pub fn field(f: &'a dyn VectorField) -> Self {
        Self::new(SystemRef::Field(f))
    }

    pub fn inputs(mut self, u: Vec<InputSignal>) -> Self {
        self.inputs = u;
        self
    }

    /// Additive perturbation of the right-hand side, one signal per state.
    pub fn perturbation(mut self, e: Vec<InputSignal>) -> Self {
        self.perturbation = e;
        self
    }

    pub fn initial_error(mut self, e0: Vec<f64>) -> Self {
        self.initial_error = e0;
        self
    }

    pub fn args(mut self, x: Vec<f64>) -> Self {
        self.args = x;
        self
    }

    pub fn initial_state(mut self, y0: Vec<f64>) -> Self {
        self.initial_state = Some(y0);
        self
    }

    pub fn start(mut self, t0: f64) -> Self {
        self.t0 = t0;
        self
    }

    pub fn horizon(mut self, t_end: f64) -> Self {
        self.t_end = t_end;
        self
    }

    fn dims(&self) -> (usize, usize) {
        match self.system {
            SystemRef::Pivp(p) => (p.dim, p.input_arity),
            SystemRef::Expr(s) => (s.dim, s.input_arity),
            SystemRef::Field(f) => (f.dim(), f.input_arity()),
        }
    }

    fn start_state(&self) -> Result<Vec<f64>, SimError> {
        let (dim, _) = self.dims();
        let mut y = match (&self.initial_state, self.system) {
            (Some(y), _) => y.clone(),
            (None, SystemRef::Pivp(p)) => p.initial_state(&self.args).map_err(|e| SimError::Init(e.to_string()))?,
            (None, SystemRef::Expr(s)) => s.initial_state(&self.args).map_err(|e| SimError::Init(e.to_string()))?,
            (None, SystemRef::Field(_)) => return Err(SimError::Init("a vector field needs an explicit initial state".into())),
        };
        if y.len() != dim {
            return Err(SimError::Init(format!("initial state has {} components, system has {}", y.len(), dim)));
        }
        if !self.initial_error.is_empty() {
            if self.initial_error.len() != dim {
                return Err(SimError::Init("initial error has the wrong dimension".into()));
            }
            for (a, e) in y.iter_mut().zip(&self.initial_error) {
                *a += e;
            }
        }
        Ok(y)
    }

    pub fn run(&self, cfg: &SolverConfig) -> Result<Trace, SimError> {
        cfg.validate().map_err(SimError::Config)?;
        let (dim, m) = self.dims();
        if self.inputs.len() != m {
            return Err(SimError::InputArity { expected: m, found: self.inputs.len() });
        }
        if !self.perturbation.is_empty() && self.perturbation.len() != dim {
            return Err(SimError::PerturbationArity { expected: dim, found: self.perturbation.len() });
        }
        if !(self.t_end >= self.t0) {
            return Err(SimError::Config(format!("horizon {} precedes start {}", self.t_end, self.t0)));
        }
        let y0 = self.start_state()?;
        match cfg.method {
            Method::Taylor { order } => {
                let p = match self.system {
                    SystemRef::Pivp(p) => p,
                    _ => return Err(SimError::NotPolynomial),
                };
                self.run_taylor(p, y0, order, cfg)
            }
            Method::EmbeddedPair { order } => match self.system {
                SystemRef::Pivp(p) => {
                    let f = PolyField::new(p);
                    self.run_embedded(&f, y0, order, cfg)
                }
                SystemRef::Expr(s) => self.run_embedded(s, y0, order, cfg),
                SystemRef::Field(f) => self.run_embedded(f, y0, order, cfg),
            },
        }
    }

    fn breakpoint_after(&self, t: f64) -> f64 {
        let a = next_breakpoint(&self.inputs, t);
        let b = next_breakpoint(&self.perturbation, t);
        let bp = match (a, b) {
            (Some(a), Some(b)) => a.min(b),
            (a, b) => a.or(b).unwrap_or(f64::INFINITY),
        };
        bp.min(self.t_end)
    }

    fn perturbation_norm(&self, anchor: f64, t: f64) -> f64 {
        self.perturbation.iter().fold(0.0, |m, s| m.max(s.value_anchored(anchor, t).abs()))
    }

    fn first_sample(&self, y0: &[f64], speed: f64) -> Sample {
        let e0 = self.initial_error.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        Sample { t: self.t0, state: y0.to_vec(), speed, length: 0.0, space: inf_norm(y0), budget: e0 }
    }

    fn budget_increment(&self, t: f64, h: f64, tol: f64) -> f64 {
        if self.perturbation.is_empty() {
            return 0.0;
        }
        quad::integrate(&mut |s| self.perturbation_norm(t, s), t, t + h, tol)
    }

    fn run_taylor(&self, p: &Pivp, y0: Vec<f64>, order: usize, cfg: &SolverConfig) -> Result<Trace, SimError> {
        let tape = SeriesTape::new(&p.rhs, p.dim);
        let dim = p.dim;
        let all: Vec<usize> = (0..dim).collect();
        let mut t = self.t0;
        let mut y = y0;
        let series = |t: f64| -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
            let u = self.inputs.iter().map(|s| s.taylor(t, order)).collect();
            let e = self.perturbation.iter().map(|s| s.taylor(t, order)).collect();
            (u, e)
        };
        let (u, e) = series(t);
        let c0 = tape.coefficients(&y, &u, &e, order.max(1));
        let speed0 = c0.iter().fold(0.0f64, |m, c| m.max(c[1].abs()));
        let mut samples = vec![self.first_sample(&y, speed0)];
        let mut segments = Vec::new();
        let mut status = TraceStatus::Completed;
        let damp = (-0.7 / (order as f64 - 1.0)).exp();
        while t < self.t_end {
            if segments.len() >= cfg.max_steps {
                status = TraceStatus::Stalled { t };
                break;
            }
            let bp = self.breakpoint_after(t);
            let (u, e) = series(t);
            let coeffs = tape.coefficients(&y, &u, &e, order);
            if coeffs.iter().flatten().any(|v| !v.is_finite()) {
                status = TraceStatus::Blowup { t };
                break;
            }
            let remaining = bp - t;
            let mut h = if cfg.fixed_step {
                cfg.max_step
            } else {
                let tol = cfg.abs_tol + cfg.rel_tol * inf_norm(&y);
                let nk = coeffs.iter().fold(0.0f64, |m, c| m.max(c[order].abs()));
                let nk1 = coeffs.iter().fold(0.0f64, |m, c| m.max(c[order - 1].abs()));
                let mut r = f64::INFINITY;
                if nk1 > 0.0 {
                    r = r.min((tol / nk1).powf(1.0 / (order as f64 - 1.0)));
                }
                if nk > 0.0 {
                    r = r.min((tol / nk).powf(1.0 / order as f64));
                }
                let mut h = (r * damp).min(cfg.max_step);
                // components far below the absolute tolerance still need
                // relative accuracy, measured against their size over the step
                for _ in 0..80 {
                    let ok = coeffs.iter().all(|c| {
                        let mut size = 0.0f64;
                        let mut hp = 1.0;
                        for &cj in &c[..order - 1] {
                            size = size.max(cj.abs() * hp);
                            hp *= h;
                        }
                        let tail = (c[order - 1].abs() * hp).max(c[order].abs() * hp * h);
                        tail <= cfg.rel_tol * size
                    });
                    if ok {
                        break;
                    }
                    h *= 0.7;
                }
                h
            };
            let last = h >= remaining;
            if last {
                h = remaining;
            } else if h < cfg.min_step {
                status = TraceStatus::Stalled { t };
                break;
            }
            let seg = Segment::Taylor { t0: t, h, coeffs };
            let t_next = if last { bp } else { t + h };
            let mut y_new = vec![0.0; dim];
            seg.state(t_next, &mut y_new);
            let mut d = vec![0.0; dim];
            seg.derivative(t_next, &mut d);
            let qtol = cfg.abs_tol * h.max(1e-3);
            let mut dd = vec![0.0; dim];
            let dl = quad::integrate(
                &mut |s| {
                    seg.derivative(s, &mut dd);
                    all.iter().fold(0.0, |m, &i| m.max(dd[i].abs()))
                },
                t,
                t_next,
                qtol,
            );
            let budget = self.budget_increment(t, t_next - t, qtol);
            let prev = samples.last().expect("initial sample");
            let mut space = prev.space.max(inf_norm(&y_new));
            let mut tmp = vec![0.0; dim];
            for i in 1..8 {
                seg.state(t + (t_next - t) * i as f64 / 8.0, &mut tmp);
                space = space.max(inf_norm(&tmp));
            }
            let sample = Sample {
                t: t_next,
                state: y_new.clone(),
                speed: inf_norm(&d),
                length: prev.length + dl,
                space,
                budget: prev.budget + budget,
            };
            samples.push(sample);
            segments.push(seg);
            t = t_next;
            y = y_new;
            if y.iter().any(|v| !v.is_finite()) || inf_norm(&y) > cfg.blowup {
                status = TraceStatus::Blowup { t };
                break;
            }
        }
        Ok(Trace { dim, samples, segments, status })
    }

    fn run_embedded(&self, f: &dyn VectorField, y0: Vec<f64>, order: usize, cfg: &SolverConfig) -> Result<Trace, SimError> {
        let tab = embedded::tableau(order);
        let dim = f.dim();
        let stages = tab.c.len();
        let mut ubuf = vec![0.0; self.inputs.len()];
        let rhs = |anchor: f64, t: f64, y: &[f64], out: &mut [f64], ubuf: &mut Vec<f64>| -> Result<(), SimError> {
            for (u, s) in ubuf.iter_mut().zip(&self.inputs) {
                *u = s.value_anchored(anchor, t);
            }
            f.eval(t, y, ubuf, out)?;
            for (o, s) in out.iter_mut().zip(&self.perturbation) {
                *o += s.value_anchored(anchor, t);
            }
            Ok(())
        };
        let mut t = self.t0;
        let mut y = y0;
        let mut k: Vec<Vec<f64>> = vec![vec![0.0; dim]; stages];
        rhs(t, t, &y, &mut k[0], &mut ubuf)?;
        let mut samples = vec![self.first_sample(&y, inf_norm(&k[0]))];
        let mut segments = Vec::new();
        let mut status = TraceStatus::Completed;
        let sc = |y: &[f64], i: usize| cfg.abs_tol + cfg.rel_tol * y[i].abs();
        // starting step
        let mut h = {
            let d0 = (0..dim).fold(0.0f64, |m, i| m.max(y[i].abs() / sc(&y, i)));
            let d1 = (0..dim).fold(0.0f64, |m, i| m.max(k[0][i].abs() / sc(&y, i)));
            let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
            let y1: Vec<f64> = (0..dim).map(|i| y[i] + h0 * k[0][i]).collect();
            let mut f1 = vec![0.0; dim];
            rhs(t, t + h0, &y1, &mut f1, &mut ubuf)?;
            let d2 = (0..dim).fold(0.0f64, |m, i| m.max((f1[i] - k[0][i]).abs() / sc(&y, i))) / h0;
            let h1 = if d1.max(d2) <= 1e-15 {
                (h0 * 1e-3).max(1e-6)
            } else {
                (0.01 / d1.max(d2)).powf(1.0 / (tab.low_order as f64 + 1.0))
            };
            (100.0 * h0).min(h1).min(cfg.max_step)
        };
        if cfg.fixed_step {
            h = cfg.max_step;
        }
        let mut y_new = vec![0.0; dim];
        let mut err = vec![0.0; dim];
        let mut steps = 0usize;
        while t < self.t_end {
            steps += 1;
            if steps > cfg.max_steps {
                status = TraceStatus::Stalled { t };
                break;
            }
            let bp = self.breakpoint_after(t);
            let remaining = bp - t;
            let last = h >= remaining;
            let h_try = if last { remaining } else { h };
            if !last && h_try < cfg.min_step {
                status = TraceStatus::Stalled { t };
                break;
            }
            let anchor = t;
            embedded::step(
                tab,
                &mut |s, yy: &[f64], out: &mut [f64]| rhs(anchor, s, yy, out, &mut ubuf),
                t,
                &y,
                h_try,
                &mut k,
                &mut y_new,
                &mut err,
            )?;
            let mut en = 0.0f64;
            for i in 0..dim {
                let s = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y_new[i].abs());
                en = en.max(err[i].abs() / s);
            }
            if !en.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
                if cfg.fixed_step {
                    status = TraceStatus::Blowup { t };
                    break;
                }
                h = h_try * 0.1;
                continue;
            }
            if en > 1.0 && !cfg.fixed_step {
                h = h_try * (0.9 * en.powf(-1.0 / (tab.low_order as f64 + 1.0))).clamp(0.1, 0.9);
                continue;
            }
            let t_next = if last { bp } else { t + h_try };
            let f1 = k[stages - 1].clone();
            let seg = Segment::Hermite { t0: t, h: t_next - t, y0: y.clone(), f0: k[0].clone(), y1: y_new.clone(), f1: f1.clone() };
            let qtol = cfg.abs_tol * h_try.max(1e-3);
            let mut ys = vec![0.0; dim];
            let mut fs = vec![0.0; dim];
            let mut ub = vec![0.0; self.inputs.len()];
            let mut fail = None;
            let dl = quad::integrate(
                &mut |s| {
                    seg.state(s, &mut ys);
                    if let Err(e) = rhs(anchor, s, &ys, &mut fs, &mut ub) {
                        fail = Some(e);
                    }
                    inf_norm(&fs)
                },
                t,
                t_next,
                qtol,
            );
            if let Some(e) = fail {
                return Err(e);
            }
            let budget = self.budget_increment(t, t_next - t, qtol);
            let prev = samples.last().expect("initial sample");
            let mut space = prev.space.max(inf_norm(&y_new));
            for i in 1..8 {
                seg.state(t + (t_next - t) * i as f64 / 8.0, &mut ys);
                space = space.max(inf_norm(&ys));
            }
            samples.push(Sample {
                t: t_next,
                state: y_new.clone(),
                speed: inf_norm(&f1),
                length: prev.length + dl,
                space,
                budget: prev.budget + budget,
            });
            segments.push(seg);
            t = t_next;
            std::mem::swap(&mut y, &mut y_new);
            if inf_norm(&y) > cfg.blowup {
                status = TraceStatus::Blowup { t };
                break;
            }
            // restart the stage cache at breakpoints, reuse the last stage otherwise
            if last {
                rhs(t, t, &y, &mut k[0], &mut ubuf)?;
            } else {
                k[0] = f1;
            }
            if !cfg.fixed_step {
                let fac = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-1.0 / (tab.low_order as f64 + 1.0))).clamp(0.2, 5.0) };
                h = (h_try * fac).min(cfg.max_step);
            }
        }
        Ok(Trace { dim, samples, segments, status })
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Runs `system` from its initial condition at `args` up to `horizon`.
pub fn integrate(
    system: SystemRef<'_>,
    inputs: Vec<InputSignal>,
    perturbation: Vec<InputSignal>,
    args: Vec<f64>,
    horizon: f64,
    cfg: &SolverConfig,
) -> Result<Trace, SimError> {
    Simulation::new(system).inputs(inputs).perturbation(perturbation).args(args).horizon(horizon).run(cfg)
}

/// Curve length, space and budget meters at `t`.
pub fn trace_metrics(trace: &Trace, t: f64) -> Sample {
    trace.metrics_at(t)
}
