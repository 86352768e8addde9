use super::{BoundName, ClassTag, ComputabilityWitness, PipelineError};
use crate::bounds::{BoundKind, BoundReport, BoundSample};
use crate::sim::{quad, InputSignal, Simulation, SolverConfig, Trace};

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn sim_err(e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Simulation(e.to_string())
}

fn output_error(w: &ComputabilityWitness, state: &[f64], target: &[f64]) -> f64 {
    w.pivp.outputs.iter().zip(target).fold(0.0f64, |m, (&o, f)| m.max((state[o] - f).abs()))
}

fn run_args(w: &ComputabilityWitness, args: &[f64], horizon: f64, cfg: &SolverConfig) -> Result<Trace, PipelineError> {
    let tr = Simulation::pivp(&w.pivp).args(args.to_vec()).horizon(horizon).run(cfg).map_err(sim_err)?;
    if !tr.completed() {
        return Err(PipelineError::Simulation(format!("run stopped early: {:?}", tr.status)));
    }
    Ok(tr)
}

/// Smallest sampled `||y'||` over runs from the given arguments.
pub fn check_speed(
    w: &ComputabilityWitness,
    args: &[Vec<f64>],
    horizon: f64,
    dt: f64,
    cfg: &SolverConfig,
) -> Result<f64, PipelineError> {
    let mut best = f64::INFINITY;
    for x in args {
        let tr = run_args(w, x, horizon, cfg)?;
        for s in tr.samples.iter().chain(tr.resample(dt).iter()) {
            best = best.min(s.speed);
        }
    }
    Ok(best)
}

/// Length criterion: wherever `length(0, t) >= Omega(||x||, mu)` the outputs
/// are within `e^-mu` of `f(x)`; also reports `||y'|| >= 1`.
pub fn check_length_accuracy(
    w: &ComputabilityWitness,
    cases: &[(Vec<f64>, f64)],
    horizon: f64,
    dt: f64,
    cfg: &SolverConfig,
) -> Result<BoundReport, PipelineError> {
    w.expect_class(ClassTag::Alp)?;
    let mut samples = Vec::new();
    for (x, mu) in cases {
        let tr = run_args(w, x, horizon, cfg)?;
        let fx = w.reference_at(x)?;
        let need = w.eval_bound(BoundName::Omega, &[inf_norm(x), *mu])?;
        let tol = (-mu).exp();
        let pts = tr.resample(dt);
        let mut reached = false;
        for s in &pts {
            let on = s.length >= need;
            reached |= on;
            samples.push(BoundSample::new("accuracy", s.t, tol, output_error(w, &s.state, &fx), on));
            samples.push(BoundSample::new("speed", s.t, s.speed, 1.0, true));
        }
        if !reached {
            return Err(PipelineError::Precondition(format!("horizon {horizon} too short to reach length {need:.3}")));
        }
    }
    Ok(BoundReport::from_samples(BoundKind::Pipeline, samples))
}

/// One run of a time-based witness.
#[derive(Debug, Clone)]
pub struct TimeCase {
    pub x: Vec<f64>,
    pub mu: f64,
    pub horizon: f64,
    pub dt: f64,
    /// Perturbation of the dynamics, one signal per state or empty.
    pub perturbation: Vec<InputSignal>,
    pub initial_error: Vec<f64>,
}

impl TimeCase {
    pub fn clean(x: Vec<f64>, mu: f64, horizon: f64) -> Self {
        TimeCase { x, mu, horizon, dt: horizon / 400.0, perturbation: vec![], initial_error: vec![] }
    }
}

/// Time criterion for ATSP, AWP, ARP and ASP witnesses: outputs within
/// `e^-mu` from `Omega`, space bound throughout, and for robust classes the
/// perturbation budget against `e^-Theta`.
pub fn check_time_accuracy(w: &ComputabilityWitness, cases: &[TimeCase], cfg: &SolverConfig) -> Result<BoundReport, PipelineError> {
    let with_mu = match w.class {
        ClassTag::Atsp => false,
        ClassTag::Awp | ClassTag::Arp | ClassTag::Asp => true,
        c => return Err(PipelineError::Class { expected: ClassTag::Atsp, found: c }),
    };
    let robust = matches!(w.class, ClassTag::Arp | ClassTag::Asp);
    let space = w.space_coords();
    let mut samples = Vec::new();
    for c in cases {
        let a = inf_norm(&c.x);
        let mut args = c.x.clone();
        if with_mu {
            args.push(c.mu);
        }
        let mut sim = Simulation::pivp(&w.pivp).args(args).horizon(c.horizon);
        if !c.perturbation.is_empty() {
            sim = sim.perturbation(c.perturbation.clone());
        }
        if !c.initial_error.is_empty() {
            sim = sim.initial_error(c.initial_error.clone());
        }
        let tr = sim.run(cfg).map_err(sim_err)?;
        if !tr.completed() {
            return Err(PipelineError::Simulation(format!("run stopped early: {:?}", tr.status)));
        }
        let fx = w.reference_at(&c.x)?;
        let settle = w.eval_bound(BoundName::Omega, &[a, c.mu])?;
        let tol = (-c.mu).exp();
        if robust {
            let theta = w.eval_bound(BoundName::Theta, &[a, c.mu])?;
            samples.push(BoundSample::new("budget", tr.t_end(), (-theta).exp(), tr.last().budget, true));
        }
        let ups = w.bounds.get(&BoundName::Upsilon);
        for s in tr.resample(c.dt) {
            samples.push(BoundSample::new("accuracy", s.t, tol, output_error(w, &s.state, &fx), s.t >= settle));
            if let Some(u) = ups {
                let at: Vec<f64> = if u.arity() == 2 { vec![a, s.t] } else { vec![a, c.mu, s.t] };
                let b = u.eval_f64(&at)?;
                let dev = space.iter().fold(0.0f64, |m, &i| m.max(s.state[i].abs()));
                samples.push(BoundSample::new("space", s.t, b, dev, true));
            }
        }
    }
    Ok(BoundReport::from_samples(BoundKind::Pipeline, samples))
}

/// Inverts the curve length of selected coordinates along a trace.
struct LengthIndex<'a> {
    trace: &'a Trace,
    coords: Vec<usize>,
    knots: Vec<(f64, f64)>,
}

impl<'a> LengthIndex<'a> {
    const TOL: f64 = 1e-13;

    fn new(trace: &'a Trace, coords: Vec<usize>) -> Self {
        let mut knots = vec![(trace.t_start(), 0.0)];
        let mut acc = 0.0;
        for seg in &trace.segments {
            let (a, b) = (seg.t0(), seg.t0() + seg.h());
            acc += trace.length_of(&coords, a, b, Self::TOL);
            knots.push((b, acc));
        }
        LengthIndex { trace, coords, knots }
    }

    fn total(&self) -> f64 {
        self.knots.last().map(|k| k.1).unwrap_or(0.0)
    }

    /// Time at which the length equals `l`.
    fn time_at(&self, l: f64) -> Option<f64> {
        if l > self.total() {
            return None;
        }
        let k = self.knots.partition_point(|kn| kn.1 < l).max(1);
        let (ta, la) = self.knots[k - 1];
        let (mut lo, mut hi) = (ta, self.knots[k].0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if la + self.trace.length_of(&self.coords, ta, mid, Self::TOL) < l {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi.abs().max(1.0) {
                break;
            }
        }
        Some(0.5 * (lo + hi))
    }
}

#[derive(Debug, Clone)]
pub struct ReparamReport {
    pub report: BoundReport,
    pub max_deviation: f64,
    pub min_w: f64,
    pub max_w: f64,
}

/// Compares a length-rescaled witness against its source: `w^ in (0, 1]`,
/// `length(y^, 0, u) <= u`, and `y^(u)` equal to the source trajectory at
/// the time where its length matches that of `y^` up to `u`.
pub fn check_reparameterization(
    alp: &ComputabilityWitness,
    atsp: &ComputabilityWitness,
    x: &[f64],
    u_max: f64,
    du: f64,
    agreement: f64,
    cfg: &SolverConfig,
) -> Result<ReparamReport, PipelineError> {
    alp.expect_class(ClassTag::Alp)?;
    atsp.expect_class(ClassTag::Atsp)?;
    let d = alp.pivp.dim;
    let wi = atsp.group("w_hat").map(|r| r.start).ok_or_else(|| PipelineError::Malformed("missing w_hat group".into()))?;
    let slow = run_args(alp, x, u_max, cfg)?;
    let fast = run_args(atsp, x, u_max, cfg)?;
    let coords: Vec<usize> = (0..d).collect();
    let src = LengthIndex::new(&slow, coords.clone());
    let dst = LengthIndex::new(&fast, coords);
    let mut samples = Vec::new();
    let (mut max_dev, mut min_w, mut max_w) = (0.0f64, f64::INFINITY, f64::NEG_INFINITY);
    let n = (u_max / du).floor() as usize;
    let mut prev = (0.0, 0.0);
    for i in 0..=n {
        let u = i as f64 * du;
        let s = fast.state_at(u);
        let wv = s[wi];
        min_w = min_w.min(wv);
        max_w = max_w.max(wv);
        samples.push(BoundSample::new("w_upper", u, 1.0, wv, true));
        samples.push(BoundSample::new("w_positive", u, wv, 0.0, true));
        let len = prev.1 + fast.length_of(&dst.coords, prev.0, u, LengthIndex::TOL);
        prev = (u, len);
        samples.push(BoundSample::new("length", u, u, len, true));
        let t = src.time_at(len).ok_or_else(|| PipelineError::Simulation("source run too short".into()))?;
        let y = slow.state_at(t);
        let dev = (0..d).fold(0.0f64, |m, j| m.max((s[j] - y[j]).abs()));
        max_dev = max_dev.max(dev);
        samples.push(BoundSample::new("agreement", u, agreement, dev, true));
    }
    let mut report = BoundReport::from_samples(BoundKind::Pipeline, samples);
    report.notes.push(format!("x = {x:?}, u in [0, {u_max}]"));
    Ok(ReparamReport { report, max_deviation: max_dev, min_w, max_w })
}

/// Scenario for an online witness: the input holds `steps[i].1` from
/// `steps[i].0` on.
#[derive(Debug, Clone)]
pub struct OnlineRun {
    pub steps: Vec<(f64, Vec<f64>)>,
    pub mu_bar: f64,
    pub horizon: f64,
    pub dt: f64,
    /// Absolute slack for bounds that fall below the solver tolerance.
    pub floor: f64,
}

#[derive(Debug, Clone)]
pub struct OnlineOutcome {
    pub report: BoundReport,
    pub trace: Trace,
    /// Lock windows `[settled, next switch)` per step.
    pub windows: Vec<(f64, f64)>,
}

impl OnlineRun {
    pub fn inputs(&self) -> Vec<InputSignal> {
        let n = self.steps.first().map(|s| s.1.len()).unwrap_or(0);
        (0..n).map(|i| InputSignal::steps(&self.steps.iter().map(|(t, v)| (*t, v[i])).collect::<Vec<_>>())).collect()
    }
}

/// Runs an online witness on piecewise constant inputs and checks the tube
/// `||z - f(x)|| <= e^-mu` after each settling window, the tracking bound on
/// `x*`, the sample-and-hold envelope of `z` and the space bound.
pub fn check_online_relock(w: &ComputabilityWitness, run: &OnlineRun, cfg: &SolverConfig) -> Result<OnlineOutcome, PipelineError> {
    w.expect_class(ClassTag::Aop)?;
    let tau = *w.constants.get("tau").ok_or_else(|| PipelineError::Malformed("missing tau".into()))?;
    let delta_p = w.constants.get("delta_prime").copied().unwrap_or(tau + 1.0);
    let xr = w.group("x_star").ok_or_else(|| PipelineError::Malformed("missing x_star group".into()))?;
    let zr = w.group("z").ok_or_else(|| PipelineError::Malformed("missing z group".into()))?;
    let inputs = run.inputs();
    let tr = Simulation::pivp(&w.pivp).inputs(inputs.clone()).horizon(run.horizon).run(cfg).map_err(sim_err)?;
    if !tr.completed() {
        return Err(PipelineError::Simulation(format!("run stopped early: {:?}", tr.status)));
    }
    let lambda = w.bound(BoundName::Lambda)?;
    let ln2 = super::robust::ln2_upper();
    let ln2 = crate::poly::rational_to_f64(&ln2);
    let pts = tr.resample(run.dt);
    let out_y: Vec<usize> = w.groups.iter().filter(|g| g.name.starts_with("y_out/")).map(|g| g.range.start).collect();
    if out_y.len() != zr.len() {
        return Err(PipelineError::Malformed("missing core output groups".into()));
    }
    let mut samples = Vec::new();
    let mut windows = Vec::new();
    for (i, (a, xbar)) in run.steps.iter().enumerate() {
        let b = run.steps.get(i + 1).map(|s| s.0).unwrap_or(f64::INFINITY);
        let alpha = inf_norm(xbar);
        let settle = a + w.eval_bound(BoundName::Omega, &[alpha, run.mu_bar])?;
        windows.push((settle, b.min(run.horizon)));
        let fx = w.reference_at(xbar)?;
        let tol = (-run.mu_bar).exp();
        let sq = 2.0 + xbar.iter().map(|v| v * v).sum::<f64>();
        let mut phi = |t: f64| {
            let m = t / tau;
            2.0 * ln2 + m + lambda.eval_f64(&[sq, m]).unwrap_or(f64::NAN)
        };
        for s in pts.iter().filter(|s| s.t >= *a && s.t < b) {
            let zdev = zr.clone().zip(&fx).fold(0.0f64, |m, (k, f)| m.max((s.state[k] - f).abs()));
            samples.push(BoundSample::new("tube", s.t, tol, zdev, s.t >= settle));
            let ip = quad::integrate(&mut phi, *a, s.t, 1e-12);
            let xdev = xr.clone().zip(xbar).fold(0.0f64, |m, (k, v)| m.max((s.state[k] - v).abs()));
            let applies = ip >= 1.0 && s.t > *a;
            samples.push(BoundSample::new("x_star", s.t, (-ip).exp() + run.floor, xdev, applies));
        }
    }
    for s in &pts {
        let lo = (s.t - tau - 1.0).max(0.0);
        let ysup = pts
            .iter()
            .filter(|q| q.t >= lo && q.t <= s.t)
            .map(|q| out_y.iter().fold(0.0f64, |m, &k| m.max(q.state[k].abs())))
            .fold(0.0f64, f64::max);
        let zn = zr.clone().fold(0.0f64, |m, k| m.max(s.state[k].abs()));
        samples.push(BoundSample::new("envelope", s.t, 2.0 + ysup, zn, true));
        let alpha = inputs.iter().map(|sig| sig.sup_abs((s.t - delta_p).max(0.0), s.t)).fold(0.0f64, f64::max);
        let ub = w.eval_bound(BoundName::Upsilon, &[alpha, s.t])?;
        let dev = w.space_coords().iter().fold(0.0f64, |m, &k| m.max(s.state[k].abs()));
        samples.push(BoundSample::new("space", s.t, ub, dev, true));
    }
    Ok(OnlineOutcome { report: BoundReport::from_samples(BoundKind::Pipeline, samples), trace: tr, windows })
}
