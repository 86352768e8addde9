use super::dependency::{dependency_bound, DependencyInputs, DependencyOptions, MuCurve, StateEnvelope};
use super::{BoundError, BoundKind, BoundReport, BoundSample};
use crate::circuit::{as_poly, Expr, Pivp};
use crate::gadgets::{build_slowstop, reach_expr, Interval, PlilSpec, SampleSpec, SlowStop};
use crate::poly::{MultiPoly, PolyVector};
use crate::sim::{next_breakpoint, quad, FnField, InputSignal, Simulation, SolverConfig};

/// `1 - sgn(t) tanh(t) <= exp(-|t|)` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TanhScenario {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    /// Grid points closer to 0 than this are dropped; `t = 0` is always included.
    pub gap: f64,
}

impl Default for TanhScenario {
    fn default() -> Self {
        TanhScenario { lo: -50.0, hi: 50.0, points: 20_001, gap: 1e-4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReachForm {
    /// `eta + int |E| + exp(-int phi)` where `int phi >= 1`.
    Integral,
    /// `max(eta, |y(0) - g_inf|) + int |E|` everywhere.
    Uniform,
    /// `eta + E_max / phi_min + 1 / sqrt(exp(2 int phi) - 1)` for `phi >= phi_min > 0`.
    WorstError,
}

/// `y' = reach(phi(t), y, g(t)) + E(t)` with `|g - g_inf| <= eta`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReachScenario {
    pub eta: f64,
    pub y0: f64,
    pub g_inf: f64,
    pub g: InputSignal,
    pub phi: InputSignal,
    pub e: InputSignal,
    pub horizon: f64,
    pub forms: Vec<ReachForm>,
    pub points: usize,
    pub cfg: SolverConfig,
}

impl ReachScenario {
    pub fn new(eta: f64, y0: f64, g_inf: f64, g: InputSignal, phi: InputSignal, e: InputSignal, horizon: f64) -> Self {
        ReachScenario {
            eta,
            y0,
            g_inf,
            g,
            phi,
            e,
            horizon,
            forms: vec![ReachForm::Integral, ReachForm::Uniform],
            points: 201,
            cfg: SolverConfig::default(),
        }
    }

    pub fn forms(mut self, forms: &[ReachForm]) -> Self {
        self.forms = forms.to_vec();
        self
    }
}

/// Closed-form plil profile with `mu(t)` and `x(t)` fed from signals.
#[derive(Debug, Clone, PartialEq)]
pub struct PlilScenario {
    pub interval: Interval,
    pub tau: f64,
    pub mu: InputSignal,
    pub x: InputSignal,
    pub span: f64,
    pub points: usize,
    pub periodicity_tol: f64,
}

/// `y' = sample(t, mu(t), y, x(t)) + e(t)` with `mu(t) = mu0 + mu_rate t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleScenario {
    pub interval: Interval,
    pub tau: f64,
    pub mu0: f64,
    pub mu_rate: f64,
    pub x: InputSignal,
    pub e: InputSignal,
    pub y0: f64,
    pub horizon: f64,
    pub points: usize,
    pub cfg: SolverConfig,
}

/// Slow-stop wrapper of `p` perturbed by held noise within budget `exp(-theta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlowStopScenario {
    pub spec: SlowStop,
    pub p: PolyVector,
    pub y0: Vec<f64>,
    pub seed: u64,
    pub hold: f64,
    pub points: usize,
    pub cfg: SolverConfig,
}

impl SlowStopScenario {
    pub fn new(spec: SlowStop, p: PolyVector, y0: Vec<f64>, seed: u64) -> Self {
        SlowStopScenario { spec, p, y0, seed, hold: 0.5, points: 801, cfg: SolverConfig::default() }
    }

    pub fn horizon(&self) -> f64 {
        2.0 * self.spec.t_stop + 10.0
    }

    /// Time range on which `|A(t)| <= T + 3` can hold: `A` decreases at unit rate.
    pub fn a_bound_horizon(&self) -> f64 {
        2.0 * self.spec.t_stop + 4.0
    }
}

/// Clean `y' = p(y, x)` against `z' = e + p(z, x + delta)`, `z(0) = y(0) + z0_dev`.
#[derive(Debug, Clone)]
pub struct DependencyScenario {
    pub pivp: Pivp,
    pub args: Vec<f64>,
    pub x: Vec<InputSignal>,
    pub delta: Vec<InputSignal>,
    pub e: Vec<InputSignal>,
    pub z0_dev: Vec<f64>,
    pub eps: f64,
    pub horizon: f64,
    pub points: usize,
    pub envelope: StateEnvelope,
    pub quad_tol: f64,
    pub cfg: SolverConfig,
}

impl DependencyScenario {
    pub fn new(pivp: Pivp, horizon: f64) -> Self {
        DependencyScenario {
            pivp,
            args: Vec::new(),
            x: Vec::new(),
            delta: Vec::new(),
            e: Vec::new(),
            z0_dev: Vec::new(),
            eps: 1.0,
            horizon,
            points: 201,
            envelope: StateEnvelope::Trace,
            quad_tol: 1e-13,
            cfg: SolverConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Scenario {
    Tanh(TanhScenario),
    Reach(ReachScenario),
    Plil(PlilScenario),
    Sample(SampleScenario),
    SlowStop(SlowStopScenario),
    Dependency(DependencyScenario),
}

impl Scenario {
    pub fn kind(&self) -> BoundKind {
        match self {
            Scenario::Tanh(_) => BoundKind::Tanh,
            Scenario::Reach(_) => BoundKind::Reach,
            Scenario::Plil(_) => BoundKind::Plil,
            Scenario::Sample(_) => BoundKind::Sample,
            Scenario::SlowStop(_) => BoundKind::SlowStop,
            Scenario::Dependency(_) => BoundKind::Dependency,
        }
    }
}

pub fn verify_bound(s: &Scenario) -> Result<BoundReport, BoundError> {
    match s {
        Scenario::Tanh(t) => Ok(verify_tanh(t)),
        Scenario::Reach(r) => verify_reach(r),
        Scenario::Plil(p) => verify_plil(p),
        Scenario::Sample(p) => verify_sample(p),
        Scenario::SlowStop(p) => verify_slowstop(p),
        Scenario::Dependency(d) => verify_dependency(d).map(|(_, r)| r),
    }
}

fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn breaks(signals: &[&InputSignal], a: f64, b: f64) -> Vec<f64> {
    let owned: Vec<InputSignal> = signals.iter().map(|s| (*s).clone()).collect();
    let mut out = Vec::new();
    let mut t = a;
    while let Some(bp) = next_breakpoint(&owned, t) {
        if bp >= b {
            break;
        }
        out.push(bp);
        t = bp;
    }
    out
}

fn abs_integral(s: &InputSignal, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    quad::integrate_pieces(&mut |u| s.value(u).abs(), a, b, &breaks(&[s], a, b), 1e-14)
}

/// Range of `s` over `[a, b]` from a dense grid plus breakpoints.
fn range_on(s: &InputSignal, a: f64, b: f64) -> (f64, f64) {
    let mut pts = grid(a, b, 513);
    pts.extend(breaks(&[s], a, b));
    pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &t| {
        let v = s.value(t);
        (lo.min(v), hi.max(v))
    })
}

fn sim_err(e: impl std::fmt::Display) -> BoundError {
    BoundError::Simulation(e.to_string())
}

fn verify_tanh(s: &TanhScenario) -> BoundReport {
    let mut ts: Vec<f64> = grid(s.lo, s.hi, s.points).into_iter().filter(|t| t.abs() >= s.gap).collect();
    ts.push(0.0);
    let samples = ts
        .into_iter()
        .map(|t| {
            let sgn = if t > 0.0 {
                1.0
            } else if t < 0.0 {
                -1.0
            } else {
                0.0
            };
            BoundSample::new("tanh", t, (-t.abs()).exp(), 1.0 - sgn * t.tanh(), true)
        })
        .collect();
    BoundReport::from_samples(BoundKind::Tanh, samples)
}

fn reach_pivp(y0: f64) -> Result<Pivp, BoundError> {
    let rhs = reach_expr(Expr::var(1), Expr::var(0), Expr::var(2)) + Expr::var(3);
    let p = as_poly(&rhs, 4).ok_or_else(|| BoundError::Scenario("reach field is not polynomial".into()))?;
    let rhs = PolyVector::new(4, vec![p]).map_err(|e| BoundError::Scenario(e.to_string()))?;
    Pivp::with_constant_init(rhs, 3, &[y0], vec![0]).map_err(|e| BoundError::Scenario(e.to_string()))
}

fn verify_reach(s: &ReachScenario) -> Result<BoundReport, BoundError> {
    let (phi_lo, _) = range_on(&s.phi, 0.0, s.horizon);
    if phi_lo < 0.0 {
        return Ok(BoundReport::inapplicable(BoundKind::Reach, format!("phi takes the negative value {phi_lo}")));
    }
    let (g_lo, g_hi) = range_on(&s.g, 0.0, s.horizon);
    let g_dev = (g_hi - s.g_inf).abs().max((g_lo - s.g_inf).abs());
    if g_dev > s.eta {
        return Ok(BoundReport::inapplicable(BoundKind::Reach, format!("target strays {g_dev} from its limit, eta = {}", s.eta)));
    }
    let pivp = reach_pivp(s.y0)?;
    let tr = Simulation::pivp(&pivp)
        .inputs(vec![s.phi.clone(), s.g.clone(), s.e.clone()])
        .horizon(s.horizon)
        .run(&s.cfg)
        .map_err(sim_err)?;
    if !tr.completed() {
        return Err(BoundError::Simulation(format!("reach run ended with {:?}", tr.status)));
    }
    let e_max = s.e.sup_abs(0.0, s.horizon);
    let bp = breaks(&[&s.phi, &s.e], 0.0, s.horizon);
    let ts = grid(0.0, s.horizon, s.points);
    let mut samples = Vec::new();
    let (mut phi_int, mut e_int, mut prev) = (0.0, 0.0, 0.0);
    for &t in &ts {
        if t > prev {
            phi_int += quad::integrate_pieces(&mut |u| s.phi.value(u), prev, t, &bp, 1e-14);
            e_int += quad::integrate_pieces(&mut |u| s.e.value(u).abs(), prev, t, &bp, 1e-14);
            prev = t;
        }
        let dev = (tr.state_at(t)[0] - s.g_inf).abs();
        for form in &s.forms {
            let (name, bound, ok) = match form {
                ReachForm::Integral => ("integral", s.eta + e_int + (-phi_int).exp(), phi_int >= 1.0),
                ReachForm::Uniform => ("uniform", s.eta.max((s.y0 - s.g_inf).abs()) + e_int, true),
                ReachForm::WorstError => {
                    let b = s.eta + e_max / phi_lo + 1.0 / (2.0 * phi_int).exp_m1().sqrt();
                    ("worst_error", b, phi_lo > 0.0 && phi_int > 0.0)
                }
            };
            samples.push(BoundSample::new(name, t, bound, dev, ok));
        }
    }
    let mut r = BoundReport::from_samples(BoundKind::Reach, samples);
    if !r.applicable {
        r.reason = Some(format!("integral of phi reaches only {phi_int} and phi_min = {phi_lo}"));
    }
    Ok(r)
}

fn verify_plil(s: &PlilScenario) -> Result<BoundReport, BoundError> {
    let spec = PlilSpec::new(s.interval, s.tau).map_err(|e| BoundError::Scenario(e.to_string()))?;
    let (mu_lo, _) = range_on(&s.mu, 0.0, s.span);
    if mu_lo < 0.0 {
        return Ok(BoundReport::inapplicable(BoundKind::Plil, format!("mu takes the negative value {mu_lo}")));
    }
    let mut samples = Vec::new();
    for t in grid(0.0, s.span, s.points) {
        let (mu, x) = (s.mu.value(t), s.x.value(t));
        let v = spec.eval(t, mu, x).value;
        let w = spec.eval(t + s.tau, mu, x).value;
        samples.push(BoundSample::new("periodicity", t, s.periodicity_tol, (v - w).abs(), true));
        let off = !s.interval.contains_mod(t, s.tau);
        samples.push(BoundSample::new("off_window", t, (-mu).exp(), v.abs(), off));
    }
    let (a, b) = (s.interval.a, s.interval.b);
    let mut n = 0.0;
    while n * s.tau + b <= s.span {
        let (lo, hi) = (n * s.tau + a, n * s.tau + b);
        let br = breaks(&[&s.mu, &s.x], lo, hi);
        let int = quad::integrate_pieces(&mut |t| spec.eval(t, s.mu.value(t), s.x.value(t)).phi, lo, hi, &br, 1e-13);
        samples.push(BoundSample::new("window_integral_low", lo, int, 1.0, true));
        samples.push(BoundSample::new("window_integral_high", lo, (b - a) * spec.k(), int, true));
        n += 1.0;
    }
    let mut r = BoundReport::from_samples(BoundKind::Plil, samples);
    r.notes.push(format!("K = {}", spec.k()));
    Ok(r)
}

fn verify_sample(s: &SampleScenario) -> Result<BoundReport, BoundError> {
    if s.mu0 < 0.0 || s.mu_rate < 0.0 {
        return Ok(BoundReport::inapplicable(BoundKind::Sample, "mu must be nonnegative and nondecreasing"));
    }
    let spec = SampleSpec::new(s.interval, s.tau).map_err(|e| BoundError::Scenario(e.to_string()))?;
    let (mu0, rate) = (s.mu0, s.mu_rate);
    let mu = move |t: f64| mu0 + rate * t;
    let field = FnField::new(1, 2, move |t, y, u, out| out[0] = spec.eval(t, mu(t), y[0], u[0]) + u[1]);
    let tr = Simulation::field(&field)
        .inputs(vec![s.x.clone(), s.e.clone()])
        .initial_state(vec![s.y0])
        .horizon(s.horizon)
        .run(&s.cfg)
        .map_err(sim_err)?;
    if !tr.completed() {
        return Err(BoundError::Simulation(format!("sample run ended with {:?}", tr.status)));
    }
    let (a, b, tau) = (s.interval.a, s.interval.b, s.tau);
    let memory = tau + s.interval.len();
    let mut samples = Vec::new();
    let mut n = 0.0;
    while n * tau + b <= s.horizon {
        let (lo, hi) = (n * tau + a, n * tau + b);
        let (x_lo, x_hi) = range_on(&s.x, lo, hi);
        let (x_bar, spread) = (0.5 * (x_lo + x_hi), 0.5 * (x_hi - x_lo));
        let bound = abs_integral(&s.e, lo, hi) + spread + (-mu(lo)).exp();
        let dev = (tr.state_at(hi)[0] - x_bar).abs();
        samples.push(BoundSample::new("window_hold", hi, bound, dev, spread <= 1.0));
        n += 1.0;
    }
    for t in grid(0.0, s.horizon, s.points) {
        let y = tr.state_at(t)[0];
        let (x, e) = (s.x.value(t), s.e.value(t));
        let slope = (spec.eval(t, mu(t), y, x) + e).abs();
        let off = !s.interval.contains_mod(t, tau);
        samples.push(BoundSample::new("off_window_rate", t, (-mu(t)).exp() + e.abs(), slope, off));
        let from = (t - memory).max(0.0);
        let past = s.x.sup_abs(from, t);
        let init = if t <= b { s.y0.abs() } else { 0.0 };
        let env = 2.0 + abs_integral(&s.e, from, t) + init.max(past);
        samples.push(BoundSample::new("envelope", t, env, y.abs(), true));
    }
    Ok(BoundReport::from_samples(BoundKind::Sample, samples))
}

fn verify_slowstop(s: &SlowStopScenario) -> Result<BoundReport, BoundError> {
    let ss = build_slowstop(s.spec, &s.p, &s.y0).map_err(|e| BoundError::Scenario(e.to_string()))?;
    let d = s.y0.len();
    let len = s.horizon();
    let budget = s.spec.budget();
    let amp = budget / (4.0 * len);
    let inputs: Vec<InputSignal> =
        (0..=d).map(|i| InputSignal::held_noise(s.seed.wrapping_add(i as u64), amp, s.hold).until(len)).collect();
    let mut e0 = vec![budget / 4.0; d + 1];
    e0[d] = -budget / 4.0;
    let tr = Simulation::pivp(&ss.pivp).inputs(inputs).args(e0).horizon(len).run(&s.cfg).map_err(sim_err)?;
    if !tr.completed() {
        return Err(BoundError::Simulation(format!("slow-stop run ended with {:?}", tr.status)));
    }
    let t_stop = s.spec.t_stop;
    let mut samples = vec![BoundSample::new("psi_after_stop", t_stop + 1.0, tr.state_at(t_stop + 1.0)[ss.psi_index()], t_stop, true)];
    let a_range = s.a_bound_horizon();
    for t in grid(0.0, len, s.points) {
        let st = tr.state_at(t);
        samples.push(BoundSample::new("psi_upper", t, t_stop + 4.0, st[ss.psi_index()], true));
        samples.push(BoundSample::new("a_abs", t, t_stop + 3.0, st[ss.a_index()].abs(), t <= a_range));
    }
    let mut r = BoundReport::from_samples(BoundKind::SlowStop, samples);
    r.notes.push(format!("perturbation budget used: {} of {}", budget / 4.0 + amp * len, budget));
    r.notes.push(format!("|A| <= T + 3 checked on [0, {a_range}]; A decreases without bound afterwards"));
    Ok(r)
}

/// Right-hand side with inputs `x` replaced by `x + delta`, the extra inputs appended.
fn shifted_inputs(p: &Pivp) -> Result<Pivp, BoundError> {
    let (d, n) = (p.dim, p.input_arity);
    let arity = d + 2 * n;
    let subs: Vec<MultiPoly> = (0..d + n)
        .map(|i| {
            let v = MultiPoly::var(arity, i);
            if i < d {
                Ok(v)
            } else {
                v.try_add(&MultiPoly::var(arity, i + n))
            }
        })
        .collect::<Result<_, _>>()
        .map_err(|e| BoundError::Scenario(e.to_string()))?;
    let comps = p.rhs.components.iter().map(|c| c.compose(&subs)).collect::<Result<Vec<_>, _>>().map_err(|e| BoundError::Scenario(e.to_string()))?;
    let rhs = PolyVector::new(arity, comps).map_err(|e| BoundError::Scenario(e.to_string()))?;
    Pivp::new(rhs, 2 * n, p.n_args, p.init.clone(), p.outputs.clone()).map_err(|e| BoundError::Scenario(e.to_string()))
}

pub fn verify_dependency(s: &DependencyScenario) -> Result<(MuCurve, BoundReport), BoundError> {
    let p = &s.pivp;
    if !s.delta.is_empty() && s.delta.len() != p.input_arity {
        return Err(BoundError::Scenario(format!("delta has {} components for {} inputs", s.delta.len(), p.input_arity)));
    }
    let y = Simulation::pivp(p).inputs(s.x.clone()).args(s.args.clone()).horizon(s.horizon).run(&s.cfg).map_err(sim_err)?;
    let perturbed = if s.delta.is_empty() { p.clone() } else { shifted_inputs(p)? };
    let mut z_inputs = s.x.clone();
    z_inputs.extend(s.delta.iter().cloned());
    let mut sim = Simulation::pivp(&perturbed).inputs(z_inputs).args(s.args.clone()).horizon(s.horizon);
    if !s.e.is_empty() {
        sim = sim.perturbation(s.e.clone());
    }
    if !s.z0_dev.is_empty() {
        sim = sim.initial_error(s.z0_dev.clone());
    }
    let z = sim.run(&s.cfg).map_err(sim_err)?;
    let t_end = y.t_end().min(z.t_end());
    // measured, so that rounding in y(0) + dev cannot exceed the bound at t = 0
    let z0_dev = y.samples[0].state.iter().zip(&z.samples[0].state).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let inp = DependencyInputs { p: &p.rhs, y: &y, x: &s.x, delta: &s.delta, e: &s.e, z0_dev, eps: s.eps };
    let opts = DependencyOptions { grid: grid(0.0, t_end, s.points), quad_tol: s.quad_tol, envelope: s.envelope.clone() };
    let (curve, mut report) = dependency_bound(&inp, Some(&z), &opts);
    if !(y.completed() && z.completed()) {
        report.notes.push(format!("runs ended early: clean {:?}, perturbed {:?}", y.status, z.status));
    }
    Ok((curve, report))
}
