//! Executes the directives of an elaborated program.

use crate::dsl::{self, Directive, DirectiveKind, Env, Program, SystemDef, Value, WitnessDef};
use crate::scenarios;
use anyhow::{anyhow, bail, Context, Result};
use odeprog::bounds::{verify_batch, BoundKind, BoundReport, BoundSample, Scenario};
use odeprog::circuit::{lower_system, LowerOptions, LoweringCert, Pivp};
use odeprog::par::Exec;
use odeprog::pipelines::{
    alp_to_atsp, arp_to_asp, atsp_as_awp, atsp_to_alp, awp_to_arp, build_online_pipeline, builtin, check_length_accuracy,
    check_online_relock, check_reparameterization, check_speed, check_time_accuracy, BoundName, ClassTag, ComputabilityWitness,
    OnlineRun, SpeedCheck, TimeCase,
};
use odeprog::sim::{next_breakpoint, InputSignal, Simulation, SolverConfig, Trace};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Command-line settings shared by all directives. Directive options
/// take precedence over these.
#[derive(Debug, Clone)]
pub struct Flags {
    pub tol: f64,
    pub order: usize,
    /// Bits used to evaluate polynomial initial values before integration.
    pub precision_bits: u32,
    pub horizon: Option<f64>,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub format: Format,
    pub jobs: usize,
    /// Directory that relative file names in the program refer to.
    pub base_dir: PathBuf,
}

impl Default for Flags {
    fn default() -> Self {
        Flags {
            tol: 1e-12,
            order: 20,
            precision_bits: 53,
            horizon: None,
            seed: 1,
            out_dir: PathBuf::from("out"),
            format: Format::Csv,
            jobs: 1,
            base_dir: PathBuf::from("."),
        }
    }
}

impl Flags {
    fn exec(&self) -> Exec {
        Exec::from_jobs(self.jobs)
    }

    fn taylor(&self) -> SolverConfig {
        SolverConfig::taylor(self.order, self.tol)
    }
}

/// Result of one simulation: column names and the trace.
#[derive(Debug, Clone)]
pub struct SimResult {
    pub system: String,
    pub columns: Vec<String>,
    pub trace: Trace,
    pub method: String,
    pub dt: f64,
}

impl SimResult {
    pub fn csv(&self) -> String {
        let mut s = String::from("t");
        for c in &self.columns {
            s.push(',');
            s.push_str(c);
        }
        s.push_str(",length,space,budget\n");
        for smp in self.trace.resample(self.dt) {
            write!(s, "{}", smp.t).unwrap();
            for v in &smp.state {
                write!(s, ",{v}").unwrap();
            }
            writeln!(s, ",{},{},{}", smp.length, smp.space, smp.budget).unwrap();
        }
        s
    }

    pub fn json(&self) -> serde_json::Value {
        let samples = self.trace.resample(self.dt);
        serde_json::json!({
            "system": self.system,
            "method": self.method,
            "status": self.trace.status,
            "columns": self.columns,
            "samples": samples,
        })
    }

    /// Value of the named column at `t`.
    pub fn value(&self, column: &str, t: f64) -> Option<f64> {
        let i = self.columns.iter().position(|c| c == column)?;
        Some(self.trace.state_at(t)[i])
    }
}

#[derive(Debug, Clone)]
pub struct NamedReport {
    pub label: String,
    pub report: BoundReport,
    pub scenarios: usize,
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub simulations: Vec<SimResult>,
    pub reports: Vec<NamedReport>,
    pub artifacts: Vec<PathBuf>,
    pub log: Vec<String>,
}

impl Outcome {
    pub fn all_pass(&self) -> bool {
        self.reports.iter().all(|r| r.report.pass)
    }
}

fn opt_f64(d: &Directive, key: &str) -> Result<Option<f64>> {
    d.opt(key).map(dsl::value_f64).transpose().map_err(|e| anyhow!("{e}"))
}

fn opt_usize(d: &Directive, key: &str) -> Result<Option<usize>> {
    match opt_f64(d, key)? {
        Some(v) if v >= 0.0 && v.fract() == 0.0 => Ok(Some(v as usize)),
        Some(v) => bail!("option `{key}` must be a nonnegative integer, got {v}"),
        None => Ok(None),
    }
}

fn opt_name(d: &Directive, key: &str) -> Result<Option<String>> {
    match d.opt(key) {
        None => Ok(None),
        Some(Value::Ident(i)) => Ok(Some(i.name.clone())),
        Some(Value::Str(s, _)) => Ok(Some(s.clone())),
        Some(_) => bail!("option `{key}` expects a name"),
    }
}

fn signals(env: &Env, d: &Directive, key: &str) -> Result<Vec<InputSignal>> {
    match d.opt(key) {
        None => Ok(Vec::new()),
        Some(v) => dsl::value_names(v)
            .map_err(|e| anyhow!("{e}"))?
            .iter()
            .map(|i| env.signals.get(&i.name).cloned().ok_or_else(|| anyhow!("signal `{}` is not defined", i.name)))
            .collect(),
    }
}

fn lowered_columns(def: &SystemDef, cert: &LoweringCert, dim: usize, prefix: &[String]) -> Vec<String> {
    let mut cols = prefix.to_vec();
    for a in &cert.aux {
        for (k, &s) in a.states.iter().enumerate() {
            if s >= cols.len() {
                cols.resize(s, String::new());
                cols.push(format!("{}{}", a.prim, if a.states.len() > 1 { format!(".{k}") } else { String::new() }));
            }
        }
    }
    if let Some(c) = cert.clock {
        cols.resize(c, String::new());
        cols.push("clock".into());
    }
    cols.resize(dim, String::new());
    for (i, c) in cols.iter_mut().enumerate() {
        if c.is_empty() {
            *c = format!("{}.aux{i}", def.name);
        }
    }
    cols
}

/// Initial state of a polynomial system evaluated with `bits` of precision.
fn precise_init(p: &Pivp, args: &[f64], bits: u32) -> Result<Option<Vec<f64>>> {
    if bits == 53 {
        return Ok(None);
    }
    let Some(q) = p.init_polys() else { return Ok(None) };
    let v = q.components.iter().map(|c| Ok(c.eval(args, bits)?.to_f64())).collect::<Result<Vec<_>>>()?;
    Ok(Some(v))
}

/// Integrates a declared system.
///
/// The polynomial form runs the Taylor method. Systems whose inputs enter
/// primitives are lowered with the initial input values when the inputs are
/// smooth; otherwise they run on the embedded pair over the original states.
pub fn simulate_system(def: &SystemDef, d: &Directive, env: &Env, flags: &Flags) -> Result<SimResult> {
    let horizon = opt_f64(d, "horizon")?.or(flags.horizon).unwrap_or(10.0);
    let tol = opt_f64(d, "tol")?.unwrap_or(flags.tol);
    let order = opt_usize(d, "order")?.unwrap_or(flags.order);
    let dt = opt_f64(d, "dt")?.unwrap_or(horizon / 1000.0);
    if !(horizon > 0.0 && dt > 0.0) {
        bail!("horizon and dt must be positive");
    }
    let method = opt_name(d, "method")?.unwrap_or_else(|| "auto".into());
    let args = match d.opt("args") {
        Some(v) => dsl::value_nums(v).map_err(|e| anyhow!("{e}"))?,
        None => vec![0.0; def.args.len()],
    };
    if args.len() != def.args.len() {
        bail!("system `{}` takes {} argument(s), got {}", def.name, def.args.len(), args.len());
    }
    let inputs = signals(env, d, "inputs")?;
    if inputs.len() != def.inputs.len() {
        bail!("system `{}` takes {} input signal(s), got {}", def.name, def.inputs.len(), inputs.len());
    }
    let taylor = SolverConfig::taylor(order, tol);
    let embedded = SolverConfig::embedded(tol);
    let mut named = def.states.clone();

    if let Some(ss) = &def.slowstop {
        if method == "embedded" {
            bail!("slow-stop systems run on their polynomial form");
        }
        named.push("A".into());
        named.push("psi".into());
        let cols = lowered_columns(def, &ss.cert, ss.pivp.dim, &named);
        let zero = vec![InputSignal::constant(0.0); ss.pivp.input_arity];
        let mut sim = Simulation::pivp(&ss.pivp).inputs(zero).args(vec![0.0; ss.pivp.n_args]).horizon(horizon);
        if let Some(y0) = precise_init(&ss.pivp, &vec![0.0; ss.pivp.n_args], flags.precision_bits)? {
            sim = sim.initial_state(y0);
        }
        let trace = sim.run(&taylor)?;
        return Ok(SimResult { system: def.name.clone(), columns: cols, trace, method: "taylor".into(), dt });
    }

    let smooth_inputs = next_breakpoint(&inputs, 0.0).is_none();
    let lowered: Option<(Pivp, LoweringCert)> = match (&def.lowered, method.as_str()) {
        (_, "embedded") => None,
        (Some(l), _) => Some(l.clone()),
        (None, m) if smooth_inputs || m == "taylor" => {
            let values = inputs.iter().map(|s| s.value(0.0)).collect();
            match lower_system(&def.system, &LowerOptions { input_values: Some(values), ..Default::default() }) {
                Ok(l) => Some(l),
                Err(e) if m == "taylor" => return Err(e).context("the Taylor method needs a polynomial form"),
                Err(_) => None,
            }
        }
        _ => None,
    };
    if !matches!(method.as_str(), "auto" | "taylor" | "embedded") {
        bail!("unknown method `{method}` (expected auto, taylor or embedded)");
    }
    let result = match lowered {
        Some((p, cert)) => {
            let cols = lowered_columns(def, &cert, p.dim, &named);
            let mut sim = Simulation::pivp(&p).inputs(cert.lowered_inputs(&inputs)).args(args.clone()).horizon(horizon);
            if let Some(y0) = precise_init(&p, &args, flags.precision_bits)? {
                sim = sim.initial_state(y0);
            }
            SimResult { system: def.name.clone(), columns: cols, trace: sim.run(&taylor)?, method: "taylor".into(), dt }
        }
        None => {
            let trace = Simulation::expr(&def.system).inputs(inputs).args(args).horizon(horizon).run(&embedded)?;
            named.truncate(def.dim());
            SimResult { system: def.name.clone(), columns: named, trace, method: "embedded".into(), dt }
        }
    };
    Ok(result)
}

fn load_witness(path: &Path) -> Result<ComputabilityWitness> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let v: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(ComputabilityWitness::from_json(&v)?)
}

pub fn builtin_witness(name: &str) -> Result<ComputabilityWitness> {
    match name {
        "square_atsp" => Ok(builtin::square_atsp()),
        "square_axp" => Ok(builtin::square_axp()),
        other => bail!("unknown builtin witness `{other}`"),
    }
}

pub fn apply_transform(kind: &str, w: &ComputabilityWitness) -> Result<ComputabilityWitness> {
    Ok(match kind {
        "atsp-to-alp" => atsp_to_alp(w)?,
        "alp-to-atsp" => alp_to_atsp(w, &SpeedCheck::for_witness(w))?,
        "atsp-as-awp" => atsp_as_awp(w)?,
        "awp-to-arp" => awp_to_arp(w)?,
        "arp-to-asp" => arp_to_asp(w)?,
        "online" => build_online_pipeline(w)?,
        other => bail!("unknown transformation `{other}`"),
    })
}

/// A program-relative file, or one written earlier to the output directory.
fn locate(flags: &Flags, p: &Path) -> PathBuf {
    let here = flags.base_dir.join(p);
    if here.exists() {
        here
    } else {
        flags.out_dir.join(p)
    }
}

/// Builds a witness by name: declared, builtin or a JSON file.
pub fn resolve_witness(env: &Env, name: &str, flags: &Flags) -> Result<ComputabilityWitness> {
    match env.witnesses.get(name) {
        Some(WitnessDef::Builtin(b)) => builtin_witness(b),
        Some(WitnessDef::Load(p)) => load_witness(&locate(flags, p)),
        Some(WitnessDef::Transform { kind, source }) => {
            let src = resolve_witness(env, source, flags)?;
            apply_transform(kind, &src).with_context(|| format!("building witness `{name}`"))
        }
        None if name.contains('.') || name.contains('/') => load_witness(&locate(flags, Path::new(name))),
        None => builtin_witness(name),
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Class-appropriate verification of a witness on `cases` points of its domain.
pub fn verify_witness(w: &ComputabilityWitness, cases: usize, flags: &Flags) -> Result<BoundReport> {
    w.validate()?;
    let cfg = flags.taylor();
    let mut points = w.domain.probe_points();
    points.extend(w.domain.sample(flags.seed, cases));
    points.truncate(cases.max(1));
    let mus = [1.0, 2.0];
    let report = match w.class {
        ClassTag::Alp => {
            let cs: Vec<(Vec<f64>, f64)> = points.iter().zip(mus.iter().cycle()).map(|(x, &m)| (x.clone(), m)).collect();
            let horizon = cs
                .iter()
                .map(|(x, m)| w.eval_bound(BoundName::Omega, &[inf_norm(x), *m]))
                .collect::<Result<Vec<_>, _>>()?
                .into_iter()
                .fold(0.0, f64::max)
                + 2.0;
            check_length_accuracy(w, &cs, horizon, 0.05, &cfg)?
        }
        ClassTag::Atsp | ClassTag::Awp | ClassTag::Arp | ClassTag::Asp => {
            let tc = points
                .iter()
                .zip(mus.iter().cycle())
                .map(|(x, &m)| {
                    let x = x[..w.domain.dim()].to_vec();
                    let om = w.eval_bound(BoundName::Omega, &[inf_norm(&x), m])?;
                    let horizon = flags.horizon.unwrap_or(om + 3.0);
                    Ok(TimeCase { dt: horizon / 400.0, ..TimeCase::clean(x, m, horizon) })
                })
                .collect::<Result<Vec<_>>>()?;
            check_time_accuracy(w, &tc, &cfg)?
        }
        ClassTag::Aop => {
            let x = points[0].clone();
            let om = w.eval_bound(BoundName::Omega, &[inf_norm(&x), 2.0])?;
            let horizon = flags.horizon.unwrap_or(om + 6.0);
            let run = OnlineRun { steps: vec![(0.0, x)], mu_bar: 2.0, horizon, dt: 0.05, floor: 1e-10 };
            check_online_relock(w, &run, &cfg)?.report
        }
        ClassTag::Axp => {
            let online = build_online_pipeline(w)?;
            return verify_witness(&online, cases, flags);
        }
    };
    Ok(report)
}

/// Length rescaling round trip: clock augmentation keeps the outputs and
/// reaches unit speed, and the rescaled witness matches its source.
pub fn roundtrip(w: &ComputabilityWitness, flags: &Flags) -> Result<BoundReport> {
    const OUTPUT_TOL: f64 = 1e-10;
    const AGREEMENT: f64 = 1e-6;
    let cfg = flags.taylor();
    let alp = atsp_to_alp(w)?;
    let d = w.pivp.dim;
    let mut samples = Vec::new();
    // the first d components of the augmented field are the original ones
    for (k, (a, b)) in alp.pivp.rhs.components.iter().zip(&w.pivp.rhs.components).enumerate() {
        let old: Vec<usize> = (0..w.pivp.rhs.arity).collect();
        let same = *a == b.remap(alp.pivp.rhs.arity, &old);
        samples.push(BoundSample::new("field_unchanged", k as f64, 0.0, if same { 0.0 } else { 1.0 }, true));
    }
    let points = w.domain.probe_points();
    for x in &points {
        let t1 = Simulation::pivp(&w.pivp).args(x.clone()).horizon(8.0).run(&cfg)?;
        let t2 = Simulation::pivp(&alp.pivp).args(x.clone()).horizon(8.0).run(&cfg)?;
        for i in 0..=160 {
            let t = i as f64 * 0.05;
            let (a, b) = (t1.state_at(t), t2.state_at(t));
            let dev = w.pivp.outputs.iter().fold(0.0f64, |m, &o| m.max((a[o] - b[o]).abs()));
            samples.push(BoundSample::new("outputs_preserved", t, OUTPUT_TOL, dev, true));
        }
    }
    let speed = check_speed(&alp, &points, 10.0, 0.025, &cfg)?;
    samples.push(BoundSample::new("unit_speed", 0.0, speed, 1.0 - 1e-9, true));
    let atsp = alp_to_atsp(&alp, &SpeedCheck::for_witness(&alp))?;
    let mut parts = vec![BoundReport::from_samples(BoundKind::Pipeline, samples)];
    let mut notes = Vec::new();
    for x in [&points[0], &points[points.len() - 1]] {
        let r = check_reparameterization(&alp, &atsp, x, 12.0, 0.1, AGREEMENT, &cfg)?;
        notes.push(format!("x = {x:?}: max deviation {:.3e}, w in [{:.4}, {:.4}]", r.max_deviation, r.min_w, r.max_w));
        parts.push(r.report);
    }
    let mut report = BoundReport::merge(BoundKind::Pipeline, parts);
    report.notes.extend(notes);
    report.notes.push(format!("min speed of the clock-augmented system {speed:.6} over {d} original states"));
    Ok(report)
}

fn step_list(v: &Value) -> Result<Vec<(f64, Vec<f64>)>> {
    let Value::Tuple(items, _) = v else { bail!("steps are a tuple of `(time, value)` pairs") };
    items
        .iter()
        .map(|it| match it {
            Value::Tuple(p, _) if p.len() == 2 => {
                let t = dsl::value_f64(&p[0]).map_err(|e| anyhow!("{e}"))?;
                let x = dsl::value_nums(&p[1]).map_err(|e| anyhow!("{e}"))?;
                Ok((t, x))
            }
            _ => bail!("steps are a tuple of `(time, value)` pairs"),
        })
        .collect()
}

fn batch(label: &str, scenarios: &[Scenario], flags: &Flags) -> Result<NamedReport> {
    let kind = scenarios.first().map(Scenario::kind).unwrap_or(BoundKind::Reach);
    let results = verify_batch(flags.exec(), scenarios);
    let mut parts = Vec::with_capacity(results.len());
    for (i, r) in results.into_iter().enumerate() {
        parts.push(r.with_context(|| format!("scenario {i}"))?);
    }
    Ok(NamedReport { label: label.into(), report: BoundReport::merge(kind, parts), scenarios: scenarios.len() })
}

fn verify(d: &Directive, env: &Env, flags: &Flags) -> Result<NamedReport> {
    let name = d.target.name.as_str();
    let trials = opt_usize(d, "trials")?;
    let seed = flags.seed;
    let system = |key: &str| -> Result<Option<&SystemDef>> {
        Ok(match opt_name(d, key)? {
            Some(n) => Some(env.systems.get(&n).ok_or_else(|| anyhow!("system `{n}` is not defined"))?),
            None => None,
        })
    };
    let single = |report: BoundReport, count: usize| NamedReport { label: name.into(), report, scenarios: count };
    match name {
        "tanh-bound" => {
            let s = scenarios::tanh(opt_f64(d, "lo")?.unwrap_or(-50.0), opt_f64(d, "hi")?.unwrap_or(50.0), opt_usize(d, "points")?.unwrap_or(20001));
            batch(name, &[s], flags)
        }
        "reach" => {
            let n = trials.unwrap_or(100);
            let form = opt_name(d, "form")?.unwrap_or_else(|| "integral".into());
            let s = match form.as_str() {
                "integral" => scenarios::reach(seed, n, opt_f64(d, "horizon")?.unwrap_or(4.0)),
                "worst" => scenarios::reach_worst(seed, n, opt_f64(d, "horizon")?.unwrap_or(6.0)),
                other => bail!("unknown reach form `{other}` (expected integral or worst)"),
            };
            batch(name, &s, flags)
        }
        "plil" | "sample" => {
            let gadget = match opt_name(d, "gadget")? {
                Some(g) => Some(env.gadgets.get(&g).ok_or_else(|| anyhow!("gadget `{g}` is not defined"))?.clone()),
                None => None,
            };
            let s = if name == "plil" {
                let fixed = match gadget {
                    Some(dsl::Gadget::Plil(p)) => Some(p),
                    None => None,
                    Some(_) => bail!("gadget is not a plil"),
                };
                scenarios::plil(seed, trials.unwrap_or(20), fixed, opt_f64(d, "span")?.unwrap_or(4.0))
            } else {
                let fixed = match gadget {
                    Some(dsl::Gadget::Sample(p)) => Some(p),
                    None => None,
                    Some(_) => bail!("gadget is not a sample"),
                };
                scenarios::sample(seed, trials.unwrap_or(50), fixed, opt_f64(d, "horizon")?.unwrap_or(4.0))
            };
            batch(name, &s, flags)
        }
        "slowstop" => {
            let fixed = match system("system")? {
                Some(def) => {
                    let ss = def.slowstop.as_ref().ok_or_else(|| anyhow!("system `{}` has no slow-stop wrapper", def.name))?;
                    let p = odeprog::poly::PolyVector::new(
                        def.dim(),
                        def.system.rhs.iter().map(|e| odeprog::circuit::as_poly(e, def.dim()).expect("checked polynomial")).collect(),
                    )?;
                    Some((ss.spec, p, def.system.initial_state(&[])?))
                }
                None => None,
            };
            batch(name, &scenarios::slowstop(seed, trials.unwrap_or(20), fixed), flags)
        }
        "dependency" => {
            let horizon = opt_f64(d, "horizon")?.unwrap_or(4.0);
            let base = match system("system")? {
                Some(def) => Some(
                    def.lowered
                        .as_ref()
                        .map(|l| l.0.clone())
                        .ok_or_else(|| anyhow!("system `{}` has no polynomial form", def.name))?,
                ),
                None => None,
            };
            let fixed = base.is_some();
            let mut sc = scenarios::dependency(seed, trials.unwrap_or(10), base, horizon);
            let x = signals(env, d, "perturbation")?;
            for s in &mut sc {
                if let Some(eps) = opt_f64(d, "eps")? {
                    s.eps = eps;
                }
                s.x = vec![InputSignal::constant(0.0); s.pivp.input_arity];
                if !x.is_empty() {
                    s.e = x.clone();
                }
            }
            let mut parts = vec![scenarios::run_dependency(&sc)?];
            if !fixed {
                parts.push(scenarios::linear_dependency()?);
            }
            Ok(single(BoundReport::merge(BoundKind::Dependency, parts), sc.len() + usize::from(!fixed)))
        }
        "continuity" => {
            let f = opt_name(d, "fn")?.unwrap_or_else(|| "tanh".into());
            let n = trials.unwrap_or(100);
            Ok(single(scenarios::continuity(seed, n, &f)?, n))
        }
        "lowering" => {
            let horizon = opt_f64(d, "horizon")?.unwrap_or(5.0);
            let systems = match system("system")? {
                Some(def) => vec![def.system.clone()],
                None => scenarios::expression_systems(seed, trials.unwrap_or(20)),
            };
            let parts = odeprog::par::map(flags.exec(), &systems, |s| {
                let zero = vec![InputSignal::constant(0.0); s.input_arity];
                scenarios::lowering_agreement(s, &zero, horizon).map_err(|e| e.to_string())
            });
            let parts = parts.into_iter().collect::<Result<Vec<_>, _>>().map_err(|e| anyhow!(e))?;
            Ok(single(BoundReport::merge(BoundKind::Lowering, parts), systems.len()))
        }
        "witness" => {
            let wname = opt_name(d, "witness")?.ok_or_else(|| anyhow!("`verify witness` needs witness=NAME"))?;
            let w = resolve_witness(env, &wname, flags)?;
            let cases = opt_usize(d, "cases")?.unwrap_or(3);
            Ok(NamedReport { label: format!("witness {wname} ({})", w.class.name()), report: verify_witness(&w, cases, flags)?, scenarios: cases })
        }
        "roundtrip" => {
            let wname = opt_name(d, "witness")?.unwrap_or_else(|| "square_atsp".into());
            let w = resolve_witness(env, &wname, flags)?;
            Ok(single(roundtrip(&w, flags)?, 1))
        }
        "online" => {
            let wname = opt_name(d, "witness")?.unwrap_or_else(|| "square_axp".into());
            let mut w = resolve_witness(env, &wname, flags)?;
            if w.class == ClassTag::Axp {
                w = build_online_pipeline(&w)?;
            }
            let steps = match d.opt("steps") {
                Some(v) => step_list(v)?,
                None => vec![(0.0, vec![0.8]), (30.0, vec![-1.1])],
            };
            let run = OnlineRun {
                steps,
                mu_bar: opt_f64(d, "mu")?.unwrap_or(3.0),
                horizon: opt_f64(d, "horizon")?.or(flags.horizon).unwrap_or(60.0),
                dt: 0.05,
                floor: 1e-10,
            };
            let out = check_online_relock(&w, &run, &flags.taylor())?;
            let mut report = out.report;
            report.notes.push(format!("lock windows {:?}", out.windows));
            Ok(single(report, 1))
        }
        other => bail!("unknown check `{other}`"),
    }
}

fn write_artifact(flags: &Flags, name: &str, content: &str, out: &mut Outcome) -> Result<PathBuf> {
    std::fs::create_dir_all(&flags.out_dir).with_context(|| format!("creating {}", flags.out_dir.display()))?;
    let path = flags.out_dir.join(name);
    std::fs::write(&path, content).with_context(|| format!("writing {}", path.display()))?;
    out.artifacts.push(path.clone());
    Ok(path)
}

fn slug(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

fn run_directive(d: &Directive, index: usize, env: &Env, flags: &Flags, out: &mut Outcome) -> Result<()> {
    match d.kind {
        DirectiveKind::Simulate => {
            let def = &env.systems[&d.target.name];
            let res = simulate_system(def, d, env, flags)?;
            let format = match opt_name(d, "format")?.as_deref() {
                None => flags.format,
                Some("csv") => Format::Csv,
                Some("json") => Format::Json,
                Some(f) => bail!("unknown format `{f}`"),
            };
            let (ext, text) = match format {
                Format::Csv => ("csv", res.csv()),
                Format::Json => ("json", serde_json::to_string_pretty(&res.json())? + "\n"),
            };
            let file = opt_name(d, "out")?.unwrap_or_else(|| format!("{}.{ext}", def.name));
            let path = write_artifact(flags, &file, &text, out)?;
            out.log.push(format!(
                "simulate {}: {} to t = {} ({:?}), {} columns -> {}",
                def.name,
                res.method,
                res.trace.t_end(),
                res.trace.status,
                res.columns.len(),
                path.display()
            ));
            if !res.trace.completed() {
                bail!("integration stopped early: {:?}", res.trace.status);
            }
            out.simulations.push(res);
        }
        DirectiveKind::Verify => {
            let r = verify(d, env, flags)?;
            let json = serde_json::json!({
                "check": r.label,
                "scenarios": r.scenarios,
                "seed": flags.seed,
                "result": r.report.to_json(),
            });
            let path = write_artifact(flags, &format!("{:02}-{}.json", index, slug(&d.target.name)), &(serde_json::to_string_pretty(&json)? + "\n"), out)?;
            let worst: Vec<String> = r.report.worst_by_check().iter().map(|(c, m)| format!("{c} {m:.3e}")).collect();
            out.log.push(format!(
                "{} verify {} ({} scenario(s)): margin {:.3e} [{}] -> {}",
                if r.report.pass { "PASS" } else { "FAIL" },
                r.label,
                r.scenarios,
                r.report.min_margin,
                worst.join(", "),
                path.display()
            ));
            out.reports.push(r);
        }
        DirectiveKind::Transform => {
            let src = d.source.as_ref().expect("transform source");
            let w = resolve_witness(env, &src.name, flags)?;
            let t = apply_transform(&d.target.name, &w)?;
            let file = opt_name(d, "out")?.unwrap_or_else(|| format!("{}-{}.json", slug(&t.name), t.class.name()));
            let path = write_artifact(flags, &file, &(serde_json::to_string_pretty(&t.to_json())? + "\n"), out)?;
            out.log.push(format!("transform {} {}: {} -> {} ({})", d.target.name, src.name, w.class.name(), t.class.name(), path.display()));
        }
    }
    Ok(())
}

/// Runs every directive in order. Failed checks are recorded in the
/// outcome; errors stop the run and name the directive.
pub fn run_program(prog: &Program, env: &Env, flags: &Flags) -> Result<Outcome> {
    let mut out = Outcome::default();
    for (i, d) in prog.directives().enumerate() {
        run_directive(d, i, env, flags, &mut out)
            .with_context(|| format!("{}:{}: {} {}", d.span.line, d.span.col, d.kind.keyword(), d.target.name))?;
    }
    Ok(out)
}

/// Parses, elaborates and runs program text.
pub fn run_source(src: &str, flags: &Flags) -> Result<Outcome> {
    let prog = dsl::parse(src)?;
    let env = dsl::elaborate(&prog)?;
    run_program(&prog, &env, flags)
}
