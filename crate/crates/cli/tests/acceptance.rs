//! One PASS/FAIL line per acceptance criterion. Exits nonzero if any fails.

use anyhow::{ensure, Result};
use odeprog::bounds::{verify_batch, BoundKind, BoundReport};
use odeprog::par::Exec;
use odeprog::sim::{InputSignal, Simulation, SolverConfig};
use odeprog_cli::run::{self, Flags};
use odeprog_cli::scenarios::{self, LINEAR_MU_REL, LOWERING_TOL};
use std::time::{Duration, Instant};

const SEED: u64 = 1;
const SINE_TOL: f64 = 1e-10;
const PERIODICITY_TOL: f64 = 1e-9;
const AGREEMENT_TOL: f64 = 1e-6;
const RELOCK_BUDGET: Duration = Duration::from_secs(300);

type Criterion = (&'static str, fn() -> Result<Verdict>);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(report: &BoundReport, extra: &str) -> Verdict {
    let worst: Vec<String> = report.worst_by_check().iter().map(|(c, m)| format!("{c} {m:.2e}")).collect();
    let mut detail = format!("margin {:.3e} [{}]", report.min_margin, worst.join(", "));
    if !extra.is_empty() {
        detail = format!("{extra}; {detail}");
    }
    if let Some(r) = &report.reason {
        detail.push_str(&format!("; {r}"));
    }
    Verdict { pass: report.pass, detail }
}

fn batch(kind: BoundKind, s: &[odeprog::bounds::Scenario]) -> Result<BoundReport> {
    let parts = verify_batch(Exec::from_jobs(0), s).into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(BoundReport::merge(kind, parts))
}

fn has_checks(r: &BoundReport, names: &[&str]) -> Result<()> {
    let seen = r.worst_by_check();
    for n in names {
        ensure!(seen.iter().any(|(c, _)| c == n), "no applicable `{n}` samples");
    }
    Ok(())
}

fn flags(dir: &std::path::Path) -> Flags {
    Flags { out_dir: dir.to_path_buf(), base_dir: dir.to_path_buf(), seed: SEED, ..Flags::default() }
}

fn sine() -> Result<Verdict> {
    let tr = Simulation::pivp(&scenarios::sine_pivp()).horizon(20.0).run(&SolverConfig::taylor(20, 1e-12))?;
    ensure!(tr.completed(), "run stopped at {}", tr.t_end());
    let err = (0..=20_000).map(|i| i as f64 * 1e-3).fold(0.0f64, |m, t| m.max((tr.state_at(t)[0] - t.sin()).abs()));
    Ok(Verdict { pass: err <= SINE_TOL, detail: format!("max |y1 - sin| = {err:.3e} (tol {SINE_TOL:.0e})") })
}

fn lowering() -> Result<Verdict> {
    let systems = scenarios::expression_systems(SEED, 20);
    let parts = systems
        .iter()
        .map(|s| scenarios::lowering_agreement(s, &vec![InputSignal::constant(0.0); s.input_arity], 5.0))
        .collect::<Result<Vec<_>>>()?;
    let worst = parts.iter().flat_map(|p| &p.samples).fold(0.0f64, |m, s| m.max(s.deviation));
    let r = BoundReport::merge(BoundKind::Lowering, parts);
    Ok(verdict(&r, &format!("{} systems, sup deviation {worst:.3e} (tol {LOWERING_TOL:.0e})", systems.len())))
}

fn reach() -> Result<Verdict> {
    let r = batch(BoundKind::Reach, &scenarios::reach(SEED, 100, 4.0))?;
    has_checks(&r, &["integral", "uniform"])?;
    Ok(verdict(&r, "100 scenarios"))
}

fn reach_worst() -> Result<Verdict> {
    let r = batch(BoundKind::Reach, &scenarios::reach_worst(SEED, 100, 6.0))?;
    Ok(verdict(&r, "100 scenarios"))
}

fn plil() -> Result<Verdict> {
    let r = batch(BoundKind::Plil, &scenarios::plil(SEED, 20, None, 4.0))?;
    Ok(verdict(&r, &format!("20 profiles, periodicity tol {PERIODICITY_TOL:.0e}")))
}

fn sample() -> Result<Verdict> {
    let r = batch(BoundKind::Sample, &scenarios::sample(SEED, 50, None, 4.0))?;
    Ok(verdict(&r, "50 runs"))
}

fn slowstop() -> Result<Verdict> {
    let r = batch(BoundKind::SlowStop, &scenarios::slowstop(SEED, 20, None))?;
    Ok(verdict(&r, "20 (T, theta) pairs"))
}

fn dependency() -> Result<Verdict> {
    let sc = scenarios::dependency(SEED, 10, None, 4.0);
    let paired = scenarios::run_dependency(&sc)?;
    let linear = scenarios::linear_dependency()?;
    has_checks(&linear, &["linear_exact"])?;
    let r = BoundReport::merge(BoundKind::Dependency, vec![paired, linear]);
    Ok(verdict(&r, &format!("{} paired runs + linear case (rel {LINEAR_MU_REL:.0e})", sc.len())))
}

fn tanh() -> Result<Verdict> {
    let r = batch(BoundKind::Tanh, &[scenarios::tanh(-50.0, 50.0, 20_001)])?;
    Ok(verdict(&r, "20001 points on [-50, 50]"))
}

fn roundtrip() -> Result<Verdict> {
    let dir = tempfile::tempdir()?;
    let w = run::builtin_witness("square_atsp")?;
    let r = run::roundtrip(&w, &flags(dir.path()))?;
    has_checks(&r, &["w_upper", "length", "agreement", "outputs_preserved", "unit_speed"])?;
    Ok(verdict(&r, &format!("agreement tol {AGREEMENT_TOL:.0e}")))
}

fn relock() -> Result<Verdict> {
    let dir = tempfile::tempdir()?;
    let src = "witness core = square_axp;\nwitness p = online(core);\nverify online witness=p steps=((0, 0.8), (30, -1.1)) mu=3 horizon=60;\n";
    let start = Instant::now();
    let out = run::run_source(src, &flags(dir.path()))?;
    let took = start.elapsed();
    let r = &out.reports[0].report;
    has_checks(r, &["tube"])?;
    let mut v = verdict(r, &format!("{:.1} s", took.as_secs_f64()));
    v.pass &= took <= RELOCK_BUDGET;
    Ok(v)
}

fn determinism() -> Result<Verdict> {
    let src = "system sine { y1' = y2; y2' = -y1; init (0, 1) }\n\
               system soft { input u; y' = tanh(u - y) + norm[delta=0.1](y, 1); init (0.5) }\n\
               signal wave = sine(1, 2);\n\
               simulate sine horizon=20 dt=0.01;\n\
               simulate soft horizon=10 inputs=(wave) dt=0.01;\n\
               verify reach trials=20;\n";
    let (a, b) = (tempfile::tempdir()?, tempfile::tempdir()?);
    run::run_source(src, &flags(a.path()))?;
    run::run_source(src, &Flags { jobs: 4, ..flags(b.path()) })?;
    let mut files = 0;
    for name in ["sine.csv", "soft.csv", "02-reach.json"] {
        let (x, y) = (std::fs::read(a.path().join(name))?, std::fs::read(b.path().join(name))?);
        ensure!(x == y, "{name} differs between runs");
        files += 1;
    }
    Ok(Verdict { pass: true, detail: format!("{files} artifacts bit-identical across runs (jobs 1 vs 4)") })
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("sine circuit", sine),
        ("lowering soundness", lowering),
        ("reach", reach),
        ("reach worst error", reach_worst),
        ("plil", plil),
        ("sample and hold", sample),
        ("slow-stop", slowstop),
        ("parameter dependency", dependency),
        ("tanh bounds", tanh),
        ("length rescaling round trip", roundtrip),
        ("online re-lock", relock),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = f().unwrap_or_else(|e| Verdict { pass: false, detail: format!("error: {e:#}") });
        failed += usize::from(!v.pass);
        println!(
            "{} {:>2} {name}: {} ({:.1} s)",
            if v.pass { "PASS" } else { "FAIL" },
            i + 1,
            v.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
