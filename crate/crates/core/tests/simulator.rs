use odeprog::circuit::{Expr, ExprSystem, Pivp};
use odeprog::poly::{MultiPoly, PolyVector};
use odeprog::sim::{SystemRef, integrate, trace_metrics, InputSignal, Simulation, SolverConfig, TraceStatus};

fn polys(arity: usize, src: &[&str]) -> PolyVector {
    PolyVector::new(arity, src.iter().map(|s| MultiPoly::parse_with_arity(s, arity).unwrap()).collect()).unwrap()
}

fn sine() -> Pivp {
    Pivp::with_constant_init(polys(2, &["x2", "-x1"]), 0, &[0.0, 1.0], vec![0]).unwrap()
}

#[test]
fn sine_system_stays_on_analytic_solution() {
    let tr = Simulation::pivp(&sine()).horizon(20.0).run(&SolverConfig::taylor(20, 1e-12)).unwrap();
    assert!(tr.completed());
    let mut worst: f64 = 0.0;
    for i in 0..=4000 {
        let t = 20.0 * i as f64 / 4000.0;
        let y = tr.state_at(t);
        worst = worst.max((y[0] - t.sin()).abs()).max((y[1] - t.cos()).abs());
    }
    assert!(worst <= 1e-10, "max deviation {worst:e}");
}

#[test]
fn constant_system_has_zero_length() {
    let p = Pivp::with_constant_init(polys(1, &["0"]), 0, &[-2.5], vec![0]).unwrap();
    let tr = Simulation::pivp(&p).horizon(3.0).run(&SolverConfig::default()).unwrap();
    let m = tr.last();
    assert_eq!(m.state, vec![-2.5]);
    assert_eq!(m.length, 0.0);
    assert_eq!(m.space, 2.5);
}

#[test]
fn exponential_value_and_length() {
    let p = Pivp::with_constant_init(polys(1, &["x1"]), 0, &[1.0], vec![0]).unwrap();
    let tr = Simulation::pivp(&p).horizon(5.0).run(&SolverConfig::default()).unwrap();
    let e5 = 5f64.exp();
    let m = tr.last();
    assert!(((m.state[0] - e5) / e5).abs() < 1e-9);
    assert!(((m.length - (e5 - 1.0)) / (e5 - 1.0)).abs() < 1e-8, "length {}", m.length);
    assert!((m.space - e5).abs() / e5 < 1e-9);
}

#[test]
fn riccati_blows_up_before_one() {
    let p = Pivp::with_constant_init(polys(1, &["x1^2"]), 0, &[1.0], vec![0]).unwrap();
    let tr = Simulation::pivp(&p).horizon(2.0).run(&SolverConfig::default()).unwrap();
    match tr.status {
        TraceStatus::Blowup { t } => assert!(t < 1.0 && t > 0.999),
        other => panic!("unexpected status {other:?}"),
    }
}

#[test]
fn sine_length_at_quarter_period() {
    let tr = Simulation::pivp(&sine()).horizon(3.0).run(&SolverConfig::default()).unwrap();
    let m = trace_metrics(&tr, std::f64::consts::FRAC_PI_2);
    assert!((m.length - 2f64.sqrt()).abs() < 1e-6, "length {}", m.length);
    let start = trace_metrics(&tr, 0.0);
    assert_eq!(start.length, 0.0);
    assert_eq!(start.budget, 0.0);
}

#[test]
fn taylor_convergence_order() {
    // fixed steps: halving h divides the global error by about 2^order
    let order = 4;
    let err = |h: f64| {
        let mut cfg = SolverConfig::taylor(order, 1e-12).with_max_step(h);
        cfg.fixed_step = true;
        let tr = Simulation::pivp(&sine()).horizon(4.0).run(&cfg).unwrap();
        let y = tr.last().state.clone();
        (y[0] - 4f64.sin()).abs().max((y[1] - 4f64.cos()).abs())
    };
    let (e1, e2) = (err(0.2), err(0.1));
    assert!(e1 / e2 >= 2f64.powi(order as i32 - 1), "ratio {}", e1 / e2);
}

#[test]
fn embedded_pairs_agree_with_taylor() {
    for order in [3, 5] {
        let mut cfg = SolverConfig::embedded(1e-10);
        cfg.method = odeprog::sim::Method::EmbeddedPair { order };
        let tol = if order == 3 { 1e-6 } else { 1e-8 };
        let tr = Simulation::pivp(&sine()).horizon(10.0).run(&cfg).unwrap();
        let y = tr.last().state.clone();
        assert!((y[0] - 10f64.sin()).abs() < tol, "order {order}: {}", y[0]);
    }
}

#[test]
fn expression_system_with_inputs() {
    // y' = -y + u, u = 1: y = 1 - e^{-t}
    let sys = ExprSystem::with_constant_init(vec![Expr::int(-1) * Expr::var(0) + Expr::var(1)], 1, &[0.0], vec![0]).unwrap();
    let tr = integrate(SystemRef::Expr(&sys), vec![InputSignal::constant(1.0)], vec![], vec![], 3.0, &SolverConfig::embedded(1e-11)).unwrap();
    assert!((tr.last().state[0] - (1.0 - (-3f64).exp())).abs() < 1e-8);
}

#[test]
fn breakpoints_are_respected() {
    // y' = u with a step from 0 to 1 at t = 1.5
    let p = Pivp::with_constant_init(polys(2, &["x2"]), 1, &[0.0], vec![0]).unwrap();
    let u = InputSignal::steps(&[(0.0, 0.0), (1.5, 1.0)]);
    let tr = Simulation::pivp(&p).inputs(vec![u]).horizon(3.0).run(&SolverConfig::default()).unwrap();
    assert!((tr.state_at(1.5)[0]).abs() < 1e-14);
    assert!((tr.last().state[0] - 1.5).abs() < 1e-12);
}

#[test]
fn perturbation_budget_accumulates() {
    let p = Pivp::with_constant_init(polys(1, &["0"]), 0, &[0.0], vec![0]).unwrap();
    let tr = Simulation::pivp(&p)
        .perturbation(vec![InputSignal::constant(0.25)])
        .initial_error(vec![0.5])
        .horizon(2.0)
        .run(&SolverConfig::default())
        .unwrap();
    let m = tr.last();
    assert!((m.budget - 1.0).abs() < 1e-12);
    assert!((m.state[0] - 1.0).abs() < 1e-12);
}

#[test]
fn zero_perturbation_keeps_budget_at_initial_error() {
    let tr = Simulation::pivp(&sine())
        .perturbation(vec![InputSignal::constant(0.0), InputSignal::constant(0.0)])
        .initial_error(vec![1e-3, 0.0])
        .horizon(5.0)
        .run(&SolverConfig::default())
        .unwrap();
    assert!(tr.samples.iter().all(|s| s.budget == 1e-3));
}

#[test]
fn meters_are_monotone_and_consistent() {
    let tr = Simulation::pivp(&sine()).horizon(10.0).run(&SolverConfig::default()).unwrap();
    for w in tr.samples.windows(2) {
        assert!(w[1].t > w[0].t);
        assert!(w[1].length >= w[0].length);
        assert!(w[1].space >= w[0].space);
        let vmax = w[0].speed.max(w[1].speed).max(1.0);
        assert!(w[1].length - w[0].length <= (w[1].t - w[0].t) * vmax + 1e-12);
    }
}

#[test]
fn held_noise_runs_are_bit_identical() {
    let p = Pivp::with_constant_init(polys(2, &["-x1 + x2"]), 1, &[0.0], vec![0]).unwrap();
    let run = || {
        let tr = Simulation::pivp(&p)
            .inputs(vec![InputSignal::held_noise(42, 1.0, 0.3)])
            .horizon(5.0)
            .run(&SolverConfig::default())
            .unwrap();
        tr.to_csv(&tr.samples)
    };
    assert_eq!(run(), run());
}

#[test]
fn arity_mismatch_is_reported() {
    let p = Pivp::with_constant_init(polys(2, &["x2"]), 1, &[0.0], vec![0]).unwrap();
    assert!(Simulation::pivp(&p).horizon(1.0).run(&SolverConfig::default()).is_err());
}
