use odeprog::bounds::{
    continuity_bound, validate_modulus, verify_batch, verify_bound, verify_dependency, BoundError, ContinuityWitness,
    DependencyScenario, PlilScenario, ReachForm, ReachScenario, SampleScenario, Scenario, SlowStopScenario, StateEnvelope,
    TanhScenario,
};
use odeprog::circuit::Pivp;
use odeprog::gadgets::{Interval, SlowStop};
use odeprog::par::Exec;
use odeprog::poly::{MultiPoly, PolyVector};
use odeprog::sim::{InputSignal, SolverConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

fn polys(arity: usize, srcs: &[&str]) -> PolyVector {
    PolyVector::new(arity, srcs.iter().map(|s| MultiPoly::parse_with_arity(s, arity).unwrap()).collect()).unwrap()
}

fn sine() -> Pivp {
    Pivp::with_constant_init(polys(2, &["x2", "-x1"]), 0, &[0.0, 1.0], vec![0]).unwrap()
}

#[test]
fn linear_case_reproduces_exponential_growth() {
    let p = Pivp::with_constant_init(polys(1, &["x1"]), 0, &[1.0], vec![0]).unwrap();
    let mut s = DependencyScenario::new(p, 5.0);
    let d0 = 1e-3;
    s.z0_dev = vec![d0];
    s.eps = 10.0;
    let (curve, report) = verify_dependency(&s).unwrap();
    assert_eq!((curve.k, curve.sigma), (1, 1.0));
    for (smp, &(t, mu)) in report.samples.iter().zip(&curve.samples) {
        let exact = d0 * t.exp();
        assert!((mu - exact).abs() <= 1e-9 * exact, "mu({t}) = {mu}");
        assert!((smp.deviation - exact).abs() <= 1e-9 * exact, "deviation at {t}");
    }
    assert!(report.applicable);
}

#[test]
fn unperturbed_runs_have_zero_bound() {
    let s = DependencyScenario::new(sine(), 6.0);
    let (curve, report) = verify_dependency(&s).unwrap();
    assert!(curve.samples.iter().all(|&(_, mu)| mu == 0.0));
    assert!(report.pass && report.min_margin == 0.0);
}

#[test]
fn sine_with_constant_perturbation_stays_within_mu() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..50 {
        let mut s = DependencyScenario::new(sine(), 4.0);
        s.e = vec![InputSignal::constant(rng.gen_range(-1e-3..1e-3)), InputSignal::constant(rng.gen_range(-1e-3..1e-3))];
        s.z0_dev = vec![rng.gen_range(-1e-3..1e-3), rng.gen_range(-1e-3..1e-3)];
        s.points = 81;
        let (_, r) = verify_dependency(&s).unwrap();
        assert!(r.pass, "margin {}", r.min_margin);
    }
}

#[test]
fn randomized_quadratic_systems() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for _ in 0..10 {
        let d = rng.gen_range(1..=3);
        let mut comps = Vec::new();
        for _ in 0..d {
            let mut terms = Vec::new();
            for i in 0..d {
                terms.push(format!("{}/10*x{}", rng.gen_range(-10..=10), i + 1));
                terms.push(format!("{}/10*x{}^2", rng.gen_range(-3..=3), i + 1));
            }
            comps.push(terms.join(" + "));
        }
        let refs: Vec<&str> = comps.iter().map(String::as_str).collect();
        let y0: Vec<f64> = (0..d).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let p = Pivp::with_constant_init(polys(d, &refs), 0, &y0, vec![0]).unwrap();
        let mut s = DependencyScenario::new(p, 2.0);
        s.e = (0..d).map(|i| InputSignal::held_noise(100 + i as u64, 1e-4, 0.25)).collect();
        s.z0_dev = vec![1e-4; d];
        s.points = 61;
        let (_, r) = verify_dependency(&s).unwrap();
        assert!(r.samples.iter().all(|x| !x.applicable || x.margin() >= 0.0));
    }
}

#[test]
fn input_perturbation_enters_through_the_shifted_inputs() {
    let p = Pivp::with_constant_init(polys(2, &["-x1 + x2"]), 1, &[0.0], vec![0]).unwrap();
    let mut s = DependencyScenario::new(p, 3.0);
    s.x = vec![InputSignal::sine(1.0, 2.0, 0.0)];
    s.delta = vec![InputSignal::constant(1e-3)];
    let (curve, r) = verify_dependency(&s).unwrap();
    assert!(r.pass);
    // z - y = 1e-3 (1 - e^-t), never zero after the start
    let last = r.samples.last().unwrap();
    assert!((last.deviation - 1e-3 * (1.0 - (-3f64).exp())).abs() < 1e-10);
    assert_eq!(curve.k, 1);
}

#[test]
fn mu_is_monotone_in_each_perturbation() {
    let base = |dev: f64, e: f64, delta: f64| {
        let p = Pivp::with_constant_init(polys(2, &["x1*x2"]), 1, &[0.5], vec![0]).unwrap();
        let mut s = DependencyScenario::new(p, 1.0);
        s.x = vec![InputSignal::constant(-0.3)];
        s.delta = vec![InputSignal::constant(delta)];
        s.e = vec![InputSignal::constant(e)];
        s.z0_dev = vec![dev];
        s.points = 11;
        verify_dependency(&s).unwrap().0.samples.last().unwrap().1
    };
    let m = base(1e-3, 1e-3, 1e-3);
    assert!(base(2e-3, 1e-3, 1e-3) > m);
    assert!(base(1e-3, 2e-3, 1e-3) > m);
    assert!(base(1e-3, 1e-3, 2e-3) > m);
}

#[test]
fn quadrature_refinement_is_stable() {
    let mut s = DependencyScenario::new(sine(), 5.0);
    s.e = vec![InputSignal::sine(1e-3, 3.0, 0.0), InputSignal::constant(1e-4)];
    s.z0_dev = vec![1e-4, 0.0];
    s.quad_tol = 1e-6;
    let coarse = verify_dependency(&s).unwrap().0;
    s.quad_tol = 1e-12;
    let fine = verify_dependency(&s).unwrap().0;
    for (a, b) in coarse.samples.iter().zip(&fine.samples) {
        assert!((a.1 - b.1).abs() <= 0.01 * b.1.max(1e-300));
    }
}

#[test]
fn space_bound_envelope_is_more_conservative() {
    let p = Pivp::with_constant_init(polys(1, &["x1^2"]), 0, &[0.5], vec![0]).unwrap();
    let mut s = DependencyScenario::new(p, 1.0);
    s.z0_dev = vec![1e-4];
    s.points = 21;
    let trace = verify_dependency(&s).unwrap().0;
    // y = 1 / (2 - t) <= 1 on [0, 1]
    s.envelope = StateEnvelope::Bound(Arc::new(|_| 1.0));
    let upsilon = verify_dependency(&s).unwrap().0;
    for (a, b) in trace.samples.iter().zip(&upsilon.samples) {
        assert!(b.1 >= a.1);
    }
}

#[test]
fn continuity_moduli() {
    let tanh = ContinuityWitness::tanh();
    assert_eq!(continuity_bound(&tanh, &[0.7, -1.0], &[0.7, -1.0]).unwrap(), 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let pairs: Vec<(Vec<f64>, Vec<f64>)> =
        (0..500).map(|_| (vec![rng.gen_range(-10.0..10.0)], vec![rng.gen_range(-10.0..10.0)])).collect();
    assert!(validate_modulus(&tanh, &pairs).unwrap().pass);
    assert!(validate_modulus(&ContinuityWitness::sin(), &pairs).unwrap().pass);
    let bare = ContinuityWitness::new("cube", |x| x.iter().map(|v| v * v * v).collect(), None);
    assert!(matches!(continuity_bound(&bare, &[1.0], &[2.0]), Err(BoundError::Unsupported(_))));
    // a wrong modulus is caught empirically
    let cube = ContinuityWitness::new("cube", |x| x.iter().map(|v| v * v * v).collect(), Some(MultiPoly::one(1)));
    assert!(!validate_modulus(&cube, &pairs).unwrap().pass);
}

#[test]
fn tanh_grid_check() {
    let r = verify_bound(&Scenario::Tanh(TanhScenario::default())).unwrap();
    assert!(r.pass && r.min_margin >= 0.0);
    assert!(r.samples.iter().any(|s| s.t == 0.0));
    assert!(r.is_consistent());
}

#[test]
fn reach_without_rate_is_inapplicable() {
    let s = ReachScenario::new(0.1, 2.0, 0.0, InputSignal::constant(0.0), InputSignal::constant(0.0), InputSignal::constant(0.0), 5.0)
        .forms(&[ReachForm::Integral]);
    let r = verify_bound(&Scenario::Reach(s)).unwrap();
    assert!(!r.applicable && !r.pass);
    assert!(r.reason.is_some());
}

#[test]
fn reach_rejects_target_outside_eta() {
    let s = ReachScenario::new(0.1, 0.0, 0.0, InputSignal::constant(0.5), InputSignal::constant(1.0), InputSignal::constant(0.0), 2.0);
    let r = verify_bound(&Scenario::Reach(s)).unwrap();
    assert!(!r.applicable);
}

#[test]
fn reach_bounds_hold_on_random_scenarios() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    for _ in 0..10 {
        let eta = rng.gen_range(0.01..0.3);
        let g_inf = rng.gen_range(-2.0..2.0);
        let g = InputSignal::sine(eta, rng.gen_range(0.5..3.0), 0.0).shifted(g_inf);
        let phi = InputSignal::steps(&[(0.0, rng.gen_range(0.0..2.0)), (1.0, rng.gen_range(0.5..3.0))]);
        let e = InputSignal::held_noise(rng.gen(), 0.05, 0.3);
        let s = ReachScenario::new(eta, rng.gen_range(-3.0..3.0), g_inf, g, phi, e, 4.0);
        let r = verify_bound(&Scenario::Reach(s)).unwrap();
        assert!(r.pass, "{:?}", r.worst_by_check());
    }
}

#[test]
fn reach_worst_error_bound() {
    let s = ReachScenario::new(0.05, 3.0, 1.0, InputSignal::constant(1.04), InputSignal::constant(0.8), InputSignal::constant(0.02), 6.0)
        .forms(&[ReachForm::WorstError]);
    let r = verify_bound(&Scenario::Reach(s)).unwrap();
    assert!(r.pass, "{}", r.min_margin);
}

#[test]
fn plil_profile_checks() {
    let s = PlilScenario {
        interval: Interval::new(1.0, 2.5).unwrap(),
        tau: 4.0,
        mu: InputSignal::polynomial(vec![0.5, 0.3]),
        x: InputSignal::sine(3.0, 1.3, 0.2),
        span: 16.0,
        points: 2001,
        periodicity_tol: 1e-9,
    };
    let r = verify_bound(&Scenario::Plil(s)).unwrap();
    assert!(r.pass, "{:?}", r.worst_by_check());
    assert_eq!(r.samples.iter().filter(|s| s.check == "window_integral_low").count(), 4);
}

#[test]
fn sample_and_hold_constant_target() {
    let s = SampleScenario {
        interval: Interval::new(1.0, 2.0).unwrap(),
        tau: 4.0,
        mu0: 1.0,
        mu_rate: 0.5,
        x: InputSignal::constant(0.7),
        e: InputSignal::held_noise(3, 1e-3, 0.5),
        y0: -0.4,
        horizon: 16.0,
        points: 801,
        cfg: SolverConfig::embedded(1e-10),
    };
    let r = verify_bound(&Scenario::Sample(s)).unwrap();
    assert!(r.pass, "{:?}", r.worst_by_check());
}

#[test]
fn slowstop_checks_restrict_a_to_its_valid_range() {
    let p = polys(1, &["1"]);
    let s = SlowStopScenario::new(SlowStop::new(2.0, 1.0).unwrap(), p, vec![0.0], 5);
    let r = verify_bound(&Scenario::SlowStop(s)).unwrap();
    assert!(r.pass, "{:?}", r.worst_by_check());
    // beyond 2T + 4 the |A| claim is false and flagged inapplicable
    assert!(r.samples.iter().any(|x| x.check == "a_abs" && !x.applicable && x.margin() < 0.0));
}

#[test]
fn batches_agree_across_executors() {
    let scenarios: Vec<Scenario> = (0..6)
        .map(|i| {
            let phi = InputSignal::constant(0.5 + i as f64 * 0.25);
            Scenario::Reach(ReachScenario::new(0.1, 1.0, 0.0, InputSignal::constant(0.05), phi, InputSignal::constant(0.0), 3.0))
        })
        .collect();
    let a = verify_batch(Exec::Sequential, &scenarios);
    let b = verify_batch(Exec::Parallel { jobs: 3 }, &scenarios);
    assert_eq!(a, b);
    assert!(a.iter().all(|r| r.as_ref().unwrap().pass));
}
