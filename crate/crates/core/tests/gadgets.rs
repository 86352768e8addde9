use odeprog::circuit::{lower_system, smooth, Expr, ExprSystem, LowerOptions};
use odeprog::gadgets::{
    build_slowstop, reach, reach_bound, reach_expr, reach_rational, GadgetError, Interval, PlilSpec, ReachBoundKind, SampleSpec,
    SlowStop,
};
use odeprog::poly::{ratio, MultiPoly, PolyVector};
use odeprog::sim::{quad, FnField, InputSignal, Simulation, SolverConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn plil(a: f64, b: f64, tau: f64) -> PlilSpec {
    PlilSpec::new(Interval::new(a, b).unwrap(), tau).unwrap()
}

#[test]
fn reach_values() {
    assert_eq!(reach(1.0, 3.0, 3.0), 0.0);
    assert_eq!(reach(1.0, 0.0, 1.0), 4.0);
}

proptest! {
    #[test]
    fn reach_scaling_is_exact(p in -50i64..50, q in 1i64..20, s in -50i64..50, y in -9i64..9, g in -9i64..9) {
        let phi = ratio(p, q);
        let psi = ratio(s, q);
        let (y, g) = (ratio(y, 3), ratio(g, 2));
        prop_assert_eq!(&phi * reach_rational(&psi, &y, &g), reach_rational(&(&phi * &psi), &y, &g));
    }

    #[test]
    fn plil_is_periodic(t in -20.0f64..20.0, mu in 0.0f64..6.0, x in -3.0f64..3.0) {
        let s = plil(2.0, 3.0, 4.0);
        let v = s.eval(t, mu, x).value;
        let w = s.eval(t + 4.0, mu, x).value;
        prop_assert!((v - w).abs() <= 1e-12);
    }

    #[test]
    fn lxh_and_hxl_properties(a in -3.0f64..3.0, w in 0.1f64..4.0, t in -10.0f64..10.0, mu in 0.0f64..8.0, x in -20.0f64..20.0) {
        let b = a + w;
        let l = smooth::lxh(a, b, t, mu, x);
        let h = smooth::hxl(a, b, t, mu, x);
        let eps = (-mu).exp();
        prop_assert!(l.abs() <= x.abs() && h.abs() <= x.abs());
        if t <= a {
            prop_assert!(l.abs() <= eps && (x - h).abs() <= eps);
        }
        if t >= b {
            prop_assert!((x - l).abs() <= eps && h.abs() <= eps);
        }
    }

    #[test]
    fn norm_and_mx_inequalities(xs in proptest::collection::vec(-30.0f64..30.0, 1..7), delta in 0.05f64..1.0) {
        let inf = xs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let n = smooth::norm(&xs, delta);
        prop_assert!(inf <= n + 1e-12 && n <= inf + delta + 1e-12);
        let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let m = smooth::mx(&xs, delta);
        prop_assert!(max <= m + 1e-12 && m <= max + delta + 1e-12);
    }
}

#[test]
fn plil_constants() {
    let s = plil(2.0, 3.0, 4.0);
    assert_eq!(s.k(), 2.25);
    let (ja, jb) = s.j();
    assert!(ja < jb);
}

#[test]
fn plil_rejects_bad_windows() {
    assert!(matches!(PlilSpec::new(Interval::new(3.0, 5.0).unwrap(), 4.0), Err(GadgetError::Spec(_))));
    assert!(matches!(PlilSpec::new(Interval::new(0.0, 4.0).unwrap(), 4.0), Err(GadgetError::Spec(_))));
    assert!(Interval::new(1.0, 1.0).is_err());
}

#[test]
fn plil_is_small_off_window() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let tau: f64 = rng.gen_range(1.0..8.0);
        let a = rng.gen_range(0.0..tau * 0.8);
        let b = rng.gen_range(a + 0.05 * tau..tau.min(a + 0.95 * tau));
        let s = plil(a, b, tau);
        let mu = rng.gen_range(0.0..10.0);
        let x = rng.gen_range(-50.0..50.0);
        for i in 0..1000 {
            let t = -tau + 3.0 * tau * i as f64 / 1000.0;
            if s.interval.contains_mod(t, tau) {
                continue;
            }
            let v = s.eval(t, mu, x).value;
            assert!(v.abs() < (-mu).exp(), "t={t} v={v}");
        }
    }
}

#[test]
fn plil_window_integral_is_bounded() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..20 {
        let tau: f64 = rng.gen_range(1.0..8.0);
        let a = rng.gen_range(0.0..tau * 0.8);
        let b = rng.gen_range(a + 0.05 * tau..tau.min(a + 0.95 * tau));
        let s = plil(a, b, tau);
        let (p, q, r) = (rng.gen_range(0.0..5.0), rng.gen_range(-3.0..3.0), rng.gen_range(0.5..4.0));
        let alpha = |t: f64| p + (r * t).sin().abs();
        let beta = |t: f64| q * (r * t).cos();
        let int = quad::integrate(&mut |t| s.eval(t, alpha(t), beta(t)).phi, a, b, 1e-12);
        assert!(int >= 1.0 && int <= (b - a) * s.k(), "integral {int}");
    }
}

#[test]
fn sample_scales() {
    let s = SampleSpec::new(Interval::new(1.0, 2.0).unwrap(), 4.0).unwrap();
    assert_eq!(s.mu_check(0.0), 1.0);
    // tau - |I| = 3
    assert!((s.mu_hat(0.0) - 3f64.ln()).abs() < 1e-15);
    // x = g makes the inner reach vanish
    for i in 0..100 {
        assert_eq!(s.eval(i as f64 * 0.04, 1.0, 0.7, 0.7), 0.0);
    }
}

#[test]
fn sample_tracks_constant_target() {
    let s = SampleSpec::new(Interval::new(1.0, 2.0).unwrap(), 4.0).unwrap();
    let mu = 3.0;
    let field = FnField::new(1, 0, move |t, y, _u, out| out[0] = s.eval(t, mu, y[0], 1.0));
    let tr = Simulation::field(&field).initial_state(vec![0.0]).horizon(2.0).run(&SolverConfig::embedded(1e-12)).unwrap();
    let err = (tr.last().state[0] - 1.0).abs();
    assert!(err <= (-mu).exp(), "error {err}");
}

#[test]
fn closed_and_expression_forms_agree() {
    let s = SampleSpec::new(Interval::new(0.5, 1.75).unwrap(), 3.0).unwrap();
    let e = s.expr(&Expr::Time, &Expr::var(0), &Expr::var(1), &Expr::var(2));
    let p = s.plil.expr(&Expr::Time, &Expr::var(0), &Expr::var(1));
    let r = reach_expr(Expr::var(0), Expr::var(1), Expr::var(2));
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..200 {
        let (t, mu, x, g) = (rng.gen_range(-5.0..5.0), rng.gen_range(0.0..5.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let v = [mu, x, g];
        let a = s.eval(t, mu, x, g);
        assert!((e.eval(&v, t).unwrap() - a).abs() <= 1e-9 * (1.0 + a.abs()));
        let b = s.plil.eval(t, mu, x).value;
        assert!((p.eval(&v, t).unwrap() - b).abs() <= 1e-12 * (1.0 + b.abs()));
        assert!((r.eval(&v, t).unwrap() - reach(mu, x, g)).abs() <= 1e-12 * (1.0 + reach(mu, x, g).abs()));
    }
}

#[test]
fn lowered_sample_matches_closed_form_simulation() {
    let s = SampleSpec::new(Interval::new(1.0, 2.0).unwrap(), 4.0).unwrap();
    let rhs = s.expr(&Expr::Time, &Expr::int(2), &Expr::var(0), &Expr::num(0.8));
    let sys = ExprSystem::with_constant_init(vec![rhs], 0, &[0.0], vec![0]).unwrap();
    let (p, _) = lower_system(&sys, &LowerOptions::default()).unwrap();
    let lowered = Simulation::pivp(&p).horizon(6.0).run(&SolverConfig::default()).unwrap();
    assert!(lowered.completed(), "{:?}", lowered.status);
    let field = FnField::new(1, 0, move |t, y, _u, out| out[0] = s.eval(t, 2.0, y[0], 0.8));
    let direct = Simulation::field(&field).initial_state(vec![0.0]).horizon(6.0).run(&SolverConfig::embedded(1e-12)).unwrap();
    for i in 0..=120 {
        let t = 0.05 * i as f64;
        assert!((lowered.state_at(t)[0] - direct.state_at(t)[0]).abs() < 1e-8, "t = {t}");
    }
}

#[test]
fn reach_bound_variants() {
    let b = reach_bound(0.0, &InputSignal::constant(0.0), &InputSignal::constant(1.0), 3.0).unwrap();
    assert_eq!(b.kind, ReachBoundKind::Integral);
    assert!((b.value - (-3f64).exp()).abs() < 1e-12);
    let none = reach_bound(0.0, &InputSignal::constant(0.0), &InputSignal::constant(0.0), 3.0);
    assert!(matches!(none, Err(GadgetError::Inapplicable(_))));
    // small integral but positive rate: only the worst-error form applies
    let w = reach_bound(0.1, &InputSignal::constant(0.01), &InputSignal::constant(0.2), 2.0).unwrap();
    assert_eq!(w.kind, ReachBoundKind::WorstError);
}

#[test]
fn slowstop_without_perturbation_counts_down() {
    let p = PolyVector::new(1, vec![MultiPoly::zero(1)]).unwrap();
    let ss = build_slowstop(SlowStop::new(3.0, 1.0).unwrap(), &p, &[0.5]).unwrap();
    let zero = || InputSignal::constant(0.0);
    let tr = Simulation::pivp(&ss.pivp).inputs(vec![zero(), zero()]).args(vec![0.0, 0.0]).horizon(10.0).run(&SolverConfig::default()).unwrap();
    for s in tr.samples.iter() {
        assert!((s.state[ss.a_index()] - (5.0 - s.t)).abs() < 1e-10);
        assert_eq!(s.state[0], 0.5);
    }
}

#[test]
fn slowstop_rejects_negative_parameters() {
    assert!(SlowStop::new(-1.0, 0.0).is_err());
    assert!(SlowStop::new(1.0, -0.5).is_err());
}

#[test]
fn slowstop_psi_bounds_under_perturbation() {
    let p = PolyVector::new(1, vec![MultiPoly::parse_with_arity("1", 1).unwrap()]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..5 {
        let spec = SlowStop::new(rng.gen_range(0.5..6.0), rng.gen_range(0.0..3.0)).unwrap();
        let ss = build_slowstop(spec, &p, &[0.0]).unwrap();
        let budget = spec.budget();
        let len = 2.0 * spec.t_stop + 10.0;
        let amp = budget / (4.0 * len);
        let e = |seed| InputSignal::held_noise(seed, amp, 0.5).until(len);
        let tr = Simulation::pivp(&ss.pivp)
            .inputs(vec![e(rng.gen()), e(rng.gen())])
            .args(vec![budget / 4.0, -budget / 4.0])
            .horizon(len)
            .run(&SolverConfig::default())
            .unwrap();
        let t = spec.t_stop;
        assert!(tr.state_at(t + 1.0)[ss.psi_index()] >= t);
        for s in &tr.samples {
            assert!(s.state[ss.psi_index()] <= t + 4.0);
            if s.t <= 2.0 * t + 4.0 {
                assert!(s.state[ss.a_index()].abs() <= t + 3.0);
            }
        }
    }
}
