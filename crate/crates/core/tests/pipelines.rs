use odeprog::pipelines::*;
use odeprog::sim::SolverConfig;

fn cfg() -> SolverConfig {
    SolverConfig::taylor(20, 1e-12)
}

#[test]
fn builtins_validate_and_roundtrip_json() {
    for w in [square_atsp(), square_axp()] {
        w.validate().unwrap();
        let back = ComputabilityWitness::from_json(&w.to_json()).unwrap();
        assert_eq!(back, w);
    }
}

#[test]
fn missing_bound_is_rejected() {
    let mut w = square_atsp();
    w.bounds.remove(&BoundName::Upsilon);
    assert!(matches!(w.validate(), Err(PipelineError::MissingBound(BoundName::Upsilon))));
}

#[test]
fn square_atsp_meets_its_time_bound() {
    let w = square_atsp();
    let cases: Vec<TimeCase> = [(0.5, 1.0), (-1.5, 2.0), (2.0, 3.0)]
        .iter()
        .map(|&(x, mu)| TimeCase::clean(vec![x], mu, 12.0))
        .collect();
    let r = check_time_accuracy(&w, &cases, &cfg()).unwrap();
    assert!(r.pass, "{:?}", r.worst_by_check());
}

#[test]
fn clock_augmentation_structure() {
    let w = square_atsp();
    let a = atsp_to_alp(&w).unwrap();
    assert_eq!(a.class, ClassTag::Alp);
    assert_eq!(a.pivp.dim, w.pivp.dim + 1);
    assert_eq!(a.pivp.outputs, w.pivp.outputs);
    let last = a.pivp.rhs.components.last().unwrap();
    assert_eq!(last.constant_value(), Some(odeprog::poly::rat(1)));
    a.validate().unwrap();
}

#[test]
fn clock_augmentation_rejects_non_monotone_bounds() {
    let mut w = square_atsp();
    w.bounds.insert(BoundName::Omega, odeprog::poly::MultiPoly::parse_with_arity("x1 - x2", 2).unwrap());
    assert!(matches!(atsp_to_alp(&w), Err(PipelineError::NotMonotone(BoundName::Omega))));
}

#[test]
fn clock_augmentation_preserves_outputs() {
    let w = square_atsp();
    let a = atsp_to_alp(&w).unwrap();
    for x in [-1.7, 0.3, 1.2] {
        let t1 = odeprog::sim::Simulation::pivp(&w.pivp).args(vec![x]).horizon(8.0).run(&cfg()).unwrap();
        let t2 = odeprog::sim::Simulation::pivp(&a.pivp).args(vec![x]).horizon(8.0).run(&cfg()).unwrap();
        for i in 0..=80 {
            let t = i as f64 * 0.1;
            let (u, v) = (t1.state_at(t), t2.state_at(t));
            for j in 0..w.pivp.dim {
                assert!((u[j] - v[j]).abs() < 1e-11, "t={t} j={j}");
            }
        }
    }
}

#[test]
fn clocked_witness_meets_length_bound() {
    let a = atsp_to_alp(&square_atsp()).unwrap();
    let cases: Vec<(Vec<f64>, f64)> = a.domain.sample(11, 4).into_iter().zip([0.5, 1.0, 0.2, 0.8]).collect();
    let mut worst = 0.0f64;
    for (x, mu) in &cases {
        worst = worst.max(a.eval_bound(BoundName::Omega, &[x[0].abs(), *mu]).unwrap());
    }
    let r = check_length_accuracy(&a, &cases, worst + 1.0, 0.25, &cfg()).unwrap();
    assert!(r.pass, "{:?}", r.worst_by_check());
}

#[test]
fn speed_precondition_fails_without_clock() {
    let mut w = square_atsp();
    w.class = ClassTag::Alp;
    w.bounds.remove(&BoundName::Upsilon);
    w.domain = Domain::cube(1, 0.2, 0.5);
    let chk = SpeedCheck::for_witness(&w);
    assert!(matches!(alp_to_atsp(&w, &chk), Err(PipelineError::Precondition(_))));
}

#[test]
fn length_rescaling_roundtrip() {
    let alp = atsp_to_alp(&square_atsp()).unwrap();
    let atsp = alp_to_atsp(&alp, &SpeedCheck::for_witness(&alp)).unwrap();
    atsp.validate().unwrap();
    assert_eq!(atsp.pivp.outputs, alp.pivp.outputs);
    for x in [0.7, -1.3] {
        let r = check_reparameterization(&alp, &atsp, &[x], 12.0, 0.1, 1e-6, &cfg()).unwrap();
        assert!(r.report.pass, "x={x} {:?}", r.report.worst_by_check());
        assert!(r.min_w > 0.0 && r.max_w <= 1.0);
    }
}

#[test]
fn length_rescaled_witness_meets_space_bound() {
    let alp = atsp_to_alp(&square_atsp()).unwrap();
    let atsp = alp_to_atsp(&alp, &SpeedCheck::for_witness(&alp)).unwrap();
    let cases: Vec<TimeCase> = [(0.4, 0.5), (-1.8, 0.5)].iter().map(|&(x, m)| TimeCase::clean(vec![x], m, 30.0)).collect();
    let r = check_time_accuracy(&atsp, &cases, &cfg()).unwrap();
    let space: Vec<_> = r.worst_by_check();
    assert!(r.pass, "{space:?}");
}

#[test]
fn online_requires_constant_settling_time() {
    let mut w = square_axp();
    w.bounds.insert(BoundName::Omega, odeprog::poly::MultiPoly::parse_with_arity("x2 + 2", 2).unwrap());
    assert!(matches!(build_online_pipeline(&w), Err(PipelineError::Precondition(_))));
}

#[test]
fn online_pipeline_constants() {
    let w = build_online_pipeline(&square_axp()).unwrap();
    w.validate().unwrap();
    assert_eq!(w.constants["tau"], 4.0);
    assert_eq!(w.constants["delta_prime"], 5.0);
    // (2 + 3 + 7/10) * 4 + 1
    assert!((w.eval_bound(BoundName::Omega, &[1.0, 3.0]).unwrap() - 23.8).abs() < 1e-12);
}

#[test]
fn online_pipeline_locks_on_constant_input() {
    let w = build_online_pipeline(&square_axp()).unwrap();
    let run = OnlineRun { steps: vec![(0.0, vec![0.8])], mu_bar: 2.0, horizon: 24.0, dt: 0.05, floor: 1e-10 };
    let out = check_online_relock(&w, &run, &cfg()).unwrap();
    assert!(out.report.pass, "{:?}", out.report.worst_by_check());
}

#[test]
fn slow_stop_composition_settles() {
    let awp = atsp_as_awp(&square_atsp()).unwrap();
    let arp = awp_to_arp(&awp).unwrap();
    arp.validate().unwrap();
    let cases = vec![TimeCase::clean(vec![0.9], 1.0, 0.0)];
    let horizon = arp.eval_bound(BoundName::Omega, &[0.9, 1.0]).unwrap() + 3.0;
    let cases: Vec<TimeCase> = cases.into_iter().map(|c| TimeCase { horizon, dt: horizon / 300.0, ..c }).collect();
    let r = check_time_accuracy(&arp, &cases, &cfg()).unwrap();
    assert!(r.pass, "{:?}", r.worst_by_check());
}

#[test]
fn governor_keeps_outputs() {
    let arp = awp_to_arp(&atsp_as_awp(&square_atsp()).unwrap()).unwrap();
    let asp = arp_to_asp(&arp).unwrap();
    asp.validate().unwrap();
    let horizon = asp.eval_bound(BoundName::Omega, &[0.6, 1.0]).unwrap() + 2.0;
    let c = TimeCase::clean(vec![0.6], 1.0, horizon);
    let r = check_time_accuracy(&asp, &[c], &cfg()).unwrap();
    assert!(r.pass, "{:?}", r.worst_by_check());
}

#[test]
fn online_pipeline_relocks_after_switch() {
    let w = build_online_pipeline(&square_axp()).unwrap();
    let run = OnlineRun { steps: vec![(0.0, vec![0.8]), (30.0, vec![-1.1])], mu_bar: 3.0, horizon: 60.0, dt: 0.05, floor: 1e-10 };
    let out = check_online_relock(&w, &run, &cfg()).unwrap();
    assert_eq!(out.windows.len(), 2);
    assert!(out.windows.iter().all(|(a, b)| a < b));
    assert!(out.report.pass, "{:?}", out.report.worst_by_check());
}
