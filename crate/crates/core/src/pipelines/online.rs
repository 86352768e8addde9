use super::robust::ln2_upper;
use super::{BoundName, ClassTag, ComputabilityWitness, PipelineError, StateGroup};
use crate::circuit::{lower_system, Expr, ExprSystem, LowerOptions};
use crate::gadgets::{reach_expr, Interval, SampleSpec};
use crate::poly::{rat, rational_to_f64, MultiPoly};
use std::collections::BTreeMap;

/// Online wrapper around a core that reads `(x, mu)` as inputs and settles in
/// a constant time `omega`.
///
/// With `tau = omega + 2` and `mu(t) = t / tau` the states are
/// `x*' = reach(phi, x*, x)`, `y' = g(y, x*, mu(t))` and
/// `z' = sample_{[omega+1, omega+2], tau}(t, mu(t), z, y_out)`, all from 0,
/// where `phi = ln 2 + mu(t) + Lambda(2 + |x|^2, mu(t)) + ln 2`.
pub fn build_online_pipeline(core: &ComputabilityWitness) -> Result<ComputabilityWitness, PipelineError> {
    core.expect_class(ClassTag::Axp)?;
    core.validate()?;
    let omega_poly = core.bound(BoundName::Omega)?;
    let omega = omega_poly
        .constant_value()
        .ok_or_else(|| PipelineError::Precondition("core settling time must be a constant polynomial".into()))?;
    let lambda = core.bound(BoundName::Lambda)?;
    let ups = core.bound(BoundName::Upsilon).map_err(|_| PipelineError::MissingBound(BoundName::Upsilon))?;
    if ups.arity() != 3 {
        return Err(PipelineError::BoundArity { name: BoundName::Upsilon, expected: 3, found: ups.arity() });
    }
    let p = &core.pivp;
    let n = core.arg_count();
    let d = p.dim;
    let m = p.outputs.len();
    let w = rational_to_f64(&omega);
    let tau_r = &omega + rat(2);
    let tau = rational_to_f64(&tau_r);
    let delta_p = tau + 1.0;

    // states: x* (n), y (d), z (m); inputs x at n + d + m
    let dim = n + d + m;
    let xs = |i: usize| Expr::var(i);
    let ys = |j: usize| Expr::var(n + j);
    let zs = |k: usize| Expr::var(n + d + k);
    let xin = |i: usize| Expr::var(dim + i);
    let mu_t = Expr::Const(rat(1) / tau_r.clone()) * Expr::Time;
    let ln2 = Expr::Const(ln2_upper());
    let sq = (0..n).fold(Expr::int(2), |acc, i| acc + xin(i).pow(2));
    let lam = Expr::poly(lambda.clone(), vec![sq, mu_t.clone()])?;
    let phi = ln2.clone() + mu_t.clone() + lam + ln2;

    let mut rhs = Vec::with_capacity(dim);
    for i in 0..n {
        rhs.push(reach_expr(phi.clone(), xs(i), xin(i)));
    }
    let mut core_args: Vec<Expr> = (0..d).map(ys).collect();
    core_args.extend((0..n).map(xs));
    core_args.push(mu_t.clone());
    for c in &p.rhs.components {
        rhs.push(Expr::poly(c.clone(), core_args.clone())?);
    }
    let spec = SampleSpec::new(Interval::new(w + 1.0, w + 2.0).map_err(|e| PipelineError::Precondition(e.to_string()))?, tau)
        .map_err(|e| PipelineError::Precondition(e.to_string()))?;
    for (k, &o) in p.outputs.iter().enumerate() {
        rhs.push(spec.expr(&Expr::Time, &mu_t, &zs(k), &ys(o)));
    }
    let init = vec![Expr::int(0); dim];
    let outputs: Vec<usize> = (n + d..dim).collect();
    let sys = ExprSystem::new(rhs, n, 0, init, outputs)?;
    let (pivp, cert) = lower_system(&sys, &LowerOptions::default())?;
    if pivp.input_arity != n {
        return Err(PipelineError::Malformed("external inputs must enter polynomially".into()));
    }
    let clock = cert.clock.ok_or_else(|| PipelineError::Malformed("lowered pipeline lacks a clock".into()))?;

    // settling (2 + mu + ln 2) tau + 1 after the input locks
    let (a2, m2) = (MultiPoly::var(2, 0), MultiPoly::var(2, 1));
    let omega_aop = (&m2 + &MultiPoly::constant(2, rat(2) + ln2_upper())).scale(&tau_r) + MultiPoly::one(2);
    let lambda_aop = lambda.compose(&[a2.clone(), &m2 + &MultiPoly::constant(2, ln2_upper())])? + MultiPoly::constant(2, ln2_upper());
    let a1 = &a2 + &MultiPoly::one(2);
    let ups_core = ups.compose(&[a1.clone(), m2.scale(&(rat(1) / tau_r.clone())), MultiPoly::zero(2)])?;
    let upsilon_aop = ups_core + MultiPoly::constant(2, rat(2)) + a1 + m2;

    let mut bounds = BTreeMap::new();
    bounds.insert(BoundName::Omega, omega_aop);
    bounds.insert(BoundName::Lambda, lambda_aop);
    bounds.insert(BoundName::Upsilon, upsilon_aop);
    let mut constants = core.constants.clone();
    constants.insert("omega".into(), w);
    constants.insert("tau".into(), tau);
    constants.insert("delta_prime".into(), delta_p);
    let mut groups = vec![
        StateGroup { name: "x_star".into(), range: 0..n },
        StateGroup { name: "y".into(), range: n..n + d },
        StateGroup { name: "z".into(), range: n + d..dim },
        StateGroup { name: "clock".into(), range: clock..clock + 1 },
    ];
    for (k, &o) in p.outputs.iter().enumerate() {
        groups.push(StateGroup { name: format!("y_out/{k}"), range: n + o..n + o + 1 });
    }
    let mut space: Vec<usize> = (0..dim).collect();
    space.push(clock);
    Ok(ComputabilityWitness {
        name: format!("{}-aop", core.name),
        class: ClassTag::Aop,
        pivp,
        bounds,
        reference: core.reference.clone(),
        domain: core.domain.clone(),
        groups,
        space_states: Some(space),
        constants,
        notes: vec![format!("online wrapper of {}; {} auxiliary states", core.name, cert.aux_state_count())],
    })
}
