use super::{BoundName, ClassTag, ComputabilityWitness, PipelineError, StateGroup};
use crate::circuit::smooth::{mx_expr, norm_expr};
use crate::circuit::{lower_system, Expr, ExprSystem, LowerOptions};
use crate::poly::{rat, ratio, MultiPoly};
use std::collections::BTreeMap;

/// Rational upper bound on `ln 2` used inside monotone bounds.
pub(crate) fn ln2_upper() -> crate::poly::Rational {
    ratio(7, 10)
}

fn half() -> Expr {
    Expr::Const(ratio(1, 2))
}

/// Views a time-space witness as a weak one whose initial condition ignores
/// the precision argument.
pub fn atsp_as_awp(w: &ComputabilityWitness) -> Result<ComputabilityWitness, PipelineError> {
    w.expect_class(ClassTag::Atsp)?;
    w.validate()?;
    let mut pivp = w.pivp.clone();
    pivp.n_args += 1;
    let mut bounds = BTreeMap::new();
    bounds.insert(BoundName::Omega, w.bound(BoundName::Omega)?.clone());
    bounds.insert(BoundName::Upsilon, w.bound(BoundName::Upsilon)?.remap(3, &[0, 2]));
    let out = ComputabilityWitness { name: format!("{}-awp", w.name), class: ClassTag::Awp, pivp, bounds, ..w.clone() };
    out.validate()?;
    Ok(out)
}

/// Slow-stop composition: `y' = (1 + tanh A)/2 p(y)`, `A' = -1`, with
/// `A(0) = T(norm(x), mu) + 2` and `T(alpha, mu) = Omega(alpha, mu + ln 2)`.
pub fn awp_to_arp(w: &ComputabilityWitness) -> Result<ComputabilityWitness, PipelineError> {
    w.expect_class(ClassTag::Awp)?;
    w.validate()?;
    let p = &w.pivp;
    let (d, n) = (p.dim, w.arg_count());
    let omega = w.bound(BoundName::Omega)?;
    let ups = w.bound(BoundName::Upsilon)?;
    let (a2, m2) = (MultiPoly::var(2, 0), MultiPoly::var(2, 1));
    let one = MultiPoly::one(2);
    let t_poly = omega.compose(&[a2.clone(), &m2 + &MultiPoly::constant(2, ln2_upper())])?;
    let t1 = t_poly.compose(&[&a2 + &one, m2.clone()])?;
    let t1_4 = &t1 + &MultiPoly::constant(2, rat(4));
    let ups_at = ups.compose(&[a2.clone(), m2.clone(), t1_4.clone()])?;
    let k = p.degree();
    let sigma = p.rhs.sigma();
    let theta = (&t1_4 * &(&ups_at + &one).pow(k.saturating_sub(1))).scale(&(rat(k as i64) * sigma))
        + m2.clone()
        + MultiPoly::constant(2, ln2_upper());
    let omega_arp = &t1 + &one;
    let upsilon = (&ups_at + &one + t1_4).remap(3, &[0, 1]);

    let gate = half() * (Expr::int(1) + Expr::var(d).tanh());
    let mut rhs: Vec<Expr> = p.rhs.components.iter().map(|c| gate.clone() * Expr::poly_in_vars(c.clone())).collect();
    rhs.push(Expr::int(-1));
    let xs: Vec<Expr> = (0..n).map(Expr::var).collect();
    let mut init = p.init.clone();
    init.push(Expr::poly(t_poly, vec![norm_expr(&xs, &rat(1)), Expr::var(n)])? + Expr::int(2));
    let sys = ExprSystem::new(rhs, 0, n + 1, init, p.outputs.clone())?;
    let (pivp, cert) = lower_system(&sys, &LowerOptions::default())?;

    let mut bounds = BTreeMap::new();
    bounds.insert(BoundName::Omega, omega_arp);
    bounds.insert(BoundName::Upsilon, upsilon);
    bounds.insert(BoundName::Theta, theta);
    let mut notes = w.notes.clone();
    notes.push(format!("slow-stop composition of {}; {} auxiliary states", w.name, cert.aux_state_count()));
    Ok(ComputabilityWitness {
        name: format!("{}-arp", w.name),
        class: ClassTag::Arp,
        pivp,
        bounds,
        reference: w.reference.clone(),
        domain: w.domain.clone(),
        groups: vec![
            StateGroup { name: "y".into(), range: 0..d },
            StateGroup { name: "A".into(), range: d..d + 1 },
            StateGroup { name: "aux".into(), range: d + 1..d + 1 + cert.aux_state_count() },
        ],
        space_states: Some((0..=d).collect()),
        constants: w.constants.clone(),
        notes,
    })
}

/// Governor `y' = psi h(y)`, `l' = 1` with `psi = (1 + tanh D)/2` and
/// `D = Upsilon(l, l, l) + 1 - norm(y)`, so the state cannot outgrow its
/// space bound even off the domain.
pub fn arp_to_asp(w: &ComputabilityWitness) -> Result<ComputabilityWitness, PipelineError> {
    w.expect_class(ClassTag::Arp)?;
    w.validate()?;
    let p = &w.pivp;
    let (d, n) = (p.dim, w.arg_count());
    let ups = w.bound(BoundName::Upsilon)?;
    let ell = MultiPoly::var(d + 1, d);
    let ups_ell = ups.compose(&[ell.clone(), ell.clone(), ell])?;
    let ys: Vec<Expr> = (0..d).map(Expr::var).collect();
    let delta = Expr::poly_in_vars(ups_ell) + Expr::int(1) - norm_expr(&ys, &rat(1));
    let psi = half() * (Expr::int(1) + delta.tanh());
    let mut rhs: Vec<Expr> = p.rhs.components.iter().map(|c| psi.clone() * Expr::poly_in_vars(c.clone())).collect();
    rhs.push(Expr::int(1));
    let xs: Vec<Expr> = (0..n).map(Expr::var).collect();
    let mut init = p.init.clone();
    init.push(mx_expr(&[norm_expr(&xs, &rat(1)), Expr::var(n)], &rat(1)) + Expr::int(1));
    let sys = ExprSystem::new(rhs, 0, n + 1, init, p.outputs.clone())?;
    let (pivp, cert) = lower_system(&sys, &LowerOptions::default())?;

    let mut bounds = BTreeMap::new();
    bounds.insert(BoundName::Omega, w.bound(BoundName::Omega)?.scale(&rat(2)));
    bounds.insert(BoundName::Theta, w.bound(BoundName::Theta)? + &MultiPoly::one(2));
    let mut notes = w.notes.clone();
    notes.push(format!("space governor on {}; {} auxiliary states", w.name, cert.aux_state_count()));
    Ok(ComputabilityWitness {
        name: format!("{}-asp", w.name),
        class: ClassTag::Asp,
        pivp,
        bounds,
        reference: w.reference.clone(),
        domain: w.domain.clone(),
        groups: vec![
            StateGroup { name: "y".into(), range: 0..d },
            StateGroup { name: "l".into(), range: d..d + 1 },
            StateGroup { name: "aux".into(), range: d + 1..d + 1 + cert.aux_state_count() },
        ],
        space_states: Some((0..d).collect()),
        constants: w.constants.clone(),
        notes,
    })
}
