use super::{poly_growth, BoundName, ClassTag, ComputabilityWitness, PipelineError, StateGroup};
use crate::circuit::{gradient_realization, smooth::norm_expr, Expr, LowerOptions, Pivp};
use crate::poly::{rat, MultiPoly, PolyVector};
use crate::sim::SolverConfig;
use std::collections::BTreeMap;

/// Grid on which the `||y'|| >= 1` condition is sampled.
#[derive(Debug, Clone)]
pub struct SpeedCheck {
    pub args: Vec<Vec<f64>>,
    pub horizon: f64,
    pub dt: f64,
    pub cfg: SolverConfig,
    pub slack: f64,
}

impl SpeedCheck {
    /// Domain corners and centre, horizon 10, spacing 1/40.
    pub fn for_witness(w: &ComputabilityWitness) -> Self {
        SpeedCheck { args: w.domain.probe_points(), horizon: 10.0, dt: 0.025, cfg: SolverConfig::default(), slack: 1e-9 }
    }
}

fn check_monotone(w: &ComputabilityWitness) -> Result<(), PipelineError> {
    for (name, b) in &w.bounds {
        if !b.has_nonnegative_coeffs() {
            return Err(PipelineError::NotMonotone(*name));
        }
    }
    Ok(())
}

/// Appends a clock `z' = 1, z(0) = 0`, turning a time bound into a length bound
/// `Omega* = Omega (1 + sigma (1 + Upsilon(alpha, Omega))^k)`.
pub fn atsp_to_alp(w: &ComputabilityWitness) -> Result<ComputabilityWitness, PipelineError> {
    w.expect_class(ClassTag::Atsp)?;
    check_monotone(w)?;
    w.validate()?;
    let p = &w.pivp;
    let d = p.dim;
    let mut comps: Vec<MultiPoly> = p.rhs.components.iter().map(|c| c.extend_arity(d + 1)).collect();
    comps.push(MultiPoly::one(d + 1));
    let mut init = p.init.clone();
    init.push(Expr::int(0));
    let pivp = Pivp::new(PolyVector::new(d + 1, comps)?, 0, p.n_args, init, p.outputs.clone())?;

    let omega = w.bound(BoundName::Omega)?;
    let upsilon = w.bound(BoundName::Upsilon)?;
    let alpha = MultiPoly::var(2, 0);
    let ups_at = upsilon.compose(&[alpha, omega.clone()])?;
    let sigma = p.rhs.sigma();
    let k = p.degree();
    let omega_star = omega * &(MultiPoly::one(2) + (MultiPoly::one(2) + ups_at).pow(k).scale(&sigma));

    let mut bounds = BTreeMap::new();
    bounds.insert(BoundName::Omega, omega_star);
    let mut notes = w.notes.clone();
    notes.push(format!("clock appended to {}", w.name));
    Ok(ComputabilityWitness {
        name: format!("{}-alp", w.name),
        class: ClassTag::Alp,
        pivp,
        bounds,
        reference: w.reference.clone(),
        domain: w.domain.clone(),
        groups: vec![StateGroup { name: "y".into(), range: 0..d }, StateGroup { name: "clock".into(), range: d..d + 1 }],
        space_states: None,
        constants: w.constants.clone(),
        notes,
    })
}

/// Rescales time by the length of the curve.
///
/// With `g = norm(p)` and its realization `z`, the states are `(y^, z^, w^)`
/// where `w^ = 1 / g(y^)`, so that `y^(u) = y(psi^-1(u))` for
/// `psi(t) = int_0^t g(y)`.
pub fn alp_to_atsp(w: &ComputabilityWitness, check: &SpeedCheck) -> Result<ComputabilityWitness, PipelineError> {
    w.expect_class(ClassTag::Alp)?;
    check_monotone(w)?;
    w.validate()?;
    let min_speed = super::check_speed(w, &check.args, check.horizon, check.dt, &check.cfg)?;
    if min_speed < 1.0 - check.slack {
        return Err(PipelineError::Precondition(format!("sampled speed {min_speed:.6e} falls below 1")));
    }
    let p = &w.pivp;
    let d = p.dim;
    let q = p.init_polys().ok_or_else(|| PipelineError::Malformed("initial condition must be polynomial".into()))?;

    let pe: Vec<Expr> = p.rhs.components.iter().cloned().map(Expr::poly_in_vars).collect();
    let g = norm_expr(&pe, &rat(1));
    let real = gradient_realization(&g, d, &LowerOptions::default())?;
    let zd = real.dim;
    let n = d + zd + 1;
    let wi = d + zd;

    let y_map: Vec<usize> = (0..d).collect();
    let z_map: Vec<usize> = (d..d + zd).collect();
    let ph: Vec<MultiPoly> = p.rhs.components.iter().map(|c| c.remap(n, &y_map)).collect();
    let wv = MultiPoly::var(n, wi);
    let along = |row: &[MultiPoly]| -> MultiPoly {
        row.iter().zip(&ph).fold(MultiPoly::zero(n), |acc, (r, pj)| acc + &r.remap(n, &z_map) * pj)
    };
    let mut comps = Vec::with_capacity(n);
    for pj in &ph {
        comps.push(&wv * pj);
    }
    for row in &real.jacobian {
        comps.push(&wv * &along(row));
    }
    comps.push(-&(wv.pow(3) * along(&real.jacobian[0])));

    let mut init = p.init.clone();
    let z0: Vec<Expr> = real.components.iter().map(|c| c.substitute(&p.init, None)).collect();
    init.extend(z0.iter().cloned());
    init.push(z0[0].clone().recip());
    let pivp = Pivp::new(PolyVector::new(n, comps)?, 0, p.n_args, init, p.outputs.clone())?;

    // ||q(x)|| <= Q(alpha), ||y^(u)|| <= Q + u, g <= sigma (1 + Q + u)^k + 1,
    // realization auxiliaries are tanh and sech2 values, w^ <= 1
    let qa = poly_growth(&q.sigma(), q.degree()).remap(2, &[0]);
    let reach = qa + MultiPoly::var(2, 1);
    let g_bound = (MultiPoly::one(2) + reach.clone()).pow(p.degree()).scale(&p.rhs.sigma()) + MultiPoly::one(2);
    let upsilon = g_bound + reach;
    let omega = w.bound(BoundName::Omega)?.scale(&rat(2));

    let mut bounds = BTreeMap::new();
    bounds.insert(BoundName::Omega, omega);
    bounds.insert(BoundName::Upsilon, upsilon);
    let mut notes = w.notes.clone();
    notes.push(format!("length rescaling of {}; sampled min speed {min_speed:.6}", w.name));
    let mut constants = w.constants.clone();
    constants.insert("min_speed".into(), min_speed);
    Ok(ComputabilityWitness {
        name: format!("{}-atsp", w.name),
        class: ClassTag::Atsp,
        pivp,
        bounds,
        reference: w.reference.clone(),
        domain: w.domain.clone(),
        groups: vec![
            StateGroup { name: "y_hat".into(), range: 0..d },
            StateGroup { name: "z_hat".into(), range: d..wi },
            StateGroup { name: "w_hat".into(), range: wi..n },
        ],
        space_states: None,
        constants,
        notes,
    })
}
