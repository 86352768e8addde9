use super::GadgetError;
use crate::circuit::{lower_system, Expr, ExprSystem, LowerOptions, LoweringCert, Pivp};
use crate::poly::PolyVector;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlowStop {
    /// Time after which the dynamics freeze.
    pub t_stop: f64,
    /// Admissible perturbation budget is `exp(-theta)`.
    pub theta: f64,
}

impl SlowStop {
    pub fn new(t_stop: f64, theta: f64) -> Result<Self, GadgetError> {
        if !(t_stop >= 0.0 && theta >= 0.0 && t_stop.is_finite() && theta.is_finite()) {
            return Err(GadgetError::Spec(format!("slow-stop needs T >= 0 and theta >= 0, got ({t_stop}, {theta})")));
        }
        Ok(SlowStop { t_stop, theta })
    }

    pub fn budget(&self) -> f64 {
        (-self.theta).exp()
    }
}

/// Lowered slow-stop system.
///
/// State layout: `y` (d), `A`, `psi`, then auxiliaries. Inputs are the
/// perturbations `(e_y, e_A)`; arguments are the initial errors
/// `(e0_y, e0_A)`.
#[derive(Debug, Clone)]
pub struct SlowStopSystem {
    pub pivp: Pivp,
    pub cert: LoweringCert,
    pub spec: SlowStop,
    pub dim: usize,
}

impl SlowStopSystem {
    pub fn a_index(&self) -> usize {
        self.dim
    }

    pub fn psi_index(&self) -> usize {
        self.dim + 1
    }
}

pub fn build_slowstop(spec: SlowStop, p: &PolyVector, y0: &[f64]) -> Result<SlowStopSystem, GadgetError> {
    let d = y0.len();
    if p.arity != d || p.len() != d {
        return Err(GadgetError::Spec(format!("field of arity {} and size {} for {} states", p.arity, p.len(), d)));
    }
    let a = Expr::var(d);
    let gate = Expr::num(0.5) * (Expr::int(1) + a.tanh());
    let input = |k: usize| Expr::var(d + 2 + k);
    let mut rhs = Vec::with_capacity(d + 2);
    for (i, comp) in p.components.iter().enumerate() {
        let pi = Expr::poly(comp.clone(), (0..d).map(Expr::var).collect()).map_err(crate::circuit::LowerError::from)?;
        rhs.push(gate.clone() * pi + input(i));
    }
    rhs.push(Expr::int(-1) + input(d));
    rhs.push(gate);
    let mut init: Vec<Expr> = (0..d).map(|i| Expr::num(y0[i]) + Expr::var(i)).collect();
    init.push(Expr::num(spec.t_stop + 2.0) + Expr::var(d));
    init.push(Expr::int(0));
    let sys = ExprSystem::new(rhs, d + 1, d + 1, init, (0..d).collect())?;
    let (pivp, cert) = lower_system(&sys, &LowerOptions::default())?;
    Ok(SlowStopSystem { pivp, cert, spec, dim: d })
}
