//! Solutions of autonomous systems used as functions of time.

use super::lower::{lower_to_pivp, LowerError, LowerOptions, LoweringCert};
use super::Expr;
use super::{Pivp, Prim};
use crate::poly::PolyVector;
use crate::sim::{SimError, Simulation, SolverConfig, Trace};
use std::sync::{Arc, Mutex};

/// `w(t)` for `w' = f(w)`, `w(t0) = w0`, evaluated by integration on demand.
#[derive(Debug)]
pub struct OdeClosure {
    forward: Pivp,
    backward: Pivp,
    cert: LoweringCert,
    t0: f64,
    y0: Vec<f64>,
    cfg: SolverConfig,
    cache: Mutex<(Option<Trace>, Option<Trace>)>,
}

impl OdeClosure {
    pub fn new(f: &[Expr], t0: f64, w0: &[f64], cfg: SolverConfig) -> Result<Arc<Self>, LowerError> {
        if f.iter().any(|e| e.uses_time() || e.uses_var_at_least(f.len())) {
            return Err(LowerError::ClosureInputs);
        }
        let opts = LowerOptions { allow_unbounded: true, input_values: None };
        let (forward, cert) = lower_to_pivp(f, w0, 0, &opts)?;
        let y0 = forward.initial_state(&[])?;
        let neg: Vec<_> = forward.rhs.components.iter().map(|p| p.neg()).collect();
        let backward = Pivp::with_constant_init(
            PolyVector::new(forward.rhs.arity, neg).expect("same arity"),
            0,
            &y0,
            forward.outputs.clone(),
        )?;
        Ok(Arc::new(OdeClosure { forward, backward, cert, t0, y0, cfg, cache: Mutex::new((None, None)) }))
    }

    /// The lowered autonomous polynomial system.
    pub fn pivp(&self) -> &Pivp {
        &self.forward
    }

    pub fn cert(&self) -> &LoweringCert {
        &self.cert
    }

    /// Original (pre-lowering) dimension.
    pub fn dim(&self) -> usize {
        self.cert.original_dim
    }

    /// `component(k, arg)` is the expression `w_k(arg)`.
    pub fn component(self: &Arc<Self>, k: usize, arg: Expr) -> Expr {
        Expr::Prim(Prim::Closure(self.clone(), k), vec![arg])
    }

    /// Full lowered state at time `t`.
    pub fn eval(&self, t: f64) -> Result<Vec<f64>, SimError> {
        if !t.is_finite() {
            return Err(SimError::Eval("closure time is not finite".into()));
        }
        if t == self.t0 {
            return Ok(self.y0.clone());
        }
        let backward = t < self.t0;
        let s = (t - self.t0).abs();
        let mut guard = self.cache.lock().expect("closure cache");
        let slot = if backward { &mut guard.1 } else { &mut guard.0 };
        let stale = slot.as_ref().is_none_or(|tr| tr.t_end() < s);
        if stale {
            let reach = slot.as_ref().map_or(1.0, |tr| 2.0 * tr.t_end()).max(s);
            let sys = if backward { &self.backward } else { &self.forward };
            let tr = Simulation::pivp(sys).horizon(reach).run(&self.cfg)?;
            if !tr.completed() {
                return Err(SimError::Eval(format!("closure trajectory stopped: {:?}", tr.status)));
            }
            *slot = Some(tr);
        }
        Ok(slot.as_ref().expect("filled").state_at(s))
    }
}
