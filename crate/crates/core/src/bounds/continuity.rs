use super::{BoundError, BoundKind, BoundReport, BoundSample};
use crate::poly::MultiPoly;
use std::sync::Arc;

type VecFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A function together with a user-supplied modulus polynomial `q`.
#[derive(Clone)]
pub struct ContinuityWitness {
    pub name: String,
    pub f: VecFn,
    /// Univariate polynomial evaluated at `max(||x1||, ||x2||)`.
    pub q: Option<MultiPoly>,
}

impl std::fmt::Debug for ContinuityWitness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ContinuityWitness").field("name", &self.name).field("q", &self.q).finish()
    }
}

impl ContinuityWitness {
    pub fn new(name: &str, f: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static, q: Option<MultiPoly>) -> Self {
        ContinuityWitness { name: name.into(), f: Arc::new(f), q }
    }

    pub fn tanh() -> Self {
        Self::new("tanh", |x| x.iter().map(|v| v.tanh()).collect(), Some(MultiPoly::one(1)))
    }

    pub fn sin() -> Self {
        Self::new("sin", |x| x.iter().map(|v| v.sin()).collect(), Some(MultiPoly::one(1)))
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// `||x1 - x2|| q(max(||x1||, ||x2||))`.
pub fn continuity_bound(w: &ContinuityWitness, x1: &[f64], x2: &[f64]) -> Result<f64, BoundError> {
    let q = w.q.as_ref().ok_or_else(|| BoundError::Unsupported(format!("{} carries no modulus polynomial", w.name)))?;
    if x1.len() != x2.len() {
        return Err(BoundError::Scenario(format!("points of length {} and {}", x1.len(), x2.len())));
    }
    let d: Vec<f64> = x1.iter().zip(x2).map(|(a, b)| a - b).collect();
    let r = inf_norm(x1).max(inf_norm(x2));
    let qv = q.eval_f64(&[r]).map_err(|e| BoundError::Scenario(e.to_string()))?;
    Ok(inf_norm(&d) * qv)
}

/// Empirical check of the modulus on the given pairs.
pub fn validate_modulus(w: &ContinuityWitness, pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<BoundReport, BoundError> {
    let mut samples = Vec::with_capacity(pairs.len());
    for (i, (x1, x2)) in pairs.iter().enumerate() {
        let bound = continuity_bound(w, x1, x2)?;
        let (f1, f2) = ((w.f)(x1), (w.f)(x2));
        let dev = f1.iter().zip(&f2).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        samples.push(BoundSample::new("modulus", i as f64, bound, dev, true));
    }
    let mut r = BoundReport::from_samples(BoundKind::Continuity, samples);
    r.notes.push(format!("witness {}", w.name));
    Ok(r)
}
