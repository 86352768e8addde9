use super::{BoundKind, BoundReport, BoundSample};
use crate::poly::{rational_to_f64, PolyVector};
use crate::sim::{next_breakpoint, norm_at, quad, InputSignal, Trace};
use std::sync::Arc;

/// Source of `||y(t)||` inside `M(t)`.
#[derive(Clone, Default)]
pub enum StateEnvelope {
    /// Dense output of the clean trajectory.
    #[default]
    Trace,
    /// An a priori bound `t -> Y(t) >= ||y(t)||`, e.g. a space bound polynomial.
    Bound(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for StateEnvelope {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StateEnvelope::Trace => f.write_str("Trace"),
            StateEnvelope::Bound(_) => f.write_str("Bound(..)"),
        }
    }
}

/// Hypotheses of the dependency estimate for `y' = p(y, x)` against
/// `z' = e + p(z, x + delta)`.
#[derive(Debug, Clone)]
pub struct DependencyInputs<'a> {
    /// Right-hand side over the states followed by the inputs.
    pub p: &'a PolyVector,
    pub y: &'a Trace,
    pub x: &'a [InputSignal],
    pub delta: &'a [InputSignal],
    pub e: &'a [InputSignal],
    /// `||z(a) - y(a)||`.
    pub z0_dev: f64,
    pub eps: f64,
}

#[derive(Debug, Clone)]
pub struct DependencyOptions {
    /// Evaluation times; empty means the sample times of `y`.
    pub grid: Vec<f64>,
    pub quad_tol: f64,
    pub envelope: StateEnvelope,
}

impl Default for DependencyOptions {
    fn default() -> Self {
        DependencyOptions { grid: Vec::new(), quad_tol: 1e-13, envelope: StateEnvelope::Trace }
    }
}

/// `mu(t)` on a grid together with the constants it was built from.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MuCurve {
    pub k: u32,
    pub sigma: f64,
    pub samples: Vec<(f64, f64)>,
}

/// Degree and coefficient mass of `p`.
pub fn degree_and_sigma(p: &PolyVector) -> (u32, f64) {
    (p.degree(), rational_to_f64(&p.sigma()))
}

fn breaks_in(y: &Trace, signals: &[&[InputSignal]], a: f64, b: f64) -> Vec<f64> {
    let lo = y.segments.partition_point(|s| s.t0() <= a);
    let mut out: Vec<f64> = y.segments[lo..].iter().map(|s| s.t0()).take_while(|&t| t < b).collect();
    for group in signals {
        let mut t = a;
        while let Some(bp) = next_breakpoint(group, t) {
            if bp >= b {
                break;
            }
            out.push(bp);
            t = bp;
        }
    }
    out
}

pub fn mu_curve(inp: &DependencyInputs<'_>, opts: &DependencyOptions) -> MuCurve {
    let (k, sigma) = degree_and_sigma(inp.p);
    let ks = k as f64 * sigma;
    let grid: Vec<f64> = if opts.grid.is_empty() { inp.y.samples.iter().map(|s| s.t).collect() } else { opts.grid.clone() };
    let y_norm = |t: f64| match &opts.envelope {
        StateEnvelope::Trace => inp.y.state_at(t).iter().fold(0.0f64, |m, v| m.max(v.abs())),
        StateEnvelope::Bound(f) => f(t),
    };
    let m_pow = |t: f64| {
        let m = inp.eps + y_norm(t) + norm_at(inp.x, t) + norm_at(inp.delta, t);
        m.powi(k.saturating_sub(1) as i32)
    };
    let mut samples = Vec::with_capacity(grid.len());
    let (mut forcing, mut growth) = (0.0, 0.0);
    let mut prev = match grid.first() {
        Some(&t) => t,
        None => return MuCurve { k, sigma, samples },
    };
    for &t in &grid {
        if t > prev {
            let br = breaks_in(inp.y, &[inp.x, inp.delta, inp.e], prev, t);
            forcing += quad::integrate_pieces(
                &mut |u| norm_at(inp.e, u) + ks * m_pow(u) * norm_at(inp.delta, u),
                prev,
                t,
                &br,
                opts.quad_tol,
            );
            if ks > 0.0 {
                growth += quad::integrate_pieces(&mut |u| m_pow(u), prev, t, &br, opts.quad_tol);
            }
            prev = t;
        }
        samples.push((t, (inp.z0_dev + forcing) * (ks * growth).exp()));
    }
    MuCurve { k, sigma, samples }
}

/// Evaluates `mu` and, when a perturbed trajectory is given, the deviation
/// `||z - y||` on the same grid. Samples with `mu >= eps` are inapplicable.
pub fn dependency_bound(inp: &DependencyInputs<'_>, z: Option<&Trace>, opts: &DependencyOptions) -> (MuCurve, BoundReport) {
    let curve = mu_curve(inp, opts);
    let mut samples = Vec::with_capacity(curve.samples.len());
    for &(t, mu) in &curve.samples {
        let deviation = match z {
            Some(z) => {
                let (a, b) = (inp.y.state_at(t), z.state_at(t));
                a.iter().zip(&b).fold(0.0f64, |m, (u, v)| m.max((u - v).abs()))
            }
            None => f64::NAN,
        };
        samples.push(BoundSample::new("dependency", t, mu, deviation, mu < inp.eps && z.is_some()));
    }
    let mut report = BoundReport::from_samples(BoundKind::Dependency, samples);
    report.notes.push(format!("k = {}, sigma = {}, eps = {}", curve.k, curve.sigma, inp.eps));
    if z.is_none() {
        report.reason = Some("no perturbed trajectory supplied".into());
    }
    (curve, report)
}
