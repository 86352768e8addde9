//! Quantitative bounds of the ODE programming toolkit and their empirical
//! verification against simulated trajectories.
//!
//! Every check produces a [`BoundReport`]: a list of `(t, bound, deviation)`
//! samples, each flagged applicable or not, and the smallest margin
//! `bound - deviation` over the applicable ones.

mod continuity;
mod dependency;
mod scenarios;

pub use continuity::{continuity_bound, validate_modulus, ContinuityWitness};
pub use dependency::{degree_and_sigma, dependency_bound, mu_curve, DependencyInputs, DependencyOptions, MuCurve, StateEnvelope};
pub use scenarios::{
    verify_bound, verify_dependency, DependencyScenario, PlilScenario, ReachForm, ReachScenario, SampleScenario, Scenario,
    SlowStopScenario, TanhScenario,
};

use crate::par::{self, Exec};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundError {
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("malformed scenario: {0}")]
    Scenario(String),
    #[error("simulation failed: {0}")]
    Simulation(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Reach,
    Plil,
    Sample,
    SlowStop,
    Dependency,
    Tanh,
    Continuity,
    Lowering,
    Pipeline,
}

impl BoundKind {
    pub fn name(&self) -> &'static str {
        match self {
            BoundKind::Reach => "reach",
            BoundKind::Plil => "plil",
            BoundKind::Sample => "sample",
            BoundKind::SlowStop => "slowstop",
            BoundKind::Dependency => "dependency",
            BoundKind::Tanh => "tanh",
            BoundKind::Continuity => "continuity",
            BoundKind::Lowering => "lowering",
            BoundKind::Pipeline => "pipeline",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSample {
    /// Which inequality of the scenario this sample belongs to.
    pub check: String,
    pub t: f64,
    pub bound: f64,
    pub deviation: f64,
    pub applicable: bool,
}

impl BoundSample {
    pub fn new(check: &str, t: f64, bound: f64, deviation: f64, applicable: bool) -> Self {
        BoundSample { check: check.into(), t, bound, deviation, applicable }
    }

    pub fn margin(&self) -> f64 {
        self.bound - self.deviation
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub kind: BoundKind,
    pub samples: Vec<BoundSample>,
    /// Smallest `bound - deviation` over applicable samples; `+inf` if none.
    pub min_margin: f64,
    pub applicable: bool,
    pub pass: bool,
    pub reason: Option<String>,
    pub notes: Vec<String>,
}

pub const REPORT_SCHEMA: u32 = 1;

impl BoundReport {
    pub fn from_samples(kind: BoundKind, samples: Vec<BoundSample>) -> Self {
        let mut r = BoundReport {
            kind,
            samples,
            min_margin: f64::INFINITY,
            applicable: false,
            pass: false,
            reason: None,
            notes: Vec::new(),
        };
        r.finish();
        r
    }

    /// Report for a scenario whose hypotheses fail.
    pub fn inapplicable(kind: BoundKind, reason: impl Into<String>) -> Self {
        let mut r = Self::from_samples(kind, Vec::new());
        r.reason = Some(reason.into());
        r
    }

    fn finish(&mut self) {
        let mut m = f64::INFINITY;
        let mut any = false;
        let mut nan = false;
        for s in self.samples.iter().filter(|s| s.applicable) {
            any = true;
            let g = s.margin();
            if g.is_nan() {
                nan = true;
            }
            m = m.min(g);
        }
        self.applicable = any;
        self.min_margin = m;
        self.pass = any && !nan && m >= 0.0;
        if !any && self.reason.is_none() {
            self.reason = Some("no applicable samples".into());
        }
    }

    pub fn bound_samples(&self) -> Vec<(f64, f64)> {
        self.samples.iter().map(|s| (s.t, s.bound)).collect()
    }

    pub fn deviation_samples(&self) -> Vec<(f64, f64)> {
        self.samples.iter().map(|s| (s.t, s.deviation)).collect()
    }

    /// Merges the samples of several checks of one scenario.
    pub fn merge(kind: BoundKind, parts: Vec<BoundReport>) -> Self {
        let mut samples = Vec::new();
        let mut notes = Vec::new();
        for p in parts {
            samples.extend(p.samples);
            notes.extend(p.notes);
        }
        let mut r = Self::from_samples(kind, samples);
        r.notes = notes;
        r
    }

    /// Re-derives `pass` from the stored samples.
    pub fn is_consistent(&self) -> bool {
        let re = Self::from_samples(self.kind, self.samples.clone());
        re.pass == self.pass && (re.min_margin == self.min_margin || (re.min_margin.is_nan() && self.min_margin.is_nan()))
    }

    /// Worst applicable sample per check name.
    pub fn worst_by_check(&self) -> Vec<(String, f64)> {
        let mut out: Vec<(String, f64)> = Vec::new();
        for s in self.samples.iter().filter(|s| s.applicable) {
            match out.iter_mut().find(|(c, _)| *c == s.check) {
                Some(e) => e.1 = e.1.min(s.margin()),
                None => out.push((s.check.clone(), s.margin())),
            }
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "schema": REPORT_SCHEMA, "report": self })
    }
}

/// Runs independent scenarios, in parallel when `exec` asks for it.
pub fn verify_batch(exec: Exec, scenarios: &[Scenario]) -> Vec<Result<BoundReport, BoundError>> {
    par::map(exec, scenarios, verify_bound)
}
