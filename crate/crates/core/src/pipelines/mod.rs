//! Computability classes over polynomial initial value problems and the
//! transformations between them.
//!
//! A [`ComputabilityWitness`] packages a system with the polynomial bounds
//! its class promises. Transformers consume one witness and produce another
//! with the derived bounds; the `check` functions measure those promises on
//! simulated runs.

pub mod builtin;
mod check;
mod length;
mod online;
mod robust;

pub use builtin::{square_atsp, square_axp};
pub use check::{
    check_length_accuracy, check_online_relock, check_reparameterization, check_speed, check_time_accuracy, OnlineOutcome,
    OnlineRun, ReparamReport, TimeCase,
};
pub use length::{alp_to_atsp, atsp_to_alp, SpeedCheck};
pub use online::build_online_pipeline;
pub use robust::{arp_to_asp, atsp_as_awp, awp_to_arp};

use crate::circuit::{Expr, Pivp, SystemError};
use crate::poly::{MultiPoly, PolyError};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::ops::Range;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error("expected a {expected} witness, got {found}")]
    Class { expected: ClassTag, found: ClassTag },
    #[error("witness lacks bound {0}")]
    MissingBound(BoundName),
    #[error("bound {name} has arity {found}, expected {expected}")]
    BoundArity { name: BoundName, expected: usize, found: usize },
    #[error("bound {0} must have nonnegative coefficients")]
    NotMonotone(BoundName),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("malformed witness: {0}")]
    Malformed(String),
    #[error("simulation failed: {0}")]
    Simulation(String),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Lower(#[from] crate::circuit::LowerError),
    #[error(transparent)]
    Expr(#[from] crate::circuit::ExprError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassTag {
    /// Length-based.
    Alp,
    /// Time and space.
    Atsp,
    /// Weak, precision as an argument.
    Awp,
    /// Robust to perturbations of the dynamics.
    Arp,
    /// Strong: robust and bounded.
    Asp,
    /// Extreme: inputs, precision as an input.
    Axp,
    /// Online: inputs, fixed precision schedule.
    Aop,
}

impl ClassTag {
    pub fn name(&self) -> &'static str {
        match self {
            ClassTag::Alp => "alp",
            ClassTag::Atsp => "atsp",
            ClassTag::Awp => "awp",
            ClassTag::Arp => "arp",
            ClassTag::Asp => "asp",
            ClassTag::Axp => "axp",
            ClassTag::Aop => "aop",
        }
    }

    pub fn parse(s: &str) -> Option<ClassTag> {
        [ClassTag::Alp, ClassTag::Atsp, ClassTag::Awp, ClassTag::Arp, ClassTag::Asp, ClassTag::Axp, ClassTag::Aop]
            .into_iter()
            .find(|c| c.name() == s)
    }

    /// Bounds a witness of this class must carry, with their arities.
    pub fn required_bounds(&self) -> &'static [(BoundName, usize)] {
        use BoundName::*;
        match self {
            ClassTag::Alp => &[(Omega, 2)],
            ClassTag::Atsp => &[(Omega, 2), (Upsilon, 2)],
            ClassTag::Awp => &[(Omega, 2), (Upsilon, 3)],
            ClassTag::Arp => &[(Omega, 2), (Upsilon, 3), (Theta, 2)],
            ClassTag::Asp => &[(Omega, 2), (Theta, 2)],
            ClassTag::Axp => &[(Omega, 2), (Lambda, 2)],
            ClassTag::Aop => &[(Omega, 2), (Upsilon, 2), (Lambda, 2)],
        }
    }

    /// Whether the system reads its argument through inputs instead of the
    /// initial condition.
    pub fn is_online(&self) -> bool {
        matches!(self, ClassTag::Axp | ClassTag::Aop)
    }
}

impl std::fmt::Display for ClassTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundName {
    /// Settling time or length.
    Omega,
    /// Space.
    Upsilon,
    /// Tolerated perturbation exponent.
    Theta,
    /// Input modulus exponent.
    Lambda,
}

impl BoundName {
    pub fn name(&self) -> &'static str {
        match self {
            BoundName::Omega => "omega",
            BoundName::Upsilon => "upsilon",
            BoundName::Theta => "theta",
            BoundName::Lambda => "lambda",
        }
    }
}

impl std::fmt::Display for BoundName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Axis-aligned box of admissible arguments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Domain {
    pub fn cube(n: usize, lo: f64, hi: f64) -> Self {
        Domain { lo: vec![lo; n], hi: vec![hi; n] }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| *a <= *v && *v <= *b)
    }

    /// Corners and the centre, at most `2^n + 1` points.
    pub fn probe_points(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut out = Vec::new();
        if n <= 6 {
            for mask in 0..(1usize << n) {
                out.push((0..n).map(|i| if mask >> i & 1 == 1 { self.hi[i] } else { self.lo[i] }).collect());
            }
        }
        out.push(self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect());
        out
    }

    /// Uniform points, reproducible from `seed`.
    pub fn sample(&self, seed: u64, count: usize) -> Vec<Vec<f64>> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| self.lo.iter().zip(&self.hi).map(|(a, b)| a + (b - a) * rng.gen::<f64>()).collect()).collect()
    }
}

/// Named group of consecutive states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateGroup {
    pub name: String,
    pub range: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComputabilityWitness {
    pub name: String,
    pub class: ClassTag,
    pub pivp: Pivp,
    pub bounds: BTreeMap<BoundName, MultiPoly>,
    /// The computed function as expressions over its `n` arguments.
    pub reference: Vec<Expr>,
    pub domain: Domain,
    #[serde(default)]
    pub groups: Vec<StateGroup>,
    /// States covered by the space bound; all when absent.
    #[serde(default)]
    pub space_states: Option<Vec<usize>>,
    #[serde(default)]
    pub constants: BTreeMap<String, f64>,
    #[serde(default)]
    pub notes: Vec<String>,
}

pub const WITNESS_SCHEMA: u32 = 1;

impl ComputabilityWitness {
    pub fn arg_count(&self) -> usize {
        self.domain.dim()
    }

    pub fn bound(&self, name: BoundName) -> Result<&MultiPoly, PipelineError> {
        self.bounds.get(&name).ok_or(PipelineError::MissingBound(name))
    }

    pub fn eval_bound(&self, name: BoundName, at: &[f64]) -> Result<f64, PipelineError> {
        Ok(self.bound(name)?.eval_f64(at)?)
    }

    pub fn group(&self, name: &str) -> Option<Range<usize>> {
        self.groups.iter().find(|g| g.name == name).map(|g| g.range.clone())
    }

    pub fn expect_class(&self, class: ClassTag) -> Result<(), PipelineError> {
        if self.class != class {
            return Err(PipelineError::Class { expected: class, found: self.class });
        }
        Ok(())
    }

    /// Checks bound presence, arities, monotonicity and the argument layout
    /// the class prescribes.
    pub fn validate(&self) -> Result<(), PipelineError> {
        self.pivp.validate()?;
        for (name, arity) in self.class.required_bounds() {
            let b = self.bound(*name)?;
            if b.arity() != *arity {
                return Err(PipelineError::BoundArity { name: *name, expected: *arity, found: b.arity() });
            }
            if !b.has_nonnegative_coeffs() {
                return Err(PipelineError::NotMonotone(*name));
            }
        }
        let n = self.arg_count();
        if self.domain.hi.len() != n || self.domain.lo.iter().zip(&self.domain.hi).any(|(a, b)| !(a <= b)) {
            return Err(PipelineError::Malformed("domain bounds are inconsistent".into()));
        }
        if self.reference.len() != self.pivp.outputs.len() {
            return Err(PipelineError::Malformed(format!(
                "{} reference components for {} outputs",
                self.reference.len(),
                self.pivp.outputs.len()
            )));
        }
        if self.reference.iter().any(|e| e.uses_time() || e.uses_var_at_least(n)) {
            return Err(PipelineError::Malformed("reference must be a function of the arguments only".into()));
        }
        let (args, inputs) = match self.class {
            ClassTag::Alp | ClassTag::Atsp => (n, 0),
            ClassTag::Awp | ClassTag::Arp | ClassTag::Asp => (n + 1, 0),
            ClassTag::Axp => (0, n + 1),
            ClassTag::Aop => (0, n),
        };
        if self.pivp.n_args != args || self.pivp.input_arity != inputs {
            return Err(PipelineError::Malformed(format!(
                "{} witness needs {} arguments and {} inputs, system has {} and {}",
                self.class, args, inputs, self.pivp.n_args, self.pivp.input_arity
            )));
        }
        if self.space_states.iter().flatten().any(|&i| i >= self.pivp.dim) {
            return Err(PipelineError::Malformed("space states out of range".into()));
        }
        for g in &self.groups {
            if g.range.end > self.pivp.dim {
                return Err(PipelineError::Malformed(format!("state group {} out of range", g.name)));
            }
        }
        Ok(())
    }

    pub fn space_coords(&self) -> Vec<usize> {
        self.space_states.clone().unwrap_or_else(|| (0..self.pivp.dim).collect())
    }

    pub fn reference_at(&self, x: &[f64]) -> Result<Vec<f64>, PipelineError> {
        self.reference.iter().map(|e| e.eval(x, 0.0).map_err(|e| PipelineError::Malformed(e.to_string()))).collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "schema": WITNESS_SCHEMA, "witness": self })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self, PipelineError> {
        let schema = v.get("schema").and_then(|s| s.as_u64()).unwrap_or(0);
        if schema != WITNESS_SCHEMA as u64 {
            return Err(PipelineError::Malformed(format!("unknown witness schema {schema}")));
        }
        let inner = v.get("witness").ok_or_else(|| PipelineError::Malformed("missing witness".into()))?;
        let w: ComputabilityWitness =
            serde_json::from_value(inner.clone()).map_err(|e| PipelineError::Malformed(e.to_string()))?;
        w.validate()?;
        Ok(w)
    }
}

/// Upper bound on `||q(x)||` for `||x|| <= alpha`, as a polynomial in `alpha`.
pub(crate) fn poly_growth(sigma: &crate::poly::Rational, degree: u32) -> MultiPoly {
    let one_plus = MultiPoly::one(1) + MultiPoly::var(1, 0);
    one_plus.pow(degree).scale(sigma)
}
