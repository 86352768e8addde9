use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Method {
    /// Taylor series of the given order, polynomial right-hand sides only.
    Taylor { order: usize },
    /// Embedded Runge-Kutta pair: order 5 is Dormand-Prince, order 3 is Bogacki-Shampine.
    EmbeddedPair { order: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub method: Method,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_step: f64,
    pub min_step: f64,
    /// Mantissa bits of the arithmetic; the integrators run in doubles.
    pub precision: u32,
    pub blowup: f64,
    /// Use `max_step` as a fixed step instead of adapting.
    pub fixed_step: bool,
    pub max_steps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            method: Method::Taylor { order: 20 },
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_step: 1.0,
            min_step: 1e-13,
            precision: 53,
            blowup: 1e12,
            fixed_step: false,
            max_steps: 5_000_000,
        }
    }
}

impl SolverConfig {
    pub fn taylor(order: usize, tol: f64) -> Self {
        SolverConfig { method: Method::Taylor { order }, abs_tol: tol, rel_tol: tol, ..Default::default() }
    }

    pub fn embedded(tol: f64) -> Self {
        SolverConfig {
            method: Method::EmbeddedPair { order: 5 },
            abs_tol: tol,
            rel_tol: tol,
            max_step: 0.5,
            ..Default::default()
        }
    }

    pub fn with_max_step(mut self, h: f64) -> Self {
        self.max_step = h;
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        match self.method {
            Method::Taylor { order } if order < 2 => return Err(format!("Taylor order must be at least 2, got {order}")),
            Method::EmbeddedPair { order } if order != 3 && order != 5 => {
                return Err(format!("embedded pairs of order 3 and 5 are available, got {order}"))
            }
            _ => {}
        }
        if !(self.abs_tol > 0.0 && self.rel_tol >= 0.0) {
            return Err("tolerances must be positive".into());
        }
        if !(self.min_step > 0.0 && self.min_step < self.max_step) {
            return Err(format!("need 0 < min_step < max_step, got {} and {}", self.min_step, self.max_step));
        }
        if self.precision < 53 {
            return Err(format!("precision must be at least 53 bits, got {}", self.precision));
        }
        if self.precision != 53 {
            return Err(format!(
                "the integrators use 53-bit arithmetic; {} bits is only available for polynomial evaluation",
                self.precision
            ));
        }
        if !(self.blowup > 0.0) {
            return Err("blowup threshold must be positive".into());
        }
        Ok(())
    }
}
