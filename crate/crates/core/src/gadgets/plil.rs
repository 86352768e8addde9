use super::reach::{reach, reach_expr};
use super::GadgetError;
use crate::circuit::smooth::{lxh, lxh_expr};
use crate::circuit::Expr;
use crate::poly::{rational_from_f64, Rational};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub a: f64,
    pub b: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self, GadgetError> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(GadgetError::Spec(format!("interval [{a}, {b}] is empty or degenerate")));
        }
        Ok(Interval { a, b })
    }

    pub fn len(&self) -> f64 {
        self.b - self.a
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Whether `t` lies in the interval modulo `tau`.
    pub fn contains_mod(&self, t: f64, tau: f64) -> bool {
        let r = t.rem_euclid(tau);
        r >= self.a && r <= self.b
    }
}

fn exact(x: f64) -> Rational {
    rational_from_f64(x).expect("finite parameter")
}

/// Periodic low-integral-low multiplier over window `I` of period `tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlilSpec {
    pub interval: Interval,
    pub tau: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlilValue {
    pub value: f64,
    pub phi: f64,
}

impl PlilSpec {
    pub fn new(interval: Interval, tau: f64) -> Result<Self, GadgetError> {
        let Interval { a, b } = interval;
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(GadgetError::Spec(format!("period {tau} must be positive")));
        }
        if a < 0.0 || b > tau {
            return Err(GadgetError::Spec(format!("window [{a}, {b}] is not inside [0, {tau}]")));
        }
        if b - a >= tau {
            return Err(GadgetError::Spec(format!("window [{a}, {b}] fills the whole period")));
        }
        let s = PlilSpec { interval, tau };
        let (ja, jb) = s.j();
        if ja >= jb {
            return Err(GadgetError::Spec(format!("switch interval [{ja}, {jb}] is inverted")));
        }
        Ok(s)
    }

    pub fn delta(&self) -> f64 {
        self.interval.len()
    }

    pub fn omega(&self) -> f64 {
        2.0 * PI / self.tau
    }

    pub fn k(&self) -> f64 {
        0.25 + 2.0 / self.delta()
    }

    pub fn t1(&self) -> f64 {
        (self.interval.a + self.interval.b) / 2.0 - self.tau / 4.0
    }

    pub fn f(&self, t: f64) -> f64 {
        (self.omega() * (t - self.t1())).sin()
    }

    /// Switch interval `J = [f(a), f(a + delta/4)]`.
    pub fn j(&self) -> (f64, f64) {
        let a = self.interval.a;
        (self.f(a), self.f(a + self.delta() / 4.0))
    }

    pub fn nu(mu: f64, x: f64) -> f64 {
        mu + 2.0 + (1.0 + x * x).ln()
    }

    pub fn eval(&self, t: f64, mu: f64, x: f64) -> PlilValue {
        let (ja, jb) = self.j();
        let phi = lxh(ja, jb, self.f(t), Self::nu(mu, x), self.k());
        PlilValue { value: phi * x, phi }
    }

    /// Multiplier `phi` as an expression.
    pub fn phi_expr(&self, t: &Expr, mu: &Expr, x: &Expr) -> Expr {
        let (ja, jb) = self.j();
        let arg = Expr::num(self.omega()) * (t.clone() - Expr::num(self.t1()));
        let nu = mu.clone() + Expr::int(2) + (Expr::int(1) + x.clone().pow(2)).ln();
        lxh_expr(&exact(ja), &exact(jb), &arg.sin(), &nu, &Expr::num(self.k()), true)
    }

    pub fn expr(&self, t: &Expr, mu: &Expr, x: &Expr) -> Expr {
        self.phi_expr(t, mu, x) * x.clone()
    }
}

/// Sample-and-hold over window `I` of period `tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub plil: PlilSpec,
}

impl SampleSpec {
    pub fn new(interval: Interval, tau: f64) -> Result<Self, GadgetError> {
        Ok(SampleSpec { plil: PlilSpec::new(interval, tau)? })
    }

    pub fn interval(&self) -> Interval {
        self.plil.interval
    }

    pub fn tau(&self) -> f64 {
        self.plil.tau
    }

    pub fn mu_check(&self, mu: f64) -> f64 {
        (mu + 1.0) / self.plil.delta().min(1.0)
    }

    pub fn mu_hat(&self, mu: f64) -> f64 {
        mu + (self.tau() - self.plil.delta()).ln().max(0.0)
    }

    /// Rate for the held value `x` towards the target `g`.
    pub fn eval(&self, t: f64, mu: f64, x: f64, g: f64) -> f64 {
        self.plil.eval(t, self.mu_hat(mu), reach(self.mu_check(mu), x, g)).value
    }

    pub fn expr(&self, t: &Expr, mu: &Expr, x: &Expr, g: &Expr) -> Expr {
        let scale = Expr::num(1.0 / self.plil.delta().min(1.0));
        let check = (mu.clone() + Expr::int(1)) * scale;
        let hat = mu.clone() + Expr::num((self.tau() - self.plil.delta()).ln().max(0.0));
        self.plil.expr(t, &hat, &reach_expr(check, x.clone(), g.clone()))
    }
}
