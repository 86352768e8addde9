use super::GadgetError;
use crate::circuit::Expr;
use crate::poly::{rat, Rational};
use crate::sim::{quad, InputSignal};

/// `2 phi X3(g - y)` with `X3(u) = u + u^3`.
pub fn reach(phi: f64, y: f64, g: f64) -> f64 {
    let u = g - y;
    2.0 * phi * (u + u * u * u)
}

pub fn reach_rational(phi: &Rational, y: &Rational, g: &Rational) -> Rational {
    let u = g - y;
    rat(2) * phi * (&u + &u * &u * &u)
}

pub fn reach_expr(phi: Expr, y: Expr, g: Expr) -> Expr {
    let u = g - y;
    Expr::int(2) * phi * (u.clone() + u.pow(3))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReachBoundKind {
    /// `eta + int |E| + exp(-int phi)`, needs `int phi >= 1`.
    Integral,
    /// `eta + E_max / phi_min + 1 / sqrt(exp(2 int phi) - 1)`, needs `phi >= phi_min > 0`.
    WorstError,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ReachBound {
    pub value: f64,
    pub kind: ReachBoundKind,
    pub phi_integral: f64,
}

fn breaks(signals: &[&InputSignal], a: f64, b: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for s in signals {
        let mut t = a;
        while let Some(bp) = s.next_breakpoint(t) {
            if bp >= b {
                break;
            }
            out.push(bp);
            t = bp;
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

fn inf_on(s: &InputSignal, a: f64, b: f64) -> f64 {
    let n = 1024;
    let mut best = f64::INFINITY;
    for i in 0..=n {
        best = best.min(s.value(a + (b - a) * i as f64 / n as f64));
    }
    for bp in breaks(&[s], a, b) {
        best = best.min(s.value(bp));
    }
    best
}

/// Tightest applicable bound on `|y(t) - g_inf|` for `y' = reach(phi, y, g) + E`
/// with `|g - g_inf| <= eta` on `[0, t]`.
pub fn reach_bound(eta: f64, e: &InputSignal, phi: &InputSignal, t: f64) -> Result<ReachBound, GadgetError> {
    if t <= 0.0 {
        return Err(GadgetError::Inapplicable("empty time interval".into()));
    }
    let bp = breaks(&[e, phi], 0.0, t);
    let phi_int = quad::integrate_pieces(&mut |s| phi.value(s), 0.0, t, &bp, 1e-13);
    let e_int = quad::integrate_pieces(&mut |s| e.value(s).abs(), 0.0, t, &bp, 1e-13);
    let mut best: Option<ReachBound> = None;
    if phi_int >= 1.0 {
        best = Some(ReachBound { value: eta + e_int + (-phi_int).exp(), kind: ReachBoundKind::Integral, phi_integral: phi_int });
    }
    let phi_min = inf_on(phi, 0.0, t);
    if phi_min > 0.0 {
        let e_max = e.sup_abs(0.0, t);
        let v = eta + e_max / phi_min + 1.0 / (2.0 * phi_int).exp_m1().sqrt();
        if best.is_none_or(|b| v < b.value) {
            best = Some(ReachBound { value: v, kind: ReachBoundKind::WorstError, phi_integral: phi_int });
        }
    }
    best.ok_or_else(|| GadgetError::Inapplicable(format!("integral of phi is {phi_int} and phi vanishes")))
}
