//! Smooth absolute value, maximum, norm and the switching functions.
//!
//! Each closed form has a twin that builds the same formula as an
//! expression tree over tanh and ln, which is what lowering consumes.

use super::expr::Expr;
use crate::poly::{rat, Rational};

/// `|u| <= sabs(u) <= |u| + beta/2`.
pub fn sabs(u: f64, beta: f64) -> f64 {
    u * (2.0 * u / beta).tanh() + beta / 2.0
}

/// `max(x, y) <= mx2 <= max(x, y) + beta/4`.
pub fn mx2(x: f64, y: f64, beta: f64) -> f64 {
    (x + y + sabs(x - y, beta)) / 2.0
}

/// Number of folding levels for `n` operands.
pub fn levels(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

fn fold<T: Clone>(xs: &[T], pair: &dyn Fn(&T, &T) -> T) -> T {
    let mut cur: Vec<T> = xs.to_vec();
    while cur.len() > 1 {
        let mut next = Vec::with_capacity(cur.len().div_ceil(2));
        for ch in cur.chunks(2) {
            if ch.len() == 2 {
                next.push(pair(&ch[0], &ch[1]));
            } else {
                next.push(ch[0].clone());
            }
        }
        cur = next;
    }
    cur.into_iter().next().expect("nonempty")
}

pub fn mx(xs: &[f64], delta: f64) -> f64 {
    let l = levels(xs.len()).max(1);
    let beta = delta / l as f64;
    fold(xs, &|a, b| mx2(*a, *b, beta))
}

pub fn norm(xs: &[f64], delta: f64) -> f64 {
    let abs: Vec<f64> = xs.iter().map(|&x| sabs(x, delta / 2.0)).collect();
    mx(&abs, delta / 2.0)
}

fn switch_arg(a: f64, b: f64, t: f64, mu: f64, x: f64) -> f64 {
    (mu + (1.0 + x * x).ln()) * (2.0 * (t - a) / (b - a) - 1.0)
}

pub fn lxh(a: f64, b: f64, t: f64, mu: f64, x: f64) -> f64 {
    x * (1.0 + switch_arg(a, b, t, mu, x).tanh()) / 2.0
}

pub fn hxl(a: f64, b: f64, t: f64, mu: f64, x: f64) -> f64 {
    x * (1.0 - switch_arg(a, b, t, mu, x).tanh()) / 2.0
}

fn half() -> Expr {
    Expr::Const(crate::poly::ratio(1, 2))
}

pub fn sabs_expr(u: &Expr, beta: &Rational) -> Expr {
    let c = Expr::Const(rat(2) / beta);
    u.clone() * (c * u.clone()).tanh() + Expr::Const(beta / rat(2))
}

pub fn mx2_expr(x: &Expr, y: &Expr, beta: &Rational) -> Expr {
    half() * (x.clone() + y.clone() + sabs_expr(&(x.clone() - y.clone()), beta))
}

pub fn mx_expr(xs: &[Expr], delta: &Rational) -> Expr {
    let l = levels(xs.len()).max(1);
    let beta = delta / rat(l as i64);
    fold(xs, &|a, b| mx2_expr(a, b, &beta))
}

pub fn norm_expr(xs: &[Expr], delta: &Rational) -> Expr {
    let beta = delta / rat(2);
    let abs: Vec<Expr> = xs.iter().map(|x| sabs_expr(x, &beta)).collect();
    mx_expr(&abs, &beta)
}

pub fn lxh_expr(a: &Rational, b: &Rational, t: &Expr, mu: &Expr, x: &Expr, rising: bool) -> Expr {
    let width = b - a;
    let scaled = Expr::Const(rat(2) / &width) * (t.clone() - Expr::Const(a.clone())) - Expr::int(1);
    let nu = mu.clone() + (Expr::int(1) + x.clone().pow(2)).ln();
    let th = (nu * scaled).tanh();
    let gate = if rising { Expr::int(1) + th } else { Expr::int(1) - th };
    half() * x.clone() * gate
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::ratio;

    #[test]
    fn level_counts() {
        assert_eq!(levels(1), 0);
        assert_eq!(levels(2), 1);
        assert_eq!(levels(3), 2);
        assert_eq!(levels(4), 2);
        assert_eq!(levels(5), 3);
    }

    #[test]
    fn documented_points() {
        let v = mx(&[2.0, 2.0], 0.5);
        assert!((2.0..=2.5).contains(&v));
        let n = norm(&[0.0, 0.0, 0.0], 1.0);
        assert!((0.0..=1.0).contains(&n));
    }

    #[test]
    fn expansion_matches_closed_form() {
        let xs = [Expr::var(0), Expr::var(1), Expr::var(2)];
        let d = ratio(1, 3);
        let point = [0.3, -1.2, 0.9];
        let e = norm_expr(&xs, &d);
        assert!((e.eval(&point, 0.0).unwrap() - norm(&point, 1.0 / 3.0)).abs() < 1e-14);
        let e = mx_expr(&xs, &d);
        assert!((e.eval(&point, 0.0).unwrap() - mx(&point, 1.0 / 3.0)).abs() < 1e-14);
        let e = lxh_expr(&rat(1), &rat(3), &Expr::Time, &Expr::var(0), &Expr::var(1), true);
        assert!((e.eval(&point, 2.5).unwrap() - lxh(1.0, 3.0, 2.5, 0.3, -1.2)).abs() < 1e-14);
    }
}
