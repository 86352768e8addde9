use super::{BoundName, ClassTag, ComputabilityWitness, Domain, StateGroup};
use crate::circuit::{Expr, Pivp};
use crate::poly::{rat, ratio, MultiPoly, PolyVector};
use std::collections::BTreeMap;

/// `f(x) = x^2` in time-space form: a sine pair of amplitude `x` and a
/// relaxation `y1' = s^2 + c^2 - y1`, hence `y1(t) = x^2 (1 - e^-t)`.
///
/// `Omega = 2 alpha + mu`, `Upsilon = alpha^2 + 1`.
pub fn square_atsp() -> ComputabilityWitness {
    let rhs = PolyVector::new(
        3,
        vec![
            MultiPoly::parse_with_arity("x2^2 + x3^2 - x1", 3).expect("rhs"),
            MultiPoly::var(3, 2),
            -&MultiPoly::var(3, 1),
        ],
    )
    .expect("rhs");
    let q = PolyVector::new(1, vec![MultiPoly::zero(1), MultiPoly::zero(1), MultiPoly::var(1, 0)]).expect("init");
    let pivp = Pivp::with_poly_init(rhs, 0, q, vec![0]).expect("pivp");
    let mut bounds = BTreeMap::new();
    bounds.insert(BoundName::Omega, MultiPoly::parse_with_arity("2*x1 + x2", 2).expect("omega"));
    bounds.insert(BoundName::Upsilon, MultiPoly::parse_with_arity("x1^2 + 1", 2).expect("upsilon"));
    ComputabilityWitness {
        name: "square".into(),
        class: ClassTag::Atsp,
        pivp,
        bounds,
        reference: vec![Expr::var(0).pow(2)],
        domain: Domain::cube(1, -2.0, 2.0),
        groups: vec![StateGroup { name: "y".into(), range: 0..1 }, StateGroup { name: "sine".into(), range: 1..3 }],
        space_states: None,
        constants: BTreeMap::new(),
        notes: vec![],
    }
}

/// `f(x) = x^2` with argument and precision as inputs:
/// `y' = reach(1 + mu, y, x^2)`, settling within the constant time 2.
///
/// `Omega = 2`, `Lambda = mu + 2 alpha + 17/10`, and
/// `Upsilon(alpha, mu, beta) = alpha^2 + beta + 1`.
pub fn square_axp() -> ComputabilityWitness {
    let (y, x, mu) = (MultiPoly::var(3, 0), MultiPoly::var(3, 1), MultiPoly::var(3, 2));
    let u = &x.pow(2) - &y;
    let rate = (MultiPoly::one(3) + mu).scale(&rat(2));
    let rhs = PolyVector::new(3, vec![&rate * &(&u + &u.pow(3))]).expect("rhs");
    let pivp = Pivp::new(rhs, 2, 0, vec![Expr::int(0)], vec![0]).expect("pivp");
    let mut bounds = BTreeMap::new();
    bounds.insert(BoundName::Omega, MultiPoly::constant(2, rat(2)));
    let lambda = MultiPoly::var(2, 1) + MultiPoly::var(2, 0).scale(&rat(2)) + MultiPoly::constant(2, ratio(17, 10));
    bounds.insert(BoundName::Lambda, lambda);
    bounds.insert(BoundName::Upsilon, MultiPoly::parse_with_arity("x1^2 + x3 + 1", 3).expect("upsilon"));
    ComputabilityWitness {
        name: "square-axp".into(),
        class: ClassTag::Axp,
        pivp,
        bounds,
        reference: vec![Expr::var(0).pow(2)],
        domain: Domain::cube(1, -2.0, 2.0),
        groups: vec![StateGroup { name: "y".into(), range: 0..1 }],
        space_states: None,
        constants: BTreeMap::new(),
        notes: vec![],
    }
}
