use num_traits::Signed;
use odeprog::poly::{rational_from_f64, ratio, MultiPoly, PrecisionReal};
use proptest::prelude::*;

fn arb_poly(arity: usize) -> impl Strategy<Value = MultiPoly> {
    let term = (prop::collection::vec(0u32..4, arity), -9i64..10, 1i64..5);
    prop::collection::vec(term, 0..6).prop_map(move |ts| {
        MultiPoly::from_terms(arity, ts.into_iter().map(|(e, n, d)| (e, ratio(n, d)))).unwrap()
    })
}

proptest! {
    #[test]
    fn ring_axioms(a in arb_poly(3), b in arb_poly(3), c in arb_poly(3)) {
        prop_assert_eq!(&a + &b, &b + &a);
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert!((&a - &a).is_zero());
        prop_assert_eq!(&a * &MultiPoly::one(3), a.clone());
    }

    #[test]
    fn degree_of_product(a in arb_poly(2), b in arb_poly(2)) {
        let ab = &a * &b;
        if !a.is_zero() && !b.is_zero() {
            prop_assert_eq!(ab.degree(), a.degree() + b.degree());
        } else {
            prop_assert!(ab.is_zero());
        }
    }

    #[test]
    fn text_round_trip(a in arb_poly(3)) {
        let s = a.to_string();
        let back = MultiPoly::parse_with_arity(&s, 3).unwrap();
        prop_assert_eq!(back, a);
    }

    #[test]
    fn json_round_trip(a in arb_poly(2)) {
        let s = serde_json::to_string(&a).unwrap();
        let back: MultiPoly = serde_json::from_str(&s).unwrap();
        prop_assert_eq!(back, a);
    }

    #[test]
    fn higher_precision_stays_within_lower_rounding(a in arb_poly(2), x in -3.0f64..3.0, y in -3.0f64..3.0) {
        let lo = a.eval(&[x, y], 53).unwrap();
        let hi = a.eval(&[x, y], 256).unwrap();
        let exact = a.eval_exact(&[rational_from_f64(x).unwrap(), rational_from_f64(y).unwrap()]).unwrap();
        let gap = (lo.to_rational() - hi.to_rational()).abs();
        prop_assert!(gap <= lo.half_ulp() + hi.half_ulp());
        prop_assert!((hi.to_rational() - &exact).abs() <= hi.half_ulp());
        prop_assert_eq!(PrecisionReal::round(&exact, 53), lo);
    }

    #[test]
    fn compose_matches_pointwise(a in arb_poly(2), s in arb_poly(1), t in arb_poly(1), x in -2i64..3) {
        let c = a.compose(&[s.clone(), t.clone()]).unwrap();
        let xr = ratio(x, 1);
        let sv = s.eval_exact(std::slice::from_ref(&xr)).unwrap();
        let tv = t.eval_exact(std::slice::from_ref(&xr)).unwrap();
        prop_assert_eq!(c.eval_exact(&[xr]).unwrap(), a.eval_exact(&[sv, tv]).unwrap());
    }

    #[test]
    fn compiled_matches_exact(a in arb_poly(2), x in -2.0f64..2.0, y in -2.0f64..2.0) {
        let f = a.eval_f64(&[x, y]).unwrap();
        let e = a.eval(&[x, y], 256).unwrap().to_f64();
        prop_assert!((f - e).abs() <= 1e-12 * (1.0 + e.abs()));
    }
}
