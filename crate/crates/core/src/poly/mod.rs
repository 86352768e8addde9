//! Sparse multivariate polynomials with exact rational coefficients.
//!
//! Terms are kept in descending graded-lexicographic order with no zero
//! coefficients, so structural equality is polynomial equality.

mod compiled;
mod json;
mod parse;
mod precision;

pub use compiled::CompiledPoly;
pub use precision::PrecisionReal;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolyError {
    #[error("arity mismatch: expected {expected}, found {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("precision must be at least 53 bits, got {0}")]
    PrecisionTooLow(u32),
    #[error("non-finite evaluation point")]
    NonFinite,
}

/// Exponent vector ordered by total degree, then lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Exponents(pub Vec<u32>);

impl Exponents {
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }
}

impl Ord for Exponents {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Exponents {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial {
    pub exponents: Vec<u32>,
    pub coeff: Rational,
}

impl Monomial {
    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiPoly {
    arity: usize,
    terms: Vec<Monomial>,
}

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Exact rational value of a finite double.
pub fn rational_from_f64(x: f64) -> Option<Rational> {
    Rational::from_float(x)
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    if let Some(v) = r.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    // fall back for huge numerators and denominators
    let n = r.numer().to_f64().unwrap_or(f64::NAN);
    let d = r.denom().to_f64().unwrap_or(f64::NAN);
    n / d
}

impl MultiPoly {
    pub fn zero(arity: usize) -> Self {
        MultiPoly { arity, terms: Vec::new() }
    }

    pub fn constant(arity: usize, c: Rational) -> Self {
        Self::from_map(arity, std::iter::once((Exponents(vec![0; arity]), c)).collect())
    }

    pub fn one(arity: usize) -> Self {
        Self::constant(arity, Rational::one())
    }

    pub fn var(arity: usize, i: usize) -> Self {
        assert!(i < arity, "variable index {i} out of range for arity {arity}");
        let mut e = vec![0; arity];
        e[i] = 1;
        Self::monomial(e, Rational::one())
    }

    pub fn monomial(exponents: Vec<u32>, coeff: Rational) -> Self {
        let arity = exponents.len();
        Self::from_map(arity, std::iter::once((Exponents(exponents), coeff)).collect())
    }

    /// Builds a polynomial from possibly repeated terms.
    pub fn from_terms<I>(arity: usize, terms: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (Vec<u32>, Rational)>,
    {
        let mut map: BTreeMap<Exponents, Rational> = BTreeMap::new();
        for (e, c) in terms {
            if e.len() != arity {
                return Err(PolyError::ArityMismatch { expected: arity, found: e.len() });
            }
            *map.entry(Exponents(e)).or_insert_with(Rational::zero) += c;
        }
        Ok(Self::from_map(arity, map))
    }

    fn from_map(arity: usize, map: BTreeMap<Exponents, Rational>) -> Self {
        let terms = map
            .into_iter()
            .rev()
            .filter(|(_, c)| !c.is_zero())
            .map(|(e, c)| Monomial { exponents: e.0, coeff: c })
            .collect();
        MultiPoly { arity, terms }
    }

    fn to_map(&self) -> BTreeMap<Exponents, Rational> {
        self.terms
            .iter()
            .map(|t| (Exponents(t.exponents.clone()), t.coeff.clone()))
            .collect()
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; the zero polynomial has degree 0.
    pub fn degree(&self) -> u32 {
        self.terms.iter().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn degree_in(&self, var: usize) -> u32 {
        self.terms.iter().map(|t| t.exponents[var]).max().unwrap_or(0)
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|t| t.degree() == 0)
    }

    pub fn constant_value(&self) -> Option<Rational> {
        if self.is_constant() {
            Some(self.terms.first().map(|t| t.coeff.clone()).unwrap_or_else(Rational::zero))
        } else {
            None
        }
    }

    /// Sum of absolute values of the coefficients.
    pub fn sigma(&self) -> Rational {
        self.terms.iter().fold(Rational::zero(), |acc, t| acc + t.coeff.abs())
    }

    pub fn has_nonnegative_coeffs(&self) -> bool {
        self.terms.iter().all(|t| !t.coeff.is_negative())
    }

    pub fn uses_var(&self, var: usize) -> bool {
        self.terms.iter().any(|t| t.exponents[var] > 0)
    }

    fn check_arity(&self, other: &MultiPoly) -> Result<(), PolyError> {
        if self.arity != other.arity {
            Err(PolyError::ArityMismatch { expected: self.arity, found: other.arity })
        } else {
            Ok(())
        }
    }

    pub fn try_add(&self, other: &MultiPoly) -> Result<MultiPoly, PolyError> {
        self.check_arity(other)?;
        let mut map = self.to_map();
        for t in &other.terms {
            *map.entry(Exponents(t.exponents.clone())).or_insert_with(Rational::zero) += &t.coeff;
        }
        Ok(Self::from_map(self.arity, map))
    }

    pub fn try_sub(&self, other: &MultiPoly) -> Result<MultiPoly, PolyError> {
        self.try_add(&other.neg())
    }

    pub fn try_mul(&self, other: &MultiPoly) -> Result<MultiPoly, PolyError> {
        self.check_arity(other)?;
        let mut map: BTreeMap<Exponents, Rational> = BTreeMap::new();
        for a in &self.terms {
            for b in &other.terms {
                let e: Vec<u32> = a.exponents.iter().zip(&b.exponents).map(|(x, y)| x + y).collect();
                *map.entry(Exponents(e)).or_insert_with(Rational::zero) += &a.coeff * &b.coeff;
            }
        }
        Ok(Self::from_map(self.arity, map))
    }

    pub fn neg(&self) -> MultiPoly {
        MultiPoly {
            arity: self.arity,
            terms: self
                .terms
                .iter()
                .map(|t| Monomial { exponents: t.exponents.clone(), coeff: -&t.coeff })
                .collect(),
        }
    }

    pub fn scale(&self, c: &Rational) -> MultiPoly {
        if c.is_zero() {
            return MultiPoly::zero(self.arity);
        }
        MultiPoly {
            arity: self.arity,
            terms: self
                .terms
                .iter()
                .map(|t| Monomial { exponents: t.exponents.clone(), coeff: &t.coeff * c })
                .collect(),
        }
    }

    pub fn pow(&self, k: u32) -> MultiPoly {
        let mut acc = MultiPoly::one(self.arity);
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Partial derivative with respect to variable `var`.
    pub fn partial(&self, var: usize) -> MultiPoly {
        assert!(var < self.arity);
        let terms = self.terms.iter().filter(|t| t.exponents[var] > 0).map(|t| {
            let mut e = t.exponents.clone();
            let k = e[var];
            e[var] -= 1;
            (e, &t.coeff * rat(k as i64))
        });
        Self::from_terms(self.arity, terms).expect("arity preserved")
    }

    /// Substitutes `subs[i]` for variable `i`; all substitutes share one arity.
    pub fn compose(&self, subs: &[MultiPoly]) -> Result<MultiPoly, PolyError> {
        if subs.len() != self.arity {
            return Err(PolyError::ArityMismatch { expected: self.arity, found: subs.len() });
        }
        let target = match subs.first() {
            Some(s) => s.arity,
            None => return Ok(self.clone()),
        };
        for s in subs {
            if s.arity != target {
                return Err(PolyError::ArityMismatch { expected: target, found: s.arity });
            }
        }
        // cache powers per variable
        let mut powers: Vec<Vec<MultiPoly>> = subs.iter().map(|s| vec![MultiPoly::one(target), s.clone()]).collect();
        let mut acc = MultiPoly::zero(target);
        for t in &self.terms {
            let mut m = MultiPoly::constant(target, t.coeff.clone());
            for (i, &k) in t.exponents.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                while powers[i].len() <= k as usize {
                    let next = &powers[i][powers[i].len() - 1] * &subs[i];
                    powers[i].push(next);
                }
                m = &m * &powers[i][k as usize];
            }
            acc = &acc + &m;
        }
        Ok(acc)
    }

    /// Moves variable `i` to `map[i]` in a polynomial of arity `new_arity`.
    pub fn remap(&self, new_arity: usize, map: &[usize]) -> MultiPoly {
        assert_eq!(map.len(), self.arity);
        let terms = self.terms.iter().map(|t| {
            let mut e = vec![0u32; new_arity];
            for (i, &k) in t.exponents.iter().enumerate() {
                e[map[i]] += k;
            }
            (e, t.coeff.clone())
        });
        Self::from_terms(new_arity, terms).expect("remap arity")
    }

    /// Widens the arity, keeping variables in place.
    pub fn extend_arity(&self, new_arity: usize) -> MultiPoly {
        assert!(new_arity >= self.arity);
        let map: Vec<usize> = (0..self.arity).collect();
        self.remap(new_arity, &map)
    }

    pub fn eval_exact(&self, point: &[Rational]) -> Result<Rational, PolyError> {
        if point.len() != self.arity {
            return Err(PolyError::ArityMismatch { expected: self.arity, found: point.len() });
        }
        let mut acc = Rational::zero();
        for t in &self.terms {
            let mut m = t.coeff.clone();
            for (x, &k) in point.iter().zip(&t.exponents) {
                if k > 0 {
                    m *= num_traits::pow::pow(x.clone(), k as usize);
                }
            }
            acc += m;
        }
        Ok(acc)
    }

    /// Double precision evaluation.
    pub fn eval_f64(&self, point: &[f64]) -> Result<f64, PolyError> {
        if point.len() != self.arity {
            return Err(PolyError::ArityMismatch { expected: self.arity, found: point.len() });
        }
        Ok(self.compile().eval(point))
    }

    /// Correctly rounded evaluation at a double-precision point with `bits` of mantissa.
    pub fn eval(&self, point: &[f64], bits: u32) -> Result<PrecisionReal, PolyError> {
        if bits < 53 {
            return Err(PolyError::PrecisionTooLow(bits));
        }
        let exact: Option<Vec<Rational>> = point.iter().map(|&x| rational_from_f64(x)).collect();
        let exact = exact.ok_or(PolyError::NonFinite)?;
        let value = self.eval_exact(&exact)?;
        Ok(PrecisionReal::round(&value, bits))
    }

    pub fn compile(&self) -> CompiledPoly {
        CompiledPoly::new(self)
    }

    pub fn parse_with_arity(s: &str, arity: usize) -> Result<MultiPoly, PolyError> {
        parse::parse(s, Some(arity))
    }
}

impl std::str::FromStr for MultiPoly {
    type Err = PolyError;
    /// Arity is inferred from the highest variable index.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse::parse(s, None)
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $f:ident) => {
        impl std::ops::$tr<&MultiPoly> for &MultiPoly {
            type Output = MultiPoly;
            fn $m(self, rhs: &MultiPoly) -> MultiPoly {
                self.$f(rhs).expect("polynomial arity mismatch")
            }
        }
        impl std::ops::$tr<MultiPoly> for MultiPoly {
            type Output = MultiPoly;
            fn $m(self, rhs: MultiPoly) -> MultiPoly {
                (&self).$f(&rhs).expect("polynomial arity mismatch")
            }
        }
    };
}
binop!(Add, add, try_add);
binop!(Sub, sub, try_sub);
binop!(Mul, mul, try_mul);

impl std::ops::Neg for &MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        MultiPoly::neg(self)
    }
}

fn fmt_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            let neg = t.coeff.is_negative();
            match (i, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let mag = t.coeff.abs();
            let vars: Vec<String> = t
                .exponents
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(v, &k)| if k == 1 { format!("x{}", v + 1) } else { format!("x{}^{}", v + 1, k) })
                .collect();
            if vars.is_empty() {
                write!(f, "{}", fmt_rational(&mag))?;
            } else if mag.is_one() {
                write!(f, "{}", vars.join("*"))?;
            } else {
                write!(f, "{}*{}", fmt_rational(&mag), vars.join("*"))?;
            }
        }
        Ok(())
    }
}

/// A vector of polynomials over a shared arity.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PolyVector {
    pub arity: usize,
    pub components: Vec<MultiPoly>,
}

impl PolyVector {
    pub fn new(arity: usize, components: Vec<MultiPoly>) -> Result<Self, PolyError> {
        for c in &components {
            if c.arity() != arity {
                return Err(PolyError::ArityMismatch { expected: arity, found: c.arity() });
            }
        }
        Ok(PolyVector { arity, components })
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.components.iter().map(MultiPoly::degree).max().unwrap_or(0)
    }

    /// Largest coefficient sum over the components.
    pub fn sigma(&self) -> Rational {
        self.components
            .iter()
            .map(MultiPoly::sigma)
            .max()
            .unwrap_or_else(Rational::zero)
    }

    pub fn eval_f64(&self, point: &[f64]) -> Result<Vec<f64>, PolyError> {
        self.components.iter().map(|p| p.eval_f64(point)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> MultiPoly {
        s.parse().unwrap()
    }

    #[test]
    fn parse_print_canonical() {
        let q = p("3*x1^2*x2 - 1/2*x2");
        assert_eq!(q.to_string(), "3*x1^2*x2 - 1/2*x2");
        assert_eq!(q.degree(), 3);
        assert_eq!(q.arity(), 2);
        assert_eq!(p("x2 + x1").to_string(), "x1 + x2");
        assert_eq!(p("1 + x1^2 - x1*x2 + x2^2").to_string(), "x1^2 - x1*x2 + x2^2 + 1");
    }

    #[test]
    fn square_of_binomial() {
        let s = p("x1 + x2");
        assert_eq!((&s * &s).to_string(), "x1^2 + 2*x1*x2 + x2^2");
    }

    #[test]
    fn cancellation_gives_empty_term_set() {
        let a = p("x1 - x2");
        let z = &a - &a;
        assert!(z.is_zero());
        assert_eq!(z.degree(), 0);
        assert_eq!(z.to_string(), "0");
    }

    #[test]
    fn exact_and_rounded_eval() {
        let q = p("3*x1^2*x2 - 1/2*x2");
        assert_eq!(q.eval_exact(&[rat(2), rat(1)]).unwrap(), ratio(23, 2));
        let v = q.eval(&[2.0, 1.0], 256).unwrap();
        assert_eq!(v.to_f64(), 11.5);
        assert!(matches!(q.eval(&[1.0, 1.0], 24), Err(PolyError::PrecisionTooLow(24))));
        assert!(matches!(q.eval_f64(&[1.0]), Err(PolyError::ArityMismatch { .. })));
    }

    #[test]
    fn compose_and_partial() {
        let q = p("x1^2 + x2");
        let subs = vec![p("x1 + 1"), p("2*x1")];
        assert_eq!(q.compose(&subs).unwrap().to_string(), "x1^2 + 4*x1 + 1");
        assert_eq!(q.partial(0).to_string(), "2*x1");
        assert_eq!(p("x1^3*x2").partial(1).to_string(), "x1^3");
    }

    #[test]
    fn sigma_counts_absolute_coefficients() {
        assert_eq!(p("x1 - 2*x2 + 1/2").sigma(), ratio(7, 2));
    }

    #[test]
    fn remap_moves_variables() {
        let q = p("x1*x2^2");
        assert_eq!(q.remap(4, &[3, 0]).to_string(), "x1^2*x4");
    }
}
