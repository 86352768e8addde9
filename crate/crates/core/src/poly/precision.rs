use super::{rational_to_f64, Rational};
use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use std::fmt;

/// A dyadic value `mantissa * 2^exponent` with at most `bits` significant bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrecisionReal {
    pub mantissa: BigInt,
    pub exponent: i64,
    pub bits: u32,
}

impl PrecisionReal {
    /// Rounds to nearest, ties to even.
    pub fn round(value: &Rational, bits: u32) -> Self {
        if value.is_zero() {
            return PrecisionReal { mantissa: BigInt::zero(), exponent: 0, bits };
        }
        let neg = value.is_negative();
        let n = value.numer().abs();
        let d = value.denom().clone();
        let lo = BigInt::one() << (bits - 1);
        let hi = BigInt::one() << bits;
        let mut e = n.bits() as i64 - d.bits() as i64 - bits as i64;
        let (mut q, r, den);
        loop {
            let (num, dd) = if e >= 0 { (n.clone(), &d << (e as usize)) } else { (&n << ((-e) as usize), d.clone()) };
            let (qq, rr) = num.div_rem(&dd);
            if qq >= hi {
                e += 1;
                continue;
            }
            if qq < lo {
                e -= 1;
                continue;
            }
            q = qq;
            r = rr;
            den = dd;
            break;
        }
        let twice = &r << 1usize;
        if twice > den || (twice == den && q.is_odd()) {
            q += 1;
            if q == hi {
                q >>= 1usize;
                e += 1;
            }
        }
        if neg {
            q = -q;
        }
        PrecisionReal { mantissa: q, exponent: e, bits }
    }

    pub fn to_rational(&self) -> Rational {
        let m = Rational::from_integer(self.mantissa.clone());
        if self.exponent >= 0 {
            m * Rational::from_integer(BigInt::one() << (self.exponent as usize))
        } else {
            m / Rational::from_integer(BigInt::one() << ((-self.exponent) as usize))
        }
    }

    pub fn to_f64(&self) -> f64 {
        rational_to_f64(&self.to_rational())
    }

    /// Half an ulp at this precision, as an exact rational.
    pub fn half_ulp(&self) -> Rational {
        let e = self.exponent - 1;
        if e >= 0 {
            Rational::from_integer(BigInt::one() << (e as usize))
        } else {
            Rational::new(BigInt::one(), BigInt::one() << ((-e) as usize))
        }
    }
}

impl fmt::Display for PrecisionReal {
    /// Scientific notation with enough decimal digits to identify the value.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.mantissa.is_zero() {
            return write!(f, "0");
        }
        let digits = (self.bits as f64 * std::f64::consts::LOG10_2).ceil() as usize + 1;
        let v = self.to_rational();
        let neg = v.is_negative();
        let a = v.abs();
        // find decimal exponent k with 10^k <= a < 10^(k+1)
        let ten = Rational::from_integer(BigInt::from(10));
        let mut k: i64 = (rational_to_f64(&a).log10().floor()) as i64;
        let pow10 = |k: i64| -> Rational {
            if k >= 0 {
                Rational::from_integer(num_traits::pow(BigInt::from(10), k as usize))
            } else {
                Rational::new(BigInt::one(), num_traits::pow(BigInt::from(10), (-k) as usize))
            }
        };
        while a < pow10(k) {
            k -= 1;
        }
        while a >= pow10(k + 1) {
            k += 1;
        }
        let scaled = &a / pow10(k) * num_traits::pow(ten, digits - 1);
        let rounded = scaled.round().to_integer();
        let mut s = rounded.to_str_radix(10);
        if s.len() > digits {
            s.pop();
            k += 1;
        }
        let (head, tail) = s.split_at(1);
        let tail = tail.trim_end_matches('0');
        let sign = if neg || self.mantissa.sign() == Sign::Minus { "-" } else { "" };
        if tail.is_empty() {
            write!(f, "{sign}{head}e{k}")
        } else {
            write!(f, "{sign}{head}.{tail}e{k}")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::ratio;

    #[test]
    fn rounds_one_third() {
        let r = PrecisionReal::round(&ratio(1, 3), 53);
        assert_eq!(r.to_f64(), 1.0 / 3.0);
        assert!(r.mantissa.bits() == 53);
    }

    #[test]
    fn error_within_half_ulp() {
        for bits in [53u32, 64, 113, 256] {
            let x = ratio(-22, 7);
            let r = PrecisionReal::round(&x, bits);
            let err = (r.to_rational() - &x).abs();
            assert!(err <= r.half_ulp());
        }
    }

    #[test]
    fn ties_to_even() {
        // 2^53 + 1 is a tie between 2^53 and 2^53 + 2
        let x = Rational::from_integer((BigInt::one() << 53usize) + 1);
        let r = PrecisionReal::round(&x, 53);
        assert_eq!(r.to_rational(), Rational::from_integer(BigInt::one() << 53usize));
    }

    #[test]
    fn decimal_display() {
        let r = PrecisionReal::round(&ratio(23, 2), 64);
        assert_eq!(r.to_string(), "1.15e1");
        let r = PrecisionReal::round(&ratio(-1, 8), 53);
        assert_eq!(r.to_string(), "-1.25e-1");
    }
}
