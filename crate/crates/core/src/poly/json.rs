use super::{MultiPoly, PolyVector, Rational};
use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Integers serialize as JSON numbers when they fit in an i64, otherwise as strings.
#[derive(Debug, Clone)]
struct JsonInt(BigInt);

impl Serialize for JsonInt {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0.to_i64() {
            Some(v) => s.serialize_i64(v),
            None => s.serialize_str(&self.0.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for JsonInt {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(i64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(JsonInt(BigInt::from(v))),
            Raw::Str(s) => s.parse().map(JsonInt).map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    exp: Vec<u32>,
    num: JsonInt,
    den: JsonInt,
}

#[derive(Serialize, Deserialize)]
struct PolyJson {
    arity: usize,
    terms: Vec<TermJson>,
}

impl Serialize for MultiPoly {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        PolyJson {
            arity: self.arity(),
            terms: self
                .terms()
                .iter()
                .map(|t| TermJson {
                    exp: t.exponents.clone(),
                    num: JsonInt(t.coeff.numer().clone()),
                    den: JsonInt(t.coeff.denom().clone()),
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MultiPoly {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = PolyJson::deserialize(d)?;
        let mut terms = Vec::with_capacity(raw.terms.len());
        for t in raw.terms {
            if t.den.0.is_zero() {
                return Err(serde::de::Error::custom("zero denominator"));
            }
            terms.push((t.exp, Rational::new(t.num.0, t.den.0)));
        }
        MultiPoly::from_terms(raw.arity, terms).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct PolyVectorJson {
    arity: usize,
    components: Vec<MultiPoly>,
}

impl Serialize for PolyVector {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        PolyVectorJson { arity: self.arity, components: self.components.clone() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PolyVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = PolyVectorJson::deserialize(d)?;
        PolyVector::new(raw.arity, raw.components).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let p: MultiPoly = "3*x1^2*x2 - 1/2*x2".parse().unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(
            s,
            r#"{"arity":2,"terms":[{"exp":[2,1],"num":3,"den":1},{"exp":[0,1],"num":-1,"den":2}]}"#
        );
        let back: MultiPoly = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn big_coefficients_use_strings() {
        let big: BigInt = "123456789012345678901234567890".parse().unwrap();
        let p = MultiPoly::constant(1, Rational::from_integer(big));
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.contains("\"123456789012345678901234567890\""));
        let back: MultiPoly = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn rejects_wrong_arity_terms() {
        let s = r#"{"arity":2,"terms":[{"exp":[1],"num":1,"den":1}]}"#;
        assert!(serde_json::from_str::<MultiPoly>(s).is_err());
    }
}
