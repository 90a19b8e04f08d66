//! Exact rational arithmetic helpers.
//!
//! All actions, form integrals and algebra coefficients are arbitrary
//! precision rationals; floating point appears only in the numeric cover
//! model ([`crate::covers`]).

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};

use crate::{Error, Result};

/// Exact rational number.
pub type Rat = BigRational;

/// Parses `"p/q"` or a plain integer string into a rational.
pub fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    let mk_err = || Error::Parse(format!("invalid rational literal {s:?}"));
    match s.split_once('/') {
        Some((num, den)) => {
            let num: BigInt = num.trim().parse().map_err(|_| mk_err())?;
            let den: BigInt = den.trim().parse().map_err(|_| mk_err())?;
            if den.is_zero() {
                return Err(Error::Parse(format!("zero denominator in {s:?}")));
            }
            Ok(Rat::new(num, den))
        }
        None => {
            let num: BigInt = s.parse().map_err(|_| mk_err())?;
            Ok(Rat::from_integer(num))
        }
    }
}

/// Renders a rational as `"p/q"`, or `"p"` when the denominator is one.
pub fn rat_to_string(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn rat_frac(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

pub fn is_positive(r: &Rat) -> bool {
    r.is_positive()
}

/// Serde adapter serializing rationals as `"p/q"` strings.
pub mod serde_rat {
    use super::{parse_rat, rat_to_string, Rat};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(r: &Rat, ser: S) -> Result<S::Ok, S::Error> {
        rat_to_string(r).serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Rat, D::Error> {
        let s = String::deserialize(de)?;
        parse_rat(&s).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `Vec<Rat>` as a list of `"p/q"` strings.
pub mod serde_rat_vec {
    use super::{parse_rat, rat_to_string, Rat};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Rat], ser: S) -> Result<S::Ok, S::Error> {
        v.iter().map(rat_to_string).collect::<Vec<_>>().serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<Rat>, D::Error> {
        let strings = Vec::<String>::deserialize(de)?;
        strings
            .iter()
            .map(|s| parse_rat(s).map_err(serde::de::Error::custom))
            .collect()
    }
}
