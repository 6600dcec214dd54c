//! Exact rational arithmetic helpers and the probability newtype.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// All exact quantities (objective values, coordinates, slacks) use this type.
pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `"3"`, `"-2"`, `"1/2"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::schema("rational", format!("`{s}` is not an integer or a fraction p/q"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
            let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(Rational::new(n, d))
        }
        None => Ok(Rational::from_integer(BigInt::from_str(s).map_err(|_| bad())?)),
    }
}

/// `p/q` (or `p` when integral).
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // numerator/denominator may overflow f64 individually
        let shift = r.numer().bits().max(r.denom().bits()).saturating_sub(1000) as usize;
        let n = (r.numer() >> shift).to_f64().unwrap_or(f64::NAN);
        let d = (r.denom() >> shift).to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// `1 - (1-a)(1-b)`.
pub fn prob_sum(a: &Rational, b: &Rational) -> Rational {
    let one = Rational::one();
    &one - (&one - a) * (&one - b)
}

/// `true` iff `0 < r < 1`.
pub fn is_fractional(r: &Rational) -> bool {
    r.is_positive() && *r < Rational::one()
}

/// A coordinate value in `[0, 1]`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Prob(Rational);

impl Prob {
    pub fn new(value: Rational) -> Result<Self> {
        if value.is_negative() || value > Rational::one() {
            return Err(Error::contract(format!(
                "probability {} outside [0, 1]",
                format_rational(&value)
            )));
        }
        Ok(Prob(value))
    }

    pub fn one() -> Self {
        Prob(Rational::one())
    }

    pub fn zero() -> Self {
        Prob(Rational::zero())
    }

    pub fn value(&self) -> &Rational {
        &self.0
    }

    pub fn into_inner(self) -> Rational {
        self.0
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_fractional(&self) -> bool {
        is_fractional(&self.0)
    }

    pub fn complement(&self) -> Prob {
        Prob(Rational::one() - &self.0)
    }

    pub fn psum(&self, other: &Prob) -> Prob {
        Prob(prob_sum(&self.0, &other.0))
    }
}

impl fmt::Debug for Prob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_rational(&self.0))
    }
}

impl fmt::Display for Prob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_rational(&self.0))
    }
}
