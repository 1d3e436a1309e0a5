//! Helpers around [`BigRational`]: parsing, "num/den" serialization, and
//! conversion of huge integers to floating point without overflow.

use std::cmp::Ordering;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::{BigRational, Error, Result};

/// Parses `"p/q"`, a plain integer, or a finite decimal such as `"0.3"`.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("bad numerator in {s:?}")))?;
        let den: BigInt = den
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("bad denominator in {s:?}")))?;
        if den.is_zero() {
            return Err(Error::invalid(format!("zero denominator in {s:?}")));
        }
        return Ok(BigRational::new(num, den));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let negative = int.starts_with('-');
        let digits = format!("{}{}", int.trim_start_matches(['-', '+']), frac);
        let num: BigInt = digits
            .parse()
            .map_err(|_| Error::invalid(format!("bad decimal {s:?}")))?;
        let den = num_traits::pow(BigInt::from(10u32), frac.len());
        let value = BigRational::new(num, den);
        return Ok(if negative { -value } else { value });
    }
    let num: BigInt = s
        .parse()
        .map_err(|_| Error::invalid(format!("bad rational {s:?}")))?;
    Ok(BigRational::from_integer(num))
}

/// Formats as `"num/den"` (always with the slash, also for integers).
pub fn format_rational(x: &BigRational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// A float split into mantissa and binary exponent, `mant · 2^exp`, able to
/// represent integers with millions of bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledF64 {
    pub mant: f64,
    pub exp: i64,
}

impl ScaledF64 {
    pub fn from_biguint(x: &BigUint) -> Self {
        let bits = x.bits();
        if bits <= 64 {
            return ScaledF64 {
                mant: x.to_u64().map(|v| v as f64).unwrap_or(0.0),
                exp: 0,
            };
        }
        // top 128 bits are plenty for a correctly rounded-ish f64 mantissa
        let mut digits = x.iter_u64_digits().rev();
        let hi = digits.next().unwrap_or(0);
        let lo = digits.next().unwrap_or(0);
        let limbs = x.iter_u64_digits().len() as i64;
        let top = ((hi as u128) << 64) | lo as u128;
        ScaledF64 {
            mant: top as f64,
            exp: 64 * (limbs - 2),
        }
    }

    pub fn from_bigint(x: &BigInt) -> Self {
        let s = Self::from_biguint(x.magnitude());
        if x.sign() == Sign::Minus {
            ScaledF64 { mant: -s.mant, ..s }
        } else {
            s
        }
    }

    pub fn mul(self, other: Self) -> Self {
        ScaledF64 {
            mant: self.mant * other.mant,
            exp: self.exp + other.exp,
        }
        .renormalize()
    }

    pub fn div(self, other: Self) -> Self {
        ScaledF64 {
            mant: self.mant / other.mant,
            exp: self.exp - other.exp,
        }
        .renormalize()
    }

    fn renormalize(self) -> Self {
        if self.mant == 0.0 || !self.mant.is_finite() {
            return self;
        }
        let e = self.mant.abs().log2().floor() as i64;
        ScaledF64 {
            mant: self.mant / 2f64.powi(e as i32),
            exp: self.exp + e,
        }
    }

    /// Natural logarithm of the absolute value.
    pub fn ln(self) -> f64 {
        self.mant.abs().ln() + self.exp as f64 * std::f64::consts::LN_2
    }

    pub fn to_f64(self) -> f64 {
        if self.exp > 2000 {
            return self.mant.signum() * f64::INFINITY;
        }
        if self.exp < -2000 {
            return 0.0;
        }
        self.mant * 2f64.powi(self.exp as i32)
    }
}

/// `num / den` as an `f64`, accurate even when both have thousands of bits.
pub fn ratio_to_f64(num: &BigInt, den: &BigInt) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    ScaledF64::from_bigint(num)
        .div(ScaledF64::from_bigint(den))
        .to_f64()
}

pub fn rational_to_f64(x: &BigRational) -> f64 {
    ratio_to_f64(x.numer(), x.denom())
}

/// Nearest integer to `num / den` (`den > 0`). The flag reports an exact
/// half-integer, in which case the value rounded towards +∞ is returned.
pub fn round_nearest(num: &BigInt, den: &BigInt) -> (BigInt, bool) {
    let two = BigInt::from(2);
    let (q, r) = (num * &two + den).div_mod_floor(&(den * &two));
    (q, r.is_zero())
}

pub fn floor_rational(x: &BigRational) -> BigInt {
    x.numer().div_floor(x.denom())
}

/// Compares `|a|` and `|b|`.
pub fn cmp_abs(a: &BigRational, b: &BigRational) -> Ordering {
    a.abs().cmp(&b.abs())
}

pub fn rational_from_f64_exact(x: f64) -> Option<BigRational> {
    BigRational::from_float(x)
}

pub fn is_integer(x: &BigRational) -> bool {
    x.denom().is_one()
}

/// Serde adapter for rationals stored as `"num/den"` strings.
pub mod serde_rational {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BigRational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `Vec<BigRational>` as a list of strings.
pub mod serde_rational_vec {
    use super::*;
    use serde::{ser::SerializeSeq, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(xs: &[BigRational], s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(xs.len()))?;
        for x in xs {
            seq.serialize_element(&format_rational(x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<BigRational>, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        v.iter()
            .map(|s| parse_rational(s).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Serde adapter for a matrix of rationals given row by row.
pub mod serde_rational_matrix {
    use super::*;
    use serde::{ser::SerializeSeq, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(rows: &[Vec<BigRational>], s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(rows.len()))?;
        for row in rows {
            let strs: Vec<String> = row.iter().map(format_rational).collect();
            seq.serialize_element(&strs)?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Vec<BigRational>>, D::Error> {
        let v = Vec::<Vec<String>>::deserialize(d)?;
        v.iter()
            .map(|row| {
                row.iter()
                    .map(|s| parse_rational(s).map_err(serde::de::Error::custom))
                    .collect()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_integers_and_decimals() {
        assert_eq!(parse_rational("355/113").unwrap(), BigRational::new(355.into(), 113.into()));
        assert_eq!(parse_rational("-6/4").unwrap(), BigRational::new((-3).into(), 2.into()));
        assert_eq!(parse_rational("5").unwrap(), BigRational::from_integer(5.into()));
        assert_eq!(parse_rational("0.3").unwrap(), BigRational::new(3.into(), 10.into()));
        assert_eq!(parse_rational("-1.25").unwrap(), BigRational::new((-5).into(), 4.into()));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
    }

    #[test]
    fn huge_ratio_converts() {
        let a = BigInt::one() << 5000usize;
        let b = (BigInt::one() << 5001usize) + 1;
        let x = ratio_to_f64(&a, &b);
        assert!((x - 0.5).abs() < 1e-15);
        let s = ScaledF64::from_biguint(&(BigUint::one() << 100_000usize));
        assert!((s.ln() - 100_000.0 * std::f64::consts::LN_2).abs() < 1e-9);
    }

    #[test]
    fn rounding_flags_half_integers() {
        assert_eq!(round_nearest(&7.into(), &2.into()), (4.into(), true));
        assert_eq!(round_nearest(&(-7).into(), &2.into()), ((-3).into(), true));
        assert_eq!(round_nearest(&(-3).into(), &10.into()), (0.into(), false));
        assert_eq!(round_nearest(&(-9).into(), &10.into()), ((-1).into(), false));
    }
}
