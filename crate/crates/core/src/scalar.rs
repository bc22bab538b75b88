//! Scalar abstraction shared by the distribution and moment code.
//!
//! Everything that propagates probabilities or evaluates moment formulas is
//! written against [`Scalar`], so the same code runs with exact rationals
//! (the default, see [`crate::Rational`]) and with `f64` for fast large-rank
//! diagnostics.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, NumAssign, Signed, ToPrimitive};

/// A field-like number type usable as a probability or moment value.
pub trait Scalar:
    Num + NumAssign + Signed + Clone + PartialOrd + Debug + FromPrimitive + ToPrimitive + Send + Sync
{
    /// `true` when arithmetic on this type is exact.
    const EXACT: bool;

    fn from_int(v: i64) -> Self {
        Self::from_i64(v).expect("every scalar represents small integers")
    }

    fn from_bigint(v: &BigInt) -> Self;

    /// `num / den`, accurate even when both overflow the native range.
    fn from_big_ratio(num: &BigInt, den: &BigInt) -> Self {
        Self::from_bigint(num) / Self::from_bigint(den)
    }

    fn ratio(num: i64, den: i64) -> Self {
        Self::from_int(num) / Self::from_int(den)
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Integer power by repeated multiplication.
    fn powi(&self, exp: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..exp {
            acc *= self.clone();
        }
        acc
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_bigint(v: &BigInt) -> Self {
        BigRational::from_integer(v.clone())
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_bigint(v: &BigInt) -> Self {
        v.to_f64().unwrap_or(f64::INFINITY)
    }

    fn from_big_ratio(num: &BigInt, den: &BigInt) -> Self {
        match (num.to_f64(), den.to_f64()) {
            (Some(a), Some(b)) if a.is_finite() && b.is_finite() => a / b,
            _ => BigRational::new(num.clone(), den.clone()).to_f64().unwrap_or(f64::NAN),
        }
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;

    fn from_bigint(v: &BigInt) -> Self {
        v.to_f32().unwrap_or(f32::INFINITY)
    }

    fn from_big_ratio(num: &BigInt, den: &BigInt) -> Self {
        f64::from_big_ratio(num, den) as f32
    }
}

/// Renders an exact rational as `p/q` (or `p` when integral).
pub fn fmt_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `p/q`, `p`, or a signed integer into a rational.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().ok()?;
            let q: BigInt = q.trim().parse().ok()?;
            if q == BigInt::from(0) {
                return None;
            }
            Some(BigRational::new(p, q))
        }
        None => {
            if let Ok(p) = s.parse::<BigInt>() {
                return Some(BigRational::from_integer(p));
            }
            // decimal literal such as 0.25
            let (int, frac) = s.split_once('.')?;
            let digits = format!("{int}{frac}");
            let p: BigInt = digits.parse().ok()?;
            let q = num_traits::pow(BigInt::from(10), frac.len());
            Some(BigRational::new(p, q))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_round_trip_text() {
        for s in ["3/4", "-7/2", "5", "0"] {
            let r = parse_rational(s).unwrap();
            assert_eq!(fmt_rational(&r), s);
        }
        assert_eq!(fmt_rational(&parse_rational("0.25").unwrap()), "1/4");
        assert!(parse_rational("1/0").is_none());
        assert!(parse_rational("abc").is_none());
    }

    #[test]
    fn ratio_and_powi_agree_across_scalars() {
        let r = BigRational::ratio(3, 4).powi(3);
        assert_eq!(r, BigRational::new(27.into(), 64.into()));
        assert!((f64::ratio(3, 4).powi(3) - 27.0 / 64.0).abs() < 1e-15);
    }
}
