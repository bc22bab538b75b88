//! Distributions of integer-valued statistics.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Probability mass function on `offset, offset+1, ..`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegerPmf<S> {
    pub offset: i64,
    pub probs: Vec<S>,
}

impl<S: Scalar> IntegerPmf<S> {
    pub fn new(offset: i64, probs: Vec<S>) -> Self {
        IntegerPmf { offset, probs }
    }

    pub fn point_mass(at: i64) -> Self {
        IntegerPmf { offset: at, probs: vec![S::one()] }
    }

    /// Normalizes nonnegative integer weights.
    pub fn from_counts(offset: i64, counts: &[BigUint]) -> Self {
        let total: BigUint = counts.iter().sum();
        let total = BigInt::from(total);
        let probs = counts.iter().map(|c| S::from_big_ratio(&BigInt::from(c.clone()), &total)).collect();
        IntegerPmf { offset, probs }
    }

    pub fn support(&self) -> impl Iterator<Item = (i64, &S)> {
        self.probs.iter().enumerate().map(move |(i, p)| (self.offset + i as i64, p))
    }

    pub fn max_abs_support(&self) -> i64 {
        self.support().filter(|(_, p)| !p.is_zero()).map(|(x, _)| x.abs()).max().unwrap_or(0)
    }

    pub fn total(&self) -> S {
        self.probs.iter().fold(S::zero(), |acc, p| acc + p.clone())
    }

    pub fn prob(&self, x: i64) -> S {
        let i = x - self.offset;
        if i < 0 {
            return S::zero();
        }
        self.probs.get(i as usize).cloned().unwrap_or_else(S::zero)
    }

    pub fn raw_moment(&self, k: u32) -> S {
        self.support()
            .fold(S::zero(), |acc, (x, p)| acc + S::from_int(x).powi(k) * p.clone())
    }

    pub fn mean(&self) -> S {
        self.raw_moment(1)
    }

    /// `E((X - E X)^k)`.
    pub fn central_moment(&self, k: u32) -> S {
        let mu = self.mean();
        self.support()
            .fold(S::zero(), |acc, (x, p)| acc + (S::from_int(x) - mu.clone()).powi(k) * p.clone())
    }

    pub fn variance(&self) -> S {
        self.central_moment(2)
    }

    /// Distribution of `X + c`.
    pub fn shift(&self, c: i64) -> Self {
        IntegerPmf { offset: self.offset + c, probs: self.probs.clone() }
    }

    /// Exact distribution of the sum of two independent variables.
    pub fn convolve(&self, other: &Self) -> Self {
        if self.probs.is_empty() || other.probs.is_empty() {
            return IntegerPmf { offset: self.offset + other.offset, probs: Vec::new() };
        }
        let mut probs = vec![S::zero(); self.probs.len() + other.probs.len() - 1];
        for (i, p) in self.probs.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            for (j, q) in other.probs.iter().enumerate() {
                if !q.is_zero() {
                    probs[i + j] += p.clone() * q.clone();
                }
            }
        }
        IntegerPmf { offset: self.offset + other.offset, probs }
    }

    /// Drops zero mass at both ends.
    pub fn trimmed(mut self) -> Self {
        while self.probs.last().is_some_and(|p| p.is_zero()) {
            self.probs.pop();
        }
        let lead = self.probs.iter().take_while(|p| p.is_zero()).count();
        self.probs.drain(..lead);
        self.offset += lead as i64;
        self
    }

    /// `(x, P(X < x), P(X <= x))` over the support.
    pub fn cdf_jumps(&self) -> Vec<(i64, S, S)> {
        let mut acc = S::zero();
        self.support()
            .map(|(x, p)| {
                let left = acc.clone();
                acc += p.clone();
                (x, left, acc.clone())
            })
            .collect()
    }

    pub fn to_f64(&self) -> IntegerPmf<f64> {
        IntegerPmf { offset: self.offset, probs: self.probs.iter().map(Scalar::to_f64_lossy).collect() }
    }
}

/// JSON form of an exact pmf with a common denominator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PmfJson {
    pub offset: i64,
    pub denominator: String,
    pub counts: Vec<String>,
}

impl IntegerPmf<BigRational> {
    /// Writes the probabilities over their least common denominator.
    pub fn to_json(&self) -> PmfJson {
        use num_integer::Integer;
        let den = self.probs.iter().fold(BigInt::from(1), |acc, p| acc.lcm(p.denom()));
        let counts = self.probs.iter().map(|p| (p.numer() * (&den / p.denom())).to_string()).collect();
        PmfJson { offset: self.offset, denominator: den.to_string(), counts }
    }

    pub fn from_json(j: &PmfJson) -> Option<Self> {
        let den: BigInt = j.denominator.parse().ok()?;
        let probs = j
            .counts
            .iter()
            .map(|c| c.parse::<BigInt>().ok().map(|c| BigRational::new(c, den.clone())))
            .collect::<Option<Vec<_>>>()?;
        Some(IntegerPmf { offset: j.offset, probs })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;
    use proptest::prelude::*;

    fn r(p: i64, q: i64) -> Rational {
        Rational::new(p.into(), q.into())
    }

    fn pmf_from_weights(offset: i64, w: &[u32]) -> IntegerPmf<Rational> {
        let counts: Vec<BigUint> = w.iter().map(|&x| BigUint::from(x)).collect();
        IntegerPmf::from_counts(offset, &counts)
    }

    #[test]
    fn point_mass_has_no_spread() {
        let p = IntegerPmf::<Rational>::point_mass(3);
        for k in 1..5 {
            assert_eq!(p.central_moment(k), r(0, 1));
        }
        assert_eq!(p.mean(), r(3, 1));
    }

    #[test]
    fn convolve_with_point_mass_at_zero_is_identity() {
        let p = pmf_from_weights(0, &[1, 2, 3]);
        assert_eq!(p.convolve(&IntegerPmf::point_mass(0)), p);
        assert_eq!(p.convolve(&IntegerPmf::point_mass(2)), p.shift(2));
    }

    #[test]
    fn json_round_trip() {
        let p = pmf_from_weights(-1, &[1, 0, 5, 2]);
        let j = p.to_json();
        assert_eq!(j.denominator, "8");
        assert_eq!(IntegerPmf::from_json(&j).unwrap(), p);
    }

    #[test]
    fn trimming_keeps_distribution() {
        let p = IntegerPmf::new(0, vec![r(0, 1), r(1, 2), r(1, 2), r(0, 1)]).trimmed();
        assert_eq!(p.offset, 1);
        assert_eq!(p.probs.len(), 2);
    }

    fn weights() -> impl Strategy<Value = (i64, Vec<u32>)> {
        (-3i64..3, prop::collection::vec(0u32..6, 1..6))
            .prop_filter("nonzero mass", |(_, w)| w.iter().any(|&x| x > 0))
    }

    proptest! {
        #[test]
        fn convolution_commutes_and_adds_moments((o1, w1) in weights(), (o2, w2) in weights()) {
            let p = pmf_from_weights(o1, &w1);
            let q = pmf_from_weights(o2, &w2);
            let pq = p.convolve(&q);
            prop_assert_eq!(&pq, &q.convolve(&p));
            prop_assert_eq!(pq.total(), r(1, 1));
            prop_assert_eq!(pq.mean(), p.mean() + q.mean());
            prop_assert_eq!(pq.variance(), p.variance() + q.variance());
            prop_assert_eq!(pq.central_moment(3), p.central_moment(3) + q.central_moment(3));
        }
    }
}
