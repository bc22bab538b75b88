//! Exact joint distribution of `(des(w), des(w^{-1}))`.
//!
//! Types A and B are built by pushing the rank-1 distribution
//! `{(0,0): 1/2, (1,1): 1/2}` forward through four-branch transition
//! kernels: from rank `n` to `n+1`, mass at `(i, j)` moves to `(i, j)`,
//! `(i+1, j)`, `(i, j+1)`, `(i+1, j+1)` with probabilities
//!
//! ```text
//! type A, over (n+2)^2:
//!   P1 = (i+1)(j+1) + n+1        P2 = (n+1-i)(j+1) - (n+1)
//!   P3 = (i+1)(n+1-j) - (n+1)    P4 = (n+1-i)(n+1-j) + n+1
//! type B, over 2(n+1)^2:
//!   P1 = n+1 + i + j + 2ij       P2 = -i + (2n+1)j - 2ij
//!   P3 = (2n+1)i - j - 2ij       P4 = (2n+1)(n+1-i-j) + 2ij
//! ```
//!
//! Type B also has a direct coefficient recursion ([`counts_recursion_b`])
//! that serves as an independent second route. I2(m) is closed form and D
//! is enumerated up to a rank cap.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::enumerate::enumerate_type;
use crate::error::{Error, Result};
use crate::group::{Family, GroupType};
use crate::pmf::IntegerPmf;
use crate::scalar::Scalar;

/// Counts `c[i][j]` of elements with `des = i` and `ides = j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointCountMatrix {
    pub n: u32,
    pub counts: Vec<Vec<BigUint>>,
}

/// Serialized form: `{"n": .., "denominator": "..", "counts": [[".."]]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointCountJson {
    pub n: u32,
    pub denominator: String,
    pub counts: Vec<Vec<String>>,
}

impl JointCountMatrix {
    pub fn zeros(n: u32) -> Self {
        let d = n as usize + 1;
        JointCountMatrix { n, counts: vec![vec![BigUint::zero(); d]; d] }
    }

    /// Rank-1 base case shared by types A and B.
    pub fn base() -> Self {
        let mut m = Self::zeros(1);
        m.counts[0][0] = BigUint::one();
        m.counts[1][1] = BigUint::one();
        m
    }

    pub fn total(&self) -> BigUint {
        self.counts.iter().flatten().sum()
    }

    pub fn get(&self, i: usize, j: usize) -> BigUint {
        self.counts.get(i).and_then(|r| r.get(j)).cloned().unwrap_or_default()
    }

    pub fn is_symmetric(&self) -> bool {
        let d = self.counts.len();
        (0..d).all(|i| (0..d).all(|j| self.counts[i][j] == self.counts[j][i]))
    }

    /// `c[i][j] == c[n-i][n-j]`.
    pub fn is_centrally_symmetric(&self) -> bool {
        let d = self.counts.len();
        (0..d).all(|i| (0..d).all(|j| self.counts[i][j] == self.counts[d - 1 - i][d - 1 - j]))
    }

    /// Distribution of `des` as counts.
    pub fn marginal(&self) -> Vec<BigUint> {
        self.counts.iter().map(|row| row.iter().sum()).collect()
    }

    /// Counts of `t = i + j`, indexed by `t`.
    pub fn t_counts(&self) -> Vec<BigUint> {
        let d = self.counts.len();
        let mut out = vec![BigUint::zero(); 2 * d - 1];
        for (i, row) in self.counts.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                out[i + j] += c;
            }
        }
        out
    }

    pub fn to_pmf<S: Scalar>(&self) -> JointPmf<S> {
        let total = BigInt::from(self.total());
        let p = self
            .counts
            .iter()
            .map(|row| row.iter().map(|c| S::from_big_ratio(&BigInt::from(c.clone()), &total)).collect())
            .collect();
        JointPmf { n: self.n, p }
    }

    pub fn t_pmf<S: Scalar>(&self) -> IntegerPmf<S> {
        IntegerPmf::from_counts(0, &self.t_counts())
    }

    /// Joint counts on the direct product: `des` and `ides` add across
    /// factors, so the matrices convolve in both coordinates.
    pub fn convolve(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.n + other.n);
        for (i, row) in self.counts.iter().enumerate() {
            for (j, a) in row.iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                for (k, row2) in other.counts.iter().enumerate() {
                    for (l, b) in row2.iter().enumerate() {
                        if !b.is_zero() {
                            out.counts[i + k][j + l] += a * b;
                        }
                    }
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> JointCountJson {
        JointCountJson {
            n: self.n,
            denominator: self.total().to_string(),
            counts: self.counts.iter().map(|r| r.iter().map(|c| c.to_string()).collect()).collect(),
        }
    }

    pub fn from_json(j: &JointCountJson) -> Result<Self> {
        let bad = |m: &str| Error::InvalidArgument(format!("joint count JSON: {m}"));
        let counts = j
            .counts
            .iter()
            .map(|r| r.iter().map(|c| c.parse::<BigUint>().map_err(|_| bad("non-integer count"))).collect())
            .collect::<Result<Vec<Vec<_>>>>()?;
        if counts.len() != j.n as usize + 1 || counts.iter().any(|r| r.len() != counts.len()) {
            return Err(bad("matrix shape does not match n"));
        }
        let m = JointCountMatrix { n: j.n, counts };
        if m.total().to_string() != j.denominator {
            return Err(bad("denominator differs from the sum of counts"));
        }
        Ok(m)
    }
}

/// Joint probabilities `p[i][j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf<S> {
    pub n: u32,
    pub p: Vec<Vec<S>>,
}

impl<S: Scalar> JointPmf<S> {
    pub fn base() -> Self {
        JointCountMatrix::base().to_pmf()
    }

    pub fn total(&self) -> S {
        self.p.iter().flatten().fold(S::zero(), |a, b| a + b.clone())
    }

    /// `E(f(des, ides))`.
    pub fn expect(&self, f: impl Fn(i64, i64) -> S) -> S {
        let mut acc = S::zero();
        for (i, row) in self.p.iter().enumerate() {
            for (j, q) in row.iter().enumerate() {
                if !q.is_zero() {
                    acc += f(i as i64, j as i64) * q.clone();
                }
            }
        }
        acc
    }

    pub fn t_pmf(&self) -> IntegerPmf<S> {
        let d = self.p.len();
        let mut probs = vec![S::zero(); 2 * d - 1];
        for (i, row) in self.p.iter().enumerate() {
            for (j, q) in row.iter().enumerate() {
                probs[i + j] += q.clone();
            }
        }
        IntegerPmf::new(0, probs)
    }
}

impl JointPmf<num_rational::BigRational> {
    /// Recovers counts given the group order; fails unless every scaled
    /// entry is a nonnegative integer.
    pub fn to_counts(&self, order: &BigUint) -> Result<JointCountMatrix> {
        let ord = num_rational::BigRational::from_integer(BigInt::from(order.clone()));
        let mut out = JointCountMatrix::zeros(self.n);
        for (i, row) in self.p.iter().enumerate() {
            for (j, q) in row.iter().enumerate() {
                let scaled = q * &ord;
                if !scaled.is_integer() || scaled.is_negative() {
                    return Err(Error::Consistency(format!("p[{i}][{j}] * order = {scaled} is not a count")));
                }
                out.counts[i][j] = scaled.to_integer().to_biguint().unwrap();
            }
        }
        Ok(out)
    }
}

/// Branch numerators `[P1, P2, P3, P4]` and their common denominator for the
/// step from rank `n` to `n + 1` at state `(i, j)`.
pub fn branch_numerators(family: Family, n: u32, i: i64, j: i64) -> ([i64; 4], i64) {
    let n = n as i64;
    match family {
        Family::A => (
            [
                (i + 1) * (j + 1) + n + 1,
                (n + 1 - i) * (j + 1) - n - 1,
                (i + 1) * (n + 1 - j) - n - 1,
                (n + 1 - i) * (n + 1 - j) + n + 1,
            ],
            (n + 2) * (n + 2),
        ),
        Family::B => (
            [
                n + 1 + i + j + 2 * i * j,
                -i + (2 * n + 1) * j - 2 * i * j,
                (2 * n + 1) * i - j - 2 * i * j,
                (2 * n + 1) * (n + 1 - i - j) + 2 * i * j,
            ],
            2 * (n + 1) * (n + 1),
        ),
        _ => panic!("transition kernels exist for types A and B only"),
    }
}

const BRANCHES: [(usize, usize); 4] = [(0, 0), (1, 0), (0, 1), (1, 1)];

/// One kernel step on probabilities, in any scalar type.
pub fn kernel_step<S: Scalar>(family: Family, p: &JointPmf<S>) -> Result<JointPmf<S>> {
    let n = p.n;
    let d = n as usize + 2;
    let mut out = vec![vec![S::zero(); d]; d];
    for (i, row) in p.p.iter().enumerate() {
        for (j, mass) in row.iter().enumerate() {
            if mass.is_zero() {
                continue;
            }
            let (nums, den) = branch_numerators(family, n, i as i64, j as i64);
            for (k, &(di, dj)) in BRANCHES.iter().enumerate() {
                if nums[k] < 0 {
                    return Err(Error::Consistency(format!(
                        "negative type-{family} branch P{} at rank {n}, state ({i},{j})",
                        k + 1
                    )));
                }
                if nums[k] > 0 {
                    out[i + di][j + dj] += mass.clone() * S::ratio(nums[k], den);
                }
            }
        }
    }
    Ok(JointPmf { n: n + 1, p: out })
}

pub fn kernel_step_a<S: Scalar>(p: &JointPmf<S>) -> Result<JointPmf<S>> {
    kernel_step(Family::A, p)
}

pub fn kernel_step_b<S: Scalar>(p: &JointPmf<S>) -> Result<JointPmf<S>> {
    kernel_step(Family::B, p)
}

/// Kernel distribution at rank `n`, starting from the rank-1 base.
pub fn kernel_pmf<S: Scalar>(family: Family, n: u32) -> Result<JointPmf<S>> {
    let mut p = JointPmf::base();
    for _ in 1..n {
        p = kernel_step(family, &p)?;
    }
    Ok(p)
}

/// One kernel step carried out on integer counts. The order grows by the
/// factor `n+2` (A) or `2(n+1)` (B), so each new count is a sum of
/// `count * numerator` divided by `n+2` (A) or `n+1` (B); the division must
/// be exact.
pub fn kernel_counts_step(family: Family, c: &JointCountMatrix) -> Result<JointCountMatrix> {
    let n = c.n;
    let d = n as usize + 2;
    let mut acc = vec![vec![BigInt::zero(); d]; d];
    for (i, row) in c.counts.iter().enumerate() {
        for (j, cnt) in row.iter().enumerate() {
            if cnt.is_zero() {
                continue;
            }
            let cnt = BigInt::from(cnt.clone());
            let (nums, _) = branch_numerators(family, n, i as i64, j as i64);
            for (k, &(di, dj)) in BRANCHES.iter().enumerate() {
                if nums[k] < 0 {
                    return Err(Error::Consistency(format!(
                        "negative type-{family} branch P{} at rank {n}, state ({i},{j})",
                        k + 1
                    )));
                }
                if nums[k] > 0 {
                    acc[i + di][j + dj] += &cnt * nums[k];
                }
            }
        }
    }
    let divisor = BigInt::from(match family {
        Family::A => n as i64 + 2,
        _ => n as i64 + 1,
    });
    let mut out = JointCountMatrix::zeros(n + 1);
    for (i, row) in acc.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            let (q, r) = v.div_rem(&divisor);
            if !r.is_zero() {
                return Err(Error::Consistency(format!(
                    "type-{family} kernel count at rank {}, ({i},{j}) is not integral",
                    n + 1
                )));
            }
            out.counts[i][j] = q.to_biguint().expect("nonnegative by construction");
        }
    }
    Ok(out)
}

/// Kernel-derived counts at rank `n >= 1`.
pub fn kernel_counts(family: Family, n: u32) -> Result<JointCountMatrix> {
    if n == 0 {
        return Err(Error::InvalidArgument("rank must be at least 1".into()));
    }
    let mut c = JointCountMatrix::base();
    for _ in 1..n {
        c = kernel_counts_step(family, &c)?;
    }
    Ok(c)
}

/// Two-sided type-B Eulerian numbers from the four-term coefficient
/// recursion
///
/// ```text
/// n B(n,i,j) = (n + i + j + 2ij)                  B(n-1, i,   j)
///            + (1 - i + (2n+1)j - 2ij)             B(n-1, i-1, j)
///            + (1 - j + (2n+1)i - 2ij)             B(n-1, i,   j-1)
///            + (n(2n+3) - (2n+1)i - (2n+1)j + 2ij) B(n-1, i-1, j-1)
/// ```
///
/// with out-of-range entries read as zero.
pub fn counts_recursion_b(n: u32) -> Result<JointCountMatrix> {
    if n == 0 {
        return Err(Error::InvalidArgument("rank must be at least 1".into()));
    }
    let mut prev = JointCountMatrix::base();
    for r in 2..=n {
        let rr = r as i64;
        let mut next = JointCountMatrix::zeros(r);
        let at = |i: i64, j: i64| -> BigInt {
            if i < 0 || j < 0 {
                BigInt::zero()
            } else {
                BigInt::from(prev.get(i as usize, j as usize))
            }
        };
        for i in 0..=rr {
            for j in 0..=rr {
                let terms = [
                    (rr + i + j + 2 * i * j, at(i, j)),
                    (1 - i + (2 * rr + 1) * j - 2 * i * j, at(i - 1, j)),
                    (1 - j + (2 * rr + 1) * i - 2 * i * j, at(i, j - 1)),
                    (rr * (2 * rr + 3) - (2 * rr + 1) * (i + j) + 2 * i * j, at(i - 1, j - 1)),
                ];
                let sum: BigInt = terms.iter().map(|(c, v)| v * *c).sum();
                let (q, rem) = sum.div_rem(&BigInt::from(rr));
                if !rem.is_zero() || q.is_negative() {
                    return Err(Error::Consistency(format!(
                        "B recursion at rank {r}, ({i},{j}): {sum} / {r} is not a count"
                    )));
                }
                next.counts[i as usize][j as usize] = q.to_biguint().unwrap();
            }
        }
        prev = next;
    }
    Ok(prev)
}

/// Tallies `(des, ides)` over all elements.
pub fn joint_counts_bruteforce(g: &GroupType, cap: u64) -> Result<JointCountMatrix> {
    let r = g.rank();
    let mut tally = vec![vec![0u64; r as usize + 1]; r as usize + 1];
    for w in enumerate_type(g, cap)? {
        tally[w.des() as usize][w.ides() as usize] += 1;
    }
    Ok(JointCountMatrix {
        n: r,
        counts: tally.into_iter().map(|row| row.into_iter().map(BigUint::from).collect()).collect(),
    })
}

/// `{(0,0): 1, (1,1): 2m-2, (2,2): 1}`.
pub fn dihedral_counts(m: u32) -> JointCountMatrix {
    let mut c = JointCountMatrix::zeros(2);
    c.counts[0][0] = BigUint::one();
    c.counts[1][1] = BigUint::from(2 * m - 2);
    c.counts[2][2] = BigUint::one();
    c
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JointSource {
    Kernel,
    Analytic,
    BruteForce,
    /// Type-B distribution standing in for a type-D group of the same rank.
    Surrogate,
}

/// Joint counts of one irreducible group with provenance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointDist {
    pub group: GroupType,
    pub counts: JointCountMatrix,
    pub exact: bool,
    pub source: JointSource,
}

impl JointDist {
    pub fn pmf<S: Scalar>(&self) -> JointPmf<S> {
        self.counts.to_pmf()
    }

    pub fn t_pmf<S: Scalar>(&self) -> IntegerPmf<S> {
        self.counts.t_pmf()
    }
}

/// Dispatches to the appropriate construction for `g`.
pub fn joint_dist(g: &GroupType, cfg: &Config) -> Result<JointDist> {
    let (counts, exact, source) = match g.family() {
        Family::A | Family::B => {
            if g.rank() > cfg.exact_rank_limit {
                return Err(Error::cap(format!("exact distribution of {g}"), g.rank(), cfg.exact_rank_limit));
            }
            (kernel_counts(g.family(), g.rank())?, true, JointSource::Kernel)
        }
        Family::I2 => (dihedral_counts(g.param()), true, JointSource::Analytic),
        Family::D => {
            let within = g.rank() <= cfg.d_bruteforce_max_rank
                && g.order().to_u64().is_some_and(|o| o <= cfg.enumeration_cap);
            if within {
                (joint_counts_bruteforce(g, cfg.enumeration_cap)?, true, JointSource::BruteForce)
            } else {
                if g.rank() > cfg.exact_rank_limit {
                    return Err(Error::cap(format!("surrogate distribution of {g}"), g.rank(), cfg.exact_rank_limit));
                }
                (kernel_counts(Family::B, g.rank())?, false, JointSource::Surrogate)
            }
        }
    };
    Ok(JointDist { group: *g, counts, exact, source })
}

/// Floating-point joint pmf at any rank, bypassing the exact rank limit.
/// D groups above the enumeration limit use the type-B surrogate.
pub fn joint_pmf_float(g: &GroupType, cfg: &Config) -> Result<(JointPmf<f64>, bool)> {
    match g.family() {
        Family::A | Family::B => Ok((kernel_pmf(g.family(), g.rank())?, true)),
        Family::I2 => Ok((dihedral_counts(g.param()).to_pmf(), true)),
        Family::D => {
            if g.rank() <= cfg.d_bruteforce_max_rank {
                let d = joint_dist(g, cfg)?;
                Ok((d.pmf(), d.exact))
            } else {
                Ok((kernel_pmf(Family::B, g.rank())?, false))
            }
        }
    }
}
