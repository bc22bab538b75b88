//! Moments of `D = des`, `D' = des o inv` and `T = D + D'` in types A and B,
//! plus group-level mean and variance of `T`.
//!
//! Every tabulated moment can be obtained three ways: a closed form in `n`,
//! a recursion on the centred mixed moments `E(U^k U'^l)` (with
//! `U = D - n/2`), and directly from the exact joint pmf. The three routes
//! share no code beyond the transition numerators.
//!
//! Type A, `E(D^3 D')`: the commonly quoted closed form does not match the
//! distribution; the formula used here is the one implied by the centred
//! moments, `(n^4 + n^3 + 8n^2 - 4n + 8)/16 - 1/(2(n+1))`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::binomial;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::cache::DistCache;
use crate::error::{Error, Result};
use crate::group::{Family, GroupType, ProductGroup};
use crate::joint::{branch_numerators, kernel_pmf, JointPmf};
use crate::pmf::IntegerPmf;
use crate::sample::{child_seed, sample_t_values};
use crate::scalar::{fmt_rational, Scalar};
use crate::Rational;

/// A tabulated moment. Mixed keys are normalized so that `k >= l`, which
/// is harmless because `(D, D')` is exchangeable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MomentKey {
    /// `E(U^k U'^l)`.
    UCentral { k: u32, l: u32 },
    /// `E(D^k D'^l)`.
    DRaw { k: u32, l: u32 },
    /// `E((T - E T)^d)`.
    TCentral(u32),
    /// `E(T^d)`.
    TRaw(u32),
}

impl MomentKey {
    pub fn u(k: u32, l: u32) -> Result<Self> {
        Self::mixed(k, l).map(|(k, l)| MomentKey::UCentral { k, l })
    }

    pub fn d(k: u32, l: u32) -> Result<Self> {
        Self::mixed(k, l).map(|(k, l)| MomentKey::DRaw { k, l })
    }

    pub fn t_central(d: u32) -> Result<Self> {
        Self::check_degree(d).map(|_| MomentKey::TCentral(d))
    }

    pub fn t_raw(d: u32) -> Result<Self> {
        Self::check_degree(d).map(|_| MomentKey::TRaw(d))
    }

    fn check_degree(d: u32) -> Result<()> {
        if (1..=4).contains(&d) {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("moment degree {d} outside 1..=4")))
        }
    }

    fn mixed(k: u32, l: u32) -> Result<(u32, u32)> {
        Self::check_degree(k + l)?;
        Ok((k.max(l), k.min(l)))
    }

    pub fn degree(&self) -> u32 {
        match *self {
            MomentKey::UCentral { k, l } | MomentKey::DRaw { k, l } => k + l,
            MomentKey::TCentral(d) | MomentKey::TRaw(d) => d,
        }
    }

    /// Every key that has a closed form, in table order.
    pub fn table() -> Vec<MomentKey> {
        const MIXED: [(u32, u32); 8] = [(1, 0), (2, 0), (1, 1), (3, 0), (2, 1), (3, 1), (4, 0), (2, 2)];
        let mut keys: Vec<MomentKey> = MIXED.iter().map(|&(k, l)| MomentKey::UCentral { k, l }).collect();
        keys.extend((2..=4).map(MomentKey::TCentral));
        keys.extend(MIXED.iter().map(|&(k, l)| MomentKey::DRaw { k, l }));
        keys.extend((1..=4).map(MomentKey::TRaw));
        keys
    }
}

impl fmt::Display for MomentKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            MomentKey::UCentral { k, l: 0 } => write!(f, "U{k}"),
            MomentKey::UCentral { k, l } => write!(f, "U{k}V{l}"),
            MomentKey::DRaw { k, l: 0 } => write!(f, "D{k}"),
            MomentKey::DRaw { k, l } => write!(f, "D{k}E{l}"),
            MomentKey::TCentral(d) => write!(f, "T{d}c"),
            MomentKey::TRaw(d) => write!(f, "T{d}"),
        }
    }
}

/// Accepts the display names (`U4`, `U2V2`, `D3E1`, `T4c`, `T2`) and the
/// aliases `varT` and `meanT`.
impl FromStr for MomentKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("unknown moment key `{s}`"));
        match s {
            "varT" => return MomentKey::t_central(2),
            "meanT" => return MomentKey::t_raw(1),
            _ => {}
        }
        let digits = |t: &str| t.parse::<u32>().map_err(|_| bad());
        if let Some(rest) = s.strip_prefix('T') {
            return match rest.strip_suffix('c') {
                Some(d) => MomentKey::t_central(digits(d)?),
                None => MomentKey::t_raw(digits(rest)?),
            };
        }
        let (head, second) = match s.chars().next() {
            Some('U') => ('U', 'V'),
            Some('D') => ('D', 'E'),
            _ => return Err(bad()),
        };
        let rest = &s[1..];
        let (k, l) = match rest.split_once(second) {
            Some((k, l)) => (digits(k)?, digits(l)?),
            None => (digits(rest)?, 0),
        };
        if head == 'U' {
            MomentKey::u(k, l)
        } else {
            MomentKey::d(k, l)
        }
    }
}

/// Smallest rank at which the closed forms are asserted.
pub fn threshold(family: Family) -> Result<u32> {
    match family {
        Family::A => Ok(3),
        Family::B => Ok(4),
        _ => Err(Error::InvalidArgument(format!("no moment tables for type {family}"))),
    }
}

/// Closed-form value of `key` for `family` at rank `n`.
pub fn closed_form<S: Scalar>(key: MomentKey, family: Family, n: u32) -> Result<S> {
    let th = threshold(family)?;
    if n < th {
        return Err(Error::InvalidArgument(format!("closed forms for type {family} need n >= {th}, got {n}")));
    }
    let q = |p: i64, d: i64| S::ratio(p, d);
    let x = S::from_int(n as i64);
    let x2 = x.clone() * x.clone();
    let x3 = x2.clone() * x.clone();
    let x4 = x3.clone() * x.clone();
    let poly = |c: &[i64]| c.iter().fold(S::zero(), |acc, &a| acc * x.clone() + S::from_int(a));
    let n = n as i64;
    use MomentKey::*;
    let v = match (family, key) {
        (Family::A, UCentral { k: 1, l: 0 } | UCentral { k: 3, l: 0 } | UCentral { k: 2, l: 1 } | TCentral(1) | TCentral(3)) => S::zero(),
        (Family::A, UCentral { k: 2, l: 0 }) => q(n + 2, 12),
        (Family::A, UCentral { k: 1, l: 1 }) => q(n, 2 * (n + 1)),
        (Family::A, UCentral { k: 3, l: 1 }) => q(n * (n + 2), 8 * (n + 1)),
        (Family::A, UCentral { k: 4, l: 0 }) => q((n + 2) * (5 * n + 8), 240),
        (Family::A, UCentral { k: 2, l: 2 }) => poly(&[1, 4, 76]) / q(144, 1) - q(2 * n + 1, 3 * n * (n + 1)),
        (Family::A, TCentral(2)) => q(n + 2, 6) + q(n, n + 1),
        (Family::A, TCentral(4)) => poly(&[5, 79, 258]) / q(60, 1) - q(5 * n + 2, n * (n + 1)),
        (Family::A, DRaw { k: 1, l: 0 }) => q(n, 2),
        (Family::A, DRaw { k: 2, l: 0 }) => q(n + 2, 12) + x2 / q(4, 1),
        (Family::A, DRaw { k: 1, l: 1 }) => x2 / q(4, 1) + q(n, 2 * n + 2),
        (Family::A, DRaw { k: 3, l: 0 }) => x.clone() * poly(&[1, 1, 2]) / q(8, 1),
        (Family::A, DRaw { k: 2, l: 1 }) => poly(&[3, 1, 14, -12]) / q(24, 1) + q(1, 2 * (n + 1)),
        (Family::A, DRaw { k: 3, l: 1 }) => poly(&[1, 1, 8, -4, 8]) / q(16, 1) - q(1, 2 * (n + 1)),
        (Family::A, DRaw { k: 4, l: 0 }) => poly(&[15, 30, 65, 18, 16]) / q(240, 1),
        (Family::A, DRaw { k: 2, l: 2 }) => poly(&[9, 6, 85, -68, 148]) / q(144, 1) - q(7 * n + 2, 6 * n * (n + 1)),
        (Family::A, TRaw(1)) => x.clone(),
        (Family::A, TRaw(2)) => x2 + q(n + 2, 6) + q(n, n + 1),
        (Family::A, TRaw(3)) => x3 + x2 / q(2, 1) + q(4 * n - 3, 1) + q(3, n + 1),
        (Family::A, TRaw(4)) => {
            x4 + x3 + q(97, 12) * x2 - q(281 * n, 60) + q(103, 10) - q(11 * n + 2, n * (n + 1))
        }

        (Family::B, UCentral { k: 1, l: 0 } | UCentral { k: 3, l: 0 } | UCentral { k: 2, l: 1 } | TCentral(1) | TCentral(3)) => S::zero(),
        (Family::B, UCentral { k: 2, l: 0 }) => q(n + 1, 12),
        (Family::B, UCentral { k: 1, l: 1 }) => q(1, 4),
        (Family::B, UCentral { k: 3, l: 1 }) => q(n + 1, 16),
        (Family::B, UCentral { k: 4, l: 0 }) => q((n + 1) * (5 * n + 3), 240),
        (Family::B, UCentral { k: 2, l: 2 }) => poly(&[1, 2, 19]) / q(144, 1) + q(2 * n - 1, 24 * n * (n - 1)),
        (Family::B, TCentral(2)) => q(n + 4, 6),
        (Family::B, TCentral(4)) => poly(&[5, 39, 79]) / q(60, 1) + q(2 * n - 1, 4 * n * (n - 1)),
        (Family::B, DRaw { k: 1, l: 0 }) => q(n, 2),
        (Family::B, DRaw { k: 2, l: 0 }) => q(n + 1, 12) + x2 / q(4, 1),
        (Family::B, DRaw { k: 1, l: 1 }) => poly(&[1, 0, 1]) / q(4, 1),
        (Family::B, DRaw { k: 3, l: 0 }) => x.clone() * poly(&[1, 1, 1]) / q(8, 1),
        (Family::B, DRaw { k: 2, l: 1 }) => x.clone() * poly(&[3, 1, 7]) / q(24, 1),
        (Family::B, DRaw { k: 3, l: 1 }) => poly(&[1, 1, 4, 1, 1]) / q(16, 1),
        (Family::B, DRaw { k: 4, l: 0 }) => poly(&[15, 30, 35, 8, 3]) / q(240, 1),
        (Family::B, DRaw { k: 2, l: 2 }) => poly(&[9, 6, 43, 2, 19]) / q(144, 1) + q(2 * n - 1, 24 * n * (n - 1)),
        (Family::B, TRaw(1)) => x.clone(),
        (Family::B, TRaw(2)) => x2 + q(n + 4, 6),
        (Family::B, TRaw(3)) => x.clone() * (x2 + q(n, 2) + q(2, 1)),
        (Family::B, TRaw(4)) => {
            x4 + x3 + q(49, 12) * x2 + q(13 * n, 20) + q(79, 60) + q(2 * n - 1, 4 * n * (n - 1))
        }
        _ => return Err(Error::InvalidArgument(format!("no closed form for {key} in type {family}"))),
    };
    Ok(v)
}

/// `E(U^4)`, the fourth central moment of `des`.
pub fn fourth_central_d<S: Scalar>(family: Family, n: u32) -> Result<S> {
    closed_form(MomentKey::UCentral { k: 4, l: 0 }, family, n)
}

/// Iterates the first-order recursion for `a[n] = E(U_n^4)` from
/// `a[3] = 23/48` (A) or `a[4] = 23/48` (B); yields `(n, a[n])`.
pub fn fourth_central_d_recursion<S: Scalar>(family: Family) -> Result<impl Iterator<Item = (u32, S)>> {
    let start = threshold(family)?;
    let step = move |n: u32, a: &S| -> S {
        let n = n as i64;
        match family {
            Family::A => S::ratio(6 * n + 11, 48) + S::ratio(n - 2, n + 2) * a.clone(),
            _ => S::ratio(6 * n + 5, 48) + S::ratio(n - 3, n + 1) * a.clone(),
        }
    };
    Ok(std::iter::successors(Some((start, S::ratio(23, 48))), move |(n, a)| Some((n + 1, step(*n, a)))))
}

/// `E((T - E T)^4)`.
pub fn fourth_central_t<S: Scalar>(family: Family, n: u32) -> Result<S> {
    closed_form(MomentKey::TCentral(4), family, n)
}

/// Bivariate polynomial in `(U, U')` with exact coefficients.
#[derive(Debug, Clone, Default)]
struct Bipoly(BTreeMap<(u32, u32), Rational>);

impl Bipoly {
    fn constant(c: Rational) -> Self {
        let mut p = Bipoly::default();
        p.add_term((0, 0), c);
        p
    }

    /// `c0 + c1 U` or `c0 + c1 U'`.
    fn linear(c0: Rational, c1: Rational, second: bool) -> Self {
        let mut p = Bipoly::constant(c0);
        p.add_term(if second { (0, 1) } else { (1, 0) }, c1);
        p
    }

    fn add_term(&mut self, e: (u32, u32), c: Rational) {
        if c.is_zero() {
            return;
        }
        let slot = self.0.entry(e).or_insert_with(Rational::zero);
        *slot += c;
        if slot.is_zero() {
            self.0.remove(&e);
        }
    }

    fn mul(&self, other: &Bipoly) -> Bipoly {
        let mut out = Bipoly::default();
        for (&(a, b), c) in &self.0 {
            for (&(x, y), d) in &other.0 {
                out.add_term((a + x, b + y), c * d);
            }
        }
        out
    }

    fn pow(&self, k: u32) -> Bipoly {
        (0..k).fold(Bipoly::constant(Rational::one()), |acc, _| acc.mul(self))
    }

    fn add(&mut self, other: &Bipoly) {
        for (&e, c) in &other.0 {
            self.add_term(e, c.clone());
        }
    }
}

fn rat(p: i64, q: i64) -> Rational {
    Rational::new(p.into(), q.into())
}

fn to_scalar<S: Scalar>(r: &Rational) -> S {
    S::from_big_ratio(r.numer(), r.denom())
}

/// Polynomial giving `E(U_{n+1}^k U'^l_{n+1} | U_n, U'_n)` times nothing
/// else: the branch weights written in the centred variables, times the
/// shifted powers `(U + e - 1/2)^k (U' + e' - 1/2)^l`.
fn transition_poly(family: Family, n: u32, k: u32, l: u32) -> Bipoly {
    // branch numerators are bilinear in (i, j); recover the coefficients
    let at = |i, j| branch_numerators(family, n, i, j);
    let (n00, den) = at(0, 0);
    let (n10, _) = at(1, 0);
    let (n01, _) = at(0, 1);
    let (n11, _) = at(1, 1);
    let half_n = rat(n as i64, 2);
    let mut total = Bipoly::default();
    for (b, &(ei, ej)) in [(0i64, 0i64), (1, 0), (0, 1), (1, 1)].iter().enumerate() {
        let c0 = n00[b];
        let ci = n10[b] - c0;
        let cj = n01[b] - c0;
        let cij = n11[b] - n10[b] - n01[b] + c0;
        // i = U + n/2, j = U' + n/2
        let i = Bipoly::linear(half_n.clone(), Rational::one(), false);
        let j = Bipoly::linear(half_n.clone(), Rational::one(), true);
        let mut w = Bipoly::constant(rat(c0, den));
        w.add(&i.mul(&Bipoly::constant(rat(ci, den))));
        w.add(&j.mul(&Bipoly::constant(rat(cj, den))));
        w.add(&i.mul(&j).mul(&Bipoly::constant(rat(cij, den))));
        let su = Bipoly::linear(rat(2 * ei - 1, 2), Rational::one(), false).pow(k);
        let sv = Bipoly::linear(rat(2 * ej - 1, 2), Rational::one(), true).pow(l);
        total.add(&w.mul(&su).mul(&sv));
    }
    total
}

/// All centred mixed moments `E(U^a U'^b)`, `a + b <= 4`, at rank `n`,
/// obtained by pushing the rank-1 values through the moment recursion.
pub fn mixed_central_moments_recursive<S: Scalar>(family: Family, n: u32) -> Result<BTreeMap<(u32, u32), S>> {
    if !matches!(family, Family::A | Family::B) {
        return Err(Error::InvalidArgument(format!("no moment recursion for type {family}")));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("rank must be positive".into()));
    }
    let exps: Vec<(u32, u32)> = (0..=4u32).flat_map(|d| (0..=d).map(move |a| (a, d - a))).collect();
    // rank 1: U = U' = +-1/2 with equal probability
    let mut m: BTreeMap<(u32, u32), S> = exps
        .iter()
        .map(|&(a, b)| {
            let v = if (a + b) % 2 == 0 { S::ratio(1, 1 << (a + b)) } else { S::zero() };
            ((a, b), v)
        })
        .collect();
    for r in 1..n {
        let mut next = BTreeMap::new();
        for &(a, b) in &exps {
            let poly = transition_poly(family, r, a, b);
            let mut acc = S::zero();
            for (&(x, y), c) in &poly.0 {
                if x + y > a + b {
                    return Err(Error::Consistency(format!(
                        "moment recursion for E(U^{a}U'^{b}) at rank {r} needs E(U^{x}U'^{y})"
                    )));
                }
                acc += to_scalar::<S>(c) * m[&(x, y)].clone();
            }
            next.insert((a, b), acc);
        }
        m = next;
    }
    Ok(m)
}

/// `E(U^k U'^l)` by recursion.
pub fn mixed_central_moment_recursive<S: Scalar>(family: Family, n: u32, k: u32, l: u32) -> Result<S> {
    let key = MomentKey::u(k, l)?;
    let MomentKey::UCentral { k, l } = key else { unreachable!() };
    Ok(mixed_central_moments_recursive::<S>(family, n)?[&(k, l)].clone())
}

fn binom(n: u32, k: u32) -> i64 {
    binomial(n as i64, k as i64)
}

/// Any tabulated key expressed through the centred mixed moments.
fn key_from_central<S: Scalar>(key: MomentKey, n: u32, m: &BTreeMap<(u32, u32), S>) -> S {
    let half = S::ratio(n as i64, 2);
    let get = |a: u32, b: u32| m[&(a.max(b), a.min(b))].clone();
    match key {
        MomentKey::UCentral { k, l } => get(k, l),
        MomentKey::DRaw { k, l } => {
            // (U + n/2)^k (U' + n/2)^l
            let mut acc = S::zero();
            for a in 0..=k {
                for b in 0..=l {
                    let c = S::from_int(binom(k, a) * binom(l, b)) * half.powi(k - a + l - b);
                    acc += c * get(a, b);
                }
            }
            acc
        }
        MomentKey::TCentral(d) | MomentKey::TRaw(d) => {
            let shift = if matches!(key, MomentKey::TRaw(_)) { S::from_int(n as i64) } else { S::zero() };
            // (U + U' + shift)^d
            let mut acc = S::zero();
            for s in 0..=d {
                let mut inner = S::zero();
                for a in 0..=s {
                    inner += S::from_int(binom(s, a)) * get(a, s - a);
                }
                acc += S::from_int(binom(d, s)) * shift.powi(d - s) * inner;
            }
            acc
        }
    }
}

/// `key` evaluated through the moment recursion.
pub fn recursive_value<S: Scalar>(key: MomentKey, family: Family, n: u32) -> Result<S> {
    let m = mixed_central_moments_recursive::<S>(family, n)?;
    Ok(key_from_central(key, n, &m))
}

/// `key` evaluated directly on a joint pmf of `(D, D')`.
pub fn pmf_value<S: Scalar>(key: MomentKey, p: &JointPmf<S>) -> S {
    let mean = p.expect(|i, _| S::from_int(i));
    let mean2 = p.expect(|_, j| S::from_int(j));
    match key {
        MomentKey::UCentral { k, l } => {
            p.expect(|i, j| (S::from_int(i) - mean.clone()).powi(k) * (S::from_int(j) - mean2.clone()).powi(l))
        }
        MomentKey::DRaw { k, l } => p.expect(|i, j| S::from_int(i).powi(k) * S::from_int(j).powi(l)),
        MomentKey::TCentral(d) => central_moment_from_pmf(&p.t_pmf(), d),
        MomentKey::TRaw(d) => p.t_pmf().raw_moment(d),
    }
}

/// `E((X - E X)^k)`.
pub fn central_moment_from_pmf<S: Scalar>(p: &IntegerPmf<S>, k: u32) -> S {
    p.central_moment(k)
}

/// Where a moment value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentSource {
    ClosedForm,
    Recursion,
    Pmf,
}

impl fmt::Display for MomentSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MomentSource::ClosedForm => "closed_form",
            MomentSource::Recursion => "recursion",
            MomentSource::Pmf => "pmf",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub family: Family,
    pub n: u32,
    pub key: String,
    pub value: String,
    pub source: MomentSource,
}

pub const MOMENT_CSV_HEADER: &str = "family,n,key,exact_value_numerator,exact_value_denominator,source";

impl MomentRow {
    pub fn new(family: Family, n: u32, key: MomentKey, value: &Rational, source: MomentSource) -> Self {
        MomentRow { family, n, key: key.to_string(), value: fmt_rational(value), source }
    }

    pub fn to_csv(&self) -> String {
        let (num, den) = self.value.split_once('/').unwrap_or((&self.value, "1"));
        format!("{},{},{},{},{},{}", self.family, self.n, self.key, num, den, self.source)
    }
}

/// The three values of each key at rank `n`, in key order. Closed forms
/// below the validity threshold are omitted.
pub fn moment_rows(family: Family, n: u32, keys: &[MomentKey]) -> Result<Vec<MomentRow>> {
    let rec = mixed_central_moments_recursive::<Rational>(family, n)?;
    let pmf = kernel_pmf::<Rational>(family, n)?;
    let mut rows = Vec::new();
    for &key in keys {
        if n >= threshold(family)? {
            let v = closed_form::<Rational>(key, family, n)?;
            rows.push(MomentRow::new(family, n, key, &v, MomentSource::ClosedForm));
        }
        rows.push(MomentRow::new(family, n, key, &key_from_central(key, n, &rec), MomentSource::Recursion));
        rows.push(MomentRow::new(family, n, key, &pmf_value(key, &pmf), MomentSource::Pmf));
    }
    Ok(rows)
}

/// `E(T) = rank`.
pub fn mean_t(g: &ProductGroup) -> u64 {
    g.rank()
}

/// Variance of `T`, exact unless some factor needed a Monte Carlo estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceT {
    #[serde(with = "rational_string")]
    pub value: Rational,
    pub exact: bool,
    /// Standard error of the estimate; zero when exact.
    pub std_error: f64,
}

impl VarianceT {
    pub fn exact(value: Rational) -> Self {
        VarianceT { value, exact: true, std_error: 0.0 }
    }

    pub fn to_f64(&self) -> f64 {
        self.value.to_f64_lossy()
    }
}

mod rational_string {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<Z: Serializer>(r: &Rational, s: Z) -> std::result::Result<Z::Ok, Z::Error> {
        s.serialize_str(&fmt_rational(r))
    }

    pub fn deserialize<'de, Z: Deserializer<'de>>(d: Z) -> std::result::Result<Rational, Z::Error> {
        let s = String::deserialize(d)?;
        crate::scalar::parse_rational(&s).ok_or_else(|| serde::de::Error::custom("bad rational"))
    }
}

/// Variance of `T` on one irreducible factor.
pub fn variance_t_factor(g: &GroupType, cache: &DistCache) -> Result<VarianceT> {
    let n = g.param() as i64;
    Ok(match g.family() {
        Family::A => VarianceT::exact(rat(n + 2, 6) + rat(n, n + 1)),
        Family::B => VarianceT::exact(rat(n + 4, 6)),
        Family::I2 => VarianceT::exact(rat(4, n)),
        Family::D => {
            let cfg = cache.config();
            let enumerable = g.rank() <= cfg.d_bruteforce_max_rank
                && g.order() <= num_bigint::BigUint::from(cfg.enumeration_cap);
            if enumerable {
                VarianceT::exact(cache.t_pmf_type(g)?.pmf.variance())
            } else {
                cache.memo_variance(g, || Ok(monte_carlo_variance(g, cfg.mc_samples, child_seed(cfg.seed, n as u64), cfg.chunk_size)))?
            }
        }
    })
}

/// Sample variance of `T` with the large-sample standard error
/// `sqrt((m4 - s^4) / N)`.
pub fn monte_carlo_variance(g: &GroupType, samples: u64, seed: u64, chunk_size: u64) -> VarianceT {
    let ts = sample_t_values(&ProductGroup::single(*g), samples, seed, chunk_size);
    let n = ts.len() as f64;
    let mean = ts.iter().map(|&t| t as f64).sum::<f64>() / n;
    let (mut m2, mut m4) = (0.0, 0.0);
    for &t in &ts {
        let d = t as f64 - mean;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    let var = m2 / (n - 1.0);
    let m4 = m4 / n;
    let se = ((m4 - var * var).max(0.0) / n).sqrt();
    VarianceT {
        value: Rational::from_float(var).unwrap_or_else(Rational::zero),
        exact: false,
        std_error: se,
    }
}

/// `V(T)` on a product, by additivity over factors.
pub fn variance_t(g: &ProductGroup, cache: &DistCache) -> Result<VarianceT> {
    let mut value = Rational::zero();
    let mut exact = true;
    let mut se2 = 0.0;
    for f in &g.factors {
        let v = variance_t_factor(f, cache)?;
        value += v.value;
        exact &= v.exact;
        se2 += v.std_error * v.std_error;
    }
    Ok(VarianceT { value, exact, std_error: se2.sqrt() })
}

/// Convenience for tests and reports: `num/den` as a rational.
pub fn rational(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::parse_group_spec;

    #[test]
    fn key_names_round_trip() {
        for key in MomentKey::table() {
            assert_eq!(key.to_string().parse::<MomentKey>().unwrap(), key);
        }
        assert_eq!("varT".parse::<MomentKey>().unwrap(), MomentKey::TCentral(2));
        assert_eq!("U1V3".parse::<MomentKey>().unwrap(), MomentKey::UCentral { k: 3, l: 1 });
        assert!("U5".parse::<MomentKey>().is_err());
        assert!("X2".parse::<MomentKey>().is_err());
    }

    #[test]
    fn tabulated_examples() {
        let u2 = MomentKey::u(2, 0).unwrap();
        assert_eq!(closed_form::<Rational>(u2, Family::A, 7).unwrap(), rational(9, 12));
        assert_eq!(closed_form::<Rational>(MomentKey::u(1, 1).unwrap(), Family::B, 9).unwrap(), rational(1, 4));
        assert_eq!(closed_form::<Rational>(MomentKey::u(3, 1).unwrap(), Family::B, 5).unwrap(), rational(6, 16));
        assert!(closed_form::<Rational>(u2, Family::A, 2).is_err());
        assert!(closed_form::<Rational>(u2, Family::D, 5).is_err());
    }

    #[test]
    fn fourth_moment_start_values() {
        assert_eq!(fourth_central_d::<Rational>(Family::A, 3).unwrap(), rational(23, 48));
        assert_eq!(fourth_central_d::<Rational>(Family::B, 4).unwrap(), rational(23, 48));
        assert_eq!(fourth_central_d::<Rational>(Family::A, 5).unwrap(), rational(231, 240));
        assert_eq!(fourth_central_t::<Rational>(Family::A, 3).unwrap(), rational(91, 12));
        assert_eq!(fourth_central_t::<Rational>(Family::B, 4).unwrap(), rational(259, 48));
    }

    #[test]
    fn fourth_moment_recursion_tracks_closed_form() {
        for fam in [Family::A, Family::B] {
            for (n, a) in fourth_central_d_recursion::<Rational>(fam).unwrap().take(28) {
                assert_eq!(a, fourth_central_d::<Rational>(fam, n).unwrap(), "{fam} {n}");
            }
        }
    }

    #[test]
    fn recursion_examples() {
        for n in 3..12 {
            let v: Rational = mixed_central_moment_recursive(Family::A, n, 1, 1).unwrap();
            assert_eq!(v, rational(n as i64, 2 * (n as i64 + 1)));
            let z: Rational = mixed_central_moment_recursive(Family::A, n, 1, 0).unwrap();
            assert!(z.is_zero());
        }
        let n = 9i64;
        let v: Rational = mixed_central_moment_recursive(Family::B, 9, 2, 2).unwrap();
        assert_eq!(v, rational(n * n + 2 * n + 19, 144) + rational(2 * n - 1, 24 * n * (n - 1)));
    }

    #[test]
    fn three_routes_agree_at_small_rank() {
        for fam in [Family::A, Family::B] {
            let th = threshold(fam).unwrap();
            for n in th..th + 4 {
                let pmf = kernel_pmf::<Rational>(fam, n).unwrap();
                for key in MomentKey::table() {
                    let c: Rational = closed_form(key, fam, n).unwrap();
                    assert_eq!(recursive_value::<Rational>(key, fam, n).unwrap(), c, "{fam} {n} {key}");
                    assert_eq!(pmf_value(key, &pmf), c, "{fam} {n} {key}");
                }
            }
        }
    }

    #[test]
    fn f64_recursion_is_close() {
        let exact: Rational = recursive_value(MomentKey::TCentral(4), Family::A, 40).unwrap();
        let float: f64 = recursive_value(MomentKey::TCentral(4), Family::A, 40).unwrap();
        assert!((exact.to_f64_lossy() - float).abs() < 1e-9 * float.abs());
    }

    #[test]
    fn group_variances() {
        let cache = DistCache::default();
        let v = |s: &str| variance_t(&parse_group_spec(s).unwrap(), &cache).unwrap();
        assert_eq!(v("I2:3").value, rational(4, 3));
        assert_eq!(v("A:3 x I2:4").value, rational(31, 12));
        assert_eq!(mean_t(&parse_group_spec("B:4 x I2:5").unwrap()), 6);
        let d = v("D:5");
        assert!(d.exact);
        assert_eq!(d.value, rational(43, 24));
    }

    #[test]
    fn large_d_variance_is_flagged_estimate() {
        let cfg = crate::Config { mc_samples: 20_000, ..Default::default() };
        let cache = DistCache::new(cfg);
        let v = variance_t(&parse_group_spec("D:12 x A:2").unwrap(), &cache).unwrap();
        assert!(!v.exact);
        assert!(v.std_error > 0.0);
        // same order as the type-B value (12+4)/6 plus A:2's 4/3 + 2/3... loosely
        let approx = v.to_f64();
        assert!(approx > 2.0 && approx < 7.0, "{approx}");
    }

    #[test]
    fn csv_rows_have_fixed_columns() {
        let rows = moment_rows(Family::B, 4, &[MomentKey::TCentral(4)]).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].to_csv(), "B,4,T4c,259,48,closed_form");
        assert!(rows.iter().all(|r| r.value == "259/48"));
    }
}
