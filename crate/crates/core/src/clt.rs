//! Central-limit diagnostics for sequences of groups.
//!
//! For `W_n = W_{n,1} x ... x W_{n,k_n}` the statistic splits as a row of
//! independent components `X_{n,i} = T_{n,i} - E(T_{n,i})`. Everything
//! here is a finite-n diagnostic; nothing in this module proves or refutes
//! a limit theorem.

use std::cmp::Reverse;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cache::DistCache;
use crate::error::{Error, Result};
use crate::group::{Family, GroupType, ProductGroup};
use crate::moments::{variance_t, variance_t_factor};
use crate::normal::phi;
use crate::pmf::IntegerPmf;
use crate::sample::sample_t_values;
use crate::scalar::{fmt_rational, Scalar};
use crate::sequence::SequenceSpec;
use crate::Rational;

/// `(G, I)`: the non-dihedral and the dihedral factors, order preserved.
pub fn decompose_dihedral(g: &ProductGroup) -> (ProductGroup, ProductGroup) {
    let (dihedral, rest): (Vec<GroupType>, Vec<GroupType>) =
        g.factors.iter().partition(|f| f.family() == Family::I2);
    (ProductGroup::new(rest), ProductGroup::new(dihedral))
}

/// `rk(G) + sum 1/m` over the dihedral factors `I2(m)`.
pub fn criterion_three(g: &ProductGroup) -> Rational {
    g.factors.iter().fold(Rational::zero(), |acc, f| match f.family() {
        Family::I2 => acc + Rational::new(BigInt::one(), f.param().into()),
        _ => acc + Rational::from_integer(f.rank().into()),
    })
}

/// Factors sorted by non-increasing rank and split at the first
/// `delta`-small one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaSplit {
    /// Leading factors that are not `delta`-small.
    pub large: ProductGroup,
    /// The `delta`-small remainder.
    pub small: ProductGroup,
    pub m_n: usize,
    /// Enclosure of `rk(W)^(1-delta)`.
    pub threshold: (f64, f64),
    /// Factors whose classification needed the exact comparison.
    pub exact_comparisons: usize,
}

/// Largest denominator of `delta` for which an enclosure straddling a rank
/// is resolved exactly by comparing `r^q` with `R^(q-p)`.
pub const EXACT_TIE_MAX_DENOMINATOR: u64 = 4096;

/// Whether a factor of rank `r` is `delta`-small in a group of rank `total`,
/// i.e. `r <= total^(1-delta)`. The power is enclosed in an interval first;
/// only when the interval contains `r` is the inequality decided exactly
/// (`r^q <= total^(q-p)` for `delta = p/q`). If that is too expensive the
/// factor counts as not small.
fn is_delta_small(r: u64, total: u64, delta: &Rational, lo: f64, hi: f64) -> (bool, bool) {
    let rf = r as f64;
    if rf <= lo {
        return (true, false);
    }
    if rf > hi {
        return (false, false);
    }
    let (p, q) = (delta.numer(), delta.denom());
    match (p.to_u64(), q.to_u64()) {
        (Some(p), Some(q)) if q <= EXACT_TIE_MAX_DENOMINATOR => {
            let lhs = num_traits::pow(BigInt::from(r), q as usize);
            let rhs = num_traits::pow(BigInt::from(total), (q - p) as usize);
            (lhs <= rhs, true)
        }
        _ => (false, true),
    }
}

fn power_enclosure(total: u64, exponent: f64) -> (f64, f64) {
    if total <= 1 {
        return (total as f64, total as f64);
    }
    let v = ((total as f64).ln() * exponent).exp();
    // a few ulps for ln/exp plus the rounding of the exponent itself
    let slack = v * 1e-12 + f64::EPSILON;
    (v - slack, v + slack)
}

/// Splits `g` into its non-`delta`-small head and `delta`-small tail.
pub fn delta_small_split(g: &ProductGroup, delta: &Rational) -> Result<DeltaSplit> {
    if !delta.is_positive() || *delta >= Rational::one() {
        return Err(Error::InvalidArgument(format!("delta must lie in (0, 1), got {}", fmt_rational(delta))));
    }
    let total = g.rank();
    let mut sorted = g.factors.clone();
    sorted.sort_by_key(|f| Reverse(f.rank()));
    let exponent = (Rational::one() - delta).to_f64_lossy();
    let (lo, hi) = power_enclosure(total, exponent);
    let mut m_n = sorted.len();
    let mut exact_comparisons = 0;
    for (i, f) in sorted.iter().enumerate() {
        let (small, exact) = is_delta_small(f.rank() as u64, total, delta, lo, hi);
        exact_comparisons += exact as usize;
        if small && m_n == sorted.len() {
            m_n = i;
        }
    }
    let small = sorted.split_off(m_n);
    Ok(DeltaSplit {
        large: ProductGroup::new(sorted),
        small: ProductGroup::new(small),
        m_n,
        threshold: (lo, hi),
        exact_comparisons,
    })
}

/// One distinct factor type of a row with its centred distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct RowComponent<S> {
    pub group: GroupType,
    pub count: u64,
    /// Distribution of `T - E(T)` on the factor.
    pub pmf: IntegerPmf<S>,
    pub variance: S,
    pub exact: bool,
}

/// The row `X_{n,1}, ..., X_{n,k_n}`, identical factors merged.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangularRow<S> {
    pub components: Vec<RowComponent<S>>,
    pub s2: S,
}

fn distinct_with_counts(g: &ProductGroup) -> Vec<(GroupType, u64)> {
    let mut out: Vec<(GroupType, u64)> = Vec::new();
    for f in &g.factors {
        match out.iter_mut().find(|(h, _)| h == f) {
            Some((_, c)) => *c += 1,
            None => out.push((*f, 1)),
        }
    }
    out
}

impl<S: Scalar> TriangularRow<S> {
    fn build(g: &ProductGroup, pmf_of: impl Fn(&GroupType) -> Result<(IntegerPmf<S>, bool)>) -> Result<Self> {
        let mut components = Vec::new();
        let mut s2 = S::zero();
        for (group, count) in distinct_with_counts(g) {
            let (pmf, exact) = pmf_of(&group)?;
            let pmf = pmf.shift(-(group.rank() as i64));
            let variance = pmf.central_moment(2);
            s2 += variance.clone() * S::from_int(count as i64);
            components.push(RowComponent { group, count, pmf, variance, exact });
        }
        Ok(TriangularRow { components, s2 })
    }

    /// `k_n`, counting multiplicities.
    pub fn len(&self) -> u64 {
        self.components.iter().map(|c| c.count).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn exact(&self) -> bool {
        S::EXACT && self.components.iter().all(|c| c.exact)
    }
}

impl TriangularRow<Rational> {
    pub fn exact_row(g: &ProductGroup, cache: &DistCache) -> Result<Self> {
        Self::build(g, |f| cache.t_pmf_type(f).map(|t| (t.pmf, t.exact)))
    }
}

impl TriangularRow<f64> {
    pub fn float_row(g: &ProductGroup, cache: &DistCache) -> Result<Self> {
        Self::build(g, |f| cache.t_pmf_float_type(f).map(|t| (t.pmf, t.exact)))
    }
}

fn nondegenerate<S: Scalar>(row: &TriangularRow<S>) -> Result<()> {
    if row.s2.is_zero() {
        return Err(Error::Degenerate("row variance is zero".into()));
    }
    Ok(())
}

/// `(1/s^2) sum_i E(X_i^2 ; |X_i| > eps s)`. The indicator is evaluated as
/// `x^2 > eps^2 s^2`, which keeps the comparison exact for rationals.
pub fn lindeberg_sum<S: Scalar>(row: &TriangularRow<S>, eps: &S) -> Result<S> {
    nondegenerate(row)?;
    if !eps.is_positive() {
        return Err(Error::InvalidArgument("epsilon must be positive".into()));
    }
    let cut = eps.clone() * eps.clone() * row.s2.clone();
    let mut acc = S::zero();
    for c in &row.components {
        let mut part = S::zero();
        for (x, p) in c.pmf.support() {
            let x2 = S::from_int(x * x);
            if x2 > cut {
                part += x2 * p.clone();
            }
        }
        acc += part * S::from_int(c.count as i64);
    }
    Ok(acc / row.s2.clone())
}

/// `max_i s_{n,i}^2 / s_n^2`.
pub fn max_ratio<S: Scalar>(row: &TriangularRow<S>) -> Result<S> {
    nondegenerate(row)?;
    let top = row
        .components
        .iter()
        .map(|c| c.variance.clone())
        .fold(S::zero(), |a, b| if b > a { b } else { a });
    Ok(top / row.s2.clone())
}

/// Kolmogorov distance between a standardized lattice law and the normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsDistance {
    /// `sup_x |F(x) - Phi(x)|`.
    pub plain: f64,
    /// Largest gap between `Phi` and the midpoint of the two one-sided
    /// limits of `F` at the atoms.
    pub corrected: f64,
}

fn ks_against(probs: impl Iterator<Item = (i64, f64, f64)>, mean: f64, sd: f64) -> KsDistance {
    let mut plain: f64 = 0.0;
    let mut corrected: f64 = 0.0;
    for (x, left, right) in probs {
        let f = phi((x as f64 - mean) / sd);
        plain = plain.max((left - f).abs()).max((right - f).abs());
        corrected = corrected.max((0.5 * (left + right) - f).abs());
    }
    KsDistance { plain, corrected }
}

/// Distance of the standardized exact law, using its exact mean and
/// standard deviation. Only atoms with positive mass are jump points.
pub fn ks_distance_exact<S: Scalar>(p: &IntegerPmf<S>) -> Result<KsDistance> {
    let var = p.variance();
    if !var.is_positive() {
        return Err(Error::Degenerate("zero variance".into()));
    }
    let mean = p.mean().to_f64_lossy();
    let sd = var.to_f64_lossy().sqrt();
    let jumps = p.cdf_jumps();
    let atoms = jumps
        .into_iter()
        .zip(p.probs.iter())
        .filter(|(_, q)| !q.is_zero())
        .map(|((x, l, r), _)| (x, l.to_f64_lossy(), r.to_f64_lossy()));
    Ok(ks_against(atoms, mean, sd))
}

/// Same distance for the empirical law of `samples` draws, standardized by
/// the exact mean `rank` and the variance of `T` (which may itself be an
/// estimate, see [`variance_t`]).
pub fn ks_distance_mc(
    g: &ProductGroup,
    samples: u64,
    seed: u64,
    chunk_size: u64,
    cache: &DistCache,
) -> Result<KsDistance> {
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let var = variance_t(g, cache)?.to_f64();
    if var <= 0.0 {
        return Err(Error::Degenerate("zero variance".into()));
    }
    let ts = sample_t_values(g, samples, seed, chunk_size);
    let mut tally = vec![0u64; 2 * g.rank() as usize + 1];
    for t in ts {
        tally[t as usize] += 1;
    }
    let n = samples as f64;
    let mut acc = 0u64;
    let atoms = tally.iter().enumerate().filter(|(_, &c)| c > 0).map(|(x, &c)| {
        let left = acc as f64 / n;
        acc += c;
        (x as i64, left, acc as f64 / n)
    });
    let atoms: Vec<_> = atoms.collect();
    Ok(ks_against(atoms.into_iter(), g.rank() as f64, var.sqrt()))
}

/// `sup_n sum_{i=k}^{m_n} V(T_{n,i}) / V(T_{M_n})` for each `k`, where the
/// sum runs over the non-small head sorted by non-increasing rank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub k: usize,
    pub sup: f64,
    pub sup_exact: String,
    pub argmax_n: u64,
    pub exact: bool,
}

pub fn well_behaved_profile(
    spec: &SequenceSpec,
    delta: &Rational,
    n_list: &[u64],
    k_list: &[usize],
    cache: &DistCache,
) -> Result<Vec<ProfileRow>> {
    let mut per_n: Vec<(u64, Vec<Rational>, bool)> = Vec::new();
    for &n in n_list {
        let inst = spec.instantiate(n)?;
        let split = delta_small_split(&inst.group, delta)?;
        let mut exact = true;
        let mut vars = Vec::with_capacity(split.large.factors.len());
        for f in &split.large.factors {
            let v = variance_t_factor(f, cache)?;
            exact &= v.exact;
            vars.push(v.value);
        }
        per_n.push((n, vars, exact));
    }
    Ok(k_list
        .iter()
        .map(|&k| {
            let mut best = (Rational::zero(), n_list.first().copied().unwrap_or(0));
            let mut exact = true;
            for (n, vars, ex) in &per_n {
                exact &= ex;
                let total: Rational = vars.iter().sum();
                if total.is_zero() {
                    continue;
                }
                let tail: Rational = vars.iter().skip(k.saturating_sub(1)).sum();
                let ratio = tail / total;
                if ratio > best.0 {
                    best = (ratio, *n);
                }
            }
            ProfileRow { k, sup: best.0.to_f64_lossy(), sup_exact: fmt_rational(&best.0), argmax_n: best.1, exact }
        })
        .collect())
}

/// One `n` of a trend analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NRecord {
    pub n: u64,
    pub group: String,
    pub rank: u64,
    pub k_n: usize,
    /// Component ranks, non-increasing.
    pub component_ranks: Vec<u32>,
    /// Aligned with `component_ranks`.
    pub delta_small: Vec<bool>,
    pub m_n: usize,
    pub variance: String,
    pub variance_large: String,
    pub variance_small: String,
    pub variance_exact: bool,
    pub criterion: String,
    pub criterion_value: f64,
    pub max_ratio: f64,
    /// `(eps, sum)` pairs on the grid.
    pub lindeberg: Vec<(f64, f64)>,
    pub ks_plain: f64,
    pub ks_corrected: f64,
    /// `false` when any distribution used a type-B stand-in.
    pub exact: bool,
    pub notes: Vec<String>,
}

/// Per-n outcome; failures are recorded instead of aborting the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NOutcome {
    Ok(Box<NRecord>),
    Failed { n: u64, error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub sequence: String,
    pub delta: String,
    pub eps_grid: Vec<String>,
    pub records: Vec<NOutcome>,
    /// Least-squares slope of the criterion against `ln n`.
    pub criterion_slope: Option<f64>,
    pub verdict: String,
}

pub const DEFAULT_DELTA: (i64, i64) = (1, 3);
pub const DEFAULT_EPS_GRID: [(i64, i64); 4] = [(1, 10), (1, 4), (1, 2), (1, 1)];
pub const DEFAULT_N_LIST: [u64; 5] = [10, 20, 50, 100, 200];

pub fn default_delta() -> Rational {
    Rational::new(DEFAULT_DELTA.0.into(), DEFAULT_DELTA.1.into())
}

pub fn default_eps_grid() -> Vec<Rational> {
    DEFAULT_EPS_GRID.iter().map(|&(p, q)| Rational::new(p.into(), q.into())).collect()
}

/// Roughly geometric integers from `lo` to `hi` inclusive, deduplicated.
pub fn geometric_n_list(lo: u64, hi: u64, count: usize) -> Vec<u64> {
    if count <= 1 || lo >= hi {
        return vec![lo.max(1)];
    }
    let (a, b) = ((lo.max(1) as f64).ln(), (hi as f64).ln());
    let mut out: Vec<u64> = (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp().round() as u64)
        .collect();
    out.dedup();
    out
}

/// Slope thresholds of the verdict. Harmonic growth has slope 1 against
/// `ln n`; convergent series flatten out well below the lower threshold.
pub const GROWTH_SLOPE: f64 = 0.5;
pub const BOUNDED_SLOPE: f64 = 0.1;

fn analyse_n(spec: &SequenceSpec, n: u64, delta: &Rational, eps_grid: &[Rational], cache: &DistCache) -> Result<NRecord> {
    let inst = spec.instantiate(n)?;
    let g = &inst.group;
    let split = delta_small_split(g, delta)?;
    let var_large = variance_t(&split.large, cache)?;
    let var_small = variance_t(&split.small, cache)?;
    let row = TriangularRow::float_row(g, cache)?;
    let lindeberg = eps_grid
        .iter()
        .map(|e| {
            let e = e.to_f64_lossy();
            lindeberg_sum(&row, &e).map(|v| (e, v))
        })
        .collect::<Result<Vec<_>>>()?;
    let ks = ks_distance_exact(&cache.t_pmf_float(g)?.pmf)?;
    let criterion = criterion_three(g);
    let mut component_ranks: Vec<u32> = g.factors.iter().map(GroupType::rank).collect();
    component_ranks.sort_by_key(|&r| Reverse(r));
    let delta_small = (0..component_ranks.len()).map(|i| i >= split.m_n).collect();
    let mut notes = inst.notes.clone();
    if split.exact_comparisons > 0 {
        notes.push(format!("{} delta-small comparisons decided exactly", split.exact_comparisons));
    }
    Ok(NRecord {
        n,
        group: g.to_string(),
        rank: g.rank(),
        k_n: g.factors.len(),
        component_ranks,
        delta_small,
        m_n: split.m_n,
        variance: fmt_rational(&(var_large.value.clone() + var_small.value.clone())),
        variance_large: fmt_rational(&var_large.value),
        variance_small: fmt_rational(&var_small.value),
        variance_exact: var_large.exact && var_small.exact,
        criterion_value: criterion.to_f64_lossy(),
        criterion: fmt_rational(&criterion),
        max_ratio: max_ratio(&row)?,
        lindeberg,
        ks_plain: ks.plain,
        ks_corrected: ks.corrected,
        exact: row.components.iter().all(|c| c.exact),
        notes,
    })
}

fn slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Full per-n report. The per-n analyses run in parallel; the records are
/// returned in the order of `n_list`.
pub fn clt_trend(
    spec: &SequenceSpec,
    n_list: &[u64],
    delta: &Rational,
    eps_grid: &[Rational],
    cache: &DistCache,
) -> Result<AnalysisReport> {
    if !delta.is_positive() || *delta >= Rational::one() {
        return Err(Error::InvalidArgument(format!("delta must lie in (0, 1), got {}", fmt_rational(delta))));
    }
    let records: Vec<NOutcome> = n_list
        .par_iter()
        .map(|&n| match analyse_n(spec, n, delta, eps_grid, cache) {
            Ok(r) => NOutcome::Ok(Box::new(r)),
            Err(e) => NOutcome::Failed { n, error: e.to_string() },
        })
        .collect();
    let points: Vec<(f64, f64)> = records
        .iter()
        .filter_map(|r| match r {
            NOutcome::Ok(r) => Some(((r.n as f64).ln(), r.criterion_value)),
            NOutcome::Failed { .. } => None,
        })
        .collect();
    let criterion_slope = slope(&points);
    let verdict = match criterion_slope {
        Some(s) if s >= GROWTH_SLOPE => "criterion grows: CLT expected (diagnostic only, not a proof)",
        Some(s) if s < BOUNDED_SLOPE => "criterion bounded: no CLT expected (diagnostic only, not a proof)",
        Some(_) => "criterion trend inconclusive on this range (diagnostic only)",
        None => "too few successful points for a trend",
    };
    Ok(AnalysisReport {
        sequence: spec.to_string(),
        delta: fmt_rational(delta),
        eps_grid: eps_grid.iter().map(fmt_rational).collect(),
        records,
        criterion_slope,
        verdict: verdict.to_string(),
    })
}

impl AnalysisReport {
    /// One line per `n`. The Lindeberg columns are named `lindeberg_<eps>`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "n,group_rank,k_n,m_n,criterion,criterion_value,variance,variance_exact,max_ratio",
        );
        for e in &self.eps_grid {
            write!(out, ",lindeberg_{e}").unwrap();
        }
        out.push_str(",ks_plain,ks_corrected,exact,error\n");
        for r in &self.records {
            match r {
                NOutcome::Ok(r) => {
                    write!(
                        out,
                        "{},{},{},{},{},{},{},{},{}",
                        r.n, r.rank, r.k_n, r.m_n, r.criterion, r.criterion_value, r.variance, r.variance_exact, r.max_ratio
                    )
                    .unwrap();
                    for (_, v) in &r.lindeberg {
                        write!(out, ",{v}").unwrap();
                    }
                    writeln!(out, ",{},{},{},", r.ks_plain, r.ks_corrected, r.exact).unwrap();
                }
                NOutcome::Failed { n, error } => {
                    write!(out, "{n},,,,,,,,").unwrap();
                    for _ in &self.eps_grid {
                        out.push(',');
                    }
                    writeln!(out, ",,,\"{}\"", error.replace('"', "'")).unwrap();
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::parse_group_spec;
    use crate::sequence::parse_sequence_spec;

    fn g(s: &str) -> ProductGroup {
        parse_group_spec(s).unwrap()
    }

    fn r(p: i64, q: i64) -> Rational {
        Rational::new(p.into(), q.into())
    }

    #[test]
    fn dihedral_decomposition() {
        let (big, dih) = decompose_dihedral(&g("A:3 x I2:4 x B:2"));
        assert_eq!(big.to_string(), "A:3 x B:2");
        assert_eq!(dih.to_string(), "I2:4");
        let (big, _) = decompose_dihedral(&g("I2:3 x I2:7"));
        assert!(big.is_empty());
    }

    #[test]
    fn criterion_values() {
        assert_eq!(criterion_three(&g("A:10")), r(10, 1));
        let harmonic: ProductGroup = ProductGroup::new((3..=10).map(|m| GroupType::i2(m).unwrap()).collect());
        let oracle = (3..=10).fold(r(0, 1), |acc, i| acc + r(1, i));
        assert_eq!(oracle, r(3601, 2520));
        assert_eq!(criterion_three(&harmonic), oracle);
        assert_eq!(criterion_three(&g("I2:7^5")), r(5, 7));
    }

    #[test]
    fn delta_split_example() {
        let s = delta_small_split(&g("B:100 x A:3^20"), &r(1, 2)).unwrap();
        assert_eq!(s.m_n, 1);
        assert_eq!(s.large.to_string(), "B:100");
        assert_eq!(s.small.factors.len(), 20);
        assert!((s.threshold.0 - 160f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn delta_split_exact_tie() {
        // rank 16 total, threshold 16^(1/2) = 4 exactly: the A:4 factor is small
        let s = delta_small_split(&g("A:4 x A:4 x A:4 x A:4"), &r(1, 2)).unwrap();
        assert_eq!(s.m_n, 0);
        assert!(s.exact_comparisons >= 1);
        let s = delta_small_split(&g("A:5 x A:4 x A:4 x A:3"), &r(1, 2)).unwrap();
        assert_eq!(s.m_n, 1);
        assert!(delta_small_split(&g("A:3"), &r(0, 1)).is_err());
        assert!(delta_small_split(&g("A:3"), &r(1, 1)).is_err());
    }

    #[test]
    fn lindeberg_vanishes_for_bounded_components() {
        let cache = DistCache::default();
        // 40 dihedral factors I2(5): s^2 = 40 * 4/5 = 32, s ~ 5.66 > 4/eps at eps = 1
        let row = TriangularRow::exact_row(&g("I2:5^40"), &cache).unwrap();
        assert_eq!(row.s2, r(32, 1));
        assert!(lindeberg_sum(&row, &r(1, 1)).unwrap().is_zero());
        assert!(lindeberg_sum(&row, &r(1, 10)).unwrap() > r(0, 1));
    }

    #[test]
    fn max_ratio_of_equal_components() {
        let cache = DistCache::default();
        for k in 1..6 {
            let row = TriangularRow::exact_row(&ProductGroup::new(vec![GroupType::a(7).unwrap(); k]), &cache).unwrap();
            assert_eq!(max_ratio(&row).unwrap(), r(1, k as i64));
            assert_eq!(row.len(), k as u64);
        }
    }

    #[test]
    fn ks_rejects_point_masses() {
        assert!(ks_distance_exact(&IntegerPmf::<Rational>::point_mass(3)).is_err());
    }

    #[test]
    fn ks_of_symmetric_two_point_law() {
        // +-1 with equal mass: F jumps by 1/2 at z = -1 and 1
        let p = IntegerPmf::new(-1, vec![r(1, 2), r(0, 1), r(1, 2)]);
        let ks = ks_distance_exact(&p).unwrap();
        assert!((ks.plain - (phi(1.0) - 0.5)).abs() < 1e-15);
        assert!((ks.corrected - (phi(-1.0) - 0.25).abs()).abs() < 1e-15);
    }

    #[test]
    fn halving_profile_decays() {
        let spec = parse_sequence_spec(
            r#"{"terms":[{"family":"A","rank":"ceil(n/2^i)","index":{"var":"i","from":"1","to":"ceil(log2(n))"}}]}"#,
        )
        .unwrap();
        let cache = DistCache::default();
        let ns: Vec<u64> = (6..=10).map(|e| 1u64 << e).collect();
        let prof = well_behaved_profile(&spec, &r(1, 3), &ns, &[1, 2, 3, 4], &cache).unwrap();
        assert_eq!(prof[0].sup, 1.0);
        for w in prof.windows(2) {
            assert!(w[1].sup <= 0.6 * w[0].sup + 1e-12, "{prof:?}");
        }
    }

    #[test]
    fn plain_sequence_profile_is_zero_past_one() {
        let spec = parse_sequence_spec(r#"{"terms":[{"family":"A","rank":"n"}]}"#).unwrap();
        let prof = well_behaved_profile(&spec, &r(1, 3), &[5, 10, 40], &[1, 2, 3], &DistCache::default()).unwrap();
        assert_eq!(prof.iter().map(|p| p.sup).collect::<Vec<_>>(), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn geometric_lists() {
        assert_eq!(geometric_n_list(10, 1000, 3), vec![10, 100, 1000]);
        assert_eq!(geometric_n_list(4, 4, 5), vec![4]);
    }
}
