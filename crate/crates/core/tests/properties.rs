use std::collections::HashMap;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};
use proptest::prelude::*;

use coxdes::clt::{
    criterion_three, delta_small_split, ks_distance_exact, lindeberg_sum, max_ratio, TriangularRow,
};
use coxdes::complex::complex_report;
use coxdes::enumerate::{bfs_length_oracle, enumerate};
use coxdes::joint::{counts_recursion_b, joint_counts_bruteforce, kernel_counts};
use coxdes::moments::{rational, variance_t};
use coxdes::sample::{rng_for, sample_type};
use coxdes::{parse_group_spec, DistCache, Element, Family, GroupType, ProductGroup, Rational};

fn group(s: &str) -> ProductGroup {
    parse_group_spec(s).unwrap()
}

fn arb_type() -> impl Strategy<Value = GroupType> {
    prop_oneof![
        (1u32..12).prop_map(|n| GroupType::a(n).unwrap()),
        (2u32..10).prop_map(|n| GroupType::b(n).unwrap()),
        (4u32..8).prop_map(|n| GroupType::d(n).unwrap()),
        (3u32..40).prop_map(|m| GroupType::i2(m).unwrap()),
    ]
}

fn arb_product() -> impl Strategy<Value = ProductGroup> {
    prop::collection::vec(arb_type(), 1..6).prop_map(ProductGroup::new)
}

/// `w w0` for types A and B: reverse the one-line window, or negate it.
fn times_longest(w: &Element) -> Element {
    match w {
        Element::A(p) => Element::A(p.iter().rev().copied().collect()),
        Element::B(v) => Element::B(v.iter().map(|x| -x).collect()),
        _ => unreachable!(),
    }
}

#[test]
fn descents_match_length_oracle() {
    let groups = [
        "A:1", "A:2", "A:3", "A:4", "A:5", "B:2", "B:3", "B:4", "D:4", "I2:3", "I2:4", "I2:7", "I2:8",
        "A:2 x I2:3", "B:2 x A:1",
    ];
    for spec in groups {
        let g = group(spec);
        let oracle = bfs_length_oracle(&g, 100_000).unwrap();
        assert_eq!(BigUint::from(oracle.len()), g.order(), "{spec}");
        for w in enumerate(&g, 100_000).unwrap() {
            let e = &oracle[&w];
            assert_eq!(w.descent_set(), e.right_descents, "{spec} {w}");
            assert_eq!(w.des() as usize, e.right_descents.len(), "{spec} {w}");
            assert_eq!(w.ides() as usize, e.left_descents.len(), "{spec} {w}");
        }
    }
}

#[test]
fn product_tally_is_the_convolution() {
    let g = group("A:2 x I2:3");
    let mut tally = vec![BigUint::zero(); 2 * g.rank() as usize + 1];
    for w in enumerate(&g, 1000).unwrap() {
        tally[w.t() as usize] += 1u32;
    }
    let (counts, exact) = DistCache::default().t_counts(&g).unwrap();
    assert!(exact);
    assert_eq!(counts, tally);
}

#[test]
fn kernel_matches_bruteforce_and_recursion() {
    for n in 1..=6 {
        let g = GroupType::a(n).unwrap();
        assert_eq!(kernel_counts(Family::A, n).unwrap(), joint_counts_bruteforce(&g, 10_000_000).unwrap(), "A{n}");
    }
    for n in 2..=5 {
        let g = GroupType::b(n).unwrap();
        assert_eq!(kernel_counts(Family::B, n).unwrap(), joint_counts_bruteforce(&g, 10_000_000).unwrap(), "B{n}");
    }
    for n in 1..=14 {
        assert_eq!(kernel_counts(Family::B, n).unwrap(), counts_recursion_b(n).unwrap(), "B{n}");
    }
}

#[test]
fn joint_counts_symmetries() {
    for family in [Family::A, Family::B] {
        for n in 2..=25 {
            let c = kernel_counts(family, n).unwrap();
            let g = GroupType::new(family, n).unwrap();
            assert_eq!(c.total(), g.order());
            assert!(c.is_symmetric(), "{family}{n}");
            assert!(c.is_centrally_symmetric(), "{family}{n}");
        }
    }
    let d5 = joint_counts_bruteforce(&GroupType::d(5).unwrap(), 10_000_000).unwrap();
    assert!(d5.is_symmetric() && d5.is_centrally_symmetric());
}

#[test]
fn product_joint_convolution_sums_to_order() {
    let cache = DistCache::default();
    let g = group("A:3 x B:2 x I2:5");
    let mut acc = cache.joint(&g.factors[0]).unwrap().counts.clone();
    for f in &g.factors[1..] {
        acc = acc.convolve(&cache.joint(f).unwrap().counts);
    }
    assert_eq!(acc.total(), BigUint::from(24u32 * 8 * 10));
    assert_eq!(acc.t_counts(), cache.t_counts(&g).unwrap().0);
    assert!(acc.is_symmetric());
}

#[test]
fn moments_of_t_up_to_rank_30() {
    let cache = DistCache::default();
    for n in 1..=30u32 {
        for family in [Family::A, Family::B] {
            if family == Family::B && n < 2 {
                continue;
            }
            let g = ProductGroup::single(GroupType::new(family, n).unwrap());
            let p = cache.t_pmf(&g).unwrap().pmf;
            let n_i = n as i64;
            assert_eq!(p.mean(), rational(n_i, 1));
            assert!(p.central_moment(3).is_zero(), "{family}{n}");
            let v = match family {
                Family::A => rational(n_i + 2, 6) + rational(n_i, n_i + 1),
                _ => rational(n_i + 4, 6),
            };
            assert_eq!(p.variance(), v, "{family}{n}");
            assert_eq!(variance_t(&g, &cache).unwrap().value, v);
        }
    }
}

#[test]
fn lindeberg_vanishes_beyond_the_support() {
    let cache = DistCache::default();
    let g = ProductGroup::new(vec![GroupType::i2(5).unwrap(); 30]);
    let row = TriangularRow::exact_row(&g, &cache).unwrap();
    // centred dihedral support is within [-2, 2] and s^2 = 30 * 4/5 = 24
    let eps = rational(1, 2);
    assert!(eps.clone() * eps.clone() * row.s2.clone() > rational(4, 1));
    assert!(lindeberg_sum(&row, &eps).unwrap().is_zero());
}

#[test]
fn identical_components_give_max_ratio_one_over_k() {
    let cache = DistCache::default();
    for k in 1..=6usize {
        let g = ProductGroup::new(vec![GroupType::a(7).unwrap(); k]);
        let row = TriangularRow::exact_row(&g, &cache).unwrap();
        assert_eq!(max_ratio(&row).unwrap(), rational(1, k as i64));
    }
}

#[test]
fn ks_distance_of_a_n_decreases() {
    let cache = DistCache::default();
    let ks: Vec<f64> = [10u32, 25, 50, 100, 200]
        .iter()
        .map(|&n| {
            let p = cache.t_pmf_float(&ProductGroup::single(GroupType::a(n).unwrap())).unwrap();
            ks_distance_exact(&p.pmf).unwrap().corrected
        })
        .collect();
    for w in ks.windows(2) {
        assert!(w[1] <= w[0] * 1.1, "{ks:?}");
    }
}

#[test]
fn complex_checks_on_small_groups() {
    for spec in ["A:1", "A:2", "A:3", "B:2", "B:3", "I2:3", "I2:4", "I2:5", "I2:6", "A:1 x A:1", "A:2 x A:1"] {
        let r = complex_report(&group(spec), 50_000, 6).unwrap();
        assert!(r.checks.all(), "{spec}: {:?}", r.checks);
        assert_eq!(r.f_vector.first().map(String::as_str), Some("1"));
        assert_eq!(r.f_vector.last().unwrap(), &r.order);
        assert_eq!(r.h_vector, r.t_tally, "{spec}");
        let h_sum: BigInt = r.h_vector.iter().map(|h| h.parse::<BigInt>().unwrap()).sum();
        assert_eq!(h_sum.to_string(), r.order);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn des_plus_des_of_w_w0_is_rank(n in 1u32..40, is_b in any::<bool>(), seed in any::<u64>()) {
        let g = if is_b { GroupType::b(n.max(2)).unwrap() } else { GroupType::a(n).unwrap() };
        let w = sample_type(&g, &mut rng_for(seed));
        prop_assert_eq!(w.des() + times_longest(&w).des(), g.rank());
    }

    #[test]
    fn t_is_inverse_invariant_and_bounded(g in arb_product(), seed in any::<u64>()) {
        let mut rng = rng_for(seed);
        let parts: Vec<Element> = g.factors.iter().map(|f| sample_type(f, &mut rng)).collect();
        for (f, w) in g.factors.iter().zip(&parts) {
            prop_assert!(w.is_valid());
            prop_assert_eq!(w.t(), w.inverse().t());
            prop_assert!(w.t() <= 2 * f.rank());
        }
        let w = Element::Product(parts.clone());
        prop_assert_eq!(w.t(), parts.iter().map(Element::t).sum::<u32>());
        prop_assert!(u64::from(w.t()) <= 2 * g.rank());
    }

    #[test]
    fn lindeberg_is_monotone_and_bounded(g in arb_product()) {
        let cache = DistCache::default();
        let row = TriangularRow::float_row(&g, &cache).unwrap();
        let grid = [0.01, 0.05, 0.1, 0.25, 0.5, 1.0, 2.0];
        let values: Vec<f64> = grid.iter().map(|e| lindeberg_sum(&row, e).unwrap()).collect();
        for v in &values {
            prop_assert!((0.0..=1.0 + 1e-12).contains(v));
        }
        for w in values.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
        let m = max_ratio(&row).unwrap();
        prop_assert!(m > 0.0 && m <= 1.0 + 1e-12);
    }

    #[test]
    fn criterion_is_additive(a in arb_product(), b in arb_product()) {
        let mut both = a.factors.clone();
        both.extend(b.factors.iter().copied());
        prop_assert_eq!(criterion_three(&ProductGroup::new(both)), criterion_three(&a) + criterion_three(&b));
    }

    #[test]
    fn delta_split_partitions_by_rank(g in arb_product(), p in 1i64..8, q in 2i64..9) {
        prop_assume!(p < q);
        let delta = rational(p, q);
        let s = delta_small_split(&g, &delta).unwrap();
        prop_assert_eq!(s.large.rank() + s.small.rank(), g.rank());
        prop_assert_eq!(s.large.factors.len(), s.m_n);
        // r <= R^(1 - p/q)  iff  r^q <= R^(q - p)
        let total = BigInt::from(g.rank());
        let small = |f: &GroupType| {
            num_traits::pow(BigInt::from(f.rank()), q as usize) <= num_traits::pow(total.clone(), (q - p) as usize)
        };
        for f in &s.small.factors {
            prop_assert!(small(f), "{} should be small", f);
        }
        for f in &s.large.factors {
            prop_assert!(!small(f), "{} should be large", f);
        }
    }

    #[test]
    fn product_order_is_multiplicative(g in arb_product()) {
        let direct: BigUint = g.factors.iter().map(GroupType::order).fold(BigUint::one(), |a, b| a * b);
        prop_assert_eq!(g.order(), direct);
        let (counts, _) = DistCache::default().t_counts(&g).unwrap();
        let total: BigUint = counts.iter().sum();
        prop_assert_eq!(total, g.order());
    }
}

#[test]
fn dihedral_t_tally() {
    for m in 3..=12u32 {
        let g = ProductGroup::single(GroupType::i2(m).unwrap());
        let mut tally: HashMap<u32, u32> = HashMap::new();
        for w in enumerate(&g, 100).unwrap() {
            *tally.entry(w.t()).or_default() += 1;
        }
        assert_eq!(tally, HashMap::from([(0, 1), (2, 2 * m - 2), (4, 1)]));
        let p = DistCache::default().t_pmf(&g).unwrap().pmf;
        assert_eq!(p.variance(), Rational::new(4.into(), m.to_i64().unwrap().into()));
    }
}
