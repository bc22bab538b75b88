//! Uniform sampling and reproducible parallel streams.
//!
//! Parallel work is split into fixed-size chunks. Chunk `c` draws from a
//! `ChaCha8Rng` seeded with [`child_seed`]`(seed, c)`, so results depend only
//! on `(seed, samples, chunk_size)` and not on the number of worker threads.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::element::Element;
use crate::group::{Family, GroupType, ProductGroup};

/// Seed used when the caller does not supply one.
pub const DEFAULT_SEED: u64 = 0x5EED_C0DE_2024_0001;

pub const DEFAULT_CHUNK_SIZE: u64 = 8192;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the stream for worker/chunk `index` under `parent`:
/// `splitmix64(parent ^ splitmix64(index))`.
pub fn child_seed(parent: u64, index: u64) -> u64 {
    splitmix64(parent ^ splitmix64(index))
}

pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn sample_type<R: Rng + ?Sized>(g: &GroupType, rng: &mut R) -> Element {
    let n = g.param();
    match g.family() {
        Family::A => {
            let mut p: Vec<u32> = (1..=n + 1).collect();
            p.shuffle(rng);
            Element::A(p)
        }
        Family::B => {
            let mut p: Vec<i32> = (1..=n as i32).collect();
            p.shuffle(rng);
            for v in p.iter_mut() {
                if rng.gen::<bool>() {
                    *v = -*v;
                }
            }
            Element::B(p)
        }
        Family::D => {
            // n-1 free signs, the last one is their product
            let mut p: Vec<i32> = (1..=n as i32).collect();
            p.shuffle(rng);
            let mut negatives = 0;
            let last = p.len() - 1;
            for v in p[..last].iter_mut() {
                if rng.gen::<bool>() {
                    *v = -*v;
                    negatives += 1;
                }
            }
            if negatives % 2 == 1 {
                p[last] = -p[last];
            }
            Element::D(p)
        }
        Family::I2 => {
            let k = rng.gen_range(0..2 * n);
            Element::I2 { m: n, reflection: k >= n, index: k % n }
        }
    }
}

/// Uniform element of a product: factors are drawn independently.
pub fn sample_uniform<R: Rng + ?Sized>(g: &ProductGroup, rng: &mut R) -> Element {
    match g.factors.as_slice() {
        [single] => sample_type(single, rng),
        fs => Element::Product(fs.iter().map(|f| sample_type(f, rng)).collect()),
    }
}

/// Draws `samples` values of the statistic `t` in parallel. The output
/// order is the chunk order, hence deterministic.
pub fn sample_t_values(g: &ProductGroup, samples: u64, seed: u64, chunk_size: u64) -> Vec<u32> {
    let chunk_size = chunk_size.max(1);
    let chunks = samples.div_ceil(chunk_size);
    (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = rng_for(child_seed(seed, c));
            let len = chunk_size.min(samples - c * chunk_size);
            let g = g.clone();
            (0..len).map(move |_| sample_uniform(&g, &mut rng).t())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::parse_group_spec;
    use std::collections::HashMap;

    #[test]
    fn dihedral_identity_frequency() {
        let m = 5u32;
        let g = ProductGroup::single(GroupType::i2(m).unwrap());
        let mut rng = rng_for(11);
        let draws = 1_000_000u32;
        let hits = (0..draws)
            .filter(|_| sample_uniform(&g, &mut rng) == Element::I2 { m, reflection: false, index: 0 })
            .count() as f64;
        let p = 1.0 / (2.0 * m as f64);
        let se = (p * (1.0 - p) / draws as f64).sqrt();
        assert!((hits / draws as f64 - p).abs() < 4.0 * se);
    }

    #[test]
    fn a3_chi_square_goodness_of_fit() {
        let g = parse_group_spec("A:3").unwrap();
        let mut rng = rng_for(12);
        let draws = 1_000_000u32;
        let mut counts: HashMap<Element, u32> = HashMap::new();
        for _ in 0..draws {
            *counts.entry(sample_uniform(&g, &mut rng)).or_default() += 1;
        }
        assert_eq!(counts.len(), 24);
        let expected = draws as f64 / 24.0;
        let chi2: f64 = counts.values().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // upper 1e-3 quantile of chi-square with 23 degrees of freedom
        assert!(chi2 < 49.73, "chi2 = {chi2}");
    }

    #[test]
    fn d_samples_have_even_sign_count() {
        let g = parse_group_spec("D:4 x D:7").unwrap();
        let mut rng = rng_for(13);
        for _ in 0..10_000 {
            let w = sample_uniform(&g, &mut rng);
            assert!(w.is_valid());
        }
    }

    #[test]
    fn parallel_sampling_is_reproducible() {
        let g = parse_group_spec("A:6 x I2:4").unwrap();
        let a = sample_t_values(&g, 50_000, 7, 1000);
        let b = sample_t_values(&g, 50_000, 7, 1000);
        let c = sample_t_values(&g, 50_000, 8, 1000);
        assert_eq!(a.len(), 50_000);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn child_seeds_differ() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|i| child_seed(DEFAULT_SEED, i)).collect();
        assert_eq!(seeds.len(), 1000);
    }
}
