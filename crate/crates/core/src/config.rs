use serde::{Deserialize, Serialize};

use crate::enumerate::DEFAULT_ENUMERATION_CAP;
use crate::sample::{DEFAULT_CHUNK_SIZE, DEFAULT_SEED};

/// Resource limits and randomness settings shared by the computations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Config {
    /// Largest group order that may be enumerated element by element.
    pub enumeration_cap: u64,
    /// Largest rank for which A/B joint distributions are built exactly.
    pub exact_rank_limit: u32,
    /// Largest rank for which type D is enumerated; above it the type-B
    /// distribution stands in and results are flagged approximate.
    pub d_bruteforce_max_rank: u32,
    /// Monte Carlo draws for quantities with no exact route.
    pub mc_samples: u64,
    pub seed: u64,
    pub chunk_size: u64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            exact_rank_limit: 300,
            d_bruteforce_max_rank: 8,
            mc_samples: 200_000,
            seed: DEFAULT_SEED,
            chunk_size: DEFAULT_CHUNK_SIZE,
        }
    }
}
