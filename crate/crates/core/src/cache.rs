//! Memoized per-factor distributions and their convolution over products.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use num_bigint::BigUint;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::Result;
use crate::group::{GroupType, ProductGroup};
use crate::joint::{joint_dist, joint_pmf_float, JointCountJson, JointCountMatrix, JointDist, JointSource};
use crate::moments::VarianceT;
use crate::pmf::IntegerPmf;
use crate::scalar::Scalar;
use crate::{ExactPmf, FloatPmf};

/// Environment variable naming the on-disk cache directory.
pub const CACHE_DIR_ENV: &str = "COXDES_CACHE_DIR";

/// Distribution of `T` on a product with an exactness flag.
#[derive(Debug, Clone, PartialEq)]
pub struct TPmf<S> {
    pub pmf: IntegerPmf<S>,
    pub exact: bool,
}

#[derive(Serialize, Deserialize)]
struct CachedJoint {
    group: String,
    exact: bool,
    source: JointSource,
    #[serde(flatten)]
    counts: JointCountJson,
}

/// Thread-safe memo of joint distributions keyed by irreducible type,
/// optionally persisted to a content-addressed directory (file names carry
/// family, parameter and crate version).
pub struct DistCache {
    config: Config,
    disk: Option<PathBuf>,
    joint: Mutex<HashMap<GroupType, Arc<JointDist>>>,
    float_t: Mutex<HashMap<GroupType, Arc<(FloatPmf, bool)>>>,
    variance: Mutex<HashMap<GroupType, VarianceT>>,
}

impl DistCache {
    pub fn new(config: Config) -> Self {
        DistCache { config, disk: None, joint: Mutex::default(), float_t: Mutex::default(), variance: Mutex::default() }
    }

    pub fn with_disk_cache(mut self, dir: impl Into<PathBuf>) -> Self {
        self.disk = Some(dir.into());
        self
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    fn disk_path(&self, g: &GroupType) -> Option<PathBuf> {
        self.disk
            .as_ref()
            .map(|d| d.join(format!("{}{}-v{}.json", g.family(), g.param(), env!("CARGO_PKG_VERSION"))))
    }

    fn load_disk(path: &Path, g: &GroupType) -> Option<JointDist> {
        let text = std::fs::read_to_string(path).ok()?;
        let c: CachedJoint = serde_json::from_str(&text).ok()?;
        if c.group != g.to_string() {
            return None;
        }
        let counts = JointCountMatrix::from_json(&c.counts).ok()?;
        if counts.total() != g.order() && c.exact {
            return None;
        }
        Some(JointDist { group: *g, counts, exact: c.exact, source: c.source })
    }

    fn store_disk(path: &Path, d: &JointDist) {
        let c = CachedJoint {
            group: d.group.to_string(),
            exact: d.exact,
            source: d.source,
            counts: d.counts.to_json(),
        };
        if let Some(parent) = path.parent() {
            let _ = std::fs::create_dir_all(parent);
        }
        if let Ok(text) = serde_json::to_string(&c) {
            // write-then-rename so readers never see partial files
            let tmp = path.with_extension("json.tmp");
            if std::fs::write(&tmp, text).is_ok() {
                let _ = std::fs::rename(&tmp, path);
            }
        }
    }

    pub fn joint(&self, g: &GroupType) -> Result<Arc<JointDist>> {
        if let Some(d) = self.joint.lock().unwrap().get(g) {
            return Ok(d.clone());
        }
        let path = self.disk_path(g);
        let d = match path.as_deref().and_then(|p| Self::load_disk(p, g)) {
            Some(d) => d,
            None => {
                let d = joint_dist(g, &self.config)?;
                if let Some(p) = &path {
                    Self::store_disk(p, &d);
                }
                d
            }
        };
        let d = Arc::new(d);
        self.joint.lock().unwrap().insert(*g, d.clone());
        Ok(d)
    }

    fn distinct(g: &ProductGroup) -> Vec<GroupType> {
        let mut v = g.factors.clone();
        v.sort();
        v.dedup();
        v
    }

    /// Counts of `t` on a product, convolved in integers; the common
    /// denominator is the group order (or the surrogate's order).
    pub fn t_counts(&self, g: &ProductGroup) -> Result<(Vec<BigUint>, bool)> {
        let types = Self::distinct(g);
        let dists: Vec<Arc<JointDist>> = types.par_iter().map(|t| self.joint(t)).collect::<Result<_>>()?;
        let by_type: HashMap<GroupType, &Arc<JointDist>> = types.iter().copied().zip(&dists).collect();
        let mut acc = vec![BigUint::from(1u32)];
        let mut exact = true;
        for f in &g.factors {
            let d = by_type[f];
            exact &= d.exact;
            acc = convolve_counts(&acc, &d.counts.t_counts());
        }
        Ok((acc, exact))
    }

    /// Exact distribution of `T` on a product.
    pub fn t_pmf(&self, g: &ProductGroup) -> Result<TPmf<crate::Rational>> {
        let (counts, exact) = self.t_counts(g)?;
        Ok(TPmf { pmf: ExactPmf::from_counts(0, &counts), exact })
    }

    /// Exact distribution of `T` on one irreducible factor.
    pub fn t_pmf_type(&self, g: &GroupType) -> Result<TPmf<crate::Rational>> {
        let d = self.joint(g)?;
        Ok(TPmf { pmf: d.t_pmf(), exact: d.exact })
    }

    /// Floating-point distribution of `T` on one factor, available at any
    /// rank.
    pub fn t_pmf_float_type(&self, g: &GroupType) -> Result<TPmf<f64>> {
        if let Some(d) = self.float_t.lock().unwrap().get(g) {
            return Ok(TPmf { pmf: d.0.clone(), exact: d.1 });
        }
        let (pmf, exact) = if g.rank() <= self.config.exact_rank_limit {
            let d = self.joint(g)?;
            (d.t_pmf::<f64>(), d.exact)
        } else {
            let (p, exact) = joint_pmf_float(g, &self.config)?;
            (p.t_pmf(), exact)
        };
        self.float_t.lock().unwrap().insert(*g, Arc::new((pmf.clone(), exact)));
        Ok(TPmf { pmf, exact })
    }

    /// Memoizes per-factor variance estimates that are costly to recompute.
    pub(crate) fn memo_variance(&self, g: &GroupType, f: impl FnOnce() -> Result<VarianceT>) -> Result<VarianceT> {
        if let Some(v) = self.variance.lock().unwrap().get(g) {
            return Ok(v.clone());
        }
        let v = f()?;
        self.variance.lock().unwrap().insert(*g, v.clone());
        Ok(v)
    }

    /// Floating-point distribution of `T` on a product. The flag reports
    /// whether every factor came from an exact construction.
    pub fn t_pmf_float(&self, g: &ProductGroup) -> Result<TPmf<f64>> {
        let types = Self::distinct(g);
        let pmfs: Vec<TPmf<f64>> = types.par_iter().map(|t| self.t_pmf_float_type(t)).collect::<Result<_>>()?;
        let by_type: HashMap<GroupType, &TPmf<f64>> = types.iter().copied().zip(&pmfs).collect();
        let mut acc = FloatPmf::point_mass(0);
        let mut exact = true;
        for f in &g.factors {
            let p = by_type[f];
            exact &= p.exact;
            acc = acc.convolve(&p.pmf);
        }
        Ok(TPmf { pmf: acc, exact })
    }
}

impl Default for DistCache {
    fn default() -> Self {
        DistCache::new(Config::default())
    }
}

pub fn convolve_counts(a: &[BigUint], b: &[BigUint]) -> Vec<BigUint> {
    let mut out = vec![BigUint::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if !y.is_zero() {
                out[i + j] += x * y;
            }
        }
    }
    out
}

/// Convenience: exact `T` distribution with a default cache.
pub fn t_pmf(g: &ProductGroup, cfg: &Config) -> Result<TPmf<crate::Rational>> {
    DistCache::new(cfg.clone()).t_pmf(g)
}

impl<S: Scalar> TPmf<S> {
    pub fn mean(&self) -> S {
        self.pmf.mean()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumerate::enumerate;
    use crate::group::parse_group_spec;
    use crate::Rational;

    fn brute_t(spec: &str) -> ExactPmf {
        let g = parse_group_spec(spec).unwrap();
        let mut tally = vec![BigUint::zero(); 2 * g.rank() as usize + 1];
        for w in enumerate(&g, 1_000_000).unwrap() {
            tally[w.t() as usize] += 1u32;
        }
        ExactPmf::from_counts(0, &tally)
    }

    #[test]
    fn dihedral_t_pmf() {
        let cache = DistCache::default();
        for m in 3..10u32 {
            let g = ProductGroup::single(GroupType::i2(m).unwrap());
            let t = cache.t_pmf(&g).unwrap();
            let r = |p: u32, q: u32| Rational::new(p.into(), q.into());
            assert_eq!(t.pmf.prob(0), r(1, 2 * m));
            assert_eq!(t.pmf.prob(2), r(2 * m - 2, 2 * m));
            assert_eq!(t.pmf.prob(4), r(1, 2 * m));
            assert!(t.exact);
        }
    }

    #[test]
    fn product_pmf_matches_enumeration() {
        let cache = DistCache::default();
        for spec in ["A:2 x A:2", "A:2 x I2:4", "B:2 x D:4", "I2:3 x I2:5 x A:1"] {
            let t = cache.t_pmf(&parse_group_spec(spec).unwrap()).unwrap();
            assert_eq!(t.pmf, brute_t(spec), "{spec}");
        }
    }

    #[test]
    fn mean_equals_rank() {
        let cache = DistCache::default();
        for spec in ["A:7", "B:5", "D:5", "I2:9", "A:3 x B:4 x I2:5^3"] {
            let g = parse_group_spec(spec).unwrap();
            assert_eq!(cache.t_pmf(&g).unwrap().mean(), Rational::from_integer(g.rank().into()));
        }
    }

    #[test]
    fn float_and_exact_agree() {
        let cache = DistCache::default();
        let g = parse_group_spec("A:6 x B:3 x I2:7").unwrap();
        let exact = cache.t_pmf(&g).unwrap().pmf.to_f64();
        let float = cache.t_pmf_float(&g).unwrap().pmf;
        for (a, b) in exact.probs.iter().zip(&float.probs) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn surrogate_flag_propagates() {
        let cache = DistCache::default();
        let g = parse_group_spec("A:3 x D:12").unwrap();
        assert!(!cache.t_pmf(&g).unwrap().exact);
        assert!(!cache.t_pmf_float(&g).unwrap().exact);
    }

    #[test]
    fn disk_cache_round_trip() {
        let dir = std::env::temp_dir().join(format!("coxdes-cache-test-{}", std::process::id()));
        let g = GroupType::b(6).unwrap();
        let first = DistCache::default().with_disk_cache(&dir).joint(&g).unwrap();
        let second = DistCache::default().with_disk_cache(&dir).joint(&g).unwrap();
        assert_eq!(first, second);
        assert!(dir.join(format!("B6-v{}.json", env!("CARGO_PKG_VERSION"))).exists());
        let _ = std::fs::remove_dir_all(&dir);
    }
}
