//! The two-sided Coxeter complex of a small group.
//!
//! Faces are triples `(I, W_I w W_J, J)` with `I, J` subsets of the
//! generators; a face has dimension `(r - |I|) + (r - |J|) - 1` and is
//! contained in the facet `{w}` exactly when `w` lies in its double coset.
//! Double cosets are found by union-find over the left and right
//! multiplication tables and named by their minimal-length element, which
//! must be unique.

use std::collections::{HashMap, HashSet, VecDeque};

use num_bigint::BigInt;
use num_integer::binomial;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::element::{Element, Side};
use crate::enumerate::enumerate;
use crate::error::{Error, Result};
use crate::group::ProductGroup;

pub const DEFAULT_ORDER_CAP: u64 = 50_000;
pub const DEFAULT_RANK_CAP: u64 = 6;

/// A face `(I, W_I w W_J, J)`; subsets are bit masks over the generators
/// and the coset is named by the index of its minimal-length element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Face {
    pub left: u32,
    pub right: u32,
    pub coset: usize,
}

impl Face {
    pub fn dimension(&self, rank: u32) -> i64 {
        2 * rank as i64 - self.left.count_ones() as i64 - self.right.count_ones() as i64 - 1
    }
}

/// Elements with multiplication tables and lengths.
pub struct CayleyTables {
    pub elements: Vec<Element>,
    pub rank: usize,
    /// `right[w][s]` is the index of `w s`.
    pub right: Vec<Vec<usize>>,
    /// `left[w][s]` is the index of `s w`.
    pub left: Vec<Vec<usize>>,
    /// Word length, by breadth-first search over right multiplication.
    pub length: Vec<u32>,
    pub identity: usize,
}

impl CayleyTables {
    pub fn build(g: &ProductGroup, order_cap: u64) -> Result<Self> {
        let elements: Vec<Element> = enumerate(g, order_cap)?.collect();
        let index: HashMap<&Element, usize> = elements.iter().enumerate().map(|(i, w)| (w, i)).collect();
        let rank = g.rank() as usize;
        let table = |side| -> Vec<Vec<usize>> {
            elements
                .par_iter()
                .map(|w| (0..rank).map(|s| index[&w.generator_apply(s, side)]).collect())
                .collect()
        };
        let right = table(Side::Right);
        let left = table(Side::Left);
        let identity = index[&Element::identity_of(g)];
        let mut length = vec![u32::MAX; elements.len()];
        length[identity] = 0;
        let mut queue = VecDeque::from([identity]);
        while let Some(w) = queue.pop_front() {
            for &v in &right[w] {
                if length[v] == u32::MAX {
                    length[v] = length[w] + 1;
                    queue.push_back(v);
                }
            }
        }
        Ok(CayleyTables { elements, rank, right, left, length, identity })
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            self.0[a.max(b)] = a.min(b);
        }
    }
}

/// Labels each element with the minimal-length element of its double
/// coset `W_I w W_J`. Fails if a coset has two minimal elements.
pub fn double_cosets(t: &CayleyTables, left: u32, right: u32) -> Result<Vec<usize>> {
    let n = t.order();
    let mut uf = UnionFind::new(n);
    for w in 0..n {
        for s in 0..t.rank {
            if left >> s & 1 == 1 {
                uf.union(w, t.left[w][s]);
            }
            if right >> s & 1 == 1 {
                uf.union(w, t.right[w][s]);
            }
        }
    }
    // root -> (min length, representative, tie)
    let mut best: HashMap<usize, (u32, usize, bool)> = HashMap::new();
    for w in 0..n {
        let root = uf.find(w);
        let l = t.length[w];
        best.entry(root)
            .and_modify(|b| {
                if l < b.0 {
                    *b = (l, w, false);
                } else if l == b.0 {
                    b.2 = true;
                }
            })
            .or_insert((l, w, false));
    }
    if let Some((_, &(_, w, _))) = best.iter().find(|(_, b)| b.2) {
        return Err(Error::Consistency(format!(
            "double coset of {} for I={left:#b}, J={right:#b} has two minimal elements",
            t.elements[w]
        )));
    }
    Ok((0..n).map(|w| best[&uf.find(w)].1).collect())
}

/// Every face, sorted.
pub fn enumerate_faces(t: &CayleyTables) -> Result<Vec<Face>> {
    let r = t.rank as u32;
    let pairs: Vec<(u32, u32)> = (0..1u32 << r).flat_map(|i| (0..1u32 << r).map(move |j| (i, j))).collect();
    let per_pair = pairs
        .par_iter()
        .map(|&(left, right)| {
            let labels = double_cosets(t, left, right)?;
            let reps: HashSet<usize> = labels.into_iter().collect();
            Ok(reps.into_iter().map(|coset| Face { left, right, coset }).collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut faces: Vec<Face> = per_pair.into_iter().flatten().collect();
    faces.sort();
    Ok(faces)
}

/// `f[j] = f_{j-1}`, the number of faces of dimension `j - 1`, for
/// `j = 0..=2r`.
pub fn f_vector(faces: &[Face], rank: u32) -> Vec<BigInt> {
    let mut f = vec![BigInt::zero(); 2 * rank as usize + 1];
    for face in faces {
        f[(face.dimension(rank) + 1) as usize] += 1;
    }
    f
}

/// `h_k = sum_{i=0}^{k} (-1)^{k-i} C(d-i, k-i) f_{i-1}` with `d = f.len() - 1`.
pub fn h_vector(f: &[BigInt]) -> Vec<BigInt> {
    let d = f.len() as i64 - 1;
    (0..=d)
        .map(|k| {
            (0..=k).fold(BigInt::zero(), |acc, i| {
                let term = BigInt::from(binomial(d - i, k - i)) * &f[i as usize];
                if (k - i) % 2 == 0 {
                    acc + term
                } else {
                    acc - term
                }
            })
        })
        .collect()
}

/// `sum_{i>=0} (-1)^i f_i`.
pub fn euler_characteristic(f: &[BigInt]) -> BigInt {
    f.iter().skip(1).enumerate().fold(BigInt::zero(), |acc, (i, x)| if i % 2 == 0 { acc + x } else { acc - x })
}

/// Number of elements with each value of `t`.
pub fn t_tally(t: &CayleyTables) -> Vec<BigInt> {
    let mut tally = vec![BigInt::zero(); 2 * t.rank + 1];
    for w in &t.elements {
        tally[w.t() as usize] += 1;
    }
    tally
}

/// Results of the facet-graph checks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GalleryReport {
    /// `v in {ws, sw}` iff the facets of `w` and `v` share a codim-1 face.
    pub adjacency: bool,
    /// Facet-graph distance from the identity equals length.
    pub distance: bool,
    /// Codim-1 faces of `w` shared with a facet one step closer to the
    /// identity number `t(w)`.
    pub wall_count: bool,
    /// Elements where the number of distinct such facets differs from
    /// `t(w)` (reported, not asserted).
    pub facet_count_differs: Vec<String>,
    pub counterexample: Option<String>,
}

pub fn gallery_checks(t: &CayleyTables) -> Result<GalleryReport> {
    let n = t.order();
    let r = t.rank;
    // codim-1 faces: (I, J) = ({s}, {}) or ({}, {s})
    let mut walls: Vec<Vec<usize>> = Vec::with_capacity(2 * r);
    for s in 0..r {
        walls.push(double_cosets(t, 1 << s, 0)?);
        walls.push(double_cosets(t, 0, 1 << s)?);
    }
    let mut members: Vec<HashMap<usize, Vec<usize>>> = vec![HashMap::new(); walls.len()];
    for (k, labels) in walls.iter().enumerate() {
        for (w, &label) in labels.iter().enumerate() {
            members[k].entry(label).or_default().push(w);
        }
    }
    let mut counterexample = None;
    let mut note = |what: &str, w: usize| {
        counterexample.get_or_insert_with(|| format!("{what} fails at {}", t.elements[w]));
    };

    let mut adjacency = true;
    let graph: Vec<HashSet<usize>> = (0..n)
        .map(|w| t.left[w].iter().chain(&t.right[w]).copied().filter(|&v| v != w).collect())
        .collect();
    for w in 0..n {
        let shared: HashSet<usize> = (0..walls.len())
            .flat_map(|k| members[k][&walls[k][w]].iter().copied())
            .filter(|&v| v != w)
            .collect();
        if shared != graph[w] {
            adjacency = false;
            note("adjacency", w);
        }
    }

    let mut dist = vec![u32::MAX; n];
    dist[t.identity] = 0;
    let mut queue = VecDeque::from([t.identity]);
    while let Some(w) = queue.pop_front() {
        for &v in &graph[w] {
            if dist[v] == u32::MAX {
                dist[v] = dist[w] + 1;
                queue.push_back(v);
            }
        }
    }
    let mut distance = true;
    for (w, &d) in dist.iter().enumerate() {
        if d != t.length[w] {
            distance = false;
            note("distance", w);
        }
    }

    let mut wall_count = true;
    let mut facet_count_differs = Vec::new();
    for w in 0..n {
        let target = t.length[w].wrapping_sub(1);
        let mut count = 0;
        let mut facets = HashSet::new();
        for k in 0..walls.len() {
            let lower: Vec<usize> =
                members[k][&walls[k][w]].iter().copied().filter(|&v| t.length[v] == target).collect();
            if !lower.is_empty() {
                count += 1;
            }
            facets.extend(lower);
        }
        let tw = t.elements[w].t() as usize;
        if count != tw {
            wall_count = false;
            note("wall count", w);
        }
        if facets.len() != tw {
            facet_count_differs.push(t.elements[w].to_string());
        }
    }
    Ok(GalleryReport { adjacency, distance, wall_count, facet_count_differs, counterexample })
}

/// Everything checked about the complex of one group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexReport {
    pub group: String,
    pub rank: u64,
    pub order: String,
    pub face_count: usize,
    /// `f_{-1}, f_0, ..., f_{d-1}`.
    pub f_vector: Vec<String>,
    pub h_vector: Vec<String>,
    pub t_tally: Vec<String>,
    pub euler_characteristic: String,
    pub checks: ComplexChecks,
    pub facet_count_differs: Vec<String>,
    pub counterexample: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexChecks {
    pub f_bounds: bool,
    pub h_sum: bool,
    pub h_nonnegative: bool,
    pub h_palindromic: bool,
    pub h_polynomial: bool,
    pub euler: bool,
    pub adjacency: bool,
    pub distance: bool,
    pub wall_count: bool,
}

impl ComplexChecks {
    pub const NAMES: [&'static str; 9] = [
        "f_bounds",
        "h_sum",
        "h_nonnegative",
        "h_palindromic",
        "h_polynomial",
        "euler",
        "adjacency",
        "distance",
        "wall_count",
    ];

    pub fn get(&self, name: &str) -> Option<bool> {
        Some(match name {
            "f_bounds" => self.f_bounds,
            "h_sum" => self.h_sum,
            "h_nonnegative" => self.h_nonnegative,
            "h_palindromic" => self.h_palindromic,
            "h_polynomial" => self.h_polynomial,
            "euler" => self.euler,
            "adjacency" => self.adjacency,
            "distance" => self.distance,
            "wall_count" => self.wall_count,
            _ => return None,
        })
    }

    pub fn all(&self) -> bool {
        Self::NAMES.iter().all(|n| self.get(n) == Some(true))
    }
}

fn strings(v: &[BigInt]) -> Vec<String> {
    v.iter().map(ToString::to_string).collect()
}

/// Builds the complex of `g` and runs every check.
pub fn complex_report(g: &ProductGroup, order_cap: u64, rank_cap: u64) -> Result<ComplexReport> {
    if g.rank() > rank_cap {
        return Err(Error::cap(format!("rank of {g} for the two-sided complex"), g.rank(), rank_cap));
    }
    let order = g.order();
    if order.to_u64().is_none_or(|o| o > order_cap) {
        return Err(Error::cap(format!("order of {g} for the two-sided complex"), &order, order_cap));
    }
    let t = CayleyTables::build(g, order_cap)?;
    let rank = g.rank() as u32;
    let faces = enumerate_faces(&t)?;
    let f = f_vector(&faces, rank);
    let h = h_vector(&f);
    let tally = t_tally(&t);
    let chi = euler_characteristic(&f);
    let gallery = gallery_checks(&t)?;
    let size = BigInt::from(t.order());
    let checks = ComplexChecks {
        f_bounds: f[0] == BigInt::from(1) && f.last() == Some(&size),
        h_sum: h.iter().sum::<BigInt>() == size,
        h_nonnegative: h.iter().all(|x| *x >= BigInt::zero()),
        h_palindromic: h.iter().eq(h.iter().rev()),
        h_polynomial: h == tally,
        euler: chi.is_zero(),
        adjacency: gallery.adjacency,
        distance: gallery.distance,
        wall_count: gallery.wall_count,
    };
    Ok(ComplexReport {
        group: g.to_string(),
        rank: g.rank(),
        order: order.to_string(),
        face_count: faces.len(),
        f_vector: strings(&f),
        h_vector: strings(&h),
        t_tally: strings(&tally),
        euler_characteristic: chi.to_string(),
        checks,
        facet_count_differs: gallery.facet_count_differs,
        counterexample: gallery.counterexample,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::parse_group_spec;

    fn report(s: &str) -> ComplexReport {
        complex_report(&parse_group_spec(s).unwrap(), DEFAULT_ORDER_CAP, DEFAULT_RANK_CAP).unwrap()
    }

    #[test]
    fn a1_by_hand() {
        let r = report("A:1");
        assert_eq!(r.f_vector, ["1", "2", "2"]);
        assert_eq!(r.h_vector, ["1", "0", "1"]);
        assert_eq!(r.t_tally, ["1", "0", "1"]);
        assert_eq!(r.euler_characteristic, "0");
        assert!(r.checks.all(), "{r:?}");
        // s is adjacent to e through both walls but there is one lower facet
        assert_eq!(r.facet_count_differs, ["[2,1]"]);
    }

    #[test]
    fn small_groups_pass_every_check() {
        for s in ["A:2", "A:3", "B:2", "B:3", "I2:3", "I2:4", "I2:5", "I2:6", "A:1 x A:1", "A:2 x I2:3"] {
            let r = report(s);
            assert!(r.checks.all(), "{s}: {r:?}");
            assert_eq!(r.f_vector.last().unwrap(), &r.order);
        }
    }

    #[test]
    fn a2_distances_match_lengths() {
        let g = parse_group_spec("A:2").unwrap();
        let t = CayleyTables::build(&g, 100).unwrap();
        let mut lengths = t.length.clone();
        lengths.sort();
        assert_eq!(lengths, [0, 1, 1, 2, 2, 3]);
        assert!(gallery_checks(&t).unwrap().distance);
    }

    #[test]
    fn faces_are_unions_of_left_cosets() {
        let g = parse_group_spec("B:2").unwrap();
        let t = CayleyTables::build(&g, 100).unwrap();
        for left in 0..4u32 {
            for right in 0..4u32 {
                let labels = double_cosets(&t, left, right).unwrap();
                for w in 0..t.order() {
                    for s in 0..2 {
                        if left >> s & 1 == 1 {
                            assert_eq!(labels[t.left[w][s]], labels[w]);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn caps_are_enforced() {
        let g = parse_group_spec("A:7").unwrap();
        assert!(matches!(complex_report(&g, DEFAULT_ORDER_CAP, DEFAULT_RANK_CAP), Err(Error::CapExceeded { .. })));
        let g = parse_group_spec("A:6").unwrap();
        assert!(matches!(complex_report(&g, 1000, DEFAULT_RANK_CAP), Err(Error::CapExceeded { .. })));
    }
}
