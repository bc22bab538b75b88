//! Exhaustive enumeration and the breadth-first length oracle.

use std::collections::{HashMap, VecDeque};

use num_bigint::BigUint;
use num_traits::ToPrimitive;

use crate::element::{Element, Side};
use crate::error::{Error, Result};
use crate::group::{Family, GroupType, ProductGroup};

pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;

fn check_cap(what: &str, order: &BigUint, cap: u64) -> Result<u64> {
    match order.to_u64() {
        Some(o) if o <= cap => Ok(o),
        _ => Err(Error::cap(what, order, cap)),
    }
}

/// Iterator over all elements of an irreducible group.
pub struct TypeElements {
    family: Family,
    m: u32,
    perm: Option<Vec<u32>>,
    signs: u64,
    sign_limit: u64,
    dihedral_next: u32,
}

impl TypeElements {
    fn new(g: &GroupType) -> Self {
        let n = g.param();
        let (perm, sign_limit) = match g.family() {
            Family::A => (Some((1..=n + 1).collect()), 1),
            Family::B | Family::D => (Some((1..=n).collect()), 1u64 << n),
            Family::I2 => (None, 1),
        };
        TypeElements { family: g.family(), m: n, perm, signs: 0, sign_limit, dihedral_next: 0 }
    }

    fn signed(&self, perm: &[u32]) -> Vec<i32> {
        perm.iter()
            .enumerate()
            .map(|(i, &v)| if self.signs >> i & 1 == 1 { -(v as i32) } else { v as i32 })
            .collect()
    }
}

impl Iterator for TypeElements {
    type Item = Element;

    fn next(&mut self) -> Option<Element> {
        match self.family {
            Family::I2 => {
                if self.dihedral_next >= 2 * self.m {
                    return None;
                }
                let k = self.dihedral_next;
                self.dihedral_next += 1;
                Some(Element::I2 { m: self.m, reflection: k >= self.m, index: k % self.m })
            }
            Family::A => {
                let perm = self.perm.as_mut()?;
                let out = Element::A(perm.clone());
                if !next_permutation(perm) {
                    self.perm = None;
                }
                Some(out)
            }
            Family::B | Family::D => loop {
                let perm = self.perm.as_ref()?;
                if self.signs >= self.sign_limit {
                    let perm = self.perm.as_mut().unwrap();
                    if !next_permutation(perm) {
                        self.perm = None;
                        return None;
                    }
                    self.signs = 0;
                    continue;
                }
                let w = self.signed(perm);
                let parity = self.signs.count_ones() % 2;
                self.signs += 1;
                if self.family == Family::B {
                    return Some(Element::B(w));
                }
                if parity == 0 {
                    return Some(Element::D(w));
                }
            },
        }
    }
}

/// Lexicographic successor; returns `false` after the last permutation.
pub fn next_permutation(p: &mut [u32]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Enumerates an irreducible group, each element exactly once.
pub fn enumerate_type(g: &GroupType, cap: u64) -> Result<TypeElements> {
    check_cap(&format!("enumeration of {g}"), &g.order(), cap)?;
    Ok(TypeElements::new(g))
}

/// Enumerates a product group. Single factors stream; products are built
/// by an odometer over the materialized factor lists.
pub fn enumerate(g: &ProductGroup, cap: u64) -> Result<Box<dyn Iterator<Item = Element>>> {
    check_cap(&format!("enumeration of {g}"), &g.order(), cap)?;
    if let [single] = g.factors.as_slice() {
        return Ok(Box::new(TypeElements::new(single)));
    }
    let lists: Vec<Vec<Element>> = g.factors.iter().map(|f| TypeElements::new(f).collect()).collect();
    Ok(Box::new(ProductOdometer::new(lists)))
}

struct ProductOdometer {
    lists: Vec<Vec<Element>>,
    idx: Vec<usize>,
    done: bool,
}

impl ProductOdometer {
    fn new(lists: Vec<Vec<Element>>) -> Self {
        let done = lists.iter().any(Vec::is_empty);
        let idx = vec![0; lists.len()];
        ProductOdometer { lists, idx, done }
    }
}

impl Iterator for ProductOdometer {
    type Item = Element;

    fn next(&mut self) -> Option<Element> {
        if self.done {
            return None;
        }
        let out = Element::Product(self.idx.iter().zip(&self.lists).map(|(&i, l)| l[i].clone()).collect());
        let mut k = self.lists.len();
        loop {
            if k == 0 {
                self.done = true;
                break;
            }
            k -= 1;
            self.idx[k] += 1;
            if self.idx[k] < self.lists[k].len() {
                break;
            }
            self.idx[k] = 0;
        }
        Some(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleEntry {
    pub length: u32,
    pub right_descents: Vec<usize>,
    pub left_descents: Vec<usize>,
}

/// Lengths and descent sets from a breadth-first search of the right
/// Cayley graph. Length is BFS depth; `s` is a right descent iff
/// `l(ws) < l(w)` and a left descent iff `l(sw) < l(w)`.
pub fn bfs_length_oracle(g: &ProductGroup, cap: u64) -> Result<HashMap<Element, OracleEntry>> {
    check_cap(&format!("length oracle for {g}"), &g.order(), cap)?;
    let rank = g.rank() as usize;
    let start = Element::identity_of(g);
    let mut length: HashMap<Element, u32> = HashMap::new();
    length.insert(start.clone(), 0);
    let mut queue = VecDeque::from([start]);
    while let Some(w) = queue.pop_front() {
        let l = length[&w];
        for s in 0..rank {
            let v = w.generator_apply(s, Side::Right);
            if !length.contains_key(&v) {
                length.insert(v.clone(), l + 1);
                queue.push_back(v);
            }
        }
    }
    let mut out = HashMap::with_capacity(length.len());
    for (w, &l) in &length {
        let shorter = |side| (0..rank).filter(|&s| length[&w.generator_apply(s, side)] < l).collect::<Vec<_>>();
        out.insert(
            w.clone(),
            OracleEntry { length: l, right_descents: shorter(Side::Right), left_descents: shorter(Side::Left) },
        );
    }
    Ok(out)
}
