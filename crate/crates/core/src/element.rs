//! Concrete element models and the descent statistics on them.
//!
//! * type A: one-line permutation of `1..=n+1`; generator `s_i` (0-based)
//!   swaps positions `i, i+1` on the right and values `i+1, i+2` on the left.
//! * type B: signed window `(w(1), .., w(n))`; `s_0` flips the sign of the
//!   first entry (right) or of the value `±1` (left); `s_i`, `i >= 1`, swaps
//!   positions `i, i+1` (right) or values `±i, ±(i+1)` (left).
//! * type D: signed window with an even number of negative entries; `s_0`
//!   maps `(w(1), w(2))` to `(-w(2), -w(1))` on the right and swaps
//!   `1 <-> -2`, `2 <-> -1` among values on the left. The other generators
//!   act as in type B.
//! * I2(m): `rot(k) = r^k` and `refl(k) = r^k s_0` with `r = s_0 s_1`.
//!
//! Descent counts use the classical combinatorial rules. Every rule is
//! checked against [`crate::enumerate::bfs_length_oracle`] in the tests.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::group::{Family, GroupType, ProductGroup};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Element {
    A(Vec<u32>),
    B(Vec<i32>),
    D(Vec<i32>),
    I2 { m: u32, reflection: bool, index: u32 },
    Product(Vec<Element>),
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn window<T: fmt::Display>(f: &mut fmt::Formatter<'_>, v: &[T]) -> fmt::Result {
            let parts: Vec<String> = v.iter().map(ToString::to_string).collect();
            write!(f, "[{}]", parts.join(","))
        }
        match self {
            Element::A(p) => window(f, p),
            Element::B(w) | Element::D(w) => window(f, w),
            Element::I2 { reflection: false, index, .. } => write!(f, "rot({index})"),
            Element::I2 { reflection: true, index, .. } => write!(f, "refl({index})"),
            Element::Product(parts) => {
                let parts: Vec<String> = parts.iter().map(ToString::to_string).collect();
                write!(f, "({})", parts.join(", "))
            }
        }
    }
}

impl Element {
    pub fn identity(g: &GroupType) -> Element {
        let n = g.param();
        match g.family() {
            Family::A => Element::A((1..=n + 1).collect()),
            Family::B => Element::B((1..=n as i32).collect()),
            Family::D => Element::D((1..=n as i32).collect()),
            Family::I2 => Element::I2 { m: n, reflection: false, index: 0 },
        }
    }

    /// Identity of a product; a single-factor product yields the bare
    /// factor element rather than a one-tuple.
    pub fn identity_of(g: &ProductGroup) -> Element {
        match g.factors.as_slice() {
            [single] => Element::identity(single),
            fs => Element::Product(fs.iter().map(Element::identity).collect()),
        }
    }

    /// Longest element of an irreducible group.
    pub fn longest(g: &GroupType) -> Element {
        let n = g.param();
        match g.family() {
            Family::A => Element::A((1..=n + 1).rev().collect()),
            Family::B => Element::B((1..=n as i32).map(|v| -v).collect()),
            Family::D => {
                let mut w: Vec<i32> = (1..=n as i32).map(|v| -v).collect();
                if n % 2 == 1 {
                    w[0] = 1;
                }
                Element::D(w)
            }
            Family::I2 => {
                if n.is_multiple_of(2) {
                    Element::I2 { m: n, reflection: false, index: n / 2 }
                } else {
                    Element::I2 { m: n, reflection: true, index: (n - 1) / 2 }
                }
            }
        }
    }

    pub fn rank(&self) -> usize {
        match self {
            Element::A(p) => p.len() - 1,
            Element::B(w) | Element::D(w) => w.len(),
            Element::I2 { .. } => 2,
            Element::Product(fs) => fs.iter().map(Element::rank).sum(),
        }
    }

    /// Checks the representation invariants.
    pub fn is_valid(&self) -> bool {
        match self {
            Element::A(p) => is_permutation(p.iter().map(|&v| v as usize), p.len()),
            Element::B(w) => is_permutation(w.iter().map(|v| v.unsigned_abs() as usize), w.len()),
            Element::D(w) => {
                is_permutation(w.iter().map(|v| v.unsigned_abs() as usize), w.len())
                    && w.iter().filter(|&&v| v < 0).count() % 2 == 0
            }
            Element::I2 { m, index, .. } => *m >= 3 && index < m,
            Element::Product(fs) => fs.iter().all(Element::is_valid),
        }
    }

    /// Returns `w s` (right) or `s w` (left) for the simple reflection with
    /// index `s`. On products, generators are numbered consecutively across
    /// factors.
    pub fn generator_apply(&self, s: usize, side: Side) -> Element {
        let mut out = self.clone();
        out.apply_in_place(s, side);
        out
    }

    pub fn apply_in_place(&mut self, s: usize, side: Side) {
        match self {
            Element::A(p) => {
                assert!(s + 1 < p.len(), "generator index out of range");
                match side {
                    Side::Right => p.swap(s, s + 1),
                    Side::Left => {
                        let (a, b) = (s as u32 + 1, s as u32 + 2);
                        for v in p.iter_mut() {
                            if *v == a {
                                *v = b;
                            } else if *v == b {
                                *v = a;
                            }
                        }
                    }
                }
            }
            Element::B(w) => {
                assert!(s < w.len(), "generator index out of range");
                match (side, s) {
                    (Side::Right, 0) => w[0] = -w[0],
                    (Side::Right, _) => w.swap(s - 1, s),
                    (Side::Left, 0) => {
                        for v in w.iter_mut() {
                            if v.abs() == 1 {
                                *v = -*v;
                            }
                        }
                    }
                    (Side::Left, _) => swap_values(w, s as i32, s as i32 + 1),
                }
            }
            Element::D(w) => {
                assert!(s < w.len(), "generator index out of range");
                match (side, s) {
                    (Side::Right, 0) => {
                        let (a, b) = (w[0], w[1]);
                        w[0] = -b;
                        w[1] = -a;
                    }
                    (Side::Right, _) => w.swap(s - 1, s),
                    (Side::Left, 0) => {
                        for v in w.iter_mut() {
                            *v = match *v {
                                1 => -2,
                                2 => -1,
                                -1 => 2,
                                -2 => 1,
                                x => x,
                            };
                        }
                    }
                    (Side::Left, _) => swap_values(w, s as i32, s as i32 + 1),
                }
            }
            Element::I2 { m, reflection, index } => {
                assert!(s < 2, "generator index out of range");
                let m = *m as i64;
                let k = *index as i64;
                let (refl, idx) = match (side, *reflection, s) {
                    (Side::Right, false, 0) => (true, k),
                    (Side::Right, false, _) => (true, k - 1),
                    (Side::Right, true, 0) => (false, k),
                    (Side::Right, true, _) => (false, k + 1),
                    (Side::Left, false, 0) => (true, -k),
                    (Side::Left, false, _) => (true, -k - 1),
                    (Side::Left, true, 0) => (false, -k),
                    (Side::Left, true, _) => (false, -k - 1),
                };
                *reflection = refl;
                *index = idx.rem_euclid(m) as u32;
            }
            Element::Product(fs) => {
                let mut s = s;
                for f in fs.iter_mut() {
                    let r = f.rank();
                    if s < r {
                        f.apply_in_place(s, side);
                        return;
                    }
                    s -= r;
                }
                panic!("generator index out of range");
            }
        }
    }

    pub fn inverse(&self) -> Element {
        match self {
            Element::A(p) => {
                let mut q = vec![0u32; p.len()];
                for (i, &v) in p.iter().enumerate() {
                    q[v as usize - 1] = i as u32 + 1;
                }
                Element::A(q)
            }
            Element::B(w) => Element::B(signed_inverse(w)),
            Element::D(w) => Element::D(signed_inverse(w)),
            Element::I2 { m, reflection, index } => {
                if *reflection {
                    self.clone()
                } else {
                    Element::I2 { m: *m, reflection: false, index: (m - index) % m }
                }
            }
            Element::Product(fs) => Element::Product(fs.iter().map(Element::inverse).collect()),
        }
    }

    /// Right descent set, as 0-based generator indices.
    pub fn descent_set(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.push_descents(0, &mut out);
        out
    }

    fn push_descents(&self, offset: usize, out: &mut Vec<usize>) {
        match self {
            Element::A(p) => out.extend((0..p.len() - 1).filter(|&i| p[i] > p[i + 1]).map(|i| i + offset)),
            Element::B(w) => {
                if w[0] < 0 {
                    out.push(offset);
                }
                out.extend((1..w.len()).filter(|&i| w[i - 1] > w[i]).map(|i| i + offset));
            }
            Element::D(w) => {
                if w.len() >= 2 && -w[1] > w[0] {
                    out.push(offset);
                }
                out.extend((1..w.len()).filter(|&i| w[i - 1] > w[i]).map(|i| i + offset));
            }
            Element::I2 { m, reflection, index } => {
                // right descents: s0 iff l(w s0) < l(w); lengths are
                // rot(k) -> 2 min(k, m-k), refl(k) -> from the dihedral word
                let len = |refl: bool, k: u32| dihedral_length(*m, refl, k);
                let here = len(*reflection, *index);
                for s in 0..2 {
                    let mut e = self.clone();
                    e.apply_in_place(s, Side::Right);
                    if let Element::I2 { reflection: r2, index: k2, .. } = e {
                        if len(r2, k2) < here {
                            out.push(offset + s);
                        }
                    }
                }
            }
            Element::Product(fs) => {
                let mut off = offset;
                for f in fs {
                    f.push_descents(off, out);
                    off += f.rank();
                }
            }
        }
    }

    /// Number of right descents.
    pub fn des(&self) -> u32 {
        match self {
            Element::A(p) => p.windows(2).filter(|w| w[0] > w[1]).count() as u32,
            Element::B(w) => (w[0] < 0) as u32 + w.windows(2).filter(|p| p[0] > p[1]).count() as u32,
            Element::D(w) => (-w[1] > w[0]) as u32 + w.windows(2).filter(|p| p[0] > p[1]).count() as u32,
            Element::I2 { m, reflection, index } => {
                if !*reflection && *index == 0 {
                    0
                } else if self == &Element::longest(&GroupType::new_unchecked(Family::I2, *m)) {
                    2
                } else {
                    1
                }
            }
            Element::Product(fs) => fs.iter().map(Element::des).sum(),
        }
    }

    /// Number of left descents, `des(w^{-1})`.
    pub fn ides(&self) -> u32 {
        match self {
            Element::I2 { .. } => self.des(),
            Element::Product(fs) => fs.iter().map(Element::ides).sum(),
            _ => self.inverse().des(),
        }
    }

    /// The two-sided descent statistic `des(w) + des(w^{-1})`.
    pub fn t(&self) -> u32 {
        self.des() + self.ides()
    }
}

/// Coxeter length of a dihedral element in I2(m).
///
/// With `r = s0 s1`, `rot(k)` has length `2 min(k, m-k)`; `refl(k) = r^k s0`
/// is the alternating word `s0 s1 ... s0` of length `2k+1` read one way or
/// `s1 s0 ... s1` of length `2(m-k)-1` the other way.
pub fn dihedral_length(m: u32, reflection: bool, k: u32) -> u32 {
    if reflection {
        (2 * k + 1).min(2 * (m - k) - 1)
    } else {
        2 * k.min(m - k)
    }
}

fn swap_values(w: &mut [i32], a: i32, b: i32) {
    for v in w.iter_mut() {
        let sign = v.signum();
        if v.abs() == a {
            *v = sign * b;
        } else if v.abs() == b {
            *v = sign * a;
        }
    }
}

fn signed_inverse(w: &[i32]) -> Vec<i32> {
    let mut q = vec![0i32; w.len()];
    for (i, &v) in w.iter().enumerate() {
        q[v.unsigned_abs() as usize - 1] = (i as i32 + 1) * v.signum();
    }
    q
}

fn is_permutation(vals: impl Iterator<Item = usize>, n: usize) -> bool {
    let mut seen = vec![false; n + 1];
    for v in vals {
        if v == 0 || v > n || seen[v] {
            return false;
        }
        seen[v] = true;
    }
    true
}
