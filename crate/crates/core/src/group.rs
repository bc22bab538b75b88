//! Finite Coxeter groups of types A, B, D and I2, and their products.

use std::collections::{HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    A,
    B,
    D,
    I2,
}

impl Family {
    /// Smallest admissible parameter.
    pub fn min_param(self) -> u32 {
        match self {
            Family::A => 1,
            Family::B => 2,
            Family::D => 4,
            Family::I2 => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::A => "A",
            Family::B => "B",
            Family::D => "D",
            Family::I2 => "I2",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" => Ok(Family::A),
            "B" => Ok(Family::B),
            "D" => Ok(Family::D),
            "I2" => Ok(Family::I2),
            other => Err(Error::InvalidArgument(format!("unknown family `{other}`"))),
        }
    }
}

/// An irreducible finite Coxeter group. `param` is the rank for A/B/D and
/// the order parameter `m` for I2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupType {
    family: Family,
    param: u32,
}

impl GroupType {
    pub fn new(family: Family, param: u32) -> Result<Self> {
        if param < family.min_param() {
            let what = match family {
                Family::I2 => "m",
                _ => "n",
            };
            return Err(Error::Range {
                atom: format!("{family}:{param}"),
                msg: format!("{family} requires {what} >= {}", family.min_param()),
            });
        }
        Ok(GroupType { family, param })
    }

    /// Builds a type without the admissibility check. Meant for the rank-1
    /// base case `B:1` of the type-B recursions, which is not admissible as
    /// a group type but obeys the same descent rules.
    pub fn new_unchecked(family: Family, param: u32) -> Self {
        GroupType { family, param }
    }

    pub fn a(n: u32) -> Result<Self> {
        Self::new(Family::A, n)
    }

    pub fn b(n: u32) -> Result<Self> {
        Self::new(Family::B, n)
    }

    pub fn d(n: u32) -> Result<Self> {
        Self::new(Family::D, n)
    }

    pub fn i2(m: u32) -> Result<Self> {
        Self::new(Family::I2, m)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn param(&self) -> u32 {
        self.param
    }

    pub fn rank(&self) -> u32 {
        match self.family {
            Family::I2 => 2,
            _ => self.param,
        }
    }

    pub fn order(&self) -> BigUint {
        let n = self.param;
        match self.family {
            Family::A => factorial(n + 1),
            Family::B => (BigUint::one() << n) * factorial(n),
            Family::D => (BigUint::one() << (n - 1)) * factorial(n),
            Family::I2 => BigUint::from(2 * n),
        }
    }

    pub fn order_f64(&self) -> f64 {
        let n = self.param as f64;
        match self.family {
            Family::A => ln_factorial(self.param + 1).exp(),
            Family::B => (n * std::f64::consts::LN_2 + ln_factorial(self.param)).exp(),
            Family::D => ((n - 1.0) * std::f64::consts::LN_2 + ln_factorial(self.param)).exp(),
            Family::I2 => 2.0 * n,
        }
    }

    pub fn coxeter_matrix(&self) -> CoxeterMatrix {
        let r = self.rank() as usize;
        let mut m = vec![vec![2u32; r]; r];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 1;
        }
        let mut link = |i: usize, j: usize, v: u32| {
            m[i][j] = v;
            m[j][i] = v;
        };
        match self.family {
            Family::A => (0..r - 1).for_each(|i| link(i, i + 1, 3)),
            Family::B => {
                link(0, 1, 4);
                (1..r - 1).for_each(|i| link(i, i + 1, 3));
            }
            Family::D => {
                link(0, 2, 3);
                (1..r - 1).for_each(|i| link(i, i + 1, 3));
            }
            Family::I2 => link(0, 1, self.param),
        }
        CoxeterMatrix { entries: m }
    }
}

impl fmt::Display for GroupType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.family, self.param)
    }
}

fn factorial(n: u32) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * k)
}

fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// A finite Coxeter group given by its irreducible factors, in order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct ProductGroup {
    pub factors: Vec<GroupType>,
}

impl ProductGroup {
    pub fn new(factors: Vec<GroupType>) -> Self {
        ProductGroup { factors }
    }

    pub fn single(g: GroupType) -> Self {
        ProductGroup { factors: vec![g] }
    }

    pub fn rank(&self) -> u64 {
        self.factors.iter().map(|g| g.rank() as u64).sum()
    }

    pub fn order(&self) -> BigUint {
        self.factors.iter().map(GroupType::order).product()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn coxeter_matrix(&self) -> CoxeterMatrix {
        let r = self.rank() as usize;
        let mut m = vec![vec![2u32; r]; r];
        let mut off = 0;
        for g in &self.factors {
            let cm = g.coxeter_matrix();
            let k = g.rank() as usize;
            for i in 0..k {
                for j in 0..k {
                    m[off + i][off + j] = cm.entries[i][j];
                }
            }
            off += k;
        }
        CoxeterMatrix { entries: m }
    }
}

impl fmt::Display for ProductGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return f.write_str("1");
        }
        let parts: Vec<String> = self.factors.iter().map(|g| g.to_string()).collect();
        f.write_str(&parts.join(" x "))
    }
}

impl FromStr for ProductGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_group_spec(s)
    }
}

impl From<GroupType> for ProductGroup {
    fn from(g: GroupType) -> Self {
        ProductGroup::single(g)
    }
}

/// Parses a group description such as `"B:4 x I2:5^2"`.
///
/// Grammar (whitespace insignificant):
///
/// ```text
/// product := term ("x" term)*
/// term    := atom ("^" uint)?
/// atom    := ("A" | "B" | "D") ":" uint | "I2:" uint
/// ```
pub fn parse_group_spec(text: &str) -> Result<ProductGroup> {
    let toks: Vec<(usize, char)> = text.char_indices().filter(|(_, c)| !c.is_whitespace()).collect();
    let mut p = GroupParser { toks, pos: 0, len: text.len() };
    let mut factors = Vec::new();
    loop {
        p.term(&mut factors)?;
        match p.peek() {
            None => break,
            Some('x') => p.pos += 1,
            Some(c) => return Err(p.err(format!("expected `x` or end of input, found `{c}`"))),
        }
    }
    Ok(ProductGroup { factors })
}

struct GroupParser {
    toks: Vec<(usize, char)>,
    pos: usize,
    len: usize,
}

impl GroupParser {
    fn peek(&self) -> Option<char> {
        self.toks.get(self.pos).map(|t| t.1)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.len, |t| t.0)
    }

    fn err(&self, msg: String) -> Error {
        Error::Syntax { pos: self.offset(), msg }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        match self.peek() {
            Some(d) if d == c => {
                self.pos += 1;
                Ok(())
            }
            Some(d) => Err(self.err(format!("expected `{c}`, found `{d}`"))),
            None => Err(self.err(format!("expected `{c}`, found end of input"))),
        }
    }

    fn uint(&mut self) -> Result<u32> {
        let start = self.pos;
        let mut digits = String::new();
        while let Some(c) = self.peek().filter(char::is_ascii_digit) {
            digits.push(c);
            self.pos += 1;
        }
        if digits.is_empty() {
            return Err(self.err("expected an unsigned integer".into()));
        }
        digits.parse().map_err(|_| {
            self.pos = start;
            self.err(format!("integer `{digits}` out of range"))
        })
    }

    fn term(&mut self, out: &mut Vec<GroupType>) -> Result<()> {
        let family = match self.peek() {
            Some('A') => Family::A,
            Some('B') => Family::B,
            Some('D') => Family::D,
            Some('I') => {
                self.pos += 1;
                self.expect('2')?;
                Family::I2
            }
            Some(c) => return Err(self.err(format!("expected a family (A, B, D, I2), found `{c}`"))),
            None => return Err(self.err("expected a family (A, B, D, I2), found end of input".into())),
        };
        if family != Family::I2 {
            self.pos += 1;
        }
        self.expect(':')?;
        let param = self.uint()?;
        let g = GroupType::new(family, param)?;
        let power = if self.peek() == Some('^') {
            self.pos += 1;
            self.uint()?
        } else {
            1
        };
        out.extend(std::iter::repeat_n(g, power as usize));
        Ok(())
    }
}

/// Symmetric matrix of Coxeter exponents `m(s, s')`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoxeterMatrix {
    pub entries: Vec<Vec<u32>>,
}

impl CoxeterMatrix {
    pub fn rank(&self) -> usize {
        self.entries.len()
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.rank();
        for i in 0..r {
            if self.entries[i].len() != r {
                return Err(Error::InvalidArgument("Coxeter matrix is not square".into()));
            }
            if self.entries[i][i] != 1 {
                return Err(Error::InvalidArgument("Coxeter matrix diagonal must be 1".into()));
            }
            for j in 0..r {
                if i != j && self.entries[i][j] < 2 {
                    return Err(Error::InvalidArgument("off-diagonal entries must be >= 2".into()));
                }
                if self.entries[i][j] != self.entries[j][i] {
                    return Err(Error::InvalidArgument("Coxeter matrix is not symmetric".into()));
                }
            }
        }
        Ok(())
    }

    /// Group order obtained by closing the geometric reflection
    /// representation under multiplication. Independent of the
    /// combinatorial element models; intended as a cross-check.
    pub fn order_by_reflections(&self, cap: usize) -> Result<usize> {
        self.validate()?;
        let r = self.rank();
        let bilinear = |i: usize, j: usize| -> f64 {
            -(std::f64::consts::PI / self.entries[i][j] as f64).cos()
        };
        // sigma_s(v) = v - 2 B(e_s, v) e_s, as matrices acting on columns
        let gens: Vec<Vec<f64>> = (0..r)
            .map(|s| {
                let mut m = vec![0.0; r * r];
                for i in 0..r {
                    m[i * r + i] = 1.0;
                }
                for j in 0..r {
                    m[s * r + j] -= 2.0 * bilinear(s, j);
                }
                m
            })
            .collect();
        let key = |m: &[f64]| -> Vec<i64> { m.iter().map(|x| (x * 1e6).round() as i64).collect() };
        let mut ident = vec![0.0; r * r];
        for i in 0..r {
            ident[i * r + i] = 1.0;
        }
        let mut seen = HashSet::new();
        seen.insert(key(&ident));
        let mut queue = VecDeque::from([ident]);
        while let Some(m) = queue.pop_front() {
            for g in &gens {
                let mut prod = vec![0.0; r * r];
                for i in 0..r {
                    for k in 0..r {
                        let a = m[i * r + k];
                        if a != 0.0 {
                            for j in 0..r {
                                prod[i * r + j] += a * g[k * r + j];
                            }
                        }
                    }
                }
                if seen.insert(key(&prod)) {
                    if seen.len() > cap {
                        return Err(Error::cap("reflection-group closure", seen.len(), cap));
                    }
                    queue.push_back(prod);
                }
            }
        }
        Ok(seen.len())
    }
}
