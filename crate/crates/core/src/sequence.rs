//! Sequences of groups `n -> W_n` described as JSON.
//!
//! ```json
//! {"terms": [{"family": "A", "rank": "ceil(n / 2^i)", "multiplicity": "1",
//!             "index": {"var": "i", "from": "1", "to": "ceil(log2(n))"}}]}
//! ```
//!
//! All expressions are rounded up to integers. For an indexed dihedral term
//! the leading indices whose parameter falls below 3 are skipped, and the
//! skip is recorded in the instantiation notes; an invalid parameter after
//! the first valid one is an error.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{parse_expr, Expr};
use crate::group::{Family, GroupType, ProductGroup};

/// Largest number of factors a single instantiation may produce.
pub const MAX_FACTORS: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexJson {
    pub var: String,
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermJson {
    pub family: String,
    pub rank: String,
    #[serde(default = "one")]
    pub multiplicity: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<IndexJson>,
}

fn one() -> String {
    "1".into()
}

/// Wire form of a sequence specification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub terms: Vec<TermJson>,
}

#[derive(Debug, Clone, PartialEq)]
struct Index {
    var: String,
    from: Expr,
    to: Expr,
}

#[derive(Debug, Clone, PartialEq)]
struct Term {
    family: Family,
    rank: Expr,
    multiplicity: Expr,
    index: Option<Index>,
}

/// A validated sequence specification.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceSpec {
    source: SequenceJson,
    terms: Vec<Term>,
}

/// Result of evaluating a spec at one `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub n: u64,
    pub group: ProductGroup,
    pub notes: Vec<String>,
}

fn spec_err(term: usize, field: &str, e: Error) -> Error {
    Error::Spec(format!("term {term}, {field}: {e}"))
}

impl SequenceSpec {
    pub fn from_json_value(json: SequenceJson) -> Result<Self> {
        if json.terms.is_empty() {
            return Err(Error::Spec("at least one term is required".into()));
        }
        let mut terms = Vec::with_capacity(json.terms.len());
        for (t, raw) in json.terms.iter().enumerate() {
            let family: Family = raw.family.parse().map_err(|e| spec_err(t, "family", e))?;
            let mut vars = vec!["n"];
            let index = match &raw.index {
                Some(ix) => {
                    let valid = ix.var.chars().all(|c| c.is_ascii_alphabetic())
                        && !ix.var.is_empty()
                        && !["n", "floor", "ceil", "log2", "sqrt"].contains(&ix.var.as_str());
                    if !valid {
                        return Err(Error::Spec(format!("term {t}: invalid index variable `{}`", ix.var)));
                    }
                    let from = parse_expr(&ix.from, &vars).map_err(|e| spec_err(t, "index.from", e))?;
                    let to = parse_expr(&ix.to, &vars).map_err(|e| spec_err(t, "index.to", e))?;
                    Some(Index { var: ix.var.clone(), from, to })
                }
                None => None,
            };
            if let Some(ix) = &raw.index {
                vars.push(&ix.var);
            }
            let rank = parse_expr(&raw.rank, &vars).map_err(|e| spec_err(t, "rank", e))?;
            let multiplicity = parse_expr(&raw.multiplicity, &vars).map_err(|e| spec_err(t, "multiplicity", e))?;
            terms.push(Term { family, rank, multiplicity, index });
        }
        Ok(SequenceSpec { source: json, terms })
    }

    pub fn to_json(&self) -> &SequenceJson {
        &self.source
    }

    pub fn name(&self) -> Option<&str> {
        self.source.name.as_deref()
    }

    /// The group `W_n`.
    pub fn instantiate(&self, n: u64) -> Result<Instance> {
        if n == 0 {
            return Err(Error::Instantiation { n, msg: "n must be at least 1".into() });
        }
        let fail = |msg: String| Error::Instantiation { n, msg };
        let n_i64 = i64::try_from(n).map_err(|_| fail("n too large".into()))?;
        let mut factors = Vec::new();
        let mut notes = Vec::new();
        for (t, term) in self.terms.iter().enumerate() {
            let mut env: HashMap<&str, i64> = HashMap::from([("n", n_i64)]);
            let eval = |e: &Expr, env: &HashMap<&str, i64>, what: &str| -> Result<BigInt> {
                e.eval_ceil(env).map_err(|err| fail(format!("term {t}, {what}: {err}")))
            };
            let indices: Vec<Option<i64>> = match &term.index {
                None => vec![None],
                Some(ix) => {
                    let lo = eval(&ix.from, &env, "index.from")?;
                    let hi = eval(&ix.to, &env, "index.to")?;
                    let (lo, hi) = match (lo.to_i64(), hi.to_i64()) {
                        (Some(lo), Some(hi)) => (lo, hi),
                        _ => return Err(fail(format!("term {t}: index range out of bounds"))),
                    };
                    if hi >= lo && (hi - lo) as u64 >= MAX_FACTORS {
                        return Err(Error::cap(format!("index range of term {t} at n={n}"), hi - lo + 1, MAX_FACTORS));
                    }
                    (lo..=hi).map(Some).collect()
                }
            };
            let mut seen_valid = false;
            let mut skipped = Vec::new();
            for i in indices {
                if let (Some(i), Some(ix)) = (i, &term.index) {
                    env.insert(ix.var.as_str(), i);
                }
                let param = eval(&term.rank, &env, "rank")?;
                let mult = eval(&term.multiplicity, &env, "multiplicity")?;
                if mult.is_negative() {
                    return Err(fail(format!("term {t}: negative multiplicity {mult}")));
                }
                if mult.is_zero() {
                    continue;
                }
                let group = param
                    .to_u32()
                    .ok_or_else(|| format!("parameter {param} out of range"))
                    .and_then(|p| GroupType::new(term.family, p).map_err(|e| e.to_string()));
                let group = match group {
                    Ok(g) => g,
                    Err(_) if term.family == Family::I2 && term.index.is_some() && !seen_valid => {
                        skipped.push(i.unwrap());
                        continue;
                    }
                    Err(msg) => {
                        let at = i.map(|i| format!(" (index {i})")).unwrap_or_default();
                        return Err(fail(format!("term {t}{at}: {msg}")));
                    }
                };
                seen_valid = true;
                let mult = mult.to_u64().filter(|&m| factors.len() as u64 + m <= MAX_FACTORS).ok_or_else(|| {
                    Error::cap(format!("factor count at n={n}"), format!("{}+{mult}", factors.len()), MAX_FACTORS)
                })?;
                factors.extend(std::iter::repeat_n(group, mult as usize));
            }
            if let (Some(first), Some(last)) = (skipped.first(), skipped.last()) {
                let var = &term.index.as_ref().unwrap().var;
                notes.push(format!(
                    "term {t}: skipped {var} in {first}..={last} (dihedral parameter below 3)"
                ));
            }
        }
        Ok(Instance { n, group: ProductGroup::new(factors), notes })
    }
}

impl fmt::Display for SequenceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(name) = &self.source.name {
            return f.write_str(name);
        }
        let parts: Vec<String> = self
            .source
            .terms
            .iter()
            .map(|t| {
                let mut s = format!("{}({})", t.family, t.rank);
                if t.multiplicity != "1" {
                    s = format!("{s}^({})", t.multiplicity);
                }
                if let Some(ix) = &t.index {
                    s = format!("prod[{}={}..{}] {s}", ix.var, ix.from, ix.to);
                }
                s
            })
            .collect();
        f.write_str(&parts.join(" x "))
    }
}

/// Parses and validates a JSON specification.
pub fn parse_sequence_spec(doc: &str) -> Result<SequenceSpec> {
    let json: SequenceJson = serde_json::from_str(doc).map_err(|e| Error::Spec(e.to_string()))?;
    SequenceSpec::from_json_value(json)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factors(spec: &str, n: u64) -> String {
        parse_sequence_spec(spec).unwrap().instantiate(n).unwrap().group.to_string()
    }

    #[test]
    fn plain_sequence() {
        let s = r#"{"terms":[{"family":"A","rank":"n","multiplicity":"1"}]}"#;
        assert_eq!(factors(s, 5), "A:5");
    }

    #[test]
    fn multiplicity_defaults_to_one_and_powers_expand() {
        let s = r#"{"terms":[{"family":"B","rank":"sqrt(n)","multiplicity":"sqrt(n)"}]}"#;
        assert_eq!(factors(s, 16), "B:4 x B:4 x B:4 x B:4");
        let s = r#"{"terms":[{"family":"D","rank":"n"}]}"#;
        assert_eq!(factors(s, 6), "D:6");
    }

    #[test]
    fn dihedral_start_is_adjusted_and_logged() {
        let s = r#"{"terms":[{"family":"I2","rank":"i^2","index":{"var":"i","from":"1","to":"n"}}]}"#;
        let inst = parse_sequence_spec(s).unwrap().instantiate(3).unwrap();
        assert_eq!(inst.group.to_string(), "I2:4 x I2:9");
        assert_eq!(inst.notes.len(), 1);
        assert!(inst.notes[0].contains("1..=1"));
        let s = r#"{"terms":[{"family":"I2","rank":"i","index":{"var":"i","from":"1","to":"n"}}]}"#;
        let inst = parse_sequence_spec(s).unwrap().instantiate(5).unwrap();
        assert_eq!(inst.group.to_string(), "I2:3 x I2:4 x I2:5");
        assert!(inst.notes[0].contains("1..=2"));
    }

    #[test]
    fn halving_product() {
        let s = r#"{"terms":[{"family":"A","rank":"ceil(n/2^i)","multiplicity":"1",
                   "index":{"var":"i","from":"1","to":"ceil(log2(n))"}}]}"#;
        assert_eq!(factors(s, 10), "A:5 x A:3 x A:2 x A:1");
        assert_eq!(factors(s, 64), "A:32 x A:16 x A:8 x A:4 x A:2 x A:1");
    }

    #[test]
    fn invalid_rank_is_an_instantiation_error() {
        let s = r#"{"terms":[{"family":"A","rank":"n-5","multiplicity":"1"}]}"#;
        let err = parse_sequence_spec(s).unwrap().instantiate(3).unwrap_err();
        assert!(matches!(err, Error::Instantiation { n: 3, .. }), "{err}");
        // invalid dihedral parameters after a valid one are not skipped
        let s = r#"{"terms":[{"family":"I2","rank":"6-i","index":{"var":"i","from":"1","to":"n"}}]}"#;
        assert!(parse_sequence_spec(s).unwrap().instantiate(5).is_err());
    }

    #[test]
    fn schema_violations() {
        for bad in [
            r#"{"terms":[]}"#,
            r#"{"terms":[{"family":"E","rank":"n"}]}"#,
            r#"{"terms":[{"family":"A","rank":"n+k"}]}"#,
            r#"{"terms":[{"family":"A","rank":"n","extra":1}]}"#,
            r#"{"terms":[{"family":"A","rank":"(n"}]}"#,
            r#"{"terms":[{"family":"A","rank":"n","index":{"var":"n","from":"1","to":"2"}}]}"#,
            r#"not json"#,
        ] {
            assert!(matches!(parse_sequence_spec(bad), Err(Error::Spec(_))), "{bad}");
        }
    }

    #[test]
    fn zero_multiplicity_drops_term() {
        let s = r#"{"terms":[{"family":"A","rank":"3","multiplicity":"n-1"},{"family":"I2","rank":"n^2+2"}]}"#;
        assert_eq!(factors(s, 1), "I2:3");
    }
}
