//! Exact distributions, moments and central-limit diagnostics for the
//! two-sided descent statistic `t(w) = des(w) + des(w^{-1})` on finite
//! Coxeter groups of types A, B, D, I2 and their products.
//!
//! The probability and moment code is generic over [`Scalar`]; the aliases
//! below fix the two instantiations used throughout: exact rationals and
//! `f64`.

pub mod cache;
pub mod clt;
pub mod complex;
pub mod config;
pub mod element;
pub mod enumerate;
pub mod error;
pub mod expr;
pub mod group;
pub mod joint;
pub mod moments;
pub mod normal;
pub mod pmf;
pub mod sample;
pub mod scalar;
pub mod sequence;

pub use cache::DistCache;
pub use config::Config;
pub use element::{Element, Side};
pub use error::{Error, Result};
pub use group::{parse_group_spec, CoxeterMatrix, Family, GroupType, ProductGroup};
pub use joint::{JointCountMatrix, JointDist, JointPmf, JointSource};
pub use moments::MomentKey;
pub use pmf::IntegerPmf;
pub use scalar::Scalar;
pub use sequence::SequenceSpec;

/// Exact rational numbers.
pub type Rational = num_rational::BigRational;

pub type ExactPmf = IntegerPmf<Rational>;
pub type FloatPmf = IntegerPmf<f64>;
pub type ExactJointPmf = JointPmf<Rational>;
pub type FloatJointPmf = JointPmf<f64>;
