//! Exact arithmetic in a discrete valuation ring `O` with uniformizer `ϖ`.
//!
//! Two interchangeable backends are provided:
//!
//! * [`RationalDvr`]: `Z_(p)`, rationals whose denominator is prime to `p`, with `ϖ = p`;
//! * [`PolyDvr`]: `F_q[t]_(t)`, rational functions over a prime field whose denominator
//!   does not vanish at `t = 0`, with `ϖ = t`.
//!
//! Everything downstream is generic over the [`Dvr`] trait and only ever looks at
//! valuations and exact ring operations.

mod poly;
mod rational;

use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use poly::{PolyDvr, RatFunc};
pub use rational::RationalDvr;

/// Order of vanishing of an element; `Infinite` is reserved for zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Valuation {
    Finite(u32),
    Infinite,
}

impl Valuation {
    pub fn is_finite(self) -> bool {
        matches!(self, Valuation::Finite(_))
    }

    pub fn finite(self) -> Option<u32> {
        match self {
            Valuation::Finite(k) => Some(k),
            Valuation::Infinite => None,
        }
    }
}

impl Ord for Valuation {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Valuation::Finite(a), Valuation::Finite(b)) => a.cmp(b),
            (Valuation::Finite(_), Valuation::Infinite) => Ordering::Less,
            (Valuation::Infinite, Valuation::Finite(_)) => Ordering::Greater,
            (Valuation::Infinite, Valuation::Infinite) => Ordering::Equal,
        }
    }
}

impl PartialOrd for Valuation {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for Valuation {
    type Output = Valuation;

    fn add(self, rhs: Valuation) -> Valuation {
        match (self, rhs) {
            (Valuation::Finite(a), Valuation::Finite(b)) => Valuation::Finite(a + b),
            _ => Valuation::Infinite,
        }
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(k) => write!(f, "{k}"),
            Valuation::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DvrError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("not divisible: ord(x) = {numerator} < ord(y) = {denominator}")]
    NotDivisible {
        numerator: Valuation,
        denominator: Valuation,
    },
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("element `{0}` does not lie in the valuation ring")]
    NotInRing(String),
    #[error("cannot parse element `{0}`: {1}")]
    Parse(String, String),
    #[error("`{0}` is not a unit (its valuation is positive)")]
    NotUnit(String),
}

/// A discrete valuation ring with exact arithmetic.
///
/// Elements are plain values; the ring object carries the parameters (the prime `p`, or
/// the field size `q`) needed to interpret them.
pub trait Dvr: Clone + fmt::Debug + Send + Sync + 'static {
    type Elem: Clone + PartialEq + Eq + fmt::Debug + Send + Sync;

    /// Backend descriptor in `--backend` syntax, e.g. `rational:5`.
    fn label(&self) -> String;

    /// Residue characteristic.
    fn characteristic(&self) -> u64;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn from_i64(&self, k: i64) -> Self::Elem;
    fn add(&self, x: &Self::Elem, y: &Self::Elem) -> Self::Elem;
    fn sub(&self, x: &Self::Elem, y: &Self::Elem) -> Self::Elem;
    fn mul(&self, x: &Self::Elem, y: &Self::Elem) -> Self::Elem;
    fn neg(&self, x: &Self::Elem) -> Self::Elem;

    fn is_zero(&self, x: &Self::Elem) -> bool {
        *x == self.zero()
    }

    fn ord(&self, x: &Self::Elem) -> Valuation;

    /// `ϖ^k`.
    fn uniformizer_power(&self, k: u32) -> Self::Elem;

    /// The unique `z` with `z * y = x`; requires `y != 0` and `ord(x) >= ord(y)`.
    fn divide_exact(&self, x: &Self::Elem, y: &Self::Elem) -> Result<Self::Elem, DvrError>;

    /// A unit drawn from a small deterministic family; consumes `rng` only.
    fn random_unit<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::Elem;

    fn parse_elem(&self, s: &str) -> Result<Self::Elem, DvrError>;

    fn format_elem(&self, x: &Self::Elem) -> String;

    /// `ϖ^k · unit`.
    fn element(&self, k: u32, unit: &Self::Elem) -> Self::Elem {
        self.mul(&self.uniformizer_power(k), unit)
    }

    fn product<'a, I>(&self, factors: I) -> Self::Elem
    where
        I: IntoIterator<Item = &'a Self::Elem>,
        Self::Elem: 'a,
    {
        factors
            .into_iter()
            .fold(self.one(), |acc, f| self.mul(&acc, f))
    }

    /// Parses an element and checks that it is a unit.
    fn parse_unit(&self, s: &str) -> Result<Self::Elem, DvrError> {
        let u = self.parse_elem(s)?;
        match self.ord(&u) {
            Valuation::Finite(0) => Ok(u),
            _ => Err(DvrError::NotUnit(s.to_string())),
        }
    }
}

/// Runtime backend selection, as written on the command line (`rational:5`, `poly:5`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BackendSpec {
    Rational { p: u64 },
    Poly { q: u64 },
}

impl Default for BackendSpec {
    fn default() -> Self {
        BackendSpec::Rational { p: 5 }
    }
}

impl BackendSpec {
    pub fn characteristic(self) -> u64 {
        match self {
            BackendSpec::Rational { p } => p,
            BackendSpec::Poly { q } => q,
        }
    }

    /// The other backend with the same residue characteristic.
    pub fn counterpart(self) -> BackendSpec {
        match self {
            BackendSpec::Rational { p } => BackendSpec::Poly { q: p },
            BackendSpec::Poly { q } => BackendSpec::Rational { p: q },
        }
    }
}

impl fmt::Display for BackendSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendSpec::Rational { p } => write!(f, "rational:{p}"),
            BackendSpec::Poly { q } => write!(f, "poly:{q}"),
        }
    }
}

impl FromStr for BackendSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, param) = s
            .split_once(':')
            .ok_or_else(|| format!("backend `{s}` must look like rational:<p> or poly:<q>"))?;
        let value: u64 = param
            .trim()
            .parse()
            .map_err(|_| format!("backend parameter `{param}` is not a positive integer"))?;
        if !is_prime(value) {
            return Err(format!("backend parameter {value} is not a prime"));
        }
        match kind.trim() {
            "rational" => Ok(BackendSpec::Rational { p: value }),
            "poly" => Ok(BackendSpec::Poly { q: value }),
            other => Err(format!(
                "unknown backend kind `{other}` (expected rational or poly)"
            )),
        }
    }
}

impl Serialize for BackendSpec {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BackendSpec {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub(crate) fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Calls `$body` with `$dvr` bound to the concrete backend named by `$spec`.
#[macro_export]
macro_rules! with_backend {
    ($spec:expr, |$dvr:ident| $body:expr) => {
        match $spec {
            $crate::dvr::BackendSpec::Rational { p } => {
                let $dvr = $crate::dvr::RationalDvr::new(p).expect("validated prime");
                $body
            }
            $crate::dvr::BackendSpec::Poly { q } => {
                let $dvr = $crate::dvr::PolyDvr::new(q).expect("validated prime");
                $body
            }
        }
    };
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinity_dominates() {
        assert!(Valuation::Infinite > Valuation::Finite(u32::MAX));
        assert_eq!(
            Valuation::Finite(2) + Valuation::Infinite,
            Valuation::Infinite
        );
        assert_eq!(
            Valuation::Finite(2) + Valuation::Finite(3),
            Valuation::Finite(5)
        );
        assert_eq!(
            Valuation::Finite(1).min(Valuation::Infinite),
            Valuation::Finite(1)
        );
    }

    #[test]
    fn backend_spec_parsing() {
        assert_eq!("rational:5".parse(), Ok(BackendSpec::Rational { p: 5 }));
        assert_eq!("poly:7".parse(), Ok(BackendSpec::Poly { q: 7 }));
        assert!("poly:4".parse::<BackendSpec>().is_err());
        assert!("padic:5".parse::<BackendSpec>().is_err());
        assert!("rational".parse::<BackendSpec>().is_err());
        assert_eq!(
            BackendSpec::Rational { p: 3 }.counterpart(),
            BackendSpec::Poly { q: 3 }
        );
        assert_eq!(BackendSpec::Poly { q: 3 }.to_string(), "poly:3");
    }
}
