//! The ring family `A_Σ = O⟦x, y, t⟧/(x_i y_i, x_j : j ∉ Σ)`, its component ideals, and
//! `O`-points `v = (a, b, c)` with their stratification.
//!
//! `T` is `{1, …, n}`; indices are 1-based everywhere in the public API.

use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dvr::{Dvr, Valuation};
use crate::rng;

/// Largest supported `n`; subsets are stored as `u32` bitmasks.
pub const MAX_N: usize = 30;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RingError {
    #[error("instance needs n >= 1 (got {0})")]
    EmptyT(usize),
    #[error("n = {0} exceeds the supported maximum {MAX_N}")]
    TooLarge(usize),
    #[error("point has {got} {coord}-coordinates, instance expects {expected}")]
    Dimension {
        coord: char,
        got: usize,
        expected: usize,
    },
    #[error("coordinate {coord}{index} has valuation 0; points must lie in ϖ(O)")]
    NotInMaximalIdeal { coord: char, index: usize },
    #[error("a{index}·b{index} ≠ 0: the point is not on Spec A")]
    NotOnSpecA { index: usize },
    #[error("index {index} outside T = {{1,…,{n}}}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("empty valuation range")]
    EmptyRange,
    #[error("cannot parse subset `{0}`")]
    SubsetSyntax(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub n: usize,
    pub g: usize,
}

impl Instance {
    pub fn new(n: usize, g: usize) -> Result<Self, RingError> {
        if n == 0 {
            return Err(RingError::EmptyT(n));
        }
        if n > MAX_N {
            return Err(RingError::TooLarge(n));
        }
        Ok(Self { n, g })
    }

    /// Height of every `p_v`: `n + g`.
    pub fn height(&self) -> usize {
        self.n + self.g
    }

    pub fn full(&self) -> SigmaSet {
        SigmaSet::full(self.n)
    }

    pub fn subsets(&self) -> impl Iterator<Item = SigmaSet> {
        SigmaSet::all(self.n)
    }

    pub fn check_subset(&self, sigma: SigmaSet) -> Result<(), RingError> {
        match sigma.iter().find(|&i| i > self.n) {
            Some(index) => Err(RingError::IndexOutOfRange { index, n: self.n }),
            None => Ok(()),
        }
    }
}

/// A subset of `T = {1, …, n}`, as a bitmask (bit `i - 1` for index `i`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct SigmaSet(u32);

impl SigmaSet {
    pub const EMPTY: SigmaSet = SigmaSet(0);

    pub fn from_bits(bits: u32) -> Self {
        SigmaSet(bits)
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn full(n: usize) -> Self {
        assert!(n <= MAX_N);
        SigmaSet(if n == 0 { 0 } else { u32::MAX >> (32 - n) })
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Result<Self, RingError> {
        let mut s = SigmaSet::EMPTY;
        for i in indices {
            if i == 0 || i > MAX_N {
                return Err(RingError::IndexOutOfRange { index: i, n: MAX_N });
            }
            s = s.with(i);
        }
        Ok(s)
    }

    pub fn all(n: usize) -> impl Iterator<Item = SigmaSet> {
        (0..(1u32 << n)).map(SigmaSet)
    }

    pub fn contains(self, i: usize) -> bool {
        (1..=32).contains(&i) && self.0 & (1 << (i - 1)) != 0
    }

    pub fn with(self, i: usize) -> Self {
        SigmaSet(self.0 | (1 << (i - 1)))
    }

    pub fn without(self, i: usize) -> Self {
        SigmaSet(self.0 & !(1 << (i - 1)))
    }

    pub fn is_subset(self, other: SigmaSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn minus(self, other: SigmaSet) -> SigmaSet {
        SigmaSet(self.0 & !other.0)
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (1..=32).filter(move |&i| self.contains(i))
    }

    /// Subsets of `self`, in increasing bitmask order.
    pub fn subsets(self) -> impl Iterator<Item = SigmaSet> {
        let full = self.0;
        let mut next = Some(0u32);
        std::iter::from_fn(move || {
            let cur = next?;
            next = if cur == full {
                None
            } else {
                Some((cur.wrapping_sub(full)) & full)
            };
            Some(SigmaSet(cur))
        })
    }
}

impl fmt::Display for SigmaSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self.iter().map(|i| i.to_string()).collect();
        write!(f, "{{{}}}", items.join(","))
    }
}

/// Accepts `1,2`, `{1,2}`, `[1,2]`, `{}` and `[]`.
impl FromStr for SigmaSet {
    type Err = RingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let inner = t
            .strip_prefix('{')
            .and_then(|r| r.strip_suffix('}'))
            .or_else(|| t.strip_prefix('[').and_then(|r| r.strip_suffix(']')))
            .unwrap_or(t);
        let mut out = SigmaSet::EMPTY;
        for tok in inner.split(',').map(str::trim).filter(|x| !x.is_empty()) {
            let i: usize = tok
                .parse()
                .map_err(|_| RingError::SubsetSyntax(s.to_string()))?;
            if i == 0 || i > MAX_N {
                return Err(RingError::IndexOutOfRange { index: i, n: MAX_N });
            }
            out = out.with(i);
        }
        Ok(out)
    }
}

impl Serialize for SigmaSet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for SigmaSet {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let v = Vec::<usize>::deserialize(deserializer)?;
        SigmaSet::from_indices(v).map_err(serde::de::Error::custom)
    }
}

/// An `O`-point `(a, b, c)` of `Spec A`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OPoint<E> {
    pub a: Vec<E>,
    pub b: Vec<E>,
    pub c: Vec<E>,
}

/// Valuation-level view of a point; `None` is the zero coordinate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PointProfile {
    pub a: Vec<Option<u32>>,
    pub b: Vec<Option<u32>>,
    pub c: Vec<Option<u32>>,
}

impl PointProfile {
    pub fn ord_a(&self, i: usize) -> Option<u32> {
        self.a[i - 1]
    }

    pub fn ord_b(&self, i: usize) -> Option<u32> {
        self.b[i - 1]
    }

    /// Same classification as [`classify`], from valuations alone.
    pub fn stratum(&self) -> Stratum {
        let mut interior = SigmaSet::EMPTY;
        let mut ambiguous = SigmaSet::EMPTY;
        for i in 1..=self.a.len() {
            match (self.a[i - 1], self.b[i - 1]) {
                (None, None) => ambiguous = ambiguous.with(i),
                (Some(_), _) => interior = interior.with(i),
                (None, Some(_)) => {}
            }
        }
        if ambiguous.is_empty() {
            Stratum::Interior(interior)
        } else {
            Stratum::Singular(ambiguous)
        }
    }

    /// Realizes the profile with unit parts drawn from `units`.
    pub fn realize<D: Dvr, R: Rng + ?Sized>(&self, dvr: &D, units: &mut R) -> OPoint<D::Elem> {
        let mut coord = |v: &Option<u32>| match v {
            Some(k) => {
                let u = dvr.random_unit(units);
                dvr.element(*k, &u)
            }
            None => dvr.zero(),
        };
        OPoint {
            a: self.a.iter().map(&mut coord).collect(),
            b: self.b.iter().map(&mut coord).collect(),
            c: self.c.iter().map(&mut coord).collect(),
        }
    }

    /// Realizes the profile with every unit part equal to 1.
    pub fn realize_monomial<D: Dvr>(&self, dvr: &D) -> OPoint<D::Elem> {
        let coord = |v: &Option<u32>| match v {
            Some(k) => dvr.uniformizer_power(*k),
            None => dvr.zero(),
        };
        OPoint {
            a: self.a.iter().map(coord).collect(),
            b: self.b.iter().map(coord).collect(),
            c: self.c.iter().map(coord).collect(),
        }
    }
}

impl<E> OPoint<E> {
    pub fn check_dims(&self, inst: &Instance) -> Result<(), RingError> {
        for (coord, got, expected) in [
            ('a', self.a.len(), inst.n),
            ('b', self.b.len(), inst.n),
            ('c', self.c.len(), inst.g),
        ] {
            if got != expected {
                return Err(RingError::Dimension {
                    coord,
                    got,
                    expected,
                });
            }
        }
        Ok(())
    }
}

impl<E: Clone> OPoint<E> {
    pub fn profile<D: Dvr<Elem = E>>(&self, dvr: &D) -> PointProfile {
        let vals = |xs: &[E]| xs.iter().map(|x| dvr.ord(x).finite()).collect();
        PointProfile {
            a: vals(&self.a),
            b: vals(&self.b),
            c: vals(&self.c),
        }
    }

    /// Full validation: dimensions, coordinates in `ϖ(O)`, and `a_i b_i = 0`.
    pub fn validate<D: Dvr<Elem = E>>(&self, dvr: &D, inst: &Instance) -> Result<(), RingError> {
        self.check_dims(inst)?;
        for (coord, xs) in [('a', &self.a), ('b', &self.b), ('c', &self.c)] {
            for (idx, x) in xs.iter().enumerate() {
                if dvr.ord(x) == Valuation::Finite(0) {
                    return Err(RingError::NotInMaximalIdeal {
                        coord,
                        index: idx + 1,
                    });
                }
            }
        }
        for i in 0..inst.n {
            if !dvr.is_zero(&dvr.mul(&self.a[i], &self.b[i])) {
                return Err(RingError::NotOnSpecA { index: i + 1 });
            }
        }
        Ok(())
    }
}

/// Which component(s) of `Spec A` a point lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "set", rename_all = "snake_case")]
pub enum Stratum {
    /// On exactly one component, `Z°_{Σ'}` with `Σ' = {i : a_i ≠ 0}`.
    Interior(SigmaSet),
    /// On several components; lists the indices with `a_i = b_i = 0`.
    Singular(SigmaSet),
}

impl fmt::Display for Stratum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stratum::Interior(s) => write!(f, "interior{s}"),
            Stratum::Singular(s) => write!(f, "singular{s}"),
        }
    }
}

/// `v ∈ V_Σ`: `a_i = 0` for every `i ∉ Σ`.
pub fn in_v_sigma<D: Dvr>(
    dvr: &D,
    inst: &Instance,
    sigma: SigmaSet,
    v: &OPoint<D::Elem>,
) -> Result<bool, RingError> {
    v.check_dims(inst)?;
    inst.check_subset(sigma)?;
    Ok((1..=inst.n)
        .filter(|&i| !sigma.contains(i))
        .all(|i| dvr.is_zero(&v.a[i - 1])))
}

/// `v ∈ Z_Σ`: additionally `b_j = 0` for every `j ∈ Σ`.
pub fn in_z_sigma<D: Dvr>(
    dvr: &D,
    inst: &Instance,
    sigma: SigmaSet,
    v: &OPoint<D::Elem>,
) -> Result<bool, RingError> {
    Ok(in_v_sigma(dvr, inst, sigma, v)? && sigma.iter().all(|j| dvr.is_zero(&v.b[j - 1])))
}

pub fn classify<D: Dvr>(
    dvr: &D,
    inst: &Instance,
    v: &OPoint<D::Elem>,
) -> Result<Stratum, RingError> {
    v.check_dims(inst)?;
    Ok(v.profile(dvr).stratum())
}

/// A generator of `I_Σ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Monomial {
    X(usize),
    Y(usize),
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Monomial::X(i) => write!(f, "x{i}"),
            Monomial::Y(i) => write!(f, "y{i}"),
        }
    }
}

/// `I_Σ = (x_i : i ∉ Σ) + (y_j : j ∈ Σ)`, x-generators first.
pub fn ideal_generators(inst: &Instance, sigma: SigmaSet) -> Vec<Monomial> {
    let xs = (1..=inst.n)
        .filter(|&i| !sigma.contains(i))
        .map(Monomial::X);
    let ys = (1..=inst.n).filter(|&j| sigma.contains(j)).map(Monomial::Y);
    xs.chain(ys).collect()
}

/// Valuation skeleton of a random point of `Z°_{Σ'}`.
pub fn random_profile<R: Rng + ?Sized>(
    inst: &Instance,
    sigma_prime: SigmaSet,
    ord_bounds: &RangeInclusive<u32>,
    rng: &mut R,
) -> Result<PointProfile, RingError> {
    if ord_bounds.is_empty() || *ord_bounds.start() == 0 {
        return Err(RingError::EmptyRange);
    }
    inst.check_subset(sigma_prime)?;
    let draw = |rng: &mut R| rng.random_range(ord_bounds.clone());
    let mut a = Vec::with_capacity(inst.n);
    let mut b = Vec::with_capacity(inst.n);
    for i in 1..=inst.n {
        if sigma_prime.contains(i) {
            a.push(Some(draw(rng)));
            b.push(None);
        } else {
            a.push(None);
            b.push(Some(draw(rng)));
        }
    }
    let c = (0..inst.g)
        .map(|_| {
            if rng.random_ratio(1, 4) {
                None
            } else {
                Some(draw(rng))
            }
        })
        .collect();
    Ok(PointProfile { a, b, c })
}

/// A deterministic random point of `Z°_{Σ'}` with nonzero orders in `ord_bounds`.
pub fn random_point<D: Dvr>(
    dvr: &D,
    inst: &Instance,
    sigma_prime: SigmaSet,
    ord_bounds: RangeInclusive<u32>,
    seed: u64,
) -> Result<OPoint<D::Elem>, RingError> {
    let mut orders = rng::stream(seed, &[rng::STREAM_ORDERS]);
    let profile = random_profile(inst, sigma_prime, &ord_bounds, &mut orders)?;
    let mut units = rng::stream(seed, &[rng::STREAM_UNITS]);
    Ok(profile.realize(dvr, &mut units))
}
