//! Congruence-module lengths for axiomatic module families `{M_Σ}` and the Wiles defect.
//!
//! A family is described by its rank function `μ` and by a provider for the base lengths
//! `length Ψ_v(M_Σ')` at points `v ∈ Z°_Σ'`. Lengths at larger `Σ` come from the
//! recursion `Ψ_v(M_{Σ'∪{s}}) = Ψ_v(M_Σ') + μ_Σ'·ord(b_s)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cotangent::{length_closed_profile, CotangentError};
use crate::dvr::Dvr;
use crate::ringfam::{Instance, OPoint, PointProfile, RingError, SigmaSet, Stratum};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CongruenceError {
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error(transparent)]
    Cotangent(#[from] CotangentError),
    #[error("rank function has {got} entries, expected 2^{n} = {}", 1usize << n)]
    RankTableSize { got: usize, n: usize },
    #[error("rank function has no value for Σ = {0}")]
    MissingRank(SigmaSet),
    #[error(
        "base congruence length is undefined for Σ' = {sigma_prime} under the {provider} provider"
    )]
    UndefinedBase {
        sigma_prime: SigmaSet,
        provider: &'static str,
    },
    #[error("base congruence length at Σ' = ∅ must be 0 (M_∅ is free), table gives {0}")]
    NonzeroEmptyBase(u64),
    #[error("congruence length came out negative ({0}); the base table is inconsistent")]
    NegativeLength(i64),
    #[error("free-summand criterion needs v ∈ Z°_∅, point lies in {0}")]
    NotInZEmpty(Stratum),
    #[error("families live on different instances")]
    InstanceMismatch,
    #[error("recursion order {order:?} is not a permutation of Σ∖Σ' = {missing}")]
    BadOrder {
        order: Vec<usize>,
        missing: SigmaSet,
    },
}

/// `μ_Σ = rank_Σ M_T` for every `Σ ⊆ T`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankFunction {
    n: usize,
    mu: Vec<u64>,
}

impl RankFunction {
    pub fn constant(n: usize, value: u64) -> Self {
        Self {
            n,
            mu: vec![value; 1 << n],
        }
    }

    /// `mu[bits]` is `μ` of the subset with that bitmask.
    pub fn from_vec(n: usize, mu: Vec<u64>) -> Result<Self, CongruenceError> {
        if mu.len() != 1 << n {
            return Err(CongruenceError::RankTableSize { got: mu.len(), n });
        }
        Ok(Self { n, mu })
    }

    pub fn from_table(n: usize, table: &BTreeMap<SigmaSet, u64>) -> Result<Self, CongruenceError> {
        let mu = SigmaSet::all(n)
            .map(|s| {
                table
                    .get(&s)
                    .copied()
                    .ok_or(CongruenceError::MissingRank(s))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { n, mu })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mu(&self, sigma: SigmaSet) -> u64 {
        self.mu[sigma.bits() as usize]
    }

    pub fn mu_empty(&self) -> u64 {
        self.mu(SigmaSet::EMPTY)
    }

    pub fn mu_full(&self) -> u64 {
        self.mu(SigmaSet::full(self.n))
    }

    /// `rank_{Σ'} M_Σ`: `μ_{Σ'}` if `Σ' ⊆ Σ`, else 0.
    pub fn rank_on(&self, sigma_prime: SigmaSet, sigma: SigmaSet) -> u64 {
        if sigma_prime.is_subset(sigma) {
            self.mu(sigma_prime)
        } else {
            0
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = (SigmaSet, u64)> + '_ {
        self.mu
            .iter()
            .enumerate()
            .map(|(bits, &m)| (SigmaSet::from_bits(bits as u32), m))
    }

    fn add(&self, other: &RankFunction) -> RankFunction {
        RankFunction {
            n: self.n,
            mu: self.mu.iter().zip(&other.mu).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Serialize for RankFunction {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_map(self.entries().map(|(s, m)| (s.to_string(), m)))
    }
}

fn subset_keys<S: serde::Serializer>(
    table: &BTreeMap<SigmaSet, u64>,
    serializer: S,
) -> Result<S::Ok, S::Error> {
    serializer.collect_map(table.iter().map(|(s, m)| (s.to_string(), m)))
}

/// Provider of `length Ψ_v(M_Σ')` at `v ∈ Z°_Σ'`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BasePsi {
    /// `M_Σ = A_Σ^μ`: base length `μ_Σ' · length Φ_v(A_Σ')`, since `δ(CI) = 0`.
    Canonical,
    /// Only the minimal stratum, where `M_∅` is free and the length is 0.
    MinimalZero,
    /// User-supplied per-stratum lengths (constant in `v`); `∅` defaults to 0.
    Table(#[serde(serialize_with = "subset_keys")] BTreeMap<SigmaSet, u64>),
    /// Another provider with `delta` added at one stratum. For negative testing.
    Shifted {
        inner: Box<BasePsi>,
        at: SigmaSet,
        delta: i64,
    },
    /// Direct sum of families; each summand keeps its own rank function.
    DirectSum(Vec<(RankFunction, BasePsi)>),
}

impl BasePsi {
    pub fn name(&self) -> &'static str {
        match self {
            BasePsi::Canonical => "canonical",
            BasePsi::MinimalZero => "minimal-zero",
            BasePsi::Table(_) => "table",
            BasePsi::Shifted { .. } => "shifted",
            BasePsi::DirectSum(_) => "direct-sum",
        }
    }

    pub fn table(table: BTreeMap<SigmaSet, u64>) -> Result<BasePsi, CongruenceError> {
        match table.get(&SigmaSet::EMPTY) {
            Some(&k) if k != 0 => Err(CongruenceError::NonzeroEmptyBase(k)),
            _ => Ok(BasePsi::Table(table)),
        }
    }

    fn eval(
        &self,
        mu: &RankFunction,
        inst: &Instance,
        sigma_prime: SigmaSet,
        profile: &PointProfile,
    ) -> Result<i64, CongruenceError> {
        Ok(match self {
            BasePsi::Canonical => {
                let phi = length_closed_profile(inst, sigma_prime, profile)?;
                (mu.mu(sigma_prime) * phi) as i64
            }
            BasePsi::MinimalZero if sigma_prime.is_empty() => 0,
            BasePsi::MinimalZero => {
                return Err(CongruenceError::UndefinedBase {
                    sigma_prime,
                    provider: self.name(),
                })
            }
            BasePsi::Table(t) => match t.get(&sigma_prime) {
                Some(&k) => k as i64,
                None if sigma_prime.is_empty() => 0,
                None => {
                    return Err(CongruenceError::UndefinedBase {
                        sigma_prime,
                        provider: self.name(),
                    })
                }
            },
            BasePsi::Shifted { inner, at, delta } => {
                let base = inner.eval(mu, inst, sigma_prime, profile)?;
                if *at == sigma_prime {
                    base + delta
                } else {
                    base
                }
            }
            BasePsi::DirectSum(parts) => {
                let mut total = 0;
                for (m, p) in parts {
                    total += p.eval(m, inst, sigma_prime, profile)?;
                }
                total
            }
        })
    }
}

/// Hypotheses on the modules that rank data cannot certify; declared by the user.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FamilyFlags {
    /// `depth M_Σ ≥ c + 1`, so Wiles defects are nonnegative.
    pub depth: bool,
    /// Rings Gorenstein and modules maximal Cohen–Macaulay, for the summand criterion.
    pub gorenstein: bool,
    /// Skip the `μ_Σ ≥ μ_∅` gate in the descent (negative testing only).
    pub override_gate: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FamilySpec {
    pub inst: Instance,
    pub mu: RankFunction,
    pub base: BasePsi,
    pub flags: FamilyFlags,
}

impl FamilySpec {
    pub fn new(
        inst: Instance,
        mu: RankFunction,
        base: BasePsi,
        flags: FamilyFlags,
    ) -> Result<Self, CongruenceError> {
        if mu.n() != inst.n {
            return Err(CongruenceError::RankTableSize {
                got: 1 << mu.n(),
                n: inst.n,
            });
        }
        Ok(Self {
            inst,
            mu,
            base,
            flags,
        })
    }

    /// `M_Σ = A_Σ^k` for every `Σ`.
    pub fn free(inst: Instance, rank: u64) -> Self {
        Self {
            inst,
            mu: RankFunction::constant(inst.n, rank),
            base: BasePsi::Canonical,
            flags: FamilyFlags {
                depth: true,
                gorenstein: true,
                override_gate: false,
            },
        }
    }

    pub fn direct_sum(&self, other: &FamilySpec) -> Result<FamilySpec, CongruenceError> {
        if self.inst != other.inst {
            return Err(CongruenceError::InstanceMismatch);
        }
        Ok(FamilySpec {
            inst: self.inst,
            mu: self.mu.add(&other.mu),
            base: BasePsi::DirectSum(vec![
                (self.mu.clone(), self.base.clone()),
                (other.mu.clone(), other.base.clone()),
            ]),
            flags: FamilyFlags {
                depth: self.flags.depth && other.flags.depth,
                gorenstein: self.flags.gorenstein && other.flags.gorenstein,
                override_gate: self.flags.override_gate || other.flags.override_gate,
            },
        })
    }

    pub fn base_psi(
        &self,
        sigma_prime: SigmaSet,
        profile: &PointProfile,
    ) -> Result<u64, CongruenceError> {
        let v = self.base.eval(&self.mu, &self.inst, sigma_prime, profile)?;
        u64::try_from(v).map_err(|_| CongruenceError::NegativeLength(v))
    }
}

/// The stratum `Σ'` of an interior point of `Spec A_Σ`.
fn interior_stratum(
    inst: &Instance,
    sigma: SigmaSet,
    profile: &PointProfile,
) -> Result<SigmaSet, CongruenceError> {
    inst.check_subset(sigma)?;
    match profile.stratum() {
        Stratum::Interior(sp) if sp.is_subset(sigma) => Ok(sp),
        Stratum::Interior(sp) => Err(CotangentError::NotInterior {
            sigma_prime: sp,
            sigma,
        }
        .into()),
        Stratum::Singular(ambiguous) => Err(CotangentError::Singular { ambiguous }.into()),
    }
}

fn checked_profile<D: Dvr>(
    dvr: &D,
    fam: &FamilySpec,
    v: &OPoint<D::Elem>,
) -> Result<PointProfile, CongruenceError> {
    v.check_dims(&fam.inst)?;
    Ok(v.profile(dvr))
}

/// `length Ψ_v(M_Σ) = base(Σ', v) + μ_Σ' · Σ_{i∈Σ∖Σ'} ord(b_i)` for `v ∈ Z°_Σ'`.
pub fn psi_length<D: Dvr>(
    dvr: &D,
    fam: &FamilySpec,
    sigma: SigmaSet,
    v: &OPoint<D::Elem>,
) -> Result<u64, CongruenceError> {
    psi_length_profile(fam, sigma, &checked_profile(dvr, fam, v)?)
}

pub fn psi_length_profile(
    fam: &FamilySpec,
    sigma: SigmaSet,
    profile: &PointProfile,
) -> Result<u64, CongruenceError> {
    let sp = interior_stratum(&fam.inst, sigma, profile)?;
    let order: Vec<usize> = sigma.minus(sp).iter().collect();
    psi_length_along(fam, sigma, profile, &order)
}

/// The single-step recursion applied in the given order of the indices of `Σ∖Σ'`.
pub fn psi_length_along(
    fam: &FamilySpec,
    sigma: SigmaSet,
    profile: &PointProfile,
    order: &[usize],
) -> Result<u64, CongruenceError> {
    let sp = interior_stratum(&fam.inst, sigma, profile)?;
    let missing = sigma.minus(sp);
    let as_set = SigmaSet::from_indices(order.iter().copied());
    if order.len() != missing.len() || as_set.ok() != Some(missing) {
        return Err(CongruenceError::BadOrder {
            order: order.to_vec(),
            missing,
        });
    }
    let mut current = sp;
    let mut length = fam.base_psi(sp, profile)?;
    for &s in order {
        current = current.with(s);
        // rank of M_current at v ∈ Z°_Σ'
        let rank = fam.mu.rank_on(sp, current);
        let ord_bs = profile.ord_b(s).expect("b_s ≠ 0 off Σ'") as u64;
        length += rank * ord_bs;
    }
    Ok(length)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefectLedger {
    pub point: PointProfile,
    pub sigma: SigmaSet,
    /// The stratum `Σ'` with `v ∈ Z°_Σ'`.
    pub stratum: SigmaSet,
    pub rank_at_point: u64,
    pub phi_length: u64,
    pub psi_length: u64,
    pub defect: i64,
}

/// `δ_v(M_Σ) = rank · length Φ_v(A_Σ) − length Ψ_v(M_Σ)`.
pub fn wiles_defect<D: Dvr>(
    dvr: &D,
    fam: &FamilySpec,
    sigma: SigmaSet,
    v: &OPoint<D::Elem>,
) -> Result<DefectLedger, CongruenceError> {
    wiles_defect_profile(fam, sigma, &checked_profile(dvr, fam, v)?)
}

pub fn wiles_defect_profile(
    fam: &FamilySpec,
    sigma: SigmaSet,
    profile: &PointProfile,
) -> Result<DefectLedger, CongruenceError> {
    let sp = interior_stratum(&fam.inst, sigma, profile)?;
    let rank = fam.mu.rank_on(sp, sigma);
    let phi = length_closed_profile(&fam.inst, sigma, profile)?;
    let psi = psi_length_profile(fam, sigma, profile)?;
    Ok(DefectLedger {
        point: profile.clone(),
        sigma,
        stratum: sp,
        rank_at_point: rank,
        phi_length: phi,
        psi_length: psi,
        defect: (rank * phi) as i64 - psi as i64,
    })
}

/// For `v ∈ Z°_∅`: does `length Ψ_v(M_Σ) = μ_∅ · length Φ_v(A_Σ)` hold?
pub fn free_summand_criterion<D: Dvr>(
    dvr: &D,
    fam: &FamilySpec,
    sigma: SigmaSet,
    v: &OPoint<D::Elem>,
) -> Result<bool, CongruenceError> {
    free_summand_criterion_profile(fam, sigma, &checked_profile(dvr, fam, v)?)
}

pub fn free_summand_criterion_profile(
    fam: &FamilySpec,
    sigma: SigmaSet,
    profile: &PointProfile,
) -> Result<bool, CongruenceError> {
    match profile.stratum() {
        Stratum::Interior(sp) if sp.is_empty() => {}
        other => return Err(CongruenceError::NotInZEmpty(other)),
    }
    let psi = psi_length_profile(fam, sigma, profile)?;
    let phi = length_closed_profile(&fam.inst, sigma, profile)?;
    Ok(psi == fam.mu.mu_empty() * phi)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error(
    "Wiles defect {defect} < 0 at Σ = {sigma}: contradicts nonnegativity of the defect \
     for modules of depth ≥ c + 1 (property (2))"
)]
pub struct DefectViolation {
    pub sigma: SigmaSet,
    pub defect: i64,
}

pub fn defect_nonnegative(ledger: &DefectLedger) -> Result<(), DefectViolation> {
    if ledger.defect >= 0 {
        Ok(())
    } else {
        Err(DefectViolation {
            sigma: ledger.sigma,
            defect: ledger.defect,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cotangent::length_closed;
    use crate::dvr::RationalDvr;

    fn prof(a: &[Option<u32>], b: &[Option<u32>]) -> PointProfile {
        PointProfile {
            a: a.to_vec(),
            b: b.to_vec(),
            c: vec![],
        }
    }

    fn set(ix: &[usize]) -> SigmaSet {
        SigmaSet::from_indices(ix.iter().copied()).unwrap()
    }

    fn minimal_zero(n: usize, mu_empty: u64) -> FamilySpec {
        let inst = Instance::new(n, 0).unwrap();
        let mut mu = RankFunction::constant(n, mu_empty + 1);
        mu.mu[0] = mu_empty;
        FamilySpec::new(inst, mu, BasePsi::MinimalZero, FamilyFlags::default()).unwrap()
    }

    #[test]
    fn canonical_two_paths_agree_single_index() {
        let d = RationalDvr::new(5).unwrap();
        let fam = FamilySpec::free(Instance::new(1, 0).unwrap(), 1);
        let v = prof(&[None], &[Some(2)]).realize_monomial(&d);
        assert_eq!(psi_length(&d, &fam, set(&[1]), &v).unwrap(), 2);
        assert_eq!(length_closed(&d, &fam.inst, set(&[1]), &v).unwrap(), 2);
    }

    #[test]
    fn recursion_base_case() {
        let fam = FamilySpec::free(Instance::new(2, 0).unwrap(), 3);
        let p = prof(&[Some(2), None], &[None, Some(1)]);
        let base = fam.base_psi(set(&[1]), &p).unwrap();
        assert_eq!(psi_length_profile(&fam, set(&[1]), &p).unwrap(), base);
        assert_eq!(base, 6);
    }

    #[test]
    fn minimal_zero_lemma_value() {
        let fam = minimal_zero(2, 3);
        let p = prof(&[None, None], &[Some(1), Some(4)]);
        assert_eq!(psi_length_profile(&fam, set(&[1, 2]), &p).unwrap(), 15);
        let bad = prof(&[Some(1), None], &[None, Some(4)]);
        assert!(matches!(
            psi_length_profile(&fam, set(&[1, 2]), &bad),
            Err(CongruenceError::UndefinedBase { .. })
        ));
    }

    #[test]
    fn defect_examples() {
        let fam = FamilySpec::free(Instance::new(2, 0).unwrap(), 1);
        let p = prof(&[Some(3), None], &[None, Some(2)]);
        let l = wiles_defect_profile(&fam, set(&[1, 2]), &p).unwrap();
        assert_eq!((l.phi_length, l.psi_length, l.defect), (5, 5, 0));

        let mz = minimal_zero(2, 2);
        let p0 = prof(&[None, None], &[Some(3), Some(1)]);
        let l = wiles_defect_profile(&mz, set(&[1, 2]), &p0).unwrap();
        assert_eq!(
            (l.rank_at_point, l.phi_length, l.psi_length, l.defect),
            (2, 4, 8, 0)
        );

        let inflated = FamilySpec {
            base: BasePsi::Shifted {
                inner: Box::new(BasePsi::Canonical),
                at: set(&[1]),
                delta: 1,
            },
            ..fam.clone()
        };
        let l2 = wiles_defect_profile(&inflated, set(&[1, 2]), &p).unwrap();
        assert_eq!(l2.defect, -1);
        assert!(defect_nonnegative(&l2).is_err());
    }

    #[test]
    fn free_summand_examples() {
        let p0 = prof(&[None, None], &[Some(3), Some(1)]);
        assert!(free_summand_criterion_profile(&minimal_zero(2, 2), set(&[1, 2]), &p0).unwrap());
        assert!(free_summand_criterion_profile(&minimal_zero(2, 0), set(&[2]), &p0).unwrap());
        let broken = FamilySpec {
            base: BasePsi::Shifted {
                inner: Box::new(BasePsi::MinimalZero),
                at: SigmaSet::EMPTY,
                delta: 1,
            },
            ..minimal_zero(2, 2)
        };
        assert!(!free_summand_criterion_profile(&broken, set(&[1, 2]), &p0).unwrap());
        let off = prof(&[Some(1), None], &[None, Some(1)]);
        assert!(matches!(
            free_summand_criterion_profile(&minimal_zero(2, 1), set(&[1, 2]), &off),
            Err(CongruenceError::NotInZEmpty(_))
        ));
    }

    #[test]
    fn nonnegativity_check() {
        let mk = |defect| DefectLedger {
            point: prof(&[None], &[Some(1)]),
            sigma: SigmaSet::EMPTY,
            stratum: SigmaSet::EMPTY,
            rank_at_point: 0,
            phi_length: 0,
            psi_length: 0,
            defect,
        };
        assert!(defect_nonnegative(&mk(0)).is_ok());
        assert!(defect_nonnegative(&mk(3)).is_ok());
        let err = defect_nonnegative(&mk(-2)).unwrap_err();
        assert!(err.to_string().contains("property (2)"));
    }

    #[test]
    fn order_must_be_a_permutation() {
        let fam = FamilySpec::free(Instance::new(3, 0).unwrap(), 1);
        let p = prof(&[None, None, None], &[Some(1), Some(2), Some(3)]);
        let full = set(&[1, 2, 3]);
        assert_eq!(psi_length_along(&fam, full, &p, &[3, 1, 2]).unwrap(), 6);
        assert!(psi_length_along(&fam, full, &p, &[1, 2]).is_err());
        assert!(psi_length_along(&fam, full, &p, &[1, 1, 2]).is_err());
    }

    #[test]
    fn table_rejects_nonzero_empty_base() {
        let mut t = BTreeMap::new();
        t.insert(SigmaSet::EMPTY, 2);
        assert_eq!(BasePsi::table(t), Err(CongruenceError::NonzeroEmptyBase(2)));
    }

    #[test]
    fn rank_rule() {
        let mu = RankFunction::from_vec(2, vec![1, 2, 3, 4]).unwrap();
        assert_eq!(mu.rank_on(set(&[1]), set(&[1, 2])), 2);
        assert_eq!(mu.rank_on(set(&[1]), set(&[2])), 0);
        assert_eq!(mu.mu_full(), 4);
        assert!(RankFunction::from_vec(2, vec![1, 2]).is_err());
    }
}
