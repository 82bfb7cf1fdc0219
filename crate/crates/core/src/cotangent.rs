//! Cotangent modules `p_v/p_v²` of `A_Σ` and of `B = A_Σ/(∏_{i∈Σ} x_i)` at `O`-points.
//!
//! Every length is available along two independent routes: an explicit presentation fed
//! to [`snf`](crate::fpmod::snf) (the oracle), and a closed form in the valuations of the
//! coordinates. Reports carry both and refuse to be built when they disagree.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dvr::Dvr;
use crate::fpmod::{snf, Presentation, SnfResult};
use crate::ringfam::{
    classify, in_v_sigma, Instance, OPoint, PointProfile, RingError, SigmaSet, Stratum,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CotangentError {
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error("point is not in V_Σ for Σ = {sigma}: some a_i ≠ 0 with i ∉ Σ")]
    NotInVSigma { sigma: SigmaSet },
    #[error(
        "closed-form cotangent length needs an interior point v ∈ Z°_Σ' with Σ' ⊆ Σ; \
         the point is singular along {ambiguous}"
    )]
    Singular { ambiguous: SigmaSet },
    #[error(
        "closed-form cotangent length needs v ∈ Z°_Σ' with Σ' ⊆ Σ; \
         got Σ' = {sigma_prime}, Σ = {sigma}"
    )]
    NotInterior {
        sigma_prime: SigmaSet,
        sigma: SigmaSet,
    },
    #[error("index s = {s} is not in Σ = {sigma}")]
    IndexNotInSigma { s: usize, sigma: SigmaSet },
    #[error("cotangent length of B needs v ∈ Z°_Σ∖{{s}} = Z°_{expected}; point lies in {found}")]
    WrongStratum { expected: SigmaSet, found: Stratum },
    #[error("closed form {closed} disagrees with SNF oracle {oracle}")]
    Mismatch { closed: u64, oracle: u64 },
}

/// Which ring the cotangent module belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CotangentRing {
    /// `A_Σ`.
    ASigma,
    /// `B = A_Σ / I` for the index `s` removed.
    B { s: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CotangentReport {
    pub ring: CotangentRing,
    pub sigma: SigmaSet,
    pub stratum: Stratum,
    pub generators: Vec<String>,
    /// Valuations of the relation matrix entries; `null` for zero entries.
    pub relation_valuations: Vec<Vec<Option<u32>>>,
    pub snf: SnfResult,
    pub torsion_length: u64,
    pub free_rank: usize,
    pub closed_form_length: Option<u64>,
    pub regular: bool,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

fn interior_within(
    inst: &Instance,
    profile: &PointProfile,
    sigma: SigmaSet,
) -> Result<SigmaSet, CotangentError> {
    inst.check_subset(sigma)?;
    match profile.stratum() {
        Stratum::Singular(ambiguous) => Err(CotangentError::Singular { ambiguous }),
        Stratum::Interior(sp) if sp.is_subset(sigma) => Ok(sp),
        Stratum::Interior(sp) => Err(CotangentError::NotInterior {
            sigma_prime: sp,
            sigma,
        }),
    }
}

fn sum_ord_a(profile: &PointProfile, set: SigmaSet) -> u64 {
    set.iter()
        .map(|i| profile.ord_a(i).expect("a_i ≠ 0 on Σ'") as u64)
        .sum()
}

/// Presentation of `p_v/p_v²` for `A_Σ`.
///
/// Generators are `x_i - a_i` (`i ∈ Σ`), `y_i - b_i` (all `i`), `t_k - c_k`; relation
/// `i ∈ Σ` is the linear part `b_i[x_i] + a_i[y_i]` of `x_i y_i` at `v`.
pub fn presentation_a<D: Dvr>(
    dvr: &D,
    inst: &Instance,
    sigma: SigmaSet,
    v: &OPoint<D::Elem>,
) -> Result<Presentation<D::Elem>, CotangentError> {
    if !in_v_sigma(dvr, inst, sigma, v)? {
        return Err(CotangentError::NotInVSigma { sigma });
    }
    let mut labels = Vec::new();
    let mut x_col = vec![None; inst.n + 1];
    let mut y_col = vec![0usize; inst.n + 1];
    for i in 1..=inst.n {
        if sigma.contains(i) {
            x_col[i] = Some(labels.len());
            labels.push(format!("x{i}"));
        }
        y_col[i] = labels.len();
        labels.push(format!("y{i}"));
    }
    labels.extend((1..=inst.g).map(|k| format!("t{k}")));

    let rows = sigma
        .iter()
        .map(|i| {
            let mut row = vec![dvr.zero(); labels.len()];
            row[x_col[i].expect("i ∈ Σ has an x-column")] = v.b[i - 1].clone();
            row[y_col[i]] = v.a[i - 1].clone();
            row
        })
        .collect();
    Ok(Presentation::with_labels(labels, rows).expect("rows sized to labels"))
}

/// `length Φ_v(A_Σ) = Σ_{i∈Σ'} ord(a_i) + Σ_{j∈Σ∖Σ'} ord(b_j)` for `v ∈ Z°_{Σ'}`, `Σ' ⊆ Σ`.
pub fn length_closed<D: Dvr>(
    dvr: &D,
    inst: &Instance,
    sigma: SigmaSet,
    v: &OPoint<D::Elem>,
) -> Result<u64, CotangentError> {
    v.check_dims(inst)?;
    length_closed_profile(inst, sigma, &v.profile(dvr))
}

pub fn length_closed_profile(
    inst: &Instance,
    sigma: SigmaSet,
    profile: &PointProfile,
) -> Result<u64, CotangentError> {
    let sp = interior_within(inst, profile, sigma)?;
    let b_part: u64 = sigma
        .minus(sp)
        .iter()
        .map(|j| profile.ord_b(j).expect("b_j ≠ 0 off Σ'") as u64)
        .sum();
    Ok(sum_ord_a(profile, sp) + b_part)
}

fn check_b_point(
    inst: &Instance,
    sigma: SigmaSet,
    s: usize,
    profile: &PointProfile,
) -> Result<SigmaSet, CotangentError> {
    inst.check_subset(sigma)?;
    if !sigma.contains(s) {
        return Err(CotangentError::IndexNotInSigma { s, sigma });
    }
    let expected = sigma.without(s);
    match profile.stratum() {
        Stratum::Interior(sp) if sp == expected => Ok(sp),
        found => Err(CotangentError::WrongStratum { expected, found }),
    }
}

/// `length Φ_v(B) = S + min(ord(b_s), S)` with `S = Σ_{i∈Σ∖{s}} ord(a_i)`, for
/// `v ∈ Z°_{Σ∖{s}}`.
pub fn length_b<D: Dvr>(
    dvr: &D,
    inst: &Instance,
    sigma: SigmaSet,
    s: usize,
    v: &OPoint<D::Elem>,
) -> Result<u64, CotangentError> {
    v.check_dims(inst)?;
    length_b_profile(inst, sigma, s, &v.profile(dvr))
}

pub fn length_b_profile(
    inst: &Instance,
    sigma: SigmaSet,
    s: usize,
    profile: &PointProfile,
) -> Result<u64, CotangentError> {
    let sp = check_b_point(inst, sigma, s, profile)?;
    let total_a = sum_ord_a(profile, sp);
    let ord_bs = profile.ord_b(s).expect("b_s ≠ 0 on Z°_Σ∖{s}") as u64;
    Ok(total_a + ord_bs.min(total_a))
}

/// Presentation of `Φ_v(B)`: the `A_Σ` presentation plus the linear part of
/// `∏_{i∈Σ} x_i` at `v`, which is `(∏_{i∈Σ∖{s}} a_i)[x_s]`.
pub fn presentation_b<D: Dvr>(
    dvr: &D,
    inst: &Instance,
    sigma: SigmaSet,
    s: usize,
    v: &OPoint<D::Elem>,
) -> Result<Presentation<D::Elem>, CotangentError> {
    v.check_dims(inst)?;
    let sp = check_b_point(inst, sigma, s, &v.profile(dvr))?;
    let mut pres = presentation_a(dvr, inst, sigma, v)?;
    let col = pres
        .column_of(&format!("x{s}"))
        .expect("s ∈ Σ has an x-column");
    let mut row = vec![dvr.zero(); pres.generators()];
    row[col] = dvr.product(sp.iter().map(|i| &v.a[i - 1]));
    pres.push_relation(row).expect("row sized to generators");
    Ok(pres)
}

/// `A_Σ` is regular at `v` iff `p_v/p_v²` has free rank `n + g` (the height of `p_v`).
pub fn regularity_check<D: Dvr>(
    dvr: &D,
    inst: &Instance,
    sigma: SigmaSet,
    v: &OPoint<D::Elem>,
) -> Result<bool, CotangentError> {
    let pres = presentation_a(dvr, inst, sigma, v)?;
    Ok(snf(dvr, &pres).free_rank == inst.height())
}

pub fn report_a<D: Dvr>(
    dvr: &D,
    inst: &Instance,
    sigma: SigmaSet,
    v: &OPoint<D::Elem>,
) -> Result<CotangentReport, CotangentError> {
    let pres = presentation_a(dvr, inst, sigma, v)?;
    let stratum = classify(dvr, inst, v)?;
    let closed = match length_closed(dvr, inst, sigma, v) {
        Ok(l) => Some(l),
        Err(CotangentError::Singular { .. } | CotangentError::NotInterior { .. }) => None,
        Err(e) => return Err(e),
    };
    build_report(
        dvr,
        inst,
        CotangentRing::ASigma,
        sigma,
        stratum,
        &pres,
        closed,
        Vec::new(),
    )
}

pub fn report_b<D: Dvr>(
    dvr: &D,
    inst: &Instance,
    sigma: SigmaSet,
    s: usize,
    v: &OPoint<D::Elem>,
) -> Result<CotangentReport, CotangentError> {
    let pres = presentation_b(dvr, inst, sigma, s, v)?;
    let stratum = classify(dvr, inst, v)?;
    let closed = length_b(dvr, inst, sigma, s, v)?;
    let mut notes = Vec::new();
    if sigma.len() == 1 {
        notes.push(
            "|Σ| = 1: the product ideal is (x_s) and its linear part is a unit; \
             the formula degenerates to 0"
                .to_string(),
        );
    }
    build_report(
        dvr,
        inst,
        CotangentRing::B { s },
        sigma,
        stratum,
        &pres,
        Some(closed),
        notes,
    )
}

#[allow(clippy::too_many_arguments)]
fn build_report<D: Dvr>(
    dvr: &D,
    inst: &Instance,
    ring: CotangentRing,
    sigma: SigmaSet,
    stratum: Stratum,
    pres: &Presentation<D::Elem>,
    closed: Option<u64>,
    notes: Vec<String>,
) -> Result<CotangentReport, CotangentError> {
    let snf = snf(dvr, pres);
    let torsion_length = snf.torsion_length();
    if let Some(c) = closed {
        if c != torsion_length {
            return Err(CotangentError::Mismatch {
                closed: c,
                oracle: torsion_length,
            });
        }
    }
    Ok(CotangentReport {
        ring,
        sigma,
        stratum,
        generators: pres.labels().to_vec(),
        relation_valuations: pres.valuation_matrix(dvr),
        free_rank: snf.free_rank,
        regular: snf.free_rank == inst.height(),
        torsion_length,
        snf,
        closed_form_length: closed,
        notes,
    })
}
