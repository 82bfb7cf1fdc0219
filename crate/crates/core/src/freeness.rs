//! Numeric run of the freeness criterion: if `μ_T ≤ μ_∅` then every `M_Σ` is free of
//! rank `μ_∅`.
//!
//! The argument descends from `T` one index at a time. At each step `Σ → Σ' = Σ∖{s}` it
//! picks a witness `v ∈ Z°_Σ'` with `ord(b_s)` large compared to the `a_i`, and compares
//!
//! ```text
//!   lower = (μ_Σ' − μ_∅) · ord(b_s)          ≤ length Ψ_v(W_Σ)
//!   upper = (μ_Σ' − μ_∅) · length Φ_v(B)     ≥ length Ψ^B_v(W_Σ) = length Ψ_v(W_Σ)
//! ```
//!
//! where `M_Σ ≅ A_Σ^{μ_∅} ⊕ W_Σ`. When `μ_Σ' > μ_∅` and `lower > upper`, the jump is
//! impossible and `μ_Σ' = μ_∅` is forced.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::congruence::{psi_length_profile, CongruenceError, FamilySpec, RankFunction};
use crate::cotangent::{length_b_profile, length_closed_profile, CotangentError};
use crate::dvr::Dvr;
use crate::ringfam::{Instance, OPoint, PointProfile, RingError, SigmaSet, Stratum};
use crate::rng;

/// Default order of the prescribed `a_i` in auto-generated witnesses.
pub const DEFAULT_WITNESS_ORD_A: u32 = 2;

const ASSUMED: [&str; 3] = [
    "free summand M_Σ ≅ A_Σ^μ_∅ ⊕ W_Σ (free-summand criterion, property (4))",
    "nonnegative Wiles defect of W_Σ over B (property (2), depth ≥ c+1)",
    "invariance of domain Ψ^B_v(W_Σ) = Ψ_v(W_Σ) (property (3))",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DescentError {
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error(transparent)]
    Cotangent(#[from] CotangentError),
    #[error(transparent)]
    Congruence(#[from] CongruenceError),
    #[error("prescribed ord(a_{index}) = {ord}; witness orders must be ≥ 1")]
    WitnessOrder { index: usize, ord: u32 },
    #[error("prescribed orders must cover exactly Σ∖{{s}} = {expected}")]
    WitnessSupport { expected: SigmaSet },
    #[error("index s = {s} is not in Σ = {sigma}")]
    IndexNotInSigma { s: usize, sigma: SigmaSet },
    #[error("hypothesis μ_T ≤ μ_∅ fails: μ_T = {mu_full}, μ_∅ = {mu_empty}")]
    HypothesisViolated { mu_full: u64, mu_empty: u64 },
    #[error(
        "μ_{sigma} = {mu} < μ_∅ = {mu_empty} contradicts the free summand of rank μ_∅ \
         (set override_gate to evaluate anyway)"
    )]
    BelowMinimal {
        sigma: SigmaSet,
        mu: u64,
        mu_empty: u64,
    },
    #[error("removal order {0:?} is not a permutation of T")]
    BadOrder(Vec<usize>),
    #[error("step {sigma} → {sigma_prime} is inconclusive: lower {lower} ≤ upper {upper}")]
    Inconclusive {
        sigma: SigmaSet,
        sigma_prime: SigmaSet,
        lower: i64,
        upper: i64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    /// `μ_Σ' = μ_∅`: either already so in the data, or a jump is refuted by `lower > upper`.
    ForcedEqual,
    /// The bounds do not separate, but the declared base lengths make the defect of
    /// `W_Σ` over `B` negative.
    ContradictionWitnessed,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DescentStep {
    pub sigma: SigmaSet,
    pub s: usize,
    pub sigma_prime: SigmaSet,
    pub witness: PointProfile,
    pub mu_sigma_prime: u64,
    pub mu_empty: u64,
    /// `μ_Σ' − μ_∅`.
    pub multiplier: i64,
    pub ord_b_s: u64,
    /// `Σ_{i∈Σ'} ord(a_i)`.
    pub sum_ord_a: u64,
    /// `length Φ_v(A_Σ)`, equal to `length Ψ_v(A_Σ)` since `A_Σ` is a complete intersection.
    pub phi_a_sigma: u64,
    pub phi_b: u64,
    /// `length Ψ_v(M_Σ)` from the family's declared data.
    pub psi_m_sigma: u64,
    /// `length Ψ_v(W_Σ) = length Ψ_v(M_Σ) − μ_∅ · length Ψ_v(A_Σ)`.
    pub psi_w: i64,
    pub lower_bound: i64,
    pub upper_bound: i64,
    pub verdict: Verdict,
}

impl DescentStep {
    /// Recomputes both bounds from the stored witness valuations.
    pub fn recompute_bounds(&self, inst: &Instance) -> Result<(i64, i64), CotangentError> {
        let ord_bs = self.witness.ord_b(self.s).unwrap_or(0) as i64;
        let phi_b = length_b_profile(inst, self.sigma, self.s, &self.witness)? as i64;
        let d = self.mu_sigma_prime as i64 - self.mu_empty as i64;
        Ok((d * ord_bs, d * phi_b))
    }

    pub fn separation(&self) -> i64 {
        self.lower_bound - self.upper_bound
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DescentCertificate {
    pub instance: Instance,
    pub seed: u64,
    pub removal_order: Vec<usize>,
    pub witness_ord_a: u32,
    pub mu_empty: u64,
    pub declared_mu: RankFunction,
    pub assumed: Vec<String>,
    pub steps: Vec<DescentStep>,
    pub conclusion: RankFunction,
    pub all_forced: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CertificateError {
    #[error("step {index}: stored bounds ({stored_lower}, {stored_upper}) but witness gives ({lower}, {upper})")]
    Bounds {
        index: usize,
        stored_lower: i64,
        stored_upper: i64,
        lower: i64,
        upper: i64,
    },
    #[error("step {index}: Σ = {sigma} was not established by an earlier step")]
    Chain { index: usize, sigma: SigmaSet },
    #[error("subset {0} is covered {1} times")]
    Coverage(SigmaSet, usize),
    #[error("step {index}: {source}")]
    Witness {
        index: usize,
        #[source]
        source: CotangentError,
    },
    #[error("conclusion inconsistent with verdicts at {0}")]
    Conclusion(SigmaSet),
}

impl DescentCertificate {
    /// Independent check of the certificate: bounds recomputed from the witnesses,
    /// every proper subset reached exactly once from an established parent, and the
    /// conclusion matching the verdicts.
    pub fn verify(&self) -> Result<(), CertificateError> {
        let full = self.instance.full();
        let mut established = vec![full];
        let mut covered: BTreeMap<SigmaSet, usize> = BTreeMap::new();
        for (index, step) in self.steps.iter().enumerate() {
            let (lower, upper) = step
                .recompute_bounds(&self.instance)
                .map_err(|source| CertificateError::Witness { index, source })?;
            if (lower, upper) != (step.lower_bound, step.upper_bound) {
                return Err(CertificateError::Bounds {
                    index,
                    stored_lower: step.lower_bound,
                    stored_upper: step.upper_bound,
                    lower,
                    upper,
                });
            }
            if !established.contains(&step.sigma) || step.sigma_prime != step.sigma.without(step.s)
            {
                return Err(CertificateError::Chain {
                    index,
                    sigma: step.sigma,
                });
            }
            established.push(step.sigma_prime);
            *covered.entry(step.sigma_prime).or_default() += 1;
        }
        for sub in self.instance.subsets().filter(|&s| s != full) {
            let k = covered.get(&sub).copied().unwrap_or(0);
            if k != 1 {
                return Err(CertificateError::Coverage(sub, k));
            }
        }
        if self.conclusion.mu(full) != self.mu_empty {
            return Err(CertificateError::Conclusion(full));
        }
        for step in &self.steps {
            let expected = match step.verdict {
                Verdict::ForcedEqual => self.mu_empty,
                _ => self.declared_mu.mu(step.sigma_prime),
            };
            if self.conclusion.mu(step.sigma_prime) != expected {
                return Err(CertificateError::Conclusion(step.sigma_prime));
            }
        }
        let forced = self.steps.iter().all(|s| s.verdict == Verdict::ForcedEqual);
        if forced != self.all_forced {
            return Err(CertificateError::Conclusion(full));
        }
        Ok(())
    }

    /// Line-by-line rendering of each step's inequality chain.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "descent over T = {} (n = {}, g = {}), μ_∅ = {}, seed {}",
            self.instance.full(),
            self.instance.n,
            self.instance.g,
            self.mu_empty,
            self.seed
        );
        for a in &self.assumed {
            let _ = writeln!(out, "  assumes: {a}");
        }
        for step in &self.steps {
            out.push_str(&render_step(step));
        }
        let _ = writeln!(
            out,
            "conclusion: {}",
            if self.all_forced {
                format!("M_Σ ≅ A_Σ^{} for every Σ ⊆ T", self.mu_empty)
            } else {
                "not all steps forced".to_string()
            }
        );
        out
    }
}

pub fn render_step(step: &DescentStep) -> String {
    let mut out = String::new();
    let fmt_ord = |xs: &[Option<u32>]| -> String {
        let parts: Vec<String> = xs
            .iter()
            .map(|x| x.map_or("-".to_string(), |k| k.to_string()))
            .collect();
        format!("[{}]", parts.join(","))
    };
    let _ = writeln!(
        out,
        "step {} → {} (s = {}): witness ord(a) = {}, ord(b) = {}",
        step.sigma,
        step.sigma_prime,
        step.s,
        fmt_ord(&step.witness.a),
        fmt_ord(&step.witness.b)
    );
    let _ = writeln!(
        out,
        "  length Ψ_v(W_Σ) = length Ψ_v(M_Σ) − μ_∅·length Ψ_v(A_Σ) = {} − {}·{} = {}",
        step.psi_m_sigma, step.mu_empty, step.phi_a_sigma, step.psi_w
    );
    let _ = writeln!(
        out,
        "  lower: (μ_Σ' − μ_∅)·ord(b_s) = {}·{} = {}",
        step.multiplier, step.ord_b_s, step.lower_bound
    );
    let _ = writeln!(
        out,
        "  upper: (μ_Σ' − μ_∅)·length Φ_v(B) = {}·({} + min({}, {})) = {}",
        step.multiplier, step.sum_ord_a, step.ord_b_s, step.sum_ord_a, step.upper_bound
    );
    let verdict = match step.verdict {
        Verdict::ForcedEqual if step.multiplier == 0 => {
            "FORCED_EQUAL (μ_Σ' = μ_∅ already)".to_string()
        }
        Verdict::ForcedEqual => format!(
            "FORCED_EQUAL ({} > {}: μ_Σ' = {} refuted)",
            step.lower_bound, step.upper_bound, step.mu_sigma_prime
        ),
        Verdict::ContradictionWitnessed => format!(
            "CONTRADICTION_WITNESSED (declared Ψ_v(W_Σ) = {} > {})",
            step.psi_w, step.upper_bound
        ),
        Verdict::Inconclusive => {
            format!("INCONCLUSIVE ({} ≤ {})", step.lower_bound, step.upper_bound)
        }
    };
    let _ = writeln!(out, "  verdict: {verdict}");
    out
}

/// Valuation skeleton of a witness in `Z°_{Σ∖{s}}`: `ord(a_i)` as prescribed,
/// `ord(b_s) = 2·Σ ord(a_i) + 1`, other nonzero coordinates with orders in `1..=6`.
pub fn witness_profile<R: Rng + ?Sized>(
    inst: &Instance,
    sigma: SigmaSet,
    s: usize,
    ord_a: &BTreeMap<usize, u32>,
    rng: &mut R,
) -> Result<PointProfile, DescentError> {
    inst.check_subset(sigma)?;
    if !sigma.contains(s) {
        return Err(DescentError::IndexNotInSigma { s, sigma });
    }
    let sp = sigma.without(s);
    let keys = SigmaSet::from_indices(ord_a.keys().copied()).ok();
    if keys != Some(sp) {
        return Err(DescentError::WitnessSupport { expected: sp });
    }
    if let Some((&index, &ord)) = ord_a.iter().find(|(_, &o)| o == 0) {
        return Err(DescentError::WitnessOrder { index, ord });
    }
    let total: u32 = ord_a.values().sum();
    let mut a = vec![None; inst.n];
    let mut b = vec![None; inst.n];
    for i in 1..=inst.n {
        if let Some(&k) = ord_a.get(&i) {
            a[i - 1] = Some(k);
        } else if i == s {
            b[i - 1] = Some(2 * total + 1);
        } else {
            b[i - 1] = Some(rng.random_range(1..=6));
        }
    }
    let c = (0..inst.g)
        .map(|_| (!rng.random_ratio(1, 4)).then(|| rng.random_range(1..=6)))
        .collect();
    Ok(PointProfile { a, b, c })
}

pub fn find_witness<D: Dvr>(
    dvr: &D,
    inst: &Instance,
    sigma: SigmaSet,
    s: usize,
    ord_a: &BTreeMap<usize, u32>,
    seed: u64,
) -> Result<OPoint<D::Elem>, DescentError> {
    let mut orders = rng::stream(seed, &[rng::STREAM_ORDERS]);
    let profile = witness_profile(inst, sigma, s, ord_a, &mut orders)?;
    let mut units = rng::stream(seed, &[rng::STREAM_UNITS]);
    Ok(profile.realize(dvr, &mut units))
}

pub fn evaluate_step<D: Dvr>(
    dvr: &D,
    fam: &FamilySpec,
    sigma: SigmaSet,
    s: usize,
    v: &OPoint<D::Elem>,
) -> Result<DescentStep, DescentError> {
    v.check_dims(&fam.inst)?;
    evaluate_step_profile(fam, sigma, s, &v.profile(dvr))
}

pub fn evaluate_step_profile(
    fam: &FamilySpec,
    sigma: SigmaSet,
    s: usize,
    witness: &PointProfile,
) -> Result<DescentStep, DescentError> {
    let inst = &fam.inst;
    // Also checks s ∈ Σ and v ∈ Z°_{Σ∖{s}}.
    let phi_b = length_b_profile(inst, sigma, s, witness)?;
    let sp = sigma.without(s);
    debug_assert_eq!(witness.stratum(), Stratum::Interior(sp));
    let phi_a_sigma = length_closed_profile(inst, sigma, witness)?;
    let psi_m_sigma = psi_length_profile(fam, sigma, witness)?;
    let mu_empty = fam.mu.mu_empty();
    let mu_sp = fam.mu.mu(sp);
    let d = mu_sp as i64 - mu_empty as i64;
    let ord_b_s = witness.ord_b(s).expect("b_s ≠ 0 on Z°_Σ'") as u64;
    let sum_ord_a: u64 = sp
        .iter()
        .filter_map(|i| witness.ord_a(i))
        .map(u64::from)
        .sum();
    let lower = d * ord_b_s as i64;
    let upper = d * phi_b as i64;
    let psi_w = psi_m_sigma as i64 - (mu_empty * phi_a_sigma) as i64;
    let verdict = if d == 0 || (d > 0 && lower > upper) {
        Verdict::ForcedEqual
    } else if psi_w > upper {
        Verdict::ContradictionWitnessed
    } else {
        Verdict::Inconclusive
    };
    Ok(DescentStep {
        sigma,
        s,
        sigma_prime: sp,
        witness: witness.clone(),
        mu_sigma_prime: mu_sp,
        mu_empty,
        multiplier: d,
        ord_b_s,
        sum_ord_a,
        phi_a_sigma,
        phi_b,
        psi_m_sigma,
        psi_w,
        lower_bound: lower,
        upper_bound: upper,
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DescentOptions {
    /// Order in which indices leave `T`; defaults to `1, 2, …, n`.
    pub removal_order: Option<Vec<usize>>,
    pub witness_ord_a: u32,
}

impl Default for DescentOptions {
    fn default() -> Self {
        Self {
            removal_order: None,
            witness_ord_a: DEFAULT_WITNESS_ORD_A,
        }
    }
}

fn resolve_order(inst: &Instance, opts: &DescentOptions) -> Result<Vec<usize>, DescentError> {
    let order = opts
        .removal_order
        .clone()
        .unwrap_or_else(|| (1..=inst.n).collect());
    let as_set = SigmaSet::from_indices(order.iter().copied()).ok();
    if order.len() != inst.n || as_set != Some(inst.full()) {
        return Err(DescentError::BadOrder(order));
    }
    Ok(order)
}

/// Evaluates one step for every proper subset `Σ'`, descending by cardinality. The
/// parent of `Σ'` is `Σ' ∪ {s}` where `s` is the missing index removed last in
/// `order`, so along the order itself the steps form the chain `T ⊃ T∖{o₁} ⊃ …`.
pub fn evaluate_tree(
    fam: &FamilySpec,
    seed: u64,
    opts: &DescentOptions,
) -> Result<Vec<DescentStep>, DescentError> {
    let inst = &fam.inst;
    let order = resolve_order(inst, opts)?;
    if opts.witness_ord_a == 0 {
        return Err(DescentError::WitnessOrder { index: 0, ord: 0 });
    }
    let rank_in_order = |i: usize| order.iter().position(|&o| o == i).expect("order covers T");
    let full = inst.full();
    let mut targets: Vec<SigmaSet> = inst.subsets().filter(|&s| s != full).collect();
    targets.sort_by_key(|s| (std::cmp::Reverse(s.len()), s.bits()));

    let mut steps = Vec::with_capacity(targets.len());
    for sp in targets {
        let s = full
            .minus(sp)
            .iter()
            .max_by_key(|&i| rank_in_order(i))
            .expect("proper subset misses an index");
        let sigma = sp.with(s);
        let ord_a: BTreeMap<usize, u32> = sp.iter().map(|i| (i, opts.witness_ord_a)).collect();
        let mut orders = rng::stream(seed, &[rng::STREAM_ORDERS, sp.bits() as u64]);
        let witness = witness_profile(inst, sigma, s, &ord_a, &mut orders)?;
        steps.push(evaluate_step_profile(fam, sigma, s, &witness)?);
    }
    Ok(steps)
}

/// Checks the hypotheses `μ_T ≤ μ_∅` and `μ_Σ ≥ μ_∅` (the latter skippable via
/// `override_gate`).
pub fn check_gate(fam: &FamilySpec) -> Result<(), DescentError> {
    let mu_empty = fam.mu.mu_empty();
    let mu_full = fam.mu.mu_full();
    if mu_full > mu_empty {
        return Err(DescentError::HypothesisViolated { mu_full, mu_empty });
    }
    if !fam.flags.override_gate {
        if let Some((sigma, mu)) = fam.mu.entries().find(|&(_, m)| m < mu_empty) {
            return Err(DescentError::BelowMinimal {
                sigma,
                mu,
                mu_empty,
            });
        }
    }
    Ok(())
}

pub fn run_descent(fam: &FamilySpec, seed: u64) -> Result<DescentCertificate, DescentError> {
    run_descent_with(fam, seed, &DescentOptions::default())
}

pub fn run_descent_with(
    fam: &FamilySpec,
    seed: u64,
    opts: &DescentOptions,
) -> Result<DescentCertificate, DescentError> {
    check_gate(fam)?;
    let order = resolve_order(&fam.inst, opts)?;
    let steps = evaluate_tree(fam, seed, opts)?;
    if let Some(step) = steps.iter().find(|s| s.verdict == Verdict::Inconclusive) {
        return Err(DescentError::Inconclusive {
            sigma: step.sigma,
            sigma_prime: step.sigma_prime,
            lower: step.lower_bound,
            upper: step.upper_bound,
        });
    }
    let mu_empty = fam.mu.mu_empty();
    let n = fam.inst.n;
    let mut conclusion: Vec<u64> = fam.mu.entries().map(|(_, m)| m).collect();
    conclusion[fam.inst.full().bits() as usize] = mu_empty;
    for step in &steps {
        if step.verdict == Verdict::ForcedEqual {
            conclusion[step.sigma_prime.bits() as usize] = mu_empty;
        }
    }
    let all_forced = steps.iter().all(|s| s.verdict == Verdict::ForcedEqual);
    Ok(DescentCertificate {
        instance: fam.inst,
        seed,
        removal_order: order,
        witness_ord_a: opts.witness_ord_a,
        mu_empty,
        declared_mu: fam.mu.clone(),
        assumed: ASSUMED.iter().map(|s| s.to_string()).collect(),
        steps,
        conclusion: RankFunction::from_vec(n, conclusion).expect("2^n entries"),
        all_forced,
    })
}
