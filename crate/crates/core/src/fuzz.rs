//! Seeded randomized cross-checks of the closed-form lengths against the SNF oracle.
//!
//! Each trial draws a valuation skeleton (instance, subsets, coordinate orders) from the
//! seed, realizes it in both backends of the selected characteristic with random unit
//! parts, and runs every check on each. Trials are independent, so they are mapped in
//! parallel; the summary is a sequential reduction in trial order, which keeps reports
//! byte-identical across runs, thread counts and backends.

use std::collections::BTreeMap;

use rand::Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::congruence::{psi_length_profile, BasePsi, FamilyFlags, FamilySpec, RankFunction};
use crate::cotangent::{length_b_profile, length_closed_profile, presentation_a, presentation_b};
use crate::dvr::{BackendSpec, Dvr, PolyDvr, RationalDvr};
use crate::fpmod::{snf, SnfResult};
use crate::par::Execution;
use crate::ringfam::{random_profile, Instance, OPoint, PointProfile, SigmaSet};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FuzzConfig {
    pub n_max: usize,
    pub g_max: usize,
    pub ord_max: u32,
    pub trials: usize,
    pub seed: u64,
    /// Selects the residue characteristic; both backends of it are exercised.
    pub backend: BackendSpec,
    pub execution: Execution,
    /// Test hook: adds 1 to every SNF torsion length of `A_Σ` so the harness must fail.
    pub corrupt_oracle: bool,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        Self {
            n_max: 3,
            g_max: 2,
            ord_max: 6,
            trials: 200,
            seed: 1,
            backend: BackendSpec::default(),
            execution: Execution::Parallel,
            corrupt_oracle: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    /// Closed-form length of `Φ_v(A_Σ)` equals the SNF torsion length.
    CotangentA,
    /// Same for `Φ_v(B)`, including the boundary `ord(b_s) = Σ ord(a_i)`.
    CotangentB,
    /// Free rank at an interior point is `n + g`.
    Regularity,
    /// Re-drawing every unit part leaves the SNF data unchanged.
    UnitInvariance,
    /// For `M_Σ = A_Σ`, the congruence recursion reproduces `length Φ_v(A_Σ)`.
    PsiTwoPath,
    /// For the minimal-zero family at `v ∈ Z°_∅`, `Ψ = μ_∅ · Φ`.
    FreeSummand,
    /// Both backends produce identical valuation-level outcomes.
    BackendInvariance,
}

impl Check {
    pub const ALL: [Check; 7] = [
        Check::CotangentA,
        Check::CotangentB,
        Check::Regularity,
        Check::UnitInvariance,
        Check::PsiTwoPath,
        Check::FreeSummand,
        Check::BackendInvariance,
    ];
}

/// Valuation skeleton of one trial.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TrialPlan {
    pub trial: usize,
    pub inst: Instance,
    pub sigma: SigmaSet,
    pub sigma_prime: SigmaSet,
    pub point: PointProfile,
    pub b_case: Option<BCase>,
    pub minimal_point: PointProfile,
    pub mu_empty: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BCase {
    pub s: usize,
    pub point: PointProfile,
    pub boundary: bool,
}

/// Valuation-level outcome of one trial on one backend.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TrialOutcome {
    pub a_snf: SnfResult,
    pub a_oracle: u64,
    pub a_closed: u64,
    pub a_snf_redrawn: SnfResult,
    pub b_snf: Option<SnfResult>,
    pub b_oracle: Option<u64>,
    pub b_closed: Option<u64>,
    pub b_snf_redrawn: Option<SnfResult>,
    pub psi_canonical: u64,
    pub psi_minimal: u64,
    pub phi_minimal: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckSummary {
    pub check: Check,
    pub evaluated: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub trial: usize,
    pub check: Check,
    pub backend: String,
    pub detail: String,
    /// Replayable instance file for the failing point.
    pub instance_file: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FuzzReport {
    pub n_max: usize,
    pub g_max: usize,
    pub ord_max: u32,
    pub trials: usize,
    pub seed: u64,
    pub backends: Vec<String>,
    pub checks: Vec<CheckSummary>,
    pub total_failures: usize,
    /// SHA-256 over the serialized trial plans and outcomes, in trial order.
    pub digest: String,
    pub first_counterexample: Option<Counterexample>,
}

impl FuzzReport {
    pub fn passed(&self) -> bool {
        self.total_failures == 0
    }

    pub fn summary(&self, check: Check) -> &CheckSummary {
        self.checks
            .iter()
            .find(|c| c.check == check)
            .expect("every check is summarized")
    }
}

pub fn plan_trial(cfg: &FuzzConfig, trial: usize) -> TrialPlan {
    let mut r = rng::stream(cfg.seed, &[rng::STREAM_ORDERS, trial as u64]);
    let n = r.random_range(1..=cfg.n_max);
    let g = r.random_range(0..=cfg.g_max);
    let inst = Instance::new(n, g).expect("n >= 1");
    let full = inst.full().bits();
    let sigma = SigmaSet::from_bits(r.random_range(0..=full));
    let sigma_prime = SigmaSet::from_bits(r.random_range(0..=full) & sigma.bits());
    let bounds = 1..=cfg.ord_max;
    let point = random_profile(&inst, sigma_prime, &bounds, &mut r).expect("valid bounds");

    let b_case = (!sigma.is_empty()).then(|| {
        let members: Vec<usize> = sigma.iter().collect();
        let s = members[r.random_range(0..members.len())];
        let mut p = random_profile(&inst, sigma.without(s), &bounds, &mut r).expect("valid bounds");
        let total: u32 = sigma.without(s).iter().filter_map(|i| p.ord_a(i)).sum();
        let boundary = total > 0 && r.random_ratio(1, 3);
        if boundary {
            p.b[s - 1] = Some(total);
        }
        BCase {
            s,
            point: p,
            boundary,
        }
    });

    let minimal_point =
        random_profile(&inst, SigmaSet::EMPTY, &bounds, &mut r).expect("valid bounds");
    let mu_empty = r.random_range(0..=4);
    TrialPlan {
        trial,
        inst,
        sigma,
        sigma_prime,
        point,
        b_case,
        minimal_point,
        mu_empty,
    }
}

fn realize<D: Dvr>(
    dvr: &D,
    cfg: &FuzzConfig,
    p: &PointProfile,
    trial: usize,
    tag: u64,
) -> OPoint<D::Elem> {
    let mut units = rng::stream(cfg.seed, &[rng::STREAM_UNITS, trial as u64, tag]);
    p.realize(dvr, &mut units)
}

pub fn run_trial<D: Dvr>(dvr: &D, cfg: &FuzzConfig, plan: &TrialPlan) -> TrialOutcome {
    let inst = &plan.inst;
    let oracle = |v: &OPoint<D::Elem>| {
        snf(
            dvr,
            &presentation_a(dvr, inst, plan.sigma, v).expect("interior points lie in V_Σ"),
        )
    };
    let v = realize(dvr, cfg, &plan.point, plan.trial, 0);
    let a_snf = oracle(&v);
    let a_snf_redrawn = oracle(&realize(dvr, cfg, &plan.point, plan.trial, 1));
    let a_oracle = a_snf.torsion_length() + u64::from(cfg.corrupt_oracle);
    let a_closed =
        length_closed_profile(inst, plan.sigma, &plan.point).expect("Σ' ⊆ Σ by construction");

    let (b_snf, b_oracle, b_closed, b_snf_redrawn) = match &plan.b_case {
        Some(bc) => {
            let b_oracle = |tag| {
                let w = realize(dvr, cfg, &bc.point, plan.trial, tag);
                snf(
                    dvr,
                    &presentation_b(dvr, inst, plan.sigma, bc.s, &w).expect("witness stratum"),
                )
            };
            let first = b_oracle(2);
            let closed =
                length_b_profile(inst, plan.sigma, bc.s, &bc.point).expect("witness stratum");
            (
                Some(first.clone()),
                Some(first.torsion_length()),
                Some(closed),
                Some(b_oracle(3)),
            )
        }
        None => (None, None, None, None),
    };

    let canonical = FamilySpec::free(*inst, 1);
    let psi_canonical =
        psi_length_profile(&canonical, plan.sigma, &plan.point).expect("canonical base defined");
    let mut mu = RankFunction::constant(inst.n, plan.mu_empty + 1);
    mu = RankFunction::from_vec(
        inst.n,
        mu.entries()
            .map(|(s, m)| if s.is_empty() { plan.mu_empty } else { m })
            .collect(),
    )
    .expect("2^n entries");
    let minimal =
        FamilySpec::new(*inst, mu, BasePsi::MinimalZero, FamilyFlags::default()).expect("same n");
    let psi_minimal =
        psi_length_profile(&minimal, plan.sigma, &plan.minimal_point).expect("minimal base at ∅");
    let phi_minimal =
        length_closed_profile(inst, plan.sigma, &plan.minimal_point).expect("v ∈ Z°_∅");

    TrialOutcome {
        a_snf,
        a_oracle,
        a_closed,
        a_snf_redrawn,
        b_snf,
        b_oracle,
        b_closed,
        b_snf_redrawn,
        psi_canonical,
        psi_minimal,
        phi_minimal,
    }
}

/// Checks that failed for one backend's outcome, with a short description each.
fn failed_checks(plan: &TrialPlan, out: &TrialOutcome) -> Vec<(Check, String)> {
    let mut bad = Vec::new();
    if out.a_closed != out.a_oracle {
        bad.push((
            Check::CotangentA,
            format!("closed {} vs oracle {}", out.a_closed, out.a_oracle),
        ));
    }
    if out.b_closed != out.b_oracle {
        bad.push((
            Check::CotangentB,
            format!("closed {:?} vs oracle {:?}", out.b_closed, out.b_oracle),
        ));
    }
    if out.a_snf.free_rank != plan.inst.height() {
        bad.push((
            Check::Regularity,
            format!(
                "free rank {} vs n+g = {}",
                out.a_snf.free_rank,
                plan.inst.height()
            ),
        ));
    }
    if out.a_snf != out.a_snf_redrawn || out.b_snf != out.b_snf_redrawn {
        bad.push((
            Check::UnitInvariance,
            "SNF changed after re-drawing units".into(),
        ));
    }
    if out.psi_canonical != out.a_closed {
        bad.push((
            Check::PsiTwoPath,
            format!(
                "recursion {} vs Φ-length {}",
                out.psi_canonical, out.a_closed
            ),
        ));
    }
    if out.psi_minimal != plan.mu_empty * out.phi_minimal {
        bad.push((
            Check::FreeSummand,
            format!(
                "Ψ {} vs μ_∅·Φ = {}",
                out.psi_minimal,
                plan.mu_empty * out.phi_minimal
            ),
        ));
    }
    bad
}

fn evaluated(check: Check, plan: &TrialPlan) -> bool {
    match check {
        Check::CotangentB => plan.b_case.is_some(),
        _ => true,
    }
}

struct TrialResult {
    plan: TrialPlan,
    outcomes: Vec<(String, TrialOutcome)>,
}

fn run_one(cfg: &FuzzConfig, trial: usize) -> TrialResult {
    let plan = plan_trial(cfg, trial);
    let p = cfg.backend.characteristic();
    let rational = RationalDvr::new(p).expect("validated prime");
    let poly = PolyDvr::new(p).expect("validated prime");
    let outcomes = vec![
        (rational.label(), run_trial(&rational, cfg, &plan)),
        (poly.label(), run_trial(&poly, cfg, &plan)),
    ];
    TrialResult { plan, outcomes }
}

pub fn run_fuzz(cfg: &FuzzConfig) -> FuzzReport {
    let results = cfg.execution.map_range(cfg.trials, |t| run_one(cfg, t));

    let mut counts: BTreeMap<Check, (usize, usize)> =
        Check::ALL.iter().map(|&c| (c, (0, 0))).collect();
    let mut first: Option<Counterexample> = None;
    let mut hasher = Sha256::new();

    for res in &results {
        let plan = &res.plan;
        hasher.update(serde_json::to_vec(plan).expect("serializable"));
        hasher.update(serde_json::to_vec(&res.outcomes[0].1).expect("serializable"));

        let mut failed: BTreeMap<Check, (String, String)> = BTreeMap::new();
        for (label, out) in &res.outcomes {
            for (check, detail) in failed_checks(plan, out) {
                failed
                    .entry(check)
                    .or_insert_with(|| (label.clone(), detail));
            }
        }
        let (l0, o0) = &res.outcomes[0];
        for (l1, o1) in &res.outcomes[1..] {
            if o0 != o1 {
                failed
                    .entry(Check::BackendInvariance)
                    .or_insert_with(|| (l1.clone(), format!("outcome differs from {l0}")));
            }
        }

        for (&check, entry) in counts.iter_mut() {
            if evaluated(check, plan) {
                entry.0 += 1;
                if failed.contains_key(&check) {
                    entry.1 += 1;
                }
            }
        }
        if first.is_none() {
            if let Some((&check, (backend, detail))) = failed.iter().next() {
                first = Some(Counterexample {
                    trial: plan.trial,
                    check,
                    backend: backend.clone(),
                    detail: detail.clone(),
                    instance_file: counterexample_file(cfg, plan, check, backend),
                });
            }
        }
    }

    let checks: Vec<CheckSummary> = counts
        .into_iter()
        .map(|(check, (evaluated, failures))| CheckSummary {
            check,
            evaluated,
            failures,
        })
        .collect();
    let total_failures = checks.iter().map(|c| c.failures).sum();
    let mut backends = vec![
        BackendSpec::Rational {
            p: cfg.backend.characteristic(),
        }
        .to_string(),
        BackendSpec::Poly {
            q: cfg.backend.characteristic(),
        }
        .to_string(),
    ];
    backends.sort();
    FuzzReport {
        n_max: cfg.n_max,
        g_max: cfg.g_max,
        ord_max: cfg.ord_max,
        trials: cfg.trials,
        seed: cfg.seed,
        backends,
        checks,
        total_failures,
        digest: hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect(),
        first_counterexample: first,
    }
}

fn counterexample_file(cfg: &FuzzConfig, plan: &TrialPlan, check: Check, backend: &str) -> String {
    let (point, s, tag) = match (check, &plan.b_case) {
        (Check::CotangentB, Some(bc)) => (&bc.point, Some(bc.s), 2),
        (Check::FreeSummand, _) => (&plan.minimal_point, None, u64::MAX),
        _ => (&plan.point, None, 0),
    };
    let spec: BackendSpec = backend.parse().unwrap_or(cfg.backend);
    let raw = crate::with_backend!(spec, |dvr| {
        if tag == u64::MAX {
            None
        } else {
            let v = realize(&dvr, cfg, point, plan.trial, tag);
            let fmt = |xs: &[_]| xs.iter().map(|x| dvr.format_elem(x)).collect::<Vec<_>>();
            Some((fmt(&v.a), fmt(&v.b), fmt(&v.c)))
        }
    });
    crate::cli::instance::render_counterexample(
        spec,
        plan.inst,
        plan.sigma,
        s,
        point,
        raw.as_ref(),
        plan.mu_empty,
        check,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(trials: usize) -> FuzzConfig {
        FuzzConfig {
            trials,
            ..Default::default()
        }
    }

    #[test]
    fn plans_are_deterministic() {
        let cfg = small(5);
        assert_eq!(plan_trial(&cfg, 3), plan_trial(&cfg, 3));
        assert_ne!(plan_trial(&cfg, 3), plan_trial(&cfg, 4));
    }

    #[test]
    fn small_sweep_passes() {
        let r = run_fuzz(&small(40));
        assert!(r.passed(), "{r:#?}");
        assert_eq!(r.summary(Check::CotangentA).evaluated, 40);
    }

    #[test]
    fn corrupted_oracle_is_caught() {
        let cfg = FuzzConfig {
            corrupt_oracle: true,
            ..small(5)
        };
        let r = run_fuzz(&cfg);
        assert!(!r.passed());
        let ce = r.first_counterexample.expect("counterexample");
        assert_eq!(ce.trial, 0);
        assert_eq!(ce.check, Check::CotangentA);
        assert!(ce.instance_file.contains("[points.counterexample]"));
    }

    #[test]
    fn sequential_and_parallel_reports_match() {
        let seq = run_fuzz(&FuzzConfig {
            execution: Execution::Sequential,
            ..small(30)
        });
        let par = run_fuzz(&small(30));
        assert_eq!(seq, par);
    }
}
