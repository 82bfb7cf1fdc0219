use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wiles_defect::congruence::{
    psi_length_along, psi_length_profile, BasePsi, FamilyFlags, FamilySpec, RankFunction,
};
use wiles_defect::cotangent::{length_closed_profile, presentation_a};
use wiles_defect::dvr::{Dvr, PolyDvr, RationalDvr, Valuation};
use wiles_defect::fpmod::{snf, Presentation, SnfResult};
use wiles_defect::ringfam::{random_profile, Instance, PointProfile, SigmaSet};

fn rational() -> RationalDvr {
    RationalDvr::new(5).unwrap()
}

fn poly() -> PolyDvr {
    PolyDvr::new(5).unwrap()
}

/// `None` is zero, `Some(k)` a random unit times ϖ^k.
fn elem<D: Dvr>(d: &D, ord: Option<u32>, rng: &mut ChaCha8Rng) -> D::Elem {
    match ord {
        None => d.zero(),
        Some(k) => d.element(k, &d.random_unit(rng)),
    }
}

fn ord_strategy() -> impl Strategy<Value = Option<u32>> {
    prop_oneof![1 => Just(None), 4 => (0u32..6).prop_map(Some)]
}

fn check_ord_laws<D: Dvr>(d: &D, x: Option<u32>, y: Option<u32>, seed: u64) {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let a = elem(d, x, &mut r);
    let b = elem(d, y, &mut r);
    let fin = |o: Option<u32>| o.map_or(Valuation::Infinite, Valuation::Finite);
    assert_eq!(d.ord(&a), fin(x));
    assert_eq!(d.ord(&d.mul(&a, &b)), fin(x) + fin(y));
    assert!(d.ord(&d.add(&a, &b)) >= fin(x).min(fin(y)));
    if x != y {
        assert_eq!(d.ord(&d.add(&a, &b)), fin(x).min(fin(y)));
    }
    if let (Some(i), Some(j)) = (x, y) {
        if j <= i {
            let q = d.divide_exact(&a, &b).unwrap();
            assert_eq!(d.ord(&q), Valuation::Finite(i - j));
            assert_eq!(d.mul(&q, &b), a);
        } else {
            assert!(d.divide_exact(&a, &b).is_err());
        }
    }
}

fn random_matrix<D: Dvr>(d: &D, ords: &[Vec<Option<u32>>], seed: u64) -> Vec<Vec<D::Elem>> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    ords.iter()
        .map(|row| row.iter().map(|&o| elem(d, o, &mut r)).collect())
        .collect()
}

fn invariant(s: &SnfResult) -> (Vec<u32>, usize) {
    let mut t = s.torsion_divisors();
    t.sort_unstable();
    (t, s.free_rank)
}

/// SNF data is unchanged by row and column permutations, unit scalings, adding a
/// multiple of one row to another, and appending a redundant row.
fn check_snf_metamorphic<D: Dvr>(d: &D, ords: &[Vec<Option<u32>>], seed: u64) {
    let cols = ords[0].len();
    let rows = random_matrix(d, ords, seed);
    let base = invariant(&snf(d, &Presentation::new(cols, rows.clone()).unwrap()));
    let mut r = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);

    let mut permuted = rows.clone();
    permuted.reverse();
    let perm: Vec<usize> = (0..cols).rev().collect();
    let permuted: Vec<Vec<D::Elem>> = permuted
        .into_iter()
        .map(|row| perm.iter().map(|&j| row[j].clone()).collect())
        .collect();
    assert_eq!(
        invariant(&snf(d, &Presentation::new(cols, permuted).unwrap())),
        base
    );

    let scaled: Vec<Vec<D::Elem>> = rows
        .iter()
        .map(|row| {
            let u = d.random_unit(&mut r);
            row.iter().map(|x| d.mul(x, &u)).collect()
        })
        .collect();
    let col_units: Vec<D::Elem> = (0..cols).map(|_| d.random_unit(&mut r)).collect();
    let scaled: Vec<Vec<D::Elem>> = scaled
        .into_iter()
        .map(|row| {
            row.iter()
                .zip(&col_units)
                .map(|(x, u)| d.mul(x, u))
                .collect()
        })
        .collect();
    assert_eq!(
        invariant(&snf(d, &Presentation::new(cols, scaled).unwrap())),
        base
    );

    if rows.len() >= 2 {
        let k = d.element(r.random_range(0..3), &d.random_unit(&mut r));
        let mut sheared = rows.clone();
        sheared[0] = rows[0]
            .iter()
            .zip(&rows[1])
            .map(|(x, y)| d.add(x, &d.mul(&k, y)))
            .collect();
        assert_eq!(
            invariant(&snf(d, &Presentation::new(cols, sheared).unwrap())),
            base
        );

        let mut redundant = rows.clone();
        redundant.push(
            rows[0]
                .iter()
                .zip(&rows[1])
                .map(|(x, y)| d.sub(x, y))
                .collect(),
        );
        let got = invariant(&snf(d, &Presentation::new(cols, redundant).unwrap()));
        assert_eq!(got, base);
    }
}

fn matrix_strategy() -> impl Strategy<Value = Vec<Vec<Option<u32>>>> {
    (1usize..=4, 1usize..=4)
        .prop_flat_map(|(m, n)| prop::collection::vec(prop::collection::vec(ord_strategy(), n), m))
}

fn profile_strategy() -> impl Strategy<Value = (Instance, SigmaSet, SigmaSet, PointProfile, u64)> {
    (1usize..=3, 0usize..=2, any::<u64>()).prop_map(|(n, g, seed)| {
        let inst = Instance::new(n, g).unwrap();
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let full = inst.full().bits();
        let sigma = SigmaSet::from_bits(r.random_range(0..=full));
        let sp = SigmaSet::from_bits(r.random_range(0..=full) & sigma.bits());
        let p = random_profile(&inst, sp, &(1..=6), &mut r).unwrap();
        (inst, sigma, sp, p, seed)
    })
}

fn oracle_length<D: Dvr>(
    d: &D,
    inst: &Instance,
    sigma: SigmaSet,
    p: &PointProfile,
    seed: u64,
) -> SnfResult {
    let v = p.realize(d, &mut ChaCha8Rng::seed_from_u64(seed));
    snf(d, &presentation_a(d, inst, sigma, &v).unwrap())
}

fn random_mu(n: usize, r: &mut ChaCha8Rng) -> RankFunction {
    RankFunction::from_vec(n, (0..1usize << n).map(|_| r.random_range(0..=4)).collect()).unwrap()
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let x = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ord_is_multiplicative_and_ultrametric(x in ord_strategy(), y in ord_strategy(), seed in any::<u64>()) {
        check_ord_laws(&rational(), x, y, seed);
        check_ord_laws(&poly(), x, y, seed);
    }

    #[test]
    fn snf_is_invariant_under_equivalences(ords in matrix_strategy(), seed in any::<u64>()) {
        check_snf_metamorphic(&rational(), &ords, seed);
        check_snf_metamorphic(&poly(), &ords, seed);
    }

    #[test]
    fn cotangent_lengths_ignore_units((inst, sigma, _sp, p, seed) in profile_strategy()) {
        let closed = length_closed_profile(&inst, sigma, &p).unwrap();
        for s in [seed, seed.wrapping_add(1)] {
            let a = oracle_length(&rational(), &inst, sigma, &p, s);
            let b = oracle_length(&poly(), &inst, sigma, &p, s);
            prop_assert_eq!(a.torsion_length(), closed);
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(a.free_rank, inst.height());
        }
    }

    #[test]
    fn telescoping_is_order_independent((inst, sigma, sp, p, seed) in profile_strategy()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let mu = random_mu(inst.n, &mut r);
        let fam = FamilySpec::new(inst, mu, BasePsi::Canonical, FamilyFlags::default()).unwrap();
        let direct = psi_length_profile(&fam, sigma, &p).unwrap();
        let missing: Vec<usize> = sigma.minus(sp).iter().collect();
        for order in permutations(&missing) {
            prop_assert_eq!(psi_length_along(&fam, sigma, &p, &order).unwrap(), direct);
        }
    }

    #[test]
    fn psi_is_additive_over_direct_sums((inst, sigma, _sp, p, seed) in profile_strategy()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed ^ 2);
        let f1 = FamilySpec::new(inst, random_mu(inst.n, &mut r), BasePsi::Canonical, FamilyFlags::default()).unwrap();
        let f2 = FamilySpec::new(inst, random_mu(inst.n, &mut r), BasePsi::Canonical, FamilyFlags::default()).unwrap();
        let sum = f1.direct_sum(&f2).unwrap();
        let lhs = psi_length_profile(&sum, sigma, &p).unwrap();
        let rhs = psi_length_profile(&f1, sigma, &p).unwrap() + psi_length_profile(&f2, sigma, &p).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn free_families_scale_phi((inst, sigma, _sp, p, _seed) in profile_strategy(), k in 0u64..5) {
        let phi = length_closed_profile(&inst, sigma, &p).unwrap();
        let fam = FamilySpec::free(inst, k);
        prop_assert_eq!(psi_length_profile(&fam, sigma, &p).unwrap(), k * phi);
    }
}
