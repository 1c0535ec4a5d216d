use std::collections::BTreeSet;

use chi_verify::identity::{build_lhs_canonical, build_rhs, shift_sets};
use chi_verify::verifier::{
    enumerate_antichains, enumerate_feasible_valuations, euler_lhs_inner_check, euler_rhs_check, evaluate,
    verify_by_cancellation, verify_sums_by_sampling, verify_sums_by_valuations, AntichainValuation, VerdictKind,
};
use chi_verify::zero::{lp_zero_test, witness_is_valid, ZeroKind};
use chi_verify::{FormalSum, Subset, Term, ZeroCache};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_region_point(n: usize, rng: &mut impl Rng) -> Vec<BigRational> {
    let a: Vec<i64> = (0..=n).map(|_| rng.gen_range(1..10_000)).collect();
    let total: i64 = a.iter().sum();
    a[..n].iter().map(|&x| BigRational::new(BigInt::from(2 * x), BigInt::from(total))).collect()
}

fn random_sum(n: usize, rng: &mut impl Rng) -> FormalSum {
    let mut s = FormalSum::zero(n).unwrap();
    for _ in 0..rng.gen_range(1..8) {
        let sets: Vec<Subset> =
            (0..rng.gen_range(0..4)).map(|_| Subset::new(n, rng.gen_range(0..(1u32 << n))).unwrap()).collect();
        s.add_term(Term::new(n, sets).unwrap(), BigInt::from(rng.gen_range(-4..=4)));
    }
    s
}

#[test]
fn dedekind_counts() {
    let counts: Vec<usize> = (0..=5).map(|n| enumerate_antichains(n).unwrap().len()).collect();
    assert_eq!(counts, vec![2, 3, 6, 20, 168, 7581]);
}

#[test]
fn feasible_valuations_match_brute_force() {
    let cache = ZeroCache::in_memory();
    for n in 1..=5 {
        let brute: BTreeSet<AntichainValuation> = enumerate_antichains(n)
            .unwrap()
            .into_iter()
            .filter(|v| v.is_empty() || lp_zero_test(&v.term()).kind == ZeroKind::Nonzero)
            .collect();
        let found: Vec<AntichainValuation> = enumerate_feasible_valuations(n, &cache).unwrap();
        assert_eq!(found.len(), brute.len(), "n={n}");
        assert_eq!(found.into_iter().collect::<BTreeSet<_>>(), brute, "n={n}");
    }
    assert_eq!(enumerate_feasible_valuations(1, &cache).unwrap().len(), 2);
    assert_eq!(enumerate_feasible_valuations(2, &cache).unwrap().len(), 4);
}

#[test]
fn point_values_factor_through_valuations() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n in 1..=3 {
        let sums: Vec<FormalSum> = (0..5).map(|_| random_sum(n, &mut rng)).collect();
        for _ in 0..500 {
            let u = random_region_point(n, &mut rng);
            // the fired sets form an up-set
            let fired: Vec<u16> =
                (0..(1u16 << n)).filter(|&a| chi_verify::algebra::indicator_at(a, &u)).collect();
            for &a in &fired {
                for b in 0..(1u16 << n) {
                    if a & !b == 0 {
                        assert!(fired.contains(&b));
                    }
                }
            }
            let v = AntichainValuation::from_point(&u).unwrap();
            for s in &sums {
                assert_eq!(evaluate(s, &v), s.eval_at(&u));
            }
        }
    }
}

#[test]
fn feasible_valuations_are_realized_by_points() {
    let cache = ZeroCache::in_memory();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 1..=3 {
        let feasible: BTreeSet<AntichainValuation> =
            enumerate_feasible_valuations(n, &cache).unwrap().into_iter().collect();
        let realized: BTreeSet<AntichainValuation> = (0..50_000)
            .map(|_| AntichainValuation::from_point(&random_region_point(n, &mut rng)).unwrap())
            .collect();
        assert_eq!(realized, feasible, "n={n}");
    }
}

/// A planted defect: the left side with one random modification.
fn plant(lhs: &FormalSum, rng: &mut impl Rng) -> FormalSum {
    let n = lhs.n();
    let mut out = lhs.clone();
    let terms: Vec<Term> = lhs.sorted().into_iter().map(|(t, _)| t.clone()).collect();
    match rng.gen_range(0..3) {
        0 => {
            let t = terms[rng.gen_range(0..terms.len())].clone();
            out.add_term(t, BigInt::from(*[-2, -1, 1, 2].get(rng.gen_range(0..4)).unwrap()));
        }
        1 => {
            let t = terms[rng.gen_range(0..terms.len())].clone();
            let c = lhs.coeff(&t);
            out.add_term(t, -c);
        }
        _ => {
            let all = enumerate_antichains(n).unwrap();
            let w = &all[rng.gen_range(0..all.len())];
            out.add_term(w.term(), BigInt::from(rng.gen_range(1..=3)));
        }
    }
    out
}

#[test]
fn methods_agree_on_identity_and_planted_defects() {
    let cache = ZeroCache::in_memory();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for n in 1..=5 {
        let lhs = build_lhs_canonical(n, false, &cache).unwrap().sum;
        let rhs = build_rhs(n).unwrap();
        let mut cases = vec![lhs.clone()];
        cases.extend((0..20).map(|_| plant(&lhs, &mut rng)));
        let mut not_equal = 0;
        for (i, case) in cases.iter().enumerate() {
            let c = verify_by_cancellation(case, &rhs, &cache).unwrap();
            let v = verify_sums_by_valuations(case, &rhs, &cache).unwrap();
            match v.verdict {
                VerdictKind::NotEqual => {
                    not_equal += 1;
                    assert_eq!(c.verdict, VerdictKind::Inconclusive, "n={n} case {i}");
                    let w = v.witness.as_ref().unwrap();
                    let point: Vec<BigRational> = w.point.iter().map(|p| p.parse().unwrap()).collect();
                    let wv = AntichainValuation::new(
                        n,
                        w.valuation.iter().map(|e| Subset::from_elements(n, e).unwrap()),
                    )
                    .unwrap();
                    assert!(witness_is_valid(&wv.term(), &point));
                    assert_ne!(evaluate(case, &wv), evaluate(&rhs, &wv));
                }
                VerdictKind::ProvedEqual => assert_eq!(c.verdict, VerdictKind::ProvedEqual, "n={n} case {i}"),
                VerdictKind::Inconclusive => panic!("exhaustive valuations never return Inconclusive"),
            }
            assert_ne!(c.verdict, VerdictKind::NotEqual);
        }
        assert_eq!(
            verify_sums_by_valuations(&lhs, &rhs, &cache).unwrap().verdict,
            VerdictKind::ProvedEqual
        );
        assert!(not_equal > 0, "n={n}: no planted defect was detectable");
    }
}

#[test]
fn sampling_finds_defects_but_never_proves() {
    let cache = ZeroCache::in_memory();
    let lhs = build_lhs_canonical(3, false, &cache).unwrap().sum;
    let rhs = build_rhs(3).unwrap();
    let v = verify_sums_by_sampling(&lhs, &rhs, 2000, 1).unwrap();
    assert_eq!(v.verdict, VerdictKind::Inconclusive);
    assert!(!v.exhaustive);
    let mut bad = rhs.clone();
    bad.add_term(Term::generator(Subset::from_elements(3, &[1, 2, 3]).unwrap()), BigInt::from(1));
    let v = verify_sums_by_sampling(&lhs, &bad, 2000, 1).unwrap();
    assert_eq!(v.verdict, VerdictKind::NotEqual);
    let w = v.witness.unwrap();
    let point: Vec<BigRational> = w.point.iter().map(|p| p.parse().unwrap()).collect();
    let at = AntichainValuation::from_point(&point).unwrap();
    assert_eq!(at.to_lists(), w.valuation);
    assert_ne!(lhs.eval_at(&point), bad.eval_at(&point));
}

#[test]
fn euler_forms_hold_at_every_feasible_valuation() {
    let cache = ZeroCache::in_memory();
    for n in 1..=4 {
        for v in enumerate_feasible_valuations(n, &cache).unwrap() {
            euler_rhs_check(&v).unwrap();
            for j in shift_sets(n).unwrap() {
                euler_lhs_inner_check(j, &v).unwrap();
            }
        }
    }
}
