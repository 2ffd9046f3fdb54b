use std::cmp::Ordering;

use num_traits::{One, Signed, ToPrimitive, Zero};
use proptest::prelude::*;

use rotcocycle::arithmetic::convergents;
use rotcocycle::cocycles::{make_step, Piece, StepCocycle};
use rotcocycle::detect::{
    basis_completion, cluster_analysis, essential_value_witness, mesu_measure, quasi_period_scan, rational_reduction, regularity_report, wsd_check,
    ReportConfig, ReportInput, Verdict,
};
use rotcocycle::{BigInt, BigRational, LinearForm, PartialQuotients, RealSource, Session};

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn det(m: &[Vec<BigRational>]) -> BigRational {
    let d = m.len();
    let mut a = m.to_vec();
    let mut acc = BigRational::one();
    for c in 0..d {
        let Some(p) = (c..d).find(|&r| !a[r][c].is_zero()) else { return BigRational::zero() };
        if p != c {
            a.swap(c, p);
            acc = -acc;
        }
        acc *= a[c][c].clone();
        for r in c + 1..d {
            let f = &a[r][c] / &a[c][c];
            for k in c..d {
                let x = &f * &a[c][k];
                a[r][k] -= x;
            }
        }
    }
    acc
}

fn mat_vec(m: &[Vec<BigRational>], v: &[BigInt]) -> Vec<BigRational> {
    m.iter().map(|row| row.iter().zip(v).fold(BigRational::zero(), |acc, (x, y)| acc + x * BigRational::from_integer(y.clone()))).collect()
}

fn odd_times(s: &Session, depth: usize) -> Vec<i64> {
    let mut t = Vec::new();
    for c in convergents(s.alpha(), depth) {
        let q = c.q.to_i64().unwrap();
        if q % 2 == 1 && !t.contains(&q) {
            t.push(q);
        }
    }
    t
}

#[test]
fn persistent_atoms_of_half_indicator_are_witnessed() {
    let s = Session::new(PartialQuotients::golden());
    let phi = StepCocycle::indicator(&s, &LinearForm::ratio(1, 2)).unwrap();
    let r = quasi_period_scan(&s, &phi, &odd_times(&s, 14), &rat(1, 10), &[0.05]).unwrap();
    assert_eq!(r.persistent.len(), 2);
    assert!(!r.candidates.is_empty());
    for g in &r.candidates {
        let w = essential_value_witness(&s, &phi, g, &rat(1, 10), 2, 2000).unwrap();
        assert!(w.all_witnessed(), "candidate {g:?} failed on {:?}", w.failures());
        for hit in w.per_a.iter().flatten() {
            assert_eq!(s.sign(&hit.measure).unwrap(), Ordering::Greater);
        }
    }
}

#[test]
fn witness_rejects_a_non_value() {
    let s = Session::new(PartialQuotients::golden());
    // Coboundary 1_{[0,α)} − α: Φ_N ∈ (−1, 1), so 5 is never within 1/10.
    let phi = StepCocycle::indicator(&s, &LinearForm::alpha()).unwrap();
    let w = essential_value_witness(&s, &phi, &[LinearForm::int(5)], &rat(1, 10), 1, 200).unwrap();
    assert_eq!(w.failures(), vec![0, 1]);
}

#[test]
fn wsd_is_reproducible() {
    let mut s = Session::new(PartialQuotients::golden());
    let g = s.independent("g", RealSource::sqrt2_minus_1()).unwrap();
    let ind = StepCocycle::indicator(&s, &LinearForm::ratio(1, 2)).unwrap();
    let phi = StepCocycle::concat(&s, &[&ind, &ind.shifted(&s, &g).unwrap()]).unwrap();
    let ns: Vec<usize> = (1..=12).collect();
    let a = wsd_check(&s, &phi, &ns, &rat(1, 100)).unwrap();
    let b = wsd_check(&s, &phi, &ns, &rat(1, 100)).unwrap();
    assert_eq!(a.subsequence, b.subsequence);
    assert_eq!(a.candidates, b.candidates);
    for (x, y) in a.rows.iter().zip(&b.rows) {
        assert_eq!(x.min_gap, y.min_gap);
        assert_eq!(x.points, y.points);
    }
}

#[test]
fn reduction_of_two_half_indicators() {
    let s = Session::new(PartialQuotients::golden());
    let a = StepCocycle::indicator(&s, &LinearForm::ratio(1, 2)).unwrap();
    let b = StepCocycle::indicator(&s, &LinearForm::ratio(1, 3)).unwrap();
    let phi = StepCocycle::concat(&s, &[&a, &b]).unwrap();
    let r = rational_reduction(&s, &phi, 16, &rat(1, 1000), &rat(1, 20)).unwrap();
    assert!(r.d >= 1);
    assert!(!det(&r.m).is_zero());
    // M·Φ agrees with the reduced cocycle pointwise.
    let image = phi.linear_image(&s, &r.m).unwrap();
    for i in 0..200 {
        let x = LinearForm::ratio(2 * i + 1, 400);
        let u = image.value_at(&s, &x).unwrap();
        let v = r.reduced.value_at(&s, &x).unwrap();
        for (p, q) in u.iter().zip(&v) {
            assert_eq!(s.expand(p), s.expand(q), "x = {x}");
        }
    }
    // Each generator is the essential value of its step, mapped back.
    let gens = r.generators().unwrap();
    assert_eq!(gens.len(), r.d);
}

#[test]
fn cluster_members_have_distinct_kinds() {
    let mut s = Session::new(PartialQuotients::golden());
    let g = s.independent("g", RealSource::sqrt2_minus_1()).unwrap();
    let pieces = vec![
        Piece::new(LinearForm::zero(), LinearForm::ratio(1, 5), vec![LinearForm::int(1)]),
        Piece::new(LinearForm::ratio(1, 5), g.clone(), vec![LinearForm::int(-1)]),
        Piece::new(g.clone(), LinearForm::int(1), vec![LinearForm::int(2)]),
    ];
    let phi = make_step(&s, 1, pieces).unwrap();
    for n in 4..12 {
        let rep = cluster_analysis(&s, &phi, n, &rat(1, 10), &[0, 1, 2, 3], None).unwrap();
        for w in &rep.windows {
            for c in &w.clusters {
                let mut kinds: Vec<usize> = c.members.iter().map(|m| m.kind).collect();
                kinds.sort_unstable();
                kinds.dedup();
                assert_eq!(kinds.len(), c.members.len(), "n = {n}");
                assert!(c.members.iter().all(|m| (0.0..4.0).contains(&m.scaled)));
            }
        }
    }
}

#[test]
fn report_is_deterministic() {
    let s = Session::new(PartialQuotients::sqrt2m1());
    let phi = StepCocycle::indicator(&s, &LinearForm::ratio(1, 2)).unwrap();
    let cfg = ReportConfig::default();
    let a = regularity_report(&s, &ReportInput::Step(phi.clone()), &cfg).unwrap();
    let b = regularity_report(&s, &ReportInput::Step(phi), &cfg).unwrap();
    assert_eq!(a.verdict, b.verdict);
    assert_ne!(a.verdict, Verdict::NonRegularSuspect);
    let ca: Vec<_> = a.chain.iter().map(|e| (&e.op, &e.params, &e.summary)).collect();
    let cb: Vec<_> = b.chain.iter().map(|e| (&e.op, &e.params, &e.summary)).collect();
    assert_eq!(ca, cb);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn completion_is_unimodular(v in prop::collection::vec(-30i64..31, 2..5), level_seed in 0usize..4) {
        let theta: Vec<BigInt> = v.iter().map(|&x| BigInt::from(x)).collect();
        let level = level_seed % theta.len();
        let tail_gcd = v[level..].iter().fold(0i64, |g, &x| num_integer::gcd(g, x));
        prop_assume!(tail_gcd == 1);
        let m = basis_completion(&theta, level).unwrap();
        prop_assert_eq!(det(&m).abs(), BigRational::one());
        prop_assert!(m.iter().flatten().all(|x| x.is_integer()));
        let image = mat_vec(&m, &theta);
        for (i, x) in image.iter().enumerate().skip(level) {
            prop_assert_eq!(x.clone(), if i == level { BigRational::one() } else { BigRational::zero() });
        }
    }

    #[test]
    fn mesu_bound_holds_when_meaningful(cuts in prop::collection::btree_set(1i64..31, 1..5), n in 2usize..9, ell in 0i64..4) {
        let s = Session::new(PartialQuotients::golden());
        let mut ends: Vec<LinearForm> = vec![LinearForm::zero()];
        ends.extend(cuts.iter().map(|&c| LinearForm::ratio(c, 31)));
        ends.push(LinearForm::int(1));
        let pieces: Vec<Piece> = ends.windows(2).enumerate().map(|(i, w)| Piece::new(w[0].clone(), w[1].clone(), vec![LinearForm::int(i as i64 % 3)])).collect();
        let phi = make_step(&s, 1, pieces).unwrap();
        let q = convergents(s.alpha(), n)[n].q.to_i64().unwrap();
        let r = mesu_measure(&s, &phi, q, ell).unwrap();
        if s.sign(&r.bound).unwrap() == Ordering::Greater {
            prop_assert!(r.bound_holds);
        }
        prop_assert_ne!(s.sign(&r.measure).unwrap(), Ordering::Less);
        prop_assert_ne!(s.compare(&r.measure, &LinearForm::int(1)).unwrap(), Ordering::Greater);
    }
}
