use std::cmp::Ordering;

use num_traits::{One, Signed, ToPrimitive};
use proptest::prelude::*;

use rotcocycle::arithmetic::convergents;
use rotcocycle::cocycles::{
    affine_birkhoff_eval, affine_psi, birkhoff_eval, denjoy_koksma_audit, diagonal_line_check, make_step, normalize_discontinuities,
    pushforward, rationality_analysis, Piece, StepCocycle,
};
use rotcocycle::{BigInt, BigRational, LinearForm, PartialQuotients, RealSource, Session};

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Cut points `c/den`, values `v/w` per coordinate.
fn cocycle(s: &Session, den: i64, cuts: &[i64], values: &[Vec<(i64, i64)>]) -> StepCocycle {
    let mut ends = vec![LinearForm::zero()];
    ends.extend(cuts.iter().map(|&c| LinearForm::ratio(c, den)));
    ends.push(LinearForm::int(1));
    let d = values[0].len();
    let pieces = ends
        .windows(2)
        .zip(values)
        .map(|(w, v)| Piece::new(w[0].clone(), w[1].clone(), v.iter().map(|&(a, b)| LinearForm::ratio(a, b)).collect()))
        .collect();
    make_step(s, d, pieces).unwrap()
}

prop_compose! {
    fn cocycle_spec()(d in 1usize..3, den in prop::sample::select(vec![7i64, 10, 13, 31]))
        (cuts in prop::sample::subsequence((1..den).collect::<Vec<_>>(), 1..(den as usize - 1).min(6)),
         vals in prop::collection::vec(prop::collection::vec((-5i64..6, 1i64..4), d), 7),
         den in Just(den)) -> (i64, Vec<i64>, Vec<Vec<(i64, i64)>>) {
        let n = cuts.len() + 1;
        (den, cuts, vals[..n].to_vec())
    }
}

#[test]
fn golden_q4_sum_by_enumeration() {
    let s = Session::new(PartialQuotients::golden());
    let phi = StepCocycle::indicator(&s, &LinearForm::ratio(1, 2)).unwrap();
    // {kα}, k < 5: 0, .618, .236, .854, .472; three land in [0, 1/2).
    assert_eq!(birkhoff_eval(&s, &phi, 5, &LinearForm::zero()).unwrap(), vec![LinearForm::ratio(1, 2)]);
    let dk = denjoy_koksma_audit(&s, &phi, &[4]).unwrap();
    assert_eq!(dk.variation, vec![LinearForm::int(2)]);
}

#[test]
fn normalize_removes_shift_by_two_alpha() {
    let mut s = Session::new(PartialQuotients::golden());
    let beta = s.independent("beta", RealSource::sqrt2_minus_1()).unwrap();
    // β + 2α − 1 ≈ 0.650 lies in (β, 1).
    let b2 = (&beta + &LinearForm::alpha().scale_int(2)).add_int(-1);
    let pieces = vec![
        Piece::new(LinearForm::zero(), beta.clone(), vec![LinearForm::int(2)]),
        Piece::new(beta.clone(), b2.clone(), vec![LinearForm::int(1)]),
        Piece::new(b2.clone(), LinearForm::int(1), vec![LinearForm::zero()]),
    ];
    let phi = make_step(&s, 1, pieces).unwrap();
    assert_eq!(phi.discontinuity_count(), 3);
    let (norm, log) = normalize_discontinuities(&s, &phi).unwrap();
    assert_eq!(norm.discontinuity_count(), 2);
    assert_eq!(log.len(), 1);
    assert!(norm.jumps().iter().all(|j| j.at != b2) || norm.jumps().iter().all(|j| j.at != beta));
    // Pointwise: φ − φ' equals the logged transfer, and the transfer is G − G∘T.
    for i in 0..1000 {
        let x = LinearForm::ratio(2 * i + 1, 2000);
        let diff = &phi.value_at(&s, &x).unwrap()[0] - &norm.value_at(&s, &x).unwrap()[0];
        let t = &log[0];
        let added = t.eval(&s, &x).unwrap();
        assert_eq!(s.expand(&(&diff + &added[0])), LinearForm::zero(), "x = {x}");
        let g = t.transfer_fn(&s, &x).unwrap();
        let gt = t.transfer_fn(&s, &(&x + &LinearForm::alpha())).unwrap();
        assert_eq!(s.expand(&(&g[0] - &gt[0])), s.expand(&added[0]));
    }
}

#[test]
fn affine_closed_form_golden_q2() {
    let s = Session::new(PartialQuotients::golden());
    let psi = affine_psi(&s, &[]).unwrap();
    let x = LinearForm::ratio(1, 10);
    let e = affine_birkhoff_eval(&s, &psi, 2, &x).unwrap();
    let q = e.q.to_i64().unwrap();
    let formula = (&x.scale_int(q) + &LinearForm::alpha().scale(&rat(q * (q - 1), 2))).add_rational(&rat(-q, 2)).add_rational(&BigRational::from_integer(e.m[0].clone()));
    assert_eq!(s.expand(&e.values[0]), s.expand(&formula));
}

#[test]
fn affine_denjoy_koksma_bound() {
    let s = Session::new(PartialQuotients::golden());
    let psi = affine_psi(&s, &[]).unwrap();
    for n in 1..12 {
        for i in 0..25 {
            let x = LinearForm::ratio(4 * i + 1, 101);
            let e = affine_birkhoff_eval(&s, &psi, n, &x).unwrap();
            let v = s.abs(&e.values[0]).unwrap();
            assert_ne!(s.compare(&v, &LinearForm::int(2)).unwrap(), Ordering::Greater);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn pushforward_masses_and_distinct_atoms((den, cuts, vals) in cocycle_spec(), n in 1i64..60) {
        let s = Session::new(PartialQuotients::golden());
        let phi = cocycle(&s, den, &cuts, &vals);
        let pf = pushforward(&s, &phi, n).unwrap();
        prop_assert_eq!(pf.total_mass(), LinearForm::int(1));
        for a in &pf.atoms {
            prop_assert_eq!(s.sign(&a.mass).unwrap(), Ordering::Greater);
        }
        for i in 0..pf.atoms.len() {
            for j in i + 1..pf.atoms.len() {
                prop_assert_ne!(&pf.atoms[i].value, &pf.atoms[j].value);
            }
        }
    }

    #[test]
    fn denjoy_koksma_on_random_cocycles((den, cuts, vals) in cocycle_spec(), per in prop::collection::vec(1u64..4, 1..3)) {
        let s = Session::new(PartialQuotients::periodic(&[], &per));
        let phi = cocycle(&s, den, &cuts, &vals);
        let ns: Vec<usize> = convergents(s.alpha(), 30).iter().filter(|c| c.q <= BigInt::from(2000)).map(|c| c.n).collect();
        let r = denjoy_koksma_audit(&s, &phi, &ns).unwrap();
        for row in &r.rows {
            for (m, v) in row.max_abs.iter().zip(&r.variation) {
                prop_assert_ne!(s.compare(m, v).unwrap(), Ordering::Greater);
            }
        }
    }

    #[test]
    fn cocycle_identity((den, cuts, vals) in cocycle_spec(), n in -40i64..40, k in -40i64..40, xn in 0i64..101) {
        let s = Session::new(PartialQuotients::golden());
        let phi = cocycle(&s, den, &cuts, &vals);
        let x = LinearForm::ratio(xn, 101);
        let lhs = birkhoff_eval(&s, &phi, n + k, &x).unwrap();
        let a = birkhoff_eval(&s, &phi, n, &x).unwrap();
        let b = birkhoff_eval(&s, &phi, k, &(&x + &LinearForm::alpha().scale_int(n))).unwrap();
        for j in 0..lhs.len() {
            prop_assert_eq!(s.expand(&lhs[j]), s.expand(&(&a[j] + &b[j])));
        }
    }

    #[test]
    fn rational_atoms_sit_on_integer_lattice((den, cuts, vals) in cocycle_spec(), n in 1usize..9) {
        let s = Session::new(PartialQuotients::golden());
        let phi = cocycle(&s, den, &cuts, &vals);
        let ra = rationality_analysis(&s, &phi).unwrap();
        prop_assert!(ra.all_rational);
        let m = ra.multiplier.clone().unwrap();
        let betas = ra.betas.clone().unwrap();
        let q = convergents(s.alpha(), n)[n].q.clone();
        let pf = pushforward(&s, &phi, q.to_i64().unwrap()).unwrap();
        for a in &pf.atoms {
            for j in 0..phi.dim() {
                // M·φ_q + q·β_j is an integer: the sum of visit counts.
                let u = &a.value[j].scale_big(&m) + &betas[j].scale_big(&q);
                prop_assert!(s.expand(&u).is_integer(), "atom {} coordinate {}", a.value[j], j);
            }
        }
    }

    #[test]
    fn diagonal_line_never_fails(bs in prop::collection::vec((1i64..20, 2i64..21), 1..4), n in 1usize..8, seed in 0u64..1000) {
        let s = Session::new(PartialQuotients::golden());
        let betas: Vec<LinearForm> = bs.iter().map(|&(a, b)| LinearForm::ratio(a % b, b)).collect();
        let r = diagonal_line_check(&s, &betas, n, 20, seed).unwrap();
        prop_assert_eq!(r.samples.len(), 20);
    }

    #[test]
    fn scaling_keeps_variation((den, cuts, vals) in cocycle_spec(), c in 1i64..5) {
        let s = Session::new(PartialQuotients::golden());
        let phi = cocycle(&s, den, &cuts, &vals);
        let d = phi.dim();
        let m: Vec<Vec<BigRational>> = (0..d).map(|i| (0..d).map(|j| if i == j { rat(c, 1) } else { rat(0, 1) }).collect()).collect();
        let scaled = phi.linear_image(&s, &m).unwrap();
        for (a, b) in scaled.variation().iter().zip(phi.variation()) {
            prop_assert_eq!(a.clone(), b.scale_int(c));
        }
        prop_assert!(scaled.mean_removed().iter().all(|v| v.rational_part().abs() < BigRational::one() * BigInt::from(100)));
    }
}
