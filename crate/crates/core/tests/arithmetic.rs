use std::cmp::Ordering;

use num_traits::ToPrimitive;
use proptest::prelude::*;

use rotcocycle::arithmetic::{cf_expand, cf_identity_audit, convergents, determinant, dist_to_z, CfInput};
use rotcocycle::{BigInt, BigRational, LinearForm, PartialQuotients, RealSource, Session};

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn periodic() -> impl Strategy<Value = PartialQuotients> {
    (prop::collection::vec(1u64..6, 0..3), prop::collection::vec(1u64..9, 1..4)).prop_map(|(pre, per)| PartialQuotients::periodic(&pre, &per))
}

#[test]
fn golden_ladder_by_hand() {
    let cs = convergents(&PartialQuotients::golden(), 4);
    let q: Vec<i64> = cs.iter().map(|c| c.q.to_i64().unwrap()).collect();
    let p: Vec<i64> = cs.iter().map(|c| c.p.to_i64().unwrap()).collect();
    assert_eq!(q, [1, 1, 2, 3, 5]);
    assert_eq!(p, [0, 1, 1, 2, 3]);
}

#[test]
fn silver_ladder_by_hand() {
    let cs = convergents(&PartialQuotients::sqrt2m1(), 4);
    let v: Vec<BigRational> = cs.iter().map(|c| c.value()).collect();
    assert_eq!(v, [rat(0, 1), rat(1, 2), rat(2, 5), rat(5, 12), rat(12, 29)]);
}

#[test]
fn silver_norm_at_one_matches_surd() {
    // ‖2α‖ = (√2 − 1)² = 3 − 2√2 for α = √2 − 1.
    let s = Session::new(PartialQuotients::sqrt2m1());
    let d = s.to_f64(&s.dist_to_z_form(&LinearForm::alpha().scale_int(2)).unwrap());
    assert!((d - (3.0 - 2.0 * 2f64.sqrt())).abs() < 1e-15);
    assert!(1.0 / 7.0 <= d && d <= 1.0 / 5.0);
}

#[test]
fn distance_of_two_alpha_minus_one() {
    let s = Session::new(PartialQuotients::golden());
    let u = LinearForm::alpha().scale_int(2).add_int(-1);
    let d = dist_to_z(&s, &u).to_f64();
    assert!((d - (5f64.sqrt() - 2.0)).abs() < 1e-12);
    assert_eq!(dist_to_z(&s, &LinearForm::ratio(5, 2)).center(), rat(1, 2));
    assert_eq!(dist_to_z(&s, &LinearForm::ratio(7, 10)).center(), rat(3, 10));
}

#[test]
fn surd_expansions() {
    let src = RealSource::sqrt2_minus_1();
    let x = rotcocycle::AdaptiveReal::from_source(src, 256);
    assert_eq!(cf_expand(&CfInput::Real(x), 4).unwrap().prefix_u64(4), [2, 2, 2, 2]);
    let g = Session::new(PartialQuotients::golden()).adaptive(&LinearForm::alpha());
    assert_eq!(cf_expand(&CfInput::Real(g), 6).unwrap().prefix_u64(6), [1; 6]);
    assert_eq!(cf_expand(&CfInput::Rational(rat(2, 5)), 5).unwrap().prefix_u64(5), [2, 2]);
}

#[test]
fn declared_beta_compares_equal() {
    let mut s = Session::new(PartialQuotients::golden());
    let b = s.declare("b", LinearForm::alpha().scale_int(2).add_int(-1)).unwrap();
    assert_eq!(s.compare(&LinearForm::alpha().scale_int(2).add_int(-1), &b).unwrap(), Ordering::Equal);
    assert_eq!(s.compare(&LinearForm::alpha(), &LinearForm::ratio(1, 2)).unwrap(), Ordering::Greater);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn determinant_and_theta_identity(pq in periodic(), n in 1usize..25) {
        let cs = convergents(&pq, n + 1);
        for k in 1..=n {
            let d = determinant(&cs[k - 1], &cs[k]);
            prop_assert_eq!(d, if k % 2 == 0 { BigInt::from(1) } else { BigInt::from(-1) });
            // q_k|θ_{k+1}| + q_{k+1}|θ_k| = 1 as an exact form identity.
            let a = cs[k].theta.scale_int(cs[k].sign() as i64);
            let b = cs[k + 1].theta.scale_int(cs[k + 1].sign() as i64);
            prop_assert_eq!(&b.scale_big(&cs[k].q) + &a.scale_big(&cs[k + 1].q), LinearForm::int(1));
        }
    }

    #[test]
    fn audit_passes_on_periodic_alphas(pq in periodic(), n in 1usize..20) {
        let a = cf_identity_audit(&pq, n).unwrap();
        prop_assert!(a.all_pass());
    }

    #[test]
    fn convergent_round_trips_through_cf(pq in periodic(), n in 2usize..14) {
        let cs = convergents(&pq, n);
        let digits = pq.prefix_u64(n);
        let mut want = digits.clone();
        // Canonical form has last digit >= 2.
        if *want.last().unwrap() == 1 {
            want.pop();
            *want.last_mut().unwrap() += 1;
        }
        let got = cf_expand(&CfInput::Rational(cs[n].value()), n + 2).unwrap().prefix_u64(n + 2);
        prop_assert_eq!(got, want);
    }

    #[test]
    fn distance_enclosures_are_nested(a in -20i64..20, b in -50i64..50, c in 1i64..30) {
        let s = Session::new(PartialQuotients::golden());
        let u = &LinearForm::alpha().scale(&rat(a, c)) + &LinearForm::ratio(b, c);
        let coarse = s.enclose(&u, 40).dist_to_z();
        let fine = s.enclose(&u, 160).dist_to_z();
        prop_assert!(coarse.intersect(&fine).is_some());
        prop_assert!(fine.width() <= coarse.width());
        let exact = s.dist_to_z_form(&u).unwrap();
        let e = s.enclose(&exact, 200);
        prop_assert!(e.intersect(&fine).is_some());
    }

    #[test]
    fn compare_is_antisymmetric(a in -9i64..9, b in -9i64..9, c in -9i64..9, d in -9i64..9) {
        let s = Session::new(PartialQuotients::sqrt2m1());
        let x = LinearForm::alpha().scale_int(a).add_int(b);
        let y = LinearForm::alpha().scale_int(c).add_int(d);
        let xy = s.compare(&x, &y).unwrap();
        prop_assert_eq!(xy, s.compare(&y, &x).unwrap().reverse());
        prop_assert_eq!(xy == Ordering::Equal, a == c && b == d);
    }
}
