use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::form::LinearForm;
use super::pq::PartialQuotients;
use super::session::{rat_to_f64, Session};
use crate::{Error, Result};

/// Closed rational interval `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Interval {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl Interval {
    pub fn new(lo: BigRational, hi: BigRational) -> Self {
        debug_assert!(lo <= hi);
        Interval { lo, hi }
    }

    pub fn point(r: BigRational) -> Self {
        Interval { lo: r.clone(), hi: r }
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn center(&self) -> BigRational {
        (&self.lo + &self.hi) / BigRational::from_integer(BigInt::from(2))
    }

    pub fn radius(&self) -> BigRational {
        self.width() / BigRational::from_integer(BigInt::from(2))
    }

    pub fn contains(&self, r: &BigRational) -> bool {
        &self.lo <= r && r <= &self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = if self.lo > other.lo { &self.lo } else { &other.lo };
        let hi = if self.hi < other.hi { &self.hi } else { &other.hi };
        if lo <= hi {
            Some(Interval::new(lo.clone(), hi.clone()))
        } else {
            None
        }
    }

    /// Image under `u ↦ ‖u‖`.
    pub fn dist_to_z(&self) -> Interval {
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        let d = |x: &BigRational| {
            let f = x - x.floor();
            if f > half {
                BigRational::one() - f
            } else {
                f
            }
        };
        let (a, b) = (d(&self.lo), d(&self.hi));
        let mut lo = if a < b { a.clone() } else { b.clone() };
        let mut hi = if a > b { a } else { b };
        if self.lo.ceil() <= self.hi {
            lo = BigRational::zero();
        }
        if (&self.lo - &half).ceil() <= &self.hi - &half {
            hi = half;
        }
        Interval::new(lo, hi)
    }

    pub fn lo_f64(&self) -> f64 {
        rat_to_f64(&self.lo)
    }

    pub fn hi_f64(&self) -> f64 {
        rat_to_f64(&self.hi)
    }

    pub fn mid_f64(&self) -> f64 {
        rat_to_f64(&self.center())
    }

    /// Outward-rounded decimal endpoints with `digits` fractional digits.
    pub fn to_decimal_pair(&self, digits: usize) -> (String, String) {
        (decimal(&self.lo, digits, false), decimal(&self.hi, digits, true))
    }
}

/// Decimal rendering of `r`, rounded down (or up when `up`) at `digits` places.
pub fn decimal(r: &BigRational, digits: usize, up: bool) -> String {
    let scale = num_traits::pow(BigInt::from(10), digits);
    let scaled = r * BigRational::from_integer(scale.clone());
    let n = if up { scaled.ceil() } else { scaled.floor() }.to_integer();
    let neg = n.is_negative();
    let (ip, fp) = n.abs().div_rem(&scale);
    let mut s = String::new();
    if neg {
        s.push('-');
    }
    s.push_str(&ip.to_str_radix(10));
    if digits > 0 {
        s.push('.');
        let f = fp.to_str_radix(10);
        for _ in f.len()..digits {
            s.push('0');
        }
        s.push_str(&f);
    }
    s
}

type Refiner = Arc<dyn Fn(u32) -> Result<Interval> + Send + Sync>;

/// Real number known through an enclosure that can be shrunk on demand.
/// The true value always lies in `[lo, hi]`.
#[derive(Clone)]
pub struct AdaptiveReal {
    interval: Interval,
    bits: u32,
    refiner: Option<Refiner>,
    cap_bits: u32,
}

impl fmt::Debug for AdaptiveReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (lo, hi) = self.interval.to_decimal_pair(20);
        write!(f, "AdaptiveReal[{lo}, {hi}]")
    }
}

impl AdaptiveReal {
    pub fn exact(r: BigRational) -> Self {
        AdaptiveReal { interval: Interval::point(r), bits: u32::MAX, refiner: None, cap_bits: u32::MAX }
    }

    /// Wraps a function returning enclosures of width `≤ 2^-bits`.
    pub fn from_fn(refiner: Refiner, cap_bits: u32) -> Self {
        let bits = 64.min(cap_bits);
        let interval = refiner(bits).expect("initial enclosure");
        AdaptiveReal { interval, bits, refiner: Some(refiner), cap_bits }
    }

    pub fn from_source(source: super::session::RealSource, cap_bits: u32) -> Self {
        if let super::session::RealSource::Rational(r) = source {
            return Self::exact(r);
        }
        Self::from_fn(
            Arc::new(move |bits| {
                let (lo, hi) = source.bracket(bits);
                Ok(Interval::new(lo, hi))
            }),
            cap_bits,
        )
    }

    pub fn interval(&self) -> &Interval {
        &self.interval
    }

    pub fn lo(&self) -> &BigRational {
        &self.interval.lo
    }

    pub fn hi(&self) -> &BigRational {
        &self.interval.hi
    }

    pub fn center(&self) -> BigRational {
        self.interval.center()
    }

    pub fn radius(&self) -> BigRational {
        self.interval.radius()
    }

    pub fn is_exact(&self) -> bool {
        self.interval.lo == self.interval.hi
    }

    pub fn to_f64(&self) -> f64 {
        self.interval.mid_f64()
    }

    /// Doubles working precision until the radius is at most `eps`.
    pub fn refine(&self, eps: &BigRational) -> Result<AdaptiveReal> {
        let mut cur = self.clone();
        while &cur.radius() > eps {
            cur = cur.refine_once()?;
        }
        Ok(cur)
    }

    /// One refinement round at doubled precision, intersected with the
    /// current enclosure so successive enclosures are nested.
    pub fn refine_once(&self) -> Result<AdaptiveReal> {
        let Some(f) = &self.refiner else {
            return if self.is_exact() { Ok(self.clone()) } else { Err(Error::PrecisionExhausted) };
        };
        if self.bits >= self.cap_bits {
            return Err(Error::PrecisionExhausted);
        }
        let bits = self.bits.saturating_mul(2).min(self.cap_bits);
        let next = f(bits)?;
        let interval = next.intersect(&self.interval).unwrap_or(next);
        Ok(AdaptiveReal { interval, bits, refiner: self.refiner.clone(), cap_bits: self.cap_bits })
    }

    pub fn at_bits(&self, bits: u32) -> Result<AdaptiveReal> {
        let mut cur = self.clone();
        while cur.bits < bits.min(cur.cap_bits) && !cur.is_exact() {
            cur = cur.refine_once()?;
        }
        Ok(cur)
    }
}

/// Input to [`cf_expand`].
#[derive(Clone, Debug)]
pub enum CfInput {
    Rational(BigRational),
    Real(AdaptiveReal),
}

/// Continued-fraction digits of a rational in `(0,1)`; last digit `≥ 2`.
pub fn rational_digits(x: &BigRational) -> Vec<BigUint> {
    let mut out = Vec::new();
    let mut n = x.numer().clone();
    let mut d = x.denom().clone();
    // x = n/d in (0,1): a = floor(d/n), then x' = (d mod n)/n.
    while !n.is_zero() {
        let (a, r) = d.div_rem(&n);
        out.push(a.to_biguint().unwrap());
        d = n;
        n = r;
    }
    out
}

/// Digits `a_1 … a_depth` of `x`. Rationals terminate early.
pub fn cf_expand(x: &CfInput, depth: usize) -> Result<PartialQuotients> {
    let zero = BigRational::zero();
    let one = BigRational::one();
    match x {
        CfInput::Rational(r) => {
            if r <= &zero || r >= &one {
                return Err(Error::Precondition(String::from("cf_expand needs x in (0,1)")));
            }
            let mut d = rational_digits(r);
            d.truncate(depth);
            Ok(PartialQuotients::list_big(d))
        }
        CfInput::Real(a) => {
            if a.is_exact() {
                return cf_expand(&CfInput::Rational(a.center()), depth);
            }
            let mut cur = a.clone();
            loop {
                if cur.lo() > &zero && cur.hi() < &one {
                    let p = certain_prefix(cur.lo(), cur.hi());
                    if p.len() >= depth {
                        let mut p = p;
                        p.truncate(depth);
                        return Ok(PartialQuotients::list_big(p));
                    }
                }
                if cur.is_exact() {
                    return cf_expand(&CfInput::Rational(cur.center()), depth);
                }
                cur = cur.refine_once()?;
            }
        }
    }
}

/// Digits shared by every real in `[lo, hi]`. The final digit of each
/// endpoint expansion is ambiguous (`[…, a] = […, a−1, 1]`) and is dropped.
fn certain_prefix(lo: &BigRational, hi: &BigRational) -> Vec<BigUint> {
    let a = rational_digits(lo);
    let b = rational_digits(hi);
    let la = a.len().saturating_sub(1);
    let lb = b.len().saturating_sub(1);
    a.iter()
        .take(la)
        .zip(b.iter().take(lb))
        .take_while(|(x, y)| x == y)
        .map(|(x, _)| x.clone())
        .collect()
}

/// `‖u‖ = inf_n |u − n|` as a refinable real; exactly 0 when `u` is an integer.
pub fn dist_to_z(session: &Session, u: &LinearForm) -> AdaptiveReal {
    let e = session.expand(u);
    if let Some(r) = e.as_rational() {
        return AdaptiveReal::exact(Interval::point(r).dist_to_z().lo);
    }
    let s = session.clone();
    AdaptiveReal::from_fn(Arc::new(move |bits| Ok(s.enclose(&e, bits).dist_to_z())), session.cap_bits())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arithmetic::session::RealSource;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn rational_expansion_terminates() {
        let pq = cf_expand(&CfInput::Rational(q(2, 5)), 5).unwrap();
        assert_eq!(pq.prefix_u64(10), [2, 2]);
    }

    #[test]
    fn refinable_expansion() {
        let x = AdaptiveReal::from_source(RealSource::sqrt2_minus_1(), 256);
        let pq = cf_expand(&CfInput::Real(x), 4).unwrap();
        assert_eq!(pq.prefix_u64(10), [2, 2, 2, 2]);
    }

    #[test]
    fn capped_expansion_exhausts() {
        let x = AdaptiveReal::from_source(RealSource::sqrt2_minus_1(), 64);
        assert_eq!(cf_expand(&CfInput::Real(x), 200).unwrap_err(), Error::PrecisionExhausted);
    }

    #[test]
    fn distance_examples() {
        let s = Session::new(PartialQuotients::golden());
        assert_eq!(dist_to_z(&s, &LinearForm::ratio(5, 2)).center(), q(1, 2));
        assert_eq!(dist_to_z(&s, &LinearForm::ratio(7, 10)).center(), q(3, 10));
        assert!(dist_to_z(&s, &LinearForm::int(-4)).is_exact());
    }

    #[test]
    fn interval_distance_crossing() {
        let i = Interval::new(q(-1, 10), q(1, 10));
        assert_eq!(i.dist_to_z(), Interval::new(q(0, 1), q(1, 10)));
        let j = Interval::new(q(4, 10), q(6, 10));
        assert_eq!(j.dist_to_z(), Interval::new(q(4, 10), q(1, 2)));
    }

    #[test]
    fn decimals() {
        assert_eq!(decimal(&q(-1, 3), 3, false), "-0.334");
        assert_eq!(decimal(&q(1, 3), 3, true), "0.334");
        assert_eq!(decimal(&q(1, 8), 2, false), "0.12");
    }
}
