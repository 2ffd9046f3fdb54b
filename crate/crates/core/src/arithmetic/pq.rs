use alloc::vec::Vec;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use super::form::LinearForm;

/// Rule producing the partial quotients `a_1, a_2, …`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DigitRule {
    /// Finite expansion; the number is rational.
    List(Vec<BigUint>),
    /// `prefix` followed by `period` repeated forever.
    Periodic { prefix: Vec<BigUint>, period: Vec<BigUint> },
    /// `a_n = max(1, round(c_0 + c_1 n + …))`, rounding half up.
    Poly(Vec<BigRational>),
    /// `a_n = 2^n`.
    Pow2,
}

/// Continued-fraction digits of a number in `(0, 1)`: `[0; a_1, a_2, …]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialQuotients {
    rule: DigitRule,
    bounded_hint: bool,
}

impl PartialQuotients {
    pub fn new(rule: DigitRule) -> Self {
        let bounded_hint = matches!(rule, DigitRule::List(_) | DigitRule::Periodic { .. })
            || matches!(&rule, DigitRule::Poly(c) if c.iter().skip(1).all(Zero::is_zero));
        PartialQuotients { rule, bounded_hint }
    }

    pub fn golden() -> Self {
        Self::periodic(&[], &[1])
    }

    pub fn sqrt2m1() -> Self {
        Self::periodic(&[], &[2])
    }

    pub fn periodic(prefix: &[u64], period: &[u64]) -> Self {
        assert!(!period.is_empty(), "empty period");
        Self::new(DigitRule::Periodic {
            prefix: prefix.iter().map(|&a| BigUint::from(a.max(1))).collect(),
            period: period.iter().map(|&a| BigUint::from(a.max(1))).collect(),
        })
    }

    pub fn list(digits: &[u64]) -> Self {
        Self::new(DigitRule::List(digits.iter().map(|&a| BigUint::from(a.max(1))).collect()))
    }

    pub fn list_big(digits: Vec<BigUint>) -> Self {
        let digits = digits
            .into_iter()
            .map(|a| if a.is_zero() { BigUint::one() } else { a })
            .collect();
        Self::new(DigitRule::List(digits))
    }

    pub fn poly(coeffs: Vec<BigRational>) -> Self {
        Self::new(DigitRule::Poly(coeffs))
    }

    pub fn pow2() -> Self {
        Self::new(DigitRule::Pow2)
    }

    pub fn with_bounded_hint(mut self, bounded: bool) -> Self {
        self.bounded_hint = bounded;
        self
    }

    pub fn rule(&self) -> &DigitRule {
        &self.rule
    }

    pub fn bounded_hint(&self) -> bool {
        self.bounded_hint
    }

    /// Number of digits when the expansion is finite.
    pub fn len(&self) -> Option<usize> {
        match &self.rule {
            DigitRule::List(v) => Some(v.len()),
            _ => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.len().is_some()
    }

    /// `a_n` for `n ≥ 1`; `None` past the end of a finite expansion.
    pub fn digit(&self, n: usize) -> Option<BigUint> {
        if n == 0 {
            return None;
        }
        match &self.rule {
            DigitRule::List(v) => v.get(n - 1).cloned(),
            DigitRule::Periodic { prefix, period } => {
                if n <= prefix.len() {
                    Some(prefix[n - 1].clone())
                } else {
                    Some(period[(n - 1 - prefix.len()) % period.len()].clone())
                }
            }
            DigitRule::Poly(c) => {
                let x = BigRational::from_integer(BigInt::from(n));
                let mut acc = BigRational::zero();
                for coef in c.iter().rev() {
                    acc = acc * &x + coef;
                }
                let half = BigRational::new(BigInt::one(), BigInt::from(2));
                let r = (acc + half).floor().to_integer();
                if r < BigInt::one() {
                    Some(BigUint::one())
                } else {
                    Some(r.to_biguint().unwrap())
                }
            }
            DigitRule::Pow2 => Some(BigUint::one() << n),
        }
    }

    /// `a_1, …, a_len`, shorter if the expansion ends first.
    pub fn prefix(&self, len: usize) -> Vec<BigUint> {
        (1..=len).map_while(|n| self.digit(n)).collect()
    }

    /// Exact value of a finite expansion.
    pub fn rational_value(&self) -> Option<BigRational> {
        let n = self.len()?;
        let c = convergents(self, n);
        let last = c.last().unwrap();
        Some(BigRational::new(last.p.clone(), last.q.clone()))
    }

    /// Rational bracket `[lo, hi]` of the value with `hi − lo ≤ 2^-bits`.
    pub fn bracket(&self, bits: u32) -> (BigRational, BigRational) {
        let target = BigInt::one() << (bits as usize);
        let mut it = ConvergentIter::new(self);
        let mut prev = it.next().unwrap();
        for cur in it {
            if &prev.q * &cur.q >= target {
                let a = BigRational::new(prev.p.clone(), prev.q.clone());
                let b = BigRational::new(cur.p.clone(), cur.q.clone());
                return if a <= b { (a, b) } else { (b, a) };
            }
            prev = cur;
        }
        let v = BigRational::new(prev.p.clone(), prev.q.clone());
        (v.clone(), v)
    }

    /// Digits as small integers, for display. Saturates at `u64::MAX`.
    pub fn prefix_u64(&self, len: usize) -> Vec<u64> {
        self.prefix(len).iter().map(|a| a.to_u64().unwrap_or(u64::MAX)).collect()
    }
}

/// The convergent `p_n / q_n` together with `θ_n = q_n α − p_n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Convergent {
    pub n: usize,
    pub p: BigInt,
    pub q: BigInt,
    pub theta: LinearForm,
}

impl Convergent {
    fn new(n: usize, p: BigInt, q: BigInt) -> Self {
        let theta = &LinearForm::alpha().scale_big(&q) - &LinearForm::big_int(p.clone());
        Convergent { n, p, q, theta }
    }

    /// `(−1)^n`, the sign of `θ_n`.
    pub fn sign(&self) -> i32 {
        if self.n.is_even() {
            1
        } else {
            -1
        }
    }

    pub fn value(&self) -> BigRational {
        BigRational::new(self.p.clone(), self.q.clone())
    }
}

/// Iterates `(p_0/q_0), (p_1/q_1), …` from seeds `p_{-1}=1, p_0=0, q_{-1}=0, q_0=1`.
pub struct ConvergentIter<'a> {
    pq: &'a PartialQuotients,
    n: usize,
    p: (BigInt, BigInt),
    q: (BigInt, BigInt),
    started: bool,
}

impl<'a> ConvergentIter<'a> {
    pub fn new(pq: &'a PartialQuotients) -> Self {
        ConvergentIter {
            pq,
            n: 0,
            p: (BigInt::one(), BigInt::zero()),
            q: (BigInt::zero(), BigInt::one()),
            started: false,
        }
    }
}

impl Iterator for ConvergentIter<'_> {
    type Item = Convergent;

    fn next(&mut self) -> Option<Convergent> {
        if !self.started {
            self.started = true;
            return Some(Convergent::new(0, self.p.1.clone(), self.q.1.clone()));
        }
        let a = BigInt::from(self.pq.digit(self.n + 1)?);
        let p = &a * &self.p.1 + &self.p.0;
        let q = &a * &self.q.1 + &self.q.0;
        self.p = (core::mem::take(&mut self.p.1), p.clone());
        self.q = (core::mem::take(&mut self.q.1), q.clone());
        self.n += 1;
        Some(Convergent::new(self.n, p, q))
    }
}

/// Convergents `k = 0…n` (fewer if a finite expansion ends first).
pub fn convergents(pq: &PartialQuotients, n: usize) -> Vec<Convergent> {
    ConvergentIter::new(pq).take(n + 1).collect()
}

/// `p_{n−1} q_n − p_n q_{n−1}` for consecutive convergents.
pub fn determinant(prev: &Convergent, cur: &Convergent) -> BigInt {
    &prev.p * &cur.q - &cur.p * &prev.q
}

/// Number of leading indices `n` with `q_n ≤ bound`.
pub fn count_q_below(pq: &PartialQuotients, bound: &BigInt) -> usize {
    ConvergentIter::new(pq).take_while(|c| &c.q <= bound).count()
}
