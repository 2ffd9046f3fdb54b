use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Basis symbol of a [`LinearForm`]. Ordered `One < Alpha < Beta(0) < Beta(1) …`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    One,
    Alpha,
    Beta(u32),
}

/// Rational combination of basis symbols. Terms are kept sorted by symbol
/// with no zero coefficients, so structural equality is symbolic equality.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinearForm {
    terms: Vec<(Symbol, BigRational)>,
}

impl LinearForm {
    pub fn zero() -> Self {
        LinearForm { terms: Vec::new() }
    }

    pub fn constant(r: BigRational) -> Self {
        Self::term(Symbol::One, r)
    }

    pub fn int(n: i64) -> Self {
        Self::constant(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn big_int(n: BigInt) -> Self {
        Self::constant(BigRational::from_integer(n))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Self::constant(BigRational::new(num.into(), den.into()))
    }

    pub fn alpha() -> Self {
        Self::symbol(Symbol::Alpha)
    }

    pub fn symbol(s: Symbol) -> Self {
        Self::term(s, BigRational::one())
    }

    pub fn term(s: Symbol, c: BigRational) -> Self {
        if c.is_zero() {
            Self::zero()
        } else {
            LinearForm { terms: alloc::vec![(s, c)] }
        }
    }

    /// Builds from arbitrary terms, merging repeats and dropping zeros.
    pub fn from_terms<I: IntoIterator<Item = (Symbol, BigRational)>>(terms: I) -> Self {
        let mut v: Vec<(Symbol, BigRational)> = terms.into_iter().collect();
        v.sort_by(|a, b| a.0.cmp(&b.0));
        let mut out: Vec<(Symbol, BigRational)> = Vec::with_capacity(v.len());
        for (s, c) in v {
            match out.last_mut() {
                Some((ls, lc)) if *ls == s => *lc += c,
                _ => out.push((s, c)),
            }
        }
        out.retain(|(_, c)| !c.is_zero());
        LinearForm { terms: out }
    }

    pub fn terms(&self) -> &[(Symbol, BigRational)] {
        &self.terms
    }

    pub fn coeff(&self, s: Symbol) -> BigRational {
        match self.terms.binary_search_by(|(t, _)| t.cmp(&s)) {
            Ok(i) => self.terms[i].1.clone(),
            Err(_) => BigRational::zero(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// True when only the constant symbol appears.
    pub fn is_rational(&self) -> bool {
        self.terms.iter().all(|(s, _)| *s == Symbol::One)
    }

    pub fn as_rational(&self) -> Option<BigRational> {
        if self.is_rational() {
            Some(self.coeff(Symbol::One))
        } else {
            None
        }
    }

    /// Symbolically an integer.
    pub fn is_integer(&self) -> bool {
        self.as_rational().map_or(false, |r| r.is_integer())
    }

    /// `Some((m, c))` when the form is exactly `m·α + c` with integers `m, c`.
    pub fn as_integer_alpha_combination(&self) -> Option<(BigInt, BigInt)> {
        let mut m = BigInt::zero();
        let mut c = BigInt::zero();
        for (s, r) in &self.terms {
            if !r.is_integer() {
                return None;
            }
            match s {
                Symbol::One => c = r.to_integer(),
                Symbol::Alpha => m = r.to_integer(),
                Symbol::Beta(_) => return None,
            }
        }
        Some((m, c))
    }

    pub fn rational_part(&self) -> BigRational {
        self.coeff(Symbol::One)
    }

    /// The form without its constant term.
    pub fn irrational_part(&self) -> LinearForm {
        LinearForm {
            terms: self.terms.iter().filter(|(s, _)| *s != Symbol::One).cloned().collect(),
        }
    }

    pub fn scale(&self, c: &BigRational) -> LinearForm {
        if c.is_zero() {
            return LinearForm::zero();
        }
        LinearForm {
            terms: self.terms.iter().map(|(s, r)| (*s, r * c)).collect(),
        }
    }

    pub fn scale_int(&self, k: i64) -> LinearForm {
        self.scale(&BigRational::from_integer(k.into()))
    }

    pub fn scale_big(&self, k: &BigInt) -> LinearForm {
        self.scale(&BigRational::from_integer(k.clone()))
    }

    pub fn add_rational(&self, r: &BigRational) -> LinearForm {
        self + &LinearForm::constant(r.clone())
    }

    pub fn add_int(&self, k: i64) -> LinearForm {
        self.add_rational(&BigRational::from_integer(k.into()))
    }

    /// Product of two forms, defined only when one of them is rational.
    pub fn mul_form(&self, other: &LinearForm) -> Option<LinearForm> {
        if let Some(r) = self.as_rational() {
            Some(other.scale(&r))
        } else {
            other.as_rational().map(|r| self.scale(&r))
        }
    }

    /// Replaces each symbol `s` by `f(s)` (symbols mapped to `None` are kept).
    pub fn substitute<F: FnMut(Symbol) -> Option<LinearForm>>(&self, mut f: F) -> LinearForm {
        let mut out = LinearForm::zero();
        for (s, c) in &self.terms {
            match f(*s) {
                Some(v) => out += &v.scale(c),
                None => out += &LinearForm::term(*s, c.clone()),
            }
        }
        out
    }

    /// Least common multiple of coefficient denominators.
    pub fn denominator_lcm(&self) -> BigInt {
        self.terms.iter().fold(BigInt::one(), |acc, (_, c)| acc.lcm(c.denom()))
    }

    /// Bit length bound of the largest coefficient magnitude (at least 0).
    pub fn coeff_bits(&self) -> u64 {
        self.terms
            .iter()
            .map(|(_, c)| {
                let n = c.numer().abs();
                let q = n / c.denom() + BigInt::one();
                q.bits()
            })
            .max()
            .unwrap_or(0)
    }

    fn combine(&self, other: &LinearForm, sign: bool) -> LinearForm {
        let mut out = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        let a = &self.terms;
        let b = &other.terms;
        while i < a.len() || j < b.len() {
            if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
                out.push(a[i].clone());
                i += 1;
            } else if i == a.len() || b[j].0 < a[i].0 {
                let c = if sign { b[j].1.clone() } else { -b[j].1.clone() };
                out.push((b[j].0, c));
                j += 1;
            } else {
                let c = if sign { &a[i].1 + &b[j].1 } else { &a[i].1 - &b[j].1 };
                if !c.is_zero() {
                    out.push((a[i].0, c));
                }
                i += 1;
                j += 1;
            }
        }
        LinearForm { terms: out }
    }
}

impl<'a> Add<&'a LinearForm> for &'a LinearForm {
    type Output = LinearForm;
    fn add(self, rhs: &LinearForm) -> LinearForm {
        self.combine(rhs, true)
    }
}

impl<'a> Sub<&'a LinearForm> for &'a LinearForm {
    type Output = LinearForm;
    fn sub(self, rhs: &LinearForm) -> LinearForm {
        self.combine(rhs, false)
    }
}

impl Add for LinearForm {
    type Output = LinearForm;
    fn add(self, rhs: LinearForm) -> LinearForm {
        self.combine(&rhs, true)
    }
}

impl Sub for LinearForm {
    type Output = LinearForm;
    fn sub(self, rhs: LinearForm) -> LinearForm {
        self.combine(&rhs, false)
    }
}

impl AddAssign<&LinearForm> for LinearForm {
    fn add_assign(&mut self, rhs: &LinearForm) {
        *self = self.combine(rhs, true);
    }
}

impl SubAssign<&LinearForm> for LinearForm {
    fn sub_assign(&mut self, rhs: &LinearForm) {
        *self = self.combine(rhs, false);
    }
}

impl Neg for &LinearForm {
    type Output = LinearForm;
    fn neg(self) -> LinearForm {
        LinearForm {
            terms: self.terms.iter().map(|(s, c)| (*s, -c.clone())).collect(),
        }
    }
}

impl Neg for LinearForm {
    type Output = LinearForm;
    fn neg(self) -> LinearForm {
        -&self
    }
}

impl Mul<&BigRational> for &LinearForm {
    type Output = LinearForm;
    fn mul(self, rhs: &BigRational) -> LinearForm {
        self.scale(rhs)
    }
}

impl From<BigRational> for LinearForm {
    fn from(r: BigRational) -> Self {
        LinearForm::constant(r)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::One => f.write_str("1"),
            Symbol::Alpha => f.write_str("alpha"),
            Symbol::Beta(i) => write!(f, "b{i}"),
        }
    }
}

impl fmt::Display for LinearForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (s, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if i == 0 {
                if neg {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if neg { " - " } else { " + " })?;
            }
            match s {
                Symbol::One => write!(f, "{mag}")?,
                _ if mag.is_one() => write!(f, "{s}")?,
                _ => write!(f, "{mag}*{s}")?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn cancellation_is_symbolic() {
        let a = &(&LinearForm::alpha() + &LinearForm::int(1)) - &LinearForm::alpha();
        assert_eq!(a, LinearForm::int(1));
        assert!(a.is_integer());
    }

    #[test]
    fn display() {
        let f = &LinearForm::alpha().scale_int(2) - &LinearForm::int(1);
        assert_eq!(f.to_string(), "-1 + 2*alpha");
    }

    #[test]
    fn integer_alpha_combination() {
        let f = &LinearForm::alpha().scale_int(5) - &LinearForm::int(3);
        assert_eq!(f.as_integer_alpha_combination(), Some((5.into(), (-3).into())));
        assert_eq!(LinearForm::ratio(1, 2).as_integer_alpha_combination(), None);
    }
}
