use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::form::{LinearForm, Symbol};
use super::pq::PartialQuotients;
use super::real::{AdaptiveReal, Interval};
use crate::{Error, Result};

/// Default precision cap, as a power of two: results are certain to `2^-256`.
pub const DEFAULT_CAP_BITS: u32 = 256;

/// Numeric source of an independent symbol.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RealSource {
    ContinuedFraction(PartialQuotients),
    /// `(a + b√d) / c`.
    QuadraticSurd { a: BigInt, b: BigInt, d: BigUint, c: BigInt },
    Rational(BigRational),
}

impl RealSource {
    /// `√2 − 1`, through its surd form (not its digits).
    pub fn sqrt2_minus_1() -> Self {
        RealSource::QuadraticSurd {
            a: BigInt::from(-1),
            b: BigInt::one(),
            d: BigUint::from(2u8),
            c: BigInt::one(),
        }
    }

    /// Rational bracket of width at most `2^-bits`.
    pub fn bracket(&self, bits: u32) -> (BigRational, BigRational) {
        match self {
            RealSource::ContinuedFraction(pq) => pq.bracket(bits),
            RealSource::Rational(r) => (r.clone(), r.clone()),
            RealSource::QuadraticSurd { a, b, d, c } => {
                let extra = b.abs().bits() as u32 + 2;
                let k = (bits + extra) as usize;
                let scaled = BigInt::from(d.clone()) << (2 * k);
                let s = scaled.sqrt();
                let den = BigInt::one() << k;
                let root_lo = BigRational::new(s.clone(), den.clone());
                let root_hi = if &s * &s == scaled {
                    root_lo.clone()
                } else {
                    BigRational::new(s + 1, den)
                };
                let a = BigRational::from_integer(a.clone());
                let b = BigRational::from_integer(b.clone());
                let c = BigRational::from_integer(c.clone());
                let x = (&a + &b * &root_lo) / &c;
                let y = (&a + &b * &root_hi) / &c;
                if x <= y {
                    (x, y)
                } else {
                    (y, x)
                }
            }
        }
    }
}

/// How a registered `β` symbol gets its value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SymbolKind {
    /// Independent of `1, α` and of other symbols.
    Independent(RealSource),
    /// Opaque symbol whose exact value is the given form, e.g. a truncated
    /// expansion standing in for an infinite one. Symbolic algebra keeps it
    /// separate; numeric comparison substitutes the value.
    Surrogate(LinearForm),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolEntry {
    pub name: String,
    pub kind: SymbolKind,
}

#[derive(Clone, Debug)]
struct Inner {
    alpha: PartialQuotients,
    symbols: Vec<SymbolEntry>,
    names: Vec<(String, LinearForm)>,
    cap_bits: u32,
}

/// Rotation number plus registered `β` symbols. Cheap to clone and immutable
/// once shared; registration copies on write.
#[derive(Clone, Debug)]
pub struct Session {
    inner: Arc<Inner>,
}

/// Enclosure `[lo, hi] · 2^-scale`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dyadic {
    pub lo: BigInt,
    pub hi: BigInt,
    pub scale: u32,
}

impl Dyadic {
    pub fn to_interval(&self) -> Interval {
        let den = BigInt::one() << (self.scale as usize);
        Interval::new(
            BigRational::new(self.lo.clone(), den.clone()),
            BigRational::new(self.hi.clone(), den),
        )
    }
}

fn floor_scaled(r: &BigRational, scale: u32) -> BigInt {
    (r.numer() << (scale as usize)).div_floor(r.denom())
}

fn ceil_scaled(r: &BigRational, scale: u32) -> BigInt {
    -((-r.numer() << (scale as usize)).div_floor(r.denom()))
}

fn log2_ceil(n: usize) -> u32 {
    usize::BITS - n.saturating_sub(1).leading_zeros()
}

impl Session {
    pub fn new(alpha: PartialQuotients) -> Self {
        Session {
            inner: Arc::new(Inner {
                alpha,
                symbols: Vec::new(),
                names: Vec::new(),
                cap_bits: DEFAULT_CAP_BITS,
            }),
        }
    }

    pub fn with_cap_bits(mut self, bits: u32) -> Self {
        Arc::make_mut(&mut self.inner).cap_bits = bits.max(8);
        self
    }

    pub fn cap_bits(&self) -> u32 {
        self.inner.cap_bits
    }

    pub fn alpha(&self) -> &PartialQuotients {
        &self.inner.alpha
    }

    pub fn symbols(&self) -> &[SymbolEntry] {
        &self.inner.symbols
    }

    pub fn names(&self) -> impl Iterator<Item = (&str, &LinearForm)> {
        self.inner.names.iter().map(|(n, f)| (n.as_str(), f))
    }

    pub fn symbol_name(&self, s: Symbol) -> String {
        match s {
            Symbol::One => "1".to_string(),
            Symbol::Alpha => "alpha".to_string(),
            Symbol::Beta(i) => self
                .inner
                .symbols
                .get(i as usize)
                .map(|e| e.name.clone())
                .unwrap_or_else(|| format!("b{i}")),
        }
    }

    pub fn lookup(&self, name: &str) -> Result<LinearForm> {
        if name == "alpha" {
            return Ok(LinearForm::alpha());
        }
        self.inner
            .names
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, f)| f.clone())
            .ok_or_else(|| Error::UnknownSymbol(name.to_string()))
    }

    fn check_known(&self, form: &LinearForm) -> Result<()> {
        for (s, _) in form.terms() {
            if let Symbol::Beta(i) = s {
                if *i as usize >= self.inner.symbols.len() {
                    return Err(Error::UnknownSymbol(format!("b{i}")));
                }
            }
        }
        Ok(())
    }

    fn bind(&mut self, name: &str, form: LinearForm) -> Result<LinearForm> {
        if name == "alpha" || self.inner.names.iter().any(|(n, _)| n == name) {
            return Err(Error::Precondition(format!("symbol `{name}` already registered")));
        }
        Arc::make_mut(&mut self.inner).names.push((name.to_string(), form.clone()));
        Ok(form)
    }

    /// Declares `name := form`. The name is eliminated: lookups return `form`.
    pub fn declare(&mut self, name: &str, form: LinearForm) -> Result<LinearForm> {
        self.check_known(&form)?;
        self.bind(name, form)
    }

    /// Registers an independent symbol with the given numeric source.
    pub fn independent(&mut self, name: &str, source: RealSource) -> Result<LinearForm> {
        if let RealSource::Rational(r) = source {
            return self.declare(name, LinearForm::constant(r));
        }
        self.push_symbol(name, SymbolKind::Independent(source))
    }

    /// Registers an opaque symbol whose exact value is `value`.
    pub fn surrogate(&mut self, name: &str, value: LinearForm) -> Result<LinearForm> {
        self.check_known(&value)?;
        self.push_symbol(name, SymbolKind::Surrogate(value))
    }

    fn push_symbol(&mut self, name: &str, kind: SymbolKind) -> Result<LinearForm> {
        if name == "alpha" || self.inner.names.iter().any(|(n, _)| n == name) {
            return Err(Error::Precondition(format!("symbol `{name}` already registered")));
        }
        let inner = Arc::make_mut(&mut self.inner);
        let id = inner.symbols.len() as u32;
        inner.symbols.push(SymbolEntry { name: name.to_string(), kind });
        let form = LinearForm::symbol(Symbol::Beta(id));
        inner.names.push((name.to_string(), form.clone()));
        Ok(form)
    }

    /// Replaces surrogate symbols by their values, recursively.
    pub fn expand(&self, form: &LinearForm) -> LinearForm {
        let needs = form.terms().iter().any(|(s, _)| self.surrogate_value(*s).is_some());
        if !needs {
            return form.clone();
        }
        form.substitute(|s| self.surrogate_value(s).map(|v| self.expand(v)))
    }

    fn surrogate_value(&self, s: Symbol) -> Option<&LinearForm> {
        match s {
            Symbol::Beta(i) => match &self.inner.symbols.get(i as usize)?.kind {
                SymbolKind::Surrogate(v) => Some(v),
                SymbolKind::Independent(_) => None,
            },
            _ => None,
        }
    }

    /// Exact value of an expanded form when `α` is rational (finite expansion).
    fn rational_value(&self, e: &LinearForm) -> Option<BigRational> {
        let alpha = self.inner.alpha.rational_value()?;
        let mut acc = BigRational::zero();
        for (s, c) in e.terms() {
            match s {
                Symbol::One => acc += c,
                Symbol::Alpha => acc += c * &alpha,
                Symbol::Beta(_) => return None,
            }
        }
        Some(acc)
    }

    /// True when every symbol of the expanded form is `1` or `α`.
    pub fn is_alpha_rational(&self, form: &LinearForm) -> bool {
        self.expand(form)
            .terms()
            .iter()
            .all(|(s, _)| matches!(s, Symbol::One | Symbol::Alpha))
    }

    fn symbol_bracket(&self, s: Symbol, bits: u32) -> (BigRational, BigRational) {
        match s {
            Symbol::One => (BigRational::one(), BigRational::one()),
            Symbol::Alpha => self.inner.alpha.bracket(bits),
            Symbol::Beta(i) => match &self.inner.symbols[i as usize].kind {
                SymbolKind::Independent(src) => src.bracket(bits),
                SymbolKind::Surrogate(_) => unreachable!("surrogates are expanded first"),
            },
        }
    }

    /// Dyadic enclosure of width at most `2^-bits`.
    pub fn enclose_dyadic(&self, form: &LinearForm, bits: u32) -> Dyadic {
        let e = self.expand(form);
        let n = e.terms().len().max(1);
        let scale = bits + e.coeff_bits() as u32 + log2_ceil(n) + 4;
        let mut lo = BigInt::zero();
        let mut hi = BigInt::zero();
        for (s, c) in e.terms() {
            if *s == Symbol::One {
                lo += floor_scaled(c, scale);
                hi += ceil_scaled(c, scale);
                continue;
            }
            let (a, b) = self.symbol_bracket(*s, scale);
            let a = floor_scaled(&a, scale);
            let b = ceil_scaled(&b, scale);
            let (x, y) = if c.is_negative() { (b, a) } else { (a, b) };
            lo += (c.numer() * x).div_floor(c.denom());
            hi += -((-(c.numer() * y)).div_floor(c.denom()));
        }
        Dyadic { lo, hi, scale }
    }

    /// Exact rational interval of width at most `2^-bits`.
    pub fn enclose(&self, form: &LinearForm, bits: u32) -> Interval {
        let e = self.expand(form);
        if let Some(r) = e.as_rational().or_else(|| self.rational_value(&e)) {
            return Interval::point(r);
        }
        self.enclose_dyadic(&e, bits).to_interval()
    }

    pub fn to_f64(&self, form: &LinearForm) -> f64 {
        let e = self.expand(form);
        if let Some(r) = e.as_rational() {
            return rat_to_f64(&r);
        }
        let d = self.enclose_dyadic(&e, 64);
        let mid = (&d.lo + &d.hi) >> 1usize;
        big_to_f64(&mid) / libm::exp2(d.scale as f64)
    }

    /// Sign of a form, refining up to the precision cap.
    pub fn sign(&self, form: &LinearForm) -> Result<Ordering> {
        self.sign_with_cap(form, self.inner.cap_bits)
    }

    pub fn sign_with_cap(&self, form: &LinearForm, cap_bits: u32) -> Result<Ordering> {
        if form.is_zero() {
            return Ok(Ordering::Equal);
        }
        let e = self.expand(form);
        if let Some(r) = e.as_rational().or_else(|| self.rational_value(&e)) {
            return Ok(r.cmp(&BigRational::zero()));
        }
        let mut bits = 64.min(cap_bits);
        loop {
            let d = self.enclose_dyadic(&e, bits);
            if d.lo.is_positive() {
                return Ok(Ordering::Greater);
            }
            if d.hi.is_negative() {
                return Ok(Ordering::Less);
            }
            if bits >= cap_bits {
                return Err(Error::UndecidableAtCap(format!("sign of {form}")));
            }
            bits = (bits * 2).min(cap_bits);
        }
    }

    /// Exact comparison; `Equal` only for symbolically equal values.
    pub fn compare(&self, a: &LinearForm, b: &LinearForm) -> Result<Ordering> {
        self.sign(&(a - b))
    }

    pub fn compare_with_cap(&self, a: &LinearForm, b: &LinearForm, cap_bits: u32) -> Result<Ordering> {
        self.sign_with_cap(&(a - b), cap_bits)
    }

    pub fn floor(&self, form: &LinearForm) -> Result<BigInt> {
        let e = self.expand(form);
        if let Some(r) = e.as_rational().or_else(|| self.rational_value(&e)) {
            return Ok(r.floor().to_integer());
        }
        let d = self.enclose_dyadic(&e, 32);
        let lo = d.lo.clone() >> (d.scale as usize);
        let hi = d.hi.clone() >> (d.scale as usize);
        if lo == hi {
            return Ok(lo);
        }
        let m = hi;
        match self.compare(&e, &LinearForm::big_int(m.clone()))? {
            Ordering::Less => Ok(m - 1),
            _ => Ok(m),
        }
    }

    /// `form − ⌊form⌋`.
    pub fn frac(&self, form: &LinearForm) -> Result<LinearForm> {
        let f = self.floor(form)?;
        Ok(form - &LinearForm::big_int(f))
    }

    /// Nearest integer, ties rounded up.
    pub fn round(&self, form: &LinearForm) -> Result<BigInt> {
        self.floor(&form.add_rational(&BigRational::new(BigInt::one(), BigInt::from(2))))
    }

    /// `|form|` as an exact form.
    pub fn abs(&self, form: &LinearForm) -> Result<LinearForm> {
        Ok(if self.sign(form)? == Ordering::Less { -form } else { form.clone() })
    }

    /// `‖form‖` as an exact form.
    pub fn dist_to_z_form(&self, form: &LinearForm) -> Result<LinearForm> {
        let m = self.round(form)?;
        self.abs(&(form - &LinearForm::big_int(m)))
    }

    /// Refinable real for the value of `form`.
    pub fn adaptive(&self, form: &LinearForm) -> AdaptiveReal {
        let e = self.expand(form);
        if let Some(r) = e.as_rational() {
            return AdaptiveReal::exact(r);
        }
        let s = self.clone();
        AdaptiveReal::from_fn(Arc::new(move |bits| Ok(s.enclose(&e, bits))), self.inner.cap_bits)
    }

    /// Every `θ_n = q_nα − p_n` expressed with this session's `α`.
    pub fn theta(&self, n: usize) -> LinearForm {
        super::pq::convergents(&self.inner.alpha, n)
            .pop()
            .map(|c| c.theta)
            .unwrap_or_else(LinearForm::zero)
    }
}

pub(crate) fn big_to_f64(x: &BigInt) -> f64 {
    if let Some(v) = x.to_i64() {
        return v as f64;
    }
    let bits = x.bits();
    let shift = bits.saturating_sub(60);
    let top = (x >> (shift as usize)).to_i64().unwrap_or(0) as f64;
    top * libm::exp2(shift as f64)
}

pub(crate) fn rat_to_f64(r: &BigRational) -> f64 {
    let n = r.numer();
    let d = r.denom();
    let nb = n.bits() as i64;
    let db = d.bits() as i64;
    let shift = 64 - (nb - db);
    let q = if shift >= 0 {
        (n << (shift as usize)) / d
    } else {
        (n >> ((-shift) as usize)) / d
    };
    big_to_f64(&q) * libm::exp2(-(shift as f64))
}


/// Symbol brackets precomputed at one scale, for evaluating many forms
/// whose coefficients stay below a known size.
#[derive(Clone, Debug)]
pub struct Approximator {
    session: Session,
    scale: u32,
    alpha: (BigInt, BigInt),
    betas: Vec<Option<(BigInt, BigInt)>>,
}

impl Approximator {
    /// Brackets at `2^-scale`; forms evaluated through it get absolute error
    /// about `Σ|c|·2^-scale`.
    pub fn new(session: &Session, scale: u32) -> Self {
        let conv = |(a, b): (BigRational, BigRational)| (floor_scaled(&a, scale), ceil_scaled(&b, scale));
        let alpha = conv(session.inner.alpha.bracket(scale));
        let betas = session
            .inner
            .symbols
            .iter()
            .map(|e| match &e.kind {
                SymbolKind::Independent(src) => Some(conv(src.bracket(scale))),
                SymbolKind::Surrogate(_) => None,
            })
            .collect();
        Approximator { session: session.clone(), scale, alpha, betas }
    }

    pub fn scale(&self) -> u32 {
        self.scale
    }

    /// Dyadic enclosure at this approximator's scale.
    pub fn enclose_dyadic(&self, form: &LinearForm) -> Dyadic {
        let e = self.session.expand(form);
        let scale = self.scale;
        let mut lo = BigInt::zero();
        let mut hi = BigInt::zero();
        for (s, c) in e.terms() {
            let (a, b) = match s {
                Symbol::One => {
                    lo += floor_scaled(c, scale);
                    hi += ceil_scaled(c, scale);
                    continue;
                }
                Symbol::Alpha => (&self.alpha.0, &self.alpha.1),
                Symbol::Beta(i) => {
                    let (a, b) = self.betas[*i as usize].as_ref().expect("surrogates are expanded first");
                    (a, b)
                }
            };
            let (x, y) = if c.is_negative() { (b, a) } else { (a, b) };
            lo += (c.numer() * x).div_floor(c.denom());
            hi += -((-(c.numer() * y)).div_floor(c.denom()));
        }
        Dyadic { lo, hi, scale }
    }

    /// Fractional part as `f64`, with the enclosure width in units of 1.
    pub fn frac_f64(&self, form: &LinearForm) -> (f64, f64) {
        let d = self.enclose_dyadic(form);
        let one = BigInt::one() << (d.scale as usize);
        let mask_lo = d.lo.mod_floor(&one);
        let width = &d.hi - &d.lo;
        let top = 53usize;
        let s = d.scale as usize;
        let v = if s > top { (mask_lo >> (s - top)).to_u64().unwrap_or(0) as f64 / libm::exp2(top as f64) } else {
            mask_lo.to_u64().unwrap_or(0) as f64 / libm::exp2(s as f64)
        };
        (v, big_to_f64(&width) / libm::exp2(s as f64))
    }
}
