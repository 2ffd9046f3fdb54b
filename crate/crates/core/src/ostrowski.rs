//! Ostrowski expansion of reals in the base `θ_n = q_nα − p_n` and the
//! finite-depth coboundary criteria built on it.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::arithmetic::{convergents, AdaptiveReal, Convergent, DigitRule, LinearForm, PartialQuotients, Session};
use crate::{Error, Result};

/// `β = Σ_{n≤N} b_nθ_n + r_N (mod 1)` with canonical digits
/// `0 ≤ b_n ≤ a_{n+1}` and `b_n = a_{n+1} ⇒ b_{n−1} = 0`.
#[derive(Clone, Debug)]
pub struct OstrowskiExpansion {
    pub beta: LinearForm,
    /// Integer subtracted from `β` to land in `[−α, 1 − α)`.
    pub shift: i64,
    pub digits: Vec<BigInt>,
    /// `r_N` after digit `N`.
    pub residuals: Vec<LinearForm>,
    /// `S_N = Σ_{n≤N} |b_n| / a_{n+1}`.
    pub decay: Vec<BigRational>,
    /// `a_{n+1}` for each digit.
    pub partial_quotients: Vec<BigInt>,
    thetas: Vec<LinearForm>,
}

impl OstrowskiExpansion {
    /// Index of the last digit.
    pub fn depth(&self) -> usize {
        self.digits.len().saturating_sub(1)
    }

    pub fn theta(&self, n: usize) -> &LinearForm {
        &self.thetas[n]
    }

    /// `|θ_n|` as a form.
    pub fn theta_abs(&self, n: usize) -> LinearForm {
        if n % 2 == 0 {
            self.thetas[n].clone()
        } else {
            -self.thetas[n].clone()
        }
    }
}

fn abs_theta(c: &Convergent) -> LinearForm {
    if c.sign() < 0 {
        -c.theta.clone()
    } else {
        c.theta.clone()
    }
}

/// Greedy digit: the least `b ≥ 0` with `y − b|θ_N| ≤ |θ_{N+1}|`.
fn greedy_digit(session: &Session, y: &LinearForm, th: &LinearForm, th_next: &LinearForm, bits: u32) -> Result<BigInt> {
    let fits = |b: &BigInt| -> Result<bool> {
        let z = y - &th.scale_big(b);
        Ok(session.compare(&z, th_next)? != Ordering::Greater)
    };
    let mut b = {
        let yi = session.enclose(&(y - th_next), bits);
        let ti = session.enclose(th, bits);
        if ti.lo.is_positive() {
            let est = (yi.center() / ti.center()).ceil().to_integer();
            est.max(BigInt::zero())
        } else {
            BigInt::zero()
        }
    };
    while !fits(&b)? {
        b += 1;
    }
    while b.is_positive() && fits(&(&b - 1))? {
        b -= 1;
    }
    Ok(b)
}

/// Greedy expansion of `β` to `depth`, stopping early when `α` is rational
/// and `θ_n` vanishes.
pub fn expand(session: &Session, beta: &LinearForm, depth: usize) -> Result<OstrowskiExpansion> {
    let cs = convergents(session.alpha(), depth + 1);
    let alpha = LinearForm::alpha();
    let shift = if session.compare(beta, &(LinearForm::int(1) - alpha))? == Ordering::Less { 0 } else { 1 };
    let mut r = beta.add_int(-shift);
    if session.compare(&r, &-LinearForm::alpha())? == Ordering::Less {
        return Err(Error::Precondition(format!("beta {beta} outside [0, 1)")));
    }
    let mut digits = Vec::new();
    let mut residuals = Vec::new();
    let mut decay = Vec::new();
    let mut pqs = Vec::new();
    let mut thetas = Vec::new();
    let mut s = BigRational::zero();
    for n in 0..=depth {
        let (Some(c), Some(next)) = (cs.get(n), cs.get(n + 1)) else { break };
        if c.theta.is_zero() {
            break;
        }
        let a_next = BigInt::from(session.alpha().digit(n + 1).unwrap_or_else(BigUint::one));
        let th = abs_theta(c);
        let th_next = abs_theta(next);
        let y = if c.sign() < 0 { -r.clone() } else { r.clone() };
        let b = greedy_digit(session, &y, &th, &th_next, next.q.bits() as u32 + 64)?;
        r -= &c.theta.scale_big(&b);
        s += BigRational::new(b.abs(), a_next.clone());
        digits.push(b);
        residuals.push(r.clone());
        decay.push(s.clone());
        pqs.push(a_next);
        thetas.push(c.theta.clone());
    }
    Ok(OstrowskiExpansion { beta: beta.clone(), shift, digits, residuals, decay, partial_quotients: pqs, thetas })
}

/// `Σ_{n≤depth} b_nθ_n` as an exact form (not reduced mod 1).
pub fn reconstruct_form(exp: &OstrowskiExpansion, depth: usize) -> LinearForm {
    let mut acc = LinearForm::zero();
    for (b, th) in exp.digits.iter().zip(&exp.thetas).take(depth + 1) {
        if !b.is_zero() {
            acc += &th.scale_big(b);
        }
    }
    acc
}

/// `Σ_{n≤depth} b_nθ_n mod 1`.
pub fn reconstruct(session: &Session, exp: &OstrowskiExpansion, depth: usize) -> Result<AdaptiveReal> {
    Ok(session.adaptive(&session.frac(&reconstruct_form(exp, depth))?))
}

/// Checks the residual bound and digit admissibility exactly.
pub fn verify_expansion(session: &Session, exp: &OstrowskiExpansion) -> Result<()> {
    for (n, r) in exp.residuals.iter().enumerate() {
        let bound = exp.theta_abs(n);
        if session.compare(&session.abs(r)?, &bound)? == Ordering::Greater {
            return Err(Error::AuditFailure { audit: "ostrowski_residual", n: n as i64, k: 0, detail: format!("|r| > |theta_{n}|") });
        }
        let b = &exp.digits[n];
        let a = &exp.partial_quotients[n];
        if b.is_negative() || b > a {
            return Err(Error::AuditFailure { audit: "ostrowski_digit", n: n as i64, k: 0, detail: format!("digit {b} outside [0, {a}]") });
        }
        if n > 0 && b == a && !exp.digits[n - 1].is_zero() {
            return Err(Error::AuditFailure { audit: "ostrowski_markov", n: n as i64, k: 0, detail: "b_n = a_{n+1} but b_{n-1} != 0".into() });
        }
    }
    let full = &reconstruct_form(exp, exp.depth()) + exp.residuals.last().unwrap_or(&LinearForm::zero());
    if session.expand(&(&full - &exp.beta.add_int(-exp.shift))) != LinearForm::zero() {
        return Err(Error::AuditFailure { audit: "ostrowski_identity", n: exp.depth() as i64, k: 0, detail: "digits and residual do not sum to beta".into() });
    }
    Ok(())
}

/// Digit rules for infinite expansions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DigitPattern {
    /// `b_n = c` for all `n`.
    Const(BigInt),
    /// Finitely many digits, zero afterwards.
    List(Vec<BigInt>),
    /// Periodic digits.
    Alternating(Vec<BigInt>),
    /// `b_n = ⌊k·a_{n+1}⌋ + c` when `mask[n mod len]`, else `0`.
    Formula { k: BigRational, c: BigInt, mask: Vec<bool> },
}

impl DigitPattern {
    pub fn digit(&self, pq: &PartialQuotients, n: usize) -> BigInt {
        match self {
            DigitPattern::Const(c) => c.clone(),
            DigitPattern::List(v) => v.get(n).cloned().unwrap_or_default(),
            DigitPattern::Alternating(v) => v[n % v.len()].clone(),
            DigitPattern::Formula { k, c, mask } => {
                if !mask.is_empty() && !mask[n % mask.len()] {
                    return BigInt::zero();
                }
                let a = BigInt::from(pq.digit(n + 1).unwrap_or_else(BigUint::one));
                (k * BigRational::from_integer(a)).floor().to_integer() + c
            }
        }
    }

    pub fn digits(&self, pq: &PartialQuotients, len: usize) -> Vec<BigInt> {
        (0..len).map(|n| self.digit(pq, n)).collect()
    }
}

#[derive(Clone, Debug)]
pub enum DigitSource<'a> {
    Expansion(&'a OstrowskiExpansion),
    Rule(DigitPattern),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoboundaryVerdict {
    EvidenceCoboundary,
    EvidenceNotCoboundary,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Trend {
    Converging,
    Diverging,
    Unclear,
}

/// Tail-growth heuristic for a partial-sum trace: compares the increase over
/// the last quarter with the increase over the previous quarter.
pub fn trend(trace: &[f64]) -> Trend {
    let n = trace.len();
    if n < 8 {
        return Trend::Unclear;
    }
    let q = n / 4;
    let last = trace[n - 1] - trace[n - 1 - q];
    let prev = trace[n - 1 - q] - trace[n - 1 - 2 * q];
    let scale = trace[n - 1].abs().max(1e-300);
    if last <= 1e-12 * scale || (prev > 0.0 && last < 0.25 * prev) {
        Trend::Converging
    } else if prev > 0.0 && last >= 0.75 * prev {
        Trend::Diverging
    } else {
        Trend::Unclear
    }
}

#[derive(Clone, Debug)]
pub struct CoboundaryReport {
    pub ell: u64,
    pub verdict: CoboundaryVerdict,
    /// True when the verdict comes from a closed-form envelope of a rule.
    pub decided_from_rule: bool,
    /// Set for digits observed only to finite depth.
    pub finite_depth_only: bool,
    /// `ℓ·β < 1`, when it could be decided.
    pub precondition: Option<bool>,
    /// Canonical admissibility over the inspected prefix.
    pub admissible: bool,
    pub partial_sums: Vec<BigRational>,
    pub trend: Trend,
    pub reason: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Growth {
    Bounded,
    Poly(u32),
    Exponential,
}

fn growth(pq: &PartialQuotients) -> Growth {
    match pq.rule() {
        DigitRule::List(_) | DigitRule::Periodic { .. } => Growth::Bounded,
        DigitRule::Poly(c) => {
            let deg = c.iter().rposition(|x| !x.is_zero()).unwrap_or(0);
            if deg == 0 || c[deg].is_negative() {
                Growth::Bounded
            } else {
                Growth::Poly(deg as u32)
            }
        }
        DigitRule::Pow2 => Growth::Exponential,
    }
}

fn admissible(digits: &[BigInt], pq: &PartialQuotients) -> bool {
    digits.iter().enumerate().all(|(n, b)| {
        let a = BigInt::from(pq.digit(n + 1).unwrap_or_else(BigUint::one));
        !b.is_negative() && *b <= a && (n == 0 || *b != a || digits[n - 1].is_zero())
    })
}

const RULE_PREFIX: usize = 48;

/// Coboundary criterion for `ℓ1_{[0,β)} − 1_{[0,ℓβ)}`: summability of
/// `Σ|b_n|/a_{n+1}`.
pub fn coboundary_criterion(session: &Session, ell: u64, source: &DigitSource<'_>) -> Result<CoboundaryReport> {
    if ell == 0 {
        return Err(Error::Precondition("ell must be positive".into()));
    }
    let pq = session.alpha();
    let (digits, beta_form, depth_theta): (Vec<BigInt>, LinearForm, LinearForm) = match source {
        DigitSource::Expansion(e) => (e.digits.clone(), e.beta.clone(), LinearForm::zero()),
        DigitSource::Rule(p) => {
            let len = match p {
                DigitPattern::List(v) => v.len().min(RULE_PREFIX),
                _ => RULE_PREFIX,
            };
            // Stop where θ_n gets too small to compare within the session cap.
            let cs: Vec<_> = convergents(pq, len).into_iter().take_while(|c| c.q.bits() as u32 <= session.cap_bits() / 3).collect();
            let len = len.min(cs.len());
            let digits = p.digits(pq, len);
            let mut beta = LinearForm::zero();
            for (b, c) in digits.iter().zip(&cs) {
                beta += &c.theta.scale_big(b);
            }
            let tail = cs.last().map(abs_theta).unwrap_or_else(LinearForm::zero);
            (digits, session.frac(&beta)?, tail)
        }
    };
    let mut partial = Vec::with_capacity(digits.len());
    let mut s = BigRational::zero();
    for (n, b) in digits.iter().enumerate() {
        let a = BigInt::from(pq.digit(n + 1).unwrap_or_else(BigUint::one));
        s += BigRational::new(b.abs(), a);
        partial.push(s.clone());
    }
    let trace: Vec<f64> = partial.iter().map(crate::arithmetic::rat_to_f64).collect();
    let tr = trend(&trace);

    // ℓβ < 1, allowing for the truncated tail of a rule.
    let lb = beta_form.scale_int(ell as i64);
    let margin = depth_theta.scale_int(ell as i64 * 2);
    let precondition = if margin.is_zero() {
        Some(session.compare(&lb, &LinearForm::int(1))? == Ordering::Less)
    } else if session.compare(&(&lb + &margin), &LinearForm::int(1))? == Ordering::Less {
        Some(true)
    } else if session.compare(&(&lb - &margin), &LinearForm::int(1))? != Ordering::Less {
        Some(false)
    } else {
        None
    };
    let adm = admissible(&digits, pq);

    let (verdict, decided, reason) = match source {
        DigitSource::Expansion(_) => (
            CoboundaryVerdict::Inconclusive,
            false,
            format!("finite-depth evidence only; partial sums trend {tr:?}"),
        ),
        DigitSource::Rule(p) => classify_rule(p, pq),
    };
    Ok(CoboundaryReport {
        ell,
        verdict,
        decided_from_rule: decided,
        finite_depth_only: !decided,
        precondition,
        admissible: adm,
        partial_sums: partial,
        trend: tr,
        reason,
    })
}

fn classify_rule(p: &DigitPattern, pq: &PartialQuotients) -> (CoboundaryVerdict, bool, String) {
    use CoboundaryVerdict::*;
    let g = growth(pq);
    if pq.is_finite() {
        return (Inconclusive, false, "rational alpha has a finite expansion".into());
    }
    // Constant numerators against the growth of a_{n+1}.
    let const_case = |nonzero: bool, what: &str| -> (CoboundaryVerdict, bool, String) {
        if !nonzero {
            return (EvidenceCoboundary, true, format!("{what}: digits vanish, the sum is finite"));
        }
        match g {
            Growth::Bounded => (EvidenceNotCoboundary, true, format!("{what}: |b_n|/a_(n+1) bounded below on infinitely many n")),
            Growth::Poly(k) if k >= 2 => (EvidenceCoboundary, true, format!("{what}: p-series envelope with p = {k} > 1")),
            Growth::Poly(_) => (EvidenceNotCoboundary, true, format!("{what}: harmonic envelope, the sum diverges")),
            Growth::Exponential => (EvidenceCoboundary, true, format!("{what}: geometric envelope with ratio 1/2")),
        }
    };
    match p {
        DigitPattern::List(_) => (EvidenceCoboundary, true, "finitely many digits, the sum is finite".into()),
        DigitPattern::Const(c) => const_case(!c.is_zero(), "constant digits"),
        DigitPattern::Alternating(v) => const_case(v.iter().any(|x| !x.is_zero()), "periodic digits"),
        DigitPattern::Formula { k, c, mask } => {
            let active = mask.is_empty() || mask.iter().any(|&m| m);
            if !active {
                return (EvidenceCoboundary, true, "mask selects no digits".into());
            }
            if !k.is_zero() {
                // ⌊k·a⌋ + c over a: the ratio tends to |k| when a is unbounded
                // and stays bounded below when a is bounded and k·a + c ≠ 0.
                return (EvidenceNotCoboundary, true, format!("|b_n|/a_(n+1) -> {} on a positive-density set", k.abs()));
            }
            const_case(!c.is_zero(), "formula with constant digits")
        }
    }
}

/// Finite-depth trace of a summability condition.
#[derive(Clone, Debug)]
pub struct SumTrace {
    pub partial_sums: Vec<f64>,
    pub trend: Trend,
}

impl SumTrace {
    fn new(partial_sums: Vec<f64>) -> Self {
        let trend = trend(&partial_sums);
        SumTrace { partial_sums, trend }
    }
}

#[derive(Clone, Debug)]
pub struct AtomConditions {
    pub members: Vec<usize>,
    /// `Σ_{j∈J} s_j`.
    pub jump_sum: LinearForm,
    /// Condition (i): `Σ_{j∈J} s_j ∈ ℤ`.
    pub integral: bool,
    /// Per member, `Σ_n |b_n^j|/a_{n+1}`.
    pub digit_sums: Vec<SumTrace>,
    /// `Σ_n ‖Σ_j b_n^js_j‖²`.
    pub mixed_sum: SumTrace,
    /// Per member, `‖β_j − β_J − Σ_{n≤depth} b_n^jθ_n‖` as an exact form.
    pub expansion_residual: Vec<LinearForm>,
    /// `t_J` truncated at `depth`, or `None` when `β_J·Σs_j` is not linear.
    pub t_j: Option<LinearForm>,
}

#[derive(Clone, Debug)]
pub struct GpReport {
    pub atoms: Vec<AtomConditions>,
    pub condition_i: bool,
    /// Condition (ii) per atom, by trend of both sums.
    pub condition_ii: Vec<Trend>,
    /// Smallest `|k'| ≤ k_max` meeting condition (iii), with exactness flag.
    pub k_prime: Option<(i64, bool)>,
}

/// Finite-depth checks of the three conditions for the multiplicative
/// equation `e^{2πiφ} = e^{2πit}·f∘T/f`, with `φ` jumping by `−s_j` at `β_j`.
#[allow(clippy::too_many_arguments)]
pub fn guenais_parreau_check(
    session: &Session,
    jumps: &[LinearForm],
    points: &[LinearForm],
    partition: &[Vec<usize>],
    digit_data: &[Vec<BigInt>],
    t: &LinearForm,
    depth: usize,
    k_max: i64,
) -> Result<GpReport> {
    let m = jumps.len();
    if points.len() != m || digit_data.len() != m {
        return Err(Error::Precondition("jumps, points and digit data differ in length".into()));
    }
    let mut seen = vec![false; m];
    for j in partition.iter().flatten() {
        if *j >= m || seen[*j] {
            return Err(Error::Precondition("partition is not a partition of the discontinuities".into()));
        }
        seen[*j] = true;
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::Precondition("partition misses a discontinuity".into()));
    }
    let pq = session.alpha();
    let cs = convergents(pq, depth);
    let depth = depth.min(cs.len().saturating_sub(1));
    let a: Vec<BigInt> = (0..=depth).map(|n| BigInt::from(pq.digit(n + 1).unwrap_or_else(BigUint::one))).collect();
    let digit = |j: usize, n: usize| digit_data[j].get(n).cloned().unwrap_or_default();

    let mut atoms = Vec::new();
    for part in partition {
        let jump_sum = part.iter().fold(LinearForm::zero(), |acc, &j| &acc + &jumps[j]);
        let js = session.expand(&jump_sum);
        let integral = js.as_rational().is_some_and(|r| r.is_integer());
        let beta_j = &points[part[0]];
        let mut digit_sums = Vec::new();
        let mut residuals = Vec::new();
        for &j in part {
            let mut s = 0.0;
            let mut trace = Vec::with_capacity(depth + 1);
            let mut expn = LinearForm::zero();
            for n in 0..=depth {
                let b = digit(j, n);
                s += crate::arithmetic::rat_to_f64(&BigRational::new(b.abs(), a[n].clone()));
                trace.push(s);
                expn += &cs[n].theta.scale_big(&b);
            }
            digit_sums.push(SumTrace::new(trace));
            residuals.push(session.dist_to_z_form(&(&(&points[j] - beta_j) - &expn))?);
        }
        let mut mixed = Vec::with_capacity(depth + 1);
        let mut acc = 0.0;
        let mut t_sum = LinearForm::zero();
        for n in 0..=depth {
            let mut c = LinearForm::zero();
            for &j in part {
                let b = digit(j, n);
                if !b.is_zero() {
                    c += &jumps[j].scale_big(&b);
                }
            }
            let dist = session.to_f64(&session.dist_to_z_form(&c)?);
            acc += dist * dist;
            mixed.push(acc);
            let nearest = session.round(&c)?;
            if !nearest.is_zero() {
                t_sum += &cs[n].theta.scale_big(&nearest);
            }
        }
        let t_j = js.mul_form(beta_j).map(|bj| &bj + &t_sum);
        atoms.push(AtomConditions {
            members: part.clone(),
            jump_sum,
            integral,
            digit_sums,
            mixed_sum: SumTrace::new(mixed),
            expansion_residual: residuals,
            t_j,
        });
    }
    let condition_i = atoms.iter().all(|a| a.integral);
    let condition_ii = atoms
        .iter()
        .map(|a| {
            let all = a.digit_sums.iter().map(|s| s.trend).chain([a.mixed_sum.trend]);
            let mut out = Trend::Converging;
            for tr in all {
                match tr {
                    Trend::Diverging => return Trend::Diverging,
                    Trend::Unclear => out = Trend::Unclear,
                    Trend::Converging => {}
                }
            }
            out
        })
        .collect();

    let k_prime = if atoms.iter().all(|a| a.t_j.is_some()) {
        let sum_t = atoms.iter().fold(LinearForm::zero(), |acc, a| &acc + a.t_j.as_ref().unwrap());
        let tail = cs.get(depth).map(abs_theta).unwrap_or_else(LinearForm::zero).scale_int(2);
        let mut found = None;
        for r in 0..=k_max {
            for k in if r == 0 { vec![0] } else { vec![r, -r] } {
                let diff = &(&(t - &LinearForm::alpha().scale_int(k)) + &sum_t).clone();
                let e = session.expand(diff);
                if e.as_rational().is_some_and(|x| x.is_integer()) {
                    found = Some((k, true));
                    break;
                }
                if session.compare(&session.dist_to_z_form(&e)?, &tail)? != Ordering::Greater {
                    found = Some((k, false));
                    break;
                }
            }
            if found.is_some() {
                break;
            }
        }
        found
    } else {
        None
    };
    Ok(GpReport { atoms, condition_i, condition_ii, k_prime })
}

/// Digits `b_n^j` of an expansion as plain integers.
pub fn digit_vector(exp: &OstrowskiExpansion) -> Vec<BigInt> {
    exp.digits.clone()
}

/// `Σ_{n≤N} θ_n`, the truncated expansion with all digits one.
pub fn theta_sum(session: &Session, n: usize) -> LinearForm {
    convergents(session.alpha(), n).iter().fold(LinearForm::zero(), |acc, c| &acc + &c.theta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden() -> Session {
        Session::new(PartialQuotients::golden())
    }

    #[test]
    fn theta_two_has_single_digit() {
        let s = golden();
        let beta = s.theta(2);
        let e = expand(&s, &beta, 10).unwrap();
        let expected: Vec<BigInt> = (0..=10).map(|n| BigInt::from((n == 2) as i32)).collect();
        assert_eq!(e.digits, expected);
        assert!(e.residuals[2..].iter().all(|r| r.is_zero()));
        verify_expansion(&s, &e).unwrap();
    }

    #[test]
    fn zero_has_zero_digits() {
        let s = golden();
        let e = expand(&s, &LinearForm::zero(), 12).unwrap();
        assert!(e.digits.iter().all(|b| b.is_zero()));
        assert!(reconstruct(&s, &e, 12).unwrap().is_exact());
    }

    #[test]
    fn half_round_trip() {
        let s = golden();
        let beta = LinearForm::ratio(1, 2);
        let e = expand(&s, &beta, 20).unwrap();
        verify_expansion(&s, &e).unwrap();
        let rec = reconstruct(&s, &e, 20).unwrap();
        let err = (rec.to_f64() - 0.5).abs();
        assert!(err <= s.to_f64(&e.theta_abs(20)) + 1e-12, "err = {err}");
    }

    #[test]
    fn large_partial_quotients() {
        let s = Session::new(PartialQuotients::pow2());
        let beta = LinearForm::ratio(5, 7);
        let e = expand(&s, &beta, 8).unwrap();
        verify_expansion(&s, &e).unwrap();
    }

    #[test]
    fn rule_examples() {
        let s = Session::new(PartialQuotients::pow2());
        let r = coboundary_criterion(&s, 1, &DigitSource::Rule(DigitPattern::Const(BigInt::one()))).unwrap();
        assert_eq!(r.verdict, CoboundaryVerdict::EvidenceCoboundary);
        assert!(r.decided_from_rule);

        let g = golden();
        let r = coboundary_criterion(&g, 1, &DigitSource::Rule(DigitPattern::Const(BigInt::one()))).unwrap();
        assert!(!r.admissible);

        let sq = Session::new(PartialQuotients::poly(vec![BigRational::zero(), BigRational::zero(), BigRational::one()]));
        let p = DigitPattern::Formula { k: BigRational::one(), c: BigInt::zero(), mask: vec![true, false] };
        let r = coboundary_criterion(&sq, 1, &DigitSource::Rule(p)).unwrap();
        assert_eq!(r.verdict, CoboundaryVerdict::EvidenceNotCoboundary);
    }

    #[test]
    fn expansion_source_is_finite_depth() {
        let s = golden();
        let e = expand(&s, &LinearForm::ratio(1, 3), 15).unwrap();
        let r = coboundary_criterion(&s, 2, &DigitSource::Expansion(&e)).unwrap();
        assert_eq!(r.verdict, CoboundaryVerdict::Inconclusive);
        assert!(r.finite_depth_only);
        assert_eq!(r.precondition, Some(true));
    }

    #[test]
    fn gp_ell_example() {
        let s = Session::new(PartialQuotients::pow2());
        let ell = 2i64;
        let beta = theta_sum(&s, 6);
        let e = expand(&s, &beta, 6).unwrap();
        let b = digit_vector(&e);
        let lb: Vec<BigInt> = b.iter().map(|x| x * ell).collect();
        let jumps = [LinearForm::int(ell - 1), LinearForm::int(-ell), LinearForm::int(1)];
        let points = [LinearForm::zero(), beta.clone(), beta.scale_int(ell)];
        let digits = vec![vec![BigInt::zero(); b.len()], b, lb];
        let r = guenais_parreau_check(&s, &jumps, &points, &[vec![0, 1, 2]], &digits, &LinearForm::zero(), 6, 50).unwrap();
        assert!(r.condition_i);
        assert!(r.atoms[0].mixed_sum.partial_sums.iter().all(|&x| x == 0.0));
        assert_eq!(r.k_prime, Some((0, true)));
    }

    #[test]
    fn gp_non_integral_atom() {
        let s = golden();
        let jumps = [LinearForm::ratio(1, 2), LinearForm::ratio(-1, 2)];
        let points = [LinearForm::zero(), LinearForm::ratio(1, 3)];
        let digits = vec![vec![], vec![]];
        let r = guenais_parreau_check(&s, &jumps, &points, &[vec![0], vec![1]], &digits, &LinearForm::zero(), 5, 5).unwrap();
        assert!(!r.condition_i);
    }
}
