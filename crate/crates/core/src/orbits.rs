//! Orbit geometry of the rotation: three-distance audits, separation tables,
//! membership diagnostics for `ℤα + ℤ`, and Weyl averages along `q_n`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};

use crate::arithmetic::{convergents, AdaptiveReal, Approximator, Convergent, LinearForm, Session};
use crate::circle::{Circle, Pt};
use crate::fixed::{Fixed, FRAC};
use ethnum::I256;
use crate::{Error, Result};

/// Largest number of circle points an exhaustive orbit computation will build.
pub const ORBIT_BUDGET: u64 = 1 << 22;

fn q_small(c: &Convergent) -> Result<i64> {
    match c.q.to_u64() {
        Some(q) if q <= ORBIT_BUDGET => Ok(q as i64),
        _ => Err(Error::Precondition(format!("q_{} exceeds the orbit budget", c.n))),
    }
}

fn audit_fail(audit: &'static str, j: i64, k: i64, detail: alloc::string::String) -> Error {
    Error::AuditFailure { audit, n: j, k, detail }
}

/// Result of [`three_distance_audit`]; every part passed if it was returned.
#[derive(Clone, Debug)]
pub struct GapAudit {
    pub n: usize,
    pub q: i64,
    pub x: LinearForm,
    /// `k` in sorted order of `{x + kα}`.
    pub order: Vec<i64>,
    /// `⌊x + kα⌋` for the same entries as `order`.
    pub floors: Vec<i64>,
    /// Bin `⌊q{kα}⌋` of each `k = 0..q`.
    pub bins: Vec<i64>,
    pub min_gap: AdaptiveReal,
    pub max_gap: AdaptiveReal,
    /// Distinct gap lengths of the orbit of `x`, as exact forms.
    pub distinct_gaps: Vec<LinearForm>,
    /// Minimum gap of `{x − kα : 0 ≤ k < q}`.
    pub min_gap_backward: AdaptiveReal,
}

impl GapAudit {
    pub fn points(&self) -> Vec<LinearForm> {
        self.order
            .iter()
            .zip(&self.floors)
            .map(|(&k, &f)| (&self.x + &LinearForm::alpha().scale_int(k)).add_int(-f))
            .collect()
    }
}

fn sorted_orbit(circle: &Circle<'_>, step: i64, count: i64) -> Result<Vec<(i64, i64)>> {
    let mut pts = circle.orbit(0, 0, step, count)?;
    circle.sort(&mut pts)?;
    Ok(pts.iter().map(|p: &Pt| (p.k, p.floor)).collect())
}

/// Gap between sorted neighbours `i` and `i+1` (circularly), as `(dk, dc)`
/// meaning `dk·α + dc`.
fn gap_key(pts: &[(i64, i64)], i: usize) -> (i64, i64) {
    let j = (i + 1) % pts.len();
    let wrap = if j == 0 { 1 } else { 0 };
    (pts[j].0 - pts[i].0, pts[i].1 - pts[j].1 + wrap)
}

fn key_form(key: (i64, i64)) -> LinearForm {
    LinearForm::alpha().scale_int(key.0).add_int(key.1)
}

/// A real as `floor + centre·2^-128` with `|error| ≤ radius·2^-128`.
#[derive(Clone, Copy)]
struct Frac128 {
    floor: i64,
    centre: u128,
    radius: u128,
}

impl Frac128 {
    fn new(session: &Session, form: &LinearForm) -> Result<Option<Frac128>> {
        if let Some(r) = form.as_rational() {
            // Dyadic rationals with at most 128 fraction bits are exact.
            let scaled = r * BigRational::from_integer(BigInt::one() << 128u32);
            if scaled.is_integer() {
                let v = scaled.to_integer();
                let floor = (&v >> 128u32).to_i64();
                let centre = (&v - (BigInt::from(floor.unwrap_or(0)) << 128u32)).to_u128();
                if let (Some(floor), Some(centre)) = (floor, centre) {
                    return Ok(Some(Frac128 { floor, centre, radius: 0 }));
                }
            }
        }
        let fx = Fixed::from_form(session, form)?;
        let floor = match fx.certain_floor() {
            Some(f) => f,
            None => session.floor(form)?.to_i128().ok_or(Error::Overflow("orbit floor"))?,
        };
        let Ok(floor) = i64::try_from(floor) else { return Ok(None) };
        let f = fx.c - (I256::from(floor) << FRAC);
        if f < I256::ZERO || f >> FRAC != I256::ZERO {
            return Ok(None);
        }
        let drop = FRAC - 128;
        let exact = fx.r == I256::ZERO && f & ((I256::ONE << drop) - 1) == I256::ZERO;
        let radius = if exact { 0 } else { (fx.r >> drop).as_u128() + 2 };
        Ok(Some(Frac128 { floor, centre: (f >> drop).as_u128(), radius }))
    }
}

/// `⌊p·q / 2^128⌋`.
fn mul_hi(p: u128, q: u64) -> u64 {
    let q = q as u128;
    let lo = ((p & u64::MAX as u128) * q) >> 64;
    (((p >> 64) * q + lo) >> 64) as u64
}

/// Orbit of `x + k·step·α`, `k = 0..q`: sort keys `pos_hi << 64 | k` and
/// floors indexed by `k`, or `None` when an enclosure touches an integer.
struct FastOrbit {
    keys: Vec<u128>,
    floors: Vec<i64>,
    r_max: u128,
}

fn fast_orbit(x: Frac128, a: Frac128, step: i64, q: i64) -> Option<FastOrbit> {
    let r_max = x.radius.checked_add(a.radius.checked_mul(q as u128)?)?;
    let mut keys = Vec::with_capacity(q as usize);
    let mut floors = Vec::with_capacity(q as usize);
    let (mut pos, mut floor) = (x.centre, x.floor);
    for k in 0..q {
        let r = x.radius + a.radius * k as u128;
        if pos < r || pos > u128::MAX - r {
            return None;
        }
        keys.push((pos >> 64) << 64 | k as u128);
        floors.push(floor);
        let (next, carry) = if step > 0 { pos.overflowing_add(a.centre) } else { pos.overflowing_sub(a.centre) };
        pos = next;
        floor += step * a.floor + if carry { step } else { 0 };
    }
    Some(FastOrbit { keys, floors, r_max })
}

/// Counting sort on `⌊q·pos⌋`, then by key; `None` if neighbours are not
/// certainly ordered. Returns `(k, floor)` in circle order.
fn fast_sort(o: FastOrbit, q: i64, step: i64) -> Option<Vec<(i64, i64)>> {
    let bin = |key: u128| ((key >> 64) * q as u128 >> 64) as usize;
    let mut start = vec![0u32; q as usize + 1];
    for &key in &o.keys {
        start[bin(key) + 1] += 1;
    }
    for i in 0..q as usize {
        start[i + 1] += start[i];
    }
    let mut sorted = vec![0u128; o.keys.len()];
    let mut fill = start.clone();
    for &key in &o.keys {
        let b = bin(key);
        sorted[fill[b] as usize] = key;
        fill[b] += 1;
    }
    drop(o.keys);
    for b in 0..q as usize {
        let s = &mut sorted[start[b] as usize..start[b + 1] as usize];
        if s.len() > 1 {
            s.sort_unstable();
        }
    }
    // True values lie within `r_max` of the centre, which is within one unit
    // of `hi` at this scale.
    let sep = ((o.r_max >> 64) + 1).checked_mul(2)?.checked_add(1)?;
    if sorted.windows(2).any(|w| (w[1] >> 64) - (w[0] >> 64) <= sep) {
        return None;
    }
    let low = u64::MAX as u128;
    Some(sorted.into_iter().map(|key| ((key & low) as i64 * step, o.floors[(key & low) as usize])).collect())
}

type Orbits = (Vec<i64>, Vec<(i64, i64)>, Vec<(i64, i64)>);

fn fast_orbits(session: &Session, x: &LinearForm, q: i64) -> Result<Option<Orbits>> {
    let (Some(a), Some(xf)) = (Frac128::new(session, &LinearForm::alpha())?, Frac128::new(session, x)?) else {
        return Ok(None);
    };
    let zero = Frac128 { floor: 0, centre: 0, radius: 0 };
    // Bins of `{kα}`, recomputing the position alongside the floors.
    let Some(zero_orbit) = fast_orbit(zero, a, 1, q) else { return Ok(None) };
    let mut bins = Vec::with_capacity(q as usize);
    let mut pos = 0u128;
    for k in 0..q {
        let r = a.radius * k as u128;
        let (lo, hi) = (mul_hi(pos - r, q as u64), mul_hi(pos + r, q as u64));
        let b = if lo == hi {
            lo as i64
        } else {
            let form = LinearForm::alpha().scale_int(k).add_int(-zero_orbit.floors[k as usize]).scale_int(q);
            session.floor(&form)?.to_i64().ok_or(Error::Overflow("orbit bin"))?
        };
        bins.push(b);
        pos = pos.wrapping_add(a.centre);
    }
    drop(zero_orbit);
    let mut sorted = Vec::new();
    for step in [1, -1] {
        let Some(o) = fast_orbit(xf, a, step, q) else { return Ok(None) };
        let Some(s) = fast_sort(o, q, step) else { return Ok(None) };
        sorted.push(s);
    }
    let back = sorted.pop().unwrap_or_default();
    let fwd = sorted.pop().unwrap_or_default();
    Ok(Some((bins, fwd, back)))
}

fn exact_orbits(session: &Session, x: &LinearForm, q: i64) -> Result<Orbits> {
    let zero = Circle::new(session, vec![LinearForm::zero()])?;
    let mut bins = Vec::with_capacity(q as usize);
    for p in zero.orbit(0, 0, 1, q)? {
        let scaled = p.pos.mul_int(q);
        let b = match scaled.certain_floor() {
            Some(b) => b as i64,
            None => session.floor(&zero.exact(&p).scale_int(q))?.to_i64().ok_or(Error::Overflow("orbit bin"))?,
        };
        bins.push(b);
    }
    let circle = Circle::new(session, vec![x.clone()])?;
    Ok((bins, sorted_orbit(&circle, 1, q)?, sorted_orbit(&circle, -1, q)?))
}

/// Distinct items in first-seen order; there are only a handful of gap keys.
fn distinct_keys<T: PartialEq + Copy>(it: impl Iterator<Item = T>) -> Vec<T> {
    let mut out: Vec<T> = Vec::new();
    let mut last = None;
    for k in it {
        if last != Some(k) && !out.contains(&k) {
            out.push(k);
        }
        last = Some(k);
    }
    out
}

fn sort_forms(session: &Session, forms: &mut [LinearForm]) -> Result<()> {
    let mut err = None;
    forms.sort_by(|a, b| match session.compare(a, b) {
        Ok(o) => o,
        Err(e) => {
            err.get_or_insert(e);
            Ordering::Equal
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

/// Exhaustive check of the four spacing statements for the orbit at scale
/// `q = q_n`:
///
/// 1. each `[j/q, (j+1)/q)` holds exactly one `{kα}`, `k < q`, except that
///    when `θ_n < 0` the bin `0` holds two and bin `q−1` none;
/// 2. consecutive gaps of `{x + kα}` are `< 2/q`;
/// 3. any half-open window of length `1/q` holds at most two of them;
/// 4. the gaps of `{x − kα : 0 ≤ k < q}` exceed `1/(2q)`.
///
/// Also asserts that at most three distinct gap lengths occur.
pub fn three_distance_audit(session: &Session, n: usize, x: &LinearForm) -> Result<GapAudit> {
    if n == 0 {
        return Err(Error::Precondition("three_distance_audit needs n >= 1".into()));
    }
    let cs = convergents(session.alpha(), n);
    let c = cs.get(n).ok_or_else(|| Error::Precondition(format!("alpha has no convergent {n}")))?;
    let q = q_small(c)?;
    let (bins, pts, back) = match fast_orbits(session, x, q)? {
        Some(o) => o,
        None => exact_orbits(session, x, q)?,
    };

    // Part 1 on the orbit of 0.
    let mut counts = vec![0u32; q as usize];
    for &b in &bins {
        counts[b as usize] += 1;
    }
    let theta_negative = c.sign() < 0 && q > 1;
    for (j, &cnt) in counts.iter().enumerate() {
        let expected = if theta_negative && j == 0 {
            2
        } else if theta_negative && j as i64 == q - 1 {
            0
        } else {
            1
        };
        if cnt != expected {
            let k = bins.iter().position(|&b| b == j as i64).map_or(-1, |k| k as i64);
            return Err(audit_fail("three_distance_part1", j as i64, k, format!("bin holds {cnt} points, expected {expected}")));
        }
    }

    // Parts 2, 3 and the distinct-gap count on the orbit of x. Every gap is
    // `dk·α + dc`, so each distinct key is decided once.
    let keys = distinct_keys((0..pts.len()).map(|i| gap_key(&pts, i)));
    let mut distinct: Vec<LinearForm> = Vec::new();
    for key in &keys {
        let f = key_form(*key);
        if !distinct.contains(&f) {
            distinct.push(f);
        }
    }
    if distinct.len() > 3 {
        return Err(audit_fail("three_distance_gaps", distinct.len() as i64, 0, format!("{} distinct gaps", distinct.len())));
    }
    let mut sorted_gaps = distinct.clone();
    sort_forms(session, &mut sorted_gaps)?;
    let min_gap = sorted_gaps.first().cloned().unwrap_or_else(|| LinearForm::int(1));
    let max_gap = sorted_gaps.last().cloned().unwrap_or_else(|| LinearForm::int(1));
    if q > 1 && session.sign(&min_gap)? != Ordering::Greater {
        return Err(audit_fail("three_distance_gaps", 0, 0, "non-positive gap".into()));
    }
    if session.compare(&max_gap, &LinearForm::ratio(2, q))? != Ordering::Less {
        let i = (0..pts.len()).find(|&i| key_form(gap_key(&pts, i)) == max_gap).unwrap_or(0);
        return Err(audit_fail("three_distance_part2", i as i64, pts[i].0, format!("gap {max_gap} >= 2/q")));
    }
    if pts.len() >= 3 {
        let inv_q = LinearForm::ratio(1, q);
        let pair = |i: usize| (gap_key(&pts, i), gap_key(&pts, (i + 1) % pts.len()));
        let pairs = distinct_keys((0..pts.len()).map(pair));
        for (g1, g2) in pairs {
            let span = &key_form(g1) + &key_form(g2);
            if session.compare(&span, &inv_q)? == Ordering::Less {
                let i = (0..pts.len()).find(|&i| pair(i) == (g1, g2)).unwrap_or(0);
                return Err(audit_fail("three_distance_part3", i as i64, pts[i].0, "three points in a window of length 1/q".into()));
            }
        }
    }

    // Part 4 on {x − kα : 0 ≤ k < q}. Including k = q would pair x with
    // x − q_nα, whose gap ‖q_nα‖ is below 1/(2q_n).
    let half_inv = LinearForm::ratio(1, 2 * q);
    let back_keys = distinct_keys((0..back.len()).map(|i| gap_key(&back, i)));
    let mut min_back: Option<LinearForm> = None;
    for key in back_keys {
        let g = key_form(key);
        if back.len() > 1 && session.compare(&g, &half_inv)? != Ordering::Greater {
            let i = (0..back.len()).find(|&i| gap_key(&back, i) == key).unwrap_or(0);
            return Err(audit_fail("three_distance_part4", i as i64, back[i].0, format!("gap {g} <= 1/(2q)")));
        }
        let better = match &min_back {
            None => true,
            Some(m) => session.compare(&g, m)? == Ordering::Less,
        };
        if better {
            min_back = Some(g);
        }
    }
    Ok(GapAudit {
        n,
        q,
        x: x.clone(),
        order: pts.iter().map(|p| p.0).collect(),
        floors: pts.iter().map(|p| p.1).collect(),
        bins,
        min_gap: session.adaptive(&min_gap),
        max_gap: session.adaptive(&max_gap),
        distinct_gaps: sorted_gaps,
        min_gap_backward: session.adaptive(&min_back.unwrap_or_else(|| LinearForm::int(1))),
    })
}

/// `min_{j ∈ range} ‖δ − jα‖`, returning the minimising `j` and the exact
/// distance form.
pub(crate) fn min_dist_scan(
    session: &Session,
    delta: &LinearForm,
    j_lo: i64,
    j_hi: i64,
    skip_zero: bool,
) -> Result<(i64, LinearForm)> {
    let circle = Circle::new(session, vec![delta.clone()])?;
    let mut best: Option<(i64, Fixed)> = None;
    let mut ties: Vec<i64> = Vec::new();
    for j in j_lo..=j_hi {
        if skip_zero && j == 0 {
            continue;
        }
        let p = circle.point(0, -j)?;
        let d = p.pos.dist_of_frac();
        match &best {
            None => best = Some((j, d)),
            Some((_, b)) => match d.certain_cmp(b) {
                Some(Ordering::Less) => {
                    best = Some((j, d));
                    ties.clear();
                }
                Some(_) => {}
                None => ties.push(j),
            },
        }
    }
    let (mut bj, _) = best.ok_or_else(|| Error::Precondition("empty scan range".into()))?;
    let dist = |j: i64| session.dist_to_z_form(&(delta - &LinearForm::alpha().scale_int(j)));
    let mut bd = dist(bj)?;
    for j in ties {
        let d = dist(j)?;
        if session.compare(&d, &bd)? == Ordering::Less {
            bj = j;
            bd = d;
        }
    }
    Ok((bj, bd))
}

#[derive(Clone, Debug)]
pub struct SeparationRow {
    pub n: usize,
    pub q: BigInt,
    pub argmin: i64,
    /// `min_{|j| ≤ q_n} ‖β − jα‖`.
    pub min_dist: LinearForm,
    pub value: AdaptiveReal,
    /// `q_n · min`.
    pub c: AdaptiveReal,
}

#[derive(Clone, Debug)]
pub struct SeparationTable {
    pub beta: LinearForm,
    pub rows: Vec<SeparationRow>,
    /// Indices with `c_n ≥ threshold`.
    pub subsequence: Vec<usize>,
    pub threshold: BigRational,
    /// Raised when `β` is a symbolic member of `ℤα + ℤ`.
    pub member_flag: bool,
    /// Smallest `c_n` observed.
    pub observed_min_c: Option<AdaptiveReal>,
}

/// Exhaustive `|j| ≤ q_n` scan of `‖β − jα‖` for `1 ≤ n ≤ n_max`, skipping
/// indices whose `q_n` exceeds the orbit budget.
pub fn separation_table(session: &Session, beta: &LinearForm, n_max: usize, threshold: &BigRational) -> Result<SeparationTable> {
    let member_flag = beta.as_integer_alpha_combination().is_some();
    let cs = convergents(session.alpha(), n_max);
    let mut rows = Vec::new();
    let mut subsequence = Vec::new();
    let mut observed: Option<(LinearForm, AdaptiveReal)> = None;
    let thr = LinearForm::constant(threshold.clone());
    for c in cs.iter().skip(1) {
        let Ok(q) = q_small(c) else { break };
        let (j, d) = min_dist_scan(session, beta, -q, q, false)?;
        let cf = d.scale_int(q);
        if session.compare(&cf, &thr)? != Ordering::Less {
            subsequence.push(c.n);
        }
        let replace = match &observed {
            None => true,
            Some((m, _)) => session.compare(&cf, m)? == Ordering::Less,
        };
        if replace {
            observed = Some((cf.clone(), session.adaptive(&cf)));
        }
        rows.push(SeparationRow {
            n: c.n,
            q: c.q.clone(),
            argmin: j,
            value: session.adaptive(&d),
            min_dist: d,
            c: session.adaptive(&cf),
        });
    }
    Ok(SeparationTable {
        beta: beta.clone(),
        rows,
        subsequence,
        threshold: threshold.clone(),
        member_flag,
        observed_min_c: observed.map(|o| o.1),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Membership {
    DeclaredMember,
    EvidenceMember,
    EvidenceNonMember,
    Inconclusive,
}

#[derive(Clone, Debug)]
pub struct MembershipRow {
    pub n: usize,
    /// `‖q_nβ‖ ≤ ¼ q_n ‖q_nα‖`.
    pub small_multiple: bool,
    /// `inf_{|j| < q_n} ‖β − jα‖ < ½ ‖q_{n+1}α‖`; `None` beyond the budget.
    pub close_orbit_point: Option<bool>,
}

#[derive(Clone, Debug)]
pub struct MembershipReport {
    pub verdict: Membership,
    pub rows: Vec<MembershipRow>,
}

/// Finite-depth evidence on whether `β ∈ ℤα + ℤ`.
///
/// Both criteria hold for every large `n` when `β = jα + c`, so failures in
/// the upper half of the range are evidence against membership. A failure at
/// `n` only rules out `|j| ≲ q_n`, which for unbounded partial quotients says
/// little; non-membership evidence is therefore reported only when `α`
/// carries the bounded-type hint.
pub fn zalpha_membership_diagnostic(session: &Session, beta: &LinearForm, n_lo: usize, n_hi: usize) -> Result<MembershipReport> {
    if beta.as_integer_alpha_combination().is_some() {
        return Ok(MembershipReport { verdict: Membership::DeclaredMember, rows: Vec::new() });
    }
    let cs = convergents(session.alpha(), n_hi + 1);
    let mut rows = Vec::new();
    for n in n_lo.max(1)..=n_hi {
        let (Some(c), Some(next)) = (cs.get(n), cs.get(n + 1)) else { break };
        let qb = beta.scale_big(&c.q);
        let lhs = session.dist_to_z_form(&qb)?;
        let norm = c.theta.scale_int(c.sign() as i64);
        let rhs = norm.scale_big(&c.q).scale(&BigRational::new(BigInt::one(), BigInt::from(4)));
        let small_multiple = session.compare(&lhs, &rhs)? != Ordering::Greater;
        let close_orbit_point = match q_small(c) {
            Ok(q) if q > 1 => {
                let (_, d) = min_dist_scan(session, beta, -(q - 1), q - 1, false)?;
                let half = next.theta.scale_int(next.sign() as i64).scale(&BigRational::new(BigInt::one(), BigInt::from(2)));
                Some(session.compare(&d, &half)? == Ordering::Less)
            }
            Ok(_) => {
                let d = session.dist_to_z_form(beta)?;
                let half = next.theta.scale_int(next.sign() as i64).scale(&BigRational::new(BigInt::one(), BigInt::from(2)));
                Some(session.compare(&d, &half)? == Ordering::Less)
            }
            Err(_) => None,
        };
        rows.push(MembershipRow { n, small_multiple, close_orbit_point });
    }
    let tail = &rows[rows.len() / 2..];
    let verdict = if tail.is_empty() {
        Membership::Inconclusive
    } else if tail.iter().all(|r| r.small_multiple && r.close_orbit_point != Some(false)) {
        Membership::EvidenceMember
    } else if tail.iter().any(|r| !r.small_multiple) && session.alpha().bounded_hint() {
        Membership::EvidenceNonMember
    } else {
        Membership::Inconclusive
    };
    Ok(MembershipReport { verdict, rows })
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeylRow {
    pub character: Vec<i64>,
    /// `(1/N) |Σ_{n ≤ N} exp(2πi Σ_j s_j q_n β_j)|`.
    pub average: f64,
    /// Bound on the numerical error of `average`.
    pub error: f64,
}

/// Cesàro averages of the characters `s` along `(q_nβ_j)_j`, `n = 1..=N`.
/// The zero character averages to exactly 1.
pub fn weyl_equidistribution(session: &Session, betas: &[LinearForm], characters: &[Vec<i64>], big_n: usize) -> Result<Vec<WeylRow>> {
    for s in characters {
        if s.len() != betas.len() {
            return Err(Error::Precondition("character length differs from the number of betas".into()));
        }
    }
    let cs = convergents(session.alpha(), big_n);
    let max_bits = cs.last().map_or(0, |c| c.q.bits()) as u32;
    let coeff_bits = betas.iter().map(|b| session.expand(b).coeff_bits()).max().unwrap_or(0) as u32;
    let approx = Approximator::new(session, max_bits + coeff_bits + 64);
    let mut phases: Vec<Vec<f64>> = Vec::with_capacity(cs.len());
    let mut worst = 0.0f64;
    for c in cs.iter().skip(1) {
        let mut row = Vec::with_capacity(betas.len());
        for b in betas {
            let form = b.scale_big(&c.q);
            let (v, w) = if let Some(r) = session.expand(&form).as_rational() {
                let f = &r - r.floor();
                (crate::arithmetic::rat_to_f64(&f), 0.0)
            } else {
                approx.frac_f64(&form)
            };
            worst = worst.max(w);
            row.push(v);
        }
        phases.push(row);
    }
    let nn = phases.len().max(1) as f64;
    let tau = 2.0 * core::f64::consts::PI;
    let mut out = Vec::new();
    for s in characters {
        if s.iter().all(|&v| v == 0) {
            out.push(WeylRow { character: s.clone(), average: 1.0, error: 0.0 });
            continue;
        }
        let (mut re, mut im) = (0.0f64, 0.0f64);
        for row in &phases {
            let mut t = 0.0f64;
            for (sj, y) in s.iter().zip(row) {
                t += *sj as f64 * y;
            }
            t -= libm::floor(t);
            re += libm::cos(tau * t);
            im += libm::sin(tau * t);
        }
        let avg = libm::sqrt(re * re + im * im) / nn;
        let l1: f64 = s.iter().map(|v| v.unsigned_abs() as f64).sum();
        let err = tau * l1 * (worst + 1e-15) + 1e-12;
        out.push(WeylRow { character: s.clone(), average: avg, error: err });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::PartialQuotients;

    #[test]
    fn silver_bins() {
        let s = Session::new(PartialQuotients::sqrt2m1());
        let a = three_distance_audit(&s, 2, &LinearForm::zero()).unwrap();
        assert_eq!(a.q, 5);
        assert_eq!(a.bins, [0, 2, 4, 1, 3]);
    }

    #[test]
    fn golden_gaps_below_two_over_q() {
        let s = Session::new(PartialQuotients::golden());
        let a = three_distance_audit(&s, 4, &LinearForm::zero()).unwrap();
        assert!(a.max_gap.hi() < &BigRational::new(2.into(), 5.into()));
        assert!(a.distinct_gaps.len() <= 3);
    }

    #[test]
    fn single_point_audit() {
        let s = Session::new(PartialQuotients::golden());
        let a = three_distance_audit(&s, 1, &LinearForm::ratio(1, 7)).unwrap();
        assert_eq!(a.q, 1);
    }

    #[test]
    fn member_has_zero_separation() {
        let s = Session::new(PartialQuotients::golden());
        let beta = LinearForm::alpha().scale_int(3).add_int(-1);
        let t = separation_table(&s, &beta, 6, &BigRational::new(1.into(), 100.into())).unwrap();
        assert!(t.member_flag);
        assert!(t.rows.iter().filter(|r| r.q >= BigInt::from(3)).all(|r| r.min_dist.is_zero()));
    }

    #[test]
    fn weyl_trivial_direction() {
        let s = Session::new(PartialQuotients::golden());
        let rows = weyl_equidistribution(&s, &[LinearForm::ratio(1, 2)], &[vec![2]], 100).unwrap();
        assert!((rows[0].average - 1.0).abs() < 1e-12);
    }
}
