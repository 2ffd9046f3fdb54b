//! Step and piecewise-affine cocycles over the rotation, their Birkhoff sums,
//! exact pushforward laws, rationality data, and the affine reduction.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::arithmetic::{convergents, AdaptiveReal, LinearForm, Session, Symbol};
use crate::circle::{Circle, Pt};
use crate::fixed::Fixed;
use crate::{Error, Result};

/// Largest `D·n` a pushforward will walk.
pub const PUSHFORWARD_BUDGET: u64 = 1 << 24;

/// Half-open piece `[lo, hi)` carrying a value vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Piece {
    pub lo: LinearForm,
    pub hi: LinearForm,
    pub value: Vec<LinearForm>,
}

impl Piece {
    pub fn new(lo: LinearForm, hi: LinearForm, value: Vec<LinearForm>) -> Self {
        Piece { lo, hi, value }
    }
}

/// Discontinuity `x` with `σ = Φ(x⁺) − Φ(x⁻)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Jump {
    pub at: LinearForm,
    pub sigma: Vec<LinearForm>,
}

/// Maximal interval `I_{i,j}` on which coordinate `j` is constant, with the
/// coefficient `t_{i,j}` of its centred indicator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoordInterval {
    pub lo: LinearForm,
    pub hi: LinearForm,
    pub t: LinearForm,
}

impl CoordInterval {
    pub fn mass(&self) -> LinearForm {
        &self.hi - &self.lo
    }
}

/// Zero-mean step cocycle `[0,1) → ℝ^d`, canonicalised: pieces sorted from
/// `0` to `1`, adjacent pieces with equal values merged.
#[derive(Clone, Debug)]
pub struct StepCocycle {
    d: usize,
    pieces: Vec<Piece>,
    breaks_fx: Vec<Fixed>,
    mean_removed: Vec<LinearForm>,
    jumps: Vec<Jump>,
    variation: Vec<LinearForm>,
    coords: Vec<Vec<CoordInterval>>,
    window: i64,
}

/// Circle intervals covering `{x : x − a mod 1 ∈ [0, len)}`, for `0 ≤ len ≤ 1`.
pub fn circle_interval(session: &Session, a: &LinearForm, len: &LinearForm) -> Result<Vec<(LinearForm, LinearForm)>> {
    let lo = session.frac(a)?;
    let hi = &lo + len;
    if session.sign(len)? != Ordering::Greater {
        return Ok(Vec::new());
    }
    if session.compare(len, &LinearForm::int(1))? != Ordering::Less {
        return Ok(vec![(LinearForm::zero(), LinearForm::int(1))]);
    }
    match session.compare(&hi, &LinearForm::int(1))? {
        Ordering::Greater => Ok(vec![(lo, LinearForm::int(1)), (LinearForm::zero(), hi.add_int(-1))]),
        _ => Ok(vec![(lo, hi)]),
    }
}

fn sort_dedup(session: &Session, mut pts: Vec<LinearForm>) -> Result<Vec<LinearForm>> {
    let mut err = None;
    pts.sort_by(|a, b| match session.compare(a, b) {
        Ok(o) => o,
        Err(e) => {
            err.get_or_insert(e);
            a.cmp(b)
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    let mut out: Vec<LinearForm> = Vec::with_capacity(pts.len());
    for p in pts {
        match out.last() {
            Some(l) if session.compare(l, &p)? == Ordering::Equal => {}
            _ => out.push(p),
        }
    }
    Ok(out)
}

fn zero_vec(d: usize) -> Vec<LinearForm> {
    vec![LinearForm::zero(); d]
}

fn vec_add(a: &[LinearForm], b: &[LinearForm]) -> Vec<LinearForm> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn vec_sub(a: &[LinearForm], b: &[LinearForm]) -> Vec<LinearForm> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Builds a zero-mean step cocycle from pieces partitioning `[0, 1)`.
/// Zero-length pieces are dropped; the mean of each coordinate is subtracted
/// and reported by [`StepCocycle::mean_removed`].
pub fn make_step(session: &Session, d: usize, pieces: Vec<Piece>) -> Result<StepCocycle> {
    if pieces.is_empty() {
        return Err(Error::EmptyPartition);
    }
    let mut live = Vec::with_capacity(pieces.len());
    for p in pieces {
        if p.value.len() != d {
            return Err(Error::InvalidPartition(format!("piece value has length {}, expected {d}", p.value.len())));
        }
        match session.compare(&p.lo, &p.hi)? {
            Ordering::Less => live.push(p),
            Ordering::Equal => {}
            Ordering::Greater => return Err(Error::InvalidPartition(format!("piece [{}, {}) is reversed", p.lo, p.hi))),
        }
    }
    if live.is_empty() {
        return Err(Error::EmptyPartition);
    }
    let mut err = None;
    live.sort_by(|a, b| match session.compare(&a.lo, &b.lo) {
        Ok(o) => o,
        Err(e) => {
            err.get_or_insert(e);
            Ordering::Equal
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    if session.compare(&live[0].lo, &LinearForm::zero())? != Ordering::Equal {
        return Err(Error::InvalidPartition(format!("pieces start at {}, not 0", live[0].lo)));
    }
    for w in live.windows(2) {
        if session.compare(&w[0].hi, &w[1].lo)? != Ordering::Equal {
            return Err(Error::InvalidPartition(format!("gap or overlap between {} and {}", w[0].hi, w[1].lo)));
        }
    }
    if session.compare(&live[live.len() - 1].hi, &LinearForm::int(1))? != Ordering::Equal {
        return Err(Error::InvalidPartition("pieces do not end at 1".into()));
    }

    let mut mean = zero_vec(d);
    for p in &live {
        let len = &p.hi - &p.lo;
        for (m, v) in mean.iter_mut().zip(&p.value) {
            *m += &v.mul_form(&len).ok_or(Error::NonlinearProduct)?;
        }
    }
    for p in &mut live {
        p.value = vec_sub(&p.value, &mean);
    }
    StepCocycle::from_canonical(session, d, live, mean)
}

impl StepCocycle {
    fn from_canonical(session: &Session, d: usize, live: Vec<Piece>, mean: Vec<LinearForm>) -> Result<Self> {
        let mut pieces: Vec<Piece> = Vec::with_capacity(live.len());
        for p in live {
            match pieces.last_mut() {
                Some(last) if last.value == p.value => last.hi = p.hi,
                _ => pieces.push(p),
            }
        }
        let m = pieces.len();
        let mut jumps = Vec::new();
        for i in 0..m {
            let prev = &pieces[(i + m - 1) % m].value;
            let sigma = vec_sub(&pieces[i].value, prev);
            if sigma.iter().any(|s| !s.is_zero()) {
                jumps.push(Jump { at: pieces[i].lo.clone(), sigma });
            }
        }
        let mut variation = zero_vec(d);
        for j in &jumps {
            for (v, s) in variation.iter_mut().zip(&j.sigma) {
                *v += &session.abs(s)?;
            }
        }
        let mut coords = Vec::with_capacity(d);
        for j in 0..d {
            let mut ivs: Vec<CoordInterval> = Vec::new();
            for p in &pieces {
                match ivs.last_mut() {
                    Some(last) if last.t == p.value[j] => last.hi = p.hi.clone(),
                    _ => ivs.push(CoordInterval { lo: p.lo.clone(), hi: p.hi.clone(), t: p.value[j].clone() }),
                }
            }
            coords.push(ivs);
        }
        let mut window = 1i64;
        for v in &variation {
            let f = session.floor(v)?;
            let f = f.to_i64().ok_or(Error::Overflow("variation"))?;
            window = window.max(f + 1);
        }
        let breaks_fx = pieces.iter().map(|p| Fixed::from_form(session, &p.lo)).collect::<Result<Vec<_>>>()?;
        Ok(StepCocycle { d, pieces, breaks_fx, mean_removed: mean, jumps, variation, coords, window })
    }

    /// Sum `Σ_t c_t·1_{[lo_t, hi_t)}` over intervals inside `[0, 1]`, made zero-mean.
    pub fn from_indicators(session: &Session, d: usize, terms: &[(LinearForm, LinearForm, Vec<LinearForm>)]) -> Result<Self> {
        let mut pts = vec![LinearForm::zero()];
        for (lo, hi, c) in terms {
            if c.len() != d {
                return Err(Error::InvalidPartition("indicator coefficient length".into()));
            }
            for e in [lo, hi] {
                if session.sign(e)? == Ordering::Less || session.compare(e, &LinearForm::int(1))? == Ordering::Greater {
                    return Err(Error::InvalidPartition(format!("endpoint {e} outside [0, 1]")));
                }
                pts.push(e.clone());
            }
        }
        pts.push(LinearForm::int(1));
        let pts = sort_dedup(session, pts)?;
        let mut pieces = Vec::with_capacity(pts.len());
        for w in pts.windows(2) {
            let mut value = zero_vec(d);
            for (lo, hi, c) in terms {
                if session.compare(lo, &w[0])? != Ordering::Greater && session.compare(&w[0], hi)? == Ordering::Less {
                    value = vec_add(&value, c);
                }
            }
            pieces.push(Piece::new(w[0].clone(), w[1].clone(), value));
        }
        make_step(session, d, pieces)
    }

    /// Centred indicator `1_{[0,β)} − β`.
    pub fn indicator(session: &Session, beta: &LinearForm) -> Result<Self> {
        Self::from_indicators(session, 1, &[(LinearForm::zero(), beta.clone(), vec![LinearForm::int(1)])])
    }

    /// `x ↦ Φ(x + s)`.
    pub fn shifted(&self, session: &Session, s: &LinearForm) -> Result<Self> {
        let mut terms = Vec::new();
        for p in &self.pieces {
            let len = &p.hi - &p.lo;
            for (lo, hi) in circle_interval(session, &(&p.lo - s), &len)? {
                terms.push((lo, hi, self.raw_value(p)));
            }
        }
        Self::from_indicators(session, self.d, &terms)
    }

    /// Coordinatewise concatenation `(Φ, Ψ)`.
    pub fn concat(session: &Session, parts: &[&StepCocycle]) -> Result<Self> {
        let d: usize = parts.iter().map(|p| p.d).sum();
        let mut terms = Vec::new();
        let mut off = 0;
        for c in parts {
            for p in &c.pieces {
                let mut v = zero_vec(d);
                v[off..off + c.d].clone_from_slice(&c.raw_value(p));
                terms.push((p.lo.clone(), p.hi.clone(), v));
            }
            off += c.d;
        }
        Self::from_indicators(session, d, &terms)
    }

    /// `M·Φ` for a rational `r × d` matrix.
    pub fn linear_image(&self, session: &Session, m: &[Vec<BigRational>]) -> Result<Self> {
        for row in m {
            if row.len() != self.d {
                return Err(Error::Precondition("matrix width differs from the dimension".into()));
            }
        }
        let pieces = self
            .pieces
            .iter()
            .map(|p| {
                let raw = self.raw_value(p);
                let value = m
                    .iter()
                    .map(|row| row.iter().zip(&raw).fold(LinearForm::zero(), |acc, (c, v)| &acc + &v.scale(c)))
                    .collect();
                Piece::new(p.lo.clone(), p.hi.clone(), value)
            })
            .collect();
        make_step(session, m.len(), pieces)
    }

    /// `Φ + Ψ`.
    pub fn add(&self, session: &Session, other: &StepCocycle) -> Result<Self> {
        if self.d != other.d {
            return Err(Error::Precondition("dimension mismatch".into()));
        }
        let terms: Vec<_> = self
            .pieces
            .iter()
            .map(|p| (p.lo.clone(), p.hi.clone(), self.raw_value(p)))
            .chain(other.pieces.iter().map(|p| (p.lo.clone(), p.hi.clone(), other.raw_value(p))))
            .collect();
        Self::from_indicators(session, self.d, &terms)
    }

    /// Piece value before the mean was removed. Rebuilding from these keeps
    /// every mass computation linear.
    fn raw_value(&self, p: &Piece) -> Vec<LinearForm> {
        vec_add(&p.value, &self.mean_removed)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// Mean subtracted at construction, per coordinate.
    pub fn mean_removed(&self) -> &[LinearForm] {
        &self.mean_removed
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    /// Number of discontinuities `D(Φ)`.
    pub fn discontinuity_count(&self) -> usize {
        self.jumps.len()
    }

    /// Circular variation `V(φ^j)`.
    pub fn variation(&self) -> &[LinearForm] {
        &self.variation
    }

    /// Per coordinate, the intervals `I_{i,j}` with `t_{i,j}` and `β_{i,j} = μ(I_{i,j})`.
    pub fn coordinate_intervals(&self) -> &[Vec<CoordInterval>] {
        &self.coords
    }

    /// Bound `L + 1` of the integer window `𝓕 = {|ℓ| ≤ L + 1}`.
    pub fn window(&self) -> i64 {
        self.window
    }

    fn locate(&self, session: &Session, pos: &Fixed, exact: &dyn Fn() -> LinearForm) -> Result<usize> {
        let (mut lo, mut hi) = (0usize, self.pieces.len());
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            let le = match self.breaks_fx[mid].certain_cmp(pos) {
                Some(o) => o != Ordering::Greater,
                None => session.compare(&self.pieces[mid].lo, &exact())? != Ordering::Greater,
            };
            if le {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }

    /// `Φ(x)`, reading `x` modulo 1.
    pub fn value_at(&self, session: &Session, x: &LinearForm) -> Result<Vec<LinearForm>> {
        let f = session.frac(x)?;
        let fx = Fixed::from_form(session, &f)?;
        let i = self.locate(session, &fx, &|| f.clone())?;
        Ok(self.pieces[i].value.clone())
    }

    /// Visit counts of each piece along `x, x+α, …, x+(n−1)α`.
    fn visit_counts(&self, circle: &Circle<'_>, base: u32, k0: i64, n: i64) -> Result<Vec<i64>> {
        let mut counts = vec![0i64; self.pieces.len()];
        for k in k0..k0 + n {
            let p = circle.point(base, k)?;
            let i = self.locate(circle.session, &p.pos, &|| circle.exact(&p))?;
            counts[i] += 1;
        }
        Ok(counts)
    }

    fn combine_counts(&self, counts: &[i64]) -> Vec<LinearForm> {
        let mut out = zero_vec(self.d);
        for (p, &c) in self.pieces.iter().zip(counts) {
            if c != 0 {
                for (o, v) in out.iter_mut().zip(&p.value) {
                    *o += &v.scale_int(c);
                }
            }
        }
        out
    }
}

/// Exact Birkhoff sum `φ_n(x)`; negative `n` uses `φ_{−n}(x) = −φ_n(x − nα)`.
pub fn birkhoff_eval(session: &Session, phi: &StepCocycle, n: i64, x: &LinearForm) -> Result<Vec<LinearForm>> {
    if n == 0 {
        return Ok(zero_vec(phi.d));
    }
    let circle = Circle::new(session, vec![x.clone()])?;
    if n > 0 {
        let c = phi.visit_counts(&circle, 0, 0, n)?;
        Ok(phi.combine_counts(&c))
    } else {
        let c = phi.visit_counts(&circle, 0, n, -n)?;
        Ok(phi.combine_counts(&c).iter().map(|v| -v).collect())
    }
}

/// Transfer added by [`normalize_discontinuities`]:
/// `coeff·(1_{[lo,hi)} − (hi − lo))` with `hi − lo = mα + c`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transfer {
    pub lo: LinearForm,
    pub hi: LinearForm,
    pub coeff: Vec<LinearForm>,
    pub removed: LinearForm,
    pub kept: LinearForm,
    pub m: i64,
}

impl Transfer {
    /// Value of the added function at `x`.
    pub fn eval(&self, session: &Session, x: &LinearForm) -> Result<Vec<LinearForm>> {
        let f = session.frac(x)?;
        let inside = session.compare(&self.lo, &f)? != Ordering::Greater && session.compare(&f, &self.hi)? == Ordering::Less;
        let len = &self.hi - &self.lo;
        let base = if inside { LinearForm::int(1) - len } else { -len };
        self.coeff.iter().map(|c| c.mul_form(&base).ok_or(Error::NonlinearProduct)).collect()
    }

    /// Transfer function `G` with `eval = G − G∘T`: `G(x) = coeff·Σ_{i<m}{x − hi + iα}`
    /// for `m > 0`, and `−coeff·Σ_{i<|m|}{x − hi + (m+i)α}` for `m < 0`.
    pub fn transfer_fn(&self, session: &Session, x: &LinearForm) -> Result<Vec<LinearForm>> {
        let y = x - &self.hi;
        let (start, count, sign) = if self.m > 0 { (0, self.m, 1) } else { (self.m, -self.m, -1) };
        let mut s = LinearForm::zero();
        for i in start..start + count {
            s += &session.frac(&(&y + &LinearForm::alpha().scale_int(i)))?;
        }
        let s = s.scale_int(sign);
        self.coeff.iter().map(|c| c.mul_form(&s).ok_or(Error::NonlinearProduct)).collect()
    }
}

/// Removes discontinuities that differ from an earlier one by a symbolic
/// element of `ℤα + ℤ`, adding the explicit coboundary for each removal.
/// Surrogate symbols stay opaque here.
pub fn normalize_discontinuities(session: &Session, phi: &StepCocycle) -> Result<(StepCocycle, Vec<Transfer>)> {
    let mut cur = phi.clone();
    let mut log = Vec::new();
    loop {
        let js = cur.jumps.clone();
        let mut found = None;
        'outer: for k in 0..js.len() {
            for i in 0..k {
                let diff = &js[k].at - &js[i].at;
                if let Some((m, _)) = diff.as_integer_alpha_combination() {
                    if !m.is_zero() {
                        found = Some((i, k, m));
                        break 'outer;
                    }
                }
            }
        }
        let Some((i, k, m)) = found else { break };
        let (xi, xk) = (&js[i].at, &js[k].at);
        let m = m.to_i64().ok_or(Error::Overflow("transfer multiple"))?;
        // 1_{[lo,hi)} jumps +1 at lo and −1 at hi; the coefficient cancels σ_k.
        let (lo, hi, coeff, mm) = if session.compare(xi, xk)? == Ordering::Less {
            (xi.clone(), xk.clone(), js[k].sigma.clone(), m)
        } else {
            (xk.clone(), xi.clone(), js[k].sigma.iter().map(|s| -s).collect(), -m)
        };
        let t = Transfer { lo: lo.clone(), hi: hi.clone(), coeff: coeff.clone(), removed: xk.clone(), kept: xi.clone(), m: mm };
        let added = StepCocycle::from_indicators(session, cur.d, &[(lo, hi, coeff)])?;
        cur = cur.add(session, &added)?;
        log.push(t);
    }
    Ok((cur, log))
}

/// A single atom of a pushforward law.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Atom {
    pub value: Vec<LinearForm>,
    pub mass: LinearForm,
}

impl Atom {
    pub fn value_adaptive(&self, session: &Session) -> Vec<AdaptiveReal> {
        self.value.iter().map(|v| session.adaptive(v)).collect()
    }
}

/// Exact law of `Φ_n` under Lebesgue measure.
#[derive(Clone, Debug)]
pub struct PushforwardDistribution {
    pub n: i64,
    pub atoms: Vec<Atom>,
    /// Number of discontinuity points walked, `D·n` before coincidences.
    pub pieces: usize,
    /// Some two distinct atoms are closer than `1e-9`.
    pub close_atoms: bool,
}

impl PushforwardDistribution {
    pub fn total_mass(&self) -> LinearForm {
        self.atoms.iter().fold(LinearForm::zero(), |acc, a| &acc + &a.mass)
    }
}

/// `y ↦ f_n(y + shift·α)`.
#[derive(Clone, Copy)]
pub(crate) struct Block<'a> {
    pub f: &'a StepCocycle,
    pub n: i64,
    pub shift: i64,
}

/// Exact mass `Σ_b cnt_b·x_b + a·α + c`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub(crate) struct MassAcc {
    pub cnt: Vec<i64>,
    pub a: i128,
    pub c: i128,
}

/// The circle cut by every discontinuity of a list of blocks, aggregated by
/// the joint value vector.
pub(crate) struct Partition {
    pub dims: Vec<usize>,
    pub basis: Vec<Symbol>,
    pub scale: BigInt,
    pub bases: Vec<LinearForm>,
    pub atoms: BTreeMap<Vec<i128>, MassAcc>,
    pub points: usize,
}

impl Partition {
    fn offset(&self, block: usize) -> usize {
        self.dims[..block].iter().sum::<usize>() * self.basis.len()
    }

    /// Value of block `b` encoded in a key.
    pub fn value(&self, key: &[i128], block: usize) -> Vec<LinearForm> {
        self.value_of_slice(self.slice(key, block), block)
    }

    /// Value encoded in a block slice of a key.
    pub fn value_of_slice(&self, slice: &[i128], block: usize) -> Vec<LinearForm> {
        let nb = self.basis.len();
        (0..self.dims[block])
            .map(|j| {
                let terms = self.basis.iter().enumerate().filter_map(|(s, sym)| {
                    let v = slice[j * nb + s];
                    (v != 0).then(|| (*sym, BigRational::new(BigInt::from(v), self.scale.clone())))
                });
                LinearForm::from_terms(terms)
            })
            .collect()
    }

    pub fn slice<'k>(&self, key: &'k [i128], block: usize) -> &'k [i128] {
        let off = self.offset(block);
        &key[off..off + self.dims[block] * self.basis.len()]
    }

    pub fn mass(&self, m: &MassAcc) -> LinearForm {
        let mut out = LinearForm::big_int(BigInt::from(m.c)) + LinearForm::alpha().scale_big(&BigInt::from(m.a));
        for (b, &c) in self.bases.iter().zip(&m.cnt) {
            if c != 0 {
                out += &b.scale_int(c);
            }
        }
        out
    }

    /// Aggregate the atoms whose key satisfies `keep`, projected to `block`.
    pub fn project(&self, block: usize, keep: impl Fn(&[i128]) -> bool) -> Vec<(Vec<i128>, MassAcc)> {
        let mut out: BTreeMap<Vec<i128>, MassAcc> = BTreeMap::new();
        for (k, m) in &self.atoms {
            if !keep(k) {
                continue;
            }
            let e = out.entry(self.slice(k, block).to_vec()).or_insert_with(|| MassAcc { cnt: vec![0; m.cnt.len()], a: 0, c: 0 });
            mass_add(e, m, 1);
        }
        out.into_iter().collect()
    }
}

fn mass_add(acc: &mut MassAcc, m: &MassAcc, sign: i64) {
    for (a, b) in acc.cnt.iter_mut().zip(&m.cnt) {
        *a += sign * b;
    }
    acc.a += sign as i128 * m.a;
    acc.c += sign as i128 * m.c;
}

fn form_to_key(form: &LinearForm, basis: &[Symbol], scale: &BigInt, out: &mut [i128]) -> Result<()> {
    for (s, c) in form.terms() {
        let idx = basis.binary_search(s).map_err(|_| Error::Precondition("symbol outside the key basis".into()))?;
        let v = c * BigRational::from_integer(scale.clone());
        if !v.is_integer() {
            return Err(Error::Precondition("key scale does not clear denominators".into()));
        }
        out[idx] = v.to_integer().to_i128().ok_or(Error::Overflow("atom key"))?;
    }
    Ok(())
}

/// Cuts the circle at every discontinuity of every block and aggregates
/// segment lengths by the joint value.
pub(crate) fn partition(session: &Session, blocks: &[Block<'_>]) -> Result<Partition> {
    partition_with_budget(session, blocks, PUSHFORWARD_BUDGET)
}

pub(crate) fn partition_with_budget(session: &Session, blocks: &[Block<'_>], budget: u64) -> Result<Partition> {
    if blocks.iter().any(|b| b.n < 0) {
        return Err(Error::Precondition("block time must be non-negative".into()));
    }
    let mut bases: Vec<LinearForm> = Vec::new();
    // per base: (block, jump, lowest k, highest k)
    let mut users: Vec<Vec<(u32, u32, i64, i64)>> = Vec::new();
    for (bi, b) in blocks.iter().enumerate() {
        if b.n == 0 {
            continue;
        }
        for (ji, jump) in b.f.jumps.iter().enumerate() {
            let id = match bases.iter().position(|x| *x == jump.at) {
                Some(i) => i,
                None => {
                    bases.push(jump.at.clone());
                    users.push(Vec::new());
                    bases.len() - 1
                }
            };
            users[id].push((bi as u32, ji as u32, -(b.shift + b.n - 1), -b.shift));
        }
    }
    // Blocks over the same orbit segment share points; each is stored once.
    let mut ranges: Vec<Vec<(i64, i64)>> = Vec::with_capacity(users.len());
    let mut unique = 0u64;
    for us in &users {
        let mut r: Vec<(i64, i64)> = us.iter().map(|u| (u.2, u.3)).collect();
        r.sort_unstable();
        let mut merged: Vec<(i64, i64)> = Vec::new();
        for (lo, hi) in r {
            match merged.last_mut() {
                Some(last) if lo <= last.1 + 1 => last.1 = last.1.max(hi),
                _ => merged.push((lo, hi)),
            }
        }
        unique += merged.iter().map(|(lo, hi)| (hi - lo + 1) as u64).sum::<u64>();
        ranges.push(merged);
    }
    if unique > budget {
        return Err(Error::Precondition(format!("{unique} discontinuities exceed the pushforward budget")));
    }
    let mut base_vals = Vec::with_capacity(blocks.len());
    for b in blocks {
        base_vals.push(birkhoff_eval(session, b.f, b.n, &LinearForm::alpha().scale_int(b.shift))?);
    }
    let mut basis: Vec<Symbol> = Vec::new();
    let mut scale = BigInt::one();
    let all_forms = blocks
        .iter()
        .flat_map(|b| b.f.jumps.iter().flat_map(|j| j.sigma.iter()))
        .chain(base_vals.iter().flatten());
    for f in all_forms {
        for (s, c) in f.terms() {
            if let Err(i) = basis.binary_search(s) {
                basis.insert(i, *s);
            }
            scale = scale.lcm(c.denom());
        }
    }
    let nb = basis.len();
    let dims: Vec<usize> = blocks.iter().map(|b| b.f.d).collect();
    let width: usize = dims.iter().sum::<usize>() * nb;

    let mut key0 = vec![0i128; width];
    let mut off = 0;
    let mut jump_keys: Vec<Vec<Vec<(usize, i128)>>> = Vec::with_capacity(blocks.len());
    for (b, bv) in blocks.iter().zip(&base_vals) {
        for (j, v) in bv.iter().enumerate() {
            form_to_key(v, &basis, &scale, &mut key0[off + j * nb..off + (j + 1) * nb])?;
        }
        let mut per = Vec::new();
        for jump in &b.f.jumps {
            let mut dense = vec![0i128; b.f.d * nb];
            for (j, s) in jump.sigma.iter().enumerate() {
                form_to_key(s, &basis, &scale, &mut dense[j * nb..(j + 1) * nb])?;
            }
            per.push(dense.iter().enumerate().filter(|(_, v)| **v != 0).map(|(i, v)| (off + i, *v)).collect());
        }
        jump_keys.push(per);
        off += b.f.d * nb;
    }

    let circle = Circle::new(session, bases.clone())?;
    let mut pts: Vec<Pt> = Vec::with_capacity(unique as usize);
    for (base, rs) in ranges.iter().enumerate() {
        for &(lo, hi) in rs {
            for k in lo..=hi {
                pts.push(circle.point(base as u32, k)?);
            }
        }
    }
    drop(ranges);
    circle.sort(&mut pts)?;

    let nbases = bases.len();
    let zero_fx = Fixed::exact_int(0);
    let mut atoms: BTreeMap<Vec<i128>, MassAcc> = BTreeMap::new();
    let mut key = key0.clone();
    let mut start: Option<Pt> = None;
    let mut i = 0;
    let add_seg = |atoms: &mut BTreeMap<Vec<i128>, MassAcc>, key: &Vec<i128>, from: Option<&Pt>, to: Option<&Pt>| {
        let e = atoms.entry(key.clone()).or_insert_with(|| MassAcc { cnt: vec![0; nbases], a: 0, c: 0 });
        match to {
            Some(p) => {
                e.cnt[p.base as usize] += 1;
                e.a += p.k as i128;
                e.c -= p.floor as i128;
            }
            None => e.c += 1,
        }
        if let Some(p) = from {
            e.cnt[p.base as usize] -= 1;
            e.a -= p.k as i128;
            e.c += p.floor as i128;
        }
    };
    let apply = |key: &mut Vec<i128>, b: u32, j: u32| -> Result<()> {
        for &(idx, v) in &jump_keys[b as usize][j as usize] {
            key[idx] = key[idx].checked_add(v).ok_or(Error::Overflow("atom key"))?;
        }
        Ok(())
    };
    let mut at_zero_sum = vec![0i128; width];
    while i < pts.len() {
        let mut g = i + 1;
        while g < pts.len() && circle.coincide(&pts[i], &pts[g])? {
            g += 1;
        }
        let p = pts[i];
        let is_zero = match p.pos.certain_cmp(&zero_fx) {
            Some(o) => o == Ordering::Equal,
            None => session.sign(&circle.exact(&p))? == Ordering::Equal,
        };
        if !is_zero {
            add_seg(&mut atoms, &key, start.as_ref(), Some(&p));
        }
        let target = if is_zero { &mut at_zero_sum } else { &mut key };
        for t in &pts[i..g] {
            for &(b, j, lo, hi) in &users[t.base as usize] {
                if lo <= t.k && t.k <= hi {
                    apply(target, b, j)?;
                }
            }
        }
        if !is_zero {
            start = Some(p);
        }
        i = g;
    }
    add_seg(&mut atoms, &key, start.as_ref(), None);
    for ((k, z), k0) in key.iter().zip(&at_zero_sum).zip(&key0) {
        if k + z != *k0 {
            return Err(Error::AuditFailure { audit: "pushforward_walk", n: 0, k: 0, detail: "jumps do not close up around the circle".into() });
        }
    }
    atoms.retain(|_, m| !(m.a == 0 && m.c == 0 && m.cnt.iter().all(|&c| c == 0)));
    Ok(Partition { dims, basis, scale, bases, atoms, points: unique as usize })
}

fn sort_atoms(session: &Session, atoms: &mut [Atom]) -> Result<()> {
    let mut err = None;
    atoms.sort_by(|a, b| {
        for (x, y) in a.value.iter().zip(&b.value) {
            if x == y {
                continue;
            }
            match session.compare(x, y) {
                Ok(Ordering::Equal) => continue,
                Ok(o) => return o,
                Err(e) => {
                    err.get_or_insert(e);
                    return x.cmp(y);
                }
            }
        }
        Ordering::Equal
    });
    err.map_or(Ok(()), Err)
}

pub(crate) fn atoms_from(session: &Session, part: &Partition, entries: Vec<(Vec<i128>, MassAcc)>, block: usize) -> Result<Vec<Atom>> {
    let mut atoms: Vec<Atom> = entries
        .into_iter()
        .map(|(k, m)| Atom { value: part.value_of_slice(&k, block), mass: part.mass(&m) })
        .collect();
    sort_atoms(session, &mut atoms)?;
    Ok(atoms)
}

/// Exact law of `Φ_n` by walking the `D·n` discontinuities of `Φ_n`.
pub fn pushforward(session: &Session, phi: &StepCocycle, n: i64) -> Result<PushforwardDistribution> {
    if n < 1 {
        return Err(Error::Precondition("pushforward needs n >= 1".into()));
    }
    let part = partition(session, &[Block { f: phi, n, shift: 0 }])?;
    let entries: Vec<_> = part.atoms.iter().map(|(k, m)| (k.clone(), m.clone())).collect();
    let atoms = atoms_from(session, &part, entries, 0)?;
    let close_atoms = close_pair(session, &atoms);
    Ok(PushforwardDistribution { n, atoms, pieces: part.points, close_atoms })
}

fn close_pair(session: &Session, atoms: &[Atom]) -> bool {
    if atoms.len() > 4096 {
        return false;
    }
    let vals: Vec<Vec<f64>> = atoms.iter().map(|a| a.value.iter().map(|v| session.to_f64(v)).collect()).collect();
    for i in 0..vals.len() {
        for j in i + 1..vals.len() {
            let dist = vals[i].iter().zip(&vals[j]).map(|(a, b)| libm::fabs(a - b)).fold(0.0, f64::max);
            if dist < 1e-9 {
                return true;
            }
        }
    }
    false
}

#[derive(Clone, Debug)]
pub struct DkRow {
    pub n: usize,
    pub q: i64,
    /// `max_atoms |φ^j_q|` per coordinate.
    pub max_abs: Vec<LinearForm>,
}

#[derive(Clone, Debug)]
pub struct DkReport {
    pub variation: Vec<LinearForm>,
    pub rows: Vec<DkRow>,
}

/// Exact check of `|φ^j_{q_n}| ≤ V(φ^j)` over all pushforward atoms.
pub fn denjoy_koksma_audit(session: &Session, phi: &StepCocycle, n_list: &[usize]) -> Result<DkReport> {
    let max_n = n_list.iter().copied().max().unwrap_or(0);
    let cs = convergents(session.alpha(), max_n);
    let mut rows = Vec::new();
    for &n in n_list {
        let c = cs.get(n).ok_or_else(|| Error::Precondition(format!("alpha has no convergent {n}")))?;
        let q = c.q.to_i64().ok_or(Error::Overflow("q_n"))?;
        let pf = pushforward(session, phi, q)?;
        let mut max_abs = zero_vec(phi.d);
        for a in &pf.atoms {
            for j in 0..phi.d {
                let v = session.abs(&a.value[j])?;
                if session.compare(&v, &max_abs[j])? == Ordering::Greater {
                    max_abs[j] = v;
                }
            }
        }
        for j in 0..phi.d {
            if session.compare(&max_abs[j], &phi.variation[j])? == Ordering::Greater {
                return Err(Error::AuditFailure {
                    audit: "denjoy_koksma",
                    n: n as i64,
                    k: j as i64,
                    detail: format!("|phi_q| reaches {} > V = {}", max_abs[j], phi.variation[j]),
                });
            }
        }
        rows.push(DkRow { n, q, max_abs });
    }
    Ok(DkReport { variation: phi.variation.clone(), rows })
}

/// Rationality data of one coordinate: `M·φ^j = Σ c_i 1_{I_i} − β_j` with
/// integer `c_i ≥ 0`, `min c_i = 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalityRow {
    pub rational: bool,
    /// Smallest positive integer making the differences of values integral.
    pub multiplier: Option<BigInt>,
    pub coefficients: Option<Vec<BigInt>>,
    /// `β_j` for the multiplier above.
    pub beta: Option<LinearForm>,
    /// Coset representative of `β(φ^j)` modulo `ℚ`.
    pub coset: Option<LinearForm>,
}

#[derive(Clone, Debug)]
pub struct RationalityAnalysis {
    pub rows: Vec<RationalityRow>,
    pub all_rational: bool,
    /// Common multiplier for the whole cocycle.
    pub multiplier: Option<BigInt>,
    /// `β_j` of `multiplier·Φ`.
    pub betas: Option<Vec<LinearForm>>,
}

/// Decides whether every coordinate takes values in a coset of `ℚ`.
pub fn rationality_analysis(session: &Session, phi: &StepCocycle) -> Result<RationalityAnalysis> {
    let mut rows = Vec::with_capacity(phi.d);
    for ivs in &phi.coords {
        let v0 = session.expand(&ivs[0].t);
        let mut diffs = Vec::with_capacity(ivs.len());
        let mut ok = true;
        for iv in ivs {
            match (&session.expand(&iv.t) - &v0).as_rational() {
                Some(r) => diffs.push(r),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            rows.push(RationalityRow { rational: false, multiplier: None, coefficients: None, beta: None, coset: None });
            continue;
        }
        let m = diffs.iter().fold(BigInt::one(), |acc, r| acc.lcm(r.denom()));
        let min = diffs.iter().min().cloned().unwrap_or_else(BigRational::zero);
        let mr = BigRational::from_integer(m.clone());
        let coefficients: Vec<BigInt> = diffs.iter().map(|r| ((r - &min) * &mr).to_integer()).collect();
        let beta = (&ivs[0].t.add_rational(&min)).scale(&mr).scale_int(-1);
        let coset = beta.irrational_part();
        rows.push(RationalityRow { rational: true, multiplier: Some(m), coefficients: Some(coefficients), beta: Some(beta), coset: Some(coset) });
    }
    let all_rational = rows.iter().all(|r| r.rational);
    let (multiplier, betas) = if all_rational {
        let m = rows.iter().fold(BigInt::one(), |acc, r| acc.lcm(r.multiplier.as_ref().unwrap()));
        let betas = rows
            .iter()
            .map(|r| {
                let k = &m / r.multiplier.as_ref().unwrap();
                r.beta.as_ref().unwrap().scale_big(&k)
            })
            .collect();
        (Some(m), Some(betas))
    } else {
        (None, None)
    };
    Ok(RationalityAnalysis { rows, all_rational, multiplier, betas })
}

/// `β(Σ a_jφ^j) = Σ a_jβ(φ^j)` modulo `ℚ`.
pub fn combination_coset(rows: &[RationalityRow], a: &[BigRational]) -> Option<LinearForm> {
    let mut out = LinearForm::zero();
    for (r, c) in rows.iter().zip(a) {
        let beta = r.beta.as_ref()?;
        let m = BigRational::from_integer(r.multiplier.clone()?);
        out += &beta.scale(&(c / m));
    }
    Some(out.irrational_part())
}

/// `Ψ_{d+1}(x) = (ψ(x), ψ(x+β_1), …, ψ(x+β_d))` with `ψ(x) = {x} − 1/2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PiecewiseAffineCocycle {
    pub betas: Vec<LinearForm>,
}

impl PiecewiseAffineCocycle {
    /// Number of coordinates `d + 1`.
    pub fn dim(&self) -> usize {
        self.betas.len() + 1
    }

    /// Shift of coordinate `j`, `β_0 = 0`.
    pub fn shift(&self, j: usize) -> LinearForm {
        if j == 0 {
            LinearForm::zero()
        } else {
            self.betas[j - 1].clone()
        }
    }

    /// Slope of every coordinate.
    pub fn slope(&self) -> i64 {
        1
    }

    /// Jump of every coordinate at its breakpoint.
    pub fn jump(&self) -> i64 {
        -1
    }

    /// Breakpoint `{1 − β_j}` of each coordinate.
    pub fn breakpoints(&self, session: &Session) -> Result<Vec<LinearForm>> {
        (0..self.dim()).map(|j| session.frac(&(LinearForm::int(1) - self.shift(j)))).collect()
    }

    pub fn eval(&self, session: &Session, x: &LinearForm) -> Result<Vec<LinearForm>> {
        (0..self.dim())
            .map(|j| Ok(session.frac(&(x + &self.shift(j)))?.add_rational(&BigRational::new(BigInt::from(-1), BigInt::from(2)))))
            .collect()
    }
}

pub fn affine_psi(session: &Session, betas: &[LinearForm]) -> Result<PiecewiseAffineCocycle> {
    for b in betas {
        if session.sign(b)? == Ordering::Less || session.compare(b, &LinearForm::int(1))? != Ordering::Less {
            return Err(Error::Precondition(format!("beta {b} outside [0, 1)")));
        }
    }
    Ok(PiecewiseAffineCocycle { betas: betas.to_vec() })
}

#[derive(Clone, Debug)]
pub struct AffineEval {
    pub q: BigInt,
    /// `ψ_q(x + β_j)` by direct summation.
    pub values: Vec<LinearForm>,
    /// Integer `M(x + β_j)` recovered from `ψ_q(y) = qy + q(q−1)/2·α − q/2 + M(y)`.
    pub m: Vec<BigInt>,
}

/// Direct evaluation of `Ψ_{q_n}(x)` and the integer part `M` of the closed form.
pub fn affine_birkhoff_eval(session: &Session, psi: &PiecewiseAffineCocycle, n: usize, x: &LinearForm) -> Result<AffineEval> {
    let c = convergents(session.alpha(), n)
        .pop()
        .filter(|c| c.n == n)
        .ok_or_else(|| Error::Precondition(format!("alpha has no convergent {n}")))?;
    let q = c.q.to_i64().filter(|&q| q as u64 <= crate::orbits::ORBIT_BUDGET).ok_or(Error::Overflow("q_n"))?;
    let bases: Vec<LinearForm> = (0..psi.dim()).map(|j| x + &psi.shift(j)).collect();
    let circle = Circle::new(session, bases.clone())?;
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let mut values = Vec::with_capacity(psi.dim());
    let mut ms = Vec::with_capacity(psi.dim());
    for (j, y) in bases.iter().enumerate() {
        let mut floors: i128 = 0;
        for k in 0..q {
            floors += circle.point(j as u32, k)?.floor as i128;
        }
        // Σ_{k<q} ({y + kα} − 1/2)
        let direct = &(&(&y.scale_int(q) + &LinearForm::alpha().scale_big(&(BigInt::from(q) * BigInt::from(q - 1) / 2)))
            - &LinearForm::big_int(BigInt::from(floors)))
            - &LinearForm::constant(&half * BigRational::from_integer(BigInt::from(q)));
        let closed = &(&y.scale_int(q) + &LinearForm::alpha().scale_big(&(BigInt::from(q) * BigInt::from(q - 1) / 2)))
            - &LinearForm::constant(&half * BigRational::from_integer(BigInt::from(q)));
        let m = (&direct - &closed)
            .as_rational()
            .filter(|r| r.is_integer())
            .map(|r| r.to_integer())
            .ok_or_else(|| Error::AuditFailure { audit: "affine_closed_form", n: n as i64, k: j as i64, detail: "M(x) is not an integer".into() })?;
        if m != -BigInt::from(floors) {
            return Err(Error::AuditFailure { audit: "affine_closed_form", n: n as i64, k: j as i64, detail: "M(x) disagrees with the floor count".into() });
        }
        values.push(direct);
        ms.push(m);
    }
    Ok(AffineEval { q: c.q, values, m: ms })
}

#[derive(Clone, Debug)]
pub struct DiagSample {
    pub x: BigRational,
    /// `F(Ψ_q(x))_j − qβ_j`, an integer vector when the check passes.
    pub residual: Vec<BigInt>,
}

#[derive(Clone, Debug)]
pub struct DiagLineReport {
    pub n: usize,
    pub q: BigInt,
    pub samples: Vec<DiagSample>,
}

fn next_prime(mut p: u64) -> u64 {
    let is_prime = |n: u64| n >= 2 && (2..).take_while(|d: &u64| d * d <= n).all(|d| n % d != 0);
    while !is_prime(p) {
        p += 1;
    }
    p
}

/// Checks that `F(Ψ_{q_n}(x)) = (ψ_q(x+β_j) − ψ_q(x))_j` lies in `(q_nβ_j)_j + ℤ^d`
/// at seeded rational sample points whose prime denominator exceeds `q_n`.
pub fn diagonal_line_check(session: &Session, betas: &[LinearForm], n: usize, samples: usize, seed: u64) -> Result<DiagLineReport> {
    let psi = affine_psi(session, betas)?;
    let q = convergents(session.alpha(), n).pop().map(|c| c.q).unwrap_or_else(BigInt::one);
    let den = next_prime(q.to_u64().unwrap_or(u64::MAX / 4).max(1_000_000) + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(samples);
    for _ in 0..samples {
        let a = 1 + rng.next_u64() % (den - 1);
        let x = BigRational::new(BigInt::from(a), BigInt::from(den));
        let ev = affine_birkhoff_eval(session, &psi, n, &LinearForm::constant(x.clone()))?;
        let mut residual = Vec::with_capacity(betas.len());
        for (j, b) in betas.iter().enumerate() {
            let f = &ev.values[j + 1] - &ev.values[0];
            let r = session.expand(&(&f - &b.scale_big(&ev.q)));
            match r.as_rational().filter(|r| r.is_integer()) {
                Some(v) => residual.push(v.to_integer()),
                None => {
                    return Err(Error::AuditFailure {
                        audit: "diagonal_line",
                        n: n as i64,
                        k: j as i64,
                        detail: format!("x = {x}: F - q*beta = {r} is not an integer"),
                    })
                }
            }
        }
        out.push(DiagSample { x, residual });
    }
    Ok(DiagLineReport { n, q, samples: out })
}

/// `Φ_d = (1_{[0, 1−β_j)} − 1 + β_j)_{j ≤ d}`.
pub fn diagonal_quotient(session: &Session, betas: &[LinearForm]) -> Result<StepCocycle> {
    let d = betas.len();
    if d == 0 {
        return Err(Error::Precondition("diagonal quotient needs d >= 1".into()));
    }
    let mut terms = Vec::with_capacity(d);
    for (j, b) in betas.iter().enumerate() {
        if session.sign(b)? != Ordering::Greater || session.compare(b, &LinearForm::int(1))? != Ordering::Less {
            return Err(Error::Precondition(format!("beta {b} outside (0, 1)")));
        }
        let mut c = zero_vec(d);
        c[j] = LinearForm::int(1);
        terms.push((LinearForm::zero(), LinearForm::int(1) - b.clone(), c));
    }
    StepCocycle::from_indicators(session, d, &terms)
}

/// Describes a cocycle for reports.
pub fn describe(phi: &StepCocycle) -> String {
    let mut s = String::new();
    for p in &phi.pieces {
        let vals: Vec<String> = p.value.iter().map(|v| format!("{v}")).collect();
        s.push_str(&format!("[{}, {}) -> ({})\n", p.lo, p.hi, vals.join(", ")));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::PartialQuotients;

    fn golden() -> Session {
        Session::new(PartialQuotients::golden())
    }

    fn half_indicator(s: &Session) -> StepCocycle {
        StepCocycle::indicator(s, &LinearForm::ratio(1, 2)).unwrap()
    }

    #[test]
    fn canonical_half_indicator() {
        let s = golden();
        let pieces = vec![
            Piece::new(LinearForm::zero(), LinearForm::ratio(1, 2), vec![LinearForm::int(1)]),
            Piece::new(LinearForm::ratio(1, 2), LinearForm::int(1), vec![LinearForm::zero()]),
        ];
        let phi = make_step(&s, 1, pieces).unwrap();
        assert_eq!(phi.mean_removed(), &[LinearForm::ratio(1, 2)]);
        assert_eq!(phi.variation(), &[LinearForm::int(2)]);
        assert_eq!(phi.discontinuity_count(), 2);
        assert_eq!(phi.jumps()[0].sigma, vec![LinearForm::int(1)]);
        assert_eq!(phi.jumps()[1].at, LinearForm::ratio(1, 2));
        assert_eq!(phi.jumps()[1].sigma, vec![LinearForm::int(-1)]);
    }

    #[test]
    fn equal_pieces_merge() {
        let s = golden();
        let pieces = vec![
            Piece::new(LinearForm::zero(), LinearForm::ratio(1, 3), vec![LinearForm::int(2)]),
            Piece::new(LinearForm::ratio(1, 3), LinearForm::int(1), vec![LinearForm::int(2)]),
        ];
        let phi = make_step(&s, 1, pieces).unwrap();
        assert_eq!(phi.pieces().len(), 1);
        assert_eq!(phi.discontinuity_count(), 0);
    }

    #[test]
    fn empty_and_gappy_partitions() {
        let s = golden();
        assert_eq!(make_step(&s, 1, Vec::new()).unwrap_err(), Error::EmptyPartition);
        let gappy = vec![Piece::new(LinearForm::zero(), LinearForm::ratio(1, 3), vec![LinearForm::int(1)])];
        assert!(matches!(make_step(&s, 1, gappy), Err(Error::InvalidPartition(_))));
    }

    #[test]
    fn phi_d_jumps() {
        let mut s = golden();
        let b = s.independent("b", crate::RealSource::sqrt2_minus_1()).unwrap();
        let one_minus = LinearForm::int(1) - b.clone();
        let phi = diagonal_quotient(&s, &[one_minus.clone(), LinearForm::ratio(1, 3)]).unwrap();
        let j0 = &phi.jumps()[0];
        assert_eq!(j0.at, LinearForm::zero());
        assert_eq!(j0.sigma, vec![LinearForm::int(1), LinearForm::int(1)]);
        let jb = phi.jumps().iter().find(|j| j.at == b).unwrap();
        assert_eq!(jb.sigma, vec![LinearForm::int(-1), LinearForm::zero()]);
    }

    #[test]
    fn diagonal_quotient_examples() {
        let s = golden();
        let phi = diagonal_quotient(&s, &[LinearForm::ratio(1, 2)]).unwrap();
        assert_eq!(phi.pieces(), half_indicator(&s).pieces());
        let phi = diagonal_quotient(&s, &[LinearForm::ratio(1, 3), LinearForm::ratio(2, 3)]).unwrap();
        assert_eq!(phi.mean_removed(), &[LinearForm::ratio(2, 3), LinearForm::ratio(1, 3)]);
    }

    #[test]
    fn birkhoff_golden_q4() {
        let s = golden();
        let phi = half_indicator(&s);
        assert_eq!(birkhoff_eval(&s, &phi, 5, &LinearForm::zero()).unwrap(), vec![LinearForm::ratio(1, 2)]);
        assert_eq!(birkhoff_eval(&s, &phi, 0, &LinearForm::zero()).unwrap(), vec![LinearForm::zero()]);
    }

    #[test]
    fn birkhoff_negative_times() {
        let s = golden();
        let phi = StepCocycle::indicator(&s, &LinearForm::ratio(2, 7)).unwrap();
        let x = LinearForm::ratio(1, 11);
        for (n, k) in [(3i64, -5i64), (-4, 2), (-3, -3), (7, 0)] {
            let lhs = birkhoff_eval(&s, &phi, n + k, &x).unwrap();
            let shifted = &x + &LinearForm::alpha().scale_int(n);
            let rhs = vec_add(&birkhoff_eval(&s, &phi, n, &x).unwrap(), &birkhoff_eval(&s, &phi, k, &shifted).unwrap());
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn pushforward_of_indicator_n1() {
        let mut s = golden();
        let b = s.independent("b", crate::RealSource::sqrt2_minus_1()).unwrap();
        let phi = StepCocycle::indicator(&s, &b).unwrap();
        let pf = pushforward(&s, &phi, 1).unwrap();
        assert_eq!(pf.atoms.len(), 2);
        assert_eq!(pf.atoms[0], Atom { value: vec![-b.clone()], mass: LinearForm::int(1) - b.clone() });
        assert_eq!(pf.atoms[1], Atom { value: vec![LinearForm::int(1) - b.clone()], mass: b });
        assert_eq!(pf.total_mass(), LinearForm::int(1));
    }

    #[test]
    fn pushforward_two_atoms_at_odd_q() {
        let s = golden();
        let phi = half_indicator(&s);
        for q in [1i64, 3, 5, 13, 21, 55, 89] {
            let pf = pushforward(&s, &phi, q).unwrap();
            let vals: Vec<_> = pf.atoms.iter().map(|a| a.value[0].clone()).collect();
            assert_eq!(vals, vec![LinearForm::ratio(-1, 2), LinearForm::ratio(1, 2)], "q = {q}");
            assert_eq!(pf.total_mass(), LinearForm::int(1));
        }
    }

    #[test]
    fn dk_half_indicator() {
        let s = golden();
        let phi = half_indicator(&s);
        let r = denjoy_koksma_audit(&s, &phi, &[0, 1, 2, 3, 4, 5, 6]).unwrap();
        assert_eq!(r.rows.len(), 7);
    }

    #[test]
    fn normalize_alpha_pair() {
        let s = golden();
        let frac_alpha = LinearForm::alpha();
        let phi = StepCocycle::indicator(&s, &frac_alpha).unwrap();
        let (out, log) = normalize_discontinuities(&s, &phi).unwrap();
        assert_eq!(log.len(), 1);
        assert_eq!(out.discontinuity_count(), 0);
        let x = LinearForm::ratio(3, 10);
        let t = &log[0];
        let g = t.transfer_fn(&s, &x).unwrap();
        let gt = t.transfer_fn(&s, &(&x + &LinearForm::alpha())).unwrap();
        assert_eq!(vec_sub(&g, &gt), t.eval(&s, &x).unwrap());
    }

    #[test]
    fn normalize_leaves_unrelated() {
        let s = golden();
        let phi = half_indicator(&s);
        let (out, log) = normalize_discontinuities(&s, &phi).unwrap();
        assert!(log.is_empty());
        assert_eq!(out.pieces(), phi.pieces());
    }

    #[test]
    fn rationality_examples() {
        let mut s = golden();
        let b = s.independent("b", crate::RealSource::sqrt2_minus_1()).unwrap();
        let phi = StepCocycle::indicator(&s, &b).unwrap();
        let r = rationality_analysis(&s, &phi).unwrap();
        assert!(r.all_rational);
        assert_eq!(r.rows[0].multiplier, Some(BigInt::one()));
        assert_eq!(r.rows[0].beta, Some(b.clone()));

        let theta = LinearForm::alpha();
        let phi = StepCocycle::from_indicators(&s, 1, &[(LinearForm::zero(), LinearForm::ratio(1, 3), vec![theta])]).unwrap();
        assert!(!rationality_analysis(&s, &phi).unwrap().all_rational);
    }

    #[test]
    fn affine_closed_form() {
        let s = golden();
        let psi = affine_psi(&s, &[]).unwrap();
        let e = affine_birkhoff_eval(&s, &psi, 2, &LinearForm::ratio(1, 10)).unwrap();
        assert_eq!(e.q, BigInt::from(2));
        let psi = affine_psi(&s, &[LinearForm::ratio(1, 3), LinearForm::ratio(2, 3)]).unwrap();
        assert_eq!(psi.breakpoints(&s).unwrap(), vec![LinearForm::zero(), LinearForm::ratio(2, 3), LinearForm::ratio(1, 3)]);
    }

    #[test]
    fn diagonal_line_thirds() {
        let s = golden();
        let r = diagonal_line_check(&s, &[LinearForm::ratio(1, 3)], 4, 20, 7).unwrap();
        assert_eq!(r.q, BigInt::from(5));
        assert_eq!(r.samples.len(), 20);
    }
}
