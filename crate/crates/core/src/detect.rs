//! Essential-value detection: limit sets of `‖q_nβ‖`, quasi-period scans,
//! witness searches, the wsd gap test, clusters of discontinuities, the
//! `‖q_nβ‖ → 0` regime, rational reduction, and the aggregated report.
//!
//! Everything here produces evidence. Only the exact identities (the mesu
//! bound, basis-change checks) are asserted.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::arithmetic::{convergents, rat_to_f64, Convergent, ConvergentIter, Interval, LinearForm, Session};
use crate::circle::{Circle, Pt};
use crate::cocycles::{
    atoms_from, describe, diagonal_quotient, make_step, normalize_discontinuities, partition, partition_with_budget, pushforward,
    rationality_analysis, Atom, Block, Partition, Piece, StepCocycle, PUSHFORWARD_BUDGET,
};
use crate::orbits::{separation_table, SeparationTable};
use crate::{Error, Result};

/// Grid cell used to group `({q_nβ_j})_j` and limit values.
const CELL: f64 = 1e-2;
/// Denominators examined per reduction step.
const REDUCTION_TIMES: usize = 3;
/// Essential-value candidates tried per reduction step.
const MAX_THETA: usize = 4;
const REDUCTION_BUDGET: u64 = 1 << 20;
const QN00_BUDGET: u64 = 1 << 25;

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Desk-scale thresholds, all overridable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Thresholds {
    /// Minimal atom mass.
    pub delta: BigRational,
    /// `‖q_nβ‖` above this counts as nonzero.
    pub tau: BigRational,
    /// Cluster radius at scale `1/q`.
    pub eps_cluster: BigRational,
    /// wsd constant `c`.
    pub c_threshold: BigRational,
    /// Convergent depth `N`.
    pub depth: usize,
    /// Witness search range.
    pub n_max: i64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            delta: rat(1, 20),
            tau: rat(1, 1000),
            eps_cluster: rat(1, 100),
            c_threshold: rat(1, 100),
            depth: 30,
            n_max: 10_000,
        }
    }
}

fn frac_f64(session: &Session, form: &LinearForm) -> f64 {
    let iv = session.enclose(form, 64);
    let c = iv.center();
    rat_to_f64(&(&c - c.floor()))
}

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| libm::fabs(x - y)).fold(0.0, f64::max)
}

fn is_zero_vec(session: &Session, v: &[LinearForm]) -> bool {
    v.iter().all(|x| session.expand(x).is_zero())
}

// ---------------------------------------------------------------------------
// Limit sets

#[derive(Clone, Debug, PartialEq)]
pub enum LimitSet {
    NonzeroEvidence(Vec<f64>),
    ZeroEvidence,
    Inconclusive,
}

#[derive(Clone, Debug)]
pub struct LimitRow {
    pub n: usize,
    pub q: BigInt,
    /// Enclosure of `‖q_nβ‖`.
    pub value: Interval,
}

#[derive(Clone, Debug)]
pub struct LimitSetReport {
    pub verdict: LimitSet,
    pub rows: Vec<LimitRow>,
}

/// Clusters `‖q_nβ‖` over `N − window < n ≤ N`.
///
/// A cluster (values within one grid cell of its smallest member) that lies
/// above `τ` and has members in both halves of the window is reported as a
/// limit point. When every value in the second half is below `τ` the limit
/// set looks like `{0}`.
pub fn limit_set_diagnostic(session: &Session, beta: &LinearForm, big_n: usize, window: usize, tau: &BigRational) -> Result<LimitSetReport> {
    if window == 0 || big_n < window {
        return Err(Error::Precondition(format!("window {window} must lie in 1..=N (N = {big_n})")));
    }
    let bits = session.cap_bits();
    let rows: Vec<LimitRow> = convergents(session.alpha(), big_n)
        .into_iter()
        .filter(|c| c.n + window > big_n)
        .map(|c| {
            let value = session.enclose(&beta.scale_big(&c.q), bits).dist_to_z();
            LimitRow { n: c.n, q: c.q, value }
        })
        .collect();
    let verdict = classify_limit(&rows, rat_to_f64(tau));
    Ok(LimitSetReport { verdict, rows })
}

fn classify_limit(rows: &[LimitRow], tau: f64) -> LimitSet {
    if rows.is_empty() {
        return LimitSet::Inconclusive;
    }
    let half = rows.len() / 2;
    let vals: Vec<f64> = rows.iter().map(|r| r.value.mid_f64()).collect();
    if vals[half..].iter().all(|v| *v < tau) {
        return LimitSet::ZeroEvidence;
    }
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|a, b| vals[*a].total_cmp(&vals[*b]));
    let mut points = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let start = vals[order[i]];
        let mut j = i;
        while j < order.len() && vals[order[j]] - start <= CELL {
            j += 1;
        }
        let members = &order[i..j];
        let early = members.iter().any(|&m| m < half);
        let late = members.iter().any(|&m| m >= half);
        if start >= tau && (rows.len() == 1 || (early && late)) {
            points.push(members.iter().map(|&m| vals[m]).sum::<f64>() / members.len() as f64);
        }
        i = j;
    }
    if points.is_empty() {
        LimitSet::Inconclusive
    } else {
        LimitSet::NonzeroEvidence(points)
    }
}

// ---------------------------------------------------------------------------
// Quasi-period scan

#[derive(Clone, Debug)]
pub struct TimeAtoms {
    pub time: i64,
    pub atoms: Vec<Atom>,
}

/// An atom value `g` seen with mass `≥ δ` at every time of the tail.
#[derive(Clone, Debug)]
pub struct Persistent {
    /// Exact value at the last time.
    pub value: Vec<LinearForm>,
    pub approx: Vec<f64>,
    /// Distance achieved at each tail time.
    pub eps: Vec<f64>,
    /// Mass of the matching atom at each tail time.
    pub masses: Vec<LinearForm>,
}

#[derive(Clone, Debug)]
pub struct QuasiPeriodReport {
    pub times: Vec<i64>,
    /// Index into `times` where the tail starts.
    pub tail_start: usize,
    pub per_time: Vec<TimeAtoms>,
    pub delta: BigRational,
    pub persistent: Vec<Persistent>,
    /// All differences of persistent atoms, `0` included.
    pub candidates: Vec<Vec<LinearForm>>,
    /// Nonzero differences that are not integer multiples of shorter ones.
    pub generators: Vec<Vec<LinearForm>>,
}

impl QuasiPeriodReport {
    /// Only the zero difference was found.
    pub fn only_zero(&self) -> bool {
        !self.persistent.is_empty() && self.generators.is_empty()
    }
}

/// Exact pushforwards of `Φ_t` for each time, then the atoms of mass `≥ δ`
/// that persist (within `ε_t`) over the second half of `times`.
///
/// `eps` holds one radius for all times or one per time.
pub fn quasi_period_scan(session: &Session, phi: &StepCocycle, times: &[i64], delta: &BigRational, eps: &[f64]) -> Result<QuasiPeriodReport> {
    if times.is_empty() || times.iter().any(|&t| t < 1) {
        return Err(Error::Precondition("times must be a nonempty list of positive integers".into()));
    }
    if !delta.is_positive() {
        return Err(Error::Precondition("delta must be positive".into()));
    }
    if !(eps.len() == 1 || eps.len() == times.len()) || eps.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::Precondition("eps needs one positive radius or one per time".into()));
    }
    let eps_at = |i: usize| if eps.len() == 1 { eps[0] } else { eps[i] };
    let dform = LinearForm::constant(delta.clone());
    let mut per_time = Vec::with_capacity(times.len());
    let mut heavy: Vec<Vec<(Vec<f64>, usize, f64)>> = Vec::with_capacity(times.len());
    for &t in times {
        let pf = pushforward(session, phi, t)?;
        let mut h = Vec::new();
        for (i, a) in pf.atoms.iter().enumerate() {
            if session.compare(&a.mass, &dform)? != Ordering::Less {
                let v = a.value.iter().map(|x| session.to_f64(x)).collect();
                h.push((v, i, session.to_f64(&a.mass)));
            }
        }
        heavy.push(h);
        per_time.push(TimeAtoms { time: t, atoms: pf.atoms });
    }
    let tail_start = times.len() / 2;
    let last = times.len() - 1;
    let mut order: Vec<usize> = (0..heavy[last].len()).collect();
    order.sort_by(|a, b| heavy[last][*b].2.total_cmp(&heavy[last][*a].2));
    let mut persistent: Vec<Persistent> = Vec::new();
    for h in order {
        let (g, idx, _) = &heavy[last][h];
        if persistent.iter().any(|p| sup_dist(&p.approx, g) < eps_at(last)) {
            continue;
        }
        let mut hits = Vec::new();
        let mut masses = Vec::new();
        for ti in tail_start..times.len() {
            let best = heavy[ti]
                .iter()
                .map(|(v, i, _)| (sup_dist(v, g), *i))
                .min_by(|a, b| a.0.total_cmp(&b.0));
            match best {
                Some((dist, i)) if dist < eps_at(ti) => {
                    hits.push(dist);
                    masses.push(per_time[ti].atoms[i].mass.clone());
                }
                _ => break,
            }
        }
        if hits.len() == times.len() - tail_start {
            persistent.push(Persistent { value: per_time[last].atoms[*idx].value.clone(), approx: g.clone(), eps: hits, masses });
        }
    }
    let mut cands: Vec<(Vec<LinearForm>, Vec<f64>)> = Vec::new();
    for a in &persistent {
        for b in &persistent {
            let v: Vec<LinearForm> = a.value.iter().zip(&b.value).map(|(x, y)| x - y).collect();
            let f: Vec<f64> = v.iter().map(|x| session.to_f64(x)).collect();
            if !cands.iter().any(|(_, g)| sup_dist(g, &f) < 1e-9) {
                cands.push((v, f));
            }
        }
    }
    let mut gens: Vec<&(Vec<LinearForm>, Vec<f64>)> = cands
        .iter()
        .filter(|(_, f)| f.iter().find(|x| libm::fabs(**x) > 1e-9).is_some_and(|x| *x > 0.0))
        .collect();
    gens.sort_by(|a, b| {
        let na = a.1.iter().map(|x| libm::fabs(*x)).fold(0.0, f64::max);
        let nb = b.1.iter().map(|x| libm::fabs(*x)).fold(0.0, f64::max);
        na.total_cmp(&nb)
    });
    let mut generators: Vec<(Vec<LinearForm>, Vec<f64>)> = Vec::new();
    for (v, f) in gens {
        let multiple = generators.iter().any(|(_, w)| {
            (2..=64).any(|k| sup_dist(f, &w.iter().map(|x| x * k as f64).collect::<Vec<_>>()) < 1e-9)
        });
        if !multiple {
            generators.push((v.clone(), f.clone()));
        }
    }
    Ok(QuasiPeriodReport {
        times: times.to_vec(),
        tail_start,
        per_time,
        delta: delta.clone(),
        persistent,
        candidates: cands.into_iter().map(|(v, _)| v).collect(),
        generators: generators.into_iter().map(|(v, _)| v).collect(),
    })
}

// ---------------------------------------------------------------------------
// Witness search

#[derive(Clone, Debug)]
pub struct WitnessHit {
    pub n: i64,
    /// `μ(A ∩ T^{−N}A ∩ [Φ_N ∈ B(g, ε)])`.
    pub measure: LinearForm,
}

#[derive(Clone, Debug)]
pub struct WitnessResult {
    pub g: Vec<LinearForm>,
    pub eps: BigRational,
    pub depth: u32,
    /// One entry per dyadic interval `[i/2^depth, (i+1)/2^depth)`.
    pub per_a: Vec<Option<WitnessHit>>,
    /// Times examined, in search order.
    pub searched: Vec<i64>,
}

impl WitnessResult {
    pub fn all_witnessed(&self) -> bool {
        self.per_a.iter().all(Option::is_some)
    }

    pub fn failures(&self) -> Vec<usize> {
        self.per_a.iter().enumerate().filter(|(_, h)| h.is_none()).map(|(i, _)| i).collect()
    }
}

fn dyadic_index(session: &Session, depth: u32) -> Result<StepCocycle> {
    let cells = 1i64 << depth;
    let pieces = (0..cells)
        .map(|i| Piece::new(LinearForm::ratio(i, cells), LinearForm::ratio(i + 1, cells), vec![LinearForm::int(i)]))
        .collect();
    make_step(session, 1, pieces)
}

/// Search times: `q_n`, `q_m + q_n`, `ℓq_n` (`ℓ ≤ 8`), `1…64`, with both
/// signs, ordered by `|N|`.
pub fn witness_times(session: &Session, n_max: i64) -> Vec<i64> {
    let mut qs: Vec<i64> = Vec::new();
    for c in ConvergentIter::new(session.alpha()) {
        match c.q.to_i64() {
            Some(q) if q <= n_max => {
                if !qs.contains(&q) {
                    qs.push(q);
                }
            }
            _ => break,
        }
    }
    let mut set: BTreeSet<i64> = (1..=64.min(n_max)).collect();
    for &a in &qs {
        set.insert(a);
        for l in 2..=8 {
            if a * l <= n_max {
                set.insert(a * l);
            }
        }
        for &b in &qs {
            if a + b <= n_max {
                set.insert(a + b);
            }
        }
    }
    set.into_iter().flat_map(|t| [t, -t]).collect()
}

fn in_ball(session: &Session, val: &[LinearForm], g: &[LinearForm], eps: &LinearForm) -> Result<bool> {
    for (v, c) in val.iter().zip(g) {
        let diff = v - c;
        if session.sign(&(&diff - eps))? != Ordering::Less || session.sign(&(&diff + eps))? != Ordering::Greater {
            return Ok(false);
        }
    }
    Ok(true)
}

/// For each dyadic `A` at `depth`, the first `N` (in [`witness_times`]
/// order) with `μ(A ∩ T^{−N}A ∩ [Φ_N ∈ B(g,ε)]) > 0`, the ball taken in
/// the max norm. The three sets are unions of intervals cut by the
/// discontinuities of `Φ_N` and of the two dyadic index functions, so the
/// measure is exact.
pub fn essential_value_witness(session: &Session, phi: &StepCocycle, g: &[LinearForm], eps: &BigRational, depth: u32, n_max: i64) -> Result<WitnessResult> {
    if !eps.is_positive() {
        return Err(Error::Precondition("eps must be positive".into()));
    }
    if g.len() != phi.dim() {
        return Err(Error::Precondition("g has the wrong dimension".into()));
    }
    if depth > 12 || n_max < 1 {
        return Err(Error::Precondition("depth must be at most 12 and N_max positive".into()));
    }
    let idx = dyadic_index(session, depth)?;
    let mean = idx.mean_removed()[0].clone();
    let eps_f = LinearForm::constant(eps.clone());
    let mut per_a: Vec<Option<WitnessHit>> = vec![None; 1 << depth];
    let mut searched = Vec::new();
    let mut cell_of: BTreeMap<Vec<i128>, usize> = BTreeMap::new();
    for nn in witness_times(session, n_max) {
        if per_a.iter().all(Option::is_some) {
            break;
        }
        searched.push(nn);
        let blocks = [
            Block { f: &idx, n: 1, shift: 0 },
            Block { f: &idx, n: 1, shift: nn },
            Block { f: phi, n: nn.abs(), shift: nn.min(0) },
        ];
        let part = partition(session, &blocks)?;
        cell_of.clear();
        let mut hits: BTreeMap<usize, LinearForm> = BTreeMap::new();
        for (key, m) in &part.atoms {
            let s0 = part.slice(key, 0);
            if s0 != part.slice(key, 1) {
                continue;
            }
            let cell = match cell_of.get(s0) {
                Some(c) => *c,
                None => {
                    let v = &part.value_of_slice(s0, 0)[0] + &mean;
                    let c = v
                        .as_rational()
                        .and_then(|r| r.to_integer().to_usize())
                        .ok_or(Error::AuditFailure { audit: "witness_cells", n: nn, k: 0, detail: "dyadic index is not an integer".into() })?;
                    cell_of.insert(s0.to_vec(), c);
                    c
                }
            };
            if per_a[cell].is_some() {
                continue;
            }
            let mut val = part.value(key, 2);
            if nn < 0 {
                val = val.iter().map(|v| -v).collect();
            }
            if in_ball(session, &val, g, &eps_f)? {
                *hits.entry(cell).or_insert_with(LinearForm::zero) += &part.mass(m);
            }
        }
        for (cell, measure) in hits {
            per_a[cell] = Some(WitnessHit { n: nn, measure });
        }
    }
    Ok(WitnessResult { g: g.to_vec(), eps: eps.clone(), depth, per_a, searched })
}

// ---------------------------------------------------------------------------
// wsd

#[derive(Clone, Debug)]
pub struct WsdRow {
    pub n: usize,
    pub q: i64,
    /// `|𝓓_q| = D·q`.
    pub points: usize,
    pub min_gap: LinearForm,
    /// `q · min gap`.
    pub c: LinearForm,
    pub c_approx: f64,
}

#[derive(Clone, Debug)]
pub struct WsdReport {
    pub rows: Vec<WsdRow>,
    pub threshold: BigRational,
    /// Indices `n` with `c_{q_n} ≥ threshold`.
    pub subsequence: Vec<usize>,
    /// Jump vectors, emitted when the subsequence is nonempty.
    pub candidates: Vec<Vec<LinearForm>>,
    /// Jumps are rational and span `ℝ^d`.
    pub proposes_regular: bool,
    /// Indices skipped because `D·q_n` exceeds the budget.
    pub skipped: Vec<usize>,
}

/// `𝓓_q = {x_i − kα : 0 ≤ k < q}` in circle order.
fn sorted_discontinuities<'s>(session: &'s Session, phi: &StepCocycle, q: i64) -> Result<(Circle<'s>, Vec<Pt>)> {
    let bases: Vec<LinearForm> = phi.jumps().iter().map(|j| j.at.clone()).collect();
    let circle = Circle::new(session, bases)?;
    let mut pts = Vec::with_capacity(phi.jumps().len() * q as usize);
    for b in 0..phi.jumps().len() {
        for k in 0..q {
            pts.push(circle.point(b as u32, -k)?);
        }
    }
    circle.sort(&mut pts)?;
    let n = pts.len();
    for i in 0..n {
        if n > 1 && circle.coincide(&pts[i], &pts[(i + 1) % n])? {
            return Err(Error::UndecidableAtCap(format!("coincident discontinuities at q = {q}")));
        }
    }
    Ok((circle, pts))
}

fn min_gap(session: &Session, circle: &Circle<'_>, pts: &[Pt]) -> Result<LinearForm> {
    let n = pts.len();
    if n == 1 {
        return Ok(LinearForm::int(1));
    }
    let gap_fx = |i: usize| circle.gap_fixed(&pts[i], &pts[(i + 1) % n], i + 1 == n);
    let gap_form = |i: usize| circle.gap_form(&pts[i], &pts[(i + 1) % n], i + 1 == n);
    let mut best = (0usize, gap_fx(0));
    let mut ties: Vec<usize> = Vec::new();
    for i in 1..n {
        let g = gap_fx(i);
        match g.certain_cmp(&best.1) {
            Some(Ordering::Less) => {
                best = (i, g);
                ties.clear();
            }
            Some(_) => {}
            None => ties.push(i),
        }
    }
    let mut bf = gap_form(best.0);
    for i in ties {
        let f = gap_form(i);
        if session.compare(&f, &bf)? == Ordering::Less {
            bf = f;
        }
    }
    Ok(bf)
}

fn rank_f64(rows: &[Vec<f64>], d: usize) -> usize {
    let mut m: Vec<Vec<f64>> = rows.to_vec();
    let mut rank = 0;
    for col in 0..d {
        let Some(p) = (rank..m.len()).max_by(|a, b| libm::fabs(m[*a][col]).total_cmp(&libm::fabs(m[*b][col]))) else {
            break;
        };
        if libm::fabs(m[p][col]) < 1e-9 {
            continue;
        }
        m.swap(rank, p);
        for r in 0..m.len() {
            if r != rank {
                let f = m[r][col] / m[rank][col];
                for c in 0..d {
                    m[r][c] -= f * m[rank][c];
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Exact smallest gap of `𝓓_{q_n}` for each `n`, the normalised `c_q`, and
/// the jump vectors as candidate essential values.
pub fn wsd_check(session: &Session, phi: &StepCocycle, n_list: &[usize], c_threshold: &BigRational) -> Result<WsdReport> {
    let jumps = phi.jumps();
    for (i, a) in jumps.iter().enumerate() {
        for b in &jumps[i + 1..] {
            if (&a.at - &b.at).as_integer_alpha_combination().is_some() {
                return Err(Error::Precondition(format!("discontinuities {} and {} differ by an element of Zα+Z; normalize first", a.at, b.at)));
            }
        }
    }
    let dc = jumps.len() as u64;
    let n_hi = n_list.iter().copied().max().unwrap_or(0);
    let convs = convergents(session.alpha(), n_hi);
    let thr = LinearForm::constant(c_threshold.clone());
    let mut rows = Vec::new();
    let mut subsequence = Vec::new();
    let mut skipped = Vec::new();
    for &n in n_list {
        let Some(c) = convs.get(n) else { continue };
        let q = match c.q.to_u64() {
            Some(q) if dc > 0 && q * dc <= PUSHFORWARD_BUDGET => q as i64,
            _ => {
                skipped.push(n);
                continue;
            }
        };
        let (circle, pts) = sorted_discontinuities(session, phi, q)?;
        let gap = min_gap(session, &circle, &pts)?;
        let cq = gap.scale_int(q);
        if session.compare(&cq, &thr)? != Ordering::Less {
            subsequence.push(n);
        }
        let c_approx = session.to_f64(&cq);
        rows.push(WsdRow { n, q, points: pts.len(), min_gap: gap, c: cq, c_approx });
    }
    let candidates: Vec<Vec<LinearForm>> = if subsequence.is_empty() {
        Vec::new()
    } else {
        let mut out: Vec<Vec<LinearForm>> = Vec::new();
        for j in jumps {
            if !out.contains(&j.sigma) {
                out.push(j.sigma.clone());
            }
        }
        out
    };
    let rational = jumps.iter().all(|j| j.sigma.iter().all(|s| session.expand(s).is_rational()));
    let approx: Vec<Vec<f64>> = candidates.iter().map(|v| v.iter().map(|x| session.to_f64(x)).collect()).collect();
    let proposes_regular = !candidates.is_empty() && rational && rank_f64(&approx, phi.dim()) == phi.dim();
    Ok(WsdReport { rows, threshold: c_threshold.clone(), subsequence, candidates, proposes_regular, skipped })
}

// ---------------------------------------------------------------------------
// Clusters

#[derive(Clone, Debug)]
pub struct ClusterMember {
    /// Index into `Φ.jumps()`.
    pub kind: usize,
    pub k: i64,
    /// Position in the window at scale `q`, in `[0, 4)`.
    pub scaled: f64,
}

#[derive(Clone, Debug)]
pub struct Cluster {
    pub members: Vec<ClusterMember>,
    pub sigma: Vec<LinearForm>,
}

#[derive(Clone, Debug)]
pub struct ClusterWindow {
    pub shift: i64,
    /// Discontinuity types in circle order.
    pub pattern: Vec<usize>,
    pub clusters: Vec<Cluster>,
}

#[derive(Clone, Debug)]
pub struct ClusterReport {
    pub n: usize,
    pub q: i64,
    pub eps_cluster: BigRational,
    pub windows: Vec<ClusterWindow>,
    /// Some observed cluster with fewer than `D` members has `σ(C) = 0`.
    pub zero_proper_observed: bool,
    /// `σ(C) ≠ 0` for every nonempty proper subset (`None` when `D > 16`).
    pub all_proper_nonzero: Option<bool>,
    /// Whether `n` is in the separation subsequence, when one was supplied.
    pub separated: Option<bool>,
    pub fires: bool,
}

/// Windows `[−jα, −jα + 4/q)` rescaled by `q = q_n`; discontinuities closer
/// than `ε_cluster` at that scale form a cluster.
pub fn cluster_analysis(
    session: &Session,
    phi: &StepCocycle,
    n: usize,
    eps_cluster: &BigRational,
    window_shifts: &[i64],
    separation: Option<&SeparationTable>,
) -> Result<ClusterReport> {
    let jumps = phi.jumps();
    let dc = jumps.len();
    let c = convergents(session.alpha(), n).pop().filter(|c| c.n == n).ok_or(Error::Precondition(format!("no convergent of index {n}")))?;
    let q = match c.q.to_u64() {
        Some(q) if dc > 0 && q * dc as u64 <= PUSHFORWARD_BUDGET => q as i64,
        _ => return Err(Error::Precondition(format!("D·q_{n} exceeds the budget"))),
    };
    let (_, pts) = sorted_discontinuities(session, phi, q)?;
    let pos: Vec<f64> = pts.iter().map(|p| p.pos.to_f64()).collect();
    let eps = rat_to_f64(eps_cluster);
    let qf = q as f64;
    let mut windows = Vec::with_capacity(window_shifts.len());
    let mut zero_proper_observed = false;
    for &j in window_shifts {
        let w = frac_f64(session, &LinearForm::alpha().scale_int(-j));
        let start = pos.partition_point(|p| *p < w);
        let mut members = Vec::new();
        for t in 0..pts.len() {
            let i = (start + t) % pts.len();
            let s = (pos[i] - w - libm::floor(pos[i] - w)) * qf;
            if s >= 4.0 {
                break;
            }
            members.push(ClusterMember { kind: pts[i].base as usize, k: -pts[i].k, scaled: s });
        }
        let pattern = members.iter().map(|m| m.kind).collect();
        let mut clusters: Vec<Cluster> = Vec::new();
        let mut cur: Vec<ClusterMember> = Vec::new();
        let flush = |cur: &mut Vec<ClusterMember>, clusters: &mut Vec<Cluster>| -> Result<()> {
            if cur.is_empty() {
                return Ok(());
            }
            let mut kinds: Vec<usize> = cur.iter().map(|m| m.kind).collect();
            kinds.sort_unstable();
            if kinds.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::AuditFailure { audit: "cluster_types", n: n as i64, k: j, detail: "two discontinuities of one type in a cluster".into() });
            }
            let mut sigma = vec![LinearForm::zero(); phi.dim()];
            for m in cur.iter() {
                for (s, x) in sigma.iter_mut().zip(&jumps[m.kind].sigma) {
                    *s += x;
                }
            }
            clusters.push(Cluster { members: core::mem::take(cur), sigma });
            Ok(())
        };
        for m in members {
            if let Some(last) = cur.last() {
                if m.scaled - last.scaled > eps {
                    flush(&mut cur, &mut clusters)?;
                }
            }
            cur.push(m);
        }
        flush(&mut cur, &mut clusters)?;
        for cl in &clusters {
            if cl.members.len() < dc && is_zero_vec(session, &cl.sigma) {
                zero_proper_observed = true;
            }
        }
        windows.push(ClusterWindow { shift: j, pattern, clusters });
    }
    let all_proper_nonzero = (dc <= 16).then(|| {
        (1u32..(1u32 << dc) - 1).all(|mask| {
            let mut sigma = vec![LinearForm::zero(); phi.dim()];
            for (i, jmp) in jumps.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    for (s, x) in sigma.iter_mut().zip(&jmp.sigma) {
                        *s += x;
                    }
                }
            }
            !is_zero_vec(session, &sigma)
        })
    });
    let separated = separation.map(|t| t.subsequence.contains(&n));
    let observed = windows.iter().any(|w| !w.clusters.is_empty());
    let fires = separated == Some(true) && observed && !zero_proper_observed;
    Ok(ClusterReport { n, q, eps_cluster: eps_cluster.clone(), windows, zero_proper_observed, all_proper_nonzero, separated, fires })
}

/// A jump `constant + coeff·a` depending on one real parameter `a`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamJump {
    pub constant: BigRational,
    pub coeff: BigRational,
}

impl ParamJump {
    pub fn new(constant: BigRational, coeff: BigRational) -> Self {
        ParamJump { constant, coeff }
    }

    pub fn at(&self, a: &BigRational) -> BigRational {
        &self.constant + &self.coeff * a
    }

    fn add(&self, o: &ParamJump) -> ParamJump {
        ParamJump { constant: &self.constant + &o.constant, coeff: &self.coeff + &o.coeff }
    }
}

#[derive(Clone, Debug)]
pub struct ClusterSumTable {
    /// Admissible two-element clusters and their jump sums.
    pub pair_sums: Vec<((usize, usize), ParamJump)>,
    /// Every admissible cluster with at least two members.
    pub admissible: Vec<(Vec<usize>, ParamJump)>,
    /// Values of `a` for which an admissible sum vanishes; `None` when one
    /// vanishes identically.
    pub exceptional: Option<Vec<BigRational>>,
}

impl ClusterSumTable {
    /// Whether every admissible cluster sum is nonzero at `a`.
    pub fn fires(&self, a: &BigRational) -> bool {
        self.exceptional.as_ref().is_some_and(|ex| !ex.contains(a))
    }
}

/// Symbolic sums of jumps over the clusters that can occur when the pairs in
/// `separated` never share a cluster. A cluster holding all `D` types is not
/// proper and is skipped, as are singletons (a single discontinuity has a
/// nonzero jump by definition).
pub fn pair_cluster_table(jumps: &[ParamJump], separated: &[(usize, usize)]) -> ClusterSumTable {
    let d = jumps.len();
    let sep = |i: usize, j: usize| separated.iter().any(|&(a, b)| (a, b) == (i, j) || (a, b) == (j, i));
    let mut admissible = Vec::new();
    let mut pair_sums = Vec::new();
    if d <= 16 {
        for mask in 1u32..(1u32 << d) - 1 {
            let members: Vec<usize> = (0..d).filter(|i| mask & (1 << i) != 0).collect();
            if members.len() < 2 {
                continue;
            }
            if members.iter().enumerate().any(|(x, &i)| members[x + 1..].iter().any(|&j| sep(i, j))) {
                continue;
            }
            let zero = ParamJump::new(BigRational::zero(), BigRational::zero());
            let s = members.iter().fold(zero, |acc, &i| acc.add(&jumps[i]));
            if members.len() == 2 {
                pair_sums.push(((members[0], members[1]), s.clone()));
            }
            admissible.push((members, s));
        }
    }
    let mut exceptional = Some(Vec::new());
    for (_, s) in &admissible {
        if s.coeff.is_zero() {
            if s.constant.is_zero() {
                exceptional = None;
                break;
            }
        } else if let Some(ex) = exceptional.as_mut() {
            let root = -&s.constant / &s.coeff;
            if !ex.contains(&root) {
                ex.push(root);
            }
        }
    }
    if let Some(ex) = exceptional.as_mut() {
        ex.sort();
    }
    ClusterSumTable { pair_sums, admissible, exceptional }
}

// ---------------------------------------------------------------------------
// mesu

#[derive(Clone, Debug)]
pub struct MesuReport {
    pub q: i64,
    pub ell: i64,
    /// `μ(A_{q,ℓ})`.
    pub measure: LinearForm,
    /// `ℓ‖qα‖`.
    pub eps: LinearForm,
    /// `1 − 2Dqε`.
    pub bound: LinearForm,
    pub bound_holds: bool,
}

fn blocks_for_a(phi: &StepCocycle, q: i64, ell: i64) -> Vec<Block<'_>> {
    (0..=ell).map(|s| Block { f: phi, n: q, shift: s * q }).collect()
}

/// Key filter for `Φ_q(x) = Φ_q(x + sqα)`, `1 ≤ s ≤ ℓ`, with the `ℓ + 1`
/// blocks starting at `first`.
fn in_a(part: &Partition, key: &[i128], first: usize, ell: i64) -> bool {
    let base = part.slice(key, first);
    (1..=ell as usize).all(|s| part.slice(key, first + s) == base)
}

/// `A_{q,ℓ} = ⋂_{1≤s≤ℓ} {x : Φ_q(x) = Φ_q(x + sqα)}` measured exactly, and
/// the bound `μ(A_{q,ℓ}) > 1 − 2Dqℓ‖qα‖`, which is asserted.
pub fn mesu_measure(session: &Session, phi: &StepCocycle, q: i64, ell: i64) -> Result<MesuReport> {
    if q < 1 || ell < 0 {
        return Err(Error::Precondition("mesu needs q >= 1 and l >= 0".into()));
    }
    let dc = phi.discontinuity_count() as i64;
    let eps = session.dist_to_z_form(&LinearForm::alpha().scale_int(q))?.scale_int(ell);
    let bound = &LinearForm::int(1) - &eps.scale_int(2 * dc * q);
    let measure = if ell == 0 {
        LinearForm::int(1)
    } else {
        let part = partition(session, &blocks_for_a(phi, q, ell))?;
        part.atoms
            .iter()
            .filter(|(k, _)| in_a(&part, k, 0, ell))
            .fold(LinearForm::zero(), |acc, (_, m)| &acc + &part.mass(m))
    };
    // with ℓ = 0 both sides are 1
    let bound_holds = ell == 0 || session.compare(&measure, &bound)? == Ordering::Greater;
    let meaningful = session.sign(&bound)? == Ordering::Greater;
    if meaningful && !bound_holds {
        return Err(Error::AuditFailure { audit: "mesu", n: q, k: ell, detail: format!("measure {measure} is not above {bound}") });
    }
    Ok(MesuReport { q, ell, measure, eps, bound, bound_holds })
}

// ---------------------------------------------------------------------------
// qn00

#[derive(Clone, Debug)]
pub struct Qn00Row {
    pub n: usize,
    pub q: i64,
    /// `‖q_nβ_j‖` for every coordinate.
    pub dist_beta: Vec<f64>,
    pub ell: i64,
    pub big_l: i64,
    /// `μ(A_{q,L})`.
    pub measure_a: LinearForm,
    pub mesu_bound: LinearForm,
    /// Pushforward of `Φ_{ℓq}` restricted to `A_{q,L}`.
    pub atoms: Vec<Atom>,
    /// `(value, mass)` of each atom, approximately.
    pub approx: Vec<(Vec<f64>, f64)>,
}

impl Qn00Row {
    /// Heaviest atom whose coordinate `j` lies within `tol` of `±target`.
    pub fn heaviest_near(&self, j: usize, target: f64, tol: f64) -> Option<(f64, f64)> {
        self.approx
            .iter()
            .filter(|(v, _)| libm::fabs(libm::fabs(v[j]) - target) <= tol)
            .map(|(v, m)| (v[j], *m))
            .max_by(|a, b| a.1.total_cmp(&b.1))
    }
}

#[derive(Clone, Debug)]
pub struct Qn00Report {
    pub rho: BigRational,
    pub eta: BigRational,
    /// Multiplier applied to make the cocycle integer up to `β`.
    pub multiplier: BigInt,
    pub j0: usize,
    /// Indices with `‖q_nβ_1‖ > ¼q_n‖q_nα‖`.
    pub qualifying: Vec<usize>,
    pub rows: Vec<Qn00Row>,
    pub skipped: Vec<(usize, String)>,
}

/// Largest `L ≥ 0` with `L·den ≤ num`, for `den > 0`.
fn floor_ratio(session: &Session, num: &BigRational, den: &LinearForm) -> Result<i64> {
    let est = libm::floor(rat_to_f64(num) / session.to_f64(den));
    if !est.is_finite() || est > 1e15 {
        return Err(Error::Overflow("floor ratio"));
    }
    let nf = LinearForm::constant(num.clone());
    let mut l = est.max(0.0) as i64;
    while l > 0 && session.compare(&den.scale_int(l), &nf)? == Ordering::Greater {
        l -= 1;
    }
    while session.compare(&den.scale_int(l + 1), &nf)? != Ordering::Greater {
        l += 1;
    }
    Ok(l)
}

fn scaled_cocycle(session: &Session, phi: &StepCocycle, m: &BigInt) -> Result<StepCocycle> {
    if m.is_one() {
        return Ok(phi.clone());
    }
    let d = phi.dim();
    let mat: Vec<Vec<BigRational>> = (0..d)
        .map(|i| (0..d).map(|j| if i == j { BigRational::from_integer(m.clone()) } else { BigRational::zero() }).collect())
        .collect();
    phi.linear_image(session, &mat)
}

/// The `‖q_nβ‖ → 0` regime: along the denominators with
/// `‖q_nβ_1‖ > ¼q_n‖q_nα‖`, build `L = [η/‖q_nβ_1‖]`, `ℓ = [ρ/‖q_nβ_{j₀}‖]`
/// and the exact pushforward of `Φ_{ℓq_n}` restricted to `A_{q_n,L}`.
///
/// The cocycle is first multiplied by its rationality multiplier so that
/// `Φ^j = u^j − β_j` with `u^j` integer valued; values refer to that
/// multiple. `η ≤ 1/(16D)` keeps `μ(A) ≥ 1/2`.
pub fn qn00_scan(session: &Session, phi: &StepCocycle, rho: &BigRational, eta: &BigRational, subsequence: &[usize]) -> Result<Qn00Report> {
    if !rho.is_positive() || rho >= eta {
        return Err(Error::Precondition("need 0 < rho < eta".into()));
    }
    let dc = phi.discontinuity_count() as i64;
    if dc == 0 || *eta > rat(1, 16 * dc) {
        return Err(Error::Precondition(format!("eta must be at most 1/(16D) with D = {dc}")));
    }
    let ra = rationality_analysis(session, phi)?;
    let (Some(m), Some(betas)) = (ra.multiplier.clone(), ra.betas.clone()) else {
        return Err(Error::Precondition("qn00 needs a rational cocycle".into()));
    };
    for b in &betas {
        if b.as_integer_alpha_combination().is_some() {
            return Err(Error::Precondition(format!("beta = {b} is declared in Zα+Z; normalize first")));
        }
    }
    let psi = scaled_cocycle(session, phi, &m)?;
    let n_hi = subsequence.iter().copied().max().unwrap_or(0);
    let convs = convergents(session.alpha(), n_hi);
    let mut cand: Vec<(usize, BigInt, Vec<LinearForm>, usize)> = Vec::new();
    let mut skipped = Vec::new();
    let mut qualifying = Vec::new();
    for &n in subsequence {
        let Some(c) = convs.get(n) else { continue };
        let dists: Result<Vec<LinearForm>> = betas.iter().map(|b| session.dist_to_z_form(&b.scale_big(&c.q))).collect();
        let dists = match dists {
            Ok(d) => d,
            Err(e) => {
                skipped.push((n, format!("{e}")));
                continue;
            }
        };
        let qa = session.dist_to_z_form(&c.theta)?.scale_big(&c.q);
        if session.compare(&dists[0].scale_int(4), &qa)? != Ordering::Greater {
            continue;
        }
        qualifying.push(n);
        let mut arg = 0;
        for j in 1..dists.len() {
            if session.compare(&dists[j], &dists[arg])? == Ordering::Greater {
                arg = j;
            }
        }
        cand.push((n, c.q.clone(), dists, arg));
    }
    if cand.is_empty() {
        return Err(Error::SubsequenceExhausted);
    }
    let mut votes = vec![0usize; betas.len()];
    for c in &cand {
        votes[c.3] += 1;
    }
    let j0 = (0..votes.len()).max_by_key(|&j| (votes[j], core::cmp::Reverse(j))).unwrap_or(0);
    let eps_q = |q: &BigInt| -> Result<LinearForm> { session.dist_to_z_form(&LinearForm::alpha().scale_big(q)) };
    let mut rows = Vec::new();
    for (n, qb, dists, arg) in cand {
        if arg != j0 {
            continue;
        }
        let Some(q) = qb.to_i64() else {
            skipped.push((n, "q_n exceeds 64 bits".into()));
            continue;
        };
        let big_l = floor_ratio(session, eta, &dists[0])?;
        let ell = floor_ratio(session, rho, &dists[j0])?;
        if ell == 0 || big_l == 0 {
            skipped.push((n, format!("l = {ell}, L = {big_l}")));
            continue;
        }
        if ell > big_l {
            return Err(Error::AuditFailure { audit: "qn00", n: n as i64, k: ell, detail: format!("l = {ell} exceeds L = {big_l}") });
        }
        let cost = dc as u64 * q as u64 * (big_l + 1) as u64;
        if cost > QN00_BUDGET {
            skipped.push((n, format!("{cost} discontinuities exceed the budget")));
            continue;
        }
        // On A the blocks Ψ_q(· + sqα), s ≤ L, agree, so Ψ_{ℓq} = ℓΨ_q there.
        let part = partition_with_budget(session, &blocks_for_a(&psi, q, big_l), QN00_BUDGET)?;
        let entries = part.project(0, |k| in_a(&part, k, 0, big_l));
        let measure_a = entries.iter().fold(LinearForm::zero(), |acc, (_, m)| &acc + &part.mass(m));
        let mut atoms = atoms_from(session, &part, entries, 0)?;
        for a in &mut atoms {
            for v in &mut a.value {
                *v = v.scale_int(ell);
            }
        }
        let approx = atoms
            .iter()
            .map(|a| (a.value.iter().map(|v| session.to_f64(v)).collect(), session.to_f64(&a.mass)))
            .collect();
        let mesu_bound = &LinearForm::int(1) - &eps_q(&qb)?.scale_int(2 * dc * q * big_l);
        rows.push(Qn00Row {
            n,
            q,
            dist_beta: dists.iter().map(|d| session.to_f64(d)).collect(),
            ell,
            big_l,
            measure_a,
            mesu_bound,
            atoms,
            approx,
        });
    }
    Ok(Qn00Report { rho: rho.clone(), eta: eta.clone(), multiplier: m, j0, qualifying, rows, skipped })
}

// ---------------------------------------------------------------------------
// Rational reduction

#[derive(Clone, Debug)]
pub struct ReductionStep {
    pub j0: usize,
    /// Denominator indices whose pushforwards produced the witness.
    pub subsequence: Vec<usize>,
    /// Essential value found, in the coordinates of this step.
    pub theta: Vec<BigInt>,
    /// The two integer-part atoms whose difference is `theta`.
    pub atoms: (Vec<BigInt>, Vec<BigInt>),
    /// Basis change of this step; sends `theta` to `e_i` and fixes earlier `e_k`.
    pub basis_change: Vec<Vec<BigRational>>,
}

#[derive(Clone, Debug)]
pub struct ResidualTrace {
    pub coordinate: usize,
    pub beta: LinearForm,
    pub limit: LimitSetReport,
}

#[derive(Clone, Debug)]
pub struct ReductionResult {
    pub d: usize,
    pub multiplier: BigInt,
    /// `M` with `M·Φ` the reduced cocycle.
    pub m: Vec<Vec<BigRational>>,
    pub reduced: StepCocycle,
    pub steps: Vec<ReductionStep>,
    pub residual: Vec<ResidualTrace>,
    /// Why the last attempted step found no essential value, if it did not.
    pub failure: Option<String>,
}

impl ReductionResult {
    /// The found essential values in the original coordinates:
    /// `M^{−1}e_i` for `i < d(Φ)`.
    pub fn generators(&self) -> Option<Vec<Vec<BigRational>>> {
        let inv = mat_inverse(&self.m)?;
        Some((0..self.d).map(|i| inv.iter().map(|row| row[i].clone()).collect()).collect())
    }
}

fn identity(d: usize) -> Vec<Vec<BigRational>> {
    (0..d).map(|i| (0..d).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }).collect()).collect()
}

fn mat_mul(a: &[Vec<BigRational>], b: &[Vec<BigRational>]) -> Vec<Vec<BigRational>> {
    a.iter()
        .map(|row| (0..b[0].len()).map(|c| row.iter().zip(b).fold(BigRational::zero(), |acc, (x, r)| acc + x * &r[c])).collect())
        .collect()
}

fn mat_inverse(m: &[Vec<BigRational>]) -> Option<Vec<Vec<BigRational>>> {
    let d = m.len();
    let mut a: Vec<Vec<BigRational>> = m.to_vec();
    let mut inv = identity(d);
    for col in 0..d {
        let p = (col..d).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, p);
        inv.swap(col, p);
        let piv = a[col][col].clone();
        for c in 0..d {
            a[col][c] = &a[col][c] / &piv;
            inv[col][c] = &inv[col][c] / &piv;
        }
        for r in 0..d {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c in 0..d {
                    let (x, y) = (&a[col][c] * &f, &inv[col][c] * &f);
                    a[r][c] -= x;
                    inv[r][c] -= y;
                }
            }
        }
    }
    Some(inv)
}

/// Basis change fixing `e_0 … e_{level−1}` and sending `theta` to
/// `e_level`. The lower block is an integer unimodular matrix obtained by
/// Euclidean row reduction of `theta[level..]`; its first row is divided by
/// the gcd when `theta[level..]` is not primitive.
pub fn basis_completion(theta: &[BigInt], level: usize) -> Result<Vec<Vec<BigRational>>> {
    let d = theta.len();
    let k = d - level;
    let mut v: Vec<BigInt> = theta[level..].to_vec();
    let mut n: Vec<Vec<BigInt>> = (0..k).map(|i| (0..k).map(|j| BigInt::from((i == j) as i32)).collect()).collect();
    loop {
        let nz: Vec<usize> = (0..k).filter(|&i| !v[i].is_zero()).collect();
        if nz.len() <= 1 {
            break;
        }
        let p = *nz.iter().min_by_key(|&&i| v[i].abs()).unwrap();
        for &i in &nz {
            if i != p {
                let f = v[i].div_floor(&v[p]);
                v[i] = &v[i] - &f * &v[p];
                let rp = n[p].clone();
                for (x, y) in n[i].iter_mut().zip(&rp) {
                    *x -= &f * y;
                }
            }
        }
    }
    let p = (0..k).find(|&i| !v[i].is_zero()).ok_or(Error::Precondition("essential value has no component in the residual block".into()))?;
    v.swap(0, p);
    n.swap(0, p);
    if v[0].is_negative() {
        v[0] = -&v[0];
        for x in n[0].iter_mut() {
            *x = -&*x;
        }
    }
    let g = v[0].clone();
    let r0: Vec<BigRational> = n[0].iter().map(|x| BigRational::new(x.clone(), g.clone())).collect();
    let mut m = identity(d);
    for r in 0..level {
        for c in 0..k {
            m[r][level + c] = -BigRational::from_integer(theta[r].clone()) * &r0[c];
        }
    }
    for r in 0..k {
        for c in 0..k {
            m[level + r][level + c] = if r == 0 { r0[c].clone() } else { BigRational::from_integer(n[r][c].clone()) };
        }
    }
    for (r, row) in m.iter().enumerate() {
        let img = row.iter().zip(theta).fold(BigRational::zero(), |acc, (x, t)| acc + x * BigRational::from_integer(t.clone()));
        let want = if r == level { BigRational::one() } else { BigRational::zero() };
        if img != want {
            return Err(Error::AuditFailure { audit: "basis_completion", n: level as i64, k: r as i64, detail: "M·θ is not e_i".into() });
        }
    }
    Ok(m)
}

struct ReduceCtx<'a> {
    session: &'a Session,
    big_n: usize,
    window: usize,
    tau: BigRational,
    delta: LinearForm,
    convs: Vec<Convergent>,
    dim: usize,
}

#[derive(Clone)]
struct Branch {
    steps: Vec<ReductionStep>,
    cocycle: StepCocycle,
    m: Vec<Vec<BigRational>>,
    betas: Vec<LinearForm>,
    failure: Option<String>,
}

type ThetaCandidate = (Vec<BigInt>, (Vec<BigInt>, Vec<BigInt>));

/// Groups `({q_nβ_j})_j` into grid cells and returns the largest group
/// (ties go to the group holding the latest index).
fn converging_group(session: &Session, betas: &[LinearForm], items: &[(usize, BigInt)]) -> Vec<usize> {
    let mut cells: BTreeMap<Vec<i64>, Vec<usize>> = BTreeMap::new();
    for (i, (_, q)) in items.iter().enumerate() {
        let key = betas.iter().map(|b| libm::floor(frac_f64(session, &b.scale_big(q)) / CELL) as i64).collect();
        cells.entry(key).or_default().push(i);
    }
    cells.into_values().max_by_key(|v| (v.len(), v.last().copied())).unwrap_or_default()
}

fn theta_candidates(ctx: &ReduceCtx<'_>, cur: &Branch, j0: usize) -> Result<(Vec<ThetaCandidate>, Vec<usize>)> {
    let s = ctx.session;
    let dc = cur.cocycle.discontinuity_count() as u64;
    let tau = rat_to_f64(&ctx.tau);
    let mut items: Vec<(usize, BigInt)> = Vec::new();
    for c in &ctx.convs {
        if c.n + ctx.window <= ctx.big_n || c.n == 0 {
            continue;
        }
        let Some(q) = c.q.to_u64() else { continue };
        if dc == 0 || q * dc > REDUCTION_BUDGET {
            continue;
        }
        let f = frac_f64(s, &cur.betas[j0].scale_big(&c.q));
        if f.min(1.0 - f) >= tau {
            items.push((c.n, c.q.clone()));
        }
    }
    let group = converging_group(s, &cur.betas, &items);
    if group.is_empty() {
        return Err(Error::AtomSearchFailed(format!("no tractable denominator with ‖q_nβ_{j0}‖ ≥ τ")));
    }
    let chosen: Vec<&(usize, BigInt)> = group[group.len().saturating_sub(REDUCTION_TIMES)..].iter().map(|&i| &items[i]).collect();
    let mut heavy_sets: Vec<Vec<Vec<BigInt>>> = Vec::new();
    for (n, q) in &chosen {
        let pf = pushforward(s, &cur.cocycle, q.to_i64().unwrap())?;
        let fracs = cur.betas.iter().map(|b| s.frac(&b.scale_big(q))).collect::<Result<Vec<_>>>()?;
        let mut set = Vec::new();
        for a in &pf.atoms {
            if s.compare(&a.mass, &ctx.delta)? == Ordering::Less {
                continue;
            }
            let mut u = Vec::with_capacity(ctx.dim);
            for (v, f) in a.value.iter().zip(&fracs) {
                let r = s.expand(&(v + f)).as_rational().filter(|r| r.is_integer()).ok_or_else(|| Error::AuditFailure {
                    audit: "integer_parts",
                    n: *n as i64,
                    k: 0,
                    detail: format!("{v} + {{q_nβ}} is not an integer"),
                })?;
                u.push(r.to_integer());
            }
            set.push(u);
        }
        heavy_sets.push(set);
    }
    let persistent: Vec<&Vec<BigInt>> = heavy_sets[0].iter().filter(|u| heavy_sets[1..].iter().all(|s| s.contains(u))).collect();
    let mut out: Vec<ThetaCandidate> = Vec::new();
    for a in &persistent {
        for b in &persistent {
            let theta: Vec<BigInt> = a.iter().zip(b.iter()).map(|(x, y)| x - y).collect();
            if theta[j0].is_positive() && !out.iter().any(|(t, _)| *t == theta) {
                out.push((theta, ((*a).clone(), (*b).clone())));
            }
        }
    }
    if out.is_empty() {
        return Err(Error::AtomSearchFailed(format!("no two persistent atoms of mass ≥ δ differ in coordinate {j0}")));
    }
    out.sort_by(|x, y| {
        let l1 = |t: &[BigInt]| t.iter().fold(BigInt::zero(), |acc, v| acc + v.abs());
        l1(&x.0).cmp(&l1(&y.0)).then_with(|| x.0.cmp(&y.0))
    });
    Ok((out, chosen.iter().map(|(n, _)| *n).collect()))
}

fn reduce_from(ctx: &ReduceCtx<'_>, level: usize, cur: Branch) -> Result<Branch> {
    if level == ctx.dim {
        return Ok(cur);
    }
    let mut j0s = Vec::new();
    for j in level..ctx.dim {
        let ls = limit_set_diagnostic(ctx.session, &cur.betas[j], ctx.big_n, ctx.window, &ctx.tau)?;
        if matches!(ls.verdict, LimitSet::NonzeroEvidence(_)) {
            j0s.push(j);
        }
    }
    if j0s.is_empty() {
        return Ok(cur);
    }
    let mut best: Option<Branch> = None;
    let mut failures = Vec::new();
    for &j0 in &j0s {
        let (thetas, sub) = match theta_candidates(ctx, &cur, j0) {
            Ok(x) => x,
            Err(Error::AtomSearchFailed(m)) => {
                failures.push(m);
                continue;
            }
            Err(e) => return Err(e),
        };
        for (theta, pair) in thetas.into_iter().take(MAX_THETA) {
            let mp = basis_completion(&theta, level)?;
            let cocycle = cur.cocycle.linear_image(ctx.session, &mp)?;
            let m = mat_mul(&mp, &cur.m);
            let betas = mp
                .iter()
                .map(|row| row.iter().zip(&cur.betas).fold(LinearForm::zero(), |acc, (c, b)| &acc + &b.scale(c)))
                .collect();
            let mut steps = cur.steps.clone();
            steps.push(ReductionStep { j0, subsequence: sub.clone(), theta, atoms: pair, basis_change: mp });
            let branch = reduce_from(ctx, level + 1, Branch { steps, cocycle, m, betas, failure: None })?;
            if best.as_ref().is_none_or(|b| branch.steps.len() > b.steps.len()) {
                best = Some(branch);
            }
            if best.as_ref().is_some_and(|b| b.steps.len() == ctx.dim) {
                return Ok(best.unwrap());
            }
        }
    }
    Ok(best.unwrap_or(Branch { failure: Some(failures.join("; ")), ..cur }))
}

/// The reduction algorithm: repeatedly find a coordinate with nonzero limit
/// set, a rational essential value `θ` from two persistent integer-part
/// atoms, and a basis change sending `θ` to the next standard vector.
/// Candidates are tried in order of `ℓ¹` size, backtracking to maximise
/// `d(Φ)`. A failed atom search ends the recursion and is recorded in
/// `failure`.
pub fn rational_reduction(session: &Session, phi: &StepCocycle, big_n: usize, tau: &BigRational, delta: &BigRational) -> Result<ReductionResult> {
    let ra = rationality_analysis(session, phi)?;
    let (Some(mult), Some(betas)) = (ra.multiplier.clone(), ra.betas.clone()) else {
        return Err(Error::Precondition("rational reduction needs a rational cocycle".into()));
    };
    if big_n == 0 {
        return Err(Error::Precondition("N must be positive".into()));
    }
    let dim = phi.dim();
    let psi = scaled_cocycle(session, phi, &mult)?;
    let ctx = ReduceCtx {
        session,
        big_n,
        window: (big_n / 2).max(2).min(big_n),
        tau: tau.clone(),
        delta: LinearForm::constant(delta.clone()),
        convs: convergents(session.alpha(), big_n),
        dim,
    };
    let start = Branch { steps: Vec::new(), cocycle: psi, m: identity(dim), betas, failure: None };
    let done = reduce_from(&ctx, 0, start)?;
    let d = done.steps.len();
    let mr = BigRational::from_integer(mult.clone());
    let m: Vec<Vec<BigRational>> = done.m.iter().map(|row| row.iter().map(|x| x * &mr).collect()).collect();
    let mut residual = Vec::new();
    for j in d..dim {
        let limit = limit_set_diagnostic(session, &done.betas[j], big_n, ctx.window, tau)?;
        residual.push(ResidualTrace { coordinate: j, beta: done.betas[j].clone(), limit });
    }
    Ok(ReductionResult { d, multiplier: mult, m, reduced: done.cocycle, steps: done.steps, residual, failure: done.failure })
}

// ---------------------------------------------------------------------------
// Tightness and the regularity report

#[derive(Clone, Debug)]
pub struct TightnessRow {
    pub time: i64,
    /// `μ(|Φ_t|_∞ > K)`.
    pub tail_mass: f64,
}

#[derive(Clone, Debug)]
pub struct TightnessReport {
    /// `K`: the largest coordinate variation.
    pub bound: f64,
    pub rows: Vec<TightnessRow>,
    pub tight: bool,
}

/// Probes boundedness in probability of `Φ_t` at times `q_n`, `⌊q_n/2⌋`,
/// `⌊q_n/3⌋` and `q_n + q_{n−1}`. A coboundary with a bounded transfer
/// function keeps `μ(|Φ_t| > K)` small at every time.
pub fn tightness_probe(session: &Session, phi: &StepCocycle, indices: &[usize], delta: f64, budget: u64) -> Result<TightnessReport> {
    let bound = phi.variation().iter().map(|v| session.to_f64(v)).fold(0.0, f64::max);
    let n_hi = indices.iter().copied().max().unwrap_or(0);
    let convs = convergents(session.alpha(), n_hi);
    let dc = phi.discontinuity_count().max(1) as u64;
    let mut times: BTreeSet<i64> = BTreeSet::new();
    for &n in indices {
        if n == 0 || n >= convs.len() {
            continue;
        }
        let (Some(q), Some(p)) = (convs[n].q.to_i64(), convs[n - 1].q.to_i64()) else { continue };
        for t in [q, q / 2, q / 3, q + p] {
            if t >= 1 && t as u64 * dc <= budget {
                times.insert(t);
            }
        }
    }
    let mut rows = Vec::new();
    for t in times {
        let pf = pushforward(session, phi, t)?;
        let tail_mass = pf
            .atoms
            .iter()
            .filter(|a| a.value.iter().any(|v| libm::fabs(session.to_f64(v)) > bound + 1e-9))
            .map(|a| session.to_f64(&a.mass))
            .fold(0.0, |a, b| a + b);
        rows.push(TightnessRow { time: t, tail_mass });
    }
    let tight = !rows.is_empty() && rows.iter().all(|r| r.tail_mass <= delta);
    Ok(TightnessReport { bound, rows, tight })
}

/// Finite-depth Ostrowski test of the necessary conditions for a coboundary:
/// the jumps of some coordinate split into zero-sum groups whose relative
/// positions have summable digits `Σ|b_n|/a_{n+1}` and whose mixed sums
/// `Σ‖s·Σ_j b_n^jσ_j‖²` stay bounded for an irrational `s`.
#[derive(Clone, Debug)]
pub struct ObstructionReport {
    /// Expansion depth used.
    pub depth: usize,
    /// Per coordinate, the first zero-sum grouping that passed, if any.
    pub passing: Vec<Option<Vec<Vec<usize>>>>,
    /// Groupings examined per coordinate.
    pub examined: Vec<usize>,
    /// Some coordinate has no passing grouping.
    pub obstructed: bool,
}

/// Test multiplier for the mixed sums.
const OBSTRUCTION_S: f64 = core::f64::consts::SQRT_2 - 1.0;
const OBSTRUCTION_MAX_JUMPS: usize = 10;

fn zero_sum_groupings(session: &Session, sigma: &[LinearForm], rest: &[usize], out: &mut Vec<Vec<Vec<usize>>>, cur: &mut Vec<Vec<usize>>) {
    let Some((&first, others)) = rest.split_first() else {
        out.push(cur.clone());
        return;
    };
    for mask in 0u32..(1u32 << others.len()) {
        let mut group = vec![first];
        group.extend(others.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, j)| *j));
        let total = group.iter().fold(LinearForm::zero(), |acc, &j| &acc + &sigma[j]);
        if !session.expand(&total).is_zero() {
            continue;
        }
        let remaining: Vec<usize> = others.iter().enumerate().filter(|(i, _)| mask & (1 << i) == 0).map(|(_, j)| *j).collect();
        cur.push(group);
        zero_sum_groupings(session, sigma, &remaining, out, cur);
        cur.pop();
    }
}

pub fn ostrowski_obstruction(session: &Session, phi: &StepCocycle, depth: usize) -> Result<ObstructionReport> {
    let cs: Vec<Convergent> = convergents(session.alpha(), depth).into_iter().take_while(|c| c.q.bits() as u32 <= session.cap_bits() / 3).collect();
    let depth = cs.len().saturating_sub(2);
    let jumps = phi.jumps();
    let mut digits: BTreeMap<(usize, usize), Vec<BigInt>> = BTreeMap::new();
    let mut passing = Vec::with_capacity(phi.dim());
    let mut examined = Vec::with_capacity(phi.dim());
    for j in 0..phi.dim() {
        let live: Vec<usize> = (0..jumps.len()).filter(|&i| !session.expand(&jumps[i].sigma[j]).is_zero()).collect();
        if live.is_empty() {
            passing.push(Some(Vec::new()));
            examined.push(0);
            continue;
        }
        if live.len() > OBSTRUCTION_MAX_JUMPS {
            passing.push(None);
            examined.push(0);
            continue;
        }
        let sigma: Vec<LinearForm> = jumps.iter().map(|x| x.sigma[j].clone()).collect();
        let sigma_f: Vec<f64> = sigma.iter().map(|x| session.to_f64(x)).collect();
        let mut groupings = Vec::new();
        zero_sum_groupings(session, &sigma, &live, &mut groupings, &mut Vec::new());
        examined.push(groupings.len());
        let mut found = None;
        'grouping: for g in groupings {
            for group in &g {
                let base = group[0];
                let mut mixed = vec![0.0f64; depth + 1];
                for &m in &group[1..] {
                    if let alloc::collections::btree_map::Entry::Vacant(e) = digits.entry((base, m)) {
                        let rel = session.frac(&(&jumps[m].at - &jumps[base].at))?;
                        e.insert(crate::ostrowski::expand(session, &rel, depth)?.digits);
                    }
                    let b = &digits[&(base, m)];
                    let mut acc = 0.0;
                    let mut trace = Vec::with_capacity(b.len());
                    for (n, bn) in b.iter().enumerate() {
                        let a = session.alpha().digit(n + 1).and_then(|x| x.to_f64()).unwrap_or(1.0);
                        acc += libm::fabs(bn.to_f64().unwrap_or(f64::INFINITY)) / a;
                        trace.push(acc);
                        mixed[n] += bn.to_f64().unwrap_or(f64::INFINITY) * sigma_f[m];
                    }
                    if crate::ostrowski::trend(&trace) == crate::ostrowski::Trend::Diverging {
                        continue 'grouping;
                    }
                }
                let mut acc = 0.0;
                let trace: Vec<f64> = mixed
                    .iter()
                    .map(|v| {
                        let x = OBSTRUCTION_S * v;
                        let d = x - libm::round(x);
                        acc += d * d;
                        acc
                    })
                    .collect();
                if crate::ostrowski::trend(&trace) == crate::ostrowski::Trend::Diverging {
                    continue 'grouping;
                }
            }
            found = Some(g);
            break;
        }
        passing.push(found);
    }
    let obstructed = passing.iter().any(Option::is_none);
    Ok(ObstructionReport { depth, passing, examined, obstructed })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    ErgodicEvidence,
    RegularEvidence(Vec<Vec<LinearForm>>),
    CoboundaryEvidence,
    NonRegularSuspect,
    Inconclusive,
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::ErgodicEvidence => "ErgodicEvidence",
            Verdict::RegularEvidence(_) => "RegularEvidence",
            Verdict::CoboundaryEvidence => "CoboundaryEvidence",
            Verdict::NonRegularSuspect => "NonRegularSuspect",
            Verdict::Inconclusive => "Inconclusive",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Evidence {
    pub op: String,
    pub params: String,
    pub summary: String,
}

#[derive(Clone, Debug)]
pub enum ReportInput {
    Step(StepCocycle),
    /// `β`'s of the affine cocycle `Ψ`, reduced through the diagonal quotient.
    Affine(Vec<LinearForm>),
}

#[derive(Clone, Debug)]
pub struct ReportConfig {
    pub thresholds: Thresholds,
    /// Number of tail denominators scanned.
    pub window: usize,
    /// Persistence radius of the quasi-period scan.
    pub eps: f64,
    /// `(a, b) ∈ [−grid, grid]²` for two-dimensional cocycles.
    pub grid: i64,
    /// Largest `D·t` for any pushforward.
    pub time_budget: u64,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig { thresholds: Thresholds::default(), window: 8, eps: 0.05, grid: 2, time_budget: 1 << 20 }
    }
}

#[derive(Clone, Debug)]
pub struct RegularityReport {
    pub verdict: Verdict,
    pub chain: Vec<Evidence>,
    pub normalized: StepCocycle,
    pub quasi: Option<QuasiPeriodReport>,
    pub reduction: Option<ReductionResult>,
    pub wsd: Option<WsdReport>,
    pub clusters: Option<ClusterReport>,
    pub qn00: Option<Qn00Report>,
    pub tightness: Option<TightnessReport>,
    pub obstruction: Option<ObstructionReport>,
    /// Sub-verdicts of `aφ¹ + bφ²` for two-dimensional inputs.
    pub combinations: Vec<((i64, i64), Verdict)>,
}

fn record<T>(chain: &mut Vec<Evidence>, op: &str, params: String, r: Result<T>, summary: impl Fn(&T) -> String) -> Option<T> {
    match r {
        Ok(v) => {
            chain.push(Evidence { op: op.into(), params, summary: summary(&v) });
            Some(v)
        }
        Err(e) => {
            chain.push(Evidence { op: op.into(), params, summary: format!("not available: {e}") });
            None
        }
    }
}

fn tractable(session: &Session, phi: &StepCocycle, depth: usize, budget: u64) -> Vec<(usize, BigInt)> {
    let dc = phi.discontinuity_count().max(1) as u64;
    convergents(session.alpha(), depth)
        .into_iter()
        .filter(|c| c.n >= 1 && c.q.to_u64().is_some_and(|q| q * dc <= budget))
        .map(|c| (c.n, c.q))
        .collect()
}

fn fmt_vec(session: &Session, v: &[LinearForm]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{:.6}", session.to_f64(x))).collect();
    format!("({})", parts.join(", "))
}

/// Ratio `b/a` is rational (both nonzero forms).
fn commensurable(session: &Session, a: &LinearForm, b: &LinearForm) -> bool {
    let (a, b) = (session.expand(a), session.expand(b));
    let Some((s, ca)) = a.terms().first().cloned() else { return true };
    let r = b.coeff(s) / ca;
    a.scale(&r) == b
}

struct QuickEvidence {
    quasi: Option<QuasiPeriodReport>,
    tightness: Option<TightnessReport>,
    obstructed: bool,
}

fn quick_scan(session: &Session, phi: &StepCocycle, config: &ReportConfig, budget: u64, chain: &mut Vec<Evidence>) -> QuickEvidence {
    let tract = tractable(session, phi, config.thresholds.depth, budget);
    let tail: Vec<(usize, BigInt)> = tract[tract.len().saturating_sub(config.window)..].to_vec();
    let betas = rationality_analysis(session, phi).ok().and_then(|r| r.betas);
    let group = match &betas {
        Some(b) => converging_group(session, b, &tail),
        None => (0..tail.len()).collect(),
    };
    let times: Vec<i64> = group.iter().map(|&i| tail[i].1.to_i64().unwrap()).collect();
    let quasi = if times.is_empty() {
        None
    } else {
        let params = format!("times={times:?}, delta={}, eps={}", config.thresholds.delta, config.eps);
        record(chain, "quasi_period_scan", params, quasi_period_scan(session, phi, &times, &config.thresholds.delta, &[config.eps]), |r| {
            let p: Vec<String> = r.persistent.iter().map(|p| fmt_vec(session, &p.value)).collect();
            let g: Vec<String> = r.generators.iter().map(|g| fmt_vec(session, g)).collect();
            format!("persistent atoms [{}]; generators [{}]", p.join(", "), g.join(", "))
        })
    };
    let ns: Vec<usize> = tail.iter().map(|t| t.0).collect();
    let delta = rat_to_f64(&config.thresholds.delta);
    let tightness = record(chain, "tightness_probe", format!("n={ns:?}"), tightness_probe(session, phi, &ns, delta, budget), |t| {
        let worst = t.rows.iter().map(|r| r.tail_mass).fold(0.0, f64::max);
        format!("K={:.3}, worst tail mass {:.4}, tight={}", t.bound, worst, t.tight)
    });
    let obstructed = ostrowski_obstruction(session, phi, config.thresholds.depth).is_ok_and(|o| o.obstructed);
    QuickEvidence { quasi, tightness, obstructed }
}

fn quick_verdict(session: &Session, phi: &StepCocycle, ev: &QuickEvidence) -> Verdict {
    if phi.jumps().is_empty() {
        return Verdict::CoboundaryEvidence;
    }
    let only_zero = ev.quasi.as_ref().is_some_and(|q| q.only_zero());
    let tight = ev.tightness.as_ref().is_some_and(|t| t.tight);
    if only_zero && tight && !ev.obstructed {
        return Verdict::CoboundaryEvidence;
    }
    if let Some(q) = &ev.quasi {
        if phi.dim() == 1 && q.generators.len() >= 2 && !commensurable(session, &q.generators[0][0], &q.generators[1][0]) {
            return Verdict::ErgodicEvidence;
        }
        let approx: Vec<Vec<f64>> = q.generators.iter().map(|g| g.iter().map(|x| session.to_f64(x)).collect()).collect();
        if !approx.is_empty() && rank_f64(&approx, phi.dim()) == phi.dim() {
            return Verdict::RegularEvidence(q.generators.clone());
        }
    }
    if only_zero && (ev.obstructed || ev.tightness.is_some()) {
        return Verdict::NonRegularSuspect;
    }
    Verdict::Inconclusive
}

/// Runs normalisation, the diagonal quotient for affine input, rationality,
/// rational reduction, wsd, clusters, the `qn00` regime, a quasi-period scan
/// along a converging subsequence, and a tightness probe, then decides:
///
/// 1. no discontinuity left, or only the zero quasi-period, a tight probe
///    and no Ostrowski obstruction: `CoboundaryEvidence`;
/// 2. `d = 1` with two incommensurable essential-value candidates, or a
///    `qn00` concentration near `±ρ`: `ErgodicEvidence`;
/// 3. essential-value candidates of full rank (reduction, wsd persisting to
///    the last scanned denominator, or the scan): `RegularEvidence`;
/// 4. only the zero quasi-period with a failed probe or an Ostrowski
///    obstruction, or any combination
///    `aφ¹ + bφ²` with that outcome: `NonRegularSuspect`;
/// 5. otherwise `Inconclusive`.
pub fn regularity_report(session: &Session, input: &ReportInput, config: &ReportConfig) -> Result<RegularityReport> {
    let th = &config.thresholds;
    let mut chain = Vec::new();
    let phi0 = match input {
        ReportInput::Step(p) => p.clone(),
        ReportInput::Affine(betas) => {
            let q = diagonal_quotient(session, betas)?;
            chain.push(Evidence { op: "diagonal_quotient".into(), params: format!("{} betas", betas.len()), summary: describe(&q) });
            q
        }
    };
    let (phi, transfers) = normalize_discontinuities(session, &phi0)?;
    chain.push(Evidence { op: "normalize".into(), params: String::new(), summary: format!("{} transfer(s); {}", transfers.len(), describe(&phi)) });
    let mut rep = RegularityReport {
        verdict: Verdict::Inconclusive,
        chain: Vec::new(),
        normalized: phi.clone(),
        quasi: None,
        reduction: None,
        wsd: None,
        clusters: None,
        qn00: None,
        tightness: None,
        obstruction: None,
        combinations: Vec::new(),
    };
    if phi.jumps().is_empty() {
        chain.push(Evidence { op: "verdict".into(), params: String::new(), summary: "no discontinuity after normalization".into() });
        rep.chain = chain;
        rep.verdict = Verdict::CoboundaryEvidence;
        return Ok(rep);
    }
    let d = phi.dim();
    let tract = tractable(session, &phi, th.depth, config.time_budget);
    let ns: Vec<usize> = tract.iter().map(|t| t.0).collect();

    let ra = rationality_analysis(session, &phi)?;
    chain.push(Evidence {
        op: "rationality".into(),
        params: String::new(),
        summary: match &ra.betas {
            Some(b) => format!("rational, multiplier {}, betas [{}]", ra.multiplier.as_ref().unwrap(), b.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(", ")),
            None => "not rational".into(),
        },
    });

    let quick = quick_scan(session, &phi, config, config.time_budget, &mut chain);

    if ra.all_rational {
        let params = format!("N={}, tau={}, delta={}", th.depth, th.tau, th.delta);
        rep.reduction = record(&mut chain, "rational_reduction", params, rational_reduction(session, &phi, th.depth, &th.tau, &th.delta), |r| {
            let thetas: Vec<String> = r.steps.iter().map(|s| format!("{:?}", s.theta.iter().map(|x| x.to_string()).collect::<Vec<_>>())).collect();
            format!("d(Phi)={} thetas [{}]{}", r.d, thetas.join(", "), r.failure.as_ref().map(|f| format!("; stopped: {f}")).unwrap_or_default())
        });
    }

    rep.wsd = record(&mut chain, "wsd_check", format!("n={ns:?}, c={}", th.c_threshold), wsd_check(session, &phi, &ns, &th.c_threshold), |w| {
        format!("subsequence {:?}; proposes regular: {}", w.subsequence, w.proposes_regular)
    });

    if phi.discontinuity_count() >= 3 {
        if let Some(&(n_last, ref q)) = tract.last() {
            let jumps = phi.jumps();
            let sep = separation_table(session, &(&jumps[0].at - &jumps[1].at), n_last, &th.c_threshold).ok();
            let shifts: Vec<i64> = (0..q.to_i64().unwrap().min(32)).collect();
            rep.clusters = record(
                &mut chain,
                "cluster_analysis",
                format!("n={n_last}, eps={}", th.eps_cluster),
                cluster_analysis(session, &phi, n_last, &th.eps_cluster, &shifts, sep.as_ref()),
                |c| format!("zero-sum proper cluster seen: {}; fires: {}", c.zero_proper_observed, c.fires),
            );
        }
    }

    if let Some(betas) = &ra.betas {
        let window = config.window.min(th.depth).max(1);
        let mut all_zero = true;
        for b in betas {
            let z = limit_set_diagnostic(session, b, th.depth, window, &th.tau).map(|r| r.verdict == LimitSet::ZeroEvidence).unwrap_or(false);
            all_zero &= z && b.as_integer_alpha_combination().is_none();
        }
        if all_zero {
            let dc = phi.discontinuity_count() as i64;
            let eta = rat(1, 16 * dc);
            let rho = &eta / BigInt::from(2);
            rep.qn00 = record(&mut chain, "qn00_scan", format!("eta={eta}, rho={rho}"), qn00_scan(session, &phi, &rho, &eta, &ns), |r| {
                format!("j0={}, {} row(s), qualifying {:?}", r.j0, r.rows.len(), r.qualifying)
            });
        }
    }

    rep.obstruction = record(&mut chain, "ostrowski_obstruction", format!("depth={}", th.depth), ostrowski_obstruction(session, &phi, th.depth), |o| {
        format!("depth {}, groupings {:?}, obstructed: {}", o.depth, o.examined, o.obstructed)
    });

    if d == 2 && config.grid > 0 {
        for a in -config.grid..=config.grid {
            for b in -config.grid..=config.grid {
                if (a, b) == (0, 0) || a < 0 || (a == 0 && b < 0) || a.gcd(&b) != 1 {
                    continue;
                }
                let row = vec![BigRational::from_integer(a.into()), BigRational::from_integer(b.into())];
                let Ok(combo) = phi.linear_image(session, &[row]) else { continue };
                let Ok((combo, _)) = normalize_discontinuities(session, &combo) else { continue };
                let mut sub = Vec::new();
                let ev = quick_scan(session, &combo, config, config.time_budget / 16, &mut sub);
                let v = quick_verdict(session, &combo, &ev);
                chain.push(Evidence { op: "combination".into(), params: format!("a={a}, b={b}"), summary: v.name().into() });
                rep.combinations.push(((a, b), v));
            }
        }
    }

    // Verdict.
    let only_zero = quick.quasi.as_ref().is_some_and(|q| q.only_zero());
    let tight = quick.tightness.as_ref().is_some_and(|t| t.tight);
    let mut gens: Vec<Vec<LinearForm>> = Vec::new();
    if let Some(r) = &rep.reduction {
        if r.d == d {
            if let Some(g) = r.generators() {
                gens = g.into_iter().map(|v| v.into_iter().map(LinearForm::constant).collect()).collect();
            }
        }
    }
    let wsd_persists = rep.wsd.as_ref().is_some_and(|w| {
        let half = ns.len() / 2;
        let in_tail = w.subsequence.iter().filter(|n| ns[half..].contains(n)).count();
        w.proposes_regular && ns.last().is_some_and(|l| w.subsequence.contains(l)) && in_tail >= 3
    });
    if gens.is_empty() && wsd_persists {
        gens = rep.wsd.as_ref().unwrap().candidates.clone();
    }
    if gens.is_empty() {
        if let Some(q) = &quick.quasi {
            gens = q.generators.clone();
        }
    }
    let approx: Vec<Vec<f64>> = gens.iter().map(|g| g.iter().map(|x| session.to_f64(x)).collect()).collect();
    let full_rank = !approx.is_empty() && rank_f64(&approx, d) == d;
    let dense = d == 1 && gens.len() >= 2 && !commensurable(session, &gens[0][0], &gens[1][0]);
    let qn00_hit = d == 1
        && rep.qn00.as_ref().is_some_and(|r| {
            let rho = rat_to_f64(&r.rho);
            r.rows.iter().any(|row| {
                session.compare(&row.measure_a, &LinearForm::ratio(1, 2)).is_ok_and(|o| o != Ordering::Less)
                    && row.heaviest_near(r.j0, 0.75 * rho, 0.5 * rho).is_some_and(|(_, m)| m >= 0.3)
            })
        });
    let combo_nonregular = rep.combinations.iter().any(|(_, v)| *v == Verdict::NonRegularSuspect);
    let obstructed = rep.obstruction.as_ref().is_some_and(|o| o.obstructed);
    rep.verdict = if only_zero && tight && !obstructed {
        Verdict::CoboundaryEvidence
    } else if dense || qn00_hit {
        Verdict::ErgodicEvidence
    } else if full_rank {
        Verdict::RegularEvidence(gens)
    } else if only_zero && (obstructed || quick.tightness.is_some()) || combo_nonregular {
        Verdict::NonRegularSuspect
    } else {
        Verdict::Inconclusive
    };
    chain.push(Evidence { op: "verdict".into(), params: String::new(), summary: rep.verdict.name().into() });
    rep.chain = chain;
    rep.quasi = quick.quasi;
    rep.tightness = quick.tightness;
    Ok(rep)
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
    fn limit_set_half_and_three_alpha() {
        let s = golden();
        let r = limit_set_diagnostic(&s, &LinearForm::ratio(1, 2), 30, 10, &rat(1, 1000)).unwrap();
        match r.verdict {
            LimitSet::NonzeroEvidence(p) => assert!(p.iter().any(|x| (x - 0.5).abs() < 1e-12)),
            v => panic!("{v:?}"),
        }
        let r = limit_set_diagnostic(&s, &LinearForm::alpha().scale_int(3), 30, 10, &rat(1, 1000)).unwrap();
        assert_eq!(r.verdict, LimitSet::ZeroEvidence);
    }

    #[test]
    fn limit_set_window_precondition() {
        let s = golden();
        assert!(limit_set_diagnostic(&s, &LinearForm::ratio(1, 2), 3, 5, &rat(1, 1000)).is_err());
    }

    #[test]
    fn half_indicator_quasi_periods() {
        let s = golden();
        let phi = half_indicator(&s);
        let times: Vec<i64> = convergents(s.alpha(), 14).iter().filter_map(|c| c.q.to_i64()).filter(|q| q % 2 == 1 && *q > 10).collect();
        let r = quasi_period_scan(&s, &phi, &times, &rat(1, 10), &[0.05]).unwrap();
        assert_eq!(r.persistent.len(), 2);
        assert_eq!(r.generators, vec![vec![LinearForm::int(1)]]);
    }

    #[test]
    fn coboundary_scan_only_zero() {
        let s = golden();
        let phi = StepCocycle::indicator(&s, &LinearForm::alpha()).unwrap();
        let times: Vec<i64> = convergents(s.alpha(), 14).iter().skip(6).filter_map(|c| c.q.to_i64()).collect();
        let r = quasi_period_scan(&s, &phi, &times, &rat(1, 20), &[0.05]).unwrap();
        assert!(r.only_zero());
        assert_eq!(r.candidates.len(), 1);
    }

    #[test]
    fn heavy_delta_gives_empty_report() {
        let s = golden();
        let r = quasi_period_scan(&s, &half_indicator(&s), &[13, 21], &rat(2, 1), &[0.05]).unwrap();
        assert!(r.persistent.is_empty() && r.candidates.is_empty());
    }

    #[test]
    fn witness_whole_space_and_far_value() {
        let s = golden();
        let phi = half_indicator(&s);
        let w = essential_value_witness(&s, &phi, &[LinearForm::zero()], &rat(1, 10), 0, 100).unwrap();
        assert!(w.all_witnessed());
        let w = essential_value_witness(&s, &phi, &[LinearForm::int(5)], &rat(1, 10), 1, 50).unwrap();
        assert_eq!(w.failures(), vec![0, 1]);
    }

    #[test]
    fn witness_one_depth_four() {
        let s = golden();
        let w = essential_value_witness(&s, &half_indicator(&s), &[LinearForm::int(1)], &rat(1, 10), 4, 10_000).unwrap();
        assert!(w.all_witnessed(), "{:?}", w.failures());
    }

    #[test]
    fn wsd_half_indicator() {
        let s = golden();
        let ns: Vec<usize> = (1..=16).collect();
        let r = wsd_check(&s, &half_indicator(&s), &ns, &rat(1, 100)).unwrap();
        assert!(r.subsequence.len() >= 5);
        assert!(r.candidates.contains(&vec![LinearForm::int(1)]));
        assert!(r.candidates.contains(&vec![LinearForm::int(-1)]));
        assert!(r.proposes_regular);
    }

    #[test]
    fn wsd_rejects_alpha_orbit_pair() {
        let s = golden();
        let phi = StepCocycle::indicator(&s, &LinearForm::alpha()).unwrap();
        assert!(matches!(wsd_check(&s, &phi, &[3], &rat(1, 100)), Err(Error::Precondition(_))));
    }

    #[test]
    fn example_two_sum_table() {
        let a = |c: i64, k: i64| ParamJump::new(BigRational::from_integer(c.into()), BigRational::from_integer(k.into()));
        let t = pair_cluster_table(&[a(0, 1), a(0, -1), a(-1, 0), a(1, 0)], &[(0, 1), (2, 3)]);
        let sums: Vec<ParamJump> = t.pair_sums.iter().map(|(_, s)| s.clone()).collect();
        assert_eq!(sums.len(), 4);
        for want in [a(-1, 1), a(1, 1), a(-1, -1), a(1, -1)] {
            assert!(sums.contains(&want));
        }
        assert_eq!(t.exceptional, Some(vec![rat(-1, 1), rat(1, 1)]));
        assert!(t.fires(&rat(2, 1)));
        assert!(!t.fires(&rat(1, 1)));
    }

    #[test]
    fn mesu_examples() {
        let s = golden();
        let phi = half_indicator(&s);
        let r = mesu_measure(&s, &phi, 5, 1).unwrap();
        assert!(r.bound_holds);
        let r = mesu_measure(&s, &phi, 5, 0).unwrap();
        assert_eq!(r.measure, LinearForm::int(1));
        let r = mesu_measure(&s, &phi, 2, 3).unwrap();
        assert_eq!(s.sign(&r.bound).unwrap(), Ordering::Less);
    }

    #[test]
    fn completion_examples() {
        let t = |v: &[i64]| v.iter().map(|x| BigInt::from(*x)).collect::<Vec<_>>();
        let m = basis_completion(&t(&[1, 1]), 0).unwrap();
        assert_eq!(mat_inverse(&m).is_some(), true);
        let m = basis_completion(&t(&[3, 4, 6]), 1).unwrap();
        assert_eq!(m[0][0], BigRational::one());
        let m = basis_completion(&t(&[2]), 0).unwrap();
        assert_eq!(m[0][0], rat(1, 2));
    }

    #[test]
    fn reduction_d1_and_d0() {
        let s = golden();
        let r = rational_reduction(&s, &half_indicator(&s), 20, &rat(1, 1000), &rat(1, 20)).unwrap();
        assert_eq!(r.d, 1);
        assert_eq!(r.m, vec![vec![BigRational::one()]]);
        assert_eq!(r.steps[0].theta, vec![BigInt::one()]);
        let phi = StepCocycle::indicator(&s, &(&LinearForm::alpha().scale_int(3) - &LinearForm::int(1))).unwrap();
        let r = rational_reduction(&s, &phi, 20, &rat(1, 1000), &rat(1, 20)).unwrap();
        assert_eq!(r.d, 0);
        assert_eq!(r.m, identity(1));
    }

    #[test]
    fn qn00_rejects_bad_parameters() {
        let s = golden();
        let phi = half_indicator(&s);
        assert!(qn00_scan(&s, &phi, &rat(1, 32), &rat(1, 32), &[3]).is_err());
        let phi = StepCocycle::indicator(&s, &(&LinearForm::alpha().scale_int(3) - &LinearForm::int(1))).unwrap();
        assert!(matches!(qn00_scan(&s, &phi, &rat(1, 128), &rat(1, 64), &[3]), Err(Error::Precondition(_))));
    }
}
