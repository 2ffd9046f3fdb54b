//! One function per subcommand. Each parses its arguments, calls the
//! library, and writes `<command>.json` (plus CSV tables) to the artifact
//! directory.

use std::path::PathBuf;

use num_traits::ToPrimitive;
use rotcocycle::arithmetic::{cf_identity_audit, convergents};
use rotcocycle::cocycles::{denjoy_koksma_audit, diagonal_line_check, pushforward, Atom, StepCocycle};
use rotcocycle::detect::{
    cluster_analysis, essential_value_witness, mesu_measure, qn00_scan, quasi_period_scan, rational_reduction, regularity_report, wsd_check,
    ClusterReport, LimitSet, LimitSetReport, ObstructionReport, Qn00Report, QuasiPeriodReport, ReductionResult, ReportInput, TightnessReport, Verdict,
    WsdReport,
};
use rotcocycle::orbits::{separation_table, three_distance_audit, weyl_equidistribution};
use rotcocycle::ostrowski::{
    coboundary_criterion, digit_vector, expand, guenais_parreau_check, reconstruct, verify_expansion, CoboundaryVerdict, DigitSource, SumTrace, Trend,
};
use rotcocycle::{BigRational, Session};
use serde_json::{json, Value};

use crate::config::SessionConfig;
use crate::out::{self, adaptive, exact, form, forms, rat, Artifacts};
use crate::spec::{parse_digit_rule, parse_form, parse_form_list, parse_int_rows, parse_phi, parse_rational, parse_usize_list, phi_from_config, Phi};
use crate::{build_session, effective_config, Cli, CliError, Command, EXIT_AUDIT, EXIT_OK};

struct Ctx {
    cfg: SessionConfig,
    session: Session,
    art: Artifacts,
}

impl Ctx {
    fn phi(&mut self) -> Result<Phi, CliError> {
        let p = self.cfg.phi.clone().ok_or_else(|| CliError::Usage("no --phi given".into()))?;
        phi_from_config(&mut self.session, &p)
    }

    fn step(&mut self) -> Result<StepCocycle, CliError> {
        self.phi()?.step()
    }

    fn q(&self, n: usize) -> Result<i64, CliError> {
        let cs = convergents(self.session.alpha(), n);
        let c = cs.get(n).ok_or_else(|| CliError::Usage(format!("alpha has no convergent of index {n}")))?;
        c.q.to_i64().ok_or_else(|| CliError::Usage(format!("q_{n} does not fit in 64 bits")))
    }
}

pub fn dispatch(cli: &Cli) -> Result<i32, CliError> {
    let cfg = effective_config(&cli.common)?;
    let session = build_session(&cfg)?;
    let dir = PathBuf::from(cfg.output.clone().unwrap_or_else(|| "rotcocycle-out".into()));
    let art = Artifacts::new(&dir)?;
    let mut ctx = Ctx { cfg, session, art };
    let status = match &cli.command {
        Command::Cf { depth } => cf(&ctx, *depth)?,
        Command::Orbit { n, x } => orbit(&ctx, *n, x)?,
        Command::Separation { beta, n_max, threshold } => separation(&ctx, beta, *n_max, threshold)?,
        Command::Weyl { betas, chars, max_norm, big_n } => weyl(&ctx, betas, chars.as_deref(), *max_norm, *big_n)?,
        Command::Pushforward { n, time } => pushforward_cmd(&mut ctx, *n, *time)?,
        Command::DkAudit { n } => dk_audit(&mut ctx, n)?,
        Command::Wsd { n } => wsd(&mut ctx, n)?,
        Command::Clusters { n, shifts } => clusters(&mut ctx, *n, shifts)?,
        Command::Mesu { n, q, ell } => mesu(&mut ctx, *n, *q, *ell)?,
        Command::Qn00 { rho, eta, n } => qn00(&mut ctx, rho, eta, n)?,
        Command::Ostrowski { beta, depth, ell, rule } => ostrowski(&ctx, beta.as_deref(), *depth, *ell, rule.as_deref())?,
        Command::GpCheck { jumps, points, partition, t, depth, k_max } => gp_check(&ctx, jumps, points, partition, t, *depth, *k_max)?,
        Command::Reduce { big_n } => reduce(&mut ctx, *big_n)?,
        Command::Witness { g, eps, partition_depth, n_max } => witness(&mut ctx, g, eps, *partition_depth, *n_max)?,
        Command::Scan { n, times, eps } => scan(&mut ctx, n.as_deref(), times.as_deref(), *eps)?,
        Command::Report => report(&mut ctx)?,
        Command::DiagLine { betas, n, samples } => diag_line(&ctx, betas, *n, *samples)?,
    };
    Ok(status)
}

fn alpha_name(ctx: &Ctx) -> String {
    ctx.cfg.alpha.clone().unwrap_or_default()
}

fn ints<T: ToString>(v: &[T]) -> Vec<String> {
    v.iter().map(T::to_string).collect()
}

fn interval_pair(v: &Value) -> (String, String) {
    (v[0].as_str().unwrap_or_default().to_string(), v[1].as_str().unwrap_or_default().to_string())
}

// ---------------------------------------------------------------------------
// Arithmetic and orbits

fn cf(ctx: &Ctx, depth: usize) -> Result<i32, CliError> {
    let audit = cf_identity_audit(ctx.session.alpha(), depth)?;
    let mut rows = Vec::new();
    let mut jrows = Vec::new();
    for r in &audit.rows {
        let (lo, hi) = r.norm.to_decimal_pair(out::DIGITS);
        let a = r.a.as_ref().map(|a| a.to_string()).unwrap_or_default();
        rows.push(vec![r.n.to_string(), a.clone(), r.p.to_string(), r.q.to_string(), lo.clone(), hi.clone()]);
        jrows.push(json!({
            "n": r.n, "a": a, "p": r.p.to_string(), "q": r.q.to_string(), "norm": [lo, hi],
            "determinant": r.determinant, "f1": r.f1, "f3": r.f3, "best_approximation": r.best_approximation,
        }));
    }
    let header = ints(&["n", "a_n", "p_n", "q_n", "norm_lo", "norm_hi"]);
    ctx.art.csv("cf.csv", &header, &rows)?;
    let pass = audit.all_pass();
    ctx.art.json("cf.json", "cf", json!({ "alpha": alpha_name(ctx), "depth": depth, "all_pass": pass, "rows": jrows }))?;
    println!("cf: {} rows, identities {}", rows.len(), if pass { "hold" } else { "FAIL" });
    Ok(if pass { EXIT_OK } else { EXIT_AUDIT })
}

fn orbit(ctx: &Ctx, n: usize, x: &str) -> Result<i32, CliError> {
    let s = &ctx.session;
    let x = parse_form(s, x)?;
    let a = three_distance_audit(s, n, &x)?;
    let pts = a.points();
    let rows: Vec<Vec<String>> = pts
        .iter()
        .zip(&a.order)
        .enumerate()
        .map(|(i, (p, k))| {
            let (lo, hi) = interval_pair(&out::interval(&s.enclose(p, 128)));
            vec![i.to_string(), k.to_string(), lo, hi]
        })
        .collect();
    ctx.art.csv("orbit.csv", &ints(&["rank", "k", "point_lo", "point_hi"]), &rows)?;
    ctx.art.json(
        "orbit.json",
        "orbit",
        json!({
            "alpha": alpha_name(ctx), "n": a.n, "q": a.q, "x": form(s, &a.x), "bins": a.bins,
            "distinct_gaps": forms(s, &a.distinct_gaps), "min_gap": adaptive(&a.min_gap), "max_gap": adaptive(&a.max_gap),
            "min_gap_backward": adaptive(&a.min_gap_backward), "passed": true,
        }),
    )?;
    println!("orbit: q = {}, {} distinct gaps, all parts pass", a.q, a.distinct_gaps.len());
    Ok(EXIT_OK)
}

fn separation(ctx: &Ctx, beta: &str, n_max: usize, threshold: &str) -> Result<i32, CliError> {
    let s = &ctx.session;
    let b = parse_form(s, beta)?;
    let t = separation_table(s, &b, n_max, &parse_rational(threshold)?)?;
    let mut rows = Vec::new();
    let mut jrows = Vec::new();
    for r in &t.rows {
        let (lo, hi) = interval_pair(&adaptive(&r.value));
        let (clo, chi) = interval_pair(&adaptive(&r.c));
        rows.push(vec![r.n.to_string(), r.q.to_string(), lo, hi, clo, chi, r.argmin.to_string()]);
        jrows.push(json!({ "n": r.n, "q": r.q.to_string(), "argmin": r.argmin, "min_dist": form(s, &r.min_dist), "c": adaptive(&r.c) }));
    }
    ctx.art.csv("separation.csv", &ints(&["n", "q_n", "value_lo", "value_hi", "c_lo", "c_hi", "argmin"]), &rows)?;
    ctx.art.json(
        "separation.json",
        "separation",
        json!({
            "alpha": alpha_name(ctx), "beta": form(s, &t.beta), "threshold": rat(&t.threshold), "member_flag": t.member_flag,
            "subsequence": t.subsequence, "observed_min_c": t.observed_min_c.as_ref().map(adaptive), "rows": jrows,
        }),
    )?;
    println!("separation: subsequence {:?}{}", t.subsequence, if t.member_flag { " (beta is in Z alpha + Z)" } else { "" });
    Ok(EXIT_OK)
}

fn characters(d: usize, max_norm: i64) -> Vec<Vec<i64>> {
    let mut out: Vec<Vec<i64>> = vec![Vec::new()];
    for _ in 0..d {
        out = out.into_iter().flat_map(|v| (-max_norm..=max_norm).map(move |x| [v.clone(), vec![x]].concat())).collect();
    }
    out.retain(|c| c.iter().any(|x| *x != 0) && c.iter().map(|x| x.abs()).sum::<i64>() <= max_norm);
    out
}

fn weyl(ctx: &Ctx, betas: &str, chars: Option<&str>, max_norm: i64, big_n: usize) -> Result<i32, CliError> {
    let s = &ctx.session;
    let bs = parse_form_list(s, betas)?;
    let cs = match chars {
        Some(c) => parse_int_rows(c)?,
        None => characters(bs.len(), max_norm),
    };
    let rows = weyl_equidistribution(s, &bs, &cs, big_n)?;
    let table: Vec<Vec<String>> = rows.iter().map(|r| vec![ints(&r.character).join(" "), format!("{:.12}", r.average), format!("{:.3e}", r.error)]).collect();
    ctx.art.csv("weyl.csv", &ints(&["character", "average", "error"]), &table)?;
    let j: Vec<Value> = rows.iter().map(|r| json!({ "character": r.character, "average": r.average, "error": r.error })).collect();
    ctx.art.json("weyl.json", "weyl", json!({ "alpha": alpha_name(ctx), "betas": forms(s, &bs), "N": big_n, "rows": j }))?;
    let worst = rows.iter().map(|r| r.average).fold(0.0, f64::max);
    println!("weyl: {} characters, largest average {worst:.6}", rows.len());
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------------------
// Cocycles

fn atom_table(s: &Session, atoms: &[Atom], d: usize) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header = Vec::new();
    for j in 0..d {
        header.push(format!("value{j}"));
        header.push(format!("value{j}_radius"));
    }
    header.push("mass".into());
    header.push("mass_approx".into());
    let rows = atoms
        .iter()
        .map(|a| {
            let mut r = Vec::new();
            for v in &a.value {
                let (c, rad) = out::centre_radius(s, v);
                r.push(c);
                r.push(rad);
            }
            r.push(exact(s, &a.mass));
            r.push(format!("{:.12}", s.to_f64(&a.mass)));
            r
        })
        .collect();
    (header, rows)
}

fn pushforward_cmd(ctx: &mut Ctx, n: Option<usize>, time: Option<i64>) -> Result<i32, CliError> {
    let phi = ctx.step()?;
    let t = match (n, time) {
        (Some(n), None) => ctx.q(n)?,
        (None, Some(t)) => t,
        _ => return Err(CliError::Usage("give exactly one of --n and --time".into())),
    };
    let s = &ctx.session;
    let pf = pushforward(s, &phi, t)?;
    let (h, rows) = atom_table(s, &pf.atoms, phi.dim());
    ctx.art.csv("pushforward_atoms.csv", &h, &rows)?;
    ctx.art.json(
        "pushforward.json",
        "pushforward",
        json!({
            "alpha": alpha_name(ctx), "time": pf.n, "atoms": pf.atoms.len(), "pieces": pf.pieces, "close_atoms": pf.close_atoms,
            "total_mass": exact(s, &pf.total_mass()), "atom_table": "pushforward_atoms.csv",
        }),
    )?;
    println!("pushforward: t = {t}, {} atoms", pf.atoms.len());
    Ok(EXIT_OK)
}

fn dk_audit(ctx: &mut Ctx, n: &str) -> Result<i32, CliError> {
    let phi = ctx.step()?;
    let ns = parse_usize_list(n)?;
    let s = &ctx.session;
    let r = denjoy_koksma_audit(s, &phi, &ns)?;
    let rows: Vec<Value> = r.rows.iter().map(|row| json!({ "n": row.n, "q": row.q, "max_abs": row.max_abs.iter().map(|v| exact(s, v)).collect::<Vec<_>>() })).collect();
    ctx.art.json("dk-audit.json", "dk-audit", json!({ "alpha": alpha_name(ctx), "variation": forms(s, &r.variation), "rows": rows, "passed": true }))?;
    println!("dk-audit: {} denominators, bound holds", r.rows.len());
    Ok(EXIT_OK)
}

fn wsd_json(s: &Session, w: &WsdReport) -> Value {
    let rows: Vec<Value> =
        w.rows.iter().map(|r| json!({ "n": r.n, "q": r.q, "points": r.points, "min_gap": form(s, &r.min_gap), "c": form(s, &r.c) })).collect();
    json!({
        "threshold": rat(&w.threshold), "subsequence": w.subsequence, "skipped": w.skipped, "proposes_regular": w.proposes_regular,
        "candidates": w.candidates.iter().map(|c| forms(s, c)).collect::<Vec<_>>(), "rows": rows,
    })
}

fn wsd(ctx: &mut Ctx, n: &str) -> Result<i32, CliError> {
    let phi = ctx.step()?;
    let ns = parse_usize_list(n)?;
    let th = ctx.cfg.report_config()?.thresholds;
    let w = wsd_check(&ctx.session, &phi, &ns, &th.c_threshold)?;
    ctx.art.json("wsd.json", "wsd", wsd_json(&ctx.session, &w))?;
    println!("wsd: subsequence {:?}, {} candidates", w.subsequence, w.candidates.len());
    Ok(EXIT_OK)
}

fn clusters_json(s: &Session, c: &ClusterReport) -> Value {
    let windows: Vec<Value> = c
        .windows
        .iter()
        .map(|w| {
            let cl: Vec<Value> = w
                .clusters
                .iter()
                .map(|k| {
                    let m: Vec<Value> = k.members.iter().map(|m| json!({ "kind": m.kind, "k": m.k, "scaled": m.scaled })).collect();
                    json!({ "members": m, "sigma": forms(s, &k.sigma) })
                })
                .collect();
            json!({ "shift": w.shift, "pattern": w.pattern, "clusters": cl })
        })
        .collect();
    json!({
        "n": c.n, "q": c.q, "eps_cluster": rat(&c.eps_cluster), "zero_proper_observed": c.zero_proper_observed,
        "all_proper_nonzero": c.all_proper_nonzero, "separated": c.separated, "fires": c.fires, "windows": windows,
    })
}

fn clusters(ctx: &mut Ctx, n: usize, shifts: &str) -> Result<i32, CliError> {
    let phi = ctx.step()?;
    let sh: Vec<i64> = parse_int_rows(shifts)?.concat();
    let th = ctx.cfg.report_config()?.thresholds;
    let c = cluster_analysis(&ctx.session, &phi, n, &th.eps_cluster, &sh, None)?;
    ctx.art.json("clusters.json", "clusters", clusters_json(&ctx.session, &c))?;
    println!("clusters: q = {}, criterion fires: {}", c.q, c.fires);
    Ok(EXIT_OK)
}

fn mesu(ctx: &mut Ctx, n: Option<usize>, q: Option<i64>, ell: i64) -> Result<i32, CliError> {
    let phi = ctx.step()?;
    let q = match (n, q) {
        (Some(n), None) => ctx.q(n)?,
        (None, Some(q)) => q,
        _ => return Err(CliError::Usage("give exactly one of --n and --q".into())),
    };
    let s = &ctx.session;
    let r = mesu_measure(s, &phi, q, ell)?;
    ctx.art.json(
        "mesu.json",
        "mesu",
        json!({ "q": r.q, "ell": r.ell, "measure": form(s, &r.measure), "eps": form(s, &r.eps), "bound": form(s, &r.bound), "bound_holds": r.bound_holds }),
    )?;
    println!("mesu: mu(A) = {:.9}, bound {:.9}", s.to_f64(&r.measure), s.to_f64(&r.bound));
    Ok(EXIT_OK)
}

fn qn00_json(s: &Session, r: &Qn00Report) -> Value {
    let rows: Vec<Value> = r
        .rows
        .iter()
        .map(|row| {
            let atoms: Vec<Value> = row.approx.iter().map(|(v, m)| json!({ "value": v, "mass": m })).collect();
            json!({
                "n": row.n, "q": row.q, "dist_beta": row.dist_beta, "ell": row.ell, "L": row.big_l,
                "measure_a": form(s, &row.measure_a), "mesu_bound": form(s, &row.mesu_bound), "atoms": atoms,
            })
        })
        .collect();
    let skipped: Vec<Value> = r.skipped.iter().map(|(n, why)| json!({ "n": n, "reason": why })).collect();
    json!({
        "rho": rat(&r.rho), "eta": rat(&r.eta), "multiplier": r.multiplier.to_string(), "j0": r.j0,
        "qualifying": r.qualifying, "rows": rows, "skipped": skipped,
    })
}

fn qn00(ctx: &mut Ctx, rho: &str, eta: &str, n: &str) -> Result<i32, CliError> {
    let phi = ctx.step()?;
    let ns = parse_usize_list(n)?;
    let r = qn00_scan(&ctx.session, &phi, &parse_rational(rho)?, &parse_rational(eta)?, &ns)?;
    ctx.art.json("qn00.json", "qn00", qn00_json(&ctx.session, &r))?;
    println!("qn00: qualifying {:?}, {} rows", r.qualifying, r.rows.len());
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------------------
// Ostrowski

fn trend_name(t: Trend) -> &'static str {
    match t {
        Trend::Converging => "converging",
        Trend::Diverging => "diverging",
        Trend::Unclear => "unclear",
    }
}

fn trace_json(t: &SumTrace) -> Value {
    json!({ "partial_sums": t.partial_sums, "trend": trend_name(t.trend) })
}

fn ostrowski(ctx: &Ctx, beta: Option<&str>, depth: usize, ell: Option<u64>, rule: Option<&str>) -> Result<i32, CliError> {
    let s = &ctx.session;
    let mut body = serde_json::Map::new();
    body.insert("alpha".into(), json!(alpha_name(ctx)));
    let exp = match beta {
        Some(b) => {
            let b = parse_form(s, b)?;
            let e = expand(s, &b, depth)?;
            verify_expansion(s, &e)?;
            let residuals: Vec<Value> = e.residuals.iter().map(|r| out::interval(&s.enclose(r, 128))).collect();
            let rec = reconstruct(s, &e, e.depth())?;
            body.insert(
                "expansion".into(),
                json!({
                    "beta": form(s, &e.beta), "shift": e.shift, "depth": e.depth(), "digits": ints(&e.digits),
                    "partial_quotients": ints(&e.partial_quotients), "residuals": residuals,
                    "decay": e.decay.iter().map(rat).collect::<Vec<_>>(), "reconstruction": adaptive(&rec),
                }),
            );
            println!("ostrowski: digits {}", ints(&e.digits).join(" "));
            Some(e)
        }
        None => None,
    };
    if let Some(ell) = ell {
        let source = match (rule, &exp) {
            (Some(r), _) => DigitSource::Rule(parse_digit_rule(r)?),
            (None, Some(e)) => DigitSource::Expansion(e),
            (None, None) => return Err(CliError::Usage("the criterion needs --beta or --rule".into())),
        };
        let r = coboundary_criterion(s, ell, &source)?;
        let verdict = match r.verdict {
            CoboundaryVerdict::EvidenceCoboundary => "EvidenceCoboundary",
            CoboundaryVerdict::EvidenceNotCoboundary => "EvidenceNotCoboundary",
            CoboundaryVerdict::Inconclusive => "Inconclusive",
        };
        body.insert(
            "coboundary".into(),
            json!({
                "ell": r.ell, "verdict": verdict, "decided_from_rule": r.decided_from_rule, "finite_depth_only": r.finite_depth_only,
                "precondition": r.precondition, "admissible": r.admissible, "partial_sums": r.partial_sums.iter().map(rat).collect::<Vec<_>>(),
                "trend": trend_name(r.trend), "reason": r.reason,
            }),
        );
        println!("ostrowski: criterion {verdict} ({})", r.reason);
    } else if exp.is_none() {
        return Err(CliError::Usage("give --beta, or --ell with --rule".into()));
    }
    ctx.art.json("ostrowski.json", "ostrowski", Value::Object(body))?;
    Ok(EXIT_OK)
}

fn gp_check(ctx: &Ctx, jumps: &str, points: &str, partition: &str, t: &str, depth: usize, k_max: i64) -> Result<i32, CliError> {
    let s = &ctx.session;
    let js = parse_form_list(s, jumps)?;
    let ps = parse_form_list(s, points)?;
    let part: Vec<Vec<usize>> =
        parse_int_rows(partition)?.into_iter().map(|r| r.into_iter().map(|x| usize::try_from(x).map_err(|_| CliError::Usage("negative index".into()))).collect()).collect::<Result<_, _>>()?;
    let digits = ps.iter().map(|p| expand(s, p, depth).map(|e| digit_vector(&e))).collect::<Result<Vec<_>, _>>()?;
    let r = guenais_parreau_check(s, &js, &ps, &part, &digits, &parse_form(s, t)?, depth, k_max)?;
    let atoms: Vec<Value> = r
        .atoms
        .iter()
        .map(|a| {
            json!({
                "members": a.members, "jump_sum": form(s, &a.jump_sum), "integral": a.integral,
                "digit_sums": a.digit_sums.iter().map(trace_json).collect::<Vec<_>>(), "mixed_sum": trace_json(&a.mixed_sum),
                "expansion_residual": forms(s, &a.expansion_residual), "t_j": a.t_j.as_ref().map(|f| form(s, f)),
            })
        })
        .collect();
    let k = r.k_prime.map(|(k, ex)| json!({ "k": k, "exact": ex }));
    ctx.art.json(
        "gp-check.json",
        "gp-check",
        json!({
            "condition_i": r.condition_i, "condition_ii": r.condition_ii.iter().map(|t| trend_name(*t)).collect::<Vec<_>>(),
            "k_prime": k, "atoms": atoms,
        }),
    )?;
    println!("gp-check: (i) {}, (iii) k' = {:?}", r.condition_i, r.k_prime.map(|x| x.0));
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------------------
// Detection

fn matrix(m: &[Vec<BigRational>]) -> Value {
    json!(m.iter().map(|r| r.iter().map(rat).collect::<Vec<_>>()).collect::<Vec<_>>())
}

fn limit_json(l: &LimitSetReport) -> Value {
    let verdict = match &l.verdict {
        LimitSet::NonzeroEvidence(v) => json!({ "nonzero": v }),
        LimitSet::ZeroEvidence => json!("zero"),
        LimitSet::Inconclusive => json!("inconclusive"),
    };
    let rows: Vec<Value> = l.rows.iter().map(|r| json!({ "n": r.n, "q": r.q.to_string(), "value": out::interval(&r.value) })).collect();
    json!({ "verdict": verdict, "rows": rows })
}

fn reduction_json(s: &Session, r: &ReductionResult) -> Value {
    let steps: Vec<Value> = r
        .steps
        .iter()
        .map(|st| {
            json!({
                "j0": st.j0, "subsequence": st.subsequence, "theta": ints(&st.theta),
                "atoms": [ints(&st.atoms.0), ints(&st.atoms.1)], "basis_change": matrix(&st.basis_change),
            })
        })
        .collect();
    let residual: Vec<Value> =
        r.residual.iter().map(|t| json!({ "coordinate": t.coordinate, "beta": form(s, &t.beta), "limit": limit_json(&t.limit) })).collect();
    json!({
        "d": r.d, "multiplier": r.multiplier.to_string(), "m": matrix(&r.m), "steps": steps, "residual": residual,
        "failure": r.failure, "generators": r.generators().map(|g| matrix(&g)),
    })
}

fn reduce(ctx: &mut Ctx, big_n: usize) -> Result<i32, CliError> {
    let phi = ctx.step()?;
    let th = ctx.cfg.report_config()?.thresholds;
    let r = rational_reduction(&ctx.session, &phi, big_n, &th.tau, &th.delta)?;
    ctx.art.json("reduce.json", "reduce", reduction_json(&ctx.session, &r))?;
    println!("reduce: d(Phi) = {}", r.d);
    Ok(EXIT_OK)
}

fn witness(ctx: &mut Ctx, g: &str, eps: &str, depth: u32, n_max: Option<i64>) -> Result<i32, CliError> {
    let phi = ctx.step()?;
    let s = &ctx.session;
    let g = parse_form_list(s, g)?;
    let n_max = match n_max {
        Some(n) => n,
        None => ctx.cfg.report_config()?.thresholds.n_max,
    };
    let w = essential_value_witness(s, &phi, &g, &parse_rational(eps)?, depth, n_max)?;
    let cells: Vec<Value> = w
        .per_a
        .iter()
        .enumerate()
        .map(|(i, h)| match h {
            Some(h) => json!({ "cell": i, "n": h.n, "measure": exact(s, &h.measure) }),
            None => json!({ "cell": i, "n": null, "measure": null }),
        })
        .collect();
    ctx.art.json(
        "witness.json",
        "witness",
        json!({ "g": forms(s, &w.g), "eps": rat(&w.eps), "partition_depth": w.depth, "N_max": n_max, "searched": w.searched.len(), "all_witnessed": w.all_witnessed(), "cells": cells }),
    )?;
    println!("witness: {}/{} sets witnessed", w.per_a.iter().flatten().count(), w.per_a.len());
    Ok(EXIT_OK)
}

fn quasi_json(s: &Session, q: &QuasiPeriodReport) -> Value {
    let persistent: Vec<Value> = q
        .persistent
        .iter()
        .map(|p| json!({ "value": forms(s, &p.value), "eps": p.eps, "masses": p.masses.iter().map(|m| exact(s, m)).collect::<Vec<_>>() }))
        .collect();
    json!({
        "times": q.times, "tail_start": q.tail_start, "delta": rat(&q.delta), "persistent": persistent,
        "candidates": q.candidates.iter().map(|c| forms(s, c)).collect::<Vec<_>>(),
        "generators": q.generators.iter().map(|c| forms(s, c)).collect::<Vec<_>>(),
    })
}

fn scan(ctx: &mut Ctx, n: Option<&str>, times: Option<&str>, eps: f64) -> Result<i32, CliError> {
    let phi = ctx.step()?;
    let ts: Vec<i64> = match (n, times) {
        (Some(n), None) => parse_usize_list(n)?.into_iter().map(|n| ctx.q(n)).collect::<Result<_, _>>()?,
        (None, Some(t)) => parse_int_rows(t)?.concat(),
        _ => return Err(CliError::Usage("give exactly one of --n and --times".into())),
    };
    let th = ctx.cfg.report_config()?.thresholds;
    let s = &ctx.session;
    let q = quasi_period_scan(s, &phi, &ts, &th.delta, &vec![eps; phi.dim()])?;
    if let Some(last) = q.per_time.last() {
        let (h, rows) = atom_table(s, &last.atoms, phi.dim());
        ctx.art.csv("scan_atoms.csv", &h, &rows)?;
    }
    ctx.art.json("scan.json", "scan", quasi_json(s, &q))?;
    println!("scan: {} persistent atoms, {} generators", q.persistent.len(), q.generators.len());
    Ok(EXIT_OK)
}

fn tightness_json(t: &TightnessReport) -> Value {
    let rows: Vec<Value> = t.rows.iter().map(|r| json!({ "time": r.time, "tail_mass": r.tail_mass })).collect();
    json!({ "bound": t.bound, "tight": t.tight, "rows": rows })
}

fn obstruction_json(o: &ObstructionReport) -> Value {
    json!({ "depth": o.depth, "passing": o.passing, "examined": o.examined, "obstructed": o.obstructed })
}

fn report(ctx: &mut Ctx) -> Result<i32, CliError> {
    let input = match ctx.phi()? {
        Phi::Step(p) => ReportInput::Step(p),
        Phi::Affine(b) => ReportInput::Affine(b),
    };
    let rc = ctx.cfg.report_config()?;
    let s = &ctx.session;
    let r = regularity_report(s, &input, &rc)?;
    let mut files: Vec<(&str, String)> = Vec::new();
    let mut section = |op: &'static str, v: Option<Value>| -> Result<(), CliError> {
        if let Some(v) = v {
            let name = format!("report_{op}.json");
            ctx.art.json(&name, op, v)?;
            files.push((op, name));
        }
        Ok(())
    };
    section("quasi_period_scan", r.quasi.as_ref().map(|q| quasi_json(s, q)))?;
    section("rational_reduction", r.reduction.as_ref().map(|x| reduction_json(s, x)))?;
    section("wsd_check", r.wsd.as_ref().map(|x| wsd_json(s, x)))?;
    section("cluster_analysis", r.clusters.as_ref().map(|x| clusters_json(s, x)))?;
    section("qn00_scan", r.qn00.as_ref().map(|x| qn00_json(s, x)))?;
    section("tightness_probe", r.tightness.as_ref().map(tightness_json))?;
    section("ostrowski_obstruction", r.obstruction.as_ref().map(obstruction_json))?;
    if let Some(last) = r.quasi.as_ref().and_then(|q| q.per_time.last()) {
        let (h, rows) = atom_table(s, &last.atoms, r.normalized.dim());
        ctx.art.csv("report_atoms.csv", &h, &rows)?;
    }
    let chain: Vec<Value> = r
        .chain
        .iter()
        .map(|e| {
            let path = files.iter().find(|(op, _)| *op == e.op).map(|(_, f)| f.clone());
            json!({ "op": e.op, "params": e.params, "summary": e.summary, "artifacts-path": path })
        })
        .collect();
    let generators = match &r.verdict {
        Verdict::RegularEvidence(g) => Some(g.iter().map(|v| forms(s, v)).collect::<Vec<_>>()),
        _ => None,
    };
    let combos: Vec<Value> = r.combinations.iter().map(|((a, b), v)| json!({ "a": a, "b": b, "verdict": v.name() })).collect();
    ctx.art.json(
        "report.json",
        "report",
        json!({ "alpha": alpha_name(ctx), "verdict": r.verdict.name(), "generators": generators, "chain": chain, "combinations": combos }),
    )?;
    println!("report: {}", r.verdict.name());
    Ok(EXIT_OK)
}

fn diag_line(ctx: &Ctx, betas: &str, n: usize, samples: usize) -> Result<i32, CliError> {
    let seed = ctx.cfg.seed.ok_or_else(|| CliError::Usage("diag-line samples points and needs --seed".into()))?;
    let s = &ctx.session;
    let bs = match parse_phi(s, &format!("psi_affine({betas})")) {
        Ok(Phi::Affine(b)) => b,
        _ => parse_form_list(s, betas)?,
    };
    let r = diagonal_line_check(s, &bs, n, samples, seed)?;
    let mut header = vec!["x".to_string()];
    header.extend((0..bs.len()).map(|j| format!("residual{j}")));
    let rows: Vec<Vec<String>> = r.samples.iter().map(|sm| [vec![rat(&sm.x)], ints(&sm.residual)].concat()).collect();
    ctx.art.csv("diag-line.csv", &header, &rows)?;
    ctx.art.json(
        "diag-line.json",
        "diag-line",
        json!({ "alpha": alpha_name(ctx), "betas": forms(s, &bs), "n": r.n, "q": r.q.to_string(), "seed": seed, "samples": r.samples.len(), "failures": 0 }),
    )?;
    println!("diag-line: {} samples at q = {}, all integer", r.samples.len(), r.q);
    Ok(EXIT_OK)
}
