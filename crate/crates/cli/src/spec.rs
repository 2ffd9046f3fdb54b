//! Text grammars: partial quotients, rationals, linear forms, symbol
//! registrations, digit rules and cocycle shorthands.

use num_traits::{One, Zero};
use rotcocycle::cocycles::{diagonal_quotient, make_step, Piece, StepCocycle};
use rotcocycle::ostrowski::{theta_sum, DigitPattern};
use rotcocycle::{BigInt, BigRational, BigUint, LinearForm, PartialQuotients, RealSource, Session};

use crate::config::{CocycleSpec, FormSpec, PhiConfig, SymSpec};
use crate::CliError;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn bracketed(s: &str) -> Result<&str, CliError> {
    s.trim().strip_prefix('[').and_then(|t| t.strip_suffix(']')).ok_or_else(|| usage(format!("expected [..] list, got `{s}`")))
}

fn u64_list(s: &str) -> Result<Vec<u64>, CliError> {
    let body = bracketed(s)?;
    if body.trim().is_empty() {
        return Ok(Vec::new());
    }
    body.split(',').map(|x| x.trim().parse::<u64>().map_err(|_| usage(format!("bad integer `{x}`")))).collect()
}

fn bigint_list(s: &str) -> Result<Vec<BigInt>, CliError> {
    let body = bracketed(s)?;
    if body.trim().is_empty() {
        return Ok(Vec::new());
    }
    body.split(',').map(|x| x.trim().parse::<BigInt>().map_err(|_| usage(format!("bad integer `{x}`")))).collect()
}

/// `golden`, `sqrt2m1`, `periodic:[..]`, `list:[..]`, `formula:poly:c0,c1,..`, `formula:pow2`.
pub fn parse_alpha(s: &str) -> Result<PartialQuotients, CliError> {
    let s = s.trim();
    match s {
        "golden" => return Ok(PartialQuotients::golden()),
        "sqrt2m1" => return Ok(PartialQuotients::sqrt2m1()),
        "formula:pow2" => return Ok(PartialQuotients::pow2()),
        _ => {}
    }
    if let Some(rest) = s.strip_prefix("periodic:") {
        let period = u64_list(rest)?;
        if period.is_empty() || period.contains(&0) {
            return Err(usage("periodic digits must be positive and nonempty"));
        }
        return Ok(PartialQuotients::periodic(&[], &period));
    }
    if let Some(rest) = s.strip_prefix("list:") {
        let digits = u64_list(rest)?;
        if digits.contains(&0) {
            return Err(usage("list digits must be positive"));
        }
        return Ok(PartialQuotients::list(&digits));
    }
    if let Some(rest) = s.strip_prefix("formula:poly:") {
        let coeffs = rest.split(',').map(parse_rational).collect::<Result<Vec<_>, _>>()?;
        return Ok(PartialQuotients::poly(coeffs));
    }
    Err(usage(format!("unknown partial-quotient spec `{s}`")))
}

/// `p`, `p/q` or a finite decimal.
pub fn parse_rational(s: &str) -> Result<BigRational, CliError> {
    let s = s.trim();
    let bad = || usage(format!("bad rational `{s}`"));
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(p, q));
    }
    if let Some((ip, fp)) = s.split_once('.') {
        let neg = ip.starts_with('-');
        let ip = ip.trim_start_matches(['-', '+']);
        let digits = format!("{}{fp}", if ip.is_empty() { "0" } else { ip });
        let n: BigInt = digits.parse().map_err(|_| bad())?;
        let r = BigRational::new(n, num_traits::pow(BigInt::from(10), fp.len()));
        return Ok(if neg { -r } else { r });
    }
    Ok(BigRational::from_integer(s.parse().map_err(|_| bad())?))
}

// ---------------------------------------------------------------------------
// Linear forms

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(String),
    Ident(String),
    Op(char),
}

fn tokenize(s: &str) -> Result<Vec<Tok>, CliError> {
    let mut out = Vec::new();
    let cs: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < cs.len() {
        let c = cs[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let st = i;
            while i < cs.len() && (cs[i].is_ascii_digit() || cs[i] == '.') {
                i += 1;
            }
            out.push(Tok::Num(cs[st..i].iter().collect()));
        } else if c.is_alphabetic() || c == '_' {
            let st = i;
            while i < cs.len() && (cs[i].is_alphanumeric() || cs[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(cs[st..i].iter().collect()));
        } else if "+-*/(),".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else {
            return Err(usage(format!("unexpected `{c}` in `{s}`")));
        }
    }
    Ok(out)
}

struct FormParser<'a> {
    toks: Vec<Tok>,
    pos: usize,
    session: &'a Session,
    src: &'a str,
}

impl FormParser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Op(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn err(&self, what: &str) -> CliError {
        usage(format!("{what} in form `{}`", self.src))
    }

    fn expr(&mut self) -> Result<LinearForm, CliError> {
        self.eat('+');
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                acc += &self.term()?;
            } else if self.eat('-') {
                acc -= &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<LinearForm, CliError> {
        let mut acc = self.factor()?;
        loop {
            if self.eat('*') {
                let f = self.factor()?;
                acc = acc.mul_form(&f).ok_or_else(|| self.err("product of two irrational terms"))?;
            } else if self.eat('/') {
                let f = self.factor()?;
                let r = f.as_rational().filter(|r| !r.is_zero()).ok_or_else(|| self.err("division by a non-rational or zero"))?;
                acc = acc.scale(&(BigRational::one() / r));
            } else {
                return Ok(acc);
            }
        }
    }

    fn index_arg(&mut self) -> Result<usize, CliError> {
        if !self.eat('(') {
            return Err(self.err("expected `(`"));
        }
        let n = match self.toks.get(self.pos) {
            Some(Tok::Num(s)) => s.parse::<usize>().map_err(|_| self.err("bad index"))?,
            _ => return Err(self.err("expected an index")),
        };
        self.pos += 1;
        if !self.eat(')') {
            return Err(self.err("expected `)`"));
        }
        Ok(n)
    }

    fn factor(&mut self) -> Result<LinearForm, CliError> {
        match self.toks.get(self.pos).cloned() {
            Some(Tok::Num(s)) => {
                self.pos += 1;
                Ok(LinearForm::constant(parse_rational(&s)?))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                match name.as_str() {
                    "theta" => {
                        let n = self.index_arg()?;
                        Ok(self.session.theta(n))
                    }
                    "theta_sum" => {
                        let n = self.index_arg()?;
                        Ok(theta_sum(self.session, n))
                    }
                    _ => self.session.lookup(&name).map_err(|_| self.err(&format!("unknown symbol `{name}`"))),
                }
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(self.err("expected `)`"));
                }
                Ok(e)
            }
            Some(Tok::Op('-')) => {
                self.pos += 1;
                Ok(-self.factor()?)
            }
            _ => Err(self.err("expected a number, symbol or `(`")),
        }
    }
}

/// Rational combination of `alpha`, registered names, `theta(n)` and
/// `theta_sum(n)`, e.g. `2*alpha - 1`, `b + 1/3`, `(alpha + 1)/2`.
pub fn parse_form(session: &Session, s: &str) -> Result<LinearForm, CliError> {
    let mut p = FormParser { toks: tokenize(s)?, pos: 0, session, src: s };
    if p.toks.is_empty() {
        return Err(usage("empty form"));
    }
    let f = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(p.err("trailing input"));
    }
    Ok(f)
}

pub fn parse_form_list(session: &Session, s: &str) -> Result<Vec<LinearForm>, CliError> {
    split_top(s).iter().map(|x| parse_form(session, x)).collect()
}

pub fn form_from_spec(session: &Session, f: &FormSpec) -> Result<LinearForm, CliError> {
    match f {
        FormSpec::Text(s) => parse_form(session, s),
        FormSpec::Coeffs { rat, alpha_coeff, beta_coeffs } => {
            let mut acc = LinearForm::constant(parse_rational(rat)?);
            acc += &LinearForm::alpha().scale(&parse_rational(alpha_coeff)?);
            for (name, c) in beta_coeffs {
                let b = session.lookup(name).map_err(|_| usage(format!("unknown symbol `{name}`")))?;
                acc += &b.scale(&parse_rational(c)?);
            }
            Ok(acc)
        }
    }
}

// ---------------------------------------------------------------------------
// Symbol registrations

/// Registers `name` according to `value`:
/// `indep:sqrt2m1`, `indep:surd:a,b,d,c` for `(a + b√d)/c`, `indep:cf:<alpha spec>`,
/// `surrogate:digits:[b0,..]` for `Σ b_nθ_n`, `surrogate:<form>`, or a plain
/// form, which declares `name` equal to it.
pub fn register(session: &mut Session, sym: &SymSpec) -> Result<LinearForm, CliError> {
    let SymSpec { name, value } = sym;
    if name.is_empty() || !name.chars().all(|c| c.is_alphanumeric() || c == '_') || name.starts_with(|c: char| c.is_ascii_digit()) {
        return Err(usage(format!("bad symbol name `{name}`")));
    }
    if ["theta", "theta_sum"].contains(&name.as_str()) {
        return Err(usage(format!("`{name}` is reserved")));
    }
    let v = value.trim();
    let r = if let Some(src) = v.strip_prefix("indep:") {
        let source = if src == "sqrt2m1" {
            RealSource::sqrt2_minus_1()
        } else if let Some(rest) = src.strip_prefix("surd:") {
            let parts: Vec<&str> = rest.split(',').collect();
            let [a, b, d, c] = parts[..] else { return Err(usage("surd needs a,b,d,c")) };
            let p = |x: &str| x.trim().parse::<BigInt>().map_err(|_| usage(format!("bad integer `{x}`")));
            let d: BigUint = d.trim().parse().map_err(|_| usage(format!("bad integer `{d}`")))?;
            let c = p(c)?;
            if c.is_zero() {
                return Err(usage("surd denominator is zero"));
            }
            RealSource::QuadraticSurd { a: p(a)?, b: p(b)?, d, c }
        } else if let Some(rest) = src.strip_prefix("cf:") {
            RealSource::ContinuedFraction(parse_alpha(rest)?)
        } else {
            return Err(usage(format!("unknown independent source `{src}`")));
        };
        session.independent(name, source)
    } else if let Some(rest) = v.strip_prefix("surrogate:") {
        let value = if let Some(ds) = rest.strip_prefix("digits:") {
            let digits = bigint_list(ds)?;
            digits.iter().enumerate().fold(LinearForm::zero(), |acc, (n, b)| &acc + &session.theta(n).scale_big(b))
        } else {
            parse_form(session, rest)?
        };
        session.surrogate(name, value)
    } else {
        let f = parse_form(session, v)?;
        session.declare(name, f)
    };
    r.map_err(CliError::Lib)
}

/// `NAME=VALUE` as given on the command line.
pub fn parse_sym_arg(s: &str) -> Result<SymSpec, CliError> {
    let (n, v) = s.split_once('=').ok_or_else(|| usage(format!("expected NAME=VALUE, got `{s}`")))?;
    Ok(SymSpec { name: n.trim().to_string(), value: v.trim().to_string() })
}

// ---------------------------------------------------------------------------
// Digit rules

/// `const:c`, `list:[..]`, `alternating:[..]`, `formula:k=<rat>,c=<int>,mask=<0/1 string>`.
pub fn parse_digit_rule(s: &str) -> Result<DigitPattern, CliError> {
    let s = s.trim();
    if let Some(c) = s.strip_prefix("const:") {
        return Ok(DigitPattern::Const(c.trim().parse().map_err(|_| usage(format!("bad integer `{c}`")))?));
    }
    if let Some(l) = s.strip_prefix("list:") {
        return Ok(DigitPattern::List(bigint_list(l)?));
    }
    if let Some(l) = s.strip_prefix("alternating:") {
        let v = bigint_list(l)?;
        if v.is_empty() {
            return Err(usage("alternating rule needs at least one digit"));
        }
        return Ok(DigitPattern::Alternating(v));
    }
    if let Some(f) = s.strip_prefix("formula:") {
        let (mut k, mut c, mut mask) = (BigRational::one(), BigInt::zero(), Vec::new());
        for part in f.split(',') {
            let (key, val) = part.split_once('=').ok_or_else(|| usage(format!("bad formula field `{part}`")))?;
            match key.trim() {
                "k" => k = parse_rational(val)?,
                "c" => c = val.trim().parse().map_err(|_| usage(format!("bad integer `{val}`")))?,
                "mask" => {
                    mask = val
                        .trim()
                        .chars()
                        .map(|ch| match ch {
                            '0' => Ok(false),
                            '1' => Ok(true),
                            _ => Err(usage(format!("bad mask `{val}`"))),
                        })
                        .collect::<Result<_, _>>()?
                }
                other => return Err(usage(format!("unknown formula field `{other}`"))),
            }
        }
        return Ok(DigitPattern::Formula { k, c, mask });
    }
    Err(usage(format!("unknown digit rule `{s}`")))
}

// ---------------------------------------------------------------------------
// Cocycles

/// Splits `a, f(b, c), d` at top-level commas.
pub fn split_top(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for c in s.chars() {
        match c {
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => depth -= 1,
            ',' if depth == 0 => {
                out.push(cur.trim().to_string());
                cur.clear();
                continue;
            }
            _ => {}
        }
        cur.push(c);
    }
    if !cur.trim().is_empty() || !out.is_empty() {
        out.push(cur.trim().to_string());
    }
    out
}

fn call(s: &str) -> Option<(&str, &str)> {
    let s = s.trim();
    let open = s.find('(')?;
    let body = s[open + 1..].strip_suffix(')')?;
    Some((s[..open].trim(), body))
}

#[derive(Clone, Debug)]
pub enum Phi {
    Step(StepCocycle),
    /// `β`'s of the piecewise-affine `Ψ`.
    Affine(Vec<LinearForm>),
}

impl Phi {
    pub fn step(self) -> Result<StepCocycle, CliError> {
        match self {
            Phi::Step(p) => Ok(p),
            Phi::Affine(_) => Err(usage("this command needs a step cocycle; psi_affine(..) is accepted by `report` and `diag-line`")),
        }
    }
}

/// `indicator(b)`, `phi_d(b1,..)`, `psi_affine(b1,..)`, `shift(P, s)`,
/// `concat(P, Q, ..)`, `add(P, Q)`, `sub(P, Q)`, `scale(P, r)`.
pub fn parse_phi(session: &Session, s: &str) -> Result<Phi, CliError> {
    let (name, body) = call(s).ok_or_else(|| usage(format!("bad cocycle shorthand `{s}`")))?;
    let args = split_top(body);
    let lib = CliError::Lib;
    let step = |x: &str| parse_phi(session, x).and_then(Phi::step);
    let need = |k: usize| if args.len() == k { Ok(()) } else { Err(usage(format!("`{name}` takes {k} arguments"))) };
    Ok(match name {
        "indicator" => {
            need(1)?;
            Phi::Step(StepCocycle::indicator(session, &parse_form(session, &args[0])?).map_err(lib)?)
        }
        "phi_d" => Phi::Step(diagonal_quotient(session, &parse_form_list(session, body)?).map_err(lib)?),
        "psi_affine" => Phi::Affine(parse_form_list(session, body)?),
        "shift" => {
            need(2)?;
            Phi::Step(step(&args[0])?.shifted(session, &parse_form(session, &args[1])?).map_err(lib)?)
        }
        "concat" => {
            let parts = args.iter().map(|a| step(a)).collect::<Result<Vec<_>, _>>()?;
            let refs: Vec<&StepCocycle> = parts.iter().collect();
            Phi::Step(StepCocycle::concat(session, &refs).map_err(lib)?)
        }
        "add" | "sub" => {
            need(2)?;
            let a = step(&args[0])?;
            let mut b = step(&args[1])?;
            if name == "sub" {
                let d = b.dim();
                let m: Vec<Vec<BigRational>> =
                    (0..d).map(|i| (0..d).map(|j| if i == j { -BigRational::one() } else { BigRational::zero() }).collect()).collect();
                b = b.linear_image(session, &m).map_err(lib)?;
            }
            Phi::Step(a.add(session, &b).map_err(lib)?)
        }
        "scale" => {
            need(2)?;
            let a = step(&args[0])?;
            let r = parse_rational(&args[1])?;
            let d = a.dim();
            let m: Vec<Vec<BigRational>> = (0..d).map(|i| (0..d).map(|j| if i == j { r.clone() } else { BigRational::zero() }).collect()).collect();
            Phi::Step(a.linear_image(session, &m).map_err(lib)?)
        }
        _ => return Err(usage(format!("unknown cocycle generator `{name}`"))),
    })
}

/// Registers the spec's relations, then builds the step cocycle.
pub fn cocycle_from_spec(session: &mut Session, spec: &CocycleSpec) -> Result<StepCocycle, CliError> {
    for r in &spec.relations {
        register(session, r)?;
    }
    let mut pieces = Vec::with_capacity(spec.pieces.len());
    for p in &spec.pieces {
        if p.value.len() != spec.d {
            return Err(usage(format!("piece value has {} entries, d = {}", p.value.len(), spec.d)));
        }
        let value = p.value.iter().map(|v| form_from_spec(session, v)).collect::<Result<Vec<_>, _>>()?;
        pieces.push(Piece::new(form_from_spec(session, &p.lo)?, form_from_spec(session, &p.hi)?, value));
    }
    make_step(session, spec.d, pieces).map_err(CliError::Lib)
}

pub fn phi_from_config(session: &mut Session, phi: &PhiConfig) -> Result<Phi, CliError> {
    match phi {
        PhiConfig::Shorthand(s) => parse_phi(session, s),
        PhiConfig::Spec(spec) => Ok(Phi::Step(cocycle_from_spec(session, spec)?)),
    }
}

/// `1,0;0,1` as a list of integer vectors.
pub fn parse_int_rows(s: &str) -> Result<Vec<Vec<i64>>, CliError> {
    s.split(';')
        .map(|row| row.split(',').map(|x| x.trim().parse::<i64>().map_err(|_| usage(format!("bad integer `{x}`")))).collect())
        .collect()
}

pub fn parse_usize_list(s: &str) -> Result<Vec<usize>, CliError> {
    if let Some((a, b)) = s.split_once("..=") {
        let a: usize = a.trim().parse().map_err(|_| usage(format!("bad range `{s}`")))?;
        let b: usize = b.trim().parse().map_err(|_| usage(format!("bad range `{s}`")))?;
        return Ok((a..=b).collect());
    }
    s.split(',').map(|x| x.trim().parse::<usize>().map_err(|_| usage(format!("bad index `{x}`")))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s() -> Session {
        Session::new(PartialQuotients::golden())
    }

    #[test]
    fn forms() {
        let s = s();
        assert_eq!(parse_form(&s, "2*alpha - 1").unwrap(), LinearForm::alpha().scale_int(2).add_int(-1));
        assert_eq!(parse_form(&s, "-(alpha+1)/2").unwrap(), (LinearForm::alpha().add_int(1)).scale(&BigRational::new((-1).into(), 2.into())));
        assert_eq!(parse_form(&s, "0.25").unwrap(), LinearForm::ratio(1, 4));
        assert_eq!(parse_form(&s, "theta(2)").unwrap(), s.theta(2));
        assert!(parse_form(&s, "alpha*alpha").is_err());
        assert!(parse_form(&s, "gamma").is_err());
        assert!(parse_form(&s, "1 +").is_err());
    }

    #[test]
    fn registrations() {
        let mut s = s();
        let b = register(&mut s, &parse_sym_arg("b=2*alpha-1").unwrap()).unwrap();
        assert_eq!(b, LinearForm::alpha().scale_int(2).add_int(-1));
        register(&mut s, &parse_sym_arg("g=indep:sqrt2m1").unwrap()).unwrap();
        assert!(register(&mut s, &parse_sym_arg("g=1/2").unwrap()).is_err());
        let t = register(&mut s, &parse_sym_arg("t=surrogate:digits:[0,0,1]").unwrap()).unwrap();
        assert_eq!(s.expand(&t), s.theta(2));
    }

    #[test]
    fn alpha_specs() {
        assert_eq!(parse_alpha("periodic:[1]").unwrap().prefix_u64(3), [1, 1, 1]);
        assert_eq!(parse_alpha("formula:poly:1,1").unwrap().prefix_u64(3), [2, 3, 4]);
        assert!(parse_alpha("periodic:[0]").is_err());
        assert!(parse_alpha("pi").is_err());
    }

    #[test]
    fn digit_rules() {
        assert_eq!(parse_digit_rule("const:1").unwrap(), DigitPattern::Const(1.into()));
        assert_eq!(parse_digit_rule("alternating:[1,0]").unwrap(), DigitPattern::Alternating(vec![1.into(), 0.into()]));
        let f = parse_digit_rule("formula:k=1,c=0,mask=10").unwrap();
        assert_eq!(f, DigitPattern::Formula { k: BigRational::one(), c: BigInt::zero(), mask: vec![true, false] });
    }

    #[test]
    fn shorthands() {
        let s = s();
        let Phi::Step(p) = parse_phi(&s, "sub(indicator(1/2), shift(indicator(1/2), 1/3))").unwrap() else { panic!() };
        assert_eq!(p.dim(), 1);
        let Phi::Step(c) = parse_phi(&s, "concat(indicator(1/2), phi_d(1/3, 2/3))").unwrap() else { panic!() };
        assert_eq!(c.dim(), 3);
        assert!(matches!(parse_phi(&s, "psi_affine(1/2)").unwrap(), Phi::Affine(_)));
        assert!(parse_phi(&s, "indicator(1/2, 1/3)").is_err());
    }
}
