//! Artifact writing and value encodings.
//!
//! Rationals are `"p/q"` strings, reals are `[lo, hi]` decimal pairs with
//! outward rounding, and every JSON artifact carries `schema_version`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_traits::Zero;
use rotcocycle::arithmetic::Symbol;
use rotcocycle::{AdaptiveReal, BigRational, Interval, LinearForm, Session};
use serde_json::{json, Map, Value};

use crate::config::SCHEMA_VERSION;
use crate::CliError;

/// Fractional digits in decimal interval endpoints.
pub const DIGITS: usize = 30;
/// Bits used to enclose forms for artifacts.
const BITS: u32 = 128;

pub fn rat(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn interval(iv: &Interval) -> Value {
    let (lo, hi) = iv.to_decimal_pair(DIGITS);
    json!([lo, hi])
}

pub fn adaptive(a: &AdaptiveReal) -> Value {
    interval(a.interval())
}

/// Form text using registered names.
pub fn form_text(session: &Session, f: &LinearForm) -> String {
    if f.is_zero() {
        return "0".into();
    }
    let mut s = String::new();
    for (i, (sym, c)) in f.terms().iter().enumerate() {
        let neg = c < &BigRational::zero();
        let mag = if neg { -c.clone() } else { c.clone() };
        if i == 0 {
            if neg {
                s.push('-');
            }
        } else {
            s.push_str(if neg { " - " } else { " + " });
        }
        match sym {
            Symbol::One => s.push_str(&mag.to_string()),
            _ if mag == BigRational::from_integer(1.into()) => s.push_str(&session.symbol_name(*sym)),
            _ => s.push_str(&format!("{mag}*{}", session.symbol_name(*sym))),
        }
    }
    s
}

pub fn form(session: &Session, f: &LinearForm) -> Value {
    let mut betas = Map::new();
    for (sym, c) in f.terms() {
        if let Symbol::Beta(_) = sym {
            betas.insert(session.symbol_name(*sym), json!(rat(c)));
        }
    }
    json!({
        "text": form_text(session, f),
        "rat": rat(&f.coeff(Symbol::One)),
        "alpha_coeff": rat(&f.coeff(Symbol::Alpha)),
        "beta_coeffs": betas,
        "interval": interval(&session.enclose(f, BITS)),
    })
}

pub fn forms(session: &Session, v: &[LinearForm]) -> Value {
    Value::Array(v.iter().map(|f| form(session, f)).collect())
}

/// Centre and radius of an enclosure, as decimals.
pub fn centre_radius(session: &Session, f: &LinearForm) -> (String, String) {
    let iv = session.enclose(f, BITS);
    let c = rotcocycle::arithmetic::decimal(&iv.center(), DIGITS, false);
    let r = rotcocycle::arithmetic::decimal(&iv.radius(), DIGITS, true);
    (c, r)
}

/// Exact `p/q` for rational forms, the form text otherwise.
pub fn exact(session: &Session, f: &LinearForm) -> String {
    match session.expand(f).as_rational() {
        Some(r) => rat(&r),
        None => form_text(session, f),
    }
}

pub struct Artifacts {
    dir: PathBuf,
}

impl Artifacts {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Artifacts { dir: dir.to_path_buf() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Writes through a temporary file in the same directory, then renames.
    fn atomic(&self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let io = |e: std::io::Error| CliError::Io(format!("{name}: {e}"));
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(io)?;
        tmp.write_all(bytes).map_err(io)?;
        tmp.flush().map_err(io)?;
        let path = self.dir.join(name);
        tmp.persist(&path).map_err(|e| io(e.error))?;
        Ok(path)
    }

    /// JSON object with `schema_version` and `command` prepended.
    pub fn json(&self, name: &str, command: &str, body: Value) -> Result<PathBuf, CliError> {
        let mut obj = Map::new();
        obj.insert("schema_version".into(), json!(SCHEMA_VERSION));
        obj.insert("command".into(), json!(command));
        if let Value::Object(m) = body {
            obj.extend(m);
        } else {
            obj.insert("result".into(), body);
        }
        let mut text = serde_json::to_string_pretty(&Value::Object(obj)).expect("json serializes");
        text.push('\n');
        self.atomic(name, text.as_bytes())
    }

    pub fn csv(&self, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<PathBuf, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| CliError::Io(format!("{name}: {e}"));
        w.write_record(header).map_err(err)?;
        for r in rows {
            w.write_record(r).map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(format!("{name}: {e}")))?;
        self.atomic(name, &bytes)
    }
}
