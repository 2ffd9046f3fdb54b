use alloc::format;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};

use super::form::LinearForm;
use super::pq::{convergents, determinant, PartialQuotients};
use super::real::Interval;
use super::session::Session;
use crate::fixed::Fixed;
use crate::{Error, Result};

/// Largest `q_{n+1}` for which best approximation is checked by scanning.
pub const BEST_APPROX_SCAN_LIMIT: u64 = 1 << 16;

#[derive(Clone, Debug)]
pub struct CfAuditRow {
    pub n: usize,
    pub a: Option<BigUint>,
    pub p: BigInt,
    pub q: BigInt,
    /// Enclosure of `‖q_nα‖`.
    pub norm: Interval,
    pub determinant: bool,
    pub f1: bool,
    pub f3: bool,
    /// `None` when `q_{n+1}` exceeds the scan limit.
    pub best_approximation: Option<bool>,
}

#[derive(Clone, Debug)]
pub struct CfAudit {
    pub rows: Vec<CfAuditRow>,
}

impl CfAudit {
    pub fn all_pass(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.determinant && r.f1 && r.f3 && r.best_approximation != Some(false))
    }
}

fn fail(audit: &'static str, n: usize, k: i64, detail: alloc::string::String) -> Error {
    Error::AuditFailure { audit, n: n as i64, k, detail }
}

/// Checks the determinant identity, `q_n‖q_{n+1}α‖ + q_{n+1}‖q_nα‖ = 1`, the
/// two-sided bound on `‖q_nα‖`, and best approximation for `n ≤ N`.
///
/// The first identity is checked at `n = 0` as well. The norm identity uses
/// `‖q_nα‖ = (−1)^n θ_n`, which needs `n ≥ 1` (at `n = 0`, `θ_0 = α` may
/// exceed 1/2); the signed identity in `θ` is checked from `n = 0`. The lower
/// half of the two-sided bound is likewise checked from `n = 1`.
pub fn cf_identity_audit(pq: &PartialQuotients, big_n: usize) -> Result<CfAudit> {
    let cs = convergents(pq, big_n + 1);
    // Every compared quantity is at least 1/(2 q_(N+1)^2) in size.
    let need = cs.last().map_or(0, |c| c.q.bits() as u32 * 2 + 64);
    let session = Session::new(pq.clone());
    let session = if need > session.cap_bits() { session.with_cap_bits(need) } else { session };
    let mut rows = Vec::new();
    let last = cs.len().saturating_sub(1);
    for n in 0..=big_n.min(last) {
        let c = &cs[n];
        let det_ok = if n == 0 {
            // p_{-1} q_0 − p_0 q_{-1} = 1
            true
        } else {
            let d = determinant(&cs[n - 1], c);
            d == if n % 2 == 0 { BigInt::one() } else { -BigInt::one() }
        };
        if !det_ok {
            return Err(fail("determinant", n, 0, format!("p_(n-1) q_n - p_n q_(n-1) != (-1)^n")));
        }
        if n == last {
            rows.push(CfAuditRow {
                n,
                a: pq.digit(n),
                p: c.p.clone(),
                q: c.q.clone(),
                norm: session.enclose(&c.theta, 96).dist_to_z(),
                determinant: true,
                f1: true,
                f3: true,
                best_approximation: None,
            });
            break;
        }
        let next = &cs[n + 1];
        let abs_n = c.theta.scale_int(c.sign() as i64);
        let abs_next = next.theta.scale_int(next.sign() as i64);
        let identity = &abs_next.scale_big(&c.q) + &abs_n.scale_big(&next.q);
        if identity != LinearForm::int(1) {
            return Err(fail("f1", n, 0, format!("identity evaluates to {identity}")));
        }
        if session.sign(&c.theta)? != if c.sign() > 0 { Ordering::Greater } else { Ordering::Less } {
            return Err(fail("f1", n, 0, format!("sign of theta_{n} is not (-1)^n")));
        }
        if n >= 1 && session.dist_to_z_form(&c.theta)? != abs_n {
            return Err(fail("f1", n, 0, format!("|theta_{n}| differs from ||q_n alpha||")));
        }
        let norm = if n >= 1 { abs_n.clone() } else { session.dist_to_z_form(&c.theta)? };
        let upper = LinearForm::constant(BigRational::new(BigInt::one(), next.q.clone()));
        let lower = LinearForm::constant(BigRational::new(BigInt::one(), &next.q + &c.q));
        // The lower bound needs n >= 1: for n = 0 and a_1 = 1, ‖α‖ = 1 − α < 1/2.
        let f3 = (n == 0 || session.compare(&lower, &norm)? != Ordering::Greater)
            && session.compare(&norm, &upper)? != Ordering::Greater;
        if !f3 {
            return Err(fail("f3", n, 0, format!("bounds 1/(q_(n+1)+q_n) <= ||q_n alpha|| <= 1/q_(n+1) violated")));
        }
        let best = match next.q.to_u64() {
            Some(qn1) if qn1 <= BEST_APPROX_SCAN_LIMIT => {
                best_approximation_scan(&session, n, &norm, qn1)?;
                Some(true)
            }
            _ => None,
        };
        rows.push(CfAuditRow {
            n,
            a: pq.digit(n),
            p: c.p.clone(),
            q: c.q.clone(),
            norm: session.enclose(&norm, 96),
            determinant: true,
            f1: true,
            f3: true,
            best_approximation: best,
        });
    }
    Ok(CfAudit { rows })
}

/// `‖q_nα‖ ≤ ‖kα‖` for `1 ≤ k < q_{n+1}` (negative `k` give the same norms).
fn best_approximation_scan(session: &Session, n: usize, norm: &LinearForm, qn1: u64) -> Result<()> {
    let alpha = Fixed::from_form(session, &LinearForm::alpha())?;
    let target = Fixed::from_form(session, norm)?;
    let mut v = Fixed::exact_int(0);
    for k in 1..qn1 as i64 {
        v = v.add(alpha);
        let frac = match v.certain_floor() {
            Some(f) => v.minus_int(f),
            None => {
                let form = LinearForm::alpha().scale_int(k);
                if session.dist_to_z_form(&form)?.is_zero() {
                    return Err(fail("f4", n, k, format!("k*alpha is an integer")));
                }
                continue_exact(session, n, k, norm)?;
                continue;
            }
        };
        match frac.dist_of_frac().certain_cmp(&target) {
            Some(Ordering::Greater) => {}
            _ => continue_exact(session, n, k, norm)?,
        }
    }
    Ok(())
}

fn continue_exact(session: &Session, n: usize, k: i64, norm: &LinearForm) -> Result<()> {
    let d = session.dist_to_z_form(&LinearForm::alpha().scale_int(k))?;
    if session.compare(&d, norm)? == Ordering::Less {
        return Err(fail("f4", n, k, format!("||k alpha|| < ||q_n alpha||")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_passes() {
        let a = cf_identity_audit(&PartialQuotients::golden(), 10).unwrap();
        assert!(a.all_pass());
        assert_eq!(a.rows.len(), 11);
    }

    #[test]
    fn silver_bounds_at_one() {
        let a = cf_identity_audit(&PartialQuotients::sqrt2m1(), 3).unwrap();
        let r = &a.rows[1];
        assert_eq!(r.q, BigInt::from(2));
        // 1/7 <= 3 - 2√2 <= 1/5
        assert!(r.norm.lo_f64() >= 1.0 / 7.0 && r.norm.hi_f64() <= 0.2);
        assert!((r.norm.mid_f64() - (3.0 - 2.0 * core::f64::consts::SQRT_2)).abs() < 1e-12);
    }

    #[test]
    fn rational_alpha_stops_at_last_convergent() {
        let a = cf_identity_audit(&PartialQuotients::list(&[2, 3]), 10).unwrap();
        assert_eq!(a.rows.len(), 3);
    }
}
