//! Continued fractions of `α`, linear forms over the symbol basis
//! `{1, α, β_1, …}`, and adaptive-precision evaluation.

mod audit;
mod form;
mod pq;
mod real;
mod session;

pub use audit::{cf_identity_audit, CfAudit, CfAuditRow};
pub use form::{LinearForm, Symbol};
pub use pq::{convergents, count_q_below, determinant, Convergent, ConvergentIter, DigitRule, PartialQuotients};
pub use real::{cf_expand, decimal, dist_to_z, rational_digits, AdaptiveReal, CfInput, Interval};
pub use session::{Approximator, Dyadic, RealSource, Session, SymbolEntry, SymbolKind, DEFAULT_CAP_BITS};

pub(crate) use session::rat_to_f64;
