//! Exact computation with step and piecewise-affine cocycles over an
//! irrational rotation `x -> x + α mod 1`.
//!
//! The rotation number is never a float. It is carried by its partial
//! quotients, and every circle point is a [`LinearForm`] over the symbols
//! `1, α, β_1, …` that is evaluated to guaranteed precision on demand.
//!
//! Modules, bottom-up:
//!
//! * [`arithmetic`]: continued fractions, linear forms, adaptive reals, the
//!   symbol [`Session`].
//! * [`orbits`]: three-distance audits, separation tables, Weyl averages.
//! * [`cocycles`]: step and affine cocycles, Birkhoff sums, exact pushforward.
//! * [`ostrowski`]: Ostrowski expansions and the coboundary criteria.
//! * [`detect`]: essential-value detection and the regularity report.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod arithmetic;
pub mod cocycles;
pub mod detect;
mod error;
pub mod orbits;
pub mod ostrowski;

pub(crate) mod circle;
pub(crate) mod fixed;

pub use arithmetic::{
    AdaptiveReal, Convergent, Interval, LinearForm, PartialQuotients, RealSource, Session, Symbol,
};
pub use error::{Error, Result};

pub use num_bigint::{BigInt, BigUint};
pub use num_rational::BigRational;
