//! 256-bit fixed-point enclosures used on hot paths. Every value carries an
//! error radius; anything the radius cannot decide falls back to exact
//! comparison through the session.

use core::cmp::Ordering;

use ethnum::I256;
use num_bigint::{BigInt, Sign};

use crate::arithmetic::{LinearForm, Session};
use crate::{Error, Result};

pub(crate) const FRAC: u32 = 160;
const LIMIT_BITS: u32 = 250;

/// `[c − r, c + r] · 2^-FRAC`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Fixed {
    pub c: I256,
    pub r: I256,
}

pub(crate) fn one() -> I256 {
    I256::ONE << FRAC
}

fn big_to_i256(x: &BigInt) -> Result<I256> {
    if x.bits() as u32 >= LIMIT_BITS {
        return Err(Error::Overflow("fixed-point conversion"));
    }
    let (sign, bytes) = x.to_bytes_le();
    let mut buf = [0u8; 32];
    buf[..bytes.len()].copy_from_slice(&bytes);
    let v = I256::from_le_bytes(buf);
    Ok(if sign == Sign::Minus { -v } else { v })
}

impl Fixed {
    pub fn exact_int(k: i64) -> Fixed {
        Fixed { c: I256::from(k) << FRAC, r: I256::ZERO }
    }

    pub fn from_form(session: &Session, form: &LinearForm) -> Result<Fixed> {
        let d = session.enclose_dyadic(form, FRAC + 8);
        let shift = d.scale.saturating_sub(FRAC) as usize;
        let lo = if d.scale >= FRAC { &d.lo >> shift } else { &d.lo << ((FRAC - d.scale) as usize) };
        let hi = if d.scale >= FRAC {
            -((-&d.hi) >> shift)
        } else {
            &d.hi << ((FRAC - d.scale) as usize)
        };
        let lo = big_to_i256(&lo)?;
        let hi = big_to_i256(&hi)?;
        let c = lo + ((hi - lo) >> 1);
        let r = (hi - lo) - ((hi - lo) >> 1) + I256::ONE;
        let f = Fixed { c, r };
        if f.c.abs() >= (I256::ONE << (FRAC + 80)) {
            return Err(Error::Overflow("fixed-point value range"));
        }
        Ok(f)
    }

    pub fn add(self, o: Fixed) -> Fixed {
        Fixed { c: self.c + o.c, r: self.r + o.r }
    }

    pub fn sub(self, o: Fixed) -> Fixed {
        Fixed { c: self.c - o.c, r: self.r + o.r }
    }

    pub fn mul_int(self, k: i64) -> Fixed {
        let k = I256::from(k);
        Fixed { c: self.c * k, r: self.r * k.abs() }
    }

    /// Floor of the value when the enclosure does not straddle an integer.
    pub fn certain_floor(&self) -> Option<i128> {
        let a = (self.c - self.r) >> FRAC;
        let b = (self.c + self.r) >> FRAC;
        if a == b {
            Some(a.as_i128())
        } else {
            None
        }
    }

    /// Shift by an integer.
    pub fn minus_int(self, m: i128) -> Fixed {
        Fixed { c: self.c - (I256::from(m) << FRAC), r: self.r }
    }

    /// Order if the enclosures are disjoint.
    pub fn certain_cmp(&self, o: &Fixed) -> Option<Ordering> {
        let d = self.c - o.c;
        if d.abs() > self.r + o.r {
            Some(d.cmp(&I256::ZERO))
        } else {
            None
        }
    }

    pub fn to_f64(self) -> f64 {
        let hi = (self.c >> (FRAC - 60)).as_i128() as f64;
        hi / libm::exp2(60.0)
    }

    /// Enclosure of `‖value‖`, assuming the value is already in `[0, 1)`.
    pub fn dist_of_frac(self) -> Fixed {
        let half = one() >> 1;
        if self.c > half {
            Fixed { c: one() - self.c, r: self.r }
        } else {
            self
        }
    }
}
