//! Points `x_b + kα mod 1` on the circle: construction with exact floors,
//! exact sorting, and gap bookkeeping.

use alloc::vec::Vec;
use core::cell::RefCell;
use core::cmp::Ordering;

use crate::arithmetic::{LinearForm, Session};
use crate::fixed::{Fixed, FRAC};
use crate::{Error, Result};

/// Position `bases[base] + k·α − floor`, which lies in `[0, 1)`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Pt {
    pub base: u32,
    pub k: i64,
    pub floor: i64,
    pub pos: Fixed,
}

pub(crate) struct Circle<'s> {
    pub session: &'s Session,
    pub alpha: Fixed,
    pub bases: Vec<LinearForm>,
    pub base_fx: Vec<Fixed>,
}

impl<'s> Circle<'s> {
    pub fn new(session: &'s Session, bases: Vec<LinearForm>) -> Result<Self> {
        let alpha = Fixed::from_form(session, &LinearForm::alpha())?;
        let base_fx = bases.iter().map(|b| Fixed::from_form(session, b)).collect::<Result<Vec<_>>>()?;
        Ok(Circle { session, alpha, bases, base_fx })
    }

    /// Unreduced value `x_b + kα`.
    pub fn raw(&self, base: u32, k: i64) -> Fixed {
        self.base_fx[base as usize].add(self.alpha.mul_int(k))
    }

    pub fn raw_form(&self, base: u32, k: i64) -> LinearForm {
        &self.bases[base as usize] + &LinearForm::alpha().scale_int(k)
    }

    pub fn point(&self, base: u32, k: i64) -> Result<Pt> {
        let v = self.raw(base, k);
        let floor = match v.certain_floor() {
            Some(f) => f as i64,
            None => {
                let f = self.session.floor(&self.raw_form(base, k))?;
                i64::try_from(f).map_err(|_| Error::Overflow("circle floor"))?
            }
        };
        Ok(Pt { base, k, floor, pos: v.minus_int(floor as i128) })
    }

    pub fn exact(&self, p: &Pt) -> LinearForm {
        self.raw_form(p.base, p.k).add_int(-p.floor)
    }

    /// Exact order of positions in `[0, 1)`.
    pub fn cmp(&self, a: &Pt, b: &Pt) -> Result<Ordering> {
        if let Some(o) = a.pos.certain_cmp(&b.pos) {
            return Ok(o);
        }
        if a.base == b.base && a.k == b.k {
            return Ok(Ordering::Equal);
        }
        self.session.compare(&self.exact(a), &self.exact(b))
    }

    /// Sorts by position, ties broken by `(base, k)`.
    pub fn sort(&self, pts: &mut [Pt]) -> Result<()> {
        // Sort on the top bits of the centre, then settle the runs the
        // enclosures cannot order.
        let mut keyed: Vec<(i128, u32)> = pts
            .iter()
            .enumerate()
            .map(|(i, p)| ((p.pos.c >> (FRAC - 120)).as_i128(), i as u32))
            .collect();
        keyed.sort_unstable();
        let mut sorted: Vec<Pt> = keyed.iter().map(|&(_, i)| pts[i as usize]).collect();
        let mut i = 0;
        while i + 1 < sorted.len() {
            if sorted[i].pos.certain_cmp(&sorted[i + 1].pos) == Some(Ordering::Less) {
                i += 1;
                continue;
            }
            let mut j = i + 1;
            while j + 1 < sorted.len() && sorted[j].pos.certain_cmp(&sorted[j + 1].pos) != Some(Ordering::Less) {
                j += 1;
            }
            self.full_sort(&mut sorted[i..=j])?;
            i = j + 1;
        }
        let mut ordered = true;
        for w in sorted.windows(2) {
            if self.tie_cmp(&w[0], &w[1])? == Ordering::Greater {
                ordered = false;
                break;
            }
        }
        if !ordered {
            self.full_sort(&mut sorted)?;
        }
        pts.copy_from_slice(&sorted);
        Ok(())
    }

    fn tie_cmp(&self, a: &Pt, b: &Pt) -> Result<Ordering> {
        Ok(match self.cmp(a, b)? {
            Ordering::Equal => (a.base, a.k).cmp(&(b.base, b.k)),
            o => o,
        })
    }

    fn full_sort(&self, pts: &mut [Pt]) -> Result<()> {
        let err: RefCell<Option<Error>> = RefCell::new(None);
        pts.sort_unstable_by(|a, b| match self.tie_cmp(a, b) {
            Ok(o) => o,
            Err(e) => {
                err.borrow_mut().get_or_insert(e);
                (a.base, a.k).cmp(&(b.base, b.k))
            }
        });
        match err.into_inner() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }

    /// Points `k0, k0 + step, …` (`count` of them) by repeated addition.
    pub fn orbit(&self, base: u32, k0: i64, step: i64, count: i64) -> Result<Vec<Pt>> {
        let mut out = Vec::with_capacity(count.max(0) as usize);
        let inc = self.alpha.mul_int(step);
        let mut v = self.raw(base, k0);
        for i in 0..count {
            let k = k0 + i * step;
            let floor = match v.certain_floor() {
                Some(f) => f as i64,
                None => {
                    let f = self.session.floor(&self.raw_form(base, k))?;
                    i64::try_from(f).map_err(|_| Error::Overflow("circle floor"))?
                }
            };
            out.push(Pt { base, k, floor, pos: v.minus_int(floor as i128) });
            v = v.add(inc);
        }
        Ok(out)
    }

    /// Exact coincidence test for two points.
    pub fn coincide(&self, a: &Pt, b: &Pt) -> Result<bool> {
        if a.pos.certain_cmp(&b.pos).is_some() {
            return Ok(false);
        }
        Ok(self.cmp(a, b)? == Ordering::Equal)
    }

    /// Forward gap from `a` to `b` (adding 1 when wrapping past 0).
    pub fn gap_form(&self, a: &Pt, b: &Pt, wrap: bool) -> LinearForm {
        let g = &self.exact(b) - &self.exact(a);
        if wrap {
            g.add_int(1)
        } else {
            g
        }
    }

    pub fn gap_fixed(&self, a: &Pt, b: &Pt, wrap: bool) -> Fixed {
        let g = b.pos.sub(a.pos);
        if wrap {
            g.add(Fixed::exact_int(1))
        } else {
            g
        }
    }
}
