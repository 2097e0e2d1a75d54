//! Closed-form values for the builtin ensembles whose generating functions are rational.
//!
//! These are computed from `x = 2^(-1/T)` without touching the census, so they
//! serve as independent checks on the census sums.

use num_rational::BigRational;
use num_traits::{One, Signed};

use super::evaluation::Quantity;
use crate::ensembles::Builtin;
use crate::precision::{
    exp2_enclosure, ln2, log2_enclosure, DyadicRational, Enclosure, Round, Temperature,
};

fn rat_of(d: &DyadicRational) -> BigRational {
    d.to_rational()
}

/// Apply a function increasing in `x` to both ends of `x`, rounding outward.
fn monotone(
    x: &Enclosure,
    bits: u32,
    f: impl Fn(&BigRational) -> Option<BigRational>,
) -> Option<Enclosure> {
    let lo = f(&rat_of(x.lo()))?;
    let hi = f(&rat_of(x.hi()))?;
    Some(Enclosure::new(
        DyadicRational::from_rational_rounded(&lo, bits, Round::Down),
        DyadicRational::from_rational_rounded(&hi, bits, Round::Up),
    ))
}

fn geometric(q: Quantity, t: &Temperature, bits: u32) -> Option<Enclosure> {
    let wp = bits + 16;
    let x = exp2_enclosure(&-t.inverse(), wp);
    let one = BigRational::one();
    let z = monotone(&x, wp, |x| Some(x / (&one - x)))?;
    let e = monotone(&x, wp, |x| Some(&one / (&one - x)))?;
    let r = match q {
        Quantity::Z => z,
        Quantity::W => monotone(&x, wp, |x| Some(x / ((&one - x) * (&one - x))))?,
        Quantity::Y => monotone(&x, wp, |x| {
            let d = &one - x;
            Some(x * (&one + x) / (&d * &d * &d))
        })?,
        Quantity::E => e,
        Quantity::F => -log2_enclosure(&z, wp).ok()?.mul_rational(t.value(), wp),
        Quantity::S => &e.mul_rational(&t.inverse(), wp) + &log2_enclosure(&z, wp).ok()?,
        Quantity::C => {
            let var = monotone(&x, wp, |x| Some(x / ((&one - x) * (&one - x))))?;
            var.mul(&ln2(wp))
                .mul_rational(&(t.inverse() * t.inverse()), wp)
        }
    };
    Some(r.round(bits))
}

fn sdm4(q: Quantity, t: &Temperature, bits: u32) -> Option<Enclosure> {
    let wp = bits + 16;
    let y = exp2_enclosure(&-(t.inverse() * BigRational::from_integer(2.into())), wp);
    let one = BigRational::one();
    let denom = |y: &BigRational| -> Option<BigRational> {
        let d = &one
            - y * BigRational::from_integer(2.into())
            - y * y * BigRational::from_integer(3.into());
        d.is_positive().then_some(d)
    };
    let r = match q {
        Quantity::Z => monotone(&y, wp, |y| Some(y / denom(y)?))?,
        Quantity::W => monotone(&y, wp, |y| {
            let d = denom(y)?;
            Some(
                y * BigRational::from_integer(2.into())
                    * (&one + y * y * BigRational::from_integer(3.into()))
                    / (&d * &d),
            )
        })?,
        Quantity::E => monotone(&y, wp, |y| {
            Some(
                (BigRational::from_integer(2.into()) + y * y * BigRational::from_integer(6.into()))
                    / denom(y)?,
            )
        })?,
        _ => return None,
    };
    Some(r.round(bits))
}

/// Closed-form enclosure of a limit quantity, where one is implemented.
///
/// Geometric supports every quantity at every `T > 0`; sdm4 supports Z, W, E
/// while `1 - 2y - 3y^2 > 0`.
pub fn closed_form(builtin: Builtin, q: Quantity, t: &Temperature, bits: u32) -> Option<Enclosure> {
    match builtin {
        Builtin::Geometric => geometric(q, t, bits),
        Builtin::Sdm4 => sdm4(q, t, bits),
        _ => None,
    }
}
