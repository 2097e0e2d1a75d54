use super::MonotoneQuantity;
use crate::error::{Error, Result};
use crate::precision::{DyadicRational, Enclosure, Temperature};
use crate::relations::ESCALATION_FACTOR;

/// The search bracket is `[2^-BRACKET_EXPONENT, 1 - 2^-BRACKET_EXPONENT]`.
pub const BRACKET_EXPONENT: i64 = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Side {
    Below,
    Above,
    Overlap,
}

/// Precision of the first attempt at each comparison; most bisection steps
/// are far from the target and resolve cheaply.
const COARSE_BITS: u32 = 16;

/// Where `f(x)` lies relative to `target`, escalating precision while the
/// enclosures overlap, up to `ESCALATION_FACTOR * bits`.
fn side(q: &MonotoneQuantity, x: &DyadicRational, target: &Enclosure, bits: u32) -> Result<Side> {
    let x = Temperature::from_dyadic(x)?;
    let cap = bits.saturating_mul(ESCALATION_FACTOR);
    let mut b = COARSE_BITS.min(bits);
    loop {
        let v = q.limit(&x, b)?;
        if v.hi() < target.lo() {
            return Ok(Side::Below);
        }
        if v.lo() > target.hi() {
            return Ok(Side::Above);
        }
        // no precision separates a value lying inside the target
        if target.encloses(&v) || b.saturating_mul(2) > cap {
            return Ok(Side::Overlap);
        }
        b *= 2;
    }
}

fn midpoint(a: &DyadicRational, b: &DyadicRational) -> DyadicRational {
    (a + b).shl(-1)
}

/// Shrink `[below, other]` where `below` is certified on `keep`'s side until it
/// is at most `width` wide; returns the certified end.
fn one_sided(
    q: &MonotoneQuantity,
    target: &Enclosure,
    mut certified: DyadicRational,
    mut other: DyadicRational,
    keep: Side,
    width: &DyadicRational,
    bits: u32,
) -> Result<DyadicRational> {
    while (&certified - &other).abs() > *width {
        let mid = midpoint(&certified, &other);
        if side(q, &mid, target, bits)? == keep {
            certified = mid;
        } else {
            other = mid;
        }
    }
    Ok(certified)
}

/// An enclosure of width at most `tol` containing every `T` in the bracket
/// with `f(T)` in `target`.
///
/// Bisection keeps the lower end certified below the target and the upper end
/// certified above. When a midpoint cannot be separated from the target even
/// at escalated precision, each end is bisected separately towards it; if the
/// undecidable zone is wider than `tol` the result is
/// [`Error::Unresolved`]. A target not certifiably between `f` at the two
/// bracket ends is [`Error::OutOfRange`].
pub fn solve_temperature(
    q: &MonotoneQuantity,
    target: &Enclosure,
    tol: &DyadicRational,
    bits: u32,
) -> Result<Enclosure> {
    if !tol.is_positive() {
        return Err(Error::Precondition("tolerance must be positive".into()));
    }
    let mut lo = DyadicRational::pow2(-BRACKET_EXPONENT);
    let mut hi = &DyadicRational::one() - &lo;
    if side(q, &lo, target, bits)? != Side::Below {
        return Err(Error::OutOfRange(format!(
            "{} at T = {lo} already reaches {target}",
            q.observable()
        )));
    }
    if side(q, &hi, target, bits)? != Side::Above {
        return Err(Error::OutOfRange(format!(
            "{} at T = {hi} does not exceed {target}",
            q.observable()
        )));
    }
    while &hi - &lo > *tol {
        let mid = midpoint(&lo, &hi);
        match side(q, &mid, target, bits)? {
            Side::Below => lo = mid,
            Side::Above => hi = mid,
            Side::Overlap => {
                let quarter = tol.shl(-2);
                let l = one_sided(q, target, lo, mid.clone(), Side::Below, &quarter, bits)?;
                let r = one_sided(q, target, hi, mid, Side::Above, &quarter, bits)?;
                if &r - &l > *tol {
                    return Err(Error::Unresolved(format!(
                        "{} cannot be separated from {target} on [{l}, {r}]",
                        q.observable()
                    )));
                }
                return Ok(Enclosure::new(l, r));
            }
        }
    }
    Ok(Enclosure::new(lo, hi))
}
