//! Certified `2^x` and `log2` built from series with explicit remainder bounds.

use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use super::dyadic::{DyadicRational, Round};
use super::enclosure::Enclosure;
use crate::error::PrecisionError;

/// Squarings applied after argument reduction in `exp`.
const EXP_REDUCTION: u32 = 8;

/// `ln 2 = 2 atanh(1/3)`, cached at the highest precision requested so far.
pub fn ln2(bits: u32) -> Enclosure {
    static CACHE: OnceLock<Mutex<Option<(u32, Enclosure)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(None));
    if let Ok(guard) = cache.lock() {
        if let Some((b, v)) = guard.as_ref() {
            if *b >= bits {
                return v.clone();
            }
        }
    }
    let v = ln2_uncached(bits);
    if let Ok(mut guard) = cache.lock() {
        match guard.as_ref() {
            Some((b, _)) if *b >= bits => {}
            _ => *guard = Some((bits, v.clone())),
        }
    }
    v
}

fn ln2_uncached(bits: u32) -> Enclosure {
    let wp = bits + 16;
    let stop = DyadicRational::pow2(-(wp as i64) - 4);
    let mut lo = DyadicRational::zero();
    let mut hi = DyadicRational::zero();
    let nine = BigInt::from(9);
    let mut pow3 = BigInt::from(3);
    let mut j: u64 = 0;
    loop {
        let den = &pow3 * BigInt::from(2 * j + 1);
        let t = BigRational::new(BigInt::one(), den);
        let t_lo = DyadicRational::from_rational_rounded(&t, wp, Round::Down);
        let t_hi = DyadicRational::from_rational_rounded(&t, wp, Round::Up);
        if t_hi < stop {
            // remaining terms sum to at most (9/8) t_j
            hi = &hi + &(&t_hi + &t_hi);
            break;
        }
        lo = &lo + &t_lo;
        hi = &hi + &t_hi;
        pow3 *= &nine;
        j += 1;
    }
    Enclosure::new(lo.shl(1), hi.shl(1)).round(bits + 8)
}

/// Enclosure of `2^x` with width at most `2^-bits * max(1, 2^x)`.
pub fn exp2_enclosure(x: &BigRational, bits: u32) -> Enclosure {
    let bits = bits.max(4);
    let q = x.floor().to_integer();
    let frac = x - BigRational::from_integer(q.clone());
    let shift = q.to_i64().expect("exponent out of range");
    if frac.is_zero() {
        return Enclosure::point(DyadicRational::pow2(shift));
    }
    let mut guard = 24;
    loop {
        let r = exp2_unit(&frac, bits + guard).round(bits + 4).shl(shift);
        let scale = if r.lo() > &DyadicRational::one() {
            r.lo().clone()
        } else {
            DyadicRational::one()
        };
        if r.width() <= scale.shl(-(bits as i64)) {
            return r;
        }
        guard *= 2;
    }
}

/// `2^f` for `0 < f < 1` at working precision `wp`.
fn exp2_unit(f: &BigRational, wp: u32) -> Enclosure {
    let l = ln2(wp + 8);
    let y_lo = l.lo().mul_rational(f, wp + 8, Round::Down);
    let y_hi = l.hi().mul_rational(f, wp + 8, Round::Up);
    let z_lo = y_lo.shl(-(EXP_REDUCTION as i64));
    let z_hi = y_hi.shl(-(EXP_REDUCTION as i64));
    let tp = wp + 16;
    let mut lo = exp_series(&z_lo, tp, Round::Down);
    let mut hi = exp_series(&z_hi, tp, Round::Up);
    for _ in 0..EXP_REDUCTION {
        lo = (&lo * &lo).round(tp, Round::Down);
        hi = (&hi * &hi).round(tp, Round::Up);
    }
    Enclosure::new(lo, hi)
}

/// Taylor series of `e^z`, `0 <= z < 1/64`; `Up` includes the remainder bound.
fn exp_series(z: &DyadicRational, wp: u32, dir: Round) -> DyadicRational {
    let stop = DyadicRational::pow2(-(wp as i64) - 4);
    let mut sum = DyadicRational::one();
    let mut term = DyadicRational::one();
    let mut j: i64 = 1;
    loop {
        term = (&term * z)
            .round(wp, dir)
            .div_round(&DyadicRational::from_int(j), wp, dir);
        if term < stop {
            if dir == Round::Up {
                // tail <= term / (1 - z/(j+1)) <= 2 term
                sum = &sum + &term.shl(1);
            }
            break;
        }
        sum = &sum + &term;
        j += 1;
    }
    sum.round(wp, dir)
}

/// Enclosure of `log2(v)` over every point of `v`.
pub fn log2_enclosure(v: &Enclosure, bits: u32) -> Result<Enclosure, PrecisionError> {
    if !v.lo().is_positive() {
        return Err(PrecisionError::NonPositiveLog);
    }
    let bits = bits.max(4);
    let mut guard = 16;
    loop {
        let wp = bits + guard;
        let lo = log2_bound(v.lo(), wp, Round::Down);
        let hi = log2_bound(v.hi(), wp, Round::Up);
        let r = Enclosure::new(lo, hi).round(bits + 6);
        // the enclosure cannot be narrower than the image of `v` itself
        let image_width = if v.is_point() {
            DyadicRational::zero()
        } else {
            log2_image_width_bound(v)
        };
        // rounding to `bits + 6` significant bits already costs 2^-bits relative to |r|
        let scale = r.mag().max(DyadicRational::one());
        if r.width() <= &image_width + &(&scale * &DyadicRational::pow2(-(bits as i64)))
            || guard > 512
        {
            return Ok(r);
        }
        guard *= 2;
    }
}

/// Upper bound on `log2(hi) - log2(lo)` (used only to decide when to stop refining).
fn log2_image_width_bound(v: &Enclosure) -> DyadicRational {
    // log2(hi/lo) <= (hi - lo) / (lo ln 2) <= 2 (hi - lo) / lo
    v.width().shl(1).div_round(v.lo(), 32, Round::Up)
}

fn log2_bound(d: &DyadicRational, wp: u32, dir: Round) -> DyadicRational {
    let msb = d.msb().expect("positive");
    let int_part = DyadicRational::from_int(msb);
    let mu = d.shl(-msb);
    if mu == DyadicRational::one() {
        return int_part;
    }
    let one = DyadicRational::one();
    let num = &mu - &one;
    let den = &mu + &one;
    let s = num.div_round(&den, wp, dir);
    let ln_mu = atanh_series(&s, wp, dir).shl(1);
    let l = ln2(wp + 8);
    let frac = match dir {
        Round::Down => ln_mu.div_round(l.hi(), wp, Round::Down),
        Round::Up => ln_mu.div_round(l.lo(), wp, Round::Up),
    };
    &int_part + &frac
}

/// `atanh(s) = sum s^(2j+1)/(2j+1)` for `0 <= s < 1/3`.
fn atanh_series(s: &DyadicRational, wp: u32, dir: Round) -> DyadicRational {
    let stop = DyadicRational::pow2(-(wp as i64) - 4);
    let s2 = (s * s).round(wp, dir);
    let mut p = s.clone();
    let mut sum = DyadicRational::zero();
    let mut j: i64 = 0;
    loop {
        let term = p.div_round(&DyadicRational::from_int(2 * j + 1), wp, dir);
        if term < stop {
            if dir == Round::Up {
                // tail <= term / (1 - s^2) <= (9/8) term
                sum = &sum + &term.shl(1);
            }
            break;
        }
        sum = &sum + &term;
        p = (&p * &s2).round(wp, dir);
        j += 1;
    }
    sum
}

/// Natural log enclosure, `ln v = log2(v) ln 2`.
pub fn ln_enclosure(v: &Enclosure, bits: u32) -> Result<Enclosure, PrecisionError> {
    let l2 = log2_enclosure(v, bits + 4)?;
    Ok(l2.mul(&ln2(bits + 8)).round(bits + 4))
}

/// Integer `floor(log2(n))` for `n >= 1`.
pub fn floor_log2(n: u64) -> u32 {
    assert!(n >= 1);
    63 - n.leading_zeros()
}

/// Exact rational `2^(-k)` helper for tests and bounds.
pub fn pow2_rational(k: i64) -> BigRational {
    if k >= 0 {
        BigRational::from_integer(BigInt::one() << k as usize)
    } else {
        BigRational::new(BigInt::one(), BigInt::one() << (-k) as usize)
    }
}

/// `ceil(log2(x))` of a positive enclosure's upper endpoint: the least `a` with `x.hi <= 2^a`.
pub fn ceil_log2_upper(x: &Enclosure) -> i64 {
    let hi = x.hi();
    assert!(hi.is_positive());
    let msb = hi.msb().expect("positive");
    if *hi == DyadicRational::pow2(msb) {
        msb
    } else {
        msb + 1
    }
}

/// The least `a` with `2^-a <= x.lo` (requires `x.lo > 0`).
pub fn ceil_neg_log2_lower(x: &Enclosure) -> i64 {
    let lo = x.lo();
    assert!(lo.is_positive());
    let msb = lo.msb().expect("positive");
    -msb
}
