//! Certified intervals `[lo, hi]` with dyadic endpoints.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use super::dyadic::{DyadicRational, Round};
use crate::error::PrecisionError;

/// Closed interval guaranteed to contain some real quantity.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Enclosure {
    lo: DyadicRational,
    hi: DyadicRational,
}

impl Enclosure {
    /// Panics if `lo > hi`.
    pub fn new(lo: DyadicRational, hi: DyadicRational) -> Self {
        assert!(
            lo <= hi,
            "enclosure endpoints out of order: {lo:?} > {hi:?}"
        );
        Enclosure { lo, hi }
    }

    pub fn point(v: DyadicRational) -> Self {
        Enclosure {
            lo: v.clone(),
            hi: v,
        }
    }

    pub fn from_int(v: i64) -> Self {
        Self::point(DyadicRational::from_int(v))
    }

    pub fn zero() -> Self {
        Self::point(DyadicRational::zero())
    }

    pub fn one() -> Self {
        Self::point(DyadicRational::one())
    }

    /// Tightest enclosure of `r` with `bits` significant bits per endpoint.
    pub fn from_rational(r: &BigRational, bits: u32) -> Self {
        match DyadicRational::from_rational(r) {
            Some(d) => Self::point(d),
            None => Enclosure {
                lo: DyadicRational::from_rational_rounded(r, bits, Round::Down),
                hi: DyadicRational::from_rational_rounded(r, bits, Round::Up),
            },
        }
    }

    pub fn lo(&self) -> &DyadicRational {
        &self.lo
    }

    pub fn hi(&self) -> &DyadicRational {
        &self.hi
    }

    pub fn width(&self) -> DyadicRational {
        &self.hi - &self.lo
    }

    /// Midpoint (exact).
    pub fn mid(&self) -> DyadicRational {
        (&self.lo + &self.hi).shl(-1)
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, v: &DyadicRational) -> bool {
        &self.lo <= v && v <= &self.hi
    }

    pub fn contains_rational(&self, r: &BigRational) -> bool {
        &self.lo.to_rational() <= r && r <= &self.hi.to_rational()
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(&DyadicRational::zero())
    }

    pub fn encloses(&self, inner: &Enclosure) -> bool {
        self.lo <= inner.lo && inner.hi <= self.hi
    }

    pub fn overlaps(&self, other: &Enclosure) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn intersect(&self, other: &Enclosure) -> Option<Enclosure> {
        let lo = if self.lo > other.lo {
            &self.lo
        } else {
            &other.lo
        };
        let hi = if self.hi < other.hi {
            &self.hi
        } else {
            &other.hi
        };
        (lo <= hi).then(|| Enclosure {
            lo: lo.clone(),
            hi: hi.clone(),
        })
    }

    /// Smallest enclosure containing both.
    pub fn hull(&self, other: &Enclosure) -> Enclosure {
        Enclosure {
            lo: self.lo.clone().min(other.lo.clone()),
            hi: self.hi.clone().max(other.hi.clone()),
        }
    }

    /// Certified `self < other`.
    pub fn certainly_lt(&self, other: &Enclosure) -> bool {
        self.hi < other.lo
    }

    pub fn certainly_positive(&self) -> bool {
        self.lo.is_positive()
    }

    /// Raise the lower endpoint to `floor` when the enclosed value is known to be at least `floor`.
    pub fn clamp_below(&self, floor: &DyadicRational) -> Enclosure {
        let lo = if &self.lo < floor {
            floor.clone()
        } else {
            self.lo.clone()
        };
        let hi = if &self.hi < &lo {
            lo.clone()
        } else {
            self.hi.clone()
        };
        Enclosure { lo, hi }
    }

    pub fn clamp_above(&self, ceil: &DyadicRational) -> Enclosure {
        let hi = if &self.hi > ceil {
            ceil.clone()
        } else {
            self.hi.clone()
        };
        let lo = if self.lo > hi {
            hi.clone()
        } else {
            self.lo.clone()
        };
        Enclosure { lo, hi }
    }

    /// Widen outward so each endpoint has at most `bits` significant bits.
    pub fn round(&self, bits: u32) -> Enclosure {
        Enclosure {
            lo: self.lo.round(bits, Round::Down),
            hi: self.hi.round(bits, Round::Up),
        }
    }

    pub fn shl(&self, k: i64) -> Enclosure {
        Enclosure {
            lo: self.lo.shl(k),
            hi: self.hi.shl(k),
        }
    }

    pub fn abs(&self) -> Enclosure {
        if self.lo.is_negative() && self.hi.is_positive() {
            Enclosure {
                lo: DyadicRational::zero(),
                hi: self.hi.clone().max(self.lo.abs()),
            }
        } else if self.hi.is_negative() || self.hi.is_zero() {
            -self
        } else {
            self.clone()
        }
    }

    /// Largest absolute value of the enclosed set.
    pub fn mag(&self) -> DyadicRational {
        self.lo.abs().max(self.hi.abs())
    }

    /// Exact product (endpoints may grow; call [`Enclosure::round`] afterwards).
    pub fn mul(&self, other: &Enclosure) -> Enclosure {
        let c = [
            &self.lo * &other.lo,
            &self.lo * &other.hi,
            &self.hi * &other.lo,
            &self.hi * &other.hi,
        ];
        let lo = c.iter().min().cloned().unwrap_or_else(DyadicRational::zero);
        let hi = c.iter().max().cloned().unwrap_or_else(DyadicRational::zero);
        Enclosure { lo, hi }
    }

    pub fn mul_dyadic(&self, d: &DyadicRational) -> Enclosure {
        let a = &self.lo * d;
        let b = &self.hi * d;
        if a <= b {
            Enclosure { lo: a, hi: b }
        } else {
            Enclosure { lo: b, hi: a }
        }
    }

    pub fn mul_int(&self, n: &BigInt) -> Enclosure {
        self.mul_dyadic(&DyadicRational::from_int(n.clone()))
    }

    /// Product with an exact rational, rounded outward to `bits`.
    pub fn mul_rational(&self, r: &BigRational, bits: u32) -> Enclosure {
        let a_lo = self.lo.mul_rational(r, bits, Round::Down);
        let b_lo = self.hi.mul_rational(r, bits, Round::Down);
        let a_hi = self.lo.mul_rational(r, bits, Round::Up);
        let b_hi = self.hi.mul_rational(r, bits, Round::Up);
        Enclosure {
            lo: a_lo.min(b_lo),
            hi: a_hi.max(b_hi),
        }
    }

    /// Square; tighter than `mul(self, self)` when the interval straddles zero.
    pub fn sqr(&self) -> Enclosure {
        let a = self.abs();
        Enclosure {
            lo: &a.lo * &a.lo,
            hi: &a.hi * &a.hi,
        }
    }

    pub fn powi(&self, n: u32) -> Enclosure {
        if n == 0 {
            return Enclosure::one();
        }
        if n % 2 == 0 {
            let a = self.abs();
            Enclosure {
                lo: a.lo.powi(n),
                hi: a.hi.powi(n),
            }
        } else {
            Enclosure {
                lo: self.lo.powi(n),
                hi: self.hi.powi(n),
            }
        }
    }

    /// Outward-rounded quotient. Errors when the divisor contains zero.
    pub fn div(&self, other: &Enclosure, bits: u32) -> Result<Enclosure, PrecisionError> {
        if other.contains_zero() {
            return Err(PrecisionError::DivisionByZero);
        }
        let (a, b) = (&self.lo, &self.hi);
        let (c, d) = (&other.lo, &other.hi);
        let lo_c = [
            a.div_round(c, bits, Round::Down),
            a.div_round(d, bits, Round::Down),
            b.div_round(c, bits, Round::Down),
            b.div_round(d, bits, Round::Down),
        ];
        let hi_c = [
            a.div_round(c, bits, Round::Up),
            a.div_round(d, bits, Round::Up),
            b.div_round(c, bits, Round::Up),
            b.div_round(d, bits, Round::Up),
        ];
        let lo = lo_c
            .iter()
            .min()
            .cloned()
            .unwrap_or_else(DyadicRational::zero);
        let hi = hi_c
            .iter()
            .max()
            .cloned()
            .unwrap_or_else(DyadicRational::zero);
        Ok(Enclosure { lo, hi })
    }

    pub fn recip(&self, bits: u32) -> Result<Enclosure, PrecisionError> {
        Enclosure::one().div(self, bits)
    }

    pub fn to_f64_mid(&self) -> f64 {
        self.mid().to_f64()
    }
}

impl Add for &Enclosure {
    type Output = Enclosure;
    fn add(self, rhs: &Enclosure) -> Enclosure {
        Enclosure {
            lo: &self.lo + &rhs.lo,
            hi: &self.hi + &rhs.hi,
        }
    }
}

impl Sub for &Enclosure {
    type Output = Enclosure;
    fn sub(self, rhs: &Enclosure) -> Enclosure {
        Enclosure {
            lo: &self.lo - &rhs.hi,
            hi: &self.hi - &rhs.lo,
        }
    }
}

impl Neg for &Enclosure {
    type Output = Enclosure;
    fn neg(self) -> Enclosure {
        Enclosure {
            lo: -&self.hi,
            hi: -&self.lo,
        }
    }
}

impl Add for Enclosure {
    type Output = Enclosure;
    fn add(self, rhs: Enclosure) -> Enclosure {
        &self + &rhs
    }
}

impl Sub for Enclosure {
    type Output = Enclosure;
    fn sub(self, rhs: Enclosure) -> Enclosure {
        &self - &rhs
    }
}

impl Neg for Enclosure {
    type Output = Enclosure;
    fn neg(self) -> Enclosure {
        -&self
    }
}

impl fmt::Debug for Enclosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{:e}, {:e}] ({} .. {})",
            self.lo.to_f64(),
            self.hi.to_f64(),
            self.lo,
            self.hi
        )
    }
}

impl fmt::Display for Enclosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Number of decimal digits used when rendering enclosures for humans.
pub const DECIMAL_DIGITS: u32 = 24;

impl Serialize for Enclosure {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("Enclosure", 4)?;
        s.serialize_field("lo", &self.lo.to_exact_string())?;
        s.serialize_field("hi", &self.hi.to_exact_string())?;
        s.serialize_field(
            "lo_decimal",
            &self.lo.to_decimal(DECIMAL_DIGITS, Round::Down),
        )?;
        s.serialize_field("hi_decimal", &self.hi.to_decimal(DECIMAL_DIGITS, Round::Up))?;
        s.end()
    }
}

impl Serialize for DyadicRational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_exact_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(lo: &str, hi: &str) -> Enclosure {
        Enclosure::new(lo.parse().unwrap(), hi.parse().unwrap())
    }

    #[test]
    fn add_points() {
        assert_eq!(&e("1", "1") + &e("2", "2"), e("3", "3"));
    }

    #[test]
    fn mul_sign_analysis() {
        assert_eq!(e("1", "2").mul(&e("-1", "1")), e("-2", "2"));
        assert_eq!(e("-1", "1").sqr(), e("0", "1"));
    }

    #[test]
    fn div_third_at_ten_bits() {
        let q = e("1", "1").div(&e("3", "3"), 10).unwrap();
        let third = BigRational::new(1.into(), 3.into());
        assert!(q.contains_rational(&third));
        assert!(q.width() <= DyadicRational::pow2(-10));
    }

    #[test]
    fn div_by_interval_with_zero_fails() {
        assert_eq!(
            e("1", "1").div(&e("-1", "1"), 10),
            Err(PrecisionError::DivisionByZero)
        );
    }

    #[test]
    fn overlap_and_intersection() {
        let a = e("0", "1/2");
        let b = e("1/2", "1");
        assert!(a.overlaps(&b));
        assert_eq!(a.intersect(&b), Some(e("1/2", "1/2")));
        assert!(!a.overlaps(&e("3/4", "1")));
        assert!(a.certainly_lt(&e("3/4", "1")));
    }

    #[test]
    fn serializes_exact_text() {
        let j = serde_json::to_value(e("1/4", "3/8")).unwrap();
        assert_eq!(j["lo"], "1*2^-2");
        assert_eq!(j["hi"], "3*2^-3");
    }
}
