//! Exact dyadic rationals `m * 2^e`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::ParseError;

/// Rounding direction for operations that cannot be carried out exactly.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Round {
    Down,
    Up,
}

/// Exact number `mantissa * 2^exponent`, kept canonical (odd mantissa, or zero with exponent 0).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct DyadicRational {
    mantissa: BigInt,
    exponent: i64,
}

impl DyadicRational {
    pub fn new(mantissa: BigInt, exponent: i64) -> Self {
        let mut d = DyadicRational { mantissa, exponent };
        d.normalize();
        d
    }

    pub fn zero() -> Self {
        DyadicRational {
            mantissa: BigInt::zero(),
            exponent: 0,
        }
    }

    pub fn one() -> Self {
        DyadicRational {
            mantissa: BigInt::one(),
            exponent: 0,
        }
    }

    pub fn from_int<I: Into<BigInt>>(v: I) -> Self {
        Self::new(v.into(), 0)
    }

    /// `2^e`.
    pub fn pow2(e: i64) -> Self {
        DyadicRational {
            mantissa: BigInt::one(),
            exponent: e,
        }
    }

    /// Exact conversion; `None` unless the denominator is a power of two.
    pub fn from_rational(r: &BigRational) -> Option<Self> {
        let den = r.denom();
        let tz = den.trailing_zeros().unwrap_or(0);
        if den.magnitude() != &(BigUint::one() << tz) {
            return None;
        }
        Some(Self::new(r.numer().clone(), -(tz as i64)))
    }

    /// Nearest dyadic with `bits` significant bits, rounded in `dir`.
    pub fn from_rational_rounded(r: &BigRational, bits: u32, dir: Round) -> Self {
        if let Some(d) = Self::from_rational(r) {
            return d.round(bits, dir);
        }
        let num = r.numer();
        let den = r.denom();
        // scale so the quotient carries at least `bits` significant bits
        let shift = bits as i64 + den.bits() as i64 - num.bits() as i64 + 2;
        let shift = shift.max(0);
        let scaled = num << (shift as usize);
        let q = div_dir(&scaled, den, dir);
        Self::new(q, -shift).round(bits, dir)
    }

    fn normalize(&mut self) {
        if self.mantissa.is_zero() {
            self.exponent = 0;
            return;
        }
        if let Some(tz) = self.mantissa.trailing_zeros() {
            if tz > 0 {
                self.mantissa >>= tz as usize;
                self.exponent += tz as i64;
            }
        }
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.mantissa
    }

    pub fn exponent(&self) -> i64 {
        self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.mantissa.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.mantissa.is_negative()
    }

    pub fn abs(&self) -> Self {
        DyadicRational {
            mantissa: self.mantissa.abs(),
            exponent: self.exponent,
        }
    }

    /// Multiply by `2^k` (exact).
    pub fn shl(&self, k: i64) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        DyadicRational {
            mantissa: self.mantissa.clone(),
            exponent: self.exponent + k,
        }
    }

    /// Exponent of the leading bit: `2^msb <= |self| < 2^(msb+1)`.
    pub fn msb(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.exponent + self.mantissa.bits() as i64 - 1)
        }
    }

    pub fn to_rational(&self) -> BigRational {
        if self.exponent >= 0 {
            BigRational::from_integer(&self.mantissa << (self.exponent as usize))
        } else {
            BigRational::new(
                self.mantissa.clone(),
                BigInt::one() << ((-self.exponent) as usize),
            )
        }
    }

    pub fn to_f64(&self) -> f64 {
        let bits = self.mantissa.bits() as i64;
        let drop = (bits - 60).max(0);
        let m = (&self.mantissa >> (drop as usize)).to_f64().unwrap_or(0.0);
        // scale in two halves: 2^e alone underflows before m brings it back
        let e = (self.exponent + drop).clamp(-4000, 4000);
        let half = e / 2;
        m * 2f64.powi(half as i32) * 2f64.powi((e - half) as i32)
    }

    /// Round to at most `bits` significant bits in direction `dir`.
    pub fn round(&self, bits: u32, dir: Round) -> Self {
        let len = self.mantissa.bits();
        if len <= bits as u64 {
            return self.clone();
        }
        let drop = (len - bits as u64) as usize;
        Self::new(
            shr_dir(&self.mantissa, drop, dir),
            self.exponent + drop as i64,
        )
    }

    /// Round to a multiple of `2^exp` in direction `dir`.
    pub fn round_to_exponent(&self, exp: i64, dir: Round) -> Self {
        if self.exponent >= exp || self.is_zero() {
            return self.clone();
        }
        let drop = (exp - self.exponent) as usize;
        Self::new(shr_dir(&self.mantissa, drop, dir), exp)
    }

    /// Largest integer `<= self`.
    pub fn floor(&self) -> BigInt {
        if self.exponent >= 0 {
            &self.mantissa << (self.exponent as usize)
        } else {
            self.mantissa
                .div_floor(&(BigInt::one() << ((-self.exponent) as usize)))
        }
    }

    /// Quotient `self / other` rounded to `bits` significant bits.
    pub fn div_round(&self, other: &Self, bits: u32, dir: Round) -> Self {
        assert!(!other.is_zero(), "dyadic division by zero");
        if self.is_zero() {
            return Self::zero();
        }
        let shift =
            (bits as i64 + other.mantissa.bits() as i64 - self.mantissa.bits() as i64 + 2).max(0);
        let num = &self.mantissa << (shift as usize);
        let q = div_dir(&num, &other.mantissa, dir);
        Self::new(q, self.exponent - other.exponent - shift).round(bits, dir)
    }

    /// Product with a rational, rounded to `bits` significant bits.
    pub fn mul_rational(&self, r: &BigRational, bits: u32, dir: Round) -> Self {
        let exact = BigRational::new(self.mantissa.clone() * r.numer(), r.denom().clone());
        let scaled = DyadicRational::from_rational_rounded(&exact, bits, dir);
        scaled.shl(self.exponent)
    }

    pub fn powi(&self, n: u32) -> Self {
        DyadicRational::new(
            num_traits::pow(self.mantissa.clone(), n as usize),
            self.exponent * n as i64,
        )
    }

    /// Text form `m*2^e`.
    pub fn to_exact_string(&self) -> String {
        format!("{}*2^{}", self.mantissa, self.exponent)
    }

    /// Decimal rendering with `digits` fractional digits, rounded in `dir`.
    pub fn to_decimal(&self, digits: u32, dir: Round) -> String {
        let r = self.to_rational();
        let scale = num_traits::pow(BigInt::from(10u32), digits as usize);
        let scaled = r * BigRational::from_integer(scale.clone());
        let q = match dir {
            Round::Down => scaled.floor().to_integer(),
            Round::Up => scaled.ceil().to_integer(),
        };
        let neg = q.is_negative();
        let mag = q.abs();
        let (int, frac) = mag.div_rem(&scale);
        let mut s = String::new();
        if neg {
            s.push('-');
        }
        s.push_str(&int.to_string());
        if digits > 0 {
            let f = frac.to_string();
            s.push('.');
            for _ in f.len()..digits as usize {
                s.push('0');
            }
            s.push_str(&f);
        }
        s
    }
}

/// Integer quotient rounded toward -inf (`Down`) or +inf (`Up`).
/// `m / 2^drop` rounded in direction `dir`; never materializes `2^drop`.
fn shr_dir(m: &BigInt, drop: usize, dir: Round) -> BigInt {
    // BigInt >> rounds towards negative infinity
    match dir {
        Round::Down => m >> drop,
        Round::Up => -((-m) >> drop),
    }
}

pub(crate) fn div_dir(num: &BigInt, den: &BigInt, dir: Round) -> BigInt {
    match dir {
        Round::Down => num.div_floor(den),
        Round::Up => -((-num).div_floor(den)),
    }
}

impl Ord for DyadicRational {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = (&self.mantissa, &other.mantissa);
        match (a.sign(), b.sign()) {
            (Sign::Minus, Sign::Minus) | (Sign::Plus, Sign::Plus) => {}
            (sa, sb) => return sign_rank(sa).cmp(&sign_rank(sb)),
        }
        if a.sign() != Sign::NoSign {
            // same sign: distinct binary magnitudes decide without aligning
            let ma = a.bits() as i64 + self.exponent;
            let mb = b.bits() as i64 + other.exponent;
            if ma != mb {
                let by_magnitude = ma.cmp(&mb);
                return if a.sign() == Sign::Minus {
                    by_magnitude.reverse()
                } else {
                    by_magnitude
                };
            }
        }
        let e = self.exponent.min(other.exponent);
        let la = a << ((self.exponent - e) as usize);
        let lb = b << ((other.exponent - e) as usize);
        la.cmp(&lb)
    }
}

fn sign_rank(s: Sign) -> i8 {
    match s {
        Sign::Minus => -1,
        Sign::NoSign => 0,
        Sign::Plus => 1,
    }
}

impl PartialOrd for DyadicRational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for &DyadicRational {
    type Output = DyadicRational;
    fn add(self, rhs: &DyadicRational) -> DyadicRational {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        let e = self.exponent.min(rhs.exponent);
        let a = &self.mantissa << ((self.exponent - e) as usize);
        let b = &rhs.mantissa << ((rhs.exponent - e) as usize);
        DyadicRational::new(a + b, e)
    }
}

impl Sub for &DyadicRational {
    type Output = DyadicRational;
    fn sub(self, rhs: &DyadicRational) -> DyadicRational {
        self + &(-rhs)
    }
}

impl Mul for &DyadicRational {
    type Output = DyadicRational;
    fn mul(self, rhs: &DyadicRational) -> DyadicRational {
        DyadicRational::new(&self.mantissa * &rhs.mantissa, self.exponent + rhs.exponent)
    }
}

impl Neg for &DyadicRational {
    type Output = DyadicRational;
    fn neg(self) -> DyadicRational {
        DyadicRational {
            mantissa: -&self.mantissa,
            exponent: self.exponent,
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for DyadicRational {
            type Output = DyadicRational;
            fn $m(self, rhs: DyadicRational) -> DyadicRational {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for DyadicRational {
    type Output = DyadicRational;
    fn neg(self) -> DyadicRational {
        -(&self)
    }
}

impl From<i64> for DyadicRational {
    fn from(v: i64) -> Self {
        DyadicRational::from_int(v)
    }
}

impl fmt::Debug for DyadicRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (~{:e})", self.to_exact_string(), self.to_f64())
    }
}

impl fmt::Display for DyadicRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_exact_string())
    }
}

impl FromStr for DyadicRational {
    type Err = ParseError;

    /// Accepts `m*2^e`, `p/q` with `q` a power of two, integers, and binary
    /// literals such as `0.101`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || ParseError::Number(s.to_string());
        if let Some((m, e)) = s.split_once("*2^") {
            let m: BigInt = m.trim().parse().map_err(|_| bad())?;
            let e: i64 = e.trim().parse().map_err(|_| bad())?;
            return Ok(DyadicRational::new(m, e));
        }
        let r = parse_rational(s)?;
        DyadicRational::from_rational(&r).ok_or_else(|| ParseError::NotDyadic(s.to_string()))
    }
}

/// Parses `p/q`, an integer, or a binary literal `[-]i.bbbb` (digits 0/1 only).
pub fn parse_rational(s: &str) -> Result<BigRational, ParseError> {
    let s = s.trim();
    let bad = || ParseError::Number(s.to_string());
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(p, q));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let (neg, int) = match int.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, int),
        };
        if frac.is_empty() || !frac.chars().all(|c| c == '0' || c == '1') {
            return Err(bad());
        }
        if !int.chars().all(|c| c == '0' || c == '1') {
            return Err(bad());
        }
        let int_val = if int.is_empty() {
            BigInt::zero()
        } else {
            BigInt::parse_bytes(int.as_bytes(), 2).ok_or_else(bad)?
        };
        let frac_val = BigInt::parse_bytes(frac.as_bytes(), 2).ok_or_else(bad)?;
        let den = BigInt::one() << frac.len();
        let v = BigRational::new(int_val * &den + frac_val, den);
        return Ok(if neg { -v } else { v });
    }
    let p: BigInt = s.parse().map_err(|_| bad())?;
    Ok(BigRational::from_integer(p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> DyadicRational {
        s.parse().unwrap()
    }

    #[test]
    fn to_f64_near_the_subnormal_range() {
        let x = DyadicRational::new((BigInt::one() << 79usize) + 1, -1045);
        assert_eq!(x.to_f64(), 2f64.powi(-966));
        assert_eq!(DyadicRational::pow2(-1074).to_f64(), f64::from_bits(1));
        assert_eq!(DyadicRational::from_int(-3).to_f64(), -3.0);
    }

    #[test]
    fn canonical_form() {
        let x = DyadicRational::new(BigInt::from(12), 0);
        assert_eq!(x.mantissa(), &BigInt::from(3));
        assert_eq!(x.exponent(), 2);
        let z = DyadicRational::new(BigInt::zero(), 17);
        assert_eq!(z.exponent(), 0);
    }

    #[test]
    fn parse_forms() {
        assert_eq!(d("5/8"), DyadicRational::new(BigInt::from(5), -3));
        assert_eq!(d("0.101"), d("5/8"));
        assert_eq!(d("5*2^-3"), d("5/8"));
        assert_eq!(d("3"), DyadicRational::from_int(3));
        assert!("1/3".parse::<DyadicRational>().is_err());
        assert!("0.12".parse::<DyadicRational>().is_err());
    }

    #[test]
    fn arithmetic_is_exact() {
        assert_eq!(&d("1/4") + &d("1/16"), d("5/16"));
        assert_eq!(&d("1/4") - &d("1/2"), d("-1/4"));
        assert_eq!(&d("3/4") * &d("3/4"), d("9/16"));
        assert!(d("-1/2") < d("1/1024"));
        assert!(d("3/8") > d("5/16"));
    }

    #[test]
    fn directed_rounding() {
        let third = BigRational::new(BigInt::from(1), BigInt::from(3));
        let lo = DyadicRational::from_rational_rounded(&third, 10, Round::Down);
        let hi = DyadicRational::from_rational_rounded(&third, 10, Round::Up);
        assert!(lo.to_rational() < third && third < hi.to_rational());
        assert!((&hi - &lo) <= DyadicRational::pow2(-11));
        let neg = -third;
        let nlo = DyadicRational::from_rational_rounded(&neg, 10, Round::Down);
        assert!(nlo.to_rational() < neg);
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(d("1/4").to_decimal(3, Round::Down), "0.250");
        assert_eq!(d("1/8").to_decimal(2, Round::Up), "0.13");
        assert_eq!(d("-1/8").to_decimal(2, Round::Down), "-0.13");
    }

    #[test]
    fn floor_and_msb() {
        assert_eq!(d("-1/2").floor(), BigInt::from(-1));
        assert_eq!(d("7/2").floor(), BigInt::from(3));
        assert_eq!(d("5/16").msb(), Some(-2));
    }

    fn arb_dyadic() -> impl proptest::strategy::Strategy<Value = DyadicRational> {
        use proptest::prelude::*;
        (any::<i64>(), -200i64..200).prop_map(|(m, e)| DyadicRational::new(m.into(), e))
    }

    proptest::proptest! {
        #[test]
        fn ordering_matches_rationals(a in arb_dyadic(), b in arb_dyadic()) {
            proptest::prop_assert_eq!(a.cmp(&b), a.to_rational().cmp(&b.to_rational()));
        }

        #[test]
        fn rounding_brackets_the_value(a in arb_dyadic(), exp in -250i64..250, bits in 1u32..70) {
            let r = a.to_rational();
            let down = a.round_to_exponent(exp, Round::Down);
            let up = a.round_to_exponent(exp, Round::Up);
            let step = DyadicRational::pow2(exp).to_rational();
            proptest::prop_assert!(down.to_rational() <= r && r <= up.to_rational());
            proptest::prop_assert!(up.to_rational() - down.to_rational() <= step);
            let (lo, hi) = (a.round(bits, Round::Down), a.round(bits, Round::Up));
            proptest::prop_assert!(lo <= a && a <= hi);
            proptest::prop_assert!(lo.mantissa().bits() <= bits as u64);
            proptest::prop_assert!(hi.mantissa().bits() <= bits as u64 + 1);
        }
    }
}
