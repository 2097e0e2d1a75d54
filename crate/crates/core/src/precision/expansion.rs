//! Base-two expansions of reals in `[0, 1)`.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::Signed;

use super::dyadic::DyadicRational;
use super::enclosure::Enclosure;
use crate::ensembles::BitString;
use crate::error::PrecisionError;

/// The first `n` bits of `alpha - floor(alpha)`, taking the terminating
/// expansion for dyadic rationals.
pub fn bits_prefix_rational(alpha: &BigRational, n: usize) -> BitString {
    let scaled = alpha * BigRational::from_integer(BigInt::from(1) << n);
    let j = scaled.numer().div_floor(scaled.denom());
    low_bits(&j, n)
}

pub fn bits_prefix(alpha: &DyadicRational, n: usize) -> BitString {
    bits_prefix_rational(&alpha.to_rational(), n)
}

/// `alpha_n` for every real inside `alpha`, or an error when the enclosure
/// straddles a multiple of `2^-n`.
pub fn bits_prefix_enclosure(alpha: &Enclosure, n: usize) -> Result<BitString, PrecisionError> {
    let j_lo = alpha.lo().shl(n as i64).floor();
    let j_hi = alpha.hi().shl(n as i64).floor();
    if j_lo != j_hi {
        return Err(PrecisionError::NeedMorePrecision(format!(
            "enclosure {alpha} straddles a multiple of 2^-{n}"
        )));
    }
    Ok(low_bits(&j_lo, n))
}

/// `0.b_1...b_n` as a dyadic.
pub fn prefix_value(bits: &BitString) -> DyadicRational {
    let v = BigInt::from(bits.to_uint());
    DyadicRational::new(v, -(bits.len() as i64))
}

fn low_bits(j: &BigInt, n: usize) -> BitString {
    let modulus = BigInt::from(1) << n;
    let r = j.mod_floor(&modulus);
    debug_assert!(!r.is_negative());
    let r: BigUint = r.to_biguint().expect("nonnegative");
    BitString::fixed_width(&r, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> DyadicRational {
        s.parse().unwrap()
    }

    #[test]
    fn five_eighths() {
        assert_eq!(bits_prefix(&d("5/8"), 6).to_string(), "101000");
        assert_eq!(bits_prefix(&d("1/2"), 3).to_string(), "100");
        assert_eq!(bits_prefix(&d("13/8"), 3).to_string(), "101");
        assert_eq!(bits_prefix(&d("-1/4"), 2).to_string(), "11");
    }

    #[test]
    fn straddle_is_reported() {
        let e =
            Enclosure::from_rational(&BigRational::new(374999.into(), 1000000.into()), 40).hull(
                &Enclosure::from_rational(&BigRational::new(375001.into(), 1000000.into()), 40),
            );
        assert!(matches!(
            bits_prefix_enclosure(&e, 3),
            Err(PrecisionError::NeedMorePrecision(_))
        ));
        assert_eq!(bits_prefix_enclosure(&e, 2).unwrap().to_string(), "01");
    }

    #[test]
    fn prefix_value_round_trip() {
        assert_eq!(prefix_value(&"101".parse().unwrap()), d("5/8"));
        assert_eq!(prefix_value(&BitString::empty()), DyadicRational::zero());
    }
}
