use num_rational::BigRational;
use num_traits::One;
use serde::Serialize;

use super::{MonotoneQuantity, Observable};
use crate::error::{Error, Result};
use crate::precision::{
    ceil_log2_upper, ceil_neg_log2_lower, exp2_enclosure, ln2, DyadicRational, Enclosure,
    Temperature,
};
use crate::relations::first_mixed_index;
use crate::thermo::eval_limit_census;

/// Increments `g(T, k+1) - g(T, k)` are re-checked for `k0 <= k <= k0 + CHECK_SPAN`.
pub const CHECK_SPAN: u64 = 48;

/// Offsets from `k0` at which the slope bounds are re-checked.
const SLOPE_OFFSETS: [u64; 4] = [0, 1, 8, 32];

/// Certified constants for one quantity at one temperature `T`.
///
/// For every `k >= k0` and `x` in `(T, t)`:
///
/// * `2^-a_lower (x - T) <= g(x, k) - g(T, k) <= 2^a (x - T)`
/// * `|p|^c 2^(-|p|/T - b) <= g(T, k+1) - g(T, k) <= |p|^upper_power 2^(-|p|/T + upper_shift)`
///
/// where `p` is the `(k+1)`-th program. Every exponent is a natural number.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConditionCertificate {
    pub a: u32,
    pub a_lower: u32,
    pub b: u32,
    pub c: u32,
    pub upper_power: u32,
    pub upper_shift: u32,
    pub k0: u64,
    pub t: Temperature,
}

/// A quantity at a fixed temperature together with its verified certificate.
#[derive(Clone, Debug)]
pub struct QuantityHandle {
    quantity: MonotoneQuantity,
    temperature: Temperature,
    certificate: ConditionCertificate,
}

impl QuantityHandle {
    pub fn quantity(&self) -> &MonotoneQuantity {
        &self.quantity
    }

    pub fn temperature(&self) -> &Temperature {
        &self.temperature
    }

    pub fn certificate(&self) -> &ConditionCertificate {
        &self.certificate
    }
}

/// Least `e >= 0` with `x <= 2^e` for every `x` in the enclosure.
fn exponent_above(x: &Enclosure) -> u32 {
    if x.hi().is_positive() {
        ceil_log2_upper(x).max(0) as u32
    } else {
        0
    }
}

/// Least `e >= 0` with `2^-e <= x` for every `x` in the enclosure.
fn exponent_below(x: &Enclosure, what: &str) -> Result<u32> {
    if !x.lo().is_positive() {
        return Err(Error::Certification(format!(
            "{what} is not certifiably positive: {x}"
        )));
    }
    Ok(ceil_neg_log2_lower(x).max(0) as u32)
}

fn squared(r: &BigRational) -> BigRational {
    r * r
}

/// Number of programs shorter than `bound`, at least 1: the `(k+1)`-th program
/// is then the first with length `>= bound`.
fn programs_shorter_than(q: &MonotoneQuantity, bound: &DyadicRational) -> u64 {
    let census = q.census();
    let cutoff = bound.floor();
    let upto = num_traits::ToPrimitive::to_usize(&cutoff)
        .unwrap_or(usize::MAX)
        .min(crate::thermo::MAX_TRUNCATION);
    let census = if census.is_unbounded() {
        census.upto(upto)
    } else {
        census.clone()
    };
    let mut count = 0u64;
    for (len, c) in census.nonzero() {
        if DyadicRational::from_int(len as i64) >= *bound {
            break;
        }
        count = count.saturating_add(num_traits::ToPrimitive::to_u64(c).unwrap_or(u64::MAX));
    }
    count.max(1)
}

fn constants(q: &MonotoneQuantity, temp: &Temperature, bits: u32) -> Result<ConditionCertificate> {
    let wp = bits + 16;
    let t = temp.midpoint_to_one();
    let beta = temp.inverse();
    let beta_t = t.inverse();
    let lam = ln2(wp);
    let census = q.census();
    let at_t = eval_limit_census(census, &t, wp)?;
    let at_temp = eval_limit_census(census, temp, wp)?;
    let first = q.partial_eval(temp, 1, wp)?;
    // one program: Z_1 = W_1 / |p_1| = 2^(-|p_1|/T)
    let z1 = first.z.clone();
    let shortest = q.length_of(1)?;
    let cert = |a, a_lower, b, c, upper_power, upper_shift, k0| ConditionCertificate {
        a,
        a_lower,
        b,
        c,
        upper_power,
        upper_shift,
        k0,
        t: t.clone(),
    };
    match q.observable() {
        Observable::Z => {
            // g' = (ln2/x^2) W_k(x), and W_1(T) <= W_k(x) <= W(t) on [T, t]
            let slope_hi = at_t.w.mul(&lam).mul_rational(&squared(&beta), wp);
            let slope_lo = first.w.mul(&lam).mul_rational(&squared(&beta_t), wp);
            let a_lower = exponent_below(&slope_lo, "W_1(T)")?;
            // increments are exactly 2^(-|p|/T)
            Ok(cert(exponent_above(&slope_hi), a_lower, 0, 0, 0, 0, 1))
        }
        Observable::NegF => {
            // g = x log2 Z_k(x), g' = S_k(x), nondecreasing in both x and k
            let second = q.partial_eval(temp, 2, wp)?;
            let a_lower = exponent_below(&second.s, "S_2(T)")?;
            // T log2(1 + w/Z_k) lies in (T w/(Z_{k+1} ln2), T w/(Z_k ln2))
            let lower = at_temp.z.mul(&lam).mul_rational(&beta, wp);
            let upper = z1.mul(&lam).recip(wp)?.mul_rational(temp.value(), wp);
            Ok(cert(
                exponent_above(&at_t.s),
                a_lower,
                exponent_above(&lower),
                0,
                0,
                exponent_above(&upper),
                2,
            ))
        }
        Observable::E | Observable::S => {
            let mixed = first_mixed_index(census).ok_or_else(|| {
                Error::Certification(
                    "every program has the same length, so E and S are constant in T".into(),
                )
            })?;
            // past k0, |p_{k+1}| >= 2E(T) >= 2E_k(T), so |p| - E_k >= |p|/2
            let doubled = at_temp.e.hi().shl(1);
            let k0 = mixed.max(programs_shorter_than(q, &doubled));
            let ek0 = q.partial_eval(temp, k0, wp)?.e;
            let spread = (&ek0 - &Enclosure::from_int(shortest as i64)).sqr();
            if !(&ek0 - &Enclosure::from_int(shortest as i64))
                .lo()
                .is_positive()
            {
                return Err(Error::Certification(format!(
                    "E_{k0}(T) does not exceed the shortest length"
                )));
            }
            // C_k(y) = (ln2/y^2) Var_k(y) with Var_k <= Y(t)/Z_1(T) and
            // Var_k >= (E_k0(T) - |p_1|)^2 w_1(T) / Z(t)
            let c_hi = at_t
                .y
                .div(&z1, wp)?
                .mul(&lam)
                .mul_rational(&squared(&beta), wp);
            let c_lo = spread
                .mul(&z1)
                .div(&at_t.z, wp)?
                .mul(&lam)
                .mul_rational(&squared(&beta_t), wp);
            if q.observable() == Observable::E {
                let a_lower = exponent_below(&c_lo, "the lower heat-capacity bound")?;
                let b = exponent_above(&at_temp.z.shl(1));
                let shift = exponent_above(&z1.recip(wp)?);
                Ok(cert(exponent_above(&c_hi), a_lower, b, 1, 1, shift, k0))
            } else {
                // S' = C/y, and the increment adds log2(Z_{k+1}/Z_k) <= w/(Z_1 ln2)
                let s_hi = c_hi.mul_rational(&beta, wp);
                let s_lo = c_lo.mul_rational(&beta_t, wp);
                let a_lower = exponent_below(&s_lo, "the lower entropy-slope bound")?;
                let b = exponent_above(&at_temp.z.shl(1).mul_rational(temp.value(), wp));
                let per_length = &Enclosure::from_rational(&beta, wp) + &lam.recip(wp)?;
                let shift = exponent_above(&per_length.div(&z1, wp)?);
                Ok(cert(exponent_above(&s_hi), a_lower, b, 1, 1, shift, k0))
            }
        }
    }
}

/// Fails when `lhs <= rhs` is certainly false.
fn require_le(lhs: &Enclosure, rhs: &Enclosure, what: impl FnOnce() -> String) -> Result<()> {
    if lhs.lo() > rhs.hi() {
        Err(Error::Certification(format!("{}: {lhs} > {rhs}", what())))
    } else {
        Ok(())
    }
}

/// Whether the quantity has at least `k` programs to sum.
fn available(q: &MonotoneQuantity, k: u64) -> bool {
    q.census_for(k)
        .is_ok_and(|c| c.total() >= num_bigint::BigUint::from(k))
}

fn verify(
    q: &MonotoneQuantity,
    temp: &Temperature,
    cert: &ConditionCertificate,
    bits: u32,
) -> Result<()> {
    let beta = temp.inverse();
    if !available(q, cert.k0) {
        return Err(Error::Certification(format!(
            "k0 = {} exceeds the enumerated domain",
            cert.k0
        )));
    }
    for k in cert.k0..=cert.k0 + CHECK_SPAN {
        if !available(q, k + 1) {
            break;
        }
        let len = q.length_of(k + 1)?;
        let exponent = BigRational::from_integer((len as i64).into()) * &beta;
        let p = bits
            + exponent
                .ceil()
                .to_integer()
                .try_into()
                .unwrap_or(u32::MAX / 4)
            + 16;
        let inc = &q.partial(temp, k + 1, p)? - &q.partial(temp, k, p)?;
        let w = exp2_enclosure(&-exponent, p);
        let l = Enclosure::from_int(len as i64);
        let lower = w.mul(&l.powi(cert.c)).shl(-(cert.b as i64));
        let upper = w
            .mul(&l.powi(cert.upper_power))
            .shl(cert.upper_shift as i64);
        require_le(&lower, &inc, || {
            format!("{} lower increment bound at k = {k}", q.observable())
        })?;
        require_le(&inc, &upper, || {
            format!("{} upper increment bound at k = {k}", q.observable())
        })?;
    }
    let span = cert.t.value() - temp.value();
    for j in 1..=3i64 {
        let dx = &span * BigRational::new(j.into(), 4.into());
        let x = Temperature::new(temp.value() + &dx)?;
        let dx = Enclosure::from_rational(&dx, bits + 8);
        for offset in SLOPE_OFFSETS {
            let k = cert.k0 + offset;
            if !available(q, k) {
                break;
            }
            let d = &q.partial(&x, k, bits)? - &q.partial(temp, k, bits)?;
            let hi = dx.shl(cert.a as i64);
            let lo = dx.shl(-(cert.a_lower as i64));
            require_le(&d, &hi, || {
                format!("{} upper slope at x = {x}, k = {k}", q.observable())
            })?;
            require_le(&lo, &d, || {
                format!("{} lower slope at x = {x}, k = {k}", q.observable())
            })?;
        }
    }
    Ok(())
}

/// Compute the certificate constants for `q` at `T` and re-check every
/// claimed inequality on enumerated data before returning the handle.
///
/// `t = (T + 1)/2`. The increment bounds are checked for `CHECK_SPAN + 1`
/// consecutive `k` from `k0`, the slope bounds at three points of `(T, t)` and
/// several `k`. A violated inequality is a [`Error::Certification`].
pub fn certify(
    q: MonotoneQuantity,
    temperature: &Temperature,
    bits: u32,
) -> Result<QuantityHandle> {
    temperature.require_unit()?;
    if q.census().total() < num_bigint::BigUint::from(2u32) && !q.census().is_unbounded() {
        return Err(Error::Certification(
            "at least two programs are needed".into(),
        ));
    }
    let certificate = constants(&q, temperature, bits)?;
    verify(&q, temperature, &certificate, bits)?;
    debug_assert!(certificate.t.value() < &BigRational::one());
    Ok(QuantityHandle {
        quantity: q,
        temperature: temperature.clone(),
        certificate,
    })
}
