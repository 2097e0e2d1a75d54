use std::collections::HashSet;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use serde::Serialize;

use super::{MonotoneQuantity, QuantityHandle};
use crate::ensembles::BitString;
use crate::error::{Error, Result};
use crate::precision::{
    bits_prefix_enclosure, bits_prefix_rational, prefix_value, DyadicRational, Enclosure, Round,
    Temperature,
};
use crate::thermo::{ThermoEvaluation, MAX_TRUNCATION};

/// Stages tried by [`semidecide_above`] when the caller has no budget in mind.
pub const DEFAULT_SEMIDECISION_BUDGET: usize = 64;

/// Largest number of programs enumerated one by one (witness outputs and the
/// post-`k_e` length check).
const MAX_ENUMERATED: u64 = 1 << 20;

/// The witness verification covers this many multiples of `k_e` in total.
const VERIFY_MULTIPLE: u64 = 11;

#[derive(Clone, Debug, Serialize)]
pub struct WitnessReport {
    #[serde(rename = "T")]
    pub temperature: Temperature,
    pub n: usize,
    pub k_e: u64,
    /// Index (from 1) of the upper-oracle term that was beaten.
    pub m_e: usize,
    /// Every program after the `k_e`-th is longer than this.
    pub length_threshold: DyadicRational,
    /// Least string in shortlex order that no program among the first `k_e` outputs.
    pub witness: BitString,
    /// The length bound was checked for program indices in `(k_e, verified_through]`.
    pub verified_through: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "answer", rename_all = "snake_case")]
pub enum SemiDecision {
    /// `h(m) < g(r, k)`, which certifies `T < r`.
    Yes {
        m: usize,
        k: u64,
    },
    Unknown {
        stages: usize,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct ReconstructionReport {
    /// The temperature the handle was certified at; used only to check containment.
    #[serde(rename = "T_true")]
    pub temperature: Temperature,
    pub n: u32,
    pub u: Temperature,
    pub beta_bits_used: usize,
    pub k_e: u64,
    pub l_e: usize,
    pub m_e: usize,
    pub candidate: DyadicRational,
    pub radius: DyadicRational,
    /// Upper bound on `sum_{i > k_e} |p_i|^b 2^(-|p_i|/T)`, checked below `2^-n`.
    pub tail_bound: DyadicRational,
}

/// Number of programs of length at most `len`, if it fits in a `u64`.
fn programs_through(q: &MonotoneQuantity, len: usize) -> Option<u64> {
    let census = q.census();
    let census = if census.is_unbounded() {
        census.upto(len)
    } else {
        census.upto(len.min(census.horizon()))
    };
    census.total().to_u64()
}

/// Horizon of search stage `s` (from 1): every program up to `s` bits longer
/// than the `k0`-th, and never fewer than `k0`. Growing by length keeps the
/// number of distinct lengths summed, which is what evaluation costs, linear in `s`.
fn stage_horizon(q: &MonotoneQuantity, k0: u64, s: usize) -> Result<u64> {
    let base = q.length_of(k0)?;
    let len = (base + s).min(MAX_TRUNCATION);
    let mut k = programs_through(q, len).unwrap_or(u64::MAX);
    // a finite census cannot grow further
    if !q.census().is_unbounded() {
        k = k.min(q.census().total().to_u64().unwrap_or(u64::MAX));
    }
    Ok(k.max(k0))
}

/// Least `k` in `[lo, hi]` with `pred(k)`, given `pred(hi)` and `pred` monotone.
fn least_true(lo: u64, hi: u64, mut pred: impl FnMut(u64) -> Result<bool>) -> Result<u64> {
    if pred(lo)? {
        return Ok(lo);
    }
    let (mut bad, mut good) = (lo, hi);
    while good - bad > 1 {
        let mid = bad + (good - bad) / 2;
        if pred(mid)? {
            good = mid;
        } else {
            bad = mid;
        }
    }
    Ok(good)
}

/// Programs `1..=count` in canonical order with their outputs when known:
/// listed snapshot records first, then the builtin machine's domain by length.
fn enumerate_programs(
    q: &MonotoneQuantity,
    count: u64,
) -> Result<Vec<(BitString, Option<BitString>)>> {
    if count > MAX_ENUMERATED {
        return Err(Error::Precondition(format!(
            "refusing to enumerate {count} programs (limit {MAX_ENUMERATED})"
        )));
    }
    let snapshot = q.snapshot();
    let listed = snapshot.listed_horizon();
    let mut out: Vec<(BitString, Option<BitString>)> = snapshot
        .programs()
        .iter()
        .filter(|r| r.program.len() <= listed)
        .take(count as usize)
        .map(|r| (r.program.clone(), Some(r.output.clone())))
        .collect();
    let mut len = listed + 1;
    while (out.len() as u64) < count {
        let builtin = snapshot.builtin().ok_or_else(|| {
            Error::Precondition(format!(
                "the snapshot lists only {} programs; {count} are needed",
                out.len()
            ))
        })?;
        if len > MAX_TRUNCATION {
            return Err(Error::Precondition(format!(
                "fewer than {count} programs up to length {MAX_TRUNCATION}"
            )));
        }
        if q.census().count(len) > BigUint::from(MAX_ENUMERATED) {
            return Err(Error::Precondition(format!(
                "too many programs of length {len} to enumerate"
            )));
        }
        for p in builtin.programs_of_length(len) {
            if out.len() as u64 == count {
                break;
            }
            let output = builtin.run(&p, snapshot.step_budget()).output().cloned();
            out.push((p, output));
        }
        len += 1;
    }
    Ok(out)
}

/// Least string in shortlex order outside `taken`.
fn least_absent(taken: &HashSet<BitString>) -> BitString {
    let mut s = BitString::empty();
    while taken.contains(&s) {
        s = s.successor();
    }
    s
}

/// Find `k_e` with `h(m_e) < g(0.T_n + 2^-n, k_e)`, a string no program among
/// the first `k_e` outputs, and check that every later program is longer
/// than `T (n - a - b)`.
///
/// Stage `m` compares the `m`-th upper-oracle term with `g` at a horizon that
/// grows by one program length per stage; once it succeeds, `k_e` is the least
/// horizon that still succeeds. The length bound is then checked on the
/// programs with index in `(k_e, 11 k_e]`.
pub fn witness_search(
    handle: &QuantityHandle,
    t_n_bits: &BitString,
    upper: &[DyadicRational],
    bits: u32,
) -> Result<WitnessReport> {
    let q = handle.quantity();
    let temp = handle.temperature();
    let cert = handle.certificate();
    let n = t_n_bits.len();
    if n == 0 {
        return Err(Error::Precondition(
            "at least one bit of T is needed".into(),
        ));
    }
    if bits_prefix_rational(temp.value(), n) != *t_n_bits {
        return Err(Error::Precondition(format!(
            "{t_n_bits} is not the first {n} bits of T = {temp}"
        )));
    }
    let x = &prefix_value(t_n_bits) + &DyadicRational::pow2(-(n as i64));
    if &x.to_rational() >= cert.t.value() {
        return Err(Error::Precondition(format!(
            "n = {n} is too small: 0.T_n + 2^-n = {x} is not below t = {}",
            cert.t
        )));
    }
    let x = Temperature::from_dyadic(&x)?;
    let p = bits + n as u32 + 16;
    let mut found = None;
    let mut table = q.weights(&x, p);
    for (i, h) in upper.iter().enumerate() {
        let k = stage_horizon(q, cert.k0, i + 1)?;
        if q.partial_with(&x, k, &mut table, p)?.lo() > h {
            let k_e = least_true(cert.k0, k, |k| {
                Ok(q.partial_with(&x, k, &mut table, p)?.lo() > h)
            })?;
            found = Some((k_e, i + 1));
            break;
        }
    }
    let (k_e, m_e) = found.ok_or_else(|| {
        Error::OracleExhausted(format!(
            "{} upper-oracle terms never fell below g(0.T_n + 2^-n, k)",
            upper.len()
        ))
    })?;

    let exponent = n as i64 - cert.a as i64 - cert.b as i64;
    let threshold = BigRational::from_integer(exponent.into()) * temp.value();
    let length_threshold = DyadicRational::from_rational_rounded(&threshold, bits, Round::Down);

    let verified_through = k_e.saturating_mul(VERIFY_MULTIPLE);
    let programs = enumerate_programs(q, verified_through)?;
    let mut outputs = HashSet::new();
    for (program, output) in &programs[..k_e as usize] {
        let output = output.clone().ok_or_else(|| {
            Error::Precondition(format!(
                "program {program} did not halt within the step budget"
            ))
        })?;
        outputs.insert(output);
    }
    for (i, (program, _)) in programs.iter().enumerate().skip(k_e as usize) {
        if BigRational::from_integer((program.len() as i64).into()) <= threshold {
            return Err(Error::CertificateViolation(format!(
                "program {} ({program}, length {}) is not longer than {length_threshold}",
                i + 1,
                program.len()
            )));
        }
    }
    Ok(WitnessReport {
        temperature: temp.clone(),
        n,
        k_e,
        m_e,
        length_threshold,
        witness: least_absent(&outputs),
        verified_through,
    })
}

/// Search for `m, k >= k0` with `h(m) < g(r, k)`, which proves `T < r`.
///
/// Stage `s` tries the `s`-th oracle term at a horizon growing by one program
/// length per stage. `Yes` is only returned with a certified comparison, so it
/// is never returned for `r <= T`; `Unknown` means the budget or the stream ran out.
pub fn semidecide_above(
    handle: &QuantityHandle,
    r: &DyadicRational,
    upper: &[DyadicRational],
    budget: usize,
    bits: u32,
) -> Result<SemiDecision> {
    let x = Temperature::from_dyadic(r)?;
    x.require_unit()?;
    let q = handle.quantity();
    let k0 = handle.certificate().k0;
    let stages = budget.min(upper.len());
    let mut table = q.weights(&x, bits + stages as u32 + 16);
    for (i, h) in upper.iter().take(stages).enumerate() {
        let k = stage_horizon(q, k0, i + 1)?;
        if q.partial_with(&x, k, &mut table, bits + i as u32 + 16)?
            .lo()
            > h
        {
            return Ok(SemiDecision::Yes { m: i + 1, k });
        }
    }
    Ok(SemiDecision::Unknown { stages })
}

/// `sum_{i <= k} |p_i|^power 2^(-|p_i|/x)`, or the full sum when `k` is `None`.
fn power_sum_at(
    q: &MonotoneQuantity,
    x: &Temperature,
    power: u32,
    k: Option<u64>,
    bits: u32,
) -> Result<Enclosure> {
    let ev = match k {
        Some(k) => q.partial_eval(x, k, bits)?,
        None => crate::thermo::eval_limit_census(q.census(), x, bits)?,
    };
    moment_sum(ev, power)
}

/// `Z`, `W` or `Y` of an evaluation for `power` 0, 1 or 2.
fn moment_sum(ev: ThermoEvaluation, power: u32) -> Result<Enclosure> {
    match power {
        0 => Ok(ev.z),
        1 => Ok(ev.w),
        2 => Ok(ev.y),
        _ => Err(Error::Precondition(format!(
            "no moment sum of order {power}"
        ))),
    }
}

/// The number `beta = sum_i |p_i|^upper_power 2^(-|p_i|/u)` whose leading
/// bits [`reconstruct_t`] consumes.
pub fn beta_sum(handle: &QuantityHandle, u: &Temperature, bits: u32) -> Result<Enclosure> {
    power_sum_at(
        handle.quantity(),
        u,
        handle.certificate().upper_power,
        None,
        bits,
    )
}

/// Number of leading bits of `beta` that [`reconstruct_t`] expects: `ceil(T n / u)`.
pub fn beta_bits_needed(handle: &QuantityHandle, u: &Temperature, n: u32) -> usize {
    let r = BigRational::from_integer(n.into()) * handle.temperature().value() / u.value();
    r.ceil().to_integer().to_usize().unwrap_or(usize::MAX)
}

/// The first `ceil(T n / u)` bits of `beta`, for callers that play the role
/// of whoever knows `T`.
pub fn beta_prefix(
    handle: &QuantityHandle,
    u: &Temperature,
    n: u32,
    bits: u32,
) -> Result<BitString> {
    let need = beta_bits_needed(handle, u, n);
    let mut b = bits.max(need as u32 + 32);
    loop {
        match bits_prefix_enclosure(&beta_sum(handle, u, b)?, need) {
            Ok(prefix) => return Ok(prefix),
            Err(_) if b < 8 * bits.max(need as u32 + 32) => b *= 2,
            Err(e) => return Err(e.into()),
        }
    }
}

/// Recover `T` to within `2^(a_lower + upper_shift - n)` from `n` and the
/// first `ceil(T n / u)` bits of `beta`.
///
/// Finds the least `k_e >= k0` whose partial `beta` sum exceeds the prefix,
/// then advances the temperature stream `A` and lower stream `B` together
/// until `g(A(l_e), k_e) < B(m_e)`; the candidate is `A(l_e)`. The tail bound
/// `sum_{i > k_e} |p_i|^b 2^(-|p_i|/T) < 2^-n` and the containment
/// `|A(l_e) - T| < radius` are both checked against the handle's `T`.
pub fn reconstruct_t(
    handle: &QuantityHandle,
    u: &Temperature,
    n: u32,
    beta_prefix: &BitString,
    a_stream: &[DyadicRational],
    b_stream: &[DyadicRational],
    bits: u32,
) -> Result<ReconstructionReport> {
    let q = handle.quantity();
    let temp = handle.temperature();
    let cert = handle.certificate();
    if u <= temp || !u.in_unit_interval() {
        return Err(Error::Precondition(format!(
            "u = {u} must lie strictly between T and 1"
        )));
    }
    if n == 0 {
        return Err(Error::Precondition("n must be at least 1".into()));
    }
    let need = beta_bits_needed(handle, u, n);
    if beta_prefix.len() != need {
        return Err(Error::Precondition(format!(
            "expected {need} bits of beta, got {}",
            beta_prefix.len()
        )));
    }
    let p = bits + need as u32 + n + 16;
    let beta = power_sum_at(q, u, cert.upper_power, None, p)?;
    let whole = beta.lo().floor();
    if beta.hi().floor() != whole {
        return Err(Error::Unresolved(format!(
            "integer part of beta = {beta} is not determined"
        )));
    }
    let target = &prefix_value(beta_prefix) + &DyadicRational::from_int(whole);
    if target >= *beta.hi() || &target + &DyadicRational::pow2(-(need as i64)) <= *beta.lo() {
        return Err(Error::Precondition(format!(
            "{beta_prefix} is not a prefix of beta = {beta}"
        )));
    }

    let mut table = q.weights(u, p);
    let mut exceeds = |k: u64| -> Result<bool> {
        let ev = q.partial_eval_with(u, k, &mut table, p)?;
        Ok(moment_sum(ev, cert.upper_power)?.lo() > &target)
    };
    let mut k_e = None;
    for s in 1..=MAX_TRUNCATION {
        let k = stage_horizon(q, cert.k0, s)?;
        if exceeds(k)? {
            k_e = Some(least_true(cert.k0, k, &mut exceeds)?);
            break;
        }
        if !q.census().is_unbounded() && BigUint::from(k) >= q.census().total() {
            break;
        }
    }
    let k_e = k_e.ok_or_else(|| {
        Error::Unresolved("partial sums of beta never exceeded the prefix".into())
    })?;

    // both streams are consumed in step; with monotone streams the first
    // success comes no later than along any other schedule
    let mut found = None;
    for j in 1..=a_stream.len().max(b_stream.len()) {
        let l = j.min(a_stream.len());
        let m = j.min(b_stream.len());
        let (Some(a), Some(b)) = (
            a_stream.get(l.wrapping_sub(1)),
            b_stream.get(m.wrapping_sub(1)),
        ) else {
            break;
        };
        if q.partial(&Temperature::from_dyadic(a)?, k_e, p)?.hi() < b {
            found = Some((l, m, a.clone()));
            break;
        }
    }
    let (l_e, m_e, candidate) = found.ok_or_else(|| {
        Error::OracleExhausted(format!(
            "no pair among {} A terms and {} B terms separated g",
            a_stream.len(),
            b_stream.len()
        ))
    })?;

    let bound = DyadicRational::pow2(-(n as i64));
    let tail = &power_sum_at(q, temp, cert.upper_power, None, p)?
        - &power_sum_at(q, temp, cert.upper_power, Some(k_e), p)?;
    if tail.hi() >= &bound {
        return Err(Error::CertificateViolation(format!(
            "tail beyond k_e = {k_e} is {tail}, not below 2^-{n}"
        )));
    }
    let radius = DyadicRational::pow2(cert.a_lower as i64 + cert.upper_shift as i64 - n as i64);
    let error = (candidate.to_rational() - temp.value()).abs();
    if error >= radius.to_rational() {
        return Err(Error::CertificateViolation(format!(
            "candidate {candidate} is not within {radius} of T = {temp}"
        )));
    }
    Ok(ReconstructionReport {
        temperature: temp.clone(),
        n,
        u: u.clone(),
        beta_bits_used: need,
        k_e,
        l_e,
        m_e,
        candidate,
        radius,
        tail_bound: tail.hi().clone(),
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::ensembles::{enumerate, Builtin, EnsembleSpec};
    use crate::fixedpoint::{certify, Observable, Oracle, OracleKind};

    fn handle(o: Observable, t: Temperature) -> QuantityHandle {
        let snap =
            Arc::new(enumerate(&EnsembleSpec::Builtin(Builtin::Geometric), 1_000, 12).unwrap());
        certify(MonotoneQuantity::new(snap, o), &t, 64).unwrap()
    }

    fn half() -> QuantityHandle {
        handle(Observable::Z, Temperature::ratio(1, 2))
    }

    fn d(s: &str) -> DyadicRational {
        s.parse().unwrap()
    }

    fn t_bits(h: &QuantityHandle, n: usize) -> BitString {
        bits_prefix_rational(h.temperature().value(), n)
    }

    #[test]
    fn witness_on_geometric_z() {
        let h = half();
        let upper = Oracle::ClosedForm
            .stream(&h, OracleKind::Upper, 64)
            .unwrap();
        let w = witness_search(&h, &t_bits(&h, 20), &upper, 64).unwrap();
        assert!(w.k_e >= 1);
        assert_eq!(w.verified_through, 11 * w.k_e);
        let a = h.certificate().a as i64;
        assert_eq!(w.length_threshold, DyadicRational::from_int(20 - a).shl(-1));
        // geometric programs print their length in binary, never the empty string
        assert_eq!(w.witness, BitString::empty());
    }

    #[test]
    fn witness_preconditions() {
        let h = half();
        let upper = Oracle::ClosedForm
            .stream(&h, OracleKind::Upper, 64)
            .unwrap();
        // 0.1 + 2^-1 = 1 is not below t = 3/4
        let r = witness_search(&h, &t_bits(&h, 1), &upper, 64);
        assert!(matches!(r, Err(Error::Precondition(_))), "{r:?}");
        let r = witness_search(&h, &"0111".parse().unwrap(), &upper, 64);
        assert!(matches!(r, Err(Error::Precondition(_))), "{r:?}");
    }

    #[test]
    fn loose_oracle_exhausts() {
        let h = half();
        let four_thirds = BigRational::new(4.into(), 3.into());
        let constant = vec![DyadicRational::from_rational_rounded(&four_thirds, 64, Round::Up); 8];
        let r = witness_search(&h, &t_bits(&h, 20), &constant, 64);
        assert!(matches!(r, Err(Error::OracleExhausted(_))), "{r:?}");
    }

    #[test]
    fn semidecision_examples() {
        let h = half();
        let upper = Oracle::ClosedForm
            .stream(&h, OracleKind::Upper, 64)
            .unwrap();
        assert!(matches!(
            semidecide_above(&h, &d("9/16"), &upper, 32, 64).unwrap(),
            SemiDecision::Yes { .. }
        ));
        for r in ["1/2", "7/16"] {
            assert_eq!(
                semidecide_above(&h, &d(r), &upper, 32, 64).unwrap(),
                SemiDecision::Unknown { stages: 32 }
            );
        }
        assert!(semidecide_above(&h, &d("1"), &upper, 4, 64).is_err());
    }

    fn reconstruct(h: &QuantityHandle, u: &Temperature, n: u32) -> Result<ReconstructionReport> {
        let prefix = beta_prefix(h, u, n, 64)?;
        let a = Oracle::ClosedForm.stream(h, OracleKind::Temperature, 64)?;
        let b = Oracle::ClosedForm.stream(h, OracleKind::Lower, 64)?;
        reconstruct_t(h, u, n, &prefix, &a, &b, 64)
    }

    #[test]
    fn reconstruction_at_half() {
        let h = half();
        let u = Temperature::ratio(3, 4);
        let r = reconstruct(&h, &u, 16).unwrap();
        assert_eq!(r.beta_bits_used, 11);
        assert_eq!(
            r.radius,
            DyadicRational::pow2(h.certificate().a_lower as i64 - 16)
        );
        assert!((r.candidate.to_f64() - 0.5).abs() < r.radius.to_f64());
        let wide = reconstruct(&h, &u, 1).unwrap();
        assert_eq!(wide.beta_bits_used, 1);
    }

    #[test]
    fn reconstruction_preconditions() {
        let h = half();
        let u = Temperature::ratio(3, 4);
        let a = Oracle::ClosedForm
            .stream(&h, OracleKind::Temperature, 64)
            .unwrap();
        let b = Oracle::ClosedForm
            .stream(&h, OracleKind::Lower, 64)
            .unwrap();
        let prefix = beta_prefix(&h, &u, 16, 64).unwrap();
        let short = BitString::from_bits(prefix.bits()[..10].to_vec());
        let r = reconstruct_t(&h, &u, 16, &short, &a, &b, 64);
        assert!(matches!(r, Err(Error::Precondition(_))), "{r:?}");
        let r = reconstruct_t(&h, &Temperature::ratio(1, 4), 16, &prefix, &a, &b, 64);
        assert!(matches!(r, Err(Error::Precondition(_))), "{r:?}");
    }

    #[test]
    fn reconstruction_with_e_handle() {
        let h = handle(Observable::E, Temperature::ratio(1, 2));
        let r = reconstruct(&h, &Temperature::ratio(5, 8), 12).unwrap();
        assert!((r.candidate.to_f64() - 0.5).abs() < r.radius.to_f64());
    }
}
