use num_bigint::{BigInt, BigUint};

use super::{RelationId, RelationReport, Verdict, ESCALATION_FACTOR};
use crate::ensembles::{Census, EnsembleSnapshot};
use crate::error::Result;
use crate::precision::{ln2, log2_enclosure, DyadicRational, Enclosure, Temperature};
use crate::thermo::{
    eval_limit_census, eval_partial_census, length_profile, tail_bounds, Horizon, ThermoEvaluation,
    WeightTable, MOMENT_ORDERS,
};

/// Partial sum over `k` programs, or the limit when `k` is `None`.
pub(crate) fn evaluate(
    census: &Census,
    t: &Temperature,
    k: Option<u64>,
    bits: u32,
) -> Result<ThermoEvaluation> {
    match k {
        Some(k) => eval_partial_census(census, t, k, bits),
        None => eval_limit_census(census, t, bits),
    }
}

/// Length classes summed exactly by `ev`, and bounds on the moment sums beyond them.
pub(crate) struct Terms {
    pub profile: Vec<(usize, BigUint)>,
    pub tails: [DyadicRational; MOMENT_ORDERS],
}

pub(crate) fn terms_of(census: &Census, ev: &ThermoEvaluation) -> Result<Terms> {
    match ev.horizon {
        Horizon::Partial { k } => Ok(Terms {
            profile: length_profile(census, k)?,
            tails: std::array::from_fn(|_| DyadicRational::zero()),
        }),
        Horizon::Limit { truncation } => Ok(Terms {
            profile: census
                .upto(truncation)
                .nonzero()
                .map(|(l, c)| (l, c.clone()))
                .collect(),
            tails: tail_bounds(census, truncation, &ev.temperature.inverse()),
        }),
    }
}

/// `[0, x / z.lo]` rounded up: bounds a nonnegative tail `x` divided by `Z`.
fn tail_over_z(x: &Enclosure, z: &Enclosure, bits: u32) -> Result<Enclosure> {
    let hi = x.div(&Enclosure::point(z.lo().clone()), bits)?.hi().clone();
    Ok(Enclosure::new(
        DyadicRational::zero(),
        hi.max(DyadicRational::zero()),
    ))
}

/// `-sum_i p_i log2 p_i` with `p_i = 2^(-|p_i|/T) / Z`, each logarithm taken
/// of the probability itself.
fn gibbs_from(ev: &ThermoEvaluation, terms: &Terms, bits: u32) -> Result<Enclosure> {
    let wp = bits + 16;
    let beta = ev.temperature.inverse();
    let mut table = WeightTable::new(beta.clone(), wp);
    let mut sum = Enclosure::zero();
    for (len, count) in &terms.profile {
        let p = table.weight(*len).div(&ev.z, wp)?;
        let term = p.mul(&log2_enclosure(&p, wp)?).round(wp);
        sum = (&sum - &term.mul_int(&BigInt::from(count.clone()))).round(wp);
    }
    // beyond the truncation each summand is (w/Z)(l beta + log2 Z) > 0
    let log_z = log2_enclosure(&ev.z, wp)?.clamp_below(&DyadicRational::zero());
    let tail = &Enclosure::point(terms.tails[1].clone()).mul_rational(&beta, wp)
        + &Enclosure::point(terms.tails[0].clone()).mul(&log_z);
    Ok((&sum + &tail_over_z(&tail, &ev.z, wp)?)
        .round(bits + 8)
        .clamp_below(&DyadicRational::zero()))
}

/// `(ln2 / T^2) sum_i (|p_i| - E)^2 p_i`.
fn variance_form_c(ev: &ThermoEvaluation, terms: &Terms, bits: u32) -> Result<Enclosure> {
    let wp = bits + 16;
    let beta = ev.temperature.inverse();
    let mut table = WeightTable::new(beta.clone(), wp);
    let mut sum = Enclosure::zero();
    for (len, count) in &terms.profile {
        let dev = (&Enclosure::from_int(*len as i64) - &ev.e).sqr();
        let term = table
            .weight(*len)
            .mul(&dev)
            .mul_int(&BigInt::from(count.clone()))
            .round(wp);
        sum = (&sum + &term).round(wp);
    }
    // (l - E)^2 <= l^2 + E^2 for l, E >= 0
    let tail = &Enclosure::point(terms.tails[2].clone())
        + &Enclosure::point(terms.tails[0].clone()).mul(&Enclosure::point(ev.e.sqr().hi().clone()));
    let var = &sum.div(&ev.z, wp)? + &tail_over_z(&tail, &ev.z, wp)?;
    Ok(var
        .mul(&ln2(wp))
        .mul_rational(&(&beta * &beta), wp)
        .round(bits + 8)
        .clamp_below(&DyadicRational::zero()))
}

/// `(ln2 / T^2)(Y/Z - (W/Z)^2)` from the raw moment sums.
fn raw_moment_c(ev: &ThermoEvaluation, bits: u32) -> Result<Enclosure> {
    let wp = bits + 16;
    let beta = ev.temperature.inverse();
    let mean = ev.w.div(&ev.z, wp)?;
    let var = (&ev.y.div(&ev.z, wp)? - &mean.sqr()).round(wp);
    Ok(var
        .mul(&ln2(wp))
        .mul_rational(&(&beta * &beta), wp)
        .round(bits + 8))
}

/// Gibbs entropy `-sum p_i log2 p_i` over the first `k` programs, or its limit.
pub fn gibbs_entropy(
    snapshot: &EnsembleSnapshot,
    t: &Temperature,
    k: Option<u64>,
    bits: u32,
) -> Result<Enclosure> {
    let census = snapshot.census();
    let ev = evaluate(census, t, k, bits)?;
    gibbs_from(&ev, &terms_of(census, &ev)?, bits)
}

/// Pass when the two routes overlap and both are narrower than
/// `2^(-bits/2) max(1, |value|)`; fail when they are disjoint.
fn compare(
    id: RelationId,
    ev: &ThermoEvaluation,
    a: &Enclosure,
    b: &Enclosure,
    detail: &str,
    bits: u32,
) -> RelationReport {
    let scale = a.mag().max(b.mag()).max(DyadicRational::one());
    let tol = &scale * &DyadicRational::pow2(-(bits as i64) / 2);
    let verdict = if !a.overlaps(b) {
        Verdict::Fail
    } else if a.width() <= tol && b.width() <= tol {
        Verdict::Pass
    } else {
        Verdict::Unresolved
    };
    RelationReport {
        relation: id,
        temperature: Some(ev.temperature.clone()),
        horizon: ev.horizon.clone(),
        residual: (a - b).round(bits + 8),
        verdict,
        detail: detail.to_string(),
        precision_bits: bits,
    }
}

fn identities_at(
    census: &Census,
    t: &Temperature,
    k: Option<u64>,
    bits: u32,
) -> Result<Vec<RelationReport>> {
    let ev = evaluate(census, t, k, bits)?;
    let terms = terms_of(census, &ev)?;
    let wp = bits + 8;
    let s_moment = ev.s.clone();
    let s_free = (&ev.e - &ev.f).mul_rational(&t.inverse(), wp);
    let s_gibbs = gibbs_from(&ev, &terms, bits)?;
    let c_raw = raw_moment_c(&ev, bits)?;
    let c_var = variance_form_c(&ev, &terms, bits)?;
    let f_gibbs = (&ev.e - &s_gibbs.mul_rational(t.value(), wp)).round(wp);
    Ok(vec![
        compare(
            RelationId::EntropyFreeEnergy,
            &ev,
            &s_moment,
            &s_free,
            "W/(TZ)+log2 Z vs (E-F)/T",
            bits,
        ),
        compare(
            RelationId::GibbsS,
            &ev,
            &s_moment,
            &s_gibbs,
            "W/(TZ)+log2 Z vs -sum p log2 p",
            bits,
        ),
        compare(
            RelationId::GibbsFreeEnergy,
            &ev,
            &s_free,
            &s_gibbs,
            "(E-F)/T vs -sum p log2 p",
            bits,
        ),
        compare(
            RelationId::VarianceC,
            &ev,
            &c_raw,
            &c_var,
            "raw moments vs centred sum",
            bits,
        ),
        compare(
            RelationId::FIdentity,
            &ev,
            &ev.f,
            &f_gibbs,
            "-T log2 Z vs E - T S_gibbs",
            bits,
        ),
    ])
}

/// Each identity between independently computed forms of S, C and F at one
/// temperature, for the first `k` programs or (when `k` is `None`) the limit.
///
/// Unresolved reports are recomputed at doubled precision, up to
/// `ESCALATION_FACTOR * bits`.
pub fn check_identities(
    snapshot: &EnsembleSnapshot,
    t: &Temperature,
    k: Option<u64>,
    bits: u32,
) -> Result<Vec<RelationReport>> {
    let census = snapshot.census();
    let cap = bits.saturating_mul(ESCALATION_FACTOR);
    let mut b = bits;
    loop {
        let reports = identities_at(census, t, k, b)?;
        if reports.iter().all(|r| r.verdict != Verdict::Unresolved) || b.saturating_mul(2) > cap {
            return Ok(reports);
        }
        b *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{enumerate, Builtin, EnsembleSpec};

    fn snap(b: Builtin, maxlen: usize) -> EnsembleSnapshot {
        enumerate(&EnsembleSpec::Builtin(b), 1_000, maxlen).unwrap()
    }

    #[test]
    fn geometric_two_programs() {
        let s = snap(Builtin::Geometric, 8);
        let reports = check_identities(&s, &Temperature::ratio(1, 2), Some(2), 64).unwrap();
        assert_eq!(reports.len(), 5);
        for r in &reports {
            assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
        }
        // p = (4/5, 1/5): S = log2 5 - 8/5
        let g = gibbs_entropy(&s, &Temperature::ratio(1, 2), Some(2), 64).unwrap();
        let expect = 5f64.log2() - 1.6;
        assert!((g.to_f64_mid() - expect).abs() < 1e-15);
    }

    #[test]
    fn single_program_forms_vanish() {
        let s = snap(Builtin::Sdm4, 8);
        for r in check_identities(&s, &Temperature::ratio(5, 16), Some(1), 64).unwrap() {
            assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
            assert!(r.residual.contains_zero());
        }
    }

    #[test]
    fn limits_pass() {
        for b in [Builtin::Geometric, Builtin::Sdm4] {
            let s = snap(b, 10);
            for t in [
                Temperature::ratio(1, 16),
                Temperature::ratio(1, 2),
                Temperature::ratio(15, 16),
            ] {
                for r in check_identities(&s, &t, None, 64).unwrap() {
                    assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
                }
            }
        }
    }

    #[test]
    fn gibbs_limit_matches_closed_form() {
        let s = snap(Builtin::Geometric, 4);
        let t = Temperature::ratio(1, 2);
        let g = gibbs_entropy(&s, &t, None, 64).unwrap();
        let cf = crate::thermo::closed_form(Builtin::Geometric, crate::thermo::Quantity::S, &t, 64)
            .unwrap();
        assert!(g.overlaps(&cf));
        assert!(g.width() < DyadicRational::pow2(-50));
    }
}
