use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;

use super::identities::evaluate;
use super::{escalate, requested_horizon, RelationId, RelationReport, Verdict};
use crate::ensembles::{Census, EnsembleSnapshot};
use crate::error::{Error, Result};
use crate::precision::{ln2, log2_enclosure, Enclosure, Temperature};
use crate::thermo::{Quantity, ThermoEvaluation, WeightTable};

/// Smallest `k` whose first `k` programs have at least two distinct lengths.
pub fn first_mixed_index(census: &Census) -> Option<u64> {
    let mut classes = census.nonzero();
    let (_, first) = classes.next()?;
    classes.next()?;
    (first + BigUint::one()).to_u64()
}

fn shortest_length(census: &Census) -> Result<usize> {
    census
        .nonzero()
        .next()
        .map(|(l, _)| l)
        .ok_or_else(|| Error::Precondition("empty ensemble".into()))
}

/// Lower bounds on S and C from the shortest program alone:
/// `-p_1 log2 p_1 <= S` and `(ln2/T^2)(|p_1| - E)^2 p_1 <= C`.
fn witnesses(ev: &ThermoEvaluation, shortest: usize, bits: u32) -> Result<(Enclosure, Enclosure)> {
    let wp = bits + 16;
    let beta = ev.temperature.inverse();
    let p = WeightTable::new(beta.clone(), wp)
        .weight(shortest)
        .div(&ev.z, wp)?;
    let s = -p.mul(&log2_enclosure(&p, wp)?).round(wp);
    let dev = (&Enclosure::from_int(shortest as i64) - &ev.e).sqr();
    let c = dev
        .mul(&p)
        .round(wp)
        .mul(&ln2(wp))
        .mul_rational(&(&beta * &beta), wp);
    Ok((s.round(bits + 8), c.round(bits + 8)))
}

fn positivity_at(
    census: &Census,
    t: &Temperature,
    k: Option<u64>,
    bits: u32,
) -> Result<[RelationReport; 2]> {
    let ev = evaluate(census, t, k, bits)?;
    let (s_witness, c_witness) = witnesses(&ev, shortest_length(census)?, bits)?;
    let mixed = first_mixed_index(census);
    let count = k.map(BigUint::from).unwrap_or_else(|| census.total());
    // S > 0 once two programs are present, C > 0 once two lengths are
    let s_strict = count > BigUint::one();
    let c_strict = match (k, mixed) {
        (_, None) => false,
        (None, Some(_)) => true,
        (Some(k), Some(m)) => k >= m,
    };
    let judge = |value: &Enclosure, witness: &Enclosure, strict: bool| {
        if value.hi().is_negative() {
            Verdict::Fail
        } else if !strict || value.lo().is_positive() || witness.lo().is_positive() {
            Verdict::Pass
        } else if value.hi().is_zero() {
            Verdict::Fail
        } else {
            Verdict::Unresolved
        }
    };
    let report =
        |name: &str, value: &Enclosure, witness: &Enclosure, strict: bool| RelationReport {
            relation: RelationId::Positivity,
            temperature: Some(t.clone()),
            horizon: ev.horizon.clone(),
            residual: witness.clone(),
            verdict: judge(value, witness, strict),
            detail: format!(
                "{name} {} value={value}",
                if strict { "> 0" } else { ">= 0" }
            ),
            precision_bits: bits,
        };
    Ok([
        report("S", &ev.s, &s_witness, s_strict),
        report("C", &ev.c, &c_witness, c_strict),
    ])
}

/// Nonnegativity of S and C, and strict positivity where it must hold: S once
/// two programs are summed, C once two distinct lengths are, both at the limit.
///
/// Each report's residual is the single-term lower bound from the shortest
/// program; strict positivity is certified by it or by the value itself.
pub fn check_positivity(
    snapshot: &EnsembleSnapshot,
    grid: &[Temperature],
    k: Option<u64>,
    bits: u32,
) -> Result<Vec<RelationReport>> {
    if k.is_none() {
        for t in grid {
            t.require_unit()?;
        }
    }
    let census = snapshot.census();
    let per_point: Vec<[RelationReport; 2]> = grid
        .par_iter()
        .map(|t| -> Result<[RelationReport; 2]> {
            let mut reports = positivity_at(census, t, k, bits)?;
            for i in 0..2 {
                if reports[i].verdict == Verdict::Unresolved {
                    reports[i] =
                        escalate(bits * 2, |b| Ok(positivity_at(census, t, k, b)?[i].clone()))?;
                }
            }
            Ok(reports)
        })
        .collect::<Result<_>>()?;
    Ok(per_point.into_iter().flatten().collect())
}

/// Claimed direction of each monotone quantity: `true` for increasing.
fn direction(q: Quantity) -> Result<bool> {
    match q {
        Quantity::Z | Quantity::E | Quantity::S => Ok(true),
        Quantity::F => Ok(false),
        _ => Err(Error::Precondition(format!(
            "no monotonicity claim for {}",
            q.name()
        ))),
    }
}

/// Whether `q` is constant in `T` at this horizon: E and S when every summed
/// program has one length, F as well when only one program is summed.
fn constant_at(census: &Census, q: Quantity, k: Option<u64>) -> bool {
    let Some(k) = k else { return false };
    let single_class = first_mixed_index(census).is_none_or(|m| k < m);
    match q {
        Quantity::E | Quantity::S => single_class,
        Quantity::F => k == 1,
        _ => false,
    }
}

fn monotone_at(
    census: &Census,
    q: Quantity,
    grid: &[Temperature],
    k: Option<u64>,
    bits: u32,
) -> Result<RelationReport> {
    let ascending = direction(q)?;
    let constant = constant_at(census, q, k);
    let evals: Vec<ThermoEvaluation> = grid
        .par_iter()
        .map(|t| evaluate(census, t, k, bits))
        .collect::<Result<_>>()?;
    let values: Vec<&Enclosure> = evals.iter().map(|ev| q.of(ev)).collect();
    let mut verdict = Verdict::Pass;
    let mut smallest: Option<Enclosure> = None;
    for pair in values.windows(2) {
        // gap in the claimed direction
        let gap = if ascending {
            pair[1] - pair[0]
        } else {
            pair[0] - pair[1]
        };
        let step = if constant {
            if gap.contains_zero() {
                Verdict::Pass
            } else {
                Verdict::Fail
            }
        } else if gap.lo().is_positive() {
            Verdict::Pass
        } else if !gap.hi().is_positive() {
            Verdict::Fail
        } else {
            Verdict::Unresolved
        };
        verdict = match (verdict, step) {
            (Verdict::Fail, _) | (_, Verdict::Fail) => Verdict::Fail,
            (Verdict::Unresolved, _) | (_, Verdict::Unresolved) => Verdict::Unresolved,
            _ => Verdict::Pass,
        };
        if smallest.as_ref().is_none_or(|s| gap.lo() < s.lo()) {
            smallest = Some(gap);
        }
    }
    let claim = match (constant, ascending) {
        (true, _) => "constant",
        (false, true) => "ascending",
        (false, false) => "descending",
    };
    Ok(RelationReport {
        relation: RelationId::Monotone,
        temperature: grid.first().cloned(),
        horizon: evals
            .first()
            .map(|ev| ev.horizon.clone())
            .unwrap_or_else(|| requested_horizon(k)),
        residual: smallest.unwrap_or_else(Enclosure::zero),
        verdict,
        detail: format!("{} {claim} over {} points", q.name(), grid.len()),
        precision_bits: bits,
    })
}

/// Certified monotonicity of Z (ascending), F (descending), E and S
/// (ascending) across a strictly increasing grid.
///
/// The residual is the smallest consecutive gap in the claimed direction.
/// Where the quantity is constant in `T` (E and S over a single length class,
/// F for one program) consecutive values must instead agree.
pub fn check_monotone(
    snapshot: &EnsembleSnapshot,
    q: Quantity,
    grid: &[Temperature],
    k: Option<u64>,
    bits: u32,
) -> Result<RelationReport> {
    direction(q)?;
    for w in grid.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::Precondition(
                "temperature grid must be strictly increasing".into(),
            ));
        }
    }
    let census = snapshot.census();
    escalate(bits, |b| monotone_at(census, q, grid, k, b))
}
