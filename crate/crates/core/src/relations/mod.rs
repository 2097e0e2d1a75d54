//! Certified checks of the thermodynamic relations between Z, F, E, S and C.
//!
//! Every check compares enclosures, so a verdict is one of: the relation holds
//! on the enclosed values (`Pass`), it certainly fails (`Fail`), or the
//! enclosures are too wide to decide (`Unresolved`).

mod derivative;
mod identities;
mod positivity;

use std::fmt;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

pub use derivative::{check_derivative, richardson, third_derivative_bound, DEFAULT_STEP_EXPONENT};
pub use identities::{check_identities, gibbs_entropy};
pub use positivity::{check_monotone, check_positivity, first_mixed_index};

use crate::ensembles::EnsembleSnapshot;
use crate::error::Result;
use crate::precision::{DyadicRational, Enclosure, Temperature};
use crate::thermo::{Horizon, Quantity};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RelationId {
    /// `F' = -S`
    DerivativeF,
    /// `E' = C`
    DerivativeE,
    /// `S' = C/T`
    DerivativeS,
    /// Central-difference error ratio between steps `h` and `h/2`.
    Richardson,
    /// `W/(T Z) + log2 Z` against `(E - F)/T`.
    EntropyFreeEnergy,
    /// `W/(T Z) + log2 Z` against the Gibbs sum `-sum p log2 p`.
    GibbsS,
    /// `(E - F)/T` against the Gibbs sum.
    GibbsFreeEnergy,
    /// `(ln2/T^2)(Y/Z - (W/Z)^2)` against `(ln2/T^2) sum (l - E)^2 p`.
    VarianceC,
    /// `-T log2 Z` against `E - T S_gibbs`.
    FIdentity,
    Positivity,
    Monotone,
}

impl RelationId {
    pub fn name(&self) -> &'static str {
        match self {
            RelationId::DerivativeF => "F'=-S",
            RelationId::DerivativeE => "E'=C",
            RelationId::DerivativeS => "S'=C/T",
            RelationId::Richardson => "richardson",
            RelationId::EntropyFreeEnergy => "S_free_energy",
            RelationId::GibbsS => "gibbs_S",
            RelationId::GibbsFreeEnergy => "gibbs_S_free_energy",
            RelationId::VarianceC => "variance_C",
            RelationId::FIdentity => "F_identity",
            RelationId::Positivity => "positivity",
            RelationId::Monotone => "monotone",
        }
    }

    pub(crate) fn derivative_of(q: Quantity) -> Option<RelationId> {
        match q {
            Quantity::F => Some(RelationId::DerivativeF),
            Quantity::E => Some(RelationId::DerivativeE),
            Quantity::S => Some(RelationId::DerivativeS),
            _ => None,
        }
    }
}

impl fmt::Display for RelationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for RelationId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Unresolved,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Unresolved => "unresolved",
        })
    }
}

/// Outcome of one relation check.
///
/// `temperature` is `None` only for a monotonicity check over an empty grid.
#[derive(Clone, Debug, Serialize)]
pub struct RelationReport {
    pub relation: RelationId,
    #[serde(rename = "T", serialize_with = "ser_temperature")]
    pub temperature: Option<Temperature>,
    #[serde(rename = "k", serialize_with = "ser_horizon")]
    pub horizon: Horizon,
    pub residual: Enclosure,
    pub verdict: Verdict,
    pub detail: String,
    pub precision_bits: u32,
}

fn ser_temperature<S: Serializer>(
    t: &Option<Temperature>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match t {
        Some(t) => s.serialize_str(&t.to_string()),
        None => s.serialize_none(),
    }
}

fn ser_horizon<S: Serializer>(h: &Horizon, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&h.label())
}

impl RelationReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Horizon requested by a caller: a partial sum over `k` programs or the limit.
pub(crate) fn requested_horizon(k: Option<u64>) -> Horizon {
    match k {
        Some(k) => Horizon::Partial { k },
        None => Horizon::Limit { truncation: 0 },
    }
}

/// Pass when `residual` certainly lies in `[-bound, bound]`, fail when it is
/// certainly outside, unresolved otherwise.
pub(crate) fn within(residual: &Enclosure, bound: &DyadicRational) -> Verdict {
    let band = Enclosure::new(-bound.clone(), bound.clone());
    if band.encloses(residual) {
        Verdict::Pass
    } else if !band.overlaps(residual) {
        Verdict::Fail
    } else {
        Verdict::Unresolved
    }
}

/// Default cap on precision escalation, as a multiple of the starting precision.
pub const ESCALATION_FACTOR: u32 = 8;

/// Re-run `check` at doubled precision while it is unresolved, up to
/// `ESCALATION_FACTOR * bits`.
pub(crate) fn escalate<F>(bits: u32, check: F) -> Result<RelationReport>
where
    F: Fn(u32) -> Result<RelationReport>,
{
    let cap = bits.saturating_mul(ESCALATION_FACTOR);
    let mut b = bits;
    loop {
        let report = check(b)?;
        if report.verdict != Verdict::Unresolved || b.saturating_mul(2) > cap {
            return Ok(report);
        }
        b *= 2;
    }
}

/// Horizons exercised by [`suite`]: partial sums at these `k`, then the limit.
pub const SUITE_DEPTHS: [u64; 3] = [1, 4, 16];

/// Every relation check over a temperature grid.
///
/// Identities and positivity run at each grid point for `k` in [`SUITE_DEPTHS`]
/// (skipping `k` beyond the census) and at the limit; monotonicity runs over
/// the whole grid at each horizon; derivative and Richardson checks run at each
/// grid point whose `[T - h, T + h]` stays inside `(0, 1)`. Reports are in a fixed order.
pub fn suite(
    snapshot: &EnsembleSnapshot,
    grid: &[Temperature],
    bits: u32,
) -> Result<Vec<RelationReport>> {
    let total = snapshot.domain_size();
    let mut horizons: Vec<Option<u64>> = SUITE_DEPTHS
        .iter()
        .copied()
        .filter(|k| num_bigint::BigUint::from(*k) <= total)
        .map(Some)
        .collect();
    horizons.push(None);
    let h = DyadicRational::pow2(DEFAULT_STEP_EXPONENT);

    let per_point: Vec<Vec<RelationReport>> = grid
        .par_iter()
        .map(|t| -> Result<Vec<RelationReport>> {
            let mut out = Vec::new();
            for k in &horizons {
                out.extend(check_identities(snapshot, t, *k, bits)?);
                out.extend(check_positivity(
                    snapshot,
                    std::slice::from_ref(t),
                    *k,
                    bits,
                )?);
            }
            if derivative::step_fits(t, &h) {
                for k in horizons.iter().flatten() {
                    for q in [Quantity::F, Quantity::E, Quantity::S] {
                        out.push(check_derivative(snapshot, q, t, *k, &h, bits)?);
                        out.push(richardson(snapshot, q, t, *k, &h, bits)?);
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut reports: Vec<RelationReport> = per_point.into_iter().flatten().collect();
    for k in &horizons {
        for q in [Quantity::Z, Quantity::F, Quantity::E, Quantity::S] {
            reports.push(check_monotone(snapshot, q, grid, *k, bits)?);
        }
    }
    Ok(reports)
}
