use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;

use super::closed_form::closed_form;
use super::evaluation::{eval_limit_census, Quantity};
use super::moments::WeightTable;
use crate::ensembles::Census;
use crate::error::{Error, Result};
use crate::precision::{Enclosure, Temperature};

/// Default longest length examined by [`divergence_probe`].
pub const DEFAULT_PROBE_CAP: usize = 4096;

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum ProbeOutcome {
    /// `sum_{l <= length} census(l) 2^(-l/T)` is certified to exceed the threshold.
    Exceeded { length: usize, partial: Enclosure },
    /// No crossing up to `cap`; `limit` encloses the full sum when it is available.
    CapReached {
        cap: usize,
        partial: Enclosure,
        limit: Option<Enclosure>,
    },
}

/// Smallest length `L <= cap` whose partial sum of `Z` certainly exceeds `threshold`.
pub fn divergence_probe(
    census: &Census,
    t: &Temperature,
    threshold: &BigRational,
    cap: usize,
    bits: u32,
) -> Result<ProbeOutcome> {
    let Some(builtin) = census.closed_form() else {
        return Err(Error::Precondition(
            "divergence probe needs an ensemble with a closed-form census".into(),
        ));
    };
    let counts = census.upto(cap);
    let mut table = WeightTable::new(t.inverse(), bits + 8);
    let mut sum = Enclosure::zero();
    for (len, count) in counts.nonzero() {
        let term = table.weight(len).mul_int(&BigInt::from(count.clone()));
        sum = (&sum + &term).round(bits + 8);
        if sum.lo().to_rational() > *threshold {
            return Ok(ProbeOutcome::Exceeded {
                length: len,
                partial: sum,
            });
        }
    }
    let limit = if t.in_unit_interval() {
        Some(eval_limit_census(census, t, bits)?.z)
    } else {
        closed_form(builtin, Quantity::Z, t, bits)
    };
    Ok(ProbeOutcome::CapReached {
        cap,
        partial: sum,
        limit,
    })
}
