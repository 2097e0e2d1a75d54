//! Effective procedures behind the fixed-point results: certified slope and
//! increment constants for a monotone quantity, temperature inversion, the
//! witness search, the semidecision of `T < r`, and reconstruction of `T`
//! from a prefix of a weighted sum.
//!
//! Each quantity is handled as an increasing function `f(T)` with increasing
//! approximations `g(T, k)` over the first `k` programs: `Z`, `-F`, `E`, `S`.

mod certificate;
mod oracle;
mod search;
mod solve;

use std::borrow::Cow;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::{Serialize, Serializer};

pub use certificate::{certify, ConditionCertificate, QuantityHandle, CHECK_SPAN};
pub use oracle::{Oracle, OracleKind, ORACLE_TERMS};
pub use search::{
    beta_bits_needed, beta_prefix, beta_sum, reconstruct_t, semidecide_above, witness_search,
    ReconstructionReport, SemiDecision, WitnessReport, DEFAULT_SEMIDECISION_BUDGET,
};
pub use solve::{solve_temperature, BRACKET_EXPONENT};

use crate::ensembles::{Census, EnsembleSnapshot};
use crate::error::{Error, Result};
use crate::precision::{Enclosure, Temperature};
use crate::thermo::{
    eval_limit_census, eval_partial_census, eval_partial_with, ThermoEvaluation, WeightTable,
    MAX_TRUNCATION,
};

/// A quantity with the sign chosen so that it increases with `T`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Observable {
    Z,
    NegF,
    E,
    S,
}

impl Observable {
    pub const ALL: [Observable; 4] = [
        Observable::Z,
        Observable::NegF,
        Observable::E,
        Observable::S,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Observable::Z => "Z",
            Observable::NegF => "-F",
            Observable::E => "E",
            Observable::S => "S",
        }
    }

    /// Value of this observable in an evaluation.
    pub fn of(&self, ev: &ThermoEvaluation) -> Enclosure {
        match self {
            Observable::Z => ev.z.clone(),
            Observable::NegF => -&ev.f,
            Observable::E => ev.e.clone(),
            Observable::S => ev.s.clone(),
        }
    }

    /// `Z`, `F`, `E` or `S`, together with the sign relating it to the observable.
    pub fn from_quantity_name(s: &str) -> Result<(Observable, bool)> {
        match s {
            "Z" => Ok((Observable::Z, false)),
            "F" => Ok((Observable::NegF, true)),
            "-F" => Ok((Observable::NegF, false)),
            "E" => Ok((Observable::E, false)),
            "S" => Ok((Observable::S, false)),
            _ => Err(Error::Domain(format!(
                "quantity must be Z, F, E or S; got `{s}`"
            ))),
        }
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for Observable {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

/// An observable over one ensemble: `g(T, k)` and its limit `f(T)`.
#[derive(Clone, Debug)]
pub struct MonotoneQuantity {
    snapshot: Arc<EnsembleSnapshot>,
    observable: Observable,
}

impl MonotoneQuantity {
    pub fn new(snapshot: Arc<EnsembleSnapshot>, observable: Observable) -> Self {
        MonotoneQuantity {
            snapshot,
            observable,
        }
    }

    pub fn observable(&self) -> Observable {
        self.observable
    }

    pub fn snapshot(&self) -> &EnsembleSnapshot {
        &self.snapshot
    }

    pub fn census(&self) -> &Census {
        self.snapshot.census()
    }

    /// A census covering at least `k` programs, extended through the closed
    /// form when the snapshot's own census is too short.
    pub(crate) fn census_for(&self, k: u64) -> Result<Cow<'_, Census>> {
        let census = self.census();
        let want = BigUint::from(k);
        if census.total() >= want || !census.is_unbounded() {
            return Ok(Cow::Borrowed(census));
        }
        let mut len = census.horizon().max(8);
        loop {
            len = (len * 2).min(MAX_TRUNCATION);
            let extended = census.upto(len);
            if extended.total() >= want {
                return Ok(Cow::Owned(extended));
            }
            if len == MAX_TRUNCATION {
                let available = extended.total().to_u64().unwrap_or(u64::MAX);
                return Err(Error::KOutOfRange { k, available });
            }
        }
    }

    /// `g(x, k)`: the observable over the first `k` programs.
    pub fn partial(&self, x: &Temperature, k: u64, bits: u32) -> Result<Enclosure> {
        Ok(self.observable.of(&self.partial_eval(x, k, bits)?))
    }

    pub(crate) fn partial_eval(
        &self,
        x: &Temperature,
        k: u64,
        bits: u32,
    ) -> Result<ThermoEvaluation> {
        eval_partial_census(self.census_for(k)?.as_ref(), x, k, bits)
    }

    /// A weight table for repeated partial sums at `x` via [`Self::partial_with`].
    pub(crate) fn weights(&self, x: &Temperature, bits: u32) -> WeightTable {
        WeightTable::new(x.inverse(), bits + 8)
    }

    /// [`Self::partial_eval`] sharing `exp2` work through `table`.
    pub(crate) fn partial_eval_with(
        &self,
        x: &Temperature,
        k: u64,
        table: &mut WeightTable,
        bits: u32,
    ) -> Result<ThermoEvaluation> {
        eval_partial_with(self.census_for(k)?.as_ref(), x, k, table, bits)
    }

    pub(crate) fn partial_with(
        &self,
        x: &Temperature,
        k: u64,
        table: &mut WeightTable,
        bits: u32,
    ) -> Result<Enclosure> {
        Ok(self
            .observable
            .of(&self.partial_eval_with(x, k, table, bits)?))
    }

    /// Length of the `i`-th program in canonical order, `i >= 1`.
    pub(crate) fn length_of(&self, i: u64) -> Result<usize> {
        let census = self.census_for(i)?;
        let mut remaining = BigUint::from(i);
        for (len, count) in census.nonzero() {
            if &remaining <= count {
                return Ok(len);
            }
            remaining -= count;
        }
        Err(Error::KOutOfRange {
            k: i,
            available: census.total().to_u64().unwrap_or(u64::MAX),
        })
    }

    /// `f(x)`: the certified `k -> infinity` limit, `0 < x < 1`.
    pub fn limit(&self, x: &Temperature, bits: u32) -> Result<Enclosure> {
        Ok(self
            .observable
            .of(&eval_limit_census(self.census(), x, bits)?))
    }
}
