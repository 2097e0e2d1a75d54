use num_bigint::{BigInt, BigUint};
use num_traits::Zero;

use super::builtins::{kraft_sum, Builtin};
use crate::precision::{DyadicRational, Enclosure};

/// Per-length domain counts up to a horizon, optionally backed by a closed form
/// that extends them to every length.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Census {
    counts: Vec<BigUint>,
    closed_form: Option<Builtin>,
}

impl Census {
    pub fn from_builtin(b: Builtin, horizon: usize) -> Self {
        Census {
            counts: b.census_upto(horizon),
            closed_form: Some(b),
        }
    }

    /// A census known only through `counts[l]` for `l <= counts.len() - 1`.
    pub fn from_table(counts: Vec<BigUint>) -> Self {
        Census {
            counts,
            closed_form: None,
        }
    }

    pub(crate) fn with_closed_form(mut self, b: Option<Builtin>) -> Self {
        self.closed_form = b;
        self
    }

    pub fn horizon(&self) -> usize {
        self.counts.len().saturating_sub(1)
    }

    pub fn closed_form(&self) -> Option<Builtin> {
        self.closed_form
    }

    pub fn is_unbounded(&self) -> bool {
        self.closed_form.is_some()
    }

    pub fn count(&self, len: usize) -> BigUint {
        match self.counts.get(len) {
            Some(c) => c.clone(),
            None => match self.closed_form {
                Some(b) => b.census_upto(len).pop().unwrap_or_default(),
                None => BigUint::zero(),
            },
        }
    }

    pub fn counts(&self) -> &[BigUint] {
        &self.counts
    }

    /// The census through length `len`: extended by the closed form when there is one,
    /// otherwise truncated to the known horizon.
    pub fn upto(&self, len: usize) -> Census {
        if len <= self.horizon() {
            Census {
                counts: self.counts[..=len].to_vec(),
                closed_form: self.closed_form,
            }
        } else if let Some(b) = self.closed_form {
            Census::from_builtin(b, len)
        } else {
            self.clone()
        }
    }

    /// `(length, count)` for every nonzero count, ascending.
    pub fn nonzero(&self) -> impl Iterator<Item = (usize, &BigUint)> {
        self.counts.iter().enumerate().filter(|(_, c)| !c.is_zero())
    }

    pub fn total(&self) -> BigUint {
        self.counts.iter().sum()
    }

    /// `sum_{l <= len} census(l) 2^-l`.
    pub fn kraft_sum(&self, len: usize) -> DyadicRational {
        kraft_sum(&self.counts[..=len.min(self.horizon())])
    }

    /// Certified enclosure of the Kraft mass of domain elements longer than `len`.
    pub fn tail_mass(&self, len: usize) -> Enclosure {
        if let Some(b) = self.closed_form {
            return b.tail_mass(len);
        }
        let slack = &DyadicRational::one() - &self.kraft_sum(len);
        let mut known = DyadicRational::zero();
        for (l, c) in self.nonzero().filter(|(l, _)| *l > len) {
            known = &known + &DyadicRational::new(BigInt::from(c.clone()), -(l as i64));
        }
        Enclosure::new(known, slack)
    }
}
