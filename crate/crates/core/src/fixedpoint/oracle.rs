use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use super::{Observable, QuantityHandle};
use crate::error::{Error, Result};
use crate::precision::{DyadicRational, Enclosure, Round, Temperature};
use crate::thermo::{closed_form, Quantity};

/// Length of the `closed-form` streams; `grid:` streams have half as many terms.
pub const ORACLE_TERMS: usize = 128;

/// Where an approximation stream comes from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Oracle {
    /// Computed from the certified value: `f(T)` rounded outward at `2^-m`,
    /// or `T + (t - T) 2^-l` for temperatures.
    ClosedForm,
    /// One dyadic per line; blank lines and `#` comments are skipped.
    File(PathBuf),
    /// Multiples of a step, approaching the value from the sound side but
    /// never closer than one step.
    Grid(DyadicRational),
}

/// Which approximation a stream provides.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleKind {
    /// `h(m) >= f(T)`, nonincreasing towards `f(T)`.
    Upper,
    /// `B(m) <= f(T)`, nondecreasing towards `f(T)`.
    Lower,
    /// `A(l)` in `(T, t)`, nonincreasing towards `T`.
    Temperature,
}

impl FromStr for Oracle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "closed-form" {
            return Ok(Oracle::ClosedForm);
        }
        if let Some(path) = s.strip_prefix("file:") {
            if path.is_empty() {
                return Err(Error::InvalidSpec("file: oracle needs a path".into()));
            }
            return Ok(Oracle::File(PathBuf::from(path)));
        }
        if let Some(step) = s.strip_prefix("grid:") {
            let step: DyadicRational = step.parse()?;
            if !step.is_positive() {
                return Err(Error::InvalidSpec("grid step must be positive".into()));
            }
            return Ok(Oracle::Grid(step));
        }
        Err(Error::InvalidSpec(format!(
            "unknown oracle `{s}` (expected closed-form, file:<path> or grid:<step>)"
        )))
    }
}

impl fmt::Display for Oracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Oracle::ClosedForm => f.write_str("closed-form"),
            Oracle::File(p) => write!(f, "file:{}", p.display()),
            Oracle::Grid(step) => write!(f, "grid:{step}"),
        }
    }
}

/// Certified `f(T)`: the ensemble's closed form where one exists, else the limit enclosure.
pub(crate) fn reference_value(handle: &QuantityHandle, bits: u32) -> Result<Enclosure> {
    let q = handle.quantity();
    let t = handle.temperature();
    let observable = q.observable();
    let quantity = match observable {
        Observable::Z => Quantity::Z,
        Observable::NegF => Quantity::F,
        Observable::E => Quantity::E,
        Observable::S => Quantity::S,
    };
    let exact = q
        .snapshot()
        .builtin()
        .and_then(|b| closed_form(b, quantity, t, bits));
    match exact {
        Some(v) if observable == Observable::NegF => Ok(-v),
        Some(v) => Ok(v),
        None => q.limit(t, bits),
    }
}

fn ceil_div(x: &DyadicRational, step: &DyadicRational) -> BigInt {
    let r = x.to_rational() / step.to_rational();
    r.ceil().to_integer()
}

fn floor_div(x: &DyadicRational, step: &DyadicRational) -> BigInt {
    let r = x.to_rational() / step.to_rational();
    r.floor().to_integer()
}

fn multiple(j: BigInt, step: &DyadicRational) -> DyadicRational {
    &DyadicRational::from_int(j) * step
}

fn read_file(path: &PathBuf) -> Result<Vec<DyadicRational>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.parse::<DyadicRational>().map_err(Error::from))
        .collect()
}

/// `T + (t - T) 2^-l` rounded up to a dyadic; strictly inside `(T, t)`.
fn temperature_term(t: &Temperature, window: &Temperature, l: usize) -> DyadicRational {
    let gap = (window.value() - t.value()) / BigRational::from_integer(BigInt::one() << l);
    DyadicRational::from_rational_rounded(&(t.value() + gap), l as u32 + 64, Round::Up)
}

impl Oracle {
    /// The stream of this kind for `handle`'s quantity and temperature.
    ///
    /// File streams are checked against the certified value: an entry that is
    /// certainly on the wrong side is a [`Error::Precondition`].
    pub fn stream(
        &self,
        handle: &QuantityHandle,
        kind: OracleKind,
        bits: u32,
    ) -> Result<Vec<DyadicRational>> {
        let t = handle.temperature();
        let window = &handle.certificate().t;
        let wp = bits.max(ORACLE_TERMS as u32) + 32;
        match (self, kind) {
            (Oracle::ClosedForm, OracleKind::Temperature) => Ok((1..=ORACLE_TERMS)
                .map(|l| temperature_term(t, window, l))
                .collect()),
            (Oracle::ClosedForm, _) => {
                let v = reference_value(handle, wp)?;
                Ok((1..=ORACLE_TERMS as i64)
                    .map(|m| match kind {
                        OracleKind::Upper => v.hi().round_to_exponent(-m, Round::Up),
                        _ => v.lo().round_to_exponent(-m, Round::Down),
                    })
                    .collect())
            }
            (Oracle::Grid(step), OracleKind::Temperature) => {
                let t_dyadic = DyadicRational::from_rational_rounded(t.value(), wp, Round::Down);
                let base = floor_div(&t_dyadic, step) + 1;
                let terms = ORACLE_TERMS / 2;
                Ok((0..terms)
                    .map(|j| multiple(&base + BigInt::from(terms - 1 - j), step))
                    .filter(|a| &a.to_rational() < window.value() && &a.to_rational() > t.value())
                    .collect())
            }
            (Oracle::Grid(step), _) => {
                let v = reference_value(handle, wp)?;
                let terms = ORACLE_TERMS / 2;
                Ok((0..terms)
                    .map(|j| {
                        let slack = BigInt::from(terms - 1 - j);
                        match kind {
                            OracleKind::Upper => multiple(ceil_div(v.hi(), step) + slack, step),
                            _ => multiple(floor_div(v.lo(), step) - slack, step),
                        }
                    })
                    .collect())
            }
            (Oracle::File(path), kind) => {
                let values = read_file(path)?;
                let v = match kind {
                    OracleKind::Temperature => None,
                    _ => Some(reference_value(handle, wp)?),
                };
                for (i, x) in values.iter().enumerate() {
                    let unsound = match (kind, &v) {
                        (OracleKind::Upper, Some(v)) => x < v.lo(),
                        (OracleKind::Lower, Some(v)) => x > v.hi(),
                        _ => &x.to_rational() <= t.value() || &x.to_rational() >= window.value(),
                    };
                    if unsound {
                        return Err(Error::Precondition(format!(
                            "{} entry {} ({x}) is on the wrong side of the certified value",
                            path.display(),
                            i + 1
                        )));
                    }
                }
                Ok(values)
            }
        }
    }
}
