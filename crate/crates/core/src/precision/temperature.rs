use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Serialize, Serializer};

use super::dyadic::{parse_rational, DyadicRational};
use super::enclosure::Enclosure;
use crate::error::{Error, ParseError, Result};

/// A positive temperature.
///
/// Stored as an exact rational: dividing a dyadic temperature by `n` (power
/// sums) or probing `T = 1.1` needs denominators that are not powers of two.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Temperature(BigRational);

impl Temperature {
    pub fn new(value: BigRational) -> Result<Self> {
        if !value.is_positive() {
            return Err(Error::Domain(format!(
                "temperature must be positive, got {value}"
            )));
        }
        Ok(Temperature(value))
    }

    /// `p/q` as a temperature; panics unless `p/q > 0`.
    pub fn ratio(p: i64, q: i64) -> Self {
        Self::new(BigRational::new(p.into(), q.into())).expect("positive temperature")
    }

    pub fn from_dyadic(d: &DyadicRational) -> Result<Self> {
        Self::new(d.to_rational())
    }

    pub fn value(&self) -> &BigRational {
        &self.0
    }

    /// `beta = 1/T`.
    pub fn inverse(&self) -> BigRational {
        self.0.recip()
    }

    pub fn as_dyadic(&self) -> Option<DyadicRational> {
        DyadicRational::from_rational(&self.0)
    }

    pub fn enclosure(&self, bits: u32) -> Enclosure {
        Enclosure::from_rational(&self.0, bits)
    }

    /// Strictly inside `(0, 1)`, the convergent regime of every builtin ensemble.
    pub fn in_unit_interval(&self) -> bool {
        self.0 < BigRational::one()
    }

    pub fn divided_by(&self, n: u32) -> Temperature {
        Temperature(&self.0 / BigRational::from_integer(BigInt::from(n)))
    }

    /// `(T + 1) / 2`.
    pub fn midpoint_to_one(&self) -> Temperature {
        Temperature((&self.0 + BigRational::one()) / BigRational::from_integer(2.into()))
    }

    /// Check the entry-point domain `0 < T < 1`.
    pub fn require_unit(&self) -> Result<()> {
        if self.in_unit_interval() {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "temperature {self} is outside (0, 1)"
            )))
        }
    }

    /// Parse any positive rational (`p/q` with arbitrary `q`, decimals like `1.1`, dyadic forms).
    pub fn parse_rational(s: &str) -> Result<Self> {
        let r = parse_any_rational(s)?;
        Self::new(r)
    }
}

/// Accepts `p/q`, `m*2^e`, integers and decimal `1.25` forms.
pub fn parse_any_rational(s: &str) -> std::result::Result<BigRational, ParseError> {
    let t = s.trim();
    if let Some((p, q)) = t.split_once('/') {
        let p: BigInt = p
            .trim()
            .parse()
            .map_err(|_| ParseError::Number(s.to_string()))?;
        let q: BigInt = q
            .trim()
            .parse()
            .map_err(|_| ParseError::Number(s.to_string()))?;
        if q.is_zero() {
            return Err(ParseError::Number(s.to_string()));
        }
        return Ok(BigRational::new(p, q));
    }
    if !t.contains('.') {
        return parse_rational(t);
    }
    // dotted forms are decimal here; the binary literal is only read by `FromStr`
    let (neg, body) = match t.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, t),
    };
    let (ip, fp) = body
        .split_once('.')
        .ok_or_else(|| ParseError::Number(s.to_string()))?;
    if ip.is_empty() && fp.is_empty() || !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit()) {
        return Err(ParseError::Number(s.to_string()));
    }
    let digits: BigInt = format!("{}{}", if ip.is_empty() { "0" } else { ip }, fp)
        .parse()
        .map_err(|_| ParseError::Number(s.to_string()))?;
    let den = num_traits::pow(BigInt::from(10), fp.len());
    let r = BigRational::new(digits, den);
    Ok(if neg { -r } else { r })
}

impl FromStr for Temperature {
    type Err = Error;

    /// Dyadic forms only: `p/q` with `q` a power of two, `m*2^e`, or `0.b1b2...`.
    fn from_str(s: &str) -> Result<Self> {
        let d: DyadicRational = s.parse()?;
        Self::from_dyadic(&d)
    }
}

impl fmt::Display for Temperature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl Serialize for Temperature {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl fmt::Debug for Temperature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "T({self})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_cli_forms() {
        assert_eq!(
            "1/2".parse::<Temperature>().unwrap(),
            Temperature::ratio(1, 2)
        );
        assert_eq!(
            "0.011".parse::<Temperature>().unwrap(),
            Temperature::ratio(3, 8)
        );
        assert!("1/3".parse::<Temperature>().is_err());
        assert!("0".parse::<Temperature>().is_err());
    }

    #[test]
    fn rational_forms() {
        assert_eq!(
            Temperature::parse_rational("1.1").unwrap(),
            Temperature::ratio(11, 10)
        );
        assert_eq!(
            Temperature::parse_rational("2/6").unwrap(),
            Temperature::ratio(1, 3)
        );
        assert!(Temperature::parse_rational("-1/2").is_err());
    }

    #[test]
    fn helpers() {
        let t = Temperature::ratio(1, 2);
        assert_eq!(t.midpoint_to_one(), Temperature::ratio(3, 4));
        assert_eq!(t.divided_by(3), Temperature::ratio(1, 6));
        assert!(Temperature::ratio(1, 1).require_unit().is_err());
        assert_eq!(t.to_string(), "1/2");
    }
}
