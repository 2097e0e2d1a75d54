use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use super::moments::{
    moments, tail_bounds, weigh, weigh_with, Moments, WeightTable, MOMENT_ORDERS,
};
use crate::ensembles::{Census, EnsembleSnapshot};
use crate::error::{Error, Result};
use crate::precision::{ln2, log2_enclosure, DyadicRational, Enclosure, Temperature};

/// Largest temperature accepted by the partial-sum evaluators.
pub const MAX_EXTENDED_TEMPERATURE: i64 = 2;

/// Longest truncation length tried when certifying a limit.
pub const MAX_TRUNCATION: usize = 1 << 14;

/// Either the `k`-th partial sum or the certified `k -> infinity` limit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Horizon {
    Partial {
        k: u64,
    },
    /// Limit enclosure: exact terms through `truncation`, tail bounded beyond it.
    Limit {
        truncation: usize,
    },
}

impl Horizon {
    pub fn label(&self) -> String {
        match self {
            Horizon::Partial { k } => k.to_string(),
            Horizon::Limit { .. } => "limit".to_string(),
        }
    }
}

/// The seven quantities at one temperature, with per-quantity tail enclosures
/// (limit minus partial sum at the truncation length; zero for partial sums).
#[derive(Clone, Debug)]
pub struct ThermoEvaluation {
    pub temperature: Temperature,
    pub horizon: Horizon,
    pub z: Enclosure,
    pub w: Enclosure,
    pub y: Enclosure,
    pub f: Enclosure,
    pub e: Enclosure,
    pub s: Enclosure,
    pub c: Enclosure,
    pub tail: [Enclosure; 7],
    pub moments: Moments,
}

pub const QUANTITY_NAMES: [&str; 7] = ["Z", "W", "Y", "F", "E", "S", "C"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Quantity {
    Z,
    W,
    Y,
    F,
    E,
    S,
    C,
}

impl Quantity {
    pub const ALL: [Quantity; 7] = [
        Quantity::Z,
        Quantity::W,
        Quantity::Y,
        Quantity::F,
        Quantity::E,
        Quantity::S,
        Quantity::C,
    ];

    pub fn name(&self) -> &'static str {
        QUANTITY_NAMES[*self as usize]
    }

    pub fn of<'a>(&self, ev: &'a ThermoEvaluation) -> &'a Enclosure {
        ev.values()[*self as usize]
    }
}

impl std::str::FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Quantity::ALL
            .into_iter()
            .find(|q| q.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown quantity `{s}`")))
    }
}

impl ThermoEvaluation {
    pub fn values(&self) -> [&Enclosure; 7] {
        [
            &self.z, &self.w, &self.y, &self.f, &self.e, &self.s, &self.c,
        ]
    }

    pub fn get(&self, name: &str) -> Option<&Enclosure> {
        QUANTITY_NAMES
            .iter()
            .position(|q| *q == name)
            .map(|i| self.values()[i])
    }

    pub fn is_limit(&self) -> bool {
        matches!(self.horizon, Horizon::Limit { .. })
    }
}

/// `(length, count)` of the first `k` programs in canonical order.
pub fn length_profile(census: &Census, k: u64) -> Result<Vec<(usize, BigUint)>> {
    let mut remaining = BigUint::from(k);
    let mut out = Vec::new();
    for (len, count) in census.nonzero() {
        if remaining.is_zero() {
            break;
        }
        let take = count.min(&remaining).clone();
        remaining -= &take;
        out.push((len, take));
    }
    if !remaining.is_zero() {
        let available = census.total().to_u64().unwrap_or(u64::MAX);
        return Err(Error::KOutOfRange { k, available });
    }
    Ok(out)
}

fn check_partial_temperature(t: &Temperature) -> Result<()> {
    if t.value() >= &BigRational::from_integer(MAX_EXTENDED_TEMPERATURE.into()) {
        return Err(Error::Domain(format!(
            "temperature {t} exceeds the supported maximum {MAX_EXTENDED_TEMPERATURE}"
        )));
    }
    Ok(())
}

/// Derive F, E, S, C from moment enclosures.
pub(crate) fn derive(
    t: &Temperature,
    horizon: Horizon,
    m: Moments,
    bits: u32,
) -> Result<ThermoEvaluation> {
    let wp = bits + 8;
    let beta = t.inverse();
    let z = m.z().clone();
    let w = m.w().clone();
    let y = m.y().clone();
    let log_z = log2_enclosure(&z, wp)?;
    let f = -log_z.mul_rational(t.value(), wp);
    let e = w.div(&z, wp)?;
    let s = (&e.mul_rational(&beta, wp) + &log_z)
        .round(wp)
        .clamp_below(&DyadicRational::zero());
    let c = (variance(&m, wp)?
        .mul(&ln2(wp))
        .mul_rational(&(&beta * &beta), wp))
    .round(wp)
    .clamp_below(&DyadicRational::zero());
    let zero = Enclosure::zero();
    Ok(ThermoEvaluation {
        temperature: t.clone(),
        horizon,
        z,
        w,
        y,
        f,
        e,
        s,
        c,
        tail: std::array::from_fn(|_| zero.clone()),
        moments: m,
    })
}

/// Variance of the Gibbs length distribution from shifted sums.
pub(crate) fn variance(m: &Moments, wp: u32) -> Result<Enclosure> {
    let z = m.z();
    let d = m.central[1].div(z, wp)?;
    let mu2 = m.central[2].div(z, wp)?;
    Ok((&mu2 - &d.sqr())
        .round(wp)
        .clamp_below(&DyadicRational::zero()))
}

/// Partial sums over the first `k` programs.
pub fn eval_partial(
    snapshot: &EnsembleSnapshot,
    t: &Temperature,
    k: u64,
    bits: u32,
) -> Result<ThermoEvaluation> {
    eval_partial_census(snapshot.census(), t, k, bits)
}

pub fn eval_partial_census(
    census: &Census,
    t: &Temperature,
    k: u64,
    bits: u32,
) -> Result<ThermoEvaluation> {
    if k == 0 {
        return Err(Error::Precondition("k must be at least 1".into()));
    }
    check_partial_temperature(t)?;
    let profile = length_profile(census, k)?;
    let m = moments(&weigh(&profile, &t.inverse(), bits + 8), bits + 8);
    derive(t, Horizon::Partial { k }, m, bits)
}

/// [`eval_partial_census`] reusing `table`, whose `beta` must be `1/t`.
pub(crate) fn eval_partial_with(
    census: &Census,
    t: &Temperature,
    k: u64,
    table: &mut WeightTable,
    bits: u32,
) -> Result<ThermoEvaluation> {
    if k == 0 {
        return Err(Error::Precondition("k must be at least 1".into()));
    }
    check_partial_temperature(t)?;
    debug_assert_eq!(table.beta(), &t.inverse());
    let profile = length_profile(census, k)?;
    let m = moments(&weigh_with(table, &profile, bits + 8), bits + 8);
    derive(t, Horizon::Partial { k }, m, bits)
}

/// Moment sums through length `len` plus tail bounds beyond it.
fn truncated(
    census: &Census,
    len: usize,
    t: &Temperature,
    bits: u32,
) -> (Moments, [DyadicRational; MOMENT_ORDERS]) {
    let upto = census.upto(len);
    let profile: Vec<(usize, BigUint)> = upto.nonzero().map(|(l, c)| (l, c.clone())).collect();
    let m = moments(&weigh(&profile, &t.inverse(), bits + 8), bits + 8);
    let tails = tail_bounds(census, len, &t.inverse());
    (m, tails)
}

fn tails_small_enough(
    m: &Moments,
    tails: &[DyadicRational; MOMENT_ORDERS],
    len: usize,
    bits: u32,
) -> bool {
    if m.shift > DyadicRational::from_int(len as i64) {
        return false;
    }
    (0..3).all(|j| {
        let lo = m.raw[j].lo();
        if lo.is_zero() {
            tails[j].is_zero()
        } else {
            tails[j] <= lo.shl(-(bits as i64) - 4)
        }
    })
}

/// Certified enclosures of the `k -> infinity` limits, `0 < T < 1`.
///
/// Closed-form censuses are extended until the tail is below `2^-bits` relative
/// to each of Z, W, Y (or `MAX_TRUNCATION` is reached); table censuses stop at
/// their horizon. Widths reflect whatever was achievable.
pub fn eval_limit(
    snapshot: &EnsembleSnapshot,
    t: &Temperature,
    bits: u32,
) -> Result<ThermoEvaluation> {
    eval_limit_census(snapshot.census(), t, bits)
}

pub fn eval_limit_census(census: &Census, t: &Temperature, bits: u32) -> Result<ThermoEvaluation> {
    t.require_unit()?;
    let mut len = if census.is_unbounded() {
        32
    } else {
        census.horizon()
    };
    let (m, tails) = loop {
        let (m, tails) = truncated(census, len, t, bits);
        if !census.is_unbounded()
            || len >= MAX_TRUNCATION
            || tails_small_enough(&m, &tails, len, bits)
        {
            break (m, tails);
        }
        len = (len * 2).min(MAX_TRUNCATION);
    };
    if m.shift > DyadicRational::from_int(len as i64 + 1) {
        return Err(Error::Unresolved(format!(
            "mean length exceeds the truncation length {len}; tail bounds do not apply"
        )));
    }
    let partial = derive(t, Horizon::Limit { truncation: len }, m.clone(), bits)?;
    let mut limit = derive(
        t,
        Horizon::Limit { truncation: len },
        m.with_tails(&tails),
        bits,
    )?;
    let pv = partial.values();
    limit.tail = std::array::from_fn(|i| (limit.values()[i] - pv[i]).round(bits + 8));
    Ok(limit)
}

/// Like [`eval_limit`] but fails unless the Z enclosure is at most `width` wide.
pub fn eval_limit_to_width(
    snapshot: &EnsembleSnapshot,
    t: &Temperature,
    bits: u32,
    width: &DyadicRational,
) -> Result<ThermoEvaluation> {
    let ev = eval_limit(snapshot, t, bits)?;
    let achieved = ev.z.width();
    if &achieved > width {
        return Err(Error::TailTooWide {
            requested: width.clone(),
            achievable: achieved,
        });
    }
    Ok(ev)
}

/// `sum_{i <= k} (2^(-|p_i|/T))^n`, evaluated as `sum_i 2^(-n |p_i| / T)`.
pub fn power_sum(
    snapshot: &EnsembleSnapshot,
    t: &Temperature,
    n: u32,
    k: u64,
    bits: u32,
) -> Result<Enclosure> {
    if n == 0 {
        return Err(Error::Precondition("power must be at least 1".into()));
    }
    if k == 0 {
        return Err(Error::Precondition("k must be at least 1".into()));
    }
    check_partial_temperature(t)?;
    let profile = length_profile(snapshot.census(), k)?;
    let beta = t.inverse() * BigRational::from_integer(n.into());
    let m = moments(&weigh(&profile, &beta, bits + 8), bits + 8);
    Ok(m.z().clone())
}

/// Partial sums or limits over a strictly increasing grid, in grid order.
pub fn sweep(
    snapshot: &EnsembleSnapshot,
    grid: &[Temperature],
    horizon: Option<u64>,
    bits: u32,
    allow_extended: bool,
) -> Result<Vec<ThermoEvaluation>> {
    for w in grid.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::Precondition(
                "temperature grid must be strictly increasing".into(),
            ));
        }
    }
    if !allow_extended {
        for t in grid {
            t.require_unit()?;
        }
    }
    grid.par_iter()
        .map(|t| match horizon {
            Some(k) => eval_partial(snapshot, t, k, bits),
            None => eval_limit(snapshot, t, bits),
        })
        .collect()
}

/// `lo:hi:step` grid of rationals, inclusive of `hi` when it lies on the grid.
pub fn parse_grid(spec: &str) -> Result<Vec<Temperature>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [lo, hi, step] = parts.as_slice() else {
        return Err(Error::Domain(format!("grid `{spec}` must be lo:hi:step")));
    };
    let lo = crate::precision::parse_any_rational(lo)?;
    let hi = crate::precision::parse_any_rational(hi)?;
    let step = crate::precision::parse_any_rational(step)?;
    if step <= BigRational::zero() {
        return Err(Error::Domain("grid step must be positive".into()));
    }
    let mut out = Vec::new();
    let mut x = lo;
    while x <= hi {
        out.push(Temperature::new(x.clone())?);
        x += &step;
    }
    Ok(out)
}

/// Default grid `i/16`, `i = 1..15`.
pub fn default_grid() -> Vec<Temperature> {
    (1..16).map(|i| Temperature::ratio(i, 16)).collect()
}

impl Serialize for ThermoEvaluation {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(None)?;
        map.serialize_entry("T", &self.temperature.to_string())?;
        match &self.horizon {
            Horizon::Partial { k } => map.serialize_entry("k", k)?,
            Horizon::Limit { truncation } => {
                map.serialize_entry("k", "limit")?;
                map.serialize_entry("truncation_length", truncation)?;
            }
        }
        for (name, v) in QUANTITY_NAMES.iter().zip(self.values()) {
            map.serialize_entry(name, v)?;
        }
        let tails: std::collections::BTreeMap<&str, &Enclosure> = QUANTITY_NAMES
            .iter()
            .copied()
            .zip(self.tail.iter())
            .collect();
        map.serialize_entry("tail_bound", &tails)?;
        map.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{enumerate, Builtin, EnsembleSpec};

    fn snap(b: Builtin, maxlen: usize) -> EnsembleSnapshot {
        enumerate(&EnsembleSpec::Builtin(b), 1_000, maxlen).unwrap()
    }

    fn d(s: &str) -> DyadicRational {
        s.parse().unwrap()
    }

    fn rat(p: i64, q: i64) -> BigRational {
        BigRational::new(p.into(), q.into())
    }

    #[test]
    fn geometric_single_program() {
        let ev = eval_partial(
            &snap(Builtin::Geometric, 8),
            &Temperature::ratio(1, 2),
            1,
            64,
        )
        .unwrap();
        assert_eq!(ev.z, Enclosure::point(d("1/4")));
        assert_eq!(ev.f, Enclosure::from_int(1));
        assert_eq!(ev.e, Enclosure::from_int(1));
        assert_eq!(ev.s, Enclosure::zero());
        assert_eq!(ev.c, Enclosure::zero());
    }

    #[test]
    fn geometric_two_programs() {
        let ev = eval_partial(
            &snap(Builtin::Geometric, 8),
            &Temperature::ratio(1, 2),
            2,
            64,
        )
        .unwrap();
        assert_eq!(ev.z, Enclosure::point(d("5/16")));
        assert!(ev.e.contains_rational(&rat(6, 5)));
        assert!(ev.e.width() < DyadicRational::pow2(-60));
    }

    #[test]
    fn sdm4_shortest_program() {
        let ev = eval_partial(&snap(Builtin::Sdm4, 8), &Temperature::ratio(1, 2), 1, 64).unwrap();
        assert_eq!(ev.z, Enclosure::point(d("1/16")));
    }

    #[test]
    fn k_out_of_range() {
        let s = snap(Builtin::Geometric, 4);
        assert!(matches!(
            eval_partial(&s, &Temperature::ratio(1, 2), 5, 64),
            Err(Error::KOutOfRange { .. })
        ));
        assert!(eval_partial(&s, &Temperature::ratio(1, 2), 0, 64).is_err());
    }

    #[test]
    fn limits_contain_closed_forms() {
        let half = Temperature::ratio(1, 2);
        let g = eval_limit(&snap(Builtin::Geometric, 4), &half, 64).unwrap();
        assert!(g.z.contains_rational(&rat(1, 3)));
        assert!(g.e.contains_rational(&rat(4, 3)));
        assert!(g.z.width() < DyadicRational::pow2(-60));
        let s = eval_limit(&snap(Builtin::Sdm4, 4), &half, 64).unwrap();
        assert!(s.z.contains_rational(&rat(16, 221)));
        assert!(s.z.width() < DyadicRational::pow2(-60));
        assert!(s.s.lo().is_positive() && s.c.lo().is_positive());
        assert!(eval_limit(&snap(Builtin::Sdm4, 4), &Temperature::ratio(1, 1), 64).is_err());
    }

    #[test]
    fn limit_width_reporting() {
        // a table census stops at its horizon
        let text = snap(Builtin::Geometric, 6)
            .to_text()
            .replace("ensemble=geometric", "ensemble=table");
        let table = EnsembleSnapshot::from_text(&text).unwrap();
        let ev = eval_limit(&table, &Temperature::ratio(1, 2), 64).unwrap();
        assert!(ev.z.contains_rational(&rat(1, 3)));
        let err = eval_limit_to_width(
            &table,
            &Temperature::ratio(1, 2),
            64,
            &DyadicRational::pow2(-30),
        )
        .unwrap_err();
        assert!(matches!(err, Error::TailTooWide { .. }));
    }

    #[test]
    fn power_sums() {
        let s = snap(Builtin::Geometric, 8);
        let half = Temperature::ratio(1, 2);
        assert_eq!(
            power_sum(&s, &half, 2, 2, 64).unwrap(),
            Enclosure::point(d("17/256"))
        );
        assert_eq!(
            power_sum(&s, &half, 1, 3, 64).unwrap(),
            eval_partial(&s, &half, 3, 64).unwrap().z
        );
        assert_eq!(
            power_sum(&s, &half, 2, 3, 64).unwrap(),
            eval_partial(&s, &half.divided_by(2), 3, 64).unwrap().z
        );
    }

    #[test]
    fn kraft_sums_at_unit_temperature() {
        let s = snap(Builtin::Sdm4, 24);
        let one = Temperature::ratio(1, 1);
        let mut k = 0u64;
        for len in 0..=24 {
            k += s.census().count(len).to_u64().unwrap();
            if k == 0 {
                continue;
            }
            let z = eval_partial(&s, &one, k, 64).unwrap().z;
            assert_eq!(z, Enclosure::point(s.census().kraft_sum(len)));
        }
    }

    #[test]
    fn sweeps() {
        let s = snap(Builtin::Geometric, 8);
        let grid = [
            Temperature::ratio(1, 4),
            Temperature::ratio(1, 2),
            Temperature::ratio(3, 4),
        ];
        let out = sweep(&s, &grid, None, 64, false).unwrap();
        assert_eq!(out.len(), 3);
        assert!(out[0].z.certainly_lt(&out[1].z) && out[1].z.certainly_lt(&out[2].z));
        for (ev, t) in out.iter().zip(&grid) {
            assert_eq!(ev.z, eval_limit(&s, t, 64).unwrap().z);
        }
        assert!(sweep(&s, &[], None, 64, false).unwrap().is_empty());
        assert!(parse_grid("0:1/2:1/4").is_err());
        assert!(sweep(&s, &[grid[1].clone(), grid[0].clone()], Some(2), 64, false).is_err());
        assert_eq!(parse_grid("1/16:15/16:1/16").unwrap(), default_grid());
    }
}
