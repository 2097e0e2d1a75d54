//! Length-moment sums `sum_l census(l) (l - s)^j 2^(-l beta)` with certified tails.

use std::collections::HashMap;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::ensembles::Census;
use crate::precision::{exp2_enclosure, DyadicRational, Enclosure, Round};

/// Highest moment order tracked (the derivative bounds need the fourth).
pub const MOMENT_ORDERS: usize = 5;

/// `2^(-l beta)` for many lengths, sharing one `exp2` per fractional residue.
pub(crate) struct WeightTable {
    beta: BigRational,
    bits: u32,
    // keyed by the fractional part of l * beta
    cache: HashMap<BigRational, Enclosure>,
}

impl WeightTable {
    pub(crate) fn new(beta: BigRational, bits: u32) -> Self {
        WeightTable {
            beta,
            bits,
            cache: HashMap::new(),
        }
    }

    pub(crate) fn beta(&self) -> &BigRational {
        &self.beta
    }

    pub(crate) fn weight(&mut self, len: usize) -> Enclosure {
        let x = &self.beta * BigRational::from_integer(BigInt::from(len));
        let (q, r) = x.numer().div_mod_floor(x.denom());
        let unit = if r.is_zero() {
            Enclosure::one()
        } else {
            let bits = self.bits;
            let frac = BigRational::new(r, x.denom().clone());
            self.cache
                .entry(frac.clone())
                .or_insert_with(|| exp2_enclosure(&-frac, bits))
                .clone()
        };
        unit.shl(-q.to_i64().expect("length times beta out of range"))
    }
}

/// `(length, count * weight)` pairs.
pub(crate) struct Weighted {
    pub items: Vec<(usize, Enclosure)>,
    floor: i64,
}

impl Weighted {
    /// Termwise hull with another weighting of the same profile.
    ///
    /// Weights decrease in `beta`, so hulling the two ends of a `beta` interval
    /// encloses every term over the whole interval.
    pub(crate) fn hull(&self, other: &Weighted) -> Weighted {
        assert_eq!(self.items.len(), other.items.len());
        let items = self
            .items
            .iter()
            .zip(&other.items)
            .map(|((l, a), (m, b))| {
                assert_eq!(l, m);
                (*l, a.hull(b))
            })
            .collect();
        Weighted {
            items,
            floor: self.floor.min(other.floor),
        }
    }
}

pub(crate) fn weigh(profile: &[(usize, BigUint)], beta: &BigRational, bits: u32) -> Weighted {
    weigh_with(&mut WeightTable::new(beta.clone(), bits + 8), profile, bits)
}

/// [`weigh`] with a caller-held table, so repeated sums at one temperature
/// compute each `exp2` once.
pub(crate) fn weigh_with(
    table: &mut WeightTable,
    profile: &[(usize, BigUint)],
    bits: u32,
) -> Weighted {
    let mut items = Vec::with_capacity(profile.len());
    let mut top: Option<i64> = None;
    for (len, count) in profile {
        if count.is_zero() {
            continue;
        }
        let w = table
            .weight(*len)
            .mul_int(&BigInt::from(count.clone()))
            .round(bits + 8);
        if let Some(m) = w.hi().msb() {
            top = Some(top.map_or(m, |t| t.max(m)));
        }
        items.push((*len, w));
    }
    // every term is rounded to a multiple of 2^floor; Z is at least 2^top
    let floor = top.unwrap_or(0) - bits as i64 - 24;
    Weighted { items, floor }
}

/// Raw moments `sum (l)^j w` and central moments `sum (l - shift)^j w`, `j < 5`.
#[derive(Clone, Debug)]
pub struct Moments {
    pub raw: [Enclosure; MOMENT_ORDERS],
    pub shift: DyadicRational,
    pub central: [Enclosure; MOMENT_ORDERS],
}

impl Moments {
    pub fn z(&self) -> &Enclosure {
        &self.raw[0]
    }

    pub fn w(&self) -> &Enclosure {
        &self.raw[1]
    }

    pub fn y(&self) -> &Enclosure {
        &self.raw[2]
    }

    /// Widen by nonnegative tail bounds `[0, tails[j]]` on every order.
    pub(crate) fn with_tails(&self, tails: &[DyadicRational; MOMENT_ORDERS]) -> Moments {
        let widen = |e: &Enclosure, t: &DyadicRational| Enclosure::new(e.lo().clone(), e.hi() + t);
        Moments {
            raw: std::array::from_fn(|j| widen(&self.raw[j], &tails[j])),
            shift: self.shift.clone(),
            central: std::array::from_fn(|j| widen(&self.central[j], &tails[j])),
        }
    }
}

fn sum_terms(
    weighted: &Weighted,
    center: &DyadicRational,
    bits: u32,
) -> [Enclosure; MOMENT_ORDERS] {
    let mut lo: [DyadicRational; MOMENT_ORDERS] = std::array::from_fn(|_| DyadicRational::zero());
    let mut hi: [DyadicRational; MOMENT_ORDERS] = std::array::from_fn(|_| DyadicRational::zero());
    for (len, w) in &weighted.items {
        let d = &DyadicRational::from_int(*len as i64) - center;
        let mut factor = DyadicRational::one();
        for j in 0..MOMENT_ORDERS {
            let t = w.mul_dyadic(&factor);
            lo[j] = &lo[j] + &t.lo().round_to_exponent(weighted.floor, Round::Down);
            hi[j] = &hi[j] + &t.hi().round_to_exponent(weighted.floor, Round::Up);
            factor = &factor * &d;
        }
    }
    std::array::from_fn(|j| Enclosure::new(lo[j].clone(), hi[j].clone()).round(bits + 8))
}

pub(crate) fn moments(weighted: &Weighted, bits: u32) -> Moments {
    let raw = sum_terms(weighted, &DyadicRational::zero(), bits);
    // centre near the mean so that central sums avoid cancellation
    let shift = match raw[1].div(&raw[0], 32) {
        Ok(e) => e.mid().round(24, Round::Down).max(DyadicRational::zero()),
        Err(_) => DyadicRational::zero(),
    };
    let central = sum_terms(weighted, &shift, bits);
    Moments {
        raw,
        shift,
        central,
    }
}

/// `max_{l >= len + 1} l^j 2^(-l delta)` as an upper bound, `delta > 0`.
pub(crate) fn tail_multiplier(len: usize, j: usize, delta: &BigRational) -> DyadicRational {
    assert!(delta.is_positive());
    let start = len as u64 + 1;
    let mut candidates = vec![start];
    if j > 0 {
        // peak of x^j 2^(-x delta) at x = j / (delta ln 2)
        let peak =
            j as f64 / (delta.to_f64().unwrap_or(f64::MIN_POSITIVE) * std::f64::consts::LN_2);
        if peak.is_finite() && peak > start as f64 {
            let p = peak.floor() as u64;
            for c in p.saturating_sub(1)..=p + 2 {
                if c > start {
                    candidates.push(c);
                }
            }
        }
    }
    candidates
        .into_iter()
        .map(|l| {
            let x = -(delta * BigRational::from_integer(BigInt::from(l)));
            let w = exp2_enclosure(&x, 40);
            let lj = DyadicRational::from_int(BigInt::from(l).pow(j as u32));
            (&lj * w.hi()).round(40, Round::Up)
        })
        .max()
        .expect("nonempty")
}

/// Certified upper bounds on `sum_{l > len} census(l) l^j 2^(-l beta)`, `beta > 1`.
pub(crate) fn tail_bounds(
    census: &Census,
    len: usize,
    beta: &BigRational,
) -> [DyadicRational; MOMENT_ORDERS] {
    let delta = beta - BigRational::one();
    let mass = census.tail_mass(len).hi().clone();
    std::array::from_fn(|j| {
        if mass.is_zero() {
            DyadicRational::zero()
        } else {
            (&tail_multiplier(len, j, &delta) * &mass).round(40, Round::Up)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::Builtin;

    fn rat(p: i64, q: i64) -> BigRational {
        BigRational::new(p.into(), q.into())
    }

    #[test]
    fn weights_at_integer_beta_are_exact() {
        let mut t = WeightTable::new(rat(2, 1), 64);
        assert_eq!(t.weight(3), Enclosure::point(DyadicRational::pow2(-6)));
        let mut t = WeightTable::new(rat(4, 3), 64);
        // 2^(-4) exactly at l = 3
        assert_eq!(t.weight(3), Enclosure::point(DyadicRational::pow2(-4)));
        assert!((t.weight(1).to_f64_mid() - 2f64.powf(-4.0 / 3.0)).abs() < 1e-15);
        // 7 * 1024/511 reduces to 1024/73, whose residual numerator collides with l = 1
        let mut t = WeightTable::new(rat(1024, 511), 64);
        for l in [1usize, 7, 1] {
            let expect = 2f64.powf(-(l as f64) * 1024.0 / 511.0);
            assert!(
                (t.weight(l).to_f64_mid() / expect - 1.0).abs() < 1e-15,
                "l={l}"
            );
        }
    }

    #[test]
    fn geometric_two_terms() {
        let profile = vec![(1usize, BigUint::one()), (2, BigUint::one())];
        let m = moments(&weigh(&profile, &rat(2, 1), 64), 64);
        assert_eq!(m.z(), &Enclosure::point("5/16".parse().unwrap()));
        assert_eq!(m.w(), &Enclosure::point("3/8".parse().unwrap()));
        assert_eq!(m.y(), &Enclosure::point("1/2".parse().unwrap()));
    }

    #[test]
    fn multiplier_covers_integer_points() {
        let delta = rat(1, 3);
        for j in 0..5 {
            for len in [0usize, 3, 10, 40] {
                let m = tail_multiplier(len, j, &delta).to_f64();
                for l in len + 1..len + 400 {
                    let v = (l as f64).powi(j as i32) * 2f64.powf(-(l as f64) / 3.0);
                    assert!(v <= m * (1.0 + 1e-9), "j={j} len={len} l={l}");
                }
            }
        }
    }

    #[test]
    fn geometric_tail_dominates_true_tail() {
        // true Z tail for geometric at beta = 2 beyond L is 4^-L / 3
        let c = Census::from_builtin(Builtin::Geometric, 0);
        for len in [1usize, 5, 20] {
            let t = tail_bounds(&c, len, &rat(2, 1));
            let exact = 1.0 / (3.0 * 4f64.powi(len as i32));
            assert!(t[0].to_f64() >= exact);
        }
    }

    proptest::proptest! {
        #[test]
        fn weight_table_matches_f64(p in 1i64..200, q in 1i64..64, len in 0usize..400) {
            let beta = rat(p, q);
            let mut t = WeightTable::new(beta, 80);
            let w = t.weight(len);
            let want = 2f64.powf(-(len as f64) * p as f64 / q as f64);
            // the enclosure is tight relative to the value
            proptest::prop_assert!(w.width().to_f64() <= want * 1e-20 + f64::MIN_POSITIVE);
            proptest::prop_assert!((w.to_f64_mid() - want).abs() <= want * 1e-12);
            // a fresh table agrees with a warmed cache
            let mut fresh = WeightTable::new(rat(p, q), 80);
            proptest::prop_assert_eq!(fresh.weight(len), t.weight(len));
        }
    }
}
