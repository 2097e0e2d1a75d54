use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use thermoait::complexity::build_table;
use thermoait::ensembles::{enumerate, BitString, Builtin, EnsembleSnapshot, EnsembleSpec};
use thermoait::fixedpoint::{solve_temperature, MonotoneQuantity, Observable};
use thermoait::precision::{
    bits_prefix_rational, prefix_value, DyadicRational, Enclosure, Temperature,
};
use thermoait::thermo::{eval_limit, eval_partial};

fn rat(p: i64, q: i64) -> BigRational {
    BigRational::new(p.into(), q.into())
}

fn snap(b: Builtin, maxlen: usize) -> EnsembleSnapshot {
    enumerate(&EnsembleSpec::Builtin(b), 10_000, maxlen).unwrap()
}

/// `k` folded into `1..=domain size`.
fn within_domain(s: &EnsembleSnapshot, k: u64) -> u64 {
    let n: u64 = s.domain_size().try_into().unwrap();
    1 + (k - 1) % n
}

fn builtin() -> impl Strategy<Value = Builtin> {
    prop::sample::select(Builtin::ALL.to_vec())
}

fn small_dyadic() -> impl Strategy<Value = DyadicRational> {
    (-1000i64..1000, -12i64..4).prop_map(|(m, e)| DyadicRational::new(BigInt::from(m), e))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn enclosure_arithmetic_contains_exact(a in small_dyadic(), b in small_dyadic(), w in 0i64..6) {
        let ea = Enclosure::new(a.clone(), &a + &DyadicRational::pow2(-w));
        let eb = Enclosure::point(b.clone());
        let (ra, rb) = (a.to_rational(), b.to_rational());
        prop_assert!((&ea + &eb).contains_rational(&(&ra + &rb)));
        prop_assert!((&ea - &eb).contains_rational(&(&ra - &rb)));
        prop_assert!(ea.mul(&eb).contains_rational(&(&ra * &rb)));
        if !b.is_zero() {
            prop_assert!(ea.div(&eb, 40).unwrap().contains_rational(&(&ra / &rb)));
        }
    }

    #[test]
    fn binary_prefix_brackets_the_value(p in 0i64..10_000, q in 1i64..10_000, n in 0usize..40) {
        let alpha = rat(p % q, q);
        let bits = bits_prefix_rational(&alpha, n);
        prop_assert_eq!(bits.len(), n);
        let lo = prefix_value(&bits).to_rational();
        prop_assert!(lo <= alpha);
        prop_assert!(alpha < lo + DyadicRational::pow2(-(n as i64)).to_rational());
    }

    #[test]
    fn partial_sums_increase_in_k_and_t(b in builtin(), i in 1i64..15, k in 1u64..40) {
        let s = snap(b, 12);
        let k = within_domain(&s, k);
        let t = Temperature::ratio(i, 16);
        let t2 = Temperature::ratio(i + 1, 16);
        let z = eval_partial(&s, &t, k, 64).unwrap().z;
        let z_next = eval_partial(&s, &t, within_domain(&s, k + 1), 64).unwrap().z;
        let z_hot = eval_partial(&s, &t2, k, 64).unwrap().z;
        prop_assert!(z.lo() <= z_next.hi() || within_domain(&s, k + 1) == 1);
        prop_assert!(z.lo() < z_hot.hi());
        let lim = eval_limit(&s, &t, 64).unwrap().z;
        prop_assert!(z.lo() <= lim.hi());
    }

    #[test]
    fn entropy_and_heat_are_nonnegative(b in builtin(), i in 1i64..16, k in 1u64..64) {
        let s = snap(b, 12);
        let ev = eval_partial(&s, &Temperature::ratio(i, 16), within_domain(&s, k), 64).unwrap();
        prop_assert!(ev.s.hi() >= &DyadicRational::zero());
        prop_assert!(ev.c.hi() >= &DyadicRational::zero());
        // E is a mean length, so it lies between the shortest and longest lengths
        prop_assert!(ev.e.hi() >= &DyadicRational::one());
    }

    #[test]
    fn snapshot_text_round_trips(b in builtin(), maxlen in 1usize..10) {
        let s = snap(b, maxlen);
        let back = EnsembleSnapshot::from_text(&s.to_text()).unwrap();
        prop_assert_eq!(&back, &s);
        prop_assert!(back.verify_replay().is_ok());
        prop_assert!(s.program_kraft_sum() <= DyadicRational::one());
    }

    #[test]
    fn literal_complexity_is_twice_length_plus_one(bits in prop::collection::vec(any::<bool>(), 0..7)) {
        let table = build_table(&snap(Builtin::Literal, 13));
        let x = BitString::from_bits(bits);
        prop_assert_eq!(table.h(&x), Some(2 * x.len() + 1));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn solve_inverts_the_limit(i in 3i64..62, obs in prop::sample::select(Observable::ALL.to_vec())) {
        let t = Temperature::ratio(i, 64);
        let q = MonotoneQuantity::new(Arc::new(snap(Builtin::Geometric, 12)), obs);
        let value = q.limit(&t, 96).unwrap();
        let tol = DyadicRational::pow2(-24);
        let found = solve_temperature(&q, &value, &tol, 64).unwrap();
        prop_assert!(found.contains_rational(t.value()), "{} not in {}", t, found);
        prop_assert!(found.width() <= tol);
    }
}
