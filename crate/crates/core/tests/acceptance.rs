//! One test per acceptance criterion. Each prints a `criterion N: PASS|FAIL` line
//! before asserting, so `--nocapture` output reads as a checklist.

use std::sync::Arc;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thermoait::complexity::build_table;
use thermoait::ensembles::{enumerate, BitString, Builtin, Census, EnsembleSnapshot, EnsembleSpec};
use thermoait::fixedpoint::{
    beta_prefix, certify, reconstruct_t, semidecide_above, solve_temperature, witness_search,
    MonotoneQuantity, Observable, Oracle, OracleKind, SemiDecision,
};
use thermoait::precision::{bits_prefix_rational, DyadicRational, Temperature};
use thermoait::relations::{
    check_derivative, check_identities, check_monotone, check_positivity, richardson, RelationId,
    Verdict, DEFAULT_STEP_EXPONENT,
};
use thermoait::thermo::{
    divergence_probe, eval_limit, eval_partial, power_sum, ProbeOutcome, Quantity,
    DEFAULT_PROBE_CAP,
};

const BITS: u32 = 64;

fn snap(b: Builtin, maxlen: usize) -> EnsembleSnapshot {
    enumerate(&EnsembleSpec::Builtin(b), 10_000, maxlen).unwrap()
}

fn rat(p: i64, q: i64) -> BigRational {
    BigRational::new(p.into(), q.into())
}

fn report(n: u32, ok: bool, detail: impl AsRef<str>) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    println!("criterion {n}: {verdict} {}", detail.as_ref());
}

fn grid16() -> Vec<Temperature> {
    (1..16).map(|i| Temperature::ratio(i, 16)).collect()
}

/// Rational bracket `[lo, hi]` of width `2^-prec` around `2^(-p/q)`, found
/// by bisection on `x^q` against `2^-p`.
fn root_bracket(p: u32, q: u32, prec: u32) -> (BigRational, BigRational) {
    let target = BigRational::new(BigInt::one(), BigInt::one() << p as usize);
    let (mut lo, mut hi) = (BigRational::zero(), BigRational::one());
    let width = BigRational::new(BigInt::one(), BigInt::one() << prec as usize);
    while &hi - &lo > width {
        let mid = (&lo + &hi) / BigRational::from_integer(2.into());
        if num_traits::pow(mid.clone(), q as usize) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

#[test]
fn criterion_01_kraft_and_omega() {
    let start = Instant::now();
    let sdm4 = Census::from_builtin(Builtin::Sdm4, 40);
    let sdm4_sum = sdm4.kraft_sum(40).to_rational();
    let four_fifths = rat(4, 5);
    let floor = &four_fifths - BigRational::new(BigInt::one(), BigInt::one() << 18usize);
    let sdm4_ok = sdm4_sum >= floor && sdm4_sum <= four_fifths;
    let geometric_ok = (1..=40usize).all(|l| {
        Census::from_builtin(Builtin::Geometric, l).kraft_sum(l)
            == &DyadicRational::one() - &DyadicRational::pow2(-(l as i64))
    });
    let elapsed = start.elapsed();
    let gap = (&four_fifths - &sdm4_sum).to_string();
    let ok = sdm4_ok && geometric_ok && elapsed < Duration::from_secs(5);
    report(
        1,
        ok,
        format!(
            "sdm4 gap 4/5 - sum = {gap} (~{:.3e}), need <= 2^-18; geometric exact: {geometric_ok}; {elapsed:?}",
            0.8 - sdm4.kraft_sum(40).to_f64()
        ),
    );
    assert!(geometric_ok);
    assert!(sdm4_ok, "sdm4 Kraft sum at length 40 is {gap} below 4/5");
    assert!(elapsed < Duration::from_secs(5));
}

#[test]
fn criterion_02_partition_function_oracle() {
    let start = Instant::now();
    let width = DyadicRational::pow2(-20);
    let mut failures = Vec::new();
    for (tn, td) in [(1i64, 4i64), (1, 2), (3, 4)] {
        let t = Temperature::ratio(tn, td);
        // x = 2^(-p/q) with p/q = 1/T
        let (p, q) = (td as u32, tn as u32);
        for (b, maxlen) in [(Builtin::Geometric, 12), (Builtin::Sdm4, 12)] {
            let z = eval_limit(&snap(b, maxlen), &t, BITS).unwrap().z;
            // independent oracle: closed form at both ends of a root bracket,
            // both increasing in x (resp. y) on the relevant range
            let (lo, hi) = match b {
                Builtin::Geometric => {
                    let (xl, xh) = root_bracket(p, q, 200);
                    let f = |x: &BigRational| x / (BigRational::one() - x);
                    (f(&xl), f(&xh))
                }
                _ => {
                    let (yl, yh) = root_bracket(2 * p, q, 200);
                    let f = |y: &BigRational| {
                        let three = BigRational::from_integer(3.into());
                        let two = BigRational::from_integer(2.into());
                        y / (BigRational::one() - two * y - three * y * y)
                    };
                    (f(&yl), f(&yh))
                }
            };
            let contains = z.lo().to_rational() <= lo && hi <= z.hi().to_rational();
            if !contains || z.width() > width {
                failures.push(format!("{} T={t}: {z}", b.id()));
            }
        }
    }
    let elapsed = start.elapsed();
    let ok = failures.is_empty() && elapsed < Duration::from_secs(10);
    report(2, ok, format!("{failures:?} {elapsed:?}"));
    assert!(failures.is_empty(), "{failures:?}");
    assert!(elapsed < Duration::from_secs(10));
}

#[test]
fn criterion_03_identity_suite() {
    let wanted = [
        RelationId::EntropyFreeEnergy,
        RelationId::GibbsS,
        RelationId::GibbsFreeEnergy,
        RelationId::VarianceC,
    ];
    let mut checked = 0;
    let mut failures = Vec::new();
    for b in [Builtin::Geometric, Builtin::Sdm4] {
        let s = snap(b, 20);
        for t in grid16() {
            for k in [Some(1), Some(4), Some(16), None] {
                for r in check_identities(&s, &t, k, BITS).unwrap() {
                    if !wanted.contains(&r.relation) {
                        continue;
                    }
                    checked += 1;
                    if r.verdict != Verdict::Pass {
                        failures.push(format!(
                            "{} {} T={t} k={}: {}",
                            b.id(),
                            r.relation,
                            r.horizon.label(),
                            r.verdict
                        ));
                    }
                }
            }
        }
    }
    let ok = failures.is_empty() && checked == 2 * 15 * 4 * wanted.len();
    report(3, ok, format!("{checked} checks, failures {failures:?}"));
    assert!(ok, "{failures:?}");
}

#[test]
fn criterion_04_derivative_checks() {
    let h = DyadicRational::pow2(DEFAULT_STEP_EXPONENT);
    let mut failures = Vec::new();
    let mut resolved_ratios = 0;
    for b in [Builtin::Geometric, Builtin::Sdm4] {
        let s = snap(b, 20);
        for t in [
            Temperature::ratio(3, 8),
            Temperature::ratio(1, 2),
            Temperature::ratio(5, 8),
        ] {
            for k in [1u64, 4, 16] {
                for q in [Quantity::F, Quantity::E, Quantity::S] {
                    let d = check_derivative(&s, q, &t, k, &h, BITS).unwrap();
                    if d.verdict != Verdict::Pass {
                        failures.push(format!(
                            "{} {} T={t} k={k}: {}",
                            b.id(),
                            d.relation,
                            d.verdict
                        ));
                    }
                    let r = richardson(&s, q, &t, k, &h, BITS).unwrap();
                    match r.verdict {
                        Verdict::Pass => resolved_ratios += 1,
                        Verdict::Unresolved => {}
                        Verdict::Fail => failures.push(format!(
                            "{} richardson {} T={t} k={k}: {}",
                            b.id(),
                            q.name(),
                            r.detail
                        )),
                    }
                }
            }
        }
    }
    let ok = failures.is_empty();
    report(
        4,
        ok,
        format!("{resolved_ratios} Richardson ratios resolved in [5/2, 6]; failures {failures:?}"),
    );
    assert!(ok, "{failures:?}");
}

#[test]
fn criterion_05_positivity_and_monotonicity() {
    let grid = grid16();
    let mut failures = Vec::new();
    for b in [
        Builtin::Geometric,
        Builtin::Sdm4,
        Builtin::Literal,
        Builtin::GammaLiteral,
    ] {
        let s = snap(b, 20);
        for r in check_positivity(&s, &grid, None, BITS).unwrap() {
            if r.verdict != Verdict::Pass {
                failures.push(format!("{} {}", b.id(), r.detail));
            }
        }
        for q in [Quantity::Z, Quantity::F, Quantity::E, Quantity::S] {
            let r = check_monotone(&s, q, &grid, None, BITS).unwrap();
            if r.verdict != Verdict::Pass {
                failures.push(format!("{} {}: {}", b.id(), q.name(), r.detail));
            }
        }
    }
    let ok = failures.is_empty();
    report(5, ok, format!("failures {failures:?}"));
    assert!(ok, "{failures:?}");
}

#[test]
fn criterion_06_divergence_above_one() {
    let start = Instant::now();
    let census = Census::from_builtin(Builtin::GammaLiteral, 0);
    let ten = BigRational::from_integer(10.into());
    let hot = divergence_probe(
        &census,
        &Temperature::ratio(11, 10),
        &ten,
        DEFAULT_PROBE_CAP,
        BITS,
    )
    .unwrap();
    let cold = divergence_probe(
        &census,
        &Temperature::ratio(9, 10),
        &ten,
        DEFAULT_PROBE_CAP,
        BITS,
    )
    .unwrap();
    let elapsed = start.elapsed();
    // regression pin: payload length 119 is the first to push the sum past 10
    let hot_ok = matches!(hot, ProbeOutcome::Exceeded { length: 132, .. });
    let cold_ok = match &cold {
        ProbeOutcome::CapReached { limit: Some(l), .. } => l.hi().to_rational() < ten,
        _ => false,
    };
    let ok = hot_ok && cold_ok && elapsed < Duration::from_secs(5);
    report(
        6,
        ok,
        format!("T=1.1: {hot:?}; T=0.9: {cold:?}; {elapsed:?}"),
    );
    assert!(ok);
}

#[test]
fn criterion_07_solver_round_trip() {
    let s = Arc::new(snap(Builtin::Geometric, 12));
    let tol = DyadicRational::pow2(-30);
    let mut failures = Vec::new();
    let mut slowest = Duration::ZERO;
    for o in Observable::ALL {
        let q = MonotoneQuantity::new(s.clone(), o);
        for t in [
            Temperature::ratio(3, 8),
            Temperature::ratio(1, 2),
            Temperature::ratio(5, 8),
        ] {
            let value = q.limit(&t, 2 * BITS).unwrap();
            let start = Instant::now();
            let found = solve_temperature(&q, &value, &tol, BITS).unwrap();
            let elapsed = start.elapsed();
            slowest = slowest.max(elapsed);
            if !found.contains_rational(t.value())
                || found.width() > tol
                || elapsed >= Duration::from_secs(1)
            {
                failures.push(format!("{o} T={t}: {found} in {elapsed:?}"));
            }
        }
    }
    let ok = failures.is_empty();
    report(7, ok, format!("slowest {slowest:?}; failures {failures:?}"));
    assert!(ok, "{failures:?}");
}

#[test]
fn criterion_08_fixed_point_machinery() {
    let geometric = Arc::new(snap(Builtin::Geometric, 12));
    let z = |t: &Temperature| {
        certify(
            MonotoneQuantity::new(geometric.clone(), Observable::Z),
            t,
            BITS,
        )
        .unwrap()
    };

    // witness: recheck the length bound independently on a fresh enumeration
    let half = Temperature::ratio(1, 2);
    let handle = z(&half);
    let upper = Oracle::ClosedForm
        .stream(&handle, OracleKind::Upper, BITS)
        .unwrap();
    let w = witness_search(
        &handle,
        &bits_prefix_rational(half.value(), 20),
        &upper,
        BITS,
    )
    .unwrap();
    let through = 11 * w.k_e;
    let listing = snap(Builtin::Geometric, through as usize);
    let threshold = w.length_threshold.to_rational();
    let bound_holds = listing.programs()[w.k_e as usize..through as usize]
        .iter()
        .all(|r| BigRational::from_integer((r.program.len() as i64).into()) > threshold);
    let witness_ok = bound_holds && listing.programs().len() as u64 >= through;

    // semidecision: r <= T must never be answered yes
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut adversarial = 0;
    let mut unsound = Vec::new();
    for t in [
        Temperature::ratio(1, 2),
        Temperature::ratio(3, 8),
        Temperature::ratio(11, 16),
    ] {
        let handle = z(&t);
        let upper = Oracle::ClosedForm
            .stream(&handle, OracleKind::Upper, BITS)
            .unwrap();
        let td = t.as_dyadic().unwrap();
        let mut rs: Vec<DyadicRational> = vec![td.clone()];
        rs.extend(
            (1..=20)
                .map(|j| &td - &DyadicRational::pow2(-j))
                .filter(|r| r.is_positive()),
        );
        while rs.len() < 34 {
            let m: i64 = rng.gen_range(1..1 << 24);
            let r = DyadicRational::new(m.into(), -24);
            if r <= td {
                rs.push(r);
            }
        }
        for r in rs {
            adversarial += 1;
            if let SemiDecision::Yes { .. } =
                semidecide_above(&handle, &r, &upper, 64, BITS).unwrap()
            {
                unsound.push(format!("T={t} r={r}"));
            }
        }
    }
    let semidecision_ok = unsound.is_empty() && adversarial >= 100;

    // reconstruction: 50 random (T, u, n <= 24)
    let mut violations = Vec::new();
    for _ in 0..50 {
        let t = Temperature::from_dyadic(&DyadicRational::new(rng.gen_range(16..=112).into(), -7))
            .unwrap();
        let td = t.as_dyadic().unwrap();
        // u strictly between T and 1
        let room = &DyadicRational::one() - &td;
        let u = &td + &(&room.shl(-3) * &DyadicRational::from_int(rng.gen_range(1..8)));
        let u = Temperature::from_dyadic(&u).unwrap();
        let n: u32 = rng.gen_range(1..=24);
        let handle = z(&t);
        let a = Oracle::ClosedForm
            .stream(&handle, OracleKind::Temperature, BITS)
            .unwrap();
        let b = Oracle::ClosedForm
            .stream(&handle, OracleKind::Lower, BITS)
            .unwrap();
        let prefix = beta_prefix(&handle, &u, n, BITS).unwrap();
        let cert = handle.certificate();
        let bound =
            DyadicRational::pow2(cert.a_lower as i64 + cert.c as i64 - n as i64).to_rational();
        match reconstruct_t(&handle, &u, n, &prefix, &a, &b, BITS) {
            Ok(rep) => {
                let err = (rep.candidate.to_rational() - t.value()).abs();
                if err >= bound {
                    violations.push(format!("T={t} u={u} n={n}: candidate {}", rep.candidate));
                }
            }
            Err(e) => violations.push(format!("T={t} u={u} n={n}: {e}")),
        }
    }
    let reconstruction_ok = violations.is_empty();

    let ok = witness_ok && semidecision_ok && reconstruction_ok;
    report(
        8,
        ok,
        format!(
            "k_e={} checked through {through}; {adversarial} adversarial r, unsound {unsound:?}; reconstruction violations {violations:?}",
            w.k_e
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_09_power_sum_identity() {
    let mut mismatches = Vec::new();
    let mut checked = 0;
    for b in Builtin::ALL {
        let s = snap(b, 20);
        for t in [Temperature::ratio(1, 2), Temperature::ratio(3, 4)] {
            for n in [2u32, 3] {
                for k in 1..=16u64 {
                    let lhs = power_sum(&s, &t, n, k, BITS).unwrap();
                    let rhs = eval_partial(&s, &t.divided_by(n), k, BITS).unwrap().z;
                    checked += 1;
                    if lhs != rhs {
                        mismatches.push(format!("{} T={t} n={n} k={k}: {lhs} vs {rhs}", b.id()));
                    }
                }
            }
        }
    }
    let ok = mismatches.is_empty();
    report(
        9,
        ok,
        format!("{checked} exact comparisons; mismatches {mismatches:?}"),
    );
    assert!(ok, "{mismatches:?}");
}

#[test]
fn criterion_10_complexity_closed_forms() {
    let literal = build_table(&snap(Builtin::Literal, 21));
    let gamma = build_table(&snap(Builtin::GammaLiteral, 17));
    let mut failures = Vec::new();
    for len in 0..=10usize {
        for x in BitString::all_of_length(len) {
            if literal.h(&x) != Some(2 * len + 1) {
                failures.push(format!("literal {x}: {:?}", literal.h(&x)));
            }
            if len >= 1 {
                let log = (usize::BITS - 1 - len.leading_zeros()) as usize;
                if gamma.h(&x) != Some(len + 2 * log + 1) {
                    failures.push(format!("gamma_literal {x}: {:?}", gamma.h(&x)));
                }
            }
        }
    }
    let alpha_6 = bits_prefix_rational(&rat(5, 8), 6);
    let alpha_ok = alpha_6.to_string() == "101000";
    let ok = failures.is_empty() && alpha_ok;
    report(
        10,
        ok,
        format!(
            "alpha_6 = {alpha_6}; failures {:?}",
            &failures[..failures.len().min(5)]
        ),
    );
    assert!(ok);
}
