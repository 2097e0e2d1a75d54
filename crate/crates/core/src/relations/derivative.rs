use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};

use super::{escalate, within, RelationId, RelationReport, Verdict};
use crate::ensembles::{Census, EnsembleSnapshot};
use crate::error::{Error, Result};
use crate::precision::{ln2, DyadicRational, Enclosure, Round, Temperature};
use crate::thermo::{eval_partial_census, length_profile, moments, weigh, Horizon, Quantity};

/// Step `h = 2^DEFAULT_STEP_EXPONENT` used by the relation suite.
pub const DEFAULT_STEP_EXPONENT: i64 = -10;

/// Largest accepted step, `2^-6`.
const MAX_STEP_EXPONENT: i64 = -6;

pub(crate) fn step_fits(t: &Temperature, h: &DyadicRational) -> bool {
    let h = h.to_rational();
    (t.value() - &h).is_positive() && t.value() + &h < BigRational::one()
}

fn check_step(q: Quantity, t: &Temperature, h: &DyadicRational) -> Result<RelationId> {
    let id = RelationId::derivative_of(q).ok_or_else(|| {
        Error::Precondition(format!("derivative checks cover F, E, S; got {}", q.name()))
    })?;
    if !h.is_positive() || h > &DyadicRational::pow2(MAX_STEP_EXPONENT) {
        return Err(Error::Precondition(format!(
            "step {h} must lie in (0, 2^{MAX_STEP_EXPONENT}]"
        )));
    }
    if !step_fits(t, h) {
        return Err(Error::Precondition(format!(
            "[T - h, T + h] must lie inside (0, 1); T = {t}, h = {h}"
        )));
    }
    Ok(id)
}

/// True when the first `k` programs share one length; then `F` is linear and
/// `E`, `S` are constant in `T`.
fn single_length_class(census: &Census, k: u64) -> Result<bool> {
    Ok(length_profile(census, k)?.len() == 1)
}

fn int(v: i64) -> BigInt {
    BigInt::from(v)
}

/// Certified `sup |q'''| / 6` over `[T - h, T + h]` for `q` in F, E, S of the
/// first `k` programs.
///
/// With `lambda = ln 2`, `beta = 1/T` and `kappa_j` the cumulants of the
/// length distribution `p_i = 2^(-|p_i|/T) / Z_k`:
///
/// ```text
/// F''' = lambda (3 beta^4 kappa_2 - lambda beta^5 kappa_3)
/// E''' = lambda (6 beta^4 kappa_2 - 6 lambda beta^5 kappa_3 + lambda^2 beta^6 kappa_4)
/// S''' = lambda (12 beta^5 kappa_2 - 8 lambda beta^6 kappa_3 + lambda^2 beta^7 kappa_4)
/// ```
///
/// Each term weight is enclosed over the whole interval, and the central
/// sums are evaluated on those enclosures, so the result bounds every point.
pub fn third_derivative_bound(
    census: &Census,
    q: Quantity,
    t: &Temperature,
    k: u64,
    h: &DyadicRational,
    bits: u32,
) -> Result<DyadicRational> {
    RelationId::derivative_of(q).ok_or_else(|| {
        Error::Precondition(format!("no third-derivative bound for {}", q.name()))
    })?;
    let wp = bits + 16;
    let hr = h.to_rational();
    let beta_small = (t.value() + &hr).recip();
    let beta_large = (t.value() - &hr).recip();
    let profile = length_profile(census, k)?;
    let weighted = weigh(&profile, &beta_small, wp).hull(&weigh(&profile, &beta_large, wp));
    let m = moments(&weighted, wp);
    let z = m.z();
    let mu = |j: usize| m.central[j].div(z, wp);
    let (d, mu2, mu3, mu4) = (mu(1)?, mu(2)?, mu(3)?, mu(4)?);
    let r = |e: Enclosure| e.round(wp);

    let d2 = r(d.sqr());
    let k2 = r(&mu2 - &d2);
    let k3 = r(&(&mu3 - &r(mu2.mul(&d)).mul_int(&int(3))) + &r(d2.mul(&d)).mul_int(&int(2)));
    let k4 = r(
        &(&(&(&mu4 - &r(mu3.mul(&d)).mul_int(&int(4))) - &r(mu2.sqr()).mul_int(&int(3)))
            + &r(mu2.mul(&d2)).mul_int(&int(12)))
            - &r(d2.sqr()).mul_int(&int(6)),
    );

    let beta = Enclosure::new(
        DyadicRational::from_rational_rounded(&beta_small, wp, Round::Down),
        DyadicRational::from_rational_rounded(&beta_large, wp, Round::Up),
    );
    let lam = ln2(wp);
    // sum of coeff * lambda^a * beta^b * kappa
    let term = |coeff: i64, a: u32, b: u32, kappa: &Enclosure| -> Enclosure {
        r(r(lam.powi(a).mul(&beta.powi(b))).mul(kappa)).mul_int(&int(coeff))
    };
    let third = match q {
        Quantity::F => &term(3, 1, 4, &k2) - &term(1, 2, 5, &k3),
        Quantity::E => &(&term(6, 1, 4, &k2) - &term(6, 2, 5, &k3)) + &term(1, 3, 6, &k4),
        _ => &(&term(12, 1, 5, &k2) - &term(8, 2, 6, &k3)) + &term(1, 3, 7, &k4),
    };
    Ok(third
        .mag()
        .div_round(&DyadicRational::from_int(6), 24, Round::Up))
}

/// Central difference of `q` at step `h` minus its analytic derivative.
fn residual_at(
    census: &Census,
    q: Quantity,
    t: &Temperature,
    k: u64,
    h: &DyadicRational,
    bits: u32,
) -> Result<Enclosure> {
    let wp = bits + 8;
    let hr = h.to_rational();
    let plus = eval_partial_census(census, &Temperature::new(t.value() + &hr)?, k, bits)?;
    let minus = eval_partial_census(census, &Temperature::new(t.value() - &hr)?, k, bits)?;
    let here = eval_partial_census(census, t, k, bits)?;
    let inv_two_h = (hr * BigRational::from_integer(2.into())).recip();
    let diff = (q.of(&plus) - q.of(&minus)).mul_rational(&inv_two_h, wp);
    let analytic = match q {
        Quantity::F => -&here.s,
        Quantity::E => here.c.clone(),
        _ => here.c.mul_rational(&t.inverse(), wp),
    };
    Ok((&diff - &analytic).round(wp))
}

/// Central-difference check of `F' = -S`, `E' = C` or `S' = C/T` for the
/// first `k` programs.
///
/// Passes when `|residual| <= K h^2` is certified, `K` from
/// [`third_derivative_bound`]. When all `k` programs share one length the
/// third derivative vanishes and the residual must contain zero.
pub fn check_derivative(
    snapshot: &EnsembleSnapshot,
    q: Quantity,
    t: &Temperature,
    k: u64,
    h: &DyadicRational,
    bits: u32,
) -> Result<RelationReport> {
    let id = check_step(q, t, h)?;
    let census = snapshot.census();
    let single = single_length_class(census, k)?;
    escalate(bits, |b| {
        let residual = residual_at(census, q, t, k, h, b)?;
        let (verdict, detail) = if single {
            let v = if residual.contains_zero() {
                Verdict::Pass
            } else {
                Verdict::Fail
            };
            (v, format!("h={h} K=0 (single length class)"))
        } else {
            let big_k = third_derivative_bound(census, q, t, k, h, b)?;
            let bound = (&big_k * &(h * h)).round(24, Round::Up);
            (
                within(&residual, &bound),
                format!("h={h} K={big_k} bound={bound}"),
            )
        };
        Ok(RelationReport {
            relation: id,
            temperature: Some(t.clone()),
            horizon: Horizon::Partial { k },
            residual,
            verdict,
            detail,
            precision_bits: b,
        })
    })
}

/// Ratio of central-difference residuals at steps `h` and `h/2`.
///
/// The leading error term is `q''' h^2 / 6`, so the ratio tends to 4; passes
/// when the ratio is certified inside `[5/2, 6]`. Unresolved when the residual
/// at `h/2` cannot be separated from zero.
pub fn richardson(
    snapshot: &EnsembleSnapshot,
    q: Quantity,
    t: &Temperature,
    k: u64,
    h: &DyadicRational,
    bits: u32,
) -> Result<RelationReport> {
    check_step(q, t, h)?;
    let census = snapshot.census();
    let half = h.shl(-1);
    let report = |residual: Enclosure, verdict: Verdict, detail: String, b: u32| RelationReport {
        relation: RelationId::Richardson,
        temperature: Some(t.clone()),
        horizon: Horizon::Partial { k },
        residual,
        verdict,
        detail: format!("{} {detail}", q.name()),
        precision_bits: b,
    };
    if single_length_class(census, k)? {
        return Ok(report(
            Enclosure::zero(),
            Verdict::Unresolved,
            "third derivative vanishes".into(),
            bits,
        ));
    }
    let band = Enclosure::new("5/2".parse().expect("literal"), DyadicRational::from_int(6));
    escalate(bits, |b| {
        let r1 = residual_at(census, q, t, k, h, b)?;
        let r2 = residual_at(census, q, t, k, &half, b)?;
        if r2.contains_zero() {
            return Ok(report(
                r2,
                Verdict::Unresolved,
                "residual at h/2 contains zero".into(),
                b,
            ));
        }
        let ratio = r1.div(&r2, b)?;
        let verdict = if band.encloses(&ratio) {
            Verdict::Pass
        } else if !band.overlaps(&ratio) {
            Verdict::Fail
        } else {
            Verdict::Unresolved
        };
        Ok(report(ratio, verdict, format!("h={h}"), b))
    })
}
