use super::evaluation::{ThermoEvaluation, QUANTITY_NAMES};
use crate::error::{Error, Result};

/// One row per (evaluation, quantity): `T_lo,T_hi,quantity,k,value_lo,value_hi,tail_bound`.
///
/// Values are exact `m*2^e` text; `tail_bound` is the largest magnitude in the
/// quantity's tail enclosure (`0` for partial sums).
pub fn evaluations_csv(evals: &[ThermoEvaluation], bits: u32) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Domain(format!("csv: {e}"));
    w.write_record([
        "T_lo",
        "T_hi",
        "quantity",
        "k",
        "value_lo",
        "value_hi",
        "tail_bound",
    ])
    .map_err(csv_err)?;
    for ev in evals {
        let t = ev.temperature.enclosure(bits);
        let k = ev.horizon.label();
        for ((name, v), tail) in QUANTITY_NAMES.iter().zip(ev.values()).zip(ev.tail.iter()) {
            w.write_record([
                t.lo().to_exact_string(),
                t.hi().to_exact_string(),
                name.to_string(),
                k.clone(),
                v.lo().to_exact_string(),
                v.hi().to_exact_string(),
                tail.mag().to_exact_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Domain(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn evaluations_json(evals: &[ThermoEvaluation]) -> String {
    serde_json::to_string_pretty(evals).expect("evaluations serialize")
}
