//! Partition function and derived quantities over program-length ensembles.
//!
//! Every quantity depends on the programs only through their lengths, so all
//! sums run over the per-length census: `sum_l census(l) l^j 2^(-l/T)`.

mod closed_form;
mod emit;
mod evaluation;
mod moments;
mod probe;

pub use closed_form::closed_form;
pub use emit::{evaluations_csv, evaluations_json};
pub(crate) use evaluation::eval_partial_with;
pub use evaluation::{
    default_grid, eval_limit, eval_limit_census, eval_limit_to_width, eval_partial,
    eval_partial_census, length_profile, parse_grid, power_sum, sweep, Horizon, Quantity,
    ThermoEvaluation, MAX_EXTENDED_TEMPERATURE, MAX_TRUNCATION, QUANTITY_NAMES,
};
pub(crate) use moments::{moments, tail_bounds, weigh, WeightTable};
pub use moments::{Moments, MOMENT_ORDERS};
pub use probe::{divergence_probe, ProbeOutcome, DEFAULT_PROBE_CAP};
