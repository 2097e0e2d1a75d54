//! Exact dyadic numbers, outward-rounded enclosures and certified elementary functions.

mod dyadic;
mod elementary;
mod enclosure;
mod expansion;
mod temperature;

pub use dyadic::{parse_rational, DyadicRational, Round};
pub use elementary::{
    ceil_log2_upper, ceil_neg_log2_lower, exp2_enclosure, floor_log2, ln2, ln_enclosure,
    log2_enclosure, pow2_rational,
};
pub use enclosure::{Enclosure, DECIMAL_DIGITS};
pub use expansion::{bits_prefix, bits_prefix_enclosure, bits_prefix_rational, prefix_value};
pub use temperature::{parse_any_rational, Temperature};

/// Working precision used when callers do not choose one.
pub const DEFAULT_PRECISION: u32 = 64;
