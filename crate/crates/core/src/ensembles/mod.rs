//! Prefix-free program ensembles: builtin machines, their enumeration and snapshot files.

mod bitstring;
mod builtins;
mod census;
mod machines;
mod snapshot;

pub use bitstring::BitString;
pub use builtins::{kraft_sum, Builtin};
pub use census::Census;
pub use machines::{
    gamma_code, gamma_literal_length, run_gamma_literal, run_geometric, run_literal, run_sdm4,
    RunOutcome,
};
pub use snapshot::{
    census_tail_mass, enumerate, enumerate_with, load_snapshot, save_snapshot, EnsembleSnapshot,
    EnsembleSpec, ProgramRecord,
};
