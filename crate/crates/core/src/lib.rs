pub mod cli;
pub mod complexity;
pub mod ensembles;
pub mod error;
pub mod fixedpoint;
pub mod precision;
pub mod relations;
pub mod thermo;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/overview.md")]
    mod overview {}
    #[doc = include_str!("../../../book/src/ensembles.md")]
    mod ensembles {}
    #[doc = include_str!("../../../book/src/thermo.md")]
    mod thermo {}
    #[doc = include_str!("../../../book/src/relations.md")]
    mod relations {}
    #[doc = include_str!("../../../book/src/fixedpoint.md")]
    mod fixedpoint {}
    #[doc = include_str!("../../../book/src/complexity.md")]
    mod complexity {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
