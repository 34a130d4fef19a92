pub mod action;
pub mod analysis;
pub mod ball;
pub mod error;
pub mod experiments;
pub mod field;
pub mod linalg;
pub mod numeric;
pub mod orbit;
pub mod output;
pub mod poly;
pub mod report;
pub mod roots;
pub mod slice;
pub mod spec_file;

pub use action::{build_action, Action, ConjugacyMap, IrreducibilityReport};
pub use error::{Error, Result};
pub use field::{EmbeddingVector, FieldElement, NumberField};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/overview.md")]
    mod overview {}
    #[doc = include_str!("../../../book/src/fields.md")]
    mod fields {}
    #[doc = include_str!("../../../book/src/actions.md")]
    mod actions {}
    #[doc = include_str!("../../../book/src/slices.md")]
    mod slices {}
    #[doc = include_str!("../../../book/src/orbits.md")]
    mod orbits {}
    #[doc = include_str!("../../../book/src/analysis.md")]
    mod analysis {}
    #[doc = include_str!("../../../book/src/octic.md")]
    mod octic {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
