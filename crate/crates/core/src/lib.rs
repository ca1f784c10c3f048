//! Promise CSP templates over finite relational structures.
//!
//! The crate covers structural analysis of templates (symmetry,
//! functionality, balancedness, super-connectedness), exact BLP, AIP and
//! BLP+AIP relaxations, explicit and symmetry-factored polymorphism
//! search, and the tractable-versus-NP-hard classifier for symmetric `A`
//! and functional `B` built on the free affine structure `A_m`.

pub mod analysis;
pub mod catalog;
pub mod classifier;
pub mod derivation;
pub mod polymorphisms;
pub mod error;
pub mod instances;
pub mod relaxations;
pub mod search;
pub mod structure;

pub use error::{Error, Result};
pub use search::{all_homomorphisms, find_homomorphism, SearchConfig};
pub use structure::{
    connected_components, disjoint_union, is_homomorphism, largest_symmetric_substructure, power, product,
    Component, Homomorphism, Relation, Signature, Structure, Tuple,
};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/structures.md")]
    mod structures {}
    #[doc = include_str!("../../../book/src/analysis.md")]
    mod analysis {}
    #[doc = include_str!("../../../book/src/relaxations.md")]
    mod relaxations {}
    #[doc = include_str!("../../../book/src/polymorphisms.md")]
    mod polymorphisms {}
    #[doc = include_str!("../../../book/src/classifier.md")]
    mod classifier {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
