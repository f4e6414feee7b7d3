//! Discrimination of symmetric pure states with global and online strategies.
//!
//! The crate covers binary minimum-error and zero-error identification and
//! zero-error identification of three symmetric states with an arbitrary
//! complex overlap. Every strategy is available in two forms: the closed-form
//! optimum over collective measurements on all copies ([`bounds`]) and the
//! online, copy-by-copy protocol driven by Bayesian updating ([`online`]).
//!
//! - [`ensemble`]: Gram matrices, spectra and canonical state vectors.
//! - [`povm`]: explicit measurement constructions and their certificates.
//! - [`bounds`]: global figures of merit and SDP feasibility checks.
//! - [`online`]: exact evaluation and seeded simulation of online chains.
//! - [`search`]: numerical search over online strategies for complex overlaps.

pub mod bounds;
pub mod ensemble;
mod error;
pub mod linalg;
pub mod online;
pub mod povm;
pub mod search;

pub use bounds::{
    binary_zero_error_q, helstrom_success_n, symmetric_zero_error_q, verify_sdp_feasibility,
    DiscriminationBound, Regime,
};
pub use ensemble::{
    build_gram, canonical_states, effective_overlap_product, is_physical, symmetric_eigenvalues,
    CanonicalStates, GramMatrix, Overlap, SymmetricEnsemble,
};
pub use error::{Error, Result};
pub use povm::{
    binary_unambiguous, born_outcome_distribution, exclusion_povm, helstrom_binary,
    identify_exclude_povm, three_state_unambiguous, Effect, OutcomeLabel, Povm, PovmKind,
};
