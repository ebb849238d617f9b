//! Verification of noninterference properties for PEPA models.
//!
//! The pipeline is parse, derive, analyse: [`parser`] turns source text into a
//! [`model::ModelEnv`], [`semantics`] builds the derivation graph, [`ctmc`]
//! reads the underlying Markov chain off it, and [`equivalence`] computes
//! rate-based equivalences over one or two graphs. [`security`] builds the
//! noninterference checks on top, and [`oracle`] holds brute-force reference
//! implementations and random model generators used for testing.

pub mod ctmc;
pub mod equivalence;
pub mod error;
pub mod model;
pub mod oracle;
pub mod parser;
pub mod rate;
pub mod security;
pub mod semantics;

pub use error::{Error, Result};
pub use model::{Action, ActionSet, ModelEnv, Term};
pub use rate::{Rate, Rational};
