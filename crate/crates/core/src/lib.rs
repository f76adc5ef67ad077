//! Turn-based probabilistic timed multi-player games.
//!
//! The crate is organised as a pipeline:
//!
//! * [`dsl`] parses the textual model format (and generates the two bundled
//!   case studies) into a [`model::Tptg`];
//! * [`digital`] builds the finite digital-clocks semantics of a model as an
//!   explicit [`game::Tsg`];
//! * [`solver`] computes optimal coalition values for reachability
//!   probability and expected cumulated price, and synthesizes memoryless
//!   deterministic strategies;
//! * [`lab`] holds the digitization operators on dense-time paths together
//!   with a path simulator used to cross-check solver output.

pub mod check;
pub mod diag;
pub mod digital;
pub mod dsl;
pub mod error;
pub mod game;
pub mod lab;
pub mod model;
pub mod solver;

pub use diag::{Diagnostic, Severity};
pub use error::{Error, Result};
