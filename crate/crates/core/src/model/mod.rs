//! Turn-based probabilistic timed games (the syntactic model).

mod clock;
mod compose;
pub mod random;
pub(crate) mod tptg;

pub use clock::{satisfies, Atom, ClockConstraint, ClockId, ClockValuation, Relation};
pub use compose::{compose, compose_reachable, compose_reachable_with, Alphabets};
pub(crate) use compose::normalize as normalize_branches;
pub use tptg::{Branch, Edge, LocId, LocOrigin, Location, TargetLabel, Tptg};
