//! Secret protection policies for labeled Petri nets.
//!
//! Secret places carry a requirement; protecting an event grants clearance
//! each time (or the first time) it occurs. A policy is valid when every
//! reachable marking that puts a token on a secret place was reached with
//! enough clearance. The crate checks validity by reduction to coverability,
//! searches for cheapest valid policies, and provides the instance
//! transformations and file format around them.

pub mod cli;
pub mod coverability;
pub mod error;
pub mod format;
pub mod generate;
pub mod model;
pub mod net;
pub mod search;
pub mod transforms;
pub mod validity;

pub use error::Error;
pub use model::{Cost, Policy, ProtectableEvent, Semantics, SppInstance};
pub use net::{FiringSequence, LabeledPetriNet, Marking, PlaceId, TransitionId};
