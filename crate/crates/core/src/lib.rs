//! Operating-room scheduling with ward and ICU bed management.
//!
//! The crate is `no_std` (it needs `alloc`) and contains everything that does
//! not touch the outside world: the instance/schedule model, the constraint
//! verifier and efficiency metrics, an anytime lexicographic local-search
//! solver, the rescheduler for postponed surgeries, the scenario generator and
//! exhaustive oracles for tiny instances. Wall-clock time is injected through
//! [`Clock`], so the same code runs under an iteration budget in tests and
//! under a real deadline in the `orsched` binary.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

mod cost;
mod engine;
pub mod error;
pub mod generator;
pub mod model;
pub mod oracle;
pub mod reschedule;
pub mod solver;
pub mod stays;
pub mod validate;
pub mod verifier;

pub use error::Error;
pub use model::{
    Assignment, BedAvailability, Day, Instance, MssSlot, OrId, PriorityCensus, Registration, RegistrationId, Schedule,
    SessionCapacity, SessionId, WardId,
};
pub use reschedule::{RescheduleObjective, RescheduleOutcome, RescheduleRequest};
pub use solver::{Clock, IncumbentSink, IterationClock, SolveOutcome, SolverConfig};
pub use stays::{expand_stays, StayRecord};
pub use validate::{validate_instance, InstanceViolation, ValidationReport};
pub use verifier::{Metrics, ObjectiveVector, Violation, ViolationCode};
