use alloc::string::String;
use alloc::vec::Vec;

use crate::model::{Day, RegistrationId, WardId};
use crate::validate::ValidationReport;
use crate::verifier::Violation;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("instance is invalid ({} violations)", .0.violations.len())]
    InvalidInstance(ValidationReport),

    #[error("schedule violates {} hard constraints", .0.len())]
    ScheduleViolations(Vec<Violation>),

    #[error("priority-1 registrations cannot all be scheduled")]
    InfeasibleP1,

    #[error("no schedule assigning every priority-1 registration was found within the budget")]
    TimeoutNoSolution,

    #[error("postponed registrations cannot all be rescheduled: {0:?}")]
    InfeasiblePostponed(Vec<RegistrationId>),

    #[error("executed stays exceed the declared beds of ward {ward} on day {day}")]
    NegativeAvailability { ward: WardId, day: Day },

    #[error("instance exceeds the oracle limits: {0}")]
    LimitsExceeded(String),

    #[error("invalid reschedule request: {0}")]
    InvalidRequest(String),
}

impl Error {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidInstance(_) => "invalid-instance",
            Error::ScheduleViolations(_) => "schedule-violations",
            Error::InfeasibleP1 => "infeasible-p1",
            Error::TimeoutNoSolution => "timeout-no-solution",
            Error::InfeasiblePostponed(_) => "infeasible-postponed",
            Error::NegativeAvailability { .. } => "negative-availability",
            Error::LimitsExceeded(_) => "limits-exceeded",
            Error::InvalidRequest(_) => "invalid-request",
        }
    }
}
