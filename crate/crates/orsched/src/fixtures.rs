//! Rescheduling experiment: a solved five-day Scenario A week in which some
//! day-2 surgeries of one specialty are postponed and that specialty is
//! rescheduled over days 3 to 5.

use orsched_core::generator::{generate_instance, ScenarioName, ScenarioSpec};
use orsched_core::model::InstanceIndex;
use orsched_core::reschedule::{reschedule, RescheduleRequest};
use orsched_core::solver::{solve, NoSink};
use orsched_core::{Error, Instance, RegistrationId, Schedule, WardId};
use serde::{Deserialize, Serialize};

use crate::clock::{Budget, WallClock};

pub const DISRUPTION_DAY: u32 = 2;

/// A solved week to postpone surgeries from.
#[derive(Debug, Clone)]
pub struct Week {
    pub seed: u64,
    pub instance: Instance,
    pub schedule: Schedule,
}

pub fn solved_week(seed: u64, budget: Budget) -> Result<Week, Error> {
    let instance = generate_instance(&ScenarioSpec::preset(ScenarioName::A), 5, seed).instance;
    let outcome = solve(&instance, &budget.config(seed), &WallClock::start(), &mut NoSink)?;
    Ok(Week {
        seed,
        instance,
        schedule: outcome.best_schedule,
    })
}

/// Day-2 registrations of `specialty` in the week's schedule, by id.
pub fn day2_registrations(week: &Week, specialty: WardId) -> Vec<RegistrationId> {
    let index = InstanceIndex::new(&week.instance);
    week.schedule
        .assignments
        .iter()
        .filter(|a| a.day == DISRUPTION_DAY)
        .filter(|a| {
            index
                .registration(a.registration_id)
                .is_some_and(|r| r.specialty == specialty)
        })
        .map(|a| a.registration_id)
        .collect()
}

/// Postpones the first `count` day-2 surgeries of `specialty` and reschedules
/// only that specialty. `None` when fewer are planned on day 2.
pub fn postponement_request(week: &Week, specialty: WardId, count: usize) -> Option<RescheduleRequest> {
    let day2 = day2_registrations(week, specialty);
    let postponed = day2.get(..count)?.to_vec();
    let mut request = RescheduleRequest::new(week.instance.clone(), week.schedule.clone(), postponed);
    request.specialty_filter = Some(specialty);
    Some(request)
}

/// One rescheduling run, counted per specialty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostponementRow {
    pub seed: u64,
    pub postponed: usize,
    /// Old assignments of the specialty after the disruption day.
    pub old: usize,
    pub dropped: usize,
    /// Dropped registrations of priority 1 or 2.
    pub dropped_high: usize,
    /// Assignments of the specialty in the new schedule.
    pub new: usize,
}

pub fn postponement_row(
    week: &Week,
    specialty: WardId,
    count: usize,
    budget: Budget,
) -> Result<Option<PostponementRow>, Error> {
    let Some(request) = postponement_request(week, specialty, count) else {
        return Ok(None);
    };
    let outcome = reschedule(&request, &budget.config(week.seed), &WallClock::start(), &mut NoSink)?;
    let index = InstanceIndex::new(&week.instance);
    let of_specialty = |id: RegistrationId| index.registration(id).is_some_and(|r| r.specialty == specialty);
    Ok(Some(PostponementRow {
        seed: week.seed,
        postponed: count,
        old: week
            .schedule
            .assignments
            .iter()
            .filter(|a| a.day > DISRUPTION_DAY && of_specialty(a.registration_id))
            .count(),
        dropped: outcome.dropped.len(),
        dropped_high: outcome
            .dropped
            .iter()
            .filter(|&&id| index.registration(id).is_some_and(|r| r.priority <= 2))
            .count(),
        new: outcome
            .new_schedule
            .assignments
            .iter()
            .filter(|a| of_specialty(a.registration_id))
            .count(),
    }))
}
