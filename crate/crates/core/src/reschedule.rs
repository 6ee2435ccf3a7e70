//! Rescheduling after a disruption.
//!
//! Some registrations planned for the disruption day could not be operated
//! and must be reinserted in the remaining days. Surgeries already performed
//! stay where they are; their post-operative stays reduce the beds left for
//! the following days. Other planned surgeries may be moved or, as a last
//! resort, dropped. The objective, from most to least important:
//!
//! * level 4: old priority-1/2 registrations missing from the new schedule
//!   (executed ones included, which adds the same constant to every candidate),
//! * level 3: dropped priority-3 registrations planned before the last day,
//! * level 2: dropped priority-3 registrations planned on the last day,
//! * level 1: total shift `|new_day - old_day|` of the surviving registrations.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::cost::Cost;
use crate::engine::{self, Exhaust, ItemSpec, Problem, SearchParams};
use crate::error::Error;
use crate::model::{
    Assignment, BedAvailability, Day, Instance, InstanceIndex, Registration, RegistrationId, Schedule, WardId,
};
use crate::solver::{Clock, IncumbentSink, SolverConfig};
use crate::stays::for_each_stay;
use crate::validate::validate_instance;
use crate::verifier::{check_schedule, metrics_of, Metrics, Violation, ViolationCode};

/// Inclusive range of days.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DayRange {
    pub first: Day,
    pub last: Day,
}

impl DayRange {
    pub fn contains(&self, day: Day) -> bool {
        self.first <= day && day <= self.last
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescheduleRequest {
    pub instance: Instance,
    pub old_schedule: Schedule,
    /// Last executed day; its surgeries not listed in `postponed` took place.
    pub disruption_day: Day,
    /// Registrations planned on `disruption_day` that must be reinserted.
    pub postponed: Vec<RegistrationId>,
    pub reschedule_days: DayRange,
    /// Only this specialty is rescheduled; the others pass through unchanged.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub specialty_filter: Option<WardId>,
}

impl RescheduleRequest {
    /// Request with the usual defaults: disruption on day 2, rescheduling on
    /// days 3 to the end of the horizon, all specialties.
    pub fn new(instance: Instance, old_schedule: Schedule, postponed: Vec<RegistrationId>) -> Self {
        let horizon = instance.horizon;
        Self {
            instance,
            old_schedule,
            disruption_day: 2,
            postponed,
            reschedule_days: DayRange {
                first: 3,
                last: horizon,
            },
            specialty_filter: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct RescheduleObjective {
    pub level4: u32,
    pub level3: u32,
    pub level2: u32,
    pub level1: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescheduleOutcome {
    /// Assignments after the disruption day, postponed ones included.
    pub new_schedule: Schedule,
    pub objective: RescheduleObjective,
    /// Old assignments after the disruption day that were not kept.
    pub dropped: Vec<RegistrationId>,
    /// Executed priority-1/2 registrations counted in `objective.level4`.
    pub level4_offset: u32,
    pub proved_optimal: bool,
    pub incumbents_emitted: u64,
    pub iterations: u64,
    pub elapsed: f64,
}

/// Declared beds minus the stays of the surgeries performed up to
/// `executed_through`, on every day of the horizon.
pub fn compute_residual_availability(
    instance: &Instance,
    old_schedule: &Schedule,
    executed_through: Day,
) -> Result<Vec<BedAvailability>, Error> {
    residual_beds(instance, old_schedule, executed_through, &BTreeSet::new())
}

fn residual_beds(
    instance: &Instance,
    old_schedule: &Schedule,
    executed_through: Day,
    postponed: &BTreeSet<RegistrationId>,
) -> Result<Vec<BedAvailability>, Error> {
    let index = InstanceIndex::new(instance);
    let mut used: BTreeMap<(WardId, Day), u32> = BTreeMap::new();
    for a in &old_schedule.assignments {
        if a.day > executed_through || postponed.contains(&a.registration_id) {
            continue;
        }
        if let Some(reg) = index.registration(a.registration_id) {
            for_each_stay(reg, a.day, instance.horizon, |day, ward| {
                *used.entry((ward, day)).or_default() += 1;
            });
        }
    }
    let mut out = instance.beds.clone();
    for b in &mut out {
        let taken = used.remove(&(b.ward, b.day)).unwrap_or(0);
        b.available = b.available.checked_sub(taken).ok_or(Error::NegativeAvailability {
            ward: b.ward,
            day: b.day,
        })?;
    }
    if let Some((&(ward, day), _)) = used.iter().next() {
        return Err(Error::NegativeAvailability { ward, day });
    }
    Ok(out)
}

/// How each old assignment is treated by a request.
struct Split {
    /// Performed on or before the disruption day.
    executed: Vec<Assignment>,
    /// Kept verbatim: other specialties or days outside the reschedule range.
    passthrough: Vec<Assignment>,
    /// Movable or droppable, postponed ones included.
    movable: Vec<Assignment>,
    postponed: BTreeSet<RegistrationId>,
}

fn split(request: &RescheduleRequest, index: &InstanceIndex<'_>) -> Split {
    let postponed: BTreeSet<RegistrationId> = request.postponed.iter().copied().collect();
    let mut s = Split {
        executed: Vec::new(),
        passthrough: Vec::new(),
        movable: Vec::new(),
        postponed,
    };
    for a in &request.old_schedule.assignments {
        let specialty = index.registration(a.registration_id).map(|r| r.specialty);
        let in_scope = request.specialty_filter.is_none() || specialty == request.specialty_filter;
        if s.postponed.contains(&a.registration_id) {
            s.movable.push(*a);
        } else if a.day <= request.disruption_day {
            s.executed.push(*a);
        } else if in_scope && request.reschedule_days.contains(a.day) {
            s.movable.push(*a);
        } else {
            s.passthrough.push(*a);
        }
    }
    s
}

fn check_request(request: &RescheduleRequest) -> Result<(), Error> {
    let report = validate_instance(&request.instance);
    if !report.is_ok() {
        return Err(Error::InvalidInstance(report));
    }
    let h = request.instance.horizon;
    let invalid = |msg| Err(Error::InvalidRequest(msg));
    if request.disruption_day == 0 || request.disruption_day >= h {
        return invalid(format!(
            "disruption day {} must lie in 1..{}",
            request.disruption_day, h
        ));
    }
    let r = request.reschedule_days;
    if r.first <= request.disruption_day || r.last > h || r.first > r.last {
        return invalid(format!(
            "reschedule days {}..={} must be a non-empty range after day {} within the horizon {}",
            r.first, r.last, request.disruption_day, h
        ));
    }
    let violations: Vec<Violation> = check_schedule(&request.instance, &request.old_schedule)
        .into_iter()
        .filter(|v| v.code != ViolationCode::P1Unassigned)
        .collect();
    if !violations.is_empty() {
        return Err(Error::ScheduleViolations(violations));
    }
    let index = InstanceIndex::new(&request.instance);
    let mut seen = BTreeSet::new();
    for &id in &request.postponed {
        if !seen.insert(id) {
            return invalid(format!("registration {id} is postponed twice"));
        }
        match request.old_schedule.find(id) {
            Some(a) if a.day == request.disruption_day => {}
            _ => {
                return invalid(format!(
                    "registration {id} is not planned on day {}",
                    request.disruption_day
                ))
            }
        }
        if let Some(filter) = request.specialty_filter {
            if index.registration(id).map(|r| r.specialty) != Some(filter) {
                return invalid(format!("registration {id} is outside specialty {filter}"));
            }
        }
    }
    Ok(())
}

/// The instance the new schedule must be feasible for: registrations still to
/// be operated, slots after the disruption day and residual beds.
pub fn residual_instance(request: &RescheduleRequest) -> Result<Instance, Error> {
    check_request(request)?;
    let index = InstanceIndex::new(&request.instance);
    let s = split(request, &index);
    residual_from(request, &index, &s)
}

fn residual_from(request: &RescheduleRequest, index: &InstanceIndex<'_>, s: &Split) -> Result<Instance, Error> {
    let ids: BTreeSet<RegistrationId> = s
        .passthrough
        .iter()
        .chain(&s.movable)
        .map(|a| a.registration_id)
        .collect();
    let registrations: Vec<Registration> = ids.iter().filter_map(|&id| index.registration(id).cloned()).collect();
    Ok(Instance {
        horizon: request.instance.horizon,
        registrations,
        mss: request
            .instance
            .mss
            .iter()
            .filter(|m| m.day > request.disruption_day)
            .copied()
            .collect(),
        capacities: request.instance.capacities.clone(),
        beds: residual_beds(
            &request.instance,
            &request.old_schedule,
            request.disruption_day,
            &s.postponed,
        )?,
    })
}

/// Hard-constraint violations of `new_schedule` for `request`: the verifier
/// on the residual instance plus any postponed registration left out (reported
/// as `p1-unassigned`). Dropping an old priority-1 surgery is allowed, at a cost.
pub fn check_reschedule(request: &RescheduleRequest, new_schedule: &Schedule) -> Result<Vec<Violation>, Error> {
    let residual = residual_instance(request)?;
    let mut out: Vec<Violation> = check_schedule(&residual, new_schedule)
        .into_iter()
        .filter(|v| v.code != ViolationCode::P1Unassigned)
        .collect();
    let assigned = new_schedule.assigned_ids();
    for &id in &request.postponed {
        if !assigned.contains(&id) {
            out.push(Violation {
                code: ViolationCode::P1Unassigned,
                context: crate::verifier::ViolationContext {
                    registration_id: Some(id),
                    ..Default::default()
                },
            });
        }
    }
    out.sort();
    Ok(out)
}

/// The whole plan after rescheduling: the surgeries executed up to the
/// disruption day followed by `new_schedule`.
pub fn merged_schedule(request: &RescheduleRequest, new_schedule: &Schedule) -> Schedule {
    let index = InstanceIndex::new(&request.instance);
    let s = split(request, &index);
    Schedule::new(
        s.executed
            .into_iter()
            .chain(new_schedule.assignments.iter().copied())
            .collect(),
    )
}

/// Metrics of the merged plan over the original instance. Fails when
/// `new_schedule` violates [`check_reschedule`].
pub fn reschedule_metrics(request: &RescheduleRequest, new_schedule: &Schedule) -> Result<Metrics, Error> {
    let violations = check_reschedule(request, new_schedule)?;
    if !violations.is_empty() {
        return Err(Error::ScheduleViolations(violations));
    }
    Ok(metrics_of(&request.instance, &merged_schedule(request, new_schedule)))
}

/// Outcome record of an externally computed `new_schedule` (for example the
/// exhaustive oracle's), with zero search statistics.
pub fn describe_outcome(request: &RescheduleRequest, new_schedule: &Schedule) -> Result<RescheduleOutcome, Error> {
    check_request(request)?;
    let index = InstanceIndex::new(&request.instance);
    let s = split(request, &index);
    let kept = new_schedule.assigned_ids();
    Ok(RescheduleOutcome {
        new_schedule: new_schedule.clone(),
        objective: evaluate_reschedule_objective(request, new_schedule),
        dropped: s
            .movable
            .iter()
            .map(|a| a.registration_id)
            .filter(|id| !kept.contains(id))
            .collect(),
        level4_offset: s.executed.iter().filter(|a| a.priority <= 2).count() as u32,
        proved_optimal: false,
        incumbents_emitted: 0,
        iterations: 0,
        elapsed: 0.0,
    })
}

/// Objective of `new_schedule`, computed from the old and new schedules only.
pub fn evaluate_reschedule_objective(request: &RescheduleRequest, new_schedule: &Schedule) -> RescheduleObjective {
    let postponed: BTreeSet<RegistrationId> = request.postponed.iter().copied().collect();
    let mut obj = RescheduleObjective::default();
    for old in &request.old_schedule.assignments {
        match new_schedule.find(old.registration_id) {
            Some(new) => obj.level1 += new.day.abs_diff(old.day),
            None if old.priority <= 2 => obj.level4 += 1,
            None if postponed.contains(&old.registration_id) => {}
            None if old.day == request.reschedule_days.last => obj.level2 += 1,
            None if request.reschedule_days.contains(old.day) => obj.level3 += 1,
            None => {}
        }
    }
    obj
}

/// Unassigned cost of a movable old assignment; postponed ones are hard.
fn drop_cost(a: &Assignment, postponed: &BTreeSet<RegistrationId>, last: Day) -> Cost {
    if postponed.contains(&a.registration_id) {
        Cost::level(0, 1)
    } else if a.priority <= 2 {
        Cost::level(1, 1)
    } else if a.day == last {
        Cost::level(3, 1)
    } else {
        Cost::level(2, 1)
    }
}

fn objective_of(cost: Cost, offset: u32) -> RescheduleObjective {
    RescheduleObjective {
        level4: cost.0[1] as u32 + offset,
        level3: cost.0[2] as u32,
        level2: cost.0[3] as u32,
        level1: cost.0[4] as u32,
    }
}

/// Node budget of the exhaustive placement of the postponed registrations.
const EXACT_POSTPONED_NODES: u64 = 2_000_000;

pub fn reschedule(
    request: &RescheduleRequest,
    config: &SolverConfig,
    clock: &dyn Clock,
    sink: &mut dyn IncumbentSink<RescheduleObjective>,
) -> Result<RescheduleOutcome, Error> {
    check_request(request)?;
    let index = InstanceIndex::new(&request.instance);
    let s = split(request, &index);
    let residual = residual_from(request, &index, &s)?;
    let offset = s.executed.iter().filter(|a| a.priority <= 2).count() as u32;

    let movable_slots = Instance {
        mss: residual
            .mss
            .iter()
            .filter(|m| request.reschedule_days.contains(m.day))
            .copied()
            .collect(),
        ..residual.clone()
    };
    let h = request.instance.horizon;
    let items: Vec<ItemSpec> = s
        .movable
        .iter()
        .filter_map(|a| {
            let reg = index.registration(a.registration_id)?.clone();
            let day_cost = (0..=h).map(|d| Cost::level(4, i64::from(d.abs_diff(a.day)))).collect();
            Some(ItemSpec {
                registration: reg,
                unassigned: drop_cost(a, &s.postponed, request.reschedule_days.last),
                day_cost,
                home: Some((a.or_id, a.session, a.day)),
            })
        })
        .collect();
    let p = Problem::new(&movable_slots, items, s.passthrough.clone());
    let hard: Vec<u32> = (0..p.item_count() as u32)
        .filter(|&i| s.postponed.contains(&p.items[i as usize].registration.id))
        .collect();
    let ids = |items: &[u32]| {
        items
            .iter()
            .map(|&i| p.items[i as usize].registration.id)
            .collect::<Vec<_>>()
    };

    let alone = engine::unplaceable_alone(&p, &hard);
    if !alone.is_empty() {
        return Err(Error::InfeasiblePostponed(ids(&alone)));
    }
    let order = engine::construction_order(&p, None);
    let mut start = engine::construct(&p, &order);
    if start.cost().hard() > 0 {
        match engine::place_all(&p, &hard, EXACT_POSTPONED_NODES / 10) {
            Exhaust::Infeasible => return Err(Error::InfeasiblePostponed(ids(&hard))),
            Exhaust::Found(seed) => start = engine::seeded(&p, &seed, &order),
            Exhaust::Unknown => {}
        }
    }

    let params = SearchParams {
        seed: config.seed,
        time_limit: config.time_limit,
        max_iterations: config.max_iterations,
        max_stall: config.max_stall_iterations.max(1),
        restarts: true,
    };
    let mut emitted = 0u64;
    let result = engine::search(&p, start, &params, clock, &mut |placement, cost| {
        emitted += 1;
        if config.emit_incumbents && cost.hard() == 0 {
            sink.incumbent(&p.to_schedule(placement), &objective_of(cost, offset), clock.elapsed());
        }
    });
    if result.best_cost.hard() > 0 {
        return match engine::place_all(&p, &hard, EXACT_POSTPONED_NODES) {
            Exhaust::Infeasible => Err(Error::InfeasiblePostponed(ids(&hard))),
            _ => Err(Error::TimeoutNoSolution),
        };
    }

    let new_schedule = p.to_schedule(&result.best);
    let kept = new_schedule.assigned_ids();
    let dropped = s
        .movable
        .iter()
        .map(|a| a.registration_id)
        .filter(|id| !kept.contains(id))
        .collect();
    let objective = objective_of(result.best_cost, offset);
    debug_assert_eq!(objective, evaluate_reschedule_objective(request, &new_schedule));
    Ok(RescheduleOutcome {
        new_schedule,
        objective,
        dropped,
        level4_offset: offset,
        proved_optimal: result.reached_bound,
        incumbents_emitted: if config.emit_incumbents { emitted } else { 0 },
        iterations: result.iterations,
        elapsed: clock.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{MssSlot, OrId, SessionCapacity, SessionId};
    use crate::solver::{IterationClock, NoSink};
    use alloc::vec;

    fn reg(id: u32, priority: u8, minutes: u32, los: u32) -> Registration {
        Registration {
            id: RegistrationId(id),
            priority,
            surgery_duration: minutes,
            los_after: los,
            specialty: WardId(1),
            icu_los: 0,
            admit_advance: 0,
        }
    }

    fn at(r: &Registration, day: Day) -> Assignment {
        Assignment {
            registration_id: r.id,
            priority: r.priority,
            or_id: OrId(1),
            session: SessionId(1),
            day,
        }
    }

    /// One OR, one 300-minute session per day, `beds` ward-1 beds every day.
    fn instance(horizon: u32, regs: Vec<Registration>, beds: u32) -> Instance {
        Instance {
            horizon,
            registrations: regs,
            mss: (1..=horizon)
                .map(|day| MssSlot {
                    or_id: OrId(1),
                    session: SessionId(1),
                    specialty: WardId(1),
                    day,
                })
                .collect(),
            capacities: vec![SessionCapacity {
                or_id: OrId(1),
                session: SessionId(1),
                duration: 300,
            }],
            beds: [0u32, 1]
                .iter()
                .flat_map(|&w| {
                    (1..=horizon).map(move |day| BedAvailability {
                        ward: WardId(w),
                        day,
                        available: if w == 0 { 0 } else { beds },
                    })
                })
                .collect(),
        }
    }

    fn config() -> SolverConfig {
        SolverConfig::iterations(7, 5_000)
    }

    #[test]
    fn residual_unchanged_without_executed_surgery() {
        let r = reg(1, 2, 100, 2);
        let inst = instance(5, vec![r.clone()], 3);
        let old = Schedule::new(vec![at(&r, 4)]);
        assert_eq!(compute_residual_availability(&inst, &old, 2).unwrap(), inst.beds);
    }

    #[test]
    fn residual_subtracts_executed_stays() {
        let r = reg(1, 2, 100, 3);
        let inst = instance(5, vec![r.clone()], 3);
        let old = Schedule::new(vec![at(&r, 2)]);
        let res = compute_residual_availability(&inst, &old, 2).unwrap();
        let get = |day| {
            res.iter()
                .find(|b| b.ward == WardId(1) && b.day == day)
                .unwrap()
                .available
        };
        assert_eq!([get(1), get(2), get(3), get(4), get(5)], [3, 2, 2, 2, 3]);
    }

    #[test]
    fn residual_below_zero_is_an_error() {
        let r = reg(1, 2, 100, 3);
        let inst = instance(5, vec![r.clone()], 0);
        let old = Schedule::new(vec![at(&r, 2)]);
        assert!(matches!(
            compute_residual_availability(&inst, &old, 2),
            Err(Error::NegativeAvailability { .. })
        ));
    }

    #[test]
    fn postponed_goes_to_the_next_free_day() {
        let a = reg(1, 2, 250, 0);
        let b = reg(2, 3, 250, 0);
        let inst = instance(5, vec![a.clone(), b.clone()], 5);
        let old = Schedule::new(vec![at(&a, 2), at(&b, 4)]);
        let req = RescheduleRequest::new(inst, old, vec![a.id]);
        let out = reschedule(&req, &config(), &IterationClock, &mut NoSink).unwrap();
        assert_eq!(out.new_schedule.find(a.id).unwrap().day, 3);
        assert_eq!(
            out.objective,
            RescheduleObjective {
                level4: 0,
                level3: 0,
                level2: 0,
                level1: 1
            }
        );
        assert!(out.dropped.is_empty());
    }

    #[test]
    fn saturated_plan_drops_a_last_day_p3() {
        // Every remaining day is full; the postponed surgery displaces the day-5 P3.
        let p = reg(1, 2, 300, 0);
        let r3 = reg(3, 2, 300, 0);
        let r4 = reg(4, 3, 300, 0);
        let r5 = reg(5, 3, 300, 0);
        let inst = instance(5, vec![p.clone(), r3.clone(), r4.clone(), r5.clone()], 5);
        let old = Schedule::new(vec![at(&p, 2), at(&r3, 3), at(&r4, 4), at(&r5, 5)]);
        let req = RescheduleRequest::new(inst, old, vec![p.id]);
        let out = reschedule(&req, &config(), &IterationClock, &mut NoSink).unwrap();
        assert_eq!(out.dropped, vec![r5.id]);
        assert_eq!(out.objective.level4, 0);
        assert_eq!(out.objective.level3, 0);
        assert_eq!(out.objective.level2, 1);
        assert_eq!(out.objective, evaluate_reschedule_objective(&req, &out.new_schedule));
        assert!(check_reschedule(&req, &out.new_schedule).unwrap().is_empty());
    }

    #[test]
    fn executed_high_priority_is_a_constant_offset() {
        let e = reg(1, 1, 100, 0);
        let r = reg(2, 3, 100, 0);
        let inst = instance(5, vec![e.clone(), r.clone()], 5);
        let old = Schedule::new(vec![at(&e, 1), at(&r, 4)]);
        let req = RescheduleRequest::new(inst, old, vec![]);
        let out = reschedule(&req, &config(), &IterationClock, &mut NoSink).unwrap();
        assert_eq!(out.level4_offset, 1);
        assert_eq!(
            out.objective,
            RescheduleObjective {
                level4: 1,
                ..Default::default()
            }
        );
        assert_eq!(out.new_schedule.assignments, vec![at(&r, 4)]);
    }

    #[test]
    fn unplaceable_postponed_is_reported() {
        // The only remaining day has no ward bed for the one-night stay.
        let p = reg(1, 2, 300, 1);
        let mut inst = instance(3, vec![p.clone()], 5);
        for b in inst.beds.iter_mut().filter(|b| b.day == 3) {
            b.available = 0;
        }
        let old = Schedule::new(vec![at(&p, 2)]);
        let req = RescheduleRequest::new(inst, old, vec![p.id]);
        assert_eq!(
            reschedule(&req, &config(), &IterationClock, &mut NoSink),
            Err(Error::InfeasiblePostponed(vec![p.id]))
        );
    }

    #[test]
    fn requests_are_validated() {
        let a = reg(1, 2, 100, 0);
        let inst = instance(5, vec![a.clone()], 5);
        let old = Schedule::new(vec![at(&a, 3)]);
        let req = RescheduleRequest::new(inst.clone(), old.clone(), vec![a.id]);
        assert!(matches!(
            reschedule(&req, &config(), &IterationClock, &mut NoSink),
            Err(Error::InvalidRequest(_))
        ));
        let mut req = RescheduleRequest::new(inst, old, vec![]);
        req.reschedule_days = DayRange { first: 2, last: 5 };
        assert!(matches!(
            reschedule(&req, &config(), &IterationClock, &mut NoSink),
            Err(Error::InvalidRequest(_))
        ));
    }

    #[test]
    fn other_specialties_pass_through() {
        let a = reg(1, 3, 100, 0);
        let mut b = reg(2, 3, 100, 0);
        b.specialty = WardId(2);
        let mut inst = instance(5, vec![a.clone(), b.clone()], 5);
        for day in 1..=5 {
            inst.mss.push(MssSlot {
                or_id: OrId(2),
                session: SessionId(1),
                specialty: WardId(2),
                day,
            });
            inst.beds.push(BedAvailability {
                ward: WardId(2),
                day,
                available: 5,
            });
        }
        inst.capacities.push(SessionCapacity {
            or_id: OrId(2),
            session: SessionId(1),
            duration: 300,
        });
        let mut bb = at(&b, 5);
        bb.or_id = OrId(2);
        let old = Schedule::new(vec![at(&a, 2), bb]);
        let mut req = RescheduleRequest::new(inst, old, vec![a.id]);
        req.specialty_filter = Some(WardId(1));
        let out = reschedule(&req, &config(), &IterationClock, &mut NoSink).unwrap();
        assert!(out.new_schedule.assignments.contains(&bb));
        assert_eq!(out.new_schedule.find(a.id).unwrap().day, 3);
    }
}
