//! Hard-constraint checking, objective evaluation and efficiency metrics.
//!
//! Assignments follow set semantics: an identical assignment listed twice is
//! reported as a duplicate but its surgery minutes and bed-days are counted
//! once, and a patient occupies at most one bed per ward and day.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::model::{
    Assignment, Day, Instance, InstanceIndex, OrId, PriorityCensus, RegistrationId, Schedule, SessionId, WardId,
};
use crate::stays::for_each_stay;

/// Lexicographic cost of a schedule: unassigned priority-2 registrations are
/// compared first, unassigned priority-3 registrations break ties.
///
/// The derived `Ord` is that lexicographic order; smaller is better.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct ObjectiveVector {
    pub unassigned_p2: u32,
    pub unassigned_p3: u32,
}

/// `Less` means `a` is the better (smaller) objective.
pub fn compare_objectives(a: &ObjectiveVector, b: &ObjectiveVector) -> Ordering {
    a.cmp(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationCode {
    /// Same registration in two sessions of one OR (also any repeated assignment in one OR).
    DuplicateSession,
    /// Same registration in two different ORs.
    DuplicateOr,
    CapacityOverflow,
    WardOverflow,
    IcuOverflow,
    P1Unassigned,
    /// Unknown registration, slot outside the MSS, wrong specialty or wrong priority.
    MssMismatch,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::DuplicateSession => "duplicate-session",
            Self::DuplicateOr => "duplicate-or",
            Self::CapacityOverflow => "capacity-overflow",
            Self::WardOverflow => "ward-overflow",
            Self::IcuOverflow => "icu-overflow",
            Self::P1Unassigned => "p1-unassigned",
            Self::MssMismatch => "mss-mismatch",
        }
    }
}

/// Ids and days identifying the offending constraint instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct ViolationContext {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub registration_id: Option<RegistrationId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub or_id: Option<OrId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session: Option<SessionId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub day: Option<Day>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ward: Option<WardId>,
    /// Load or occupancy that exceeded the limit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amount: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub context: ViolationContext,
}

impl Violation {
    fn at_assignment(code: ViolationCode, a: &Assignment) -> Self {
        Self {
            code,
            context: ViolationContext {
                registration_id: Some(a.registration_id),
                or_id: Some(a.or_id),
                session: Some(a.session),
                day: Some(a.day),
                ..ViolationContext::default()
            },
        }
    }
}

/// The assignments of `schedule` that respect the MSS, de-duplicated, plus the
/// mismatch and duplicate violations found on the way.
struct Screened {
    valid: BTreeSet<Assignment>,
    violations: Vec<Violation>,
}

fn screen(index: &InstanceIndex<'_>, schedule: &Schedule) -> Screened {
    let mut violations = Vec::new();
    let mut valid = BTreeSet::new();
    let mut first_of: BTreeMap<RegistrationId, Assignment> = BTreeMap::new();
    for a in &schedule.assignments {
        let ok = match index.registration(a.registration_id) {
            Some(reg) => {
                reg.priority == a.priority && index.slot_specialty(a.or_id, a.session, a.day) == Some(reg.specialty)
            }
            None => false,
        };
        if !ok {
            violations.push(Violation::at_assignment(ViolationCode::MssMismatch, a));
            continue;
        }
        match first_of.get(&a.registration_id) {
            None => {
                first_of.insert(a.registration_id, *a);
            }
            Some(first) => {
                let code = if first.or_id == a.or_id {
                    ViolationCode::DuplicateSession
                } else {
                    ViolationCode::DuplicateOr
                };
                violations.push(Violation::at_assignment(code, a));
            }
        }
        valid.insert(*a);
    }
    Screened { valid, violations }
}

/// Every violated hard constraint of `schedule`, one entry per offending
/// constraint instance. Empty iff the schedule is feasible.
pub fn check_schedule(instance: &Instance, schedule: &Schedule) -> Vec<Violation> {
    let index = InstanceIndex::new(instance);
    let Screened { valid, mut violations } = screen(&index, schedule);

    // session capacity, per (or, session, day)
    let mut load: BTreeMap<(OrId, SessionId, Day), u32> = BTreeMap::new();
    for a in &valid {
        let reg = index.registration(a.registration_id).expect("screened");
        *load.entry((a.or_id, a.session, a.day)).or_default() += reg.surgery_duration;
    }
    for (&(or_id, session, day), &minutes) in &load {
        let limit = index.capacity(or_id, session).unwrap_or(0);
        if minutes > limit {
            violations.push(Violation {
                code: ViolationCode::CapacityOverflow,
                context: ViolationContext {
                    or_id: Some(or_id),
                    session: Some(session),
                    day: Some(day),
                    amount: Some(minutes),
                    limit: Some(limit),
                    ..ViolationContext::default()
                },
            });
        }
    }

    // beds, distinct patients per (ward, day)
    let occupancy = occupancy_of(&index, &valid);
    for (&(ward, day), &count) in &occupancy {
        let limit = index.beds(ward, day).unwrap_or(0);
        if count > limit {
            violations.push(Violation {
                code: if ward.is_icu() {
                    ViolationCode::IcuOverflow
                } else {
                    ViolationCode::WardOverflow
                },
                context: ViolationContext {
                    ward: Some(ward),
                    day: Some(day),
                    amount: Some(count),
                    limit: Some(limit),
                    ..ViolationContext::default()
                },
            });
        }
    }

    let assigned: BTreeSet<RegistrationId> = valid.iter().map(|a| a.registration_id).collect();
    for reg in &instance.registrations {
        if reg.priority == 1 && !assigned.contains(&reg.id) {
            violations.push(Violation {
                code: ViolationCode::P1Unassigned,
                context: ViolationContext {
                    registration_id: Some(reg.id),
                    ..ViolationContext::default()
                },
            });
        }
    }

    violations.sort();
    violations
}

fn occupancy_of<'a>(
    index: &InstanceIndex<'_>,
    assignments: impl IntoIterator<Item = &'a Assignment>,
) -> BTreeMap<(WardId, Day), u32> {
    let mut seen: BTreeSet<(WardId, Day, RegistrationId)> = BTreeSet::new();
    let horizon = index.instance.horizon;
    for a in assignments {
        if let Some(reg) = index.registration(a.registration_id) {
            for_each_stay(reg, a.day, horizon, |day, ward| {
                seen.insert((ward, day, reg.id));
            });
        }
    }
    let mut occupancy = BTreeMap::new();
    for (ward, day, _) in seen {
        *occupancy.entry((ward, day)).or_insert(0u32) += 1;
    }
    occupancy
}

/// Occupied beds per `(ward, day)` caused by the MSS-consistent assignments of
/// `schedule`. Pairs with no occupant are absent.
pub fn bed_occupancy(instance: &Instance, schedule: &Schedule) -> BTreeMap<(WardId, Day), u32> {
    let index = InstanceIndex::new(instance);
    let valid = screen(&index, schedule).valid;
    occupancy_of(&index, &valid)
}

fn require_feasible(instance: &Instance, schedule: &Schedule) -> Result<(), Error> {
    let violations = check_schedule(instance, schedule);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Error::ScheduleViolations(violations))
    }
}

/// Assigned registrations per priority class, `[p1, p2, p3]`.
fn assigned_counts(instance: &Instance, schedule: &Schedule) -> [u32; 3] {
    let index = InstanceIndex::new(instance);
    let mut counts = [0u32; 3];
    for id in schedule.assigned_ids() {
        if let Some(reg) = index.registration(id) {
            if (1..=3).contains(&reg.priority) {
                counts[usize::from(reg.priority - 1)] += 1;
            }
        }
    }
    counts
}

/// Unassigned priority-2 and priority-3 counts of a feasible schedule.
pub fn evaluate_objective(instance: &Instance, schedule: &Schedule) -> Result<ObjectiveVector, Error> {
    require_feasible(instance, schedule)?;
    let census = PriorityCensus::of(instance);
    let counts = assigned_counts(instance, schedule);
    Ok(ObjectiveVector {
        unassigned_p2: census.total_p2 - counts[1],
        unassigned_p3: census.total_p3 - counts[2],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PriorityCount {
    pub assigned: u32,
    pub total: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    /// Priorities 1, 2 and 3.
    pub assigned_by_priority: [PriorityCount; 3],
    pub or_time_efficiency: f64,
    pub bed_occupancy_efficiency: f64,
    pub assigned_minutes: u64,
    pub offered_minutes: u64,
    pub occupied_bed_days: u64,
    pub available_bed_days: u64,
}

impl Metrics {
    pub fn assigned_total(&self) -> u32 {
        self.assigned_by_priority.iter().map(|c| c.assigned).sum()
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// OR time and bed occupancy efficiency of a feasible schedule.
///
/// OR time efficiency is assigned surgery minutes over the minutes of every
/// MSS slot. Bed occupancy efficiency is occupied bed-days over available
/// bed-days, both summed over days `1..=horizon` and every ward including the ICU.
pub fn compute_metrics(instance: &Instance, schedule: &Schedule) -> Result<Metrics, Error> {
    require_feasible(instance, schedule)?;
    Ok(metrics_of(instance, schedule))
}

pub(crate) fn metrics_of(instance: &Instance, schedule: &Schedule) -> Metrics {
    let index = InstanceIndex::new(instance);
    let census = PriorityCensus::of(instance);
    let counts = assigned_counts(instance, schedule);

    let assigned_minutes: u64 = schedule
        .assigned_ids()
        .into_iter()
        .filter_map(|id| index.registration(id))
        .map(|reg| u64::from(reg.surgery_duration))
        .sum();
    let offered_minutes = index.total_session_minutes();

    let occupied_bed_days: u64 = bed_occupancy(instance, schedule).values().map(|&c| u64::from(c)).sum();
    let mut available_bed_days = 0u64;
    for ward in index.wards() {
        for day in 1..=instance.horizon {
            available_bed_days += u64::from(index.beds(ward, day).unwrap_or(0));
        }
    }

    Metrics {
        assigned_by_priority: [
            PriorityCount {
                assigned: counts[0],
                total: census.total_p1,
            },
            PriorityCount {
                assigned: counts[1],
                total: census.total_p2,
            },
            PriorityCount {
                assigned: counts[2],
                total: census.total_p3,
            },
        ],
        or_time_efficiency: ratio(assigned_minutes, offered_minutes),
        bed_occupancy_efficiency: ratio(occupied_bed_days, available_bed_days),
        assigned_minutes,
        offered_minutes,
        occupied_bed_days,
        available_bed_days,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::*;
    use alloc::vec;

    fn reg(id: u32, priority: u8, minutes: u32, specialty: u32) -> Registration {
        Registration {
            id: RegistrationId(id),
            priority,
            surgery_duration: minutes,
            los_after: 1,
            specialty: WardId(specialty),
            icu_los: 0,
            admit_advance: 0,
        }
    }

    fn assign(id: u32, priority: u8, or_id: u32, session: u32, day: u32) -> Assignment {
        Assignment {
            registration_id: RegistrationId(id),
            priority,
            or_id: OrId(or_id),
            session: SessionId(session),
            day,
        }
    }

    /// One OR with two 300-minute sessions on day 1, specialty 1, ample beds.
    fn base(registrations: Vec<Registration>) -> Instance {
        let mut beds = Vec::new();
        for w in [0, 1] {
            beds.push(BedAvailability {
                ward: WardId(w),
                day: 1,
                available: 10,
            });
        }
        Instance {
            horizon: 1,
            registrations,
            mss: vec![
                MssSlot {
                    or_id: OrId(1),
                    session: SessionId(1),
                    specialty: WardId(1),
                    day: 1,
                },
                MssSlot {
                    or_id: OrId(1),
                    session: SessionId(2),
                    specialty: WardId(1),
                    day: 1,
                },
            ],
            capacities: vec![
                SessionCapacity {
                    or_id: OrId(1),
                    session: SessionId(1),
                    duration: 300,
                },
                SessionCapacity {
                    or_id: OrId(1),
                    session: SessionId(2),
                    duration: 300,
                },
            ],
            beds,
        }
    }

    fn codes(v: &[Violation]) -> Vec<ViolationCode> {
        v.iter().map(|v| v.code).collect()
    }

    #[test]
    fn lexicographic_comparison() {
        let ov = |a, b| ObjectiveVector {
            unassigned_p2: a,
            unassigned_p3: b,
        };
        assert_eq!(compare_objectives(&ov(0, 50), &ov(1, 0)), Ordering::Less);
        assert_eq!(compare_objectives(&ov(2, 3), &ov(2, 3)), Ordering::Equal);
        assert_eq!(compare_objectives(&ov(2, 1), &ov(2, 4)), Ordering::Less);
    }

    #[test]
    fn same_registration_in_two_sessions_of_one_or() {
        let inst = base(vec![reg(1, 2, 60, 1)]);
        let sched = Schedule::new(vec![assign(1, 2, 1, 1, 1), assign(1, 2, 1, 2, 1)]);
        assert_eq!(
            codes(&check_schedule(&inst, &sched)),
            vec![ViolationCode::DuplicateSession]
        );
    }

    #[test]
    fn session_overflow() {
        let inst = base(vec![reg(1, 2, 200, 1), reg(2, 2, 150, 1)]);
        let sched = Schedule::new(vec![assign(1, 2, 1, 1, 1), assign(2, 2, 1, 1, 1)]);
        let v = check_schedule(&inst, &sched);
        assert_eq!(codes(&v), vec![ViolationCode::CapacityOverflow]);
        assert_eq!(v[0].context.amount, Some(350));
        assert_eq!(v[0].context.limit, Some(300));
    }

    #[test]
    fn wrong_specialty_and_unknown_ids_are_mismatches() {
        let inst = base(vec![reg(1, 2, 60, 2), reg(2, 3, 60, 1)]);
        let sched = Schedule::new(vec![
            assign(1, 2, 1, 1, 1), // specialty 2 in a specialty-1 slot
            assign(2, 2, 1, 1, 1), // priority disagrees
            assign(9, 2, 1, 1, 1), // unknown registration
            assign(2, 3, 4, 1, 1), // unknown OR
        ]);
        let v = check_schedule(&inst, &sched);
        assert_eq!(v.len(), 4);
        assert!(v.iter().all(|v| v.code == ViolationCode::MssMismatch));
    }

    #[test]
    fn unassigned_priority_one_is_reported_per_registration() {
        let inst = base(vec![reg(1, 1, 60, 1), reg(2, 1, 60, 1), reg(3, 2, 60, 1)]);
        let sched = Schedule::new(vec![assign(2, 1, 1, 1, 1)]);
        let v = check_schedule(&inst, &sched);
        assert_eq!(codes(&v), vec![ViolationCode::P1Unassigned]);
        assert_eq!(v[0].context.registration_id, Some(RegistrationId(1)));
    }

    #[test]
    fn objective_and_metrics_of_a_small_schedule() {
        let inst = base(vec![reg(1, 2, 120, 1), reg(2, 2, 60, 1), reg(3, 3, 60, 1)]);
        let sched = Schedule::new(vec![assign(1, 2, 1, 1, 1)]);
        assert_eq!(
            evaluate_objective(&inst, &sched).unwrap(),
            ObjectiveVector {
                unassigned_p2: 1,
                unassigned_p3: 1
            }
        );
        let m = compute_metrics(&inst, &sched).unwrap();
        assert_eq!(m.or_time_efficiency, 0.2);
        // one ward bed-day out of 20 available
        assert_eq!(m.occupied_bed_days, 1);
        assert_eq!(m.available_bed_days, 20);
        assert_eq!(m.assigned_by_priority[1], PriorityCount { assigned: 1, total: 2 });
    }

    #[test]
    fn metrics_refuse_infeasible_schedules() {
        let inst = base(vec![reg(1, 1, 60, 1)]);
        let err = compute_metrics(&inst, &Schedule::default()).unwrap_err();
        assert_eq!(err.code(), "schedule-violations");
    }

    #[test]
    fn empty_schedule_has_zero_efficiency() {
        let inst = base(vec![reg(1, 2, 60, 1)]);
        let m = compute_metrics(&inst, &Schedule::default()).unwrap();
        assert_eq!(m.or_time_efficiency, 0.0);
        assert_eq!(m.bed_occupancy_efficiency, 0.0);
        assert_eq!(m.assigned_total(), 0);
    }
}
