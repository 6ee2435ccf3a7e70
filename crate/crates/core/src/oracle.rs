//! Exhaustive solvers for tiny instances, used as ground truth.
//!
//! Both oracles enumerate, for every registration, "left out" and each
//! compatible slot. The default mode prunes partial assignments that already
//! break a capacity or bed limit, or that cannot beat the incumbent. With
//! `prune = false` every combination is built and judged by the verifier,
//! which is slow but shares nothing with the pruned search.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::model::{
    Assignment, Day, Instance, InstanceIndex, MssSlot, OrId, Registration, Schedule, SessionId, WardId,
};
use crate::reschedule::{
    check_reschedule, evaluate_reschedule_objective, residual_instance, RescheduleObjective, RescheduleRequest,
};
use crate::stays::expand_stays;
use crate::validate::validate_instance;
use crate::verifier::{check_schedule, ObjectiveVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleLimits {
    pub max_registrations: usize,
    pub max_slots: usize,
    /// Enumeration nodes before giving up.
    pub max_states: u64,
    pub prune: bool,
}

impl Default for OracleLimits {
    fn default() -> Self {
        Self {
            max_registrations: 8,
            max_slots: 8,
            max_states: 50_000_000,
            prune: true,
        }
    }
}

impl OracleLimits {
    pub fn unpruned() -> Self {
        Self {
            prune: false,
            ..Self::default()
        }
    }
}

fn check_limits(limits: &OracleLimits, registrations: usize, slots: usize) -> Result<(), Error> {
    if registrations > limits.max_registrations {
        return Err(Error::LimitsExceeded(format!(
            "{registrations} registrations (limit {})",
            limits.max_registrations
        )));
    }
    if slots > limits.max_slots {
        return Err(Error::LimitsExceeded(format!(
            "{slots} slots (limit {})",
            limits.max_slots
        )));
    }
    Ok(())
}

/// Running minutes and bed counts of a partial assignment.
struct Load {
    minutes: BTreeMap<(OrId, SessionId, Day), u32>,
    beds: BTreeMap<(WardId, Day), u32>,
}

impl Load {
    fn new() -> Self {
        Self {
            minutes: BTreeMap::new(),
            beds: BTreeMap::new(),
        }
    }

    fn add(&mut self, reg: &Registration, slot: &MssSlot, horizon: u32) {
        *self.minutes.entry((slot.or_id, slot.session, slot.day)).or_default() += reg.surgery_duration;
        for s in expand_stays(reg, slot.day, horizon) {
            *self.beds.entry((s.place, s.day)).or_default() += 1;
        }
    }

    fn remove(&mut self, reg: &Registration, slot: &MssSlot, horizon: u32) {
        *self
            .minutes
            .get_mut(&(slot.or_id, slot.session, slot.day))
            .expect("added") -= reg.surgery_duration;
        for s in expand_stays(reg, slot.day, horizon) {
            *self.beds.get_mut(&(s.place, s.day)).expect("added") -= 1;
        }
    }

    fn within(&self, index: &InstanceIndex<'_>, reg: &Registration, slot: &MssSlot, horizon: u32) -> bool {
        let cap = index.capacity(slot.or_id, slot.session).unwrap_or(0);
        if self
            .minutes
            .get(&(slot.or_id, slot.session, slot.day))
            .copied()
            .unwrap_or(0)
            > cap
        {
            return false;
        }
        expand_stays(reg, slot.day, horizon)
            .iter()
            .all(|s| self.beds.get(&(s.place, s.day)).copied().unwrap_or(0) <= index.beds(s.place, s.day).unwrap_or(0))
    }
}

fn assignment(reg: &Registration, slot: &MssSlot) -> Assignment {
    Assignment {
        registration_id: reg.id,
        priority: reg.priority,
        or_id: slot.or_id,
        session: slot.session,
        day: slot.day,
    }
}

/// Shared enumeration: `choices[i]` lists the candidate slots of registration
/// `i`; `leaf` scores complete choices and `bound` partial ones (both `None`
/// when rejected). Returns the best score and choice vector.
struct Enumeration<'a, S> {
    index: &'a InstanceIndex<'a>,
    horizon: u32,
    regs: Vec<&'a Registration>,
    choices: Vec<Vec<MssSlot>>,
    /// Registrations that may not be left out.
    mandatory: Vec<bool>,
    prune: bool,
    nodes: u64,
    max_nodes: u64,
    best: Option<(S, Vec<Option<MssSlot>>)>,
}

impl<S: Ord + Copy> Enumeration<'_, S> {
    fn run(
        &mut self,
        load: &mut Load,
        picked: &mut Vec<Option<MssSlot>>,
        bound: &dyn Fn(&[Option<MssSlot>]) -> S,
        leaf: &dyn Fn(&[Option<MssSlot>]) -> Option<S>,
    ) -> Result<(), Error> {
        self.nodes += 1;
        if self.nodes > self.max_nodes {
            return Err(Error::LimitsExceeded(format!(
                "more than {} enumeration nodes",
                self.max_nodes
            )));
        }
        if self.prune {
            if let Some((best, _)) = &self.best {
                if bound(picked) >= *best {
                    return Ok(());
                }
            }
        }
        let depth = picked.len();
        if depth == self.regs.len() {
            if let Some(score) = leaf(picked) {
                if self.best.as_ref().is_none_or(|(b, _)| score < *b) {
                    self.best = Some((score, picked.clone()));
                }
            }
            return Ok(());
        }
        let reg = self.regs[depth];
        for k in 0..self.choices[depth].len() {
            let slot = self.choices[depth][k];
            load.add(reg, &slot, self.horizon);
            if !self.prune || load.within(self.index, reg, &slot, self.horizon) {
                picked.push(Some(slot));
                self.run(load, picked, bound, leaf)?;
                picked.pop();
            }
            load.remove(reg, &slot, self.horizon);
        }
        if !(self.prune && self.mandatory[depth]) {
            picked.push(None);
            self.run(load, picked, bound, leaf)?;
            picked.pop();
        }
        Ok(())
    }
}

fn to_schedule(regs: &[&Registration], picked: &[Option<MssSlot>], fixed: &[Assignment]) -> Schedule {
    let mut out = fixed.to_vec();
    for (reg, slot) in regs.iter().zip(picked) {
        if let Some(slot) = slot {
            out.push(assignment(reg, slot));
        }
    }
    Schedule::new(out)
}

/// Lexicographically optimal schedule of a tiny instance.
pub fn brute_force_schedule(instance: &Instance, limits: &OracleLimits) -> Result<(ObjectiveVector, Schedule), Error> {
    let report = validate_instance(instance);
    if !report.is_ok() {
        return Err(Error::InvalidInstance(report));
    }
    check_limits(limits, instance.registrations.len(), instance.mss.len())?;
    let index = InstanceIndex::new(instance);
    let mut regs: Vec<&Registration> = instance.registrations.iter().collect();
    regs.sort_by_key(|r| (r.priority, r.id));
    let choices: Vec<Vec<MssSlot>> = regs
        .iter()
        .map(|r| {
            instance
                .mss
                .iter()
                .filter(|m| m.specialty == r.specialty)
                .copied()
                .collect()
        })
        .collect();

    let objective = |picked: &[Option<MssSlot>]| {
        let mut o = ObjectiveVector::default();
        for (reg, slot) in regs.iter().zip(picked) {
            if slot.is_none() {
                match reg.priority {
                    2 => o.unassigned_p2 += 1,
                    3 => o.unassigned_p3 += 1,
                    _ => {}
                }
            }
        }
        o
    };
    let leaf = |picked: &[Option<MssSlot>]| {
        let schedule = to_schedule(&regs, picked, &[]);
        if limits.prune {
            // The pruned search has already enforced every limit.
            Some(objective(picked))
        } else if check_schedule(instance, &schedule).is_empty() {
            Some(objective(picked))
        } else {
            None
        }
    };
    let mut e = Enumeration {
        index: &index,
        horizon: instance.horizon,
        regs: regs.clone(),
        choices,
        mandatory: regs.iter().map(|r| r.priority == 1).collect(),
        prune: limits.prune,
        nodes: 0,
        max_nodes: limits.max_states,
        best: None,
    };
    e.run(&mut Load::new(), &mut Vec::new(), &objective, &leaf)?;
    match e.best {
        Some((obj, picked)) => Ok((obj, to_schedule(&regs, &picked, &[]))),
        None => Err(Error::InfeasibleP1),
    }
}

/// Lexicographically optimal rescheduling of a tiny request.
pub fn brute_force_reschedule(
    request: &RescheduleRequest,
    limits: &OracleLimits,
) -> Result<(RescheduleObjective, Schedule), Error> {
    let residual = residual_instance(request)?;
    let index = InstanceIndex::new(&residual);
    let original = InstanceIndex::new(&request.instance);
    let postponed = |id| request.postponed.contains(&id);

    let mut fixed = Vec::new();
    let mut regs: Vec<&Registration> = Vec::new();
    for a in &request.old_schedule.assignments {
        let Some(reg) = original.registration(a.registration_id) else {
            continue;
        };
        let in_scope = request.specialty_filter.is_none_or(|f| f == reg.specialty);
        if postponed(a.registration_id) || (in_scope && request.reschedule_days.contains(a.day)) {
            regs.push(reg);
        } else if a.day > request.disruption_day {
            fixed.push(*a);
        }
    }
    let slots: Vec<MssSlot> = residual
        .mss
        .iter()
        .filter(|m| request.reschedule_days.contains(m.day))
        .copied()
        .collect();
    check_limits(limits, regs.len(), slots.len())?;
    let choices: Vec<Vec<MssSlot>> = regs
        .iter()
        .map(|r| slots.iter().filter(|m| m.specialty == r.specialty).copied().collect())
        .collect();

    let mut load = Load::new();
    if limits.prune {
        for a in &fixed {
            let reg = index.registration(a.registration_id).expect("residual registration");
            let slot = MssSlot {
                or_id: a.or_id,
                session: a.session,
                specialty: reg.specialty,
                day: a.day,
            };
            load.add(reg, &slot, residual.horizon);
        }
    }

    let old_day = |id| request.old_schedule.find(id).map(|a| a.day).unwrap_or(0);
    let executed_high = request
        .old_schedule
        .assignments
        .iter()
        .filter(|a| a.day <= request.disruption_day && !postponed(a.registration_id) && a.priority <= 2)
        .count() as u32;
    // Partial objective: every term only grows as more registrations are decided.
    let bound = |picked: &[Option<MssSlot>]| {
        let mut o = RescheduleObjective {
            level4: executed_high,
            ..Default::default()
        };
        for (reg, slot) in regs.iter().zip(picked) {
            let old = old_day(reg.id);
            match slot {
                Some(s) => o.level1 += s.day.abs_diff(old),
                None if reg.priority <= 2 => o.level4 += 1,
                None if old == request.reschedule_days.last => o.level2 += 1,
                None => o.level3 += 1,
            }
        }
        o
    };
    let leaf = |picked: &[Option<MssSlot>]| {
        let schedule = to_schedule(&regs, picked, &fixed);
        if limits.prune {
            return Some(evaluate_reschedule_objective(request, &schedule));
        }
        match check_reschedule(request, &schedule) {
            Ok(v) if v.is_empty() => Some(evaluate_reschedule_objective(request, &schedule)),
            _ => None,
        }
    };
    let mut e = Enumeration {
        index: &index,
        horizon: residual.horizon,
        regs: regs.clone(),
        choices,
        mandatory: regs.iter().map(|r| postponed(r.id)).collect(),
        prune: limits.prune,
        nodes: 0,
        max_nodes: limits.max_states,
        best: None,
    };
    e.run(&mut load, &mut Vec::new(), &bound, &leaf)?;
    match e.best {
        Some((obj, picked)) => Ok((obj, to_schedule(&regs, &picked, &fixed))),
        None => Err(Error::InfeasiblePostponed(request.postponed.clone())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BedAvailability, RegistrationId, SessionCapacity};
    use alloc::vec;

    fn reg(id: u32, priority: u8, minutes: u32) -> Registration {
        Registration {
            id: RegistrationId(id),
            priority,
            surgery_duration: minutes,
            los_after: 0,
            specialty: WardId(1),
            icu_los: 0,
            admit_advance: 0,
        }
    }

    fn one_session(regs: Vec<Registration>) -> Instance {
        Instance {
            horizon: 1,
            registrations: regs,
            mss: vec![MssSlot {
                or_id: OrId(1),
                session: SessionId(1),
                specialty: WardId(1),
                day: 1,
            }],
            capacities: vec![SessionCapacity {
                or_id: OrId(1),
                session: SessionId(1),
                duration: 300,
            }],
            beds: vec![
                BedAvailability {
                    ward: WardId(0),
                    day: 1,
                    available: 1,
                },
                BedAvailability {
                    ward: WardId(1),
                    day: 1,
                    available: 5,
                },
            ],
        }
    }

    #[test]
    fn empty_instance() {
        let inst = one_session(vec![]);
        let (obj, s) = brute_force_schedule(&inst, &OracleLimits::default()).unwrap();
        assert_eq!(obj, ObjectiveVector::default());
        assert!(s.is_empty());
    }

    #[test]
    fn single_p2_is_assigned() {
        let inst = one_session(vec![reg(1, 2, 100)]);
        let (obj, s) = brute_force_schedule(&inst, &OracleLimits::default()).unwrap();
        assert_eq!(obj, ObjectiveVector::default());
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn hand_enumerated_three_registrations() {
        // Subsets of {P1 200, P2 150, P3 150} fitting 300 minutes and holding P1:
        // {P1} -> (1,1), the others exceed 300. Optimum (1,1).
        let inst = one_session(vec![reg(1, 1, 200), reg(2, 2, 150), reg(3, 3, 150)]);
        for limits in [OracleLimits::default(), OracleLimits::unpruned()] {
            let (obj, s) = brute_force_schedule(&inst, &limits).unwrap();
            assert_eq!(
                obj,
                ObjectiveVector {
                    unassigned_p2: 1,
                    unassigned_p3: 1
                }
            );
            assert_eq!(
                s.assigned_ids().into_iter().collect::<Vec<_>>(),
                vec![RegistrationId(1)]
            );
        }
        // With 100-minute P2 and P3 both fit next to P1.
        let inst = one_session(vec![reg(1, 1, 200), reg(2, 2, 50), reg(3, 3, 50)]);
        let (obj, _) = brute_force_schedule(&inst, &OracleLimits::default()).unwrap();
        assert_eq!(obj, ObjectiveVector::default());
    }

    #[test]
    fn infeasible_p1() {
        let inst = one_session(vec![reg(1, 1, 200), reg(2, 1, 200)]);
        assert_eq!(
            brute_force_schedule(&inst, &OracleLimits::default()),
            Err(Error::InfeasibleP1)
        );
        assert_eq!(
            brute_force_schedule(&inst, &OracleLimits::unpruned()),
            Err(Error::InfeasibleP1)
        );
    }

    #[test]
    fn limits_are_enforced() {
        let inst = one_session((1..=9).map(|i| reg(i, 3, 10)).collect());
        assert!(matches!(
            brute_force_schedule(&inst, &OracleLimits::default()),
            Err(Error::LimitsExceeded(_))
        ));
    }
}
