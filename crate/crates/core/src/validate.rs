//! Structural validation of instances.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::model::{Instance, WardId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InstanceViolationCode {
    ZeroHorizon,
    PriorityOutOfRange,
    IcuExceedsLos,
    ZeroSurgeryDuration,
    SpecialtyIsIcu,
    DuplicateRegistration,
    DuplicateSlot,
    SlotDayOutOfRange,
    MissingCapacity,
    DuplicateCapacity,
    ZeroCapacity,
    DuplicateBeds,
    BedDayOutOfRange,
    MissingBeds,
}

impl InstanceViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::ZeroHorizon => "zero-horizon",
            Self::PriorityOutOfRange => "priority-out-of-range",
            Self::IcuExceedsLos => "icu-exceeds-los",
            Self::ZeroSurgeryDuration => "zero-surgery-duration",
            Self::SpecialtyIsIcu => "specialty-is-icu",
            Self::DuplicateRegistration => "duplicate-registration",
            Self::DuplicateSlot => "duplicate-slot",
            Self::SlotDayOutOfRange => "slot-day-out-of-range",
            Self::MissingCapacity => "missing-capacity",
            Self::DuplicateCapacity => "duplicate-capacity",
            Self::ZeroCapacity => "zero-capacity",
            Self::DuplicateBeds => "duplicate-beds",
            Self::BedDayOutOfRange => "bed-day-out-of-range",
            Self::MissingBeds => "missing-beds",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceViolation {
    pub code: InstanceViolationCode,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<InstanceViolation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, code: InstanceViolationCode) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }

    fn push(&mut self, code: InstanceViolationCode, detail: String) {
        self.violations.push(InstanceViolation { code, detail });
    }
}

/// Reports every structural problem of `instance`; an empty report means every
/// lookup made by the verifier, solver and rescheduler is defined.
pub fn validate_instance(instance: &Instance) -> ValidationReport {
    use InstanceViolationCode as C;

    let mut report = ValidationReport::default();
    let horizon = instance.horizon;
    if horizon == 0 {
        report.push(C::ZeroHorizon, "horizon must be at least one day".into());
    }

    let mut ids = BTreeSet::new();
    let mut wards = BTreeSet::new();
    wards.insert(WardId::ICU);
    for reg in &instance.registrations {
        if !ids.insert(reg.id) {
            report.push(C::DuplicateRegistration, format!("registration {}", reg.id));
        }
        if !(1..=3).contains(&reg.priority) {
            report.push(
                C::PriorityOutOfRange,
                format!("registration {} has priority {}", reg.id, reg.priority),
            );
        }
        if reg.icu_los > reg.los_after {
            report.push(
                C::IcuExceedsLos,
                format!(
                    "registration {}: icu_los {} > los_after {}",
                    reg.id, reg.icu_los, reg.los_after
                ),
            );
        }
        if reg.surgery_duration == 0 {
            report.push(C::ZeroSurgeryDuration, format!("registration {}", reg.id));
        }
        if reg.specialty.is_icu() {
            report.push(C::SpecialtyIsIcu, format!("registration {}", reg.id));
        } else {
            wards.insert(reg.specialty);
        }
    }

    let mut capacities = BTreeMap::new();
    for cap in &instance.capacities {
        if capacities.insert((cap.or_id, cap.session), cap.duration).is_some() {
            report.push(
                C::DuplicateCapacity,
                format!("or {} session {}", cap.or_id, cap.session),
            );
        }
        if cap.duration == 0 {
            report.push(C::ZeroCapacity, format!("or {} session {}", cap.or_id, cap.session));
        }
    }

    let mut slots = BTreeSet::new();
    for slot in &instance.mss {
        if !slots.insert((slot.or_id, slot.session, slot.day)) {
            report.push(
                C::DuplicateSlot,
                format!("or {} session {} day {}", slot.or_id, slot.session, slot.day),
            );
        }
        if slot.day == 0 || slot.day > horizon {
            report.push(
                C::SlotDayOutOfRange,
                format!("or {} session {} day {}", slot.or_id, slot.session, slot.day),
            );
        }
        if !capacities.contains_key(&(slot.or_id, slot.session)) {
            report.push(
                C::MissingCapacity,
                format!("or {} session {}", slot.or_id, slot.session),
            );
        }
    }

    let mut beds = BTreeSet::new();
    for bed in &instance.beds {
        if !beds.insert((bed.ward, bed.day)) {
            report.push(C::DuplicateBeds, format!("ward {} day {}", bed.ward, bed.day));
        }
        if bed.day == 0 || bed.day > horizon {
            report.push(C::BedDayOutOfRange, format!("ward {} day {}", bed.ward, bed.day));
        }
    }
    for &ward in &wards {
        for day in 1..=horizon {
            if !beds.contains(&(ward, day)) {
                report.push(C::MissingBeds, format!("ward {ward} day {day}"));
            }
        }
    }

    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::*;
    use alloc::vec;

    fn beds_for(wards: &[u32], horizon: u32, available: u32) -> Vec<BedAvailability> {
        let mut out = Vec::new();
        for &w in wards {
            for day in 1..=horizon {
                out.push(BedAvailability {
                    ward: WardId(w),
                    day,
                    available,
                });
            }
        }
        out
    }

    #[test]
    fn empty_instance_is_ok() {
        let inst = Instance {
            horizon: 5,
            beds: beds_for(&[0], 5, 3),
            ..Instance::default()
        };
        assert!(validate_instance(&inst).is_ok());
    }

    #[test]
    fn icu_longer_than_los_is_reported() {
        let inst = Instance {
            horizon: 5,
            registrations: vec![Registration {
                id: RegistrationId(1),
                priority: 2,
                surgery_duration: 90,
                los_after: 2,
                specialty: WardId(1),
                icu_los: 3,
                admit_advance: 0,
            }],
            beds: beds_for(&[0, 1], 5, 3),
            ..Instance::default()
        };
        let report = validate_instance(&inst);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].code, InstanceViolationCode::IcuExceedsLos);
        assert_eq!(report.violations[0].code.as_str(), "icu-exceeds-los");
    }

    #[test]
    fn missing_pieces_are_each_reported() {
        let inst = Instance {
            horizon: 2,
            registrations: vec![Registration {
                id: RegistrationId(1),
                priority: 4,
                surgery_duration: 0,
                los_after: 1,
                specialty: WardId(2),
                icu_los: 0,
                admit_advance: 0,
            }],
            mss: vec![MssSlot {
                or_id: OrId(1),
                session: SessionId(1),
                specialty: WardId(2),
                day: 3,
            }],
            capacities: vec![],
            beds: beds_for(&[0], 2, 1),
        };
        let report = validate_instance(&inst);
        for code in [
            InstanceViolationCode::PriorityOutOfRange,
            InstanceViolationCode::ZeroSurgeryDuration,
            InstanceViolationCode::SlotDayOutOfRange,
            InstanceViolationCode::MissingCapacity,
            InstanceViolationCode::MissingBeds,
        ] {
            assert!(report.has(code), "{code:?} missing from {report:?}");
        }
        // ward 2 lacks both days
        let missing = report
            .violations
            .iter()
            .filter(|v| v.code == InstanceViolationCode::MissingBeds)
            .count();
        assert_eq!(missing, 2);
    }
}
