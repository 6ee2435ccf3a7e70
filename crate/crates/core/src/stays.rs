//! Bed occupancy implied by an assignment.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::model::{Day, Registration, RegistrationId, WardId};

/// One bed-day: registration `registration_id` occupies a bed of `place` on `day`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StayRecord {
    pub registration_id: RegistrationId,
    pub day: Day,
    pub place: WardId,
}

/// Bed-days of `registration` when operated on `surgery_day`.
///
/// Pre-operative ward days `D-A..D-1`, ICU days `D..D+ICU-1` and the remaining
/// ward days `D+ICU..D+LOS-1`. Days outside `1..=horizon` are dropped. Records
/// are returned in day order.
pub fn expand_stays(registration: &Registration, surgery_day: Day, horizon: u32) -> Vec<StayRecord> {
    let mut out = Vec::with_capacity((registration.admit_advance + registration.los_after) as usize);
    for_each_stay(registration, surgery_day, horizon, |day, place| {
        out.push(StayRecord {
            registration_id: registration.id,
            day,
            place,
        })
    });
    out
}

/// Calls `f(day, place)` for every bed-day of `registration`, in day order,
/// restricted to `1..=horizon`.
pub(crate) fn for_each_stay(
    registration: &Registration,
    surgery_day: Day,
    horizon: u32,
    mut f: impl FnMut(Day, WardId),
) {
    let d = i64::from(surgery_day);
    let advance = i64::from(registration.admit_advance);
    let icu = i64::from(registration.icu_los);
    let los = i64::from(registration.los_after);
    let last = i64::from(horizon);
    let ward = registration.specialty;

    let mut emit = |from: i64, to_inclusive: i64, place: WardId| {
        for day in from.max(1)..=to_inclusive.min(last) {
            f(day as Day, place);
        }
    };
    if advance > 0 {
        emit(d - advance, d - 1, ward);
    }
    if icu > 0 {
        emit(d, d + icu - 1, WardId::ICU);
    }
    if los > icu {
        emit(d + icu, d + los - 1, ward);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn reg(los_after: u32, icu_los: u32, admit_advance: u32, specialty: u32) -> Registration {
        Registration {
            id: RegistrationId(7),
            priority: 2,
            surgery_duration: 60,
            los_after,
            specialty: WardId(specialty),
            icu_los,
            admit_advance,
        }
    }

    fn pairs(records: &[StayRecord]) -> Vec<(u32, u32)> {
        records.iter().map(|r| (r.place.0, r.day)).collect()
    }

    #[test]
    fn pre_op_icu_and_ward_days() {
        let got = expand_stays(&reg(3, 1, 1, 2), 3, 5);
        assert_eq!(pairs(&got), vec![(2, 2), (0, 3), (2, 4), (2, 5)]);
    }

    #[test]
    fn ward_only_single_day() {
        let got = expand_stays(&reg(1, 0, 0, 4), 5, 5);
        assert_eq!(pairs(&got), vec![(4, 5)]);
    }

    #[test]
    fn pre_op_day_before_horizon_is_dropped() {
        // los == icu, so there is no ward stay after the ICU.
        let got = expand_stays(&reg(2, 2, 1, 1), 1, 5);
        assert_eq!(pairs(&got), vec![(0, 1), (0, 2)]);
    }

    #[test]
    fn stays_after_horizon_are_dropped() {
        let got = expand_stays(&reg(8, 0, 1, 1), 4, 5);
        assert_eq!(pairs(&got), vec![(1, 3), (1, 4), (1, 5)]);
    }

    #[test]
    fn zero_los_occupies_nothing_after_surgery() {
        assert!(expand_stays(&reg(0, 0, 0, 3), 2, 5).is_empty());
    }
}
