//! Instance and schedule data model.
//!
//! Identifiers are plain non-negative integers wrapped in newtypes. Durations
//! are integer minutes and stays are integer days; days are numbered from 1 to
//! the planning horizon.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

/// A planning day, `1..=horizon`.
pub type Day = u32;

macro_rules! id_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(
            Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                fmt::Display::fmt(&self.0, f)
            }
        }

        impl From<u32> for $name {
            fn from(value: u32) -> Self {
                Self(value)
            }
        }
    };
}

id_newtype!(
    /// Identifier of a waiting-list entry.
    RegistrationId
);
id_newtype!(
    /// Identifier of an operating room.
    OrId
);
id_newtype!(
    /// Identifier of a session within a day (e.g. morning / afternoon).
    SessionId
);
id_newtype!(
    /// A bed pool: `0` is the ICU, any other value is the ward of that specialty.
    WardId
);

impl WardId {
    pub const ICU: WardId = WardId(0);

    pub fn is_icu(self) -> bool {
        self.0 == 0
    }
}

/// One waiting-list entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Registration {
    pub id: RegistrationId,
    /// 1 (must be scheduled), 2 or 3.
    pub priority: u8,
    /// Predicted surgery length in minutes.
    pub surgery_duration: u32,
    /// Days after surgery, ICU days included.
    pub los_after: u32,
    /// Specialty, which is also the ward the patient is admitted to.
    pub specialty: WardId,
    /// Days in the ICU directly after surgery.
    pub icu_los: u32,
    /// Days in the ward before the surgery day.
    pub admit_advance: u32,
}

/// Master surgical schedule entry: an OR session given to a specialty on a day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MssSlot {
    pub or_id: OrId,
    pub session: SessionId,
    pub specialty: WardId,
    pub day: Day,
}

/// Length in minutes of a session of an operating room.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionCapacity {
    pub or_id: OrId,
    pub session: SessionId,
    pub duration: u32,
}

/// Number of free beds of a ward (or the ICU) on a day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BedAvailability {
    pub ward: WardId,
    pub day: Day,
    pub available: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Instance {
    pub horizon: u32,
    pub registrations: Vec<Registration>,
    pub mss: Vec<MssSlot>,
    pub capacities: Vec<SessionCapacity>,
    pub beds: Vec<BedAvailability>,
}

/// Number of registrations in each priority class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PriorityCensus {
    pub total_p1: u32,
    pub total_p2: u32,
    pub total_p3: u32,
}

impl PriorityCensus {
    pub fn of(instance: &Instance) -> Self {
        let mut census = Self::default();
        for reg in &instance.registrations {
            match reg.priority {
                1 => census.total_p1 += 1,
                2 => census.total_p2 += 1,
                3 => census.total_p3 += 1,
                _ => {}
            }
        }
        census
    }

    pub fn total(&self) -> u32 {
        self.total_p1 + self.total_p2 + self.total_p3
    }
}

/// Registration `registration_id` is operated in `session` of `or_id` on `day`.
///
/// `priority` duplicates the registration's priority; the verifier checks that
/// both agree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Assignment {
    pub registration_id: RegistrationId,
    pub priority: u8,
    pub or_id: OrId,
    pub session: SessionId,
    pub day: Day,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Schedule {
    pub assignments: Vec<Assignment>,
}

impl Schedule {
    pub fn new(mut assignments: Vec<Assignment>) -> Self {
        assignments.sort();
        Self { assignments }
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    /// Sorts assignments by registration id so that equal schedules serialize identically.
    pub fn normalize(&mut self) {
        self.assignments.sort();
    }

    pub fn assigned_ids(&self) -> BTreeSet<RegistrationId> {
        self.assignments.iter().map(|a| a.registration_id).collect()
    }

    pub fn find(&self, id: RegistrationId) -> Option<&Assignment> {
        self.assignments.iter().find(|a| a.registration_id == id)
    }
}

/// Lookup tables over an [`Instance`].
///
/// Later entries never overwrite earlier ones, so on invalid input with
/// duplicates the first entry wins; run [`crate::validate_instance`] first.
#[derive(Debug, Clone)]
pub struct InstanceIndex<'a> {
    pub instance: &'a Instance,
    registrations: BTreeMap<RegistrationId, usize>,
    slots: BTreeMap<(OrId, SessionId, Day), WardId>,
    capacities: BTreeMap<(OrId, SessionId), u32>,
    beds: BTreeMap<(WardId, Day), u32>,
}

impl<'a> InstanceIndex<'a> {
    pub fn new(instance: &'a Instance) -> Self {
        let mut registrations = BTreeMap::new();
        for (i, reg) in instance.registrations.iter().enumerate() {
            registrations.entry(reg.id).or_insert(i);
        }
        let mut slots = BTreeMap::new();
        for slot in &instance.mss {
            slots
                .entry((slot.or_id, slot.session, slot.day))
                .or_insert(slot.specialty);
        }
        let mut capacities = BTreeMap::new();
        for cap in &instance.capacities {
            capacities.entry((cap.or_id, cap.session)).or_insert(cap.duration);
        }
        let mut beds = BTreeMap::new();
        for bed in &instance.beds {
            beds.entry((bed.ward, bed.day)).or_insert(bed.available);
        }
        Self {
            instance,
            registrations,
            slots,
            capacities,
            beds,
        }
    }

    pub fn registration(&self, id: RegistrationId) -> Option<&'a Registration> {
        self.registrations.get(&id).map(|&i| &self.instance.registrations[i])
    }

    /// Specialty owning `(or_id, session)` on `day`, if that slot is in the MSS.
    pub fn slot_specialty(&self, or_id: OrId, session: SessionId, day: Day) -> Option<WardId> {
        self.slots.get(&(or_id, session, day)).copied()
    }

    pub fn capacity(&self, or_id: OrId, session: SessionId) -> Option<u32> {
        self.capacities.get(&(or_id, session)).copied()
    }

    pub fn beds(&self, ward: WardId, day: Day) -> Option<u32> {
        self.beds.get(&(ward, day)).copied()
    }

    /// Distinct MSS slots with their specialty, ordered by day, then OR, then session.
    pub fn slots_by_day(&self) -> Vec<(Day, OrId, SessionId, WardId)> {
        let mut out: Vec<_> = self.slots.iter().map(|(&(o, s, d), &sp)| (d, o, s, sp)).collect();
        out.sort();
        out
    }

    /// Every ward with a bed entry, ICU first.
    pub fn wards(&self) -> Vec<WardId> {
        let set: BTreeSet<WardId> = self.beds.keys().map(|&(w, _)| w).collect();
        set.into_iter().collect()
    }

    /// Total session minutes offered by the MSS.
    pub fn total_session_minutes(&self) -> u64 {
        self.slots
            .keys()
            .map(|&(o, s, _)| u64::from(self.capacity(o, s).unwrap_or(0)))
            .sum()
    }
}
