//! Random instance generation for the three bed scenarios.
//!
//! Instances are reproducible: the random source is ChaCha8 seeded with the
//! 64-bit seed through `SeedableRng::seed_from_u64`, and draws happen in a
//! fixed order. Registrations are generated specialty by specialty; for each
//! one the draws are priority, surgery duration, length of stay, ICU flag and,
//! when flagged, ICU length of stay.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::model::{
    BedAvailability, Day, Instance, MssSlot, OrId, Registration, RegistrationId, Schedule, SessionCapacity, SessionId,
    WardId,
};
use crate::reschedule::RescheduleRequest;
use crate::solver::{solve, IterationClock, NoSink, SolverConfig};

pub const GENERATOR_VERSION: u32 = 1;

/// Per-specialty generation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecialtyGenParams {
    pub specialty: WardId,
    /// Registrations generated for a 5-day horizon; other horizons scale linearly.
    pub registrations_per_5day: u32,
    pub or_count: u32,
    pub surgery_mean: f64,
    pub surgery_std: f64,
    pub los_mean: f64,
    pub los_std: f64,
    pub icu_fraction: f64,
    pub icu_mean: f64,
    pub icu_std: f64,
    pub admit_advance: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ScenarioName {
    A,
    B,
    C,
}

impl ScenarioName {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "A" | "a" => Some(Self::A),
            "B" | "b" => Some(Self::B),
            "C" | "c" => Some(Self::C),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::A => "A",
            Self::B => "B",
            Self::C => "C",
        }
    }
}

/// Everything needed to generate instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    /// Beds per ward (ICU = 0) for days `1..=n`; longer horizons cycle through it.
    pub bed_table: Vec<BedAvailability>,
    pub specialty_params: Vec<SpecialtyGenParams>,
    /// Probability of priority 1, 2 and 3.
    pub priority_weights: [f64; 3],
    pub sessions_per_day: u32,
    pub session_minutes: u32,
}

/// Beds per ward and weekday for scenarios A, B and C. Row 0 is the ICU.
const BEDS_A: [[u32; 5]; 6] = [
    [40, 40, 40, 40, 40],
    [80, 80, 80, 80, 80],
    [58, 58, 58, 58, 58],
    [65, 65, 65, 65, 65],
    [57, 57, 57, 57, 57],
    [40, 40, 40, 40, 40],
];
const BEDS_B: [[u32; 5]; 6] = [
    [4, 4, 5, 5, 6],
    [20, 30, 40, 45, 50],
    [10, 15, 23, 30, 35],
    [10, 14, 21, 30, 35],
    [8, 10, 14, 16, 18],
    [10, 14, 20, 23, 25],
];
const BEDS_C: [[u32; 5]; 6] = [
    [4, 4, 5, 5, 6],
    [10, 15, 20, 25, 30],
    [7, 10, 11, 14, 18],
    [7, 10, 13, 16, 20],
    [4, 6, 8, 11, 13],
    [6, 9, 12, 15, 18],
];

/// (registrations per 5 days, ORs, surgery mean, std, LOS mean, std, ICU share,
/// ICU LOS mean, std, days admitted before surgery) for specialties 1 to 5.
type SpecialtyRow = (u32, u32, f64, f64, f64, f64, f64, f64, f64, u32);

const SPECIALTIES: [SpecialtyRow; 5] = [
    (80, 3, 124.0, 59.52, 7.91, 2.0, 0.10, 1.0, 1.0, 1),
    (70, 2, 99.0, 17.82, 9.81, 2.0, 0.10, 1.0, 1.0, 1),
    (70, 2, 134.0, 25.46, 11.06, 3.0, 0.10, 1.0, 1.0, 1),
    (60, 1, 95.0, 19.95, 6.36, 1.0, 0.10, 1.0, 1.0, 0),
    (70, 2, 105.0, 30.45, 2.48, 1.0, 0.10, 1.0, 1.0, 0),
];

pub fn default_specialty_params() -> Vec<SpecialtyGenParams> {
    SPECIALTIES
        .iter()
        .enumerate()
        .map(
            |(i, &(regs, ors, sm, ss, lm, ls, icu, im, is, adv))| SpecialtyGenParams {
                specialty: WardId(i as u32 + 1),
                registrations_per_5day: regs,
                or_count: ors,
                surgery_mean: sm,
                surgery_std: ss,
                los_mean: lm,
                los_std: ls,
                icu_fraction: icu,
                icu_mean: im,
                icu_std: is,
                admit_advance: adv,
            },
        )
        .collect()
}

fn bed_rows(rows: &[[u32; 5]; 6]) -> Vec<BedAvailability> {
    let mut out = Vec::with_capacity(30);
    for (ward, row) in rows.iter().enumerate() {
        for (d, &available) in row.iter().enumerate() {
            out.push(BedAvailability {
                ward: WardId(ward as u32),
                day: d as Day + 1,
                available,
            });
        }
    }
    out
}

impl ScenarioSpec {
    pub fn preset(name: ScenarioName) -> Self {
        let beds = match name {
            ScenarioName::A => &BEDS_A,
            ScenarioName::B => &BEDS_B,
            ScenarioName::C => &BEDS_C,
        };
        Self {
            name: String::from(name.as_str()),
            bed_table: bed_rows(beds),
            specialty_params: default_specialty_params(),
            priority_weights: [0.20, 0.40, 0.40],
            sessions_per_day: 2,
            session_minutes: 300,
        }
    }

    /// Number of days covered by the bed table.
    pub fn bed_table_days(&self) -> u32 {
        self.bed_table.iter().map(|b| b.day).max().unwrap_or(0)
    }
}

/// Draws from a normal distribution, rounds to the nearest integer and
/// rejects values below `lower_bound`. A zero (or invalid) `std` returns
/// `max(round(mean), lower_bound)`.
pub fn sample_truncated_normal<R: Rng + ?Sized>(mean: f64, std: f64, lower_bound: u32, rng: &mut R) -> u32 {
    let lower = i64::from(lower_bound);
    let Ok(normal) = Normal::new(mean, std) else {
        return (libm::round(mean) as i64).max(lower) as u32;
    };
    if std <= 0.0 {
        return (libm::round(mean) as i64).max(lower) as u32;
    }
    // Far below the bound rejection would never finish.
    for _ in 0..100_000 {
        let k = libm::round(normal.sample(rng)) as i64;
        if k >= lower {
            return k as u32;
        }
    }
    lower_bound
}

fn sample_priority<R: Rng + ?Sized>(weights: &[f64; 3], rng: &mut R) -> u8 {
    let total: f64 = weights.iter().sum();
    let u: f64 = rng.random::<f64>() * total;
    if u < weights[0] {
        1
    } else if u < weights[0] + weights[1] {
        2
    } else {
        3
    }
}

/// An instance plus what the generator had to assume to build it.
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub instance: Instance,
    /// The bed table was repeated to cover a horizon longer than itself.
    pub beds_cycled: bool,
    pub warnings: Vec<String>,
}

/// Registrations of one specialty for a `days`-long horizon and whether the
/// linear scaling was exact.
pub fn registrations_for(params: &SpecialtyGenParams, days: u32) -> (u32, bool) {
    let scaled = u64::from(params.registrations_per_5day) * u64::from(days);
    let exact = scaled % 5 == 0;
    (((scaled + 2) / 5) as u32, exact)
}

pub fn generate_instance(scenario: &ScenarioSpec, days: u32, seed: u64) -> Generated {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let days = days.max(1);
    let mut warnings = Vec::new();

    let mut mss = Vec::new();
    let mut capacities = Vec::new();
    let mut next_or = 1u32;
    for params in &scenario.specialty_params {
        for _ in 0..params.or_count {
            let or_id = OrId(next_or);
            next_or += 1;
            for s in 1..=scenario.sessions_per_day {
                capacities.push(SessionCapacity {
                    or_id,
                    session: SessionId(s),
                    duration: scenario.session_minutes,
                });
            }
            for day in 1..=days {
                for s in 1..=scenario.sessions_per_day {
                    mss.push(MssSlot {
                        or_id,
                        session: SessionId(s),
                        specialty: params.specialty,
                        day,
                    });
                }
            }
        }
    }
    mss.sort_by_key(|m| (m.day, m.or_id, m.session));

    let mut registrations = Vec::new();
    let mut next_id = 1u32;
    for params in &scenario.specialty_params {
        let (count, exact) = registrations_for(params, days);
        if !exact {
            warnings.push(format!(
                "specialty {}: {} registrations per 5 days do not scale exactly to {} days; rounded to {}",
                params.specialty, params.registrations_per_5day, days, count
            ));
        }
        for _ in 0..count {
            let priority = sample_priority(&scenario.priority_weights, &mut rng);
            let surgery = Normal::new(params.surgery_mean, params.surgery_std.max(0.0))
                .map(|n| libm::round(n.sample(&mut rng)))
                .unwrap_or(params.surgery_mean)
                .max(1.0) as u32;
            let los = sample_truncated_normal(params.los_mean, params.los_std, 1, &mut rng);
            let icu = if rng.random::<f64>() < params.icu_fraction {
                sample_truncated_normal(params.icu_mean, params.icu_std, 1, &mut rng).min(los)
            } else {
                0
            };
            registrations.push(Registration {
                id: RegistrationId(next_id),
                priority,
                surgery_duration: surgery,
                los_after: los,
                specialty: params.specialty,
                icu_los: icu,
                admit_advance: params.admit_advance,
            });
            next_id += 1;
        }
    }

    let table_days = scenario.bed_table_days().max(1);
    let beds_cycled = days > table_days;
    let mut beds = Vec::new();
    let mut wards: Vec<WardId> = scenario.bed_table.iter().map(|b| b.ward).collect();
    wards.sort();
    wards.dedup();
    for &ward in &wards {
        for day in 1..=days {
            let source_day = (day - 1) % table_days + 1;
            let available = scenario
                .bed_table
                .iter()
                .find(|b| b.ward == ward && b.day == source_day)
                .map(|b| b.available)
                .unwrap_or(0);
            beds.push(BedAvailability { ward, day, available });
        }
    }
    if beds_cycled {
        warnings.push(format!(
            "bed table covers {table_days} days; repeated to cover {days} days"
        ));
    }

    Generated {
        instance: Instance {
            horizon: days,
            registrations,
            mss,
            capacities,
            beds,
        },
        beds_cycled,
        warnings,
    }
}

/// A random instance small enough for the exhaustive oracle: at most 8
/// registrations, 2 ORs, 2 sessions and 2 days, with scarce beds.
pub fn tiny_instance(seed: u64) -> Instance {
    tiny(seed, 1 + (seed % 2) as u32, 8)
}

fn tiny(seed: u64, horizon: u32, max_regs: u32) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let ors = rng.random_range(1..=2u32);
    let sessions = rng.random_range(1..=2u32);
    let specialties = rng.random_range(1..=2u32);

    let mut capacities = Vec::new();
    for o in 1..=ors {
        for s in 1..=sessions {
            capacities.push(SessionCapacity {
                or_id: OrId(o),
                session: SessionId(s),
                duration: [120, 180, 240, 300][rng.random_range(0..4)],
            });
        }
    }
    let mut mss = Vec::new();
    for day in 1..=horizon {
        for o in 1..=ors {
            for s in 1..=sessions {
                if rng.random_bool(0.1) {
                    continue;
                }
                mss.push(MssSlot {
                    or_id: OrId(o),
                    session: SessionId(s),
                    specialty: WardId(rng.random_range(1..=specialties)),
                    day,
                });
            }
        }
    }

    let n = rng.random_range(1..=max_regs);
    let mut registrations = Vec::new();
    for id in 1..=n {
        let los = rng.random_range(0..=3u32);
        let icu = if los > 0 && rng.random_bool(0.25) {
            rng.random_range(1..=los.min(2))
        } else {
            0
        };
        registrations.push(Registration {
            id: RegistrationId(id),
            priority: sample_priority(&[0.2, 0.4, 0.4], &mut rng),
            surgery_duration: rng.random_range(3..=24u32) * 10,
            los_after: los,
            specialty: WardId(rng.random_range(1..=specialties)),
            icu_los: icu,
            admit_advance: rng.random_range(0..=1),
        });
    }

    let mut beds = Vec::new();
    for ward in 0..=specialties {
        for day in 1..=horizon {
            let available = if ward == 0 {
                rng.random_range(0..=2)
            } else {
                rng.random_range(0..=4)
            };
            beds.push(BedAvailability {
                ward: WardId(ward),
                day,
                available,
            });
        }
    }

    Instance {
        horizon,
        registrations,
        mss,
        capacities,
        beds,
    }
}

/// A tiny four-day instance used to derive small rescheduling requests.
pub fn tiny_reschedule_instance(seed: u64) -> Instance {
    tiny(seed, 4, 8)
}

/// A small rescheduling request: a tiny four-day instance, a schedule for it
/// found by the solver within `iterations` moves, and a random non-empty
/// subset of the day-2 assignments postponed to days 3 and 4. Instances whose
/// schedule leaves day 2 empty are redrawn (up to a bound). Priority-1
/// registrations are demoted to priority 2 when no schedule can hold them all.
pub fn tiny_reschedule_request(seed: u64, iterations: u64) -> RescheduleRequest {
    let mut last = None;
    for attempt in 0..32u64 {
        let sub = seed.wrapping_mul(32).wrapping_add(attempt);
        let (instance, schedule) = tiny_solved(sub, iterations);
        let day2: Vec<RegistrationId> = schedule
            .assignments
            .iter()
            .filter(|a| a.day == 2)
            .map(|a| a.registration_id)
            .collect();
        if day2.is_empty() {
            last = Some(RescheduleRequest::new(instance, schedule, Vec::new()));
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(sub ^ 0x5eed);
        let mut postponed: Vec<RegistrationId> = day2.iter().copied().filter(|_| rng.random_bool(0.6)).collect();
        if postponed.is_empty() {
            postponed.push(day2[rng.random_range(0..day2.len())]);
        }
        return RescheduleRequest::new(instance, schedule, postponed);
    }
    last.expect("at least one attempt")
}

fn tiny_solved(seed: u64, iterations: u64) -> (Instance, Schedule) {
    let mut instance = tiny_reschedule_instance(seed);
    let config = SolverConfig::iterations(seed, iterations);
    let schedule = match solve(&instance, &config, &IterationClock, &mut NoSink) {
        Ok(out) => out.best_schedule,
        Err(_) => {
            for r in &mut instance.registrations {
                r.priority = r.priority.max(2);
            }
            solve(&instance, &config, &IterationClock, &mut NoSink)
                .map(|o| o.best_schedule)
                .unwrap_or_default()
        }
    };
    (instance, schedule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::validate::validate_instance;

    #[test]
    fn degenerate_truncated_normal_rounds_the_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(sample_truncated_normal(7.91, 0.0, 1, &mut rng), 8);
        assert_eq!(sample_truncated_normal(0.2, 0.0, 1, &mut rng), 1);
    }

    #[test]
    fn scenario_a_five_days() {
        let g = generate_instance(&ScenarioSpec::preset(ScenarioName::A), 5, 11);
        let inst = &g.instance;
        assert!(validate_instance(inst).is_ok());
        assert_eq!(inst.registrations.len(), 350);
        let per: Vec<usize> = (1..=5)
            .map(|s| inst.registrations.iter().filter(|r| r.specialty == WardId(s)).count())
            .collect();
        assert_eq!(per, [80, 70, 70, 60, 70]);
        for day in 1..=5 {
            let b = inst.beds.iter().find(|b| b.ward == WardId(1) && b.day == day).unwrap();
            assert_eq!(b.available, 80);
        }
        assert!(!g.beds_cycled);
        assert!(g.warnings.is_empty());
    }

    #[test]
    fn one_day_counts() {
        let g = generate_instance(&ScenarioSpec::preset(ScenarioName::A), 1, 3);
        let per: Vec<usize> = (1..=5)
            .map(|s| {
                g.instance
                    .registrations
                    .iter()
                    .filter(|r| r.specialty == WardId(s))
                    .count()
            })
            .collect();
        assert_eq!(per, [16, 14, 14, 12, 14]);
    }

    #[test]
    fn long_horizons_cycle_the_bed_table() {
        let g = generate_instance(&ScenarioSpec::preset(ScenarioName::B), 7, 3);
        assert!(g.beds_cycled);
        let beds = |ward: u32, day: u32| {
            g.instance
                .beds
                .iter()
                .find(|b| b.ward == WardId(ward) && b.day == day)
                .unwrap()
                .available
        };
        assert_eq!(beds(1, 6), beds(1, 1));
        assert_eq!(beds(1, 7), 30);
        assert!(validate_instance(&g.instance).is_ok());
    }

    #[test]
    fn inexact_scaling_warns() {
        let mut spec = ScenarioSpec::preset(ScenarioName::A);
        spec.specialty_params[0].registrations_per_5day = 81;
        let g = generate_instance(&spec, 2, 0);
        assert_eq!(g.warnings.len(), 1);
        // 81 * 2 / 5 = 32.4
        assert_eq!(
            g.instance
                .registrations
                .iter()
                .filter(|r| r.specialty == WardId(1))
                .count(),
            32
        );
    }

    #[test]
    fn tiny_instances_are_valid_and_small() {
        for seed in 0..200 {
            let inst = tiny_instance(seed);
            assert!(validate_instance(&inst).is_ok(), "seed {seed}");
            assert!(inst.registrations.len() <= 8);
            assert!(inst.mss.len() <= 8);
            assert!(inst.horizon <= 2);
        }
    }
}
