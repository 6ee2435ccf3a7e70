//! Anytime lexicographic solver for the scheduling problem.
//!
//! Every priority-1 registration must be scheduled; beyond that the solver
//! minimizes unassigned priority-2 registrations, then unassigned priority-3
//! ones. Search is a greedy construction followed by randomized local search
//! (insert, eject-and-insert, relocate, swap, replace) that only accepts
//! non-worsening moves, restarting from a reshuffled construction when it
//! stalls. Each strictly better schedule is handed to an [`IncumbentSink`].

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cost::Cost;
use crate::engine::{self, Exhaust, ItemSpec, Problem, SearchParams};
use crate::error::Error;
use crate::model::{Instance, RegistrationId, Schedule};
use crate::validate::validate_instance;
use crate::verifier::ObjectiveVector;

/// Source of elapsed time and cancellation for a running search.
pub trait Clock {
    /// Seconds since the search started.
    fn elapsed(&self) -> f64;

    fn cancelled(&self) -> bool {
        false
    }
}

/// A clock that never advances: only the iteration budget stops the search.
#[derive(Debug, Clone, Copy, Default)]
pub struct IterationClock;

impl Clock for IterationClock {
    fn elapsed(&self) -> f64 {
        0.0
    }
}

/// Receives each strictly improving feasible schedule.
pub trait IncumbentSink<O> {
    fn incumbent(&mut self, schedule: &Schedule, objective: &O, elapsed: f64);
}

impl<O, F: FnMut(&Schedule, &O, f64)> IncumbentSink<O> for F {
    fn incumbent(&mut self, schedule: &Schedule, objective: &O, elapsed: f64) {
        self(schedule, objective, elapsed)
    }
}

/// Sink that drops every incumbent.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoSink;

impl<O> IncumbentSink<O> for NoSink {
    fn incumbent(&mut self, _: &Schedule, _: &O, _: f64) {}
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Wall-clock budget in seconds.
    pub time_limit: f64,
    pub seed: u64,
    /// Iterations without improvement before a restart.
    pub max_stall_iterations: u64,
    pub emit_incumbents: bool,
    /// Iteration budget; makes runs reproducible independently of machine speed.
    pub max_iterations: Option<u64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            time_limit: 60.0,
            seed: 0,
            max_stall_iterations: 2_000,
            emit_incumbents: true,
            max_iterations: None,
        }
    }
}

impl SolverConfig {
    /// Deterministic configuration stopped by `iterations` only.
    pub fn iterations(seed: u64, iterations: u64) -> Self {
        Self {
            time_limit: f64::INFINITY,
            seed,
            max_iterations: Some(iterations),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub best_schedule: Schedule,
    pub objective: ObjectiveVector,
    /// Every registration was scheduled, so no better schedule exists.
    pub proved_optimal: bool,
    pub incumbents_emitted: u64,
    pub iterations: u64,
    pub elapsed: f64,
}

/// Node budget for the exhaustive priority-1 placement used as a proof.
const EXACT_P1_NODES: u64 = 200_000;
const EXACT_P1_NODES_FINAL: u64 = 2_000_000;

fn priority_cost(priority: u8) -> Cost {
    match priority {
        1 => Cost::level(0, 1),
        2 => Cost::level(2, 1),
        _ => Cost::level(3, 1),
    }
}

fn objective_of(cost: Cost) -> ObjectiveVector {
    ObjectiveVector {
        unassigned_p2: cost.0[2] as u32,
        unassigned_p3: cost.0[3] as u32,
    }
}

fn scheduling_problem(instance: &Instance) -> Result<Problem, Error> {
    let report = validate_instance(instance);
    if !report.is_ok() {
        return Err(Error::InvalidInstance(report));
    }
    let items = instance
        .registrations
        .iter()
        .map(|r| ItemSpec::flat(r.clone(), priority_cost(r.priority), instance.horizon))
        .collect();
    Ok(Problem::new(instance, items, Vec::new()))
}

fn p1_items(p: &Problem) -> Vec<u32> {
    (0..p.item_count() as u32)
        .filter(|&i| p.items[i as usize].registration.priority == 1)
        .collect()
}

/// Result of the greedy construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Construction {
    pub schedule: Schedule,
    /// Priority-1 registrations the greedy pass could not place.
    pub unplaced_p1: Vec<RegistrationId>,
}

/// Greedy schedule: registrations by priority (1, 2, 3), by id within a
/// priority unless `shuffle_seed` permutes them, each into the first slot
/// (day, OR, session order) with enough minutes and beds.
pub fn construct_initial(instance: &Instance, shuffle_seed: Option<u64>) -> Result<Construction, Error> {
    let p = scheduling_problem(instance)?;
    let mut rng = shuffle_seed.map(ChaCha8Rng::seed_from_u64);
    let order = engine::construction_order(&p, rng.as_mut());
    let state = engine::construct(&p, &order);
    let placement = state.placement();
    let unplaced_p1 = p1_items(&p)
        .into_iter()
        .filter(|&i| placement[i as usize].is_none())
        .map(|i| p.items[i as usize].registration.id)
        .collect();
    Ok(Construction {
        schedule: p.to_schedule(&placement),
        unplaced_p1,
    })
}

/// Runs local search from `schedule` for `iterations` moves without restarts.
///
/// Assignments that do not match a slot of the instance or do not fit are
/// dropped first. The result is never worse than that starting point.
pub fn improve(instance: &Instance, schedule: &Schedule, seed: u64, iterations: u64) -> Result<Schedule, Error> {
    let p = scheduling_problem(instance)?;
    let mut placement = alloc::vec![None; p.item_count()];
    for a in &schedule.assignments {
        let item = p.items.iter().position(|it| it.registration.id == a.registration_id);
        if let (Some(item), Some(slot)) = (item, p.slot_index(a.or_id, a.session, a.day)) {
            placement[item] = Some(slot);
        }
    }
    let start = engine::from_placement(&p, &placement);
    let params = SearchParams {
        seed,
        time_limit: f64::INFINITY,
        max_iterations: Some(iterations),
        max_stall: u64::MAX,
        restarts: false,
    };
    let result = engine::search(&p, start, &params, &IterationClock, &mut |_, _| {});
    Ok(p.to_schedule(&result.best))
}

/// Solves `instance` under `config`, streaming improving incumbents to `sink`.
pub fn solve(
    instance: &Instance,
    config: &SolverConfig,
    clock: &dyn Clock,
    sink: &mut dyn IncumbentSink<ObjectiveVector>,
) -> Result<SolveOutcome, Error> {
    let p = scheduling_problem(instance)?;
    let hard = p1_items(&p);
    if !engine::unplaceable_alone(&p, &hard).is_empty() || engine::forced_overflow(&p, &hard) {
        return Err(Error::InfeasibleP1);
    }

    let order = engine::construction_order(&p, None);
    let mut start = engine::construct(&p, &order);
    if start.cost().hard() > 0 {
        match engine::place_all(&p, &hard, EXACT_P1_NODES) {
            Exhaust::Infeasible => return Err(Error::InfeasibleP1),
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
        if config.emit_incumbents {
            sink.incumbent(&p.to_schedule(placement), &objective_of(cost), clock.elapsed());
        }
    });

    if result.best_cost.hard() > 0 {
        return match engine::place_all(&p, &hard, EXACT_P1_NODES_FINAL) {
            Exhaust::Infeasible => Err(Error::InfeasibleP1),
            _ => Err(Error::TimeoutNoSolution),
        };
    }
    let best_schedule = p.to_schedule(&result.best);
    debug_assert!(crate::verifier::check_schedule(instance, &best_schedule).is_empty());
    Ok(SolveOutcome {
        best_schedule,
        objective: objective_of(result.best_cost),
        proved_optimal: result.reached_bound,
        incumbents_emitted: if config.emit_incumbents { emitted } else { 0 },
        iterations: result.iterations,
        elapsed: clock.elapsed(),
    })
}
