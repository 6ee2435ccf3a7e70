use orsched_core::generator::{tiny_instance, tiny_reschedule_request};
use orsched_core::oracle::{brute_force_reschedule, brute_force_schedule, OracleLimits};
use orsched_core::reschedule::{check_reschedule, describe_outcome, reschedule};
use orsched_core::solver::{solve, IterationClock, NoSink, SolverConfig};
use orsched_core::verifier::check_schedule;
use orsched_core::Error;

const ITERATIONS: u64 = 20_000;

#[test]
fn solver_matches_oracle_on_tiny_instances() {
    for seed in 0..200 {
        let inst = tiny_instance(seed);
        let oracle = brute_force_schedule(&inst, &OracleLimits::default());
        let solver = solve(
            &inst,
            &SolverConfig::iterations(seed, ITERATIONS),
            &IterationClock,
            &mut NoSink,
        );
        match (oracle, solver) {
            (Ok((best, sched)), Ok(out)) => {
                assert!(
                    check_schedule(&inst, &sched).is_empty(),
                    "seed {seed}: oracle schedule infeasible"
                );
                assert!(check_schedule(&inst, &out.best_schedule).is_empty(), "seed {seed}");
                assert_eq!(out.objective, best, "seed {seed}");
            }
            (Err(Error::InfeasibleP1), Err(Error::InfeasibleP1)) => {}
            (o, s) => panic!("seed {seed}: oracle {o:?} solver {s:?}"),
        }
    }
}

#[test]
fn pruned_oracle_agrees_with_full_enumeration() {
    let small = OracleLimits {
        max_registrations: 6,
        max_slots: 6,
        ..OracleLimits::default()
    };
    let full = OracleLimits { prune: false, ..small };
    let mut compared = 0;
    for seed in 0..200 {
        let inst = tiny_instance(seed);
        let Ok(pruned) = brute_force_schedule(&inst, &small).map(|r| r.0) else {
            continue;
        };
        let exhaustive = brute_force_schedule(&inst, &full).map(|r| r.0);
        assert_eq!(Ok(pruned), exhaustive, "seed {seed}");
        compared += 1;
    }
    assert!(compared > 50);
}

#[test]
fn rescheduler_matches_oracle_on_tiny_requests() {
    let mut with_postponed = 0;
    for seed in 0..100 {
        let req = tiny_reschedule_request(seed, ITERATIONS);
        with_postponed += usize::from(!req.postponed.is_empty());
        let oracle = brute_force_reschedule(&req, &OracleLimits::default());
        let ours = reschedule(
            &req,
            &SolverConfig::iterations(seed, ITERATIONS),
            &IterationClock,
            &mut NoSink,
        );
        match (oracle, ours) {
            (Ok((best, sched)), Ok(out)) => {
                assert!(check_reschedule(&req, &sched).unwrap().is_empty(), "seed {seed}");
                assert!(
                    check_reschedule(&req, &out.new_schedule).unwrap().is_empty(),
                    "seed {seed}"
                );
                assert_eq!(out.objective, best, "seed {seed}");
                let described = describe_outcome(&req, &out.new_schedule).unwrap();
                assert_eq!(
                    (&described.dropped, described.level4_offset),
                    (&out.dropped, out.level4_offset)
                );
                assert_eq!(describe_outcome(&req, &sched).unwrap().objective, best, "seed {seed}");
                for id in &req.postponed {
                    assert!(out.new_schedule.find(*id).is_some(), "seed {seed}");
                }
            }
            (Err(Error::InfeasiblePostponed(_)), Err(Error::InfeasiblePostponed(_))) => {}
            (o, s) => panic!("seed {seed}: oracle {o:?} rescheduler {s:?}"),
        }
    }
    assert!(with_postponed >= 90, "{with_postponed}");
}

#[test]
fn pruned_reschedule_oracle_agrees_with_full_enumeration() {
    let full = OracleLimits::unpruned();
    for seed in 0..40 {
        let req = tiny_reschedule_request(seed, ITERATIONS);
        if req.old_schedule.len() > 6 {
            continue;
        }
        let a = brute_force_reschedule(&req, &OracleLimits::default()).map(|r| r.0);
        let b = brute_force_reschedule(&req, &full).map(|r| r.0);
        match (a, b) {
            (Err(Error::InfeasiblePostponed(_)), Err(Error::InfeasiblePostponed(_))) => {}
            (a, b) => assert_eq!(a, b, "seed {seed}"),
        }
    }
}
