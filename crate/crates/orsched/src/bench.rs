//! Repeated seeded runs of one scenario, reported per run and on average.

use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use orsched_core::generator::{generate_instance, ScenarioSpec};
use orsched_core::solver::{solve, IncumbentSink};
use orsched_core::verifier::{check_schedule, compute_metrics, Metrics, ObjectiveVector, PriorityCount};
use orsched_core::{Clock, Error, Instance, Schedule};
use serde::{Deserialize, Serialize};

use crate::clock::{Budget, WallClock};
use crate::files::FORMAT_VERSION;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Solved,
    /// No schedule can assign every priority-1 registration.
    InfeasibleP1,
    TimeoutNoSolution,
    /// The returned schedule failed verification.
    Violations,
    InvalidInstance,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Solved => "solved",
            RunStatus::InfeasibleP1 => "infeasible-p1",
            RunStatus::TimeoutNoSolution => "timeout-no-solution",
            RunStatus::Violations => "violations",
            RunStatus::InvalidInstance => "invalid-instance",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub scenario: String,
    pub days: u32,
    pub seed: u64,
    pub status: RunStatus,
    /// Priorities 1, 2 and 3, then all together.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub assigned: Option<[PriorityCount; 4]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub or_time_efficiency: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bed_occupancy_efficiency: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective: Option<ObjectiveVector>,
    /// OR time efficiency of the first feasible schedule.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_or_time_efficiency: Option<f64>,
    pub proved_optimal: bool,
    pub violations: usize,
    pub iterations: u64,
    pub elapsed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub runs: usize,
    pub solved: usize,
    pub infeasible_p1: usize,
    pub failed: usize,
    /// Every solved run assigned all priority-1 registrations.
    pub all_p1_assigned: bool,
    /// Means over solved runs.
    pub mean_or_time_efficiency: Option<f64>,
    pub mean_bed_occupancy_efficiency: Option<f64>,
    pub mean_elapsed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub format: u32,
    pub scenario: String,
    pub days: u32,
    pub budget: Budget,
    pub rows: Vec<BenchRow>,
    pub summary: BenchSummary,
}

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub spec: ScenarioSpec,
    pub days: u32,
    pub seeds: Vec<u64>,
    pub budget: Budget,
    /// Runs solved at the same time.
    pub jobs: usize,
}

/// Outcome of one run, with the schedule when one was found.
#[derive(Debug, Clone)]
pub struct BenchRun {
    pub row: BenchRow,
    pub instance: Instance,
    pub schedule: Option<Schedule>,
}

fn with_total(m: &Metrics) -> [PriorityCount; 4] {
    let [p1, p2, p3] = m.assigned_by_priority;
    let total = PriorityCount {
        assigned: p1.assigned + p2.assigned + p3.assigned,
        total: p1.total + p2.total + p3.total,
    };
    [p1, p2, p3, total]
}

/// Generates the instance of `seed` and solves it with the same seed.
pub fn run_one(spec: &ScenarioSpec, days: u32, seed: u64, budget: Budget) -> BenchRun {
    let instance = generate_instance(spec, days, seed).instance;
    let mut first: Option<Schedule> = None;
    let mut sink = |s: &Schedule, _: &ObjectiveVector, _: f64| {
        if first.is_none() {
            first = Some(s.clone());
        }
    };
    let clock = WallClock::start();
    let result = solve(
        &instance,
        &budget.config(seed),
        &clock,
        &mut sink as &mut dyn IncumbentSink<_>,
    );
    let elapsed = clock.elapsed();
    let mut row = BenchRow {
        scenario: spec.name.clone(),
        days,
        seed,
        status: RunStatus::Solved,
        assigned: None,
        or_time_efficiency: None,
        bed_occupancy_efficiency: None,
        objective: None,
        initial_or_time_efficiency: None,
        proved_optimal: false,
        violations: 0,
        iterations: 0,
        elapsed,
    };
    let outcome = match result {
        Ok(o) => o,
        Err(e) => {
            row.status = match e {
                Error::InfeasibleP1 => RunStatus::InfeasibleP1,
                Error::TimeoutNoSolution => RunStatus::TimeoutNoSolution,
                _ => RunStatus::InvalidInstance,
            };
            return BenchRun {
                row,
                instance,
                schedule: None,
            };
        }
    };
    row.iterations = outcome.iterations;
    row.proved_optimal = outcome.proved_optimal;
    row.objective = Some(outcome.objective);
    let violations = check_schedule(&instance, &outcome.best_schedule);
    if violations.is_empty() {
        let m = compute_metrics(&instance, &outcome.best_schedule).expect("verified schedule");
        row.assigned = Some(with_total(&m));
        row.or_time_efficiency = Some(m.or_time_efficiency);
        row.bed_occupancy_efficiency = Some(m.bed_occupancy_efficiency);
        row.initial_or_time_efficiency = first
            .and_then(|s| compute_metrics(&instance, &s).ok())
            .map(|m| m.or_time_efficiency);
    } else {
        row.status = RunStatus::Violations;
        row.violations = violations.len();
    }
    BenchRun {
        row,
        instance,
        schedule: Some(outcome.best_schedule),
    }
}

/// Runs every seed, `jobs` at a time; results are ordered like `seeds`.
pub fn run_all(options: &BenchOptions) -> Vec<BenchRun> {
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<BenchRun>>> = Mutex::new(vec![None; options.seeds.len()]);
    std::thread::scope(|scope| {
        for _ in 0..options.jobs.clamp(1, options.seeds.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&seed) = options.seeds.get(i) else {
                    break;
                };
                let run = run_one(&options.spec, options.days, seed, options.budget);
                results.lock().expect("bench results")[i] = Some(run);
            });
        }
    });
    results
        .into_inner()
        .expect("bench results")
        .into_iter()
        .map(|r| r.expect("every seed ran"))
        .collect()
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub fn summarize(rows: &[BenchRow]) -> BenchSummary {
    let solved: Vec<&BenchRow> = rows.iter().filter(|r| r.status == RunStatus::Solved).collect();
    BenchSummary {
        runs: rows.len(),
        solved: solved.len(),
        infeasible_p1: rows.iter().filter(|r| r.status == RunStatus::InfeasibleP1).count(),
        failed: rows
            .iter()
            .filter(|r| !matches!(r.status, RunStatus::Solved | RunStatus::InfeasibleP1))
            .count(),
        all_p1_assigned: solved
            .iter()
            .all(|r| r.assigned.is_some_and(|a| a[0].assigned == a[0].total)),
        mean_or_time_efficiency: mean(solved.iter().filter_map(|r| r.or_time_efficiency)),
        mean_bed_occupancy_efficiency: mean(solved.iter().filter_map(|r| r.bed_occupancy_efficiency)),
        mean_elapsed: mean(rows.iter().map(|r| r.elapsed)).unwrap_or(0.0),
    }
}

pub fn report(options: &BenchOptions, runs: &[BenchRun]) -> BenchmarkReport {
    let rows: Vec<BenchRow> = runs.iter().map(|r| r.row.clone()).collect();
    BenchmarkReport {
        format: FORMAT_VERSION,
        scenario: options.spec.name.clone(),
        days: options.days,
        budget: options.budget,
        summary: summarize(&rows),
        rows,
    }
}

pub fn run_bench(options: &BenchOptions) -> BenchmarkReport {
    report(options, &run_all(options))
}

fn ratio(c: PriorityCount) -> String {
    format!("{}/{}", c.assigned, c.total)
}

fn percent(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_owned(), |v| format!("{:.1}%", v * 100.0))
}

/// Aligned text table: one row per seed, then the means.
pub fn render_text(report: &BenchmarkReport) -> String {
    let header = [
        "seed", "status", "P1", "P2", "P3", "total", "OR eff.", "bed eff.", "time (s)",
    ];
    let mut lines: Vec<[String; 9]> = Vec::new();
    for r in &report.rows {
        let counts = r
            .assigned
            .map_or_else(|| std::array::from_fn(|_| "-".to_owned()), |a| a.map(ratio));
        let [p1, p2, p3, total] = counts;
        lines.push([
            r.seed.to_string(),
            r.status.as_str().to_owned(),
            p1,
            p2,
            p3,
            total,
            percent(r.or_time_efficiency),
            percent(r.bed_occupancy_efficiency),
            format!("{:.1}", r.elapsed),
        ]);
    }
    let s = &report.summary;
    lines.push([
        "mean".to_owned(),
        format!("{}/{} solved", s.solved, s.runs),
        String::new(),
        String::new(),
        String::new(),
        String::new(),
        percent(s.mean_or_time_efficiency),
        percent(s.mean_bed_occupancy_efficiency),
        format!("{:.1}", s.mean_elapsed),
    ]);

    let mut widths = header.map(str::len);
    for line in &lines {
        for (w, cell) in widths.iter_mut().zip(line) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = format!(
        "Scenario {}, {} days, {} runs, budget {}\n",
        report.scenario,
        report.days,
        report.rows.len(),
        report.budget
    );
    let mut push = |cells: &[String]| {
        let row: Vec<String> = cells
            .iter()
            .zip(widths)
            .enumerate()
            .map(|(i, (c, w))| if i == 1 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        let _ = writeln!(out, "{}", row.join("  ").trim_end());
    };
    push(&header.map(str::to_owned));
    for line in &lines {
        push(line);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use orsched_core::generator::ScenarioName;

    fn options(seeds: Vec<u64>, jobs: usize) -> BenchOptions {
        BenchOptions {
            spec: ScenarioSpec::preset(ScenarioName::A),
            days: 1,
            seeds,
            budget: Budget::Iterations(3_000),
            jobs,
        }
    }

    #[test]
    fn rows_follow_seed_order_whatever_the_concurrency() {
        let serial = run_bench(&options(vec![4, 1, 3], 1));
        let parallel = run_bench(&options(vec![4, 1, 3], 3));
        let seeds: Vec<u64> = parallel.rows.iter().map(|r| r.seed).collect();
        assert_eq!(seeds, [4, 1, 3]);
        let strip =
            |r: &BenchmarkReport| -> Vec<_> { r.rows.iter().map(|r| (r.seed, r.assigned, r.objective)).collect() };
        assert_eq!(strip(&serial), strip(&parallel));
    }

    #[test]
    fn summary_averages_solved_runs_only() {
        let report = run_bench(&options(vec![0, 1], 1));
        let s = &report.summary;
        assert_eq!((s.runs, s.solved, s.failed), (2, 2, 0));
        assert!(s.all_p1_assigned);
        let expected = (report.rows[0].or_time_efficiency.unwrap() + report.rows[1].or_time_efficiency.unwrap()) / 2.0;
        assert!((s.mean_or_time_efficiency.unwrap() - expected).abs() < 1e-12);

        let mut rows = report.rows.clone();
        rows[1].status = RunStatus::InfeasibleP1;
        rows[1].or_time_efficiency = None;
        let s = summarize(&rows);
        assert_eq!((s.solved, s.infeasible_p1), (1, 1));
        assert_eq!(s.mean_or_time_efficiency, rows[0].or_time_efficiency);
    }

    #[test]
    fn text_report_has_one_line_per_run_plus_mean() {
        let report = run_bench(&options(vec![0, 1, 2], 1));
        let text = render_text(&report);
        assert_eq!(text.lines().count(), 1 + 1 + 3 + 1);
        assert!(text.lines().last().unwrap().starts_with("mean"));
        let p1 = report.rows[0].assigned.unwrap()[0];
        assert!(text.contains(&format!("{}/{}", p1.total, p1.total)));
    }
}
