//! `orsched` command line. Exit status: 0 on success, 1 on infeasibility or
//! verification failure, 2 on bad arguments or unreadable input.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use orsched_core::generator::{generate_instance, ScenarioName, ScenarioSpec};
use orsched_core::oracle::{brute_force_reschedule, brute_force_schedule, OracleLimits};
use orsched_core::reschedule::{describe_outcome, reschedule, DayRange, RescheduleObjective, RescheduleRequest};
use orsched_core::solver::{solve, IncumbentSink};
use orsched_core::verifier::{check_schedule, compute_metrics, Metrics, ObjectiveVector};
use orsched_core::{Error, RegistrationId, Schedule, WardId};
use serde::Serialize;

use crate::bench::{render_text, run_bench, BenchOptions};
use crate::clock::{Budget, WallClock};
use crate::files::{
    read_instance, read_schedule, to_json_bytes, write_json, FileError, GenerationMetadata, InstanceFile,
    RescheduleFile, ScheduleFile,
};
use crate::service::{self, ServiceConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "orsched",
    version,
    about = "Operating-room scheduling with ward and ICU beds"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a scenario instance.
    Generate(GenerateArgs),
    /// Schedule the registrations of an instance.
    Solve(SolveArgs),
    /// Re-plan after surgeries of the disruption day were postponed.
    Reschedule(RescheduleArgs),
    /// Check a schedule against the hard constraints of an instance.
    Verify(VerifyArgs),
    /// Generate and solve several seeded instances of a scenario.
    Bench(BenchArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

fn parse_scenario(s: &str) -> Result<ScenarioName, String> {
    ScenarioName::parse(s).ok_or_else(|| format!("unknown scenario {s:?} (expected A, B or C)"))
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_parser = parse_scenario)]
    pub scenario: ScenarioName,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(1..=366))]
    pub days: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BudgetArgs {
    /// Wall-clock limit in seconds.
    #[arg(long, default_value_t = 60.0)]
    pub timeout: f64,
    /// Stop after this many iterations instead of a time limit (reproducible).
    #[arg(long)]
    pub iterations: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Solve exhaustively instead; for tiny inputs only.
    #[arg(long)]
    pub oracle: bool,
}

impl BudgetArgs {
    fn budget(&self) -> Budget {
        match self.iterations {
            Some(n) => Budget::Iterations(n),
            None => Budget::Seconds(self.timeout),
        }
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// Schedule file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Appends every improving schedule as one JSON line.
    #[arg(long)]
    pub incumbents: Option<PathBuf>,
    #[command(flatten)]
    pub budget: BudgetArgs,
}

#[derive(Debug, Args)]
pub struct RescheduleArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// The schedule being disrupted.
    #[arg(long)]
    pub schedule: PathBuf,
    /// Last executed day.
    #[arg(long, default_value_t = 2)]
    pub day: u32,
    /// Registrations of the disruption day that were not operated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub postponed: Vec<u32>,
    /// Specialty to reschedule; defaults to the one shared by the postponed registrations.
    #[arg(long, conflicts_with = "all_specialties")]
    pub specialty: Option<u32>,
    /// Reschedule every specialty.
    #[arg(long)]
    pub all_specialties: bool,
    /// First rescheduling day; defaults to the day after the disruption.
    #[arg(long)]
    pub first_day: Option<u32>,
    /// Last rescheduling day; defaults to the horizon.
    #[arg(long)]
    pub last_day: Option<u32>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub budget: BudgetArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub schedule: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_parser = parse_scenario)]
    pub scenario: ScenarioName,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(1..=366))]
    pub days: u32,
    #[arg(long, default_value_t = 10)]
    pub runs: u64,
    #[arg(long, default_value_t = 0)]
    pub first_seed: u64,
    #[arg(long, default_value_t = 60.0)]
    pub timeout: f64,
    #[arg(long)]
    pub iterations: Option<u64>,
    /// Runs solved at the same time.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Machine-readable report; `bench-<scenario>-<days>d.json` by default.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "ORSCHED_LISTEN", default_value = "127.0.0.1:8080")]
    pub listen: SocketAddr,
    #[arg(long, env = "ORSCHED_STORE", default_value = "orsched-store")]
    pub store: PathBuf,
    /// Bearer token required on every request.
    #[arg(long, env = "ORSCHED_TOKEN", hide_env_values = true)]
    pub token: Option<String>,
}

/// A failure with its exit status.
#[derive(Debug)]
struct Exit {
    code: i32,
    message: String,
}

impl Exit {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn failure(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_FAILURE,
            message: message.into(),
        }
    }
}

impl From<FileError> for Exit {
    fn from(e: FileError) -> Self {
        Exit::usage(e.to_string())
    }
}

impl From<Error> for Exit {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInstance(_) | Error::InvalidRequest(_) | Error::LimitsExceeded(_) => {
                Exit::usage(format!("{}: {e}", e.code()))
            }
            _ => Exit::failure(format!("{}: {e}", e.code())),
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn emit<T: Serialize>(out: Option<&Path>, value: &T) -> Result<(), Exit> {
    match out {
        Some(path) => Ok(write_json(path, value)?),
        None => io::stdout()
            .write_all(&to_json_bytes(value))
            .map_err(|e| Exit::failure(e.to_string())),
    }
}

fn execute(command: Command) -> Result<i32, Exit> {
    match command {
        Command::Generate(a) => generate(a),
        Command::Solve(a) => solve_cmd(a),
        Command::Reschedule(a) => reschedule_cmd(a),
        Command::Verify(a) => verify(a),
        Command::Bench(a) => bench(a),
        Command::Serve(a) => serve(a),
    }
}

fn generate(a: GenerateArgs) -> Result<i32, Exit> {
    let spec = ScenarioSpec::preset(a.scenario);
    let generated = generate_instance(&spec, a.days, a.seed);
    for w in &generated.warnings {
        eprintln!("warning: {w}");
    }
    let metadata = GenerationMetadata::new(&spec, a.days, a.seed, &generated);
    emit(a.out.as_deref(), &InstanceFile::new(generated.instance, Some(metadata)))?;
    Ok(EXIT_OK)
}

fn check_budget(b: &BudgetArgs) -> Result<(), Exit> {
    if b.timeout.is_nan() || b.timeout <= 0.0 {
        return Err(Exit::usage("--timeout must be positive"));
    }
    if b.iterations == Some(0) {
        return Err(Exit::usage("--iterations must be positive"));
    }
    Ok(())
}

fn print_metrics(m: &Metrics) {
    let [p1, p2, p3] = m.assigned_by_priority;
    eprintln!(
        "assigned P1 {}/{}  P2 {}/{}  P3 {}/{}  OR time {:.1}%  beds {:.1}%",
        p1.assigned,
        p1.total,
        p2.assigned,
        p2.total,
        p3.assigned,
        p3.total,
        m.or_time_efficiency * 100.0,
        m.bed_occupancy_efficiency * 100.0
    );
}

#[derive(Serialize)]
struct IncumbentLine<'a, O> {
    elapsed: f64,
    objective: &'a O,
    assignments: &'a [orsched_core::Assignment],
}

/// Writes incumbents as JSON lines.
struct LineSink<W: Write> {
    out: W,
    error: Option<io::Error>,
}

impl<W: Write, O: Serialize> IncumbentSink<O> for LineSink<W> {
    fn incumbent(&mut self, schedule: &Schedule, objective: &O, elapsed: f64) {
        if self.error.is_some() {
            return;
        }
        let line = IncumbentLine {
            elapsed,
            objective,
            assignments: &schedule.assignments,
        };
        let result = serde_json::to_writer(&mut self.out, &line)
            .map_err(io::Error::other)
            .and_then(|_| self.out.write_all(b"\n"));
        self.error = result.err();
    }
}

fn incumbent_sink(path: Option<&Path>) -> Result<Option<LineSink<BufWriter<File>>>, Exit> {
    path.map(|p| {
        File::create(p)
            .map(|f| LineSink {
                out: BufWriter::new(f),
                error: None,
            })
            .map_err(|e| Exit::usage(format!("{}: {e}", p.display())))
    })
    .transpose()
}

fn finish_sink(sink: Option<LineSink<BufWriter<File>>>) -> Result<(), Exit> {
    if let Some(mut s) = sink {
        if let Some(e) = s.error {
            return Err(Exit::failure(format!("writing incumbents: {e}")));
        }
        s.out
            .flush()
            .map_err(|e| Exit::failure(format!("writing incumbents: {e}")))?;
    }
    Ok(())
}

fn solve_cmd(a: SolveArgs) -> Result<i32, Exit> {
    check_budget(&a.budget)?;
    let instance = read_instance(&a.instance)?.instance;
    let (schedule, objective) = if a.budget.oracle {
        let (objective, schedule) = brute_force_schedule(&instance, &OracleLimits::default())?;
        eprintln!("oracle optimum: {objective:?}");
        (schedule, objective)
    } else {
        let mut sink = incumbent_sink(a.incumbents.as_deref())?;
        let config = a.budget.budget().config(a.budget.seed);
        let clock = WallClock::start();
        let outcome = match &mut sink {
            Some(s) => solve(&instance, &config, &clock, s as &mut dyn IncumbentSink<ObjectiveVector>),
            None => solve(&instance, &config, &clock, &mut orsched_core::solver::NoSink),
        };
        finish_sink(sink)?;
        let outcome = outcome?;
        eprintln!(
            "objective {:?}  proved optimal {}  {} incumbents  {} iterations  {:.2} s",
            outcome.objective, outcome.proved_optimal, outcome.incumbents_emitted, outcome.iterations, outcome.elapsed
        );
        (outcome.best_schedule, outcome.objective)
    };
    let violations = check_schedule(&instance, &schedule);
    if !violations.is_empty() {
        return Err(Exit::failure(format!(
            "solver output has {} violations",
            violations.len()
        )));
    }
    print_metrics(&compute_metrics(&instance, &schedule)?);
    emit(a.out.as_deref(), &ScheduleFile::new(&schedule, Some(objective)))?;
    Ok(EXIT_OK)
}

fn reschedule_cmd(a: RescheduleArgs) -> Result<i32, Exit> {
    check_budget(&a.budget)?;
    let instance = read_instance(&a.instance)?.instance;
    let old = read_schedule(&a.schedule)?.schedule();
    let postponed: Vec<RegistrationId> = a.postponed.iter().copied().map(RegistrationId).collect();
    let horizon = instance.horizon;
    let specialty = match (a.specialty, a.all_specialties) {
        (Some(s), _) => Some(WardId(s)),
        (None, true) => None,
        (None, false) => crate::service::shared_specialty(&instance, &postponed),
    };
    let request = RescheduleRequest {
        instance,
        old_schedule: old,
        disruption_day: a.day,
        postponed,
        reschedule_days: DayRange {
            first: a.first_day.unwrap_or(a.day + 1),
            last: a.last_day.unwrap_or(horizon),
        },
        specialty_filter: specialty,
    };
    let outcome = if a.budget.oracle {
        let (_, schedule) = brute_force_reschedule(&request, &OracleLimits::default())?;
        describe_outcome(&request, &schedule)?
    } else {
        let config = a.budget.budget().config(a.budget.seed);
        reschedule(
            &request,
            &config,
            &WallClock::start(),
            &mut orsched_core::solver::NoSink as &mut dyn IncumbentSink<RescheduleObjective>,
        )?
    };
    let o = outcome.objective;
    eprintln!(
        "specialty {}  dropped {}  levels (4,3,2,1) = ({}, {}, {}, {})  executed offset {}",
        specialty.map_or_else(|| "all".to_owned(), |s| s.to_string()),
        outcome.dropped.len(),
        o.level4,
        o.level3,
        o.level2,
        o.level1,
        outcome.level4_offset
    );
    emit(a.out.as_deref(), &RescheduleFile::new(&outcome))?;
    Ok(EXIT_OK)
}

fn verify(a: VerifyArgs) -> Result<i32, Exit> {
    let instance = read_instance(&a.instance)?.instance;
    let schedule = read_schedule(&a.schedule)?.schedule();
    let report = orsched_core::validate_instance(&instance);
    if !report.is_ok() {
        return Err(Exit::from(Error::InvalidInstance(report)));
    }
    let violations = check_schedule(&instance, &schedule);
    emit(None, &violations)?;
    if violations.is_empty() {
        print_metrics(&compute_metrics(&instance, &schedule)?);
        Ok(EXIT_OK)
    } else {
        eprintln!("{} violations", violations.len());
        Ok(EXIT_FAILURE)
    }
}

fn bench(a: BenchArgs) -> Result<i32, Exit> {
    if a.timeout.is_nan() || a.timeout <= 0.0 || a.iterations == Some(0) || a.runs == 0 {
        return Err(Exit::usage("--timeout, --iterations and --runs must be positive"));
    }
    let options = BenchOptions {
        spec: ScenarioSpec::preset(a.scenario),
        days: a.days,
        seeds: (a.first_seed..a.first_seed + a.runs).collect(),
        budget: a.iterations.map_or(Budget::Seconds(a.timeout), Budget::Iterations),
        jobs: a.jobs.max(1),
    };
    let report = run_bench(&options);
    print!("{}", render_text(&report));
    let out = a
        .out
        .unwrap_or_else(|| PathBuf::from(format!("bench-{}-{}d.json", a.scenario.as_str(), a.days)));
    write_json(&out, &report)?;
    eprintln!("report written to {}", out.display());
    Ok(if report.summary.failed > 0 {
        EXIT_FAILURE
    } else {
        EXIT_OK
    })
}

fn serve(a: ServeArgs) -> Result<i32, Exit> {
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Exit::failure(e.to_string()))?;
    runtime
        .block_on(service::serve(ServiceConfig {
            listen: a.listen,
            store: a.store,
            token: a.token,
        }))
        .map_err(|e| Exit::failure(e.to_string()))?;
    Ok(EXIT_OK)
}
