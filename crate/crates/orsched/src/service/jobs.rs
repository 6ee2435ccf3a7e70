use std::collections::BTreeMap;
use std::sync::atomic::AtomicBool;
use std::sync::{Arc, Mutex};

use orsched_core::reschedule::{
    merged_schedule, reschedule, reschedule_metrics, residual_instance, DayRange, RescheduleObjective,
    RescheduleRequest,
};
use orsched_core::solver::{solve, IncumbentSink};
use orsched_core::verifier::{bed_occupancy, compute_metrics, Metrics, ObjectiveVector};
use orsched_core::{
    validate_instance, BedAvailability, Clock, Day, Error, Instance, RegistrationId, Schedule, SolverConfig, WardId,
};
use serde::{Deserialize, Serialize};

use crate::clock::WallClock;
use crate::files::{GenerationMetadata, InstanceFile, RescheduleFile, ScheduleFile, FORMAT_VERSION};

use super::scenarios::MAX_HORIZON;
use super::ApiError;

pub const DEFAULT_TIME_LIMIT: f64 = 60.0;
const MAX_TIME_LIMIT: f64 = 3_600.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobKind {
    Solve,
    Reschedule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed,
}

impl JobState {
    pub fn is_terminal(self) -> bool {
        matches!(self, JobState::Done | JobState::Failed)
    }
}

/// Search options of a job. Without `time_limit` and `iterations` the
/// default time limit applies.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_limit: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_stall_iterations: Option<u64>,
}

impl JobConfig {
    fn resolve(mut self, default_seed: u64) -> Result<Self, ApiError> {
        if let Some(t) = self.time_limit {
            if !(t > 0.0 && t <= MAX_TIME_LIMIT) {
                return Err(ApiError::payload(format!(
                    "time_limit must lie in (0, {MAX_TIME_LIMIT}]"
                )));
            }
        }
        if self.iterations == Some(0) || self.max_stall_iterations == Some(0) {
            return Err(ApiError::payload("iteration counts must be positive"));
        }
        if self.time_limit.is_none() && self.iterations.is_none() {
            self.time_limit = Some(DEFAULT_TIME_LIMIT);
        }
        self.seed.get_or_insert(default_seed);
        Ok(self)
    }

    pub fn solver_config(&self) -> SolverConfig {
        let default = SolverConfig::default();
        SolverConfig {
            time_limit: self.time_limit.unwrap_or(f64::INFINITY),
            seed: self.seed.unwrap_or(0),
            max_stall_iterations: self.max_stall_iterations.unwrap_or(default.max_stall_iterations),
            emit_incumbents: true,
            max_iterations: self.iterations,
        }
    }
}

/// Disruption descriptor of a reschedule job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RescheduleSpec {
    /// A finished solve job whose instance and schedule are the starting point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_job: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub old_schedule: Option<ScheduleFile>,
    #[serde(default = "default_disruption_day")]
    pub disruption_day: Day,
    pub postponed: Vec<RegistrationId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reschedule_days: Option<DayRange>,
    /// Defaults to the specialty shared by the postponed registrations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub specialty: Option<WardId>,
    #[serde(default)]
    pub all_specialties: bool,
}

fn default_disruption_day() -> Day {
    2
}

/// Body of `POST /jobs`: the instance comes from exactly one of
/// `scenario_id` (generated server-side), `instance` (inline) or
/// `reschedule.base_job`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobRequest {
    pub kind: JobKind,
    #[serde(default)]
    pub scenario_id: Option<String>,
    /// Generation seed, default 0.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Generated horizon, default the scenario's.
    #[serde(default)]
    pub days: Option<u32>,
    #[serde(default)]
    pub instance: Option<InstanceFile>,
    #[serde(default)]
    pub config: JobConfig,
    /// Share of the declared beds made available, in percent.
    #[serde(default)]
    pub bed_quota_percent: Option<u32>,
    #[serde(default)]
    pub reschedule: Option<RescheduleSpec>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct JobSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generation: Option<GenerationMetadata>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_job: Option<String>,
    pub inline: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Objective {
    Solve(ObjectiveVector),
    Reschedule(RescheduleObjective),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Incumbent {
    /// Position in the job's incumbent list, from 1.
    pub index: u64,
    pub objective: Objective,
    pub metrics: Metrics,
    pub elapsed: f64,
    pub schedule: Schedule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

/// Beds per ward and day for stacked occupancy bars.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OccupancyPoint {
    pub ward: WardId,
    pub day: Day,
    /// Patients whose assignment is unchanged from the old schedule.
    pub prior: u32,
    /// Patients newly placed by this job.
    pub new: u32,
    /// Declared beds.
    pub available: u32,
    /// Beds the job could use after the quota.
    pub quota: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobOutcome {
    pub objective: Objective,
    pub metrics: Metrics,
    /// The complete plan; for a reschedule, executed surgeries included.
    pub schedule: Schedule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rescheduled: Option<RescheduleFile>,
    pub proved_optimal: bool,
    pub iterations: u64,
    pub elapsed: f64,
}

/// Everything known about a job; persisted when it reaches a terminal state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobRecord {
    pub id: String,
    pub kind: JobKind,
    pub state: JobState,
    pub created_at: u64,
    pub source: JobSource,
    pub config: JobConfig,
    pub bed_quota_percent: u32,
    pub cancelled: bool,
    /// Declared instance, before the bed quota.
    pub instance: Instance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reschedule: Option<RescheduleSpec>,
    /// Old schedule of a reschedule job.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub old_schedule: Option<Schedule>,
    pub incumbents: Vec<Incumbent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<JobOutcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorBody>,
}

#[derive(Debug)]
pub struct JobHandle {
    pub record: Mutex<JobRecord>,
    pub cancel: Arc<AtomicBool>,
}

impl JobHandle {
    pub fn new(record: JobRecord) -> Self {
        Self {
            record: Mutex::new(record),
            cancel: Arc::new(AtomicBool::new(false)),
        }
    }

    pub fn lock(&self) -> std::sync::MutexGuard<'_, JobRecord> {
        self.record.lock().unwrap_or_else(|e| e.into_inner())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncumbentView {
    pub index: u64,
    pub objective: Objective,
    pub metrics: Metrics,
    pub elapsed: f64,
    pub schedule_ref: String,
}

/// Response of `GET /jobs/{id}?since=k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobView {
    pub id: String,
    pub kind: JobKind,
    pub state: JobState,
    pub cancelled: bool,
    pub created_at: u64,
    pub source: JobSource,
    pub config: JobConfig,
    pub bed_quota_percent: u32,
    pub since: u64,
    pub incumbent_count: u64,
    /// Incumbents with index greater than `since`.
    pub incumbents: Vec<IncumbentView>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorBody>,
}

impl JobRecord {
    pub fn view(&self, since: u64) -> JobView {
        JobView {
            id: self.id.clone(),
            kind: self.kind,
            state: self.state,
            cancelled: self.cancelled,
            created_at: self.created_at,
            source: self.source.clone(),
            config: self.config.clone(),
            bed_quota_percent: self.bed_quota_percent,
            since,
            incumbent_count: self.incumbents.len() as u64,
            incumbents: self
                .incumbents
                .iter()
                .filter(|i| i.index > since)
                .map(|i| IncumbentView {
                    index: i.index,
                    objective: i.objective,
                    metrics: i.metrics,
                    elapsed: i.elapsed,
                    schedule_ref: format!("/jobs/{}/incumbents/{}", self.id, i.index),
                })
                .collect(),
            error: self.error.clone(),
        }
    }

    /// The instance the job solves: declared beds scaled by the quota.
    pub fn effective_instance(&self) -> Instance {
        apply_quota(&self.instance, self.bed_quota_percent)
    }

    fn reschedule_request(&self) -> Option<RescheduleRequest> {
        let spec = self.reschedule.as_ref()?;
        let instance = self.effective_instance();
        let horizon = instance.horizon;
        Some(RescheduleRequest {
            instance,
            old_schedule: self.old_schedule.clone()?,
            disruption_day: spec.disruption_day,
            postponed: spec.postponed.clone(),
            reschedule_days: spec.reschedule_days.unwrap_or(DayRange {
                first: spec.disruption_day + 1,
                last: horizon,
            }),
            specialty_filter: spec.specialty,
        })
    }
}

/// Effective availability `floor(declared * percent / 100)`.
pub fn apply_quota(instance: &Instance, percent: u32) -> Instance {
    let mut out = instance.clone();
    for b in &mut out.beds {
        b.available = (u64::from(b.available) * u64::from(percent) / 100) as u32;
    }
    out
}

/// Shared specialty of `ids`, if there is exactly one.
pub fn shared_specialty(instance: &Instance, ids: &[RegistrationId]) -> Option<WardId> {
    let mut specialties = ids
        .iter()
        .filter_map(|id| instance.registrations.iter().find(|r| r.id == *id))
        .map(|r| r.specialty);
    let first = specialties.next()?;
    specialties.all(|s| s == first).then_some(first)
}

/// What `POST /jobs` resolved a request into.
pub struct Prepared {
    pub kind: JobKind,
    pub source: JobSource,
    pub config: JobConfig,
    pub bed_quota_percent: u32,
    pub instance: Instance,
    pub reschedule: Option<RescheduleSpec>,
    pub old_schedule: Option<Schedule>,
}

/// Looks up what a request refers to.
pub trait Lookup {
    fn scenario(&self, id: &str) -> Result<super::scenarios::Scenario, ApiError>;
    /// Declared instance, bed quota and final plan of a finished solve job.
    fn solved_job(&self, id: &str) -> Result<(Instance, u32, Schedule), ApiError>;
}

pub fn prepare(request: JobRequest, lookup: &dyn Lookup) -> Result<Prepared, ApiError> {
    let base = match (&request.kind, &request.reschedule) {
        (JobKind::Solve, Some(_)) => return Err(ApiError::payload("`reschedule` is only valid for reschedule jobs")),
        (JobKind::Reschedule, None) => return Err(ApiError::payload("reschedule jobs need a `reschedule` descriptor")),
        (_, Some(spec)) => spec.base_job.clone(),
        _ => None,
    };
    let sources = [
        request.scenario_id.is_some(),
        request.instance.is_some(),
        base.is_some(),
    ];
    if sources.iter().filter(|&&s| s).count() != 1 {
        return Err(ApiError::payload(
            "exactly one of `scenario_id`, `instance` or `reschedule.base_job` is required",
        ));
    }
    if request.scenario_id.is_none() && (request.days.is_some() || request.seed.is_some()) {
        return Err(ApiError::payload("`seed` and `days` apply to generated instances only"));
    }

    let mut source = JobSource::default();
    let mut old_schedule = None;
    let mut base_quota = None;
    let instance = if let Some(id) = &request.scenario_id {
        let scenario = lookup.scenario(id)?;
        let days = request.days.unwrap_or(scenario.horizon);
        if !(1..=MAX_HORIZON).contains(&days) {
            return Err(ApiError::payload(format!("days must lie in 1..={MAX_HORIZON}")));
        }
        let seed = request.seed.unwrap_or(0);
        let generated = orsched_core::generator::generate_instance(&scenario.spec, days, seed);
        source.scenario_id = Some(id.clone());
        source.generation = Some(GenerationMetadata::new(&scenario.spec, days, seed, &generated));
        generated.instance
    } else if let Some(file) = request.instance {
        if file.format != FORMAT_VERSION {
            return Err(ApiError::payload(format!(
                "unsupported instance format {}",
                file.format
            )));
        }
        source.inline = true;
        file.instance
    } else {
        let id = base.expect("one source is present");
        let (instance, quota, schedule) = lookup.solved_job(&id)?;
        source.base_job = Some(id);
        old_schedule = Some(schedule);
        base_quota = Some(quota);
        instance
    };

    let report = validate_instance(&instance);
    if !report.is_ok() {
        return Err(ApiError::invalid_instance(report));
    }
    let bed_quota_percent = request.bed_quota_percent.or(base_quota).unwrap_or(100);
    if !(1..=100).contains(&bed_quota_percent) {
        return Err(ApiError::payload("bed_quota_percent must lie in 1..=100"));
    }
    let default_seed = source.generation.as_ref().map_or(0, |g| g.seed);
    let config = request.config.resolve(default_seed)?;

    let mut prepared = Prepared {
        kind: request.kind,
        source,
        config,
        bed_quota_percent,
        instance,
        reschedule: None,
        old_schedule: None,
    };
    if let Some(mut spec) = request.reschedule {
        let old = match (old_schedule, spec.old_schedule.take()) {
            (Some(s), None) => s,
            (None, Some(file)) => file.schedule(),
            (Some(_), Some(_)) => return Err(ApiError::payload("give either `base_job` or `old_schedule`, not both")),
            (None, None) => return Err(ApiError::payload("reschedule jobs need `old_schedule` or `base_job`")),
        };
        if spec.specialty.is_some() && spec.all_specialties {
            return Err(ApiError::payload(
                "`specialty` and `all_specialties` exclude each other",
            ));
        }
        if spec.specialty.is_none() && !spec.all_specialties {
            spec.specialty = shared_specialty(&prepared.instance, &spec.postponed);
        }
        prepared.reschedule = Some(spec);
        prepared.old_schedule = Some(old);
        let probe = prepared.record_for("probe", 0);
        let request = probe.reschedule_request().expect("reschedule record");
        residual_instance(&request).map_err(ApiError::core)?;
    }
    Ok(prepared)
}

impl Prepared {
    pub fn record_for(&self, id: &str, created_at: u64) -> JobRecord {
        JobRecord {
            id: id.to_owned(),
            kind: self.kind,
            state: JobState::Queued,
            created_at,
            source: self.source.clone(),
            config: self.config.clone(),
            bed_quota_percent: self.bed_quota_percent,
            cancelled: false,
            instance: self.instance.clone(),
            reschedule: self.reschedule.clone(),
            old_schedule: self.old_schedule.clone(),
            incumbents: Vec::new(),
            outcome: None,
            error: None,
        }
    }
}

fn push_incumbent(handle: &JobHandle, objective: Objective, metrics: Metrics, elapsed: f64, schedule: &Schedule) {
    let mut record = handle.lock();
    let index = record.incumbents.len() as u64 + 1;
    record.incumbents.push(Incumbent {
        index,
        objective,
        metrics,
        elapsed,
        schedule: schedule.clone(),
    });
}

/// Runs a queued job to completion. `persist` is called after every state change.
pub fn run(handle: &JobHandle, persist: &dyn Fn(&JobRecord)) {
    let (kind, instance, config, request) = {
        let mut record = handle.lock();
        record.state = JobState::Running;
        persist(&record);
        (
            record.kind,
            record.effective_instance(),
            record.config.solver_config(),
            record.reschedule_request(),
        )
    };
    let clock = WallClock::with_cancel(handle.cancel.clone());

    let result: Result<JobOutcome, Error> = match (kind, request) {
        (JobKind::Reschedule, Some(request)) => {
            let mut sink = |s: &Schedule, o: &RescheduleObjective, t: f64| {
                if let Ok(m) = reschedule_metrics(&request, s) {
                    push_incumbent(handle, Objective::Reschedule(*o), m, t, s);
                }
            };
            reschedule(&request, &config, &clock, &mut sink as &mut dyn IncumbentSink<_>).and_then(|o| {
                Ok(JobOutcome {
                    objective: Objective::Reschedule(o.objective),
                    metrics: reschedule_metrics(&request, &o.new_schedule)?,
                    schedule: merged_schedule(&request, &o.new_schedule),
                    rescheduled: Some(RescheduleFile::new(&o)),
                    proved_optimal: o.proved_optimal,
                    iterations: o.iterations,
                    elapsed: o.elapsed,
                })
            })
        }
        _ => {
            let mut sink = |s: &Schedule, o: &ObjectiveVector, t: f64| {
                if let Ok(m) = compute_metrics(&instance, s) {
                    push_incumbent(handle, Objective::Solve(*o), m, t, s);
                }
            };
            solve(&instance, &config, &clock, &mut sink as &mut dyn IncumbentSink<_>).and_then(|o| {
                Ok(JobOutcome {
                    objective: Objective::Solve(o.objective),
                    metrics: compute_metrics(&instance, &o.best_schedule)?,
                    schedule: o.best_schedule,
                    rescheduled: None,
                    proved_optimal: o.proved_optimal,
                    iterations: o.iterations,
                    elapsed: o.elapsed,
                })
            })
        }
    };

    let mut record = handle.lock();
    record.cancelled = clock.cancelled();
    match result {
        Ok(outcome) => {
            let last = record.incumbents.last().map(|i| (&i.schedule, i.objective));
            let best = match &outcome.rescheduled {
                Some(r) => Schedule::new(r.assignments.clone()),
                None => outcome.schedule.clone(),
            };
            if last != Some((&best, outcome.objective)) {
                let index = record.incumbents.len() as u64 + 1;
                record.incumbents.push(Incumbent {
                    index,
                    objective: outcome.objective,
                    metrics: outcome.metrics,
                    elapsed: outcome.elapsed,
                    schedule: best,
                });
            }
            record.outcome = Some(outcome);
            record.state = JobState::Done;
        }
        Err(e) => {
            let (code, message) = if record.cancelled && e == Error::TimeoutNoSolution {
                (
                    "cancelled".to_owned(),
                    "cancelled before a feasible schedule was found".to_owned(),
                )
            } else {
                (e.code().to_owned(), e.to_string())
            };
            record.error = Some(ErrorBody { code, message });
            record.state = JobState::Failed;
        }
    }
    persist(&record);
}

/// Per-(ward, day) occupancy of a finished job, for every declared bed entry.
pub fn occupancy_series(record: &JobRecord) -> Option<Vec<OccupancyPoint>> {
    let outcome = record.outcome.as_ref()?;
    let effective = record.effective_instance();
    let (prior, new): (Vec<_>, Vec<_>) = match &record.old_schedule {
        Some(old) => outcome
            .schedule
            .assignments
            .iter()
            .partition(|a| old.assignments.contains(a)),
        None => (Vec::new(), outcome.schedule.assignments.iter().collect()),
    };
    let occupancy = |list: Vec<&orsched_core::Assignment>| {
        bed_occupancy(&effective, &Schedule::new(list.into_iter().copied().collect()))
    };
    let prior = occupancy(prior);
    let new = occupancy(new);
    let declared: BTreeMap<(WardId, Day), u32> = record
        .instance
        .beds
        .iter()
        .map(|b: &BedAvailability| ((b.ward, b.day), b.available))
        .collect();
    Some(
        effective
            .beds
            .iter()
            .map(|b| {
                let key = (b.ward, b.day);
                OccupancyPoint {
                    ward: b.ward,
                    day: b.day,
                    prior: prior.get(&key).copied().unwrap_or(0),
                    new: new.get(&key).copied().unwrap_or(0),
                    available: declared.get(&key).copied().unwrap_or(0),
                    quota: b.available,
                }
            })
            .collect(),
    )
}

/// Response of `GET /jobs/{id}/results`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobResults {
    pub id: String,
    pub kind: JobKind,
    pub objective: Objective,
    pub metrics: Metrics,
    pub schedule: ScheduleFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rescheduled: Option<RescheduleFile>,
    pub proved_optimal: bool,
    pub iterations: u64,
    pub elapsed: f64,
    pub occupancy: Vec<OccupancyPoint>,
}

pub fn results(record: &JobRecord) -> Option<JobResults> {
    let outcome = record.outcome.as_ref()?;
    let objective = match outcome.objective {
        Objective::Solve(o) => Some(o),
        Objective::Reschedule(_) => None,
    };
    Some(JobResults {
        id: record.id.clone(),
        kind: record.kind,
        objective: outcome.objective,
        metrics: outcome.metrics,
        schedule: ScheduleFile::new(&outcome.schedule, objective),
        rescheduled: outcome.rescheduled.clone(),
        proved_optimal: outcome.proved_optimal,
        iterations: outcome.iterations,
        elapsed: outcome.elapsed,
        occupancy: occupancy_series(record)?,
    })
}
