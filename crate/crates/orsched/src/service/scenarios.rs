use std::collections::BTreeSet;

use orsched_core::generator::{generate_instance, ScenarioName, ScenarioSpec, SpecialtyGenParams};
use orsched_core::{validate_instance, BedAvailability, Instance, WardId};
use serde::{Deserialize, Serialize};

pub const MAX_HORIZON: u32 = 60;
const MAX_REGISTRATIONS_PER_5DAY: u32 = 5_000;
const MAX_ORS: u32 = 20;

/// Stored generation parameters for a family of instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    #[serde(flatten)]
    pub spec: ScenarioSpec,
    pub horizon: u32,
    /// Seconds since the Unix epoch.
    pub created_at: u64,
}

impl Scenario {
    pub fn generate(&self, days: u32, seed: u64) -> Instance {
        generate_instance(&self.spec, days, seed).instance
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub id: String,
    pub name: String,
    pub horizon: u32,
    pub created_at: u64,
}

impl From<&Scenario> for ScenarioSummary {
    fn from(s: &Scenario) -> Self {
        Self {
            id: s.id.clone(),
            name: s.spec.name.clone(),
            horizon: s.horizon,
            created_at: s.created_at,
        }
    }
}

/// Body of `POST /scenarios`: a preset (default A) with optional overrides.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDraft {
    pub name: String,
    #[serde(default)]
    pub preset: Option<ScenarioName>,
    #[serde(default)]
    pub horizon: Option<u32>,
    #[serde(default)]
    pub bed_table: Option<Vec<BedAvailability>>,
    #[serde(default)]
    pub specialty_params: Option<Vec<SpecialtyGenParams>>,
    #[serde(default)]
    pub priority_weights: Option<[f64; 3]>,
    #[serde(default)]
    pub sessions_per_day: Option<u32>,
    #[serde(default)]
    pub session_minutes: Option<u32>,
}

impl ScenarioDraft {
    /// The generation spec and horizon, or every problem found.
    pub fn resolve(self) -> Result<(ScenarioSpec, u32), Vec<String>> {
        let mut spec = ScenarioSpec::preset(self.preset.unwrap_or(ScenarioName::A));
        spec.name = self.name;
        if let Some(v) = self.bed_table {
            spec.bed_table = v;
        }
        if let Some(v) = self.specialty_params {
            spec.specialty_params = v;
        }
        if let Some(v) = self.priority_weights {
            spec.priority_weights = v;
        }
        if let Some(v) = self.sessions_per_day {
            spec.sessions_per_day = v;
        }
        if let Some(v) = self.session_minutes {
            spec.session_minutes = v;
        }
        let horizon = self.horizon.unwrap_or(5);
        let problems = check_spec(&spec, horizon);
        if problems.is_empty() {
            Ok((spec, horizon))
        } else {
            Err(problems)
        }
    }
}

fn check_spec(spec: &ScenarioSpec, horizon: u32) -> Vec<String> {
    let mut out = Vec::new();
    if spec.name.trim().is_empty() || spec.name.len() > 200 {
        out.push("name must have 1 to 200 characters".to_owned());
    }
    if !(1..=MAX_HORIZON).contains(&horizon) {
        out.push(format!("horizon must lie in 1..={MAX_HORIZON}"));
    }
    let w = spec.priority_weights;
    if w.iter().any(|x| !x.is_finite() || *x < 0.0) || w.iter().sum::<f64>() <= 0.0 {
        out.push("priority weights must be non-negative with a positive sum".to_owned());
    }
    if !(1..=4).contains(&spec.sessions_per_day) {
        out.push("sessions_per_day must lie in 1..=4".to_owned());
    }
    if !(1..=1440).contains(&spec.session_minutes) {
        out.push("session_minutes must lie in 1..=1440".to_owned());
    }
    if spec.specialty_params.is_empty() {
        out.push("at least one specialty is required".to_owned());
    }
    let mut seen = BTreeSet::new();
    for p in &spec.specialty_params {
        let s = p.specialty;
        if s == WardId::ICU || !seen.insert(s) {
            out.push(format!("specialty {s} is the ICU or repeated"));
        }
        if !(1..=MAX_ORS).contains(&p.or_count) {
            out.push(format!("specialty {s}: or_count must lie in 1..={MAX_ORS}"));
        }
        if p.registrations_per_5day > MAX_REGISTRATIONS_PER_5DAY {
            out.push(format!(
                "specialty {s}: at most {MAX_REGISTRATIONS_PER_5DAY} registrations per 5 days"
            ));
        }
        let reals = [
            p.surgery_mean,
            p.surgery_std,
            p.los_mean,
            p.los_std,
            p.icu_mean,
            p.icu_std,
        ];
        if reals.iter().any(|x| !x.is_finite() || *x < 0.0) || p.surgery_mean <= 0.0 {
            out.push(format!(
                "specialty {s}: means and deviations must be finite and non-negative"
            ));
        }
        if !(0.0..=1.0).contains(&p.icu_fraction) {
            out.push(format!("specialty {s}: icu_fraction must lie in [0, 1]"));
        }
    }
    if spec.bed_table.is_empty() {
        out.push("bed table is empty".to_owned());
    }
    if out.is_empty() {
        let instance = generate_instance(spec, horizon, 0).instance;
        out.extend(
            validate_instance(&instance)
                .violations
                .into_iter()
                .map(|v| format!("generated instance: {}: {}", v.code.as_str(), v.detail)),
        );
    }
    out
}

pub fn preset_id(name: ScenarioName) -> String {
    format!("preset-{}", name.as_str().to_ascii_lowercase())
}

pub fn preset(name: ScenarioName) -> Scenario {
    Scenario {
        id: preset_id(name),
        spec: ScenarioSpec::preset(name),
        horizon: 5,
        created_at: 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_resolve_cleanly() {
        for name in [ScenarioName::A, ScenarioName::B, ScenarioName::C] {
            let draft = ScenarioDraft {
                name: "x".into(),
                preset: Some(name),
                ..Default::default()
            };
            let (spec, horizon) = draft.resolve().unwrap();
            assert_eq!(horizon, 5);
            assert_eq!(spec.bed_table, ScenarioSpec::preset(name).bed_table);
        }
    }

    #[test]
    fn bad_parameters_are_all_reported() {
        let mut params = ScenarioSpec::preset(ScenarioName::A).specialty_params;
        params[0].or_count = 0;
        params[1].icu_fraction = 2.0;
        let draft = ScenarioDraft {
            name: " ".into(),
            horizon: Some(0),
            specialty_params: Some(params),
            ..Default::default()
        };
        let problems = draft.resolve().unwrap_err();
        assert_eq!(problems.len(), 4, "{problems:?}");
    }

    #[test]
    fn a_specialty_without_beds_is_caught_by_instance_validation() {
        let spec = ScenarioSpec::preset(ScenarioName::A);
        let draft = ScenarioDraft {
            name: "x".into(),
            bed_table: Some(spec.bed_table.into_iter().filter(|b| b.ward != WardId(3)).collect()),
            ..Default::default()
        };
        let problems = draft.resolve().unwrap_err();
        assert!(
            problems.iter().all(|p| p.starts_with("generated instance")),
            "{problems:?}"
        );
    }
}
