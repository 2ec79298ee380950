use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::ConfigError;
use crate::branching::{Conditioning, OffspringModel};
use crate::ergraph::DosMode;
use crate::isoperimetry::QParam;
use crate::walks::Variant;

/// The experiments the runner knows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    ReturnProb,
    CtReturn,
    LifshitsExtinct,
    Dos,
    AtomZero,
    IslandsAudit,
    NormAudit,
    BadEvent,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::ReturnProb,
        Experiment::CtReturn,
        Experiment::LifshitsExtinct,
        Experiment::Dos,
        Experiment::AtomZero,
        Experiment::IslandsAudit,
        Experiment::NormAudit,
        Experiment::BadEvent,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::ReturnProb => "return-prob",
            Experiment::CtReturn => "ct-return",
            Experiment::LifshitsExtinct => "lifshits-extinct",
            Experiment::Dos => "dos",
            Experiment::AtomZero => "atom-zero",
            Experiment::IslandsAudit => "islands-audit",
            Experiment::NormAudit => "norm-audit",
            Experiment::BadEvent => "bad-event",
        }
    }

    /// Optional keys this experiment reads, besides `experiment`, `seed` and `n_samples`.
    fn keys(&self) -> &'static [&'static str] {
        match self {
            Experiment::ReturnProb => &["offspring", "conditioning", "times", "radius", "vertex_cap", "fit_range"],
            Experiment::CtReturn => &["offspring", "conditioning", "s_values", "radius", "vertex_cap", "variant"],
            Experiment::LifshitsExtinct => &["lambda", "grid", "size_cap"],
            Experiment::Dos => &["lambda", "n_vertices", "grid", "dos_mode", "giant_energies"],
            Experiment::AtomZero => &["lambda", "n_vertices", "n_graphs", "size_cap"],
            Experiment::IslandsAudit => &["offspring", "q_ladder", "radius", "max_host_vertices", "binary_depths"],
            Experiment::NormAudit => &["offspring", "q", "radius", "host_radius", "vertex_cap", "binary_radii"],
            Experiment::BadEvent => &["offspring", "times", "radius", "vertex_cap"],
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| ConfigError::new("experiment", format!("unknown experiment {s:?}")))
    }
}

pub const DEFAULT_OFFSPRING: &str = "poisson:2";
pub const DEFAULT_VERTEX_CAP: usize = 5_000_000;
pub const DEFAULT_SIZE_CAP: usize = 1 << 20;
const MAX_RADIUS: u32 = 64;

/// Experiment configuration. Every key is optional except `seed` and
/// `n_samples`; keys an experiment does not read are rejected by
/// [`ExperimentConfig::validate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    pub seed: u64,
    /// Trees, graphs or hosts, depending on the experiment.
    pub n_samples: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offspring: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conditioning: Option<Conditioning>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub giant_energies: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub host_radius: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertex_cap: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size_cap: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_vertices: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_graphs: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dos_mode: Option<DosMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<Variant>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<QParam>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_ladder: Option<Vec<QParam>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_host_vertices: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub binary_depths: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub binary_radii: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_range: Option<[f64; 2]>,
}

/// Applies `key=value` overrides to a JSON object. Dotted keys address
/// nested objects; values are read as JSON and fall back to strings.
pub fn apply_overrides(config: &mut Value, overrides: &[String]) -> Result<(), ConfigError> {
    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| ConfigError::new("--set", format!("expected key=value, got {item:?}")))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(ConfigError::new("--set", format!("empty key in {item:?}")));
        }
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        let mut slot = &mut *config;
        let parts: Vec<&str> = key.split('.').collect();
        for (i, part) in parts.iter().enumerate() {
            let obj = slot
                .as_object_mut()
                .ok_or_else(|| ConfigError::new(parts[..i].join("."), "not an object"))?;
            if i + 1 == parts.len() {
                obj.insert(part.to_string(), value.clone());
                break;
            }
            slot = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
        }
    }
    Ok(())
}

/// Parses the config text (empty means `{}`), applies the overrides and
/// deserializes. Returns the config and the merged JSON document.
pub fn load_config(text: &str, overrides: &[String]) -> Result<(ExperimentConfig, Value), ConfigError> {
    let mut value: Value = if text.trim().is_empty() {
        Value::Object(Map::new())
    } else {
        serde_json::from_str(text).map_err(|e| ConfigError::new("config", e.to_string()))?
    };
    if !value.is_object() {
        return Err(ConfigError::new("config", "top level must be a JSON object"));
    }
    apply_overrides(&mut value, overrides)?;
    let config = serde_path_to_error::deserialize(value.clone()).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::new(if path == "." { "config".into() } else { path }, e.into_inner().to_string())
    })?;
    Ok((config, value))
}

fn check_positive(path: &str, xs: &[f64]) -> Result<(), ConfigError> {
    for (i, &x) in xs.iter().enumerate() {
        if !(x > 0.0 && x.is_finite()) {
            return Err(ConfigError::new(format!("{path}[{i}]"), format!("{x} is not a positive number")));
        }
    }
    Ok(())
}

fn check_increasing(path: &str, xs: &[f64]) -> Result<(), ConfigError> {
    check_positive(path, xs)?;
    if let Some(i) = xs.windows(2).position(|w| w[0] >= w[1]) {
        return Err(ConfigError::new(format!("{path}[{}]", i + 1), "values must be strictly increasing"));
    }
    Ok(())
}

fn require<'a, T>(path: &str, x: &'a Option<T>) -> Result<&'a T, ConfigError> {
    x.as_ref().ok_or_else(|| ConfigError::new(path, "required by this experiment"))
}

fn set_keys(config: &ExperimentConfig) -> Vec<&'static str> {
    let c = config;
    let flags = [
        ("offspring", c.offspring.is_some()),
        ("conditioning", c.conditioning.is_some()),
        ("lambda", c.lambda.is_some()),
        ("times", c.times.is_some()),
        ("s_values", c.s_values.is_some()),
        ("grid", c.grid.is_some()),
        ("giant_energies", c.giant_energies.is_some()),
        ("radius", c.radius.is_some()),
        ("host_radius", c.host_radius.is_some()),
        ("vertex_cap", c.vertex_cap.is_some()),
        ("size_cap", c.size_cap.is_some()),
        ("n_vertices", c.n_vertices.is_some()),
        ("n_graphs", c.n_graphs.is_some()),
        ("dos_mode", c.dos_mode.is_some()),
        ("variant", c.variant.is_some()),
        ("q", c.q.is_some()),
        ("q_ladder", c.q_ladder.is_some()),
        ("max_host_vertices", c.max_host_vertices.is_some()),
        ("binary_depths", c.binary_depths.is_some()),
        ("binary_radii", c.binary_radii.is_some()),
        ("fit_range", c.fit_range.is_some()),
    ];
    flags.into_iter().filter(|f| f.1).map(|f| f.0).collect()
}

impl ExperimentConfig {
    /// A config with only the required keys.
    pub fn new(seed: u64, n_samples: u64) -> Self {
        serde_json::from_value(serde_json::json!({ "seed": seed, "n_samples": n_samples }))
            .expect("minimal config deserializes")
    }

    pub fn offspring_model(&self) -> Result<OffspringModel, ConfigError> {
        self.offspring
            .as_deref()
            .unwrap_or(DEFAULT_OFFSPRING)
            .parse()
            .map_err(|e: crate::branching::BranchingError| ConfigError::new("offspring", e.to_string()))
    }

    pub fn vertex_cap_or_default(&self) -> usize {
        self.vertex_cap.unwrap_or(DEFAULT_VERTEX_CAP)
    }

    pub fn size_cap_or_default(&self) -> usize {
        self.size_cap.unwrap_or(DEFAULT_SIZE_CAP)
    }

    /// Checks every field used by `kind` without sampling anything, and
    /// rejects fields `kind` does not read.
    pub fn validate(&self, kind: Experiment) -> Result<(), ConfigError> {
        if let Some(e) = self.experiment {
            if e != kind {
                return Err(ConfigError::new("experiment", format!("config is for {e}, run requested {kind}")));
            }
        }
        if let Some(key) = set_keys(self).into_iter().find(|k| !kind.keys().contains(k)) {
            return Err(ConfigError::new(key, format!("not used by {kind}")));
        }
        if self.n_samples == 0 {
            return Err(ConfigError::new("n_samples", "must be positive"));
        }
        if kind.keys().contains(&"offspring") {
            self.offspring_model()?;
        }
        if let Some(r) = self.radius {
            if r == 0 || r > MAX_RADIUS {
                return Err(ConfigError::new("radius", format!("must lie in 1..={MAX_RADIUS}")));
            }
        }
        if self.vertex_cap == Some(0) {
            return Err(ConfigError::new("vertex_cap", "must be positive"));
        }
        if self.size_cap == Some(0) {
            return Err(ConfigError::new("size_cap", "must be positive"));
        }
        if let Some(l) = self.lambda {
            if !(l > 0.0 && l.is_finite()) {
                return Err(ConfigError::new("lambda", format!("{l} is not a positive number")));
            }
        }
        match kind {
            Experiment::ReturnProb => {
                let times = require("times", &self.times)?;
                if times.is_empty() {
                    return Err(ConfigError::new("times", "must not be empty"));
                }
                if let Some(i) = times.windows(2).position(|w| w[0] >= w[1]) {
                    return Err(ConfigError::new(format!("times[{}]", i + 1), "times must be strictly increasing"));
                }
                if let Some([lo, hi]) = self.fit_range {
                    if !(lo > 0.0 && lo < hi && hi.is_finite()) {
                        return Err(ConfigError::new("fit_range", "expected [t_min, t_max] with 0 < t_min < t_max"));
                    }
                }
                self.check_supercritical_survivor()?;
            }
            Experiment::CtReturn => {
                let s = require("s_values", &self.s_values)?;
                if s.is_empty() {
                    return Err(ConfigError::new("s_values", "must not be empty"));
                }
                check_increasing("s_values", s)?;
                self.check_supercritical_survivor()?;
            }
            Experiment::LifshitsExtinct => {
                self.require_supercritical_lambda()?;
                check_increasing("grid", require("grid", &self.grid)?)?;
            }
            Experiment::Dos => {
                self.er_params()?;
                check_increasing("grid", require("grid", &self.grid)?)?;
                if let Some(e) = &self.giant_energies {
                    check_positive("giant_energies", e)?;
                    self.require_supercritical_lambda()?;
                }
            }
            Experiment::AtomZero => {
                self.er_params()?;
                self.require_supercritical_lambda()?;
                if self.n_graphs == Some(0) {
                    return Err(ConfigError::new("n_graphs", "must be positive"));
                }
            }
            Experiment::IslandsAudit => {
                if let Some(m) = self.max_host_vertices {
                    if m == 0 || m > crate::isoperimetry::BRUTEFORCE_MAX {
                        return Err(ConfigError::new(
                            "max_host_vertices",
                            format!("must lie in 1..={}", crate::isoperimetry::BRUTEFORCE_MAX),
                        ));
                    }
                }
                if let Some(d) = &self.binary_depths {
                    if let Some(i) = d.iter().position(|&x| x == 0 || x > 20) {
                        return Err(ConfigError::new(format!("binary_depths[{i}]"), "must lie in 1..=20"));
                    }
                }
                if self.q_ladder.as_ref().is_some_and(Vec::is_empty) {
                    return Err(ConfigError::new("q_ladder", "must not be empty"));
                }
            }
            Experiment::NormAudit => {
                let radius = self.radius.unwrap_or(12);
                if let Some(h) = self.host_radius {
                    if h < radius || h > MAX_RADIUS {
                        return Err(ConfigError::new("host_radius", format!("must lie in {radius}..={MAX_RADIUS}")));
                    }
                }
                if let Some(r) = &self.binary_radii {
                    if let Some(i) = r.iter().position(|&x| x == 0 || x > 20) {
                        return Err(ConfigError::new(format!("binary_radii[{i}]"), "must lie in 1..=20"));
                    }
                }
                self.check_supercritical_survivor()?;
            }
            Experiment::BadEvent => {
                let times = require("times", &self.times)?;
                if times.is_empty() || times.contains(&0) {
                    return Err(ConfigError::new("times", "must be a nonempty list of positive times"));
                }
                self.check_supercritical_survivor()?;
            }
        }
        Ok(())
    }

    fn check_supercritical_survivor(&self) -> Result<(), ConfigError> {
        let model = self.offspring_model()?;
        if self.conditioning.unwrap_or(Conditioning::Survivor) == Conditioning::Survivor && !model.is_supercritical() {
            return Err(ConfigError::new("offspring", format!("{model} is not supercritical")));
        }
        if self.conditioning == Some(Conditioning::Extinct) && (!model.is_supercritical() || model.extinction() == 0.0) {
            return Err(ConfigError::new("conditioning", format!("{model} has no nontrivial extinction")));
        }
        Ok(())
    }

    fn require_supercritical_lambda(&self) -> Result<(), ConfigError> {
        let l = *require("lambda", &self.lambda)?;
        if l <= 1.0 {
            return Err(ConfigError::new("lambda", format!("{l} must exceed 1")));
        }
        Ok(())
    }

    fn er_params(&self) -> Result<(), ConfigError> {
        let n = *require("n_vertices", &self.n_vertices)?;
        let l = *require("lambda", &self.lambda)?;
        if n < 2 {
            return Err(ConfigError::new("n_vertices", "must be at least 2"));
        }
        if l >= n as f64 {
            return Err(ConfigError::new("lambda", format!("{l} must be below n_vertices")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str, sets: &[&str]) -> Result<ExperimentConfig, ConfigError> {
        let sets: Vec<String> = sets.iter().map(|s| s.to_string()).collect();
        load_config(text, &sets).map(|c| c.0)
    }

    #[test]
    fn overrides_and_paths() {
        let c = load(r#"{"seed": 1, "n_samples": 4}"#, &["times=[2,4]", "offspring=table:2=1"]).unwrap();
        assert_eq!(c.times, Some(vec![2, 4]));
        assert_eq!(c.offspring.as_deref(), Some("table:2=1"));
        c.validate(Experiment::ReturnProb).unwrap();

        let e = load(r#"{"seed": 1, "n_samples": -3}"#, &[]).unwrap_err();
        assert_eq!(e.path, "n_samples");
        let e = load(r#"{"seed": 1, "n_samples": 3, "bogus": 1}"#, &[]).unwrap_err();
        assert!(e.message.contains("bogus"), "{e}");
        let e = load(r#"{"seed": 1, "n_samples": 3, "times": [1, "x"]}"#, &[]).unwrap_err();
        assert_eq!(e.path, "times[1]");
        assert!(load("[]", &[]).is_err());
        assert!(load("{}", &["noequals"]).is_err());
    }

    #[test]
    fn validation_rejects_unused_and_bad_values() {
        let base = r#"{"seed": 1, "n_samples": 2, "times": [2]}"#;
        let c = load(base, &["grid=[1]"]).unwrap();
        assert_eq!(c.validate(Experiment::ReturnProb).unwrap_err().path, "grid");
        let c = load(base, &["times=[4,2]"]).unwrap();
        assert_eq!(c.validate(Experiment::ReturnProb).unwrap_err().path, "times[1]");
        let c = load(base, &["n_samples=0"]).unwrap();
        assert_eq!(c.validate(Experiment::ReturnProb).unwrap_err().path, "n_samples");
        let c = load(base, &["experiment=\"dos\""]).unwrap();
        assert_eq!(c.validate(Experiment::ReturnProb).unwrap_err().path, "experiment");
        let c = load(r#"{"seed": 1, "n_samples": 2, "lambda": 2, "grid": [0.5, 0.25]}"#, &[]).unwrap();
        assert_eq!(c.validate(Experiment::LifshitsExtinct).unwrap_err().path, "grid[1]");
        let c = load(r#"{"seed": 1, "n_samples": 2, "lambda": 0.5, "grid": [0.5]}"#, &[]).unwrap();
        assert_eq!(c.validate(Experiment::LifshitsExtinct).unwrap_err().path, "lambda");
        let c = load(base, &["offspring=poisson:0.5"]).unwrap();
        assert_eq!(c.validate(Experiment::ReturnProb).unwrap_err().path, "offspring");
    }

    #[test]
    fn experiment_names_round_trip() {
        for e in Experiment::ALL {
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
            assert_eq!(serde_json::to_string(&e).unwrap(), format!("\"{}\"", e.name()));
        }
        assert!("nope".parse::<Experiment>().is_err());
    }
}
