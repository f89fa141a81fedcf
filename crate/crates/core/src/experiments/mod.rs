//! Named experiments built from the physics modules, driven by JSON
//! scenario files.
//!
//! A scenario file may leave out anything that has a default. Loading
//! resolves it into a [`Scenario`] with every default expanded; that form is
//! what `--set` overrides address and what each run records next to its
//! outputs.

mod coherence;
mod dynamics;
mod efficiency;
mod readout;
mod single_shot;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::chain::{ChainConfig, ReadoutPath};
use crate::device::{default_paper_device, load_device_params, DeviceFile, DeviceParams};
use crate::error::{Error, Result};
use crate::qubit::DemolitionConfig;
use crate::rng::SeedSpec;

pub use coherence::{run_coherence_stats, CoherenceOutput, CoherenceParams, CoherenceSummary, Overrides};
pub use dynamics::{
    run_chevron, run_ramsey, ChevronOutput, ChevronParams, RamseyOutput, RamseyParams,
};
pub use efficiency::{run_efficiency_map, EfficiencyMapOutput, EfficiencyMapParams, EfficiencyMapSummary};
pub use readout::{run_readout_map, ReadoutMapOutput, ReadoutMapParams, ReadoutMapSummary};
pub use single_shot::{
    run_single_shot, EfficiencyAnchor, SingleShotOutput, SingleShotParams, SingleShotSummary,
};

/// Evenly spaced axis, linear or logarithmic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    #[serde(default)]
    pub log: bool,
}

impl Grid {
    pub fn linear(start: f64, stop: f64, points: usize) -> Self {
        Self {
            start,
            stop,
            points,
            log: false,
        }
    }

    pub fn log(start: f64, stop: f64, points: usize) -> Self {
        Self {
            start,
            stop,
            points,
            log: true,
        }
    }

    pub fn validate(&self, field: &str) -> Result<()> {
        if self.points == 0 {
            return Err(Error::validation(field, "must have at least one point"));
        }
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(Error::validation(field, "bounds must be finite"));
        }
        if self.log && !(self.start > 0.0 && self.stop > 0.0) {
            return Err(Error::validation(field, "logarithmic bounds must be positive"));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let last = self.points - 1;
        let n = last as f64;
        (0..self.points)
            .map(|k| {
                if k == last {
                    return self.stop;
                }
                let s = k as f64 / n;
                if k == 0 {
                    self.start
                } else if self.log {
                    (self.start.ln() + s * (self.stop.ln() - self.start.ln())).exp()
                } else {
                    self.start + s * (self.stop - self.start)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Experiment {
    EfficiencyMap(EfficiencyMapParams),
    ReadoutMap(ReadoutMapParams),
    SingleShot(SingleShotParams),
    CoherenceStats(CoherenceParams),
    Chevron(ChevronParams),
    Ramsey(RamseyParams),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::EfficiencyMap(_) => "efficiency_map",
            Experiment::ReadoutMap(_) => "readout_map",
            Experiment::SingleShot(_) => "single_shot",
            Experiment::CoherenceStats(_) => "coherence_stats",
            Experiment::Chevron(_) => "chevron",
            Experiment::Ramsey(_) => "ramsey",
        }
    }

    fn validate(&self, prefix: &str) -> Result<()> {
        match self {
            Experiment::EfficiencyMap(p) => p.validate(prefix),
            Experiment::ReadoutMap(p) => p.validate(prefix),
            Experiment::SingleShot(p) => p.validate(prefix),
            Experiment::CoherenceStats(p) => p.validate(prefix),
            Experiment::Chevron(p) => p.validate(prefix),
            Experiment::Ramsey(p) => p.validate(prefix),
        }
    }
}

/// One entry of a scenario's experiment list: a `name` next to the
/// experiment's own fields.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentEntry {
    pub name: String,
    pub experiment: Experiment,
}

impl Serialize for ExperimentEntry {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut v = serde_json::to_value(&self.experiment).map_err(serde::ser::Error::custom)?;
        if let Value::Object(m) = &mut v {
            m.insert("name".into(), Value::String(self.name.clone()));
        }
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ExperimentEntry {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let mut v = Value::deserialize(d)?;
        let m = v
            .as_object_mut()
            .ok_or_else(|| D::Error::custom("experiment must be an object"))?;
        let name = match m.remove("name") {
            Some(Value::String(n)) => n,
            Some(_) => return Err(D::Error::custom("experiment name must be a string")),
            None => return Err(D::Error::missing_field("name")),
        };
        let experiment = serde_json::from_value(v).map_err(D::Error::custom)?;
        Ok(Self { name, experiment })
    }
}

/// Fully resolved scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub seed: SeedSpec,
    pub device: DeviceFile,
    pub chain: ChainConfig,
    pub demolition: DemolitionConfig,
    pub experiments: Vec<ExperimentEntry>,
}

/// Scenario as written on disk; omitted sections take their defaults.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: String,
    #[serde(default)]
    seed: Option<SeedSpec>,
    #[serde(default)]
    device_file: Option<PathBuf>,
    #[serde(default)]
    chain: Option<Value>,
    #[serde(default)]
    demolition: Option<Value>,
    experiments: Vec<Value>,
}

/// Everything an experiment needs besides its own parameters.
#[derive(Debug, Clone)]
pub struct Context {
    pub device: DeviceParams,
    pub chain: ChainConfig,
    pub demolition: DemolitionConfig,
    pub seed: SeedSpec,
}

pub const BUILTIN_SCENARIOS: &[(&str, &str)] = &[
    ("fig1c", include_str!("../../data/scenarios/fig1c.json")),
    ("fig1e", include_str!("../../data/scenarios/fig1e.json")),
    ("fig2", include_str!("../../data/scenarios/fig2.json")),
    ("fig3a", include_str!("../../data/scenarios/fig3a.json")),
    ("fig3c", include_str!("../../data/scenarios/fig3c.json")),
    ("fig3e", include_str!("../../data/scenarios/fig3e.json")),
    ("fig3f", include_str!("../../data/scenarios/fig3f.json")),
    ("fig4", include_str!("../../data/scenarios/fig4.json")),
    ("siIV", include_str!("../../data/scenarios/siIV.json")),
];

pub fn builtin_scenario_names() -> Vec<&'static str> {
    BUILTIN_SCENARIOS.iter().map(|(n, _)| *n).collect()
}

/// Recursively overlays `patch` onto `base`.
fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn schema_error(what: &str, e: serde_json::Error) -> Error {
    Error::Schema(format!("{what}: {e}"))
}

impl Scenario {
    /// Resolves scenario text. `base_dir` anchors a relative `device_file`;
    /// `device_override` replaces the device entirely.
    pub fn from_json_str(text: &str, base_dir: Option<&Path>, device_override: Option<&DeviceParams>) -> Result<Self> {
        let file: ScenarioFile = serde_json::from_str(text).map_err(|e| schema_error("scenario", e))?;
        let device = match (device_override, &file.device_file) {
            (Some(d), _) => d.clone(),
            (None, Some(p)) => {
                let path = match base_dir {
                    Some(b) if p.is_relative() => b.join(p),
                    _ => p.clone(),
                };
                load_device_params(path)?
            }
            (None, None) => default_paper_device(),
        };

        let path = match file.chain.as_ref().and_then(|c| c.get("path")) {
            Some(v) => serde_json::from_value(v.clone()).map_err(|e| schema_error("chain.path", e))?,
            None => ReadoutPath::MicrowaveOnly,
        };
        let base_chain = match path {
            ReadoutPath::MicrowaveOnly => ChainConfig::microwave_default(&device),
            ReadoutPath::Optical => ChainConfig::optical_default(&device),
        };
        let mut chain = serde_json::to_value(&base_chain).expect("serializable");
        if let Some(patch) = file.chain {
            merge(&mut chain, patch);
        }
        let mut demolition = serde_json::to_value(DemolitionConfig::default()).expect("serializable");
        if let Some(patch) = file.demolition {
            merge(&mut demolition, patch);
        }

        let mut experiments = Vec::new();
        for (k, mut e) in file.experiments.into_iter().enumerate() {
            let obj = e
                .as_object_mut()
                .ok_or_else(|| Error::Schema(format!("experiments[{k}] must be an object")))?;
            if !obj.contains_key("name") {
                let kind = obj.get("kind").cloned().unwrap_or(Value::Null);
                obj.insert("name".into(), kind);
            }
            let entry: ExperimentEntry =
                serde_json::from_value(e).map_err(|err| schema_error(&format!("experiments[{k}]"), err))?;
            experiments.push(entry);
        }

        let mut root = Map::new();
        root.insert("name".into(), Value::String(file.name));
        root.insert(
            "seed".into(),
            serde_json::to_value(file.seed.unwrap_or(SeedSpec::new(0, 0))).expect("serializable"),
        );
        root.insert("device".into(), serde_json::to_value(device.to_file()).expect("serializable"));
        root.insert("chain".into(), chain);
        root.insert("demolition".into(), demolition);
        root.insert("experiments".into(), serde_json::to_value(&experiments).expect("serializable"));
        let scenario = Self::from_value(Value::Object(root))?;
        Ok(scenario)
    }

    pub fn from_value(v: Value) -> Result<Self> {
        let s: Scenario = serde_json::from_value(v).map_err(|e| schema_error("scenario", e))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>, device_override: Option<&DeviceParams>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_json_str(&text, path.parent(), device_override)
    }

    /// A shipped scenario by name, or a scenario file path.
    pub fn find(name_or_path: &str, device_override: Option<&DeviceParams>) -> Result<Self> {
        if let Some((_, text)) = BUILTIN_SCENARIOS.iter().find(|(n, _)| *n == name_or_path) {
            return Self::from_json_str(text, None, device_override);
        }
        let p = Path::new(name_or_path);
        if p.is_file() {
            return Self::load(p, device_override);
        }
        Err(Error::UnknownScenario(name_or_path.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        {
            return Err(Error::validation("name", "must be a non-empty identifier"));
        }
        self.device.clone().into_params()?;
        self.chain.validate()?;
        self.demolition.validate()?;
        if self.experiments.is_empty() {
            return Err(Error::validation("experiments", "must not be empty"));
        }
        let mut seen = BTreeSet::new();
        for (k, e) in self.experiments.iter().enumerate() {
            if !seen.insert(e.name.as_str()) {
                return Err(Error::validation(
                    format!("experiments[{k}].name"),
                    format!("duplicate name {:?}", e.name),
                ));
            }
            e.experiment.validate(&format!("experiments[{k}]"))?;
        }
        Ok(())
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("serializable")
    }

    /// Applies `path=value` overrides to the resolved form. Each path must
    /// name an existing key; values are parsed as JSON, falling back to a
    /// plain string.
    pub fn with_overrides(&self, overrides: &[(String, String)]) -> Result<Self> {
        let mut v = self.to_value();
        for (path, raw) in overrides {
            set_dotted(&mut v, path, raw)?;
        }
        Self::from_value(v)
    }

    pub fn context(&self) -> Result<Context> {
        Ok(Context {
            device: self.device.clone().into_params()?,
            chain: self.chain.clone(),
            demolition: self.demolition,
            seed: self.seed,
        })
    }
}

/// Sets `path` (dot-separated keys, numeric segments index arrays) inside
/// `root`. Fails with a usage error when the key does not exist.
pub fn set_dotted(root: &mut Value, path: &str, raw: &str) -> Result<()> {
    let mut cur = root;
    for seg in path.split('.') {
        cur = match cur {
            Value::Object(m) => m.get_mut(seg),
            Value::Array(a) => seg.parse::<usize>().ok().and_then(move |i| a.get_mut(i)),
            _ => None,
        }
        .ok_or_else(|| Error::Usage(format!("unknown override key {path:?}")))?;
    }
    *cur = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    Ok(())
}

/// Splits `key=value`.
pub fn parse_override(s: &str) -> Result<(String, String)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| Error::Usage(format!("override {s:?} is not of the form key=value")))?;
    if k.is_empty() {
        return Err(Error::Usage(format!("override {s:?} has an empty key")));
    }
    Ok((k.to_string(), v.to_string()))
}

/// Result of one experiment: a JSON summary plus data tables.
pub trait ExperimentOutput {
    fn summary(&self) -> Value;
    /// `(file name, CSV bytes)` pairs.
    fn tables(&self) -> Result<Vec<(String, Vec<u8>)>>;
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub config: Value,
    pub results: Vec<ExperimentResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub name: String,
    pub kind: String,
    pub files: Vec<String>,
    pub summary: Value,
}

pub fn run_experiment(ctx: &Context, entry: &ExperimentEntry, index: usize) -> Result<Box<dyn ExperimentOutput>> {
    let ctx = Context {
        seed: ctx.seed.substream(index as u64 + 1),
        ..ctx.clone()
    };
    Ok(match &entry.experiment {
        Experiment::EfficiencyMap(p) => Box::new(run_efficiency_map(&ctx, p)?),
        Experiment::ReadoutMap(p) => Box::new(run_readout_map(&ctx, p)?),
        Experiment::SingleShot(p) => Box::new(run_single_shot(&ctx, p)?),
        Experiment::CoherenceStats(p) => Box::new(run_coherence_stats(&ctx, p)?),
        Experiment::Chevron(p) => Box::new(run_chevron(&ctx, p)?),
        Experiment::Ramsey(p) => Box::new(run_ramsey(&ctx, p)?),
    })
}

/// Runs every experiment and writes `report.json`, `resolved_config.json`
/// and the data tables into `out_root/<scenario name>/`. Returns the run
/// directory and the report.
pub fn run_scenario(scenario: &Scenario, out_root: &Path) -> Result<(PathBuf, RunReport)> {
    let ctx = scenario.context()?;
    let mut outputs = Vec::new();
    for (k, entry) in scenario.experiments.iter().enumerate() {
        outputs.push(run_experiment(&ctx, entry, k)?);
    }
    let dir = out_root.join(&scenario.name);
    fs::create_dir_all(&dir).map_err(|e| Error::io(dir.display().to_string(), e))?;

    let config = scenario.to_value();
    let mut results = Vec::new();
    for (entry, out) in scenario.experiments.iter().zip(&outputs) {
        let mut files = Vec::new();
        for (file, bytes) in out.tables()? {
            let name = format!("{}_{}", entry.name, file);
            let path = dir.join(&name);
            fs::write(&path, bytes).map_err(|e| Error::io(path.display().to_string(), e))?;
            files.push(name);
        }
        results.push(ExperimentResult {
            name: entry.name.clone(),
            kind: entry.experiment.kind().to_string(),
            files,
            summary: out.summary(),
        });
    }
    let report = RunReport {
        scenario: scenario.name.clone(),
        config: config.clone(),
        results,
    };
    write_json(&dir.join("resolved_config.json"), &config)?;
    write_json(&dir.join("report.json"), &report)?;
    Ok((dir, report))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Serializes rows to CSV bytes.
pub(crate) fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner()
        .map_err(|e| Error::io("serializing CSV", e.into_error()))
}
