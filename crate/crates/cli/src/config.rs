//! The run configuration: one JSON document per run, with dotted overrides.

use std::path::Path;

use rnnhl::bifurcation::{linear_grid, EdgeTarget, SweepSpec, SweepSystem};
use rnnhl::equilibria::NewtonConfig;
use rnnhl::integrate::IntegrationConfig;
use rnnhl::model::{NetworkSpec, Reduced3};
use rnnhl::netgen::{build, TopologyConfig};
use rnnhl::verify::Suite;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::CliError;

pub const CONFIG_SCHEMA: &str = "rnnhl.config/1";

fn default_schema() -> String {
    CONFIG_SCHEMA.to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_schema")]
    pub schema: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub system: SystemConfig,
    #[serde(default)]
    pub simulate: SimulateConfig,
    #[serde(default)]
    pub newton: NewtonConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema: default_schema(),
            seed: 0,
            system: SystemConfig::default(),
            simulate: SimulateConfig::default(),
            newton: NewtonConfig::default(),
            sweep: SweepConfig::default(),
            verify: VerifyConfig::default(),
        }
    }
}

/// Which dynamical system a run operates on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemConfig {
    /// The three-dimensional symmetric reduction.
    Reduced { c: f64 },
    /// An explicit network, inline or loaded from a file.
    Network {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        spec: Option<NetworkSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path: Option<String>,
    },
    /// A seeded preset; `c`, when given, is set on the preset's swept edges.
    Generated {
        topology: TopologyConfig,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        c: Option<f64>,
    },
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig::Reduced { c: -3.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    /// Start state; a seeded sample from the invariant box when absent.
    pub initial: Option<Vec<f64>>,
    pub integration: IntegrationConfig,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            initial: None,
            integration: IntegrationConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub c_min: f64,
    pub c_max: f64,
    pub points: usize,
    /// Explicit grid; overrides `c_min`, `c_max` and `points`.
    pub c_values: Option<Vec<f64>>,
    /// Edges to vary for explicit networks; generated presets use their own.
    pub target: EdgeTarget,
    /// Bisect every detected transition down to `refine_tol`.
    pub refine: bool,
    pub refine_tol: f64,
    /// State coordinates written to the diagram; all activations when absent.
    pub projection: Option<Vec<usize>>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            c_min: -150.0,
            c_max: -3.0,
            points: 148,
            c_values: None,
            target: EdgeTarget::Bidirectional,
            refine: true,
            refine_tol: 1e-6,
            projection: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub suite: String,
    pub fail_fast: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            suite: "all".into(),
            fail_fast: false,
        }
    }
}

/// A system ready to run.
pub enum System {
    Reduced(Reduced3),
    Network {
        spec: NetworkSpec,
        /// Edges a sweep varies.
        swept: EdgeTarget,
    },
}

impl RunConfig {
    /// Reads `path` (or starts from defaults), applies `key=value` overrides
    /// and the seed flag, then checks the schema.
    pub fn load(path: Option<&Path>, overrides: &[String], seed: Option<u64>) -> Result<Self, CliError> {
        let mut doc = serde_json::to_value(RunConfig::default()).expect("defaults serialize");
        if let Some(p) = path {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            let file: Value =
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            if !file.is_object() {
                return Err(CliError::Config(format!("{}: expected a JSON object", p.display())));
            }
            merge(&mut doc, file);
        }
        for item in overrides {
            apply_override(&mut doc, item)?;
        }
        if let Some(seed) = seed {
            set_path(&mut doc, "seed", Value::from(seed))?;
        }
        let cfg: RunConfig = serde_json::from_value(doc).map_err(|e| CliError::Config(e.to_string()))?;
        if cfg.schema != CONFIG_SCHEMA {
            return Err(CliError::Config(format!(
                "schema must be \"{CONFIG_SCHEMA}\" (got \"{}\")",
                cfg.schema
            )));
        }
        cfg.newton.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }

    /// The resolved configuration as JSON with sorted keys.
    pub fn canonical_json(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        serde_json::to_string(&value).expect("value serializes")
    }

    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }

    pub fn system(&self) -> Result<System, CliError> {
        let config = |e: String| CliError::Config(e);
        match &self.system {
            SystemConfig::Reduced { c } => {
                if *c == 0.0 || !c.is_finite() {
                    return Err(config(format!("system.c must be finite and non-zero (got {c})")));
                }
                Ok(System::Reduced(Reduced3 { c: *c }))
            }
            SystemConfig::Network { spec, path } => {
                let spec = match (spec, path) {
                    (Some(s), None) => s.clone(),
                    (None, Some(p)) => {
                        let text = std::fs::read_to_string(p).map_err(|e| config(format!("cannot read {p}: {e}")))?;
                        serde_json::from_str(&text).map_err(|e| config(format!("{p}: {e}")))?
                    }
                    _ => return Err(config("system needs exactly one of spec or path".into())),
                };
                spec.validate().map_err(|e| config(format!("system.spec: {e}")))?;
                Ok(System::Network {
                    spec,
                    swept: self.sweep.target.clone(),
                })
            }
            SystemConfig::Generated { topology, c } => {
                let generated = build(topology).map_err(|e| config(format!("system.topology: {e}")))?;
                let spec = match c {
                    Some(c) if *c == 0.0 || !c.is_finite() => {
                        return Err(config(format!("system.c must be finite and non-zero (got {c})")))
                    }
                    Some(c) => generated.spec.with_learning_rate(&generated.swept_edges, *c),
                    None => generated.spec,
                };
                Ok(System::Network {
                    spec,
                    swept: EdgeTarget::Indices(generated.swept_edges),
                })
            }
        }
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec, CliError> {
        let s = &self.sweep;
        let c_values = match &s.c_values {
            Some(v) => v.clone(),
            None => {
                if s.points < 2 || !(s.c_min < s.c_max) {
                    return Err(CliError::Config(format!(
                        "sweep needs c_min < c_max and points >= 2 (got [{}, {}], {})",
                        s.c_min, s.c_max, s.points
                    )));
                }
                linear_grid(s.c_min, s.c_max, s.points)
            }
        };
        let system = match self.system()? {
            System::Reduced(_) => SweepSystem::Reduced,
            System::Network { spec, swept } => SweepSystem::Network { spec, target: swept },
        };
        let spec = SweepSpec {
            system,
            c_values,
            newton: self.newton.clone(),
            seed: self.seed,
        };
        spec.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if !(s.refine_tol > 0.0) {
            return Err(CliError::Config("sweep.refine_tol must be > 0".into()));
        }
        Ok(spec)
    }

    pub fn suite(&self) -> Result<Suite, CliError> {
        self.verify.suite.parse().map_err(|e: rnnhl::verify::VerifyError| CliError::Config(e.to_string()))
    }
}

/// Deep-merges `patch` into `base`. Objects tagged with a different `kind`
/// replace the base object instead of merging into it.
fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) if p.get("kind").is_none_or(|k| b.get("kind") == Some(k)) => {
            for (key, value) in p {
                match b.get_mut(&key) {
                    Some(slot) => merge(slot, value),
                    None => {
                        b.insert(key, value);
                    }
                }
            }
        }
        (slot, value) => *slot = value,
    }
}

/// Applies `a.b.c=value`; the value is parsed as JSON and kept as a string
/// when that fails.
fn apply_override(doc: &mut Value, item: &str) -> Result<(), CliError> {
    let (path, raw) = item
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override '{item}' must look like key.path=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    set_path(doc, path, value)
}

fn set_path(doc: &mut Value, path: &str, value: Value) -> Result<(), CliError> {
    let mut node = doc;
    let keys: Vec<&str> = path.split('.').collect();
    for (depth, key) in keys.iter().enumerate() {
        if key.is_empty() {
            return Err(CliError::Config(format!("empty key in override path '{path}'")));
        }
        let last = depth + 1 == keys.len();
        node = match node {
            Value::Object(map) => {
                if last {
                    map.insert(key.to_string(), value);
                    return Ok(());
                }
                map.entry(key.to_string()).or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(items) => {
                let idx: usize = key
                    .parse()
                    .map_err(|_| CliError::Config(format!("'{key}' in '{path}' indexes an array")))?;
                let len = items.len();
                let slot = items
                    .get_mut(idx)
                    .ok_or_else(|| CliError::Config(format!("index {idx} in '{path}' out of range ({len})")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(CliError::Config(format!("'{path}' descends into a scalar at '{key}'"))),
        };
    }
    Ok(())
}
