use std::path::PathBuf;

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use xsense_core::boolean::ZooOptions;
use xsense_core::estimators::SweepDynamics;
use xsense_core::kernel::KernelCaps;
use xsense_core::verify::Scale;
use xsense_core::{FunctionSpec, GraphSpec};

pub const SEED_ENV: &str = "XSENSE_SEED";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Spectrum,
    Sweep,
    Exact,
    Couple,
    Perc,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Spectrum => "spectrum",
            Self::Sweep => "sweep",
            Self::Exact => "exact",
            Self::Couple => "couple",
            Self::Perc => "perc",
            Self::Verify => "verify",
        }
    }
}

/// One experiment, read from a JSON document.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Must match the subcommand when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<FunctionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphSpec>,
    /// Sweep dynamics, one output table each.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dynamics: Vec<SweepDynamics>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sizes: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub times: Vec<f64>,
    /// Rate thresholds for low-frequency masses.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub thresholds: Vec<f64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub caps: Caps,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub couple: Option<CoupleSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perc: Option<PercSpec>,
    #[serde(default)]
    pub verify: VerifySpec,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_samples() -> usize {
    10_000
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Caps {
    #[serde(default)]
    pub zoo: ZooOptions,
    #[serde(default)]
    pub kernel: KernelCaps,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoupleSpec {
    Triple { n: usize, t: f64 },
    N01 {
        n: usize,
        t: f64,
        #[serde(default)]
        occupancy: Option<usize>,
    },
    Domination { vertices: usize, set_size: usize, t: f64 },
    /// Uses the config's function on the complete graph of its width.
    BoundaryHits { t: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PercSpec {
    Rhombus,
    CompleteCorrelation {
        t: f64,
    },
    Switches {
        horizon: f64,
    },
    MediumRange {
        alpha: f64,
        t: f64,
        #[serde(default)]
        padding: Option<usize>,
    },
    SubboxFlip {
        alpha: f64,
        t: f64,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    #[serde(default)]
    pub scale: Scale,
    /// Empty means all.
    #[serde(default)]
    pub criteria: Vec<u8>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    /// File name prefix; defaults to the command name.
    #[serde(default)]
    pub stem: Option<String>,
}

/// Apply `key.path=value` overrides to a raw document. Values parse as JSON,
/// falling back to a plain string.
pub fn apply_overrides(doc: &mut Value, overrides: &[String]) -> Result<()> {
    for item in overrides {
        let (path, raw) = item
            .split_once('=')
            .with_context(|| format!("override `{item}` is not of the form key=value"))?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        let mut node = &mut *doc;
        let keys: Vec<&str> = path.split('.').collect();
        ensure!(keys.iter().all(|k| !k.is_empty()), "override key `{path}` has an empty component");
        for key in &keys[..keys.len() - 1] {
            if node.is_null() {
                *node = Value::Object(Default::default());
            }
            let Value::Object(map) = node else {
                bail!("override `{path}`: `{key}` is inside a non-object value");
            };
            node = map.entry(key.to_string()).or_insert(Value::Null);
        }
        if node.is_null() {
            *node = Value::Object(Default::default());
        }
        let Value::Object(map) = node else {
            bail!("override `{path}` targets a field of a non-object value");
        };
        map.insert(keys[keys.len() - 1].to_string(), value);
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_value(doc: Value) -> Result<Self> {
        serde_json::from_value(doc).context("invalid configuration")
    }

    pub fn zoo(&self) -> ZooOptions {
        self.caps.zoo
    }

    /// SHA-256 over the canonical JSON form, leaving out the seed and the
    /// output location.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.seed = None;
        c.output = OutputSpec::default();
        let bytes = serde_json::to_vec(&c).expect("configs serialize");
        Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn stem(&self, command: Command) -> &str {
        self.output.stem.as_deref().unwrap_or(command.name())
    }
}

/// Seed precedence: flag, then the config file, then the environment, then 0.
pub fn resolve_seed(flag: Option<u64>, config: Option<u64>, env: Option<&str>) -> Result<u64> {
    if let Some(s) = flag.or(config) {
        return Ok(s);
    }
    match env {
        Some(raw) => raw
            .trim()
            .parse()
            .with_context(|| format!("{SEED_ENV}={raw:?} is not an unsigned integer")),
        None => Ok(0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn overrides_create_and_replace() {
        let mut doc = json!({"samples": 10, "function": {"family": "majority", "n": 3}});
        apply_overrides(
            &mut doc,
            &["samples=500".into(), "function.n=5".into(), "perc.kind=rhombus".into(), "output.stem=x".into()],
        )
        .unwrap();
        assert_eq!(doc["samples"], 500);
        assert_eq!(doc["function"]["n"], 5);
        assert_eq!(doc["perc"]["kind"], "rhombus");
        assert_eq!(doc["output"]["stem"], "x");
        assert!(apply_overrides(&mut doc, &["samples".into()]).is_err());
        assert!(apply_overrides(&mut doc, &["samples.x=1".into()]).is_err());
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(ExperimentConfig::from_value(json!({"sampels": 3})).is_err());
        assert!(ExperimentConfig::from_value(json!({"couple": {"kind": "triple", "n": 3, "t": 1, "x": 0}})).is_err());
        let c = ExperimentConfig::from_value(json!({})).unwrap();
        assert_eq!(c.samples, 10_000);
    }

    #[test]
    fn hash_ignores_seed_and_output() {
        let a = ExperimentConfig::from_value(json!({"samples": 100, "seed": 1})).unwrap();
        let b = ExperimentConfig::from_value(json!({"samples": 100, "seed": 2, "output": {"dir": "/tmp"}})).unwrap();
        let c = ExperimentConfig::from_value(json!({"samples": 101})).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn seed_precedence() {
        assert_eq!(resolve_seed(Some(1), Some(2), Some("3")).unwrap(), 1);
        assert_eq!(resolve_seed(None, Some(2), Some("3")).unwrap(), 2);
        assert_eq!(resolve_seed(None, None, Some(" 3 ")).unwrap(), 3);
        assert_eq!(resolve_seed(None, None, None).unwrap(), 0);
        assert!(resolve_seed(None, None, Some("x")).is_err());
    }
}
