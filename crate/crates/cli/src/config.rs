use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use indexlab::tolerances::Tolerances;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentName {
    BottSpectrum,
    BottIndex,
    B20Homotopy,
    AlphaIsometry,
    CommutatorDecay,
    DiffeoCovariance,
    GlueIndependence,
    Lemma45,
    Freeze,
    QuantizationConvergence,
    IndexCheck,
    CayleyIndex,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 12] = [
        ExperimentName::BottSpectrum,
        ExperimentName::BottIndex,
        ExperimentName::B20Homotopy,
        ExperimentName::AlphaIsometry,
        ExperimentName::CommutatorDecay,
        ExperimentName::DiffeoCovariance,
        ExperimentName::GlueIndependence,
        ExperimentName::Lemma45,
        ExperimentName::Freeze,
        ExperimentName::QuantizationConvergence,
        ExperimentName::IndexCheck,
        ExperimentName::CayleyIndex,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentName::BottSpectrum => "bott-spectrum",
            ExperimentName::BottIndex => "bott-index",
            ExperimentName::B20Homotopy => "b20-homotopy",
            ExperimentName::AlphaIsometry => "alpha-isometry",
            ExperimentName::CommutatorDecay => "commutator-decay",
            ExperimentName::DiffeoCovariance => "diffeo-covariance",
            ExperimentName::GlueIndependence => "glue-independence",
            ExperimentName::Lemma45 => "lemma45",
            ExperimentName::Freeze => "freeze",
            ExperimentName::QuantizationConvergence => "quantization-convergence",
            ExperimentName::IndexCheck => "index-check",
            ExperimentName::CayleyIndex => "cayley-index",
        }
    }
}

impl fmt::Display for ExperimentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentName,
    #[serde(default)]
    pub parameters: Map<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentName, parameters: Value) -> Self {
        let parameters = match parameters {
            Value::Object(m) => m,
            _ => Map::new(),
        };
        Self {
            experiment,
            parameters,
            output: None,
            seed: 0,
            tolerances: BTreeMap::new(),
        }
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::config(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Defaults overridden by `base`, then by this config's own table.
    pub fn resolve_tolerances(&self, base: &Tolerances) -> CliResult<Tolerances> {
        let mut tol = base.clone();
        for (k, v) in &self.tolerances {
            tol.set(k, *v).map_err(|e| CliError::config(e.to_string()))?;
        }
        Ok(tol)
    }
}

/// Typed parameters with unknown keys rejected, plus the echo with defaults filled in.
pub fn parse_parameters<P: DeserializeOwned + Serialize>(
    experiment: ExperimentName,
    params: &Map<String, Value>,
) -> CliResult<(P, Value)> {
    let typed: P = serde_json::from_value(Value::Object(params.clone()))
        .map_err(|e| CliError::config(format!("{experiment} parameters: {e}")))?;
    let echo = serde_json::to_value(&typed)?;
    Ok((typed, echo))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for name in ExperimentName::ALL {
            let v = serde_json::to_value(name).unwrap();
            assert_eq!(v, Value::String(name.as_str().into()));
            let back: ExperimentName = serde_json::from_value(v).unwrap();
            assert_eq!(back, name);
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = ExperimentConfig::from_json(r#"{"experiment":"bott-index","colour":1}"#);
        assert!(matches!(e, Err(CliError::Config(_))));
        let ok = ExperimentConfig::from_json(r#"{"experiment":"bott-index"}"#).unwrap();
        assert_eq!(ok.seed, 0);
    }

    #[test]
    fn tolerance_overrides_validate_keys() {
        let cfg = ExperimentConfig::from_json(
            r#"{"experiment":"freeze","tolerances":{"freeze":0.2}}"#,
        )
        .unwrap();
        assert_eq!(cfg.resolve_tolerances(&Tolerances::default()).unwrap().get("freeze"), 0.2);
        let bad = ExperimentConfig::from_json(
            r#"{"experiment":"freeze","tolerances":{"nope":0.2}}"#,
        )
        .unwrap();
        assert!(bad.resolve_tolerances(&Tolerances::default()).is_err());
    }
}
