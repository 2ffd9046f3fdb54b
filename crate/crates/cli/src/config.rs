//! The JSON session configuration.

use std::collections::BTreeMap;
use std::path::Path;

use num_traits::ToPrimitive;
use rotcocycle::detect::{ReportConfig, Thresholds};
use serde::{Deserialize, Serialize};

use crate::spec::parse_rational;
use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

fn zero() -> String {
    "0".into()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymSpec {
    pub name: String,
    pub value: String,
}

/// A form as text (`"2*alpha - 1"`) or by coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FormSpec {
    Text(String),
    Coeffs {
        #[serde(default = "zero")]
        rat: String,
        #[serde(default = "zero")]
        alpha_coeff: String,
        #[serde(default)]
        beta_coeffs: BTreeMap<String, String>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceSpec {
    pub lo: FormSpec,
    pub hi: FormSpec,
    pub value: Vec<FormSpec>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CocycleSpec {
    pub d: usize,
    pub pieces: Vec<PieceSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub relations: Vec<SymSpec>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PhiConfig {
    Shorthand(String),
    Spec(CocycleSpec),
}

/// Overrides for the detection thresholds. Rationals are `"p/q"` strings.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_cluster: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_threshold: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<i64>,
    /// Tail denominators scanned by the report.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    /// Persistence radius of quasi-period scans.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_budget: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub betas: Vec<SymSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<PhiConfig>,
    #[serde(default)]
    pub thresholds: ThresholdsConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap_bits: Option<u32>,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            schema_version: SCHEMA_VERSION,
            alpha: None,
            betas: Vec::new(),
            phi: None,
            thresholds: ThresholdsConfig::default(),
            output: None,
            seed: None,
            threads: None,
            cap_bits: None,
        }
    }
}

impl SessionConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: SessionConfig = serde_json::from_str(text)
            .map_err(|e| CliError::Usage(format!("config error at line {}, column {}: {e}", e.line(), e.column())))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CliError::Usage(format!("unsupported schema_version {}", cfg.schema_version)));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn report_config(&self) -> Result<ReportConfig, CliError> {
        let t = &self.thresholds;
        let mut th = Thresholds::default();
        let mut rc = ReportConfig::default();
        if let Some(x) = &t.delta {
            th.delta = parse_rational(x)?;
        }
        if let Some(x) = &t.tau {
            th.tau = parse_rational(x)?;
        }
        if let Some(x) = &t.eps_cluster {
            th.eps_cluster = parse_rational(x)?;
        }
        if let Some(x) = &t.c_threshold {
            th.c_threshold = parse_rational(x)?;
        }
        if let Some(x) = t.depth {
            th.depth = x;
        }
        if let Some(x) = t.n_max {
            th.n_max = x;
        }
        if let Some(x) = t.window {
            rc.window = x;
        }
        if let Some(x) = &t.eps {
            rc.eps = parse_rational(x)?.to_f64().unwrap_or(f64::NAN);
            if !(rc.eps > 0.0) {
                return Err(CliError::Usage("eps must be positive".into()));
            }
        }
        if let Some(x) = t.grid {
            rc.grid = x;
        }
        if let Some(x) = t.time_budget {
            rc.time_budget = x;
        }
        rc.thresholds = th;
        Ok(rc)
    }
}
