use serde::{Deserialize, Serialize};

use crate::args::Command;
use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub schema_version: u32,
    pub config: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimate: Option<EstimateBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<PlanBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<DepthBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub groundstate: Option<GroundStateBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<Vec<GapRow>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prefactor: Option<Vec<PrefactorRow>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    pub timing: Timing,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateBlock {
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanBlock {
    pub m: usize,
    pub s: f64,
    pub nodes: Vec<PlanNode>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanNode {
    pub j: usize,
    pub r_j: u64,
    pub s_j: f64,
    pub b_j: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gates: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DepthBlock {
    pub max: u64,
    pub per_node: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundStateBlock {
    pub lambda: f64,
    pub mu: f64,
    #[serde(rename = "Delta")]
    pub delta: f64,
    pub gamma: f64,
    pub filter_degree: usize,
    pub eta: f64,
    /// Normalization mode actually used.
    pub mode: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub numerator: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub denominator: Option<f64>,
    pub queries: usize,
    /// Exact ground-state expectation.
    pub reference: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapRow {
    pub n: usize,
    pub xi0: f64,
    pub xi1: f64,
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrefactorRow {
    pub n: usize,
    pub k: usize,
    pub alpha_comm: f64,
    pub lambda_comm_prime: f64,
    pub tuples: u64,
    pub mode: String,
    pub lower_bound: f64,
    pub upper_envelope: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Timing {
    pub elapsed_ms: f64,
}

impl Report {
    pub fn new(config: Command) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            config,
            estimate: None,
            plan: None,
            depth: None,
            groundstate: None,
            gap: None,
            prefactor: None,
            warnings: Vec::new(),
            timing: Timing { elapsed_ms: 0.0 },
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Parse and check the schema version.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let r: Report = serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid report: {e}")))?;
        if r.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "report schema version {} is not supported (expected {SCHEMA_VERSION})",
                r.schema_version
            )));
        }
        Ok(r)
    }
}
