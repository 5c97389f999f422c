//! TOML experiment configs. Unknown keys are rejected everywhere.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Optional guard; must match the subcommand when present.
    pub subcommand: Option<String>,
    pub domain: Option<DomainConfig>,
    pub problem: Option<ProblemConfig>,
    #[serde(default)]
    pub run: RunConfig,
    pub hardy: Option<HardyConfig>,
    pub exponents: Option<ExponentsConfig>,
    pub certify: Option<CertifyConfig>,
    pub probe: Option<ProbeConfig>,
    pub limits: Option<LimitsConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    /// `ball`, `cube` or `annulus`.
    pub shape: String,
    /// Radius, half side, or inner and outer radius.
    pub size: Vec<f64>,
    pub dim: usize,
    pub nodes: usize,
    #[serde(default = "default_margin")]
    pub margin: usize,
    #[serde(default = "default_true")]
    pub offset: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    /// One of `D_s2`, `u_times_D_s2`, `abs_frac_power_q`, `riesz_grad_q`,
    /// `B_sq_alpha`.
    #[serde(default = "default_kind")]
    pub kind: String,
    pub s: f64,
    pub lambda: Option<f64>,
    #[serde(default = "default_one")]
    pub mu: f64,
    /// Amplitude of `f`.
    #[serde(default = "default_one")]
    pub f: f64,
    /// `f(x) = f |x|^{-f_beta}` when set.
    pub f_beta: Option<f64>,
    pub m: Option<f64>,
    pub t: Option<f64>,
    pub q: Option<f64>,
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    pub divergence_norm: Option<f64>,
    /// `linf`, `energy` or `frac_lr:<r>`.
    #[serde(default = "default_monitors")]
    pub monitors: Vec<String>,
    /// Cells per axis of the refinement levels.
    #[serde(default)]
    pub levels: Vec<usize>,
    #[serde(default = "default_half_width")]
    pub half_width: f64,
    #[serde(default)]
    pub lambdas: Vec<f64>,
    #[serde(default)]
    pub s_values: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            tolerance: default_tolerance(),
            max_iter: default_max_iter(),
            divergence_norm: None,
            monitors: default_monitors(),
            levels: Vec::new(),
            half_width: default_half_width(),
            lambdas: Vec::new(),
            s_values: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardyCase {
    pub dim: usize,
    pub s: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstructionConfig {
    pub s: f64,
    pub m: f64,
    pub eps: f64,
    pub radii: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardyConfig {
    #[serde(default)]
    pub cases: Vec<HardyCase>,
    #[serde(default = "default_hardy_tol")]
    pub tolerance: f64,
    /// Shrinking-bump table on the `[domain]` grid.
    pub obstruction: Option<ObstructionConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentCase {
    pub proposition: String,
    pub dim: u32,
    /// Rationals as `"3/4"`, `"0.75"` or `"1"`.
    pub s: String,
    pub t: Option<String>,
    pub m: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentsConfig {
    pub cases: Vec<ExponentCase>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyConfig {
    pub mu1: f64,
    pub lambdas: Vec<f64>,
    pub centers: Vec<Vec<f64>>,
    pub widths: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    pub beta: f64,
    pub s: f64,
    pub t: f64,
    pub p: Vec<f64>,
    pub levels: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsConfig {
    pub s_values: Vec<f64>,
    /// Support radius of the test bump `(1 - |x|²/ρ²)⁴₊`.
    pub bump_radius: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Significant digits; shortest round-trip form when unset.
    pub precision: Option<usize>,
    /// Prefix for CSV file names.
    pub prefix: Option<String>,
}

fn default_margin() -> usize {
    2
}
fn default_true() -> bool {
    true
}
fn default_one() -> f64 {
    1.0
}
fn default_kind() -> String {
    "D_s2".into()
}
fn default_tolerance() -> f64 {
    1e-10
}
fn default_max_iter() -> usize {
    200
}
fn default_monitors() -> Vec<String> {
    vec!["linf".into()]
}
fn default_half_width() -> f64 {
    2.0
}
fn default_hardy_tol() -> f64 {
    1e-8
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<ExperimentConfig, CliError> {
        toml::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// SHA-256 over the subcommand and the config with defaults filled in.
    pub fn resolved_hash(&self, subcommand: &str) -> String {
        let body = toml::to_string(self).expect("configs serialize");
        let mut h = Sha256::new();
        h.update(subcommand.as_bytes());
        h.update([0u8]);
        h.update(body.as_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}
