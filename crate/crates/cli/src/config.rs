//! JSON run configuration. Every section rejects unknown keys; values that
//! fail validation are reported with a JSON pointer to the offending key.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelConfig>,
    /// One map per transmitter; omitted means no CSIT.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csit: Option<Vec<CsitConfig>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<PolicyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub engine: Option<EngineConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conferencing: Option<ConferencingConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<RegionOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frontier: Option<FrontierConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discrete: Option<DiscreteConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equiv: Option<EquivConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reproduce: Option<ReproduceConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub num_tx: usize,
    #[serde(default = "one")]
    pub num_rx: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_db: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_db: Option<Vec<f64>>,
    pub fading: FadingConfig,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FadingConfig {
    Rayleigh,
    /// Every gain equal to one.
    Unit,
    /// Fixed gains, one row per receiver.
    Deterministic { gains: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CsitConfig {
    None,
    Threshold { row: usize, col: usize, cuts: Vec<f64> },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicyConfig {
    /// State-independent policy; `phi` defaults to the full budget.
    Constant {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        phi: Option<Vec<f64>>,
        rho: Vec<f64>,
    },
    /// One table pair per transmitter, indexed by the CSIT symbol.
    Tables(Vec<TableConfig>),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TableConfig {
    pub phi: Vec<f64>,
    pub rho: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum EngineConfig {
    Mc { samples: usize, seed: u64 },
    Quad { nodes: usize },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConferencingConfig {
    pub c12: f64,
    pub c21: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RegionOptions {
    /// Keep the `R0` coordinate. Without it the total bound acts on `R1 + .. + Rp`.
    #[serde(default = "yes")]
    pub common_message: bool,
    /// Emit the vertex list (needs `p <= 3`).
    #[serde(default = "yes")]
    pub vertices: bool,
}

impl Default for RegionOptions {
    fn default() -> Self {
        Self {
            common_message: true,
            vertices: true,
        }
    }
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum FrontierKind {
    CommonMessage,
    Conferencing,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FrontierConfig {
    pub kind: FrontierKind,
    #[serde(default = "default_rho_points")]
    pub rho_points: usize,
    #[serde(default = "default_power_levels")]
    pub power_levels: usize,
    #[serde(default = "default_max_policies")]
    pub max_policies: usize,
    /// Planar directions `(0, cos t, sin t)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directions: Option<usize>,
    /// Weight vectors on the simplex with this many steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simplex_steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<Vec<f64>>>,
}

fn default_rho_points() -> usize {
    21
}

fn default_power_levels() -> usize {
    4
}

fn default_max_policies() -> usize {
    200_000
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DiscreteChannelConfig {
    BinaryAdder,
    Identity { size: usize },
    BinarySymmetric { crossover: f64 },
    /// `transition[x]` is the output distribution for input tuple `x`.
    /// Tuples are mixed-radix with the first transmitter (or receiver) as
    /// the most significant digit.
    Explicit {
        inputs: Vec<usize>,
        outputs: Vec<usize>,
        transition: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LawConfig {
    pub pu: Vec<f64>,
    /// `cond[i][u]` is the input distribution of transmitter `i` given `U = u`.
    pub cond: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BruteForceConfig {
    #[serde(default = "default_denominator")]
    pub denominator: usize,
    #[serde(default = "default_u_cap")]
    pub u_size_cap: usize,
    #[serde(default = "default_max_laws")]
    pub max_laws: usize,
    #[serde(default = "default_weight_steps")]
    pub weight_steps: usize,
}

fn default_denominator() -> usize {
    8
}

fn default_u_cap() -> usize {
    4
}

fn default_max_laws() -> usize {
    5_000_000
}

fn default_weight_steps() -> usize {
    4
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DiscreteConfig {
    pub channel: DiscreteChannelConfig,
    /// Defaults to independent uniform inputs with a constant auxiliary.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub law: Option<LawConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub brute_force: Option<BruteForceConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    /// `R0, R1, .., Rp` in bits per symbol.
    pub rates: Vec<f64>,
    pub n: Vec<usize>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_trials_per_codebook")]
    pub trials_per_codebook: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_epsilon() -> f64 {
    coopmac::coding::DEFAULT_EPSILON
}

fn default_trials() -> usize {
    10_000
}

fn default_trials_per_codebook() -> usize {
    100
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EquivConfig {
    #[serde(default = "default_policies")]
    pub policies: usize,
    #[serde(default = "default_states")]
    pub states: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for EquivConfig {
    fn default() -> Self {
        Self {
            policies: default_policies(),
            states: default_states(),
            seed: 0,
        }
    }
}

fn default_policies() -> usize {
    1000
}

fn default_states() -> usize {
    256
}

/// Numerical settings of the figure presets.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ReproduceConfig {
    #[serde(default = "default_quad_nodes")]
    pub quad_nodes: usize,
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
    #[serde(default = "default_mc_seed")]
    pub mc_seed: u64,
    #[serde(default = "default_rho_points")]
    pub rho_points: usize,
    /// Boundary directions for the planar figures.
    #[serde(default = "default_directions")]
    pub directions: usize,
    /// Simplex steps for the three-dimensional figure.
    #[serde(default = "default_simplex_steps")]
    pub simplex_steps: usize,
}

impl Default for ReproduceConfig {
    fn default() -> Self {
        Self {
            quad_nodes: default_quad_nodes(),
            mc_samples: default_mc_samples(),
            mc_seed: default_mc_seed(),
            rho_points: default_rho_points(),
            directions: default_directions(),
            simplex_steps: default_simplex_steps(),
        }
    }
}

fn default_quad_nodes() -> usize {
    64
}

fn default_mc_samples() -> usize {
    1_000_000
}

fn default_mc_seed() -> u64 {
    2009
}

fn default_directions() -> usize {
    100
}

fn default_simplex_steps() -> usize {
    12
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Directory receiving the output files.
    #[serde(default = "default_path")]
    pub path: String,
    #[serde(default)]
    pub format: Format,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            path: default_path(),
            format: Format::Csv,
        }
    }
}

fn default_path() -> String {
    "out".to_string()
}

/// RFC 7386 merge: objects merge key by key, `null` deletes, anything else replaces.
pub fn merge_patch(target: &mut Value, patch: &Value) {
    match patch {
        Value::Object(p) => {
            if !target.is_object() {
                *target = Value::Object(Default::default());
            }
            let t = target.as_object_mut().expect("object");
            for (k, v) in p {
                if v.is_null() {
                    t.remove(k);
                } else {
                    merge_patch(t.entry(k.clone()).or_insert(Value::Null), v);
                }
            }
        }
        other => *target = other.clone(),
    }
}

/// Sets the value at a JSON pointer, creating intermediate objects.
pub fn set_pointer(root: &mut Value, pointer: &str, value: Value) -> Result<(), CliError> {
    if pointer.is_empty() {
        *root = value;
        return Ok(());
    }
    if !pointer.starts_with('/') {
        return Err(CliError::schema(pointer, "override key must be a JSON pointer starting with '/'"));
    }
    let tokens: Vec<String> = pointer[1..].split('/').map(|t| t.replace("~1", "/").replace("~0", "~")).collect();
    let mut cur = root;
    for (i, tok) in tokens.iter().enumerate() {
        let last = i + 1 == tokens.len();
        cur = match cur {
            Value::Array(items) => {
                let idx: usize = tok
                    .parse()
                    .ok()
                    .filter(|k| *k < items.len())
                    .ok_or_else(|| CliError::schema(pointer, "array index out of range"))?;
                &mut items[idx]
            }
            other => {
                if !other.is_object() {
                    *other = Value::Object(Default::default());
                }
                other.as_object_mut().expect("object").entry(tok.clone()).or_insert(Value::Null)
            }
        };
        if last {
            *cur = value;
            return Ok(());
        }
    }
    Ok(())
}

/// Parses `/pointer=value`; the value is JSON when it parses, else a string.
pub fn parse_assignment(arg: &str) -> Result<(String, Value), CliError> {
    let (key, raw) = arg
        .split_once('=')
        .ok_or_else(|| CliError::schema("", format!("override '{arg}' is not of the form /pointer=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    Ok((key.to_string(), value))
}

/// Deserializes with the JSON pointer of the first failing key.
pub fn from_value(value: Value) -> Result<RunConfig, CliError> {
    let cfg: RunConfig = serde_path_to_error::deserialize(value).map_err(|e| {
        let pointer = path_to_pointer(e.path());
        CliError::schema(&pointer, e.inner().to_string())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

fn path_to_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{}", key.replace('~', "~0").replace('/', "~1"))),
            Segment::Enum { variant } => out.push_str(&format!("/{variant}")),
            Segment::Unknown => {}
        }
    }
    out
}

fn check_values(pointer: &str, values: &[f64], ok: impl Fn(f64) -> bool, what: &str) -> Result<(), CliError> {
    for (i, v) in values.iter().enumerate() {
        if !ok(*v) {
            return Err(CliError::schema(&format!("{pointer}/{i}"), format!("{v} {what}")));
        }
    }
    Ok(())
}

impl RunConfig {
    /// Range and exclusivity checks that serde cannot express.
    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(ch) = &self.channel {
            match (&ch.power, &ch.power_db) {
                (Some(_), Some(_)) => return Err(CliError::schema("/channel/power_db", "power and power_db are mutually exclusive")),
                (None, None) => return Err(CliError::schema("/channel/power", "one of power or power_db is required")),
                (Some(p), None) => check_values("/channel/power", p, |v| v.is_finite() && v >= 0.0, "must be finite and >= 0")?,
                (None, Some(p)) => check_values("/channel/power_db", p, f64::is_finite, "must be finite")?,
            }
            match (&ch.noise, &ch.noise_db) {
                (Some(_), Some(_)) => return Err(CliError::schema("/channel/noise_db", "noise and noise_db are mutually exclusive")),
                (Some(n), None) => check_values("/channel/noise", n, |v| v.is_finite() && v > 0.0, "must be finite and > 0")?,
                (None, Some(n)) => check_values("/channel/noise_db", n, f64::is_finite, "must be finite")?,
                (None, None) => {}
            }
            let len = ch.power.as_ref().or(ch.power_db.as_ref()).map_or(0, Vec::len);
            if len != ch.num_tx {
                let key = if ch.power.is_some() { "/channel/power" } else { "/channel/power_db" };
                return Err(CliError::schema(key, format!("expected {} entries, got {len}", ch.num_tx)));
            }
        }
        if let Some(PolicyConfig::Constant { phi, rho }) = &self.policy {
            check_values("/policy/constant/rho", rho, |v| (0.0..=1.0).contains(&v), "must lie in [0, 1]")?;
            if let Some(phi) = phi {
                check_values("/policy/constant/phi", phi, |v| v.is_finite() && v >= 0.0, "must be finite and >= 0")?;
            }
        }
        if let Some(PolicyConfig::Tables(tables)) = &self.policy {
            for (i, t) in tables.iter().enumerate() {
                check_values(&format!("/policy/tables/{i}/phi"), &t.phi, |v| v.is_finite() && v >= 0.0, "must be finite and >= 0")?;
                check_values(&format!("/policy/tables/{i}/rho"), &t.rho, |v| (0.0..=1.0).contains(&v), "must lie in [0, 1]")?;
            }
        }
        if let Some(c) = &self.conferencing {
            check_values("/conferencing/c12", &[c.c12], |v| v.is_finite() && v >= 0.0, "must be finite and >= 0")?;
            check_values("/conferencing/c21", &[c.c21], |v| v.is_finite() && v >= 0.0, "must be finite and >= 0")?;
        }
        match self.engine {
            Some(EngineConfig::Mc { samples: 0, .. }) => return Err(CliError::schema("/engine/mc/samples", "must be >= 1")),
            Some(EngineConfig::Quad { nodes: 0 }) => return Err(CliError::schema("/engine/quad/nodes", "must be >= 1")),
            _ => {}
        }
        if let Some(s) = &self.simulate {
            check_values("/simulate/rates", &s.rates, |v| v.is_finite() && v >= 0.0, "must be finite and >= 0")?;
            check_values("/simulate/epsilon", &[s.epsilon], |v| v.is_finite() && v > 0.0, "must be > 0")?;
            if s.n.is_empty() {
                return Err(CliError::schema("/simulate/n", "needs at least one blocklength"));
            }
        }
        if self.output.path.is_empty() {
            return Err(CliError::schema("/output/path", "must not be empty"));
        }
        Ok(())
    }
}
