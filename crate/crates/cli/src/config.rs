//! JSON config file: per-environment overrides and an optional monitor
//! override by built-in name or inline formula.
//!
//! ```json
//! {
//!   "env": { "n_hazards": 6, "max_steps": 300 },
//!   "monitor": { "name": "circle_stop_2d", "params": { "eps": 0.5 } }
//! }
//! ```
//!
//! `env` holds the keys of the selected environment's configuration
//! (unspecified keys take their defaults). `monitor` either names a
//! built-in (with parameter overrides) or supplies `formula` text that is
//! evaluated with the environment's standard variable bindings.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use aegis_core::envs::{AccConfig, EnvConfig, GfConfig, PmConfig, XoConfig};
use aegis_core::monitor::builtins;
use aegis_core::monitor::MonitorSpec;

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub env: Option<serde_json::Value>,
    #[serde(default)]
    pub monitor: Option<MonitorConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonitorConfig {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub formula: Option<String>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

/// Schema-stable per-run summary.
#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub env: String,
    pub agent: String,
    pub shield: bool,
    pub extractor: String,
    pub epsilon: f64,
    pub episodes: usize,
    pub seed: u64,
    pub total_violations: u64,
    pub total_interventions: u64,
    pub mean_return_last_tenth: f64,
}

pub fn load(path: &Path) -> Result<FileConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

/// The environment configuration for `name` with the file's `env` block
/// (if any) deserialized over the defaults.
pub fn env_config(name: &str, file: Option<&FileConfig>) -> Result<EnvConfig, String> {
    let base = EnvConfig::default_for(name).ok_or_else(|| format!("unknown environment `{name}`"))?;
    let Some(value) = file.and_then(|f| f.env.clone()) else {
        return Ok(base);
    };
    let parsed = match name {
        "xo" => serde_json::from_value::<XoConfig>(value).map(EnvConfig::Xo).map_err(|e| e.to_string()),
        "acc" => serde_json::from_value::<AccConfig>(value).map(EnvConfig::Acc).map_err(|e| e.to_string()),
        "gf" => serde_json::from_value::<GfConfig>(value).map(EnvConfig::Gf).map_err(|e| e.to_string()),
        "pm" => serde_json::from_value::<PmConfig>(value).map(EnvConfig::Pm).map_err(|e| e.to_string()),
        _ => Err(format!("unknown environment `{name}`")),
    }?;
    Ok(parsed)
}

/// The monitor override, if the file requests one: by built-in name with
/// parameter overrides, or an inline formula over the environment's
/// standard bindings.
pub fn monitor_override(file: &FileConfig, env_name: &str) -> Result<Option<MonitorSpec>, String> {
    let Some(mc) = &file.monitor else {
        return Ok(None);
    };
    if let Some(name) = &mc.name {
        let spec = builtins::builtin_by_name(name, &mc.params)
            .ok_or_else(|| format!("unknown built-in monitor `{name}`"))?
            .map_err(|e| e.to_string())?;
        return Ok(Some(spec));
    }
    if let Some(formula) = &mc.formula {
        let bindings = builtins::bindings_for(env_name)
            .ok_or_else(|| format!("no standard bindings for `{env_name}`"))?;
        let spec = MonitorSpec::new("inline", formula, mc.params.clone(), bindings)
            .map_err(|e| e.to_string())?;
        return Ok(Some(spec));
    }
    Err("monitor override needs `name` or `formula`".into())
}
