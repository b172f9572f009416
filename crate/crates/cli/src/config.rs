//! Run settings: command-line flags layered over an optional TOML file.
//!
//! A config file may set any key at the top level and override it per
//! command in a table named after the command:
//!
//! ```toml
//! masses = [0.44279, 0.03381, 0.08061, 0.44279]
//!
//! [billiard]
//! ordering = "1342"
//! n_max = 50
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Every knob any command understands. Unset values fall back to the
/// command's documented default.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub masses: Option<Vec<f64>>,
    pub ordering: Option<String>,
    pub spec: Option<String>,
    pub n_max: Option<u32>,
    pub refine_from: Option<u32>,
    pub quadrature_order: Option<usize>,
    pub k_levels: Option<usize>,
    pub lambda_max: Option<u64>,
    pub e_max: Option<f64>,
    pub bins: Option<usize>,
    pub grid: Option<usize>,
    pub tolerance: Option<f64>,
    pub chart: Option<String>,
    pub points: Option<usize>,
    pub output: Option<PathBuf>,
    pub format: Option<String>,
}

macro_rules! layer {
    ($hi:expr, $lo:expr, $($field:ident),*) => {
        Settings { $($field: $hi.$field.or($lo.$field),)* }
    };
}

impl Settings {
    /// `self` wins wherever it has a value.
    pub fn over(self, lower: Settings) -> Settings {
        layer!(
            self,
            lower,
            masses,
            ordering,
            spec,
            n_max,
            refine_from,
            quadrature_order,
            k_levels,
            lambda_max,
            e_max,
            bins,
            grid,
            tolerance,
            chart,
            points,
            output,
            format
        )
    }
}

#[derive(Debug, Default, Deserialize)]
struct ConfigFile {
    #[serde(flatten)]
    top: BTreeMap<String, toml::Value>,
}

/// Settings for `command` from a config file: the command's own table layered
/// over the top-level keys.
pub fn load(path: &Path, command: &str) -> Result<Settings, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
    parse(&text, command).map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))
}

const COMMANDS: [&str; 8] = [
    "classify", "family", "geometry", "group", "exact", "billiard", "stats", "weyl",
];

pub fn parse(text: &str, command: &str) -> Result<Settings, String> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| e.to_string())?;
    let mut top = toml::Table::new();
    let mut own = None;
    for (key, value) in file.top {
        if COMMANDS.contains(&key.as_str()) {
            if key == command {
                own = Some(value);
            }
        } else {
            top.insert(key, value);
        }
    }
    let base: Settings = toml::Value::Table(top)
        .try_into()
        .map_err(|e: toml::de::Error| e.to_string())?;
    let specific: Settings = match own {
        Some(v) => v.try_into().map_err(|e: toml::de::Error| e.to_string())?,
        None => Settings::default(),
    };
    Ok(specific.over(base))
}
