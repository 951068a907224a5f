//! Run configuration: a TOML file with one table per command plus a
//! [global] table, overridden by command-line flags (flags win).

use anyhow::{Context, Result};
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub global: GlobalConfig,
    #[serde(default)]
    pub gap: toml::Table,
    #[serde(default)]
    pub scaling: toml::Table,
    #[serde(default)]
    pub minimizer: toml::Table,
    #[serde(default)]
    pub hydro: toml::Table,
    #[serde(default)]
    pub sample: toml::Table,
    #[serde(default)]
    pub lln: toml::Table,
    #[serde(default)]
    pub interchange: toml::Table,
    #[serde(default)]
    pub selftest: toml::Table,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlobalConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub budget_gib: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))
    }

    pub fn table(&self, command: &str) -> &toml::Table {
        match command {
            "gap" => &self.gap,
            "scaling" => &self.scaling,
            "minimizer" => &self.minimizer,
            "hydro" => &self.hydro,
            "sample" => &self.sample,
            "lln" => &self.lln,
            "interchange" => &self.interchange,
            "selftest" => &self.selftest,
            _ => panic!("unknown command table {command}"),
        }
    }
}

/// Pull a value from a config table when the flag did not set it.
pub fn merge<T: Clone + for<'de> Deserialize<'de>>(
    flag: Option<T>,
    table: &toml::Table,
    key: &str,
) -> Result<Option<T>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match table.get(key) {
        None => Ok(None),
        Some(v) => {
            let parsed: T = v
                .clone()
                .try_into()
                .with_context(|| format!("config key '{key}' has the wrong type"))?;
            Ok(Some(parsed))
        }
    }
}
