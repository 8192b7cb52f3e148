//! `key = value` configuration files and flag/file/default resolution.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    path: Option<PathBuf>,
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, Some(path))
    }

    /// Blank lines and lines starting with `#` are ignored. Keys may use
    /// `-` or `_` interchangeably.
    pub fn parse(text: &str, path: Option<&Path>) -> Result<Self, CliError> {
        let origin = path.map_or_else(|| "<config>".to_string(), |p| p.display().to_string());
        let mut values = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Validation(format!(
                    "{origin}:{}: expected `key = value`",
                    n + 1
                )));
            };
            let key = normalize(key.trim());
            if key.is_empty() {
                return Err(CliError::Validation(format!("{origin}:{}: empty key", n + 1)));
            }
            if values.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(CliError::Validation(format!("{origin}:{}: duplicate key {key}", n + 1)));
            }
        }
        Ok(Self {
            path: path.map(Path::to_path_buf),
            values,
        })
    }

    pub fn optional(path: Option<&Path>) -> Result<Self, CliError> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    /// Rejects keys the command does not understand.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<(), CliError> {
        for key in self.values.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(CliError::Validation(format!(
                    "unknown key {key:?} in {} (allowed: {})",
                    self.origin(),
                    allowed.join(", ")
                )));
            }
        }
        Ok(())
    }

    fn origin(&self) -> String {
        self.path
            .as_ref()
            .map_or_else(|| "<config>".to_string(), |p| p.display().to_string())
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        self.values
            .get(key)
            .map(|raw| {
                raw.parse().map_err(|e| {
                    CliError::Validation(format!("{}: invalid value {raw:?} for {key}: {e}", self.origin()))
                })
            })
            .transpose()
    }

    /// Flag, else file, else `default`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        Ok(self.pick_opt(flag, key)?.unwrap_or(default))
    }

    pub fn pick_opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }
}

fn normalize(key: &str) -> String {
    key.trim_start_matches("--").replace('_', "-")
}
