//! Config file overlay: a flag wins over `[command]` keys, which win over
//! top-level keys. Keys are the long flag names with `_` for `-`.

use std::path::{Path, PathBuf};

use toml::{Table, Value};

use crate::CliError;

pub struct Settings {
    table: Table,
    command: &'static str,
    base: PathBuf,
}

impl Settings {
    pub fn load(path: Option<&Path>, command: &'static str) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self {
                table: Table::new(),
                command,
                base: PathBuf::new(),
            });
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let table: Table = text
            .parse()
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self {
            table,
            command,
            base,
        })
    }

    fn raw(&self, key: &str) -> Option<&Value> {
        self.table
            .get(self.command)
            .and_then(Value::as_table)
            .and_then(|t| t.get(key))
            .or_else(|| self.table.get(key).filter(|v| !v.is_table()))
    }

    fn bad(&self, key: &str, want: &str) -> CliError {
        CliError::Usage(format!("config key {key:?} must be {want}"))
    }

    pub fn f64(&self, flag: Option<f64>, key: &str) -> Result<Option<f64>, CliError> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.raw(key) {
            None => Ok(None),
            Some(Value::Float(x)) => Ok(Some(*x)),
            Some(Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(_) => Err(self.bad(key, "a number")),
        }
    }

    pub fn u64(&self, flag: Option<u64>, key: &str) -> Result<Option<u64>, CliError> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.raw(key) {
            None => Ok(None),
            Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u64)),
            Some(_) => Err(self.bad(key, "a non-negative integer")),
        }
    }

    pub fn flag(&self, flag: bool, key: &str) -> Result<bool, CliError> {
        if flag {
            return Ok(true);
        }
        match self.raw(key) {
            None => Ok(false),
            Some(Value::Boolean(b)) => Ok(*b),
            Some(_) => Err(self.bad(key, "true or false")),
        }
    }

    /// Strings; a TOML array is joined with commas so list-valued options can
    /// be written either way.
    pub fn string(&self, flag: Option<String>, key: &str) -> Result<Option<String>, CliError> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.raw(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(Value::Array(items)) => {
                let parts: Option<Vec<String>> = items
                    .iter()
                    .map(|v| match v {
                        Value::String(s) => Some(s.clone()),
                        Value::Float(x) => Some(x.to_string()),
                        Value::Integer(i) => Some(i.to_string()),
                        _ => None,
                    })
                    .collect();
                parts
                    .map(|p| Some(p.join(",")))
                    .ok_or_else(|| self.bad(key, "a string or a flat array"))
            }
            Some(Value::Float(x)) => Ok(Some(x.to_string())),
            Some(Value::Integer(i)) => Ok(Some(i.to_string())),
            Some(_) => Err(self.bad(key, "a string")),
        }
    }

    /// Paths from the config file are relative to the file's directory.
    pub fn path(&self, flag: Option<PathBuf>, key: &str) -> Result<Option<PathBuf>, CliError> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.raw(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(self.base.join(s))),
            Some(_) => Err(self.bad(key, "a path string")),
        }
    }

    pub fn require_path(&self, flag: Option<PathBuf>, key: &str) -> Result<PathBuf, CliError> {
        self.path(flag, key)?.ok_or_else(|| {
            CliError::Usage(format!("--{} is required (or set {key:?} in the config)", key.replace('_', "-")))
        })
    }
}
