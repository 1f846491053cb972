//! Settings file: TOML with a `[run]` section, one section per subcommand
//! and an optional `[constants]` section. Flags win over file values.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use toml::{Table, Value};

#[derive(Debug, Default)]
pub struct Settings {
    file: Table,
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self, String> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| format!("config {}: {e}", path.display()))?;
        let file: Table = text.parse().map_err(|e| format!("config {}: {e}", path.display()))?;
        for (name, v) in &file {
            if !v.is_table() {
                return Err(format!("config {}: top-level key {name:?} must be a section", path.display()));
            }
        }
        Ok(Self { file })
    }

    pub fn lookup<T: DeserializeOwned>(&self, section: &str, key: &str) -> Result<Option<T>, String> {
        let Some(v) = self.file.get(section).and_then(|s| s.get(key)) else {
            return Ok(None);
        };
        // integers in the file are accepted for float settings
        let v = match v {
            Value::Integer(i) if std::any::type_name::<T>() == "f64" => Value::Float(*i as f64),
            other => other.clone(),
        };
        v.try_into().map(Some).map_err(|e| format!("config [{section}] {key}: {e}"))
    }
}

/// Resolves parameters for one subcommand and records the effective values.
pub struct Params<'a> {
    settings: &'a Settings,
    section: &'static str,
    pub resolved: Table,
}

impl<'a> Params<'a> {
    pub fn new(settings: &'a Settings, section: &'static str) -> Self {
        Self {
            settings,
            section,
            resolved: Table::new(),
        }
    }

    pub fn get<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T, String>
    where
        T: Serialize + DeserializeOwned,
    {
        let v = match flag {
            Some(v) => v,
            None => self.settings.lookup(self.section, key)?.unwrap_or(default),
        };
        self.record(key, &v);
        Ok(v)
    }

    pub fn get_opt<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, String>
    where
        T: Serialize + DeserializeOwned,
    {
        let v = match flag {
            Some(v) => Some(v),
            None => self.settings.lookup(self.section, key)?,
        };
        match &v {
            Some(x) => self.record(key, x),
            None => self.record(key, &"auto"),
        }
        Ok(v)
    }

    pub fn record<T: Serialize + ?Sized>(&mut self, key: &str, v: &T) {
        if let Ok(value) = Value::try_from(v) {
            self.resolved.insert(key.to_string(), value);
        }
    }

    pub fn settings(&self) -> &Settings {
        self.settings
    }
}
