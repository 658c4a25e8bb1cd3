//! Flat `key = value` text files used for configs, manifests and scene headers.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use super::config::AcquisitionConfig;
use crate::error::{Error, Result};

/// Ordered key-value pairs; later assignments override earlier ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    entries: Vec<(String, String)>,
}

impl KeyValues {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = Self::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            kv.set_assignment(line)
                .map_err(|_| Error::format(format!("line {}: expected `key = value`", lineno + 1)))?;
        }
        Ok(kv)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Applies a single `key=value` override (as given on a command line).
    pub fn set_assignment(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::invalid(format!("`{assignment}` is not key=value")))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(Error::invalid("empty key"));
        }
        self.set(k, v.trim());
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(entry) => entry.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Parses `key` if present.
    pub fn parsed<V: FromStr>(&self, key: &str) -> Result<Option<V>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::invalid(format!("cannot parse `{key}` value `{v}`"))),
        }
    }

    /// Comma-separated list value.
    pub fn list<V: FromStr>(&self, key: &str) -> Result<Option<Vec<V>>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse()
                        .map_err(|_| Error::invalid(format!("cannot parse `{key}` item `{s}`")))
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}

impl AcquisitionConfig {
    /// Reads config fields from `kv`, starting from [`AcquisitionConfig::desk`]
    /// for any key not present. Unknown keys are ignored so one file can also
    /// carry pipeline settings.
    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        let mut c = Self::desk();
        macro_rules! take {
            ($field:ident) => {
                if let Some(v) = kv.parsed(stringify!($field))? {
                    c.$field = v;
                }
            };
        }
        take!(num_elements);
        take!(pitch);
        take!(center_frequency);
        take!(transmit_frequency);
        take!(sampling_frequency);
        take!(sound_speed);
        take!(prf);
        take!(frame_rate);
        take!(tukey_alpha);
        if let Some(a) = kv.list::<f64>("angles")? {
            c.angles = a;
        }
        Ok(c)
    }

    pub fn to_key_values(&self) -> KeyValues {
        let mut kv = KeyValues::new();
        kv.set("num_elements", self.num_elements);
        kv.set("pitch", format!("{:?}", self.pitch));
        kv.set("center_frequency", format!("{:?}", self.center_frequency));
        kv.set("transmit_frequency", format!("{:?}", self.transmit_frequency));
        kv.set("sampling_frequency", format!("{:?}", self.sampling_frequency));
        kv.set("sound_speed", format!("{:?}", self.sound_speed));
        let angles: Vec<String> = self.angles.iter().map(|a| format!("{a:?}")).collect();
        kv.set("angles", angles.join(", "));
        kv.set("prf", format!("{:?}", self.prf));
        kv.set("frame_rate", format!("{:?}", self.frame_rate));
        kv.set("tukey_alpha", format!("{:?}", self.tukey_alpha));
        kv
    }
}
