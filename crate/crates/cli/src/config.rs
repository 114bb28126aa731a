//! Line-oriented `key = value` config files with `[section]` headers.
//!
//! Keys are addressed as `section.key`; keys before the first header have no
//! prefix. `#` and `;` start comments.

use std::collections::BTreeMap;
use std::path::Path;

use gon_core::{GonError, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    entries: BTreeMap<String, (usize, String)>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split(['#', ';']).next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| GonError::config(format!("line {line_no}: unterminated section header")))?;
                section = name.trim().to_string();
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| GonError::config(format!("line {line_no}: expected 'key = value'")))?;
            let key = if section.is_empty() {
                k.trim().to_string()
            } else {
                format!("{section}.{}", k.trim())
            };
            if entries.insert(key.clone(), (line_no, v.trim().to_string())).is_some() {
                return Err(GonError::config(format!("line {line_no}: duplicate key '{key}'")));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| GonError::io(path, e))?;
        Self::parse(&text)
    }

    /// Removes and parses `key`, if present.
    pub fn take<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| GonError::config(format!("line {line}: bad value {v:?} for '{key}'"))),
        }
    }

    pub fn take_string(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key).map(|(_, v)| v)
    }

    /// Fails on any key nobody consumed.
    pub fn finish(self) -> Result<()> {
        match self.entries.into_iter().next() {
            None => Ok(()),
            Some((k, (line, _))) => Err(GonError::config(format!("line {line}: unknown key '{k}'"))),
        }
    }
}
