//! Flat `key = value` configs grouped in `[sections]`.

use std::collections::BTreeMap;
use std::str::FromStr;

use ini::Ini;
use sha2::{Digest, Sha256};

use crate::error::{config_err, CliResult};

/// Accepted keys per section. `[sweep]` additionally takes
/// `section.key` entries naming any key below.
const SCHEMA: &[(&str, &[&str])] = &[
    ("measure", &["kind", "alpha", "k", "renormalize", "closed_form", "atoms", "path"]),
    ("operator", &["alpha", "s", "r", "beta", "n_max", "frac_k"]),
    ("model", &["domain", "n", "start"]),
    ("signal", &["kind", "at", "seed", "path"]),
    ("lambda", &["values", "min", "max", "count"]),
    ("spectral", &["levels", "h", "h_alpha", "dungey_alpha"]),
    ("variation", &["blocks", "a", "n_start", "k_max", "indices", "budget"]),
    (
        "lemmalab",
        &[
            "mode", "family", "weights", "levels", "n_max", "estimate", "gamma", "h", "h_alpha", "blocks", "a",
            "n_start", "k_max", "indices",
        ],
    ),
    ("weak11", &["operator"]),
    ("output", &["plot"]),
    ("sweep", &["command"]),
];

fn known(section: &str, key: &str) -> bool {
    SCHEMA
        .iter()
        .any(|(s, keys)| *s == section && keys.contains(&key))
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Config {
    /// Entries in file order per section.
    sections: BTreeMap<String, Vec<(String, String)>>,
}

impl Config {
    pub fn parse(text: &str) -> CliResult<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| config_err(format!("line {}: {}", e.line, e.msg)))?;
        let mut cfg = Config::default();
        for (section, props) in ini.iter() {
            let Some(section) = section else {
                if let Some((k, _)) = props.iter().next() {
                    return Err(config_err(format!("key `{k}` appears before any [section]")));
                }
                continue;
            };
            for (k, v) in props.iter() {
                cfg.insert(section, k, v)?;
            }
        }
        Ok(cfg)
    }

    fn insert(&mut self, section: &str, key: &str, value: &str) -> CliResult<()> {
        let ok = if section == "sweep" && key != "command" {
            key.split_once('.')
                .is_some_and(|(s, k)| s != "sweep" && known(s, k))
        } else {
            known(section, key)
        };
        if !ok {
            return Err(config_err(format!("unknown key `{key}` in [{section}]")));
        }
        let entries = self.sections.entry(section.to_string()).or_default();
        if entries.iter().any(|(k, _)| k == key) {
            return Err(config_err(format!("duplicate key `{key}` in [{section}]")));
        }
        entries.push((key.to_string(), value.trim().to_string()));
        Ok(())
    }

    /// Sets or replaces a value.
    pub fn set(&mut self, section: &str, key: &str, value: &str) -> CliResult<()> {
        if let Some(entries) = self.sections.get_mut(section) {
            entries.retain(|(k, _)| k != key);
        }
        self.insert(section, key, value)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections
            .get(section)?
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn entries(&self, section: &str) -> &[(String, String)] {
        self.sections.get(section).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn str_or<'a>(&'a self, section: &str, key: &str, default: &'a str) -> &'a str {
        self.get(section, key).unwrap_or(default)
    }

    pub fn parse_or<T: FromStr>(&self, section: &str, key: &str, default: T) -> CliResult<T> {
        match self.get(section, key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| config_err(format!("[{section}] {key} = {v:?} is not a valid value"))),
        }
    }

    pub fn list<T: FromStr>(&self, section: &str, key: &str) -> CliResult<Option<Vec<T>>> {
        self.get(section, key).map(|v| parse_list(v, section, key)).transpose()
    }

    /// Sorted `[section]` / `key = value` text; the hashed form.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        for (section, entries) in &self.sections {
            out.push_str(&format!("[{section}]\n"));
            let mut sorted: Vec<_> = entries.iter().collect();
            sorted.sort();
            for (k, v) in sorted {
                out.push_str(&format!("{k} = {v}\n"));
            }
        }
        out
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }
}

pub fn parse_list<T: FromStr>(v: &str, section: &str, key: &str) -> CliResult<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| {
            x.parse()
                .map_err(|_| config_err(format!("[{section}] {key}: {x:?} is not a valid entry")))
        })
        .collect()
}
