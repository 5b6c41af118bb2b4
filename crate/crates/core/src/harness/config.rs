//! TOML configuration with per-key overrides.
//!
//! Every section has complete defaults, so an empty file is a valid config.
//! Unknown keys and out-of-range values are rejected with the dotted path of
//! the offending key.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::RadioTable;
use crate::error::{Error, Result};
use crate::scenario::adhoc::AdhocConfig;
use crate::scenario::cellfree::CellfreeConfig;
use crate::scenario::coverage::CoverageConfig;
use crate::scenario::iab::IabConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScenarioId {
    #[serde(rename = "adhoc")]
    Adhoc,
    #[serde(rename = "cellfree-energy")]
    CellfreeEnergy,
    #[serde(rename = "coverage")]
    Coverage,
    #[serde(rename = "iab")]
    Iab,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 4] = [
        ScenarioId::Adhoc,
        ScenarioId::CellfreeEnergy,
        ScenarioId::Coverage,
        ScenarioId::Iab,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioId::Adhoc => "adhoc",
            ScenarioId::CellfreeEnergy => "cellfree-energy",
            ScenarioId::Coverage => "coverage",
            ScenarioId::Iab => "iab",
        }
    }

    /// Name of the config section holding this scenario's parameters.
    pub fn section(self) -> &'static str {
        match self {
            ScenarioId::Adhoc => "adhoc",
            ScenarioId::CellfreeEnergy => "cellfree",
            ScenarioId::Coverage => "coverage",
            ScenarioId::Iab => "iab",
        }
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::config("scenario", format!("unknown scenario `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    /// Worker threads; 0 picks one per core.
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { seed: 1, threads: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioId>,
    pub run: RunConfig,
    pub radio: RadioTable,
    pub adhoc: AdhocConfig,
    pub cellfree: CellfreeConfig,
    pub coverage: CoverageConfig,
    pub iab: IabConfig,
}

impl SimConfig {
    /// The selected scenario; an error naming `scenario` when unset.
    pub fn scenario_id(&self) -> Result<ScenarioId> {
        self.scenario
            .ok_or_else(|| Error::config("scenario", "no scenario selected"))
    }

    pub fn trials(&self) -> Result<u64> {
        Ok(match self.scenario_id()? {
            ScenarioId::Adhoc => self.adhoc.trials,
            ScenarioId::CellfreeEnergy => self.cellfree.trials,
            ScenarioId::Coverage => self.coverage.trials,
            ScenarioId::Iab => self.iab.trials,
        })
    }

    pub fn set_trials(&mut self, trials: u64) -> Result<()> {
        match self.scenario_id()? {
            ScenarioId::Adhoc => self.adhoc.trials = trials,
            ScenarioId::CellfreeEnergy => self.cellfree.trials = trials,
            ScenarioId::Coverage => self.coverage.trials = trials,
            ScenarioId::Iab => self.iab.trials = trials,
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.radio.validate()?;
        match self.scenario_id()? {
            ScenarioId::Adhoc => self.adhoc.validate(),
            ScenarioId::CellfreeEnergy => self.cellfree.validate(),
            ScenarioId::Coverage => self.coverage.validate(),
            ScenarioId::Iab => self.iab.validate(),
        }
    }

    /// Fully resolved config as TOML; feeding it back reproduces the run.
    pub fn echo(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::domain(format!("cannot serialize config: {e}")))
    }
}

/// Parse `key=value`. The value is read as a TOML value, falling back to a
/// bare string.
pub fn parse_override(text: &str) -> Result<(String, toml::Value)> {
    let (key, raw) = text
        .split_once('=')
        .ok_or_else(|| Error::config(text, "override must look like key=value"))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(Error::config(text, "override has an empty key"));
    }
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    Ok((key.to_string(), value))
}

/// Resolve an undotted key to the first section that defines it: the
/// scenario's own section, then `radio`, then `run`.
fn resolve_key(key: &str, scenario: Option<ScenarioId>, defaults: &toml::Table) -> Result<Vec<String>> {
    if key.contains('.') {
        return Ok(key.split('.').map(str::to_string).collect());
    }
    if key == "scenario" {
        return Ok(vec![key.to_string()]);
    }
    let mut sections: Vec<&str> = Vec::new();
    if let Some(id) = scenario {
        sections.push(id.section());
    }
    sections.extend(["radio", "run"]);
    for s in sections {
        if defaults.get(s).and_then(|v| v.as_table()).is_some_and(|t| t.contains_key(key)) {
            return Ok(vec![s.to_string(), key.to_string()]);
        }
    }
    Err(Error::config(key, "unknown key"))
}

fn set_path(table: &mut toml::Table, path: &[String], value: toml::Value) -> Result<()> {
    let (last, parents) = path.split_last().ok_or_else(|| Error::config("", "empty key"))?;
    let mut cur = table;
    for (i, p) in parents.iter().enumerate() {
        let entry = cur
            .entry(p.clone())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::config(path[..=i].join("."), "not a section"))?;
    }
    cur.insert(last.clone(), value);
    Ok(())
}

/// Build a config from TOML text plus overrides.
///
/// `scenario` takes precedence over a `scenario` key in the text.
pub fn parse_config(scenario: Option<ScenarioId>, text: &str, overrides: &[String]) -> Result<SimConfig> {
    let mut table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::config("config", e.to_string()))?;
    let scenario = match scenario {
        Some(id) => Some(id),
        None => match table.get("scenario") {
            Some(toml::Value::String(s)) => Some(s.parse()?),
            Some(_) => return Err(Error::config("scenario", "must be a string")),
            None => None,
        },
    };
    let defaults = toml::Table::try_from(SimConfig::default())
        .map_err(|e| Error::domain(format!("cannot serialize defaults: {e}")))?;
    for o in overrides {
        let (key, value) = parse_override(o)?;
        let path = resolve_key(&key, scenario, &defaults)?;
        set_path(&mut table, &path, value)?;
    }
    if let Some(id) = scenario {
        table.insert("scenario".into(), toml::Value::String(id.as_str().into()));
    }
    let mut cfg: SimConfig = serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
        let path = e.path().to_string();
        Error::config(if path == "." { "config".into() } else { path }, e.into_inner().to_string())
    })?;
    cfg.scenario = scenario;
    cfg.scenario_id()?;
    cfg.validate()?;
    Ok(cfg)
}

/// Read `path` (if any) and apply overrides.
pub fn load_config(scenario: Option<ScenarioId>, path: Option<&Path>, overrides: &[String]) -> Result<SimConfig> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p)
            .map_err(|e| Error::config("config", format!("cannot read {}: {e}", p.display())))?,
        None => String::new(),
    };
    parse_config(scenario, &text, overrides)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ov(items: &[&str]) -> Vec<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn empty_file_gives_table_defaults() {
        let cfg = parse_config(Some(ScenarioId::Adhoc), "", &[]).unwrap();
        assert_eq!(cfg.radio, RadioTable::default());
        assert_eq!(cfg.adhoc, AdhocConfig::default());
        assert_eq!(cfg.adhoc.beta, 0.08);
        assert_eq!(cfg.radio.packet_size_mbits, 5.0);
    }

    #[test]
    fn undotted_override_lands_in_scenario_section() {
        let cfg = parse_config(Some(ScenarioId::Adhoc), "", &ov(&["beta=0.16"])).unwrap();
        assert_eq!(cfg.adhoc.beta, 0.16);
        assert!(cfg.echo().unwrap().contains("beta = 0.16"));
    }

    #[test]
    fn undotted_override_falls_back_to_radio() {
        let cfg = parse_config(Some(ScenarioId::Iab), "", &ov(&["packet_size_mbits=2"])).unwrap();
        assert_eq!(cfg.radio.packet_size_mbits, 2.0);
        let cfg = parse_config(Some(ScenarioId::Iab), "", &ov(&["radio.noise_power_dbm_per_hz=-170"])).unwrap();
        assert_eq!(cfg.radio.noise_power_dbm_per_hz, -170.0);
    }

    #[test]
    fn negative_trials_rejected_with_key() {
        let err = parse_config(Some(ScenarioId::Adhoc), "", &ov(&["trials=-5"])).unwrap_err();
        assert!(err.is_config());
        assert!(err.to_string().contains("adhoc.trials"), "{err}");
        let err = parse_config(Some(ScenarioId::Coverage), "[coverage]\ntrials = 0\n", &[]).unwrap_err();
        assert!(err.to_string().contains("coverage.trials"), "{err}");
    }

    #[test]
    fn unknown_keys_rejected_with_key() {
        let err = parse_config(Some(ScenarioId::Adhoc), "[adhoc]\nbogus = 1\n", &[]).unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
        let err = parse_config(Some(ScenarioId::Adhoc), "", &ov(&["bogus=1"])).unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
        let err = parse_config(Some(ScenarioId::Adhoc), "[nowhere]\nx = 1\n", &[]).unwrap_err();
        assert!(err.to_string().contains("nowhere"), "{err}");
    }

    #[test]
    fn missing_scenario_named() {
        let err = parse_config(None, "", &[]).unwrap_err();
        assert!(err.to_string().contains("scenario"), "{err}");
        let cfg = parse_config(None, "scenario = \"iab\"\n", &[]).unwrap();
        assert_eq!(cfg.scenario, Some(ScenarioId::Iab));
    }

    #[test]
    fn echo_round_trips() {
        let cfg = parse_config(Some(ScenarioId::Coverage), "", &ov(&["trials=77", "run.seed=9"])).unwrap();
        let again = parse_config(None, &cfg.echo().unwrap(), &[]).unwrap();
        assert_eq!(cfg, again);
    }
}
