//! Run configuration: one TOML file plus command-line overrides (flags win).
//!
//! ```toml
//! seed = 42
//! reps = 200
//! width = 8
//! out = "results/s1"
//!
//! [rbf]            # merged over the preset's or analysis' settings
//! rho = 0.3
//!
//! [simulate]
//! preset = "s1-best"
//! correlations = [0.99, 0.7, 0.5]   # any scenario key overrides the preset
//!
//! [analyze]
//! data = "app.csv"                  # relative to this file
//! primary = "*"                     # or one source id
//! subsample_n = 10
//! subsample_supplements = true
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analyze::{AnalyzeOptions, PrimarySelection};
use crate::error::{Error, Result};
use crate::prior::RbfConfig;
use crate::sim::ScenarioConfig;

pub const DEFAULT_OUT: &str = "rbf-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Analyze,
    Simulate,
    Validate,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
pub struct SimulateSection {
    pub preset: Option<String>,
    #[serde(flatten)]
    pub overrides: toml::Table,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeSection {
    pub data: Option<PathBuf>,
    pub primary: Option<String>,
    pub subsample_n: Option<usize>,
    pub subsample_supplements: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Option<Mode>,
    pub seed: Option<u64>,
    pub reps: Option<usize>,
    pub width: Option<usize>,
    pub out: Option<PathBuf>,
    pub rbf: Option<toml::Table>,
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub analyze: AnalyzeSection,
    /// Directory relative paths in the file are resolved against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

/// Values given on the command line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub reps: Option<usize>,
    pub width: Option<usize>,
    pub out: Option<PathBuf>,
    pub scenario: Option<u8>,
    pub preset: Option<String>,
    pub data: Option<PathBuf>,
    pub primary: Option<String>,
    pub subsample_n: Option<usize>,
    pub whole_supplements: bool,
    pub a: Option<f64>,
    pub rho: Option<f64>,
}

/// Where and how wide to run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub width: usize,
    pub out: PathBuf,
}

fn merge(base: &mut toml::Table, overlay: &toml::Table) {
    for (k, v) in overlay {
        match (base.get_mut(k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            _ => {
                base.insert(k.clone(), v.clone());
            }
        }
    }
}

fn config_error(e: impl std::fmt::Display) -> Error {
    Error::Config(e.to_string())
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(config_error)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = Self::parse(&std::fs::read_to_string(path)?)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    fn check_mode(&self, mode: Mode) -> Result<()> {
        match self.mode {
            Some(m) if m != mode => Err(Error::Config(format!(
                "config file is for mode {m:?} but {mode:?} was requested"
            ))),
            _ => Ok(()),
        }
    }

    fn resolve_path(&self, p: &Path) -> PathBuf {
        match &self.base_dir {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p.to_path_buf(),
        }
    }

    pub fn settings(&self, flags: &Overrides) -> RunSettings {
        RunSettings {
            width: flags.width.or(self.width).unwrap_or(1).max(1),
            out: flags
                .out
                .clone()
                .or_else(|| self.out.as_ref().map(|p| self.resolve_path(p)))
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
        }
    }

    fn rbf_overlay(&self, flags: &Overrides) -> toml::Table {
        let mut table = self.rbf.clone().unwrap_or_default();
        if let Some(a) = flags.a {
            table.insert("a".into(), toml::Value::Float(a));
        }
        if let Some(rho) = flags.rho {
            table.insert("rho".into(), toml::Value::Float(rho));
        }
        table
    }

    /// Preset (named, or the scenario's canonical one), then file keys, then
    /// flags.
    pub fn scenario(&self, flags: &Overrides) -> Result<ScenarioConfig> {
        self.check_mode(Mode::Simulate)?;
        let file_scenario = match self.simulate.overrides.get("scenario") {
            Some(toml::Value::Integer(i)) => Some(*i),
            Some(other) => return Err(Error::Config(format!("scenario must be 1, 2 or 3, got {other}"))),
            None => None,
        };
        let number = flags.scenario.map(i64::from).or(file_scenario);
        let preset = match (&flags.preset, &self.simulate.preset, number) {
            (Some(p), _, _) | (None, Some(p), _) => p.clone(),
            (None, None, None | Some(1)) => "s1-best".into(),
            (None, None, Some(2)) => "s2-best".into(),
            (None, None, Some(3)) => "s3-gt0".into(),
            (None, None, Some(n)) => {
                return Err(Error::Config(format!("scenario must be 1, 2 or 3, got {n}")))
            }
        };
        let base = ScenarioConfig::preset(&preset)?;
        let mut table = toml::Table::try_from(&base).map_err(config_error)?;
        merge(&mut table, &self.simulate.overrides);
        let mut rbf = toml::Table::new();
        rbf.insert("rbf".into(), toml::Value::Table(self.rbf_overlay(flags)));
        merge(&mut table, &rbf);
        if let Some(seed) = flags.seed.or(self.seed) {
            table.insert("seed".into(), toml::Value::Integer(seed as i64));
        }
        if let Some(reps) = flags.reps.or(self.reps) {
            table.insert("reps".into(), toml::Value::Integer(reps as i64));
        }
        let config: ScenarioConfig = table.try_into().map_err(config_error)?;
        if let Some(n) = number {
            if i64::from(u8::from(config.scenario)) != n {
                return Err(Error::Config(format!(
                    "scenario {n} was requested but preset '{preset}' is scenario {}",
                    u8::from(config.scenario)
                )));
            }
        }
        config.validate()?;
        Ok(config)
    }

    /// Analysis options and the data path.
    pub fn analysis(&self, flags: &Overrides) -> Result<(AnalyzeOptions, PathBuf)> {
        self.check_mode(Mode::Analyze)?;
        let data = flags
            .data
            .clone()
            .or_else(|| self.analyze.data.as_ref().map(|p| self.resolve_path(p)))
            .ok_or_else(|| Error::Config("analyze needs a data path".into()))?;
        let primary = flags
            .primary
            .clone()
            .or_else(|| self.analyze.primary.clone())
            .ok_or_else(|| Error::Config("analyze needs a primary source (or \"*\")".into()))?;
        let mut opts = AnalyzeOptions::new(PrimarySelection::from(primary));
        let mut rbf = toml::Table::try_from(RbfConfig::default()).map_err(config_error)?;
        merge(&mut rbf, &self.rbf_overlay(flags));
        opts.rbf = rbf.try_into().map_err(config_error)?;
        if let Some(n) = flags.subsample_n.or(self.analyze.subsample_n) {
            opts.subsample_n = n;
        }
        if let Some(s) = self.analyze.subsample_supplements {
            opts.subsample_supplements = s;
        }
        if flags.whole_supplements {
            opts.subsample_supplements = false;
        }
        if let Some(seed) = flags.seed.or(self.seed) {
            opts.seed = seed;
        }
        if let Some(reps) = flags.reps.or(self.reps) {
            opts.reps = reps;
        }
        opts.validate()?;
        Ok((opts, data))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prior::ParameterMode;
    use crate::sim::Scenario;

    #[test]
    fn flags_win_over_file_over_preset() {
        let cfg = RunConfig::parse(
            "seed = 5\nreps = 50\n[rbf]\nrho = 0.4\n[simulate]\npreset = \"s2-best\"\nn_primary = 12\n",
        )
        .unwrap();
        let s = cfg.scenario(&Overrides::default()).unwrap();
        assert_eq!((s.seed, s.reps, s.n_primary), (5, 50, 12));
        assert_eq!(s.rbf.rho, 0.4);
        // Unspecified rbf keys keep the preset's values.
        assert_eq!(s.rbf.parameter_mode, ParameterMode::Jeffreys);
        let flags = Overrides {
            reps: Some(3),
            a: Some(0.0),
            ..Overrides::default()
        };
        let s = cfg.scenario(&flags).unwrap();
        assert_eq!((s.reps, s.rbf.a), (3, 0.0));
    }

    #[test]
    fn scenario_number_picks_the_canonical_preset() {
        let cfg = RunConfig::default();
        let flags = Overrides {
            scenario: Some(3),
            ..Overrides::default()
        };
        assert_eq!(cfg.scenario(&flags).unwrap().scenario, Scenario::Three);
        let clash = RunConfig::parse("[simulate]\npreset = \"s1-best\"\n").unwrap();
        assert!(clash.scenario(&flags).is_err());
        assert!(RunConfig::parse("bogus = 1").is_err());
        assert!(RunConfig::parse("[simulate]\nbogus = 1").unwrap().scenario(&Overrides::default()).is_err());
    }

    #[test]
    fn analysis_settings() {
        let mut cfg = RunConfig::parse(
            "mode = \"analyze\"\n[analyze]\ndata = \"x.csv\"\nprimary = \"*\"\nsubsample_n = 8\n",
        )
        .unwrap();
        cfg.base_dir = Some(PathBuf::from("/cfg"));
        let (opts, data) = cfg.analysis(&Overrides::default()).unwrap();
        assert_eq!(data, PathBuf::from("/cfg/x.csv"));
        assert_eq!(opts.primary, PrimarySelection::All);
        assert_eq!(opts.subsample_n, 8);
        assert_eq!(opts.rbf, RbfConfig::default());
        assert!(cfg.scenario(&Overrides::default()).is_err());
        let bad = Overrides {
            subsample_n: Some(1),
            ..Overrides::default()
        };
        assert!(cfg.analysis(&bad).is_err());
        assert!(RunConfig::default().analysis(&Overrides::default()).is_err());
    }
}
