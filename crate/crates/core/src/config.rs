//! Run configuration: one JSON document carrying every tunable default, with
//! CLI flags layered on top by the binary.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{CoverageThresholds, Scenario, StudyPeriod};
use crate::mvtb::Hyperparams;
use crate::pipeline::{EmissionsConfig, SelectionConfig};
use crate::preprocess::PreprocessOptions;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
    pub study_period: StudyPeriod,
    pub summer_months: Vec<u32>,
    pub preprocess: PreprocessOptions,
    pub coverage: CoverageThresholds,
    pub hyper: Hyperparams,
    pub k_folds: usize,
    pub selection: SelectionConfig,
    pub scenarios: Vec<Scenario>,
    pub emissions: EmissionsConfig,
    /// Minimum joined rows for a city to be trainable.
    pub min_training_rows: usize,
    /// Sigma value reported for off-scale analog dissimilarities.
    pub sigma_cap: f64,
    /// SSP table year used by the totals stage.
    pub ssp_year: i32,
    /// Master seed; also feeds the synthetic generator.
    pub seed: u64,
    /// Emit `features_<city>.csv` / `normals_<loc>.csv` debug dumps.
    pub debug_dumps: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data_dir: PathBuf::from("data"),
            out_dir: PathBuf::from("out"),
            study_period: StudyPeriod {
                start_year: 2007,
                end_year: 2018,
            },
            summer_months: vec![6, 7, 8, 9],
            preprocess: PreprocessOptions::default(),
            coverage: CoverageThresholds::default(),
            hyper: Hyperparams::default(),
            k_folds: 5,
            selection: SelectionConfig::default(),
            scenarios: vec![Scenario::Rcp45, Scenario::Rcp85],
            emissions: EmissionsConfig::default(),
            min_training_rows: 24,
            sigma_cap: 10.0,
            ssp_year: 2080,
            seed: 42,
            debug_dumps: false,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        let config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.study_period.start_year > self.study_period.end_year {
            return Err(Error::Config(format!(
                "study_period start {} after end {}",
                self.study_period.start_year, self.study_period.end_year
            )));
        }
        if self.summer_months.is_empty() {
            return Err(Error::Config("summer_months must be non-empty".to_string()));
        }
        if self.summer_months.iter().any(|m| !(1..=12).contains(m)) {
            return Err(Error::Config("summer_months must lie in 1..=12".to_string()));
        }
        if self.k_folds < 2 {
            return Err(Error::Config("k_folds must be >= 2".to_string()));
        }
        if self.selection.min_features > self.selection.max_features {
            return Err(Error::Config(
                "selection.min_features exceeds max_features".to_string(),
            ));
        }
        if self.sigma_cap <= 0.0 {
            return Err(Error::Config("sigma_cap must be positive".to_string()));
        }
        Ok(())
    }

    pub fn to_pretty_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization cannot fail")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn partial_json_fills_defaults() {
        let cfg: RunConfig = serde_json::from_str(r#"{"seed": 7, "k_folds": 3}"#).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.k_folds, 3);
        assert_eq!(cfg.summer_months, vec![6, 7, 8, 9]);
        assert_eq!(cfg.hyper.n_trees, 1000);
    }

    #[test]
    fn round_trips_through_json() {
        let cfg = RunConfig::default();
        let text = cfg.to_pretty_json();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(cfg.to_pretty_json(), back.to_pretty_json());
    }

    #[test]
    fn rejects_bad_period() {
        let mut cfg = RunConfig::default();
        cfg.study_period.start_year = 2020;
        cfg.study_period.end_year = 2010;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn rejects_bad_month() {
        let mut cfg = RunConfig::default();
        cfg.summer_months = vec![6, 13];
        assert!(cfg.validate().is_err());
    }
}
