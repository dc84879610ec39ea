//! Model-ready tables from raw records: per-capita normalization, ratio
//! de-trending, monthly climate features, seasonal normals, and the joined
//! training table.

mod features;
mod normals;

pub use features::{
    build_training_table, interpolate_gaps, monthly_feature_table, monthly_features,
    write_training_table_csv, FeatureBlock, MonthlyFeatureRow, TrainingTable, FEATURE_NAMES,
    N_FEATURES, OUTCOME_NAMES,
};
pub use normals::{sample_std, seasonal_normals, write_normals_csv, SeasonalNormals, SEASONS};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{PopulationRecord, Sector};

/// Tunables for the climate-to-feature stage.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PreprocessOptions {
    /// A day counts as wet when precip >= this many mm.
    pub wet_day_threshold_mm: f64,
    /// Fill climate gaps up to this many consecutive missing days by linear
    /// interpolation; longer gaps invalidate the affected months.
    pub max_gap_days: u32,
    /// Minimum fraction of a month's days that must be present (after gap
    /// filling) for the month to produce a feature row.
    pub min_day_fraction: f64,
    /// Lower bound applied to every interannual-variability component so
    /// standardization stays finite (arid-season precipitation can have
    /// zero across-year variance).
    pub icv_floor: f64,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        PreprocessOptions {
            wet_day_threshold_mm: 1.0,
            max_gap_days: 3,
            min_day_fraction: 0.9,
            icv_floor: 1e-6,
        }
    }
}

/// Processing stage of a demand series. Transitions are one-way:
/// raw -> per-capita -> detrended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Raw,
    PerCapita,
    Detrended,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Stage::Raw => write!(f, "raw"),
            Stage::PerCapita => write!(f, "per_capita"),
            Stage::Detrended => write!(f, "detrended"),
        }
    }
}

/// Monthly consumption for one city and sector, keyed by (year, month).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DemandSeries {
    pub city_id: String,
    pub sector: Sector,
    pub stage: Stage,
    pub values: BTreeMap<(i32, u32), f64>,
}

impl DemandSeries {
    pub fn from_records(
        city_id: &str,
        sector: Sector,
        values: BTreeMap<(i32, u32), f64>,
    ) -> DemandSeries {
        DemandSeries {
            city_id: city_id.to_string(),
            sector,
            stage: Stage::Raw,
            values,
        }
    }

    pub fn years(&self) -> Vec<i32> {
        let mut years: Vec<i32> = self.values.keys().map(|(y, _)| *y).collect();
        years.dedup();
        years
    }
}

/// Divide each monthly value by that year's service population.
pub fn to_per_capita(series: &DemandSeries, population: &[PopulationRecord]) -> Result<DemandSeries> {
    if series.stage != Stage::Raw {
        return Err(Error::StageViolation {
            city_id: series.city_id.clone(),
            sector: series.sector.to_string(),
            expected: Stage::Raw.to_string(),
            op: "to_per_capita".to_string(),
        });
    }
    let pop: BTreeMap<i32, f64> = population
        .iter()
        .filter(|p| p.city_id == series.city_id && p.sector == series.sector)
        .map(|p| (p.year, p.service_population))
        .collect();
    let mut values = BTreeMap::new();
    for (&(year, month), &raw) in &series.values {
        let p = pop.get(&year).ok_or_else(|| Error::MissingPopulationYear {
            city_id: series.city_id.clone(),
            sector: series.sector.to_string(),
            year,
        })?;
        values.insert((year, month), raw / p);
    }
    Ok(DemandSeries {
        city_id: series.city_id.clone(),
        sector: series.sector,
        stage: Stage::PerCapita,
        values,
    })
}

/// Ratio de-trending: rescale each year by (global mean / that year's mean),
/// removing non-climatic year-to-year drift while preserving the intra-annual
/// shape.
///
/// `out(y, m) = in(y, m) * mean_all / mean_year(y)`
pub fn detrend(series: &DemandSeries) -> Result<DemandSeries> {
    if series.stage != Stage::PerCapita {
        return Err(Error::StageViolation {
            city_id: series.city_id.clone(),
            sector: series.sector.to_string(),
            expected: Stage::PerCapita.to_string(),
            op: "detrend".to_string(),
        });
    }
    let mut per_year: BTreeMap<i32, Vec<f64>> = BTreeMap::new();
    for (&(year, _), &v) in &series.values {
        per_year.entry(year).or_default().push(v);
    }
    if per_year.len() < 2 {
        return Err(Error::DetrendPrecondition {
            city_id: series.city_id.clone(),
            sector: series.sector.to_string(),
            msg: format!("need >= 2 years, have {}", per_year.len()),
        });
    }
    for (year, months) in &per_year {
        if months.len() < 6 {
            return Err(Error::DetrendPrecondition {
                city_id: series.city_id.clone(),
                sector: series.sector.to_string(),
                msg: format!("year {year} has only {} months, need >= 6", months.len()),
            });
        }
    }
    let total: f64 = series.values.values().sum();
    let global_mean = total / series.values.len() as f64;
    let mut year_mean = BTreeMap::new();
    for (year, months) in &per_year {
        let mean = months.iter().sum::<f64>() / months.len() as f64;
        if mean == 0.0 {
            return Err(Error::DetrendZeroYear {
                city_id: series.city_id.clone(),
                sector: series.sector.to_string(),
                year: *year,
            });
        }
        year_mean.insert(*year, mean);
    }
    let values = series
        .values
        .iter()
        .map(|(&(year, month), &v)| ((year, month), v * global_mean / year_mean[&year]))
        .collect();
    Ok(DemandSeries {
        city_id: series.city_id.clone(),
        sector: series.sector,
        stage: Stage::Detrended,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(values: &[((i32, u32), f64)]) -> DemandSeries {
        DemandSeries::from_records("t", Sector::Water, values.iter().cloned().collect())
    }

    fn pop(year: i32, p: f64) -> PopulationRecord {
        PopulationRecord {
            city_id: "t".to_string(),
            sector: Sector::Water,
            year,
            service_population: p,
        }
    }

    #[test]
    fn per_capita_divides_by_population() {
        let s = series(&[((2010, 7), 1_000_000.0)]);
        let out = to_per_capita(&s, &[pop(2010, 500_000.0)]).unwrap();
        assert_eq!(out.values[&(2010, 7)], 2.0);
        assert_eq!(out.stage, Stage::PerCapita);
    }

    #[test]
    fn per_capita_scale_invariance() {
        let s1 = series(&[((2010, 7), 1_000_000.0)]);
        let s2 = series(&[((2010, 7), 2_000_000.0)]);
        let a = to_per_capita(&s1, &[pop(2010, 500_000.0)]).unwrap();
        let b = to_per_capita(&s2, &[pop(2010, 1_000_000.0)]).unwrap();
        assert_eq!(a.values[&(2010, 7)], b.values[&(2010, 7)]);
    }

    #[test]
    fn per_capita_missing_year_errors() {
        let s = series(&[((2013, 7), 10.0)]);
        let err = to_per_capita(&s, &[pop(2012, 100.0)]).unwrap_err();
        assert!(matches!(err, Error::MissingPopulationYear { year: 2013, .. }));
    }

    fn full_year(year: i32, value: f64) -> Vec<((i32, u32), f64)> {
        (1..=12).map(|m| ((year, m), value)).collect()
    }

    #[test]
    fn detrend_constant_series_unchanged() {
        let mut vals = full_year(2010, 5.0);
        vals.extend(full_year(2011, 5.0));
        let mut s = series(&vals);
        s.stage = Stage::PerCapita;
        let out = detrend(&s).unwrap();
        for v in out.values.values() {
            assert!((v - 5.0).abs() < 1e-12);
        }
    }

    #[test]
    fn detrend_two_year_ratio_example() {
        // year1 all 2, year2 all 4 -> global mean 3 -> every month becomes 3.
        let mut vals = full_year(2010, 2.0);
        vals.extend(full_year(2011, 4.0));
        let mut s = series(&vals);
        s.stage = Stage::PerCapita;
        let out = detrend(&s).unwrap();
        for v in out.values.values() {
            assert_eq!(*v, 3.0);
        }
        assert_eq!(out.stage, Stage::Detrended);
    }

    #[test]
    fn detrend_single_year_errors() {
        let mut s = series(&full_year(2010, 2.0));
        s.stage = Stage::PerCapita;
        assert!(matches!(
            detrend(&s),
            Err(Error::DetrendPrecondition { .. })
        ));
    }

    #[test]
    fn detrend_zero_year_names_year() {
        let mut vals = full_year(2010, 0.0);
        vals.extend(full_year(2011, 4.0));
        let mut s = series(&vals);
        s.stage = Stage::PerCapita;
        match detrend(&s) {
            Err(Error::DetrendZeroYear { year, .. }) => assert_eq!(year, 2010),
            other => panic!("expected DetrendZeroYear, got {other:?}"),
        }
    }

    #[test]
    fn detrend_requires_per_capita_stage() {
        let mut vals = full_year(2010, 2.0);
        vals.extend(full_year(2011, 4.0));
        let s = series(&vals); // still Raw
        assert!(matches!(detrend(&s), Err(Error::StageViolation { .. })));
    }

    #[test]
    fn detrend_equalizes_year_means() {
        let mut vals = Vec::new();
        for (i, year) in [2010, 2011, 2012].iter().enumerate() {
            for m in 1..=12u32 {
                vals.push(((*year, m), (1.0 + i as f64) * (10.0 + m as f64)));
            }
        }
        let mut s = series(&vals);
        s.stage = Stage::PerCapita;
        let out = detrend(&s).unwrap();
        let global: f64 = out.values.values().sum::<f64>() / out.values.len() as f64;
        for year in [2010, 2011, 2012] {
            let months: Vec<f64> = out
                .values
                .iter()
                .filter(|((y, _), _)| *y == year)
                .map(|(_, v)| *v)
                .collect();
            let mean = months.iter().sum::<f64>() / months.len() as f64;
            assert!((mean - global).abs() / global < 1e-9, "year {year}");
        }
    }
}
