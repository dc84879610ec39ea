//! Monthly climate features and the joined training table.

use std::collections::BTreeMap;
use std::io::Write;

use chrono::{Datelike, Days, NaiveDate};
use serde::{Deserialize, Serialize};

use super::{DemandSeries, PreprocessOptions, Stage};
use crate::error::{Error, Result};
use crate::ingest::ClimateDailyRecord;

pub const N_FEATURES: usize = 17;

/// Canonical feature order: min/max/mean for the five instantaneous
/// variables, then monthly precipitation total and wet-day count.
pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "tdry_min",
    "tdry_max",
    "tdry_mean",
    "twet_min",
    "twet_max",
    "twet_mean",
    "tdew_min",
    "tdew_max",
    "tdew_mean",
    "rh_min",
    "rh_max",
    "rh_mean",
    "wind_min",
    "wind_max",
    "wind_mean",
    "precip_total",
    "wet_days",
];

/// The 17 monthly climate predictors for one city-month.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonthlyFeatureRow {
    pub city_id: String,
    pub year: i32,
    pub month: u32,
    /// Values in [`FEATURE_NAMES`] order.
    pub features: [f64; N_FEATURES],
}

impl MonthlyFeatureRow {
    pub fn get(&self, name: &str) -> Option<f64> {
        FEATURE_NAMES
            .iter()
            .position(|n| *n == name)
            .map(|i| self.features[i])
    }
}

pub(crate) fn days_in_month(year: i32, month: u32) -> u32 {
    let first = NaiveDate::from_ymd_opt(year, month, 1).expect("valid month");
    let next = if month == 12 {
        NaiveDate::from_ymd_opt(year + 1, 1, 1)
    } else {
        NaiveDate::from_ymd_opt(year, month + 1, 1)
    }
    .expect("valid month");
    (next - first).num_days() as u32
}

/// Fill interior gaps of at most `max_gap_days` consecutive missing days by
/// linear interpolation of every variable. Input must belong to one location;
/// output is sorted by date. Gaps at the ends of the series and gaps longer
/// than the limit are left missing.
pub fn interpolate_gaps(days: &[ClimateDailyRecord], max_gap_days: u32) -> Vec<ClimateDailyRecord> {
    let mut sorted: Vec<ClimateDailyRecord> = days.to_vec();
    sorted.sort_by_key(|d| d.date);
    let mut out: Vec<ClimateDailyRecord> = Vec::with_capacity(sorted.len());
    for rec in sorted {
        if let Some(prev) = out.last() {
            let gap = (rec.date - prev.date).num_days() - 1;
            if gap > 0 && gap <= i64::from(max_gap_days) {
                let prev = prev.clone();
                let span = (gap + 1) as f64;
                for step in 1..=gap {
                    let t = step as f64 / span;
                    let lerp = |a: f64, b: f64| a + (b - a) * t;
                    out.push(ClimateDailyRecord {
                        city_id: prev.city_id.clone(),
                        date: prev.date + Days::new(step as u64),
                        tdry_c: lerp(prev.tdry_c, rec.tdry_c),
                        twet_c: lerp(prev.twet_c, rec.twet_c),
                        tdew_c: lerp(prev.tdew_c, rec.tdew_c),
                        rh_pct: lerp(prev.rh_pct, rec.rh_pct),
                        wind_ms: lerp(prev.wind_ms, rec.wind_ms),
                        precip_mm: lerp(prev.precip_mm, rec.precip_mm),
                    });
                }
            }
        }
        out.push(rec);
    }
    out
}

/// Aggregate one month of (already gap-filled) daily records into the 17
/// features. Errors when fewer than `min_day_fraction` of the month's days
/// are present.
pub fn monthly_features(
    daily: &[ClimateDailyRecord],
    city_id: &str,
    year: i32,
    month: u32,
    opts: &PreprocessOptions,
) -> Result<MonthlyFeatureRow> {
    let mut days: Vec<&ClimateDailyRecord> = daily
        .iter()
        .filter(|d| d.city_id == city_id && d.date.year() == year && d.date.month() == month)
        .collect();
    // Aggregate in date order so the row is independent of input order.
    days.sort_by_key(|d| d.date);
    let total = days_in_month(year, month) as usize;
    if (days.len() as f64) < opts.min_day_fraction * total as f64 {
        return Err(Error::InsufficientDays {
            city_id: city_id.to_string(),
            year,
            month,
            have: days.len(),
            total,
            need_pct: opts.min_day_fraction * 100.0,
        });
    }

    let mut features = [0.0; N_FEATURES];
    let vars: [fn(&ClimateDailyRecord) -> f64; 5] = [
        |d| d.tdry_c,
        |d| d.twet_c,
        |d| d.tdew_c,
        |d| d.rh_pct,
        |d| d.wind_ms,
    ];
    for (v, get) in vars.iter().enumerate() {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        let mut sum = 0.0;
        for d in &days {
            let x = get(d);
            min = min.min(x);
            max = max.max(x);
            sum += x;
        }
        features[3 * v] = min;
        features[3 * v + 1] = max;
        features[3 * v + 2] = sum / days.len() as f64;
    }
    features[15] = days.iter().map(|d| d.precip_mm).sum();
    features[16] = days
        .iter()
        .filter(|d| d.precip_mm >= opts.wet_day_threshold_mm)
        .count() as f64;

    Ok(MonthlyFeatureRow {
        city_id: city_id.to_string(),
        year,
        month,
        features,
    })
}

/// Gap-fill one location's daily records and build a feature row for every
/// month that clears the day-coverage bar. Months that fail are skipped.
pub fn monthly_feature_table(
    daily: &[ClimateDailyRecord],
    city_id: &str,
    opts: &PreprocessOptions,
) -> Vec<MonthlyFeatureRow> {
    let filled = interpolate_gaps(daily, opts.max_gap_days);
    let mut months: Vec<(i32, u32)> = filled
        .iter()
        .filter(|d| d.city_id == city_id)
        .map(|d| (d.date.year(), d.date.month()))
        .collect();
    months.dedup();
    months.sort_unstable();
    months.dedup();
    months
        .into_iter()
        .filter_map(|(year, month)| monthly_features(&filled, city_id, year, month, opts).ok())
        .collect()
}

/// Feature rows for a set of (year, month) keys, aligned and ready for
/// prediction. Used for both the observed table and analog substitutes.
#[derive(Debug, Clone)]
pub struct FeatureBlock {
    pub feature_names: Vec<String>,
    pub keys: Vec<(i32, u32)>,
    pub rows: Vec<Vec<f64>>,
}

impl FeatureBlock {
    /// Restrict to a subset of features, preserving the given order.
    pub fn restrict(&self, names: &[String]) -> Result<FeatureBlock> {
        let mut indices = Vec::with_capacity(names.len());
        for name in names {
            let idx = self
                .feature_names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::MissingFeature { name: name.clone() })?;
            indices.push(idx);
        }
        Ok(FeatureBlock {
            feature_names: names.to_vec(),
            keys: self.keys.clone(),
            rows: self
                .rows
                .iter()
                .map(|r| indices.iter().map(|&i| r[i]).collect())
                .collect(),
        })
    }

    pub fn from_rows(rows: &[MonthlyFeatureRow]) -> FeatureBlock {
        FeatureBlock {
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            keys: rows.iter().map(|r| (r.year, r.month)).collect(),
            rows: rows.iter().map(|r| r.features.to_vec()).collect(),
        }
    }
}

/// Joined per-city table: summer-month feature rows paired with the
/// (water, electricity) outcome vector.
#[derive(Debug, Clone)]
pub struct TrainingTable {
    pub city_id: String,
    pub feature_names: Vec<String>,
    pub keys: Vec<(i32, u32)>,
    pub rows: Vec<Vec<f64>>,
    /// `outcomes[i] = [water, electricity]` for row i.
    pub outcomes: Vec<[f64; 2]>,
}

pub const OUTCOME_NAMES: [&str; 2] = ["water", "electricity"];

impl TrainingTable {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    /// Outcome column k as a vector.
    pub fn outcome_column(&self, k: usize) -> Vec<f64> {
        self.outcomes.iter().map(|o| o[k]).collect()
    }

    pub fn feature_block(&self) -> FeatureBlock {
        FeatureBlock {
            feature_names: self.feature_names.clone(),
            keys: self.keys.clone(),
            rows: self.rows.clone(),
        }
    }

    /// Restrict the feature columns, keeping keys and outcomes.
    pub fn restrict_features(&self, names: &[String]) -> Result<TrainingTable> {
        let block = self.feature_block().restrict(names)?;
        Ok(TrainingTable {
            city_id: self.city_id.clone(),
            feature_names: block.feature_names,
            keys: block.keys,
            rows: block.rows,
            outcomes: self.outcomes.clone(),
        })
    }

    /// Select a row subset (for cross-validation folds).
    pub fn subset(&self, indices: &[usize]) -> TrainingTable {
        TrainingTable {
            city_id: self.city_id.clone(),
            feature_names: self.feature_names.clone(),
            keys: indices.iter().map(|&i| self.keys[i]).collect(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            outcomes: indices.iter().map(|&i| self.outcomes[i]).collect(),
        }
    }
}

/// Inner-join feature rows with both detrended demand series on
/// (year, month), keeping only summer months. Rows missing either outcome or
/// the features are dropped; fewer than `min_rows` surviving rows is an
/// error.
pub fn build_training_table(
    features: &[MonthlyFeatureRow],
    water: &DemandSeries,
    electricity: &DemandSeries,
    summer_months: &[u32],
    min_rows: usize,
) -> Result<TrainingTable> {
    for series in [water, electricity] {
        if series.stage != Stage::Detrended {
            return Err(Error::StageViolation {
                city_id: series.city_id.clone(),
                sector: series.sector.to_string(),
                expected: Stage::Detrended.to_string(),
                op: "build_training_table".to_string(),
            });
        }
    }
    let city_id = water.city_id.clone();
    let by_key: BTreeMap<(i32, u32), &MonthlyFeatureRow> =
        features.iter().map(|r| ((r.year, r.month), r)).collect();

    let mut keys = Vec::new();
    let mut rows = Vec::new();
    let mut outcomes = Vec::new();
    for (&key, feature_row) in &by_key {
        if !summer_months.contains(&key.1) {
            continue;
        }
        let (Some(&w), Some(&e)) = (water.values.get(&key), electricity.values.get(&key)) else {
            continue;
        };
        keys.push(key);
        rows.push(feature_row.features.to_vec());
        outcomes.push([w, e]);
    }
    if rows.len() < min_rows {
        return Err(Error::TooFewRows {
            city_id,
            have: rows.len(),
            need: min_rows,
        });
    }
    Ok(TrainingTable {
        city_id,
        feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        keys,
        rows,
        outcomes,
    })
}

/// Debug dump (`features_<city>.csv` layout): key columns, the 17 features
/// in canonical order, then the two outcomes.
pub fn write_training_table_csv<W: Write>(w: &mut W, table: &TrainingTable) -> Result<()> {
    let mut header = vec!["city_id".to_string(), "year".to_string(), "month".to_string()];
    header.extend(table.feature_names.iter().cloned());
    header.extend(OUTCOME_NAMES.iter().map(|s| s.to_string()));
    writeln!(w, "{}", header.join(",")).map_err(|e| Error::io("<writer>", e))?;
    for i in 0..table.n_rows() {
        let mut cells = vec![
            table.city_id.clone(),
            table.keys[i].0.to_string(),
            table.keys[i].1.to_string(),
        ];
        cells.extend(table.rows[i].iter().map(|v| v.to_string()));
        cells.extend(table.outcomes[i].iter().map(|v| v.to_string()));
        writeln!(w, "{}", cells.join(",")).map_err(|e| Error::io("<writer>", e))?;
    }
    Ok(())
}
