//! Coverage validation for an assembled bundle.
//!
//! The report is pure and deterministic: the same bundle always produces the
//! same report. Nothing here mutates or filters the bundle; exclusion is a
//! flag that downstream stages honor.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{DatasetBundle, Sector};

/// Inclusive study window in whole years.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudyPeriod {
    pub start_year: i32,
    pub end_year: i32,
}

impl StudyPeriod {
    pub fn years(&self) -> impl Iterator<Item = i32> {
        self.start_year..=self.end_year
    }

    pub fn n_years(&self) -> usize {
        (self.end_year - self.start_year + 1).max(0) as usize
    }

    pub fn first_day(&self) -> NaiveDate {
        NaiveDate::from_ymd_opt(self.start_year, 1, 1).expect("valid year")
    }

    pub fn last_day(&self) -> NaiveDate {
        NaiveDate::from_ymd_opt(self.end_year, 12, 31).expect("valid year")
    }

    pub fn n_days(&self) -> usize {
        (self.last_day() - self.first_day()).num_days() as usize + 1
    }
}

/// Minimum coverage fractions for a city-sector to be usable: demand over
/// the study-period summer months and climate over the study-period days.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CoverageThresholds {
    pub demand_summer: f64,
    pub climate_days: f64,
}

impl Default for CoverageThresholds {
    fn default() -> Self {
        CoverageThresholds {
            demand_summer: 0.80,
            climate_days: 0.95,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SectorValidation {
    pub sector: Sector,
    /// Summer months in the study period with no demand value.
    pub missing_months: Vec<(i32, u32)>,
    /// Study-period years that have demand rows but no population record.
    pub missing_population_years: Vec<i32>,
    /// Fraction of study-period summer months with a demand value.
    pub summer_coverage: f64,
    /// Share of total study-period demand that falls in the summer months.
    /// Reported for context only; nothing is enforced on it.
    pub summer_share: Option<f64>,
    pub usable: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CityValidation {
    pub city_id: String,
    pub sectors: Vec<SectorValidation>,
    /// Study-period days with no climate record.
    pub missing_climate_days: Vec<NaiveDate>,
    pub climate_coverage: f64,
    pub excluded: bool,
    pub reasons: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub study_period: StudyPeriod,
    pub summer_months: Vec<u32>,
    pub thresholds: CoverageThresholds,
    pub cities: Vec<CityValidation>,
}

impl ValidationReport {
    pub fn excluded_cities(&self) -> Vec<&str> {
        self.cities
            .iter()
            .filter(|c| c.excluded)
            .map(|c| c.city_id.as_str())
            .collect()
    }

    pub fn usable_cities(&self) -> Vec<&str> {
        self.cities
            .iter()
            .filter(|c| !c.excluded)
            .map(|c| c.city_id.as_str())
            .collect()
    }

    pub fn is_usable(&self, city_id: &str) -> bool {
        self.cities
            .iter()
            .any(|c| c.city_id == city_id && !c.excluded)
    }
}

/// Check demand, climate, and population coverage for every registry city.
///
/// A city is excluded when either sector misses the demand-summer threshold,
/// when climate-day coverage misses its threshold, or when a study-period
/// year with demand lacks a population record.
pub fn validate_bundle(
    bundle: &DatasetBundle,
    period: StudyPeriod,
    summer_months: &[u32],
    thresholds: CoverageThresholds,
) -> ValidationReport {
    let mut cities = Vec::new();
    let mut sorted = bundle.cities.clone();
    sorted.sort_by(|a, b| a.city_id.cmp(&b.city_id));

    for city in &sorted {
        let mut reasons = Vec::new();
        let mut sectors = Vec::new();

        for sector in [Sector::Water, Sector::Electricity] {
            let demand = bundle.demand_map(&city.city_id, sector);
            let pop = bundle.population_map(&city.city_id, sector);

            let mut missing_months = Vec::new();
            let mut present = 0usize;
            let mut total = 0usize;
            for year in period.years() {
                for &month in summer_months {
                    total += 1;
                    if demand.contains_key(&(year, month)) {
                        present += 1;
                    } else {
                        missing_months.push((year, month));
                    }
                }
            }
            let summer_coverage = if total == 0 {
                0.0
            } else {
                present as f64 / total as f64
            };

            let mut missing_population_years: Vec<i32> = demand
                .keys()
                .map(|(y, _)| *y)
                .filter(|y| (period.start_year..=period.end_year).contains(y))
                .collect::<std::collections::BTreeSet<_>>()
                .into_iter()
                .filter(|y| !pop.contains_key(y))
                .collect();
            missing_population_years.dedup();

            let summer_share = summer_demand_share(&demand, period, summer_months);

            let mut usable = true;
            if summer_coverage < thresholds.demand_summer {
                usable = false;
                reasons.push(format!(
                    "{sector}: summer demand coverage {summer_coverage:.3} < {}",
                    thresholds.demand_summer
                ));
            }
            if !missing_population_years.is_empty() {
                usable = false;
                reasons.push(format!(
                    "{sector}: missing population for years {missing_population_years:?}"
                ));
            }
            sectors.push(SectorValidation {
                sector,
                missing_months,
                missing_population_years,
                summer_coverage,
                summer_share,
                usable,
            });
        }

        let days = bundle.climate_for(&city.city_id);
        let have: std::collections::BTreeSet<NaiveDate> = days
            .iter()
            .map(|d| d.date)
            .filter(|d| *d >= period.first_day() && *d <= period.last_day())
            .collect();
        let mut missing_climate_days = Vec::new();
        let mut d = period.first_day();
        while d <= period.last_day() {
            if !have.contains(&d) {
                missing_climate_days.push(d);
            }
            d = d.succ_opt().expect("date in range");
        }
        let climate_coverage = have.len() as f64 / period.n_days() as f64;
        if climate_coverage < thresholds.climate_days {
            reasons.push(format!(
                "climate day coverage {climate_coverage:.3} < {}",
                thresholds.climate_days
            ));
        }

        let excluded = !reasons.is_empty();
        cities.push(CityValidation {
            city_id: city.city_id.clone(),
            sectors,
            missing_climate_days,
            climate_coverage,
            excluded,
            reasons,
        });
    }

    ValidationReport {
        study_period: period,
        summer_months: summer_months.to_vec(),
        thresholds,
        cities,
    }
}

/// Summer demand as a share of total study-period demand, `None` when the
/// series has no in-period values.
fn summer_demand_share(
    demand: &BTreeMap<(i32, u32), f64>,
    period: StudyPeriod,
    summer_months: &[u32],
) -> Option<f64> {
    let mut total = 0.0;
    let mut summer = 0.0;
    let mut any = false;
    for (&(year, month), &value) in demand {
        if !(period.start_year..=period.end_year).contains(&year) {
            continue;
        }
        any = true;
        total += value;
        if summer_months.contains(&month) {
            summer += value;
        }
    }
    if !any || total <= 0.0 {
        return None;
    }
    Some(summer / total)
}
