//! Bundle-to-table glue shared by the pipeline stages and the CLI.

use std::collections::BTreeMap;

use chrono::Datelike;

use crate::error::Result;
use crate::ingest::{AnalogSource, DatasetBundle, Scenario, Sector, StudyPeriod};
use crate::preprocess::{
    build_training_table, detrend, monthly_feature_table, seasonal_normals, to_per_capita,
    DemandSeries, FeatureBlock, PreprocessOptions, SeasonalNormals, TrainingTable,
};

#[derive(Debug, Clone)]
pub struct PrepareOptions {
    pub period: StudyPeriod,
    pub summer_months: Vec<u32>,
    pub preprocess: PreprocessOptions,
    pub min_training_rows: usize,
}

/// Per-capita, detrended demand series for one city-sector over the study
/// period.
pub fn detrended_series(
    bundle: &DatasetBundle,
    city_id: &str,
    sector: Sector,
    period: StudyPeriod,
) -> Result<DemandSeries> {
    let values: BTreeMap<(i32, u32), f64> = bundle
        .demand_map(city_id, sector)
        .into_iter()
        .filter(|((year, _), _)| (period.start_year..=period.end_year).contains(year))
        .collect();
    let raw = DemandSeries::from_records(city_id, sector, values);
    let per_capita = to_per_capita(&raw, &bundle.population)?;
    detrend(&per_capita)
}

/// Full 17-feature training table for one city: detrend both sectors, build
/// monthly features from the study-period climate, and join on summer months.
pub fn city_training_table(
    bundle: &DatasetBundle,
    city_id: &str,
    opts: &PrepareOptions,
) -> Result<TrainingTable> {
    let water = detrended_series(bundle, city_id, Sector::Water, opts.period)?;
    let electricity = detrended_series(bundle, city_id, Sector::Electricity, opts.period)?;
    let climate: Vec<_> = bundle
        .climate_for(city_id)
        .into_iter()
        .filter(|d| (opts.period.start_year..=opts.period.end_year).contains(&d.date.year()))
        .collect();
    let features = monthly_feature_table(&climate, city_id, &opts.preprocess);
    build_training_table(
        &features,
        &water,
        &electricity,
        &opts.summer_months,
        opts.min_training_rows,
    )
}

/// Summer-month feature rows for any climate location over the study period,
/// as a block keyed by (year, month). Used for the observed table of a city
/// and for analog substitutes alike.
pub fn location_feature_block(
    bundle: &DatasetBundle,
    location_id: &str,
    opts: &PrepareOptions,
) -> FeatureBlock {
    let climate: Vec<_> = bundle
        .climate_for(location_id)
        .into_iter()
        .filter(|d| (opts.period.start_year..=opts.period.end_year).contains(&d.date.year()))
        .collect();
    let rows: Vec<_> = monthly_feature_table(&climate, location_id, &opts.preprocess)
        .into_iter()
        .filter(|r| opts.summer_months.contains(&r.month))
        .collect();
    FeatureBlock::from_rows(&rows)
}

/// Group usable cities by their registry region code, sorted for determinism.
pub fn cities_by_region(
    bundle: &DatasetBundle,
    usable: &[String],
) -> BTreeMap<String, Vec<String>> {
    let mut regions: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for city in &bundle.cities {
        if usable.iter().any(|u| u == &city.city_id) {
            regions
                .entry(city.region.clone())
                .or_default()
                .push(city.city_id.clone());
        }
    }
    for cities in regions.values_mut() {
        cities.sort();
    }
    regions
}

/// Present-day seasonal normals for every climate location that has enough
/// coverage; locations with insufficient years are skipped.
pub fn candidate_pool(bundle: &DatasetBundle, opts: &PrepareOptions) -> Vec<SeasonalNormals> {
    bundle
        .climate_locations()
        .into_iter()
        .filter_map(|loc| {
            let days = bundle.climate_for(&loc);
            seasonal_normals(
                &days,
                &loc,
                opts.period.start_year,
                opts.period.end_year,
                &opts.preprocess,
            )
            .ok()
        })
        .collect()
}

/// Resolve the analog location for (city, scenario) from the supplied analog
/// map: the ensemble row wins when several sources are present.
pub fn analog_for(
    bundle: &DatasetBundle,
    city_id: &str,
    scenario: Scenario,
) -> Option<(String, AnalogSource)> {
    let rows: Vec<_> = bundle
        .analogs
        .iter()
        .filter(|r| r.target_city_id == city_id && r.scenario == scenario)
        .collect();
    if let Some(ensemble) = rows.iter().find(|r| r.source == AnalogSource::Ensemble) {
        return Some((ensemble.analog_id.clone(), ensemble.source.clone()));
    }
    rows.first().map(|r| (r.analog_id.clone(), r.source.clone()))
}
