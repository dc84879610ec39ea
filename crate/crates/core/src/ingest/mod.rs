//! Input tables: domain records, CSV parsing/serialization, bundle assembly
//! and coverage validation.
//!
//! All tables are UTF-8 CSV with a mandatory header, `.` decimal separator,
//! and `#` comment lines. Keys are case-sensitive and trimmed of surrounding
//! whitespace. Parsing validates every record invariant; no invalid record
//! escapes this module.

mod parse;
mod validate;

pub use parse::{
    parse_analog_csv, parse_climate_csv, parse_demand_csv, parse_future_normals_csv,
    parse_population_csv, parse_registry_csv, parse_ssp_csv, write_analog_csv, write_climate_csv,
    write_demand_csv, write_future_normals_csv, write_population_csv, write_registry_csv,
    write_ssp_csv, RegistryParse,
};
pub use validate::{
    validate_bundle, CityValidation, CoverageThresholds, SectorValidation, StudyPeriod,
    ValidationReport,
};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Demand sector. The unit column of a demand row must agree with it
/// (`m3` for water, `MWh` for electricity).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sector {
    Water,
    Electricity,
}

impl Sector {
    pub fn expected_unit(self) -> &'static str {
        match self {
            Sector::Water => "m3",
            Sector::Electricity => "MWh",
        }
    }

    pub fn parse(s: &str) -> Option<Sector> {
        match s {
            "water" => Some(Sector::Water),
            "electricity" => Some(Sector::Electricity),
            _ => None,
        }
    }
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sector::Water => write!(f, "water"),
            Sector::Electricity => write!(f, "electricity"),
        }
    }
}

/// Emissions scenario labeling an analog map row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Rcp45,
    Rcp85,
}

impl Scenario {
    pub fn parse(s: &str) -> Option<Scenario> {
        match s {
            "rcp45" => Some(Scenario::Rcp45),
            "rcp85" => Some(Scenario::Rcp85),
            _ => None,
        }
    }

    pub const ALL: [Scenario; 2] = [Scenario::Rcp45, Scenario::Rcp85];
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scenario::Rcp45 => write!(f, "rcp45"),
            Scenario::Rcp85 => write!(f, "rcp85"),
        }
    }
}

/// Provenance of an analog assignment: the multi-model ensemble or a single
/// named GCM (`gcm:<name>` in the CSV).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AnalogSource {
    Ensemble,
    Gcm(String),
}

impl AnalogSource {
    pub fn parse(s: &str) -> Option<AnalogSource> {
        if s == "ensemble" {
            return Some(AnalogSource::Ensemble);
        }
        let name = s.strip_prefix("gcm:")?;
        if name.is_empty() {
            return None;
        }
        Some(AnalogSource::Gcm(name.to_string()))
    }
}

impl fmt::Display for AnalogSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalogSource::Ensemble => write!(f, "ensemble"),
            AnalogSource::Gcm(name) => write!(f, "gcm:{name}"),
        }
    }
}

/// One row of the city registry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CityRecord {
    pub city_id: String,
    pub name: String,
    pub state: String,
    pub lat: f64,
    pub lon: f64,
    /// NOAA climate-zone code used for regional pooling.
    pub region: String,
}

/// Monthly consumption for one city and sector, in the sector's native unit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DemandRecord {
    pub city_id: String,
    pub sector: Sector,
    pub year: i32,
    pub month: u32,
    pub value: f64,
    pub unit: String,
}

/// Service population for one (city, sector, year). Sector-specific because
/// water and electric utilities serve different jurisdictions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PopulationRecord {
    pub city_id: String,
    pub sector: Sector,
    pub year: i32,
    pub service_population: f64,
}

/// One day of climate observations for a location.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClimateDailyRecord {
    pub city_id: String,
    pub date: NaiveDate,
    pub tdry_c: f64,
    pub twet_c: f64,
    pub tdew_c: f64,
    pub rh_pct: f64,
    pub wind_ms: f64,
    pub precip_mm: f64,
}

/// Maps a target city to the location whose present climate stands in for
/// the target's future climate under a scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalogMapRecord {
    pub target_city_id: String,
    pub scenario: Scenario,
    pub analog_id: String,
    pub source: AnalogSource,
}

/// Shared Socioeconomic Pathway population scenario row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SspRecord {
    pub city_id: String,
    /// 1 (sustainable development) through 5 (fossil-fueled development).
    pub ssp: u8,
    pub year: i32,
    pub population: f64,
}

/// Future 12-variable seasonal mean vector for a target city and scenario,
/// season-major: DJF, MAM, JJA, SON x (tmin C, tmax C, prcp mm).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FutureNormalsRecord {
    pub city_id: String,
    pub scenario: Scenario,
    pub values: [f64; 12],
}

/// Everything a run needs, parsed and cross-checked.
#[derive(Debug, Clone, Default)]
pub struct DatasetBundle {
    pub cities: Vec<CityRecord>,
    pub demand: Vec<DemandRecord>,
    pub population: Vec<PopulationRecord>,
    pub climate: Vec<ClimateDailyRecord>,
    pub analogs: Vec<AnalogMapRecord>,
    pub future_normals: Option<Vec<FutureNormalsRecord>>,
    pub ssp: Option<Vec<SspRecord>>,
}

/// File names `load_bundle` expects inside a data directory.
pub mod files {
    pub const CITIES: &str = "cities.csv";
    pub const DEMAND: &str = "demand.csv";
    pub const POPULATION: &str = "population.csv";
    pub const CLIMATE: &str = "climate.csv";
    pub const ANALOGS: &str = "analogs.csv";
    pub const FUTURE_NORMALS: &str = "future_normals.csv";
    pub const SSP: &str = "ssp_population.csv";
}

impl DatasetBundle {
    /// City ids present in the registry, sorted.
    pub fn city_ids(&self) -> Vec<String> {
        self.cities.iter().map(|c| c.city_id.clone()).collect()
    }

    pub fn city(&self, city_id: &str) -> Option<&CityRecord> {
        self.cities.iter().find(|c| c.city_id == city_id)
    }

    /// All distinct location ids carrying climate records (registry cities
    /// plus analog-only locations), sorted.
    pub fn climate_locations(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self.climate.iter().map(|r| r.city_id.as_str()).collect();
        set.into_iter().map(str::to_string).collect()
    }

    /// Daily records for one location, sorted by date.
    pub fn climate_for(&self, location_id: &str) -> Vec<ClimateDailyRecord> {
        let mut days: Vec<ClimateDailyRecord> = self
            .climate
            .iter()
            .filter(|r| r.city_id == location_id)
            .cloned()
            .collect();
        days.sort_by_key(|r| r.date);
        days
    }

    /// Demand rows for one city-sector as a (year, month) -> value map.
    pub fn demand_map(&self, city_id: &str, sector: Sector) -> BTreeMap<(i32, u32), f64> {
        self.demand
            .iter()
            .filter(|r| r.city_id == city_id && r.sector == sector)
            .map(|r| ((r.year, r.month), r.value))
            .collect()
    }

    /// Service population per year for one city-sector.
    pub fn population_map(&self, city_id: &str, sector: Sector) -> BTreeMap<i32, f64> {
        self.population
            .iter()
            .filter(|r| r.city_id == city_id && r.sector == sector)
            .map(|r| (r.year, r.service_population))
            .collect()
    }

    /// Cross-record invariant: every analog id must point at a location with
    /// daily climate records.
    pub fn check_analog_refs(&self) -> Result<()> {
        let locations: BTreeSet<&str> = self.climate.iter().map(|r| r.city_id.as_str()).collect();
        for rec in &self.analogs {
            if !locations.contains(rec.analog_id.as_str()) {
                return Err(Error::Parse {
                    table: files::ANALOGS.to_string(),
                    line: 0,
                    msg: format!(
                        "analog {} for {} ({}) has no climate records",
                        rec.analog_id, rec.target_city_id, rec.scenario
                    ),
                });
            }
        }
        Ok(())
    }
}

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Load a bundle from a data directory using the fixed file names in
/// [`files`]. `analogs.csv`, `future_normals.csv` and `ssp_population.csv`
/// are optional. Returns the bundle plus any registry warnings (unknown
/// region codes warn rather than fail).
pub fn load_bundle(dir: &Path) -> Result<(DatasetBundle, Vec<String>)> {
    let RegistryParse { cities, warnings } = parse_registry_csv(open(&dir.join(files::CITIES))?)?;
    let demand = parse_demand_csv(open(&dir.join(files::DEMAND))?)?;
    let population = parse_population_csv(open(&dir.join(files::POPULATION))?)?;
    let climate = parse_climate_csv(open(&dir.join(files::CLIMATE))?)?;

    let analogs_path = dir.join(files::ANALOGS);
    let analogs = if analogs_path.exists() {
        parse_analog_csv(open(&analogs_path)?)?
    } else {
        Vec::new()
    };
    let normals_path = dir.join(files::FUTURE_NORMALS);
    let future_normals = if normals_path.exists() {
        Some(parse_future_normals_csv(open(&normals_path)?)?)
    } else {
        None
    };
    let ssp_path = dir.join(files::SSP);
    let ssp = if ssp_path.exists() {
        Some(parse_ssp_csv(open(&ssp_path)?)?)
    } else {
        None
    };

    let bundle = DatasetBundle {
        cities,
        demand,
        population,
        climate,
        analogs,
        future_normals,
        ssp,
    };
    bundle.check_analog_refs()?;
    Ok((bundle, warnings))
}
