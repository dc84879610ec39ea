//! CSV readers and writers for the input tables.
//!
//! Readers enforce exact headers, report 1-based line numbers on every
//! malformed row, and reject duplicate keys. Writers emit the same schemas
//! with shortest round-trip float formatting, so parse -> write -> parse is
//! the identity on every valid table.

use std::collections::BTreeSet;
use std::io::{Read, Write};

use chrono::NaiveDate;
use csv::{ReaderBuilder, StringRecord, Trim};

use super::{
    AnalogMapRecord, AnalogSource, CityRecord, ClimateDailyRecord, DemandRecord,
    FutureNormalsRecord, PopulationRecord, Scenario, Sector, SspRecord,
};
use crate::error::{Error, Result};

/// NOAA U.S. climate region codes accepted without a warning.
pub const KNOWN_REGIONS: [&str; 9] = [
    "northeast",
    "upper_midwest",
    "ohio_valley",
    "southeast",
    "northern_rockies",
    "south",
    "southwest",
    "northwest",
    "west",
];

pub const FUTURE_NORMALS_COLUMNS: [&str; 12] = [
    "djf_tmin_c",
    "djf_tmax_c",
    "djf_prcp_mm",
    "mam_tmin_c",
    "mam_tmax_c",
    "mam_prcp_mm",
    "jja_tmin_c",
    "jja_tmax_c",
    "jja_prcp_mm",
    "son_tmin_c",
    "son_tmax_c",
    "son_prcp_mm",
];

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(Trim::All)
        .flexible(false)
        .from_reader(input)
}

struct Row<'a> {
    table: &'static str,
    line: u64,
    record: &'a StringRecord,
}

impl<'a> Row<'a> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::parse(self.table, self.line, msg)
    }

    fn field(&self, idx: usize, name: &str) -> Result<&'a str> {
        let v = self
            .record
            .get(idx)
            .ok_or_else(|| self.err(format!("missing column {name}")))?;
        if v.is_empty() {
            return Err(self.err(format!("empty value for {name}")));
        }
        Ok(v)
    }

    fn f64(&self, idx: usize, name: &str) -> Result<f64> {
        let raw = self.field(idx, name)?;
        raw.parse::<f64>()
            .map_err(|_| self.err(format!("invalid number for {name}: {raw:?}")))
            .and_then(|v| {
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(self.err(format!("non-finite value for {name}")))
                }
            })
    }

    fn i32(&self, idx: usize, name: &str) -> Result<i32> {
        let raw = self.field(idx, name)?;
        raw.parse::<i32>()
            .map_err(|_| self.err(format!("invalid integer for {name}: {raw:?}")))
    }
}

/// Checks the header matches `expected` exactly (names and order).
fn check_header<R: Read>(
    rdr: &mut csv::Reader<R>,
    table: &'static str,
    expected: &[&str],
) -> Result<()> {
    let headers = rdr
        .headers()
        .map_err(|e| Error::parse(table, 1, e.to_string()))?;
    let got: Vec<&str> = headers.iter().collect();
    if got != expected {
        return Err(Error::parse(
            table,
            1,
            format!("header must be {:?}, got {:?}", expected.join(","), got.join(",")),
        ));
    }
    Ok(())
}

fn for_each_row<R: Read>(
    rdr: &mut csv::Reader<R>,
    table: &'static str,
    mut f: impl FnMut(Row<'_>) -> Result<()>,
) -> Result<()> {
    let mut record = StringRecord::new();
    loop {
        let more = rdr
            .read_record(&mut record)
            .map_err(|e| match e.position() {
                Some(pos) => Error::parse(table, pos.line(), e.to_string()),
                None => Error::parse(table, 0, e.to_string()),
            })?;
        if !more {
            return Ok(());
        }
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        f(Row {
            table,
            line,
            record: &record,
        })?;
    }
}

/// Parse `city_id,sector,year,month,value,unit`. Row order is preserved.
pub fn parse_demand_csv<R: Read>(input: R) -> Result<Vec<DemandRecord>> {
    const TABLE: &str = "demand.csv";
    let mut rdr = reader(input);
    check_header(
        &mut rdr,
        TABLE,
        &["city_id", "sector", "year", "month", "value", "unit"],
    )?;
    let mut out = Vec::new();
    let mut seen: BTreeSet<(String, Sector, i32, u32)> = BTreeSet::new();
    for_each_row(&mut rdr, TABLE, |row| {
        let city_id = row.field(0, "city_id")?.to_string();
        let sector_raw = row.field(1, "sector")?;
        let sector = Sector::parse(sector_raw)
            .ok_or_else(|| row.err(format!("unknown sector {sector_raw:?}")))?;
        let year = row.i32(2, "year")?;
        let month = row.i32(3, "month")?;
        if !(1..=12).contains(&month) {
            return Err(row.err(format!("month {month} out of range 1-12")));
        }
        let month = month as u32;
        let value = row.f64(4, "value")?;
        if value < 0.0 {
            return Err(row.err(format!("negative value {value}")));
        }
        let unit = row.field(5, "unit")?.to_string();
        if unit != sector.expected_unit() {
            return Err(row.err(format!(
                "unit mismatch for sector {sector}: expected {}, got {unit:?}",
                sector.expected_unit()
            )));
        }
        if !seen.insert((city_id.clone(), sector, year, month)) {
            return Err(row.err(format!("duplicate ({city_id}, {sector}, {year}, {month})")));
        }
        out.push(DemandRecord {
            city_id,
            sector,
            year,
            month,
            value,
            unit,
        });
        Ok(())
    })?;
    Ok(out)
}

/// Parse `city_id,date,tdry_c,twet_c,tdew_c,rh_pct,wind_ms,precip_mm` with
/// ISO (`YYYY-MM-DD`) dates.
pub fn parse_climate_csv<R: Read>(input: R) -> Result<Vec<ClimateDailyRecord>> {
    const TABLE: &str = "climate.csv";
    let mut rdr = reader(input);
    check_header(
        &mut rdr,
        TABLE,
        &[
            "city_id", "date", "tdry_c", "twet_c", "tdew_c", "rh_pct", "wind_ms", "precip_mm",
        ],
    )?;
    let mut out = Vec::new();
    let mut seen: BTreeSet<(String, NaiveDate)> = BTreeSet::new();
    for_each_row(&mut rdr, TABLE, |row| {
        let city_id = row.field(0, "city_id")?.to_string();
        let date_raw = row.field(1, "date")?;
        let date = NaiveDate::parse_from_str(date_raw, "%Y-%m-%d")
            .map_err(|_| row.err(format!("date {date_raw:?} is not ISO YYYY-MM-DD")))?;
        let tdry_c = row.f64(2, "tdry_c")?;
        let twet_c = row.f64(3, "twet_c")?;
        let tdew_c = row.f64(4, "tdew_c")?;
        let rh_pct = row.f64(5, "rh_pct")?;
        let wind_ms = row.f64(6, "wind_ms")?;
        let precip_mm = row.f64(7, "precip_mm")?;
        if !(0.0..=100.0).contains(&rh_pct) {
            return Err(row.err(format!("rh {rh_pct} out of range [0,100]")));
        }
        if precip_mm < 0.0 {
            return Err(row.err(format!("negative precip {precip_mm}")));
        }
        if tdew_c > tdry_c {
            return Err(row.err(format!("tdew {tdew_c} exceeds tdry {tdry_c}")));
        }
        if !seen.insert((city_id.clone(), date)) {
            return Err(row.err(format!("duplicate ({city_id}, {date})")));
        }
        out.push(ClimateDailyRecord {
            city_id,
            date,
            tdry_c,
            twet_c,
            tdew_c,
            rh_pct,
            wind_ms,
            precip_mm,
        });
        Ok(())
    })?;
    Ok(out)
}

/// Registry parse result: unknown region codes warn instead of failing.
pub struct RegistryParse {
    pub cities: Vec<CityRecord>,
    pub warnings: Vec<String>,
}

/// Parse `city_id,name,state,lat,lon,region`.
pub fn parse_registry_csv<R: Read>(input: R) -> Result<RegistryParse> {
    const TABLE: &str = "cities.csv";
    let mut rdr = reader(input);
    check_header(
        &mut rdr,
        TABLE,
        &["city_id", "name", "state", "lat", "lon", "region"],
    )?;
    let mut cities = Vec::new();
    let mut warnings = Vec::new();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for_each_row(&mut rdr, TABLE, |row| {
        let city_id = row.field(0, "city_id")?.to_string();
        let name = row.field(1, "name")?.to_string();
        let state = row.field(2, "state")?.to_string();
        let lat = row.f64(3, "lat")?;
        let lon = row.f64(4, "lon")?;
        let region = row.field(5, "region")?.to_string();
        if !(-90.0..=90.0).contains(&lat) {
            return Err(row.err(format!("lat {lat} out of range [-90,90]")));
        }
        if !(-180.0..=180.0).contains(&lon) {
            return Err(row.err(format!("lon {lon} out of range [-180,180]")));
        }
        if !KNOWN_REGIONS.contains(&region.as_str()) {
            warnings.push(format!(
                "{TABLE} line {}: unknown region code {region:?} for {city_id}",
                row.line
            ));
        }
        if !seen.insert(city_id.clone()) {
            return Err(row.err(format!("duplicate city_id {city_id}")));
        }
        cities.push(CityRecord {
            city_id,
            name,
            state,
            lat,
            lon,
            region,
        });
        Ok(())
    })?;
    Ok(RegistryParse { cities, warnings })
}

/// Parse `city_id,sector,year,service_population`.
pub fn parse_population_csv<R: Read>(input: R) -> Result<Vec<PopulationRecord>> {
    const TABLE: &str = "population.csv";
    let mut rdr = reader(input);
    check_header(
        &mut rdr,
        TABLE,
        &["city_id", "sector", "year", "service_population"],
    )?;
    let mut out = Vec::new();
    let mut seen: BTreeSet<(String, Sector, i32)> = BTreeSet::new();
    for_each_row(&mut rdr, TABLE, |row| {
        let city_id = row.field(0, "city_id")?.to_string();
        let sector_raw = row.field(1, "sector")?;
        let sector = Sector::parse(sector_raw)
            .ok_or_else(|| row.err(format!("unknown sector {sector_raw:?}")))?;
        let year = row.i32(2, "year")?;
        let service_population = row.f64(3, "service_population")?;
        if service_population <= 0.0 {
            return Err(row.err(format!(
                "service_population must be positive, got {service_population}"
            )));
        }
        if !seen.insert((city_id.clone(), sector, year)) {
            return Err(row.err(format!("duplicate ({city_id}, {sector}, {year})")));
        }
        out.push(PopulationRecord {
            city_id,
            sector,
            year,
            service_population,
        });
        Ok(())
    })?;
    Ok(out)
}

/// Parse `target_city_id,scenario,analog_id,source`.
pub fn parse_analog_csv<R: Read>(input: R) -> Result<Vec<AnalogMapRecord>> {
    const TABLE: &str = "analogs.csv";
    let mut rdr = reader(input);
    check_header(
        &mut rdr,
        TABLE,
        &["target_city_id", "scenario", "analog_id", "source"],
    )?;
    let mut out = Vec::new();
    let mut seen: BTreeSet<(String, Scenario, AnalogSource)> = BTreeSet::new();
    for_each_row(&mut rdr, TABLE, |row| {
        let target_city_id = row.field(0, "target_city_id")?.to_string();
        let scen_raw = row.field(1, "scenario")?;
        let scenario = Scenario::parse(scen_raw)
            .ok_or_else(|| row.err(format!("unknown scenario {scen_raw:?}")))?;
        let analog_id = row.field(2, "analog_id")?.to_string();
        let source_raw = row.field(3, "source")?;
        let source = AnalogSource::parse(source_raw)
            .ok_or_else(|| row.err(format!("source must be ensemble or gcm:<name>, got {source_raw:?}")))?;
        if !seen.insert((target_city_id.clone(), scenario, source.clone())) {
            return Err(row.err(format!(
                "duplicate ({target_city_id}, {scenario}, {source})"
            )));
        }
        out.push(AnalogMapRecord {
            target_city_id,
            scenario,
            analog_id,
            source,
        });
        Ok(())
    })?;
    Ok(out)
}

/// Parse `city_id,ssp,year,population`. The ssp column accepts `SSP3`,
/// `ssp3` or `3`; anything outside 1..=5 is an error.
pub fn parse_ssp_csv<R: Read>(input: R) -> Result<Vec<SspRecord>> {
    const TABLE: &str = "ssp_population.csv";
    let mut rdr = reader(input);
    check_header(&mut rdr, TABLE, &["city_id", "ssp", "year", "population"])?;
    let mut out = Vec::new();
    let mut seen: BTreeSet<(String, u8, i32)> = BTreeSet::new();
    for_each_row(&mut rdr, TABLE, |row| {
        let city_id = row.field(0, "city_id")?.to_string();
        let ssp_raw = row.field(1, "ssp")?;
        let digits = ssp_raw
            .strip_prefix("SSP")
            .or_else(|| ssp_raw.strip_prefix("ssp"))
            .unwrap_or(ssp_raw);
        let ssp: u8 = digits
            .parse()
            .map_err(|_| row.err(format!("invalid ssp {ssp_raw:?}")))?;
        if !(1..=5).contains(&ssp) {
            return Err(row.err(format!("ssp out of range 1-5: {ssp_raw:?}")));
        }
        let year = row.i32(2, "year")?;
        let population = row.f64(3, "population")?;
        if population <= 0.0 {
            return Err(row.err(format!("population must be positive, got {population}")));
        }
        if !seen.insert((city_id.clone(), ssp, year)) {
            return Err(row.err(format!("duplicate ({city_id}, SSP{ssp}, {year})")));
        }
        out.push(SspRecord {
            city_id,
            ssp,
            year,
            population,
        });
        Ok(())
    })?;
    Ok(out)
}

/// Parse `city_id,scenario,<12 seasonal value columns>`.
pub fn parse_future_normals_csv<R: Read>(input: R) -> Result<Vec<FutureNormalsRecord>> {
    const TABLE: &str = "future_normals.csv";
    let mut rdr = reader(input);
    let mut expected = vec!["city_id", "scenario"];
    expected.extend(FUTURE_NORMALS_COLUMNS);
    check_header(&mut rdr, TABLE, &expected)?;
    let mut out = Vec::new();
    let mut seen: BTreeSet<(String, Scenario)> = BTreeSet::new();
    for_each_row(&mut rdr, TABLE, |row| {
        let city_id = row.field(0, "city_id")?.to_string();
        let scen_raw = row.field(1, "scenario")?;
        let scenario = Scenario::parse(scen_raw)
            .ok_or_else(|| row.err(format!("unknown scenario {scen_raw:?}")))?;
        let mut values = [0.0; 12];
        for (i, name) in FUTURE_NORMALS_COLUMNS.iter().enumerate() {
            values[i] = row.f64(2 + i, name)?;
        }
        if !seen.insert((city_id.clone(), scenario)) {
            return Err(row.err(format!("duplicate ({city_id}, {scenario})")));
        }
        out.push(FutureNormalsRecord {
            city_id,
            scenario,
            values,
        });
        Ok(())
    })?;
    Ok(out)
}

// --- writers -------------------------------------------------------------

fn wline<W: Write>(w: &mut W, line: &str) -> Result<()> {
    writeln!(w, "{line}").map_err(|e| Error::io("<writer>", e))
}

pub fn write_demand_csv<W: Write>(w: &mut W, records: &[DemandRecord]) -> Result<()> {
    wline(w, "city_id,sector,year,month,value,unit")?;
    for r in records {
        wline(
            w,
            &format!(
                "{},{},{},{},{},{}",
                r.city_id, r.sector, r.year, r.month, r.value, r.unit
            ),
        )?;
    }
    Ok(())
}

pub fn write_climate_csv<W: Write>(w: &mut W, records: &[ClimateDailyRecord]) -> Result<()> {
    wline(w, "city_id,date,tdry_c,twet_c,tdew_c,rh_pct,wind_ms,precip_mm")?;
    for r in records {
        wline(
            w,
            &format!(
                "{},{},{},{},{},{},{},{}",
                r.city_id,
                r.date.format("%Y-%m-%d"),
                r.tdry_c,
                r.twet_c,
                r.tdew_c,
                r.rh_pct,
                r.wind_ms,
                r.precip_mm
            ),
        )?;
    }
    Ok(())
}

pub fn write_registry_csv<W: Write>(w: &mut W, records: &[CityRecord]) -> Result<()> {
    wline(w, "city_id,name,state,lat,lon,region")?;
    for r in records {
        wline(
            w,
            &format!(
                "{},{},{},{},{},{}",
                r.city_id, r.name, r.state, r.lat, r.lon, r.region
            ),
        )?;
    }
    Ok(())
}

pub fn write_population_csv<W: Write>(w: &mut W, records: &[PopulationRecord]) -> Result<()> {
    wline(w, "city_id,sector,year,service_population")?;
    for r in records {
        wline(
            w,
            &format!(
                "{},{},{},{}",
                r.city_id, r.sector, r.year, r.service_population
            ),
        )?;
    }
    Ok(())
}

pub fn write_analog_csv<W: Write>(w: &mut W, records: &[AnalogMapRecord]) -> Result<()> {
    wline(w, "target_city_id,scenario,analog_id,source")?;
    for r in records {
        wline(
            w,
            &format!(
                "{},{},{},{}",
                r.target_city_id, r.scenario, r.analog_id, r.source
            ),
        )?;
    }
    Ok(())
}

pub fn write_ssp_csv<W: Write>(w: &mut W, records: &[SspRecord]) -> Result<()> {
    wline(w, "city_id,ssp,year,population")?;
    for r in records {
        wline(
            w,
            &format!("{},SSP{},{},{}", r.city_id, r.ssp, r.year, r.population),
        )?;
    }
    Ok(())
}

pub fn write_future_normals_csv<W: Write>(
    w: &mut W,
    records: &[FutureNormalsRecord],
) -> Result<()> {
    wline(
        w,
        &format!("city_id,scenario,{}", FUTURE_NORMALS_COLUMNS.join(",")),
    )?;
    for r in records {
        let values: Vec<String> = r.values.iter().map(|v| v.to_string()).collect();
        wline(
            w,
            &format!("{},{},{}", r.city_id, r.scenario, values.join(",")),
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demand_happy_path() {
        let csv = "city_id,sector,year,month,value,unit\nnyc,electricity,2010,7,350000,MWh\n";
        let recs = parse_demand_csv(csv.as_bytes()).unwrap();
        assert_eq!(recs.len(), 1);
        let r = &recs[0];
        assert_eq!(r.city_id, "nyc");
        assert_eq!(r.sector, Sector::Electricity);
        assert_eq!(r.year, 2010);
        assert_eq!(r.month, 7);
        assert_eq!(r.value, 350000.0);
    }

    #[test]
    fn demand_unit_mismatch() {
        let csv = "city_id,sector,year,month,value,unit\nnyc,water,2010,7,1.2e6,MWh\n";
        let err = parse_demand_csv(csv.as_bytes()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("unit mismatch"), "{msg}");
        assert!(msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn demand_duplicate_key() {
        let csv = "city_id,sector,year,month,value,unit\n\
                   nyc,electricity,2010,7,1,MWh\n\
                   nyc,electricity,2010,7,2,MWh\n";
        let err = parse_demand_csv(csv.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("duplicate (nyc, electricity, 2010, 7)"));
    }

    #[test]
    fn demand_preserves_row_order() {
        let csv = "city_id,sector,year,month,value,unit\n\
                   b,water,2010,8,2,m3\n\
                   a,water,2010,7,1,m3\n";
        let recs = parse_demand_csv(csv.as_bytes()).unwrap();
        assert_eq!(recs[0].city_id, "b");
        assert_eq!(recs[1].city_id, "a");
    }

    #[test]
    fn climate_happy_path() {
        let csv = "city_id,date,tdry_c,twet_c,tdew_c,rh_pct,wind_ms,precip_mm\n\
                   phx,2012-06-01,41.0,22.5,10.0,15.0,3.2,0.0\n";
        let recs = parse_climate_csv(csv.as_bytes()).unwrap();
        assert_eq!(recs[0].date, NaiveDate::from_ymd_opt(2012, 6, 1).unwrap());
        assert_eq!(recs[0].tdry_c, 41.0);
    }

    #[test]
    fn climate_rejects_us_date() {
        let csv = "city_id,date,tdry_c,twet_c,tdew_c,rh_pct,wind_ms,precip_mm\n\
                   phx,06/01/2012,41.0,22.5,10.0,15.0,3.2,0.0\n";
        let err = parse_climate_csv(csv.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("not ISO"));
    }

    #[test]
    fn climate_rejects_rh_out_of_range() {
        let csv = "city_id,date,tdry_c,twet_c,tdew_c,rh_pct,wind_ms,precip_mm\n\
                   phx,2012-06-01,41.0,22.5,10.0,115.0,3.2,0.0\n";
        let err = parse_climate_csv(csv.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("rh 115"));
    }

    #[test]
    fn climate_rejects_negative_precip() {
        let csv = "city_id,date,tdry_c,twet_c,tdew_c,rh_pct,wind_ms,precip_mm\n\
                   phx,2012-06-01,41.0,22.5,10.0,15.0,3.2,-1.0\n";
        assert!(parse_climate_csv(csv.as_bytes()).is_err());
    }

    #[test]
    fn registry_warns_on_unknown_region() {
        let csv = "city_id,name,state,lat,lon,region\n\
                   chi,Chicago,IL,41.88,-87.63,ohio_valley\n\
                   zzz,Nowhere,XX,10.0,10.0,zone_q\n";
        let parsed = parse_registry_csv(csv.as_bytes()).unwrap();
        assert_eq!(parsed.cities.len(), 2);
        assert_eq!(parsed.warnings.len(), 1);
        assert!(parsed.warnings[0].contains("zone_q"));
    }

    #[test]
    fn registry_rejects_bad_lat() {
        let csv = "city_id,name,state,lat,lon,region\nchi,Chicago,IL,91.0,-87.63,ohio_valley\n";
        assert!(parse_registry_csv(csv.as_bytes()).is_err());
    }

    #[test]
    fn ssp_accepts_prefixed_and_bare() {
        let csv = "city_id,ssp,year,population\nchi,SSP5,2080,6200000\nchi,3,2080,5000000\n";
        let recs = parse_ssp_csv(csv.as_bytes()).unwrap();
        assert_eq!(recs[0].ssp, 5);
        assert_eq!(recs[1].ssp, 3);
    }

    #[test]
    fn ssp_rejects_out_of_range() {
        let csv = "city_id,ssp,year,population\nchi,SSP7,2080,6200000\n";
        let err = parse_ssp_csv(csv.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("out of range"));
    }

    #[test]
    fn analog_row_parses() {
        let csv = "target_city_id,scenario,analog_id,source\nnyc,rcp85,jonesboro_ar,ensemble\n";
        let recs = parse_analog_csv(csv.as_bytes()).unwrap();
        assert_eq!(recs[0].analog_id, "jonesboro_ar");
        assert_eq!(recs[0].scenario, Scenario::Rcp85);
        assert_eq!(recs[0].source, AnalogSource::Ensemble);
    }

    #[test]
    fn analog_gcm_source() {
        let csv = "target_city_id,scenario,analog_id,source\nnyc,rcp45,x,gcm:abc\n";
        let recs = parse_analog_csv(csv.as_bytes()).unwrap();
        assert_eq!(recs[0].source, AnalogSource::Gcm("abc".to_string()));
    }

    #[test]
    fn comments_and_whitespace_are_tolerated() {
        let csv = "city_id,sector,year,month,value,unit\n\
                   # a comment line\n\
                   nyc , electricity , 2010 , 7 , 5.5 , MWh\n";
        let recs = parse_demand_csv(csv.as_bytes()).unwrap();
        assert_eq!(recs[0].city_id, "nyc");
        assert_eq!(recs[0].value, 5.5);
    }

    #[test]
    fn demand_round_trip_is_exact() {
        let csv = "city_id,sector,year,month,value,unit\n\
                   nyc,electricity,2010,7,350000.125,MWh\n\
                   nyc,water,2010,7,1200000,m3\n";
        let recs = parse_demand_csv(csv.as_bytes()).unwrap();
        let mut buf = Vec::new();
        write_demand_csv(&mut buf, &recs).unwrap();
        let again = parse_demand_csv(buf.as_slice()).unwrap();
        assert_eq!(recs.len(), again.len());
        for (a, b) in recs.iter().zip(again.iter()) {
            assert_eq!(a.city_id, b.city_id);
            assert_eq!(a.value, b.value);
        }
    }
}
