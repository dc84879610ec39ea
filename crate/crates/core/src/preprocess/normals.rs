//! 12-variable seasonal climate normals with interannual variability.
//!
//! Per climatological season (DJF, MAM, JJA, SON) and year this computes an
//! annual seasonal minimum temperature, maximum temperature, and total
//! precipitation, then reduces across years to a mean vector and an
//! interannual standard deviation vector. The seasonal tmin/tmax are proxied
//! from daily dry-bulb values (mean over the season's months of each month's
//! daily minimum / maximum) because the daily schema carries a single tdry
//! value per day.

use std::collections::BTreeMap;
use std::io::Write;

use chrono::Datelike;
use serde::{Deserialize, Serialize};

use super::{interpolate_gaps, PreprocessOptions};
use crate::error::{Error, Result};
use crate::ingest::ClimateDailyRecord;

/// Season labels with their calendar months. December belongs to the DJF of
/// the following year: DJF(y) = Dec(y-1), Jan(y), Feb(y).
pub const SEASONS: [(&str, [u32; 3]); 4] = [
    ("djf", [12, 1, 2]),
    ("mam", [3, 4, 5]),
    ("jja", [6, 7, 8]),
    ("son", [9, 10, 11]),
];

/// Column names of the 12-vector, season-major.
pub fn normals_columns() -> [String; 12] {
    let mut cols: Vec<String> = Vec::with_capacity(12);
    for (season, _) in SEASONS {
        for measure in ["tmin_c", "tmax_c", "prcp_mm"] {
            cols.push(format!("{season}_{measure}"));
        }
    }
    cols.try_into().expect("12 columns")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeasonalNormals {
    pub location_id: String,
    /// Label of the averaging window, e.g. `2007-2018`.
    pub epoch: String,
    /// Across-year means, season-major (DJF, MAM, JJA, SON) x (tmin, tmax, prcp).
    pub mean12: [f64; 12],
    /// Across-year sample standard deviations (n-1), floored positive.
    pub icv12: [f64; 12],
    /// Minimum number of complete season-years entering any component.
    pub n_years: usize,
}

/// Sample standard deviation with the n-1 denominator.
pub fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (ss / (n - 1.0)).sqrt()
}

struct MonthStat {
    tmin: f64,
    tmax: f64,
    prcp: f64,
    complete: bool,
}

/// Compute seasonal normals for one location over an inclusive year range.
///
/// A season-year enters the statistics only when all three of its months are
/// complete (>= `min_day_fraction` of days after gap filling). Requires at
/// least three usable years for every season.
pub fn seasonal_normals(
    daily: &[ClimateDailyRecord],
    location_id: &str,
    start_year: i32,
    end_year: i32,
    opts: &PreprocessOptions,
) -> Result<SeasonalNormals> {
    let n_years_requested = (end_year - start_year + 1).max(0) as usize;
    if n_years_requested < 3 {
        return Err(Error::InsufficientYears {
            location: location_id.to_string(),
            have: n_years_requested,
            need: 3,
        });
    }
    let filled = interpolate_gaps(daily, opts.max_gap_days);

    // Per-month stats: min/max of daily tdry, precip total, completeness.
    let mut by_month: BTreeMap<(i32, u32), MonthStat> = BTreeMap::new();
    {
        let mut counts: BTreeMap<(i32, u32), usize> = BTreeMap::new();
        for d in filled.iter().filter(|d| d.city_id == location_id) {
            let key = (d.date.year(), d.date.month());
            let stat = by_month.entry(key).or_insert(MonthStat {
                tmin: f64::INFINITY,
                tmax: f64::NEG_INFINITY,
                prcp: 0.0,
                complete: false,
            });
            stat.tmin = stat.tmin.min(d.tdry_c);
            stat.tmax = stat.tmax.max(d.tdry_c);
            stat.prcp += d.precip_mm;
            *counts.entry(key).or_insert(0) += 1;
        }
        for (key, stat) in by_month.iter_mut() {
            let total = super::features::days_in_month(key.0, key.1) as f64;
            stat.complete = counts[key] as f64 >= opts.min_day_fraction * total;
        }
    }

    let mut mean12 = [0.0; 12];
    let mut icv12 = [0.0; 12];
    let mut n_years = usize::MAX;

    for (s, (_, months)) in SEASONS.iter().enumerate() {
        let mut tmins = Vec::new();
        let mut tmaxs = Vec::new();
        let mut prcps = Vec::new();
        for year in start_year..=end_year {
            let mut stats = Vec::with_capacity(3);
            let mut ok = true;
            for &month in months {
                // December counts toward the following year's DJF.
                let src_year = if month == 12 { year - 1 } else { year };
                match by_month.get(&(src_year, month)) {
                    Some(stat) if stat.complete => stats.push(stat),
                    _ => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                continue;
            }
            let k = stats.len() as f64;
            tmins.push(stats.iter().map(|s| s.tmin).sum::<f64>() / k);
            tmaxs.push(stats.iter().map(|s| s.tmax).sum::<f64>() / k);
            prcps.push(stats.iter().map(|s| s.prcp).sum::<f64>());
        }
        if tmins.len() < 3 {
            return Err(Error::InsufficientYears {
                location: location_id.to_string(),
                have: tmins.len(),
                need: 3,
            });
        }
        n_years = n_years.min(tmins.len());
        for (offset, values) in [(0, &tmins), (1, &tmaxs), (2, &prcps)] {
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            mean12[3 * s + offset] = mean;
            icv12[3 * s + offset] = sample_std(values).max(opts.icv_floor);
        }
    }

    Ok(SeasonalNormals {
        location_id: location_id.to_string(),
        epoch: format!("{start_year}-{end_year}"),
        mean12,
        icv12,
        n_years,
    })
}

/// Debug dump (`normals_<loc>.csv` layout): 12 means, 12 icv values, n_years.
pub fn write_normals_csv<W: Write>(w: &mut W, normals: &[SeasonalNormals]) -> Result<()> {
    let cols = normals_columns();
    let icv_cols: Vec<String> = cols.iter().map(|c| format!("icv_{c}")).collect();
    writeln!(
        w,
        "location_id,epoch,{},{},n_years",
        cols.join(","),
        icv_cols.join(",")
    )
    .map_err(|e| Error::io("<writer>", e))?;
    for n in normals {
        let means: Vec<String> = n.mean12.iter().map(|v| v.to_string()).collect();
        let icvs: Vec<String> = n.icv12.iter().map(|v| v.to_string()).collect();
        writeln!(
            w,
            "{},{},{},{},{}",
            n.location_id,
            n.epoch,
            means.join(","),
            icvs.join(","),
            n.n_years
        )
        .map_err(|e| Error::io("<writer>", e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn day(date: NaiveDate, tdry: f64, precip: f64) -> ClimateDailyRecord {
        ClimateDailyRecord {
            city_id: "loc".to_string(),
            date,
            tdry_c: tdry,
            twet_c: tdry - 5.0,
            tdew_c: tdry - 10.0,
            rh_pct: 50.0,
            wind_ms: 3.0,
            precip_mm: precip,
        }
    }

    /// Full daily coverage from Dec 1 of (start-1) through end year.
    fn full_series(
        start: i32,
        end: i32,
        tdry: impl Fn(NaiveDate) -> f64,
        precip: impl Fn(NaiveDate) -> f64,
    ) -> Vec<ClimateDailyRecord> {
        let mut out = Vec::new();
        let mut d = NaiveDate::from_ymd_opt(start - 1, 12, 1).unwrap();
        let last = NaiveDate::from_ymd_opt(end, 12, 31).unwrap();
        while d <= last {
            out.push(day(d, tdry(d), precip(d)));
            d = d.succ_opt().unwrap();
        }
        out
    }

    #[test]
    fn constant_climate_has_floored_icv() {
        let days = full_series(2010, 2013, |_| 15.0, |_| 1.0);
        let opts = PreprocessOptions::default();
        let n = seasonal_normals(&days, "loc", 2010, 2013, &opts).unwrap();
        for s in 0..4 {
            assert_eq!(n.mean12[3 * s], 15.0); // tmin
            assert_eq!(n.mean12[3 * s + 1], 15.0); // tmax
            // Temperature has zero across-year variance, so its icv sits on
            // the floor. Seasonal precip totals still vary with the leap day.
            assert_eq!(n.icv12[3 * s], opts.icv_floor);
            assert_eq!(n.icv12[3 * s + 1], opts.icv_floor);
            assert!(n.icv12[3 * s + 2] >= opts.icv_floor);
        }
    }

    #[test]
    fn jja_precip_mean_across_years() {
        // Year-dependent daily precip in JJA only; 92 JJA days.
        let days = full_series(
            2010,
            2013,
            |_| 15.0,
            |d| {
                if (6..=8).contains(&d.month()) {
                    (d.year() - 2009) as f64 // 1,2,3,4 mm/day
                } else {
                    0.0
                }
            },
        );
        let n = seasonal_normals(&days, "loc", 2010, 2013, &PreprocessOptions::default()).unwrap();
        let jja_prcp = n.mean12[3 * 2 + 2];
        let expected = 92.0 * (1.0 + 2.0 + 3.0 + 4.0) / 4.0;
        assert!((jja_prcp - expected).abs() < 1e-9, "{jja_prcp} vs {expected}");
    }

    #[test]
    fn sample_std_two_values() {
        // Frozen oracle for the across-year std: sqrt(((100-150)^2+(200-150)^2)/1).
        let s = sample_std(&[100.0, 200.0]);
        assert!((s - 70.71067811865476).abs() < 1e-9);
    }

    #[test]
    fn december_belongs_to_next_djf() {
        // Make December 2009 distinctly warm; all other months 0.
        let days = full_series(
            2010,
            2013,
            |d| {
                if d.year() == 2009 && d.month() == 12 {
                    30.0
                } else {
                    0.0
                }
            },
            |_| 0.0,
        );
        let n = seasonal_normals(&days, "loc", 2010, 2013, &PreprocessOptions::default()).unwrap();
        // DJF tmax mean: 2010 season includes Dec 2009 (30), Jan+Feb 2010 (0)
        // -> 10; other three years all-zero -> mean (10+0+0+0)/4 = 2.5.
        let djf_tmax = n.mean12[1];
        assert!((djf_tmax - 2.5).abs() < 1e-12, "{djf_tmax}");
    }

    #[test]
    fn temperature_shift_moves_means_not_icv() {
        let base = full_series(2010, 2014, |d| d.ordinal() as f64 * 0.01, |_| 2.0);
        let shifted: Vec<ClimateDailyRecord> = base
            .iter()
            .map(|r| {
                let mut r = r.clone();
                r.tdry_c += 2.5;
                r
            })
            .collect();
        let opts = PreprocessOptions::default();
        let a = seasonal_normals(&base, "loc", 2010, 2014, &opts).unwrap();
        let b = seasonal_normals(&shifted, "loc", 2010, 2014, &opts).unwrap();
        for s in 0..4 {
            for offset in [0, 1] {
                let i = 3 * s + offset;
                assert!((b.mean12[i] - a.mean12[i] - 2.5).abs() < 1e-9);
                assert!((b.icv12[i] - a.icv12[i]).abs() < 1e-9);
            }
            let i = 3 * s + 2; // precip untouched
            assert!((b.mean12[i] - a.mean12[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn too_few_years_errors() {
        let days = full_series(2010, 2011, |_| 10.0, |_| 0.0);
        let err = seasonal_normals(&days, "loc", 2010, 2011, &PreprocessOptions::default());
        assert!(matches!(err, Err(Error::InsufficientYears { .. })));
    }
}
