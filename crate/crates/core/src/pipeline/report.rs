//! Report files: fixed-schema CSVs plus a JSON summary of cross-city medians.
//!
//! Rows are sorted by their key columns before writing, so reruns on the same
//! results produce byte-identical files.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::{MetricsReport, ProjectionResult, TotalsResult};
use crate::analog::AnalogResult;
use crate::error::{Error, Result};
use crate::ingest::Scenario;
use crate::mvtb::InfluenceMatrix;

/// Everything `write_reports` emits in one call.
#[derive(Debug, Clone, Default)]
pub struct RunResults {
    pub metrics: Vec<MetricsReport>,
    pub projections: Vec<ProjectionResult>,
    pub totals: Vec<TotalsResult>,
    pub influence: Vec<(String, InfluenceMatrix)>,
    pub analogs: Vec<(String, Scenario, Vec<AnalogResult>)>,
}

fn create(path: &Path) -> Result<std::fs::File> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent.display().to_string(), e))?;
    }
    std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))
}

fn wline<W: Write>(w: &mut W, line: &str) -> Result<()> {
    writeln!(w, "{line}").map_err(|e| Error::io("<writer>", e))
}

/// `metrics.csv`: per-fold rows plus a `pooled` row per outcome.
pub fn write_metrics_csv<W: Write>(w: &mut W, metrics: &[MetricsReport]) -> Result<()> {
    let mut sorted: Vec<&MetricsReport> = metrics.iter().collect();
    sorted.sort_by(|a, b| a.city_id.cmp(&b.city_id));
    wline(w, "city_id,outcome,fold,r2,nrmse")?;
    for report in sorted {
        for outcome in &report.outcomes {
            for fm in &outcome.per_fold {
                wline(
                    w,
                    &format!(
                        "{},{},{},{:.6},{:.6}",
                        report.city_id, outcome.outcome, fm.fold, fm.r2, fm.nrmse
                    ),
                )?;
            }
            wline(
                w,
                &format!(
                    "{},{},pooled,{:.6},{:.6}",
                    report.city_id, outcome.outcome, outcome.pooled_r2, outcome.pooled_nrmse
                ),
            )?;
        }
    }
    Ok(())
}

/// `projections.csv`: one row per city, scenario, outcome.
pub fn write_projections_csv<W: Write>(w: &mut W, projections: &[ProjectionResult]) -> Result<()> {
    let mut sorted: Vec<&ProjectionResult> = projections.iter().collect();
    sorted.sort_by(|a, b| {
        a.city_id
            .cmp(&b.city_id)
            .then_with(|| a.scenario.cmp(&b.scenario))
    });
    wline(w, "city_id,scenario,outcome,baseline_mean,projected_mean,pct_change")?;
    for proj in sorted {
        for o in &proj.outcomes {
            wline(
                w,
                &format!(
                    "{},{},{},{:.6},{:.6},{:.4}",
                    proj.city_id,
                    proj.scenario,
                    o.outcome,
                    o.baseline_mean,
                    o.projected_mean,
                    o.pct_change
                ),
            )?;
        }
    }
    Ok(())
}

/// `totals.csv`: SSP-scaled electricity totals with equivalences.
pub fn write_totals_csv<W: Write>(w: &mut W, totals: &[TotalsResult]) -> Result<()> {
    let mut sorted: Vec<&TotalsResult> = totals.iter().collect();
    sorted.sort_by(|a, b| {
        a.city_id
            .cmp(&b.city_id)
            .then_with(|| a.ssp.cmp(&b.ssp))
            .then_with(|| a.scenario.cmp(&b.scenario))
    });
    wline(
        w,
        "city_id,ssp,scenario,current_total_mwh,projected_total_mwh,delta_mwh,co2e_t,turbines,forest_km2,dam_days",
    )?;
    for t in sorted {
        wline(
            w,
            &format!(
                "{},{},{},{:.3},{:.3},{:.3},{:.3},{},{:.3},{:.3}",
                t.city_id,
                t.ssp,
                t.scenario,
                t.current_total_mwh,
                t.projected_total_mwh,
                t.delta_mwh,
                t.co2e_t,
                t.turbines,
                t.forest_km2,
                t.dam_days
            ),
        )?;
    }
    Ok(())
}

/// `influence.csv`: relative influence per city, feature and outcome.
pub fn write_influence_csv<W: Write>(
    w: &mut W,
    influence: &[(String, InfluenceMatrix)],
) -> Result<()> {
    let mut sorted: Vec<&(String, InfluenceMatrix)> = influence.iter().collect();
    sorted.sort_by(|a, b| a.0.cmp(&b.0));
    wline(w, "city_id,feature,outcome,relative_influence_pct")?;
    for (city_id, matrix) in sorted {
        for (k, outcome) in matrix.outcomes.iter().enumerate() {
            for (f, feature) in matrix.features.iter().enumerate() {
                wline(
                    w,
                    &format!("{city_id},{feature},{outcome},{:.6}", matrix.pct[k][f]),
                )?;
            }
        }
    }
    Ok(())
}

/// `analogs_ranked.csv`: the ranked candidate list per target and scenario.
pub fn write_analogs_ranked_csv<W: Write>(
    w: &mut W,
    rankings: &[(String, Scenario, Vec<AnalogResult>)],
) -> Result<()> {
    let mut sorted: Vec<&(String, Scenario, Vec<AnalogResult>)> = rankings.iter().collect();
    sorted.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    wline(w, "target_city_id,scenario,candidate_id,distance,sigma,saturated,rank")?;
    for (target, scenario, results) in sorted {
        for r in results {
            wline(
                w,
                &format!(
                    "{target},{scenario},{},{:.6},{:.6},{},{}",
                    r.candidate_id, r.distance_d, r.sigma, r.saturated, r.rank
                ),
            )?;
        }
    }
    Ok(())
}

/// Median with the even-count convention (mean of the two middle values).
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    Some(if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryJson {
    pub n_cities: usize,
    /// Median pooled metrics across cities, per outcome.
    pub median_pooled_r2: BTreeMap<String, f64>,
    pub median_pooled_nrmse: BTreeMap<String, f64>,
    /// Median percent change across cities, per scenario and outcome.
    pub median_pct_change: BTreeMap<String, BTreeMap<String, f64>>,
}

/// Cross-city medians mirroring the median-of-cities style of reporting.
pub fn summarize(metrics: &[MetricsReport], projections: &[ProjectionResult]) -> SummaryJson {
    let mut r2_by_outcome: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut nrmse_by_outcome: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for report in metrics {
        for outcome in &report.outcomes {
            r2_by_outcome
                .entry(outcome.outcome.clone())
                .or_default()
                .push(outcome.pooled_r2);
            nrmse_by_outcome
                .entry(outcome.outcome.clone())
                .or_default()
                .push(outcome.pooled_nrmse);
        }
    }
    let mut pct: BTreeMap<String, BTreeMap<String, Vec<f64>>> = BTreeMap::new();
    for proj in projections {
        for o in &proj.outcomes {
            pct.entry(proj.scenario.to_string())
                .or_default()
                .entry(o.outcome.clone())
                .or_default()
                .push(o.pct_change);
        }
    }
    SummaryJson {
        n_cities: metrics.len(),
        median_pooled_r2: r2_by_outcome
            .into_iter()
            .map(|(k, v)| (k, median(&v).unwrap_or(f64::NAN)))
            .collect(),
        median_pooled_nrmse: nrmse_by_outcome
            .into_iter()
            .map(|(k, v)| (k, median(&v).unwrap_or(f64::NAN)))
            .collect(),
        median_pct_change: pct
            .into_iter()
            .map(|(scenario, by_outcome)| {
                (
                    scenario,
                    by_outcome
                        .into_iter()
                        .map(|(k, v)| (k, median(&v).unwrap_or(f64::NAN)))
                        .collect(),
                )
            })
            .collect(),
    }
}

/// Emit the full report set into `out_dir`. Empty results are an error.
pub fn write_reports(results: &RunResults, out_dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    if results.metrics.is_empty()
        && results.projections.is_empty()
        && results.totals.is_empty()
        && results.influence.is_empty()
        && results.analogs.is_empty()
    {
        return Err(Error::EmptyResults("no results to write".to_string()));
    }
    let mut written = Vec::new();
    let mut emit = |name: &str, body: &dyn Fn(&mut std::fs::File) -> Result<()>| -> Result<()> {
        let path = out_dir.join(name);
        let mut file = create(&path)?;
        body(&mut file)?;
        written.push(path);
        Ok(())
    };
    emit("metrics.csv", &|w| write_metrics_csv(w, &results.metrics))?;
    emit("projections.csv", &|w| {
        write_projections_csv(w, &results.projections)
    })?;
    emit("totals.csv", &|w| write_totals_csv(w, &results.totals))?;
    emit("influence.csv", &|w| {
        write_influence_csv(w, &results.influence)
    })?;
    emit("analogs_ranked.csv", &|w| {
        write_analogs_ranked_csv(w, &results.analogs)
    })?;
    let summary = summarize(&results.metrics, &results.projections);
    emit("summary.json", &|w| {
        let text = serde_json::to_string_pretty(&summary)
            .map_err(|e| Error::ModelFormat(e.to_string()))?;
        writeln!(w, "{text}").map_err(|e| Error::io("summary.json", e))
    })?;
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{FoldMetric, OutcomeMetrics, OutcomeProjection};

    fn report(city: &str, r2w: f64, r2e: f64) -> MetricsReport {
        MetricsReport {
            city_id: city.to_string(),
            outcomes: vec![
                OutcomeMetrics {
                    outcome: "water".to_string(),
                    per_fold: vec![FoldMetric {
                        fold: 0,
                        r2: r2w,
                        nrmse: 0.1,
                    }],
                    pooled_r2: r2w,
                    pooled_nrmse: 0.1,
                },
                OutcomeMetrics {
                    outcome: "electricity".to_string(),
                    per_fold: vec![],
                    pooled_r2: r2e,
                    pooled_nrmse: 0.2,
                },
            ],
        }
    }

    #[test]
    fn median_odd_and_even() {
        assert_eq!(median(&[3.0, 1.0, 2.0]).unwrap(), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]).unwrap(), 2.5);
        assert!(median(&[]).is_none());
    }

    #[test]
    fn summary_medians_match_sorted_recompute() {
        let metrics = vec![
            report("a", 0.9, 0.5),
            report("b", 0.7, 0.6),
            report("c", 0.8, 0.4),
        ];
        let summary = summarize(&metrics, &[]);
        // Oracle: sort and take the middle element.
        let mut water: Vec<f64> = vec![0.9, 0.7, 0.8];
        water.sort_by(f64::total_cmp);
        assert_eq!(summary.median_pooled_r2["water"], water[1]);
        let mut elec: Vec<f64> = vec![0.5, 0.6, 0.4];
        elec.sort_by(f64::total_cmp);
        assert_eq!(summary.median_pooled_r2["electricity"], elec[1]);
    }

    #[test]
    fn projections_csv_row_count() {
        let projections: Vec<ProjectionResult> = ["a", "b"]
            .iter()
            .flat_map(|city| {
                Scenario::ALL.iter().map(move |&scenario| ProjectionResult {
                    city_id: city.to_string(),
                    scenario,
                    analog_id: "x".to_string(),
                    outcomes: vec![
                        OutcomeProjection {
                            outcome: "water".to_string(),
                            baseline_mean: 1.0,
                            projected_mean: 1.1,
                            pct_change: 10.0,
                        },
                        OutcomeProjection {
                            outcome: "electricity".to_string(),
                            baseline_mean: 2.0,
                            projected_mean: 2.2,
                            pct_change: 10.0,
                        },
                    ],
                })
            })
            .collect();
        let mut buf = Vec::new();
        write_projections_csv(&mut buf, &projections).unwrap();
        let text = String::from_utf8(buf).unwrap();
        // header + 2 cities x 2 scenarios x 2 outcomes
        assert_eq!(text.lines().count(), 1 + 8);
    }

    #[test]
    fn empty_results_error() {
        let dir = tempfile::tempdir().unwrap();
        let err = write_reports(&RunResults::default(), dir.path());
        assert!(matches!(err, Err(Error::EmptyResults(_))));
    }

    #[test]
    fn write_reports_emits_all_files() {
        let dir = tempfile::tempdir().unwrap();
        let results = RunResults {
            metrics: vec![report("a", 0.9, 0.8)],
            ..RunResults::default()
        };
        let written = write_reports(&results, dir.path()).unwrap();
        assert_eq!(written.len(), 6);
        for name in [
            "metrics.csv",
            "projections.csv",
            "totals.csv",
            "influence.csv",
            "analogs_ranked.csv",
            "summary.json",
        ] {
            assert!(dir.path().join(name).exists(), "{name}");
        }
    }
}
