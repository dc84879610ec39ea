//! Workflow orchestration: cross-validated metrics, regional variable
//! selection, analog-substitution projections, SSP-scaled totals, emissions
//! equivalences, and report writing.

pub mod prepare;
pub mod report;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Scenario;
use crate::mvtb::{fit, BoostedNexusModel, Hyperparams};
use crate::preprocess::{FeatureBlock, TrainingTable};
use crate::rng::{derive_seed, shuffled_indices, SplitMix64};

pub use crate::preprocess::OUTCOME_NAMES;

/// Assign each of `n` rows to one of `k` folds via a seeded shuffle. Fold
/// sizes differ by at most one; the first `n % k` folds take the extra row.
pub fn kfold_splits(n: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k == 0 || n < k {
        return Err(Error::TooFewForFolds { n, k });
    }
    let mut rng = SplitMix64::new(seed);
    let perm = shuffled_indices(n, &mut rng);
    let base = n / k;
    let extra = n % k;
    let mut assignment = vec![0usize; n];
    let mut cursor = 0;
    for fold in 0..k {
        let size = base + usize::from(fold < extra);
        for &row in &perm[cursor..cursor + size] {
            assignment[row] = fold;
        }
        cursor += size;
    }
    Ok(assignment)
}

/// Coefficient of determination `1 - SS_res / SS_tot`.
pub fn r2(y: &[f64], yhat: &[f64]) -> Result<f64> {
    assert_eq!(y.len(), yhat.len());
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let ss_tot: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    if ss_tot <= 0.0 {
        return Err(Error::ZeroVarianceObservations);
    }
    let ss_res: f64 = y
        .iter()
        .zip(yhat)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Root mean squared error normalized by the observation mean.
pub fn nrmse(y: &[f64], yhat: &[f64]) -> Result<f64> {
    assert_eq!(y.len(), yhat.len());
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    if mean <= 0.0 {
        return Err(Error::NonPositiveMean { mean });
    }
    let mse: f64 = y
        .iter()
        .zip(yhat)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n;
    Ok(mse.sqrt() / mean)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoldMetric {
    pub fold: usize,
    pub r2: f64,
    pub nrmse: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutcomeMetrics {
    pub outcome: String,
    pub per_fold: Vec<FoldMetric>,
    /// Metrics on the pooled out-of-fold predictions.
    pub pooled_r2: f64,
    pub pooled_nrmse: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub city_id: String,
    pub outcomes: Vec<OutcomeMetrics>,
}

/// Randomized k-fold cross-validation for one city. Each fold trains on the
/// complement and predicts the held-out rows; pooled metrics use the
/// out-of-fold predictions, which cover every row exactly once.
pub fn cross_validate_city(
    table: &TrainingTable,
    hyper: &Hyperparams,
    k: usize,
    seed: u64,
) -> Result<MetricsReport> {
    let n = table.n_rows();
    if n < 2 * k {
        return Err(Error::TooFewRows {
            city_id: table.city_id.clone(),
            have: n,
            need: 2 * k,
        });
    }
    let assignment = kfold_splits(n, k, seed)?;
    let q = 2;
    let mut oof = vec![vec![0.0; n]; q];
    let mut per_fold: Vec<Vec<FoldMetric>> = vec![Vec::new(); q];

    for fold in 0..k {
        let train_idx: Vec<usize> = (0..n).filter(|&i| assignment[i] != fold).collect();
        let test_idx: Vec<usize> = (0..n).filter(|&i| assignment[i] == fold).collect();
        let train = table.subset(&train_idx);
        let ys: Vec<Vec<f64>> = (0..q).map(|kk| train.outcome_column(kk)).collect();
        let outcome_names: Vec<String> = OUTCOME_NAMES.iter().map(|s| s.to_string()).collect();
        let fold_hyper = hyper.with_seed(derive_seed(hyper.seed, fold as u64));
        let model = fit(&table.feature_names, &train.rows, &ys, &outcome_names, &fold_hyper)?;
        let test_rows: Vec<Vec<f64>> = test_idx.iter().map(|&i| table.rows[i].clone()).collect();
        let preds = model.predict(&table.feature_names, &test_rows)?;
        for kk in 0..q {
            let y_test: Vec<f64> = test_idx.iter().map(|&i| table.outcomes[i][kk]).collect();
            for (pos, &i) in test_idx.iter().enumerate() {
                oof[kk][i] = preds[kk][pos];
            }
            per_fold[kk].push(FoldMetric {
                fold,
                r2: r2(&y_test, &preds[kk])?,
                nrmse: nrmse(&y_test, &preds[kk])?,
            });
        }
    }

    let mut outcomes = Vec::with_capacity(q);
    for kk in 0..q {
        let y: Vec<f64> = table.outcome_column(kk);
        outcomes.push(OutcomeMetrics {
            outcome: OUTCOME_NAMES[kk].to_string(),
            per_fold: std::mem::take(&mut per_fold[kk]),
            pooled_r2: r2(&y, &oof[kk])?,
            pooled_nrmse: nrmse(&y, &oof[kk])?,
        });
    }
    Ok(MetricsReport {
        city_id: table.city_id.clone(),
        outcomes,
    })
}

/// Variable-selection tunables: keep the smallest influence-ranked prefix
/// reaching the cumulative threshold, clamped into the size window.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub cumulative_threshold: f64,
    pub min_features: usize,
    pub max_features: usize,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            cumulative_threshold: 0.90,
            min_features: 4,
            max_features: 6,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionalVariableSet {
    pub region: String,
    /// Selected feature names in descending influence order.
    pub features: Vec<String>,
}

/// Pool every city table in a region, fit one joint model, and select the
/// features that carry the region's influence mass.
pub fn select_regional_variables(
    region: &str,
    tables: &[&TrainingTable],
    hyper: &Hyperparams,
    cfg: &SelectionConfig,
) -> Result<RegionalVariableSet> {
    if tables.is_empty() {
        return Err(Error::NoUsableCity {
            region: region.to_string(),
        });
    }
    let feature_names = tables[0].feature_names.clone();
    let mut rows = Vec::new();
    let mut ys: Vec<Vec<f64>> = vec![Vec::new(); 2];
    for table in tables {
        assert_eq!(
            table.feature_names, feature_names,
            "tables in one region must share the feature layout"
        );
        rows.extend(table.rows.iter().cloned());
        for kk in 0..2 {
            ys[kk].extend(table.outcomes.iter().map(|o| o[kk]));
        }
    }
    let outcome_names: Vec<String> = OUTCOME_NAMES.iter().map(|s| s.to_string()).collect();
    let region_seed = derive_seed(
        hyper.seed,
        region.bytes().fold(0u64, |acc, b| {
            acc.wrapping_mul(31).wrapping_add(u64::from(b))
        }),
    );
    let model = fit(
        &feature_names,
        &rows,
        &ys,
        &outcome_names,
        &hyper.with_seed(region_seed),
    )?;
    let mut ranked = model.relative_influence().mean_across_outcomes();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

    let target = cfg.cumulative_threshold * 100.0;
    let mut cumulative = 0.0;
    let mut count = ranked.len();
    for (i, (_, influence)) in ranked.iter().enumerate() {
        cumulative += influence;
        if cumulative >= target {
            count = i + 1;
            break;
        }
    }
    let count = count
        .clamp(cfg.min_features, cfg.max_features)
        .min(ranked.len());
    Ok(RegionalVariableSet {
        region: region.to_string(),
        features: ranked.into_iter().take(count).map(|(name, _)| name).collect(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutcomeProjection {
    pub outcome: String,
    /// Mean predicted summer per-capita demand under observed climate.
    pub baseline_mean: f64,
    /// Same model driven by the analog location's climate.
    pub projected_mean: f64,
    pub pct_change: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProjectionResult {
    pub city_id: String,
    pub scenario: Scenario,
    pub analog_id: String,
    pub outcomes: Vec<OutcomeProjection>,
}

/// Predict under observed and analog climate over the same (year, month)
/// grid and report the percent change of the mean prediction. The analog
/// block must cover every observed key.
pub fn project_with_analog(
    model: &BoostedNexusModel,
    city_id: &str,
    scenario: Scenario,
    analog_id: &str,
    observed: &FeatureBlock,
    analog: &FeatureBlock,
) -> Result<ProjectionResult> {
    let mut aligned_rows = Vec::with_capacity(observed.keys.len());
    for key in &observed.keys {
        let pos = analog.keys.iter().position(|k| k == key).ok_or({
            Error::MissingAnalogCoverage {
                analog_id: analog_id.to_string(),
                year: key.0,
                month: key.1,
            }
        })?;
        aligned_rows.push(analog.rows[pos].clone());
    }
    let baseline = model.predict(&observed.feature_names, &observed.rows)?;
    let projected = model.predict(&analog.feature_names, &aligned_rows)?;

    let mut outcomes = Vec::with_capacity(model.n_outcomes());
    for (k, name) in model.outcome_names().into_iter().enumerate() {
        let baseline_mean = baseline[k].iter().sum::<f64>() / baseline[k].len() as f64;
        let projected_mean = projected[k].iter().sum::<f64>() / projected[k].len() as f64;
        if baseline_mean <= 0.0 {
            return Err(Error::NonPositiveMean {
                mean: baseline_mean,
            });
        }
        outcomes.push(OutcomeProjection {
            outcome: name,
            baseline_mean,
            projected_mean,
            pct_change: 100.0 * (projected_mean - baseline_mean) / baseline_mean,
        });
    }
    Ok(ProjectionResult {
        city_id: city_id.to_string(),
        scenario,
        analog_id: analog_id.to_string(),
        outcomes,
    })
}

/// Emissions and equivalence constants. Values are calibration constants of
/// the reporting layer, configurable per run; none are presented as physical
/// constants.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EmissionsConfig {
    /// Metric tons CO2e per MWh of generation.
    pub co2e_factor_t_per_mwh: f64,
    /// Nameplate rating of the reference wind turbine, MW.
    pub turbine_rating_mw: f64,
    /// Capacity factor of the reference turbine.
    pub capacity_factor: f64,
    pub hours_per_month: f64,
    /// Sequestration rate, metric tons CO2e per km2 of forest per month.
    pub forest_rate_t_per_km2_month: f64,
    /// Reference dam generation, MWh per day.
    pub dam_daily_output_mwh: f64,
}

impl Default for EmissionsConfig {
    fn default() -> Self {
        EmissionsConfig {
            co2e_factor_t_per_mwh: 0.432,
            turbine_rating_mw: 1.5,
            capacity_factor: 0.247,
            hours_per_month: 730.0,
            forest_rate_t_per_km2_month: 207.56,
            dam_daily_output_mwh: 11_024.0,
        }
    }
}

/// Scale a per-capita percent change to a population scenario:
/// `projected = current * (1 + pct/100) * (pop_future / pop_now)`.
/// Returns `(projected_total, delta)`.
pub fn ssp_total_demand(
    pct_change: f64,
    current_total: f64,
    pop_now: f64,
    pop_future: f64,
) -> (f64, f64) {
    assert!(current_total > 0.0, "current_total must be positive");
    assert!(pop_now > 0.0 && pop_future > 0.0, "populations must be positive");
    let projected = current_total * (1.0 + pct_change / 100.0) * (pop_future / pop_now);
    (projected, projected - current_total)
}

/// Added emissions for an added generation volume.
pub fn co2e_delta(delta_mwh: f64, config: &EmissionsConfig) -> f64 {
    assert!(config.co2e_factor_t_per_mwh > 0.0);
    delta_mwh * config.co2e_factor_t_per_mwh
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EquivalenceReport {
    /// Reference turbines needed to supply the delta, rounded up.
    pub turbines: u64,
    /// Forest area whose monthly sequestration offsets the added CO2e.
    pub forest_km2: f64,
    /// Days of reference-dam output equal to the delta.
    pub dam_days: f64,
}

/// Express a monthly demand delta (and its emissions) in tangible units.
pub fn equivalences(delta_mwh: f64, co2e_t: f64, config: &EmissionsConfig) -> EquivalenceReport {
    assert!(config.turbine_rating_mw > 0.0);
    assert!(config.capacity_factor > 0.0);
    assert!(config.hours_per_month > 0.0);
    assert!(config.forest_rate_t_per_km2_month > 0.0);
    assert!(config.dam_daily_output_mwh > 0.0);
    let turbine_mwh_per_month =
        config.turbine_rating_mw * config.capacity_factor * config.hours_per_month;
    EquivalenceReport {
        turbines: (delta_mwh / turbine_mwh_per_month).ceil().max(0.0) as u64,
        forest_km2: co2e_t / config.forest_rate_t_per_km2_month,
        dam_days: delta_mwh / config.dam_daily_output_mwh,
    }
}

/// SSP-scaled monthly electricity totals for one city, scenario and pathway.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TotalsResult {
    pub city_id: String,
    pub ssp: u8,
    pub scenario: Scenario,
    pub current_total_mwh: f64,
    pub projected_total_mwh: f64,
    pub delta_mwh: f64,
    pub co2e_t: f64,
    pub turbines: u64,
    pub forest_km2: f64,
    pub dam_days: f64,
}

/// Build one totals row from a projection percent change and populations.
pub fn totals_row(
    city_id: &str,
    ssp: u8,
    scenario: Scenario,
    pct_change: f64,
    current_total: f64,
    pop_now: f64,
    pop_future: f64,
    emissions: &EmissionsConfig,
) -> TotalsResult {
    let (projected_total_mwh, delta_mwh) =
        ssp_total_demand(pct_change, current_total, pop_now, pop_future);
    let co2e_t = co2e_delta(delta_mwh, emissions);
    let eq = equivalences(delta_mwh, co2e_t, emissions);
    TotalsResult {
        city_id: city_id.to_string(),
        ssp,
        scenario,
        current_total_mwh: current_total,
        projected_total_mwh,
        delta_mwh,
        co2e_t,
        turbines: eq.turbines,
        forest_km2: eq.forest_km2,
        dam_days: eq.dam_days,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kfold_even_sizes() {
        let assignment = kfold_splits(10, 5, 1).unwrap();
        let mut counts = [0usize; 5];
        for &f in &assignment {
            counts[f] += 1;
        }
        assert_eq!(counts, [2, 2, 2, 2, 2]);
    }

    #[test]
    fn kfold_uneven_sizes() {
        let assignment = kfold_splits(11, 5, 1).unwrap();
        let mut counts = [0usize; 5];
        for &f in &assignment {
            counts[f] += 1;
        }
        assert_eq!(counts, [3, 2, 2, 2, 2]);
    }

    #[test]
    fn kfold_seed_determinism() {
        assert_eq!(kfold_splits(37, 5, 9).unwrap(), kfold_splits(37, 5, 9).unwrap());
        assert_ne!(kfold_splits(37, 5, 9).unwrap(), kfold_splits(37, 5, 10).unwrap());
    }

    #[test]
    fn kfold_rejects_small_n() {
        assert!(matches!(
            kfold_splits(4, 5, 0),
            Err(Error::TooFewForFolds { n: 4, k: 5 })
        ));
    }

    #[test]
    fn r2_perfect_prediction() {
        let y = [1.0, 2.0, 3.0];
        assert_eq!(r2(&y, &y).unwrap(), 1.0);
    }

    #[test]
    fn r2_mean_prediction_is_zero() {
        let y = [1.0, 2.0, 3.0];
        let yhat = [2.0, 2.0, 2.0];
        assert_eq!(r2(&y, &yhat).unwrap(), 0.0);
    }

    #[test]
    fn r2_anti_prediction_hand_value() {
        // y=(0,1), yhat=(1,0): 1 - 2/0.5 = -3
        let v = r2(&[0.0, 1.0], &[1.0, 0.0]).unwrap();
        assert_eq!(v, -3.0);
    }

    #[test]
    fn r2_zero_variance_errors() {
        assert!(r2(&[2.0, 2.0], &[1.0, 3.0]).is_err());
    }

    #[test]
    fn nrmse_examples() {
        assert_eq!(nrmse(&[2.0, 2.0], &[2.0, 2.0]).unwrap(), 0.0);
        // RMSE 1 over mean 2.
        assert_eq!(nrmse(&[2.0, 2.0], &[1.0, 3.0]).unwrap(), 0.5);
    }

    #[test]
    fn nrmse_scale_invariance() {
        let y = [2.0, 4.0, 6.0];
        let yhat = [2.5, 3.5, 6.5];
        let base = nrmse(&y, &yhat).unwrap();
        let ys: Vec<f64> = y.iter().map(|v| v * 7.0).collect();
        let yh: Vec<f64> = yhat.iter().map(|v| v * 7.0).collect();
        assert!((nrmse(&ys, &yh).unwrap() - base).abs() < 1e-12);
    }

    #[test]
    fn nrmse_nonpositive_mean_errors() {
        assert!(matches!(
            nrmse(&[-1.0, 1.0], &[0.0, 0.0]),
            Err(Error::NonPositiveMean { .. })
        ));
    }

    #[test]
    fn ssp_totals_identity_and_chicago_figures() {
        let (projected, delta) = ssp_total_demand(0.0, 100.0, 10.0, 10.0);
        assert_eq!(projected, 100.0);
        assert_eq!(delta, 0.0);

        // 4.3e6 MWh now, +12%, population ratio 1.183 -> about 5.70e6 MWh.
        let (projected, _) = ssp_total_demand(12.0, 4.3e6, 1.0, 1.183);
        assert!((projected - 5.7e6).abs() / 5.7e6 < 0.02, "{projected}");

        let (projected, _) = ssp_total_demand(12.0, 4.3e6, 1.0, 1.0);
        assert!((projected - 4.816e6).abs() < 1.0);
    }

    #[test]
    fn ssp_totals_compose_multiplicatively() {
        let (p1, _) = ssp_total_demand(12.0, 1000.0, 1.0, 1.2);
        let (p2, _) = ssp_total_demand(0.0, p1, 1.0, 1.5);
        let (direct, _) = ssp_total_demand(12.0, 1000.0, 1.0, 1.2 * 1.5);
        assert!((p2 - direct).abs() < 1e-9);
    }

    #[test]
    fn co2e_examples() {
        let cfg = EmissionsConfig::default();
        let t = co2e_delta(1.4e6, &cfg);
        assert!((t - 604_800.0).abs() < 1.0);
        assert!((t - 605_000.0).abs() / 605_000.0 < 0.01);
        assert_eq!(co2e_delta(0.0, &cfg), 0.0);
        let custom = EmissionsConfig {
            co2e_factor_t_per_mwh: 0.4375,
            ..cfg
        };
        assert!((co2e_delta(4.8e6, &custom) - 2.1e6).abs() < 1.0);
    }

    #[test]
    fn equivalence_examples() {
        let cfg = EmissionsConfig::default();
        // 3.8e6 MWh vs the 14,000-turbine figure.
        let eq = equivalences(3.8e6, 0.0, &cfg);
        assert!(
            (eq.turbines as f64 - 14_000.0).abs() / 14_000.0 < 0.02,
            "{}",
            eq.turbines
        );
        // 1.4e6 MWh vs 127 dam-days.
        let eq = equivalences(1.4e6, 0.0, &cfg);
        assert!((eq.dam_days - 127.0).abs() / 127.0 < 0.02, "{}", eq.dam_days);
        // 4.3e6 t CO2e vs 20,717 km2 of forest.
        let eq = equivalences(0.0, 4.3e6, &cfg);
        assert!(
            (eq.forest_km2 - 20_717.0).abs() / 20_717.0 < 0.02,
            "{}",
            eq.forest_km2
        );
        assert_eq!(eq.turbines, 0);
    }
}
