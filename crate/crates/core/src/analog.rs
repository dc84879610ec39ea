//! Climate analog ranking by sigma dissimilarity.
//!
//! A target's future 12-variable seasonal mean vector is standardized by a
//! candidate location's interannual variability, reduced to a standardized
//! Euclidean distance, and mapped to a sigma scale: the sigma value is the
//! half-normal deviate whose chi(1) percentile equals the distance's chi(k)
//! percentile. Distances within a candidate's own year-to-year variability
//! land near 1 sigma; novel climates run far above it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::SeasonalNormals;
use crate::special::gamma_pq;

/// Sigma value reported for saturated (off-scale) dissimilarities.
pub const SIGMA_CAP: f64 = 10.0;

/// Upper-tail mass below which the chi percentile is treated as underflowed.
const TAIL_UNDERFLOW: f64 = 1e-300;

/// A target city's future climate vector to be matched against candidates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalogQuery {
    pub target_city_id: String,
    pub scenario: crate::ingest::Scenario,
    /// Future seasonal means, same layout as [`SeasonalNormals::mean12`].
    pub future12: [f64; 12],
}

/// One ranked candidate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalogResult {
    pub candidate_id: String,
    /// Standardized Euclidean distance (dimensionless).
    pub distance_d: f64,
    /// Sigma dissimilarity; equals [`SIGMA_CAP`] when `saturated`.
    pub sigma: f64,
    pub saturated: bool,
    /// 1-based rank in ascending sigma order.
    pub rank: usize,
}

/// Standardize the target's future vector by the candidate's mean and
/// interannual variability: `z_i = (future_i - mean_i) / icv_i`.
///
/// The candidate's ICV is used (not the target's): the question answered is
/// whether the target's future climate sits inside the candidate's presently
/// observed variability.
pub fn standardize_anomaly(future12: &[f64; 12], candidate: &SeasonalNormals) -> [f64; 12] {
    let mut z = [0.0; 12];
    for i in 0..12 {
        z[i] = (future12[i] - candidate.mean12[i]) / candidate.icv12[i];
    }
    z
}

/// Euclidean norm of a standardized anomaly vector.
pub fn sed_distance(z: &[f64]) -> f64 {
    z.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// CDF of the chi distribution with `k` degrees of freedom:
/// `P(k/2, x^2 / 2)` (regularized lower incomplete gamma).
pub fn chi_cdf(x: f64, k: u32) -> f64 {
    chi_cdf_pair(x, k).0
}

/// `(P, Q)` of the chi distribution, with the upper tail computed on its own
/// branch so it stays meaningful far beyond `P == 1.0` in f64.
pub fn chi_cdf_pair(x: f64, k: u32) -> (f64, f64) {
    assert!(x >= 0.0, "chi_cdf requires x >= 0, got {x}");
    assert!(k >= 1, "chi_cdf requires k >= 1");
    gamma_pq(f64::from(k) / 2.0, x * x / 2.0)
}

/// Map a chi(k)-distributed distance to the sigma scale with the default
/// [`SIGMA_CAP`].
pub fn sigma_dissimilarity(distance: f64, k: u32) -> (f64, bool) {
    sigma_dissimilarity_with_cap(distance, k, SIGMA_CAP)
}

/// Solve `chi_cdf(sigma, 1) = chi_cdf(distance, k)` for sigma by bisection.
///
/// The solve compares on the lower tail `P` when the target percentile is
/// below one half and on the upper tail `Q` above it, so it keeps full
/// floating-point resolution at both extremes (for k = 12, small distances
/// map to P values around 1e-12 and large ones to Q values near underflow).
/// Bisection runs until the bracket cannot shrink further, well inside the
/// 1e-9 contract. Returns `(cap, true)` when the upper tail underflows below
/// 1e-300 or the solution would exceed `cap`; both mean "beyond the
/// reportable scale".
pub fn sigma_dissimilarity_with_cap(distance: f64, k: u32, cap: f64) -> (f64, bool) {
    assert!(distance >= 0.0, "distance must be >= 0, got {distance}");
    if distance == 0.0 {
        return (0.0, false);
    }
    let (p_target, q_target) = chi_cdf_pair(distance, k);
    if q_target < TAIL_UNDERFLOW {
        return (cap, true);
    }
    let (_, q_at_cap) = chi_cdf_pair(cap, 1);
    if q_target <= q_at_cap {
        return (cap, true);
    }
    let on_lower_tail = p_target <= 0.5;
    let mut lo = 0.0_f64;
    let mut hi = cap;
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (p_mid, q_mid) = chi_cdf_pair(mid, 1);
        let below = if on_lower_tail {
            p_mid < p_target
        } else {
            q_mid > q_target
        };
        if below {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi), false)
}

/// Score every candidate in the pool and rank ascending by sigma, breaking
/// ties by candidate id. Ranks are 1-based.
pub fn rank_analogs(query: &AnalogQuery, pool: &[SeasonalNormals]) -> Result<Vec<AnalogResult>> {
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    let mut results: Vec<AnalogResult> = pool
        .iter()
        .map(|candidate| {
            let z = standardize_anomaly(&query.future12, candidate);
            let d = sed_distance(&z);
            let (sigma, saturated) = sigma_dissimilarity(d, 12);
            AnalogResult {
                candidate_id: candidate.location_id.clone(),
                distance_d: d,
                sigma,
                saturated,
                rank: 0,
            }
        })
        .collect();
    results.sort_by(|a, b| {
        a.sigma
            .total_cmp(&b.sigma)
            .then_with(|| a.candidate_id.cmp(&b.candidate_id))
    });
    for (i, r) in results.iter_mut().enumerate() {
        r.rank = i + 1;
    }
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Scenario;

    fn normals(id: &str, mean: [f64; 12], icv: [f64; 12]) -> SeasonalNormals {
        SeasonalNormals {
            location_id: id.to_string(),
            epoch: "test".to_string(),
            mean12: mean,
            icv12: icv,
            n_years: 10,
        }
    }

    #[test]
    fn zero_anomaly_when_future_equals_mean() {
        let c = normals("a", [3.0; 12], [2.0; 12]);
        let z = standardize_anomaly(&[3.0; 12], &c);
        assert_eq!(z, [0.0; 12]);
    }

    #[test]
    fn unit_icv_gives_raw_anomaly() {
        let c = normals("a", [1.0; 12], [1.0; 12]);
        let z = standardize_anomaly(&[4.5; 12], &c);
        assert!(z.iter().all(|&v| (v - 3.5).abs() < 1e-15));
    }

    #[test]
    fn two_icv_offsets_give_twos() {
        let mut mean = [0.0; 12];
        let mut icv = [0.0; 12];
        let mut future = [0.0; 12];
        for i in 0..12 {
            mean[i] = i as f64;
            icv[i] = 0.5 + i as f64 * 0.25;
            future[i] = mean[i] + 2.0 * icv[i];
        }
        let z = standardize_anomaly(&future, &normals("a", mean, icv));
        assert!(z.iter().all(|&v| (v - 2.0).abs() < 1e-12));
    }

    #[test]
    fn sed_distance_examples() {
        assert_eq!(sed_distance(&[0.0; 12]), 0.0);
        assert!((sed_distance(&[1.0; 12]) - 12f64.sqrt()).abs() < 1e-12);
        let mut z = [0.0; 12];
        z[0] = 3.0;
        z[1] = 4.0;
        assert_eq!(sed_distance(&z), 5.0);
    }

    #[test]
    fn chi_cdf_zero_is_zero() {
        for k in 1..=16 {
            assert_eq!(chi_cdf(0.0, k), 0.0);
        }
    }

    #[test]
    fn chi_cdf_one_dof_is_half_normal() {
        // P(|Z| <= 1) = erf(1/sqrt(2)) = 0.6826894921370859
        assert!((chi_cdf(1.0, 1) - 0.6826894921370859).abs() < 1e-12);
    }

    #[test]
    fn chi_cdf_interior_value() {
        let p = chi_cdf(3.0, 12);
        assert!(p > 0.0 && p < 1.0);
    }

    #[test]
    fn sigma_identity_at_one_dof() {
        for &d in &[0.0, 0.3, 1.0, 2.5, 5.0, 8.0, 9.9] {
            let (sigma, saturated) = sigma_dissimilarity(d, 1);
            assert!(!saturated, "d={d}");
            assert!((sigma - d).abs() < 1e-9, "d={d} sigma={sigma}");
        }
    }

    #[test]
    fn sigma_monotone_in_distance() {
        let mut last = -1.0;
        for i in 0..60 {
            let d = 0.3 + i as f64 * 0.12;
            let (sigma, saturated) = sigma_dissimilarity(d, 12);
            if saturated {
                break;
            }
            assert!(sigma > last, "d={d} sigma={sigma} last={last}");
            last = sigma;
        }
    }

    #[test]
    fn sigma_nonincreasing_in_dof() {
        // Same distance is less exceptional in higher dimension.
        let d = 3.0;
        let mut last = f64::INFINITY;
        for k in 1..=16 {
            let (sigma, _) = sigma_dissimilarity(d, k);
            assert!(sigma <= last + 1e-12, "k={k}");
            last = sigma;
        }
    }

    #[test]
    fn huge_distance_saturates_at_cap() {
        let (sigma, saturated) = sigma_dissimilarity(100.0, 12);
        assert!(saturated);
        assert_eq!(sigma, SIGMA_CAP);
    }

    #[test]
    fn rank_identity_candidate_first() {
        let future = [5.0; 12];
        let pool = vec![
            normals("far", [9.0; 12], [1.0; 12]),
            normals("self", future, [1.0; 12]),
        ];
        let q = AnalogQuery {
            target_city_id: "t".to_string(),
            scenario: Scenario::Rcp85,
            future12: future,
        };
        let ranked = rank_analogs(&q, &pool).unwrap();
        assert_eq!(ranked[0].candidate_id, "self");
        assert_eq!(ranked[0].sigma, 0.0);
        assert_eq!(ranked[0].rank, 1);
        assert_eq!(ranked[1].rank, 2);
    }

    #[test]
    fn rank_single_candidate() {
        let q = AnalogQuery {
            target_city_id: "t".to_string(),
            scenario: Scenario::Rcp45,
            future12: [1.0; 12],
        };
        let pool = vec![normals("only", [0.0; 12], [1.0; 12])];
        let ranked = rank_analogs(&q, &pool).unwrap();
        assert_eq!(ranked.len(), 1);
        assert_eq!(ranked[0].rank, 1);
    }

    #[test]
    fn equal_sigma_ties_break_by_id() {
        let q = AnalogQuery {
            target_city_id: "t".to_string(),
            scenario: Scenario::Rcp85,
            future12: [2.0; 12],
        };
        let pool = vec![
            normals("bbb", [0.0; 12], [1.0; 12]),
            normals("aaa", [0.0; 12], [1.0; 12]),
        ];
        let ranked = rank_analogs(&q, &pool).unwrap();
        assert_eq!(ranked[0].candidate_id, "aaa");
        assert_eq!(ranked[1].candidate_id, "bbb");
    }

    #[test]
    fn empty_pool_errors() {
        let q = AnalogQuery {
            target_city_id: "t".to_string(),
            scenario: Scenario::Rcp85,
            future12: [0.0; 12],
        };
        assert!(matches!(rank_analogs(&q, &[]), Err(Error::EmptyPool)));
    }

    #[test]
    fn ranking_is_permutation_of_pool() {
        let pool: Vec<SeasonalNormals> = (0..9)
            .map(|i| normals(&format!("c{i}"), [i as f64; 12], [1.0 + i as f64 * 0.1; 12]))
            .collect();
        let q = AnalogQuery {
            target_city_id: "t".to_string(),
            scenario: Scenario::Rcp85,
            future12: [4.2; 12],
        };
        let ranked = rank_analogs(&q, &pool).unwrap();
        let mut ids: Vec<&str> = ranked.iter().map(|r| r.candidate_id.as_str()).collect();
        ids.sort_unstable();
        let mut expected: Vec<String> = pool.iter().map(|p| p.location_id.clone()).collect();
        expected.sort();
        assert_eq!(ids, expected.iter().map(String::as_str).collect::<Vec<_>>());
        for (i, r) in ranked.iter().enumerate() {
            assert_eq!(r.rank, i + 1);
        }
    }
}
