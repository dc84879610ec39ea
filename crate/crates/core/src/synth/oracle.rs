//! Independent brute-force oracles used to certify the main implementations.
//!
//! `oracle_univariate_boost` is a self-contained single-outcome gradient
//! booster that follows the same tree, bagging, and PRNG rules as the joint
//! model; with one outcome the joint model must match it bit for bit.
//! `oracle_chi` evaluates the chi CDF by adaptive quadrature of the density,
//! sharing no code with the incomplete-gamma path it certifies.

use crate::rng::{sample_without_replacement, SplitMix64};

// --- univariate boosting reference ----------------------------------------

enum OTree {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: Box<OTree>,
        right: Box<OTree>,
    },
}

impl OTree {
    fn predict(&self, row: &[f64]) -> f64 {
        match self {
            OTree::Leaf(v) => *v,
            OTree::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if row[*feature] <= *threshold {
                    left.predict(row)
                } else {
                    right.predict(row)
                }
            }
        }
    }
}

fn fit_otree(x: &[Vec<f64>], y: &[f64], rows: &[usize], depth: usize, min_node: usize) -> OTree {
    let n = rows.len();
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for &r in rows {
        sum += y[r];
        sumsq += y[r] * y[r];
    }
    let mean = sum / n as f64;
    if depth == 0 || n < 2 * min_node {
        return OTree::Leaf(mean);
    }
    let parent_sse = (sumsq - sum * sum / n as f64).max(0.0);

    let p = x[rows[0]].len();
    let mut best: Option<(f64, usize, f64)> = None; // (score, feature, threshold)
    for feature in 0..p {
        let mut order = rows.to_vec();
        order.sort_unstable_by(|&a, &b| {
            x[a][feature].total_cmp(&x[b][feature]).then(a.cmp(&b))
        });
        let mut pre_sum = vec![0.0; n + 1];
        let mut pre_sumsq = vec![0.0; n + 1];
        for (i, &r) in order.iter().enumerate() {
            pre_sum[i + 1] = pre_sum[i] + y[r];
            pre_sumsq[i + 1] = pre_sumsq[i] + y[r] * y[r];
        }
        for split in min_node..=(n - min_node) {
            let lo = x[order[split - 1]][feature];
            let hi = x[order[split]][feature];
            if lo == hi {
                continue;
            }
            let threshold = lo + (hi - lo) / 2.0;
            if threshold >= hi {
                continue;
            }
            let nl = split as f64;
            let nr = (n - split) as f64;
            let left_sse = (pre_sumsq[split] - pre_sum[split] * pre_sum[split] / nl).max(0.0);
            let sum_r = pre_sum[n] - pre_sum[split];
            let right_sse = ((pre_sumsq[n] - pre_sumsq[split]) - sum_r * sum_r / nr).max(0.0);
            let score = left_sse + right_sse;
            if best.is_none() || score < best.as_ref().unwrap().0 {
                best = Some((score, feature, threshold));
            }
        }
    }
    let Some((score, feature, threshold)) = best else {
        return OTree::Leaf(mean);
    };
    if score >= parent_sse {
        return OTree::Leaf(mean);
    }
    let mut left_rows = Vec::new();
    let mut right_rows = Vec::new();
    for &r in rows {
        if x[r][feature] <= threshold {
            left_rows.push(r);
        } else {
            right_rows.push(r);
        }
    }
    OTree::Split {
        feature,
        threshold,
        left: Box::new(fit_otree(x, y, &left_rows, depth - 1, min_node)),
        right: Box::new(fit_otree(x, y, &right_rows, depth - 1, min_node)),
    }
}

/// Reference single-outcome gradient boosting fit.
pub struct OracleBoost {
    mean: f64,
    std: f64,
    shrinkage: f64,
    trees: Vec<OTree>,
}

impl OracleBoost {
    pub fn predict(&self, x: &[Vec<f64>]) -> Vec<f64> {
        x.iter()
            .map(|row| {
                let mut f = 0.0;
                for tree in &self.trees {
                    f += self.shrinkage * tree.predict(row);
                }
                self.mean + self.std * f
            })
            .collect()
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }
}

/// Straightforward gradient boosting on one outcome: standardize, then for
/// each iteration draw one bag and add a shrunken tree fit to the residuals.
/// Tree rules, bag draws, and the PRNG stream match the joint model exactly.
pub fn oracle_univariate_boost(
    x: &[Vec<f64>],
    y: &[f64],
    hyper: &crate::mvtb::Hyperparams,
) -> OracleBoost {
    let n = x.len();
    assert_eq!(y.len(), n);
    let mean = y.iter().sum::<f64>() / n as f64;
    let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    let std = var.sqrt();
    assert!(std > 0.0, "oracle needs non-constant targets");
    let z: Vec<f64> = y.iter().map(|v| (v - mean) / std).collect();

    let mut rng = SplitMix64::new(hyper.seed);
    let bag_size = ((hyper.bag_fraction * n as f64).ceil() as usize).clamp(1, n);
    let mut f = vec![0.0; n];
    let mut trees = Vec::with_capacity(hyper.n_trees);
    for _ in 0..hyper.n_trees {
        let bag = sample_without_replacement(n, bag_size, &mut rng);
        let residuals: Vec<f64> = z.iter().zip(&f).map(|(zi, fi)| zi - fi).collect();
        let tree = fit_otree(x, &residuals, &bag, hyper.depth, hyper.min_node);
        for (fi, row) in f.iter_mut().zip(x) {
            *fi += hyper.shrinkage * tree.predict(row);
        }
        trees.push(tree);
    }
    OracleBoost {
        mean,
        std,
        shrinkage: hyper.shrinkage,
        trees,
    }
}

/// Training-set SSE after each boosting iteration (standardized scale); used
/// to check that full-bag, high-shrinkage fits drive residuals down
/// monotonically.
pub fn oracle_boost_sse_trace(
    x: &[Vec<f64>],
    y: &[f64],
    hyper: &crate::mvtb::Hyperparams,
) -> Vec<f64> {
    let n = x.len();
    let mean = y.iter().sum::<f64>() / n as f64;
    let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    let std = var.sqrt();
    let z: Vec<f64> = y.iter().map(|v| (v - mean) / std).collect();
    let mut rng = SplitMix64::new(hyper.seed);
    let bag_size = ((hyper.bag_fraction * n as f64).ceil() as usize).clamp(1, n);
    let mut f = vec![0.0; n];
    let mut trace = Vec::with_capacity(hyper.n_trees);
    for _ in 0..hyper.n_trees {
        let bag = sample_without_replacement(n, bag_size, &mut rng);
        let residuals: Vec<f64> = z.iter().zip(&f).map(|(zi, fi)| zi - fi).collect();
        let tree = fit_otree(x, &residuals, &bag, hyper.depth, hyper.min_node);
        for (fi, row) in f.iter_mut().zip(x) {
            *fi += hyper.shrinkage * tree.predict(row);
        }
        trace.push(z.iter().zip(&f).map(|(a, b)| (a - b) * (a - b)).sum());
    }
    trace
}

// --- chi CDF by quadrature --------------------------------------------------

/// Gamma(k/2) for integer k >= 1, computed exactly from factorials:
/// Gamma(n) = (n-1)!, Gamma(n + 1/2) = (2n)! sqrt(pi) / (4^n n!).
fn gamma_half_integer(k: u32) -> f64 {
    if k % 2 == 0 {
        let n = k / 2;
        factorial(n - 1)
    } else {
        let n = (k - 1) / 2;
        factorial(2 * n) * std::f64::consts::PI.sqrt() / (4f64.powi(n as i32) * factorial(n))
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

fn chi_pdf(t: f64, k: u32) -> f64 {
    let kf = f64::from(k);
    t.powf(kf - 1.0) * (-t * t / 2.0).exp() / (2f64.powf(kf / 2.0 - 1.0) * gamma_half_integer(k))
}

fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
    h / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_simpson(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(fa, flm, fm, m - a);
    let right = simpson(fm, frm, fb, b - m);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive_simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + adaptive_simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Chi CDF with `k` degrees of freedom by adaptive Simpson integration of the
/// density; absolute tolerance around 1e-12.
pub fn oracle_chi(x: f64, k: u32) -> f64 {
    assert!(x >= 0.0);
    assert!(k >= 1);
    if x == 0.0 {
        return 0.0;
    }
    let f = |t: f64| chi_pdf(t, k);
    let fa = f(0.0);
    let fb = f(x);
    let fm = f(0.5 * x);
    let whole = simpson(fa, fm, fb, x);
    adaptive_simpson(&f, 0.0, x, fa, fm, fb, whole, 1e-13, 48).min(1.0)
}
