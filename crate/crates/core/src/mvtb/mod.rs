//! Multivariate gradient tree boosting for the two-outcome demand nexus.
//!
//! Each iteration draws one bag, fits one candidate tree per outcome on the
//! bagged residuals, and commits only the candidate whose predictions explain
//! the most squared residual covariance summed across *all* outcomes:
//!
//! ```text
//! S_k = sum_j Cov_n(R_j, h_k(X))^2
//! ```
//!
//! With a single outcome this reduces to ordinary stochastic gradient
//! boosting, which is what the oracle equivalence tests pin down. Outcomes
//! are standardized to zero mean and unit variance before fitting and the
//! constants are kept on the model, so predictions are equivariant under
//! per-outcome affine changes of the training targets.

mod tree;

pub use tree::{Node, RegressionTree};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{sample_without_replacement, SplitMix64};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Hyperparams {
    /// Boosting iterations (shared across outcomes; one tree is kept per
    /// iteration).
    pub n_trees: usize,
    pub depth: usize,
    pub shrinkage: f64,
    pub bag_fraction: f64,
    pub min_node: usize,
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            n_trees: 1000,
            depth: 3,
            shrinkage: 0.05,
            bag_fraction: 0.5,
            min_node: 5,
            seed: 42,
        }
    }
}

impl Hyperparams {
    pub fn with_seed(&self, seed: u64) -> Hyperparams {
        Hyperparams { seed, ..self.clone() }
    }

    fn validate(&self) -> Result<()> {
        if self.depth < 1 {
            return Err(Error::Config("depth must be >= 1".to_string()));
        }
        if self.min_node < 1 {
            return Err(Error::Config("min_node must be >= 1".to_string()));
        }
        if !(0.0 < self.shrinkage && self.shrinkage <= 1.0) {
            return Err(Error::Config("shrinkage must be in (0, 1]".to_string()));
        }
        if !(0.0 < self.bag_fraction && self.bag_fraction <= 1.0) {
            return Err(Error::Config("bag_fraction must be in (0, 1]".to_string()));
        }
        Ok(())
    }
}

/// Additive ensemble for one outcome plus its standardization constants.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutcomeEnsemble {
    pub name: String,
    pub mean: f64,
    pub std: f64,
    /// `(tree, shrinkage)` updates in commit order.
    pub trees: Vec<(RegressionTree, f64)>,
}

/// One boosting iteration as recorded during training.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationLog {
    pub iteration: usize,
    /// Index of the committed outcome.
    pub selected: usize,
    /// Selection score per outcome.
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoostedNexusModel {
    pub feature_names: Vec<String>,
    pub outcomes: Vec<OutcomeEnsemble>,
    pub hyper: Hyperparams,
    pub log: Vec<IterationLog>,
}

/// Relative influence: per outcome column, each feature's share of the total
/// split SSE reduction, normalized to sum to 100 (all-zero when the outcome
/// received no splits).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InfluenceMatrix {
    pub features: Vec<String>,
    pub outcomes: Vec<String>,
    /// `pct[outcome][feature]`.
    pub pct: Vec<Vec<f64>>,
}

impl InfluenceMatrix {
    pub fn get(&self, feature: &str, outcome: &str) -> Option<f64> {
        let f = self.features.iter().position(|n| n == feature)?;
        let k = self.outcomes.iter().position(|n| n == outcome)?;
        Some(self.pct[k][f])
    }

    /// Mean influence across outcome columns, per feature.
    pub fn mean_across_outcomes(&self) -> Vec<(String, f64)> {
        self.features
            .iter()
            .enumerate()
            .map(|(f, name)| {
                let mean =
                    self.pct.iter().map(|col| col[f]).sum::<f64>() / self.pct.len() as f64;
                (name.clone(), mean)
            })
            .collect()
    }
}

/// Covariance-explained attribution per (root feature, outcome pair).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CovExplainedEntry {
    pub feature: String,
    /// Unordered outcome pair, canonicalized to ascending outcome index.
    pub pair: (String, String),
    pub value: f64,
    /// Share of the summed attribution, percent.
    pub pct: f64,
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Covariance with 1/n normalization.
fn cov_n(u: &[f64], v: &[f64]) -> f64 {
    let n = u.len() as f64;
    let mu = mean(u);
    let mv = mean(v);
    u.iter()
        .zip(v)
        .map(|(a, b)| (a - mu) * (b - mv))
        .sum::<f64>()
        / n
}

/// Fit the joint model. `ys` is outcome-major: `ys[k][i]` is outcome `k` for
/// row `i`. Every outcome must have positive variance.
pub fn fit(
    feature_names: &[String],
    x: &[Vec<f64>],
    ys: &[Vec<f64>],
    outcome_names: &[String],
    hyper: &Hyperparams,
) -> Result<BoostedNexusModel> {
    hyper.validate()?;
    let n = x.len();
    let q = ys.len();
    assert_eq!(q, outcome_names.len(), "outcome name per column");
    assert!(n > 0, "empty training set");
    for y in ys {
        assert_eq!(y.len(), n, "outcome length must match row count");
    }

    let mut outcomes = Vec::with_capacity(q);
    let mut z: Vec<Vec<f64>> = Vec::with_capacity(q);
    for (k, y) in ys.iter().enumerate() {
        let m = mean(y);
        let var = y.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64;
        let std = var.sqrt();
        if std <= 0.0 {
            return Err(Error::ZeroVarianceOutcome {
                outcome: outcome_names[k].clone(),
            });
        }
        z.push(y.iter().map(|v| (v - m) / std).collect());
        outcomes.push(OutcomeEnsemble {
            name: outcome_names[k].clone(),
            mean: m,
            std,
            trees: Vec::new(),
        });
    }

    let mut scores_f: Vec<Vec<f64>> = vec![vec![0.0; n]; q];
    let mut rng = SplitMix64::new(hyper.seed);
    let bag_size = ((hyper.bag_fraction * n as f64).ceil() as usize).clamp(1, n);
    let mut log = Vec::with_capacity(hyper.n_trees);

    for iteration in 1..=hyper.n_trees {
        let bag = sample_without_replacement(n, bag_size, &mut rng);

        let mut candidates: Vec<(RegressionTree, Vec<f64>)> = Vec::with_capacity(q);
        let mut residuals: Vec<Vec<f64>> = Vec::with_capacity(q);
        for k in 0..q {
            let r: Vec<f64> = z[k]
                .iter()
                .zip(&scores_f[k])
                .map(|(zi, fi)| zi - fi)
                .collect();
            let tree = RegressionTree::fit_on(x, &r, &bag, hyper.depth, hyper.min_node);
            let h = tree.predict(x);
            candidates.push((tree, h));
            residuals.push(r);
        }

        let mut scores = Vec::with_capacity(q);
        for (_, h) in &candidates {
            let s: f64 = residuals.iter().map(|r| cov_n(r, h).powi(2)).sum();
            scores.push(s);
        }
        // argmax with ties resolved toward the lowest outcome index
        let mut selected = 0;
        for k in 1..q {
            if scores[k] > scores[selected] {
                selected = k;
            }
        }

        let (tree, h) = candidates.swap_remove(selected);
        for (fi, hi) in scores_f[selected].iter_mut().zip(&h) {
            *fi += hyper.shrinkage * hi;
        }
        outcomes[selected].trees.push((tree, hyper.shrinkage));
        log.push(IterationLog {
            iteration,
            selected,
            scores,
        });
    }

    Ok(BoostedNexusModel {
        feature_names: feature_names.to_vec(),
        outcomes,
        hyper: hyper.clone(),
        log,
    })
}

impl BoostedNexusModel {
    pub fn n_outcomes(&self) -> usize {
        self.outcomes.len()
    }

    pub fn outcome_names(&self) -> Vec<String> {
        self.outcomes.iter().map(|o| o.name.clone()).collect()
    }

    fn check_features(&self, feature_names: &[String]) -> Result<()> {
        for expected in &self.feature_names {
            if !feature_names.contains(expected) {
                return Err(Error::MissingFeature {
                    name: expected.clone(),
                });
            }
        }
        for (i, expected) in self.feature_names.iter().enumerate() {
            if feature_names.get(i) != Some(expected) {
                return Err(Error::FeatureOrderMismatch {
                    position: i,
                    got: feature_names.get(i).cloned().unwrap_or_default(),
                    expected: expected.clone(),
                });
            }
        }
        if feature_names.len() != self.feature_names.len() {
            return Err(Error::FeatureOrderMismatch {
                position: self.feature_names.len(),
                got: feature_names[self.feature_names.len()].clone(),
                expected: "<end>".to_string(),
            });
        }
        Ok(())
    }

    /// Predict all outcomes for new rows; columns must match training
    /// features in name and order.
    pub fn predict(&self, feature_names: &[String], x: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        self.check_features(feature_names)?;
        let mut out = Vec::with_capacity(self.outcomes.len());
        for ensemble in &self.outcomes {
            let mut preds = vec![0.0; x.len()];
            for (tree, nu) in &ensemble.trees {
                for (p, row) in preds.iter_mut().zip(x) {
                    *p += nu * tree.predict_row(row);
                }
            }
            out.push(
                preds
                    .into_iter()
                    .map(|f| ensemble.mean + ensemble.std * f)
                    .collect(),
            );
        }
        Ok(out)
    }

    /// Per-outcome relative influence from accumulated split SSE reductions.
    pub fn relative_influence(&self) -> InfluenceMatrix {
        let p = self.feature_names.len();
        let mut pct = Vec::with_capacity(self.outcomes.len());
        for ensemble in &self.outcomes {
            let mut acc = vec![0.0; p];
            for (tree, _) in &ensemble.trees {
                for (feature, gain) in tree.split_gains() {
                    acc[feature] += gain;
                }
            }
            let total: f64 = acc.iter().sum();
            if total > 0.0 {
                for a in acc.iter_mut() {
                    *a = 100.0 * *a / total;
                }
            }
            pct.push(acc);
        }
        InfluenceMatrix {
            features: self.feature_names.clone(),
            outcomes: self.outcome_names(),
            pct,
        }
    }

    /// Replay training on `(x, ys)` to decompose each committed iteration's
    /// selection score into its per-outcome covariance terms, attributed to
    /// the committed tree's root split feature. No trees are refit; the
    /// stored ensembles drive the replay.
    pub fn covariance_explained(
        &self,
        x: &[Vec<f64>],
        ys: &[Vec<f64>],
    ) -> Result<Vec<CovExplainedEntry>> {
        let q = self.outcomes.len();
        assert_eq!(ys.len(), q, "outcome count must match the model");
        let n = x.len();
        let z: Vec<Vec<f64>> = self
            .outcomes
            .iter()
            .zip(ys)
            .map(|(o, y)| y.iter().map(|v| (v - o.mean) / o.std).collect())
            .collect();

        let mut scores_f: Vec<Vec<f64>> = vec![vec![0.0; n]; q];
        let mut cursors = vec![0usize; q];
        let mut acc: std::collections::BTreeMap<(String, usize, usize), f64> =
            std::collections::BTreeMap::new();

        for entry in &self.log {
            let k = entry.selected;
            let (tree, nu) = &self.outcomes[k].trees[cursors[k]];
            cursors[k] += 1;
            let h = tree.predict(x);
            if let Some(root) = tree.root_feature() {
                let feature = self.feature_names[root].clone();
                for j in 0..q {
                    let r: Vec<f64> = z[j]
                        .iter()
                        .zip(&scores_f[j])
                        .map(|(zi, fi)| zi - fi)
                        .collect();
                    let term = cov_n(&r, &h).powi(2);
                    let pair = (k.min(j), k.max(j));
                    *acc.entry((feature.clone(), pair.0, pair.1)).or_insert(0.0) += term;
                }
            }
            for (fi, hi) in scores_f[k].iter_mut().zip(&h) {
                *fi += nu * hi;
            }
        }

        let total: f64 = acc.values().sum();
        Ok(acc
            .into_iter()
            .map(|((feature, a, b), value)| CovExplainedEntry {
                feature,
                pair: (self.outcomes[a].name.clone(), self.outcomes[b].name.clone()),
                value,
                pct: if total > 0.0 { 100.0 * value / total } else { 0.0 },
            })
            .collect())
    }

    /// Serialize to the versioned model JSON document.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct ModelFile<'a> {
            version: u32,
            model: &'a BoostedNexusModel,
        }
        serde_json::to_string_pretty(&ModelFile {
            version: MODEL_FORMAT_VERSION,
            model: self,
        })
        .expect("model serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<BoostedNexusModel> {
        #[derive(Deserialize)]
        struct ModelFile {
            version: u32,
            model: BoostedNexusModel,
        }
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| Error::ModelFormat(e.to_string()))?;
        if file.version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelFormat(format!(
                "unsupported model version {} (expected {MODEL_FORMAT_VERSION})",
                file.version
            )));
        }
        Ok(file.model)
    }
}

pub const MODEL_FORMAT_VERSION: u32 = 1;
