//! Depth-limited least-squares regression tree, the boosting base learner.
//!
//! Split search is exhaustive: candidate thresholds are the midpoints
//! between consecutive distinct sorted feature values, each child must keep
//! `min_node` rows, and the winner minimizes the summed child SSE with ties
//! broken toward the lowest feature index and then the lowest threshold.
//! Sums are always accumulated in ascending row-index order so that refits
//! on identical inputs are bit-for-bit identical.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        sse_reduction: f64,
    },
    Leaf {
        value: f64,
    },
}

/// Binary regression tree stored as a flat node array with the root at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<Node>,
}

impl RegressionTree {
    /// Fit on every row of `x`.
    pub fn fit(x: &[Vec<f64>], targets: &[f64], depth: usize, min_node: usize) -> RegressionTree {
        let rows: Vec<usize> = (0..x.len()).collect();
        Self::fit_on(x, targets, &rows, depth, min_node)
    }

    /// Fit on a row subset (`rows` must be strictly ascending). Degenerate
    /// input produces a single leaf rather than an error.
    pub fn fit_on(
        x: &[Vec<f64>],
        targets: &[f64],
        rows: &[usize],
        depth: usize,
        min_node: usize,
    ) -> RegressionTree {
        assert!(!rows.is_empty(), "cannot fit a tree on zero rows");
        let mut builder = Builder {
            x,
            y: targets,
            min_node: min_node.max(1),
            nodes: Vec::new(),
        };
        builder.build(rows.to_vec(), depth);
        RegressionTree {
            nodes: builder.nodes,
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    idx = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    pub fn predict(&self, x: &[Vec<f64>]) -> Vec<f64> {
        x.iter().map(|row| self.predict_row(row)).collect()
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    /// Feature index at the root split, if the tree splits at all.
    pub fn root_feature(&self) -> Option<usize> {
        match self.nodes.first() {
            Some(Node::Split { feature, .. }) => Some(*feature),
            _ => None,
        }
    }

    /// (feature, SSE reduction) for every split in the tree.
    pub fn split_gains(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Split {
                feature,
                sse_reduction,
                ..
            } => Some((*feature, *sse_reduction)),
            Node::Leaf { .. } => None,
        })
    }
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    min_node: usize,
    nodes: Vec<Node>,
}

struct BestSplit {
    score: f64,
    feature: usize,
    threshold: f64,
}

impl<'a> Builder<'a> {
    fn build(&mut self, rows: Vec<usize>, depth_left: usize) -> usize {
        let n = rows.len();
        let (sum, sumsq) = node_sums(self.y, &rows);
        let mean = sum / n as f64;
        let parent_sse = (sumsq - sum * sum / n as f64).max(0.0);

        if depth_left == 0 || n < 2 * self.min_node {
            return self.push(Node::Leaf { value: mean });
        }
        let Some(best) = self.best_split(&rows, parent_sse) else {
            return self.push(Node::Leaf { value: mean });
        };

        let mut left_rows = Vec::new();
        let mut right_rows = Vec::new();
        for &r in &rows {
            if self.x[r][best.feature] <= best.threshold {
                left_rows.push(r);
            } else {
                right_rows.push(r);
            }
        }
        // Reserve the split slot before recursing so the root stays at 0.
        let idx = self.push(Node::Leaf { value: mean });
        let left = self.build(left_rows, depth_left - 1);
        let right = self.build(right_rows, depth_left - 1);
        self.nodes[idx] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
            sse_reduction: parent_sse - best.score,
        };
        idx
    }

    fn push(&mut self, node: Node) -> usize {
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    fn best_split(&self, rows: &[usize], parent_sse: f64) -> Option<BestSplit> {
        let n = rows.len();
        let p = self.x[rows[0]].len();
        let mut best: Option<BestSplit> = None;

        let mut order: Vec<usize> = Vec::with_capacity(n);
        let mut pre_sum = vec![0.0; n + 1];
        let mut pre_sumsq = vec![0.0; n + 1];

        for feature in 0..p {
            order.clear();
            order.extend_from_slice(rows);
            // Total order (value, row index) keeps summation order unique.
            order.sort_unstable_by(|&a, &b| {
                self.x[a][feature]
                    .total_cmp(&self.x[b][feature])
                    .then(a.cmp(&b))
            });
            for (i, &r) in order.iter().enumerate() {
                pre_sum[i + 1] = pre_sum[i] + self.y[r];
                pre_sumsq[i + 1] = pre_sumsq[i] + self.y[r] * self.y[r];
            }
            for split in self.min_node..=(n - self.min_node) {
                let lo = self.x[order[split - 1]][feature];
                let hi = self.x[order[split]][feature];
                if lo == hi {
                    continue;
                }
                let threshold = lo + (hi - lo) / 2.0;
                if threshold >= hi {
                    // Adjacent floats can round the midpoint onto hi, which
                    // would send every row left; skip the degenerate cut.
                    continue;
                }
                let nl = split as f64;
                let nr = (n - split) as f64;
                let left_sse = (pre_sumsq[split] - pre_sum[split] * pre_sum[split] / nl).max(0.0);
                let sum_r = pre_sum[n] - pre_sum[split];
                let right_sse = ((pre_sumsq[n] - pre_sumsq[split]) - sum_r * sum_r / nr).max(0.0);
                let score = left_sse + right_sse;
                if best.as_ref().is_none_or(|b| score < b.score) {
                    best = Some(BestSplit {
                        score,
                        feature,
                        threshold,
                    });
                }
            }
        }
        best.filter(|b| b.score < parent_sse)
    }
}

/// Sum and sum of squares over a row subset, in the order given.
fn node_sums(y: &[f64], rows: &[usize]) -> (f64, f64) {
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for &r in rows {
        sum += y[r];
        sumsq += y[r] * y[r];
    }
    (sum, sumsq)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column(values: &[f64]) -> Vec<Vec<f64>> {
        values.iter().map(|&v| vec![v]).collect()
    }

    #[test]
    fn constant_targets_yield_single_leaf() {
        let x = column(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let y = vec![5.0; 6];
        let tree = RegressionTree::fit(&x, &y, 3, 1);
        assert_eq!(tree.nodes, vec![Node::Leaf { value: 5.0 }]);
    }

    #[test]
    fn step_function_recovers_boundary() {
        // Step at x = 5: values 0 for x <= 5, 1 above; depth 1.
        let xs: Vec<f64> = (1..=10).map(|v| v as f64).collect();
        let y: Vec<f64> = xs.iter().map(|&v| if v <= 5.0 { 0.0 } else { 1.0 }).collect();
        let tree = RegressionTree::fit(&column(&xs), &y, 1, 1);
        match &tree.nodes[0] {
            Node::Split {
                feature, threshold, ..
            } => {
                assert_eq!(*feature, 0);
                assert_eq!(*threshold, 5.5);
            }
            other => panic!("expected root split, got {other:?}"),
        }
        assert_eq!(tree.predict_row(&[4.0]), 0.0);
        assert_eq!(tree.predict_row(&[6.0]), 1.0);
    }

    #[test]
    fn min_node_equal_n_forces_leaf() {
        let xs: Vec<f64> = (1..=8).map(|v| v as f64).collect();
        let y: Vec<f64> = xs.iter().map(|&v| v * 2.0).collect();
        let tree = RegressionTree::fit(&column(&xs), &y, 3, 8);
        assert_eq!(tree.n_leaves(), 1);
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        assert_eq!(tree.predict_row(&[3.0]), mean);
    }

    #[test]
    fn depth_one_split_is_exhaustively_optimal() {
        // Compare the chosen split against a brute-force scan.
        let mut rng = crate::rng::SplitMix64::new(31);
        for _ in 0..20 {
            let n = 40;
            let xs: Vec<f64> = (0..n).map(|_| rng.next_f64() * 10.0).collect();
            let y: Vec<f64> = xs
                .iter()
                .map(|&v| (v * 0.7).sin() * 3.0 + rng.next_f64())
                .collect();
            let x = column(&xs);
            let tree = RegressionTree::fit(&x, &y, 1, 1);
            let tree_sse: f64 = {
                let preds = tree.predict(&x);
                y.iter()
                    .zip(&preds)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum()
            };
            // Brute force: every midpoint threshold, naive SSE.
            let mut sorted = xs.clone();
            sorted.sort_by(f64::total_cmp);
            sorted.dedup();
            let mut best = f64::INFINITY;
            for w in sorted.windows(2) {
                let thr = w[0] + (w[1] - w[0]) / 2.0;
                let (mut ls, mut lc, mut rs, mut rc) = (0.0, 0usize, 0.0, 0usize);
                for (xv, yv) in xs.iter().zip(&y) {
                    if *xv <= thr {
                        ls += yv;
                        lc += 1;
                    } else {
                        rs += yv;
                        rc += 1;
                    }
                }
                let (lm, rm) = (ls / lc as f64, rs / rc.max(1) as f64);
                let sse: f64 = xs
                    .iter()
                    .zip(&y)
                    .map(|(xv, yv)| {
                        let m = if *xv <= thr { lm } else { rm };
                        (yv - m) * (yv - m)
                    })
                    .sum();
                best = best.min(sse);
            }
            assert!(
                tree_sse <= best + 1e-9,
                "tree SSE {tree_sse} worse than exhaustive best {best}"
            );
        }
    }

    #[test]
    fn tie_break_prefers_lowest_feature() {
        // Two identical columns: the split must use feature 0.
        let xs: Vec<f64> = (1..=10).map(|v| v as f64).collect();
        let x: Vec<Vec<f64>> = xs.iter().map(|&v| vec![v, v]).collect();
        let y: Vec<f64> = xs.iter().map(|&v| if v <= 5.0 { 0.0 } else { 1.0 }).collect();
        let tree = RegressionTree::fit(&x, &y, 1, 1);
        assert_eq!(tree.root_feature(), Some(0));
    }

    #[test]
    fn leaf_count_bounded_by_depth() {
        let mut rng = crate::rng::SplitMix64::new(9);
        let x: Vec<Vec<f64>> = (0..64)
            .map(|_| vec![rng.next_f64(), rng.next_f64()])
            .collect();
        let y: Vec<f64> = (0..64).map(|_| rng.next_f64()).collect();
        for depth in 1..=4 {
            let tree = RegressionTree::fit(&x, &y, depth, 1);
            assert!(tree.n_leaves() <= 1 << depth);
        }
    }

    #[test]
    fn split_gains_sum_to_total_sse_drop() {
        let mut rng = crate::rng::SplitMix64::new(77);
        let x: Vec<Vec<f64>> = (0..50)
            .map(|_| vec![rng.next_f64() * 4.0, rng.next_f64()])
            .collect();
        let y: Vec<f64> = x.iter().map(|r| r[0] * 2.0 + rng.next_f64() * 0.1).collect();
        let tree = RegressionTree::fit(&x, &y, 3, 2);
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let total_sse: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
        let preds = tree.predict(&x);
        let resid_sse: f64 = y
            .iter()
            .zip(&preds)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let gain_sum: f64 = tree.split_gains().map(|(_, g)| g).sum();
        assert!(
            (total_sse - resid_sse - gain_sum).abs() < 1e-8,
            "gains {gain_sum} vs drop {}",
            total_sse - resid_sse
        );
    }
}
