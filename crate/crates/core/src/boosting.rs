//! Gradient-boosted trees for binary logistic loss.
//!
//! Each round fits a regression tree to the second-order expansion of the
//! loss at the current margins (`g = p - y`, `h = p(1 - p)`). A node with
//! gradient sum `G` and hessian sum `H` has leaf value
//! `-soft_threshold(G, alpha) / (H + lambda)`; a split is kept only when
//! `0.5 * [G_L²/(H_L+λ) + G_R²/(H_R+λ) - G²/(H+λ)]` is positive and both
//! children carry hessian mass of at least [`MIN_CHILD_WEIGHT`]. Rows and
//! columns are subsampled per tree, columns again per level and per node.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::grow::{self, FeaturePicker, SortedColumns, SplitRule};
use crate::math::{logit, sigmoid, softplus};
use crate::matrix::{expect_cols, Design};
use crate::rng::{self, Rng};
use crate::{Error, Result};

pub const MIN_CHILD_WEIGHT: f64 = 1.0;
/// Bound on the initial margin so single-class priors stay finite.
pub const MAX_BASE_MARGIN: f64 = 15.0;
/// Margins are clipped to this before the logistic link so probabilities
/// stay strictly inside (0, 1).
const PROBA_MARGIN_CLIP: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbtParams {
    pub n_estimators: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub subsample: f64,
    pub colsample_bytree: f64,
    pub colsample_bylevel: f64,
    pub colsample_bynode: f64,
    /// L1 penalty on leaf values.
    pub alpha: f64,
    /// L2 penalty on leaf values.
    pub lambda: f64,
}

impl Default for GbtParams {
    fn default() -> Self {
        GbtParams {
            n_estimators: 100,
            max_depth: 6,
            learning_rate: 0.3,
            subsample: 1.0,
            colsample_bytree: 1.0,
            colsample_bylevel: 1.0,
            colsample_bynode: 1.0,
            alpha: 0.0,
            lambda: 1.0,
        }
    }
}

impl GbtParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_estimators == 0 {
            return Err(Error::config("n_estimators", "must be at least 1"));
        }
        if self.max_depth == 0 {
            return Err(Error::config("max_depth", "must be at least 1"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::config("learning_rate", "must be positive"));
        }
        for (key, v) in [
            ("subsample", self.subsample),
            ("colsample_bytree", self.colsample_bytree),
            ("colsample_bylevel", self.colsample_bylevel),
            ("colsample_bynode", self.colsample_bynode),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::config(key, "must lie in (0, 1]"));
            }
        }
        for (key, v) in [("alpha", self.alpha), ("lambda", self.lambda)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(key, "must be nonnegative"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegressionNode {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<RegressionNode>,
        right: Box<RegressionNode>,
    },
}

impl RegressionNode {
    pub fn predict_row(&self, x: &dyn Design, row: usize) -> f64 {
        let mut node = self;
        loop {
            match node {
                RegressionNode::Leaf { value } => return *value,
                RegressionNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x.value(row, *feature) <= *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            RegressionNode::Leaf { .. } => 0,
            RegressionNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedModel {
    pub n_features: usize,
    pub params: GbtParams,
    pub seed: u64,
    pub base_margin: f64,
    /// Raw leaf values; predictions scale them by the learning rate.
    pub trees: Vec<RegressionNode>,
}

/// `sign(g) * max(|g| - alpha, 0)`.
pub fn soft_threshold(g: f64, alpha: f64) -> f64 {
    if g > alpha {
        g - alpha
    } else if g < -alpha {
        g + alpha
    } else {
        0.0
    }
}

pub fn leaf_value(grad_sum: f64, hess_sum: f64, alpha: f64, lambda: f64) -> f64 {
    -soft_threshold(grad_sum, alpha) / (hess_sum + lambda)
}

pub fn split_gain(left: (f64, f64), right: (f64, f64), lambda: f64) -> f64 {
    let score = |g: f64, h: f64| g * g / (h + lambda);
    let (g, h) = (left.0 + right.0, left.1 + right.1);
    0.5 * (score(left.0, left.1) + score(right.0, right.1) - score(g, h))
}

/// Mean logistic loss of margins against labels.
pub fn log_loss(margins: &[f64], y: &[bool]) -> f64 {
    let total: f64 = margins
        .iter()
        .zip(y)
        .map(|(&m, &label)| if label { softplus(-m) } else { softplus(m) })
        .sum();
    total / margins.len().max(1) as f64
}

#[derive(Debug, Clone, Copy, Default)]
struct GradStats {
    g: f64,
    h: f64,
    count: u64,
}

struct GradRule<'a> {
    grad: &'a [f64],
    hess: &'a [f64],
    lambda: f64,
}

impl SplitRule for GradRule<'_> {
    type Stats = GradStats;

    #[inline]
    fn add_row(&self, acc: &mut GradStats, row: usize) {
        acc.g += self.grad[row];
        acc.h += self.hess[row];
        acc.count += 1;
    }

    fn merge(acc: &mut GradStats, other: &GradStats) {
        acc.g += other.g;
        acc.h += other.h;
        acc.count += other.count;
    }

    fn minus(total: &GradStats, part: &GradStats) -> GradStats {
        GradStats {
            g: total.g - part.g,
            h: total.h - part.h,
            count: total.count - part.count,
        }
    }

    fn count(s: &GradStats) -> u64 {
        s.count
    }

    fn splittable(&self, s: &GradStats) -> bool {
        s.count >= 2 && s.h >= 2.0 * MIN_CHILD_WEIGHT
    }

    fn gain(&self, _parent: &GradStats, left: &GradStats, right: &GradStats) -> Option<f64> {
        if left.h < MIN_CHILD_WEIGHT || right.h < MIN_CHILD_WEIGHT {
            return None;
        }
        let gain = split_gain((left.g, left.h), (right.g, right.h), self.lambda);
        (gain > 0.0).then_some(gain)
    }
}

fn sample_count(fraction: f64, of: usize) -> usize {
    (libm::round(fraction * of as f64) as usize).clamp(1, of.max(1))
}

/// Per-tree, per-level and per-node column sampling.
struct ColumnSampler<'a> {
    rng: &'a mut Rng,
    tree: Vec<usize>,
    level: Vec<usize>,
    bylevel: f64,
    bynode: f64,
}

impl FeaturePicker for ColumnSampler<'_> {
    fn begin_level(&mut self, _depth: usize) {
        let k = sample_count(self.bylevel, self.tree.len());
        self.level = grow::sample_sorted(self.rng, &self.tree, k);
    }

    fn node_features(&mut self) -> Vec<usize> {
        let k = sample_count(self.bynode, self.level.len());
        grow::sample_sorted(self.rng, &self.level, k)
    }
}

pub fn fit_gbt(x: &dyn Design, y: &[bool], params: &GbtParams, seed: u64) -> Result<BoostedModel> {
    params.validate()?;
    let n = x.n_rows();
    if n == 0 || x.n_cols() == 0 {
        return Err(Error::invalid("cannot fit on empty input"));
    }
    if y.len() != n {
        return Err(Error::Shape {
            what: "target length",
            expected: n,
            found: y.len(),
        });
    }
    let positives = y.iter().filter(|&&b| b).count();
    let rate = positives as f64 / n as f64;
    let base_margin = if positives == 0 {
        -MAX_BASE_MARGIN
    } else if positives == n {
        MAX_BASE_MARGIN
    } else {
        logit(rate).clamp(-MAX_BASE_MARGIN, MAX_BASE_MARGIN)
    };
    let mut model = BoostedModel {
        n_features: x.n_cols(),
        params: *params,
        seed,
        base_margin,
        trees: Vec::new(),
    };
    if positives == 0 || positives == n {
        return Ok(model);
    }

    let sorted = SortedColumns::new(x)?;
    let all_cols: Vec<usize> = (0..x.n_cols()).collect();
    let mut margins = vec![base_margin; n];
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut include = vec![false; n];
    let n_rows = sample_count(params.subsample, n);

    for round in 0..params.n_estimators {
        let mut rng = rng::substream(seed, round as u64);
        for r in 0..n {
            let p = sigmoid(margins[r]);
            grad[r] = p - f64::from(u8::from(y[r]));
            hess[r] = p * (1.0 - p);
        }
        if n_rows == n {
            include.fill(true);
        } else {
            include.fill(false);
            for r in rand::seq::index::sample(&mut rng, n, n_rows) {
                include[r] = true;
            }
        }
        let tree_cols = grow::sample_sorted(
            &mut rng,
            &all_cols,
            sample_count(params.colsample_bytree, all_cols.len()),
        );
        let mut picker = ColumnSampler {
            rng: &mut rng,
            tree: tree_cols,
            level: Vec::new(),
            bylevel: params.colsample_bylevel,
            bynode: params.colsample_bynode,
        };
        let rule = GradRule {
            grad: &grad,
            hess: &hess,
            lambda: params.lambda,
        };
        let arena = grow::grow(x, &sorted, &include, &rule, params.max_depth, &mut picker);
        let tree = grow::build(
            &arena,
            0,
            &|s: &GradStats| RegressionNode::Leaf {
                value: leaf_value(s.g, s.h, params.alpha, params.lambda),
            },
            &|feature, threshold, left, right| RegressionNode::Split {
                feature,
                threshold,
                left: Box::new(left),
                right: Box::new(right),
            },
        );
        for (r, m) in margins.iter_mut().enumerate() {
            *m += params.learning_rate * tree.predict_row(x, r);
        }
        model.trees.push(tree);
    }
    Ok(model)
}

impl BoostedModel {
    /// `base_margin + learning_rate * sum of leaf values`, per row.
    pub fn predict_margin(&self, x: &dyn Design) -> Result<Vec<f64>> {
        expect_cols(x, self.n_features)?;
        let eta = self.params.learning_rate;
        Ok((0..x.n_rows())
            .map(|r| {
                let sum: f64 = self.trees.iter().map(|t| t.predict_row(x, r)).sum();
                self.base_margin + eta * sum
            })
            .collect())
    }

    pub fn predict_proba(&self, x: &dyn Design) -> Result<Vec<f64>> {
        Ok(self
            .predict_margin(x)?
            .into_iter()
            .map(|m| sigmoid(m.clamp(-PROBA_MARGIN_CLIP, PROBA_MARGIN_CLIP)))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::DenseMatrix;

    fn toy() -> (DenseMatrix, Vec<bool>) {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![i as f64, ((i * 17) % 40) as f64])
            .collect();
        let y = (0..40).map(|i| i >= 25).collect();
        (DenseMatrix::from_rows(&rows).unwrap(), y)
    }

    #[test]
    fn soft_threshold_cases() {
        assert_eq!(soft_threshold(0.5, 1.0), 0.0);
        assert_eq!(soft_threshold(-1.0, 1.0), 0.0);
        assert_eq!(soft_threshold(3.0, 1.0), 2.0);
        assert_eq!(soft_threshold(-3.0, 1.0), -2.0);
        assert_eq!(leaf_value(0.7, 5.0, 0.8, 1.0), 0.0);
        assert_eq!(leaf_value(-2.0, 3.0, 0.0, 1.0), 0.5);
    }

    #[test]
    fn all_negative_labels_grow_no_trees() {
        let (x, _) = toy();
        let model = fit_gbt(&x, &[false; 40], &GbtParams::default(), 0).unwrap();
        assert!(model.trees.is_empty());
        assert_eq!(model.base_margin, -MAX_BASE_MARGIN);
        assert!(model.predict_proba(&x).unwrap().iter().all(|&p| p < 0.5 && p > 0.0));
    }

    #[test]
    fn zero_trees_balanced_prior_is_one_half() {
        let model = BoostedModel {
            n_features: 1,
            params: GbtParams::default(),
            seed: 0,
            base_margin: 0.0,
            trees: Vec::new(),
        };
        let x = DenseMatrix::from_rows(&[vec![1.0], vec![-4.0]]).unwrap();
        assert_eq!(model.predict_proba(&x).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn hand_built_stump() {
        let stump = RegressionNode::Split {
            feature: 0,
            threshold: 0.0,
            left: Box::new(RegressionNode::Leaf { value: -1.0 }),
            right: Box::new(RegressionNode::Leaf { value: 1.0 }),
        };
        let base = 0.25;
        let model = BoostedModel {
            n_features: 1,
            params: GbtParams {
                learning_rate: 0.5,
                ..GbtParams::default()
            },
            seed: 0,
            base_margin: base,
            trees: alloc::vec![stump],
        };
        let x = DenseMatrix::from_rows(&[vec![-1.0], vec![1.0]]).unwrap();
        let p = model.predict_proba(&x).unwrap();
        let expect = |m: f64| 1.0 / (1.0 + (-m).exp());
        assert!((p[0] - expect(base - 0.5)).abs() < 1e-15);
        assert!((p[1] - expect(base + 0.5)).abs() < 1e-15);
    }

    #[test]
    fn deterministic_with_subsampling() {
        let (x, y) = toy();
        let params = GbtParams {
            n_estimators: 10,
            subsample: 0.5,
            colsample_bytree: 0.5,
            max_depth: 3,
            ..GbtParams::default()
        };
        assert_eq!(fit_gbt(&x, &y, &params, 4).unwrap(), fit_gbt(&x, &y, &params, 4).unwrap());
    }

    #[test]
    fn rejects_bad_params() {
        let bad = GbtParams {
            subsample: 0.0,
            ..GbtParams::default()
        };
        assert!(bad.validate().is_err());
        let bad = GbtParams {
            learning_rate: -0.1,
            ..GbtParams::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let (x, y) = toy();
        let model = fit_gbt(&x, &y, &GbtParams::default(), 0).unwrap();
        let narrow = DenseMatrix::from_rows(&[vec![1.0]]).unwrap();
        assert!(model.predict_margin(&narrow).is_err());
    }
}
