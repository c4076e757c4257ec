//! CART classification trees and random forests for binary targets.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::grow::{self, FeaturePicker, SortedColumns, SplitRule};
use crate::matrix::{expect_cols, Design};
use crate::rng::{self, Rng};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Gini,
    Entropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    /// Every feature is a candidate at every node.
    Auto,
    /// `ceil(sqrt(p))` features drawn per node.
    Sqrt,
}

impl MaxFeatures {
    pub fn count(self, n_features: usize) -> usize {
        match self {
            MaxFeatures::Auto => n_features,
            MaxFeatures::Sqrt => (libm::ceil(libm::sqrt(n_features as f64)) as usize).max(1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassWeight {
    None,
    /// Each class weighted by `total / (2 * class_total)` on the fit data.
    Balanced,
}

/// Impurity of a node holding `weights = [negative, positive]`.
pub fn impurity(weights: [f64; 2], criterion: Criterion) -> f64 {
    let total = weights[0] + weights[1];
    if total <= 0.0 {
        return 0.0;
    }
    match criterion {
        Criterion::Gini => {
            let (p0, p1) = (weights[0] / total, weights[1] / total);
            1.0 - (p0 * p0 + p1 * p1)
        }
        Criterion::Entropy => weights
            .iter()
            .map(|w| w / total)
            .filter(|p| *p > 0.0)
            .map(|p| -p * libm::log2(p))
            .sum(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        probability: f64,
        support: u64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn predict_row(&self, x: &dyn Design, row: usize) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { probability, .. } => return *probability,
                TreeNode::Split {
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
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn n_leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.n_leaves() + right.n_leaves(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub criterion: Criterion,
    pub max_depth: usize,
    pub max_features: MaxFeatures,
    pub class_weight: ClassWeight,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            criterion: Criterion::Gini,
            max_depth: 8,
            max_features: MaxFeatures::Auto,
            class_weight: ClassWeight::None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct ClassStats {
    w: [f64; 2],
    count: u64,
}

struct ImpurityRule<'a> {
    y: &'a [bool],
    weight: &'a [f64],
    multiplicity: &'a [u32],
    criterion: Criterion,
}

impl ImpurityRule<'_> {
    fn weighted(&self, s: &ClassStats) -> f64 {
        (s.w[0] + s.w[1]) * impurity(s.w, self.criterion)
    }
}

impl SplitRule for ImpurityRule<'_> {
    type Stats = ClassStats;

    #[inline]
    fn add_row(&self, acc: &mut ClassStats, row: usize) {
        acc.w[usize::from(self.y[row])] += self.weight[row];
        acc.count += u64::from(self.multiplicity[row]);
    }

    fn merge(acc: &mut ClassStats, other: &ClassStats) {
        acc.w[0] += other.w[0];
        acc.w[1] += other.w[1];
        acc.count += other.count;
    }

    fn minus(total: &ClassStats, part: &ClassStats) -> ClassStats {
        ClassStats {
            w: [total.w[0] - part.w[0], total.w[1] - part.w[1]],
            count: total.count - part.count,
        }
    }

    fn count(s: &ClassStats) -> u64 {
        s.count
    }

    fn splittable(&self, s: &ClassStats) -> bool {
        s.count >= 2 && s.w[0] > 0.0 && s.w[1] > 0.0
    }

    fn gain(&self, parent: &ClassStats, left: &ClassStats, right: &ClassStats) -> Option<f64> {
        let decrease = self.weighted(parent) - self.weighted(left) - self.weighted(right);
        let total = parent.w[0] + parent.w[1];
        (decrease > 1e-12 * total).then_some(decrease)
    }
}

struct NodeSampler<'a> {
    rng: &'a mut Rng,
    all: Vec<usize>,
    k: usize,
}

impl FeaturePicker for NodeSampler<'_> {
    fn begin_level(&mut self, _depth: usize) {}

    fn node_features(&mut self) -> Vec<usize> {
        grow::sample_sorted(self.rng, &self.all, self.k)
    }
}

fn check_fit_inputs(x: &dyn Design, y: &[bool]) -> Result<()> {
    if x.n_rows() == 0 || x.n_cols() == 0 {
        return Err(Error::invalid("cannot fit on empty input"));
    }
    if y.len() != x.n_rows() {
        return Err(Error::Shape {
            what: "target length",
            expected: x.n_rows(),
            found: y.len(),
        });
    }
    Ok(())
}

/// Per-class multipliers for `ClassWeight::Balanced`, from per-row weights.
fn balanced_multipliers(y: &[bool], base: &[f64]) -> [f64; 2] {
    let mut sums = [0.0; 2];
    for (&label, &w) in y.iter().zip(base) {
        sums[usize::from(label)] += w;
    }
    let total = sums[0] + sums[1];
    sums.map(|s| if s > 0.0 { total / (2.0 * s) } else { 0.0 })
}

fn grow_classifier(
    x: &dyn Design,
    sorted: &SortedColumns,
    y: &[bool],
    weight: &[f64],
    multiplicity: &[u32],
    params: &TreeParams,
    rng: &mut Rng,
) -> TreeNode {
    let include: Vec<bool> = multiplicity.iter().map(|&m| m > 0).collect();
    let rule = ImpurityRule {
        y,
        weight,
        multiplicity,
        criterion: params.criterion,
    };
    let mut picker = NodeSampler {
        rng,
        all: (0..x.n_cols()).collect(),
        k: params.max_features.count(x.n_cols()),
    };
    let arena = grow::grow(x, sorted, &include, &rule, params.max_depth, &mut picker);
    grow::build(
        &arena,
        0,
        &|s: &ClassStats| TreeNode::Leaf {
            probability: {
                let t = s.w[0] + s.w[1];
                if t > 0.0 {
                    (s.w[1] / t).clamp(0.0, 1.0)
                } else {
                    0.0
                }
            },
            support: s.count,
        },
        &|feature, threshold, left, right| TreeNode::Split {
            feature,
            threshold,
            left: Box::new(left),
            right: Box::new(right),
        },
    )
}

/// Fits a single tree. Rows with zero sample weight are left out.
pub fn fit_tree(
    x: &dyn Design,
    y: &[bool],
    sample_weights: Option<&[f64]>,
    params: &TreeParams,
    seed: u64,
) -> Result<TreeNode> {
    check_fit_inputs(x, y)?;
    let n = x.n_rows();
    let base = match sample_weights {
        Some(w) if w.len() != n => {
            return Err(Error::Shape {
                what: "sample weights",
                expected: n,
                found: w.len(),
            })
        }
        Some(w) if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) => {
            return Err(Error::invalid("sample weights must be nonnegative"))
        }
        Some(w) => w.to_vec(),
        None => vec![1.0; n],
    };
    let weight = match params.class_weight {
        ClassWeight::None => base,
        ClassWeight::Balanced => {
            let m = balanced_multipliers(y, &base);
            y.iter()
                .zip(&base)
                .map(|(&l, &w)| w * m[usize::from(l)])
                .collect()
        }
    };
    let multiplicity: Vec<u32> = weight.iter().map(|&w| u32::from(w > 0.0)).collect();
    if multiplicity.iter().all(|&m| m == 0) {
        return Err(Error::invalid("all sample weights are zero"));
    }
    let sorted = SortedColumns::new(x)?;
    let mut rng = rng::from_seed(seed);
    Ok(grow_classifier(
        x,
        &sorted,
        y,
        &weight,
        &multiplicity,
        params,
        &mut rng,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_estimators: usize,
    pub criterion: Criterion,
    pub max_depth: usize,
    pub max_features: MaxFeatures,
    pub class_weight: ClassWeight,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_estimators: 100,
            criterion: Criterion::Gini,
            max_depth: 8,
            max_features: MaxFeatures::Sqrt,
            class_weight: ClassWeight::None,
        }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_estimators == 0 {
            return Err(Error::config("n_estimators", "must be at least 1"));
        }
        if self.max_depth == 0 {
            return Err(Error::config("max_depth", "must be at least 1"));
        }
        Ok(())
    }

    fn tree_params(&self) -> TreeParams {
        TreeParams {
            criterion: self.criterion,
            max_depth: self.max_depth,
            max_features: self.max_features,
            class_weight: self.class_weight,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub n_features: usize,
    pub params: ForestParams,
    pub seed: u64,
    pub trees: Vec<TreeNode>,
}

/// Fits `n_estimators` trees, each on a same-size bootstrap resample drawn
/// from its own substream of `seed`.
pub fn fit_forest(
    x: &dyn Design,
    y: &[bool],
    params: &ForestParams,
    seed: u64,
) -> Result<ForestModel> {
    params.validate()?;
    check_fit_inputs(x, y)?;
    let n = x.n_rows();
    let class_mult = match params.class_weight {
        ClassWeight::None => [1.0, 1.0],
        ClassWeight::Balanced => balanced_multipliers(y, &vec![1.0; n]),
    };
    let sorted = SortedColumns::new(x)?;
    let tree_params = params.tree_params();
    let mut counts = vec![0u32; n];
    let mut weight = vec![0.0; n];
    let mut trees = Vec::with_capacity(params.n_estimators);
    for t in 0..params.n_estimators {
        let mut rng = rng::substream(seed, t as u64);
        counts.fill(0);
        for _ in 0..n {
            counts[rand::Rng::gen_range(&mut rng, 0..n)] += 1;
        }
        for r in 0..n {
            weight[r] = f64::from(counts[r]) * class_mult[usize::from(y[r])];
        }
        trees.push(grow_classifier(
            x,
            &sorted,
            y,
            &weight,
            &counts,
            &tree_params,
            &mut rng,
        ));
    }
    Ok(ForestModel {
        n_features: x.n_cols(),
        params: *params,
        seed,
        trees,
    })
}

impl ForestModel {
    /// Unweighted mean of the member trees' leaf probabilities.
    pub fn predict_proba(&self, x: &dyn Design) -> Result<Vec<f64>> {
        if self.trees.is_empty() {
            return Err(Error::NotFitted);
        }
        expect_cols(x, self.n_features)?;
        let k = self.trees.len() as f64;
        Ok((0..x.n_rows())
            .map(|r| self.trees.iter().map(|t| t.predict_row(x, r)).sum::<f64>() / k)
            .collect())
    }
}
