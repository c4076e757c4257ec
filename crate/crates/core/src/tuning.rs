//! Random hyperparameter search scored by validation F1-micro.
//!
//! Every dimension of a [`SearchSpace`] is a finite list of candidate values
//! and a point is drawn by picking one entry per dimension uniformly.
//! Continuous ranges are discretized on grids fine enough to contain the
//! published tuned values exactly.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::boosting::GbtParams;
use crate::dataset::{Split, WindowedDataset};
use crate::eval::f1_micro;
use crate::fixture::Fixture;
use crate::learner::{BaseKind, BaseLearnerSpec};
use crate::matrix::Design;
use crate::multilabel::{self, MetaMethod};
use crate::neural::{Activation, MlpConfig, Optimizer};
use crate::rng::{derive_seed, from_seed, Rng};
use crate::trees::{ClassWeight, Criterion, ForestParams, MaxFeatures};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestSpace {
    pub n_estimators: Vec<usize>,
    pub criterion: Vec<Criterion>,
    pub max_depth: Vec<usize>,
    pub max_features: Vec<MaxFeatures>,
    pub class_weight: Vec<ClassWeight>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtSpace {
    pub n_estimators: Vec<usize>,
    pub max_depth: Vec<usize>,
    pub learning_rate: Vec<f64>,
    pub subsample: Vec<f64>,
    pub colsample_bytree: Vec<f64>,
    pub colsample_bylevel: Vec<f64>,
    pub colsample_bynode: Vec<f64>,
    pub alpha: Vec<f64>,
    pub lambda: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpSpace {
    pub hidden_layers: Vec<usize>,
    /// Units per hidden layer; all layers of a sampled network share it.
    pub hidden_units: Vec<usize>,
    pub activation: Vec<Activation>,
    pub epochs: Vec<usize>,
    pub optimizer: Vec<Optimizer>,
    pub learning_rate: Vec<f64>,
    pub batch_size: Vec<usize>,
    pub l2: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SearchSpace {
    #[serde(rename = "rf")]
    Forest(ForestSpace),
    Gbt(GbtSpace),
    Mlp(MlpSpace),
}

fn stepped(lo: usize, hi: usize, step: usize) -> Vec<usize> {
    (lo..=hi).step_by(step).collect()
}

/// `k / den` for `k` in `lo..=hi`, each value the correctly rounded quotient.
fn fractions(lo: u32, hi: u32, den: u32) -> Vec<f64> {
    (lo..=hi).map(|k| f64::from(k) / f64::from(den)).collect()
}

/// One-significant-digit values `m * 10^e` from 1e-4 to 1e-1.
fn log_grid() -> Vec<f64> {
    let mut out = Vec::new();
    for den in [10_000.0, 1_000.0, 100.0] {
        for m in 1..=9 {
            out.push(f64::from(m) / den);
        }
    }
    out.push(0.1);
    out
}

impl SearchSpace {
    pub fn default_for(kind: BaseKind) -> SearchSpace {
        match kind {
            BaseKind::Forest => SearchSpace::Forest(ForestSpace {
                n_estimators: stepped(25, 500, 25),
                criterion: vec![Criterion::Gini, Criterion::Entropy],
                max_depth: stepped(3, 10, 1),
                max_features: vec![MaxFeatures::Auto, MaxFeatures::Sqrt],
                class_weight: vec![ClassWeight::None, ClassWeight::Balanced],
            }),
            BaseKind::Gbt => SearchSpace::Gbt(GbtSpace {
                n_estimators: stepped(25, 500, 25),
                max_depth: stepped(3, 10, 1),
                learning_rate: fractions(1, 10, 100),
                subsample: fractions(1, 10, 10),
                colsample_bytree: fractions(1, 10, 10),
                colsample_bylevel: fractions(1, 10, 10),
                colsample_bynode: fractions(1, 10, 10),
                alpha: log_grid(),
                lambda: log_grid(),
            }),
            BaseKind::Mlp => SearchSpace::Mlp(MlpSpace {
                hidden_layers: vec![1, 2, 3],
                hidden_units: vec![16, 32, 64],
                activation: vec![Activation::Tanh],
                epochs: stepped(25, 200, 25),
                optimizer: vec![Optimizer::Sgd, Optimizer::Adam],
                learning_rate: fractions(1, 10, 100),
                batch_size: vec![32, 128, 256],
                l2: log_grid(),
            }),
        }
    }

    pub fn kind(&self) -> BaseKind {
        match self {
            SearchSpace::Forest(_) => BaseKind::Forest,
            SearchSpace::Gbt(_) => BaseKind::Gbt,
            SearchSpace::Mlp(_) => BaseKind::Mlp,
        }
    }

    /// Number of distinct points.
    pub fn size(&self) -> u128 {
        fn n<T>(v: &[T]) -> u128 {
            v.len() as u128
        }
        match self {
            SearchSpace::Forest(s) => {
                n(&s.n_estimators) * n(&s.criterion) * n(&s.max_depth) * n(&s.max_features) * n(&s.class_weight)
            }
            SearchSpace::Gbt(s) => {
                n(&s.n_estimators)
                    * n(&s.max_depth)
                    * n(&s.learning_rate)
                    * n(&s.subsample)
                    * n(&s.colsample_bytree)
                    * n(&s.colsample_bylevel)
                    * n(&s.colsample_bynode)
                    * n(&s.alpha)
                    * n(&s.lambda)
            }
            SearchSpace::Mlp(s) => {
                n(&s.hidden_layers)
                    * n(&s.hidden_units)
                    * n(&s.activation)
                    * n(&s.epochs)
                    * n(&s.optimizer)
                    * n(&s.learning_rate)
                    * n(&s.batch_size)
                    * n(&s.l2)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.size() == 0 {
            return Err(Error::config("search_space", "every dimension needs at least one value"));
        }
        Ok(())
    }

    pub fn sample(&self, rng: &mut Rng) -> BaseLearnerSpec {
        fn pick<T: Clone>(v: &[T], rng: &mut Rng) -> T {
            v.choose(rng).expect("validated nonempty").clone()
        }
        match self {
            SearchSpace::Forest(s) => BaseLearnerSpec::Forest(ForestParams {
                n_estimators: pick(&s.n_estimators, rng),
                criterion: pick(&s.criterion, rng),
                max_depth: pick(&s.max_depth, rng),
                max_features: pick(&s.max_features, rng),
                class_weight: pick(&s.class_weight, rng),
            }),
            SearchSpace::Gbt(s) => BaseLearnerSpec::Gbt(GbtParams {
                n_estimators: pick(&s.n_estimators, rng),
                max_depth: pick(&s.max_depth, rng),
                learning_rate: pick(&s.learning_rate, rng),
                subsample: pick(&s.subsample, rng),
                colsample_bytree: pick(&s.colsample_bytree, rng),
                colsample_bylevel: pick(&s.colsample_bylevel, rng),
                colsample_bynode: pick(&s.colsample_bynode, rng),
                alpha: pick(&s.alpha, rng),
                lambda: pick(&s.lambda, rng),
            }),
            SearchSpace::Mlp(s) => {
                let layers = pick(&s.hidden_layers, rng);
                let units = pick(&s.hidden_units, rng);
                BaseLearnerSpec::Mlp(MlpConfig {
                    hidden: vec![units; layers],
                    activation: pick(&s.activation, rng),
                    epochs: pick(&s.epochs, rng),
                    optimizer: pick(&s.optimizer, rng),
                    learning_rate: pick(&s.learning_rate, rng),
                    batch_size: pick(&s.batch_size, rng),
                    l2: pick(&s.l2, rng),
                    standardize: true,
                })
            }
        }
    }

    /// Whether `spec` is one of the points [`SearchSpace::sample`] can return.
    pub fn contains(&self, spec: &BaseLearnerSpec) -> bool {
        match (self, spec) {
            (SearchSpace::Forest(s), BaseLearnerSpec::Forest(p)) => {
                s.n_estimators.contains(&p.n_estimators)
                    && s.criterion.contains(&p.criterion)
                    && s.max_depth.contains(&p.max_depth)
                    && s.max_features.contains(&p.max_features)
                    && s.class_weight.contains(&p.class_weight)
            }
            (SearchSpace::Gbt(s), BaseLearnerSpec::Gbt(p)) => {
                s.n_estimators.contains(&p.n_estimators)
                    && s.max_depth.contains(&p.max_depth)
                    && s.learning_rate.contains(&p.learning_rate)
                    && s.subsample.contains(&p.subsample)
                    && s.colsample_bytree.contains(&p.colsample_bytree)
                    && s.colsample_bylevel.contains(&p.colsample_bylevel)
                    && s.colsample_bynode.contains(&p.colsample_bynode)
                    && s.alpha.contains(&p.alpha)
                    && s.lambda.contains(&p.lambda)
            }
            (SearchSpace::Mlp(s), BaseLearnerSpec::Mlp(c)) => {
                let uniform = c.hidden.windows(2).all(|w| w[0] == w[1]);
                uniform
                    && s.hidden_layers.contains(&c.hidden.len())
                    && c.hidden.first().is_some_and(|u| s.hidden_units.contains(u))
                    && s.activation.contains(&c.activation)
                    && s.epochs.contains(&c.epochs)
                    && s.optimizer.contains(&c.optimizer)
                    && s.learning_rate.contains(&c.learning_rate)
                    && s.batch_size.contains(&c.batch_size)
                    && s.l2.contains(&c.l2)
                    && c.standardize
            }
            _ => false,
        }
    }
}

/// Tuned hyperparameters published for chain models at window sizes 60, 120,
/// 240 and 480. Boosting entries that used the DART booster are mapped to the
/// plain tree booster with the same parameters.
pub fn published_spec(kind: BaseKind, window: usize) -> Option<BaseLearnerSpec> {
    let col = [60, 120, 240, 480].iter().position(|&w| w == window)?;
    Some(match kind {
        BaseKind::Forest => BaseLearnerSpec::Forest(ForestParams {
            n_estimators: [325, 225, 475, 375][col],
            criterion: [Criterion::Gini, Criterion::Gini, Criterion::Gini, Criterion::Entropy][col],
            max_depth: [8, 8, 9, 9][col],
            max_features: [MaxFeatures::Auto, MaxFeatures::Auto, MaxFeatures::Sqrt, MaxFeatures::Sqrt][col],
            class_weight: ClassWeight::Balanced,
        }),
        BaseKind::Gbt => BaseLearnerSpec::Gbt(GbtParams {
            n_estimators: [275, 100, 275, 125][col],
            max_depth: [3, 10, 3, 6][col],
            learning_rate: [0.05, 0.03, 0.05, 0.03][col],
            subsample: [0.4, 0.1, 0.7, 0.2][col],
            colsample_bytree: [0.3, 0.7, 0.7, 0.7][col],
            colsample_bylevel: [0.8, 0.4, 0.5, 0.6][col],
            colsample_bynode: [0.9, 0.7, 0.6, 0.8][col],
            alpha: [0.03, 0.06, 0.02, 0.03][col],
            lambda: [0.05, 0.05, 0.02, 0.0006][col],
        }),
        BaseKind::Mlp => BaseLearnerSpec::Mlp(MlpConfig {
            hidden: vec![[32, 32, 16, 64][col]; [2, 2, 3, 2][col]],
            activation: Activation::Tanh,
            epochs: [100, 75, 175, 125][col],
            optimizer: [Optimizer::Adam, Optimizer::Sgd, Optimizer::Sgd, Optimizer::Sgd][col],
            learning_rate: [0.01, 0.05, 0.09, 0.04][col],
            batch_size: [256, 256, 128, 32][col],
            l2: [0.04, 0.07, 0.06, 0.01][col],
            standardize: true,
        }),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: usize,
    pub spec: BaseLearnerSpec,
    /// Validation F1-micro; 0 when the fit failed.
    pub val_f1_micro: f64,
    pub fit_seconds: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best_index: usize,
    pub trials: Vec<TrialRecord>,
}

impl SearchResult {
    pub fn best(&self) -> &TrialRecord {
        &self.trials[self.best_index]
    }
}

pub struct SearchRequest<'a> {
    pub space: &'a SearchSpace,
    pub method: MetaMethod,
    pub label_order: &'a [Fixture],
    pub budget: usize,
    pub seed: u64,
}

/// Samples `budget` configurations, fits each on the training block and
/// scores it on the validation block. Trial `i` draws its configuration and
/// fit seed from streams of `seed` keyed by `i`, so a larger budget extends
/// a smaller one. `clock` returns seconds and is only used for the trial log.
pub fn random_search(
    req: &SearchRequest<'_>,
    ds: &WindowedDataset,
    mut clock: impl FnMut() -> f64,
    mut on_trial: impl FnMut(&TrialRecord),
) -> Result<SearchResult> {
    if req.budget == 0 {
        return Err(Error::config("budget", "must be at least 1"));
    }
    req.space.validate()?;
    let (xv, yv) = ds.part(Split::Val)?;
    if xv.n_rows() == 0 {
        return Err(Error::invalid("validation split is empty"));
    }
    let mut trials: Vec<TrialRecord> = Vec::with_capacity(req.budget);
    let mut best_index = 0;
    for index in 0..req.budget {
        let trial_seed = derive_seed(req.seed, index as u64);
        let spec = req.space.sample(&mut from_seed(derive_seed(trial_seed, 0)));
        let seed = derive_seed(trial_seed, 1);
        let start = clock();
        let outcome = multilabel::fit(ds, req.method, &spec, req.label_order, seed)
            .and_then(|meta| meta.predict(&xv))
            .and_then(|pred| f1_micro(&pred.labels, yv));
        let fit_seconds = clock() - start;
        let (score, error) = match outcome {
            Ok(f1) => (f1, None),
            Err(e) if e.is_training_failure() => (0.0, Some(e.to_string())),
            Err(e) => return Err(e),
        };
        let record = TrialRecord {
            index,
            spec,
            val_f1_micro: score,
            fit_seconds,
            seed,
            error,
        };
        on_trial(&record);
        if trials.is_empty() || record.val_f1_micro > trials[best_index].val_f1_micro {
            best_index = index;
        }
        trials.push(record);
    }
    Ok(SearchResult { best_index, trials })
}
