//! Uniform fit / predict-probability contract over the three base learners.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::boosting::{fit_gbt, BoostedModel, GbtParams};
use crate::matrix::{expect_cols, Design};
use crate::neural::{fit_mlp, MlpConfig, MlpModel};
use crate::trees::{fit_forest, ForestModel, ForestParams};
use crate::{Error, Result};

/// Anything that maps feature rows to positive-class probabilities.
pub trait BinaryClassifier {
    fn n_features(&self) -> usize;
    fn predict_proba(&self, x: &dyn Design) -> Result<Vec<f64>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseKind {
    #[serde(rename = "rf")]
    Forest,
    Gbt,
    Mlp,
}

impl BaseKind {
    pub const ALL: [BaseKind; 3] = [BaseKind::Forest, BaseKind::Gbt, BaseKind::Mlp];

    pub fn name(self) -> &'static str {
        match self {
            BaseKind::Forest => "rf",
            BaseKind::Gbt => "gbt",
            BaseKind::Mlp => "mlp",
        }
    }

    /// Human-readable name used in report tables.
    pub fn title(self) -> &'static str {
        match self {
            BaseKind::Forest => "Random Forest",
            BaseKind::Gbt => "XGBoost",
            BaseKind::Mlp => "MLP",
        }
    }
}

impl fmt::Display for BaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BaseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rf" | "forest" => Ok(BaseKind::Forest),
            "gbt" | "xgboost" => Ok(BaseKind::Gbt),
            "mlp" => Ok(BaseKind::Mlp),
            _ => Err(Error::invalid(alloc::format!("unknown model kind '{s}'"))),
        }
    }
}

/// Base learner kind with its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaseLearnerSpec {
    #[serde(rename = "rf")]
    Forest(ForestParams),
    Gbt(GbtParams),
    Mlp(MlpConfig),
}

impl BaseLearnerSpec {
    pub fn kind(&self) -> BaseKind {
        match self {
            BaseLearnerSpec::Forest(_) => BaseKind::Forest,
            BaseLearnerSpec::Gbt(_) => BaseKind::Gbt,
            BaseLearnerSpec::Mlp(_) => BaseKind::Mlp,
        }
    }

    pub fn default_for(kind: BaseKind) -> BaseLearnerSpec {
        match kind {
            BaseKind::Forest => BaseLearnerSpec::Forest(ForestParams::default()),
            BaseKind::Gbt => BaseLearnerSpec::Gbt(GbtParams::default()),
            BaseKind::Mlp => BaseLearnerSpec::Mlp(MlpConfig::default()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            BaseLearnerSpec::Forest(p) => p.validate(),
            BaseLearnerSpec::Gbt(p) => p.validate(),
            BaseLearnerSpec::Mlp(c) => c.validate(),
        }
    }

    /// Fits a binary model. A constant target yields a [`PriorModel`].
    pub fn fit(&self, x: &dyn Design, y: &[bool], seed: u64) -> Result<FittedModel> {
        self.validate()?;
        if x.n_rows() == 0 {
            return Err(Error::invalid("cannot fit on empty input"));
        }
        if y.len() != x.n_rows() {
            return Err(Error::Shape {
                what: "target length",
                expected: x.n_rows(),
                found: y.len(),
            });
        }
        if y.iter().all(|&b| b == y[0]) {
            return Ok(FittedModel::Prior(PriorModel {
                n_features: x.n_cols(),
                probability: if y[0] { 1.0 } else { 0.0 },
            }));
        }
        Ok(match self {
            BaseLearnerSpec::Forest(p) => FittedModel::Forest(fit_forest(x, y, p, seed)?),
            BaseLearnerSpec::Gbt(p) => FittedModel::Gbt(fit_gbt(x, y, p, seed)?),
            BaseLearnerSpec::Mlp(c) => FittedModel::Mlp(fit_mlp(x, y, c, seed)?),
        })
    }
}

/// Constant predictor for a label that never varies in the training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorModel {
    pub n_features: usize,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "schema")]
pub enum FittedModel {
    #[serde(rename = "aggsense.forest.v1")]
    Forest(ForestModel),
    #[serde(rename = "aggsense.gbt.v1")]
    Gbt(BoostedModel),
    #[serde(rename = "aggsense.mlp.v1")]
    Mlp(MlpModel),
    #[serde(rename = "aggsense.prior.v1")]
    Prior(PriorModel),
}

impl BinaryClassifier for FittedModel {
    fn n_features(&self) -> usize {
        match self {
            FittedModel::Forest(m) => m.n_features,
            FittedModel::Gbt(m) => m.n_features,
            FittedModel::Mlp(m) => m.n_features(),
            FittedModel::Prior(m) => m.n_features,
        }
    }

    fn predict_proba(&self, x: &dyn Design) -> Result<Vec<f64>> {
        match self {
            FittedModel::Forest(m) => m.predict_proba(x),
            FittedModel::Gbt(m) => m.predict_proba(x),
            FittedModel::Mlp(m) => m.predict_proba(x),
            FittedModel::Prior(m) => {
                expect_cols(x, m.n_features)?;
                Ok(vec![m.probability; x.n_rows()])
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::DenseMatrix;

    #[test]
    fn constant_target_gives_prior() {
        let x = DenseMatrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        for kind in BaseKind::ALL {
            let m = BaseLearnerSpec::default_for(kind).fit(&x, &[false, false], 0).unwrap();
            assert!(matches!(m, FittedModel::Prior(ref p) if p.probability == 0.0));
            assert_eq!(m.predict_proba(&x).unwrap(), vec![0.0, 0.0]);
        }
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in BaseKind::ALL {
            assert_eq!(kind.name().parse::<BaseKind>().unwrap(), kind);
        }
    }
}
